//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Generic over [`Scalar`]: with `f64` pivots and reduced costs use a small
//! tolerance; with [`Rational`] every decision is exact. The float path
//! verifies its own answer and falls back to exact pivoting for small
//! problems when it detects a breakdown.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{to_rational, Backend, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub rel: Relation,
    pub rhs: T,
}

/// `sense cᵀx` subject to dense rows and per-variable bounds (`None` = infinite).
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<T> {
    pub sense: Sense,
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
    pub bounds: Vec<(Option<T>, Option<T>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Objective value at `primal` (meaningful when optimal).
    pub value: T,
    pub primal: Vec<T>,
    /// One multiplier per constraint row, in the sign convention of the problem's sense:
    /// at optimality `value = Σ rhsᵢ·dualᵢ + Σⱼ reducedⱼ·xⱼ`.
    pub dual: Vec<T>,
    /// `cⱼ − (Aᵀ dual)ⱼ` per variable.
    pub reduced_costs: Vec<T>,
    pub iterations: usize,
    /// Phase-1 sum of artificials at termination; positive only for infeasible problems.
    pub infeasibility: T,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    /// Print each tableau to stderr (debugging aid).
    pub dump_tableau: bool,
    /// Iteration cap; 0 picks a size-based default.
    pub max_iterations: usize,
    /// Exact backend only: skip the float solve whose final basis seeds the exact simplex.
    pub cold_start: bool,
}

/// Problems with at most this many nonzeros may be re-solved exactly.
pub const EXACT_NONZERO_LIMIT: usize = 2000;

impl<T: Scalar> LpProblem<T> {
    /// `num_vars` variables with default bounds `[0, ∞)` and zero objective.
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LpProblem {
            sense,
            objective: vec![T::zero(); num_vars],
            constraints: Vec::new(),
            bounds: vec![(Some(T::zero()), None); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective(&mut self, c: Vec<T>) -> &mut Self {
        self.objective = c;
        self
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, rel: Relation, rhs: T) -> &mut Self {
        self.constraints.push(Constraint { coeffs, rel, rhs });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lo: Option<T>, hi: Option<T>) -> &mut Self {
        self.bounds[var] = (lo, hi);
        self
    }

    pub fn nonzeros(&self) -> usize {
        self.constraints
            .iter()
            .map(|c| c.coeffs.iter().filter(|v| !v.is_zero()).count())
            .sum::<usize>()
            + self.bounds.iter().filter(|(l, h)| h.is_some() || l.as_ref().is_some_and(|v| !v.is_zero())).count()
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::LpFailure(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::LpFailure(format!("row {i} has {} coefficients, expected {n}", c.coeffs.len())));
            }
        }
        let finite = self.objective.iter().all(Scalar::is_finite_val)
            && self
                .constraints
                .iter()
                .all(|c| c.rhs.is_finite_val() && c.coeffs.iter().all(Scalar::is_finite_val))
            && self.bounds.iter().all(|(l, h)| {
                l.as_ref().is_none_or(Scalar::is_finite_val) && h.as_ref().is_none_or(Scalar::is_finite_val)
            });
        if !finite {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn primal_residual(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for c in &self.constraints {
            let lhs = c.coeffs.iter().zip(x).fold(T::zero(), |a, (u, v)| a + u.clone() * v.clone());
            let viol = match c.rel {
                Relation::Le => lhs - c.rhs.clone(),
                Relation::Ge => c.rhs.clone() - lhs,
                Relation::Eq => (lhs - c.rhs.clone()).abs(),
            };
            worst = T::max_of(worst, viol);
        }
        for ((lo, hi), v) in self.bounds.iter().zip(x) {
            if let Some(l) = lo {
                worst = T::max_of(worst, l.clone() - v.clone());
            }
            if let Some(h) = hi {
                worst = T::max_of(worst, v.clone() - h.clone());
            }
        }
        worst
    }

    pub fn evaluate(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).fold(T::zero(), |a, (c, v)| a + c.clone() * v.clone())
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LpProblem<U> {
        LpProblem {
            sense: self.sense,
            objective: self.objective.iter().map(&f).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint { coeffs: c.coeffs.iter().map(&f).collect(), rel: c.rel, rhs: f(&c.rhs) })
                .collect(),
            bounds: self.bounds.iter().map(|(l, h)| (l.as_ref().map(&f), h.as_ref().map(&f))).collect(),
        }
    }
}

/// Solves with default options.
pub fn solve<T: Scalar>(p: &LpProblem<T>) -> Result<LpSolution<T>> {
    solve_with(p, SolveOptions::default())
}

pub fn solve_with<T: Scalar>(p: &LpProblem<T>, opts: SolveOptions) -> Result<LpSolution<T>> {
    p.check()?;
    let std = StandardForm::build(p);
    if T::BACKEND == Backend::Rational && !opts.cold_start {
        if let Some(basis) = float_basis(p, &std) {
            let mut tab = Tableau::new(&std, opts);
            if let Some(status) = tab.warm_start(&basis)? {
                return Ok(std.recover(p, &tab, status));
            }
        }
    }
    let mut tab = Tableau::new(&std, opts);
    let status = tab.run()?;
    Ok(std.recover(p, &tab, status))
}

/// Optimal basis of the float version of `p`, when it has the same standard form and no
/// artificial column stays basic.
fn float_basis<T: Scalar>(p: &LpProblem<T>, std: &StandardForm<T>) -> Option<Vec<usize>> {
    let pf = p.map_scalar(Scalar::to_f);
    let stdf = StandardForm::build(&pf);
    if stdf.rels != std.rels || stdf.num_y != std.num_y {
        return None;
    }
    let mut tab = Tableau::new(&stdf, SolveOptions::default());
    if !matches!(tab.run(), Ok(LpStatus::Optimal)) || tab.basis.iter().any(|&b| b >= tab.art_start) {
        return None;
    }
    Some(tab.basis)
}

/// Float solve that verifies feasibility of the answer and re-solves exactly on breakdown.
pub fn solve_checked(p: &LpProblem<f64>) -> Result<LpSolution<f64>> {
    let float = solve(p);
    let ok = match &float {
        Ok(s) if s.status == LpStatus::Optimal => p.primal_residual(&s.primal) <= 1e-9,
        Ok(_) => true,
        Err(Error::NumericBreakdown(_)) => false,
        Err(e) => return Err(e.clone()),
    };
    if ok {
        return float;
    }
    if p.nonzeros() > EXACT_NONZERO_LIMIT {
        return match float {
            Err(e) => Err(e),
            Ok(_) => Err(Error::NumericBreakdown("primal residual above 1e-9".into())),
        };
    }
    let exact = solve(&p.map_scalar(to_rational::<f64>))?;
    Ok(LpSolution {
        status: exact.status,
        value: exact.value.to_f(),
        primal: exact.primal.iter().map(Scalar::to_f).collect(),
        dual: exact.dual.iter().map(Scalar::to_f).collect(),
        reduced_costs: exact.reduced_costs.iter().map(Scalar::to_f).collect(),
        iterations: exact.iterations,
        infeasibility: exact.infeasibility.to_f(),
    })
}

/// Exact solve of a float problem (inputs converted by their binary value).
pub fn solve_exact(p: &LpProblem<f64>) -> Result<LpSolution<Rational>> {
    solve(&p.map_scalar(to_rational::<f64>))
}

/// How an original variable is expressed in the nonnegative standard-form variables.
#[derive(Debug, Clone)]
enum VarMap<T> {
    /// x = offset + y_k
    Shift { k: usize, offset: T },
    /// x = offset − y_k
    Reflect { k: usize, offset: T },
    /// x = y_k − y_{k+1}
    Free { k: usize },
}

/// `min cᵀy, A y (rel) b, b ≥ 0, y ≥ 0` after bound substitution and row flips.
struct StandardForm<T> {
    maps: Vec<VarMap<T>>,
    num_y: usize,
    rows: Vec<Vec<T>>,
    rels: Vec<Relation>,
    rhs: Vec<T>,
    /// +1 / −1 flip applied to each row.
    flipped: Vec<bool>,
    cost: Vec<T>,
    num_user_rows: usize,
    infeasible_bounds: bool,
}

impl<T: Scalar> StandardForm<T> {
    fn build(p: &LpProblem<T>) -> Self {
        let mut maps = Vec::with_capacity(p.num_vars());
        let mut num_y = 0;
        let mut bound_rows: Vec<(usize, T)> = Vec::new();
        let mut infeasible_bounds = false;
        for (lo, hi) in &p.bounds {
            match (lo, hi) {
                (Some(l), h) => {
                    if let Some(h) = h {
                        if h < l {
                            infeasible_bounds = true;
                        }
                        bound_rows.push((num_y, h.clone() - l.clone()));
                    }
                    maps.push(VarMap::Shift { k: num_y, offset: l.clone() });
                    num_y += 1;
                }
                (None, Some(h)) => {
                    maps.push(VarMap::Reflect { k: num_y, offset: h.clone() });
                    num_y += 1;
                }
                (None, None) => {
                    maps.push(VarMap::Free { k: num_y });
                    num_y += 2;
                }
            }
        }
        let sign = match p.sense {
            Sense::Minimize => T::one(),
            Sense::Maximize => -T::one(),
        };
        let mut cost = vec![T::zero(); num_y];
        for (c, m) in p.objective.iter().zip(&maps) {
            let c = c.clone() * sign.clone();
            match m {
                VarMap::Shift { k, .. } => {
                    cost[*k] = cost[*k].clone() + c;
                }
                VarMap::Reflect { k, .. } => {
                    cost[*k] = cost[*k].clone() - c;
                }
                VarMap::Free { k } => {
                    cost[*k] = cost[*k].clone() + c.clone();
                    cost[*k + 1] = cost[*k + 1].clone() - c;
                }
            }
        }
        let mut rows = Vec::new();
        let mut rels = Vec::new();
        let mut rhs = Vec::new();
        for c in &p.constraints {
            let mut row = vec![T::zero(); num_y];
            let mut b = c.rhs.clone();
            for (a, m) in c.coeffs.iter().zip(&maps) {
                if a.is_zero() {
                    continue;
                }
                match m {
                    VarMap::Shift { k, offset } => {
                        row[*k] = row[*k].clone() + a.clone();
                        b = b - a.clone() * offset.clone();
                    }
                    VarMap::Reflect { k, offset } => {
                        row[*k] = row[*k].clone() - a.clone();
                        b = b - a.clone() * offset.clone();
                    }
                    VarMap::Free { k } => {
                        row[*k] = row[*k].clone() + a.clone();
                        row[*k + 1] = row[*k + 1].clone() - a.clone();
                    }
                }
            }
            rows.push(row);
            rels.push(c.rel);
            rhs.push(b);
        }
        let num_user_rows = rows.len();
        for (k, width) in bound_rows {
            let mut row = vec![T::zero(); num_y];
            row[k] = T::one();
            rows.push(row);
            rels.push(Relation::Le);
            rhs.push(width);
        }
        let mut flipped = vec![false; rows.len()];
        for i in 0..rows.len() {
            if rhs[i] < T::zero() {
                flipped[i] = true;
                rhs[i] = -rhs[i].clone();
                for v in rows[i].iter_mut() {
                    *v = -v.clone();
                }
                rels[i] = match rels[i] {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        StandardForm { maps, num_y, rows, rels, rhs, flipped, cost, num_user_rows, infeasible_bounds }
    }

    fn recover(&self, p: &LpProblem<T>, tab: &Tableau<T>, status: LpStatus) -> LpSolution<T> {
        let mut y = vec![T::zero(); self.num_y];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < self.num_y {
                y[b] = tab.rhs[i].clone();
            }
        }
        let primal: Vec<T> = self
            .maps
            .iter()
            .map(|m| match m {
                VarMap::Shift { k, offset } => offset.clone() + y[*k].clone(),
                VarMap::Reflect { k, offset } => offset.clone() - y[*k].clone(),
                VarMap::Free { k } => y[*k].clone() - y[*k + 1].clone(),
            })
            .collect();
        let sense_sign = match p.sense {
            Sense::Minimize => T::one(),
            Sense::Maximize => -T::one(),
        };
        // multiplier of the min-form row i is −d(init column of row i)
        let dual: Vec<T> = (0..self.num_user_rows)
            .map(|i| {
                let d = tab.reduced[tab.init_col[i]].clone();
                let mut y = -d;
                if self.flipped[i] {
                    y = -y;
                }
                (y * sense_sign.clone()).snap_tiny()
            })
            .collect();
        let reduced_costs: Vec<T> = (0..p.num_vars())
            .map(|j| {
                let aty = p
                    .constraints
                    .iter()
                    .zip(&dual)
                    .fold(T::zero(), |a, (c, y)| a + c.coeffs[j].clone() * y.clone());
                p.objective[j].clone() - aty
            })
            .collect();
        let value = p.evaluate(&primal);
        LpSolution {
            status,
            value,
            primal,
            dual,
            reduced_costs,
            iterations: tab.iterations,
            infeasibility: tab.infeasibility.clone(),
        }
    }
}

struct Tableau<T> {
    /// constraint rows over all columns
    a: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// reduced costs of the current phase objective
    reduced: Vec<T>,
    cost: Vec<T>,
    num_cols: usize,
    /// first artificial column
    art_start: usize,
    init_col: Vec<usize>,
    iterations: usize,
    max_iterations: usize,
    dump: bool,
    infeasible_bounds: bool,
    infeasibility: T,
}

impl<T: Scalar> Tableau<T> {
    fn new(std: &StandardForm<T>, opts: SolveOptions) -> Self {
        let m = std.rows.len();
        let n_slack = std.rels.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = std.rels.iter().filter(|r| **r != Relation::Le).count();
        let art_start = std.num_y + n_slack;
        let num_cols = art_start + n_art;
        let mut a = vec![vec![T::zero(); num_cols]; m];
        let mut basis = vec![0; m];
        let mut init_col = vec![0; m];
        let (mut s, mut art) = (std.num_y, art_start);
        for i in 0..m {
            a[i][..std.num_y].clone_from_slice(&std.rows[i]);
            match std.rels[i] {
                Relation::Le => {
                    a[i][s] = T::one();
                    basis[i] = s;
                    init_col[i] = s;
                    s += 1;
                }
                Relation::Ge => {
                    a[i][s] = -T::one();
                    s += 1;
                    a[i][art] = T::one();
                    basis[i] = art;
                    init_col[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    a[i][art] = T::one();
                    basis[i] = art;
                    init_col[i] = art;
                    art += 1;
                }
            }
        }
        let mut cost = vec![T::zero(); num_cols];
        cost[..std.num_y].clone_from_slice(&std.cost);
        let max_iterations = if opts.max_iterations > 0 {
            opts.max_iterations
        } else {
            50 * (m + num_cols) + 1000
        };
        Tableau {
            a,
            rhs: std.rhs.clone(),
            basis,
            reduced: vec![T::zero(); num_cols],
            cost,
            num_cols,
            art_start,
            init_col,
            iterations: 0,
            max_iterations,
            dump: opts.dump_tableau,
            infeasible_bounds: std.infeasible_bounds,
            infeasibility: T::zero(),
        }
    }

    fn run(&mut self) -> Result<LpStatus> {
        if self.infeasible_bounds {
            return Ok(LpStatus::Infeasible);
        }
        if self.art_start < self.num_cols {
            // phase 1: minimize the sum of artificials
            let phase1: Vec<T> = (0..self.num_cols)
                .map(|j| if j >= self.art_start { T::one() } else { T::zero() })
                .collect();
            self.price(&phase1);
            if self.iterate(self.num_cols)? == LpStatus::Unbounded {
                return Err(Error::NumericBreakdown("phase 1 reported unbounded".into()));
            }
            let infeas = self
                .basis
                .iter()
                .zip(&self.rhs)
                .filter(|(b, _)| **b >= self.art_start)
                .fold(T::zero(), |acc, (_, v)| acc + v.clone());
            if infeas > T::lp_tol() * T::from_int(10) {
                self.infeasibility = infeas;
                return Ok(LpStatus::Infeasible);
            }
            self.drive_out_artificials();
        }
        let cost = self.cost.clone();
        self.price(&cost);
        self.iterate(self.art_start)
    }

    /// Pivots `basis` into the tableau and runs phase 2 from there. `None` when that basis
    /// is singular or infeasible in this arithmetic.
    fn warm_start(&mut self, basis: &[usize]) -> Result<Option<LpStatus>> {
        if self.infeasible_bounds {
            return Ok(None);
        }
        let m = self.a.len();
        let mut assigned = vec![false; m];
        for &col in basis {
            let Some(row) = (0..m).find(|&r| !assigned[r] && !self.a[r][col].is_zero()) else {
                return Ok(None);
            };
            self.pivot(row, col);
            assigned[row] = true;
            self.iterations += 1;
        }
        if self.rhs.iter().any(|v| *v < T::zero()) {
            return Ok(None);
        }
        let cost = self.cost.clone();
        self.price(&cost);
        self.iterate(self.art_start).map(Some)
    }

    /// Recomputes reduced costs `c − c_B B⁻¹ A` for the given cost vector.
    fn price(&mut self, cost: &[T]) {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (dj, aij) in d.iter_mut().zip(&self.a[i]) {
                if !aij.is_zero() {
                    *dj = dj.clone() - cb.clone() * aij.clone();
                }
            }
        }
        self.reduced = d;
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving variable among ratio ties.
    fn iterate(&mut self, enter_limit: usize) -> Result<LpStatus> {
        let tol = T::lp_tol();
        let neg_tol = -tol.clone();
        loop {
            if self.dump {
                self.dump_state();
            }
            let Some(enter) = (0..enter_limit).find(|&j| self.reduced[j] < neg_tol) else {
                return Ok(LpStatus::Optimal);
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.a.len() {
                let aij = &self.a[i][enter];
                if *aij > tol {
                    let ratio = self.rhs[i].clone() / aij.clone();
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            self.pivot(row, enter);
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(Error::NumericBreakdown(format!("iteration cap {} reached", self.max_iterations)));
            }
        }
    }

    fn drive_out_artificials(&mut self) {
        for i in 0..self.a.len() {
            if self.basis[i] < self.art_start {
                continue;
            }
            let candidate = (0..self.art_start).find(|&j| self.a[i][j].abs() > T::lp_tol());
            if let Some(j) = candidate {
                self.pivot(i, j);
            }
            // otherwise the row is redundant; its artificial stays basic at level zero
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pv = self.a[row][col].clone();
        let nz: Vec<usize> = (0..self.num_cols).filter(|&j| !self.a[row][j].is_zero()).collect();
        for &j in &nz {
            self.a[row][j] = self.a[row][j].clone() / pv.clone();
        }
        self.a[row][col] = T::one();
        self.rhs[row] = self.rhs[row].clone() / pv;
        let prow = self.a[row].clone();
        let prhs = self.rhs[row].clone();
        for i in 0..self.a.len() {
            if i == row {
                continue;
            }
            let f = self.a[i][col].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                self.a[i][j] = (self.a[i][j].clone() - f.clone() * prow[j].clone()).snap_tiny();
            }
            self.a[i][col] = T::zero();
            let r = (self.rhs[i].clone() - f * prhs.clone()).snap_tiny();
            // primal feasibility is invariant; clamp round-off below zero
            self.rhs[i] = if r < T::zero() && r > -T::lp_tol() { T::zero() } else { r };
        }
        let f = self.reduced[col].clone();
        if !f.is_zero() {
            for &j in &nz {
                self.reduced[j] = (self.reduced[j].clone() - f.clone() * prow[j].clone()).snap_tiny();
            }
            self.reduced[col] = T::zero();
        }
        self.basis[row] = col;
    }

    fn dump_state(&self) {
        eprintln!("-- tableau (iteration {}) --", self.iterations);
        for (i, row) in self.a.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>8}")).collect();
            eprintln!("x{:<4}| {} | {}", self.basis[i], cells.join(" "), self.rhs[i]);
        }
        let cells: Vec<String> = self.reduced.iter().map(|v| format!("{v:>8}")).collect();
        eprintln!("d    | {}", cells.join(" "));
    }
}

/// Duality gap `|value − Σ rhsᵢ dualᵢ − Σ reducedⱼ xⱼ|`, relative to `max(1, |value|)`.
pub fn duality_gap<T: Scalar>(p: &LpProblem<T>, s: &LpSolution<T>) -> f64 {
    let by = p
        .constraints
        .iter()
        .zip(&s.dual)
        .fold(T::zero(), |a, (c, y)| a + c.rhs.clone() * y.clone());
    let rx = s
        .reduced_costs
        .iter()
        .zip(&s.primal)
        .fold(T::zero(), |a, (r, x)| a + r.clone() * x.clone());
    let gap = (s.value.clone() - by - rx).abs().to_f();
    gap / s.value.to_f().abs().max(1.0)
}
