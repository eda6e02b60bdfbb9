//! Exact verdicts for negative-dependence notions on finite discrete distributions.
//!
//! Every "fails" verdict carries a witness that can be re-evaluated
//! independently: a positive covariance pair, an orthant threshold, a pair of
//! upper sets on a two-block partition, a supermodular test function, or a
//! pair of atoms that are not counter-monotonic.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dist::{cmp_points, DiscreteJoint, JmVerdict};
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, Relation, Sense};
use crate::numeric::{ser, to_rational, Backend, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Notion {
    CT,
    NA,
    NSD,
    NOD,
    NUOD,
    NLOD,
    NCD,
    JM,
}

impl Notion {
    pub const ALL: [Notion; 8] = [
        Notion::CT,
        Notion::NA,
        Notion::NSD,
        Notion::NOD,
        Notion::NUOD,
        Notion::NLOD,
        Notion::NCD,
        Notion::JM,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrthantKind {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "", tag = "kind", rename_all = "snake_case")]
pub enum Witness<T: Scalar> {
    /// Zero-based coordinate pair with positive covariance.
    CovPair {
        i: usize,
        j: usize,
        #[serde(serialize_with = "ser::scalar")]
        cov: T,
    },
    /// `P(X ≤ t) > Π P(Xᵢ ≤ tᵢ)` (lower) or `P(X > t) > Π P(Xᵢ > tᵢ)` (upper).
    Orthant {
        orthant: OrthantKind,
        #[serde(serialize_with = "ser::vec")]
        t: Vec<T>,
        #[serde(serialize_with = "ser::scalar")]
        joint: T,
        #[serde(serialize_with = "ser::scalar")]
        independent: T,
    },
    /// `Cov(1_U(X_A), 1_V(X_B)) > 0` for upper sets `U`, `V`.
    Association {
        a: Vec<usize>,
        b: Vec<usize>,
        #[serde(serialize_with = "ser::mat")]
        u: Vec<Vec<T>>,
        #[serde(serialize_with = "ser::mat")]
        v: Vec<Vec<T>>,
        #[serde(serialize_with = "ser::scalar")]
        cov: T,
    },
    /// Supermodular `φ` on the product grid (row-major, last coordinate fastest) with
    /// `E φ(X) − E φ(X⊥) = gap > 0`.
    Supermodular {
        #[serde(serialize_with = "ser::mat")]
        grid: Vec<Vec<T>>,
        phi: Vec<f64>,
        gap: f64,
    },
    /// Two atoms that move in the same direction on coordinates `i`, `j`.
    NotCounterMonotonic {
        i: usize,
        j: usize,
        #[serde(serialize_with = "ser::vec")]
        atom_a: Vec<T>,
        #[serde(serialize_with = "ser::vec")]
        atom_b: Vec<T>,
    },
    NotJointMix {
        #[serde(serialize_with = "ser::vec")]
        atom_a: Vec<T>,
        #[serde(serialize_with = "ser::vec")]
        atom_b: Vec<T>,
        #[serde(serialize_with = "ser::vec")]
        sums: Vec<T>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "", tag = "status", rename_all = "snake_case")]
pub enum Verdict<T: Scalar> {
    /// `boundary` is set when a positive violation below the float sign tolerance was absorbed.
    Holds { boundary: bool },
    Fails { witness: Box<Witness<T>> },
    Skipped { reason: String },
}

impl<T: Scalar> Verdict<T> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }

    pub fn witness(&self) -> Option<&Witness<T>> {
        match self {
            Verdict::Fails { witness } => Some(witness),
            _ => None,
        }
    }

    fn fail(w: Witness<T>) -> Self {
        Verdict::Fails { witness: Box::new(w) }
    }
}

/// A verdict together with the arithmetic that decided it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Checked<T: Scalar> {
    pub backend: Backend,
    #[serde(flatten)]
    pub verdict: Verdict<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckConfig {
    /// Cap on orthant evaluation grid points.
    pub grid_cap: u128,
    /// Cap on the number of upper sets enumerated per block.
    pub upper_set_cap: usize,
    /// Cap on the supermodular LP grid.
    pub nsd_grid_cap: usize,
    /// LPs with at most this many nonzeros are solved exactly in rational mode.
    pub exact_lp_nonzeros: usize,
    /// NSD holds iff the LP optimum is at most this (float backend).
    pub nsd_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            grid_cap: 10_000_000,
            upper_set_cap: 1_000_000,
            nsd_grid_cap: 4096,
            exact_lp_nonzeros: lp::EXACT_NONZERO_LIMIT,
            nsd_tol: 1e-9,
        }
    }
}

fn holds_with<T: Scalar>(worst: &T) -> Verdict<T> {
    Verdict::Holds { boundary: *worst > T::zero() && !worst.is_pos_tol() }
}

fn checked<T: Scalar>(verdict: Verdict<T>) -> Checked<T> {
    Checked { backend: T::BACKEND, verdict }
}

pub fn is_ncd<T: Scalar>(d: &DiscreteJoint<T>) -> Checked<T> {
    let cov = d.moments().cov;
    let n = d.dim();
    let mut worst: Option<(usize, usize, T)> = None;
    for i in 0..n {
        for j in i + 1..n {
            if worst.as_ref().is_none_or(|w| cov[i][j] > w.2) {
                worst = Some((i, j, cov[i][j].clone()));
            }
        }
    }
    checked(match worst {
        None => Verdict::Holds { boundary: false },
        Some((i, j, c)) if c.is_pos_tol() => Verdict::fail(Witness::CovPair { i, j, cov: c }),
        Some((_, _, c)) => holds_with(&c),
    })
}

/// Index of every atom coordinate in the corresponding marginal support.
fn support_indices<T: Scalar>(d: &DiscreteJoint<T>) -> (Vec<Vec<T>>, Vec<Vec<T>>, Vec<Vec<usize>>) {
    let marg = d.marginals();
    let supports: Vec<Vec<T>> = marg.iter().map(|m| m.support().to_vec()).collect();
    let probs: Vec<Vec<T>> = marg.iter().map(|m| m.probs().to_vec()).collect();
    let idx = d
        .atoms()
        .iter()
        .map(|a| {
            a.x.iter()
                .zip(&supports)
                .map(|(v, s)| s.binary_search_by(|w| w.cmp_total(v)).expect("value in support"))
                .collect()
        })
        .collect();
    (supports, probs, idx)
}

fn grid_size(dims: &[usize]) -> u128 {
    dims.iter().fold(1u128, |a, &m| a.saturating_mul(m as u128))
}

/// Orthant checks over every threshold built from support values plus a below-minimum sentinel.
pub fn is_orthant<T: Scalar>(d: &DiscreteJoint<T>, kind: OrthantKind, cfg: &CheckConfig) -> Result<Checked<T>> {
    let n = d.dim();
    let (supports, probs, idx) = support_indices(d);
    let dims: Vec<usize> = supports.iter().map(|s| s.len() + 1).collect();
    let size = grid_size(&dims);
    if size > cfg.grid_cap {
        return Err(Error::GridTooLarge { size, cap: cfg.grid_cap });
    }
    let size = size as usize;
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    // grid index k along axis i: 0 is the sentinel, k ≥ 1 is support value k−1
    let mut arr = vec![T::zero(); size];
    for (a, ix) in d.atoms().iter().zip(&idx) {
        let pos: usize = match kind {
            // P(X ≤ t) accumulates atoms at grid positions ≥ their own index
            OrthantKind::Lower => ix.iter().zip(&strides).map(|(k, s)| (k + 1) * s).sum(),
            // P(X > t_k) with t_k the (k−1)-th support value counts atoms with index ≥ k
            OrthantKind::Upper => ix.iter().zip(&strides).map(|(k, s)| k * s).sum(),
        };
        arr[pos] = arr[pos].clone() + a.p.clone();
    }
    for axis in 0..n {
        let stride = strides[axis];
        let len = dims[axis];
        for base in 0..size {
            if !(base / stride).is_multiple_of(len) {
                continue;
            }
            match kind {
                OrthantKind::Lower => {
                    for k in 1..len {
                        let prev = arr[base + (k - 1) * stride].clone();
                        arr[base + k * stride] = arr[base + k * stride].clone() + prev;
                    }
                }
                OrthantKind::Upper => {
                    for k in (0..len - 1).rev() {
                        let next = arr[base + (k + 1) * stride].clone();
                        arr[base + k * stride] = arr[base + k * stride].clone() + next;
                    }
                }
            }
        }
    }
    // marginal orthant probabilities per grid index
    let marg: Vec<Vec<T>> = probs
        .iter()
        .map(|p| {
            let mut out = Vec::with_capacity(p.len() + 1);
            match kind {
                OrthantKind::Lower => {
                    let mut acc = T::zero();
                    out.push(T::zero());
                    for q in p {
                        acc = acc + q.clone();
                        out.push(acc.clone());
                    }
                }
                OrthantKind::Upper => {
                    // grid k: threshold below support value k (k=0 sentinel) ⇒ mass of indices ≥ k
                    let mut tail = vec![T::zero(); p.len() + 1];
                    for k in (0..p.len()).rev() {
                        tail[k] = tail[k + 1].clone() + p[k].clone();
                    }
                    out = tail;
                }
            }
            out
        })
        .collect();
    let mut worst: Option<(usize, T, T)> = None;
    let mut gidx = vec![0usize; n];
    for (pos, joint) in arr.iter().enumerate() {
        let mut rem = pos;
        for i in 0..n {
            gidx[i] = rem / strides[i];
            rem %= strides[i];
        }
        let indep = gidx.iter().zip(&marg).fold(T::one(), |acc, (k, m)| acc * m[*k].clone());
        let gap = joint.clone() - indep.clone();
        if worst.as_ref().is_none_or(|w| gap > w.1.clone() - w.2.clone()) {
            worst = Some((pos, joint.clone(), indep));
        }
    }
    let (pos, joint, indep) = worst.expect("non-empty grid");
    let gap = joint.clone() - indep.clone();
    if !gap.is_pos_tol() {
        return Ok(checked(holds_with(&gap)));
    }
    let mut rem = pos;
    let mut t = Vec::with_capacity(n);
    for i in 0..n {
        let k = rem / strides[i];
        rem %= strides[i];
        let s = &supports[i];
        // grid index 0 is the sentinel below the minimum, k ≥ 1 is support value k−1
        let value = if k == 0 { s[0].clone() - T::one() } else { s[k - 1].clone() };
        t.push(value);
    }
    Ok(checked(Verdict::fail(Witness::Orthant { orthant: kind, t, joint, independent: indep })))
}

pub fn is_nlod<T: Scalar>(d: &DiscreteJoint<T>, cfg: &CheckConfig) -> Result<Checked<T>> {
    is_orthant(d, OrthantKind::Lower, cfg)
}

pub fn is_nuod<T: Scalar>(d: &DiscreteJoint<T>, cfg: &CheckConfig) -> Result<Checked<T>> {
    is_orthant(d, OrthantKind::Upper, cfg)
}

/// NOD = NLOD ∧ NUOD; a failure reports the lower-orthant witness first.
pub fn is_nod<T: Scalar>(d: &DiscreteJoint<T>, cfg: &CheckConfig) -> Result<Checked<T>> {
    let lo = is_nlod(d, cfg)?;
    if lo.verdict.fails() {
        return Ok(lo);
    }
    let up = is_nuod(d, cfg)?;
    if up.verdict.fails() {
        return Ok(up);
    }
    let boundary = matches!(lo.verdict, Verdict::Holds { boundary: true })
        || matches!(up.verdict, Verdict::Holds { boundary: true });
    Ok(checked(Verdict::Holds { boundary }))
}

/// Pairwise counter-monotonic supports.
pub fn is_ct<T: Scalar>(d: &DiscreteJoint<T>) -> Checked<T> {
    let n = d.dim();
    let atoms = d.atoms();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            for (k, a) in atoms.iter().enumerate() {
                for b in &atoms[k + 1..] {
                    let prod = (a.x[i].clone() - b.x[i].clone()) * (a.x[j].clone() - b.x[j].clone());
                    if prod.is_pos_tol() {
                        return checked(Verdict::fail(Witness::NotCounterMonotonic {
                            i,
                            j,
                            atom_a: a.x.clone(),
                            atom_b: b.x.clone(),
                        }));
                    }
                    worst = T::max_of(worst, prod);
                }
            }
        }
    }
    checked(holds_with(&worst))
}

pub fn is_jm<T: Scalar>(d: &DiscreteJoint<T>) -> Checked<T> {
    checked(match d.is_joint_mix(&T::jm_tol()) {
        JmVerdict::Yes { .. } => Verdict::Holds { boundary: false },
        JmVerdict::No { atom_a, atom_b, sums } => Verdict::fail(Witness::NotJointMix { atom_a, atom_b, sums }),
    })
}

/// Projection of the distribution on a coordinate block: distinct points (lexicographic) with
/// the index of each atom's projection.
pub(crate) struct Projection<T> {
    pub points: Vec<Vec<T>>,
    pub of_atom: Vec<usize>,
}

pub(crate) fn project<T: Scalar>(d: &DiscreteJoint<T>, block: &[usize]) -> Projection<T> {
    let mut points: Vec<Vec<T>> = d
        .atoms()
        .iter()
        .map(|a| block.iter().map(|&i| a.x[i].clone()).collect())
        .collect();
    points.sort_by(|a, b| cmp_points(a, b));
    points.dedup_by(|a, b| cmp_points(a, b) == std::cmp::Ordering::Equal);
    let of_atom = d
        .atoms()
        .iter()
        .map(|a| {
            let p: Vec<T> = block.iter().map(|&i| a.x[i].clone()).collect();
            points.binary_search_by(|q| cmp_points(q, &p)).expect("projected point")
        })
        .collect();
    Projection { points, of_atom }
}

fn dominates<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Visits every upper set (componentwise order) of `points`, passing membership flags.
/// Returns the number of sets visited, or `EnumerationTooLarge` once `cap` is exceeded.
pub(crate) fn for_each_upper_set<T: Scalar>(
    points: &[Vec<T>],
    cap: usize,
    mut visit: impl FnMut(&[bool]),
) -> Result<usize> {
    let m = points.len();
    // lexicographically descending order is a linear extension of the reversed partial order
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| cmp_points(&points[b], &points[a]));
    let above: Vec<Vec<usize>> = (0..m)
        .map(|i| (0..m).filter(|&j| j != i && dominates(&points[j], &points[i])).collect())
        .collect();
    let mut member = vec![false; m];
    let mut count = 0usize;

    fn rec(
        pos: usize,
        order: &[usize],
        above: &[Vec<usize>],
        member: &mut Vec<bool>,
        count: &mut usize,
        cap: usize,
        visit: &mut dyn FnMut(&[bool]),
    ) -> Result<()> {
        if pos == order.len() {
            *count += 1;
            if *count > cap {
                return Err(Error::EnumerationTooLarge { cap });
            }
            visit(member);
            return Ok(());
        }
        let i = order[pos];
        rec(pos + 1, order, above, member, count, cap, visit)?;
        if above[i].iter().all(|&j| member[j]) {
            member[i] = true;
            rec(pos + 1, order, above, member, count, cap, visit)?;
            member[i] = false;
        }
        Ok(())
    }

    rec(0, &order, &above, &mut member, &mut count, cap, &mut visit)?;
    Ok(count)
}

pub(crate) fn upper_sets<T: Scalar>(points: &[Vec<T>], cap: usize) -> Result<Vec<Vec<bool>>> {
    let mut out = Vec::new();
    for_each_upper_set(points, cap, |m| out.push(m.to_vec()))?;
    Ok(out)
}

/// Negative association via upper-set indicators on every two-block partition.
pub fn is_na<T: Scalar>(d: &DiscreteJoint<T>, cfg: &CheckConfig) -> Result<Checked<T>> {
    let n = d.dim();
    let mut worst_gap = T::zero();
    let mut best: Option<Witness<T>> = None;
    // coordinate n−1 always sits in B, so each unordered partition is visited once
    for mask in 1u64..(1u64 << (n - 1)) {
        let a_block: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let b_block: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 0).collect();
        let pa = project(d, &a_block);
        let pb = project(d, &b_block);
        let (ma, mb) = (pa.points.len(), pb.points.len());
        if ma < 2 || mb < 2 {
            continue;
        }
        let mut joint = vec![vec![T::zero(); mb]; ma];
        for (k, a) in d.atoms().iter().enumerate() {
            let (i, j) = (pa.of_atom[k], pb.of_atom[k]);
            joint[i][j] = joint[i][j].clone() + a.p.clone();
        }
        let prob_b: Vec<T> = (0..mb)
            .map(|j| (0..ma).fold(T::zero(), |s, i| s + joint[i][j].clone()))
            .collect();
        let v_sets: Vec<(Vec<usize>, T)> = upper_sets(&pb.points, cfg.upper_set_cap)?
            .into_iter()
            .map(|m| {
                let members: Vec<usize> = (0..mb).filter(|&j| m[j]).collect();
                let p = members.iter().fold(T::zero(), |s, &j| s + prob_b[j].clone());
                (members, p)
            })
            .filter(|(members, _)| !members.is_empty() && members.len() < mb)
            .collect();
        let mut row = vec![T::zero(); mb];
        for_each_upper_set(&pa.points, cfg.upper_set_cap, |u| {
            let size = u.iter().filter(|x| **x).count();
            if size == 0 || size == ma {
                return;
            }
            for v in row.iter_mut() {
                *v = T::zero();
            }
            for (i, &inside) in u.iter().enumerate() {
                if inside {
                    for j in 0..mb {
                        row[j] = row[j].clone() + joint[i][j].clone();
                    }
                }
            }
            let pu = row.iter().fold(T::zero(), |s, x| s + x.clone());
            for (members, pv) in &v_sets {
                let puv = members.iter().fold(T::zero(), |s, &j| s + row[j].clone());
                let cov = puv - pu.clone() * pv.clone();
                if cov > worst_gap {
                    worst_gap = cov.clone();
                    if cov.is_pos_tol() {
                        best = Some(Witness::Association {
                            a: a_block.clone(),
                            b: b_block.clone(),
                            u: (0..ma).filter(|&i| u[i]).map(|i| pa.points[i].clone()).collect(),
                            v: members.iter().map(|&j| pb.points[j].clone()).collect(),
                            cov,
                        });
                    }
                }
            }
        })?;
    }
    Ok(checked(match best {
        Some(w) => Verdict::fail(w),
        None => holds_with(&worst_gap),
    }))
}

/// Product grid of marginal supports with `Δ(g) = p_X(g) − p_{X⊥}(g)`.
pub struct SupermodularLp<T> {
    pub supports: Vec<Vec<T>>,
    pub delta: Vec<T>,
    pub problem: LpProblem<T>,
}

/// Decision LP: maximize `Σ Δ(g) φ(g)` over `φ ∈ [−1,1]^G` with nonnegative adjacent
/// second differences on every coordinate pair.
pub fn nsd_lp<T: Scalar>(d: &DiscreteJoint<T>, cap: usize) -> Result<SupermodularLp<T>> {
    let n = d.dim();
    let (supports, probs, idx) = support_indices(d);
    let dims: Vec<usize> = supports.iter().map(Vec::len).collect();
    let size = grid_size(&dims);
    if size > cap as u128 {
        return Err(Error::GridTooLarge { size, cap: cap as u128 });
    }
    let size = size as usize;
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let mut delta = vec![T::zero(); size];
    for (a, ix) in d.atoms().iter().zip(&idx) {
        let pos: usize = ix.iter().zip(&strides).map(|(k, s)| k * s).sum();
        delta[pos] = delta[pos].clone() + a.p.clone();
    }
    for (pos, dv) in delta.iter_mut().enumerate() {
        let mut rem = pos;
        let mut indep = T::one();
        for i in 0..n {
            indep = indep * probs[i][rem / strides[i]].clone();
            rem %= strides[i];
        }
        *dv = dv.clone() - indep;
    }
    let mut problem = LpProblem::new(size, Sense::Maximize);
    problem.set_objective(delta.clone());
    for j in 0..size {
        problem.set_bounds(j, Some(-T::one()), Some(T::one()));
    }
    for pos in 0..size {
        let coord = |i: usize| (pos / strides[i]) % dims[i];
        for i in 0..n {
            if coord(i) + 1 >= dims[i] {
                continue;
            }
            for j in i + 1..n {
                if coord(j) + 1 >= dims[j] {
                    continue;
                }
                // −(φ(g+eᵢ+eⱼ) + φ(g) − φ(g+eᵢ) − φ(g+eⱼ)) ≤ 0
                let mut row = vec![T::zero(); size];
                row[pos + strides[i] + strides[j]] = -T::one();
                row[pos] = -T::one();
                row[pos + strides[i]] = T::one();
                row[pos + strides[j]] = T::one();
                problem.add_constraint(row, Relation::Le, T::zero());
            }
        }
    }
    Ok(SupermodularLp { supports, delta, problem })
}

/// NSD verdict together with the LP optimum.
#[derive(Debug, Clone)]
pub struct NsdOutcome<T: Scalar> {
    pub checked: Checked<T>,
    pub optimum: f64,
}

pub fn is_nsd<T: Scalar>(d: &DiscreteJoint<T>, cfg: &CheckConfig) -> Result<NsdOutcome<T>> {
    let lp = nsd_lp(d, cfg.nsd_grid_cap)?;
    if lp.delta.iter().all(|v| v.is_zero()) {
        return Ok(NsdOutcome { checked: checked(Verdict::Holds { boundary: false }), optimum: 0.0 });
    }
    let exact = T::BACKEND == Backend::Rational && lp.problem.nonzeros() <= cfg.exact_lp_nonzeros;
    let (backend, phi, optimum_exact_positive, optimum) = if exact {
        let p: LpProblem<Rational> = lp.problem.map_scalar(to_rational::<T>);
        let s = lp::solve(&p)?;
        if s.status != LpStatus::Optimal {
            return Err(Error::LpFailure(format!("supermodular LP status {:?}", s.status)));
        }
        let phi: Vec<f64> = s.primal.iter().map(Scalar::to_f).collect();
        (Backend::Rational, phi, s.value.is_pos_tol(), s.value.to_f())
    } else {
        let p: LpProblem<f64> = lp.problem.map_scalar(Scalar::to_f);
        let s = lp::solve_checked(&p)?;
        if s.status != LpStatus::Optimal {
            return Err(Error::LpFailure(format!("supermodular LP status {:?}", s.status)));
        }
        let pos = s.value > cfg.nsd_tol;
        (Backend::Float, s.primal, pos, s.value)
    };
    let verdict = if optimum_exact_positive {
        Verdict::fail(Witness::Supermodular { grid: lp.supports, phi, gap: optimum })
    } else {
        Verdict::Holds { boundary: backend == Backend::Float && optimum > 0.0 }
    };
    Ok(NsdOutcome { checked: Checked { backend, verdict }, optimum })
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct DependenceReport<T: Scalar> {
    pub dim: usize,
    pub atoms: usize,
    pub input_backend: Backend,
    pub verdicts: BTreeMap<Notion, Checked<T>>,
    /// Optimum of the supermodular decision LP, when it ran.
    pub nsd_optimum: Option<f64>,
}

impl<T: Scalar> DependenceReport<T> {
    pub fn get(&self, n: Notion) -> &Verdict<T> {
        &self.verdicts[&n].verdict
    }

    /// True when every notion that ran holds.
    pub fn all_hold(&self) -> bool {
        self.verdicts.values().all(|c| !c.verdict.fails())
    }
}

fn skipped<T: Scalar>(e: Error) -> Checked<T> {
    checked(Verdict::Skipped { reason: e.to_string() })
}

/// Runs every checker; size-cap errors become `Skipped` verdicts.
pub fn check_all<T: Scalar>(d: &DiscreteJoint<T>, cfg: &CheckConfig) -> DependenceReport<T> {
    let mut verdicts = BTreeMap::new();
    verdicts.insert(Notion::JM, is_jm(d));
    verdicts.insert(Notion::CT, is_ct(d));
    verdicts.insert(Notion::NCD, is_ncd(d));
    let lo = is_nlod(d, cfg).unwrap_or_else(skipped);
    let up = is_nuod(d, cfg).unwrap_or_else(skipped);
    let nod = match (&lo.verdict, &up.verdict) {
        (Verdict::Fails { .. }, _) => lo.clone(),
        (_, Verdict::Fails { .. }) => up.clone(),
        (Verdict::Holds { boundary: b1 }, Verdict::Holds { boundary: b2 }) => {
            checked(Verdict::Holds { boundary: *b1 || *b2 })
        }
        (Verdict::Skipped { reason }, _) | (_, Verdict::Skipped { reason }) => {
            checked(Verdict::Skipped { reason: reason.clone() })
        }
    };
    verdicts.insert(Notion::NLOD, lo);
    verdicts.insert(Notion::NUOD, up);
    verdicts.insert(Notion::NOD, nod);
    let mut nsd_optimum = None;
    match is_nsd(d, cfg) {
        Ok(o) => {
            nsd_optimum = Some(o.optimum);
            verdicts.insert(Notion::NSD, o.checked);
        }
        Err(e) => {
            verdicts.insert(Notion::NSD, skipped(e));
        }
    }
    verdicts.insert(Notion::NA, is_na(d, cfg).unwrap_or_else(skipped));
    DependenceReport { dim: d.dim(), atoms: d.len(), input_backend: T::BACKEND, verdicts, nsd_optimum }
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct ChainReport<T: Scalar> {
    pub report: DependenceReport<T>,
    /// Implications contradicted by the verdicts; non-empty means a checker is wrong.
    pub violations: Vec<String>,
}

impl<T: Scalar> ChainReport<T> {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits the verdicts against CT ⇒ NA ⇒ NSD ⇒ NOD ⇒ (NUOD, NLOD) ⇒ NCD, and for n = 2
/// additionally JM ⇒ CT and the equivalence of NA, NSD, NOD, NUOD, NLOD.
pub fn audit_chain<T: Scalar>(report: DependenceReport<T>) -> ChainReport<T> {
    use Notion::*;
    let mut implications = vec![
        (CT, NA),
        (NA, NSD),
        (NSD, NOD),
        (NOD, NUOD),
        (NOD, NLOD),
        (NUOD, NCD),
        (NLOD, NCD),
    ];
    if report.dim == 2 {
        implications.push((JM, CT));
        let eq = [NA, NSD, NOD, NUOD, NLOD];
        for a in eq {
            for b in eq {
                if a != b {
                    implications.push((a, b));
                }
            }
        }
    }
    let mut violations = Vec::new();
    for (p, q) in implications {
        if report.get(p).holds() && report.get(q).fails() {
            violations.push(format!("{p:?} holds but {q:?} fails"));
        }
    }
    let nod = report.get(NOD).holds();
    let both = report.get(NLOD).holds() && report.get(NUOD).holds();
    if nod != both && !report.get(NLOD).fails() == both {
        violations.push("NOD disagrees with NLOD ∧ NUOD".into());
    }
    ChainReport { report, violations }
}

pub fn check_chain<T: Scalar>(d: &DiscreteJoint<T>, cfg: &CheckConfig) -> ChainReport<T> {
    audit_chain(check_all(d, cfg))
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "", tag = "result", rename_all = "snake_case")]
pub enum Theorem1Verdict<T: Scalar> {
    /// JM with conditions (a) and (b) for every block: NA follows; `na_check` is the
    /// independent enumeration verdict and `consistent` their agreement.
    Applies { na_check: Checked<T>, consistent: bool },
    /// Given `S_A = s`, the blocks are conditionally dependent (total variation `tv`).
    ConditionAFails {
        a: Vec<usize>,
        #[serde(serialize_with = "ser::scalar")]
        s: T,
        #[serde(serialize_with = "ser::scalar")]
        tv: T,
    },
    /// `P(X_A ∈ U | S_A = s)` decreases from `s_low` to `s_high`.
    ConditionBFails {
        a: Vec<usize>,
        #[serde(serialize_with = "ser::scalar")]
        s_low: T,
        #[serde(serialize_with = "ser::scalar")]
        s_high: T,
        #[serde(serialize_with = "ser::mat")]
        upper_set: Vec<Vec<T>>,
        #[serde(serialize_with = "ser::scalar")]
        p_low: T,
        #[serde(serialize_with = "ser::scalar")]
        p_high: T,
    },
    NotJm {
        #[serde(serialize_with = "ser::vec")]
        sums: Vec<T>,
    },
}

/// Conditional-structure check: JM plus, for every nonempty proper block `A`,
/// (a) `X_A ⟂ X_{Aᶜ} | S_A` and (b) `X_A | S_A = s` stochastically increasing in `s`.
pub fn check_theorem1<T: Scalar>(d: &DiscreteJoint<T>, tol: &T, cfg: &CheckConfig) -> Result<Theorem1Verdict<T>> {
    if let JmVerdict::No { sums, .. } = d.is_joint_mix(&T::jm_tol()) {
        return Ok(Theorem1Verdict::NotJm { sums });
    }
    let n = d.dim();
    let full = (1u64 << n) - 1;
    let blocks: Vec<(Vec<usize>, Vec<usize>)> = (1..full)
        .map(|mask| {
            (
                (0..n).filter(|&i| mask >> i & 1 == 1).collect(),
                (0..n).filter(|&i| mask >> i & 1 == 0).collect(),
            )
        })
        .collect();
    // condition (a)
    for (a_block, b_block) in &blocks {
        for (s, members) in group_by_block_sum(d, a_block) {
            let total = members.iter().fold(T::zero(), |acc, &k| acc + d.atoms()[k].p.clone());
            let sub_atoms: Vec<(Vec<T>, Vec<T>, T)> = members
                .iter()
                .map(|&k| {
                    let a = &d.atoms()[k];
                    (
                        a_block.iter().map(|&i| a.x[i].clone()).collect(),
                        b_block.iter().map(|&i| a.x[i].clone()).collect(),
                        a.p.clone() / total.clone(),
                    )
                })
                .collect();
            let tv = conditional_tv(&sub_atoms);
            if tv > *tol {
                return Ok(Theorem1Verdict::ConditionAFails { a: a_block.clone(), s, tv });
            }
        }
    }
    // condition (b)
    for (a_block, _) in &blocks {
        let proj = project(d, a_block);
        let groups = group_by_block_sum(d, a_block);
        if groups.len() < 2 {
            continue;
        }
        // conditional law of the projection index given each s
        let cond: Vec<(T, Vec<T>)> = groups
            .iter()
            .map(|(s, members)| {
                let total = members.iter().fold(T::zero(), |acc, &k| acc + d.atoms()[k].p.clone());
                let mut law = vec![T::zero(); proj.points.len()];
                for &k in members {
                    let i = proj.of_atom[k];
                    law[i] = law[i].clone() + d.atoms()[k].p.clone() / total.clone();
                }
                (s.clone(), law)
            })
            .collect();
        let mut failure: Option<Theorem1Verdict<T>> = None;
        for_each_upper_set(&proj.points, cfg.upper_set_cap, |u| {
            if failure.is_some() {
                return;
            }
            let probs: Vec<T> = cond
                .iter()
                .map(|(_, law)| {
                    law.iter().zip(u).filter(|(_, m)| **m).fold(T::zero(), |acc, (p, _)| acc + p.clone())
                })
                .collect();
            for k in 0..probs.len() - 1 {
                if probs[k].clone() - probs[k + 1].clone() > *tol {
                    failure = Some(Theorem1Verdict::ConditionBFails {
                        a: a_block.clone(),
                        s_low: cond[k].0.clone(),
                        s_high: cond[k + 1].0.clone(),
                        upper_set: (0..proj.points.len()).filter(|&i| u[i]).map(|i| proj.points[i].clone()).collect(),
                        p_low: probs[k].clone(),
                        p_high: probs[k + 1].clone(),
                    });
                    return;
                }
            }
        })?;
        if let Some(f) = failure {
            return Ok(f);
        }
    }
    let na_check = is_na(d, cfg)?;
    let consistent = !na_check.verdict.fails();
    Ok(Theorem1Verdict::Applies { na_check, consistent })
}

/// Atom indices grouped by the block sum, in increasing order of the sum.
fn group_by_block_sum<T: Scalar>(d: &DiscreteJoint<T>, block: &[usize]) -> Vec<(T, Vec<usize>)> {
    let mut keyed: Vec<(T, usize)> = d
        .atoms()
        .iter()
        .enumerate()
        .map(|(k, a)| (block.iter().fold(T::zero(), |s, &i| s + a.x[i].clone()), k))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp_total(&b.0));
    let mut groups: Vec<(T, Vec<usize>)> = Vec::new();
    for (s, k) in keyed {
        match groups.last_mut() {
            // float sums that agree within the sign tolerance are one level
            Some((s0, ks)) if s0.approx_eq(&s, &T::sign_tol()) => ks.push(k),
            _ => groups.push((s, vec![k])),
        }
    }
    groups
}

/// Total-variation distance between a joint law of `(a, b)` and the product of its marginals.
fn conditional_tv<T: Scalar>(atoms: &[(Vec<T>, Vec<T>, T)]) -> T {
    let mut pa: Vec<(Vec<T>, T)> = Vec::new();
    let mut pb: Vec<(Vec<T>, T)> = Vec::new();
    let add = |list: &mut Vec<(Vec<T>, T)>, key: &Vec<T>, p: &T| match list
        .iter_mut()
        .find(|(k, _)| cmp_points(k, key) == std::cmp::Ordering::Equal)
    {
        Some((_, q)) => *q = q.clone() + p.clone(),
        None => list.push((key.clone(), p.clone())),
    };
    for (a, b, p) in atoms {
        add(&mut pa, a, p);
        add(&mut pb, b, p);
    }
    let mut total = T::zero();
    for (a, qa) in &pa {
        for (b, qb) in &pb {
            let joint = atoms
                .iter()
                .filter(|(x, y, _)| {
                    cmp_points(x, a) == std::cmp::Ordering::Equal && cmp_points(y, b) == std::cmp::Ordering::Equal
                })
                .fold(T::zero(), |acc, (_, _, p)| acc + p.clone());
            total = total + (joint - qa.clone() * qb.clone()).abs();
        }
    }
    total / T::from_int(2)
}
