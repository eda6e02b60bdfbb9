//! Multi-marginal transport under uncertainty about which subset of components is aggregated.
//!
//! A cost `c_K(x)` is attached to every subset `K` of coordinates. An uncertainty set is a
//! family of probability measures over subsets, and the robust objective of a coupling is the
//! worst case over the family of `Σ_K μ(K)·E[c_K(X)]`.

use serde::Serialize;
use serde_json::Value;

use crate::dist::{Atom, DiscreteJoint, UnivariateDiscrete};
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpSolution, LpStatus, Relation, Sense};
use crate::mix::{equicorrelation, CovModel};
use crate::numeric::{ser, Backend, Scalar};

/// Default cap on transport LP variables (product grid size).
pub const DEFAULT_VARIABLE_CAP: usize = 200_000;

/// Sorted zero-based coordinate indices.
pub type Subset = Vec<usize>;

fn check_subset(k: &[usize], n: usize) -> Result<()> {
    if let Some(&i) = k.iter().find(|&&i| i >= n) {
        return Err(Error::BadSubset(format!("index {i} out of range for dimension {n}")));
    }
    if k.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadSubset(format!("{k:?} is not strictly increasing")));
    }
    Ok(())
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Subset> {
    (0u64..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

/// Probability weights over subsets.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct SubsetMeasure<T: Scalar> {
    pub weights: Vec<SubsetWeight<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct SubsetWeight<T: Scalar> {
    pub subset: Subset,
    #[serde(serialize_with = "ser::scalar")]
    pub weight: T,
}

impl<T: Scalar> SubsetMeasure<T> {
    pub fn new(weights: Vec<(Subset, T)>, n: usize) -> Result<Self> {
        let mut mass = T::zero();
        let mut out: Vec<SubsetWeight<T>> = Vec::with_capacity(weights.len());
        for (mut subset, weight) in weights {
            subset.sort_unstable();
            check_subset(&subset, n)?;
            if weight < T::zero() || !weight.is_finite_val() {
                return Err(Error::BadProbabilityVector(format!("weight {weight} on {subset:?}")));
            }
            mass = mass + weight.clone();
            match out.iter_mut().find(|w| w.subset == subset) {
                Some(w) => w.weight = w.weight.clone() + weight,
                None => out.push(SubsetWeight { subset, weight }),
            }
        }
        if !mass.approx_eq(&T::one(), &T::mass_tol()) {
            return Err(Error::MassNotOne { mass: mass.to_f() });
        }
        out.sort_by(|a, b| a.subset.cmp(&b.subset));
        Ok(SubsetMeasure { weights: out })
    }

    pub fn point(subset: Subset, n: usize) -> Result<Self> {
        Self::new(vec![(subset, T::one())], n)
    }

    fn permuted(&self, perm: &[usize]) -> Self {
        let mut weights: Vec<SubsetWeight<T>> = self
            .weights
            .iter()
            .map(|w| {
                let mut s: Subset = w.subset.iter().map(|&i| perm[i]).collect();
                s.sort_unstable();
                SubsetWeight { subset: s, weight: w.weight.clone() }
            })
            .collect();
        weights.sort_by(|a, b| a.subset.cmp(&b.subset));
        SubsetMeasure { weights }
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.subset == b.subset && a.weight.approx_eq(&b.weight, &T::mass_tol()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "", tag = "kind", content = "value", rename_all = "snake_case")]
pub enum UncertaintySpec<T: Scalar> {
    /// Every nonempty subset as a point mass.
    AllSubsets,
    /// Every subset of the given size as a point mass.
    FixedCardinality(usize),
    Explicit(Vec<SubsetMeasure<T>>),
}

impl<T: Scalar> UncertaintySpec<T> {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            UncertaintySpec::AllSubsets => Ok(()),
            UncertaintySpec::FixedCardinality(k) if (1..=n).contains(k) => Ok(()),
            UncertaintySpec::FixedCardinality(k) => {
                Err(Error::BadSubset(format!("cardinality {k} outside 1..={n}")))
            }
            UncertaintySpec::Explicit(ms) => {
                if ms.is_empty() {
                    return Err(Error::Empty);
                }
                for m in ms {
                    let pairs = m.weights.iter().map(|w| (w.subset.clone(), w.weight.clone())).collect();
                    SubsetMeasure::new(pairs, n)?;
                }
                Ok(())
            }
        }
    }

    pub fn measures(&self, n: usize) -> Result<Vec<SubsetMeasure<T>>> {
        self.validate(n)?;
        if n > 30 {
            return Err(Error::SizeCap { size: n, cap: 30 });
        }
        let point = |s: Subset| SubsetMeasure { weights: vec![SubsetWeight { subset: s, weight: T::one() }] };
        Ok(match self {
            UncertaintySpec::AllSubsets => (1..=n).flat_map(|k| subsets_of_size(n, k)).map(point).collect(),
            UncertaintySpec::FixedCardinality(k) => subsets_of_size(n, *k).into_iter().map(point).collect(),
            UncertaintySpec::Explicit(ms) => ms.clone(),
        })
    }

    /// Closed under coordinate permutations (checked on adjacent transpositions).
    pub fn is_symmetric(&self, n: usize) -> Result<bool> {
        let ms = match self {
            UncertaintySpec::AllSubsets | UncertaintySpec::FixedCardinality(_) => return Ok(true),
            UncertaintySpec::Explicit(ms) => ms,
        };
        self.validate(n)?;
        for k in 0..n.saturating_sub(1) {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.swap(k, k + 1);
            for m in ms {
                let q = m.permuted(&perm);
                if !ms.iter().any(|other| other.approx_eq(&q)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `all`, `card:k`, or the JSON form `{"measures": [{"weights": [{"subset": [..], "weight": ..}]}]}`.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let t = s.trim();
        let spec = if t.eq_ignore_ascii_case("all") {
            UncertaintySpec::AllSubsets
        } else if let Some(k) = t.strip_prefix("card:") {
            let k = k.trim().parse().map_err(|_| Error::Parse(format!("bad cardinality `{k}`")))?;
            UncertaintySpec::FixedCardinality(k)
        } else {
            Self::from_json(&serde_json::from_str(t)?, n)?
        };
        spec.validate(n)?;
        Ok(spec)
    }

    pub fn from_json(v: &Value, n: usize) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("uncertainty JSON: {what}"));
        let list = v.get("measures").and_then(Value::as_array).ok_or_else(|| bad("missing `measures` array"))?;
        let mut out = Vec::with_capacity(list.len());
        for m in list {
            let ws = m.get("weights").and_then(Value::as_array).ok_or_else(|| bad("missing `weights`"))?;
            let mut pairs = Vec::with_capacity(ws.len());
            for w in ws {
                let subset: Subset = w
                    .get("subset")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("missing `subset`"))?
                    .iter()
                    .map(|i| i.as_u64().map(|i| i as usize).ok_or_else(|| bad("subset entries must be indices")))
                    .collect::<Result<_>>()?;
                let weight = T::from_json(w.get("weight").ok_or_else(|| bad("missing `weight`"))?)?;
                pairs.push((subset, weight));
            }
            out.push(SubsetMeasure::new(pairs, n)?);
        }
        Ok(UncertaintySpec::Explicit(out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "", tag = "kind", rename_all = "snake_case")]
pub enum CostSpec<T: Scalar> {
    /// `c_K(x) = (Σ_{i∈K} xᵢ)²`.
    Quadratic,
    /// `c_K(x) = (Σ_{i∈K} (xᵢ − μᵢ))²`.
    Variance,
    /// `c_K(x) = −2·Σ_{i<j ∈ K} (xᵢ − xⱼ)²`.
    Harmonic,
    /// `c_K(x) = f(Σ_{i∈K} xᵢ)` with `f` tabulated at the listed sums.
    ConvexTabulated {
        #[serde(serialize_with = "ser::mat")]
        table: Vec<Vec<T>>,
    },
}

impl<T: Scalar> CostSpec<T> {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quad" | "quadratic" => Ok(CostSpec::Quadratic),
            "var" | "variance" => Ok(CostSpec::Variance),
            "harmonic" => Ok(CostSpec::Harmonic),
            other => Err(Error::Parse(format!("unknown cost `{other}`"))),
        }
    }

    /// Tabulated `f` from `(s, f(s))` pairs; slopes between consecutive points must not decrease.
    pub fn tabulated(mut points: Vec<(T, T)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty);
        }
        points.sort_by(|a, b| a.0.cmp_total(&b.0));
        if points.windows(2).any(|w| w[0].0.approx_eq(&w[1].0, &T::sign_tol())) {
            return Err(Error::Invalid("duplicate abscissa in cost table".into()));
        }
        for w in points.windows(3) {
            let s1 = (w[1].1.clone() - w[0].1.clone()) / (w[1].0.clone() - w[0].0.clone());
            let s2 = (w[2].1.clone() - w[1].1.clone()) / (w[2].0.clone() - w[1].0.clone());
            if (s1 - s2).is_pos_tol() {
                return Err(Error::Invalid("tabulated cost is not convex".into()));
            }
        }
        Ok(CostSpec::ConvexTabulated { table: points.into_iter().map(|(s, f)| vec![s, f]).collect() })
    }

    /// `c_K(x)`; `mean` is only used by the variance cost.
    pub fn pointwise(&self, x: &[T], k: &[usize], mean: &[T]) -> Result<T> {
        let sum = |f: &dyn Fn(usize) -> T| k.iter().fold(T::zero(), |a, &i| a + f(i));
        Ok(match self {
            CostSpec::Quadratic => {
                let s = sum(&|i| x[i].clone());
                s.clone() * s
            }
            CostSpec::Variance => {
                let s = sum(&|i| x[i].clone() - mean[i].clone());
                s.clone() * s
            }
            CostSpec::Harmonic => {
                let mut acc = T::zero();
                for (a, &i) in k.iter().enumerate() {
                    for &j in &k[a + 1..] {
                        let d = x[i].clone() - x[j].clone();
                        acc = acc + d.clone() * d;
                    }
                }
                -(T::from_int(2) * acc)
            }
            CostSpec::ConvexTabulated { table } => {
                let s = sum(&|i| x[i].clone());
                table
                    .iter()
                    .find(|row| row[0].approx_eq(&s, &T::sign_tol()))
                    .map(|row| row[1].clone())
                    .ok_or_else(|| Error::Invalid(format!("sum {s} is not tabulated")))?
            }
        })
    }

    fn lp_supported(&self) -> bool {
        !matches!(self, CostSpec::ConvexTabulated { .. })
    }
}

/// Worst-case value and which measure attains it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ObjectiveValue<T: Scalar> {
    #[serde(serialize_with = "ser::scalar")]
    pub value: T,
    pub argmax: SubsetMeasure<T>,
    #[serde(serialize_with = "ser::vec")]
    pub per_measure: Vec<T>,
}

fn worst_case<T: Scalar>(measures: Vec<SubsetMeasure<T>>, mut eval: impl FnMut(&[usize]) -> Result<T>) -> Result<ObjectiveValue<T>> {
    let mut per_measure = Vec::with_capacity(measures.len());
    for m in &measures {
        let mut v = T::zero();
        for w in &m.weights {
            v = v + w.weight.clone() * eval(&w.subset)?;
        }
        per_measure.push(v);
    }
    let best = (0..per_measure.len())
        .reduce(|a, b| if per_measure[b] > per_measure[a] { b } else { a })
        .ok_or(Error::Empty)?;
    Ok(ObjectiveValue { value: per_measure[best].clone(), argmax: measures[best].clone(), per_measure })
}

/// Robust objective of a discrete coupling.
pub fn objective<T: Scalar>(d: &DiscreteJoint<T>, cost: &CostSpec<T>, unc: &UncertaintySpec<T>) -> Result<ObjectiveValue<T>> {
    let mean = d.mean();
    worst_case(unc.measures(d.dim())?, |k| {
        let mut acc = T::zero();
        for a in d.atoms() {
            acc = acc + a.p.clone() * cost.pointwise(&a.x, k, &mean)?;
        }
        Ok(acc)
    })
}

/// `E[(Σ_{i∈K} Xᵢ)²] = (1_Kᵀμ)² + 1_KᵀΣ1_K`.
pub fn quad_from_moments<T: Scalar>(mean: &[T], cov: &[Vec<T>], k: &[usize]) -> Result<T> {
    let n = mean.len();
    if cov.len() != n || cov.iter().any(|r| r.len() != n) {
        return Err(Error::DimMismatch { expected: n, found: cov.len() });
    }
    let mut k = k.to_vec();
    k.sort_unstable();
    check_subset(&k, n)?;
    let m = k.iter().fold(T::zero(), |a, &i| a + mean[i].clone());
    let mut q = T::zero();
    for &i in &k {
        for &j in &k {
            q = q + cov[i][j].clone();
        }
    }
    Ok(m.clone() * m + q)
}

/// Robust objective evaluated from the first two moments.
pub fn objective_from_moments<T: Scalar>(
    mean: &[T],
    cov: &[Vec<T>],
    cost: &CostSpec<T>,
    unc: &UncertaintySpec<T>,
) -> Result<ObjectiveValue<T>> {
    if !cost.lp_supported() {
        return Err(Error::Invalid("tabulated costs need a discrete distribution".into()));
    }
    worst_case(unc.measures(mean.len())?, |k| {
        let quad = quad_from_moments(mean, cov, k)?;
        Ok(match cost {
            CostSpec::Quadratic => quad,
            CostSpec::Variance => {
                let m = k.iter().fold(T::zero(), |a, &i| a + mean[i].clone());
                quad - m.clone() * m
            }
            CostSpec::Harmonic => {
                let second = k
                    .iter()
                    .fold(T::zero(), |a, &i| a + cov[i][i].clone() + mean[i].clone() * mean[i].clone());
                let two = T::from_int(2);
                two.clone() * quad - two * T::from_int(k.len() as i64) * second
            }
            CostSpec::ConvexTabulated { .. } => unreachable!(),
        })
    })
}

/// Quadratic cost of subset `K` for a covariance model.
pub fn cost_from_cov(model: &CovModel, k: &[usize]) -> Result<f64> {
    quad_from_moments(&model.mean, &model.cov, k)
}

/// Robust objective of a covariance model.
pub fn objective_cov(model: &CovModel, cost: &CostSpec<f64>, unc: &UncertaintySpec<f64>) -> Result<ObjectiveValue<f64>> {
    objective_from_moments(&model.mean, &model.cov, cost, unc)
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct SubsetCost<T: Scalar> {
    pub subset: Subset,
    #[serde(serialize_with = "ser::scalar")]
    pub cost: T,
}

#[derive(Debug, Clone)]
pub struct TransportSolution<T: Scalar> {
    pub coupling: DiscreteJoint<T>,
    pub value: T,
    /// `E[c_K]` under the optimal coupling for every subset carried by the uncertainty set.
    pub per_subset_costs: Vec<SubsetCost<T>>,
    pub corr: Vec<Vec<Option<f64>>>,
    pub backend: Backend,
    pub variables: usize,
    pub iterations: usize,
}

impl<T: Scalar> TransportSolution<T> {
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "value": self.value.to_json(),
            "coupling": self.coupling.to_json(),
            "per_subset_costs": self.per_subset_costs,
            "corr": self.corr,
            "backend": self.backend,
            "variables": self.variables,
            "lp_iterations": self.iterations,
        })
    }
}

/// Product grid of the marginals in row-major order (last coordinate fastest).
struct Grid<'a, T: Scalar> {
    marginals: &'a [UnivariateDiscrete<T>],
    size: usize,
}

impl<'a, T: Scalar> Grid<'a, T> {
    fn new(marginals: &'a [UnivariateDiscrete<T>], cap: usize) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::Empty);
        }
        let size = marginals.iter().try_fold(1usize, |a, m| a.checked_mul(m.len()));
        match size {
            Some(s) if s <= cap => Ok(Grid { marginals, size: s }),
            _ => Err(Error::SizeCap {
                size: size.unwrap_or(usize::MAX),
                cap,
            }),
        }
    }

    fn digits(&self, mut pos: usize) -> Vec<usize> {
        let mut out = vec![0; self.marginals.len()];
        for (i, m) in self.marginals.iter().enumerate().rev() {
            out[i] = pos % m.len();
            pos /= m.len();
        }
        out
    }

    fn point(&self, digits: &[usize]) -> Vec<T> {
        digits.iter().zip(self.marginals).map(|(&j, m)| m.support()[j].clone()).collect()
    }

    /// One equality row per support point of each marginal over the selected grid points.
    fn marginal_rows(&self, cols: &[Vec<usize>], width: usize) -> Vec<(Vec<T>, T)> {
        let mut rows = Vec::new();
        for (i, m) in self.marginals.iter().enumerate() {
            for (j, p) in m.probs().iter().enumerate() {
                let mut row = vec![T::zero(); width];
                for (c, d) in cols.iter().enumerate() {
                    if d[i] == j {
                        row[c] = T::one();
                    }
                }
                rows.push((row, p.clone()));
            }
        }
        rows
    }
}

fn solve_any<T: Scalar>(p: &LpProblem<T>) -> Result<LpSolution<T>> {
    match T::BACKEND {
        Backend::Rational => lp::solve(p),
        Backend::Float => {
            let f: LpProblem<f64> = p.map_scalar(Scalar::to_f);
            let s = lp::solve_checked(&f)?;
            let back = |v: &f64| T::from_f64(*v).unwrap_or_else(T::zero);
            Ok(LpSolution {
                status: s.status,
                value: back(&s.value),
                primal: s.primal.iter().map(back).collect(),
                dual: s.dual.iter().map(back).collect(),
                reduced_costs: s.reduced_costs.iter().map(back).collect(),
                iterations: s.iterations,
                infeasibility: back(&s.infeasibility),
            })
        }
    }
}

fn coupling_from<T: Scalar>(grid: &Grid<T>, cols: &[Vec<usize>], weights: &[T]) -> Result<DiscreteJoint<T>> {
    let atoms: Vec<Atom<T>> = cols
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > T::zero())
        .map(|(d, w)| Atom::new(grid.point(d), w.clone()))
        .collect();
    let total = atoms.iter().fold(T::zero(), |a, at| a + at.p.clone());
    // float vertices may carry round-off in the total mass
    let atoms = if T::BACKEND == Backend::Float {
        atoms.into_iter().map(|a| Atom::new(a.x, a.p / total.clone())).collect()
    } else {
        atoms
    };
    DiscreteJoint::new(grid.marginals.len(), atoms)
}

/// Minimizes the robust objective over all couplings of `marginals`.
pub fn solve_minimax<T: Scalar>(
    marginals: &[UnivariateDiscrete<T>],
    unc: &UncertaintySpec<T>,
    cost: &CostSpec<T>,
    cap: usize,
) -> Result<TransportSolution<T>> {
    if !cost.lp_supported() {
        return Err(Error::Invalid("the minimax LP supports quadratic, variance and harmonic costs".into()));
    }
    let grid = Grid::new(marginals, cap)?;
    let n = marginals.len();
    let measures = unc.measures(n)?;
    let mean: Vec<T> = marginals.iter().map(UnivariateDiscrete::mean).collect();
    let cols: Vec<Vec<usize>> = (0..grid.size).map(|pos| grid.digits(pos)).collect();
    let width = grid.size + 1;
    let mut p = LpProblem::new(width, Sense::Minimize);
    let mut obj = vec![T::zero(); width];
    obj[grid.size] = T::one();
    p.set_objective(obj);
    p.set_bounds(grid.size, None, None);
    for (row, rhs) in grid.marginal_rows(&cols, width) {
        p.add_constraint(row, Relation::Eq, rhs);
    }
    let points: Vec<Vec<T>> = cols.iter().map(|d| grid.point(d)).collect();
    for m in &measures {
        let mut row = vec![T::zero(); width];
        for (c, x) in points.iter().enumerate() {
            let mut v = T::zero();
            for w in &m.weights {
                v = v + w.weight.clone() * cost.pointwise(x, &w.subset, &mean)?;
            }
            row[c] = v;
        }
        row[grid.size] = -T::one();
        p.add_constraint(row, Relation::Le, T::zero());
    }
    let s = solve_any(&p)?;
    match s.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpInfeasible),
        LpStatus::Unbounded => return Err(Error::LpFailure("transport LP reported unbounded".into())),
    }
    let coupling = coupling_from(&grid, &cols, &s.primal[..grid.size])?;
    let mut subsets: Vec<Subset> = measures.iter().flat_map(|m| m.weights.iter().map(|w| w.subset.clone())).collect();
    subsets.sort();
    subsets.dedup();
    let per_subset_costs = subsets
        .into_iter()
        .map(|k| {
            let mut c = T::zero();
            for a in coupling.atoms() {
                c = c + a.p.clone() * cost.pointwise(&a.x, &k, &mean)?;
            }
            Ok(SubsetCost { subset: k, cost: c })
        })
        .collect::<Result<_>>()?;
    let corr = coupling.moments().corr;
    Ok(TransportSolution {
        value: s.primal[grid.size].clone(),
        coupling,
        per_subset_costs,
        corr,
        backend: T::BACKEND,
        variables: width,
        iterations: s.iterations,
    })
}

#[derive(Debug, Clone)]
pub struct JmFeasibility<T: Scalar> {
    pub jointly_mixable: bool,
    pub center: T,
    /// A joint-mix coupling when one exists.
    pub coupling: Option<DiscreteJoint<T>>,
    /// Phase-1 residual mass when no joint-mix coupling exists.
    pub infeasibility: Option<T>,
    /// Grid points whose coordinates sum to the center.
    pub candidate_points: usize,
}

impl<T: Scalar> JmFeasibility<T> {
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "jointly_mixable": self.jointly_mixable,
            "center": self.center.to_json(),
            "coupling": self.coupling.as_ref().map(DiscreteJoint::to_json),
            "infeasibility": self.infeasibility.as_ref().map(Scalar::to_json),
            "candidate_points": self.candidate_points,
            "backend": T::BACKEND,
        })
    }
}

/// Searches for a coupling supported on `{Σxᵢ = Σ means}`.
pub fn solve_jm_feasibility<T: Scalar>(marginals: &[UnivariateDiscrete<T>], cap: usize) -> Result<JmFeasibility<T>> {
    let grid = Grid::new(marginals, cap)?;
    let center = marginals.iter().fold(T::zero(), |a, m| a + m.mean());
    let cols: Vec<Vec<usize>> = (0..grid.size)
        .map(|pos| grid.digits(pos))
        .filter(|d| {
            let s = grid.point(d).into_iter().fold(T::zero(), |a, b| a + b);
            s.approx_eq(&center, &T::jm_tol())
        })
        .collect();
    let candidate_points = cols.len();
    if cols.is_empty() {
        // no admissible point: every marginal equality is violated by its full mass
        return Ok(JmFeasibility {
            jointly_mixable: false,
            center,
            coupling: None,
            infeasibility: Some(T::from_int(marginals.len() as i64)),
            candidate_points,
        });
    }
    let width = cols.len();
    let mut p = LpProblem::new(width, Sense::Minimize);
    p.set_objective(vec![T::zero(); width]);
    for (row, rhs) in grid.marginal_rows(&cols, width) {
        p.add_constraint(row, Relation::Eq, rhs);
    }
    let s = solve_any(&p)?;
    Ok(match s.status {
        LpStatus::Optimal => JmFeasibility {
            jointly_mixable: true,
            center,
            coupling: Some(coupling_from(&grid, &cols, &s.primal)?),
            infeasibility: None,
            candidate_points,
        },
        _ => JmFeasibility {
            jointly_mixable: false,
            center,
            coupling: None,
            infeasibility: Some(s.infeasibility),
            candidate_points,
        },
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct SymmetrizationCheck<T: Scalar> {
    /// Robust objective of the input.
    #[serde(serialize_with = "ser::scalar")]
    pub lhs: T,
    /// Robust objective of its symmetrization.
    #[serde(serialize_with = "ser::scalar")]
    pub rhs: T,
    pub improved: bool,
}

/// Compares the robust objective of a joint mix with that of its symmetrization.
pub fn verify_symmetrization_improvement<T: Scalar>(
    d: &DiscreteJoint<T>,
    unc: &UncertaintySpec<T>,
    cost: &CostSpec<T>,
) -> Result<SymmetrizationCheck<T>> {
    if !d.is_joint_mix(&T::jm_tol()).is_yes() {
        return Err(Error::NotJointMix);
    }
    let marg = d.marginals();
    let same = marg.iter().all(|m| {
        m.len() == marg[0].len()
            && m.support().iter().zip(marg[0].support()).all(|(a, b)| a.approx_eq(b, &T::sign_tol()))
            && m.probs().iter().zip(marg[0].probs()).all(|(a, b)| a.approx_eq(b, &T::mass_tol()))
    });
    if !same {
        return Err(Error::PreconditionFailed("marginals are not identical".into()));
    }
    if !unc.is_symmetric(d.dim())? {
        return Err(Error::NotSymmetricUncertainty);
    }
    let lhs = objective(d, cost, unc)?.value;
    let rhs = objective(&d.symmetrize(), cost, unc)?.value;
    let improved = !(rhs.clone() - lhs.clone()).is_pos_tol();
    Ok(SymmetrizationCheck { lhs, rhs, improved })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThmOptCase {
    /// `"all"` or `"card:k"`.
    pub uncertainty: String,
    pub value: f64,
    pub expected_value: Option<f64>,
    /// Largest entrywise distance of the minimizer's correlation from `P*_n`.
    pub corr_max_dev: Option<f64>,
    /// False for cardinalities where every joint mix is optimal, so no correlation is asserted.
    pub unique_corr_expected: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThmOptReport {
    pub n: usize,
    pub variance: f64,
    pub cases: Vec<ThmOptCase>,
    pub all_passed: bool,
}

fn corr_deviation(corr: &[Vec<Option<f64>>], target: &[Vec<f64>]) -> f64 {
    let mut dev: f64 = 0.0;
    for (i, row) in corr.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if let Some(c) = c {
                dev = dev.max((c - target[i][j]).abs());
            }
        }
    }
    dev
}

/// Solves the minimax LP for `n` copies of `marginal` and compares with the equicorrelated optimum.
pub fn verify_thm_opt<T: Scalar>(marginal: &UnivariateDiscrete<T>, n: usize, k_values: &[usize], tol: f64) -> Result<ThmOptReport> {
    if n < 3 {
        return Err(Error::PreconditionFailed("needs n ≥ 3".into()));
    }
    if !marginal.mean().is_zero_tol() {
        return Err(Error::PreconditionFailed("marginal must have zero mean".into()));
    }
    let var = marginal.variance();
    if !var.is_pos_tol() {
        return Err(Error::PreconditionFailed("marginal must have positive variance".into()));
    }
    let copies = vec![marginal.clone(); n];
    if !solve_jm_feasibility(&copies, DEFAULT_VARIABLE_CAP)?.jointly_mixable {
        return Err(Error::PreconditionFailed("marginal is not n-completely mixable".into()));
    }
    let var = var.to_f();
    let target: Vec<Vec<f64>> = equicorrelation(n)?;
    let scaled = |k: usize| (k * (n - k)) as f64 / (n - 1) as f64 * var;
    let mut cases = Vec::new();
    let mut specs: Vec<(String, UncertaintySpec<T>, Option<usize>)> = vec![("all".into(), UncertaintySpec::AllSubsets, None)];
    for &k in k_values {
        specs.push((format!("card:{k}"), UncertaintySpec::FixedCardinality(k), Some(k)));
    }
    for (label, unc, k) in specs {
        let sol = solve_minimax(&copies, &unc, &CostSpec::Quadratic, DEFAULT_VARIABLE_CAP)?;
        let value = sol.value.to_f();
        let (expected_value, unique) = match k {
            None => (Some(scaled(n / 2)), true),
            Some(k) if k == 1 || k + 1 == n || k == n => (None, false),
            Some(k) => (Some(scaled(k)), true),
        };
        let corr_max_dev = unique.then(|| corr_deviation(&sol.corr, &target));
        let passed = expected_value.is_none_or(|e| (value - e).abs() <= tol) && corr_max_dev.is_none_or(|d| d <= tol);
        cases.push(ThmOptCase { uncertainty: label, value, expected_value, corr_max_dev, unique_corr_expected: unique, passed });
    }
    let all_passed = cases.iter().all(|c| c.passed);
    Ok(ThmOptReport { n, variance: var, cases, all_passed })
}

/// Observations for heterogeneous marginals in dimensions where no optimality theory is
/// available. Nothing here is asserted.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub variances: Vec<f64>,
    pub jointly_mixable: bool,
    pub lp_value: f64,
    pub max_variance: f64,
    /// Whether the LP optimum coincides with the largest variance.
    pub value_equals_max_variance: bool,
    /// Whether the LP minimizer has all pairwise correlations ≤ 0.
    pub minimizer_is_ncd: bool,
    /// Robust objective of the joint-mix coupling found by the feasibility LP, if any.
    pub jm_coupling_value: Option<f64>,
}

pub fn experiment_heterogeneous<T: Scalar>(marginals: &[UnivariateDiscrete<T>], cap: usize) -> Result<ExperimentRecord> {
    let unc = UncertaintySpec::AllSubsets;
    let sol = solve_minimax(marginals, &unc, &CostSpec::Quadratic, cap)?;
    let feas = solve_jm_feasibility(marginals, cap)?;
    let variances: Vec<f64> = marginals.iter().map(|m| m.variance().to_f()).collect();
    let max_variance = variances.iter().cloned().fold(0.0, f64::max);
    let lp_value = sol.value.to_f();
    let cov = sol.coupling.moments().cov;
    let minimizer_is_ncd = (0..cov.len()).all(|i| (0..i).all(|j| !cov[i][j].is_pos_tol()));
    let jm_coupling_value = match &feas.coupling {
        Some(c) => Some(objective(c, &CostSpec::Quadratic, &unc)?.value.to_f()),
        None => None,
    };
    Ok(ExperimentRecord {
        n: marginals.len(),
        variances,
        jointly_mixable: feas.jointly_mixable,
        lp_value,
        max_variance,
        value_equals_max_variance: (lp_value - max_variance).abs() <= 1e-9,
        minimizer_is_ncd,
        jm_coupling_value,
    })
}

/// Marginals from `{"marginals": [{"support": [..], "probs": [..]}, ..]}` or
/// `{"identical": {"support": [..], "probs": [..]}, "n": k}`.
pub fn marginals_from_json<T: Scalar>(v: &Value) -> Result<Vec<UnivariateDiscrete<T>>> {
    let one = |m: &Value| -> Result<UnivariateDiscrete<T>> {
        let field = |name: &str| -> Result<Vec<T>> {
            m.get(name)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse(format!("marginal is missing `{name}`")))?
                .iter()
                .map(T::from_json)
                .collect()
        };
        UnivariateDiscrete::new(field("support")?, field("probs")?)
    };
    if let Some(list) = v.get("marginals").and_then(Value::as_array) {
        return list.iter().map(one).collect();
    }
    if let Some(m) = v.get("identical") {
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("`identical` needs a count `n`".into()))?;
        return Ok(vec![one(m)?; n as usize]);
    }
    Err(Error::Parse("expected `marginals` or `identical`".into()))
}
