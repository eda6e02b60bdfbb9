//! Finite discrete joint distributions on ℝⁿ.
//!
//! A [`DiscreteJoint`] is always kept in canonical form: atoms sorted
//! lexicographically, duplicate points merged, zero-mass atoms dropped.
//! Two canonical distributions are equal iff their atom lists agree.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ser, Backend, Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom<T> {
    pub x: Vec<T>,
    pub p: T,
}

impl<T> Atom<T> {
    pub fn new(x: Vec<T>, p: T) -> Self {
        Atom { x, p }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint<T> {
    dim: usize,
    atoms: Vec<Atom<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct UnivariateDiscrete<T: Scalar> {
    #[serde(serialize_with = "ser::vec")]
    support: Vec<T>,
    #[serde(serialize_with = "ser::vec")]
    probs: Vec<T>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "")]
pub struct MomentSummary<T: Scalar> {
    #[serde(serialize_with = "ser::vec")]
    pub mean: Vec<T>,
    #[serde(serialize_with = "ser::mat")]
    pub cov: Vec<Vec<T>>,
    /// `None` where one of the two variances is zero.
    pub corr: Vec<Vec<Option<f64>>>,
}

/// Outcome of the constant-sum test.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "", tag = "result", rename_all = "snake_case")]
pub enum JmVerdict<T: Scalar> {
    Yes {
        #[serde(serialize_with = "ser::scalar")]
        center: T,
    },
    No {
        #[serde(serialize_with = "ser::vec")]
        atom_a: Vec<T>,
        #[serde(serialize_with = "ser::vec")]
        atom_b: Vec<T>,
        #[serde(serialize_with = "ser::vec")]
        sums: Vec<T>,
    },
}

impl<T: Scalar> JmVerdict<T> {
    pub fn is_yes(&self) -> bool {
        matches!(self, JmVerdict::Yes { .. })
    }

    pub fn center(&self) -> Option<&T> {
        match self {
            JmVerdict::Yes { center } => Some(center),
            JmVerdict::No { .. } => None,
        }
    }
}

pub(crate) fn cmp_points<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp_total(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Checks the invariants and returns the canonical form.
pub fn validate<T: Scalar>(dim: usize, atoms: Vec<Atom<T>>) -> Result<DiscreteJoint<T>> {
    if dim == 0 {
        return Err(Error::DimMismatch { expected: 1, found: 0 });
    }
    if atoms.is_empty() {
        return Err(Error::Empty);
    }
    let mut mass = T::zero();
    for (index, a) in atoms.iter().enumerate() {
        if a.x.len() != dim {
            return Err(Error::DimMismatch { expected: dim, found: a.x.len() });
        }
        if !a.p.is_finite_val() || a.x.iter().any(|v| !v.is_finite_val()) {
            return Err(Error::NonFinite);
        }
        if a.p < T::zero() {
            return Err(Error::NegativeProb { index, prob: a.p.to_f() });
        }
        mass = mass + a.p.clone();
    }
    if !mass.approx_eq(&T::one(), &T::mass_tol()) {
        return Err(Error::MassNotOne { mass: mass.to_f() });
    }
    Ok(DiscreteJoint::from_parts_unchecked(dim, atoms))
}

impl<T: Scalar> DiscreteJoint<T> {
    pub fn new(dim: usize, atoms: Vec<Atom<T>>) -> Result<Self> {
        validate(dim, atoms)
    }

    /// Builds from `(point, prob)` pairs; the dimension is taken from the first point.
    pub fn from_pairs(pairs: Vec<(Vec<T>, T)>) -> Result<Self> {
        let dim = pairs.first().map(|(x, _)| x.len()).ok_or(Error::Empty)?;
        validate(dim, pairs.into_iter().map(|(x, p)| Atom::new(x, p)).collect())
    }

    /// Uniform distribution on the given points (duplicates accumulate mass).
    pub fn uniform(points: Vec<Vec<T>>) -> Result<Self> {
        let k = points.len();
        if k == 0 {
            return Err(Error::Empty);
        }
        let p = T::one() / T::from_int(k as i64);
        Self::from_pairs(points.into_iter().map(|x| (x, p.clone())).collect())
    }

    pub fn point_mass(x: Vec<T>) -> Result<Self> {
        Self::from_pairs(vec![(x, T::one())])
    }

    /// Canonicalizes without the mass check. Used for mixtures whose mass is 1 by construction.
    pub(crate) fn from_parts_unchecked(dim: usize, mut atoms: Vec<Atom<T>>) -> Self {
        atoms.retain(|a| a.p > T::zero());
        atoms.sort_by(|a, b| cmp_points(&a.x, &b.x));
        let mut merged: Vec<Atom<T>> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if cmp_points(&last.x, &a.x) == Ordering::Equal => {
                    last.p = last.p.clone() + a.p;
                }
                _ => merged.push(a),
            }
        }
        DiscreteJoint { dim, atoms: merged }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn backend(&self) -> Backend {
        T::BACKEND
    }

    pub fn prob_of(&self, x: &[T]) -> T {
        self.atoms
            .binary_search_by(|a| cmp_points(&a.x, x))
            .map(|i| self.atoms[i].p.clone())
            .unwrap_or_else(|_| T::zero())
    }

    pub fn marginal(&self, i: usize) -> Result<UnivariateDiscrete<T>> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange { index: i, dim: self.dim });
        }
        let mut pairs: Vec<(T, T)> = self.atoms.iter().map(|a| (a.x[i].clone(), a.p.clone())).collect();
        pairs.sort_by(|a, b| a.0.cmp_total(&b.0));
        let mut support: Vec<T> = Vec::new();
        let mut probs: Vec<T> = Vec::new();
        for (v, p) in pairs {
            if support.last().is_some_and(|s| s.cmp_total(&v) == Ordering::Equal) {
                let last = probs.last_mut().unwrap();
                *last = last.clone() + p;
            } else {
                support.push(v);
                probs.push(p);
            }
        }
        Ok(UnivariateDiscrete { support, probs })
    }

    pub fn marginals(&self) -> Vec<UnivariateDiscrete<T>> {
        (0..self.dim).map(|i| self.marginal(i).expect("index in range")).collect()
    }

    /// Distribution of the vector with independent components and the same marginals.
    pub fn product_independent(&self) -> Self {
        product_of(&self.marginals())
    }

    /// Distribution of `(X_{π(1)}, …, X_{π(n)})` (zero-based indices).
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.dim)?;
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom::new(perm.iter().map(|&j| a.x[j].clone()).collect(), a.p.clone()))
            .collect();
        Ok(Self::from_parts_unchecked(self.dim, atoms))
    }

    /// Uniform mixture over all coordinate permutations.
    pub fn symmetrize(&self) -> Self {
        let perms = permutations(self.dim);
        let w = T::one() / T::from_int(perms.len() as i64);
        let mut atoms = Vec::with_capacity(self.atoms.len() * perms.len());
        for a in &self.atoms {
            let p = a.p.clone() * w.clone();
            for perm in &perms {
                atoms.push(Atom::new(perm.iter().map(|&j| a.x[j].clone()).collect(), p.clone()));
            }
        }
        Self::from_parts_unchecked(self.dim, atoms)
    }

    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim];
        for a in &self.atoms {
            for (mi, xi) in m.iter_mut().zip(&a.x) {
                *mi = mi.clone() + a.p.clone() * xi.clone();
            }
        }
        m
    }

    pub fn moments(&self) -> MomentSummary<T> {
        let n = self.dim;
        let mean = self.mean();
        let mut cov = vec![vec![T::zero(); n]; n];
        for a in &self.atoms {
            let c: Vec<T> = a.x.iter().zip(&mean).map(|(x, m)| x.clone() - m.clone()).collect();
            for i in 0..n {
                for j in i..n {
                    cov[i][j] = cov[i][j].clone() + a.p.clone() * c[i].clone() * c[j].clone();
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                cov[i][j] = cov[j][i].clone();
            }
        }
        let corr = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let (vi, vj) = (cov[i][i].to_f(), cov[j][j].to_f());
                        if cov[i][i].is_zero_tol() || cov[j][j].is_zero_tol() {
                            None
                        } else if i == j {
                            Some(1.0)
                        } else {
                            Some(cov[i][j].to_f() / (vi * vj).sqrt())
                        }
                    })
                    .collect()
            })
            .collect();
        MomentSummary { mean, cov, corr }
    }

    pub fn atom_sum(a: &Atom<T>) -> T {
        a.x.iter().fold(T::zero(), |s, v| s + v.clone())
    }

    /// Joint-mix test: all atom coordinate sums agree within `tol`.
    pub fn is_joint_mix(&self, tol: &T) -> JmVerdict<T> {
        let sums: Vec<T> = self.atoms.iter().map(Self::atom_sum).collect();
        let (mut lo, mut hi) = (0usize, 0usize);
        for (k, s) in sums.iter().enumerate() {
            if *s < sums[lo] {
                lo = k;
            }
            if *s > sums[hi] {
                hi = k;
            }
        }
        if (sums[hi].clone() - sums[lo].clone()) <= *tol {
            // probability-weighted center, exact for rationals
            let center = self
                .atoms
                .iter()
                .zip(&sums)
                .fold(T::zero(), |acc, (a, s)| acc + a.p.clone() * s.clone());
            JmVerdict::Yes { center }
        } else {
            JmVerdict::No {
                atom_a: self.atoms[lo].x.clone(),
                atom_b: self.atoms[hi].x.clone(),
                sums: vec![sums[lo].clone(), sums[hi].clone()],
            }
        }
    }

    /// Invariance under the n−1 adjacent transpositions, which generate the symmetric group.
    pub fn is_exchangeable(&self, tol: &T) -> bool {
        (0..self.dim.saturating_sub(1)).all(|k| {
            let mut perm: Vec<usize> = (0..self.dim).collect();
            perm.swap(k, k + 1);
            let q = self.permute(&perm).expect("valid transposition");
            self.approx_eq(&q, tol)
        })
    }

    /// Same support points and probabilities within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: &T) -> bool {
        self.dim == other.dim
            && self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| {
                a.x.iter().zip(&b.x).all(|(u, v)| u.approx_eq(v, tol)) && a.p.approx_eq(&b.p, tol)
            })
    }

    /// Mixture `Σ w_k d_k`; weights must sum to one.
    pub fn mixture(parts: &[(T, &DiscreteJoint<T>)]) -> Result<Self> {
        let dim = parts.first().ok_or(Error::Empty)?.1.dim;
        let mut atoms = Vec::new();
        for (w, d) in parts {
            if d.dim != dim {
                return Err(Error::DimMismatch { expected: dim, found: d.dim });
            }
            for a in &d.atoms {
                atoms.push(Atom::new(a.x.clone(), w.clone() * a.p.clone()));
            }
        }
        validate(dim, atoms)
    }

    /// Expectation of a function of the point.
    pub fn expect(&self, f: impl Fn(&[T]) -> T) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |acc, a| acc + a.p.clone() * f(&a.x))
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> DiscreteJoint<U> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom::new(a.x.iter().map(&f).collect(), f(&a.p)))
            .collect();
        DiscreteJoint::from_parts_unchecked(self.dim, atoms)
    }

    pub fn to_f64(&self) -> DiscreteJoint<f64> {
        self.map_scalar(|v| v.to_f())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "atoms": self.atoms.iter().map(|a| serde_json::json!({
                "x": a.x.iter().map(Scalar::to_json).collect::<Vec<_>>(),
                "p": a.p.to_json(),
            })).collect::<Vec<_>>(),
            "number_mode": T::BACKEND,
        })
    }
}

impl<T: Scalar> UnivariateDiscrete<T> {
    pub fn new(support: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::DimMismatch { expected: support.len(), found: probs.len() });
        }
        if support.is_empty() {
            return Err(Error::Empty);
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("support must be strictly increasing".into()));
        }
        if support.iter().chain(&probs).any(|v| !v.is_finite_val()) {
            return Err(Error::NonFinite);
        }
        if let Some((index, p)) = probs.iter().enumerate().find(|(_, p)| **p < T::zero()) {
            return Err(Error::NegativeProb { index, prob: p.to_f() });
        }
        let mass = probs.iter().fold(T::zero(), |a, p| a + p.clone());
        if !mass.approx_eq(&T::one(), &T::mass_tol()) {
            return Err(Error::MassNotOne { mass: mass.to_f() });
        }
        Ok(UnivariateDiscrete { support, probs })
    }

    /// Uniform on the given values (sorted and deduplicated).
    pub fn uniform(mut values: Vec<T>) -> Result<Self> {
        values.sort_by(|a, b| a.cmp_total(b));
        values.dedup_by(|a, b| a.cmp_total(b) == Ordering::Equal);
        let k = values.len().max(1);
        let p = T::one() / T::from_int(k as i64);
        Self::new(values, vec![p; k])
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> T {
        self.support
            .iter()
            .zip(&self.probs)
            .fold(T::zero(), |a, (x, p)| a + x.clone() * p.clone())
    }

    pub fn second_moment(&self) -> T {
        self.support
            .iter()
            .zip(&self.probs)
            .fold(T::zero(), |a, (x, p)| a + x.clone() * x.clone() * p.clone())
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.second_moment() - m.clone() * m
    }

    /// `P(X ≤ t)`.
    pub fn cdf(&self, t: &T) -> T {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(x, _)| *x <= t)
            .fold(T::zero(), |a, (_, p)| a + p.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "support": self.support.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "probs": self.probs.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Product measure of the given marginals.
pub fn product_of<T: Scalar>(marginals: &[UnivariateDiscrete<T>]) -> DiscreteJoint<T> {
    let dim = marginals.len();
    let mut atoms = vec![Atom::new(Vec::with_capacity(dim), T::one())];
    for m in marginals {
        let mut next = Vec::with_capacity(atoms.len() * m.len());
        for a in &atoms {
            for (v, p) in m.support.iter().zip(&m.probs) {
                let mut x = a.x.clone();
                x.push(v.clone());
                next.push(Atom::new(x, a.p.clone() * p.clone()));
            }
        }
        atoms = next;
    }
    DiscreteJoint::from_parts_unchecked(dim, atoms)
}

/// Multinomial distribution with `k` trials and cell probabilities `p`.
pub fn make_multinomial<T: Scalar>(k: u32, p: &[T]) -> Result<DiscreteJoint<T>> {
    if k == 0 {
        return Err(Error::BadProbabilityVector("number of trials must be at least 1".into()));
    }
    if p.is_empty() {
        return Err(Error::BadProbabilityVector("empty probability vector".into()));
    }
    if p.iter().any(|v| *v < T::zero() || !v.is_finite_val()) {
        return Err(Error::BadProbabilityVector("negative or non-finite entry".into()));
    }
    let total = p.iter().fold(T::zero(), |a, v| a + v.clone());
    if !total.approx_eq(&T::one(), &T::mass_tol()) {
        return Err(Error::BadProbabilityVector(format!("entries sum to {}", total.to_f())));
    }
    let n = p.len();
    let mut atoms = Vec::new();
    let mut counts = vec![0u32; n];
    compositions(k, 0, &mut counts, &mut |c| {
        // k! / Π c_i! · Π p_i^{c_i}, accumulated in T
        let mut prob = T::one();
        let mut remaining = k;
        for (i, &ci) in c.iter().enumerate() {
            prob = prob * binomial::<T>(remaining, ci);
            remaining -= ci;
            for _ in 0..ci {
                prob = prob * p[i].clone();
            }
        }
        atoms.push(Atom::new(c.iter().map(|&v| T::from_int(v as i64)).collect(), prob));
    });
    Ok(DiscreteJoint::from_parts_unchecked(n, atoms))
}

fn binomial<T: Scalar>(n: u32, k: u32) -> T {
    let mut r = T::one();
    for i in 0..k {
        r = r * T::from_int((n - i) as i64) / T::from_int((i + 1) as i64);
    }
    r
}

fn compositions(total: u32, pos: usize, counts: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    let n = counts.len();
    if pos == n - 1 {
        counts[pos] = total;
        f(counts);
        return;
    }
    for c in 0..=total {
        counts[pos] = c;
        compositions(total - c, pos + 1, counts, f);
    }
}

/// Uniform distribution over all coordinate permutations of `a`.
pub fn make_orbit_uniform<T: Scalar>(a: &[T]) -> Result<DiscreteJoint<T>> {
    Ok(DiscreteJoint::point_mass(a.to_vec())?.symmetrize())
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::BadPermutation(perm.len()));
    }
    let mut seen = vec![false; n];
    for &j in perm {
        if j >= n || seen[j] {
            return Err(Error::BadPermutation(n));
        }
        seen[j] = true;
    }
    Ok(())
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// JSON wire format: `{"dim": n, "atoms": [{"x": [..], "p": ..}], "number_mode": "float"|"rational"}`.
#[derive(Debug, Clone, Deserialize)]
pub struct DiscreteJointJson {
    pub dim: Option<usize>,
    pub atoms: Vec<AtomJson>,
    #[serde(default)]
    pub number_mode: Option<Backend>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AtomJson {
    pub x: Vec<serde_json::Value>,
    pub p: serde_json::Value,
}

impl DiscreteJointJson {
    pub fn build<T: Scalar>(&self) -> Result<DiscreteJoint<T>> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let x = a.x.iter().map(T::from_json).collect::<Result<Vec<_>>>()?;
            atoms.push(Atom::new(x, T::from_json(&a.p)?));
        }
        let dim = match self.dim {
            Some(d) => d,
            None => atoms.first().map(|a| a.x.len()).ok_or(Error::Empty)?,
        };
        validate(dim, atoms)
    }
}

/// A distribution in either numeric backend.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyJoint {
    Float(DiscreteJoint<f64>),
    Rational(DiscreteJoint<Rational>),
}

impl AnyJoint {
    /// Parses the JSON wire format. `mode` overrides the file's `number_mode`.
    pub fn from_json_str(s: &str, mode: Option<Backend>) -> Result<Self> {
        let raw: DiscreteJointJson = serde_json::from_str(s)?;
        match mode.or(raw.number_mode).unwrap_or(Backend::Float) {
            Backend::Float => Ok(AnyJoint::Float(raw.build()?)),
            Backend::Rational => Ok(AnyJoint::Rational(raw.build()?)),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            AnyJoint::Float(d) => d.to_json(),
            AnyJoint::Rational(d) => d.to_json(),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            AnyJoint::Float(_) => Backend::Float,
            AnyJoint::Rational(_) => Backend::Rational,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    fn r(n: i64, d: i64) -> Rational {
        ratio(n, d)
    }

    fn ri(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| r(x, 1)).collect()
    }

    #[test]
    fn validate_point_mass() {
        let d = DiscreteJoint::from_pairs(vec![(vec![0.0], 1.0)]).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn validate_rejects_excess_mass() {
        let e = DiscreteJoint::from_pairs(vec![(vec![0.0, 1.0], 0.5), (vec![1.0, 0.0], 0.6)]).unwrap_err();
        assert!(matches!(e, Error::MassNotOne { .. }));
    }

    #[test]
    fn validate_merges_duplicates() {
        let d = DiscreteJoint::from_pairs(vec![(vec![0.0, 1.0], 0.5), (vec![0.0, 1.0], 0.5)]).unwrap();
        assert_eq!(d.atoms(), &[Atom::new(vec![0.0, 1.0], 1.0)]);
    }

    #[test]
    fn validate_errors() {
        let e = DiscreteJoint::from_pairs(vec![(vec![0.0], -0.5), (vec![1.0], 1.5)]).unwrap_err();
        assert!(matches!(e, Error::NegativeProb { .. }));
        let e = DiscreteJoint::new(2, vec![Atom::new(vec![0.0], 1.0)]).unwrap_err();
        assert!(matches!(e, Error::DimMismatch { .. }));
    }

    #[test]
    fn marginals_and_product_of_antithetic_pair() {
        let d = DiscreteJoint::uniform(vec![ri(&[0, 1]), ri(&[1, 0])]).unwrap();
        let m = d.marginal(0).unwrap();
        assert_eq!(m.support(), &ri(&[0, 1])[..]);
        assert_eq!(m.probs(), &[r(1, 2), r(1, 2)]);
        let p = d.product_independent();
        assert_eq!(p.len(), 4);
        assert!(p.atoms().iter().all(|a| a.p == r(1, 4)));
        assert!(matches!(d.marginal(2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn product_is_idempotent() {
        let d = DiscreteJoint::uniform(vec![ri(&[0, 1]), ri(&[1, 0])]).unwrap().product_independent();
        assert_eq!(d.product_independent(), d);
    }

    #[test]
    fn cyclic_triple_product_has_27_atoms() {
        let d = DiscreteJoint::uniform(vec![ri(&[1, 2, 0]), ri(&[0, 1, 2]), ri(&[2, 0, 1])]).unwrap();
        for i in 0..3 {
            let m = d.marginal(i).unwrap();
            assert_eq!(m.support(), &ri(&[0, 1, 2])[..]);
            assert!(m.probs().iter().all(|p| *p == r(1, 3)));
        }
        let p = d.product_independent();
        assert_eq!(p.len(), 27);
        assert!(p.atoms().iter().all(|a| a.p == r(1, 27)));
    }

    #[test]
    fn symmetrize_examples() {
        let pm = DiscreteJoint::point_mass(ri(&[1, 2])).unwrap();
        let s = pm.symmetrize();
        assert_eq!(s, DiscreteJoint::uniform(vec![ri(&[1, 2]), ri(&[2, 1])]).unwrap());
        let orbit = DiscreteJoint::point_mass(ri(&[1, 2, 0])).unwrap().symmetrize();
        assert_eq!(orbit.len(), 6);
        assert!(orbit.atoms().iter().all(|a| a.p == r(1, 6)));
        assert_eq!(orbit.symmetrize(), orbit);
    }

    #[test]
    fn moments_of_antithetic_pair() {
        let d = DiscreteJoint::uniform(vec![ri(&[0, 1]), ri(&[1, 0])]).unwrap();
        let m = d.moments();
        assert_eq!(m.cov, vec![vec![r(1, 4), r(-1, 4)], vec![r(-1, 4), r(1, 4)]]);
        assert!((m.corr[0][1].unwrap() + 1.0).abs() < 1e-15);
        let pm = DiscreteJoint::point_mass(vec![1.0, 2.0]).unwrap().moments();
        assert!(pm.cov.iter().flatten().all(|v| *v == 0.0));
        assert!(pm.corr.iter().flatten().all(|v| v.is_none()));
    }

    #[test]
    fn exchangeable_jm_has_equicorrelation() {
        let d = make_orbit_uniform(&ri(&[-1, 0, 1, 4])).unwrap();
        let m = d.moments();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((m.corr[i][j].unwrap() + 1.0 / 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn joint_mix_examples() {
        let d = DiscreteJoint::uniform(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert_eq!(d.is_joint_mix(&1e-9), JmVerdict::Yes { center: 0.0 });
        let d = DiscreteJoint::uniform(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        match d.is_joint_mix(&1e-9) {
            JmVerdict::No { sums, .. } => assert_eq!(sums, vec![0.0, 2.0]),
            _ => panic!("comonotone pair is not a joint mix"),
        }
        let orbit = make_orbit_uniform(&ri(&[0, 1, 2])).unwrap();
        assert_eq!(orbit.is_joint_mix(&r(0, 1)), JmVerdict::Yes { center: r(3, 1) });
    }

    #[test]
    fn exchangeability_examples() {
        let pm = DiscreteJoint::point_mass(vec![1.0, 2.0]).unwrap();
        assert!(!pm.is_exchangeable(&1e-12));
        assert!(pm.symmetrize().is_exchangeable(&1e-12));
        let mn = make_multinomial(1, &[0.5, 0.5]).unwrap();
        assert!(mn.is_exchangeable(&1e-12));
    }

    #[test]
    fn multinomial_examples() {
        let mn = make_multinomial(1, &[r(1, 2), r(1, 2)]).unwrap();
        assert_eq!(mn, DiscreteJoint::uniform(vec![ri(&[1, 0]), ri(&[0, 1])]).unwrap());
        let mn2 = make_multinomial(2, &[r(1, 2), r(1, 2)]).unwrap();
        assert_eq!(mn2.prob_of(&ri(&[2, 0])), r(1, 4));
        assert_eq!(mn2.prob_of(&ri(&[1, 1])), r(1, 2));
        assert_eq!(mn2.prob_of(&ri(&[0, 2])), r(1, 4));
        assert!(mn2.is_joint_mix(&r(0, 1)).is_yes());
        assert!(make_multinomial(2, &[r(1, 2), r(1, 3)]).is_err());
        assert!(make_multinomial(0, &[r(1, 1)]).is_err());
    }

    #[test]
    fn orbit_of_constant_is_point_mass() {
        let d = make_orbit_uniform(&ri(&[1, 1, 1])).unwrap();
        assert_eq!(d, DiscreteJoint::point_mass(ri(&[1, 1, 1])).unwrap());
    }

    #[test]
    fn json_round_trip_rational() {
        let s = r#"{"dim": 2, "atoms": [{"x": ["1/3", 0], "p": "1/2"}, {"x": [0, "1/3"], "p": "1/2"}], "number_mode": "rational"}"#;
        let any = AnyJoint::from_json_str(s, None).unwrap();
        let AnyJoint::Rational(d) = &any else { panic!("expected rational") };
        assert_eq!(d.prob_of(&[r(1, 3), r(0, 1)]), r(1, 2));
        let back = AnyJoint::from_json_str(&any.to_json().to_string(), None).unwrap();
        assert_eq!(back, any);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }
}
