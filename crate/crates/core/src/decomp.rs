//! Structural decompositions of joint mixes.

use serde::Serialize;

use crate::dist::{cmp_points, make_orbit_uniform, Atom, DiscreteJoint, JmVerdict};
use crate::error::{Error, Result};
use crate::numeric::{ser, Scalar};

/// `x = Σ_k coefficients[k] · e_{components[k][a]}` on every atom `a`.
///
/// Each component is a function of the atom taking values in the unit vectors of ℝⁿ,
/// so it is a binary multinomial vector on the same probability space.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMultinomialDecomposition<T> {
    pub dim: usize,
    pub shift: T,
    /// Sorted partial-sum levels `v₀ < … < v_K` of the shifted atoms.
    pub levels: Vec<T>,
    pub coefficients: Vec<T>,
    /// `components[k][a]` is the coordinate where component `k` equals one on atom `a`.
    pub components: Vec<Vec<usize>>,
    pub atoms: Vec<Atom<T>>,
}

fn unit<T: Scalar>(dim: usize, i: usize) -> Vec<T> {
    (0..dim).map(|j| if j == i { T::one() } else { T::zero() }).collect()
}

pub fn binary_multinomial_decompose<T: Scalar>(d: &DiscreteJoint<T>) -> Result<BinaryMultinomialDecomposition<T>> {
    if !d.is_joint_mix(&T::jm_tol()).is_yes() {
        return Err(Error::NotJointMix);
    }
    let n = d.dim();
    let min = d.atoms().iter().flat_map(|a| a.x.iter()).cloned().reduce(|a, b| if b < a { b } else { a });
    let min = min.ok_or(Error::Empty)?;
    let shift = if min > T::zero() { T::zero() } else { min.floor_val() - T::one() };

    let partial: Vec<Vec<T>> = d
        .atoms()
        .iter()
        .map(|a| {
            let mut s = vec![T::zero()];
            for v in &a.x {
                let next = s.last().unwrap().clone() + v.clone() - shift.clone();
                s.push(next);
            }
            s
        })
        .collect();
    let mut levels: Vec<T> = partial.iter().flatten().cloned().collect();
    levels.sort_by(|a, b| a.cmp_total(b));
    levels.dedup_by(|a, b| a.approx_eq(b, &T::sign_tol()));

    // floats: a level at the common total must count every atom as reaching it
    let reaches = |s: &T, v: &T| *s >= *v || s.approx_eq(v, &T::sign_tol());
    let mut coefficients = Vec::new();
    let mut components = Vec::new();
    for k in 1..levels.len() {
        let v = &levels[k];
        let mut comp = Vec::with_capacity(d.len());
        for s in &partial {
            let i = (1..=n).find(|&i| reaches(&s[i], v) && !reaches(&s[i - 1], v));
            comp.push(i.ok_or_else(|| Error::InconsistentComponents(format!("level {v} is not crossed exactly once")))? - 1);
        }
        coefficients.push(levels[k].clone() - levels[k - 1].clone());
        components.push(comp);
    }
    if !shift.is_zero() {
        for i in 0..n {
            coefficients.push(shift.clone());
            components.push(vec![i; d.len()]);
        }
    }
    let dec = BinaryMultinomialDecomposition {
        dim: n,
        shift,
        levels,
        coefficients,
        components,
        atoms: d.atoms().to_vec(),
    };
    dec.verify()?;
    Ok(dec)
}

impl<T: Scalar> BinaryMultinomialDecomposition<T> {
    fn check_shape(&self) -> Result<()> {
        if self.coefficients.len() != self.components.len() {
            return Err(Error::InconsistentComponents(format!(
                "{} coefficients but {} components",
                self.coefficients.len(),
                self.components.len()
            )));
        }
        for (k, c) in self.components.iter().enumerate() {
            if c.len() != self.atoms.len() {
                return Err(Error::InconsistentComponents(format!("component {k} covers {} atoms", c.len())));
            }
            if let Some(&i) = c.iter().find(|&&i| i >= self.dim) {
                return Err(Error::InconsistentComponents(format!("component {k} points at coordinate {i}")));
            }
        }
        Ok(())
    }

    /// `Σ_k coefficients[k] · component_k(a)` for atom index `a`.
    pub fn evaluate(&self, a: usize) -> Vec<T> {
        let mut x = vec![T::zero(); self.dim];
        for (c, comp) in self.coefficients.iter().zip(&self.components) {
            x[comp[a]] = x[comp[a]].clone() + c.clone();
        }
        x
    }

    /// Atomwise recomposition check: exact for rationals, `sign_tol` for floats.
    pub fn verify(&self) -> Result<()> {
        self.check_shape()?;
        for (k, a) in self.atoms.iter().enumerate() {
            let x = self.evaluate(k);
            if !x.iter().zip(&a.x).all(|(u, v)| u.approx_eq(v, &T::sign_tol())) {
                return Err(Error::InconsistentComponents(format!("atom {k} does not recompose")));
            }
        }
        Ok(())
    }

    /// Law of component `k`.
    pub fn component_law(&self, k: usize) -> Result<DiscreteJoint<T>> {
        let comp = self.components.get(k).ok_or(Error::IndexOutOfRange { index: k, dim: self.components.len() })?;
        let atoms = comp
            .iter()
            .zip(&self.atoms)
            .map(|(&i, a)| Atom::new(unit(self.dim, i), a.p.clone()))
            .collect();
        DiscreteJoint::new(self.dim, atoms)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let table: Vec<serde_json::Value> = self
            .atoms
            .iter()
            .enumerate()
            .map(|(a, atom)| {
                let units: Vec<Vec<serde_json::Value>> = self
                    .components
                    .iter()
                    .map(|c| unit::<T>(self.dim, c[a]).iter().map(Scalar::to_json).collect())
                    .collect();
                serde_json::json!({
                    "x": atom.x.iter().map(Scalar::to_json).collect::<Vec<_>>(),
                    "p": atom.p.to_json(),
                    "components": units,
                })
            })
            .collect();
        serde_json::json!({
            "dim": self.dim,
            "shift": self.shift.to_json(),
            "levels": self.levels.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "coefficients": self.coefficients.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "atoms": table,
        })
    }
}

/// Distribution of `Σ coeff·component` over the recorded atoms.
pub fn recompose<T: Scalar>(dec: &BinaryMultinomialDecomposition<T>) -> Result<DiscreteJoint<T>> {
    dec.check_shape()?;
    let atoms = (0..dec.atoms.len())
        .map(|a| Atom::new(dec.evaluate(a), dec.atoms[a].p.clone()))
        .collect();
    DiscreteJoint::new(dec.dim, atoms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct OrbitMixture<T: Scalar> {
    #[serde(serialize_with = "ser::vec")]
    pub weights: Vec<T>,
    /// Base vectors in ascending coordinate order.
    #[serde(serialize_with = "ser::mat")]
    pub orbits: Vec<Vec<T>>,
    #[serde(serialize_with = "ser::scalar")]
    pub center: T,
}

impl<T: Scalar> OrbitMixture<T> {
    pub fn to_distribution(&self) -> Result<DiscreteJoint<T>> {
        let parts: Vec<DiscreteJoint<T>> = self.orbits.iter().map(|a| make_orbit_uniform(a)).collect::<Result<_>>()?;
        let weighted: Vec<(T, &DiscreteJoint<T>)> = self.weights.iter().cloned().zip(parts.iter()).collect();
        DiscreteJoint::mixture(&weighted)
    }
}

/// Splits an exchangeable joint mix into orbit uniforms weighted by orbit mass.
pub fn orbit_mixture_decompose<T: Scalar>(d: &DiscreteJoint<T>) -> Result<OrbitMixture<T>> {
    let center = match d.is_joint_mix(&T::jm_tol()) {
        JmVerdict::Yes { center } => center,
        JmVerdict::No { .. } => return Err(Error::NotJointMix),
    };
    if !d.is_exchangeable(&T::mass_tol()) {
        return Err(Error::NotExchangeable);
    }
    let mut keyed: Vec<(Vec<T>, T)> = d
        .atoms()
        .iter()
        .map(|a| {
            let mut base = a.x.clone();
            base.sort_by(|u, v| u.cmp_total(v));
            (base, a.p.clone())
        })
        .collect();
    keyed.sort_by(|a, b| cmp_points(&a.0, &b.0));
    let mut orbits: Vec<Vec<T>> = Vec::new();
    let mut weights: Vec<T> = Vec::new();
    for (base, p) in keyed {
        match orbits.last() {
            Some(last) if cmp_points(last, &base) == std::cmp::Ordering::Equal => {
                let w = weights.last_mut().unwrap();
                *w = w.clone() + p;
            }
            _ => {
                orbits.push(base);
                weights.push(p);
            }
        }
    }
    let mix = OrbitMixture { weights, orbits, center };
    let back = mix.to_distribution()?;
    if !back.approx_eq(d, &T::sign_tol()) {
        return Err(Error::InconsistentComponents("orbit mixture does not reproduce the input".into()));
    }
    Ok(mix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depcheck::is_ct;
    use crate::dist::make_multinomial;
    use crate::numeric::{ratio, Rational};

    fn r(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| ratio(x, 1)).collect()
    }

    #[test]
    fn two_atom_hand_trace() {
        let d = DiscreteJoint::uniform(vec![r(&[1, 2]), r(&[2, 1])]).unwrap();
        let dec = binary_multinomial_decompose(&d).unwrap();
        assert_eq!(dec.shift, ratio(0, 1));
        assert_eq!(dec.levels, r(&[0, 1, 2, 3]));
        assert_eq!(dec.coefficients, r(&[1, 1, 1]));
        // atoms are stored canonically: (1,2) then (2,1)
        let on = |a: usize| dec.components.iter().map(|c| c[a]).collect::<Vec<_>>();
        assert_eq!(on(0), vec![0, 1, 1]);
        assert_eq!(on(1), vec![0, 0, 1]);
        assert_eq!(recompose(&dec).unwrap(), d);
    }

    #[test]
    fn point_mass_uses_canonical_binaries() {
        let d = DiscreteJoint::point_mass(r(&[1, 1])).unwrap();
        let dec = binary_multinomial_decompose(&d).unwrap();
        assert_eq!(dec.coefficients, r(&[1, 1]));
        assert_eq!(dec.components, vec![vec![0], vec![1]]);
        assert_eq!(recompose(&dec).unwrap(), d);
    }

    #[test]
    fn hand_built_single_coefficient() {
        let dec = BinaryMultinomialDecomposition {
            dim: 2,
            shift: ratio(0, 1),
            levels: r(&[0, 1]),
            coefficients: r(&[1]),
            components: vec![vec![0]],
            atoms: vec![Atom::new(r(&[1, 0]), ratio(1, 1))],
        };
        assert_eq!(recompose(&dec).unwrap(), DiscreteJoint::point_mass(r(&[1, 0])).unwrap());
        let bad = BinaryMultinomialDecomposition { components: vec![vec![2]], ..dec.clone() };
        assert!(matches!(recompose(&bad), Err(Error::InconsistentComponents(_))));
        let bad = BinaryMultinomialDecomposition { coefficients: r(&[1, 1]), ..dec };
        assert!(matches!(recompose(&bad), Err(Error::InconsistentComponents(_))));
    }

    #[test]
    fn orbit_uniform_components_are_ct_and_jm() {
        let d = make_orbit_uniform(&r(&[0, 1, 2])).unwrap();
        let dec = binary_multinomial_decompose(&d).unwrap();
        assert_eq!(dec.shift, ratio(-1, 1));
        assert_eq!(recompose(&dec).unwrap(), d);
        assert!(dec.len() <= 3 * d.len() + 3);
        for k in 0..dec.len() {
            let law = dec.component_law(k).unwrap();
            assert!(is_ct(&law).verdict.holds());
            assert_eq!(law.is_joint_mix(&ratio(0, 1)).center(), Some(&ratio(1, 1)));
        }
    }

    #[test]
    fn negative_and_float_inputs() {
        let d = DiscreteJoint::uniform(vec![vec![-0.5, 0.5], vec![0.25, -0.25]]).unwrap();
        let dec = binary_multinomial_decompose(&d).unwrap();
        let back = recompose(&dec).unwrap();
        assert!(back.approx_eq(&d, &1e-12));
        let not_jm = DiscreteJoint::uniform(vec![r(&[0, 0]), r(&[1, 1])]).unwrap();
        assert_eq!(binary_multinomial_decompose(&not_jm), Err(Error::NotJointMix));
    }

    #[test]
    fn orbit_mixture_examples() {
        let u = make_orbit_uniform(&r(&[0, 1, 2])).unwrap();
        let m = orbit_mixture_decompose(&u).unwrap();
        assert_eq!(m.weights, vec![ratio(1, 1)]);
        assert_eq!(m.orbits, vec![r(&[0, 1, 2])]);

        let a = make_orbit_uniform(&r(&[0, 0, 0])).unwrap();
        let b = make_orbit_uniform(&r(&[-1, 0, 1])).unwrap();
        let mix = DiscreteJoint::mixture(&[(ratio(1, 2), &a), (ratio(1, 2), &b)]).unwrap();
        let m = orbit_mixture_decompose(&mix).unwrap();
        assert_eq!(m.weights, vec![ratio(1, 2), ratio(1, 2)]);
        assert_eq!(m.orbits, vec![r(&[-1, 0, 1]), r(&[0, 0, 0])]);
        assert_eq!(m.center, ratio(0, 1));

        let mn = make_multinomial(1, &[ratio(1, 3), ratio(1, 3), ratio(1, 3)]).unwrap();
        let m = orbit_mixture_decompose(&mn).unwrap();
        assert_eq!(m.orbits, vec![r(&[0, 0, 1])]);
        assert_eq!(m.weights, vec![ratio(1, 1)]);

        let skew = make_multinomial(1, &[ratio(1, 2), ratio(1, 4), ratio(1, 4)]).unwrap();
        assert_eq!(orbit_mixture_decompose(&skew), Err(Error::NotExchangeable));
    }
}
