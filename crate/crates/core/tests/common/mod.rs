#![allow(dead_code)]

use negdep::numeric::{ratio, Rational};
use negdep::{Atom, DiscreteJoint};
use proptest::prelude::*;

/// Small rational distribution on `{0,…,values−1}ⁿ`.
pub fn small_joint(dims: std::ops::RangeInclusive<usize>, values: i64, max_atoms: usize) -> impl Strategy<Value = DiscreteJoint<Rational>> {
    dims.prop_flat_map(move |n| {
        prop::collection::vec((prop::collection::vec(0..values, n), 1i64..7), 1..=max_atoms).prop_map(move |raw| {
            let total: i64 = raw.iter().map(|(_, w)| w).sum();
            let atoms = raw
                .into_iter()
                .map(|(x, w)| Atom::new(x.into_iter().map(|v| ratio(v, 1)).collect(), ratio(w, total)))
                .collect();
            DiscreteJoint::new(n, atoms).unwrap()
        })
    })
}

/// Rational joint mix: random leading coordinates, last one fixes the sum.
pub fn small_jm(dims: std::ops::RangeInclusive<usize>, max_atoms: usize) -> impl Strategy<Value = DiscreteJoint<Rational>> {
    (dims, -4i64..=4).prop_flat_map(move |(n, c)| {
        prop::collection::vec((prop::collection::vec((-4i64..=4, 1i64..=3), n - 1), 1i64..7), 1..=max_atoms).prop_map(
            move |raw| {
                let total: i64 = raw.iter().map(|(_, w)| w).sum();
                let atoms = raw
                    .into_iter()
                    .map(|(head, w)| {
                        let mut x: Vec<Rational> = head.into_iter().map(|(a, b)| ratio(a, b)).collect();
                        let s = x.iter().fold(ratio(0, 1), |acc, v| acc + v.clone());
                        x.push(ratio(c, 1) - s);
                        Atom::new(x, ratio(w, total))
                    })
                    .collect();
                DiscreteJoint::new(n, atoms).unwrap()
            },
        )
    })
}

/// Uniform over cyclic shifts of each base atom: identical marginals, generally not exchangeable.
pub fn cyclic_closure(d: &DiscreteJoint<Rational>) -> DiscreteJoint<Rational> {
    let n = d.dim();
    let atoms = d
        .atoms()
        .iter()
        .flat_map(|a| {
            (0..n).map(move |s| {
                let x = (0..n).map(|i| a.x[(i + s) % n].clone()).collect();
                Atom::new(x, a.p.clone() / ratio(n as i64, 1))
            })
        })
        .collect();
    DiscreteJoint::new(n, atoms).unwrap()
}

pub fn zero() -> Rational {
    ratio(0, 1)
}
