mod common;

use common::{cyclic_closure, small_jm, small_joint, zero};
use negdep::depcheck::{
    check_chain, is_na, is_ncd, is_nlod, is_nod, is_nsd, is_nuod, is_ct, CheckConfig, OrthantKind, Witness,
};
use negdep::numeric::{ratio, Rational};
use negdep::DiscreteJoint;
use proptest::prelude::*;

fn prob(d: &DiscreteJoint<Rational>, event: impl Fn(&[Rational]) -> bool) -> Rational {
    d.atoms().iter().filter(|a| event(&a.x)).fold(zero(), |acc, a| acc + a.p.clone())
}

fn leq(x: &[Rational], y: &[Rational]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

/// Recomputes the violated inequality from scratch.
fn genuine(d: &DiscreteJoint<Rational>, w: &Witness<Rational>) -> bool {
    match w {
        Witness::CovPair { i, j, .. } => {
            let e = |f: &dyn Fn(&[Rational]) -> Rational| d.expect(|x| f(x));
            let cov = e(&|x| x[*i].clone() * x[*j].clone()) - e(&|x| x[*i].clone()) * e(&|x| x[*j].clone());
            cov > zero()
        }
        Witness::Orthant { orthant, t, .. } => {
            let hit = |v: &Rational, ti: &Rational| match orthant {
                OrthantKind::Lower => v <= ti,
                OrthantKind::Upper => v > ti,
            };
            let joint = prob(d, |x| x.iter().zip(t).all(|(v, ti)| hit(v, ti)));
            let indep = (0..d.dim()).fold(ratio(1, 1), |acc, i| acc * prob(d, |x| hit(&x[i], &t[i])));
            joint > indep
        }
        Witness::Association { a, b, u, v, .. } => {
            let proj = |x: &[Rational], blk: &[usize]| blk.iter().map(|&k| x[k].clone()).collect::<Vec<_>>();
            let support = |blk: &[usize]| d.atoms().iter().map(|at| proj(&at.x, blk)).collect::<Vec<_>>();
            let upper = |set: &Vec<Vec<Rational>>, pts: &Vec<Vec<Rational>>| {
                pts.iter().all(|p| !set.iter().any(|s| leq(s, p)) || set.contains(p))
            };
            let in_u = |x: &[Rational]| u.contains(&proj(x, a));
            let in_v = |x: &[Rational]| v.contains(&proj(x, b));
            upper(u, &support(a))
                && upper(v, &support(b))
                && prob(d, |x| in_u(x) && in_v(x)) > prob(d, in_u) * prob(d, in_v)
        }
        Witness::Supermodular { grid, phi, .. } => {
            let dims: Vec<usize> = grid.iter().map(Vec::len).collect();
            let n = dims.len();
            let mut strides = vec![1usize; n];
            for i in (0..n - 1).rev() {
                strides[i] = strides[i + 1] * dims[i + 1];
            }
            let coords = |pos: usize| (0..n).map(|i| (pos / strides[i]) % dims[i]).collect::<Vec<_>>();
            let size: usize = dims.iter().product();
            // supermodular on the full lattice, checked on all pairs
            for p in 0..size {
                for q in 0..size {
                    let (cp, cq) = (coords(p), coords(q));
                    let join: usize = (0..n).map(|i| cp[i].max(cq[i]) * strides[i]).sum();
                    let meet: usize = (0..n).map(|i| cp[i].min(cq[i]) * strides[i]).sum();
                    if phi[join] + phi[meet] < phi[p] + phi[q] - 1e-9 {
                        return false;
                    }
                }
            }
            let indep = d.product_independent();
            let gap: f64 = (0..size)
                .map(|pos| {
                    let g: Vec<Rational> = coords(pos).iter().enumerate().map(|(i, &k)| grid[i][k].clone()).collect();
                    (d.prob_of(&g) - indep.prob_of(&g)).to_f() * phi[pos]
                })
                .sum();
            gap > 1e-12
        }
        Witness::NotCounterMonotonic { i, j, atom_a, atom_b } => {
            let present = |x: &Vec<Rational>| d.atoms().iter().any(|a| &a.x == x);
            present(atom_a)
                && present(atom_b)
                && (atom_a[*i].clone() - atom_b[*i].clone()) * (atom_a[*j].clone() - atom_b[*j].clone()) > zero()
        }
        Witness::NotJointMix { sums, .. } => sums.windows(2).any(|w| w[0] != w[1]),
    }
}

use negdep::Scalar;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn witnesses_are_genuine(d in small_joint(2..=3, 3, 5)) {
        let cfg = CheckConfig::default();
        let verdicts = [
            is_ncd(&d),
            is_ct(&d),
            is_nlod(&d, &cfg).unwrap(),
            is_nuod(&d, &cfg).unwrap(),
            is_nod(&d, &cfg).unwrap(),
            is_na(&d, &cfg).unwrap(),
            is_nsd(&d, &cfg).unwrap().checked,
        ];
        for v in verdicts {
            if let Some(w) = v.verdict.witness() {
                prop_assert!(genuine(&d, w), "{:?}", w);
            }
        }
    }

    #[test]
    fn chain_has_no_violations(d in small_joint(2..=4, 3, 5)) {
        let c = check_chain(&d, &CheckConfig::default());
        prop_assert!(c.consistent(), "{:?}", c.violations);
    }

    #[test]
    fn chain_on_joint_mixes(d in small_jm(2..=3, 4)) {
        let c = check_chain(&d, &CheckConfig::default());
        prop_assert!(c.consistent(), "{:?}", c.violations);
    }

    #[test]
    fn independent_coupling_has_zero_optimum(d in small_joint(1..=3, 3, 5)) {
        let out = is_nsd(&d.product_independent(), &CheckConfig::default()).unwrap();
        prop_assert!(out.checked.verdict.holds());
        prop_assert_eq!(out.optimum, 0.0);
    }

    #[test]
    fn symmetrize_keeps_holding_verdicts(d in small_joint(2..=3, 3, 4)) {
        // identical marginals; with distinct marginals symmetrizing changes the reference product
        let d = cyclic_closure(&d);
        let cfg = CheckConfig::default();
        let s = d.symmetrize();
        if is_nsd(&d, &cfg).unwrap().checked.verdict.holds() {
            prop_assert!(is_nsd(&s, &cfg).unwrap().checked.verdict.holds());
        }
        if is_nod(&d, &cfg).unwrap().verdict.holds() {
            prop_assert!(is_nod(&s, &cfg).unwrap().verdict.holds());
        }
        if is_nuod(&d, &cfg).unwrap().verdict.holds() {
            prop_assert!(is_nuod(&s, &cfg).unwrap().verdict.holds());
        }
        if is_nlod(&d, &cfg).unwrap().verdict.holds() {
            prop_assert!(is_nlod(&s, &cfg).unwrap().verdict.holds());
        }
    }

    #[test]
    fn float_and_rational_agree_away_from_ties(d in small_joint(2..=3, 3, 5)) {
        let cfg = CheckConfig::default();
        let f = d.to_f64();
        prop_assert_eq!(is_ncd(&d).verdict.holds(), is_ncd(&f).verdict.holds());
        prop_assert_eq!(is_nod(&d, &cfg).unwrap().verdict.holds(), is_nod(&f, &cfg).unwrap().verdict.holds());
        prop_assert_eq!(is_na(&d, &cfg).unwrap().verdict.holds(), is_na(&f, &cfg).unwrap().verdict.holds());
    }
}
