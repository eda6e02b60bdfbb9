mod common;

use common::{cyclic_closure, small_jm, small_joint, zero};
use negdep::numeric::{ratio, Rational};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_keeps_marginals_and_kills_covariance(d in small_joint(1..=4, 3, 6)) {
        let p = d.product_independent();
        prop_assert_eq!(p.marginals(), d.marginals());
        let m = p.moments();
        for i in 0..d.dim() {
            for j in 0..d.dim() {
                if i != j {
                    prop_assert_eq!(&m.cov[i][j], &zero());
                }
            }
        }
    }

    #[test]
    fn symmetrize_is_idempotent_and_keeps_jm(d in small_jm(2..=4, 5)) {
        let s = d.symmetrize();
        prop_assert_eq!(s.symmetrize(), s.clone());
        prop_assert!(s.is_exchangeable(&zero()));
        prop_assert_eq!(d.is_joint_mix(&zero()), s.is_joint_mix(&zero()));
    }

    #[test]
    fn symmetrize_keeps_non_jm(d in small_joint(2..=3, 3, 5)) {
        prop_assert_eq!(d.is_joint_mix(&zero()).is_yes(), d.symmetrize().is_joint_mix(&zero()).is_yes());
    }

    #[test]
    fn symmetrized_covariances_are_equal(d in small_joint(2..=4, 3, 6)) {
        let m = d.symmetrize().moments();
        let n = d.dim();
        let off: Vec<&Rational> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| &m.cov[i][j]).collect();
        prop_assert!(off.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn symmetrized_identical_margin_jm_is_p_star(d in small_jm(2..=4, 4)) {
        let c = cyclic_closure(&d);
        let var = c.marginal(0).unwrap().variance();
        prop_assume!(var != zero());
        let m = c.symmetrize().moments();
        let n = c.dim() as i64;
        for i in 0..c.dim() {
            for j in 0..c.dim() {
                let want = if i == j { var.clone() } else { -var.clone() / ratio(n - 1, 1) };
                prop_assert_eq!(&m.cov[i][j], &want);
            }
        }
    }

    #[test]
    fn json_round_trip(d in small_joint(1..=3, 4, 6)) {
        let s = d.to_json().to_string();
        let back = negdep::AnyJoint::from_json_str(&s, None).unwrap();
        match back {
            negdep::AnyJoint::Rational(r) => prop_assert_eq!(r, d),
            negdep::AnyJoint::Float(_) => prop_assert!(false, "backend changed"),
        }
    }
}
