mod common;

use common::{small_jm, small_joint, zero};
use negdep::decomp::{binary_multinomial_decompose, orbit_mixture_decompose, recompose};
use negdep::depcheck::{is_ct, is_na, CheckConfig};
use negdep::numeric::ratio;
use negdep::{Error, JmVerdict};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rational_round_trip_is_exact(d in small_jm(1..=4, 8)) {
        let dec = binary_multinomial_decompose(&d).unwrap();
        prop_assert!(dec.verify().is_ok());
        prop_assert_eq!(recompose(&dec).unwrap(), d.clone());
        prop_assert!(dec.len() <= d.dim() * d.len() + d.dim());
        for k in 0..dec.len() {
            let law = dec.component_law(k).unwrap();
            prop_assert!(is_ct(&law).verdict.holds());
            prop_assert_eq!(law.is_joint_mix(&zero()), JmVerdict::Yes { center: ratio(1, 1) });
        }
    }

    #[test]
    fn float_round_trip_within_tolerance(d in small_jm(1..=4, 8)) {
        let f = d.to_f64();
        let dec = binary_multinomial_decompose(&f).unwrap();
        for a in 0..dec.atoms.len() {
            let x = dec.evaluate(a);
            for (u, v) in x.iter().zip(&dec.atoms[a].x) {
                prop_assert!((u - v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn non_joint_mix_is_rejected(d in small_joint(2..=3, 3, 4)) {
        prop_assume!(!d.is_joint_mix(&zero()).is_yes());
        prop_assert!(matches!(binary_multinomial_decompose(&d), Err(Error::NotJointMix)));
    }

    #[test]
    fn orbit_mixture_reproduces_symmetrized_jm(d in small_jm(2..=3, 4)) {
        let s = d.symmetrize();
        let mix = orbit_mixture_decompose(&s).unwrap();
        prop_assert!(mix.weights.iter().all(|w| *w >= zero()));
        prop_assert_eq!(mix.weights.iter().fold(zero(), |a, w| a + w.clone()), ratio(1, 1));
        prop_assert_eq!(mix.to_distribution().unwrap(), s);
        for base in &mix.orbits {
            let u = negdep::make_orbit_uniform(base).unwrap();
            prop_assert!(is_na(&u, &CheckConfig::default()).unwrap().verdict.holds());
        }
    }
}
