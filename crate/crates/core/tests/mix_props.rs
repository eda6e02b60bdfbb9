use negdep::mix::{
    construct_na_gaussian_cov, cov_is_jm, jm_cov_n3, min_eigenvalue, necessary_conditions, sample, CovModel,
};
use negdep::numeric::{ratio, Rational};
use proptest::prelude::*;

/// Clamp the largest entry to the sum of the others so that `2·max ≤ Σ` holds.
fn admissible(mut v: Vec<f64>) -> Vec<f64> {
    let (m, _) = v.iter().enumerate().fold((0, f64::MIN), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
    let rest: f64 = v.iter().enumerate().filter(|&(i, _)| i != m).map(|(_, x)| x).sum();
    if v[m] > rest {
        v[m] = rest;
    }
    v
}

fn variances() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, 2..=10).prop_map(admissible)
}

fn int_variances(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(1i64..20, n).prop_filter("2·max ≤ Σ", |v| 2 * v.iter().max().unwrap() <= v.iter().sum())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn construction_is_a_psd_joint_mix(v in variances()) {
        let t = construct_na_gaussian_cov(&v).unwrap();
        let n = v.len();
        prop_assert!(min_eigenvalue(&t.cov) >= -1e-9);
        for i in 0..n {
            prop_assert_eq!(t.cov[i][i], v[i]);
            prop_assert!(t.cov[i].iter().sum::<f64>().abs() <= 1e-9);
            for j in 0..n {
                prop_assert!(i == j || t.cov[i][j] <= 1e-12);
                prop_assert_eq!(t.cov[i][j], t.cov[j][i]);
            }
        }
    }

    #[test]
    fn exact_construction_has_zero_row_sums(v in int_variances(2..=7)) {
        let v: Vec<Rational> = v.into_iter().map(|x| ratio(x, 1)).collect();
        let t = construct_na_gaussian_cov(&v).unwrap();
        for row in &t.cov {
            prop_assert_eq!(row.iter().fold(ratio(0, 1), |a, b| a + b.clone()), ratio(0, 1));
        }
    }

    #[test]
    fn variance_condition_implies_sd_condition(v in prop::collection::vec(0.0f64..100.0, 1..=12)) {
        prop_assert!(necessary_conditions(&v).unwrap().implication_holds);
    }

    #[test]
    fn three_dim_formula_sums_to_zero(v in prop::collection::vec(0i64..50, 3)) {
        let v: Vec<Rational> = v.into_iter().map(|x| ratio(x, 7)).collect();
        prop_assert!(cov_is_jm(&jm_cov_n3(&v).unwrap().cov, &ratio(0, 1)));
    }

    #[test]
    fn construction_matches_three_dim_formula(v in int_variances(3..=3)) {
        let v: Vec<Rational> = v.into_iter().map(|x| ratio(x, 1)).collect();
        prop_assert_eq!(construct_na_gaussian_cov(&v).unwrap().cov, jm_cov_n3(&v).unwrap().cov);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gaussian_draws_have_constant_sum(v in variances(), seed in any::<u64>()) {
        let cov = construct_na_gaussian_cov(&v).unwrap().cov;
        let model = CovModel::gaussian(vec![0.0; v.len()], cov).unwrap();
        for x in sample(&model, 200, seed).unwrap() {
            prop_assert!(x.iter().sum::<f64>().abs() <= 1e-9);
        }
    }

    #[test]
    fn sampling_is_reproducible(v in variances(), seed in any::<u64>()) {
        let cov = construct_na_gaussian_cov(&v).unwrap().cov;
        let model = CovModel::gaussian(vec![1.0; v.len()], cov).unwrap();
        prop_assert_eq!(sample(&model, 20, seed).unwrap(), sample(&model, 20, seed).unwrap());
    }
}
