use negdep::lp::{self, LpProblem, LpStatus, Relation, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Feasible by construction: rows are built around an integer point `x0`. Lower bounds and a
/// budget row `Σx ≤ Σx0 + 5` keep the feasible set bounded.
fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem<f64> {
    let m = rng.random_range(1..=49);
    let n = rng.random_range(1..=80);
    let sense = if rng.random_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut p = LpProblem::new(n, sense);
    let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-2..=0) as f64).collect();
    let x0: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0..=5) as f64).collect();
    p.set_objective((0..n).map(|_| rng.random_range(-9..=9) as f64).collect());
    for _ in 0..m {
        let row: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-5..=5) as f64 })
            .collect();
        let ax: f64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let slack = rng.random_range(0..=3) as f64;
        match rng.random_range(0..3) {
            0 => p.add_constraint(row, Relation::Eq, ax),
            1 => p.add_constraint(row, Relation::Le, ax + slack),
            _ => p.add_constraint(row, Relation::Ge, ax - slack),
        };
    }
    p.add_constraint(vec![1.0; n], Relation::Le, x0.iter().sum::<f64>() + 5.0);
    for (j, l) in lower.into_iter().enumerate() {
        p.set_bounds(j, Some(l), None);
    }
    p
}

/// Dual objective `bᵀy + Σ bound·r` after checking the sign pattern of `y` and `r`.
fn dual_value(p: &LpProblem<f64>, y: &[f64], r: &[f64], tol: f64) -> Option<f64> {
    let min = p.sense == Sense::Minimize;
    let mut total = 0.0;
    for (c, &yi) in p.constraints.iter().zip(y) {
        let ok = match (c.rel, min) {
            (Relation::Eq, _) => true,
            (Relation::Le, true) | (Relation::Ge, false) => yi <= tol,
            (Relation::Ge, true) | (Relation::Le, false) => yi >= -tol,
        };
        if !ok {
            return None;
        }
        total += c.rhs * yi;
    }
    for (j, &rj) in r.iter().enumerate() {
        let (lo, hi) = (p.bounds[j].0.unwrap(), p.bounds[j].1.unwrap_or(f64::INFINITY));
        // minimize: positive reduced cost pushes to the lower bound
        let pick_lo = (rj >= 0.0) == min;
        let bound = if pick_lo { lo } else { hi };
        if bound.is_infinite() {
            if rj.abs() > tol {
                return None;
            }
            continue;
        }
        total += rj * bound;
    }
    let recomputed: Vec<f64> = (0..r.len())
        .map(|j| p.objective[j] - p.constraints.iter().zip(y).map(|(c, yi)| c.coeffs[j] * yi).sum::<f64>())
        .collect();
    if recomputed.iter().zip(r).any(|(a, b)| (a - b).abs() > 1e-7) {
        return None;
    }
    Some(total)
}

#[test]
fn thousand_random_feasible_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let p = random_lp(&mut rng);
        let s = lp::solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal, "case {case}");
        assert!(p.primal_residual(&s.primal) <= 1e-9, "case {case}: residual");
        let scale = s.value.abs().max(1.0);
        let dual = dual_value(&p, &s.dual, &s.reduced_costs, 1e-9).unwrap_or_else(|| panic!("case {case}: dual infeasible"));
        assert!((dual - s.value).abs() / scale <= 1e-8, "case {case}: gap {} vs {}", dual, s.value);
        assert!(lp::duality_gap(&p, &s) <= 1e-8, "case {case}");

        let again = lp::solve(&p).unwrap();
        assert_eq!(format!("{again:?}"), format!("{s:?}"), "case {case}: nondeterministic");

        let e = lp::solve_exact(&p).unwrap();
        assert_eq!(e.status, LpStatus::Optimal);
        assert!((negdep::Scalar::to_f(&e.value) - s.value).abs() <= 1e-7, "case {case}: exact mismatch");
    }
}
