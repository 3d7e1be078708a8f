mod common;

use common::{grid_search, random_tiny_qcqp, rng};
use proptest::prelude::*;
use swipt_core::qcqp::{ComplexQuadratic, Constraint, ConvexSubproblem, RealQuadratic, SolverOptions, Status};
use swipt_core::*;

#[test]
fn tiny_problems_match_grid_search() {
    let options = SolverOptions::default();
    let mut r = rng(7);
    for trial in 0..20 {
        let n = 1 + trial % 2;
        let problem = random_tiny_qcqp(&mut r, n);
        let sol = problem.solve(&options).unwrap();
        assert_eq!(sol.report.status, Status::Optimal, "trial {trial}");
        let y = DVector::zeros(0);
        assert!(problem.max_violation(&sol.complex, &y) <= 1e-8, "trial {trial}");
        let (_, best) = grid_search(&problem, 1.6, 7, 400).unwrap();
        let f = problem.objective_value(&sol.complex, &y);
        assert!((f - best).abs() <= 1e-3, "trial {trial}: solver {f} grid {best}");
    }
}

#[test]
fn unconstrained_minimizer_is_found() {
    // min |x − 1 − j|² has its minimizer inside the unit-radius-2 ball
    let q = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    let lin = DVector::from_element(1, Complex64::new(1.0, 1.0));
    let problem = ConvexSubproblem::new(1, 0)
        .minimize_complex(ComplexQuadratic::new(q, lin, 2.0))
        .subject_to(Constraint::power_budget(vec![0], 4.0));
    let sol = problem.solve(&SolverOptions::default()).unwrap();
    assert!((sol.complex[0] - Complex64::new(1.0, 1.0)).norm() < 1e-6);
}

#[test]
fn ball_projection_lands_on_the_boundary() {
    // min |x − 3|² over |x| ≤ 1 is x = 1
    let q = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    let lin = DVector::from_element(1, Complex64::new(3.0, 0.0));
    let problem = ConvexSubproblem::new(1, 0)
        .minimize_complex(ComplexQuadratic::new(q, lin, 9.0))
        .subject_to(Constraint::power_budget(vec![0], 1.0));
    let sol = problem.solve(&SolverOptions::default()).unwrap();
    assert!((sol.complex[0] - Complex64::new(1.0, 0.0)).norm() < 1e-6);
}

#[test]
fn mixed_real_variable_reaches_the_affine_bound() {
    // min β s.t. 1 − Re{x} ≤ β, |x| ≤ 2 has β* = −1
    let problem = ConvexSubproblem::new(1, 1)
        .minimize_real(RealQuadratic::linear(DVector::from_element(1, 1.0), 0.0))
        .subject_to(Constraint::Affine {
            complex: DVector::from_element(1, Complex64::new(-1.0, 0.0)),
            real: DVector::from_element(1, -1.0),
            bound: -1.0,
        })
        .subject_to(Constraint::power_budget(vec![0], 4.0));
    let sol = problem.solve(&SolverOptions::default()).unwrap();
    assert!((sol.real[0] + 1.0).abs() < 1e-6, "beta = {}", sol.real[0]);
}

#[test]
fn empty_feasible_set_is_reported() {
    let problem = ConvexSubproblem::new(1, 0)
        .minimize_complex(ComplexQuadratic::new(DMatrix::identity(1, 1), DVector::zeros(1), 0.0))
        .subject_to(Constraint::power_budget(vec![0], 1.0))
        .subject_to(Constraint::Affine {
            complex: DVector::from_element(1, Complex64::new(-1.0, 0.0)),
            real: DVector::zeros(0),
            bound: -2.0,
        });
    let sol = problem.solve(&SolverOptions::default()).unwrap();
    assert_eq!(sol.report.status, Status::Infeasible);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solutions_respect_every_constraint(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let problem = random_tiny_qcqp(&mut r, n);
        let sol = problem.solve(&SolverOptions::default()).unwrap();
        prop_assert!(sol.is_optimal());
        prop_assert!(problem.max_violation(&sol.complex, &DVector::zeros(0)) <= 1e-8);
    }

    #[test]
    fn scaling_the_objective_keeps_the_argmin(seed in any::<u64>(), n in 1usize..=3, scale in 1e-3f64..1e3) {
        let mut r = rng(seed);
        let problem = random_tiny_qcqp(&mut r, n);
        let options = SolverOptions::default();
        let base = problem.solve(&options).unwrap();
        let mut scaled = problem.clone();
        let q = scaled.complex_objective.take().unwrap();
        scaled = scaled.minimize_complex(ComplexQuadratic::new(
            q.matrix * Complex64::new(scale, 0.0),
            q.linear * Complex64::new(scale, 0.0),
            q.constant * scale,
        ));
        let other = scaled.solve(&options).unwrap();
        // Strong convexity is not guaranteed, so compare objective values.
        let y = DVector::zeros(0);
        let f0 = problem.objective_value(&base.complex, &y);
        let f1 = problem.objective_value(&other.complex, &y);
        prop_assert!((f0 - f1).abs() <= 1e-6 * (1.0 + f0.abs()), "{} vs {}", f0, f1);
    }
}
