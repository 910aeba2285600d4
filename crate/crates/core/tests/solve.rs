use std::sync::Arc;

use maviscid::assembly::{BoundaryData, ConstantField, PenaltyParams};
use maviscid::cases::builtin_case;
use maviscid::experiment::{build_space, solve_point};
use maviscid::solve::{
    continuation_solve, convex_seed, newton_solve, solve_linearized, NewtonConfig, ProblemData,
};
use maviscid::space::{interpolate, ScalarField};
use maviscid::Error;

fn quadratic(x: &[f64]) -> f64 {
    let z = x.get(2).copied().unwrap_or(0.0);
    x[0] * x[0] + 0.5 * x[1] * x[1] - 0.3 * x[0] * x[1] + x[1] - 2.0 * z * z + 0.2 * x[0] * z
}

fn laplacian_of_quadratic(dim: usize) -> f64 {
    if dim == 2 {
        3.0
    } else {
        -1.0
    }
}

#[test]
fn linearized_solve_recovers_representable_quadratic() {
    // Phi = I: eps lap² p - lap p = phi, lap p on the boundary = psi
    for (dim, n, k) in [(2, 3, 2), (2, 2, 3), (3, 2, 2)] {
        let s = build_space(dim, n, k).unwrap();
        let lap = laplacian_of_quadratic(dim);
        let params = PenaltyParams::new(1.0, 0.1, "full").unwrap();
        let u = solve_linearized(
            &s,
            &ConstantField::identity(dim),
            &move |_: &[f64]| -lap,
            &move |_: &[f64]| lap,
            &quadratic,
            &params,
        )
        .unwrap();
        let p = interpolate(&s, &quadratic);
        let err = u.coefficients().iter().zip(p.coefficients()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "dim {dim} k {k}: {err}");
    }
}

#[test]
fn newton_from_convex_seed_on_quartic() {
    let spec = builtin_case("II").unwrap();
    let s = build_space(2, 8, 2).unwrap();
    let eps = 0.01;
    let bdata = spec.boundary(eps);
    let seed = convex_seed(&s, bdata.g.as_ref());
    let (u, report) =
        newton_solve(spec.source(eps).as_ref(), &bdata, &spec.params(eps).unwrap(), &NewtonConfig::default(), seed)
            .unwrap();
    assert!(report.converged);
    assert!(report.iterations <= 8, "{} steps", report.iterations);
    let h = &report.residual_history;
    assert!(*h.last().unwrap() <= report.tolerance);
    assert!(h.windows(2).all(|w| w[1] < w[0]));
    // quadratic tail
    let m = h.len();
    assert!(m >= 3);
    for i in [m - 2, m - 1] {
        assert!(h[i] / h[i - 1] < 0.1, "{h:?}");
    }
    let c = h[m - 2] / (h[m - 3] * h[m - 3]);
    assert!(c.is_finite() && c < 1e6, "{h:?}");

    // restarting from the solution takes at most one step
    let (_, again) =
        newton_solve(spec.source(eps).as_ref(), &bdata, &spec.params(eps).unwrap(), &NewtonConfig::default(), u)
            .unwrap();
    assert!(again.iterations <= 1);
}

#[test]
fn negative_source_fails_with_a_diagnostic() {
    let s = build_space(2, 6, 2).unwrap();
    let g: Arc<dyn ScalarField> = Arc::new(|_: &[f64]| 0.0);
    let bdata = BoundaryData::with_default_psi(g.clone(), 0.01);
    let params = PenaltyParams::new(10.0, 0.01, "plain").unwrap();
    let config = NewtonConfig { max_iters: 30, ..NewtonConfig::default() };
    let seed = convex_seed(&s, g.as_ref());
    let e = newton_solve(&|_: &[f64]| -1.0, &bdata, &params, &config, seed).unwrap_err();
    assert!(matches!(
        e,
        Error::MaxIterations { .. } | Error::DampingFloor { .. } | Error::NonFinite { .. } | Error::Singular { .. }
    ));
    assert!(!e.to_string().contains("NaN"), "{e}");
}

#[test]
fn continuation_at_half_is_a_single_rung() {
    let spec = builtin_case("III").unwrap();
    let s = build_space(2, 4, 2).unwrap();
    let (_, report) = continuation_solve(&s, &spec, &spec.params(0.5).unwrap(), &NewtonConfig::default(), None).unwrap();
    assert_eq!(report.rungs.len(), 1);
    assert_eq!(report.rungs[0].0, 0.5);
}

#[test]
fn unit_source_solution_is_negative_inside_and_pinned_on_the_boundary() {
    let spec = builtin_case("III").unwrap();
    let (u, report) = solve_point(&spec, 2, 32, 0.005, &NewtonConfig::default()).unwrap();
    assert!(report.converged);
    let s = u.space();
    let (imin, min) = u
        .coefficients()
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &c)| if c < acc.1 { (i, c) } else { acc });
    assert!(min < 0.0);
    assert!(!s.is_boundary(imin));
    assert!(s.boundary_dofs().iter().all(|&d| u.coefficients()[d].abs() < 1e-10));
}

#[test]
fn gaussian_ladder_rungs_converge_quickly() {
    let spec = builtin_case("I").unwrap();
    let (_, report) = solve_point(&spec, 2, 32, 2.5e-3, &NewtonConfig::default()).unwrap();
    assert_eq!(report.rungs.first().unwrap().0, 0.5);
    assert_eq!(report.rungs.last().unwrap().0, 2.5e-3);
    for (eps, steps) in &report.rungs {
        assert!(*steps <= 15, "eps {eps}: {steps} steps");
    }
}

#[test]
fn symmetric_data_give_symmetric_solutions() {
    for id in ["II", "III"] {
        let spec = builtin_case(id).unwrap();
        let (u, _) = solve_point(&spec, 2, 16, 0.01, &NewtonConfig::default()).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=20 {
            for j in 0..=20 {
                let (x, y) = (i as f64 / 20.0, j as f64 / 20.0);
                let a = u.value_at(&[x, y, 0.0]).unwrap();
                let b = u.value_at(&[y, x, 0.0]).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-9, "{id}: {worst}");
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let spec = builtin_case("III").unwrap();
    let (a, ra) = solve_point(&spec, 2, 8, 0.05, &NewtonConfig::default()).unwrap();
    let (b, rb) = solve_point(&spec, 2, 8, 0.05, &NewtonConfig::default()).unwrap();
    assert_eq!(a.coefficients(), b.coefficients());
    assert_eq!(ra.residual_history, rb.residual_history);
}
