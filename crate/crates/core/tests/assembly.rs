mod common;

use std::sync::Arc;

use maviscid::assembly::{
    apply_dirichlet, assemble_ah_sigma, assemble_jacobian, assemble_linearized_rhs, assemble_nonlinear_residual,
    BoundaryData, CofactorField, ConstantField, PenaltyParams,
};
use maviscid::solve::rounding_floor;
use maviscid::mesh::{build_structured_mesh, SimplicialMesh};
use maviscid::space::{interpolate, FeFunction, FeSpace, ScalarField};
use maviscid::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space_on(mesh: SimplicialMesh, k: usize) -> Arc<FeSpace> {
    Arc::new(FeSpace::new(Arc::new(mesh), k).unwrap())
}

fn space(dim: usize, n: usize, k: usize) -> Arc<FeSpace> {
    space_on(build_structured_mesh(dim, n).unwrap(), k)
}

fn field(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Arc<dyn ScalarField> {
    Arc::new(f)
}

fn convex(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, t)| t.powi(4) / (2.0 + i as f64) + 0.5 * t * t).sum::<f64>() + 0.1 * x[0] * x[1]
}

fn perturbed_interior(u: &FeFunction, seed: u64, size: f64) -> FeFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = u.clone();
    for &d in u.space().interior_dofs() {
        v.coefficients_mut()[d] += size * rng.gen_range(-1.0..1.0);
    }
    v
}

fn relative_diff(rows: &[usize], a: &[f64], b: &[f64]) -> f64 {
    let num = rows.iter().map(|&i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
    let den = rows.iter().map(|&i| b[i].abs()).fold(0.0, f64::max);
    num / den
}

#[test]
fn matrices_do_not_depend_on_face_orientation() {
    for (dim, n, k) in [(2, 3, 2), (2, 2, 3), (3, 2, 2)] {
        let mesh = build_structured_mesh(dim, n).unwrap();
        let swapped = mesh.with_swapped_face_orientation();
        let (a, b) = (space_on(mesh, k), space_on(swapped, k));
        let params = PenaltyParams::new(1.0, 0.1, "full").unwrap();
        let ua = interpolate(&a, &convex);
        let ub = interpolate(&b, &convex);
        let ma = assemble_ah_sigma(&a, &CofactorField { u: &ua }, &params).unwrap();
        let mb = assemble_ah_sigma(&b, &CofactorField { u: &ub }, &params).unwrap();
        assert!(ma.max_abs_diff(&mb) < 1e-13 * ma.max_abs(), "A, dim {dim} k {k}");

        let ja = assemble_jacobian(&ua, &params).unwrap();
        let jb = assemble_jacobian(&ub, &params).unwrap();
        assert!(ja.max_abs_diff(&jb) < 1e-13 * ja.max_abs(), "J, dim {dim} k {k}");

        let bd = BoundaryData::new(field(convex), field(|_| 1.0));
        let f = field(|_| 2.0);
        let ra = assemble_nonlinear_residual(&ua, f.as_ref(), &bd, &params).unwrap();
        let rb = assemble_nonlinear_residual(&ub, f.as_ref(), &bd, &params).unwrap();
        let scale = ma.max_abs();
        assert!(ra.iter().zip(&rb).all(|(x, y)| (x - y).abs() < 1e-13 * scale), "R, dim {dim} k {k}");
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    for (dim, n, k) in [(2, 3, 2), (2, 2, 3), (3, 2, 2)] {
        let s = space(dim, n, k);
        let params = PenaltyParams::new(1.0, 0.1, "reduced").unwrap();
        let u = perturbed_interior(&interpolate(&s, &convex), 7, 0.05);
        let w = perturbed_interior(&FeFunction::zero(s.clone()), 8, 1.0);
        let bd = BoundaryData::new(field(convex), field(|x| 1.0 + x[0]));
        let f = field(|x| 1.0 + x[1] * x[1]);
        let r0 = assemble_nonlinear_residual(&u, f.as_ref(), &bd, &params).unwrap();
        let jw = assemble_jacobian(&u, &params).unwrap().mul_vec(w.coefficients());
        let mut errs = Vec::new();
        for t in [1e-4, 1e-5, 1e-6] {
            let mut ut = u.clone();
            for (c, d) in ut.coefficients_mut().iter_mut().zip(w.coefficients()) {
                *c += t * d;
            }
            let rt = assemble_nonlinear_residual(&ut, f.as_ref(), &bd, &params).unwrap();
            let fd: Vec<f64> = rt.iter().zip(&r0).map(|(a, b)| (a - b) / t).collect();
            errs.push(relative_diff(s.interior_dofs(), &fd, &jw));
        }
        assert!(errs[2] < 1e-5, "dim {dim} k {k}: {errs:?}");
        let ratio = errs[0] / errs[1];
        assert!(ratio > 5.0 && ratio < 20.0, "first-order decay, dim {dim} k {k}: {errs:?}");
    }
}

#[test]
fn jacobian_at_half_square_norm_is_minus_identity_operator() {
    for dim in [2, 3] {
        let s = space(dim, 2, 2);
        let params = PenaltyParams::new(1.0, 0.05, "full").unwrap();
        let u = interpolate(&s, &|x: &[f64]| 0.5 * x.iter().map(|t| t * t).sum::<f64>());
        let j = assemble_jacobian(&u, &params).unwrap();
        let mut a = assemble_ah_sigma(&s, &ConstantField::identity(dim), &params).unwrap();
        a.scale(-1.0);
        assert!(j.max_abs_diff(&a) < 1e-10, "dim {dim}: {}", j.max_abs_diff(&a));
    }
}

#[test]
fn operator_without_cofactor_term_is_symmetric() {
    for (dim, k) in [(2, 2), (2, 3), (3, 2)] {
        let s = space(dim, 2, k);
        let a = assemble_ah_sigma(&s, &ConstantField::zero(dim), &PenaltyParams::new(2.0, 0.3, "full").unwrap()).unwrap();
        assert!(a.max_abs_diff(&a.transpose()) < 1e-13 * a.max_abs());
        let with = assemble_ah_sigma(&s, &ConstantField::identity(dim), &PenaltyParams::new(2.0, 0.3, "full").unwrap()).unwrap();
        assert!(with.max_abs_diff(&with.transpose()) > 1e-6);
    }
}

#[test]
fn global_quadratic_energy_is_eps_laplacian_squared() {
    // two triangles, one interior face; q has no gradient jumps
    let s = space(2, 1, 2);
    let q = interpolate(&s, &|x: &[f64]| x[0] * x[0] + 2.0 * x[1] * x[1] + x[0] * x[1]);
    let eps = 0.3;
    let a = assemble_ah_sigma(&s, &ConstantField::zero(2), &PenaltyParams::new(5.0, eps, "full").unwrap()).unwrap();
    let energy = a.bilinear(q.coefficients(), q.coefficients());
    assert!((energy - eps * 36.0).abs() < 1e-13 * 36.0, "{energy}");
}

#[test]
fn operator_on_quadratic_against_brute_force() {
    // lap q = c, no jumps: (A q)_i = eps c int_{boundary} grad w_i · n - c int w_i
    let s = space(2, 1, 2);
    let q = interpolate(&s, &|x: &[f64]| x[0] * x[0] - 0.5 * x[1] * x[1] + 3.0 * x[0] * x[1] + x[1]);
    let c = 1.0;
    let eps = 0.2;
    let a = assemble_ah_sigma(&s, &ConstantField::identity(2), &PenaltyParams::new(1.0, eps, "plain").unwrap()).unwrap();
    let aq = a.mul_vec(q.coefficients());
    for i in 0..s.num_dofs() {
        let w = common::unit(&q, i);
        let mass = common::integrate_cells(&w, 1, |k, xi, _| w.eval(k, xi).unwrap().value);
        let expected = eps * c * common::boundary_flux(&w) - c * mass;
        assert!((aq[i] - expected).abs() < 1e-12, "dof {i}: {} vs {expected}", aq[i]);
    }
}

#[test]
fn linearized_rhs_examples() {
    let s = space(2, 2, 2);
    let params = PenaltyParams::new(1.0, 0.25, "full").unwrap();
    let zero = assemble_linearized_rhs(&s, &|_: &[f64]| 0.0, &|_: &[f64]| 0.0, &params).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));

    let probe = FeFunction::zero(s.clone());
    let mass = assemble_linearized_rhs(&s, &|_: &[f64]| 1.0, &|_: &[f64]| 0.0, &params).unwrap();
    let flux = assemble_linearized_rhs(&s, &|_: &[f64]| 0.0, &|_: &[f64]| 1.0, &params).unwrap();
    let mut boundary_mass = 0.0;
    for d in 0..s.num_dofs() {
        let w = common::unit(&probe, d);
        let m = common::integrate_cells(&w, 1, |k, xi, _| w.eval(k, xi).unwrap().value);
        if s.is_boundary(d) {
            assert_eq!(mass[d], 0.0);
            assert_eq!(flux[d], 0.0);
            boundary_mass += m;
        } else {
            assert!((mass[d] - m).abs() < 1e-14);
            assert!((flux[d] - 0.25 * common::boundary_flux(&w)).abs() < 1e-13);
        }
    }
    // partition of unity completed by the boundary functions
    let total: f64 = mass.iter().sum::<f64>() + boundary_mass;
    assert!((total - 1.0).abs() < 1e-13, "{total}");
}

#[test]
fn residual_examples() {
    let s = space(2, 2, 2);
    let params = PenaltyParams::new(1.0, 0.1, "full").unwrap();
    let zero = FeFunction::zero(s.clone());
    let bd = BoundaryData::new(field(|_| 0.0), field(|_| 0.0));
    let r = assemble_nonlinear_residual(&zero, &|_: &[f64]| 0.0, &bd, &params).unwrap();
    assert!(r.iter().all(|v| *v == 0.0));

    let mut bad = zero.clone();
    bad.coefficients_mut()[s.boundary_dofs()[0]] = 1e-6;
    let e = assemble_nonlinear_residual(&bad, &|_: &[f64]| 0.0, &bd, &params).unwrap_err();
    assert!(matches!(e, Error::Contract(_)));
}

#[test]
fn quadratic_solution_has_vanishing_residual() {
    // u = |x|²/2: det D²u = 1, lap² u = 0, lap u = d
    for (dim, n, k) in [(2, 2, 2), (2, 3, 3), (3, 2, 2)] {
        let s = space(dim, n, k);
        let u = interpolate(&s, &|x: &[f64]| 0.5 * x.iter().map(|t| t * t).sum::<f64>());
        let bd = BoundaryData::new(
            field(|x| 0.5 * x.iter().map(|t| t * t).sum::<f64>()),
            field(move |_| dim as f64),
        );
        for mode in ["full", "plain"] {
            let params = PenaltyParams::new(1.0, 0.05, mode).unwrap();
            let r = assemble_nonlinear_residual(&u, &|_: &[f64]| 1.0, &bd, &params).unwrap();
            let norm = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let j = assemble_jacobian(&u, &params).unwrap();
            let tol = rounding_floor(&j, s.interior_dofs(), u.coefficients()).max(1e-10);
            assert!(norm < tol, "dim {dim} k {k} {mode}: {norm} vs {tol}");
        }
    }
}

#[test]
fn dirichlet_split_examples() {
    let s = space(2, 2, 2);
    let zero = apply_dirichlet(&s, &|_: &[f64]| 0.0);
    assert_eq!(zero.boundary_dofs.len(), 16);
    assert!(zero.boundary_values.iter().all(|v| *v == 0.0));
    assert_eq!(zero.boundary_dofs.len() + zero.interior_dofs.len(), s.num_dofs());

    let x1 = apply_dirichlet(&s, &|x: &[f64]| x[0]);
    for (&d, v) in x1.boundary_dofs.iter().zip(&x1.boundary_values) {
        assert_eq!(*v, s.dof_coords()[d][0]);
        let c = s.dof_coords()[d];
        assert!(c[0] == 0.0 || c[0] == 1.0 || c[1] == 0.0 || c[1] == 1.0);
    }
}
