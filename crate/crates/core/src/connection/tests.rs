use super::*;
use crate::error::{Error, Warning};
use crate::linalg::Matrix;
use crate::normal_form::linearize;
use crate::scalar::C;
use crate::series::{compose_germs, invert_germ, parse_germ, parse_series, SeriesMatrix, TruncatedMapGerm};
use crate::spectral::DEFAULT_TOL;

fn germ(texts: &[&str], cap: usize) -> TruncatedMapGerm<f64> {
    parse_germ(texts, texts.len(), cap).unwrap()
}

fn series_matrix(texts: &[&str], r: usize, n: usize, cap: usize) -> SeriesMatrix<f64> {
    SeriesMatrix::from_entries(r, r, texts.iter().map(|t| parse_series(t, n, cap).unwrap()).collect()).unwrap()
}

#[test]
fn pullback_of_zero_under_linear_action_vanishes() {
    let g = germ(&["z1/2 + z2/5", "z2/3"], 4);
    let fiber = Matrix::<f64>::from_real_rows(&[&[2.0, 1.0], &[0.0, 3.0]]);
    let e = EquivariantBundle::constant(&fiber, &g).unwrap();
    let out = gauge_pullback(&ConnectionForm::zero(2, 2, 4), &e).unwrap();
    assert_eq!(out.max_abs(), 0.0);
}

#[test]
fn pullback_of_constant_form_under_linear_action() {
    let a = Matrix::<f64>::from_real_rows(&[&[0.5, 0.25], &[0.0, 1.0 / 3.0]]);
    let g = TruncatedMapGerm::linear(&a, 3).unwrap();
    let e = EquivariantBundle::constant(&a, &g).unwrap();
    let c = Matrix::<f64>::from_real_rows(&[&[1.0, -2.0], &[0.5, 3.0]]);
    // θ = C dz_1
    let forms = vec![SeriesMatrix::constant(&c, 2, 3), SeriesMatrix::zeros(2, 2, 2, 3)];
    let theta = ConnectionForm::from_forms(forms).unwrap();
    let out = gauge_pullback(&theta, &e).unwrap();
    let conj = a.inverse().unwrap().mul(&c).mul(&a);
    for j in 0..2 {
        let expected = SeriesMatrix::constant(&conj.scale(a[(0, j)]), 2, 3);
        assert!(out.form(j).sub(&expected).max_abs() < 1e-15);
    }
}

#[test]
fn pullback_of_zero_on_shear_tangent_bundle() {
    // φ = [[1/2, 2 z2], [0, 1/3]], φ⁻¹ ∂_2 φ = [[0, 4], [0, 0]]
    let g = germ(&["z1/2 + z2^2", "z2/3"], 5);
    let e = EquivariantBundle::tangent(&g);
    let out = gauge_pullback(&ConnectionForm::zero(2, 2, 5), &e).unwrap();
    assert_eq!(out.form(0).max_abs(), 0.0);
    let expected = series_matrix(&["0", "4", "0", "0"], 2, 2, 5);
    assert!(out.form(1).sub(&expected).max_abs() < 1e-14);
}

#[test]
fn singular_cocycle_is_rejected() {
    let g = germ(&["z1/2", "z2/3"], 3);
    let phi = series_matrix(&["1", "1", "1", "1 + z1"], 2, 2, 3);
    assert!(matches!(EquivariantBundle::new(phi, g), Err(Error::SingularCocycle)));
}

#[test]
fn linear_action_with_constant_cocycle_has_zero_connection() {
    let g = germ(&["z1/2", "z2/3 + z1/7"], 5);
    let fiber = Matrix::<f64>::from_real_rows(&[&[5.0, 0.0], &[1.0, 7.0]]);
    let e = EquivariantBundle::constant(&fiber, &g).unwrap();
    let theta = solve_equivariant_connection(&e, DEFAULT_TOL).unwrap();
    assert_eq!(theta.max_abs(), 0.0);
}

#[test]
fn shear_tangent_connection_is_a_fixed_point() {
    let g = germ(&["z1/2 + z2^2", "z2/3"], 6);
    let e = EquivariantBundle::tangent(&g);
    let sol = solve_equivariant_connection_with(&e, DEFAULT_TOL, SolveOrdering::Primary).unwrap();
    assert!(sol.connection.max_abs() > 0.1);
    assert!(sol.fixed_point_residual <= 1e-12, "{}", sol.fixed_point_residual);
    let again = gauge_pullback(&sol.connection, &e).unwrap();
    assert!(again.max_abs_diff(&sol.connection) <= 1e-12);
    assert!(sol.warnings.is_empty());
}

#[test]
fn shear_connection_matches_hand_solution() {
    // U = (z1 + c z2^2, z2) with c = 18/7, M = DU, θ = M⁻¹ dM = [[0, 2c], [0, 0]] dz2
    let g = germ(&["z1/2 + z2^2", "z2/3"], 6);
    let theta = solve_equivariant_connection(&EquivariantBundle::tangent(&g), DEFAULT_TOL).unwrap();
    let c = 18.0 / 7.0;
    let expected = series_matrix(&["0", &format!("{}", 2.0 * c), "0", "0"], 2, 2, 6);
    assert!(theta.form(0).truncated(5).max_abs() < 1e-13);
    assert!(theta.form(1).truncated(5).sub(&expected).max_abs() < 1e-13);
}

#[test]
fn resonant_tangent_bundle_is_obstructed_in_degree_zero() {
    let g = germ(&["z1/2", "z2/4 + z1^2"], 5);
    let e = EquivariantBundle::tangent(&g);
    match solve_equivariant_connection(&e, DEFAULT_TOL) {
        Err(Error::ResonanceObstruction { degree, weight, obstruction }) => {
            assert_eq!(degree, 0);
            assert!((weight.0 - 1.0).abs() < 1e-12 && weight.1.abs() < 1e-12);
            assert!((obstruction - 8.0).abs() < 1e-12);
        }
        other => panic!("expected an obstruction, got {other:?}"),
    }
    assert!(matches!(linearize_via_connection(&g, DEFAULT_TOL), Err(Error::ResonanceObstruction { degree: 0, .. })));
}

#[test]
fn resonant_but_consistent_bundle_warns() {
    // linear resonant base, constant cocycle: every graded rhs vanishes
    let g = germ(&["z1/2", "z2/4"], 4);
    let e = EquivariantBundle::tangent(&g);
    let sol = solve_equivariant_connection_with(&e, DEFAULT_TOL, SolveOrdering::Primary).unwrap();
    assert_eq!(sol.connection.max_abs(), 0.0);
    assert!(sol.warnings.iter().any(|w| matches!(w, Warning::ResonantButSolvable { degree: 0, .. })));
}

#[test]
fn orderings_agree_on_non_normal_bundle() {
    let g = germ(&["0.5*z1 + 0.2*z2 + z2*z3", "0.3*z2 - 0.1*z3 + z1^2", "0.4*z3 + 0.5*z1*z2 - z3^2"], 5);
    let phi = series_matrix(&["2 + z1", "0.5*z3", "z2^2", "1 - z2", "3 + z1*z3", "0.25", "0.1*z1", "z3", "7"], 3, 3, 5);
    let e = EquivariantBundle::new(phi, g).unwrap();
    let a = solve_equivariant_connection_with(&e, DEFAULT_TOL, SolveOrdering::Primary).unwrap();
    let b = solve_equivariant_connection_with(&e, DEFAULT_TOL, SolveOrdering::Reversed).unwrap();
    assert!(a.fixed_point_residual < 1e-10, "{}", a.fixed_point_residual);
    assert!(b.fixed_point_residual < 1e-10, "{}", b.fixed_point_residual);
    assert!(a.connection.max_abs_diff(&b.connection) < 1e-10);
}

#[test]
fn complex_spectrum_bundle_is_a_fixed_point() {
    // rotation-scaled base: eigenvalues 0.4 ± 0.3i
    let g = germ(&["0.4*z1 - 0.3*z2 + z1*z2", "0.3*z1 + 0.4*z2 + z1^2"], 6);
    let e = EquivariantBundle::tangent(&g);
    let a = solve_equivariant_connection_with(&e, DEFAULT_TOL, SolveOrdering::Primary).unwrap();
    let b = solve_equivariant_connection_with(&e, DEFAULT_TOL, SolveOrdering::Reversed).unwrap();
    assert!(a.fixed_point_residual < 1e-10);
    assert!(a.connection.max_abs_diff(&b.connection) < 1e-10);
    assert!(curvature(&a.connection).max_abs() < 1e-10);
    assert!(torsion(&a.connection).unwrap().max_abs() < 1e-10);
}

#[test]
fn linear_germ_develops_to_identity() {
    let g = germ(&["z1/2 + z2/5", "z2/3"], 5);
    let out = linearize_via_connection(&g, DEFAULT_TOL).unwrap();
    assert!(out.report.change.max_abs_diff(&TruncatedMapGerm::identity(2, 5)).unwrap() < 1e-15);
    assert!(out.conjugacy_residual < 1e-15);
}

#[test]
fn shear_pipeline_agrees_with_normal_form() {
    let g = germ(&["z1/2 + z2^2", "z2/3"], 8);
    let out = linearize_via_connection(&g, DEFAULT_TOL).unwrap();
    assert!(out.curvature_residual < 1e-10);
    assert!(out.torsion_residual < 1e-10);
    assert!(out.closedness_residual < 1e-10);
    assert!(out.conjugacy_residual <= 1e-12, "{}", out.conjugacy_residual);
    let z1 = out.report.change.component(0);
    let expected = parse_series("z1 + 18/7*z2^2", 2, 8).unwrap();
    assert!(z1.max_abs_diff(&expected).unwrap() < 1e-13);
    let nf = linearize(&g, DEFAULT_TOL).unwrap();
    let diff = compose_germs(&out.report.change, &invert_germ(&nf.change).unwrap()).unwrap();
    assert!(diff.max_nonlinear_abs() < 1e-12);
}

#[test]
fn three_dimensional_pipeline_linearizes() {
    let g = germ(&["0.6*z1 + 0.3*z2^2 - 0.2*z1*z3", "0.5*z2 + 0.2*z3 + 0.1*z1^3", "0.35*z3 + 0.4*z1*z2"], 6);
    let out = linearize_via_connection(&g, DEFAULT_TOL).unwrap();
    assert!(out.curvature_residual < 1e-9, "{}", out.curvature_residual);
    assert!(out.torsion_residual < 1e-9, "{}", out.torsion_residual);
    assert!(out.conjugacy_residual < 1e-9, "{}", out.conjugacy_residual);
    let nf = linearize(&g, DEFAULT_TOL).unwrap();
    let diff = compose_germs(&out.report.change, &invert_germ(&nf.change).unwrap()).unwrap();
    assert!(diff.max_nonlinear_abs() < 1e-8);
    assert_eq!(out.report.change.linear_part().diagonal(), vec![C::new(1.0, 0.0); 3]);
}
