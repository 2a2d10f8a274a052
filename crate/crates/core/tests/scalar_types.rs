//! The numeric core is generic; spot-check it in single precision.

use fractal_duality::*;

#[test]
fn valuation_in_f32() {
    let v = valuation(0.1f32, Scale::new(0.01f32).unwrap()).unwrap();
    assert!((v - 0.5).abs() < 1e-6);
    let r = solve_duality_quadratic(0.3f32, 0.18).unwrap();
    assert!((r - 0.3).abs() < 1e-6);
}

#[test]
fn staircase_in_f32() {
    let st = staircase_from_cantor(CantorSeed::<f32>::middle_third(), 20).unwrap();
    assert!((st.eval(2.0 / 9.0).unwrap() - 0.25).abs() < 1e-5);
    assert!((st.extend(4.0 / 3.0) - 1.5).abs() < 1e-4);
}

#[test]
fn koch_in_f32() {
    let koch = koch_ifs(std::f32::consts::FRAC_PI_3).unwrap();
    let curve = hutchinson_iterate(&koch, &unit_initiator(), 4, DEFAULT_SEGMENT_CAP).unwrap();
    assert!((curve.length() - (4.0f32 / 3.0).powi(4)).abs() < 1e-4);
}

#[test]
fn wave_solver_in_f32() {
    let pi = std::f32::consts::PI;
    let st = staircase_from_cantor(CantorSeed::<f32>::middle_third(), 20).unwrap();
    let p = WaveProblem1D::new(1.0f32, 1.0, st, move |u: f32| (pi * u).sin())
        .unwrap()
        .with_modes(4)
        .with_level(10);
    let sol = solve_1d(&p).unwrap();
    assert!((sol.coefficients[0] - 1.0).abs() < 1e-4);
}
