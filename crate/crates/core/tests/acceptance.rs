//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p fractal-duality --test acceptance -- --nocapture`
//! to see the report. Every expected value is computed here from closed
//! forms or independent oracles, never from the library under test.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use fractal_duality::*;
use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, what: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

/// `|ln(x/δ) / ln δ|`, written out independently of the library.
fn valuation_oracle(x: f64, delta: f64) -> f64 {
    ((x / delta).ln() / delta.ln()).abs()
}

/// Cantor function from the ternary digits of `x`, mapped to binary.
fn cantor_oracle(x: f64, digits: u32) -> f64 {
    if x >= 1.0 {
        return 1.0;
    }
    let mut t = x;
    let mut value = 0.0;
    let mut weight = 0.5;
    for _ in 0..digits {
        t *= 3.0;
        let d = t.floor();
        t -= d;
        if d >= 2.0 {
            value += weight;
        } else if d >= 1.0 {
            return value + weight;
        }
        weight *= 0.5;
    }
    value
}

fn cantor_oracle_extended(x: f64) -> f64 {
    let whole = x.floor();
    whole + cantor_oracle(x - whole, 48)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let v: f64 = valuation(0.1, Scale::new(0.01).unwrap()).map_err(|e| e.to_string())?;
    check((v - 0.5).abs() <= 1e-12, || format!("v(0.1; 0.01) = {v}"))?;
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let delta = 10f64.powf(-rng.gen_range(1.0..12.0));
        let v0: f64 = rng.gen_range(1e-6..1.0);
        let x = delta * delta.powf(-v0);
        let got = valuation(x, Scale::new(delta).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max((got - v0).abs());
    }
    check(worst <= 1e-12, || format!("normal-form round trip error {worst:e}"))?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("round-trip max error {worst:.1e}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let delta: f64 = 1e-8;
    let scale = Scale::new(delta).unwrap();
    let slack = 2f64.ln() / 1e8f64.ln();
    let mut rng = StdRng::seed_from_u64(2);
    let mut tightest = f64::INFINITY;
    for _ in 0..10_000 {
        let x1 = delta.powf(rng.gen_range(0.05..2.0));
        let x2 = delta.powf(rng.gen_range(0.05..2.0));
        let r = ultrametric_slack(x1, x2, scale).map_err(|e| e.to_string())?;
        let lhs = valuation_oracle(x1 + x2, delta);
        let bound = valuation_oracle(x1, delta).max(valuation_oracle(x2, delta)) + slack;
        check(lhs <= bound, || format!("oracle violated at ({x1:e}, {x2:e})"))?;
        check((r.lhs - lhs).abs() <= 1e-12 && (r.bound - bound).abs() <= 1e-12, || {
            format!("library slack disagrees with oracle at ({x1:e}, {x2:e})")
        })?;
        check(r.holds(), || format!("library reports violation at ({x1:e}, {x2:e})"))?;
        tightest = tightest.min(bound - lhs);
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("10^4 pairs, smallest margin {tightest:.2e}"))
}

fn criterion_3() -> Outcome {
    let v: f64 = solve_duality_quadratic(0.3, 0.18).map_err(|e| e.to_string())?;
    check((v - 0.3).abs() <= 1e-12, || format!("v(0.3, 0.18) = {v}"))?;
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let kappa: f64 = rng.gen_range(0.0..10.0);
        let mu: f64 = rng.gen_range(1e-6..10.0);
        let v = solve_duality_quadratic(kappa, mu).map_err(|e| e.to_string())?;
        check(v > 0.0, || format!("nonpositive root at ({kappa}, {mu})"))?;
        worst = worst.max((v * (v + kappa) - mu).abs());
    }
    check(worst <= 1e-12, || format!("max |v(v+κ) − μ| = {worst:e}"))?;
    Ok(format!("max |v(v+κ) − μ| = {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let fp = arithmetical_fixed_points::<f64>(Ratio::new(3, 2));
    let exact = fp.rational_roots.ok_or("r = 3/2 should have rational roots")?;
    check(exact == (Ratio::from_integer(2), Ratio::new(-1, 2)), || {
        format!("exact roots {exact:?}")
    })?;
    check(fp.phi1 == 2.0 && fp.phi2 == -0.5, || {
        format!("roots {} {}", fp.phi1, fp.phi2)
    })?;
    check(!fp.is_quadratic_irrational, || "3/2 flagged irrational".into())?;
    let fp = arithmetical_fixed_points::<f64>(Ratio::from_integer(1));
    let s5 = 5f64.sqrt();
    check(
        (fp.phi1 - (1.0 + s5) / 2.0).abs() <= 1e-12 && (fp.phi2 - (1.0 - s5) / 2.0).abs() <= 1e-12,
        || format!("r = 1 roots {} {}", fp.phi1, fp.phi2),
    )?;
    check(fp.is_quadratic_irrational && fp.rational_roots.is_none(), || {
        "r = 1 not flagged irrational".into()
    })?;
    Ok("{2, −1/2} exact; golden pair irrational".into())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let st = staircase_from_cantor(CantorSeed::middle_third(), 40).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(0.0..1.0);
        let got = st.eval(x).map_err(|e| e.to_string())?;
        worst = worst.max((got - cantor_oracle(x, 40)).abs());
    }
    check(worst <= 1e-9, || format!("oracle mismatch {worst:e}"))?;
    for (x, want) in [(1.0 / 3.0, 0.5), (0.25, 1.0 / 3.0), (2.0 / 9.0, 0.25)] {
        let got = st.eval(x).map_err(|e| e.to_string())?;
        check((got - want).abs() <= 1e-9, || format!("v({x}) = {got}, want {want}"))?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("10^3 points, max oracle gap {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let koch = koch_ifs(PI / 3.0).map_err(|e| e.to_string())?;
    let s = 4f64.ln() / 3f64.ln();
    for n in 1..=8u32 {
        let curve = hutchinson_iterate(&koch, &unit_initiator(), n, DEFAULT_SEGMENT_CAP).map_err(|e| e.to_string())?;
        let mass = mass_function(&curve, s, 0.0, 1.0, MASS_TOLERANCE).map_err(|e| e.to_string())?;
        check((mass - 1.0).abs() <= 1e-9, || format!("level {n}: γˢ = {mass}"))?;
        let pts = curve.points();
        let summed: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let want = (4.0f64 / 3.0).powi(n as i32);
        check(
            (summed - want).abs() <= 1e-9 && (curve.length() - want).abs() <= 1e-9,
            || format!("level {n}: length {summed}, want {want}"),
        )?;
    }
    Ok("levels 1..8 exact mass and length".into())
}

fn criterion_7() -> Outcome {
    let b = quadratic_koch_boundary::<Ratio<i64>>(0);
    check(b.a_even == Ratio::new(1, 4) && b.a_odd == Ratio::new(5, 4), || {
        format!("{b:?}")
    })?;
    for k in 2..=15u32 {
        // a_{2k} − 1/3 = (a_0 − 1/3)/4^k = −1/(12·4^k)
        let exact = quadratic_koch_boundary::<Ratio<i64>>(k);
        let closed = Ratio::new(1, 3) - Ratio::new(1, 12 * 4i64.pow(k));
        check(exact.a_even == closed, || {
            format!("k = {k}: {} vs {closed}", exact.a_even)
        })?;
        let float = quadratic_koch_boundary::<f64>(k);
        let gap = (float.a_even - 1.0 / 3.0).abs();
        check(gap < 4f64.powi(-(k as i32)), || format!("k = {k}: |a − 1/3| = {gap:e}"))?;
    }
    Ok("a₀ = 1/4, a₁ = 5/4; even terms within 4^(−k) of 1/3".into())
}

fn criterion_8() -> Outcome {
    let level = 20;
    let st = staircase_from_cantor(CantorSeed::middle_third(), 40).map_err(|e| e.to_string())?;
    let coord = StaircaseCoordinate::unit(st);
    let square = FractalFunction::new(|u: f64| u * u, coord.clone());
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = coord.x_of(rng.gen_range(0.0..1.0)).map_err(|e| e.to_string())?;
        let d = local_fractional_derivative(&square, x, level, DERIVATIVE_TOLERANCE).map_err(|e| e.to_string())?;
        check(d.on_support, || format!("support point {x} reported in a gap"))?;
        worst = worst.max((d.value - 2.0 * cantor_oracle(x, 48)).abs());
    }
    check(worst <= 1e-3, || format!("|D − 2v| = {worst:e}"))?;

    // first ten gaps: one at depth 1, two at depth 2, four at depth 3, three at depth 4
    let mut gaps = Vec::new();
    let mut intervals = vec![(0.0f64, 1.0f64)];
    while gaps.len() < 10 {
        let mut next = Vec::new();
        for (a, b) in intervals {
            let third = (b - a) / 3.0;
            if gaps.len() < 10 {
                gaps.push(a + 1.5 * third);
            }
            next.push((a, a + third));
            next.push((b - third, b));
        }
        intervals = next;
    }
    for &x in &gaps {
        let d = local_fractional_derivative(&square, x, level, DERIVATIVE_TOLERANCE).map_err(|e| e.to_string())?;
        check(d.value == 0.0 && !d.on_support, || format!("gap midpoint {x}: {d:?}"))?;
    }

    let sine = FractalFunction::new(f64::sin, StaircaseCoordinate::unit(Staircase::identity(40).unwrap()));
    let mut worst_id: f64 = 0.0;
    for i in 0..20 {
        let x = i as f64 / 19.0;
        let d = local_fractional_derivative(&sine, x, 40, DERIVATIVE_TOLERANCE).map_err(|e| e.to_string())?;
        worst_id = worst_id.max((d.value - x.cos()).abs());
    }
    check(worst_id <= 1e-4, || {
        format!("identity staircase |D sin − cos| = {worst_id:e}")
    })?;
    Ok(format!(
        "support error {worst:.1e}, 10 gaps zero, identity error {worst_id:.1e}"
    ))
}

fn criterion_9() -> Outcome {
    let vc = 0.7;
    let st = staircase_from_cantor(CantorSeed::middle_third(), 40).map_err(|e| e.to_string())?;
    let problem = WaveProblem1D::new(1.0, vc, st.clone(), |u: f64| (PI * u).sin()).map_err(|e| e.to_string())?;
    let sol = solve_1d(&problem).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let t = 2.0 * i as f64 / 49.0;
        let vt = cantor_oracle_extended(t);
        for j in 0..50 {
            let x = j as f64 / 49.0;
            let got = eval_solution_1d(&sol, &problem, t, x).map_err(|e| e.to_string())?;
            let want = (vc * PI * vt).cos() * (PI * cantor_oracle(x, 48)).sin();
            worst = worst.max((got - want).abs());
        }
    }
    check(worst <= 1e-8, || format!("single-mode grid error {worst:e}"))?;

    let parabola = WaveProblem1D::new(1.0, vc, st, |u: f64| u * (1.0 - u))
        .map_err(|e| e.to_string())?
        .with_modes(9);
    let sol = solve_1d(&parabola).map_err(|e| e.to_string())?;
    let mut worst_c: f64 = 0.0;
    for (i, a) in sol.coefficients.iter().enumerate() {
        let n = (i + 1) as f64;
        let want = if (i + 1) % 2 == 1 { 8.0 / (n * PI).powi(3) } else { 0.0 };
        worst_c = worst_c.max((a - want).abs());
    }
    check(worst_c <= 1e-6, || format!("parabola coefficient error {worst_c:e}"))?;
    Ok(format!("grid error {worst:.1e}, coefficient error {worst_c:.1e}"))
}

fn criterion_10() -> Outcome {
    let seed = CantorSeed::new(2, 0.25).map_err(|e| e.to_string())?;
    let st = staircase_from_cantor(seed, 40).map_err(|e| e.to_string())?;
    let problem = WaveProblem2D::new(st.clone(), |a: f64, b: f64| (PI * a).sin() * (PI * b).sin());
    let sol = solve_2d(&problem).map_err(|e| e.to_string())?;
    check((sol.coefficient(1, 1) - 1.0).abs() <= 1e-6, || {
        format!("A₁₁ = {}", sol.coefficient(1, 1))
    })?;
    let mut others: f64 = 0.0;
    for m in 1..=problem.m_modes {
        for n in 1..=problem.n_modes {
            if (m, n) != (1, 1) {
                others = others.max(sol.coefficient(m, n).abs());
            }
        }
    }
    check(others < 1e-6, || format!("largest spurious coefficient {others:e}"))?;
    let omega = PI * 2f64.sqrt();
    check((sol.frequency(1, 1) - omega).abs() <= 1e-10, || {
        format!("ω₁₁ = {}", sol.frequency(1, 1))
    })?;
    // the time dependence enters through v(T) only
    let (x, y) = (0.3, 0.85);
    let spatial = (PI * st.eval(x).unwrap()).sin() * (PI * st.eval(y).unwrap()).sin();
    let mut worst_t: f64 = 0.0;
    for i in 0..20 {
        let t = 0.15 * i as f64;
        let vt = st.extend(t);
        let got = eval_solution_2d(&sol, &problem, t, x, y).map_err(|e| e.to_string())?;
        worst_t = worst_t.max((got - (omega * vt).cos() * spatial).abs());
    }
    check(worst_t <= 1e-10, || format!("temporal profile error {worst_t:e}"))?;

    let id = Staircase::identity(40).unwrap();
    let smooth = WaveProblem2D::new(id, |a: f64, b: f64| (PI * a).sin() * (PI * b).sin());
    let sol = solve_2d(&smooth).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let t = 0.23 * i as f64;
        for j in 0..=10 {
            for k in 0..=10 {
                let (x, y) = (j as f64 / 10.0, k as f64 / 10.0);
                let got = eval_solution_2d(&sol, &smooth, t, x, y).map_err(|e| e.to_string())?;
                let want = (omega * t).cos() * (PI * x).sin() * (PI * y).sin();
                worst = worst.max((got - want).abs());
            }
        }
    }
    check(worst <= 1e-12, || format!("smooth-limit membrane error {worst:e}"))?;
    Ok(format!(
        "spurious {others:.1e}, time error {worst_t:.1e}, smooth error {worst:.1e}"
    ))
}

fn criterion_11() -> Outcome {
    let vc = 0.6;
    let st = staircase_from_cantor(CantorSeed::middle_third(), 40).map_err(|e| e.to_string())?;
    let problem = WaveProblem1D::new(1.0, vc, st, |u: f64| (PI * u).sin()).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(11);
    let mut ks: Vec<f64> = (0..1000).map(|_| rng.gen_range(1e-6..10.0)).collect();
    ks.sort_by(f64::total_cmp);
    let table = dispersion_table(&problem, &ks).map_err(|e| e.to_string())?;
    let drops = table.windows(2).filter(|w| w[1].1 < w[0].1).count();
    check(drops == 0, || format!("{drops} decreasing steps"))?;

    let id = Staircase::identity(40).unwrap();
    let linear = WaveProblem1D::new(1.0, vc, id, |u: f64| (PI * u).sin()).map_err(|e| e.to_string())?;
    let table = dispersion_table(&linear, &ks).map_err(|e| e.to_string())?;
    let worst = table.iter().map(|(k, w)| (w - vc * k).abs()).fold(0.0, f64::max);
    check(worst <= 1e-12, || format!("identity dispersion error {worst:e}"))?;
    Ok(format!("monotone over 10^3 samples, linear error {worst:.1e}"))
}

fn criterion_12() -> Outcome {
    let st = staircase_from_cantor(CantorSeed::middle_third(), 40).map_err(|e| e.to_string())?;
    let coord = StaircaseCoordinate::unit(st.clone());
    let mut worst: f64 = 0.0;
    for m in 1..=8 {
        for n in 1..=8 {
            let (mf, nf) = (m as f64, n as f64);
            let g = |u: f64| 2.0 * (mf * PI * u).sin() * (nf * PI * u).sin();
            let r = stieltjes_integral(g, &coord, 0.0, 1.0, 16).map_err(|e| e.to_string())?;
            let want = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((r.value - want).abs());
        }
    }
    check(worst <= 1e-6, || format!("Gram matrix error {worst:e}"))?;

    let vc = 0.8;
    let problem = WaveProblem1D::new(1.0, vc, st, |u: f64| u * u * (1.0 - u))
        .map_err(|e| e.to_string())?
        .with_modes(16);
    let sol = solve_1d(&problem).map_err(|e| e.to_string())?;
    let energies: Vec<f64> = (0..10)
        .map(|i| energy_1d(&sol, &problem, problem.fractal_time(0.31 * i as f64), 512))
        .collect();
    let e0 = energies[0];
    let drift = energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0;
    check(drift <= 1e-6, || format!("relative energy drift {drift:e}"))?;
    // analytic value of the truncated energy: (v(l)/2) Σ a_n² ω_n²
    let analytic: f64 = sol
        .coefficients
        .iter()
        .zip(&sol.omega_f)
        .map(|(a, w)| a * a * w * w)
        .sum::<f64>()
        / 2.0;
    check((e0 - analytic).abs() <= 1e-9 * analytic, || {
        format!("energy {e0} vs {analytic}")
    })?;
    Ok(format!("Gram error {worst:.1e}, energy drift {drift:.1e}"))
}

fn criterion_13() -> Outcome {
    let mut rng = StdRng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let delta = 10f64.powf(-rng.gen_range(0.5..10.0));
        let x = delta.powf(rng.gen_range(0.0..0.999));
        let r = rg_phenomenological_value(x, Scale::new(delta).unwrap()).map_err(|e| e.to_string())?;
        let v = valuation_oracle(x, delta);
        let oracle = (delta / x).powf(v);
        worst = worst.max(r.discrepancy()).max((r.value - oracle).abs());
    }
    check(worst <= 1e-12, || format!("two-route discrepancy {worst:e}"))?;
    let mut worst_cs: f64 = 0.0;
    let cases = [(0.1, 0.01, 0.5), (0.3, 1e-4, 0.2), (0.05, 1e-3, 0.8), (0.9, 0.5, 0.1)];
    for (x, delta, v) in cases {
        let r: f64 = rg_callan_symanzik_residual(x, v, Scale::new(delta).unwrap(), 1e-4).map_err(|e| e.to_string())?;
        worst_cs = worst_cs.max(r.abs());
    }
    check(worst_cs < 1e-6, || format!("Callan–Symanzik residual {worst_cs:e}"))?;
    Ok(format!("two-route {worst:.1e}, CS residual {worst_cs:.1e}"))
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let criteria: [Criterion; 13] = [
        ("C1 valuation exactness", criterion_1),
        ("C2 ultrametric suite", criterion_2),
        ("C3 duality quadratic", criterion_3),
        ("C4 arithmetical fixed points", criterion_4),
        ("C5 Cantor-function oracle", criterion_5),
        ("C6 mass-function exactness", criterion_6),
        ("C7 quadratic-Koch recurrence", criterion_7),
        ("C8 local fractional derivative", criterion_8),
        ("C9 1D solver", criterion_9),
        ("C10 2D solver", criterion_10),
        ("C11 dispersion", criterion_11),
        ("C12 energy and orthogonality", criterion_12),
        ("C13 RG consistency", criterion_13),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let t = Instant::now();
        match run() {
            Ok(detail) => println!("[PASS] {name}: {detail} ({:.2?})", t.elapsed()),
            Err(why) => {
                println!("[FAIL] {name}: {why} ({:.2?})", t.elapsed());
                failed.push(name);
            }
        }
    }
    let total = start.elapsed();
    if total < Duration::from_secs(60) {
        println!("[PASS] C14 suite runtime: {total:.2?} < 60 s");
    } else {
        println!("[FAIL] C14 suite runtime: {total:.2?}");
        failed.push("C14 suite runtime");
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
