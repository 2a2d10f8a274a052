//! Local fractional differentiation and Stieltjes integration in staircase
//! variables.
//!
//! A [`StaircaseCoordinate`] turns a normalized staircase into the change of
//! variable `u(x) = v(l)·st(x/l)` on `[0, l]`. Functions `f(u(x))` are then
//! differentiated with respect to `u` and integrated against `du`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fractal::{Cell, Staircase, DEFAULT_TABLE_CAP};
use crate::quadrature::integrate_adaptive;
use crate::scalar::Scalar;
use crate::valuation::Scale;

/// Relative tolerance of the Richardson-accelerated quotient.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-6;
/// Deepest refinement used by [`local_fractional_derivative`].
pub const DERIVATIVE_LEVEL_CAP: u32 = 40;
/// Tolerance of the change-of-variable quadrature route.
pub const QUADRATURE_TOLERANCE: f64 = 1e-13;

/// A staircase stretched over `[0, l]` with total mass `v(l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseCoordinate<S> {
    pub staircase: Staircase<S>,
    pub length: S,
    pub total_mass: S,
}

impl<S: Scalar> StaircaseCoordinate<S> {
    /// Uses the self-affine extension for the mass: `v(l) = extend(l)`.
    pub fn new(staircase: Staircase<S>, length: S) -> Result<Self> {
        if !(length > S::zero()) {
            return Err(Error::domain(format!("domain length must be positive, got {length}")));
        }
        let total_mass = staircase.extend(length);
        Ok(StaircaseCoordinate {
            staircase,
            length,
            total_mass,
        })
    }

    /// Unit interval, unit mass.
    pub fn unit(staircase: Staircase<S>) -> Self {
        StaircaseCoordinate {
            staircase,
            length: S::one(),
            total_mass: S::one(),
        }
    }

    pub fn with_total_mass(mut self, mass: S) -> Result<Self> {
        if !(mass > S::zero()) {
            return Err(Error::domain(format!("total mass must be positive, got {mass}")));
        }
        self.total_mass = mass;
        Ok(self)
    }

    fn check(&self, x: S) -> Result<()> {
        if !(x >= S::zero() && x <= self.length) {
            return Err(Error::domain(format!("{x} outside the domain [0, {}]", self.length)));
        }
        Ok(())
    }

    /// `u(x)` for `x ∈ [0, l]`.
    pub fn u(&self, x: S) -> Result<S> {
        self.check(x)?;
        Ok(self.u_unchecked(x))
    }

    fn u_unchecked(&self, x: S) -> S {
        let xi = (x / self.length).min(S::one());
        self.total_mass * self.staircase.eval(xi).unwrap_or(S::one())
    }

    /// A preimage `x` of `u ∈ [0, v(l)]`.
    pub fn x_of(&self, u: S) -> Result<S> {
        if !(u >= S::zero() && u <= self.total_mass) {
            return Err(Error::domain(format!("{u} outside [0, {}]", self.total_mass)));
        }
        Ok(self.length * self.staircase.inverse((u / self.total_mass).min(S::one()))?)
    }

    /// Support cells of the level-`level` partition in `(x, u)` coordinates.
    pub fn cells(&self, level: u32) -> Result<Vec<Cell<S>>> {
        let cells = self.staircase.cells(level, DEFAULT_TABLE_CAP)?;
        Ok(cells
            .into_iter()
            .map(|c| Cell {
                x_lo: c.x_lo * self.length,
                x_hi: c.x_hi * self.length,
                u_lo: c.u_lo * self.total_mass,
                u_hi: c.u_hi * self.total_mass,
            })
            .collect())
    }
}

/// `x ↦ f(u(x))` on `[0, l]`.
#[derive(Clone)]
pub struct FractalFunction<S> {
    outer: Arc<dyn Fn(S) -> S + Send + Sync>,
    pub coordinate: StaircaseCoordinate<S>,
}

impl<S> fmt::Debug for FractalFunction<S>
where
    S: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FractalFunction")
            .field("coordinate", &self.coordinate)
            .finish_non_exhaustive()
    }
}

impl<S: Scalar> FractalFunction<S> {
    pub fn new(outer: impl Fn(S) -> S + Send + Sync + 'static, coordinate: StaircaseCoordinate<S>) -> Self {
        FractalFunction {
            outer: Arc::new(outer),
            coordinate,
        }
    }

    pub fn outer(&self, u: S) -> S {
        (self.outer)(u)
    }

    pub fn eval(&self, x: S) -> Result<S> {
        Ok(self.outer(self.coordinate.u(x)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalDerivative<S> {
    pub value: S,
    pub on_support: bool,
    /// Refinement depth at which the quotient converged (0 in a gap).
    pub levels_used: u32,
}

/// `D^γ f(x) = lim Δf(u)/Δu`.
///
/// In a gap of the level-`level` partition the staircase is flat and the
/// result is `(0, false)`. On the support the quotient is taken over
/// `u ± h_n`, `h_n = v(l)·m^(−n)`, with Richardson extrapolation over
/// successive `n` until the relative change drops below `tol`. Near the ends
/// of `[0, v(l)]` the quotient becomes one-sided.
pub fn local_fractional_derivative<S: Scalar>(
    ff: &FractalFunction<S>,
    x: S,
    level: u32,
    tol: S,
) -> Result<FractionalDerivative<S>> {
    let coord = &ff.coordinate;
    coord.check(x)?;
    let xi = (x / coord.length).min(S::one());
    let location = coord.staircase.locate(xi, level)?;
    if !location.on_support {
        return Ok(FractionalDerivative {
            value: S::zero(),
            on_support: false,
            levels_used: 0,
        });
    }
    let u = coord.u_unchecked(x);
    let mass = coord.total_mass;
    let m = S::from_count(coord.staircase.branching());
    let cap = level.clamp(2, DERIVATIVE_LEVEL_CAP);
    // stop before rounding dominates the quotient
    let h_floor = mass * S::epsilon().powf(S::lit(0.4));

    let quotient = |h: S| -> (S, bool) {
        if u - h >= S::zero() && u + h <= mass {
            ((ff.outer(u + h) - ff.outer(u - h)) / (h + h), true)
        } else if u + h <= mass {
            ((ff.outer(u + h) - ff.outer(u)) / h, false)
        } else {
            ((ff.outer(u) - ff.outer(u - h)) / h, false)
        }
    };

    let mut h = mass / m;
    let (mut q_prev, _) = quotient(h);
    let mut r_prev: Option<S> = None;
    let mut r_before = q_prev;
    for n in 2..=cap {
        h /= m;
        let (q, centered) = quotient(h);
        let factor = if centered { m * m } else { m };
        let r = q + (q - q_prev) / (factor - S::one());
        if let Some(rp) = r_prev {
            if (r - rp).abs() <= tol * r.abs().max(S::one()) {
                return Ok(FractionalDerivative {
                    value: r,
                    on_support: true,
                    levels_used: n,
                });
            }
            r_before = rp;
        }
        r_prev = Some(r);
        q_prev = q;
        if h < h_floor {
            break;
        }
    }
    Err(Error::NonConvergence {
        what: "local fractional derivative quotient",
        previous: r_before.as_f64(),
        last: r_prev.unwrap_or(q_prev).as_f64(),
    })
}

/// Both evaluations of `∫ g(u(x)) du(x)` over `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesIntegral<S> {
    /// Midpoint-in-u sum over the support cells of the partition.
    pub value: S,
    /// Ordinary quadrature of `∫ g(u) du` over `[u(a), u(b)]`.
    pub change_of_variable: S,
    /// False when the quadrature route stopped at its panel cap (rough or
    /// noisy integrands); `change_of_variable` is then the last estimate.
    pub converged: bool,
    pub cells: usize,
}

impl<S: Scalar> StieltjesIntegral<S> {
    pub fn discrepancy(&self) -> S {
        (self.value - self.change_of_variable).abs()
    }
}

/// Midpoint-in-u Stieltjes sum; the only part shared by both routes is `g`.
pub fn stieltjes_sum<S: Scalar>(
    g: impl Fn(S) -> S,
    cells: &[Cell<S>],
    a: S,
    b: S,
    coord: &StaircaseCoordinate<S>,
) -> S {
    let mut total = S::zero();
    for c in cells {
        if c.x_hi <= a || c.x_lo >= b {
            continue;
        }
        let (u_lo, u_hi) = if c.x_lo >= a && c.x_hi <= b {
            (c.u_lo, c.u_hi)
        } else {
            (coord.u_unchecked(c.x_lo.max(a)), coord.u_unchecked(c.x_hi.min(b)))
        };
        let du = u_hi - u_lo;
        if du > S::zero() {
            total += g((u_lo + u_hi) / S::lit(2.0)) * du;
        }
    }
    total
}

/// `∫_a^b g(u(x)) du(x)` as an increment sum over the level-`level`
/// partition, cross-checked by ordinary quadrature in `u`.
pub fn stieltjes_integral<S: Scalar>(
    g: impl Fn(S) -> S,
    coord: &StaircaseCoordinate<S>,
    a: S,
    b: S,
    level: u32,
) -> Result<StieltjesIntegral<S>> {
    coord.check(a)?;
    coord.check(b)?;
    if !(a < b) {
        return Err(Error::domain(format!(
            "integration bounds must satisfy a < b, got [{a}, {b}]"
        )));
    }
    let cells = coord.cells(level)?;
    let value = stieltjes_sum(&g, &cells, a, b, coord);
    let (change_of_variable, converged) = match integrate_adaptive(
        &g,
        coord.u_unchecked(a),
        coord.u_unchecked(b),
        S::lit(QUADRATURE_TOLERANCE),
        1 << 12,
    ) {
        Ok(v) => (v, true),
        Err(Error::NonConvergence { last, .. }) => (S::lit(last), false),
        Err(e) => return Err(e),
    };
    Ok(StieltjesIntegral {
        value,
        change_of_variable,
        converged,
        cells: cells.len(),
    })
}

/// Ordinary and renormalized difference quotients of a smooth function.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormalizabilityCheck<S> {
    pub delta: S,
    pub steps: Vec<S>,
    /// `Δf/Δx` for each step.
    pub ordinary: Vec<S>,
    /// `Δv(f)/Δv(x)` with `v(δ + Δ) ≈ (Δ/δ)/ln δ⁻¹`.
    pub renormalized: Vec<S>,
    /// `max_h |renormalized(h) − ordinary(h_min)|`.
    pub max_residual: S,
}

/// Compares `Δf/Δx` with the quotient of renormalized increments. The
/// renormalization uses the first-order form `ln(y/δ) ≈ y/δ − 1` at `y = δ + Δ`;
/// without an explicit scale `δ = min(h)²`. The residual mixes the invariance
/// error with the first-order convergence of the forward quotient.
pub fn derivative_renormalizability_check<S: Scalar>(
    f: impl Fn(S) -> S,
    x0: S,
    scale: Option<Scale<S>>,
    h_list: &[S],
) -> Result<RenormalizabilityCheck<S>> {
    if h_list.is_empty() {
        return Err(Error::domain("need at least one increment"));
    }
    if h_list.iter().any(|h| !(*h > S::zero())) {
        return Err(Error::domain("increments must be positive"));
    }
    let h_min = h_list.iter().copied().fold(S::infinity(), S::min);
    let scale = match scale {
        Some(s) => s,
        None => Scale::new(h_min * h_min)?,
    };
    let delta = scale.delta();
    let log_inv = scale.log_inverse();
    let renorm = |increment: S| (increment / delta) / log_inv;

    let f0 = f(x0);
    let mut ordinary = Vec::with_capacity(h_list.len());
    let mut renormalized = Vec::with_capacity(h_list.len());
    let mut q_min = S::zero();
    for &h in h_list {
        let df = f(x0 + h) - f0;
        let q = df / h;
        ordinary.push(q);
        renormalized.push(renorm(df) / renorm(h));
        if h == h_min {
            q_min = q;
        }
    }
    let max_residual = renormalized.iter().map(|q| (*q - q_min).abs()).fold(S::zero(), S::max);
    Ok(RenormalizabilityCheck {
        delta,
        steps: h_list.to_vec(),
        ordinary,
        renormalized,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{staircase_from_cantor, CantorSeed};

    fn cantor_coord(level: u32) -> StaircaseCoordinate<f64> {
        StaircaseCoordinate::unit(staircase_from_cantor(CantorSeed::middle_third(), level).unwrap())
    }

    fn identity_coord() -> StaircaseCoordinate<f64> {
        StaircaseCoordinate::unit(Staircase::identity(30).unwrap())
    }

    #[test]
    fn derivative_examples() {
        let tol = DERIVATIVE_TOLERANCE;
        let lin = FractalFunction::new(|u| u, cantor_coord(30));
        let d = local_fractional_derivative(&lin, 0.25, 30, tol).unwrap();
        assert!(d.on_support);
        assert!((d.value - 1.0).abs() < 1e-9);

        let sq = FractalFunction::new(|u| u * u, cantor_coord(30));
        let d = local_fractional_derivative(&sq, 1.0 / 3.0, 30, tol).unwrap();
        assert!((d.value - 1.0).abs() < 1e-6);

        let sin = FractalFunction::new(f64::sin, identity_coord());
        let d = local_fractional_derivative(&sin, 0.0, 30, tol).unwrap();
        assert!((d.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn derivative_in_gap_is_zero() {
        let sq = FractalFunction::new(|u| u * u, cantor_coord(30));
        let d = local_fractional_derivative(&sq, 0.5, 30, DERIVATIVE_TOLERANCE).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(!d.on_support);
    }

    #[test]
    fn derivative_of_cusp_does_not_converge() {
        let cusp = FractalFunction::new(|u: f64| (u - 0.5).signum() * (u - 0.5).abs().sqrt(), cantor_coord(40));
        let x = cantor_coord(40).x_of(0.5).unwrap();
        let err = local_fractional_derivative(&cusp, x, 40, DERIVATIVE_TOLERANCE).unwrap_err();
        assert!(err.is_non_convergence());
    }

    #[test]
    fn stieltjes_examples() {
        let c = cantor_coord(40);
        let one = stieltjes_integral(|_| 1.0, &c, 0.0, 1.0, 12).unwrap();
        assert!((one.value - 1.0).abs() < 1e-12);
        let lin = stieltjes_integral(|u| u, &c, 0.0, 1.0, 12).unwrap();
        assert!((lin.value - 0.5).abs() < 1e-12);
        let sq = stieltjes_integral(|u| (std::f64::consts::PI * u).sin().powi(2), &c, 0.0, 1.0, 16).unwrap();
        assert!((sq.value - 0.5).abs() < 1e-12);
        assert!(sq.discrepancy() < 1e-9);
        assert!(stieltjes_integral(|u| u, &c, 0.5, 0.5, 8).is_err());
    }

    #[test]
    fn stieltjes_partial_interval() {
        let c = cantor_coord(40);
        let r = stieltjes_integral(|u| u, &c, 0.1, 0.8, 16).unwrap();
        let (ua, ub) = (c.u(0.1).unwrap(), c.u(0.8).unwrap());
        assert!((r.value - (ub * ub - ua * ua) / 2.0).abs() < 1e-9);
        assert!(r.discrepancy() < 1e-9);
    }

    #[test]
    fn stretched_coordinate() {
        let st = staircase_from_cantor(CantorSeed::middle_third(), 30).unwrap();
        let c: StaircaseCoordinate<f64> = StaircaseCoordinate::new(st, 3.0).unwrap();
        assert_eq!(c.total_mass, 3.0);
        assert!((c.u(1.0).unwrap() - 1.5).abs() < 1e-9);
        assert!(c.u(3.5).is_err());
        let total = stieltjes_integral(|_| 1.0, &c, 0.0, 3.0, 10).unwrap();
        assert!((total.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn renormalizability_examples() {
        let hs = [1e-4, 1e-5, 1e-6];
        let sq = derivative_renormalizability_check(|x: f64| x * x, 1.0, None, &hs).unwrap();
        assert!(sq.max_residual <= 1e-3);
        assert!((sq.delta - 1e-12).abs() < 1e-24);
        let lin = derivative_renormalizability_check(|x: f64| 3.0 * x + 1.0, 0.7, None, &[0.5, 0.25, 0.125]).unwrap();
        assert!(lin.max_residual <= 1e-12);
        let sin = derivative_renormalizability_check(f64::sin, 0.0, None, &hs).unwrap();
        for (o, r) in sin.ordinary.iter().zip(&sin.renormalized) {
            assert!((o - 1.0).abs() < 1e-4 && (r - 1.0).abs() < 1e-4);
        }
        assert!(derivative_renormalizability_check(f64::sin, 0.0, None, &[]).is_err());
    }
}
