//! Renormalized asymptotic valuations.
//!
//! A small quantity `x` is measured against a reference scale `δ ∈ (0,1)`
//! through `v(x) = |ln(x/δ) / ln δ|`. The module collects the arithmetic
//! built on that valuation: the strong triangle inequality with its finite-δ
//! slack, classification of null sequences against a privileged scale,
//! dual pairs `v⁻·v⁺ = μ`, and the renormalization-group bookkeeping
//! (`Z = δ^(-v)`, the phenomenological value `ξ^v` and its Callan–Symanzik
//! residual).
//!
//! Every "up to o(1)" statement is reported as an explicit bound of the
//! form `C / ln(δ⁻¹)`.

use std::fmt;
use std::sync::Arc;

use num_integer::Roots;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reference infinitesimal `δ`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale<S> {
    delta: S,
}

impl<S: Scalar> Scale<S> {
    pub fn new(delta: S) -> Result<Self> {
        if !(delta > S::zero() && delta < S::one()) {
            return Err(Error::domain(format!("scale must lie in (0,1), got {delta}")));
        }
        Ok(Scale { delta })
    }

    #[inline]
    pub fn delta(&self) -> S {
        self.delta
    }

    /// `ln(δ⁻¹) > 0`, the denominator of every valuation.
    #[inline]
    pub fn log_inverse(&self) -> S {
        -self.delta.ln()
    }

    /// `δ · δ^(-v)`, the normal-form representative with valuation `v`.
    pub fn normal_form(&self, v: S) -> S {
        self.delta * self.delta.powf(-v)
    }
}

/// Valuation relative to an arbitrary positive scale `δ ≠ 1`; the inversion
/// property measures `1/x` against `1/δ`.
fn valuation_raw<S: Scalar>(x: S, delta: S) -> S {
    ((x / delta).ln() / delta.ln()).abs()
}

fn check_positive<S: Scalar>(x: S, what: &str) -> Result<()> {
    if x > S::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be positive and finite, got {x}")))
    }
}

/// `v(x) = |log_δ(x/δ)|`.
pub fn valuation<S: Scalar>(x: S, scale: Scale<S>) -> Result<S> {
    check_positive(x, "argument of the valuation")?;
    Ok(valuation_raw(x, scale.delta))
}

/// Both sides of the strong triangle inequality with explicit slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltrametricSlack<S> {
    /// `v(x1 + x2)`
    pub lhs: S,
    /// `max(v(x1), v(x2)) + ln 2 / ln δ⁻¹`
    pub bound: S,
}

impl<S: Scalar> UltrametricSlack<S> {
    pub fn holds(&self) -> bool {
        self.lhs <= self.bound
    }
}

/// Evaluates `v(x1+x2)` against `max(v(x1), v(x2)) + ln2/ln δ⁻¹`.
///
/// Both summands and their sum must lie in the asymptotic window `(0, 1)`.
/// Because `y ↦ |ln y − ln δ|` is 1-Lipschitz in `ln y` and
/// `max(x1,x2) ≤ x1+x2 ≤ 2·max(x1,x2)`, `lhs ≤ bound` holds for every
/// admissible pair, not only asymptotically.
pub fn ultrametric_slack<S: Scalar>(x1: S, x2: S, scale: Scale<S>) -> Result<UltrametricSlack<S>> {
    check_positive(x1, "x1")?;
    check_positive(x2, "x2")?;
    let sum = x1 + x2;
    if sum >= S::one() {
        return Err(Error::domain(format!(
            "x1 + x2 = {sum} leaves the asymptotic window (0, 1)"
        )));
    }
    let lhs = valuation_raw(sum, scale.delta);
    let bound = valuation_raw(x1, scale.delta).max(valuation_raw(x2, scale.delta)) + S::LN_2() / scale.log_inverse();
    Ok(UltrametricSlack { lhs, bound })
}

/// Deviations from the four invariance properties of the valuation, each
/// paired with its finite-δ bound `C / ln δ⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceResiduals<S> {
    /// `|v(kx) − v(x)|`, equal to `|ln k| / ln δ⁻¹`.
    pub scaling: S,
    /// `|v_{kδ}(x) − v_δ(x)|`.
    pub reparametrization: S,
    /// `|v_{1/δ}(1/x) − v_δ(x)|`, zero up to rounding.
    pub inversion: S,
    /// `|v(x + x0) − v(x)|`.
    pub translation: S,
    pub bounds: InvarianceBounds<S>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceBounds<S> {
    pub scaling: S,
    pub reparametrization: S,
    pub inversion: S,
    pub translation: S,
}

impl<S: Scalar> InvarianceResiduals<S> {
    /// True when every residual sits under its bound, allowing `slack`
    /// for rounding.
    pub fn within_bounds(&self, slack: S) -> bool {
        self.scaling <= self.bounds.scaling + slack
            && self.reparametrization <= self.bounds.reparametrization + slack
            && self.inversion <= self.bounds.inversion + slack
            && self.translation <= self.bounds.translation + slack
    }
}

pub fn invariance_residuals<S: Scalar>(x: S, k: S, x0: S, scale: Scale<S>) -> Result<InvarianceResiduals<S>> {
    check_positive(x, "x")?;
    check_positive(k, "k")?;
    let delta = scale.delta;
    let kx = k * x;
    let k_delta = k * delta;
    if !(k_delta < S::one()) {
        return Err(Error::domain(format!(
            "reparametrized scale kδ = {k_delta} must stay below 1"
        )));
    }
    if !(delta <= x0.abs() && x0.abs() <= x) {
        return Err(Error::domain(format!(
            "translation requires δ ≤ |x0| ≤ x, got x0 = {x0}, x = {x}"
        )));
    }
    let shifted = x + x0;
    check_positive(shifted, "x + x0")?;

    let log_inv = scale.log_inverse();
    let v = valuation_raw(x, delta);
    let ln_k = k.ln();

    let scaling = (valuation_raw(kx, delta) - v).abs();
    let reparametrization = (valuation_raw(x, k_delta) - v).abs();
    let inversion = (valuation_raw(x.recip(), delta.recip()) - v).abs();
    let translation = (valuation_raw(shifted, delta) - v).abs();

    // |v_{kδ} − v_δ| ≤ |ln k|·(1 + v) / (ln δ⁻¹ − ln k)
    let bounds = InvarianceBounds {
        scaling: ln_k.abs() / log_inv,
        reparametrization: ln_k.abs() * (S::one() + v) / (log_inv - ln_k),
        inversion: S::zero(),
        translation: (S::one() + x0 / x).ln().abs() / log_inv,
    };
    Ok(InvarianceResiduals {
        scaling,
        reparametrization,
        inversion,
        translation,
        bounds,
    })
}

// ---------------------------------------------------------------------------
// Sequence classification

/// Real sequence sampled on a geometric grid `n_j = n₀·2^j`, `j = 0..=J`.
#[derive(Clone)]
pub struct SequenceSpec<S> {
    generator: Arc<dyn Fn(u64) -> S + Send + Sync>,
    pub n0: u64,
    pub doublings: u32,
}

impl<S> fmt::Debug for SequenceSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SequenceSpec")
            .field("n0", &self.n0)
            .field("doublings", &self.doublings)
            .finish_non_exhaustive()
    }
}

impl<S: Scalar> SequenceSpec<S> {
    pub const DEFAULT_N0: u64 = 1 << 10;
    pub const DEFAULT_DOUBLINGS: u32 = 20;

    pub fn new(generator: impl Fn(u64) -> S + Send + Sync + 'static) -> Self {
        SequenceSpec {
            generator: Arc::new(generator),
            n0: Self::DEFAULT_N0,
            doublings: Self::DEFAULT_DOUBLINGS,
        }
    }

    pub fn with_schedule(mut self, n0: u64, doublings: u32) -> Self {
        self.n0 = n0;
        self.doublings = doublings;
        self
    }

    pub fn schedule(&self) -> impl Iterator<Item = u64> + '_ {
        (0..=self.doublings).map(move |j| self.n0 << j)
    }

    pub fn at(&self, n: u64) -> S {
        (self.generator)(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SequenceLabel {
    /// Valuation tends to zero: `A⁰`.
    IrrelevantNull,
    /// Valuation oscillates or diverges: `A^∞`.
    IrrelevantDivergent,
    /// `|ā_n| = a_n^(1−k₊)` with `k₊ ∈ (0,1)`: `A⁺`.
    RelevantPlus,
    /// `|ā_n| = a_n^(1+k₋)` with `k₋ > 1`: `A⁻`.
    RelevantMinus,
    /// Self-dual boundary class `A′`.
    Boundary,
}

impl fmt::Display for SequenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SequenceLabel::IrrelevantNull => "IrrelevantNull",
            SequenceLabel::IrrelevantDivergent => "IrrelevantDivergent",
            SequenceLabel::RelevantPlus => "RelevantPlus",
            SequenceLabel::RelevantMinus => "RelevantMinus",
            SequenceLabel::Boundary => "Boundary",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecayRate {
    Constant,
    SlowlyVarying,
    FastNull,
    Growing,
}

impl fmt::Display for DecayRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DecayRate::Constant => "Constant",
            DecayRate::SlowlyVarying => "SlowlyVarying",
            DecayRate::FastNull => "FastNull",
            DecayRate::Growing => "Growing",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceClass<S> {
    pub label: SequenceLabel,
    /// Limit of `v_n`; `k₊` for `RelevantPlus`, `k₋` for `RelevantMinus`,
    /// `γ` for `Boundary`.
    pub exponent_estimate: S,
    /// Limit of the signed exponent `e_n` in `|ā_n| = a_n^(1+e_n)`.
    pub signed_exponent: S,
    pub rate: DecayRate,
    /// Least-squares slope of `ln v_n` against `ln n`.
    pub log_slope: S,
    pub samples: usize,
}

/// Valuations below this are indistinguishable from rounding noise in
/// `ln ā / ln a`.
const VALUATION_FLOOR: f64 = 1e-12;
const RATE_SLOPE_TOL: f64 = 0.01;
const LABEL_TOL: f64 = 1e-9;

/// Classifies `ā` against the privileged scale `a` by the refined partition.
///
/// Writing `|ā_n| = a_n^(1+e_n)`, the valuation is `v_n = |e_n|`. The
/// decision rule:
/// * more than `⌈J/4⌉` sign alternations of `v_n − median` ⇒ divergent;
/// * `e_n → 0` ⇒ null, `e_n` growing ⇒ divergent;
/// * `e ∈ (−1,0)` ⇒ `RelevantPlus`, `e > 1` ⇒ `RelevantMinus`,
///   `e ∈ (0,1]` or `e = −1` ⇒ `Boundary`.
///
/// The rate comes from the least-squares slope of `ln v_n` on `ln n`.
pub fn classify_sequence<S: Scalar>(seq: &SequenceSpec<S>, scale_seq: &SequenceSpec<S>) -> Result<SequenceClass<S>> {
    let ns: Vec<u64> = seq.schedule().collect();
    if ns.len() < 3 {
        return Err(Error::domain("classification needs at least three samples"));
    }
    let mut exps = Vec::with_capacity(ns.len());
    let mut last_bar = S::zero();
    let mut first_a = S::zero();
    let mut last_a = S::zero();
    for (j, &n) in ns.iter().enumerate() {
        let a = scale_seq.at(n);
        if !(a > S::zero() && a < S::one() && a.is_finite()) {
            return Err(Error::domain(format!(
                "scale sequence must be positive and below 1 on the schedule, got a_{n} = {a}"
            )));
        }
        let bar = seq.at(n).abs();
        if !(bar > S::zero() && bar.is_finite()) {
            return Err(Error::domain(format!(
                "sequence must be nonzero and finite on the schedule, got |ā_{n}| = {bar}"
            )));
        }
        if j == 0 {
            first_a = a;
        }
        last_a = a;
        last_bar = bar;
        exps.push(bar.ln() / a.ln() - S::one());
    }
    if !(last_a < first_a) {
        return Err(Error::domain("scale sequence is not null on the schedule"));
    }
    if last_bar >= S::one() {
        return Err(Error::domain(format!(
            "sequence is not null: |ā| = {last_bar} at the last sample"
        )));
    }

    let vals: Vec<S> = exps.iter().map(|e| e.abs()).collect();
    let samples = vals.len();
    let floor = S::lit(VALUATION_FLOOR);
    let tol = S::lit(LABEL_TOL);

    let (slope, rate) = {
        let pts: Vec<(S, S)> = ns
            .iter()
            .zip(&vals)
            .filter(|(_, v)| **v > floor)
            .map(|(&n, &v)| (S::from_u64(n).unwrap().ln(), v.ln()))
            .collect();
        let slope = if pts.len() >= 2 { ls_slope(&pts) } else { S::zero() };
        let rate = if pts.len() < 2 {
            if vals.iter().all(|v| *v <= floor) {
                DecayRate::Constant
            } else {
                DecayRate::FastNull
            }
        } else {
            rate_from_slope(slope)
        };
        (slope, rate)
    };

    let build = |label, exponent_estimate, signed_exponent| SequenceClass {
        label,
        exponent_estimate,
        signed_exponent,
        rate,
        log_slope: slope,
        samples,
    };

    // Oscillation: sign alternations of v_n − median beyond ⌈J/4⌉.
    let median = median_of(&vals);
    let deadband = floor.max(tol * median.abs());
    let signs: Vec<i8> = vals
        .iter()
        .map(|v| *v - median)
        .filter(|d| d.abs() > deadband)
        .map(|d| if d > S::zero() { 1 } else { -1 })
        .collect();
    let alternations = signs.windows(2).filter(|w| w[0] != w[1]).count();
    let j = samples - 1;
    if alternations > j.div_ceil(4) {
        let last = *exps.last().unwrap();
        return Ok(build(SequenceLabel::IrrelevantDivergent, last.abs(), last));
    }

    let tail = samples.div_ceil(4).max(1);
    let signed: S = exps[samples - tail..].iter().copied().sum::<S>() / S::from_count(tail);

    let last_v = *vals.last().unwrap();
    if last_v <= floor {
        return Ok(build(SequenceLabel::IrrelevantNull, S::zero(), S::zero()));
    }
    match rate {
        DecayRate::Growing => Ok(build(SequenceLabel::IrrelevantDivergent, signed.abs(), signed)),
        DecayRate::SlowlyVarying | DecayRate::FastNull => {
            Ok(build(SequenceLabel::IrrelevantNull, S::zero(), S::zero()))
        }
        DecayRate::Constant => {
            let e = signed;
            let label = if e.abs() <= tol {
                SequenceLabel::IrrelevantNull
            } else if (e + S::one()).abs() <= tol {
                SequenceLabel::Boundary
            } else if e < -S::one() {
                return Err(Error::domain(format!(
                    "exponent e = {e} < -1 describes a divergent sequence"
                )));
            } else if e < S::zero() {
                SequenceLabel::RelevantPlus
            } else if e <= S::one() + tol {
                SequenceLabel::Boundary
            } else {
                SequenceLabel::RelevantMinus
            };
            let estimate = if label == SequenceLabel::IrrelevantNull {
                S::zero()
            } else {
                e.abs()
            };
            Ok(build(label, estimate, e))
        }
    }
}

fn rate_from_slope<S: Scalar>(slope: S) -> DecayRate {
    let tol = S::lit(RATE_SLOPE_TOL);
    if slope.abs() < tol {
        DecayRate::Constant
    } else if slope > S::zero() {
        DecayRate::Growing
    } else if slope >= -S::one() + tol {
        DecayRate::SlowlyVarying
    } else {
        DecayRate::FastNull
    }
}

fn ls_slope<S: Scalar>(pts: &[(S, S)]) -> S {
    let n = S::from_count(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<S>() / n;
    let my = pts.iter().map(|p| p.1).sum::<S>() / n;
    let (mut sxy, mut sxx) = (S::zero(), S::zero());
    for &(x, y) in pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx.is_zero() {
        S::zero()
    } else {
        sxy / sxx
    }
}

fn median_of<S: Scalar>(xs: &[S]) -> S {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / S::lit(2.0)
    }
}

// ---------------------------------------------------------------------------
// Duality structure

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DualityMode {
    SelfDual,
    WeaklySelfDual,
    CriticallySelfDual,
    StrictlyDual,
}

/// Parameters of the duality structure `x⁻x⁺ = λδ²`, `v⁻v⁺ = μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityParams<S> {
    pub lambda0: S,
    pub kappa: S,
    pub mu: S,
    pub alpha: S,
    pub mode: DualityMode,
    /// Exponent `a ∈ (0,1)` of the slow-variation floor `μ ≥ δ^a`.
    pub mu_floor_exponent: S,
}

impl<S: Scalar> DualityParams<S> {
    pub fn new(mode: DualityMode, mu: S) -> Self {
        DualityParams {
            lambda0: S::one(),
            kappa: S::zero(),
            mu,
            alpha: S::one(),
            mode,
            mu_floor_exponent: S::lit(0.5),
        }
    }

    pub fn with_kappa(mut self, kappa: S) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_alpha(mut self, alpha: S) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_lambda0(mut self, lambda0: S) -> Self {
        self.lambda0 = lambda0;
        self
    }

    pub fn validate(&self, scale: Scale<S>) -> Result<()> {
        if !(self.lambda0 > S::zero()) {
            return Err(Error::Consistency(format!(
                "lambda0 must be positive, got {}",
                self.lambda0
            )));
        }
        if !(self.mu > S::zero()) || !(self.alpha > S::zero()) || self.kappa < S::zero() {
            return Err(Error::Consistency("need mu > 0, alpha > 0, kappa ≥ 0".into()));
        }
        let a = self.mu_floor_exponent;
        if !(a > S::zero() && a < S::one()) {
            return Err(Error::Consistency(format!(
                "floor exponent a must lie in (0,1), got {a}"
            )));
        }
        if self.mu < scale.delta().powf(a) {
            return Err(Error::Consistency(format!(
                "mu = {} is not slowly varying: below δ^a = {}",
                self.mu,
                scale.delta().powf(a)
            )));
        }
        match self.mode {
            DualityMode::StrictlyDual if self.kappa <= S::zero() => {
                Err(Error::Consistency("strict duality requires kappa > 0".into()))
            }
            DualityMode::SelfDual if !self.kappa.is_zero() || self.alpha != S::one() => Err(Error::Consistency(
                "self duality requires kappa = 0 and alpha = 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Form taken by `λ(δ)` in the characterization of dual pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaForm<S> {
    /// `λ = λ₀`: self dual.
    Constant,
    /// `λ = λ₀ |ln δ|^k`: weakly self dual.
    LogPower { k: S },
    /// `λ = λ₀ δ^κ`, `κ > 0`: strictly dual.
    ScalePower { kappa: S },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPair<S> {
    pub v_plus: S,
    pub v_minus: S,
    /// `δ·δ^(-v⁺)`
    pub x_plus: S,
    /// `δ·δ^(v⁻)`
    pub x_minus: S,
    /// `λ₀ · δ^(v⁻ − v⁺)`
    pub lambda: S,
    pub lambda_form: LambdaForm<S>,
    /// Relative error of `x⁻x⁺ = (λ/λ₀)δ²`.
    pub product_residual: S,
}

/// Tolerance on `|v⁻ − v⁺|` below which a pair counts as self dual.
const SELF_DUAL_TOL: f64 = 1e-9;

/// Builds the dual image of a valuation `v⁺` under `v⁻ = μ/v⁺`.
pub fn dual_pair<S: Scalar>(v_plus: S, params: &DualityParams<S>, scale: Scale<S>) -> Result<DualPair<S>> {
    if v_plus.is_zero() {
        return Err(Error::DivisionByZero("v_plus = 0 has no dual"));
    }
    if !(v_plus > S::zero()) {
        return Err(Error::domain(format!("v_plus must be positive, got {v_plus}")));
    }
    params.validate(scale)?;
    let delta = scale.delta();
    let v_minus = params.mu / v_plus;
    let x_plus = scale.normal_form(v_plus);
    let x_minus = delta * delta.powf(v_minus);
    let gap = v_minus - v_plus;
    let lambda = params.lambda0 * delta.powf(gap);
    let expected = (lambda / params.lambda0) * delta * delta;
    let product_residual = ((x_minus * x_plus - expected) / expected).abs();

    let tol = S::lit(SELF_DUAL_TOL);
    let lambda_form = if gap.abs() <= tol {
        LambdaForm::Constant
    } else if params.mode == DualityMode::WeaklySelfDual {
        // δ^gap = |ln δ|^k
        let log_inv = scale.log_inverse();
        LambdaForm::LogPower {
            k: -gap * log_inv / log_inv.ln(),
        }
    } else {
        LambdaForm::ScalePower { kappa: gap }
    };

    let consistent = match (params.mode, lambda_form) {
        (DualityMode::SelfDual | DualityMode::CriticallySelfDual, LambdaForm::Constant) => true,
        (DualityMode::WeaklySelfDual, LambdaForm::LogPower { .. }) => true,
        (DualityMode::StrictlyDual, LambdaForm::ScalePower { kappa }) => kappa > S::zero(),
        _ => false,
    };
    if !consistent {
        return Err(Error::Consistency(format!(
            "λ = {lambda} has form {lambda_form:?}, incompatible with mode {:?}",
            params.mode
        )));
    }
    Ok(DualPair {
        v_plus,
        v_minus,
        x_plus,
        x_minus,
        lambda,
        lambda_form,
        product_residual,
    })
}

/// Positive root of `v² + κv − μ = 0`.
///
/// Evaluated as `2μ / (κ + √(κ² + 4μ))`, which stays accurate when
/// `κ ≫ √μ` and the root approaches `μ/κ`.
pub fn solve_duality_quadratic<S: Scalar>(kappa: S, mu: S) -> Result<S> {
    if kappa < S::zero() || !kappa.is_finite() {
        return Err(Error::domain(format!("kappa must be ≥ 0, got {kappa}")));
    }
    if !(mu > S::zero()) || !mu.is_finite() {
        return Err(Error::domain(format!("mu must be > 0, got {mu}")));
    }
    let disc = kappa * kappa + S::lit(4.0) * mu;
    Ok(S::lit(2.0) * mu / (kappa + disc.sqrt()))
}

/// Roots of `φ² − rφ − 1 = 0` for rational `r`, with `α = φ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArithmeticalFixedPoints<S> {
    /// Larger root.
    pub phi1: S,
    pub phi2: S,
    pub alpha1: S,
    pub alpha2: S,
    /// `p² + 4q²` is not a perfect square.
    pub is_quadratic_irrational: bool,
    /// Exact roots when the discriminant is a perfect square.
    pub rational_roots: Option<(Ratio<i64>, Ratio<i64>)>,
}

pub fn arithmetical_fixed_points<S: Scalar>(r: Ratio<i64>) -> ArithmeticalFixedPoints<S> {
    // Ratio keeps itself reduced with a positive denominator.
    let (p, q) = (*r.numer() as i128, *r.denom() as i128);
    let disc = p * p + 4 * q * q;
    let root = disc.sqrt();
    let perfect = root * root == disc;

    let rational_roots = if perfect {
        let den = 2 * q;
        let a = Ratio::new((p + root) as i64, den as i64);
        let b = Ratio::new((p - root) as i64, den as i64);
        Some((a, b))
    } else {
        None
    };

    let (phi1, phi2) = match &rational_roots {
        Some((a, b)) => (ratio_to::<S>(a), ratio_to::<S>(b)),
        None => {
            let rf = S::from_i64(p as i64).unwrap() / S::from_i64(q as i64).unwrap();
            let s = (rf * rf + S::lit(4.0)).sqrt();
            // φ₁φ₂ = −1 gives the small root without cancellation.
            let big = if rf >= S::zero() {
                (rf + s) / S::lit(2.0)
            } else {
                (rf - s) / S::lit(2.0)
            };
            let small = -big.recip();
            if big > small {
                (big, small)
            } else {
                (small, big)
            }
        }
    };
    ArithmeticalFixedPoints {
        phi1,
        phi2,
        alpha1: phi1 * phi1,
        alpha2: phi2 * phi2,
        is_quadratic_irrational: !perfect,
        rational_roots,
    }
}

fn ratio_to<S: Scalar>(r: &Ratio<i64>) -> S {
    S::from_i64(*r.numer()).unwrap() / S::from_i64(*r.denom()).unwrap()
}

/// Weakly self dual valuation `γ·|ln ln δ⁻¹ / ln δ|`, `γ = k/(α−1) > 0`.
///
/// At `α = 1` the ratio is singular; the caller must then supply the
/// critical limit `γ̃` through `critical_gamma`.
pub fn weakly_self_dual_valuation<S: Scalar>(k: S, alpha: S, scale: Scale<S>, critical_gamma: Option<S>) -> Result<S> {
    let gamma = if alpha == S::one() {
        match critical_gamma {
            Some(g) if g > S::zero() => g,
            Some(g) => return Err(Error::domain(format!("critical gamma must be positive, got {g}"))),
            None => {
                return Err(Error::DivisionByZero(
                    "alpha = 1 is singular without the critical limit gamma",
                ))
            }
        }
    } else {
        let g = k / (alpha - S::one());
        if !(g > S::zero()) {
            return Err(Error::domain(format!(
                "sign of k must match sign of alpha − 1 (k = {k}, alpha = {alpha})"
            )));
        }
        g
    };
    Ok(gamma * log_log_ratio(scale))
}

/// `|ln ln δ⁻¹ / ln δ|`
fn log_log_ratio<S: Scalar>(scale: Scale<S>) -> S {
    let log_inv = scale.log_inverse();
    (log_inv.ln() / log_inv).abs()
}

/// Weakly self dual representative `a₁·δ·|ln δ|^(−|k/(α−1)|)`.
pub fn weakly_self_dual_conjugate<S: Scalar>(a1: S, k: S, alpha: S, scale: Scale<S>) -> Result<S> {
    check_positive(a1, "a1")?;
    if alpha == S::one() {
        return Err(Error::DivisionByZero("alpha = 1"));
    }
    let gamma = (k / (alpha - S::one())).abs();
    Ok(a1 * scale.delta() * scale.log_inverse().powf(-gamma))
}

/// `x₁ ∘ x₂ = δ·δ^(−v(x₁)v(x₂))`, so that `v(x₁ ∘ x₂) = v(x₁)v(x₂)`.
pub fn renormalized_product<S: Scalar>(x1: S, x2: S, scale: Scale<S>) -> Result<S> {
    let v1 = valuation(x1, scale)?;
    let v2 = valuation(x2, scale)?;
    Ok(scale.normal_form(v1 * v2))
}

// ---------------------------------------------------------------------------
// Renormalization group bookkeeping

/// `Z = δ^(−v⁺)`.
pub fn rg_renormalization_constant<S: Scalar>(v_plus: S, scale: Scale<S>) -> Result<S> {
    if v_plus < S::zero() || !v_plus.is_finite() {
        return Err(Error::domain(format!("v_plus must be ≥ 0, got {v_plus}")));
    }
    Ok(scale.delta().powf(-v_plus))
}

/// Two evaluations of the phenomenological value that must agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhenomenologicalValue<S> {
    /// `ξ^v` with `ξ = δ/x`.
    pub value: S,
    /// `Z⁻¹ · x^(−v)`, through the renormalization constant.
    pub via_renormalization: S,
    pub valuation: S,
}

impl<S: Scalar> PhenomenologicalValue<S> {
    pub fn discrepancy(&self) -> S {
        (self.value - self.via_renormalization).abs()
    }
}

/// `X̄⁺_ph = ξ^v`, `ξ = δ/x`, `v = v(x)`; requires `0 < δ < x`.
pub fn rg_phenomenological_value<S: Scalar>(x: S, scale: Scale<S>) -> Result<PhenomenologicalValue<S>> {
    check_positive(x, "x")?;
    if !(scale.delta() < x) {
        return Err(Error::domain(format!("need δ < x, got δ = {}, x = {x}", scale.delta())));
    }
    let v = valuation_raw(x, scale.delta());
    let value = phenomenological_at(x, v, scale.delta());
    let z = rg_renormalization_constant(v, scale)?;
    let via_renormalization = x.powf(-v) / z;
    Ok(PhenomenologicalValue {
        value,
        via_renormalization,
        valuation: v,
    })
}

fn phenomenological_at<S: Scalar>(x: S, v: S, delta: S) -> S {
    (delta / x).powf(v)
}

/// `Z · X̄⁺_ph = x^(−v)`: the bare rescaled asymptotic, which must not
/// depend on the phenomenological scale.
fn bare_value<S: Scalar>(x: S, v: S, delta: S) -> S {
    delta.powf(-v) * phenomenological_at(x, v, delta)
}

fn check_log_step<S: Scalar>(x: S, scale: Scale<S>, h: S) -> Result<()> {
    check_positive(x, "x")?;
    if !(h > S::zero()) {
        return Err(Error::domain(format!("log step must be positive, got {h}")));
    }
    let hi = scale.delta() * h.exp();
    if !(hi < x && hi < S::one()) {
        return Err(Error::domain("shifted scale δ·e^h leaves the window (0, min(x,1))"));
    }
    Ok(())
}

/// Central difference of the scale-independent combination `Z·X̄⁺_ph`
/// with respect to `ln δ`, at fixed `x` and fixed valuation `v`.
///
/// Analytically zero; the residual is `O(h²)` plus rounding.
pub fn rg_callan_symanzik_residual<S: Scalar>(x: S, v: S, scale: Scale<S>, h: S) -> Result<S> {
    check_log_step(x, scale, h)?;
    let d = scale.delta();
    let up = bare_value(x, v, d * h.exp());
    let down = bare_value(x, v, d * (-h).exp());
    Ok((up - down) / (S::lit(2.0) * h))
}

/// Scale flow of `Z·X̄⁺_ph` when the valuation itself runs with `ln δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallanSymanzikFlow<S> {
    /// Finite-difference `d(Z·X̄⁺_ph)/d ln δ` along the flow.
    pub residual: S,
    /// `β = dv/d ln δ`.
    pub beta: S,
    /// `β · ∂(Z·X̄⁺_ph)/∂v`, the term that balances the residual.
    pub beta_term: S,
}

/// Same as [`rg_callan_symanzik_residual`] but with `v = v(ln δ)` supplied
/// as a running function; the residual is then carried by the beta term.
pub fn rg_callan_symanzik_flow<S: Scalar>(
    x: S,
    scale: Scale<S>,
    h: S,
    running_valuation: impl Fn(S) -> S,
) -> Result<CallanSymanzikFlow<S>> {
    check_log_step(x, scale, h)?;
    let d = scale.delta();
    let ln_d = d.ln();
    let two_h = S::lit(2.0) * h;
    let v_up = running_valuation(ln_d + h);
    let v_down = running_valuation(ln_d - h);
    let v_mid = running_valuation(ln_d);
    let residual = (bare_value(x, v_up, d * h.exp()) - bare_value(x, v_down, d * (-h).exp())) / two_h;
    let beta = (v_up - v_down) / two_h;
    // ∂/∂v x^(−v) = −ln x · x^(−v)
    let beta_term = beta * (-x.ln()) * bare_value(x, v_mid, d);
    Ok(CallanSymanzikFlow {
        residual,
        beta,
        beta_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scale(d: f64) -> Scale<f64> {
        Scale::new(d).unwrap()
    }

    #[test]
    fn valuation_examples() {
        assert!((valuation(0.1, scale(0.01)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(valuation(0.3, scale(0.3)).unwrap(), 0.0);
        let s = scale(1e-4);
        assert!((valuation(s.normal_form(0.3), s).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn valuation_rejects_bad_inputs() {
        assert!(Scale::new(1.0).is_err());
        assert!(Scale::new(0.0).is_err());
        assert!(valuation(-1.0, scale(0.1)).is_err());
        assert!(valuation(0.0, scale(0.1)).is_err());
    }

    #[test]
    fn ultrametric_examples() {
        let d = 1e-6_f64;
        let s = scale(d);
        let slack = std::f64::consts::LN_2 / d.recip().ln();
        let r = ultrametric_slack(d.powf(1.7), d.powf(1.3), s).unwrap();
        assert!((r.lhs - 0.3).abs() < 1e-3);
        assert!((r.bound - (0.7 + slack)).abs() < 1e-12);
        assert!(r.holds());

        let r = ultrametric_slack(d.powf(1.5), d.powf(1.5), s).unwrap();
        assert!((r.lhs - (0.5 - slack)).abs() < 1e-12);
        assert!((r.bound - (0.5 + slack)).abs() < 1e-12);

        let r = ultrametric_slack(d, d, s).unwrap();
        assert!((r.lhs - slack).abs() < 1e-12);
        assert!((r.bound - slack).abs() < 1e-12);
        assert!(ultrametric_slack(0.6, 0.5, s).is_err());
    }

    #[test]
    fn invariance_examples() {
        let d = 1e-8_f64;
        let s = scale(d);
        let x = d.sqrt();
        let r = invariance_residuals(x, 3.0, d, s).unwrap();
        assert!((r.scaling - 3f64.ln() / 1e8f64.ln()).abs() < 1e-12);
        assert!(r.scaling <= 0.0597);
        assert!(r.inversion < 1e-12);
        let expected = (1.0 + d.sqrt()).ln() / 1e8f64.ln();
        assert!((r.translation - expected).abs() < 1e-12);
        assert!(r.within_bounds(1e-12));

        let r = invariance_residuals(x, 1.0, d, s).unwrap();
        assert_eq!(r.scaling, 0.0);
        assert!(invariance_residuals(x, 2.0, 2.0 * x, s).is_err());
    }

    #[test]
    fn classify_power_laws() {
        let inv = SequenceSpec::new(|n: u64| 1.0 / n as f64);
        let c = classify_sequence(&SequenceSpec::new(|n: u64| (n as f64).powf(-2.5)), &inv).unwrap();
        assert_eq!(c.label, SequenceLabel::RelevantMinus);
        assert!((c.exponent_estimate - 1.5).abs() < 1e-9);
        assert_eq!(c.rate, DecayRate::Constant);
        assert_eq!(c.samples, 21);

        let c = classify_sequence(&SequenceSpec::new(|n: u64| (n as f64).powf(-0.6)), &inv).unwrap();
        assert_eq!(c.label, SequenceLabel::RelevantPlus);
        assert!((c.exponent_estimate - 0.4).abs() < 1e-9);

        let c = classify_sequence(&SequenceSpec::new(|n: u64| (n as f64).powf(-1.5)), &inv).unwrap();
        assert_eq!(c.label, SequenceLabel::Boundary);

        let c = classify_sequence(&SequenceSpec::new(|n: u64| 1.0 / n as f64), &inv).unwrap();
        assert_eq!(c.label, SequenceLabel::IrrelevantNull);
        assert_eq!(c.exponent_estimate, 0.0);
    }

    #[test]
    fn classify_redressed_null() {
        let inv = SequenceSpec::new(|n: u64| 1.0 / n as f64);
        let seq = SequenceSpec::new(|n: u64| {
            let n = n as f64;
            n.powf(-(1.0 + n.powi(-2)))
        });
        let c = classify_sequence(&seq, &inv).unwrap();
        assert_eq!(c.label, SequenceLabel::IrrelevantNull);
    }

    #[test]
    fn classify_slowly_varying_is_null_with_rate() {
        let inv = SequenceSpec::new(|n: u64| 1.0 / n as f64);
        let seq = SequenceSpec::new(|n: u64| {
            let n = n as f64;
            n.powf(-(1.0 + 0.5 * n.powf(-0.3)))
        });
        let c = classify_sequence(&seq, &inv).unwrap();
        assert_eq!(c.label, SequenceLabel::IrrelevantNull);
        assert_eq!(c.rate, DecayRate::SlowlyVarying);
        assert!((c.log_slope + 0.3).abs() < 1e-6);
    }

    #[test]
    fn classify_oscillating() {
        let inv = SequenceSpec::new(|n: u64| 1.0 / n as f64);
        let seq = SequenceSpec::new(|n: u64| {
            let n = n as f64;
            n.powf(-(1.0 + n.sin() + 1.0 / n))
        });
        let c = classify_sequence(&seq, &inv).unwrap();
        assert_eq!(c.label, SequenceLabel::IrrelevantDivergent);
    }

    #[test]
    fn classify_rejects_non_null() {
        let inv = SequenceSpec::new(|n: u64| 1.0 / n as f64);
        assert!(classify_sequence(&SequenceSpec::new(|n: u64| n as f64), &inv).is_err());
        let not_null = SequenceSpec::new(|_| 0.5);
        assert!(classify_sequence(&SequenceSpec::new(|n: u64| 1.0 / n as f64), &not_null).is_err());
    }

    #[test]
    fn dual_pair_examples() {
        let s = scale(1e-4);
        let params = DualityParams::new(DualityMode::WeaklySelfDual, 0.18).with_alpha(0.5);
        let p = dual_pair(0.6, &params, s).unwrap();
        assert!((p.v_minus - 0.3).abs() < 1e-15);
        assert!((p.x_minus / 1e-4f64.powf(1.3) - 1.0).abs() < 1e-12);
        assert!(p.product_residual < 1e-12);
        assert!(matches!(p.lambda_form, LambdaForm::LogPower { .. }));

        let mu = 0.2_f64;
        let p = dual_pair(mu.sqrt(), &DualityParams::new(DualityMode::SelfDual, mu), s).unwrap();
        assert!((p.v_minus - mu.sqrt()).abs() < 1e-15);
        assert_eq!(p.lambda_form, LambdaForm::Constant);
    }

    #[test]
    fn dual_pair_cantor_example() {
        // v⁺ = i·2^(−m), μ = 1/i gives v⁻ = i⁻²·2^m.
        let s = scale(1e-3);
        let (i, m) = (3.0_f64, 5);
        let kappa = 2f64.powi(m) / (i * i);
        let params = DualityParams::new(DualityMode::StrictlyDual, 1.0 / i).with_kappa(kappa);
        let p = dual_pair(i * 2f64.powi(-m), &params, s).unwrap();
        assert!((p.v_minus - kappa).abs() < 1e-12);
        assert!(matches!(p.lambda_form, LambdaForm::ScalePower { kappa: k } if k > 0.0));
    }

    #[test]
    fn dual_pair_errors() {
        let s = scale(1e-4);
        let params = DualityParams::new(DualityMode::SelfDual, 0.18);
        assert_eq!(
            dual_pair(0.0, &params, s),
            Err(Error::DivisionByZero("v_plus = 0 has no dual"))
        );
        assert!(matches!(dual_pair(0.6, &params, s), Err(Error::Consistency(_))));
        let bad = DualityParams::new(DualityMode::StrictlyDual, 0.18);
        assert!(matches!(dual_pair(0.6, &bad, s), Err(Error::Consistency(_))));
    }

    #[test]
    fn quadratic_examples() {
        let v: f64 = solve_duality_quadratic(0.3, 0.18).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
        assert!((0.18 / v - (v + 0.3)).abs() < 1e-12);
        assert!((solve_duality_quadratic::<f64>(0.0, 0.25).unwrap() - 0.5).abs() < 1e-15);
        let v: f64 = solve_duality_quadratic(10.0, 0.01).unwrap();
        assert!((v - 0.001).abs() < 1e-6);
        assert!((v * (v + 10.0) - 0.01).abs() < 1e-15);
        assert!(solve_duality_quadratic(-1.0, 0.1).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        let fp = arithmetical_fixed_points::<f64>(Ratio::new(3, 2));
        assert_eq!((fp.phi1, fp.phi2), (2.0, -0.5));
        assert_eq!((fp.alpha1, fp.alpha2), (4.0, 0.25));
        assert!(!fp.is_quadratic_irrational);
        assert_eq!(fp.rational_roots, Some((Ratio::from_integer(2), Ratio::new(-1, 2))));

        let fp = arithmetical_fixed_points::<f64>(Ratio::from_integer(0));
        assert_eq!((fp.phi1, fp.phi2, fp.alpha1, fp.alpha2), (1.0, -1.0, 1.0, 1.0));

        let fp = arithmetical_fixed_points::<f64>(Ratio::from_integer(1));
        let s5 = 5f64.sqrt();
        assert!((fp.phi1 - (1.0 + s5) / 2.0).abs() < 1e-15);
        assert!((fp.phi2 - (1.0 - s5) / 2.0).abs() < 1e-15);
        assert!(fp.is_quadratic_irrational);
    }

    #[test]
    fn weakly_self_dual_examples() {
        let s = scale((-100.0_f64).exp());
        let expected = 0.5 * 100f64.ln() / 100.0;
        assert!((weakly_self_dual_valuation(0.5, 2.0, s, None).unwrap() - expected).abs() < 1e-15);
        assert!((weakly_self_dual_valuation(-0.25, 0.5, s, None).unwrap() - expected).abs() < 1e-15);
        // γ = (−0.5)/(0.5 − 1) = 1, twice the α = 2 value
        assert!((weakly_self_dual_valuation(-0.5, 0.5, s, None).unwrap() - 2.0 * expected).abs() < 1e-15);
        assert!(weakly_self_dual_valuation(0.5, 0.5, s, None).is_err());
        assert!(weakly_self_dual_valuation(0.0, 1.0, s, None).is_err());
        assert!((weakly_self_dual_valuation(0.0, 1.0, s, Some(0.5)).unwrap() - expected).abs() < 1e-15);

        let xw = weakly_self_dual_conjugate(1.0, 0.5, 2.0, s).unwrap();
        assert!((valuation(xw, s).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn product_examples() {
        let s = scale(1e-4);
        let half = s.normal_form(0.5);
        let p = renormalized_product(half, half, s).unwrap();
        assert!((p / s.normal_form(0.25) - 1.0).abs() < 1e-12);
        assert_eq!(renormalized_product(s.delta(), 0.37, s).unwrap(), s.delta());
        let p = renormalized_product(s.normal_form(0.3), s.normal_form(0.6), s).unwrap();
        assert!((valuation(p, s).unwrap() - 0.18).abs() < 1e-12);
    }

    #[test]
    fn rg_examples() {
        let s = scale(0.01);
        assert!((rg_renormalization_constant(0.5, s).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(rg_renormalization_constant(0.0, s).unwrap(), 1.0);
        let z = rg_renormalization_constant(0.3, scale(1e-4)).unwrap();
        assert!((z - 10f64.powf(1.2)).abs() < 1e-12);

        let ph = rg_phenomenological_value(0.1, s).unwrap();
        assert!((ph.value - 0.1f64.sqrt()).abs() < 1e-12);
        assert!(ph.discrepancy() < 1e-12);
        assert!(rg_phenomenological_value(0.001, s).is_err());

        let s4 = scale(1e-4);
        let v = 0.4;
        let ph = rg_phenomenological_value(s4.normal_form(v), s4).unwrap();
        assert!((ph.value - 1e-4f64.powf(v * v)).abs() < 1e-12);
    }

    #[test]
    fn callan_symanzik_fixed_valuation() {
        let s = scale(0.01);
        let r = rg_callan_symanzik_residual(0.1, 0.5, s, 1e-4).unwrap();
        assert!(r.abs() < 1e-6);
        assert_eq!(rg_callan_symanzik_residual(0.1, 0.0, s, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn callan_symanzik_running_valuation_balances_beta() {
        let s = scale(0.01);
        let flow = rg_callan_symanzik_flow(0.1, s, 1e-4, |ln_d: f64| 0.5 + 0.05 * ln_d.sin()).unwrap();
        assert!(flow.beta.abs() > 1e-3);
        assert!((flow.residual - flow.beta_term).abs() < 1e-6);
    }
}
