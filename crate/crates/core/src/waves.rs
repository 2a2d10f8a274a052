//! Spectral solutions of the deformed wave equations in staircase variables.
//!
//! The 1D string on `[0, l]` is expanded in `sin(k_n u)` with `u = v(x)`,
//! `k_n = nπ/v(l)`, and evolves as `cos(ω_n v(T))`, `ω_n = v(c)·k_n`,
//! `T = c·t`. The 2D membrane lives on the unit square of `(v(x), v(y))`.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::calculus::{stieltjes_sum, StaircaseCoordinate};
use crate::error::{Error, Result};
use crate::fractal::{quadratic_koch_boundary, Cell, Square, Staircase};
use crate::output::write_row;
use crate::quadrature::CompositeRule;
use crate::scalar::Scalar;

pub const DEFAULT_MODES_1D: usize = 32;
pub const DEFAULT_MODES_2D: usize = 16;
pub const DEFAULT_LEVEL_1D: u32 = 16;
pub const DEFAULT_LEVEL_2D: u32 = 10;
/// Largest `|h|` allowed on the boundary, relative to `max(1, sup |h|)`
/// (never below 64 ulps of the scalar type).
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;
/// Largest number of quadrature nodes per axis in the lacunary baseline.
pub const LACUNARY_NODE_CAP: usize = 1 << 13;

pub type Profile1D<S> = Arc<dyn Fn(S) -> S + Send + Sync>;
pub type Profile2D<S> = Arc<dyn Fn(S, S) -> S + Send + Sync>;

/// Fractal string with fixed ends and zero initial velocity.
#[derive(Clone)]
pub struct WaveProblem1D<S> {
    pub length_l: S,
    /// Dimensionless fractal speed `v(c)`.
    pub speed_factor_vc: S,
    /// `c` in `T = c·t`.
    pub wave_speed_c: S,
    pub coordinate_x: StaircaseCoordinate<S>,
    pub staircase_t: Staircase<S>,
    /// `h(u)` for `u ∈ [0, v(l)]`.
    pub initial_profile: Profile1D<S>,
    pub n_modes: usize,
    /// Partition level of the coefficient quadrature.
    pub level: u32,
    /// Evolve with `cos(ω T)` instead of `cos(ω v(T))`.
    pub classical_time: bool,
}

impl<S: fmt::Debug> fmt::Debug for WaveProblem1D<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveProblem1D")
            .field("length_l", &self.length_l)
            .field("speed_factor_vc", &self.speed_factor_vc)
            .field("wave_speed_c", &self.wave_speed_c)
            .field("n_modes", &self.n_modes)
            .field("level", &self.level)
            .field("classical_time", &self.classical_time)
            .finish_non_exhaustive()
    }
}

impl<S: Scalar> WaveProblem1D<S> {
    /// Same staircase in space and time, `c = 1`, default modes and level.
    pub fn new(
        length_l: S,
        speed_factor_vc: S,
        staircase: Staircase<S>,
        initial_profile: impl Fn(S) -> S + Send + Sync + 'static,
    ) -> Result<Self> {
        let coordinate_x = StaircaseCoordinate::new(staircase.clone(), length_l)?;
        let problem = WaveProblem1D {
            length_l,
            speed_factor_vc,
            wave_speed_c: S::one(),
            coordinate_x,
            staircase_t: staircase,
            initial_profile: Arc::new(initial_profile),
            n_modes: DEFAULT_MODES_1D,
            level: DEFAULT_LEVEL_1D,
            classical_time: false,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_modes(mut self, n_modes: usize) -> Self {
        self.n_modes = n_modes;
        self
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.level = level;
        self
    }

    pub fn with_time_staircase(mut self, staircase_t: Staircase<S>) -> Self {
        self.staircase_t = staircase_t;
        self
    }

    pub fn with_wave_speed(mut self, c: S) -> Self {
        self.wave_speed_c = c;
        self
    }

    pub fn with_classical_time(mut self, classical: bool) -> Self {
        self.classical_time = classical;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed_factor_vc > S::zero()) {
            return Err(Error::domain(format!(
                "v(c) must be positive, got {}",
                self.speed_factor_vc
            )));
        }
        if !(self.wave_speed_c > S::zero()) {
            return Err(Error::domain(format!("c must be positive, got {}", self.wave_speed_c)));
        }
        if self.n_modes == 0 {
            return Err(Error::domain("need at least one mode"));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> S {
        self.coordinate_x.total_mass
    }

    /// Space and time share one staircase.
    pub fn is_coherent(&self) -> bool {
        self.coordinate_x.staircase == self.staircase_t
    }

    /// Identity staircases: the classical string.
    pub fn is_smooth_limit(&self) -> bool {
        self.coordinate_x.staircase.is_identity() && self.staircase_t.is_identity()
    }

    /// Fractal time `v(T)`, `T = c·t` (or `T` itself in classical mode).
    pub fn fractal_time(&self, t: S) -> S {
        let big_t = self.wave_speed_c * t;
        if self.classical_time {
            big_t
        } else {
            self.staircase_t.extend(big_t)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveSolution1D<S> {
    pub coefficients: Vec<S>,
    pub k_f: Vec<S>,
    pub omega_f: Vec<S>,
    /// Largest `|a_n|` over the last quarter of the retained modes.
    pub tail: S,
}

fn boundary_check<S: Scalar>(samples: impl Iterator<Item = S>, edges: impl Iterator<Item = S>) -> Result<()> {
    let sup = samples.map(|v| v.abs()).fold(S::one(), S::max);
    let residual = edges.map(|v| v.abs()).fold(S::zero(), S::max);
    let tol = S::lit(BOUNDARY_TOLERANCE).max(S::lit(64.0) * S::epsilon());
    if residual > tol * sup {
        return Err(Error::BoundaryIncompatible {
            residual: residual.as_f64(),
        });
    }
    Ok(())
}

fn tail_of<S: Scalar>(values: &[S]) -> S {
    let start = values.len() - values.len().div_ceil(4);
    values[start..].iter().map(|a| a.abs()).fold(S::zero(), S::max)
}

/// Fractal Fourier-sine coefficients `a_n = (2/v(l)) ∫ h(u) sin(k_n u) du`.
pub fn solve_1d<S: Scalar>(problem: &WaveProblem1D<S>) -> Result<WaveSolution1D<S>> {
    problem.validate()?;
    let mass = problem.total_mass();
    let h = &problem.initial_profile;
    let probe = (0..=64).map(|i| h(mass * S::from_count(i) / S::lit(64.0)));
    boundary_check(probe, [h(S::zero()), h(mass)].into_iter())?;

    let coord = &problem.coordinate_x;
    let cells = coord.cells(problem.level)?;
    let (a, b) = (S::zero(), problem.length_l);
    let mut coefficients = Vec::with_capacity(problem.n_modes);
    let mut k_f = Vec::with_capacity(problem.n_modes);
    let mut omega_f = Vec::with_capacity(problem.n_modes);
    for n in 1..=problem.n_modes {
        let k = S::from_count(n) * S::PI() / mass;
        let integral = stieltjes_sum(|u| h(u) * (k * u).sin(), &cells, a, b, coord);
        coefficients.push(S::lit(2.0) / mass * integral);
        k_f.push(k);
        omega_f.push(problem.speed_factor_vc * k);
    }
    let tail = tail_of(&coefficients);
    Ok(WaveSolution1D {
        coefficients,
        k_f,
        omega_f,
        tail,
    })
}

/// Modal sum `Σ a_n cos(ω_n τ) sin(k_n u)` in staircase variables.
pub fn eval_modes_1d<S: Scalar>(sol: &WaveSolution1D<S>, tau: S, u: S) -> S {
    let mut total = S::zero();
    for ((a, k), w) in sol.coefficients.iter().zip(&sol.k_f).zip(&sol.omega_f) {
        total += *a * (*w * tau).cos() * (*k * u).sin();
    }
    total
}

/// `U(t, x)` with `τ = v(c·t)` and `u = v(x)`.
pub fn eval_solution_1d<S: Scalar>(sol: &WaveSolution1D<S>, problem: &WaveProblem1D<S>, t: S, x: S) -> Result<S> {
    if !(t >= S::zero()) {
        return Err(Error::domain(format!("time must be nonnegative, got {t}")));
    }
    let u = problem.coordinate_x.u(x)?;
    Ok(eval_modes_1d(sol, problem.fractal_time(t), u))
}

/// `(k, ω_f(k))` with `ω_f = v(c)·v(k)` on the extended staircase.
pub fn dispersion_table<S: Scalar>(problem: &WaveProblem1D<S>, k_values: &[S]) -> Result<Vec<(S, S)>> {
    let st = &problem.coordinate_x.staircase;
    k_values
        .iter()
        .map(|&k| {
            if !(k > S::zero()) {
                return Err(Error::domain(format!("wave numbers must be positive, got {k}")));
            }
            Ok((k, problem.speed_factor_vc * st.extend(k)))
        })
        .collect()
}

/// `∫₀^{v(l)} (∂_τ U)² + v(c)² (∂_u U)² du` by the midpoint rule on `grid`
/// uniform cells, with the derivatives taken analytically.
pub fn energy_1d<S: Scalar>(sol: &WaveSolution1D<S>, problem: &WaveProblem1D<S>, tau: S, grid: usize) -> S {
    let mass = problem.total_mass();
    let du = mass / S::from_count(grid);
    let vc = problem.speed_factor_vc;
    let mut total = S::zero();
    for i in 0..grid {
        let u = (S::from_count(i) + S::lit(0.5)) * du;
        let mut ut = S::zero();
        let mut uu = S::zero();
        for ((a, k), w) in sol.coefficients.iter().zip(&sol.k_f).zip(&sol.omega_f) {
            ut -= *a * *w * (*w * tau).sin() * (*k * u).sin();
            uu += *a * *k * (*w * tau).cos() * (*k * u).cos();
        }
        total += (ut * ut + vc * vc * uu * uu) * du;
    }
    total
}

/// For each retained mode, the largest `|∂²_τ U − v(c)² ∂²_u U|` on a uniform
/// `grid × grid` patch of `(τ, u)`, by central differences of step `eta`,
/// relative to `max(1, ω²)`.
pub fn mode_residuals_1d<S: Scalar>(
    sol: &WaveSolution1D<S>,
    problem: &WaveProblem1D<S>,
    grid: usize,
    eta: S,
) -> Vec<S> {
    let mass = problem.total_mass();
    let vc2 = problem.speed_factor_vc * problem.speed_factor_vc;
    sol.k_f
        .iter()
        .zip(&sol.omega_f)
        .map(|(&k, &w)| {
            let mode = |tau: S, u: S| (w * tau).cos() * (k * u).sin();
            let mut worst = S::zero();
            for i in 1..grid {
                let tau = S::from_count(i) / S::from_count(grid);
                for j in 1..grid {
                    let u = mass * S::from_count(j) / S::from_count(grid);
                    let c = mode(tau, u);
                    let tt = (mode(tau + eta, u) - c - c + mode(tau - eta, u)) / (eta * eta);
                    let xx = (mode(tau, u + eta) - c - c + mode(tau, u - eta)) / (eta * eta);
                    worst = worst.max((tt - vc2 * xx).abs());
                }
            }
            worst / (w * w).max(S::one())
        })
        .collect()
}

/// Writes `t,x,U` rows over the product of `times` and `xs`.
pub fn write_grid_1d<S: Scalar, W: Write>(
    mut out: W,
    sol: &WaveSolution1D<S>,
    problem: &WaveProblem1D<S>,
    times: &[S],
    xs: &[S],
) -> io::Result<()> {
    writeln!(out, "t,x,U")?;
    for &t in times {
        for &x in xs {
            let value = eval_solution_1d(sol, problem, t, x).map_err(io::Error::other)?;
            write_row(&mut out, &[t.as_f64(), x.as_f64(), value.as_f64()])?;
        }
    }
    Ok(())
}

/// Writes `k,omega` rows.
pub fn write_dispersion<S: Scalar, W: Write>(mut out: W, table: &[(S, S)]) -> io::Result<()> {
    writeln!(out, "k,omega")?;
    for (k, w) in table {
        write_row(&mut out, &[k.as_f64(), w.as_f64()])?;
    }
    Ok(())
}

/// Membrane on the unit square of `(v(x), v(y))`.
#[derive(Clone)]
pub struct WaveProblem2D<S> {
    pub speed_factor_vc: S,
    pub wave_speed_c: S,
    pub staircase_x: Staircase<S>,
    pub staircase_y: Staircase<S>,
    pub staircase_t: Staircase<S>,
    /// `h(u_x, u_y)` on the unit square.
    pub initial_profile: Profile2D<S>,
    pub m_modes: usize,
    pub n_modes: usize,
    pub level: u32,
    pub classical_time: bool,
}

impl<S: fmt::Debug> fmt::Debug for WaveProblem2D<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveProblem2D")
            .field("speed_factor_vc", &self.speed_factor_vc)
            .field("wave_speed_c", &self.wave_speed_c)
            .field("m_modes", &self.m_modes)
            .field("n_modes", &self.n_modes)
            .field("level", &self.level)
            .field("classical_time", &self.classical_time)
            .finish_non_exhaustive()
    }
}

impl<S: Scalar> WaveProblem2D<S> {
    /// One staircase for `x`, `y` and `T`, `c = v(c) = 1`.
    pub fn new(staircase: Staircase<S>, initial_profile: impl Fn(S, S) -> S + Send + Sync + 'static) -> Self {
        WaveProblem2D {
            speed_factor_vc: S::one(),
            wave_speed_c: S::one(),
            staircase_x: staircase.clone(),
            staircase_y: staircase.clone(),
            staircase_t: staircase,
            initial_profile: Arc::new(initial_profile),
            m_modes: DEFAULT_MODES_2D,
            n_modes: DEFAULT_MODES_2D,
            level: DEFAULT_LEVEL_2D,
            classical_time: false,
        }
    }

    pub fn with_modes(mut self, m_modes: usize, n_modes: usize) -> Self {
        self.m_modes = m_modes;
        self.n_modes = n_modes;
        self
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.level = level;
        self
    }

    pub fn with_speed_factor(mut self, vc: S) -> Self {
        self.speed_factor_vc = vc;
        self
    }

    pub fn with_staircases(mut self, x: Staircase<S>, y: Staircase<S>, t: Staircase<S>) -> Self {
        self.staircase_x = x;
        self.staircase_y = y;
        self.staircase_t = t;
        self
    }

    pub fn with_classical_time(mut self, classical: bool) -> Self {
        self.classical_time = classical;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed_factor_vc > S::zero()) || !(self.wave_speed_c > S::zero()) {
            return Err(Error::domain("v(c) and c must be positive"));
        }
        if self.m_modes == 0 || self.n_modes == 0 {
            return Err(Error::domain("mode caps must be at least 1"));
        }
        Ok(())
    }

    pub fn is_coherent(&self) -> bool {
        self.staircase_x == self.staircase_t && self.staircase_y == self.staircase_t
    }

    pub fn is_smooth_limit(&self) -> bool {
        self.staircase_x.is_identity() && self.staircase_y.is_identity() && self.staircase_t.is_identity()
    }

    pub fn fractal_time(&self, t: S) -> S {
        let big_t = self.wave_speed_c * t;
        if self.classical_time {
            big_t
        } else {
            self.staircase_t.extend(big_t)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveSolution2D<S> {
    /// `coefficients[m-1][n-1] = A_{m,n}`.
    pub coefficients: Vec<Vec<S>>,
    /// `v(c)·π·√(m² + n²)`.
    pub frequencies: Vec<Vec<S>>,
    /// Largest `|A_{m,n}|` with `m` or `n` in the last quarter of its range.
    pub tail: S,
}

impl<S: Scalar> WaveSolution2D<S> {
    pub fn coefficient(&self, m: usize, n: usize) -> S {
        self.coefficients[m - 1][n - 1]
    }

    pub fn frequency(&self, m: usize, n: usize) -> S {
        self.frequencies[m - 1][n - 1]
    }
}

fn midpoints<S: Scalar>(cells: &[Cell<S>]) -> (Vec<S>, Vec<S>) {
    cells
        .iter()
        .filter(|c| c.u_hi > c.u_lo)
        .map(|c| ((c.u_lo + c.u_hi) / S::lit(2.0), c.u_hi - c.u_lo))
        .unzip()
}

/// `S[m][i] = sin(mπ u_i)·w_i`.
fn sine_table<S: Scalar>(nodes: &[S], weights: &[S], modes: usize, freq_scale: S) -> Vec<Vec<S>> {
    (1..=modes)
        .map(|m| {
            let k = S::from_count(m) * S::PI() * freq_scale;
            nodes.iter().zip(weights).map(|(u, w)| (k * *u).sin() * *w).collect()
        })
        .collect()
}

/// `4·Σ_i Σ_j Sx[m][i] H[i][j] Sy[n][j]`, contracting one axis at a time.
fn tensor_coefficients<S: Scalar>(sx: &[Vec<S>], h: &[Vec<S>], sy: &[Vec<S>]) -> Vec<Vec<S>> {
    let four = S::lit(4.0);
    // G[m][j] = Σ_i Sx[m][i] H[i][j]
    let cols = sy.first().map_or(0, |r| r.len());
    let g: Vec<Vec<S>> = sx
        .iter()
        .map(|row| {
            let mut acc = vec![S::zero(); cols];
            for (s, hrow) in row.iter().zip(h) {
                for (a, v) in acc.iter_mut().zip(hrow) {
                    *a += *s * *v;
                }
            }
            acc
        })
        .collect();
    g.iter()
        .map(|grow| {
            sy.iter()
                .map(|srow| four * grow.iter().zip(srow).map(|(a, b)| *a * *b).sum::<S>())
                .collect()
        })
        .collect()
}

fn frequency_grid<S: Scalar>(m_modes: usize, n_modes: usize, scale: S) -> Vec<Vec<S>> {
    (1..=m_modes)
        .map(|m| {
            (1..=n_modes)
                .map(|n| {
                    let (mf, nf) = (S::from_count(m), S::from_count(n));
                    scale * S::PI() * (mf * mf + nf * nf).sqrt()
                })
                .collect()
        })
        .collect()
}

fn tail_2d<S: Scalar>(coefficients: &[Vec<S>]) -> S {
    let rows = coefficients.len();
    let cols = coefficients[0].len();
    let (r0, c0) = (rows - rows.div_ceil(4), cols - cols.div_ceil(4));
    let mut worst = S::zero();
    for (m, row) in coefficients.iter().enumerate() {
        for (n, a) in row.iter().enumerate() {
            if m >= r0 || n >= c0 {
                worst = worst.max(a.abs());
            }
        }
    }
    worst
}

/// `A_{m,n} = 4 ∬ h(u_x, u_y) sin(mπu_x) sin(nπu_y) du_x du_y` under the
/// tensor product of the two staircase measures.
pub fn solve_2d<S: Scalar>(problem: &WaveProblem2D<S>) -> Result<WaveSolution2D<S>> {
    problem.validate()?;
    let h = &problem.initial_profile;
    let edge = (0..=32).map(|i| S::from_count(i) / S::lit(32.0));
    let probe = edge.clone().flat_map(|a| edge.clone().map(move |b| (a, b)));
    let boundary = edge
        .clone()
        .flat_map(|a| [h(a, S::zero()), h(a, S::one()), h(S::zero(), a), h(S::one(), a)]);
    boundary_check(probe.map(|(a, b)| h(a, b)), boundary)?;

    let cx = StaircaseCoordinate::unit(problem.staircase_x.clone()).cells(problem.level)?;
    let cy = StaircaseCoordinate::unit(problem.staircase_y.clone()).cells(problem.level)?;
    let (ux, wx) = midpoints(&cx);
    let (uy, wy) = midpoints(&cy);
    let hm: Vec<Vec<S>> = ux.iter().map(|&a| uy.iter().map(|&b| h(a, b)).collect()).collect();
    let sx = sine_table(&ux, &wx, problem.m_modes, S::one());
    let sy = sine_table(&uy, &wy, problem.n_modes, S::one());
    let coefficients = tensor_coefficients(&sx, &hm, &sy);
    let tail = tail_2d(&coefficients);
    Ok(WaveSolution2D {
        coefficients,
        frequencies: frequency_grid(problem.m_modes, problem.n_modes, problem.speed_factor_vc),
        tail,
    })
}

/// `Σ A_{m,n} cos(ω_{m,n} τ) sin(mπu_x) sin(nπu_y)`.
pub fn eval_modes_2d<S: Scalar>(sol: &WaveSolution2D<S>, tau: S, ux: S, uy: S) -> S {
    let sy: Vec<S> = (1..=sol.coefficients[0].len())
        .map(|n| (S::from_count(n) * S::PI() * uy).sin())
        .collect();
    let mut total = S::zero();
    for (m, (row, freqs)) in sol.coefficients.iter().zip(&sol.frequencies).enumerate() {
        let sx = (S::from_count(m + 1) * S::PI() * ux).sin();
        for ((a, w), s) in row.iter().zip(freqs).zip(&sy) {
            if *a != S::zero() {
                total += *a * (*w * tau).cos() * sx * *s;
            }
        }
    }
    total
}

/// `U(t, x, y)` for `x, y ∈ [0, 1]`, through `v(T)`, `v(x)` and `v(y)` only.
pub fn eval_solution_2d<S: Scalar>(sol: &WaveSolution2D<S>, problem: &WaveProblem2D<S>, t: S, x: S, y: S) -> Result<S> {
    if !(t >= S::zero()) {
        return Err(Error::domain(format!("time must be nonnegative, got {t}")));
    }
    let ux = problem.staircase_x.eval(x)?;
    let uy = problem.staircase_y.eval(y)?;
    Ok(eval_modes_2d(sol, problem.fractal_time(t), ux, uy))
}

/// Writes `t,x,y,U` rows over the product grid.
pub fn write_grid_2d<S: Scalar, W: Write>(
    mut out: W,
    sol: &WaveSolution2D<S>,
    problem: &WaveProblem2D<S>,
    times: &[S],
    xs: &[S],
    ys: &[S],
) -> io::Result<()> {
    writeln!(out, "t,x,y,U")?;
    for &t in times {
        for &x in xs {
            for &y in ys {
                let value = eval_solution_2d(sol, problem, t, x, y).map_err(io::Error::other)?;
                write_row(&mut out, &[t.as_f64(), x.as_f64(), y.as_f64(), value.as_f64()])?;
            }
        }
    }
    Ok(())
}

/// One level of the lacunary series on the square `Γ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LacunaryApprox<S> {
    pub k: u32,
    pub square: Square<S>,
    /// `coefficients[m-1][n-1] = A_{k,m,n}`.
    pub coefficients: Vec<Vec<S>>,
    /// `4^k π √(m² + n²)`.
    pub frequencies: Vec<Vec<S>>,
    /// `Σ |A_{k,m,n}|`, a sup-norm bound of the level-k term.
    pub term_bound: S,
    /// `Σ |A_{k,m,n}|·ω_{k,m,n}`, a bound on its time derivative.
    pub derivative_bound: S,
}

impl<S: Scalar> LacunaryApprox<S> {
    pub fn coefficient(&self, m: usize, n: usize) -> S {
        self.coefficients[m - 1][n - 1]
    }

    pub fn frequency(&self, m: usize, n: usize) -> S {
        self.frequencies[m - 1][n - 1]
    }

    /// `Σ A cos(ω t) sin(4^k πm x) sin(4^k πn y)`.
    pub fn eval(&self, t: S, x: S, y: S) -> S {
        let g = S::lit(4.0).powi(self.k as i32) * S::PI();
        let mut total = S::zero();
        for (m, (row, freqs)) in self.coefficients.iter().zip(&self.frequencies).enumerate() {
            let sx = (g * S::from_count(m + 1) * x).sin();
            for (n, (a, w)) in row.iter().zip(freqs).enumerate() {
                total += *a * (*w * t).cos() * sx * (g * S::from_count(n + 1) * y).sin();
            }
        }
        total
    }
}

/// Gauss–Legendre nodes over `[lo, hi]` with extra breakpoints, resolving
/// oscillations up to `wave_number` (radians per unit length).
fn lacunary_nodes<S: Scalar>(lo: S, hi: S, breaks: &[S], wave_number: S) -> Result<(Vec<S>, Vec<S>)> {
    let rule = CompositeRule::new(8);
    let mut cuts = vec![lo];
    cuts.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
    cuts.push(hi);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        // two panels per wavelength
        let panels = (len * wave_number / S::PI())
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX)
            .max(1);
        if nodes.len() + panels * 8 > LACUNARY_NODE_CAP {
            return Err(Error::CapExceeded {
                what: "lacunary quadrature nodes per axis",
                requested: (nodes.len() + panels * 8) as u128,
                cap: LACUNARY_NODE_CAP as u128,
            });
        }
        for (x, wt) in rule.points(w[0], w[1], panels) {
            nodes.push(x);
            weights.push(wt);
        }
    }
    Ok((nodes, weights))
}

/// `A_{k,m,n} = 4 ∬_{Γ_k} h_k(x,y) sin(4^k πm x) sin(4^k πn y) dx dy` by
/// composite Gauss–Legendre quadrature, panels split at 0 and 1.
pub fn lacunary_partial_sum<S: Scalar>(
    k: u32,
    h_k: impl Fn(S, S) -> S,
    m_cap: usize,
    n_cap: usize,
) -> Result<LacunaryApprox<S>> {
    if m_cap == 0 || n_cap == 0 {
        return Err(Error::domain("mode caps must be at least 1"));
    }
    let boundary = quadratic_koch_boundary::<S>(k);
    let square = boundary.square;
    let gap = S::lit(4.0).powi(k as i32);
    let wave_number = gap * S::PI() * S::from_count(m_cap.max(n_cap));
    let breaks = [S::zero(), S::one()];
    let (nodes, weights) = lacunary_nodes(square.lo, square.hi, &breaks, wave_number)?;
    let hm: Vec<Vec<S>> = nodes
        .iter()
        .map(|&x| nodes.iter().map(|&y| h_k(x, y)).collect())
        .collect();
    let sx = sine_table(&nodes, &weights, m_cap, gap);
    let sy = sine_table(&nodes, &weights, n_cap, gap);
    let coefficients = tensor_coefficients(&sx, &hm, &sy);
    let frequencies = frequency_grid(m_cap, n_cap, gap);
    let mut term_bound = S::zero();
    let mut derivative_bound = S::zero();
    for (row, freqs) in coefficients.iter().zip(&frequencies) {
        for (a, w) in row.iter().zip(freqs) {
            term_bound += a.abs();
            derivative_bound += a.abs() * *w;
        }
    }
    Ok(LacunaryApprox {
        k,
        square,
        coefficients,
        frequencies,
        term_bound,
        derivative_bound,
    })
}

/// `sin(πx) sin(πy)` on the unit square, zero elsewhere.
pub fn unit_square_mode<S: Scalar>(x: S, y: S) -> S {
    let inside = |t: S| t >= S::zero() && t <= S::one();
    if inside(x) && inside(y) {
        (S::PI() * x).sin() * (S::PI() * y).sin()
    } else {
        S::zero()
    }
}
