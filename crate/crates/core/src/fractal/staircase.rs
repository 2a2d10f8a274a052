//! Devil's staircases: normalized mass functions `v(ξ) = μ(F ∩ [0, ξ])`.
//!
//! Cantor seeds are evaluated by a digit walk: at each depth the point is
//! located in one of the `m` surviving pieces (and rescaled) or in a gap
//! (where the staircase is flat). Stopping the walk after `level` digits and
//! interpolating linearly inside the remaining piece reproduces the level-n
//! breakpoint table exactly, without materializing it.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::fractal::ifs::FractalCurve;
use crate::output::format_float;
use crate::scalar::Scalar;

/// Deepest digit walk accepted for a staircase.
pub const MAX_LEVEL: u32 = 64;
/// Largest breakpoint table or cell list that will be materialized.
pub const DEFAULT_TABLE_CAP: u128 = 1 << 24;

/// `m` equal pieces of length `ratio`, the first starting at 0 and the last
/// ending at 1, separated by equal gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorSeed<S> {
    pieces: usize,
    ratio: S,
}

impl<S: Scalar> CantorSeed<S> {
    pub fn new(pieces: usize, ratio: S) -> Result<Self> {
        if pieces < 2 {
            return Err(Error::domain(format!("a Cantor seed needs m ≥ 2 pieces, got {pieces}")));
        }
        if !(ratio > S::zero()) {
            return Err(Error::domain(format!("ratio must be positive, got {ratio}")));
        }
        let mr = S::from_count(pieces) * ratio;
        if mr > S::one() + S::epsilon() * S::lit(4.0) {
            return Err(Error::domain(format!(
                "{pieces} pieces of length {ratio} overlap (m·ratio = {mr} > 1)"
            )));
        }
        Ok(CantorSeed { pieces, ratio })
    }

    pub fn middle_third() -> Self {
        CantorSeed {
            pieces: 2,
            ratio: S::one() / S::lit(3.0),
        }
    }

    pub fn pieces(&self) -> usize {
        self.pieces
    }

    pub fn ratio(&self) -> S {
        self.ratio
    }

    /// `ln m / ln(1/ratio)`.
    pub fn dimension(&self) -> S {
        S::from_count(self.pieces).ln() / self.ratio.recip().ln()
    }

    /// `m·ratio = 1`: the pieces tile `[0,1]` and the staircase is the identity.
    pub fn is_degenerate(&self) -> bool {
        (S::from_count(self.pieces) * self.ratio - S::one()).abs() <= S::epsilon() * S::lit(4.0)
    }

    #[inline]
    pub fn piece_start(&self, i: usize) -> S {
        if i + 1 == self.pieces {
            // exact right endpoint
            S::one() - self.ratio
        } else {
            S::from_count(i) * (S::one() - self.ratio) / S::from_count(self.pieces - 1)
        }
    }
}

/// Where a staircase came from.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedDescriptor<S> {
    Cantor(CantorSeed<S>),
    Identity,
    Curve { name: String, dimension_s: S },
    Table,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr<S> {
    Identity,
    Cantor(CantorSeed<S>),
    Table(Vec<(S, S)>),
}

/// A level-n partition cell: `[x_lo, x_hi]` mapped onto `[u_lo, u_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<S> {
    pub x_lo: S,
    pub x_hi: S,
    pub u_lo: S,
    pub u_hi: S,
}

impl<S: Scalar> Cell<S> {
    pub fn du(&self) -> S {
        self.u_hi - self.u_lo
    }
}

/// Result of locating a point in the level-n partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location<S> {
    pub cell: Cell<S>,
    /// False inside a gap, where the staircase is constant.
    pub on_support: bool,
    /// Depth at which a gap was met (`level` when on the support).
    pub depth: u32,
}

/// Monotone normalized staircase on `[0, 1]` with `v(0) = 0`, `v(1) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Staircase<S> {
    repr: Repr<S>,
    pub dimension_s: S,
    pub level: u32,
    pub seed: SeedDescriptor<S>,
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::CapExceeded {
            what: "staircase level",
            requested: level as u128,
            cap: MAX_LEVEL as u128,
        });
    }
    Ok(())
}

/// Staircase of the normalized natural measure on a Cantor seed, resolved
/// to `level` digits.
pub fn staircase_from_cantor<S: Scalar>(seed: CantorSeed<S>, level: u32) -> Result<Staircase<S>> {
    if level == 0 {
        return Err(Error::domain("staircase level must be at least 1"));
    }
    check_level(level)?;
    let repr = if seed.is_degenerate() {
        Repr::Identity
    } else {
        Repr::Cantor(seed)
    };
    Ok(Staircase {
        repr,
        dimension_s: seed.dimension(),
        level,
        seed: SeedDescriptor::Cantor(seed),
    })
}

/// Normalized integral mass function `γˢ(F, 0, ξ) / γˢ(F, 0, 1)` of a curve,
/// tabulated on its natural level partition.
pub fn staircase_from_curve<S: Scalar>(curve: &FractalCurve<S>, s: S, name: impl Into<String>) -> Result<Staircase<S>> {
    if !(s > S::zero()) {
        return Err(Error::domain(format!("mass exponent must be positive, got {s}")));
    }
    let pts = curve.points();
    let n = pts.len() - 1;
    let mut acc = Vec::with_capacity(n + 1);
    let mut total = S::zero();
    acc.push(total);
    for w in pts.windows(2) {
        total += (w[1] - w[0]).norm().powf(s);
        acc.push(total);
    }
    if !(total > S::zero()) {
        return Err(Error::domain("curve carries no mass"));
    }
    let nf = S::from_count(n);
    let mut table: Vec<(S, S)> = acc
        .iter()
        .enumerate()
        .map(|(k, &m)| (S::from_count(k) / nf, m / total))
        .collect();
    table[n] = (S::one(), S::one());
    let mut st = Staircase::from_table(table, s)?;
    st.seed = SeedDescriptor::Curve {
        name: name.into(),
        dimension_s: s,
    };
    st.level = curve.level;
    Ok(st)
}

impl<S: Scalar> Staircase<S> {
    /// `v(x) = x`, the smooth baseline.
    pub fn identity(level: u32) -> Result<Self> {
        check_level(level)?;
        Ok(Staircase {
            repr: Repr::Identity,
            dimension_s: S::one(),
            level,
            seed: SeedDescriptor::Identity,
        })
    }

    /// Generic staircase from a breakpoint table, interpolated linearly.
    pub fn from_table(points: Vec<(S, S)>, dimension_s: S) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain("a staircase table needs at least two breakpoints"));
        }
        if points[0] != (S::zero(), S::zero()) || *points.last().unwrap() != (S::one(), S::one()) {
            return Err(Error::domain("staircase table must start at (0,0) and end at (1,1)"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 {
                return Err(Error::domain(format!(
                    "staircase table not monotone near ({}, {})",
                    w[1].0, w[1].1
                )));
            }
        }
        let level = (points.len() as f64 - 1.0).log2().ceil() as u32;
        Ok(Staircase {
            repr: Repr::Table(points),
            dimension_s,
            level,
            seed: SeedDescriptor::Table,
        })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.repr, Repr::Identity)
    }

    /// Branching factor of the natural partition (2 for identity and tables).
    pub fn branching(&self) -> usize {
        match &self.repr {
            Repr::Cantor(seed) => seed.pieces,
            _ => 2,
        }
    }

    /// Evaluates `v(x)` for `x ∈ [0, 1]`.
    pub fn eval(&self, x: S) -> Result<S> {
        if !(x >= S::zero() && x <= S::one()) {
            return Err(Error::domain(format!("staircase argument {x} outside [0,1]")));
        }
        Ok(self.eval_in_range(x))
    }

    fn eval_in_range(&self, x: S) -> S {
        match &self.repr {
            Repr::Identity => x,
            Repr::Cantor(seed) => cantor_eval(seed, x, self.level),
            Repr::Table(t) => table_eval(t, x),
        }
    }

    /// Self-affine extension to the real line: `v(x + 1) = v(x) + 1` and
    /// `v(−x) = −v(x)`.
    pub fn extend(&self, x: S) -> S {
        if x < S::zero() {
            return -self.extend(-x);
        }
        let whole = x.floor();
        whole + self.eval_in_range(x - whole)
    }

    /// A preimage `x ∈ [0,1]` with `v(x) = u`; on a plateau the digit walk
    /// picks one endpoint.
    pub fn inverse(&self, u: S) -> Result<S> {
        if !(u >= S::zero() && u <= S::one()) {
            return Err(Error::domain(format!("staircase value {u} outside [0,1]")));
        }
        Ok(self.inverse_in_range(u))
    }

    fn inverse_in_range(&self, u: S) -> S {
        match &self.repr {
            Repr::Identity => u,
            Repr::Cantor(seed) => cantor_inverse(seed, u, self.level),
            Repr::Table(t) => table_inverse(t, u),
        }
    }

    /// Inverse of [`Staircase::extend`].
    pub fn extend_inverse(&self, u: S) -> S {
        if u < S::zero() {
            return -self.extend_inverse(-u);
        }
        let whole = u.floor();
        whole + self.inverse_in_range(u - whole)
    }

    /// Cell of the level-`level` partition containing `x ∈ [0,1]`.
    pub fn locate(&self, x: S, level: u32) -> Result<Location<S>> {
        if !(x >= S::zero() && x <= S::one()) {
            return Err(Error::domain(format!("cannot locate {x} outside [0,1]")));
        }
        let level = level.min(self.level);
        Ok(match &self.repr {
            Repr::Identity => {
                let cells = S::lit(2.0).powi(level as i32);
                let k = (x * cells).floor().min(cells - S::one());
                let lo = k / cells;
                let hi = (k + S::one()) / cells;
                Location {
                    cell: Cell {
                        x_lo: lo,
                        x_hi: hi,
                        u_lo: lo,
                        u_hi: hi,
                    },
                    on_support: true,
                    depth: level,
                }
            }
            Repr::Cantor(seed) => cantor_locate(seed, x, level),
            Repr::Table(t) => {
                let i = bracket(t, x);
                let cell = Cell {
                    x_lo: t[i].0,
                    x_hi: t[i + 1].0,
                    u_lo: t[i].1,
                    u_hi: t[i + 1].1,
                };
                Location {
                    cell,
                    on_support: cell.u_hi > cell.u_lo,
                    depth: level,
                }
            }
        })
    }

    /// Support cells of the level-`level` partition (gaps carry no mass and
    /// are omitted), ordered by `x`.
    pub fn cells(&self, level: u32, cap: u128) -> Result<Vec<Cell<S>>> {
        let level = level.min(self.level);
        match &self.repr {
            Repr::Identity => {
                let count = 1u128 << level;
                guard_cells(count, cap)?;
                let n = count as usize;
                let nf = S::from_count(n);
                Ok((0..n)
                    .map(|k| {
                        let lo = S::from_count(k) / nf;
                        let hi = S::from_count(k + 1) / nf;
                        Cell {
                            x_lo: lo,
                            x_hi: hi,
                            u_lo: lo,
                            u_hi: hi,
                        }
                    })
                    .collect())
            }
            Repr::Cantor(seed) => {
                let count = (seed.pieces as u128).saturating_pow(level);
                guard_cells(count, cap)?;
                Ok(cantor_cells(seed, level))
            }
            Repr::Table(t) => Ok(t
                .windows(2)
                .filter(|w| w[1].1 > w[0].1)
                .map(|w| Cell {
                    x_lo: w[0].0,
                    x_hi: w[1].0,
                    u_lo: w[0].1,
                    u_hi: w[1].1,
                })
                .collect()),
        }
    }

    /// Level-n breakpoint table `(ξ, v(ξ))`.
    pub fn breakpoints(&self, cap: u128) -> Result<Vec<(S, S)>> {
        if let Repr::Table(t) = &self.repr {
            return Ok(t.clone());
        }
        let cells = self.cells(self.level, cap / 2)?;
        let mut out = Vec::with_capacity(cells.len() * 2);
        for c in cells {
            if out.last() != Some(&(c.x_lo, c.u_lo)) {
                out.push((c.x_lo, c.u_lo));
            }
            out.push((c.x_hi, c.u_hi));
        }
        Ok(out)
    }

    /// Writes `samples` uniformly spaced evaluations as `xi,value` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W, samples: usize) -> io::Result<()> {
        writeln!(out, "xi,value")?;
        let n = samples.max(2);
        for i in 0..n {
            let x = if i + 1 == n {
                S::one()
            } else {
                S::from_count(i) / S::from_count(n - 1)
            };
            let v = self.eval_in_range(x);
            writeln!(out, "{},{}", format_float(x.as_f64()), format_float(v.as_f64()))?;
        }
        Ok(())
    }
}

fn guard_cells(count: u128, cap: u128) -> Result<()> {
    if count > cap {
        return Err(Error::CapExceeded {
            what: "partition cells",
            requested: count,
            cap,
        });
    }
    Ok(())
}

/// Index of the piece containing `t`, or `Err(i)` for the gap preceding
/// piece `i`.
#[inline]
fn find_piece<S: Scalar>(seed: &CantorSeed<S>, t: S) -> std::result::Result<usize, usize> {
    for i in 0..seed.pieces {
        let start = seed.piece_start(i);
        if t < start {
            return Err(i);
        }
        if t <= start + seed.ratio {
            return Ok(i);
        }
    }
    Ok(seed.pieces - 1)
}

fn cantor_eval<S: Scalar>(seed: &CantorSeed<S>, x: S, level: u32) -> S {
    if x >= S::one() {
        return S::one();
    }
    let m = S::from_count(seed.pieces);
    let mut t = x;
    let mut u = S::zero();
    let mut du = S::one();
    for _ in 0..level {
        du /= m;
        match find_piece(seed, t) {
            Ok(i) => {
                u += S::from_count(i) * du;
                t = ((t - seed.piece_start(i)) / seed.ratio).max(S::zero()).min(S::one());
            }
            Err(i) => return u + S::from_count(i) * du,
        }
    }
    u + t * du
}

fn cantor_inverse<S: Scalar>(seed: &CantorSeed<S>, u: S, level: u32) -> S {
    if u >= S::one() {
        return S::one();
    }
    let m = S::from_count(seed.pieces);
    let mut t = u;
    let mut x = S::zero();
    let mut w = S::one();
    for _ in 0..level {
        let scaled = t * m;
        let d = scaled.floor().max(S::zero()).min(m - S::one());
        t = (scaled - d).max(S::zero()).min(S::one());
        x += seed.piece_start(d.to_usize().unwrap_or(0)) * w;
        w *= seed.ratio;
    }
    x + t * w
}

/// Absolute tolerance, in `x`, for snapping a point onto the nearest piece.
/// Preimages produced by [`Staircase::inverse`] sit on piece edges and
/// rounding would otherwise push some of them into deep gaps.
const LOCATE_SLACK_ULPS: f64 = 64.0;

fn cantor_locate<S: Scalar>(seed: &CantorSeed<S>, x: S, level: u32) -> Location<S> {
    let m = S::from_count(seed.pieces);
    let gap = (S::one() - m * seed.ratio) / (m - S::one());
    let slack_x = S::lit(LOCATE_SLACK_ULPS) * S::epsilon();
    let mut t = x;
    let (mut x_lo, mut w) = (S::zero(), S::one());
    let (mut u_lo, mut du) = (S::zero(), S::one());
    let mut depth = 0;
    while depth < level {
        let slack = slack_x / w;
        if slack * S::lit(4.0) > gap {
            // gaps below this depth are narrower than the rounding noise
            break;
        }
        let child_du = du / m;
        let piece = match find_piece(seed, t) {
            Ok(i) => Ok(i),
            Err(i) if t >= seed.piece_start(i) - slack => Ok(i),
            Err(i) if t <= seed.piece_start(i - 1) + seed.ratio + slack => Ok(i - 1),
            Err(i) => Err(i),
        };
        match piece {
            Ok(i) => {
                let start = seed.piece_start(i);
                x_lo += start * w;
                u_lo += S::from_count(i) * child_du;
                w *= seed.ratio;
                du = child_du;
                t = ((t - start) / seed.ratio).max(S::zero()).min(S::one());
            }
            Err(i) => {
                let gap_lo = x_lo + (seed.piece_start(i - 1) + seed.ratio) * w;
                let gap_hi = x_lo + seed.piece_start(i) * w;
                let u = u_lo + S::from_count(i) * child_du;
                return Location {
                    cell: Cell {
                        x_lo: gap_lo,
                        x_hi: gap_hi,
                        u_lo: u,
                        u_hi: u,
                    },
                    on_support: false,
                    depth: depth + 1,
                };
            }
        }
        depth += 1;
    }
    Location {
        cell: Cell {
            x_lo,
            x_hi: x_lo + w,
            u_lo,
            u_hi: u_lo + du,
        },
        on_support: true,
        depth,
    }
}

fn cantor_cells<S: Scalar>(seed: &CantorSeed<S>, level: u32) -> Vec<Cell<S>> {
    let m = seed.pieces;
    let mut cells = vec![Cell {
        x_lo: S::zero(),
        x_hi: S::one(),
        u_lo: S::zero(),
        u_hi: S::one(),
    }];
    let mut w = S::one();
    let mut du = S::one();
    let mf = S::from_count(m);
    let starts: Vec<S> = (0..m).map(|i| seed.piece_start(i)).collect();
    for _ in 0..level {
        let child_w = w * seed.ratio;
        let child_du = du / mf;
        let mut next = Vec::with_capacity(cells.len() * m);
        for c in &cells {
            for (i, &start) in starts.iter().enumerate() {
                let x_lo = c.x_lo + start * w;
                let u_lo = c.u_lo + S::from_count(i) * child_du;
                next.push(Cell {
                    x_lo,
                    x_hi: x_lo + child_w,
                    u_lo,
                    u_hi: u_lo + child_du,
                });
            }
        }
        cells = next;
        w = child_w;
        du = child_du;
    }
    cells
}

/// Index `i` with `t[i].0 ≤ x ≤ t[i+1].0`.
fn bracket<S: Scalar>(t: &[(S, S)], x: S) -> usize {
    let idx = t.partition_point(|p| p.0 <= x);
    idx.saturating_sub(1).min(t.len() - 2)
}

fn table_eval<S: Scalar>(t: &[(S, S)], x: S) -> S {
    let i = bracket(t, x);
    let (x0, v0) = t[i];
    let (x1, v1) = t[i + 1];
    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
}

fn table_inverse<S: Scalar>(t: &[(S, S)], u: S) -> S {
    let idx = t.partition_point(|p| p.1 < u);
    if idx == 0 {
        return t[0].0;
    }
    let i = idx.min(t.len() - 1) - 1;
    let (x0, v0) = t[i];
    let (x1, v1) = t[i + 1];
    if v1 > v0 {
        x0 + (x1 - x0) * (u - v0) / (v1 - v0)
    } else {
        x1
    }
}
