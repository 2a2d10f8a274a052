//! Planar similarity IFS, Hutchinson iteration and the natural mass function.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Point<S> = Complex<S>;

/// Tolerance for the endpoint matching `S_i(1) = S_{i+1}(0)` of curve IFS.
pub const CHAIN_TOLERANCE: f64 = 1e-12;

/// Largest polyline `hutchinson_iterate` will build by default.
pub const DEFAULT_SEGMENT_CAP: u128 = 1 << 24;

/// `z ↦ translation + scale_factor · e^{i·rotation} · (z or z̄)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfsMap<S> {
    pub scale_factor: S,
    /// Radians.
    pub rotation: S,
    pub translation: Point<S>,
    pub conjugate: bool,
}

impl<S: Scalar> IfsMap<S> {
    pub fn new(scale_factor: S, rotation: S, translation: Point<S>) -> Self {
        IfsMap {
            scale_factor,
            rotation,
            translation,
            conjugate: false,
        }
    }

    #[inline]
    pub fn apply(&self, z: Point<S>) -> Point<S> {
        let z = if self.conjugate { z.conj() } else { z };
        self.translation + Complex::from_polar(self.scale_factor, self.rotation) * z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfsSpec<S> {
    pub name: String,
    pub maps: Vec<IfsMap<S>>,
}

impl<S: Scalar> IfsSpec<S> {
    /// Validates contractivity of every map.
    pub fn new(name: impl Into<String>, maps: Vec<IfsMap<S>>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::domain("an IFS needs at least one map"));
        }
        for (i, m) in maps.iter().enumerate() {
            if !(m.scale_factor > S::zero() && m.scale_factor < S::one()) {
                return Err(Error::domain(format!(
                    "map {i} is not a contraction: scale factor {}",
                    m.scale_factor
                )));
            }
        }
        Ok(IfsSpec {
            name: name.into(),
            maps,
        })
    }

    /// Largest gap `|S_i(1) − S_{i+1}(0)|` between consecutive maps.
    pub fn chain_gap(&self) -> S {
        let one = Complex::new(S::one(), S::zero());
        let zero = Complex::new(S::zero(), S::zero());
        self.maps
            .windows(2)
            .map(|w| (w[0].apply(one) - w[1].apply(zero)).norm())
            .fold(S::zero(), S::max)
    }

    /// Checks endpoint matching for curve-type IFS acting on `[0,1]`.
    pub fn check_chain_continuity(&self) -> Result<()> {
        let gap = self.chain_gap();
        if gap > S::lit(CHAIN_TOLERANCE) {
            return Err(Error::domain(format!(
                "IFS '{}' breaks chain continuity: endpoint gap {gap:e}",
                self.name
            )));
        }
        Ok(())
    }

    /// The `m` maps `z ↦ (z + i)/m` whose attractor is the unit segment.
    pub fn unit_interval(m: usize) -> Self {
        let mf = S::from_count(m);
        let maps = (0..m)
            .map(|i| IfsMap::new(mf.recip(), S::zero(), Complex::new(S::from_count(i) / mf, S::zero())))
            .collect();
        IfsSpec {
            name: format!("interval-{m}"),
            maps,
        }
    }

    /// Similarity dimension: root `s` of `Σ r_iˢ = 1`.
    pub fn similarity_dimension(&self) -> S {
        let r0 = self.maps[0].scale_factor;
        if self.maps.iter().all(|m| m.scale_factor == r0) {
            return S::from_count(self.maps.len()).ln() / r0.recip().ln();
        }
        let moran = |s: S| self.maps.iter().map(|m| m.scale_factor.powf(s)).sum::<S>() - S::one();
        let (mut lo, mut hi) = (S::zero(), S::one());
        while moran(hi) > S::zero() {
            hi *= S::lit(2.0);
        }
        for _ in 0..200 {
            let mid = (lo + hi) / S::lit(2.0);
            if moran(mid) > S::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / S::lit(2.0)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: IfsDocument = toml::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        let maps = doc
            .maps
            .iter()
            .map(|m| IfsMap {
                scale_factor: S::lit(m.scale),
                rotation: S::lit(m.rotation_degrees.to_radians()),
                translation: Complex::new(S::lit(m.translation[0]), S::lit(m.translation[1])),
                conjugate: m.conjugate,
            })
            .collect();
        let spec = IfsSpec::new(doc.name, maps)?;
        if doc.curve {
            spec.check_chain_continuity()?;
        }
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        let doc = IfsDocument {
            name: self.name.clone(),
            curve: true,
            maps: self
                .maps
                .iter()
                .map(|m| MapDocument {
                    scale: m.scale_factor.as_f64(),
                    rotation_degrees: m.rotation.as_f64().to_degrees(),
                    translation: [m.translation.re.as_f64(), m.translation.im.as_f64()],
                    conjugate: m.conjugate,
                })
                .collect(),
        };
        toml::to_string(&doc).expect("IFS document serializes")
    }
}

/// On-disk form of an IFS: a name plus a list of maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsDocument {
    pub name: String,
    /// Curve-type IFS are checked for chain continuity on load.
    #[serde(default = "default_true")]
    pub curve: bool,
    pub maps: Vec<MapDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub scale: f64,
    #[serde(default)]
    pub rotation_degrees: f64,
    #[serde(default)]
    pub translation: [f64; 2],
    #[serde(default)]
    pub conjugate: bool,
}

fn default_true() -> bool {
    true
}

/// Koch-family IFS with apex angle `alpha ∈ (0, π/2)`:
///
/// `S₁(z) = Lz`, `S₂(z) = L(1 + az)`, `S₃(z) = L(1 + a + āz)`,
/// `S₄(z) = L(1 + 2cos α + z)`, with `a = e^{iα}`, `L = 1/(2 + 2cos α)`.
pub fn koch_ifs<S: Scalar>(alpha: S) -> Result<IfsSpec<S>> {
    if !(alpha > S::zero() && alpha < S::FRAC_PI_2()) {
        return Err(Error::domain(format!("Koch angle must lie in (0, π/2), got {alpha}")));
    }
    let two = S::lit(2.0);
    let cos = alpha.cos();
    let l = (two + two * cos).recip();
    let a = Complex::from_polar(S::one(), alpha);
    let re = |x: S| Complex::new(x, S::zero());
    let maps = vec![
        IfsMap::new(l, S::zero(), re(S::zero())),
        IfsMap::new(l, alpha, re(l)),
        IfsMap::new(l, -alpha, (re(S::one()) + a) * l),
        IfsMap::new(l, S::zero(), re(l * (S::one() + two * cos))),
    ];
    IfsSpec::new(format!("koch-{:.6}", alpha.as_f64()), maps)
}

/// Level-`n` polyline approximation of an IFS attractor.
#[derive(Debug, Clone, PartialEq)]
pub struct FractalCurve<S> {
    points: Vec<Point<S>>,
    pub level: u32,
    pub dimension_s: S,
    /// Number of maps `m`; each refinement multiplies the segment count by `m`.
    pub branching: usize,
    /// Largest endpoint gap met while stitching map images, over all levels.
    pub max_chain_gap: S,
}

impl<S: Scalar> FractalCurve<S> {
    pub fn points(&self) -> &[Point<S>] {
        &self.points
    }

    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn length(&self) -> S {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Curve point at parameter `xi ∈ [0,1]`, segments uniformly parametrized.
    pub fn point_at(&self, xi: S) -> Point<S> {
        let n = self.segments();
        let pos = xi.max(S::zero()).min(S::one()) * S::from_count(n);
        let k = pos.floor().to_usize().unwrap_or(0).min(n - 1);
        let t = pos - S::from_count(k);
        self.points[k] + (self.points[k + 1] - self.points[k]) * t
    }

    /// Vertex at the grid parameter `k / m^j`, `j ≤ level`.
    fn grid_vertex(&self, k: usize, per_cell: usize) -> Point<S> {
        self.points[k * per_cell]
    }
}

/// Applies the Hutchinson operator `N(A) = ∪ S_i(A)` `n` times to an
/// initiator polyline running from `0` to `1`.
pub fn hutchinson_iterate<S: Scalar>(
    ifs: &IfsSpec<S>,
    initiator: &[Point<S>],
    n: u32,
    segment_cap: u128,
) -> Result<FractalCurve<S>> {
    if initiator.len() < 2 {
        return Err(Error::domain("initiator needs at least two points"));
    }
    let m = ifs.maps.len();
    let requested = (initiator.len() as u128 - 1).saturating_mul((m as u128).saturating_pow(n));
    if requested > segment_cap {
        return Err(Error::CapExceeded {
            what: "Hutchinson iteration",
            requested,
            cap: segment_cap,
        });
    }
    let mut pts = initiator.to_vec();
    let mut max_gap = S::zero();
    for _ in 0..n {
        let mut next: Vec<Point<S>> = Vec::with_capacity(m * (pts.len() - 1) + 1);
        for (i, map) in ifs.maps.iter().enumerate() {
            let mut image = pts.iter().map(|&z| map.apply(z));
            let first = image.next().expect("nonempty polyline");
            if i == 0 {
                next.push(first);
            } else {
                let last = *next.last().unwrap();
                max_gap = max_gap.max((first - last).norm());
            }
            next.extend(image);
        }
        pts = next;
    }
    Ok(FractalCurve {
        points: pts,
        level: n,
        dimension_s: ifs.similarity_dimension(),
        branching: m,
        max_chain_gap: max_gap,
    })
}

/// The unit segment `[0, 1]` as a two-point initiator.
pub fn unit_initiator<S: Scalar>() -> Vec<Point<S>> {
    vec![Complex::new(S::zero(), S::zero()), Complex::new(S::one(), S::zero())]
}

/// Default relative-change tolerance for [`mass_function`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// `γˢ(F, a, b) = Σ |F(ξ_k) − F(ξ_{k+1})|ˢ` over the natural `m`-adic
/// partitions of `[a, b]`, refined until the relative change drops below
/// `tol` or the curve level is reached.
///
/// Endpoints off the grid are evaluated by interpolation on the finest
/// polyline.
pub fn mass_function<S: Scalar>(curve: &FractalCurve<S>, s: S, a: S, b: S, tol: S) -> Result<S> {
    if !(s > S::zero()) {
        return Err(Error::domain(format!("mass exponent must be positive, got {s}")));
    }
    if !(S::zero() <= a && a < b && b <= S::one()) {
        return Err(Error::domain(format!("need 0 ≤ a < b ≤ 1, got [{a}, {b}]")));
    }
    let level_sum = |j: u32| -> S {
        let cells = curve.branching.pow(j);
        let per_cell = curve.segments() / cells;
        let cf = S::from_count(cells);
        let k_lo = (a * cf).ceil().to_usize().unwrap_or(0);
        let k_hi = (b * cf).floor().to_usize().unwrap_or(cells).min(cells);
        let mut prev = curve.point_at(a);
        let mut total = S::zero();
        for k in k_lo..=k_hi {
            let xi = S::from_count(k) / cf;
            if xi <= a || xi >= b {
                continue;
            }
            let p = curve.grid_vertex(k, per_cell);
            total += (p - prev).norm().powf(s);
            prev = p;
        }
        total + (curve.point_at(b) - prev).norm().powf(s)
    };
    let mut previous = level_sum(0);
    if curve.level == 0 {
        return Ok(previous);
    }
    let mut before = previous;
    for j in 1..=curve.level {
        let current = level_sum(j);
        if (current - previous).abs() <= tol * current.abs() {
            return Ok(current);
        }
        before = previous;
        previous = current;
    }
    Err(Error::NonConvergence {
        what: "mass function refinement",
        previous: before.as_f64(),
        last: previous.as_f64(),
    })
}
