//! Run configuration: a TOML document with shared tolerances, caps and
//! staircase seeds, plus one optional section per solver subcommand.

use std::path::{Path, PathBuf};

use fractal_duality::{staircase_from_cantor, CantorSeed64, Staircase64, MAX_LEVEL};
use serde::Deserialize;

use crate::expr::Expr;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub output: Output,
    /// Space staircase; also used for time unless `time_staircase` is set.
    pub staircase: Option<SeedConfig>,
    pub time_staircase: Option<SeedConfig>,
    pub solve1d: Option<Solve1d>,
    pub solve2d: Option<Solve2d>,
    pub dispersion: Option<Dispersion>,
    pub lacunary: Option<Lacunary>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed excess of `v(x1+x2)` over the ultrametric bound.
    pub valuation_slack: f64,
    pub quadrature: f64,
    pub derivative: f64,
    pub mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            valuation_slack: 1e-12,
            quadrature: fractal_duality::QUADRATURE_TOLERANCE,
            derivative: fractal_duality::DERIVATIVE_TOLERANCE,
            mass: fractal_duality::MASS_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    /// Largest staircase or partition level accepted anywhere.
    pub level: u32,
    /// Largest mode count per axis.
    pub modes: usize,
    /// Largest polyline segment count for IFS iteration and breakpoint tables.
    pub segments: u64,
    /// Largest lacunary level `k`.
    pub lacunary_level: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            level: 40,
            modes: 256,
            segments: 1 << 24,
            lacunary_level: 4,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    /// Prefix for relative output paths.
    pub dir: Option<PathBuf>,
}

impl Output {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKind {
    Cantor,
    MiddleThird,
    Identity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub kind: SeedKind,
    #[serde(default = "default_pieces")]
    pub pieces: usize,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_seed_level")]
    pub level: u32,
}

fn default_pieces() -> usize {
    2
}

fn default_ratio() -> f64 {
    0.25
}

fn default_seed_level() -> u32 {
    40
}

impl Default for SeedConfig {
    /// Two pieces of ratio 1/4, dimension 1/2.
    fn default() -> Self {
        SeedConfig {
            kind: SeedKind::Cantor,
            pieces: default_pieces(),
            ratio: default_ratio(),
            level: default_seed_level(),
        }
    }
}

impl SeedConfig {
    pub fn build(&self) -> Result<Staircase64, String> {
        let built = match self.kind {
            SeedKind::Identity => Staircase64::identity(self.level),
            SeedKind::MiddleThird => staircase_from_cantor(CantorSeed64::middle_third(), self.level),
            SeedKind::Cantor => {
                CantorSeed64::new(self.pieces, self.ratio).and_then(|seed| staircase_from_cantor(seed, self.level))
            }
        };
        built.map_err(|e| e.to_string())
    }
}

/// `start..=stop` in `count` evenly spaced points.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }

    fn check(&self, name: &str, problems: &mut Vec<String>) {
        if self.count == 0 {
            problems.push(format!("{name}.count must be at least 1"));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            problems.push(format!("{name}: start and stop must be finite"));
        } else if self.count > 1 && self.start >= self.stop {
            problems.push(format!("{name}: start must be below stop"));
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solve1d {
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default = "one")]
    pub speed_factor: f64,
    #[serde(default = "one")]
    pub wave_speed: f64,
    /// Initial displacement `h(u)`.
    pub profile: String,
    #[serde(default = "default_modes_1d")]
    pub modes: usize,
    #[serde(default = "default_level_1d")]
    pub level: u32,
    #[serde(default)]
    pub classical_time: bool,
    pub times: Option<Grid>,
    pub xs: Option<Grid>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solve2d {
    #[serde(default = "one")]
    pub speed_factor: f64,
    #[serde(default = "one")]
    pub wave_speed: f64,
    /// Initial displacement `h(ux, uy)`.
    pub profile: String,
    #[serde(default = "default_modes_2d")]
    pub m_modes: usize,
    #[serde(default = "default_modes_2d")]
    pub n_modes: usize,
    #[serde(default = "default_level_2d")]
    pub level: u32,
    #[serde(default)]
    pub classical_time: bool,
    pub times: Option<Grid>,
    pub xs: Option<Grid>,
    pub ys: Option<Grid>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dispersion {
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default = "one")]
    pub speed_factor: f64,
    pub ks: Grid,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lacunary {
    pub k: u32,
    /// `h_k(x, y)`; taken as zero outside the unit square unless
    /// `unit_square_support = false`.
    #[serde(default = "default_lacunary_profile")]
    pub profile: String,
    #[serde(default = "yes")]
    pub unit_square_support: bool,
    #[serde(default = "default_modes_lacunary")]
    pub m_modes: usize,
    #[serde(default = "default_modes_lacunary")]
    pub n_modes: usize,
    pub out: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_modes_1d() -> usize {
    fractal_duality::DEFAULT_MODES_1D
}

fn default_modes_2d() -> usize {
    fractal_duality::DEFAULT_MODES_2D
}

fn default_level_1d() -> u32 {
    fractal_duality::DEFAULT_LEVEL_1D
}

fn default_level_2d() -> u32 {
    fractal_duality::DEFAULT_LEVEL_2D
}

fn default_modes_lacunary() -> usize {
    4
}

fn default_lacunary_profile() -> String {
    "sin(pi*x)*sin(pi*y)".into()
}

/// A config that failed to load or validate.
#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Schema(String),
    Invalid(Vec<String>),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(msg) => write!(f, "cannot read config: {msg}"),
            ConfigError::Schema(msg) => write!(f, "config schema violation:\n{msg}"),
            ConfigError::Invalid(items) => {
                write!(
                    f,
                    "invalid config ({} problem{}):",
                    items.len(),
                    if items.len() == 1 { "" } else { "s" }
                )?;
                for item in items {
                    write!(f, "\n  - {item}")?;
                }
                Ok(())
            }
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn space_seed(&self) -> SeedConfig {
        self.staircase.clone().unwrap_or_default()
    }

    pub fn time_seed(&self) -> SeedConfig {
        self.time_staircase.clone().unwrap_or_else(|| self.space_seed())
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut p = Vec::new();
        let t = &self.tolerances;
        for (name, v) in [
            ("valuation_slack", t.valuation_slack),
            ("quadrature", t.quadrature),
            ("derivative", t.derivative),
            ("mass", t.mass),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                p.push(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        let c = &self.caps;
        if c.level == 0 {
            p.push("caps.level must be at least 1".into());
        } else if c.level > MAX_LEVEL {
            p.push(format!("caps.level must not exceed {MAX_LEVEL}, got {}", c.level));
        }
        if c.modes == 0 {
            p.push("caps.modes must be at least 1".into());
        }
        if c.segments == 0 {
            p.push("caps.segments must be at least 1".into());
        }
        if c.lacunary_level == 0 {
            p.push("caps.lacunary_level must be at least 1".into());
        }

        for (name, seed) in [("staircase", &self.staircase), ("time_staircase", &self.time_staircase)] {
            if let Some(seed) = seed {
                self.check_level(&format!("{name}.level"), seed.level, &mut p);
                if seed.level >= 1 && seed.level <= c.level.max(1) {
                    if let Err(e) = seed.build() {
                        p.push(format!("{name}: {e}"));
                    }
                }
            }
        }

        if let Some(s) = &self.solve1d {
            positive("solve1d.length", s.length, &mut p);
            positive("solve1d.speed_factor", s.speed_factor, &mut p);
            positive("solve1d.wave_speed", s.wave_speed, &mut p);
            self.check_modes("solve1d.modes", s.modes, &mut p);
            self.check_level("solve1d.level", s.level, &mut p);
            check_expr("solve1d.profile", &s.profile, &["u"], &mut p);
            if let Some(g) = &s.times {
                g.check("solve1d.times", &mut p);
            }
            if let Some(g) = &s.xs {
                g.check("solve1d.xs", &mut p);
                if g.start < 0.0 || g.stop > s.length {
                    p.push("solve1d.xs must lie within [0, length]".into());
                }
            }
        }
        if let Some(s) = &self.solve2d {
            positive("solve2d.speed_factor", s.speed_factor, &mut p);
            positive("solve2d.wave_speed", s.wave_speed, &mut p);
            self.check_modes("solve2d.m_modes", s.m_modes, &mut p);
            self.check_modes("solve2d.n_modes", s.n_modes, &mut p);
            self.check_level("solve2d.level", s.level, &mut p);
            check_expr("solve2d.profile", &s.profile, &["ux", "uy"], &mut p);
            for (name, g) in [("times", &s.times), ("xs", &s.xs), ("ys", &s.ys)] {
                if let Some(g) = g {
                    g.check(&format!("solve2d.{name}"), &mut p);
                    if name != "times" && (g.start < 0.0 || g.stop > 1.0) {
                        p.push(format!("solve2d.{name} must lie within [0, 1]"));
                    }
                }
            }
        }
        if let Some(d) = &self.dispersion {
            positive("dispersion.length", d.length, &mut p);
            positive("dispersion.speed_factor", d.speed_factor, &mut p);
            d.ks.check("dispersion.ks", &mut p);
        }
        if let Some(l) = &self.lacunary {
            if l.k > c.lacunary_level {
                p.push(format!(
                    "lacunary.k = {} exceeds caps.lacunary_level = {}",
                    l.k, c.lacunary_level
                ));
            }
            self.check_modes("lacunary.m_modes", l.m_modes, &mut p);
            self.check_modes("lacunary.n_modes", l.n_modes, &mut p);
            check_expr("lacunary.profile", &l.profile, &["x", "y"], &mut p);
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(p))
        }
    }

    fn check_level(&self, name: &str, level: u32, p: &mut Vec<String>) {
        if level == 0 {
            p.push(format!("{name} must be at least 1"));
        } else if level > self.caps.level {
            p.push(format!("{name} = {level} exceeds caps.level = {}", self.caps.level));
        }
    }

    fn check_modes(&self, name: &str, modes: usize, p: &mut Vec<String>) {
        if modes == 0 {
            p.push(format!("{name} must be at least 1"));
        } else if modes > self.caps.modes {
            p.push(format!("{name} = {modes} exceeds caps.modes = {}", self.caps.modes));
        }
    }
}

fn positive(name: &str, v: f64, p: &mut Vec<String>) {
    if !(v > 0.0 && v.is_finite()) {
        p.push(format!("{name} must be positive, got {v}"));
    }
}

fn check_expr(name: &str, source: &str, vars: &[&str], p: &mut Vec<String>) {
    if let Err(e) = Expr::parse(source, vars) {
        p.push(format!("{name}: {e}"));
    }
}
