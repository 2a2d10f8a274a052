use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use fractal_duality::output::{format_float, write_row};
use fractal_duality::{
    classify_sequence, dispersion_table, eval_modes_1d, hutchinson_iterate, koch_ifs, lacunary_partial_sum,
    local_fractional_derivative, mass_function, solve_1d, solve_2d, staircase_from_cantor, staircase_from_curve,
    stieltjes_integral, ultrametric_slack, unit_initiator, valuation, write_dispersion, write_grid_1d, write_grid_2d,
    CantorSeed64, Error, FractalFunction, IfsSpec64, Scale64, SeedDescriptor, SequenceSpec64, Staircase64,
    StaircaseCoordinate64, WaveProblem1D64, WaveProblem2D64,
};

use crate::config::{ConfigError, Grid, RunConfig};
use crate::expr::Expr;
use crate::{Command, CommonArgs, SeedArgs, SeedChoice, SolverArgs};

pub struct Failure {
    pub code: u8,
    pub message: String,
    /// Stdout was closed by the reader; not reported.
    pub broken_pipe: bool,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
            broken_pipe: false,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_non_convergence() { 2 } else { 1 },
            message: e.to_string(),
            broken_pipe: false,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            broken_pipe: e.kind() == io::ErrorKind::BrokenPipe,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

pub fn run(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Classify {
            sequence,
            scale,
            n0,
            doublings,
        } => classify(&sequence, &scale, n0, doublings, out),
        Command::Valuation { x, delta, with, common } => cmd_valuation(x, delta, with, &load_common(&common)?, out),
        Command::Staircase {
            seed,
            samples,
            out: path,
            common,
        } => cmd_staircase(&seed, samples, path.as_deref(), &load_common(&common)?, out),
        Command::Massfn {
            ifs,
            koch_angle,
            level,
            s,
            a,
            b,
            staircase_out,
            samples,
            common,
        } => {
            let config = load_common(&common)?;
            let spec = match ifs {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
                    IfsSpec64::from_toml_str(&text)?
                }
                None => koch_ifs(koch_angle.unwrap_or(60.0).to_radians())?,
            };
            cmd_massfn(
                &spec,
                level,
                s,
                (a, b),
                staircase_out.as_deref().map(|p| (p, samples)),
                &config,
                out,
            )
        }
        Command::Derivative {
            function,
            at,
            length,
            seed,
            partition_level,
            common,
        } => cmd_derivative(
            &function,
            at,
            length,
            &seed,
            partition_level,
            &load_common(&common)?,
            out,
        ),
        Command::Integrate {
            integrand,
            a,
            b,
            length,
            seed,
            partition_level,
            common,
        } => cmd_integrate(
            &integrand,
            (a, b),
            length,
            &seed,
            partition_level,
            &load_common(&common)?,
            out,
        ),
        Command::Solve1d(args) => cmd_solve1d(&args, out),
        Command::Solve2d(args) => cmd_solve2d(&args, out),
        Command::Dispersion(args) => cmd_dispersion(&args, out),
        Command::Lacunary(args) => cmd_lacunary(&args, out),
    }
}

fn load_common(common: &CommonArgs) -> Result<RunConfig, Failure> {
    match &common.config {
        Some(path) => Ok(RunConfig::load(path)?),
        None => Ok(RunConfig::default()),
    }
}

fn parse_expr(what: &str, source: &str, vars: &[&str]) -> Result<Expr, Failure> {
    Expr::parse(source, vars).map_err(|e| Failure::usage(format!("cannot parse {what}:\n{}", e.render(source))))
}

fn f(x: f64) -> String {
    format_float(x)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::usage(format!("cannot write {}: {e}", path.display()))
}

/// Runs `write` against `path`, or `out` when `path` is `None` or `-`.
fn emit(out: &mut dyn Write, path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Outcome {
    match path.filter(|p| p.as_os_str() != "-") {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| io_failure(path, e))?;
            }
            let file = File::create(path).map_err(|e| io_failure(path, e))?;
            let mut file = BufWriter::new(file);
            write(&mut file)
                .and_then(|_| file.flush())
                .map_err(|e| io_failure(path, e))?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(())
        }
        None => Ok(write(out)?),
    }
}

fn describe(st: &Staircase64) -> String {
    match &st.seed {
        SeedDescriptor::Identity => "identity".into(),
        SeedDescriptor::Cantor(seed) => format!(
            "cantor pieces={} ratio={} level={}",
            seed.pieces(),
            f(seed.ratio()),
            st.level
        ),
        SeedDescriptor::Curve { name, .. } => format!("curve {name}"),
        SeedDescriptor::Table => "table".into(),
    }
}

fn build_seed(seed: &SeedArgs, config: &RunConfig) -> Result<Staircase64, Failure> {
    if seed.level > config.caps.level {
        return Err(Failure::usage(format!(
            "staircase level {} exceeds the cap of {}",
            seed.level, config.caps.level
        )));
    }
    let st = match seed.seed {
        SeedChoice::Identity => Staircase64::identity(seed.level)?,
        SeedChoice::MiddleThird => staircase_from_cantor(CantorSeed64::middle_third(), seed.level)?,
        SeedChoice::Cantor => staircase_from_cantor(CantorSeed64::new(seed.pieces, seed.ratio)?, seed.level)?,
    };
    Ok(st)
}

fn classify(sequence: &str, scale: &str, n0: u64, doublings: u32, out: &mut dyn Write) -> Outcome {
    let seq = parse_expr("sequence", sequence, &["n"])?;
    let scale_expr = parse_expr("scale", scale, &["n"])?;
    if n0 == 0 {
        return Err(Failure::usage("--n0 must be at least 1"));
    }
    if doublings >= 64 - (64 - n0.leading_zeros()) {
        return Err(Failure::usage("--n0 · 2^doublings overflows a 64-bit index"));
    }
    let a_bar = SequenceSpec64::new(move |n| seq.eval(&[n as f64])).with_schedule(n0, doublings);
    let a = SequenceSpec64::new(move |n| scale_expr.eval(&[n as f64])).with_schedule(n0, doublings);
    let class = classify_sequence(&a_bar, &a)?;
    writeln!(out, "{} {}", class.label, f(class.exponent_estimate))?;
    writeln!(out, "label: {}", class.label)?;
    writeln!(out, "exponent: {}", f(class.exponent_estimate))?;
    writeln!(out, "signed_exponent: {}", f(class.signed_exponent))?;
    writeln!(out, "rate: {}", class.rate)?;
    writeln!(out, "log_slope: {}", f(class.log_slope))?;
    writeln!(out, "samples: {}", class.samples)?;
    Ok(())
}

fn cmd_valuation(x: f64, delta: f64, with: Option<f64>, config: &RunConfig, out: &mut dyn Write) -> Outcome {
    let scale = Scale64::new(delta)?;
    writeln!(out, "v: {}", f(valuation(x, scale)?))?;
    if let Some(x2) = with {
        let u = ultrametric_slack(x, x2, scale)?;
        writeln!(out, "v(x1+x2): {}", f(u.lhs))?;
        writeln!(out, "bound: {}", f(u.bound))?;
        writeln!(
            out,
            "holds: {}",
            yes_no(u.lhs <= u.bound + config.tolerances.valuation_slack)
        )?;
    }
    Ok(())
}

fn cmd_staircase(
    seed: &SeedArgs,
    samples: usize,
    path: Option<&Path>,
    config: &RunConfig,
    out: &mut dyn Write,
) -> Outcome {
    let st = build_seed(seed, config)?;
    let samples = samples.max(2);
    emit(out, path, |w| {
        writeln!(w, "# dimension_s={}", f(st.dimension_s))?;
        st.write_csv(w, samples)
    })
}

fn cmd_massfn(
    spec: &IfsSpec64,
    level: u32,
    s: Option<f64>,
    (a, b): (f64, f64),
    staircase_out: Option<(&Path, usize)>,
    config: &RunConfig,
    out: &mut dyn Write,
) -> Outcome {
    if level > config.caps.level {
        return Err(Failure::usage(format!(
            "level {level} exceeds the cap of {}",
            config.caps.level
        )));
    }
    let curve = hutchinson_iterate(spec, &unit_initiator(), level, config.caps.segments as u128)?;
    let dim = spec.similarity_dimension();
    let s = s.unwrap_or(dim);
    let mass = mass_function(&curve, s, a, b, config.tolerances.mass)?;
    writeln!(out, "ifs: {}", spec.name)?;
    writeln!(out, "maps: {}", spec.maps.len())?;
    writeln!(out, "similarity_dimension: {}", f(dim))?;
    writeln!(out, "s: {}", f(s))?;
    writeln!(out, "segments: {}", curve.segments())?;
    writeln!(out, "mass: {}", f(mass))?;
    if let Some((path, samples)) = staircase_out {
        let st = staircase_from_curve(&curve, s, spec.name.clone())?;
        emit(out, Some(path), |w| {
            writeln!(w, "# dimension_s={}", f(st.dimension_s))?;
            st.write_csv(w, samples.max(2))
        })?;
    }
    Ok(())
}

fn coordinate(seed: &SeedArgs, length: f64, config: &RunConfig) -> Result<StaircaseCoordinate64, Failure> {
    let st = build_seed(seed, config)?;
    Ok(StaircaseCoordinate64::new(st, length)?)
}

fn cmd_derivative(
    source: &str,
    at: f64,
    length: f64,
    seed: &SeedArgs,
    level: u32,
    config: &RunConfig,
    out: &mut dyn Write,
) -> Outcome {
    let outer = parse_expr("function", source, &["u"])?;
    if level > config.caps.level {
        return Err(Failure::usage(format!(
            "partition level {level} exceeds the cap of {}",
            config.caps.level
        )));
    }
    let coord = coordinate(seed, length, config)?;
    writeln!(out, "staircase: {}", describe(&coord.staircase))?;
    writeln!(out, "u(x): {}", f(coord.u(at)?))?;
    let ff = FractalFunction::new(move |u| outer.eval(&[u]), coord);
    let d = local_fractional_derivative(&ff, at, level, config.tolerances.derivative)?;
    writeln!(out, "on_support: {}", yes_no(d.on_support))?;
    writeln!(out, "derivative: {}", f(d.value))?;
    writeln!(out, "levels_used: {}", d.levels_used)?;
    Ok(())
}

fn cmd_integrate(
    source: &str,
    (a, b): (f64, f64),
    length: f64,
    seed: &SeedArgs,
    level: u32,
    config: &RunConfig,
    out: &mut dyn Write,
) -> Outcome {
    let g = parse_expr("integrand", source, &["u"])?;
    if level > config.caps.level {
        return Err(Failure::usage(format!(
            "partition level {level} exceeds the cap of {}",
            config.caps.level
        )));
    }
    let cells = (seed.pieces as f64).powi(level as i32);
    if seed.seed != SeedChoice::Identity && cells > config.caps.segments as f64 {
        return Err(Failure::usage(format!(
            "partition level {level} needs {cells:e} cells, above caps.segments = {}",
            config.caps.segments
        )));
    }
    let coord = coordinate(seed, length, config)?;
    writeln!(out, "staircase: {}", describe(&coord.staircase))?;
    let r = stieltjes_integral(|u| g.eval(&[u]), &coord, a, b, level)?;
    writeln!(out, "cells: {}", r.cells)?;
    writeln!(out, "stieltjes_sum: {}", f(r.value))?;
    writeln!(out, "change_of_variable: {}", f(r.change_of_variable))?;
    writeln!(out, "discrepancy: {}", f(r.discrepancy()))?;
    writeln!(out, "converged: {}", yes_no(r.converged))?;
    if !r.converged {
        return Err(Failure {
            code: 2,
            message: "change-of-variable quadrature did not converge".into(),
            broken_pipe: false,
        });
    }
    Ok(())
}

fn missing_section(args: &SolverArgs, name: &str) -> Failure {
    Failure::usage(format!("{}: config has no [{name}] section", args.config.display()))
}

fn output_path(config: &RunConfig, args: &SolverArgs, from_config: &Option<PathBuf>) -> Option<PathBuf> {
    args.out
        .clone()
        .or_else(|| from_config.as_ref().map(|p| config.output.resolve(p)))
        .filter(|p| p.as_os_str() != "-")
}

fn print_staircases(
    out: &mut dyn Write,
    space: &Staircase64,
    time: &Staircase64,
    coherent: bool,
    smooth: bool,
) -> io::Result<()> {
    writeln!(out, "staircase: {}", describe(space))?;
    writeln!(out, "dimension_s: {}", f(space.dimension_s))?;
    if !coherent {
        writeln!(out, "time_staircase: {}", describe(time))?;
        eprintln!("warning: space and time staircases differ; the solution is not spatio-temporally coherent");
    }
    if smooth {
        writeln!(out, "regime: smooth limit (classical solution)")?;
    } else {
        writeln!(out, "regime: fractal")?;
    }
    Ok(())
}

fn cmd_solve1d(args: &SolverArgs, out: &mut dyn Write) -> Outcome {
    let config = RunConfig::load(&args.config)?;
    let s = config
        .solve1d
        .as_ref()
        .ok_or_else(|| missing_section(args, "solve1d"))?;
    let space = config.space_seed().build().map_err(Failure::usage)?;
    let time = config.time_seed().build().map_err(Failure::usage)?;
    let profile = parse_expr("solve1d.profile", &s.profile, &["u"])?;
    let problem = WaveProblem1D64::new(s.length, s.speed_factor, space.clone(), move |u| profile.eval(&[u]))?
        .with_time_staircase(time.clone())
        .with_wave_speed(s.wave_speed)
        .with_modes(s.modes)
        .with_level(s.level)
        .with_classical_time(s.classical_time);
    let sol = solve_1d(&problem)?;

    writeln!(out, "problem: solve1d")?;
    print_staircases(out, &space, &time, problem.is_coherent(), problem.is_smooth_limit())?;
    writeln!(out, "length: {}", f(s.length))?;
    writeln!(out, "v(l): {}", f(problem.total_mass()))?;
    writeln!(out, "speed_factor: {}", f(s.speed_factor))?;
    writeln!(out, "modes: {}", s.modes)?;
    writeln!(out, "level: {}", s.level)?;
    for (n, ((a, k), w)) in sol.coefficients.iter().zip(&sol.k_f).zip(&sol.omega_f).enumerate() {
        writeln!(out, "a_{} = {}  k = {}  omega = {}", n + 1, f(*a), f(*k), f(*w))?;
    }
    writeln!(out, "tail: {}", f(sol.tail))?;
    let reconstruction = (0..=64)
        .map(|i| {
            let u = problem.total_mass() * i as f64 / 64.0;
            (eval_modes_1d(&sol, 0.0, u) - (problem.initial_profile)(u)).abs()
        })
        .fold(0.0, f64::max);
    writeln!(out, "max_reconstruction_error_t0: {}", f(reconstruction))?;

    if let Some(path) = output_path(&config, args, &s.out) {
        let times = s
            .times
            .unwrap_or(Grid {
                start: 0.0,
                stop: 1.0,
                count: 11,
            })
            .points();
        let xs =
            s.xs.unwrap_or(Grid {
                start: 0.0,
                stop: s.length,
                count: 101,
            })
            .points();
        emit(out, Some(&path), |w| write_grid_1d(w, &sol, &problem, &times, &xs))?;
    }
    Ok(())
}

fn cmd_solve2d(args: &SolverArgs, out: &mut dyn Write) -> Outcome {
    let config = RunConfig::load(&args.config)?;
    let s = config
        .solve2d
        .as_ref()
        .ok_or_else(|| missing_section(args, "solve2d"))?;
    let space = config.space_seed().build().map_err(Failure::usage)?;
    let time = config.time_seed().build().map_err(Failure::usage)?;
    let profile = parse_expr("solve2d.profile", &s.profile, &["ux", "uy"])?;
    let mut problem = WaveProblem2D64::new(space.clone(), move |ux, uy| profile.eval(&[ux, uy]))
        .with_staircases(space.clone(), space.clone(), time.clone())
        .with_modes(s.m_modes, s.n_modes)
        .with_level(s.level)
        .with_speed_factor(s.speed_factor)
        .with_classical_time(s.classical_time);
    problem.wave_speed_c = s.wave_speed;
    let cells = (space.branching() as f64).powi(s.level as i32);
    if !space.is_identity() && cells > config.caps.segments as f64 {
        return Err(Failure::usage(format!(
            "solve2d.level = {} needs {cells:e} cells per axis, above caps.segments = {}",
            s.level, config.caps.segments
        )));
    }
    let sol = solve_2d(&problem)?;

    writeln!(out, "problem: solve2d")?;
    print_staircases(out, &space, &time, problem.is_coherent(), problem.is_smooth_limit())?;
    writeln!(out, "speed_factor: {}", f(s.speed_factor))?;
    writeln!(out, "modes: {}x{}", s.m_modes, s.n_modes)?;
    writeln!(out, "level: {}", s.level)?;
    for m in 1..=s.m_modes {
        for n in 1..=s.n_modes {
            writeln!(
                out,
                "A_{m}_{n} = {}  omega = {}",
                f(sol.coefficient(m, n)),
                f(sol.frequency(m, n))
            )?;
        }
    }
    writeln!(out, "tail: {}", f(sol.tail))?;

    if let Some(path) = output_path(&config, args, &s.out) {
        let unit = |count| Grid {
            start: 0.0,
            stop: 1.0,
            count,
        };
        let times = s.times.unwrap_or(unit(5)).points();
        let xs = s.xs.unwrap_or(unit(21)).points();
        let ys = s.ys.unwrap_or(unit(21)).points();
        emit(out, Some(&path), |w| write_grid_2d(w, &sol, &problem, &times, &xs, &ys))?;
    }
    Ok(())
}

fn cmd_dispersion(args: &SolverArgs, out: &mut dyn Write) -> Outcome {
    let config = RunConfig::load(&args.config)?;
    let d = config
        .dispersion
        .as_ref()
        .ok_or_else(|| missing_section(args, "dispersion"))?;
    let space = config.space_seed().build().map_err(Failure::usage)?;
    let problem = WaveProblem1D64::new(d.length, d.speed_factor, space, |_| 0.0)?;
    let table = dispersion_table(&problem, &d.ks.points())?;
    match output_path(&config, args, &d.out) {
        Some(path) => {
            writeln!(out, "problem: dispersion")?;
            writeln!(out, "speed_factor: {}", f(d.speed_factor))?;
            writeln!(out, "rows: {}", table.len())?;
            emit(out, Some(&path), |w| write_dispersion(w, &table))
        }
        None => emit(out, None, |w| write_dispersion(w, &table)),
    }
}

fn cmd_lacunary(args: &SolverArgs, out: &mut dyn Write) -> Outcome {
    let config = RunConfig::load(&args.config)?;
    let l = config
        .lacunary
        .as_ref()
        .ok_or_else(|| missing_section(args, "lacunary"))?;
    let profile = parse_expr("lacunary.profile", &l.profile, &["x", "y"])?;
    let masked = l.unit_square_support;
    let h = move |x: f64, y: f64| {
        if masked && !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
            0.0
        } else {
            profile.eval(&[x, y])
        }
    };
    let approx = lacunary_partial_sum(l.k, h, l.m_modes, l.n_modes)?;

    writeln!(out, "problem: lacunary")?;
    writeln!(out, "k: {}", approx.k)?;
    writeln!(out, "square: [{}, {}]", f(approx.square.lo), f(approx.square.hi))?;
    for m in 1..=l.m_modes {
        for n in 1..=l.n_modes {
            writeln!(
                out,
                "A_{m}_{n} = {}  omega = {}",
                f(approx.coefficient(m, n)),
                f(approx.frequency(m, n))
            )?;
        }
    }
    writeln!(out, "term_bound: {}", f(approx.term_bound))?;
    writeln!(out, "derivative_bound: {}", f(approx.derivative_bound))?;

    if let Some(path) = output_path(&config, args, &l.out) {
        emit(out, Some(&path), |w| {
            writeln!(w, "m,n,A,omega")?;
            for m in 1..=l.m_modes {
                for n in 1..=l.n_modes {
                    write!(w, "{m},{n},")?;
                    write_row(&mut &mut *w, &[approx.coefficient(m, n), approx.frequency(m, n)])?;
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}
