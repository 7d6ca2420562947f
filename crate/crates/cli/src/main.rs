//! `oscflow`: evolve PGM images by the oscillation flow, run the ball and
//! stripe experiments, and run the invariant suites.

use clap::{Args, Parser, Subcommand, ValueEnum};
use oscflow::check::{run_checks, CheckConfig, Suite};
use oscflow::energy::EnergyConfig;
use oscflow::experiments::{
    compare_flows, run_ball, stripe_pattern, BallExperiment, CompareConfig,
};
use oscflow::scheme::{flow_set, FlowConfig, FlowMode, Selection, StepConfig};
use oscflow::{make_trapezoid_profile, pgm, BinarySet, Error, Grid2D};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_FAILURE: u8 = 1;
const EXIT_BAD_IMAGE: u8 = 2;
const EXIT_BAD_PARAMETER: u8 = 3;
const EXIT_BLANK: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "oscflow",
    version,
    about = "Oscillation-energy curvature flow by graph-cut minimizing movements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve the dark region of a PGM image.
    Evolve(EvolveArgs),
    /// Evolve a disk and compare its radius with the ball ODE.
    Ball(BallArgs),
    /// Run the oscillation and total-variation flows side by side.
    Compare(CompareArgs),
    /// Run the invariant suites and print a TAP report.
    Check(CheckArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EnergyKind {
    /// Single-radius oscillation energy (`--rho`).
    Osc,
    /// Profile-averaged oscillation energy (`--rho0`, `--delta-inner`).
    Profile,
    /// Total variation.
    Tv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Set,
    Function,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SelectionArg {
    Minimal,
    Maximal,
}

#[derive(Args, Debug, Clone)]
struct EnergyArgs {
    #[arg(long, value_enum, default_value = "osc")]
    energy: EnergyKind,
    #[arg(long, default_value_t = 4.0)]
    rho: f64,
    #[arg(long, default_value_t = 6.0)]
    rho0: f64,
    #[arg(long, default_value_t = 2.0)]
    delta_inner: f64,
    /// Quadrature nodes of the profile.
    #[arg(long, default_value_t = 4)]
    n_quad: usize,
}

impl EnergyArgs {
    fn config(&self) -> Result<EnergyConfig, Error> {
        Ok(match self.energy {
            EnergyKind::Osc => EnergyConfig::OscSingle { rho: self.rho },
            EnergyKind::Profile => EnergyConfig::OscProfile(make_trapezoid_profile(
                self.rho0,
                self.delta_inner,
                self.n_quad,
            )?),
            EnergyKind::Tv => EnergyConfig::TvBaseline,
        })
    }
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct EvolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    energy: EnergyArgs,
    #[arg(long, default_value_t = 4.0)]
    h: f64,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, default_value_t = 64)]
    n_levels: usize,
    #[arg(long, value_enum, default_value = "function")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "minimal")]
    selection: SelectionArg,
    /// Write a frame every this many steps (the last frame is always written).
    #[arg(long, default_value_t = 1)]
    emit_every: usize,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct BallArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 24.0)]
    r0: f64,
    #[arg(long, default_value_t = 6.0)]
    rho0: f64,
    #[arg(long, default_value_t = 2.0)]
    delta_inner: f64,
    #[arg(long, default_value_t = 4)]
    n_quad: usize,
    #[arg(long, default_value_t = 4.0)]
    h: f64,
    #[arg(long, default_value_t = 30)]
    steps: usize,
    #[arg(long, default_value_t = 64)]
    n_levels: usize,
    /// Largest accepted radius deviation, in cells.
    #[arg(long, default_value_t = 2.0)]
    tolerance: f64,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct CompareArgs {
    /// Input image; without it a stripe pattern is synthesized.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long, default_value_t = 8.0)]
    rho: f64,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 6)]
    period: usize,
    /// Radius of the disk the synthetic stripes are clipped to.
    #[arg(long, default_value_t = 48.0)]
    pattern_radius: f64,
    #[arg(long, value_enum, default_value = "set")]
    mode: ModeArg,
    #[arg(long, default_value_t = 64)]
    n_levels: usize,
    #[arg(long, default_value_t = 200)]
    max_steps: usize,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Run only this suite (energy, cut, hamiltonian, scheme).
    #[arg(long)]
    suite: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Capacity quantum of the cut solver.
    #[arg(long)]
    quantum: Option<f64>,
}

/// An error with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Pgm(_) => EXIT_BAD_IMAGE,
            Error::Io(_) | Error::Internal(_) => EXIT_FAILURE,
            _ => EXIT_BAD_PARAMETER,
        };
        Failure::new(code, e.to_string())
    }
}

fn io(e: std::io::Error, path: &Path) -> Failure {
    Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display()))
}

fn read_set(path: &Path) -> Result<BinarySet, Failure> {
    let img = pgm::read(path).map_err(|e| match e {
        Error::Io(err) => Failure::new(EXIT_BAD_IMAGE, format!("{}: {err}", path.display())),
        other => Failure::new(EXIT_BAD_IMAGE, format!("{}: {other}", path.display())),
    })?;
    let grid = Grid2D::new(img.width, img.height)?;
    Ok(img.to_set(grid)?)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| io(e, path))
}

fn frame_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("frame_{k:05}.pgm"))
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_BAD_PARAMETER,
            format!("--{name} must be positive, got {v}"),
        ))
    }
}

fn mode(m: ModeArg) -> FlowMode {
    match m {
        ModeArg::Set => FlowMode::Set,
        ModeArg::Function => FlowMode::Function,
    }
}

fn evolve(a: &EvolveArgs) -> Result<(), Failure> {
    let set = read_set(&a.input)?;
    if a.emit_every == 0 {
        return Err(Failure::new(
            EXIT_BAD_PARAMETER,
            "--emit-every must be at least 1",
        ));
    }
    let selection = match a.selection {
        SelectionArg::Minimal => Selection::Minimal,
        SelectionArg::Maximal => Selection::Maximal,
    };
    let step = StepConfig::new(a.h, a.energy.config()?)
        .with_levels(a.n_levels)
        .with_selection(selection);
    step.validate(set.grid())?;
    std::fs::create_dir_all(&a.output).map_err(|e| io(e, &a.output))?;

    let mut manifest = String::new();
    let _ = writeln!(manifest, "command=evolve");
    let _ = writeln!(manifest, "input={}", a.input.display());
    let _ = writeln!(
        manifest,
        "width={}\nheight={}",
        set.grid().width(),
        set.grid().height()
    );
    let _ = writeln!(manifest, "energy={:?}", a.energy.energy).map(|_| ());
    let _ = writeln!(
        manifest,
        "rho={}\nrho0={}\ndelta_inner={}\nn_quad={}\nh={}\nsteps={}\nn_levels={}\nmode={:?}\nselection={:?}\nemit_every={}",
        a.energy.rho, a.energy.rho0, a.energy.delta_inner, a.energy.n_quad, a.h, a.steps, a.n_levels, a.mode, a.selection, a.emit_every
    );

    let traj = flow_set(
        &set,
        &FlowConfig::new(step, a.steps).with_mode(mode(a.mode)),
    )?;
    let sets = traj.sets();
    let last = sets.len() - 1;
    let mut frames = 0;
    for (k, s) in sets.iter().enumerate() {
        if k % a.emit_every == 0 || k == last {
            write(&frame_path(&a.output, k), pgm::encode_set(s))?;
            frames += 1;
        }
    }
    write(&a.output.join("diag.csv"), traj.to_csv())?;
    let _ = writeln!(manifest, "frames={frames}");
    if let Some(k) = traj.extinction_step {
        let _ = writeln!(manifest, "extinction_step={k}");
        println!("set vanished at step {k}");
    }
    write(&a.output.join("manifest.txt"), manifest)?;
    println!("wrote {frames} frames to {}", a.output.display());
    Ok(())
}

fn ball(a: &BallArgs) -> Result<(), Failure> {
    positive("tolerance", a.tolerance)?;
    positive("h", a.h)?;
    if !(a.r0.is_finite() && a.r0 > 0.0) {
        return Err(Failure::new(
            EXIT_BAD_PARAMETER,
            format!("--r0 must be positive, got {}", a.r0),
        ));
    }
    let profile = make_trapezoid_profile(a.rho0, a.delta_inner, a.n_quad)?;
    let grid = Grid2D::new(a.size, a.size)?;
    StepConfig::new(a.h, EnergyConfig::OscProfile(profile.clone()))
        .with_levels(a.n_levels)
        .validate(&grid)?;
    std::fs::create_dir_all(&a.output).map_err(|e| io(e, &a.output))?;
    let mut exp = BallExperiment::new(a.size, a.r0, profile, a.h, a.steps);
    exp.n_levels = a.n_levels;
    let report = run_ball(&exp)?;
    write(&a.output.join("ball.csv"), report.to_csv())?;
    if report.rows.len() == 1 && a.steps > 0 {
        println!(
            "note: a disk of radius {} covers no cell; it is extinct from the start",
            a.r0
        );
    }
    println!("extinction time {:.4}", report.extinction_time);
    println!(
        "max deviation {:.4} cells (tolerance {})",
        report.max_deviation, a.tolerance
    );
    if report.max_deviation <= a.tolerance {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_FAILURE,
            "radius deviation above tolerance",
        ))
    }
}

/// Left half TV, right half oscillation; the shorter run repeats its last frame.
fn side_by_side(left: &BinarySet, right: &BinarySet) -> Vec<u8> {
    let g = left.grid();
    let (w, h) = (g.width(), g.height());
    let (l, r) = (pgm::set_pixels(left), pgm::set_pixels(right));
    let mut out = Vec::with_capacity(2 * w * h);
    for y in 0..h {
        out.extend_from_slice(&l[y * w..(y + 1) * w]);
        out.extend_from_slice(&r[y * w..(y + 1) * w]);
    }
    pgm::encode(2 * w, h, &out).expect("pixel count matches")
}

fn compare(a: &CompareArgs) -> Result<(), Failure> {
    positive("h", a.h)?;
    positive("rho", a.rho)?;
    let set = match &a.input {
        Some(path) => read_set(path)?,
        None => {
            if a.period < 2 {
                return Err(Failure::new(
                    EXIT_BAD_PARAMETER,
                    "--period must be at least 2",
                ));
            }
            stripe_pattern(Grid2D::new(a.size, a.size)?, a.period, a.pattern_radius)
        }
    };
    if set.is_empty() {
        return Err(Failure::new(
            EXIT_BLANK,
            "the input has no dark pixels; the survival ratio is undefined",
        ));
    }
    StepConfig::new(a.h, EnergyConfig::OscSingle { rho: a.rho }).validate(set.grid())?;
    std::fs::create_dir_all(&a.output).map_err(|e| io(e, &a.output))?;
    let mut cfg = CompareConfig::new(a.h, a.rho);
    cfg.mode = mode(a.mode);
    cfg.n_levels = a.n_levels;
    cfg.max_steps = a.max_steps;
    let report = compare_flows(&set, &cfg)?;
    let n = report.tv_sets.len().max(report.osc_sets.len());
    for k in 0..n {
        let l = &report.tv_sets[k.min(report.tv_sets.len() - 1)];
        let r = &report.osc_sets[k.min(report.osc_sets.len() - 1)];
        write(&frame_path(&a.output, k), side_by_side(l, r))?;
    }
    write(&a.output.join("survival.csv"), report.to_csv())?;
    if report.tv_censored {
        println!(
            "note: the TV flow kept most components for {} steps; the ratio is undetermined",
            report.tv_steps
        );
    }
    let bound = if report.osc_censored { ">=" } else { "=" };
    println!("components {}", report.components.len());
    println!(
        "median survival: tv {} steps, oscillation {bound} {} steps",
        report.tv_median, report.osc_median
    );
    println!("survival ratio {bound} {:.4}", report.ratio);
    Ok(())
}

fn check(a: &CheckArgs) -> Result<(), Failure> {
    let mut cfg = CheckConfig {
        seed: a.seed,
        ..CheckConfig::default()
    };
    if !a.suite.is_empty() {
        cfg.suites = a
            .suite
            .iter()
            .map(|s| Suite::parse(s))
            .collect::<Result<_, _>>()?;
    }
    if let Some(q) = a.quantum {
        cfg.quantum = q;
    }
    let report = run_checks(&cfg);
    print!("{}", report.to_tap());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_FAILURE, "invariant checks failed"))
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("OSCFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::new(
            EXIT_BAD_PARAMETER,
            format!("OSCFLOW_THREADS must be a positive integer, got {v:?}"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_BAD_PARAMETER)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Evolve(a) => evolve(a),
        Command::Ball(a) => ball(a),
        Command::Compare(a) => compare(a),
        Command::Check(a) => check(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("oscflow: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
