//! Command-line front end: configuration ingestion, sweep orchestration,
//! figure-data emission, and self-verification.
//!
//! Configuration comes from an optional JSON file (`--config`) merged with
//! command-line flags; flags win. All outputs are flat files in `--out`
//! (CSV/JSON, optional SVG quick-looks) written deterministically: the same
//! config and seed produce byte-identical files.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 config error, 3 numerical
//! failure.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gate::{self, MotionalState};
use crate::optimizer::{self, OptimalPulse};
use crate::pulse::{FourierPulse, PhysicalParams};
use crate::svg::{Plot, Series};
use crate::{constraints, trajectory};

/// Pulse synthesis and gate analysis for power-optimal amplitude-modulated
/// Mølmer–Sørensen gates.
#[derive(Parser, Debug)]
#[command(name = "mspulse", version, about)]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory for generated files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for randomized verification suites.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize the power-optimal pulse for one (N, l).
    Optimize(OptimizeArgs),
    /// Sweep (N, l) and tabulate power ratio and overhead.
    PowerTable(PowerTableArgs),
    /// Infidelity vs gate-timing error, slope fit, stability half-width.
    Scan(ScanArgs),
    /// Spin populations vs time under the exact propagator.
    Populations(PopulationsArgs),
    /// Pulse envelope Omega(t) on a uniform grid.
    Envelope(CurveArgs),
    /// Phase-space trajectory (G, -F) and accumulated phase.
    Trajectory(TrajectoryArgs),
    /// Run the self-verification property suite.
    Verify(VerifyArgs),
}

/// Flags shared by every command that needs a pulse.
#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Fourier truncation order N.
    #[arg(long)]
    pub n: Option<usize>,

    /// Number of derivative-nulling constraint sets l.
    #[arg(long)]
    pub l: Option<usize>,

    /// Lamb-Dicke parameter.
    #[arg(long)]
    pub eta: Option<f64>,

    /// Fundamental detuning xi0 (gate time T = 2 pi / xi0).
    #[arg(long)]
    pub xi0: Option<f64>,

    /// Use the constant-envelope MS baseline instead of optimizing.
    #[arg(long)]
    pub ms: bool,

    /// Load the pulse from a JSON file instead of optimizing.
    #[arg(long)]
    pub pulse: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Args, Debug)]
pub struct PowerTableArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Truncation orders to sweep, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,

    /// Constraint counts to sweep, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub l_list: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Mean thermal phonon number of the motional mode.
    #[arg(long)]
    pub nbar: Option<f64>,

    /// Smallest |dt|/T in the scan grid.
    #[arg(long)]
    pub dt_min: Option<f64>,

    /// Largest |dt|/T in the scan grid.
    #[arg(long)]
    pub dt_max: Option<f64>,

    /// Log-spaced grid points per sign.
    #[arg(long)]
    pub dt_count: Option<usize>,

    /// Slope-fit window in dt/T, lower edge.
    #[arg(long)]
    pub fit_min: Option<f64>,

    /// Slope-fit window in dt/T, upper edge.
    #[arg(long)]
    pub fit_max: Option<f64>,

    /// Infidelity threshold defining the stability region.
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Also write a log-log SVG with the MS baseline overlay.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct PopulationsArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Mean thermal phonon number (0 = motional ground state).
    #[arg(long)]
    pub nbar: Option<f64>,

    /// Number of grid points on [0, t_max_frac * T].
    #[arg(long)]
    pub t_count: Option<usize>,

    /// Grid endpoint as a fraction of the gate time.
    #[arg(long)]
    pub t_max_frac: Option<f64>,

    /// Also write an SVG of the populations.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Number of grid points on [0, T].
    #[arg(long)]
    pub t_count: Option<usize>,

    /// Also write an SVG of the curve.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Number of grid points.
    #[arg(long)]
    pub t_count: Option<usize>,

    /// Truncate the trajectory at (1 - truncate_frac) * T to visualize the
    /// residual displacement under a timing error.
    #[arg(long)]
    pub truncate_frac: Option<f64>,

    /// Also write an SVG of the (G, -F) curve.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Force a fixed Fock cutoff in the oracle-equivalence suite
    /// (diagnostic; small values make the suite fail by design).
    #[arg(long)]
    pub cutoff: Option<usize>,
}

/// JSON config file schema; every field optional, flags win.
#[derive(Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    l: Option<usize>,
    eta: Option<f64>,
    xi0: Option<f64>,
    nbar: Option<f64>,
    n_list: Option<Vec<usize>>,
    l_list: Option<Vec<usize>>,
    ms: Option<bool>,
    pulse: Option<PathBuf>,
    dt_min: Option<f64>,
    dt_max: Option<f64>,
    dt_count: Option<usize>,
    fit_min: Option<f64>,
    fit_max: Option<f64>,
    threshold: Option<f64>,
    t_count: Option<usize>,
    t_max_frac: Option<f64>,
    truncate_frac: Option<f64>,
    svg: Option<bool>,
    cutoff: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
}

/// Everything a command needs after merging flags, config file, defaults.
struct Ctx {
    out: PathBuf,
    seed: u64,
    file: FileConfig,
}

impl Ctx {
    fn pick<T: Clone>(&self, flag: Option<T>, file: Option<T>, default: T) -> T {
        flag.or(file).unwrap_or(default)
    }

    fn params(&self, src: &SourceArgs) -> Result<PhysicalParams> {
        PhysicalParams::new(
            self.pick(src.eta, self.file.eta, 0.1),
            self.pick(src.xi0, self.file.xi0, TAU),
        )
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        let file = File::create(&path)
            .map_err(|e| Error::config(format!("cannot write {}: {e}", path.display())))?;
        Ok(BufWriter::new(file))
    }
}

/// How a command obtained its pulse; carried for reporting.
enum PulseSource {
    Optimized(Box<OptimalPulse>),
    MsBaseline,
    File(PathBuf),
}

/// Resolve the pulse for scan/populations/envelope/trajectory: an explicit
/// file, the MS baseline, or a fresh optimization. The result is always
/// rescaled to |A(T)| = pi/2.
fn resolve_pulse(
    ctx: &Ctx,
    src: &SourceArgs,
    params: &PhysicalParams,
) -> Result<(FourierPulse, PulseSource)> {
    let ms = src.ms || ctx.file.ms.unwrap_or(false);
    let file = src.pulse.clone().or_else(|| ctx.file.pulse.clone());
    if ms && file.is_some() {
        return Err(Error::config("--ms and --pulse are mutually exclusive"));
    }
    if let Some(path) = file {
        let raw = std::fs::read_to_string(&path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let pulse: FourierPulse = serde_json::from_str(&raw)
            .map_err(|e| Error::config(format!("invalid pulse JSON {}: {e}", path.display())))?;
        let pulse = pulse.rescale_to_target_phase(params)?;
        return Ok((pulse, PulseSource::File(path)));
    }
    if ms {
        let pulse = FourierPulse::ms_baseline().rescale_to_target_phase(params)?;
        return Ok((pulse, PulseSource::MsBaseline));
    }
    let n = ctx.pick(src.n, ctx.file.n, 10);
    let l = ctx.pick(src.l, ctx.file.l, 1);
    let opt = optimizer::optimize_pulse(n, l, params)?;
    let pulse = opt.pulse.clone();
    Ok((pulse, PulseSource::Optimized(Box::new(opt))))
}

fn describe(source: &PulseSource) -> String {
    match source {
        PulseSource::Optimized(opt) => format!("optimized N={} l={}", opt.n_max, opt.l),
        PulseSource::MsBaseline => "MS baseline".into(),
        PulseSource::File(p) => format!("pulse file {}", p.display()),
    }
}

fn uniform_grid(t_max: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| t_max * k as f64 / (count - 1) as f64)
        .collect()
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count)
        .rev()
        .map(|k| -lo * (k as f64 * step).exp())
        .collect();
    grid.push(0.0);
    grid.extend((0..count).map(|k| lo * (k as f64 * step).exp()));
    grid
}

/// CLI entry point: parse, dispatch, map errors to exit codes.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path with status 0.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            match e {
                Error::Config(_) | Error::Io(_) | Error::Json(_) => 2,
                Error::Numerical(_) | Error::Quadrature { .. } => 3,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&raw)
                .map_err(|e| Error::config(format!("invalid config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let ctx = Ctx {
        out: cli.out.or_else(|| file.out.clone()).unwrap_or_else(|| ".".into()),
        seed: cli.seed.or(file.seed).unwrap_or(42),
        file,
    };
    if !ctx.out.is_dir() {
        return Err(Error::config(format!(
            "output directory {} does not exist",
            ctx.out.display()
        )));
    }
    if let Some(threads) = cli.threads.or(ctx.file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Optimize(args) => cmd_optimize(&ctx, &args),
        Command::PowerTable(args) => cmd_power_table(&ctx, &args),
        Command::Scan(args) => cmd_scan(&ctx, &args),
        Command::Populations(args) => cmd_populations(&ctx, &args),
        Command::Envelope(args) => cmd_envelope(&ctx, &args),
        Command::Trajectory(args) => cmd_trajectory(&ctx, &args),
        Command::Verify(args) => cmd_verify(&ctx, &args),
    }
}

fn cmd_optimize(ctx: &Ctx, args: &OptimizeArgs) -> Result<i32> {
    let params = ctx.params(&args.source)?;
    let n = ctx.pick(args.source.n, ctx.file.n, 10);
    let l = ctx.pick(args.source.l, ctx.file.l, 1);
    let opt = optimizer::optimize_pulse(n, l, &params)?;
    let mut out = ctx.create("optimize_result.json")?;
    serde_json::to_writer_pretty(&mut out, &opt)?;
    writeln!(out)?;
    let mut pulse_out = ctx.create("pulse.json")?;
    serde_json::to_writer_pretty(&mut pulse_out, &opt.pulse)?;
    writeln!(pulse_out)?;
    println!(
        "optimal pulse N={} l={}: ratio |A|/P = {:.6}, power overhead = {:.4}%",
        opt.n_max, opt.l, opt.ratio, opt.power_overhead_percent
    );
    println!(
        "residuals: constraint {:.2e}, eigenpair {:.2e}, phase {:.2e}",
        opt.residuals.constraint, opt.residuals.eigen, opt.residuals.phase
    );
    println!(
        "wrote {} and {}",
        ctx.path("optimize_result.json").display(),
        ctx.path("pulse.json").display()
    );
    Ok(0)
}

fn cmd_power_table(ctx: &Ctx, args: &PowerTableArgs) -> Result<i32> {
    let params = ctx.params(&args.source)?;
    let n_list = args
        .n_list
        .clone()
        .or_else(|| ctx.file.n_list.clone())
        .unwrap_or_else(|| (2..=100).collect());
    let l_list = args
        .l_list
        .clone()
        .or_else(|| ctx.file.l_list.clone())
        .unwrap_or_else(|| vec![1, 2]);
    let mut grid: Vec<(usize, usize)> = Vec::new();
    for &l in &l_list {
        for &n in &n_list {
            if n >= l + 1 {
                grid.push((l, n));
            }
        }
    }
    if grid.is_empty() {
        return Err(Error::config("power table grid is empty (all N < l + 1)"));
    }
    let rows: Result<Vec<(usize, usize, OptimalPulse)>> = grid
        .par_iter()
        .map(|&(l, n)| optimizer::optimize_pulse(n, l, &params).map(|o| (l, n, o)))
        .collect();
    let rows = rows?;
    let mut out = ctx.create("power_table.csv")?;
    writeln!(out, "N,l,ratio,overhead_percent")?;
    for (l, n, opt) in &rows {
        writeln!(
            out,
            "{n},{l},{:.16e},{:.16e}",
            opt.ratio, opt.power_overhead_percent
        )?;
    }
    println!(
        "power table: {} rows over l in {:?}, N in [{}, {}]",
        rows.len(),
        l_list,
        n_list.iter().min().unwrap(),
        n_list.iter().max().unwrap()
    );
    for (l, n, opt) in rows.iter().filter(|(_, n, _)| Some(n) == n_list.iter().max()) {
        println!(
            "  N={n} l={l}: overhead {:.4}%",
            opt.power_overhead_percent
        );
    }
    println!("wrote {}", ctx.path("power_table.csv").display());
    Ok(0)
}

fn cmd_scan(ctx: &Ctx, args: &ScanArgs) -> Result<i32> {
    let params = ctx.params(&args.source)?;
    let (pulse, source) = resolve_pulse(ctx, &args.source, &params)?;
    let nbar = ctx.pick(args.nbar, ctx.file.nbar, 0.0);
    let dt_min = ctx.pick(args.dt_min, ctx.file.dt_min, 1e-4);
    let dt_max = ctx.pick(args.dt_max, ctx.file.dt_max, 2e-1);
    let dt_count = ctx.pick(args.dt_count, ctx.file.dt_count, 81);
    if !(0.0 < dt_min && dt_min < dt_max) || dt_count < 2 {
        return Err(Error::config("need 0 < dt_min < dt_max and dt_count >= 2"));
    }
    let grid = log_grid(dt_min, dt_max, dt_count);
    let curve = gate::scan_infidelity(&pulse, &params, nbar, &grid)?;
    let mut out = ctx.create("scan.csv")?;
    gate::write_scan_csv(&curve, &mut out)?;

    let fit_min = ctx.pick(args.fit_min, ctx.file.fit_min, 1e-3);
    let fit_max = ctx.pick(args.fit_max, ctx.file.fit_max, 1e-2);
    let (slope, stderr) = gate::fit_loglog_slope(&curve, (fit_min, fit_max))?;
    let threshold = ctx.pick(
        args.threshold,
        ctx.file.threshold,
        gate::DEFAULT_STABILITY_THRESHOLD,
    );
    let (width, crossed) = gate::stability_region(&curve, threshold);
    println!("scan source: {}", describe(&source));
    println!(
        "slope of log(1-F) vs log(dt/T) on [{fit_min:.1e}, {fit_max:.1e}]: {slope:.4} +/- {stderr:.4}"
    );
    if crossed {
        println!("stability half-width at threshold {threshold:.4e}: {:.4}% of T", width * 100.0);
    } else {
        println!(
            "stability half-width: threshold {threshold:.4e} never exceeded inside the grid (width >= {:.4}% of T)",
            width * 100.0
        );
    }
    if args.svg || ctx.file.svg.unwrap_or(false) {
        let ms = FourierPulse::ms_baseline().rescale_to_target_phase(&params)?;
        let ms_curve = gate::scan_infidelity(&ms, &params, nbar, &grid)?;
        let label = describe(&source);
        let pos: Vec<(f64, f64)> = curve.iter().filter(|p| p.0 > 0.0).copied().collect();
        let ms_pos: Vec<(f64, f64)> = ms_curve.iter().filter(|p| p.0 > 0.0).copied().collect();
        let plot = Plot {
            title: "infidelity vs timing error",
            x_label: "dt / T",
            y_label: "1 - F",
            log_x: true,
            log_y: true,
            series: vec![
                Series { label: &label, points: &pos },
                Series { label: "MS baseline", points: &ms_pos },
            ],
        };
        plot.render(ctx.create("scan.svg")?)?;
        println!("wrote {}", ctx.path("scan.svg").display());
    }
    println!("wrote {}", ctx.path("scan.csv").display());
    Ok(0)
}

fn cmd_populations(ctx: &Ctx, args: &PopulationsArgs) -> Result<i32> {
    let params = ctx.params(&args.source)?;
    let (pulse, source) = resolve_pulse(ctx, &args.source, &params)?;
    let nbar = ctx.pick(args.nbar, ctx.file.nbar, 0.0);
    let t_count = ctx.pick(args.t_count, ctx.file.t_count, 61);
    let t_max_frac = ctx.pick(args.t_max_frac, ctx.file.t_max_frac, 1.2);
    if t_count < 3 {
        return Err(Error::config("need at least 3 time grid points"));
    }
    let motional = if nbar == 0.0 {
        MotionalState::Ground
    } else {
        MotionalState::Thermal(nbar)
    };
    let grid = uniform_grid(t_max_frac * params.gate_time, t_count);
    let pops = gate::populations_vs_time(&pulse, &params, motional, &grid)?;
    let mut out = ctx.create("populations.csv")?;
    gate::write_populations_csv(&pops, &params, &mut out)?;
    let flatness = gate::max_population_slope(&pops, &params, 0.05);
    println!("populations source: {} at nbar = {nbar}", describe(&source));
    println!("max |dP_gg/dt| within 5% of T: {:.4e} (units 1/T)", flatness * params.gate_time);
    if args.svg || ctx.file.svg.unwrap_or(false) {
        let gg: Vec<(f64, f64)> = pops.iter().map(|&(t, p, _)| (t / params.gate_time, p)).collect();
        let ee: Vec<(f64, f64)> = pops.iter().map(|&(t, _, p)| (t / params.gate_time, p)).collect();
        let plot = Plot {
            title: "spin populations",
            x_label: "t / T",
            y_label: "population",
            log_x: false,
            log_y: false,
            series: vec![
                Series { label: "P_gg", points: &gg },
                Series { label: "P_ee", points: &ee },
            ],
        };
        plot.render(ctx.create("populations.svg")?)?;
        println!("wrote {}", ctx.path("populations.svg").display());
    }
    println!("wrote {}", ctx.path("populations.csv").display());
    Ok(0)
}

fn cmd_envelope(ctx: &Ctx, args: &CurveArgs) -> Result<i32> {
    let params = ctx.params(&args.source)?;
    let (pulse, source) = resolve_pulse(ctx, &args.source, &params)?;
    let t_count = ctx.pick(args.t_count, ctx.file.t_count, 201);
    if t_count < 2 {
        return Err(Error::config("need at least 2 time grid points"));
    }
    let grid = uniform_grid(params.gate_time, t_count);
    let curve: Vec<(f64, f64)> = grid
        .iter()
        .map(|&t| (t / params.gate_time, pulse.envelope(&params, t)))
        .collect();
    let mut out = ctx.create("envelope.csv")?;
    writeln!(out, "t_over_T,omega")?;
    for &(t, w) in &curve {
        writeln!(out, "{t:.16e},{w:.16e}")?;
    }
    let peak = curve.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    println!("envelope source: {}", describe(&source));
    println!("Omega(0) = {:.6e}, peak |Omega| = {:.6e}", curve[0].1, peak);
    if args.svg || ctx.file.svg.unwrap_or(false) {
        let label = describe(&source);
        let plot = Plot {
            title: "pulse envelope",
            x_label: "t / T",
            y_label: "Omega(t)",
            log_x: false,
            log_y: false,
            series: vec![Series { label: &label, points: &curve }],
        };
        plot.render(ctx.create("envelope.svg")?)?;
        println!("wrote {}", ctx.path("envelope.svg").display());
    }
    println!("wrote {}", ctx.path("envelope.csv").display());
    Ok(0)
}

fn cmd_trajectory(ctx: &Ctx, args: &TrajectoryArgs) -> Result<i32> {
    let params = ctx.params(&args.source)?;
    let (pulse, source) = resolve_pulse(ctx, &args.source, &params)?;
    let t_count = ctx.pick(args.t_count, ctx.file.t_count, 401);
    let truncate = ctx.pick(args.truncate_frac, ctx.file.truncate_frac, 0.0);
    if !(0.0..1.0).contains(&truncate) {
        return Err(Error::config("truncate_frac must be in [0, 1)"));
    }
    if t_count < 2 {
        return Err(Error::config("need at least 2 time grid points"));
    }
    let grid = uniform_grid((1.0 - truncate) * params.gate_time, t_count);
    let points = trajectory::sample_trajectory(&pulse, &params, &grid)?;
    let mut out = ctx.create("trajectory.csv")?;
    trajectory::write_trajectory_csv(&points, &mut out)?;
    let end = points.last().unwrap();
    println!("trajectory source: {}", describe(&source));
    println!(
        "endpoint at t = {:.4} T: |(G, -F)| = {:.6e}, A = {:.6}",
        end.t / params.gate_time,
        (end.f * end.f + end.g * end.g).sqrt(),
        end.a
    );
    if args.svg || ctx.file.svg.unwrap_or(false) {
        let label = describe(&source);
        let curve: Vec<(f64, f64)> = points.iter().map(|p| (p.g, -p.f)).collect();
        let plot = Plot {
            title: "phase-space trajectory",
            x_label: "G",
            y_label: "-F",
            log_x: false,
            log_y: false,
            series: vec![Series { label: &label, points: &curve }],
        };
        plot.render(ctx.create("trajectory.svg")?)?;
        println!("wrote {}", ctx.path("trajectory.svg").display());
    }
    println!("wrote {}", ctx.path("trajectory.csv").display());
    Ok(0)
}

/// One named verification property.
struct Check {
    name: &'static str,
    outcome: Result<()>,
}

fn check(name: &'static str, outcome: Result<()>) -> Check {
    Check { name, outcome }
}

fn expect(cond: bool, msg: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::numerical(msg))
    }
}

fn cmd_verify(ctx: &Ctx, args: &VerifyArgs) -> Result<i32> {
    let params = ctx.params(&args.source)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let cutoff = args.cutoff.or(ctx.file.cutoff);
    let mut checks: Vec<Check> = Vec::new();

    // Closure check on an externally supplied pulse, if any.
    if let Some(path) = args.source.pulse.clone().or_else(|| ctx.file.pulse.clone()) {
        let outcome = (|| {
            let raw = std::fs::read_to_string(&path)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
            let pulse: FourierPulse = serde_json::from_str(&raw)
                .map_err(|e| Error::config(format!("invalid pulse JSON: {e}")))?;
            expect(
                pulse.is_closed(),
                "pulse has nonzero a1 or b1; trajectory closure fails".into(),
            )
        })();
        checks.push(check("pulse-file-closure", outcome));
    }

    // Closed forms vs direct quadrature of the defining integrals, on
    // random closed pulses and random times.
    checks.push(check("closed-form-vs-quadrature", {
        let mut worst = 0.0f64;
        let mut outcome = Ok(());
        for _ in 0..8 {
            let n_max = rng.gen_range(2..=8);
            let mut a = vec![0.0; n_max];
            let mut b = vec![0.0; n_max];
            for n in 1..n_max {
                a[n] = rng.gen_range(-1.0..1.0);
                b[n] = rng.gen_range(-1.0..1.0);
            }
            let pulse = FourierPulse::new(rng.gen_range(-1.0..1.0), a, b)?;
            let t = rng.gen_range(0.0..1.5) * params.gate_time;
            let f_quad =
                crate::quad::integrate(|s| trajectory::f_integrand(&pulse, &params, s), 0.0, t, 1e-12)?;
            let g_quad =
                crate::quad::integrate(|s| trajectory::g_integrand(&pulse, &params, s), 0.0, t, 1e-12)?;
            let df = (trajectory::f_closed(&pulse, &params, t) - f_quad).abs();
            let dg = (trajectory::g_closed(&pulse, &params, t) - g_quad).abs();
            worst = worst.max(df).max(dg);
        }
        if worst > 1e-9 {
            outcome = Err(Error::numerical(format!(
                "closed forms disagree with quadrature by {worst:e}"
            )));
        }
        outcome
    }));

    // Analytic fidelity vs the exact Fock propagator.
    checks.push(check("oracle-equivalence", {
        let mut outcome = Ok(());
        for _ in 0..4 {
            let f = rng.gen_range(-0.3..0.3);
            let g = rng.gen_range(-0.3..0.3);
            let a = FRAC_PI_2 + rng.gen_range(-0.3..0.3);
            let nbar = rng.gen_range(0.0..2.0);
            let analytic = gate::fidelity_analytic(f, g, a, nbar);
            let result = match cutoff {
                Some(c) => gate::reduced_spin_state(f, g, a, MotionalState::Thermal(nbar), c),
                None => gate::reduced_spin_state_adaptive(f, g, a, MotionalState::Thermal(nbar)),
            };
            match result {
                Err(e) => {
                    outcome = Err(e);
                    break;
                }
                Ok(out) => {
                    if (out.fidelity - analytic).abs() > 1e-7 {
                        outcome = Err(Error::numerical(format!(
                            "oracle fidelity {} vs analytic {analytic} at cutoff {}",
                            out.fidelity, out.cutoff
                        )));
                        break;
                    }
                }
            }
        }
        outcome
    }));

    // Optimized pulses null the promised derivative orders.
    checks.push(check("constraint-order", {
        let mut outcome = Ok(());
        for (n, l) in [(5usize, 1usize), (7, 2)] {
            let opt = optimizer::optimize_pulse(n, l, &params)?;
            let report = optimizer::verify_optimal_order(&opt, &params)?;
            if !report.pass {
                outcome = Err(Error::numerical(format!(
                    "N={n} l={l}: derivative residual {:e} above {:e}",
                    report.max_residual, report.tolerance
                )));
                break;
            }
        }
        outcome
    }));

    // G^(4)(T) = 0 follows from the imposed constraints without being one.
    checks.push(check("redundancy", {
        let mut outcome = Ok(());
        for _ in 0..4 {
            let n_max = rng.gen_range(4..=9);
            // random tail a3..aN, then solve a0 and a2 from the two
            // conditions sum a_n n^2 = 0 and a0/2 + sum a_n = 0.
            let mut a = vec![0.0; n_max];
            for n in 2..n_max {
                a[n] = rng.gen_range(-1.0..1.0);
            }
            let sum_n2: f64 = (3..=n_max).map(|n| a[n - 1] * (n * n) as f64).sum();
            a[1] = -sum_n2 / 4.0;
            let a0 = -2.0 * a.iter().sum::<f64>();
            let pulse = FourierPulse::new(a0, a, vec![0.0; n_max])?;
            let report = constraints::verify_redundancy(&pulse, &params);
            if !(report.precondition_ok && report.pass) {
                outcome = Err(Error::numerical(format!(
                    "G4 residual {:e} above {:e}",
                    report.g4_residual, report.tolerance
                )));
                break;
            }
        }
        outcome
    }));

    // The optimum must not depend on which null-space basis is used.
    checks.push(check("basis-invariance", {
        let mut outcome = Ok(());
        for (n, l) in [(6usize, 1usize), (8, 2)] {
            let forms = optimizer::build_forms(n)?;
            let system = constraints::ConstraintSystem::build(l, n, false)?;
            let ortho = optimizer::reduce(&forms, &system.nullspace_basis()?, l, n)?;
            let elim = if l == 1 {
                optimizer::elimination_basis_1lc(n)
            } else {
                optimizer::elimination_basis_2lc(n)
            };
            let elim = optimizer::reduce(&forms, &elim, l, n)?;
            let s1 = optimizer::solve_rayleigh(&ortho)?;
            let s2 = optimizer::solve_rayleigh(&elim)?;
            let de = (s1.eigenvalue - s2.eigenvalue).abs();
            let dv = (&s1.direction - &s2.direction).norm();
            if de > 1e-10 || dv > 1e-8 {
                outcome = Err(Error::numerical(format!(
                    "N={n} l={l}: eigenvalue gap {de:e}, direction gap {dv:e}"
                )));
                break;
            }
        }
        outcome
    }));

    // slope(MS) ~ 2 < slope(1 LC) ~ 6 < slope(2 LC) ~ 10.
    checks.push(check("slope-hierarchy", {
        let grid = log_grid(1e-3, 1e-2, 17);
        let window = (1e-3, 1e-2);
        let slope_of = |pulse: &FourierPulse| -> Result<f64> {
            let curve = gate::scan_infidelity(pulse, &params, 0.0, &grid)?;
            Ok(gate::fit_loglog_slope(&curve, window)?.0)
        };
        let ms = slope_of(&FourierPulse::ms_baseline().rescale_to_target_phase(&params)?)?;
        let lc1 = slope_of(&optimizer::optimize_pulse(5, 1, &params)?.pulse)?;
        let lc2 = slope_of(&optimizer::optimize_pulse(5, 2, &params)?.pulse)?;
        expect(
            (ms - 2.0).abs() < 0.2 && (lc1 - 6.0).abs() < 0.3 && (lc2 - 10.0).abs() < 0.5,
            format!("slopes MS {ms:.3}, 1 LC {lc1:.3}, 2 LC {lc2:.3}"),
        )
    }));

    let mut failed = 0;
    for c in &checks {
        match &c.outcome {
            Ok(()) => println!("PASS {}", c.name),
            Err(e) => {
                failed += 1;
                println!("FAIL {}: {e}", c.name);
            }
        }
    }
    println!(
        "verify: {} of {} properties passed (seed {})",
        checks.len() - failed,
        checks.len(),
        ctx.seed
    );
    Ok(if failed == 0 { 0 } else { 1 })
}
