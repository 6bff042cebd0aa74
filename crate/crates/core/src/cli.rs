//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::boundary_layer::{build_profile, CnumKind};
use crate::config::{self, ConfigFile, InitialCondition};
use crate::error::{Error, Result};
use crate::output::{self, Field};
use crate::scheme::SchemeSpec;
use crate::simulator::{self, Grid, RunOptions, SimulateOptions, StoppingRule, DEFAULT_QUAD_ORDER};
use crate::symbol::{self, AnalysisOptions, MultistepPolynomials, StabilityVerdict, SymbolAnalysis};

pub const OUT_DIR_ENV: &str = "BL_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "numbl",
    version,
    about = "Boundary layers of multistep finite difference schemes for outgoing transport",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symbol diagnostics; writes circle_scan.csv, stability_curve.csv, disk_roots.csv
    Analyze(AnalyzeArgs),
    /// Boundary-layer profile and corrector; writes profile.csv
    Profile(ProfileArgs),
    /// Run the boundary value problem; writes solution_t<t>.csv and errors.csv
    Simulate(SimulateArgs),
    /// Grid refinement study; writes convergence.csv
    Converge(ConvergeArgs),
    /// Check the structural assumptions; exit status 0 iff all pass
    Assumptions(SchemeArgs),
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    /// Flat TOML file with any of the run keys (flags take precedence)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Builtin scheme name or path of a scheme file
    #[arg(long, value_name = "NAME|FILE")]
    pub scheme: Option<String>,
    /// Transport velocity
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// CFL ratio dt/dx
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Output directory (else $BL_OUT_DIR, else the config's out_dir, else .)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Samples of the unit circle scan
    #[arg(long)]
    pub circle_samples: Option<usize>,
    /// Samples of the frequency sweep for the stability check
    #[arg(long)]
    pub eta_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Last index written to profile.csv [default: 50]
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Final time [default: 0.5]
    #[arg(long, allow_negative_numbers = true)]
    pub tfinal: Option<f64>,
    /// gaussian_bump, constant, linear, sine, or a file of `x,u` samples
    #[arg(long, value_name = "NAME|FILE")]
    pub initial: Option<String>,
    /// How a time maps to a level: floor or ceil [default: floor]
    #[arg(long)]
    pub stopping: Option<String>,
    /// Gauss-Legendre points per cell [default: 6]
    #[arg(long)]
    pub quad_order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of cells on [0, 1] [default: 216]
    #[arg(long)]
    pub cells: Option<usize>,
    /// Extra output times, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub snapshots: Option<Vec<f64>>,
    /// Run even when the assumptions fail
    #[arg(long)]
    pub force_unstable: bool,
    /// Also report weighted space-time norms with rate dt^mu
    #[arg(long)]
    pub weighted_mu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Exponent range M..M' giving N = 2^M [default: 5..10]
    #[arg(long)]
    pub levels: Option<String>,
}

/// Everything a subcommand needs after the flags and config are merged.
struct Context {
    spec: SchemeSpec,
    file: ConfigFile,
    out_dir: PathBuf,
}

impl Context {
    fn new(args: &SchemeArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let spec = config::resolve_scheme(args.scheme.as_deref(), args.a, args.lambda, &file)?;
        let out_dir = args
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Context { spec, file, out_dir })
    }

    fn analysis_options(&self) -> AnalysisOptions {
        let mut o = AnalysisOptions::default();
        if let Some(n) = self.file.circle_samples {
            o.circle_samples = n;
        }
        if let Some(n) = self.file.eta_samples {
            o.eta_samples = n;
        }
        if let Some(t) = self.file.consistency_tol {
            o.consistency_tol = t;
        }
        o
    }

    fn run_options(&self, args: &RunArgs) -> Result<(RunOptions, f64, InitialCondition)> {
        let stopping = match args.stopping.as_deref().or(self.file.stopping.as_deref()) {
            Some(s) => config::parse_stopping(s)?,
            None => StoppingRule::Floor,
        };
        let quad_order = args.quad_order.or(self.file.quad_order).unwrap_or(DEFAULT_QUAD_ORDER);
        if quad_order == 0 {
            return Err(Error::Config("quad_order must be positive".into()));
        }
        let t_final = args.tfinal.or(self.file.tfinal).unwrap_or(0.5);
        if !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(Error::Config(format!(
                "tfinal must be a nonnegative number, got {t_final}"
            )));
        }
        let initial = args
            .initial
            .as_deref()
            .or(self.file.initial.as_deref())
            .unwrap_or("gaussian_bump");
        let u0 = InitialCondition::resolve(initial)?;
        let opts = RunOptions {
            stopping,
            quad_order,
            ..RunOptions::default()
        };
        Ok((opts, t_final, u0))
    }
}

/// Parses `argv` (program name first) and runs the subcommand; returns the
/// process exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_to(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`dispatch`] with explicit report and diagnostic sinks.
pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Usage and configuration problems map to 2, numerical failures to 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::InvalidScheme(_)
        | Error::UnknownScheme { .. }
        | Error::InvalidParameter(_)
        | Error::LengthMismatch { .. } => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Profile(a) => cmd_profile(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Converge(a) => cmd_converge(a, out),
        Command::Assumptions(a) => cmd_assumptions(a, out),
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn describe_scheme(spec: &SchemeSpec, out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "scheme: a = {}, lambda = {}, r = {}, p = {}, k = {}",
        spec.a_velocity(),
        spec.cfl_lambda(),
        spec.r_left(),
        spec.p_right(),
        spec.k_levels()
    )?;
    Ok(())
}

fn write_assumptions(analysis: &SymbolAnalysis, out: &mut dyn Write) -> Result<bool> {
    let status = analysis.assumptions();
    let c = &analysis.consistency;
    let residuals: Vec<String> = c.residuals.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
    writeln!(out, "space_consistency: {}", pass(status.space_consistency))?;
    writeln!(out, "time_consistency: {}", pass(status.time_consistency))?;
    writeln!(out, "  residuals: {}", residuals.join(" "))?;
    writeln!(
        out,
        "cauchy_stability: {} ({}, max root modulus {:.12} at eta = {:.6})",
        pass(status.cauchy_stability == StabilityVerdict::Stable),
        status.cauchy_stability.as_str(),
        analysis.cauchy.max_modulus,
        analysis.cauchy.worst_eta
    )?;
    let roots: Vec<String> = analysis
        .circle
        .roots
        .iter()
        .map(|r| format!("{:.9}{}", r.theta, if r.resolved { "" } else { "?" }))
        .collect();
    writeln!(
        out,
        "unique_circle_root: {} (roots at theta = {})",
        pass(status.unique_circle_root),
        roots.join(", ")
    )?;
    Ok(status.all_pass())
}

fn cmd_assumptions(args: &SchemeArgs, out: &mut dyn Write) -> Result<i32> {
    let ctx = Context::new(args)?;
    describe_scheme(&ctx.spec, out)?;
    let analysis = symbol::analyze(&ctx.spec, &ctx.analysis_options())?;
    let ok = write_assumptions(&analysis, out)?;
    writeln!(out, "overall: {}", pass(ok))?;
    Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
}

fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let ctx = Context::new(&args.scheme)?;
    let mut opts = ctx.analysis_options();
    if let Some(n) = args.circle_samples {
        opts.circle_samples = n;
    }
    if let Some(n) = args.eta_samples {
        opts.eta_samples = n;
    }
    let spec = &ctx.spec;
    describe_scheme(spec, out)?;
    let analysis = symbol::analyze(spec, &opts)?;
    write_assumptions(&analysis, out)?;

    match &analysis.disk_error {
        None => {
            for d in &analysis.disk_roots {
                writeln!(
                    out,
                    "disk root: {:.12} {:+.12}i (multiplicity {})",
                    d.z.re, d.z.im, d.multiplicity
                )?;
            }
        }
        Some(e) => writeln!(out, "disk roots: {e}")?,
    }
    let show = |v: Option<i64>| v.map_or("n/a".to_string(), |n| n.to_string());
    writeln!(
        out,
        "disk root count: polynomial {}, contour {}, predicted {}",
        show(analysis.disk_count_poly.map(|n| n as i64)),
        show(analysis.disk_count_contour),
        analysis.predicted_disk_count
    )?;
    if let Some(e) = &analysis.contour_error {
        writeln!(out, "  contour: {e}")?;
    }
    let mp = MultistepPolynomials::from_scheme(spec);
    let mus = [0.01, 0.1, 1.0];
    match symbol::stability_region_probe(&mp, &mus) {
        Ok(flags) => {
            for (mu, outside) in mus.iter().zip(flags) {
                writeln!(
                    out,
                    "real root > 1 of rho - mu sigma at mu = {mu}: {}",
                    if outside { "yes" } else { "no" }
                )?;
            }
        }
        Err(e) => writeln!(out, "stability region probe: {e}")?,
    }

    let dir = &ctx.out_dir;
    let circle: Vec<Vec<Field>> = symbol::circle_samples(spec, opts.circle_samples)
        .into_iter()
        .map(|r| r.iter().map(|&v| v.into()).collect())
        .collect();
    output::write_csv(dir, "circle_scan.csv", &["theta", "abs_a_sq", "re_a", "im_a"], &circle)?;
    let curve: Vec<Vec<Field>> = symbol::stability_curve(spec, opts.eta_samples)
        .into_iter()
        .map(|r| r.iter().map(|&v| v.into()).collect())
        .collect();
    output::write_csv(
        dir,
        "stability_curve.csv",
        &["eta", "re_neg_lambda_a", "im_neg_lambda_a"],
        &curve,
    )?;
    let disk: Vec<Vec<Field>> = analysis
        .disk_roots
        .iter()
        .map(|d| vec![d.z.re.into(), d.z.im.into(), d.multiplicity.into()])
        .collect();
    output::write_csv(dir, "disk_roots.csv", &["re_z", "im_z", "multiplicity"], &disk)?;
    writeln!(
        out,
        "wrote circle_scan.csv, stability_curve.csv, disk_roots.csv to {}",
        dir.display()
    )?;
    Ok(EXIT_OK)
}

fn cmd_profile(args: &ProfileArgs, out: &mut dyn Write) -> Result<i32> {
    let ctx = Context::new(&args.scheme)?;
    let horizon = args.horizon.or(ctx.file.horizon).unwrap_or(50);
    let spec = &ctx.spec;
    describe_scheme(spec, out)?;
    let analysis = symbol::analyze(spec, &ctx.analysis_options())?;
    let profile = build_profile(spec, &analysis)?;
    let kind = match profile.c_num_kind {
        CnumKind::Trivial => "zero trace only (incoming velocity)",
        CnumKind::FullLine => "any trace (outgoing velocity)",
    };
    writeln!(out, "admissible boundary traces: {kind}")?;
    for r in &profile.roots {
        writeln!(
            out,
            "root: {:.12} {:+.12}i (multiplicity {})",
            r.z.re, r.z.im, r.multiplicity
        )?;
    }
    writeln!(out, "decay rate: {:.12}", profile.decay_rate)?;
    let rows: Vec<Vec<Field>> = profile
        .table(horizon)
        .into_iter()
        .map(|(j, w, wt)| vec![j.into(), w.into(), wt.into()])
        .collect();
    let path = output::write_csv(&ctx.out_dir, "profile.csv", &["j", "w", "w_tilde"], &rows)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(EXIT_OK)
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let ctx = Context::new(&args.scheme)?;
    let (mut run, t_final, u0) = ctx.run_options(&args.run)?;
    run.force = args.force_unstable || ctx.file.force_unstable.unwrap_or(false);
    run.snapshot_times = args
        .snapshots
        .clone()
        .or_else(|| ctx.file.snapshots.clone())
        .unwrap_or_default();
    if let Some(t) = run.snapshot_times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::Config(format!("snapshot times must be nonnegative, got {t}")));
    }
    let cells = args.cells.or(ctx.file.cells).unwrap_or(216);
    let x_max = ctx.file.x_max.unwrap_or(1.0);
    let spec = &ctx.spec;
    let grid = Grid::new(spec, cells, x_max)?;
    let opts = SimulateOptions {
        run,
        weighted_mu: args.weighted_mu.or(ctx.file.weighted_mu),
    };
    describe_scheme(spec, out)?;
    let f = |x: f64| u0.eval(x);
    let sim = simulator::simulate(spec, &grid, &f, t_final, &opts)?;

    let dir = &ctx.out_dir;
    let mut err_rows = Vec::new();
    for ((snap, errs), (int, app)) in sim
        .solution
        .snapshots
        .iter()
        .zip(&sim.report.snapshots)
        .zip(&sim.references)
    {
        let rows: Vec<Vec<Field>> = (0..grid.n_cells)
            .map(|j| {
                let app_j = app.as_ref().map_or(f64::NAN, |a| a[j]);
                vec![grid.x(j).into(), snap.u[j].into(), int[j].into(), app_j.into()]
            })
            .collect();
        output::write_csv(
            dir,
            &output::snapshot_name(snap.requested_t),
            &["x", "u", "u_int", "u_app"],
            &rows,
        )?;
        let corrected = errs.corrected_l2.unwrap_or(f64::NAN);
        err_rows.push(vec![errs.t.into(), errs.raw_l2.into(), corrected.into()]);
        writeln!(
            out,
            "t = {:.6} (n = {}): raw l2 = {:.6e}, corrected l2 = {:.6e}",
            errs.t, errs.n, errs.raw_l2, corrected
        )?;
    }
    output::write_csv(dir, "errors.csv", &["t", "raw_l2", "corrected_l2"], &err_rows)?;
    writeln!(
        out,
        "sup_n ||u^n|| = {:.6e} (||u^0|| = {:.6e})",
        sim.report.semigroup_sup, sim.report.initial_norm
    )?;
    if let Some(w) = &sim.report.weighted {
        writeln!(
            out,
            "weighted error sums (gamma = {:.6e}): interior {:.6e}, boundary {:.6e}",
            w.gamma, w.interior_sum, w.boundary_sum
        )?;
    }
    if let Some((i, b)) = sim.report.residual_sums {
        writeln!(
            out,
            "weighted residual sums of u_app: interior {i:.6e}, boundary {b:.6e}"
        )?;
    }
    writeln!(
        out,
        "wrote {} snapshot file(s) and errors.csv to {}",
        sim.solution.snapshots.len(),
        dir.display()
    )?;
    Ok(EXIT_OK)
}

fn cmd_converge(args: &ConvergeArgs, out: &mut dyn Write) -> Result<i32> {
    let ctx = Context::new(&args.scheme)?;
    let (run, t_final, u0) = ctx.run_options(&args.run)?;
    let levels = config::parse_levels(args.levels.as_deref().or(ctx.file.levels.as_deref()).unwrap_or("5..10"))?;
    let spec = &ctx.spec;
    describe_scheme(spec, out)?;
    let f = |x: f64| u0.eval(x);
    let study = simulator::convergence_study(spec, &f, t_final, &levels, &run)?;
    let nan = f64::NAN;
    let (raw_slope, corr_slope) = (study.raw_slope.unwrap_or(nan), study.corrected_slope.unwrap_or(nan));
    let rows: Vec<Vec<Field>> = study
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n_cells.into(),
                r.dx.into(),
                r.raw.into(),
                r.corrected.unwrap_or(nan).into(),
                raw_slope.into(),
                corr_slope.into(),
            ]
        })
        .collect();
    let path = output::write_csv(
        &ctx.out_dir,
        "convergence.csv",
        &["n_cells", "dx", "raw", "corrected", "raw_slope", "corrected_slope"],
        &rows,
    )?;
    for r in &study.rows {
        writeln!(
            out,
            "N = {:5}: raw {:.6e}, corrected {:.6e}",
            r.n_cells,
            r.raw,
            r.corrected.unwrap_or(nan)
        )?;
    }
    writeln!(out, "fitted order: raw {raw_slope:.4}, corrected {corr_slope:.4}")?;
    let show = |s: Option<f64>| s.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    writeln!(
        out,
        "fitted order without errors below {:e}: raw {}, corrected {}",
        simulator::ERROR_FLOOR,
        show(study.raw_slope_trimmed),
        show(study.corrected_slope_trimmed)
    )?;
    writeln!(out, "wrote {}", path.display())?;
    if let Some((n, e)) = &study.failure {
        writeln!(out, "incomplete: level N = {n} failed: {e}")?;
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}
