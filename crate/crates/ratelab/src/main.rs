//! Command-line front end: dataset generation, fitting, prediction, the
//! prox and approximation check suites, the error-decomposition report and
//! the learning-rate sweep.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 numerical or
//! solver failure, 3 a check suite ran and failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lqreg::io;
use lqreg::penalty::prox_oracle_suite;
use lqreg::sweep::ReportFormat;
use lqreg::theory::{approx_decay_report, decompose_check, DecomposeContext};
use lqreg::{
    gram_matrix, make_target, sample_dataset, schedule, solve, CoefficientModel, Dataset, Error, Init,
    KernelParams, Method, NoiseSpec, PenaltySpec, ScheduleVariant, SolverConfig, SweepConfig, TargetFamily,
    TargetSpec,
};

#[derive(Parser)]
#[command(name = "ratelab", version, about = "l^q kernel regularization laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a dataset CSV with explicit width and weight.
    Fit(FitArgs),
    /// Evaluate a saved model on inputs from a CSV.
    Predict(PredictArgs),
    /// Generate a synthetic dataset CSV plus metadata sidecar.
    Gen(GenArgs),
    /// Run the randomized prox-vs-grid oracle suite; nonzero exit on failure.
    ProxCheck(ProxCheckArgs),
    /// Smoothing-error decay report for the cosine probe target.
    ApproxCheck(ApproxCheckArgs),
    /// Error-decomposition report for a fit under the schedules.
    Decompose(DecomposeArgs),
    /// Run a (q, m, trial) learning-rate sweep from a JSON config.
    RateSweep(RateSweepArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value = "auto")]
    solver: String,
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    /// Output bound M; defaults to the metadata sidecar value.
    #[arg(long = "M")]
    m_bound: Option<f64>,
    /// Metadata sidecar path (defaults to <data>.meta.json).
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Accept inputs outside [0,1]^d.
    #[arg(long)]
    allow_out_of_domain: bool,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    /// zeros | rls-warm-start
    #[arg(long, default_value = "zeros")]
    init: String,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// cosine | kink | gauss-bump
    #[arg(long)]
    family: String,
    #[arg(long)]
    m: usize,
    #[arg(long = "M", default_value_t = 1.0)]
    m_bound: f64,
    /// Uniform noise halfwidth.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 2.0)]
    nominal_r: f64,
    #[arg(long, default_value_t = 0.8)]
    amplitude: f64,
    #[arg(long, default_value_t = 1)]
    frequency: u32,
    #[arg(long, default_value_t = 0.5)]
    center: f64,
    #[arg(long, default_value_t = 1.5)]
    exponent: f64,
    #[arg(long, default_value_t = 0.1)]
    width: f64,
}

#[derive(Args)]
struct ProxCheckArgs {
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ApproxCheckArgs {
    #[arg(long)]
    r: usize,
    /// Comma-separated widths, e.g. 0.2,0.1,0.05
    #[arg(long, value_delimiter = ',')]
    sigma_list: Vec<f64>,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    q: f64,
    /// theorem | proof
    #[arg(long, default_value = "proof")]
    schedule: String,
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    solver: String,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RateSweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// json | csv | plotdata
    #[arg(long, default_value = "json")]
    format: String,
    /// Overrides the config's worker count.
    #[arg(long)]
    parallelism: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Numerical(_) | Error::Solver(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> lqreg::Result<u8> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Gen(args) => cmd_gen(args),
        Command::ProxCheck(args) => cmd_prox_check(args),
        Command::ApproxCheck(args) => cmd_approx_check(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::RateSweep(args) => cmd_rate_sweep(args),
    }
}

fn parse_method(name: &str) -> lqreg::Result<Method> {
    match name {
        "closed-form-q2" => Ok(Method::ClosedFormQ2),
        "prox-grad" => Ok(Method::ProxGrad),
        "irls" => Ok(Method::Irls),
        "auto" => Ok(Method::Auto),
        other => Err(Error::Config(format!("unknown solver '{other}'"))),
    }
}

fn parse_variant(name: &str) -> lqreg::Result<ScheduleVariant> {
    match name {
        "theorem" | "theorem-statement" => Ok(ScheduleVariant::TheoremStatement),
        "proof" | "proof-section" => Ok(ScheduleVariant::ProofSection),
        other => Err(Error::Config(format!("unknown schedule variant '{other}'"))),
    }
}

fn load_dataset(
    data: &Path,
    meta: Option<&Path>,
    m_bound_flag: Option<f64>,
    allow_out_of_domain: bool,
) -> lqreg::Result<(Dataset, Option<io::DatasetMetadata>)> {
    let csv = io::read_csv(data)?;
    let meta_path = meta.map(Path::to_path_buf).unwrap_or_else(|| io::meta_path_for(data));
    let metadata = if meta_path.exists() { Some(io::read_metadata(&meta_path)?) } else { None };
    let m_bound = m_bound_flag
        .or_else(|| metadata.as_ref().map(|m| m.m_bound))
        .ok_or_else(|| Error::Config("output bound M not given and no metadata sidecar found".into()))?;
    let dataset = io::dataset_from_csv(csv, m_bound, !allow_out_of_domain)?;
    Ok((dataset, metadata))
}

fn cmd_fit(args: FitArgs) -> lqreg::Result<u8> {
    let (data, _) = load_dataset(&args.data, args.meta.as_deref(), args.m_bound, args.allow_out_of_domain)?;
    let spec = PenaltySpec::new(args.q, args.lambda)?;
    let params = KernelParams::new(args.sigma)?;
    let init = match args.init.as_str() {
        "zeros" => Init::Zeros,
        "rls-warm-start" => Init::RlsWarmStart,
        other => return Err(Error::Config(format!("unknown init '{other}'"))),
    };
    let cfg = SolverConfig {
        method: parse_method(&args.solver)?,
        max_iters: args.max_iters,
        tol: args.tol,
        init,
        ..Default::default()
    };
    let gram = gram_matrix(&data.x, &params)?;
    let y = data.y_vector();
    let fit = solve(&gram, &y, &spec, &cfg)?;
    let model = io::ModelFile::from_fit(params, data.x.clone(), &fit, args.q, args.lambda, cfg);
    io::write_model(&model, &args.out)?;
    println!(
        "fit: m={} objective={:.6e} iterations={} converged={} -> {}",
        data.len(),
        fit.objective_trace.last().copied().unwrap_or(f64::NAN),
        fit.iterations,
        fit.converged,
        args.out.display()
    );
    Ok(0)
}

fn cmd_predict(args: PredictArgs) -> lqreg::Result<u8> {
    let model_file = io::read_model(&args.model)?;
    let model = model_file.to_model()?;
    let csv = io::read_csv(&args.data)?;
    let mut preds = Vec::with_capacity(csv.x.len());
    for x in &csv.x {
        preds.push(model.predict(x)?);
    }
    io::write_predictions_csv(&csv.x, &preds, &args.out)?;
    println!("predict: {} rows -> {}", preds.len(), args.out.display());
    Ok(0)
}

fn cmd_gen(args: GenArgs) -> lqreg::Result<u8> {
    let family = match args.family.as_str() {
        "cosine" => TargetFamily::Cosine { amplitude: args.amplitude, frequency: args.frequency },
        "kink" => TargetFamily::Kink { center: args.center, exponent: args.exponent },
        "gauss-bump" => TargetFamily::GaussBump { center: args.center, width: args.width },
        other => return Err(Error::Config(format!("unknown family '{other}'"))),
    };
    let spec = TargetSpec { family, d: args.d, m_bound: args.m_bound, nominal_r: args.nominal_r };
    let target = make_target(&spec)?;
    let noise = NoiseSpec { halfwidth: args.noise };
    let data = sample_dataset(&target, args.m, &noise, args.m_bound, args.seed)?;
    io::write_dataset_csv(&data, &args.out)?;
    let meta = io::DatasetMetadata {
        schema_version: io::DATA_SCHEMA_VERSION,
        m: args.m,
        d: args.d,
        m_bound: args.m_bound,
        noise,
        seed: args.seed,
        target: Some(spec),
    };
    let meta_path = io::meta_path_for(&args.out);
    io::write_metadata(&meta, &meta_path)?;
    println!("gen: {} rows -> {} (+ {})", args.m, args.out.display(), meta_path.display());
    Ok(0)
}

fn cmd_prox_check(args: ProxCheckArgs) -> lqreg::Result<u8> {
    let report = prox_oracle_suite(args.cases, args.seed);
    let mut s = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    s.push('\n');
    print!("{s}");
    Ok(if report.passed() { 0 } else { 3 })
}

fn cmd_approx_check(args: ApproxCheckArgs) -> lqreg::Result<u8> {
    let report = approx_decay_report(args.r, &args.sigma_list, args.grid)?;
    let mut s = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    s.push('\n');
    match &args.out {
        Some(p) => std::fs::write(p, s)?,
        None => print!("{s}"),
    }
    Ok(0)
}

fn cmd_decompose(args: DecomposeArgs) -> lqreg::Result<u8> {
    let (data, metadata) = load_dataset(&args.data, args.meta.as_deref(), None, false)?;
    let meta = metadata.ok_or_else(|| {
        Error::Config("decompose needs the metadata sidecar with the synthetic target description".into())
    })?;
    let target_spec = meta
        .target
        .ok_or_else(|| Error::Config("metadata carries no target; decompose needs a known target".into()))?;
    if data.d != 1 {
        return Err(Error::Config("decompose supports d = 1 data".into()));
    }
    let variant = parse_variant(&args.schedule)?;
    let m = data.len();
    let sched = schedule(m, target_spec.nominal_r, data.d, args.q, data.m_bound, variant)?;
    let spec = PenaltySpec::new(args.q, sched.lambda)?;
    let params = KernelParams::new(sched.sigma)?;
    let cfg = SolverConfig {
        method: parse_method(&args.solver)?,
        max_iters: args.max_iters,
        tol: args.tol,
        ..Default::default()
    };
    let gram = gram_matrix(&data.x, &params)?;
    let y = data.y_vector();
    let fit = solve(&gram, &y, &spec, &cfg)?;
    let model = CoefficientModel::new(params, data.x.clone(), fit.coeffs.iter().cloned().collect())?;
    let target = make_target(&target_spec)?;
    let target_1d = target.as_1d();
    let ctx = DecomposeContext {
        target: &target_1d,
        r: target_spec.nominal_r.ceil().max(1.0) as usize,
        noise_halfwidth: meta.noise.halfwidth,
    };
    let report = decompose_check(&data, &model, &spec, &ctx)?;

    #[derive(serde::Serialize)]
    struct DecomposeOutput {
        schema_version: u32,
        m: usize,
        q: f64,
        sigma: f64,
        lambda: f64,
        schedule_variant: ScheduleVariant,
        solver_iterations: usize,
        solver_converged: bool,
        #[serde(flatten)]
        report: lqreg::DecompositionReport,
    }
    let out = DecomposeOutput {
        schema_version: 1,
        m,
        q: args.q,
        sigma: sched.sigma,
        lambda: sched.lambda,
        schedule_variant: variant,
        solver_iterations: fit.iterations,
        solver_converged: fit.converged,
        report,
    };
    let mut s = serde_json::to_string_pretty(&out).map_err(Error::from)?;
    s.push('\n');
    match &args.out {
        Some(p) => std::fs::write(p, s)?,
        None => print!("{s}"),
    }
    Ok(0)
}

fn cmd_rate_sweep(args: RateSweepArgs) -> lqreg::Result<u8> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config: SweepConfig = serde_json::from_str(&text).map_err(Error::from)?;
    if let Some(p) = args.parallelism {
        config.parallelism = p;
    }
    let format: ReportFormat = args.format.parse()?;
    let report = lqreg::run_sweep(&config)?;
    lqreg::emit_report(&report, &args.out, format)?;
    let slopes: Vec<String> = report
        .per_q
        .iter()
        .map(|s| match s.slope {
            Some(v) => format!("q={}: slope {:.3}", s.q, v),
            None => format!("q={}: no slope", s.q),
        })
        .collect();
    println!(
        "rate-sweep: {} cells, reference slope {:.3} | {} -> {}",
        report.cells.len(),
        report.reference_slope,
        slopes.join(", "),
        args.out.display()
    );
    Ok(0)
}
