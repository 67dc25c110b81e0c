//! Command-line runner: descent runs, bisection demos, the detection
//! probability table and the deterministic-vs-random sampling comparison.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 on
//! algorithmic failures. File outputs are byte-identical across repeated
//! runs with the same configuration and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gradsamp::bisection::{
    bisect_improved, bisect_legacy, c_min, default_c_tilde, BisectionCaps, BisectionOutcome,
    BisectionRecord,
};
use gradsamp::core::{norm, DescentParams, DescentTrace, FunctionOracle};
use gradsamp::direction::{descent_direction, DirectionError};
use gradsamp::geometry::{detection_probability, display_probability, table1};
use gradsamp::minnorm::{steepest_direction, DEFAULT_TOL};
use gradsamp::optimizer::{
    gs_direction, minimize_deterministic, minimize_random_gs, sample_ball, GSParams, OptimizerError,
};
use gradsamp::testfns::by_name;

#[derive(Parser)]
#[command(
    name = "gradsamp",
    version,
    about = "Nonsmooth minimization via deterministic gradient sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a bundled function and write the iteration trace.
    Solve(SolveArgs),
    /// Run one bisection probe and log its iterations.
    BisectDemo(BisectDemoArgs),
    /// Print the analytic detection-probability table, optionally with
    /// Monte Carlo estimates.
    Table1(Table1Args),
    /// Compare deterministic subgradient counts against random-sampling
    /// detection rates on the cone function.
    GsCompare(GsCompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Det,
    Gs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProbeAlgo {
    Legacy,
    Improved,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Comma-separated vector argument.
#[derive(Clone, Debug)]
struct VectorArg(Vec<f64>);

impl std::str::FromStr for VectorArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
            .collect::<Result<Vec<f64>, String>>()
            .map(VectorArg)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Function name: counterexample, cone:<n>, abs, maxnorm:<n>, maxquad.
    #[arg(long = "fn")]
    function: String,
    /// Start point, comma-separated.
    #[arg(long)]
    x0: VectorArg,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps_min: f64,
    #[arg(long, default_value_t = 0.5)]
    shrink: f64,
    #[arg(long, default_value_t = 1000)]
    max_outer: usize,
    /// det: deterministic enrichment; gs: random-sampling baseline.
    #[arg(long, value_enum, default_value_t = Algo::Det)]
    algo: Algo,
    /// Seed for the gs baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per iteration for the gs baseline (default 2n).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct BisectDemoArgs {
    #[arg(long, value_enum, default_value_t = ProbeAlgo::Improved)]
    algo: ProbeAlgo,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    /// Steering parameter for the improved probe; default is the midpoint
    /// of (c_min, c).
    #[arg(long)]
    ctilde: Option<f64>,
    #[arg(long = "fn", default_value = "counterexample")]
    function: String,
    #[arg(long, default_value = "0")]
    x0: VectorArg,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct Table1Args {
    /// Monte Carlo trials per dimension; 0 disables estimation.
    #[arg(long, default_value_t = 0)]
    mc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dimensions for the Monte Carlo columns.
    #[arg(long = "n", value_delimiter = ',', default_values_t = vec![2usize, 3, 5, 10])]
    dims: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct GsCompareArgs {
    #[arg(long, value_delimiter = ',', default_values_t = (2usize..=10).collect::<Vec<_>>())]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

enum Failure {
    Usage(String),
    Algorithm(String),
}

impl From<OptimizerError> for Failure {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::InvalidParams(p)
            | OptimizerError::Direction(DirectionError::InvalidParams(p)) => {
                Failure::Usage(p.to_string())
            }
            other => Failure::Algorithm(other.to_string()),
        }
    }
}

impl From<DirectionError> for Failure {
    fn from(e: DirectionError) -> Self {
        match e {
            DirectionError::InvalidParams(p) => Failure::Usage(p.to_string()),
            other => Failure::Algorithm(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::BisectDemo(args) => cmd_bisect_demo(args),
        Command::Table1(args) => cmd_table1(args),
        Command::GsCompare(args) => cmd_gs_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Algorithm(msg)) => {
            eprintln!("algorithm failure: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Emits rows either as CSV with a header or as a JSON array of objects.
fn emit(
    out: Option<&PathBuf>,
    format: Format,
    header: &[&str],
    rows: &[Vec<serde_json::Value>],
) -> Result<(), Failure> {
    let mut text = String::new();
    match format {
        Format::Csv => {
            let _ = writeln!(text, "{}", header.join(","));
            for row in rows {
                let cells: Vec<String> = row
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                let _ = writeln!(text, "{}", cells.join(","));
            }
        }
        Format::Json => {
            let objs: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    let map: serde_json::Map<String, serde_json::Value> = header
                        .iter()
                        .map(|k| k.to_string())
                        .zip(row.iter().cloned())
                        .collect();
                    serde_json::Value::Object(map)
                })
                .collect();
            text = serde_json::to_string_pretty(&objs).expect("serializable rows");
            text.push('\n');
        }
    }
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn num(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

fn trace_rows(trace: &DescentTrace) -> Vec<Vec<serde_json::Value>> {
    trace
        .rows
        .iter()
        .map(|r| {
            vec![
                serde_json::Value::from(r.iter),
                num(r.fx),
                num(r.eps),
                num(r.v_norm),
                serde_json::Value::from(r.oracle_evals),
                serde_json::Value::from(r.oracle_subgrads),
                serde_json::Value::from(r.bundle_size),
            ]
        })
        .collect()
}

fn load_function(name: &str, x0: &[f64]) -> Result<Box<dyn FunctionOracle>, Failure> {
    let f = by_name(name).map_err(|e| Failure::Usage(e.to_string()))?;
    if x0.len() != f.dim() {
        return Err(Failure::Usage(format!(
            "{name} expects {} coordinates, got {}",
            f.dim(),
            x0.len()
        )));
    }
    Ok(f)
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let f = load_function(&args.function, &args.x0.0)?;
    let trace = match args.algo {
        Algo::Det => {
            let params = DescentParams {
                eps: args.eps,
                c: args.c,
                delta: args.delta,
                eps_min: args.eps_min,
                shrink: args.shrink,
                max_outer: args.max_outer,
                ..Default::default()
            };
            minimize_deterministic(f.as_ref(), &args.x0.0, &params)?
        }
        Algo::Gs => {
            let params = GSParams {
                m: args.m,
                eps: args.eps,
                c: args.c,
                delta: args.delta,
                eps_min: args.eps_min,
                shrink: args.shrink,
                max_outer: args.max_outer,
                seed: args.seed,
            };
            minimize_random_gs(f.as_ref(), &args.x0.0, &params)?
        }
    };
    let header = [
        "iter",
        "fx",
        "eps",
        "vnorm",
        "oracle_evals",
        "oracle_subgrads",
        "bundle_size",
    ];
    emit(args.out.as_ref(), args.format, &header, &trace_rows(&trace))?;
    eprintln!(
        "final f = {} at x = [{}] after {} iterations",
        trace.final_f,
        trace
            .final_x
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
        trace.rows.len()
    );
    if trace.complete {
        Ok(())
    } else {
        Err(Failure::Algorithm(format!(
            "outer iteration cap {} reached before the radius schedule finished",
            args.max_outer
        )))
    }
}

fn cmd_bisect_demo(args: BisectDemoArgs) -> Result<(), Failure> {
    let f = load_function(&args.function, &args.x0.0)?;
    // the probe direction is the steepest direction of the singleton bundle
    // at x0, i.e. the negated designated subgradient
    let bundle = gradsamp::core::GradientBundle::new(f.subgrad(&args.x0.0));
    let v = steepest_direction(&bundle, DEFAULT_TOL).map_err(|e| Failure::Usage(e.to_string()))?;
    if norm(&v) == 0.0 {
        return Err(Failure::Usage(
            "the subgradient at x0 is zero; nothing to probe".to_string(),
        ));
    }

    let mut recs: Vec<BisectionRecord> = Vec::new();
    let mut log = |r: &BisectionRecord| recs.push(*r);
    let caps = BisectionCaps::default();
    let outcome = match args.algo {
        ProbeAlgo::Legacy => bisect_legacy(
            f.as_ref(),
            &args.x0.0,
            args.eps,
            args.c,
            &v,
            &caps,
            Some(&mut log),
        ),
        ProbeAlgo::Improved => {
            let ct = match args.ctilde {
                Some(ct) => ct,
                None => {
                    let cm = c_min(f.as_ref(), &args.x0.0, args.eps, &v)
                        .map_err(|e| Failure::Usage(e.to_string()))?;
                    default_c_tilde(cm, args.c)
                }
            };
            bisect_improved(
                f.as_ref(),
                &args.x0.0,
                args.eps,
                args.c,
                ct,
                &v,
                &caps,
                Some(&mut log),
            )
        }
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;

    let header = ["j", "a", "b", "t", "inner"];
    let rows: Vec<Vec<serde_json::Value>> = recs
        .iter()
        .map(|r| {
            vec![
                serde_json::Value::from(r.j),
                num(r.a),
                num(r.b),
                num(r.t),
                num(r.inner),
            ]
        })
        .collect();
    emit(args.out.as_ref(), args.format, &header, &rows)?;
    match outcome {
        BisectionOutcome::Found {
            xi_new,
            t,
            iterations,
        } => eprintln!(
            "found new subgradient [{}] at t = {t} after {iterations} iterations",
            xi_new
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        BisectionOutcome::IntervalExhausted { iterations, last_t } => {
            eprintln!("interval exhausted after {iterations} iterations (last midpoint {last_t})")
        }
    }
    Ok(())
}

fn cmd_table1(args: Table1Args) -> Result<(), Failure> {
    for &n in &args.dims {
        if n < 2 {
            return Err(Failure::Usage(format!("dimension must be >= 2, got {n}")));
        }
    }
    let rows_analytic = table1();
    if args.mc == 0 {
        let header = ["n", "m", "p_region", "detect", "display"];
        let rows: Vec<Vec<serde_json::Value>> = rows_analytic
            .iter()
            .map(|r| {
                vec![
                    serde_json::Value::from(r.n),
                    serde_json::Value::from(2 * r.n),
                    num(r.p),
                    num(r.detect),
                    serde_json::Value::String(display_probability(r.detect)),
                ]
            })
            .collect();
        return emit(args.out.as_ref(), args.format, &header, &rows);
    }

    // Monte Carlo estimates of the detection probability for the requested
    // dimensions, one independent stream per dimension
    let header = ["n", "m", "detect", "mc_estimate", "mc_stderr"];
    let params = GSParams {
        seed: args.seed,
        ..Default::default()
    };
    let mut rows = Vec::new();
    for (stream, &n) in args.dims.iter().enumerate() {
        let detect = detection_probability(n, 2 * n).map_err(|e| Failure::Usage(e.to_string()))?;
        let mut rng = params.rng_for_trial(stream as u64);
        let center = vec![0.0; n];
        let mut hits = 0u64;
        for _ in 0..args.mc {
            let pts = sample_ball(&mut rng, &center, 1.0, 2 * n);
            if pts.iter().any(|y| y[n - 1] > norm(&y[..n - 1])) {
                hits += 1;
            }
        }
        let est = hits as f64 / args.mc as f64;
        let se = (est * (1.0 - est) / args.mc as f64).sqrt();
        rows.push(vec![
            serde_json::Value::from(n),
            serde_json::Value::from(2 * n),
            num(detect),
            num(est),
            num(se),
        ]);
    }
    emit(args.out.as_ref(), args.format, &header, &rows)
}

fn cmd_gs_compare(args: GsCompareArgs) -> Result<(), Failure> {
    if args.trials == 0 {
        return Err(Failure::Usage("trial count must be >= 1".to_string()));
    }
    for &n in &args.dims {
        if n < 2 {
            return Err(Failure::Usage(format!("dimension must be >= 2, got {n}")));
        }
    }
    let header = ["n", "det_subgrads", "gs_critical_rate"];
    let mut rows = Vec::new();
    for &n in &args.dims {
        let f = by_name(&format!("cone:{n}")).map_err(|e| Failure::Usage(e.to_string()))?;
        let x0 = vec![0.0; n];
        let (res, stats) = descent_direction(f.as_ref(), &x0, &DescentParams::default(), None)?;
        if !matches!(res, gradsamp::core::DirectionResult::EpsCritical { .. }) {
            return Err(Failure::Algorithm(format!(
                "deterministic run on cone:{n} did not detect criticality"
            )));
        }
        let params = GSParams {
            seed: args.seed,
            ..Default::default()
        };
        let mut critical = 0u64;
        for trial in 0..args.trials {
            let mut rng = params.rng_for_trial(trial as u64);
            let v = gs_direction(f.as_ref(), &x0, &params, &mut rng)?;
            if norm(&v) <= params.delta {
                critical += 1;
            }
        }
        rows.push(vec![
            serde_json::Value::from(n),
            serde_json::Value::from(stats.oracle_subgrads),
            num(critical as f64 / args.trials as f64),
        ]);
    }
    emit(args.out.as_ref(), args.format, &header, &rows)
}
