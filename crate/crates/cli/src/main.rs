use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use simineq::harness::{
    entry_membership, export_results, reproduce_table, results_csv, run_experiment, table_config, ExperimentConfig,
    RunOptions, Scale, TableId, DEFAULT_SEED, ENTRY_BOOTSTRAP, INTERVAL_BOOTSTRAP,
};
use simineq::index::{IndexKind, IndexSpec};
use simineq::inference::{confidence_membership, ConfidenceOutcome, CriticalValueSpec, CvMethod, KappaRule};
use simineq::interval::{cv_corrected_interval, naive_interval, smoothed_interval};
use simineq::levelset::rectangular_grid;
use simineq::models::entry::{identified_set_grid, write_identified_set_csv, EntryConfig, EntryObservation};
use simineq::models::intersection::{table1_critical_value, BoundSource, IntersectionObs, IntersectionSimulator};
use simineq::moments::{Dataset, FixedMoments, ObservationMoments, ObservationSimulator};
use simineq::stream::Stream;
use simineq::{selfcheck, Error};

#[derive(Parser)]
#[command(name = "simineq", version, about = "Inference for moment inequalities with simulated moments")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a coverage experiment described by a TOML config.
    Run(RunArgs),
    /// Run the preset grid of a table (T1, T3-T9).
    Reproduce(ReproduceArgs),
    /// Test or build a confidence set on supplied data.
    Infer(InferArgs),
    /// Write the entry-game identified set on a grid.
    Idset(IdsetArgs),
    /// Run the fast invariant checks.
    Selfcheck,
}

#[derive(Args)]
struct Common {
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Record wall-clock seconds per cell.
    #[arg(long)]
    timing: bool,
    /// Output CSV; a `.toml` copy of the config is written next to it. Stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReproduceArgs {
    table: String,
    #[arg(long, default_value = "desk")]
    scale: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    /// CSV of per-observation moment values, one column per moment.
    Moments,
    /// CSV of covariates `x_j`, one column per bound `Φ(x_j)`.
    Intersection,
    /// CSV with columns `y1,y2,z1,z2`.
    Entry,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Naive,
    Gms,
    Smooth,
}

#[derive(Clone, Copy, ValueEnum)]
enum IndexArg {
    Qlr,
    SumPlus,
    MaxPlus,
}

#[derive(Clone, Copy, ValueEnum)]
enum KappaArg {
    SqrtLogN,
    NPow1Over16,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "moments")]
    model: ModelKind,
    #[arg(long, value_enum, default_value = "gms")]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Smoothing parameter, required with `--method smooth`.
    #[arg(long)]
    mu: Option<f64>,
    /// Bootstrap replications.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Simulation draws per observation; 0 uses exact probabilities.
    #[arg(long, default_value_t = 0)]
    draws: usize,
    /// Fixed critical value for `--method naive` (moments and entry models).
    #[arg(long)]
    critical_value: Option<f64>,
    /// Index function for the moments model.
    #[arg(long, value_enum)]
    index: Option<IndexArg>,
    #[arg(long, value_enum)]
    kappa: Option<KappaArg>,
    /// Entry-game parameter `beta,delta`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    theta: Option<(f64, f64)>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdsetArgs {
    #[arg(long)]
    out: PathBuf,
    /// Grid points per axis.
    #[arg(long, default_value_t = 41)]
    points: usize,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0.5,1.4")]
    beta_range: (f64, f64),
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "-1.5,-0.2")]
    delta_range: (f64, f64),
    /// True `beta` of the data-generating game.
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    /// True `delta` of the data-generating game.
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long, default_value_t = 0.7)]
    select_prob: f64,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?,
            b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?,
        )),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Reproduce(a) => reproduce(a),
        Command::Infer(a) => infer(a),
        Command::Idset(a) => idset(a),
        Command::Selfcheck => check(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn options(c: &Common) -> CliResult<RunOptions> {
    if c.jobs == Some(0) {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    Ok(RunOptions { jobs: c.jobs, timing: c.timing })
}

fn emit(results: &[simineq::harness::CellResult], cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult {
    match out {
        Some(path) => Ok(export_results(results, path, Some(cfg))?),
        None => {
            print!("{}", results_csv(results));
            Ok(())
        }
    }
}

fn run(a: RunArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", a.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(s) = a.common.seed {
        cfg.master_seed = s;
    }
    let results = run_experiment(&cfg, options(&a.common)?)?;
    emit(&results, &cfg, a.common.out.as_deref())
}

fn reproduce(a: ReproduceArgs) -> CliResult {
    let table: TableId = a.table.parse()?;
    let scale: Scale = a.scale.parse()?;
    let results = reproduce_table(table, scale, a.common.seed, options(&a.common)?)?;
    let mut cfg = table_config(table, scale);
    cfg.master_seed = a.common.seed.unwrap_or(cfg.master_seed);
    emit(&results, &cfg, a.common.out.as_deref())
}

fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = vec![];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, v)| {
                v.trim().parse::<f64>().map_err(|_| {
                    Failure::Usage(format!("{}: row {} column {:?}: not a number: {v:?}", path.display(), line + 1, header[c]))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Failure::Usage(format!("{}: need at least 2 observations", path.display())));
    }
    Ok((header, rows))
}

fn column(header: &[String], name: &str, path: &Path) -> CliResult<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Failure::Usage(format!("{}: missing column {name:?}", path.display())))
}

fn kappa(a: &InferArgs, default: KappaRule) -> KappaRule {
    match a.kappa {
        Some(KappaArg::SqrtLogN) => KappaRule::SqrtLogN,
        Some(KappaArg::NPow1Over16) => KappaRule::NPow1Over16,
        None => default,
    }
}

fn require_mu(a: &InferArgs) -> CliResult<f64> {
    a.mu.ok_or_else(|| Failure::Usage("--method smooth needs --mu".into()))
}

fn write_output(text: &str, out: Option<&Path>) -> CliResult {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|source| Failure::Runtime(Error::Io { path: path.to_path_buf(), source }.to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn membership_csv(o: &ConfidenceOutcome) -> String {
    let mut s = String::from("statistic,critical_value,member,selected\n");
    let selected = o.selected.as_ref().map(|v| v.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" "));
    let _ = writeln!(s, "{},{},{},{}", o.statistic, o.critical_value, o.covered, selected.unwrap_or_default());
    s
}

fn infer(a: InferArgs) -> CliResult {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::Usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    if a.bootstrap == Some(0) {
        return Err(Failure::Usage("--bootstrap must be at least 1".into()));
    }
    let stream = Stream::new(a.seed.unwrap_or(DEFAULT_SEED));
    let (header, rows) = read_table(&a.data)?;
    let text = match a.model {
        ModelKind::Moments => {
            let moments = ObservationMoments::from_rows(&rows)?;
            let b = a.bootstrap.unwrap_or(INTERVAL_BOOTSTRAP);
            let default_index = if matches!(a.method, Method::Smooth) { IndexArg::MaxPlus } else { IndexArg::Qlr };
            let kind = match a.index.unwrap_or(default_index) {
                IndexArg::Qlr => IndexKind::Qlr,
                IndexArg::SumPlus => IndexKind::SumPlus,
                IndexArg::MaxPlus => IndexKind::MaxPlus,
            };
            let spec = IndexSpec::new(kind, header.len());
            let method = match a.method {
                Method::Naive => CvMethod::Fixed {
                    c: a.critical_value.ok_or_else(|| Failure::Usage("--method naive needs --critical-value".into()))?,
                },
                Method::Gms => CvMethod::GmsBootstrap { kappa: kappa(&a, KappaRule::SqrtLogN), b },
                Method::Smooth => {
                    if kind == IndexKind::Qlr {
                        return Err(Failure::Usage("--method smooth needs --index sum-plus or max-plus".into()));
                    }
                    CvMethod::SmoothedBootstrap { mu: require_mu(&a)?, b, r2: 2, beta: spec.beta() }
                }
            };
            let cv = CriticalValueSpec { method, alpha: a.alpha };
            membership_csv(&confidence_membership(&FixedMoments::new(&moments), &moments, 1, &spec, &cv, stream)?)
        }
        ModelKind::Entry => {
            let (beta, delta) = a.theta.ok_or_else(|| Failure::Usage("--model entry needs --theta beta,delta".into()))?;
            let game = EntryConfig::default();
            let data = entry_data(&header, &rows, &game, &a.data)?;
            let method = match a.method {
                Method::Naive => CvMethod::Fixed {
                    c: a.critical_value.ok_or_else(|| Failure::Usage("--method naive needs --critical-value".into()))?,
                },
                Method::Gms => CvMethod::GmsBootstrap {
                    kappa: kappa(&a, KappaRule::NPow1Over16),
                    b: a.bootstrap.unwrap_or(ENTRY_BOOTSTRAP),
                },
                Method::Smooth => return Err(Failure::Usage("the entry model supports --method naive or gms".into())),
            };
            let cv = CriticalValueSpec { method, alpha: a.alpha };
            membership_csv(&entry_membership(&game, &data, &[beta, delta], a.draws, &cv, stream)?)
        }
        ModelKind::Intersection => {
            let data = Dataset::new(rows.into_iter().map(|x| IntersectionObs { x, predicted: None }).collect());
            let source = if a.draws == 0 { BoundSource::Analytic } else { BoundSource::Simulated };
            let r = a.draws.max(1);
            let sim = IntersectionSimulator::bounds(&data, source, &[r]);
            let original = sim.simulate_all(r, stream.child(1));
            let b = a.bootstrap.unwrap_or(INTERVAL_BOOTSTRAP);
            let target = f64::NEG_INFINITY;
            let outcome = match a.method {
                Method::Naive => naive_interval(&original, table1_critical_value(header.len(), a.alpha)?, target)?,
                Method::Gms => {
                    cv_corrected_interval(&sim, &original, r, kappa(&a, KappaRule::SqrtLogN), b, a.alpha, target, stream.child(2))?
                }
                Method::Smooth => {
                    let r2 = (10 * r).max(100);
                    smoothed_interval(&sim, &original, r, require_mu(&a)?, b, r2, a.alpha, target, stream.child(2))?
                }
            };
            format!("upper_endpoint\n{}\n", outcome.endpoint)
        }
    };
    write_output(&text, a.out.as_deref())
}

fn entry_data(header: &[String], rows: &[Vec<f64>], game: &EntryConfig, path: &Path) -> CliResult<Dataset<EntryObservation>> {
    let (y1, y2) = (column(header, "y1", path)?, column(header, "y2", path)?);
    let (z1, z2) = (column(header, "z1", path)?, column(header, "z2", path)?);
    let cells = game.cells();
    let obs = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let y = [row[y1], row[y2]];
            if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Failure::Usage(format!("{}: row {}: y1 and y2 must be 0 or 1", path.display(), i + 1)));
            }
            let z = [row[z1], row[z2]];
            let cell = cells
                .iter()
                .position(|(c, _)| (c[0] - z[0]).abs() < 1e-9 && (c[1] - z[1]).abs() < 1e-9)
                .ok_or_else(|| Failure::Usage(format!("{}: row {}: z = {z:?} is not a support point", path.display(), i + 1)))?;
            Ok(EntryObservation { y: [y[0] as u8, y[1] as u8], z, cell })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Dataset::new(obs))
}

fn idset(a: IdsetArgs) -> CliResult {
    if a.points == 0 {
        return Err(Failure::Usage("--points must be at least 1".into()));
    }
    let game = EntryConfig { beta: a.beta, delta: a.delta, select_prob: a.select_prob, ..EntryConfig::default() };
    let grid = rectangular_grid(&[a.beta_range.0, a.delta_range.0], &[a.beta_range.1, a.delta_range.1], &[a.points, a.points])?;
    let set = identified_set_grid(&game, &grid)?;
    write_identified_set_csv(&set, &a.out)?;
    println!("{} of {} grid points in the identified set", set.count(), grid.len());
    Ok(())
}

fn check() -> CliResult {
    let checks = selfcheck::run_all()?;
    let mut ok = true;
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Runtime("self-check failed".into()))
    }
}
