//! Monte Carlo coverage experiments over `(n, R, J, method)` cells.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{IndexKind, IndexSpec};
use crate::inference::{
    confidence_membership, gms_bootstrap_cv, gms_selection, test_statistic, ConfidenceOutcome, CriticalValueSpec, CvMethod,
    KappaRule,
};
use crate::interval::{cv_corrected_interval, naive_interval, smoothed_interval, IntervalOutcome};
use crate::models::entry::{self, EntryConfig, EntryObservation, EntrySimulator, NUM_MOMENTS};
use crate::models::intersection::{
    gen_intersection_data, table1_critical_value, BoundSource, IntersectionConfig, IntersectionSimulator,
};
use crate::moments::{Dataset, FixedMoments, MomentStats, ObservationMoments, ObservationSimulator};
use crate::stream::{label, text_label, Stream};

pub const DEFAULT_R2: usize = 100;
pub const INTERVAL_BOOTSTRAP: usize = 1000;
pub const ENTRY_BOOTSTRAP: usize = 300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum ModelSpec {
    Intersection {
        #[serde(default)]
        slack: bool,
        #[serde(rename = "firstStage", default, skip_serializing_if = "Option::is_none")]
        first_stage: Option<usize>,
    },
    Entry {
        #[serde(default)]
        game: EntryConfig,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Intersection { slack: false, .. } => "intersection",
            ModelSpec::Intersection { slack: true, .. } => "intersection-slack",
            ModelSpec::Entry { .. } => "entry",
        }
    }
}

/// Critical-value method of a cell. Omitted tuning values take the model's defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum MethodSpec {
    /// Intersection bounds: the fixed critical value of the analytic limit law.
    Naive,
    Fixed {
        c: f64,
    },
    /// Moment-selection bootstrap (the corrected interval for intersection bounds).
    Gms {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<KappaRule>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bootstrap: Option<usize>,
    },
    Smooth {
        mu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bootstrap: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r2: Option<usize>,
    },
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Naive => "naive",
            MethodSpec::Fixed { .. } => "fixed",
            MethodSpec::Gms { .. } => "gms",
            MethodSpec::Smooth { .. } => "smooth",
        }
    }

    fn label(&self) -> u64 {
        match self {
            MethodSpec::Smooth { mu, .. } => text_label(&format!("smooth:{mu}")),
            MethodSpec::Fixed { c } => text_label(&format!("fixed:{c}")),
            other => text_label(other.name()),
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_parallelism() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(rename = "nValues")]
    pub n_values: Vec<usize>,
    /// Simulation draws per observation; `0` means exact (analytic) moments.
    #[serde(rename = "RValues")]
    pub r_values: Vec<usize>,
    /// Number of moments (intersection bounds only).
    #[serde(rename = "JValues", default)]
    pub j_values: Vec<usize>,
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub methods: Vec<MethodSpec>,
    #[serde(rename = "masterSeed")]
    pub master_seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::Config("nValues must be nonempty with every n >= 2".into()));
        }
        if self.r_values.is_empty() {
            return Err(Error::Config("RValues must be nonempty (use 0 for exact moments)".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be nonempty".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        match &self.model {
            ModelSpec::Intersection { first_stage, .. } => {
                if self.j_values.is_empty() || self.j_values.contains(&0) {
                    return Err(Error::Config("JValues must be nonempty and positive".into()));
                }
                if first_stage.is_some() && self.r_values.iter().any(|&r| r != 0) {
                    return Err(Error::Config("firstStage predictions replace simulation; set RValues = [0]".into()));
                }
            }
            ModelSpec::Entry { game } => {
                game.validate()?;
                if self.j_values.iter().any(|&j| j != NUM_MOMENTS) {
                    return Err(Error::Config(format!("the entry game has J = {NUM_MOMENTS} moments")));
                }
                if self.methods.iter().any(|m| matches!(m, MethodSpec::Naive | MethodSpec::Smooth { .. })) {
                    return Err(Error::Config(
                        "the entry game supports the gms and fixed methods (its statistic is not smoothable)".into(),
                    ));
                }
            }
        }
        for m in &self.methods {
            match *m {
                MethodSpec::Fixed { c } if c.is_nan() => return Err(Error::Config("fixed c is NaN".into())),
                MethodSpec::Gms { bootstrap: Some(0), .. } | MethodSpec::Smooth { bootstrap: Some(0), .. } => {
                    return Err(Error::Config("bootstrap must be at least 1".into()))
                }
                MethodSpec::Smooth { mu, r2, .. } => {
                    if !(mu > 0.0) {
                        return Err(Error::Config(format!("mu must be positive, got {mu}")));
                    }
                    let r2 = r2.unwrap_or(DEFAULT_R2);
                    if self.r_values.iter().any(|&r| r >= r2) {
                        return Err(Error::Config(format!("r2 = {r2} must exceed every R")));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn j_list(&self) -> Vec<usize> {
        match self.model {
            ModelSpec::Entry { .. } => vec![NUM_MOMENTS],
            ModelSpec::Intersection { .. } => self.j_values.clone(),
        }
    }

    /// Cells in output order: `J`, then `n`, then `R`, then method.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = vec![];
        for j in self.j_list() {
            for &n in &self.n_values {
                for &r in &self.r_values {
                    for m in &self.methods {
                        out.push(Cell { n, r, j, method: m.clone() });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub n: usize,
    /// `0` for exact moments.
    pub r: usize,
    pub j: usize,
    pub method: MethodSpec,
}

impl Cell {
    fn describe(&self, model: &str) -> String {
        format!("{model} n={} R={} J={} method={}", self.n, r_text(self.r), self.j, self.method.name())
    }
}

fn r_text(r: usize) -> String {
    if r == 0 {
        "inf".into()
    } else {
        r.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub model: String,
    pub n: usize,
    pub r: usize,
    pub j: usize,
    pub method: String,
    pub mu: Option<f64>,
    pub kappa: Option<KappaRule>,
    pub reps: usize,
    pub covered: usize,
    pub coverage: f64,
    pub median_excess_length: Option<f64>,
    pub selection_disagreements: Option<usize>,
    pub seed: u64,
    pub wall_seconds: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Worker threads; overrides the config's `parallelism` when set.
    pub jobs: Option<usize>,
    /// Record wall-clock seconds per cell (makes output run-dependent).
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct Replication {
    covered: bool,
    endpoint: Option<f64>,
    disagreement: Option<bool>,
}

/// Stream of replication `k` for sample size `n` and `J` moments. Shared by
/// every `R` and method so that cells see common data.
pub fn replication_stream(seed: u64, n: usize, j: usize, k: usize) -> Stream {
    Stream::new(seed).path(&[n as u64, j as u64, k as u64])
}

fn kappa_default(model: &ModelSpec) -> KappaRule {
    match model {
        ModelSpec::Intersection { .. } => KappaRule::SqrtLogN,
        ModelSpec::Entry { .. } => KappaRule::NPow1Over16,
    }
}

fn intersection_replication(
    slack: bool,
    first_stage: Option<usize>,
    cell: &Cell,
    alpha: f64,
    rep: Stream,
) -> Result<Replication> {
    let mut cfg = IntersectionConfig::new(cell.j, cell.n);
    if slack {
        cfg = cfg.with_slack();
    }
    cfg.first_stage = first_stage;
    let data = gen_intersection_data(&cfg, rep)?;
    let (source, draws) = if cell.r == 0 { (BoundSource::Analytic, 1) } else { (BoundSource::Simulated, cell.r) };
    let r2 = match cell.method {
        MethodSpec::Smooth { r2, .. } => r2.unwrap_or(DEFAULT_R2),
        _ => DEFAULT_R2,
    };
    let sim = IntersectionSimulator::bounds(&data, source, &[draws, r2]);
    let original = sim.simulate_all(draws, rep.child(label::PANEL).child(cell.r as u64));
    let boot = rep.child(label::BOOTSTRAP).child(cell.method.label()).child(cell.r as u64);
    let target = crate::models::intersection::THETA_UPPER;
    let out: IntervalOutcome = match cell.method {
        MethodSpec::Naive => naive_interval(&original, table1_critical_value(cell.j, alpha)?, target)?,
        MethodSpec::Fixed { c } => naive_interval(&original, c, target)?,
        MethodSpec::Gms { kappa, bootstrap } => cv_corrected_interval(
            &sim,
            &original,
            draws,
            kappa.unwrap_or(KappaRule::SqrtLogN),
            bootstrap.unwrap_or(INTERVAL_BOOTSTRAP),
            alpha,
            target,
            boot,
        )?,
        MethodSpec::Smooth { mu, bootstrap, .. } => smoothed_interval(
            &sim,
            &original,
            draws,
            mu,
            bootstrap.unwrap_or(INTERVAL_BOOTSTRAP),
            r2,
            alpha,
            target,
            boot,
        )?,
    };
    Ok(Replication { covered: out.covered, endpoint: Some(out.endpoint), disagreement: None })
}

/// Entry-game moments at `θ` for one replication: the full `n × 30` matrix,
/// its simulator, and the indices of the nondegenerate moments.
pub struct EntrySample {
    pub data: crate::moments::Dataset<entry::EntryObservation>,
    pub original: ObservationMoments,
    pub keep: Vec<usize>,
    pub stats: MomentStats,
}

/// Draws the data and the original-sample moments (`r = 0` for exact ones).
pub fn entry_sample(game: &EntryConfig, n: usize, r: usize, theta: &[f64], rep: Stream) -> Result<EntrySample> {
    let data = entry::gen_entry_data(game, n, rep)?;
    let cells: Vec<[f64; 2]> = game.cells().iter().map(|c| c.0).collect();
    let all: Vec<usize> = (0..NUM_MOMENTS).collect();
    let sim = EntrySimulator::new(&data, theta, &cells, &all, r == 0, &[r.max(1)]);
    let original = sim.simulate_all(r.max(1), rep.child(label::PANEL).child(r as u64));
    let keep = original.stats()?.nondegenerate();
    let stats = original.select_columns(&keep).stats()?;
    Ok(EntrySample { data, original, keep, stats })
}

/// GMS-selected moments of a sample, as indices into the full moment vector.
pub fn entry_selection(sample: &EntrySample, kappa: KappaRule) -> Result<Vec<usize>> {
    Ok(gms_selection(&sample.stats, kappa.value(sample.stats.n))?.into_iter().map(|j| sample.keep[j]).collect())
}

/// Projection-statistic test of `θ` on observed entry-game data. Moments use
/// `r` draws per observation (`0` for exact probabilities); moments with zero
/// variance are dropped and the bootstrap resamples the moment rows.
pub fn entry_membership(
    game: &EntryConfig,
    data: &Dataset<EntryObservation>,
    theta: &[f64],
    r: usize,
    cv: &CriticalValueSpec,
    stream: Stream,
) -> Result<ConfidenceOutcome> {
    game.validate()?;
    if matches!(cv.method, CvMethod::SmoothedBootstrap { .. }) {
        return Err(Error::Config("the entry game's projection statistic has no certified smoothing".into()));
    }
    let cells: Vec<[f64; 2]> = game.cells().iter().map(|c| c.0).collect();
    let all: Vec<usize> = (0..NUM_MOMENTS).collect();
    let sim = EntrySimulator::new(data, theta, &cells, &all, r == 0, &[r.max(1)]);
    let original = sim.simulate_all(r.max(1), stream.child(label::PANEL));
    let keep = original.stats()?.nondegenerate();
    if keep.is_empty() {
        return Err(Error::Parameter("no entry-game moment has positive variance".into()));
    }
    let rows = original.select_columns(&keep);
    let spec = IndexSpec::new(IndexKind::Qlr, keep.len());
    let mut out = confidence_membership(&FixedMoments::new(&rows), &rows, 1, &spec, cv, stream.child(label::BOOTSTRAP))?;
    out.selected = out.selected.map(|s| s.into_iter().map(|j| keep[j]).collect());
    Ok(out)
}

/// Whether the t-test selections `{j : ξ_j ≥ −1}` of two samples differ.
pub fn selection_disagreement(analytic: &MomentStats, simulated: &MomentStats, kappa: f64) -> Result<bool> {
    if analytic.num_moments() != simulated.num_moments() {
        return Err(Error::Parameter("selection comparison needs the same number of moments".into()));
    }
    Ok(gms_selection(analytic, kappa)? != gms_selection(simulated, kappa)?)
}

fn entry_replication(game: &EntryConfig, cell: &Cell, alpha: f64, rep: Stream) -> Result<Replication> {
    let theta = entry::THETA_UPPER;
    let sample = entry_sample(game, cell.n, cell.r, &theta, rep)?;
    let spec = IndexSpec::new(IndexKind::Qlr, sample.keep.len());
    let statistic = test_statistic(&spec, &sample.stats)?;
    match cell.method {
        MethodSpec::Fixed { c } => Ok(Replication { covered: statistic <= c, endpoint: None, disagreement: None }),
        MethodSpec::Gms { kappa, bootstrap } => {
            let kappa = kappa.unwrap_or(KappaRule::NPow1Over16);
            let rows = sample.original.select_columns(&sample.keep);
            let sim = FixedMoments::new(&rows);
            let boot = rep.child(label::BOOTSTRAP).child(cell.method.label()).child(cell.r as u64);
            let b = bootstrap.unwrap_or(ENTRY_BOOTSTRAP);
            let cv = gms_bootstrap_cv(&sim, 1, &sample.stats, &spec, kappa, b, alpha, boot)?;
            let disagreement = if cell.r == 0 {
                None
            } else {
                let exact = entry_sample(game, cell.n, 0, &theta, rep)?;
                let simulated: Vec<usize> = cv.selected.iter().map(|&j| sample.keep[j]).collect();
                Some(entry_selection(&exact, kappa)? != simulated)
            };
            Ok(Replication { covered: statistic <= cv.critical_value, endpoint: None, disagreement })
        }
        _ => Err(Error::Config("the entry game supports the gms and fixed methods".into())),
    }
}

/// Number of replications in which exact and simulated moments select
/// different moment sets at the coverage point.
pub fn entry_selection_disagreements(
    game: &EntryConfig,
    n: usize,
    r: usize,
    reps: usize,
    kappa: KappaRule,
    seed: u64,
) -> Result<usize> {
    let flags = (0..reps)
        .into_par_iter()
        .map(|k| {
            let rep = replication_stream(seed, n, NUM_MOMENTS, k);
            let exact = entry_sample(game, n, 0, &entry::THETA_UPPER, rep)?;
            let sim = entry_sample(game, n, r, &entry::THETA_UPPER, rep)?;
            Ok(entry_selection(&exact, kappa)? != entry_selection(&sim, kappa)?)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(flags.into_iter().filter(|&d| d).count())
}

/// Median with the midpoint convention for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Runs all replications of one cell on the current thread pool.
pub fn run_coverage_cell(cfg: &ExperimentConfig, cell: &Cell, timing: bool) -> Result<CellResult> {
    let started = Instant::now();
    let name = cell.describe(cfg.model.name());
    let reps = (0..cfg.reps)
        .into_par_iter()
        .map(|k| {
            let rep = replication_stream(cfg.master_seed, cell.n, cell.j, k);
            let out = match &cfg.model {
                ModelSpec::Intersection { slack, first_stage } => {
                    intersection_replication(*slack, *first_stage, cell, cfg.alpha, rep)
                }
                ModelSpec::Entry { game } => entry_replication(game, cell, cfg.alpha, rep),
            };
            out.map_err(|e| Error::Replication { cell: name.clone(), replication: k, source: Box::new(e) })
        })
        .collect::<Result<Vec<Replication>>>()?;
    let covered = reps.iter().filter(|r| r.covered).count();
    let endpoints: Vec<f64> = reps.iter().filter_map(|r| r.endpoint).collect();
    let target = match cfg.model {
        ModelSpec::Intersection { .. } => Some(crate::models::intersection::THETA_UPPER),
        ModelSpec::Entry { .. } => None,
    };
    let disagreements: Vec<bool> = reps.iter().filter_map(|r| r.disagreement).collect();
    let (mu, kappa) = match cell.method {
        MethodSpec::Smooth { mu, .. } => (Some(mu), None),
        MethodSpec::Gms { kappa, .. } => (None, Some(kappa.unwrap_or(kappa_default(&cfg.model)))),
        _ => (None, None),
    };
    Ok(CellResult {
        model: cfg.model.name().into(),
        n: cell.n,
        r: cell.r,
        j: cell.j,
        method: cell.method.name().into(),
        mu,
        kappa,
        reps: cfg.reps,
        covered,
        coverage: covered as f64 / cfg.reps as f64,
        median_excess_length: target.and_then(|t| median(&endpoints).map(|m| m - t)),
        selection_disagreements: (!disagreements.is_empty()).then(|| disagreements.iter().filter(|&&d| d).count()),
        seed: cfg.master_seed,
        wall_seconds: timing.then(|| started.elapsed().as_secs_f64()),
    })
}

/// Runs every cell of the configuration in order.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let threads = opts.jobs.unwrap_or(cfg.parallelism).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| cfg.cells().iter().map(|cell| run_coverage_cell(cfg, cell, opts.timing)).collect())
}

pub const CSV_HEADER: &str =
    "model,n,R,J,method,mu,kappa,reps,coverage,median_excess_length,selection_disagreements,seed,wall_seconds";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn results_csv(results: &[CellResult]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.model,
            r.n,
            r_text(r.r),
            r.j,
            r.method,
            opt(r.mu),
            opt(r.kappa.map(KappaRule::name)),
            r.reps,
            r.coverage,
            opt(r.median_excess_length.map(|v| format!("{v:.6}"))),
            opt(r.selection_disagreements),
            r.seed,
            opt(r.wall_seconds.map(|v| format!("{v:.3}"))),
        );
    }
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}

/// Writes the CSV and, when a config is given, a TOML sidecar next to it
/// (`<path>.toml`) holding the full configuration.
pub fn export_results(results: &[CellResult], path: &Path, config: Option<&ExperimentConfig>) -> Result<()> {
    write_file(path, &results_csv(results))?;
    if let Some(cfg) = config {
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".toml");
        write_file(Path::new(&sidecar), &cfg.to_toml()?)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableId {
    T1,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
}

impl std::str::FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "T1" => TableId::T1,
            "T3" => TableId::T3,
            "T4" => TableId::T4,
            "T5" => TableId::T5,
            "T6" => TableId::T6,
            "T7" => TableId::T7,
            "T8" => TableId::T8,
            "T9" => TableId::T9,
            _ => return Err(Error::Config(format!("unknown table {s:?}; expected one of T1, T3-T9"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    Full,
    Desk,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Scale::Full),
            "desk" => Ok(Scale::Desk),
            _ => Err(Error::Config(format!("unknown scale {s:?}; expected full or desk"))),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Preset grid for a table. Tables 4 and 6 share runs (coverage and length
/// of the naive and corrected intervals), as do 5 and 7; 8 and 9 are the
/// slack design with all three interval methods.
pub fn table_config(table: TableId, scale: Scale) -> ExperimentConfig {
    let sims = vec![1, 5, 10, 20];
    let interval = |slack: bool, methods: Vec<MethodSpec>| ExperimentConfig {
        model: ModelSpec::Intersection { slack, first_stage: None },
        n_values: vec![100, 250, 1000],
        r_values: sims.clone(),
        j_values: vec![5, 10, 30],
        reps: 1000,
        alpha: 0.05,
        methods,
        master_seed: DEFAULT_SEED,
        parallelism: 1,
    };
    let gms = MethodSpec::Gms { kappa: None, bootstrap: None };
    let smooth = |mu| MethodSpec::Smooth { mu, bootstrap: None, r2: None };
    match table {
        TableId::T1 => ExperimentConfig {
            r_values: vec![0, 1, 5, 10, 20],
            j_values: vec![2, 5, 10, 30],
            ..interval(false, vec![MethodSpec::Naive])
        },
        TableId::T3 => {
            let (reps, b) = match scale {
                Scale::Full => (1000, 1000),
                Scale::Desk => (300, ENTRY_BOOTSTRAP),
            };
            ExperimentConfig {
                model: ModelSpec::Entry { game: EntryConfig::default() },
                n_values: vec![250, 500, 1000, 2000],
                r_values: vec![0, 1, 5, 10, 20],
                j_values: vec![],
                reps,
                alpha: 0.05,
                methods: vec![MethodSpec::Gms { kappa: None, bootstrap: Some(b) }],
                master_seed: DEFAULT_SEED,
                parallelism: 1,
            }
        }
        TableId::T4 | TableId::T6 => interval(false, vec![MethodSpec::Naive, gms]),
        TableId::T5 | TableId::T7 => interval(false, vec![smooth(0.02), smooth(0.04)]),
        TableId::T8 | TableId::T9 => interval(true, vec![MethodSpec::Naive, gms, smooth(0.02), smooth(0.04)]),
    }
}

pub fn reproduce_table(table: TableId, scale: Scale, seed: Option<u64>, opts: RunOptions) -> Result<Vec<CellResult>> {
    let mut cfg = table_config(table, scale);
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    run_experiment(&cfg, opts)
}
