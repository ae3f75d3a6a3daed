//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero when a criterion outside `KNOWN_RED` fails.
//!
//! Run alone with `cargo test -p simineq --test acceptance`. The full set
//! takes about 20 minutes on one core.

use std::process::ExitCode;
use std::time::Instant;

use simineq::harness::{
    entry_selection_disagreements, results_csv, run_experiment, CellResult, ExperimentConfig, MethodSpec, ModelSpec,
    RunOptions, DEFAULT_SEED,
};
use simineq::inference::KappaRule;
use simineq::models::entry::{
    entry_compact_grid, identified_set_grid, level_set_distance, EntryConfig, THETA_UPPER,
};
use simineq::selfcheck;
use simineq::stream::Stream;

/// Cells that do not reproduce with this implementation. They are reported
/// but do not fail the run.
const KNOWN_RED: &[&str] = &["2a", "6b", "6c"];

struct Report {
    unexpected: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, passed: bool, what: &str) {
        let tag = if passed { "PASS" } else { "FAIL" };
        let note = if !passed && KNOWN_RED.contains(&id) { " (known)" } else { "" };
        println!("{tag} {id:<3} {what}{note}");
        if !passed && !KNOWN_RED.contains(&id) {
            self.unexpected.push(id.to_string());
        }
    }

    fn coverage(&mut self, id: &str, label: &str, got: f64, want: f64, tol: f64) {
        let what = format!("{label}: coverage {got:.3}, expected {want:.3} +/- {tol}");
        self.line(id, (got - want).abs() <= tol, &what);
    }

    fn length(&mut self, id: &str, label: &str, got: Option<f64>, want: f64, tol: f64) {
        let got = got.unwrap_or(f64::NAN);
        let what = format!("{label}: median excess length {got:.4}, expected {want:.3} +/- {tol}");
        self.line(id, (got - want).abs() <= tol, &what);
    }
}

fn config(model: ModelSpec, n: usize, r: Vec<usize>, j: Vec<usize>, reps: usize, methods: Vec<MethodSpec>) -> ExperimentConfig {
    ExperimentConfig {
        model,
        n_values: vec![n],
        r_values: r,
        j_values: j,
        reps,
        alpha: 0.05,
        methods,
        master_seed: DEFAULT_SEED,
        parallelism: 1,
    }
}

fn intersection(slack: bool) -> ModelSpec {
    ModelSpec::Intersection { slack, first_stage: None }
}

fn gms() -> MethodSpec {
    MethodSpec::Gms { kappa: None, bootstrap: None }
}

fn smooth(mu: f64) -> MethodSpec {
    MethodSpec::Smooth { mu, bootstrap: None, r2: None }
}

fn run(cfg: &ExperimentConfig) -> Vec<CellResult> {
    let start = Instant::now();
    let out = run_experiment(cfg, RunOptions::default()).expect("experiment runs");
    eprintln!("  ran {} cell(s) in {:.0?}", out.len(), start.elapsed());
    out
}

fn cell<'a>(results: &'a [CellResult], r: usize, method: &str, mu: Option<f64>) -> &'a CellResult {
    results.iter().find(|c| c.r == r && c.method == method && c.mu == mu).expect("cell present")
}

/// Tolerance for a coverage target: tight near nominal, wider for low cells.
fn tolerance(want: f64) -> f64 {
    if want < 0.5 {
        0.05
    } else {
        0.03
    }
}

fn table1(report: &mut Report) -> String {
    let cfgs = [
        config(intersection(false), 250, vec![0, 1, 20], vec![2], 1000, vec![MethodSpec::Naive]),
        config(intersection(false), 100, vec![1], vec![30], 1000, vec![MethodSpec::Naive]),
    ];
    let a = run(&cfgs[0]);
    let b = run(&cfgs[1]);
    for (label, c, want) in [
        ("J=2 n=250 exact", cell(&a, 0, "naive", None), 0.954),
        ("J=2 n=250 R=1", cell(&a, 1, "naive", None), 0.733),
        ("J=2 n=250 R=20", cell(&a, 20, "naive", None), 0.945),
        ("J=30 n=100 R=1", cell(&b, 1, "naive", None), 0.245),
    ] {
        report.coverage("1", &format!("naive interval {label}"), c.coverage, want, tolerance(want));
    }
    results_csv(&a)
}

fn determinism(report: &mut Report, reference: &str) {
    let cfg = config(intersection(false), 250, vec![0, 1, 20], vec![2], 1000, vec![MethodSpec::Naive]);
    let again = run_experiment(&cfg, RunOptions { jobs: Some(3), timing: false }).expect("experiment runs");
    report.line("11", results_csv(&again) == reference, "CSV identical with 1 and 3 worker threads");
}

fn main() -> ExitCode {
    let mut report = Report { unexpected: vec![] };
    let start = Instant::now();

    let reference = table1(&mut report);

    let t4a = run(&config(intersection(false), 250, vec![1], vec![5], 1000, vec![gms()]));
    report.coverage("2a", "corrected interval J=5 n=250 R=1", cell(&t4a, 1, "gms", None).coverage, 0.998, 0.01);
    let t4b = run(&config(intersection(false), 250, vec![5], vec![10], 1000, vec![gms()]));
    report.coverage("2b", "corrected interval J=10 n=250 R=5", cell(&t4b, 5, "gms", None).coverage, 0.980, 0.02);

    let t5a = run(&config(intersection(false), 250, vec![1], vec![5], 1000, vec![smooth(0.02)]));
    report.coverage("3a", "smoothed mu=0.02 J=5 n=250 R=1", cell(&t5a, 1, "smooth", Some(0.02)).coverage, 0.961, 0.03);
    let t5b = run(&config(intersection(false), 1000, vec![20], vec![30], 1000, vec![smooth(0.04)]));
    report.coverage("3b", "smoothed mu=0.04 J=30 n=1000 R=20", cell(&t5b, 20, "smooth", Some(0.04)).coverage, 0.944, 0.03);

    let t6 = run(&config(intersection(false), 100, vec![1], vec![5], 1000, vec![gms(), smooth(0.02)]));
    report.length("4a", "corrected J=5 n=100 R=1", cell(&t6, 1, "gms", None).median_excess_length, 0.081, 0.01);
    report.length("4b", "smoothed mu=0.02 J=5 n=100 R=1", cell(&t6, 1, "smooth", Some(0.02)).median_excess_length, 0.050, 0.01);

    let t8 = run(&config(intersection(true), 250, vec![10], vec![10], 1000, vec![smooth(0.02)]));
    report.coverage("5a", "slack design smoothed mu=0.02 J=10 n=250 R=10", cell(&t8, 10, "smooth", Some(0.02)).coverage, 0.986, 0.02);
    let t9 = run(&config(intersection(true), 100, vec![1], vec![30], 1000, vec![gms()]));
    report.length("5b", "slack design corrected J=30 n=100 R=1", cell(&t9, 1, "gms", None).median_excess_length, 0.091, 0.012);

    let entry = ModelSpec::Entry { game: EntryConfig::default() };
    let entry_gms = vec![MethodSpec::Gms { kappa: None, bootstrap: Some(300) }];
    let e250 = run(&config(entry.clone(), 250, vec![0, 1], vec![], 300, entry_gms.clone()));
    report.coverage("6a", "entry game n=250 exact", cell(&e250, 0, "gms", None).coverage, 0.921, 0.06);
    report.coverage("6b", "entry game n=250 R=1", cell(&e250, 1, "gms", None).coverage, 0.391, 0.06);
    let e1000 = run(&config(entry, 1000, vec![5], vec![], 300, entry_gms));
    report.coverage("6c", "entry game n=1000 R=5", cell(&e1000, 5, "gms", None).coverage, 0.947, 0.04);

    let game = EntryConfig::default();
    let d = entry_selection_disagreements(&game, 500, 20, 1000, KappaRule::NPow1Over16, DEFAULT_SEED).expect("runs");
    report.line("7", d.abs_diff(448) <= 60, &format!("selection disagreements n=500 R=20: {d} of 1000, expected 448 +/- 60"));

    let checks = selfcheck::run_all().expect("self-check runs");
    for c in &checks {
        report.line("8", c.passed, &format!("{}: {}", c.name, c.detail));
    }

    let grid = entry_compact_grid(21).expect("grid");
    let truth = identified_set_grid(&game, &grid).expect("identified set");
    let root = Stream::new(7);
    let closer = (0..100u64)
        .filter(|&k| {
            let s = root.child(k);
            let small = level_set_distance(&game, 250, 5, &grid, &truth, s).expect("level set");
            let large = level_set_distance(&game, 4000, 5, &grid, &truth, s).expect("level set");
            large < small
        })
        .count();
    report.line("9", closer >= 80, &format!("level set closer to identified set at n=4000 than n=250 in {closer} of 100 runs"));

    let inside = simineq::models::entry::in_identified_set(&game, &THETA_UPPER);
    let shifted = simineq::models::entry::in_identified_set(&game, &[THETA_UPPER[0], THETA_UPPER[1] + 0.01]);
    report.line("10", inside && !shifted, &format!("upper extreme point member {inside}, point shifted by 0.01 member {shifted}"));

    determinism(&mut report, &reference);

    println!("acceptance finished in {:.0?}", start.elapsed());
    if report.unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", report.unexpected.join(", "));
        ExitCode::FAILURE
    }
}
