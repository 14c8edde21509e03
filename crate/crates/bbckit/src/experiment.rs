//! Seeded experiment matrices over (machine, property, mode, seed) cells.
//!
//! Every cell runs independently: its worker parses its own copies of the
//! input files, runs the engine or the standalone tester, and reports one
//! row. Failures become rows too; the matrix never aborts. Rows are sorted
//! by cell coordinates before writing, so the rows CSV is byte-identical
//! across reruns of the same config apart from the wall-time column.

use crate::config::{ExperimentConfig, RunMode};
use crate::dot;
use bbckit_core::bbc::{run_bbc, run_learn_then_check, BbcConfig, Resolution};
use bbckit_core::mbt::{run_mbt_suite, ConformanceConfig};
use bbckit_core::spec::{validate_spec, SpecSet};
use bbckit_core::sut::{Budget, SutSim};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Instant;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RowOutcome {
    Bug,
    NoBug,
    Unresolved,
    /// The cell could not run; see the error column.
    Error,
}

impl RowOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            RowOutcome::Bug => "bug",
            RowOutcome::NoBug => "no-bug",
            RowOutcome::Unresolved => "unresolved",
            RowOutcome::Error => "error",
        }
    }
}

/// One experiment cell's result.
#[derive(Clone, Debug)]
pub struct Row {
    pub sut: String,
    pub property: String,
    pub mode: RunMode,
    pub seed: u64,
    pub outcome: RowOutcome,
    pub learning_queries: u64,
    pub testing_queries: u64,
    pub learning_steps: u64,
    pub testing_steps: u64,
    pub hypotheses: u64,
    pub final_hyp_states: Option<usize>,
    pub bug_step: Option<u64>,
    pub wall_time_ns: u64,
    pub error: Option<String>,
}

impl Row {
    pub fn total_queries(&self) -> u64 {
        self.learning_queries + self.testing_queries
    }

    pub fn total_steps(&self) -> u64 {
        self.learning_steps + self.testing_steps
    }
}

struct Task {
    sut: String,
    sut_text: Arc<Result<String, String>>,
    property: String,
    spec_text: Arc<Result<String, String>>,
    mode: RunMode,
    seed: u64,
    step_budget: Option<u64>,
    max_tests: Option<u64>,
    mbt_tests: u64,
    expected_infix: f64,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

fn read(path: &Path) -> Arc<Result<String, String>> {
    Arc::new(std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display())))
}

fn run_cell(t: &Task) -> Result<Row, String> {
    let sut_text = t.sut_text.as_ref().as_ref().map_err(String::clone)?;
    let spec_text = t.spec_text.as_ref().as_ref().map_err(String::clone)?;
    let machine = dot::parse_mealy(sut_text).map_err(|e| format!("{}: {e}", t.sut))?;
    let spec_dfa = dot::parse_dfa(spec_text).map_err(|e| format!("{}: {e}", t.property))?;
    let spec = validate_spec(&t.property, &spec_dfa, machine.joint())
        .map_err(|e| format!("{}: {e}", t.property))?;
    let budget = Budget {
        max_steps: t.step_budget,
        max_testing_queries_per_round: None,
    };
    let mut sut = SutSim::new(machine)
        .map_err(|e| format!("{}: {e}", t.sut))?
        .with_budget(budget);

    let mut row = Row {
        sut: t.sut.clone(),
        property: t.property.clone(),
        mode: t.mode,
        seed: t.seed,
        outcome: RowOutcome::Error,
        learning_queries: 0,
        testing_queries: 0,
        learning_steps: 0,
        testing_steps: 0,
        hypotheses: 0,
        final_hyp_states: None,
        bug_step: None,
        wall_time_ns: 0,
        error: None,
    };

    if t.mode == RunMode::Mbt {
        let report = run_mbt_suite(&mut sut, &spec, t.mbt_tests, t.seed);
        row.outcome = if report.found {
            RowOutcome::Bug
        } else if report.budget_exhausted {
            RowOutcome::Unresolved
        } else {
            RowOutcome::NoBug
        };
    } else {
        let specs = SpecSet::new(vec![spec]).map_err(|e| e.to_string())?;
        let cfg = BbcConfig {
            monitor_enabled: t.mode == RunMode::Bbc,
            budget,
            conformance: ConformanceConfig {
                expected_infix_length: t.expected_infix,
                max_tests: t.max_tests,
                seed: 0,
            },
            seed: t.seed,
            mode: bbckit_core::bbc::Mode::Bbc,
        };
        let out = match t.mode {
            RunMode::LearnThenCheck => run_learn_then_check(&mut sut, &specs, &cfg),
            _ => run_bbc(&mut sut, &specs, &cfg),
        };
        let p = &out.properties[0];
        row.outcome = match &p.resolution {
            Resolution::Bug(_) => RowOutcome::Bug,
            Resolution::NoBugFound => RowOutcome::NoBug,
            Resolution::Unresolved => RowOutcome::Unresolved,
        };
        row.hypotheses = out.hypotheses_emitted;
        row.final_hyp_states = out.final_hypothesis.as_ref().map(|h| h.n_states());
    }
    let stats = sut.stats();
    row.learning_queries = stats.learning_queries;
    row.testing_queries = stats.testing_queries;
    row.learning_steps = stats.learning_steps;
    row.testing_steps = stats.testing_steps;
    row.bug_step = stats.bug_detection_step;
    Ok(row)
}

fn run_task(t: &Task) -> Row {
    let start = Instant::now();
    let mut row = run_cell(t).unwrap_or_else(|message| Row {
        sut: t.sut.clone(),
        property: t.property.clone(),
        mode: t.mode,
        seed: t.seed,
        outcome: RowOutcome::Error,
        learning_queries: 0,
        testing_queries: 0,
        learning_steps: 0,
        testing_steps: 0,
        hypotheses: 0,
        final_hyp_states: None,
        bug_step: None,
        wall_time_ns: 0,
        error: Some(message),
    });
    row.wall_time_ns = u64::try_from(start.elapsed().as_nanos()).unwrap_or(u64::MAX);
    row
}

fn worker_count(n_tasks: usize) -> usize {
    let configured = std::env::var("BBCKIT_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    let default = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    configured.unwrap_or(default).min(n_tasks.max(1))
}

/// Runs the whole matrix and returns its rows sorted by cell coordinates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Vec<Row> {
    let sut_texts: Vec<_> = cfg.suts.iter().map(|p| read(p)).collect();
    let spec_texts: Vec<_> = cfg.specs.iter().map(|p| read(p)).collect();
    let mut tasks = Vec::new();
    for (sut_path, sut_text) in cfg.suts.iter().zip(&sut_texts) {
        for (spec_path, spec_text) in cfg.specs.iter().zip(&spec_texts) {
            for &mode in &cfg.modes {
                for seed in 0..cfg.seeds {
                    tasks.push(Task {
                        sut: stem(sut_path),
                        sut_text: sut_text.clone(),
                        property: stem(spec_path),
                        spec_text: spec_text.clone(),
                        mode,
                        seed,
                        step_budget: cfg.step_budget,
                        max_tests: cfg.max_tests,
                        mbt_tests: cfg.mbt_tests,
                        expected_infix: cfg.expected_infix,
                    });
                }
            }
        }
    }

    let tasks = Arc::new(tasks);
    let next = Arc::new(AtomicUsize::new(0));
    let (tx, rx) = mpsc::channel::<Row>();
    let n_workers = worker_count(tasks.len());
    let mut handles = Vec::with_capacity(n_workers);
    for _ in 0..n_workers {
        let tasks = tasks.clone();
        let next = next.clone();
        let tx = tx.clone();
        handles.push(std::thread::spawn(move || loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            let Some(task) = tasks.get(i) else { break };
            if tx.send(run_task(task)).is_err() {
                break;
            }
        }));
    }
    drop(tx);
    let mut rows: Vec<Row> = rx.into_iter().collect();
    for h in handles {
        let _ = h.join();
    }
    rows.sort_by(|a, b| {
        (&a.sut, &a.property, a.mode, a.seed).cmp(&(&b.sut, &b.property, b.mode, b.seed))
    });
    rows
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const ROWS_HEADER: &str = "sut,property,mode,seed,resolved,learning_queries,testing_queries,learning_steps,testing_steps,hypotheses,final_hyp_states,bug_step,wall_time_ns,error";

/// Renders rows as CSV, header included.
pub fn rows_csv(rows: &[Row]) -> String {
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for r in rows {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.sut),
            csv_field(&r.property),
            r.mode.as_str(),
            r.seed,
            r.outcome.as_str(),
            r.learning_queries,
            r.testing_queries,
            r.learning_steps,
            r.testing_steps,
            r.hypotheses,
            r.final_hyp_states.map(|x| x.to_string()).unwrap_or_default(),
            opt(r.bug_step),
            r.wall_time_ns,
            csv_field(r.error.as_deref().unwrap_or("")),
        )
        .unwrap();
    }
    out
}

pub const SUMMARY_HEADER: &str = "sut,property,mode,n,bug,no_bug,unresolved,error,mean_queries,sd_queries,mean_bug_step,pct_of_baseline,pct_of_unmonitored";

/// Per-cell aggregates, plus the cross-mode percentages the full loop is
/// judged by: its mean queries as a percentage of the baseline's and of
/// the unmonitored variant's, on the rows where both cells exist.
pub fn summary_csv(rows: &[Row]) -> String {
    #[derive(Default)]
    struct Cell {
        n: u64,
        bug: u64,
        no_bug: u64,
        unresolved: u64,
        error: u64,
        queries: Vec<u64>,
        bug_steps: Vec<u64>,
    }
    let mut cells: BTreeMap<(String, String, RunMode), Cell> = BTreeMap::new();
    for r in rows {
        let cell = cells
            .entry((r.sut.clone(), r.property.clone(), r.mode))
            .or_default();
        cell.n += 1;
        match r.outcome {
            RowOutcome::Bug => cell.bug += 1,
            RowOutcome::NoBug => cell.no_bug += 1,
            RowOutcome::Unresolved => cell.unresolved += 1,
            RowOutcome::Error => cell.error += 1,
        }
        if r.outcome != RowOutcome::Error {
            cell.queries.push(r.total_queries());
        }
        if let Some(s) = r.bug_step {
            cell.bug_steps.push(s);
        }
    }
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len().max(1) as f64;
    let sd = |v: &[u64]| {
        if v.len() < 2 {
            return 0.0;
        }
        let m = mean(v);
        (v.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for ((sut, property, mode), cell) in &cells {
        let mean_of = |m: RunMode| {
            cells
                .get(&(sut.clone(), property.clone(), m))
                .filter(|c| !c.queries.is_empty())
                .map(|c| mean(&c.queries))
        };
        let pct = |denom: Option<f64>| match (mode, denom, mean_of(RunMode::Bbc)) {
            (RunMode::Bbc, Some(d), Some(n)) if d > 0.0 => format!("{:.1}", 100.0 * n / d),
            _ => String::new(),
        };
        let mean_bug_step = if cell.bug_steps.is_empty() {
            String::new()
        } else {
            format!("{:.1}", mean(&cell.bug_steps))
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3},{:.3},{},{},{}",
            csv_field(sut),
            csv_field(property),
            mode.as_str(),
            cell.n,
            cell.bug,
            cell.no_bug,
            cell.unresolved,
            cell.error,
            mean(&cell.queries),
            sd(&cell.queries),
            mean_bug_step,
            pct(mean_of(RunMode::LearnThenCheck)),
            pct(mean_of(RunMode::BbcUnmonitored)),
        )
        .unwrap();
    }
    out
}

/// Writes `rows.csv` and `summary.csv` under `dir`, creating it.
pub fn write_outputs(dir: &Path, rows: &[Row]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("rows.csv"), rows_csv(rows))?;
    std::fs::write(dir.join("summary.csv"), summary_csv(rows))?;
    Ok(())
}

/// Splits one CSV line honoring double-quoted fields.
fn split_csv(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Drops one named column from a CSV; used to compare reruns without the
/// wall-time column.
pub fn strip_column(csv: &str, name: &str) -> String {
    let mut lines = csv.lines();
    let Some(header) = lines.next() else {
        return String::new();
    };
    let cols = split_csv(header);
    let Some(drop) = cols.iter().position(|c| c == name) else {
        return csv.to_string();
    };
    let mut out = String::new();
    for line in std::iter::once(header).chain(lines) {
        let mut fields = split_csv(line);
        fields.remove(drop);
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
