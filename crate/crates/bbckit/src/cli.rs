//! Command-line front end.
//!
//! Exit codes: 0 when the command succeeds (for `check`, when every
//! property is satisfied), 1 when a property is violated or, under
//! `--fail-on-bug`, when a run finds a bug, and 2 for usage, parse, and
//! validation errors.

use crate::config::ExperimentConfig;
use crate::dot;
use crate::experiment::{run_experiment, write_outputs};
use bbckit_core::bbc::{run_bbc, run_learn_then_check, BbcConfig, BbcOutcome, Mode, Resolution};
use bbckit_core::checker::{check, CheckVerdict};
use bbckit_core::mbt::{run_mbt_suite, ConformanceConfig};
use bbckit_core::monitor::DiscoveredBy;
use bbckit_core::spec::{bug_automaton_to_spec, split_io_dfa, validate_spec, SpecDfa, SpecSet};
use bbckit_core::sut::{Budget, SutSim};
use bbckit_core::{Alphabet, Hypothesis, MealyMachine};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bbckit",
    version,
    about = "Learn finite-state models of a simulated system and check safety properties against them"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model-check properties against a known machine, no learning involved
    Check(CheckArgs),
    /// Learn the machine and check properties against every hypothesis
    Bbc(BbcArgs),
    /// Test one property directly with property-derived random tests
    Mbt(MbtArgs),
    /// Run a (machine, property, mode, seed) matrix and write CSV results
    Experiment(ExperimentArgs),
    /// Rewrite property automata between encodings
    Convert(ConvertArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Machine file
    #[arg(long)]
    sut: PathBuf,
    /// Property file; repeatable
    #[arg(long, required = true)]
    spec: Vec<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliMode {
    /// Check every intermediate hypothesis
    Bbc,
    /// Learn a full model first, then check it
    LearnThenCheck,
}

#[derive(Args)]
struct BbcArgs {
    /// Machine file
    #[arg(long)]
    sut: PathBuf,
    /// Property file; repeatable
    #[arg(long, required = true)]
    spec: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "bbc")]
    mode: CliMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on total input symbols sent to the machine
    #[arg(long)]
    step_budget: Option<u64>,
    /// Cap on conformance tests per round
    #[arg(long)]
    max_tests: Option<u64>,
    /// Watch queries at runtime and abort violating ones
    #[arg(long, value_enum, default_value = "on")]
    monitor: Switch,
    /// Exit 1 when a bug is found
    #[arg(long)]
    fail_on_bug: bool,
}

#[derive(Args)]
struct MbtArgs {
    /// Machine file
    #[arg(long)]
    sut: PathBuf,
    /// Property file
    #[arg(long)]
    spec: PathBuf,
    /// Number of tests in the suite
    #[arg(long, default_value_t = 1000)]
    tests: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on total input symbols sent to the machine
    #[arg(long)]
    step_budget: Option<u64>,
    /// Exit 1 when a bug is found
    #[arg(long)]
    fail_on_bug: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Matrix description, key=value lines
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving rows.csv and summary.csv
    #[arg(long)]
    out: PathBuf,
    /// Override the config's seed count
    #[arg(long)]
    seeds: Option<u64>,
    /// Override the config's step budget
    #[arg(long)]
    step_budget: Option<u64>,
    /// Override the config's conformance-test cap
    #[arg(long)]
    max_tests: Option<u64>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("kind").required(true).args(["bug_automaton", "split_io"]))]
struct ConvertArgs {
    /// Automaton to rewrite
    input: PathBuf,
    /// The input marks forbidden behavior with its final states; emit the
    /// property forbidding exactly that
    #[arg(long)]
    bug_automaton: bool,
    /// The input's edge labels are input/output pairs; emit the property
    /// over the interleaved alphabet
    #[arg(long)]
    split_io: bool,
    /// Input alphabet for --split-io, comma-separated
    #[arg(long, value_delimiter = ',', requires = "split_io")]
    inputs: Vec<String>,
    /// Output alphabet for --split-io, comma-separated
    #[arg(long, value_delimiter = ',', requires = "split_io")]
    outputs: Vec<String>,
    /// Property name; defaults to the input file stem
    #[arg(long)]
    name: Option<String>,
    /// Write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

fn load_machine(path: &Path) -> Result<MealyMachine, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    dot::parse_mealy(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_spec(path: &Path, joint: &Alphabet) -> Result<SpecDfa, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let dfa = dot::parse_dfa(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    validate_spec(&stem(path), &dfa, joint).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_dfa(path: &Path) -> Result<bbckit_core::Dfa, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    dot::parse_dfa(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_check(args: &CheckArgs) -> Result<ExitCode, String> {
    let machine = load_machine(&args.sut)?;
    let joint = machine.joint().clone();
    let hyp = Hypothesis::from_machine(machine);
    let mut all_satisfied = true;
    for path in &args.spec {
        let spec = load_spec(path, &joint)?;
        let verdict = check(&hyp, &spec).map_err(|e| format!("{}: {e}", path.display()))?;
        match verdict {
            CheckVerdict::Satisfied => println!("{}: satisfied", spec.name()),
            CheckVerdict::Unsatisfied { inputs, .. } => {
                all_satisfied = false;
                println!("{}: x {}", spec.name(), joint.format_word(&inputs));
            }
        }
    }
    Ok(if all_satisfied {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn print_outcome(out: &BbcOutcome, joint: &Alphabet) {
    for p in &out.properties {
        match &p.resolution {
            Resolution::Bug(b) => {
                let how = match b.discovered_by {
                    DiscoveredBy::Monitor => "monitor",
                    DiscoveredBy::ModelCheckConfirmation => "model check",
                };
                println!(
                    "{}: bug at step {} ({}): {}",
                    p.name,
                    b.step_index,
                    how,
                    joint.format_word(&b.interleaved)
                );
            }
            Resolution::NoBugFound => println!("{}: no bug found", p.name),
            Resolution::Unresolved => println!("{}: unresolved", p.name),
        }
    }
}

fn print_stats(stats: &bbckit_core::sut::QueryStats, hypotheses: u64) {
    println!(
        "queries: {} learning, {} testing; steps: {} learning, {} testing; hypotheses: {}",
        stats.learning_queries,
        stats.testing_queries,
        stats.learning_steps,
        stats.testing_steps,
        hypotheses
    );
}

fn cmd_bbc(args: &BbcArgs) -> Result<ExitCode, String> {
    let machine = load_machine(&args.sut)?;
    let joint = machine.joint().clone();
    let specs = args
        .spec
        .iter()
        .map(|p| load_spec(p, &joint))
        .collect::<Result<Vec<_>, _>>()?;
    let specs = SpecSet::new(specs).map_err(|e| e.to_string())?;
    let mut sut = SutSim::new(machine).map_err(|e| e.to_string())?;
    let cfg = BbcConfig {
        monitor_enabled: args.monitor == Switch::On,
        budget: Budget {
            max_steps: args.step_budget,
            max_testing_queries_per_round: None,
        },
        conformance: ConformanceConfig {
            expected_infix_length: 10.0,
            max_tests: args.max_tests,
            seed: 0,
        },
        seed: args.seed,
        mode: Mode::Bbc,
    };
    let out = match args.mode {
        CliMode::Bbc => run_bbc(&mut sut, &specs, &cfg),
        CliMode::LearnThenCheck => run_learn_then_check(&mut sut, &specs, &cfg),
    };
    print_outcome(&out, &joint);
    print_stats(&out.stats, out.hypotheses_emitted);
    if let Some(q) = out.queries_to_full_model {
        println!("queries to full model: {q}");
    }
    Ok(if args.fail_on_bug && out.bug_count() > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_mbt(args: &MbtArgs) -> Result<ExitCode, String> {
    let machine = load_machine(&args.sut)?;
    let joint = machine.joint().clone();
    let spec = load_spec(&args.spec, &joint)?;
    let mut sut = SutSim::new(machine)
        .map_err(|e| e.to_string())?
        .with_budget(Budget {
            max_steps: args.step_budget,
            max_testing_queries_per_round: None,
        });
    let report = run_mbt_suite(&mut sut, &spec, args.tests, args.seed);
    if report.found {
        let test = report.tests_to_bug.unwrap_or(report.tests_run());
        let step = sut
            .stats()
            .bug_detection_step
            .map(|s| format!(" at step {s}"))
            .unwrap_or_default();
        println!("{}: bug in test {test} of {}{step}", spec.name(), report.tests_run());
    } else if report.budget_exhausted {
        println!(
            "{}: budget exhausted after {} tests, no bug found",
            spec.name(),
            report.tests_run()
        );
    } else {
        println!("{}: no bug found in {} tests", spec.name(), report.tests_run());
    }
    print_stats(sut.stats(), 0);
    Ok(if args.fail_on_bug && report.found {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<ExitCode, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    let dir = args.config.parent().unwrap_or(Path::new("."));
    let mut cfg = ExperimentConfig::parse(&text, dir)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    if let Some(seeds) = args.seeds {
        if seeds == 0 {
            return Err("--seeds must be positive".to_string());
        }
        cfg.seeds = seeds;
    }
    if args.step_budget.is_some() {
        cfg.step_budget = args.step_budget;
    }
    if args.max_tests.is_some() {
        cfg.max_tests = args.max_tests;
    }
    let rows = run_experiment(&cfg);
    write_outputs(&args.out, &rows).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let errors = rows
        .iter()
        .filter(|r| r.outcome == crate::experiment::RowOutcome::Error)
        .count();
    println!(
        "wrote {} rows to {} ({} with errors)",
        rows.len(),
        args.out.join("rows.csv").display(),
        errors
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_convert(args: &ConvertArgs) -> Result<ExitCode, String> {
    let dfa = load_dfa(&args.input)?;
    let name = args.name.clone().unwrap_or_else(|| stem(&args.input));
    let spec = if args.bug_automaton {
        let joint = dfa.alphabet().clone();
        bug_automaton_to_spec(&name, &dfa, &joint)
            .map_err(|e| format!("{}: {e}", args.input.display()))?
    } else {
        let inputs = Alphabet::new(&args.inputs).map_err(|e| format!("--inputs: {e}"))?;
        let outputs = Alphabet::new(&args.outputs).map_err(|e| format!("--outputs: {e}"))?;
        if inputs.is_empty() || outputs.is_empty() {
            return Err("--split-io needs --inputs and --outputs".to_string());
        }
        split_io_dfa(&name, &dfa, &inputs, &outputs)
            .map_err(|e| format!("{}: {e}", args.input.display()))?
    };
    let text = dot::serialize_dfa(spec.dfa()).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses `argv` and runs the chosen command.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code: 0 for --help/--version, 2 otherwise.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Bbc(a) => cmd_bbc(a),
        Command::Mbt(a) => cmd_mbt(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Convert(a) => cmd_convert(a),
    };
    result.unwrap_or_else(fail)
}
