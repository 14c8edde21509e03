//! The black-box checking engine.
//!
//! [`run_bbc`] drives the full loop: learn a hypothesis, model-check it
//! against every unresolved property, confirm predicted violations on the
//! machine itself, feed spurious ones back to the learner, and fall back
//! to conformance testing when every property looks satisfied. Runtime
//! monitors ride along on learning queries and resolve a property the
//! moment a query violates it, aborting the query in flight.
//!
//! [`run_learn_then_check`] is the baseline the loop is measured against:
//! the same machinery, but monitors never abort and model checking waits
//! until a conformance round has passed, so all checking happens on the
//! fully learned model.
//!
//! Budgets never surface as errors. When the step budget refuses further
//! queries, the engine sweeps the last hypothesis through the model
//! checker once more, confirming hits with budget-exempt queries, and
//! reports whatever remains as unresolved.

use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::alphabet::Alphabet;
use crate::checker::{check, confirm_on_sut, Confirmation, ConfirmError};
use crate::learner::{CounterexampleError, Hypothesis, Learner};
use crate::mbt::{run_conformance_round, ConformanceConfig, ConformanceTester, RoundOutcome};
use crate::monitor::{BugReport, DiscoveredBy, MonitorState};
use crate::spec::SpecSet;
use crate::sut::{
    Admission, Budget, QueryKind, QueryObserver, QueryStats, StepSignal, SutError, SutSim,
};
use crate::trace::Trace;

/// Which driver to run.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Bbc,
    LearnThenCheck,
}

/// Knobs of one engine run.
#[derive(Clone, Debug)]
pub struct BbcConfig {
    /// Monitors abort violating learning queries. Only effective in
    /// [`Mode::Bbc`]; the baseline never aborts.
    pub monitor_enabled: bool,
    pub budget: Budget,
    /// Conformance-test shape; its own seed field is overridden by `seed`.
    pub conformance: ConformanceConfig,
    /// Master seed for everything random in the run.
    pub seed: u64,
    pub mode: Mode,
}

impl Default for BbcConfig {
    fn default() -> BbcConfig {
        BbcConfig {
            monitor_enabled: true,
            budget: Budget::default(),
            conformance: ConformanceConfig::default(),
            seed: 0,
            mode: Mode::Bbc,
        }
    }
}

/// How one property ended.
#[derive(Clone, Debug)]
pub enum Resolution {
    Bug(BugReport),
    /// A conformance round passed while the final hypothesis satisfied the
    /// property.
    NoBugFound,
    /// The budget ended before the property could be decided.
    Unresolved,
}

impl Resolution {
    pub fn is_bug(&self) -> bool {
        matches!(self, Resolution::Bug(_))
    }

    pub fn bug(&self) -> Option<&BugReport> {
        match self {
            Resolution::Bug(r) => Some(r),
            _ => None,
        }
    }
}

/// Per-property result, with the bookkeeping both engine modes record
/// even when no monitor is active: when a violating trace first executed,
/// regardless of whether anything reacted to it.
#[derive(Clone, Debug)]
pub struct PropertyOutcome {
    pub name: String,
    pub resolution: Resolution,
    /// Global step index of the first violating prefix executed by a
    /// learning query.
    pub first_violation_learning_step: Option<u64>,
    /// Global step index of the first violating prefix executed by any
    /// query.
    pub first_violation_any_step: Option<u64>,
    /// 1-based ordinal of the first query that executed a violation.
    pub first_violation_query: Option<u64>,
}

/// Result of one engine run.
pub struct BbcOutcome {
    pub properties: Vec<PropertyOutcome>,
    pub final_hypothesis: Option<Hypothesis>,
    pub stats: QueryStats,
    /// Hypotheses the learner handed to the engine.
    pub hypotheses_emitted: u64,
    /// Baseline only: total queries when the first conformance round
    /// passed, the cost of learning the full model.
    pub queries_to_full_model: Option<u64>,
}

impl BbcOutcome {
    pub fn property(&self, name: &str) -> Option<&PropertyOutcome> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn bug_count(&self) -> usize {
        self.properties
            .iter()
            .filter(|p| p.resolution.is_bug())
            .count()
    }
}

/// A monitor bug waiting for the engine to collect it.
struct PendingBug {
    prop: usize,
    witness: Trace,
    position: usize,
    step: u64,
    stats: QueryStats,
}

struct BankEntry {
    monitor: MonitorState,
    /// No further aborts or reports once set; shadows keep recording.
    resolved: bool,
    shadow_learning: Option<u64>,
    shadow_any: Option<u64>,
    shadow_query: Option<u64>,
}

/// Observer that runs one monitor per property over every query, mirrors
/// the step counters so bug snapshots are exact, and tracks shadow
/// first-violation marks even when aborting is off.
struct MonitorBank {
    n_inputs: usize,
    entries: Vec<BankEntry>,
    abort_enabled: bool,
    kind: Option<QueryKind>,
    trace: Trace,
    mirror: QueryStats,
    query_ordinal: u64,
    pending: Vec<PendingBug>,
}

impl MonitorBank {
    fn new(specs: &SpecSet, n_inputs: usize, abort_enabled: bool) -> MonitorBank {
        MonitorBank {
            n_inputs,
            entries: specs
                .iter()
                .map(|s| BankEntry {
                    monitor: MonitorState::new(s),
                    resolved: false,
                    shadow_learning: None,
                    shadow_any: None,
                    shadow_query: None,
                })
                .collect(),
            abort_enabled,
            kind: None,
            trace: Trace::new(),
            mirror: QueryStats::default(),
            query_ordinal: 0,
            pending: Vec::new(),
        }
    }

    fn mark_resolved(&mut self, prop: usize) {
        self.entries[prop].resolved = true;
    }

    fn all_resolved(&self) -> bool {
        self.entries.iter().all(|e| e.resolved)
    }

    fn take_pending(&mut self) -> Vec<PendingBug> {
        core::mem::take(&mut self.pending)
    }
}

impl QueryObserver for MonitorBank {
    fn admit(&mut self, _kind: QueryKind) -> Admission {
        // With live monitors, the run is over once everything is resolved;
        // refusing further queries is how the learner finds out.
        if self.abort_enabled && self.all_resolved() {
            Admission::Interrupt
        } else {
            Admission::Proceed
        }
    }

    fn on_query_start(&mut self, kind: QueryKind) {
        self.kind = Some(kind);
        self.query_ordinal += 1;
        match kind {
            QueryKind::Learning => self.mirror.learning_queries += 1,
            QueryKind::Testing => self.mirror.testing_queries += 1,
        }
        self.trace = Trace::new();
        for e in &mut self.entries {
            e.monitor.reset();
        }
    }

    fn on_step(&mut self, input: crate::alphabet::Symbol, output: &crate::alphabet::Word, global_step: u64) -> StepSignal {
        let kind = self.kind.expect("step outside a query");
        match kind {
            QueryKind::Learning => self.mirror.learning_steps += 1,
            QueryKind::Testing => self.mirror.testing_steps += 1,
        }
        self.trace.push(input, output.clone());
        let mut abort = false;
        for (idx, e) in self.entries.iter_mut().enumerate() {
            let position = match e.monitor.observe_step(input, output, self.n_inputs) {
                Some(p) => p,
                None => continue,
            };
            if e.shadow_any.is_none() {
                e.shadow_any = Some(global_step);
            }
            if kind == QueryKind::Learning && e.shadow_learning.is_none() {
                e.shadow_learning = Some(global_step);
            }
            if e.shadow_query.is_none() {
                e.shadow_query = Some(self.query_ordinal);
            }
            if self.abort_enabled && kind == QueryKind::Learning && !e.resolved {
                e.resolved = true;
                let mut stats = self.mirror;
                stats.mark_bug_detected(global_step);
                self.pending.push(PendingBug {
                    prop: idx,
                    witness: self.trace.clone(),
                    position,
                    step: global_step,
                    stats,
                });
                abort = true;
            }
        }
        if abort {
            StepSignal::Abort
        } else {
            StepSignal::Continue
        }
    }

    fn on_query_end(&mut self, _kind: QueryKind, _aborted: bool) {
        self.kind = None;
    }
}

/// The trace step (1-based) whose input or output completes the
/// violation at interleaved `position`.
fn violating_step_of(witness: &Trace, position: usize) -> usize {
    let mut consumed = 0usize;
    for (k, (_, out)) in witness.steps().enumerate() {
        consumed += 1 + out.len();
        if consumed >= position {
            return k + 1;
        }
    }
    witness.len()
}

struct Engine<'a> {
    sut: &'a mut SutSim,
    specs: &'a SpecSet,
    inputs: Alphabet,
    bank: Rc<RefCell<MonitorBank>>,
    resolutions: Vec<Option<Resolution>>,
}

impl<'a> Engine<'a> {
    /// Moves monitor-found bugs from the bank into resolutions.
    fn drain_bank(&mut self) {
        let pending = self.bank.borrow_mut().take_pending();
        for p in pending {
            if self.resolutions[p.prop].is_some() {
                continue;
            }
            self.sut.mark_bug_detected(p.step);
            let interleaved = p.witness.interleaved(&self.inputs);
            self.resolutions[p.prop] = Some(Resolution::Bug(BugReport {
                property: String::from(self.specs.iter().nth(p.prop).unwrap().name()),
                witness: p.witness,
                interleaved,
                violation_position: p.position,
                discovered_by: DiscoveredBy::Monitor,
                step_index: p.step,
                stats_at_detection: p.stats,
            }));
        }
    }

    fn all_resolved(&self) -> bool {
        self.resolutions.iter().all(|r| r.is_some())
    }

    fn resolve_bug_by_confirmation(&mut self, idx: usize, trace: Trace, position: usize) {
        // A monitored confirmation query pends the same bug through the
        // bank first; that report, with its exact step, wins.
        self.drain_bank();
        if self.resolutions[idx].is_some() {
            return;
        }
        let steps_into = violating_step_of(&trace, position) as u64;
        let step_index = self.sut.stats().total_steps() - trace.len() as u64 + steps_into;
        self.sut.mark_bug_detected(step_index);
        let mut stats = *self.sut.stats();
        stats.mark_bug_detected(step_index);
        let interleaved = trace.interleaved(&self.inputs);
        self.resolutions[idx] = Some(Resolution::Bug(BugReport {
            property: String::from(self.specs.iter().nth(idx).unwrap().name()),
            witness: trace,
            interleaved,
            violation_position: position,
            discovered_by: DiscoveredBy::ModelCheckConfirmation,
            step_index,
            stats_at_detection: stats,
        }));
        self.bank.borrow_mut().mark_resolved(idx);
    }

    /// Model-checks every unresolved property against `h`. Returns a
    /// counterexample trace for the learner if a prediction turned out
    /// spurious, `Err` when the budget ended mid-phase.
    fn checking_phase(&mut self, h: &Hypothesis) -> Result<Option<Trace>, ()> {
        for idx in 0..self.specs.len() {
            if self.resolutions[idx].is_some() {
                continue;
            }
            let spec = self.specs.iter().nth(idx).unwrap();
            let verdict = check(h, spec).expect("alphabets agree");
            if verdict.is_satisfied() {
                continue;
            }
            match confirm_on_sut(&verdict, self.sut, spec) {
                Ok(Confirmation::Bug { trace, position }) => {
                    self.resolve_bug_by_confirmation(idx, trace, position);
                }
                Ok(Confirmation::Spurious { trace }) => {
                    // A monitor of another property may have aborted the
                    // confirmation; collect that before deciding.
                    self.drain_bank();
                    return Ok(Some(trace));
                }
                Err(ConfirmError::Sut(
                    SutError::BudgetExceeded { .. } | SutError::Interrupted,
                )) => return Err(()),
                Err(e) => panic!("confirmation failed: {e}"),
            }
        }
        Ok(None)
    }
}

fn run_engine(sut: &mut SutSim, specs: &SpecSet, cfg: &BbcConfig) -> BbcOutcome {
    assert!(
        *specs.joint() == *sut.machine().joint(),
        "properties and machine must share the joint alphabet"
    );
    let abort_enabled = cfg.monitor_enabled && cfg.mode == Mode::Bbc;
    sut.set_budget(cfg.budget);
    let inputs = sut.machine().inputs().clone();
    let bank = Rc::new(RefCell::new(MonitorBank::new(
        specs,
        inputs.len(),
        abort_enabled,
    )));
    sut.with_observer(bank.clone());
    sut.set_observe_testing(true);

    let mut learner = Learner::new(inputs.clone(), sut.machine().outputs().clone());
    let mut tester = ConformanceTester::new(ConformanceConfig {
        seed: cfg.seed,
        ..cfg.conformance
    });
    let mut engine = Engine {
        sut,
        specs,
        inputs,
        bank: bank.clone(),
        resolutions: vec![None; specs.len()],
    };
    let mut last_h: Option<Hypothesis> = None;
    let mut hypotheses_emitted = 0u64;
    let mut queries_to_full_model: Option<u64> = None;
    let mut checking = cfg.mode == Mode::Bbc;

    loop {
        match learner.refine(engine.sut) {
            Ok(h) => {
                hypotheses_emitted += 1;
                last_h = Some(h);
            }
            Err(SutError::BudgetExceeded { .. } | SutError::Interrupted) => break,
            Err(e) => panic!("learning failed: {e}"),
        }
        engine.drain_bank();
        if engine.all_resolved() {
            break;
        }
        let h = last_h.clone().unwrap();

        if checking {
            match engine.checking_phase(&h) {
                Ok(None) => {}
                Ok(Some(ce)) => {
                    match learner.process_counterexample(&ce, engine.sut) {
                        // An aborted confirmation can agree with the
                        // hypothesis on its executed prefix; the next
                        // round re-checks with the monitor now quiet.
                        Ok(()) | Err(CounterexampleError::NotACounterexample) => continue,
                        Err(CounterexampleError::Sut(
                            SutError::BudgetExceeded { .. } | SutError::Interrupted,
                        )) => break,
                        Err(e) => panic!("counterexample processing failed: {e}"),
                    }
                }
                Err(()) => break,
            }
            if engine.all_resolved() {
                break;
            }
        }

        match run_conformance_round(engine.sut, &h, &mut tester) {
            Ok(RoundOutcome::AllPass { .. }) => {
                if cfg.mode == Mode::LearnThenCheck && !checking {
                    // The model is as learned as testing can tell; from
                    // here the baseline checks like the full loop.
                    queries_to_full_model = Some(engine.sut.stats().total_queries());
                    checking = true;
                    continue;
                }
                for idx in 0..specs.len() {
                    if engine.resolutions[idx].is_none() {
                        engine.resolutions[idx] = Some(Resolution::NoBugFound);
                        bank.borrow_mut().mark_resolved(idx);
                    }
                }
                break;
            }
            Ok(RoundOutcome::Counterexample { trace, .. }) => {
                engine.drain_bank();
                match learner.process_counterexample(&trace, engine.sut) {
                    Ok(()) | Err(CounterexampleError::NotACounterexample) => continue,
                    Err(CounterexampleError::Sut(
                        SutError::BudgetExceeded { .. } | SutError::Interrupted,
                    )) => break,
                    Err(e) => panic!("counterexample processing failed: {e}"),
                }
            }
            Err(SutError::BudgetExceeded { .. } | SutError::Interrupted) => break,
            Err(e) => panic!("conformance testing failed: {e}"),
        }
    }

    // Budget sweep: the last hypothesis may already predict bugs for
    // properties the loop never got to confirm. Confirmation queries are
    // budget-exempt, so hits can still be verified.
    engine.drain_bank();
    if let Some(h) = &last_h {
        for idx in 0..specs.len() {
            if engine.resolutions[idx].is_some() {
                continue;
            }
            let spec = specs.iter().nth(idx).unwrap();
            let verdict = check(h, spec).expect("alphabets agree");
            if verdict.is_satisfied() {
                continue;
            }
            if let Ok(Confirmation::Bug { trace, position }) =
                confirm_on_sut(&verdict, engine.sut, spec)
            {
                engine.resolve_bug_by_confirmation(idx, trace, position);
            }
        }
    }
    engine.drain_bank();

    let resolutions = core::mem::take(&mut engine.resolutions);
    let stats = *engine.sut.stats();
    engine.sut.clear_observer();
    let bank = bank.borrow();
    let properties = specs
        .iter()
        .zip(resolutions)
        .zip(bank.entries.iter())
        .map(|((spec, res), entry)| PropertyOutcome {
            name: String::from(spec.name()),
            resolution: res.unwrap_or(Resolution::Unresolved),
            first_violation_learning_step: entry.shadow_learning,
            first_violation_any_step: entry.shadow_any,
            first_violation_query: entry.shadow_query,
        })
        .collect();
    BbcOutcome {
        properties,
        final_hypothesis: last_h,
        stats,
        hypotheses_emitted,
        queries_to_full_model,
    }
}

/// Runs the black-box checking loop until every property is resolved or
/// the budget ends.
pub fn run_bbc(sut: &mut SutSim, specs: &SpecSet, cfg: &BbcConfig) -> BbcOutcome {
    let cfg = BbcConfig {
        mode: Mode::Bbc,
        ..cfg.clone()
    };
    run_engine(sut, specs, &cfg)
}

/// Runs the learn-then-check baseline: monitors never abort and model
/// checking starts only after a conformance round has passed.
pub fn run_learn_then_check(sut: &mut SutSim, specs: &SpecSet, cfg: &BbcConfig) -> BbcOutcome {
    let cfg = BbcConfig {
        mode: Mode::LearnThenCheck,
        ..cfg.clone()
    };
    run_engine(sut, specs, &cfg)
}
