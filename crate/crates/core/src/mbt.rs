//! Model-based testing, in two flavors.
//!
//! The conformance tester drives the black-box checking loop: it derives
//! random tests from the current hypothesis (a random state's access word,
//! a geometric random infix, and a word separating the state reached from
//! another random state) and runs them on the machine until one disagrees
//! with the hypothesis or the test cap is reached. Since the machine here
//! is a simulation, a round with no cap is skipped outright when the
//! hypothesis is already equivalent to it, instead of testing forever.
//!
//! The standalone tester needs no hypothesis: it walks a property
//! automaton and the machine together, picking enabled inputs the property
//! allows, preferring inputs it has not tried at that property state yet,
//! and failing the moment an output falls outside the property. It is the
//! baseline black-box checking is measured against.

use alloc::vec::Vec;

use crate::alphabet::{Symbol, Word};
use crate::dfa::StateId;
use crate::learner::Hypothesis;
use crate::rng::{self, Prng};
use crate::spec::SpecDfa;
use crate::sut::{QueryKind, StepOutcome, SutError, SutSim};
use crate::trace::Trace;

/// Shape of the random conformance tests.
#[derive(Clone, Copy, Debug)]
pub struct ConformanceConfig {
    /// Mean of the geometric infix length distribution.
    pub expected_infix_length: f64,
    /// Cap on tests per round; `None` runs until a counterexample.
    pub max_tests: Option<u64>,
    pub seed: u64,
}

impl Default for ConformanceConfig {
    fn default() -> ConformanceConfig {
        ConformanceConfig {
            expected_infix_length: 10.0,
            max_tests: None,
            seed: 0,
        }
    }
}

/// Random-test generator over hypotheses. One tester owns one generator
/// stream, so rounds continue the sequence instead of repeating it.
pub struct ConformanceTester {
    cfg: ConformanceConfig,
    rng: Prng,
}

impl ConformanceTester {
    pub fn new(cfg: ConformanceConfig) -> ConformanceTester {
        let rng = rng::stream(cfg.seed, 1);
        ConformanceTester { cfg, rng }
    }

    pub fn config(&self) -> &ConformanceConfig {
        &self.cfg
    }

    /// Draws one test word: access word of a random state, then a random
    /// infix of geometric length, then a separating suffix between the
    /// state reached and another random state (empty for a one-state
    /// hypothesis).
    pub fn next_conformance_test(&mut self, h: &Hypothesis) -> Word {
        let n = h.n_states();
        let n_inputs = h.machine.inputs().len();
        let start = rng::uniform_index(&mut self.rng, n);
        let mut w = h.access[start].clone();
        let infix_len = rng::geometric_len(&mut self.rng, self.cfg.expected_infix_length);
        for _ in 0..infix_len {
            w.push(Symbol(rng::uniform_index(&mut self.rng, n_inputs) as u32));
        }
        if n > 1 {
            let reached = h.machine.state_after(&w).expect("hypothesis is complete");
            let pick = rng::uniform_index(&mut self.rng, n - 1);
            let other = if pick >= reached.index() { pick + 1 } else { pick };
            if let Some(suffix) = h.separator(reached, StateId(other as u32)) {
                w = w.concat(&suffix);
            }
        }
        w
    }
}

/// Result of one conformance round.
#[derive(Clone, Debug)]
pub enum RoundOutcome {
    /// No test disagreed with the hypothesis. `skipped` marks rounds
    /// decided by direct equivalence instead of testing.
    AllPass { tests_run: u64, skipped: bool },
    /// A test disagreed; the trace is a counterexample for the learner.
    Counterexample { trace: Trace, tests_run: u64 },
}

/// Runs testing queries against the machine until one disagrees with the
/// hypothesis or the cap is reached. The cap is the tighter of the
/// tester's and the budget's per-round limits; with no cap at all, the
/// round is skipped as passed when the hypothesis is equivalent to the
/// simulated machine, since no counterexample exists to find.
pub fn run_conformance_round(
    sut: &mut SutSim,
    h: &Hypothesis,
    tester: &mut ConformanceTester,
) -> Result<RoundOutcome, SutError> {
    let cap = match (
        tester.cfg.max_tests,
        sut.budget().max_testing_queries_per_round,
    ) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (Some(a), None) => Some(a),
        (None, b) => b,
    };
    if cap.is_none() && h.machine.separating_word(sut.machine())?.is_none() {
        return Ok(RoundOutcome::AllPass {
            tests_run: 0,
            skipped: true,
        });
    }
    let mut tests_run = 0u64;
    loop {
        if let Some(max) = cap {
            if tests_run >= max {
                return Ok(RoundOutcome::AllPass {
                    tests_run,
                    skipped: false,
                });
            }
        }
        let w = tester.next_conformance_test(h);
        let trace = sut.query(&w, QueryKind::Testing)?;
        tests_run += 1;
        let predicted = h.machine.run(&w).expect("hypothesis is complete");
        // An aborted query yields a prefix; disagreement within it is
        // still a counterexample, agreement decides nothing.
        let disagrees = trace
            .steps()
            .zip(predicted.steps())
            .any(|((ti, to), (pi, po))| ti != pi || to != po);
        if disagrees {
            return Ok(RoundOutcome::Counterexample { trace, tests_run });
        }
    }
}

/// Per-property-state record of inputs already tried, shared by all tests
/// of one suite.
#[derive(Clone, Debug)]
pub struct MbtMemory {
    tried: Vec<Vec<bool>>,
}

impl MbtMemory {
    pub fn new(n_spec_states: usize, n_inputs: usize) -> MbtMemory {
        MbtMemory {
            tried: alloc::vec![alloc::vec![false; n_inputs]; n_spec_states],
        }
    }

    pub fn tried(&self, state: StateId, input: Symbol) -> bool {
        self.tried[state.index()][input.index()]
    }

    fn mark(&mut self, state: StateId, input: Symbol) {
        self.tried[state.index()][input.index()] = true;
    }
}

/// Verdict of one derived test.
#[derive(Clone, Debug)]
pub enum TestVerdict {
    Pass,
    /// The machine left the property; `position` is 1-based in the
    /// interleaved word of the witness.
    Fail { witness: Trace, position: usize },
}

impl TestVerdict {
    pub fn failed(&self) -> bool {
        matches!(self, TestVerdict::Fail { .. })
    }
}

/// Derives one test from the property and runs it: at each property state,
/// pick uniformly an input the property allows, preferring untried ones;
/// send it; follow the property through every emitted output symbol. A
/// missing output transition fails the test at that symbol; `max_steps`
/// inputs or a state with no allowed inputs ends it as passed.
pub fn derive_and_run_test(
    sut: &mut SutSim,
    spec: &SpecDfa,
    mem: &mut MbtMemory,
    rng: &mut Prng,
    max_steps: usize,
) -> Result<TestVerdict, SutError> {
    let n_inputs = sut.machine().inputs().len();
    // The budget pre-check uses the worst case; a test may end earlier.
    let mut session = sut.session(QueryKind::Testing, max_steps)?;
    let mut q = spec.dfa().initial();
    let mut position = 0usize;
    for _ in 0..max_steps {
        let enabled: Vec<Symbol> = (0..n_inputs as u32)
            .map(Symbol)
            .filter(|i| spec.dfa().transition(q, *i).is_some())
            .collect();
        if enabled.is_empty() {
            break;
        }
        let untried: Vec<Symbol> = enabled
            .iter()
            .copied()
            .filter(|i| !mem.tried(q, *i))
            .collect();
        let pool = if untried.is_empty() { &enabled } else { &untried };
        let input = pool[rng::uniform_index(rng, pool.len())];
        mem.mark(q, input);
        let out = match session.step(input)? {
            StepOutcome::Output(out) => out,
            StepOutcome::Aborted => break,
        };
        position += 1;
        q = spec.dfa().transition(q, input).expect("input was enabled");
        let mut violated = None;
        for o in out.iter() {
            position += 1;
            match spec.dfa().transition(q, Symbol(o.0 + n_inputs as u32)) {
                Some(to) => q = to,
                None => {
                    violated = Some(position);
                    break;
                }
            }
        }
        if let Some(position) = violated {
            let witness = session.finish();
            let step = sut.stats().total_steps();
            sut.mark_bug_detected(step);
            return Ok(TestVerdict::Fail { witness, position });
        }
    }
    session.finish();
    Ok(TestVerdict::Pass)
}

/// Outcome of a standalone testing suite.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub found: bool,
    /// 1-based index of the failing test.
    pub tests_to_bug: Option<u64>,
    pub verdicts: Vec<TestVerdict>,
    /// The suite stopped early because the step budget refused a test.
    pub budget_exhausted: bool,
}

impl SuiteReport {
    pub fn tests_run(&self) -> u64 {
        self.verdicts.len() as u64
    }
}

/// Runs up to `n_tests` derived tests with shared memory, each at most
/// twice the property's state count in inputs, stopping at the first
/// failure.
pub fn run_mbt_suite(sut: &mut SutSim, spec: &SpecDfa, n_tests: u64, seed: u64) -> SuiteReport {
    let n_inputs = sut.machine().inputs().len();
    let mut mem = MbtMemory::new(spec.n_states(), n_inputs);
    let mut rng = rng::stream(seed, 2);
    let max_steps = 2 * spec.n_states();
    let mut report = SuiteReport {
        found: false,
        tests_to_bug: None,
        verdicts: Vec::new(),
        budget_exhausted: false,
    };
    for t in 1..=n_tests {
        match derive_and_run_test(sut, spec, &mut mem, &mut rng, max_steps) {
            Ok(v) => {
                let failed = v.failed();
                report.verdicts.push(v);
                if failed {
                    report.found = true;
                    report.tests_to_bug = Some(t);
                    break;
                }
            }
            Err(SutError::BudgetExceeded { .. }) => {
                report.budget_exhausted = true;
                break;
            }
            Err(_) => break,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::dfa::DfaBuilder;
    use crate::machines;
    use crate::monitor::check_trace;
    use crate::spec::{validate_spec, SpecDfa};
    use crate::sut::Budget;

    fn hyp(m: &crate::mealy::MealyMachine) -> Hypothesis {
        Hypothesis::from_machine(m.clone())
    }

    #[test]
    fn one_state_hypothesis_tests_are_pure_infixes() {
        let m = machines::responder(&["a", "b"], &["o"], &[("a", "o"), ("b", "o")]);
        let h = hyp(&m);
        let mut t = ConformanceTester::new(ConformanceConfig {
            seed: 7,
            ..ConformanceConfig::default()
        });
        let mut total = 0usize;
        for _ in 0..200 {
            let w = t.next_conformance_test(&h);
            assert!(w.iter().all(|s| s.index() < 2));
            total += w.len();
        }
        // Sample mean of the infix length near 10.
        let mean = total as f64 / 200.0;
        assert!((mean - 10.0).abs() < 2.0, "mean {mean}");
    }

    #[test]
    fn tests_are_deterministic_under_a_seed() {
        let m = machines::lock_machine(&machines::LockParams {
            secret: alloc::vec![0, 1],
            n_inputs: 2,
            shallow_bug: false,
        });
        let h = hyp(&m);
        let cfg = ConformanceConfig {
            seed: 11,
            ..ConformanceConfig::default()
        };
        let mut t1 = ConformanceTester::new(cfg);
        let mut t2 = ConformanceTester::new(cfg);
        for _ in 0..50 {
            assert_eq!(t1.next_conformance_test(&h), t2.next_conformance_test(&h));
        }
    }

    #[test]
    fn equivalent_hypothesis_skips_the_round() {
        let m = machines::responder(&["a"], &["o"], &[("a", "o")]);
        let mut sut = SutSim::new(m.clone()).unwrap();
        let mut t = ConformanceTester::new(ConformanceConfig::default());
        match run_conformance_round(&mut sut, &hyp(&m), &mut t).unwrap() {
            RoundOutcome::AllPass { tests_run, skipped } => {
                assert!(skipped);
                assert_eq!(tests_run, 0);
                assert_eq!(sut.stats().testing_queries, 0);
            }
            RoundOutcome::Counterexample { .. } => panic!("machines are equal"),
        }
    }

    #[test]
    fn round_finds_a_difference_and_it_is_genuine() {
        // Machine answers the secret with "win"; hypothesis thinks all "o".
        let m = machines::lock_machine(&machines::LockParams {
            secret: alloc::vec![1, 0],
            n_inputs: 2,
            shallow_bug: false,
        });
        let wrong = machines::responder(&["i0", "i1"], &["tick", "unlock", "buzz"], &[
            ("i0", "tick"),
            ("i1", "tick"),
        ]);
        let mut sut = SutSim::new(m).unwrap();
        let mut t = ConformanceTester::new(ConformanceConfig {
            seed: 3,
            max_tests: Some(10_000),
            ..ConformanceConfig::default()
        });
        let h = hyp(&wrong);
        match run_conformance_round(&mut sut, &h, &mut t).unwrap() {
            RoundOutcome::Counterexample { trace, .. } => {
                let predicted = h.machine.run(&trace.inputs()).unwrap();
                assert_ne!(predicted, trace);
            }
            RoundOutcome::AllPass { .. } => panic!("expected a counterexample"),
        }
    }

    /// Property allowing "go → ok" only.
    fn go_ok_spec(j: &Alphabet) -> SpecDfa {
        let mut b = DfaBuilder::new(j.clone());
        let q = b.add_state(true);
        b.set_initial(q);
        b.add_transition(q, j.get("go").unwrap(), q).unwrap();
        b.add_transition(q, j.get("ok").unwrap(), q).unwrap();
        validate_spec("go-ok", &b.build().unwrap(), j).unwrap()
    }

    #[test]
    fn crash_on_first_input_fails_at_position_two() {
        let m = machines::responder(&["go"], &["ok", "crash"], &[("go", "crash")]);
        let spec = go_ok_spec(m.joint());
        let mut sut = SutSim::new(m).unwrap();
        let mut mem = MbtMemory::new(spec.n_states(), 1);
        let mut rng = rng::stream(0, 2);
        match derive_and_run_test(&mut sut, &spec, &mut mem, &mut rng, 4).unwrap() {
            TestVerdict::Fail { witness, position } => {
                assert_eq!(position, 2);
                assert_eq!(check_trace(&spec, &witness, sut.machine().inputs()), Some(2));
            }
            TestVerdict::Pass => panic!("the first go crashes"),
        }
    }

    #[test]
    fn compliant_machine_passes_with_the_full_step_count() {
        let m = machines::responder(&["go"], &["ok", "crash"], &[("go", "ok")]);
        let spec = go_ok_spec(m.joint());
        let mut sut = SutSim::new(m).unwrap();
        let report = run_mbt_suite(&mut sut, &spec, 5, 9);
        assert!(!report.found);
        assert_eq!(report.tests_run(), 5);
        // Each test ran 2 x |spec states| = 2 inputs.
        assert_eq!(sut.stats().testing_steps, 10);
    }

    #[test]
    fn memory_covers_enabled_inputs_before_repeating() {
        let m = machines::responder(&["a", "b"], &["o"], &[("a", "o"), ("b", "o")]);
        let j = m.joint().clone();
        let mut b = DfaBuilder::new(j.clone());
        let q = b.add_state(true);
        b.set_initial(q);
        for t in ["a", "b", "o"] {
            b.add_transition(q, j.get(t).unwrap(), q).unwrap();
        }
        let spec = validate_spec("free", &b.build().unwrap(), &j).unwrap();
        let mut sut = SutSim::new(m).unwrap();
        let mut mem = MbtMemory::new(spec.n_states(), 2);
        let mut rng = rng::stream(1, 2);
        // One step per test: after two tests both inputs are marked tried.
        for _ in 0..2 {
            derive_and_run_test(&mut sut, &spec, &mut mem, &mut rng, 1).unwrap();
        }
        assert!(mem.tried(StateId(0), Symbol(0)));
        assert!(mem.tried(StateId(0), Symbol(1)));
    }

    #[test]
    fn suite_reports_budget_exhaustion() {
        let m = machines::responder(&["go"], &["ok"], &[("go", "ok")]);
        let j = m.joint().clone();
        let mut b = DfaBuilder::new(j.clone());
        let q = b.add_state(true);
        b.set_initial(q);
        b.add_transition(q, j.get("go").unwrap(), q).unwrap();
        b.add_transition(q, j.get("ok").unwrap(), q).unwrap();
        let spec = validate_spec("free", &b.build().unwrap(), &j).unwrap();
        let mut sut = SutSim::new(m).unwrap().with_budget(Budget {
            max_steps: Some(3),
            max_testing_queries_per_round: None,
        });
        // Each test plans 2 steps; the second is refused at 2 + 2 > 3.
        let report = run_mbt_suite(&mut sut, &spec, 10, 4);
        assert!(report.budget_exhausted);
        assert_eq!(report.tests_run(), 1);
    }
}
