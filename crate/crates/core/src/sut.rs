//! The simulated system under test: a complete Mealy machine behind a
//! reset-and-query interface.
//!
//! Every query resets the machine and feeds it one input word, counting
//! queries and steps separately for learning and testing. A step budget is
//! enforced before a query starts, never in the middle of one; designated
//! confirmation queries bypass it, so a counterexample found at the edge of
//! the budget can still be verified. An optional observer watches every
//! step as it executes and may abort the query in flight, which is how
//! runtime monitors stop a run the moment it misbehaves.

use alloc::rc::Rc;
use core::cell::RefCell;

use thiserror::Error;

use crate::alphabet::{Symbol, Word};
use crate::dfa::StateId;
use crate::mealy::{MealyError, MealyMachine};
use crate::trace::Trace;

/// What a query is for; learning and testing are budgeted and counted
/// separately.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum QueryKind {
    Learning,
    Testing,
}

/// Query and step counters of one run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct QueryStats {
    pub learning_queries: u64,
    pub testing_queries: u64,
    pub learning_steps: u64,
    pub testing_steps: u64,
    /// Global step index at which the first bug was detected; once set it
    /// never changes.
    pub bug_detection_step: Option<u64>,
}

impl QueryStats {
    pub fn total_queries(&self) -> u64 {
        self.learning_queries + self.testing_queries
    }

    pub fn total_steps(&self) -> u64 {
        self.learning_steps + self.testing_steps
    }

    pub fn mark_bug_detected(&mut self, step: u64) {
        if self.bug_detection_step.is_none() {
            self.bug_detection_step = Some(step);
        }
    }
}

/// Limits on how much work a run may spend.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Budget {
    /// Combined learning and testing steps; a query that would cross the
    /// limit is refused before it starts.
    pub max_steps: Option<u64>,
    /// Cap on testing queries within one conformance round.
    pub max_testing_queries_per_round: Option<u64>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SutError {
    #[error("step budget exhausted: {used} used of {max}, next query needs {needed}")]
    BudgetExceeded { used: u64, max: u64, needed: u64 },
    #[error("run interrupted by the observer")]
    Interrupted,
    #[error("input symbol index {0} is out of range")]
    InputOutOfRange(u32),
    #[error(transparent)]
    Machine(#[from] MealyError),
}

/// Whether a step may proceed or the query must stop here.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StepSignal {
    Continue,
    Abort,
}

/// Whether a new query may start at all.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Admission {
    Proceed,
    Interrupt,
}

/// A tap on the query stream. Observers see each step as it executes and
/// can abort the current query or refuse new ones.
pub trait QueryObserver {
    /// Called before a query starts; `Interrupt` aborts the whole run.
    fn admit(&mut self, _kind: QueryKind) -> Admission {
        Admission::Proceed
    }

    fn on_query_start(&mut self, _kind: QueryKind) {}

    /// Called after each executed step with the global step index;
    /// `Abort` ends the query, keeping the step in the trace.
    fn on_step(&mut self, input: Symbol, output: &Word, global_step: u64) -> StepSignal;

    fn on_query_end(&mut self, _kind: QueryKind, _aborted: bool) {}
}

/// Shared handle to an observer.
pub type ObserverHandle = Rc<RefCell<dyn QueryObserver>>;

/// The simulated system under test.
pub struct SutSim {
    machine: MealyMachine,
    stats: QueryStats,
    budget: Budget,
    observer: Option<ObserverHandle>,
    observe_testing: bool,
}

impl SutSim {
    /// Wraps a machine; it must be complete over its input alphabet.
    pub fn new(machine: MealyMachine) -> Result<SutSim, MealyError> {
        if !machine.is_complete() {
            // Reuse the precise completeness error.
            for q in 0..machine.n_states() {
                for i in machine.inputs().symbols() {
                    if machine.step(StateId(q as u32), i).is_none() {
                        return Err(MealyError::NotComplete {
                            state: q as u32,
                            input: alloc::string::String::from(machine.inputs().text(i)),
                        });
                    }
                }
            }
        }
        Ok(SutSim {
            machine,
            stats: QueryStats::default(),
            budget: Budget::default(),
            observer: None,
            observe_testing: false,
        })
    }

    pub fn with_budget(mut self, budget: Budget) -> SutSim {
        self.budget = budget;
        self
    }

    pub fn set_budget(&mut self, budget: Budget) {
        self.budget = budget;
    }

    pub fn machine(&self) -> &MealyMachine {
        &self.machine
    }

    pub fn stats(&self) -> &QueryStats {
        &self.stats
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn mark_bug_detected(&mut self, step: u64) {
        self.stats.mark_bug_detected(step);
    }

    /// Installs the observer tap for subsequent queries.
    pub fn with_observer(&mut self, observer: ObserverHandle) {
        self.observer = Some(observer);
    }

    pub fn clear_observer(&mut self) {
        self.observer = None;
    }

    /// Whether testing queries are observed too; learning queries always
    /// are.
    pub fn set_observe_testing(&mut self, yes: bool) {
        self.observe_testing = yes;
    }

    fn observer_for(&self, kind: QueryKind) -> Option<ObserverHandle> {
        match kind {
            QueryKind::Learning => self.observer.clone(),
            QueryKind::Testing if self.observe_testing => self.observer.clone(),
            QueryKind::Testing => None,
        }
    }

    /// Starts a query session expected to run at most `planned` steps.
    /// Checks the step budget and asks the observer for admission.
    pub fn session(&mut self, kind: QueryKind, planned: usize) -> Result<Session<'_>, SutError> {
        if let Some(max) = self.budget.max_steps {
            let used = self.stats.total_steps();
            if used + planned as u64 > max {
                return Err(SutError::BudgetExceeded {
                    used,
                    max,
                    needed: planned as u64,
                });
            }
        }
        if let Some(obs) = self.observer_for(kind) {
            if obs.borrow_mut().admit(kind) == Admission::Interrupt {
                return Err(SutError::Interrupted);
            }
        }
        Ok(self.session_unchecked(kind))
    }

    fn session_unchecked(&mut self, kind: QueryKind) -> Session<'_> {
        match kind {
            QueryKind::Learning => self.stats.learning_queries += 1,
            QueryKind::Testing => self.stats.testing_queries += 1,
        }
        let observer = self.observer_for(kind);
        if let Some(obs) = &observer {
            obs.borrow_mut().on_query_start(kind);
        }
        let state = self.machine.initial();
        Session {
            sut: self,
            kind,
            state,
            observer,
            trace: Trace::new(),
            aborted: false,
        }
    }

    /// Resets the machine, runs the word, returns the observed trace. The
    /// trace is a prefix of the full run if the observer aborts.
    pub fn query(&mut self, w: &Word, kind: QueryKind) -> Result<Trace, SutError> {
        let mut s = self.session(kind, w.len())?;
        for i in w.iter() {
            match s.step(i)? {
                StepOutcome::Output(_) => {}
                StepOutcome::Aborted => break,
            }
        }
        Ok(s.finish())
    }

    /// A learning query that bypasses the budget and admission checks.
    /// Used to confirm counterexamples: verification may exceed the budget.
    pub fn confirmation_query(&mut self, w: &Word) -> Result<Trace, SutError> {
        let mut s = self.session_unchecked(QueryKind::Learning);
        for i in w.iter() {
            match s.step(i)? {
                StepOutcome::Output(_) => {}
                StepOutcome::Aborted => break,
            }
        }
        Ok(s.finish())
    }
}

/// Result of one executed step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StepOutcome {
    /// The output word the machine emitted.
    Output(Word),
    /// The observer aborted the query earlier; nothing was executed.
    Aborted,
}

/// An in-flight query. Each step sends one input symbol; dropping the
/// session without `finish` still leaves the counters correct.
pub struct Session<'a> {
    sut: &'a mut SutSim,
    kind: QueryKind,
    state: StateId,
    observer: Option<ObserverHandle>,
    trace: Trace,
    aborted: bool,
}

impl<'a> Session<'a> {
    pub fn aborted(&self) -> bool {
        self.aborted
    }

    pub fn steps_taken(&self) -> usize {
        self.trace.len()
    }

    /// Sends one input. The step is counted and recorded even when the
    /// observer aborts on it; only later steps are suppressed.
    pub fn step(&mut self, input: Symbol) -> Result<StepOutcome, SutError> {
        if self.aborted {
            return Ok(StepOutcome::Aborted);
        }
        if !self.sut.machine.inputs().contains(input) {
            return Err(SutError::InputOutOfRange(input.0));
        }
        let (to, out) = self
            .sut
            .machine
            .step(self.state, input)
            .expect("machine is complete");
        let out = out.clone();
        self.state = to;
        match self.kind {
            QueryKind::Learning => self.sut.stats.learning_steps += 1,
            QueryKind::Testing => self.sut.stats.testing_steps += 1,
        }
        self.trace.push(input, out.clone());
        if let Some(obs) = &self.observer {
            let global = self.sut.stats.total_steps();
            if obs.borrow_mut().on_step(input, &out, global) == StepSignal::Abort {
                self.aborted = true;
            }
        }
        Ok(StepOutcome::Output(out))
    }

    /// Ends the query and hands back the observed trace.
    pub fn finish(self) -> Trace {
        if let Some(obs) = &self.observer {
            obs.borrow_mut().on_query_end(self.kind, self.aborted);
        }
        self.trace
    }
}

/// Boxes a plain closure-style observer for tests.
pub struct FnObserver<F: FnMut(Symbol, &Word, u64) -> StepSignal>(pub F);

impl<F: FnMut(Symbol, &Word, u64) -> StepSignal> QueryObserver for FnObserver<F> {
    fn on_step(&mut self, input: Symbol, output: &Word, global_step: u64) -> StepSignal {
        (self.0)(input, output, global_step)
    }
}

/// Convenience constructor for observer handles.
pub fn observer_handle<O: QueryObserver + 'static>(obs: O) -> ObserverHandle {
    Rc::new(RefCell::new(obs))
}
