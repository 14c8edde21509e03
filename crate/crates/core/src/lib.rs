//! Core engine for black-box checking of reactive systems.
//!
//! The crate models systems under test as Mealy machines whose transitions
//! emit output *words*, and properties as prefix-closed safety DFAs over the
//! joint input/output alphabet. On top of those sit an active learner that
//! infers Mealy models from queries, a model checker that searches every
//! intermediate hypothesis for property violations, runtime monitors that
//! watch queries as they execute, and two bug-finding drivers: the
//! black-box checking loop and a classical learn-then-check baseline.
//!
//! Everything in here is `no_std` (with `alloc`) and fully deterministic:
//! collections iterate in a fixed order and all randomness flows from
//! explicitly seeded generators.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod alphabet;
pub mod bbc;
pub mod checker;
pub mod dfa;
pub mod learner;
pub mod machines;
pub mod mbt;
pub mod mealy;
pub mod monitor;
pub mod rng;
pub mod spec;
pub mod sut;
pub mod trace;
pub mod translate;

pub use alphabet::{Alphabet, Symbol, Word};
pub use bbc::{run_bbc, run_learn_then_check, BbcConfig, BbcOutcome, Mode, PropertyOutcome, Resolution};
pub use checker::{check, confirm_on_sut, CheckVerdict, Confirmation};
pub use dfa::{Dfa, DfaBuilder, DfaError, StateId};
pub use learner::{learn_with_perfect_oracle, Hypothesis, Learner};
pub use mbt::{
    run_conformance_round, run_mbt_suite, ConformanceConfig, ConformanceTester, MbtMemory,
    RoundOutcome, SuiteReport, TestVerdict,
};
pub use mealy::{minimize_and_isomorphic, MealyBuilder, MealyError, MealyMachine};
pub use monitor::{check_trace, BugReport, DiscoveredBy, MonitorState};
pub use spec::{bug_automaton_to_spec, conjoin, single_state_spec, split_io_dfa, validate_spec, SpecDfa, SpecError, SpecSet};
pub use sut::{Budget, QueryKind, QueryStats, SutError, SutSim};
pub use trace::Trace;
pub use translate::{dfa_to_mealy, mealy_to_dfa, MealyDfa, TranslateError, TranslatedState};
