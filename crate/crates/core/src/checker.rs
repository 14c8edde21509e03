//! Model checking a hypothesis against a safety property.
//!
//! A hypothesis satisfies a property when every behavior it can show lies
//! inside the property's language. [`check`] decides this by intersecting
//! the hypothesis's behavior automaton with the complement of the
//! property's completion: the product accepts exactly the hypothesis
//! behaviors the property rejects, so the hypothesis is clean iff the
//! product is empty, and otherwise a breadth-first search yields a
//! shortest offending word.
//!
//! A violation of the hypothesis is only a prediction about the real
//! machine. [`confirm_on_sut`] replays the input projection of the
//! predicted word on the machine itself: either the observed trace leaves
//! the property too, which is a real bug, or the machine answered
//! differently than the hypothesis, which is a counterexample for the
//! learner. A third case cannot occur: if the machine reproduces the
//! prediction exactly, the prediction's violation is in the trace.

use thiserror::Error;

use crate::alphabet::Word;
use crate::learner::Hypothesis;
use crate::monitor::check_trace;
use crate::spec::SpecDfa;
use crate::sut::{SutError, SutSim};
use crate::trace::Trace;
use crate::translate::mealy_to_dfa;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("hypothesis and property use different alphabets")]
    AlphabetMismatch,
}

/// Result of checking one hypothesis against one property.
#[derive(Clone, Debug)]
pub enum CheckVerdict {
    Satisfied,
    Unsatisfied {
        /// A shortest hypothesis behavior outside the property, over the
        /// joint alphabet, ties broken by alphabet order.
        word: Word,
        /// The input symbols of `word`, in order.
        inputs: Word,
        /// What the hypothesis answers on `inputs`.
        predicted: Trace,
    },
}

impl CheckVerdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, CheckVerdict::Satisfied)
    }
}

/// Decides whether every behavior of the hypothesis lies inside the
/// property, returning a shortest violating behavior when one exists.
pub fn check(h: &Hypothesis, spec: &SpecDfa) -> Result<CheckVerdict, CheckError> {
    if *spec.dfa().alphabet() != *h.machine.joint() {
        return Err(CheckError::AlphabetMismatch);
    }
    let behavior = mealy_to_dfa(&h.machine);
    let bad = spec
        .dfa()
        .complete()
        .complement()
        .expect("completion is complete");
    let product = behavior
        .dfa
        .product(&bad)
        .expect("alphabets were checked");
    match product.shortest_accepted() {
        None => Ok(CheckVerdict::Satisfied),
        Some(word) => {
            let n_inputs = h.machine.inputs().len();
            let inputs: Word = word.iter().filter(|s| s.index() < n_inputs).collect();
            let predicted = h.machine.run(&inputs).expect("hypothesis is complete");
            Ok(CheckVerdict::Unsatisfied {
                word,
                inputs,
                predicted,
            })
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfirmError {
    #[error("the verdict carries no counterexample to confirm")]
    NoCounterexample,
    #[error(transparent)]
    Sut(#[from] SutError),
}

/// What replaying a predicted violation on the real machine showed.
#[derive(Clone, Debug)]
pub enum Confirmation {
    /// The machine's own trace leaves the property: a real bug, with the
    /// 1-based violating position in the interleaved word.
    Bug { trace: Trace, position: usize },
    /// The machine disagreed with the hypothesis and stayed inside the
    /// property; the trace is a counterexample for the learner.
    Spurious { trace: Trace },
}

/// Replays an unsatisfied verdict's inputs on the machine under test, as
/// a confirmation query, and classifies the observed trace.
pub fn confirm_on_sut(
    verdict: &CheckVerdict,
    sut: &mut SutSim,
    spec: &SpecDfa,
) -> Result<Confirmation, ConfirmError> {
    let (inputs, predicted) = match verdict {
        CheckVerdict::Satisfied => return Err(ConfirmError::NoCounterexample),
        CheckVerdict::Unsatisfied {
            inputs, predicted, ..
        } => (inputs, predicted),
    };
    let trace = sut.confirmation_query(inputs)?;
    match check_trace(spec, &trace, sut.machine().inputs()) {
        Some(position) => Ok(Confirmation::Bug { trace, position }),
        None => {
            // The property is prefix closed, so a trace reproducing the
            // prediction would contain the predicted violation.
            assert!(
                trace != *predicted,
                "a trace matching a violating prediction must violate"
            );
            Ok(Confirmation::Spurious { trace })
        }
    }
}
