//! Translation between Mealy machines and DFAs over the joint alphabet.
//!
//! A machine whose transitions emit output words becomes a DFA in which an
//! input symbol either jumps straight to the target (empty output) or enters
//! a chain of auxiliary states that spell the output word one symbol at a
//! time. Auxiliary states are keyed by (pending output suffix, target
//! state) and shared between transitions, so two transitions that finish
//! with the same tail of outputs into the same state reuse one chain. All
//! states of the result are final: every prefix of machine behavior is
//! itself valid behavior.
//!
//! [`dfa_to_mealy`] inverts the construction on DFAs of that shape and
//! rejects anything else with the offending state.

use alloc::collections::btree_map::Entry;
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::alphabet::{Alphabet, Symbol, Word};
use crate::dfa::{Dfa, DfaBuilder, StateId};
use crate::mealy::{MealyBuilder, MealyError, MealyMachine};

/// Where a DFA state of a translated machine came from.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TranslatedState {
    /// A state of the source machine, with its original id.
    Original(StateId),
    /// An auxiliary state still owing `pending` output symbols before
    /// reaching `target`. The pending word is over the output alphabet and
    /// never empty.
    Aux { pending: Word, target: StateId },
}

/// A translated machine: the DFA plus the origin of each of its states.
#[derive(Clone, Debug)]
pub struct MealyDfa {
    pub dfa: Dfa,
    pub origin: Vec<TranslatedState>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error("state {0} mixes an output transition with other transitions")]
    MixedTransitions(u32),
    #[error("state {0} has more than one outgoing output transition")]
    OutputFanOut(u32),
    #[error("state {0} starts an output chain that never reaches an input state")]
    OutputCycle(u32),
    #[error("state {0} is not final; translated machines have only final states")]
    NonFinalState(u32),
    #[error("the initial state {0} is an output chain state")]
    InitialIsAux(u32),
    #[error("alphabet of the automaton does not split into the given inputs and outputs")]
    AlphabetMismatch,
    #[error(transparent)]
    Mealy(#[from] MealyError),
}

/// Translates a Mealy machine into a DFA over its joint alphabet.
///
/// States `0..n` of the result are the machine states under their own ids;
/// auxiliary chain states follow in first-use order, scanning transitions
/// by (state, input). The single start state is the machine's initial
/// state and every state is final.
pub fn mealy_to_dfa(m: &MealyMachine) -> MealyDfa {
    let joint = m.joint().clone();
    let shift = m.inputs().len() as u32;
    let n = m.n_states();

    // First pass: discover all auxiliary states in deterministic order.
    let mut aux_index: BTreeMap<(Word, StateId), StateId> = BTreeMap::new();
    let mut origin: Vec<TranslatedState> = (0..n)
        .map(|q| TranslatedState::Original(StateId(q as u32)))
        .collect();
    for (_, _, out, to) in m.transitions() {
        if out.is_empty() {
            continue;
        }
        for from in 0..out.len() {
            let pending = out.suffix_from(from);
            if let Entry::Vacant(slot) = aux_index.entry((pending.clone(), to)) {
                slot.insert(StateId(origin.len() as u32));
                origin.push(TranslatedState::Aux { pending, target: to });
            }
        }
    }

    let mut b = DfaBuilder::new(joint);
    for _ in 0..origin.len() {
        b.add_state(true);
    }
    b.set_initial(m.initial());
    for (q, i, out, to) in m.transitions() {
        let target = if out.is_empty() {
            to
        } else {
            aux_index[&(out.clone(), to)]
        };
        b.add_transition(q, i, target).expect("fresh transition");
    }
    for ((pending, target), id) in &aux_index {
        let head = Symbol(pending.get(0).unwrap().0 + shift);
        let next = if pending.len() == 1 {
            *target
        } else {
            aux_index[&(pending.suffix_from(1), *target)]
        };
        b.add_transition(*id, head, next).expect("fresh transition");
    }
    MealyDfa {
        dfa: b.build().expect("initial state exists"),
        origin,
    }
}

/// Rebuilds a Mealy machine from a DFA of the translated shape.
///
/// Each DFA state must either carry exactly one outgoing transition labeled
/// with an output symbol (a chain state), or only input-labeled transitions
/// (a machine state). The DFA alphabet must equal `inputs` followed by
/// `outputs`, and all states must be final. Machine states keep their
/// relative order.
pub fn dfa_to_mealy(
    d: &Dfa,
    inputs: &Alphabet,
    outputs: &Alphabet,
) -> Result<MealyMachine, TranslateError> {
    let joint = inputs
        .concat(outputs)
        .map_err(|_| TranslateError::AlphabetMismatch)?;
    if *d.alphabet() != joint {
        return Err(TranslateError::AlphabetMismatch);
    }
    let n_inputs = inputs.len() as u32;

    #[derive(Clone, Copy, PartialEq)]
    enum Shape {
        Machine,
        Chain { out: Symbol, next: StateId },
    }
    let mut shapes: Vec<Shape> = Vec::with_capacity(d.n_states());
    for q in 0..d.n_states() {
        let q = StateId(q as u32);
        if !d.is_final(q) {
            return Err(TranslateError::NonFinalState(q.0));
        }
        let mut out_edge: Option<(Symbol, StateId)> = None;
        let mut in_edges = 0usize;
        let mut out_edges = 0usize;
        for a in d.alphabet().symbols() {
            if let Some(to) = d.transition(q, a) {
                if a.0 < n_inputs {
                    in_edges += 1;
                } else {
                    out_edges += 1;
                    out_edge = Some((Symbol(a.0 - n_inputs), to));
                }
            }
        }
        let shape = match (in_edges, out_edges) {
            (_, 0) => Shape::Machine,
            (0, 1) => {
                let (out, next) = out_edge.unwrap();
                Shape::Chain { out, next }
            }
            (0, _) => return Err(TranslateError::OutputFanOut(q.0)),
            (_, _) => return Err(TranslateError::MixedTransitions(q.0)),
        };
        shapes.push(shape);
    }

    // Machine states keep their relative order under new dense ids.
    let mut mealy_id: Vec<Option<StateId>> = vec![None; d.n_states()];
    let mut machine_states: Vec<StateId> = Vec::new();
    for q in 0..d.n_states() {
        if shapes[q] == Shape::Machine {
            mealy_id[q] = Some(StateId(machine_states.len() as u32));
            machine_states.push(StateId(q as u32));
        }
    }
    let initial = mealy_id[d.initial().index()].ok_or(TranslateError::InitialIsAux(d.initial().0))?;

    let mut b = MealyBuilder::new(inputs.clone(), outputs.clone())?;
    for _ in 0..machine_states.len() {
        b.add_state();
    }
    b.set_initial(initial);
    for q in &machine_states {
        for a in inputs.symbols() {
            let Some(first) = d.transition(*q, a) else {
                continue;
            };
            // Follow the output chain to the next machine state.
            let mut word = Word::new();
            let mut cur = first;
            let mut hops = 0usize;
            let target = loop {
                match shapes[cur.index()] {
                    Shape::Machine => break mealy_id[cur.index()].unwrap(),
                    Shape::Chain { out, next } => {
                        word.push(out);
                        cur = next;
                        hops += 1;
                        if hops > d.n_states() {
                            return Err(TranslateError::OutputCycle(first.0));
                        }
                    }
                }
            };
            b.add_transition(mealy_id[q.index()].unwrap(), a, word, target)?;
        }
    }
    Ok(b.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Two states q, q'; "i" emits two "o"s into q', "j" emits one "o" into
    /// q', and q' loops on "j" silently.
    fn double_then_single() -> MealyMachine {
        let inputs = Alphabet::new(["i", "j"]).unwrap();
        let outputs = Alphabet::new(["o"]).unwrap();
        let i = inputs.get("i").unwrap();
        let j = inputs.get("j").unwrap();
        let oo = outputs.word(&["o", "o"]).unwrap();
        let o = outputs.word(&["o"]).unwrap();
        let mut b = MealyBuilder::new(inputs, outputs).unwrap();
        let q = b.add_state();
        let qp = b.add_state();
        b.set_initial(q);
        b.add_transition(q, i, oo, qp).unwrap();
        b.add_transition(q, j, o, qp).unwrap();
        b.add_transition(qp, j, Word::new(), qp).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn chains_with_a_common_tail_share_states() {
        // A translation with one fresh state per output symbol of each
        // transition would need 5 states here; sharing the single-"o" tail
        // between the two transitions gives 4.
        let m = double_then_single();
        let t = mealy_to_dfa(&m);
        assert_eq!(t.dfa.n_states(), 4);

        let joint = m.joint().clone();
        let d = &t.dfa;
        // q --i--> (oo,q'), q --j--> (o,q'), (oo,q') --o--> (o,q'),
        // (o,q') --o--> q', q' --j--> q'.
        assert_eq!(d.n_transitions(), 5);
        let i = joint.get("i").unwrap();
        let j = joint.get("j").unwrap();
        let o = joint.get("o").unwrap();
        let q = StateId(0);
        let qp = StateId(1);
        let aux_oo = d.transition(q, i).unwrap();
        let aux_o = d.transition(q, j).unwrap();
        assert_ne!(aux_oo, aux_o);
        assert_eq!(d.transition(aux_oo, o), Some(aux_o));
        assert_eq!(d.transition(aux_o, o), Some(qp));
        assert_eq!(d.transition(qp, j), Some(qp));
        assert!((0..4).all(|s| d.is_final(StateId(s))));
        assert_eq!(
            t.origin[aux_oo.index()],
            TranslatedState::Aux {
                pending: m.outputs().word(&["o", "o"]).unwrap(),
                target: qp
            }
        );
    }

    #[test]
    fn accepts_exactly_the_behavior_prefixes() {
        let m = double_then_single();
        let t = mealy_to_dfa(&m);
        let joint = m.joint().clone();
        for w in [
            vec![],
            vec!["i"],
            vec!["i", "o"],
            vec!["i", "o", "o"],
            vec!["i", "o", "o", "j"],
            vec!["j", "o", "j", "j"],
        ] {
            assert!(t.dfa.accepts(&joint.word(&w).unwrap()).unwrap(), "{w:?}");
        }
        for w in [
            vec!["o"],
            vec!["i", "i"],
            vec!["i", "j"],
            vec!["i", "o", "o", "o"],
            vec!["j", "j"],
        ] {
            assert!(!t.dfa.accepts(&joint.word(&w).unwrap()).unwrap(), "{w:?}");
        }
    }

    #[test]
    fn round_trip_restores_the_machine() {
        let m = double_then_single();
        let t = mealy_to_dfa(&m);
        let back = dfa_to_mealy(&t.dfa, m.inputs(), m.outputs()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_output_fan_out() {
        let inputs = Alphabet::new(["i"]).unwrap();
        let outputs = Alphabet::new(["o", "p"]).unwrap();
        let joint = inputs.concat(&outputs).unwrap();
        let mut b = DfaBuilder::new(joint.clone());
        let q0 = b.add_state(true);
        let q1 = b.add_state(true);
        b.set_initial(q0);
        b.add_transition(q1, joint.get("o").unwrap(), q0).unwrap();
        b.add_transition(q1, joint.get("p").unwrap(), q0).unwrap();
        b.add_transition(q0, joint.get("i").unwrap(), q1).unwrap();
        let d = b.build().unwrap();
        assert_eq!(
            dfa_to_mealy(&d, &inputs, &outputs),
            Err(TranslateError::OutputFanOut(1))
        );
    }

    #[test]
    fn rejects_output_cycles() {
        let inputs = Alphabet::new(["i"]).unwrap();
        let outputs = Alphabet::new(["o"]).unwrap();
        let joint = inputs.concat(&outputs).unwrap();
        let mut b = DfaBuilder::new(joint.clone());
        let q0 = b.add_state(true);
        let c1 = b.add_state(true);
        let c2 = b.add_state(true);
        b.set_initial(q0);
        b.add_transition(q0, joint.get("i").unwrap(), c1).unwrap();
        b.add_transition(c1, joint.get("o").unwrap(), c2).unwrap();
        b.add_transition(c2, joint.get("o").unwrap(), c1).unwrap();
        let d = b.build().unwrap();
        assert_eq!(
            dfa_to_mealy(&d, &inputs, &outputs),
            Err(TranslateError::OutputCycle(1))
        );
    }

    #[test]
    fn rejects_mixed_and_nonfinal_states() {
        let inputs = Alphabet::new(["i"]).unwrap();
        let outputs = Alphabet::new(["o"]).unwrap();
        let joint = inputs.concat(&outputs).unwrap();
        let mut b = DfaBuilder::new(joint.clone());
        let q0 = b.add_state(true);
        b.set_initial(q0);
        b.add_transition(q0, joint.get("i").unwrap(), q0).unwrap();
        b.add_transition(q0, joint.get("o").unwrap(), q0).unwrap();
        let d = b.build().unwrap();
        assert_eq!(
            dfa_to_mealy(&d, &inputs, &outputs),
            Err(TranslateError::MixedTransitions(0))
        );

        let mut b = DfaBuilder::new(joint.clone());
        let q0 = b.add_state(false);
        b.set_initial(q0);
        let d = b.build().unwrap();
        assert_eq!(
            dfa_to_mealy(&d, &inputs, &outputs),
            Err(TranslateError::NonFinalState(0))
        );
    }
}
