//! Safety properties as prefix-closed DFAs over the joint alphabet.
//!
//! A valid property accepts the empty word, accepts every prefix of every
//! word it accepts, and carries no state that is off every accepting path.
//! [`validate_spec`] establishes those invariants or says precisely where
//! they fail. Properties can also be written negatively, as automata whose
//! final states mark forbidden behavior; [`bug_automaton_to_spec`] turns
//! such an automaton into a property, provided the forbidden states are
//! traps. [`split_io_dfa`] rewrites automata labeled with input/output
//! pairs onto the joint alphabet, and [`conjoin`] intersects a family of
//! properties into one.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::alphabet::{Alphabet, Symbol};
use crate::dfa::{Dfa, DfaBuilder, DfaError, StateId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("property rejects the empty word: the initial state is not final")]
    EmptyWordRejected,
    #[error("not prefix closed: nonfinal state {state} reaches final state {target} on {symbol:?}")]
    NotPrefixClosed {
        state: u32,
        symbol: String,
        target: u32,
    },
    #[error("bug state {state} is not a trap: it leaves the bug language on {symbol:?}")]
    NonTrappingBug { state: u32, symbol: String },
    #[error("label {0:?} is not an input/output pair")]
    NotAPairLabel(String),
    #[error("pair label {label:?} uses {text:?} which is not in the {side} alphabet")]
    PairSymbolUnknown {
        label: String,
        text: String,
        side: &'static str,
    },
    #[error("property alphabet mismatch: {0}")]
    Alphabet(String),
    #[error("no properties to conjoin")]
    Empty,
    #[error("duplicate property name {0:?}")]
    DuplicateName(String),
    #[error(transparent)]
    Dfa(#[from] DfaError),
}

/// A named, validated safety property.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpecDfa {
    name: String,
    dfa: Dfa,
}

impl SpecDfa {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// The underlying automaton: prefix closed, every state final and
    /// reachable.
    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }

    pub fn n_states(&self) -> usize {
        self.dfa.n_states()
    }
}

/// Checks that `dfa` is a well-formed safety property over `joint` and
/// trims it to the states that matter.
///
/// The automaton is first rebuilt over `joint` (same symbol texts, any
/// order). Validation then requires a final initial state and prefix
/// closure of every transition; afterwards nonfinal and unreachable states
/// are removed, which changes no accepted word.
pub fn validate_spec(name: &str, dfa: &Dfa, joint: &Alphabet) -> Result<SpecDfa, SpecError> {
    let dfa = dfa
        .reindexed(joint)
        .map_err(|e| SpecError::Alphabet(e.to_string()))?;
    if !dfa.is_final(dfa.initial()) {
        return Err(SpecError::EmptyWordRejected);
    }
    for (q, a, t) in dfa.transitions() {
        if dfa.is_final(t) && !dfa.is_final(q) {
            return Err(SpecError::NotPrefixClosed {
                state: q.0,
                symbol: String::from(joint.text(a)),
                target: t.0,
            });
        }
    }
    // In a prefix-closed automaton nonfinal states only reach nonfinal
    // states, so they reject exactly like a missing transition does.
    let reach = dfa.reachable();
    let keep: Vec<bool> = (0..dfa.n_states())
        .map(|q| reach[q] && dfa.is_final(StateId(q as u32)))
        .collect();
    let trimmed = dfa.restricted_to(&keep);
    Ok(SpecDfa {
        name: name.to_string(),
        dfa: trimmed,
    })
}

/// Turns an automaton whose final states mark forbidden behavior into a
/// safety property.
///
/// Every final state must be a trap: after completion, all its transitions
/// must stay final. The property is the complement of the completion,
/// validated like any other.
pub fn bug_automaton_to_spec(name: &str, bug: &Dfa, joint: &Alphabet) -> Result<SpecDfa, SpecError> {
    let bug = bug
        .reindexed(joint)
        .map_err(|e| SpecError::Alphabet(e.to_string()))?;
    let complete = bug.complete();
    for q in 0..bug.n_states() {
        let q = StateId(q as u32);
        if !complete.is_final(q) {
            continue;
        }
        for a in joint.symbols() {
            let t = complete.transition(q, a).unwrap();
            if !complete.is_final(t) {
                return Err(SpecError::NonTrappingBug {
                    state: q.0,
                    symbol: String::from(joint.text(a)),
                });
            }
        }
    }
    let spec = complete.complement().expect("completion is complete");
    validate_spec(name, &spec, joint)
}

/// Rewrites an automaton labeled with input/output pairs onto the joint
/// alphabet.
///
/// Pair labels have the form `input/output`. Each state keeps its
/// finality; for every (state, input) with pair transitions, one fresh
/// intermediate state carries the outputs, inheriting finality from its
/// source. The result is validated like any other property.
pub fn split_io_dfa(
    name: &str,
    pairs: &Dfa,
    inputs: &Alphabet,
    outputs: &Alphabet,
) -> Result<SpecDfa, SpecError> {
    let joint = inputs
        .concat(outputs)
        .map_err(|e| SpecError::Alphabet(e.to_string()))?;
    // Decode every pair label up front.
    let pair_alphabet = pairs.alphabet();
    let mut decoded: Vec<(Symbol, Symbol)> = Vec::with_capacity(pair_alphabet.len());
    for text in pair_alphabet.texts() {
        let Some((l, r)) = text.split_once('/') else {
            return Err(SpecError::NotAPairLabel(text.to_string()));
        };
        if l.is_empty() || r.is_empty() || r.contains('/') {
            return Err(SpecError::NotAPairLabel(text.to_string()));
        }
        let i = inputs.get(l).ok_or_else(|| SpecError::PairSymbolUnknown {
            label: text.to_string(),
            text: l.to_string(),
            side: "input",
        })?;
        let o = outputs.get(r).ok_or_else(|| SpecError::PairSymbolUnknown {
            label: text.to_string(),
            text: r.to_string(),
            side: "output",
        })?;
        decoded.push((i, o));
    }

    let shift = inputs.len() as u32;
    let mut b = DfaBuilder::new(joint.clone());
    for q in 0..pairs.n_states() {
        b.add_state(pairs.is_final(StateId(q as u32)));
    }
    b.set_initial(pairs.initial());
    // One intermediate per (state, input); two pairs with the same input
    // from one state share it, keeping the result deterministic.
    let mut mids: Vec<Vec<Option<StateId>>> = alloc::vec![alloc::vec![None; inputs.len()]; pairs.n_states()];
    for (q, label, to) in pairs.transitions() {
        let (i, o) = decoded[label.index()];
        let mid = match mids[q.index()][i.index()] {
            Some(m) => m,
            None => {
                let m = b.add_state(pairs.is_final(q));
                mids[q.index()][i.index()] = Some(m);
                b.add_transition(q, i, m)?;
                m
            }
        };
        b.add_transition(mid, Symbol(o.0 + shift), to)?;
    }
    let split = b.build()?;
    validate_spec(name, &split, &joint)
}

/// Builds the one-state property whose language is `allowed*`: any word
/// over the listed symbols is fine, any other symbol violates.
pub fn single_state_spec(
    name: &str,
    joint: &Alphabet,
    allowed: &[&str],
) -> Result<SpecDfa, SpecError> {
    let mut b = DfaBuilder::new(joint.clone());
    let q = b.add_state(true);
    b.set_initial(q);
    for text in allowed {
        let s = joint
            .get(text)
            .ok_or_else(|| SpecError::Alphabet(alloc::format!("unknown symbol {text:?}")))?;
        b.add_transition(q, s, q)?;
    }
    validate_spec(name, &b.build()?, joint)
}

/// Intersects a family of properties into one, as the iterated product of
/// their completions, then validates and trims the result.
pub fn conjoin(name: &str, specs: &[SpecDfa]) -> Result<SpecDfa, SpecError> {
    let mut iter = specs.iter();
    let first = iter.next().ok_or(SpecError::Empty)?;
    let joint = first.dfa.alphabet().clone();
    let mut acc = first.dfa.complete();
    for s in iter {
        acc = acc.product(&s.dfa.complete())?;
    }
    validate_spec(name, &acc, &joint)
}

/// An ordered family of properties over one joint alphabet, with unique
/// names. Iteration follows declaration order.
#[derive(Clone, Debug)]
pub struct SpecSet {
    specs: Vec<SpecDfa>,
    joint: Alphabet,
}

impl SpecSet {
    pub fn new(specs: Vec<SpecDfa>) -> Result<SpecSet, SpecError> {
        let first = specs.first().ok_or(SpecError::Empty)?;
        let joint = first.dfa.alphabet().clone();
        for s in &specs {
            if *s.dfa.alphabet() != joint {
                return Err(SpecError::Alphabet(s.name.clone()));
            }
        }
        for (k, s) in specs.iter().enumerate() {
            if specs[..k].iter().any(|t| t.name == s.name) {
                return Err(SpecError::DuplicateName(s.name.clone()));
            }
        }
        Ok(SpecSet { specs, joint })
    }

    pub fn joint(&self) -> &Alphabet {
        &self.joint
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SpecDfa> {
        self.specs.iter()
    }

    pub fn get(&self, name: &str) -> Option<&SpecDfa> {
        self.specs.iter().find(|s| s.name == name)
    }
}
