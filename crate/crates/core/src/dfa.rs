//! Partial deterministic finite automata and the operations the model
//! checker is built from.
//!
//! Transitions are partial: a run that reads a symbol with no outgoing
//! transition rejects on the spot. [`Dfa::complete`] turns a partial
//! automaton into a total one by routing every missing transition into a
//! fresh nonfinal sink, [`Dfa::complement`] flips acceptance of a complete
//! automaton, and [`Dfa::product`] intersects two automata over the same
//! alphabet. [`Dfa::shortest_accepted`] extracts a shortest accepted word,
//! breaking ties towards earlier alphabet entries, which is what makes
//! counterexamples reproducible run over run.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::alphabet::{Alphabet, Symbol, Word};

/// Index of a state inside one automaton.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DfaError {
    #[error("symbol {0:?} is not in the alphabet")]
    SymbolNotInAlphabet(String),
    #[error("symbol index {0} is out of range for the alphabet")]
    SymbolOutOfRange(u32),
    #[error("state {0} is out of range")]
    StateOutOfRange(u32),
    #[error("automaton is not complete: state {state} has no transition on symbol {symbol:?}")]
    NotComplete { state: u32, symbol: String },
    #[error("duplicate transition from state {state} on symbol {symbol:?}")]
    Nondeterministic { state: u32, symbol: String },
    #[error("no initial state set")]
    NoInitial,
    #[error("alphabets differ")]
    AlphabetMismatch,
}

/// A deterministic finite automaton with a partial transition function.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Dfa {
    alphabet: Alphabet,
    initial: StateId,
    finals: Vec<bool>,
    delta: Vec<Vec<Option<StateId>>>,
}

/// Incremental constructor for [`Dfa`].
pub struct DfaBuilder {
    alphabet: Alphabet,
    initial: Option<StateId>,
    finals: Vec<bool>,
    delta: Vec<Vec<Option<StateId>>>,
}

impl DfaBuilder {
    pub fn new(alphabet: Alphabet) -> DfaBuilder {
        DfaBuilder {
            alphabet,
            initial: None,
            finals: Vec::new(),
            delta: Vec::new(),
        }
    }

    /// Adds a state and returns its id; ids are assigned densely from zero.
    pub fn add_state(&mut self, is_final: bool) -> StateId {
        self.finals.push(is_final);
        self.delta.push(vec![None; self.alphabet.len()]);
        StateId(self.finals.len() as u32 - 1)
    }

    pub fn set_initial(&mut self, q: StateId) {
        self.initial = Some(q);
    }

    pub fn add_transition(&mut self, from: StateId, on: Symbol, to: StateId) -> Result<(), DfaError> {
        if from.index() >= self.delta.len() {
            return Err(DfaError::StateOutOfRange(from.0));
        }
        if to.index() >= self.delta.len() {
            return Err(DfaError::StateOutOfRange(to.0));
        }
        if !self.alphabet.contains(on) {
            return Err(DfaError::SymbolOutOfRange(on.0));
        }
        let slot = &mut self.delta[from.index()][on.index()];
        if slot.is_some() {
            return Err(DfaError::Nondeterministic {
                state: from.0,
                symbol: String::from(self.alphabet.text(on)),
            });
        }
        *slot = Some(to);
        Ok(())
    }

    pub fn build(self) -> Result<Dfa, DfaError> {
        let initial = self.initial.ok_or(DfaError::NoInitial)?;
        if initial.index() >= self.finals.len() {
            return Err(DfaError::StateOutOfRange(initial.0));
        }
        Ok(Dfa {
            alphabet: self.alphabet,
            initial,
            finals: self.finals,
            delta: self.delta,
        })
    }
}

impl Dfa {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n_states(&self) -> usize {
        self.finals.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q.index()]
    }

    pub fn transition(&self, q: StateId, on: Symbol) -> Option<StateId> {
        self.delta[q.index()][on.index()]
    }

    /// All defined transitions in (source, symbol) order.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, Symbol, StateId)> + '_ {
        self.delta.iter().enumerate().flat_map(|(q, row)| {
            row.iter().enumerate().filter_map(move |(a, t)| {
                t.map(|to| (StateId(q as u32), Symbol(a as u32), to))
            })
        })
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions().count()
    }

    pub fn is_complete(&self) -> bool {
        self.delta.iter().all(|row| row.iter().all(|t| t.is_some()))
    }

    /// The state reached by reading `w` from the initial state, or `None`
    /// if the run falls off a missing transition.
    pub fn state_after(&self, w: &Word) -> Result<Option<StateId>, DfaError> {
        let mut q = self.initial;
        for s in w.iter() {
            if !self.alphabet.contains(s) {
                return Err(DfaError::SymbolOutOfRange(s.0));
            }
            match self.transition(q, s) {
                Some(next) => q = next,
                None => return Ok(None),
            }
        }
        Ok(Some(q))
    }

    /// Whether the automaton accepts `w`. A run over a missing transition
    /// rejects.
    pub fn accepts(&self, w: &Word) -> Result<bool, DfaError> {
        Ok(match self.state_after(w)? {
            Some(q) => self.is_final(q),
            None => false,
        })
    }

    /// Adds a fresh nonfinal sink state and routes every missing transition
    /// into it. The sink is added even when no transition is missing, so the
    /// result always has one state more than the input.
    pub fn complete(&self) -> Dfa {
        let sink = StateId(self.n_states() as u32);
        let mut delta: Vec<Vec<Option<StateId>>> = self
            .delta
            .iter()
            .map(|row| row.iter().map(|t| t.or(Some(sink))).collect())
            .collect();
        delta.push(vec![Some(sink); self.alphabet.len()]);
        let mut finals = self.finals.clone();
        finals.push(false);
        Dfa {
            alphabet: self.alphabet.clone(),
            initial: self.initial,
            finals,
            delta,
        }
    }

    /// Flips final and nonfinal states. Defined only for complete automata;
    /// on a partial automaton the missing transitions would change language
    /// rather than complement it.
    pub fn complement(&self) -> Result<Dfa, DfaError> {
        for (q, row) in self.delta.iter().enumerate() {
            for (a, t) in row.iter().enumerate() {
                if t.is_none() {
                    return Err(DfaError::NotComplete {
                        state: q as u32,
                        symbol: String::from(self.alphabet.text(Symbol(a as u32))),
                    });
                }
            }
        }
        let mut out = self.clone();
        for f in &mut out.finals {
            *f = !*f;
        }
        Ok(out)
    }

    /// Pair construction for language intersection. Only pairs reachable
    /// from the initial pair are materialized, in breadth-first discovery
    /// order; a pair transition exists only where both operands move.
    pub fn product(&self, other: &Dfa) -> Result<Dfa, DfaError> {
        if self.alphabet != other.alphabet {
            return Err(DfaError::AlphabetMismatch);
        }
        let mut index: Vec<Vec<Option<StateId>>> =
            vec![vec![None; other.n_states()]; self.n_states()];
        let mut states: Vec<(StateId, StateId)> = Vec::new();
        let mut queue: usize = 0;
        let start = (self.initial, other.initial);
        index[start.0.index()][start.1.index()] = Some(StateId(0));
        states.push(start);
        let mut delta: Vec<Vec<Option<StateId>>> = Vec::new();
        let mut finals: Vec<bool> = Vec::new();
        while queue < states.len() {
            let (p, q) = states[queue];
            queue += 1;
            finals.push(self.is_final(p) && other.is_final(q));
            let mut row = vec![None; self.alphabet.len()];
            for a in self.alphabet.symbols() {
                if let (Some(pn), Some(qn)) = (self.transition(p, a), other.transition(q, a)) {
                    let slot = &mut index[pn.index()][qn.index()];
                    let id = match *slot {
                        Some(id) => id,
                        None => {
                            let id = StateId(states.len() as u32);
                            *slot = Some(id);
                            states.push((pn, qn));
                            id
                        }
                    };
                    row[a.index()] = Some(id);
                }
            }
            delta.push(row);
        }
        Ok(Dfa {
            alphabet: self.alphabet.clone(),
            initial: StateId(0),
            finals,
            delta,
        })
    }

    /// A shortest accepted word, with ties broken towards symbols earlier in
    /// the alphabet; `None` when the language is empty. Runs in time linear
    /// in the size of the automaton.
    pub fn shortest_accepted(&self) -> Option<Word> {
        if self.is_final(self.initial) {
            return Some(Word::new());
        }
        let mut parent: Vec<Option<(StateId, Symbol)>> = vec![None; self.n_states()];
        let mut seen = vec![false; self.n_states()];
        seen[self.initial.index()] = true;
        let mut queue: Vec<StateId> = vec![self.initial];
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            for a in self.alphabet.symbols() {
                if let Some(next) = self.transition(q, a) {
                    if seen[next.index()] {
                        continue;
                    }
                    seen[next.index()] = true;
                    parent[next.index()] = Some((q, a));
                    if self.is_final(next) {
                        let mut rev: Vec<Symbol> = Vec::new();
                        let mut cur = next;
                        while let Some((prev, sym)) = parent[cur.index()] {
                            rev.push(sym);
                            cur = prev;
                        }
                        rev.reverse();
                        return Some(Word::from_symbols(rev));
                    }
                    queue.push(next);
                }
            }
        }
        None
    }

    /// Whether the accepted language is empty.
    pub fn is_empty_language(&self) -> bool {
        self.shortest_accepted().is_none()
    }

    /// Marks states reachable from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n_states()];
        seen[self.initial.index()] = true;
        let mut stack = vec![self.initial];
        while let Some(q) = stack.pop() {
            for a in self.alphabet.symbols() {
                if let Some(next) = self.transition(q, a) {
                    if !seen[next.index()] {
                        seen[next.index()] = true;
                        stack.push(next);
                    }
                }
            }
        }
        seen
    }

    /// Restricts the automaton to the states marked in `keep`, dropping
    /// transitions into removed states. The initial state must be kept.
    pub(crate) fn restricted_to(&self, keep: &[bool]) -> Dfa {
        let mut map: Vec<Option<StateId>> = vec![None; self.n_states()];
        let mut next = 0u32;
        for (q, k) in keep.iter().enumerate() {
            if *k {
                map[q] = Some(StateId(next));
                next += 1;
            }
        }
        let initial = map[self.initial.index()].expect("initial state must be kept");
        let mut finals = Vec::new();
        let mut delta = Vec::new();
        for q in 0..self.n_states() {
            if map[q].is_none() {
                continue;
            }
            finals.push(self.finals[q]);
            delta.push(
                self.delta[q]
                    .iter()
                    .map(|t| t.and_then(|to| map[to.index()]))
                    .collect(),
            );
        }
        Dfa {
            alphabet: self.alphabet.clone(),
            initial,
            finals,
            delta,
        }
    }

    /// Rebuilds the automaton over `target`, which must contain the same
    /// symbol texts, possibly in a different order.
    pub fn reindexed(&self, target: &Alphabet) -> Result<Dfa, DfaError> {
        if target.len() != self.alphabet.len() {
            return Err(DfaError::AlphabetMismatch);
        }
        let mut map: Vec<usize> = Vec::with_capacity(self.alphabet.len());
        for t in self.alphabet.texts() {
            match target.get(t) {
                Some(s) => map.push(s.index()),
                None => return Err(DfaError::SymbolNotInAlphabet(String::from(t))),
            }
        }
        let delta = self
            .delta
            .iter()
            .map(|row| {
                let mut new_row = vec![None; target.len()];
                for (a, t) in row.iter().enumerate() {
                    new_row[map[a]] = *t;
                }
                new_row
            })
            .collect();
        Ok(Dfa {
            alphabet: target.clone(),
            initial: self.initial,
            finals: self.finals.clone(),
            delta,
        })
    }
}
