//! Mealy machines whose transitions emit output words.
//!
//! The transition and output functions are a single partial map: a
//! transition is defined exactly when its output word is, and an empty
//! output word is ordinary behavior, distinct from an undefined transition.
//! Input and output alphabets must not share symbol texts.
//!
//! Besides running words, the module knows how to compare machines: state
//! equivalence tables with separating words, language equivalence of
//! complete machines, partition-refinement minimization, and the
//! minimize-then-match check [`minimize_and_isomorphic`] used to decide
//! whether a learned model is the machine it was learned from.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError, Symbol, Word};
use crate::dfa::StateId;
use crate::trace::Trace;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MealyError {
    #[error("input symbol index {0} is out of range")]
    InputOutOfRange(u32),
    #[error("output symbol index {0} is out of range")]
    OutputOutOfRange(u32),
    #[error("state {0} is out of range")]
    StateOutOfRange(u32),
    #[error("transition already defined from state {state} on input {input:?}")]
    DuplicateTransition { state: u32, input: String },
    #[error("no initial state set")]
    NoInitial,
    #[error("machine is not complete: state {state} has no transition on input {input:?}")]
    NotComplete { state: u32, input: String },
    #[error("undefined transition from state {state} on input {input:?} at step {at}")]
    UndefinedTransition { state: u32, input: String, at: usize },
    #[error("alphabets differ")]
    AlphabetMismatch,
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

/// A Mealy machine over disjoint input and output alphabets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MealyMachine {
    inputs: Alphabet,
    outputs: Alphabet,
    joint: Alphabet,
    initial: StateId,
    trans: Vec<Vec<Option<(StateId, Word)>>>,
}

/// Incremental constructor for [`MealyMachine`].
pub struct MealyBuilder {
    inputs: Alphabet,
    outputs: Alphabet,
    joint: Alphabet,
    initial: Option<StateId>,
    trans: Vec<Vec<Option<(StateId, Word)>>>,
}

impl MealyBuilder {
    /// Starts a machine; fails if the alphabets share a symbol text.
    pub fn new(inputs: Alphabet, outputs: Alphabet) -> Result<MealyBuilder, MealyError> {
        let joint = inputs.concat(&outputs)?;
        Ok(MealyBuilder {
            inputs,
            outputs,
            joint,
            initial: None,
            trans: Vec::new(),
        })
    }

    pub fn add_state(&mut self) -> StateId {
        self.trans.push(vec![None; self.inputs.len()]);
        StateId(self.trans.len() as u32 - 1)
    }

    pub fn set_initial(&mut self, q: StateId) {
        self.initial = Some(q);
    }

    /// Defines one transition; the output word may be empty.
    pub fn add_transition(
        &mut self,
        from: StateId,
        input: Symbol,
        output: Word,
        to: StateId,
    ) -> Result<(), MealyError> {
        if from.index() >= self.trans.len() {
            return Err(MealyError::StateOutOfRange(from.0));
        }
        if to.index() >= self.trans.len() {
            return Err(MealyError::StateOutOfRange(to.0));
        }
        if !self.inputs.contains(input) {
            return Err(MealyError::InputOutOfRange(input.0));
        }
        for o in output.iter() {
            if !self.outputs.contains(o) {
                return Err(MealyError::OutputOutOfRange(o.0));
            }
        }
        let slot = &mut self.trans[from.index()][input.index()];
        if slot.is_some() {
            return Err(MealyError::DuplicateTransition {
                state: from.0,
                input: String::from(self.inputs.text(input)),
            });
        }
        *slot = Some((to, output));
        Ok(())
    }

    pub fn build(self) -> Result<MealyMachine, MealyError> {
        let initial = self.initial.ok_or(MealyError::NoInitial)?;
        if initial.index() >= self.trans.len() {
            return Err(MealyError::StateOutOfRange(initial.0));
        }
        Ok(MealyMachine {
            inputs: self.inputs,
            outputs: self.outputs,
            joint: self.joint,
            initial,
            trans: self.trans,
        })
    }
}

impl MealyMachine {
    pub fn inputs(&self) -> &Alphabet {
        &self.inputs
    }

    pub fn outputs(&self) -> &Alphabet {
        &self.outputs
    }

    /// The joint alphabet: inputs first, then outputs.
    pub fn joint(&self) -> &Alphabet {
        &self.joint
    }

    pub fn n_states(&self) -> usize {
        self.trans.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    /// Target and output word of a transition, if defined.
    pub fn step(&self, q: StateId, input: Symbol) -> Option<(StateId, &Word)> {
        self.trans[q.index()][input.index()]
            .as_ref()
            .map(|(to, out)| (*to, out))
    }

    /// All defined transitions in (source, input) order.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, Symbol, &Word, StateId)> + '_ {
        self.trans.iter().enumerate().flat_map(|(q, row)| {
            row.iter().enumerate().filter_map(move |(i, t)| {
                t.as_ref()
                    .map(|(to, out)| (StateId(q as u32), Symbol(i as u32), out, *to))
            })
        })
    }

    pub fn is_complete(&self) -> bool {
        self.trans.iter().all(|row| row.iter().all(|t| t.is_some()))
    }

    fn require_complete(&self) -> Result<(), MealyError> {
        for (q, row) in self.trans.iter().enumerate() {
            for (i, t) in row.iter().enumerate() {
                if t.is_none() {
                    return Err(MealyError::NotComplete {
                        state: q as u32,
                        input: String::from(self.inputs.text(Symbol(i as u32))),
                    });
                }
            }
        }
        Ok(())
    }

    /// Runs an input word from the initial state and records the trace.
    /// Reading an input with no defined transition is an error, not an
    /// empty output.
    pub fn run(&self, w: &Word) -> Result<Trace, MealyError> {
        self.trace_from(self.initial, w)
    }

    /// Runs an input word from an arbitrary state.
    pub fn trace_from(&self, from: StateId, w: &Word) -> Result<Trace, MealyError> {
        if from.index() >= self.n_states() {
            return Err(MealyError::StateOutOfRange(from.0));
        }
        let mut q = from;
        let mut trace = Trace::new();
        for (at, i) in w.iter().enumerate() {
            if !self.inputs.contains(i) {
                return Err(MealyError::InputOutOfRange(i.0));
            }
            match self.step(q, i) {
                Some((to, out)) => {
                    trace.push(i, out.clone());
                    q = to;
                }
                None => {
                    return Err(MealyError::UndefinedTransition {
                        state: q.0,
                        input: String::from(self.inputs.text(i)),
                        at,
                    })
                }
            }
        }
        Ok(trace)
    }

    /// The state reached after reading `w`, or `None` off a missing
    /// transition.
    pub fn state_after(&self, w: &Word) -> Option<StateId> {
        let mut q = self.initial;
        for i in w.iter() {
            match self.step(q, i) {
                Some((to, _)) => q = to,
                None => return None,
            }
        }
        Some(q)
    }

    /// Breadth-first access words: for every reachable state, a shortest
    /// input word reaching it, ties broken by input order. Unreachable
    /// states get `None`.
    pub fn access_words(&self) -> Vec<Option<Word>> {
        let mut acc: Vec<Option<Word>> = vec![None; self.n_states()];
        acc[self.initial.index()] = Some(Word::new());
        let mut queue = vec![self.initial];
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            for i in self.inputs.symbols() {
                if let Some((to, _)) = self.step(q, i) {
                    if acc[to.index()].is_none() {
                        let w = acc[q.index()].as_ref().unwrap().appended(i);
                        acc[to.index()] = Some(w);
                        queue.push(to);
                    }
                }
            }
        }
        acc
    }

    /// Language equivalence of two complete machines over the same
    /// alphabets. Returns a shortest separating input word, ties towards
    /// earlier inputs, or `None` when equivalent.
    pub fn separating_word(&self, other: &MealyMachine) -> Result<Option<Word>, MealyError> {
        if self.inputs != other.inputs || self.outputs != other.outputs {
            return Err(MealyError::AlphabetMismatch);
        }
        self.require_complete()?;
        other.require_complete()?;
        let mut seen = vec![false; self.n_states() * other.n_states()];
        let key = |p: StateId, q: StateId| p.index() * other.n_states() + q.index();
        let start = (self.initial, other.initial);
        seen[key(start.0, start.1)] = true;
        let mut queue: Vec<(StateId, StateId, Word)> = vec![(start.0, start.1, Word::new())];
        let mut head = 0;
        while head < queue.len() {
            let (p, q, w) = queue[head].clone();
            head += 1;
            for i in self.inputs.symbols() {
                let (pt, po) = self.step(p, i).unwrap();
                let (qt, qo) = other.step(q, i).unwrap();
                if po != qo {
                    return Ok(Some(w.appended(i)));
                }
                if !seen[key(pt, qt)] {
                    seen[key(pt, qt)] = true;
                    queue.push((pt, qt, w.appended(i)));
                }
            }
        }
        Ok(None)
    }
}

// The input to apply and, transitively, the successor pair to continue
// with; `None` marks an equivalent pair.
type PairMark = Option<(Symbol, Option<(StateId, StateId)>)>;

/// Pairwise state-distinguishing table of one complete machine, with a
/// separating input word for every distinguishable pair.
#[derive(Clone)]
pub struct SeparatorTable {
    n: usize,
    mark: Vec<PairMark>,
}

impl SeparatorTable {
    fn slot(&self, p: StateId, q: StateId) -> usize {
        let (a, b) = if p.0 <= q.0 { (p, q) } else { (q, p) };
        a.index() * self.n + b.index()
    }

    /// Fills the table by synchronized rounds, so every recorded separator
    /// has minimal length.
    pub fn build(m: &MealyMachine) -> Result<SeparatorTable, MealyError> {
        m.require_complete()?;
        let n = m.n_states();
        let mut table = SeparatorTable {
            n,
            mark: vec![None; n * n],
        };
        // Round one: pairs with differing output words on some input.
        let mut newly: Vec<(StateId, StateId)> = Vec::new();
        for p in 0..n {
            for q in (p + 1)..n {
                let (p, q) = (StateId(p as u32), StateId(q as u32));
                for i in m.inputs.symbols() {
                    let (_, po) = m.step(p, i).unwrap();
                    let (_, qo) = m.step(q, i).unwrap();
                    if po != qo {
                        let s = table.slot(p, q);
                        table.mark[s] = Some((i, None));
                        newly.push((p, q));
                        break;
                    }
                }
            }
        }
        // Later rounds: pairs whose successors were separated in an earlier
        // round. Marks found in one round are applied together at its end.
        while !newly.is_empty() {
            let mut next: Vec<(StateId, StateId)> = Vec::new();
            for p in 0..n {
                for q in (p + 1)..n {
                    let (p, q) = (StateId(p as u32), StateId(q as u32));
                    if table.mark[table.slot(p, q)].is_some() {
                        continue;
                    }
                    'inputs: for i in m.inputs.symbols() {
                        let (pt, _) = m.step(p, i).unwrap();
                        let (qt, _) = m.step(q, i).unwrap();
                        if pt != qt && table.mark[table.slot(pt, qt)].is_some() {
                            let s = table.slot(p, q);
                            table.mark[s] = Some((i, Some((pt, qt))));
                            next.push((p, q));
                            break 'inputs;
                        }
                    }
                }
            }
            newly = next;
        }
        Ok(table)
    }

    /// Whether the two states are equivalent.
    pub fn equivalent(&self, p: StateId, q: StateId) -> bool {
        p == q || self.mark[self.slot(p, q)].is_none()
    }

    /// A separating input word for a distinguishable pair; `None` for
    /// equivalent states.
    pub fn separator(&self, p: StateId, q: StateId) -> Option<Word> {
        if p == q {
            return None;
        }
        let mut w = Word::new();
        let mut cur = (p, q);
        loop {
            match &self.mark[self.slot(cur.0, cur.1)] {
                // Chained pairs are always marked, so this is only reachable
                // for the initial pair: the states are equivalent.
                None => return None,
                Some((i, rest)) => {
                    w.push(*i);
                    match rest {
                        None => return Some(w),
                        Some(pair) => cur = *pair,
                    }
                }
            }
        }
    }
}

impl MealyMachine {
    /// The reachable quotient under state equivalence: a minimal complete
    /// machine with states numbered in breadth-first order.
    pub fn minimized(&self) -> Result<MealyMachine, MealyError> {
        self.require_complete()?;
        // Restrict to reachable states, renumbered in shortlex order of
        // their access words for a canonical layout.
        let acc = self.access_words();
        let mut order: Vec<(Word, StateId)> = acc
            .iter()
            .enumerate()
            .filter_map(|(q, a)| a.clone().map(|w| (w, StateId(q as u32))))
            .collect();
        order.sort_by(|(w1, _), (w2, _)| w1.shortlex_cmp(w2));
        let mut map: Vec<Option<StateId>> = vec![None; self.n_states()];
        for (new_id, (_, q)) in order.iter().enumerate() {
            map[q.index()] = Some(StateId(new_id as u32));
        }
        let mut reach = MealyBuilder::new(self.inputs.clone(), self.outputs.clone())?;
        for _ in 0..order.len() {
            reach.add_state();
        }
        reach.set_initial(map[self.initial.index()].unwrap());
        for (_, q) in &order {
            for i in self.inputs.symbols() {
                let (to, out) = self.step(*q, i).unwrap();
                reach.add_transition(
                    map[q.index()].unwrap(),
                    i,
                    out.clone(),
                    map[to.index()].unwrap(),
                )?;
            }
        }
        let reach = reach.build()?;

        let table = SeparatorTable::build(&reach)?;
        // Class representative: the lowest-numbered equivalent state.
        let n = reach.n_states();
        let mut class: Vec<Option<u32>> = vec![None; n];
        let mut reps: Vec<StateId> = Vec::new();
        for q in 0..n {
            let q = StateId(q as u32);
            if class[q.index()].is_some() {
                continue;
            }
            let id = reps.len() as u32;
            reps.push(q);
            for r in q.index()..n {
                let r = StateId(r as u32);
                if class[r.index()].is_none() && table.equivalent(q, r) {
                    class[r.index()] = Some(id);
                }
            }
        }
        let mut b = MealyBuilder::new(self.inputs.clone(), self.outputs.clone())?;
        for _ in 0..reps.len() {
            b.add_state();
        }
        b.set_initial(StateId(class[reach.initial.index()].unwrap()));
        for (id, rep) in reps.iter().enumerate() {
            for i in self.inputs.symbols() {
                let (to, out) = reach.step(*rep, i).unwrap();
                b.add_transition(
                    StateId(id as u32),
                    i,
                    out.clone(),
                    StateId(class[to.index()].unwrap()),
                )?;
            }
        }
        b.build()
    }

    /// Structural isomorphism of two complete reachable machines, matching
    /// initial states, transitions, and output words.
    pub fn isomorphic(&self, other: &MealyMachine) -> Result<bool, MealyError> {
        if self.inputs != other.inputs || self.outputs != other.outputs {
            return Err(MealyError::AlphabetMismatch);
        }
        self.require_complete()?;
        other.require_complete()?;
        if self.n_states() != other.n_states() {
            return Ok(false);
        }
        let n = self.n_states();
        let mut map: Vec<Option<StateId>> = vec![None; n];
        let mut hit: Vec<bool> = vec![false; n];
        map[self.initial.index()] = Some(other.initial);
        hit[other.initial.index()] = true;
        let mut queue = vec![self.initial];
        let mut head = 0;
        while head < queue.len() {
            let p = queue[head];
            head += 1;
            let q = map[p.index()].unwrap();
            for i in self.inputs.symbols() {
                let (pt, po) = self.step(p, i).unwrap();
                let (qt, qo) = other.step(q, i).unwrap();
                if po != qo {
                    return Ok(false);
                }
                match map[pt.index()] {
                    Some(mapped) => {
                        if mapped != qt {
                            return Ok(false);
                        }
                    }
                    None => {
                        if hit[qt.index()] {
                            return Ok(false);
                        }
                        map[pt.index()] = Some(qt);
                        hit[qt.index()] = true;
                        queue.push(pt);
                    }
                }
            }
        }
        // States unreachable in self stay unmapped; reachable machines have
        // none, and then the breadth-first match is a full bijection.
        Ok(map.iter().all(|m| m.is_some()))
    }
}

/// Minimizes both machines and tests them for isomorphism. This is the
/// equality notion used to judge a learned model against its target: equal
/// behavior regardless of state numbering.
pub fn minimize_and_isomorphic(a: &MealyMachine, b: &MealyMachine) -> Result<bool, MealyError> {
    let ma = a.minimized()?;
    let mb = b.minimized()?;
    ma.isomorphic(&mb)
}
