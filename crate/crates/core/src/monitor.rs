//! Runtime monitoring of traces against a safety property.
//!
//! A monitor walks the completion of a property automaton symbol by symbol
//! over the interleaved input/output word of a trace. Since a valid
//! property has only final states, leaving them means entering the sink,
//! and the word can never recover: the position of that first off-language
//! symbol is the violation position, and it never moves once found.
//! [`check_trace`] is the offline twin of the online walk and flags
//! exactly the same traces at exactly the same positions.

use alloc::string::String;

use crate::alphabet::{Alphabet, Symbol, Word};
use crate::dfa::{Dfa, StateId};
use crate::spec::SpecDfa;
use crate::sut::QueryStats;
use crate::trace::Trace;

/// Online walk of one property over one interleaved word.
#[derive(Clone, Debug)]
pub struct MonitorState {
    property: String,
    dfa: Dfa,
    current: StateId,
    consumed: usize,
    violation: Option<usize>,
}

impl MonitorState {
    /// Builds a monitor for the property, positioned before any symbol.
    pub fn new(spec: &SpecDfa) -> MonitorState {
        MonitorState {
            property: String::from(spec.name()),
            dfa: spec.dfa().complete(),
            current: spec.dfa().initial(),
            consumed: 0,
            violation: None,
        }
    }

    pub fn property(&self) -> &str {
        &self.property
    }

    /// Position (1-based, in the interleaved word) of the first violating
    /// symbol, if one was seen.
    pub fn violation(&self) -> Option<usize> {
        self.violation
    }

    /// Rewinds to the initial state for a fresh word.
    pub fn reset(&mut self) {
        self.current = self.dfa.initial();
        self.consumed = 0;
        self.violation = None;
    }

    /// Feeds one symbol of the interleaved word. Returns the violation
    /// position if this symbol is the first to leave the property.
    pub fn observe_symbol(&mut self, s: Symbol) -> Option<usize> {
        if self.violation.is_some() {
            return None;
        }
        self.consumed += 1;
        self.current = self
            .dfa
            .transition(self.current, s)
            .expect("monitor automaton is complete");
        if !self.dfa.is_final(self.current) {
            self.violation = Some(self.consumed);
            return self.violation;
        }
        None
    }

    /// Feeds one machine step: the input symbol, then its output word.
    /// Output indices are shifted onto the joint alphabet by `n_inputs`.
    /// Returns the violation position if the violation happened here.
    pub fn observe_step(&mut self, input: Symbol, output: &Word, n_inputs: usize) -> Option<usize> {
        if let Some(p) = self.observe_symbol(input) {
            return Some(p);
        }
        for o in output.iter() {
            if let Some(p) = self.observe_symbol(Symbol(o.0 + n_inputs as u32)) {
                return Some(p);
            }
        }
        None
    }
}

/// Offline check of a full trace against a property: the position of the
/// first violating symbol of the interleaved word, or `None` when the
/// trace stays inside the property.
pub fn check_trace(spec: &SpecDfa, trace: &Trace, inputs: &Alphabet) -> Option<usize> {
    let mut m = MonitorState::new(spec);
    for (i, out) in trace.steps() {
        if let Some(p) = m.observe_step(i, out, inputs.len()) {
            return Some(p);
        }
    }
    None
}

/// How a bug was found.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DiscoveredBy {
    /// A monitor flagged a query while it executed.
    Monitor,
    /// The model checker predicted the violation and the machine confirmed
    /// it.
    ModelCheckConfirmation,
}

impl DiscoveredBy {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscoveredBy::Monitor => "monitor",
            DiscoveredBy::ModelCheckConfirmation => "model-check-confirmation",
        }
    }
}

/// Evidence for one found bug.
#[derive(Clone, Debug)]
pub struct BugReport {
    pub property: String,
    /// The trace that violated the property; replaying its inputs
    /// reproduces the violation.
    pub witness: Trace,
    /// The witness as a word over the joint alphabet.
    pub interleaved: Word,
    /// 1-based position of the first violating symbol in the interleaved
    /// word of the witness.
    pub violation_position: usize,
    pub discovered_by: DiscoveredBy,
    /// Global step index at the moment of detection.
    pub step_index: u64,
    /// Counter snapshot at the moment of detection.
    pub stats_at_detection: QueryStats,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::dfa::DfaBuilder;
    use crate::spec::validate_spec;

    fn setup() -> (Alphabet, Alphabet, SpecDfa) {
        let i = Alphabet::new(["go"]).unwrap();
        let o = Alphabet::new(["ok", "crash"]).unwrap();
        let j = i.concat(&o).unwrap();
        let mut b = DfaBuilder::new(j.clone());
        let q = b.add_state(true);
        b.set_initial(q);
        b.add_transition(q, j.get("go").unwrap(), q).unwrap();
        b.add_transition(q, j.get("ok").unwrap(), q).unwrap();
        let spec = validate_spec("no-crash", &b.build().unwrap(), &j).unwrap();
        (i, o, spec)
    }

    #[test]
    fn flags_the_first_bad_symbol_and_freezes() {
        let (i, o, spec) = setup();
        let mut m = MonitorState::new(&spec);
        let go = i.get("go").unwrap();
        assert_eq!(m.observe_step(go, &o.word(&["ok"]).unwrap(), 1), None);
        // go ok go crash: the crash sits at interleaved position 4.
        assert_eq!(m.observe_step(go, &o.word(&["crash"]).unwrap(), 1), Some(4));
        assert_eq!(m.violation(), Some(4));
        // Later symbols no longer move the recorded position.
        assert_eq!(m.observe_step(go, &o.word(&["ok"]).unwrap(), 1), None);
        assert_eq!(m.violation(), Some(4));
    }

    #[test]
    fn online_and_offline_agree() {
        let (i, o, spec) = setup();
        let go = i.get("go").unwrap();
        let mut t = Trace::new();
        t.push(go, o.word(&["ok"]).unwrap());
        t.push(go, o.word(&["crash"]).unwrap());
        t.push(go, o.word(&["ok"]).unwrap());
        assert_eq!(check_trace(&spec, &t, &i), Some(4));

        let mut m = MonitorState::new(&spec);
        let mut online = None;
        for (inp, out) in t.steps() {
            if online.is_none() {
                online = m.observe_step(inp, out, i.len());
            }
        }
        assert_eq!(online, Some(4));

        let mut clean = Trace::new();
        clean.push(go, o.word(&["ok"]).unwrap());
        assert_eq!(check_trace(&spec, &clean, &i), None);
    }
}
