//! Observed behavior of a machine: inputs paired with the output words they
//! produced.

use alloc::vec::Vec;

use crate::alphabet::{Alphabet, Symbol, Word};

/// A sequence of steps, each an input symbol and the output word the machine
/// emitted in response. Inputs are indexed over the input alphabet and
/// outputs over the output alphabet; [`Trace::interleaved`] lifts both onto
/// the joint alphabet.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Trace {
    steps: Vec<(Symbol, Word)>,
}

impl Trace {
    pub fn new() -> Trace {
        Trace { steps: Vec::new() }
    }

    pub fn push(&mut self, input: Symbol, output: Word) {
        self.steps.push((input, output));
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = (Symbol, &Word)> {
        self.steps.iter().map(|(i, o)| (*i, o))
    }

    pub fn step(&self, k: usize) -> Option<(Symbol, &Word)> {
        self.steps.get(k).map(|(i, o)| (*i, o))
    }

    /// The input word of the trace, over the input alphabet.
    pub fn inputs(&self) -> Word {
        self.steps.iter().map(|(i, _)| *i).collect()
    }

    /// The trace flattened to a word over the joint alphabet built as
    /// inputs followed by outputs: input indices are kept and output
    /// indices are shifted by `inputs.len()`.
    pub fn interleaved(&self, inputs: &Alphabet) -> Word {
        let shift = inputs.len() as u32;
        let mut w = Word::new();
        for (i, out) in &self.steps {
            w.push(*i);
            for o in out.iter() {
                w.push(Symbol(o.0 + shift));
            }
        }
        w
    }

    /// The trace truncated to its first `n` steps.
    pub fn truncated(&self, n: usize) -> Trace {
        Trace {
            steps: self.steps[..n.min(self.steps.len())].to_vec(),
        }
    }
}

impl FromIterator<(Symbol, Word)> for Trace {
    fn from_iter<T: IntoIterator<Item = (Symbol, Word)>>(iter: T) -> Trace {
        Trace {
            steps: iter.into_iter().collect(),
        }
    }
}
