//! Machine generators for tests and benchmarks.
//!
//! Everything here is deterministic: the random generators draw from a
//! seeded stream, and the named families are fixed constructions. The
//! combination lock is the canonical deep-bug benchmark: its interesting
//! behavior hides behind one specific input sequence, which makes full
//! learning expensive while leaving shallow bugs cheap to reach.

use alloc::format;
use alloc::vec::Vec;

use crate::alphabet::{Alphabet, Word};
use crate::dfa::{Dfa, DfaBuilder, StateId};
use crate::mealy::{MealyBuilder, MealyMachine};
use crate::rng::{self, Prng};

/// Shape of a combination-lock machine.
pub struct LockParams {
    /// Input indices that advance the lock, in order; entering all of them
    /// from the start emits "unlock". Any wrong input falls back to the
    /// start.
    pub secret: Vec<usize>,
    pub n_inputs: usize,
    /// When set, the last input pressed at the start state emits "buzz"
    /// instead of "tick": a bug at depth 1, independent of the lock.
    pub shallow_bug: bool,
}

/// Builds a lock over inputs `i0..i{n-1}` and outputs `tick`, `unlock`,
/// `buzz`. States are the number of matched secret symbols; the final
/// state is absorbing and silent.
pub fn lock_machine(p: &LockParams) -> MealyMachine {
    assert!(p.n_inputs >= 1);
    assert!(p.secret.iter().all(|s| *s < p.n_inputs));
    if p.shallow_bug {
        assert!(p.n_inputs >= 2, "the buzzing input must not be the secret's first");
        assert!(p.secret.first() != Some(&(p.n_inputs - 1)));
    }
    let names: Vec<_> = (0..p.n_inputs).map(|k| format!("i{k}")).collect();
    let inputs = Alphabet::new(names.iter().map(|s| s.as_str())).unwrap();
    let outputs = Alphabet::new(["tick", "unlock", "buzz"]).unwrap();
    let tick = outputs.word(&["tick"]).unwrap();
    let unlock = outputs.word(&["unlock"]).unwrap();
    let buzz = outputs.word(&["buzz"]).unwrap();
    let depth = p.secret.len();
    let mut b = MealyBuilder::new(inputs.clone(), outputs).unwrap();
    for _ in 0..=depth {
        b.add_state();
    }
    b.set_initial(StateId(0));
    for k in 0..depth {
        for i in inputs.symbols() {
            if i.index() == p.secret[k] {
                let out = if k + 1 == depth { &unlock } else { &tick };
                b.add_transition(StateId(k as u32), i, out.clone(), StateId(k as u32 + 1))
                    .unwrap();
            } else {
                let out = if k == 0 && p.shallow_bug && i.index() == p.n_inputs - 1 {
                    &buzz
                } else {
                    &tick
                };
                b.add_transition(StateId(k as u32), i, out.clone(), StateId(0))
                    .unwrap();
            }
        }
    }
    for i in inputs.symbols() {
        let out = if depth == 0 && p.shallow_bug && i.index() == p.n_inputs - 1 {
            &buzz
        } else {
            &tick
        };
        b.add_transition(StateId(depth as u32), i, out.clone(), StateId(depth as u32))
            .unwrap();
    }
    b.build().unwrap()
}

/// A one-state machine answering each input with one fixed output symbol.
pub fn responder(inputs: &[&str], outputs: &[&str], map: &[(&str, &str)]) -> MealyMachine {
    let inp = Alphabet::new(inputs).unwrap();
    let out = Alphabet::new(outputs).unwrap();
    let mut b = MealyBuilder::new(inp.clone(), out.clone()).unwrap();
    let q = b.add_state();
    b.set_initial(q);
    for (i, o) in map {
        let i = inp.get(i).expect("input occurs in the alphabet");
        let o = out.word(&[*o]).expect("output occurs in the alphabet");
        b.add_transition(q, i, o, q).unwrap();
    }
    b.build().unwrap()
}

/// A long corridor over inputs `a`, `b`, `c` and outputs `ok`, `done`,
/// `err`: `a` advances toward the far end (which answers "done"), `b`
/// idles, and `c` idles except at depth `bug_depth`, where it answers
/// "err". A big `n_states` with a small `bug_depth` gives a machine too
/// large to learn fully whose bug sits in easy reach.
pub fn chain_machine(n_states: usize, bug_depth: usize) -> MealyMachine {
    assert!(n_states >= 2);
    assert!(bug_depth < n_states);
    let inputs = Alphabet::new(["a", "b", "c"]).unwrap();
    let outputs = Alphabet::new(["ok", "done", "err"]).unwrap();
    let ok = outputs.word(&["ok"]).unwrap();
    let done = outputs.word(&["done"]).unwrap();
    let err = outputs.word(&["err"]).unwrap();
    let a = inputs.get("a").unwrap();
    let bi = inputs.get("b").unwrap();
    let c = inputs.get("c").unwrap();
    let mut b = MealyBuilder::new(inputs, outputs).unwrap();
    for _ in 0..n_states {
        b.add_state();
    }
    b.set_initial(StateId(0));
    let last = StateId(n_states as u32 - 1);
    for k in 0..n_states {
        let q = StateId(k as u32);
        if q == last {
            b.add_transition(q, a, done.clone(), last).unwrap();
        } else {
            b.add_transition(q, a, ok.clone(), StateId(k as u32 + 1)).unwrap();
        }
        b.add_transition(q, bi, ok.clone(), q).unwrap();
        let c_out = if k == bug_depth { &err } else { &ok };
        b.add_transition(q, c, c_out.clone(), q).unwrap();
    }
    b.build().unwrap()
}

/// Two states; "i" emits two "o"s into the second, "j" emits one "o" into
/// the second, which loops on "j" silently. The smallest machine whose
/// behavior automaton shares an output chain between transitions.
pub fn double_then_single() -> MealyMachine {
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

/// A random complete machine over `i0..` and `o0..`: uniform targets,
/// output words of length 0 to 2 biased toward single symbols.
pub fn random_machine(
    seed: u64,
    n_states: usize,
    n_inputs: usize,
    n_outputs: usize,
) -> MealyMachine {
    assert!(n_states >= 1 && n_inputs >= 1 && n_outputs >= 1);
    let mut rng = rng::stream(seed, 3);
    let in_names: Vec<_> = (0..n_inputs).map(|k| format!("i{k}")).collect();
    let out_names: Vec<_> = (0..n_outputs).map(|k| format!("o{k}")).collect();
    let inputs = Alphabet::new(in_names.iter().map(|s| s.as_str())).unwrap();
    let outputs = Alphabet::new(out_names.iter().map(|s| s.as_str())).unwrap();
    let mut b = MealyBuilder::new(inputs.clone(), outputs.clone()).unwrap();
    for _ in 0..n_states {
        b.add_state();
    }
    b.set_initial(StateId(0));
    for q in 0..n_states {
        for i in inputs.symbols() {
            let target = StateId(rng::uniform_index(&mut rng, n_states) as u32);
            let len = match rng::uniform_index(&mut rng, 5) {
                0 => 0,
                4 => 2,
                _ => 1,
            };
            let mut w = Word::new();
            for _ in 0..len {
                w.push(crate::alphabet::Symbol(
                    rng::uniform_index(&mut rng, n_outputs) as u32,
                ));
            }
            b.add_transition(StateId(q as u32), i, w, target).unwrap();
        }
    }
    b.build().unwrap()
}

/// An alphabet of the first `k` lowercase letters.
pub fn letters(k: usize) -> Alphabet {
    const POOL: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];
    Alphabet::new(POOL[..k].iter().copied()).unwrap()
}

/// A random partial DFA over the given alphabet: up to `max_states`
/// states, each transition present with probability 4/5, each state final
/// with probability 1/2.
pub fn random_dfa(rng: &mut Prng, max_states: usize, alphabet: &Alphabet) -> Dfa {
    let n = 1 + rng::uniform_index(rng, max_states);
    let mut b = DfaBuilder::new(alphabet.clone());
    for _ in 0..n {
        let is_final = rng::uniform_index(rng, 2) == 0;
        b.add_state(is_final);
    }
    b.set_initial(StateId(0));
    for q in 0..n {
        for s in alphabet.symbols() {
            if rng::uniform_index(rng, 5) < 4 {
                let to = StateId(rng::uniform_index(rng, n) as u32);
                b.add_transition(StateId(q as u32), s, to).unwrap();
            }
        }
    }
    b.build().unwrap()
}
