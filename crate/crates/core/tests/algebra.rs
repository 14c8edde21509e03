//! Randomized cross-checks of the DFA algebra against brute-force word
//! enumeration. One depth-first walk over all words up to a length bound
//! carries the states of every derived automaton along, so each word is
//! visited once instead of being replayed from scratch.

use bbckit_core::alphabet::Alphabet;
use bbckit_core::dfa::{Dfa, StateId};
use bbckit_core::machines::{letters, random_dfa};
use bbckit_core::rng;

/// Walks every word of length at most `depth`, keeping one current state
/// per automaton (`None` once a run has died), and calls `visit` with the
/// word length and the state vector, root included.
fn walk_words(
    alphabet: &Alphabet,
    autos: &[&Dfa],
    depth: usize,
    visit: &mut impl FnMut(usize, &[Option<StateId>]),
) {
    fn rec(
        alphabet: &Alphabet,
        autos: &[&Dfa],
        depth: usize,
        len: usize,
        states: &mut Vec<Option<StateId>>,
        visit: &mut impl FnMut(usize, &[Option<StateId>]),
    ) {
        visit(len, states);
        if len == depth {
            return;
        }
        for a in alphabet.symbols() {
            let saved = states.clone();
            for (d, s) in autos.iter().zip(states.iter_mut()) {
                *s = s.and_then(|q| d.transition(q, a));
            }
            rec(alphabet, autos, depth, len + 1, states, visit);
            *states = saved.clone();
        }
    }
    let mut states: Vec<Option<StateId>> = autos.iter().map(|d| Some(d.initial())).collect();
    rec(alphabet, autos, depth, 0, &mut states, visit);
}

fn accepting(d: &Dfa, s: Option<StateId>) -> bool {
    s.is_some_and(|q| d.is_final(q))
}

/// Checks completion, complement, product, emptiness, and the shortest
/// accepted word of `d` (product against `other`) by enumeration.
fn check_algebra(d: &Dfa, other: &Dfa, depth: usize) {
    let completed = d.complete();
    assert!(completed.is_complete());
    let complemented = completed.complement().unwrap();
    let product = completed.product(&other.complete()).unwrap();

    let mut shortest_seen: Option<usize> = None;
    {
        let autos = [d, &completed, &complemented, other, &product];
        walk_words(d.alphabet(), &autos, depth, &mut |len, states| {
            let accepted = accepting(d, states[0]);
            assert_eq!(accepting(&completed, states[1]), accepted);
            assert_eq!(accepting(&complemented, states[2]), !accepted);
            assert_eq!(
                accepting(&product, states[4]),
                accepted && accepting(other, states[3])
            );
            if accepted && shortest_seen.is_none() {
                shortest_seen = Some(len);
            }
            if accepted {
                shortest_seen = Some(shortest_seen.unwrap().min(len));
            }
        });
    }

    // With depth at least the state count, enumeration settles emptiness
    // and the length of the shortest accepted word.
    assert!(depth >= d.n_states());
    assert_eq!(d.is_empty_language(), shortest_seen.is_none());
    match d.shortest_accepted() {
        None => assert_eq!(shortest_seen, None),
        Some(w) => {
            assert_eq!(Some(w.len()), shortest_seen);
            assert!(d.accepts(&w).unwrap());
        }
    }
}

#[test]
fn derived_automata_agree_with_enumeration() {
    let mut rng = rng::stream(0xa15eb8a, 7);
    for round in 0..120 {
        let n_symbols = 2 + round % 2;
        let alphabet = letters(n_symbols);
        let d = random_dfa(&mut rng, 4, &alphabet);
        let other = random_dfa(&mut rng, 4, &alphabet);
        check_algebra(&d, &other, 6);
    }
}

#[test]
fn product_of_three_stays_consistent() {
    let mut rng = rng::stream(0xbead, 7);
    let alphabet = letters(3);
    for _ in 0..30 {
        let a = random_dfa(&mut rng, 3, &alphabet).complete();
        let b = random_dfa(&mut rng, 3, &alphabet).complete();
        let c = random_dfa(&mut rng, 3, &alphabet).complete();
        let abc = a.product(&b).unwrap().product(&c).unwrap();
        let autos = [&a, &b, &c, &abc];
        walk_words(&alphabet, &autos, 5, &mut |_, states| {
            assert_eq!(
                accepting(&abc, states[3]),
                accepting(&a, states[0]) && accepting(&b, states[1]) && accepting(&c, states[2])
            );
        });
    }
}
