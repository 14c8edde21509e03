//! Property-based invariants tying independent implementations together:
//! the machine-to-automaton translation against its inverse, and the
//! incremental monitor against direct automaton runs.

use bbckit_core::alphabet::Word;
use bbckit_core::machines::{lock_machine, random_machine, LockParams};
use bbckit_core::mealy::minimize_and_isomorphic;
use bbckit_core::monitor::{check_trace, MonitorState};
use bbckit_core::spec::{single_state_spec, SpecDfa};
use bbckit_core::translate::{dfa_to_mealy, mealy_to_dfa};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Translating a machine to an automaton and back restores it up to
    /// isomorphism.
    #[test]
    fn translation_round_trips(seed in 0u64..1000, n in 1usize..7, i in 1usize..4, o in 2usize..4) {
        let m = random_machine(seed, n, i, o);
        let d = mealy_to_dfa(&m);
        let back = dfa_to_mealy(&d.dfa, m.inputs(), m.outputs()).unwrap();
        prop_assert!(minimize_and_isomorphic(&back, &m).unwrap());
    }

    /// The translated automaton accepts exactly the interleavings of
    /// prefixes of machine runs.
    #[test]
    fn translation_accepts_run_prefixes(seed in 0u64..500, len in 0usize..10) {
        let m = random_machine(seed, 4, 3, 3);
        let d = mealy_to_dfa(&m).dfa;
        let mut rng = bbckit_core::rng::stream(seed ^ 0x5799, 12);
        let w: Word = (0..len)
            .map(|_| m.inputs().symbols().nth(bbckit_core::rng::uniform_index(&mut rng, m.inputs().len())).unwrap())
            .collect::<Vec<_>>()
            .into();
        let trace = m.run(&w).unwrap();
        let inter = trace.interleaved(m.inputs());
        for cut in 0..=inter.len() {
            let prefix = inter.prefix(cut);
            prop_assert!(d.accepts(&prefix).unwrap(), "prefix of a run rejected at {cut}");
        }
    }

    /// The step monitor flags a trace at the same position a direct
    /// automaton run first leaves the property.
    #[test]
    fn monitor_agrees_with_direct_automaton_runs(
        secret in prop::collection::vec(0usize..3, 1..4),
        word in prop::collection::vec(0usize..3, 0..12),
        shallow in any::<bool>(),
    ) {
        prop_assume!(!(shallow && secret[0] == 2));
        let m = lock_machine(&LockParams { secret, n_inputs: 3, shallow_bug: shallow });
        let spec = single_state_spec(
            "no-buzz",
            m.joint(),
            &["i0", "i1", "i2", "tick", "unlock"],
        ).unwrap();
        let w: Word = word
            .iter()
            .map(|k| m.inputs().symbols().nth(*k).unwrap())
            .collect::<Vec<_>>()
            .into();
        let trace = m.run(&w).unwrap();
        let fast = check_trace(&spec, &trace, m.inputs());
        prop_assert_eq!(fast, oracle_violation(&spec, &trace.interleaved(m.inputs())));
    }
}

/// Finds the first rejected prefix of `inter` by running the automaton
/// from scratch on every prefix.
fn oracle_violation(spec: &SpecDfa, inter: &Word) -> Option<usize> {
    let complete = spec.dfa().complete();
    (1..=inter.len()).find(|&k| !complete.accepts(&inter.prefix(k)).unwrap())
}

#[test]
fn monitor_positions_index_the_interleaved_word() {
    let m = lock_machine(&LockParams {
        secret: vec![0, 1],
        n_inputs: 3,
        shallow_bug: true,
    });
    let spec = single_state_spec("no-buzz", m.joint(), &["i0", "i1", "i2", "tick", "unlock"])
        .unwrap();
    let mut monitor = MonitorState::new(&spec);
    // i1 resets the lock quietly, i2 buzzes: input at 3, output at 4.
    let w = m.inputs().word(&["i1", "i2"]).unwrap();
    let trace = m.run(&w).unwrap();
    let mut hits = Vec::new();
    for (i, o) in trace.steps() {
        if let Some(p) = monitor.observe_step(i, o, m.inputs().len()) {
            hits.push(p);
        }
    }
    assert_eq!(hits, vec![4]);
    let inter = trace.interleaved(m.inputs());
    assert_eq!(m.joint().text(inter.get(3).unwrap()), "buzz");
}
