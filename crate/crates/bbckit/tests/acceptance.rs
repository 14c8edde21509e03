//! The acceptance gate: one test per shipping criterion, each passing or
//! failing on its own line. The criteria pin down exact translation and
//! learning, oracle agreement for the DFA algebra, the cost advantage of
//! checking during learning, the monitor guarantees, bug finding under
//! budgets too small for full learning, and byte-level determinism of
//! experiment output. Where a criterion fixes a runtime bound, the test
//! asserts it.

use bbckit::config::{ExperimentConfig, RunMode};
use bbckit::experiment::{rows_csv, run_experiment, strip_column, summary_csv};
use bbckit_core::alphabet::Alphabet;
use bbckit_core::bbc::{run_bbc, run_learn_then_check, BbcConfig};
use bbckit_core::dfa::{Dfa, DfaBuilder, StateId};
use bbckit_core::learner::learn_with_perfect_oracle;
use bbckit_core::machines::{
    chain_machine, double_then_single, letters, lock_machine, random_dfa, random_machine,
    LockParams,
};
use bbckit_core::mealy::{minimize_and_isomorphic, MealyMachine};
use bbckit_core::rng;
use bbckit_core::spec::{single_state_spec, validate_spec, SpecDfa, SpecSet};
use bbckit_core::sut::{Budget, SutError, SutSim};
use bbckit_core::translate::mealy_to_dfa;
use std::path::PathBuf;
use std::time::{Duration, Instant};

#[test]
fn criterion_1_behavior_translation_shares_output_tails() {
    let start = Instant::now();
    let m = double_then_single();
    let behavior = mealy_to_dfa(&m).dfa;

    // Giving every transition's output word its own private chain would
    // cost five states here; merging the identical one-output tails of
    // the "i" and "j" transitions lands on four.
    assert_eq!(behavior.n_states(), 4);

    let joint = m.joint();
    let (i, j, o) = (
        joint.get("i").unwrap(),
        joint.get("j").unwrap(),
        joint.get("o").unwrap(),
    );
    let a = behavior.initial();
    let b = behavior.transition(a, i).unwrap();
    let c = behavior.transition(a, j).unwrap();
    // The tail shared between the two-output and one-output transitions.
    assert_eq!(behavior.transition(b, o), Some(c));
    let d = behavior.transition(c, o).unwrap();
    // The silent self-loop needs no output state at all.
    assert_eq!(behavior.transition(d, j), Some(d));

    let states = [a, b, c, d];
    for (k, q) in states.iter().enumerate() {
        assert!(behavior.is_final(*q));
        assert!(states[k + 1..].iter().all(|r| r != q));
    }
    assert_eq!(behavior.n_transitions(), 5);
    assert!(start.elapsed() < Duration::from_secs(1));
}

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

#[test]
fn criterion_2_dfa_algebra_agrees_with_enumeration_on_500_automata() {
    let start = Instant::now();
    let mut rng = rng::stream(0xacce97, 11);
    for round in 0..500usize {
        let alphabet = letters(1 + round % 4);
        let d = random_dfa(&mut rng, 5, &alphabet);
        let other = random_dfa(&mut rng, 5, &alphabet);

        let completed = d.complete();
        let complemented = completed.complement().unwrap();
        let product = completed.product(&other.complete()).unwrap();

        let mut shortest_seen: Option<usize> = None;
        let autos = [&d, &completed, &complemented, &other, &product];
        walk_words(&alphabet, &autos, 8, &mut |len, states| {
            let accepted = accepting(&d, states[0]);
            assert_eq!(accepting(&completed, states[1]), accepted);
            assert_eq!(accepting(&complemented, states[2]), !accepted);
            assert_eq!(
                accepting(&product, states[4]),
                accepted && accepting(&other, states[3])
            );
            if accepted {
                shortest_seen = Some(shortest_seen.map_or(len, |s| s.min(len)));
            }
        });

        // Depth 8 covers every state of a machine with at most 5, so the
        // enumeration settles emptiness and the shortest accepted length.
        assert!(d.n_states() <= 8);
        assert_eq!(d.is_empty_language(), shortest_seen.is_none());
        match d.shortest_accepted() {
            None => assert_eq!(shortest_seen, None),
            Some(w) => {
                assert_eq!(Some(w.len()), shortest_seen);
                assert!(d.accepts(&w).unwrap());
            }
        }
    }
    assert!(start.elapsed() < Duration::from_secs(60));
}

#[test]
fn criterion_3_perfect_oracle_learning_is_exact_on_100_machines() {
    let start = Instant::now();
    let mut exact = 0;
    for seed in 0..100u64 {
        let n_states = 2 + (seed as usize * 7) % 19;
        let n_inputs = 1 + (seed as usize) % 4;
        let n_outputs = 1 + (seed as usize) % 3;
        let m = random_machine(seed, n_states, n_inputs, n_outputs);
        let mut sut = SutSim::new(m.clone()).unwrap();
        let h = learn_with_perfect_oracle(&mut sut).unwrap();
        assert!(
            minimize_and_isomorphic(&m, &h.machine).unwrap(),
            "seed {seed}: hypothesis differs from the machine"
        );
        exact += 1;
    }
    assert_eq!(exact, 100);
    assert!(start.elapsed() < Duration::from_secs(120));
}

fn lock8() -> MealyMachine {
    lock_machine(&LockParams {
        secret: vec![0, 2, 1, 3, 0, 1, 2, 0],
        n_inputs: 4,
        shallow_bug: true,
    })
}

fn allow_all_but(name: &str, m: &MealyMachine, forbidden: &str) -> SpecDfa {
    let allowed: Vec<&str> = m.joint().texts().filter(|t| *t != forbidden).collect();
    single_state_spec(name, m.joint(), &allowed).unwrap()
}

/// Two states: any first "buzz" is tolerated, a second one rejects.
fn at_most_one_buzz(m: &MealyMachine) -> SpecDfa {
    let joint = m.joint();
    let buzz = joint.get("buzz").unwrap();
    let mut b = DfaBuilder::new(joint.clone());
    b.add_state(true);
    b.add_state(true);
    b.set_initial(StateId(0));
    for s in joint.symbols() {
        if s == buzz {
            b.add_transition(StateId(0), s, StateId(1)).unwrap();
        } else {
            b.add_transition(StateId(0), s, StateId(0)).unwrap();
            b.add_transition(StateId(1), s, StateId(1)).unwrap();
        }
    }
    validate_spec("at-most-one-buzz", &b.build().unwrap(), joint).unwrap()
}

fn lock_variants(m: &MealyMachine) -> Vec<SpecDfa> {
    vec![
        allow_all_but("no-buzz", m, "buzz"),
        at_most_one_buzz(m),
        allow_all_but("no-unlock", m, "unlock"),
    ]
}

#[test]
fn criterion_4_checking_while_learning_beats_the_baseline_on_the_lock() {
    let start = Instant::now();
    let m = lock8();
    let mut ratios = Vec::new();
    for variant in lock_variants(&m) {
        let specs = SpecSet::new(vec![variant]).unwrap();
        for seed in 0..50 {
            let cfg = BbcConfig {
                seed,
                ..BbcConfig::default()
            };
            let mut sut = SutSim::new(m.clone()).unwrap();
            let bbc = run_bbc(&mut sut, &specs, &cfg);
            assert!(
                bbc.properties[0].resolution.is_bug(),
                "{} seed {seed}: no bug",
                bbc.properties[0].name
            );

            let mut sut = SutSim::new(m.clone()).unwrap();
            let baseline = run_learn_then_check(&mut sut, &specs, &cfg);
            assert!(baseline.properties[0].resolution.is_bug());

            ratios.push(bbc.stats.total_queries() as f64 / baseline.stats.total_queries() as f64);
        }
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = (ratios[ratios.len() / 2 - 1] + ratios[ratios.len() / 2]) / 2.0;
    assert!(median < 0.25, "median query ratio {median}");
    assert!(start.elapsed() < Duration::from_secs(600));
}

#[test]
fn criterion_5_monitors_never_delay_detection_and_never_add_queries() {
    let m = lock8();
    let mut monitored_queries = 0u64;
    let mut unmonitored_queries = 0u64;
    for variant in lock_variants(&m) {
        let specs = SpecSet::new(vec![variant]).unwrap();
        for seed in 0..50 {
            let cfg = BbcConfig {
                seed,
                ..BbcConfig::default()
            };
            let mut sut = SutSim::new(m.clone()).unwrap();
            let monitored = run_bbc(&mut sut, &specs, &cfg);
            let mut sut = SutSim::new(m.clone()).unwrap();
            let unmonitored = run_bbc(
                &mut sut,
                &specs,
                &BbcConfig {
                    monitor_enabled: false,
                    ..cfg
                },
            );

            let bug = monitored.properties[0].resolution.bug().unwrap();
            let first_executed = unmonitored.properties[0]
                .first_violation_learning_step
                .expect("the unmonitored run executed the violation");
            assert!(
                bug.step_index <= first_executed,
                "{} seed {seed}: detected at {} but first executed at {}",
                monitored.properties[0].name,
                bug.step_index,
                first_executed
            );
            monitored_queries += monitored.stats.total_queries();
            unmonitored_queries += unmonitored.stats.total_queries();
        }
    }
    assert!(
        monitored_queries <= unmonitored_queries,
        "monitored runs took {monitored_queries} queries, unmonitored {unmonitored_queries}"
    );
}

#[test]
fn criterion_6_deep_bugs_elude_property_derived_testing_but_not_the_loop() {
    let start = Instant::now();
    let m = lock_machine(&LockParams {
        secret: vec![1, 3, 0, 2, 1, 3],
        n_inputs: 4,
        shallow_bug: false,
    });
    let spec = allow_all_but("no-unlock", &m, "unlock");
    assert_eq!(spec.n_states(), 1);

    let mut loop_found = 0;
    let mut testing_found = 0;
    for seed in 0..50 {
        let specs = SpecSet::new(vec![spec.clone()]).unwrap();
        let cfg = BbcConfig {
            seed,
            ..BbcConfig::default()
        };
        let mut sut = SutSim::new(m.clone()).unwrap();
        let out = run_bbc(&mut sut, &specs, &cfg);
        if out.properties[0].resolution.is_bug() {
            loop_found += 1;
        }

        // The competing suite gets ten times the loop's whole query bill,
        // but its tests are derived from the one-state property alone, so
        // each stops after two inputs and never reaches depth six.
        let suite_size = 10 * out.stats.total_queries();
        let mut sut = SutSim::new(m.clone()).unwrap();
        let report = bbckit_core::mbt::run_mbt_suite(&mut sut, &spec, suite_size, seed);
        if report.found {
            testing_found += 1;
        }
    }
    assert_eq!(loop_found, 50);
    assert!(
        testing_found < loop_found,
        "property-derived testing found {testing_found} of {loop_found}"
    );
    assert!(start.elapsed() < Duration::from_secs(600));
}

#[test]
fn criterion_7_budgeted_runs_resolve_the_shallow_bug_in_a_big_machine() {
    let m = chain_machine(200, 2);
    let budget = Budget {
        max_steps: Some(10_000),
        max_testing_queries_per_round: None,
    };

    // The budget really is too small to learn the machine outright, even
    // with counterexamples handed over for free.
    let mut sut = SutSim::new(m.clone()).unwrap().with_budget(budget);
    assert!(matches!(
        learn_with_perfect_oracle(&mut sut),
        Err(SutError::BudgetExceeded { .. })
    ));

    let spec = allow_all_but("no-err", &m, "err");
    let mut found = 0;
    for seed in 0..50 {
        let specs = SpecSet::new(vec![spec.clone()]).unwrap();
        let cfg = BbcConfig {
            seed,
            budget,
            ..BbcConfig::default()
        };
        let mut sut = SutSim::new(m.clone()).unwrap();
        let out = run_bbc(&mut sut, &specs, &cfg);
        if out.properties[0].resolution.is_bug() {
            found += 1;
        }
    }
    assert!(found >= 45, "bug resolved in only {found} of 50 runs");
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR")))
}

#[test]
fn criterion_8_experiment_reruns_are_byte_identical_except_wall_time() {
    let cfg = ExperimentConfig {
        suts: vec![fixture("toggle.dot"), fixture("counter.dot")],
        specs: vec![fixture("no_err.dot"), fixture("anything.dot")],
        modes: vec![
            RunMode::Bbc,
            RunMode::BbcUnmonitored,
            RunMode::LearnThenCheck,
            RunMode::Mbt,
        ],
        seeds: 3,
        mbt_tests: 200,
        ..ExperimentConfig::default()
    };
    let first = run_experiment(&cfg);
    let second = run_experiment(&cfg);
    assert_eq!(first.len(), 48);
    assert_eq!(
        strip_column(&rows_csv(&first), "wall_time_ns"),
        strip_column(&rows_csv(&second), "wall_time_ns")
    );
    assert_eq!(summary_csv(&first), summary_csv(&second));
}
