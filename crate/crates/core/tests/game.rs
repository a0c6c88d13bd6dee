mod common;

use std::collections::BTreeSet;

use permrl::game::validate_game;
use permrl::game::{ActionId, GameBuilder, Player, StateId, Violation};
use permrl::gridworld::{build_example1, GridConfig, Placement};
use permrl::io::{self, ActionDoc, GameDoc, StateDoc, TransitionDoc};
use permrl::strategy::{induced_runs, strategy_includes, MemorylessStrategy};
use permrl::Run;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{action_by_name, random_game};

fn g0_doc() -> GameDoc {
    let state = |id, labels: &[&str]| StateDoc {
        id,
        player: Player::System,
        labels: labels.iter().map(|s| s.to_string()).collect(),
    };
    let action = |id, name: &str| ActionDoc { id, owner: Player::System, name: name.into() };
    let t = |from, action, to| TransitionDoc { from, action, to };
    GameDoc {
        states: vec![state(0, &["b1"]), state(1, &["b2"])],
        initial: vec![0, 1],
        actions: vec![action(0, "a0"), action(1, "a1"), action(2, "a2")],
        transitions: vec![t(0, 0, 0), t(0, 1, 1), t(1, 2, 1)],
        ap: vec!["b1".into(), "b2".into()],
    }
}

#[test]
fn g0_is_well_formed_and_steps() {
    let doc = g0_doc();
    assert!(validate_game(&doc).is_empty());
    let g = doc.to_game().unwrap().game;
    assert_eq!(g.step(StateId(0), ActionId(1)), Ok(StateId(1)));
    assert_eq!(g.step(StateId(1), ActionId(2)), Ok(StateId(1)));
    assert!(g.step(StateId(0), ActionId(2)).is_err());
}

#[test]
fn nondeterminism_is_flagged() {
    let mut doc = g0_doc();
    doc.transitions.push(TransitionDoc { from: 0, action: 1, to: 0 });
    let report = validate_game(&doc);
    assert!(report.violations.iter().any(|v| matches!(v, Violation::Nondeterministic { .. })));
}

#[test]
fn partition_is_flagged() {
    let mut doc = g0_doc();
    doc.states[1].player = Player::Environment;
    let report = validate_game(&doc);
    assert!(report.violations.iter().any(|v| matches!(v, Violation::Partition { .. })));
}

#[test]
fn unreachable_states_are_pruned_and_reported() {
    let mut doc = g0_doc();
    doc.initial = vec![1];
    let report = validate_game(&doc);
    assert!(report.violations.iter().any(|v| matches!(v, Violation::Unreachable { .. })));
    let loaded = doc.to_game().unwrap();
    assert_eq!(loaded.pruned, vec![StateId(0)]);
    assert_eq!(loaded.game.num_states(), 1);
}

#[test]
fn dead_end_inputs_are_rejected() {
    let mut doc = g0_doc();
    doc.transitions.retain(|t| t.from != 1);
    assert!(validate_game(&doc).violations.iter().any(|v| matches!(v, Violation::DeadEnd { .. })));
    assert!(doc.to_game().is_err());
}

#[test]
fn g0_runs_and_inclusion() {
    let g = g0_doc().to_game().unwrap().game;
    let mut mu = MemorylessStrategy::empty(2);
    mu.set(StateId(0), [ActionId(1)]);
    mu.set(StateId(1), [ActionId(2)]);
    let runs = induced_runs(&g, &mu, StateId(0), 3).unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0].states, vec![StateId(0), StateId(1), StateId(1), StateId(1)]);
    assert_eq!(induced_runs(&g, &mu, StateId(0), 0).unwrap(), vec![Run::singleton(StateId(0))]);

    let mut wide = mu.clone();
    wide.set(StateId(0), [ActionId(0), ActionId(1)]);
    assert!(strategy_includes(&g, &mu, &mu));
    assert!(strategy_includes(&g, &wide, &mu));
    assert!(!strategy_includes(&g, &mu, &wide));
}

#[test]
fn grid_depth_two_branches_on_environment_moves() {
    let gg = build_example1(&GridConfig::example1(3)).unwrap();
    let g = &gg.game;
    let s = gg.find(Placement { env: 4, sys: 0, turn: Player::System }).unwrap();
    let mut mu = MemorylessStrategy::empty(g.num_states());
    mu.set(s, [action_by_name(g, "up_s")]);
    let runs = induced_runs(g, &mu, s, 2).unwrap();
    // Oracle: after the system moves to cell 3, the environment at cell 4
    // can go to each of its neighbours.
    let after = g.step(s, action_by_name(g, "up_s")).unwrap();
    assert_eq!(runs.len(), g.outgoing(after).len());
    assert_eq!(runs.len(), 4);
}

#[test]
fn json_round_trip_is_byte_stable() {
    let gg = build_example1(&GridConfig::example1(3)).unwrap();
    let text = io::game_to_json(&gg.game);
    let back = io::game_from_json(&text).unwrap();
    assert!(back.pruned.is_empty());
    assert_eq!(io::game_to_json(&back.game), text);
    let g = g0_doc().to_game().unwrap().game;
    let text = io::game_to_json(&g);
    let doc: GameDoc = serde_json::from_str(&text).unwrap();
    assert_eq!(doc, g0_doc());
}

/// Random memoryless strategy, each system state allowed a random nonempty
/// subset of its actions.
fn random_strategy(g: &permrl::Game, seed: u64) -> MemorylessStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mu = MemorylessStrategy::empty(g.num_states());
    for s in g.system_states() {
        let acts: Vec<ActionId> = g.available(s).collect();
        let mut pick: Vec<ActionId> = acts.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
        if pick.is_empty() {
            pick.push(acts[rng.random_range(0..acts.len())]);
        }
        mu.set(s, pick);
    }
    mu
}

fn run_set(g: &permrl::Game, mu: &MemorylessStrategy, depth: usize) -> BTreeSet<(Vec<StateId>, Vec<ActionId>)> {
    g.initial().iter().flat_map(|&s| induced_runs(g, mu, s, depth).unwrap()).map(|r| (r.states, r.actions)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_is_a_function(seed in any::<u64>(), sys in 1usize..8, env in 0usize..8) {
        let g = random_game(seed, sys, env, 3);
        for s in g.states() {
            let acts: Vec<ActionId> = g.available(s).collect();
            let distinct: BTreeSet<ActionId> = acts.iter().copied().collect();
            prop_assert_eq!(acts.len(), distinct.len());
            for a in acts {
                prop_assert_eq!(g.step(s, a), g.step(s, a));
            }
        }
        prop_assert!(g.validate().is_empty());
    }

    #[test]
    fn induced_runs_obey_transitions(seed in any::<u64>(), depth in 0usize..6) {
        let g = random_game(seed, 4, 4, 3);
        let mu = random_strategy(&g, seed);
        for &s in g.initial() {
            for run in induced_runs(&g, &mu, s, depth).unwrap() {
                prop_assert_eq!(run.actions.len() + 1, run.states.len());
                prop_assert_eq!(run.actions.len(), depth);
                for i in 0..run.actions.len() {
                    prop_assert_eq!(g.step(run.states[i], run.actions[i]), Ok(run.states[i + 1]));
                    if g.is_system(run.states[i]) {
                        prop_assert!(mu.allows(run.states[i], run.actions[i]));
                    }
                }
            }
        }
    }

    #[test]
    fn inclusion_is_a_preorder(seed in any::<u64>()) {
        let g = random_game(seed, 5, 3, 3);
        let a = random_strategy(&g, seed.wrapping_add(1));
        let b = random_strategy(&g, seed.wrapping_add(2));
        let c = random_strategy(&g, seed.wrapping_add(3));
        prop_assert!(strategy_includes(&g, &a, &a));
        if strategy_includes(&g, &a, &b) && strategy_includes(&g, &b, &c) {
            prop_assert!(strategy_includes(&g, &a, &c));
        }
        // The union of two strategies includes both.
        let mut union = MemorylessStrategy::empty(g.num_states());
        for s in g.system_states() {
            let mut acts: Vec<ActionId> = a.choice(s).iter().chain(b.choice(s)).copied().collect();
            acts.sort();
            acts.dedup();
            union.set(s, acts);
        }
        prop_assert!(strategy_includes(&g, &union, &a));
        prop_assert!(strategy_includes(&g, &union, &b));
    }

    #[test]
    fn inclusion_matches_run_sets(seed in any::<u64>(), sys in 1usize..10, env in 0usize..10) {
        let g = random_game(seed, sys, env, 3);
        let a = random_strategy(&g, seed.wrapping_add(7));
        let b = random_strategy(&g, seed.wrapping_add(8));
        let equivalent = strategy_includes(&g, &a, &b) && strategy_includes(&g, &b, &a);
        for depth in 0..=6 {
            let (ra, rb) = (run_set(&g, &a, depth), run_set(&g, &b, depth));
            if equivalent {
                prop_assert_eq!(&ra, &rb);
            }
            if strategy_includes(&g, &a, &b) {
                prop_assert!(rb.is_subset(&ra));
            }
        }
    }
}

#[test]
fn builder_rejects_cross_owned_actions() {
    let mut b = GameBuilder::new();
    let a = b.add_action("u", Player::Environment);
    let s = b.add_state(Player::System, []);
    b.add_initial(s);
    b.add_transition(s, a, s);
    assert!(b.build().is_err());
}
