//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use permrl::formula::Formula;
use permrl::game::{ActionId, Game, GameBuilder, Player, StateId};
use permrl::synth::{BoundSpec, SafetySpec};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PROPS: [&str; 3] = ["p", "q", "r"];

/// Random well-formed game: every state has at least one action, targets
/// are uniform, labels are random subsets of [`PROPS`]. Unreachable states
/// are pruned.
pub fn random_game(seed: u64, system: usize, environment: usize, max_actions: usize) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GameBuilder::new();
    let props: Vec<_> = PROPS.iter().map(|p| b.add_prop(*p)).collect();
    let sys_actions: Vec<_> = (0..max_actions).map(|i| b.add_action(format!("c{i}"), Player::System)).collect();
    let env_actions: Vec<_> = (0..max_actions).map(|i| b.add_action(format!("u{i}"), Player::Environment)).collect();
    let n = system + environment;
    let mut players: Vec<Player> =
        (0..n).map(|i| if i < system { Player::System } else { Player::Environment }).collect();
    players.shuffle(&mut rng);
    let states: Vec<StateId> = players
        .iter()
        .map(|&p| {
            let labels: Vec<_> = props.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            b.add_state(p, labels)
        })
        .collect();
    for (i, &s) in states.iter().enumerate() {
        let pool = if players[i] == Player::System { &sys_actions } else { &env_actions };
        let k = rng.random_range(1..=max_actions);
        let mut acts = pool.clone();
        acts.shuffle(&mut rng);
        for &a in &acts[..k] {
            b.add_transition(s, a, states[rng.random_range(0..n)]);
        }
    }
    let initial = rng.random_range(1..=2.min(n));
    for &s in states.choose_multiple(&mut rng, initial) {
        b.add_initial(s);
    }
    b.build().unwrap().prune_unreachable().game
}

fn random_literal(rng: &mut ChaCha8Rng, next: bool) -> Formula {
    let name = PROPS[rng.random_range(0..PROPS.len())];
    let atom = if next && rng.random_bool(0.6) { Formula::next(name) } else { Formula::prop(name) };
    if rng.random_bool(0.5) {
        Formula::not(atom)
    } else {
        atom
    }
}

/// Random conjunction of 1–2 clauses of 2 literals each over current and
/// next-step propositions; `phi0` is `true` or a literal.
pub fn random_spec(seed: u64) -> SafetySpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let clauses = rng.random_range(1..=2);
    let phi1 = Formula::And(
        (0..clauses).map(|_| Formula::Or((0..2).map(|_| random_literal(&mut rng, true)).collect())).collect(),
    );
    let phi0 = if rng.random_bool(0.7) { Formula::Const(true) } else { random_literal(&mut rng, false) };
    SafetySpec::new(phi0, phi1)
}

/// Winning region by recomputing the one-step elimination over the whole
/// state set until nothing changes. Returns membership and the allowed
/// actions per state.
pub fn naive_fixed_point(g: &Game, spec: &BoundSpec) -> (Vec<bool>, Vec<Vec<ActionId>>) {
    let mut w = vec![true; g.num_states()];
    loop {
        let mut next = w.clone();
        for s in g.states() {
            if !w[s.index()] {
                continue;
            }
            let good = |t: StateId| spec.edge_ok(g, s, t) && w[t.index()];
            let keep = if g.is_system(s) {
                g.outgoing(s).iter().any(|e| good(e.target))
            } else {
                !g.outgoing(s).is_empty() && g.outgoing(s).iter().all(|e| good(e.target))
            };
            next[s.index()] = keep;
        }
        if next == w {
            break;
        }
        w = next;
    }
    let allowed = g
        .states()
        .map(|s| {
            if !w[s.index()] || !g.is_system(s) {
                return Vec::new();
            }
            g.outgoing(s)
                .iter()
                .filter(|e| spec.edge_ok(g, s, e.target) && w[e.target.index()])
                .map(|e| e.action)
                .collect()
        })
        .collect();
    (w, allowed)
}

/// Game-tree search to a fixed depth: `out[s]` is whether the system can
/// keep every edge `φ₁`-safe for `depth` more steps from `s`. Layered so the
/// tree is never expanded twice at the same height.
pub fn survivors(g: &Game, spec: &BoundSpec, depth: usize) -> Vec<bool> {
    let mut ok = vec![true; g.num_states()];
    for _ in 0..depth {
        ok = g
            .states()
            .map(|s| {
                let safe = |t: StateId| spec.edge_ok(g, s, t) && ok[t.index()];
                if g.is_system(s) {
                    g.outgoing(s).iter().any(|e| safe(e.target))
                } else {
                    !g.outgoing(s).is_empty() && g.outgoing(s).iter().all(|e| safe(e.target))
                }
            })
            .collect();
    }
    ok
}

pub fn action_by_name(g: &Game, name: &str) -> ActionId {
    ActionId(g.actions().iter().position(|a| a.name == name).unwrap() as u32)
}
