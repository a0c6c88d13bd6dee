use permrl::gridworld::{
    build_example1, build_example3, is_diagonal, DiagonalReward, GridConfig, Placement, DIRECTIONS,
};
use permrl::learn::RewardOracle;
use permrl::synth::maximally_permissive;
use permrl::{Player, StateId};

#[test]
fn mobility_and_alternation() {
    for n in 2..=5 {
        let gg = build_example1(&GridConfig::example1(n)).unwrap();
        let g = &gg.game;
        for s in g.states() {
            let p = gg.placement[s.index()];
            let k = g.outgoing(s).len();
            let (r, c) = match p.turn {
                Player::System => (p.sys / n, p.sys % n),
                Player::Environment => (p.env / n, p.env % n),
            };
            let boundary =
                usize::from(r == 0) + usize::from(r == n - 1) + usize::from(c == 0) + usize::from(c == n - 1);
            let expected = 4 - boundary + usize::from(p.turn == Player::System);
            assert_eq!(k, expected, "{p:?}");
            for e in g.outgoing(s) {
                assert_ne!(g.player(e.target), g.player(s));
            }
        }
    }
}

#[test]
fn initial_states_are_non_collision_system_turns() {
    let gg = build_example1(&GridConfig::example1(3)).unwrap();
    assert_eq!(gg.game.initial().len(), 72);
    for &s in gg.game.initial() {
        let p = gg.placement[s.index()];
        assert_eq!(p.turn, Player::System);
        assert_ne!(p.env, p.sys);
    }
}

#[test]
fn diagonal_pairs_match_coordinate_scan() {
    let n = 3;
    let gg = build_example1(&GridConfig::example1(n)).unwrap();
    let g = &gg.game;
    let oracle = DiagonalReward::new(g, n);
    let mut from_oracle = 0;
    let mut by_hand = 0;
    for s in g.system_states() {
        for a in g.available(s) {
            let r: f64 = oracle.reward(s, a);
            from_oracle += r as usize;
        }
        // Coordinate scan: each move (including stay) that lands the system
        // one row and one column from the environment.
        let p = gg.placement[s.index()];
        let (er, ec) = ((p.env / n) as i32, (p.env % n) as i32);
        let (sr, sc) = ((p.sys / n) as i32, (p.sys % n) as i32);
        for (dr, dc) in DIRECTIONS.iter().map(|d| (d.1, d.2)).chain([(0, 0)]) {
            let (r, c) = (sr + dr, sc + dc);
            if (0..n as i32).contains(&r) && (0..n as i32).contains(&c) && (r - er).abs() == 1 && (c - ec).abs() == 1 {
                by_hand += 1;
            }
        }
    }
    assert_eq!(from_oracle, by_hand);
    // Unordered diagonal cell pairs in a 3×3 grid: 2·(N−1)².
    let cells = 0..n * n;
    let pairs =
        cells.clone().flat_map(|a| cells.clone().map(move |b| (a, b))).filter(|&(a, b)| a < b && is_diagonal(n, a, b));
    assert_eq!(pairs.count(), 8);
}

#[test]
fn counter_games_are_nested() {
    let games: Vec<_> = [4, 6]
        .iter()
        .map(|&c| {
            let ex = build_example3(&GridConfig::example3(3, c)).unwrap();
            let mu = maximally_permissive(ex.game(), &ex.spec).unwrap();
            (ex, mu)
        })
        .collect();
    let (small, mu_small) = &games[0];
    let (large, mu_large) = &games[1];
    let mut shared = 0;
    for s in small.game().system_states().filter(|&s| mu_small.is_defined(s)) {
        let (base, c) = small.product.origin[s.index()];
        let Some(t) = large.product.find(base, c) else { continue };
        shared += 1;
        for a in mu_small.choice(s) {
            assert!(mu_large.allows(t, *a), "{:?}", small.placement(s));
        }
    }
    assert!(shared > 0);
}

#[test]
fn counter_product_keeps_positions() {
    let ex = build_example3(&GridConfig::example3(3, 4)).unwrap();
    let oracle = DiagonalReward::new(ex.game(), 3);
    for s in ex.game().states() {
        let (p, c) = ex.placement(s);
        assert!(c < 4);
        assert_eq!(oracle.diagonal_at(s), is_diagonal(3, p.env, p.sys));
    }
}

#[test]
fn short_counters_are_unrealizable() {
    // The centre is two moves from either target.
    let cfg = GridConfig { system_start: Some(4), env_start: Some(0), ..GridConfig::example3(3, 1) };
    let ex = build_example3(&cfg).unwrap();
    assert!(maximally_permissive(ex.game(), &ex.spec).is_err());
    let roomy = GridConfig { counter_max: Some(4), ..cfg };
    let ex = build_example3(&roomy).unwrap();
    assert!(maximally_permissive(ex.game(), &ex.spec).is_ok());
}

#[test]
fn fixed_starts_give_single_initial_state() {
    let cfg = GridConfig { system_start: Some(0), env_start: Some(8), ..GridConfig::example1(3) };
    let gg = build_example1(&cfg).unwrap();
    assert_eq!(gg.game.initial().len(), 1);
    let s: StateId = gg.game.initial()[0];
    assert_eq!(gg.placement[s.index()], Placement { env: 8, sys: 0, turn: Player::System });
}
