//! System strategies, the runs they induce, and strategy inclusion.

use std::collections::{HashMap, VecDeque};

use crate::game::{ActionId, Game, GameBuilder, GameError, Run, StateId};

/// Non-deterministic memoryless strategy `μ: S_s → 2^{A_c}`.
///
/// Indexed by state id. An empty choice means the strategy is undefined at
/// that state (environment states are always empty).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemorylessStrategy {
    choice: Vec<Vec<ActionId>>,
}

impl MemorylessStrategy {
    pub fn empty(num_states: usize) -> Self {
        MemorylessStrategy { choice: vec![Vec::new(); num_states] }
    }

    /// The strategy allowing every available action at every system state.
    pub fn allow_all(g: &Game) -> Self {
        let mut mu = Self::empty(g.num_states());
        for s in g.system_states() {
            mu.choice[s.index()] = g.available(s).collect();
        }
        mu
    }

    pub fn num_states(&self) -> usize {
        self.choice.len()
    }

    pub fn set(&mut self, s: StateId, actions: impl IntoIterator<Item = ActionId>) {
        let mut actions: Vec<ActionId> = actions.into_iter().collect();
        actions.sort_unstable();
        actions.dedup();
        self.choice[s.index()] = actions;
    }

    pub fn choice(&self, s: StateId) -> &[ActionId] {
        self.choice.get(s.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn allows(&self, s: StateId, a: ActionId) -> bool {
        self.choice(s).binary_search(&a).is_ok()
    }

    pub fn is_defined(&self, s: StateId) -> bool {
        !self.choice(s).is_empty()
    }

    /// Deterministic iff every defined choice is a singleton.
    pub fn is_deterministic(&self) -> bool {
        self.choice.iter().all(|c| c.len() <= 1)
    }

    /// States with a defined choice, in increasing id order.
    pub fn defined_states(&self) -> impl Iterator<Item = (StateId, &[ActionId])> + '_ {
        self.choice.iter().enumerate().filter(|(_, c)| !c.is_empty()).map(|(i, c)| (StateId(i as u32), c.as_slice()))
    }

    /// Checks `choice(s) ⊆ A(s)` at system states and no choice elsewhere.
    pub fn check(&self, g: &Game) -> Result<(), GameError> {
        if self.choice.len() != g.num_states() {
            return Err(GameError::UnknownState(StateId(self.choice.len() as u32)));
        }
        for (s, actions) in self.defined_states() {
            for &a in actions {
                if !g.is_system(s) || g.edge_index(s, a).is_none() {
                    return Err(GameError::UndefinedTransition { state: s, action: a });
                }
            }
        }
        Ok(())
    }

    /// States reachable from `I` when the system follows this strategy and
    /// the environment plays anything. System states without a choice are
    /// reached but not expanded.
    pub fn reachable(&self, g: &Game) -> Vec<bool> {
        g.reachable_by(|s, e| !g.is_system(s) || self.allows(s, e.action))
    }
}

/// All length-`depth` prefixes of runs from `s0` induced by `mu`: system
/// states follow `mu`, environment states branch on every action.
pub fn induced_runs(g: &Game, mu: &MemorylessStrategy, s0: StateId, depth: usize) -> Result<Vec<Run>, GameError> {
    if s0.index() >= g.num_states() {
        return Err(GameError::UnknownState(s0));
    }
    let mut out = Vec::new();
    let mut stack = vec![Run::singleton(s0)];
    while let Some(run) = stack.pop() {
        if run.len() == depth {
            out.push(run);
            continue;
        }
        let s = run.last();
        let mut extended = false;
        for e in g.outgoing(s) {
            if g.is_system(s) && !mu.allows(s, e.action) {
                continue;
            }
            let mut next = run.clone();
            next.states.push(e.target);
            next.actions.push(e.action);
            stack.push(next);
            extended = true;
        }
        if !extended {
            return Err(GameError::DeadEnd(s));
        }
    }
    out.sort();
    Ok(out)
}

/// Whether `mu1` includes `mu2`, i.e. `R^{μ₂}(s) ⊆ R^{μ₁}(s)` for every
/// initial `s`. For memoryless strategies on a fixed game this holds iff
/// `mu2(s) ⊆ mu1(s)` at every system state reachable under `mu2`.
pub fn strategy_includes(g: &Game, mu1: &MemorylessStrategy, mu2: &MemorylessStrategy) -> bool {
    let reach = mu2.reachable(g);
    g.system_states().filter(|s| reach[s.index()]).all(|s| mu2.choice(s).iter().all(|&a| mu1.allows(s, a)))
}

/// Finite-memory strategy `(μ_m, ρ_m, M)` with `M = {0, …, memory_size - 1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMemoryStrategy {
    memory_size: u32,
    initial_memory: u32,
    act: HashMap<(StateId, u32), Vec<ActionId>>,
    update: HashMap<(StateId, u32), u32>,
}

impl FiniteMemoryStrategy {
    pub fn new(memory_size: u32, initial_memory: u32) -> Self {
        assert!(initial_memory < memory_size, "initial memory outside M");
        FiniteMemoryStrategy { memory_size, initial_memory, act: HashMap::new(), update: HashMap::new() }
    }

    pub fn memory_size(&self) -> u32 {
        self.memory_size
    }

    pub fn set_act(&mut self, s: StateId, m: u32, actions: impl IntoIterator<Item = ActionId>) {
        let mut actions: Vec<ActionId> = actions.into_iter().collect();
        actions.sort_unstable();
        actions.dedup();
        self.act.insert((s, m), actions);
    }

    pub fn set_update(&mut self, s: StateId, m: u32, next: u32) {
        assert!(next < self.memory_size, "memory update outside M");
        self.update.insert((s, m), next);
    }

    pub fn act(&self, s: StateId, m: u32) -> &[ActionId] {
        self.act.get(&(s, m)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `ρ_m(s, m)`; unset entries keep the memory unchanged.
    pub fn update(&self, s: StateId, m: u32) -> u32 {
        self.update.get(&(s, m)).copied().unwrap_or(m)
    }
}

/// The product of a game with a finite-memory strategy's memory.
#[derive(Clone, Debug)]
pub struct MemoryProduct {
    pub game: Game,
    /// `origin[product state] = (game state, memory)`.
    pub origin: Vec<(StateId, u32)>,
    /// The memoryless strategy on the product that plays `act(s, m)`.
    pub strategy: MemorylessStrategy,
}

/// Folds the memory of `fm` into the state space: product states are
/// `(s, m)`, initial states are `(s, m₀)` for `s ∈ I`, and the edge
/// `(s, m) --a--> (s', ρ_m(s', m))` mirrors `s --a--> s'`. Only the part
/// reachable from the initial states is built.
pub fn fold_memory(g: &Game, fm: &FiniteMemoryStrategy) -> Result<MemoryProduct, GameError> {
    let mut b = GameBuilder::new();
    for name in g.ap_names() {
        b.add_prop(name.clone());
    }
    for info in g.actions() {
        b.add_action(info.name.clone(), info.owner);
    }
    let mut index: HashMap<(StateId, u32), StateId> = HashMap::new();
    let mut origin = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |b: &mut GameBuilder,
                      origin: &mut Vec<(StateId, u32)>,
                      queue: &mut VecDeque<(StateId, u32)>,
                      key: (StateId, u32)| {
        *index.entry(key).or_insert_with(|| {
            let id = b.add_state(g.player(key.0), g.labels(key.0).iter().copied());
            origin.push(key);
            queue.push_back(key);
            id
        })
    };
    for &s in g.initial() {
        let id = intern(&mut b, &mut origin, &mut queue, (s, fm.initial_memory));
        b.add_initial(id);
    }
    let mut edges = Vec::new();
    while let Some((s, m)) = queue.pop_front() {
        let from = intern(&mut b, &mut origin, &mut queue, (s, m));
        for e in g.outgoing(s) {
            let next = (e.target, fm.update(e.target, m));
            let to = intern(&mut b, &mut origin, &mut queue, next);
            edges.push((from, e.action, to));
        }
    }
    for (from, a, to) in edges {
        b.add_transition(from, a, to);
    }
    let game = b.build()?;
    let mut strategy = MemorylessStrategy::empty(game.num_states());
    for p in game.system_states() {
        let (s, m) = origin[p.index()];
        for &a in fm.act(s, m) {
            if g.edge_index(s, a).is_none() {
                return Err(GameError::UndefinedTransition { state: s, action: a });
            }
        }
        strategy.set(p, fm.act(s, m).iter().copied());
    }
    debug_assert_eq!(game.num_states(), origin.len());
    Ok(MemoryProduct { game, origin, strategy })
}

/// Deterministic choice helper: builds a strategy with one action per state.
pub fn deterministic(num_states: usize, picks: impl IntoIterator<Item = (StateId, ActionId)>) -> MemorylessStrategy {
    let mut mu = MemorylessStrategy::empty(num_states);
    for (s, a) in picks {
        mu.set(s, [a]);
    }
    mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::g0;

    const S0: StateId = StateId(0);
    const S1: StateId = StateId(1);
    const A0: ActionId = ActionId(0);
    const A1: ActionId = ActionId(1);
    const A2: ActionId = ActionId(2);

    #[test]
    fn g0_single_trace() {
        let g = g0();
        let mu = deterministic(2, [(S0, A1), (S1, A2)]);
        let runs = induced_runs(&g, &mu, S0, 3).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].states, vec![S0, S1, S1, S1]);
        assert!(runs[0].is_valid(&g));
    }

    #[test]
    fn depth_zero_is_singleton() {
        let g = g0();
        let mu = MemorylessStrategy::allow_all(&g);
        assert_eq!(induced_runs(&g, &mu, S1, 0).unwrap(), vec![Run::singleton(S1)]);
    }

    #[test]
    fn dead_end_under_strategy() {
        let g = g0();
        let mu = deterministic(2, [(S0, A1)]);
        assert_eq!(induced_runs(&g, &mu, S0, 2), Err(GameError::DeadEnd(S1)));
    }

    #[test]
    fn inclusion_examples() {
        let g = g0();
        let wide = {
            let mut mu = MemorylessStrategy::allow_all(&g);
            mu.set(S0, [A0, A1]);
            mu
        };
        let narrow = deterministic(2, [(S0, A1), (S1, A2)]);
        assert!(strategy_includes(&g, &wide, &wide));
        assert!(strategy_includes(&g, &wide, &narrow));
        assert!(!strategy_includes(&g, &narrow, &wide));
    }

    #[test]
    fn check_rejects_unavailable_action() {
        let g = g0();
        let mu = deterministic(2, [(S0, A2)]);
        assert!(mu.check(&g).is_err());
        assert!(MemorylessStrategy::allow_all(&g).check(&g).is_ok());
    }

    #[test]
    fn fold_g0_finite_memory_strategy() {
        // μ′: at s₀ with memory 0 both a₀ and a₁, with memory 1 only a₁;
        // memory becomes 1 after any visit to s₀ and stays 0 at s₁.
        let g = g0();
        let mut fm = FiniteMemoryStrategy::new(2, 0);
        fm.set_act(S0, 0, [A0, A1]);
        fm.set_act(S0, 1, [A1]);
        fm.set_act(S1, 0, [A2]);
        fm.set_act(S1, 1, [A2]);
        fm.set_update(S0, 0, 1);
        fm.set_update(S0, 1, 1);
        fm.set_update(S1, 1, 1);
        fm.set_update(S1, 0, 0);
        let product = fold_memory(&g, &fm).unwrap();
        assert!(product.game.validate().is_empty());
        assert!(product.strategy.check(&product.game).is_ok());
        // From (s₀, 0) the strategy can loop at most once before leaving s₀.
        let start = product.origin.iter().position(|&o| o == (S0, 0)).map(|i| StateId(i as u32)).unwrap();
        let runs = induced_runs(&product.game, &product.strategy, start, 3).unwrap();
        let mut projected: Vec<Vec<StateId>> =
            runs.iter().map(|r| r.states.iter().map(|p| product.origin[p.index()].0).collect()).collect();
        projected.sort();
        assert_eq!(projected, vec![vec![S0, S0, S1, S1], vec![S0, S1, S1, S1]]);
    }
}
