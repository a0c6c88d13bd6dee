//! Command-line front end: build, synthesize, restrict, learn, evaluate and
//! verify, plus the end-to-end pipeline.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bruteforce;
use crate::game::{ActionId, Game, StateId};
use crate::gridworld::{build_example1, build_example3, DiagonalReward, GridConfig, GridError};
use crate::io::{self, FormatError};
use crate::learn::maximin_q::{settled_at, EPISODE_STREAM, LEARNER_STREAM};
use crate::learn::{
    greedy_strategy, maximin_q_learn, worst_case_reward, LearnConfig, Learned, RewardOracle, RewardTable,
};
use crate::restrict::{apply_strategy, lift_strategy, RestrictError, StateMap};
use crate::strategy::MemorylessStrategy;
use crate::synth::{check_realizable, solve_bound, SafetySpec, SynthError};

pub const EXIT_UNREALIZABLE: i32 = 2;
pub const EXIT_MALFORMED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Unrealizable(SynthError),
    #[error("malformed input {path}: {msg}")]
    Malformed { path: String, msg: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Unrealizable(_) => EXIT_UNREALIZABLE,
            CliError::Malformed { .. } => EXIT_MALFORMED,
            CliError::Io { .. } => EXIT_IO,
            CliError::Other(_) => 1,
        }
    }

    fn malformed(path: &Path, msg: impl ToString) -> Self {
        CliError::Malformed { path: path.display().to_string(), msg: msg.to_string() }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Unrealizable { .. } => CliError::Unrealizable(e),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::Synth(s) => s.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<RestrictError> for CliError {
    fn from(e: RestrictError) -> Self {
        CliError::Other(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn load_game(path: &Path) -> Result<Game> {
    let loaded = io::game_from_json(&read(path)?).map_err(|e| CliError::malformed(path, e))?;
    if !loaded.pruned.is_empty() {
        warn!(
            "{}: pruned {} unreachable states; output ids use the pruned numbering",
            path.display(),
            loaded.pruned.len()
        );
    }
    Ok(loaded.game)
}

pub fn load_spec(path: &Path) -> Result<SafetySpec> {
    read(path)?.parse().map_err(|e: SynthError| CliError::malformed(path, e))
}

pub fn load_strategy(path: &Path, g: &Game) -> Result<MemorylessStrategy> {
    let mu = io::strategy_from_json(&read(path)?, g.num_states()).map_err(|e| CliError::malformed(path, e))?;
    mu.check(g).map_err(|e| CliError::malformed(path, e))?;
    Ok(mu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Example1,
    Example3,
    Custom,
}

/// Where instantaneous rewards come from.
#[derive(Clone, Debug)]
pub enum Reward {
    Diagonal(DiagonalReward),
    Table(HashMap<(StateId, ActionId), f64>),
}

impl RewardOracle<f64> for Reward {
    fn reward(&self, s: StateId, a: ActionId) -> f64 {
        match self {
            Reward::Diagonal(d) => RewardOracle::<f64>::reward(d, s, a),
            Reward::Table(t) => t.get(&(s, a)).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct RewardArgs {
    /// `state,action,reward` CSV; missing pairs get 0.
    #[arg(long, conflicts_with = "diagonal")]
    pub rewards: Option<PathBuf>,
    /// Diagonal reward for a grid game of this side length.
    #[arg(long, value_name = "N")]
    pub diagonal: Option<u32>,
}

impl RewardArgs {
    fn load(&self, g: &Game) -> Result<Reward> {
        match (&self.rewards, self.diagonal) {
            (Some(p), _) => Ok(Reward::Table(io::parse_reward_csv(&read(p)?).map_err(|e| CliError::malformed(p, e))?)),
            (None, Some(n)) => Ok(Reward::Diagonal(DiagonalReward::new(g, n))),
            (None, None) => Err(CliError::Other("one of --rewards or --diagonal is required".into())),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "permrl", version, about = "Permissive safety synthesis with maximin-Q learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a grid-world game and its safety spec.
    Build {
        #[arg(long, value_enum, default_value = "example1")]
        scenario: Scenario,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long)]
        counter_max: Option<u32>,
        #[arg(long)]
        system_start: Option<u32>,
        #[arg(long)]
        env_start: Option<u32>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
    /// Compute the maximally permissive strategy.
    Synth {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Restrict a game to a permissive strategy.
    Restrict {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        map_out: PathBuf,
    },
    /// Run maximin-Q on a (restricted) game.
    Learn {
        #[arg(long)]
        game: PathBuf,
        #[command(flatten)]
        reward: RewardArgs,
        /// JSON learning config; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iterations: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Worst-case discounted reward of a deterministic strategy.
    Eval {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        #[command(flatten)]
        reward: RewardArgs,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a strategy is winning and, on small games, maximally permissive.
    Verify {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        /// Maximum number of system states for the enumeration.
        #[arg(long, default_value_t = 16)]
        limit: usize,
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Build, synthesize, restrict, learn and evaluate in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub counter_max: Option<u32>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated seeds, one run each.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub max_iterations: Option<u64>,
    #[arg(long)]
    pub game: Option<PathBuf>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub rewards: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Parallel runs across seeds.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

/// Experiment manifest for `pipeline`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scenario: Scenario,
    pub n: u32,
    pub counter_max: Option<u32>,
    pub game: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub rewards: Option<PathBuf>,
    pub learn: LearnConfig,
    /// When non-empty, overrides `learn.seed` with one run per entry.
    pub seeds: Vec<u64>,
    pub eval_horizon: usize,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scenario: Scenario::Example1,
            n: 3,
            counter_max: None,
            game: None,
            spec: None,
            rewards: None,
            learn: LearnConfig::default(),
            seeds: Vec::new(),
            eval_horizon: 12,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    /// Loads the config file, if any, then applies the flags.
    pub fn from_args(args: &PipelineArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => serde_json::from_str(&read(p)?).map_err(|e| CliError::malformed(p, e))?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = args.scenario {
            cfg.scenario = s;
        }
        if let Some(n) = args.n {
            cfg.n = n;
        }
        if args.counter_max.is_some() {
            cfg.counter_max = args.counter_max;
        }
        if let Some(g) = args.gamma {
            cfg.learn.gamma = g;
        }
        if let Some(s) = args.seed {
            cfg.learn.seed = s;
        }
        if !args.seeds.is_empty() {
            cfg.seeds = args.seeds.clone();
        }
        if let Some(m) = args.max_iterations {
            cfg.learn.max_iterations = m;
        }
        for (slot, flag) in
            [(&mut cfg.game, &args.game), (&mut cfg.spec, &args.spec), (&mut cfg.rewards, &args.rewards)]
        {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        if let Some(d) = &args.out_dir {
            cfg.out_dir.clone_from(d);
        }
        if cfg.scenario == Scenario::Example3 && cfg.counter_max.is_none() {
            return Err(CliError::Other("example3 needs --counter-max".into()));
        }
        if !(0.0..1.0).contains(&cfg.learn.gamma) {
            return Err(CliError::Other(format!("gamma must be in [0, 1), got {}", cfg.learn.gamma)));
        }
        Ok(cfg)
    }
}

/// The game, spec and reward a pipeline run starts from.
pub struct Instance {
    pub game: Game,
    pub spec: SafetySpec,
    pub reward_n: Option<u32>,
    pub rewards: Option<HashMap<(StateId, ActionId), f64>>,
    /// States dropped as unreachable while building.
    pub pruned: usize,
}

pub fn instance(cfg: &PipelineConfig) -> Result<Instance> {
    match cfg.scenario {
        Scenario::Example1 => {
            let gg = build_example1(&GridConfig::example1(cfg.n))?;
            Ok(Instance { pruned: gg.pruned, game: gg.game, spec: gg.spec, reward_n: Some(cfg.n), rewards: None })
        }
        Scenario::Example3 => {
            let c = cfg.counter_max.expect("checked when parsing");
            let ex = build_example3(&GridConfig::example3(cfg.n, c))?;
            Ok(Instance {
                pruned: ex.base.pruned + ex.product.pruned,
                game: ex.product.game,
                spec: ex.spec,
                reward_n: Some(cfg.n),
                rewards: None,
            })
        }
        Scenario::Custom => {
            let (Some(gp), Some(sp)) = (&cfg.game, &cfg.spec) else {
                return Err(CliError::Other("custom scenario needs game and spec paths".into()));
            };
            let loaded = io::game_from_json(&read(gp)?).map_err(|e| CliError::malformed(gp, e))?;
            let spec = load_spec(sp)?;
            let rewards = match &cfg.rewards {
                Some(rp) => {
                    let raw = io::parse_reward_csv(&read(rp)?).map_err(|e| CliError::malformed(rp, e))?;
                    let renumber: HashMap<StateId, StateId> =
                        loaded.origin.iter().enumerate().map(|(i, &d)| (d, StateId(i as u32))).collect();
                    Some(raw.into_iter().filter_map(|((s, a), r)| renumber.get(&s).map(|&t| ((t, a), r))).collect())
                }
                None => None,
            };
            if rewards.is_none() {
                return Err(CliError::Other("custom scenario needs a rewards CSV".into()));
            }
            Ok(Instance { pruned: loaded.pruned.len(), game: loaded.game, spec, reward_n: None, rewards })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Streams {
    pub learner: u64,
    pub episode_starts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnSummary {
    pub iterations: u64,
    pub converged_at: Option<u64>,
    /// Last window whose `max |ΔV|` was at least 10⁻³.
    pub settled_at: u64,
    pub final_delta_v: Option<f64>,
    /// `max v(ŝ)` over the system states of `Ĝ`.
    pub max_v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub horizon: usize,
    /// Worst-case reward of the greedy strategy, maximized over system
    /// states of `Ĝ`: lower and upper bracket.
    pub max_greedy_lower: f64,
    pub max_greedy_upper: f64,
}

/// Fixed-seed content; wall-clock times are kept in [`Timing`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub n: Option<u32>,
    pub counter_max: Option<u32>,
    pub gamma: f64,
    pub seed: u64,
    pub prng_streams: Streams,
    pub game_states: usize,
    pub game_system_states: usize,
    pub game_edges: usize,
    pub pruned_while_building: usize,
    pub winning_states: usize,
    pub edge_work: usize,
    pub ghat_states: usize,
    pub ghat_system_states: usize,
    pub ghat_edges: usize,
    pub learn: LearnSummary,
    pub eval: EvalSummary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timing {
    pub synth_seconds: f64,
    pub restrict_seconds: f64,
    pub learn_seconds: f64,
    pub eval_seconds: f64,
}

/// Everything one pipeline run produced.
pub struct Outcome {
    pub summary: Summary,
    pub timing: Timing,
    pub ghat: Game,
    pub map: StateMap,
    pub permissive: MemorylessStrategy,
    pub learned: Learned<f64>,
    pub greedy: MemorylessStrategy,
}

/// Algorithm steps on an already built instance, without writing files.
pub fn run_instance(inst: &Instance, learn: &LearnConfig, horizon: usize, cfg: &PipelineConfig) -> Result<Outcome> {
    let g = &inst.game;
    let t = Instant::now();
    let spec = inst.spec.bind(g)?;
    let region = solve_bound(g, &spec);
    check_realizable(g, &spec, &region)?;
    let permissive = region.strategy();
    let synth_seconds = t.elapsed().as_secs_f64();
    info!("winning region: {} of {} states, edge work {}", region.len(), g.num_states(), region.edge_work);

    let t = Instant::now();
    let (ghat, map) = apply_strategy(g, &permissive)?;
    let restrict_seconds = t.elapsed().as_secs_f64();
    info!("restricted game: {} states, {} system", ghat.num_states(), ghat.num_system_states());

    let reward = match (&inst.rewards, inst.reward_n) {
        (Some(t), _) => {
            let local = t.iter().filter_map(|(&(s, a), &r)| map.restricted(s).map(|h| ((h, a), r))).collect();
            Reward::Table(local)
        }
        (None, Some(n)) => Reward::Diagonal(DiagonalReward::new(&ghat, n)),
        (None, None) => return Err(CliError::Other("no reward source".into())),
    };

    let t = Instant::now();
    let learned = maximin_q_learn(&ghat, &reward, learn, None);
    let learn_seconds = t.elapsed().as_secs_f64();
    let greedy = greedy_strategy(&learned.q, &ghat);

    let t = Instant::now();
    let table = RewardTable::from_oracle(&ghat, &reward);
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for s in ghat.system_states() {
        let b = worst_case_reward(&ghat, &greedy, &table, s, learn.gamma, horizon)?;
        lo = lo.max(b.lower);
        hi = hi.max(b.upper);
    }
    let eval_seconds = t.elapsed().as_secs_f64();

    let max_v = learned.v.max_over(ghat.system_states()).unwrap_or(0.0);
    let summary = Summary {
        scenario: cfg.scenario,
        n: inst.reward_n,
        counter_max: cfg.counter_max.filter(|_| cfg.scenario == Scenario::Example3),
        gamma: learn.gamma,
        seed: learn.seed,
        prng_streams: Streams { learner: LEARNER_STREAM, episode_starts: EPISODE_STREAM },
        game_states: g.num_states(),
        game_system_states: g.num_system_states(),
        game_edges: g.num_edges(),
        pruned_while_building: inst.pruned,
        winning_states: region.len(),
        edge_work: region.edge_work,
        ghat_states: ghat.num_states(),
        ghat_system_states: ghat.num_system_states(),
        ghat_edges: ghat.num_edges(),
        learn: LearnSummary {
            iterations: learned.log.iterations,
            converged_at: learned.log.converged_at,
            settled_at: settled_at(&learned.log, 1e-3),
            final_delta_v: learned.log.windows.last().map(|w| w.1),
            max_v,
        },
        eval: EvalSummary { horizon, max_greedy_lower: lo, max_greedy_upper: hi },
    };
    Ok(Outcome {
        summary,
        timing: Timing { synth_seconds, restrict_seconds, learn_seconds, eval_seconds },
        ghat,
        map,
        permissive,
        learned,
        greedy,
    })
}

impl From<crate::game::GameError> for CliError {
    fn from(e: crate::game::GameError) -> Self {
        CliError::Other(e.to_string())
    }
}

pub fn q_csv(g: &Game, learned: &Learned<f64>) -> String {
    let rows = g.states().flat_map(|s| {
        g.edge_range(s)
            .map(move |i| vec![s.0.to_string(), g.edge(i).action.0.to_string(), learned.q.edge(i).to_string()])
    });
    io::write_csv(&["state", "action", "q"], rows)
}

pub fn v_csv(g: &Game, learned: &Learned<f64>) -> String {
    io::write_csv(&["state", "v"], g.states().map(|s| vec![s.0.to_string(), learned.v.get(s).to_string()]))
}

/// Writes every artifact of `out` into `dir`.
pub fn write_outcome(dir: &Path, out: &Outcome) -> Result<()> {
    write(&dir.join("ghat.json"), &io::game_to_json(&out.ghat))?;
    write(&dir.join("state_map.json"), &io::state_map_to_json(&out.map))?;
    write(&dir.join("permissive.json"), &io::strategy_to_json(&out.permissive))?;
    write(&dir.join("greedy_ghat.json"), &io::strategy_to_json(&out.greedy))?;
    write(&dir.join("greedy.json"), &io::strategy_to_json(&lift_strategy(&out.map, &out.greedy)))?;
    write(&dir.join("q.csv"), &q_csv(&out.ghat, &out.learned))?;
    write(&dir.join("v.csv"), &v_csv(&out.ghat, &out.learned))?;
    write(&dir.join("convergence.csv"), &out.learned.log.to_csv())?;
    write(&dir.join("summary.json"), &to_json(&out.summary))?;
    write(&dir.join("timing.json"), &to_json(&out.timing))?;
    Ok(())
}

/// Runs the pipeline for every configured seed, `jobs` at a time.
pub fn run_pipeline(cfg: &PipelineConfig, jobs: usize) -> Result<Vec<Summary>> {
    let inst = instance(cfg)?;
    let seeds = if cfg.seeds.is_empty() { vec![cfg.learn.seed] } else { cfg.seeds.clone() };
    let multi = seeds.len() > 1;
    let run = |seed: u64| -> Result<Summary> {
        let learn = LearnConfig { seed, ..cfg.learn.clone() };
        let out = run_instance(&inst, &learn, cfg.eval_horizon, cfg)?;
        let dir = if multi { cfg.out_dir.join(format!("seed_{seed}")) } else { cfg.out_dir.clone() };
        write_outcome(&dir, &out)?;
        Ok(out.summary)
    };
    let jobs = jobs.max(1);
    let mut results = Vec::with_capacity(seeds.len());
    for chunk in seeds.chunks(jobs) {
        let batch: Vec<Result<Summary>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk.iter().map(|&seed| scope.spawn(move || run(seed))).collect();
            handles.into_iter().map(|h| h.join().expect("pipeline worker panicked")).collect()
        });
        results.extend(batch);
    }
    results.into_iter().collect()
}

fn run_command(cmd: Command) -> Result<()> {
    match cmd {
        Command::Build { scenario, n, counter_max, system_start, env_start, out, spec_out } => {
            let grid = GridConfig { system_start, env_start, ..GridConfig::example1(n) };
            let (game, spec) = match scenario {
                Scenario::Example1 => {
                    let gg = build_example1(&grid)?;
                    (gg.game, gg.spec)
                }
                Scenario::Example3 => {
                    let c = counter_max.ok_or_else(|| CliError::Other("example3 needs --counter-max".into()))?;
                    let base = GridConfig::example3(n, c);
                    let ex = build_example3(&GridConfig { system_start, env_start, ..base })?;
                    (ex.product.game, ex.spec)
                }
                Scenario::Custom => return Err(CliError::Other("build only makes grid scenarios".into())),
            };
            write(&out, &io::game_to_json(&game))?;
            if let Some(p) = spec_out {
                write(&p, &spec.to_string())?;
            }
            println!(
                "{} states, {} system, {} transitions",
                game.num_states(),
                game.num_system_states(),
                game.num_edges()
            );
        }
        Command::Synth { game, spec, out } => {
            let g = load_game(&game)?;
            let spec = load_spec(&spec)?.bind(&g).map_err(|e| CliError::malformed(&spec, e))?;
            let region = solve_bound(&g, &spec);
            check_realizable(&g, &spec, &region)?;
            write(&out, &io::strategy_to_json(&region.strategy()))?;
            println!("winning states: {} of {}; edge work {}", region.len(), g.num_states(), region.edge_work);
        }
        Command::Restrict { game, strategy, out, map_out } => {
            let g = load_game(&game)?;
            let mu = load_strategy(&strategy, &g)?;
            let (ghat, map) = apply_strategy(&g, &mu)?;
            write(&out, &io::game_to_json(&ghat))?;
            write(&map_out, &io::state_map_to_json(&map))?;
            println!("{} states, {} system", ghat.num_states(), ghat.num_system_states());
        }
        Command::Learn { game, reward, config, gamma, seed, max_iterations, out_dir } => {
            let g = load_game(&game)?;
            let reward = reward.load(&g)?;
            let mut cfg: LearnConfig = match &config {
                Some(p) => serde_json::from_str(&read(p)?).map_err(|e| CliError::malformed(p, e))?,
                None => LearnConfig::default(),
            };
            cfg.gamma = gamma.unwrap_or(cfg.gamma);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.max_iterations = max_iterations.unwrap_or(cfg.max_iterations);
            let learned = maximin_q_learn(&g, &reward, &cfg, None);
            write(&out_dir.join("q.csv"), &q_csv(&g, &learned))?;
            write(&out_dir.join("v.csv"), &v_csv(&g, &learned))?;
            write(&out_dir.join("convergence.csv"), &learned.log.to_csv())?;
            write(&out_dir.join("greedy.json"), &io::strategy_to_json(&greedy_strategy(&learned.q, &g)))?;
            println!("iterations: {}; converged at {:?}", learned.log.iterations, learned.log.converged_at);
        }
        Command::Eval { game, strategy, reward, gamma, horizon, out } => {
            let g = load_game(&game)?;
            let mu = load_strategy(&strategy, &g)?;
            if !mu.is_deterministic() {
                return Err(CliError::malformed(&strategy, "eval needs a deterministic strategy"));
            }
            let table = RewardTable::from_oracle(&g, &reward.load(&g)?);
            let mut rows = Vec::new();
            for s in g.system_states().filter(|&s| mu.is_defined(s)) {
                let b = worst_case_reward(&g, &mu, &table, s, gamma, horizon)?;
                rows.push(vec![s.0.to_string(), b.lower.to_string(), b.upper.to_string()]);
            }
            let csv = io::write_csv(&["state", "lower", "upper"], rows);
            match out {
                Some(p) => write(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Verify { game, spec, strategy, limit, witness_out } => {
            let g = load_game(&game)?;
            let bound = load_spec(&spec)?.bind(&g).map_err(|e| CliError::malformed(&spec, e))?;
            let mu = load_strategy(&strategy, &g)?;
            let report = bruteforce::verify(&g, &bound, &mu, limit);
            if let Some(e) = &report.skipped {
                warn!("maximality check skipped: {e}");
            }
            print!("{report}");
            if let (Some(p), Some(Some(w))) = (witness_out, &report.excluded) {
                write(&p, &io::strategy_to_json(w))?;
            }
        }
        Command::Pipeline(args) => {
            let cfg = PipelineConfig::from_args(&args)?;
            for s in run_pipeline(&cfg, args.jobs)? {
                println!(
                    "seed {}: |S^|={} |S^_s|={} iterations={} max V={:.4}",
                    s.seed, s.ghat_states, s.ghat_system_states, s.learn.iterations, s.learn.max_v
                );
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_MALFORMED } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Other(e.to_string())
    }
}
