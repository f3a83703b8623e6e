//! Tabular Q-learning player.
//!
//! The update is the undiscounted one-step temporal-difference rule
//!
//! ```text
//! Q'(s, a) ← (1 − α)·Q(s, a) + α·(R(s, s') + max_a' Q(s', a'))
//! ```
//!
//! with ε-greedy exploration over fixed-length episodes. Runs are fully
//! determined by the seed: the only randomness comes from one ChaCha stream.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Action, ActionKind, EnvConfig, EnvError, GameState};
use crate::exact::{score_to_f64, Score};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("no legal action to choose from")]
    NoLegalAction,
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Sparse `Q(s, a)`; absent entries read as 0.
///
/// Every vertex has exactly one legal move in any state (add it or remove
/// it), so a state's row is indexed by vertex id and only ever holds values
/// for legal pairs.
#[derive(Debug, Clone, Default)]
pub struct QTable {
    rows: HashMap<GameState, Vec<Option<f64>>>,
    entries: usize,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, state: &GameState, action: Action) -> f64 {
        if !action.is_legal(state) {
            return 0.0;
        }
        self.rows
            .get(state)
            .and_then(|row| row.get(action.vertex).copied().flatten())
            .unwrap_or(0.0)
    }

    /// Stores a value for a legal pair; illegal pairs are ignored.
    pub fn set(&mut self, state: &GameState, action: Action, value: f64) {
        if !action.is_legal(state) {
            return;
        }
        let row = match self.rows.get_mut(state) {
            Some(row) => row,
            None => self.rows.entry(state.clone()).or_default(),
        };
        if row.len() <= action.vertex {
            row.resize(action.vertex + 1, None);
        }
        if row[action.vertex].replace(value).is_none() {
            self.entries += 1;
        }
    }

    /// `max_a Q(state, a)` over `legal`, 0 for an empty list.
    pub fn max_value(&self, state: &GameState, legal: &[Action]) -> f64 {
        let row = self.rows.get(state);
        legal
            .iter()
            .map(|a| {
                row.and_then(|r| r.get(a.vertex).copied().flatten())
                    .filter(|_| a.is_legal(state))
                    .unwrap_or(0.0)
            })
            .reduce(f64::max)
            .unwrap_or(0.0)
    }

    /// Number of stored `(state, action)` entries.
    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    /// Entries sorted by `(state, action)`, for inspection and comparison.
    pub fn entries(&self) -> Vec<(GameState, Action, f64)> {
        let mut out: Vec<_> = self
            .rows
            .iter()
            .flat_map(|(s, row)| {
                row.iter().enumerate().filter_map(move |(i, v)| {
                    v.map(|v| {
                        let kind = if s.contains(i) {
                            ActionKind::Remove
                        } else {
                            ActionKind::Add
                        };
                        (s.clone(), Action { kind, vertex: i }, v)
                    })
                })
            })
            .collect();
        out.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
        out
    }
}

/// One temporal-difference update of `Q(s, a)`; other entries are untouched.
pub fn q_update(
    table: &mut QTable,
    state: &GameState,
    action: Action,
    reward: f64,
    next: &GameState,
    next_legal: &[Action],
    alpha: f64,
) {
    let old = table.get(state, action);
    let target = reward + table.max_value(next, next_legal);
    table.set(state, action, (1.0 - alpha) * old + alpha * target);
}

/// ε-greedy choice. The exploration coin is always drawn so the random
/// stream does not depend on ε. Greedy ties go to the earliest action in
/// `legal`, which callers keep in ascending `(kind, id)` order.
pub fn select_action<R: Rng + ?Sized>(
    table: &QTable,
    state: &GameState,
    legal: &[Action],
    epsilon: f64,
    rng: &mut R,
) -> Result<Action, AgentError> {
    if legal.is_empty() {
        return Err(AgentError::NoLegalAction);
    }
    if rng.random::<f64>() < epsilon {
        return Ok(legal[rng.random_range(0..legal.len())]);
    }
    let mut best = legal[0];
    let mut best_q = table.get(state, best);
    for &a in &legal[1..] {
        let q = table.get(state, a);
        if q > best_q {
            best = a;
            best_q = q;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub episodes: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Start of every episode and of the greedy rollout. When unset each
    /// episode starts from a freshly sampled subset and rollouts start
    /// from the empty selection.
    pub initial_state: Option<GameState>,
}

impl AgentConfig {
    /// α = 0.5, ε = 0.2, H = 2N and 2000·N episodes.
    pub fn defaults_for(num_vertices: usize) -> Self {
        Self {
            alpha: 0.5,
            epsilon: 0.2,
            episodes: 2000 * num_vertices,
            horizon: (2 * num_vertices).max(1),
            seed: 0,
            initial_state: None,
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let mut bad = Vec::new();
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            bad.push(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            bad.push(format!("epsilon must be in [0, 1], got {}", self.epsilon));
        }
        if self.horizon == 0 {
            bad.push("horizon must be >= 1".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(AgentError::Config(bad.join("; ")))
        }
    }

    pub fn rollout_start(&self) -> GameState {
        self.initial_state.clone().unwrap_or_default()
    }
}

/// Random subset with each of `n` vertices kept independently with
/// probability 1/2.
pub fn sample_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GameState {
    GameState::from_ids((0..n).filter(|_| rng.random_bool(0.5)))
}

/// The random initial state a run with `seed` would pin, for comparing
/// games that must share a start.
pub fn sample_initial_state(n: usize, seed: u64) -> GameState {
    sample_state(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    #[serde(rename = "return")]
    pub total_reward: f64,
    pub best_value: f64,
    pub greedy_value: f64,
    pub table_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<EpisodeRecord>,
}

impl TrainingLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,return,best_value,greedy_value,table_size\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.episode, r.total_reward, r.best_value, r.greedy_value, r.table_size
            ));
        }
        out
    }
}

/// Memoized exact state values for one run.
#[derive(Debug, Default)]
pub struct ValueCache {
    values: HashMap<GameState, Score>,
}

impl ValueCache {
    pub fn value(&mut self, env: &EnvConfig, state: &GameState) -> Score {
        if let Some(v) = self.values.get(state) {
            return *v;
        }
        let v = env.value(state);
        self.values.insert(state.clone(), v);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    pub action: Action,
    pub reward: f64,
    pub state: GameState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub start: GameState,
    pub steps: Vec<RolloutStep>,
    pub best_state: GameState,
    pub best_value: Score,
}

/// Follows the greedy policy for `horizon` steps and reports the best
/// visited state (the start included, earliest on ties).
pub fn greedy_rollout(table: &QTable, env: &EnvConfig, start: &GameState, horizon: usize) -> Result<Rollout, AgentError> {
    rollout_cached(table, env, start, horizon, &mut ValueCache::default())
}

fn rollout_cached(
    table: &QTable,
    env: &EnvConfig,
    start: &GameState,
    horizon: usize,
    cache: &mut ValueCache,
) -> Result<Rollout, AgentError> {
    start.validate(env.num_vertices())?;
    let mut state = start.clone();
    let mut value = cache.value(env, &state);
    let mut best_state = state.clone();
    let mut best_value = value;
    let mut steps = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let legal = env.legal_actions(&state);
        let Some(action) = greedy_action(table, &state, &legal) else {
            break;
        };
        let next = env.transition(&state, action)?;
        let next_value = cache.value(env, &next);
        if next_value > best_value {
            best_state = next.clone();
            best_value = next_value;
        }
        steps.push(RolloutStep {
            action,
            reward: score_to_f64(&(next_value - value)),
            state: next.clone(),
        });
        state = next;
        value = next_value;
    }
    Ok(Rollout {
        start: start.clone(),
        steps,
        best_state,
        best_value,
    })
}

fn greedy_action(table: &QTable, state: &GameState, legal: &[Action]) -> Option<Action> {
    let mut it = legal.iter();
    let mut best = *it.next()?;
    let mut best_q = table.get(state, best);
    for &a in it {
        let q = table.get(state, a);
        if q > best_q {
            best = a;
            best_q = q;
        }
    }
    Some(best)
}

/// Trains a fresh table for `agent.episodes` episodes of exactly
/// `agent.horizon` steps.
pub fn train(env: &EnvConfig, agent: &AgentConfig) -> Result<(QTable, TrainingLog), AgentError> {
    agent.validate()?;
    let n = env.num_vertices();
    if let Some(s) = &agent.initial_state {
        s.validate(n)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(agent.seed);
    let mut table = QTable::new();
    let mut log = TrainingLog::default();
    let mut cache = ValueCache::default();
    let rollout_start = agent.rollout_start();

    for episode in 0..agent.episodes {
        let mut state = match &agent.initial_state {
            Some(s) => s.clone(),
            None => sample_state(n, &mut rng),
        };
        let mut value = cache.value(env, &state);
        let mut best = value;
        let mut total = 0.0;
        let mut legal = env.legal_actions(&state);
        for _ in 0..agent.horizon {
            let action = select_action(&table, &state, &legal, agent.epsilon, &mut rng)?;
            let next = env.transition(&state, action)?;
            let next_value = cache.value(env, &next);
            let reward = score_to_f64(&(next_value - value));
            let next_legal = env.legal_actions(&next);
            q_update(&mut table, &state, action, reward, &next, &next_legal, agent.alpha);
            total += reward;
            if next_value > best {
                best = next_value;
            }
            state = next;
            value = next_value;
            legal = next_legal;
        }
        let greedy = rollout_cached(&table, env, &rollout_start, agent.horizon, &mut cache)?;
        log.records.push(EpisodeRecord {
            episode,
            total_reward: total,
            best_value: score_to_f64(&best),
            greedy_value: score_to_f64(&greedy.best_value),
            table_size: table.len(),
        });
    }
    Ok((table, log))
}
