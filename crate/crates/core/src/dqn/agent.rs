use std::io::Write;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::ValueNetwork;
use super::replay::{Replay, Transition};
use crate::env::{run_episode, Action, ActionMask, EpisodeRecord, PlacementEnv};
use crate::error::{Error, Result};
use crate::workload::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Multiplicative decay applied after every episode.
    pub epsilon_decay: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Online-to-target copy interval, in environment steps.
    pub target_sync: usize,
    pub episodes: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Transitions required in the buffer before updates start.
    pub warmup: usize,
    /// Environment steps between gradient updates.
    pub train_every: usize,
    /// Keep one replay store per action and draw half of every batch from each.
    pub balanced_replay: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 0.995,
            batch_size: 64,
            replay_capacity: 10_000,
            target_sync: 200,
            episodes: 2000,
            hidden: vec![64, 64],
            seed: 7,
            warmup: 64,
            train_every: 1,
            balanced_replay: false,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config("discount must lie in [0, 1]".into()));
        }
        if !(0.0 <= self.epsilon_end
            && self.epsilon_end <= self.epsilon_start
            && self.epsilon_start <= 1.0)
        {
            return Err(Error::Config("need 0 <= epsilon_end <= epsilon_start <= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay) {
            return Err(Error::Config("epsilon decay must lie in [0, 1]".into()));
        }
        if self.batch_size == 0 || self.target_sync == 0 || self.train_every == 0 {
            return Err(Error::Config(
                "batch size, target sync and update interval must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Best feasible action by Q-value; ties go to the cloud.
pub fn greedy_action(q: [f64; 2], mask: ActionMask) -> Result<Action> {
    match (mask.fog, mask.cloud) {
        (false, false) => Err(Error::NoFeasibleAction),
        (true, false) => Ok(Action::AssignFog),
        (false, true) => Ok(Action::AssignCloud),
        (true, true) => Ok(if q[Action::AssignFog.index()] > q[Action::AssignCloud.index()] {
            Action::AssignFog
        } else {
            Action::AssignCloud
        }),
    }
}

/// ε-greedy choice restricted to feasible actions.
pub fn select_action(
    net: &ValueNetwork,
    state: &[f64],
    mask: ActionMask,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<Action> {
    if !mask.any() {
        return Err(Error::NoFeasibleAction);
    }
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        let allowed: Vec<Action> = mask.allowed().collect();
        return Ok(allowed[rng.gen_range(0..allowed.len())]);
    }
    greedy_action(net.q_values(state)?, mask)
}

fn max_feasible(q: [f64; 2], mask: ActionMask) -> f64 {
    mask.allowed()
        .map(|a| q[a.index()])
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingLogRow {
    pub episode: usize,
    pub total_cost: f64,
    pub epsilon: f64,
    /// Mean loss of the updates made during the episode, if any.
    pub loss: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub network: ValueNetwork,
    pub log: Vec<TrainingLogRow>,
}

/// Train a value network over `cfg.episodes` episodes; `make_env(e)` supplies
/// the environment of episode `e`. Deterministic in `cfg.seed` and whatever
/// seeds the factory uses.
pub fn train(
    input_len: usize,
    cfg: &AgentConfig,
    mut make_env: impl FnMut(usize) -> Result<PlacementEnv>,
) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2, 0));
    let mut online = ValueNetwork::new(input_len, &cfg.hidden, 2, &mut init_rng);
    let mut target = online.clone();
    let mut replay = Replay::new(cfg.replay_capacity, cfg.balanced_replay);
    let mut epsilon = cfg.epsilon_start;
    let mut steps = 0usize;
    let mut log = Vec::with_capacity(cfg.episodes);

    for episode in 0..cfg.episodes {
        let env = make_env(episode)?;
        if env.encoding_len() != input_len {
            return Err(Error::Shape {
                expected: input_len,
                got: env.encoding_len(),
            });
        }
        let mut state = env.reset();
        let mut encoded: Rc<[f64]> = Rc::from(state.encoded.clone());
        let mut total_cost = 0.0;
        let mut loss_sum = 0.0;
        let mut updates = 0usize;

        while let Some(mask) = state.mask {
            let action = select_action(&online, &encoded, mask, epsilon, &mut rng)?;
            let outcome = env.step(&state, action)?;
            total_cost += outcome.cost;
            let next: Rc<[f64]> = Rc::from(outcome.next_state.encoded.clone());
            replay.push(Transition {
                state: encoded,
                action,
                reward: -outcome.cost,
                next_state: next.clone(),
                done: outcome.done,
                next_mask: outcome.mask.unwrap_or(ActionMask::NONE),
            });
            encoded = next;
            state = outcome.next_state;
            steps += 1;

            if replay.len() >= cfg.warmup.max(1) && steps % cfg.train_every == 0 {
                let batch = replay.sample(cfg.batch_size, &mut rng);
                let mut targets = Vec::with_capacity(batch.len());
                for t in &batch {
                    let future = if t.done || !t.next_mask.any() {
                        0.0
                    } else {
                        max_feasible(target.q_values(&t.next_state)?, t.next_mask)
                    };
                    targets.push(t.reward + cfg.gamma * future);
                }
                let states: Vec<&[f64]> = batch.iter().map(|t| &*t.state).collect();
                let actions: Vec<usize> = batch.iter().map(|t| t.action.index()).collect();
                let (grads, loss) = online
                    .gradient(&states, &actions, &targets)
                    .map_err(|_| Error::NumericFault { episode })?;
                online.apply(&grads, cfg.learning_rate);
                if !loss.is_finite() || !online.is_finite() {
                    return Err(Error::NumericFault { episode });
                }
                loss_sum += loss;
                updates += 1;
            }
            if steps % cfg.target_sync == 0 {
                target = online.clone();
            }
        }

        if !total_cost.is_finite() {
            return Err(Error::NumericFault { episode });
        }
        log.push(TrainingLogRow {
            episode,
            total_cost,
            epsilon,
            loss: (updates > 0).then(|| loss_sum / updates as f64),
        });
        epsilon = (epsilon * cfg.epsilon_decay).max(cfg.epsilon_end);
    }

    Ok(TrainingOutcome {
        network: online,
        log,
    })
}

/// Greedy rollout of `net` on one environment.
pub fn greedy_episode(net: &ValueNetwork, env: &PlacementEnv, bucket_id: impl Into<String>) -> Result<EpisodeRecord> {
    run_episode(env, bucket_id, |s, mask| greedy_action(net.q_values(&s.encoded)?, mask))
}

/// Greedy rollouts on every environment, in input order.
pub fn evaluate(net: &ValueNetwork, envs: &[PlacementEnv]) -> Result<Vec<EpisodeRecord>> {
    envs.iter()
        .enumerate()
        .map(|(i, env)| greedy_episode(net, env, i.to_string()))
        .collect()
}

pub fn write_log_csv(w: impl Write, log: &[TrainingLogRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["episode", "total_cost", "epsilon", "loss"])?;
    for row in log {
        out.write_record([
            row.episode.to_string(),
            row.total_cost.to_string(),
            row.epsilon.to_string(),
            row.loss.map(|l| l.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
