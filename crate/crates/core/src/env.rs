//! Sequential placement environment.
//!
//! An episode visits every function of a bucket once, in a fixed processing
//! order, and assigns it to the fog or the cloud. Actions that would break a
//! platform limit are masked out, so every completed episode satisfies the
//! per-function constraints by construction. The per-step cost of an action
//! is the fog or cloud step cost of the visited function; the episode total is
//! the bucket's summed per-request step cost.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cost::{self, ObjectiveSummary};
use crate::error::{Error, Result};
use crate::model::{FunctionId, Placement, ResourceKind, Site, SsrBucket};

/// Features per function slot in the encoded state.
pub const SLOT_FEATURES: usize = 11;
/// Features describing the function under the cursor.
pub const CURRENT_FEATURES: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    AssignFog,
    AssignCloud,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::AssignFog, Action::AssignCloud];

    /// Position of this action in Q-value vectors.
    pub fn index(self) -> usize {
        match self {
            Action::AssignFog => 0,
            Action::AssignCloud => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn site(self) -> Site {
        match self {
            Action::AssignFog => Site::Fog,
            Action::AssignCloud => Site::Cloud,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::AssignFog => "assign_fog",
            Action::AssignCloud => "assign_cloud",
        }
    }
}

/// Feasibility of each action for one function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMask {
    pub fog: bool,
    pub cloud: bool,
}

impl ActionMask {
    pub const NONE: ActionMask = ActionMask {
        fog: false,
        cloud: false,
    };

    pub fn allows(&self, action: Action) -> bool {
        match action {
            Action::AssignFog => self.fog,
            Action::AssignCloud => self.cloud,
        }
    }

    pub fn any(&self) -> bool {
        self.fog || self.cloud
    }

    pub fn allowed(&self) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(|a| self.allows(*a))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessingOrder {
    /// Requests by descending user priority, functions by descending function priority.
    #[default]
    Priority,
    /// Bucket order.
    Insertion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Largest bucket the encoding has room for.
    pub max_functions: usize,
    pub order: ProcessingOrder,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            max_functions: 100,
            order: ProcessingOrder::Priority,
        }
    }
}

impl EnvConfig {
    pub fn encoding_len(&self) -> usize {
        encoding_len(self.max_functions)
    }
}

pub fn encoding_len(max_functions: usize) -> usize {
    max_functions * SLOT_FEATURES + 1 + CURRENT_FEATURES
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub placement: Placement,
    /// Index into the processing order of the next function to place.
    pub cursor: usize,
    pub encoded: Vec<f64>,
    /// Feasible actions for the function under the cursor; `None` once done.
    pub mask: Option<ActionMask>,
}

impl EnvState {
    pub fn is_done(&self) -> bool {
        self.mask.is_none()
    }
}

/// Final accounting attached to the last step of an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub total_step_cost: f64,
    pub bucket_step_cost: f64,
    pub objective: ObjectiveSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub cost: f64,
    pub done: bool,
    pub mask: Option<ActionMask>,
    pub summary: Option<EpisodeSummary>,
}

pub struct PlacementEnv {
    bucket: SsrBucket,
    cfg: EnvConfig,
    order: Vec<FunctionId>,
    slots: Vec<[f64; SLOT_FEATURES]>,
    current: Vec<[f64; CURRENT_FEATURES]>,
    masks: Vec<ActionMask>,
}

impl PlacementEnv {
    pub fn new(bucket: SsrBucket, cfg: EnvConfig) -> Result<Self> {
        let n = bucket.total_functions();
        if n > cfg.max_functions {
            return Err(Error::Shape {
                expected: cfg.max_functions,
                got: n,
            });
        }
        let order = processing_order(&bucket, cfg.order);
        let slots = order.iter().map(|id| slot_features(&bucket, *id)).collect();
        let current = order.iter().map(|id| current_features(&bucket, *id)).collect();
        let masks = order
            .iter()
            .map(|id| ActionMask {
                fog: bucket.fog_admits(*id),
                cloud: bucket.cloud_admits(*id),
            })
            .collect();
        Ok(Self {
            bucket,
            cfg,
            order,
            slots,
            current,
            masks,
        })
    }

    pub fn bucket(&self) -> &SsrBucket {
        &self.bucket
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn order(&self) -> &[FunctionId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn encoding_len(&self) -> usize {
        self.cfg.encoding_len()
    }

    pub fn reset(&self) -> EnvState {
        let placement = Placement::unassigned(&self.bucket);
        self.state(placement, 0)
    }

    fn state(&self, placement: Placement, cursor: usize) -> EnvState {
        let mut s = EnvState {
            placement,
            cursor,
            encoded: Vec::new(),
            mask: self.masks.get(cursor).copied(),
        };
        s.encoded = self.encode(&s);
        s
    }

    pub fn feasible_actions(&self, state: &EnvState) -> Result<ActionMask> {
        self.masks
            .get(state.cursor)
            .copied()
            .ok_or_else(|| Error::State("episode is finished".into()))
    }

    /// Function the cursor points at.
    pub fn current_function(&self, state: &EnvState) -> Option<FunctionId> {
        self.order.get(state.cursor).copied()
    }

    pub fn step(&self, state: &EnvState, action: Action) -> Result<StepOutcome> {
        let mask = self.feasible_actions(state)?;
        let id = self.order[state.cursor];
        if !mask.allows(action) {
            return Err(Error::ConstraintViolation {
                function: id,
                action: action.name(),
            });
        }
        let cost = cost::function_step_cost(&self.bucket, id, action.site());
        let mut placement = state.placement.clone();
        placement.assign(id, action.site());
        let next_state = self.state(placement, state.cursor + 1);
        let done = next_state.is_done();
        let summary = if done {
            Some(self.summarize(&next_state.placement)?)
        } else {
            None
        };
        Ok(StepOutcome {
            mask: next_state.mask,
            next_state,
            cost,
            done,
            summary,
        })
    }

    pub fn summarize(&self, placement: &Placement) -> Result<EpisodeSummary> {
        let total_step_cost = cost::total_step_cost(&self.bucket, placement)?;
        Ok(EpisodeSummary {
            total_step_cost,
            bucket_step_cost: total_step_cost / self.bucket.ssrs.len() as f64,
            objective: cost::bucket_objective(&self.bucket, placement)?,
        })
    }

    /// Fixed-length state vector, every entry in [0, 1]:
    /// one block per function slot in processing order (zero padded to
    /// `max_functions`), the cursor progress, and a block describing the
    /// function under the cursor (zero once done).
    pub fn encode(&self, state: &EnvState) -> Vec<f64> {
        let mut out = vec![0.0; self.encoding_len()];
        for (k, (id, slot)) in self.order.iter().zip(&self.slots).enumerate() {
            let dst = &mut out[k * SLOT_FEATURES..(k + 1) * SLOT_FEATURES];
            dst.copy_from_slice(slot);
            let flags = state.placement.flags(*id);
            dst[0] = flags.f();
            dst[1] = flags.c();
        }
        let base = self.cfg.max_functions * SLOT_FEATURES;
        out[base] = if self.order.is_empty() {
            0.0
        } else {
            state.cursor as f64 / self.order.len() as f64
        };
        if let Some(cur) = self.current.get(state.cursor) {
            out[base + 1..].copy_from_slice(cur);
        }
        out
    }
}

fn processing_order(bucket: &SsrBucket, order: ProcessingOrder) -> Vec<FunctionId> {
    match order {
        ProcessingOrder::Insertion => bucket.function_ids(),
        ProcessingOrder::Priority => {
            let mut ssrs: Vec<usize> = (0..bucket.ssrs.len()).collect();
            ssrs.sort_by(|a, b| {
                bucket
                    .user_of(*b)
                    .priority
                    .total_cmp(&bucket.user_of(*a).priority)
            });
            ssrs.into_iter()
                .flat_map(|i| {
                    let funcs = &bucket.ssrs[i].functions;
                    let mut idx: Vec<usize> = (0..funcs.len()).collect();
                    idx.sort_by(|a, b| funcs[*b].priority.total_cmp(&funcs[*a].priority));
                    idx.into_iter().map(move |j| FunctionId::new(i, j))
                })
                .collect()
        }
    }
}

fn unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

fn slot_features(bucket: &SsrBucket, id: FunctionId) -> [f64; SLOT_FEATURES] {
    let func = bucket.function(id);
    let demand = func.total_demand();
    let cap = bucket.cloud.per_function_cap;
    let mut s = [0.0; SLOT_FEATURES];
    s[2] = unit(func.code_size / bucket.cloud.code_size_limit);
    s[3] = unit(func.input_size / bucket.cloud.input_size_limit);
    s[4] = unit(f64::from(func.critical_value) / 5.0);
    for (k, kind) in ResourceKind::ALL.into_iter().enumerate() {
        s[5 + k] = unit(demand.get(kind) / cap.get(kind));
    }
    s[9] = unit(bucket.user_of(id.ssr).priority);
    s[10] = if bucket.fog_admits(id) { 1.0 } else { 0.0 };
    s
}

fn current_features(bucket: &SsrBucket, id: FunctionId) -> [f64; CURRENT_FEATURES] {
    let func = bucket.function(id);
    let demand = func.total_demand();
    let cloud = bucket.cloud.per_function_cap;
    let fog = bucket.fog.per_function_cap;
    let lf = bucket.normalized_link_latency();
    let mut c = [0.0; CURRENT_FEATURES];
    c[0] = unit(func.code_size / bucket.cloud.code_size_limit);
    c[1] = unit(func.input_size / bucket.cloud.input_size_limit);
    c[2] = unit(f64::from(func.critical_value) / 5.0);
    for (k, kind) in ResourceKind::ALL.into_iter().enumerate() {
        c[3 + k] = unit(demand.get(kind) / cloud.get(kind));
        c[7 + k] = unit(demand.get(kind) / fog.get(kind));
    }
    c[11] = unit(bucket.user_of(id.ssr).priority);
    c[12] = unit(bucket.latency_priority_of(id.ssr));
    c[13] = unit(lf / (1.0 + lf));
    c[14] = if bucket.fog_admits(id) { 1.0 } else { 0.0 };
    c
}

/// Audit record of one finished episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub bucket_id: String,
    pub functions: Vec<FunctionId>,
    pub actions: Vec<Action>,
    pub step_costs: Vec<f64>,
    pub placement: Placement,
    pub summary: EpisodeSummary,
}

impl EpisodeRecord {
    pub fn episode_cost(&self) -> f64 {
        self.step_costs.iter().sum()
    }
}

/// Run one episode, asking `policy` for an action at every step.
pub fn run_episode(
    env: &PlacementEnv,
    bucket_id: impl Into<String>,
    mut policy: impl FnMut(&EnvState, ActionMask) -> Result<Action>,
) -> Result<EpisodeRecord> {
    let mut state = env.reset();
    let mut actions = Vec::with_capacity(env.len());
    let mut step_costs = Vec::with_capacity(env.len());
    let mut summary = None;
    while let Some(mask) = state.mask {
        let action = policy(&state, mask)?;
        let outcome = env.step(&state, action)?;
        actions.push(action);
        step_costs.push(outcome.cost);
        summary = outcome.summary;
        state = outcome.next_state;
    }
    let summary = match summary {
        Some(s) => s,
        // zero-function episode cannot occur for a validated bucket
        None => env.summarize(&state.placement)?,
    };
    Ok(EpisodeRecord {
        bucket_id: bucket_id.into(),
        functions: env.order().to_vec(),
        actions,
        step_costs,
        placement: state.placement,
        summary,
    })
}

/// Re-run a recorded action sequence.
pub fn replay(env: &PlacementEnv, bucket_id: impl Into<String>, actions: &[Action]) -> Result<EpisodeRecord> {
    let mut it = actions.iter();
    let record = run_episode(env, bucket_id, |_, _| {
        it.next()
            .copied()
            .ok_or_else(|| Error::State("action sequence is shorter than the episode".into()))
    })?;
    if it.next().is_some() {
        return Err(Error::State("action sequence is longer than the episode".into()));
    }
    Ok(record)
}

pub fn write_records<'a>(
    mut w: impl Write,
    records: impl IntoIterator<Item = &'a EpisodeRecord>,
) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records(r: impl BufRead) -> Result<Vec<EpisodeRecord>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
