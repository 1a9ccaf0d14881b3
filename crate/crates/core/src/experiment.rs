//! Experiment driver: configuration, agent training over generated buckets,
//! sweep comparisons and the oracle report.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{brute_force_optimum, cloud_only, fog_first, greedy_cost, random_feasible, OracleResult};
use crate::cost::{bucket_objective, total_step_cost};
use crate::dqn::{greedy_episode, train, write_log_csv, AgentConfig, TrainingOutcome, ValueNetwork};
use crate::env::{EnvConfig, PlacementEnv};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, report, write_aggregate_csv, write_detail_csv, AggregateRow, ReportRow};
use crate::model::{Placement, SsrBucket};
use crate::workload::{derive_seed, generate_sweep, GeneratorConfig};

const TRAIN_STREAM: u64 = 11;
const EVAL_STREAM: u64 = 12;
const RANDOM_STREAM: u64 = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dqn,
    FogFirst,
    CloudOnly,
    Random,
    GreedyCost,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Dqn,
        Algorithm::FogFirst,
        Algorithm::CloudOnly,
        Algorithm::Random,
        Algorithm::GreedyCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dqn => "dqn",
            Algorithm::FogFirst => "fog_first",
            Algorithm::CloudOnly => "cloud_only",
            Algorithm::Random => "random",
            Algorithm::GreedyCost => "greedy_cost",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// Total function counts to evaluate.
    pub sweep: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub runs_per_point: usize,
    pub output_dir: PathBuf,
    pub env: EnvConfig,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            sweep: (1..=10).map(|k| k * 10).collect(),
            algorithms: Algorithm::ALL.to_vec(),
            runs_per_point: 5,
            output_dir: PathBuf::from("results"),
            env: EnvConfig::default(),
        }
    }
}

/// The single configuration document shared by every subcommand.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    pub agent: AgentConfig,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Replace every seed with ones derived from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.generator.seed = seed;
        self.agent.seed = derive_seed(seed, 1, 1);
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.agent.validate()?;
        let x = &self.experiment;
        if x.runs_per_point == 0 {
            return Err(Error::Config("runs_per_point must be at least 1".into()));
        }
        if x.sweep.is_empty() {
            return Err(Error::Config("sweep is empty".into()));
        }
        if let Some(n) = x.sweep.iter().find(|n| !(10..=100).contains(*n)) {
            return Err(Error::Config(format!("sweep value {n} outside [10, 100]")));
        }
        let (lo, hi) = self.generator.sweep_bounds();
        if let Some(n) = x.sweep.iter().find(|n| !(lo..=hi).contains(*n)) {
            return Err(Error::Config(format!(
                "sweep value {n} cannot be generated with {} requests (range [{lo}, {hi}])",
                self.generator.sweep_ssrs
            )));
        }
        if let Some(n) = x.sweep.iter().find(|n| **n > x.env.max_functions) {
            return Err(Error::Config(format!(
                "sweep value {n} exceeds the encoding size {}",
                x.env.max_functions
            )));
        }
        if x.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        Ok(())
    }
}

/// Bucket used for training episode `episode`: sweep sizes in rotation.
pub fn training_bucket(cfg: &ExperimentConfig, episode: usize) -> Result<SsrBucket> {
    let sweep = &cfg.experiment.sweep;
    let n = sweep[episode % sweep.len()];
    let gen = GeneratorConfig {
        seed: derive_seed(cfg.generator.seed, TRAIN_STREAM, episode as u64),
        ..cfg.generator.clone()
    };
    generate_sweep(&gen, n)
}

/// Bucket evaluated at sweep point `n`, run `run`; shared by all algorithms.
pub fn evaluation_bucket(cfg: &ExperimentConfig, n: usize, run: usize) -> Result<SsrBucket> {
    let gen = GeneratorConfig {
        seed: derive_seed(cfg.generator.seed, EVAL_STREAM, (n as u64) << 32 | run as u64),
        ..cfg.generator.clone()
    };
    generate_sweep(&gen, n)
}

/// Train on a fresh sweep bucket every episode.
pub fn train_agent(cfg: &ExperimentConfig) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let env_cfg = cfg.experiment.env;
    train(env_cfg.encoding_len(), &cfg.agent, |e| {
        PlacementEnv::new(training_bucket(cfg, e)?, env_cfg)
    })
}

/// Greedy placement by the value network.
pub fn agent_placement(net: &ValueNetwork, bucket: &SsrBucket, env_cfg: EnvConfig) -> Result<Placement> {
    let env = PlacementEnv::new(bucket.clone(), env_cfg)?;
    if net.input_len() != env.encoding_len() {
        return Err(Error::Shape {
            expected: env.encoding_len(),
            got: net.input_len(),
        });
    }
    Ok(greedy_episode(net, &env, "")?.placement)
}

pub fn place(
    algorithm: Algorithm,
    bucket: &SsrBucket,
    net: Option<&ValueNetwork>,
    env_cfg: EnvConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Placement> {
    Ok(match algorithm {
        Algorithm::Dqn => {
            let net = net.ok_or_else(|| Error::Config("the agent needs a checkpoint".into()))?;
            agent_placement(net, bucket, env_cfg)?
        }
        Algorithm::FogFirst => fog_first(bucket),
        Algorithm::CloudOnly => cloud_only(bucket),
        Algorithm::Random => random_feasible(bucket, rng),
        Algorithm::GreedyCost => greedy_cost(bucket),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub detail: Vec<ReportRow>,
    pub aggregate: Vec<AggregateRow>,
}

/// Evaluate every algorithm on the same seeded buckets at every sweep point.
/// Rows come out in (sweep point, algorithm, run) order.
pub fn compare(cfg: &ExperimentConfig, net: Option<&ValueNetwork>) -> Result<Comparison> {
    cfg.validate()?;
    let x = &cfg.experiment;
    let mut detail = Vec::with_capacity(x.sweep.len() * x.algorithms.len() * x.runs_per_point);
    for &n in &x.sweep {
        let buckets = (0..x.runs_per_point)
            .map(|run| evaluation_bucket(cfg, n, run))
            .collect::<Result<Vec<_>>>()?;
        for &algorithm in &x.algorithms {
            for (run, bucket) in buckets.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    cfg.generator.seed,
                    RANDOM_STREAM,
                    (n as u64) << 32 | run as u64,
                ));
                let placement = place(algorithm, bucket, net, x.env, &mut rng)?;
                detail.push(ReportRow {
                    total_functions: n,
                    algorithm: algorithm.name().to_string(),
                    run,
                    report: report(bucket, &placement)?,
                });
            }
        }
    }
    let aggregate = aggregate(&detail);
    Ok(Comparison { detail, aggregate })
}

pub const DETAIL_FILE: &str = "results.csv";
pub const AGGREGATE_FILE: &str = "results_mean.csv";

/// Write the two result tables into `dir`, returning their paths.
pub fn write_comparison(dir: &Path, cmp: &Comparison) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let detail = dir.join(DETAIL_FILE);
    let agg = dir.join(AGGREGATE_FILE);
    write_detail_csv(BufWriter::new(File::create(&detail)?), &cmp.detail)?;
    write_aggregate_csv(BufWriter::new(File::create(&agg)?), &cmp.aggregate)?;
    Ok((detail, agg))
}

pub fn save_checkpoint(path: &Path, net: &ValueNetwork) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    net.write_checkpoint(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ValueNetwork> {
    let f = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open checkpoint {}: {e}", path.display())))?;
    ValueNetwork::read_checkpoint(std::io::BufReader::new(f))
}

pub fn save_training_log(path: &Path, outcome: &TrainingOutcome) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_log_csv(BufWriter::new(File::create(path)?), &outcome.log)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineCost {
    pub algorithm: String,
    pub total_step_cost: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub total_functions: usize,
    pub optimum: OracleResult,
    /// Both criteria pick the same placement.
    pub criteria_agree: bool,
    pub baselines: Vec<BaselineCost>,
}

/// Exhaustive optimum of a small bucket, checked against the deterministic
/// baselines.
pub fn oracle(bucket: &SsrBucket) -> Result<OracleReport> {
    let optimum = brute_force_optimum(bucket)?;
    let mut baselines = Vec::new();
    for (name, p) in [
        ("fog_first", fog_first(bucket)),
        ("cloud_only", cloud_only(bucket)),
        ("greedy_cost", greedy_cost(bucket)),
    ] {
        let step = total_step_cost(bucket, &p)?;
        let obj = bucket_objective(bucket, &p)?.sum;
        if step < optimum.by_step_cost.total_step_cost - 1e-9 || obj < optimum.by_objective.objective - 1e-9 {
            return Err(Error::State(format!("{name} beats the exhaustive optimum")));
        }
        baselines.push(BaselineCost {
            algorithm: name.into(),
            total_step_cost: step,
            objective: obj,
        });
    }
    Ok(OracleReport {
        total_functions: bucket.total_functions(),
        criteria_agree: optimum.by_step_cost.placement == optimum.by_objective.placement,
        optimum,
        baselines,
    })
}
