//! Seeded synthetic workloads: users, requests and platform limits.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BucketSpec, EnvironmentLimits, ResourceKind, ResourceVector, ServerlessFunction, Ssr,
    SsrBucket, User, DEFAULT_PRIORITY_DELTA,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }

    fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min <= self.max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: usize,
    pub max: usize,
}

impl IntRange {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.min <= v && v <= self.max
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

/// Sampling range of the total demand for each resource kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandRanges {
    pub cpu: Range,
    pub ram: Range,
    pub storage: Range,
    pub net_io: Range,
}

impl DemandRanges {
    pub fn get(&self, kind: ResourceKind) -> Range {
        match kind {
            ResourceKind::Cpu => self.cpu,
            ResourceKind::Ram => self.ram,
            ResourceKind::Storage => self.storage,
            ResourceKind::NetIo => self.net_io,
        }
    }
}

impl Default for DemandRanges {
    fn default() -> Self {
        Self {
            cpu: Range::new(1.0, 4.0),
            ram: Range::new(100.0, 2048.0),
            storage: Range::new(10.0, 2048.0),
            net_io: Range::new(10.0, 4096.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_ssrs: IntRange,
    pub functions_per_ssr: IntRange,
    pub code_size: Range,
    pub input_size: Range,
    pub demand: DemandRanges,
    pub critical_value: IntRange,
    pub fog: EnvironmentLimits,
    pub cloud: EnvironmentLimits,
    pub distance_cap: f64,
    pub latency: Range,
    pub priority_blend: f64,
    pub importance_factors: ResourceVector,
    pub priority_delta: f64,
    /// Requests per bucket in a function-count sweep.
    pub sweep_ssrs: usize,
    /// Maximum functions per request in a sweep.
    pub sweep_max_per_ssr: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_ssrs: IntRange::new(4, 10),
            functions_per_ssr: IntRange::new(4, 10),
            code_size: Range::new(10.0, 500.0),
            input_size: Range::new(100.0, 2500.0),
            demand: DemandRanges::default(),
            critical_value: IntRange::new(1, 5),
            fog: EnvironmentLimits::fog_default(),
            cloud: EnvironmentLimits::cloud_default(),
            distance_cap: 100.0,
            latency: Range::new(5.0, 100.0),
            priority_blend: 0.5,
            importance_factors: ResourceVector::uniform(0.25),
            priority_delta: DEFAULT_PRIORITY_DELTA,
            sweep_ssrs: 10,
            sweep_max_per_ssr: 10,
        }
    }
}

impl GeneratorConfig {
    /// Reject configurations that are malformed or could produce a function
    /// that fits nowhere.
    pub fn validate(&self) -> Result<()> {
        let mut ranges = vec![
            ("code_size", self.code_size),
            ("input_size", self.input_size),
            ("latency", self.latency),
        ];
        for kind in ResourceKind::ALL {
            ranges.push((kind.name(), self.demand.get(kind)));
        }
        for (name, r) in &ranges {
            if !r.is_valid() {
                return Err(Error::Config(format!("range {name} must satisfy min <= max")));
            }
        }
        for (name, r) in [
            ("n_ssrs", self.n_ssrs),
            ("functions_per_ssr", self.functions_per_ssr),
            ("critical_value", self.critical_value),
        ] {
            if r.min > r.max {
                return Err(Error::Config(format!("range {name} must satisfy min <= max")));
            }
        }
        if self.n_ssrs.min == 0 || self.functions_per_ssr.min == 0 {
            return Err(Error::Config("every bucket needs at least one non-empty SSR".into()));
        }
        if self.critical_value.min < 1 || self.critical_value.max > 5 {
            return Err(Error::Config("critical values must lie in 1..=5".into()));
        }
        if !(self.code_size.min > 0.0) || !(self.input_size.max > 0.0) || self.input_size.min < 0.0 {
            return Err(Error::Config(
                "code sizes must be positive and input sizes non-negative with a positive maximum".into(),
            ));
        }
        if !(self.latency.min > 0.0) {
            return Err(Error::Config("latencies must be positive".into()));
        }
        if ResourceKind::ALL.iter().any(|k| self.demand.get(*k).min < 0.0) {
            return Err(Error::Config("demands must be non-negative".into()));
        }
        if !(self.distance_cap > 0.0 && self.distance_cap.is_finite()) {
            return Err(Error::Config("distance cap must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.priority_blend) {
            return Err(Error::Config("priority blend must lie in [0, 1]".into()));
        }
        if !(self.priority_delta > 0.0) {
            return Err(Error::Config("priority delta must be positive".into()));
        }
        if self.sweep_ssrs == 0 || self.sweep_max_per_ssr == 0 {
            return Err(Error::Config("sweep shape must be positive".into()));
        }
        // feasibility on the cloud
        for kind in ResourceKind::ALL {
            let cap = self.cloud.per_function_cap.get(kind);
            if self.demand.get(kind).max > cap {
                return Err(Error::Generation(format!(
                    "{kind} demand up to {} exceeds the cloud cap {cap}",
                    self.demand.get(kind).max
                )));
            }
        }
        if self.code_size.max > self.cloud.code_size_limit {
            return Err(Error::Generation("code sizes exceed the cloud code size limit".into()));
        }
        if self.input_size.max > self.cloud.input_size_limit {
            return Err(Error::Generation("input sizes exceed the cloud input limit".into()));
        }
        Ok(())
    }

    /// Smallest and largest function count a sweep bucket can hold.
    pub fn sweep_bounds(&self) -> (usize, usize) {
        (self.sweep_ssrs, self.sweep_ssrs * self.sweep_max_per_ssr)
    }
}

/// Generator owning its own PRNG; successive buckets differ, the whole
/// sequence is fixed by the seed.
pub struct WorkloadGenerator {
    cfg: GeneratorConfig,
    rng: ChaCha8Rng,
}

impl WorkloadGenerator {
    pub fn new(cfg: GeneratorConfig) -> Result<Self> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Self { cfg, rng })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.cfg
    }

    /// Bucket with request and function counts drawn from the configured ranges.
    pub fn next_bucket(&mut self) -> Result<SsrBucket> {
        let n = self.cfg.n_ssrs.sample(&mut self.rng);
        let counts: Vec<usize> = (0..n)
            .map(|_| self.cfg.functions_per_ssr.sample(&mut self.rng))
            .collect();
        self.build(&counts)
    }

    /// Bucket of exactly `total_functions` functions over the sweep's fixed
    /// number of requests, each holding between 1 and the sweep maximum.
    pub fn next_sweep_bucket(&mut self, total_functions: usize) -> Result<SsrBucket> {
        let (lo, hi) = self.cfg.sweep_bounds();
        if !(lo..=hi).contains(&total_functions) {
            return Err(Error::Domain(format!(
                "total functions {total_functions} outside [{lo}, {hi}]"
            )));
        }
        let per_max = self.cfg.sweep_max_per_ssr;
        let mut counts = vec![1usize; self.cfg.sweep_ssrs];
        for _ in lo..total_functions {
            let open: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] < per_max).collect();
            let pick = open[self.rng.gen_range(0..open.len())];
            counts[pick] += 1;
        }
        self.build(&counts)
    }

    fn build(&mut self, counts: &[usize]) -> Result<SsrBucket> {
        let users: Vec<User> = (0..counts.len()).map(|id| self.user(id)).collect();
        let ssrs: Vec<Ssr> = counts
            .iter()
            .enumerate()
            .map(|(user_id, &count)| Ssr {
                user_id,
                functions: (0..count).map(|_| self.function()).collect(),
            })
            .collect();
        SsrBucket::new(BucketSpec {
            users,
            ssrs,
            fog: self.cfg.fog,
            cloud: self.cfg.cloud,
            importance_factors: self.cfg.importance_factors,
            distance_cap: self.cfg.distance_cap,
            priority_blend: self.cfg.priority_blend,
            priority_delta: self.cfg.priority_delta,
        })
    }

    fn user(&mut self, id: usize) -> User {
        // uniform over the coverage disc
        let radius = self.cfg.distance_cap * self.rng.gen::<f64>().sqrt();
        let angle = 2.0 * PI * self.rng.gen::<f64>();
        let mut position = (radius * angle.cos(), radius * angle.sin());
        // keep rounding from pushing the point past the boundary
        let d = position.0.hypot(position.1);
        if d > self.cfg.distance_cap {
            let s = self.cfg.distance_cap / d;
            position = (position.0 * s, position.1 * s);
        }
        let latency = self.cfg.latency.sample(&mut self.rng);
        User::new(id, position, latency)
    }

    fn function(&mut self) -> ServerlessFunction {
        let code_size = self.cfg.code_size.sample(&mut self.rng);
        let input_size = self.cfg.input_size.sample(&mut self.rng);
        let critical_value = self.cfg.critical_value.sample(&mut self.rng) as u8;
        let mut base = ResourceVector::ZERO;
        let mut supplementary = ResourceVector::ZERO;
        for kind in ResourceKind::ALL {
            let total = self.cfg.demand.get(kind).sample(&mut self.rng);
            let fraction: f64 = self.rng.gen();
            let b = total * fraction;
            *base.get_mut(kind) = b;
            *supplementary.get_mut(kind) = (total - b).max(0.0);
        }
        ServerlessFunction::new(code_size, input_size, critical_value, base, supplementary)
    }
}

pub fn generate_bucket(cfg: &GeneratorConfig) -> Result<SsrBucket> {
    WorkloadGenerator::new(cfg.clone())?.next_bucket()
}

pub fn generate_sweep(cfg: &GeneratorConfig, total_functions: usize) -> Result<SsrBucket> {
    WorkloadGenerator::new(cfg.clone())?.next_sweep_bucket(total_functions)
}

/// Mix a base seed with a stream tag and an index into an independent seed.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)
        ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
