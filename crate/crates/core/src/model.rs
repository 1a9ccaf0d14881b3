//! Entities of the fog/cloud system model: resources, platform limits, users,
//! serverless functions, service requests and placements.
//!
//! Coordinates are relative to the fog node, which sits at the origin. Units
//! are km for distance, ms for latency, MB for sizes, cores for CPU and KBps
//! for network I/O.

use std::fmt;
use std::ops::{Add, Deref};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring;

/// Default value of the small constant in the function-priority denominator.
pub const DEFAULT_PRIORITY_DELTA: f64 = 0.2;

const IMPORTANCE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Cpu,
    Ram,
    Storage,
    NetIo,
}

impl ResourceKind {
    /// Fixed iteration order.
    pub const ALL: [ResourceKind; 4] = [
        ResourceKind::Cpu,
        ResourceKind::Ram,
        ResourceKind::Storage,
        ResourceKind::NetIo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResourceKind::Cpu => "cpu",
            ResourceKind::Ram => "ram",
            ResourceKind::Storage => "storage",
            ResourceKind::NetIo => "net_io",
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-kind quantities: cores, MB, MB, KBps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceVector {
    pub cpu: f64,
    pub ram: f64,
    pub storage: f64,
    pub net_io: f64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(cpu: f64, ram: f64, storage: f64, net_io: f64) -> Self {
        Self {
            cpu,
            ram,
            storage,
            net_io,
        }
    }

    pub fn uniform(value: f64) -> Self {
        Self::new(value, value, value, value)
    }

    pub fn get(&self, kind: ResourceKind) -> f64 {
        match kind {
            ResourceKind::Cpu => self.cpu,
            ResourceKind::Ram => self.ram,
            ResourceKind::Storage => self.storage,
            ResourceKind::NetIo => self.net_io,
        }
    }

    pub fn get_mut(&mut self, kind: ResourceKind) -> &mut f64 {
        match kind {
            ResourceKind::Cpu => &mut self.cpu,
            ResourceKind::Ram => &mut self.ram,
            ResourceKind::Storage => &mut self.storage,
            ResourceKind::NetIo => &mut self.net_io,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ResourceKind, f64)> + '_ {
        ResourceKind::ALL.into_iter().map(move |k| (k, self.get(k)))
    }

    pub fn from_fn(mut f: impl FnMut(ResourceKind) -> f64) -> Self {
        Self::new(
            f(ResourceKind::Cpu),
            f(ResourceKind::Ram),
            f(ResourceKind::Storage),
            f(ResourceKind::NetIo),
        )
    }

    pub fn sum(&self) -> f64 {
        self.cpu + self.ram + self.storage + self.net_io
    }

    /// All components finite and non-negative.
    pub fn is_valid(&self) -> bool {
        self.iter().all(|(_, v)| v.is_finite() && v >= 0.0)
    }

    pub fn all_positive(&self) -> bool {
        self.iter().all(|(_, v)| v.is_finite() && v > 0.0)
    }

    /// Componentwise `self <= cap`.
    pub fn fits_within(&self, cap: &ResourceVector) -> bool {
        self.iter().all(|(k, v)| v <= cap.get(k))
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;

    fn add(self, rhs: ResourceVector) -> ResourceVector {
        ResourceVector::from_fn(|k| self.get(k) + rhs.get(k))
    }
}

impl std::iter::Sum for ResourceVector {
    fn sum<I: Iterator<Item = ResourceVector>>(iter: I) -> Self {
        iter.fold(ResourceVector::ZERO, |acc, v| acc + v)
    }
}

/// Per-function limits a serverless platform imposes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentLimits {
    pub per_function_cap: ResourceVector,
    pub code_size_limit: f64,
    pub input_size_limit: f64,
    /// Fog-to-cloud link latency in ms. Zero for the fog platform itself.
    pub link_latency: f64,
}

impl EnvironmentLimits {
    pub fn fog_default() -> Self {
        Self {
            per_function_cap: ResourceVector::new(2.0, 1024.0, 1024.0, 2048.0),
            code_size_limit: 300.0,
            input_size_limit: 1500.0,
            link_latency: 0.0,
        }
    }

    pub fn cloud_default() -> Self {
        Self {
            per_function_cap: ResourceVector::new(6.0, 5120.0, 10240.0, 10240.0),
            code_size_limit: 500.0,
            input_size_limit: 2500.0,
            link_latency: 40.0,
        }
    }

    /// Size limits and per-kind caps all hold for `function`.
    pub fn admits(&self, function: &ServerlessFunction) -> bool {
        function.code_size <= self.code_size_limit
            && function.input_size <= self.input_size_limit
            && function.total_demand().fits_within(&self.per_function_cap)
    }

    fn problems(&self) -> Option<String> {
        if !self.per_function_cap.all_positive() {
            return Some("per-function caps must be positive".into());
        }
        if !(self.code_size_limit.is_finite() && self.code_size_limit > 0.0) {
            return Some("code size limit must be positive".into());
        }
        if !(self.input_size_limit.is_finite() && self.input_size_limit > 0.0) {
            return Some("input size limit must be positive".into());
        }
        if !(self.link_latency.is_finite() && self.link_latency >= 0.0) {
            return Some("link latency must be non-negative".into());
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: usize,
    /// (x, y) in km, fog node at the origin.
    pub position: (f64, f64),
    pub latency: f64,
    /// Blended distance/latency priority, recomputed when a bucket is built.
    #[serde(default, skip_deserializing)]
    pub priority: f64,
}

impl User {
    pub fn new(id: usize, position: (f64, f64), latency: f64) -> Self {
        Self {
            id,
            position,
            latency,
            priority: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerlessFunction {
    pub code_size: f64,
    pub input_size: f64,
    pub critical_value: u8,
    pub base_demand: ResourceVector,
    pub supplementary_demand: ResourceVector,
    /// Derived from size, input size and critical value relative to the
    /// other functions of the same request; recomputed when a bucket is built.
    #[serde(default, skip_deserializing)]
    pub priority: f64,
}

impl ServerlessFunction {
    pub fn new(
        code_size: f64,
        input_size: f64,
        critical_value: u8,
        base_demand: ResourceVector,
        supplementary_demand: ResourceVector,
    ) -> Self {
        Self {
            code_size,
            input_size,
            critical_value,
            base_demand,
            supplementary_demand,
            priority: 0.0,
        }
    }

    pub fn total_demand(&self) -> ResourceVector {
        self.base_demand + self.supplementary_demand
    }
}

/// One user's serverless application.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ssr {
    pub user_id: usize,
    pub functions: Vec<ServerlessFunction>,
}

/// Position of a function: (request index, function index within request).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FunctionId {
    pub ssr: usize,
    pub index: usize,
}

impl FunctionId {
    pub fn new(ssr: usize, index: usize) -> Self {
        Self { ssr, index }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.ssr, self.index)
    }
}

/// Raw bucket document. This is the JSON shape and may hold arbitrary
/// (possibly invalid) values; [`SsrBucket`] is the validated form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketSpec {
    pub users: Vec<User>,
    pub ssrs: Vec<Ssr>,
    pub fog: EnvironmentLimits,
    pub cloud: EnvironmentLimits,
    pub importance_factors: ResourceVector,
    pub distance_cap: f64,
    pub priority_blend: f64,
    #[serde(default = "default_delta")]
    pub priority_delta: f64,
}

fn default_delta() -> f64 {
    DEFAULT_PRIORITY_DELTA
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptySsr { index: usize },
    ImportanceSum { sum: f64 },
    NegativeImportance { kind: ResourceKind },
    TooManySsrs { ssrs: usize, users: usize },
    UnknownUser { ssr: usize, user_id: usize },
    DuplicateUser { user_id: usize },
    UserIdMismatch { position: usize, id: usize },
    BadLatency { user: usize },
    OutsideCoverage { user: usize, distance: f64 },
    PriorityBlend { value: f64 },
    DistanceCap { value: f64 },
    PriorityDelta { value: f64 },
    BadLimits { environment: &'static str, reason: String },
    FogExceedsCloud { kind: ResourceKind },
    CriticalValue { function: FunctionId, value: u8 },
    CodeSize { function: FunctionId },
    InputSize { function: FunctionId },
    Demand { function: FunctionId },
    DegenerateSsr { index: usize },
    CloudInfeasible { function: FunctionId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EmptySsr { index } => write!(f, "empty SSR at index {index}"),
            ImportanceSum { sum } => write!(f, "importance factors sum {sum:?} ≠ 1"),
            NegativeImportance { kind } => write!(f, "importance factor for {kind} is negative"),
            TooManySsrs { ssrs, users } => write!(f, "{ssrs} SSRs for {users} users"),
            UnknownUser { ssr, user_id } => {
                write!(f, "SSR at index {ssr} references unknown user {user_id}")
            }
            DuplicateUser { user_id } => write!(f, "user {user_id} has more than one SSR"),
            UserIdMismatch { position, id } => {
                write!(f, "user at position {position} carries id {id}")
            }
            BadLatency { user } => write!(f, "user {user} latency must be positive"),
            OutsideCoverage { user, distance } => {
                write!(f, "user {user} at distance {distance} is outside fog coverage")
            }
            PriorityBlend { value } => write!(f, "priority blend {value} outside [0, 1]"),
            DistanceCap { value } => write!(f, "distance cap {value} must be positive"),
            PriorityDelta { value } => write!(f, "priority delta {value} must be positive"),
            BadLimits {
                environment,
                reason,
            } => write!(f, "{environment} limits: {reason}"),
            FogExceedsCloud { kind } => write!(f, "fog {kind} cap exceeds cloud cap"),
            CriticalValue { function, value } => {
                write!(f, "function {function} critical value {value} outside 1..=5")
            }
            CodeSize { function } => write!(f, "function {function} code size must be positive"),
            InputSize { function } => {
                write!(f, "function {function} input size must be non-negative")
            }
            Demand { function } => {
                write!(f, "function {function} demand must be finite and non-negative")
            }
            DegenerateSsr { index } => {
                write!(f, "SSR at index {index} has zero maximum code or input size")
            }
            CloudInfeasible { function } => {
                write!(f, "function {function} does not fit the cloud limits")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }

    /// True when some violation message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.to_string().contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        f.write_str(&self.messages().join("; "))
    }
}

/// Collect every invariant violation of a bucket document.
pub fn validate_bucket(spec: &BucketSpec) -> ValidationReport {
    let mut out = Vec::new();

    let weight_sum = spec.importance_factors.sum();
    if !((weight_sum - 1.0).abs() <= IMPORTANCE_SUM_TOLERANCE) {
        out.push(Violation::ImportanceSum { sum: weight_sum });
    }
    for (kind, w) in spec.importance_factors.iter() {
        if !(w >= 0.0) {
            out.push(Violation::NegativeImportance { kind });
        }
    }
    if !(0.0..=1.0).contains(&spec.priority_blend) {
        out.push(Violation::PriorityBlend {
            value: spec.priority_blend,
        });
    }
    let cap_ok = spec.distance_cap.is_finite() && spec.distance_cap > 0.0;
    if !cap_ok {
        out.push(Violation::DistanceCap {
            value: spec.distance_cap,
        });
    }
    if !(spec.priority_delta.is_finite() && spec.priority_delta > 0.0) {
        out.push(Violation::PriorityDelta {
            value: spec.priority_delta,
        });
    }
    for (environment, limits) in [("fog", &spec.fog), ("cloud", &spec.cloud)] {
        if let Some(reason) = limits.problems() {
            out.push(Violation::BadLimits {
                environment,
                reason,
            });
        }
    }
    for kind in ResourceKind::ALL {
        if spec.fog.per_function_cap.get(kind) > spec.cloud.per_function_cap.get(kind) {
            out.push(Violation::FogExceedsCloud { kind });
        }
    }

    for (position, user) in spec.users.iter().enumerate() {
        if user.id != position {
            out.push(Violation::UserIdMismatch {
                position,
                id: user.id,
            });
        }
        if !(user.latency.is_finite() && user.latency > 0.0) {
            out.push(Violation::BadLatency { user: position });
        }
        let distance = scoring::user_distance((0.0, 0.0), user.position);
        if cap_ok && !(distance <= spec.distance_cap) {
            out.push(Violation::OutsideCoverage {
                user: position,
                distance,
            });
        }
    }

    if spec.ssrs.len() > spec.users.len() {
        out.push(Violation::TooManySsrs {
            ssrs: spec.ssrs.len(),
            users: spec.users.len(),
        });
    }
    let mut seen = vec![false; spec.users.len()];
    for (i, ssr) in spec.ssrs.iter().enumerate() {
        match seen.get_mut(ssr.user_id) {
            None => out.push(Violation::UnknownUser {
                ssr: i,
                user_id: ssr.user_id,
            }),
            Some(true) => out.push(Violation::DuplicateUser {
                user_id: ssr.user_id,
            }),
            Some(flag) => *flag = true,
        }
        if ssr.functions.is_empty() {
            out.push(Violation::EmptySsr { index: i });
            continue;
        }
        let mut max_code: f64 = 0.0;
        let mut max_input: f64 = 0.0;
        for (j, func) in ssr.functions.iter().enumerate() {
            let id = FunctionId::new(i, j);
            if !(1..=5).contains(&func.critical_value) {
                out.push(Violation::CriticalValue {
                    function: id,
                    value: func.critical_value,
                });
            }
            if !(func.code_size.is_finite() && func.code_size > 0.0) {
                out.push(Violation::CodeSize { function: id });
            }
            if !(func.input_size.is_finite() && func.input_size >= 0.0) {
                out.push(Violation::InputSize { function: id });
            }
            if !(func.base_demand.is_valid() && func.supplementary_demand.is_valid()) {
                out.push(Violation::Demand { function: id });
            } else if !spec.cloud.admits(func) {
                out.push(Violation::CloudInfeasible { function: id });
            }
            max_code = max_code.max(func.code_size);
            max_input = max_input.max(func.input_size);
        }
        if !(max_code > 0.0 && max_input > 0.0) {
            out.push(Violation::DegenerateSsr { index: i });
        }
    }

    ValidationReport { violations: out }
}

/// A validated bucket with user and function priorities computed.
///
/// Immutable once built; read access to the document goes through `Deref`.
#[derive(Clone, Debug, PartialEq)]
pub struct SsrBucket {
    spec: BucketSpec,
    latency_priority: Vec<f64>,
    max_latency: f64,
}

impl SsrBucket {
    pub fn new(mut spec: BucketSpec) -> Result<Self> {
        let report = validate_bucket(&spec);
        if !report.is_valid() {
            return Err(Error::InvalidBucket(report));
        }
        let latencies: Vec<f64> = spec.users.iter().map(|u| u.latency).collect();
        let max_latency = latencies.iter().copied().fold(0.0, f64::max);
        let mut latency_priority = Vec::with_capacity(latencies.len());
        for user in &mut spec.users {
            let distance = scoring::user_distance((0.0, 0.0), user.position);
            let pd = scoring::distance_priority(distance, spec.distance_cap)?;
            let pl = scoring::latency_priority(user.latency, &latencies)?;
            user.priority = scoring::user_priority(pd, pl, spec.priority_blend)?;
            latency_priority.push(pl);
        }
        let delta = spec.priority_delta;
        for ssr in &mut spec.ssrs {
            let priorities = scoring::ssr_function_priorities(ssr, delta)?;
            for (func, p) in ssr.functions.iter_mut().zip(priorities) {
                func.priority = p;
            }
        }
        Ok(Self {
            spec,
            latency_priority,
            max_latency,
        })
    }

    pub fn spec(&self) -> &BucketSpec {
        &self.spec
    }

    pub fn total_functions(&self) -> usize {
        self.spec.ssrs.iter().map(|s| s.functions.len()).sum()
    }

    pub fn function(&self, id: FunctionId) -> &ServerlessFunction {
        &self.spec.ssrs[id.ssr].functions[id.index]
    }

    pub fn user_of(&self, ssr: usize) -> &User {
        &self.spec.users[self.spec.ssrs[ssr].user_id]
    }

    /// Latency-based priority of the user owning request `ssr`; the
    /// normalized form of that user's latency.
    pub fn latency_priority_of(&self, ssr: usize) -> f64 {
        self.latency_priority[self.spec.ssrs[ssr].user_id]
    }

    pub fn max_latency(&self) -> f64 {
        self.max_latency
    }

    /// Cloud link latency on the same scale as the normalized user latency.
    pub fn normalized_link_latency(&self) -> f64 {
        self.spec.cloud.link_latency / self.max_latency
    }

    /// Every function id, request-major then function-minor.
    pub fn function_ids(&self) -> Vec<FunctionId> {
        self.spec
            .ssrs
            .iter()
            .enumerate()
            .flat_map(|(i, s)| (0..s.functions.len()).map(move |j| FunctionId::new(i, j)))
            .collect()
    }

    pub fn fog_admits(&self, id: FunctionId) -> bool {
        self.spec.fog.admits(self.function(id))
    }

    pub fn cloud_admits(&self, id: FunctionId) -> bool {
        self.spec.cloud.admits(self.function(id))
    }

    pub fn admits(&self, id: FunctionId, site: Site) -> bool {
        match site {
            Site::Fog => self.fog_admits(id),
            Site::Cloud => self.cloud_admits(id),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.spec)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }
}

impl Deref for SsrBucket {
    type Target = BucketSpec;

    fn deref(&self) -> &BucketSpec {
        &self.spec
    }
}

impl Serialize for SsrBucket {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SsrBucket {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = BucketSpec::deserialize(d)?;
        SsrBucket::new(spec).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    Fog,
    Cloud,
}

/// Assignment flags of one function. `<0,0>` means not yet assigned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteFlags {
    pub fog: bool,
    pub cloud: bool,
}

impl SiteFlags {
    pub const UNASSIGNED: SiteFlags = SiteFlags {
        fog: false,
        cloud: false,
    };

    pub fn on(site: Site) -> Self {
        match site {
            Site::Fog => SiteFlags {
                fog: true,
                cloud: false,
            },
            Site::Cloud => SiteFlags {
                fog: false,
                cloud: true,
            },
        }
    }

    /// The assigned site, or `None` for `<0,0>` and the invalid `<1,1>`.
    pub fn site(self) -> Option<Site> {
        match (self.fog, self.cloud) {
            (true, false) => Some(Site::Fog),
            (false, true) => Some(Site::Cloud),
            _ => None,
        }
    }

    pub fn f(self) -> f64 {
        f64::from(u8::from(self.fog))
    }

    pub fn c(self) -> f64 {
        f64::from(u8::from(self.cloud))
    }
}

/// Assignment flags for every function of a bucket, indexed like the bucket.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Placement {
    flags: Vec<Vec<SiteFlags>>,
}

impl Placement {
    pub fn unassigned(bucket: &BucketSpec) -> Self {
        Self {
            flags: bucket
                .ssrs
                .iter()
                .map(|s| vec![SiteFlags::UNASSIGNED; s.functions.len()])
                .collect(),
        }
    }

    pub fn from_flags(flags: Vec<Vec<SiteFlags>>) -> Self {
        Self { flags }
    }

    /// Complete placement from a per-function rule.
    pub fn from_fn(bucket: &SsrBucket, mut rule: impl FnMut(FunctionId) -> Site) -> Self {
        let mut p = Self::unassigned(bucket);
        for id in bucket.function_ids() {
            p.assign(id, rule(id));
        }
        p
    }

    pub fn flags(&self, id: FunctionId) -> SiteFlags {
        self.flags[id.ssr][id.index]
    }

    pub fn site(&self, id: FunctionId) -> Option<Site> {
        self.flags(id).site()
    }

    pub fn assign(&mut self, id: FunctionId, site: Site) {
        self.flags[id.ssr][id.index] = SiteFlags::on(site);
    }

    pub fn rows(&self) -> &[Vec<SiteFlags>] {
        &self.flags
    }

    pub fn iter(&self) -> impl Iterator<Item = (FunctionId, SiteFlags)> + '_ {
        self.flags.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, f)| (FunctionId::new(i, j), *f))
        })
    }

    pub fn len(&self) -> usize {
        self.flags.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complete(&self) -> bool {
        self.iter().all(|(_, f)| f.site().is_some())
    }

    pub fn count(&self, site: Site) -> usize {
        self.iter().filter(|(_, f)| f.site() == Some(site)).count()
    }

    pub fn matches_shape(&self, bucket: &BucketSpec) -> bool {
        self.flags.len() == bucket.ssrs.len()
            && self
                .flags
                .iter()
                .zip(&bucket.ssrs)
                .all(|(row, s)| row.len() == s.functions.len())
    }
}

/// A placement-level violation.
#[derive(Clone, Debug, PartialEq)]
pub enum PlacementViolation {
    Shape,
    BothFlags(FunctionId),
    Unassigned(FunctionId),
    CodeSize { function: FunctionId, site: Site },
    InputSize { function: FunctionId, site: Site },
    Demand { function: FunctionId, site: Site, kind: ResourceKind },
}

impl fmt::Display for PlacementViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlacementViolation::Shape => f.write_str("placement shape does not match bucket"),
            PlacementViolation::BothFlags(id) => write!(f, "function {id} flagged on both sites"),
            PlacementViolation::Unassigned(id) => write!(f, "function {id} is unassigned"),
            PlacementViolation::CodeSize { function, site } => {
                write!(f, "function {function} code size exceeds {site:?} limit")
            }
            PlacementViolation::InputSize { function, site } => {
                write!(f, "function {function} input size exceeds {site:?} limit")
            }
            PlacementViolation::Demand {
                function,
                site,
                kind,
            } => write!(f, "function {function} {kind} demand exceeds {site:?} cap"),
        }
    }
}

/// Check a complete placement against the per-function platform limits
/// (code size, input size and resource caps on the chosen site).
pub fn check_placement(bucket: &SsrBucket, placement: &Placement) -> Vec<PlacementViolation> {
    if !placement.matches_shape(bucket) {
        return vec![PlacementViolation::Shape];
    }
    let mut out = Vec::new();
    for (id, flags) in placement.iter() {
        let site = match (flags.fog, flags.cloud) {
            (true, true) => {
                out.push(PlacementViolation::BothFlags(id));
                continue;
            }
            (false, false) => {
                out.push(PlacementViolation::Unassigned(id));
                continue;
            }
            (true, false) => Site::Fog,
            (false, true) => Site::Cloud,
        };
        let limits = match site {
            Site::Fog => &bucket.fog,
            Site::Cloud => &bucket.cloud,
        };
        let func = bucket.function(id);
        if func.code_size > limits.code_size_limit {
            out.push(PlacementViolation::CodeSize { function: id, site });
        }
        if func.input_size > limits.input_size_limit {
            out.push(PlacementViolation::InputSize { function: id, site });
        }
        let demand = func.total_demand();
        for kind in ResourceKind::ALL {
            if demand.get(kind) > limits.per_function_cap.get(kind) {
                out.push(PlacementViolation::Demand {
                    function: id,
                    site,
                    kind,
                });
            }
        }
    }
    out
}
