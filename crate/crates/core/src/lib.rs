//! Fog/cloud placement of serverless functions.
//!
//! A seeded workload generator produces buckets of serverless service
//! requests; a latency cost model scores placements; a sequential placement
//! environment exposes the decision process to a deep Q-learning agent, and
//! baselines plus an exhaustive oracle provide reference points.

pub mod baselines;
pub mod cost;
pub mod dqn;
pub mod env;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod scoring;
pub mod workload;

pub use error::{Error, Result};
pub use model::{
    BucketSpec, EnvironmentLimits, FunctionId, Placement, ResourceKind, ResourceVector,
    ServerlessFunction, Site, SiteFlags, Ssr, SsrBucket, User,
};
