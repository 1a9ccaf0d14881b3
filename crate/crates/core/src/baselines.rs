//! Reference placement policies and the exhaustive oracle for small buckets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{bucket_objective, function_step_cost, total_step_cost};
use crate::error::{Error, Result};
use crate::model::{FunctionId, Placement, Site, SsrBucket};

/// Largest bucket the oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 14;

/// Fog whenever the fog platform admits the function, cloud otherwise.
pub fn fog_first(bucket: &SsrBucket) -> Placement {
    Placement::from_fn(bucket, |id| {
        if bucket.fog_admits(id) {
            Site::Fog
        } else {
            Site::Cloud
        }
    })
}

pub fn cloud_only(bucket: &SsrBucket) -> Placement {
    Placement::from_fn(bucket, |_| Site::Cloud)
}

/// Uniform choice among the admissible sites of each function.
pub fn random_feasible(bucket: &SsrBucket, rng: &mut impl Rng) -> Placement {
    Placement::from_fn(bucket, |id| {
        match (bucket.fog_admits(id), bucket.cloud_admits(id)) {
            (true, true) => {
                if rng.gen::<bool>() {
                    Site::Fog
                } else {
                    Site::Cloud
                }
            }
            (true, false) => Site::Fog,
            _ => Site::Cloud,
        }
    })
}

/// Per function, the admissible site with the smaller step cost; ties go to cloud.
pub fn greedy_cost(bucket: &SsrBucket) -> Placement {
    Placement::from_fn(bucket, |id| greedy_site(bucket, id))
}

fn greedy_site(bucket: &SsrBucket, id: FunctionId) -> Site {
    if !bucket.fog_admits(id) {
        return Site::Cloud;
    }
    if !bucket.cloud_admits(id) {
        return Site::Fog;
    }
    let fog = function_step_cost(bucket, id, Site::Fog);
    let cloud = function_step_cost(bucket, id, Site::Cloud);
    if fog < cloud {
        Site::Fog
    } else {
        Site::Cloud
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleChoice {
    pub placement: Placement,
    pub total_step_cost: f64,
    pub objective: f64,
}

/// Best placements under the two criteria.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Minimises the summed step cost.
    pub by_step_cost: OracleChoice,
    /// Minimises the summed per-request objective.
    pub by_objective: OracleChoice,
    /// Number of admissible placements enumerated.
    pub feasible_placements: usize,
}

/// Exhaustive search over every admissible placement.
///
/// Functions are taken in request-major order and placements are visited in
/// lexicographic order with fog before cloud; the first minimum wins.
pub fn brute_force_optimum(bucket: &SsrBucket) -> Result<OracleResult> {
    let ids = bucket.function_ids();
    let n = ids.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            limit: BRUTE_FORCE_LIMIT,
            got: n,
        });
    }
    let fog_ok: Vec<bool> = ids.iter().map(|&id| bucket.fog_admits(id)).collect();
    let cloud_ok: Vec<bool> = ids.iter().map(|&id| bucket.cloud_admits(id)).collect();

    let mut best_step: Option<OracleChoice> = None;
    let mut best_obj: Option<OracleChoice> = None;
    let mut feasible = 0usize;

    'outer: for code in 0u32..(1u32 << n) {
        let mut placement = Placement::unassigned(bucket);
        for (k, &id) in ids.iter().enumerate() {
            // most significant bit is the first function; 0 = fog
            let cloud = code >> (n - 1 - k) & 1 == 1;
            let admissible = if cloud { cloud_ok[k] } else { fog_ok[k] };
            if !admissible {
                continue 'outer;
            }
            placement.assign(id, if cloud { Site::Cloud } else { Site::Fog });
        }
        feasible += 1;
        let step = total_step_cost(bucket, &placement)?;
        let obj = bucket_objective(bucket, &placement)?.sum;
        let choice = OracleChoice {
            placement,
            total_step_cost: step,
            objective: obj,
        };
        if best_step.as_ref().map_or(true, |b| step < b.total_step_cost) {
            best_step = Some(choice.clone());
        }
        if best_obj.as_ref().map_or(true, |b| obj < b.objective) {
            best_obj = Some(choice);
        }
    }

    match (best_step, best_obj) {
        (Some(by_step_cost), Some(by_objective)) => Ok(OracleResult {
            by_step_cost,
            by_objective,
            feasible_placements: feasible,
        }),
        _ => Err(Error::NoFeasibleAction),
    }
}
