//! Latency cost model: per-function caps, demand totals, communication and
//! computation latency, the per-request objective and the per-step costs the
//! agent minimizes.
//!
//! Latencies enter in normalized form: the user latency as its latency
//! priority (`l / max l`) and the fog-to-cloud link latency divided by the
//! same maximum. Every term is then dimensionless.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    EnvironmentLimits, FunctionId, Placement, ResourceKind, ResourceVector, ServerlessFunction,
    Site, SiteFlags, Ssr, SsrBucket,
};

/// Communication, computation and total cost of one request.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub comm: f64,
    pub comp: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(comm: f64, comp: f64) -> Self {
        Self {
            comm,
            comp,
            total: comm + comp,
        }
    }
}

/// Objective vector over a bucket plus its unweighted sum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSummary {
    pub per_ssr: Vec<CostBreakdown>,
    pub sum: f64,
}

fn assigned(flags: SiteFlags) -> Result<Site> {
    flags
        .site()
        .ok_or_else(|| Error::State(format!("function is not assigned (flags {flags:?})")))
}

/// Resource cap that applies to a function on its assigned site.
pub fn per_function_cap(
    flags: SiteFlags,
    fog: &EnvironmentLimits,
    cloud: &EnvironmentLimits,
) -> Result<ResourceVector> {
    assigned(flags)?;
    Ok(ResourceVector::from_fn(|k| {
        flags.f() * fog.per_function_cap.get(k) + flags.c() * cloud.per_function_cap.get(k)
    }))
}

pub fn total_demand(func: &ServerlessFunction) -> ResourceVector {
    func.total_demand()
}

pub fn ssr_base_demand(ssr: &Ssr) -> Result<ResourceVector> {
    non_empty(ssr)?;
    Ok(ssr.functions.iter().map(|f| f.base_demand).sum())
}

pub fn ssr_supplementary_demand(ssr: &Ssr) -> Result<ResourceVector> {
    non_empty(ssr)?;
    Ok(ssr.functions.iter().map(|f| f.supplementary_demand).sum())
}

fn non_empty(ssr: &Ssr) -> Result<()> {
    if ssr.functions.is_empty() {
        return Err(Error::Domain("SSR has no functions".into()));
    }
    Ok(())
}

/// `P + c·l_link`.
pub fn comm_latency_fn(flags: SiteFlags, user_priority: f64, link_latency: f64) -> Result<f64> {
    assigned(flags)?;
    Ok(user_priority + flags.c() * link_latency)
}

/// Weighted demand-to-cap ratios over CPU, RAM and storage, plus the
/// network I/O ratio scaled by the latency of the chosen path.
pub fn comp_latency_fn(
    demand: &ResourceVector,
    flags: SiteFlags,
    fog_cap: &ResourceVector,
    cloud_cap: &ResourceVector,
    weights: &ResourceVector,
    user_latency: f64,
    link_latency: f64,
) -> Result<f64> {
    assigned(flags)?;
    let cap = ResourceVector::from_fn(|k| flags.f() * fog_cap.get(k) + flags.c() * cloud_cap.get(k));
    let path = flags.f() * user_latency + flags.c() * link_latency;
    Ok(ratio_terms(demand, &cap, weights)? + io_term(demand, &cap, weights)? * path)
}

fn ratio(demand: &ResourceVector, cap: &ResourceVector, kind: ResourceKind) -> Result<f64> {
    let c = cap.get(kind);
    if !(c > 0.0) {
        return Err(Error::Domain(format!("{kind} cap {c} must be positive")));
    }
    Ok(demand.get(kind) / c)
}

fn ratio_terms(demand: &ResourceVector, cap: &ResourceVector, weights: &ResourceVector) -> Result<f64> {
    let mut acc = 0.0;
    for kind in [ResourceKind::Cpu, ResourceKind::Ram, ResourceKind::Storage] {
        acc += ratio(demand, cap, kind)? * weights.get(kind);
    }
    Ok(acc)
}

fn io_term(demand: &ResourceVector, cap: &ResourceVector, weights: &ResourceVector) -> Result<f64> {
    Ok(ratio(demand, cap, ResourceKind::NetIo)? * weights.net_io)
}

/// `Σ_j cost_j · priority_j / max priority`.
pub fn priority_weighted_sum(costs: &[f64], priorities: &[f64]) -> Result<f64> {
    if costs.len() != priorities.len() {
        return Err(Error::Shape {
            expected: costs.len(),
            got: priorities.len(),
        });
    }
    let max = priorities.iter().copied().fold(0.0, f64::max);
    if costs.is_empty() {
        return Ok(0.0);
    }
    if !(max > 0.0) {
        return Err(Error::Domain("function priorities must be positive".into()));
    }
    Ok(costs.iter().zip(priorities).map(|(c, p)| c * (p / max)).sum())
}

/// Cost of placing a function on the fog platform.
pub fn step_cost_fog(
    demand: &ResourceVector,
    fog_cap: &ResourceVector,
    weights: &ResourceVector,
    user_latency: f64,
    user_priority: f64,
) -> Result<f64> {
    Ok(ratio_terms(demand, fog_cap, weights)?
        + io_term(demand, fog_cap, weights)? * user_latency
        + user_priority)
}

/// Cost of placing a function on the cloud platform.
pub fn step_cost_cloud(
    demand: &ResourceVector,
    cloud_cap: &ResourceVector,
    weights: &ResourceVector,
    user_latency: f64,
    link_latency: f64,
    user_priority: f64,
) -> Result<f64> {
    Ok(ratio_terms(demand, cloud_cap, weights)?
        + io_term(demand, cloud_cap, weights)? * (user_latency + link_latency)
        + user_priority
        + link_latency)
}

/// Step cost of putting function `id` of `bucket` on `site`.
pub fn function_step_cost(bucket: &SsrBucket, id: FunctionId, site: Site) -> f64 {
    let demand = bucket.function(id).total_demand();
    let l_user = bucket.latency_priority_of(id.ssr);
    let p_user = bucket.user_of(id.ssr).priority;
    let weights = &bucket.importance_factors;
    // caps are validated positive when the bucket is built
    let cost = match site {
        Site::Fog => step_cost_fog(&demand, &bucket.fog.per_function_cap, weights, l_user, p_user),
        Site::Cloud => step_cost_cloud(
            &demand,
            &bucket.cloud.per_function_cap,
            weights,
            l_user,
            bucket.normalized_link_latency(),
            p_user,
        ),
    };
    cost.expect("validated bucket has positive caps")
}

fn ssr_flags(bucket: &SsrBucket, ssr: usize, placement: &Placement) -> Result<Vec<SiteFlags>> {
    if !placement.matches_shape(bucket) {
        return Err(Error::State("placement shape does not match bucket".into()));
    }
    let row = placement.rows()[ssr].clone();
    if let Some(j) = row.iter().position(|f| f.site().is_none()) {
        return Err(Error::State(format!(
            "function {} is not assigned",
            FunctionId::new(ssr, j)
        )));
    }
    Ok(row)
}

pub fn ssr_comm_latency(bucket: &SsrBucket, ssr: usize, placement: &Placement) -> Result<f64> {
    let p_user = bucket.user_of(ssr).priority;
    let lf = bucket.normalized_link_latency();
    ssr_flags(bucket, ssr, placement)?
        .into_iter()
        .map(|flags| comm_latency_fn(flags, p_user, lf))
        .sum()
}

/// Computation latency of every function of request `ssr`, in order.
pub fn function_comp_latencies(bucket: &SsrBucket, ssr: usize, placement: &Placement) -> Result<Vec<f64>> {
    let l_user = bucket.latency_priority_of(ssr);
    let lf = bucket.normalized_link_latency();
    ssr_flags(bucket, ssr, placement)?
        .into_iter()
        .zip(&bucket.ssrs[ssr].functions)
        .map(|(flags, func)| {
            comp_latency_fn(
                &func.total_demand(),
                flags,
                &bucket.fog.per_function_cap,
                &bucket.cloud.per_function_cap,
                &bucket.importance_factors,
                l_user,
                lf,
            )
        })
        .collect()
}

pub fn ssr_comp_latency(bucket: &SsrBucket, ssr: usize, placement: &Placement) -> Result<f64> {
    let costs = function_comp_latencies(bucket, ssr, placement)?;
    let priorities: Vec<f64> = bucket.ssrs[ssr].functions.iter().map(|f| f.priority).collect();
    priority_weighted_sum(&costs, &priorities)
}

pub fn ssr_objective(bucket: &SsrBucket, ssr: usize, placement: &Placement) -> Result<CostBreakdown> {
    Ok(CostBreakdown::new(
        ssr_comm_latency(bucket, ssr, placement)?,
        ssr_comp_latency(bucket, ssr, placement)?,
    ))
}

/// Per-request objectives and their sum (the evaluation scalar).
pub fn bucket_objective(bucket: &SsrBucket, placement: &Placement) -> Result<ObjectiveSummary> {
    let per_ssr = (0..bucket.ssrs.len())
        .map(|i| ssr_objective(bucket, i, placement))
        .collect::<Result<Vec<_>>>()?;
    let sum = per_ssr.iter().map(|c| c.total).sum();
    Ok(ObjectiveSummary { per_ssr, sum })
}

/// `Σ_j f·cost_fog + c·cost_cloud` over the functions of request `ssr`.
pub fn ssr_step_cost(bucket: &SsrBucket, ssr: usize, placement: &Placement) -> Result<f64> {
    let flags = ssr_flags(bucket, ssr, placement)?;
    Ok(flags
        .into_iter()
        .enumerate()
        .map(|(j, f)| {
            let id = FunctionId::new(ssr, j);
            f.f() * function_step_cost(bucket, id, Site::Fog)
                + f.c() * function_step_cost(bucket, id, Site::Cloud)
        })
        .sum())
}

/// Sum of the per-request step costs.
pub fn total_step_cost(bucket: &SsrBucket, placement: &Placement) -> Result<f64> {
    (0..bucket.ssrs.len())
        .map(|i| ssr_step_cost(bucket, i, placement))
        .sum()
}

/// Mean per-request step cost over the bucket.
pub fn bucket_step_cost(bucket: &SsrBucket, placement: &Placement) -> Result<f64> {
    if bucket.ssrs.is_empty() {
        return Err(Error::Domain("bucket has no SSRs".into()));
    }
    Ok(total_step_cost(bucket, placement)? / bucket.ssrs.len() as f64)
}

/// Mean of a list of per-request step costs.
pub fn mean_ssr_cost(costs: &[f64]) -> Result<f64> {
    if costs.is_empty() {
        return Err(Error::Domain("no SSR costs to average".into()));
    }
    Ok(costs.iter().sum::<f64>() / costs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::sample_spec;
    use proptest::prelude::*;

    const FOG: SiteFlags = SiteFlags {
        fog: true,
        cloud: false,
    };
    const CLOUD: SiteFlags = SiteFlags {
        fog: false,
        cloud: true,
    };

    fn w() -> ResourceVector {
        ResourceVector::uniform(0.25)
    }

    #[test]
    fn cap_selection() {
        let fog = EnvironmentLimits::fog_default();
        let cloud = EnvironmentLimits::cloud_default();
        assert_eq!(per_function_cap(FOG, &fog, &cloud).unwrap(), fog.per_function_cap);
        assert_eq!(per_function_cap(CLOUD, &fog, &cloud).unwrap(), cloud.per_function_cap);
        assert!(matches!(
            per_function_cap(SiteFlags::UNASSIGNED, &fog, &cloud),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn demand_sums() {
        let base = ResourceVector::new(1.0, 100.0, 10.0, 10.0);
        let f = ServerlessFunction::new(10.0, 10.0, 1, base, ResourceVector::ZERO);
        assert_eq!(total_demand(&f), base);
        let f = ServerlessFunction::new(10.0, 10.0, 1, base, ResourceVector::new(1.0, 50.0, 20.0, 30.0));
        assert_eq!(total_demand(&f), ResourceVector::new(2.0, 150.0, 30.0, 40.0));
        let z = ServerlessFunction::new(10.0, 10.0, 1, ResourceVector::ZERO, ResourceVector::ZERO);
        assert_eq!(total_demand(&z), ResourceVector::ZERO);

        let ssr = Ssr {
            user_id: 0,
            functions: vec![
                ServerlessFunction::new(1.0, 1.0, 1, base, ResourceVector::uniform(1.0)),
                ServerlessFunction::new(1.0, 1.0, 1, ResourceVector::new(2.0, 200.0, 20.0, 20.0), ResourceVector::ZERO),
            ],
        };
        assert_eq!(ssr_base_demand(&ssr).unwrap(), ResourceVector::new(3.0, 300.0, 30.0, 30.0));
        assert_eq!(ssr_supplementary_demand(&ssr).unwrap(), ResourceVector::uniform(1.0));
        let single = Ssr {
            user_id: 0,
            functions: vec![ssr.functions[0].clone()],
        };
        assert_eq!(ssr_base_demand(&single).unwrap(), base);
        let empty = Ssr {
            user_id: 0,
            functions: vec![],
        };
        assert!(ssr_base_demand(&empty).is_err());
        assert!(ssr_supplementary_demand(&empty).is_err());
    }

    #[test]
    fn comm_latency_examples() {
        assert!((comm_latency_fn(FOG, 0.6, 0.1).unwrap() - 0.6).abs() < 1e-12);
        assert!((comm_latency_fn(CLOUD, 0.6, 0.1).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(comm_latency_fn(CLOUD, 0.0, 0.0).unwrap(), 0.0);
        assert!(comm_latency_fn(SiteFlags::UNASSIGNED, 0.6, 0.1).is_err());
    }

    #[test]
    fn comp_latency_examples() {
        let fog_cap = ResourceVector::new(2.0, 1024.0, 1024.0, 2048.0);
        let cloud_cap = ResourceVector::new(6.0, 5120.0, 10240.0, 10240.0);
        let zero = ResourceVector::ZERO;
        assert_eq!(comp_latency_fn(&zero, FOG, &fog_cap, &cloud_cap, &w(), 0.4, 0.4).unwrap(), 0.0);
        let half_fog = ResourceVector::from_fn(|k| fog_cap.get(k) * 0.5);
        let c = comp_latency_fn(&half_fog, FOG, &fog_cap, &cloud_cap, &w(), 0.4, 0.9).unwrap();
        assert!((c - 0.425).abs() < 1e-9);
        let half_cloud = ResourceVector::from_fn(|k| cloud_cap.get(k) * 0.5);
        let c = comp_latency_fn(&half_cloud, CLOUD, &fog_cap, &cloud_cap, &w(), 0.9, 0.4).unwrap();
        assert!((c - 0.425).abs() < 1e-9);
        assert!(comp_latency_fn(&zero, SiteFlags::UNASSIGNED, &fog_cap, &cloud_cap, &w(), 0.4, 0.4).is_err());
    }

    #[test]
    fn weighted_sum_examples() {
        assert!((priority_weighted_sum(&[0.425], &[1.7]).unwrap() - 0.425).abs() < 1e-12);
        assert!((priority_weighted_sum(&[0.4, 0.2], &[5.0, 2.5]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(priority_weighted_sum(&[0.0, 0.0], &[5.0, 2.5]).unwrap(), 0.0);
        assert!((CostBreakdown::new(1.3, 0.5).total - 1.8).abs() < 1e-12);
    }

    #[test]
    fn step_cost_examples() {
        let cap = ResourceVector::new(2.0, 1024.0, 1024.0, 2048.0);
        let zero = ResourceVector::ZERO;
        assert!((step_cost_fog(&zero, &cap, &w(), 0.4, 0.6).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(step_cost_fog(&zero, &cap, &w(), 0.4, 0.0).unwrap(), 0.0);
        let half = ResourceVector::from_fn(|k| cap.get(k) * 0.5);
        assert!((step_cost_fog(&half, &cap, &w(), 0.4, 0.6).unwrap() - 1.025).abs() < 1e-9);

        assert!((step_cost_cloud(&zero, &cap, &w(), 0.4, 0.1, 0.6).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(step_cost_cloud(&zero, &cap, &w(), 0.4, 0.0, 0.0).unwrap(), 0.0);
        let c = step_cost_cloud(&half, &cap, &w(), 0.4, 0.1, 0.6).unwrap();
        assert!((c - 1.1375).abs() < 1e-9);
    }

    #[test]
    fn mean_of_ssr_costs() {
        assert_eq!(mean_ssr_cost(&[1.0, 3.0]).unwrap(), 2.0);
        assert_eq!(mean_ssr_cost(&[1.7]).unwrap(), 1.7);
        assert!(mean_ssr_cost(&[]).is_err());
    }

    #[test]
    fn bucket_level_recomputation() {
        let bucket = SsrBucket::new(sample_spec()).unwrap();
        let placement = Placement::from_fn(&bucket, |id| {
            if bucket.fog_admits(id) {
                Site::Fog
            } else {
                Site::Cloud
            }
        });
        let lf = bucket.normalized_link_latency();
        for i in 0..bucket.ssrs.len() {
            let user = bucket.user_of(i).priority;
            let mut comm = 0.0;
            let mut steps = 0.0;
            for j in 0..bucket.ssrs[i].functions.len() {
                let id = FunctionId::new(i, j);
                let site = placement.site(id).unwrap();
                comm += user + if site == Site::Cloud { lf } else { 0.0 };
                steps += function_step_cost(&bucket, id, site);
            }
            assert!((ssr_comm_latency(&bucket, i, &placement).unwrap() - comm).abs() < 1e-12);
            assert!((ssr_step_cost(&bucket, i, &placement).unwrap() - steps).abs() < 1e-12);
            let obj = ssr_objective(&bucket, i, &placement).unwrap();
            assert!((obj.total - obj.comm - obj.comp).abs() < 1e-12);
        }
        let total = total_step_cost(&bucket, &placement).unwrap();
        let mean = bucket_step_cost(&bucket, &placement).unwrap();
        assert!((mean * 2.0 - total).abs() < 1e-12);
        let summary = bucket_objective(&bucket, &placement).unwrap();
        assert_eq!(summary.per_ssr.len(), 2);
        let s: f64 = summary.per_ssr.iter().map(|c| c.total).sum();
        assert!((summary.sum - s).abs() < 1e-12);
    }

    #[test]
    fn single_function_objective() {
        let mut spec = sample_spec();
        spec.ssrs.truncate(1);
        spec.ssrs[0].functions.truncate(1);
        let bucket = SsrBucket::new(spec).unwrap();
        let p = Placement::from_fn(&bucket, |_| Site::Cloud);
        let obj = ssr_objective(&bucket, 0, &p).unwrap();
        let comm = bucket.users[0].priority + bucket.normalized_link_latency();
        let comp = function_comp_latencies(&bucket, 0, &p).unwrap()[0];
        assert!((obj.total - (comm + comp)).abs() < 1e-12);
        assert!((bucket_step_cost(&bucket, &p).unwrap() - ssr_step_cost(&bucket, 0, &p).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn incomplete_placement_is_state_error() {
        let bucket = SsrBucket::new(sample_spec()).unwrap();
        let p = Placement::unassigned(&bucket);
        assert!(matches!(ssr_objective(&bucket, 0, &p), Err(Error::State(_))));
        assert!(matches!(bucket_step_cost(&bucket, &p), Err(Error::State(_))));
    }

    fn demand() -> impl Strategy<Value = ResourceVector> {
        (0.0..2.0f64, 0.0..1024.0f64, 0.0..1024.0f64, 0.0..2048.0f64)
            .prop_map(|(a, b, c, d)| ResourceVector::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn cloud_costs_more_under_equal_ratios(
            d in demand(), l_user in 0.0..1.0f64, lf in 0.0..2.0f64, p in 0.0..1.0f64,
        ) {
            let cap = ResourceVector::new(2.0, 1024.0, 1024.0, 2048.0);
            let fog = step_cost_fog(&d, &cap, &w(), l_user, p).unwrap();
            let cloud = step_cost_cloud(&d, &cap, &w(), l_user, lf, p).unwrap();
            let io_ratio = d.net_io / cap.net_io;
            let expected = lf * (1.0 + io_ratio * 0.25);
            prop_assert!(cloud - fog >= -1e-12);
            prop_assert!((cloud - fog - expected).abs() < 1e-9);
        }

        #[test]
        fn step_costs_increase_with_demand(
            d in demand(), bump in 0.01..1.0f64, kind in 0usize..4, l_user in 0.01..1.0f64,
        ) {
            let kind = ResourceKind::ALL[kind];
            let mut more = d;
            *more.get_mut(kind) += bump;
            let fog = EnvironmentLimits::fog_default().per_function_cap;
            let cloud = EnvironmentLimits::cloud_default().per_function_cap;
            prop_assert!(step_cost_fog(&more, &fog, &w(), l_user, 0.5).unwrap()
                > step_cost_fog(&d, &fog, &w(), l_user, 0.5).unwrap());
            prop_assert!(step_cost_cloud(&more, &cloud, &w(), l_user, 0.4, 0.5).unwrap()
                > step_cost_cloud(&d, &cloud, &w(), l_user, 0.4, 0.5).unwrap());
        }

        #[test]
        fn cap_selector_identity(on_fog in any::<bool>()) {
            let fog = EnvironmentLimits::fog_default();
            let cloud = EnvironmentLimits::cloud_default();
            let flags = if on_fog { FOG } else { CLOUD };
            let cap = per_function_cap(flags, &fog, &cloud).unwrap();
            let expected = if on_fog { fog.per_function_cap } else { cloud.per_function_cap };
            prop_assert_eq!(cap, expected);
        }
    }
}
