//! Placement statistics and their CSV form.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cost::{bucket_objective, total_step_cost};
use crate::error::{Error, Result};
use crate::model::{Placement, ResourceKind, Site, SsrBucket};

/// Statistics of the functions placed on one site. Percentages are in [0, 100].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteStats {
    pub count: usize,
    pub fraction: f64,
    /// Share of the bucket's total demand of each kind, in `ResourceKind::ALL`
    /// order; `None` when the bucket demands none of that kind.
    pub demand_share: [Option<f64>; 4],
    pub avg_code_size: Option<f64>,
    pub avg_input_size: Option<f64>,
    pub avg_critical: Option<f64>,
    pub avg_priority: Option<f64>,
}

impl SiteStats {
    pub fn demand_share_of(&self, kind: ResourceKind) -> Option<f64> {
        self.demand_share[kind_index(kind)]
    }
}

fn kind_index(kind: ResourceKind) -> usize {
    ResourceKind::ALL.iter().position(|k| *k == kind).unwrap_or(0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalRow {
    pub value: u8,
    pub fog: usize,
    pub cloud: usize,
}

impl CriticalRow {
    pub fn total(&self) -> usize {
        self.fog + self.cloud
    }

    /// Percentage of functions with this value placed on fog.
    pub fn fog_percent(&self) -> Option<f64> {
        (self.total() > 0).then(|| 100.0 * self.fog as f64 / self.total() as f64)
    }

    pub fn cloud_percent(&self) -> Option<f64> {
        (self.total() > 0).then(|| 100.0 * self.cloud as f64 / self.total() as f64)
    }
}

/// Per critical value (1..=5) counts split by site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalHistogram {
    pub rows: [CriticalRow; 5],
}

impl CriticalHistogram {
    pub fn row(&self, value: u8) -> Option<&CriticalRow> {
        self.rows.iter().find(|r| r.value == value)
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(CriticalRow::total).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub total_functions: usize,
    pub fog: SiteStats,
    pub cloud: SiteStats,
    pub critical: CriticalHistogram,
    pub total_step_cost: f64,
    pub objective: f64,
}

impl PlacementReport {
    pub fn site(&self, site: Site) -> &SiteStats {
        match site {
            Site::Fog => &self.fog,
            Site::Cloud => &self.cloud,
        }
    }
}

fn require_complete(bucket: &SsrBucket, placement: &Placement) -> Result<()> {
    if !placement.matches_shape(bucket) {
        return Err(Error::State("placement shape does not match bucket".into()));
    }
    if !placement.is_complete() {
        return Err(Error::State("placement is incomplete".into()));
    }
    Ok(())
}

pub fn critical_histogram(bucket: &SsrBucket, placement: &Placement) -> Result<CriticalHistogram> {
    require_complete(bucket, placement)?;
    let mut rows: [CriticalRow; 5] = std::array::from_fn(|k| CriticalRow {
        value: k as u8 + 1,
        ..CriticalRow::default()
    });
    for (id, flags) in placement.iter() {
        let q = bucket.function(id).critical_value;
        let row = rows
            .get_mut(usize::from(q).wrapping_sub(1))
            .ok_or_else(|| Error::Domain(format!("critical value {q} outside 1..=5")))?;
        match flags.site() {
            Some(Site::Fog) => row.fog += 1,
            _ => row.cloud += 1,
        }
    }
    Ok(CriticalHistogram { rows })
}

fn mean(sum: f64, n: usize) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

pub fn report(bucket: &SsrBucket, placement: &Placement) -> Result<PlacementReport> {
    require_complete(bucket, placement)?;
    let total = placement.len();

    #[derive(Default)]
    struct Acc {
        count: usize,
        demand: [f64; 4],
        code: f64,
        input: f64,
        critical: f64,
        priority: f64,
    }
    let mut fog = Acc::default();
    let mut cloud = Acc::default();
    for (id, flags) in placement.iter() {
        let func = bucket.function(id);
        let acc = match flags.site() {
            Some(Site::Fog) => &mut fog,
            _ => &mut cloud,
        };
        acc.count += 1;
        let demand = func.total_demand();
        for (k, kind) in ResourceKind::ALL.iter().enumerate() {
            acc.demand[k] += demand.get(*kind);
        }
        acc.code += func.code_size;
        acc.input += func.input_size;
        acc.critical += f64::from(func.critical_value);
        acc.priority += func.priority;
    }

    let finish = |a: &Acc, other: &Acc| SiteStats {
        count: a.count,
        fraction: 100.0 * a.count as f64 / total as f64,
        demand_share: std::array::from_fn(|k| {
            let t = a.demand[k] + other.demand[k];
            (t > 0.0).then(|| 100.0 * a.demand[k] / t)
        }),
        avg_code_size: mean(a.code, a.count),
        avg_input_size: mean(a.input, a.count),
        avg_critical: mean(a.critical, a.count),
        avg_priority: mean(a.priority, a.count),
    };

    Ok(PlacementReport {
        total_functions: total,
        fog: finish(&fog, &cloud),
        cloud: finish(&cloud, &fog),
        critical: critical_histogram(bucket, placement)?,
        total_step_cost: total_step_cost(bucket, placement)?,
        objective: bucket_objective(bucket, placement)?.sum,
    })
}

/// One evaluated run: a report tagged with its sweep point, algorithm and run index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub total_functions: usize,
    pub algorithm: String,
    pub run: usize,
    pub report: PlacementReport,
}

const KIND_COLS: [&str; 4] = ["cpu", "ram", "storage", "net_io"];

fn site_columns(prefix: &str) -> Vec<String> {
    let mut cols = vec![format!("{prefix}_count"), format!("{prefix}_fraction")];
    cols.extend(KIND_COLS.iter().map(|k| format!("{prefix}_{k}_share")));
    for name in ["avg_code_size", "avg_input_size", "avg_critical", "avg_priority"] {
        cols.push(format!("{prefix}_{name}"));
    }
    cols
}

fn histogram_columns() -> Vec<String> {
    let mut cols = Vec::new();
    for q in 1..=5 {
        cols.push(format!("critical_{q}_fog"));
        cols.push(format!("critical_{q}_cloud"));
    }
    cols
}

/// Header of the per-run CSV.
pub fn detail_header() -> Vec<String> {
    let mut cols: Vec<String> = ["total_functions", "algorithm", "run"].map(String::from).to_vec();
    cols.extend(site_columns("fog"));
    cols.extend(site_columns("cloud"));
    cols.extend(histogram_columns());
    cols.push("total_step_cost".into());
    cols.push("objective".into());
    cols
}

/// Header of the aggregated CSV.
pub fn aggregate_header() -> Vec<String> {
    let mut cols: Vec<String> = ["total_functions", "algorithm", "runs"].map(String::from).to_vec();
    cols.extend(site_columns("fog"));
    cols.extend(site_columns("cloud"));
    cols.extend(histogram_columns());
    cols.push("total_step_cost".into());
    cols.push("objective".into());
    cols
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn site_cells(s: &SiteStats, count: String) -> Vec<String> {
    let mut cells = vec![count, s.fraction.to_string()];
    cells.extend(s.demand_share.iter().map(|v| opt(*v)));
    for v in [s.avg_code_size, s.avg_input_size, s.avg_critical, s.avg_priority] {
        cells.push(opt(v));
    }
    cells
}

pub fn write_detail_csv(w: impl Write, rows: &[ReportRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(detail_header())?;
    for row in rows {
        let r = &row.report;
        let mut cells = vec![
            row.total_functions.to_string(),
            row.algorithm.clone(),
            row.run.to_string(),
        ];
        cells.extend(site_cells(&r.fog, r.fog.count.to_string()));
        cells.extend(site_cells(&r.cloud, r.cloud.count.to_string()));
        for c in &r.critical.rows {
            cells.push(c.fog.to_string());
            cells.push(c.cloud.to_string());
        }
        cells.push(r.total_step_cost.to_string());
        cells.push(r.objective.to_string());
        out.write_record(cells)?;
    }
    out.flush()?;
    Ok(())
}

/// Mean over the runs of one (sweep point, algorithm) group.
///
/// Counts, fractions, demand shares, histogram counts and costs are run means.
/// Per-site averages are pooled over all functions placed on that site, so
/// they stay absent only when no run put anything there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub total_functions: usize,
    pub algorithm: String,
    pub runs: usize,
    pub fog: SiteStats,
    pub cloud: SiteStats,
    /// Mean per-run counts, fog then cloud, for values 1..=5.
    pub critical: [(f64, f64); 5],
    pub total_step_cost: f64,
    pub objective: f64,
    /// Mean function counts per site.
    pub mean_fog_count: f64,
    pub mean_cloud_count: f64,
}

fn pooled_site(reports: &[&SiteStats]) -> (SiteStats, f64) {
    let n = reports.len() as f64;
    let count: usize = reports.iter().map(|s| s.count).sum();
    let pooled = |get: fn(&SiteStats) -> Option<f64>| -> Option<f64> {
        if count == 0 {
            return None;
        }
        let sum: f64 = reports
            .iter()
            .filter_map(|s| get(s).map(|v| v * s.count as f64))
            .sum();
        Some(sum / count as f64)
    };
    let stats = SiteStats {
        count,
        fraction: reports.iter().map(|s| s.fraction).sum::<f64>() / n,
        demand_share: std::array::from_fn(|k| {
            let vals: Vec<f64> = reports.iter().filter_map(|s| s.demand_share[k]).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        }),
        avg_code_size: pooled(|s| s.avg_code_size),
        avg_input_size: pooled(|s| s.avg_input_size),
        avg_critical: pooled(|s| s.avg_critical),
        avg_priority: pooled(|s| s.avg_priority),
    };
    (stats, count as f64 / n)
}

/// Group rows by (sweep point, algorithm) in first-appearance order of the
/// sweep point and algorithm, and average each group.
pub fn aggregate(rows: &[ReportRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(usize, usize), Vec<&ReportRow>> = BTreeMap::new();
    let mut algo_order: Vec<&str> = Vec::new();
    for row in rows {
        let a = match algo_order.iter().position(|a| *a == row.algorithm) {
            Some(i) => i,
            None => {
                algo_order.push(&row.algorithm);
                algo_order.len() - 1
            }
        };
        groups.entry((row.total_functions, a)).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|((n, a), group)| {
            let runs = group.len();
            let k = runs as f64;
            let (fog, mean_fog_count) =
                pooled_site(&group.iter().map(|r| &r.report.fog).collect::<Vec<_>>());
            let (cloud, mean_cloud_count) =
                pooled_site(&group.iter().map(|r| &r.report.cloud).collect::<Vec<_>>());
            let critical = std::array::from_fn(|q| {
                let f: usize = group.iter().map(|r| r.report.critical.rows[q].fog).sum();
                let c: usize = group.iter().map(|r| r.report.critical.rows[q].cloud).sum();
                (f as f64 / k, c as f64 / k)
            });
            AggregateRow {
                total_functions: n,
                algorithm: algo_order[a].to_string(),
                runs,
                fog,
                cloud,
                critical,
                total_step_cost: group.iter().map(|r| r.report.total_step_cost).sum::<f64>() / k,
                objective: group.iter().map(|r| r.report.objective).sum::<f64>() / k,
                mean_fog_count,
                mean_cloud_count,
            }
        })
        .collect()
}

pub fn write_aggregate_csv(w: impl Write, rows: &[AggregateRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(aggregate_header())?;
    for row in rows {
        let mut cells = vec![
            row.total_functions.to_string(),
            row.algorithm.clone(),
            row.runs.to_string(),
        ];
        cells.extend(site_cells(&row.fog, row.mean_fog_count.to_string()));
        cells.extend(site_cells(&row.cloud, row.mean_cloud_count.to_string()));
        for (f, c) in &row.critical {
            cells.push(f.to_string());
            cells.push(c.to_string());
        }
        cells.push(row.total_step_cost.to_string());
        cells.push(row.objective.to_string());
        out.write_record(cells)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{cloud_only, fog_first};
    use crate::model::tests::{sample_spec, small_function};
    use crate::model::{FunctionId, ResourceVector, Ssr};

    fn bucket_of(funcs: Vec<crate::model::ServerlessFunction>) -> SsrBucket {
        let mut spec = sample_spec();
        spec.ssrs = vec![Ssr {
            user_id: 0,
            functions: funcs,
        }];
        SsrBucket::new(spec).unwrap()
    }

    #[test]
    fn fractions_count_functions() {
        let b = bucket_of(vec![small_function(100.0, 500.0, 2); 10]);
        let p = Placement::from_fn(&b, |id| if id.index < 3 { Site::Fog } else { Site::Cloud });
        let r = report(&b, &p).unwrap();
        assert_eq!(r.fog.fraction, 30.0);
        assert_eq!(r.cloud.fraction, 70.0);
        assert_eq!((r.fog.count, r.cloud.count), (3, 7));
    }

    #[test]
    fn all_cloud_leaves_fog_averages_absent() {
        let b = SsrBucket::new(sample_spec()).unwrap();
        let r = report(&b, &cloud_only(&b)).unwrap();
        assert_eq!(r.fog.avg_code_size, None);
        assert_eq!(r.fog.avg_critical, None);
        assert_eq!(r.cloud.avg_code_size, Some((100.0 + 500.0 + 50.0) / 3.0));
        assert_eq!(r.cloud.avg_input_size, Some((500.0 + 2500.0 + 200.0) / 3.0));
        assert_eq!(r.cloud.avg_critical, Some(3.0));
        assert_eq!(r.fog.demand_share, [Some(0.0); 4]);
        assert_eq!(r.cloud.demand_share, [Some(100.0); 4]);
    }

    #[test]
    fn cpu_share_is_ratio_of_sums() {
        // 6 of 30 cores on fog
        let mk = |cpu: f64| {
            let mut f = small_function(100.0, 500.0, 1);
            f.base_demand = ResourceVector::new(cpu, 100.0, 10.0, 10.0);
            f
        };
        let b = bucket_of(vec![mk(1.5), mk(1.5), mk(1.5), mk(1.5), mk(4.0), mk(4.0), mk(4.0), mk(4.0), mk(4.0), mk(4.0)]);
        let p = Placement::from_fn(&b, |id| if id.index < 4 { Site::Fog } else { Site::Cloud });
        let r = report(&b, &p).unwrap();
        assert!((r.fog.demand_share_of(ResourceKind::Cpu).unwrap() - 20.0).abs() < 1e-9);
        assert!((r.cloud.demand_share_of(ResourceKind::Cpu).unwrap() - 80.0).abs() < 1e-9);
        assert!((r.fog.demand_share_of(ResourceKind::Ram).unwrap() - 40.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_splits() {
        // 15 functions of value 5 with 3 on fog; 28 of value 1 with 12 on fog
        let mut funcs = vec![small_function(100.0, 500.0, 5); 15];
        funcs.extend(vec![small_function(100.0, 500.0, 1); 28]);
        let b = bucket_of(funcs);
        let p = Placement::from_fn(&b, |id| {
            let fog = (id.index < 3) || (15..27).contains(&id.index);
            if fog { Site::Fog } else { Site::Cloud }
        });
        let h = critical_histogram(&b, &p).unwrap();
        let five = h.row(5).unwrap();
        assert_eq!((five.fog, five.cloud), (3, 12));
        assert_eq!(five.fog_percent(), Some(20.0));
        assert_eq!(five.cloud_percent(), Some(80.0));
        let one = h.row(1).unwrap();
        assert_eq!((one.fog, one.cloud), (12, 16));
        assert_eq!(one.fog_percent().unwrap().floor(), 42.0);
        assert_eq!(one.cloud_percent().unwrap().floor(), 57.0);
        assert!((one.fog_percent().unwrap() + one.cloud_percent().unwrap() - 100.0).abs() < 1e-9);
        let three = h.row(3).unwrap();
        assert_eq!(three.total(), 0);
        assert_eq!(three.fog_percent(), None);
        assert_eq!(h.total(), 43);
    }

    #[test]
    fn incomplete_placement_is_a_state_error() {
        let b = SsrBucket::new(sample_spec()).unwrap();
        let mut p = Placement::unassigned(&b);
        p.assign(FunctionId::new(0, 0), Site::Fog);
        assert!(matches!(report(&b, &p), Err(Error::State(_))));
        assert!(matches!(critical_histogram(&b, &p), Err(Error::State(_))));
    }

    #[test]
    fn csv_headers_match_cells() {
        let b = SsrBucket::new(sample_spec()).unwrap();
        let rows: Vec<ReportRow> = (0..2)
            .flat_map(|run| {
                let b = &b;
                [("fog_first", fog_first(b)), ("cloud_only", cloud_only(b))]
                    .into_iter()
                    .map(move |(a, p)| ReportRow {
                        total_functions: 3,
                        algorithm: a.into(),
                        run,
                        report: report(b, &p).unwrap(),
                    })
            })
            .collect();
        let mut buf = Vec::new();
        write_detail_csv(&mut buf, &rows).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rd.headers().unwrap().len(), detail_header().len());
        assert_eq!(rd.records().count(), 4);

        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].algorithm, "fog_first");
        assert_eq!(agg[0].runs, 2);
        assert_eq!(agg[1].fog.avg_code_size, None);
        let mut buf = Vec::new();
        write_aggregate_csv(&mut buf, &agg).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let n = aggregate_header().len();
        assert!(rd.records().all(|r| r.unwrap().len() == n));
    }

    #[test]
    fn pooled_averages_weight_by_count() {
        let mk = |count, avg| SiteStats {
            count,
            fraction: 0.0,
            demand_share: [None; 4],
            avg_code_size: avg,
            avg_input_size: avg,
            avg_critical: avg,
            avg_priority: avg,
        };
        let (s, mean_count) = pooled_site(&[&mk(1, Some(10.0)), &mk(3, Some(2.0)), &mk(0, None)]);
        assert_eq!(s.avg_code_size, Some(4.0));
        assert_eq!(s.count, 4);
        assert!((mean_count - 4.0 / 3.0).abs() < 1e-12);
    }
}
