//! Metric extraction (DT, REP, PB, TC), CDF and time-variance series, and
//! baseline-vs-variant disturbance summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::SimResult;
use crate::error::{CriError, Result};
use crate::reputation::UserId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    /// Discovered truth per task.
    #[serde(rename = "DT")]
    DiscoveredTruth,
    #[serde(rename = "REP")]
    Reputation,
    #[serde(rename = "PB")]
    Payback,
    #[serde(rename = "TC")]
    TaskCount,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::DiscoveredTruth,
        Metric::Reputation,
        Metric::Payback,
        Metric::TaskCount,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Metric::DiscoveredTruth => "DT",
            Metric::Reputation => "REP",
            Metric::Payback => "PB",
            Metric::TaskCount => "TC",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Metric {
    type Err = CriError;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.code() == s)
            .ok_or_else(|| CriError::InvalidInput(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Cdf,
    Tvf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub metric: Metric,
    pub kind: SeriesKind,
    pub scenario: String,
    pub points: Vec<(f64, f64)>,
}

/// Empirical CDF: one point per distinct value, `y` = fraction of values
/// less than or equal to `x`.
pub fn cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(CriError::InvalidInput("cdf of an empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CriError::InvalidInput(
            "cdf sample holds a non-finite value".into(),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let y = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == v => last.1 = y,
            _ => points.push((v, y)),
        }
    }
    Ok(points)
}

/// Raw sample behind a metric's CDF: DT per completed task, otherwise one
/// value per user.
pub fn metric_values(result: &SimResult, metric: Metric) -> Vec<f64> {
    match metric {
        Metric::DiscoveredTruth => result
            .completed()
            .filter_map(|o| o.discovered_truth)
            .collect(),
        Metric::Reputation => result
            .totals
            .values()
            .map(|t| t.final_reputation.value())
            .collect(),
        Metric::Payback => result.totals.values().map(|t| t.payback).collect(),
        Metric::TaskCount => result.totals.values().map(|t| t.tasks as f64).collect(),
    }
}

pub fn metric_cdf(result: &SimResult, metric: Metric) -> Result<MetricSeries> {
    Ok(MetricSeries {
        metric,
        kind: SeriesKind::Cdf,
        scenario: result.label.clone(),
        points: cdf(&metric_values(result, metric))?,
    })
}

/// Time-variance series sampled at every task announcement.
///
/// DT gives the discovered truth of completed tasks. REP gives the current
/// reputation; PB and TC are cumulative. With `user = None` the per-user
/// metrics are averaged over the whole population.
pub fn tvf(result: &SimResult, metric: Metric, user: Option<UserId>) -> Result<MetricSeries> {
    if let Some(u) = user {
        if !result.totals.contains_key(&u) {
            return Err(CriError::InvalidInput(format!("unknown user {u}")));
        }
    }
    let population = result.totals.len().max(1) as f64;
    let r0 = result.config.params.initial_reputation();
    let mut reps: BTreeMap<UserId, f64> = result.totals.keys().map(|u| (*u, r0.value())).collect();
    let mut rep_sum = r0.value() * result.totals.len() as f64;
    let mut payback = 0.0;
    let mut tasks = 0.0;

    let mut points = Vec::with_capacity(result.outcomes.len());
    for outcome in &result.outcomes {
        let x = outcome.announce_time as f64;
        for (u, r) in &outcome.reputations_after {
            let slot = reps.get_mut(u).expect("employee is a known user");
            rep_sum += r.value() - *slot;
            *slot = r.value();
        }
        let y = match (metric, user) {
            (Metric::DiscoveredTruth, _) => match outcome.discovered_truth {
                Some(dt) => dt,
                None => continue,
            },
            (Metric::Reputation, Some(u)) => reps[&u],
            (Metric::Reputation, None) => rep_sum / population,
            (Metric::Payback, Some(u)) => {
                payback += outcome.paybacks.get(&u).map_or(0.0, |p| p.normalized);
                payback
            }
            (Metric::Payback, None) => {
                payback += outcome.paybacks.values().map(|p| p.normalized).sum::<f64>();
                payback / population
            }
            (Metric::TaskCount, Some(u)) => {
                tasks += if outcome.paybacks.contains_key(&u) {
                    1.0
                } else {
                    0.0
                };
                tasks
            }
            (Metric::TaskCount, None) => {
                tasks += outcome.paybacks.len() as f64;
                tasks / population
            }
        };
        points.push((x, y));
    }
    let scenario = match user {
        Some(u) => format!("{}/{u}", result.label),
        None => result.label.clone(),
    };
    Ok(MetricSeries {
        metric,
        kind: SeriesKind::Tvf,
        scenario,
        points,
    })
}

/// Relative change in percent; `None` when the baseline is zero.
fn pct_change(baseline: f64, variant: f64) -> Option<f64> {
    if baseline == 0.0 {
        (variant == 0.0).then_some(0.0)
    } else {
        Some((variant - baseline) / baseline.abs() * 100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub baseline: f64,
    pub variant: f64,
    /// `(variant - baseline) / |baseline| * 100`; negative means lower.
    pub change_pct: Option<f64>,
}

impl MetricDelta {
    fn new(baseline: f64, variant: f64) -> Self {
        MetricDelta {
            baseline,
            variant,
            change_pct: pct_change(baseline, variant),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDelta {
    pub user: UserId,
    pub rep: MetricDelta,
    pub pb: MetricDelta,
    pub tc: MetricDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSummary {
    pub baseline: String,
    pub variant: String,
    pub common_tasks: usize,
    /// Mean `|DT_variant - DT_baseline|` over common tasks, degrees Celsius.
    pub mean_abs_dt_shift: f64,
    /// Mean `|DT_baseline|` over common tasks, degrees Celsius.
    pub mean_abs_baseline_dt: f64,
    pub mean_dt_disturbance_pct: f64,
    pub population_rep: MetricDelta,
    pub population_pb: MetricDelta,
    pub population_tc: MetricDelta,
    /// One entry per cheating target of the variant.
    pub targets: Vec<UserDelta>,
}

pub fn dt_disturbance(baseline: &SimResult, variant: &SimResult) -> Result<DisturbanceSummary> {
    let base_dt: BTreeMap<(u32, u64), f64> = baseline
        .completed()
        .filter_map(|o| Some(((o.task_id, o.announce_time), o.discovered_truth?)))
        .collect();
    let pairs: Vec<(f64, f64)> = variant
        .completed()
        .filter_map(|o| {
            let b = base_dt.get(&(o.task_id, o.announce_time))?;
            Some((*b, o.discovered_truth?))
        })
        .collect();
    if pairs.is_empty() {
        return Err(CriError::InvalidInput(format!(
            "{} and {} share no completed tasks",
            baseline.label, variant.label
        )));
    }
    let n = pairs.len() as f64;
    let shift = pairs.iter().map(|(b, v)| (v - b).abs()).sum::<f64>() / n;
    let scale = pairs.iter().map(|(b, _)| b.abs()).sum::<f64>() / n;
    let pct = if scale > 0.0 {
        shift / scale * 100.0
    } else {
        0.0
    };

    let targets: BTreeSet<UserId> = variant.config.cheat.targets.iter().copied().collect();
    let targets = targets
        .into_iter()
        .filter_map(|user| {
            let b = baseline.totals.get(&user)?;
            let v = variant.totals.get(&user)?;
            Some(UserDelta {
                user,
                rep: MetricDelta::new(b.final_reputation.value(), v.final_reputation.value()),
                pb: MetricDelta::new(b.payback, v.payback),
                tc: MetricDelta::new(b.tasks as f64, v.tasks as f64),
            })
        })
        .collect();

    Ok(DisturbanceSummary {
        baseline: baseline.label.clone(),
        variant: variant.label.clone(),
        common_tasks: pairs.len(),
        mean_abs_dt_shift: shift,
        mean_abs_baseline_dt: scale,
        mean_dt_disturbance_pct: pct,
        population_rep: MetricDelta::new(baseline.mean_reputation(), variant.mean_reputation()),
        population_pb: MetricDelta::new(baseline.mean_payback(), variant.mean_payback()),
        population_tc: MetricDelta::new(baseline.mean_task_count(), variant.mean_task_count()),
        targets,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    metric: String,
    scenario: String,
    x: f64,
    y: f64,
}

/// Writes point series as CSV with columns `metric,scenario,x,y`.
pub fn write_series_csv(path: impl AsRef<Path>, series: &[MetricSeries]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for s in series {
        for &(x, y) in &s.points {
            writer
                .serialize(SeriesRow {
                    metric: s.metric.code().to_string(),
                    scenario: s.scenario.clone(),
                    x,
                    y,
                })
                .map_err(|e| csv_err(path, e))?;
        }
    }
    writer.flush().map_err(|e| CriError::io(path, e))
}

/// Reads a file written by [`write_series_csv`]; consecutive rows with the
/// same metric and scenario form one series.
pub fn read_series_csv(path: impl AsRef<Path>, kind: SeriesKind) -> Result<Vec<MetricSeries>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out: Vec<MetricSeries> = Vec::new();
    for row in reader.deserialize::<SeriesRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let metric: Metric = row.metric.parse()?;
        match out.last_mut() {
            Some(s) if s.metric == metric && s.scenario == row.scenario => {
                s.points.push((row.x, row.y))
            }
            _ => out.push(MetricSeries {
                metric,
                kind,
                scenario: row.scenario,
                points: vec![(row.x, row.y)],
            }),
        }
    }
    Ok(out)
}

fn csv_err(path: &Path, e: csv::Error) -> CriError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CriError::io(path, source),
        kind => CriError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub fn write_summary(path: impl AsRef<Path>, summaries: &[DisturbanceSummary]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(summaries)?;
    fs::write(path, text).map_err(|e| CriError::io(path, e))
}

/// CDFs of all four metrics plus population TVFs (and per-target TVFs of
/// the variant) for a baseline/variant pair, written under `out_dir`.
pub fn write_report(
    out_dir: impl AsRef<Path>,
    baseline: &SimResult,
    variants: &[SimResult],
) -> Result<Vec<DisturbanceSummary>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| CriError::io(out_dir, e))?;
    let mut cdfs = Vec::new();
    let mut tvfs = Vec::new();
    let mut summaries = Vec::new();
    for result in std::iter::once(baseline).chain(variants) {
        for metric in Metric::ALL {
            if let Ok(series) = metric_cdf(result, metric) {
                cdfs.push(series);
            }
            tvfs.push(tvf(result, metric, None)?);
        }
    }
    for variant in variants {
        for &user in &variant.config.cheat.targets {
            for metric in [Metric::Reputation, Metric::Payback, Metric::TaskCount] {
                tvfs.push(tvf(baseline, metric, Some(user))?);
                tvfs.push(tvf(variant, metric, Some(user))?);
            }
        }
        summaries.push(dt_disturbance(baseline, variant)?);
    }
    write_series_csv(out_dir.join("cdf.csv"), &cdfs)?;
    write_series_csv(out_dir.join("tvf.csv"), &tvfs)?;
    write_summary(out_dir.join("summary.json"), &summaries)?;
    Ok(summaries)
}
