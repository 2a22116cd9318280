//! Multi-scenario experiments: a baseline plus cheating variants over one
//! shared trace. Scenarios are independent and run on the rayon pool when
//! the `parallel` feature is on.

use crate::adversary::{CheatPolicy, TargetSelector};
use crate::engine::{resolve_targets, run_scenario_on, ScenarioConfig, SimResult};
use crate::error::{CriError, Result};
use crate::parallel::{par_map, Execution};
use crate::report::{dt_disturbance, DisturbanceSummary};
use crate::trace::TraceSet;

#[derive(Debug, Clone)]
pub struct Sweep {
    pub baseline: SimResult,
    pub variants: Vec<SimResult>,
    pub summaries: Vec<DisturbanceSummary>,
}

/// Runs every config on `trace`; output order follows `configs`.
pub fn run_batch(
    configs: &[ScenarioConfig],
    trace: &TraceSet,
    exec: Execution,
) -> Vec<Result<SimResult>> {
    par_map(configs, exec, |c| run_scenario_on(c, trace))
}

pub fn intensity_label(p: f64) -> String {
    format!("general-{:.0}pct", p * 100.0)
}

pub fn targeted_label(selector: TargetSelector, p: f64) -> String {
    format!("{}-{:.0}pct", selector.label(), p * 100.0)
}

/// Baseline plus one general-intensity variant per probability.
pub fn intensity_sweep(
    base: &ScenarioConfig,
    intensities: &[f64],
    exec: Execution,
) -> Result<Sweep> {
    let trace = base.load_trace()?;
    let mut configs = vec![base.baseline()];
    configs.extend(
        intensities
            .iter()
            .map(|&p| base.with_cheat(intensity_label(p), CheatPolicy::general(p))),
    );
    finish(run_batch(&configs, &trace, exec))
}

/// Baseline plus one targeted variant per (selector, probability) pair;
/// targets come from the shared baseline.
pub fn targeted_sweep(
    base: &ScenarioConfig,
    selectors: &[TargetSelector],
    probabilities: &[f64],
    exec: Execution,
) -> Result<Sweep> {
    let trace = base.load_trace()?;
    let baseline = run_scenario_on(&base.baseline(), &trace)?;
    let mut configs = Vec::new();
    for &selector in selectors {
        for &p in probabilities {
            let config = base.with_cheat(
                targeted_label(selector, p),
                CheatPolicy::targeted(selector, p),
            );
            configs.push(resolve_targets(&config, &baseline)?);
        }
    }
    let variants = run_batch(&configs, &trace, exec)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    summarize(baseline, variants)
}

fn finish(results: Vec<Result<SimResult>>) -> Result<Sweep> {
    let mut results = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter();
    let baseline = results
        .next()
        .ok_or_else(|| CriError::InvalidInput("sweep produced no baseline".into()))?;
    summarize(baseline, results.collect())
}

fn summarize(baseline: SimResult, variants: Vec<SimResult>) -> Result<Sweep> {
    let summaries = variants
        .iter()
        .map(|v| dt_disturbance(&baseline, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep {
        baseline,
        variants,
        summaries,
    })
}
