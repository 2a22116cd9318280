//! Task lifecycle driver: announce, collect applications, recruit, gather
//! (possibly cheated) reports, discover the truth, settle, and carry the
//! reputation state into the next task.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::adversary::{decide_cheat, make_report, select_targets, CheatPolicy};
use crate::error::{CriError, Result};
use crate::payback::settle;
use crate::recruitment::{recruit, Application, RewardPolicy};
use crate::reputation::{Contribution, IncentiveParams, Payback, Reputation, UserId};
use crate::rng::{substream, Purpose};
use crate::trace::{load_trace, query_window, synth_trace, SynthSpec, TraceSet, DAY_S};
use crate::truth::{discover, DiscoveryConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: u32,
    pub announce_time: u64,
    pub half_window: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    /// One task every `interval` seconds starting at 0.
    Fixed { interval: u64 },
    /// Poisson arrivals with `rate` tasks per second.
    Poisson { rate: f64 },
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Fixed { interval: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceSource {
    Synth(SynthSpec),
    File { path: PathBuf },
}

impl Default for TraceSource {
    fn default() -> Self {
        TraceSource::Synth(SynthSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub label: String,
    pub seed: u64,
    /// Simulated seconds.
    pub horizon: u64,
    /// Users apply if they hold a sample within this many seconds of the
    /// announcement.
    pub half_window: u64,
    pub params: IncentiveParams,
    pub trace: TraceSource,
    pub schedule: ScheduleSpec,
    pub cheat: CheatPolicy,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            label: "baseline".into(),
            seed: 1,
            horizon: DAY_S,
            half_window: 60,
            params: IncentiveParams::default(),
            trace: TraceSource::default(),
            schedule: ScheduleSpec::default(),
            cheat: CheatPolicy::honest(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.cheat.validate()?;
        if let TraceSource::Synth(spec) = &self.trace {
            spec.validate()?;
        }
        match self.schedule {
            ScheduleSpec::Fixed { interval: 0 } => Err(CriError::Config(
                "schedule interval must be positive".into(),
            )),
            ScheduleSpec::Poisson { rate } if !(rate > 0.0 && rate.is_finite()) => Err(
                CriError::Config(format!("schedule rate must be positive, got {rate}")),
            ),
            _ => Ok(()),
        }
    }

    /// Reads a TOML scenario file; a relative trace path is resolved
    /// against the file's directory.
    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CriError::io(path, e))?;
        let mut config = Self::from_toml_str(&text)?;
        if let TraceSource::File { path: trace } = &mut config.trace {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        Ok(config)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CriError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CriError::Config(e.to_string()))
    }

    /// Same run with nobody cheating.
    pub fn baseline(&self) -> Self {
        ScenarioConfig {
            label: "baseline".into(),
            cheat: CheatPolicy::honest(),
            ..self.clone()
        }
    }

    pub fn with_cheat(&self, label: impl Into<String>, cheat: CheatPolicy) -> Self {
        ScenarioConfig {
            label: label.into(),
            cheat,
            ..self.clone()
        }
    }

    pub fn load_trace(&self) -> Result<TraceSet> {
        match &self.trace {
            TraceSource::Synth(spec) => synth_trace(spec, self.horizon, self.seed),
            TraceSource::File { path } => load_trace(path),
        }
    }

    fn discovery(&self) -> DiscoveryConfig {
        DiscoveryConfig {
            epsilon: self.params.epsilon,
            max_iterations: self.params.max_iterations,
            ..DiscoveryConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    InsufficientApplicants,
    NoConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task_id: u32,
    pub announce_time: u64,
    pub applicants: usize,
    pub skipped: Option<SkipReason>,
    pub discovered_truth: Option<f64>,
    pub total_reward: Option<f64>,
    pub iterations: usize,
    /// Rank order from recruitment.
    pub employees: Vec<UserId>,
    pub cheaters: Vec<UserId>,
    pub reports: BTreeMap<UserId, f64>,
    pub contributions: BTreeMap<UserId, Contribution>,
    pub expected_contributions: BTreeMap<UserId, Contribution>,
    pub paybacks: BTreeMap<UserId, Payback>,
    pub reputations_before: BTreeMap<UserId, Reputation>,
    pub reputations_after: BTreeMap<UserId, Reputation>,
}

impl TaskOutcome {
    fn skipped(task: &TaskSpec, applicants: usize, reason: SkipReason) -> Self {
        TaskOutcome {
            task_id: task.task_id,
            announce_time: task.announce_time,
            applicants,
            skipped: Some(reason),
            discovered_truth: None,
            total_reward: None,
            iterations: 0,
            employees: Vec::new(),
            cheaters: Vec::new(),
            reports: BTreeMap::new(),
            contributions: BTreeMap::new(),
            expected_contributions: BTreeMap::new(),
            paybacks: BTreeMap::new(),
            reputations_before: BTreeMap::new(),
            reputations_after: BTreeMap::new(),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserTotals {
    pub final_reputation: Reputation,
    /// Sum of per-task normalized paybacks.
    pub payback: f64,
    pub raw_payback: f64,
    /// Tasks the user was recruited for and settled.
    pub tasks: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub label: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub outcomes: Vec<TaskOutcome>,
    pub totals: BTreeMap<UserId, UserTotals>,
    pub skipped_tasks: usize,
}

impl SimResult {
    pub fn final_reputation(&self, user: UserId) -> Option<Reputation> {
        self.totals.get(&user).map(|t| t.final_reputation)
    }

    pub fn completed(&self) -> impl Iterator<Item = &TaskOutcome> {
        self.outcomes.iter().filter(|o| !o.is_skipped())
    }

    pub fn mean_reputation(&self) -> f64 {
        mean(self.totals.values().map(|t| t.final_reputation.value()))
    }

    pub fn mean_payback(&self) -> f64 {
        mean(self.totals.values().map(|t| t.payback))
    }

    pub fn mean_task_count(&self) -> f64 {
        mean(self.totals.values().map(|t| t.tasks as f64))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| CriError::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CriError::io(path, e))?;
        Self::from_json(&text)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn build_schedule(
    spec: &ScheduleSpec,
    horizon: u64,
    half_window: u64,
    seed: u64,
) -> Result<Vec<TaskSpec>> {
    let times: Vec<u64> = match *spec {
        ScheduleSpec::Fixed { interval } => {
            if interval == 0 {
                return Err(CriError::InvalidInput(
                    "schedule interval must be positive".into(),
                ));
            }
            (0..horizon).step_by(interval as usize).collect()
        }
        ScheduleSpec::Poisson { rate } => {
            let gaps = Exp::new(rate)
                .ok()
                .filter(|_| rate > 0.0 && rate.is_finite())
                .ok_or_else(|| {
                    CriError::InvalidInput(format!("schedule rate must be positive, got {rate}"))
                })?;
            let mut rng = substream(seed, Purpose::Schedule, 0, 0);
            let mut times = Vec::new();
            let mut t = gaps.sample(&mut rng);
            while t < horizon as f64 {
                let ts = t.floor() as u64;
                if times.last().is_none_or(|&last| ts > last) {
                    times.push(ts);
                }
                t += gaps.sample(&mut rng);
            }
            times
        }
    };
    Ok(times
        .into_iter()
        .enumerate()
        .map(|(i, announce_time)| TaskSpec {
            task_id: i as u32,
            announce_time,
            half_window,
        })
        .collect())
}

/// Runs one task against `state`. Only recruited employees of a settled
/// task have their reputation rewritten.
pub fn run_task(
    task: &TaskSpec,
    state: &mut BTreeMap<UserId, Reputation>,
    trace: &TraceSet,
    policy: &CheatPolicy,
    params: &IncentiveParams,
    discovery: &DiscoveryConfig,
    seed: u64,
) -> Result<TaskOutcome> {
    let mut applications = Vec::new();
    let mut held = BTreeMap::new();
    for user in trace.users() {
        if let Some(value) = query_window(trace, user, task.announce_time, task.half_window)? {
            let reputation = *state
                .get(&user)
                .ok_or_else(|| CriError::InvalidInput(format!("no reputation state for {user}")))?;
            applications.push(Application { user, reputation });
            held.insert(user, value);
        }
    }
    let applicants = applications.len();

    let recruitment = match recruit(&applications, RewardPolicy::Normalized) {
        Ok(r) => r,
        Err(CriError::TaskAborted(_)) => {
            return Ok(TaskOutcome::skipped(
                task,
                applicants,
                SkipReason::InsufficientApplicants,
            ))
        }
        Err(e) => return Err(e),
    };

    let mut reports = BTreeMap::new();
    let mut cheaters = Vec::new();
    let mut observations = Vec::with_capacity(recruitment.employees.len());
    for &user in &recruitment.employees {
        let task_key = task.task_id as u64;
        let cheat = decide_cheat(
            policy,
            user,
            &mut substream(seed, Purpose::CheatDecision, user.0 as u64, task_key),
        );
        let obs = make_report(
            user,
            held[&user],
            cheat,
            policy,
            &mut substream(seed, Purpose::CheatValue, user.0 as u64, task_key),
        );
        if cheat {
            cheaters.push(user);
        }
        reports.insert(user, obs.value);
        observations.push(obs);
    }
    let before: BTreeMap<UserId, Reputation> = recruitment
        .employees
        .iter()
        .map(|u| (*u, state[u]))
        .collect();

    let truth = match discover(&observations, &before, discovery) {
        Ok(t) => t,
        Err(CriError::NonConvergence { .. }) => {
            return Ok(TaskOutcome::skipped(
                task,
                applicants,
                SkipReason::NoConvergence,
            ))
        }
        Err(e) => return Err(e),
    };

    let settlement = settle(
        &truth.contributions,
        &recruitment.expected_contribution,
        &before,
        recruitment.total_reward,
        params,
    )?;
    for (user, r) in &settlement.new_reputations {
        state.insert(*user, *r);
    }

    Ok(TaskOutcome {
        task_id: task.task_id,
        announce_time: task.announce_time,
        applicants,
        skipped: None,
        discovered_truth: Some(truth.truth),
        total_reward: Some(recruitment.total_reward),
        iterations: truth.iterations,
        employees: recruitment.employees,
        cheaters,
        reports,
        contributions: truth.contributions,
        expected_contributions: recruitment.expected_contribution,
        paybacks: settlement.paybacks,
        reputations_before: before,
        reputations_after: settlement.new_reputations,
    })
}

/// Runs a full scenario. A targeted policy without explicit targets first
/// runs the honest baseline to pick them.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimResult> {
    config.validate()?;
    let trace = config.load_trace()?;
    run_scenario_on(config, &trace)
}

pub fn run_scenario_on(config: &ScenarioConfig, trace: &TraceSet) -> Result<SimResult> {
    config.validate()?;
    if config.cheat.needs_targets() {
        let baseline = simulate(&config.baseline(), trace)?;
        let resolved = resolve_targets(config, &baseline)?;
        return simulate(&resolved, trace);
    }
    simulate(config, trace)
}

/// Copy of `config` whose target set is picked from `baseline`.
pub fn resolve_targets(config: &ScenarioConfig, baseline: &SimResult) -> Result<ScenarioConfig> {
    let mut resolved = config.clone();
    if resolved.cheat.needs_targets() {
        resolved.cheat.targets =
            select_targets(config.cheat.selector, config.cheat.target_count, baseline)?
                .into_iter()
                .collect();
    }
    Ok(resolved)
}

fn simulate(config: &ScenarioConfig, trace: &TraceSet) -> Result<SimResult> {
    let schedule = build_schedule(
        &config.schedule,
        config.horizon,
        config.half_window,
        config.seed,
    )?;
    let discovery = config.discovery();
    let r0 = config.params.initial_reputation();
    let mut state: BTreeMap<UserId, Reputation> = trace.users().map(|u| (u, r0)).collect();
    let mut totals: BTreeMap<UserId, UserTotals> = trace
        .users()
        .map(|u| {
            (
                u,
                UserTotals {
                    final_reputation: r0,
                    payback: 0.0,
                    raw_payback: 0.0,
                    tasks: 0,
                },
            )
        })
        .collect();

    let mut outcomes = Vec::with_capacity(schedule.len());
    for task in &schedule {
        let outcome = run_task(
            task,
            &mut state,
            trace,
            &config.cheat,
            &config.params,
            &discovery,
            config.seed,
        )?;
        for (user, pb) in &outcome.paybacks {
            let t = totals.get_mut(user).expect("employee is a trace user");
            t.payback += pb.normalized;
            t.raw_payback += pb.raw;
            t.tasks += 1;
        }
        outcomes.push(outcome);
    }
    for (user, t) in totals.iter_mut() {
        t.final_reputation = state[user];
    }
    let skipped_tasks = outcomes.iter().filter(|o| o.is_skipped()).count();
    Ok(SimResult {
        label: config.label.clone(),
        seed: config.seed,
        config: config.clone(),
        outcomes,
        totals,
        skipped_tasks,
    })
}
