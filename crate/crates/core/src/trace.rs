//! Per-user time-stamped sensing samples, loaded from CSV or synthesized.
//!
//! The CSV format is one sample per row, `user_id,timestamp_s,temp_c`, with
//! an optional header line.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CriError, Result};
use crate::parallel::{par_map, Execution};
use crate::reputation::UserId;
use crate::rng::{substream, Purpose};

pub const DAY_S: u64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub user: UserId,
    pub timestamp: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    horizon: u64,
    /// `(timestamp, value)` sorted by timestamp.
    samples: BTreeMap<UserId, Vec<(u64, f64)>>,
}

impl TraceSet {
    pub fn from_samples(
        samples: impl IntoIterator<Item = TraceSample>,
        horizon: u64,
    ) -> Result<Self> {
        let mut per_user: BTreeMap<UserId, Vec<(u64, f64)>> = BTreeMap::new();
        for s in samples {
            if !s.value.is_finite() {
                return Err(CriError::InvalidInput(format!(
                    "sample of {} at {} is not finite",
                    s.user, s.timestamp
                )));
            }
            per_user
                .entry(s.user)
                .or_default()
                .push((s.timestamp, s.value));
        }
        Self::from_user_map(per_user, horizon)
    }

    fn from_user_map(mut samples: BTreeMap<UserId, Vec<(u64, f64)>>, horizon: u64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(CriError::InvalidInput(format!(
                "a trace needs at least 2 users, got {}",
                samples.len()
            )));
        }
        for series in samples.values_mut() {
            series.sort_by_key(|&(t, _)| t);
        }
        Ok(TraceSet { horizon, samples })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn user_count(&self) -> usize {
        self.samples.len()
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.samples.keys().copied()
    }

    pub fn samples_of(&self, user: UserId) -> Option<&[(u64, f64)]> {
        self.samples.get(&user).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = TraceSample> + '_ {
        self.samples.iter().flat_map(|(&user, series)| {
            series.iter().map(move |&(timestamp, value)| TraceSample {
                user,
                timestamp,
                value,
            })
        })
    }

    pub fn len(&self) -> usize {
        self.samples.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<TraceSet> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let mut samples = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        let parse_err = |message: String| CriError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.len() != 3 {
            return Err(parse_err(format!(
                "expected 3 fields, found {}",
                record.len()
            )));
        }
        let user = match record[0].parse::<u32>() {
            Ok(u) => UserId(u),
            Err(_) if idx == 0 => continue, // header
            Err(_) => return Err(parse_err(format!("bad user id {:?}", &record[0]))),
        };
        let timestamp = record[1]
            .parse::<u64>()
            .map_err(|_| parse_err(format!("bad timestamp {:?}", &record[1])))?;
        let value = record[2]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_err(format!("bad temperature {:?}", &record[2])))?;
        samples.push(TraceSample {
            user,
            timestamp,
            value,
        });
    }
    if samples.is_empty() {
        return Err(CriError::InvalidInput(format!(
            "{} holds no samples",
            path.display()
        )));
    }
    let horizon = samples
        .iter()
        .map(|s| s.timestamp + 1)
        .max()
        .unwrap_or(0)
        .max(DAY_S);
    TraceSet::from_samples(samples, horizon)
}

fn csv_error(path: &Path, e: csv::Error) -> CriError {
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

pub fn write_trace(trace: &TraceSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    writer
        .write_record(["user_id", "timestamp_s", "temp_c"])
        .map_err(|e| csv_error(path, e))?;
    for s in trace.iter() {
        writer
            .write_record([
                s.user.0.to_string(),
                s.timestamp.to_string(),
                s.value.to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| CriError::io(path, e))
}

/// Parameters of the synthetic diurnal trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub users: u32,
    /// Mean gap between a user's consecutive samples, seconds.
    pub mean_interval: u64,
    /// Daily mean temperature.
    pub offset: f64,
    pub amplitude: f64,
    /// Time at which the sinusoid crosses its mean going up, seconds.
    pub phase: u64,
    pub noise_sd: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            users: 366,
            mean_interval: 300,
            offset: 13.0,
            amplitude: 11.0,
            // peak at 14:00
            phase: 28_800,
            noise_sd: 0.5,
            low: 2.0,
            high: 24.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.users < 2 {
            return Err(CriError::Config(format!(
                "need at least 2 users, got {}",
                self.users
            )));
        }
        if self.mean_interval == 0 {
            return Err(CriError::Config("mean_interval must be positive".into()));
        }
        if !(self.noise_sd >= 0.0 && self.low < self.high) {
            return Err(CriError::Config(
                "noise_sd must be >= 0 and low < high".into(),
            ));
        }
        Ok(())
    }

    /// Noise-free temperature at time `t`, clipped to `[low, high]`.
    pub fn diurnal(&self, t: f64) -> f64 {
        let angle = std::f64::consts::TAU * (t - self.phase as f64) / DAY_S as f64;
        (self.offset + self.amplitude * angle.sin()).clamp(self.low, self.high)
    }
}

pub fn synth_trace(spec: &SynthSpec, horizon: u64, seed: u64) -> Result<TraceSet> {
    synth_trace_with(spec, horizon, seed, Execution::default())
}

pub fn synth_trace_with(
    spec: &SynthSpec,
    horizon: u64,
    seed: u64,
    exec: Execution,
) -> Result<TraceSet> {
    spec.validate()?;
    let gaps = Exp::new(1.0 / spec.mean_interval as f64)
        .map_err(|e| CriError::Config(format!("bad mean interval: {e}")))?;
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|e| CriError::Config(format!("bad noise level: {e}")))?;

    let users: Vec<u32> = (0..spec.users).collect();
    let series = par_map(&users, exec, |&user| {
        let mut times = substream(seed, Purpose::TraceTimes, user as u64, 0);
        let mut values = substream(seed, Purpose::TraceValues, user as u64, 0);
        let mut out = Vec::new();
        // random phase so users do not all start at t = 0
        let mut t = times.random::<f64>() * spec.mean_interval as f64;
        while t < horizon as f64 {
            let ts = t.floor() as u64;
            let v =
                (spec.diurnal(ts as f64) + noise.sample(&mut values)).clamp(spec.low, spec.high);
            out.push((ts, v));
            t += gaps.sample(&mut times);
        }
        (UserId(user), out)
    });
    TraceSet::from_user_map(series.into_iter().collect(), horizon)
}

/// Value of the user's sample nearest to `t` within `[t - half_window,
/// t + half_window]`; the earlier sample wins an equidistant tie.
pub fn query_window(
    trace: &TraceSet,
    user: UserId,
    t: u64,
    half_window: u64,
) -> Result<Option<f64>> {
    let series = trace
        .samples_of(user)
        .ok_or_else(|| CriError::InvalidInput(format!("unknown user {user}")))?;
    let lo = t.saturating_sub(half_window);
    let hi = t.saturating_add(half_window);
    let start = series.partition_point(|&(ts, _)| ts < lo);
    let mut best: Option<(u64, f64)> = None;
    for &(ts, v) in series[start..].iter().take_while(|&&(ts, _)| ts <= hi) {
        let dist = ts.abs_diff(t);
        if best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, v));
        }
    }
    Ok(best.map(|(_, v)| v))
}
