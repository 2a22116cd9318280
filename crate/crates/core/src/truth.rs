//! Reputation-weighted truth discovery.
//!
//! Alternates between scoring every report by how far it sits from the
//! current truth estimate (scaled by the reporter's reputation) and
//! re-estimating the truth as the score-weighted mean, until the estimate
//! moves by less than `epsilon`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CriError, Result};
use crate::reputation::{Contribution, Reputation, UserId};

/// Squared distances are floored at this multiple of the variance so an
/// exact hit gets a large finite score.
pub const DISTANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub user: UserId,
    /// Degrees Celsius.
    pub value: f64,
}

impl Observation {
    pub fn new(user: impl Into<UserId>, value: f64) -> Self {
        Observation {
            user: user.into(),
            value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthInit {
    /// Unweighted mean of the observations.
    #[default]
    Mean,
    /// Uniform draw in `[min, max]` of the observations.
    SeededUniform(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Ten,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub init: TruthInit,
    pub log_base: LogBase,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            epsilon: 0.1,
            max_iterations: 100,
            init: TruthInit::Mean,
            log_base: LogBase::Natural,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthResult {
    pub truth: f64,
    pub contributions: BTreeMap<UserId, Contribution>,
    pub iterations: usize,
    pub converged: bool,
}

/// State handed to an observer after each iteration.
#[derive(Debug)]
pub struct Iteration<'a> {
    pub index: usize,
    /// Scores before normalization, in user-id order.
    pub weights: &'a [f64],
    pub previous_truth: f64,
    pub truth: f64,
}

/// Population standard deviation (divides by N).
pub fn sample_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

pub fn discover(
    observations: &[Observation],
    reputations: &BTreeMap<UserId, Reputation>,
    config: &DiscoveryConfig,
) -> Result<TruthResult> {
    discover_observed(observations, reputations, config, |_| {})
}

/// Like [`discover`], calling `observer` after every iteration.
pub fn discover_observed<F>(
    observations: &[Observation],
    reputations: &BTreeMap<UserId, Reputation>,
    config: &DiscoveryConfig,
    mut observer: F,
) -> Result<TruthResult>
where
    F: FnMut(&Iteration<'_>),
{
    if observations.len() < 2 {
        return Err(CriError::InvalidInput(format!(
            "truth discovery needs at least 2 observations, got {}",
            observations.len()
        )));
    }
    if config.epsilon.is_nan() || config.epsilon <= 0.0 {
        return Err(CriError::InvalidInput(format!(
            "epsilon must be positive, got {}",
            config.epsilon
        )));
    }

    // Fixed evaluation order makes the result independent of input order.
    let mut sorted = observations.to_vec();
    sorted.sort_by_key(|o| o.user);
    if sorted.windows(2).any(|w| w[0].user == w[1].user) {
        return Err(CriError::InvalidInput(
            "duplicate observation for one user".into(),
        ));
    }
    let mut values = Vec::with_capacity(sorted.len());
    let mut reps = Vec::with_capacity(sorted.len());
    for obs in &sorted {
        if !obs.value.is_finite() {
            return Err(CriError::InvalidInput(format!(
                "observation from {} is not finite",
                obs.user
            )));
        }
        let r = reputations
            .get(&obs.user)
            .ok_or_else(|| CriError::InvalidInput(format!("no reputation for {}", obs.user)))?;
        values.push(obs.value);
        reps.push(r.value());
    }

    let std = sample_std(&values);
    if std == 0.0 {
        let share = Contribution::new(1.0 / sorted.len() as f64)?;
        return Ok(TruthResult {
            truth: values[0],
            contributions: sorted.iter().map(|o| (o.user, share)).collect(),
            iterations: 0,
            converged: true,
        });
    }

    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut truth = match config.init {
        TruthInit::Mean => values.iter().sum::<f64>() / values.len() as f64,
        TruthInit::SeededUniform(seed) => ChaCha8Rng::seed_from_u64(seed).random_range(lo..=hi),
    };
    let log_scale = match config.log_base {
        LogBase::Natural => 1.0,
        LogBase::Ten => std::f64::consts::LN_10.recip(),
    };
    let floor = DISTANCE_FLOOR * std * std;

    let mut terms = vec![0.0; values.len()];
    let mut weights = vec![0.0; values.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        for ((term, &v), &r) in terms.iter_mut().zip(&values).zip(&reps) {
            *term = (v - truth).powi(2).max(floor) / (std * r);
        }
        let total: f64 = terms.iter().sum();
        for (w, &term) in weights.iter_mut().zip(&terms) {
            // log(total / term) computed as log1p(others / term)
            let others = (total - term).max(0.0);
            *w = (others / term).ln_1p() * log_scale;
        }
        let weight_sum: f64 = weights.iter().sum();
        let previous = truth;
        truth = weights.iter().zip(&values).map(|(w, v)| w * v).sum::<f64>() / weight_sum;
        observer(&Iteration {
            index: iterations,
            weights: &weights,
            previous_truth: previous,
            truth,
        });
        if (truth - previous).abs() < config.epsilon {
            converged = true;
            break;
        }
    }

    let weight_sum: f64 = weights.iter().sum();
    let contributions = sorted
        .iter()
        .zip(&weights)
        .map(|(o, w)| Ok((o.user, Contribution::new(w / weight_sum)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let result = TruthResult {
        truth,
        contributions,
        iterations,
        converged,
    };
    if converged {
        Ok(result)
    } else {
        Err(CriError::NonConvergence {
            last: Box::new(result),
        })
    }
}
