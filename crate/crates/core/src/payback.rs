//! Settlement: pay each employee against its expected contribution and
//! move its reputation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CriError, Result};
use crate::reputation::{
    update_reputation, Contribution, IncentiveParams, Payback, Reputation, ShortfallDenominator,
    UserId,
};

/// Tolerance on "contributions sum to one" preconditions.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub paybacks: BTreeMap<UserId, Payback>,
    pub new_reputations: BTreeMap<UserId, Reputation>,
    pub total_reward: f64,
}

/// `R = sum((1 - r_j) / r_j) / (|E| - 1)`.
pub fn total_reward(reputations: &[Reputation]) -> Result<f64> {
    if reputations.len() < 2 {
        return Err(CriError::InvalidInput(format!(
            "total reward needs at least 2 employees, got {}",
            reputations.len()
        )));
    }
    let risk: f64 = reputations.iter().map(|r| r.quality_risk()).sum();
    Ok(risk / (reputations.len() - 1) as f64)
}

pub fn settle(
    actual: &BTreeMap<UserId, Contribution>,
    expected: &BTreeMap<UserId, Contribution>,
    reputations: &BTreeMap<UserId, Reputation>,
    total_reward: f64,
    params: &IncentiveParams,
) -> Result<Settlement> {
    if !actual.keys().eq(expected.keys()) || !actual.keys().eq(reputations.keys()) {
        return Err(CriError::InvalidInput(
            "actual, expected and reputation maps must share one key set".into(),
        ));
    }
    if !(total_reward > 0.0 && total_reward.is_finite()) {
        return Err(CriError::InvalidInput(format!(
            "total reward must be positive, got {total_reward}"
        )));
    }
    let expected_sum: f64 = expected.values().map(|c| c.value()).sum();
    let actual_sum: f64 = actual.values().map(|c| c.value()).sum();
    for (name, sum) in [("expected", expected_sum), ("actual", actual_sum)] {
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(CriError::InvalidInput(format!(
                "{name} contributions sum to {sum}, not 1"
            )));
        }
    }
    let shortfall_sum = match params.shortfall_denominator {
        ShortfallDenominator::Expected => expected_sum,
        ShortfallDenominator::Actual => actual_sum,
    };

    let mut paybacks = BTreeMap::new();
    let mut new_reputations = BTreeMap::new();
    for (user, &c) in actual {
        let c_exp = expected[user];
        let r = reputations[user];
        let risk = r.quality_risk();
        let raw = if c.value() >= c_exp.value() {
            c_exp.value() / expected_sum * total_reward - risk * c_exp.value()
        } else {
            c.value() / shortfall_sum * total_reward - risk * c.value()
        };
        paybacks.insert(*user, Payback::from_raw(raw, total_reward));
        new_reputations.insert(
            *user,
            update_reputation(r, c, c_exp, params.alpha, params.bounds())?,
        );
    }
    Ok(Settlement {
        paybacks,
        new_reputations,
        total_reward,
    })
}
