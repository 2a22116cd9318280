//! Shared domain types plus the two primitive formulas everything else
//! builds on: the reputation update and the quality-risk coefficient.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CriError, Result};

/// Identity of a registered user. Stable for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

impl From<u32> for UserId {
    fn from(id: u32) -> Self {
        UserId(id)
    }
}

/// Clamp bounds applied to every stored reputation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReputationBounds {
    pub min: f64,
    pub max: f64,
}

impl ReputationBounds {
    pub const DEFAULT: ReputationBounds = ReputationBounds {
        min: 0.01,
        max: 0.99,
    };
}

impl Default for ReputationBounds {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// A user's credibility, always inside its clamp bounds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Reputation(f64);

impl Reputation {
    /// Clamps `r` into the default bounds `[0.01, 0.99]`.
    pub fn new(r: f64) -> Result<Self> {
        clamp_reputation(r, ReputationBounds::DEFAULT)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `(1 - r) / r`, the penalty coefficient on contribution.
    pub fn quality_risk(self) -> f64 {
        quality_risk(self)
    }
}

impl fmt::Display for Reputation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.0)
    }
}

/// Normalized, non-negative share of a task.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Contribution(f64);

impl Contribution {
    pub const ZERO: Contribution = Contribution(0.0);

    pub fn new(c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(CriError::InvalidValue(format!(
                "contribution must be finite and non-negative, got {c}"
            )));
        }
        Ok(Contribution(c))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Payback for one employee in one task.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Payback {
    /// In units of the task's total reward.
    pub raw: f64,
    /// `raw / R`.
    pub normalized: f64,
}

impl Payback {
    pub const ZERO: Payback = Payback {
        raw: 0.0,
        normalized: 0.0,
    };

    pub fn from_raw(raw: f64, total_reward: f64) -> Self {
        Payback {
            raw,
            normalized: raw / total_reward,
        }
    }
}

/// Which contribution sum divides the reward share when an employee
/// under-delivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortfallDenominator {
    /// Sum of expected contributions (the scheme as published).
    #[default]
    Expected,
    /// Sum of actual contributions; sensitivity experiments only.
    Actual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IncentiveParams {
    /// Weight kept on the previous reputation.
    pub alpha: f64,
    /// Initial reputation of every registered user.
    pub r0: f64,
    /// Truth-discovery convergence threshold, in observation units.
    pub epsilon: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub max_iterations: usize,
    pub shortfall_denominator: ShortfallDenominator,
}

impl Default for IncentiveParams {
    fn default() -> Self {
        IncentiveParams {
            alpha: 0.5,
            r0: 0.5,
            epsilon: 0.1,
            r_min: ReputationBounds::DEFAULT.min,
            r_max: ReputationBounds::DEFAULT.max,
            max_iterations: 100,
            shortfall_denominator: ShortfallDenominator::Expected,
        }
    }
}

impl IncentiveParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CriError::Config(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(0.0 < self.r_min && self.r_min < self.r0 && self.r0 < self.r_max && self.r_max < 1.0) {
            return bad(format!(
                "need 0 < r_min < r0 < r_max < 1, got r_min={} r0={} r_max={}",
                self.r_min, self.r0, self.r_max
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        Ok(())
    }

    pub fn bounds(&self) -> ReputationBounds {
        ReputationBounds {
            min: self.r_min,
            max: self.r_max,
        }
    }

    pub fn initial_reputation(&self) -> Reputation {
        Reputation(self.r0.clamp(self.r_min, self.r_max))
    }
}

pub fn clamp_reputation(r: f64, bounds: ReputationBounds) -> Result<Reputation> {
    if !r.is_finite() {
        return Err(CriError::InvalidValue(format!(
            "reputation {r} is not finite"
        )));
    }
    Ok(Reputation(r.clamp(bounds.min, bounds.max)))
}

pub fn quality_risk(r: Reputation) -> f64 {
    (1.0 - r.0) / r.0
}

/// Reputation after one task: `alpha * r_prev + (1 - alpha) * min(c / c_expected, 1)`,
/// clamped. Over-contribution earns no more than meeting expectations.
pub fn update_reputation(
    r_prev: Reputation,
    c: Contribution,
    c_expected: Contribution,
    alpha: f64,
    bounds: ReputationBounds,
) -> Result<Reputation> {
    if c_expected.0 <= 0.0 {
        return Err(CriError::InvalidValue(
            "expected contribution must be positive to update reputation".into(),
        ));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CriError::InvalidValue(format!(
            "alpha {alpha} outside [0, 1]"
        )));
    }
    let ratio = if c.0 >= c_expected.0 {
        1.0
    } else {
        c.0 / c_expected.0
    };
    clamp_reputation(alpha * r_prev.0 + (1.0 - alpha) * ratio, bounds)
}
