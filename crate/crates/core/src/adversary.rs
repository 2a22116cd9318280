//! Honest and cheating report generation.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::SimResult;
use crate::error::{CriError, Result};
use crate::reputation::UserId;
use crate::truth::Observation;

/// Lower end of the plausible temperature range, degrees Celsius.
pub const CHEAT_LOW: f64 = 2.0;
/// Upper end of the plausible temperature range, degrees Celsius.
pub const CHEAT_HIGH: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheatKind {
    #[default]
    Honest,
    /// Every user cheats with `probability` on every task.
    GeneralIntensity,
    /// Only the target users cheat, with `probability` per task.
    Targeted,
}

/// Baseline metric used to pick targeted cheaters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSelector {
    #[default]
    None,
    /// Highest final reputation.
    TopR,
    /// Largest total normalized payback.
    TopP,
    /// Most tasks accomplished.
    TopC,
}

impl TargetSelector {
    pub fn label(self) -> &'static str {
        match self {
            TargetSelector::None => "none",
            TargetSelector::TopR => "top_r",
            TargetSelector::TopP => "top_p",
            TargetSelector::TopC => "top_c",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheatPolicy {
    pub kind: CheatKind,
    pub probability: f64,
    pub cheat_low: f64,
    pub cheat_high: f64,
    pub selector: TargetSelector,
    pub target_count: usize,
    /// Explicit or resolved target set; filled from the baseline when empty.
    pub targets: Vec<UserId>,
}

impl Default for CheatPolicy {
    fn default() -> Self {
        CheatPolicy {
            kind: CheatKind::Honest,
            probability: 0.0,
            cheat_low: CHEAT_LOW,
            cheat_high: CHEAT_HIGH,
            selector: TargetSelector::None,
            target_count: 1,
            targets: Vec::new(),
        }
    }
}

impl CheatPolicy {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn general(probability: f64) -> Self {
        CheatPolicy {
            kind: CheatKind::GeneralIntensity,
            probability,
            ..Self::default()
        }
    }

    pub fn targeted(selector: TargetSelector, probability: f64) -> Self {
        CheatPolicy {
            kind: CheatKind::Targeted,
            probability,
            selector,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(CriError::Config(format!(
                "cheat probability must lie in [0, 1], got {}",
                self.probability
            )));
        }
        if !(self.cheat_low < self.cheat_high
            && self.cheat_low.is_finite()
            && self.cheat_high.is_finite())
        {
            return Err(CriError::Config(format!(
                "cheat range [{}, {}] is empty",
                self.cheat_low, self.cheat_high
            )));
        }
        if self.kind == CheatKind::Targeted
            && self.targets.is_empty()
            && (self.selector == TargetSelector::None || self.target_count == 0)
        {
            return Err(CriError::Config(
                "targeted policy needs explicit targets or a selector with target_count > 0".into(),
            ));
        }
        Ok(())
    }

    /// Targeted policy whose targets still have to be picked from a baseline.
    pub fn needs_targets(&self) -> bool {
        self.kind == CheatKind::Targeted && self.targets.is_empty()
    }

    pub fn governs(&self, user: UserId) -> bool {
        match self.kind {
            CheatKind::Honest => false,
            CheatKind::GeneralIntensity => true,
            CheatKind::Targeted => self.targets.contains(&user),
        }
    }
}

/// One uniform draw per governed user per task; compares it to the
/// probability so runs at different intensities share their draws.
pub fn decide_cheat<R: Rng + ?Sized>(policy: &CheatPolicy, user: UserId, rng: &mut R) -> bool {
    if !policy.governs(user) {
        return false;
    }
    rng.random::<f64>() < policy.probability
}

pub fn make_report<R: Rng + ?Sized>(
    user: UserId,
    honest_value: f64,
    cheat: bool,
    policy: &CheatPolicy,
    rng: &mut R,
) -> Observation {
    let value = if cheat {
        rng.random_range(policy.cheat_low..=policy.cheat_high)
    } else {
        honest_value
    };
    Observation { user, value }
}

/// Top `count` users of the baseline under the selector's metric, ties
/// broken by lower id.
pub fn select_targets(
    selector: TargetSelector,
    count: usize,
    baseline: &SimResult,
) -> Result<BTreeSet<UserId>> {
    if baseline.totals.is_empty() {
        return Err(CriError::InvalidInput(
            "baseline result has no users".into(),
        ));
    }
    let metric = |user: &UserId| -> f64 {
        let totals = &baseline.totals[user];
        match selector {
            TargetSelector::None => 0.0,
            TargetSelector::TopR => totals.final_reputation.value(),
            TargetSelector::TopP => totals.payback,
            TargetSelector::TopC => totals.tasks as f64,
        }
    };
    if selector == TargetSelector::None {
        return Ok(BTreeSet::new());
    }
    let mut users: Vec<UserId> = baseline.totals.keys().copied().collect();
    users.sort_by(|a, b| metric(b).total_cmp(&metric(a)).then(a.cmp(b)));
    Ok(users.into_iter().take(count).collect())
}
