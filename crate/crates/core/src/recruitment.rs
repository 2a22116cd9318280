//! Reputation-driven employee recruitment.
//!
//! Applicants are ranked by reputation and admitted greedily while each
//! newcomer's reputation beats the equilibrium threshold of the set already
//! admitted. Every admitted employee then has a strictly positive expected
//! contribution and expected payback at the payoff maximum.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{CriError, Result};
use crate::payback::total_reward;
use crate::reputation::{Contribution, Payback, Reputation, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Application {
    pub user: UserId,
    pub reputation: Reputation,
}

impl Application {
    pub fn new(user: impl Into<UserId>, reputation: Reputation) -> Self {
        Application {
            user: user.into(),
            reputation,
        }
    }
}

/// How the task's total reward `R` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardPolicy {
    /// `R = sum((1 - r_j) / r_j) / (|E| - 1)`, which makes expected
    /// contributions sum to one.
    #[default]
    Normalized,
    /// A budget set independently of the employees.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecruitmentResult {
    /// Employees in rank order (reputation descending, id ascending).
    pub employees: Vec<UserId>,
    pub expected_contribution: BTreeMap<UserId, Contribution>,
    pub expected_payback: BTreeMap<UserId, Payback>,
    pub total_reward: f64,
}

impl RecruitmentResult {
    pub fn contains(&self, user: UserId) -> bool {
        self.expected_contribution.contains_key(&user)
    }

    pub fn expected_sum(&self) -> f64 {
        self.expected_contribution.values().map(|c| c.value()).sum()
    }
}

/// Admission bound for the next candidate given the current employee set.
pub fn recruitment_threshold(risk_sum: f64, e_size: usize) -> f64 {
    let k = (e_size - 1) as f64;
    k / (risk_sum + k)
}

/// Payoff of an employee contributing `own` when the others contribute
/// `others_sum` in total: `own / (own + others) * R - risk * own`.
pub fn payoff(own: f64, others_sum: f64, reward: f64, risk: f64) -> f64 {
    let total = own + others_sum;
    let share = if total > 0.0 { own / total } else { 0.0 };
    share * reward - risk * own
}

pub fn expected_payback(
    c_exp_i: Contribution,
    c_exp_sum: f64,
    reward: f64,
    r_i: Reputation,
) -> Payback {
    let c = c_exp_i.value();
    let raw = c / c_exp_sum * reward - r_i.quality_risk() * c;
    Payback::from_raw(raw, reward)
}

/// Orders applications by reputation descending, ties by user id ascending.
pub fn rank_applications(applications: &[Application]) -> Vec<Application> {
    let mut ranked = applications.to_vec();
    ranked.sort_by(|a, b| {
        b.reputation
            .value()
            .total_cmp(&a.reputation.value())
            .then(a.user.cmp(&b.user))
    });
    ranked
}

pub fn recruit(applications: &[Application], policy: RewardPolicy) -> Result<RecruitmentResult> {
    if applications.len() < 2 {
        return Err(CriError::TaskAborted(format!(
            "need at least 2 applicants, got {}",
            applications.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for app in applications {
        if !seen.insert(app.user) {
            return Err(CriError::InvalidInput(format!(
                "duplicate application from {}",
                app.user
            )));
        }
    }
    if let RewardPolicy::Fixed(r) = policy {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CriError::InvalidInput(format!(
                "total reward must be positive, got {r}"
            )));
        }
    }

    let ranked = rank_applications(applications);
    let mut size = 2;
    let mut risk_sum: f64 = ranked[..2]
        .iter()
        .map(|a| a.reputation.quality_risk())
        .sum();
    while size < ranked.len() {
        let candidate = ranked[size].reputation;
        if candidate.value() <= recruitment_threshold(risk_sum, size) {
            break;
        }
        risk_sum += candidate.quality_risk();
        size += 1;
    }
    let employees = &ranked[..size];

    let reward = match policy {
        RewardPolicy::Normalized => {
            let reps: Vec<Reputation> = employees.iter().map(|a| a.reputation).collect();
            total_reward(&reps)?
        }
        RewardPolicy::Fixed(r) => r,
    };

    let k = (size - 1) as f64;
    let scale = k * reward / risk_sum;
    let expected: Vec<f64> = employees
        .iter()
        .map(|a| scale * (1.0 - k * a.reputation.quality_risk() / risk_sum))
        .collect();
    let expected_sum: f64 = expected.iter().sum();

    let mut expected_contribution = BTreeMap::new();
    let mut expected_payback_map = BTreeMap::new();
    for (app, &c) in employees.iter().zip(&expected) {
        let c = Contribution::new(c.max(0.0))?;
        expected_contribution.insert(app.user, c);
        expected_payback_map.insert(
            app.user,
            expected_payback(c, expected_sum, reward, app.reputation),
        );
    }

    Ok(RecruitmentResult {
        employees: employees.iter().map(|a| a.user).collect(),
        expected_contribution,
        expected_payback: expected_payback_map,
        total_reward: reward,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn apps(reps: &[f64]) -> Vec<Application> {
        reps.iter()
            .enumerate()
            .map(|(i, &r)| Application::new(i as u32, Reputation::new(r).unwrap()))
            .collect()
    }

    /// Grid-then-golden-section maximizer of the payoff over `own`,
    /// independent of the closed form.
    fn argmax_payoff(others: f64, reward: f64, risk: f64) -> f64 {
        let f = |x: f64| payoff(x, others, reward, risk);
        let n = 2000;
        let (mut best, mut best_x) = (f64::NEG_INFINITY, 0.0);
        for i in 0..=n {
            let x = i as f64 / n as f64;
            if f(x) > best {
                best = f(x);
                best_x = x;
            }
        }
        let (mut a, mut b) = ((best_x - 1e-3).max(0.0), (best_x + 1e-3).min(1.0));
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-9 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        (a + b) / 2.0
    }

    #[test]
    fn threshold_examples() {
        let q = 1.0 / 9.0 + 0.25;
        assert_abs_diff_eq!(
            recruitment_threshold(q, 2),
            1.0 / (q + 1.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(recruitment_threshold(q, 2), 0.7347, epsilon = 1e-4);
        assert_abs_diff_eq!(recruitment_threshold(2.0 / 9.0, 2), 0.8182, epsilon = 1e-4);
        assert_eq!(recruitment_threshold(1.0, 2), 0.5);
    }

    #[test]
    fn recruit_rejects_low_third() {
        let res = recruit(&apps(&[0.9, 0.8, 0.7]), RewardPolicy::Normalized).unwrap();
        assert_eq!(res.employees, vec![UserId(0), UserId(1)]);
        assert_abs_diff_eq!(res.total_reward, 0.3611, epsilon = 1e-4);
        let c0 = res.expected_contribution[&UserId(0)].value();
        let c1 = res.expected_contribution[&UserId(1)].value();
        assert_abs_diff_eq!(c0, 0.6923, epsilon = 1e-4);
        assert_abs_diff_eq!(c1, 0.3077, epsilon = 1e-4);
        // each share is the payoff maximizer against the other's share
        let r = res.total_reward;
        assert_abs_diff_eq!(argmax_payoff(c1, r, 1.0 / 9.0), c0, epsilon = 1e-6);
        assert_abs_diff_eq!(argmax_payoff(c0, r, 0.25), c1, epsilon = 1e-6);
        assert_abs_diff_eq!(res.expected_payback[&UserId(0)].raw, 0.1731, epsilon = 1e-4);
        assert_abs_diff_eq!(res.expected_payback[&UserId(1)].raw, 0.0342, epsilon = 1e-4);
    }

    #[test]
    fn recruit_symmetric_three() {
        let res = recruit(&apps(&[0.9, 0.9, 0.9]), RewardPolicy::Normalized).unwrap();
        assert_eq!(res.employees.len(), 3);
        assert_abs_diff_eq!(res.total_reward, 1.0 / 6.0, epsilon = 1e-12);
        for c in res.expected_contribution.values() {
            assert_abs_diff_eq!(c.value(), 1.0 / 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                argmax_payoff(2.0 / 3.0, res.total_reward, 1.0 / 9.0),
                c.value(),
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn two_applicants_always_hired() {
        for reps in [[0.01, 0.01], [0.99, 0.01], [0.3, 0.6]] {
            let res = recruit(&apps(&reps), RewardPolicy::Normalized).unwrap();
            assert_eq!(res.employees.len(), 2);
            assert_abs_diff_eq!(res.expected_sum(), 1.0, epsilon = 1e-12);
            assert!(res.expected_payback.values().all(|p| p.raw > 0.0));
        }
    }

    #[test]
    fn too_few_or_duplicate_applicants() {
        assert!(matches!(
            recruit(&apps(&[0.9]), RewardPolicy::Normalized),
            Err(CriError::TaskAborted(_))
        ));
        assert!(matches!(
            recruit(&[], RewardPolicy::Normalized),
            Err(CriError::TaskAborted(_))
        ));
        let mut a = apps(&[0.9, 0.8]);
        a[1].user = a[0].user;
        assert!(matches!(
            recruit(&a, RewardPolicy::Normalized),
            Err(CriError::InvalidInput(_))
        ));
    }

    #[test]
    fn expected_payback_examples() {
        let r = 1.0 / 9.0 + 0.25;
        let p = expected_payback(
            Contribution::new(0.6923).unwrap(),
            1.0,
            r,
            Reputation::new(0.9).unwrap(),
        );
        assert_abs_diff_eq!(p.raw, 0.6923 * (r - 1.0 / 9.0), epsilon = 1e-12);
        assert_abs_diff_eq!(p.raw, 0.1731, epsilon = 1e-4);
        let p = expected_payback(
            Contribution::new(0.3077).unwrap(),
            1.0,
            r,
            Reputation::new(0.8).unwrap(),
        );
        assert_abs_diff_eq!(p.raw, 0.0342, epsilon = 1e-4);
        let p = expected_payback(Contribution::ZERO, 1.0, r, Reputation::new(0.8).unwrap());
        assert_eq!(p.raw, 0.0);
    }

    #[test]
    fn fixed_reward_keeps_stationarity() {
        let res = recruit(&apps(&[0.95, 0.9, 0.85, 0.6]), RewardPolicy::Fixed(2.0)).unwrap();
        let sum = res.expected_sum();
        assert_eq!(res.total_reward, 2.0);
        for (user, c) in &res.expected_contribution {
            let r = apps(&[0.95, 0.9, 0.85, 0.6])[user.0 as usize].reputation;
            let (others, risk, h) = (sum - c.value(), r.quality_risk(), 1e-6);
            let d = (payoff(c.value() + h, others, 2.0, risk)
                - payoff(c.value() - h, others, 2.0, risk))
                / (2.0 * h);
            assert!(d.abs() < 1e-5 * 2.0, "derivative {d}");
            assert!(res.expected_payback[user].raw > 0.0);
        }
    }

    proptest! {
        #[test]
        fn recruited_shares_are_stationary_and_positive(reps in prop::collection::vec(0.05f64..0.95, 2..30)) {
            let a = apps(&reps);
            let res = recruit(&a, RewardPolicy::Normalized).unwrap();
            prop_assert!(res.employees.len() >= 2);
            prop_assert!((res.expected_sum() - 1.0).abs() < 1e-9);
            let r = res.total_reward;
            let mut last = f64::INFINITY;
            for user in &res.employees {
                let c = res.expected_contribution[user].value();
                let risk = a[user.0 as usize].reputation.quality_risk();
                prop_assert!(c > 0.0);
                prop_assert!(res.expected_payback[user].raw > 0.0);
                prop_assert!(c <= last + 1e-15);
                last = c;
                // first derivative of the payoff vanishes at c
                let h = 1e-6;
                let others = 1.0 - c;
                let d = (payoff(c + h, others, r, risk) - payoff(c - h, others, r, risk)) / (2.0 * h);
                prop_assert!(d.abs() < 1e-5 * r);
                // concave there
                let h = 1e-4;
                let dd = payoff(c + h, others, r, risk) - 2.0 * payoff(c, others, r, risk) + payoff(c - h, others, r, risk);
                prop_assert!(dd < 0.0);
            }
        }

        #[test]
        fn input_order_does_not_matter(reps in prop::collection::vec(0.05f64..0.95, 2..20), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let a = apps(&reps);
            let mut shuffled = a.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(
                recruit(&a, RewardPolicy::Normalized).unwrap(),
                recruit(&shuffled, RewardPolicy::Normalized).unwrap()
            );
        }
    }
}
