//! Exact long-run averages of sample-at-idle policies and an exhaustive
//! oracle over stationary deterministic waiting functions.
//!
//! Under a stationary waiting function the deliveries form a renewal
//! process, so the time-average penalty is the expected cycle reward over
//! the expected cycle length. Optimal policies exist among waiting
//! functions that depend only on the previous service time, which is the
//! class [`brute_force_optimum`] enumerates.

use crate::error::{Error, Result};
use crate::service::ServiceTimeDist;
use crate::solver::{cycle_stats, PenaltyProfile, WaitingFunction};
use crate::sources::AgePenalty;

/// Largest number of waiting functions the oracle will enumerate.
pub const ORACLE_BUDGET: u128 = 10_000_000;

pub const DEFAULT_Z_CAP: u64 = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_ratio: f64,
    pub best_waiting: WaitingFunction,
    pub enumerated: u64,
}

pub fn renewal_average(penalty: &AgePenalty, dist: &ServiceTimeDist, waiting: &WaitingFunction) -> f64 {
    cycle_stats(penalty, dist, waiting).ratio
}

pub fn zero_wait_average(penalty: &AgePenalty, dist: &ServiceTimeDist) -> f64 {
    renewal_average(penalty, dist, &WaitingFunction::zeros(dist))
}

/// Evaluates every `Z: support -> 0..=z_cap` and keeps the smallest ratio,
/// preferring the lexicographically smallest `Z` among exact ties.
pub fn brute_force_optimum(penalty: &AgePenalty, dist: &ServiceTimeDist, z_cap: u64) -> Result<OracleResult> {
    let choices = u128::from(z_cap) + 1;
    let candidates = u32::try_from(dist.support().len())
        .ok()
        .and_then(|k| choices.checked_pow(k))
        .unwrap_or(u128::MAX);
    if candidates > ORACLE_BUDGET {
        return Err(Error::BudgetExceeded { candidates, budget: ORACLE_BUDGET });
    }

    // The ratio separates over support points: tabulate each point's
    // probability-weighted reward and length once per wait.
    let mut profile = PenaltyProfile::new(penalty, dist);
    let table: Vec<Vec<(f64, f64)>> = dist
        .support()
        .iter()
        .map(|&(y, prob)| {
            (0..=z_cap)
                .map(|z| (prob * profile.expected_cycle_reward(y, z), prob * (y + z) as f64))
                .collect()
        })
        .collect();

    let k = table.len();
    let mut current = vec![0u64; k];
    let mut best = current.clone();
    let mut best_ratio = f64::INFINITY;
    let mut enumerated = 0u64;
    loop {
        let (reward, length) = current
            .iter()
            .zip(&table)
            .fold((0.0, 0.0), |(r, l), (&z, row)| (r + row[z as usize].0, l + row[z as usize].1));
        let ratio = reward / length;
        enumerated += 1;
        if ratio < best_ratio {
            best_ratio = ratio;
            best.copy_from_slice(&current);
        }
        // odometer increment, last coordinate fastest (lexicographic order)
        let mut i = k;
        loop {
            if i == 0 {
                let best_waiting = WaitingFunction::new(dist, dist.values().zip(best.iter().copied()))?;
                let best_ratio = renewal_average(penalty, dist, &best_waiting);
                return Ok(OracleResult { best_ratio, best_waiting, enumerated });
            }
            i -= 1;
            if current[i] < z_cap {
                current[i] += 1;
                current[i + 1..].iter_mut().for_each(|z| *z = 0);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::MarkovSourceModel;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_wait_for_deterministic_age() {
        let d = ServiceTimeDist::deterministic(4).unwrap();
        let age = AgePenalty::affine(1.0, 0.0).unwrap();
        assert_eq!(zero_wait_average(&age, &d), 5.5);
        assert_eq!(renewal_average(&age, &d, &WaitingFunction::zeros(&d)), 5.5);
    }

    #[test]
    fn zero_wait_mi_for_one_or_eleven() {
        let d = ServiceTimeDist::new([(1, 0.5), (11, 0.5)]).unwrap();
        let iid = AgePenalty::negated_mi(MarkovSourceModel::binary_symmetric(0.5).unwrap());
        assert_eq!(zero_wait_average(&iid, &d), 0.0);
        let p = AgePenalty::negated_mi(MarkovSourceModel::binary_symmetric(0.1).unwrap());
        // exact 40-digit double sum: -0.080545456479222212622
        let v = zero_wait_average(&p, &d);
        assert!(v > -1.0 && v < 0.0);
        assert_abs_diff_eq!(v, -0.080_545_456_479_222_2, epsilon = 1e-14);
    }

    #[test]
    fn any_wait_on_iid_source_is_zero() {
        let d = ServiceTimeDist::new([(2, 0.5), (3, 0.5)]).unwrap();
        let iid = AgePenalty::negated_mi(MarkovSourceModel::binary_symmetric(0.5).unwrap());
        let w = WaitingFunction::new(&d, [(2, 5), (3, 1)]).unwrap();
        assert_eq!(renewal_average(&iid, &d, &w), 0.0);
    }

    #[test]
    fn oracle_on_constant_penalty_prefers_zero_wait() {
        let d = ServiceTimeDist::new([(1, 0.5), (3, 0.5)]).unwrap();
        let res = brute_force_optimum(&AgePenalty::constant(2.0).unwrap(), &d, 5).unwrap();
        assert_eq!(res.best_ratio, 2.0);
        assert_eq!(res.best_waiting, WaitingFunction::zeros(&d));
        assert_eq!(res.enumerated, 36);
    }

    #[test]
    fn oracle_on_deterministic_age() {
        let d = ServiceTimeDist::deterministic(4).unwrap();
        let res = brute_force_optimum(&AgePenalty::affine(1.0, 0.0).unwrap(), &d, 40).unwrap();
        assert_eq!(res.enumerated, 41);
        assert_eq!(res.best_ratio, 5.5);
        assert_eq!(res.best_waiting.get(4), Some(0));
    }

    #[test]
    fn oracle_respects_budget() {
        let d = ServiceTimeDist::new([(1, 0.25), (2, 0.25), (3, 0.25), (4, 0.25)]).unwrap();
        let p = AgePenalty::affine(1.0, 0.0).unwrap();
        assert!(matches!(brute_force_optimum(&p, &d, 100), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn oracle_matches_direct_enumeration() {
        let d = ServiceTimeDist::new([(1, 0.3), (4, 0.7)]).unwrap();
        let p = AgePenalty::negated_mi(MarkovSourceModel::gaussian_ar1(0.8, 1.0).unwrap());
        let res = brute_force_optimum(&p, &d, 12).unwrap();
        let mut best = f64::INFINITY;
        for z1 in 0..=12 {
            for z4 in 0..=12 {
                let w = WaitingFunction::new(&d, [(1, z1), (4, z4)]).unwrap();
                best = best.min(renewal_average(&p, &d, &w));
            }
        }
        assert_abs_diff_eq!(res.best_ratio, best, epsilon = 1e-14);
    }
}
