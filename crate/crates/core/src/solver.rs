//! Optimal threshold sampling after each delivery.
//!
//! Among policies that only sample once the server is idle, a policy is a
//! waiting function `Z(y)` applied after a delivery whose service took `y`
//! steps. One delivery-to-delivery cycle with previous service `y`, wait `z`
//! and next service `y'` accrues the reward
//!
//! ```text
//! q(y, z, y') = sum_{n = y}^{y + z + y' - 1} p(n)
//! ```
//!
//! over `z + y'` steps, so the long-run average penalty is the ratio
//! `E[q] / E[Y + Z]`. The minimal ratio `beta` is the root of the
//! decreasing function
//!
//! ```text
//! h(c) = min_Z E[q(Y, Z(Y), Y') - c (Y + Z(Y))]
//! ```
//!
//! and the minimizing `Z` waits until `E[p(y + n + Y')] >= c`. `beta` is
//! found by one bisection on `h` between `p(y_min)` (no policy does better)
//! and the zero-wait ratio (which is achievable).

use crate::error::{Error, Result};
use crate::service::ServiceTimeDist;
use crate::sources::{AgePenalty, MarkovSourceModel};

pub const DEFAULT_Z_MAX: u64 = 10_000;
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Final bisection bracket width.
    pub tol: f64,
    /// Largest wait `optimal_wait` may return before giving up.
    pub z_max: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, z_max: DEFAULT_Z_MAX }
    }
}

impl SolverOptions {
    pub fn new(tol: f64, z_max: u64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::OutOfRange(format!("solver tolerance {tol} must be positive")));
        }
        if z_max == 0 {
            return Err(Error::OutOfRange("z_max must be at least 1".into()));
        }
        Ok(Self { tol, z_max })
    }
}

/// Deterministic wait `Z(y)` for every service time `y` in the support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaitingFunction {
    waits: Vec<(u64, u64)>,
}

impl WaitingFunction {
    pub fn new(dist: &ServiceTimeDist, waits: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut waits: Vec<(u64, u64)> = waits.into_iter().collect();
        waits.sort_by_key(|&(y, _)| y);
        let matches = waits.len() == dist.support().len() && waits.iter().map(|w| w.0).eq(dist.values());
        if !matches {
            return Err(Error::OutOfRange(format!(
                "waiting function must cover exactly the service support {dist}"
            )));
        }
        Ok(Self { waits })
    }

    pub fn zeros(dist: &ServiceTimeDist) -> Self {
        Self::constant(dist, 0)
    }

    pub fn constant(dist: &ServiceTimeDist, z: u64) -> Self {
        Self { waits: dist.values().map(|y| (y, z)).collect() }
    }

    pub fn get(&self, y: u64) -> Option<u64> {
        self.waits
            .binary_search_by_key(&y, |&(v, _)| v)
            .ok()
            .map(|i| self.waits[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.waits.iter().copied()
    }

    pub fn max_wait(&self) -> u64 {
        self.waits.iter().map(|w| w.1).max().unwrap_or(0)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.waits.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    fn covers(&self, dist: &ServiceTimeDist) -> bool {
        self.waits.len() == dist.support().len() && self.waits.iter().map(|w| w.0).eq(dist.values())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleStats {
    /// `E[q(Y, Z, Y')]`, penalty times steps.
    pub expected_reward: f64,
    /// `E[Y + Z]` in steps.
    pub expected_length: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// Optimal average penalty, or optimal average mutual information for
    /// [`solve_mi`].
    pub beta: f64,
    pub waiting: WaitingFunction,
    /// `h` evaluated at the returned threshold (penalty form).
    pub h_residual: f64,
    pub iterations: u32,
}

/// Penalty values cached by age. Ages below the smallest service time never
/// occur inside a cycle, so only finite values are stored.
pub(crate) struct PenaltyProfile<'a> {
    penalty: &'a AgePenalty,
    dist: &'a ServiceTimeDist,
    values: Vec<f64>,
}

impl<'a> PenaltyProfile<'a> {
    pub(crate) fn new(penalty: &'a AgePenalty, dist: &'a ServiceTimeDist) -> Self {
        Self { penalty, dist, values: Vec::new() }
    }

    pub(crate) fn value(&mut self, age: u64) -> f64 {
        let base = self.dist.min();
        assert!(age >= base, "cycle ages start at the smallest service time");
        let idx = (age - base) as usize;
        while self.values.len() <= idx {
            let n = base + self.values.len() as u64;
            let v = self.penalty.value(n);
            assert!(v.is_finite(), "penalty at age {n} is {v}");
            self.values.push(v);
        }
        self.values[idx]
    }

    fn range_sum(&mut self, from: u64, to_exclusive: u64) -> f64 {
        (from..to_exclusive).map(|n| self.value(n)).sum()
    }

    /// `E[p(y + n + Y')]`.
    fn expected_next(&mut self, y: u64, n: u64) -> f64 {
        let dist = self.dist;
        dist.expect(|y_next| self.value(y + n + y_next))
    }

    /// `E[q(y, z, Y')]`.
    pub(crate) fn expected_cycle_reward(&mut self, y: u64, z: u64) -> f64 {
        let dist = self.dist;
        let waiting = self.range_sum(y, y + z);
        waiting + dist.expect(|y_next| self.range_sum(y + z, y + z + y_next))
    }

    fn optimal_wait(&mut self, y: u64, beta: f64, z_max: u64) -> Result<u64> {
        (0..=z_max)
            .find(|&n| self.expected_next(y, n) >= beta)
            .ok_or(Error::ThresholdUnreachable { y_prev: y, beta, z_max })
    }

    fn waiting_at(&mut self, c: f64, z_max: u64) -> Result<WaitingFunction> {
        let dist = self.dist;
        let waits = dist
            .values()
            .map(|y| self.optimal_wait(y, c, z_max).map(|z| (y, z)))
            .collect::<Result<Vec<_>>>()?;
        Ok(WaitingFunction { waits })
    }

    pub(crate) fn cycle_stats(&mut self, waiting: &WaitingFunction) -> CycleStats {
        assert!(waiting.covers(self.dist), "waiting function does not match the service support");
        let dist = self.dist;
        let mut reward = 0.0;
        let mut length = 0.0;
        for (&(y, prob), (_, z)) in dist.support().iter().zip(waiting.iter()) {
            reward += prob * self.expected_cycle_reward(y, z);
            length += prob * (y + z) as f64;
        }
        CycleStats { expected_reward: reward, expected_length: length, ratio: reward / length }
    }

    fn h_with_waiting(&mut self, c: f64, z_max: u64) -> Result<(f64, WaitingFunction)> {
        let waiting = self.waiting_at(c, z_max)?;
        let stats = self.cycle_stats(&waiting);
        Ok((stats.expected_reward - c * stats.expected_length, waiting))
    }
}

/// Smallest `n` in `0..=z_max` with `E[p(y_prev + n + Y')] >= beta`.
pub fn optimal_wait(
    penalty: &AgePenalty,
    dist: &ServiceTimeDist,
    y_prev: u64,
    beta: f64,
    z_max: u64,
) -> Result<u64> {
    if !dist.contains(y_prev) {
        return Err(Error::ServiceNotInSupport(y_prev));
    }
    PenaltyProfile::new(penalty, dist).optimal_wait(y_prev, beta, z_max)
}

/// `h(c)`: the minimal expected cycle reward minus `c` times the expected
/// cycle length.
///
/// Above the penalty's supremum waiting forever pays off without bound, so
/// `h(c)` is negative infinity there.
pub fn h_of_c(penalty: &AgePenalty, dist: &ServiceTimeDist, c: f64, z_max: u64) -> Result<f64> {
    if c > penalty.supremum() {
        return Ok(f64::NEG_INFINITY);
    }
    PenaltyProfile::new(penalty, dist).h_with_waiting(c, z_max).map(|(h, _)| h)
}

/// Expected cycle reward, length and their ratio under a fixed waiting
/// function.
///
/// Panics if `waiting` is not defined on exactly the support of `dist`.
pub fn cycle_stats(penalty: &AgePenalty, dist: &ServiceTimeDist, waiting: &WaitingFunction) -> CycleStats {
    PenaltyProfile::new(penalty, dist).cycle_stats(waiting)
}

/// Minimizes the time-average penalty over all causal sampling policies.
pub fn solve_beta(penalty: &AgePenalty, dist: &ServiceTimeDist, opts: SolverOptions) -> Result<SolverResult> {
    let opts = SolverOptions::new(opts.tol, opts.z_max)?;
    let mut profile = PenaltyProfile::new(penalty, dist);

    let mut lower = profile.value(dist.min());
    let mut upper = profile.cycle_stats(&WaitingFunction::zeros(dist)).ratio;

    let (h_lower, _) = profile.h_with_waiting(lower, opts.z_max)?;
    let slack = 1e-9 * (1.0 + lower.abs()) * dist.mean();
    if h_lower < -slack {
        return Err(Error::BracketInvalid { lower, h_lower });
    }

    let mut iterations = 0;
    while upper - lower > opts.tol {
        let mid = lower + (upper - lower) / 2.0;
        if mid <= lower || mid >= upper {
            break;
        }
        iterations += 1;
        let (h, _) = profile.h_with_waiting(mid, opts.z_max)?;
        if h > 0.0 {
            lower = mid;
        } else if h < 0.0 {
            upper = mid;
        } else {
            lower = mid;
            upper = mid;
        }
    }

    let beta = lower + (upper - lower) / 2.0;
    let (h_residual, waiting) = profile.h_with_waiting(beta, opts.z_max)?;
    Ok(SolverResult { beta, waiting, h_residual, iterations })
}

/// Maximizes the time-average mutual information `r(age)`.
///
/// Equivalent to [`solve_beta`] with the penalty `-r`; the returned `beta`
/// is the optimal average in bits, and the waiting rule reads: wait until
/// `E[r(y + n + Y')] <= beta`.
pub fn solve_mi(model: &MarkovSourceModel, dist: &ServiceTimeDist, opts: SolverOptions) -> Result<SolverResult> {
    let penalty = AgePenalty::negated_mi(model.clone());
    let mut result = solve_beta(&penalty, dist, opts)?;
    result.beta = -result.beta;
    Ok(result)
}
