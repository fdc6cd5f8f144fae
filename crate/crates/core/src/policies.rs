//! Online arm-selection rules.
//!
//! [`PolicyKind::ForcingBalance`] pulls the least-sampled arm whenever its
//! count drops below `η√t` and otherwise tracks the plug-in optimal
//! allocation by pulling the arm with the largest deficit `λ̂_i − λ̃_i`.
//! The other kinds are the ablation and baselines it is compared against.
//! All ties go to the lowest arm index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bandit::RngStream;
use crate::error::{Error, Result};
use crate::estimation::{mean_radius, sigma_radius, DeltaSchedule, EmpiricalStats};
use crate::objective::{Allocation, Moments, TradeoffParams};
use crate::solver::{self, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    ForcingBalance,
    /// Forcing as above, but draws the arm from `λ̂` instead of tracking it.
    ForcingBalanceNoTrack,
    /// Optimistic plug-in objective, tracked without forcing.
    NaiveUcb,
    Ucb1,
    /// Forcing plus tracking of the pure error-minimizing allocation `∝ σ̂^{2/3}`.
    GafsError,
    Uniform,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::ForcingBalance,
        PolicyKind::ForcingBalanceNoTrack,
        PolicyKind::NaiveUcb,
        PolicyKind::Ucb1,
        PolicyKind::GafsError,
        PolicyKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::ForcingBalance => "forcing-balance",
            PolicyKind::ForcingBalanceNoTrack => "forcing-balance-no-track",
            PolicyKind::NaiveUcb => "naive-ucb",
            PolicyKind::Ucb1 => "ucb1",
            PolicyKind::GafsError => "gafs-error",
            PolicyKind::Uniform => "uniform",
        }
    }

    pub fn uses_forcing(self) -> bool {
        matches!(
            self,
            PolicyKind::ForcingBalance | PolicyKind::ForcingBalanceNoTrack | PolicyKind::GafsError
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown policy '{s}'")))
    }
}

/// When the forcing branch fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingRule {
    /// `T_U < η√t`.
    #[default]
    Strict,
    /// `T_U < η√t + 1`.
    PlusOne,
}

impl ForcingRule {
    pub fn threshold(self, eta: f64, t: u64) -> f64 {
        let base = eta * (t as f64).sqrt();
        match self {
            ForcingRule::Strict => base,
            ForcingRule::PlusOne => base + 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyOptions {
    pub forcing_rule: ForcingRule,
    pub delta_schedule: DeltaSchedule,
    /// Recompute `λ̂` every this many steps (1 = every tracking step).
    pub recompute_every: u64,
    /// Floor on plug-in deviations fed to the solver.
    pub sd_floor: f64,
    /// Floor on the pessimistic deviations of the naive optimistic rule.
    pub naive_sd_floor: f64,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        PolicyOptions {
            forcing_rule: ForcingRule::Strict,
            delta_schedule: DeltaSchedule::Linear,
            recompute_every: 1,
            sd_floor: 1e-12,
            naive_sd_floor: 0.01,
        }
    }
}

impl PolicyOptions {
    pub fn validate(&self) -> Result<()> {
        if self.recompute_every == 0 {
            return Err(Error::InvalidParams("recompute_every must be at least 1".into()));
        }
        if !(self.sd_floor >= 0.0) || !(self.naive_sd_floor >= 0.0) {
            return Err(Error::InvalidParams("deviation floors must be non-negative".into()));
        }
        Ok(())
    }
}

/// Which rule produced the last decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Forcing,
    Tracking,
    Sampling,
    Index,
    RoundRobin,
    /// Solver failed on the empirical problem; the least-pulled arm was used.
    Fallback,
}

/// Least-pulled arm, lowest index on ties.
pub fn least_pulled(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c < counts[best] {
            best = i;
        }
    }
    best
}

/// Arm with the largest deficit `target_i − realized_i`, lowest index on ties.
pub fn track(target: &[f64], realized: &[f64]) -> usize {
    let mut best = 0;
    let mut best_gap = f64::NEG_INFINITY;
    for (i, (a, b)) in target.iter().zip(realized).enumerate() {
        let gap = a - b;
        if gap > best_gap {
            best = i;
            best_gap = gap;
        }
    }
    best
}

/// Draws an index from a categorical distribution.
pub fn sample_categorical(probs: &[f64], rng: &mut RngStream) -> usize {
    let u = rng.uniform() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Allocation proportional to `σ^{2/3}`, uniform when every deviation is zero.
pub fn error_optimal_allocation(sds: &[f64]) -> Allocation {
    let powered: Vec<f64> = sds.iter().map(|s| s.powf(2.0 / 3.0)).collect();
    let total: f64 = powered.iter().sum();
    if !(total > 0.0) {
        return Allocation::uniform(sds.len());
    }
    Allocation::from_raw(powered.into_iter().map(|p| p / total).collect())
}

/// Optimistic means and floored pessimistic deviations at step `t`.
pub fn optimistic_moments(stats: &EmpiricalStats, delta: f64, t: u64, options: &PolicyOptions) -> Moments {
    let k = stats.num_arms();
    let delta_n = options.delta_schedule.delta_n(delta, k, t.max(1));
    let mut means = Vec::with_capacity(k);
    let mut sds = Vec::with_capacity(k);
    for arm in 0..k {
        let count = stats.count(arm).max(1);
        means.push(stats.mean(arm) + mean_radius(delta_n, count));
        let lower = stats.sigma_or_zero(arm) - sigma_radius(delta_n, count);
        sds.push(lower.max(options.naive_sd_floor));
    }
    Moments { means, sds }
}

/// Per-episode state of one arm-selection rule.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    params: TradeoffParams,
    options: PolicyOptions,
    stats: EmpiricalStats,
    lambda_hat: Option<Allocation>,
    solved_at: Option<u64>,
    rng: RngStream,
    last_branch: Option<Branch>,
    fallbacks: u64,
}

impl Policy {
    /// `rng` is only consumed by rules that randomize their choice.
    pub fn new(
        kind: PolicyKind,
        num_arms: usize,
        params: TradeoffParams,
        options: PolicyOptions,
        rng: RngStream,
    ) -> Result<Self> {
        if num_arms < 2 {
            return Err(Error::TooFewArms(num_arms));
        }
        params.validate_for(num_arms)?;
        options.validate()?;
        Ok(Policy {
            kind,
            params,
            options,
            stats: EmpiricalStats::new(num_arms),
            lambda_hat: None,
            solved_at: None,
            rng,
            last_branch: None,
            fallbacks: 0,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn params(&self) -> &TradeoffParams {
        &self.params
    }

    pub fn stats(&self) -> &EmpiricalStats {
        &self.stats
    }

    /// Most recent estimated allocation, if the rule computes one.
    pub fn lambda_hat(&self) -> Option<&Allocation> {
        self.lambda_hat.as_ref()
    }

    pub fn last_branch(&self) -> Option<Branch> {
        self.last_branch
    }

    /// Steps where the empirical problem could not be solved.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }

    /// Chooses the arm for step `t` (1-based, `t − 1` pulls recorded so far).
    pub fn select(&mut self, t: u64) -> usize {
        let (arm, branch) = match self.kind {
            PolicyKind::ForcingBalance => self.forcing_balance_step(t),
            PolicyKind::ForcingBalanceNoTrack => self.forcing_balance_no_track_step(t),
            PolicyKind::NaiveUcb => self.naive_ucb_step(t),
            PolicyKind::Ucb1 | PolicyKind::GafsError | PolicyKind::Uniform => self.baseline_step(t),
        };
        self.last_branch = Some(branch);
        arm
    }

    /// Records the reward observed for `arm`.
    pub fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.stats.update(arm, reward)
    }

    fn lambda_tilde_at(&self, t: u64) -> Vec<f64> {
        let t = t as f64;
        self.stats.counts().iter().map(|&c| c as f64 / t).collect()
    }

    /// Forcing branch: `Some(U_t)` when the least-pulled arm is under threshold.
    fn forced_arm(&self, t: u64) -> Option<usize> {
        let counts = self.stats.counts();
        let u = least_pulled(&counts);
        let threshold = self.options.forcing_rule.threshold(self.params.eta, t);
        ((counts[u] as f64) < threshold).then_some(u)
    }

    fn refresh_plugin(&mut self, t: u64) -> bool {
        let stale = match self.solved_at {
            Some(s) => t - s >= self.options.recompute_every,
            None => true,
        };
        if !stale && self.lambda_hat.is_some() {
            return true;
        }
        let m = self.stats.plugin_moments(self.options.sd_floor);
        self.store_solution(&m, t)
    }

    fn store_solution(&mut self, m: &Moments, t: u64) -> bool {
        match solver::solve(m, self.params.w, self.params.lambda_min, DEFAULT_TOL) {
            Ok(report) => {
                self.lambda_hat = Some(report.allocation);
                self.solved_at = Some(t);
                true
            }
            Err(_) => {
                self.fallbacks += 1;
                false
            }
        }
    }

    fn forcing_balance_step(&mut self, t: u64) -> (usize, Branch) {
        if let Some(u) = self.forced_arm(t) {
            return (u, Branch::Forcing);
        }
        if !self.refresh_plugin(t) {
            return (least_pulled(&self.stats.counts()), Branch::Fallback);
        }
        let target = self.lambda_hat.as_ref().expect("refreshed");
        (track(target, &self.lambda_tilde_at(t)), Branch::Tracking)
    }

    fn forcing_balance_no_track_step(&mut self, t: u64) -> (usize, Branch) {
        if let Some(u) = self.forced_arm(t) {
            return (u, Branch::Forcing);
        }
        if !self.refresh_plugin(t) {
            return (least_pulled(&self.stats.counts()), Branch::Fallback);
        }
        let target = self.lambda_hat.as_ref().expect("refreshed");
        (sample_categorical(target, &mut self.rng), Branch::Sampling)
    }

    fn naive_ucb_step(&mut self, t: u64) -> (usize, Branch) {
        let k = self.stats.num_arms() as u64;
        if t <= 2 * k {
            return (((t - 1) % k) as usize, Branch::RoundRobin);
        }
        let m = optimistic_moments(&self.stats, self.params.delta, t, &self.options);
        if !self.store_solution(&m, t) {
            return (least_pulled(&self.stats.counts()), Branch::Fallback);
        }
        let target = self.lambda_hat.as_ref().expect("solved");
        (track(target, &self.lambda_tilde_at(t)), Branch::Tracking)
    }

    fn baseline_step(&mut self, t: u64) -> (usize, Branch) {
        let k = self.stats.num_arms() as u64;
        match self.kind {
            PolicyKind::Uniform => (((t - 1) % k) as usize, Branch::RoundRobin),
            PolicyKind::Ucb1 => {
                if t <= k {
                    return (((t - 1) % k) as usize, Branch::RoundRobin);
                }
                let log_t = (t as f64).ln();
                let mut best = 0;
                let mut best_index = f64::NEG_INFINITY;
                for arm in 0..k as usize {
                    let count = self.stats.count(arm).max(1) as f64;
                    let index = self.stats.mean(arm) + (2.0 * log_t / count).sqrt();
                    if index > best_index {
                        best = arm;
                        best_index = index;
                    }
                }
                (best, Branch::Index)
            }
            PolicyKind::GafsError => {
                if let Some(u) = self.forced_arm(t) {
                    return (u, Branch::Forcing);
                }
                let sds: Vec<f64> = (0..k as usize).map(|i| self.stats.sigma_or_zero(i)).collect();
                let target = error_optimal_allocation(&sds);
                let arm = track(&target, &self.lambda_tilde_at(t));
                self.lambda_hat = Some(target);
                self.solved_at = Some(t);
                (arm, Branch::Tracking)
            }
            _ => unreachable!("not a baseline"),
        }
    }
}
