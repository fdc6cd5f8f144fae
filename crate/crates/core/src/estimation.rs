//! Per-arm running statistics and confidence radii.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{Allocation, Moments};

/// Running count, mean and sum of squared deviations of one arm.
///
/// Updated with Welford's recurrence, which yields the same unbiased
/// variance as the pairwise form `Σ_{s,s'} (X_s − X_s')² / (2T(T−1))`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl ArmStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Sample mean; 0 before the first sample.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased variance, `None` with fewer than two samples.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| (self.m2 / (self.count - 1) as f64).max(0.0))
    }
}

/// Statistics of every arm plus the global step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    arms: Vec<ArmStats>,
    step: u64,
}

impl EmpiricalStats {
    pub fn new(num_arms: usize) -> Self {
        EmpiricalStats {
            arms: vec![ArmStats::default(); num_arms],
            step: 0,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Records reward `x` for `arm`.
    pub fn update(&mut self, arm: usize, x: f64) -> Result<()> {
        let num_arms = self.arms.len();
        let stats = self.arms.get_mut(arm).ok_or(Error::ArmOutOfRange { arm, num_arms })?;
        if !x.is_finite() {
            return Err(Error::NonFiniteReward(x));
        }
        stats.push(x);
        self.step += 1;
        Ok(())
    }

    /// Total number of recorded pulls.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn arm(&self, arm: usize) -> &ArmStats {
        &self.arms[arm]
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.arms[arm].count
    }

    pub fn counts(&self) -> Vec<u64> {
        self.arms.iter().map(|a| a.count).collect()
    }

    pub fn min_count(&self) -> u64 {
        self.arms.iter().map(|a| a.count).min().unwrap_or(0)
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.arms[arm].mean
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.mean).collect()
    }

    pub fn empirical_variance(&self, arm: usize) -> Result<f64> {
        self.check_arm(arm)?;
        self.arms[arm].variance().ok_or(Error::InsufficientSamples {
            arm,
            count: self.arms[arm].count,
            needed: 2,
        })
    }

    pub fn empirical_sigma(&self, arm: usize) -> Result<f64> {
        self.empirical_variance(arm).map(f64::sqrt)
    }

    /// Standard deviation estimate, 0 when undefined.
    pub fn sigma_or_zero(&self, arm: usize) -> f64 {
        self.arms[arm].variance().map_or(0.0, f64::sqrt)
    }

    /// Plug-in moments; deviations are floored at `sd_floor`.
    pub fn plugin_moments(&self, sd_floor: f64) -> Moments {
        Moments {
            means: self.means(),
            sds: (0..self.arms.len())
                .map(|i| self.sigma_or_zero(i).max(sd_floor))
                .collect(),
        }
    }

    /// Realized allocation `T_i / t`; uniform before the first pull.
    pub fn lambda_tilde(&self) -> Allocation {
        Allocation::from_counts(&self.counts()).unwrap_or_else(|_| Allocation::uniform(self.arms.len()))
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm >= self.arms.len() {
            return Err(Error::ArmOutOfRange {
                arm,
                num_arms: self.arms.len(),
            });
        }
        Ok(())
    }
}

/// How the confidence level is split across steps and arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaSchedule {
    /// `δ_n = δ / (4K n (n+1))`.
    #[default]
    Linear,
    /// `δ_n = δ / (4K n² (n+1))`, the variant used for the uniform bound.
    Quadratic,
}

impl DeltaSchedule {
    pub fn delta_n(self, delta: f64, num_arms: usize, n: u64) -> f64 {
        let k = num_arms as f64;
        let n = n as f64;
        match self {
            DeltaSchedule::Linear => delta / (4.0 * k * n * (n + 1.0)),
            DeltaSchedule::Quadratic => delta / (4.0 * k * n * n * (n + 1.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceRadii {
    pub eps_mu: f64,
    pub eps_sigma: f64,
    pub delta_n: f64,
}

/// Mean radius `√(log(1/δ_n)/(2T))`.
pub fn mean_radius(delta_n: f64, count: u64) -> f64 {
    ((1.0 / delta_n).ln() / (2.0 * count as f64)).sqrt()
}

/// Deviation radius `√(2 log(2/δ_n)/T)`.
pub fn sigma_radius(delta_n: f64, count: u64) -> f64 {
    (2.0 * (2.0 / delta_n).ln() / count as f64).sqrt()
}

/// Radii for `arm` at step `n`.
pub fn confidence_radii(
    stats: &EmpiricalStats,
    arm: usize,
    delta: f64,
    n: u64,
    schedule: DeltaSchedule,
) -> Result<ConfidenceRadii> {
    stats.check_arm(arm)?;
    let count = stats.count(arm);
    if count == 0 {
        return Err(Error::InsufficientSamples { arm, count, needed: 1 });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!("delta = {delta} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::InvalidParams("step n must be positive".into()));
    }
    let delta_n = schedule.delta_n(delta, stats.num_arms(), n);
    Ok(ConfidenceRadii {
        eps_mu: mean_radius(delta_n, count),
        eps_sigma: sigma_radius(delta_n, count),
        delta_n,
    })
}

/// Uniform bound on `|f(λ; ν) − f(λ; ν̂)|` over the restricted simplex:
/// `max_i √(2K log(2/δ_n) / (λ_min T_i))`.
pub fn function_error_bound(
    stats: &EmpiricalStats,
    delta: f64,
    lambda_min: f64,
    n: u64,
    schedule: DeltaSchedule,
) -> Result<f64> {
    if !(lambda_min > 0.0) {
        return Err(Error::InvalidParams(
            "the uniform function-error bound needs lambda_min > 0".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidParams("step n must be positive".into()));
    }
    let k = stats.num_arms();
    let delta_n = schedule.delta_n(delta, k, n);
    let log_term = 2.0 * k as f64 * (2.0 / delta_n).ln() / lambda_min;
    (0..k)
        .map(|arm| match stats.count(arm) {
            0 => Err(Error::InsufficientSamples {
                arm,
                count: 0,
                needed: 1,
            }),
            t => Ok((log_term / t as f64).sqrt()),
        })
        .try_fold(0.0_f64, |acc, b| b.map(|b| acc.max(b)))
}
