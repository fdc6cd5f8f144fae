//! The reward/estimation-error tradeoff objective over allocations.
//!
//! For an allocation `λ` on the simplex, the average reward is `Σ λ_i μ_i`,
//! the estimation error is `(1/K) Σ σ_i / √λ_i` and the tradeoff is
//! `f_w(λ) = w·ρ(λ) − (1−w)·ε(λ)`. Everything here works with standard
//! deviations; variances only appear when building [`Moments`] from a model.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::bandit::BanditInstance;
use crate::error::{Error, Result};

/// Tolerance on `Σ λ_i = 1` accepted by [`Allocation::new`].
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Per-arm means and standard deviations, true or estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Moments {
    pub fn new(means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        if means.len() != sds.len() {
            return Err(Error::LengthMismatch {
                expected: means.len(),
                got: sds.len(),
            });
        }
        if let Some(s) = sds.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "standard deviation {s} is not a finite non-negative number"
            )));
        }
        if let Some(m) = means.iter().find(|m| !m.is_finite()) {
            return Err(Error::InvalidParams(format!("mean {m} is not finite")));
        }
        Ok(Moments { means, sds })
    }

    pub fn from_instance(inst: &BanditInstance) -> Self {
        Moments {
            means: inst.means(),
            sds: inst.arms().iter().map(|a| a.sd()).collect(),
        }
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn sd_min(&self) -> f64 {
        self.sds.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sd_max(&self) -> f64 {
        self.sds.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_max(&self) -> f64 {
        self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Moments {
            means: self.means.iter().map(|m| m * c).collect(),
            sds: self.sds.iter().map(|s| s * c).collect(),
        }
    }

    fn check_len(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.num_arms() {
            return Err(Error::LengthMismatch {
                expected: self.num_arms(),
                got: lambda.len(),
            });
        }
        Ok(())
    }
}

impl From<&BanditInstance> for Moments {
    fn from(inst: &BanditInstance) -> Self {
        Moments::from_instance(inst)
    }
}

/// A point of the (possibly restricted) probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(Vec<f64>);

impl Allocation {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::restricted(weights, 0.0)
    }

    /// Allocation with every component at least `lambda_min`.
    pub fn restricted(weights: Vec<f64>, lambda_min: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidAllocation("empty allocation".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < lambda_min)
        {
            return Err(Error::InvalidAllocation(format!(
                "component {i} = {w} is below the floor {lambda_min}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidAllocation(format!("components sum to {sum}")));
        }
        Ok(Allocation(weights))
    }

    /// Skips validation; callers guarantee the simplex invariants.
    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        Allocation(weights)
    }

    pub fn uniform(k: usize) -> Self {
        Allocation(vec![1.0 / k as f64; k])
    }

    /// All mass on arm `i`.
    pub fn vertex(k: usize, i: usize) -> Self {
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        Allocation(w)
    }

    /// Empirical frequencies `T_i / t`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidAllocation("no pulls recorded".into()));
        }
        let t = total as f64;
        Ok(Allocation(counts.iter().map(|&c| c as f64 / t).collect()))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn linf_distance(&self, other: &[f64]) -> f64 {
        linf(&self.0, other)
    }
}

impl Deref for Allocation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Allocation {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn l2_squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Weight, floor, forcing strength and confidence level of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffParams {
    pub w: f64,
    pub lambda_min: f64,
    pub eta: f64,
    pub delta: f64,
}

impl Default for TradeoffParams {
    fn default() -> Self {
        TradeoffParams {
            w: 0.5,
            lambda_min: 0.0,
            eta: 1.0,
            delta: 0.05,
        }
    }
}

impl TradeoffParams {
    pub fn new(w: f64, lambda_min: f64, eta: f64, delta: f64) -> Result<Self> {
        let p = TradeoffParams {
            w,
            lambda_min,
            eta,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters relevant to the objective only; `eta` and `delta` defaulted.
    pub fn objective(w: f64, lambda_min: f64) -> Result<Self> {
        Self::new(w, lambda_min, 1.0, 0.05)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::InvalidParams(format!("w = {} outside [0, 1]", self.w)));
        }
        if !(self.lambda_min >= 0.0 && self.lambda_min <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "lambda_min = {} outside [0, 1]",
                self.lambda_min
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParams(format!("eta = {} must be positive", self.eta)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParams(format!("delta = {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }

    /// Validation that also needs the number of arms (`K·λ_min ≤ 1`).
    pub fn validate_for(&self, k: usize) -> Result<()> {
        self.validate()?;
        if self.lambda_min * k as f64 > 1.0 + SIMPLEX_TOL {
            return Err(Error::InvalidParams(format!(
                "lambda_min = {} exceeds 1/K for K = {k}",
                self.lambda_min
            )));
        }
        Ok(())
    }
}

/// Strong-concavity and smoothness moduli of `f_w` on the restricted simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityConstants {
    pub alpha: f64,
    pub beta: f64,
}

/// Average reward `Σ λ_i μ_i`.
pub fn eval_rho(lambda: &[f64], m: &Moments) -> Result<f64> {
    m.check_len(lambda)?;
    Ok(lambda.iter().zip(&m.means).map(|(l, mu)| l * mu).sum())
}

/// Average estimation error `(1/K) Σ σ_i / √λ_i`.
///
/// Zero-deviation arms contribute nothing, even at `λ_i = 0`; a zero
/// component carrying positive deviation makes the error infinite.
pub fn eval_epsilon(lambda: &[f64], m: &Moments) -> Result<f64> {
    m.check_len(lambda)?;
    let k = m.num_arms() as f64;
    let mut total = 0.0;
    for (l, s) in lambda.iter().zip(&m.sds) {
        if *s == 0.0 {
            continue;
        }
        if *l <= 0.0 {
            return Ok(f64::INFINITY);
        }
        total += s / l.sqrt();
    }
    Ok(total / k)
}

/// Tradeoff objective; `-∞` when the error term is infinite and `w < 1`.
pub fn eval_f(lambda: &[f64], m: &Moments, w: f64) -> Result<f64> {
    let rho = eval_rho(lambda, m)?;
    if w >= 1.0 {
        return Ok(w * rho);
    }
    let eps = eval_epsilon(lambda, m)?;
    if eps.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(w * rho - (1.0 - w) * eps)
}

/// `∂f/∂λ_i = wμ_i + (1−w)σ_i / (2K λ_i^{3/2})`.
pub fn grad_f(lambda: &[f64], m: &Moments, w: f64) -> Result<Vec<f64>> {
    m.check_len(lambda)?;
    let k = m.num_arms() as f64;
    let c = (1.0 - w) / (2.0 * k);
    lambda
        .iter()
        .zip(m.means.iter().zip(&m.sds))
        .enumerate()
        .map(|(i, (&l, (&mu, &s)))| {
            if s == 0.0 || w >= 1.0 {
                Ok(w * mu)
            } else if l <= 0.0 {
                Err(Error::ZeroAllocation { arm: i })
            } else {
                Ok(w * mu + c * s / (l * l.sqrt()))
            }
        })
        .collect()
}

/// Diagonal of the Hessian of `f`, `−3(1−w)σ_i / (4K λ_i^{5/2})`.
/// The Hessian is diagonal since `f` is separable.
pub fn hessian_diag(lambda: &[f64], m: &Moments, w: f64) -> Result<Vec<f64>> {
    m.check_len(lambda)?;
    let k = m.num_arms() as f64;
    let c = 3.0 * (1.0 - w) / (4.0 * k);
    lambda
        .iter()
        .zip(&m.sds)
        .enumerate()
        .map(|(i, (&l, &s))| {
            if s == 0.0 || w >= 1.0 {
                Ok(0.0)
            } else if l <= 0.0 {
                Err(Error::ZeroAllocation { arm: i })
            } else {
                Ok(-c * s / l.powf(2.5))
            }
        })
        .collect()
}

/// Closed-form strong-concavity and smoothness moduli.
pub fn concavity_constants(m: &Moments, w: f64, lambda_min: f64) -> Result<ConcavityConstants> {
    let sd_min = m.sd_min();
    if !(sd_min > 0.0) {
        return Err(Error::ConstantsUndefined("smallest deviation is zero".into()));
    }
    if !(lambda_min > 0.0) {
        return Err(Error::ConstantsUndefined("lambda_min is zero".into()));
    }
    if !(w < 1.0) {
        return Err(Error::ConstantsUndefined("w = 1 removes the error term".into()));
    }
    let k = m.num_arms() as f64;
    let base = 3.0 * (1.0 - w) / (4.0 * k);
    Ok(ConcavityConstants {
        alpha: base * sd_min,
        beta: base * m.sd_max() / lambda_min.powf(2.5),
    })
}
