use crate::error::{Error, Result};
use crate::objective::{eval_f, Allocation, Moments, TradeoffParams};
use crate::solver::{self, SolveReport, DEFAULT_TOL};

/// Pseudo-regret `f* − f_w(λ̃)` with the optimum solved once.
#[derive(Debug, Clone)]
pub struct RegretEvaluator {
    moments: Moments,
    w: f64,
    optimum: SolveReport,
}

impl RegretEvaluator {
    pub fn new(moments: Moments, params: &TradeoffParams) -> Result<Self> {
        let optimum = solver::solve_allocation(&moments, params, DEFAULT_TOL)?;
        Ok(RegretEvaluator {
            moments,
            w: params.w,
            optimum,
        })
    }

    pub fn f_star(&self) -> f64 {
        self.optimum.objective_value
    }

    pub fn lambda_star(&self) -> &Allocation {
        &self.optimum.allocation
    }

    pub fn optimum(&self) -> &SolveReport {
        &self.optimum
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    pub fn regret(&self, lambda: &[f64]) -> Result<f64> {
        Ok(self.f_star() - eval_f(lambda, &self.moments, self.w)?)
    }

    /// `√n · R_n`.
    pub fn rescaled_regret(&self, lambda: &[f64], n: u64) -> Result<f64> {
        Ok((n as f64).sqrt() * self.regret(lambda)?)
    }
}

/// `f* − f_w(λ; true parameters)`.
pub fn regret(lambda: &[f64], moments: &Moments, params: &TradeoffParams) -> Result<f64> {
    RegretEvaluator::new(moments.clone(), params)?.regret(lambda)
}

/// Ranking quality of estimated means against true means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankMetrics {
    pub rel_dcg: f64,
    pub rank_err: f64,
}

/// Arms sorted by decreasing value, lowest index first on ties.
pub fn ranking(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// `DCG_π = Σ_k μ_{π(k)} / ln(k+1)` with 1-based positions `k`.
pub fn dcg(order: &[usize], mu: &[f64]) -> f64 {
    order
        .iter()
        .enumerate()
        .map(|(pos, &arm)| mu[arm] / ((pos + 2) as f64).ln())
        .sum()
}

/// RelDCG and RankErr of the ranking induced by `mu_hat`.
///
/// RelDCG is `(DCG_{π*} − DCG_{π̂}) / DCG_{π*}`; RankErr is
/// `(1/K) Σ_k |π*(k) − π̂(k)|` where `π(k)` is the (1-based) arm placed at
/// position `k`.
pub fn rank_metrics(mu_hat: &[f64], mu: &[f64]) -> Result<RankMetrics> {
    if mu_hat.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            got: mu_hat.len(),
        });
    }
    if mu.is_empty() {
        return Err(Error::InvalidParams("no arms to rank".into()));
    }
    let truth = ranking(mu);
    let estimate = ranking(mu_hat);
    let best = dcg(&truth, mu);
    let rel_dcg = (best - dcg(&estimate, mu)) / best;
    let rank_err = truth
        .iter()
        .zip(&estimate)
        .map(|(&a, &b)| (a as f64 - b as f64).abs())
        .sum::<f64>()
        / mu.len() as f64;
    Ok(RankMetrics { rel_dcg, rank_err })
}
