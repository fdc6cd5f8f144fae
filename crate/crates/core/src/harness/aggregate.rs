use crate::bandit::BanditInstance;
use crate::error::{Error, Result};
use crate::objective::{eval_epsilon, eval_rho, linf, TradeoffParams};
use crate::policies::PolicyKind;

use super::episode::EpisodeTrace;
use super::metrics::{rank_metrics, RegretEvaluator};

/// Per-checkpoint mean and 0.95-quantile of one metric across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurve {
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub q95: Vec<f64>,
    pub runs: usize,
}

impl MetricCurve {
    /// Builds a curve from `values[checkpoint][run]`.
    fn from_columns(steps: &[u64], values: Vec<Vec<f64>>) -> Self {
        let runs = values.first().map_or(0, Vec::len);
        let mut mean = Vec::with_capacity(values.len());
        let mut q95 = Vec::with_capacity(values.len());
        for mut column in values {
            mean.push(column.iter().sum::<f64>() / column.len() as f64);
            q95.push(nearest_rank_quantile(&mut column, 0.95));
        }
        MetricCurve {
            steps: steps.to_vec(),
            mean,
            q95,
            runs,
        }
    }

    /// Mean at `step`, if it is a checkpoint.
    pub fn mean_at(&self, step: u64) -> Option<f64> {
        self.steps.iter().position(|&s| s == step).map(|i| self.mean[i])
    }

    pub fn q95_at(&self, step: u64) -> Option<f64> {
        self.steps.iter().position(|&s| s == step).map(|i| self.q95[i])
    }

    pub fn last_mean(&self) -> f64 {
        *self.mean.last().expect("non-empty curve")
    }
}

/// Nearest-rank empirical quantile: the `⌈qN⌉`-th smallest value.
pub fn nearest_rank_quantile(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    values.sort_by(f64::total_cmp);
    let rank = (q * values.len() as f64).ceil() as usize;
    values[rank.clamp(1, values.len()) - 1]
}

/// Aggregated curves for one policy.
#[derive(Debug, Clone)]
pub struct AggregateReport {
    pub policy: PolicyKind,
    pub runs: usize,
    pub regret: MetricCurve,
    pub rescaled_regret: MetricCurve,
    /// `‖λ̃ − λ*‖∞`.
    pub tilde_error: MetricCurve,
    /// `‖λ̂ − λ*‖∞`.
    pub hat_error: MetricCurve,
    /// One curve per arm.
    pub lambda_tilde: Vec<MetricCurve>,
    pub lambda_hat: Vec<MetricCurve>,
    pub rho: MetricCurve,
    pub epsilon: MetricCurve,
    /// Run-mean ranking quality of the final mean estimates.
    pub rel_dcg: f64,
    pub rank_err: f64,
    pub lambda_star: Vec<f64>,
}

impl AggregateReport {
    /// Named scalar curves, in output order.
    pub fn curves(&self) -> Vec<(&'static str, &MetricCurve)> {
        vec![
            ("regret", &self.regret),
            ("rescaled_regret", &self.rescaled_regret),
            ("lambda_tilde_error", &self.tilde_error),
            ("lambda_hat_error", &self.hat_error),
            ("rho", &self.rho),
            ("epsilon", &self.epsilon),
        ]
    }
}

/// Reduces traces of a single policy into metric curves.
///
/// Traces are reduced in `(seed, policy)` order whatever order they arrive
/// in, so the result does not depend on scheduling.
pub fn aggregate(traces: &[EpisodeTrace], inst: &BanditInstance, params: &TradeoffParams) -> Result<AggregateReport> {
    let evaluator = RegretEvaluator::new(inst.moments(), params)?;
    aggregate_with(traces, inst, &evaluator)
}

pub fn aggregate_with(
    traces: &[EpisodeTrace],
    inst: &BanditInstance,
    evaluator: &RegretEvaluator,
) -> Result<AggregateReport> {
    let first = traces.first().ok_or(Error::EmptyTraces)?;
    let policy = first.policy;
    if let Some(other) = traces.iter().find(|t| t.policy != policy) {
        return Err(Error::InvalidParams(format!(
            "cannot aggregate {} together with {}",
            policy, other.policy
        )));
    }
    let steps = first.checkpoint_steps();
    if traces.iter().any(|t| t.checkpoint_steps() != steps) {
        return Err(Error::InvalidParams("traces have different checkpoint grids".into()));
    }
    let mut order: Vec<&EpisodeTrace> = traces.iter().collect();
    order.sort_by_key(|t| (t.seed, t.policy));

    let k = inst.num_arms();
    let m = evaluator.moments();
    let star = evaluator.lambda_star().to_vec();
    let runs = order.len();
    let columns = || vec![Vec::with_capacity(runs); steps.len()];
    let (mut regret, mut rescaled, mut tilde_err, mut hat_err, mut rho, mut eps) =
        (columns(), columns(), columns(), columns(), columns(), columns());
    let mut tilde_arm: Vec<Vec<Vec<f64>>> = (0..k).map(|_| columns()).collect();
    let mut hat_arm: Vec<Vec<Vec<f64>>> = (0..k).map(|_| columns()).collect();

    for trace in &order {
        for (c, &step) in steps.iter().enumerate() {
            let tilde = &trace.lambda_tilde_checkpoints[&step];
            let hat = &trace.lambda_hat_checkpoints[&step];
            let r = evaluator.regret(tilde)?;
            regret[c].push(r);
            rescaled[c].push((step as f64).sqrt() * r);
            tilde_err[c].push(linf(tilde, &star));
            hat_err[c].push(linf(hat, &star));
            rho[c].push(eval_rho(tilde, m)?);
            eps[c].push(eval_epsilon(tilde, m)?);
            for i in 0..k {
                tilde_arm[i][c].push(tilde[i]);
                hat_arm[i][c].push(hat[i]);
            }
        }
    }

    let mu = inst.means();
    let mut rel_dcg = 0.0;
    let mut rank_err = 0.0;
    for trace in &order {
        let r = rank_metrics(&trace.final_stats.means(), &mu)?;
        rel_dcg += r.rel_dcg;
        rank_err += r.rank_err;
    }

    let curve = |v| MetricCurve::from_columns(&steps, v);
    Ok(AggregateReport {
        policy,
        runs,
        regret: curve(regret),
        rescaled_regret: curve(rescaled),
        tilde_error: curve(tilde_err),
        hat_error: curve(hat_err),
        lambda_tilde: tilde_arm.into_iter().map(curve).collect(),
        lambda_hat: hat_arm.into_iter().map(curve).collect(),
        rho: curve(rho),
        epsilon: curve(eps),
        rel_dcg: rel_dcg / runs as f64,
        rank_err: rank_err / runs as f64,
        lambda_star: star,
    })
}
