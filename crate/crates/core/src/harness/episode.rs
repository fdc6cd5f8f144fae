use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bandit::{BanditInstance, RngStream};
use crate::error::{Error, Result};
use crate::estimation::EmpiricalStats;
use crate::exec::{self, Execution};
use crate::objective::{Allocation, TradeoffParams};
use crate::policies::{Policy, PolicyKind, PolicyOptions};
use crate::solver::{self, DEFAULT_TOL};

/// Stream id of the policy's own randomness. Arm `i` draws its rewards from
/// stream `i`, so every policy run with one seed sees the same reward table.
pub const POLICY_STREAM: u64 = 1 << 32;

/// Steps at which allocations are recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckpointSpec {
    /// About `points` log-spaced steps in `[1, n]`.
    Geometric {
        points: usize,
    },
    Explicit {
        steps: Vec<u64>,
    },
    Every,
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        CheckpointSpec::Geometric { points: 50 }
    }
}

impl CheckpointSpec {
    /// Sorted, de-duplicated steps in `[1, horizon]`, always ending at `horizon`.
    pub fn steps(&self, horizon: u64) -> Vec<u64> {
        let mut steps: Vec<u64> = match self {
            CheckpointSpec::Every => (1..=horizon).collect(),
            CheckpointSpec::Explicit { steps } => steps.iter().copied().filter(|&s| s >= 1 && s <= horizon).collect(),
            CheckpointSpec::Geometric { points } => {
                let points = (*points).max(2);
                let top = (horizon as f64).ln();
                (0..points)
                    .map(|j| (top * j as f64 / (points - 1) as f64).exp().round() as u64)
                    .map(|s| s.clamp(1, horizon))
                    .collect()
            }
        };
        steps.push(horizon);
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

/// Everything needed to run episodes of any policy on one problem.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub instance: BanditInstance,
    pub params: TradeoffParams,
    pub options: PolicyOptions,
    pub horizon: u64,
    pub checkpoints: CheckpointSpec,
}

impl Experiment {
    pub fn new(instance: BanditInstance, params: TradeoffParams, horizon: u64) -> Result<Self> {
        params.validate_for(instance.num_arms())?;
        if horizon == 0 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        Ok(Experiment {
            instance,
            params,
            options: PolicyOptions::default(),
            horizon,
            checkpoints: CheckpointSpec::default(),
        })
    }

    pub fn with_options(mut self, options: PolicyOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: CheckpointSpec) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn run_episode(&self, kind: PolicyKind, seed: u64) -> Result<EpisodeTrace> {
        run_episode(self, kind, seed)
    }

    /// One episode per seed, returned in seed order.
    pub fn run_batch(&self, kind: PolicyKind, seeds: &[u64], execution: Execution) -> Result<Vec<EpisodeTrace>> {
        exec::map(seeds, execution, |&seed| run_episode(self, kind, seed))
            .into_iter()
            .collect()
    }
}

/// Seed of run `r` under base seed `base`.
pub fn run_seed(base: u64, run: u64) -> u64 {
    base.wrapping_add(run)
}

/// The seeds of `runs` consecutive runs.
pub fn run_seeds(base: u64, runs: usize) -> Vec<u64> {
    (0..runs as u64).map(|r| run_seed(base, r)).collect()
}

/// Full trajectory of one seeded episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub policy: PolicyKind,
    pub seed: u64,
    /// Arm pulled at steps `1..=n`.
    pub pulled: Vec<usize>,
    /// Realized allocation `T_{i,t}/t` after step `t`.
    pub lambda_tilde_checkpoints: BTreeMap<u64, Allocation>,
    /// Plug-in estimate of the optimal allocation after step `t`.
    pub lambda_hat_checkpoints: BTreeMap<u64, Allocation>,
    pub final_stats: EmpiricalStats,
    /// Steps where the policy could not solve its empirical problem.
    pub fallbacks: u64,
}

impl EpisodeTrace {
    pub fn horizon(&self) -> u64 {
        self.pulled.len() as u64
    }

    pub fn checkpoint_steps(&self) -> Vec<u64> {
        self.lambda_tilde_checkpoints.keys().copied().collect()
    }

    /// Pull counts after `step` pulls, recomputed from the arm sequence.
    pub fn counts_at(&self, step: u64, num_arms: usize) -> Vec<u64> {
        let mut counts = vec![0u64; num_arms];
        for &arm in &self.pulled[..step as usize] {
            counts[arm] += 1;
        }
        counts
    }

    pub fn final_lambda_tilde(&self) -> Allocation {
        self.final_stats.lambda_tilde()
    }
}

/// Runs `kind` for `exp.horizon` steps with rewards drawn under `seed`.
pub fn run_episode(exp: &Experiment, kind: PolicyKind, seed: u64) -> Result<EpisodeTrace> {
    let inst = &exp.instance;
    let k = inst.num_arms();
    let mut streams: Vec<RngStream> = (0..k as u64).map(|i| RngStream::new(seed, i)).collect();
    let mut policy = Policy::new(kind, k, exp.params, exp.options, RngStream::new(seed, POLICY_STREAM))?;

    let checkpoints = exp.checkpoints.steps(exp.horizon);
    let mut next_checkpoint = checkpoints.iter().copied().peekable();
    let mut pulled = Vec::with_capacity(exp.horizon as usize);
    let mut tilde = BTreeMap::new();
    let mut hat = BTreeMap::new();

    for t in 1..=exp.horizon {
        let arm = policy.select(t);
        let reward = inst.arm(arm).sample(&mut streams[arm]);
        policy.observe(arm, reward)?;
        pulled.push(arm);
        if next_checkpoint.peek() == Some(&t) {
            next_checkpoint.next();
            let stats = policy.stats();
            tilde.insert(t, stats.lambda_tilde());
            hat.insert(t, plugin_allocation(stats, &exp.params, exp.options.sd_floor));
        }
    }

    Ok(EpisodeTrace {
        policy: kind,
        seed,
        pulled,
        lambda_tilde_checkpoints: tilde,
        lambda_hat_checkpoints: hat,
        final_stats: policy.stats().clone(),
        fallbacks: policy.fallbacks(),
    })
}

/// `argmax f_w` on the empirical moments; uniform if the problem is degenerate.
pub fn plugin_allocation(stats: &EmpiricalStats, params: &TradeoffParams, sd_floor: f64) -> Allocation {
    let m = stats.plugin_moments(sd_floor);
    solver::solve(&m, params.w, params.lambda_min, DEFAULT_TOL)
        .map(|r| r.allocation)
        .unwrap_or_else(|_| Allocation::uniform(stats.num_arms()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_arm(horizon: u64) -> Experiment {
        let inst = BanditInstance::gaussian(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        Experiment::new(inst, TradeoffParams::objective(0.5, 0.0).unwrap(), horizon).unwrap()
    }

    #[test]
    fn geometric_grid() {
        let steps = CheckpointSpec::Geometric { points: 50 }.steps(10_000);
        assert_eq!(steps[0], 1);
        assert_eq!(*steps.last().unwrap(), 10_000);
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
        assert!(steps.len() > 30 && steps.len() <= 51);
        let explicit = CheckpointSpec::Explicit {
            steps: vec![50, 0, 10, 200],
        }
        .steps(100);
        assert_eq!(explicit, vec![10, 50, 100]);
        assert_eq!(CheckpointSpec::Every.steps(3), vec![1, 2, 3]);
    }

    #[test]
    fn uniform_policy_balances() {
        let trace = two_arm(10).run_episode(PolicyKind::Uniform, 1).unwrap();
        assert_eq!(&*trace.final_lambda_tilde(), &[0.5, 0.5]);
        assert_eq!(trace.horizon(), 10);
    }

    #[test]
    fn episodes_are_deterministic() {
        let exp = two_arm(500);
        for kind in PolicyKind::ALL {
            let a = exp.run_episode(kind, 77).unwrap();
            let b = exp.run_episode(kind, 77).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn checkpoints_match_counts() {
        let exp = two_arm(300).with_checkpoints(CheckpointSpec::Geometric { points: 20 });
        let trace = exp.run_episode(PolicyKind::ForcingBalance, 5).unwrap();
        assert_eq!(trace.final_stats.counts(), trace.counts_at(300, 2));
        for (&t, alloc) in &trace.lambda_tilde_checkpoints {
            let counts = trace.counts_at(t, 2);
            for (l, c) in alloc.iter().zip(counts) {
                assert_eq!(*l, c as f64 / t as f64);
            }
        }
    }

    #[test]
    fn batch_matches_single_runs() {
        let exp = two_arm(200);
        let seeds = run_seeds(10, 8);
        let seq = exp
            .run_batch(PolicyKind::ForcingBalance, &seeds, Execution::Sequential)
            .unwrap();
        let par = exp
            .run_batch(PolicyKind::ForcingBalance, &seeds, Execution::Parallel)
            .unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[3], exp.run_episode(PolicyKind::ForcingBalance, 13).unwrap());
    }
}
