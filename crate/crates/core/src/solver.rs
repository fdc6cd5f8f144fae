//! Optimal allocation `λ* = argmax f_w` over the restricted simplex.
//!
//! Stationarity gives, for every arm above the floor,
//! `wμ_i + (1−w)σ_i / (2K λ_i^{3/2}) = ν` with a shared multiplier `ν`, hence
//! `λ_i(ν) = ((1−w)σ_i / (2K(ν − wμ_i)))^{2/3}`. Arms whose `λ_i(ν)` falls
//! under `λ_min` sit on the floor. The total `Σ max(λ_i(ν), λ_min)` is
//! continuous, convex and strictly decreasing in `ν`, so the multiplier is
//! found by a bracketed Newton iteration that falls back to bisection
//! whenever a Newton step leaves the bracket.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::objective::{eval_epsilon, eval_f, eval_rho, Allocation, Moments, TradeoffParams};

/// Default tolerance on the simplex residual.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_ITERATIONS: usize = 500;

/// Largest number of arms the exhaustive grid oracle accepts.
pub const MAX_GRID_ARMS: usize = 4;

/// Smallest grid resolution accepted by the oracle.
pub const MIN_GRID_RESOLUTION: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub allocation: Allocation,
    pub objective_value: f64,
    /// Shared value of the gradient on arms above the floor.
    pub kkt_multiplier: f64,
    /// Arms clamped at `λ_min`, ascending.
    pub active_floor_set: Vec<usize>,
    pub iterations: usize,
    /// `|Σλ_i − 1| + max_i max(0, λ_min − λ_i)`.
    pub residual: f64,
    /// False when the maximizer is not unique (tied best means with no
    /// variance term to break the tie); the lowest-index maximizer is returned.
    pub unique: bool,
}

impl SolveReport {
    pub fn lambda_star_min(&self) -> f64 {
        self.allocation.min()
    }
}

/// Computes `λ*` for the given moments.
pub fn solve_allocation(m: &Moments, p: &TradeoffParams, tol: f64) -> Result<SolveReport> {
    solve(m, p.w, p.lambda_min, tol)
}

/// Same as [`solve_allocation`] taking the weight and floor directly.
pub fn solve(m: &Moments, w: f64, lambda_min: f64, tol: f64) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParams(format!("w = {w} outside [0, 1]")));
    }
    let k = m.num_arms();
    if k < 2 {
        return Err(Error::TooFewArms(k));
    }
    if !(lambda_min >= 0.0) || lambda_min * k as f64 > 1.0 + 1e-12 {
        return Err(Error::InvalidParams(format!(
            "lambda_min = {lambda_min} outside [0, 1/K] for K = {k}"
        )));
    }

    let mean_max = m.mean_max();
    let nu_floor = w * mean_max;

    if lambda_min * k as f64 >= 1.0 - 1e-15 {
        let weights = vec![1.0 / k as f64; k];
        return Ok(finish(m, w, lambda_min, weights, (0..k).collect(), nu_floor, 0, true));
    }

    let k_f = k as f64;
    let coef: Vec<f64> = if w < 1.0 {
        m.sds.iter().map(|s| (1.0 - w) * s / (2.0 * k_f)).collect()
    } else {
        vec![0.0; k]
    };

    // Linear objective: floors everywhere, the rest on the best mean.
    if coef.iter().all(|c| *c == 0.0) {
        let best = argmax_lowest(&m.means);
        let ties = m.means.iter().filter(|&&mu| mu == mean_max).count();
        let mut weights = vec![lambda_min; k];
        weights[best] += 1.0 - lambda_min * k_f;
        let floor = (0..k).filter(|&i| i != best).collect();
        let unique = w > 0.0 && ties == 1;
        return Ok(finish(m, w, lambda_min, weights, floor, nu_floor, 0, unique));
    }

    // gap_i = ν_floor − wμ_i ≥ 0; the root is searched in u = ν − ν_floor.
    let gap: Vec<f64> = m.means.iter().map(|mu| (nu_floor - w * mu).max(0.0)).collect();
    let free_at = |u: f64, i: usize| -> f64 {
        if coef[i] == 0.0 {
            0.0
        } else {
            (coef[i] / (u + gap[i])).powf(2.0 / 3.0)
        }
    };
    let total = |u: f64| -> (f64, f64) {
        let mut sum = 0.0;
        let mut deriv = 0.0;
        for (i, g) in gap.iter().enumerate() {
            let l = free_at(u, i);
            if l > lambda_min {
                sum += l;
                deriv -= 2.0 / 3.0 * l / (u + g);
            } else {
                sum += lambda_min;
            }
        }
        (sum, deriv)
    };

    // When no variance-carrying arm attains the best mean, the multiplier may
    // sit at ν_floor with the slack absorbed by zero-variance best arms.
    let blows_up = (0..k).any(|i| coef[i] > 0.0 && gap[i] == 0.0);
    if !blows_up {
        let (s0, _) = total(0.0);
        if s0 <= 1.0 + tol {
            let mut weights: Vec<f64> = (0..k).map(|i| free_at(0.0, i).max(lambda_min)).collect();
            let tops: Vec<usize> = (0..k).filter(|&i| coef[i] == 0.0 && gap[i] == 0.0).collect();
            let best = tops[0];
            weights[best] += 1.0 - s0;
            let floor = (0..k).filter(|&i| i != best && free_at(0.0, i) <= lambda_min).collect();
            let unique = tops.len() == 1;
            return Ok(finish(m, w, lambda_min, weights, floor, nu_floor, 0, unique));
        }
    }

    // Bracket [lo, hi] in u with total(lo) > 1 > total(hi).
    let mut lo = 0.0_f64;
    let mut hi = coef.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    while total(hi).0 >= 1.0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations > 2000 || !hi.is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: total(hi).0 - 1.0,
            });
        }
    }

    let mut u = hi;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let (s, ds) = total(u);
        let g = s - 1.0;
        residual = g.abs();
        if residual <= tol * 1e-3 {
            break;
        }
        if g > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let newton = if ds < 0.0 { u - g / ds } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == u || hi - lo <= f64::EPSILON * hi {
            break;
        }
        u = next;
    }

    let raw: Vec<f64> = (0..k).map(|i| free_at(u, i)).collect();
    let floor: Vec<usize> = (0..k).filter(|&i| raw[i] <= lambda_min).collect();
    let mut weights: Vec<f64> = raw.iter().map(|l| l.max(lambda_min)).collect();
    // Absorb the remaining root-finding error into the free arms.
    let floor_mass = floor.len() as f64 * lambda_min;
    let free_mass: f64 = (0..k).filter(|i| !floor.contains(i)).map(|i| weights[i]).sum();
    if free_mass > 0.0 {
        let scale = (1.0 - floor_mass) / free_mass;
        for i in (0..k).filter(|i| !floor.contains(i)) {
            weights[i] *= scale;
        }
    }
    let report = finish(m, w, lambda_min, weights, floor, nu_floor + u, iterations, true);
    if report.residual > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual: report.residual.max(residual),
        });
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    m: &Moments,
    w: f64,
    lambda_min: f64,
    weights: Vec<f64>,
    active_floor_set: Vec<usize>,
    kkt_multiplier: f64,
    iterations: usize,
    unique: bool,
) -> SolveReport {
    let sum: f64 = weights.iter().sum();
    let below = weights.iter().map(|l| (lambda_min - l).max(0.0)).fold(0.0, f64::max);
    let residual = (sum - 1.0).abs() + below;
    let objective_value = eval_f(&weights, m, w).expect("lengths checked");
    SolveReport {
        allocation: Allocation::from_raw(weights),
        objective_value,
        kkt_multiplier,
        active_floor_set,
        iterations,
        residual,
        unique,
    }
}

fn argmax_lowest(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Best point of the grid `{j / resolution}` inside the restricted simplex.
///
/// Exhaustive, so limited to [`MAX_GRID_ARMS`] arms. Ties keep the first
/// point in lexicographic order of the grid indices.
pub fn brute_force_allocation(m: &Moments, p: &TradeoffParams, resolution: usize) -> Result<Allocation> {
    let k = m.num_arms();
    if k > MAX_GRID_ARMS {
        return Err(Error::GridTooLarge {
            max: MAX_GRID_ARMS,
            got: k,
        });
    }
    if k < 2 {
        return Err(Error::TooFewArms(k));
    }
    if resolution < MIN_GRID_RESOLUTION {
        return Err(Error::GridTooCoarse {
            min: MIN_GRID_RESOLUTION,
            got: resolution,
        });
    }
    let n = resolution;
    let j_min = (p.lambda_min * n as f64 - 1e-9).ceil().max(0.0) as usize;
    if j_min * k > n {
        return Err(Error::InvalidParams(format!(
            "no grid point of resolution {n} satisfies lambda_min = {}",
            p.lambda_min
        )));
    }
    let mut counts = vec![0usize; k];
    let mut point = vec![0.0; k];
    let mut best = (f64::NEG_INFINITY, vec![0usize; k]);
    let mut found = false;
    scan(0, n, j_min, &mut counts, &mut |c| {
        for (x, &j) in point.iter_mut().zip(c) {
            *x = j as f64 / n as f64;
        }
        let f = eval_f(&point, m, p.w).expect("lengths checked");
        if !found || f > best.0 {
            best = (f, c.to_vec());
            found = true;
        }
    });
    let weights = best.1.iter().map(|&j| j as f64 / n as f64).collect();
    Ok(Allocation::from_raw(weights))
}

fn scan(pos: usize, remaining: usize, j_min: usize, counts: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    let k = counts.len();
    if pos == k - 1 {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    let rest = k - 1 - pos;
    if remaining < j_min * (rest + 1) {
        return;
    }
    for j in j_min..=(remaining - j_min * rest) {
        counts[pos] = j;
        scan(pos + 1, remaining - j, j_min, counts, visit);
    }
}

/// One point of the reward/error frontier.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub w: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub allocation: Allocation,
}

/// `(ρ(λ*(w)), ε(λ*(w)))`.
pub fn pareto_point(m: &Moments, w: f64, lambda_min: f64) -> Result<ParetoPoint> {
    let report = solve(m, w, lambda_min, DEFAULT_TOL)?;
    let rho = eval_rho(&report.allocation, m)?;
    let epsilon = eval_epsilon(&report.allocation, m)?;
    Ok(ParetoPoint {
        w,
        rho,
        epsilon,
        allocation: report.allocation,
    })
}

/// Frontier over a list of weights, in input order.
pub fn pareto_sweep(m: &Moments, ws: &[f64], lambda_min: f64, execution: Execution) -> Result<Vec<ParetoPoint>> {
    exec::map(ws, execution, |&w| pareto_point(m, w, lambda_min))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::BanditInstance;
    use crate::objective::grad_f;

    fn gaussian(means: &[f64], vars: &[f64]) -> Moments {
        BanditInstance::gaussian(means, vars).unwrap().moments()
    }

    fn five_arm() -> Moments {
        gaussian(&[1.0, 1.5, 2.0, 4.0, 5.0], &[0.05, 0.1, 0.2, 4.0, 0.5])
    }

    #[test]
    fn five_arm_table() {
        let r = solve(&five_arm(), 0.9, 0.0, DEFAULT_TOL).unwrap();
        let expected = [0.0073, 0.01, 0.014, 0.0794, 0.8893];
        for (got, want) in r.allocation.iter().zip(expected) {
            assert!((got - want).abs() <= 0.005, "{got} vs {want}");
        }
        assert!(r.residual <= 1e-10);
        assert!(r.active_floor_set.is_empty());
        assert!(r.unique);
    }

    #[test]
    fn two_arm_table() {
        let cases = [
            ([1.5, 1.0], [1.0, 1.0], 0.57),
            ([2.0, 1.0], [1.0, 2.0], 0.56),
            ([1.1, 1.0], [0.1, 2.0], 0.28),
            ([3.0, 1.0], [0.1, 0.1], 0.85),
        ];
        for (mu, var, want) in cases {
            let r = solve(&gaussian(&mu, &var), 0.4, 0.0, DEFAULT_TOL).unwrap();
            assert!((r.allocation[0] - want).abs() <= 0.01, "{mu:?}: {}", r.allocation[0]);
        }
    }

    #[test]
    fn equal_arms_are_uniform() {
        let m = gaussian(&[2.0; 4], &[1.5; 4]);
        for w in [0.0, 0.3, 0.9] {
            let r = solve(&m, w, 0.0, DEFAULT_TOL).unwrap();
            for l in r.allocation.iter() {
                assert!((l - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pure_error_is_sd_power_two_thirds() {
        let m = gaussian(&[0.0, 3.0], &[1.0, 64.0]);
        let r = solve(&m, 0.0, 0.0, DEFAULT_TOL).unwrap();
        assert!((r.allocation[0] - 0.2).abs() < 1e-12);
        assert!((r.allocation[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn floor_is_respected_and_kkt_holds() {
        let m = five_arm();
        let r = solve(&m, 0.9, 0.05, DEFAULT_TOL).unwrap();
        assert!(r.residual <= 1e-10);
        assert_eq!(r.active_floor_set, vec![0, 1, 2]);
        let g = grad_f(&r.allocation, &m, 0.9).unwrap();
        for (i, gi) in g.iter().enumerate() {
            if r.active_floor_set.contains(&i) {
                assert!(*gi <= r.kkt_multiplier + 1e-8);
            } else {
                assert!((gi - r.kkt_multiplier).abs() <= 1e-8 * r.kkt_multiplier.abs().max(1.0));
            }
        }
    }

    #[test]
    fn reward_only_picks_best_mean() {
        let m = gaussian(&[1.0, 3.0, 2.0], &[1.0, 1.0, 1.0]);
        let r = solve(&m, 1.0, 0.0, DEFAULT_TOL).unwrap();
        assert_eq!(&*r.allocation, &[0.0, 1.0, 0.0]);
        assert!(r.unique);
        let tied = gaussian(&[3.0, 3.0], &[1.0, 1.0]);
        let r = solve(&tied, 1.0, 0.0, DEFAULT_TOL).unwrap();
        assert_eq!(&*r.allocation, &[1.0, 0.0]);
        assert!(!r.unique);
        let r = solve(&m, 1.0, 0.1, DEFAULT_TOL).unwrap();
        assert!((r.allocation[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_best_arm_absorbs_slack() {
        // Arm 0 has the best mean and no variance: the others keep their
        // stationary share, arm 0 takes the rest.
        let m = gaussian(&[5.0, 1.0, 1.0], &[0.0, 1.0, 1.0]);
        let r = solve(&m, 0.5, 0.0, DEFAULT_TOL).unwrap();
        let c = 0.5 * 1.0 / 6.0;
        let share = (c / (2.5 - 0.5_f64)).powf(2.0 / 3.0);
        assert!((r.allocation[1] - share).abs() < 1e-12);
        assert!((r.allocation[0] - (1.0 - 2.0 * share)).abs() < 1e-12);
        // Zero-variance arm that is not the best gets nothing.
        let m = gaussian(&[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0]);
        let r = solve(&m, 0.5, 0.0, DEFAULT_TOL).unwrap();
        assert_eq!(r.allocation[0], 0.0);
        assert!((r.allocation[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bad_arguments() {
        let m = five_arm();
        assert!(matches!(solve(&m, 0.5, 0.0, 0.0), Err(Error::InvalidTolerance(_))));
        assert!(solve(&m, 0.5, 0.3, DEFAULT_TOL).is_err());
        let p = TradeoffParams::objective(0.5, 0.0).unwrap();
        assert!(matches!(
            brute_force_allocation(&m, &p, 100),
            Err(Error::GridTooLarge { .. })
        ));
        let two = gaussian(&[1.0, 2.0], &[1.0, 1.0]);
        assert!(brute_force_allocation(&two, &p, 5).is_err());
    }

    #[test]
    fn grid_oracle_examples() {
        let m = gaussian(&[1.0, 2.0], &[1.0, 1.0]);
        let p = TradeoffParams::objective(0.0, 0.0).unwrap();
        assert_eq!(&*brute_force_allocation(&m, &p, 1000).unwrap(), &[0.5, 0.5]);
        let sym = gaussian(&[1.0, 1.0], &[2.0, 2.0]);
        let p = TradeoffParams::objective(0.7, 0.0).unwrap();
        assert_eq!(&*brute_force_allocation(&sym, &p, 10).unwrap(), &[0.5, 0.5]);
    }

    #[test]
    fn pareto_endpoints() {
        let m = five_arm();
        let p0 = pareto_point(&m, 0.0, 0.0).unwrap();
        assert!((p0.allocation[3] - 0.41).abs() <= 0.01);
        assert!((p0.allocation[4] - 0.20).abs() <= 0.01);
        let p95 = pareto_point(&m, 0.95, 0.0).unwrap();
        assert!((p95.allocation[3] - 0.0484).abs() <= 0.005);
        assert!((p95.allocation[4] - 0.9326).abs() <= 0.005);
        let p1 = pareto_point(&m, 1.0, 0.0).unwrap();
        assert_eq!(p1.rho, 5.0);
        assert_eq!(&*p1.allocation, &*Allocation::vertex(5, 4));
    }
}
