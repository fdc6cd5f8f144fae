//! CSV writers. Reals are written with 17 significant digits.

use std::io::{self, Write};

use crate::objective::{eval_epsilon, eval_rho, Moments};
use crate::solver::{ParetoPoint, SolveReport};

use super::aggregate::{AggregateReport, MetricCurve};
use super::diagnostics::PhaseDiagnostics;

/// Scientific notation with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// `step,mean,q95,runs`.
pub fn write_curve<W: Write>(out: &mut W, curve: &MetricCurve) -> io::Result<()> {
    writeln!(out, "step,mean,q95,runs")?;
    for ((step, mean), q95) in curve.steps.iter().zip(&curve.mean).zip(&curve.q95) {
        writeln!(out, "{step},{},{},{}", fmt_real(*mean), fmt_real(*q95), curve.runs)?;
    }
    Ok(())
}

/// `step,arm,lambda_tilde_mean,lambda_hat_mean`, arms numbered from 1.
pub fn write_allocations<W: Write>(out: &mut W, report: &AggregateReport) -> io::Result<()> {
    writeln!(out, "step,arm,lambda_tilde_mean,lambda_hat_mean")?;
    let steps = &report.regret.steps;
    for (c, step) in steps.iter().enumerate() {
        for (arm, (tilde, hat)) in report.lambda_tilde.iter().zip(&report.lambda_hat).enumerate() {
            writeln!(
                out,
                "{step},{},{},{}",
                arm + 1,
                fmt_real(tilde.mean[c]),
                fmt_real(hat.mean[c])
            )?;
        }
    }
    Ok(())
}

/// `w,rho,epsilon,lambda_star_1..K`.
pub fn write_pareto<W: Write>(out: &mut W, points: &[ParetoPoint]) -> io::Result<()> {
    let k = points.first().map_or(0, |p| p.allocation.len());
    let header: Vec<String> = (1..=k).map(|i| format!("lambda_star_{i}")).collect();
    writeln!(out, "w,rho,epsilon,{}", header.join(","))?;
    for p in points {
        let lambdas: Vec<String> = p.allocation.iter().map(|l| fmt_real(*l)).collect();
        writeln!(
            out,
            "{},{},{},{}",
            fmt_real(p.w),
            fmt_real(p.rho),
            fmt_real(p.epsilon),
            lambdas.join(",")
        )?;
    }
    Ok(())
}

/// `arm,mean,sd,lambda_star,at_floor`, arms numbered from 1.
pub fn write_solution<W: Write>(out: &mut W, m: &Moments, report: &SolveReport) -> io::Result<()> {
    writeln!(out, "arm,mean,sd,lambda_star,at_floor")?;
    for (i, l) in report.allocation.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            i + 1,
            fmt_real(m.means[i]),
            fmt_real(m.sds[i]),
            fmt_real(*l),
            report.active_floor_set.contains(&i)
        )?;
    }
    Ok(())
}

/// One row per policy with horizon values and run-mean ranking metrics.
pub fn write_summary<W: Write>(out: &mut W, reports: &[AggregateReport]) -> io::Result<()> {
    writeln!(
        out,
        "policy,runs,regret,rescaled_regret,lambda_tilde_error,rho,epsilon,rel_dcg,rank_err"
    )?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.policy,
            r.runs,
            fmt_real(r.regret.last_mean()),
            fmt_real(r.rescaled_regret.last_mean()),
            fmt_real(r.tilde_error.last_mean()),
            fmt_real(r.rho.last_mean()),
            fmt_real(r.epsilon.last_mean()),
            fmt_real(r.rel_dcg),
            fmt_real(r.rank_err)
        )?;
    }
    Ok(())
}

/// `key = value` lines for a diagnostics record.
pub fn write_diagnostics<W: Write>(out: &mut W, d: &PhaseDiagnostics) -> io::Result<()> {
    let opt = |x: Option<f64>| x.map_or_else(|| "\"undefined\"".to_string(), fmt_real);
    writeln!(out, "num_arms = {}", d.num_arms)?;
    writeln!(out, "eta = {}", fmt_real(d.eta))?;
    writeln!(out, "n0 = {}", fmt_real(d.n0))?;
    writeln!(out, "n0_ceil = {}", d.n0_ceil)?;
    writeln!(out, "alpha = {}", opt(d.alpha))?;
    writeln!(out, "beta = {}", opt(d.beta))?;
    writeln!(out, "lambda_star_min = {}", opt(d.lambda_star_min))?;
    writeln!(out, "n2_coefficient = {}", opt(d.n2_coefficient))
}

/// `(ρ, ε)` of an arbitrary allocation, for ad-hoc reporting.
pub fn reward_error(lambda: &[f64], m: &Moments) -> (f64, f64) {
    (
        eval_rho(lambda, m).unwrap_or(f64::NAN),
        eval_epsilon(lambda, m).unwrap_or(f64::NAN),
    )
}
