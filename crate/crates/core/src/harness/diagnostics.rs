use crate::objective::{concavity_constants, Moments, TradeoffParams};
use crate::solver::{self, DEFAULT_TOL};

/// Theory-side quantities logged next to every experiment. Informational
/// only: the constants behind them are loose.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagnostics {
    pub num_arms: usize,
    pub eta: f64,
    /// End of the guaranteed forcing phase, `K(Kη² + η√K + 1)`.
    pub n0: f64,
    pub n0_ceil: u64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda_star_min: Option<f64>,
    /// Coefficient of `log²(1/δ_n)` in the second-phase threshold
    /// `4⁸ K¹⁰ / ((λ*_min)⁸ α⁴ λ_min²)`.
    pub n2_coefficient: Option<f64>,
}

/// `K(Kη² + η√K + 1)`.
pub fn forcing_phase_end(num_arms: usize, eta: f64) -> f64 {
    let k = num_arms as f64;
    k * (k * eta * eta + eta * k.sqrt() + 1.0)
}

pub fn phase_diagnostics(m: &Moments, params: &TradeoffParams) -> PhaseDiagnostics {
    let k = m.num_arms();
    let n0 = forcing_phase_end(k, params.eta);
    let constants = concavity_constants(m, params.w, params.lambda_min).ok();
    let lambda_star_min = solver::solve_allocation(m, params, DEFAULT_TOL)
        .ok()
        .map(|r| r.lambda_star_min());
    let n2_coefficient = match (constants, lambda_star_min) {
        (Some(c), Some(ls)) if ls > 0.0 => {
            Some(4f64.powi(8) * (k as f64).powi(10) / (ls.powi(8) * c.alpha.powi(4) * params.lambda_min.powi(2)))
        }
        _ => None,
    };
    PhaseDiagnostics {
        num_arms: k,
        eta: params.eta,
        n0,
        n0_ceil: n0.ceil() as u64,
        alpha: constants.map(|c| c.alpha),
        beta: constants.map(|c| c.beta),
        lambda_star_min,
        n2_coefficient,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forcing_phase_arithmetic() {
        let n0 = forcing_phase_end(5, 1.0);
        assert!((n0 - 5.0 * (6.0 + 5f64.sqrt())).abs() < 1e-12);
        assert!((n0 - 41.18).abs() < 0.01);
        let half = forcing_phase_end(2, 0.5);
        assert!((half - 2.0 * (1.5 + 0.5 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn report_fields() {
        let m = Moments::new(vec![1.0, 1.5, 2.0, 4.0, 5.0], vec![0.3, 0.4, 0.5, 2.0, 0.7]).unwrap();
        let d = phase_diagnostics(&m, &TradeoffParams::new(0.9, 0.0, 1.0, 0.05).unwrap());
        assert_eq!(d.n0_ceil, 42);
        assert!(d.alpha.is_none() && d.beta.is_none() && d.n2_coefficient.is_none());
        assert!(d.lambda_star_min.unwrap() > 0.0);
        let d = phase_diagnostics(&m, &TradeoffParams::new(0.5, 0.01, 1.0, 0.05).unwrap());
        assert!(d.alpha.unwrap() <= d.beta.unwrap());
        assert!(d.n2_coefficient.is_some());
        let d = phase_diagnostics(&m, &TradeoffParams::new(1.0, 0.01, 1.0, 0.05).unwrap());
        assert!(d.alpha.is_none());
    }
}
