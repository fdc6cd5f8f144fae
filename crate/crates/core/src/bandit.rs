//! Arm models, bandit instances and the deterministic random streams used to
//! draw rewards from them.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Moments;

/// Relative slack accepted when checking that a Bernoulli (mean, variance)
/// pair lies on the two-point moment curve.
const BERNOULLI_MOMENT_TOL: f64 = 1e-9;

/// Sampling family of an arm.
///
/// The bounded families live on `[0, range]`: a scaled Bernoulli takes values
/// in `{0, range}`, a scaled Beta is `range * Beta(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Family {
    #[default]
    Gaussian,
    ScaledBernoulli {
        #[serde(default = "unit_range")]
        range: f64,
    },
    ScaledBeta {
        #[serde(default = "unit_range")]
        range: f64,
    },
}

fn unit_range() -> f64 {
    1.0
}

#[derive(Debug, Clone)]
enum Sampler {
    Gaussian { sd: f64 },
    Bernoulli { p: f64, range: f64 },
    Beta { dist: Beta<f64>, range: f64 },
}

/// A reward distribution with known mean and variance.
#[derive(Debug, Clone)]
pub struct ArmModel {
    mean: f64,
    variance: f64,
    family: Family,
    sampler: Sampler,
}

impl ArmModel {
    pub fn new(mean: f64, variance: f64, family: Family) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() {
            return Err(Error::InvalidArm(format!(
                "non-finite moments (mean {mean}, variance {variance})"
            )));
        }
        if variance < 0.0 {
            return Err(Error::InvalidArm(format!("negative variance {variance}")));
        }
        let sampler = match family {
            Family::Gaussian => Sampler::Gaussian { sd: variance.sqrt() },
            Family::ScaledBernoulli { range } => {
                check_range(range)?;
                if !(0.0..=range).contains(&mean) {
                    return Err(Error::InvalidArm(format!("Bernoulli mean {mean} outside [0, {range}]")));
                }
                let implied = mean * (range - mean);
                if (variance - implied).abs() > BERNOULLI_MOMENT_TOL * range * range {
                    return Err(Error::InvalidArm(format!(
                        "Bernoulli on [0, {range}] with mean {mean} must have variance {implied}, got {variance}"
                    )));
                }
                Sampler::Bernoulli { p: mean / range, range }
            }
            Family::ScaledBeta { range } => {
                check_range(range)?;
                let p = mean / range;
                let q = variance / (range * range);
                if !(p > 0.0 && p < 1.0) || !(q > 0.0 && q < p * (1.0 - p)) {
                    return Err(Error::InvalidArm(format!(
                        "no Beta distribution on [0, {range}] has mean {mean} and variance {variance}"
                    )));
                }
                let common = p * (1.0 - p) / q - 1.0;
                let dist = Beta::new(p * common, (1.0 - p) * common)
                    .map_err(|e| Error::InvalidArm(format!("Beta parameters: {e}")))?;
                Sampler::Beta { dist, range }
            }
        };
        Ok(ArmModel {
            mean,
            variance,
            family,
            sampler,
        })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Self::new(mean, variance, Family::Gaussian)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Draws one reward, advancing `rng`.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match &self.sampler {
            Sampler::Gaussian { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                self.mean + sd * z
            }
            Sampler::Bernoulli { p, range } => {
                if unit_f64(rng) < *p {
                    *range
                } else {
                    0.0
                }
            }
            Sampler::Beta { dist, range } => range * dist.sample(rng),
        }
    }
}

fn check_range(range: f64) -> Result<()> {
    if range.is_finite() && range > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArm(format!(
            "support range must be positive, got {range}"
        )))
    }
}

/// 53-bit uniform in [0, 1).
fn unit_f64(rng: &mut RngStream) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A validated multi-armed bandit with at least two arms.
#[derive(Debug, Clone)]
pub struct BanditInstance {
    arms: Vec<ArmModel>,
}

impl BanditInstance {
    pub fn new(arms: Vec<ArmModel>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::TooFewArms(arms.len()));
        }
        Ok(BanditInstance { arms })
    }

    /// Builds an instance from `(mean, variance, family)` triples.
    pub fn from_specs<I>(specs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64, Family)>,
    {
        let arms = specs
            .into_iter()
            .map(|(m, v, f)| ArmModel::new(m, v, f))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }

    /// All-Gaussian instance from parallel mean and variance slices.
    pub fn gaussian(means: &[f64], variances: &[f64]) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::LengthMismatch {
                expected: means.len(),
                got: variances.len(),
            });
        }
        Self::from_specs(means.iter().zip(variances).map(|(&m, &v)| (m, v, Family::Gaussian)))
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ArmModel] {
        &self.arms
    }

    pub fn arm(&self, i: usize) -> &ArmModel {
        &self.arms[i]
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmModel::mean).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.arms.iter().map(ArmModel::variance).collect()
    }

    /// The (mean, standard deviation) view used by the objective.
    pub fn moments(&self) -> Moments {
        Moments::from_instance(self)
    }

    /// Checks that the optimal allocation is unique for weight `w`:
    /// some arm must carry variance when `w < 1`.
    pub fn check_identifiable(&self, w: f64) -> Result<()> {
        if w < 1.0 && self.arms.iter().all(|a| a.variance == 0.0) {
            return Err(Error::Degenerate(
                "every arm has zero variance; the optimal allocation is not unique for w < 1".into(),
            ));
        }
        Ok(())
    }

    /// Same instance with every mean and standard deviation multiplied by `c`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        let arms = self
            .arms
            .iter()
            .map(|a| {
                let family = match a.family {
                    Family::Gaussian => Family::Gaussian,
                    Family::ScaledBernoulli { range } => Family::ScaledBernoulli { range: range * c },
                    Family::ScaledBeta { range } => Family::ScaledBeta { range: range * c },
                };
                ArmModel::new(a.mean * c, a.variance * c * c, family)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }
}

/// Seedable, platform-independent random stream.
///
/// Backed by ChaCha8 keyed by `seed`, with `stream_id` selecting one of 2^64
/// independent streams under that key. Equal `(seed, stream_id)` pairs yield
/// identical draws everywhere.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        unit_f64(self)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draws one reward from `arm`.
pub fn sample(arm: &ArmModel, rng: &mut RngStream) -> f64 {
    arm.sample(rng)
}

/// Validated instance from `(mean, variance, family)` triples.
pub fn make_instance(specs: &[(f64, f64, Family)]) -> Result<BanditInstance> {
    BanditInstance::from_specs(specs.iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments_of(arm: &ArmModel, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = RngStream::new(seed, 0);
        let xs: Vec<f64> = (0..n).map(|_| arm.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        (m, v)
    }

    #[test]
    fn gaussian_mean_converges() {
        let arm = ArmModel::gaussian(5.0, 0.5).unwrap();
        let (m, _) = moments_of(&arm, 100_000, 3);
        assert!((m - 5.0).abs() < 0.02, "{m}");
    }

    #[test]
    fn degenerate_gaussian_is_constant() {
        let arm = ArmModel::gaussian(0.0, 0.0).unwrap();
        let mut rng = RngStream::new(9, 4);
        for _ in 0..1000 {
            assert_eq!(arm.sample(&mut rng), 0.0);
        }
    }

    #[test]
    fn bernoulli_half() {
        let arm = ArmModel::new(0.5, 0.25, Family::ScaledBernoulli { range: 1.0 }).unwrap();
        let mut rng = RngStream::new(11, 0);
        let mut sum = 0.0;
        for _ in 0..100_000 {
            let x = arm.sample(&mut rng);
            assert!(x == 0.0 || x == 1.0);
            sum += x;
        }
        assert!((sum / 1e5 - 0.5).abs() < 0.005);
    }

    #[test]
    fn infeasible_bernoulli_rejected() {
        let err = ArmModel::new(0.9, 0.25, Family::ScaledBernoulli { range: 1.0 });
        assert!(matches!(err, Err(Error::InvalidArm(_))));
        assert!(ArmModel::new(0.5, 0.3, Family::ScaledBeta { range: 1.0 }).is_err());
        assert!(ArmModel::gaussian(1.0, -0.1).is_err());
    }

    #[test]
    fn moments_converge_for_every_family() {
        let n = 1_000_000;
        let arms = [
            ArmModel::gaussian(1.5, 2.0).unwrap(),
            ArmModel::new(1.2, 1.2 * 0.8, Family::ScaledBernoulli { range: 2.0 }).unwrap(),
            ArmModel::new(0.3, 0.05, Family::ScaledBeta { range: 1.0 }).unwrap(),
        ];
        for (k, arm) in arms.iter().enumerate() {
            let (m, v) = moments_of(arm, n, 100 + k as u64);
            let se_mean = (arm.variance() / n as f64).sqrt();
            assert!((m - arm.mean()).abs() <= 3.0 * se_mean, "family {k}: mean {m}");
            // Var of the sample variance is about (mu4 - s^4) / n; bound mu4 by 9 s^4.
            let se_var = (8.0 * arm.variance().powi(2) / n as f64).sqrt();
            assert!((v - arm.variance()).abs() <= 3.0 * se_var, "family {k}: var {v}");
        }
    }

    #[test]
    fn make_instance_validates() {
        let ok = make_instance(&[
            (1.0, 0.05, Family::Gaussian),
            (1.5, 0.1, Family::Gaussian),
            (2.0, 0.2, Family::Gaussian),
            (4.0, 4.0, Family::Gaussian),
            (5.0, 0.5, Family::Gaussian),
        ])
        .unwrap();
        assert_eq!(ok.num_arms(), 5);
        assert!(matches!(
            make_instance(&[(1.0, 1.0, Family::Gaussian)]),
            Err(Error::TooFewArms(1))
        ));
        assert!(make_instance(&[
            (0.9, 0.25, Family::ScaledBernoulli { range: 1.0 }),
            (0.5, 0.25, Family::ScaledBernoulli { range: 1.0 }),
        ])
        .is_err());
    }

    #[test]
    fn streams_are_reproducible() {
        let arm = ArmModel::gaussian(0.0, 1.0).unwrap();
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..100 {
            assert_eq!(arm.sample(&mut a).to_bits(), arm.sample(&mut b).to_bits());
        }
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let arm = ArmModel::gaussian(0.0, 1.0).unwrap();
        let mut a = RngStream::new(5, 0);
        let mut b = RngStream::new(5, 1);
        let n = 100_000;
        let (mut sxy, mut sxx, mut syy, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = arm.sample(&mut a);
            let y = arm.sample(&mut b);
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let n = n as f64;
        let cov = sxy / n - sx / n * sy / n;
        let r = cov / ((sxx / n - (sx / n).powi(2)) * (syy / n - (sy / n).powi(2))).sqrt();
        assert!(r.abs() < 0.01, "r = {r}");
    }

    #[test]
    fn identifiability() {
        let inst = BanditInstance::gaussian(&[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert!(inst.check_identifiable(0.5).is_err());
        assert!(inst.check_identifiable(1.0).is_ok());
    }
}
