//! Jump-size laws, finite-activity Lévy measures `ℓ(dz) = λ G(dz)` and the
//! Lévy–Khintchine functional `ψ(r) = ∫ (e^{rz} - 1 - rz) ℓ(dz)`.
//!
//! All z-integrals go through closed-form moment generating functions.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};

/// Relative margin kept below the exponential MGF pole `λ_J`.
pub const EXPONENTIAL_POLE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpSizeDistribution {
    Normal { mean: f64, std: f64 },
    Exponential { rate: f64 },
}

impl JumpSizeDistribution {
    pub fn normal(mean: f64, std: f64) -> Result<Self> {
        if !(mean.is_finite() && std.is_finite() && std > 0.0) {
            return Err(Error::InvalidJumps(format!(
                "normal jump sizes need finite mean and positive std, got ({mean}, {std})"
            )));
        }
        Ok(Self::Normal { mean, std })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidJumps(format!(
                "exponential rate must be positive, got {rate}"
            )));
        }
        Ok(Self::Exponential { rate })
    }

    /// Always rejected: the lognormal MGF is infinite for positive arguments.
    pub fn lognormal(_mu: f64, _sigma: f64) -> Result<Self> {
        Err(Error::LognormalRejected)
    }

    /// Upper bound (exclusive) of the MGF domain.
    pub fn mgf_limit(&self) -> f64 {
        match self {
            Self::Normal { .. } => f64::INFINITY,
            Self::Exponential { rate } => rate * (1.0 - EXPONENTIAL_POLE_MARGIN),
        }
    }

    pub fn check_mgf_domain(&self, r: f64) -> Result<()> {
        match self {
            Self::Exponential { rate } if !(r <= self.mgf_limit()) => Err(Error::MgfDomain { r, limit: *rate }),
            _ if r.is_nan() => Err(Error::MgfDomain {
                r,
                limit: self.mgf_limit(),
            }),
            _ => Ok(()),
        }
    }

    pub fn mgf(&self, r: f64) -> Result<f64> {
        Ok(1.0 + self.mgf_minus_one(r)?)
    }

    /// `M(r) - 1`, accurate for small `r`.
    pub fn mgf_minus_one(&self, r: f64) -> Result<f64> {
        self.check_mgf_domain(r)?;
        Ok(match self {
            Self::Normal { mean, std } => (mean * r + 0.5 * std * std * r * r).exp_m1(),
            Self::Exponential { rate } => r / (rate - r),
        })
    }

    /// Raw moment `∫ zⁿ G(dz)` for `n ∈ 1..=4`.
    pub fn moment(&self, n: usize) -> Result<f64> {
        if !(1..=4).contains(&n) {
            return Err(Error::MomentOrder(n));
        }
        Ok(match *self {
            Self::Normal { mean: m, std: s } => {
                let v = s * s;
                match n {
                    1 => m,
                    2 => m * m + v,
                    3 => m.powi(3) + 3.0 * m * v,
                    _ => m.powi(4) + 6.0 * m * m * v + 3.0 * v * v,
                }
            }
            Self::Exponential { rate } => {
                let factorial = (1..=n).product::<usize>() as f64;
                factorial / rate.powi(n as i32)
            }
        })
    }

    pub fn mean(&self) -> f64 {
        self.moment(1).expect("first moment always exists")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal { mean, std } => Normal::new(mean, std).expect("validated").sample(rng),
            Self::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
        }
    }
}

/// Which measure an intensity is quoted under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureTag {
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyMeasure {
    intensity: f64,
    dist: JumpSizeDistribution,
    measure: MeasureTag,
}

impl LevyMeasure {
    pub fn new(intensity: f64, dist: JumpSizeDistribution, measure: MeasureTag) -> Result<Self> {
        if !(intensity.is_finite() && intensity > 0.0) {
            return Err(Error::InvalidJumps(format!(
                "jump intensity must be positive, got {intensity}"
            )));
        }
        Ok(Self {
            intensity,
            dist,
            measure,
        })
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn dist(&self) -> &JumpSizeDistribution {
        &self.dist
    }

    pub fn measure(&self) -> MeasureTag {
        self.measure
    }

    pub fn with_intensity(&self, intensity: f64) -> Result<Self> {
        Self::new(intensity, self.dist, self.measure)
    }

    pub fn with_measure(&self, measure: MeasureTag) -> Self {
        Self { measure, ..*self }
    }

    /// `∫ z ℓ(dz)`.
    pub fn mean_jump_rate(&self) -> f64 {
        self.intensity * self.dist.mean()
    }
}

pub fn mgf(dist: &JumpSizeDistribution, r: f64) -> Result<f64> {
    dist.mgf(r)
}

pub fn moment(dist: &JumpSizeDistribution, n: usize) -> Result<f64> {
    dist.moment(n)
}

/// `ψ(r) = λ (M(r) - 1 - r E[Z])`.
pub fn psi(levy: &LevyMeasure, r: f64) -> Result<f64> {
    Ok(levy.intensity * (levy.dist.mgf_minus_one(r)? - r * levy.dist.mean()))
}

/// Compensator of the log return, `c^Q = ½σ² + ψ(η)`.
pub fn compensator_cq(sigma_tu: f64, levy: &LevyMeasure, eta_tu: f64) -> Result<f64> {
    Ok(0.5 * sigma_tu * sigma_tu + psi(levy, eta_tu)?)
}

pub fn sample_jump<R: Rng + ?Sized>(dist: &JumpSizeDistribution, rng: &mut R) -> f64 {
    dist.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mgf_examples() {
        let n01 = JumpSizeDistribution::normal(0.0, 1.0).unwrap();
        let e2 = JumpSizeDistribution::exponential(2.0).unwrap();
        assert_eq!(n01.mgf(0.0).unwrap(), 1.0);
        assert_eq!(e2.mgf(0.0).unwrap(), 1.0);
        assert!((n01.mgf(1.0).unwrap() - 0.5f64.exp()).abs() < 1e-15);
        assert!((e2.mgf(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(e2.mgf(2.0), Err(Error::MgfDomain { .. })));
        assert!(e2.mgf(2.0 * (1.0 - 1e-10)).is_err());
        assert!(e2.mgf(1.999).is_ok());
    }

    #[test]
    fn lognormal_is_rejected() {
        let err = JumpSizeDistribution::lognormal(0.0, 0.3).unwrap_err();
        assert_eq!(err, Error::LognormalRejected);
        assert!(err.to_string().contains("infinite"));
    }

    #[test]
    fn moment_examples() {
        let (m, s) = (0.1, 0.2);
        let n = JumpSizeDistribution::normal(m, s).unwrap();
        let fourth = m.powi(4) + 6.0 * m * m * s * s + 3.0 * s.powi(4);
        assert!((n.moment(4).unwrap() - fourth).abs() < 1e-17);
        let e = JumpSizeDistribution::exponential(2.5).unwrap();
        assert!((e.moment(2).unwrap() - 2.0 / 6.25).abs() < 1e-16);
        assert!((e.moment(4).unwrap() - 24.0 / 2.5f64.powi(4)).abs() < 1e-16);
        assert_eq!(JumpSizeDistribution::normal(0.0, 0.3).unwrap().moment(1).unwrap(), 0.0);
        assert_eq!(n.moment(5).unwrap_err(), Error::MomentOrder(5));
        assert!(n.moment(0).is_err());
    }

    #[test]
    fn psi_examples() {
        let n01 = LevyMeasure::new(1.0, JumpSizeDistribution::normal(0.0, 1.0).unwrap(), MeasureTag::Q).unwrap();
        let e2 = LevyMeasure::new(1.0, JumpSizeDistribution::exponential(2.0).unwrap(), MeasureTag::Q).unwrap();
        assert_eq!(psi(&n01, 0.0).unwrap(), 0.0);
        assert!((psi(&n01, 1.0).unwrap() - (0.5f64.exp() - 1.0)).abs() < 1e-15);
        assert!((psi(&e2, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn compensator_examples() {
        let levy = LevyMeasure::new(2.0, JumpSizeDistribution::normal(0.0, 0.3).unwrap(), MeasureTag::Q).unwrap();
        assert_eq!(compensator_cq(0.0, &levy, 0.0).unwrap(), 0.0);
        assert!((compensator_cq(0.4, &levy, 0.0).unwrap() - 0.08).abs() < 1e-16);
        let expected = 0.08 + 2.0 * (0.045f64.exp() - 1.0);
        assert!((compensator_cq(0.4, &levy, 1.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn intensity_must_be_positive() {
        let d = JumpSizeDistribution::exponential(1.0).unwrap();
        assert!(LevyMeasure::new(0.0, d, MeasureTag::P).is_err());
        assert!(JumpSizeDistribution::normal(0.0, 0.0).is_err());
        assert!(JumpSizeDistribution::exponential(-1.0).is_err());
    }

    fn empirical(dist: &JumpSizeDistribution, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = sample_jump(dist, &mut rng);
            s += z;
            s2 += z * z;
        }
        let mean = s / n as f64;
        (mean, s2 / n as f64 - mean * mean)
    }

    #[test]
    fn sampling_matches_moments() {
        let n = 1_000_000;
        let normal = JumpSizeDistribution::normal(0.1, 0.2).unwrap();
        let (mean, var) = empirical(&normal, n, 7);
        assert!((mean - 0.1).abs() < 4.0 * 0.2 / 1e3);
        assert!((var - 0.04).abs() < 4.0 * 0.04 * (2.0f64 / n as f64).sqrt());
        let exp5 = JumpSizeDistribution::exponential(5.0).unwrap();
        let (mean, _) = empirical(&exp5, n, 8);
        assert!((mean - 0.2).abs() < 4.0 * 0.2 / 1e3);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = JumpSizeDistribution::normal(0.0, 1.0).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_jump(&d, &mut a).to_bits(), sample_jump(&d, &mut b).to_bits());
        }
    }
}
