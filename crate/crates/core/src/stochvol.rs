//! CIR stochastic variance for the swap and the Monte Carlo check that the
//! physical-to-`Q̃` density stays a true martingale.
//!
//! `dν = κ_ν(θ_ν - ν)dt + σ_ν √ν dB`, with `B = ρW + √(1-ρ²) B̄`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::dynamics::{SimGrid, Simulator};
use crate::error::{Error, Result};
use crate::harness::mean_and_se;
use crate::levy::MeasureTag;
use crate::model::FuturesModel;
use crate::mpdp::{validate_jump_mpr, JumpMprValidity, DENOMINATOR_GUARD};
use crate::rng::{StreamKey, StreamTag};

/// `|ρ|` at or above `1 - RHO_MARGIN` is rejected.
pub const RHO_MARGIN: f64 = 1e-9;

/// Above this noncentrality the noncentral χ² is sampled from its normal
/// limit.
const NONCENTRAL_NORMAL_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub nu0: f64,
    pub rho: f64,
    /// Volatility risk premium coefficient `δ_ν`.
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FellerFlags {
    /// `2κθ > σ²`.
    pub classical: bool,
    /// `σ² < κθ`.
    pub extended: bool,
}

impl CirParams {
    pub fn new(kappa: f64, theta: f64, sigma: f64, nu0: f64, rho: f64, delta: f64) -> Result<Self> {
        for (name, v) in [
            ("kappa_nu", kappa),
            ("theta_nu", theta),
            ("sigma_nu", sigma),
            ("nu0", nu0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(rho.is_finite() && rho.abs() < 1.0 - RHO_MARGIN) {
            return Err(Error::InvalidParameter(format!(
                "correlation must satisfy |rho| < 1, got {rho}"
            )));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter("delta_nu must be finite".into()));
        }
        Ok(Self {
            kappa,
            theta,
            sigma,
            nu0,
            rho,
            delta,
        })
    }

    pub fn feller(&self) -> FellerFlags {
        feller_flags(self.kappa, self.theta, self.sigma)
    }

    /// `E[ν(t)] = θ + (ν₀ - θ) e^{-κt}`.
    pub fn mean(&self, t: f64) -> f64 {
        self.theta + (self.nu0 - self.theta) * (-self.kappa * t).exp()
    }

    /// Draws `ν(t + dt)` given `ν(t) = nu` from the exact transition law, a
    /// scaled noncentral χ².
    pub fn sample_transition<R: Rng + ?Sized>(&self, nu: f64, dt: f64, rng: &mut R) -> f64 {
        let decay = (-self.kappa * dt).exp();
        let c = self.sigma * self.sigma * (-(-self.kappa * dt).exp_m1()) / (4.0 * self.kappa);
        let dof = 4.0 * self.kappa * self.theta / (self.sigma * self.sigma);
        let nc = nu * decay / c;
        c * noncentral_chi_squared(dof, nc, rng)
    }
}

fn feller_flags(kappa: f64, theta: f64, sigma: f64) -> FellerFlags {
    let s2 = sigma * sigma;
    FellerFlags {
        classical: 2.0 * kappa * theta > s2,
        extended: s2 < kappa * theta,
    }
}

pub fn check_feller(kappa: f64, theta: f64, sigma: f64) -> Result<FellerFlags> {
    for v in [kappa, theta, sigma] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Feller check needs positive parameters, got {v}"
            )));
        }
    }
    Ok(feller_flags(kappa, theta, sigma))
}

/// Poisson mixture of central χ² laws; the normal limit for huge
/// noncentrality.
fn noncentral_chi_squared<R: Rng + ?Sized>(dof: f64, nc: f64, rng: &mut R) -> f64 {
    if nc > NONCENTRAL_NORMAL_LIMIT {
        let sd = (2.0 * (dof + 2.0 * nc)).sqrt();
        return Normal::new(dof + nc, sd)
            .expect("finite")
            .sample(rng)
            .max(f64::MIN_POSITIVE);
    }
    let extra = if nc > 0.0 {
        Poisson::new(0.5 * nc).expect("positive mean").sample(rng)
    } else {
        0.0
    };
    Gamma::new(0.5 * dof + extra, 2.0).expect("positive shape").sample(rng)
}

/// Variance paths `[path][n]` on the trading grid of `grid`, sampled with
/// exact transitions.
pub fn simulate_cir(params: &CirParams, grid: &SimGrid) -> Vec<Vec<f64>> {
    let key = StreamKey::new(grid.seed());
    let dt = grid.dt();
    (0..grid.n_paths())
        .into_par_iter()
        .map(|i| {
            let mut nu = params.nu0;
            let mut out = Vec::with_capacity(grid.t_steps() + 1);
            out.push(nu);
            for n in 0..grid.t_steps() {
                let mut rng = key.stream(i as u64, n as u64, StreamTag::Variance);
                nu = params.sample_transition(nu, dt, &mut rng);
                out.push(nu);
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseMoment {
    pub estimate: f64,
    pub std_error: f64,
    /// Set when the extended Feller condition fails and the estimate may not
    /// be finite in the limit.
    pub feller_warning: bool,
}

/// Monte Carlo `E[ν(t)^{-p}]`, `p ∈ {1, 2}`, from one exact transition.
pub fn inverse_moment_mc(params: &CirParams, t: f64, p: u32, n_paths: usize, seed: u64) -> Result<InverseMoment> {
    if !(p == 1 || p == 2) {
        return Err(Error::InvalidParameter(format!(
            "inverse moment order must be 1 or 2, got {p}"
        )));
    }
    if !(t.is_finite() && t > 0.0) || n_paths < 2 {
        return Err(Error::InvalidParameter(format!(
            "need t > 0 and at least two paths, got t = {t}, n = {n_paths}"
        )));
    }
    let key = StreamKey::new(seed);
    let samples: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.stream(i as u64, 0, StreamTag::Variance);
            params.sample_transition(params.nu0, t, &mut rng).powi(-(p as i32))
        })
        .collect();
    let (estimate, std_error) = mean_and_se(&samples);
    Ok(InverseMoment {
        estimate,
        std_error,
        feller_warning: !params.feller().extended,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCheck {
    pub base: InverseMoment,
    pub doubled: InverseMoment,
    pub pass: bool,
}

/// Compares the estimate at `n_paths` with an independent estimate at
/// `2 n_paths`; passes when they agree within their combined 3-SE band.
pub fn inverse_moment_stability(
    params: &CirParams,
    t: f64,
    p: u32,
    n_paths: usize,
    seed: u64,
) -> Result<StabilityCheck> {
    let base = inverse_moment_mc(params, t, p, n_paths, seed)?;
    let doubled = inverse_moment_mc(params, t, p, 2 * n_paths, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let band = 3.0 * base.std_error.hypot(doubled.std_error);
    let pass = (base.estimate - doubled.estimate).abs() <= band
        || (base.std_error == 0.0 && doubled.std_error == 0.0 && base.estimate == doubled.estimate);
    Ok(StabilityCheck { base, doubled, pass })
}

/// Market price of risk fed into the three-factor density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarketPriceSpec {
    /// `π₁ = π₂ = π_ν = 0`.
    Zero,
    /// Constant `π₁`, no jump price, `π_ν` from the Heston constraint.
    Constant(f64),
    /// `π₁ = (E[μ] - κ ln F + ½E[σ]²ν) / (E[σ]√ν)`, `π₂` the true jump
    /// price, `π_ν` from the Heston constraint.
    True,
}

/// `π_ν = ((δ_ν/σ_ν)√ν - ρπ₁) / √(1-ρ²)`.
pub fn volatility_price(params: &CirParams, nu: f64, pi1: f64) -> f64 {
    ((params.delta / params.sigma) * nu.sqrt() - params.rho * pi1) / (1.0 - params.rho * params.rho).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochvolCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub feller: FellerFlags,
    pub validity: Option<JumpMprValidity>,
    /// Smallest simulated variance over all paths and steps.
    pub min_variance: f64,
}

impl StochvolCheck {
    pub fn pass(&self) -> bool {
        if self.std_error == 0.0 {
            self.estimate == 1.0
        } else {
            ((self.estimate - 1.0) / self.std_error).abs() <= 3.0
        }
    }
}

/// One step of the drift-implicit square-root scheme for `y = √ν`; it keeps
/// `ν` positive whenever `4κθ > σ²`.
fn implicit_sqrt_step(params: &CirParams, y: f64, db: f64, dt: f64) -> f64 {
    let a = 1.0 + 0.5 * params.kappa * dt;
    let b = y + 0.5 * params.sigma * db;
    let c = (params.kappa * params.theta - 0.25 * params.sigma * params.sigma) * 0.5 * dt;
    (b + (b * b + 4.0 * a * c).sqrt()) / (2.0 * a)
}

/// Monte Carlo `E[Z^{PQ̃}(horizon)]` under stochastic volatility.
///
/// The swap's log price is driven by `E[σ(t,U)]√ν ΔW` and the model's jumps;
/// `ν` by `B = ρW + √(1-ρ²)B̄`; and the density accumulates
/// `exp(-π₁ΔW - π_νΔB̄ - ½(π₁² + π_ν²)Δt) (1-π₂)^{k} e^{λπ₂Δt}` per step.
pub fn martingale_check_stochvol(
    model_p: &FuturesModel,
    params: &CirParams,
    spec: MarketPriceSpec,
    grid: &SimGrid,
) -> Result<StochvolCheck> {
    if model_p.measure() != MeasureTag::P {
        return Err(Error::InvalidModel(
            "the stochastic-volatility check needs a model under P".into(),
        ));
    }
    let sim = Simulator::new(model_p, grid)?;
    let averages = sim.averages().to_vec();
    let dt = grid.dt();
    let lambda = sim.model_intensity();
    let jumps = model_p.jumps().map(|j| *j.levy.dist());
    let m1 = jumps.map_or(0.0, |d| d.mean());
    let ln_f0 = grid.delivery().average(
        &grid
            .delivery()
            .nodes()
            .iter()
            .map(|&u| model_p.f0().eval(u).map(f64::ln))
            .collect::<Result<Vec<_>>>()?,
    );
    let mut decay = Vec::with_capacity(grid.t_steps());
    let mut kernel = Vec::with_capacity(grid.t_steps());
    if let Some(d) = model_p.drift() {
        for n in 0..grid.t_steps() {
            let i = d.kappa.integral(grid.time(n), grid.time(n + 1))?;
            decay.push((-i).exp());
            kernel.push(if i == 0.0 { dt } else { -(-i).exp_m1() / i * dt });
        }
    }

    let pi2: Vec<f64> = match (spec, jumps) {
        (MarketPriceSpec::True, Some(_)) => averages
            .iter()
            .enumerate()
            .map(|(n, a)| {
                if a.mgf_of_mean_m1.abs() < DENOMINATOR_GUARD {
                    Err(Error::NearZeroDenominator {
                        denominator: a.mgf_of_mean_m1,
                        context: format!("M(E[η]) - 1 at step {n}"),
                    })
                } else {
                    Ok(1.0 - m1 * a.mean_eta / a.mgf_of_mean_m1)
                }
            })
            .collect::<Result<_>>()?,
        _ => vec![0.0; grid.t_steps()],
    };
    for (n, p) in pi2.iter().enumerate() {
        if !(1.0 - p > 0.0) {
            return Err(Error::Positivity {
                step: n,
                factor: 1.0 - p,
            });
        }
    }
    let validity = match (spec, jumps) {
        (MarketPriceSpec::True, Some(dist)) => {
            let worst = pi2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(validate_jump_mpr(worst, &dist))
        }
        _ => None,
    };
    if matches!(spec, MarketPriceSpec::True) && averages.iter().any(|a| !(a.mean_sigma > 0.0)) {
        return Err(Error::DegenerateModel(
            "the state-dependent price needs E[σ] > 0".into(),
        ));
    }

    let key = StreamKey::new(grid.seed());
    let rho_bar = (1.0 - params.rho * params.rho).sqrt();
    let sqrt_dt = dt.sqrt();
    let per_path: Vec<(f64, f64)> = (0..grid.n_paths())
        .into_par_iter()
        .map(|i| {
            let path = sim.path(i);
            let mut y = params.nu0.sqrt();
            let mut ln_f = ln_f0;
            let mut ln_z = 0.0;
            let mut min_nu = params.nu0;
            for n in 0..grid.t_steps() {
                let a = &averages[n];
                let nu = y * y;
                let dw = path.dw[n];
                let mut rng = key.stream(i as u64, n as u64, StreamTag::Variance);
                let z: f64 = StandardNormal.sample(&mut rng);
                let db_bar = sqrt_dt * z;
                let (pi1, pi_nu) = match spec {
                    MarketPriceSpec::Zero => (0.0, 0.0),
                    MarketPriceSpec::Constant(p) => (p, volatility_price(params, nu, p)),
                    MarketPriceSpec::True => {
                        let vol = a.mean_sigma * y;
                        let p = (a.mean_mu - a.kappa * ln_f + 0.5 * vol * vol) / vol;
                        (p, volatility_price(params, nu, p))
                    }
                };
                let k = path.jumps(n).len() as f64;
                ln_z += -pi1 * dw - pi_nu * db_bar - 0.5 * (pi1 * pi1 + pi_nu * pi_nu) * dt
                    + k * (-pi2[n]).ln_1p()
                    + lambda * pi2[n] * dt;
                let jump_sum: f64 = path.jumps(n).iter().sum();
                let (d, g) = (
                    decay.get(n).copied().unwrap_or(1.0),
                    kernel.get(n).copied().unwrap_or(dt),
                );
                ln_f = d * ln_f + a.mean_mu * g + a.mean_sigma * y * dw + a.mean_eta * (jump_sum - lambda * m1 * dt);
                y = implicit_sqrt_step(params, y, params.rho * dw + rho_bar * db_bar, dt);
                min_nu = min_nu.min(y * y);
            }
            (ln_z.exp(), min_nu)
        })
        .collect();
    let z: Vec<f64> = per_path.iter().map(|p| p.0).collect();
    let min_variance = per_path.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let (estimate, std_error) = if z.iter().all(|&v| v == z[0]) {
        (z[0], 0.0)
    } else {
        mean_and_se(&z)
    };
    Ok(StochvolCheck {
        estimate,
        std_error,
        feller: params.feller(),
        validity,
        min_variance,
    })
}
