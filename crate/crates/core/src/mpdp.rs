//! Market prices of risk of the swap.
//!
//! * [`MpdpQ`]: the market price of delivery-period risk moving the
//!   artificial measure `Q` to the swap's martingale measure `Q̃`.
//! * [`MarketPriceP`]: the true (`P → Q̃`, geometric swap `F`) and classical
//!   (`P → Q`, approximated swap `F^a`) market prices of risk.
//! * [`SpreadQQtilde`]: the spread with `true = classical + spread`.
//!
//! Every z-integral against `ℓ(dz) = λ G(dz)` is reduced to MGF values, so
//! the jump intensity cancels from all jump ratios.

use statrs::function::erf::erfc;

use crate::delivery::{DeliveryGrid, DeliveryPeriod};
use crate::error::{Error, Result};
use crate::levy::{JumpSizeDistribution, LevyMeasure};
use crate::model::FuturesModel;
use crate::termstructure::{JumpCoefficientCurve, VolatilityCurve};

/// Denominators of jump ratios below this magnitude are rejected.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpdpQ {
    pub pi1: f64,
    pub pi2: f64,
    pub t: f64,
    pub period: DeliveryPeriod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MprFlavor {
    /// `Π^{PQ̃}`, for the geometric swap.
    True,
    /// `Π^{PQ}`, for the approximated swap.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketPriceP {
    pub pi1: f64,
    pub pi2: f64,
    pub flavor: MprFlavor,
    pub t: f64,
    pub period: DeliveryPeriod,
    pub ln_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadQQtilde {
    pub pi1_bar: f64,
    pub pi2_bar: f64,
}

/// Delivery averages of the jump coefficient at a fixed trading time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpAverages {
    /// `E[η(t,U)]`.
    pub mean_eta: f64,
    /// `E[M(η(t,U))] - 1`.
    pub mean_mgf_m1: f64,
    /// `M(E[η(t,U)]) - 1`.
    pub mgf_of_mean_m1: f64,
}

impl JumpAverages {
    pub fn compute(
        eta: &JumpCoefficientCurve,
        dist: &JumpSizeDistribution,
        grid: &DeliveryGrid,
        t: f64,
    ) -> Result<Self> {
        let etas = grid.evaluate(|u| eta.eval(t, u))?;
        let mut m1 = Vec::with_capacity(etas.len());
        for &e in &etas {
            m1.push(dist.mgf_minus_one(e)?);
        }
        let mean_eta = grid.average(&etas);
        Ok(Self {
            mean_eta,
            mean_mgf_m1: grid.average(&m1),
            mgf_of_mean_m1: dist.mgf_minus_one(mean_eta)?,
        })
    }

    /// `E[M(η)] - M(E[η]) ≥ 0`; negative round-off is clamped to zero.
    pub fn jensen_gap(&self) -> f64 {
        (self.mean_mgf_m1 - self.mgf_of_mean_m1).max(0.0)
    }
}

fn check_trading_time(t: f64, period: &DeliveryPeriod) -> Result<()> {
    if t > period.tau1() {
        Err(Error::TradingAfterDelivery { t, u: period.tau1() })
    } else {
        Ok(())
    }
}

fn guard(denominator: f64, context: &str) -> Result<f64> {
    if denominator.abs() < DENOMINATOR_GUARD {
        Err(Error::NearZeroDenominator {
            denominator,
            context: context.to_string(),
        })
    } else {
        Ok(denominator)
    }
}

/// `(E[σ(t,U)], V[σ(t,U)])`.
fn sigma_moments(vol: &VolatilityCurve, grid: &DeliveryGrid, t: f64) -> Result<(f64, f64)> {
    let values = grid.evaluate(|u| vol.eval(t, u))?;
    let mean = grid.average(&values);
    if !(mean > 0.0) {
        return Err(Error::DegenerateModel(format!(
            "mean volatility E[σ({t}, U)] = {mean} is not positive"
        )));
    }
    Ok((mean, grid.variance_of(&values)))
}

/// `Π₁^{QQ̃} = -½ V[σ(t,U)] / E[σ(t,U)]`.
pub fn mpdp_diffusion(vol: &VolatilityCurve, grid: &DeliveryGrid, t: f64) -> Result<f64> {
    check_trading_time(t, grid.period())?;
    let (mean, var) = sigma_moments(vol, grid, t)?;
    Ok(-0.5 * var / mean)
}

/// `Π₂^{QQ̃} = -(E[M(η)] - M(E[η])) / (M(E[η]) - 1)`.
pub fn mpdp_jump(eta: &JumpCoefficientCurve, levy_q: &LevyMeasure, grid: &DeliveryGrid, t: f64) -> Result<f64> {
    check_trading_time(t, grid.period())?;
    let avg = JumpAverages::compute(eta, levy_q.dist(), grid, t)?;
    jump_mpdp_from(&avg)
}

fn jump_mpdp_from(avg: &JumpAverages) -> Result<f64> {
    let gap = avg.jensen_gap();
    if avg.mgf_of_mean_m1.abs() < DENOMINATOR_GUARD && gap == 0.0 {
        // no jump exposure at all: η ≡ 0
        return Ok(0.0);
    }
    let denom = guard(avg.mgf_of_mean_m1, "M(E[η]) - 1 with a delivery-dependent η")?;
    Ok(-gap / denom)
}

/// Both MPDP components for a model under `Q`; absent parts contribute zero.
pub fn mpdp(model: &FuturesModel, grid: &DeliveryGrid, t: f64) -> Result<MpdpQ> {
    check_trading_time(t, grid.period())?;
    let pi1 = match model.sigma() {
        Some(vol) => mpdp_diffusion(vol, grid, t)?,
        None => 0.0,
    };
    let pi2 = match model.jumps() {
        Some(j) => mpdp_jump(&j.eta, &j.levy, grid, t)?,
        None => 0.0,
    };
    Ok(MpdpQ {
        pi1,
        pi2,
        t,
        period: *grid.period(),
    })
}

/// MPDP at each of the given trading times.
pub fn mpdp_series(model: &FuturesModel, grid: &DeliveryGrid, times: &[f64]) -> Result<Vec<MpdpQ>> {
    times.iter().map(|&t| mpdp(model, grid, t)).collect()
}

struct PhysicalInputs {
    mean_mu: f64,
    kappa: f64,
    /// `(E[σ], V[σ])`, `None` for a pure-jump model.
    sigma: Option<(f64, f64)>,
    jumps: Option<(JumpAverages, LevyMeasure)>,
}

fn physical_inputs(model: &FuturesModel, grid: &DeliveryGrid, t: f64) -> Result<PhysicalInputs> {
    check_trading_time(t, grid.period())?;
    let drift = model
        .drift()
        .ok_or_else(|| Error::InvalidModel("market prices of risk need a model under P".into()))?;
    let mean_mu = grid.expect(|u| drift.mu.eval(t, u))?;
    let kappa = drift.kappa.eval(t)?;
    let sigma = match model.sigma() {
        Some(vol) => Some(sigma_moments(vol, grid, t)?),
        None => None,
    };
    let jumps = match model.jumps() {
        Some(j) => Some((JumpAverages::compute(&j.eta, j.levy.dist(), grid, t)?, j.levy)),
        None => None,
    };
    if sigma.is_none() && jumps.is_none() {
        return Err(Error::DegenerateModel("model has neither diffusion nor jumps".into()));
    }
    Ok(PhysicalInputs {
        mean_mu,
        kappa,
        sigma,
        jumps,
    })
}

fn market_price(
    model: &FuturesModel,
    ln_f: f64,
    t: f64,
    grid: &DeliveryGrid,
    flavor: MprFlavor,
) -> Result<MarketPriceP> {
    let inputs = physical_inputs(model, grid, t)?;
    let mean_reverting = inputs.mean_mu - inputs.kappa * ln_f;
    let pi1 = match inputs.sigma {
        Some((mean, var)) => {
            let half_var_term = match flavor {
                MprFlavor::True => 0.5 * mean * mean,
                MprFlavor::Classical => 0.5 * (var + mean * mean),
            };
            (mean_reverting + half_var_term) / mean
        }
        None => 0.0,
    };
    let pi2 = match &inputs.jumps {
        Some((avg, levy)) => {
            let denom = match flavor {
                MprFlavor::True => guard(avg.mgf_of_mean_m1, "M(E[η]) - 1")?,
                MprFlavor::Classical => guard(avg.mean_mgf_m1, "E[M(η)] - 1")?,
            };
            let mut pi2 = 1.0 - levy.dist().mean() * avg.mean_eta / denom;
            if inputs.sigma.is_none() {
                // pure-jump model: the jump channel also carries the drift
                pi2 += mean_reverting / (levy.intensity() * denom);
            }
            pi2
        }
        None => 0.0,
    };
    Ok(MarketPriceP {
        pi1,
        pi2,
        flavor,
        t,
        period: *grid.period(),
        ln_f,
    })
}

/// True market price of risk `Π^{PQ̃}` at log swap price `ln_f`.
pub fn mpr_true(model: &FuturesModel, ln_f: f64, t: f64, grid: &DeliveryGrid) -> Result<MarketPriceP> {
    market_price(model, ln_f, t, grid, MprFlavor::True)
}

/// Classical market price of risk `Π^{PQ}` of the approximated swap.
pub fn mpr_classical(model: &FuturesModel, ln_f: f64, t: f64, grid: &DeliveryGrid) -> Result<MarketPriceP> {
    market_price(model, ln_f, t, grid, MprFlavor::Classical)
}

/// Spread `Π̄^{QQ̃}` between the true and classical market prices of risk,
/// computed from its own closed form (it does not depend on `ln F`).
pub fn spread(model: &FuturesModel, t: f64, grid: &DeliveryGrid) -> Result<SpreadQQtilde> {
    let inputs = physical_inputs(model, grid, t)?;
    let pi1_bar = match inputs.sigma {
        Some((mean, var)) => -0.5 * var / mean,
        None => 0.0,
    };
    let pi2_bar = match &inputs.jumps {
        Some((avg, levy)) => {
            let a = guard(avg.mean_mgf_m1, "E[M(η)] - 1")?;
            let b = guard(avg.mgf_of_mean_m1, "M(E[η]) - 1")?;
            let mut bar = -avg.mean_eta * levy.dist().mean() * avg.jensen_gap() / (a * b);
            if inputs.sigma.is_none() {
                // pure-jump models have κ = 0, so the drift term is state-free
                bar += inputs.mean_mu / levy.intensity() * (1.0 / b - 1.0 / a);
            }
            bar
        }
        None => 0.0,
    };
    Ok(SpreadQQtilde { pi1_bar, pi2_bar })
}

/// Outcome of checking `Π₂ z < 1` for `G`-almost every jump size `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMprValidity {
    pub pi2: f64,
    /// `G({z : Π₂ z ≥ 1})`.
    pub violation_mass: f64,
    pub holds: bool,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Reports whether `Π₂ z < 1` holds `G`-a.e. and, when not, the mass of the
/// violating set. Nothing is enforced.
pub fn validate_jump_mpr(pi2: f64, dist: &JumpSizeDistribution) -> JumpMprValidity {
    let violation_mass = if pi2 == 0.0 {
        0.0
    } else {
        let threshold = 1.0 / pi2;
        match *dist {
            JumpSizeDistribution::Normal { mean, std } => {
                let x = (threshold - mean) / std;
                if pi2 > 0.0 {
                    std_normal_cdf(-x)
                } else {
                    std_normal_cdf(x)
                }
            }
            JumpSizeDistribution::Exponential { rate } => {
                if pi2 > 0.0 {
                    (-rate * threshold).exp()
                } else {
                    0.0
                }
            }
        }
    };
    JumpMprValidity {
        pi2,
        violation_mass,
        holds: violation_mass == 0.0,
    }
}
