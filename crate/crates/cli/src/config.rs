//! Declarative scenario configuration (TOML). Unknown keys are errors.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use elswap::delivery::{DeliveryGrid, DeliveryPeriod, QuadratureRule, WeightScheme, DEFAULT_QUADRATURE_ORDER};
use elswap::dynamics::SimGrid;
use elswap::levy::{JumpSizeDistribution, LevyMeasure, MeasureTag};
use elswap::model::{FuturesModel, InitialCurve};
use elswap::stochvol::{CirParams, MarketPriceSpec};
use elswap::termstructure::{DriftCurve, JumpCoefficientCurve, MeanReversion, VolatilityCurve};
use serde::Deserialize;

pub const DEFAULT_PRECISION: usize = 12;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub delivery: DeliveryConfig,
    pub volatility: VolatilityConfig,
    pub jump: Option<JumpConfig>,
    #[serde(default)]
    pub drift: DriftConfig,
    pub initial_curve: InitialCurveConfig,
    pub stochvol: Option<StochvolConfig>,
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub mpr: MprConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeliveryConfig {
    pub tau1: f64,
    pub tau2: f64,
    #[serde(default)]
    pub weights: WeightConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightConfig {
    #[default]
    Uniform,
    Discounted {
        rate: f64,
    },
    Tabulated {
        knots: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VolatilityConfig {
    Constant { sigma: f64 },
    Seasonal { a: f64, b: f64, c: f64 },
    Samuelson { lambda_bar: f64, damping: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    pub intensity: f64,
    #[serde(default = "default_measure")]
    pub measure: MeasureName,
    pub coefficient: CoefficientConfig,
    pub size: SizeConfig,
}

fn default_measure() -> MeasureName {
    MeasureName::Q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum MeasureName {
    P,
    Q,
    Qtilde,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoefficientConfig {
    Constant { eta: f64 },
    Piecewise { breakpoints: Vec<f64>, levels: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SizeConfig {
    Normal { mean: f64, std: f64 },
    Exponential { rate: f64 },
    Lognormal { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub kappa: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialCurveConfig {
    Constant { value: f64 },
    Tabulated { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochvolConfig {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub nu0: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub market_price: MarketPriceName,
    #[serde(default)]
    pub pi1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarketPriceName {
    Zero,
    Constant,
    #[default]
    True,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub t_steps: usize,
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default = "default_measure")]
    pub measure: MeasureName,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_quad_order() -> usize {
    DEFAULT_QUADRATURE_ORDER
}

fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            precision: DEFAULT_PRECISION,
        }
    }
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_precision() -> usize {
    DEFAULT_PRECISION
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MprConfig {
    /// State `ln F` for the physical market prices; defaults to the time-0
    /// geometric-average log price.
    pub ln_f_state: Option<f64>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Builds every component once so that the first failing constraint is
    /// reported with its section.
    fn validate(&self) -> Result<()> {
        let delivery = self.delivery_grid()?;
        self.model_q()?;
        self.model_p()?;
        self.sim_grid(delivery)?;
        if let Some(sv) = &self.stochvol {
            self.cir(sv)?;
        }
        if self.output.precision == 0 || self.output.precision > 17 {
            anyhow::bail!("output.precision must lie in 1..=17, got {}", self.output.precision);
        }
        Ok(())
    }

    pub fn delivery_grid(&self) -> Result<DeliveryGrid> {
        let build = || -> elswap::Result<DeliveryGrid> {
            let period = DeliveryPeriod::new(self.delivery.tau1, self.delivery.tau2)?;
            let scheme = match &self.delivery.weights {
                WeightConfig::Uniform => WeightScheme::Uniform,
                WeightConfig::Discounted { rate } => WeightScheme::discounted(*rate)?,
                WeightConfig::Tabulated { knots } => WeightScheme::tabulated(knots.clone())?,
            };
            DeliveryGrid::new(
                period,
                scheme,
                &QuadratureRule::gauss_legendre(self.simulation.quad_order)?,
            )
        };
        build().context("delivery")
    }

    fn volatility(&self) -> Result<VolatilityCurve> {
        let v = match self.volatility {
            VolatilityConfig::Constant { sigma } => VolatilityCurve::constant(sigma),
            VolatilityConfig::Seasonal { a, b, c } => VolatilityCurve::seasonal(a, b, c),
            VolatilityConfig::Samuelson { lambda_bar, damping } => VolatilityCurve::samuelson(lambda_bar, damping),
        };
        v.context("volatility")
    }

    fn jumps(&self, measure: MeasureTag) -> Result<Option<(JumpCoefficientCurve, LevyMeasure)>> {
        let Some(j) = &self.jump else { return Ok(None) };
        let build = || -> elswap::Result<(JumpCoefficientCurve, LevyMeasure)> {
            let eta = match &j.coefficient {
                CoefficientConfig::Constant { eta } => JumpCoefficientCurve::constant(*eta)?,
                CoefficientConfig::Piecewise { breakpoints, levels } => {
                    JumpCoefficientCurve::piecewise(breakpoints.clone(), levels.clone())?
                }
            };
            let dist = match j.size {
                SizeConfig::Normal { mean, std } => JumpSizeDistribution::normal(mean, std)?,
                SizeConfig::Exponential { rate } => JumpSizeDistribution::exponential(rate)?,
                SizeConfig::Lognormal { mu, sigma } => JumpSizeDistribution::lognormal(mu, sigma)?,
            };
            Ok((eta, LevyMeasure::new(j.intensity, dist, measure)?))
        };
        build().map(Some).context("jump")
    }

    fn initial_curve(&self) -> Result<InitialCurve> {
        let c = match &self.initial_curve {
            InitialCurveConfig::Constant { value } => InitialCurve::constant(*value),
            InitialCurveConfig::Tabulated { knots } => InitialCurve::tabulated(knots.clone()),
        };
        c.context("initial_curve")
    }

    fn attach(&self, mut model: FuturesModel, measure: MeasureTag) -> Result<FuturesModel> {
        model = model.with_diffusion(self.volatility()?);
        if let Some((eta, levy)) = self.jumps(measure)? {
            model = model.with_jumps(eta, levy).context("jump")?;
        }
        model.validate().context("model")?;
        Ok(model)
    }

    /// The curve model under `Q`; the configured intensity is read as a
    /// `Q` intensity.
    pub fn model_q(&self) -> Result<FuturesModel> {
        self.attach(FuturesModel::risk_neutral(self.initial_curve()?), MeasureTag::Q)
    }

    /// The curve model under `P` with the configured drift; the configured
    /// intensity is read as a `P` intensity.
    pub fn model_p(&self) -> Result<FuturesModel> {
        let mu = DriftCurve::constant(self.drift.mu).context("drift.mu")?;
        let kappa = MeanReversion::constant(self.drift.kappa).context("drift.kappa")?;
        self.attach(FuturesModel::physical(self.initial_curve()?, mu, kappa), MeasureTag::P)
    }

    pub fn sim_grid(&self, delivery: DeliveryGrid) -> Result<SimGrid> {
        let s = &self.simulation;
        SimGrid::to_delivery(delivery, s.t_steps, s.n_paths, s.seed).context("simulation")
    }

    pub fn cir(&self, sv: &StochvolConfig) -> Result<CirParams> {
        CirParams::new(sv.kappa, sv.theta, sv.sigma, sv.nu0, sv.rho, sv.delta).context("stochvol")
    }

    pub fn market_price_spec(sv: &StochvolConfig) -> MarketPriceSpec {
        match sv.market_price {
            MarketPriceName::Zero => MarketPriceSpec::Zero,
            MarketPriceName::Constant => MarketPriceSpec::Constant(sv.pi1),
            MarketPriceName::True => MarketPriceSpec::True,
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.simulation.seed = s;
        }
        self
    }
}
