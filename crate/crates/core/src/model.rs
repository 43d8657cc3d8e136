//! Assembly of the futures curve model under the physical measure `P` or
//! the artificial risk-neutral measure `Q`.

use crate::error::{Error, Result};
use crate::levy::{LevyMeasure, MeasureTag};
use crate::termstructure::{DriftCurve, JumpCoefficientCurve, MeanReversion, VolatilityCurve};

/// Initial curve `f(0, τ) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCurve {
    Constant(f64),
    /// Piecewise-linear in `τ` through `(τ, f)` knots.
    Tabulated(Vec<(f64, f64)>),
}

impl InitialCurve {
    pub fn constant(f0: f64) -> Result<Self> {
        if !(f0.is_finite() && f0 > 0.0) {
            return Err(Error::InvalidModel(format!(
                "initial futures price must be positive, got {f0}"
            )));
        }
        Ok(Self::Constant(f0))
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 || !knots.windows(2).all(|w| w[1].0 > w[0].0) {
            return Err(Error::InvalidModel(
                "initial curve knots must be increasing in τ".into(),
            ));
        }
        if knots.iter().any(|&(_, f)| !(f.is_finite() && f > 0.0)) {
            return Err(Error::InvalidModel("initial curve must be positive".into()));
        }
        Ok(Self::Tabulated(knots))
    }

    pub fn eval(&self, tau: f64) -> Result<f64> {
        match self {
            Self::Constant(f) => Ok(*f),
            Self::Tabulated(knots) => {
                let (first, last) = (knots[0].0, knots[knots.len() - 1].0);
                if !(tau >= first && tau <= last) {
                    return Err(Error::InvalidModel(format!(
                        "τ = {tau} is outside the initial curve [{first}, {last}]"
                    )));
                }
                let k = knots.partition_point(|&(x, _)| x <= tau).clamp(1, knots.len() - 1);
                let (x0, f0) = knots[k - 1];
                let (x1, f1) = knots[k];
                Ok(f0 + (f1 - f0) * (tau - x0) / (x1 - x0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpComponent {
    pub eta: JumpCoefficientCurve,
    pub levy: LevyMeasure,
}

/// Mean-reverting drift part, present only under `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalDrift {
    pub mu: DriftCurve,
    pub kappa: MeanReversion,
}

/// Log futures curve model. Under `Q` each `f(·, τ)` is a martingale; under
/// `P` the log curve mean-reverts with speed `κ(t)` towards `μ/κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuturesModel {
    measure: MeasureTag,
    sigma: Option<VolatilityCurve>,
    jumps: Option<JumpComponent>,
    drift: Option<PhysicalDrift>,
    f0: InitialCurve,
}

impl FuturesModel {
    /// A model under `Q` with neither diffusion nor jumps; add them with the
    /// `with_*` builders.
    pub fn risk_neutral(f0: InitialCurve) -> Self {
        Self {
            measure: MeasureTag::Q,
            sigma: None,
            jumps: None,
            drift: None,
            f0,
        }
    }

    pub fn physical(f0: InitialCurve, mu: DriftCurve, kappa: MeanReversion) -> Self {
        Self {
            measure: MeasureTag::P,
            sigma: None,
            jumps: None,
            drift: Some(PhysicalDrift { mu, kappa }),
            f0,
        }
    }

    pub fn with_diffusion(mut self, sigma: VolatilityCurve) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn with_jumps(mut self, eta: JumpCoefficientCurve, levy: LevyMeasure) -> Result<Self> {
        if levy.measure() != self.measure {
            return Err(Error::InvalidModel(format!(
                "Lévy measure quoted under {:?} attached to a model under {:?}",
                levy.measure(),
                self.measure
            )));
        }
        let sup = eta.sup();
        let limit = levy.dist().mgf_limit();
        if !(sup <= limit) {
            return Err(Error::MgfDomain { r: sup, limit });
        }
        self.jumps = Some(JumpComponent { eta, levy });
        Ok(self)
    }

    /// Checks that only make sense on the assembled model.
    pub fn validate(&self) -> Result<()> {
        if let (None, Some(drift)) = (&self.sigma, &self.drift) {
            if self.jumps.is_some() && !drift.kappa.is_zero() {
                return Err(Error::InvalidModel(
                    "a pure-jump model under P requires zero mean reversion".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn measure(&self) -> MeasureTag {
        self.measure
    }

    pub fn sigma(&self) -> Option<&VolatilityCurve> {
        self.sigma.as_ref()
    }

    pub fn jumps(&self) -> Option<&JumpComponent> {
        self.jumps.as_ref()
    }

    pub fn drift(&self) -> Option<&PhysicalDrift> {
        self.drift.as_ref()
    }

    pub fn f0(&self) -> &InitialCurve {
        &self.f0
    }

    pub fn sigma_at(&self, t: f64, u: f64) -> Result<f64> {
        self.sigma.as_ref().map_or(Ok(0.0), |s| s.eval(t, u))
    }

    pub fn eta_at(&self, t: f64, u: f64) -> Result<f64> {
        self.jumps.as_ref().map_or(Ok(0.0), |j| j.eta.eval(t, u))
    }

    /// Same curves and jumps re-quoted under the other measure, with the
    /// intensity carried over unchanged.
    pub fn to_measure(&self, measure: MeasureTag, drift: Option<PhysicalDrift>) -> Result<Self> {
        let model =
            Self {
                measure,
                sigma: self.sigma.clone(),
                jumps: self.jumps.as_ref().map(|j| JumpComponent {
                    eta: j.eta.clone(),
                    levy: j.levy.with_measure(measure),
                }),
                drift: match measure {
                    MeasureTag::P => Some(drift.ok_or_else(|| {
                        Error::InvalidModel("a model under P needs a drift and mean reversion".into())
                    })?),
                    MeasureTag::Q => None,
                },
                f0: self.f0.clone(),
            };
        model.validate()?;
        Ok(model)
    }
}
