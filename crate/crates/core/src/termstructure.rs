//! Deterministic coefficient curves of the futures model: volatility
//! `σ(t,u)`, jump coefficient `η(t,u)`, drift `μ(t,u)` and the
//! delivery-independent mean-reversion speed `κ(t)`.

use std::f64::consts::PI;

use crate::delivery::{DeliveryGrid, DeliveryPeriod, QuadratureRule, WeightScheme};
use crate::error::{Error, Result};

/// Values on a rectangular `(t, u)` grid with bilinear interpolation.
/// Points outside the grid are an error.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    times: Vec<f64>,
    deliveries: Vec<f64>,
    /// `values[i][j]` at `(times[i], deliveries[j])`.
    values: Vec<Vec<f64>>,
}

impl Grid2 {
    pub fn new(times: Vec<f64>, deliveries: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let increasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] > w[0]) && xs.iter().all(|x| x.is_finite());
        if times.is_empty() || deliveries.is_empty() || !increasing(&times) || !increasing(&deliveries) {
            return Err(Error::InvalidCurve(
                "grid axes must be non-empty, finite and strictly increasing".into(),
            ));
        }
        if values.len() != times.len() || values.iter().any(|row| row.len() != deliveries.len()) {
            return Err(Error::InvalidCurve(format!(
                "grid values must be {} x {}",
                times.len(),
                deliveries.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("grid values must be finite".into()));
        }
        Ok(Self {
            times,
            deliveries,
            values,
        })
    }

    pub fn eval(&self, t: f64, u: f64) -> Result<f64> {
        let (i, wt) = bracket(&self.times, t).ok_or(Error::OutsideGrid { t, u })?;
        let (j, wu) = bracket(&self.deliveries, u).ok_or(Error::OutsideGrid { t, u })?;
        let at = |a: usize, b: usize| self.values[a][b];
        let i1 = (i + 1).min(self.times.len() - 1);
        let j1 = (j + 1).min(self.deliveries.len() - 1);
        let lo = at(i, j) * (1.0 - wu) + at(i, j1) * wu;
        let hi = at(i1, j) * (1.0 - wu) + at(i1, j1) * wu;
        Ok(lo * (1.0 - wt) + hi * wt)
    }

    fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Lower index and interpolation weight of `x` on `axis`; `None` outside.
fn bracket(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = axis.len();
    if n == 1 {
        return (x == axis[0]).then_some((0, 0.0));
    }
    if !(x >= axis[0] && x <= axis[n - 1]) {
        return None;
    }
    let k = axis.partition_point(|&a| a <= x).clamp(1, n - 1) - 1;
    Some((k, (x - axis[k]) / (axis[k + 1] - axis[k])))
}

fn check_order(t: f64, u: f64) -> Result<()> {
    if t > u {
        Err(Error::TradingAfterDelivery { t, u })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VolatilityCurve {
    Constant {
        sigma0: f64,
    },
    /// `S₁(u) = a + b cos(2π(u + c))`.
    Seasonal {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `S₂(u - t) = λ̄ e^{-Λ(u - t)}`.
    Samuelson {
        lambda_bar: f64,
        damping: f64,
    },
    Tabulated(Grid2),
}

impl VolatilityCurve {
    pub fn constant(sigma0: f64) -> Result<Self> {
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return Err(Error::InvalidCurve(format!(
                "constant volatility must be positive, got {sigma0}"
            )));
        }
        Ok(Self::Constant { sigma0 })
    }

    pub fn seasonal(a: f64, b: f64, c: f64) -> Result<Self> {
        check_seasonal(a, b, c)?;
        if b <= 0.0 {
            return Err(Error::InvalidCurve(format!(
                "seasonal amplitude b must be positive, got {b}"
            )));
        }
        Ok(Self::Seasonal { a, b, c })
    }

    pub fn samuelson(lambda_bar: f64, damping: f64) -> Result<Self> {
        check_samuelson(lambda_bar, damping)?;
        Ok(Self::Samuelson { lambda_bar, damping })
    }

    pub fn tabulated(grid: Grid2) -> Result<Self> {
        if grid.min() <= 0.0 {
            return Err(Error::InvalidCurve("tabulated volatility must be positive".into()));
        }
        Ok(Self::Tabulated(grid))
    }

    pub fn eval(&self, t: f64, u: f64) -> Result<f64> {
        check_order(t, u)?;
        match self {
            Self::Constant { sigma0 } => Ok(*sigma0),
            Self::Seasonal { a, b, c } => Ok(a + b * (2.0 * PI * (u + c)).cos()),
            Self::Samuelson { lambda_bar, damping } => Ok(lambda_bar * (-damping * (u - t)).exp()),
            Self::Tabulated(grid) => grid.eval(t, u),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum JumpCoefficientCurve {
    Constant {
        eta0: f64,
    },
    /// `levels[k]` applies on `(breakpoints[k-1], breakpoints[k]]`, with the
    /// first and last levels extending to the left and right.
    PiecewiseInDelivery {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
    Tabulated(Grid2),
}

impl JumpCoefficientCurve {
    pub fn constant(eta0: f64) -> Result<Self> {
        if !eta0.is_finite() {
            return Err(Error::InvalidCurve("jump coefficient must be finite".into()));
        }
        Ok(Self::Constant { eta0 })
    }

    pub fn piecewise(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidCurve(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                levels.len()
            )));
        }
        if !breakpoints.windows(2).all(|w| w[1] > w[0]) || breakpoints.iter().chain(&levels).any(|x| !x.is_finite()) {
            return Err(Error::InvalidCurve(
                "breakpoints must be increasing and all values finite".into(),
            ));
        }
        Ok(Self::PiecewiseInDelivery { breakpoints, levels })
    }

    pub fn tabulated(grid: Grid2) -> Self {
        Self::Tabulated(grid)
    }

    pub fn eval(&self, t: f64, u: f64) -> Result<f64> {
        check_order(t, u)?;
        match self {
            Self::Constant { eta0 } => Ok(*eta0),
            Self::PiecewiseInDelivery { breakpoints, levels } => Ok(levels[breakpoints.partition_point(|&b| b < u)]),
            Self::Tabulated(grid) => grid.eval(t, u),
        }
    }

    /// Exact supremum over the whole domain.
    pub fn sup(&self) -> f64 {
        match self {
            Self::Constant { eta0 } => *eta0,
            Self::PiecewiseInDelivery { levels, .. } => levels.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Self::Tabulated(grid) => grid.max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriftCurve {
    Constant { mu0: f64 },
    Tabulated(Grid2),
}

impl DriftCurve {
    pub fn constant(mu0: f64) -> Result<Self> {
        if !mu0.is_finite() {
            return Err(Error::InvalidCurve("drift must be finite".into()));
        }
        Ok(Self::Constant { mu0 })
    }

    pub fn eval(&self, t: f64, u: f64) -> Result<f64> {
        check_order(t, u)?;
        match self {
            Self::Constant { mu0 } => Ok(*mu0),
            Self::Tabulated(grid) => grid.eval(t, u),
        }
    }
}

/// Mean-reversion speed `κ(t)`; it has no delivery argument.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanReversion {
    Constant {
        kappa0: f64,
    },
    /// Piecewise-linear through `(t, κ)` knots.
    Tabulated {
        knots: Vec<(f64, f64)>,
    },
}

impl MeanReversion {
    pub fn constant(kappa0: f64) -> Result<Self> {
        if !(kappa0.is_finite() && kappa0 >= 0.0) {
            return Err(Error::InvalidCurve(format!(
                "mean reversion must be non-negative, got {kappa0}"
            )));
        }
        Ok(Self::Constant { kappa0 })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 || !knots.windows(2).all(|w| w[1].0 > w[0].0) {
            return Err(Error::InvalidCurve(
                "mean-reversion knots must be at least two, increasing in t".into(),
            ));
        }
        if knots
            .iter()
            .any(|&(t, k)| !(t.is_finite() && k.is_finite() && k >= 0.0))
        {
            return Err(Error::InvalidCurve(
                "mean reversion must be finite and non-negative".into(),
            ));
        }
        Ok(Self::Tabulated { knots })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Constant { kappa0 } => *kappa0 == 0.0,
            Self::Tabulated { knots } => knots.iter().all(|&(_, k)| k == 0.0),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Self::Constant { kappa0 } => Ok(*kappa0),
            Self::Tabulated { knots } => {
                let times: Vec<f64> = knots.iter().map(|k| k.0).collect();
                let (i, w) = bracket(&times, t).ok_or(Error::OutsideGrid { t, u: f64::NAN })?;
                let j = (i + 1).min(knots.len() - 1);
                Ok(knots[i].1 * (1.0 - w) + knots[j].1 * w)
            }
        }
    }

    /// `∫_{t0}^{t1} κ(s) ds`, exact for both variants.
    pub fn integral(&self, t0: f64, t1: f64) -> Result<f64> {
        match self {
            Self::Constant { kappa0 } => Ok(kappa0 * (t1 - t0)),
            Self::Tabulated { knots } => {
                let mut cuts = vec![t0];
                cuts.extend(knots.iter().map(|k| k.0).filter(|&s| s > t0 && s < t1));
                cuts.push(t1);
                let mut total = 0.0;
                for w in cuts.windows(2) {
                    total += 0.5 * (w[1] - w[0]) * (self.eval(w[0])? + self.eval(w[1])?);
                }
                Ok(total)
            }
        }
    }
}

fn check_seasonal(a: f64, b: f64, c: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && b >= 0.0 && a > b) {
        return Err(Error::InvalidCurve(format!(
            "seasonal curve needs a > b > 0, got a = {a}, b = {b}"
        )));
    }
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidCurve(format!(
            "seasonal phase c must lie in [0, 1), got {c}"
        )));
    }
    Ok(())
}

fn check_samuelson(lambda_bar: f64, damping: f64) -> Result<()> {
    if !(lambda_bar.is_finite() && lambda_bar > 0.0 && damping.is_finite() && damping > 0.0) {
        return Err(Error::InvalidCurve(format!(
            "Samuelson curve needs positive terminal volatility and damping, got {lambda_bar}, {damping}"
        )));
    }
    Ok(())
}

/// `(E[S₁(U)], E[S₁(U)²])` for the seasonal curve. Closed form under uniform
/// settlement, quadrature otherwise. `b = 0` is accepted as the constant
/// curve.
pub fn seasonal_moments(
    a: f64,
    b: f64,
    c: f64,
    period: &DeliveryPeriod,
    scheme: &WeightScheme,
    quad: &QuadratureRule,
) -> Result<(f64, f64)> {
    check_seasonal(a, b, c)?;
    match scheme {
        WeightScheme::Uniform => {
            let len = period.length();
            let sin_diff = |k: f64| (k * PI * (period.tau2() + c)).sin() - (k * PI * (period.tau1() + c)).sin();
            let s2 = sin_diff(2.0);
            let s4 = sin_diff(4.0);
            let mean = a + b / (2.0 * PI * len) * s2;
            let second = a * a + 0.5 * b * b + a * b / (PI * len) * s2 + b * b / (8.0 * PI * len) * s4;
            Ok((mean, second))
        }
        _ => {
            let grid = DeliveryGrid::new(*period, scheme.clone(), quad)?;
            let s = |u: f64| a + b * (2.0 * PI * (u + c)).cos();
            Ok((grid.expect(|u| Ok(s(u)))?, grid.expect(|u| Ok(s(u).powi(2)))?))
        }
    }
}

/// Below this `Λ(τ₂ - τ₁)` the Samuelson variance term is summed from its
/// power series; above it the direct formula loses less than `eps / 0.25`.
const SAMUELSON_SERIES_CUTOFF: f64 = 0.5;
const SAMUELSON_SERIES_TERMS: usize = 30;

/// `(1 - e^{-x}) / x`.
fn one_minus_exp_over(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `B(x) - A(x)²` with `A(x) = (1 - e^{-x})/x`, `B(x) = (1 - e^{-2x})/(2x)`,
/// i.e. the variance of `e^{-x V}` for `V` uniform on `[0, 1]`.
fn samuelson_variance_factor(x: f64) -> f64 {
    if x >= SAMUELSON_SERIES_CUTOFF {
        let a = one_minus_exp_over(x);
        return one_minus_exp_over(2.0 * x) - a * a;
    }
    // Cauchy product of the series of A and B; the constant and linear terms cancel
    let n = SAMUELSON_SERIES_TERMS;
    let mut a = vec![0.0; n];
    let mut fact = 1.0;
    for (k, ak) in a.iter_mut().enumerate() {
        fact *= (k + 1) as f64;
        *ak = if k % 2 == 0 { 1.0 } else { -1.0 } / fact;
    }
    let mut value = 0.0;
    let mut power = x * x;
    for k in 2..n {
        let b_k = a[k] * 2f64.powi(k as i32);
        let a2_k: f64 = (0..=k).map(|i| a[i] * a[k - i]).sum();
        value += (b_k - a2_k) * power;
        power *= x;
    }
    value
}

/// Diffusion MPDP of the Samuelson curve under uniform settlement,
/// `-½ (Λ̄̄ - Λ̄²)/Λ̄ · e^{-Λ(τ₁ - t)}`.
pub fn samuelson_mpdp(lambda_bar: f64, damping: f64, t: f64, period: &DeliveryPeriod) -> Result<f64> {
    check_samuelson(lambda_bar, damping)?;
    if t > period.tau1() {
        return Err(Error::TradingAfterDelivery { t, u: period.tau1() });
    }
    let x = damping * period.length();
    let mean = lambda_bar * one_minus_exp_over(x);
    let var = lambda_bar * lambda_bar * samuelson_variance_factor(x);
    Ok(-0.5 * var / mean * (-damping * (period.tau1() - t)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_examples() {
        let c = VolatilityCurve::constant(0.4).unwrap();
        assert_eq!(c.eval(0.1, 0.7).unwrap(), 0.4);
        let s = VolatilityCurve::seasonal(0.3, 0.1, 0.05).unwrap();
        // u + c = 0.25 is a cosine root
        assert!((s.eval(0.0, 0.2).unwrap() - 0.3).abs() < 1e-15);
        let sam = VolatilityCurve::samuelson(0.5, 1.5).unwrap();
        assert_eq!(sam.eval(0.8, 0.8).unwrap(), 0.5);
        assert!(sam.eval(0.9, 0.8).is_err());
    }

    #[test]
    fn curve_invariants() {
        assert!(VolatilityCurve::constant(0.0).is_err());
        assert!(VolatilityCurve::seasonal(0.1, 0.2, 0.0).is_err());
        assert!(VolatilityCurve::seasonal(0.3, 0.0, 0.0).is_err());
        assert!(VolatilityCurve::seasonal(0.3, 0.1, 1.0).is_err());
        assert!(VolatilityCurve::samuelson(0.5, 0.0).is_err());
        assert!(MeanReversion::constant(-1.0).is_err());
        let g = Grid2::new(vec![0.0, 1.0], vec![0.0, 2.0], vec![vec![0.1, -0.1], vec![0.2, 0.2]]).unwrap();
        assert!(VolatilityCurve::tabulated(g).is_err());
    }

    #[test]
    fn samuelson_decreases_with_time_to_delivery() {
        let sam = VolatilityCurve::samuelson(0.5, 1.5).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let v = sam.eval(0.0, 0.05 * k as f64).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn grid_bilinear_and_out_of_range() {
        let g = Grid2::new(vec![0.0, 1.0], vec![1.0, 2.0], vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!((g.eval(0.5, 1.5).unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(g.eval(1.0, 2.0).unwrap(), 4.0);
        assert!(matches!(g.eval(1.1, 1.5), Err(Error::OutsideGrid { .. })));
        assert!(g.eval(0.5, 0.9).is_err());
    }

    #[test]
    fn piecewise_eta() {
        let eta = JumpCoefficientCurve::piecewise(vec![0.5], vec![0.2, 0.6]).unwrap();
        assert_eq!(eta.eval(0.0, 0.3).unwrap(), 0.2);
        assert_eq!(eta.eval(0.0, 0.5).unwrap(), 0.2);
        assert_eq!(eta.eval(0.0, 0.7).unwrap(), 0.6);
        assert_eq!(eta.sup(), 0.6);
        assert!(JumpCoefficientCurve::piecewise(vec![0.5], vec![0.2]).is_err());
    }

    #[test]
    fn mean_reversion_integral() {
        let k = MeanReversion::tabulated(vec![(0.0, 1.0), (1.0, 3.0)]).unwrap();
        assert!((k.integral(0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((k.integral(0.25, 0.75).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(MeanReversion::constant(2.0).unwrap().integral(0.1, 0.6).unwrap(), 1.0);
    }

    #[test]
    fn seasonal_moment_examples() {
        let q = QuadratureRule::default();
        let year = DeliveryPeriod::new(0.0, 1.0).unwrap();
        let (m, s) = seasonal_moments(0.3, 0.1, 0.0, &year, &WeightScheme::Uniform, &q).unwrap();
        assert!((m - 0.3).abs() < 1e-15);
        assert!((s - 0.095).abs() < 1e-15);
        let (m, s) = seasonal_moments(0.3, 0.0, 0.4, &year, &WeightScheme::Uniform, &q).unwrap();
        assert_eq!((m, s), (0.3, 0.09));
        assert!(seasonal_moments(0.1, 0.3, 0.0, &year, &WeightScheme::Uniform, &q).is_err());
    }

    #[test]
    fn samuelson_limits() {
        let p = DeliveryPeriod::new(1.0, 1.0 + 1.0 / 12.0).unwrap();
        assert!(samuelson_mpdp(0.5, 1e-12, 0.5, &p).unwrap().abs() < 1e-20);
        let at_start = samuelson_mpdp(0.5, 1.5, 1.0, &p).unwrap();
        for t in [0.0, 0.3, 0.9] {
            let v = samuelson_mpdp(0.5, 1.5, t, &p).unwrap();
            assert!(v <= 0.0 && v.abs() <= at_start.abs());
        }
        assert!(samuelson_mpdp(0.5, 1.5, 1.01, &p).is_err());
    }

    #[test]
    fn samuelson_series_matches_direct_formula_at_cutoff() {
        for x in [0.3, 0.45, 0.5, 0.55] {
            let a = one_minus_exp_over(x);
            let direct = one_minus_exp_over(2.0 * x) - a * a;
            let series = {
                // force the series branch
                let n = SAMUELSON_SERIES_TERMS;
                let mut c = vec![0.0; n];
                let mut f = 1.0;
                for (k, ck) in c.iter_mut().enumerate() {
                    f *= (k + 1) as f64;
                    *ck = if k % 2 == 0 { 1.0 } else { -1.0 } / f;
                }
                (2..n)
                    .map(|k| {
                        let b = c[k] * 2f64.powi(k as i32);
                        let a2: f64 = (0..=k).map(|i| c[i] * c[k - i]).sum();
                        (b - a2) * x.powi(k as i32)
                    })
                    .sum::<f64>()
            };
            assert!((direct - series).abs() < 1e-15, "x = {x}");
        }
        // leading term x²/12
        let x = 1e-6;
        assert!((samuelson_variance_factor(x) / (x * x / 12.0) - 1.0).abs() < 1e-5);
    }
}
