//! Delivery periods, settlement weights and expectations over the random
//! delivery time `U`.
//!
//! A swap delivers over `(tau1, tau2]`. A positive settlement function
//! `w_hat(u)` induces the density `w(u) = w_hat(u) / ∫ w_hat`, and every
//! delivery average in the crate is an expectation `E[g(U)]` under that
//! density. All such expectations go through [`DeliveryGrid`], a fixed
//! Gauss–Legendre rule mapped onto the period, so that analytic averages and
//! pathwise averages of simulated curves share the exact same nodes.

use crate::error::{Error, Result};

pub const DEFAULT_QUADRATURE_ORDER: usize = 64;

/// Variances smaller than this multiple of the squared mean are reported as
/// exactly zero.
pub const VARIANCE_CLAMP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveryPeriod {
    tau1: f64,
    tau2: f64,
}

impl DeliveryPeriod {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        if !(tau1.is_finite() && tau2.is_finite()) || tau1 < 0.0 || tau1 >= tau2 {
            return Err(Error::InvalidPeriod { tau1, tau2 });
        }
        Ok(Self { tau1, tau2 })
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn length(&self) -> f64 {
        self.tau2 - self.tau1
    }

    /// Membership in the half-open interval `(tau1, tau2]`.
    pub fn contains(&self, u: f64) -> bool {
        u > self.tau1 && u <= self.tau2
    }

    fn check(&self, u: f64) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::OutsidePeriod {
                u,
                tau1: self.tau1,
                tau2: self.tau2,
            })
        }
    }
}

/// Settlement function `w_hat(u)` over the delivery period.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// One-time settlement, `w_hat ≡ 1`.
    Uniform,
    /// Continuous settlement discounted at a constant rate, `w_hat(u) = e^{-r u}`.
    Discounted { rate: f64 },
    /// Piecewise-linear settlement through the given `(u, w_hat(u))` knots.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl WeightScheme {
    pub fn discounted(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidScheme(format!(
                "discount rate must be positive, got {rate}"
            )));
        }
        Ok(Self::Discounted { rate })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidScheme("tabulated weights need at least two knots".into()));
        }
        for pair in knots.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::InvalidScheme(
                    "tabulated knots must be strictly increasing in u".into(),
                ));
            }
        }
        if let Some(&(u, w)) = knots
            .iter()
            .find(|(u, w)| !(w.is_finite() && *w > 0.0) || !u.is_finite())
        {
            return Err(Error::InvalidScheme(format!(
                "settlement weight must be positive, got {w} at u = {u}"
            )));
        }
        Ok(Self::Tabulated { knots })
    }

    /// Unnormalised settlement function `w_hat(u)`.
    pub fn settlement(&self, u: f64) -> Result<f64> {
        match self {
            Self::Uniform => Ok(1.0),
            Self::Discounted { rate } => Ok((-rate * u).exp()),
            Self::Tabulated { knots } => {
                let first = knots[0].0;
                let last = knots[knots.len() - 1].0;
                if u < first || u > last {
                    return Err(Error::InvalidScheme(format!(
                        "u = {u} is outside the tabulated knots [{first}, {last}]"
                    )));
                }
                let k = knots.partition_point(|&(x, _)| x <= u).clamp(1, knots.len() - 1);
                let (u0, w0) = knots[k - 1];
                let (u1, w1) = knots[k];
                Ok(w0 + (w1 - w0) * (u - u0) / (u1 - u0))
            }
        }
    }

    /// Exact `∫_{tau1}^{tau2} w_hat(v) dv`.
    pub fn normalizer(&self, period: &DeliveryPeriod) -> Result<f64> {
        let (a, b) = (period.tau1, period.tau2);
        match self {
            Self::Uniform => Ok(b - a),
            Self::Discounted { rate } => Ok((-rate * a).exp() * -(-rate * (b - a)).exp_m1() / rate),
            Self::Tabulated { knots } => {
                // trapezoid over the knots clipped to [a, b] is exact for a piecewise-linear w_hat
                let mut cuts = vec![a];
                cuts.extend(knots.iter().map(|&(u, _)| u).filter(|&u| u > a && u < b));
                cuts.push(b);
                let mut total = 0.0;
                for pair in cuts.windows(2) {
                    total += 0.5 * (pair[1] - pair[0]) * (self.settlement(pair[0])? + self.settlement(pair[1])?);
                }
                Ok(total)
            }
        }
    }
}

/// Fixed-order Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_QUADRATURE_ORDER).expect("default order is valid")
    }
}

impl QuadratureRule {
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidQuadrature(order));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Newton iteration on P_n from the Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[m - 1] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Delivery nodes with probability weights of the random delivery time `U`.
///
/// The weights are `GL_i · w_hat(u_i)` normalised by their own sum, so
/// `expect(|_| 1.0) == 1` holds to round-off for every scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryGrid {
    period: DeliveryPeriod,
    scheme: WeightScheme,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl DeliveryGrid {
    pub fn new(period: DeliveryPeriod, scheme: WeightScheme, quad: &QuadratureRule) -> Result<Self> {
        let half = 0.5 * period.length();
        let mid = 0.5 * (period.tau1 + period.tau2);
        let mut nodes = Vec::with_capacity(quad.order());
        let mut weights = Vec::with_capacity(quad.order());
        for (&x, &w) in quad.nodes().iter().zip(quad.weights()) {
            let u = mid + half * x;
            let settle = scheme.settlement(u)?;
            if !(settle > 0.0) {
                return Err(Error::InvalidScheme(format!(
                    "settlement weight {settle} at u = {u} is not positive"
                )));
            }
            nodes.push(u);
            weights.push(w * half * settle);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            period,
            scheme,
            nodes,
            weights,
        })
    }

    pub fn uniform(period: DeliveryPeriod, order: usize) -> Result<Self> {
        Self::new(period, WeightScheme::Uniform, &QuadratureRule::gauss_legendre(order)?)
    }

    pub fn period(&self) -> &DeliveryPeriod {
        &self.period
    }

    pub fn scheme(&self) -> &WeightScheme {
        &self.scheme
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted average of values already evaluated at the nodes.
    pub fn average(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `E[g(U)]`.
    pub fn expect<G>(&self, g: G) -> Result<f64>
    where
        G: Fn(f64) -> Result<f64>,
    {
        let mut acc = 0.0;
        for (&u, &w) in self.nodes.iter().zip(&self.weights) {
            let v = g(u)?;
            if !v.is_finite() {
                return Err(Error::NonFinite { node: u, value: v });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// `V[g(U)] = E[g²] - E[g]²`, evaluated as `E[(g - E g)²]` and clamped
    /// at zero below [`VARIANCE_CLAMP`]` · E[g]²`.
    pub fn variance<G>(&self, g: G) -> Result<f64>
    where
        G: Fn(f64) -> Result<f64>,
    {
        let values = self.evaluate(g)?;
        Ok(self.variance_of(&values))
    }

    pub fn variance_of(&self, values: &[f64]) -> f64 {
        let mean = self.average(values);
        let var: f64 = self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * (v - mean) * (v - mean))
            .sum();
        if var.abs() < VARIANCE_CLAMP * mean * mean {
            0.0
        } else {
            var
        }
    }

    /// Evaluates `g` at every node, rejecting non-finite values.
    pub fn evaluate<G>(&self, g: G) -> Result<Vec<f64>>
    where
        G: Fn(f64) -> Result<f64>,
    {
        self.nodes
            .iter()
            .map(|&u| {
                let v = g(u)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite { node: u, value: v })
                }
            })
            .collect()
    }
}

/// Settlement density `w(u, tau1, tau2)`.
pub fn density(scheme: &WeightScheme, u: f64, period: &DeliveryPeriod) -> Result<f64> {
    period.check(u)?;
    Ok(scheme.settlement(u)? / scheme.normalizer(period)?)
}

/// `E[g(U)]` for a one-off expectation; build a [`DeliveryGrid`] when
/// evaluating many.
pub fn expect<G>(g: G, scheme: &WeightScheme, period: &DeliveryPeriod, quad: &QuadratureRule) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    DeliveryGrid::new(*period, scheme.clone(), quad)?.expect(g)
}

pub fn variance<G>(g: G, scheme: &WeightScheme, period: &DeliveryPeriod, quad: &QuadratureRule) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    DeliveryGrid::new(*period, scheme.clone(), quad)?.variance(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit() -> DeliveryPeriod {
        DeliveryPeriod::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn period_invariants() {
        assert!(DeliveryPeriod::new(1.0, 1.0).is_err());
        assert!(DeliveryPeriod::new(-0.1, 1.0).is_err());
        assert!(DeliveryPeriod::new(2.0, 1.0).is_err());
        let p = DeliveryPeriod::new(0.25, 0.5).unwrap();
        assert!(!p.contains(0.25));
        assert!(p.contains(0.5));
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = QuadratureRule::gauss_legendre(5).unwrap();
        // degree 9 = 2n - 1
        let got = rule.integrate(0.0, 2.0, |x| x.powi(9) + 3.0 * x.powi(4));
        let exact = 2f64.powi(10) / 10.0 + 3.0 * 2f64.powi(5) / 5.0;
        assert!((got - exact).abs() < 1e-11 * exact);
        assert!(QuadratureRule::gauss_legendre(1).is_err());
        let w: f64 = QuadratureRule::default().weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_density() {
        assert_eq!(density(&WeightScheme::Uniform, 0.3, &unit()).unwrap(), 1.0);
        assert!(matches!(
            density(&WeightScheme::Uniform, 0.0, &unit()),
            Err(Error::OutsidePeriod { .. })
        ));
        assert!(density(&WeightScheme::Uniform, 1.2, &unit()).is_err());
    }

    #[test]
    fn discounted_density_closed_form() {
        let r = 0.05;
        let scheme = WeightScheme::discounted(r).unwrap();
        // u = 0 sits on the open end; the right limit is r / (1 - e^{-r})
        let oracle = r / (1.0 - (-r).exp());
        let got = scheme.settlement(0.0).unwrap() / scheme.normalizer(&unit()).unwrap();
        assert!((got - oracle).abs() < 1e-14);
        assert!((oracle - 1.0252).abs() < 1e-4);
        assert!((density(&scheme, 1e-300, &unit()).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn discounted_small_rate_matches_uniform() {
        let scheme = WeightScheme::discounted(1e-12).unwrap();
        for u in [0.1, 0.5, 0.99] {
            let d = density(&scheme, u, &unit()).unwrap();
            assert!((d - 1.0).abs() < 1e-11);
        }
        assert!(WeightScheme::discounted(0.0).is_err());
    }

    #[test]
    fn tabulated_scheme_checks() {
        assert!(WeightScheme::tabulated(vec![(0.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(WeightScheme::tabulated(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(WeightScheme::tabulated(vec![(0.0, 1.0)]).is_err());
        let s = WeightScheme::tabulated(vec![(0.0, 1.0), (0.5, 3.0), (1.0, 1.0)]).unwrap();
        assert!((s.normalizer(&unit()).unwrap() - 2.0).abs() < 1e-15);
        assert!((density(&s, 0.5, &unit()).unwrap() - 1.5).abs() < 1e-15);
        let grid = DeliveryGrid::new(unit(), s, &QuadratureRule::default()).unwrap();
        assert!((grid.expect(|_| Ok(1.0)).unwrap() - 1.0).abs() < 1e-14);
        // knots not covering the period
        let short = WeightScheme::tabulated(vec![(0.0, 1.0), (0.5, 1.0)]).unwrap();
        assert!(DeliveryGrid::new(unit(), short, &QuadratureRule::default()).is_err());
    }

    #[test]
    fn expectation_examples() {
        let q = QuadratureRule::default();
        let s = WeightScheme::Uniform;
        assert!((expect(|_| Ok(1.0), &s, &unit(), &q).unwrap() - 1.0).abs() < 1e-14);
        assert!((expect(Ok, &s, &unit(), &q).unwrap() - 0.5).abs() < 1e-14);
        assert!((variance(Ok, &s, &unit(), &q).unwrap() - 1.0 / 12.0).abs() < 1e-14);
        assert_eq!(variance(|_| Ok(3.0), &s, &unit(), &q).unwrap(), 0.0);
    }

    #[test]
    fn seasonal_expectation_on_a_quarter() {
        let (a, b, c) = (0.3, 0.1, 0.0);
        let period = DeliveryPeriod::new(0.0, 0.25).unwrap();
        let q = QuadratureRule::default();
        let g = |u: f64| Ok(a + b * (2.0 * PI * (u + c)).cos());
        let got = expect(g, &WeightScheme::Uniform, &period, &q).unwrap();
        // antiderivative of the cosine term
        let closed = a + b / (2.0 * PI * 0.25) * ((2.0 * PI * 0.25).sin() - 0.0);
        assert!((got - closed).abs() < 1e-12);
    }

    #[test]
    fn nan_is_reported_with_node() {
        let grid = DeliveryGrid::uniform(unit(), 8).unwrap();
        let err = grid.expect(|u| Ok(if u > 0.5 { f64::NAN } else { u })).unwrap_err();
        match err {
            Error::NonFinite { node, .. } => assert!(node > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn doubling_order_converges() {
        let period = DeliveryPeriod::new(0.3, 1.7).unwrap();
        let g = |u: f64| Ok((1.3 * u).sin() * (-u).exp() + u * u);
        for scheme in [WeightScheme::Uniform, WeightScheme::discounted(0.7).unwrap()] {
            let a = DeliveryGrid::new(period, scheme.clone(), &QuadratureRule::gauss_legendre(32).unwrap())
                .unwrap()
                .expect(g)
                .unwrap();
            let b = DeliveryGrid::new(period, scheme, &QuadratureRule::gauss_legendre(64).unwrap())
                .unwrap()
                .expect(g)
                .unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }
}
