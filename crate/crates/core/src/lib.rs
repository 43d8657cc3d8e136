//! Electricity swaps under jump-diffusion futures curves.
//!
//! The crate averages artificial instantaneous-delivery futures `f(t, τ)`
//! over a delivery period into swap prices, computes the market price of
//! delivery-period risk that moves the futures' martingale measure to the
//! swap's, and verifies every martingale and pathwise identity by Monte
//! Carlo.
//!
//! Modules, bottom-up:
//!
//! * [`delivery`]: periods, settlement weights, expectations over `U`.
//! * [`termstructure`]: volatility, jump coefficient, drift, mean reversion.
//! * [`levy`]: jump-size laws, MGFs, the Lévy–Khintchine functional.
//! * [`model`]: the assembled futures curve model under `P` or `Q`.
//! * [`mpdp`]: market prices of risk and their decomposition.
//! * [`dynamics`]: path simulation and swap, numéraire and density paths.
//! * [`stochvol`]: CIR variance, Feller checks, the stochastic-volatility
//!   density check.
//! * [`harness`]: martingale and identity reports.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delivery;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod levy;
pub mod model;
pub mod mpdp;
pub mod rng;
pub mod stochvol;
pub mod termstructure;

pub use delivery::{DeliveryGrid, DeliveryPeriod, QuadratureRule, WeightScheme};
pub use dynamics::{SimGrid, SimulatedPath, Simulator};
pub use error::{Error, Result};
pub use levy::{JumpSizeDistribution, LevyMeasure, MeasureTag};
pub use model::{FuturesModel, InitialCurve};
pub use termstructure::{DriftCurve, JumpCoefficientCurve, MeanReversion, VolatilityCurve};
