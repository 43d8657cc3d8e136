//! Monte Carlo martingale tests and pathwise identity tests.
//!
//! Reports are pure functions of their inputs. Sample moments are taken over
//! values sorted along the path axis, so verdicts do not depend on path order.

use crate::error::{Error, Result};

/// Width of the acceptance band in standard errors.
pub const Z_BAND: f64 = 3.0;

/// Floor for the denominator of relative deviations.
pub const RELATIVE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub time: f64,
    pub mean: f64,
    pub std_error: f64,
    /// `(mean - initial) / std_error`; zero or infinite for zero-variance
    /// checkpoints.
    pub z: f64,
}

impl Checkpoint {
    pub fn passes(&self) -> bool {
        self.z.abs() <= Z_BAND
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    pub name: String,
    pub initial: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub pass: bool,
}

impl MartingaleReport {
    pub fn max_abs_z(&self) -> f64 {
        self.checkpoints.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

/// Sample mean and standard error of the mean, after sorting. A constant
/// sample returns its value with zero error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    if values.len() >= 2 && values.iter().all(|v| v.to_bits() == values[0].to_bits()) {
        return (values[0], 0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    if sorted.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

fn checkpoint(time: f64, values: &[f64], initial: f64) -> Checkpoint {
    if values.iter().all(|v| v.to_bits() == values[0].to_bits()) {
        let exact = values[0] == initial;
        return Checkpoint {
            time,
            mean: values[0],
            std_error: 0.0,
            z: if exact { 0.0 } else { f64::INFINITY },
        };
    }
    let (mean, std_error) = mean_and_se(values);
    Checkpoint {
        time,
        mean,
        std_error,
        z: (mean - initial) / std_error,
    }
}

/// `series[path][checkpoint]` against the constant `initial`.
pub fn martingale_test(name: &str, times: &[f64], series: &[Vec<f64>], initial: f64) -> Result<MartingaleReport> {
    if series.len() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "a martingale test needs at least two paths, got {}",
            series.len()
        )));
    }
    if let Some(bad) = series.iter().find(|s| s.len() != times.len()) {
        return Err(Error::ShapeMismatch(format!(
            "path has {} checkpoints, expected {}",
            bad.len(),
            times.len()
        )));
    }
    let mut column = vec![0.0; series.len()];
    let checkpoints: Vec<Checkpoint> = times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            for (c, s) in column.iter_mut().zip(series) {
                *c = s[j];
            }
            checkpoint(t, &column, initial)
        })
        .collect();
    let pass = checkpoints.iter().all(Checkpoint::passes);
    Ok(MartingaleReport {
        name: name.to_string(),
        initial,
        checkpoints,
        pass,
    })
}

/// Single-checkpoint convenience: `values[path]`.
pub fn martingale_test_terminal(name: &str, time: f64, values: &[f64], initial: f64) -> Result<MartingaleReport> {
    let series: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    martingale_test(name, &[time], &series, initial)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub name: String,
    pub max_relative_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `max |lhs - rhs| / max(|rhs|, 1e-300)` over paths × times.
pub fn identity_test(name: &str, lhs: &[Vec<f64>], rhs: &[Vec<f64>], tol: f64) -> Result<IdentityReport> {
    if lhs.len() != rhs.len() || lhs.iter().zip(rhs).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::ShapeMismatch(format!(
            "identity {name}: lhs and rhs shapes differ"
        )));
    }
    let mut max_dev: f64 = 0.0;
    for (a, b) in lhs.iter().zip(rhs) {
        for (&x, &y) in a.iter().zip(b) {
            let dev = (x - y).abs() / y.abs().max(RELATIVE_FLOOR);
            // NaN deviations must fail the report
            max_dev = if dev.is_nan() { f64::INFINITY } else { max_dev.max(dev) };
        }
    }
    Ok(IdentityReport {
        name: name.to_string(),
        max_relative_deviation: max_dev,
        tolerance: tol,
        pass: max_dev <= tol,
    })
}
