//! Path simulation of the log futures curve and the derived swap, numéraire
//! and density paths.
//!
//! One Brownian increment and one set of jump marks per `(path, step)` drive
//! every delivery node and every derived process, so the identities
//! `F = F^a · D` and `F ≤ F^A` hold path by path up to round-off.
//!
//! Under `Q` each step is the exact conditional martingale update
//! `Δ ln f = σ ΔW - ½σ²Δt + η Σz - λ(M(η) - 1)Δt` with left-point
//! coefficients. Under `P` the OU decay `e^{-∫κ}` is applied exactly:
//! `ln f' = d ln f + μ g + σ ΔW + η (Σz - λ E[Z] Δt)` with
//! `g = ∫ e^{-∫_s κ} ds` over the step.

use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::delivery::DeliveryGrid;
use crate::error::{Error, Result};
use crate::levy::{JumpSizeDistribution, MeasureTag};
use crate::model::FuturesModel;
use crate::mpdp::{self, MpdpQ, DENOMINATOR_GUARD};
use crate::rng::{StreamKey, StreamTag};

#[derive(Debug, Clone, PartialEq)]
pub struct SimGrid {
    horizon: f64,
    t_steps: usize,
    n_paths: usize,
    seed: u64,
    delivery: DeliveryGrid,
}

impl SimGrid {
    pub fn new(delivery: DeliveryGrid, horizon: f64, t_steps: usize, n_paths: usize, seed: u64) -> Result<Self> {
        if t_steps == 0 || n_paths == 0 {
            return Err(Error::InvalidGrid(format!(
                "need at least one step and one path, got {t_steps} steps and {n_paths} paths"
            )));
        }
        let tau1 = delivery.period().tau1();
        if !(horizon > 0.0 && horizon <= tau1) {
            return Err(Error::InvalidGrid(format!(
                "horizon {horizon} must lie in (0, tau1 = {tau1}]"
            )));
        }
        Ok(Self {
            horizon,
            t_steps,
            n_paths,
            seed,
            delivery,
        })
    }

    /// Grid running up to the start of delivery.
    pub fn to_delivery(delivery: DeliveryGrid, t_steps: usize, n_paths: usize, seed: u64) -> Result<Self> {
        let tau1 = delivery.period().tau1();
        Self::new(delivery, tau1, t_steps, n_paths, seed)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn t_steps(&self) -> usize {
        self.t_steps
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn delivery(&self) -> &DeliveryGrid {
        &self.delivery
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.t_steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.t_steps {
            self.horizon
        } else {
            n as f64 * self.dt()
        }
    }

    /// `t_0, ..., t_N`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.t_steps).map(|n| self.time(n)).collect()
    }

    /// Left points `t_0, ..., t_{N-1}` at which step coefficients are taken.
    pub fn left_times(&self) -> Vec<f64> {
        (0..self.t_steps).map(|n| self.time(n)).collect()
    }

    /// Step indices `0, k, 2k, ...`, always ending at `N`.
    pub fn checkpoints(&self, every: usize) -> Vec<usize> {
        let every = every.max(1);
        let mut out: Vec<usize> = (0..=self.t_steps).step_by(every).collect();
        if *out.last().unwrap() != self.t_steps {
            out.push(self.t_steps);
        }
        out
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn with_paths(&self, n_paths: usize) -> Result<Self> {
        Self::new(self.delivery.clone(), self.horizon, self.t_steps, n_paths, self.seed)
    }

    pub fn with_steps(&self, t_steps: usize) -> Result<Self> {
        Self::new(self.delivery.clone(), self.horizon, t_steps, self.n_paths, self.seed)
    }
}

/// Delivery averages at one step's left point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepAverages {
    pub mean_sigma: f64,
    pub var_sigma: f64,
    pub mean_eta: f64,
    /// `E[M(η)] - 1`.
    pub mean_mgf_m1: f64,
    /// `M(E[η]) - 1`.
    pub mgf_of_mean_m1: f64,
    pub mean_mu: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone)]
struct StepTable {
    nodes: usize,
    ln_f0: Vec<f64>,
    /// `[n * nodes + k]` coefficient arrays, zero where a component is absent.
    sigma: Vec<f64>,
    eta: Vec<f64>,
    drift: Vec<f64>,
    decay: Vec<f64>,
    kernel: Vec<f64>,
    averages: Vec<StepAverages>,
    intensity: f64,
    jump_dist: Option<JumpSizeDistribution>,
}

fn located(t: f64, u: f64, e: Error) -> Error {
    Error::InvalidModel(format!("at t = {t}, u = {u}: {e}"))
}

impl StepTable {
    fn build(model: &FuturesModel, grid: &SimGrid, intensity_override: Option<f64>) -> Result<Self> {
        model.validate()?;
        let delivery = grid.delivery();
        let nodes = delivery.len();
        let steps = grid.t_steps();
        let dt = grid.dt();
        let ln_f0 = delivery
            .nodes()
            .iter()
            .map(|&u| model.f0().eval(u).map(f64::ln))
            .collect::<Result<Vec<_>>>()?;
        let intensity = match (model.jumps(), intensity_override) {
            (Some(_), Some(l)) if !(l.is_finite() && l > 0.0) => {
                return Err(Error::InvalidJumps(format!("jump intensity must be positive, got {l}")))
            }
            (Some(_), Some(l)) => l,
            (Some(j), None) => j.levy.intensity(),
            (None, _) => 0.0,
        };
        let jump_dist = model.jumps().map(|j| *j.levy.dist());
        let m1 = jump_dist.map_or(0.0, |d| d.mean());
        let physical = model.measure() == MeasureTag::P;

        let mut table = Self {
            nodes,
            ln_f0,
            sigma: vec![0.0; steps * nodes],
            eta: vec![0.0; steps * nodes],
            drift: vec![0.0; steps * nodes],
            decay: vec![1.0; steps],
            kernel: vec![dt; steps],
            averages: Vec::with_capacity(steps),
            intensity,
            jump_dist,
        };
        let mut mgf_m1 = vec![0.0; nodes];
        for n in 0..steps {
            let (t, t_next) = (grid.time(n), grid.time(n + 1));
            let mut avg = StepAverages::default();
            if let Some(drift) = model.drift() {
                let integral = drift.kappa.integral(t, t_next)?;
                table.decay[n] = (-integral).exp();
                table.kernel[n] = if integral == 0.0 {
                    dt
                } else {
                    -(-integral).exp_m1() / integral * dt
                };
                avg.kappa = drift.kappa.eval(t)?;
            }
            let row = n * nodes..(n + 1) * nodes;
            for (k, &u) in delivery.nodes().iter().enumerate() {
                let i = n * nodes + k;
                table.sigma[i] = model.sigma_at(t, u).map_err(|e| located(t, u, e))?;
                table.eta[i] = model.eta_at(t, u).map_err(|e| located(t, u, e))?;
                if let Some(dist) = &jump_dist {
                    mgf_m1[k] = dist.mgf_minus_one(table.eta[i]).map_err(|e| located(t, u, e))?;
                }
                let s = table.sigma[i];
                table.drift[i] = if physical {
                    let mu = model.drift().unwrap().mu.eval(t, u).map_err(|e| located(t, u, e))?;
                    mu * table.kernel[n] - table.eta[i] * intensity * m1 * dt
                } else {
                    -(0.5 * s * s + intensity * mgf_m1[k]) * dt
                };
                if physical {
                    avg.mean_mu += delivery.weights()[k] * model.drift().unwrap().mu.eval(t, u)?;
                }
            }
            avg.mean_sigma = delivery.average(&table.sigma[row.clone()]);
            avg.var_sigma = delivery.variance_of(&table.sigma[row.clone()]);
            if let Some(dist) = &jump_dist {
                avg.mean_eta = delivery.average(&table.eta[row]);
                avg.mean_mgf_m1 = delivery.average(&mgf_m1);
                avg.mgf_of_mean_m1 = dist.mgf_minus_one(avg.mean_eta)?;
            }
            table.averages.push(avg);
        }
        Ok(table)
    }

    fn row<'a>(&self, v: &'a [f64], n: usize) -> &'a [f64] {
        &v[n * self.nodes..(n + 1) * self.nodes]
    }
}

/// One simulated path: the log curve at every grid time plus the noise that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub index: usize,
    nodes: usize,
    /// `[n * nodes + k]` for `n = 0..=N`.
    ln_f: Vec<f64>,
    /// Brownian increments driving the curve, one per step.
    pub dw: Vec<f64>,
    jump_offsets: Vec<usize>,
    jump_sizes: Vec<f64>,
}

impl SimulatedPath {
    pub fn steps(&self) -> usize {
        self.dw.len()
    }

    pub fn ln_f(&self, n: usize) -> &[f64] {
        &self.ln_f[n * self.nodes..(n + 1) * self.nodes]
    }

    /// Jump sizes that arrived during step `n`, i.e. in `(t_n, t_{n+1}]`.
    pub fn jumps(&self, n: usize) -> &[f64] {
        &self.jump_sizes[self.jump_offsets[n]..self.jump_offsets[n + 1]]
    }

    /// `(time, size)` marks, stamped at the right end of their step.
    pub fn jump_marks(&self, grid: &SimGrid) -> Vec<(f64, f64)> {
        (0..self.steps())
            .flat_map(|n| self.jumps(n).iter().map(move |&z| (grid.time(n + 1), z)))
            .collect()
    }
}

/// All paths of a simulation, kept in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub paths: Vec<SimulatedPath>,
    /// Jump counting intensity per step.
    pub intensities: Vec<f64>,
}

/// Swap-level series of one path at every grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapPath {
    pub ln_f_swap: Vec<f64>,
    pub geometric: Vec<f64>,
    pub approximated: Vec<f64>,
    pub arithmetic: Vec<f64>,
    pub numeraire: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    model: FuturesModel,
    grid: SimGrid,
    table: StepTable,
    key: StreamKey,
    /// Jump counting intensity per step.
    intensities: Vec<f64>,
    /// `Π₁` per step when the curve is simulated under `Q̃`.
    shift: Option<Vec<f64>>,
}

impl Simulator {
    /// Simulation under the model's own measure.
    pub fn new(model: &FuturesModel, grid: &SimGrid) -> Result<Self> {
        let table = StepTable::build(model, grid, None)?;
        let intensities = vec![table.intensity; grid.t_steps()];
        Ok(Self {
            model: model.clone(),
            grid: grid.clone(),
            table,
            key: StreamKey::new(grid.seed()),
            intensities,
            shift: None,
        })
    }

    /// Simulation of a `Q` model under `Q̃`: Brownian increments carry the
    /// drift `-Π₁Δt` and jumps arrive with intensity `λ(1 - Π₂)`.
    pub fn qtilde(model_q: &FuturesModel, grid: &SimGrid, mpdp: &[MpdpQ]) -> Result<Self> {
        Self::qtilde_inner(model_q, grid, mpdp, None)
    }

    /// As [`Simulator::qtilde`] with the `Q` intensity replaced, e.g. by an
    /// [`effective_intensity`].
    pub fn qtilde_with_intensity(
        model_q: &FuturesModel,
        grid: &SimGrid,
        mpdp: &[MpdpQ],
        intensity: f64,
    ) -> Result<Self> {
        Self::qtilde_inner(model_q, grid, mpdp, Some(intensity))
    }

    fn qtilde_inner(model_q: &FuturesModel, grid: &SimGrid, mpdp: &[MpdpQ], intensity: Option<f64>) -> Result<Self> {
        if model_q.measure() != MeasureTag::Q {
            return Err(Error::InvalidModel(
                "simulation under Q̃ starts from a model under Q".into(),
            ));
        }
        if mpdp.len() != grid.t_steps() {
            return Err(Error::ShapeMismatch(format!(
                "{} MPDP values for {} steps",
                mpdp.len(),
                grid.t_steps()
            )));
        }
        let table = StepTable::build(model_q, grid, intensity)?;
        let mut intensities = Vec::with_capacity(mpdp.len());
        for (n, m) in mpdp.iter().enumerate() {
            let factor = 1.0 - m.pi2;
            if !(factor > 0.0) {
                return Err(Error::Positivity { step: n, factor });
            }
            intensities.push(table.intensity * factor);
        }
        Ok(Self {
            model: model_q.clone(),
            grid: grid.clone(),
            table,
            key: StreamKey::new(grid.seed()),
            intensities,
            shift: Some(mpdp.iter().map(|m| m.pi1).collect()),
        })
    }

    pub fn model(&self) -> &FuturesModel {
        &self.model
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    pub fn averages(&self) -> &[StepAverages] {
        &self.table.averages
    }

    /// Jump counting intensity per step.
    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    /// Intensity of the jump compensator in the model's own dynamics.
    pub fn model_intensity(&self) -> f64 {
        self.table.intensity
    }

    /// Brownian increments and jump marks of path `i`.
    fn noise(&self, i: usize) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
        let steps = self.grid.t_steps();
        let sqrt_dt = self.grid.dt().sqrt();
        let dt = self.grid.dt();
        let path = i as u64;
        let mut dw = Vec::with_capacity(steps);
        let mut offsets = Vec::with_capacity(steps + 1);
        let mut sizes = Vec::new();
        offsets.push(0);
        for n in 0..steps {
            let mut rng = self.key.stream(path, n as u64, StreamTag::Diffusion);
            let z: f64 = StandardNormal.sample(&mut rng);
            dw.push(sqrt_dt * z);
            if let Some(dist) = &self.table.jump_dist {
                let mean = self.intensities[n] * dt;
                let count = if mean > 0.0 {
                    let mut rng = self.key.stream(path, n as u64, StreamTag::JumpCount);
                    Poisson::new(mean).expect("positive finite mean").sample(&mut rng) as usize
                } else {
                    0
                };
                if count > 0 {
                    let mut rng = self.key.stream(path, n as u64, StreamTag::JumpSize);
                    sizes.extend((0..count).map(|_| dist.sample(&mut rng)));
                }
            }
            offsets.push(sizes.len());
        }
        (dw, offsets, sizes)
    }

    pub fn path(&self, i: usize) -> SimulatedPath {
        let (mut dw, jump_offsets, jump_sizes) = self.noise(i);
        if let Some(shift) = &self.shift {
            let dt = self.grid.dt();
            for (w, p) in dw.iter_mut().zip(shift) {
                *w -= p * dt;
            }
        }
        let t = &self.table;
        let k = t.nodes;
        let steps = self.grid.t_steps();
        let mut ln_f = Vec::with_capacity((steps + 1) * k);
        ln_f.extend_from_slice(&t.ln_f0);
        for n in 0..steps {
            let jump_sum: f64 = jump_sizes[jump_offsets[n]..jump_offsets[n + 1]].iter().sum();
            let d = t.decay[n];
            let base = n * k;
            for j in 0..k {
                let i = base + j;
                let next = d * ln_f[i] + t.drift[i] + t.sigma[i] * dw[n] + t.eta[i] * jump_sum;
                ln_f.push(next);
            }
        }
        SimulatedPath {
            index: i,
            nodes: k,
            ln_f,
            dw,
            jump_offsets,
            jump_sizes,
        }
    }

    /// Maps every path through `f` in parallel; results come back in path
    /// order and do not depend on the number of threads.
    pub fn run<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&SimulatedPath) -> T + Sync + Send,
    {
        (0..self.grid.n_paths())
            .into_par_iter()
            .map(|i| f(&self.path(i)))
            .collect()
    }

    pub fn paths(&self) -> PathSet {
        PathSet {
            times: self.grid.times(),
            paths: self.run(|p| p.clone()),
            intensities: self.intensities.clone(),
        }
    }

    fn delivery(&self) -> &DeliveryGrid {
        self.grid.delivery()
    }

    /// `F(t) = exp(E_U[ln f(t, U)])`.
    pub fn geometric(&self, path: &SimulatedPath) -> Vec<f64> {
        self.ln_swap(path).into_iter().map(f64::exp).collect()
    }

    pub fn ln_swap(&self, path: &SimulatedPath) -> Vec<f64> {
        (0..=path.steps())
            .map(|n| self.delivery().average(path.ln_f(n)))
            .collect()
    }

    /// `F^A(t) = E_U[f(t, U)]`.
    pub fn arithmetic(&self, path: &SimulatedPath) -> Vec<f64> {
        let w = self.delivery().weights();
        (0..=path.steps())
            .map(|n| w.iter().zip(path.ln_f(n)).map(|(w, x)| w * x.exp()).sum())
            .collect()
    }

    /// `ln E_U[e^{η(t_n, U) z}]`, evaluated stably.
    fn ln_mean_exp(&self, n: usize, z: f64) -> f64 {
        let eta = self.table.row(&self.table.eta, n);
        let top = eta.iter().map(|e| e * z).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self
            .delivery()
            .weights()
            .iter()
            .zip(eta)
            .map(|(w, e)| w * (e * z - top).exp())
            .sum();
        top + s.ln()
    }

    /// Per-step increments of `ln D`.
    fn ln_numeraire_increments(&self, path: &SimulatedPath) -> Vec<f64> {
        let dt = self.grid.dt();
        (0..path.steps())
            .map(|n| {
                let a = &self.table.averages[n];
                let jumps: f64 = path
                    .jumps(n)
                    .iter()
                    .map(|&z| self.ln_mean_exp(n, z) - a.mean_eta * z)
                    .sum();
                -0.5 * a.var_sigma * dt - jumps
            })
            .collect()
    }

    /// `D(t) = exp(-½∫V[σ]ds - Σ (ln E_U[e^{ηz}] - E_U[η] z))`.
    pub fn numeraire(&self, path: &SimulatedPath) -> Vec<f64> {
        cumulative_exp(0.0, &self.ln_numeraire_increments(path))
    }

    /// `F^a` from the exponential recursion for `X̄^a`, driven by the
    /// same noise as the curve.
    pub fn approximated(&self, path: &SimulatedPath) -> Vec<f64> {
        let dt = self.grid.dt();
        let ln_f = self.ln_swap(path);
        let lambda = self.table.intensity;
        let m1 = self.table.jump_dist.map_or(0.0, |d| d.mean());
        let physical = self.model.measure() == MeasureTag::P;
        let increments: Vec<f64> = (0..path.steps())
            .map(|n| {
                let a = &self.table.averages[n];
                let jumps: f64 = path.jumps(n).iter().map(|&z| self.ln_mean_exp(n, z)).sum();
                let diffusion = a.mean_sigma * path.dw[n];
                if physical {
                    (self.table.decay[n] - 1.0) * ln_f[n] + a.mean_mu * self.table.kernel[n] + diffusion + jumps
                        - lambda * a.mean_eta * m1 * dt
                        + 0.5 * a.var_sigma * dt
                } else {
                    diffusion + jumps - (0.5 * a.mean_sigma * a.mean_sigma + lambda * a.mean_mgf_m1) * dt
                }
            })
            .collect();
        cumulative_exp(ln_f[0], &increments)
    }

    pub fn swap_path(&self, path: &SimulatedPath) -> SwapPath {
        let ln_f_swap = self.ln_swap(path);
        SwapPath {
            geometric: ln_f_swap.iter().map(|x| x.exp()).collect(),
            approximated: self.approximated(path),
            arithmetic: self.arithmetic(path),
            numeraire: self.numeraire(path),
            ln_f_swap,
        }
    }

    /// `F` simulated directly from its `Q̃` dynamics on the noise of path
    /// `i`: volatility `E[σ]`, jump exponent `E[η] z`, intensity
    /// `λ(1 - Π₂)` and the exact compensator.
    pub fn swap_qtilde_direct(&self, i: usize) -> Result<Vec<f64>> {
        if self.shift.is_none() {
            return Err(Error::InvalidModel(
                "direct Q̃ swap simulation needs a Q̃ simulator".into(),
            ));
        }
        let (dw, offsets, sizes) = self.noise(i);
        let dt = self.grid.dt();
        let ln0 = self.delivery().average(&self.table.ln_f0);
        let increments: Vec<f64> = (0..self.grid.t_steps())
            .map(|n| {
                let a = &self.table.averages[n];
                let jump_sum: f64 = sizes[offsets[n]..offsets[n + 1]].iter().sum();
                a.mean_sigma * dw[n] - 0.5 * a.mean_sigma * a.mean_sigma * dt + a.mean_eta * jump_sum
                    - self.intensities[n] * a.mgf_of_mean_m1 * dt
            })
            .collect();
        Ok(cumulative_exp(ln0, &increments))
    }

    /// `(Π₁^{PQ̃}, Π₂^{PQ̃})` at every step's left point along a path under
    /// `P`, with the state `ln F(t_n)` read from the path.
    pub fn true_mpr_series(&self, path: &SimulatedPath) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.model.measure() != MeasureTag::P {
            return Err(Error::InvalidModel(
                "the true market price of risk needs a model under P".into(),
            ));
        }
        let ln_f = self.ln_swap(path);
        let m1 = self.table.jump_dist.map_or(0.0, |d| d.mean());
        let has_sigma = self.model.sigma().is_some();
        let mut pi1 = Vec::with_capacity(path.steps());
        let mut pi2 = Vec::with_capacity(path.steps());
        for (n, (a, &x)) in self.table.averages.iter().zip(&ln_f).enumerate() {
            let state = a.mean_mu - a.kappa * x;
            pi1.push(if has_sigma {
                (state + 0.5 * a.mean_sigma * a.mean_sigma) / a.mean_sigma
            } else {
                0.0
            });
            pi2.push(if self.table.jump_dist.is_some() {
                let denom = a.mgf_of_mean_m1;
                if denom.abs() < DENOMINATOR_GUARD {
                    return Err(Error::NearZeroDenominator {
                        denominator: denom,
                        context: format!("M(E[η]) - 1 at step {n}"),
                    });
                }
                let mut p = 1.0 - m1 * a.mean_eta / denom;
                if !has_sigma {
                    p += state / (self.table.intensity * denom);
                }
                p
            } else {
                0.0
            });
        }
        Ok((pi1, pi2))
    }

    /// `E_Q[F(t_n)]` for every grid time: the swap drift under `Q` in closed
    /// form, `F(0) exp(-Σ [½V[σ] + λ(E[M(η)] - M(E[η]))] Δt)`.
    pub fn expected_swap_q(&self) -> Result<Vec<f64>> {
        if self.model.measure() != MeasureTag::Q || self.shift.is_some() {
            return Err(Error::InvalidModel("the closed-form swap drift applies under Q".into()));
        }
        let dt = self.grid.dt();
        let lambda = self.table.intensity;
        let increments: Vec<f64> = self
            .table
            .averages
            .iter()
            .map(|a| -(0.5 * a.var_sigma + lambda * (a.mean_mgf_m1 - a.mgf_of_mean_m1)) * dt)
            .collect();
        Ok(cumulative_exp(self.delivery().average(&self.table.ln_f0), &increments))
    }
}

fn cumulative_exp(start: f64, increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = start;
    out.push(acc.exp());
    for dx in increments {
        acc += dx;
        out.push(acc.exp());
    }
    out
}

/// Density path `Z(t_n)` of a measure change with per-step kernels:
/// `exp(-ΣΠ₁ΔW - ½ΣΠ₁²Δt) · Π (1 - Π₂)^{k_n} · exp(λ ΣΠ₂Δt)`, where `k_n`
/// is the number of jumps in step `n` and `λ` the path's jump intensity.
pub fn radon_nikodym_z(pi1: &[f64], pi2: &[f64], intensity: f64, dt: f64, path: &SimulatedPath) -> Result<Vec<f64>> {
    if pi1.len() != path.steps() || pi2.len() != path.steps() {
        return Err(Error::ShapeMismatch(format!(
            "{} / {} kernel values for {} steps",
            pi1.len(),
            pi2.len(),
            path.steps()
        )));
    }
    let mut increments = Vec::with_capacity(path.steps());
    for n in 0..path.steps() {
        let factor = 1.0 - pi2[n];
        if !(factor > 0.0) {
            return Err(Error::Positivity { step: n, factor });
        }
        let k = path.jumps(n).len() as f64;
        increments
            .push(-pi1[n] * path.dw[n] - 0.5 * pi1[n] * pi1[n] * dt + k * (-pi2[n]).ln_1p() + intensity * pi2[n] * dt);
    }
    Ok(cumulative_exp(0.0, &increments))
}

/// MPDP at every step's left point.
pub fn mpdp_series(model_q: &FuturesModel, grid: &SimGrid) -> Result<Vec<MpdpQ>> {
    mpdp::mpdp_series(model_q, grid.delivery(), &grid.left_times())
}

/// `E[λ(U)]` for a delivery-dependent intensity.
pub fn effective_intensity<L: Fn(f64) -> f64>(lambda_of_u: L, delivery: &DeliveryGrid) -> Result<f64> {
    delivery.expect(|u| {
        let l = lambda_of_u(u);
        if l.is_finite() && l > 0.0 {
            Ok(l)
        } else {
            Err(Error::InvalidJumps(format!("intensity {l} at u = {u} is not positive")))
        }
    })
}

pub fn simulate_paths(model: &FuturesModel, grid: &SimGrid) -> Result<PathSet> {
    Ok(Simulator::new(model, grid)?.paths())
}

/// Per-path `F` series.
pub fn swap_geometric(paths: &PathSet, delivery: &DeliveryGrid) -> Vec<Vec<f64>> {
    paths
        .paths
        .iter()
        .map(|p| (0..=p.steps()).map(|n| delivery.average(p.ln_f(n)).exp()).collect())
        .collect()
}

/// Per-path `F^A` series.
pub fn swap_arithmetic(paths: &PathSet, delivery: &DeliveryGrid) -> Vec<Vec<f64>> {
    paths
        .paths
        .iter()
        .map(|p| {
            (0..=p.steps())
                .map(|n| delivery.weights().iter().zip(p.ln_f(n)).map(|(w, x)| w * x.exp()).sum())
                .collect()
        })
        .collect()
}

/// Per-path `F^a` series for paths simulated from `model` on `grid`.
pub fn swap_approximated(model: &FuturesModel, paths: &PathSet, grid: &SimGrid) -> Result<Vec<Vec<f64>>> {
    let sim = Simulator::new(model, grid)?;
    Ok(paths.paths.iter().map(|p| sim.approximated(p)).collect())
}

/// Per-path `D` series for paths simulated from `model` on `grid`.
pub fn discount_factor_d(model: &FuturesModel, paths: &PathSet, grid: &SimGrid) -> Result<Vec<Vec<f64>>> {
    let sim = Simulator::new(model, grid)?;
    Ok(paths.paths.iter().map(|p| sim.numeraire(p)).collect())
}

/// Per-path `F` simulated directly under `Q̃`.
pub fn simulate_swap_qtilde(model_q: &FuturesModel, mpdp: &[MpdpQ], grid: &SimGrid) -> Result<Vec<Vec<f64>>> {
    let sim = Simulator::qtilde(model_q, grid, mpdp)?;
    let out: Vec<Result<Vec<f64>>> = (0..grid.n_paths())
        .into_par_iter()
        .map(|i| sim.swap_qtilde_direct(i))
        .collect();
    out.into_iter().collect()
}
