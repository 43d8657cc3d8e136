use elswap::delivery::{DeliveryGrid, DeliveryPeriod};
use elswap::dynamics::{effective_intensity, mpdp_series, radon_nikodym_z, SimGrid, Simulator};
use elswap::harness::{martingale_test, mean_and_se};
use elswap::levy::{JumpSizeDistribution, LevyMeasure, MeasureTag};
use elswap::model::{FuturesModel, InitialCurve};
use elswap::stochvol::{simulate_cir, CirParams};
use elswap::termstructure::{JumpCoefficientCurve, VolatilityCurve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn delivery(tau1: f64, tau2: f64) -> DeliveryGrid {
    DeliveryGrid::uniform(DeliveryPeriod::new(tau1, tau2).unwrap(), 16).unwrap()
}

fn jump_model(lambda: f64) -> FuturesModel {
    FuturesModel::risk_neutral(InitialCurve::tabulated(vec![(0.4, 45.0), (0.8, 55.0)]).unwrap())
        .with_diffusion(VolatilityCurve::samuelson(0.5, 1.5).unwrap())
        .with_jumps(
            JumpCoefficientCurve::piecewise(vec![0.55], vec![0.4, 0.9]).unwrap(),
            LevyMeasure::new(lambda, JumpSizeDistribution::normal(0.05, 0.15).unwrap(), MeasureTag::Q).unwrap(),
        )
        .unwrap()
}

fn z_series(sim: &Simulator) -> Vec<Vec<f64>> {
    let grid = sim.grid();
    let mpdp = mpdp_series(sim.model(), grid).unwrap();
    let pi1: Vec<f64> = mpdp.iter().map(|m| m.pi1).collect();
    let pi2: Vec<f64> = mpdp.iter().map(|m| m.pi2).collect();
    sim.run(|path| radon_nikodym_z(&pi1, &pi2, sim.model_intensity(), grid.dt(), path).unwrap())
}

#[test]
fn paths_do_not_depend_on_thread_count() {
    let model = jump_model(3.0);
    let grid = SimGrid::new(delivery(0.4, 0.7), 0.4, 12, 500, 42).unwrap();
    let mpdp = mpdp_series(&model, &grid).unwrap();
    let sims = [
        Simulator::new(&model, &grid).unwrap(),
        Simulator::qtilde(&model, &grid, &mpdp).unwrap(),
    ];
    for sim in &sims {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sim.run(|path| (sim.swap_path(path), path.clone())))
        };
        assert_eq!(run(1), run(4));
    }
}

#[test]
fn single_paths_are_addressable_out_of_order() {
    let model = jump_model(3.0);
    let grid = SimGrid::new(delivery(0.4, 0.7), 0.4, 8, 64, 9).unwrap();
    let sim = Simulator::new(&model, &grid).unwrap();
    let all = sim.paths();
    for i in [63, 0, 17] {
        assert_eq!(sim.path(i), all.paths[i]);
    }
    let other = Simulator::new(&model, &grid.with_seed(10)).unwrap();
    assert_ne!(other.path(0).dw, sim.path(0).dw);
}

#[test]
fn closed_form_drift_converges_under_refinement() {
    let model = jump_model(4.0);
    let base = SimGrid::new(delivery(0.4, 0.7), 0.4, 5, 2, 1).unwrap();
    let terminal = |steps: usize| {
        let grid = base.with_steps(steps).unwrap();
        *Simulator::new(&model, &grid)
            .unwrap()
            .expected_swap_q()
            .unwrap()
            .last()
            .unwrap()
    };
    let values: Vec<f64> = [5, 10, 20, 40, 640].into_iter().map(terminal).collect();
    let limit = values[4];
    let errors: Vec<f64> = values[..4].iter().map(|v| (v - limit).abs()).collect();
    for w in errors.windows(2) {
        // left-point sums converge at first order
        let ratio = w[0] / w[1];
        assert!((1.6..2.4).contains(&ratio), "errors {errors:?}");
    }
}

#[test]
fn swap_is_a_martingale_under_qtilde_with_effective_intensity() {
    let d = delivery(0.4, 0.7);
    let lambda_of_u = |u: f64| 2.0 + 4.0 * (u - 0.4);
    let lambda = effective_intensity(lambda_of_u, &d).unwrap();
    assert!((lambda - 2.6).abs() < 1e-12);
    let model = jump_model(lambda);
    let grid = SimGrid::new(d, 0.4, 10, 40_000, 5).unwrap();
    let mpdp = mpdp_series(&model, &grid).unwrap();
    let sim = Simulator::qtilde_with_intensity(&model, &grid, &mpdp, lambda).unwrap();
    let series = sim.run(|path| sim.geometric(path));
    let idx = grid.checkpoints(5);
    let rows: Vec<Vec<f64>> = series.iter().map(|s| idx.iter().map(|&n| s[n]).collect()).collect();
    let times: Vec<f64> = idx.iter().map(|&n| grid.time(n)).collect();
    let report = martingale_test("F under Q~", &times, &rows, series[0][0]).unwrap();
    assert!(report.pass, "max |z| = {}", report.max_abs_z());
    for i in [0, 1, 2] {
        let direct = sim.swap_qtilde_direct(i).unwrap();
        for (a, b) in direct.iter().zip(&series[i]) {
            assert!((a - b).abs() <= 1e-11 * b);
        }
    }
}

#[test]
fn density_means_agree_across_seeds() {
    let model = jump_model(3.0);
    let grid = SimGrid::new(delivery(0.4, 0.7), 0.4, 10, 40_000, 100).unwrap();
    let terminal = |seed: u64| {
        let sim = Simulator::new(&model, &grid.with_seed(seed)).unwrap();
        let z: Vec<f64> = z_series(&sim).into_iter().map(|s| *s.last().unwrap()).collect();
        mean_and_se(&z)
    };
    let (m1, se1) = terminal(100);
    let (m2, se2) = terminal(200);
    assert!(((m1 - 1.0) / se1).abs() <= 3.0, "{m1} +- {se1}");
    assert!(((m2 - 1.0) / se2).abs() <= 3.0, "{m2} +- {se2}");
    assert!((m1 - m2).abs() <= 3.0 * se1.hypot(se2));
    assert_ne!(m1, m2);
}

/// Full-truncation Euler scheme on a fine grid.
fn euler_cir(params: &CirParams, horizon: f64, steps: usize, n_paths: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = horizon / steps as f64;
    (0..n_paths)
        .map(|_| {
            let mut nu = params.nu0;
            for _ in 0..steps {
                let pos = nu.max(0.0);
                let z: f64 = StandardNormal.sample(&mut rng);
                nu += params.kappa * (params.theta - pos) * dt + params.sigma * (pos * dt).sqrt() * z;
            }
            nu.max(0.0)
        })
        .collect()
}

#[test]
fn exact_cir_sampler_matches_euler_oracle() {
    let params = CirParams::new(1.5, 0.05, 0.25, 0.02, 0.0, 0.0).unwrap();
    let horizon = 0.5;
    let grid = SimGrid::new(delivery(0.5, 0.75), horizon, 4, 50_000, 3).unwrap();
    let exact: Vec<f64> = simulate_cir(&params, &grid)
        .into_iter()
        .map(|p| *p.last().unwrap())
        .collect();
    let euler = euler_cir(&params, horizon, 1000, 50_000, 4);
    assert!(exact.iter().all(|&v| v > 0.0));
    for k in [1, 2] {
        let pow = |v: &Vec<f64>| v.iter().map(|x| x.powi(k)).collect::<Vec<_>>();
        let (a, sa) = mean_and_se(&pow(&exact));
        let (b, sb) = mean_and_se(&pow(&euler));
        // the fine Euler grid keeps its bias well inside the band
        assert!(
            (a - b).abs() <= 3.0 * sa.hypot(sb),
            "moment {k}: exact {a} +- {sa}, Euler {b} +- {sb}"
        );
    }
    let (m, se) = mean_and_se(&exact);
    assert!(((m - params.mean(horizon)) / se).abs() <= 3.0);
}
