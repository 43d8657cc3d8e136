use std::f64::consts::PI;

use elswap::delivery::{DeliveryGrid, DeliveryPeriod, QuadratureRule, WeightScheme};
use elswap::levy::{psi, JumpSizeDistribution, LevyMeasure, MeasureTag};
use elswap::model::{FuturesModel, InitialCurve};
use elswap::mpdp::{mpdp, mpdp_diffusion, mpr_classical, mpr_true, spread, validate_jump_mpr};
use elswap::stochvol::check_feller;
use elswap::termstructure::{
    samuelson_mpdp, seasonal_moments, DriftCurve, JumpCoefficientCurve, MeanReversion, VolatilityCurve,
};
use proptest::prelude::*;

fn period() -> impl Strategy<Value = DeliveryPeriod> {
    (0.0..3.0f64, 1.0 / 365.0..1.5f64).prop_map(|(a, len)| DeliveryPeriod::new(a, a + len).unwrap())
}

fn scheme() -> impl Strategy<Value = WeightScheme> {
    prop_oneof![
        Just(WeightScheme::Uniform),
        (0.0..0.2f64).prop_map(|r| WeightScheme::discounted(r).unwrap()),
    ]
}

fn jump_dist() -> impl Strategy<Value = JumpSizeDistribution> {
    prop_oneof![
        (-0.3..0.3f64, 0.01..0.5f64).prop_map(|(m, s)| JumpSizeDistribution::normal(m, s).unwrap()),
        (1.0..30.0f64).prop_map(|r| JumpSizeDistribution::exponential(r).unwrap()),
    ]
}

fn r_in_domain(dist: &JumpSizeDistribution, x: f64) -> f64 {
    match *dist {
        // positive arguments stay below the pole
        JumpSizeDistribution::Exponential { rate } if x > 0.0 => 0.9 * rate * x,
        _ => 3.0 * x,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn delivery_weights_form_a_probability(p in period(), s in scheme(), order in 2usize..80) {
        let grid = DeliveryGrid::new(p, s, &QuadratureRule::gauss_legendre(order).unwrap()).unwrap();
        let total: f64 = grid.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(grid.weights().iter().all(|&w| w > 0.0));
        prop_assert!(grid.nodes().iter().all(|&u| p.contains(u)));
        let var = grid.variance(|u| Ok((3.0 * u).sin())).unwrap();
        prop_assert!(var >= 0.0);
    }

    #[test]
    fn constant_integrands_have_zero_variance(p in period(), s in scheme(), c in -100.0..100.0f64) {
        let grid = DeliveryGrid::new(p, s, &QuadratureRule::gauss_legendre(32).unwrap()).unwrap();
        prop_assert_eq!(grid.variance(|_| Ok(c)).unwrap(), 0.0);
    }

    #[test]
    fn psi_is_nonnegative_and_convex(
        dist in jump_dist(),
        lambda in 0.01..20.0f64,
        x in -1.0..1.0f64,
        y in -1.0..1.0f64,
    ) {
        let levy = LevyMeasure::new(lambda, dist, MeasureTag::Q).unwrap();
        let (a, b) = (r_in_domain(&dist, x), r_in_domain(&dist, y));
        let (pa, pb, pm) = (psi(&levy, a).unwrap(), psi(&levy, b).unwrap(), psi(&levy, 0.5 * (a + b)).unwrap());
        prop_assert_eq!(psi(&levy, 0.0).unwrap(), 0.0);
        prop_assert!(pa >= 0.0 && pb >= 0.0 && pm >= 0.0);
        prop_assert!(pm <= 0.5 * (pa + pb) + 1e-12 * (1.0 + pa + pb));
    }

    #[test]
    fn mpdp_signs_and_decomposition(
        p in period(),
        s in scheme(),
        a in 0.1..1.5f64,
        b_frac in 0.01..0.99f64,
        c in 0.0..0.99f64,
        levels in proptest::collection::vec(0.05..1.0f64, 2),
        split in 0.05..0.95f64,
        lambda in 0.1..20.0f64,
        jump_mean in 0.0..0.3f64,
        jump_std in 0.01..0.4f64,
        ln_shift in -1.0..1.0f64,
        t_frac in 0.0..1.0f64,
    ) {
        let grid = DeliveryGrid::new(p, s, &QuadratureRule::gauss_legendre(32).unwrap()).unwrap();
        let t = t_frac * p.tau1();
        let vol = VolatilityCurve::seasonal(a, b_frac * a, c).unwrap();
        let eta = JumpCoefficientCurve::piecewise(vec![p.tau1() + split * p.length()], levels).unwrap();
        let dist = JumpSizeDistribution::normal(jump_mean, jump_std).unwrap();
        let q = FuturesModel::risk_neutral(InitialCurve::constant(40.0).unwrap())
            .with_diffusion(vol.clone())
            .with_jumps(eta.clone(), LevyMeasure::new(lambda, dist, MeasureTag::Q).unwrap())
            .unwrap();
        let m = mpdp(&q, &grid, t).unwrap();
        prop_assert!(m.pi1 <= 0.0 && m.pi2 <= 0.0);
        prop_assert!(1.0 - m.pi2 > 0.0);

        let p_model = FuturesModel::physical(
            InitialCurve::constant(40.0).unwrap(),
            DriftCurve::constant(2.0).unwrap(),
            MeanReversion::constant(0.7).unwrap(),
        )
        .with_diffusion(vol)
        .with_jumps(eta, LevyMeasure::new(lambda, dist, MeasureTag::P).unwrap())
        .unwrap();
        let ln_f = 40f64.ln() + ln_shift;
        let tr = mpr_true(&p_model, ln_f, t, &grid).unwrap();
        let cl = mpr_classical(&p_model, ln_f, t, &grid).unwrap();
        let bar = spread(&p_model, t, &grid).unwrap();
        let scale1 = tr.pi1.abs().max(cl.pi1.abs()).max(1e-300);
        let scale2 = tr.pi2.abs().max(cl.pi2.abs()).max(bar.pi2_bar.abs()).max(1e-300);
        prop_assert!((tr.pi1 - cl.pi1 - bar.pi1_bar).abs() <= 1e-12 * scale1);
        prop_assert!((tr.pi2 - cl.pi2 - bar.pi2_bar).abs() <= 1e-12 * scale2);
        prop_assert!(bar.pi1_bar <= 0.0 && bar.pi2_bar <= 0.0);
        // the diffusion spread coincides with the diffusion MPDP
        prop_assert!((bar.pi1_bar - m.pi1).abs() <= 1e-15 * m.pi1.abs().max(1e-300));
    }

    #[test]
    fn seasonal_closed_form_matches_quadrature(
        p in period(),
        a in 0.05..2.0f64,
        b_frac in 0.001..0.999f64,
        c in 0.0..0.999f64,
    ) {
        let quad = QuadratureRule::gauss_legendre(64).unwrap();
        let b = b_frac * a;
        let (mean, second) = seasonal_moments(a, b, c, &p, &WeightScheme::Uniform, &quad).unwrap();
        let grid = DeliveryGrid::new(p, WeightScheme::Uniform, &quad).unwrap();
        let s = |u: f64| a + b * (2.0 * PI * (u + c)).cos();
        prop_assert!((mean - grid.expect(|u| Ok(s(u))).unwrap()).abs() <= 1e-10 * mean.abs().max(1.0));
        prop_assert!((second - grid.expect(|u| Ok(s(u) * s(u))).unwrap()).abs() <= 1e-10 * second.max(1.0));
        prop_assert!(second >= mean * mean - 1e-14);
    }

    #[test]
    fn samuelson_closed_form_matches_quadrature(
        p in period(),
        lambda_bar in 0.05..2.0f64,
        log_damping in -12.0..1.5f64,
        t_frac in 0.0..1.0f64,
    ) {
        let damping = 10f64.powf(log_damping);
        let t = t_frac * p.tau1();
        let closed = samuelson_mpdp(lambda_bar, damping, t, &p).unwrap();
        let grid = DeliveryGrid::new(p, WeightScheme::Uniform, &QuadratureRule::gauss_legendre(64).unwrap()).unwrap();
        let vol = VolatilityCurve::samuelson(lambda_bar, damping).unwrap();
        let generic = mpdp_diffusion(&vol, &grid, t).unwrap();
        prop_assert!(closed <= 0.0);
        prop_assert!((closed - generic).abs() <= 1e-10 * generic.abs().max(1.0));
    }

    #[test]
    fn extended_feller_implies_classical(
        kappa in 1e-3..50.0f64,
        theta in 1e-4..2.0f64,
        sigma in 1e-3..5.0f64,
    ) {
        let flags = check_feller(kappa, theta, sigma).unwrap();
        prop_assert!(!flags.extended || flags.classical);
    }

    #[test]
    fn jump_price_violation_mass_is_a_probability(pi2 in -5.0..5.0f64, dist in jump_dist()) {
        let v = validate_jump_mpr(pi2, &dist);
        prop_assert!((0.0..=1.0).contains(&v.violation_mass));
        prop_assert_eq!(v.holds, v.violation_mass == 0.0);
        if pi2 <= 0.0 {
            if let JumpSizeDistribution::Exponential { .. } = dist {
                prop_assert!(v.holds);
            }
        }
    }
}
