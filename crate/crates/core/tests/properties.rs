use levy_liquidation::levy::{vg_kappa_hat, vg_kappa_hat_lower_bound_ln};
use levy_liquidation::{ImpactModel, KappaFunction, LevyModel, Solver, VgParams};
use proptest::prelude::*;

const S_TILDE: f64 = 100.0;

fn desk_vg() -> VgParams {
    VgParams::new(-0.002, 0.02, 0.6).unwrap()
}

fn desk_levy() -> LevyModel {
    LevyModel::vg_linearised(desk_vg(), S_TILDE).unwrap()
}

/// Step for central differences at `y`: small enough that neither `ln xi*`
/// nor `ln v'` changes by more than 1e-3 across it.
fn fd_step(s: &Solver, y: f64) -> f64 {
    let change = |f: &dyn Fn(f64) -> f64, h: f64| (f(y + h) - f(y - h)).abs();
    let speed = |u: f64| s.ln_optimal_speed(u).unwrap();
    let marginal = |u: f64| s.ln_marginal_value(u).unwrap();
    let mut h = 1e-4 * y;
    while change(&speed, h) > 1e-3 || change(&marginal, h) > 1e-3 {
        h *= 0.5;
    }
    h
}

fn risk_aversion() -> impl Strategy<Value = f64> {
    (-6.0f64..-4.0).prop_map(|e| 10f64.powf(e))
}

fn model() -> impl Strategy<Value = LevyModel> {
    prop_oneof![
        Just(desk_levy()),
        (-0.3f64..=0.0, 0.5f64..3.0).prop_map(|(mu, sigma)| LevyModel::brownian(mu, sigma).unwrap()),
    ]
}

fn impact() -> impl Strategy<Value = ImpactModel> {
    prop_oneof![
        (0.2f64..=1.0).prop_map(|g| ImpactModel::power_law(4.7e-5, g).unwrap()),
        Just(ImpactModel::piecewise_power_exp(4.7e-5, 1e-7, 1e-5, 1e5).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn kappa_is_convex(m in model(), a in risk_aversion(), y1 in 0.0f64..2e5, y2 in 0.0f64..2e5) {
        let kf = KappaFunction::new(m, a).unwrap();
        let (k1, k2) = (kf.kappa(y1).unwrap(), kf.kappa(y2).unwrap());
        let mid = kf.kappa(0.5 * (y1 + y2)).unwrap();
        if k1.is_finite() && k2.is_finite() {
            prop_assert!(mid <= 0.5 * (k1 + k2) * (1.0 + 1e-10) + 1e-300);
        }
    }

    #[test]
    fn kappa_nonnegative_without_positive_drift(m in model(), a in risk_aversion(), y in 0.0f64..2e5) {
        let kf = KappaFunction::new(m, a).unwrap();
        prop_assert!(kf.kappa(y).unwrap() >= 0.0);
    }

    #[test]
    fn linearised_density_is_pushforward(x in -0.999f64..5.0) {
        prop_assume!(x.abs() > 1e-9);
        let vg = desk_vg();
        let z = x.ln_1p();
        let expected = (vg.c() * z - vg.d() * z.abs()).exp() / (vg.eta * z.abs()) / (1.0 + x);
        let got = vg.linearised_density(x);
        prop_assert!(((got - expected) / expected).abs() <= 1e-8, "{got} vs {expected}");
    }

    #[test]
    fn cumulant_dominates_lower_bound(le in -2.0f64..6.0, a in risk_aversion()) {
        let u = 10f64.powf(le);
        let kf = KappaFunction::new(desk_levy(), a).unwrap();
        if let Some(lb) = vg_kappa_hat_lower_bound_ln(&kf, u).unwrap() {
            prop_assert!(kf.ln_kappa(u).unwrap() >= lb + (1.0 - 1e-10f64).ln());
        }
    }

    #[test]
    fn speed_increases_with_position_and_risk_aversion(
        m in model(), f in impact(), a in risk_aversion(), y in 1.0f64..1e5, dy in 1.0f64..1e5, da in 1.05f64..3.0,
    ) {
        let s = Solver::new(m.clone(), f.clone(), a).unwrap();
        let lo = s.ln_optimal_speed(y).unwrap();
        prop_assert!(s.ln_optimal_speed(y + dy).unwrap() > lo);
        let s2 = Solver::new(m, f, a * da).unwrap();
        prop_assert!(s2.ln_optimal_speed(y).unwrap() > lo);
    }

    #[test]
    fn time_map_satisfies_the_ode(m in model(), f in impact(), a in risk_aversion(), y in 10.0f64..1e5) {
        let s = Solver::new(m, f, a).unwrap();
        let h = fd_step(&s, y);
        let dt_dy = s.time_between(y - h, y + h).unwrap() / (2.0 * h);
        let expected = 1.0 / s.optimal_speed(y).unwrap();
        prop_assert!(((dt_dy - expected) / expected).abs() < 1e-6, "{dt_dy} vs {expected}");
    }

    #[test]
    fn liquidation_time_is_additive(m in model(), f in impact(), a in risk_aversion(), y in 10.0f64..1e5, r1 in 0.01f64..0.99, r2 in 0.01f64..0.99) {
        let s = Solver::new(m, f, a).unwrap();
        let (lo, mid) = (y * r1.min(r2), y * r1.max(r2));
        prop_assume!(mid > lo);
        let whole = s.time_between(lo, y).unwrap();
        let parts = s.time_between(lo, mid).unwrap() + s.time_between(mid, y).unwrap();
        prop_assert!(((whole - parts) / whole).abs() < 1e-9);
    }

    #[test]
    fn value_derivative_is_marginal_value(m in model(), f in impact(), a in risk_aversion(), y in 10.0f64..1e5) {
        let s = Solver::new(m, f, a).unwrap();
        let h = fd_step(&s, y);
        let (lv_hi, lv_lo) = (s.ln_value_function(y + h).unwrap(), s.ln_value_function(y - h).unwrap());
        // Central difference of v in log form, stable when v overflows.
        let ln_diff = lv_hi + (-(lv_lo - lv_hi).exp()).ln_1p() - (2.0 * h).ln();
        let ln_marginal = s.ln_marginal_value(y).unwrap();
        prop_assert!((ln_diff - ln_marginal).abs() < 1e-6, "{ln_diff} vs {ln_marginal}");
    }

    #[test]
    fn value_and_time_increase_with_position(m in model(), f in impact(), a in risk_aversion(), y in 10.0f64..1e5, r in 0.05f64..0.95) {
        let s = Solver::new(m, f, a).unwrap();
        prop_assert!(s.ln_value_function(y * r).unwrap() < s.ln_value_function(y).unwrap());
        prop_assert!(s.time_between(y * r * 0.5, y * r).unwrap() > 0.0);
    }
}

/// Independent trapezoid evaluation of the linearised cumulant in log-return
/// coordinates, against the library's adaptive evaluation.
#[test]
fn cumulant_matches_fine_trapezoid() {
    let (theta, rho, eta) = (-0.002f64, 0.02f64, 0.6f64);
    let (a_risk, u) = (1e-5, 100.0);
    let a = a_risk * S_TILDE * u;
    let kappa_tilde_1 = -(1.0 - theta * eta - 0.5 * rho * rho * eta).ln() / eta;
    let c = theta / (rho * rho);
    let d = (theta * theta / rho.powi(4) + 2.0 / (eta * rho * rho)).sqrt();
    let integrand = |z: f64| {
        if z == 0.0 {
            return 0.0;
        }
        let x = z.exp_m1();
        ((-a * x).exp_m1() + a * x) * (c * z - d * z.abs()).exp() / (eta * z.abs())
    };
    let n = 1_000_000usize;
    let (lo, hi) = (-1.0f64, 1.0f64);
    let h = (hi - lo) / n as f64;
    let mut sum = 0.5 * (integrand(lo) + integrand(hi));
    for i in 1..n {
        sum += integrand(lo + i as f64 * h);
    }
    let oracle = -a * kappa_tilde_1 + h * sum;

    let kf = KappaFunction::new(desk_levy(), a_risk).unwrap();
    let got = vg_kappa_hat(&kf, u).unwrap();
    assert!(((got - oracle) / oracle).abs() < 1e-6, "{got} vs {oracle}");
}

/// Value of a Brownian model with linear impact against a fine trapezoid of
/// `kappa_A / G + A F(G)`, with `G = sqrt(kappa_A / (A beta))`.
#[test]
fn brownian_linear_value_matches_trapezoid() {
    let (mu, sigma, beta, a) = (-0.1f64, 2.0f64, 4.7e-5f64, 1e-5f64);
    let y = 5e4;
    let s = Solver::new(LevyModel::brownian(mu, sigma).unwrap(), ImpactModel::power_law(beta, 1.0).unwrap(), a).unwrap();
    let integrand = |u: f64| {
        let k = 0.5 * a * a * sigma * sigma * u * u - a * mu * u;
        let g = (k / (a * beta)).sqrt();
        if g == 0.0 {
            0.0
        } else {
            k / g + a * beta * g
        }
    };
    // Substituting u = y s^2 removes the square-root behaviour at zero.
    let n = 200_000usize;
    let h = 1.0 / n as f64;
    let f = |s: f64| integrand(y * s * s) * 2.0 * y * s;
    let mut sum = 0.5 * (f(0.0) + f(1.0));
    for i in 1..n {
        sum += f(i as f64 * h);
    }
    let oracle = h * sum;
    let got = s.value_function(y).unwrap();
    assert!(((got - oracle) / oracle).abs() < 1e-8, "{got} vs {oracle}");
}
