//! Impact functions that make a Lévy model and a Brownian model liquidate
//! along the same optimal trajectory.
//!
//! At a common position `y` and speed `z` both models satisfy
//! `z^2 F'(z) = kappa_A(y) / A`. Solving the Brownian relation for `y(z)`,
//! a quadratic, and substituting into the Lévy one gives the derivative of the
//! Lévy impact function:
//!
//! ```text
//! F_L'(z) = kappa_A^L(y(z)) / (A z^2),
//! y(z)    = (mu + sqrt(mu^2 + 2 A sigma^2 z^2 F_BM'(z))) / (A sigma^2).
//! ```
//!
//! Near `z = 0` this behaves like a constant times `F_BM'(z)`, so `F_L` has
//! the same small-speed exponent as `F_BM`; for concave power laws the
//! integrand is singular at zero and is integrated with a graded rule.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::impact::ImpactModel;
use crate::levy::{KappaFunction, LevyKind, LevyModel};
use crate::quad::{integrate_graded, QuadTolerance};
use crate::solver::{SolveConfig, Solver, Trajectory};

/// Links a Lévy model to a Brownian model with a given impact function.
#[derive(Clone, Debug)]
pub struct ImpactBridge {
    levy_kappa: KappaFunction,
    bm_impact: ImpactModel,
    /// Brownian drift and volatility in price units.
    mu: f64,
    sigma: f64,
    tol: QuadTolerance,
}

/// State shared by the closures of the derived impact model.
struct Derived {
    bridge: ImpactBridge,
    grading: f64,
    cache: Mutex<HashMap<u64, f64>>,
}

impl ImpactBridge {
    /// `bm` must be a Brownian model with non-positive drift.
    pub fn new(levy_kappa: KappaFunction, bm: &LevyModel, bm_impact: ImpactModel) -> Result<Self> {
        let LevyKind::BrownianLinear { mu, sigma } = *bm.kind() else {
            return Err(Error::InvalidModel("the reference model of a bridge must be Brownian".into()));
        };
        if mu > 0.0 {
            return Err(Error::PositiveDrift { drift: mu });
        }
        if levy_kappa.model().drift() > 0.0 {
            return Err(Error::PositiveDrift {
                drift: levy_kappa.model().drift(),
            });
        }
        Ok(ImpactBridge {
            levy_kappa,
            bm_impact,
            mu,
            sigma,
            tol: QuadTolerance {
                abs: 0.0,
                rel: 1e-11,
                max_evaluations: 1 << 16,
            },
        })
    }

    /// Bridge between a linearised variance-gamma model and its moment-matched
    /// Brownian model.
    pub fn vg_matched(levy: &LevyModel, bm_impact: ImpactModel, risk_aversion: f64) -> Result<Self> {
        let bm = levy.matched_brownian()?;
        Self::new(levy.kappa(risk_aversion)?, &bm, bm_impact)
    }

    pub fn with_tolerance(mut self, tol: QuadTolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn risk_aversion(&self) -> f64 {
        self.levy_kappa.risk_aversion()
    }

    pub fn bm_impact(&self) -> &ImpactModel {
        &self.bm_impact
    }

    pub fn levy_kappa(&self) -> &KappaFunction {
        &self.levy_kappa
    }

    /// The Brownian reference model.
    pub fn bm_model(&self) -> Result<LevyModel> {
        LevyModel::brownian(self.mu, self.sigma)
    }

    /// Position at which the Brownian model trades at speed `z`.
    pub fn bm_position(&self, z: f64) -> f64 {
        let a = self.risk_aversion();
        let s2 = self.sigma * self.sigma;
        let q = 2.0 * a * s2 * self.bm_impact.impact_rate(z);
        // Rationalised root, free of cancellation for mu <= 0.
        q / (a * s2 * ((self.mu * self.mu + q).sqrt() - self.mu))
    }

    /// `ln F_L'(z) = ln kappa_A^L(y(z)) - ln A - 2 ln z`.
    pub fn ln_levy_impact_derivative(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::domain("derived impact", format!("speed must be positive, got {z}")));
        }
        let y = self.bm_position(z);
        let ln_k = self.levy_kappa.ln_kappa(y)?;
        Ok(ln_k - self.risk_aversion().ln() - 2.0 * z.ln())
    }

    /// `F_L'(z) = kappa_A^L(y(z)) / (A z^2)`; `+inf` where it overflows.
    pub fn levy_impact_derivative(&self, z: f64) -> Result<f64> {
        Ok(self.ln_levy_impact_derivative(z)?.exp())
    }

    /// Grading exponent for the endpoint singularity `z^-p` at zero.
    fn grading(&self) -> f64 {
        match self.bm_impact.asymptotic_p() {
            Some(p) if p > 0.0 && p < 1.0 => 1.0 / (1.0 - p),
            _ => 1.0,
        }
    }

    /// `ln int_0^x F_L'(z) dz`, scaled by the integrand at `x` so that values
    /// beyond the double range stay finite.
    fn ln_integrate_derivative(&self, x: f64, grading: f64) -> Result<f64> {
        let shift = self.ln_levy_impact_derivative(x)?.max(0.0);
        let mut failure = None;
        let q = {
            let failure = std::cell::RefCell::new(&mut failure);
            integrate_graded(
                |z| match self.ln_levy_impact_derivative(z) {
                    Ok(v) => (v - shift).exp(),
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                },
                0.0,
                x,
                grading,
                self.tol,
            )
        };
        match failure {
            Some(e) => Err(e),
            None => Ok(shift + q?.value.ln()),
        }
    }

    /// `ln F_L(x)`; `-inf` at zero.
    pub fn ln_derive_levy_impact(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::domain("derived impact", format!("speed must be finite and >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        self.ln_integrate_derivative(x, self.grading())
    }

    /// `F_L(x) = int_0^x F_L'(z) dz`; `+inf` where it overflows.
    pub fn derive_levy_impact(&self, x: f64) -> Result<f64> {
        Ok(self.ln_derive_levy_impact(x)?.exp())
    }

    /// `F_L` as an impact model, with log forms so that the solver never needs
    /// `F_L` itself. Values of `ln F_L` are memoised by exact argument, so they
    /// are identical to uncached evaluation. Quadrature failures surface as NaN.
    pub fn levy_impact_model(&self) -> ImpactModel {
        let derived = Arc::new(Derived {
            bridge: self.clone(),
            grading: self.grading(),
            cache: Mutex::new(HashMap::new()),
        });
        let d1 = derived.clone();
        let ln_f = move |x: f64| {
            if x == 0.0 {
                return f64::NEG_INFINITY;
            }
            let key = x.to_bits();
            if let Some(v) = d1.cache.lock().expect("cache lock").get(&key) {
                return *v;
            }
            let v = d1.bridge.ln_integrate_derivative(x, d1.grading).unwrap_or(f64::NAN);
            d1.cache.lock().expect("cache lock").insert(key, v);
            v
        };
        let ln_f = Arc::new(ln_f);
        let ln_f2 = ln_f.clone();
        let d2 = derived.clone();
        ImpactModel::custom_with_logs(
            move |x| ln_f(x).exp(),
            move |z| derived.bridge.levy_impact_derivative(z).unwrap_or(f64::NAN),
            move |x| ln_f2(x),
            move |z| d2.bridge.ln_levy_impact_derivative(z).unwrap_or(f64::NAN),
            self.bm_impact.asymptotic_p(),
        )
    }

    /// `(x, ln F_L(x), ln F_BM(x))` at the given speeds.
    pub fn tabulate_ln(&self, speeds: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        speeds
            .iter()
            .map(|&x| {
                self.bm_impact.eval_f(x)?;
                Ok((x, self.ln_derive_levy_impact(x)?, self.bm_impact.ln_f(x)))
            })
            .collect()
    }

    /// `(x, F_L(x), F_BM(x))` at the given speeds.
    pub fn tabulate(&self, speeds: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        speeds
            .iter()
            .map(|&x| Ok((x, self.derive_levy_impact(x)?, self.bm_impact.eval_f(x)?)))
            .collect()
    }

    /// Solvers for the Lévy model with `F_L` and the Brownian model with `F_BM`.
    pub fn solvers(&self, cfg: SolveConfig) -> Result<(Solver, Solver)> {
        let levy = Solver::from_kappa(self.levy_kappa.clone(), self.levy_impact_model())?.with_config(cfg)?;
        let bm = Solver::new(self.bm_model()?, self.bm_impact.clone(), self.risk_aversion())?.with_config(cfg)?;
        Ok((levy, bm))
    }

    /// Solves both models from `y0` and returns the sup-norm gap between the
    /// two trajectories on the union of their sample times up to `horizon`
    /// (both full horizons when `None`).
    pub fn verify_trajectories_coincide(&self, y0: f64, horizon: Option<f64>) -> Result<TrajectoryGap> {
        self.verify_with(y0, horizon, SolveConfig::default())
    }

    pub fn verify_with(&self, y0: f64, horizon: Option<f64>, cfg: SolveConfig) -> Result<TrajectoryGap> {
        let (levy, bm) = self.solvers(cfg)?;
        let yl = levy.trajectory(y0)?;
        let yb = bm.trajectory(y0)?;
        Ok(TrajectoryGap::between(&yl, &yb, horizon))
    }
}

/// Largest distance between two trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGap {
    pub sup_gap: f64,
    /// Time at which the gap is attained.
    pub at_time: f64,
    pub levy: Trajectory,
    pub bm: Trajectory,
}

impl TrajectoryGap {
    pub fn between(levy: &Trajectory, bm: &Trajectory, horizon: Option<f64>) -> Self {
        let end = horizon.unwrap_or_else(|| levy.horizon().max(bm.horizon()));
        let mut times: Vec<f64> = levy
            .times
            .iter()
            .chain(&bm.times)
            .copied()
            .filter(|t| *t <= end)
            .collect();
        times.push(end);
        let (mut sup_gap, mut at_time) = (0.0, 0.0);
        for t in times {
            let g = (levy.position_at(t) - bm.position_at(t)).abs();
            if g > sup_gap {
                sup_gap = g;
                at_time = t;
            }
        }
        TrajectoryGap {
            sup_gap,
            at_time,
            levy: levy.clone(),
            bm: bm.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impact::log_grid;
    use crate::levy::VgParams;
    use approx::assert_relative_eq;

    fn bm() -> LevyModel {
        LevyModel::brownian(-0.18, 2.0).unwrap()
    }

    fn power() -> ImpactModel {
        ImpactModel::power_law(4.7e-5, 0.6).unwrap()
    }

    #[test]
    fn identity_bridge_reproduces_impact() {
        let bridge = ImpactBridge::new(bm().kappa(1e-5).unwrap(), &bm(), power()).unwrap();
        assert_eq!(bridge.derive_levy_impact(0.0).unwrap(), 0.0);
        for x in [1e-6, 1e-2, 1.0, 1e3, 1e6] {
            assert_relative_eq!(bridge.derive_levy_impact(x).unwrap(), power().eval_f(x).unwrap(), max_relative = 1e-8);
        }
    }

    #[test]
    fn bm_position_inverts_brownian_speed() {
        let bridge = ImpactBridge::new(bm().kappa(1e-5).unwrap(), &bm(), power()).unwrap();
        let solver = Solver::new(bm(), power(), 1e-5).unwrap();
        for y in [1e-3, 10.0, 2e5] {
            let z = solver.optimal_speed(y).unwrap();
            assert_relative_eq!(bridge.bm_position(z), y, max_relative = 1e-10);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let vg = VgParams::new(-0.002, 0.02, 0.6).unwrap();
        let levy = LevyModel::vg_linearised(vg, 100.0).unwrap();
        let bridge = ImpactBridge::vg_matched(&levy, power(), 1e-5).unwrap();
        for x in [1.0, 1e3, 1e5] {
            let h = x * 1e-4;
            let fd = (bridge.derive_levy_impact(x + h).unwrap() - bridge.derive_levy_impact(x - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(fd, bridge.levy_impact_derivative(x).unwrap(), max_relative = 1e-6);
        }
    }

    #[test]
    fn derived_impact_satisfies_assumptions() {
        let vg = VgParams::new(-0.002, 0.02, 0.6).unwrap();
        let levy = LevyModel::vg_linearised(vg, 100.0).unwrap();
        let bridge = ImpactBridge::vg_matched(&levy, power(), 1e-5).unwrap();
        let model = bridge.levy_impact_model();
        let report = model.validate_assumptions(&log_grid(1e-6, 1e6, 49));
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn derived_impact_grows_faster_than_powers() {
        let vg = VgParams::new(-0.002, 0.02, 0.6).unwrap();
        let levy = LevyModel::vg_linearised(vg, 100.0).unwrap();
        let bridge = ImpactBridge::vg_matched(&levy, power(), 1e-4).unwrap();
        let r4 = bridge.derive_levy_impact(1e4).unwrap() / 1e4f64.powi(10);
        let r6 = bridge.derive_levy_impact(1e6).unwrap() / 1e6f64.powi(10);
        assert!(r6 > r4, "{r6} <= {r4}");
    }

    #[test]
    fn memoised_model_matches_direct_evaluation() {
        let bridge = ImpactBridge::new(bm().kappa(1e-5).unwrap(), &bm(), power()).unwrap();
        let model = bridge.levy_impact_model();
        for x in [0.5, 2.0, 0.5] {
            assert_eq!(model.eval_f(x).unwrap(), bridge.derive_levy_impact(x).unwrap());
        }
    }
}
