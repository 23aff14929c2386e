//! Closed-form optimal liquidation: speed feedback, liquidation time,
//! trajectory, value function and HJB residual checks.
//!
//! Everything is computed from two scalar functions of the position `u`:
//! the speed `xi*(u) = G(kappa_A(u) / A)` and the marginal value
//! `v'(u) = kappa_A(u) / xi*(u) + A F(xi*(u))`. Both are evaluated in log
//! space because `kappa_A` of a jump model can exceed the range of `f64`
//! long before the position bound is reached.
//!
//! The trajectory is obtained by integrating `t(Y) = int_Y^{y0} du / xi*(u)`
//! on a geometric grid of positions and inverting, rather than by stepping
//! the ODE `dY/dt = -xi*(Y)` forward in time, which is stiff near `Y = 0`.

use std::cell::RefCell;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::impact::ImpactModel;
use crate::levy::{log_sum_exp, DriftSign, KappaFunction, LevyModel};
use crate::quad::{integrate_graded, integrate_with_breaks, QuadTolerance, Quadrature};
use crate::roots::{brent_minimize, brent_root};

/// Numerical settings of the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Number of positions on the geometric grid from `y0` to the floor.
    pub y_grid_points: usize,
    /// Smallest resolved position as a fraction of `y0`.
    pub y_floor_fraction: f64,
    /// Tolerance of every time and value integral.
    pub tol: QuadTolerance,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            y_grid_points: 400,
            y_floor_fraction: 1e-12,
            tol: QuadTolerance {
                abs: 0.0,
                rel: 1e-10,
                max_evaluations: 1 << 18,
            },
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.y_grid_points < 2 {
            return Err(Error::InvalidModel(format!(
                "y_grid_points must be at least 2, got {}",
                self.y_grid_points
            )));
        }
        if !(self.y_floor_fraction > 0.0 && self.y_floor_fraction < 1.0) {
            return Err(Error::InvalidModel(format!(
                "y_floor_fraction must lie in (0, 1), got {}",
                self.y_floor_fraction
            )));
        }
        Ok(())
    }
}

/// Whether the liquidation time is finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauClass {
    Finite,
    Infinite,
    Unclassified,
}

/// Liquidation time with its classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    FiniteTau(f64),
    InfiniteTau,
    Unclassified,
}

impl Termination {
    pub fn tau(&self) -> Option<f64> {
        match self {
            Termination::FiniteTau(t) => Some(*t),
            _ => None,
        }
    }

    pub fn class(&self) -> TauClass {
        match self {
            Termination::FiniteTau(_) => TauClass::Finite,
            Termination::InfiniteTau => TauClass::Infinite,
            Termination::Unclassified => TauClass::Unclassified,
        }
    }
}

/// Analytic classification from the impact exponent `p` (with
/// `x^p F'(x) -> K > 0` as `x -> 0`) and the drift sign.
pub fn classify_termination(p: f64, drift: DriftSign) -> TauClass {
    if !(p < 1.0) {
        return TauClass::Unclassified;
    }
    match drift {
        DriftSign::Negative => TauClass::Finite,
        DriftSign::Zero if p >= 0.0 => TauClass::Infinite,
        DriftSign::Zero => TauClass::Finite,
        DriftSign::Positive => TauClass::Unclassified,
    }
}

/// Local exponent `alpha` of `1/xi*(u) ~ K u^-alpha` near `u = 0`, and the
/// classification it implies (`alpha < 1` integrable).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceEstimate {
    pub exponent: f64,
    pub class: TauClass,
}

/// Band around `alpha = 1` where the numerical test abstains.
const DIVERGENCE_BAND: f64 = 0.02;

/// A sampled optimal trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Non-decreasing sample times in days.
    pub times: Vec<f64>,
    /// Non-increasing positions, starting at `y0`.
    pub positions: Vec<f64>,
    /// Optimal speed at each position (may be `+inf` where it overflows).
    pub speeds: Vec<f64>,
    /// Liquidation time when finite.
    pub tau: Option<f64>,
    /// True when the last sample is the floor rather than zero.
    pub truncated: bool,
}

impl Trajectory {
    /// The trivial trajectory of an empty position.
    pub fn zero() -> Self {
        Trajectory {
            times: vec![0.0],
            positions: vec![0.0],
            speeds: vec![0.0],
            tau: Some(0.0),
            truncated: false,
        }
    }

    pub fn y0(&self) -> f64 {
        self.positions[0]
    }

    /// Last sampled time.
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// `Y(t)` by monotone cubic Hermite interpolation using the exact slopes
    /// `-xi*`. Beyond the last sample the position stays at the last value.
    pub fn position_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.positions[0];
        }
        if t >= self.times[n - 1] {
            return self.positions[n - 1];
        }
        let k = self.times.partition_point(|s| *s <= t) - 1;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let (y0, y1) = (self.positions[k], self.positions[k + 1]);
        let h = t1 - t0;
        if h <= 0.0 {
            return y1;
        }
        let delta = (y1 - y0) / h;
        if delta == 0.0 {
            return y0;
        }
        let limit = |m: f64| {
            let r = m / delta;
            if !r.is_finite() || r > 3.0 {
                3.0 * delta
            } else if r < 0.0 {
                0.0
            } else {
                m
            }
        };
        let m0 = limit(-self.speeds[k]);
        let m1 = limit(-self.speeds[k + 1]);
        let s = (t - t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        (h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1).clamp(y1, y0)
    }

    /// Positions at the given times.
    pub fn resample(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|t| self.position_at(*t)).collect()
    }

    /// The same path run `factor` times slower: `Y_c(t) = Y(t / factor)`.
    pub fn dilate(&self, factor: f64) -> Trajectory {
        Trajectory {
            times: self.times.iter().map(|t| t * factor).collect(),
            positions: self.positions.clone(),
            speeds: self.speeds.iter().map(|x| x / factor).collect(),
            tau: self.tau.map(|t| t * factor),
            truncated: self.truncated,
        }
    }

    /// Checks ordering of times and positions.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.times.len();
        if n == 0 || self.positions.len() != n || self.speeds.len() != n {
            return Err(Error::Invariant("trajectory arrays have inconsistent lengths".into()));
        }
        for k in 1..n {
            if !(self.times[k] >= self.times[k - 1]) {
                return Err(Error::Invariant(format!("times decrease at sample {k}")));
            }
            if !(self.positions[k] <= self.positions[k - 1]) {
                return Err(Error::Invariant(format!("positions increase at sample {k}")));
            }
        }
        if self.positions[n - 1] < 0.0 {
            return Err(Error::Invariant("negative position".into()));
        }
        Ok(())
    }
}

/// Outcome of [`Solver::hjb_residual`]. Speeds are also given relative to
/// `xi*` because `xi*` itself may overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjbCheck {
    pub kappa: f64,
    pub ln_kappa: f64,
    pub xi_star: f64,
    /// Grid-plus-refinement minimiser divided by `xi*`.
    pub minimiser_ratio: f64,
    /// Grid spacing divided by `xi*`.
    pub cell_ratio: f64,
    /// `kappa_A(y) + min_x {A x F(x) - x v'(y)}` divided by `kappa_A(y)`.
    pub relative_residual: f64,
}

impl HjbCheck {
    /// Absolute residual (may overflow together with `kappa`).
    pub fn residual(&self) -> f64 {
        if self.kappa == 0.0 {
            0.0
        } else {
            self.relative_residual * self.kappa
        }
    }

    /// `|residual| <= tol (1 + kappa)` and the minimiser within one cell of `xi*`.
    pub fn passes(&self, tol: f64) -> bool {
        if self.kappa == 0.0 {
            return self.relative_residual.abs() <= tol;
        }
        let scale = (-self.ln_kappa).exp() + 1.0;
        self.relative_residual.abs() <= tol * scale && (self.minimiser_ratio - 1.0).abs() <= self.cell_ratio
    }
}

/// Complete solution for one initial position.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub y0: f64,
    pub risk_aversion: f64,
    pub trajectory: Trajectory,
    /// `v(y0)`; `+inf` when only `ln_value` is representable.
    pub value: f64,
    pub ln_value: f64,
    pub termination: Termination,
    pub divergence: Option<DivergenceEstimate>,
    /// `(Y, xi*(Y))` on the position grid.
    pub speed_samples: Vec<(f64, f64)>,
}

/// Collects the first error raised inside a quadrature closure.
struct Captured(RefCell<Option<Error>>);

impl Captured {
    fn new() -> Self {
        Captured(RefCell::new(None))
    }

    fn value(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn finish(self, q: Result<Quadrature>) -> Result<Quadrature> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => q,
        }
    }
}

/// Optimal liquidation solver for one model, impact function and risk aversion.
#[derive(Clone, Debug)]
pub struct Solver {
    kf: KappaFunction,
    impact: ImpactModel,
    cfg: SolveConfig,
    kink_positions: OnceLock<Vec<f64>>,
}

impl Solver {
    pub fn new(levy: LevyModel, impact: ImpactModel, risk_aversion: f64) -> Result<Self> {
        Self::from_kappa(levy.kappa(risk_aversion)?, impact)
    }

    /// Fails for a positive drift, where no optimal strategy exists.
    pub fn from_kappa(kf: KappaFunction, impact: ImpactModel) -> Result<Self> {
        if kf.drift_sign() == DriftSign::Positive {
            return Err(Error::PositiveDrift {
                drift: kf.model().drift(),
            });
        }
        Ok(Solver {
            kf,
            impact,
            cfg: SolveConfig::default(),
            kink_positions: OnceLock::new(),
        })
    }

    pub fn with_config(mut self, cfg: SolveConfig) -> Result<Self> {
        cfg.validate()?;
        self.cfg = cfg;
        Ok(self)
    }

    pub fn kappa(&self) -> &KappaFunction {
        &self.kf
    }

    pub fn impact(&self) -> &ImpactModel {
        &self.impact
    }

    pub fn config(&self) -> &SolveConfig {
        &self.cfg
    }

    pub fn risk_aversion(&self) -> f64 {
        self.kf.risk_aversion()
    }

    fn check_y0(&self, y0: f64) -> Result<()> {
        if !(y0 >= 0.0 && y0.is_finite()) {
            return Err(Error::domain("solver", format!("initial position must be finite and >= 0, got {y0}")));
        }
        let bound = self.kf.domain_upper();
        if y0 >= bound {
            return Err(Error::PositionBound { y0, bound });
        }
        Ok(())
    }

    /// `ln xi*(y)`; `-inf` at `y = 0`.
    pub fn ln_optimal_speed(&self, y: f64) -> Result<f64> {
        let ln_k = self.kf.ln_kappa(y)?;
        self.impact.eval_ln_g(ln_k - self.risk_aversion().ln())
    }

    /// `xi*(y) = G(kappa_A(y) / A)`; `+inf` where it overflows.
    pub fn optimal_speed(&self, y: f64) -> Result<f64> {
        Ok(self.ln_optimal_speed(y)?.exp())
    }

    /// `ln v'(u) = ln(kappa_A(u) / xi* + A F(xi*))`.
    pub fn ln_marginal_value(&self, u: f64) -> Result<f64> {
        let ln_k = self.kf.ln_kappa(u)?;
        if ln_k == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let ln_a = self.risk_aversion().ln();
        let ln_g = self.impact.eval_ln_g(ln_k - ln_a)?;
        Ok(log_sum_exp(&[ln_k - ln_g, ln_a + self.impact.ln_f_at_ln(ln_g)]))
    }

    /// `v'(u)`, the integrand of the value function.
    pub fn marginal_value(&self, u: f64) -> Result<f64> {
        Ok(self.ln_marginal_value(u)?.exp())
    }

    /// Positions where `xi*` crosses a kink of `G`, ascending.
    fn kink_positions(&self) -> &[f64] {
        self.kink_positions.get_or_init(|| {
            let upper = self.kf.domain_upper().min(f64::MAX);
            let mut out: Vec<f64> = self
                .impact
                .kinks()
                .into_iter()
                .filter_map(|x| self.position_at_speed(x.ln(), upper))
                .collect();
            out.sort_by(f64::total_cmp);
            out
        })
    }

    /// Position where `ln xi* = ln_x`, if it lies below `upper`.
    fn position_at_speed(&self, ln_x: f64, upper: f64) -> Option<f64> {
        let g = |u: f64| self.ln_optimal_speed(u).map(|v| v - ln_x).ok();
        let (mut lo, mut hi) = (1.0, 1.0);
        let mut g_hi = g(hi)?;
        while g_hi < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi >= upper {
                return None;
            }
            g_hi = g(hi)?;
        }
        let mut g_lo = g(lo)?;
        while g_lo >= 0.0 {
            hi = lo;
            g_hi = g_lo;
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return None;
            }
            g_lo = g(lo)?;
        }
        brent_root(|u| g(u).unwrap_or(f64::NAN), lo, hi, g_lo, g_hi, 1e-14, 0.0).ok()
    }

    /// Adds the kink positions inside `(lo, hi)` to `breaks` and sorts them.
    fn add_kinks(&self, breaks: &mut Vec<f64>, lo: f64, hi: f64) {
        breaks.extend(self.kink_positions().iter().filter(|k| **k > lo && **k < hi));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }

    /// `int_lo^hi du / xi*(u)` for `0 < lo <= hi`.
    pub fn time_between(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::domain("time integral", format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
        }
        if lo == hi {
            return Ok(0.0);
        }
        let decades = (hi / lo).log10();
        let pieces = ((4.0 * decades).ceil() as usize).clamp(1, 64);
        let mut breaks: Vec<f64> = (0..=pieces)
            .map(|i| match i {
                0 => lo,
                i if i == pieces => hi,
                i => lo * (hi / lo).powf(i as f64 / pieces as f64),
            })
            .collect();
        self.add_kinks(&mut breaks, lo, hi);
        let cap = Captured::new();
        let q = integrate_with_breaks(
            |u| (-cap.value(self.ln_optimal_speed(u))).exp(),
            &breaks,
            self.cfg.tol,
        );
        Ok(cap.finish(q)?.value)
    }

    /// `int_0^b du / xi*(u)` by graded quadrature; only meaningful when finite.
    fn time_from_zero(&self, b: f64, exponent: f64) -> Result<f64> {
        let alpha = exponent.clamp(0.0, 0.95);
        let q = 1.0 / (1.0 - alpha);
        let cap = Captured::new();
        let r = integrate_graded(
            |u| (-cap.value(self.ln_optimal_speed(u))).exp(),
            0.0,
            b,
            q,
            self.cfg.tol,
        );
        Ok(cap.finish(r)?.value)
    }

    /// Numerical estimate of the endpoint exponent of `1/xi*` near zero.
    pub fn divergence_estimate(&self, y0: f64) -> Result<DivergenceEstimate> {
        self.check_y0(y0)?;
        if y0 == 0.0 {
            return Err(Error::domain("divergence estimate", "needs y0 > 0"));
        }
        let (u1, u2) = (y0 * 1e-14, y0 * 1e-12);
        let l1 = self.ln_optimal_speed(u1)?;
        let l2 = self.ln_optimal_speed(u2)?;
        let exponent = (l2 - l1) / (u2.ln() - u1.ln());
        let class = if exponent < 1.0 - DIVERGENCE_BAND {
            TauClass::Finite
        } else if exponent > 1.0 + DIVERGENCE_BAND {
            TauClass::Infinite
        } else {
            TauClass::Unclassified
        };
        Ok(DivergenceEstimate { exponent, class })
    }

    /// Classification of the liquidation time: analytic when the impact
    /// exponent is known, numerical otherwise. Also returns the endpoint
    /// exponent used for grading.
    fn classify(&self, y0: f64) -> Result<(TauClass, f64, DivergenceEstimate)> {
        let numeric = self.divergence_estimate(y0)?;
        let drift = self.kf.drift_sign();
        match self.impact.asymptotic_p() {
            Some(p) => {
                let class = classify_termination(p, drift);
                let alpha = match (class, drift) {
                    (TauClass::Finite, DriftSign::Negative) => 1.0 / (2.0 - p),
                    (TauClass::Finite, _) => 2.0 / (2.0 - p),
                    _ => numeric.exponent,
                };
                Ok((class, alpha, numeric))
            }
            None => Ok((numeric.class, numeric.exponent, numeric)),
        }
    }

    /// Liquidation time `tau = int_0^{y0} du / xi*(u)`.
    pub fn liquidation_time(&self, y0: f64) -> Result<Termination> {
        self.check_y0(y0)?;
        if y0 == 0.0 {
            return Ok(Termination::FiniteTau(0.0));
        }
        let (class, alpha, _) = self.classify(y0)?;
        Ok(match class {
            TauClass::Finite => {
                let split = y0 * 1e-6;
                Termination::FiniteTau(self.time_from_zero(split, alpha)? + self.time_between(split, y0)?)
            }
            TauClass::Infinite => Termination::InfiniteTau,
            TauClass::Unclassified => Termination::Unclassified,
        })
    }

    /// Time needed to sell the fraction `q` of `y0`, i.e. `t(Y = (1 - q) y0)`.
    /// `None` when `q = 1` and the liquidation time is not finite.
    pub fn time_to_fraction(&self, y0: f64, q: f64) -> Result<Option<f64>> {
        self.check_y0(y0)?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::domain("time to fraction", format!("fraction must lie in [0, 1], got {q}")));
        }
        if y0 == 0.0 || q == 0.0 {
            return Ok(Some(0.0));
        }
        if q == 1.0 {
            return Ok(self.liquidation_time(y0)?.tau());
        }
        Ok(Some(self.time_between((1.0 - q) * y0, y0)?))
    }

    /// Geometric position grid from `y0` down to the floor.
    pub fn position_grid(&self, y0: f64) -> Vec<f64> {
        let n = self.cfg.y_grid_points;
        (0..n)
            .map(|k| match k {
                0 => y0,
                k => y0 * self.cfg.y_floor_fraction.powf(k as f64 / (n - 1) as f64),
            })
            .collect()
    }

    /// Optimal trajectory from `y0`.
    pub fn trajectory(&self, y0: f64) -> Result<Trajectory> {
        self.check_y0(y0)?;
        if y0 == 0.0 {
            return Ok(Trajectory::zero());
        }
        let (class, alpha, _) = self.classify(y0)?;
        self.trajectory_with(y0, class, alpha)
    }

    fn trajectory_with(&self, y0: f64, class: TauClass, alpha: f64) -> Result<Trajectory> {
        let mut positions = self.position_grid(y0);
        let segments: Vec<f64> = positions
            .par_windows(2)
            .map(|w| self.time_between(w[1], w[0]))
            .collect::<Result<_>>()?;
        let mut times = Vec::with_capacity(positions.len() + 1);
        times.push(0.0);
        let mut t = 0.0;
        for dt in segments {
            t += dt;
            times.push(t);
        }
        let mut speeds = positions
            .iter()
            .map(|y| self.optimal_speed(*y))
            .collect::<Result<Vec<_>>>()?;
        let floor = *positions.last().expect("grid has at least two points");
        let (tau, truncated) = if class == TauClass::Finite {
            let tau = t + self.time_from_zero(floor, alpha)?;
            times.push(tau);
            positions.push(0.0);
            speeds.push(0.0);
            (Some(tau), false)
        } else {
            (None, true)
        };
        let traj = Trajectory {
            times,
            positions,
            speeds,
            tau,
            truncated,
        };
        traj.check_invariants()?;
        Ok(traj)
    }

    /// `ln v(y)`, finite where `v` overflows; `-inf` at `y = 0`.
    pub fn ln_value_function(&self, y: f64) -> Result<f64> {
        self.check_y0(y)?;
        if y == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        // The integrand is increasing in u, so its value at y is the peak.
        let top = self.ln_marginal_value(y)?;
        if !top.is_finite() {
            return Err(Error::numerical("value function", format!("marginal value at y = {y} is {top}")));
        }
        let mut breaks = vec![0.0];
        breaks.extend((0..=12).rev().map(|k| y * 10f64.powi(-k)));
        self.add_kinks(&mut breaks, 0.0, y);
        let cap = Captured::new();
        let q = integrate_with_breaks(
            |u| (cap.value(self.ln_marginal_value(u)) - top).exp(),
            &breaks,
            self.cfg.tol,
        );
        Ok(top + cap.finish(q)?.value.ln())
    }

    /// `v(y) = int_0^y v'(u) du`.
    pub fn value_function(&self, y: f64) -> Result<f64> {
        Ok(self.ln_value_function(y)?.exp())
    }

    /// Evaluates `kappa_A(y) + min_x {A x F(x) - x v'(y)}` on a uniform grid
    /// of `grid_points` speeds spanning `[0, 10 xi*(y)]`, refined by a line
    /// search around the best grid point. Computed relative to `kappa_A(y)`
    /// with speeds relative to `xi*`, so overflowing cases remain checkable.
    pub fn hjb_residual(&self, y: f64, grid_points: usize) -> Result<HjbCheck> {
        self.check_y0(y)?;
        if grid_points < 3 {
            return Err(Error::domain("HJB residual", "need at least 3 grid points"));
        }
        let ln_k = self.kf.ln_kappa(y)?;
        let cell_ratio = 10.0 / (grid_points - 1) as f64;
        if ln_k == f64::NEG_INFINITY {
            return Ok(HjbCheck {
                kappa: 0.0,
                ln_kappa: ln_k,
                xi_star: 0.0,
                minimiser_ratio: 0.0,
                cell_ratio,
                relative_residual: 0.0,
            });
        }
        let ln_a = self.risk_aversion().ln();
        let ln_xi = self.impact.eval_ln_g(ln_k - ln_a)?;
        let ln_vp = self.ln_marginal_value(y)?;
        let linear = (ln_xi + ln_vp - ln_k).exp();
        // (A x F(x) - x v') / kappa with x = s xi*.
        let phi = |s: f64| {
            if s == 0.0 {
                return 0.0;
            }
            let ln_x = ln_xi + s.ln();
            (ln_a + ln_x + self.impact.ln_f_at_ln(ln_x) - ln_k).exp() - s * linear
        };
        let (mut best_j, mut best) = (0, f64::INFINITY);
        for j in 0..grid_points {
            let v = phi(j as f64 * cell_ratio);
            if v < best {
                best = v;
                best_j = j;
            }
        }
        let lo = best_j.saturating_sub(1) as f64 * cell_ratio;
        let hi = (best_j + 1).min(grid_points - 1) as f64 * cell_ratio;
        let (s_min, phi_min) = brent_minimize(phi, lo, hi, 1e-12);
        let (s_min, phi_min) = if phi_min <= best { (s_min, phi_min) } else { (best_j as f64 * cell_ratio, best) };
        Ok(HjbCheck {
            kappa: ln_k.exp(),
            ln_kappa: ln_k,
            xi_star: ln_xi.exp(),
            minimiser_ratio: s_min,
            cell_ratio,
            relative_residual: 1.0 + phi_min,
        })
    }

    /// Solves for `y0`: trajectory, value and termination.
    pub fn solve(&self, y0: f64) -> Result<SolveResult> {
        self.check_y0(y0)?;
        if y0 == 0.0 {
            return Ok(SolveResult {
                y0,
                risk_aversion: self.risk_aversion(),
                trajectory: Trajectory::zero(),
                value: 0.0,
                ln_value: f64::NEG_INFINITY,
                termination: Termination::FiniteTau(0.0),
                divergence: None,
                speed_samples: vec![(0.0, 0.0)],
            });
        }
        let (class, alpha, numeric) = self.classify(y0)?;
        let trajectory = self.trajectory_with(y0, class, alpha)?;
        let termination = match (class, trajectory.tau) {
            (TauClass::Finite, Some(t)) => Termination::FiniteTau(t),
            (TauClass::Infinite, _) => Termination::InfiniteTau,
            _ => Termination::Unclassified,
        };
        let ln_value = self.ln_value_function(y0)?;
        let speed_samples = trajectory
            .positions
            .iter()
            .zip(&trajectory.speeds)
            .map(|(y, x)| (*y, *x))
            .collect();
        Ok(SolveResult {
            y0,
            risk_aversion: self.risk_aversion(),
            trajectory,
            value: ln_value.exp(),
            ln_value,
            termination,
            divergence: Some(numeric),
            speed_samples,
        })
    }
}
