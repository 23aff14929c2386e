//! Driving Lévy models and the risk-adjusted cumulant `kappa_A(y) = kappa(-A y)`.
//!
//! Three model families are supported:
//!
//! * a Brownian motion with drift, whose cumulant is quadratic;
//! * the linearisation `s (1 + L_hat)` of an exponential variance-gamma model,
//!   where `L_hat` jumps by `e^z - 1` whenever the log-price jumps by `z`;
//! * a generic Lévy triplet with a user-supplied jump density.
//!
//! The variance-gamma cumulant grows like `exp(A s y)` for large positions and
//! leaves the range of `f64` for desk-sized orders, so it is evaluated in log
//! space: [`KappaFunction::ln_kappa`] is the primary entry point.

use std::f64::consts::E;
use std::fmt;

use crate::error::{Error, Result};
use crate::impact::ScalarFn;
use crate::quad::{integrate, integrate_from_neg_infinity, integrate_to_infinity, integrate_with_breaks, QuadTolerance};

/// Parameters of a variance-gamma process `theta T_t + rho W(T_t)` with a gamma
/// subordinator `T` of unit mean rate and variance rate `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgParams {
    pub theta: f64,
    pub rho: f64,
    pub eta: f64,
}

impl VgParams {
    pub fn new(theta: f64, rho: f64, eta: f64) -> Result<Self> {
        if !(theta.is_finite() && rho > 0.0 && rho.is_finite() && eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "variance gamma needs finite theta, rho > 0 and eta > 0 (got {theta}, {rho}, {eta})"
            )));
        }
        Ok(VgParams { theta, rho, eta })
    }

    /// Skew coefficient `C = theta / rho^2` of the Lévy density.
    pub fn c(&self) -> f64 {
        self.theta / (self.rho * self.rho)
    }

    /// Decay coefficient `D = sqrt(theta^2 + 2 rho^2 / eta) / rho^2`.
    pub fn d(&self) -> f64 {
        (self.theta * self.theta + 2.0 * self.rho * self.rho / self.eta).sqrt() / (self.rho * self.rho)
    }

    /// Fails unless `D - C > 2`, which makes the exponential model square integrable.
    pub fn check_admissible(&self) -> Result<()> {
        let gap = self.d() - self.c();
        if gap > 2.0 {
            Ok(())
        } else {
            Err(Error::Admissibility { gap })
        }
    }

    /// Cumulant generating function of the log-price increment over one day.
    pub fn kappa_tilde(&self, x: f64) -> Result<f64> {
        vg_kappa_tilde(self.theta, self.rho, self.eta, x)
    }

    /// Lévy density of the log-price, `exp(C z - D |z|) / (eta |z|)`.
    pub fn density(&self, z: f64) -> f64 {
        (self.c() * z - self.d() * z.abs()).exp() / (self.eta * z.abs())
    }

    /// Lévy density of the linearised return process on `(-1, inf) \ {0}`, as a
    /// power of `x + 1`.
    pub fn linearised_density(&self, x: f64) -> f64 {
        let (c, d) = (self.c(), self.d());
        let l = x.ln_1p();
        if x < 0.0 {
            -(x + 1.0).powf(c + d - 1.0) / (self.eta * l)
        } else {
            (x + 1.0).powf(c - d - 1.0) / (self.eta * l)
        }
    }
}

/// Variance-gamma cumulant `-(1/eta) ln(1 - x^2 rho^2 eta / 2 - theta eta x)`.
pub fn vg_kappa_tilde(theta: f64, rho: f64, eta: f64, x: f64) -> Result<f64> {
    let shift = -x * x * rho * rho * eta / 2.0 - theta * eta * x;
    if !(1.0 + shift > 0.0) {
        return Err(Error::domain(
            "variance-gamma cumulant",
            format!("1 - x^2 rho^2 eta / 2 - theta eta x = {} is not positive at x = {x}", 1.0 + shift),
        ));
    }
    Ok(-shift.ln_1p() / eta)
}

/// Brownian parameters `(mu_tilde, sigma_tilde^2)` whose exponential matches the
/// first two moments of the exponential variance-gamma model.
pub fn bm_match_moments(theta: f64, rho: f64, eta: f64) -> Result<(f64, f64)> {
    let k1 = vg_kappa_tilde(theta, rho, eta, 1.0)?;
    let k2 = vg_kappa_tilde(theta, rho, eta, 2.0)?;
    let variance = k2 - 2.0 * k1;
    if !(variance > 0.0) {
        return Err(Error::Degenerate { variance });
    }
    Ok((2.0 * k1 - k2 / 2.0, variance))
}

/// Sign of the drift of the driving process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftSign {
    Negative,
    Zero,
    Positive,
}

/// Drifts below this magnitude (per day, price units) count as zero.
const ZERO_DRIFT: f64 = 1e-14;

impl DriftSign {
    pub fn of(drift: f64) -> Self {
        if drift.abs() <= ZERO_DRIFT {
            DriftSign::Zero
        } else if drift < 0.0 {
            DriftSign::Negative
        } else {
            DriftSign::Positive
        }
    }
}

/// Family of the driving process.
#[derive(Clone)]
pub enum LevyKind {
    /// `L_t = mu t + sigma W_t` in price units.
    BrownianLinear { mu: f64, sigma: f64 },
    /// Linearised exponential variance-gamma model with initial price `s_tilde`.
    VgExponentialLinearised { vg: VgParams, s_tilde: f64 },
    /// Drift, Brownian volatility and jump density in price units.
    GenericTriplet {
        mu: f64,
        sigma: f64,
        density: ScalarFn,
        support: (f64, f64),
    },
}

impl fmt::Debug for LevyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevyKind::BrownianLinear { mu, sigma } => f
                .debug_struct("BrownianLinear")
                .field("mu", mu)
                .field("sigma", sigma)
                .finish(),
            LevyKind::VgExponentialLinearised { vg, s_tilde } => f
                .debug_struct("VgExponentialLinearised")
                .field("vg", vg)
                .field("s_tilde", s_tilde)
                .finish(),
            LevyKind::GenericTriplet { mu, sigma, support, .. } => f
                .debug_struct("GenericTriplet")
                .field("mu", mu)
                .field("sigma", sigma)
                .field("support", support)
                .finish_non_exhaustive(),
        }
    }
}

/// A driving Lévy process together with its exponential-moment abscissa.
#[derive(Clone, Debug)]
pub struct LevyModel {
    kind: LevyKind,
    delta_bar: f64,
}

impl LevyModel {
    /// Brownian motion with drift; `sigma` must be positive.
    pub fn brownian(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "Brownian model needs finite mu and sigma > 0 (got mu = {mu}, sigma = {sigma})"
            )));
        }
        Ok(LevyModel {
            kind: LevyKind::BrownianLinear { mu, sigma },
            delta_bar: f64::NEG_INFINITY,
        })
    }

    /// Linearised exponential variance-gamma model.
    pub fn vg_linearised(vg: VgParams, s_tilde: f64) -> Result<Self> {
        if !(s_tilde > 0.0 && s_tilde.is_finite()) {
            return Err(Error::InvalidModel(format!("initial price must be positive, got {s_tilde}")));
        }
        vg.check_admissible()?;
        Ok(LevyModel {
            kind: LevyKind::VgExponentialLinearised { vg, s_tilde },
            delta_bar: f64::NEG_INFINITY,
        })
    }

    /// A generic triplet. `delta_bar < 0` is the lower exponential-moment
    /// abscissa of `L_1` (use `f64::NEG_INFINITY` when every negative moment is
    /// finite); it is not inferred from the density.
    pub fn generic_triplet<F>(mu: f64, sigma: f64, density: F, support: (f64, f64), delta_bar: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::generic_from_arc(mu, sigma, std::sync::Arc::new(density), support, delta_bar)
    }

    fn generic_from_arc(mu: f64, sigma: f64, density: ScalarFn, support: (f64, f64), delta_bar: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!("need finite mu and sigma >= 0 (got {mu}, {sigma})")));
        }
        if !(support.0 <= 0.0 && support.1 >= 0.0 && support.0 < support.1) {
            return Err(Error::InvalidModel(format!("jump support {support:?} must straddle zero")));
        }
        if !(delta_bar < 0.0) {
            return Err(Error::InvalidModel(format!("delta_bar must be negative, got {delta_bar}")));
        }
        // Non-trivial jump part: the density must be positive somewhere.
        let probes = [-1.0, -0.1, -0.01, 0.01, 0.1, 1.0];
        let has_jumps = probes
            .iter()
            .filter(|x| **x > support.0 && **x < support.1)
            .any(|x| density(*x) > 0.0);
        if sigma == 0.0 && !has_jumps {
            return Err(Error::InvalidModel("process is trivial: no volatility and no jumps".into()));
        }
        Ok(LevyModel {
            kind: LevyKind::GenericTriplet {
                mu,
                sigma,
                density,
                support,
            },
            delta_bar,
        })
    }

    pub fn kind(&self) -> &LevyKind {
        &self.kind
    }

    /// Lower abscissa of exponential-moment finiteness (`-inf` allowed).
    pub fn delta_bar(&self) -> f64 {
        self.delta_bar
    }

    /// Drift `mu` of `L` in price units per day.
    pub fn drift(&self) -> f64 {
        match &self.kind {
            LevyKind::BrownianLinear { mu, .. } => *mu,
            LevyKind::VgExponentialLinearised { vg, s_tilde } => {
                s_tilde * vg.kappa_tilde(1.0).expect("admissible parameters have kappa(1) finite")
            }
            LevyKind::GenericTriplet { mu, .. } => *mu,
        }
    }

    pub fn drift_sign(&self) -> DriftSign {
        DriftSign::of(self.drift())
    }

    /// Price scale `s_tilde` of a linearised model; 1 otherwise.
    pub fn price_scale(&self) -> f64 {
        match &self.kind {
            LevyKind::VgExponentialLinearised { s_tilde, .. } => *s_tilde,
            _ => 1.0,
        }
    }

    /// The Brownian model matched to this one. A variance-gamma model maps to
    /// the linearised Brownian model whose exponential has the same first two
    /// moments; a Brownian model maps to itself.
    pub fn matched_brownian(&self) -> Result<LevyModel> {
        match &self.kind {
            LevyKind::BrownianLinear { .. } => Ok(self.clone()),
            LevyKind::VgExponentialLinearised { vg, s_tilde } => {
                let (mu_tilde, sigma_sq) = bm_match_moments(vg.theta, vg.rho, vg.eta)?;
                LevyModel::brownian(s_tilde * (mu_tilde + sigma_sq / 2.0), s_tilde * sigma_sq.sqrt())
            }
            LevyKind::GenericTriplet { .. } => Err(Error::InvalidModel(
                "moment matching is only defined for variance-gamma models".into(),
            )),
        }
    }

    /// The risk-adjusted cumulant for risk aversion `A`.
    pub fn kappa(&self, risk_aversion: f64) -> Result<KappaFunction> {
        KappaFunction::new(self.clone(), risk_aversion)
    }
}

/// An exponential Lévy model `s exp(L_tilde)` prior to linearisation.
#[derive(Clone)]
pub enum ExpLevySpec {
    VarianceGamma(VgParams),
    /// Canonical triplet of `L_tilde` (truncation at `|z| < 1`) with a
    /// jump density on the log-price scale.
    Triplet {
        mu: f64,
        sigma: f64,
        density: ScalarFn,
    },
}

/// Linearises `s_tilde exp(L_tilde)` into `s_tilde (1 + L_hat)`.
///
/// The returned model jumps by `s_tilde (e^z - 1)` when `L_tilde` jumps by `z`,
/// drifts at `s_tilde m_tilde` with
/// `m_tilde = mu + sigma^2/2 + int (e^z - 1 - z 1{|z|<1}) nu_tilde(dz)`,
/// and has every negative exponential moment finite.
pub fn linearise_exp_levy(spec: ExpLevySpec, s_tilde: f64) -> Result<LevyModel> {
    match spec {
        ExpLevySpec::VarianceGamma(vg) => LevyModel::vg_linearised(vg, s_tilde),
        ExpLevySpec::Triplet { mu, sigma, density } => {
            if !(s_tilde > 0.0 && s_tilde.is_finite()) {
                return Err(Error::InvalidModel(format!("initial price must be positive, got {s_tilde}")));
            }
            let tol = QuadTolerance::new(1e-14, 1e-10);
            // Square integrability of the exponential model.
            let d = density.clone();
            let upper = integrate_to_infinity(move |z| (2.0 * z).exp() * d(z), 1.0, tol)
                .map_err(|e| Error::InvalidModel(format!("exp(2z) is not integrable on [1, inf): {e}")))?;
            if !upper.value.is_finite() {
                return Err(Error::InvalidModel("exp(2z) is not integrable on [1, inf)".into()));
            }
            let d = density.clone();
            let compensator = move |z: f64| {
                let small = if z.abs() < 1.0 { z } else { 0.0 };
                (z.exp_m1() - small) * d(z)
            };
            let inner = integrate_with_breaks(&compensator, &[-1.0, 0.0, 1.0], tol)?;
            let right = integrate_to_infinity(&compensator, 1.0, tol)?;
            let left = integrate_from_neg_infinity(&compensator, -1.0, tol)?;
            let m_tilde = mu + sigma * sigma / 2.0 + inner.value + right.value + left.value;
            let d = density.clone();
            let jump_density = move |x: f64| {
                if x <= -s_tilde || x == 0.0 {
                    0.0
                } else {
                    d((x / s_tilde).ln_1p()) / (s_tilde + x)
                }
            };
            LevyModel::generic_from_arc(
                s_tilde * m_tilde,
                s_tilde * sigma,
                std::sync::Arc::new(jump_density),
                (-s_tilde, f64::INFINITY),
                f64::NEG_INFINITY,
            )
        }
    }
}

/// `kappa_A(y) = kappa(-A y)` for a fixed model and risk aversion.
#[derive(Clone, Debug)]
pub struct KappaFunction {
    model: LevyModel,
    risk_aversion: f64,
    tol: QuadTolerance,
}

/// Additive pieces of `kappa_A(y)`: drift, diffusion and (log of) jump part.
#[derive(Debug, Clone, Copy)]
struct KappaParts {
    drift: f64,
    diffusion: f64,
    ln_jump: f64,
}

impl KappaFunction {
    pub fn new(model: LevyModel, risk_aversion: f64) -> Result<Self> {
        if !(risk_aversion > 0.0 && risk_aversion.is_finite()) {
            return Err(Error::InvalidModel(format!("risk aversion must be positive, got {risk_aversion}")));
        }
        Ok(KappaFunction {
            model,
            risk_aversion,
            tol: QuadTolerance::default(),
        })
    }

    /// Overrides the quadrature tolerance used for the jump integral.
    pub fn with_tolerance(mut self, tol: QuadTolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn risk_aversion(&self) -> f64 {
        self.risk_aversion
    }

    pub fn tolerance(&self) -> QuadTolerance {
        self.tol
    }

    /// Effective risk aversion on the return scale: `A s_tilde` for linearised
    /// models, `A` otherwise.
    pub fn scaled_risk_aversion(&self) -> f64 {
        self.risk_aversion * self.model.price_scale()
    }

    /// Supremum of admissible positions, `-delta_bar / A`.
    pub fn domain_upper(&self) -> f64 {
        -self.model.delta_bar / self.risk_aversion
    }

    pub fn drift_sign(&self) -> DriftSign {
        self.model.drift_sign()
    }

    fn check_position(&self, y: f64) -> Result<()> {
        if !(y >= 0.0 && y.is_finite()) {
            return Err(Error::domain("kappa_A", format!("position must be finite and >= 0, got {y}")));
        }
        let bound = self.domain_upper();
        if y >= bound {
            return Err(Error::PositionBound { y0: y, bound });
        }
        Ok(())
    }

    fn parts(&self, y: f64) -> Result<KappaParts> {
        self.check_position(y)?;
        let a = self.risk_aversion;
        match &self.model.kind {
            LevyKind::BrownianLinear { mu, sigma } => Ok(KappaParts {
                drift: -a * mu * y,
                diffusion: 0.5 * (a * sigma * y).powi(2),
                ln_jump: f64::NEG_INFINITY,
            }),
            LevyKind::VgExponentialLinearised { vg, s_tilde } => {
                let scaled = a * s_tilde * y;
                let m_tilde = vg.kappa_tilde(1.0)?;
                Ok(KappaParts {
                    drift: -scaled * m_tilde,
                    diffusion: 0.0,
                    ln_jump: vg_ln_jump_integral(vg, scaled, self.tol)?,
                })
            }
            LevyKind::GenericTriplet {
                mu,
                sigma,
                density,
                support,
            } => {
                let jump = generic_jump_integral(density, *support, a * y, self.tol)?;
                Ok(KappaParts {
                    drift: -a * mu * y,
                    diffusion: 0.5 * (a * sigma * y).powi(2),
                    ln_jump: jump.ln(),
                })
            }
        }
    }

    /// `kappa_A(y)`; `+inf` once the value leaves the range of `f64`.
    pub fn kappa(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            self.check_position(y)?;
            return Ok(0.0);
        }
        let p = self.parts(y)?;
        Ok(p.drift + p.diffusion + p.ln_jump.exp())
    }

    /// `ln kappa_A(y)`, finite beyond the overflow threshold of `kappa_A`.
    /// Returns `-inf` at `y = 0`; errors when `kappa_A(y) <= 0` for `y > 0`,
    /// which only happens for a positive drift.
    pub fn ln_kappa(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            self.check_position(y)?;
            return Ok(f64::NEG_INFINITY);
        }
        let p = self.parts(y)?;
        if p.drift >= 0.0 {
            let terms = [p.drift.ln(), p.diffusion.ln(), p.ln_jump];
            return Ok(log_sum_exp(&terms));
        }
        let value = p.drift + p.diffusion + p.ln_jump.exp();
        if value > 0.0 {
            Ok(value.ln())
        } else {
            Err(Error::PositiveDrift {
                drift: self.model.drift(),
            })
        }
    }
}

/// `ln(sum exp(t_i))` ignoring `-inf` terms.
pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `ln(e^w - 1 - w)` for `w != 0`, accurate for small `|w|` and finite for
/// large positive `w`.
fn ln_exp_remainder(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        2.0 * w.abs().ln() - std::f64::consts::LN_2 + (w / 3.0 + w * w / 12.0).ln_1p()
    } else if w < 30.0 {
        (w.exp_m1() - w).ln()
    } else {
        w + (-(1.0 + w) * (-w).exp()).ln_1p()
    }
}

/// `e^{-w} - 1 + w` with a series for small `|w|`.
fn exp_remainder(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        w * w * (0.5 - w / 6.0 + w * w / 24.0)
    } else {
        (-w).exp_m1() + w
    }
}

/// Log-space quadrature of the variance-gamma jump integral
/// `int (e^{-a x} - 1 + a x) nu_hat(dx)` in the coordinates `x = e^z - 1`,
/// where it reads `int (e^{w} - 1 - w) e^{C z - D |z|} / (eta |z|) dz` with
/// `w = -a (e^z - 1)`.
fn vg_ln_jump_integral(vg: &VgParams, a: f64, tol: QuadTolerance) -> Result<f64> {
    if a == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (c, d, ln_eta) = (vg.c(), vg.d(), vg.eta.ln());
    // Log integrand on z < 0 and z > 0.
    let ell = move |z: f64| -> f64 {
        let w = -a * z.exp_m1();
        ln_exp_remainder(w) + c * z - d * z.abs() - ln_eta - z.abs().ln()
    };

    // Coarse scan of |z| over [1e-8, 64] on both sides to locate the peaks.
    const SCAN: usize = 64;
    let scan_z = |i: usize| (1e-8f64).ln() + (64f64 / 1e-8).ln() * i as f64 / (SCAN - 1) as f64;
    let mut peak_left = (f64::NEG_INFINITY, -1.0);
    let mut peak_right = (f64::NEG_INFINITY, 1.0);
    for i in 0..SCAN {
        let r = scan_z(i).exp();
        let l = ell(-r);
        if l > peak_left.0 {
            peak_left = (l, -r);
        }
        let l = ell(r);
        if l > peak_right.0 {
            peak_right = (l, r);
        }
    }
    let shift = peak_left.0.max(peak_right.0);
    if !shift.is_finite() {
        return Err(Error::numerical("variance-gamma cumulant", format!("log-integrand peak {shift} at a = {a}")));
    }
    const DROP: f64 = 50.0;

    // Walk outwards from each peak until the integrand is e^-50 below the top.
    let walk = |start: f64, dir: f64| -> f64 {
        let mut step = start.abs().max(0.5);
        let mut z = start + dir * step;
        while ell(z) > shift - DROP && z.abs() < 1e4 {
            step *= 2.0;
            z = start + dir * step;
        }
        z
    };
    let z_left = walk(peak_left.1, -1.0);
    let z_right = walk(peak_right.1, 1.0);

    let scaled = |z: f64| (ell(z) - shift).exp();
    let z0 = 1e-3;
    let mut left_breaks = vec![z_left, peak_left.1];
    if peak_left.1 < -z0 {
        left_breaks.push(-z0);
    }
    left_breaks.push(0.0);
    let mut right_breaks = vec![0.0];
    if peak_right.1 > z0 {
        right_breaks.push(z0);
    }
    right_breaks.push(peak_right.1);
    right_breaks.push(z_right);
    left_breaks.dedup();
    right_breaks.dedup();
    let left = integrate_with_breaks(scaled, &left_breaks, tol)?;
    let right = integrate_with_breaks(scaled, &right_breaks, tol)?;
    Ok(shift + (left.value + right.value).ln())
}

/// `int (e^{-a x} - 1 + a x) nu(x) dx` over the support, split at zero.
fn generic_jump_integral(density: &ScalarFn, support: (f64, f64), a: f64, tol: QuadTolerance) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let integrand = |x: f64| {
        if x == 0.0 {
            0.0
        } else {
            exp_remainder(a * x) * density(x)
        }
    };
    let (lo, hi) = support;
    let mut total = 0.0;
    if lo < 0.0 {
        total += if lo.is_finite() {
            integrate(integrand, lo, 0.0, tol)?.value
        } else {
            integrate(integrand, -1.0, 0.0, tol)?.value + integrate_from_neg_infinity(integrand, -1.0, tol)?.value
        };
    }
    if hi > 0.0 {
        total += if hi.is_finite() {
            integrate(integrand, 0.0, hi, tol)?.value
        } else {
            integrate(integrand, 0.0, 1.0, tol)?.value + integrate_to_infinity(integrand, 1.0, tol)?.value
        };
    }
    Ok(total)
}

fn require_vg(kf: &KappaFunction) -> Result<(VgParams, f64)> {
    match kf.model.kind {
        LevyKind::VgExponentialLinearised { vg, s_tilde } => Ok((vg, s_tilde)),
        _ => Err(Error::InvalidModel("expected a linearised variance-gamma model".into())),
    }
}

/// `kappa_hat(-A_tilde u)` for a linearised variance-gamma model.
pub fn vg_kappa_hat(kf: &KappaFunction, u: f64) -> Result<f64> {
    require_vg(kf)?;
    kf.kappa(u)
}

/// Closed-form lower bound for the linearised variance-gamma cumulant,
/// obtained by bounding the negative-jump part of the integral from below.
/// Overflows once `a - (C + D + 1) ln a` passes about 700; see
/// [`vg_kappa_hat_lower_bound_ln`].
pub fn vg_kappa_hat_lower_bound(kf: &KappaFunction, u: f64) -> Result<f64> {
    let (vg, _) = require_vg(kf)?;
    let a = kf.scaled_risk_aversion() * u;
    let drift = -a * vg.kappa_tilde(1.0)?;
    let cd = vg.c() + vg.d();
    let bracket = if a >= 1.0 {
        lower_bound_bracket_large(a, cd)
    } else {
        lower_bound_bracket(a, cd)
    };
    Ok(drift + E / vg.eta * bracket)
}

/// `ln` of [`vg_kappa_hat_lower_bound`], or `None` where the bound is not
/// positive. Finite even where the bound overflows.
pub fn vg_kappa_hat_lower_bound_ln(kf: &KappaFunction, u: f64) -> Result<Option<f64>> {
    let (vg, _) = require_vg(kf)?;
    let a = kf.scaled_risk_aversion() * u;
    let cd = vg.c() + vg.d();
    if a < 1.0 {
        let value = vg_kappa_hat_lower_bound(kf, u)?;
        return Ok((value > 0.0).then(|| value.ln()));
    }
    let drift = -a * vg.kappa_tilde(1.0)?;
    let ln_lead = a - (cd + 1.0) * a.ln() - ((cd + 1.0) * (cd + 2.0)).ln();
    let rest = a / (cd + 2.0) - (1.0 + a) / (cd + 1.0) + drift * vg.eta / E;
    if ln_lead < 600.0 {
        let value = E / vg.eta * (ln_lead.exp() + rest);
        return Ok((value > 0.0).then(|| value.ln()));
    }
    let ln_bound = (E / vg.eta).ln() + ln_lead + (rest * (-ln_lead).exp()).ln_1p();
    Ok(Some(ln_bound))
}

/// Bracketed term of the bound, valid for every `a >= 0`, with
/// `m = min(1/a, 1)`.
pub(crate) fn lower_bound_bracket(a: f64, cd: f64) -> f64 {
    let m = if a > 1.0 { 1.0 / a } else { 1.0 };
    let ea = a.exp();
    -ea * a / (cd + 2.0) * m.powf(cd + 2.0) + ea / (cd + 1.0) * m.powf(cd + 1.0) + a / (cd + 2.0)
        - (1.0 + a) / (cd + 1.0)
}

/// The same term simplified for `a >= 1`.
pub(crate) fn lower_bound_bracket_large(a: f64, cd: f64) -> f64 {
    (a - (cd + 1.0) * a.ln()).exp() * (1.0 / (cd + 1.0) - 1.0 / (cd + 2.0)) + a / (cd + 2.0) - (1.0 + a) / (cd + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_vg() -> VgParams {
        VgParams::new(-0.002, 0.02, 0.6).unwrap()
    }

    /// Independent evaluation of the cumulant by direct arithmetic.
    fn kappa_tilde_oracle(theta: f64, rho: f64, eta: f64, x: f64) -> f64 {
        -(1.0 - x * x * rho * rho * eta / 2.0 - theta * eta * x).ln() / eta
    }

    #[test]
    fn kappa_tilde_values() {
        assert_eq!(vg_kappa_tilde(-0.002, 0.02, 0.6, 0.0).unwrap(), 0.0);
        let k1 = vg_kappa_tilde(-0.002, 0.02, 0.6, 1.0).unwrap();
        let k2 = vg_kappa_tilde(-0.002, 0.02, 0.6, 2.0).unwrap();
        assert_relative_eq!(k1, kappa_tilde_oracle(-0.002, 0.02, 0.6, 1.0), max_relative = 1e-12);
        assert_relative_eq!(k2, kappa_tilde_oracle(-0.002, 0.02, 0.6, 2.0), max_relative = 1e-12);
        assert!((k1 - -1.799e-3).abs() < 5e-7, "{k1}");
        assert!((k2 - -3.197e-3).abs() < 5e-7, "{k2}");
    }

    #[test]
    fn kappa_tilde_domain_error() {
        // 1 - x^2 rho^2 eta / 2 - theta eta x <= 0 for large x.
        let err = vg_kappa_tilde(-0.002, 0.02, 0.6, 200.0).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn admissibility_of_reference_parameters() {
        let vg = reference_vg();
        assert_relative_eq!(vg.c(), -5.0, max_relative = 1e-14);
        // sqrt(4e-6 + 8e-4/0.6) / 4e-4 by hand.
        assert!((vg.d() - 91.424).abs() < 1e-3);
        assert!((vg.d() - vg.c() - 96.424).abs() < 1e-3);
        assert!(vg.check_admissible().is_ok());
        let bad = VgParams::new(0.2, 0.5, 2.0).unwrap();
        assert!(matches!(bad.check_admissible(), Err(Error::Admissibility { .. })));
        assert!(LevyModel::vg_linearised(bad, 100.0).is_err());
    }

    #[test]
    fn linearised_drift_is_negative() {
        let model = LevyModel::vg_linearised(reference_vg(), 100.0).unwrap();
        assert_eq!(model.drift_sign(), DriftSign::Negative);
        assert_relative_eq!(model.drift(), 100.0 * kappa_tilde_oracle(-0.002, 0.02, 0.6, 1.0), max_relative = 1e-12);
    }

    #[test]
    fn moment_matching() {
        let (mu, s2) = bm_match_moments(-0.002, 0.02, 0.6).unwrap();
        assert!((s2.sqrt() - 0.02).abs() < 1e-3);
        assert!((mu - -2.000e-3).abs() < 5e-7, "{mu}");
        let k1 = kappa_tilde_oracle(0.0, 0.02, 0.6, 1.0);
        let k2 = kappa_tilde_oracle(0.0, 0.02, 0.6, 2.0);
        let (_, s2_sym) = bm_match_moments(0.0, 0.02, 0.6).unwrap();
        assert_relative_eq!(s2_sym, k2 - 2.0 * k1, max_relative = 1e-10);
        assert!(s2_sym > 0.0);
    }

    #[test]
    fn linearised_density_matches_transformed_density() {
        let vg = reference_vg();
        for x in [-0.9, -0.3, -1e-3, 1e-3, 0.2, 2.0] {
            let from_tilde = vg.density(f64::ln_1p(x)) / (1.0 + x);
            assert_relative_eq!(vg.linearised_density(x), from_tilde, max_relative = 1e-12);
        }
    }

    #[test]
    fn brownian_kappa_is_quadratic() {
        let model = LevyModel::brownian(0.0, 2.0).unwrap();
        let kf = model.kappa(1e-5).unwrap();
        for y in [1.0, 1e3, 2e5] {
            assert_relative_eq!(kf.kappa(y).unwrap(), 0.5 * (1e-5 * 2.0 * y).powi(2), max_relative = 1e-14);
        }
        assert_eq!(kf.kappa(0.0).unwrap(), 0.0);
        assert_eq!(kf.ln_kappa(0.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn kappa_rejects_positions_outside_domain() {
        let kf = LevyModel::generic_triplet(0.0, 1.0, |_| 0.0, (-1.0, 1.0), -2.0)
            .unwrap()
            .kappa(0.5)
            .unwrap();
        assert_eq!(kf.domain_upper(), 4.0);
        assert!(matches!(kf.kappa(4.0), Err(Error::PositionBound { .. })));
        assert!(kf.kappa(-1.0).is_err());
    }

    #[test]
    fn trivial_generic_model_rejected() {
        assert!(LevyModel::generic_triplet(0.0, 0.0, |_| 0.0, (-1.0, 1.0), -1.0).is_err());
        assert!(LevyModel::brownian(0.0, 0.0).is_err());
    }

    /// `ln kappa_hat` at (A, u) from an independent log-space quadrature in
    /// SciPy (QUADPACK on the infinite range), frozen.
    const LN_KAPPA_HAT: [(f64, f64, f64); 12] = [
        (1e-6, 1.0, -15.530837594886627),
        (1e-6, 1e4, -6.214722415914691),
        (1e-6, 2e5, -2.1236886032777655),
        (1e-5, 1.0, -13.228152172626215),
        (1e-5, 100.0, -8.612005830046574),
        (1e-5, 2e4, -2.1236886032777655),
        (1e-5, 1.2e5, 5.655623830632621),
        (1e-5, 2e5, 40.44830778551809),
        (1e-4, 1e4, 2.319329859571649),
        (1e-4, 2e4, 40.44830778551809),
        (1e-4, 1.2e5, 884.4442378805793),
        (1e-4, 2e5, 1640.119090584494),
    ];

    #[test]
    fn vg_kappa_hat_matches_frozen_values() {
        let model = LevyModel::vg_linearised(reference_vg(), 100.0).unwrap();
        for (a, u, expected) in LN_KAPPA_HAT {
            let kf = model.kappa(a).unwrap();
            let got = kf.ln_kappa(u).unwrap();
            assert!(
                (got - expected).abs() <= 1e-7 * expected.abs().max(1.0),
                "A = {a}, u = {u}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn vg_kappa_hat_agrees_with_price_coordinates() {
        // Same integral in jump-size coordinates through the generic route.
        let vg = reference_vg();
        let s = 100.0;
        let m = s * vg.kappa_tilde(1.0).unwrap();
        let generic = LevyModel::generic_triplet(
            m,
            0.0,
            move |x| vg.linearised_density(x / s) / s,
            (-s, f64::INFINITY),
            f64::NEG_INFINITY,
        )
        .unwrap();
        let linear = LevyModel::vg_linearised(vg, s).unwrap();
        for (a, u) in [(1e-6, 1e3), (1e-5, 1e4), (1e-5, 1e5)] {
            let x = generic.kappa(a).unwrap().kappa(u).unwrap();
            let y = linear.kappa(a).unwrap().kappa(u).unwrap();
            assert_relative_eq!(x, y, max_relative = 1e-7);
        }
    }

    #[test]
    fn vg_kappa_hat_exceeds_lower_bound() {
        let kf = LevyModel::vg_linearised(reference_vg(), 100.0).unwrap().kappa(1e-4).unwrap();
        for u in [1.0, 100.0, 1e3, 1e4, 5e4, 2e5] {
            let ln_k = kf.ln_kappa(u).unwrap();
            if let Some(ln_lb) = vg_kappa_hat_lower_bound_ln(&kf, u).unwrap() {
                assert!(ln_k >= ln_lb - 1e-9, "u = {u}: {ln_k} < {ln_lb}");
            }
        }
    }

    #[test]
    fn small_position_asymptotics() {
        let kf = LevyModel::brownian(0.0, 1.5).unwrap().kappa(1e-3).unwrap();
        let k = 0.5 * (1e-3f64 * 1.5).powi(2);
        assert_relative_eq!(kf.kappa(1e-6).unwrap() / 1e-12, k, max_relative = 1e-10);
        let kf = LevyModel::vg_linearised(reference_vg(), 100.0).unwrap().kappa(1e-5).unwrap();
        let slope = -1e-5 * kf.model().drift();
        assert_relative_eq!(kf.kappa(1e-3).unwrap() / 1e-3, slope, max_relative = 1e-3);
    }

    #[test]
    fn lower_bound_branches_agree() {
        for cd in [0.5, 86.42, 3.0] {
            let at_one = lower_bound_bracket(1.0, cd);
            assert_relative_eq!(at_one, lower_bound_bracket_large(1.0, cd), max_relative = 1e-12);
            for a in [1.5, 10.0, 200.0] {
                assert_relative_eq!(
                    lower_bound_bracket(a, cd),
                    lower_bound_bracket_large(a, cd),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn log_sum_exp_handles_infinities() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert_relative_eq!(log_sum_exp(&[0.0, 0.0]), 2f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(log_sum_exp(&[1000.0, f64::NEG_INFINITY]), 1000.0);
    }

    #[test]
    fn exp_remainder_series_is_continuous() {
        for w in [-0.9999e-4, 0.9999e-4] {
            let series = exp_remainder(w);
            let direct = (-w).exp_m1() + w;
            assert_relative_eq!(series, direct, max_relative = 1e-7);
        }
        for w in [-1.0001e-4, 0.99e-4, 1.01e-4, 5.0, 40.0] {
            let l = ln_exp_remainder(w);
            let direct = (w.exp() - 1.0 - w).ln();
            assert_relative_eq!(l, direct, max_relative = 1e-6);
        }
    }
}
