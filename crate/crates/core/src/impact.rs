//! Temporary market-impact functions and the inverse speed map `G`.
//!
//! An impact function `F` maps a trading speed (shares per day) to a price
//! concession per share. The admissible class requires `F(0) = 0`, continuity,
//! strict convexity of `x F(x)`, and a strictly increasing, unbounded
//! `h(x) = x^2 F'(x)`. The optimal feedback speed is `G(kappa / A)` where `G` is
//! the inverse of `h`, so `G` is the function the solver hits hardest.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::roots::brent_root;

/// A thread-safe scalar function.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exponent of the concave piece of [`ImpactKind::PiecewisePowerExp`].
pub const PIECEWISE_POWER: f64 = 0.6;

/// The family an [`ImpactModel`] belongs to.
#[derive(Clone)]
pub enum ImpactKind {
    /// `F(x) = beta x^gamma`.
    PowerLaw { beta: f64, gamma: f64 },
    /// `beta1 x^0.6` up to `xbar`, then an exponential branch glued with matching
    /// value and slope at `xbar`. `xhat` is the derived knot offset.
    PiecewisePowerExp {
        beta1: f64,
        beta2: f64,
        gamma: f64,
        xbar: f64,
        xhat: f64,
    },
    /// User-supplied `F` and `F'`, optionally with `ln F` and `ln F'` for
    /// arguments where the plain values overflow.
    Custom {
        f: ScalarFn,
        fprime: ScalarFn,
        ln_f: Option<ScalarFn>,
        ln_fprime: Option<ScalarFn>,
    },
}

impl fmt::Debug for ImpactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImpactKind::PowerLaw { beta, gamma } => f
                .debug_struct("PowerLaw")
                .field("beta", beta)
                .field("gamma", gamma)
                .finish(),
            ImpactKind::PiecewisePowerExp {
                beta1,
                beta2,
                gamma,
                xbar,
                xhat,
            } => f
                .debug_struct("PiecewisePowerExp")
                .field("beta1", beta1)
                .field("beta2", beta2)
                .field("gamma", gamma)
                .field("xbar", xbar)
                .field("xhat", xhat)
                .finish(),
            ImpactKind::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// A temporary impact function. Immutable once built.
#[derive(Clone, Debug)]
pub struct ImpactModel {
    kind: ImpactKind,
    asymptotic_p: Option<f64>,
}

impl ImpactModel {
    /// `F(x) = beta x^gamma` with `beta, gamma > 0`.
    pub fn power_law(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite() && gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "power-law impact needs beta > 0 and gamma > 0, got beta = {beta}, gamma = {gamma}"
            )));
        }
        Ok(ImpactModel {
            kind: ImpactKind::PowerLaw { beta, gamma },
            asymptotic_p: Some(1.0 - gamma),
        })
    }

    /// Concave 0.6-power branch joined to an exponential branch at `xbar`.
    pub fn piecewise_power_exp(beta1: f64, beta2: f64, gamma: f64, xbar: f64) -> Result<Self> {
        let ok = [beta1, beta2, gamma, xbar].iter().all(|v| *v > 0.0 && v.is_finite());
        if !ok {
            return Err(Error::InvalidModel(format!(
                "piecewise impact needs strictly positive parameters, got \
                 beta1 = {beta1}, beta2 = {beta2}, gamma = {gamma}, xbar = {xbar}"
            )));
        }
        let xhat = ((3.0 * beta1 / (5.0 * beta2 * gamma)).ln() - 0.4 * xbar.ln()) / gamma;
        Ok(ImpactModel {
            kind: ImpactKind::PiecewisePowerExp {
                beta1,
                beta2,
                gamma,
                xbar,
                xhat,
            },
            asymptotic_p: Some(1.0 - PIECEWISE_POWER),
        })
    }

    /// An arbitrary impact function given by `F` and its derivative.
    ///
    /// `asymptotic_p` is the exponent `p` with `x^p F'(x) -> K > 0` as `x -> 0`,
    /// when known. Without it the solver classifies liquidation time numerically.
    pub fn custom<F, D>(f: F, fprime: D, asymptotic_p: Option<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ImpactModel {
            kind: ImpactKind::Custom {
                f: Arc::new(f),
                fprime: Arc::new(fprime),
                ln_f: None,
                ln_fprime: None,
            },
            asymptotic_p,
        }
    }

    /// Like [`ImpactModel::custom`], with `ln F` and `ln F'` supplied directly.
    pub fn custom_with_logs<F, D, LF, LD>(f: F, fprime: D, ln_f: LF, ln_fprime: LD, asymptotic_p: Option<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        LF: Fn(f64) -> f64 + Send + Sync + 'static,
        LD: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ImpactModel {
            kind: ImpactKind::Custom {
                f: Arc::new(f),
                fprime: Arc::new(fprime),
                ln_f: Some(Arc::new(ln_f)),
                ln_fprime: Some(Arc::new(ln_fprime)),
            },
            asymptotic_p,
        }
    }

    pub fn kind(&self) -> &ImpactKind {
        &self.kind
    }

    /// Exponent `p` with `x^p F'(x) -> K > 0` near zero, if known.
    pub fn asymptotic_p(&self) -> Option<f64> {
        self.asymptotic_p
    }

    /// `F(x)` for a speed `x >= 0`.
    pub fn eval_f(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::domain("impact F", format!("speed must be finite and >= 0, got {x}")));
        }
        Ok(self.f(x))
    }

    pub(crate) fn f(&self, x: f64) -> f64 {
        if x == 0.0 {
            return match &self.kind {
                ImpactKind::Custom { f, .. } => f(0.0),
                _ => 0.0,
            };
        }
        match &self.kind {
            ImpactKind::PowerLaw { beta, gamma } => beta * x.powf(*gamma),
            ImpactKind::PiecewisePowerExp {
                beta1, gamma, xbar, ..
            } => {
                if x <= *xbar {
                    beta1 * x.powf(PIECEWISE_POWER)
                } else {
                    let k = self.piecewise_scale();
                    k * (gamma * (x - xbar)).exp_m1() + beta1 * xbar.powf(PIECEWISE_POWER)
                }
            }
            ImpactKind::Custom { f, .. } => f(x),
        }
    }

    /// `ln F(x)` for `x > 0`, finite even where `F` itself overflows.
    pub fn ln_f(&self, x: f64) -> f64 {
        match &self.kind {
            ImpactKind::PowerLaw { beta, gamma } => beta.ln() + gamma * x.ln(),
            ImpactKind::PiecewisePowerExp {
                beta1, gamma, xbar, ..
            } if x > *xbar => {
                let k = self.piecewise_scale();
                let e = gamma * (x - xbar);
                let join = beta1 * xbar.powf(PIECEWISE_POWER);
                if e < 600.0 {
                    (k * e.exp_m1() + join).ln()
                } else {
                    k.ln() + e + ((join / k - 1.0) * (-e).exp()).ln_1p()
                }
            }
            ImpactKind::Custom { ln_f: Some(g), .. } => g(x),
            _ => self.f(x).ln(),
        }
    }

    /// `ln F(e^ln_x)`. Closed form for power laws, where `x` may overflow.
    pub fn ln_f_at_ln(&self, ln_x: f64) -> f64 {
        match self.kind {
            ImpactKind::PowerLaw { beta, gamma } => beta.ln() + gamma * ln_x,
            _ => self.ln_f(ln_x.exp()),
        }
    }

    /// `F'(x)` for `x > 0`.
    pub fn fprime(&self, x: f64) -> f64 {
        match &self.kind {
            ImpactKind::PowerLaw { beta, gamma } => beta * gamma * x.powf(gamma - 1.0),
            ImpactKind::PiecewisePowerExp {
                beta1, gamma, xbar, ..
            } => {
                if x <= *xbar {
                    beta1 * PIECEWISE_POWER * x.powf(PIECEWISE_POWER - 1.0)
                } else {
                    self.piecewise_scale() * gamma * (gamma * (x - xbar)).exp()
                }
            }
            ImpactKind::Custom { fprime, .. } => fprime(x),
        }
    }

    /// Slope of the exponential branch at the knot divided by `gamma`.
    fn piecewise_scale(&self) -> f64 {
        match &self.kind {
            ImpactKind::PiecewisePowerExp {
                beta1, gamma, xbar, ..
            } => PIECEWISE_POWER * beta1 * xbar.powf(PIECEWISE_POWER - 1.0) / gamma,
            _ => unreachable!("only defined for the piecewise kind"),
        }
    }

    /// Speeds where `F''` jumps, so `G` has a kink.
    pub fn kinks(&self) -> Vec<f64> {
        match self.kind {
            ImpactKind::PiecewisePowerExp { xbar, .. } => vec![xbar],
            _ => Vec::new(),
        }
    }

    /// Running cost rate `x F(x)`.
    pub fn cost_rate(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x * self.f(x)
        }
    }

    /// `h(x) = x^2 F'(x)`, with `h(0) = 0`.
    pub fn impact_rate(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x * x * self.fprime(x)
        }
    }

    /// `ln h(x)` for `x > 0`.
    pub fn ln_impact_rate(&self, x: f64) -> f64 {
        match &self.kind {
            ImpactKind::PowerLaw { beta, gamma } => (beta * gamma).ln() + (gamma + 1.0) * x.ln(),
            ImpactKind::PiecewisePowerExp { gamma, xbar, .. } if x > *xbar => {
                2.0 * x.ln() + (self.piecewise_scale() * gamma).ln() + gamma * (x - xbar)
            }
            ImpactKind::Custom {
                ln_fprime: Some(g), ..
            } => 2.0 * x.ln() + g(x),
            _ => 2.0 * x.ln() + self.fprime(x).ln(),
        }
    }

    /// `G(u)`: the unique speed `x >= 0` with `x^2 F'(x) = u`.
    pub fn eval_g(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::domain("inverse impact G", format!("argument must be finite, got {u}")));
        }
        if u < 0.0 {
            return Err(Error::domain("inverse impact G", format!("argument must be >= 0, got {u}")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        if let ImpactKind::PowerLaw { beta, gamma } = self.kind {
            return Ok((u / (beta * gamma)).powf(1.0 / (gamma + 1.0)));
        }
        self.invert_rate(u.ln())
    }

    /// `G(exp(ln_u))`, usable when `u` itself is not representable.
    pub fn eval_g_ln(&self, ln_u: f64) -> Result<f64> {
        if ln_u.is_nan() || ln_u == f64::INFINITY {
            return Err(Error::domain("inverse impact G", format!("log-argument must be finite, got {ln_u}")));
        }
        if ln_u == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if let ImpactKind::PowerLaw { .. } = self.kind {
            return Ok(self.eval_ln_g(ln_u)?.exp());
        }
        self.invert_rate(ln_u)
    }

    /// `ln G(e^ln_u)`. Finite for power laws even where `G` itself overflows.
    pub fn eval_ln_g(&self, ln_u: f64) -> Result<f64> {
        if let ImpactKind::PowerLaw { beta, gamma } = self.kind {
            if ln_u.is_nan() || ln_u == f64::INFINITY {
                return Err(Error::domain("inverse impact G", format!("log-argument must be finite, got {ln_u}")));
            }
            return Ok((ln_u - (beta * gamma).ln()) / (gamma + 1.0));
        }
        Ok(self.eval_g_ln(ln_u)?.ln())
    }

    /// Gallops in `s = ln x` from `s = 0` to bracket `ln h(e^s) = ln u`, then
    /// refines with Brent. Overflowing rates are treated as lying above.
    fn invert_rate(&self, ln_u: f64) -> Result<f64> {
        let target = |s: f64| self.ln_impact_rate(s.exp()) - ln_u;
        let (mut lo, mut hi);
        let (mut t_lo, mut t_hi);
        let t0 = target(0.0);
        if t0 < 0.0 {
            lo = 0.0;
            t_lo = t0;
            let mut step = 1.0;
            loop {
                hi = lo + step;
                if hi > 709.0 {
                    return Err(Error::numerical(
                        "inverse impact G",
                        format!("x^2 F'(x) does not reach e^{ln_u}: impact rate looks bounded"),
                    ));
                }
                t_hi = target(hi);
                let mut halvings = 0;
                while !t_hi.is_finite() && halvings < 60 {
                    hi = 0.5 * (lo + hi);
                    t_hi = target(hi);
                    halvings += 1;
                }
                if t_hi.is_nan() {
                    return Err(Error::numerical("inverse impact G", format!("impact rate is NaN near x = e^{hi}")));
                }
                if t_hi >= 0.0 {
                    break;
                }
                lo = hi;
                t_lo = t_hi;
                step *= 2.0;
            }
        } else if t0 >= 0.0 {
            hi = 0.0;
            t_hi = t0;
            let mut step = 1.0;
            loop {
                lo = hi - step;
                if lo < -745.0 {
                    return Ok(0.0);
                }
                t_lo = target(lo);
                if t_lo.is_nan() {
                    return Err(Error::numerical("inverse impact G", format!("impact rate is NaN at x = e^{lo}")));
                }
                if t_lo < 0.0 {
                    break;
                }
                hi = lo;
                t_hi = t_lo;
                step *= 2.0;
            }
        } else {
            return Err(Error::numerical("inverse impact G", "impact rate is NaN at x = 1"));
        }
        let s = brent_root(target, lo, hi, t_lo, t_hi, 0.0, 1e-15)?;
        Ok(s.exp())
    }

    /// Checks the admissibility conditions for `F` on a strictly increasing
    /// positive grid of speeds.
    pub fn validate_assumptions(&self, grid: &[f64]) -> ValidationReport {
        let mut checks = Vec::new();
        let grid_ok = grid.len() >= 2
            && grid.iter().all(|x| *x > 0.0 && x.is_finite())
            && grid.windows(2).all(|w| w[1] > w[0]);
        if !grid_ok {
            checks.push(AssumptionCheck::fail(
                Condition::Grid,
                "grid must hold at least two strictly increasing positive speeds",
            ));
            return ValidationReport { checks };
        }

        let f0 = self.f(0.0);
        checks.push(AssumptionCheck::new(Condition::ZeroAtOrigin, f0 == 0.0, format!("F(0) = {f0}")));

        let values: Vec<f64> = grid.iter().map(|&x| self.f(x)).collect();
        let bad = grid
            .iter()
            .zip(&values)
            .find(|(_, v)| !(**v >= 0.0 && v.is_finite()));
        checks.push(match bad {
            Some((x, v)) => AssumptionCheck::fail(Condition::NonNegative, format!("F({x}) = {v}")),
            None => AssumptionCheck::pass(Condition::NonNegative),
        });

        // F(x0 10^-4k) must decrease towards F(0).
        let x0 = grid[0];
        let probe: Vec<f64> = (0..=10).map(|k| self.f(x0 * 10f64.powi(-4 * k))).collect();
        let monotone = probe.windows(2).all(|w| w[1] <= w[0]);
        let last = probe[probe.len() - 1];
        let continuous = monotone && (last <= 0.05 * probe[0].abs() || last.abs() <= 1e-12);
        checks.push(AssumptionCheck::new(
            Condition::ContinuousAtZero,
            continuous,
            format!("F({x0}) = {}, F({x0}e-40) = {last}", probe[0]),
        ));

        let mut convex = None;
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m = 0.5 * (a + b);
            let chord = 0.5 * (self.cost_rate(a) + self.cost_rate(b));
            if !(self.cost_rate(m) < chord) {
                convex = Some(format!("midpoint test fails on [{a}, {b}]"));
                break;
            }
        }
        checks.push(match convex {
            Some(d) => AssumptionCheck::fail(Condition::StrictlyConvexCost, d),
            None => AssumptionCheck::pass(Condition::StrictlyConvexCost),
        });

        let rates: Vec<f64> = grid.iter().map(|&x| self.impact_rate(x)).collect();
        let increasing = grid
            .windows(2)
            .zip(rates.windows(2))
            .find(|(_, r)| !(r[1] > r[0]))
            .map(|(x, r)| format!("h({}) = {} is not above h({}) = {}", x[1], r[1], x[0], r[0]));
        checks.push(match increasing {
            Some(d) => AssumptionCheck::fail(Condition::IncreasingImpactRate, d),
            None => AssumptionCheck::pass(Condition::IncreasingImpactRate),
        });

        // Local growth exponent of h over the last decade (or the last cell).
        let n = grid.len();
        let x_last = grid[n - 1];
        let j = grid.iter().rposition(|&x| x <= x_last / 10.0).unwrap_or(n - 2);
        let growth = (rates[n - 1] / rates[j]).ln() / (x_last / grid[j]).ln();
        checks.push(AssumptionCheck::new(
            Condition::UnboundedImpactRate,
            growth >= 0.1,
            format!("local growth exponent of x^2 F'(x) near {x_last} is {growth:.4}"),
        ));

        ValidationReport { checks }
    }
}

/// The individual admissibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Grid,
    ZeroAtOrigin,
    NonNegative,
    ContinuousAtZero,
    StrictlyConvexCost,
    IncreasingImpactRate,
    UnboundedImpactRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub condition: Condition,
    pub passed: bool,
    pub detail: String,
}

impl AssumptionCheck {
    fn new(condition: Condition, passed: bool, detail: impl Into<String>) -> Self {
        AssumptionCheck {
            condition,
            passed,
            detail: detail.into(),
        }
    }

    fn pass(condition: Condition) -> Self {
        Self::new(condition, true, "")
    }

    fn fail(condition: Condition, detail: impl Into<String>) -> Self {
        Self::new(condition, false, detail)
    }
}

/// Outcome of [`ImpactModel::validate_assumptions`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn passed(&self, condition: Condition) -> bool {
        self.checks
            .iter()
            .filter(|c| c.condition == condition)
            .all(|c| c.passed)
    }
}

/// Geometric grid of `n` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo * (step * i as f64).exp() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_power_law() -> ImpactModel {
        ImpactModel::power_law(4.7e-5, 0.6).unwrap()
    }

    fn cubic_rate() -> ImpactModel {
        ImpactModel::custom(|x| x * x, |x| 2.0 * x, Some(-1.0))
    }

    #[test]
    fn power_law_values() {
        let m = reference_power_law();
        assert_eq!(m.eval_f(0.0).unwrap(), 0.0);
        assert_relative_eq!(m.eval_f(1.0).unwrap(), 4.7e-5, max_relative = 1e-15);
        let lin = ImpactModel::power_law(2.0, 1.0).unwrap();
        assert_eq!(lin.eval_f(3.0).unwrap(), 6.0);
    }

    #[test]
    fn f_rejects_bad_speeds() {
        let m = reference_power_law();
        assert!(m.eval_f(-1.0).is_err());
        assert!(m.eval_f(f64::NAN).is_err());
        assert!(m.eval_f(f64::INFINITY).is_err());
    }

    #[test]
    fn g_special_values() {
        let m = reference_power_law();
        assert_eq!(m.eval_g(0.0).unwrap(), 0.0);
        assert_eq!(cubic_rate().eval_g(0.0).unwrap(), 0.0);
        // 2 x^3 = 16.
        assert_relative_eq!(cubic_rate().eval_g(16.0).unwrap(), 2.0, max_relative = 1e-13);
        assert!(m.eval_g(f64::NAN).is_err());
        assert!(m.eval_g(f64::INFINITY).is_err());
        assert!(m.eval_g(-1.0).is_err());
    }

    #[test]
    fn power_law_g_closed_form() {
        let (beta, gamma) = (4.7e-5, 0.6);
        let m = ImpactModel::power_law(beta, gamma).unwrap();
        for u in [1e-12, 1e-3, 1.0, 7.5, 1e9] {
            let expected = (u / (beta * gamma)).powf(1.0 / (gamma + 1.0));
            assert_relative_eq!(m.eval_g(u).unwrap(), expected, max_relative = 1e-15);
        }
    }

    #[test]
    fn closed_form_g_agrees_with_root_finder() {
        let (beta, gamma) = (4.7e-5, 0.6);
        let closed = ImpactModel::power_law(beta, gamma).unwrap();
        let generic = ImpactModel::custom(
            move |x: f64| beta * x.powf(gamma),
            move |x: f64| beta * gamma * x.powf(gamma - 1.0),
            None,
        );
        for u in log_grid(1e-20, 1e20, 41) {
            let a = closed.eval_g(u).unwrap();
            let b = generic.eval_g(u).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn g_in_log_space_beyond_overflow() {
        let m = reference_power_law();
        let ln_u = 1500.0;
        assert_eq!(m.eval_g_ln(ln_u).unwrap(), f64::INFINITY);
        let ln_g = m.eval_ln_g(ln_u).unwrap();
        assert_relative_eq!(ln_g, (ln_u - (4.7e-5f64 * 0.6).ln()) / 1.6, max_relative = 1e-14);
        assert_relative_eq!(m.eval_ln_g(40.0).unwrap(), m.eval_g(40f64.exp()).unwrap().ln(), max_relative = 1e-13);
        let pw = ImpactModel::piecewise_power_exp(4.7e-5, 1e-7, 1e-5, 1e5).unwrap();
        let x = pw.eval_g_ln(ln_u).unwrap();
        assert_relative_eq!(pw.ln_impact_rate(x), ln_u, max_relative = 1e-12);
        assert_eq!(m.eval_g_ln(f64::NEG_INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn piecewise_joins_smoothly() {
        let (beta1, beta2, gamma, xbar) = (4.7e-5, 2e-6, 3e-6, 4e5);
        let m = ImpactModel::piecewise_power_exp(beta1, beta2, gamma, xbar).unwrap();
        let ImpactKind::PiecewisePowerExp { xhat, .. } = *m.kind() else {
            unreachable!()
        };
        // Knot offset as given in closed form.
        let expected = ((3.0 * beta1 / (5.0 * beta2 * gamma)).ln() - 0.4 * xbar.ln()) / gamma;
        assert_relative_eq!(xhat, expected, max_relative = 1e-15);
        // Right branch written exactly as in the defining formula.
        let right = |x: f64| {
            beta2 * (gamma * (x - xbar + xhat)).exp() - beta2 * (gamma * xhat).exp() + beta1 * xbar.powf(0.6)
        };
        let right_slope = |x: f64| beta2 * gamma * (gamma * (x - xbar + xhat)).exp();
        assert_relative_eq!(right(xbar), beta1 * xbar.powf(0.6), max_relative = 1e-10);
        assert_relative_eq!(right_slope(xbar), 0.6 * beta1 * xbar.powf(-0.4), max_relative = 1e-10);
        let eps = xbar * 1e-12;
        assert_relative_eq!(m.f(xbar - eps), m.f(xbar + eps), max_relative = 1e-10);
        assert_relative_eq!(m.fprime(xbar - eps), m.fprime(xbar + eps), max_relative = 1e-10);
        assert_relative_eq!(m.f(2.0 * xbar), right(2.0 * xbar), max_relative = 1e-10);
        assert_eq!(m.asymptotic_p(), Some(0.4));
    }

    #[test]
    fn validation_accepts_reference_impact() {
        let m = reference_power_law();
        let report = m.validate_assumptions(&log_grid(1e-6, 1e6, 121));
        assert!(report.all_passed(), "{report:?}");
        let pw = ImpactModel::piecewise_power_exp(4.7e-5, 1e-7, 1e-5, 1e5).unwrap();
        assert!(pw.validate_assumptions(&log_grid(1e-6, 1e6, 121)).all_passed());
    }

    #[test]
    fn validation_accepts_square_root_impact() {
        // h(x) = x^1.5 / 2 grows without bound.
        let m = ImpactModel::custom(|x: f64| x.sqrt(), |x: f64| 0.5 / x.sqrt(), Some(0.5));
        let report = m.validate_assumptions(&log_grid(1e-6, 1e8, 50));
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn validation_rejects_negative_impact() {
        let m = ImpactModel::custom(|x: f64| -x, |_| -1.0, None);
        let report = m.validate_assumptions(&log_grid(1e-3, 1e3, 20));
        assert!(!report.all_passed());
        assert!(!report.passed(Condition::NonNegative));
    }

    #[test]
    fn validation_flags_bounded_rate_and_jump() {
        // h(x) = x^2 / (1 + x^2) * ... bounded: F'(x) = 1 / (1 + x^2).
        let bounded = ImpactModel::custom(|x: f64| x.atan(), |x: f64| 1.0 / (1.0 + x * x), None);
        let report = bounded.validate_assumptions(&log_grid(1e-3, 1e6, 40));
        assert!(!report.passed(Condition::UnboundedImpactRate));
        let jump = ImpactModel::custom(|x: f64| if x == 0.0 { 0.0 } else { 1.0 + x }, |_| 1.0, None);
        let report = jump.validate_assumptions(&log_grid(1e-3, 1e3, 40));
        assert!(!report.passed(Condition::ContinuousAtZero));
        let bad_grid = jump.validate_assumptions(&[1.0, 1.0]);
        assert!(!bad_grid.passed(Condition::Grid));
    }

    proptest! {
        #[test]
        fn g_inverts_impact_rate(exp in -8.0f64..6.0, which in 0usize..3) {
            let model = match which {
                0 => reference_power_law(),
                1 => ImpactModel::piecewise_power_exp(4.7e-5, 1e-7, 1e-5, 1e3).unwrap(),
                _ => cubic_rate(),
            };
            let x = 10f64.powf(exp);
            let back = model.eval_g(model.impact_rate(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-9 * (1.0 + x), "x = {x}, G(h(x)) = {back}");
        }

        #[test]
        fn g_is_strictly_increasing(a in -20.0f64..20.0, d in 0.01f64..5.0, which in 0usize..3) {
            let model = match which {
                0 => reference_power_law(),
                1 => ImpactModel::piecewise_power_exp(4.7e-5, 1e-7, 1e-5, 1e3).unwrap(),
                _ => cubic_rate(),
            };
            let (u1, u2) = (10f64.powf(a), 10f64.powf(a + d));
            prop_assert!(model.eval_g(u1).unwrap() < model.eval_g(u2).unwrap());
        }
    }
}
