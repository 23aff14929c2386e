//! Brute-force minimisation of the deterministic liquidation objective
//! `J(Y) = int_0^T (kappa_A(Y_t) + A xi_t F(xi_t)) dt` over discretised,
//! non-increasing trajectories. Independent of the closed-form solver except
//! for the shared `kappa_A` and `F`.

use crate::error::{Error, Result};
use crate::impact::ImpactModel;
use crate::levy::KappaFunction;
use crate::roots::brent_minimize;
use crate::solver::{Solver, Termination};

/// Discretised objective on a uniform grid of `n_steps` steps over `[0, T]`.
#[derive(Clone, Debug)]
pub struct DiscreteProblem {
    kf: KappaFunction,
    impact: ImpactModel,
    y0: f64,
    horizon: f64,
    n_steps: usize,
}

/// Stopping rule of the coordinate descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimiseOptions {
    /// Stop when a sweep lowers the objective by less than this fraction.
    pub rel_decrease: f64,
    pub max_sweeps: usize,
    /// Try a Newton step every this many sweeps; 0 disables them.
    pub newton_every: usize,
}

impl Default for MinimiseOptions {
    fn default() -> Self {
        MinimiseOptions {
            rel_decrease: 1e-12,
            max_sweeps: 100_000,
            newton_every: 20,
        }
    }
}

/// Result of a minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub positions: Vec<f64>,
    pub value: f64,
    pub sweeps: usize,
    pub converged: bool,
}

impl DiscreteProblem {
    pub fn new(kf: KappaFunction, impact: ImpactModel, y0: f64, horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps < 2 {
            return Err(Error::domain("discrete problem", format!("need n_steps >= 2, got {n_steps}")));
        }
        if !(horizon > 0.0 && horizon.is_finite() && y0 >= 0.0 && y0.is_finite()) {
            return Err(Error::domain(
                "discrete problem",
                format!("need a positive horizon and y0 >= 0 (got T = {horizon}, y0 = {y0})"),
            ));
        }
        if y0 >= kf.domain_upper() {
            return Err(Error::PositionBound {
                y0,
                bound: kf.domain_upper(),
            });
        }
        Ok(DiscreteProblem {
            kf,
            impact,
            y0,
            horizon,
            n_steps,
        })
    }

    /// Problem matching a solver: horizon `tau` when finite, otherwise the
    /// time at which the closed-form position falls to `1e-3 y0`.
    pub fn for_solver(solver: &Solver, y0: f64, n_steps: usize) -> Result<Self> {
        let horizon = match solver.liquidation_time(y0)? {
            Termination::FiniteTau(t) => t,
            _ => solver
                .time_to_fraction(y0, 1.0 - 1e-3)?
                .expect("fractions below one have finite times"),
        };
        Self::new(solver.kappa().clone(), solver.impact().clone(), y0, horizon, n_steps)
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Same problem on a different grid.
    pub fn with_steps(&self, n_steps: usize) -> Result<Self> {
        Self::new(self.kf.clone(), self.impact.clone(), self.y0, self.horizon, n_steps)
    }

    fn check_positions(&self, positions: &[f64]) -> Result<()> {
        if positions.len() != self.n_steps + 1 {
            return Err(Error::domain(
                "discrete objective",
                format!("expected {} positions, got {}", self.n_steps + 1, positions.len()),
            ));
        }
        if positions[0] != self.y0 {
            return Err(Error::domain("discrete objective", "first position must equal y0"));
        }
        for (i, w) in positions.windows(2).enumerate() {
            if !(w[1] <= w[0]) {
                return Err(Error::domain("discrete objective", format!("positions increase at step {i}")));
            }
        }
        if !(positions[self.n_steps] >= 0.0) {
            return Err(Error::domain("discrete objective", "final position must be >= 0"));
        }
        Ok(())
    }

    /// Trapezoid rule on `kappa_A(Y)` plus the exact impact cost of the
    /// constant speed on each step.
    pub fn objective(&self, positions: &[f64]) -> Result<f64> {
        self.check_positions(positions)?;
        let dt = self.dt();
        let a = self.kf.risk_aversion();
        let mut risk = 0.0;
        let n = self.n_steps;
        for (i, y) in positions.iter().enumerate() {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            risk += w * self.kf.kappa(*y)?;
        }
        let cost: f64 = positions
            .windows(2)
            .map(|w| self.impact.cost_rate((w[0] - w[1]) / dt))
            .sum();
        Ok(dt * (risk + a * cost))
    }

    /// Objective as a function of position `i` alone, up to a constant.
    fn local(&self, positions: &[f64], i: usize, y: f64) -> f64 {
        let dt = self.dt();
        let a = self.kf.risk_aversion();
        let w = if i == self.n_steps { 0.5 } else { 1.0 };
        let k = self.kf.kappa(y).unwrap_or(f64::INFINITY);
        let mut v = w * k + a * self.impact.cost_rate((positions[i - 1] - y) / dt);
        if i < self.n_steps {
            v += a * self.impact.cost_rate((y - positions[i + 1]) / dt);
        }
        dt * v
    }

    /// Projected coordinate descent from a feasible `init`. Each position is
    /// minimised over `[Y_{i+1}, Y_{i-1}]` (the last over `[0, Y_{n-1}]`).
    pub fn minimise(&self, init: &[f64], opts: MinimiseOptions) -> Result<Minimum> {
        self.check_positions(init)?;
        let mut y = init.to_vec();
        let mut value = self.objective(&y)?;
        if self.y0 == 0.0 {
            return Ok(Minimum {
                positions: y,
                value,
                sweeps: 0,
                converged: true,
            });
        }
        let n = self.n_steps;
        for sweep in 1..=opts.max_sweeps {
            if opts.newton_every > 0 && sweep % opts.newton_every == 0 {
                if let Some((next, v)) = self.newton_step(&y, value)? {
                    y = next;
                    value = v;
                }
            }
            for i in 1..=n {
                let hi = y[i - 1];
                let lo = if i < n { y[i + 1] } else { 0.0 };
                if hi <= lo {
                    y[i] = hi;
                    continue;
                }
                let (best, _) = brent_minimize(|v| self.local(&y, i, v), lo, hi, 1e-13);
                y[i] = best.clamp(lo, hi);
            }
            if y.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::Invariant(format!("coordinate descent broke monotonicity in sweep {sweep}")));
            }
            let next = self.objective(&y)?;
            let decrease = value - next;
            value = next.min(value);
            if decrease <= opts.rel_decrease * value.abs() {
                return Ok(Minimum {
                    positions: y,
                    value,
                    sweeps: sweep,
                    converged: true,
                });
            }
        }
        Ok(Minimum {
            positions: y,
            value,
            sweeps: opts.max_sweeps,
            converged: false,
        })
    }

    /// One projected Newton step on the positions that are not at a bound,
    /// with derivatives of `kappa_A` by finite differences. Accepted only if
    /// it keeps the positions feasible and lowers the objective.
    fn newton_step(&self, y: &[f64], value: f64) -> Result<Option<(Vec<f64>, f64)>> {
        let n = self.n_steps;
        let dt = self.dt();
        let a = self.kf.risk_aversion();
        let free: Vec<bool> = (0..=n)
            .map(|i| i > 0 && y[i] > 0.0 && y[i] < y[i - 1] && (i == n || y[i] > y[i + 1]))
            .collect();
        if !free.iter().any(|f| *f) {
            return Ok(None);
        }
        let speeds: Vec<f64> = y.windows(2).map(|w| (w[0] - w[1]) / dt).collect();
        let c1 = |x: f64| self.impact.eval_f(x).map(|f| f + x * self.impact.fprime(x));
        let mut dc = Vec::with_capacity(n);
        let mut ddc = Vec::with_capacity(n);
        for &x in &speeds {
            dc.push(c1(x)?);
            let h = 1e-4 * x.max(f64::MIN_POSITIVE);
            ddc.push(if x > 0.0 { (c1(x + h)? - c1(x - h)?) / (2.0 * h) } else { 0.0 });
        }

        // Gradient and tridiagonal Hessian over the free positions.
        let mut g = vec![0.0; n + 1];
        let mut diag = vec![1.0; n + 1];
        let mut off = vec![0.0; n + 1];
        for i in 1..=n {
            if !free[i] {
                continue;
            }
            let w = if i == n { 0.5 } else { 1.0 };
            let h = 1e-4 * y[i];
            let k0 = self.kf.kappa(y[i])?;
            let (k1, k2) = if y[i] - h > 0.0 {
                let (lo, hi) = (self.kf.kappa(y[i] - h)?, self.kf.kappa(y[i] + h)?);
                ((hi - lo) / (2.0 * h), (hi - 2.0 * k0 + lo) / (h * h))
            } else {
                let (p1, p2) = (self.kf.kappa(y[i] + h)?, self.kf.kappa(y[i] + 2.0 * h)?);
                ((-3.0 * k0 + 4.0 * p1 - p2) / (2.0 * h), (k0 - 2.0 * p1 + p2) / (h * h))
            };
            g[i] = dt * w * k1 + a * dc[i - 1];
            diag[i] = dt * w * k2.max(0.0) + a / dt * ddc[i - 1];
            if i < n {
                g[i] -= a * dc[i];
                diag[i] += a / dt * ddc[i];
                if free[i + 1] {
                    off[i] = -a / dt * ddc[i];
                }
            }
            if !(diag[i] > 0.0 && diag[i].is_finite() && g[i].is_finite()) {
                return Ok(None);
            }
        }
        let step = match solve_tridiagonal(&diag, &off, &g) {
            Some(step) => step,
            None => return Ok(None),
        };

        let mut alpha = 1.0;
        for _ in 0..30 {
            let trial: Vec<f64> = (0..=n)
                .map(|i| if free[i] { y[i] - alpha * step[i] } else { y[i] })
                .collect();
            let feasible = trial.windows(2).all(|w| w[1] <= w[0]) && trial[n] >= 0.0;
            if feasible {
                let v = self.objective(&trial)?;
                if v < value {
                    return Ok(Some((trial, v)));
                }
            }
            alpha *= 0.5;
        }
        Ok(None)
    }

    /// Nested iteration: minimise on a coarse grid, interpolate to a grid
    /// twice as fine, and repeat up to `n_steps`. The coarsest grid has at
    /// least `coarsest` steps.
    pub fn minimise_multilevel(&self, coarsest: usize, opts: MinimiseOptions) -> Result<Minimum> {
        let mut levels = vec![self.n_steps];
        while levels.last().copied().unwrap_or(0) / 2 >= coarsest.max(2) && levels.last().unwrap() % 2 == 0 {
            let m = levels.last().unwrap() / 2;
            levels.push(m);
        }
        levels.reverse();
        let first = self.with_steps(levels[0])?;
        let mut current = first.minimise(&first.linear_start(), opts)?;
        let mut sweeps = current.sweeps;
        for &m in &levels[1..] {
            let level = self.with_steps(m)?;
            let init = refine(&current.positions);
            current = level.minimise(&init, opts)?;
            sweeps += current.sweeps;
        }
        current.sweeps = sweeps;
        Ok(current)
    }

    /// Linear liquidation over the horizon, a feasible starting point.
    pub fn linear_start(&self) -> Vec<f64> {
        let n = self.n_steps;
        (0..=n).map(|i| self.y0 * (1.0 - i as f64 / n as f64)).collect()
    }

    /// Samples a continuous-time trajectory on the grid.
    pub fn sample<F: Fn(f64) -> f64>(&self, position: F) -> Vec<f64> {
        let dt = self.dt();
        let mut y: Vec<f64> = (0..=self.n_steps).map(|i| position(i as f64 * dt)).collect();
        y[0] = self.y0;
        y
    }
}

/// Solves the symmetric tridiagonal system with diagonal `diag` and
/// off-diagonal `off[i]` between rows `i` and `i + 1`.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut prev_c = 0.0;
    let mut prev_d = 0.0;
    for i in 0..n {
        let lower = if i > 0 { off[i - 1] } else { 0.0 };
        let m = diag[i] - lower * prev_c;
        if !(m.abs() > 0.0 && m.is_finite()) {
            return None;
        }
        c[i] = off[i] / m;
        d[i] = (rhs[i] - lower * prev_d) / m;
        prev_c = c[i];
        prev_d = d[i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = d[i] - if i + 1 < n { c[i] * x[i + 1] } else { 0.0 };
    }
    Some(x)
}

/// Doubles the resolution of a grid function by linear interpolation.
fn refine(coarse: &[f64]) -> Vec<f64> {
    let mut fine = Vec::with_capacity(2 * coarse.len() - 1);
    for w in coarse.windows(2) {
        fine.push(w[0]);
        fine.push(0.5 * (w[0] + w[1]));
    }
    fine.push(*coarse.last().expect("non-empty"));
    fine
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyModel;
    use approx::assert_relative_eq;

    fn linear_martingale() -> Solver {
        let levy = LevyModel::brownian(0.0, 0.02).unwrap();
        Solver::new(levy, ImpactModel::power_law(4.7e-5, 1.0).unwrap(), 1e-5).unwrap()
    }

    #[test]
    fn zero_position() {
        let s = linear_martingale();
        let p = DiscreteProblem::new(s.kappa().clone(), s.impact().clone(), 0.0, 1.0, 8).unwrap();
        let zero = vec![0.0; 9];
        assert_eq!(p.objective(&zero).unwrap(), 0.0);
        let m = p.minimise(&zero, MinimiseOptions::default()).unwrap();
        assert_eq!(m.value, 0.0);
        assert!(m.positions.iter().all(|y| *y == 0.0));
    }

    #[test]
    fn one_step_sale() {
        let s = linear_martingale();
        let (y0, t, n) = (100.0, 1.0, 10);
        let p = DiscreteProblem::new(s.kappa().clone(), s.impact().clone(), y0, t, n).unwrap();
        let mut y = vec![0.0; n + 1];
        y[0] = y0;
        let dt = t / n as f64;
        let xi = y0 / dt;
        let expected = 0.5 * s.kappa().kappa(y0).unwrap() * dt + 1e-5 * xi * 4.7e-5 * xi * dt;
        assert_relative_eq!(p.objective(&y).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn rejects_infeasible_positions() {
        let s = linear_martingale();
        let p = DiscreteProblem::new(s.kappa().clone(), s.impact().clone(), 10.0, 1.0, 2).unwrap();
        assert!(p.objective(&[10.0, 11.0, 0.0]).is_err());
        assert!(p.objective(&[9.0, 1.0, 0.0]).is_err());
        assert!(p.objective(&[10.0, 1.0]).is_err());
    }

    #[test]
    fn tridiagonal_solve() {
        let x = solve_tridiagonal(&[2.0, 2.0, 2.0], &[-1.0, -1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap();
        for (got, want) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn refine_interpolates() {
        assert_eq!(refine(&[4.0, 2.0, 0.0]), vec![4.0, 3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn small_problem_matches_value_function() {
        let s = linear_martingale();
        let y0 = 1e3;
        let p = DiscreteProblem::for_solver(&s, y0, 256).unwrap();
        let m = p.minimise_multilevel(16, MinimiseOptions::default()).unwrap();
        assert!(m.converged);
        let v = s.value_function(y0).unwrap();
        assert_relative_eq!(m.value, v, max_relative = 1e-2);
    }
}
