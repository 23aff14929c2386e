//! Monte-Carlo evaluation of deterministic liquidation strategies.
//!
//! Each path uses its own ChaCha stream selected by the path index, so results
//! do not depend on the number of worker threads. Per-path outputs are
//! collected in path order and reduced sequentially.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::impact::ImpactModel;
use crate::levy::{KappaFunction, LevyKind, LevyModel, VgParams};
use crate::solver::Trajectory;

/// Below this value of `ln(U) / shape` the gamma increment is treated as zero;
/// the resulting log-price move is far below `f64` resolution of a step.
const LN_GAMMA_CUTOFF: f64 = -800.0;

fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on `(0, 1]`.
fn open_uniform<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Gamma(shape, 1) for `shape >= 1` by Marsaglia and Tsang's squeeze method.
fn gamma_mt<R: Rng>(rng: &mut R, shape: f64) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_uniform(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// `ln` of a Gamma(shape, 1) draw, valid for any `shape > 0`. Small shapes use
/// `G(a) = G(a + 1) U^(1/a)`, returned in log form because `U^(1/a)` underflows.
/// Returns `None` when the draw is below `exp(LN_GAMMA_CUTOFF)`.
pub fn ln_gamma_sample<R: Rng>(rng: &mut R, shape: f64) -> Option<f64> {
    if shape >= 1.0 {
        return Some(gamma_mt(rng, shape).ln());
    }
    let ln_boost = open_uniform(rng).ln() / shape;
    if ln_boost < LN_GAMMA_CUTOFF {
        return None;
    }
    Some(gamma_mt(rng, shape + 1.0).ln() + ln_boost)
}

/// Draws of the one-step increment `Delta L` (price units).
#[derive(Debug, Clone, Copy)]
pub enum IncrementSampler {
    Brownian {
        mean: f64,
        sd: f64,
    },
    VarianceGamma {
        vg: VgParams,
        shape: f64,
        s_tilde: f64,
        /// `m dt - (exp(dt kappa(1)) - 1)`: makes every step exactly centred.
        centre: f64,
    },
}

impl IncrementSampler {
    pub fn new(model: &LevyModel, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidModel(format!("time step must be positive, got {dt}")));
        }
        match *model.kind() {
            LevyKind::BrownianLinear { mu, sigma } => Ok(IncrementSampler::Brownian {
                mean: mu * dt,
                sd: sigma * dt.sqrt(),
            }),
            LevyKind::VgExponentialLinearised { vg, s_tilde } => {
                let k1 = vg.kappa_tilde(1.0)?;
                Ok(IncrementSampler::VarianceGamma {
                    vg,
                    shape: dt / vg.eta,
                    s_tilde,
                    centre: k1 * dt - (dt * k1).exp_m1(),
                })
            }
            LevyKind::GenericTriplet { .. } => Err(Error::InvalidModel(
                "simulation supports Brownian and linearised variance-gamma models".into(),
            )),
        }
    }

    /// One increment and its antithetic partner (normal draw negated).
    pub fn sample_pair<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        match *self {
            IncrementSampler::Brownian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                (mean + sd * z, mean - sd * z)
            }
            IncrementSampler::VarianceGamma {
                vg,
                shape,
                s_tilde,
                centre,
            } => match ln_gamma_sample(rng, shape) {
                None => (s_tilde * centre, s_tilde * centre),
                Some(ln_g) => {
                    let g = vg.eta * ln_g.exp();
                    let z: f64 = rng.sample(StandardNormal);
                    let (drift, diffusion) = (vg.theta * g, vg.rho * g.sqrt() * z);
                    (
                        s_tilde * (centre + (drift + diffusion).exp_m1()),
                        s_tilde * (centre + (drift - diffusion).exp_m1()),
                    )
                }
            },
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.sample_pair(rng).0
    }
}

/// Increments of `n_paths` paths with `n_steps` steps each, path-major.
pub fn simulate_paths(model: &LevyModel, dt: f64, n_steps: usize, n_paths: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sampler = IncrementSampler::new(model, dt)?;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p as u64);
            (0..n_steps).map(|_| sampler.sample(&mut rng)).collect()
        })
        .collect())
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `|value - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Sample mean and variance of `L_T / price_scale` with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalMoments {
    pub mean: Estimate,
    pub variance: Estimate,
    pub n_paths: usize,
}

/// Simulates the terminal value of the return process `L / price_scale` at
/// `horizon` without storing paths.
pub fn terminal_moments(model: &LevyModel, horizon: f64, dt: f64, n_paths: usize, seed: u64) -> Result<TerminalMoments> {
    if n_paths < 2 {
        return Err(Error::InvalidModel("need at least two paths".into()));
    }
    let sampler = IncrementSampler::new(model, dt)?;
    let n_steps = (horizon / dt).round() as usize;
    let scale = model.price_scale();
    let values: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p as u64);
            let mut sum = 0.0;
            for _ in 0..n_steps {
                sum += sampler.sample(&mut rng);
            }
            sum / scale
        })
        .collect();
    let n = n_paths as f64;
    let mean = values.iter().sum::<f64>() / n;
    let centred: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = centred.iter().sum::<f64>() / (n - 1.0);
    let m4 = centred.iter().map(|c| c * c).sum::<f64>() / n;
    Ok(TerminalMoments {
        mean: Estimate {
            value: mean,
            std_error: (var / n).sqrt(),
        },
        variance: Estimate {
            value: var,
            std_error: ((m4 - var * var).max(0.0) / n).sqrt(),
        },
        n_paths,
    })
}

/// Inputs of a strategy evaluation.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub model: LevyModel,
    pub impact: ImpactModel,
    pub strategy: Trajectory,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub c0: f64,
    pub s0: f64,
    /// Permanent impact coefficient.
    pub alpha: f64,
    pub risk_aversion: f64,
    /// Pair every path with its mirror image in the normal draws.
    pub antithetic: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidModel(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_paths < 2 || (self.antithetic && !self.n_paths.is_multiple_of(2)) {
            return Err(Error::InvalidModel(format!(
                "n_paths must be at least 2 (and even with antithetic pairs), got {}",
                self.n_paths
            )));
        }
        if !(self.alpha >= 0.0 && self.risk_aversion > 0.0) {
            return Err(Error::InvalidModel("need alpha >= 0 and risk aversion > 0".into()));
        }
        self.strategy.check_invariants()
    }
}

/// A strategy sampled on the simulation grid `t_i = i dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStrategy {
    /// `Y(t_i)` for `i = 0..=n_steps`.
    pub positions: Vec<f64>,
    pub dt: f64,
    /// `sum_i xi_i F(xi_i) dt` with `xi_i = (Y_i - Y_{i+1}) / dt`.
    pub impact_cost: f64,
}

impl DiscreteStrategy {
    /// Samples `strategy` on `n_steps` steps of length `dt`.
    pub fn new(strategy: &Trajectory, impact: &ImpactModel, dt: f64, n_steps: usize) -> Result<Self> {
        let positions: Vec<f64> = (0..=n_steps).map(|i| strategy.position_at(i as f64 * dt)).collect();
        let mut impact_cost = 0.0;
        for w in positions.windows(2) {
            let xi = (w[0] - w[1]) / dt;
            impact_cost += impact.cost_rate(xi) * dt;
        }
        if !impact_cost.is_finite() {
            return Err(Error::numerical("strategy cost", "impact cost is not finite on this grid"));
        }
        Ok(DiscreteStrategy {
            positions,
            dt,
            impact_cost,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn y0(&self) -> f64 {
        self.positions[0]
    }

    /// Number of steps needed to cover a trajectory's horizon.
    pub fn steps_for(strategy: &Trajectory, dt: f64) -> usize {
        ((strategy.horizon() / dt).ceil() as usize).max(1)
    }
}

/// Terminal cash `c0 + s0 y0 - alpha y0^2 / 2 + sum Y_i dL_i - impact cost`.
pub fn terminal_cash(cfg: &SimConfig, strategy: &DiscreteStrategy, increments: &[f64]) -> Result<f64> {
    if increments.len() != strategy.n_steps() {
        return Err(Error::domain(
            "terminal cash",
            format!("{} increments for a {}-step strategy", increments.len(), strategy.n_steps()),
        ));
    }
    let gains: f64 = strategy.positions.iter().zip(increments).map(|(y, dl)| y * dl).sum();
    Ok(initial_wealth(cfg, strategy.y0()) + gains - strategy.impact_cost)
}

fn initial_wealth(cfg: &SimConfig, y0: f64) -> f64 {
    cfg.c0 + cfg.s0 * y0 - 0.5 * cfg.alpha * y0 * y0
}

/// Certainty equivalent of a Gaussian terminal cash: `E[C] - A Var[C] / 2`,
/// with the moments of the discretised strategy under a Brownian model.
pub fn gaussian_certainty_equivalent(cfg: &SimConfig, strategy: &DiscreteStrategy) -> Result<f64> {
    let LevyKind::BrownianLinear { mu, sigma } = *cfg.model.kind() else {
        return Err(Error::InvalidModel("closed form needs a Brownian model".into()));
    };
    let ys = &strategy.positions[..strategy.n_steps()];
    let first: f64 = ys.iter().sum::<f64>() * strategy.dt;
    let second: f64 = ys.iter().map(|y| y * y).sum::<f64>() * strategy.dt;
    let mean = initial_wealth(cfg, strategy.y0()) - strategy.impact_cost + mu * first;
    Ok(mean - 0.5 * cfg.risk_aversion * sigma * sigma * second)
}

/// `int (kappa_A(Y) + A mu Y - A^2 v Y^2 / 2) dt` on the strategy grid, with
/// `v` the variance rate of `L`: the part of the exponential-utility penalty
/// not captured by mean and variance. Zero for Brownian models.
pub fn jump_correction(kf: &KappaFunction, strategy: &DiscreteStrategy) -> Result<f64> {
    let model = kf.model();
    let a = kf.risk_aversion();
    let variance_rate = match *model.kind() {
        LevyKind::BrownianLinear { .. } => return Ok(0.0),
        LevyKind::VgExponentialLinearised { vg, s_tilde } => {
            s_tilde * s_tilde * (vg.kappa_tilde(2.0)? - 2.0 * vg.kappa_tilde(1.0)?)
        }
        LevyKind::GenericTriplet { .. } => {
            return Err(Error::InvalidModel("jump correction needs a simulated model".into()))
        }
    };
    let mu = model.drift();
    let mut total = 0.0;
    for y in &strategy.positions[..strategy.n_steps()] {
        total += (kf.kappa(*y)? + a * mu * y - 0.5 * a * a * variance_rate * y * y) * strategy.dt;
    }
    Ok(total)
}

/// Monte-Carlo estimates for one strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimReport {
    pub mean_cash: Estimate,
    pub var_cash: Estimate,
    /// `E[-exp(-A C)]`; may underflow, see `ln_neg_expected_utility`.
    pub expected_utility: Estimate,
    pub ln_neg_expected_utility: f64,
    /// `-ln(-E[U]) / A`.
    pub certainty_equivalent: Estimate,
    /// `E[C] - A Var[C] / 2`.
    pub mean_variance_score: Estimate,
    pub n_paths: usize,
    pub n_steps: usize,
}

/// Reports for several strategies on common random numbers, with paired
/// certainty-equivalent differences relative to the first strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub reports: Vec<SimReport>,
    /// `CE[0] - CE[k]` for every `k` (the first entry is zero).
    pub ce_advantage: Vec<Estimate>,
}

/// Evaluates `cfg.strategy`.
pub fn evaluate_strategy(cfg: &SimConfig) -> Result<SimReport> {
    Ok(evaluate_strategies(cfg, std::slice::from_ref(&cfg.strategy))?.reports[0])
}

/// Evaluates several strategies on the same simulated paths.
pub fn evaluate_strategies(cfg: &SimConfig, strategies: &[Trajectory]) -> Result<Comparison> {
    cfg.validate()?;
    if strategies.is_empty() {
        return Err(Error::InvalidModel("no strategy to evaluate".into()));
    }
    let sampler = IncrementSampler::new(&cfg.model, cfg.dt)?;
    let n_steps = strategies
        .iter()
        .map(|s| DiscreteStrategy::steps_for(s, cfg.dt))
        .max()
        .expect("non-empty");
    let discrete = strategies
        .iter()
        .map(|s| DiscreteStrategy::new(s, &cfg.impact, cfg.dt, n_steps))
        .collect::<Result<Vec<_>>>()?;
    let k = discrete.len();
    let units = if cfg.antithetic { cfg.n_paths / 2 } else { cfg.n_paths };

    // Path gains sum Y_i dL_i per strategy; antithetic units carry two paths.
    let gains: Vec<Vec<f64>> = (0..units)
        .into_par_iter()
        .map(|u| {
            let mut rng = path_rng(cfg.seed, u as u64);
            let mut g = vec![0.0; 2 * k];
            for i in 0..n_steps {
                let (dl, dl_mirror) = sampler.sample_pair(&mut rng);
                for (j, d) in discrete.iter().enumerate() {
                    let y = d.positions[i];
                    g[j] += y * dl;
                    g[k + j] += y * dl_mirror;
                }
            }
            g
        })
        .collect();

    let cash = |unit: &Vec<f64>, j: usize, mirror: bool| {
        let d = &discrete[j];
        initial_wealth(cfg, d.y0()) - d.impact_cost + unit[if mirror { k + j } else { j }]
    };
    let per_unit = |j: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        gains
            .iter()
            .map(|g| {
                if cfg.antithetic {
                    0.5 * (f(cash(g, j, false)) + f(cash(g, j, true)))
                } else {
                    f(cash(g, j, false))
                }
            })
            .collect()
    };

    let a = cfg.risk_aversion;
    let mut reports = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for j in 0..k {
        let means = per_unit(j, &|c| c);
        let m = mean(&means);
        let sq = per_unit(j, &|c| (c - m) * (c - m));
        let var = mean(&sq);
        let shift = gains
            .iter()
            .flat_map(|g| {
                let mirror = if cfg.antithetic { Some(-a * cash(g, j, true)) } else { None };
                std::iter::once(-a * cash(g, j, false)).chain(mirror)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let w = per_unit(j, &|c| (-a * c - shift).exp());
        let w_mean = mean(&w);
        let w_se = std_error(&w);
        let ln_neg_eu = shift + w_mean.ln();
        let score: Vec<f64> = means
            .iter()
            .zip(&sq)
            .map(|(c, s)| c - 0.5 * a * (s - var))
            .collect();
        reports.push(SimReport {
            mean_cash: Estimate {
                value: m,
                std_error: std_error(&means),
            },
            var_cash: Estimate {
                value: var,
                std_error: std_error(&sq),
            },
            expected_utility: Estimate {
                value: -ln_neg_eu.exp(),
                std_error: w_se * shift.exp(),
            },
            ln_neg_expected_utility: ln_neg_eu,
            certainty_equivalent: Estimate {
                value: -ln_neg_eu / a,
                std_error: w_se / (a * w_mean),
            },
            mean_variance_score: Estimate {
                value: m - 0.5 * a * var,
                std_error: std_error(&score),
            },
            n_paths: cfg.n_paths,
            n_steps,
        });
        weights.push((w, w_mean));
    }

    // Delta method for CE[0] - CE[j] = (ln m_j - ln m_0) / A plus constant shifts.
    let (w0, m0) = &weights[0];
    let n = w0.len() as f64;
    let ce_advantage = weights
        .iter()
        .zip(&reports)
        .map(|((wj, mj), rj)| {
            let infl: Vec<f64> = w0.iter().zip(wj).map(|(x, y)| (y / mj - x / m0) / a).collect();
            let value = reports[0].certainty_equivalent.value - rj.certainty_equivalent.value;
            Estimate {
                value,
                std_error: (variance(&infl) / n).sqrt(),
            }
        })
        .collect();
    Ok(Comparison { reports, ce_advantage })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn std_error(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Solver;
    use approx::assert_relative_eq;

    fn twap(y0: f64, horizon: f64) -> Trajectory {
        Trajectory {
            times: vec![0.0, horizon],
            positions: vec![y0, 0.0],
            speeds: vec![y0 / horizon, y0 / horizon],
            tau: Some(horizon),
            truncated: false,
        }
    }

    fn config(model: LevyModel, strategy: Trajectory) -> SimConfig {
        SimConfig {
            model,
            impact: ImpactModel::power_law(4.7e-5, 0.6).unwrap(),
            strategy,
            n_paths: 2000,
            dt: 1e-3,
            seed: 7,
            c0: 10.0,
            s0: 100.0,
            alpha: 0.0,
            risk_aversion: 1e-5,
            antithetic: false,
        }
    }

    #[test]
    fn gamma_sampler_moments() {
        let mut rng = path_rng(1, 0);
        for shape in [0.3, 1.0, 4.5] {
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| ln_gamma_sample(&mut rng, shape).map_or(0.0, f64::exp)).collect();
            let m = mean(&xs);
            let v = variance(&xs);
            assert!((m - shape).abs() < 4.0 * (shape / n as f64).sqrt(), "shape {shape}: mean {m}");
            assert!((v / shape - 1.0).abs() < 0.03, "shape {shape}: var {v}");
        }
    }

    #[test]
    fn tiny_shape_gamma_mean() {
        // Mean of Gamma(a) is a; most draws vanish below the cutoff.
        let mut rng = path_rng(2, 0);
        let a = 1e-3;
        let n = 400_000;
        let s: f64 = (0..n).map(|_| ln_gamma_sample(&mut rng, a).map_or(0.0, f64::exp)).sum();
        let se = (a / n as f64).sqrt();
        assert!((s / n as f64 - a).abs() < 4.0 * se);
    }

    #[test]
    fn zero_path_twap_cash() {
        let (y0, horizon) = (1000.0, 0.5);
        let cfg = config(LevyModel::brownian(0.0, 1.0).unwrap(), twap(y0, horizon));
        let d = DiscreteStrategy::new(&cfg.strategy, &cfg.impact, 1e-3, 500).unwrap();
        let cash = terminal_cash(&cfg, &d, &vec![0.0; 500]).unwrap();
        let x = y0 / horizon;
        let expected = 10.0 + 100.0 * y0 - horizon * x * 4.7e-5 * x.powf(0.6);
        assert_relative_eq!(cash, expected, max_relative = 1e-9);
        assert!(terminal_cash(&cfg, &d, &[0.0; 3]).is_err());
    }

    #[test]
    fn empty_position_keeps_cash() {
        let cfg = config(LevyModel::brownian(0.0, 1.0).unwrap(), Trajectory::zero());
        let d = DiscreteStrategy::new(&cfg.strategy, &cfg.impact, 1e-3, 10).unwrap();
        assert_eq!(terminal_cash(&cfg, &d, &[0.3; 10]).unwrap(), cfg.c0);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let cfg = config(LevyModel::brownian(-0.1, 2.0).unwrap(), twap(1e3, 0.2));
        assert_eq!(evaluate_strategy(&cfg).unwrap(), evaluate_strategy(&cfg).unwrap());
        let p1 = simulate_paths(&cfg.model, 1e-3, 5, 3, 9).unwrap();
        assert_eq!(p1, simulate_paths(&cfg.model, 1e-3, 5, 3, 9).unwrap());
    }

    #[test]
    fn permanent_impact_does_not_change_ranking() {
        let model = LevyModel::brownian(-0.1, 2.0).unwrap();
        let strategies = [twap(1e3, 0.2), twap(1e3, 0.05)];
        let mut cfg = config(model, strategies[0].clone());
        let base = evaluate_strategies(&cfg, &strategies).unwrap();
        cfg.alpha = 0.01;
        let shifted = evaluate_strategies(&cfg, &strategies).unwrap();
        let order = |c: &Comparison| c.reports[0].certainty_equivalent.value > c.reports[1].certainty_equivalent.value;
        assert_eq!(order(&base), order(&shifted));
    }

    #[test]
    fn antithetic_pairs_reduce_variance() {
        let model = LevyModel::brownian(-0.1, 2.0).unwrap();
        let mut cfg = config(model, twap(1e3, 0.2));
        let plain = evaluate_strategy(&cfg).unwrap();
        cfg.antithetic = true;
        let anti = evaluate_strategy(&cfg).unwrap();
        let ratio = (anti.mean_cash.std_error / plain.mean_cash.std_error).powi(2);
        assert!(ratio < 0.7, "variance ratio {ratio}");
    }

    #[test]
    fn brownian_certainty_equivalent_matches_closed_form() {
        let model = LevyModel::brownian(-0.2, 2.0).unwrap();
        let solver = Solver::new(model.clone(), ImpactModel::power_law(4.7e-5, 0.6).unwrap(), 1e-5).unwrap();
        let traj = solver.trajectory(1e4).unwrap();
        let mut cfg = config(model, traj);
        cfg.n_paths = 20_000;
        let report = evaluate_strategy(&cfg).unwrap();
        let n = DiscreteStrategy::steps_for(&cfg.strategy, cfg.dt);
        let d = DiscreteStrategy::new(&cfg.strategy, &cfg.impact, cfg.dt, n).unwrap();
        let exact = gaussian_certainty_equivalent(&cfg, &d).unwrap();
        assert!(report.certainty_equivalent.within(exact, 3.0), "{report:?} vs {exact}");
    }
}
