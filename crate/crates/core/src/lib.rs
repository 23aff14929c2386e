//! Optimal liquidation for a CARA investor with a Lévy unaffected price.
//!
//! The investor sells `y0` shares at speed `xi`, paying an impact cost
//! `xi * F(xi)` per unit time. For exponential utility the optimal speed is a
//! deterministic feedback rule `xi*(y) = G(kappa_A(y) / A)`, where `G` inverts
//! `x^2 F'(x)` and `kappa_A(y) = kappa(-A y)` is the cumulant of the driving
//! process at the risk-adjusted argument.
//!
//! ```
//! use levy_liquidation::{ImpactModel, LevyModel, Solver};
//!
//! let impact = ImpactModel::power_law(1e-6, 0.6).unwrap();
//! let levy = LevyModel::brownian(-0.02, 2.0).unwrap();
//! let result = Solver::new(levy, impact, 1e-6).unwrap().solve(2e5).unwrap();
//! assert!(result.termination.tau().unwrap() > 0.0);
//! ```

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equivalence;
pub mod error;
pub mod impact;
pub mod levy;
pub mod oracle;
pub mod quad;
pub mod roots;
pub mod simulate;
pub mod solver;

pub use error::{Error, Result};
pub use impact::{ImpactKind, ImpactModel, ValidationReport};
pub use levy::{DriftSign, KappaFunction, LevyKind, LevyModel, VgParams};
pub use solver::{classify_termination, SolveConfig, SolveResult, Solver, TauClass, Termination, Trajectory};
pub use equivalence::{ImpactBridge, TrajectoryGap};
pub use oracle::{DiscreteProblem, MinimiseOptions, Minimum};
pub use simulate::{evaluate_strategies, evaluate_strategy, Estimate, SimConfig, SimReport};
