//! Exact 1D constructions and minimality certification: cubic Hermite
//! interpolation, the closed-form minimizer of `||u''||_inf`, radial bumps,
//! randomized absolute-minimality tests and argmax linearization checks.

mod bump;
mod danskin;
mod hermite;
mod minimality;
mod pure;

pub use bump::{radial_bump, zeta, ZETA};
pub use danskin::{danskin_check, danskin_trials, DanskinSummary, DanskinValues};
pub use hermite::{cubic_hermite, CubicPolynomial, PiecewiseQuadratic1D, QuadraticPiece};
pub use minimality::{
    check_absolute_minimality, check_absolute_minimality_with, trial_seed, MinimalityOptions,
    MinimalityReport, PerturbationFamily, Violation,
};
pub use pure::{absolute_minimizer_pure, quadratic_compatible, PureMinimizer};
