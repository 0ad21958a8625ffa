//! Supremands `H(x, eta, p, X)`: values, analytic partials and structural
//! metadata, plus the built-in instances used throughout the crate.
//!
//! Matrix norms are Frobenius everywhere, matching the `A : B` pairing used by
//! the Aronsson operator. Partials at non-smooth points are reported as
//! [`Error::NonDifferentiable`] instead of picking a subgradient.

mod builtins;
mod fd;
mod jet;
mod profile;
mod registry;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use builtins::{
    HCompose, LowerOrderExample, PureHessianNorm, SmoothedHessianNorm, SquaredHessian,
};
pub use fd::check_partials_fd;
pub use jet::{Jet2, SupremandGradient, SymMatrix};
pub use profile::{EtaWeighted, IdentityProfile, Profile, SlopeWeighted, SquareProfile};
pub use registry::{parse_profile, parse_supremand, SupremandSpec};

use crate::error::{Error, Result};

/// Constants of the growth bound `H >= C1 |X| - C2 (1 + |eta|^s + |p|^t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coercivity {
    pub c1: f64,
    pub c2: f64,
    pub s: f64,
    pub t: f64,
}

impl Coercivity {
    pub fn bound(&self, jet: &Jet2) -> f64 {
        let p_norm = jet.p.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.c1 * jet.hess.frobenius_norm()
            - self.c2 * (1.0 + jet.eta.abs().powf(self.s) + p_norm.powf(self.t))
    }
}

/// Structural metadata declared by the author of a supremand instance.
///
/// Nothing here is proven; the property suites validate it by sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupremandInfo {
    pub name: String,
    /// `m` with `H >= -m`.
    pub lower_bound: f64,
    pub coercivity: Option<Coercivity>,
    pub level_convex_in_hess: bool,
    /// Human-readable description of where `H` is C^1.
    pub smooth_region: String,
}

/// A supremand on `Omega x R x R^n x R^{n x n}_s`.
///
/// Implementors provide unchecked evaluation; callers normally go through
/// [`eval`] and [`partials`], which validate dimensions and finiteness.
pub trait Supremand: Send + Sync + fmt::Debug {
    fn info(&self) -> &SupremandInfo;

    fn dimension(&self) -> usize;

    fn value(&self, jet: &Jet2) -> f64;

    fn gradient(&self, jet: &Jet2) -> Result<SupremandGradient>;

    /// A C^1 surrogate with smoothing parameter `eps`, or `None` if `self` is
    /// already smooth everywhere.
    fn smoothed(&self, _eps: f64) -> Option<Arc<dyn Supremand>> {
        None
    }
}

fn check_dim(h: &dyn Supremand, jet: &Jet2) -> Result<()> {
    if jet.dim() != h.dimension() {
        return Err(Error::DimensionMismatch {
            expected: h.dimension(),
            got: jet.dim(),
        });
    }
    Ok(())
}

/// `H(jet)`.
pub fn eval(h: &dyn Supremand, jet: &Jet2) -> Result<f64> {
    check_dim(h, jet)?;
    let v = h.value(jet);
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "supremand `{}` is not finite at the given jet",
            h.info().name
        )));
    }
    Ok(v)
}

/// All four partials of `H` at `jet`.
pub fn partials(h: &dyn Supremand, jet: &Jet2) -> Result<SupremandGradient> {
    check_dim(h, jet)?;
    let g = h.gradient(jet)?;
    if !g.is_finite() {
        return Err(Error::NonDifferentiable {
            name: h.info().name.clone(),
            reason: "partials are not finite".into(),
        });
    }
    Ok(g)
}

/// Returns the smoothed surrogate if there is one, else `h` itself.
pub fn smooth_or_self(h: &Arc<dyn Supremand>, eps: f64) -> Arc<dyn Supremand> {
    h.smoothed(eps).unwrap_or_else(|| Arc::clone(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_mismatch_is_reported() {
        let h = SquaredHessian::new(2);
        let jet = Jet2::scalar(0.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            eval(&h, &jet),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(partials(&h, &jet).is_err());
    }
}
