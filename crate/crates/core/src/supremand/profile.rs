use std::fmt;

use super::jet::{SupremandGradient, SymMatrix};
use super::Coercivity;

/// A profile `h(x, eta, p, S)` evaluated at `S = X^T X`.
///
/// Profiles must be strictly increasing along `t -> h(x, eta, p, t I)` for
/// `t >= 0`. The partial `d_hess` returned by [`Profile::partials`] is `h_S`.
pub trait Profile: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn value(&self, x: &[f64], eta: f64, p: &[f64], s: &SymMatrix) -> f64;

    fn partials(&self, x: &[f64], eta: f64, p: &[f64], s: &SymMatrix) -> SupremandGradient;

    fn lower_bound(&self) -> f64 {
        0.0
    }

    /// Growth constants of the composite `h(X^T X)` in dimension `n`.
    fn coercivity(&self, _n: usize) -> Option<Coercivity> {
        None
    }

    /// Whether `X -> h(X^T X)` has convex sublevel sets.
    fn level_convex_composite(&self) -> bool {
        false
    }

    /// Scalar form used by the 1D constructions, `S` a nonnegative number.
    fn value_1d(&self, x: f64, eta: f64, p: f64, s: f64) -> f64 {
        self.value(&[x], eta, &[p], &SymMatrix::scalar(s))
    }
}

fn unit_coercivity() -> Option<Coercivity> {
    Some(Coercivity {
        c1: 1.0,
        c2: 1.0,
        s: 0.0,
        t: 0.0,
    })
}

/// `h(S) = tr S`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityProfile;

impl Profile for IdentityProfile {
    fn name(&self) -> &str {
        "identity"
    }

    fn value(&self, _x: &[f64], _eta: f64, _p: &[f64], s: &SymMatrix) -> f64 {
        s.trace()
    }

    fn partials(&self, _x: &[f64], _eta: f64, _p: &[f64], s: &SymMatrix) -> SupremandGradient {
        SupremandGradient::hessian_only(SymMatrix::identity(s.dim()))
    }

    fn coercivity(&self, _n: usize) -> Option<Coercivity> {
        unit_coercivity()
    }

    fn level_convex_composite(&self) -> bool {
        true
    }
}

/// `h(S) = |S|^2`. Increasing along `t I` only for `t >= 0`, which is the
/// range `X^T X` lives in.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquareProfile;

impl Profile for SquareProfile {
    fn name(&self) -> &str {
        "square"
    }

    fn value(&self, _x: &[f64], _eta: f64, _p: &[f64], s: &SymMatrix) -> f64 {
        s.frobenius_norm_sq()
    }

    fn partials(&self, _x: &[f64], _eta: f64, _p: &[f64], s: &SymMatrix) -> SupremandGradient {
        SupremandGradient::hessian_only(s.scale(2.0))
    }

    fn coercivity(&self, _n: usize) -> Option<Coercivity> {
        // |X^2|^2 >= |X|^4 / n >= |X| - 1 for n <= 2
        unit_coercivity()
    }

    fn level_convex_composite(&self) -> bool {
        true
    }
}

/// `h(eta, S) = tr S (1 + eta^2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EtaWeighted;

impl Profile for EtaWeighted {
    fn name(&self) -> &str {
        "eta-weighted"
    }

    fn value(&self, _x: &[f64], eta: f64, _p: &[f64], s: &SymMatrix) -> f64 {
        s.trace() * (1.0 + eta * eta)
    }

    fn partials(&self, x: &[f64], eta: f64, _p: &[f64], s: &SymMatrix) -> SupremandGradient {
        let n = x.len();
        let mut g = SupremandGradient::hessian_only(SymMatrix::scaled_identity(n, 1.0 + eta * eta));
        g.d_eta = 2.0 * eta * s.trace();
        g
    }

    fn coercivity(&self, _n: usize) -> Option<Coercivity> {
        unit_coercivity()
    }

    fn level_convex_composite(&self) -> bool {
        true
    }
}

/// `h(p, S) = tr S (1 + |p|^2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SlopeWeighted;

impl Profile for SlopeWeighted {
    fn name(&self) -> &str {
        "slope-weighted"
    }

    fn value(&self, _x: &[f64], _eta: f64, p: &[f64], s: &SymMatrix) -> f64 {
        s.trace() * (1.0 + p.iter().map(|v| v * v).sum::<f64>())
    }

    fn partials(&self, x: &[f64], _eta: f64, p: &[f64], s: &SymMatrix) -> SupremandGradient {
        let n = x.len();
        let w = 1.0 + p.iter().map(|v| v * v).sum::<f64>();
        let mut g = SupremandGradient::hessian_only(SymMatrix::scaled_identity(n, w));
        let tr = s.trace();
        g.d_p = p.iter().map(|v| 2.0 * v * tr).collect();
        g
    }

    fn coercivity(&self, _n: usize) -> Option<Coercivity> {
        unit_coercivity()
    }

    fn level_convex_composite(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_forms() {
        assert_eq!(IdentityProfile.value_1d(0.0, 3.0, 2.0, 4.0), 4.0);
        assert_eq!(SquareProfile.value_1d(0.0, 0.0, 0.0, 4.0), 16.0);
        assert_eq!(EtaWeighted.value_1d(0.0, 1.0, 0.0, 1.0), 2.0);
        assert_eq!(SlopeWeighted.value_1d(0.0, 0.0, 2.0, 1.0), 5.0);
    }
}
