use serde::{Deserialize, Serialize};

use super::hermite::{PiecewiseQuadratic1D, QuadraticPiece};
use crate::error::{Error, Result};

/// Minimizer of `||u''||_inf` under clamped data, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureMinimizer {
    /// Minimal value of `||u''||_inf`.
    pub s: f64,
    /// Curvature switch point; `None` for a single quadratic.
    pub c: Option<f64>,
    /// Sign of `u''` on the first piece (`+1` when `s = 0`).
    pub sigma: f64,
    pub solution: PiecewiseQuadratic1D,
}

impl PureMinimizer {
    pub fn pieces(&self) -> Vec<QuadraticPiece> {
        self.solution.pieces()
    }

    /// `{s, c, sigma, pieces}` as exported next to the sampled CSV.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "s": self.s,
            "c": self.c,
            "sigma": self.sigma,
            "pieces": self.pieces(),
        })
    }
}

/// Whether the data is matched by a single quadratic, up to rounding.
pub fn quadratic_compatible(a: f64, b: f64, va: f64, sa: f64, vb: f64, sb: f64) -> bool {
    let l = b - a;
    let d0 = vb - va - sa * l;
    let d1 = sb - sa;
    let scale = va.abs() + vb.abs() + (sa.abs() + sb.abs()) * l + f64::MIN_POSITIVE;
    (d0 - 0.5 * d1 * l).abs() <= 1e-13 * scale
}

/// Closed-form minimizer of `||u''||_inf` with `u(a) = A`, `u'(a) = A'`,
/// `u(b) = B`, `u'(b) = B'`.
///
/// Away from quadratic-compatible data the answer is `u'' = sigma s` on
/// `[a, c]` and `-sigma s` on `[c, b]`. With `L = b - a`, `D1 = B' - A'`,
/// `D0 = B - A - A' L` and `K = sigma s` the end conditions reduce to
/// `L^2 K^2 + (2 D1 L - 4 D0) K - D1^2 = 0`, whose larger-magnitude root is
/// the only one with `c` inside `[a, b]`.
pub fn absolute_minimizer_pure(
    a: f64,
    b: f64,
    va: f64,
    sa: f64,
    vb: f64,
    sb: f64,
) -> Result<PureMinimizer> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::DegenerateInterval { a, b });
    }
    let l = b - a;
    let d0 = vb - va - sa * l;
    let d1 = sb - sa;
    let single = |k: f64| -> Result<PureMinimizer> {
        Ok(PureMinimizer {
            s: k.abs(),
            c: None,
            sigma: if k < 0.0 { -1.0 } else { 1.0 },
            solution: PiecewiseQuadratic1D::new(vec![a, b], vec![k], va, sa)?,
        })
    };
    if quadratic_compatible(a, b, va, sa, vb, sb) {
        return single(d1 / l);
    }
    let lin = 2.0 * d1 * l - 4.0 * d0;
    let disc = (lin * lin + 4.0 * l * l * d1 * d1).sqrt();
    // lin != 0 here, otherwise the data would be quadratic-compatible
    let k = -(lin + lin.signum() * disc) / (2.0 * l * l);
    let c = a + 0.5 * l + d1 / (2.0 * k);
    let c = c.clamp(a, b);
    if c - a <= 1e-14 * l || b - c <= 1e-14 * l {
        return single(if c - a <= 1e-14 * l { -k } else { k });
    }
    Ok(PureMinimizer {
        s: k.abs(),
        c: Some(c),
        sigma: k.signum(),
        solution: PiecewiseQuadratic1D::new(vec![a, c, b], vec![k, -k], va, sa)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data() {
        let m = absolute_minimizer_pure(0.0, 1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(m.s, 0.0);
        assert_eq!(m.c, None);
    }

    #[test]
    fn single_jump_example() {
        let m = absolute_minimizer_pure(0.0, 1.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(m.s, 4.0);
        assert_eq!(m.c, Some(0.5));
        assert_eq!(m.sigma, 1.0);
    }

    #[test]
    fn quadratic_example() {
        let m = absolute_minimizer_pure(0.0, 1.0, 0.0, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(m.s, 2.0);
        assert_eq!(m.c, None);
    }

    #[test]
    fn end_conditions_hold() {
        let cases = [
            (0.0, 1.0, 0.3, -2.0, 1.7, 0.4),
            (-1.0, 2.0, 1.0, 1.0, -1.0, 3.0),
            (0.5, 0.7, 0.0, 10.0, 0.0, -10.0),
        ];
        for (a, b, va, sa, vb, sb) in cases {
            let m = absolute_minimizer_pure(a, b, va, sa, vb, sb).unwrap();
            let (u, du, _) = m.solution.eval(b);
            assert!((u - vb).abs() < 1e-12 * (1.0 + vb.abs()), "{u} vs {vb}");
            assert!((du - sb).abs() < 1e-12 * (1.0 + sb.abs()), "{du} vs {sb}");
        }
    }
}
