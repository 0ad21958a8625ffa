use std::sync::Arc;

use super::jet::{Jet2, SupremandGradient, SymMatrix};
use super::profile::Profile;
use super::{Coercivity, Supremand, SupremandInfo};
use crate::error::{Error, Result};

/// `H(X) = |X|`.
#[derive(Debug, Clone)]
pub struct PureHessianNorm {
    n: usize,
    info: SupremandInfo,
}

impl PureHessianNorm {
    pub fn new(n: usize) -> Self {
        PureHessianNorm {
            n,
            info: SupremandInfo {
                name: "pure-hessian-norm".into(),
                lower_bound: 0.0,
                coercivity: Some(Coercivity {
                    c1: 1.0,
                    c2: 1.0,
                    s: 0.0,
                    t: 0.0,
                }),
                level_convex_in_hess: true,
                smooth_region: "X != 0".into(),
            },
        }
    }
}

impl Supremand for PureHessianNorm {
    fn info(&self) -> &SupremandInfo {
        &self.info
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn value(&self, jet: &Jet2) -> f64 {
        jet.hess.frobenius_norm()
    }

    fn gradient(&self, jet: &Jet2) -> Result<SupremandGradient> {
        let norm = jet.hess.frobenius_norm();
        if norm == 0.0 {
            return Err(Error::NonDifferentiable {
                name: self.info.name.clone(),
                reason: "|X| is not differentiable at X = 0".into(),
            });
        }
        Ok(SupremandGradient::hessian_only(jet.hess.scale(1.0 / norm)))
    }

    fn smoothed(&self, eps: f64) -> Option<Arc<dyn Supremand>> {
        Some(Arc::new(SmoothedHessianNorm::new(self.n, eps)))
    }
}

/// `H(X) = sqrt(|X|^2 + eps^2) - eps`.
#[derive(Debug, Clone)]
pub struct SmoothedHessianNorm {
    n: usize,
    eps: f64,
    info: SupremandInfo,
}

impl SmoothedHessianNorm {
    pub fn new(n: usize, eps: f64) -> Self {
        assert!(eps > 0.0, "smoothing parameter must be positive");
        SmoothedHessianNorm {
            n,
            eps,
            info: SupremandInfo {
                name: format!("smoothed-hessian-norm:eps={eps}"),
                lower_bound: 0.0,
                // sqrt(|X|^2 + eps^2) - eps >= |X| - eps
                coercivity: Some(Coercivity {
                    c1: 1.0,
                    c2: eps,
                    s: 0.0,
                    t: 0.0,
                }),
                level_convex_in_hess: true,
                smooth_region: "everywhere".into(),
            },
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl Supremand for SmoothedHessianNorm {
    fn info(&self) -> &SupremandInfo {
        &self.info
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn value(&self, jet: &Jet2) -> f64 {
        let sq = jet.hess.frobenius_norm_sq();
        // sqrt(a + e^2) - e written without cancellation
        sq / ((sq + self.eps * self.eps).sqrt() + self.eps)
    }

    fn gradient(&self, jet: &Jet2) -> Result<SupremandGradient> {
        let r = (jet.hess.frobenius_norm_sq() + self.eps * self.eps).sqrt();
        Ok(SupremandGradient::hessian_only(jet.hess.scale(1.0 / r)))
    }
}

/// `H(X) = |X|^2`.
#[derive(Debug, Clone)]
pub struct SquaredHessian {
    n: usize,
    info: SupremandInfo,
}

impl SquaredHessian {
    pub fn new(n: usize) -> Self {
        SquaredHessian {
            n,
            info: SupremandInfo {
                name: "squared-hessian".into(),
                lower_bound: 0.0,
                // |X|^2 >= |X| - 1/4
                coercivity: Some(Coercivity {
                    c1: 1.0,
                    c2: 1.0,
                    s: 0.0,
                    t: 0.0,
                }),
                level_convex_in_hess: true,
                smooth_region: "everywhere".into(),
            },
        }
    }
}

impl Supremand for SquaredHessian {
    fn info(&self) -> &SupremandInfo {
        &self.info
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn value(&self, jet: &Jet2) -> f64 {
        jet.hess.frobenius_norm_sq()
    }

    fn gradient(&self, jet: &Jet2) -> Result<SupremandGradient> {
        Ok(SupremandGradient::hessian_only(jet.hess.scale(2.0)))
    }
}

/// `H(x, eta, p, X) = |X|^2 + beta |X| / (1 + |eta|^s + |p|^t)`.
///
/// With `smoothing = Some(e)` every non-smooth factor is regularized:
/// `|X| -> sqrt(|X|^2 + e^2)`, `|eta|^s -> (eta^2 + e^2)^{s/2}` and likewise
/// for `|p|^t`.
#[derive(Debug, Clone)]
pub struct LowerOrderExample {
    n: usize,
    s: f64,
    t: f64,
    beta: f64,
    smoothing: Option<f64>,
    info: SupremandInfo,
}

impl LowerOrderExample {
    pub fn new(n: usize, s: f64, t: f64, beta: f64) -> Result<Self> {
        Self::build(n, s, t, beta, None)
    }

    fn build(n: usize, s: f64, t: f64, beta: f64, smoothing: Option<f64>) -> Result<Self> {
        if !(0.0..1.0).contains(&s) || !(0.0..1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "lower-order exponents must lie in [0, 1), got s={s}, t={t}"
            )));
        }
        if beta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "beta must be >= 0, got {beta}"
            )));
        }
        let name = match smoothing {
            None => format!("lower-order:s={s},t={t},beta={beta}"),
            Some(e) => format!("lower-order:s={s},t={t},beta={beta},eps={e}"),
        };
        let smooth_region = match smoothing {
            Some(_) => "everywhere".to_string(),
            None => {
                let mut parts = vec!["X != 0"];
                if s > 0.0 {
                    parts.push("eta != 0");
                }
                if t > 0.0 {
                    parts.push("p != 0");
                }
                parts.join(", ")
            }
        };
        Ok(LowerOrderExample {
            n,
            s,
            t,
            beta,
            smoothing,
            info: SupremandInfo {
                name,
                lower_bound: 0.0,
                // the |X|^2 term alone dominates |X| - 1/4
                coercivity: Some(Coercivity {
                    c1: 1.0,
                    c2: 1.0,
                    s,
                    t,
                }),
                level_convex_in_hess: true,
                smooth_region,
            },
        })
    }

    fn factors(&self, jet: &Jet2) -> (f64, f64, f64, f64) {
        let e2 = self.smoothing.map_or(0.0, |e| e * e);
        let x_norm = (jet.hess.frobenius_norm_sq() + e2).sqrt();
        let eta_abs = (jet.eta * jet.eta + e2).sqrt();
        let p_abs = (jet.p.iter().map(|v| v * v).sum::<f64>() + e2).sqrt();
        let w = 1.0 + eta_abs.powf(self.s) + p_abs.powf(self.t);
        (x_norm, eta_abs, p_abs, w)
    }

    fn non_smooth(&self, reason: &str) -> Error {
        Error::NonDifferentiable {
            name: self.info.name.clone(),
            reason: reason.into(),
        }
    }
}

impl Supremand for LowerOrderExample {
    fn info(&self) -> &SupremandInfo {
        &self.info
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn value(&self, jet: &Jet2) -> f64 {
        let (x_norm, _, _, w) = self.factors(jet);
        jet.hess.frobenius_norm_sq() + self.beta * x_norm / w
    }

    fn gradient(&self, jet: &Jet2) -> Result<SupremandGradient> {
        let (x_norm, eta_abs, p_abs, w) = self.factors(jet);
        let n = self.n;
        let mut g = SupremandGradient::zeros(n);
        if self.beta == 0.0 {
            g.d_hess = jet.hess.scale(2.0);
            return Ok(g);
        }
        if x_norm == 0.0 {
            return Err(self.non_smooth("|X| is not differentiable at X = 0"));
        }
        g.d_hess = jet.hess.lerp(2.0, &jet.hess, self.beta / (w * x_norm));
        let coef = -self.beta * x_norm / (w * w);
        if self.s > 0.0 {
            if eta_abs == 0.0 {
                return Err(self.non_smooth("|eta|^s is not differentiable at eta = 0"));
            }
            g.d_eta = coef * self.s * eta_abs.powf(self.s - 2.0) * jet.eta;
        }
        if self.t > 0.0 {
            if p_abs == 0.0 {
                return Err(self.non_smooth("|p|^t is not differentiable at p = 0"));
            }
            let f = coef * self.t * p_abs.powf(self.t - 2.0);
            g.d_p = jet.p.iter().map(|v| f * v).collect();
        }
        Ok(g)
    }

    fn smoothed(&self, eps: f64) -> Option<Arc<dyn Supremand>> {
        if self.smoothing.is_some() {
            return None;
        }
        Self::build(self.n, self.s, self.t, self.beta, Some(eps))
            .ok()
            .map(|h| Arc::new(h) as Arc<dyn Supremand>)
    }
}

/// `H(x, eta, p, X) = h(x, eta, p, X^T X)` for a profile `h`.
#[derive(Debug, Clone)]
pub struct HCompose {
    n: usize,
    profile: Arc<dyn Profile>,
    info: SupremandInfo,
}

impl HCompose {
    pub fn new(n: usize, profile: Arc<dyn Profile>) -> Self {
        let info = SupremandInfo {
            name: format!("h-compose:profile={}", profile.name()),
            lower_bound: profile.lower_bound(),
            coercivity: profile.coercivity(n),
            level_convex_in_hess: profile.level_convex_composite(),
            smooth_region: "everywhere the profile is C^1".into(),
        };
        HCompose { n, profile, info }
    }

    pub fn profile(&self) -> &Arc<dyn Profile> {
        &self.profile
    }
}

impl Supremand for HCompose {
    fn info(&self) -> &SupremandInfo {
        &self.info
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn value(&self, jet: &Jet2) -> f64 {
        self.profile
            .value(&jet.x, jet.eta, &jet.p, &jet.hess.gram())
    }

    fn gradient(&self, jet: &Jet2) -> Result<SupremandGradient> {
        let s = jet.hess.gram();
        let mut g = self.profile.partials(&jet.x, jet.eta, &jet.p, &s);
        // d/dX h(X^T X) : dX = h_S : (dX X + X dX) = (X G + G X) : dX
        let xg = jet.hess.matmul_full(&g.d_hess);
        let n = self.n;
        let mut sym = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                sym[i * n + j] = xg[i * n + j] + xg[j * n + i];
            }
        }
        g.d_hess = SymMatrix::from_full(n, &sym);
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{eval, partials, IdentityProfile};
    use super::*;

    #[test]
    fn pure_norm_at_zero_is_zero_and_not_differentiable() {
        let h = PureHessianNorm::new(1);
        let jet = Jet2::scalar(0.3, 1.0, 2.0, 0.0);
        assert_eq!(eval(&h, &jet).unwrap(), 0.0);
        assert!(matches!(
            partials(&h, &jet),
            Err(Error::NonDifferentiable { .. })
        ));
    }

    #[test]
    fn pure_norm_gradient_at_identity() {
        let h = PureHessianNorm::new(2);
        let g = partials(&h, &Jet2::hessian_only(SymMatrix::identity(2))).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((g.d_hess.get(0, 0) - r).abs() < 1e-15);
        assert!((g.d_hess.get(1, 1) - r).abs() < 1e-15);
        assert_eq!(g.d_hess.get(0, 1), 0.0);
    }

    #[test]
    fn squared_hessian_values_and_gradient() {
        let h = SquaredHessian::new(2);
        let two_i = SymMatrix::scaled_identity(2, 2.0);
        assert_eq!(eval(&h, &Jet2::hessian_only(two_i)).unwrap(), 8.0);
        let x = SymMatrix::from_full(2, &[1.0, -3.0, -3.0, 0.5]);
        let jet = Jet2::new(vec![0.1, 0.2], 0.7, vec![1.0, -1.0], x.clone());
        let g = partials(&h, &jet).unwrap();
        assert_eq!(g.d_hess, x.scale(2.0));
        assert_eq!(g.d_eta, 0.0);
        assert_eq!(g.d_x, vec![0.0, 0.0]);
        assert_eq!(g.d_p, vec![0.0, 0.0]);
    }

    #[test]
    fn smoothed_norm_value() {
        let h = SmoothedHessianNorm::new(2, 0.1);
        let x = SymMatrix::from_full(2, &[3.0, 0.0, 0.0, 4.0]);
        let v = eval(&h, &Jet2::hessian_only(x)).unwrap();
        // sqrt(25.01) - 0.1
        assert!((v - 4.900_999_900_019_998).abs() < 1e-12, "{v}");
    }

    #[test]
    fn compose_identity_is_squared_norm() {
        let h = HCompose::new(2, Arc::new(IdentityProfile));
        let x = SymMatrix::from_full(2, &[1.0, 2.0, 2.0, -1.0]);
        let jet = Jet2::hessian_only(x.clone());
        assert!((eval(&h, &jet).unwrap() - x.frobenius_norm_sq()).abs() < 1e-14);
        let g = partials(&h, &jet).unwrap();
        for (a, b) in g.d_hess.upper().iter().zip(x.scale(2.0).upper()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn lower_order_rejects_bad_exponents() {
        assert!(LowerOrderExample::new(1, 1.0, 0.5, 1.0).is_err());
        assert!(LowerOrderExample::new(1, 0.5, 0.5, -1.0).is_err());
    }

    #[test]
    fn lower_order_non_smooth_points() {
        let h = LowerOrderExample::new(1, 0.5, 0.5, 1.0).unwrap();
        assert!(partials(&h, &Jet2::scalar(0.0, 1.0, 1.0, 0.0)).is_err());
        assert!(partials(&h, &Jet2::scalar(0.0, 0.0, 1.0, 1.0)).is_err());
        assert!(partials(&h, &Jet2::scalar(0.0, 1.0, 0.0, 1.0)).is_err());
        let hs = h.smoothed(1e-3).unwrap();
        assert!(partials(hs.as_ref(), &Jet2::scalar(0.0, 0.0, 0.0, 0.0)).is_ok());
    }
}
