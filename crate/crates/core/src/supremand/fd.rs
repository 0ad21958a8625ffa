use super::jet::{Jet2, SymMatrix};
use super::{eval, partials, Supremand};
use crate::error::{Error, Result};

/// Max relative error between the analytic partials and central differences
/// of [`eval`] with the given step.
///
/// Off-diagonal Hessian entries are perturbed symmetrically, so the finite
/// difference there is compared against `2 * d_X[i][j]`. The relative error
/// uses `max(1, |analytic|)` as denominator.
pub fn check_partials_fd(h: &dyn Supremand, jet: &Jet2, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step must be > 0, got {step}"
        )));
    }
    let g = partials(h, jet)?;
    let n = jet.dim();
    let mut worst = 0.0_f64;

    let mut central = |plus: Jet2, minus: Jet2, analytic: f64| -> Result<()> {
        let fd = (eval(h, &plus)? - eval(h, &minus)?) / (2.0 * step);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1.0));
        Ok(())
    };

    for k in 0..n {
        let (mut a, mut b) = (jet.clone(), jet.clone());
        a.x[k] += step;
        b.x[k] -= step;
        central(a, b, g.d_x[k])?;
    }
    {
        let (mut a, mut b) = (jet.clone(), jet.clone());
        a.eta += step;
        b.eta -= step;
        central(a, b, g.d_eta)?;
    }
    for k in 0..n {
        let (mut a, mut b) = (jet.clone(), jet.clone());
        a.p[k] += step;
        b.p[k] -= step;
        central(a, b, g.d_p[k])?;
    }
    for (idx, (i, j)) in SymMatrix::entry_indices(n).into_iter().enumerate() {
        let (mut a, mut b) = (jet.clone(), jet.clone());
        a.hess.upper_mut()[idx] += step;
        b.hess.upper_mut()[idx] -= step;
        let weight = if i == j { 1.0 } else { 2.0 };
        central(a, b, weight * g.d_hess.get(i, j))?;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::super::{PureHessianNorm, SmoothedHessianNorm, SquaredHessian};
    use super::*;

    #[test]
    fn squared_hessian_is_exact() {
        let h = SquaredHessian::new(2);
        let x = SymMatrix::from_full(2, &[0.3, -1.2, -1.2, 2.5]);
        let jet = Jet2::new(vec![0.1, 0.4], -0.3, vec![0.2, 0.9], x);
        assert!(check_partials_fd(&h, &jet, 1e-5).unwrap() < 1e-8);
    }

    #[test]
    fn smoothed_norm_at_identity() {
        let h = SmoothedHessianNorm::new(2, 0.1);
        let jet = Jet2::hessian_only(SymMatrix::identity(2));
        assert!(check_partials_fd(&h, &jet, 1e-5).unwrap() < 1e-6);
    }

    #[test]
    fn non_smooth_point_propagates() {
        let h = PureHessianNorm::new(1);
        let jet = Jet2::scalar(0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            check_partials_fd(&h, &jet, 1e-5),
            Err(Error::NonDifferentiable { .. })
        ));
    }
}
