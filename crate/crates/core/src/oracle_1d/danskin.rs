use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::minimality::{random_perturbation, random_subinterval, trial_seed, PerturbationFamily};
use crate::error::{Error, Result};
use crate::function_space::{jet_field, DiscreteFunction};
use crate::supremand::{eval, partials, Supremand};

/// Extremes of the linearization `L(phi)` over the band argmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DanskinValues {
    pub max: f64,
    pub min: f64,
    pub argmax: Vec<usize>,
}

/// Evaluates `L(phi) = H_eta phi + H_p . D phi + H_X : D^2 phi` on the nodes
/// of `[i0, i1]` where `H(J^2 u) >= max - band`.
pub fn danskin_check(
    h: &dyn Supremand,
    u: &DiscreteFunction,
    (i0, i1): (usize, usize),
    phi: &DiscreteFunction,
    band: f64,
) -> Result<DanskinValues> {
    if phi.grid() != u.grid() {
        return Err(Error::InvalidGrid(
            "perturbation lives on a different grid".into(),
        ));
    }
    if i1 >= u.len() || i0 > i1 {
        return Err(Error::InvalidArgument(format!(
            "bad node range [{i0}, {i1}]"
        )));
    }
    let ju = jet_field(u)?;
    let jp = jet_field(phi)?;
    let energy: Vec<f64> = (i0..=i1)
        .map(|k| eval(h, &ju[k].1))
        .collect::<Result<_>>()?;
    let top = energy.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let argmax: Vec<usize> = (i0..=i1)
        .filter(|&k| energy[k - i0] >= top - band.max(0.0))
        .collect();
    if argmax.is_empty() {
        return Err(Error::Solver("empty argmax set".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &k in &argmax {
        let g = partials(h, &ju[k].1)?;
        let q = &jp[k].1;
        let l = g.d_eta * q.eta
            + g.d_p.iter().zip(&q.p).map(|(a, b)| a * b).sum::<f64>()
            + g.d_hess.frobenius_dot(&q.hess);
        lo = lo.min(l);
        hi = hi.max(l);
    }
    Ok(DanskinValues {
        max: hi,
        min: lo,
        argmax,
    })
}

/// Worst outcomes of randomized Danskin trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DanskinSummary {
    pub trials: usize,
    /// `min` over trials of `max_argmax L(phi)`.
    pub worst_plus: f64,
    /// `min` over trials of `max_argmax L(-phi) = -min_argmax L(phi)`.
    pub worst_minus: f64,
}

/// Random subintervals and bump or quintic perturbations.
pub fn danskin_trials(
    h: &dyn Supremand,
    u: &DiscreteFunction,
    trials: usize,
    seed: u64,
    band: f64,
) -> Result<DanskinSummary> {
    let mut out = DanskinSummary {
        trials,
        worst_plus: f64::INFINITY,
        worst_minus: f64::INFINITY,
    };
    let families = [PerturbationFamily::Bump, PerturbationFamily::Quintic];
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
        let sub = random_subinterval(&mut rng, u.len(), 10)?;
        let phi = random_perturbation(u, sub, families[trial % 2], 1.0, &mut rng)?;
        let phi = DiscreteFunction::new(
            u.grid().clone(),
            phi,
            crate::function_space::BoundaryData::zero(u.grid()),
        )?;
        let d = danskin_check(h, u, sub, &phi, band)?;
        out.worst_plus = out.worst_plus.min(d.max);
        out.worst_minus = out.worst_minus.min(-d.min);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::{BoundaryData, Grid};
    use crate::oracle_1d::absolute_minimizer_pure;
    use crate::supremand::SmoothedHessianNorm;

    #[test]
    fn zero_perturbation() {
        let g = Grid::new_1d(0.0, 1.0, 51).unwrap();
        let u = absolute_minimizer_pure(0.0, 1.0, 0.0, 0.0, 1.0, 0.0)
            .unwrap()
            .solution
            .sample(&g)
            .unwrap();
        let phi = DiscreteFunction::new(g.clone(), vec![0.0; 51], BoundaryData::zero(&g)).unwrap();
        let d = danskin_check(&SmoothedHessianNorm::new(1, 1e-3), &u, (5, 40), &phi, 0.1).unwrap();
        assert_eq!((d.max, d.min), (0.0, 0.0));
    }
}
