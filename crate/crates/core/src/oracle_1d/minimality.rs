use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bump::zeta;
use super::pure::absolute_minimizer_pure;
use crate::error::{Error, Result};
use crate::function_space::{energy_field, jet_field, DiscreteFunction};
use crate::supremand::Supremand;

/// Competitor families for the subinterval tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationFamily {
    /// Scaled radial bump inside the subinterval.
    Bump,
    /// `t^2 (1 - t)^2 (c0 + c1 t)` in the local coordinate `t`.
    Quintic,
    /// Partial step toward the `||u''||_inf` minimizer with the local data.
    LocalOracle,
    /// `phi = 0`; the margin is exactly zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub a1: f64,
    pub b1: f64,
    pub seed: u64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub trials: usize,
    pub violations: Vec<Violation>,
    /// Largest `E(u, O') - E(u + phi, O')` over all trials.
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalityOptions {
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub families: Vec<PerturbationFamily>,
    /// Smallest subinterval, in nodes.
    pub min_nodes: usize,
}

impl MinimalityOptions {
    pub fn new(trials: usize, seed: u64, tol: f64) -> Self {
        MinimalityOptions {
            trials,
            seed,
            tol,
            families: vec![
                PerturbationFamily::Bump,
                PerturbationFamily::Quintic,
                PerturbationFamily::LocalOracle,
            ],
            min_nodes: 10,
        }
    }
}

/// Seed of the RNG stream used by one trial.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random subinterval `[i0, i1]` of interior nodes with at least `min_nodes`.
pub(crate) fn random_subinterval(
    rng: &mut impl Rng,
    m: usize,
    min_nodes: usize,
) -> Result<(usize, usize)> {
    if m < min_nodes + 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least {} nodes for subinterval tests, got {m}",
            min_nodes + 2
        )));
    }
    let span = rng.gen_range(min_nodes - 1..=m - 3);
    let i0 = rng.gen_range(1..=m - 2 - span);
    Ok((i0, i0 + span))
}

/// Nodal perturbation supported in `[x_{i0}, x_{i1}]`, vanishing with its
/// slope at both ends.
pub(crate) fn random_perturbation(
    u: &DiscreteFunction,
    (i0, i1): (usize, usize),
    family: PerturbationFamily,
    scale: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let grid = u.grid();
    let xs: Vec<f64> = (0..grid.len()).map(|i| grid.coord(0, i)).collect();
    let (xa, xb) = (xs[i0], xs[i1]);
    let len = xb - xa;
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let amp = sign * scale * 10f64.powf(rng.gen_range(-3.0..=0.0));
    let mut phi = vec![0.0; grid.len()];
    match family {
        PerturbationFamily::Zero => {}
        PerturbationFamily::Bump => {
            let rho = len * rng.gen_range(0.1..=0.5);
            let x0 = rng.gen_range(xa + rho..=xb - rho);
            for i in i0..=i1 {
                let r = (xs[i] - x0).abs();
                if r < rho {
                    phi[i] = amp * rho * rho * zeta(r / rho).0;
                }
            }
        }
        PerturbationFamily::Quintic => {
            let c0 = rng.gen_range(-1.0..=1.0);
            let c1 = rng.gen_range(-1.0..=1.0);
            for i in i0..=i1 {
                let t = (xs[i] - xa) / len;
                phi[i] = amp * len * len * t * t * (1.0 - t) * (1.0 - t) * (c0 + c1 * t);
            }
        }
        PerturbationFamily::LocalOracle => {
            let jets = jet_field(u)?;
            let v = u.values();
            let w =
                absolute_minimizer_pure(xa, xb, v[i0], jets[i0].1.p[0], v[i1], jets[i1].1.p[0])?;
            let lambda = rng.gen_range(0.2..=1.0);
            for i in i0..=i1 {
                phi[i] = lambda * (w.solution.eval(xs[i]).0 - v[i]);
            }
            phi[i0] = 0.0;
            phi[i1] = 0.0;
        }
    }
    Ok(phi)
}

fn max_on(field: &[f64], (i0, i1): (usize, usize)) -> f64 {
    field[i0..=i1]
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
}

/// Randomized test of `E(u, O') <= E(u + phi, O') + tol` with the default
/// perturbation families.
pub fn check_absolute_minimality(
    h: &dyn Supremand,
    u: &DiscreteFunction,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<MinimalityReport> {
    check_absolute_minimality_with(h, u, &MinimalityOptions::new(trials, seed, tol))
}

pub fn check_absolute_minimality_with(
    h: &dyn Supremand,
    u: &DiscreteFunction,
    opts: &MinimalityOptions,
) -> Result<MinimalityReport> {
    if u.grid().dim() != 1 {
        return Err(Error::InvalidGrid("minimality checks are 1D only".into()));
    }
    if opts.families.is_empty() {
        return Err(Error::InvalidArgument("no perturbation families".into()));
    }
    let base = energy_field(h, u)?;
    let jets = jet_field(u)?;
    let m = u.len();
    let mut report = MinimalityReport {
        trials: opts.trials,
        violations: Vec::new(),
        worst_margin: f64::NEG_INFINITY,
    };
    for trial in 0..opts.trials {
        let ts = trial_seed(opts.seed, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(ts);
        let sub = random_subinterval(&mut rng, m, opts.min_nodes)?;
        let scale = jets[sub.0..=sub.1]
            .iter()
            .fold(1.0_f64, |s, (_, j)| s.max(j.hess.max_abs()));
        let family = opts.families[trial % opts.families.len()];
        let phi = random_perturbation(u, sub, family, scale, &mut rng)?;
        let perturbed = energy_field(h, &u.add(&phi)?)?;
        let margin = max_on(&base, sub) - max_on(&perturbed, sub);
        report.worst_margin = report.worst_margin.max(margin);
        if margin > opts.tol {
            let g = u.grid();
            report.violations.push(Violation {
                a1: g.coord(0, sub.0),
                b1: g.coord(0, sub.1),
                seed: ts,
                margin,
            });
        }
    }
    if opts.trials == 0 {
        report.worst_margin = 0.0;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::Grid;
    use crate::oracle_1d::cubic_hermite;
    use crate::supremand::PureHessianNorm;

    #[test]
    fn zero_family_has_zero_margin() {
        let g = Grid::new_1d(0.0, 1.0, 41).unwrap();
        let u = cubic_hermite(0.0, 1.0, 0.0, 1.0, 0.0, 3.0)
            .unwrap()
            .sample(&g)
            .unwrap();
        let mut opts = MinimalityOptions::new(20, 3, 0.0);
        opts.families = vec![PerturbationFamily::Zero];
        let r = check_absolute_minimality_with(&PureHessianNorm::new(1), &u, &opts).unwrap();
        assert_eq!(r.worst_margin, 0.0);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn subintervals_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (a, b) = random_subinterval(&mut rng, 15, 10).unwrap();
            assert!(a >= 1 && b <= 13 && b - a + 1 >= 10);
        }
    }
}
