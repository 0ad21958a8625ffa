//! Minimization of the discrete `E_p` functional with clamped data,
//! p-continuation toward the `E_inf` minimizer and the discrete
//! Euler-Lagrange residual.
//!
//! The optimizer works on the power mean `E_p + M` computed relative to its
//! largest term, so nothing overflows for large `p`.

mod el;
mod lbfgs;
mod objective;

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{self, sup_energy, BoundaryData, DiscreteFunction, Grid};
use crate::oracle_1d::cubic_hermite;
use crate::supremand::{smooth_or_self, Supremand};

pub use el::{el_residual, ElResidual};
use objective::Objective;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// `M` in `(M + H)^p`; must exceed the supremand's `m`.
    pub shift: f64,
    /// Smoothing parameter of the optimization surrogate. `None` picks
    /// `1e-3` times the largest `|X|` of the initial guess; `Some(0.0)`
    /// optimizes `H` itself.
    pub smoothing: Option<f64>,
    pub max_iter: usize,
    /// Tolerance on the preconditioned norm of `grad E_p`.
    pub gtol: f64,
    pub memory: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Extra seeded starts, used only when `H` is not level-convex in `X`.
    pub restarts: usize,
    pub seed: u64,
    pub max_shift_doublings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            shift: 1.0,
            smoothing: None,
            max_iter: 20_000,
            gtol: 1e-8,
            memory: 20,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            restarts: 0,
            seed: 0,
            max_shift_doublings: 10,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self, h: &dyn Supremand) -> Result<()> {
        let m = h.info().lower_bound;
        if !(self.shift > m) {
            return Err(Error::InvalidArgument(format!(
                "shift M = {} must exceed the lower bound m = {m}",
                self.shift
            )));
        }
        if !(self.gtol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gtol must be > 0, got {}",
                self.gtol
            )));
        }
        if let Some(e) = self.smoothing {
            if !(e >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "smoothing must be >= 0, got {e}"
                )));
            }
        }
        if self.memory == 0
            || !(self.armijo > 0.0 && self.armijo < 1.0)
            || !(self.backtrack > 0.0 && self.backtrack < 1.0)
        {
            return Err(Error::InvalidArgument(
                "invalid line-search settings".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub p: f64,
    /// `E_p` of the optimization surrogate at the returned iterate.
    pub e_p: f64,
    /// `E_inf` with the unsmoothed supremand.
    pub e_inf: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Final shift, after any doublings.
    pub shift: f64,
    pub smoothing: f64,
}

/// Cubic Hermite (1D) or bilinearly blended (2D) extension of the data.
pub fn extension(grid: &Grid, boundary: &BoundaryData) -> Result<DiscreteFunction> {
    boundary.validate(grid)?;
    match grid.dim() {
        1 => {
            let (va, sa, vb, sb) = boundary.as_1d().unwrap();
            let q = cubic_hermite(grid.lower(0), grid.upper(0), va, sa, vb, sb)?;
            let values = (0..grid.len()).map(|i| q.value(grid.coord(0, i))).collect();
            DiscreteFunction::new(grid.clone(), values, boundary.clone())
        }
        _ => {
            let (mx, my) = (grid.count(0), grid.count(1));
            let t = &boundary.trace;
            let mut values = vec![0.0; grid.len()];
            for j in 0..my {
                let ty = j as f64 / (my - 1) as f64;
                for i in 0..mx {
                    let sx = i as f64 / (mx - 1) as f64;
                    let edges =
                        (1.0 - sx) * t[0][j] + sx * t[1][j] + (1.0 - ty) * t[2][i] + ty * t[3][i];
                    let corners = (1.0 - sx) * (1.0 - ty) * t[2][0]
                        + sx * (1.0 - ty) * t[2][mx - 1]
                        + (1.0 - sx) * ty * t[3][0]
                        + sx * ty * t[3][mx - 1];
                    values[j * mx + i] = edges - corners;
                }
            }
            DiscreteFunction::new(grid.clone(), values, boundary.clone())
        }
    }
}

fn default_smoothing(init: &DiscreteFunction) -> Result<f64> {
    let scale = function_space::jet_field(init)?
        .iter()
        .fold(0.0_f64, |m, (_, j)| m.max(j.hess.frobenius_norm()));
    Ok(1e-3 * if scale > 0.0 { scale } else { 1.0 })
}

struct Attempt {
    values: Vec<f64>,
    /// `E_p + M`.
    value: f64,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
    shift: f64,
}

fn solve_from(
    h: &dyn Supremand,
    grid: &Grid,
    boundary: &BoundaryData,
    p: f64,
    opts: &SolverOptions,
    start: Vec<f64>,
) -> Result<Attempt> {
    let mut shift = opts.shift;
    let mut x = None;
    let mut total_iters = 0;
    for doubling in 0..=opts.max_shift_doublings {
        let obj = Objective::new(h, grid, boundary, start.clone(), p, shift)?;
        let pre = obj.preconditioner()?;
        let x0 = x.take().unwrap_or_else(|| obj.restrict(&start));
        let gtol = opts.gtol;
        let pnorm = |g: &[f64]| -> f64 {
            let mut pg = g.to_vec();
            pre.solve_in_place(&mut pg);
            pg.iter()
                .zip(g)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .max(0.0)
                .sqrt()
        };
        let converged = |_: f64, g: &[f64]| pnorm(g) <= gtol;
        let settings = lbfgs::Settings {
            memory: opts.memory,
            max_iter: opts.max_iter.saturating_sub(total_iters),
            armijo: opts.armijo,
            backtrack: opts.backtrack,
            max_backtracks: opts.max_backtracks,
        };
        match lbfgs::minimize(
            x0,
            |v| obj.value_grad(v),
            |v| pre.solve_in_place(v),
            converged,
            settings,
        ) {
            Ok(out) => {
                total_iters += out.iterations;
                let grad_norm = pnorm(&out.g);
                log::debug!(
                    "p = {p}: {} iterations, stop {:?}, |grad| = {grad_norm:e}",
                    out.iterations,
                    out.stop
                );
                return Ok(Attempt {
                    values: obj.full(&out.x),
                    value: out.f,
                    iterations: total_iters,
                    grad_norm,
                    converged: out.stop == lbfgs::Stop::Converged,
                    shift,
                });
            }
            Err(fail) => match fail.error {
                Error::ShiftViolation { node, value } if doubling < opts.max_shift_doublings => {
                    total_iters += fail.iterations;
                    log::warn!(
                        "shift violation at node {node} (M + H = {value}); doubling M from {shift} to {}",
                        2.0 * shift
                    );
                    shift *= 2.0;
                    x = Some(fail.x);
                }
                other => return Err(other),
            },
        }
    }
    unreachable!("the last doubling returns the error")
}

/// Minimizes the discrete `E_p` of the smoothed supremand with the data `g`
/// held fixed on the boundary.
pub fn minimize_ep(
    h: &Arc<dyn Supremand>,
    grid: &Grid,
    g: &BoundaryData,
    p: f64,
    opts: &SolverOptions,
    warm_start: Option<&DiscreteFunction>,
) -> Result<(DiscreteFunction, SolveReport)> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "p must be a finite number > 1, got {p}"
        )));
    }
    opts.validate(h.as_ref())?;
    if grid.dim() != h.dimension() {
        return Err(Error::DimensionMismatch {
            expected: h.dimension(),
            got: grid.dim(),
        });
    }
    let init = match warm_start {
        Some(w) => {
            if w.grid() != grid {
                return Err(Error::InvalidGrid(
                    "warm start lives on a different grid".into(),
                ));
            }
            DiscreteFunction::new(grid.clone(), w.values().to_vec(), g.clone())?
        }
        None => extension(grid, g)?,
    };
    let eps = match opts.smoothing {
        Some(e) => e,
        None => default_smoothing(&init)?,
    };
    let surrogate = if eps > 0.0 {
        smooth_or_self(h, eps)
    } else {
        Arc::clone(h)
    };

    let mut best = solve_from(surrogate.as_ref(), grid, g, p, opts, init.values().to_vec())?;
    if !h.info().level_convex_in_hess && opts.restarts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let amp = init.values().iter().fold(1.0_f64, |m, v| m.max(v.abs())) * 0.1;
        for r in 0..opts.restarts {
            let mut start = init.values().to_vec();
            for k in grid.interior_nodes() {
                start[k] += amp * rng.gen_range(-1.0..=1.0);
            }
            let a = solve_from(surrogate.as_ref(), grid, g, p, opts, start)?;
            log::debug!("restart {r}: E_p + M = {}", a.value);
            if a.value - a.shift < best.value - best.shift {
                best = a;
            }
        }
    }
    let u = DiscreteFunction::new(grid.clone(), best.values, g.clone())?;
    let report = SolveReport {
        p,
        e_p: best.value - best.shift,
        e_inf: sup_energy(h.as_ref(), &u)?,
        iterations: best.iterations,
        grad_norm: best.grad_norm,
        converged: best.converged,
        shift: best.shift,
        smoothing: eps,
    };
    Ok((u, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationStep {
    pub p: f64,
    pub solution: DiscreteFunction,
    pub report: SolveReport,
    /// `E_p(u_p)` of the optimized surrogate at its own `p`.
    pub diagonal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationResult {
    pub schedule: Vec<f64>,
    pub steps: Vec<ContinuationStep>,
    /// First error encountered; `steps` holds everything before it.
    pub failure: Option<Error>,
}

impl ContinuationResult {
    /// The last iterate, the candidate for the `E_inf` minimizer.
    pub fn limit(&self) -> Option<&DiscreteFunction> {
        self.steps.last().map(|s| &s.solution)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("p,E_p,E_inf,grad_norm,iters,converged\n");
        for s in &self.steps {
            let r = &s.report;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.p, r.e_p, r.e_inf, r.grad_norm, r.iterations, r.converged
            );
        }
        out
    }

    /// Writes `continuation.csv` plus `u_p{p}.csv` and its sidecar per step.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("continuation.csv"), self.summary_csv())?;
        for s in &self.steps {
            function_space::save(&s.solution, &dir.join(format!("u_p{}.csv", s.p)))?;
        }
        Ok(())
    }
}

/// Warm-started solves along an increasing schedule with `p_0 >= 2`.
///
/// Input errors are returned directly; solver errors end the run early and
/// are stored in [`ContinuationResult::failure`].
pub fn continuation(
    h: &Arc<dyn Supremand>,
    grid: &Grid,
    g: &BoundaryData,
    schedule: &[f64],
    opts: &SolverOptions,
) -> Result<ContinuationResult> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty p schedule".into()));
    }
    if schedule[0] < 2.0 || schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!(
            "schedule must increase and start at p >= 2, got {schedule:?}"
        )));
    }
    opts.validate(h.as_ref())?;
    let mut opts = opts.clone();
    if opts.smoothing.is_none() {
        opts.smoothing = Some(default_smoothing(&extension(grid, g)?)?);
    }
    let mut result = ContinuationResult {
        schedule: schedule.to_vec(),
        steps: Vec::new(),
        failure: None,
    };
    for &p in schedule {
        let warm = result.steps.last().map(|s| &s.solution);
        match minimize_ep(h, grid, g, p, &opts, warm) {
            Ok((solution, report)) => {
                log::info!(
                    "p = {p}: E_p = {}, E_inf = {}, {} iterations, converged = {}",
                    report.e_p,
                    report.e_inf,
                    report.iterations,
                    report.converged
                );
                // keep any shift increase for the remaining steps
                opts.shift = report.shift;
                result.steps.push(ContinuationStep {
                    p,
                    diagonal: report.e_p,
                    solution,
                    report,
                });
            }
            Err(e) => {
                log::error!("continuation stopped at p = {p}: {e}");
                result.failure = Some(e);
                break;
            }
        }
    }
    Ok(result)
}

/// Powers of two from 4 to 1024.
pub fn default_schedule() -> Vec<f64> {
    (2..=10).map(|k| f64::from(1u32 << k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::supremand::{PureHessianNorm, SquaredHessian};

    fn opts() -> SolverOptions {
        SolverOptions {
            gtol: 1e-10,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let grid = Grid::new_1d(0.0, 1.0, 21).unwrap();
        let h: Arc<dyn Supremand> = Arc::new(SquaredHessian::new(1));
        let (u, r) =
            minimize_ep(&h, &grid, &BoundaryData::zero(&grid), 8.0, &opts(), None).unwrap();
        assert!(u.values().iter().all(|v| *v == 0.0));
        assert!(r.converged && r.e_inf == 0.0);
    }

    #[test]
    fn quadratic_recovered_from_perturbed_start() {
        let grid = Grid::new_1d(0.0, 1.0, 41).unwrap();
        let bd = BoundaryData::clamped_1d(0.0, 0.0, 1.0, 2.0);
        let h: Arc<dyn Supremand> = Arc::new(SquaredHessian::new(1));
        let mut start = extension(&grid, &bd).unwrap().values().to_vec();
        for (k, v) in start.iter_mut().enumerate().skip(1).take(39) {
            *v += 0.05 * ((k as f64) * 0.7).sin();
        }
        let warm = DiscreteFunction::new(grid.clone(), start, bd.clone()).unwrap();
        let (u, r) = minimize_ep(&h, &grid, &bd, 6.0, &opts(), Some(&warm)).unwrap();
        assert!(r.converged, "{r:?}");
        for i in 0..41 {
            let x = grid.coord(0, i);
            assert!((u.values()[i] - x * x).abs() < 1e-7, "{i}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = Grid::new_1d(0.0, 1.0, 21).unwrap();
        let bd = BoundaryData::zero(&grid);
        let h: Arc<dyn Supremand> = Arc::new(PureHessianNorm::new(1));
        assert!(minimize_ep(&h, &grid, &bd, 1.0, &opts(), None).is_err());
        let bad = SolverOptions {
            shift: 0.0,
            ..opts()
        };
        assert!(minimize_ep(&h, &grid, &bd, 4.0, &bad, None).is_err());
        assert!(continuation(&h, &grid, &bd, &[4.0, 2.0], &opts()).is_err());
        assert!(continuation(&h, &grid, &bd, &[1.5], &opts()).is_err());
    }

    #[test]
    fn coons_patch_matches_bilinear() {
        let grid = Grid::new_2d((0.0, 1.0), (0.0, 2.0), (5, 6)).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1];
        let bd = BoundaryData::from_fn(&grid, f, |x| vec![2.0 + 0.5 * x[1], -1.0 + 0.5 * x[0]]);
        let e = extension(&grid, &bd).unwrap();
        for k in 0..grid.len() {
            assert!((e.values()[k] - f(&grid.point(k))).abs() < 1e-12);
        }
    }
}
