//! One-dimensional strong solutions of `h(x, u, u', (u'')^2) = C` with clamped
//! data, built from bang-bang curvature `u'' = +-sqrt(f(x, u, u'))` and
//! shooting on the switch times.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{self, jet_field, BoundaryData, DiscreteFunction, Grid};
use crate::linalg::min_norm_solve;
use crate::supremand::{HCompose, Profile};

/// A profile `h(x, eta, p, S)` that is strictly increasing in `S >= delta0`.
#[derive(Clone)]
pub struct MonotoneH {
    profile: Arc<dyn Profile>,
    delta0: f64,
}

impl std::fmt::Debug for MonotoneH {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MonotoneH")
            .field("profile", &self.profile.name())
            .field("delta0", &self.delta0)
            .finish()
    }
}

pub const DEFAULT_DELTA0: f64 = 1e-2;

impl MonotoneH {
    /// Checks monotonicity on `x in [0, 1]`, `eta, p in [-2, 2]`,
    /// `S in [delta0, 10]`.
    pub fn new(profile: Arc<dyn Profile>, delta0: f64) -> Result<Self> {
        if !(delta0 > 0.0 && delta0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "delta0 must be > 0, got {delta0}"
            )));
        }
        let m = MonotoneH { profile, delta0 };
        let margin = m.monotonicity_margin((0.0, 1.0), (-2.0, 2.0), (-2.0, 2.0), 10.0);
        if !(margin > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "profile `{}` is not strictly increasing in S (margin {margin})",
                m.profile.name()
            )));
        }
        Ok(m)
    }

    pub fn with_default_delta(profile: Arc<dyn Profile>) -> Result<Self> {
        Self::new(profile, DEFAULT_DELTA0)
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn profile(&self) -> &Arc<dyn Profile> {
        &self.profile
    }

    pub fn h(&self, x: f64, eta: f64, p: f64, s: f64) -> f64 {
        self.profile.value_1d(x, eta, p, s)
    }

    /// The supremand `H(x, eta, p, X) = h(x, eta, p, X^2)`.
    pub fn supremand(&self) -> HCompose {
        HCompose::new(1, self.profile.clone())
    }

    /// Smallest increment `h(.., t_{i+1}) - h(.., t_i)` over a sampled box,
    /// `t` geometric from `delta0` to `s_max`.
    pub fn monotonicity_margin(
        &self,
        xs: (f64, f64),
        etas: (f64, f64),
        ps: (f64, f64),
        s_max: f64,
    ) -> f64 {
        let lin = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / 4.0;
        let ts: Vec<f64> = (0..16)
            .map(|i| self.delta0 * (s_max / self.delta0).max(1.0).powf(i as f64 / 15.0))
            .collect();
        let mut margin = f64::INFINITY;
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    let (x, e, p) = (lin(xs, a), lin(etas, b), lin(ps, c));
                    for w in ts.windows(2) {
                        if w[1] > w[0] {
                            margin = margin.min(self.h(x, e, p, w[1]) - self.h(x, e, p, w[0]));
                        }
                    }
                }
            }
        }
        margin
    }
}

/// Smallest admissible level: the larger of the sup of `h(., delta0)` over
/// the jet box of `g` (inflated by half its size, 21 samples per axis) and
/// the max over nodes of `h(x, g, g', 1 + max (g'')^2)`.
pub fn energy_level_threshold(h: &MonotoneH, g: &DiscreteFunction) -> Result<f64> {
    if g.grid().dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: g.grid().dim(),
        });
    }
    let jets = jet_field(g)?;
    let range = |f: &dyn Fn(usize) -> f64| {
        let (lo, hi) = (0..jets.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), k| {
            (l.min(f(k)), u.max(f(k)))
        });
        let (c, r) = (0.5 * (lo + hi), 0.75 * (hi - lo));
        (c - r, c + r)
    };
    let etas = range(&|k| jets[k].1.eta);
    let ps = range(&|k| jets[k].1.p[0]);
    let xs = (g.grid().lower(0), g.grid().upper(0));
    let at = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / 20.0;
    let mut first = f64::NEG_INFINITY;
    for a in 0..21 {
        for b in 0..21 {
            for c in 0..21 {
                let (x, e, p) = (at(xs, a), at(etas, b), at(ps, c));
                let v = h.h(x, e, p, h.delta0);
                if !v.is_finite() {
                    return Err(Error::Unbounded(format!(
                        "h(x = {x}, eta = {e}, p = {p}, delta0) = {v}"
                    )));
                }
                first = first.max(v);
            }
        }
    }
    let s = 1.0
        + jets
            .iter()
            .map(|(_, j)| j.hess.get(0, 0).powi(2))
            .fold(0.0, f64::max);
    let second = jets
        .iter()
        .map(|(_, j)| h.h(j.x[0], j.eta, j.p[0], s))
        .fold(f64::NEG_INFINITY, f64::max);
    if !second.is_finite() {
        return Err(Error::Unbounded(format!("h(J^1 g, {s}) is not finite")));
    }
    Ok(first.max(second))
}

/// The `S >= delta0` with `h(x, eta, p, S) = C`, by bracketing and bisection.
pub fn invert_level(h: &MonotoneH, x: f64, eta: f64, p: f64, c: f64) -> Result<f64> {
    let f = |s: f64| h.h(x, eta, p, s);
    let mut lo = h.delta0;
    let base = f(lo);
    if !(c >= base) {
        return Err(Error::BelowReachableRange {
            level: c,
            minimum: base,
        });
    }
    if base == c {
        return Ok(lo);
    }
    let mut hi = (2.0 * lo).max(1.0);
    while f(hi) < c {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Unbounded(format!(
                "level {c} is never reached at x = {x}"
            )));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == c {
            return Ok(mid);
        }
        if v < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if c - f(lo) < f(hi) - c { lo } else { hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructOptions {
    pub max_switches: usize,
    /// Max-norm tolerance on the endpoint conditions.
    pub shooting_tol: f64,
    pub max_newton: usize,
    /// Nodes of the output grid; the integrator takes four steps per cell.
    pub nodes: usize,
    /// Initial curvature sign; `None` tries `+1` then `-1`.
    pub sign0: Option<i8>,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            max_switches: 4,
            shooting_tol: 1e-10,
            max_newton: 100,
            nodes: 201,
            sign0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BangBangSolution {
    pub c: f64,
    pub switches: Vec<f64>,
    pub sign0: i8,
    /// `[u(b) - B, u'(b) - B']`.
    pub endpoint_residual: [f64; 2],
    pub grid: Grid,
    pub boundary: BoundaryData,
    /// `u` and `u'` at the output nodes.
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    step: f64,
    /// `(u, u')` after every integrator step.
    dense: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    #[serde(rename = "C")]
    c: f64,
    switches: &'a [f64],
    sign0: i8,
    endpoint_residual: [f64; 2],
}

impl BangBangSolution {
    pub fn a(&self) -> f64 {
        self.grid.lower(0)
    }

    pub fn b(&self) -> f64 {
        self.grid.upper(0)
    }

    /// Curvature sign just right of `x`.
    pub fn sign_at(&self, x: f64) -> f64 {
        sign_at(self.sign0, &self.switches, x)
    }

    pub fn to_function(&self) -> Result<DiscreteFunction> {
        DiscreteFunction::new(self.grid.clone(), self.u.clone(), self.boundary.clone())
    }

    /// `(u, u')` at any `x` in `[a, b]`, integrating from the nearest
    /// stored step.
    pub fn state_at(&self, h: &MonotoneH, x: f64) -> Result<(f64, f64)> {
        let a = self.a();
        if !(x >= a && x <= self.b()) {
            return Err(Error::InvalidArgument(format!(
                "{x} is outside [{a}, {}]",
                self.b()
            )));
        }
        let i = (((x - a) / self.step).floor() as usize).min(self.dense.len() - 1);
        let t0 = a + i as f64 * self.step;
        integrate_span(h, self.c, self.sign0, &self.switches, t0, x, self.dense[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SolutionJson {
            c: self.c,
            switches: &self.switches,
            sign0: self.sign0,
            endpoint_residual: self.endpoint_residual,
        })
        .expect("plain data serializes")
    }

    /// `dir/implicit.csv` (with boundary sidecar) and `dir/implicit.json`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        function_space::save(&self.to_function()?, &dir.join("implicit.csv"))?;
        std::fs::write(dir.join("implicit.json"), self.to_json() + "\n")?;
        Ok(())
    }
}

fn sign_at(sign0: i8, switches: &[f64], x: f64) -> f64 {
    let passed = switches.iter().filter(|&&t| t <= x).count();
    f64::from(sign0) * if passed % 2 == 0 { 1.0 } else { -1.0 }
}

fn rhs(h: &MonotoneH, c: f64, sign: f64, x: f64, (u, v): (f64, f64)) -> Result<(f64, f64)> {
    Ok((v, sign * invert_level(h, x, u, v, c)?.sqrt()))
}

fn rk4(h: &MonotoneH, c: f64, sign: f64, x: f64, y: (f64, f64), dt: f64) -> Result<(f64, f64)> {
    let k1 = rhs(h, c, sign, x, y)?;
    let k2 = rhs(
        h,
        c,
        sign,
        x + 0.5 * dt,
        (y.0 + 0.5 * dt * k1.0, y.1 + 0.5 * dt * k1.1),
    )?;
    let k3 = rhs(
        h,
        c,
        sign,
        x + 0.5 * dt,
        (y.0 + 0.5 * dt * k2.0, y.1 + 0.5 * dt * k2.1),
    )?;
    let k4 = rhs(h, c, sign, x + dt, (y.0 + dt * k3.0, y.1 + dt * k3.1))?;
    Ok((
        y.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    ))
}

/// One integrator step from `t0` to `t1`, split at any switch in between.
fn integrate_span(
    h: &MonotoneH,
    c: f64,
    sign0: i8,
    switches: &[f64],
    t0: f64,
    t1: f64,
    mut y: (f64, f64),
) -> Result<(f64, f64)> {
    let mut cuts = vec![t0];
    cuts.extend(switches.iter().copied().filter(|&t| t > t0 && t < t1));
    cuts.push(t1);
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let sign = sign_at(sign0, switches, 0.5 * (w[0] + w[1]));
            y = rk4(h, c, sign, w[0], y, w[1] - w[0])?;
        }
    }
    Ok(y)
}

struct Shot {
    dense: Vec<(f64, f64)>,
    residual: [f64; 2],
}

fn shoot(
    h: &MonotoneH,
    c: f64,
    g: (f64, f64, f64, f64),
    grid: &Grid,
    sign0: i8,
    switches: &[f64],
) -> Result<Shot> {
    let (va, sa, vb, sb) = g;
    let a = grid.lower(0);
    let steps = 4 * (grid.count(0) - 1);
    let dt = (grid.upper(0) - a) / steps as f64;
    let mut y = (va, sa);
    let mut dense = Vec::with_capacity(steps + 1);
    dense.push(y);
    for i in 0..steps {
        let t0 = a + i as f64 * dt;
        let t1 = if i + 1 == steps {
            grid.upper(0)
        } else {
            a + (i + 1) as f64 * dt
        };
        y = integrate_span(h, c, sign0, switches, t0, t1, y)?;
        dense.push(y);
    }
    Ok(Shot {
        dense,
        residual: [y.0 - vb, y.1 - sb],
    })
}

fn res_norm(r: &[f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

fn admissible(t: &[f64], a: f64, b: f64) -> bool {
    let gap = 1e-9 * (b - a);
    t.iter().all(|&v| v > a + gap && v < b - gap) && t.windows(2).all(|w| w[1] - w[0] > gap)
}

/// Damped Gauss-Newton on `k` switch times from the evenly spread guess.
fn solve_switches(
    h: &MonotoneH,
    c: f64,
    g: (f64, f64, f64, f64),
    grid: &Grid,
    sign0: i8,
    k: usize,
    opts: &ConstructOptions,
) -> (Vec<f64>, Option<Shot>, f64) {
    let (a, b) = (grid.lower(0), grid.upper(0));
    let mut t: Vec<f64> = (0..k)
        .map(|j| a + (b - a) * (2 * j + 1) as f64 / (2 * k) as f64)
        .collect();
    let Ok(mut shot) = shoot(h, c, g, grid, sign0, &t) else {
        return (t, None, f64::INFINITY);
    };
    let mut r = res_norm(&shot.residual);
    for _ in 0..opts.max_newton {
        if r <= opts.shooting_tol || k == 0 {
            break;
        }
        let fd = 1e-7 * (b - a);
        let mut jac = vec![0.0; 2 * k];
        let mut ok = true;
        for j in 0..k {
            let mut tp = t.clone();
            tp[j] += fd;
            match shoot(h, c, g, grid, sign0, &tp) {
                Ok(s) => {
                    jac[j] = (s.residual[0] - shot.residual[0]) / fd;
                    jac[k + j] = (s.residual[1] - shot.residual[1]) / fd;
                }
                Err(_) => ok = false,
            }
        }
        if !ok {
            break;
        }
        let step = if k == 1 {
            let jtj = jac[0] * jac[0] + jac[1] * jac[1];
            if jtj == 0.0 {
                break;
            }
            vec![(jac[0] * shot.residual[0] + jac[1] * shot.residual[1]) / jtj]
        } else {
            match min_norm_solve(2, k, &jac, &shot.residual, 1e-14) {
                Ok(d) => d,
                Err(_) => break,
            }
        };
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = t
                .iter()
                .zip(&step)
                .map(|(ti, di)| ti - alpha * di)
                .collect();
            if admissible(&trial, a, b) {
                if let Ok(s) = shoot(h, c, g, grid, sign0, &trial) {
                    let rn = res_norm(&s.residual);
                    if rn < r {
                        t = trial;
                        shot = s;
                        r = rn;
                        improved = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (t, Some(shot), r)
}

/// Builds a bang-bang solution with as few switches as the data allow.
pub fn construct(
    h: &MonotoneH,
    g: &BoundaryData,
    a: f64,
    b: f64,
    c: f64,
    opts: &ConstructOptions,
) -> Result<BangBangSolution> {
    if !(b > a) {
        return Err(Error::DegenerateInterval { a, b });
    }
    let data = g
        .as_1d()
        .ok_or_else(|| Error::InvalidBoundary("implicit construction needs 1D data".into()))?;
    if !(opts.shooting_tol > 0.0) {
        return Err(Error::InvalidArgument("shooting_tol must be > 0".into()));
    }
    let grid = Grid::new_1d(a, b, opts.nodes)?;
    let signs: Vec<i8> = match opts.sign0 {
        Some(s) if s == 1 || s == -1 => vec![s],
        Some(s) => {
            return Err(Error::InvalidArgument(format!(
                "sign0 must be +1 or -1, got {s}"
            )))
        }
        None => vec![1, -1],
    };
    let mut best = f64::INFINITY;
    for k in 0..=opts.max_switches {
        for &sign0 in &signs {
            let (switches, shot, r) = solve_switches(h, c, data, &grid, sign0, k, opts);
            best = best.min(r);
            log::debug!("{k} switches, sign {sign0}: endpoint residual {r:e}");
            let Some(shot) = shot else { continue };
            if r <= opts.shooting_tol {
                let u = shot.dense.iter().step_by(4).map(|y| y.0).collect();
                let du = shot.dense.iter().step_by(4).map(|y| y.1).collect();
                return Ok(BangBangSolution {
                    c,
                    switches,
                    sign0,
                    endpoint_residual: shot.residual,
                    grid: grid.clone(),
                    boundary: g.clone(),
                    u,
                    du,
                    step: (b - a) / (shot.dense.len() - 1) as f64,
                    dense: shot.dense,
                });
            }
        }
    }
    Err(Error::ShootingFailed {
        switches: opts.max_switches,
        best_residual: best,
    })
}

/// Max of `|h(x, u, u', (u'')^2) - C|` on a grid ten times finer than the
/// output grid, skipping `exclusion_radius` around each switch. `u''` is
/// taken by central differences of the integrated `u'`.
pub fn verify_implicit(
    h: &MonotoneH,
    sol: &BangBangSolution,
    c: f64,
    exclusion_radius: f64,
) -> f64 {
    let (a, b) = (sol.a(), sol.b());
    let n = 10 * (sol.grid.count(0) - 1);
    let delta = 1e-4 * (b - a);
    let radius = exclusion_radius.max(delta);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let x = a + (j as f64 + 0.5) * (b - a) / n as f64;
        if x - delta < a || x + delta > b || sol.switches.iter().any(|t| (x - t).abs() <= radius) {
            continue;
        }
        let (Ok(y), Ok(lo), Ok(hi)) = (
            sol.state_at(h, x),
            sol.state_at(h, x - delta),
            sol.state_at(h, x + delta),
        ) else {
            return f64::INFINITY;
        };
        let upp = (hi.1 - lo.1) / (2.0 * delta);
        let dev = (h.h(x, y.0, y.1, upp * upp) - c).abs();
        worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::supremand::{parse_profile, IdentityProfile, SquareProfile};

    fn ident() -> MonotoneH {
        MonotoneH::with_default_delta(Arc::new(IdentityProfile)).unwrap()
    }

    fn zero_fn(m: usize) -> DiscreteFunction {
        let g = Grid::new_1d(0.0, 1.0, m).unwrap();
        DiscreteFunction::from_fn(g.clone(), BoundaryData::zero(&g), |_| 0.0).unwrap()
    }

    #[test]
    fn thresholds() {
        assert_eq!(energy_level_threshold(&ident(), &zero_fn(21)).unwrap(), 1.0);
        let g = Grid::new_1d(0.0, 1.0, 21).unwrap();
        let q = DiscreteFunction::sample(g, |x| 0.5 * x[0] * x[0], |x| vec![x[0]]).unwrap();
        assert!((energy_level_threshold(&ident(), &q).unwrap() - 2.0).abs() < 1e-9);
        let big = MonotoneH::new(Arc::new(IdentityProfile), 5.0).unwrap();
        assert_eq!(energy_level_threshold(&big, &zero_fn(21)).unwrap(), 5.0);
    }

    #[test]
    fn inversions() {
        assert_eq!(invert_level(&ident(), 0.0, 0.0, 0.0, 4.0).unwrap(), 4.0);
        let sq = MonotoneH::with_default_delta(Arc::new(SquareProfile)).unwrap();
        assert!((invert_level(&sq, 0.0, 0.0, 0.0, 16.0).unwrap() - 4.0).abs() < 1e-12);
        let eta = MonotoneH::with_default_delta(parse_profile("eta-weighted").unwrap()).unwrap();
        let f = invert_level(&eta, 0.0, 1.0, 0.0, 2.0).unwrap();
        assert!((eta.h(0.0, 1.0, 0.0, f) - 2.0).abs() < 1e-10 * 3.0 && (f - 1.0).abs() < 1e-12);
        assert!(matches!(
            invert_level(&ident(), 0.0, 0.0, 0.0, 1e-3),
            Err(Error::BelowReachableRange { .. })
        ));
    }

    #[test]
    fn zigzag_both_signs() {
        for s in [1, -1] {
            let opts = ConstructOptions {
                sign0: Some(s),
                ..Default::default()
            };
            let sol = construct(
                &ident(),
                &BoundaryData::clamped_1d(0.0, 0.0, 0.0, 0.0),
                0.0,
                1.0,
                1.0,
                &opts,
            )
            .unwrap();
            assert_eq!(sol.switches.len(), 2);
            assert!((sol.switches[0] - 0.25).abs() < 1e-8 && (sol.switches[1] - 0.75).abs() < 1e-8);
            assert!(res_norm(&sol.endpoint_residual) < 1e-8);
            assert!(verify_implicit(&ident(), &sol, 1.0, 1e-3) < 1e-10);
            let x = 0.125;
            let (u, _) = sol.state_at(&ident(), x).unwrap();
            assert!((u - f64::from(s) * 0.5 * x * x).abs() < 1e-14);
        }
    }

    #[test]
    fn compatible_quadratic_needs_no_switch() {
        let sol = construct(
            &ident(),
            &BoundaryData::clamped_1d(0.0, 0.0, 1.0, 2.0),
            0.0,
            1.0,
            4.0,
            &ConstructOptions::default(),
        )
        .unwrap();
        assert!(sol.switches.is_empty() && sol.sign0 == 1);
        assert!(verify_implicit(&ident(), &sol, 4.0, 0.0) < 1e-12);
    }

    #[test]
    fn slope_dependent_level() {
        let h = MonotoneH::with_default_delta(parse_profile("slope-weighted").unwrap()).unwrap();
        let sol = construct(
            &h,
            &BoundaryData::clamped_1d(0.0, 0.0, 0.0, 0.0),
            0.0,
            1.0,
            1.0,
            &ConstructOptions::default(),
        )
        .unwrap();
        assert!(res_norm(&sol.endpoint_residual) < 1e-8);
        assert!(verify_implicit(&h, &sol, 1.0, 1e-3) < 1e-6);
    }

    #[test]
    fn json_fields() {
        let sol = construct(
            &ident(),
            &BoundaryData::clamped_1d(0.0, 0.0, 0.0, 0.0),
            0.0,
            1.0,
            1.0,
            &ConstructOptions::default(),
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&sol.to_json()).unwrap();
        assert_eq!(v["C"], 1.0);
        assert_eq!(v["sign0"], 1);
        assert_eq!(v["switches"].as_array().unwrap().len(), 2);
    }
}
