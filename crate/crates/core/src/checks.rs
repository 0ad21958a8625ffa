//! The acceptance suite: ten end-to-end checks, each returning a pass/fail
//! outcome with a one-line detail.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::aronsson::{residual_field, ResidualField};
use crate::error::Result;
use crate::function_space::{power_mean, sup_energy, BoundaryData, DiscreteFunction, Grid};
use crate::implicit_dsolution::{
    construct, verify_implicit, BangBangSolution, ConstructOptions, MonotoneH,
};
use crate::lp_solver::{
    continuation, default_schedule, extension, minimize_ep, ContinuationResult, SolverOptions,
};
use crate::oracle_1d::{
    absolute_minimizer_pure, check_absolute_minimality, cubic_hermite, danskin_trials,
};
use crate::supremand::{
    check_partials_fd, eval, parse_profile, HCompose, IdentityProfile, Jet2, LowerOrderExample,
    PureHessianNorm, SmoothedHessianNorm, SquaredHessian, Supremand, SymMatrix,
};
use crate::young::{dsolution_criterion, EscapeRule, DEFAULT_STEPS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const NAMES: [&str; 10] = [
    "oracle reproduction",
    "p-continuation convergence",
    "quadratic-compatible exactness",
    "Euler-Lagrange decay",
    "Aronsson residual consistency",
    "absolute minimality certification",
    "Danskin inequalities",
    "implicit construction",
    "D-solution certification",
    "structural property suites",
];

/// Runs criterion `id` (1-based).
pub fn run(id: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let res = match id {
        1 => oracle_reproduction(),
        2 => continuation_convergence(),
        3 => quadratic_exactness(seed),
        4 => el_decay(),
        5 => residual_consistency(),
        6 => minimality(seed),
        7 => danskin(seed),
        8 => implicit_construction(),
        9 => dsolution_certification(),
        10 => property_suites(seed),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome {
        id,
        name: NAMES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown"),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(seed: u64) -> Vec<Outcome> {
    (1..=10).map(|id| run(id, seed)).collect()
}

type Check = Result<(bool, String)>;

fn bump_data() -> BoundaryData {
    BoundaryData::clamped_1d(0.0, 0.0, 1.0, 0.0)
}

fn smoothed() -> Arc<dyn Supremand> {
    Arc::new(SmoothedHessianNorm::new(1, 1e-3))
}

fn oracle_reproduction() -> Check {
    let o = absolute_minimizer_pure(0.0, 1.0, 0.0, 0.0, 1.0, 0.0)?;
    let exact = o.s == 4.0 && o.c == Some(0.5);
    let grid = Grid::new_1d(0.0, 1.0, 201)?;
    let opts = SolverOptions {
        smoothing: Some(0.0),
        ..Default::default()
    };
    let res = continuation(
        &smoothed(),
        &grid,
        &bump_data(),
        &[4.0, 16.0, 64.0, 256.0],
        &opts,
    )?;
    let u = res
        .limit()
        .ok_or_else(|| crate::Error::Solver("empty continuation".into()))?;
    let brute = sup_energy(&PureHessianNorm::new(1), u)?;
    let rel = (brute - o.s).abs() / o.s;
    Ok((
        exact && rel <= 0.02 && res.failure.is_none(),
        format!(
            "s = {}, c = {:?}; discrete minimization gives {brute:.5} (rel. {rel:.2e})",
            o.s, o.c
        ),
    ))
}

/// Continuation for the `(0, 0, 1, 0)` problem on 401 nodes, shared by
/// criteria 2 and 4.
pub fn reference_continuation() -> Result<(ContinuationResult, f64)> {
    let grid = Grid::new_1d(0.0, 1.0, 401)?;
    let h = smoothed();
    let opts = SolverOptions {
        smoothing: Some(0.0),
        ..Default::default()
    };
    let res = continuation(&h, &grid, &bump_data(), &default_schedule(), &opts)?;
    let bound = 1.0 + sup_energy(h.as_ref(), &extension(&grid, &bump_data())?)?;
    Ok((res, bound))
}

fn continuation_convergence() -> Check {
    let (res, bound) = reference_continuation()?;
    if let Some(e) = &res.failure {
        return Ok((false, format!("continuation failed: {e}")));
    }
    let last = res.limit().unwrap();
    let sup = sup_energy(smoothed().as_ref(), last)?;
    let ep: Vec<f64> = res.steps.iter().map(|s| s.report.e_p).collect();
    let monotone = ep.windows(2).all(|w| w[1] >= w[0] - 1e-6);
    let bounded = ep.iter().all(|&e| e <= bound);
    let converged = res.steps.iter().filter(|s| s.report.converged).count();
    Ok((
        (3.84..=4.16).contains(&sup) && monotone && bounded,
        format!(
            "final sup energy {sup:.4}; E_p {:.4} -> {:.4} monotone = {monotone}; bound {bound:.3} holds = {bounded}; {converged}/{} steps converged",
            ep[0],
            ep[ep.len() - 1],
            ep.len()
        ),
    ))
}

fn quadratic_exactness(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0003);
    let h: Arc<dyn Supremand> = Arc::new(SquaredHessian::new(1));
    let schedule = [4.0, 16.0, 64.0, 256.0, 1024.0];
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (a, len) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0));
        let b = a + len;
        let (va, sa, q) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-3.0..3.0),
        );
        let exact = move |x: f64| va + sa * (x - a) + 0.5 * q * (x - a) * (x - a);
        let bd = BoundaryData::clamped_1d(va, sa, exact(b), sa + q * len);
        let grid = Grid::new_1d(a, b, 41)?;
        // start away from the answer so the solver has work to do
        let phase = rng.gen_range(0.0..6.0);
        let mut start = extension(&grid, &bd)?.values().to_vec();
        for (k, v) in start.iter_mut().enumerate().take(40).skip(1) {
            *v += 0.05 * len * len * (k as f64 * 0.7 + phase).sin();
        }
        let mut warm = DiscreteFunction::new(grid.clone(), start, bd.clone())?;
        let opts = SolverOptions {
            gtol: 1e-10,
            ..Default::default()
        };
        for &p in &schedule {
            let (u, _) = minimize_ep(&h, &grid, &bd, p, &opts, Some(&warm))?;
            for k in 0..grid.len() {
                worst = worst.max((u.values()[k] - exact(grid.coord(0, k))).abs());
            }
            warm = u;
        }
    }
    Ok((
        worst < 1e-6,
        format!(
            "20 tuples x {} values of p: max nodal error {worst:.2e}",
            schedule.len()
        ),
    ))
}

/// `max |H_X : D(H) (x) D(H)|` over unmasked nodes.
pub fn contracted_quantity(h: &dyn Supremand, u: &DiscreteFunction) -> Result<f64> {
    let r = residual_field(h, u)?;
    Ok((0..r.valid.len())
        .filter(|&k| r.valid[k])
        .map(|k| r.contracted[k].abs())
        .fold(0.0, f64::max))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn el_decay() -> Check {
    let (res, _) = reference_continuation()?;
    let h = smoothed();
    let mut ps = Vec::new();
    let mut qs = Vec::new();
    for s in res.steps.iter().filter(|s| s.p >= 16.0) {
        ps.push(s.p);
        qs.push(contracted_quantity(h.as_ref(), &s.solution)?);
    }
    if ps.len() < 2 || qs.iter().any(|&q| !(q > 0.0)) {
        return Ok((false, format!("not enough data: Q = {qs:?}")));
    }
    let slope = loglog_slope(&ps, &qs);
    let listing: Vec<String> = ps
        .iter()
        .zip(&qs)
        .map(|(p, q)| format!("{p}:{q:.3e}"))
        .collect();
    // the exact 1D Euler-Lagrange solution gives Q_p (p - 1)^2 = const
    let scaled: Vec<f64> = ps
        .iter()
        .zip(&qs)
        .map(|(p, q)| q * (p - 1.0) * (p - 1.0))
        .collect();
    let (lo, hi) = scaled
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(l, h), &v| (l.min(v), h.max(v)));
    Ok((
        (-1.5..=-0.5).contains(&slope),
        format!(
            "log-log slope {slope:.3} over p = 16..1024 (band [-1.5, -0.5]); Q_p (p-1)^2 in [{lo:.3e}, {hi:.3e}]; [{}]",
            listing.join(" ")
        ),
    ))
}

fn fixture(m: usize, cubic: bool) -> Result<DiscreteFunction> {
    let g = Grid::new_1d(0.0, 1.0, m)?;
    if cubic {
        DiscreteFunction::sample(g, |x| x[0].powi(3), |x| vec![3.0 * x[0] * x[0]])
    } else {
        DiscreteFunction::sample(
            g,
            |x| (2.0 * x[0]).sin(),
            |x| vec![2.0 * (2.0 * x[0]).cos()],
        )
    }
}

fn residual_consistency() -> Check {
    let eta: Arc<dyn Supremand> = Arc::new(HCompose::new(1, parse_profile("eta-weighted")?));
    let sq: Arc<dyn Supremand> = Arc::new(SquaredHessian::new(1));
    let mut ok = true;
    let mut notes = Vec::new();
    for (label, h, cubic) in [
        ("x^3/squared", &sq, true),
        ("sin/squared", &sq, false),
        ("x^3/eta-weighted", &eta, true),
        ("sin/eta-weighted", &eta, false),
    ] {
        let d: Vec<f64> = [101, 201, 401, 801]
            .iter()
            .map(|&m| Ok(residual_field(h.as_ref(), &fixture(m, cubic)?)?.max_discrepancy()))
            .collect::<Result<_>>()?;
        let scale = residual_field(h.as_ref(), &fixture(801, cubic)?)?;
        let floor = 1e-9 * max_abs_valid(&scale);
        let ratios: Vec<f64> = d.windows(2).map(|w| w[1] / w[0]).collect();
        let exact = d.iter().all(|&v| v <= floor);
        ok &= exact || ratios.iter().all(|&r| r <= 0.65);
        if exact {
            notes.push(format!(
                "{label} agree to rounding (max {:.1e})",
                d.iter().fold(0.0_f64, |m, &v| m.max(v))
            ));
        } else {
            notes.push(format!(
                "{label} ratios [{}]",
                ratios
                    .iter()
                    .map(|r| format!("{r:.2}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
    }
    let r = residual_field(sq.as_ref(), &fixture(801, true)?)?;
    let mid = 400;
    let rel = (r.contracted[mid] - 7776.0).abs() / 7776.0;
    ok &= rel <= 0.02;
    notes.push(format!(
        "contracted at x = 1/2: {:.4} (rel. {rel:.1e})",
        r.contracted[mid]
    ));
    Ok((ok, notes.join("; ")))
}

fn max_abs_valid(r: &ResidualField) -> f64 {
    (0..r.valid.len())
        .filter(|&k| r.valid[k])
        .map(|k| r.contracted[k].abs().max(r.expanded[k].abs()))
        .fold(0.0, f64::max)
}

fn minimality(seed: u64) -> Check {
    let grid = Grid::new_1d(0.0, 1.0, 401)?;
    let h = grid.spacing(0);
    let u = absolute_minimizer_pure(0.0, 1.0, 0.0, 0.0, 1.0, 0.0)?
        .solution
        .sample(&grid)?;
    let pure = PureHessianNorm::new(1);
    let good = check_absolute_minimality(&pure, &u, 500, seed, 3.0 * h)?;
    let cubic = cubic_hermite(0.0, 1.0, 0.0, 0.0, 1.0, 0.0)?.sample(&grid)?;
    let bad = check_absolute_minimality(&pure, &cubic, 500, seed, 3.0 * h)?;
    Ok((
        good.violations.is_empty() && !bad.violations.is_empty(),
        format!(
            "oracle: {} violations (worst margin {:.2e}); cubic control: {} violations",
            good.violations.len(),
            good.worst_margin,
            bad.violations.len()
        ),
    ))
}

fn danskin(seed: u64) -> Check {
    let grid = Grid::new_1d(0.0, 1.0, 401)?;
    let u = absolute_minimizer_pure(0.0, 1.0, 0.0, 0.0, 1.0, 0.0)?
        .solution
        .sample(&grid)?;
    let s = danskin_trials(smoothed().as_ref(), &u, 100, seed, 5.0 * grid.spacing(0))?;
    Ok((
        s.worst_plus >= -1e-3 && s.worst_minus >= -1e-3,
        format!(
            "worst max L(phi) = {:.3e}, worst max L(-phi) = {:.3e}",
            s.worst_plus, s.worst_minus
        ),
    ))
}

/// The two zigzag solutions of `(u'')^2 = 1` with zero data.
pub fn zigzag_pair() -> Result<(MonotoneH, Vec<BangBangSolution>)> {
    let h = MonotoneH::with_default_delta(Arc::new(IdentityProfile))?;
    let zero = BoundaryData::clamped_1d(0.0, 0.0, 0.0, 0.0);
    let sols = [1, -1]
        .into_iter()
        .map(|s| {
            let opts = ConstructOptions {
                sign0: Some(s),
                ..Default::default()
            };
            construct(&h, &zero, 0.0, 1.0, 1.0, &opts)
        })
        .collect::<Result<_>>()?;
    Ok((h, sols))
}

fn implicit_construction() -> Check {
    let (h, sols) = zigzag_pair()?;
    let mut ok = true;
    let mut notes = Vec::new();
    for s in &sols {
        let sw_ok = s.switches.len() == 2
            && (s.switches[0] - 0.25).abs() < 1e-8
            && (s.switches[1] - 0.75).abs() < 1e-8;
        let end = s.endpoint_residual[0]
            .abs()
            .max(s.endpoint_residual[1].abs());
        let dev = verify_implicit(&h, s, 1.0, 1e-3);
        ok &= sw_ok && end < 1e-8 && dev < 1e-10;
        notes.push(format!(
            "sign {:+}: switches {:?}, endpoint {end:.1e}, deviation {dev:.1e}",
            s.sign0, s.switches
        ));
    }
    let distinct = sols[0]
        .u
        .iter()
        .zip(&sols[1].u)
        .any(|(a, b)| (a - b).abs() > 1e-3);
    ok &= distinct;
    notes.push(format!("distinct = {distinct}"));
    Ok((ok, notes.join("; ")))
}

fn dsolution_certification() -> Check {
    let (h, sols) = zigzag_pair()?;
    let sup = h.supremand();
    let mut ok = true;
    let mut notes = Vec::new();
    for s in &sols {
        let u = s.to_function()?;
        let rep = dsolution_criterion(&sup, &u, &DEFAULT_STEPS, EscapeRule::default(), 1e-6)?;
        let spacing = u.grid().spacing(0);
        let confined = rep.failing_nodes().iter().all(|&k| {
            let x = u.grid().coord(0, k);
            s.switches
                .iter()
                .any(|t| (x - t).abs() <= 2.0 * spacing + 1e-12)
        });
        let frac = rep.pass_fraction();
        ok &= frac >= 0.95 && confined && rep.factorization_defect <= 1e-12;
        notes.push(format!(
            "sign {:+}: {:.1}% of {} nodes pass, failures near switches = {confined}, factorization defect {:.1e}",
            s.sign0,
            100.0 * frac,
            rep.nodes.len(),
            rep.factorization_defect
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn random_jet(rng: &mut impl Rng, n: usize, scale: f64) -> Jet2 {
    let x = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let p = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    let full: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-scale..scale)).collect();
    let mut sym = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            sym[i * n + j] = 0.5 * (full[i * n + j] + full[j * n + i]);
        }
    }
    Jet2::new(
        x,
        rng.gen_range(-scale..scale),
        p,
        SymMatrix::from_full(n, &sym),
    )
}

/// Smooth instances used for gradient checks.
pub fn smooth_instances() -> Result<Vec<Arc<dyn Supremand>>> {
    let mut v: Vec<Arc<dyn Supremand>> = Vec::new();
    for n in [1, 2] {
        v.push(Arc::new(SmoothedHessianNorm::new(n, 0.1)));
        v.push(Arc::new(SquaredHessian::new(n)));
        if let Some(h) = LowerOrderExample::new(n, 0.5, 0.5, 1.0)?.smoothed(0.1) {
            v.push(h);
        }
        for name in ["identity", "square", "eta-weighted", "slope-weighted"] {
            v.push(Arc::new(HCompose::new(n, parse_profile(name)?)));
        }
    }
    Ok(v)
}

/// All built-in instances, smooth or not.
pub fn all_instances() -> Result<Vec<Arc<dyn Supremand>>> {
    let mut v = smooth_instances()?;
    for n in [1, 2] {
        v.push(Arc::new(PureHessianNorm::new(n)));
        v.push(Arc::new(LowerOrderExample::new(n, 0.5, 0.5, 1.0)?));
    }
    Ok(v)
}

fn property_suites(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0010);
    // gradient checks
    let mut worst_fd: f64 = 0.0;
    for h in smooth_instances()? {
        for _ in 0..100 {
            let jet = random_jet(&mut rng, h.dimension(), 2.0);
            worst_fd = worst_fd.max(check_partials_fd(h.as_ref(), &jet, 1e-6)?);
        }
    }
    // extended Jensen for level-convex instances: H(mean X) <= max H(X_i)
    let mut jensen_bad = 0usize;
    let convex: Vec<Arc<dyn Supremand>> = all_instances()?
        .into_iter()
        .filter(|h| h.info().level_convex_in_hess)
        .collect();
    for t in 0..10_000 {
        let h = &convex[t % convex.len()];
        let n = h.dimension();
        let base = random_jet(&mut rng, n, 2.0);
        let k = rng.gen_range(2..8);
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        let mut mean = SymMatrix::zeros(n);
        let mut top = f64::NEG_INFINITY;
        for wi in &w {
            let x = random_jet(&mut rng, n, 2.0).hess;
            top = top.max(eval(h.as_ref(), &base.with_hess(x.clone()))?);
            mean = mean.lerp(1.0, &x, wi / total);
        }
        if eval(h.as_ref(), &base.with_hess(mean))? > top {
            jensen_bad += 1;
        }
    }
    // power-mean monotonicity in p
    let mut pm_bad = 0usize;
    for _ in 0..1000 {
        let len = rng.gen_range(3..50);
        let field: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..10.0)).collect();
        let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mut last = f64::NEG_INFINITY;
        for p in [1.0, 2.0, 4.0, 8.0, 32.0, 128.0, 1024.0, f64::INFINITY] {
            let v = power_mean(&field, &w, p, 1.0)?;
            if v < last - 1e-12 * (1.0 + last.abs()) {
                pm_bad += 1;
            }
            last = v;
        }
    }
    // coercivity lower bounds
    let mut coer_bad = 0usize;
    let coercive: Vec<Arc<dyn Supremand>> = all_instances()?
        .into_iter()
        .filter(|h| h.info().coercivity.is_some())
        .collect();
    for t in 0..10_000 {
        let h = &coercive[t % coercive.len()];
        let jet = random_jet(&mut rng, h.dimension(), 5.0);
        let c = h.info().coercivity.unwrap();
        if eval(h.as_ref(), &jet)? < c.bound(&jet) - 1e-12 {
            coer_bad += 1;
        }
    }
    Ok((
        worst_fd < 1e-5 && jensen_bad == 0 && pm_bad == 0 && coer_bad == 0,
        format!(
            "FD worst rel. error {worst_fd:.1e}; Jensen violations {jensen_bad}/10000; power-mean violations {pm_bad}/1000; coercivity violations {coer_bad}/10000"
        ),
    ))
}
