use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use linfvar_core::aronsson::residual_field;
use linfvar_core::function_space::{jet_field, lp_energy, BoundaryData, DiscreteFunction, Grid};
use linfvar_core::implicit_dsolution::{construct, ConstructOptions, MonotoneH};
use linfvar_core::lp_solver::{minimize_ep, SolverOptions};
use linfvar_core::oracle_1d::absolute_minimizer_pure;
use linfvar_core::supremand::{IdentityProfile, SmoothedHessianNorm, SquaredHessian, Supremand};
use linfvar_core::young::{dsolution_criterion, EscapeRule, DEFAULT_STEPS};

fn sin_1d(m: usize) -> DiscreteFunction {
    let grid = Grid::new_1d(0.0, 1.0, m).unwrap();
    DiscreteFunction::sample(
        grid,
        |x| (2.0 * x[0]).sin(),
        |x| vec![2.0 * (2.0 * x[0]).cos()],
    )
    .unwrap()
}

fn bump_2d(m: usize) -> DiscreteFunction {
    let grid = Grid::new_2d((0.0, 1.0), (0.0, 1.0), (m, m)).unwrap();
    DiscreteFunction::sample(
        grid,
        |x| (x[0] * x[1]).sin(),
        |x| vec![x[1] * (x[0] * x[1]).cos(), x[0] * (x[0] * x[1]).cos()],
    )
    .unwrap()
}

fn jets(c: &mut Criterion) {
    let mut g = c.benchmark_group("jet_field");
    for m in [201, 801] {
        let u = sin_1d(m);
        g.bench_with_input(BenchmarkId::new("1d", m), &u, |b, u| {
            b.iter(|| jet_field(black_box(u)).unwrap())
        });
    }
    let u = bump_2d(41);
    g.bench_function("2d/41x41", |b| b.iter(|| jet_field(black_box(&u)).unwrap()));
    g.finish();
}

fn energies(c: &mut Criterion) {
    let h = SmoothedHessianNorm::new(1, 1e-3);
    let u = sin_1d(801);
    c.bench_function("lp_energy/1d/801/p=64", |b| {
        b.iter(|| lp_energy(&h, black_box(&u), 64.0, 1.0).unwrap())
    });
}

fn residuals(c: &mut Criterion) {
    let h = SquaredHessian::new(1);
    let u = sin_1d(801);
    c.bench_function("residual_field/1d/801", |b| {
        b.iter(|| residual_field(&h, black_box(&u)).unwrap())
    });
    let h2 = SquaredHessian::new(2);
    let u2 = bump_2d(41);
    c.bench_function("residual_field/2d/41x41", |b| {
        b.iter(|| residual_field(&h2, black_box(&u2)).unwrap())
    });
}

fn solver(c: &mut Criterion) {
    let h: Arc<dyn Supremand> = Arc::new(SmoothedHessianNorm::new(1, 1e-2));
    let grid = Grid::new_1d(0.0, 1.0, 101).unwrap();
    let g = BoundaryData::clamped_1d(0.0, 0.0, 1.0, 0.0);
    let opts = SolverOptions {
        smoothing: Some(0.0),
        ..Default::default()
    };
    let mut group = c.benchmark_group("minimize_ep");
    group.sample_size(10);
    group.bench_function("1d/101/p=16", |b| {
        b.iter(|| minimize_ep(&h, &grid, &g, 16.0, &opts, None).unwrap())
    });
    group.finish();
}

fn constructions(c: &mut Criterion) {
    let h = MonotoneH::with_default_delta(Arc::new(IdentityProfile)).unwrap();
    let zero = BoundaryData::clamped_1d(0.0, 0.0, 0.0, 0.0);
    let opts = ConstructOptions {
        sign0: Some(1),
        ..Default::default()
    };
    let mut group = c.benchmark_group("implicit");
    group.sample_size(10);
    group.bench_function("construct/zigzag", |b| {
        b.iter(|| construct(&h, &zero, 0.0, 1.0, 1.0, &opts).unwrap())
    });
    let sol = construct(&h, &zero, 0.0, 1.0, 1.0, &opts).unwrap();
    let u = sol.to_function().unwrap();
    let sup = h.supremand();
    group.bench_function("dsolution_criterion/zigzag", |b| {
        b.iter(|| {
            dsolution_criterion(
                &sup,
                black_box(&u),
                &DEFAULT_STEPS,
                EscapeRule::default(),
                1e-6,
            )
            .unwrap()
        })
    });
    group.finish();
    c.bench_function("oracle/pure", |b| {
        b.iter(|| absolute_minimizer_pure(0.0, 1.0, black_box(0.3), -1.0, 1.0, 0.5).unwrap())
    });
}

criterion_group!(benches, jets, energies, residuals, solver, constructions);
criterion_main!(benches);
