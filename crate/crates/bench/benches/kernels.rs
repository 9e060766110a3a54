use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use kpp_shift::eigen::dirichlet_eig;
use kpp_shift::pde::{initial_bump, Frame, Grid1D, Scheme, Solver, SolverConfig};
use kpp_shift::verify::{self, CheckConfig};
use kpp_shift::{speeds, Case, ChiProfile, Parameters};

fn solver_steps(c: &mut Criterion) {
    let p = Parameters::benchmark(Case::Decreasing, 1.5);
    let chi = ChiProfile::logistic(&p).unwrap();
    let grid = Grid1D::new(-100.0, 450.0, 5501).unwrap();
    let mut group = c.benchmark_group("solver_step");
    group.throughput(Throughput::Elements(grid.nx as u64));
    for (name, scheme, frame) in [
        ("explicit_lab", Scheme::ExplicitEuler, Frame::Lab),
        ("crank_nicolson_lab", Scheme::CrankNicolson, Frame::Lab),
        ("backward_euler_comoving", Scheme::BackwardEuler, Frame::Comoving),
    ] {
        let cfg = SolverConfig { scheme, frame, ..SolverConfig::default() };
        let f0 = initial_bump(&grid, 0.0, 5.0, 1.0).unwrap();
        let mut s = Solver::new(f0, cfg, &p, &chi).unwrap();
        group.bench_function(name, |b| b.iter(|| s.step().unwrap()));
    }
    group.finish();
}

fn dirichlet(c: &mut Criterion) {
    let p = Parameters::benchmark(Case::Decreasing, 1.5);
    let chi = ChiProfile::logistic(&p).unwrap();
    let mut group = c.benchmark_group("dirichlet_eig");
    for nx in [801, 3201] {
        group.bench_with_input(BenchmarkId::from_parameter(nx), &nx, |b, &nx| {
            b.iter(|| dirichlet_eig(20.0, nx, &p, &chi).unwrap().mu_d)
        });
    }
    group.finish();
}

fn speed_theory(c: &mut Criterion) {
    let p = Parameters::benchmark(Case::Increasing, 3.0);
    c.bench_function("spreading_speed", |b| b.iter(|| speeds::spreading_speed(black_box(&p)).unwrap()));
    c.bench_function("g_root", |b| b.iter(|| speeds::g_root(black_box(&p)).unwrap()));
}

fn sign_check(c: &mut Criterion) {
    let p = Parameters::benchmark(Case::Increasing, 3.0);
    let chi = ChiProfile::logistic(&p).unwrap();
    let w = verify::case2_super_anomalous(&p, &chi, None, None, 1.0).unwrap();
    let cfg = CheckConfig { n_times: 20, n_positions: 500, ..CheckConfig::default() };
    let mut group = c.benchmark_group("comparison_check");
    group.throughput(Throughput::Elements((cfg.n_times * cfg.n_positions) as u64));
    group.bench_function("case2_super_anomalous", |b| b.iter(|| verify::check(&w, &p, &chi, &cfg).verdict));
    group.finish();
}

criterion_group!(benches, solver_steps, dirichlet, speed_theory, sign_check);
criterion_main!(benches);
