use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use evmfem::assembly::assemble;
use evmfem::postprocess::{compute_multipliers, oswald_average, postprocess_ptilde};
use evmfem::{
    build_mesh, compute_report, solve, DofMap, OswaldBoundary, SolverConfig,
};
use evmfem_bench::{bench_case, bench_spec};

fn bench_mesh_and_assembly(c: &mut Criterion) {
    let case = bench_case();
    let k = case.permeability();
    let mut group = c.benchmark_group("assemble");
    for coarse_n in [4usize, 8, 16] {
        let spec = bench_spec(coarse_n);
        let mesh = build_mesh(&spec).unwrap();
        let dofmap = DofMap::build(&mesh);
        group.bench_with_input(BenchmarkId::from_parameter(coarse_n), &coarse_n, |b, _| {
            b.iter(|| {
                assemble(
                    &mesh,
                    &dofmap,
                    &k,
                    |x, y| case.source(x, y),
                    |x, y| case.boundary(x, y),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let case = bench_case();
    let k = case.permeability();
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("solve_direct");
    group.sample_size(20);
    for coarse_n in [4usize, 8, 16] {
        let spec = bench_spec(coarse_n);
        let mesh = build_mesh(&spec).unwrap();
        let dofmap = DofMap::build(&mesh);
        let system = assemble(
            &mesh,
            &dofmap,
            &k,
            |x, y| case.source(x, y),
            |x, y| case.boundary(x, y),
        )
        .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(coarse_n), &coarse_n, |b, _| {
            b.iter(|| solve(&system, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_estimators(c: &mut Criterion) {
    let case = bench_case();
    let k = case.permeability();
    let spec = bench_spec(8);
    let mesh = build_mesh(&spec).unwrap();
    let dofmap = DofMap::build(&mesh);
    let system = assemble(
        &mesh,
        &dofmap,
        &k,
        |x, y| case.source(x, y),
        |x, y| case.boundary(x, y),
    )
    .unwrap();
    let solution = solve(&system, &SolverConfig::default()).unwrap();
    let multipliers = compute_multipliers(&mesh, &dofmap, &k, &solution).unwrap();
    let ptilde = postprocess_ptilde(&mesh, &solution, &multipliers);
    let s = oswald_average(&mesh, &ptilde, OswaldBoundary::DirichletData, |x, y| {
        case.boundary(x, y)
    });

    c.bench_function("postprocess_n8", |b| {
        b.iter(|| {
            let m = compute_multipliers(&mesh, &dofmap, &k, &solution).unwrap();
            let pt = postprocess_ptilde(&mesh, &solution, &m);
            oswald_average(&mesh, &pt, OswaldBoundary::DirichletData, |x, y| {
                case.boundary(x, y)
            })
        })
    });

    c.bench_function("estimators_n8", |b| {
        b.iter(|| {
            compute_report(&mesh, &dofmap, &solution, &ptilde, &s, &k, &case, |x, y| {
                case.source(x, y)
            })
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_mesh_and_assembly, bench_solve, bench_estimators);
criterion_main!(benches);
