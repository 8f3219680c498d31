use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polefree::baselines;
use polefree::basis;
use polefree::fitting::{self, FitConfig};
use polefree::spectral::{self, CoefficientApprox};
use polefree_bench::{arctan_dataset, expsin_dataset};
use std::hint::black_box;

fn bench_basis_eval(c: &mut Criterion) {
    let mut group = c.benchmark_group("basis_eval");
    for degree in [8usize, 16, 32] {
        group.bench_with_input(BenchmarkId::new("bernstein", degree), &degree, |b, &n| {
            b.iter(|| basis::eval_bernstein_basis(n, black_box(0.372)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("jacobi", degree), &degree, |b, &n| {
            b.iter(|| {
                basis::eval_jacobi_basis(basis::JacobiSpec::chebyshev(), n, black_box(0.372))
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let data = arctan_dataset(500);
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for degree in [6usize, 10] {
        group.bench_with_input(
            BenchmarkId::new("bernstein_nonlinear", degree),
            &degree,
            |b, &n| {
                let mut config = FitConfig::new(n, n);
                config.max_iters = 120;
                b.iter(|| fitting::fit(black_box(&data), &config).unwrap())
            },
        );
    }
    let expsin = expsin_dataset(500);
    group.bench_function("aaa_12_terms", |b| {
        b.iter(|| baselines::aaa_fit(&expsin.points, &expsin.values, 12, 1e-13).unwrap())
    });
    group.finish();
}

fn bench_eigensolve(c: &mut Criterion) {
    let grid = spectral::build_grid(128, [0.0, 1.0]).unwrap();
    let values: Vec<f64> = grid.nodes.iter().map(|&x| (4.0 * x).exp()).collect();
    let problem =
        spectral::assemble_bessel_single(&CoefficientApprox::Values(values), 2.0, 2, &grid)
            .unwrap();
    let mut group = c.benchmark_group("spectral");
    group.sample_size(10);
    group.bench_function("eigensolve_128", |b| {
        b.iter(|| spectral::solve_eigen_positive(black_box(&problem), 10).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_basis_eval, bench_fit, bench_eigensolve);
criterion_main!(benches);
