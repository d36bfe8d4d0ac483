use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use fvns::mesh::{Mesh, Rect};
use fvns::operators::assemble_pressure_stiffness;
use fvns::par;
use fvns::quadrature::triangle_average;
use fvns::scheme::{self, Discretization, RunConfig};
use fvns::verification::builtin_mms;

fn mesh(n: usize) -> Mesh {
    Mesh::generate_structured(n, n, Rect::UNIT).unwrap()
}

fn vector(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7919) % 1000) as f64 / 1000.0 - 0.5).collect()
}

fn matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("matvec");
    for n in [32, 64, 128] {
        let m = mesh(n);
        let a = assemble_pressure_stiffness(&m);
        let x = vector(a.ncols());
        g.bench_with_input(BenchmarkId::new("parallel", a.nrows()), &x, |b, x| b.iter(|| a.matvec(black_box(x))));
        g.bench_with_input(BenchmarkId::new("serial", a.nrows()), &x, |b, x| {
            b.iter(|| a.matvec_serial(black_box(x)))
        });
    }
    g.finish();
}

fn reductions(c: &mut Criterion) {
    let mut g = c.benchmark_group("dot");
    for n in [1 << 12, 1 << 16, 1 << 20] {
        let (x, y) = (vector(n), vector(n + 1)[1..].to_vec());
        g.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| b.iter(|| par::dot(black_box(&x), &y)));
        g.bench_with_input(BenchmarkId::new("serial", n), &n, |b, _| {
            b.iter(|| par::serial::dot(black_box(&x), &y))
        });
    }
    g.finish();
}

fn cell_quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("cell_quadrature");
    let f = |x: [f64; 2]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos();
    for n in [32, 64, 128] {
        let m = mesh(n);
        let cells = m.n_cells();
        g.bench_function(BenchmarkId::new("parallel", cells), |b| {
            b.iter(|| par::map(cells, |t| triangle_average(m.triangle_points(t), f)))
        });
        g.bench_function(BenchmarkId::new("serial", cells), |b| {
            b.iter(|| par::serial::map(cells, |t| triangle_average(m.triangle_points(t), f)))
        });
    }
    g.finish();
}

fn time_steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_ten_steps");
    g.sample_size(10);
    let mms = builtin_mms(100.0).unwrap();
    let cfg = RunConfig {
        k: 0.01,
        t_end: 0.1,
        ..RunConfig::default()
    };
    for n in [16, 32] {
        let m = mesh(n);
        let disc = Discretization::new(&m);
        g.bench_function(BenchmarkId::from_parameter(m.n_cells()), |b| {
            b.iter(|| scheme::run(&cfg, &mms, &disc, &mut []).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, matvec, reductions, cell_quadrature, time_steps);
criterion_main!(benches);
