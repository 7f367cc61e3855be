use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use proxsample::asf::{asf_step, Schedule};
use proxsample::rgo::{rgo_bundle, rgo_exact, rgo_smooth};
use proxsample::{RgoParams, RngStream};
use proxsample_bench::{eta_for, l1, max_affine, quadratic, MU};

fn rgo(c: &mut Criterion) {
    let mut group = c.benchmark_group("rgo");
    for d in [1, 10, 50] {
        let p = l1(d);
        let params = RgoParams::new(eta_for(1.0 / (16.0 * d as f64 * d as f64), MU), 0.0).unwrap();
        let y = vec![0.1; d];
        let mut rng = RngStream::new(1);
        group.bench_with_input(BenchmarkId::new("prox", d), &d, |b, _| {
            b.iter(|| rgo_exact(&p, &y, &params, &mut rng).unwrap())
        });

        let p = max_affine(d, 2 * d + 2, 2);
        let m = p.potential().lipschitz().unwrap();
        let em = 1.0 / (64.0 * m * m * d as f64);
        let params = RgoParams::new(eta_for(em, MU), 1.0 / (32.0 * d as f64)).unwrap();
        group.bench_with_input(BenchmarkId::new("bundle", d), &d, |b, _| {
            b.iter(|| rgo_bundle(&p, &y, &params, &mut rng).unwrap())
        });

        let p = quadratic(d, 2.0);
        let params = RgoParams::new(eta_for(1.0 / (2.0 * d as f64), MU), 1e-6).unwrap();
        group.bench_with_input(BenchmarkId::new("smooth", d), &d, |b, _| {
            b.iter(|| rgo_smooth(&p, &y, &params, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("asf_step");
    for d in [1, 10, 50] {
        let p = max_affine(d, 2 * d + 2, 3);
        let m = p.potential().lipschitz().unwrap();
        let sched = Schedule::strongly_convex(d, 0.1, MU, m, None).unwrap();
        let x = vec![0.0; d];
        let root = RngStream::new(4);
        let mut k = 0;
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| {
                k += 1;
                asf_step(&p, &x, &sched, &root.substream(k)).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, rgo, step);
criterion_main!(benches);
