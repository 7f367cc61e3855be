use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use proxsample::bundle::{run_pbs_with, solve_model_subproblem, BundleOptions};
use proxsample::{eta_mu, Cut, CutPolicy, RngStream};
use proxsample_bench::{max_affine, MU};

fn pbs(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_pbs");
    let p = max_affine(20, 60, 5);
    let m = p.potential().lipschitz().unwrap();
    let eta = 1.0 / (64.0 * m * m * 20.0);
    let em = eta_mu(eta, MU);
    let y = RngStream::new(6).normal_vec(20).iter().map(|v| 0.01 * v).collect::<Vec<_>>();
    for scale in [1.0, 1e-2, 1e-4] {
        for policy in [CutPolicy::Minimal, CutPolicy::Full] {
            let opts = BundleOptions {
                cut_policy: policy,
                ..Default::default()
            };
            let delta = scale * em * m * m;
            group.bench_with_input(BenchmarkId::new(format!("{policy:?}"), scale), &delta, |b, &delta| {
                b.iter(|| run_pbs_with(&p, &y, eta, delta, &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn qp(c: &mut Criterion) {
    let mut group = c.benchmark_group("model_qp");
    for k in [2, 8, 32] {
        let d = 10;
        let mut rng = RngStream::new(7);
        let p = max_affine(d, k, 8);
        let cuts: Vec<_> = (0..k)
            .map(|_| {
                let u = rng.normal_vec(d);
                Cut::at(p.potential(), &u)
            })
            .collect();
        let y = rng.normal_vec(d);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| solve_model_subproblem(&cuts, &y, p.x0(), 0.05, MU).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pbs, qp);
criterion_main!(benches);
