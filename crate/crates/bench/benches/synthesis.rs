use std::hint::black_box;

use coupled_consensus::{
    assign_gain, build_coupling, check_positive_real, compute_kz, positive_real_gain, solve_care, Complex64, DMatrix,
    GainSpec,
};
use coupled_consensus_bench::{reference_plant, ring_network};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn coupling(c: &mut Criterion) {
    let mut group = c.benchmark_group("coupling");
    for n in [5, 20, 50] {
        let net = ring_network(n, 0.4, 0.2);
        group.bench_with_input(BenchmarkId::new("build_and_split", n), &net, |b, net| {
            b.iter(|| compute_kz(&build_coupling(black_box(net)).unwrap()).unwrap())
        });
    }
    group.finish();
}

fn gains(c: &mut Criterion) {
    let plant = reference_plant();
    let spec = GainSpec::new(vec![Complex64::new(-0.19665, 0.0)], vec![0.9306]).unwrap();
    c.bench_function("assign_gain", |b| b.iter(|| assign_gain(black_box(&plant), &spec).unwrap()));

    let q = DMatrix::identity(2, 2);
    c.bench_function("solve_care", |b| b.iter(|| solve_care(black_box(&plant), 0.5, &q).unwrap()));

    let kz = compute_kz(&build_coupling(&ring_network(5, 0.4, 0.2)).unwrap()).unwrap();
    let gain = positive_real_gain(&plant, &kz, &q).unwrap();
    c.bench_function("positive_real_certificate", |b| {
        b.iter(|| check_positive_real(black_box(&plant), &gain, kz.k).unwrap())
    });
}

criterion_group!(benches, coupling, gains);
criterion_main!(benches);
