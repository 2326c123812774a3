use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mdiqkd_core::numerics::bessel_i0;
use mdiqkd_core::oracle::evolve_single_photon_pair;
use mdiqkd_core::params::derive_intensity;
use mdiqkd_core::postselect::conditional_qber;
use mdiqkd_core::sweep::{optimize_mu_at, run_sweep, Setup};
use mdiqkd_core::{ExperimentParams, MuChoice, PhasePartition, QuadratureSpec, Scheme, SourceIntensities, SweepSpec};

fn numerics(c: &mut Criterion) {
    c.bench_function("bessel_i0", |b| b.iter(|| bessel_i0(black_box(0.37)).unwrap()));
}

fn closed_forms(c: &mut Criterion) {
    let params = ExperimentParams::table_one_at_loss(20.0).unwrap();
    let di = derive_intensity(&params, &SourceIntensities::new(0.3, 0.3).unwrap());
    let part = PhasePartition::reference(8).unwrap();
    let quad = QuadratureSpec::default();
    c.bench_function("conditional_qber N=8", |b| {
        b.iter(|| conditional_qber(black_box(&di), params.e_d, part, &quad).unwrap())
    });
    c.bench_function("optimize_mu_at xy-postselect N=8", |b| {
        b.iter(|| optimize_mu_at(black_box(&params), Scheme::XyPostselect, 8, &quad).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    c.bench_function("evolve_single_photon_pair", |b| {
        b.iter(|| evolve_single_photon_pair(black_box(0.4), black_box(2.9), 0.1, 0.2, 1e-6))
    });
}

fn sweep(c: &mut Criterion) {
    let spec = SweepSpec {
        scheme: Scheme::XyPostselect,
        loss_grid: (0..=8).map(|i| 5.0 * i as f64).collect(),
        n_partitions: 8,
        mu: MuChoice::Optimize,
        quadrature: QuadratureSpec::default(),
    };
    let setup = Setup::default();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("xy-postselect 0-40 dB optimized", |b| b.iter(|| run_sweep(&spec, &setup).unwrap()));
    group.finish();
}

criterion_group!(benches, numerics, closed_forms, oracle, sweep);
criterion_main!(benches);
