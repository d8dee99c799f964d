use std::hint::black_box;

use charsum_bench::moduli;
use charsum_core::charsum::{class_number_and_profile, prefix_sums};
use charsum_core::fq::{fq_theorem5_all, k_core_all};
use charsum_core::ntcore::{jacobi_odd, ChiStream};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn bench_jacobi(c: &mut Criterion) {
    let q = 1_000_003u64;
    c.bench_function("jacobi_odd/1000 residues", |b| {
        b.iter(|| (1..=1000u64).map(|n| jacobi_odd(black_box(n), q) as i64).sum::<i64>())
    });
}

fn bench_chi_stream(c: &mut Criterion) {
    let mut g = c.benchmark_group("chi_stream");
    for chi in moduli(&[10_000, 1_000_000]) {
        let q = chi.modulus();
        g.throughput(Throughput::Elements(q / 2));
        g.bench_with_input(BenchmarkId::from_parameter(q), &chi, |b, chi| {
            b.iter(|| {
                let mut s = ChiStream::new(chi, q / 2);
                let mut acc = 0i64;
                while let Some((_, block)) = s.next_block() {
                    acc += block.iter().map(|&x| x as i64).sum::<i64>();
                }
                acc
            })
        });
    }
    g.finish();
}

fn bench_w_profile(c: &mut Criterion) {
    let mut g = c.benchmark_group("w_profile");
    for chi in moduli(&[10_000, 1_000_000]) {
        let q = chi.modulus();
        g.throughput(Throughput::Elements(q / 2));
        g.bench_with_input(BenchmarkId::new("bitmap", q), &chi, |b, chi| {
            b.iter(|| class_number_and_profile(chi).unwrap().1.min_w)
        });
        g.bench_with_input(BenchmarkId::new("prefix_sums", q), &chi, |b, chi| {
            b.iter(|| prefix_sums(chi, q / 2, false).unwrap().a())
        });
    }
    g.finish();
}

fn bench_closed_forms(c: &mut Criterion) {
    let mut g = c.benchmark_group("closed_forms");
    for chi in moduli(&[10_000, 100_000]) {
        let q = chi.modulus();
        g.bench_with_input(BenchmarkId::new("test_pq_p43", q), &chi, |b, chi| {
            b.iter(|| fq_theorem5_all(43, chi).unwrap().len())
        });
        g.bench_with_input(BenchmarkId::new("k_core_all", q), &chi, |b, chi| b.iter(|| k_core_all(chi).unwrap().len()));
    }
    g.finish();
}

criterion_group!(benches, bench_jacobi, bench_chi_stream, bench_w_profile, bench_closed_forms);
criterion_main!(benches);
