//! Microbenchmarks for the kernels that dominate training time: the two
//! integrators, the reverse pass, the symmetric-skew materialization, and the
//! eigensolvers used by certificates and traces.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::Rng;

use liprnn_core::autodiff::{batch_gradients, Target};
use liprnn_core::cell::{forward, CellSpec, LipschitzCell, Scheme, Sequence, Variant};
use liprnn_core::linalg::{general_eigs, sym_eigs, DenseMatrix};
use liprnn_core::rng::{stream, stream_rng};

const N: usize = 64;
const T: usize = 98;

fn bench_cell(scheme: Scheme) -> LipschitzCell {
    let spec = CellSpec {
        n: N,
        p: 8,
        d_out: 10,
        beta: 0.75,
        gamma_a: 0.001,
        gamma_w: 0.001,
        alpha: 1.0,
        dt: 0.03,
        scheme,
        variant: Variant::Lipschitz,
        init_sigma: 0.1 / N as f64,
    };
    let mut rng = stream_rng(7, stream::INIT);
    LipschitzCell::random(&spec, &mut rng).unwrap()
}

fn bench_sequence() -> Sequence {
    let mut rng = stream_rng(7, stream::TASK_GEN);
    Sequence::new(8, (0..8 * T).map(|_| rng.gen::<f64>()).collect())
}

fn integrators(c: &mut Criterion) {
    let seq = bench_sequence();
    for (label, scheme) in [("euler", Scheme::Euler), ("rk2", Scheme::Rk2)] {
        let cell = bench_cell(scheme);
        c.bench_function(&format!("forward_{label}_n{N}_t{T}"), |b| {
            b.iter(|| forward(black_box(&cell), black_box(&seq), None).unwrap())
        });
    }
}

fn reverse_pass(c: &mut Criterion) {
    let cell = bench_cell(Scheme::Euler);
    let seq = bench_sequence();
    let target = Target::Class(3);
    let items = vec![(&seq, &target)];
    c.bench_function(&format!("grad_euler_n{N}_t{T}"), |b| {
        b.iter(|| batch_gradients(black_box(&cell), black_box(&items)).unwrap())
    });
}

fn materialization(c: &mut Criterion) {
    let cell = bench_cell(Scheme::Euler);
    c.bench_function(&format!("materialize_n{N}"), |b| {
        b.iter(|| black_box(&cell).dynamics())
    });
}

fn eigensolvers(c: &mut Criterion) {
    let mut rng = stream_rng(7, stream::SWEEP);
    let m = DenseMatrix::from_fn(N, N, |_, _| rng.gen::<f64>() - 0.5);
    let sym = m.symmetric_part().unwrap();
    c.bench_function(&format!("sym_eigs_n{N}"), |b| {
        b.iter(|| sym_eigs(black_box(&sym)).unwrap())
    });
    c.bench_function(&format!("general_eigs_n{N}"), |b| {
        b.iter(|| general_eigs(black_box(&m)).unwrap())
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(20);
    targets = integrators, reverse_pass, materialization, eigensolvers
}
criterion_main!(kernels);
