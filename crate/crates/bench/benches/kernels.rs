use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mera_core::linalg::gaussian_matrix;
use mera_core::{
    adam_step, apply_gate, contract, random_two_qubit_gate, AdamParams, AdamState, ComplexTensor, GateUpdateOptions,
    MeraNetwork, StiefelPoint, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> ComplexTensor {
    ComplexTensor::from_fn(shape, |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn bench_contract(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for chi in [4usize, 8] {
        // isometry-sized operands sharing three bonds
        let a = random_tensor(&[chi, chi, chi, chi], &mut rng);
        let b = random_tensor(&[chi, chi, chi, chi], &mut rng);
        c.bench_function(&format!("contract/chi{chi}"), |bench| {
            bench.iter(|| contract(black_box(&a), black_box(&b), &[(1, 0), (2, 1), (3, 2)]).unwrap())
        });
    }
}

fn bench_rdm(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (levels, chi) in [(2usize, 4usize), (3, 4), (3, 8)] {
        let net = MeraNetwork::build_random(levels, chi, &mut rng).unwrap();
        let q = net.n_qubits() / 2;
        c.bench_function(&format!("rdm/M{levels}_chi{chi}"), |bench| {
            bench.iter(|| net.reduced_density_matrix(black_box(&[q, q + 1])).unwrap())
        });
    }
}

fn bench_apply_gate(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_gate");
    group.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = GateUpdateOptions {
        max_iterations: 100,
        ..GateUpdateOptions::default()
    };
    for chi in [4usize, 8] {
        let net = MeraNetwork::build_product_state(2, chi).unwrap();
        let gate = random_two_qubit_gate((4, 5), &mut rng);
        group.bench_function(format!("chi{chi}"), |bench| {
            bench.iter(|| apply_gate(&net, black_box(&gate.matrix), gate.pair, &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_adam_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (rows, cols) in [(16usize, 16usize), (8, 512)] {
        let w = StiefelPoint::from_polar(&gaussian_matrix(rows, cols, &mut rng)).unwrap();
        let g = gaussian_matrix(rows, cols, &mut rng);
        let state = AdamState::new(&w, AdamParams::default());
        c.bench_function(&format!("adam_step/{rows}x{cols}"), |bench| {
            bench.iter_batched(
                || state.clone(),
                |s| adam_step(&w, black_box(&g), s).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
}

criterion_group!(kernels, bench_contract, bench_rdm, bench_apply_gate, bench_adam_step);
criterion_main!(kernels);
