#![allow(dead_code)]

use pol_core::experiments::{Desk, DeskConfig};
use pol_core::proof::{create_pol, ProveOutput, StartState};
use pol_core::sgd::NoiseModel;

/// 3 epochs of 10 steps on a small blob problem; proofs take milliseconds.
pub fn small_desk() -> Desk {
    DeskConfig {
        layer_dims: vec![8, 16, 3],
        n: 240,
        classes: 3,
        batch_size: 24,
        epochs: 3,
        k: 2,
        ..Default::default()
    }
    .build()
    .unwrap()
}

pub fn prove_with_noise(desk: &Desk, seed: u64, k: usize, noise: NoiseModel) -> ProveOutput {
    let hyper = desk.hyper(seed);
    let mut params = desk.prove_params(&hyper, k).unwrap();
    params.noise = noise;
    create_pol(&desk.arch, &desk.dataset, &hyper, &params, StartState::Fresh).unwrap()
}
