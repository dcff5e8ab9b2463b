#![allow(dead_code)]

use lcma::channel::ChannelRealization;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn realization(n: usize, k: usize, rho: f64, rng: &mut impl Rng) -> ChannelRealization {
    ChannelRealization::from_matrix(gaussian_matrix(n, k, rng), rho).unwrap()
}

pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// One received column: √ρ H x(c) + z.
pub fn receive(h: &ChannelRealization, c: &[u64], q: u64, rng: &mut impl Rng) -> Vec<f64> {
    (0..h.dim())
        .map(|r| {
            let s: f64 = c.iter().enumerate().map(|(i, &ci)| h.h()[(r, i)] * lcma_oracles::pam(ci, q)).sum();
            h.rho().sqrt() * s + rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

pub fn tv(p: &[f64], r: &[f64]) -> f64 {
    lcma_oracles::total_variation(p, r)
}
