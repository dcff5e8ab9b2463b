//! Achievable computation rates and reference mutual informations.
//!
//! For a coefficient matrix A the rate of user `i` is bounded by
//! `log2 q - max_l φ(a_{l,i}) H(V_l | ·)` where `φ(a) = 1` for `a ≠ 0 (mod q)`.
//! The conditional entropies are estimated by Monte Carlo with exact
//! posteriors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::channel::ChannelRealization;
use crate::code::PamMapper;
use crate::coeff::CoefficientMatrix;
use crate::error::{LcmaError, Result};
use crate::lf::{build_filter, FilteredPosterior};
use crate::lpnc::{ExhaustiveDetector, DEFAULT_ENUMERATION_CAP};
use crate::seed::stream_rng;
use crate::zq::ZqMatrix;

/// What the bin posterior is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// The full N-dimensional received vector.
    FullY,
    /// The per-stream filter output of the linear-filtering receiver (ϑ = ρ).
    FilteredY,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    /// `H(V_l | ·)` in bits per stream.
    pub cond_entropy: Vec<f64>,
    /// Standard error of each entropy estimate.
    pub std_err: Vec<f64>,
    /// Per-user rate bound in bits per real symbol.
    pub user_rates: Vec<f64>,
    pub sym_rate: f64,
    pub samples: usize,
}

const CHUNK: usize = 1024;

fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
}

/// Per-user and symmetric rate bounds from conditional entropies.
pub fn rates_from_entropies(a: &ZqMatrix, cond_entropy: &[f64]) -> (Vec<f64>, f64) {
    let log_q = (a.modulus() as f64).log2();
    let user_rates: Vec<f64> = (0..a.cols())
        .map(|i| {
            let worst = (0..a.rows())
                .filter(|&l| a.get(l, i) != 0)
                .map(|l| cond_entropy[l])
                .fold(0.0, f64::max);
            log_q - worst
        })
        .collect();
    let sym = user_rates.iter().cloned().fold(f64::INFINITY, f64::min);
    (user_rates, sym)
}

/// Monte Carlo estimate over uniform code symbols and unit Gaussian noise.
/// Deterministic in `seed` regardless of thread count.
pub fn estimate_rates(
    h: &ChannelRealization,
    a: &CoefficientMatrix,
    samples: usize,
    conditioning: Conditioning,
    seed: u64,
) -> Result<RateEstimate> {
    if samples == 0 {
        return Err(LcmaError::InvalidArgument("need at least one sample".into()));
    }
    if a.users() != h.users() {
        return Err(LcmaError::Shape(format!("{} coefficient columns for {} users", a.users(), h.users())));
    }
    let q = a.modulus();
    let k = h.users();
    let n = h.dim();
    enum Post {
        Full(ExhaustiveDetector),
        Filtered(FilteredPosterior),
    }
    let post = match conditioning {
        Conditioning::FullY => Post::Full(ExhaustiveDetector::new(h, a.a_mod(), DEFAULT_ENUMERATION_CAP)?),
        Conditioning::FilteredY => {
            let theta = if h.rho() > 0.0 { h.rho() } else { 1.0 };
            let bank = build_filter(h, a, theta)?;
            Post::Filtered(FilteredPosterior::new(bank, a, DEFAULT_ENUMERATION_CAP)?)
        }
    };
    let amp = PamMapper::new(q).constellation();
    let sr = h.rho().sqrt();
    let l = a.streams();
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = stream_rng(seed, &[ci as u64]);
            let count = CHUNK.min(samples - ci * CHUNK);
            let mut s1 = vec![0.0; l];
            let mut s2 = vec![0.0; l];
            let mut y = vec![0.0; n];
            for _ in 0..count {
                y.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                for i in 0..k {
                    let x = amp[rng.random_range(0..q as usize)] * sr;
                    for (r, yr) in y.iter_mut().enumerate() {
                        *yr += h.h()[(r, i)] * x;
                    }
                }
                let p = match &post {
                    Post::Full(d) => d.apps(&y),
                    Post::Filtered(d) => d.apps(&y),
                };
                for (s, row) in p.iter().enumerate() {
                    let e = entropy_bits(row);
                    s1[s] += e;
                    s2[s] += e * e;
                }
            }
            (s1, s2)
        })
        .collect();
    let mut s1 = vec![0.0; l];
    let mut s2 = vec![0.0; l];
    for (a1, a2) in &sums {
        for s in 0..l {
            s1[s] += a1[s];
            s2[s] += a2[s];
        }
    }
    let m = samples as f64;
    let log_q = (q as f64).log2();
    let cond_entropy: Vec<f64> = s1.iter().map(|v| (v / m).clamp(0.0, log_q)).collect();
    let std_err = s1
        .iter()
        .zip(&s2)
        .map(|(a1, a2)| {
            let mean = a1 / m;
            let var = (a2 / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
            (var / m).sqrt()
        })
        .collect();
    let (user_rates, sym_rate) = rates_from_entropies(a.a_mod(), &cond_entropy);
    Ok(RateEstimate { cond_entropy, std_err, user_rates, sym_rate, samples })
}

/// Gauss-Hermite nodes and weights for `∫ e^{-t²} f(t) dt` (Golub-Welsch).
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(order, order, |i, j| {
        if i + 1 == j || j + 1 == i {
            ((i.max(j)) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

const GH_ORDER: usize = 96;

/// Mutual information of uniform q-PAM over `y = √ρ x + z`, bits per real symbol.
pub fn pam_awgn_mi(q: u64, rho: f64) -> f64 {
    if !(rho > 0.0) {
        return 0.0;
    }
    let amp: Vec<f64> = PamMapper::new(q).constellation().iter().map(|x| x * rho.sqrt()).collect();
    let (nodes, weights) = gauss_hermite(GH_ORDER);
    let norm = std::f64::consts::PI.sqrt();
    let mut penalty = 0.0;
    for &xi in &amp {
        let mut e = 0.0;
        for (&t, &w) in nodes.iter().zip(&weights) {
            let z = std::f64::consts::SQRT_2 * t;
            // log2 Σ_j exp(-((xi - xj + z)² - z²)/2), evaluated stably
            let exps: Vec<f64> = amp.iter().map(|&xj| -((xi - xj + z).powi(2) - z * z) / 2.0).collect();
            let mx = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + exps.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
            e += w * lse / std::f64::consts::LN_2;
        }
        penalty += e / norm;
    }
    ((q as f64).log2() - penalty / q as f64).max(0.0)
}

/// Chi-square test of the bin distribution of each row under uniform symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct BinUniformity {
    pub p_values: Vec<f64>,
    /// Rows rejected at the 1% level.
    pub flagged_rows: Vec<usize>,
}

impl BinUniformity {
    pub fn uniform(&self) -> bool {
        self.flagged_rows.is_empty()
    }
}

pub fn uniform_bin_check(a: &ZqMatrix, samples: usize, seed: u64) -> Result<BinUniformity> {
    if samples == 0 {
        return Err(LcmaError::InvalidArgument("need at least one sample".into()));
    }
    if (0..a.rows()).any(|l| a.row(l).iter().all(|&v| v == 0)) {
        return Err(LcmaError::InvalidArgument("coefficient rows must be non-zero".into()));
    }
    let q = a.modulus() as usize;
    let mut rng = stream_rng(seed, &[]);
    let mut counts = vec![vec![0u64; q]; a.rows()];
    let mut c = vec![0u64; a.cols()];
    for _ in 0..samples {
        c.iter_mut().for_each(|v| *v = rng.random_range(0..q as u64));
        for (l, v) in a.mul_vec(&c)?.into_iter().enumerate() {
            counts[l][v as usize] += 1;
        }
    }
    let expected = samples as f64 / q as f64;
    let dist = ChiSquared::new((q - 1) as f64).map_err(|e| LcmaError::Numerical(e.to_string()))?;
    let p_values: Vec<f64> = counts
        .iter()
        .map(|row| {
            let stat: f64 = row.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
            1.0 - dist.cdf(stat)
        })
        .collect();
    let flagged_rows = (0..a.rows()).filter(|&l| p_values[l] < 0.01).collect();
    Ok(BinUniformity { p_values, flagged_rows })
}
