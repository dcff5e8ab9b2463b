//! Real-valued uplink signal model `Y = √ρ H X + Z`.
//!
//! Column `i` of the aggregated signature matrix H stacks `h̃_{i,j} s_i` over
//! the receive antennas `j`, so N = N_S·N_R.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LcmaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    /// Unit spatial gains.
    Awgn,
    /// i.i.d. standard normal spatial gains, redrawn per block.
    RayleighBlock,
}

/// Spreading signatures with entries from {0, +1, -1}, columns scaled to unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingMatrix {
    raw: Vec<Vec<i8>>,
    normalized: DMatrix<f64>,
}

impl SpreadingMatrix {
    /// Normalizes the columns of a {0, ±1} grid given as rows.
    pub fn from_raw(raw: Vec<Vec<i8>>) -> Result<Self> {
        let ns = raw.len();
        if ns == 0 {
            return Err(LcmaError::InvalidArgument("empty spreading matrix".into()));
        }
        let k = raw[0].len();
        if k == 0 || raw.iter().any(|r| r.len() != k) {
            return Err(LcmaError::Shape("spreading rows differ in length".into()));
        }
        if raw.iter().flatten().any(|v| !matches!(v, -1..=1)) {
            return Err(LcmaError::InvalidArgument("spreading entries must be 0, 1 or -1".into()));
        }
        let mut normalized = DMatrix::zeros(ns, k);
        for c in 0..k {
            let nnz = raw.iter().filter(|r| r[c] != 0).count();
            if nnz == 0 {
                return Err(LcmaError::InvalidArgument(format!("spreading column {c} is all zero")));
            }
            let scale = (nnz as f64).sqrt();
            for r in 0..ns {
                normalized[(r, c)] = raw[r][c] as f64 / scale;
            }
        }
        Ok(Self { raw, normalized })
    }

    /// All-ones 1×K signatures, i.e. no spreading.
    pub fn none(k: usize) -> Self {
        Self::from_raw(vec![vec![1; k]]).expect("non-empty")
    }

    /// The bundled K=10, N_S=4 matrix.
    pub fn builtin_k10_ns4() -> Self {
        parse_spreading(include_str!("../assets/spreading_k10_ns4.txt")).expect("bundled asset parses")
    }

    pub fn ns(&self) -> usize {
        self.normalized.nrows()
    }

    pub fn users(&self) -> usize {
        self.normalized.ncols()
    }

    pub fn raw(&self) -> &[Vec<i8>] {
        &self.raw
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.normalized
    }

    /// Whitespace-separated integers, one row per line.
    pub fn to_text(&self) -> String {
        self.raw
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ") + "\n")
            .collect()
    }
}

pub fn parse_spreading(text: &str) -> Result<SpreadingMatrix> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|f| {
                let v: i64 = f.parse().map_err(|e| LcmaError::Parse {
                    line: idx + 1,
                    msg: format!("{f:?}: {e}"),
                })?;
                if !(-1..=1).contains(&v) {
                    return Err(LcmaError::Parse { line: idx + 1, msg: format!("entry {v} not in {{0, 1, -1}}") });
                }
                Ok(v as i8)
            })
            .collect::<Result<Vec<i8>>>()?;
        if let Some(first) = rows.first() {
            let first: &Vec<i8> = first;
            if first.len() != row.len() {
                return Err(LcmaError::Parse {
                    line: idx + 1,
                    msg: format!("row has {} entries, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LcmaError::Parse { line: 0, msg: "no rows".into() });
    }
    SpreadingMatrix::from_raw(rows)
}

pub fn load_spreading(path: impl AsRef<Path>) -> Result<SpreadingMatrix> {
    parse_spreading(&std::fs::read_to_string(path)?)
}

/// One channel use block: aggregated signatures and per-user SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: DMatrix<f64>,
    rho: f64,
    fading: Fading,
    n_r: usize,
    n_s: usize,
}

impl ChannelRealization {
    /// Wraps an arbitrary N×K matrix (single antenna, no spreading structure).
    pub fn from_matrix(h: DMatrix<f64>, rho: f64) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) || !(rho >= 0.0) || !rho.is_finite() {
            return Err(LcmaError::InvalidArgument("channel entries and SNR must be finite".into()));
        }
        let n = h.nrows();
        Ok(Self { h, rho, fading: Fading::Awgn, n_r: 1, n_s: n })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn fading(&self) -> Fading {
        self.fading
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    /// Receive dimension N.
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Self { rho, ..self.clone() }
    }

    /// Channel restricted to the listed users, in the given order.
    pub fn select_users(&self, users: &[usize]) -> Self {
        let h = DMatrix::from_fn(self.h.nrows(), users.len(), |r, c| self.h[(r, users[c])]);
        Self { h, ..self.clone() }
    }
}

/// Draws the N_R×K spatial gains for one block.
pub fn draw_spatial(n_r: usize, k: usize, fading: Fading, rng: &mut impl Rng) -> DMatrix<f64> {
    match fading {
        Fading::Awgn => DMatrix::from_element(n_r, k, 1.0),
        Fading::RayleighBlock => DMatrix::from_fn(n_r, k, |_, _| rng.sample(StandardNormal)),
    }
}

pub fn build_h(
    spreading: &SpreadingMatrix,
    spatial: &DMatrix<f64>,
    fading: Fading,
    rho: f64,
) -> Result<ChannelRealization> {
    let k = spreading.users();
    if spatial.ncols() != k {
        return Err(LcmaError::Shape(format!(
            "spatial gains for {} users, spreading for {k}",
            spatial.ncols()
        )));
    }
    let (ns, nr) = (spreading.ns(), spatial.nrows());
    let s = spreading.matrix();
    let h = DMatrix::from_fn(ns * nr, k, |row, i| spatial[(row / ns, i)] * s[(row % ns, i)]);
    let mut real = ChannelRealization::from_matrix(h, rho)?;
    real.fading = fading;
    real.n_r = nr;
    real.n_s = ns;
    Ok(real)
}

/// `√ρ H X` with no noise.
pub fn transmit_noise_free(h: &ChannelRealization, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() != h.users() {
        return Err(LcmaError::Shape(format!("{} symbol rows for {} users", x.nrows(), h.users())));
    }
    Ok(h.h() * x * h.rho().sqrt())
}

/// `√ρ H X + Z` with unit-variance Gaussian noise drawn from `rng`.
pub fn transmit_with(h: &ChannelRealization, x: &DMatrix<f64>, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let mut y = transmit_noise_free(h, x)?;
    // column-major fill keeps the draw order independent of nalgebra internals
    for t in 0..y.ncols() {
        for r in 0..y.nrows() {
            let z: f64 = rng.sample(StandardNormal);
            y[(r, t)] += z;
        }
    }
    Ok(y)
}

pub fn transmit(h: &ChannelRealization, x: &DMatrix<f64>, seed: u64) -> Result<DMatrix<f64>> {
    transmit_with(h, x, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Parameters of randomized spreading-sequence generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpreadingGenConfig {
    pub k: usize,
    pub ns: usize,
    pub q: u64,
    /// Linear SNR at which candidates are rated.
    pub rho_design: f64,
    /// Accept once the symmetric rate exceeds this, in bits.
    pub r0: f64,
    pub max_attempts: usize,
    /// Probability that an entry is zeroed.
    pub zero_prob: f64,
    /// Monte Carlo samples per rate estimate.
    pub rate_samples: usize,
    pub seed: u64,
}

impl SpreadingGenConfig {
    pub fn new(k: usize, ns: usize, seed: u64) -> Self {
        Self { k, ns, q: 2, rho_design: 10.0, r0: 0.0, max_attempts: 20, zero_prob: 0.25, rate_samples: 2000, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSpreading {
    pub matrix: SpreadingMatrix,
    pub sym_rate: f64,
    pub attempts: usize,
    /// False when no attempt beat `r0`; `matrix` is then the best one seen.
    pub accepted: bool,
}

/// Sylvester Hadamard matrix of order `2^m`.
pub fn hadamard(order: usize) -> Vec<Vec<i8>> {
    let mut h = vec![vec![1i8]];
    while h.len() < order {
        let n = h.len();
        let mut next = vec![vec![0i8; 2 * n]; 2 * n];
        for r in 0..n {
            for c in 0..n {
                let v = h[r][c];
                next[r][c] = v;
                next[r][c + n] = v;
                next[r + n][c] = v;
                next[r + n][c + n] = -v;
            }
        }
        h = next;
    }
    h
}

/// Random rows and columns of a Hadamard matrix, randomly sparsified, rated
/// by the symmetric rate of the lattice-reduced coefficient choice and
/// redrawn until the rate clears `r0`.
pub fn generate_spreading(cfg: &SpreadingGenConfig) -> Result<GeneratedSpreading> {
    use rand::seq::index::sample;

    if cfg.k == 0 || cfg.ns == 0 || cfg.max_attempts == 0 {
        return Err(LcmaError::InvalidArgument("k, ns and max_attempts must be positive".into()));
    }
    if !(0.0..1.0).contains(&cfg.zero_prob) {
        return Err(LcmaError::InvalidArgument("zero_prob must lie in [0, 1)".into()));
    }
    let order = cfg.k.max(cfg.ns).next_power_of_two();
    let had = hadamard(order);
    let mut best: Option<GeneratedSpreading> = None;
    for attempt in 0..cfg.max_attempts {
        let mut rng = crate::seed::stream_rng(cfg.seed, &[attempt as u64]);
        let mut rows = sample(&mut rng, order, cfg.ns).into_vec();
        rows.sort_unstable();
        let mut cols = sample(&mut rng, order, cfg.k).into_vec();
        cols.sort_unstable();
        let mut raw: Vec<Vec<i8>> = rows.iter().map(|&r| cols.iter().map(|&c| had[r][c]).collect()).collect();
        for c in 0..cfg.k {
            for r in 0..cfg.ns {
                if rng.random_bool(cfg.zero_prob) {
                    raw[r][c] = 0;
                }
            }
            if raw.iter().all(|row| row[c] == 0) {
                let keep = rng.random_range(0..cfg.ns);
                raw[keep][c] = had[rows[keep]][cols[c]];
            }
        }
        let matrix = SpreadingMatrix::from_raw(raw)?;
        let h = build_h(&matrix, &DMatrix::from_element(1, cfg.k, 1.0), Fading::Awgn, cfg.rho_design)?;
        let sel = crate::coeff::select_coefficients(&h, cfg.k, cfg.q)?;
        let est = crate::rates::estimate_rates(
            &h,
            &sel.coefficients,
            cfg.rate_samples,
            crate::rates::Conditioning::FullY,
            crate::seed::derive_seed(cfg.seed, &[attempt as u64, 1]),
        )?;
        let cand = GeneratedSpreading { matrix, sym_rate: est.sym_rate, attempts: attempt + 1, accepted: est.sym_rate > cfg.r0 };
        if cand.accepted {
            return Ok(cand);
        }
        if best.as_ref().is_none_or(|b| cand.sym_rate > b.sym_rate) {
            best = Some(cand);
        }
    }
    let mut best = best.expect("at least one attempt");
    best.attempts = cfg.max_attempts;
    log::warn!("no spreading matrix beat R0={} in {} attempts; best rate {:.4}", cfg.r0, cfg.max_attempts, best.sym_rate);
    Ok(best)
}
