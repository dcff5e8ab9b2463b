//! Linear-filtering detector.
//!
//! Each stream gets its own projection `ỹ_l = w_l^T y`. Users with a
//! non-zero integer coefficient in the stream are enumerated jointly; the
//! remaining users and the filtered noise are treated as one Gaussian term of
//! variance `σ̃_l² = ρ Σ_{i: ã_{l,i} = 0} ψ_{l,i}² + ‖w_l‖²`.

use nalgebra::DMatrix;

use crate::channel::ChannelRealization;
use crate::code::{pam_normalize, PamMapper};
use crate::coeff::CoefficientMatrix;
use crate::error::{LcmaError, Result};

/// Default cap on the number of jointly enumerated users per stream.
pub const DEFAULT_SUPPORT_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    /// L×N projection rows.
    pub w: DMatrix<f64>,
    /// L×K effective gains `W H`.
    pub psi: DMatrix<f64>,
    /// Per-stream variance of residual interference plus filtered noise.
    pub sigma2: Vec<f64>,
    rho: f64,
}

impl FilterBank {
    /// Wraps an arbitrary L×N filter for the given streams.
    pub fn from_filter(h: &ChannelRealization, a: &CoefficientMatrix, w: DMatrix<f64>) -> Result<Self> {
        if w.ncols() != h.dim() || w.nrows() != a.streams() || a.users() != h.users() {
            return Err(LcmaError::Shape(format!(
                "filter {}x{}, channel {}x{}, {} streams",
                w.nrows(),
                w.ncols(),
                h.dim(),
                h.users(),
                a.streams()
            )));
        }
        let psi = &w * h.h();
        let rho = h.rho();
        let sigma2 = (0..a.streams())
            .map(|l| {
                let interference: f64 = a.a_tilde()[l]
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c == 0)
                    .map(|(i, _)| psi[(l, i)] * psi[(l, i)])
                    .sum();
                rho * interference + w.row(l).norm_squared()
            })
            .collect();
        Ok(Self { w, psi, sigma2, rho })
    }

    pub fn streams(&self) -> usize {
        self.w.nrows()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Filtered noise variance `‖w_l‖²` alone.
    pub fn noise_var(&self, l: usize) -> f64 {
        self.w.row(l).norm_squared()
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        (0..self.streams())
            .map(|l| self.w.row(l).iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Regularized integer-forcing filter `W = ϑ Ã H^T (ϑ H H^T + I)^{-1}`.
///
/// The leading `ϑ` scales the rows so that `ψ_l ≈ ã_l` at high SNR.
pub fn build_filter(h: &ChannelRealization, a: &CoefficientMatrix, theta: f64) -> Result<FilterBank> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(LcmaError::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    if a.users() != h.users() {
        return Err(LcmaError::Shape(format!("{} coefficient columns for {} users", a.users(), h.users())));
    }
    let n = h.dim();
    let hm = h.h();
    let gram = hm * hm.transpose() * theta + DMatrix::identity(n, n);
    let chol = gram
        .cholesky()
        .ok_or_else(|| LcmaError::Numerical("regularized Gram matrix not positive definite".into()))?;
    let at = DMatrix::from_fn(a.streams(), a.users(), |l, i| a.a_tilde()[l][i] as f64);
    // W^T = M^{-1} (ϑ H Ã^T), M symmetric
    let wt = chol.solve(&(hm * at.transpose() * theta));
    FilterBank::from_filter(h, a, wt.transpose())
}

/// Per-stream enumeration tables, built once per realization.
#[derive(Debug, Clone)]
pub struct LfDetector {
    bank: FilterBank,
    q: usize,
    // per stream: noise-free means and bin indices of every support assignment
    means: Vec<Vec<f64>>,
    bins: Vec<Vec<u32>>,
}

impl LfDetector {
    pub fn new(bank: FilterBank, a: &CoefficientMatrix, support_cap: usize) -> Result<Self> {
        if bank.streams() != a.streams() || bank.psi.ncols() != a.users() {
            return Err(LcmaError::Shape("filter bank and coefficients disagree".into()));
        }
        let q = a.modulus();
        let mapper = PamMapper::new(q);
        let amp = mapper.constellation();
        let sr = bank.rho().sqrt();
        let mut means = Vec::with_capacity(a.streams());
        let mut bins = Vec::with_capacity(a.streams());
        for l in 0..a.streams() {
            let supp = a.support(l);
            if supp.len() > support_cap {
                return Err(LcmaError::SupportCap { stream: l, support: supp.len(), cap: support_cap });
            }
            let coefs: Vec<u64> = supp.iter().map(|&i| a.a_mod().get(l, i)).collect();
            let gains: Vec<f64> = supp.iter().map(|&i| bank.psi[(l, i)] * sr).collect();
            let (m, b) = sort_table(enumerate_support(&gains, &coefs, &amp, q));
            means.push(m);
            bins.push(b);
        }
        Ok(Self { bank, q: q as usize, means, bins })
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    /// Per-stream APPs for one received column.
    pub fn apps(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let proj = self.bank.project(y);
        (0..self.bank.streams())
            .map(|l| bin_posterior(proj[l], self.bank.sigma2[l], &self.means[l], &self.bins[l], self.q))
            .collect()
    }
}

// Joint assignments of the listed users: mean Σ g_i x(c_i) and bin Σ a_i c_i mod q.
fn enumerate_support(gains: &[f64], coefs: &[u64], amp: &[f64], q: u64) -> (Vec<f64>, Vec<u32>) {
    let qs = q as usize;
    let mut means = vec![0.0];
    let mut bins = vec![0u32];
    for (g, &a) in gains.iter().zip(coefs) {
        let mut m2 = Vec::with_capacity(means.len() * qs);
        let mut b2 = Vec::with_capacity(means.len() * qs);
        for c in 0..qs {
            for (m, &b) in means.iter().zip(&bins) {
                m2.push(m + g * amp[c]);
                b2.push(((b as u64 + a * c as u64) % q) as u32);
            }
        }
        means = m2;
        bins = b2;
    }
    (means, bins)
}

// Terms more than this far (in exponent) below the largest are dropped; their
// total relative weight is below 4096·e^{-40} < 1e-14.
const EXP_CUTOFF: f64 = 40.0;

// Sorts the means so bin_posterior can scan outward from the nearest one.
fn sort_table((means, bins): (Vec<f64>, Vec<u32>)) -> (Vec<f64>, Vec<u32>) {
    let mut pairs: Vec<(f64, u32)> = means.into_iter().zip(bins).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn bin_posterior(y: f64, var: f64, means: &[f64], bins: &[u32], q: usize) -> Vec<f64> {
    if !(var > 0.0) {
        return vec![1.0 / q as f64; q];
    }
    let scale = 1.0 / (2.0 * var);
    let nearest = match means.binary_search_by(|m| m.total_cmp(&y)) {
        Ok(i) => i,
        Err(i) if i == 0 => 0,
        Err(i) if i == means.len() => i - 1,
        Err(i) => {
            if y - means[i - 1] <= means[i] - y {
                i - 1
            } else {
                i
            }
        }
    };
    let dmin = (y - means[nearest]).powi(2) * scale;
    let mut out = vec![0.0; q];
    for i in (0..=nearest).rev() {
        let d = (y - means[i]).powi(2) * scale - dmin;
        if d > EXP_CUTOFF {
            break;
        }
        out[bins[i] as usize] += (-d).exp();
    }
    for i in (nearest + 1)..means.len() {
        let d = (y - means[i]).powi(2) * scale - dmin;
        if d > EXP_CUTOFF {
            break;
        }
        out[bins[i] as usize] += (-d).exp();
    }
    pam_normalize(out)
}

/// One-shot APP evaluation with the default support cap.
pub fn app_lf(bank: &FilterBank, y: &[f64], a: &CoefficientMatrix) -> Result<Vec<Vec<f64>>> {
    if y.len() != bank.w.ncols() {
        return Err(LcmaError::Shape(format!("received vector of length {}", y.len())));
    }
    Ok(LfDetector::new(bank.clone(), a, DEFAULT_SUPPORT_CAP)?.apps(y))
}

/// Exact posterior of each bin given the filtered observation `ỹ_l` alone:
/// all K users are enumerated and only the filtered noise `‖w_l‖²` remains.
#[derive(Debug, Clone)]
pub struct FilteredPosterior {
    bank: FilterBank,
    q: usize,
    means: Vec<Vec<f64>>,
    bins: Vec<Vec<u32>>,
}

impl FilteredPosterior {
    pub fn new(bank: FilterBank, a: &CoefficientMatrix, cap: u128) -> Result<Self> {
        let q = a.modulus();
        let k = a.users();
        let size = (q as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if size > cap {
            return Err(LcmaError::EnumerationCap { size, cap });
        }
        let amp = PamMapper::new(q).constellation();
        let sr = bank.rho().sqrt();
        let mut means = Vec::new();
        let mut bins = Vec::new();
        for l in 0..a.streams() {
            let gains: Vec<f64> = (0..k).map(|i| bank.psi[(l, i)] * sr).collect();
            let (m, b) = sort_table(enumerate_support(&gains, a.a_mod().row(l), &amp, q));
            means.push(m);
            bins.push(b);
        }
        Ok(Self { bank, q: q as usize, means, bins })
    }

    pub fn apps(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let proj = self.bank.project(y);
        (0..self.bank.streams())
            .map(|l| bin_posterior(proj[l], self.bank.noise_var(l), &self.means[l], &self.bins[l], self.q))
            .collect()
    }
}
