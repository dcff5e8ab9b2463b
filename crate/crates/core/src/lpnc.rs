//! Symbol-wise APPs of linear coded-sequence combinations in the full
//! N-dimensional receive space.
//!
//! For stream `l` and bin-index `ω`, the APP is the normalized sum of
//! `exp(-‖y - √ρ H x‖² / 2)` over every superposed candidate `x` whose code
//! symbols satisfy `a_l^T ⊗_q c = ω`. The sum runs either over all `q^K`
//! candidates or over a list found by list sphere decoding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::channel::ChannelRealization;
use crate::code::PamMapper;
use crate::error::{LcmaError, Result};
use crate::zq::ZqMatrix;

/// Default cap on `q^K` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;
/// Default LSD list size.
pub const DEFAULT_LIST_SIZE: usize = 50;

fn candidate_count(q: u64, k: usize) -> u128 {
    (q as u128).checked_pow(k as u32).unwrap_or(u128::MAX)
}

fn check_streams(a: &ZqMatrix, k: usize, q: u64) -> Result<()> {
    if a.cols() != k || a.modulus() != q {
        return Err(LcmaError::Shape(format!(
            "coefficients {}x{} over Z_{} for {k} users over Z_{q}",
            a.rows(),
            a.cols(),
            a.modulus()
        )));
    }
    Ok(())
}

/// Exhaustive evaluation with all candidate points and bins precomputed for
/// one channel realization.
#[derive(Debug, Clone)]
pub struct ExhaustiveDetector {
    q: usize,
    dim: usize,
    streams: usize,
    points: Vec<f64>,
    bins: Vec<u32>,
}

impl ExhaustiveDetector {
    pub fn new(h: &ChannelRealization, a: &ZqMatrix, cap: u128) -> Result<Self> {
        let (k, n, q) = (h.users(), h.dim(), a.modulus());
        check_streams(a, k, q)?;
        let size = candidate_count(q, k);
        if size > cap {
            return Err(LcmaError::EnumerationCap { size, cap });
        }
        let size = size as usize;
        let mapper = PamMapper::new(q);
        let amp = mapper.constellation();
        let sr = h.rho().sqrt();
        let l = a.rows();
        let mut points = vec![0.0; size * n];
        let mut bins = vec![0u32; size * l];
        let mut c = vec![0u64; k];
        for idx in 0..size {
            let mut rem = idx;
            for ci in c.iter_mut() {
                *ci = (rem % q as usize) as u64;
                rem /= q as usize;
            }
            let p = &mut points[idx * n..(idx + 1) * n];
            for (i, &ci) in c.iter().enumerate() {
                let x = amp[ci as usize] * sr;
                for (r, pr) in p.iter_mut().enumerate() {
                    *pr += h.h()[(r, i)] * x;
                }
            }
            let combos = a.mul_vec(&c)?;
            for (s, v) in combos.into_iter().enumerate() {
                bins[idx * l + s] = v as u32;
            }
        }
        Ok(Self { q: q as usize, dim: n, streams: l, points, bins })
    }

    /// Squared distances from `y` to every candidate.
    pub fn distances(&self, y: &[f64]) -> Vec<f64> {
        self.points
            .chunks_exact(self.dim)
            .map(|p| p.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum())
            .collect()
    }

    /// Per-stream APP vectors for one received column.
    pub fn apps(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let d = self.distances(y);
        let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut out = vec![vec![0.0; self.q]; self.streams];
        for (idx, &di) in d.iter().enumerate() {
            let w = (-(di - dmin) / 2.0).exp();
            for (s, row) in out.iter_mut().enumerate() {
                row[self.bins[idx * self.streams + s] as usize] += w;
            }
        }
        out.into_iter().map(crate::code::pam_normalize).collect()
    }
}

/// Exhaustive APP for one received column, capped at [`DEFAULT_ENUMERATION_CAP`] candidates.
pub fn app_exhaustive(h: &ChannelRealization, y: &[f64], a: &ZqMatrix) -> Result<Vec<Vec<f64>>> {
    if y.len() != h.dim() {
        return Err(LcmaError::Shape(format!("received vector of length {} for N={}", y.len(), h.dim())));
    }
    Ok(ExhaustiveDetector::new(h, a, DEFAULT_ENUMERATION_CAP)?.apps(y))
}

/// One candidate of the superposed constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Code symbols of all K users.
    pub symbols: Vec<u64>,
    /// Squared Euclidean distance `‖y - √ρ H x‖²`.
    pub dist2: f64,
}

/// Candidates sorted by distance, ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateList {
    pub entries: Vec<Candidate>,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// APPs restricted to the candidates of a list, normalized per stream.
pub fn app_from_list(list: &CandidateList, a: &ZqMatrix) -> Result<Vec<Vec<f64>>> {
    let q = a.modulus() as usize;
    let first = list
        .entries
        .first()
        .ok_or_else(|| LcmaError::InvalidArgument("empty candidate list".into()))?;
    let dmin = list.entries.iter().map(|c| c.dist2).fold(first.dist2, f64::min);
    let mut out = vec![vec![0.0; q]; a.rows()];
    for cand in &list.entries {
        let w = (-(cand.dist2 - dmin) / 2.0).exp();
        for (s, v) in a.mul_vec(&cand.symbols)?.into_iter().enumerate() {
            out[s][v as usize] += w;
        }
    }
    Ok(out.into_iter().map(crate::code::pam_normalize).collect())
}

#[derive(PartialEq)]
struct HeapItem {
    form: f64,
    symbols: Vec<u64>,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.form.total_cmp(&other.form).then_with(|| self.symbols.cmp(&other.symbols))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// List sphere decoder for one channel realization.
///
/// Works on code symbols `c ∈ [0, q-1]^K` directly: with `B = (√ρ/γ) H` and a
/// shifted target, `‖y - √ρ H x‖² = ‖y' - B c‖²`. A pivoted QR `B P = Q R`
/// turns this into `‖z - R c‖² + residual`. Levels without their own row of R
/// (K > rank) are enumerated over the whole alphabet.
#[derive(Debug, Clone)]
pub struct LsdDetector {
    q: u64,
    k: usize,
    rank: usize,
    list_size: usize,
    // permuted position -> user
    order: Vec<usize>,
    // rank × K, permuted columns
    r: Vec<Vec<f64>>,
    // rank × N
    qt: Vec<Vec<f64>>,
    b_shift: Vec<f64>,
}

const RANK_TOL: f64 = 1e-10;
const MAX_RADIUS_DOUBLINGS: usize = 200;

impl LsdDetector {
    pub fn new(h: &ChannelRealization, q: u64, list_size: usize) -> Result<Self> {
        if list_size == 0 {
            return Err(LcmaError::InvalidArgument("list size must be positive".into()));
        }
        let (n, k) = (h.dim(), h.users());
        let mapper = PamMapper::new(q);
        let scale = h.rho().sqrt() / mapper.gamma();
        let b: Vec<Vec<f64>> = (0..k).map(|j| (0..n).map(|r| h.h()[(r, j)] * scale).collect()).collect();
        // y' = y + scale * offset * H 1
        let b_shift: Vec<f64> = (0..n).map(|r| (0..k).map(|j| b[j][r]).sum::<f64>() * mapper.offset()).collect();

        // modified Gram-Schmidt with greedy column pivoting
        let mut resid: Vec<Vec<f64>> = b.clone();
        let mut remaining: Vec<usize> = (0..k).collect();
        let mut order = Vec::with_capacity(k);
        let mut qt: Vec<Vec<f64>> = Vec::new();
        let mut coef: Vec<Vec<(usize, f64)>> = Vec::new();
        let col_scale = b.iter().map(|c| norm2(c)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        while !remaining.is_empty() && qt.len() < n {
            let (pos, best) = remaining
                .iter()
                .enumerate()
                .map(|(p, &j)| (p, norm2(&resid[j])))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("non-empty");
            if best <= col_scale * RANK_TOL {
                break;
            }
            let j = remaining.remove(pos);
            let nrm = best.sqrt();
            let qv: Vec<f64> = resid[j].iter().map(|v| v / nrm).collect();
            let mut row = vec![(j, nrm)];
            for &o in &remaining {
                // two passes for orthogonality
                let mut d = dot(&qv, &resid[o]);
                axpy(&mut resid[o], -d, &qv);
                let d2 = dot(&qv, &resid[o]);
                axpy(&mut resid[o], -d2, &qv);
                d += d2;
                row.push((o, d));
            }
            order.push(j);
            qt.push(qv);
            coef.push(row);
        }
        let rank = qt.len();
        order.extend(remaining);
        let pos_of: Vec<usize> = {
            let mut p = vec![0; k];
            for (i, &u) in order.iter().enumerate() {
                p[u] = i;
            }
            p
        };
        let mut r = vec![vec![0.0; k]; rank];
        for (i, row) in coef.into_iter().enumerate() {
            for (user, v) in row {
                r[i][pos_of[user]] = v;
            }
        }
        Ok(Self { q, k, rank, list_size, order, r, qt, b_shift })
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    /// The `list_size` candidates closest to `y`.
    pub fn list(&self, y: &[f64]) -> Result<CandidateList> {
        if y.len() != self.b_shift.len() {
            return Err(LcmaError::Shape(format!("received vector of length {}", y.len())));
        }
        let yp: Vec<f64> = y.iter().zip(&self.b_shift).map(|(a, b)| a + b).collect();
        let z: Vec<f64> = self.qt.iter().map(|qv| dot(qv, &yp)).collect();
        let residual = (norm2(&yp) - norm2(&z)).max(0.0);
        let total = candidate_count(self.q, self.k);
        let want = (self.list_size as u128).min(total) as usize;
        let upper = self.form_upper_bound(&z);

        // initial radius: total distance 2, i.e. form radius 2 - residual
        let mut radius2 = 2.0 - residual;
        if radius2 <= 0.0 {
            radius2 = self.babai_form(&z) * (1.0 + f64::EPSILON) + f64::EPSILON;
        }
        let mut found = self.search(&z, radius2);
        let mut doublings = 0;
        while found.len() < want {
            if radius2 >= upper || doublings >= MAX_RADIUS_DOUBLINGS {
                radius2 = f64::INFINITY;
            } else {
                radius2 = (radius2 * 2.0).max(f64::MIN_POSITIVE);
                doublings += 1;
            }
            found = self.search(&z, radius2);
            if radius2.is_infinite() {
                break;
            }
        }
        let mut entries: Vec<Candidate> = found
            .into_sorted_vec()
            .into_iter()
            .map(|item| {
                let mut symbols = vec![0; self.k];
                for (p, &user) in self.order.iter().enumerate() {
                    symbols[user] = item.symbols[p];
                }
                Candidate { symbols, dist2: item.form + residual }
            })
            .collect();
        entries.truncate(want);
        Ok(CandidateList { entries })
    }

    pub fn apps(&self, y: &[f64], a: &ZqMatrix) -> Result<Vec<Vec<f64>>> {
        app_from_list(&self.list(y)?, a)
    }

    fn form_upper_bound(&self, z: &[f64]) -> f64 {
        let qmax = (self.q - 1) as f64;
        z.iter()
            .zip(&self.r)
            .map(|(zi, row)| {
                let span: f64 = row.iter().map(|v| v.abs() * qmax).sum();
                (zi.abs() + span).powi(2)
            })
            .sum::<f64>()
            * (1.0 + 1e-9)
            + 1e-9
    }

    // Successive rounding, clamped to the alphabet.
    fn babai_form(&self, z: &[f64]) -> f64 {
        let mut c = vec![(self.q - 1) / 2; self.k];
        let mut form = 0.0;
        for i in (0..self.rank).rev() {
            let rii = self.r[i][i];
            let mut s = z[i];
            for j in (i + 1)..self.k {
                s -= self.r[i][j] * c[j] as f64;
            }
            let center = s / rii;
            c[i] = center.round().clamp(0.0, (self.q - 1) as f64) as u64;
            form += (s - rii * c[i] as f64).powi(2);
        }
        form
    }

    fn search(&self, z: &[f64], radius2: f64) -> BinaryHeap<HeapItem> {
        let mut heap = BinaryHeap::with_capacity(self.list_size + 1);
        let mut c = vec![0u64; self.k];
        self.descend(self.k, 0.0, z, radius2, &mut c, &mut heap);
        heap
    }

    fn bound(&self, radius2: f64, heap: &BinaryHeap<HeapItem>) -> f64 {
        if heap.len() >= self.list_size {
            heap.peek().map_or(radius2, |top| top.form.min(radius2))
        } else {
            radius2
        }
    }

    fn descend(&self, level: usize, pd: f64, z: &[f64], radius2: f64, c: &mut [u64], heap: &mut BinaryHeap<HeapItem>) {
        if level == 0 {
            let item = HeapItem { form: pd, symbols: c.to_vec() };
            if heap.len() < self.list_size {
                heap.push(item);
            } else if heap.peek().is_some_and(|top| item < *top) {
                heap.pop();
                heap.push(item);
            }
            return;
        }
        let i = level - 1;
        if i >= self.rank {
            for s in 0..self.q {
                c[i] = s;
                self.descend(i, pd, z, radius2, c, heap);
            }
            return;
        }
        let row = &self.r[i];
        let mut s = z[i];
        for j in (i + 1)..self.k {
            s -= row[j] * c[j] as f64;
        }
        let rii = row[i];
        let center = s / rii;
        let rem = self.bound(radius2, heap) - pd;
        if rem < 0.0 {
            return;
        }
        let half = rem.sqrt() / rii.abs() * (1.0 + 1e-12) + 1e-12;
        let lo = (center - half).ceil().max(0.0);
        let hi = (center + half).floor().min((self.q - 1) as f64);
        if lo > hi {
            return;
        }
        for sym in (lo as u64)..=(hi as u64) {
            let e = s - rii * sym as f64;
            let npd = pd + e * e;
            if npd <= self.bound(radius2, heap) {
                c[i] = sym;
                self.descend(i, npd, z, radius2, c, heap);
            }
        }
    }
}

/// Convenience wrapper: the `omega_cap` nearest candidates to `y`.
pub fn lsd(h: &ChannelRealization, y: &[f64], q: u64, omega_cap: usize) -> Result<CandidateList> {
    LsdDetector::new(h, q, omega_cap)?.list(y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a += alpha * b);
}
