//! Ring coded modulation: q-ary linear codes over Z_q, the one-to-one PAM
//! mapping and q-ary belief-propagation decoding.

mod bp;
mod io;
mod pam;

pub use bp::{bp_posteriors, decode_bp, BpOutcome, DEFAULT_MAX_ITERS};
pub use io::{format_code, parse_code, read_code, write_code};
pub use pam::{AppSequence, PamMapper};
pub(crate) use pam::normalize as pam_normalize;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LcmaError, Result};
use crate::zq::{self, ZqMatrix};

/// One non-zero entry of a sparse parity-check row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckEntry {
    pub col: usize,
    pub value: u64,
}

/// A q-ary linear code `c = G ⊗_q b` together with a sparse parity-check matrix.
#[derive(Debug, Clone)]
pub struct RingCode {
    q: u64,
    n: usize,
    k: usize,
    generator: ZqMatrix,
    checks: Vec<Vec<CheckEntry>>,
    left_inverse: ZqMatrix,
}

impl RingCode {
    /// Assembles a code from its generator (n×k) and sparse parity-check rows.
    ///
    /// Fails unless every check annihilates every generator column and the
    /// generator has a left inverse over Z_q.
    pub fn from_parts(generator: ZqMatrix, checks: Vec<Vec<CheckEntry>>) -> Result<Self> {
        let (n, k, q) = (generator.rows(), generator.cols(), generator.modulus());
        if k == 0 || k > n {
            return Err(LcmaError::Construction(format!("invalid dimensions n={n}, k={k}")));
        }
        for (r, row) in checks.iter().enumerate() {
            for e in row {
                if e.col >= n || e.value == 0 || e.value >= q {
                    return Err(LcmaError::Construction(format!(
                        "check {r} has invalid entry at column {} value {}",
                        e.col, e.value
                    )));
                }
            }
        }
        let code_probe = Self {
            q,
            n,
            k,
            generator: generator.clone(),
            checks,
            left_inverse: ZqMatrix::zeros(k, n, q),
        };
        for j in 0..k {
            let col: Vec<u64> = (0..n).map(|t| generator.get(t, j)).collect();
            if !code_probe.syndrome_is_zero(&col) {
                return Err(LcmaError::Construction(format!(
                    "generator column {j} violates the parity checks"
                )));
            }
        }
        let rr = zq::row_reduce_mod(&generator);
        if rr.rank() != k {
            return Err(LcmaError::Construction(
                "generator has no left inverse over Z_q".into(),
            ));
        }
        let first_k: Vec<usize> = (0..k).collect();
        let left_inverse = rr.q_row.select_rows(&first_k);
        Ok(Self { left_inverse, ..code_probe })
    }

    /// Builds a code from a dense parity-check matrix, deriving a systematic
    /// generator by unit-pivot elimination. The parity-check must have full
    /// unit rank.
    pub fn from_parity_check(h: &ZqMatrix) -> Result<Self> {
        let (m, n, q) = (h.rows(), h.cols(), h.modulus());
        if m >= n {
            return Err(LcmaError::Construction(format!("{m} checks for length {n}")));
        }
        let rr = zq::row_reduce_mod(h);
        if rr.rank() != m {
            return Err(LcmaError::Construction(format!(
                "parity-check unit rank {} below {m}",
                rr.rank()
            )));
        }
        let info: Vec<usize> = (0..n).filter(|c| !rr.pivots.contains(c)).collect();
        let k = info.len();
        let mut g = ZqMatrix::zeros(n, k, q);
        for (j, &col) in info.iter().enumerate() {
            g.set(col, j, 1);
            for (r, &pc) in rr.pivots.iter().enumerate() {
                let v = rr.echelon.get(r, col);
                g.set(pc, j, (q - v) % q);
            }
        }
        let checks = (0..m)
            .map(|r| {
                (0..n)
                    .filter(|&c| h.get(r, c) != 0)
                    .map(|c| CheckEntry { col: c, value: h.get(r, c) })
                    .collect()
            })
            .collect();
        Self::from_parts(g, checks)
    }

    /// Length-n repetition code.
    pub fn repetition(q: u64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(LcmaError::Construction("repetition code needs n >= 2".into()));
        }
        let g = ZqMatrix::new(n, 1, q, vec![1; n])?;
        let checks = (1..n)
            .map(|t| vec![CheckEntry { col: 0, value: 1 }, CheckEntry { col: t, value: q - 1 }])
            .collect();
        Self::from_parts(g, checks)
    }

    /// Length-n single-parity-check code: the last symbol makes the sum zero.
    pub fn single_parity_check(q: u64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(LcmaError::Construction("single-parity-check code needs n >= 2".into()));
        }
        let k = n - 1;
        let mut g = ZqMatrix::zeros(n, k, q);
        for j in 0..k {
            g.set(j, j, 1);
            g.set(k, j, q - 1);
        }
        let checks = vec![(0..n).map(|c| CheckEntry { col: c, value: 1 }).collect()];
        Self::from_parts(g, checks)
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Rate in bits per symbol, `(k/n)·log2 q`.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64 * (self.q as f64).log2()
    }

    pub fn generator(&self) -> &ZqMatrix {
        &self.generator
    }

    pub fn checks(&self) -> &[Vec<CheckEntry>] {
        &self.checks
    }

    /// Dense parity-check matrix.
    pub fn parity_check(&self) -> ZqMatrix {
        let mut h = ZqMatrix::zeros(self.checks.len(), self.n, self.q);
        for (r, row) in self.checks.iter().enumerate() {
            for e in row {
                h.set(r, e.col, e.value);
            }
        }
        h
    }

    pub fn encode(&self, message: &[u64]) -> Result<Vec<u64>> {
        if message.len() != self.k {
            return Err(LcmaError::Shape(format!(
                "message of length {} for k={}",
                message.len(),
                self.k
            )));
        }
        self.generator.mul_vec(message)
    }

    /// Recovers the message of a codeword through the generator's left inverse.
    pub fn message_of(&self, codeword: &[u64]) -> Result<Vec<u64>> {
        self.left_inverse.mul_vec(codeword)
    }

    pub fn is_codeword(&self, c: &[u64]) -> Result<bool> {
        if c.len() != self.n {
            return Err(LcmaError::Shape(format!("word of length {} for n={}", c.len(), self.n)));
        }
        Ok(self.syndrome_is_zero(c))
    }

    pub(crate) fn syndrome_is_zero(&self, c: &[u64]) -> bool {
        let q = self.q;
        self.checks
            .iter()
            .all(|row| row.iter().map(|e| e.value * (c[e.col] % q) % q).sum::<u64>() % q == 0)
    }
}

const DEFAULT_COLUMN_WEIGHT: usize = 3;
const MAX_CONSTRUCTION_ATTEMPTS: usize = 200;

/// Deterministic test codes.
///
/// `k == 1` gives the repetition code, `k == n - 1` the single-parity-check
/// code; anything else is a pseudo-random column-weight-3 LDPC-style code with
/// unit coefficients and a systematic generator.
pub fn make_test_codes(q: u64, n: usize, k: usize, seed: u64) -> Result<RingCode> {
    if !zq::is_supported_modulus(q) {
        return Err(LcmaError::Modulus(q));
    }
    if k == 0 || k >= n {
        return Err(LcmaError::Construction(format!("need 0 < k < n, got n={n}, k={k}")));
    }
    if k == 1 {
        return RingCode::repetition(q, n);
    }
    if k == n - 1 {
        return RingCode::single_parity_check(q, n);
    }
    let m = n - k;
    let dv = DEFAULT_COLUMN_WEIGHT.min(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_CONSTRUCTION_ATTEMPTS {
        let Some(h) = random_parity_check(q, m, &vec![dv; n], &mut rng) else {
            continue;
        };
        if let Ok(code) = RingCode::from_parity_check(&h) {
            return Ok(code);
        }
    }
    Err(LcmaError::Construction(format!(
        "no full-rank parity-check for q={q}, n={n}, k={k} after {MAX_CONSTRUCTION_ATTEMPTS} attempts"
    )))
}

/// PEG-built LDPC code with a given variable-degree profile: `profile`
/// lists `(degree, fraction of columns)`; fractions are normalized and
/// rounded so that exactly n columns are assigned.
pub fn make_irregular_code(q: u64, n: usize, k: usize, profile: &[(usize, f64)], seed: u64) -> Result<RingCode> {
    if !zq::is_supported_modulus(q) {
        return Err(LcmaError::Modulus(q));
    }
    if k == 0 || k >= n {
        return Err(LcmaError::Construction(format!("need 0 < k < n, got n={n}, k={k}")));
    }
    let total: f64 = profile.iter().map(|p| p.1).sum();
    if profile.is_empty() || profile.iter().any(|&(d, f)| d == 0 || !(f >= 0.0)) || !(total > 0.0) {
        return Err(LcmaError::Construction("degree profile needs positive degrees and fractions".into()));
    }
    let mut degrees = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &(d, f) in profile {
        acc += f / total;
        let upto = ((acc * n as f64).round() as usize).min(n);
        while degrees.len() < upto {
            degrees.push(d);
        }
    }
    while degrees.len() < n {
        degrees.push(profile[profile.len() - 1].0);
    }
    let m = n - k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_CONSTRUCTION_ATTEMPTS {
        let Some(h) = random_parity_check(q, m, &degrees, &mut rng) else {
            continue;
        };
        if let Ok(code) = RingCode::from_parity_check(&h) {
            if code.k() == k {
                return Ok(code);
            }
        }
    }
    Err(LcmaError::Construction(format!(
        "no full-rank parity-check for q={q}, n={n}, k={k} after {MAX_CONSTRUCTION_ATTEMPTS} attempts"
    )))
}

fn random_unit(q: u64, rng: &mut impl Rng) -> u64 {
    loop {
        let v = rng.random_range(1..q);
        if zq::is_unit(v, q) {
            return v;
        }
    }
}

// Progressive edge growth: each new edge of a column goes to a check node
// as far as possible from the column in the current graph (lowest degree
// first, ties broken at random), which keeps short cycles rare.
fn random_parity_check(q: u64, m: usize, degrees: &[usize], rng: &mut ChaCha8Rng) -> Option<ZqMatrix> {
    let n = degrees.len();
    let mut check_deg = vec![0usize; m];
    let mut rows_of_col: Vec<Vec<usize>> = degrees.iter().map(|&d| Vec::with_capacity(d)).collect();
    let mut cols_of_row: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    // low-degree columns first
    order.sort_by_key(|&c| degrees[c]);
    for &col in &order {
        for e in 0..degrees[col].min(m) {
            let candidates: Vec<usize> = if e == 0 {
                (0..m).collect()
            } else {
                farthest_checks(col, &rows_of_col, &cols_of_row, m)
            };
            let min_deg = candidates.iter().map(|&c| check_deg[c]).min()?;
            let lowest: Vec<usize> = candidates.into_iter().filter(|&c| check_deg[c] == min_deg).collect();
            let r = lowest[rng.random_range(0..lowest.len())];
            check_deg[r] += 1;
            rows_of_col[col].push(r);
            cols_of_row[r].push(col);
        }
    }
    let mut h = ZqMatrix::zeros(m, n, q);
    for (col, rows) in rows_of_col.iter().enumerate() {
        for &r in rows {
            h.set(r, col, random_unit(q, rng));
        }
    }
    if check_deg.contains(&0) {
        return None;
    }
    Some(h)
}

// Checks not yet adjacent to `col` that are unreachable from it, or else the
// ones discovered last by a breadth-first search.
fn farthest_checks(col: usize, rows_of_col: &[Vec<usize>], cols_of_row: &[Vec<usize>], m: usize) -> Vec<usize> {
    let mut seen_check = vec![false; m];
    let mut seen_var = vec![false; rows_of_col.len()];
    seen_var[col] = true;
    let mut frontier: Vec<usize> = Vec::new();
    for &r in &rows_of_col[col] {
        if !seen_check[r] {
            seen_check[r] = true;
            frontier.push(r);
        }
    }
    let mut count = frontier.len();
    loop {
        let mut next = Vec::new();
        for &r in &frontier {
            for &v in &cols_of_row[r] {
                if seen_var[v] {
                    continue;
                }
                seen_var[v] = true;
                for &r2 in &rows_of_col[v] {
                    if !seen_check[r2] {
                        seen_check[r2] = true;
                        next.push(r2);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        if count + next.len() == m {
            // everything is reachable: the last layer is the farthest
            return next;
        }
        count += next.len();
        frontier = next;
    }
    let unreached: Vec<usize> = (0..m).filter(|&r| !seen_check[r]).collect();
    if !unreached.is_empty() {
        return unreached;
    }
    (0..m).filter(|r| !rows_of_col[col].contains(r)).collect()
}
