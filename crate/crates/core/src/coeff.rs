//! Coefficient-matrix selection by lattice reduction.
//!
//! With `ρ H^T H + I = Ψ Σ Ψ^T`, an integer coefficient vector `ã` costs
//! `‖Σ^{-1/2} Ψ^T ã‖² = ã^T (ρ H^T H + I)^{-1} ã`. LLL on the columns of
//! `Σ^{-1/2} Ψ^T` yields a unimodular transform whose columns are short
//! integer vectors under this metric.

use nalgebra::DMatrix;

use crate::channel::ChannelRealization;
use crate::error::{LcmaError, Result};
use crate::zq::{self, ZqMatrix};

pub const DEFAULT_DELTA: f64 = 0.99;

/// An L×K coefficient matrix over Z_q together with its integer lift Ã.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    a_tilde: Vec<Vec<i64>>,
    a_mod: ZqMatrix,
}

impl CoefficientMatrix {
    pub fn new(a_tilde: Vec<Vec<i64>>, q: u64) -> Result<Self> {
        let a_mod = ZqMatrix::from_rows(&a_tilde, q)?;
        Ok(Self { a_tilde, a_mod })
    }

    /// Lifts a Z_q matrix to integers using representatives in (-q/2, q/2].
    pub fn from_mod(a_mod: ZqMatrix) -> Self {
        let q = a_mod.modulus();
        let a_tilde = a_mod
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|v| if 2 * v > q { v as i64 - q as i64 } else { v as i64 }).collect())
            .collect();
        Self { a_tilde, a_mod }
    }

    pub fn identity(k: usize, q: u64) -> Self {
        Self::from_mod(ZqMatrix::identity(k, q))
    }

    pub fn streams(&self) -> usize {
        self.a_mod.rows()
    }

    pub fn users(&self) -> usize {
        self.a_mod.cols()
    }

    pub fn modulus(&self) -> u64 {
        self.a_mod.modulus()
    }

    pub fn a_tilde(&self) -> &[Vec<i64>] {
        &self.a_tilde
    }

    pub fn a_mod(&self) -> &ZqMatrix {
        &self.a_mod
    }

    /// Users with a non-zero integer coefficient in stream `l`.
    pub fn support(&self, l: usize) -> Vec<usize> {
        (0..self.users()).filter(|&i| self.a_tilde[l][i] != 0).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            a_tilde: rows.iter().map(|&r| self.a_tilde[r].clone()).collect(),
            a_mod: self.a_mod.select_rows(rows),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientSelection {
    pub coefficients: CoefficientMatrix,
    /// `ã_l^T (ρ H^T H + I)^{-1} ã_l` per row, non-decreasing.
    pub metric_per_row: Vec<f64>,
    /// Rows were swapped for other short vectors to restore invertibility mod q.
    pub repaired: bool,
    /// Repair failed and the identity was used instead.
    pub fell_back_to_identity: bool,
}

/// Result of LLL reduction on the columns of a basis.
#[derive(Debug, Clone)]
pub struct LllOutcome {
    /// `basis · transform`.
    pub reduced: DMatrix<f64>,
    /// Unimodular integer matrix, row-major K×K.
    pub transform: Vec<Vec<i64>>,
}

impl LllOutcome {
    pub fn transform_column(&self, j: usize) -> Vec<i64> {
        self.transform.iter().map(|r| r[j]).collect()
    }
}

struct GramSchmidt {
    mu: DMatrix<f64>,
    norms: Vec<f64>,
}

fn gram_schmidt(b: &DMatrix<f64>) -> GramSchmidt {
    let n = b.ncols();
    let mut star: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n);
    let mut mu = DMatrix::zeros(n, n);
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mut v = b.column(i).into_owned();
        for j in 0..i {
            let m = if norms[j] > 0.0 { b.column(i).dot(&star[j]) / norms[j] } else { 0.0 };
            mu[(i, j)] = m;
            v -= &star[j] * m;
        }
        norms[i] = v.norm_squared();
        star.push(v);
    }
    GramSchmidt { mu, norms }
}

const MAX_LLL_STEPS: usize = 100_000;

/// LLL reduction of the columns of a square, non-singular basis.
pub fn lll_reduce(basis: &DMatrix<f64>, delta: f64) -> Result<LllOutcome> {
    let n = basis.ncols();
    if basis.nrows() != n {
        return Err(LcmaError::Shape("LLL basis must be square".into()));
    }
    if !(delta > 0.25 && delta <= 1.0) {
        return Err(LcmaError::InvalidArgument(format!("delta {delta} outside (0.25, 1]")));
    }
    if basis.iter().any(|v| !v.is_finite()) {
        return Err(LcmaError::Numerical("non-finite basis".into()));
    }
    let mut b = basis.clone();
    let mut t: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let mut gs = gram_schmidt(&b);
    let scale = gs.norms.iter().cloned().fold(0.0, f64::max);
    if n > 0 && gs.norms.iter().any(|&v| v <= scale * 1e-24) {
        return Err(LcmaError::Numerical("singular basis".into()));
    }

    let mut k = 1usize;
    let mut steps = 0usize;
    while k < n {
        steps += 1;
        if steps > MAX_LLL_STEPS {
            return Err(LcmaError::Numerical("LLL did not terminate".into()));
        }
        for j in (0..k).rev() {
            let r = gs.mu[(k, j)].round();
            if r != 0.0 {
                let col_j = b.column(j).into_owned();
                let mut col_k = b.column_mut(k);
                col_k -= col_j * r;
                let ri = r as i64;
                for row in t.iter_mut() {
                    row[k] -= ri * row[j];
                }
                for i in 0..j {
                    gs.mu[(k, i)] -= r * gs.mu[(j, i)];
                }
                gs.mu[(k, j)] -= r;
            }
        }
        let m = gs.mu[(k, k - 1)];
        if gs.norms[k] >= (delta - m * m) * gs.norms[k - 1] {
            k += 1;
        } else {
            b.swap_columns(k, k - 1);
            for row in t.iter_mut() {
                row.swap(k, k - 1);
            }
            gs = gram_schmidt(&b);
            k = (k - 1).max(1);
        }
    }
    // recompute from the exact integer transform
    let tf = DMatrix::from_fn(n, n, |i, j| t[i][j] as f64);
    Ok(LllOutcome { reduced: basis * tf, transform: t })
}

/// Checks size reduction (|μ| ≤ 1/2 + tol) and the Lovász condition.
pub fn is_lll_reduced(b: &DMatrix<f64>, delta: f64, tol: f64) -> bool {
    let n = b.ncols();
    let gs = gram_schmidt(b);
    for i in 0..n {
        for j in 0..i {
            if gs.mu[(i, j)].abs() > 0.5 + tol {
                return false;
            }
        }
    }
    (1..n).all(|k| {
        let m = gs.mu[(k, k - 1)];
        gs.norms[k] >= (delta - m * m) * gs.norms[k - 1] * (1.0 - tol)
    })
}

/// Metric basis `Σ^{-1/2} Ψ^T` for a realization.
pub fn metric_basis(h: &ChannelRealization) -> Result<DMatrix<f64>> {
    if h.h().iter().any(|v| !v.is_finite()) {
        return Err(LcmaError::Numerical("non-finite channel".into()));
    }
    let k = h.users();
    let gram = h.h().transpose() * h.h() * h.rho() + DMatrix::identity(k, k);
    let eig = nalgebra::SymmetricEigen::try_new(gram, 1e-14, 10_000)
        .ok_or_else(|| LcmaError::Numerical("eigen-decomposition did not converge".into()))?;
    let mut f = eig.eigenvectors.transpose();
    for (i, &s) in eig.eigenvalues.iter().enumerate() {
        if !(s > 0.0) {
            return Err(LcmaError::Numerical("non-positive eigenvalue".into()));
        }
        let w = 1.0 / s.sqrt();
        f.row_mut(i).iter_mut().for_each(|v| *v *= w);
    }
    Ok(f)
}

fn metric(f: &DMatrix<f64>, a: &[i64]) -> f64 {
    let v = nalgebra::DVector::from_iterator(a.len(), a.iter().map(|&x| x as f64));
    (f * v).norm_squared()
}

fn canonical_sign(mut a: Vec<i64>) -> Vec<i64> {
    if a.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0) {
        a.iter_mut().for_each(|v| *v = -*v);
    }
    a
}

fn unit_rank(rows: &[Vec<i64>], q: u64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    zq::row_reduce_mod(&ZqMatrix::from_rows(rows, q).expect("valid modulus")).rank()
}

/// Picks L integer coefficient vectors by LLL on the MMSE metric, sorted by
/// metric, and reduces them mod q. For L = K the result is unit-invertible.
pub fn select_coefficients(h: &ChannelRealization, l: usize, q: u64) -> Result<CoefficientSelection> {
    let k = h.users();
    if l == 0 || l > k {
        return Err(LcmaError::InvalidArgument(format!("L={l} streams for K={k} users")));
    }
    if !zq::is_supported_modulus(q) {
        return Err(LcmaError::Modulus(q));
    }
    let f = metric_basis(h)?;
    let lll = lll_reduce(&f, DEFAULT_DELTA)?;
    let mut cands: Vec<(f64, Vec<i64>)> = (0..k)
        .map(|j| {
            let a = canonical_sign(lll.transform_column(j));
            (metric(&f, &a), a)
        })
        .collect();
    sort_candidates(&mut cands);

    let chosen: Vec<(f64, Vec<i64>)> = cands.iter().take(l).cloned().collect();
    let rows: Vec<Vec<i64>> = chosen.iter().map(|(_, a)| a.clone()).collect();
    if l < k || unit_rank(&rows, q) == k {
        return Ok(finish(chosen, q, false, false));
    }

    match repair(&f, &cands, k, q) {
        Some(fixed) => Ok(finish(fixed, q, true, false)),
        None => {
            log::warn!("coefficient repair failed; falling back to the identity");
            let ident: Vec<(f64, Vec<i64>)> = (0..k)
                .map(|i| {
                    let mut e = vec![0; k];
                    e[i] = 1;
                    (metric(&f, &e), e)
                })
                .collect();
            let mut ident = ident;
            sort_candidates(&mut ident);
            Ok(finish(ident, q, false, true))
        }
    }
}

fn sort_candidates(c: &mut [(f64, Vec<i64>)]) {
    c.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
}

fn finish(rows: Vec<(f64, Vec<i64>)>, q: u64, repaired: bool, fallback: bool) -> CoefficientSelection {
    let metric_per_row = rows.iter().map(|(m, _)| *m).collect();
    let a_tilde = rows.into_iter().map(|(_, a)| a).collect();
    CoefficientSelection {
        coefficients: CoefficientMatrix::new(a_tilde, q).expect("valid modulus"),
        metric_per_row,
        repaired,
        fell_back_to_identity: fallback,
    }
}

/// Greedily rebuilds a unit-invertible set of K rows from the reduced basis
/// vectors and their pairwise sums and differences (at most K² candidates),
/// shortest first.
pub(crate) fn repair(
    f: &DMatrix<f64>,
    basis: &[(f64, Vec<i64>)],
    k: usize,
    q: u64,
) -> Option<Vec<(f64, Vec<i64>)>> {
    let mut pool: Vec<(f64, Vec<i64>)> = basis.to_vec();
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            for sign in [1i64, -1] {
                let v: Vec<i64> = basis[i].1.iter().zip(&basis[j].1).map(|(a, b)| a + sign * b).collect();
                let v = canonical_sign(v);
                if v.iter().any(|&x| x != 0) {
                    pool.push((metric(f, &v), v));
                }
            }
        }
    }
    sort_candidates(&mut pool);
    pool.dedup_by(|a, b| a.1 == b.1);
    pool.truncate(k * k.max(1) + basis.len());

    let mut chosen: Vec<(f64, Vec<i64>)> = Vec::with_capacity(k);
    for cand in pool {
        let mut rows: Vec<Vec<i64>> = chosen.iter().map(|(_, a)| a.clone()).collect();
        rows.push(cand.1.clone());
        if unit_rank(&rows, q) == rows.len() {
            chosen.push(cand);
            if chosen.len() == k {
                return Some(chosen);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_basis_is_unchanged() {
        let out = lll_reduce(&DMatrix::identity(3, 3), 0.99).unwrap();
        assert_eq!(out.reduced, DMatrix::identity(3, 3));
        assert_eq!(out.transform, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn skewed_basis_gets_shorter() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.99, 0.01]);
        let out = lll_reduce(&b, 0.99).unwrap();
        let max_norm = |m: &DMatrix<f64>| m.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(max_norm(&out.reduced) < max_norm(&b));
        assert!(is_lll_reduced(&out.reduced, 0.99, 1e-9));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(lll_reduce(&DMatrix::zeros(2, 2), 0.99).is_err());
        assert!(lll_reduce(&DMatrix::identity(2, 2), 0.2).is_err());
        assert!(lll_reduce(&DMatrix::zeros(2, 3), 0.99).is_err());
    }

    #[test]
    fn zero_snr_gives_unit_vectors() {
        let h = ChannelRealization::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 1.0]), 0.0).unwrap();
        let sel = select_coefficients(&h, 2, 2).unwrap();
        for (row, m) in sel.coefficients.a_tilde().iter().zip(&sel.metric_per_row) {
            assert_eq!(row.iter().map(|v| v.abs()).sum::<i64>(), 1);
            assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_signs_and_sorted_metrics() {
        let h = ChannelRealization::from_matrix(
            DMatrix::from_row_slice(2, 3, &[1.0, 0.9, -0.4, 0.2, -1.0, 0.8]),
            20.0,
        )
        .unwrap();
        let sel = select_coefficients(&h, 3, 4).unwrap();
        assert!(sel.metric_per_row.windows(2).all(|w| w[0] <= w[1]));
        for row in sel.coefficients.a_tilde() {
            assert!(*row.iter().find(|&&v| v != 0).unwrap() > 0);
        }
        assert!(zq::is_unit_invertible(sel.coefficients.a_mod()).is_some());
    }

    #[test]
    fn repair_restores_invertibility() {
        // rows [1,1] and [1,-1] are independent over Q but equal mod 2
        let f = DMatrix::identity(2, 2);
        let basis = vec![(2.0, vec![1, 1]), (2.0, vec![1, -1])];
        // the lattice they span has determinant 2, nothing mod 2 can fix that
        assert!(repair(&f, &basis, 2, 2).is_none());
        let basis = vec![(2.0, vec![1, 1]), (2.0, vec![1, -1]), (1.0, vec![0, 1])];
        let fixed = repair(&f, &basis, 2, 2).unwrap();
        let rows: Vec<Vec<i64>> = fixed.iter().map(|(_, a)| a.clone()).collect();
        assert_eq!(unit_rank(&rows, 2), 2);
    }

    #[test]
    fn lifted_identity() {
        let c = CoefficientMatrix::from_mod(ZqMatrix::from_rows(&[[3i64, 1], [0, 2]], 4).unwrap());
        assert_eq!(c.a_tilde(), &[vec![-1, 1], vec![0, 2]]);
        assert_eq!(c.support(1), vec![1]);
    }
}
