//! Exact arithmetic and linear algebra over the integer ring Z_q.
//!
//! The modulus is either a power of two (the modulation alphabets used by the
//! ring codes) or a prime (used by tests to cross-check against field
//! elimination). Elimination only ever pivots on units, so every row
//! operation is invertible over the ring.

use std::fmt;

use crate::error::{LcmaError, Result};

/// Returns true if `q` is a modulus supported by this module.
pub fn is_supported_modulus(q: u64) -> bool {
    q >= 2 && (q.is_power_of_two() || is_prime(q))
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Returns true if `x` is invertible in Z_q.
pub fn is_unit(x: u64, q: u64) -> bool {
    gcd(x % q, q) == 1
}

/// Multiplicative inverse of a unit in Z_q.
pub fn unit_inverse(x: u64, q: u64) -> Option<u64> {
    let (mut r0, mut r1) = (q as i128, (x % q) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (t0, t1) = (t1, t0 - quot * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(q as i128) as u64)
}

/// Reduces a signed integer into `[0, q-1]`.
pub fn reduce(x: i64, q: u64) -> u64 {
    (x as i128).rem_euclid(q as i128) as u64
}

/// A dense matrix with entries in Z_q, stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct ZqMatrix {
    rows: usize,
    cols: usize,
    q: u64,
    data: Vec<u64>,
}

impl fmt::Debug for ZqMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ZqMatrix {}x{} over Z_{} [", self.rows, self.cols, self.q)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl ZqMatrix {
    /// Builds a matrix from row-major data. Entries must already lie in `[0, q-1]`.
    pub fn new(rows: usize, cols: usize, q: u64, data: Vec<u64>) -> Result<Self> {
        if !is_supported_modulus(q) {
            return Err(LcmaError::Modulus(q));
        }
        if data.len() != rows * cols {
            return Err(LcmaError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|&&v| v >= q) {
            return Err(LcmaError::InvalidArgument(format!(
                "entry {bad} outside [0, {}]",
                q - 1
            )));
        }
        Ok(Self { rows, cols, q, data })
    }

    /// Builds a matrix from signed integer rows, reducing every entry mod q.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R], q: u64) -> Result<Self> {
        if !is_supported_modulus(q) {
            return Err(LcmaError::Modulus(q));
        }
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LcmaError::Shape("ragged rows".into()));
            }
            data.extend(r.iter().map(|&v| reduce(v, q)));
        }
        Ok(Self { rows: rows.len(), cols, q, data })
    }

    pub fn zeros(rows: usize, cols: usize, q: u64) -> Self {
        assert!(is_supported_modulus(q), "unsupported modulus {q}");
        Self { rows, cols, q, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize, q: u64) -> Self {
        let mut m = Self::zeros(n, n, q);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// A column vector.
    pub fn column(values: &[u64], q: u64) -> Result<Self> {
        Self::new(values.len(), 1, q, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v % self.q;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows, self.q);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    /// Sub-matrix made of the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Self { rows: idx.len(), cols: self.cols, q: self.q, data }
    }

    /// Sub-matrix made of the listed columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for r in 0..self.rows {
            data.extend(idx.iter().map(|&c| self.get(r, c)));
        }
        Self { rows: self.rows, cols: idx.len(), q: self.q, data }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Multiplies by a vector: returns `self ⊗_q v`.
    pub fn mul_vec(&self, v: &[u64]) -> Result<Vec<u64>> {
        if v.len() != self.cols {
            return Err(LcmaError::Shape(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let q = self.q;
        let v: Vec<u64> = v.iter().map(|&b| b % q).collect();
        let out = if q.is_power_of_two() {
            // wrapping arithmetic is exact modulo 2^64, hence modulo q
            let mask = q - 1;
            (0..self.rows)
                .map(|r| {
                    self.row(r).iter().zip(&v).fold(0u64, |acc, (&a, &b)| acc.wrapping_add(a.wrapping_mul(b))) & mask
                })
                .collect()
        } else if q <= u32::MAX as u64 {
            (0..self.rows)
                .map(|r| self.row(r).iter().zip(&v).fold(0u64, |acc, (&a, &b)| (acc + a * b % q) % q))
                .collect()
        } else {
            let q = q as u128;
            (0..self.rows)
                .map(|r| {
                    let acc = self.row(r).iter().zip(&v).fold(0u128, |acc, (&a, &b)| (acc + a as u128 * b as u128) % q);
                    acc as u64
                })
                .collect()
        };
        Ok(out)
    }

    // Row operations used by elimination; `row_a += factor * row_b`.
    fn add_row_multiple(&mut self, dst: usize, src: usize, factor: u64) {
        if factor == 0 {
            return;
        }
        let q = self.q as u128;
        for c in 0..self.cols {
            let s = self.data[src * self.cols + c] as u128;
            let d = &mut self.data[dst * self.cols + c];
            *d = ((*d as u128 + factor as u128 * s) % q) as u64;
        }
    }

    fn scale_row(&mut self, r: usize, factor: u64) {
        let q = self.q as u128;
        for v in &mut self.data[r * self.cols..(r + 1) * self.cols] {
            *v = ((*v as u128 * factor as u128) % q) as u64;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

/// Matrix product modulo q.
pub fn mat_mul_mod(a: &ZqMatrix, b: &ZqMatrix) -> Result<ZqMatrix> {
    if a.q != b.q {
        return Err(LcmaError::Shape(format!("moduli {} and {} differ", a.q, b.q)));
    }
    if a.cols != b.rows {
        return Err(LcmaError::Shape(format!(
            "{}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let q = a.q as u128;
    let mut out = ZqMatrix::zeros(a.rows, b.cols, a.q);
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = 0u128;
            for k in 0..a.cols {
                acc += a.get(i, k) as u128 * b.get(k, j) as u128;
            }
            out.data[i * b.cols + j] = (acc % q) as u64;
        }
    }
    Ok(out)
}

/// Outcome of unit-pivot Gauss-Jordan elimination.
#[derive(Debug, Clone)]
pub struct RowReduction {
    /// Accumulated row transform; always unit-invertible.
    pub q_row: ZqMatrix,
    /// `q_row ⊗_q A`, reduced row echelon form on the pivot columns.
    pub echelon: ZqMatrix,
    /// Pivot column of echelon row `i`, for `i < pivots.len()`.
    pub pivots: Vec<usize>,
}

impl RowReduction {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Gauss-Jordan elimination over Z_q pivoting only on units.
///
/// A column whose remaining entries contain no unit is skipped. Pivot rows are
/// scaled to 1 and the pivot column is cleared both above and below.
pub fn row_reduce_mod(a: &ZqMatrix) -> RowReduction {
    let q = a.q;
    let mut m = a.clone();
    let mut t = ZqMatrix::identity(a.rows, q);
    let mut pivots = Vec::new();
    let mut next = 0usize;
    for c in 0..a.cols {
        if next == a.rows {
            break;
        }
        let Some(p) = (next..a.rows).find(|&r| is_unit(m.get(r, c), q)) else {
            continue;
        };
        m.swap_rows(next, p);
        t.swap_rows(next, p);
        let inv = unit_inverse(m.get(next, c), q).expect("pivot is a unit");
        m.scale_row(next, inv);
        t.scale_row(next, inv);
        for r in 0..a.rows {
            if r == next {
                continue;
            }
            let f = m.get(r, c);
            if f != 0 {
                let neg = q - f;
                m.add_row_multiple(r, next, neg);
                t.add_row_multiple(r, next, neg);
            }
        }
        pivots.push(c);
        next += 1;
    }
    RowReduction { q_row: t, echelon: m, pivots }
}

/// Returns the inverse `X` with `X ⊗_q A = I` when it exists.
///
/// For q = 2^m this succeeds exactly when det(A) is odd.
pub fn is_unit_invertible(a: &ZqMatrix) -> Option<ZqMatrix> {
    if a.rows != a.cols {
        return None;
    }
    let rr = row_reduce_mod(a);
    (rr.rank() == a.rows).then_some(rr.q_row)
}

/// Result of generalized matrix inversion.
#[derive(Debug, Clone)]
pub struct GmiResult {
    /// The {1}-inverse, K×L.
    pub one_inverse: ZqMatrix,
    /// Column (user) indices whose unit vector lies in the row space, ascending.
    pub recoverable: Vec<usize>,
    /// Row `j` satisfies `extraction_rows[j] ⊗_q A = e_{recoverable[j]}^T`.
    pub extraction_rows: ZqMatrix,
}

impl GmiResult {
    /// Applies the extraction rows to decoded combinations (one per row of A)
    /// and returns `(user, message)` pairs.
    pub fn recover(&self, combinations: &[Vec<u64>]) -> Result<Vec<(usize, Vec<u64>)>> {
        let l = self.extraction_rows.cols();
        if combinations.len() != l {
            return Err(LcmaError::Shape(format!(
                "{} combinations for {l} rows of A",
                combinations.len()
            )));
        }
        let len = combinations.first().map_or(0, Vec::len);
        let q = self.extraction_rows.modulus() as u128;
        let mut out = Vec::with_capacity(self.recoverable.len());
        for (j, &user) in self.recoverable.iter().enumerate() {
            let coeffs = self.extraction_rows.row(j);
            let msg = (0..len)
                .map(|t| {
                    let acc: u128 = coeffs
                        .iter()
                        .zip(combinations)
                        .map(|(&a, u)| a as u128 * u[t] as u128)
                        .sum();
                    (acc % q) as u64
                })
                .collect();
            out.push((user, msg));
        }
        Ok(out)
    }
}

/// Generalized matrix inversion of an L×K coefficient matrix.
///
/// Row-reduces A with unit pivots, completes the column transform that clears
/// the non-pivot block, assembles the {1}-inverse with a zero free block and
/// keeps every row of `A^{1} ⊗ A` that is an exact unit vector.
pub fn gmi(a: &ZqMatrix) -> GmiResult {
    let (l, k, q) = (a.rows, a.cols, a.q);
    let rr = row_reduce_mod(a);
    let r = rr.rank();

    // Column order: pivot columns first, then the rest.
    let mut order = rr.pivots.clone();
    order.extend((0..k).filter(|c| !rr.pivots.contains(c)));

    // Q_col = P · [[I, -θ], [0, I]] where θ is the non-pivot part of the pivot rows.
    let mut q_col = ZqMatrix::zeros(k, k, q);
    for (pos, &c) in order.iter().enumerate() {
        q_col.set(c, pos, 1);
    }
    for (pos, &c) in order.iter().enumerate().skip(r) {
        for (i, &pc) in rr.pivots.iter().enumerate() {
            let theta = rr.echelon.get(i, c);
            if theta != 0 {
                q_col.set(pc, pos, (q - theta) % q);
            }
        }
    }

    // middle = [[I_r, 0], [0, Ψ=0]], K×L
    let mut middle = ZqMatrix::zeros(k, l, q);
    for i in 0..r {
        middle.set(i, i, 1);
    }
    let one_inverse = mat_mul_mod(&mat_mul_mod(&q_col, &middle).expect("shapes"), &rr.q_row)
        .expect("shapes");
    let product = mat_mul_mod(&one_inverse, a).expect("shapes");

    let mut found: Vec<(usize, usize)> = Vec::new();
    for row in 0..k {
        let entries = product.row(row);
        let mut ones = entries.iter().enumerate().filter(|(_, &v)| v != 0);
        if let (Some((user, &1)), None) = (ones.next(), ones.next()) {
            if !found.iter().any(|&(u, _)| u == user) {
                found.push((user, row));
            }
        }
    }
    found.sort_unstable();
    let recoverable = found.iter().map(|&(u, _)| u).collect();
    let rows: Vec<usize> = found.iter().map(|&(_, r)| r).collect();
    let extraction_rows = one_inverse.select_rows(&rows);
    GmiResult { one_inverse, recoverable, extraction_rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]], q: u64) -> ZqMatrix {
        ZqMatrix::from_rows(rows, q).unwrap()
    }

    #[test]
    fn small_product() {
        let a = m(&[&[1, 2], &[3, 1]], 4);
        let b = m(&[&[1], &[3]], 4);
        assert_eq!(mat_mul_mod(&a, &b).unwrap().data(), &[3, 2]);
    }

    #[test]
    fn identity_is_neutral() {
        let b = m(&[&[1, 7, 3], &[0, 5, 6]], 8);
        let i = ZqMatrix::identity(2, 8);
        assert_eq!(mat_mul_mod(&i, &b).unwrap(), b);
    }

    #[test]
    fn shape_and_modulus_mismatch() {
        let a = m(&[&[1, 2]], 4);
        assert!(matches!(mat_mul_mod(&a, &a), Err(LcmaError::Shape(_))));
        let b = m(&[&[1], &[1]], 8);
        assert!(mat_mul_mod(&a, &b).is_err());
        assert!(matches!(ZqMatrix::new(1, 1, 6, vec![0]), Err(LcmaError::Modulus(6))));
        assert!(ZqMatrix::new(1, 1, 4, vec![4]).is_err());
    }

    #[test]
    fn unit_inverses() {
        for q in [2u64, 4, 8, 16, 5, 7] {
            for x in 0..q {
                match unit_inverse(x, q) {
                    Some(inv) => assert_eq!(x * inv % q, 1),
                    None => assert!(!is_unit(x, q)),
                }
            }
        }
    }

    #[test]
    fn invertibility() {
        let i = ZqMatrix::identity(3, 4);
        assert_eq!(is_unit_invertible(&i).unwrap(), i);
        assert!(is_unit_invertible(&m(&[&[2, 0], &[0, 1]], 4)).is_none());
        // det = 1*3 - 2*1 = 1, odd
        let a = m(&[&[1, 2], &[1, 3]], 4);
        let x = is_unit_invertible(&a).unwrap();
        assert_eq!(mat_mul_mod(&x, &a).unwrap(), ZqMatrix::identity(2, 4));
        assert_eq!(mat_mul_mod(&a, &x).unwrap(), ZqMatrix::identity(2, 4));
        // det = 2 over Z_4: even entries only in first column after elimination
        assert!(is_unit_invertible(&m(&[&[1, 1], &[1, 3]], 4)).is_none());
    }

    #[test]
    fn row_reduce_identity_and_swap() {
        let i = ZqMatrix::identity(3, 2);
        let rr = row_reduce_mod(&i);
        assert_eq!(rr.q_row, i);
        assert_eq!(rr.echelon, i);
        let s = m(&[&[0, 1], &[1, 0]], 2);
        let rr = row_reduce_mod(&s);
        assert_eq!(rr.q_row, s);
        assert_eq!(rr.echelon, ZqMatrix::identity(2, 2));
    }

    #[test]
    fn row_reduce_skips_columns_without_units() {
        let a = m(&[&[2, 1, 0], &[2, 0, 1]], 4);
        let rr = row_reduce_mod(&a);
        assert_eq!(rr.pivots, vec![1, 2]);
        assert_eq!(mat_mul_mod(&rr.q_row, &a).unwrap(), rr.echelon);
        assert!(is_unit_invertible(&rr.q_row).is_some());
    }

    #[test]
    fn gmi_identity() {
        let g = gmi(&ZqMatrix::identity(4, 4));
        assert_eq!(g.recoverable, vec![0, 1, 2, 3]);
        assert_eq!(g.extraction_rows, ZqMatrix::identity(4, 4));
    }

    #[test]
    fn gmi_binary_triangular() {
        let a = m(&[&[1, 1], &[0, 1]], 2);
        let g = gmi(&a);
        assert_eq!(g.recoverable, vec![0, 1]);
        assert_eq!(g.extraction_rows, m(&[&[1, 1], &[0, 1]], 2));
    }

    #[test]
    fn gmi_underdetermined_and_degenerate() {
        assert!(gmi(&m(&[&[1, 1]], 2)).recoverable.is_empty());
        assert!(gmi(&ZqMatrix::zeros(2, 3, 4)).recoverable.is_empty());
        assert!(gmi(&ZqMatrix::zeros(0, 3, 4)).recoverable.is_empty());
    }

    #[test]
    fn gmi_partial_recovery() {
        // rows: u0 = b0 + b1, u1 = b1 + b2, u2 = b1 -> b1 and then b0, b2 recoverable
        let a = m(&[&[1, 1, 0], &[0, 1, 1]], 4);
        assert!(gmi(&a).recoverable.is_empty());
        let a = m(&[&[1, 1, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 1]], 4);
        let g = gmi(&a);
        assert_eq!(g.recoverable, vec![0, 1]);
        for (j, &u) in g.recoverable.iter().enumerate() {
            let row = g.extraction_rows.select_rows(&[j]);
            let prod = mat_mul_mod(&row, &a).unwrap();
            let mut e = vec![0; 4];
            e[u] = 1;
            assert_eq!(prod.data(), &e[..]);
        }
    }

    #[test]
    fn gmi_recover_messages() {
        let a = m(&[&[1, 1], &[0, 1]], 4);
        let b = [vec![3u64, 0, 1], vec![2, 2, 3]];
        let u: Vec<Vec<u64>> = (0..2)
            .map(|l| (0..3).map(|t| (a.get(l, 0) * b[0][t] + a.get(l, 1) * b[1][t]) % 4).collect())
            .collect();
        let rec = gmi(&a).recover(&u).unwrap();
        assert_eq!(rec, vec![(0, b[0].clone()), (1, b[1].clone())]);
    }
}
