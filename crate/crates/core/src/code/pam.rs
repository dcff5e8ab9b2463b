use crate::error::{LcmaError, Result};

/// One-to-one map between Z_q and a unit-energy q-PAM constellation,
/// `x = (c - (q-1)/2) / γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PamMapper {
    q: u64,
    gamma: f64,
}

impl PamMapper {
    pub fn new(q: u64) -> Self {
        assert!(q >= 2, "PAM needs at least two points");
        let qf = q as f64;
        // uniform {(1-q)/2, ..., (q-1)/2} has second moment (q^2 - 1)/12
        let gamma = ((qf * qf - 1.0) / 12.0).sqrt();
        Self { q, gamma }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Offset `(q-1)/2` between code symbols and centred amplitudes.
    pub fn offset(&self) -> f64 {
        (self.q as f64 - 1.0) / 2.0
    }

    pub fn map_symbol(&self, c: u64) -> f64 {
        (c as f64 - self.offset()) / self.gamma
    }

    /// Nearest code symbol of an amplitude, clamped to the alphabet.
    pub fn unmap_symbol(&self, x: f64) -> u64 {
        let c = (x * self.gamma + self.offset()).round();
        c.clamp(0.0, (self.q - 1) as f64) as u64
    }

    pub fn map(&self, c: &[u64]) -> Vec<f64> {
        c.iter().map(|&v| self.map_symbol(v)).collect()
    }

    pub fn unmap(&self, x: &[f64]) -> Vec<u64> {
        x.iter().map(|&v| self.unmap_symbol(v)).collect()
    }

    /// All constellation points in symbol order.
    pub fn constellation(&self) -> Vec<f64> {
        (0..self.q).map(|c| self.map_symbol(c)).collect()
    }
}

/// Per-symbol posterior probabilities over the q bin-indices, n rows by q columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AppSequence {
    q: usize,
    data: Vec<f64>,
}

const ROW_SUM_TOLERANCE: f64 = 1e-9;

impl AppSequence {
    /// Wraps probability rows; each must be non-negative and sum to one.
    pub fn from_rows(rows: Vec<Vec<f64>>, q: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * q);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != q {
                return Err(LcmaError::Shape(format!("row {t} has {} entries, q={q}", row.len())));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(LcmaError::InvalidArgument(format!(
                    "row {t} is not a probability vector (sum {sum})"
                )));
            }
            data.extend(row);
        }
        Ok(Self { q, data })
    }

    /// Normalizes non-negative weights row by row. A row of zeros becomes uniform.
    pub fn from_weights(rows: Vec<Vec<f64>>, q: usize) -> Result<Self> {
        let rows = rows.into_iter().map(|r| normalize(r)).collect();
        Self::from_rows(rows, q)
    }

    /// Unit-vector rows at the given symbols.
    pub fn hard(symbols: &[u64], q: usize) -> Self {
        let mut data = vec![0.0; symbols.len() * q];
        for (t, &s) in symbols.iter().enumerate() {
            data[t * q + s as usize] = 1.0;
        }
        Self { q, data }
    }

    pub fn uniform(n: usize, q: usize) -> Self {
        Self { q, data: vec![1.0 / q as f64; n * q] }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.q
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.q..(t + 1) * self.q]
    }
}

/// Scales a non-negative vector to sum one; all-zero or non-finite input becomes uniform.
pub(crate) fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        v.iter_mut().for_each(|p| *p /= sum);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|p| *p = u);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_mapping() {
        let m = PamMapper::new(2);
        assert!((m.gamma() - 0.5).abs() < 1e-15);
        assert_eq!(m.map(&[0, 1]), vec![-1.0, 1.0]);
    }

    #[test]
    fn quaternary_gamma() {
        let m = PamMapper::new(4);
        assert!((m.gamma() - 1.25f64.sqrt()).abs() < 1e-15);
        assert!((m.map_symbol(3) - 1.5 / 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_energy_and_zero_mean() {
        for q in [2u64, 4, 8, 16] {
            let pts = PamMapper::new(q).constellation();
            let mean: f64 = pts.iter().sum::<f64>() / q as f64;
            let energy: f64 = pts.iter().map(|x| x * x).sum::<f64>() / q as f64;
            assert!(mean.abs() < 1e-12);
            assert!((energy - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip() {
        for q in [2u64, 4, 8] {
            let m = PamMapper::new(q);
            let c: Vec<u64> = (0..q).collect();
            assert_eq!(m.unmap(&m.map(&c)), c);
        }
    }

    #[test]
    fn app_validation() {
        assert!(AppSequence::from_rows(vec![vec![0.5, 0.5]], 2).is_ok());
        assert!(AppSequence::from_rows(vec![vec![0.6, 0.5]], 2).is_err());
        assert!(AppSequence::from_rows(vec![vec![1.5, -0.5]], 2).is_err());
        let a = AppSequence::from_weights(vec![vec![0.0, 0.0], vec![1.0, 3.0]], 2).unwrap();
        assert_eq!(a.row(0), &[0.5, 0.5]);
        assert_eq!(a.row(1), &[0.25, 0.75]);
    }
}
