//! Brute-force reference implementations for the test suite.
//!
//! Everything here works on plain `Vec`s and enumerates directly; nothing is
//! shared with the `lcma` crate. Speed is not a goal.

use std::cmp::Ordering;

/// Enumeration limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_enumeration: u128,
    /// Box bound for integer-vector searches.
    pub max_inf_norm: i64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_enumeration: 1 << 20, max_inf_norm: 3 }
    }
}

/// Unit-energy q-PAM amplitude of symbol `c`.
pub fn pam(c: u64, q: u64) -> f64 {
    let qf = q as f64;
    let energy = (qf * qf - 1.0) / 12.0;
    (c as f64 - (qf - 1.0) / 2.0) / energy.sqrt()
}

/// All vectors of `len` digits in `0..q`, last digit fastest.
pub fn all_words(q: u64, len: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * q as usize);
        for w in &out {
            for d in 0..q {
                let mut v = w.clone();
                v.push(d);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn sq_dist(h: &[Vec<f64>], rho: f64, y: &[f64], c: &[u64], q: u64) -> f64 {
    let mut d = 0.0;
    for (r, yr) in y.iter().enumerate() {
        let mut s = 0.0;
        for (i, &ci) in c.iter().enumerate() {
            s += h[r][i] * pam(ci, q);
        }
        let e = yr - rho.sqrt() * s;
        d += e * e;
    }
    d
}

/// Bin posteriors `P(a_l^T c = ω | y)` by summing the Gaussian likelihood
/// over all `q^K` candidates. `h` is N rows of K entries.
pub fn oracle_app(h: &[Vec<f64>], rho: f64, y: &[f64], a_rows: &[Vec<u64>], q: u64) -> Vec<Vec<f64>> {
    let k = h[0].len();
    let words = all_words(q, k);
    let d: Vec<f64> = words.iter().map(|c| sq_dist(h, rho, y, c, q)).collect();
    let best = d.iter().cloned().fold(f64::INFINITY, f64::min);
    a_rows
        .iter()
        .map(|a| {
            let mut p = vec![0.0; q as usize];
            for (c, di) in words.iter().zip(&d) {
                let bin = a.iter().zip(c).map(|(x, y)| x * y).sum::<u64>() % q;
                p[bin as usize] += (-(di - best) / 2.0).exp();
            }
            let total: f64 = p.iter().sum();
            p.iter().map(|v| v / total).collect()
        })
        .collect()
}

/// The `omega` candidates closest to `y`, ascending by distance; equal
/// distances ordered by the symbol vector.
pub fn oracle_nearest(h: &[Vec<f64>], rho: f64, y: &[f64], q: u64, omega: usize) -> Vec<(Vec<u64>, f64)> {
    let k = h[0].len();
    let mut all: Vec<(Vec<u64>, f64)> =
        all_words(q, k).into_iter().map(|c| { let d = sq_dist(h, rho, y, &c, q); (c, d) }).collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    all.truncate(omega);
    all
}

/// Total variation distance between two probability vectors.
pub fn total_variation(p: &[f64], r: &[f64]) -> f64 {
    0.5 * p.iter().zip(r).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn quad_form(gram: &[Vec<f64>], a: &[i64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            s += a[i] as f64 * gram[i][j] * a[j] as f64;
        }
    }
    s
}

fn box_vectors(k: usize, bound: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for v in &out {
            for x in -bound..=bound {
                let mut w = v.clone();
                w.push(x);
                next.push(w);
            }
        }
        out = next;
    }
    out.retain(|v| v.iter().any(|&x| x != 0));
    out
}

/// Non-zero integer vector minimizing `a^T G a` over `‖a‖∞ ≤ budget`.
pub fn oracle_shortest(gram: &[Vec<f64>], budget: OracleBudget) -> (Vec<i64>, f64) {
    let k = gram.len();
    box_vectors(k, budget.max_inf_norm)
        .into_iter()
        .map(|a| { let m = quad_form(gram, &a); (a, m) })
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
        .expect("k >= 1")
}

/// Rank over the rationals, by fraction-free elimination in i128.
pub fn rational_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let (a, b) = (m[rank][c], m[r][c]);
                for j in 0..cols {
                    m[r][j] = m[r][j] * a - m[rank][j] * b;
                }
                let g = m[r].iter().fold(0i128, |g, &v| gcd(g, v.abs()));
                if g > 1 {
                    m[r].iter_mut().for_each(|v| *v /= g);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Successive minima `λ_1 ≤ … ≤ λ_K` of `a^T G a` restricted to the box:
/// the l-th value is the smallest metric of a vector independent of the
/// l-1 vectors already chosen.
pub fn successive_minima(gram: &[Vec<f64>], budget: OracleBudget) -> Vec<f64> {
    let k = gram.len();
    let mut cands: Vec<(Vec<i64>, f64)> =
        box_vectors(k, budget.max_inf_norm).into_iter().map(|a| { let m = quad_form(gram, &a); (a, m) }).collect();
    cands.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    let mut minima = Vec::new();
    for (a, m) in cands {
        chosen.push(a);
        if rational_rank(&chosen) == chosen.len() {
            minima.push(m);
            if minima.len() == k {
                break;
            }
        } else {
            chosen.pop();
        }
    }
    minima
}

/// Determinant of an integer matrix (Bareiss).
pub fn integer_determinant(rows: &[Vec<i64>]) -> i128 {
    let n = rows.len();
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(p) = ((k + 1)..n).find(|&r| m[r][k] != 0) else { return 0 };
            m.swap(k, p);
            sign = -sign;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Codeword of `G b` (G as n rows of k entries) maximizing `Π app[t][c_t]`
/// over every message; ties go to the lexicographically smallest codeword.
pub fn oracle_map_decode(generator: &[Vec<u64>], q: u64, app: &[Vec<f64>]) -> Vec<u64> {
    let k = generator[0].len();
    let mut best: Option<(Vec<u64>, f64)> = None;
    for b in all_words(q, k) {
        let c = encode(generator, q, &b);
        let score: f64 = c.iter().enumerate().map(|(t, &s)| app[t][s as usize].ln()).sum();
        let better = match &best {
            None => true,
            Some((bc, bs)) => score > *bs || (score == *bs && c < *bc),
        };
        if better {
            best = Some((c, score));
        }
    }
    best.expect("at least one codeword").0
}

/// Exact symbol-wise posteriors `P(c_t = s | app)` over the codebook.
pub fn oracle_symbol_posteriors(generator: &[Vec<u64>], q: u64, app: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = generator.len();
    let k = generator[0].len();
    let mut post = vec![vec![0.0; q as usize]; n];
    for b in all_words(q, k) {
        let c = encode(generator, q, &b);
        let w: f64 = c.iter().enumerate().map(|(t, &s)| app[t][s as usize]).product();
        for (t, &s) in c.iter().enumerate() {
            post[t][s as usize] += w;
        }
    }
    for row in &mut post {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    post
}

pub fn encode(generator: &[Vec<u64>], q: u64, b: &[u64]) -> Vec<u64> {
    generator.iter().map(|row| row.iter().zip(b).map(|(g, x)| g * x).sum::<u64>() % q).collect()
}

/// Whether `x^T A = target (mod q)` has a solution, by trying every `x`.
pub fn row_space_contains(a: &[Vec<u64>], q: u64, target: &[u64]) -> bool {
    let l = a.len();
    all_words(q, l).into_iter().any(|x| {
        (0..target.len()).all(|i| (0..l).map(|r| x[r] * a[r][i]).sum::<u64>() % q == target[i] % q)
    })
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Rank over GF(p), p prime.
pub fn prime_rank(rows: &[Vec<u64>], p: u64) -> usize {
    prime_echelon(rows, p).1
}

fn prime_echelon(rows: &[Vec<u64>], p: u64) -> (Vec<Vec<u64>>, usize) {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|v| v % p).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, piv);
        let inv = pow_mod(m[rank][c], p - 2, p);
        m[rank].iter_mut().for_each(|v| *v = *v * inv % p);
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c];
                for j in 0..cols {
                    m[r][j] = (m[r][j] + (p - f) * m[rank][j]) % p;
                }
            }
        }
        rank += 1;
    }
    (m, rank)
}

/// Inverse over GF(p) via `[A | I]` elimination.
pub fn prime_inverse(a: &[Vec<u64>], p: u64) -> Option<Vec<Vec<u64>>> {
    let n = a.len();
    let aug: Vec<Vec<u64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| u64::from(i == j)));
            row
        })
        .collect();
    let (m, _) = prime_echelon(&aug, p);
    for (i, row) in m.iter().enumerate() {
        if (0..n).any(|j| row[j] != u64::from(i == j)) {
            return None;
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Mutual information of uniform q-PAM over `y = √ρ x + z` by a fine
/// trapezoid rule on the output density.
pub fn trapezoid_pam_mi(q: u64, rho: f64, step: f64) -> f64 {
    let pts: Vec<f64> = (0..q).map(|c| rho.sqrt() * pam(c, q)).collect();
    let lo = pts[0] - 12.0;
    let hi = pts[pts.len() - 1] + 12.0;
    let steps = ((hi - lo) / step).ceil() as usize;
    let h = (hi - lo) / steps as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let f = |y: f64| {
        let p: f64 = pts.iter().map(|m| (-(y - m) * (y - m) / 2.0).exp() / norm).sum::<f64>() / q as f64;
        if p > 0.0 { -p * p.log2() } else { 0.0 }
    };
    let mut hy = 0.5 * (f(lo) + f(hi));
    for i in 1..steps {
        hy += f(lo + i as f64 * h);
    }
    hy *= h;
    let hz = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2();
    hy - hz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_candidate_app() {
        let p = oracle_app(&[vec![1.0]], 1.0, &[0.9], &[vec![1]], 2);
        assert!((p[0][1] - 0.858).abs() < 1e-3);
    }

    #[test]
    fn shortest_on_diagonal() {
        let g = vec![vec![3.0, 0.0], vec![0.0, 0.5]];
        let (a, m) = oracle_shortest(&g, OracleBudget::default());
        assert_eq!(a.iter().map(|v| v.abs()).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(m, 0.5);
        assert_eq!(successive_minima(&g, OracleBudget::default()), vec![0.5, 3.0]);
    }

    #[test]
    fn determinants() {
        assert_eq!(integer_determinant(&[vec![2, 1], vec![1, 1]]), 1);
        assert_eq!(integer_determinant(&[vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(integer_determinant(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]), -3);
    }

    #[test]
    fn ranks() {
        assert_eq!(rational_rank(&[vec![1, 1], vec![1, -1]]), 2);
        assert_eq!(rational_rank(&[vec![2, 4], vec![1, 2]]), 1);
        assert_eq!(prime_rank(&[vec![1, 1], vec![1, 2]], 3), 2);
        assert_eq!(prime_rank(&[vec![1, 2], vec![2, 1]], 3), 1);
        let inv = prime_inverse(&[vec![1, 1], vec![1, 2]], 5).unwrap();
        assert_eq!(inv, vec![vec![2, 4], vec![4, 1]]);
    }

    #[test]
    fn map_ties_are_lexicographic() {
        let g = vec![vec![1], vec![1]];
        let app = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert_eq!(oracle_map_decode(&g, 2, &app), vec![0, 0]);
    }

    #[test]
    fn row_space() {
        assert!(row_space_contains(&[vec![1, 1], vec![0, 1]], 4, &[1, 0]));
        assert!(!row_space_contains(&[vec![2, 0]], 4, &[1, 0]));
    }

    #[test]
    fn mi_bounds() {
        assert!(trapezoid_pam_mi(2, 0.0, 0.01).abs() < 1e-6);
        assert!((trapezoid_pam_mi(2, 100.0, 0.01) - 1.0).abs() < 1e-6);
    }
}
