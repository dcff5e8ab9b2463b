//! Flooding sum-product decoding over Z_q.
//!
//! A check `Σ h_j c_j = 0 (mod q)` with unit coefficients is handled by moving
//! each incoming message to the `y_j = h_j c_j` domain and combining the
//! others with cyclic convolutions. Cost is O(q^2) per edge.

use super::pam::AppSequence;
use super::RingCode;
use crate::error::{LcmaError, Result};

pub const DEFAULT_MAX_ITERS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpOutcome {
    /// Best-effort message estimate.
    pub message: Vec<u64>,
    /// Hard-decision codeword estimate.
    pub codeword: Vec<u64>,
    /// True when the hard decision has zero syndrome.
    pub success: bool,
    pub iterations: usize,
}

struct Graph {
    // (check, var, coef) per edge
    edges: Vec<(usize, usize, u64)>,
    check_edges: Vec<Vec<usize>>,
    var_edges: Vec<Vec<usize>>,
}

impl Graph {
    fn new(code: &RingCode) -> Self {
        let mut edges = Vec::new();
        let mut check_edges = vec![Vec::new(); code.checks().len()];
        let mut var_edges = vec![Vec::new(); code.n()];
        for (r, row) in code.checks().iter().enumerate() {
            for e in row {
                let id = edges.len();
                edges.push((r, e.col, e.value));
                check_edges[r].push(id);
                var_edges[e.col].push(id);
            }
        }
        Self { edges, check_edges, var_edges }
    }
}

fn cyclic_convolve(a: &[f64], b: &[f64], out: &mut [f64]) {
    let q = a.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[(i + j) % q] += x * y;
        }
    }
}

fn normalize_in_place(p: &mut [f64]) {
    let sum: f64 = p.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        p.iter_mut().for_each(|v| *v /= sum);
    } else {
        let u = 1.0 / p.len() as f64;
        p.iter_mut().for_each(|v| *v = u);
    }
}

fn hard_decision(p: &[f64]) -> u64 {
    let mut best = 0;
    for (c, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = c;
        }
    }
    best as u64
}

/// Decodes an APP sequence. Never fails on non-decodable input: `success` is
/// false and the message is a best-effort estimate.
pub fn decode_bp(code: &RingCode, app: &AppSequence, max_iters: usize) -> Result<BpOutcome> {
    let (codeword, _, success, iterations) = propagate(code, app, max_iters, true)?;
    let message = code.message_of(&codeword)?;
    Ok(BpOutcome { message, codeword, success, iterations })
}

/// Symbol posteriors after exactly `iters` flooding iterations, without the
/// syndrome stop. Exact marginals on cycle-free graphs once `iters` reaches
/// the graph diameter.
pub fn bp_posteriors(code: &RingCode, app: &AppSequence, iters: usize) -> Result<AppSequence> {
    let (_, post, _, _) = propagate(code, app, iters, false)?;
    AppSequence::from_weights(post, code.modulus() as usize)
}

type Propagated = (Vec<u64>, Vec<Vec<f64>>, bool, usize);

fn propagate(code: &RingCode, app: &AppSequence, max_iters: usize, early_stop: bool) -> Result<Propagated> {
    let q = code.modulus() as usize;
    if app.len() != code.n() || app.q() != q {
        return Err(LcmaError::Shape(format!(
            "APP of {}x{} for a code with n={}, q={q}",
            app.len(),
            app.q(),
            code.n()
        )));
    }
    let n = code.n();
    let mut codeword: Vec<u64> = (0..n).map(|t| hard_decision(app.row(t))).collect();
    let mut posts: Vec<Vec<f64>> = (0..n).map(|t| app.row(t).to_vec()).collect();
    if early_stop && code.syndrome_is_zero(&codeword) {
        return Ok((codeword, posts, true, 0));
    }

    let graph = Graph::new(code);
    let ne = graph.edges.len();
    let mut v2c: Vec<f64> = Vec::with_capacity(ne * q);
    for &(_, var, _) in &graph.edges {
        v2c.extend_from_slice(app.row(var));
    }
    let mut c2v = vec![1.0 / q as f64; ne * q];

    let mut fwd: Vec<Vec<f64>> = Vec::new();
    let mut bwd: Vec<Vec<f64>> = Vec::new();
    let mut shifted: Vec<Vec<f64>> = Vec::new();
    let mut excl = vec![0.0; q];
    let mut posterior = vec![0.0; q];

    for iter in 1..=max_iters {
        // check-node update
        for edges in &graph.check_edges {
            let d = edges.len();
            shifted.resize_with(d, || vec![0.0; q]);
            for (slot, &e) in edges.iter().enumerate() {
                let h = graph.edges[e].2 as usize;
                let s = &mut shifted[slot];
                s.iter_mut().for_each(|v| *v = 0.0);
                for c in 0..q {
                    s[(h * c) % q] += v2c[e * q + c];
                }
            }
            fwd.resize_with(d + 1, || vec![0.0; q]);
            bwd.resize_with(d + 1, || vec![0.0; q]);
            fwd[0].iter_mut().enumerate().for_each(|(i, v)| *v = if i == 0 { 1.0 } else { 0.0 });
            bwd[d].iter_mut().enumerate().for_each(|(i, v)| *v = if i == 0 { 1.0 } else { 0.0 });
            for i in 0..d {
                let (lo, hi) = fwd.split_at_mut(i + 1);
                cyclic_convolve(&lo[i], &shifted[i], &mut hi[0]);
            }
            for i in (0..d).rev() {
                let (lo, hi) = bwd.split_at_mut(i + 1);
                cyclic_convolve(&hi[0], &shifted[i], &mut lo[i]);
            }
            for (slot, &e) in edges.iter().enumerate() {
                cyclic_convolve(&fwd[slot], &bwd[slot + 1], &mut excl);
                let h = graph.edges[e].2 as usize;
                let msg = &mut c2v[e * q..(e + 1) * q];
                for c in 0..q {
                    msg[c] = excl[(q - (h * c) % q) % q];
                }
                normalize_in_place(msg);
            }
        }

        // variable-node update and hard decision
        for var in 0..n {
            let prior = app.row(var);
            let edges = &graph.var_edges[var];
            posterior.copy_from_slice(prior);
            for &e in edges {
                for c in 0..q {
                    posterior[c] *= c2v[e * q + c];
                }
            }
            normalize_in_place(&mut posterior);
            codeword[var] = hard_decision(&posterior);
            posts[var].copy_from_slice(&posterior);
            for &e in edges {
                let m = &mut v2c[e * q..(e + 1) * q];
                m.copy_from_slice(prior);
                for &o in edges {
                    if o != e {
                        for c in 0..q {
                            m[c] *= c2v[o * q + c];
                        }
                    }
                }
                normalize_in_place(m);
            }
        }

        if early_stop && code.syndrome_is_zero(&codeword) {
            return Ok((codeword, posts, true, iter));
        }
    }
    let success = code.syndrome_is_zero(&codeword);
    Ok((codeword, posts, success, max_iters))
}
