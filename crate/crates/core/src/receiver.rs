//! Single-stage and multi-stage receivers.
//!
//! A stage selects integer coefficients for the users still undecided,
//! computes per-stream APPs, decodes every stream independently with q-ary BP
//! and recovers whichever users the successfully decoded streams determine.
//! The multi-stage receiver then re-encodes the recovered users, cancels them
//! from the received signal and repeats on the rest.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::code::{decode_bp, AppSequence, BpOutcome, PamMapper, RingCode, DEFAULT_MAX_ITERS};
use crate::coeff::{select_coefficients, CoefficientMatrix};
use crate::error::{LcmaError, Result};
use crate::lf::{build_filter, LfDetector, DEFAULT_SUPPORT_CAP};
use crate::lpnc::{ExhaustiveDetector, LsdDetector, DEFAULT_ENUMERATION_CAP, DEFAULT_LIST_SIZE};
use crate::zq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorKind {
    /// Full-space APPs from a list sphere decoder.
    #[serde(rename = "lsd")]
    LpncLsd,
    /// Full-space APPs over all q^K candidates.
    #[serde(rename = "exhaustive")]
    LpncExhaustive,
    /// One-dimensional APPs after linear filtering.
    #[serde(rename = "lf")]
    LinearFilter,
}

impl std::str::FromStr for DetectorKind {
    type Err = LcmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsd" => Ok(Self::LpncLsd),
            "exhaustive" => Ok(Self::LpncExhaustive),
            "lf" => Ok(Self::LinearFilter),
            _ => Err(LcmaError::Config(format!("unknown detector {s:?} (expected lsd, exhaustive or lf)"))),
        }
    }
}

/// Number of streams per stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LTarget {
    /// One stream per remaining user; only syndrome-valid streams are used.
    Auto,
    /// At most this many streams per stage.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageConfig {
    pub detector: DetectorKind,
    pub l_target: LTarget,
    pub max_stages: usize,
    pub list_size: usize,
    /// Filter regularization; `None` means ϑ = ρ.
    pub theta: Option<f64>,
    pub support_cap: usize,
    pub enumeration_cap: u128,
    pub bp_iters: usize,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            detector: DetectorKind::LinearFilter,
            l_target: LTarget::Auto,
            max_stages: 4,
            list_size: DEFAULT_LIST_SIZE,
            theta: None,
            support_cap: DEFAULT_SUPPORT_CAP,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            bp_iters: DEFAULT_MAX_ITERS,
        }
    }
}

/// One decoded stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutcome {
    pub stage: usize,
    /// Integer coefficients over the global user indices.
    pub coefficients: Vec<i64>,
    pub combination: Vec<u64>,
    pub success: bool,
}

/// Coefficients used in one stage, over the users that were still undecided.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub users: Vec<usize>,
    pub coefficients: CoefficientMatrix,
    pub recovered: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverReport {
    pub streams: Vec<StreamOutcome>,
    /// Recovered users and their messages.
    pub recovered: BTreeMap<usize, Vec<u64>>,
    /// Message estimate for every user; recovered users take their recovered
    /// message, the rest a best-effort guess.
    pub estimates: Vec<Vec<u64>>,
    pub stages_run: usize,
    pub stages: Vec<StageRecord>,
}

impl ReceiverReport {
    pub fn recovered_users(&self) -> Vec<usize> {
        self.recovered.keys().copied().collect()
    }
}

fn theta_for(cfg: &StageConfig, rho: f64) -> f64 {
    match cfg.theta {
        Some(t) => t,
        None if rho > 0.0 => rho,
        None => 1.0,
    }
}

/// Per-stream APP sequences for every column of `y`.
pub fn stream_apps(
    h: &ChannelRealization,
    y: &DMatrix<f64>,
    a: &CoefficientMatrix,
    cfg: &StageConfig,
) -> Result<Vec<AppSequence>> {
    if y.nrows() != h.dim() {
        return Err(LcmaError::Shape(format!("received {} rows for N={}", y.nrows(), h.dim())));
    }
    let q = a.modulus();
    let columns: Vec<Vec<f64>> = y.column_iter().map(|c| c.iter().copied().collect()).collect();
    let per_column: Vec<Vec<Vec<f64>>> = match cfg.detector {
        DetectorKind::LpncExhaustive => {
            let det = ExhaustiveDetector::new(h, a.a_mod(), cfg.enumeration_cap)?;
            columns.par_iter().map(|c| det.apps(c)).collect()
        }
        DetectorKind::LpncLsd => {
            let det = LsdDetector::new(h, q, cfg.list_size)?;
            columns.par_iter().map(|c| det.apps(c, a.a_mod())).collect::<Result<_>>()?
        }
        DetectorKind::LinearFilter => {
            let bank = build_filter(h, a, theta_for(cfg, h.rho()))?;
            let det = LfDetector::new(bank, a, cfg.support_cap)?;
            columns.par_iter().map(|c| det.apps(c)).collect()
        }
    };
    (0..a.streams())
        .map(|l| {
            let rows = per_column.iter().map(|col| col[l].clone()).collect();
            AppSequence::from_weights(rows, q as usize)
        })
        .collect()
}

fn decode_all(code: &RingCode, apps: &[AppSequence], iters: usize) -> Result<Vec<BpOutcome>> {
    apps.par_iter().map(|app| decode_bp(code, app, iters)).collect()
}

// A⁻¹ ⊗ Û when A is square and unit-invertible.
fn invert_all(a: &CoefficientMatrix, combos: &[Vec<u64>]) -> Option<Vec<Vec<u64>>> {
    let inv = zq::is_unit_invertible(a.a_mod())?;
    let k = inv.rows();
    let len = combos.first().map_or(0, Vec::len);
    let mut out = vec![vec![0u64; len]; k];
    for t in 0..len {
        let col: Vec<u64> = combos.iter().map(|u| u[t]).collect();
        let b = inv.mul_vec(&col).ok()?;
        for (i, v) in b.into_iter().enumerate() {
            out[i][t] = v;
        }
    }
    Some(out)
}

fn expand(row: &[i64], users: &[usize], k: usize) -> Vec<i64> {
    let mut full = vec![0; k];
    for (&u, &v) in users.iter().zip(row) {
        full[u] = v;
    }
    full
}

struct StageResult {
    coefficients: CoefficientMatrix,
    outcomes: Vec<BpOutcome>,
    recovered: Vec<(usize, Vec<u64>)>,
    guesses: Option<Vec<Vec<u64>>>,
}

// Runs one stage on the listed users (local indices in the result).
fn run_stage(
    h: &ChannelRealization,
    y: &DMatrix<f64>,
    code: &RingCode,
    l: usize,
    cfg: &StageConfig,
) -> Result<StageResult> {
    let q = code.modulus();
    let selection = select_coefficients(h, l, q)?;
    let a = selection.coefficients;
    let apps = stream_apps(h, y, &a, cfg)?;
    let outcomes = decode_all(code, &apps, cfg.bp_iters)?;
    let combos: Vec<Vec<u64>> = outcomes.iter().map(|o| o.message.clone()).collect();
    let guesses = invert_all(&a, &combos);

    let kept: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i].success).collect();
    let recovered = if kept.len() == a.users() && kept.len() == a.streams() {
        // everything decoded: plain inverse
        match &guesses {
            Some(g) => g.iter().cloned().enumerate().collect(),
            None => gmi_recover(&a, &kept, &combos)?,
        }
    } else if kept.is_empty() {
        Vec::new()
    } else {
        gmi_recover(&a, &kept, &combos)?
    };
    Ok(StageResult { coefficients: a, outcomes, recovered, guesses })
}

fn gmi_recover(a: &CoefficientMatrix, kept: &[usize], combos: &[Vec<u64>]) -> Result<Vec<(usize, Vec<u64>)>> {
    let sub = a.a_mod().select_rows(kept);
    let kept_combos: Vec<Vec<u64>> = kept.iter().map(|&i| combos[i].clone()).collect();
    zq::gmi(&sub).recover(&kept_combos)
}

fn check_inputs(h: &ChannelRealization, y: &DMatrix<f64>, code: &RingCode) -> Result<()> {
    if y.nrows() != h.dim() || y.ncols() != code.n() {
        return Err(LcmaError::Shape(format!(
            "received {}x{}, expected {}x{}",
            y.nrows(),
            y.ncols(),
            h.dim(),
            code.n()
        )));
    }
    Ok(())
}

/// Decodes K streams in parallel and inverts the coefficient matrix, or
/// recovers what the successful streams allow.
pub fn run_single_stage(
    h: &ChannelRealization,
    y: &DMatrix<f64>,
    code: &RingCode,
    cfg: &StageConfig,
) -> Result<ReceiverReport> {
    check_inputs(h, y, code)?;
    let k = h.users();
    let users: Vec<usize> = (0..k).collect();
    let stage = run_stage(h, y, code, k, cfg)?;
    let mut report = ReceiverReport {
        streams: Vec::new(),
        recovered: BTreeMap::new(),
        estimates: vec![vec![0; code.k()]; k],
        stages_run: 1,
        stages: Vec::new(),
    };
    absorb(&mut report, 1, &users, stage, k);
    Ok(report)
}

fn absorb(report: &mut ReceiverReport, stage_no: usize, users: &[usize], stage: StageResult, k: usize) -> Vec<usize> {
    for (row, o) in stage.coefficients.a_tilde().iter().zip(&stage.outcomes) {
        report.streams.push(StreamOutcome {
            stage: stage_no,
            coefficients: expand(row, users, k),
            combination: o.message.clone(),
            success: o.success,
        });
    }
    if let Some(g) = &stage.guesses {
        for (local, msg) in g.iter().enumerate() {
            report.estimates[users[local]] = msg.clone();
        }
    }
    let mut newly = Vec::new();
    for (local, msg) in stage.recovered {
        let user = users[local];
        report.estimates[user] = msg.clone();
        report.recovered.insert(user, msg);
        newly.push(user);
    }
    newly.sort_unstable();
    report.stages.push(StageRecord {
        users: users.to_vec(),
        coefficients: stage.coefficients,
        recovered: newly.clone(),
    });
    newly
}

/// Subtracts `√ρ h_i x_i^T` for each recovered user from `y`.
pub fn cancel_users(
    h: &ChannelRealization,
    y: &mut DMatrix<f64>,
    code: &RingCode,
    users: &[(usize, &[u64])],
) -> Result<()> {
    let mapper = PamMapper::new(code.modulus());
    let sr = h.rho().sqrt();
    for &(user, msg) in users {
        let x = mapper.map(&code.encode(msg)?);
        for (t, &xt) in x.iter().enumerate() {
            for r in 0..y.nrows() {
                y[(r, t)] -= sr * h.h()[(r, user)] * xt;
            }
        }
    }
    Ok(())
}

/// Repeats stages with cancellation of recovered users until nothing new is
/// recovered, every user is recovered, or `max_stages` is reached.
pub fn run_multi_stage(
    h: &ChannelRealization,
    y: &DMatrix<f64>,
    code: &RingCode,
    cfg: &StageConfig,
) -> Result<ReceiverReport> {
    check_inputs(h, y, code)?;
    if cfg.max_stages == 0 {
        return Err(LcmaError::InvalidArgument("max_stages must be at least 1".into()));
    }
    let k = h.users();
    let mut report = ReceiverReport {
        streams: Vec::new(),
        recovered: BTreeMap::new(),
        estimates: vec![vec![0; code.k()]; k],
        stages_run: 0,
        stages: Vec::new(),
    };
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut y_cur = y.clone();
    for stage_no in 1..=cfg.max_stages {
        let sub = h.select_users(&remaining);
        let l = match cfg.l_target {
            LTarget::Auto => remaining.len(),
            LTarget::Count(c) => c.clamp(1, remaining.len()),
        };
        let stage = run_stage(&sub, &y_cur, code, l, cfg)?;
        report.stages_run = stage_no;
        let newly = absorb(&mut report, stage_no, &remaining, stage, k);
        if newly.is_empty() {
            break;
        }
        let cancel: Vec<(usize, &[u64])> = newly.iter().map(|&u| (u, report.recovered[&u].as_slice())).collect();
        cancel_users(h, &mut y_cur, code, &cancel)?;
        remaining.retain(|u| !newly.contains(u));
        if remaining.is_empty() {
            break;
        }
    }
    Ok(report)
}
