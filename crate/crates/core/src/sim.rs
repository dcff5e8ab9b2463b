//! Monte Carlo experiment engine: SNR sweeps producing FER/BER tables.
//!
//! Trial `t` at SNR index `s` draws everything from its own RNG stream
//! seeded by `(seed, s, t)`. Trials run in parallel batches, and the
//! per-point counters are accumulated in trial order, so the stopping point
//! and every count are independent of the thread count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    build_h, draw_spatial, generate_spreading, load_spreading, transmit_noise_free, transmit_with, Fading,
    SpreadingGenConfig, SpreadingMatrix,
};
use crate::code::{make_irregular_code, make_test_codes, read_code, PamMapper, RingCode, DEFAULT_MAX_ITERS};
use crate::coeff::{select_coefficients, CoefficientMatrix};
use crate::error::{LcmaError, Result};
use crate::lf::DEFAULT_SUPPORT_CAP;
use crate::lpnc::{DEFAULT_ENUMERATION_CAP, DEFAULT_LIST_SIZE};
use crate::rates::{estimate_rates, pam_awgn_mi, Conditioning};
use crate::receiver::{run_multi_stage, run_single_stage, DetectorKind, LTarget, StageConfig};
use crate::seed::{derive_seed, stream_rng};
use crate::zq;

pub const DEFAULT_MAX_FRAME_ERRORS: u64 = 100;
pub const DEFAULT_MAX_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverMode {
    Single,
    Multi,
}

impl std::str::FromStr for ReceiverMode {
    type Err = LcmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Self::Single),
            "multi" => Ok(Self::Multi),
            _ => Err(LcmaError::Config(format!("unknown receiver {s:?} (expected single or multi)"))),
        }
    }
}

/// One experiment. Every field has a default, so a config file only lists
/// what it changes; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub q: u64,
    pub users: usize,
    pub ns: usize,
    pub nr: usize,
    pub fading: Fading,
    /// Code length when no code file is given.
    pub code_n: usize,
    /// Message length when no code file is given.
    pub code_k: usize,
    pub code_seed: u64,
    /// `[[degree, fraction], ...]` column-degree profile for an irregular
    /// code; column weight 3 when absent.
    pub code_profile: Option<Vec<(usize, f64)>>,
    pub code_file: Option<PathBuf>,
    /// Without a file: no spreading for ns = 1, the bundled matrix for
    /// K = 10, ns = 4, otherwise a generated one.
    pub spreading_file: Option<PathBuf>,
    pub detector: DetectorKind,
    pub receiver: ReceiverMode,
    pub list_size: usize,
    /// Filter regularization, default ρ.
    pub theta: Option<f64>,
    pub max_stages: usize,
    /// Streams per stage; absent means one per remaining user.
    pub streams: Option<usize>,
    pub bp_iters: usize,
    pub snr_db: Vec<f64>,
    /// Trial cap per SNR point.
    pub trials: u64,
    pub max_frame_errors: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Skip the noise draw.
    pub noise_free: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            q: 2,
            users: 2,
            ns: 1,
            nr: 2,
            fading: Fading::RayleighBlock,
            code_n: 128,
            code_k: 64,
            code_seed: 1,
            code_profile: None,
            code_file: None,
            spreading_file: None,
            detector: DetectorKind::LinearFilter,
            receiver: ReceiverMode::Single,
            list_size: DEFAULT_LIST_SIZE,
            theta: None,
            max_stages: 4,
            streams: None,
            bp_iters: DEFAULT_MAX_ITERS,
            snr_db: vec![0.0, 5.0, 10.0],
            trials: DEFAULT_MAX_TRIALS,
            max_frame_errors: DEFAULT_MAX_FRAME_ERRORS,
            seed: 0,
            out: None,
            noise_free: false,
        }
    }
}

fn config_err(msg: impl Into<String>) -> LcmaError {
    LcmaError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !zq::is_supported_modulus(self.q) {
            return Err(config_err(format!("q={} must be a power of two or a prime", self.q)));
        }
        if self.users == 0 || self.ns == 0 || self.nr == 0 {
            return Err(config_err("users, ns and nr must be at least 1"));
        }
        if self.code_file.is_none() && (self.code_k == 0 || self.code_k >= self.code_n) {
            return Err(config_err(format!("need 0 < code_k < code_n, got n={}, k={}", self.code_n, self.code_k)));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(config_err("snr_db must be a non-empty list of finite values"));
        }
        if self.trials == 0 || self.max_frame_errors == 0 {
            return Err(config_err("trials and max_frame_errors must be at least 1"));
        }
        if self.list_size == 0 || self.max_stages == 0 {
            return Err(config_err("list_size and max_stages must be at least 1"));
        }
        if self.theta.is_some_and(|t| !(t > 0.0) || !t.is_finite()) {
            return Err(config_err("theta must be positive"));
        }
        if self.streams == Some(0) {
            return Err(config_err("streams must be at least 1"));
        }
        if self.receiver == ReceiverMode::Single && self.streams.is_some_and(|s| s != self.users) {
            return Err(config_err("the single-stage receiver uses one stream per user"));
        }
        if self.detector == DetectorKind::LpncExhaustive {
            let size = (self.q as u128).checked_pow(self.users as u32).unwrap_or(u128::MAX);
            if size > DEFAULT_ENUMERATION_CAP {
                return Err(config_err(format!("q^K = {size} candidates is too many for the exhaustive detector")));
            }
        }
        Ok(())
    }

    pub fn stage_config(&self) -> StageConfig {
        StageConfig {
            detector: self.detector,
            l_target: self.streams.map_or(LTarget::Auto, LTarget::Count),
            max_stages: self.max_stages,
            list_size: self.list_size,
            theta: self.theta,
            support_cap: DEFAULT_SUPPORT_CAP,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            bp_iters: self.bp_iters,
        }
    }

    pub fn load_code(&self) -> Result<RingCode> {
        let code = match &self.code_file {
            Some(p) => read_code(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?,
            None => match &self.code_profile {
                Some(p) => make_irregular_code(self.q, self.code_n, self.code_k, p, self.code_seed)?,
                None => make_test_codes(self.q, self.code_n, self.code_k, self.code_seed)?,
            },
        };
        if code.modulus() != self.q {
            return Err(config_err(format!("code is over Z_{}, config says q={}", code.modulus(), self.q)));
        }
        Ok(code)
    }

    pub fn load_spreading(&self) -> Result<SpreadingMatrix> {
        resolve_spreading(self.spreading_file.as_deref(), self.users, self.ns, self.q, self.seed)
    }
}

fn resolve_spreading(file: Option<&Path>, users: usize, ns: usize, q: u64, seed: u64) -> Result<SpreadingMatrix> {
    let s = match file {
        Some(p) => load_spreading(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?,
        None if ns == 1 => SpreadingMatrix::none(users),
        None if users == 10 && ns == 4 => SpreadingMatrix::builtin_k10_ns4(),
        None => {
            let cfg = SpreadingGenConfig { q, ..SpreadingGenConfig::new(users, ns, seed) };
            generate_spreading(&cfg)?.matrix
        }
    };
    if s.users() != users || s.ns() != ns {
        return Err(config_err(format!(
            "spreading matrix is {}x{}, config has ns={ns}, users={users}",
            s.ns(),
            s.users()
        )));
    }
    Ok(s)
}

/// Aggregated results for one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub trials: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    /// Mean number of users whose message was recovered correctly.
    pub mean_recovered: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub frame_error: bool,
    pub bit_errors: u64,
    pub recovered: usize,
}

pub fn bits_per_symbol(q: u64) -> u32 {
    64 - (q - 1).leading_zeros()
}

/// Everything that stays fixed across trials.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub code: RingCode,
    pub spreading: SpreadingMatrix,
    stage: StageConfig,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let code = config.load_code()?;
        let spreading = config.load_spreading()?;
        let stage = config.stage_config();
        Ok(Self { config, code, spreading, stage })
    }

    /// One independent trial, fully determined by its indices.
    pub fn run_trial(&self, snr_idx: usize, trial: u64) -> Result<TrialOutcome> {
        let cfg = &self.config;
        let rho = 10f64.powf(cfg.snr_db[snr_idx] / 10.0);
        let mut rng = stream_rng(cfg.seed, &[snr_idx as u64, trial]);
        let spatial = draw_spatial(cfg.nr, cfg.users, cfg.fading, &mut rng);
        let h = build_h(&self.spreading, &spatial, cfg.fading, rho)?;
        let k = self.code.k();
        let messages: Vec<Vec<u64>> =
            (0..cfg.users).map(|_| (0..k).map(|_| rng.random_range(0..cfg.q)).collect()).collect();
        let mapper = PamMapper::new(cfg.q);
        let mut x = DMatrix::zeros(cfg.users, self.code.n());
        for (i, m) in messages.iter().enumerate() {
            for (t, v) in mapper.map(&self.code.encode(m)?).into_iter().enumerate() {
                x[(i, t)] = v;
            }
        }
        let y = if cfg.noise_free { transmit_noise_free(&h, &x)? } else { transmit_with(&h, &x, &mut rng)? };
        let report = match cfg.receiver {
            ReceiverMode::Single => run_single_stage(&h, &y, &self.code, &self.stage)?,
            ReceiverMode::Multi => run_multi_stage(&h, &y, &self.code, &self.stage)?,
        };
        let mut out = TrialOutcome::default();
        for (i, truth) in messages.iter().enumerate() {
            let est = &report.estimates[i];
            let errs: u64 = truth.iter().zip(est).map(|(a, b)| (a ^ b).count_ones() as u64).sum();
            out.bit_errors += errs;
            if errs > 0 {
                out.frame_error = true;
            } else if report.recovered.contains_key(&i) {
                out.recovered += 1;
            }
        }
        Ok(out)
    }

    fn batch_size() -> u64 {
        (rayon::current_num_threads() as u64 * 2).max(4)
    }

    /// Runs one SNR point until the frame-error budget or the trial cap.
    pub fn run_point(&self, snr_idx: usize) -> Result<ResultRow> {
        let cfg = &self.config;
        let start = Instant::now();
        let (mut trials, mut fe, mut be, mut rec) = (0u64, 0u64, 0u64, 0u64);
        let batch = Self::batch_size();
        'outer: while trials < cfg.trials {
            let end = (trials + batch).min(cfg.trials);
            let outcomes: Vec<TrialOutcome> =
                (trials..end).into_par_iter().map(|t| self.run_trial(snr_idx, t)).collect::<Result<_>>()?;
            for o in outcomes {
                trials += 1;
                fe += o.frame_error as u64;
                be += o.bit_errors;
                rec += o.recovered as u64;
                if fe >= cfg.max_frame_errors {
                    break 'outer;
                }
            }
        }
        let bits = trials as f64 * cfg.users as f64 * self.code.k() as f64 * bits_per_symbol(cfg.q) as f64;
        Ok(ResultRow {
            snr_db: cfg.snr_db[snr_idx],
            trials,
            frame_errors: fe,
            bit_errors: be,
            fer: fe as f64 / trials as f64,
            ber: be as f64 / bits,
            mean_recovered: rec as f64 / trials as f64,
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    }

    pub fn run(&self) -> Result<Vec<ResultRow>> {
        (0..self.config.snr_db.len())
            .map(|s| {
                let row = self.run_point(s)?;
                log::info!(
                    "snr {} dB: {} trials, {} frame errors, fer {:.3e}",
                    row.snr_db,
                    row.trials,
                    row.frame_errors,
                    row.fer
                );
                Ok(row)
            })
            .collect()
    }
}

/// Validates, builds and runs an experiment; writes the CSV when `out` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let exp = Experiment::new(config.clone())?;
    let rows = exp.run()?;
    if let Some(path) = &config.out {
        emit_csv(&rows, path)?;
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "snr_db,trials,frame_errors,bit_errors,fer,ber,mean_recovered,wall_time_s";

pub fn format_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.snr_db, r.trials, r.frame_errors, r.bit_errors, r.fer, r.ber, r.mean_recovered, r.wall_time_s
        );
    }
    s
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_csv(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(LcmaError::Parse { line: 1, msg: "missing or unexpected header".into() }),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let err = |msg: String| LcmaError::Parse { line: i + 2, msg };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(err(format!("expected 8 fields, got {}", f.len())));
            }
            let pf = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
            let pu = |s: &str| s.parse::<u64>().map_err(|e| err(format!("{s:?}: {e}")));
            Ok(ResultRow {
                snr_db: pf(f[0])?,
                trials: pu(f[1])?,
                frame_errors: pu(f[2])?,
                bit_errors: pu(f[3])?,
                fer: pf(f[4])?,
                ber: pf(f[5])?,
                mean_recovered: pf(f[6])?,
                wall_time_s: pf(f[7])?,
            })
        })
        .collect()
}

/// Expands `a:b:step` (dB, inclusive of `b` up to rounding) or a single value.
pub fn parse_snr_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.trim().parse::<f64>().map_err(|e| config_err(format!("bad SNR value {s:?}: {e}")))
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(config_err(format!("SNR range {spec:?} needs a <= b and step > 0")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| a + step * i as f64).collect())
        }
        _ => Err(config_err(format!("SNR range {spec:?} must be a:b:step or a single value"))),
    }
}

/// Which coefficient matrix a rate sweep evaluates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateSweepConfig {
    pub q: u64,
    pub users: usize,
    pub ns: usize,
    pub nr: usize,
    pub fading: Fading,
    pub spreading_file: Option<PathBuf>,
    pub snr_db: Vec<f64>,
    /// Channel draws per SNR point.
    pub draws: usize,
    /// Monte Carlo samples per rate estimate.
    pub samples: usize,
    pub conditioning: Conditioning,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RateSweepConfig {
    fn default() -> Self {
        Self {
            q: 2,
            users: 2,
            ns: 1,
            nr: 2,
            fading: Fading::RayleighBlock,
            spreading_file: None,
            snr_db: vec![0.0, 5.0, 10.0],
            draws: 20,
            samples: 2000,
            conditioning: Conditioning::FullY,
            seed: 0,
            out: None,
        }
    }
}

impl RateSweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !zq::is_supported_modulus(self.q) {
            return Err(config_err(format!("q={} must be a power of two or a prime", self.q)));
        }
        if self.users == 0 || self.ns == 0 || self.nr == 0 || self.draws == 0 || self.samples == 0 {
            return Err(config_err("users, ns, nr, draws and samples must be at least 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(config_err("snr_db must be a non-empty list of finite values"));
        }
        let size = (self.q as u128).checked_pow(self.users as u32).unwrap_or(u128::MAX);
        if size > DEFAULT_ENUMERATION_CAP {
            return Err(config_err(format!("q^K = {size} is above the enumeration cap")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub snr_db: f64,
    pub draws: usize,
    /// Mean symmetric rate with lattice-reduced coefficients.
    pub sym_rate_selected: f64,
    /// Mean symmetric rate with A = I.
    pub sym_rate_identity: f64,
    /// Single-user q-PAM reference.
    pub pam_awgn_mi: f64,
}

pub const RATE_CSV_HEADER: &str = "snr_db,draws,sym_rate_selected,sym_rate_identity,pam_awgn_mi";

pub fn format_rate_csv(rows: &[RateRow]) -> String {
    let mut s = String::from(RATE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.snr_db, r.draws, r.sym_rate_selected, r.sym_rate_identity, r.pam_awgn_mi);
    }
    s
}

pub fn run_rate_sweep(cfg: &RateSweepConfig) -> Result<Vec<RateRow>> {
    cfg.validate()?;
    let spreading = resolve_spreading(cfg.spreading_file.as_deref(), cfg.users, cfg.ns, cfg.q, cfg.seed)?;
    let mut rows = Vec::new();
    for (s, &db) in cfg.snr_db.iter().enumerate() {
        let rho = 10f64.powf(db / 10.0);
        let (mut sel_sum, mut id_sum) = (0.0, 0.0);
        for d in 0..cfg.draws {
            let mut rng = stream_rng(cfg.seed, &[s as u64, d as u64]);
            let spatial = draw_spatial(cfg.nr, cfg.users, cfg.fading, &mut rng);
            let h = build_h(&spreading, &spatial, cfg.fading, rho)?;
            let sel = select_coefficients(&h, cfg.users, cfg.q)?;
            let est_seed = derive_seed(cfg.seed, &[s as u64, d as u64, 1]);
            sel_sum += estimate_rates(&h, &sel.coefficients, cfg.samples, cfg.conditioning, est_seed)?.sym_rate;
            let ident = CoefficientMatrix::identity(cfg.users, cfg.q);
            id_sum += estimate_rates(&h, &ident, cfg.samples, cfg.conditioning, est_seed)?.sym_rate;
        }
        rows.push(RateRow {
            snr_db: db,
            draws: cfg.draws,
            sym_rate_selected: sel_sum / cfg.draws as f64,
            sym_rate_identity: id_sum / cfg.draws as f64,
            pam_awgn_mi: pam_awgn_mi(cfg.q, rho),
        });
    }
    if let Some(path) = &cfg.out {
        std::fs::write(path, format_rate_csv(&rows))?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            users: 2,
            nr: 2,
            code_n: 32,
            code_k: 16,
            snr_db: vec![0.0, 12.0],
            trials: 40,
            max_frame_errors: 10,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"users": 3}"#).is_ok());
        assert!(matches!(ExperimentConfig::from_json(r#"{"userz": 3}"#), Err(LcmaError::Config(_))));
        assert!(RateSweepConfig::from_json(r#"{"trials": 3}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(small().validate().is_ok());
        for bad in [
            ExperimentConfig { q: 6, ..small() },
            ExperimentConfig { users: 0, ..small() },
            ExperimentConfig { snr_db: vec![], ..small() },
            ExperimentConfig { trials: 0, ..small() },
            ExperimentConfig { code_k: 40, ..small() },
            ExperimentConfig { theta: Some(-1.0), ..small() },
            ExperimentConfig { users: 25, detector: DetectorKind::LpncExhaustive, ..small() },
        ] {
            assert!(matches!(bad.validate(), Err(LcmaError::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr_range("0:4:2").unwrap(), vec![0.0, 2.0, 4.0]);
        assert_eq!(parse_snr_range("3.5").unwrap(), vec![3.5]);
        assert_eq!(parse_snr_range("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_snr_range("4:0:1").is_err());
        assert!(parse_snr_range("0:1").is_err());
    }

    #[test]
    fn csv_round_trip() {
        assert_eq!(format_csv(&[]), format!("{CSV_HEADER}\n"));
        let rows = vec![ResultRow {
            snr_db: 1.5,
            trials: 10,
            frame_errors: 3,
            bit_errors: 17,
            fer: 0.3,
            ber: 17.0 / 640.0,
            mean_recovered: 1.7,
            wall_time_s: 0.125,
        }];
        assert_eq!(parse_csv(&format_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn stops_at_budget_and_is_deterministic() {
        let cfg = small();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.trials, x.frame_errors, x.bit_errors), (y.trials, y.frame_errors, y.bit_errors));
            assert!(x.frame_errors <= cfg.max_frame_errors);
            assert!(x.frame_errors == cfg.max_frame_errors || x.trials == cfg.trials);
        }
        assert!(a[0].fer >= a[1].fer);
    }

    #[test]
    fn noise_free_has_no_errors() {
        let cfg = ExperimentConfig { noise_free: true, snr_db: vec![30.0], trials: 10, ..small() };
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows[0].frame_errors, 0);
        assert_eq!(rows[0].mean_recovered, 2.0);
    }

    #[test]
    fn bits() {
        assert_eq!(bits_per_symbol(2), 1);
        assert_eq!(bits_per_symbol(4), 2);
        assert_eq!(bits_per_symbol(5), 3);
    }
}
