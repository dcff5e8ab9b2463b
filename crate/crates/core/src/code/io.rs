//! Plain-text code files.
//!
//! ```text
//! # comment
//! q n k
//! parity_check
//! row col value
//! ...
//! generator
//! row col value
//! ...
//! ```
//!
//! Indices are zero-based and only non-zero entries are listed. The
//! `generator` section may be omitted, in which case a systematic generator
//! is derived from the parity-check.

use std::fmt::Write as _;
use std::path::Path;

use super::{CheckEntry, RingCode};
use crate::error::{LcmaError, Result};
use crate::zq::ZqMatrix;

#[derive(PartialEq)]
enum Section {
    Header,
    Parity,
    Generator,
}

fn parse_err(line: usize, msg: impl Into<String>) -> LcmaError {
    LcmaError::Parse { line, msg: msg.into() }
}

pub fn parse_code(text: &str) -> Result<RingCode> {
    let mut header: Option<(u64, usize, usize)> = None;
    let mut section = Section::Header;
    let mut parity: Vec<(usize, usize, u64)> = Vec::new();
    let mut generator: Vec<(usize, usize, u64)> = Vec::new();
    let mut saw_generator = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "parity_check" => {
                section = Section::Parity;
                continue;
            }
            "generator" => {
                section = Section::Generator;
                saw_generator = true;
                continue;
            }
            _ => {}
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(lineno, format!("expected three fields, got {}", fields.len())));
        }
        let nums: Vec<u64> = fields
            .iter()
            .map(|f| f.parse::<u64>().map_err(|e| parse_err(lineno, format!("{f:?}: {e}"))))
            .collect::<Result<_>>()?;
        match section {
            Section::Header => {
                if header.is_some() {
                    return Err(parse_err(lineno, "entry before a section marker"));
                }
                header = Some((nums[0], nums[1] as usize, nums[2] as usize));
            }
            Section::Parity => parity.push((nums[0] as usize, nums[1] as usize, nums[2])),
            Section::Generator => generator.push((nums[0] as usize, nums[1] as usize, nums[2])),
        }
    }

    let (q, n, k) = header.ok_or_else(|| parse_err(0, "missing 'q n k' header"))?;
    if k == 0 || k >= n {
        return Err(parse_err(0, format!("invalid dimensions n={n}, k={k}")));
    }
    let m = n - k;
    let mut h = ZqMatrix::zeros(m, n, q);
    for &(r, c, v) in &parity {
        if r >= m || c >= n || v == 0 || v >= q {
            return Err(parse_err(0, format!("parity entry ({r}, {c}, {v}) out of range")));
        }
        h.set(r, c, v);
    }
    if !saw_generator {
        let code = RingCode::from_parity_check(&h)?;
        if code.k() != k {
            return Err(parse_err(0, format!("header k={k} but parity-check gives k={}", code.k())));
        }
        return Ok(code);
    }
    let mut g = ZqMatrix::zeros(n, k, q);
    for &(r, c, v) in &generator {
        if r >= n || c >= k || v == 0 || v >= q {
            return Err(parse_err(0, format!("generator entry ({r}, {c}, {v}) out of range")));
        }
        g.set(r, c, v);
    }
    let checks = (0..m)
        .map(|r| {
            (0..n)
                .filter(|&c| h.get(r, c) != 0)
                .map(|c| CheckEntry { col: c, value: h.get(r, c) })
                .collect()
        })
        .collect();
    RingCode::from_parts(g, checks)
}

pub fn format_code(code: &RingCode) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", code.modulus(), code.n(), code.k());
    let _ = writeln!(s, "parity_check");
    for (r, row) in code.checks().iter().enumerate() {
        for e in row {
            let _ = writeln!(s, "{r} {} {}", e.col, e.value);
        }
    }
    let _ = writeln!(s, "generator");
    let g = code.generator();
    for r in 0..g.rows() {
        for c in 0..g.cols() {
            let v = g.get(r, c);
            if v != 0 {
                let _ = writeln!(s, "{r} {c} {v}");
            }
        }
    }
    s
}

pub fn read_code(path: impl AsRef<Path>) -> Result<RingCode> {
    parse_code(&std::fs::read_to_string(path)?)
}

pub fn write_code(code: &RingCode, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_code(code))?;
    Ok(())
}
