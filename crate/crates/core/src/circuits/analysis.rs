//! Spectral tail bounds and correlation with μ.

use num_integer::Integer;
use serde::Serialize;

use super::Circuit;
use crate::arith::MuTable;
use crate::walsh::{correlation_chain, fwht, tail_mass, CorrelationChain};
use crate::{Error, Result};

/// Largest `n` for the tail-bound check.
pub const MAX_LMN_BITS: u32 = 22;

/// Largest `n` at which the correlation report also checks the decomposition chain.
pub const MAX_CHAIN_BITS: u32 = 22;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmnRow {
    pub t: u32,
    /// `Σ_{|S|>t} F̂(S)²` as `numerator / N²`.
    pub tail_numerator: i128,
    pub tail_denominator: i128,
    pub tail: f64,
    /// `2M · 2^{−t^{1/d}/20}`.
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmnReport {
    pub circuit: String,
    pub n: u32,
    /// Gate count after negation normal form.
    pub size: usize,
    /// `max(depth after negation normal form, declared depth)`.
    pub depth: u32,
    pub raw_size: usize,
    pub raw_depth: u32,
    pub rows: Vec<LmnRow>,
    pub all_satisfied: bool,
}

pub fn lmn_check(c: &Circuit, d_declared: u32) -> Result<LmnReport> {
    if c.n() > MAX_LMN_BITS {
        return Err(Error::Capacity(format!("tail check for n = {} > {MAX_LMN_BITS}", c.n())));
    }
    let spectrum = fwht(&c.truth_table()?)?;
    let big_n = spectrum.len() as i128;
    if spectrum.squared_norm() != big_n * big_n {
        return Err(Error::Invariant(format!("Parseval fails for {}", c.name())));
    }
    let m = c.metrics();
    let d = m.nnf_depth.max(d_declared).max(1);
    let rows: Vec<LmnRow> = (1..=c.n())
        .map(|t| {
            let tail = tail_mass(&spectrum, t);
            let value = *tail.numer() as f64 / *tail.denom() as f64;
            let bound = 2.0 * m.nnf_size as f64 * (-(t as f64).powf(1.0 / d as f64) / 20.0).exp2();
            LmnRow {
                t,
                tail_numerator: *tail.numer(),
                tail_denominator: *tail.denom(),
                tail: value,
                bound,
                satisfied: *tail.numer() == 0 || value <= bound,
            }
        })
        .collect();
    Ok(LmnReport {
        circuit: c.name().to_string(),
        n: c.n(),
        size: m.nnf_size,
        depth: d,
        raw_size: m.size,
        raw_depth: m.depth,
        all_satisfied: rows.iter().all(|r| r.satisfied),
        rows,
    })
}

/// The two quantities in the exponent `d log n − c n^{1/6d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentTerms {
    pub d_log_n: f64,
    pub n_pow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub circuit: String,
    pub n: u32,
    /// `E μF` in lowest terms.
    pub mean_num: i64,
    pub mean_den: u64,
    pub size: usize,
    pub depth: u32,
    pub raw_size: usize,
    pub raw_depth: u32,
    pub exponent_terms: ExponentTerms,
    /// Decomposition at the smallest `t` with `t^6 ≥ n`.
    pub chain: Option<CorrelationChain>,
}

impl CorrelationReport {
    pub fn mean(&self) -> f64 {
        self.mean_num as f64 / self.mean_den as f64
    }
}

/// One CSV row: `(family, n, d, M, mean_num, mean_den)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorrelationRow {
    pub family: String,
    pub n: u32,
    pub d: u32,
    #[serde(rename = "M")]
    pub m: usize,
    pub mean_num: i64,
    pub mean_den: u64,
}

impl From<&CorrelationReport> for CorrelationRow {
    fn from(r: &CorrelationReport) -> Self {
        CorrelationRow {
            family: r.circuit.clone(),
            n: r.n,
            d: r.depth,
            m: r.size,
            mean_num: r.mean_num,
            mean_den: r.mean_den,
        }
    }
}

fn sixth_root_ceil(n: u32) -> u32 {
    (1..).find(|&t: &u32| (t as u64).pow(6) >= n as u64).unwrap()
}

/// `E_{x<N} μ(x) F(x)` exactly, with the low/high degree split when `n` is small.
pub fn mobius_correlation(c: &Circuit, table: &MuTable) -> Result<CorrelationReport> {
    if table.n() != c.n() {
        return Err(Error::DimensionMismatch { expected: c.n() as usize, got: table.n() as usize });
    }
    let f = c.truth_table()?;
    let sum: i64 = f.iter().zip(table.values()).map(|(&a, &b)| a as i64 * b as i64).sum();
    let big_n = f.len() as i64;
    let g = sum.gcd(&big_n);
    let m = c.metrics();
    let chain = if c.n() <= MAX_CHAIN_BITS {
        let ms = fwht(table.values())?;
        let fs = fwht(&f)?;
        let chain = correlation_chain(&ms, &fs, sum, sixth_root_ceil(c.n()))?;
        if !chain.holds {
            return Err(Error::Invariant(format!("decomposition chain fails for {}", c.name())));
        }
        Some(chain)
    } else {
        None
    };
    let d = m.nnf_depth.max(1) as f64;
    Ok(CorrelationReport {
        circuit: c.name().to_string(),
        n: c.n(),
        mean_num: sum / g,
        mean_den: (big_n / g) as u64,
        size: m.nnf_size,
        depth: m.nnf_depth,
        raw_size: m.size,
        raw_depth: m.depth,
        exponent_terms: ExponentTerms {
            d_log_n: d * (c.n() as f64).ln(),
            n_pow: (c.n() as f64).powf(1.0 / (6.0 * d)),
        },
        chain,
    })
}
