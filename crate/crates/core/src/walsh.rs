//! Exact Fourier-Walsh spectra of functions on `{0, …, 2^n − 1}`.
//!
//! Coefficients are stored as integer numerators `N · f̂(S)`; a subset
//! `S ⊆ {1, …, n}` is addressed by the mask whose bit `i − 1` marks `i`.

use num_bigint::BigInt;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::MuTable;
use crate::smoothing::square_wave_frac;
use crate::{Error, Result};

/// Exact rational with machine-word parts.
pub type Exact = Ratio<i128>;

/// Largest `n` whose full spectrum is materialized.
pub const MAX_WALSH_BITS: u32 = 26;

const PARALLEL_THRESHOLD: usize = 1 << 14;

/// A subset of `{1, …, n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitIndexSet {
    n: u32,
    mask: u64,
}

impl BitIndexSet {
    pub fn from_mask(n: u32, mask: u64) -> Result<Self> {
        if n > 63 {
            return Err(Error::Capacity(format!("dimension {n} > 63")));
        }
        if mask >> n != 0 {
            let top = 64 - mask.leading_zeros();
            return Err(Error::IndexOutOfRange { index: top as usize, max: n as usize });
        }
        Ok(BitIndexSet { n, mask })
    }

    /// Builds `S` from 1-based indices.
    pub fn from_indices(n: u32, indices: &[u32]) -> Result<Self> {
        let mut mask = 0u64;
        for &i in indices {
            if i == 0 || i > n || i > 63 {
                return Err(Error::IndexOutOfRange { index: i as usize, max: n as usize });
            }
            mask |= 1 << (i - 1);
        }
        Self::from_mask(n, mask)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// `|S|`.
    pub fn size(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn contains(&self, i: u32) -> bool {
        i >= 1 && i <= self.n && self.mask >> (i - 1) & 1 == 1
    }

    /// Elements of `S` in increasing order, 1-based.
    pub fn indices(&self) -> Vec<u32> {
        (1..=self.n).filter(|&i| self.contains(i)).collect()
    }
}

impl std::fmt::Display for BitIndexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let items: Vec<String> = self.indices().iter().map(u32::to_string).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// Integer numerators `N · f̂(S)` for every `S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalshSpectrum {
    n: u32,
    numerators: Vec<i64>,
    source_bound: i64,
}

impl WalshSpectrum {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// Largest `|f(x)|` of the transformed input.
    pub fn source_bound(&self) -> i64 {
        self.source_bound
    }

    pub fn numerators(&self) -> &[i64] {
        &self.numerators
    }

    pub fn numerator(&self, mask: u64) -> i64 {
        self.numerators[mask as usize]
    }

    /// `f̂(S)` exactly.
    pub fn coefficient(&self, s: BitIndexSet) -> Exact {
        Exact::new(self.numerators[s.mask as usize] as i128, self.numerators.len() as i128)
    }

    /// `Σ_S numerators[S]²`, which equals `N · Σ_x f(x)²`.
    pub fn squared_norm(&self) -> i128 {
        self.numerators.iter().map(|&c| (c as i128) * (c as i128)).sum()
    }

    /// `Σ_{|S| = k} numerators[S]²` for `k = 0, …, n`.
    pub fn degree_weights(&self) -> Vec<i128> {
        let mut w = vec![0i128; self.n as usize + 1];
        for (s, &c) in self.numerators.iter().enumerate() {
            w[s.count_ones() as usize] += (c as i128) * (c as i128);
        }
        w
    }
}

fn check_length(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Domain(format!("length {len} is not a power of two")));
    }
    let n = len.trailing_zeros();
    if n > MAX_WALSH_BITS {
        return Err(Error::Capacity(format!("n = {n} exceeds {MAX_WALSH_BITS}")));
    }
    Ok(n)
}

fn butterfly_pair(lo: &mut [i64], hi: &mut [i64]) {
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = u + v;
        *b = u - v;
    }
}

/// Unnormalized in-place Walsh-Hadamard butterfly.
///
/// Applying it twice multiplies the input by `N`.
pub fn fwht_in_place(data: &mut [i64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let parallel = len >= PARALLEL_THRESHOLD;
    let mut h = 1;
    while h < len {
        if !parallel {
            for chunk in data.chunks_mut(2 * h) {
                let (lo, hi) = chunk.split_at_mut(h);
                butterfly_pair(lo, hi);
            }
        } else if 2 * h <= 4096 {
            data.par_chunks_mut(2 * h).for_each(|chunk| {
                let (lo, hi) = chunk.split_at_mut(h);
                butterfly_pair(lo, hi);
            });
        } else {
            for chunk in data.chunks_mut(2 * h) {
                let (lo, hi) = chunk.split_at_mut(h);
                lo.par_chunks_mut(2048)
                    .zip(hi.par_chunks_mut(2048))
                    .for_each(|(l, r)| butterfly_pair(l, r));
            }
        }
        h *= 2;
    }
}

/// Full Walsh spectrum of an integer-valued table.
pub fn fwht<T: Copy + Into<i64>>(values: &[T]) -> Result<WalshSpectrum> {
    let n = check_length(values.len())?;
    let data: Vec<i64> = values.iter().map(|&v| v.into()).collect();
    let source_bound = data.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    if source_bound.checked_mul(data.len() as u64).is_none_or(|b| b > 1 << 62) {
        return Err(Error::Capacity(format!(
            "value bound {source_bound} times N = {} may overflow 64-bit numerators",
            data.len()
        )));
    }
    let mut numerators = data;
    fwht_in_place(&mut numerators);
    Ok(WalshSpectrum {
        n,
        numerators,
        source_bound: source_bound as i64,
    })
}

fn check_set<T>(values: &[T], s: BitIndexSet) -> Result<u32> {
    let n = check_length(values.len())?;
    if s.n != n {
        return Err(Error::DimensionMismatch { expected: n as usize, got: s.n as usize });
    }
    Ok(n)
}

/// `f̂(S)` by direct summation over all `x`.
pub fn walsh_coefficient<T: Copy + Into<i64>>(values: &[T], s: BitIndexSet) -> Result<Exact> {
    check_set(values, s)?;
    let sum: i128 = values
        .iter()
        .enumerate()
        .map(|(x, &v)| {
            let v: i64 = v.into();
            if (x as u64 & s.mask).count_ones().is_multiple_of(2) { v as i128 } else { -(v as i128) }
        })
        .sum();
    Ok(Exact::new(sum, values.len() as i128))
}

/// `E f(x) ∏_{i∈S} ψ(x / 2^i)` with the square wave `ψ`, evaluated on the
/// exact fractions `x / 2^i`.
pub fn walsh_via_psi<T: Copy + Into<i64>>(values: &[T], s: BitIndexSet) -> Result<Exact> {
    check_set(values, s)?;
    let exponents = s.indices();
    let sum: i128 = values
        .iter()
        .enumerate()
        .map(|(x, &v)| {
            let sign: i8 = exponents
                .iter()
                .map(|&i| square_wave_frac(x as u64, 1u64 << i))
                .product();
            let v: i64 = v.into();
            sign as i128 * v as i128
        })
        .sum();
    Ok(Exact::new(sum, values.len() as i128))
}

/// `Σ_{|S| > t} f̂(S)²` exactly.
pub fn tail_mass(spectrum: &WalshSpectrum, t: u32) -> Exact {
    let numer: i128 = spectrum
        .numerators
        .iter()
        .enumerate()
        .filter(|(s, _)| s.count_ones() > t)
        .map(|(_, &c)| (c as i128) * (c as i128))
        .sum();
    let n = spectrum.len() as i128;
    Exact::new(numer, n * n)
}

/// Largest `|f̂(S)|` among sets of one degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeMaximum {
    pub n: u32,
    pub k: u32,
    pub max_abs_coeff_numerator: u64,
    #[serde(rename = "N")]
    pub big_n: u64,
    #[serde(rename = "witness_S_mask")]
    pub witness_mask: u64,
}

impl DegreeMaximum {
    pub fn value(&self) -> f64 {
        self.max_abs_coeff_numerator as f64 / self.big_n as f64
    }
}

/// Per-degree maxima of `|f̂(S)|`, ties going to the smallest mask.
pub fn degree_maxima(spectrum: &WalshSpectrum) -> Vec<DegreeMaximum> {
    let n = spectrum.n;
    let mut out: Vec<Option<DegreeMaximum>> = vec![None; n as usize + 1];
    for (s, &c) in spectrum.numerators.iter().enumerate() {
        let k = s.count_ones();
        let abs = c.unsigned_abs();
        let slot = &mut out[k as usize];
        if slot.is_none_or(|m| abs > m.max_abs_coeff_numerator) {
            *slot = Some(DegreeMaximum {
                n,
                k,
                max_abs_coeff_numerator: abs,
                big_n: spectrum.len() as u64,
                witness_mask: s as u64,
            });
        }
    }
    out.into_iter().map(|m| m.expect("every degree occurs")).collect()
}

/// Per-degree maxima of `|μ̂(S)|` for a tabulated μ (or λ).
pub fn mu_walsh_decay(table: &MuTable) -> Result<Vec<DegreeMaximum>> {
    let spectrum = fwht(table.values())?;
    Ok(degree_maxima(&spectrum))
}

/// The bound `|E μF| ≤ Σ_{|S|≤t} |μ̂(S)||F̂(S)| + (Σ_{|S|>t} μ̂(S)²)^{1/2} (Σ_{|S|>t} F̂(S)²)^{1/2}`
/// checked in exact arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationChain {
    pub t: u32,
    /// `Σ_x μ(x) F(x)`; the mean is this over `N`.
    pub correlation_numerator: i64,
    /// `Σ_S numerators_μ[S] · numerators_F[S]`; equals `N` times the above.
    pub parseval_numerator: i128,
    /// `Σ_{|S|≤t} |numerators_μ[S] · numerators_F[S]|`, over `N²`.
    pub low_degree_numerator: i128,
    /// Tail weights `Σ_{|S|>t} numerators[S]²` of both spectra, over `N²`.
    pub tail_mu_numerator: i128,
    pub tail_f_numerator: i128,
    pub holds: bool,
    pub lhs: f64,
    pub low_degree_term: f64,
    pub cauchy_schwarz_term: f64,
}

pub fn correlation_chain(
    mu: &WalshSpectrum,
    f: &WalshSpectrum,
    correlation_numerator: i64,
    t: u32,
) -> Result<CorrelationChain> {
    if mu.n != f.n {
        return Err(Error::DimensionMismatch { expected: mu.n as usize, got: f.n as usize });
    }
    let big_n = mu.len() as i128;
    let mut parseval = 0i128;
    let mut low = 0i128;
    let mut tail_mu = 0i128;
    let mut tail_f = 0i128;
    for (s, (&a, &b)) in mu.numerators.iter().zip(&f.numerators).enumerate() {
        let (a, b) = (a as i128, b as i128);
        parseval += a * b;
        if s.count_ones() <= t {
            low += (a * b).abs();
        } else {
            tail_mu += a * a;
            tail_f += b * b;
        }
    }
    if parseval != big_n * correlation_numerator as i128 {
        return Err(Error::Invariant(format!(
            "Parseval: Σ μ̂F̂ numerator {parseval} ≠ N · Σ μF = {}",
            big_n * correlation_numerator as i128
        )));
    }
    // Everything in units of 1/N²: N|Σ μF| − low ≤ sqrt(tail_mu · tail_f).
    let excess = big_n * (correlation_numerator as i128).abs() - low;
    let holds = excess <= 0
        || BigInt::from(excess) * BigInt::from(excess) <= BigInt::from(tail_mu) * BigInt::from(tail_f);
    let n2 = (big_n * big_n) as f64;
    Ok(CorrelationChain {
        t,
        correlation_numerator,
        parseval_numerator: parseval,
        low_degree_numerator: low,
        tail_mu_numerator: tail_mu,
        tail_f_numerator: tail_f,
        holds,
        lhs: (correlation_numerator as f64).abs() / big_n as f64,
        low_degree_term: low as f64 / n2,
        cauchy_schwarz_term: ((tail_mu as f64) * (tail_f as f64)).sqrt() / n2,
    })
}
