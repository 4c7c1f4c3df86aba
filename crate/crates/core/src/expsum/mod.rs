//! Ordinary Fourier coefficients `f̂(θ) = E_{x<N} f(x) e(θx)` at exact
//! rational frequencies, with a bucketed evaluator for dyadic `θ`.

mod rational;

pub use rational::{
    best_rational_approx, dio_hypothesis, dio_lemma, reduce_mod_one, sparse_value, DioLemmaReport,
    DioLemmaRow, RationalApprox, SparseDyadic,
};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::arith::MuTable;
use crate::{Error, Result};

/// Largest `t` for full scans over `a mod 2^t`.
pub const MAX_SCAN_BITS: u32 = 24;

/// Block length of the compensated summation for non-dyadic `θ`.
const SUM_BLOCK: usize = 4096;

/// `e(k / 2^t)` from an exact residue.
fn dyadic_phase(k: u128, t: u32) -> Complex64 {
    let frac = if t == 0 { 0.0 } else { (k % (1u128 << t)) as f64 / (1u128 << t) as f64 };
    Complex64::from_polar(1.0, TAU * frac)
}

fn check_length(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Domain(format!("table length {len} is not a power of two")));
    }
    Ok(())
}

/// Integer sums `B[b] = Σ_{x ≡ b (mod 2^t)} f(x)`.
///
/// When `2^t ≥ N` the buckets are the values themselves.
#[derive(Debug, Clone)]
pub struct DyadicBuckets {
    t: u32,
    len: usize,
    sums: Vec<i64>,
}

impl DyadicBuckets {
    pub fn new<T: Copy + Into<i64> + Sync>(values: &[T], t: u32) -> Result<Self> {
        check_length(values.len())?;
        if t > 64 {
            return Err(Error::Capacity(format!("dyadic exponent {t} > 64")));
        }
        let len = values.len();
        let width = if t >= usize::BITS || (1usize << t) >= len { len } else { 1usize << t };
        let sums = if width == len {
            values.iter().map(|&v| v.into()).collect()
        } else {
            // disjoint x-ranges summed separately, then merged in a fixed order
            let chunk = (len / 16).max(width);
            values
                .par_chunks(chunk)
                .map(|c| {
                    let mut local = vec![0i64; width];
                    for row in c.chunks(width) {
                        for (b, &v) in local.iter_mut().zip(row) {
                            *b += v.into();
                        }
                    }
                    local
                })
                .reduce(
                    || vec![0i64; width],
                    |mut a, b| {
                        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                        a
                    },
                )
        };
        Ok(DyadicBuckets { t, len, sums })
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn sums(&self) -> &[i64] {
        &self.sums
    }

    /// `f̂(a / 2^t)`.
    pub fn eval(&self, a: u128) -> Complex64 {
        let modulus_mask = if self.t >= 128 { u128::MAX } else { (1u128 << self.t) - 1 };
        let a = a & modulus_mask;
        let s: Complex64 = self
            .sums
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0)
            .map(|(b, &s)| dyadic_phase(a.wrapping_mul(b as u128) & modulus_mask, self.t) * s as f64)
            .sum();
        s / self.len as f64
    }

    /// `f̂(a / 2^t)` for every `a ∈ [0, 2^t)` by one inverse FFT.
    pub fn eval_all(&self) -> Result<Vec<Complex64>> {
        if self.t > MAX_SCAN_BITS {
            return Err(Error::Capacity(format!("scan over 2^{} frequencies", self.t)));
        }
        let m = 1usize << self.t;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (b, &s) in self.sums.iter().enumerate() {
            buf[b % m] += Complex64::new(s as f64, 0.0);
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        let scale = 1.0 / self.len as f64;
        Ok(buf.into_iter().map(|z| z * scale).collect())
    }
}

/// Neumaier-compensated complex sum.
fn compensated_sum(terms: impl Iterator<Item = Complex64>) -> Complex64 {
    let (mut s, mut c) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for x in terms {
        for (sp, cp, xp) in [(&mut s.re, &mut c.re, x.re), (&mut s.im, &mut c.im, x.im)] {
            let t = *sp + xp;
            if sp.abs() >= xp.abs() {
                *cp += (*sp - t) + xp;
            } else {
                *cp += (xp - t) + *sp;
            }
            *sp = t;
        }
    }
    s + c
}

fn pairwise(mut parts: Vec<Complex64>) -> Complex64 {
    while parts.len() > 1 {
        parts = parts.chunks(2).map(|p| p.iter().sum()).collect();
    }
    parts.pop().unwrap_or_default()
}

/// `(a, m)` with `θ ≡ a/m (mod 1)`, `0 ≤ a < m`.
fn reduced_parts(theta: &BigRational) -> Result<(BigInt, BigInt)> {
    if theta.denom().is_zero() {
        return Err(Error::Domain("θ has zero denominator".into()));
    }
    let r = reduce_mod_one(theta);
    Ok((r.numer().clone(), r.denom().clone()))
}

/// `log2 m` if `m` is a power of two.
fn dyadic_exponent(m: &BigInt) -> Option<u32> {
    let bits = m.bits();
    (m.is_positive() && m.trailing_zeros() == Some(bits - 1)).then(|| (bits - 1) as u32)
}

/// `f̂(θ) = (1/N) Σ_{x<N} f(x) e(θx)` for exact rational `θ`.
///
/// Dyadic `θ = a/2^t` go through integer bucket sums modulo `2^t`; other
/// denominators use a direct pass with the angle reduced via `ax mod m` and
/// a blockwise compensated sum combined pairwise in a fixed order.
pub fn fourier_coefficient<T: Copy + Into<i64> + Sync>(values: &[T], theta: &BigRational) -> Result<Complex64> {
    check_length(values.len())?;
    let (a, m) = reduced_parts(theta)?;
    if let Some(t) = dyadic_exponent(&m) {
        if t <= 64 {
            let a = a.to_u128().expect("a < 2^64");
            return Ok(DyadicBuckets::new(values, t)?.eval(a));
        }
    }
    let (a, m) = match (a.to_u128(), m.to_u128()) {
        (Some(a), Some(m)) if m < 1 << 64 => (a, m),
        _ => return Err(Error::Capacity(format!("denominator {m} too large"))),
    };
    let parts: Vec<Complex64> = values
        .par_chunks(SUM_BLOCK)
        .enumerate()
        .map(|(blk, chunk)| {
            let base = (blk * SUM_BLOCK) as u128;
            compensated_sum(chunk.iter().enumerate().filter_map(|(j, &v)| {
                let v: i64 = v.into();
                (v != 0).then(|| {
                    let k = a * ((base + j as u128) % m) % m;
                    Complex64::from_polar(v as f64, TAU * (k as f64 / m as f64))
                })
            }))
        })
        .collect();
    Ok(pairwise(parts) / values.len() as f64)
}

/// Direct `f̂(θ)` from per-`x` phases, used to cross-check the bucketed path.
pub fn fourier_coefficient_direct<T: Copy + Into<i64>>(values: &[T], theta: &BigRational) -> Result<Complex64> {
    check_length(values.len())?;
    let (a, m) = reduced_parts(theta)?;
    let (a, m) = (a.to_u128().unwrap(), m.to_u128().unwrap());
    let s = compensated_sum(values.iter().enumerate().map(|(x, &v)| {
        let k = a * (x as u128 % m) % m;
        Complex64::from_polar(v.into() as f64, TAU * (k as f64 / m as f64))
    }));
    Ok(s / values.len() as f64)
}

/// One row of a dyadic scan: `(n, t, a_witness, max_abs_value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: u32,
    pub t: u32,
    pub a_witness: u64,
    pub max_abs_value: f64,
}

/// Relative tolerance under which two scan values count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// `argmax_a |values[a]|`, near-ties going to the smallest index.
pub(crate) fn argmax_abs(values: &[Complex64]) -> (usize, f64) {
    let max = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let idx = values
        .iter()
        .position(|z| z.norm() >= max - TIE_TOLERANCE * max.max(1e-300))
        .unwrap_or(0);
    (idx, values[idx].norm())
}

/// `max_a |μ̂(a/2^t)|` for `t = 0, …, t_max`, with the smallest witnessing `a`.
pub fn mu_dyadic_scan(table: &MuTable, t_max: u32) -> Result<Vec<ScanRow>> {
    if t_max > 20 {
        return Err(Error::Capacity(format!("t_max = {t_max} > 20")));
    }
    (0..=t_max)
        .map(|t| {
            let all = DyadicBuckets::new(table.values(), t)?.eval_all()?;
            let (a, v) = argmax_abs(&all);
            Ok(ScanRow {
                n: table.n(),
                t,
                a_witness: a as u64,
                max_abs_value: v,
            })
        })
        .collect()
}

/// `|μ̂(a/2^t + δθ)|` for each perturbation `δθ`, `|δθ| ≤ 2^10/N`.
pub fn near_dyadic_check(table: &MuTable, a: i64, t: u32, offsets: &[BigRational]) -> Result<Vec<f64>> {
    if t > 64 {
        return Err(Error::Capacity(format!("dyadic exponent {t} > 64")));
    }
    let limit = BigRational::new(BigInt::from(1024), BigInt::from(table.len()));
    let center = BigRational::new(BigInt::from(a), rational::pow2(t));
    offsets
        .iter()
        .map(|d| {
            if d.abs() > limit {
                return Err(Error::Domain(format!("perturbation {d} exceeds 2^10/N")));
            }
            Ok(fourier_coefficient(table.values(), &(&center + d))?.norm())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{sieve, Kind};
    use crate::walsh::{walsh_coefficient, BitIndexSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn trivial_coefficients() {
        let ones = vec![1i8; 256];
        let v = fourier_coefficient(&ones, &ratio(0, 1)).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let v = fourier_coefficient(&ones, &ratio(1, 2)).unwrap();
        assert!(v.norm() < 1e-15);
        let v = fourier_coefficient(&ones, &ratio(1, 256)).unwrap();
        assert!(v.norm() < 1e-12);
        assert!(fourier_coefficient(&ones, &ratio(1, 3)).unwrap().norm() < 0.01);
    }

    #[test]
    fn zero_frequency_gives_mertens() {
        let mu = sieve(12, Kind::Mobius).unwrap();
        let v = fourier_coefficient(mu.values(), &ratio(0, 1)).unwrap();
        assert!((v.re - mu.sum() as f64 / 4096.0).abs() < 1e-15);
        let scan = mu_dyadic_scan(&mu, 3).unwrap();
        assert_eq!(scan[0].a_witness, 0);
        assert!((scan[0].max_abs_value - mu.sum().unsigned_abs() as f64 / 4096.0).abs() < 1e-15);
        assert!(scan.iter().all(|r| r.max_abs_value <= 1.0));
    }

    #[test]
    fn half_frequency_is_first_digit_character() {
        let mu = sieve(14, Kind::Mobius).unwrap();
        let v = fourier_coefficient(mu.values(), &ratio(1, 2)).unwrap();
        let w = walsh_coefficient(mu.values(), BitIndexSet::from_indices(14, &[1]).unwrap()).unwrap();
        let exact = *w.numer() as f64 / *w.denom() as f64;
        assert!((v.re - exact).abs() < 1e-15 && v.im.abs() < 1e-12);
        let scan = mu_dyadic_scan(&mu, 1).unwrap();
        assert!((scan[1].max_abs_value - exact.abs().max(mu.sum().unsigned_abs() as f64 / 16384.0)).abs() < 1e-12);
    }

    #[test]
    fn bucketed_matches_direct() {
        let mu = sieve(16, Kind::Mobius).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let t = rng.gen_range(0..=10u32);
            let a = rng.gen_range(0..1i64 << t);
            let theta = ratio(a, 1 << t);
            let b = fourier_coefficient(mu.values(), &theta).unwrap();
            let d = fourier_coefficient_direct(mu.values(), &theta).unwrap();
            assert!((b - d).norm() <= 1e-12);
        }
    }

    #[test]
    fn fft_scan_matches_pointwise() {
        let mu = sieve(12, Kind::Mobius).unwrap();
        for t in [0, 3, 7, 12, 14] {
            let b = DyadicBuckets::new(mu.values(), t).unwrap();
            let all = b.eval_all().unwrap();
            for a in (0..1u128 << t).step_by(7) {
                assert!((all[a as usize] - b.eval(a)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn non_dyadic_matches_direct() {
        let mu = sieve(14, Kind::Mobius).unwrap();
        for (a, m) in [(1, 3), (2, 7), (-5, 11), (123, 1000)] {
            let th = ratio(a, m);
            let v = fourier_coefficient(mu.values(), &th).unwrap();
            let d = fourier_coefficient_direct(mu.values(), &th).unwrap();
            assert!((v - d).norm() < 1e-13);
        }
    }

    #[test]
    fn near_dyadic_consistency() {
        let mu = sieve(14, Kind::Mobius).unwrap();
        let scan = mu_dyadic_scan(&mu, 4).unwrap();
        let row = scan[4];
        let vals = near_dyadic_check(&mu, row.a_witness as i64, 4, &[ratio(0, 1), ratio(3, 1 << 14)]).unwrap();
        assert!((vals[0] - row.max_abs_value).abs() < 1e-12);
        assert!(near_dyadic_check(&mu, 1, 3, &[ratio(1, 8)]).is_err());
    }

    #[test]
    fn errors() {
        assert!(fourier_coefficient(&[1i8; 3], &ratio(0, 1)).is_err());
        let mu = sieve(8, Kind::Mobius).unwrap();
        assert!(mu_dyadic_scan(&mu, 21).is_err());
    }
}
