//! From a large Walsh coefficient `f̂(S)` to a large Fourier coefficient at
//! a sparse dyadic rational `θ = Σ_{i∈S} r_i / 2^i`.
//!
//! `f̂(θ)` only depends on `θ mod 1 = a / 2^{i_k}`, so the exhaustive search
//! marks which residues `a` the tuples `|r_j| ≤ ⌊100/ε³⌋` reach, evaluates
//! `f̂` at all of them with one FFT of the bucket sums, and maps the winner
//! back to a canonical tuple.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{build_smoothed, epsilon_from_ratio, SmoothedSquareWave};
use crate::expsum::{fourier_coefficient, sparse_value, DyadicBuckets, SparseDyadic};
use crate::walsh::{walsh_coefficient, BitIndexSet};
use crate::{Error, Result};

/// Largest exponent `i_k` searched exhaustively (FFT of length `2^{i_k}`).
pub const MAX_EXHAUSTIVE_BITS: u32 = 24;

/// Largest `|r|` drawn in sampled mode.
const SAMPLE_RADIUS: u64 = 1 << 20;

const NEAR_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KataiMode {
    /// Every tuple `|r_j| ≤ ⌊100/ε³⌋`, `k ≤ 2`.
    Exhaustive,
    /// Random tuples drawn with weight `|a_{r_1} ⋯ a_{r_k}|`.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct KataiReport {
    pub s_mask: u64,
    pub k: usize,
    pub delta_num: i128,
    pub delta_den: i128,
    pub epsilon: f64,
    pub radius: u64,
    pub theta: SparseDyadic,
    /// `θ mod 1` as `numerator / 2^{i_k}`.
    pub theta_residue: u64,
    pub theta_exponent: u32,
    /// `|f̂(θ)|`.
    pub value_abs: f64,
    /// `(δ/10k)^{4k}`.
    pub bound_abs: f64,
    /// `(δ/2)(ε³/300)^k`, the sharper intermediate bound.
    pub intermediate_bound: f64,
    pub bound_met: bool,
    /// `|E f(x) ∏_j ψ̃(x/2^{i_j})|` and its numerical error bar.
    pub smoothed_product: f64,
    pub smoothed_error_bar: f64,
    /// `δ − kε = δ/2`.
    pub smoothed_threshold: f64,
    /// `Σ_{r_1…r_k} a_{r_1}⋯a_{r_k} f̂(θ_r)`, when the coefficients are stored.
    pub expansion_value: Option<Complex64>,
    pub reachable_classes: usize,
    pub mode: KataiMode,
}

/// One CSV row: `(S_mask, delta_num, delta_den, epsilon, theta_terms, value_abs, bound_abs)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KataiRow {
    #[serde(rename = "S_mask")]
    pub s_mask: u64,
    pub delta_num: i128,
    pub delta_den: i128,
    pub epsilon: f64,
    pub theta_terms: String,
    pub value_abs: f64,
    pub bound_abs: f64,
}

impl From<&KataiReport> for KataiRow {
    fn from(r: &KataiReport) -> Self {
        KataiRow {
            s_mask: r.s_mask,
            delta_num: r.delta_num,
            delta_den: r.delta_den,
            epsilon: r.epsilon,
            theta_terms: r.theta.describe(),
            value_abs: r.value_abs,
            bound_abs: r.bound_abs,
        }
    }
}

/// Representative of `a mod 2^e` in `(−2^{e−1}, 2^{e−1}]`.
fn centered(a: i128, e: u32) -> i64 {
    let m = 1i128 << e;
    let r = a.rem_euclid(m);
    (if 2 * r > m { r - m } else { r }) as i64
}

/// `0, 1, −1, 2, −2, …` up to `|r| ≤ limit`.
fn by_magnitude(limit: u64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=limit as i64).flat_map(|r| [r, -r]))
}

struct Search<'a> {
    exps: &'a [u32],
    radius: u64,
}

impl Search<'_> {
    fn top(&self) -> u32 {
        *self.exps.last().unwrap()
    }

    /// Residues `Σ_j r_j 2^{i_k − i_j} mod 2^{i_k}` reached by `|r_j| ≤ R`.
    fn reachable(&self) -> Vec<bool> {
        let m = 1usize << self.top();
        let r = self.radius as usize;
        if 2 * r + 1 >= m {
            return vec![true; m];
        }
        match self.exps {
            [_] => {
                let mut out = vec![false; m];
                for x in 0..=r {
                    out[x] = true;
                    out[(m - x) % m] = true;
                }
                out
            }
            [i1, i2] => {
                let shift = i2 - i1;
                let classes = (2 * r + 1).min(1 << i1);
                let mut diff = vec![0i64; m + 1];
                for step in 0..classes {
                    let r1 = step as i128 - r as i128;
                    let centre = (r1 << shift).rem_euclid(m as i128) as usize;
                    // interval [centre − R, centre + R] mod m
                    let lo = (centre + m - r) % m;
                    let hi = lo + 2 * r + 1;
                    diff[lo] += 1;
                    if hi <= m {
                        diff[hi] -= 1;
                    } else {
                        diff[m] -= 1;
                        diff[0] += 1;
                        diff[hi - m] -= 1;
                    }
                }
                let mut acc = 0;
                diff[..m]
                    .iter()
                    .map(|d| {
                        acc += d;
                        acc > 0
                    })
                    .collect()
            }
            _ => unreachable!("exhaustive search is limited to k ≤ 2"),
        }
    }

    /// Tuple of smallest magnitudes reaching residue `a`.
    fn canonical(&self, a: u64) -> Option<Vec<i64>> {
        let fits = |r: i64| r.unsigned_abs() <= self.radius;
        match self.exps {
            [i1] => {
                let r1 = centered(a as i128, *i1);
                fits(r1).then(|| vec![r1])
            }
            [i1, i2] => {
                let shift = i2 - i1;
                by_magnitude(self.radius.min(1 << i1)).find_map(|r1| {
                    let r2 = centered(a as i128 - ((r1 as i128) << shift), *i2);
                    fits(r2).then(|| vec![r1, r2])
                })
            }
            _ => None,
        }
    }
}

/// `Σ_b B[b] ∏_j ψ̃(b / 2^{i_j})` over buckets modulo `2^{i_k}`, with error bar.
fn smoothed_product(
    buckets: &DyadicBuckets,
    exps: &[u32],
    w: &SmoothedSquareWave,
    len: usize,
    sup_f: f64,
) -> (f64, f64) {
    let grids: Vec<_> = exps.iter().map(|&i| w.eval_grid(1 << i)).collect();
    let mut total = 0.0;
    for (b, &s) in buckets.sums().iter().enumerate() {
        if s == 0 {
            continue;
        }
        let prod: f64 = exps
            .iter()
            .zip(&grids)
            .map(|(&i, g)| g.values[b & ((1 << i) - 1)])
            .product();
        total += s as f64 * prod;
    }
    let error_bar = sup_f * grids.iter().map(|g| g.error_bar).sum::<f64>() + 1e-12;
    ((total / len as f64).abs(), error_bar)
}

/// `Σ_{r_1,…,r_k} a_{r_1}⋯a_{r_k} f̂(Σ r_j/2^{i_j})` with `f̂` tabulated on `a/2^{i_k}`.
fn fourier_expansion(w: &SmoothedSquareWave, exps: &[u32], table: &[Complex64]) -> Option<Complex64> {
    if !w.is_materialized() {
        return None;
    }
    let top = *exps.last()?;
    let m = 1usize << top;
    let radius = w.radius() as i64;
    // distribution of Σ_j r_j 2^{top − i_j} mod 2^top weighted by ∏ a_{r_j}
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let mut acc: Option<Vec<Complex64>> = None;
    for &i in exps {
        let mut bins = vec![Complex64::new(0.0, 0.0); m];
        for r in -radius..=radius {
            let a = w.coefficient(r);
            if a.re != 0.0 || a.im != 0.0 {
                let pos = ((r as i128) << (top - i)).rem_euclid(m as i128) as usize;
                bins[pos] += a;
            }
        }
        fft.process(&mut bins);
        acc = Some(match acc {
            None => bins,
            Some(prev) => prev.iter().zip(&bins).map(|(x, y)| x * y).collect(),
        });
    }
    let mut weights = acc?;
    planner.plan_fft_inverse(m).process(&mut weights);
    Some(
        weights
            .iter()
            .zip(table)
            .map(|(wt, v)| wt / m as f64 * v)
            .sum(),
    )
}

/// Finds a sparse dyadic `θ` with `|f̂(θ)| ≥ (δ/10k)^{4k}`, `δ = |f̂(S)|`.
///
/// `ε = δ/2k`; `ψ̃` is built for that `ε` and the candidates are
/// `θ = Σ_{i∈S} r_i/2^i`, `|r_i| ≤ ⌊100/ε³⌋`. Exhaustive mode also verifies
/// `|E f ∏ ψ̃(x/2^i)| ≥ δ − kε` and fails if the final bound is missed.
pub fn katai_reduce<T: Copy + Into<i64> + Sync>(
    values: &[T],
    s: BitIndexSet,
    mode: KataiMode,
) -> Result<KataiReport> {
    let delta_exact = walsh_coefficient(values, s)?.abs();
    let sup_f = values.iter().map(|&v| v.into().unsigned_abs()).max().unwrap_or(0);
    if sup_f > 1 {
        return Err(Error::Domain("input must take values in [−1, 1]".into()));
    }
    let exps = s.indices();
    let k = exps.len();
    if k == 0 {
        return Err(Error::Domain("S must be nonempty".into()));
    }
    if *delta_exact.numer() == 0 {
        return Err(Error::Precondition(format!("f̂(S) = 0 for S = {s}")));
    }
    let top = *exps.last().unwrap();
    if let KataiMode::Exhaustive = mode {
        if k > 2 {
            return Err(Error::Capacity(format!("exhaustive search needs k ≤ 2, got {k}")));
        }
    }
    if top > MAX_EXHAUSTIVE_BITS {
        return Err(Error::Capacity(format!("largest index {top} > {MAX_EXHAUSTIVE_BITS}")));
    }

    let delta_big = BigRational::new((*delta_exact.numer()).into(), (*delta_exact.denom()).into());
    let epsilon = epsilon_from_ratio(&(delta_big / num_bigint::BigInt::from(2 * k as u64)))?;
    let delta = delta_exact.numer().to_f64().unwrap() / delta_exact.denom().to_f64().unwrap();
    let w = build_smoothed(epsilon)?;

    let buckets = DyadicBuckets::new(values, top)?;
    let table = buckets.eval_all()?;
    let search = Search { exps: &exps, radius: w.radius() };

    let (residue, tuple, reachable_classes) = match mode {
        KataiMode::Exhaustive => {
            let reach = search.reachable();
            let count = reach.iter().filter(|&&b| b).count();
            let best = reach
                .iter()
                .zip(&table)
                .filter(|(&ok, _)| ok)
                .map(|(_, z)| z.norm())
                .fold(0.0, f64::max);
            let (tuple, a) = reach
                .iter()
                .enumerate()
                .filter(|&(a, &ok)| ok && table[a].norm() >= best - NEAR_TIE * best.max(1e-300))
                .filter_map(|(a, _)| search.canonical(a as u64).map(|t| (t, a)))
                .min()
                .ok_or_else(|| Error::Invariant("no reachable residue".into()))?;
            (a as u64, tuple, count)
        }
        KataiMode::Sampled { samples, seed } => {
            let limit = w.radius().min(SAMPLE_RADIUS) as i64;
            let support: Vec<i64> = (-limit..=limit).collect();
            let weights: Vec<f64> = support.iter().map(|&r| w.coefficient(r).norm()).collect();
            let dist = WeightedIndex::new(&weights).map_err(|e| Error::Invariant(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: Option<(f64, Vec<i64>, u64)> = None;
            for _ in 0..samples.max(1) {
                let tuple: Vec<i64> = exps.iter().map(|_| support[dist.sample(&mut rng)]).collect();
                let a = exps.iter().zip(&tuple).fold(0i128, |acc, (&i, &r)| acc + ((r as i128) << (top - i)));
                let a = a.rem_euclid(1i128 << top) as u64;
                let v = table[a as usize].norm();
                if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                    best = Some((v, tuple, a));
                }
            }
            let (_, tuple, a) = best.unwrap();
            (a, tuple, samples)
        }
    };

    let theta = SparseDyadic::new(tuple.iter().copied().zip(exps.iter().copied()).collect())?;
    let value_abs = table[residue as usize].norm();

    // independent evaluation at the exact rational
    let direct = fourier_coefficient(values, &sparse_value(&theta))?.norm();
    if (direct - value_abs).abs() > 1e-9 {
        return Err(Error::Invariant(format!(
            "bucketed |f̂(θ)| = {value_abs} disagrees with direct {direct}"
        )));
    }

    let kf = k as f64;
    let bound_abs = (delta / (10.0 * kf)).powf(4.0 * kf);
    let intermediate_bound = delta / 2.0 * (epsilon.powi(3) / 300.0).powi(k as i32);
    let bound_met = value_abs >= bound_abs;

    let (smoothed, error_bar) = smoothed_product(&buckets, &exps, &w, values.len(), sup_f as f64);
    let threshold = delta - kf * epsilon;
    let expansion_value = match mode {
        KataiMode::Exhaustive => fourier_expansion(&w, &exps, &table),
        KataiMode::Sampled { .. } => None,
    };

    if let KataiMode::Exhaustive = mode {
        if smoothed + error_bar < threshold {
            return Err(Error::Invariant(format!(
                "|E f ∏ψ̃| = {smoothed} below δ − kε = {threshold}"
            )));
        }
        if let Some(e) = expansion_value {
            if (e.norm() - smoothed).abs() > 1e-8 {
                return Err(Error::Invariant(format!(
                    "Fourier expansion {} disagrees with direct product {smoothed}",
                    e.norm()
                )));
            }
        }
        if !bound_met {
            return Err(Error::Invariant(format!(
                "|f̂(θ)| = {value_abs} below (δ/10k)^(4k) = {bound_abs}"
            )));
        }
    }

    Ok(KataiReport {
        s_mask: s.mask(),
        k,
        delta_num: *delta_exact.numer(),
        delta_den: *delta_exact.denom(),
        epsilon,
        radius: w.radius(),
        theta_residue: residue,
        theta_exponent: top,
        theta,
        value_abs,
        bound_abs,
        intermediate_bound,
        bound_met,
        smoothed_product: smoothed,
        smoothed_error_bar: error_bar,
        smoothed_threshold: threshold,
        expansion_value,
        reachable_classes,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{sieve, Kind};
    use crate::walsh::{degree_maxima, fwht};
    use num_bigint::BigInt;

    #[test]
    fn pure_character() {
        let f: Vec<i8> = (0..1 << 10).map(|x| if x & 1 == 0 { 1 } else { -1 }).collect();
        let s = BitIndexSet::from_indices(10, &[1]).unwrap();
        let rep = katai_reduce(&f, s, KataiMode::Exhaustive).unwrap();
        assert_eq!(rep.epsilon, 0.5);
        assert_eq!(rep.theta.terms(), &[(1, 1)]);
        assert_eq!(sparse_value(&rep.theta), BigRational::new(BigInt::from(1), BigInt::from(2)));
        assert!((rep.value_abs - 1.0).abs() < 1e-12);
        assert!(rep.value_abs >= 1e-4);
        // δ − kε = δ/2
        assert_eq!(rep.smoothed_threshold, 0.5);
        let e = rep.expansion_value.unwrap();
        assert!((e.norm() - rep.smoothed_product).abs() < 1e-9);
    }

    #[test]
    fn character_on_two_digits() {
        let f: Vec<i8> = (0..1 << 8).map(|x: u32| if (x & 0b1010).count_ones().is_multiple_of(2) { 1 } else { -1 }).collect();
        let s = BitIndexSet::from_indices(8, &[2, 4]).unwrap();
        let rep = katai_reduce(&f, s, KataiMode::Exhaustive).unwrap();
        assert!(rep.bound_met);
        assert!(rep.value_abs > 0.1);
        assert!(rep.smoothed_product >= rep.smoothed_threshold);
    }

    #[test]
    fn mobius_degree_two_small() {
        let mu = sieve(12, Kind::Mobius).unwrap();
        let spectrum = fwht(mu.values()).unwrap();
        let d2 = degree_maxima(&spectrum)[2];
        let s = BitIndexSet::from_mask(12, d2.witness_mask).unwrap();
        let rep = katai_reduce(mu.values(), s, KataiMode::Exhaustive).unwrap();
        assert!(rep.bound_met);
        assert_eq!(rep.theta.k(), 2);
        let sampled = katai_reduce(mu.values(), s, KataiMode::Sampled { samples: 200, seed: 1 }).unwrap();
        assert!(sampled.value_abs <= rep.value_abs + 1e-12);
    }

    #[test]
    fn reachable_sets_match_enumeration() {
        for (exps, radius) in [(vec![5u32], 3u64), (vec![2, 6], 5), (vec![3, 5], 2), (vec![1, 7], 20)] {
            let search = Search { exps: &exps, radius };
            let top = *exps.last().unwrap();
            let m = 1i128 << top;
            let mut brute = vec![false; m as usize];
            let r = radius as i64;
            if exps.len() == 1 {
                for r1 in -r..=r {
                    brute[(r1 as i128).rem_euclid(m) as usize] = true;
                }
            } else {
                for r1 in -r..=r {
                    for r2 in -r..=r {
                        let a = ((r1 as i128) << (exps[1] - exps[0])) + r2 as i128;
                        brute[a.rem_euclid(m) as usize] = true;
                    }
                }
            }
            assert_eq!(search.reachable(), brute, "{exps:?} R={radius}");
            for (a, &ok) in brute.iter().enumerate() {
                let c = search.canonical(a as u64);
                assert_eq!(c.is_some(), ok);
                if let Some(t) = c {
                    let v = exps.iter().zip(&t).fold(0i128, |acc, (&i, &r)| acc + ((r as i128) << (top - i)));
                    assert_eq!(v.rem_euclid(m) as usize, a);
                }
            }
        }
    }

    #[test]
    fn exhaustive_limits() {
        let f = vec![1i8; 1 << 6];
        let s = BitIndexSet::from_indices(6, &[1, 2, 3]).unwrap();
        assert!(matches!(katai_reduce(&f, s, KataiMode::Exhaustive), Err(Error::Precondition(_))));
        let g: Vec<i8> = (0..64u32).map(|x| if (x & 7).count_ones() % 2 == 0 { 1 } else { -1 }).collect();
        assert!(matches!(katai_reduce(&g, s, KataiMode::Exhaustive), Err(Error::Capacity(_))));
        assert!(katai_reduce(&g, s, KataiMode::Sampled { samples: 50, seed: 3 }).is_ok());
        let empty = BitIndexSet::from_mask(6, 0).unwrap();
        assert!(katai_reduce(&g, empty, KataiMode::Exhaustive).is_err());
    }
}
