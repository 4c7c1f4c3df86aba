//! The smoothed square wave and the reduction from Walsh coefficients to
//! Fourier coefficients at sparse dyadic rationals.
//!
//! Fourier coefficients use `ĝ(r) = ∫_0^1 g(t) e(−rt) dt`, so that
//! `g(t) = Σ_r ĝ(r) e(rt)`. With `h = ε/24`:
//!
//! * `ψ̂(r) = −2i/(πr)` for odd `r` and 0 otherwise;
//! * `φ(t) = ψ(t + h)` has `φ̂(r) = e(rh) ψ̂(r)`;
//! * `χ = (1/2h) 1_{[−h/2, h/2]}` has `χ̂(r) = sin(πrh)/(πrh)`;
//! * `ψ₀ = φ ∗ χ ∗ χ` has `ψ̂₀(r) = φ̂(r) χ̂(r)²`.
//!
//! `χ ∗ χ` is the triangle of half-width `h` and unit mass, which gives
//! `ψ₀` a closed form in the time domain as well.

mod katai;

pub use katai::{katai_reduce, KataiMode, KataiReport, KataiRow, MAX_EXHAUSTIVE_BITS};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

use crate::{Error, Result};

/// Coefficient vectors longer than this are not materialized.
pub const MATERIALIZE_LIMIT: u64 = 1 << 22;

/// Tolerance for real-valuedness and symmetry assertions.
pub const IMAG_TOLERANCE: f64 = 1e-10;

/// Terms of the closed-form tail summed explicitly before the analytic remainder.
const EXPLICIT_TAIL_TERMS: u64 = 1 << 20;

/// `ψ(t)`: `+1` on `[0, 1/2)`, `−1` on `[1/2, 1)`, extended with period 1.
pub fn square_wave(t: f64) -> i8 {
    if t.rem_euclid(1.0) < 0.5 { 1 } else { -1 }
}

/// `ψ(num / den)` computed exactly.
pub fn square_wave_frac(num: u64, den: u64) -> i8 {
    let r = (num % den) as u128;
    if 2 * r < den as u128 { 1 } else { -1 }
}

/// `ψ(t)` for an exact rational.
pub fn square_wave_exact(t: &BigRational) -> i8 {
    let frac = t - t.floor();
    if frac * BigInt::from(2) < BigRational::from_integer(BigInt::from(1)) { 1 } else { -1 }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 { 1.0 } else { x.sin() / x }
}

/// `ψ̂(r)`.
pub fn square_wave_coefficient(r: i64) -> Complex64 {
    if r.is_odd() {
        Complex64::new(0.0, -2.0 / (PI * r as f64))
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// `φ̂(r)` for the square wave shifted left by `ε/24`.
pub fn shifted_wave_coefficient(r: i64, epsilon: f64) -> Complex64 {
    let h = epsilon / 24.0;
    square_wave_coefficient(r) * Complex64::from_polar(1.0, 2.0 * PI * phase_frac(r, h))
}

/// `χ̂(r)` for the box `(24/ε) 1_{[−ε/48, ε/48]}`.
pub fn box_coefficient(r: i64, epsilon: f64) -> f64 {
    sinc(PI * r as f64 * epsilon / 24.0)
}

/// `ψ̂₀(r) = φ̂(r) χ̂(r)²`.
pub fn psi0_coefficient(r: i64, epsilon: f64) -> Complex64 {
    let b = box_coefficient(r, epsilon);
    shifted_wave_coefficient(r, epsilon) * (b * b)
}

/// `r·h mod 1`, reduced before it reaches a trigonometric function.
fn phase_frac(r: i64, h: f64) -> f64 {
    (r as f64 * h).rem_euclid(1.0)
}

/// Mass of the unit triangle of half-width `h` on `(−∞, u]`.
fn triangle_cdf(u: f64, h: f64) -> f64 {
    if u <= -h {
        0.0
    } else if u <= 0.0 {
        (u + h) * (u + h) / (2.0 * h * h)
    } else if u < h {
        1.0 - (h - u) * (h - u) / (2.0 * h * h)
    } else {
        1.0
    }
}

/// `ψ₀(t) = (φ ∗ χ ∗ χ)(t)` in closed form.
pub fn psi0(t: f64, epsilon: f64) -> f64 {
    let h = epsilon / 24.0;
    let t = t.rem_euclid(1.0);
    // φ = −1 on [1/2 − h, 1 − h) + m; only m ∈ {−1, 0, 1} can meet [t − h, t + h].
    let negative_mass: f64 = (-1..=1)
        .map(|m| {
            let lo = 0.5 - h + m as f64;
            let hi = 1.0 - h + m as f64;
            (triangle_cdf(t - lo, h) - triangle_cdf(t - hi, h)).max(0.0)
        })
        .sum();
    1.0 - 2.0 * negative_mass
}

/// Rigorous upper bound for `Σ_{|r|>radius} |ψ̂₀(r)|`.
///
/// Sums the exact coefficients for a stretch of odd `r`, then bounds the
/// rest with `|ψ̂₀(r)| ≤ (2/π|r|)(24/πε|r|)²`.
pub fn coefficient_tail(epsilon: f64, radius: u64) -> f64 {
    let explicit_end = radius + EXPLICIT_TAIL_TERMS;
    let first_odd = (radius + 1) | 1;
    let explicit: f64 = (first_odd..=explicit_end)
        .step_by(2)
        .map(|r| 2.0 * psi0_coefficient(r as i64, epsilon).norm())
        .sum();
    let r0 = ((explicit_end + 1) | 1) as f64;
    let c = 2.0 * 2.0 / PI * (24.0 / (PI * epsilon)).powi(2);
    explicit + c * (1.0 / (r0 * r0 * r0) + 1.0 / (4.0 * r0 * r0))
}

/// `ψ̃ = ψ₁ / (1 + ε/3)` where `ψ₁` truncates `ψ₀` to `|r| ≤ ⌊100/ε³⌋`.
#[derive(Debug, Clone)]
pub struct SmoothedSquareWave {
    epsilon: f64,
    radius: u64,
    /// `a_r` at index `r + radius`, when small enough to store.
    coeffs: Option<Vec<Complex64>>,
    tail: f64,
}

/// Values of `ψ̃` on the grid `{j/m}` with a rigorous error bar.
#[derive(Debug, Clone)]
pub struct GridValues {
    pub values: Vec<f64>,
    pub error_bar: f64,
    pub max_imag: f64,
}

/// Builds `ψ̃` for `0 < ε ≤ 1/2`.
pub fn build_smoothed(epsilon: f64) -> Result<SmoothedSquareWave> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::Domain(format!("ε = {epsilon} outside (0, 1/2]")));
    }
    let radius = (100.0 / (epsilon * epsilon * epsilon)).floor();
    if radius > 1e15 {
        return Err(Error::Capacity(format!("ε = {epsilon} gives truncation radius {radius:e}")));
    }
    let radius = radius as u64;
    let norm = 1.0 + epsilon / 3.0;
    let coeffs = (radius <= MATERIALIZE_LIMIT).then(|| {
        let r = radius as i64;
        (-r..=r).map(|k| psi0_coefficient(k, epsilon) / norm).collect()
    });
    Ok(SmoothedSquareWave {
        epsilon,
        radius,
        coeffs,
        tail: coefficient_tail(epsilon, radius),
    })
}

impl SmoothedSquareWave {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `⌊100/ε³⌋`.
    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn is_materialized(&self) -> bool {
        self.coeffs.is_some()
    }

    /// Bound on `Σ_{|r|>radius} |ψ̂₀(r)|`, hence on `‖ψ₁ − ψ₀‖_∞`.
    pub fn truncation_tail(&self) -> f64 {
        self.tail
    }

    /// `a_r`; zero outside the truncation radius.
    pub fn coefficient(&self, r: i64) -> Complex64 {
        if r.unsigned_abs() > self.radius {
            return Complex64::new(0.0, 0.0);
        }
        match &self.coeffs {
            Some(c) => c[(r + self.radius as i64) as usize],
            None => psi0_coefficient(r, self.epsilon) / (1.0 + self.epsilon / 3.0),
        }
    }

    /// Largest `|a_r|`.
    pub fn max_coefficient(&self) -> f64 {
        match &self.coeffs {
            Some(c) => c.iter().map(|a| a.norm()).fold(0.0, f64::max),
            // |a_r| decreases in |r| along odd r, so r = ±1 dominates.
            None => self.coefficient(1).norm(),
        }
    }

    /// Error bar for the non-materialized evaluator, which uses `ψ₀`.
    fn time_domain_error(&self) -> f64 {
        self.tail / (1.0 + self.epsilon / 3.0) + 1e-12
    }

    /// `ψ̃(t)` together with the imaginary residue of the coefficient sum.
    pub fn eval_complex(&self, t: f64) -> (f64, f64) {
        match &self.coeffs {
            Some(c) => {
                let r0 = self.radius as i64;
                let s: Complex64 = c
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.re != 0.0 || a.im != 0.0)
                    .map(|(idx, a)| {
                        let r = idx as i64 - r0;
                        *a * Complex64::from_polar(1.0, 2.0 * PI * phase_frac(r, t.rem_euclid(1.0)))
                    })
                    .sum();
                (s.re, s.im)
            }
            None => (psi0(t, self.epsilon) / (1.0 + self.epsilon / 3.0), 0.0),
        }
    }

    /// `ψ̃(t)`, asserting real-valuedness.
    pub fn eval(&self, t: f64) -> f64 {
        let (re, im) = self.eval_complex(t);
        assert!(im.abs() <= IMAG_TOLERANCE, "ψ̃({t}) has imaginary part {im}");
        re
    }

    /// `ψ̃(j/m)` for `j = 0, …, m − 1`.
    ///
    /// Stored coefficients are folded modulo `m` and summed with one inverse
    /// FFT; otherwise `ψ₀/(1 + ε/3)` is used with the truncation tail as the
    /// error bar.
    pub fn eval_grid(&self, m: usize) -> GridValues {
        assert!(m > 0);
        match &self.coeffs {
            Some(c) => {
                let r0 = self.radius as i64;
                let mut bins = vec![Complex64::new(0.0, 0.0); m];
                for (idx, a) in c.iter().enumerate() {
                    let r = idx as i64 - r0;
                    bins[r.rem_euclid(m as i64) as usize] += *a;
                }
                FftPlanner::new().plan_fft_inverse(m).process(&mut bins);
                let max_imag = bins.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                GridValues {
                    values: bins.iter().map(|z| z.re).collect(),
                    error_bar: 1e-12,
                    max_imag,
                }
            }
            None => {
                let norm = 1.0 + self.epsilon / 3.0;
                GridValues {
                    values: (0..m).map(|j| psi0(j as f64 / m as f64, self.epsilon) / norm).collect(),
                    error_bar: self.time_domain_error(),
                    max_imag: 0.0,
                }
            }
        }
    }
}

/// `E_{x<2^n} |ψ(x/2^i) − ψ̃(x/2^i)|` for each `i = 0, …, n`.
#[derive(Debug, Clone, Serialize)]
pub struct Closeness {
    pub epsilon: f64,
    pub per_level: Vec<f64>,
    /// `E |ψ − ψ₀|` at the same points.
    pub per_level_psi0: Vec<f64>,
    pub max: f64,
}

/// Largest `n` accepted by [`closeness_check`].
pub const MAX_CLOSENESS_BITS: u32 = 20;

/// Checks `E_{x<2^n} |ψ(x/2^i) − ψ̃(x/2^i)| ≤ ε` for every `i ≤ n`.
///
/// `x/2^i mod 1` depends only on `x mod 2^i` and every residue occurs
/// `2^{n−i}` times, so the mean over `x` is the mean over residues.
pub fn closeness_check(w: &SmoothedSquareWave, n: u32) -> Result<Closeness> {
    if n > MAX_CLOSENESS_BITS {
        return Err(Error::Capacity(format!("closeness check for n = {n} > {MAX_CLOSENESS_BITS}")));
    }
    let mut per_level = Vec::with_capacity(n as usize + 1);
    let mut per_level_psi0 = Vec::with_capacity(n as usize + 1);
    for i in 0..=n {
        let m = 1usize << i;
        let grid = w.eval_grid(m);
        let mut dev = 0.0;
        let mut dev0 = 0.0;
        for (j, &v) in grid.values.iter().enumerate() {
            let exact = square_wave_frac(j as u64, m as u64) as f64;
            dev += (exact - v).abs();
            dev0 += (exact - psi0(j as f64 / m as f64, w.epsilon)).abs();
        }
        per_level.push(dev / m as f64 + grid.error_bar);
        per_level_psi0.push(dev0 / m as f64);
    }
    let max = per_level.iter().copied().fold(0.0, f64::max);
    if max > w.epsilon {
        return Err(Error::Invariant(format!(
            "E|ψ − ψ̃| = {max} exceeds ε = {}",
            w.epsilon
        )));
    }
    Ok(Closeness {
        epsilon: w.epsilon,
        per_level,
        per_level_psi0,
        max,
    })
}

/// Sup-norm and triangle-inequality bounds of the construction on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothingBounds {
    pub epsilon: f64,
    pub radius: u64,
    pub max_coefficient: f64,
    /// `Σ_{|r|>radius} |ψ̂₀(r)|` (rigorous upper bound).
    pub coefficient_tail: f64,
    /// `max |ψ̃|` over the grid.
    pub sup_norm: f64,
    /// `max |ψ₁ − ψ₀|` over the grid.
    pub psi1_minus_psi0: f64,
    /// `max |ψ̃ − ψ₁|` over the grid.
    pub tilde_minus_psi1: f64,
    /// `max |imag|` of the coefficient sum over the grid.
    pub max_imag: f64,
    /// `max |ψ₀ − ψ|` outside `[1/2 − ε/12, 1/2] ∪ [1 − ε/12, 1]`.
    pub psi0_off_intervals: f64,
}

/// Grid used for sup-norm checks: `points` uniform points, then the dyadic
/// grid of `2^dyadic_bits` points, which contains every `x/2^i`, `i ≤ dyadic_bits`.
pub fn smoothing_bounds(w: &SmoothedSquareWave, points: usize, dyadic_bits: u32) -> SmoothingBounds {
    let norm = 1.0 + w.epsilon / 3.0;
    let i1 = (0.5 - w.epsilon / 12.0, 0.5);
    let i2 = (1.0 - w.epsilon / 12.0, 1.0);
    let mut out = SmoothingBounds {
        epsilon: w.epsilon,
        radius: w.radius,
        max_coefficient: w.max_coefficient(),
        coefficient_tail: w.tail,
        sup_norm: 0.0,
        psi1_minus_psi0: 0.0,
        tilde_minus_psi1: 0.0,
        max_imag: 0.0,
        psi0_off_intervals: 0.0,
    };
    for m in [points, 1usize << dyadic_bits] {
        let grid = w.eval_grid(m);
        out.max_imag = out.max_imag.max(grid.max_imag);
        for (j, &v) in grid.values.iter().enumerate() {
            let t = j as f64 / m as f64;
            let p0 = psi0(t, w.epsilon);
            let p1 = v * norm;
            out.sup_norm = out.sup_norm.max(v.abs() + grid.error_bar);
            out.psi1_minus_psi0 = out.psi1_minus_psi0.max((p1 - p0).abs() + grid.error_bar * norm);
            out.tilde_minus_psi1 = out.tilde_minus_psi1.max((p1 - v).abs());
            let inside = (i1.0..=i1.1).contains(&t) || (i2.0..=i2.1).contains(&t) || t == 0.0;
            if !inside {
                out.psi0_off_intervals = out.psi0_off_intervals.max((p0 - square_wave(t) as f64).abs());
            }
        }
    }
    out
}

/// `ε` as a float from an exact rational, rejecting values outside `(0, 1/2]`.
pub fn epsilon_from_ratio(r: &BigRational) -> Result<f64> {
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    if !r.is_positive() || r > &half {
        return Err(Error::Domain(format!("ε = {r} outside (0, 1/2]")));
    }
    r.to_f64().ok_or_else(|| Error::Domain(format!("ε = {r} not representable")))
}
