//! Dirichlet characters modulo `2^t`.
//!
//! For `t ≥ 3` the unit group splits as `{±1} × ⟨5⟩` with `5` of order
//! `2^{t−2}`, so a character is fixed by `χ(−1) ∈ {±1}` and by
//! `χ(5) = e(j / 2^{t−2})`. All values are kept as exact exponents of a
//! root of unity; complex numbers only appear at the boundary.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::MuTable;
use crate::{Error, Result};

/// Largest supported modulus exponent.
pub const MAX_MODULUS_BITS: u32 = 62;

/// `e(k / 2^log_order)` for an exponent `k` known exactly.
fn root_of_unity(k: u64, log_order: u32) -> Complex64 {
    let modulus = 1u128 << log_order;
    let angle = std::f64::consts::TAU * (k as u128 % modulus) as f64 / modulus as f64;
    Complex64::from_polar(1.0, angle)
}

/// Writes odd `x` as `(−1)^{e0} · 5^{e1} (mod 2^t)` with `e0 ∈ {0, 1}` and
/// `0 ≤ e1 < 2^{t−2}`.
///
/// Bit-fixing: `5^{2^j} ≡ 1 + 2^{j+2} (mod 2^{j+3})`, so dividing by it
/// clears bit `j + 2` without disturbing lower bits.
pub fn decompose_odd(x: u64, t: u32) -> Result<(u8, u64)> {
    if !(3..=MAX_MODULUS_BITS).contains(&t) {
        return Err(Error::Domain(format!("modulus exponent {t} outside 3..={MAX_MODULUS_BITS}")));
    }
    let mask = (1u64 << t) - 1;
    if x.is_multiple_of(2) {
        return Err(Error::Domain(format!("{x} is even and not a unit mod 2^{t}")));
    }
    if x > mask {
        return Err(Error::Domain(format!("{x} is not reduced mod 2^{t}")));
    }
    let e0 = u8::from(x % 4 == 3);
    let mut z = if e0 == 1 { x.wrapping_neg() & mask } else { x };

    let mut inv = inverse_of_five();
    let mut e1 = 0u64;
    for j in 0..t - 2 {
        if (z >> (j + 2)) & 1 == 1 {
            z = z.wrapping_mul(inv) & mask;
            e1 |= 1 << j;
        }
        inv = inv.wrapping_mul(inv);
    }
    debug_assert_eq!(z, 1);
    Ok((e0, e1))
}

/// `5^{−1} mod 2^64` by Newton iteration.
fn inverse_of_five() -> u64 {
    let mut inv: u64 = 1;
    for _ in 0..7 {
        inv = inv.wrapping_mul(2u64.wrapping_sub(5u64.wrapping_mul(inv)));
    }
    debug_assert_eq!(inv.wrapping_mul(5), 1);
    inv
}

/// A Dirichlet character modulo `2^t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCharacter {
    t: u32,
    minus_one: i8,
    five_index: u64,
}

impl DyadicCharacter {
    /// `χ(−1) = minus_one` and, for `t ≥ 3`, `χ(5) = e(five_index / 2^{t−2})`.
    pub fn new(t: u32, minus_one: i8, five_index: u64) -> Result<Self> {
        if t == 0 || t > MAX_MODULUS_BITS {
            return Err(Error::Domain(format!("modulus exponent {t} outside 1..={MAX_MODULUS_BITS}")));
        }
        if minus_one != 1 && minus_one != -1 {
            return Err(Error::Domain("χ(−1) must be ±1".into()));
        }
        if t == 1 && minus_one == -1 {
            return Err(Error::Domain("−1 ≡ 1 mod 2, so χ(−1) = 1".into()));
        }
        if t <= 2 && five_index != 0 {
            return Err(Error::Domain("5 ≡ 1 mod 4, so χ(5) = 1 for t ≤ 2".into()));
        }
        if t >= 3 && five_index >= 1 << (t - 2) {
            return Err(Error::Domain(format!("χ(5) index {five_index} ≥ 2^{}", t - 2)));
        }
        Ok(DyadicCharacter { t, minus_one, five_index })
    }

    pub fn principal(t: u32) -> Result<Self> {
        Self::new(t, 1, 0)
    }

    /// The character mod 4 with `χ_4(−1) = −1`.
    pub fn chi4() -> Self {
        DyadicCharacter { t: 2, minus_one: -1, five_index: 0 }
    }

    /// The character mod 8 with `χ_8(3) = χ_8(5) = −1`.
    pub fn chi8() -> Self {
        DyadicCharacter { t: 3, minus_one: 1, five_index: 1 }
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn modulus(&self) -> u64 {
        1 << self.t
    }

    pub fn minus_one(&self) -> i8 {
        self.minus_one
    }

    pub fn five_index(&self) -> u64 {
        self.five_index
    }

    /// Values are `e(k / 2^L)` with `L` returned here.
    pub fn log_order(&self) -> u32 {
        self.t.saturating_sub(1).max(1)
    }

    /// Exponent `k` with `χ(x) = e(k / 2^L)`, or `None` for even `x`.
    pub fn phase(&self, x: u64) -> Option<u64> {
        if x.is_multiple_of(2) {
            return None;
        }
        let r = x & (self.modulus() - 1);
        match self.t {
            1 => Some(0),
            2 => Some(u64::from(self.minus_one == -1 && r == 3)),
            t => {
                let (e0, e1) = decompose_odd(r, t).expect("reduced odd residue");
                let half = 1u64 << (t - 2);
                let sign = if self.minus_one == -1 && e0 == 1 { half } else { 0 };
                let mask = (1u64 << (t - 1)) - 1;
                Some((sign + (self.five_index.wrapping_mul(e1) << 1)) & mask)
            }
        }
    }

    /// `χ(x)` as a complex number; 0 on even `x`.
    pub fn value(&self, x: u64) -> Complex64 {
        match self.phase(x) {
            None => Complex64::new(0.0, 0.0),
            Some(k) => root_of_unity(k, self.log_order()),
        }
    }

    /// `χ(x)` for real characters as an integer in `{−1, 0, 1}`.
    pub fn real_value(&self, x: u64) -> Option<i8> {
        if !self.is_real() {
            return None;
        }
        Some(match self.phase(x) {
            None => 0,
            Some(0) => 1,
            Some(_) => -1,
        })
    }

    pub fn is_principal(&self) -> bool {
        self.minus_one == 1 && self.five_index == 0
    }

    /// Real-valued iff `χ(5) = ±1`.
    pub fn is_real(&self) -> bool {
        self.t < 3 || self.five_index == 0 || self.five_index == 1 << (self.t - 3)
    }

    /// The conductor, a power of two dividing the modulus.
    pub fn conductor(&self) -> u64 {
        if self.t >= 3 && self.five_index != 0 {
            let order_bits = (self.t - 2) - self.five_index.trailing_zeros();
            1 << (order_bits + 2)
        } else if self.minus_one == -1 {
            4
        } else {
            1
        }
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus()
    }

    /// The character mod `2^t'` induced by this one, `t' ≥ t`.
    pub fn lift(&self, t_new: u32) -> Result<Self> {
        if t_new < self.t {
            return Err(Error::Domain(format!("cannot lift mod 2^{} to 2^{t_new}", self.t)));
        }
        let five_index = if self.t >= 3 { self.five_index << (t_new - self.t) } else { 0 };
        Self::new(t_new, self.minus_one, five_index)
    }

    /// Pointwise product, lifted to the larger modulus.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let t = self.t.max(other.t);
        let (a, b) = (self.lift(t)?, other.lift(t)?);
        let five_index = if t >= 3 { (a.five_index + b.five_index) & ((1 << (t - 2)) - 1) } else { 0 };
        Self::new(t, a.minus_one * b.minus_one, five_index)
    }
}

/// All `φ(2^t) = 2^{t−1}` characters modulo `2^t`.
pub fn enumerate_characters(t: u32) -> Result<Vec<DyadicCharacter>> {
    if t == 0 || t > 24 {
        return Err(Error::Capacity(format!("character enumeration for t = {t}")));
    }
    let signs: &[i8] = if t == 1 { &[1] } else { &[1, -1] };
    let fives = if t >= 3 { 1u64 << (t - 2) } else { 1 };
    let mut out = Vec::with_capacity(signs.len() * fives as usize);
    for &s in signs {
        for f in 0..fives {
            out.push(DyadicCharacter::new(t, s, f)?);
        }
    }
    Ok(out)
}

/// The nonprincipal real primitive characters of 2-power conductor.
///
/// Found by searching every modulus up to `2^8`: real characters have
/// `χ(5) = ±1`, so their conductor never exceeds 8 and the search is
/// complete. Returns `χ_4`, `χ_8`, `χ_4 χ_8`.
pub fn enumerate_real_primitive_characters() -> Vec<DyadicCharacter> {
    let mut found: Vec<DyadicCharacter> = (1..=8)
        .flat_map(|t| enumerate_characters(t).expect("small modulus"))
        .filter(|c| c.is_real() && !c.is_principal() && c.is_primitive())
        .collect();
    found.sort_by_key(|c| (c.t, c.minus_one == -1));
    found
}

/// `(1/N) Σ_{x<N} f(x) χ(x)` for a tabulated `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwistedMean {
    /// `N`.
    pub denominator: u64,
    /// Exact `N · mean` when `χ` is real.
    pub real_numerator: Option<i64>,
    pub value: Complex64,
}

/// Character-twisted mean of a table.
///
/// Table entries are accumulated per phase class of `χ` in integers, so
/// the only floating work is one multiply per root of unity.
pub fn twisted_mean(table: &MuTable, chi: &DyadicCharacter) -> TwistedMean {
    let log_order = chi.log_order();
    let mut class_sums = vec![0i64; 1 << log_order];
    let len = table.len() as u64;
    if chi.modulus() >= len {
        for (x, &v) in table.values().iter().enumerate() {
            if let (Some(k), true) = (chi.phase(x as u64), v != 0) {
                class_sums[k as usize] += v as i64;
            }
        }
    } else {
        let m = chi.modulus() as usize;
        let mut buckets = vec![0i64; m];
        for chunk in table.values().chunks(m) {
            for (b, &v) in buckets.iter_mut().zip(chunk) {
                *b += v as i64;
            }
        }
        for (r, &s) in buckets.iter().enumerate() {
            if let Some(k) = chi.phase(r as u64) {
                class_sums[k as usize] += s;
            }
        }
    }
    let real_numerator = chi.is_real().then(|| {
        let half = class_sums.len() / 2;
        class_sums[0] - if half > 0 { class_sums[half] } else { 0 }
    });
    let total: Complex64 = class_sums
        .iter()
        .enumerate()
        .filter(|(_, &s)| s != 0)
        .map(|(k, &s)| root_of_unity(k as u64, log_order) * s as f64)
        .sum();
    TwistedMean {
        denominator: len,
        real_numerator,
        value: total / len as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{sieve, Kind};

    fn pow_mod(base: u64, mut e: u64, t: u32) -> u64 {
        let mask = (1u64 << t) - 1;
        let mut acc = 1u64;
        let mut b = base & mask;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.wrapping_mul(b) & mask;
            }
            b = b.wrapping_mul(b) & mask;
            e >>= 1;
        }
        acc
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose_odd(5, 3).unwrap(), (0, 1));
        assert_eq!(decompose_odd(7, 3).unwrap(), (1, 0));
        assert_eq!(decompose_odd(1, 3).unwrap(), (0, 0));
        assert!(decompose_odd(4, 3).is_err());
        assert!(decompose_odd(3, 2).is_err());
    }

    #[test]
    fn decompose_recomposes_exhaustively() {
        let t = 10;
        let mask = (1u64 << t) - 1;
        for x in (1..1u64 << t).step_by(2) {
            let (e0, e1) = decompose_odd(x, t).unwrap();
            assert!(e1 < 1 << (t - 2));
            let mut y = pow_mod(5, e1, t);
            if e0 == 1 {
                y = y.wrapping_neg() & mask;
            }
            assert_eq!(y, x);
        }
    }

    #[test]
    fn named_character_values() {
        let c8 = DyadicCharacter::chi8();
        let c4 = DyadicCharacter::chi4();
        assert_eq!(c8.real_value(3), Some(-1));
        assert_eq!(c8.real_value(5), Some(-1));
        assert_eq!(c8.real_value(7), Some(1));
        assert_eq!(c8.real_value(1), Some(1));
        assert_eq!(c4.real_value(3), Some(-1));
        assert_eq!(c4.real_value(1), Some(1));
        assert_eq!(c4.real_value(6), Some(0));
    }

    #[test]
    fn real_primitive_characters() {
        let chars = enumerate_real_primitive_characters();
        assert_eq!(chars.len(), 3);
        let c4c8 = DyadicCharacter::chi4().product(&DyadicCharacter::chi8()).unwrap();
        assert_eq!(chars, vec![DyadicCharacter::chi4(), DyadicCharacter::chi8(), c4c8]);
        assert_eq!(c4c8.real_value(3), Some(1));
        for c in &chars {
            for x in (1..64u64).step_by(2) {
                assert!(c.value(x).im.abs() < 1e-15);
                assert!(c.real_value(x).is_some());
            }
        }
    }

    #[test]
    fn multiplicativity_exhaustive() {
        for t in 1..=8 {
            let mask = (1u64 << t) - 1;
            for chi in enumerate_characters(t).unwrap() {
                let l = chi.log_order();
                for x in (1..=mask).step_by(2) {
                    for y in (1..=mask).step_by(2) {
                        let lhs = chi.phase((x * y) & mask).unwrap();
                        let rhs = (chi.phase(x).unwrap() + chi.phase(y).unwrap()) & ((1 << l) - 1);
                        assert_eq!(lhs, rhs, "t={t} x={x} y={y} {chi:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn orthogonality() {
        for t in 1..=8 {
            let chars = enumerate_characters(t).unwrap();
            assert_eq!(chars.len(), 1 << (t - 1));
            for x in (1u64..1 << t).step_by(2) {
                let s: Complex64 = chars.iter().map(|c| c.value(x)).sum();
                let expected = if x == 1 { (1u64 << (t - 1)) as f64 } else { 0.0 };
                assert!((s.re - expected).abs() < 1e-9 && s.im.abs() < 1e-9, "t={t} x={x} {s}");
            }
        }
    }

    #[test]
    fn conductor_matches_definition() {
        for t in 1..=7u32 {
            let mask = (1u64 << t) - 1;
            for chi in enumerate_characters(t).unwrap() {
                let s = (0..=t)
                    .find(|&s| {
                        (1..=mask)
                            .step_by(2)
                            .filter(|x| x & ((1 << s) - 1) == 1 % (1 << s))
                            .all(|x| chi.phase(x) == Some(0))
                    })
                    .unwrap();
                let brute = if s <= 1 { 1 } else { 1 << s };
                assert_eq!(chi.conductor(), brute, "{chi:?}");
            }
        }
    }

    #[test]
    fn twisted_mean_principal_mod_two() {
        let mu = sieve(4, Kind::Mobius).unwrap();
        let m = twisted_mean(&mu, &DyadicCharacter::principal(1).unwrap());
        // odd x < 16: μ = 1, −1, −1, −1, 0, −1, −1, 1
        assert_eq!(m.real_numerator, Some(-3));
        assert!((m.value.re + 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn twisted_mean_matches_direct_sum() {
        let mu = sieve(12, Kind::Mobius).unwrap();
        for t in [1, 2, 3, 5, 12, 14] {
            for chi in enumerate_characters(t).unwrap().iter().step_by(3) {
                let m = twisted_mean(&mu, chi);
                let direct: Complex64 = (0..mu.len() as u64)
                    .map(|x| chi.value(x) * mu.get(x as usize) as f64)
                    .sum::<Complex64>()
                    / mu.len() as f64;
                assert!((m.value - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn twisted_mean_of_zero_table() {
        let z = MuTable::from_values(Kind::Mobius, vec![0; 64]).unwrap();
        let m = twisted_mean(&z, &DyadicCharacter::chi8());
        assert_eq!(m.real_numerator, Some(0));
        assert_eq!(m.value, Complex64::new(0.0, 0.0));
    }
}
