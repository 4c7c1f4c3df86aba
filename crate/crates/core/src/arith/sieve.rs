use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default ceiling on the bit-length of a table (`N ≤ 2^30`).
pub const DEFAULT_MAX_BITS: u32 = 30;

/// Which arithmetic function a [`MuTable`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Mobius,
    Liouville,
}

impl std::str::FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mobius" | "mu" => Ok(Kind::Mobius),
            "liouville" | "lambda" => Ok(Kind::Liouville),
            other => Err(Error::Domain(format!("unknown kind `{other}`"))),
        }
    }
}

/// Values of μ or λ on `{0, …, 2^n − 1}`, with the value at 0 fixed to 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuTable {
    n: u32,
    kind: Kind,
    values: Vec<i8>,
}

impl MuTable {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// `N = 2^n`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, x: usize) -> i8 {
        self.values[x]
    }

    /// `Σ_{x < N} values[x]`, i.e. the Mertens function `M(N − 1)` for μ.
    pub fn sum(&self) -> i64 {
        self.values.iter().map(|&v| v as i64).sum()
    }

    /// Counts of the values −1, 0 and +1, in that order.
    pub fn value_counts(&self) -> [u64; 3] {
        let mut counts = [0u64; 3];
        for &v in &self.values {
            counts[(v + 1) as usize] += 1;
        }
        counts
    }

    /// Builds a table directly from values, for tests and synthetic inputs.
    pub fn from_values(kind: Kind, values: Vec<i8>) -> Result<Self> {
        let len = values.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Domain(format!("table length {len} is not a power of two")));
        }
        if values.iter().any(|v| !(-1..=1).contains(v)) {
            return Err(Error::Domain("table entries must lie in {-1, 0, 1}".into()));
        }
        Ok(MuTable {
            n: len.trailing_zeros(),
            kind,
            values,
        })
    }
}

/// Tabulates μ or λ on `{0, …, 2^n − 1}` with the default ceiling.
pub fn sieve(n: u32, kind: Kind) -> Result<MuTable> {
    sieve_with_limit(n, kind, DEFAULT_MAX_BITS)
}

/// Like [`sieve`] but with an explicit ceiling on `n`.
pub fn sieve_with_limit(n: u32, kind: Kind, max_bits: u32) -> Result<MuTable> {
    if n == 0 || n > max_bits || n >= usize::BITS {
        return Err(Error::Capacity(format!(
            "sieve bit-length {n} outside supported range 1..={max_bits}"
        )));
    }
    let values = sieve_range(1usize << n, kind);
    Ok(MuTable { n, kind, values })
}

/// Eratosthenes-style sieve over `[0, len)`.
///
/// Every prime `p` flips the sign of its multiples. For μ the multiples of
/// `p²` are then zeroed; for λ every prime power `p^e` flips its multiples
/// once more, so the final sign is the parity of Ω(x).
pub(crate) fn sieve_range(len: usize, kind: Kind) -> Vec<i8> {
    let mut values = vec![1i8; len];
    if len > 0 {
        values[0] = 0;
    }
    if len <= 2 {
        return values;
    }
    let mut composite = vec![0u64; len.div_ceil(64)];
    for p in 2..len {
        if composite[p / 64] >> (p % 64) & 1 == 1 {
            continue;
        }
        match kind {
            Kind::Mobius => {
                for m in (p..len).step_by(p) {
                    values[m] = -values[m];
                    composite[m / 64] |= 1 << (m % 64);
                }
                if let Some(sq) = p.checked_mul(p).filter(|&sq| sq < len) {
                    for m in (sq..len).step_by(sq) {
                        values[m] = 0;
                    }
                }
            }
            Kind::Liouville => {
                let mut pe = p;
                loop {
                    for m in (pe..len).step_by(pe) {
                        values[m] = -values[m];
                    }
                    match pe.checked_mul(p) {
                        Some(next) if next < len => pe = next,
                        _ => break,
                    }
                }
                for m in (p..len).step_by(p) {
                    composite[m / 64] |= 1 << (m % 64);
                }
            }
        }
    }
    values
}
