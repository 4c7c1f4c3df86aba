//! Sieves for μ and λ, binary digits, and characters modulo powers of two.

mod characters;
mod sieve;

pub use characters::{
    decompose_odd, enumerate_characters, enumerate_real_primitive_characters, twisted_mean,
    DyadicCharacter, TwistedMean, MAX_MODULUS_BITS,
};
pub use sieve::{sieve, sieve_with_limit, Kind, MuTable, DEFAULT_MAX_BITS};

use crate::{Error, Result};

/// The digit `x_i` in `x = x_1 + 2 x_2 + … + 2^{n−1} x_n`.
///
/// `i` is 1-based; the caller's `n` bounds both `x` and `i`.
pub fn digit(x: u64, i: u32, n: u32) -> Result<u8> {
    if i == 0 || i > n || n > 64 {
        return Err(Error::IndexOutOfRange { index: i as usize, max: n.min(64) as usize });
    }
    if n < 64 && x >> n != 0 {
        return Err(Error::Domain(format!("{x} does not fit in {n} digits")));
    }
    Ok(((x >> (i - 1)) & 1) as u8)
}
