//! Circuit families used in experiments.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Builder, Circuit};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// Balanced binary tree of 2-input AND gates over all digits.
    AndTree,
    OrTree,
    /// OR of `terms` ANDs, each over `width` distinct random literals.
    RandomDnf { width: u32, terms: u32, seed: u64 },
    /// `[x < ⌈num · 2^n / den⌉]`.
    DigitComparator { num: u64, den: u64 },
    Constant(bool),
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::AndTree => "and_tree".into(),
            Family::OrTree => "or_tree".into(),
            Family::RandomDnf { width, terms, seed } => format!("random_dnf({width},{terms},{seed})"),
            Family::DigitComparator { num, den } => format!("digit_comparator({num}/{den})"),
            Family::Constant(v) => format!("constant_{v}"),
        }
    }
}

fn tree(b: &mut Builder, mut layer: Vec<usize>, and: bool) -> usize {
    while layer.len() > 1 {
        layer = layer
            .chunks(2)
            .map(|pair| {
                if pair.len() == 1 {
                    pair[0]
                } else if and {
                    b.and(pair.to_vec())
                } else {
                    b.or(pair.to_vec())
                }
            })
            .collect();
    }
    layer[0]
}

/// `x_1 ∨ ¬x_1` or `x_1 ∧ ¬x_1`.
fn constant(b: &mut Builder, value: bool) -> usize {
    let x = b.input(1);
    let nx = b.not(x);
    if value { b.or(vec![x, nx]) } else { b.and(vec![x, nx]) }
}

pub fn generate(family: Family, n: u32) -> Result<Circuit> {
    if n == 0 || n > 63 {
        return Err(Error::Domain(format!("input count {n} outside 1..=63")));
    }
    let mut b = Builder::new(n);
    let out = match family {
        Family::AndTree | Family::OrTree => {
            let leaves = (1..=n).map(|i| b.input(i)).collect();
            let root = tree(&mut b, leaves, family == Family::AndTree);
            if n == 1 { b.and(vec![root]) } else { root }
        }
        Family::Constant(v) => constant(&mut b, v),
        Family::RandomDnf { width, terms, seed } => {
            if width == 0 || width > n || terms == 0 {
                return Err(Error::Domain(format!("random_dnf needs 1 ≤ width ≤ n and terms ≥ 1, got ({width}, {terms})")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ands: Vec<usize> = (0..terms)
                .map(|_| {
                    let mut digits: Vec<u32> = sample(&mut rng, n as usize, width as usize)
                        .into_iter()
                        .map(|d| d as u32 + 1)
                        .collect();
                    digits.sort_unstable();
                    let lits = digits.iter().map(|&i| b.literal(i, rng.gen())).collect();
                    b.and(lits)
                })
                .collect();
            b.or(ands)
        }
        Family::DigitComparator { num, den } => {
            if den == 0 || num > den {
                return Err(Error::Domain(format!("threshold {num}/{den} outside [0, 1]")));
            }
            let big_n = 1u128 << n;
            let t = (num as u128 * big_n).div_ceil(den as u128);
            if t == 0 {
                constant(&mut b, false)
            } else if t >= big_n {
                constant(&mut b, true)
            } else {
                // x < T iff at the highest digit where they differ, x has 0 and T has 1.
                let terms: Vec<usize> = (1..=n)
                    .rev()
                    .filter(|&i| t >> (i - 1) & 1 == 1)
                    .map(|i| {
                        let mut lits = vec![b.literal(i, false)];
                        for j in i + 1..=n {
                            lits.push(b.literal(j, t >> (j - 1) & 1 == 1));
                        }
                        b.and(lits)
                    })
                    .collect();
                b.or(terms)
            }
        }
    };
    Ok(b.finish(out)?.with_name(family.label()))
}

/// `count` width-3 DNFs with `1..=30` terms, all derived from `seed`.
pub fn dnf_corpus(n: u32, count: usize, seed: u64) -> Result<Vec<Circuit>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let terms = rng.gen_range(1..=30);
            let s = rng.gen();
            generate(Family::RandomDnf { width: 3.min(n), terms, seed: s }, n)
        })
        .collect()
}
