//! Sparse dyadic rationals, Dirichlet approximation and the sparse dyadic
//! diophantine lemma.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::{Error, Result};

pub(crate) fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

pub(crate) fn pow2(e: u32) -> BigInt {
    BigInt::one() << e as usize
}

/// `θ − ⌊θ⌋`.
pub fn reduce_mod_one(theta: &BigRational) -> BigRational {
    theta - theta.floor()
}

/// `θ = Σ_j r_j / 2^{i_j}` with strictly increasing exponents `i_j ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SparseDyadic {
    terms: Vec<(i64, u32)>,
}

impl SparseDyadic {
    /// Terms are `(coefficient, exponent)` pairs.
    pub fn new(terms: Vec<(i64, u32)>) -> Result<Self> {
        if let Some(&(_, i)) = terms.first() {
            if i == 0 {
                return Err(Error::Domain("dyadic exponents start at 1".into()));
            }
        }
        if terms.windows(2).any(|w| w[0].1 >= w[1].1) {
            return Err(Error::Domain("dyadic exponents must be strictly increasing".into()));
        }
        if terms.last().is_some_and(|&(_, i)| i > 126) {
            return Err(Error::Capacity("dyadic exponent above 126".into()));
        }
        Ok(SparseDyadic { terms })
    }

    pub fn terms(&self) -> &[(i64, u32)] {
        &self.terms
    }

    /// Number of terms `k`.
    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn max_exponent(&self) -> u32 {
        self.terms.last().map_or(0, |&(_, i)| i)
    }

    pub fn max_abs_coefficient(&self) -> u64 {
        self.terms.iter().map(|&(r, _)| r.unsigned_abs()).max().unwrap_or(0)
    }

    /// `Σ_j r_j / 2^{i_j}` without reduction mod 1.
    pub fn raw_value(&self) -> BigRational {
        self.terms
            .iter()
            .fold(BigRational::zero(), |acc, &(r, i)| acc + BigRational::new(big(r), pow2(i)))
    }

    /// `θ mod 1` as `(a, t)` with `θ ≡ a / 2^t`, `t` the largest exponent
    /// (not reduced further).
    pub fn residue(&self) -> (u128, u32) {
        let t = self.max_exponent();
        let modulus: u128 = 1u128 << t;
        let mut a: u128 = 0;
        for &(r, i) in &self.terms {
            let step = 1u128 << (t - i);
            let r_mod = (r as i128).rem_euclid(modulus as i128) as u128;
            a = (a + r_mod.wrapping_mul(step) % modulus) % modulus;
        }
        (a, t)
    }

    /// Compact text form `r1/2^i1+r2/2^i2`.
    pub fn describe(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (pos, &(r, i)) in self.terms.iter().enumerate() {
            if pos > 0 && r >= 0 {
                out.push('+');
            }
            out.push_str(&format!("{r}/2^{i}"));
        }
        out
    }
}

/// The value of a sparse dyadic rational in `[0, 1)`.
pub fn sparse_value(theta: &SparseDyadic) -> BigRational {
    reduce_mod_one(&theta.raw_value())
}

/// A reduced fraction `a/q` approximating `θ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RationalApprox {
    pub a: BigInt,
    pub q: BigInt,
    /// `|θ − a/q|`.
    pub err: BigRational,
}

impl RationalApprox {
    pub fn fraction(&self) -> BigRational {
        BigRational::new(self.a.clone(), self.q.clone())
    }

    /// Dirichlet's bound `|θ − a/q| ≤ 1/(q(Q + 1))`.
    pub fn satisfies_dirichlet(&self, q_bound: u64) -> bool {
        &self.err * (&self.q * BigInt::from(q_bound + 1)) <= BigRational::one()
    }
}

/// The last continued-fraction convergent of `θ` with denominator `≤ Q`.
///
/// It minimizes `|qθ − a|` over `1 ≤ q ≤ Q` and so meets Dirichlet's bound
/// `|θ − a/q| ≤ 1/(q(Q + 1))`.
pub fn best_rational_approx(theta: &BigRational, q_bound: u64) -> Result<RationalApprox> {
    if q_bound == 0 {
        return Err(Error::Domain("approximation bound Q must be ≥ 1".into()));
    }
    let q_max = BigInt::from(q_bound);
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let mut x = theta.clone();
    let a0 = x.floor().to_integer();
    let (mut p, mut q) = (a0.clone(), BigInt::one());
    x -= BigRational::from_integer(a0);
    while !x.is_zero() {
        x = x.recip();
        let digit = x.floor().to_integer();
        x -= BigRational::from_integer(digit.clone());
        let q_next = &digit * &q + &q_prev;
        if q_next > q_max {
            break;
        }
        let p_next = &digit * &p + &p_prev;
        (p_prev, q_prev) = (std::mem::replace(&mut p, p_next), std::mem::replace(&mut q, q_next));
    }
    let err = (theta - BigRational::new(p.clone(), q.clone())).abs();
    let approx = RationalApprox { a: p, q, err };
    debug_assert!(approx.a.gcd(&approx.q).is_one());
    debug_assert!(approx.satisfies_dirichlet(q_bound));
    Ok(approx)
}

/// Output of [`dio_lemma`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DioLemmaReport {
    /// Gap index in `0..=k`, with `i_0 = 0` and `i_{k+1} = n`.
    pub j: usize,
    pub gap: u32,
    pub a_prime: BigInt,
    /// `q' = 2^{q_prime_exponent}`.
    pub q_prime_exponent: u32,
    /// `|θ − a'/q'|`.
    pub error: BigRational,
    /// `|θ − a'/q'| ≤ 2^{−n/2k} · 2Q/q'`, decided exactly.
    pub bound_holds: bool,
    pub approx: RationalApprox,
    /// `|θ − a/q| ≤ Q/2^n` for the Dirichlet approximation.
    pub approx_is_close: bool,
    /// Whether the close approximation has a power-of-two denominator and
    /// equals `a'/q'`; `None` when it is not close.
    pub approx_matches: Option<bool>,
}

impl DioLemmaReport {
    pub fn q_prime(&self) -> BigInt {
        pow2(self.q_prime_exponent)
    }

    /// `a'/q'`.
    pub fn approximant(&self) -> BigRational {
        BigRational::new(self.a_prime.clone(), self.q_prime())
    }
}

/// `2^{n/2k} > 4Q²`, i.e. `2^n > (4Q²)^{2k}`.
pub fn dio_hypothesis(k: usize, q_bound: u64, n: u32) -> bool {
    if k == 0 {
        return true;
    }
    let four_q2 = BigInt::from(4u8) * BigInt::from(q_bound) * BigInt::from(q_bound);
    pow2(n) > num_traits::pow(four_q2, 2 * k)
}

/// The sparse dyadic diophantine lemma, made constructive.
///
/// Picks the widest gap between consecutive exponents (smallest `j` on
/// ties), forms `q' = 2^{i_j}` and `a' = Σ_{l≤j} r_l 2^{i_j − i_l}`, checks
/// the closeness bound exactly, and confirms that a Dirichlet approximation
/// with `q ≤ Q` within `Q/2^n` of `θ` is `a'/q'`.
pub fn dio_lemma(theta: &SparseDyadic, q_bound: u64, n: u32) -> Result<DioLemmaReport> {
    let k = theta.k();
    if k == 0 {
        return Err(Error::Domain("θ has no terms".into()));
    }
    if q_bound == 0 {
        return Err(Error::Domain("Q must be ≥ 1".into()));
    }
    if theta.max_exponent() > n {
        return Err(Error::Precondition(format!(
            "exponent {} exceeds n = {n}",
            theta.max_exponent()
        )));
    }
    if theta.max_abs_coefficient() > q_bound {
        return Err(Error::Precondition(format!(
            "coefficient {} exceeds Q = {q_bound}",
            theta.max_abs_coefficient()
        )));
    }
    if !dio_hypothesis(k, q_bound, n) {
        return Err(Error::Precondition(format!(
            "2^(n/2k) > 4Q² fails for n = {n}, k = {k}, Q = {q_bound}"
        )));
    }

    let mut exps = vec![0u32];
    exps.extend(theta.terms().iter().map(|&(_, i)| i));
    exps.push(n);
    let (j, gap) = exps
        .windows(2)
        .map(|w| w[1] - w[0])
        .enumerate()
        .fold((0, 0), |best, (j, g)| if g > best.1 { (j, g) } else { best });

    let q_exp = exps[j];
    let a_prime = theta.terms()[..j]
        .iter()
        .fold(BigInt::zero(), |acc, &(r, i)| acc + big(r) * pow2(q_exp - i));
    let raw = theta.raw_value();
    let approx_prime = BigRational::new(a_prime.clone(), pow2(q_exp));
    let error = (&raw - &approx_prime).abs();

    // (error · q' / 2Q)^{2k} · 2^n ≤ 1
    let scaled = &error * BigRational::new(pow2(q_exp), BigInt::from(2 * q_bound));
    let lhs = num_traits::pow(scaled, 2 * k) * BigRational::from_integer(pow2(n));
    let bound_holds = lhs <= BigRational::one();
    if !bound_holds {
        return Err(Error::Invariant(format!(
            "|θ − a'/q'| = {error} exceeds 2^(−n/2k)·2Q/q'"
        )));
    }

    let approx = best_rational_approx(&raw, q_bound)?;
    let tolerance = BigRational::new(BigInt::from(q_bound), pow2(n));
    let approx_is_close = approx.err <= tolerance;
    let approx_matches = approx_is_close.then(|| {
        let q = approx.q.to_u128().unwrap_or(0);
        q.is_power_of_two() && approx.fraction() == approx_prime
    });
    if approx_matches == Some(false) {
        return Err(Error::Invariant(format!(
            "approximation {}/{} within Q/N of θ = {} is not a'/q' = {}",
            approx.a,
            approx.q,
            theta.describe(),
            approx_prime
        )));
    }
    Ok(DioLemmaReport {
        j,
        gap,
        a_prime,
        q_prime_exponent: q_exp,
        error,
        bound_holds,
        approx,
        approx_is_close,
        approx_matches,
    })
}

/// One CSV row of a lemma report: `(k, terms, q_prime, error_numer, error_denom)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DioLemmaRow {
    pub k: usize,
    pub terms: String,
    pub q_prime: String,
    pub error_numer: String,
    pub error_denom: String,
}

impl DioLemmaRow {
    pub fn new(theta: &SparseDyadic, report: &DioLemmaReport) -> Self {
        DioLemmaRow {
            k: theta.k(),
            terms: theta.describe(),
            q_prime: report.q_prime().to_string(),
            error_numer: report.error.numer().to_string(),
            error_denom: report.error.denom().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(big(a), big(b))
    }

    /// Minimizes `|qθ − a|` over `q ≤ Q`, smallest `q` then smallest `a`.
    fn brute_force(theta: &BigRational, q_bound: u64) -> (BigInt, BigInt) {
        let mut best: Option<(BigRational, BigInt, BigInt)> = None;
        for q in 1..=q_bound {
            let qt = theta * big(q as i64);
            for a in [qt.floor().to_integer(), qt.ceil().to_integer()] {
                let d = (&qt - BigRational::from_integer(a.clone())).abs();
                // strict improvement only: ties keep the smaller q, then the smaller a
                let better = best.as_ref().is_none_or(|(bd, _, _)| d < *bd);
                if better {
                    best = Some((d, big(q as i64), a));
                }
            }
        }
        let (_, q, a) = best.unwrap();
        let g = a.gcd(&q);
        (a / &g, q / g)
    }

    #[test]
    fn sparse_values() {
        let t = SparseDyadic::new(vec![(1, 1)]).unwrap();
        assert_eq!(sparse_value(&t), ratio(1, 2));
        let t = SparseDyadic::new(vec![(3, 2), (1, 3)]).unwrap();
        assert_eq!(sparse_value(&t), ratio(7, 8));
        let t = SparseDyadic::new(vec![(-1, 1)]).unwrap();
        assert_eq!(sparse_value(&t), ratio(1, 2));
        assert_eq!(t.residue(), (1, 1));
        let t = SparseDyadic::new(vec![(-3, 2), (5, 7)]).unwrap();
        assert_eq!(t.residue(), ((128 - 96 + 5) as u128, 7));
        assert_eq!(t.describe(), "-3/2^2+5/2^7");
        assert_eq!(SparseDyadic::new(vec![(0, 2), (-5, 4)]).unwrap().describe(), "0/2^2-5/2^4");
        assert!(SparseDyadic::new(vec![(1, 3), (1, 3)]).is_err());
        assert!(SparseDyadic::new(vec![(1, 0)]).is_err());
    }

    #[test]
    fn approx_examples() {
        let r = best_rational_approx(&ratio(1, 3), 10).unwrap();
        assert_eq!((r.a.clone(), r.q.clone()), (big(1), big(3)));
        assert!(r.err.is_zero());

        let theta = ratio(7, 8);
        let r = best_rational_approx(&theta, 4).unwrap();
        assert!(r.q <= big(4));
        assert!(r.err <= BigRational::new(big(1), &r.q * big(5)));
        assert_eq!((r.a, r.q), brute_force(&theta, 4));

        let r = best_rational_approx(&ratio(1, 2), 1).unwrap();
        assert_eq!((r.a, r.q), (big(0), big(1)));
        assert!(best_rational_approx(&ratio(1, 2), 0).is_err());
    }

    #[test]
    fn approx_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let den = rng.gen_range(1..10_000i64);
            let num = rng.gen_range(-20_000..20_000i64);
            let theta = ratio(num, den);
            let r = best_rational_approx(&theta, 50).unwrap();
            assert_eq!((r.a.clone(), r.q.clone()), brute_force(&theta, 50), "θ = {theta}");
            assert!(r.satisfies_dirichlet(50));
        }
    }

    #[test]
    fn lemma_single_term() {
        let t = SparseDyadic::new(vec![(1, 3)]).unwrap();
        let rep = dio_lemma(&t, 4, 40).unwrap();
        assert_eq!(rep.j, 1);
        assert_eq!(rep.gap, 37);
        assert_eq!(rep.q_prime(), big(8));
        assert_eq!(rep.a_prime, big(1));
        assert!(rep.error.is_zero());
        // q' = 8 > Q: nothing with q ≤ 4 is within Q/2^n
        assert_eq!(rep.approx_matches, None);
        let rep = dio_lemma(&t, 8, 40).unwrap();
        assert_eq!(rep.approx_matches, Some(true));
        assert_eq!((rep.approx.a, rep.approx.q), (big(1), big(8)));
    }

    #[test]
    fn lemma_two_terms() {
        let t = SparseDyadic::new(vec![(3, 5), (5, 40)]).unwrap();
        let rep = dio_lemma(&t, 5, 60).unwrap();
        assert_eq!(rep.j, 1);
        assert_eq!(rep.q_prime(), big(32));
        assert_eq!(rep.a_prime, big(3));
        assert_eq!(rep.error, BigRational::new(big(5), pow2(40)));
        assert!(rep.bound_holds);
        let row = DioLemmaRow::new(&t, &rep);
        assert_eq!(row.q_prime, "32");
        assert_eq!(row.error_numer, "5");
        assert_eq!(row.error_denom, pow2(40).to_string());
    }

    #[test]
    fn lemma_preconditions() {
        let t = SparseDyadic::new(vec![(3, 5), (5, 40)]).unwrap();
        assert!(matches!(dio_lemma(&t, 5, 20), Err(Error::Precondition(_))));
        assert!(matches!(dio_lemma(&t, 4, 60), Err(Error::Precondition(_))));
        assert!(matches!(dio_lemma(&t, 500, 60), Err(Error::Precondition(_))));
        assert!(dio_hypothesis(2, 5, 60));
        assert!(!dio_hypothesis(2, 5, 26));
        // n = 16, k = 2: 2^4 > 4Q² only for Q = 1
        assert!(dio_hypothesis(2, 1, 16));
        assert!(!dio_hypothesis(2, 2, 16));
    }

    #[test]
    fn lemma_gap_tie_goes_to_smallest_j() {
        // gaps 10, 10, 10
        let t = SparseDyadic::new(vec![(1, 10), (1, 20)]).unwrap();
        let rep = dio_lemma(&t, 1, 30).unwrap();
        assert_eq!(rep.j, 0);
        assert_eq!(rep.q_prime(), big(1));
        assert_eq!(rep.a_prime, big(0));
    }

    proptest! {
        #[test]
        fn dirichlet_bound_always_holds(num in -1_000_000i64..1_000_000, den in 1i64..1_000_000, q in 1u64..500) {
            let r = best_rational_approx(&ratio(num, den), q).unwrap();
            prop_assert!(r.q <= big(q as i64));
            prop_assert!(r.satisfies_dirichlet(q));
        }
    }
}
