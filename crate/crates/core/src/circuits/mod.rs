//! Unbounded fan-in AND/OR/NOT circuits over the binary digits of `x`.

mod analysis;
mod generate;
mod netlist;

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::{Error, Result};

pub use analysis::{
    lmn_check, mobius_correlation, CorrelationReport, CorrelationRow, ExponentTerms, LmnReport, LmnRow,
    MAX_CHAIN_BITS, MAX_LMN_BITS,
};
pub use generate::{dnf_corpus, generate, Family};
pub use netlist::parse_circuit;

/// Largest `n` for a full truth table.
pub const MAX_TABLE_BITS: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Gate {
    /// Digit `x_i`, 1-based.
    Input(u32),
    And(Vec<usize>),
    Or(Vec<usize>),
    Not(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub id: String,
    pub gate: Gate,
}

/// A validated circuit whose nodes are stored in topological order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Circuit {
    name: String,
    n: u32,
    nodes: Vec<Node>,
    output: usize,
}

/// Gate counts and depths, raw and after pushing negations to the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub size: usize,
    pub depth: u32,
    pub nnf_size: usize,
    pub nnf_depth: u32,
}

impl Circuit {
    /// Checks fan-in, digit range and that every edge points backwards.
    pub fn new(n: u32, nodes: Vec<Node>, output: usize) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::Domain(format!("input count {n} outside 1..=63")));
        }
        if output >= nodes.len() {
            return Err(Error::IndexOutOfRange { index: output, max: nodes.len() });
        }
        for (pos, node) in nodes.iter().enumerate() {
            let check = |c: usize| {
                if c >= pos {
                    Err(Error::Invariant(format!("{} uses a later node", node.id)))
                } else {
                    Ok(())
                }
            };
            match &node.gate {
                Gate::Input(i) => {
                    if *i == 0 || *i > n {
                        return Err(Error::IndexOutOfRange { index: *i as usize, max: n as usize });
                    }
                }
                Gate::And(cs) | Gate::Or(cs) => {
                    if cs.is_empty() {
                        return Err(Error::Invariant(format!("{} has fan-in 0", node.id)));
                    }
                    cs.iter().try_for_each(|&c| check(c))?;
                }
                Gate::Not(c) => check(*c)?,
            }
        }
        Ok(Circuit { name: "netlist".into(), n, nodes, output })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The same circuit read as a function of `n ≥ self.n()` digits.
    pub fn widen(mut self, n: u32) -> Result<Self> {
        if n < self.max_digit() {
            return Err(Error::IndexOutOfRange { index: self.max_digit() as usize, max: n as usize });
        }
        if n > 63 {
            return Err(Error::Domain(format!("input count {n} > 63")));
        }
        self.n = n;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn output(&self) -> usize {
        self.output
    }

    fn max_digit(&self) -> u32 {
        self.nodes
            .iter()
            .filter_map(|nd| match nd.gate {
                Gate::Input(i) => Some(i),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Ids of nodes the output does not depend on.
    pub fn unreachable_nodes(&self) -> Vec<&str> {
        let mut seen = vec![false; self.nodes.len()];
        seen[self.output] = true;
        for pos in (0..self.nodes.len()).rev() {
            if !seen[pos] {
                continue;
            }
            match &self.nodes[pos].gate {
                Gate::And(cs) | Gate::Or(cs) => cs.iter().for_each(|&c| seen[c] = true),
                Gate::Not(c) => seen[*c] = true,
                Gate::Input(_) => {}
            }
        }
        self.nodes
            .iter()
            .zip(&seen)
            .filter(|(_, &s)| !s)
            .map(|(nd, _)| nd.id.as_str())
            .collect()
    }

    /// `F(x) ∈ {−1, +1}` with `true ↦ +1`.
    pub fn eval(&self, x: u64) -> i8 {
        let mut val = vec![false; self.nodes.len()];
        for (pos, node) in self.nodes.iter().enumerate() {
            val[pos] = match &node.gate {
                Gate::Input(i) => x >> (i - 1) & 1 == 1,
                Gate::And(cs) => cs.iter().all(|&c| val[c]),
                Gate::Or(cs) => cs.iter().any(|&c| val[c]),
                Gate::Not(c) => !val[*c],
            };
        }
        if val[self.output] { 1 } else { -1 }
    }

    /// Evaluates 64 consecutive inputs `base, …, base + 63` at once.
    fn eval_word(&self, base: u64, scratch: &mut [u64]) -> u64 {
        const PATTERNS: [u64; 6] = [
            0xAAAA_AAAA_AAAA_AAAA,
            0xCCCC_CCCC_CCCC_CCCC,
            0xF0F0_F0F0_F0F0_F0F0,
            0xFF00_FF00_FF00_FF00,
            0xFFFF_0000_FFFF_0000,
            0xFFFF_FFFF_0000_0000,
        ];
        for (pos, node) in self.nodes.iter().enumerate() {
            scratch[pos] = match &node.gate {
                Gate::Input(i) => {
                    let b = i - 1;
                    if b < 6 {
                        PATTERNS[b as usize]
                    } else if base >> b & 1 == 1 {
                        !0
                    } else {
                        0
                    }
                }
                Gate::And(cs) => cs.iter().fold(!0, |acc, &c| acc & scratch[c]),
                Gate::Or(cs) => cs.iter().fold(0, |acc, &c| acc | scratch[c]),
                Gate::Not(c) => !scratch[*c],
            };
        }
        scratch[self.output]
    }

    /// `F(x)` for every `0 ≤ x < 2^n`, 64 inputs per bitwise pass.
    pub fn truth_table(&self) -> Result<Vec<i8>> {
        if self.n > MAX_TABLE_BITS {
            return Err(Error::Capacity(format!("truth table for n = {} > {MAX_TABLE_BITS}", self.n)));
        }
        let len = 1usize << self.n;
        let mut table = vec![0i8; len];
        const CHUNK: usize = 64 * 64;
        table.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            let mut scratch = vec![0u64; self.nodes.len()];
            for (wi, block) in chunk.chunks_mut(64).enumerate() {
                let base = (ci * CHUNK + wi * 64) as u64;
                let word = self.eval_word(base, &mut scratch);
                for (j, out) in block.iter_mut().enumerate() {
                    *out = if word >> j & 1 == 1 { 1 } else { -1 };
                }
            }
        });
        Ok(table)
    }

    pub fn metrics(&self) -> Metrics {
        let mut depth = vec![0u32; self.nodes.len()];
        for (pos, node) in self.nodes.iter().enumerate() {
            depth[pos] = match &node.gate {
                Gate::Input(_) => 0,
                Gate::And(cs) | Gate::Or(cs) => 1 + cs.iter().map(|&c| depth[c]).max().unwrap_or(0),
                Gate::Not(c) => 1 + depth[*c],
            };
        }
        let size = self.nodes.iter().filter(|nd| !matches!(nd.gate, Gate::Input(_))).count();

        // Negation normal form: a NOT flips the polarity of its subtree;
        // AND/OR under negative polarity become OR/AND.
        let mut nnf_depth = vec![[0u32; 2]; self.nodes.len()];
        for (pos, node) in self.nodes.iter().enumerate() {
            for pol in 0..2 {
                nnf_depth[pos][pol] = match &node.gate {
                    Gate::Input(_) => 0,
                    Gate::And(cs) | Gate::Or(cs) => 1 + cs.iter().map(|&c| nnf_depth[c][pol]).max().unwrap_or(0),
                    Gate::Not(c) => nnf_depth[*c][1 - pol],
                };
            }
        }
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut stack = vec![(self.output, 0usize)];
        let mut nnf_size = 0;
        while let Some((pos, pol)) = stack.pop() {
            if !seen.insert((pos, pol)) {
                continue;
            }
            match &self.nodes[pos].gate {
                Gate::Input(_) => {}
                Gate::And(cs) | Gate::Or(cs) => {
                    nnf_size += 1;
                    stack.extend(cs.iter().map(|&c| (c, pol)));
                }
                Gate::Not(c) => stack.push((*c, 1 - pol)),
            }
        }
        Metrics {
            size,
            depth: depth[self.output],
            nnf_size,
            nnf_depth: nnf_depth[self.output][0],
        }
    }

    /// Netlist text that parses back to this circuit.
    pub fn to_netlist(&self) -> String {
        let mut out = format!("INPUTS {}\n", self.n);
        for node in &self.nodes {
            let ids = |cs: &[usize]| cs.iter().map(|&c| self.nodes[c].id.as_str()).collect::<Vec<_>>().join(" ");
            let rhs = match &node.gate {
                Gate::Input(i) => format!("INPUT {i}"),
                Gate::And(cs) => format!("AND {}", ids(cs)),
                Gate::Or(cs) => format!("OR {}", ids(cs)),
                Gate::Not(c) => format!("NOT {}", self.nodes[*c].id),
            };
            out.push_str(&format!("{} = {}\n", node.id, rhs));
        }
        out.push_str(&format!("OUTPUT {}\n", self.nodes[self.output].id));
        out
    }
}

/// Depth at most `d` and size at most `n^d`, both after negation normal form.
pub fn classify_ac0(c: &Circuit, d: u32) -> bool {
    let m = c.metrics();
    let cap = (c.n as u128).checked_pow(d).unwrap_or(u128::MAX);
    m.nnf_depth <= d && (m.nnf_size as u128) <= cap
}

/// Incremental construction with automatic ids and shared inputs.
#[derive(Debug, Clone)]
pub struct Builder {
    n: u32,
    nodes: Vec<Node>,
    inputs: HashMap<u32, usize>,
    negations: HashMap<usize, usize>,
}

impl Builder {
    pub fn new(n: u32) -> Self {
        Builder { n, nodes: Vec::new(), inputs: HashMap::new(), negations: HashMap::new() }
    }

    fn push(&mut self, gate: Gate) -> usize {
        let id = match gate {
            Gate::Input(i) => format!("x{i}"),
            _ => format!("g{}", self.nodes.len()),
        };
        self.nodes.push(Node { id, gate });
        self.nodes.len() - 1
    }

    pub fn input(&mut self, i: u32) -> usize {
        if let Some(&p) = self.inputs.get(&i) {
            return p;
        }
        let p = self.push(Gate::Input(i));
        self.inputs.insert(i, p);
        p
    }

    /// Negation of node `c`, shared between callers.
    pub fn not(&mut self, c: usize) -> usize {
        if let Some(&p) = self.negations.get(&c) {
            return p;
        }
        let p = self.push(Gate::Not(c));
        self.negations.insert(c, p);
        p
    }

    /// Digit `i` if `positive`, else its negation.
    pub fn literal(&mut self, i: u32, positive: bool) -> usize {
        let x = self.input(i);
        if positive { x } else { self.not(x) }
    }

    pub fn and(&mut self, cs: Vec<usize>) -> usize {
        self.push(Gate::And(cs))
    }

    pub fn or(&mut self, cs: Vec<usize>) -> usize {
        self.push(Gate::Or(cs))
    }

    pub fn finish(self, output: usize) -> Result<Circuit> {
        Circuit::new(self.n, self.nodes, output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn and12() -> Circuit {
        parse_circuit("a = INPUT 1\nb = INPUT 2\ng = AND a b\nOUTPUT g").unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let c = and12();
        assert_eq!(c.eval(3), 1);
        assert_eq!(c.eval(1), -1);
        let not1 = parse_circuit("x = INPUT 1\ny = NOT x\nOUTPUT y").unwrap();
        assert_eq!(not1.eval(0), 1);
        assert_eq!(not1.eval(1), -1);
    }

    #[test]
    fn constant_tables() {
        for n in [1, 4, 9] {
            let t = generate(Family::Constant(true), n).unwrap();
            assert!(t.truth_table().unwrap().iter().all(|&v| v == 1));
            let f = generate(Family::Constant(false), n).unwrap();
            assert!(f.truth_table().unwrap().iter().all(|&v| v == -1));
        }
    }

    #[test]
    fn parity_of_two_digits_is_balanced() {
        let c = parse_circuit(
            "a = INPUT 1\nb = INPUT 2\nna = NOT a\nnb = NOT b\n\
             p = AND a nb\nq = AND na b\nout = OR p q\nOUTPUT out",
        )
        .unwrap()
        .widen(6)
        .unwrap();
        let t = c.truth_table().unwrap();
        assert_eq!(t.iter().map(|&v| v as i64).sum::<i64>(), 0);
        let m = c.metrics();
        assert_eq!((m.nnf_depth, m.nnf_size), (2, 3));
        assert_eq!((m.depth, m.size), (3, 5));
    }

    fn random_circuit(n: u32, rng: &mut ChaCha8Rng) -> Circuit {
        let mut b = Builder::new(n);
        let mut pool: Vec<usize> = (1..=n).map(|i| b.input(i)).collect();
        for _ in 0..rng.gen_range(5..40) {
            let kind = rng.gen_range(0..3);
            let pick = |rng: &mut ChaCha8Rng, pool: &[usize]| pool[rng.gen_range(0..pool.len())];
            let node = match kind {
                0 => {
                    let c = pick(rng, &pool);
                    b.push(Gate::Not(c))
                }
                _ => {
                    let fan = rng.gen_range(1..5);
                    let cs = (0..fan).map(|_| pick(rng, &pool)).collect();
                    if kind == 1 { b.and(cs) } else { b.or(cs) }
                }
            };
            pool.push(node);
        }
        let out = *pool.last().unwrap();
        b.finish(out).unwrap()
    }

    #[test]
    fn word_parallel_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20 {
            let c = random_circuit(14, &mut rng);
            let table = c.truth_table().unwrap();
            for _ in 0..10_000 {
                let x = rng.gen_range(0..1u64 << 14);
                assert_eq!(table[x as usize], c.eval(x));
            }
        }
        for n in 1..8 {
            let c = random_circuit(n, &mut rng);
            let table = c.truth_table().unwrap();
            assert_eq!(table.len(), 1 << n);
            for x in 0..1u64 << n {
                assert_eq!(table[x as usize], c.eval(x));
            }
        }
    }

    #[test]
    fn classification() {
        let c = and12().widen(8).unwrap();
        assert!(classify_ac0(&c, 2));
        let deep = parse_circuit(
            "a = INPUT 1\nb = INPUT 2\nc = INPUT 3\nd = INPUT 4\n\
             g1 = AND a b\ng2 = OR g1 c\ng3 = AND g2 d\nOUTPUT g3",
        )
        .unwrap();
        assert_eq!(deep.metrics().nnf_depth, 3);
        assert!(!classify_ac0(&deep, 2));
        assert!(classify_ac0(&deep, 3));

        // n = 2, d = 2: four gates is exactly n^d
        let exact = "a = INPUT 1\nb = INPUT 2\nna = NOT a\nnb = NOT b\n\
                     p = AND a b\nq = AND a nb\nr = AND na b\n";
        let four = parse_circuit(&format!("{exact}o = OR p q r\nOUTPUT o")).unwrap();
        assert_eq!(four.metrics().nnf_size, 4);
        assert!(classify_ac0(&four, 2));
        let five = parse_circuit(&format!("{exact}s = AND na nb\no = OR p q r s\nOUTPUT o")).unwrap();
        assert_eq!(five.metrics().nnf_size, 5);
        assert!(!classify_ac0(&five, 2));
    }

    #[test]
    fn classification_monotone_in_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let c = random_circuit(6, &mut rng);
            for d in 0..12 {
                if classify_ac0(&c, d) {
                    assert!(classify_ac0(&c, d + 1));
                }
            }
        }
    }

    #[test]
    fn nnf_drops_negation_chains() {
        let c = parse_circuit("a = INPUT 1\nn1 = NOT a\nn2 = NOT n1\nn3 = NOT n2\nOUTPUT n3").unwrap();
        let m = c.metrics();
        assert_eq!((m.size, m.depth, m.nnf_size, m.nnf_depth), (3, 3, 0, 0));
        let dm = parse_circuit("a = INPUT 1\nb = INPUT 2\ng = AND a b\nh = NOT g\nk = OR h a\nOUTPUT k").unwrap();
        let m = dm.metrics();
        assert_eq!((m.nnf_depth, m.nnf_size), (2, 2));
    }

    #[test]
    fn netlist_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let c = random_circuit(7, &mut rng);
            let back = parse_circuit(&c.to_netlist()).unwrap();
            assert_eq!(back.truth_table().unwrap(), c.truth_table().unwrap());
            assert_eq!(back.metrics(), c.metrics());
        }
    }

    #[test]
    fn unreachable_nodes_reported() {
        let c = parse_circuit("a = INPUT 1\nb = INPUT 2\nunused = NOT b\nOUTPUT a").unwrap();
        assert_eq!(c.unreachable_nodes(), vec!["b", "unused"]);
    }

    #[test]
    fn capacity_and_validation() {
        let c = generate(Family::AndTree, 25).unwrap();
        assert!(matches!(c.truth_table(), Err(Error::Capacity(_))));
        let bad = vec![Node { id: "a".into(), gate: Gate::Input(5) }];
        assert!(matches!(Circuit::new(4, bad, 0), Err(Error::IndexOutOfRange { .. })));
        assert!(and12().widen(1).is_err());
    }
}
