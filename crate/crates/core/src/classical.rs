//! Classical bounded fan-in circuits: their GF(2) normal forms, the degree bound that
//! depth imposes, and the randomised parity circuit for Or.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Wires are numbered inputs first, then gate outputs in layer order.
pub type Wire = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassicalGate {
    Not(Wire),
    And(Wire, Wire),
    Or(Wire, Wire),
    Parity(Vec<Wire>),
    /// One wire in, `copies` identical wires out.
    Fanout { source: Wire, copies: usize },
}

impl ClassicalGate {
    pub fn inputs(&self) -> Vec<Wire> {
        match self {
            ClassicalGate::Not(a) => vec![*a],
            ClassicalGate::And(a, b) | ClassicalGate::Or(a, b) => vec![*a, *b],
            ClassicalGate::Parity(ws) => ws.clone(),
            ClassicalGate::Fanout { source, .. } => vec![*source],
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            ClassicalGate::Fanout { copies, .. } => *copies,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassicalError {
    #[error("{0} variables exceed the normal-form limit of {MAX_VARIABLES}")]
    TooManyVariables(usize),
    #[error("layer {layer}: wire {wire} is not available")]
    UnknownWire { layer: usize, wire: Wire },
    #[error("layer {layer}: wire {wire} read twice")]
    Overlap { layer: usize, wire: Wire },
}

pub const MAX_VARIABLES: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalCircuit {
    pub inputs: usize,
    pub layers: Vec<Vec<ClassicalGate>>,
    pub output: Wire,
}

impl ClassicalCircuit {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn size(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn wire_count(&self) -> usize {
        self.inputs + self.layers.iter().flatten().map(ClassicalGate::outputs).sum::<usize>()
    }

    /// Gates read only wires produced by earlier layers, and no wire twice in a layer.
    pub fn validate(&self) -> Result<(), ClassicalError> {
        let mut available = self.inputs;
        for (layer, gates) in self.layers.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for wire in gates.iter().flat_map(ClassicalGate::inputs) {
                if wire >= available {
                    return Err(ClassicalError::UnknownWire { layer, wire });
                }
                if !seen.insert(wire) {
                    return Err(ClassicalError::Overlap { layer, wire });
                }
            }
            available += gates.iter().map(ClassicalGate::outputs).sum::<usize>();
        }
        if self.output >= available {
            return Err(ClassicalError::UnknownWire { layer: self.layers.len(), wire: self.output });
        }
        Ok(())
    }

    /// Values of every wire on input `x` (bit `i` is input `i`).
    pub fn evaluate_wires(&self, x: u64) -> Vec<bool> {
        let mut w: Vec<bool> = (0..self.inputs).map(|i| (x >> i) & 1 == 1).collect();
        for gates in &self.layers {
            let mut out = vec![];
            for g in gates {
                match g {
                    ClassicalGate::Not(a) => out.push(!w[*a]),
                    ClassicalGate::And(a, b) => out.push(w[*a] & w[*b]),
                    ClassicalGate::Or(a, b) => out.push(w[*a] | w[*b]),
                    ClassicalGate::Parity(ws) => out.push(ws.iter().fold(false, |acc, &i| acc ^ w[i])),
                    ClassicalGate::Fanout { source, copies } => out.extend(std::iter::repeat_n(w[*source], *copies)),
                }
            }
            w.extend(out);
        }
        w
    }

    pub fn evaluate(&self, x: u64) -> bool {
        self.evaluate_wires(x)[self.output]
    }

    /// Normal form of every wire.
    pub fn anf_wires(&self) -> Result<Vec<Gf2Polynomial>, ClassicalError> {
        if self.inputs > MAX_VARIABLES {
            return Err(ClassicalError::TooManyVariables(self.inputs));
        }
        self.validate()?;
        let mut w: Vec<Gf2Polynomial> = (0..self.inputs).map(Gf2Polynomial::variable).collect();
        for gates in &self.layers {
            let mut out = vec![];
            for g in gates {
                match g {
                    ClassicalGate::Not(a) => out.push(w[*a].add(&Gf2Polynomial::one())),
                    ClassicalGate::And(a, b) => out.push(w[*a].mul(&w[*b])),
                    ClassicalGate::Or(a, b) => out.push(w[*a].add(&w[*b]).add(&w[*a].mul(&w[*b]))),
                    ClassicalGate::Parity(ws) => out.push(ws.iter().fold(Gf2Polynomial::zero(), |acc, &i| acc.add(&w[i]))),
                    ClassicalGate::Fanout { source, copies } => out.extend(std::iter::repeat_n(w[*source].clone(), *copies)),
                }
            }
            w.extend(out);
        }
        Ok(w)
    }

    pub fn anf(&self, wire: Wire) -> Result<Gf2Polynomial, ClassicalError> {
        Ok(self.anf_wires()?.swap_remove(wire))
    }
}

/// Multilinear polynomial over GF(2); each monomial is a bit mask of its variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gf2Polynomial {
    monomials: BTreeSet<u32>,
}

impl Gf2Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_monomials([0])
    }

    pub fn variable(i: usize) -> Self {
        Self::from_monomials([1 << i])
    }

    /// Repeated monomials cancel in pairs.
    pub fn from_monomials(ms: impl IntoIterator<Item = u32>) -> Self {
        let mut p = Self::zero();
        for m in ms {
            p.toggle(m);
        }
        p
    }

    fn toggle(&mut self, m: u32) {
        if !self.monomials.remove(&m) {
            self.monomials.insert(m);
        }
    }

    pub fn monomials(&self) -> impl Iterator<Item = u32> + '_ {
        self.monomials.iter().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Degree of the zero polynomial is 0.
    pub fn degree(&self) -> u32 {
        self.monomials.iter().map(|m| m.count_ones()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { monomials: self.monomials.symmetric_difference(&other.monomials).copied().collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for a in &self.monomials {
            for b in &other.monomials {
                p.toggle(a | b);
            }
        }
        p
    }

    pub fn evaluate(&self, x: u64) -> bool {
        self.monomials.iter().filter(|&&m| m as u64 & !x == 0).count() % 2 == 1
    }
}

/// Whether the output's degree is at most `2^depth`.
pub fn degree_bound_check(c: &ClassicalCircuit) -> Result<bool, ClassicalError> {
    let d = c.anf(c.output)?.degree() as u64;
    Ok(c.depth() >= 64 || d <= 1u64 << c.depth())
}

/// Normal form computed from the truth table by the Möbius transform. Independent of
/// the gate structure.
pub fn anf_from_truth_table(n: usize, f: impl Fn(u64) -> bool) -> Gf2Polynomial {
    let mut t: Vec<bool> = (0..1u64 << n).map(&f).collect();
    for i in 0..n {
        for m in 0..t.len() {
            if m >> i & 1 == 1 {
                t[m] ^= t[m ^ (1 << i)];
            }
        }
    }
    Gf2Polynomial::from_monomials((0..t.len() as u32).filter(|&m| t[m as usize]))
}

/// Layered random circuit on `n` inputs with exactly `depth` layers. Each layer reads
/// at least one wire of the previous layer; the output is the last gate's first wire.
pub fn random_circuit<R: Rng>(n: usize, depth: usize, width: usize, rng: &mut R) -> ClassicalCircuit {
    assert!(n >= 2 && depth >= 1 && width >= 1);
    let mut layers = vec![];
    let (mut lo, mut hi) = (0, n);
    for _ in 0..depth {
        let mut pool: Vec<Wire> = (0..hi).collect();
        pool.shuffle(rng);
        // Put one wire of the newest layer first so that the depth is attained.
        let fresh = rng.gen_range(lo..hi);
        let at = pool.iter().position(|&w| w == fresh).unwrap();
        pool.swap(0, at);
        let mut gates = vec![];
        let mut it = pool.into_iter().peekable();
        while gates.len() < width {
            let Some(a) = it.next() else { break };
            let kind = rng.gen_range(0..5);
            let g = match (kind, it.peek().copied()) {
                (0, _) | (_, None) => ClassicalGate::Not(a),
                (1, Some(b)) => {
                    it.next();
                    ClassicalGate::And(a, b)
                }
                (2, Some(b)) => {
                    it.next();
                    ClassicalGate::Or(a, b)
                }
                (3, Some(_)) => {
                    let k = rng.gen_range(1..=3);
                    let mut ws = vec![a];
                    ws.extend(it.by_ref().take(k));
                    ClassicalGate::Parity(ws)
                }
                _ => ClassicalGate::Fanout { source: a, copies: rng.gen_range(2..=3) },
            };
            gates.push(g);
        }
        lo = hi;
        hi += gates.iter().map(ClassicalGate::outputs).sum::<usize>();
        layers.push(gates);
    }
    let c = ClassicalCircuit { inputs: n, layers, output: lo };
    debug_assert!(c.validate().is_ok());
    c
}

/// Balanced And tree over `2^d` inputs: depth `d`, degree `2^d`.
pub fn and_tree(d: usize) -> ClassicalCircuit {
    let n = 1 << d;
    let mut layers = vec![];
    let (mut start, mut len) = (0, n);
    for _ in 0..d {
        layers.push((0..len / 2).map(|i| ClassicalGate::And(start + 2 * i, start + 2 * i + 1)).collect());
        start += len;
        len /= 2;
    }
    ClassicalCircuit { inputs: n, layers, output: start }
}

/// The randomised Or circuit for one choice of random strings (one per repetition):
/// fan-out of every input, one parity of the selected inputs per repetition, then an
/// Or tree over the repetitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomizedOr {
    pub circuit: ClassicalCircuit,
    pub strings: Vec<u64>,
}

/// Builds the circuit hard-wired to the given random strings.
pub fn randomized_or_circuit(n: usize, strings: &[u64]) -> RandomizedOr {
    let r = strings.len();
    assert!(n >= 1 && r >= 1);
    let fan = (0..n).map(|i| ClassicalGate::Fanout { source: i, copies: r }).collect();
    let copy = |i: usize, rep: usize| n + i * r + rep;
    let parities: Vec<ClassicalGate> =
        strings.iter().enumerate().map(|(rep, s)| ClassicalGate::Parity((0..n).filter(|i| s >> i & 1 == 1).map(|i| copy(i, rep)).collect())).collect();
    let mut layers = vec![fan, parities];
    let mut level: Vec<Wire> = (n + n * r..n + n * r + r).collect();
    let mut next = n + n * r + r;
    while level.len() > 1 {
        let mut gates = vec![];
        let mut out = vec![];
        for pair in level.chunks(2) {
            gates.push(match pair {
                [a, b] => ClassicalGate::Or(*a, *b),
                // An odd wire passes through a one-input parity.
                _ => ClassicalGate::Parity(pair.to_vec()),
            });
            out.push(next);
            next += 1;
        }
        layers.push(gates);
        level = out;
    }
    RandomizedOr { circuit: ClassicalCircuit { inputs: n, layers, output: level[0] }, strings: strings.to_vec() }
}

/// Samples `r` random strings and builds the circuit.
pub fn randomized_or<R: Rng>(n: usize, r: usize, rng: &mut R) -> RandomizedOr {
    let mask = if n == 64 { u64::MAX } else { (1 << n) - 1 };
    let strings: Vec<u64> = (0..r).map(|_| rng.gen::<u64>() & mask).collect();
    randomized_or_circuit(n, &strings)
}

/// Number of strings `s ∈ {0,1}^n` whose repetition misses a nonzero `x`, i.e. with
/// `⟨x, s⟩ = 0`. Counted exhaustively.
pub fn repetition_misses(n: usize, x: u64) -> u64 {
    (0..1u64 << n).filter(|s| (x & s).count_ones().is_multiple_of(2)).count() as u64
}

/// Exact failure of `r` independent repetitions on `x`, as (misses^r, 2^{n·r}).
pub fn amplified_failure(n: usize, r: usize, x: u64) -> (u128, u128) {
    assert!(n * r < 128);
    ((repetition_misses(n, x) as u128).pow(r as u32), 1u128 << (n * r))
}

/// Failing string tuples counted by building and evaluating every circuit. Only for `n·r ≤ 20`.
pub fn amplified_failure_by_circuits(n: usize, r: usize, x: u64) -> u64 {
    assert!(n * r <= 20);
    let mask = (1u64 << n) - 1;
    (0..1u64 << (n * r))
        .filter(|code| {
            let strings: Vec<u64> = (0..r).map(|k| (code >> (k * n)) & mask).collect();
            !randomized_or_circuit(n, &strings).circuit.evaluate(x)
        })
        .count() as u64
}

pub fn ceil_log2(n: usize) -> usize {
    (usize::BITS - n.max(1).saturating_sub(1).leading_zeros()) as usize
}

/// Repetitions for failure at most `1/n`.
pub fn repetitions_for(n: usize) -> usize {
    ceil_log2(n).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn input_wire_is_linear() {
        let c = ClassicalCircuit { inputs: 3, layers: vec![], output: 1 };
        let p = c.anf(1).unwrap();
        assert_eq!(p, Gf2Polynomial::variable(1));
        assert_eq!(p.degree(), 1);
    }

    #[test]
    fn and_tree_is_one_monomial_with_tight_degree() {
        let c = and_tree(2);
        assert_eq!(c.anf(c.output).unwrap(), Gf2Polynomial::from_monomials([0b1111]));
        for d in 1..=4 {
            let c = and_tree(d);
            assert_eq!(c.anf(c.output).unwrap().degree(), 1 << d);
            assert!(degree_bound_check(&c).unwrap());
        }
    }

    #[test]
    fn and_chain_degree_grows_by_one() {
        for d in 1..6 {
            let layers = (0..d).map(|k| vec![ClassicalGate::And(if k == 0 { 0 } else { d + k }, k + 1)]).collect();
            let c = ClassicalCircuit { inputs: d + 1, layers, output: 2 * d };
            assert!(c.validate().is_ok());
            assert_eq!(c.anf(c.output).unwrap().degree() as usize, d + 1);
            assert!(degree_bound_check(&c).unwrap());
        }
    }

    #[test]
    fn random_circuits_agree_with_truth_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 5, 8] {
            for depth in 1..=3 {
                let c = random_circuit(n, depth, n, &mut rng);
                assert_eq!(c.depth(), depth);
                let p = c.anf(c.output).unwrap();
                assert_eq!(p, anf_from_truth_table(n, |x| c.evaluate(x)));
                assert!((0..1 << n).all(|x| p.evaluate(x) == c.evaluate(x)));
            }
        }
    }

    #[test]
    fn bad_wiring_is_rejected() {
        let c = ClassicalCircuit { inputs: 2, layers: vec![vec![ClassicalGate::And(0, 0)]], output: 2 };
        assert_eq!(c.validate(), Err(ClassicalError::Overlap { layer: 0, wire: 0 }));
        let c = ClassicalCircuit { inputs: 2, layers: vec![vec![ClassicalGate::Not(2)]], output: 2 };
        assert!(matches!(c.validate(), Err(ClassicalError::UnknownWire { .. })));
        let c = ClassicalCircuit { inputs: 21, layers: vec![], output: 0 };
        assert_eq!(c.anf(0), Err(ClassicalError::TooManyVariables(21)));
    }

    #[test]
    fn randomized_or_is_one_sided() {
        for r in 1..=5 {
            let strings: Vec<u64> = (0..r as u64).map(|k| (k * 5 + 3) & 0xf).collect();
            let c = randomized_or_circuit(4, &strings).circuit;
            assert!(c.validate().is_ok());
            assert_eq!(c.depth(), 2 + ceil_log2(r));
            assert!(!c.evaluate(0));
            for x in 1..16u64 {
                let hit = strings.iter().any(|s| (s & x).count_ones() % 2 == 1);
                assert_eq!(c.evaluate(x), hit);
            }
        }
    }

    #[test]
    fn failure_is_exactly_half_per_repetition() {
        for n in 1..=8 {
            for x in 1..1u64 << n {
                assert_eq!(2 * repetition_misses(n, x), 1 << n);
            }
        }
        assert_eq!(amplified_failure_by_circuits(3, 3, 5), 1 << 6);
        assert_eq!(amplified_failure(3, 3, 5), (64, 512));
    }

    #[test]
    fn or_has_full_degree_and_threshold_follows_lucas() {
        // A size-d monomial of threshold t has coefficient C(d−1, t−1) mod 2, odd iff
        // the bits of t−1 are a subset of those of d−1.
        let lucas = |n: usize, t: usize| (t..=n).rev().find(|&d| (t - 1) & !(d - 1) == 0).unwrap() as u32;
        for n in 1..=12 {
            assert_eq!(anf_from_truth_table(n, |x| x != 0).degree(), n as u32);
            for t in 1..=n {
                assert_eq!(anf_from_truth_table(n, |x| x.count_ones() as usize >= t).degree(), lucas(n, t), "n={n} t={t}");
            }
        }
    }
}
