//! Exact statevector simulation.
//!
//! Amplitudes are stored only on basis states with nonzero weight. Fan-out,
//! parity, oracles and controlled phases never grow that support, so circuits
//! with hundreds of copy qubits stay cheap as long as few qubits are in
//! superposition. The qubit budget bounds the support at `2^budget` entries,
//! which is the memory a dense vector over `budget` qubits would need.

use num_complex::Complex64 as C64;
use rand::Rng;
use rustc_hash::FxHashMap;
use std::collections::BTreeMap;

use crate::circuit::{Circuit, Gate, QubitId, Role};
use crate::unitary::Unitary2;

pub const KEY_WORDS: usize = 8;
/// Widest circuit the simulator accepts.
pub const MAX_QUBITS: usize = KEY_WORDS * 64;
pub const DEFAULT_QUBIT_BUDGET: usize = 26;
pub const TOL: f64 = 1e-9;
/// Amplitudes with squared norm below this are dropped.
const PRUNE: f64 = 1e-30;

pub type Key = [u64; KEY_WORDS];

#[inline]
fn get(k: &Key, q: usize) -> bool {
    (k[q >> 6] >> (q & 63)) & 1 == 1
}

#[inline]
fn flip(k: &mut Key, q: usize) {
    k[q >> 6] ^= 1 << (q & 63);
}

#[inline]
fn set(k: &mut Key, q: usize, b: bool) {
    if b {
        k[q >> 6] |= 1 << (q & 63);
    } else {
        k[q >> 6] &= !(1 << (q & 63));
    }
}

fn read_reg(k: &Key, reg: &[QubitId]) -> u64 {
    let mut v = 0u64;
    for (i, &q) in reg.iter().enumerate().take(64) {
        v |= (get(k, q) as u64) << i;
    }
    v
}

fn write_reg(k: &mut Key, reg: &[QubitId], v: u64) {
    for (i, &q) in reg.iter().enumerate() {
        set(k, q, (v >> i) & 1 == 1);
    }
}

fn weight(k: &Key, reg: &[QubitId]) -> usize {
    reg.iter().filter(|&&q| get(k, q)).count()
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("circuit needs {required} qubits, simulator handles at most {limit}")]
    TooManyQubits { required: usize, limit: usize },
    #[error("superposition needs at least {required} qubits of budget, budget is {budget}")]
    BudgetExceeded { required: usize, budget: usize },
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("state has {got} qubits, circuit has {want}")]
    WidthMismatch { got: usize, want: usize },
}

/// A computational basis state given as one bit per qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub bits: Vec<bool>,
}

impl BasisState {
    pub fn zeros(n: usize) -> Self {
        BasisState { bits: vec![false; n] }
    }

    /// Parses `0`/`1` characters, character `i` giving qubit `i`.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(|bits| BasisState { bits })
    }

    pub fn with_register(mut self, reg: &[QubitId], value: u64) -> Self {
        for (i, &q) in reg.iter().enumerate() {
            self.bits[q] = (value >> i) & 1 == 1;
        }
        self
    }

    pub fn register(&self, reg: &[QubitId]) -> u64 {
        reg.iter().enumerate().map(|(i, &q)| (self.bits[q] as u64) << i).sum()
    }

    fn key(&self) -> Key {
        let mut k = [0u64; KEY_WORDS];
        for (q, &b) in self.bits.iter().enumerate() {
            set(&mut k, q, b);
        }
        k
    }
}

impl std::fmt::Display for BasisState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// Product measurement bases available for mid-circuit measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Computational,
    /// `{|+⟩, |−⟩}`.
    Hadamard,
    /// `{(|0⟩ + i|1⟩)/√2, (|0⟩ − i|1⟩)/√2}`.
    PhasePiOver2,
}

impl Basis {
    /// Unitary whose columns are the basis vectors, outcome 0 first.
    pub fn change(&self) -> Unitary2 {
        match self {
            Basis::Computational => Unitary2::identity(),
            Basis::Hadamard => Unitary2::equator_basis(0.0),
            Basis::PhasePiOver2 => Unitary2::equator_basis(0.25),
        }
    }
}

/// Exact probabilities of register outcomes.
pub type OutcomeDistribution = BTreeMap<u64, f64>;

#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    keys: Vec<Key>,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(state: &BasisState) -> Result<Self, SimError> {
        let n = state.bits.len();
        if n > MAX_QUBITS {
            return Err(SimError::TooManyQubits { required: n, limit: MAX_QUBITS });
        }
        Ok(StateVector { n, keys: vec![state.key()], amps: vec![C64::new(1.0, 0.0)] })
    }

    pub fn zeros(n: usize) -> Result<Self, SimError> {
        Self::basis(&BasisState::zeros(n))
    }

    /// Builds a state from explicit (basis, amplitude) pairs.
    pub fn from_terms(n: usize, terms: &[(BasisState, C64)]) -> Self {
        let mut map: BTreeMap<Vec<bool>, C64> = BTreeMap::new();
        for (b, a) in terms {
            *map.entry(b.bits.clone()).or_default() += a;
        }
        let mut s = StateVector { n, keys: vec![], amps: vec![] };
        for (bits, a) in map {
            if a.norm_sqr() > PRUNE {
                s.keys.push(BasisState { bits }.key());
                s.amps.push(a);
            }
        }
        s
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    /// Number of basis states carrying amplitude.
    pub fn support(&self) -> usize {
        self.keys.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn amplitude(&self, b: &BasisState) -> C64 {
        let k = b.key();
        self.keys.iter().position(|x| *x == k).map(|i| self.amps[i]).unwrap_or_default()
    }

    /// Iterates over (basis state, amplitude).
    pub fn terms(&self) -> impl Iterator<Item = (BasisState, C64)> + '_ {
        self.keys.iter().zip(&self.amps).map(move |(k, a)| (BasisState { bits: (0..self.n).map(|q| get(k, q)).collect() }, *a))
    }

    /// Dense amplitudes, qubit 0 least significant. Only for small widths.
    pub fn to_dense(&self) -> Vec<C64> {
        assert!(self.n <= DEFAULT_QUBIT_BUDGET, "dense export limited to {DEFAULT_QUBIT_BUDGET} qubits");
        let mut v = vec![C64::default(); 1 << self.n];
        for (k, a) in self.keys.iter().zip(&self.amps) {
            v[k[0] as usize] += a;
        }
        v
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        let idx: FxHashMap<&Key, usize> = other.keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut s = C64::default();
        for (k, a) in self.keys.iter().zip(&self.amps) {
            if let Some(&j) = idx.get(k) {
                s += a.conj() * other.amps[j];
            }
        }
        s
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn marginal_probability(&self, qubit: QubitId, outcome: bool) -> f64 {
        self.keys.iter().zip(&self.amps).filter(|(k, _)| get(k, qubit) == outcome).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Distribution of the value held in `reg` (little-endian).
    pub fn register_distribution(&self, reg: &[QubitId]) -> OutcomeDistribution {
        let mut d = OutcomeDistribution::new();
        for (k, a) in self.keys.iter().zip(&self.amps) {
            *d.entry(read_reg(k, reg)).or_default() += a.norm_sqr();
        }
        d
    }

    /// Probability that every listed qubit reads 0.
    pub fn zero_probability(&self, qubits: &[QubitId]) -> f64 {
        self.keys.iter().zip(&self.amps).filter(|(k, _)| qubits.iter().all(|&q| !get(k, q))).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// `⟨ψ|ρ_reg|ψ⟩` for a pure target `ψ` on `reg`, given densely.
    pub fn register_fidelity(&self, reg: &[QubitId], target: &[C64]) -> f64 {
        assert_eq!(target.len(), 1 << reg.len());
        let mut groups: FxHashMap<Key, C64> = FxHashMap::default();
        for (k, a) in self.keys.iter().zip(&self.amps) {
            let v = read_reg(k, reg) as usize;
            let mut rest = *k;
            write_reg(&mut rest, reg, 0);
            *groups.entry(rest).or_default() += target[v].conj() * a;
        }
        groups.values().map(|c| c.norm_sqr()).sum()
    }

    /// The (unnormalised) component with `reg` holding `value`.
    pub fn project(&self, reg: &[QubitId], value: u64) -> StateVector {
        let mut s = StateVector { n: self.n, keys: vec![], amps: vec![] };
        for (k, a) in self.keys.iter().zip(&self.amps) {
            if read_reg(k, reg) == value {
                s.keys.push(*k);
                s.amps.push(*a);
            }
        }
        s
    }

    /// `(⟨ψ|_reg ⊗ I)|self⟩`, left with `reg` set to 0.
    pub fn contract(&self, reg: &[QubitId], target: &[C64]) -> StateVector {
        assert_eq!(target.len(), 1 << reg.len());
        let mut groups: FxHashMap<Key, C64> = FxHashMap::default();
        for (k, a) in self.keys.iter().zip(&self.amps) {
            let v = read_reg(k, reg) as usize;
            let mut rest = *k;
            write_reg(&mut rest, reg, 0);
            *groups.entry(rest).or_default() += target[v].conj() * a;
        }
        let mut s = StateVector { n: self.n, keys: groups.keys().copied().collect(), amps: groups.values().copied().collect() };
        s.prune();
        s
    }

    /// Slices of the state along `reg`: one list of (register value, amplitude) per
    /// basis value of the remaining qubits.
    pub fn slices(&self, reg: &[QubitId]) -> Vec<Vec<(u64, C64)>> {
        let mut groups: FxHashMap<Key, Vec<(u64, C64)>> = FxHashMap::default();
        for (k, a) in self.keys.iter().zip(&self.amps) {
            let mut rest = *k;
            write_reg(&mut rest, reg, 0);
            groups.entry(rest).or_default().push((read_reg(k, reg), *a));
        }
        groups.into_values().collect()
    }

    /// Reduced density matrix of `reg`, indexed by register value.
    pub fn reduced_density(&self, reg: &[QubitId]) -> nalgebra::DMatrix<C64> {
        let dim = 1usize << reg.len();
        let mut groups: FxHashMap<Key, Vec<(usize, C64)>> = FxHashMap::default();
        for (k, a) in self.keys.iter().zip(&self.amps) {
            let v = read_reg(k, reg) as usize;
            let mut rest = *k;
            write_reg(&mut rest, reg, 0);
            groups.entry(rest).or_default().push((v, *a));
        }
        let mut rho = nalgebra::DMatrix::<C64>::zeros(dim, dim);
        for g in groups.values() {
            for &(i, ai) in g {
                for &(j, aj) in g {
                    rho[(i, j)] += ai * aj.conj();
                }
            }
        }
        rho
    }

    fn prune(&mut self) {
        let mut w = 0;
        for i in 0..self.keys.len() {
            if self.amps[i].norm_sqr() > PRUNE {
                self.keys[w] = self.keys[i];
                self.amps[w] = self.amps[i];
                w += 1;
            }
        }
        self.keys.truncate(w);
        self.amps.truncate(w);
    }

    fn apply_one(&mut self, u: &Unitary2, q: QubitId, control: Option<QubitId>) {
        let on = |k: &Key| control.is_none_or(|c| get(k, c));
        let m = &u.0;
        let zero = C64::default();
        if m[0][1] == zero && m[1][0] == zero {
            for (k, a) in self.keys.iter().zip(self.amps.iter_mut()) {
                if on(k) {
                    *a *= if get(k, q) { m[1][1] } else { m[0][0] };
                }
            }
            return;
        }
        if m[0][0] == zero && m[1][1] == zero {
            for (k, a) in self.keys.iter_mut().zip(self.amps.iter_mut()) {
                if on(k) {
                    *a *= if get(k, q) { m[0][1] } else { m[1][0] };
                    flip(k, q);
                }
            }
            return;
        }
        let pos: FxHashMap<Key, usize> = self.keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let len = self.keys.len();
        let mut done = vec![false; len];
        let mut keys = Vec::with_capacity(len * 2);
        let mut amps = Vec::with_capacity(len * 2);
        for i in 0..len {
            if done[i] {
                continue;
            }
            done[i] = true;
            let k = self.keys[i];
            if !on(&k) {
                keys.push(k);
                amps.push(self.amps[i]);
                continue;
            }
            let mut partner = k;
            flip(&mut partner, q);
            let other = pos.get(&partner).copied();
            if let Some(j) = other {
                done[j] = true;
            }
            let po = other.map(|j| self.amps[j]).unwrap_or_default();
            let (a0, a1, k0, k1) = if get(&k, q) { (po, self.amps[i], partner, k) } else { (self.amps[i], po, k, partner) };
            let (b0, b1) = u.apply(a0, a1);
            if b0.norm_sqr() > PRUNE {
                keys.push(k0);
                amps.push(b0);
            }
            if b1.norm_sqr() > PRUNE {
                keys.push(k1);
                amps.push(b1);
            }
        }
        self.keys = keys;
        self.amps = amps;
    }

    fn apply_dense(&mut self, o: &crate::oracle::Oracle<crate::oracle::DenseSpec>) {
        let reg: Vec<QubitId> = o.qubits().collect();
        let m = o.spec.matrix(reg.len(), o.adjoint);
        let dim = m.nrows();
        let mut order: Vec<Key> = vec![];
        let mut groups: FxHashMap<Key, Vec<(usize, C64)>> = FxHashMap::default();
        for (k, a) in self.keys.iter().zip(&self.amps) {
            let v = read_reg(k, &reg) as usize;
            let mut rest = *k;
            write_reg(&mut rest, &reg, 0);
            let e = groups.entry(rest).or_default();
            if e.is_empty() {
                order.push(rest);
            }
            e.push((v, *a));
        }
        let mut keys = vec![];
        let mut amps = vec![];
        for rest in order {
            let g = &groups[&rest];
            for y in 0..dim {
                let s: C64 = g.iter().map(|&(x, a)| m[(y, x)] * a).sum();
                if s.norm_sqr() > PRUNE {
                    let mut k = rest;
                    write_reg(&mut k, &reg, y as u64);
                    keys.push(k);
                    amps.push(s);
                }
            }
        }
        self.keys = keys;
        self.amps = amps;
    }

    /// Applies the classical and diagonal gates of a layer entry by entry.
    fn apply_classical(&mut self, gates: &[&Gate]) {
        let mut vals = vec![];
        let mut widths = vec![];
        let mut weights = vec![];
        for (k, a) in self.keys.iter_mut().zip(self.amps.iter_mut()) {
            for g in gates {
                match g {
                    Gate::Fanout { control, targets } => {
                        if get(k, *control) {
                            for &t in targets {
                                flip(k, t);
                            }
                        }
                    }
                    Gate::Parity { sources, target } => {
                        if sources.iter().filter(|&&s| get(k, s)).count() % 2 == 1 {
                            flip(k, *target);
                        }
                    }
                    Gate::Perm(o) => {
                        vals.clear();
                        widths.clear();
                        weights.clear();
                        for r in &o.registers {
                            vals.push(read_reg(k, r));
                            widths.push(r.len());
                            weights.push(weight(k, r));
                        }
                        o.spec.apply(&mut vals, &widths, &weights, o.adjoint);
                        for (r, &v) in o.registers.iter().zip(&vals) {
                            if r.len() <= 64 {
                                write_reg(k, r, v);
                            }
                        }
                    }
                    Gate::Diag(o) => {
                        vals.clear();
                        widths.clear();
                        for r in &o.registers {
                            vals.push(read_reg(k, r));
                            widths.push(r.len());
                        }
                        let ang = o.spec.angle(&vals, &widths);
                        *a *= C64::from_polar(1.0, if o.adjoint { -ang } else { ang });
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    fn apply_layer(&mut self, gates: &[Gate]) {
        let classical: Vec<&Gate> = gates
            .iter()
            .filter(|g| matches!(g, Gate::Fanout { .. } | Gate::Parity { .. } | Gate::Perm(_) | Gate::Diag(_)))
            .collect();
        if !classical.is_empty() {
            self.apply_classical(&classical);
        }
        let mut grew = false;
        for g in gates {
            match g {
                Gate::OneQubit { u, qubit } => {
                    self.apply_one(u, *qubit, None);
                    grew = true;
                }
                Gate::Controlled { u, control, target } => {
                    self.apply_one(u, *target, Some(*control));
                    grew = true;
                }
                Gate::Unitary(o) => {
                    self.apply_dense(o);
                    grew = true;
                }
                _ => {}
            }
        }
        if grew {
            self.prune();
        }
    }

    /// Applies a basis change (or its inverse) to each listed qubit.
    pub fn change_basis(&mut self, spec: &[(QubitId, Basis)], inverse: bool) {
        for &(q, b) in spec {
            if b != Basis::Computational {
                let u = if inverse { b.change().adjoint() } else { b.change() };
                self.apply_one(&u, q, None);
            }
        }
        self.prune();
    }

    /// Born-rule measurement of the listed qubits in the given bases. Returns one
    /// outcome bit per listed qubit and collapses the state onto the measured
    /// basis vectors.
    pub fn measure<R: Rng>(&mut self, spec: &[(QubitId, Basis)], rng: &mut R) -> Vec<bool> {
        self.change_basis(spec, true);
        let qs: Vec<QubitId> = spec.iter().map(|&(q, _)| q).collect();
        let mut dist: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
        for (k, a) in self.keys.iter().zip(&self.amps) {
            *dist.entry(qs.iter().map(|&q| get(k, q)).collect()).or_default() += a.norm_sqr();
        }
        let total: f64 = dist.values().sum();
        let r: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = dist.keys().next_back().cloned().unwrap_or_default();
        for (o, p) in &dist {
            acc += p;
            if r < acc {
                chosen = o.clone();
                break;
            }
        }
        let p = dist[&chosen];
        let scale = 1.0 / p.sqrt();
        let mut w = 0;
        for i in 0..self.keys.len() {
            let k = self.keys[i];
            if qs.iter().zip(&chosen).all(|(&q, &b)| get(&k, q) == b) {
                self.keys[w] = k;
                self.amps[w] = self.amps[i] * scale;
                w += 1;
            }
        }
        self.keys.truncate(w);
        self.amps.truncate(w);
        self.change_basis(spec, false);
        chosen
    }

    /// Probability of each outcome string for a product-basis measurement, without collapse.
    pub fn outcome_distribution(&self, spec: &[(QubitId, Basis)]) -> BTreeMap<Vec<bool>, f64> {
        let mut s = self.clone();
        s.change_basis(spec, true);
        let mut dist = BTreeMap::new();
        for (k, a) in s.keys.iter().zip(&s.amps) {
            *dist.entry(spec.iter().map(|&(q, _)| get(k, q)).collect::<Vec<bool>>()).or_default() += a.norm_sqr();
        }
        dist
    }
}

/// Runs circuits under a qubit budget.
#[derive(Clone, Copy, Debug)]
pub struct Simulator {
    pub qubit_budget: usize,
}

impl Default for Simulator {
    fn default() -> Self {
        Simulator { qubit_budget: DEFAULT_QUBIT_BUDGET }
    }
}

impl Simulator {
    pub fn new(qubit_budget: usize) -> Self {
        Simulator { qubit_budget }
    }

    pub fn run(&self, c: &Circuit, input: &BasisState) -> Result<StateVector, SimError> {
        if input.bits.len() != c.qubit_count {
            return Err(SimError::WidthMismatch { got: input.bits.len(), want: c.qubit_count });
        }
        self.run_state(c, StateVector::basis(input)?)
    }

    /// Runs from an arbitrary starting state.
    pub fn run_state(&self, c: &Circuit, mut s: StateVector) -> Result<StateVector, SimError> {
        if c.qubit_count > MAX_QUBITS {
            return Err(SimError::TooManyQubits { required: c.qubit_count, limit: MAX_QUBITS });
        }
        if s.n != c.qubit_count {
            return Err(SimError::WidthMismatch { got: s.n, want: c.qubit_count });
        }
        let v = c.validate();
        if !v.is_empty() {
            return Err(SimError::Invalid(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")));
        }
        let cap = 1usize << self.qubit_budget.min(40);
        for layer in &c.layers {
            s.apply_layer(&layer.gates);
            if s.keys.len() > cap {
                let required = (usize::BITS - (s.keys.len() - 1).leading_zeros()) as usize;
                return Err(SimError::BudgetExceeded { required, budget: self.qubit_budget });
            }
        }
        Ok(s)
    }

    /// Full unitary of a small circuit, qubit 0 least significant.
    pub fn matrix(&self, c: &Circuit) -> Result<nalgebra::DMatrix<C64>, SimError> {
        if c.qubit_count > 12 {
            return Err(SimError::TooManyQubits { required: c.qubit_count, limit: 12 });
        }
        let dim = 1usize << c.qubit_count;
        let all: Vec<QubitId> = (0..c.qubit_count).collect();
        let mut m = nalgebra::DMatrix::<C64>::zeros(dim, dim);
        for col in 0..dim {
            let s = self.run(c, &BasisState::zeros(c.qubit_count).with_register(&all, col as u64))?;
            for (k, a) in s.keys.iter().zip(&s.amps) {
                m[(k[0] as usize, col)] = *a;
            }
        }
        Ok(m)
    }

    /// Input basis states with every ancilla set to 0.
    fn clean_inputs(c: &Circuit) -> Vec<BasisState> {
        let free: Vec<QubitId> = (0..c.qubit_count).filter(|&q| c.roles[q] != Role::Ancilla).collect();
        (0..1u64 << free.len()).map(|v| BasisState::zeros(c.qubit_count).with_register(&free, v)).collect()
    }

    /// Frobenius distance between the two circuits' unitaries, minimized over a
    /// global phase. Columns range over all basis inputs.
    pub fn unitary_distance(&self, a: &Circuit, b: &Circuit) -> Result<f64, SimError> {
        if a.qubit_count > 12 {
            return Err(SimError::TooManyQubits { required: a.qubit_count, limit: 12 });
        }
        let inputs: Vec<BasisState> = (0..1u64 << a.qubit_count)
            .map(|v| BasisState::zeros(a.qubit_count).with_register(&(0..a.qubit_count).collect::<Vec<_>>(), v))
            .collect();
        self.distance_over(a, b, &inputs)
    }

    /// As [`Simulator::unitary_distance`] but over inputs whose ancillas (roles of `a`) are 0.
    pub fn isometry_distance(&self, a: &Circuit, b: &Circuit) -> Result<f64, SimError> {
        let free = a.roles.iter().filter(|&&r| r != Role::Ancilla).count();
        if free > 12 {
            return Err(SimError::TooManyQubits { required: free, limit: 12 });
        }
        self.distance_over(a, b, &Self::clean_inputs(a))
    }

    fn distance_over(&self, a: &Circuit, b: &Circuit, inputs: &[BasisState]) -> Result<f64, SimError> {
        if a.qubit_count != b.qubit_count {
            return Err(SimError::WidthMismatch { got: b.qubit_count, want: a.qubit_count });
        }
        let mut cols = Vec::with_capacity(inputs.len());
        let mut tr = C64::default();
        for x in inputs {
            let sa = self.run(a, x)?;
            let sb = self.run(b, x)?;
            tr += sa.inner(&sb);
            cols.push((sa, sb));
        }
        let ph = if tr.norm() > 0.0 { tr / tr.norm() } else { C64::new(1.0, 0.0) };
        let mut d = 0.0;
        for (sa, sb) in &cols {
            let mut diff: FxHashMap<Key, C64> = FxHashMap::default();
            for (k, amp) in sa.keys.iter().zip(&sa.amps) {
                *diff.entry(*k).or_default() += amp * ph;
            }
            for (k, amp) in sb.keys.iter().zip(&sb.amps) {
                *diff.entry(*k).or_default() -= amp;
            }
            d += diff.values().map(|c| c.norm_sqr()).sum::<f64>();
        }
        Ok(d.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Alloc, Block, Layer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sim() -> Simulator {
        Simulator::default()
    }

    #[test]
    fn fanout_copies_one() {
        let c = Circuit::new(vec![Role::Input; 3], vec![Layer::new(vec![Gate::fanout(0, vec![1, 2])])], true);
        let s = sim().run(&c, &BasisState::parse("100").unwrap()).unwrap();
        assert!((s.amplitude(&BasisState::parse("111").unwrap()).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parity_of_101_is_zero() {
        let c = Circuit::new(vec![Role::Input; 4], vec![Layer::new(vec![Gate::parity(vec![0, 1, 2], 3)])], true);
        let s = sim().run(&c, &BasisState::parse("1010").unwrap()).unwrap();
        assert!((s.amplitude(&BasisState::parse("1010").unwrap()).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_makes_plus() {
        let c = Circuit::new(vec![Role::Input], vec![Layer::new(vec![Gate::one(Unitary2::h(), 0)])], true);
        let s = sim().run(&c, &BasisState::zeros(1)).unwrap();
        let d = s.to_dense();
        assert!((d[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((d[1].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s.marginal_probability(0, false) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bell_pair_marginals() {
        let c = Circuit::new(
            vec![Role::Input; 2],
            vec![Layer::new(vec![Gate::one(Unitary2::h(), 0)]), Layer::new(vec![Gate::cnot(0, 1)])],
            true,
        );
        let s = sim().run(&c, &BasisState::zeros(2)).unwrap();
        for q in 0..2 {
            assert!((s.marginal_probability(q, false) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn hadamard_basis_measurement_of_plus_is_certain() {
        let c = Circuit::new(vec![Role::Input], vec![Layer::new(vec![Gate::one(Unitary2::h(), 0)])], true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut s = sim().run(&c, &BasisState::zeros(1)).unwrap();
            assert_eq!(s.measure(&[(0, Basis::Hadamard)], &mut rng), vec![false]);
        }
    }

    #[test]
    fn phase_basis_measurement_collapses_onto_basis_vector() {
        let c = Circuit::new(vec![Role::Input], vec![Layer::new(vec![Gate::one(Unitary2::h(), 0)])], true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = sim().run(&c, &BasisState::zeros(1)).unwrap();
        let o = s.measure(&[(0, Basis::PhasePiOver2)], &mut rng);
        let again = s.outcome_distribution(&[(0, Basis::PhasePiOver2)]);
        assert!((again[&o] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_zero_to_itself_and_up_to_phase() {
        let mut a = Alloc::new();
        let q = a.take(Role::Input, 2);
        let b = Block::from_layers(vec![vec![Gate::one(Unitary2::h(), q[0])], vec![Gate::cnot(q[0], q[1])]]);
        let c = a.clone().finish(b.clone(), true);
        assert!(sim().unitary_distance(&c, &c).unwrap() < 1e-12);
        let phase = Gate::Diag(crate::oracle::Oracle::unit(crate::oracle::DiagSpec::GlobalPhase { angle: 1.3 }, vec![q.clone()]));
        let c2 = a.finish(b.then(Block::layer(vec![phase])), true);
        assert!(sim().unitary_distance(&c, &c2).unwrap() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let c = Circuit::new(vec![Role::Input; 4], vec![Layer::new((0..4).map(|q| Gate::one(Unitary2::h(), q)).collect())], true);
        let err = Simulator::new(3).run(&c, &BasisState::zeros(4)).unwrap_err();
        assert_eq!(err, SimError::BudgetExceeded { required: 4, budget: 3 });
    }
}
