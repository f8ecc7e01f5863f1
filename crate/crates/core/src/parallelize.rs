//! Parallelising commuting gates with fan-out, and the rotation circuits built on it.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use std::f64::consts::TAU;
use thiserror::Error;

use crate::circuit::{Alloc, Block, Circuit, Gate, Layer, QubitId, Role};
use crate::oracle::{bits_for, DenseSpec, DiagSpec, Oracle, PermSpec};
use crate::sim::Simulator;
use crate::unitary::Unitary2;

/// Tolerance for the diagonality and control checks on a gate set.
pub const DIAGONAL_TOL: f64 = 1e-9;

/// Largest target width for which diagonality is checked on construction.
pub const CHECK_WIDTH_LIMIT: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum ParallelizeError {
    #[error("gate {gate} is not diagonal after the basis change (off-diagonal {off:.3e})")]
    NotDiagonal { gate: usize, off: f64 },
    #[error("gate {gate} acts on the target when its control is 0 (deviation {dev:.3e})")]
    NotControlled { gate: usize, dev: f64 },
    #[error("gate {gate} spans {got} qubits, expected {want}")]
    Width { gate: usize, got: usize, want: usize },
    #[error("input is not unitary")]
    NotUnitary,
    #[error("need at least one gate")]
    Empty,
    #[error("no repetition count up to {bound} is within tolerance; best q = {best_q}, error {best_error:.3e}")]
    BoundExhausted { bound: u64, best_q: u64, best_error: f64 },
}

fn h_layer(qs: &[QubitId]) -> Vec<Gate> {
    qs.iter().map(|&q| Gate::one(Unitary2::h(), q)).collect()
}

/// Parity of `n` sources into one target, written as a fan-out from the target
/// conjugated by Hadamards. Qubits `0..n` are the sources, `n` the target.
pub fn parity_from_fanout(n: usize) -> Circuit {
    let all: Vec<QubitId> = (0..=n).collect();
    let mut roles = vec![Role::Input; n];
    roles.push(Role::Output);
    Circuit::new(
        roles,
        vec![
            Layer::new(h_layer(&all)),
            Layer::new(vec![Gate::fanout(n, (0..n).collect())]),
            Layer::new(h_layer(&all)),
        ],
        true,
    )
}

/// Fan-out of qubit 0 onto `1..=n`, written as a parity gate conjugated by Hadamards.
pub fn fanout_from_parity(n: usize) -> Circuit {
    let all: Vec<QubitId> = (0..=n).collect();
    let mut roles = vec![Role::Input];
    roles.extend(vec![Role::Output; n]);
    Circuit::new(
        roles,
        vec![
            Layer::new(h_layer(&all)),
            Layer::new(vec![Gate::parity((1..=n).collect(), 0)]),
            Layer::new(h_layer(&all)),
        ],
        true,
    )
}

/// The bare parity gate on the layout of [`parity_from_fanout`].
pub fn parity_gate(n: usize) -> Circuit {
    let mut roles = vec![Role::Input; n];
    roles.push(Role::Output);
    Circuit::new(roles, vec![Layer::new(vec![Gate::parity((0..n).collect(), n)])], true)
}

/// The bare fan-out gate on the layout of [`fanout_from_parity`].
pub fn fanout_gate(n: usize) -> Circuit {
    let mut roles = vec![Role::Input];
    roles.extend(vec![Role::Output; n]);
    Circuit::new(roles, vec![Layer::new(vec![Gate::fanout(0, (1..=n).collect())])], true)
}

fn rz_half(t: f64) -> Unitary2 {
    Unitary2::phase(-t / 2.0).mul(&Unitary2::rz(t))
}

fn ry_half(t: f64) -> Unitary2 {
    Unitary2::ry(t / 2.0)
}

/// `u = e^{iα}·A·X·B·X·C` with `A·B·C = I`.
#[derive(Clone, Copy, Debug)]
pub struct ControlledDecomposition {
    pub a: Unitary2,
    pub b: Unitary2,
    pub c: Unitary2,
    pub alpha: f64,
}

impl ControlledDecomposition {
    pub fn recompose(&self) -> Unitary2 {
        let x = Unitary2::x();
        self.a.mul(&x).mul(&self.b).mul(&x).mul(&self.c).scale(C64::from_polar(1.0, self.alpha))
    }

    /// Controlled-`u` on (control 0, target 1) from two CNOTs and one-qubit gates.
    pub fn circuit(&self) -> Circuit {
        Circuit::new(
            vec![Role::Input, Role::Input],
            vec![
                Layer::new(vec![Gate::one(self.c, 1)]),
                Layer::new(vec![Gate::cnot(0, 1)]),
                Layer::new(vec![Gate::one(self.b, 1)]),
                Layer::new(vec![Gate::cnot(0, 1)]),
                Layer::new(vec![Gate::one(self.a, 1), Gate::one(Unitary2::rz(self.alpha), 0)]),
            ],
            true,
        )
    }
}

/// Z-Y-Z Euler decomposition of a one-qubit unitary.
pub fn controlled_u_decomposition(u: &Unitary2) -> Result<ControlledDecomposition, ParallelizeError> {
    if !u.is_unitary(1e-9) {
        return Err(ParallelizeError::NotUnitary);
    }
    let alpha = u.det().arg() / 2.0;
    let v = u.scale(C64::from_polar(1.0, -alpha));
    let (c0, s0) = (v.0[1][1], v.0[1][0]);
    let gamma = 2.0 * s0.norm().atan2(c0.norm());
    let sum = if c0.norm() > 1e-15 { 2.0 * c0.arg() } else { 0.0 };
    let diff = if s0.norm() > 1e-15 { 2.0 * s0.arg() } else { 0.0 };
    let beta = (sum + diff) / 2.0;
    let delta = (sum - diff) / 2.0;
    Ok(ControlledDecomposition {
        a: rz_half(beta).mul(&ry_half(gamma / 2.0)),
        b: ry_half(-gamma / 2.0).mul(&rz_half(-(delta + beta) / 2.0)),
        c: rz_half((delta - beta) / 2.0),
        alpha,
    })
}

/// Controlled forms of commuting gates on a `k`-qubit target, with a basis change
/// `T` such that `T†·U_i·T` is diagonal for every gate.
///
/// Each controlled circuit acts on `k + 1` local qubits: qubit 0 is the control
/// and `1..=k` the target. `basis_change` acts on local qubits `0..k`.
#[derive(Clone, Debug)]
pub struct CommutingGateSet {
    pub k: usize,
    pub controlled: Vec<Circuit>,
    pub basis_change: Circuit,
}

/// Depth, size and ancilla count the parallel circuit must have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PredictedStats {
    pub depth: usize,
    pub size: usize,
    pub ancillas: usize,
}

impl CommutingGateSet {
    pub fn new(k: usize, controlled: Vec<Circuit>, basis_change: Circuit) -> Result<Self, ParallelizeError> {
        let set = CommutingGateSet { k, controlled, basis_change };
        set.check()?;
        Ok(set)
    }

    pub fn n(&self) -> usize {
        self.controlled.len()
    }

    /// Shape checks, plus the control and diagonality checks for targets up to
    /// [`CHECK_WIDTH_LIMIT`] qubits.
    pub fn check(&self) -> Result<(), ParallelizeError> {
        if self.controlled.is_empty() {
            return Err(ParallelizeError::Empty);
        }
        if self.basis_change.qubit_count != self.k {
            return Err(ParallelizeError::Width { gate: usize::MAX, got: self.basis_change.qubit_count, want: self.k });
        }
        for (i, c) in self.controlled.iter().enumerate() {
            if c.qubit_count != self.k + 1 {
                return Err(ParallelizeError::Width { gate: i, got: c.qubit_count, want: self.k + 1 });
            }
        }
        if self.k > CHECK_WIDTH_LIMIT {
            return Ok(());
        }
        let sim = Simulator::default();
        let t = sim.matrix(&self.basis_change).map_err(|_| ParallelizeError::NotUnitary)?;
        let dim = 1usize << self.k;
        for (i, c) in self.controlled.iter().enumerate() {
            let m = sim.matrix(c).map_err(|_| ParallelizeError::NotUnitary)?;
            let mut dev: f64 = 0.0;
            let mut u = DMatrix::<C64>::zeros(dim, dim);
            for r in 0..dim {
                for s in 0..dim {
                    let id = if r == s { 1.0 } else { 0.0 };
                    dev = dev.max((m[(2 * r, 2 * s)] - id).norm());
                    dev = dev.max(m[(2 * r + 1, 2 * s)].norm()).max(m[(2 * r, 2 * s + 1)].norm());
                    u[(r, s)] = m[(2 * r + 1, 2 * s + 1)];
                }
            }
            if dev > DIAGONAL_TOL {
                return Err(ParallelizeError::NotControlled { gate: i, dev });
            }
            let d = t.adjoint() * u * &t;
            let mut off: f64 = 0.0;
            for r in 0..dim {
                for s in 0..dim {
                    if r != s {
                        off = off.max(d[(r, s)].norm());
                    }
                }
            }
            if off > DIAGONAL_TOL {
                return Err(ParallelizeError::NotDiagonal { gate: i, off });
            }
        }
        Ok(())
    }

    /// Stats of the parallel circuit. Each of the two fan-out layers holds one
    /// fan-out per target qubit, each touching `n` qubits.
    pub fn predicted(&self) -> PredictedStats {
        let n = self.n();
        let t = self.basis_change.stats();
        let max_u = self.controlled.iter().map(|c| c.layers.len()).max().unwrap_or(0);
        let sum_u: usize = self.controlled.iter().map(|c| c.stats().size).sum();
        PredictedStats {
            depth: max_u + 4 * t.depth + 2,
            size: sum_u + (2 * n + 2) * t.size + 2 * n * self.k,
            ancillas: (n - 1) * self.k,
        }
    }
}

/// A built circuit together with its register layout.
#[derive(Clone, Debug)]
pub struct Parallelized {
    pub circuit: Circuit,
    pub controls: Vec<QubitId>,
    pub targets: Vec<QubitId>,
    /// Copy 0 is the target itself; the rest are ancillas.
    pub copies: Vec<Vec<QubitId>>,
}

fn layout(n: usize, k: usize) -> (Alloc, Vec<QubitId>, Vec<Vec<QubitId>>) {
    let mut al = Alloc::new();
    let controls = al.take(Role::Input, n);
    let mut copies = vec![al.take(Role::Output, k)];
    for _ in 1..n {
        copies.push(al.take(Role::Ancilla, k));
    }
    (al, controls, copies)
}

fn as_block(c: &Circuit) -> Block {
    Block { layers: c.layers.clone() }
}

/// One fan-out per register position, from `copies[0]` onto every other copy.
/// With a single copy the fan-outs have no targets and act as the identity.
pub fn fanout_copies(copies: &[Vec<QubitId>]) -> Vec<Gate> {
    (0..copies[0].len())
        .map(|j| Gate::fanout(copies[0][j], copies[1..].iter().map(|c| c[j]).collect()))
        .collect()
}

fn controlled_on(c: &Circuit, control: QubitId, target: &[QubitId]) -> Block {
    as_block(c).remap(&|q| if q == 0 { control } else { target[q - 1] })
}

/// `Π_i U_i^{x_i}` in constant depth: change basis, copy the target into the
/// ancilla copies, apply every controlled gate to its own copy in the diagonal
/// basis, uncopy, change back.
pub fn parallelize_commuting(set: &CommutingGateSet) -> Result<Parallelized, ParallelizeError> {
    set.check()?;
    let (al, controls, copies) = layout(set.n(), set.k);
    let t = as_block(&set.basis_change);
    let on = |b: &Block, i: usize| b.remap(&|q| copies[i][q]);
    let every = |b: &Block| Block::parallel((0..copies.len()).map(|i| on(b, i)).collect());
    let body =
        Block::parallel(set.controlled.iter().enumerate().map(|(i, c)| controlled_on(c, controls[i], &copies[i])).collect());
    let block = on(&t.adjoint(), 0)
        .then(Block::layer(fanout_copies(&copies)))
        .then(every(&t))
        .then(body)
        .then(every(&t.adjoint()))
        .then(Block::layer(fanout_copies(&copies)))
        .then(on(&t, 0));
    Ok(Parallelized { circuit: al.finish(block, true), controls, targets: copies[0].clone(), copies })
}

/// The controlled gates one after another on the target, over the same qubit layout.
pub fn sequential(set: &CommutingGateSet) -> Circuit {
    let (al, controls, copies) = layout(set.n(), set.k);
    let mut block = Block::new();
    for (i, c) in set.controlled.iter().enumerate() {
        block = block.then(controlled_on(c, controls[i], &copies[0]));
    }
    al.finish(block, true)
}

/// A seeded commuting set: random diagonal gates conjugated by a random basis change.
/// For `k = 1` each controlled gate is a single controlled one-qubit gate.
pub fn random_commuting_set<R: Rng>(n: usize, k: usize, rng: &mut R) -> CommutingGateSet {
    let mut t_block = Block::layer((0..k).map(|q| Gate::one(Unitary2::random(rng), q)).collect());
    if k > 1 {
        t_block.push((0..k / 2).map(|p| Gate::cnot(2 * p, 2 * p + 1)).collect());
        t_block.push((0..k).map(|q| Gate::one(Unitary2::random(rng), q)).collect());
    }
    let basis_change = Circuit::new(vec![Role::Input; k], t_block.layers.clone(), true);
    let controlled = (0..n)
        .map(|_| {
            if k == 1 {
                let Gate::OneQubit { u: t, .. } = t_block.layers[0].gates[0] else { unreachable!() };
                let d = Unitary2::phase(rng.gen::<f64>() * TAU).mul(&Unitary2::rz(rng.gen::<f64>() * TAU));
                let u = t.mul(&d).mul(&t.adjoint());
                Circuit::new(vec![Role::Input; 2], vec![Layer::new(vec![Gate::controlled(u, 0, 1)])], true)
            } else {
                let dim = 1usize << k;
                let mut phases = vec![0.0; 2 * dim];
                for s in 0..dim {
                    phases[1 + 2 * s] = rng.gen::<f64>() * TAU;
                }
                let target: Vec<QubitId> = (1..=k).collect();
                let t_local = t_block.remap(&|q| q + 1);
                let block = t_local
                    .adjoint()
                    .then(Block::layer(vec![Gate::Diag(Oracle::unit(DiagSpec::Table { phases }, vec![vec![0], target]))]))
                    .then(t_local);
                Circuit::new(vec![Role::Input; k + 1], block.layers, true)
            }
        })
        .collect();
    CommutingGateSet { k, controlled, basis_change }
}

/// Applies `Rz(angles[i])` to `target` controlled by `xs[i]` for every `i` at once:
/// fan the target out to `copies`, rotate each copy, fan back in. Three layers.
pub fn controlled_rotations_block(xs: &[QubitId], target: QubitId, copies: &[QubitId], angles: &[f64]) -> Block {
    assert_eq!(copies.len() + 1, xs.len());
    assert_eq!(angles.len(), xs.len());
    let fan = vec![Gate::fanout(target, copies.to_vec())];
    let rot = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| Gate::controlled(Unitary2::rz(angles[i]), x, if i == 0 { target } else { copies[i - 1] }))
        .collect();
    Block::from_layers(vec![fan.clone(), rot, fan])
}

/// `H·Rz(Σ_i angles[i]·x_i)·Rz(shift)·H` applied to a fresh target. Five layers.
pub fn rotate_state_block(xs: &[QubitId], target: QubitId, copies: &[QubitId], angles: &[f64], shift: f64) -> Block {
    let first = Unitary2::rz(shift).mul(&Unitary2::h());
    Block::layer(vec![Gate::one(first, target)])
        .then(controlled_rotations_block(xs, target, copies, angles))
        .then(Block::layer(vec![Gate::one(Unitary2::h(), target)]))
}

fn rotation_circuit(angles: &[f64], prepare: bool) -> Parallelized {
    let n = angles.len();
    let mut al = Alloc::new();
    let xs = al.take(Role::Input, n);
    let target = al.one(if prepare { Role::Ancilla } else { Role::Output });
    let copies = al.take(Role::Ancilla, n - 1);
    let block = if prepare {
        rotate_state_block(&xs, target, &copies, angles, 0.0)
    } else {
        controlled_rotations_block(&xs, target, &copies, angles)
    };
    let mut circuit = al.finish(block, !prepare);
    if prepare {
        circuit.roles[target] = Role::Output;
    }
    let mut all_copies = vec![vec![target]];
    all_copies.extend(copies.iter().map(|&c| vec![c]));
    Parallelized { circuit, controls: xs, targets: vec![target], copies: all_copies }
}

/// Phase `e^{iφ|x|}` on the `|1⟩` component of the target.
pub fn rotation_by_hamming_weight(n: usize, phi: f64) -> Parallelized {
    rotation_circuit(&vec![phi; n], false)
}

/// Phase `e^{iφx}` on the `|1⟩` component of the target; qubit `j` of `x` has weight `2^j`.
pub fn rotation_by_value(n: usize, phi: f64) -> Parallelized {
    let angles: Vec<f64> = (0..n).map(|j| phi * (1u64 << j) as f64).collect();
    rotation_circuit(&angles, false)
}

/// Prepares `H·Rz(φ|x|)·H|0⟩` on a fresh target, which is an output of the circuit.
pub fn rotate_state(n: usize, phi: f64) -> Parallelized {
    rotation_circuit(&vec![phi; n], true)
}

/// The Hamming-weight rotation as a commuting set with a trivial basis change.
pub fn rotation_set(n: usize, phi: f64) -> CommutingGateSet {
    let g = Circuit::new(vec![Role::Input; 2], vec![Layer::new(vec![Gate::controlled(Unitary2::rz(phi), 0, 1)])], true);
    CommutingGateSet { k: 1, controlled: vec![g; n], basis_change: Circuit::empty(vec![Role::Input]) }
}

/// `θ` with `sin θ = 3/5`.
pub fn fixed_angle() -> f64 {
    (0.6f64).asin()
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(TAU);
    r.min(TAU - r)
}

/// A target angle reached by repeating the fixed rotation `q` times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedBasisRotation {
    pub theta: f64,
    pub q: u64,
    pub error: f64,
}

/// Smallest `q ≤ bound` with `q·θ` within `eps` of `phi` on the circle.
pub fn approx_rotation_fixed_basis(phi: f64, eps: f64, bound: u64) -> Result<FixedBasisRotation, ParallelizeError> {
    let theta = fixed_angle();
    let (mut best_q, mut best_error) = (0, f64::INFINITY);
    for q in 1..=bound {
        let error = angle_distance(q as f64 * theta, phi);
        if error <= eps {
            return Ok(FixedBasisRotation { theta, q, error });
        }
        if error < best_error {
            best_q = q;
            best_error = error;
        }
    }
    Err(ParallelizeError::BoundExhausted { bound, best_q, best_error })
}

/// Hamming-weight rotation using only `Rz(θ)`: each input is fanned out to `q`
/// copies and the target to `n·q` copies, so all `n·q` rotations share one layer.
pub fn rotation_by_hamming_weight_fixed(n: usize, rot: &FixedBasisRotation) -> Parallelized {
    let q = rot.q as usize;
    let mut al = Alloc::new();
    let xs = al.take(Role::Input, n);
    let target = al.one(Role::Output);
    let x_copies: Vec<Vec<QubitId>> = xs.iter().map(|_| al.take(Role::Ancilla, q - 1)).collect();
    let t_copies = al.take(Role::Ancilla, n * q - 1);
    let mut fan: Vec<Gate> = xs.iter().zip(&x_copies).map(|(&x, c)| Gate::fanout(x, c.clone())).collect();
    fan.push(Gate::fanout(target, t_copies.clone()));
    let mut rot_layer = vec![];
    for i in 0..n {
        for r in 0..q {
            let c = if r == 0 { xs[i] } else { x_copies[i][r - 1] };
            let slot = i * q + r;
            let t = if slot == 0 { target } else { t_copies[slot - 1] };
            rot_layer.push(Gate::controlled(Unitary2::rz(rot.theta), c, t));
        }
    }
    let block = Block::from_layers(vec![fan.clone(), rot_layer, fan]);
    let mut copies = vec![vec![target]];
    copies.extend(t_copies.iter().map(|&c| vec![c]));
    Parallelized { circuit: al.finish(block, true), controls: xs, targets: vec![target], copies }
}

/// Counter of `⌈log₂ q⌉` qubits ending in `|x| mod q`: every input controls one
/// increment mod `q`, parallelised with the `q`-point Fourier transform as basis change.
pub fn mod_q_set(n: usize, q: u64) -> CommutingGateSet {
    let k = bits_for(q);
    let counter: Vec<QubitId> = (1..=k).collect();
    let inc = Circuit::new(
        vec![Role::Input; k + 1],
        vec![Layer::new(vec![Gate::Perm(Oracle::unit(PermSpec::IncrementMod { q }, vec![vec![0], counter]))])],
        true,
    );
    let fourier = Circuit::new(
        vec![Role::Input; k],
        vec![Layer::new(vec![Gate::Unitary(Oracle::unit(DenseSpec::Fourier { q }, vec![(0..k).collect()]))])],
        true,
    );
    CommutingGateSet { k, controlled: vec![inc; n], basis_change: fourier }
}

pub fn mod_q_builder(n: usize, q: u64) -> Result<Parallelized, ParallelizeError> {
    parallelize_commuting(&mod_q_set(n, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::BasisState;
    use std::f64::consts::PI;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sim() -> Simulator {
        Simulator::default()
    }

    #[test]
    fn parity_and_fanout_simulate_each_other() {
        for n in 1..=4 {
            let a = parity_from_fanout(n);
            assert_eq!(a.stats().depth, 3);
            assert!(sim().unitary_distance(&a, &parity_gate(n)).unwrap() <= 1e-9);
            let b = fanout_from_parity(n);
            assert_eq!(b.stats().depth, 3);
            assert!(sim().unitary_distance(&b, &fanout_gate(n)).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn decomposition_of_identity_is_trivial() {
        let d = controlled_u_decomposition(&Unitary2::identity()).unwrap();
        for g in [d.a, d.b, d.c] {
            assert!(g.max_diff(&Unitary2::identity()) < 1e-12);
        }
        assert!(d.alpha.abs() < 1e-12);
    }

    #[test]
    fn decompositions_recompose() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut us = vec![Unitary2::x(), Unitary2::h(), Unitary2::z(), Unitary2::rz(0.4)];
        us.extend((0..50).map(|_| Unitary2::random(&mut rng)));
        for u in us {
            let d = controlled_u_decomposition(&u).unwrap();
            assert!(d.recompose().max_diff(&u) <= 1e-9);
            assert!(d.a.mul(&d.b).mul(&d.c).max_diff(&Unitary2::identity()) <= 1e-9);
            let direct = Circuit::new(vec![Role::Input; 2], vec![Layer::new(vec![Gate::controlled(u, 0, 1)])], true);
            assert!(sim().unitary_distance(&d.circuit(), &direct).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn non_unitary_is_rejected() {
        let u = Unitary2::identity().scale(C64::new(2.0, 0.0));
        assert_eq!(controlled_u_decomposition(&u).unwrap_err(), ParallelizeError::NotUnitary);
    }

    #[test]
    fn parallel_matches_sequential_with_exact_stats() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            for k in 1..=2 {
                let set = random_commuting_set(n, k, &mut rng);
                let p = parallelize_commuting(&set).unwrap();
                p.circuit.check().unwrap();
                let st = p.circuit.stats();
                let pr = set.predicted();
                assert_eq!((st.depth, st.size, st.ancilla_count), (pr.depth, pr.size, pr.ancillas), "n={n} k={k}");
                let d = sim().isometry_distance(&p.circuit, &sequential(&set)).unwrap();
                assert!(d <= 1e-9, "n={n} k={k} d={d}");
            }
        }
    }

    #[test]
    fn ancillas_for_four_gates_on_two_qubits() {
        let set = random_commuting_set(4, 2, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(parallelize_commuting(&set).unwrap().circuit.stats().ancilla_count, 6);
    }

    #[test]
    fn wrong_basis_change_is_rejected() {
        let mut set = rotation_set(2, 0.3);
        set.basis_change = Circuit::new(vec![Role::Input], vec![Layer::new(vec![Gate::one(Unitary2::h(), 0)])], true);
        assert!(matches!(parallelize_commuting(&set), Err(ParallelizeError::NotDiagonal { .. })));
    }

    #[test]
    fn rotation_via_set_matches_direct_rotation() {
        for n in 1..=4 {
            let a = parallelize_commuting(&rotation_set(n, 0.7)).unwrap();
            let b = rotation_by_hamming_weight(n, 0.7);
            assert!(sim().unitary_distance(&a.circuit, &b.circuit).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn rotation_depth_is_constant() {
        for n in 1..=16 {
            assert_eq!(rotation_by_hamming_weight(n, 0.1).circuit.stats().depth, 3);
            assert_eq!(rotation_by_value(n, 0.1).circuit.stats().depth, 3);
            assert_eq!(rotate_state(n, 0.1).circuit.stats().depth, 5);
        }
    }

    #[test]
    fn value_rotation_on_six() {
        let p = rotation_by_value(4, PI / 8.0);
        let input = BasisState::zeros(p.circuit.qubit_count).with_register(&p.controls, 6).with_register(&p.targets, 1);
        let s = sim().run(&p.circuit, &input).unwrap();
        let a = s.amplitude(&input);
        assert!((a - C64::from_polar(1.0, 6.0 * PI / 8.0)).norm() < 1e-12);
    }

    #[test]
    fn rotate_state_marginals() {
        for n in 1..=5 {
            let phi = 0.9;
            let p = rotate_state(n, phi);
            for x in 0..1u64 << n {
                let input = BasisState::zeros(p.circuit.qubit_count).with_register(&p.controls, x);
                let s = sim().run(&p.circuit, &input).unwrap();
                let w = x.count_ones() as f64;
                let want = (1.0 - (phi * w).cos()) / 2.0;
                assert!((s.marginal_probability(p.targets[0], true) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fixed_basis_hits_multiples_exactly() {
        let t = fixed_angle();
        assert_eq!(approx_rotation_fixed_basis(t, 1e-12, 10).unwrap().q, 1);
        assert_eq!(approx_rotation_fixed_basis(2.0 * t, 1e-12, 10).unwrap().q, 2);
        let r = approx_rotation_fixed_basis(PI / 4.0, 1e-3, 1_000_000).unwrap();
        assert!(angle_distance(r.q as f64 * t, PI / 4.0) <= 1e-3);
        assert!(matches!(approx_rotation_fixed_basis(PI / 4.0, 1e-9, 5), Err(ParallelizeError::BoundExhausted { .. })));
    }

    #[test]
    fn fixed_basis_rotation_circuit() {
        let rot = approx_rotation_fixed_basis(PI / 4.0, 0.05, 10_000).unwrap();
        let p = rotation_by_hamming_weight_fixed(3, &rot);
        assert_eq!(p.circuit.stats().depth, 3);
        for x in 0..8u64 {
            let input = BasisState::zeros(p.circuit.qubit_count).with_register(&p.controls, x).with_register(&p.targets, 1);
            let a = sim().run(&p.circuit, &input).unwrap().amplitude(&input);
            let w = x.count_ones() as f64;
            assert!((a - C64::from_polar(1.0, rot.theta * rot.q as f64 * w)).norm() < 1e-9);
            assert!(angle_distance(a.arg(), PI / 4.0 * w) <= w * 0.05 + 1e-12);
        }
    }

    #[test]
    fn mod_q_counts() {
        for n in 1..=6 {
            let p = mod_q_builder(n, 2).unwrap();
            for x in 0..1u64 << n {
                let input = BasisState::zeros(p.circuit.qubit_count).with_register(&p.controls, x);
                let s = sim().run(&p.circuit, &input).unwrap();
                let out = input.clone().with_register(&p.targets, x.count_ones() as u64 % 2);
                assert!((s.amplitude(&out).norm() - 1.0).abs() < 1e-9, "n={n} x={x}");
            }
        }
        let p = mod_q_builder(5, 3).unwrap();
        let input = BasisState::zeros(p.circuit.qubit_count).with_register(&p.controls, 0b11111);
        let s = sim().run(&p.circuit, &input).unwrap();
        let d = s.register_distribution(&p.targets);
        assert!((d[&2] - 1.0).abs() < 1e-9);
    }
}
