//! Exact reductions of Or to logarithmically many qubits, and the Or circuits built from them.

use std::f64::consts::TAU;
use thiserror::Error;

use crate::circuit::{Alloc, Block, Circuit, Gate, QubitId, Role};
use crate::gates::{build_or_approx, counter_width, weight_rotation_stage, OrParams};
use crate::oracle::{Oracle, PermSpec};
use crate::sim::{BasisState, SimError, Simulator};
use crate::unitary::Unitary2;

#[derive(Debug, Error, PartialEq)]
pub enum ReductionError {
    #[error("weight 0 has no dyadic decomposition")]
    ZeroWeight,
    #[error("the {d}-fold iterated logarithm of {n} is not defined")]
    IteratedLog { n: usize, d: usize },
    #[error("n = {0} is too small for this construction")]
    TooSmall(usize),
}

/// `w = 2^a·(2b+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicDecomposition {
    pub w: u64,
    pub a: u32,
    pub b: u64,
}

pub fn dyadic_decompose(w: u64) -> Result<DyadicDecomposition, ReductionError> {
    if w == 0 {
        return Err(ReductionError::ZeroWeight);
    }
    let a = w.trailing_zeros();
    Ok(DyadicDecomposition { w, a, b: (w >> a) / 2 })
}

/// `2π/2^k` for `k = 1..=m`.
pub fn reduction_angles(m: usize) -> Vec<f64> {
    (1..=m).map(|k| TAU / (1u64 << k) as f64).collect()
}

/// `y_k = Rotate(2π/2^k, |x| − shift)` for `k = 1..=⌈log₂(n+1)⌉`.
pub fn or_reduce_stage(al: &mut Alloc, xs: &[QubitId], shift: usize) -> (Block, Vec<QubitId>) {
    weight_rotation_stage(al, xs, &reduction_angles(counter_width(xs.len())), shift as f64)
}

/// A reduction circuit with its input and output registers.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub circuit: Circuit,
    pub inputs: Vec<QubitId>,
    pub outputs: Vec<QubitId>,
}

/// Outputs are all zero exactly when `|x| = t`; otherwise output `a` (0-based)
/// is 1 with certainty, where `||x| − t| = 2^a(2b+1)`.
pub fn exact_reduce_shifted(n: usize, t: usize) -> Reduction {
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let (block, outputs) = or_reduce_stage(&mut al, &inputs, t);
    let mut circuit = al.finish(block, true);
    for &y in &outputs {
        circuit.roles[y] = Role::Output;
    }
    Reduction { circuit, inputs, outputs }
}

pub fn or_reduce(n: usize) -> Reduction {
    exact_reduce_shifted(n, 0)
}

/// Register sizes visited by repeated reduction, from `n` down to at most 2.
pub fn logstar_chain(n: usize) -> Vec<usize> {
    let mut chain = vec![n];
    while *chain.last().unwrap() > 2 {
        let k = counter_width(*chain.last().unwrap());
        chain.push(k);
    }
    chain
}

/// Number of reductions needed to get from `n` to at most 2 qubits.
pub fn log_star(n: usize) -> usize {
    logstar_chain(n).len() - 1
}

fn sqrt_x() -> Unitary2 {
    Unitary2::h().mul(&Unitary2::rz(std::f64::consts::FRAC_PI_2)).mul(&Unitary2::h())
}

/// `t ^= a·b` from controlled square roots of X. Five layers.
pub fn toffoli_block(a: QubitId, b: QubitId, t: QubitId) -> Block {
    let v = sqrt_x();
    Block::from_layers(vec![
        vec![Gate::controlled(v, b, t)],
        vec![Gate::cnot(a, b)],
        vec![Gate::controlled(v.adjoint(), b, t)],
        vec![Gate::cnot(a, b)],
        vec![Gate::controlled(v, a, t)],
    ])
}

/// `out ^= x_0 ∨ x_1` (or `out ^= x_0` for one input).
pub fn or2_block(xs: &[QubitId], out: QubitId) -> Block {
    match xs {
        [a] => Block::layer(vec![Gate::cnot(*a, out)]),
        [a, b] => Block::from_layers(vec![vec![Gate::cnot(*a, out)], vec![Gate::cnot(*b, out)]]).then(toffoli_block(*a, *b, out)),
        _ => panic!("or2_block takes one or two inputs"),
    }
}

/// Or of any number of qubits into fresh ancillas by a balanced tree of two-input Ors.
/// Returns the block and the qubit holding the result.
pub fn or_tree_stage(al: &mut Alloc, xs: &[QubitId]) -> (Block, QubitId) {
    let mut level = xs.to_vec();
    let mut block = Block::new();
    if level.len() == 1 {
        let z = al.one(Role::Ancilla);
        return (or2_block(&level, z), z);
    }
    while level.len() > 1 {
        let mut next = vec![];
        let mut layer = vec![];
        for pair in level.chunks(2) {
            if pair.len() == 1 {
                next.push(pair[0]);
                continue;
            }
            let z = al.one(Role::Ancilla);
            layer.push(or2_block(pair, z));
            next.push(z);
        }
        block = block.then(Block::parallel(layer));
        level = next;
    }
    (block, level[0])
}

/// Reduces repeatedly until at most two qubits remain, then takes their Or exactly.
pub fn or_exact_logstar_stage(al: &mut Alloc, xs: &[QubitId]) -> (Block, QubitId) {
    let mut reg = xs.to_vec();
    let mut block = Block::new();
    while reg.len() > 2 {
        let (b, ys) = or_reduce_stage(al, &reg, 0);
        block = block.then(b);
        reg = ys;
    }
    let z = al.one(Role::Ancilla);
    (block.then(or2_block(&reg, z)), z)
}

/// An Or circuit: the output qubit receives `x ≠ 0` (exactly or with one-sided error).
#[derive(Clone, Debug)]
pub struct OrCircuit {
    pub circuit: Circuit,
    pub inputs: Vec<QubitId>,
    pub output: QubitId,
}

fn compute_copy_uncompute(mut al: Alloc, inputs: Vec<QubitId>, stage: Block, z: QubitId, clean: bool) -> OrCircuit {
    let output = al.one(Role::Output);
    let block = stage.clone().then(Block::layer(vec![Gate::cnot(z, output)])).then(stage.adjoint());
    OrCircuit { circuit: al.finish(block, clean), inputs, output }
}

pub fn or_exact_logstar(n: usize) -> OrCircuit {
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let (stage, z) = or_exact_logstar_stage(&mut al, &inputs);
    compute_copy_uncompute(al, inputs, stage, z, true)
}

/// How the final approximate Or over the surviving qubits is realised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    /// The rotation circuit.
    Real,
    /// An Or permutation oracle carrying the rotation circuit's nominal cost.
    Ideal,
}

/// Rotation-based Or stage (or its idealisation) with the result in the returned qubit.
fn approx_tail(al: &mut Alloc, xs: &[QubitId], tail: Tail) -> (Block, QubitId) {
    let p = OrParams::new(xs.len());
    match tail {
        Tail::Real => {
            let (s1, ys) = weight_rotation_stage(al, xs, &p.angles(), 0.0);
            let (s2, z) = weight_rotation_stage(al, &ys, &[TAU / p.m as f64], 0.0);
            (s1.then(s2), z[0])
        }
        Tail::Ideal => {
            let z = al.one(Role::Ancilla);
            let (depth, size) = p.stats();
            // The compute half: drop the copy CNOT, then halve.
            let g = Gate::Perm(Oracle::new(PermSpec::Or, vec![xs.to_vec(), vec![z]], (depth - 1) / 2, (size - 2) / 2));
            (Block::layer(vec![g]), z)
        }
    }
}

/// Block size for the first level of the blocked reduction, `⌈√n·log₂ n⌉` capped at `n`.
pub fn blocked_size(n: usize) -> usize {
    let nf = n as f64;
    ((nf.sqrt() * nf.log2()).ceil() as usize).clamp(1, n)
}

/// Reduces every block of `size` inputs in parallel; returns the block and the survivors.
pub fn reduce_blocks(al: &mut Alloc, xs: &[QubitId], size: usize) -> (Block, Vec<QubitId>) {
    let mut blocks = vec![];
    let mut survivors = vec![];
    for chunk in xs.chunks(size) {
        let (b, ys) = or_reduce_stage(al, chunk, 0);
        blocks.push(b);
        survivors.extend(ys);
    }
    (Block::parallel(blocks), survivors)
}

/// Positions of the blocked stage, for callers that evaluate it in parts.
#[derive(Clone, Debug)]
pub struct BlockedLayout {
    /// Layers taken by the exact block reductions.
    pub reduction_depth: usize,
    pub survivors: Vec<QubitId>,
}

/// Block reductions, then two independent approximate Ors over (copies of) the
/// survivors, combined by an Or.
pub fn blocked_or_stage(al: &mut Alloc, xs: &[QubitId], tail: Tail) -> (Block, QubitId, BlockedLayout) {
    let (reduce, survivors) = reduce_blocks(al, xs, blocked_size(xs.len()));
    let layout = BlockedLayout { reduction_depth: reduce.depth(), survivors: survivors.clone() };
    if survivors.len() <= 2 {
        let z = al.one(Role::Ancilla);
        return (reduce.then(or2_block(&survivors, z)), z, layout);
    }
    let copy = al.take(Role::Ancilla, survivors.len());
    let fan: Vec<Gate> = survivors.iter().zip(&copy).map(|(&s, &c)| Gate::fanout(s, vec![c])).collect();
    let (t1, z1) = approx_tail(al, &survivors, tail);
    let (t2, z2) = approx_tail(al, &copy, tail);
    let z = al.one(Role::Ancilla);
    let block = reduce.then(Block::layer(fan)).then(t1.beside(t2)).then(or2_block(&[z1, z2], z));
    (block, z, layout)
}

#[derive(Clone, Debug)]
pub struct BlockedOr {
    pub or: OrCircuit,
    pub layout: BlockedLayout,
}

pub fn blocked_or_reduction(n: usize, tail: Tail) -> Result<BlockedOr, ReductionError> {
    if n < 4 {
        return Err(ReductionError::TooSmall(n));
    }
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let (stage, z, layout) = blocked_or_stage(&mut al, &inputs, tail);
    Ok(BlockedOr { or: compute_copy_uncompute(al, inputs, stage, z, tail == Tail::Ideal), layout })
}

/// Probability that a real-tail blocked Or outputs 0 on basis input `x`.
///
/// Conditioned on the survivors' basis value `s`, the two tails act on independent
/// copies of `s`, so the failure is `Σ_s P(s)·f(s)²`, where `P` comes from simulating
/// the block reductions and `f(s)` from simulating one tail on `s`.
pub fn blocked_zero_probability(b: &BlockedOr, x: u64, sim: &Simulator) -> Result<f64, SimError> {
    blocked_zero_probability_with(b, x, sim, &blocked_tail_failures(b, sim)?)
}

/// `f(s)` for every survivor value `s`: the probability that one tail reads 0.
pub fn blocked_tail_failures(b: &BlockedOr, sim: &Simulator) -> Result<Vec<f64>, SimError> {
    let k = b.layout.survivors.len();
    if k <= 2 {
        return Ok((0..1u64 << k).map(|s| (s == 0) as u8 as f64).collect());
    }
    let t = build_or_approx(k);
    (0..1u64 << k)
        .map(|s| {
            let out = sim.run(&t.circuit, &BasisState::zeros(t.circuit.qubit_count).with_register(&t.inputs, s))?;
            Ok(out.marginal_probability(t.output, false))
        })
        .collect()
}

/// [`blocked_zero_probability`] with the tail failures computed once.
pub fn blocked_zero_probability_with(b: &BlockedOr, x: u64, sim: &Simulator, tails: &[f64]) -> Result<f64, SimError> {
    let c = &b.or.circuit;
    let prefix = Circuit::new(c.roles.clone(), c.layers[..b.layout.reduction_depth].to_vec(), false);
    let state = sim.run(&prefix, &BasisState::zeros(c.qubit_count).with_register(&b.or.inputs, x))?;
    Ok(state.register_distribution(&b.layout.survivors).into_iter().map(|(s, p)| p * tails[s as usize].powi(2)).sum())
}

/// `log₂ log₂ … log₂ x` (`d` times), if every step stays positive.
pub fn ilog(d: usize, x: f64) -> Option<f64> {
    let mut v = x;
    for _ in 0..d {
        if v <= 0.0 {
            return None;
        }
        v = v.log2();
    }
    (v > 0.0).then_some(v)
}

/// Stage of the depth-`d` recursion: reduce blocks of `⌈ilog_{d-1}(n)⌉` qubits, then
/// recurse with `d − 1` on the survivors; `base` handles `d = 1`. Levels whose block
/// size cannot shrink a block are skipped.
fn iterated_stage(
    al: &mut Alloc,
    xs: &[QubitId],
    d: usize,
    base: &dyn Fn(&mut Alloc, &[QubitId]) -> (Block, QubitId),
) -> (Block, QubitId) {
    if d <= 1 {
        return base(al, xs);
    }
    let size = ilog(d - 1, xs.len() as f64).map_or(1, |v| v.ceil() as usize);
    if size < 3 || size >= xs.len() {
        return iterated_stage(al, xs, d - 1, base);
    }
    let (reduce, survivors) = reduce_blocks(al, xs, size);
    let (rest, z) = iterated_stage(al, &survivors, d - 1, base);
    (reduce.then(rest), z)
}

fn check_ilog(n: usize, d: usize) -> Result<(), ReductionError> {
    ilog(d, n as f64).map(|_| ()).ok_or(ReductionError::IteratedLog { n, d })
}

/// Or with one-sided error from `d` levels of block reduction over a blocked base.
pub fn iterated_or(n: usize, d: usize, tail: Tail) -> Result<OrCircuit, ReductionError> {
    check_ilog(n, d)?;
    if n < 4 {
        return Err(ReductionError::TooSmall(n));
    }
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let base = |al: &mut Alloc, xs: &[QubitId]| {
        if xs.len() < 4 {
            or_exact_logstar_stage(al, xs)
        } else {
            let (b, z, _) = blocked_or_stage(al, xs, tail);
            (b, z)
        }
    };
    let (stage, z) = iterated_stage(&mut al, &inputs, d, &base);
    Ok(compute_copy_uncompute(al, inputs, stage, z, tail == Tail::Ideal))
}

/// Exact Or: the recursion of [`iterated_or`] over the repeated-reduction base.
pub fn iterated_or_exact(n: usize, d: usize) -> Result<OrCircuit, ReductionError> {
    check_ilog(n, d)?;
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let (stage, z) = iterated_stage(&mut al, &inputs, d, &or_exact_logstar_stage);
    Ok(compute_copy_uncompute(al, inputs, stage, z, true))
}

fn linear_stage(al: &mut Alloc, xs: &[QubitId]) -> (Block, QubitId) {
    let n = xs.len();
    let l = log_star(n).max(1);
    let mut trees = vec![];
    let mut firsts = vec![];
    for chunk in xs.chunks(l) {
        let (b, z) = or_tree_stage(al, chunk);
        trees.push(b);
        firsts.push(z);
    }
    let trees = Block::parallel(trees);
    let (rest, z) = iterated_stage(al, &firsts, l, &or_exact_logstar_stage);
    (trees.then(rest), z)
}

/// Exact Or in linear size: Or trees over blocks of `log* n` inputs, then the
/// exact recursion with `d = log* n` on the block results.
pub fn linear_size_or(n: usize) -> OrCircuit {
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let (stage, z) = linear_stage(&mut al, &inputs);
    compute_copy_uncompute(al, inputs, stage, z, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::analytic_or_failure;
    use crate::sim::StateVector;

    fn run(c: &Circuit, xs: &[QubitId], x: u64) -> StateVector {
        Simulator::default().run(c, &BasisState::zeros(c.qubit_count).with_register(xs, x)).unwrap()
    }

    #[test]
    fn dyadic_examples() {
        assert_eq!(dyadic_decompose(1).unwrap(), DyadicDecomposition { w: 1, a: 0, b: 0 });
        assert_eq!(dyadic_decompose(12).unwrap(), DyadicDecomposition { w: 12, a: 2, b: 1 });
        assert_eq!(dyadic_decompose(0), Err(ReductionError::ZeroWeight));
    }

    #[test]
    fn reduction_certifies_one_qubit() {
        for n in 1..=7 {
            let r = or_reduce(n);
            r.circuit.check().unwrap();
            assert_eq!(r.outputs.len(), counter_width(n));
            for x in 0..1u64 << n {
                let s = run(&r.circuit, &r.inputs, x);
                let z = s.zero_probability(&r.outputs);
                if x == 0 {
                    assert!((z - 1.0).abs() < 1e-9);
                } else {
                    let a = dyadic_decompose(x.count_ones() as u64).unwrap().a as usize;
                    assert!((s.marginal_probability(r.outputs[a], true) - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn shifted_reduction_flags_weight() {
        let r = exact_reduce_shifted(6, 3);
        for x in 0..64u64 {
            let z = run(&r.circuit, &r.inputs, x).zero_probability(&r.outputs);
            let want = if x.count_ones() == 3 { 1.0 } else { 0.0 };
            assert!((z - want).abs() < 1e-9);
        }
    }

    #[test]
    fn chain_matches_direct_loop() {
        assert_eq!(logstar_chain(10), vec![10, 4, 3, 2]);
        assert_eq!(log_star(2), 0);
        assert_eq!(log_star(65536), 4);
    }

    #[test]
    fn toffoli_truth_table() {
        let c = Circuit::new(vec![Role::Input; 3], toffoli_block(0, 1, 2).layers, true);
        let all = [0, 1, 2];
        for x in 0..8u64 {
            let d = run(&c, &all, x).register_distribution(&all);
            let want = x ^ (((x & 1) * ((x >> 1) & 1)) << 2);
            assert!((d[&want] - 1.0).abs() < 1e-9);
        }
    }

    fn assert_exact_or(c: &OrCircuit) {
        let anc = c.circuit.qubits_with_role(Role::Ancilla);
        for x in 0..1u64 << c.inputs.len() {
            let s = run(&c.circuit, &c.inputs, x);
            let want = (x != 0) as u8 as f64;
            assert!((s.marginal_probability(c.output, true) - want).abs() < 1e-9, "x={x}");
            assert!((s.zero_probability(&anc) - 1.0).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn logstar_or_is_exact() {
        for n in [1, 2, 3, 4, 7] {
            assert_exact_or(&or_exact_logstar(n));
        }
    }

    #[test]
    fn linear_and_iterated_exact_ors() {
        for n in [4, 6, 9] {
            assert_exact_or(&linear_size_or(n));
            assert_exact_or(&iterated_or_exact(n, 2).unwrap());
        }
    }

    #[test]
    fn ideal_tails_give_exact_or() {
        for n in [4, 6, 9] {
            assert_exact_or(&blocked_or_reduction(n, Tail::Ideal).unwrap().or);
            assert_exact_or(&iterated_or(n, 2, Tail::Ideal).unwrap());
        }
    }

    #[test]
    fn ideal_tail_cost_matches_real_tail() {
        for n in [4, 9, 16] {
            let real = blocked_or_reduction(n, Tail::Real).unwrap().or.circuit.stats();
            let ideal = blocked_or_reduction(n, Tail::Ideal).unwrap().or.circuit.stats();
            assert_eq!(real.size, ideal.size, "n={n}");
            assert_eq!(real.nominal_depth, ideal.nominal_depth, "n={n}");
        }
    }

    #[test]
    fn factorized_blocked_failure_matches_joint_simulation() {
        let b = blocked_or_reduction(4, Tail::Real).unwrap();
        assert_eq!(b.layout.survivors.len(), 3);
        let sim = Simulator::default();
        for x in 0..16u64 {
            let joint = run(&b.or.circuit, &b.or.inputs, x).marginal_probability(b.or.output, false);
            let split = blocked_zero_probability(&b, x, &sim).unwrap();
            assert!((joint - split).abs() < 1e-9, "x={x}: {joint} vs {split}");
        }
    }

    #[test]
    fn blocked_failure_matches_analytic_tail() {
        let b = blocked_or_reduction(9, Tail::Real).unwrap();
        let k = b.layout.survivors.len();
        let sim = Simulator::default();
        for x in [0u64, 1, 3, 0b101010101, 511] {
            let got = blocked_zero_probability(&b, x, &sim).unwrap();
            let prefix = Circuit::new(b.or.circuit.roles.clone(), b.or.circuit.layers[..b.layout.reduction_depth].to_vec(), false);
            let want: f64 = run(&prefix, &b.or.inputs, x)
                .register_distribution(&b.layout.survivors)
                .into_iter()
                .map(|(s, p)| p * analytic_or_failure(k, s.count_ones() as usize).powi(2))
                .sum();
            assert!((got - want).abs() < 1e-9, "x={x}");
        }
    }
}
