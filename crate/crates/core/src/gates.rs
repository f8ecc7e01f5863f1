//! Constant-depth approximations of Or, exact[t] and threshold[t], and exact counting.

use std::f64::consts::{PI, TAU};

use crate::circuit::{Alloc, Block, Circuit, Gate, QubitId, Role};
use crate::oracle::{Oracle, PermSpec};
use crate::parallelize::rotate_state_block;
use crate::unitary::Unitary2;

/// `⌈log₂ n⌉`, at least 1.
pub fn ceil_log2(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as usize
}

/// Parameters of the Or approximation on `n` inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrParams {
    pub n: usize,
    /// Repetitions, `⌈log₂ n⌉` (at least 1).
    pub a: usize,
    /// Number of rotated ancillas, `a·n`.
    pub m: usize,
}

impl OrParams {
    pub fn new(n: usize) -> Self {
        let a = ceil_log2(n);
        OrParams { n, a, m: a * n }
    }

    /// `2πk/m` for `k = 0..m`.
    pub fn angles(&self) -> Vec<f64> {
        (0..self.m).map(|k| TAU * k as f64 / self.m as f64).collect()
    }

    /// Depth and size of the built circuit, without building it.
    pub fn stats(&self) -> (usize, usize) {
        let (n, m) = (self.n, self.m);
        (21, 12 * m * n + 12 * m + 6)
    }
}

/// Distribution of the number of successes among independent trials.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonBinomial {
    pub probabilities: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PoissonBinomial {
    pub fn new(probabilities: Vec<f64>) -> Self {
        let mut weights = vec![1.0];
        for &p in &probabilities {
            let mut next = vec![0.0; weights.len() + 1];
            for (j, &w) in weights.iter().enumerate() {
                next[j] += w * (1.0 - p);
                next[j + 1] += w * p;
            }
            weights = next;
        }
        PoissonBinomial { probabilities, weights }
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().enumerate().map(|(j, w)| j as f64 * w).sum()
    }
}

/// Law of `|y|` when `y_k` is `Rotate(φ_k, d)` measured in the computational basis.
pub fn rotated_weight_law(p: &OrParams, d: i64) -> PoissonBinomial {
    PoissonBinomial::new(p.angles().iter().map(|phi| (1.0 - (phi * d as f64).cos()) / 2.0).collect())
}

/// Probability that the Or circuit outputs 0 on an input of weight `w`.
pub fn analytic_or_failure(n: usize, w: usize) -> f64 {
    shifted_failure(&OrParams::new(n), w as i64)
}

/// Probability that the output qubit reads 0 when the rotations see weight difference `d`.
pub fn shifted_failure(p: &OrParams, d: i64) -> f64 {
    let law = rotated_weight_law(p, d);
    let m = p.m as f64;
    law.weights.iter().enumerate().map(|(j, w)| w * (1.0 + (TAU * j as f64 / m).cos()) / 2.0).sum()
}

/// Largest failure over nonzero weights.
pub fn max_or_failure(n: usize) -> f64 {
    (1..=n).map(|w| analytic_or_failure(n, w)).fold(0.0, f64::max)
}

/// Prepares `y_k = Rotate(angles[k], |x| − shift)` for every `k` from one input register.
/// The input is fanned out so all rotations share layers. Five layers.
pub fn weight_rotation_stage(al: &mut Alloc, xs: &[QubitId], angles: &[f64], shift: f64) -> (Block, Vec<QubitId>) {
    let n = xs.len();
    let m = angles.len();
    let x_copies: Vec<Vec<QubitId>> = (1..m).map(|_| al.take(Role::Ancilla, n)).collect();
    let ys = al.take(Role::Ancilla, m);
    let fan: Vec<Gate> = if m > 1 {
        (0..n).map(|i| Gate::fanout(xs[i], x_copies.iter().map(|c| c[i]).collect())).collect()
    } else {
        vec![]
    };
    let mut blocks = vec![Block::layer(fan.clone()).then(Block::new().padded(3)).then(Block::layer(fan))];
    for (k, &phi) in angles.iter().enumerate() {
        let controls = if k == 0 { xs.to_vec() } else { x_copies[k - 1].clone() };
        let copies = al.take(Role::Ancilla, n - 1);
        blocks.push(rotate_state_block(&controls, ys[k], &copies, &vec![phi; n], -phi * shift));
    }
    (Block::parallel(blocks), ys)
}

/// An approximate Or / exact[t] circuit with its registers.
#[derive(Clone, Debug)]
pub struct ApproxCircuit {
    pub circuit: Circuit,
    pub params: OrParams,
    pub inputs: Vec<QubitId>,
    pub output: QubitId,
    pub ys: Vec<QubitId>,
    pub z: QubitId,
}

/// Block computing `z = Rotate(2π/m, |y|)` with `y_k = Rotate(φ_k, |x| − shift)`.
fn or_stages(al: &mut Alloc, xs: &[QubitId], p: &OrParams, shift: f64) -> (Block, Vec<QubitId>, QubitId) {
    let (s1, ys) = weight_rotation_stage(al, xs, &p.angles(), shift);
    let (s2, z) = weight_rotation_stage(al, &ys, &[TAU / p.m as f64], 0.0);
    (s1.then(s2), ys, z[0])
}

fn approx(n: usize, t: usize) -> ApproxCircuit {
    let params = OrParams::new(n);
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let output = al.one(Role::Output);
    let (stages, ys, z) = or_stages(&mut al, &inputs, &params, t as f64);
    let block = stages.clone().then(Block::layer(vec![Gate::cnot(z, output)])).then(stages.adjoint());
    ApproxCircuit { circuit: al.finish(block, false), params, inputs, output, ys, z }
}

/// Or with one-sided error: the output is 0 with certainty on `x = 0`.
pub fn build_or_approx(n: usize) -> ApproxCircuit {
    approx(n, 0)
}

/// Output 0 with certainty when `|x| = t`; on other weights it reads 0 with the
/// probability [`shifted_failure`] gives for `|x| − t`.
pub fn build_exact_approx(n: usize, t: usize) -> ApproxCircuit {
    assert!(t <= n, "t out of range");
    approx(n, t)
}

/// How the exact[j] sub-circuits of the threshold circuit are realised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Exact-weight permutation oracles.
    Ideal,
    /// The approximate rotation circuits.
    Stochastic,
}

#[derive(Clone, Debug)]
pub struct ThresholdCircuit {
    pub circuit: Circuit,
    pub inputs: Vec<QubitId>,
    pub output: QubitId,
}

/// `[|x| ≥ t]` as the parity of the indicators `[|x| = j]` for `j = t..=n`.
pub fn build_threshold_approx(n: usize, t: usize, mode: ThresholdMode) -> ThresholdCircuit {
    assert!(t <= n, "t out of range");
    let params = OrParams::new(n);
    let count = n - t + 1;
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let output = al.one(Role::Output);
    let x_copies: Vec<Vec<QubitId>> = (1..count).map(|_| al.take(Role::Ancilla, n)).collect();
    let fan: Vec<Gate> = (0..n).map(|i| Gate::fanout(inputs[i], x_copies.iter().map(|c| c[i]).collect())).collect();
    let mut subs = vec![];
    let mut flags = vec![];
    for j in 0..count {
        let xs = if j == 0 { inputs.clone() } else { x_copies[j - 1].clone() };
        match mode {
            ThresholdMode::Ideal => {
                let r = al.one(Role::Ancilla);
                let (depth, size) = params.stats();
                let spec = PermSpec::ExactWeight { t: t + j };
                subs.push(Block::layer(vec![Gate::Perm(Oracle::new(spec, vec![xs, vec![r]], depth, size))]));
                flags.push(r);
            }
            ThresholdMode::Stochastic => {
                let (b, _, z) = or_stages(&mut al, &xs, &params, (t + j) as f64);
                subs.push(b);
                flags.push(z);
            }
        }
    }
    let compute = Block::parallel(subs);
    let mut block = Block::layer(fan.clone()).then(compute.clone());
    block.push(vec![Gate::parity(flags, output)]);
    // Stochastic flags read 0 on the matching weight, so their parity is off by the count.
    if mode == ThresholdMode::Stochastic && count % 2 == 1 {
        block.push(vec![Gate::one(Unitary2::x(), output)]);
    }
    let block = block.then(compute.adjoint()).then(Block::layer(fan));
    ThresholdCircuit { circuit: al.finish(block, mode == ThresholdMode::Ideal), inputs, output }
}

/// Exact probability that the stochastic threshold circuit errs on weight `w`.
pub fn threshold_error(n: usize, t: usize, w: usize) -> f64 {
    let p = OrParams::new(n);
    let prod: f64 = (t..=n).filter(|&j| j != w).map(|j| 1.0 - 2.0 * shifted_failure(&p, w as i64 - j as i64)).product();
    (1.0 - prod) / 2.0
}

/// Union bound on the threshold error: the sum of the sub-circuit failures.
pub fn threshold_error_bound(n: usize, t: usize, w: usize) -> f64 {
    let p = OrParams::new(n);
    (t..=n).filter(|&j| j != w).map(|j| shifted_failure(&p, w as i64 - j as i64)).sum()
}

/// Angle of qubit `j` in the diagonal form of the increment on `m` qubits.
fn increment_angle(m: usize, j: usize) -> f64 {
    PI / (1u64 << (m - 1 - j)) as f64
}

/// Textbook Fourier transform `|x⟩ → 2^{-m/2} Σ_y e^{2πixy/2^m}|y⟩` from Hadamards,
/// controlled phases and a final qubit reversal.
pub fn fourier_block(qs: &[QubitId]) -> Block {
    let m = qs.len();
    let mut b = Block::new();
    for j in 1..=m {
        let t = qs[m - j];
        b.push(vec![Gate::one(Unitary2::h(), t)]);
        for l in j + 1..=m {
            b.push(vec![Gate::controlled(Unitary2::rz(TAU / (1u64 << (l - j + 1)) as f64), qs[m - l], t)]);
        }
    }
    for i in 0..m / 2 {
        let (a, c) = (qs[i], qs[m - 1 - i]);
        b.push(vec![Gate::cnot(a, c)]);
        b.push(vec![Gate::cnot(c, a)]);
        b.push(vec![Gate::cnot(a, c)]);
    }
    b
}

/// The one-layer diagonal `D` with `F†·D·F` the increment mod `2^m`; `D^b` adds `b`.
pub fn increment_diagonal_block(qs: &[QubitId], b: u64) -> Block {
    let m = qs.len();
    Block::layer((0..m).map(|j| Gate::one(Unitary2::rz(b as f64 * increment_angle(m, j)), qs[j])).collect())
}

/// `D` alone as a circuit on `m` qubits.
pub fn increment_diagonal(m: usize) -> Circuit {
    let qs: Vec<QubitId> = (0..m).collect();
    Circuit::new(vec![Role::Input; m], increment_diagonal_block(&qs, 1).layers, true)
}

/// `F`, then `D^b`, then `F†`: adds `b` modulo `2^m`.
pub fn constant_adder(m: usize, b: u64) -> Circuit {
    let qs: Vec<QubitId> = (0..m).collect();
    let f = fourier_block(&qs);
    let block = f.clone().then(increment_diagonal_block(&qs, b)).then(f.adjoint());
    Circuit::new(vec![Role::Input; m], block.layers, true)
}

/// Counter width for `n` inputs, `⌈log₂(n+1)⌉`.
pub fn counter_width(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QftMode {
    /// Exact textbook transform on the small counter.
    ExactSmall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountingParams {
    pub n: usize,
    pub m: usize,
    pub qft_mode: QftMode,
}

impl CountingParams {
    pub fn new(n: usize) -> Self {
        CountingParams { n, m: counter_width(n), qft_mode: QftMode::ExactSmall }
    }
}

#[derive(Clone, Debug)]
pub struct CountingCircuit {
    pub circuit: Circuit,
    pub inputs: Vec<QubitId>,
    pub counter: Vec<QubitId>,
    pub output: Option<QubitId>,
}

/// Adds `|x| + offset` into `counter` (mod `2^width`): every input controls one
/// increment, all applied at once in the Fourier basis of fanned-out counter copies.
pub fn counting_block(al: &mut Alloc, xs: &[QubitId], counter: &[QubitId], offset: u64) -> Block {
    let n = xs.len();
    let m = counter.len();
    let mut copies = vec![counter.to_vec()];
    for _ in 1..n {
        copies.push(al.take(Role::Ancilla, m));
    }
    let x_copies: Vec<Vec<QubitId>> = xs.iter().map(|_| al.take(Role::Ancilla, m - 1)).collect();
    let mut fan: Vec<Gate> = (0..m).map(|j| Gate::fanout(counter[j], copies[1..].iter().map(|c| c[j]).collect())).collect();
    fan.extend(xs.iter().zip(&x_copies).map(|(&x, c)| Gate::fanout(x, c.clone())));
    let mut rot = vec![];
    for i in 0..n {
        for j in 0..m {
            let c = if j == 0 { xs[i] } else { x_copies[i][j - 1] };
            rot.push(Gate::controlled(Unitary2::rz(increment_angle(m, j)), c, copies[i][j]));
        }
    }
    let f = fourier_block(counter);
    let mut block = f.clone();
    if offset != 0 {
        block = block.then(increment_diagonal_block(counter, offset));
    }
    block.then(Block::from_layers(vec![fan.clone(), rot, fan])).then(f.adjoint())
}

/// Counter ending in `|x|` on every basis input.
pub fn build_counting(params: &CountingParams) -> CountingCircuit {
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, params.n);
    let counter = al.take(Role::Output, params.m);
    let block = counting_block(&mut al, &inputs, &counter, 0);
    CountingCircuit { circuit: al.finish(block, true), inputs, counter, output: None }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReadOut {
    Threshold,
    Exact,
}

/// Threshold or exact indicator from the top bit of a counter one bit wider than
/// needed, started at `2^m − t`: that bit is `[|x| ≥ t]`. Exact uses two counters.
pub fn build_counting_readout(n: usize, t: usize, kind: ReadOut) -> CountingCircuit {
    let m = counter_width(n);
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let output = al.one(Role::Output);
    let shifts: Vec<usize> = match kind {
        ReadOut::Threshold => vec![t],
        ReadOut::Exact => vec![t, t + 1],
    };
    let x_copies: Vec<Vec<QubitId>> = (1..shifts.len()).map(|_| al.take(Role::Ancilla, n)).collect();
    let fan: Vec<Gate> = (0..n).map(|i| Gate::fanout(inputs[i], x_copies.iter().map(|c| c[i]).collect())).collect();
    let mut blocks = vec![];
    let mut tops = vec![];
    let mut counters = vec![];
    for (c, &s) in shifts.iter().enumerate() {
        let counter = al.take(Role::Ancilla, m + 1);
        let xs = if c == 0 { inputs.clone() } else { x_copies[c - 1].clone() };
        let offset = (1u64 << m) - s as u64;
        blocks.push(counting_block(&mut al, &xs, &counter, offset));
        tops.push(counter[m]);
        counters.extend(counter);
    }
    let compute = Block::parallel(blocks);
    let mut block = Block::layer(fan.clone()).then(compute.clone());
    block.push(vec![Gate::parity(tops, output)]);
    let block = block.then(compute.adjoint()).then(Block::layer(fan));
    CountingCircuit { circuit: al.finish(block, true), inputs, counter: counters, output: Some(output) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::DenseSpec;
    use crate::sim::{BasisState, Simulator};

    fn sim() -> Simulator {
        Simulator::default()
    }

    fn run(c: &Circuit, xs: &[QubitId], x: u64) -> crate::sim::StateVector {
        sim().run(c, &BasisState::zeros(c.qubit_count).with_register(xs, x)).unwrap()
    }

    #[test]
    fn poisson_binomial_sums_to_one() {
        let pb = PoissonBinomial::new(vec![0.1, 0.5, 0.9, 0.3]);
        assert!((pb.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((pb.mean() - 1.8).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_never_fails_over() {
        for n in 2..=8 {
            assert_eq!(analytic_or_failure(n, 0), 1.0);
        }
    }

    #[test]
    fn mean_weight_is_half_when_cosines_cancel() {
        let p = OrParams::new(4);
        for w in 1..=4 {
            assert!((rotated_weight_law(&p, w).mean() - p.m as f64 / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stats_formula_matches_built_circuit() {
        for n in 2..=7 {
            let c = build_or_approx(n);
            c.circuit.check().unwrap();
            let s = c.circuit.stats();
            assert_eq!((s.depth, s.size), c.params.stats(), "n={n}");
        }
    }

    #[test]
    fn or_failure_matches_analytic() {
        for n in 2..=4 {
            let c = build_or_approx(n);
            for x in 0..1u64 << n {
                let s = run(&c.circuit, &c.inputs, x);
                let p0 = s.marginal_probability(c.output, false);
                let want = analytic_or_failure(n, x.count_ones() as usize);
                assert!((p0 - want).abs() <= 1e-9, "n={n} x={x} got {p0} want {want}");
            }
        }
    }

    #[test]
    fn exact_is_certain_on_its_weight() {
        let n = 4;
        for t in 0..=n {
            let c = build_exact_approx(n, t);
            for x in 0..16u64 {
                let s = run(&c.circuit, &c.inputs, x);
                let p0 = s.marginal_probability(c.output, false);
                let w = x.count_ones() as i64;
                assert!((p0 - shifted_failure(&c.params, w - t as i64)).abs() <= 1e-9);
                if w == t as i64 {
                    assert!((p0 - 1.0).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn ideal_threshold_truth_table() {
        for n in 1..=4 {
            for t in 0..=n {
                let c = build_threshold_approx(n, t, ThresholdMode::Ideal);
                for x in 0..1u64 << n {
                    let p1 = run(&c.circuit, &c.inputs, x).marginal_probability(c.output, true);
                    let want = (x.count_ones() as usize >= t) as u8 as f64;
                    assert!((p1 - want).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn stochastic_threshold_error_is_exact() {
        let n = 3;
        for t in 1..=n {
            let c = build_threshold_approx(n, t, ThresholdMode::Stochastic);
            for w in 0..=n {
                let x = (1u64 << w) - 1;
                let p1 = run(&c.circuit, &c.inputs, x).marginal_probability(c.output, true);
                let err = if w >= t { 1.0 - p1 } else { p1 };
                assert!((err - threshold_error(n, t, w)).abs() < 1e-9, "t={t} w={w}");
                assert!(err <= threshold_error_bound(n, t, w) + 1e-12);
            }
        }
    }

    #[test]
    fn fourier_block_matches_dense_transform() {
        for m in 1..=4 {
            let qs: Vec<QubitId> = (0..m).collect();
            let c = Circuit::new(vec![Role::Input; m], fourier_block(&qs).layers, true);
            let dense = Circuit::new(
                vec![Role::Input; m],
                vec![crate::circuit::Layer::new(vec![Gate::Unitary(Oracle::unit(DenseSpec::Fourier { q: 1 << m }, vec![qs]))])],
                true,
            );
            assert!(sim().unitary_distance(&c, &dense).unwrap() < 1e-9);
        }
    }

    #[test]
    fn increment_diagonalises() {
        for m in 1..=4 {
            let c = constant_adder(m, 1);
            let qs: Vec<QubitId> = (0..m).collect();
            for x in 0..1u64 << m {
                let d = run(&c, &qs, x).register_distribution(&qs);
                assert!((d[&((x + 1) % (1 << m))] - 1.0).abs() < 1e-9);
            }
        }
        let qs: Vec<QubitId> = (0..4).collect();
        let d = run(&constant_adder(4, 5), &qs, 12).register_distribution(&qs);
        assert!((d[&1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn counting_is_exact_and_clean() {
        for n in 1..=5 {
            let c = build_counting(&CountingParams::new(n));
            let anc = c.circuit.qubits_with_role(Role::Ancilla);
            for x in 0..1u64 << n {
                let s = run(&c.circuit, &c.inputs, x);
                assert!((s.register_distribution(&c.counter)[&(x.count_ones() as u64)] - 1.0).abs() < 1e-9);
                assert!((s.zero_probability(&anc) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn counting_readouts() {
        for n in 1..=4 {
            for t in 0..=n {
                for kind in [ReadOut::Threshold, ReadOut::Exact] {
                    let c = build_counting_readout(n, t, kind);
                    for x in 0..1u64 << n {
                        let w = x.count_ones() as usize;
                        let want = match kind {
                            ReadOut::Threshold => w >= t,
                            ReadOut::Exact => w == t,
                        };
                        let p1 = run(&c.circuit, &c.inputs, x).marginal_probability(c.output.unwrap(), true);
                        assert!((p1 - want as u8 as f64).abs() < 1e-9, "n={n} t={t} x={x} {kind:?}");
                    }
                }
            }
        }
    }
}
