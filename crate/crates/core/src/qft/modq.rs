//! Fourier transform mod an arbitrary `q`, through the power-of-two transform on
//! `N = 3n` qubits and integer division by `u = ⌊2^N/q⌋`.

use rand::Rng;
use num_complex::Complex64 as C64;
use std::collections::HashMap;

use super::pow2::Branches;
use super::{fourier_state, qfs_block};
use crate::circuit::{Alloc, Block, Circuit, Gate, QubitId, Role};
use crate::oracle::{bits_for, round_div, DenseSpec, Oracle, PermSpec};
use crate::sim::{BasisState, SimError, Simulator, StateVector};
use crate::unitary::Unitary2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QftParams {
    pub q: u64,
    pub n: usize,
    /// Width of the power-of-two transform, `3n`.
    pub big_n: usize,
    pub u: u64,
    /// `2^N − q·u`.
    pub v: u64,
    /// Copies used by the read-out.
    pub m: usize,
    pub eps: f64,
}

/// `⌈4·log₂(2n/ε)⌉`, rounded up to even.
pub fn default_copies(n: usize, eps: f64) -> usize {
    let m = (4.0 * (2.0 * n as f64 / eps).log2()).ceil() as usize;
    (m + m % 2).max(2)
}

impl QftParams {
    pub fn new(q: u64) -> Self {
        let n = bits_for(q).max(1);
        Self::with_copies(q, default_copies(n, 1.0 / n as f64))
    }

    pub fn with_copies(q: u64, m: usize) -> Self {
        Self::with_width(q, 3 * bits_for(q), m)
    }

    /// Parameters with a power-of-two width other than `3n`.
    pub fn with_width(q: u64, big_n: usize, m: usize) -> Self {
        assert!(q >= 2, "modulus must be at least 2");
        let n = bits_for(q);
        assert!(big_n >= n, "width below the modulus width");
        let u = (1u64 << big_n) / q;
        QftParams { q, n, big_n, u, v: (1u64 << big_n) - q * u, m, eps: 1.0 / n as f64 }
    }

    /// Width of the quotient register: holds `0..=q` when `v > 0`.
    pub fn quotient_bits(&self) -> usize {
        if self.v == 0 {
            self.n
        } else {
            bits_for(self.q + 1)
        }
    }

    /// Qubits added to the `N`-qubit register so quotient and remainder both fit.
    pub fn spare_bits(&self) -> usize {
        (self.quotient_bits() + bits_for(self.u)).saturating_sub(self.big_n)
    }

    pub fn copy_width(&self) -> usize {
        self.big_n + self.spare_bits()
    }

    /// Norm of the branch where the quotient equals `q`: `√(v/2^N)`.
    pub fn neglected_norm(&self) -> f64 {
        (self.v as f64 / (1u64 << self.big_n) as f64).sqrt()
    }

    fn divide(&self, reg: &[QubitId]) -> Gate {
        let spec = PermSpec::DivFloor { divisor: self.u, quotient_bits: self.quotient_bits(), source_bits: self.big_n };
        Gate::Perm(Oracle::unit(spec, vec![reg[..self.big_n].to_vec(), reg[self.big_n..].to_vec()]))
    }
}

/// Quotient part of a copy register.
pub fn quotient<'a>(p: &QftParams, reg: &'a [QubitId]) -> &'a [QubitId] {
    &reg[..p.quotient_bits()]
}

/// Power-of-two Fourier state of `x` on the first `N` qubits of `reg`, then division by `u`.
pub fn qfs_q_block(al: &mut Alloc, p: &QftParams, xs: &[QubitId], reg: &[QubitId]) -> Block {
    qfs_block(al, xs, &reg[..p.big_n]).then(Block::layer(vec![p.divide(reg)]))
}

/// The state-preparation block on input 0: Hadamards, then division.
pub fn qfs_q_zero_block(p: &QftParams, reg: &[QubitId]) -> Block {
    Block::layer(reg[..p.big_n].iter().map(|&q| Gate::one(Unitary2::h(), q)).collect()).then(Block::layer(vec![p.divide(reg)]))
}

#[derive(Clone, Debug)]
pub struct QfsQCircuit {
    pub circuit: Circuit,
    pub params: QftParams,
    pub inputs: Vec<QubitId>,
    /// Quotient qubits first, then remainder.
    pub register: Vec<QubitId>,
}

pub fn qfs_q(p: &QftParams) -> QfsQCircuit {
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, p.n);
    let register = al.take(Role::Output, p.copy_width());
    let block = qfs_q_block(&mut al, p, &inputs, &register);
    QfsQCircuit { circuit: al.finish(block, true), params: *p, inputs, register }
}

/// Prepares every fresh copy on input 0, then subtracts their quotients from `source`'s mod `q`.
pub fn copy_q_block(p: &QftParams, source: &[QubitId], fresh: &[Vec<QubitId>]) -> Block {
    let prep = Block::parallel(fresh.iter().map(|r| qfs_q_zero_block(p, r)).collect());
    let mut regs: Vec<Vec<QubitId>> = fresh.iter().map(|r| quotient(p, r).to_vec()).collect();
    regs.push(quotient(p, source).to_vec());
    prep.then(Block::layer(vec![Gate::Perm(Oracle::unit(PermSpec::AddMod { q: p.q }, regs).adjointed())]))
}

/// Per-copy read-out registers.
#[derive(Clone, Debug)]
pub struct ReadoutRegisters {
    pub pad: Vec<QubitId>,
    pub estimate: Vec<QubitId>,
}

/// Zero-extends the quotient to `N` qubits, applies the inverse transform mod `2^N`
/// and writes `⌊zq/2^N + ½⌋ mod q` into the estimate register.
pub fn qfp_q_copy_block(p: &QftParams, reg: &[QubitId], r: &ReadoutRegisters) -> Block {
    let mut ext = quotient(p, reg).to_vec();
    ext.extend(&r.pad);
    let f = Oracle::unit(DenseSpec::Fourier { q: 1 << p.big_n }, vec![ext.clone()]);
    Block::layer(vec![Gate::Unitary(f.adjointed())])
        .then(Block::layer(vec![Gate::Perm(Oracle::unit(PermSpec::RoundDiv { q: p.q }, vec![ext, r.estimate.clone()]))]))
}

fn readout_registers(al: &mut Alloc, p: &QftParams) -> ReadoutRegisters {
    ReadoutRegisters { pad: al.take(Role::Ancilla, p.big_n - p.quotient_bits()), estimate: al.take(Role::Ancilla, p.n) }
}

/// Per-copy read-out on every copy, bitwise majority of the estimates into `target`, uncompute.
pub fn qfp_q_block(p: &QftParams, copies: &[Vec<QubitId>], readouts: &[ReadoutRegisters], target: &[QubitId]) -> Block {
    let per = Block::parallel(copies.iter().zip(readouts).map(|(c, r)| qfp_q_copy_block(p, c, r)).collect());
    let mut regs: Vec<Vec<QubitId>> = readouts.iter().map(|r| r.estimate.clone()).collect();
    regs.push(target.to_vec());
    let vote = Block::layer(vec![Gate::Perm(Oracle::unit(PermSpec::BitMajority, regs))]);
    per.clone().then(vote).then(per.adjoint())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Exact Fourier oracles mod `q` for preparation and read-out.
    Ideal,
    /// Preparation through division, read-out by rounding and bitwise majority.
    Stochastic,
}

#[derive(Clone, Debug)]
pub struct QftQCircuit {
    pub circuit: Circuit,
    pub params: QftParams,
    pub input: Vec<QubitId>,
    /// Register holding `Φ_x` at the end.
    pub output: Vec<QubitId>,
}

/// `|x⟩ → Φ_x` mod `q`: prepare, make `m` more copies, unprepare the first, erase `x`
/// with the read-out, uncopy. Requires `m ≥ 1`.
pub fn qft_q(p: &QftParams, stage: Stage) -> QftQCircuit {
    let mut al = Alloc::new();
    let input = al.take(Role::Input, p.n);
    match stage {
        Stage::Ideal => {
            let f = |r: &[QubitId]| Gate::Unitary(Oracle::unit(DenseSpec::Fourier { q: p.q }, vec![r.to_vec()]));
            let r0 = al.take(Role::Ancilla, p.n);
            let copies: Vec<Vec<QubitId>> = (0..p.m).map(|_| al.take(Role::Ancilla, p.n)).collect();
            let prepare = Block::from_layers(vec![input.iter().zip(&r0).map(|(&a, &b)| Gate::cnot(a, b)).collect(), vec![f(&r0)]]);
            let copy = |src: &[QubitId], fresh: &[Vec<QubitId>]| {
                let mut regs = fresh.to_vec();
                regs.push(src.to_vec());
                Block::layer(fresh.iter().map(|r| f(r)).collect())
                    .then(Block::layer(vec![Gate::Perm(Oracle::unit(PermSpec::AddMod { q: p.q }, regs).adjointed())]))
            };
            let read = Block::from_layers(vec![
                vec![match f(&copies[0]) {
                    Gate::Unitary(o) => Gate::Unitary(o.adjointed()),
                    _ => unreachable!(),
                }],
                copies[0].iter().zip(&input).map(|(&a, &b)| Gate::cnot(a, b)).collect(),
                vec![f(&copies[0])],
            ]);
            let block = prepare
                .clone()
                .then(copy(&r0, &copies))
                .then(prepare.adjoint())
                .then(read)
                .then(copy(&copies[0], &copies[1..]).adjoint());
            let mut circuit = al.finish(block, true);
            for &q in &copies[0] {
                circuit.roles[q] = Role::Output;
            }
            QftQCircuit { circuit, params: *p, input, output: copies[0].clone() }
        }
        Stage::Stochastic => {
            let r0 = al.take(Role::Ancilla, p.copy_width());
            let copies: Vec<Vec<QubitId>> = (0..p.m).map(|_| al.take(Role::Ancilla, p.copy_width())).collect();
            let readouts: Vec<ReadoutRegisters> = (0..p.m).map(|_| readout_registers(&mut al, p)).collect();
            let prepare = qfs_q_block(&mut al, p, &input, &r0);
            let block = prepare
                .clone()
                .then(copy_q_block(p, &r0, &copies))
                .then(prepare.adjoint())
                .then(qfp_q_block(p, &copies, &readouts, &input))
                .then(copy_q_block(p, &copies[0], &copies[1..]).adjoint());
            let output = quotient(p, &copies[0]).to_vec();
            let mut circuit = al.finish(block, false);
            for &q in &output {
                circuit.roles[q] = Role::Output;
            }
            QftQCircuit { circuit, params: *p, input, output }
        }
    }
}

/// One copy as the pipeline leaves it before the read-out, followed by its own read-out.
#[derive(Clone, Debug)]
pub struct CopyModel {
    pub circuit: Circuit,
    pub input: Vec<QubitId>,
    pub copy: Vec<QubitId>,
    pub readout: ReadoutRegisters,
    /// Layers before the read-out starts.
    pub prefix_depth: usize,
}

/// Preparation, a single copy, unpreparation, then that copy's read-out.
pub fn copy_model(p: &QftParams) -> CopyModel {
    let mut al = Alloc::new();
    let input = al.take(Role::Input, p.n);
    let r0 = al.take(Role::Ancilla, p.copy_width());
    let copy = al.take(Role::Ancilla, p.copy_width());
    let readout = readout_registers(&mut al, p);
    let prepare = qfs_q_block(&mut al, p, &input, &r0);
    let prefix = prepare.clone().then(copy_q_block(p, &r0, std::slice::from_ref(&copy))).then(prepare.adjoint());
    let prefix_depth = prefix.depth();
    let block = prefix.then(qfp_q_copy_block(p, &copy, &readout));
    CopyModel { circuit: al.finish(block, false), input, copy, readout, prefix_depth }
}

/// Single-copy statistics on basis input `x`.
#[derive(Clone, Debug)]
pub struct CopyStatistics {
    /// `⟨Φ_x|ρ|Φ_x⟩` of the copy's quotient register before the read-out.
    pub fidelity: f64,
    /// Estimate values with their probabilities.
    pub estimates: Vec<(u64, f64)>,
    /// `gram[a][b] = ⟨w_a|w_b⟩`, where `w_t` is the copy projected onto estimate `t`,
    /// read-out undone, and contracted with `Φ_x` on the quotient register.
    pub gram: Vec<Vec<C64>>,
}

/// The read-out of one copy is `F†` on quotient and pad followed by rounding into the
/// estimate, so projecting on estimate `t` and undoing the read-out is `F·Π_t·F†`,
/// with `Π_t` diagonal on the values that round to `t`. The Gram entries are then
/// sums over the Fourier-side values of each class.
pub fn copy_statistics(p: &QftParams, x: u64, sim: &Simulator) -> Result<CopyStatistics, SimError> {
    let model = copy_model(p);
    let c = &model.circuit;
    let prefix = Circuit::new(c.roles.clone(), c.layers[..model.prefix_depth].to_vec(), false);
    let mid = sim.run(&prefix, &BasisState::zeros(c.qubit_count).with_register(&model.input, x))?;
    let q = quotient(p, &model.copy);
    let phi = fourier_state(p.q, x, q.len());
    let fidelity = mid.register_fidelity(q, &phi);
    debug_assert!(mid.zero_probability(&model.readout.pad) > 1.0 - 1e-9);

    let dim = 1usize << p.big_n;
    let fdag = DenseSpec::Fourier { q: dim as u64 }.matrix(p.big_n, true);
    let class: Vec<u64> = (0..dim as u64).map(|y| round_div(y, p.q, p.big_n)).collect();
    let qdim = 1usize << q.len();
    // F† applied to Φ_x sitting at each pad value.
    let targets: Vec<Vec<C64>> = (0..dim / qdim)
        .map(|pad| (0..dim).map(|y| (0..qdim).map(|v| fdag[(y, v | (pad * qdim))] * phi[v]).sum()).collect())
        .collect();

    let mut probs = vec![0.0; p.q as usize];
    let mut gram = vec![vec![C64::default(); p.q as usize]; p.q as usize];
    let mut w = vec![C64::default(); p.q as usize];
    for slice in mid.slices(q) {
        let g: Vec<C64> = (0..dim).map(|y| slice.iter().map(|&(v, a)| fdag[(y, v as usize)] * a).sum()).collect();
        for (y, a) in g.iter().enumerate() {
            probs[class[y] as usize] += a.norm_sqr();
        }
        for t in &targets {
            w.iter_mut().for_each(|z| *z = C64::default());
            for y in 0..dim {
                w[class[y] as usize] += t[y].conj() * g[y];
            }
            for (a, wa) in w.iter().enumerate() {
                for (b, wb) in w.iter().enumerate() {
                    gram[a][b] += wa.conj() * wb;
                }
            }
        }
    }
    let keep: Vec<usize> = (0..p.q as usize).filter(|&t| probs[t] > 1e-30).collect();
    Ok(CopyStatistics {
        fidelity,
        estimates: keep.iter().map(|&t| (t as u64, probs[t])).collect(),
        gram: keep.iter().map(|&a| keep.iter().map(|&b| gram[a][b]).collect()).collect(),
    })
}

/// Bitwise strict majority.
pub fn bit_majority(values: &[u64], bits: usize) -> u64 {
    (0..bits).filter(|&b| 2 * values.iter().filter(|&&v| (v >> b) & 1 == 1).count() > values.len()).map(|b| 1 << b).sum()
}

/// Outcome of the factorised evaluation of the stochastic pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QftQFidelity {
    /// Output-register fidelity with `Φ_x`.
    pub output: f64,
    /// Probability that the majority equals `x`.
    pub success: f64,
}

fn sample(dist: &[(u64, f64)], rng: &mut impl Rng) -> u64 {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for &(v, p) in dist {
        acc += p;
        if r < acc {
            return v;
        }
    }
    dist.last().unwrap().0
}

/// Collision and success terms for fixed estimates of copies `2..m`, summed exactly over copy 1.
fn branch_terms(p: &QftParams, x: u64, stats: &CopyStatistics, values: &mut [u64]) -> (f64, f64) {
    let mut classes: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, &(v, _)) in stats.estimates.iter().enumerate() {
        values[0] = v;
        classes.entry(bit_majority(values, p.n)).or_default().push(i);
    }
    let overlap: f64 = classes.values().map(|c| c.iter().flat_map(|&a| c.iter().map(move |&b| (a, b))).map(|(a, b)| stats.gram[a][b].re).sum::<f64>()).sum();
    let success = classes.get(&x).map_or(0.0, |c| c.iter().map(|&i| stats.estimates[i].1).sum());
    (overlap, success)
}

/// Copy-by-copy evaluation: every copy is modelled by [`copy_statistics`]; the
/// estimates of copies `2..m` are enumerated or sampled. For each branch the output
/// copy's components are grouped by the majority they produce, and the output
/// fidelity adds up the squared norm of each group's contraction with `Φ_x`.
pub fn qft_q_fidelity_factorized<R: Rng>(p: &QftParams, x: u64, stats: &CopyStatistics, branches: Branches<R>) -> QftQFidelity {
    let dist = &stats.estimates;
    let (mut col, mut suc) = (0.0, 0.0);
    let mut values = vec![0u64; p.m];
    match branches {
        Branches::Exact => {
            let k = dist.len();
            for code in 0..k.pow(p.m as u32 - 1) {
                let mut w = 1.0;
                let mut c = code;
                for v in values.iter_mut().skip(1) {
                    let (val, pr) = dist[c % k];
                    *v = val;
                    w *= pr;
                    c /= k;
                }
                let (a, b) = branch_terms(p, x, stats, &mut values);
                col += w * a;
                suc += w * b;
            }
        }
        Branches::Sampled { trials, rng } => {
            for _ in 0..trials {
                for v in values.iter_mut().skip(1) {
                    *v = sample(dist, rng);
                }
                let (a, b) = branch_terms(p, x, stats, &mut values);
                col += a / trials as f64;
                suc += b / trials as f64;
            }
        }
    }
    QftQFidelity { output: col, success: suc }
}

/// Fidelity of the output register of a simulated pipeline with `Φ_x`.
pub fn output_fidelity(c: &QftQCircuit, state: &StateVector, x: u64) -> f64 {
    state.register_fidelity(&c.output, &fourier_state(c.params.q, x, c.output.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    /// Same statistics by simulating the read-out forward and back per estimate.
    fn simulated_statistics(p: &QftParams, x: u64, sim: &Simulator) -> CopyStatistics {
        let model = copy_model(p);
        let c = &model.circuit;
        let prefix = Circuit::new(c.roles.clone(), c.layers[..model.prefix_depth].to_vec(), false);
        let mid = sim.run(&prefix, &BasisState::zeros(c.qubit_count).with_register(&model.input, x)).unwrap();
        let q = quotient(p, &model.copy);
        let phi = fourier_state(p.q, x, q.len());
        let read = Circuit::new(c.roles.clone(), c.layers[model.prefix_depth..].to_vec(), false);
        let end = sim.run_state(&read, mid.clone()).unwrap();
        let mut estimates = vec![];
        let mut ws = vec![];
        for (t, pr) in end.register_distribution(&model.readout.estimate) {
            estimates.push((t, pr));
            ws.push(sim.run_state(&read.inverse(), end.project(&model.readout.estimate, t)).unwrap().contract(q, &phi));
        }
        let gram = ws.iter().map(|a| ws.iter().map(|b| a.inner(b)).collect()).collect();
        CopyStatistics { fidelity: mid.register_fidelity(q, &phi), estimates, gram }
    }

    #[test]
    fn closed_form_statistics_match_simulation() {
        let sim = Simulator::default();
        for (q, big_n) in [(3, 4), (5, 5), (4, 4)] {
            let p = QftParams::with_width(q, big_n, 2);
            for x in 0..q {
                let a = copy_statistics(&p, x, &sim).unwrap();
                let b = simulated_statistics(&p, x, &sim);
                assert!((a.fidelity - b.fidelity).abs() < 1e-9);
                let ta: Vec<u64> = a.estimates.iter().map(|e| e.0).collect();
                let tb: Vec<u64> = b.estimates.iter().filter(|e| e.1 > 1e-20).map(|e| e.0).collect();
                assert_eq!(ta, tb);
                for (i, ea) in a.estimates.iter().enumerate() {
                    assert!((ea.1 - b.estimates[i].1).abs() < 1e-9);
                    for j in 0..ta.len() {
                        assert!((a.gram[i][j] - b.gram[i][j]).norm() < 1e-9, "q={q} x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn params_for_small_moduli() {
        let p = QftParams::with_copies(3, 2);
        assert_eq!((p.n, p.big_n, p.u, p.v), (2, 6, 21, 1));
        let p = QftParams::with_copies(8, 2);
        assert_eq!((p.u, p.v, p.quotient_bits()), (64, 0, 3));
    }

    #[test]
    fn neglected_branch_has_predicted_norm() {
        let sim = Simulator::default();
        for q in [3, 5] {
            let p = QftParams::with_copies(q, 2);
            let c = qfs_q(&p);
            for x in 0..q {
                let s = sim.run(&c.circuit, &BasisState::zeros(c.circuit.qubit_count).with_register(&c.inputs, x)).unwrap();
                let w = s.register_distribution(quotient(&p, &c.register)).get(&q).copied().unwrap_or(0.0).sqrt();
                assert!((w - p.neglected_norm()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ideal_pipeline_is_exact() {
        let sim = Simulator::default();
        for q in [2, 3, 5] {
            let p = QftParams::with_copies(q, 2);
            let c = qft_q(&p, Stage::Ideal);
            for x in 0..q {
                let s = sim.run(&c.circuit, &BasisState::zeros(c.circuit.qubit_count).with_register(&c.input, x)).unwrap();
                assert!((output_fidelity(&c, &s, x) - 1.0).abs() < 1e-9);
                assert!((s.zero_probability(&c.circuit.qubits_with_role(Role::Ancilla)) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn factorized_model_tracks_joint_simulation() {
        let sim = Simulator::default();
        for (q, big_n) in [(4, 4), (2, 3), (3, 4), (3, 5), (5, 5)] {
            let p = QftParams::with_width(q, big_n, 2);
            let c = qft_q(&p, Stage::Stochastic);
            for x in 0..q {
                let s = sim.run(&c.circuit, &BasisState::zeros(c.circuit.qubit_count).with_register(&c.input, x)).unwrap();
                let joint = output_fidelity(&c, &s, x);
                let stats = copy_statistics(&p, x, &sim).unwrap();
                let model = qft_q_fidelity_factorized::<ChaCha8Rng>(&p, x, &stats, Branches::Exact);
                let tol = if p.v == 0 { 1e-9 } else { p.m as f64 * p.neglected_norm().powi(2) };
                assert!((joint - model.output).abs() <= tol, "q={q} N={big_n} x={x}: {joint} vs {}", model.output);
            }
        }
    }
}
