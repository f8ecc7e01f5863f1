//! Fourier transform mod `2^n`: prepare the Fourier state, copy it, erase the
//! input with a read-out from the copies, and uncopy.

use num_complex::Complex64 as C64;
use rand::Rng;
use std::collections::HashMap;

use super::qfp::{decode_records, outcome_probabilities};
use super::{fourier_state, qfs_block};
use crate::circuit::{Alloc, Block, Circuit, Gate, QubitId, Role};
use crate::oracle::{DenseSpec, Oracle, PermSpec};
use crate::sim::{Basis, BasisState, SimError, Simulator, StateVector};
use crate::unitary::Unitary2;

#[derive(Clone, Debug)]
pub struct QfsCircuit {
    pub circuit: Circuit,
    pub inputs: Vec<QubitId>,
    pub outputs: Vec<QubitId>,
}

/// `|x⟩|0⟩ → |x⟩|Φ_x⟩` mod `2^n` in constant depth.
pub fn qfs(n: usize) -> QfsCircuit {
    let mut al = Alloc::new();
    let inputs = al.take(Role::Input, n);
    let outputs = al.take(Role::Output, n);
    let block = qfs_block(&mut al, &inputs, &outputs);
    QfsCircuit { circuit: al.finish(block, true), inputs, outputs }
}

/// Prepares `Φ_0` on every fresh register, then subtracts all of them from `source`
/// mod `q`. A Fourier state in `source` is copied onto every fresh register.
pub fn copy_block(q: u64, source: &[QubitId], fresh: &[Vec<QubitId>]) -> Block {
    let prep = fresh.iter().flatten().map(|&f| Gate::one(Unitary2::h(), f)).collect();
    let mut regs = fresh.to_vec();
    regs.push(source.to_vec());
    let add = Oracle::unit(PermSpec::AddMod { q }, regs).adjointed();
    Block::from_layers(vec![prep, vec![Gate::Perm(add)]])
}

#[derive(Clone, Debug)]
pub struct CopyCircuit {
    pub circuit: Circuit,
    /// `registers[0]` is the source.
    pub registers: Vec<Vec<QubitId>>,
}

/// Copies a Fourier state mod `2^n` from the input register onto `m − 1` fresh registers.
pub fn copy_fourier(n: usize, m: usize) -> CopyCircuit {
    let mut al = Alloc::new();
    let source = al.take(Role::Input, n);
    let fresh: Vec<Vec<QubitId>> = (1..m).map(|_| al.take(Role::Output, n)).collect();
    let block = copy_block(1 << n, &source, &fresh);
    let mut registers = vec![source];
    registers.extend(fresh);
    CopyCircuit { circuit: al.finish(block, true), registers }
}

/// The first half of the copies is read in the `{|0.01⟩, |0.11⟩}` basis, the rest in the Hadamard basis.
pub fn measurement_basis(copy: usize, m: usize) -> Basis {
    if copy < m / 2 {
        Basis::PhasePiOver2
    } else {
        Basis::Hadamard
    }
}

/// Reversible read-out: rotate every copy into its measurement basis, xor the decoded
/// estimate into `target` (and the undecided marker into `flag`), rotate back.
pub fn qfp_coherent_block(copies: &[Vec<QubitId>], target: &[QubitId], flag: QubitId) -> Block {
    let m = copies.len();
    let rotate: Vec<Gate> = copies
        .iter()
        .enumerate()
        .flat_map(|(c, reg)| {
            let u = measurement_basis(c, m).change().adjoint();
            reg.iter().map(move |&q| Gate::one(u, q))
        })
        .collect();
    let mut regs = copies.to_vec();
    regs.push(target.to_vec());
    regs.push(vec![flag]);
    let n = target.len();
    let decode = Gate::Perm(Oracle::unit(PermSpec::QfpDecode { n, m }, regs));
    let back = Block::layer(rotate.clone()).adjoint();
    Block::layer(rotate).then(Block::layer(vec![decode])).then(back)
}

/// Exact read-out: inverse Fourier transform on one copy, copy its bits into `target`, transform back.
pub fn qfp_ideal_block(copy: &[QubitId], target: &[QubitId]) -> Block {
    let q = 1u64 << copy.len();
    let f = Oracle::unit(DenseSpec::Fourier { q }, vec![copy.to_vec()]);
    Block::from_layers(vec![
        vec![Gate::Unitary(f.adjointed())],
        copy.iter().zip(target).map(|(&c, &t)| Gate::cnot(c, t)).collect(),
        vec![Gate::Unitary(f)],
    ])
}

/// How the pipeline erases the input register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Readout {
    /// Exact inverse-Fourier read-out of one copy.
    Ideal,
    /// Majority vote over measurement-basis records of all copies, done reversibly.
    Majority,
}

#[derive(Clone, Debug)]
pub struct QftCircuit {
    pub circuit: Circuit,
    pub input: Vec<QubitId>,
    pub output: Vec<QubitId>,
    /// `copies[0]` is the output register.
    pub copies: Vec<Vec<QubitId>>,
    pub flag: Option<QubitId>,
}

/// `|x⟩|0⟩ → |0⟩|Φ_x⟩` through `m` copies of the Fourier state.
pub fn qft_pow2(n: usize, m: usize, readout: Readout) -> QftCircuit {
    let mut al = Alloc::new();
    let input = al.take(Role::Input, n);
    let output = al.take(Role::Output, n);
    let fresh: Vec<Vec<QubitId>> = (1..m).map(|_| al.take(Role::Ancilla, n)).collect();
    let mut copies = vec![output.clone()];
    copies.extend(fresh.iter().cloned());
    let prepare = qfs_block(&mut al, &input, &output);
    let copy = copy_block(1 << n, &output, &fresh);
    let (erase, flag) = match readout {
        Readout::Ideal => (qfp_ideal_block(&output, &input), None),
        Readout::Majority => {
            let flag = al.one(Role::Ancilla);
            (qfp_coherent_block(&copies, &input, flag), Some(flag))
        }
    };
    let block = prepare.then(copy.clone()).then(erase).then(copy.adjoint());
    let circuit = al.finish(block, readout == Readout::Ideal);
    QftCircuit { circuit, input, output, copies, flag }
}

/// The ideal pipeline output: `Φ_x` on the output register, every other qubit 0.
pub fn ideal_output(c: &QftCircuit, x: u64) -> StateVector {
    let n = c.output.len();
    let terms: Vec<(BasisState, C64)> = fourier_state(1 << n, x, n)
        .into_iter()
        .enumerate()
        .map(|(y, a)| (BasisState::zeros(c.circuit.qubit_count).with_register(&c.output, y as u64), a))
        .collect();
    StateVector::from_terms(c.circuit.qubit_count, &terms)
}

/// Per register qubit: probability of bit 1 in the phase basis and of `N` in the Hadamard basis.
pub fn register_outcome_probabilities(state: &StateVector, reg: &[QubitId]) -> Vec<(f64, f64)> {
    reg.iter()
        .map(|&q| {
            let one = |b: Basis| state.outcome_distribution(&[(q, b)]).get(&vec![true]).copied().unwrap_or(0.0);
            (one(Basis::PhasePiOver2), one(Basis::Hadamard))
        })
        .collect()
}

/// How a read-out obtains its measurement records.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QfpMode {
    /// Measure a simulated copy of the Fourier state, collapsing it.
    Collapse,
    /// Sample each qubit from its exact single-qubit marginal.
    Marginal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QfpOutcome {
    pub estimate: u64,
    pub flagged: bool,
    pub records: Vec<u64>,
}

/// Reads `x` back from `m` copies of its Fourier state, each produced by the state-preparation circuit.
pub fn qfp<R: Rng>(x: u64, n: usize, m: usize, mode: QfpMode, sim: &Simulator, rng: &mut R) -> Result<QfpOutcome, SimError> {
    let c = qfs(n);
    let state = sim.run(&c.circuit, &BasisState::zeros(c.circuit.qubit_count).with_register(&c.inputs, x))?;
    let probs = register_outcome_probabilities(&state, &c.outputs);
    let records: Vec<u64> = (0..m)
        .map(|copy| {
            let basis = measurement_basis(copy, m);
            let bits: Vec<bool> = match mode {
                QfpMode::Collapse => {
                    let spec: Vec<(QubitId, Basis)> = c.outputs.iter().map(|&q| (q, basis)).collect();
                    state.clone().measure(&spec, rng)
                }
                QfpMode::Marginal => probs
                    .iter()
                    .map(|&(pa, ph)| rng.gen::<f64>() < if basis == Basis::Hadamard { ph } else { pa })
                    .collect(),
            };
            bits.iter().enumerate().map(|(i, &b)| (b as u64) << i).sum()
        })
        .collect();
    let (estimate, flagged) = decode_records(&records, n);
    Ok(QfpOutcome { estimate, flagged, records })
}

/// Quality of the majority-read-out pipeline on one basis input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QftFidelity {
    /// `⟨Φ_x|ρ_out|Φ_x⟩` for the output register's reduced state.
    pub output: f64,
    /// Probability that the read-out decodes `x` without a flag.
    pub success: f64,
    /// Fidelity of the whole register set with the ideal output; equals `success²`.
    pub global: f64,
}

/// Which record branches of the non-output copies are summed over.
pub enum Branches<'a, R: Rng> {
    Exact,
    Sampled { trials: usize, rng: &'a mut R },
}

fn record_probability(r: u64, probs: &[(f64, f64)], hadamard: bool) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, &(pa, ph))| {
            let p = if hadamard { ph } else { pa };
            if (r >> i) & 1 == 1 {
                p
            } else {
                1.0 - p
            }
        })
        .product()
}

/// Collision and success terms for fixed records of copies `1..m`, summing exactly over copy 0.
fn branch_terms(x: u64, n: usize, probs: &[(f64, f64)], rest: &[u64]) -> (f64, f64) {
    let mut dist: HashMap<(u64, bool), f64> = HashMap::new();
    let mut records = vec![0];
    records.extend_from_slice(rest);
    for r0 in 0..1u64 << n {
        records[0] = r0;
        *dist.entry(decode_records(&records, n)).or_default() += record_probability(r0, probs, false);
    }
    (dist.values().map(|p| p * p).sum(), dist.get(&(x, false)).copied().unwrap_or(0.0))
}

/// Evaluates the majority-read-out pipeline copy by copy.
///
/// Every copy holds the same product state with single-qubit outcome probabilities
/// `probs`. The output register is copy 0; its reduced fidelity is the expected
/// collision probability of the decoded value over copy 0's own outcomes, given the
/// other copies' records.
pub fn qft_fidelity_factorized<R: Rng>(x: u64, n: usize, m: usize, probs: &[(f64, f64)], branches: Branches<R>) -> QftFidelity {
    let (mut output, mut success) = (0.0, 0.0);
    match branches {
        Branches::Exact => {
            let total = 1u64 << (n * (m - 1));
            for code in 0..total {
                let rest: Vec<u64> = (0..m - 1).map(|c| (code >> (n * c)) & ((1 << n) - 1)).collect();
                let w: f64 =
                    rest.iter().enumerate().map(|(c, &r)| record_probability(r, probs, c + 1 >= m / 2)).product();
                let (col, suc) = branch_terms(x, n, probs, &rest);
                output += w * col;
                success += w * suc;
            }
        }
        Branches::Sampled { trials, rng } => {
            for _ in 0..trials {
                let rest: Vec<u64> = (1..m)
                    .map(|c| {
                        let hadamard = c >= m / 2;
                        probs
                            .iter()
                            .enumerate()
                            .map(|(i, &(pa, ph))| ((rng.gen::<f64>() < if hadamard { ph } else { pa }) as u64) << i)
                            .sum()
                    })
                    .collect();
                let (col, suc) = branch_terms(x, n, probs, &rest);
                output += col / trials as f64;
                success += suc / trials as f64;
            }
        }
    }
    QftFidelity { output, success, global: success * success }
}

/// Analytic single-qubit outcome probabilities of `Φ_x` mod `2^n`.
pub fn analytic_probabilities(x: u64, n: usize) -> Vec<(f64, f64)> {
    (0..n).map(|i| outcome_probabilities(x, n, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(c: &Circuit, reg: &[QubitId], x: u64) -> StateVector {
        Simulator::default().run(c, &BasisState::zeros(c.qubit_count).with_register(reg, x)).unwrap()
    }

    #[test]
    fn qfs_matches_closed_form() {
        for n in 1..=4 {
            let c = qfs(n);
            for x in 0..1u64 << n {
                let s = run(&c.circuit, &c.inputs, x);
                assert!((s.register_fidelity(&c.outputs, &fourier_state(1 << n, x, n)) - 1.0).abs() < 1e-9);
            }
        }
        assert_eq!(qfs(3).circuit.stats().depth, qfs(6).circuit.stats().depth);
    }

    #[test]
    fn copies_hold_the_same_state() {
        let c = copy_fourier(2, 3);
        for x in 0..4 {
            let phi: Vec<(BasisState, C64)> = fourier_state(4, x, 2)
                .into_iter()
                .enumerate()
                .map(|(y, a)| (BasisState::zeros(6).with_register(&c.registers[0], y as u64), a))
                .collect();
            let out = Simulator::default().run_state(&c.circuit, StateVector::from_terms(6, &phi)).unwrap();
            for reg in &c.registers {
                assert!((out.register_fidelity(reg, &fourier_state(4, x, 2)) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ideal_pipeline_is_exact() {
        for n in 1..=3 {
            let c = qft_pow2(n, 2, Readout::Ideal);
            for x in 0..1u64 << n {
                let s = run(&c.circuit, &c.input, x);
                assert!((s.fidelity(&ideal_output(&c, x)) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn factorized_fidelity_matches_joint_simulation() {
        let (n, m) = (2, 4);
        let c = qft_pow2(n, m, Readout::Majority);
        for x in 0..4 {
            let s = run(&c.circuit, &c.input, x);
            let f = qft_fidelity_factorized::<ChaCha8Rng>(x, n, m, &analytic_probabilities(x, n), Branches::Exact);
            let out = s.register_fidelity(&c.output, &fourier_state(4, x, n));
            assert!((out - f.output).abs() < 1e-9, "x={x}: {out} vs {}", f.output);
            assert!((s.fidelity(&ideal_output(&c, x)) - f.global).abs() < 1e-9);
        }
    }

    #[test]
    fn simulated_marginals_match_analytic() {
        let c = qfs(3);
        for x in 0..8 {
            let s = run(&c.circuit, &c.inputs, x);
            for (a, b) in register_outcome_probabilities(&s, &c.outputs).iter().zip(analytic_probabilities(x, 3)) {
                assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn collapse_and_marginal_reads_agree() {
        let sim = Simulator::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut wins = [0usize; 2];
        for (k, mode) in [QfpMode::Collapse, QfpMode::Marginal].into_iter().enumerate() {
            for t in 0..400 {
                let x = t % 8;
                let o = qfp(x, 3, 8, mode, &sim, &mut rng).unwrap();
                wins[k] += (o.estimate == x && !o.flagged) as usize;
            }
        }
        assert!(wins[0].abs_diff(wins[1]) < 40, "{wins:?}");
    }

    #[test]
    fn failure_falls_as_copies_double() {
        let sim = Simulator::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fails: Vec<usize> = [4, 8, 16]
            .into_iter()
            .map(|m| (0..1000).filter(|t| {
                let o = qfp(t % 8, 3, m, QfpMode::Marginal, &sim, &mut rng).unwrap();
                o.estimate != t % 8 || o.flagged
            }).count())
            .collect();
        assert!(fails[0] > fails[1] && fails[1] > fails[2], "{fails:?}");
    }
}
