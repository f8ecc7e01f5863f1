//! Recovering a hidden `x` from the phase oracle `|y⟩ → e^{2πixy/2^n}|y⟩`.

use rand::Rng;

use super::pow2::measurement_basis;
use super::qfp::decode_records;
use crate::circuit::{Alloc, Block, Circuit, Gate, QubitId, Role};
use crate::oracle::{DiagSpec, Oracle};
use crate::sim::{Basis, BasisState, SimError, Simulator};
use crate::unitary::Unitary2;

/// One copy of `Φ_x`: register `k` starts as `|2^k⟩` on its qubit `k` in `|+⟩`, and one
/// oracle call leaves the phase `x/2^{n−k}` there. Returns the circuit and the
/// qubits that carry the Fourier state, in register order.
pub fn phase_copy_circuit(x: u64, n: usize) -> (Circuit, Vec<QubitId>) {
    let mut al = Alloc::new();
    let regs: Vec<Vec<QubitId>> = (0..n).map(|_| al.take(Role::Ancilla, n)).collect();
    let carriers: Vec<QubitId> = regs.iter().enumerate().map(|(k, r)| r[k]).collect();
    let block = Block::layer(carriers.iter().map(|&q| Gate::one(Unitary2::h(), q)).collect()).then(Block::layer(
        regs.iter().map(|r| Gate::Diag(Oracle::unit(DiagSpec::HiddenPhase { x, bits: n }, vec![r.clone()]))).collect(),
    ));
    let mut c = al.finish(block, false);
    for &q in &carriers {
        c.roles[q] = Role::Output;
    }
    (c, carriers)
}

/// Number of phase-oracle gates in a circuit.
pub fn oracle_calls(c: &Circuit) -> usize {
    c.gates().filter(|g| matches!(g, Gate::Diag(o) if matches!(o.spec, DiagSpec::HiddenPhase { .. }))).count()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseEstimate {
    pub estimate: u64,
    pub flagged: bool,
    pub oracle_calls: usize,
}

/// Builds `m` copies of `Φ_x` from oracle calls, measures them and decodes.
pub fn phase_estimation<R: Rng>(x: u64, n: usize, m: usize, sim: &Simulator, rng: &mut R) -> Result<PhaseEstimate, SimError> {
    let mut calls = 0;
    let mut records = Vec::with_capacity(m);
    for copy in 0..m {
        let (c, carriers) = phase_copy_circuit(x, n);
        calls += oracle_calls(&c);
        let mut s = sim.run(&c, &BasisState::zeros(c.qubit_count))?;
        let basis = measurement_basis(copy, m);
        let spec: Vec<(QubitId, Basis)> = carriers.iter().map(|&q| (q, basis)).collect();
        let bits = s.measure(&spec, rng);
        records.push(bits.iter().enumerate().map(|(i, &b)| (b as u64) << i).sum());
    }
    let (estimate, flagged) = decode_records(&records, n);
    Ok(PhaseEstimate { estimate, flagged, oracle_calls: calls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qft::fourier_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn copy_is_the_fourier_state() {
        for x in 0..8 {
            let (c, carriers) = phase_copy_circuit(x, 3);
            let s = Simulator::default().run(&c, &BasisState::zeros(c.qubit_count)).unwrap();
            assert!((s.register_fidelity(&carriers, &fourier_state(8, x, 3)) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_is_recovered_and_calls_counted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = phase_estimation(0, 3, 8, &Simulator::default(), &mut rng).unwrap();
        assert_eq!(e.oracle_calls, 24);
        assert_eq!((e.estimate, e.flagged), (0, false));
    }
}
