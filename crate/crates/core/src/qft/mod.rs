//! Fourier states, their copying and read-out, and the transforms built on them.

pub mod modq;
pub mod phase;
pub mod pow2;
pub mod qfp;

use num_complex::Complex64 as C64;
use std::f64::consts::TAU;

use crate::circuit::{Alloc, Block, Gate, QubitId, Role};
use crate::parallelize::{controlled_rotations_block, fanout_copies};
use crate::unitary::Unitary2;

/// Amplitudes `ω^{xy}/√q` of the Fourier state of `x` mod `q`, padded with zeros to `2^width`.
pub fn fourier_state(q: u64, x: u64, width: usize) -> Vec<C64> {
    let s = 1.0 / (q as f64).sqrt();
    (0..1u64 << width)
        .map(|y| if y < q { C64::from_polar(s, TAU * ((x * y) % q) as f64 / q as f64) } else { C64::new(0.0, 0.0) })
        .collect()
}

/// Writes the Fourier state (mod `2^outs.len()`) of the value in `xs` onto the fresh
/// qubits `outs`: output qubit `i` gets `Rz(2πx/2^{N−i})·H|0⟩`. Every output reads its
/// own fan-out copy of `xs`. Five layers.
pub fn qfs_block(al: &mut Alloc, xs: &[QubitId], outs: &[QubitId]) -> Block {
    let big_n = outs.len();
    let mut copies = vec![xs.to_vec()];
    copies.extend((1..big_n).map(|_| al.take(Role::Ancilla, xs.len())));
    let fan = fanout_copies(&copies);
    let mut first = fan.clone();
    first.extend(outs.iter().map(|&o| Gate::one(Unitary2::h(), o)));
    let rotations = outs
        .iter()
        .enumerate()
        .map(|(i, &o)| {
            let angles: Vec<f64> =
                (0..xs.len()).map(|j| TAU * ((1u128 << j) as f64 / (1u128 << (big_n - i)) as f64).fract()).collect();
            let spare = al.take(Role::Ancilla, xs.len() - 1);
            controlled_rotations_block(&copies[i], o, &spare, &angles)
        })
        .collect();
    Block::layer(first).then(Block::parallel(rotations)).then(Block::layer(fan))
}
