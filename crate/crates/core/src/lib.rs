//! Constant-depth quantum circuits built from unbounded fan-out.
//!
//! The crate builds layered circuits with exact depth and size accounting,
//! simulates them exactly, and checks their behaviour against independent
//! brute-force and closed-form references.

pub mod circuit;
pub mod classical;
pub mod gates;
pub mod oracle;
pub mod parallelize;
pub mod qft;
pub mod reduction;
pub mod sim;
pub mod unitary;
pub mod verify;

pub use circuit::{Alloc, Block, Circuit, CircuitStats, Gate, Layer, QubitId, Role};
pub use sim::{Basis, BasisState, Simulator, StateVector};
pub use unitary::Unitary2;
