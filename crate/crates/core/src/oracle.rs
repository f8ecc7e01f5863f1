//! Named oracle gates.
//!
//! Oracles are identified by a registry name plus parameters, never by truth
//! tables, so serialized circuits stay small and reproducible. Register values
//! are little-endian: the first qubit of a register is its least significant bit.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::circuit::QubitId;

/// Largest register (in qubits) for which a table-backed oracle may be built.
pub const TABLE_LIMIT: usize = 22;

/// An oracle acting on one or more registers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Oracle<S> {
    #[serde(flatten)]
    pub spec: S,
    pub registers: Vec<Vec<QubitId>>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub adjoint: bool,
    pub nominal_depth: usize,
    pub nominal_size: usize,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl<S> Oracle<S> {
    pub fn new(spec: S, registers: Vec<Vec<QubitId>>, nominal_depth: usize, nominal_size: usize) -> Self {
        Oracle { spec, registers, adjoint: false, nominal_depth, nominal_size }
    }

    /// Oracle with nominal depth 1 and nominal size equal to its register size.
    pub fn unit(spec: S, registers: Vec<Vec<QubitId>>) -> Self {
        let size = registers.iter().map(|r| r.len()).sum();
        Self::new(spec, registers, 1, size)
    }

    pub fn qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.registers.iter().flatten().copied()
    }

    pub fn width(&self) -> usize {
        self.registers.iter().map(|r| r.len()).sum()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.len()).collect()
    }

    pub fn adjointed(&self) -> Self
    where
        S: Clone,
    {
        let mut o = self.clone();
        o.adjoint = !o.adjoint;
        o
    }
}

fn mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Number of bits needed to write values `0..q`.
pub fn bits_for(q: u64) -> usize {
    (64 - (q.max(1) - 1).leading_zeros()) as usize
}

/// Reversible classical maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PermSpec {
    /// Registers `[operand.., target]`; a target value `t < q` becomes
    /// `(t + Σ operands) mod q`, larger values are left alone.
    AddMod { q: u64 },
    /// Registers `[source, spare]`. A source value `y < 2^source_bits` (spare zero) becomes
    /// `⌊y/divisor⌋` in the low `quotient_bits` of the joined register and `y mod divisor`
    /// above it. Other inputs fill the remaining outputs in increasing order.
    DivFloor { divisor: u64, quotient_bits: usize, source_bits: usize },
    /// Registers `[source, target]`; `target ^= ⌊source·q/2^w + 1/2⌋ mod q` with `w` the source width.
    RoundDiv { q: u64 },
    /// Registers `[counter]` or `[control, counter]`; counter value `c < q` becomes `(c+1) mod q`.
    IncrementMod { q: u64 },
    /// Registers `[x, out]`; `out ^= [|x| = t]`.
    ExactWeight { t: usize },
    /// Registers `[x, out]`; `out ^= [|x| ≥ t]`.
    ThresholdWeight { t: usize },
    /// Registers `[x, out]`; `out ^= [x ≠ 0]`.
    Or,
    /// Registers `[x, counter]`; `counter += |x| mod 2^w`.
    AddWeight,
    /// Registers `[record_0 .. record_{m-1}, target, flag]`: majority votes and decodes
    /// Fourier-bit measurement records, xoring the estimate into `target` and an
    /// undecided marker into `flag`.
    QfpDecode { n: usize, m: usize },
    /// Registers `[estimate_0 .. estimate_{m-1}, target]`; `target ^=` bitwise strict majority.
    BitMajority,
}

impl PermSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PermSpec::AddMod { .. } => "add_mod",
            PermSpec::DivFloor { .. } => "div_floor",
            PermSpec::RoundDiv { .. } => "round_div",
            PermSpec::IncrementMod { .. } => "increment_mod",
            PermSpec::ExactWeight { .. } => "exact_weight",
            PermSpec::ThresholdWeight { .. } => "threshold_weight",
            PermSpec::Or => "or",
            PermSpec::AddWeight => "add_weight",
            PermSpec::QfpDecode { .. } => "qfp_decode",
            PermSpec::BitMajority => "bit_majority",
        }
    }

    /// Checks that register shapes fit the parameters.
    pub fn check(&self, widths: &[usize]) -> Result<(), String> {
        let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(format!("{}: {}", self.name(), msg)) };
        match self {
            PermSpec::AddMod { q } => {
                need(*q >= 1, "modulus must be positive")?;
                need(widths.len() >= 2, "needs at least one operand and a target")?;
                need(widths.iter().all(|&w| w <= 63), "register wider than 63 qubits")?;
                need(bits_for(*q) <= *widths.last().unwrap(), "target too narrow for modulus")
            }
            PermSpec::DivFloor { divisor, quotient_bits, source_bits } => {
                need(widths.len() == 2, "needs source and spare registers")?;
                need(widths[0] == *source_bits, "source width mismatch")?;
                need(*divisor >= 1, "divisor must be positive")?;
                let total = widths[0] + widths[1];
                need(total <= TABLE_LIMIT, "register too wide")?;
                let qmax = (mask(*source_bits)) / divisor;
                need(bits_for(qmax + 1) <= *quotient_bits, "quotient register too narrow")?;
                need(
                    *quotient_bits + bits_for(*divisor) <= total,
                    "not enough room for quotient and remainder",
                )
            }
            PermSpec::RoundDiv { q } => {
                need(widths.len() == 2, "needs source and target")?;
                need(*q >= 1 && widths[0] <= 40, "bad modulus or source too wide")?;
                need(bits_for(*q) <= widths[1], "target too narrow")
            }
            PermSpec::IncrementMod { q } => {
                need(widths.len() == 1 || (widths.len() == 2 && widths[0] == 1), "needs [counter] or [control, counter]")?;
                need(*q >= 1 && bits_for(*q) <= *widths.last().unwrap(), "counter too narrow")
            }
            PermSpec::ExactWeight { .. } | PermSpec::ThresholdWeight { .. } | PermSpec::Or => {
                need(widths.len() == 2 && widths[1] == 1, "needs [x, out] with a one-qubit out")
            }
            PermSpec::AddWeight => need(widths.len() == 2 && widths[1] <= 63, "needs [x, counter]"),
            PermSpec::QfpDecode { n, m } => {
                need(*m >= 2 && m % 2 == 0, "copy count must be even")?;
                need(widths.len() == m + 2, "register count mismatch")?;
                need(widths[..*m].iter().all(|w| w == n) && widths[*m] == *n && widths[m + 1] == 1, "register width mismatch")
            }
            PermSpec::BitMajority => {
                need(widths.len() >= 2, "needs estimates and a target")?;
                let w = *widths.last().unwrap();
                need(widths.iter().all(|&x| x == w), "register width mismatch")
            }
        }
    }

    /// Applies the map (or its inverse) to register values in place.
    /// Registers wider than 64 qubits only carry their Hamming weight in `weights`.
    pub fn apply(&self, vals: &mut [u64], widths: &[usize], weights: &[usize], inverse: bool) {
        match self {
            PermSpec::AddMod { q } => {
                let k = vals.len() - 1;
                let t = vals[k];
                if t < *q {
                    let s = vals[..k].iter().fold(0u64, |a, &v| (a + v % q) % q);
                    vals[k] = if inverse { (t + q - s) % q } else { (t + s) % q };
                }
            }
            PermSpec::DivFloor { divisor, quotient_bits, source_bits } => {
                let table = div_floor_table(*divisor, *quotient_bits, *source_bits, widths[0] + widths[1]);
                let joined = vals[0] | (vals[1] << widths[0]);
                let out = if inverse { table.1[joined as usize] } else { table.0[joined as usize] } as u64;
                vals[0] = out & mask(widths[0]);
                vals[1] = out >> widths[0];
            }
            PermSpec::RoundDiv { q } => {
                vals[1] ^= round_div(vals[0], *q, widths[0]);
            }
            PermSpec::IncrementMod { q } => {
                let on = vals.len() == 1 || vals[0] == 1;
                let c = vals.last_mut().unwrap();
                if on && *c < *q {
                    *c = if inverse { (*c + q - 1) % q } else { (*c + 1) % q };
                }
            }
            PermSpec::ExactWeight { t } => vals[1] ^= (weights[0] == *t) as u64,
            PermSpec::ThresholdWeight { t } => vals[1] ^= (weights[0] >= *t) as u64,
            PermSpec::Or => vals[1] ^= (weights[0] != 0) as u64,
            PermSpec::AddWeight => {
                let m = mask(widths[1]);
                let w = weights[0] as u64 & m;
                vals[1] = if inverse { vals[1].wrapping_sub(w) & m } else { vals[1].wrapping_add(w) & m };
            }
            PermSpec::QfpDecode { n, m } => {
                let records = &vals[..*m];
                let (est, undecided) = crate::qft::qfp::decode_records(records, *n);
                vals[*m] ^= est;
                vals[m + 1] ^= undecided as u64;
            }
            PermSpec::BitMajority => {
                let k = vals.len() - 1;
                let w = widths[k];
                let mut out = 0u64;
                for b in 0..w {
                    let ones = vals[..k].iter().filter(|&&v| (v >> b) & 1 == 1).count();
                    if 2 * ones > k {
                        out |= 1 << b;
                    }
                }
                vals[k] ^= out;
            }
        }
    }
}

/// `⌊z·q/2^w + 1/2⌋ mod q`.
pub fn round_div(z: u64, q: u64, w: usize) -> u64 {
    let num = (z as u128) * (q as u128) * 2 + (1u128 << w);
    let den = 1u128 << (w + 1);
    ((num / den) % q as u128) as u64
}

type Table = Arc<(Vec<u32>, Vec<u32>)>;

fn div_floor_table(divisor: u64, quotient_bits: usize, source_bits: usize, total: usize) -> Table {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize, usize, usize), Table>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (divisor, quotient_bits, source_bits, total);
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return t.clone();
    }
    let size = 1usize << total;
    let mut fwd = vec![u32::MAX; size];
    let mut used = vec![false; size];
    for y in 0..(1u64 << source_bits) {
        let out = (y / divisor) | ((y % divisor) << quotient_bits);
        fwd[y as usize] = out as u32;
        used[out as usize] = true;
    }
    let mut free = (0..size).filter(|&v| !used[v]);
    for slot in fwd.iter_mut() {
        if *slot == u32::MAX {
            *slot = free.next().expect("div_floor table exhausted") as u32;
        }
    }
    let mut inv = vec![0u32; size];
    for (i, &o) in fwd.iter().enumerate() {
        inv[o as usize] = i as u32;
    }
    let t = Arc::new((fwd, inv));
    cache.lock().unwrap().insert(key, t.clone());
    t
}

/// Diagonal oracles: a phase per basis state of the joined register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DiagSpec {
    /// One phase per value of the joined registers.
    Table { phases: Vec<f64> },
    /// The same phase on every basis state.
    GlobalPhase { angle: f64 },
    /// `e^{2πi·x·y/2^bits}` on register `y` for a fixed hidden `x`.
    HiddenPhase { x: u64, bits: usize },
    /// `e^{2πi·a·b/2^bits}` on registers `[a, b]`.
    ProductPhase { bits: usize },
}

impl DiagSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DiagSpec::Table { .. } => "table",
            DiagSpec::GlobalPhase { .. } => "global_phase",
            DiagSpec::HiddenPhase { .. } => "hidden_phase",
            DiagSpec::ProductPhase { .. } => "product_phase",
        }
    }

    pub fn check(&self, widths: &[usize]) -> Result<(), String> {
        let total: usize = widths.iter().sum();
        let ok = match self {
            DiagSpec::Table { phases } => total <= TABLE_LIMIT && phases.len() == 1 << total,
            DiagSpec::GlobalPhase { .. } => true,
            DiagSpec::HiddenPhase { .. } => widths.len() == 1 && total <= 63,
            DiagSpec::ProductPhase { .. } => widths.len() == 2 && widths.iter().all(|&w| w <= 63),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{}: register shape does not match parameters", self.name()))
        }
    }

    /// Phase angle on the given register values.
    pub fn angle(&self, vals: &[u64], widths: &[usize]) -> f64 {
        match self {
            DiagSpec::Table { phases } => {
                let mut joined = 0u64;
                let mut shift = 0;
                for (v, w) in vals.iter().zip(widths) {
                    joined |= v << shift;
                    shift += w;
                }
                phases[joined as usize]
            }
            DiagSpec::GlobalPhase { angle } => *angle,
            DiagSpec::HiddenPhase { x, bits } => {
                let prod = ((*x as u128 * vals[0] as u128) & ((1u128 << bits) - 1)) as f64;
                2.0 * PI * prod / (1u128 << bits) as f64
            }
            DiagSpec::ProductPhase { bits } => {
                let prod = ((vals[0] as u128 * vals[1] as u128) & ((1u128 << bits) - 1)) as f64;
                2.0 * PI * prod / (1u128 << bits) as f64
            }
        }
    }
}

/// Dense unitary oracles on a single register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DenseSpec {
    /// `|x⟩ → q^{-1/2} Σ_{y<q} e^{2πixy/q}|y⟩` for `x < q`, identity on larger values.
    Fourier { q: u64 },
    /// `|0⟩ → u^{-1/2} Σ_{z<u}|z⟩`, completed to a unitary by the Fourier map on `0..u`.
    Uniform { u: u64 },
}

impl DenseSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DenseSpec::Fourier { .. } => "fourier",
            DenseSpec::Uniform { .. } => "uniform",
        }
    }

    pub fn check(&self, widths: &[usize]) -> Result<(), String> {
        let q = match self {
            DenseSpec::Fourier { q } => *q,
            DenseSpec::Uniform { u } => *u,
        };
        if widths.len() == 1 && widths[0] <= 14 && q >= 1 && bits_for(q) <= widths[0] {
            Ok(())
        } else {
            Err(format!("{}: register shape does not match parameters", self.name()))
        }
    }

    /// Matrix on the register, columns indexed by input value.
    pub fn matrix(&self, width: usize, adjoint: bool) -> DMatrix<C64> {
        let dim = 1usize << width;
        let q = match self {
            DenseSpec::Fourier { q } => *q,
            DenseSpec::Uniform { u } => *u,
        } as usize;
        let mut m = DMatrix::<C64>::identity(dim, dim);
        let s = 1.0 / (q as f64).sqrt();
        for x in 0..q {
            for y in 0..q {
                let ang = 2.0 * PI * ((x * y) % q) as f64 / q as f64;
                m[(y, x)] = C64::from_polar(s, ang);
            }
        }
        if adjoint {
            m.adjoint()
        } else {
            m
        }
    }
}
