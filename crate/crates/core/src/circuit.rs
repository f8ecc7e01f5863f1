//! Layered circuits with depth/size accounting.
//!
//! Depth is the number of layers. Size is the number of qubits touched by each
//! gate summed over the circuit; oracles contribute their nominal size instead.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

use crate::oracle::{DenseSpec, DiagSpec, Oracle, PermSpec, TABLE_LIMIT};
use crate::unitary::Unitary2;

pub type QubitId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Input,
    Output,
    Ancilla,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    #[serde(rename = "one")]
    OneQubit { u: Unitary2, qubit: QubitId },
    Controlled { u: Unitary2, control: QubitId, target: QubitId },
    Fanout { control: QubitId, targets: Vec<QubitId> },
    Parity { sources: Vec<QubitId>, target: QubitId },
    Perm(Oracle<PermSpec>),
    Diag(Oracle<DiagSpec>),
    /// Dense unitary on a small register (Fourier changes of basis).
    Unitary(Oracle<DenseSpec>),
}

impl Gate {
    pub fn one(u: Unitary2, qubit: QubitId) -> Gate {
        Gate::OneQubit { u, qubit }
    }

    pub fn controlled(u: Unitary2, control: QubitId, target: QubitId) -> Gate {
        Gate::Controlled { u, control, target }
    }

    pub fn cnot(control: QubitId, target: QubitId) -> Gate {
        Gate::Controlled { u: Unitary2::x(), control, target }
    }

    pub fn fanout(control: QubitId, targets: Vec<QubitId>) -> Gate {
        Gate::Fanout { control, targets }
    }

    pub fn parity(sources: Vec<QubitId>, target: QubitId) -> Gate {
        Gate::Parity { sources, target }
    }

    /// Every qubit the gate acts on, in a fixed order.
    pub fn qubits(&self) -> Vec<QubitId> {
        match self {
            Gate::OneQubit { qubit, .. } => vec![*qubit],
            Gate::Controlled { control, target, .. } => vec![*control, *target],
            Gate::Fanout { control, targets } => std::iter::once(*control).chain(targets.iter().copied()).collect(),
            Gate::Parity { sources, target } => sources.iter().copied().chain(std::iter::once(*target)).collect(),
            Gate::Perm(o) => o.qubits().collect(),
            Gate::Diag(o) => o.qubits().collect(),
            Gate::Unitary(o) => o.qubits().collect(),
        }
    }

    /// Number of affected qubits.
    pub fn support_size(&self) -> usize {
        match self {
            Gate::OneQubit { .. } => 1,
            Gate::Controlled { .. } => 2,
            Gate::Fanout { targets, .. } => targets.len() + 1,
            Gate::Parity { sources, .. } => sources.len() + 1,
            Gate::Perm(o) => o.width(),
            Gate::Diag(o) => o.width(),
            Gate::Unitary(o) => o.width(),
        }
    }

    /// Size as counted in circuit statistics.
    pub fn cost_size(&self) -> usize {
        match self {
            Gate::Perm(o) => o.nominal_size,
            Gate::Diag(o) => o.nominal_size,
            Gate::Unitary(o) => o.nominal_size,
            g => g.support_size(),
        }
    }

    pub fn cost_depth(&self) -> usize {
        match self {
            Gate::Perm(o) => o.nominal_depth,
            Gate::Diag(o) => o.nominal_depth,
            Gate::Unitary(o) => o.nominal_depth,
            _ => 1,
        }
    }

    pub fn adjoint(&self) -> Gate {
        match self {
            Gate::OneQubit { u, qubit } => Gate::OneQubit { u: u.adjoint(), qubit: *qubit },
            Gate::Controlled { u, control, target } => {
                Gate::Controlled { u: u.adjoint(), control: *control, target: *target }
            }
            Gate::Fanout { .. } | Gate::Parity { .. } => self.clone(),
            Gate::Perm(o) => Gate::Perm(o.adjointed()),
            Gate::Diag(o) => Gate::Diag(o.adjointed()),
            Gate::Unitary(o) => Gate::Unitary(o.adjointed()),
        }
    }

    /// The same gate on relabelled qubits.
    pub fn remap(&self, f: &dyn Fn(QubitId) -> QubitId) -> Gate {
        let regs = |r: &Vec<Vec<QubitId>>| r.iter().map(|v| v.iter().map(|&q| f(q)).collect()).collect();
        match self {
            Gate::OneQubit { u, qubit } => Gate::OneQubit { u: *u, qubit: f(*qubit) },
            Gate::Controlled { u, control, target } => Gate::Controlled { u: *u, control: f(*control), target: f(*target) },
            Gate::Fanout { control, targets } => Gate::Fanout { control: f(*control), targets: targets.iter().map(|&q| f(q)).collect() },
            Gate::Parity { sources, target } => Gate::Parity { sources: sources.iter().map(|&q| f(q)).collect(), target: f(*target) },
            Gate::Perm(o) => Gate::Perm(Oracle { registers: regs(&o.registers), ..o.clone() }),
            Gate::Diag(o) => Gate::Diag(Oracle { registers: regs(&o.registers), ..o.clone() }),
            Gate::Unitary(o) => Gate::Unitary(Oracle { registers: regs(&o.registers), ..o.clone() }),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Layer {
    pub gates: Vec<Gate>,
}

impl Layer {
    pub fn new(gates: Vec<Gate>) -> Self {
        Layer { gates }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub qubit_count: usize,
    pub roles: Vec<Role>,
    #[serde(default)]
    pub clean_ancillas: bool,
    pub layers: Vec<Layer>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CircuitStats {
    pub depth: usize,
    pub size: usize,
    pub ancilla_count: usize,
    pub nominal_depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    RoleCount { roles: usize, qubits: usize },
    QubitOutOfRange { layer: usize, gate: usize, qubit: QubitId },
    Overlap { layer: usize, qubit: QubitId },
    RepeatedQubit { layer: usize, gate: usize, qubit: QubitId },
    NotUnitary { layer: usize, gate: usize },
    BadOracle { layer: usize, gate: usize, reason: String },
    NotBijective { layer: usize, gate: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RoleCount { roles, qubits } => write!(f, "{roles} roles for {qubits} qubits"),
            Violation::QubitOutOfRange { layer, gate, qubit } => {
                write!(f, "layer {layer} gate {gate}: qubit {qubit} out of range")
            }
            Violation::Overlap { layer, qubit } => write!(f, "layer {layer}: qubit {qubit} used by two gates"),
            Violation::RepeatedQubit { layer, gate, qubit } => {
                write!(f, "layer {layer} gate {gate}: qubit {qubit} repeated within the gate")
            }
            Violation::NotUnitary { layer, gate } => write!(f, "layer {layer} gate {gate}: matrix is not unitary"),
            Violation::BadOracle { layer, gate, reason } => write!(f, "layer {layer} gate {gate}: {reason}"),
            Violation::NotBijective { layer, gate } => write!(f, "layer {layer} gate {gate}: oracle is not a bijection"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CircuitError {
    #[error("invalid circuit: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),
    #[error("role mismatch on qubit {0}")]
    RoleMismatch(QubitId),
}

const UNITARY_TOL: f64 = 1e-12;

impl Circuit {
    pub fn new(roles: Vec<Role>, layers: Vec<Layer>, clean_ancillas: bool) -> Self {
        Circuit { qubit_count: roles.len(), roles, clean_ancillas, layers }
    }

    pub fn empty(roles: Vec<Role>) -> Self {
        Self::new(roles, vec![], true)
    }

    pub fn qubits_with_role(&self, role: Role) -> Vec<QubitId> {
        (0..self.qubit_count).filter(|&q| self.roles[q] == role).collect()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flat_map(|l| l.gates.iter())
    }

    /// All structural violations; empty iff the circuit is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = vec![];
        if self.roles.len() != self.qubit_count {
            out.push(Violation::RoleCount { roles: self.roles.len(), qubits: self.qubit_count });
        }
        for (li, layer) in self.layers.iter().enumerate() {
            let mut used = HashSet::new();
            for (gi, gate) in layer.gates.iter().enumerate() {
                let mut mine = HashSet::new();
                for q in gate.qubits() {
                    if q >= self.qubit_count {
                        out.push(Violation::QubitOutOfRange { layer: li, gate: gi, qubit: q });
                    }
                    if !mine.insert(q) {
                        out.push(Violation::RepeatedQubit { layer: li, gate: gi, qubit: q });
                    } else if !used.insert(q) {
                        out.push(Violation::Overlap { layer: li, qubit: q });
                    }
                }
                match gate {
                    Gate::OneQubit { u, .. } | Gate::Controlled { u, .. } => {
                        if !u.is_unitary(UNITARY_TOL) {
                            out.push(Violation::NotUnitary { layer: li, gate: gi });
                        }
                    }
                    Gate::Perm(o) => {
                        let widths = o.widths();
                        if let Err(reason) = o.spec.check(&widths) {
                            out.push(Violation::BadOracle { layer: li, gate: gi, reason });
                        } else if o.width() <= 20 && !perm_round_trips(&o.spec, &widths) {
                            out.push(Violation::NotBijective { layer: li, gate: gi });
                        }
                    }
                    Gate::Diag(o) => {
                        if let Err(reason) = o.spec.check(&o.widths()) {
                            out.push(Violation::BadOracle { layer: li, gate: gi, reason });
                        }
                    }
                    Gate::Unitary(o) => {
                        if let Err(reason) = o.spec.check(&o.widths()) {
                            out.push(Violation::BadOracle { layer: li, gate: gi, reason });
                        }
                    }
                    _ => {}
                }
            }
        }
        out
    }

    pub fn check(&self) -> Result<(), CircuitError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CircuitError::Invalid(v))
        }
    }

    pub fn stats(&self) -> CircuitStats {
        let mut size = 0;
        let mut nominal_depth = 0;
        for layer in &self.layers {
            size += layer.gates.iter().map(Gate::cost_size).sum::<usize>();
            nominal_depth += layer.gates.iter().map(Gate::cost_depth).max().unwrap_or(1);
        }
        CircuitStats {
            depth: self.layers.len(),
            size,
            ancilla_count: self.roles.iter().filter(|&&r| r == Role::Ancilla).count(),
            nominal_depth,
        }
    }

    /// `a` followed by `b`.
    pub fn compose(&self, b: &Circuit) -> Result<Circuit, CircuitError> {
        if self.qubit_count != b.qubit_count {
            return Err(CircuitError::QubitMismatch(self.qubit_count, b.qubit_count));
        }
        if let Some(q) = (0..self.qubit_count).find(|&q| self.roles[q] != b.roles[q]) {
            return Err(CircuitError::RoleMismatch(q));
        }
        let mut layers = self.layers.clone();
        layers.extend(b.layers.iter().cloned());
        Ok(Circuit { layers, clean_ancillas: self.clean_ancillas && b.clean_ancillas, ..self.clone() })
    }

    /// Layers reversed, every gate replaced by its adjoint.
    pub fn inverse(&self) -> Circuit {
        let layers = self
            .layers
            .iter()
            .rev()
            .map(|l| Layer::new(l.gates.iter().map(Gate::adjoint).collect()))
            .collect();
        Circuit { layers, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization cannot fail")
    }

    /// Parses a circuit file; syntax errors carry line and column, structural ones the layer and gate.
    pub fn from_json(text: &str) -> Result<Circuit, ParseError> {
        let c: Circuit = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let v = c.validate();
        if v.is_empty() {
            Ok(c)
        } else {
            Err(ParseError::Structure(v))
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Structure(Vec<Violation>),
}

fn perm_round_trips(spec: &PermSpec, widths: &[usize]) -> bool {
    let total: usize = widths.iter().sum();
    if total > TABLE_LIMIT {
        return true;
    }
    let split = |v: u64| -> Vec<u64> {
        let mut out = Vec::with_capacity(widths.len());
        let mut s = 0;
        for &w in widths {
            out.push((v >> s) & ((1u64 << w) - 1));
            s += w;
        }
        out
    };
    let join = |vals: &[u64]| -> u64 {
        let mut v = 0;
        let mut s = 0;
        for (x, &w) in vals.iter().zip(widths) {
            v |= x << s;
            s += w;
        }
        v
    };
    let mut seen = vec![false; 1 << total];
    for v in 0..(1u64 << total) {
        let mut vals = split(v);
        let weights: Vec<usize> = vals.iter().map(|x| x.count_ones() as usize).collect();
        spec.apply(&mut vals, widths, &weights, false);
        let out = join(&vals);
        if seen[out as usize] {
            return false;
        }
        seen[out as usize] = true;
        let weights: Vec<usize> = vals.iter().map(|x| x.count_ones() as usize).collect();
        spec.apply(&mut vals, widths, &weights, true);
        if join(&vals) != v {
            return false;
        }
    }
    true
}

/// A run of layers over a shared qubit numbering, used while assembling circuits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Block {
    pub layers: Vec<Layer>,
}

impl Block {
    pub fn new() -> Self {
        Block::default()
    }

    pub fn layer(gates: Vec<Gate>) -> Self {
        Block { layers: vec![Layer::new(gates)] }
    }

    pub fn from_layers(layers: Vec<Vec<Gate>>) -> Self {
        Block { layers: layers.into_iter().map(Layer::new).collect() }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn size(&self) -> usize {
        self.layers.iter().flat_map(|l| &l.gates).map(Gate::cost_size).sum()
    }

    /// Appends `other` after `self`.
    pub fn then(mut self, other: Block) -> Block {
        self.layers.extend(other.layers);
        self
    }

    pub fn push(&mut self, gates: Vec<Gate>) {
        self.layers.push(Layer::new(gates));
    }

    /// Runs blocks side by side, aligned at their first layer.
    pub fn parallel(blocks: Vec<Block>) -> Block {
        let depth = blocks.iter().map(Block::depth).max().unwrap_or(0);
        let mut layers = vec![Layer::default(); depth];
        for b in blocks {
            for (i, l) in b.layers.into_iter().enumerate() {
                layers[i].gates.extend(l.gates);
            }
        }
        Block { layers }
    }

    pub fn beside(self, other: Block) -> Block {
        Block::parallel(vec![self, other])
    }

    pub fn adjoint(&self) -> Block {
        Block {
            layers: self.layers.iter().rev().map(|l| Layer::new(l.gates.iter().map(Gate::adjoint).collect())).collect(),
        }
    }

    /// Pads with empty layers up to `depth`.
    pub fn padded(mut self, depth: usize) -> Block {
        while self.layers.len() < depth {
            self.layers.push(Layer::default());
        }
        self
    }

    pub fn remap(&self, f: &dyn Fn(QubitId) -> QubitId) -> Block {
        Block {
            layers: self.layers.iter().map(|l| Layer::new(l.gates.iter().map(|g| g.remap(f)).collect())).collect(),
        }
    }
}

/// Qubit allocator that records roles.
#[derive(Clone, Debug, Default)]
pub struct Alloc {
    pub roles: Vec<Role>,
}

impl Alloc {
    pub fn new() -> Self {
        Alloc::default()
    }

    pub fn take(&mut self, role: Role, n: usize) -> Vec<QubitId> {
        let start = self.roles.len();
        self.roles.extend(std::iter::repeat_n(role, n));
        (start..start + n).collect()
    }

    pub fn one(&mut self, role: Role) -> QubitId {
        self.take(role, 1)[0]
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn finish(self, block: Block, clean_ancillas: bool) -> Circuit {
        Circuit::new(self.roles, block.layers, clean_ancillas)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fanout_circuit() -> Circuit {
        Circuit::new(
            vec![Role::Input, Role::Output, Role::Output],
            vec![Layer::new(vec![Gate::fanout(0, vec![1, 2])])],
            true,
        )
    }

    #[test]
    fn empty_circuit_is_valid() {
        assert!(Circuit::empty(vec![]).validate().is_empty());
    }

    #[test]
    fn shared_qubit_in_layer_is_one_violation() {
        let c = Circuit::new(
            vec![Role::Input; 3],
            vec![Layer::new(vec![Gate::cnot(0, 1), Gate::one(Unitary2::h(), 1)])],
            true,
        );
        let v = c.validate();
        assert_eq!(v, vec![Violation::Overlap { layer: 0, qubit: 1 }]);
    }

    #[test]
    fn fanout_control_among_targets_is_one_violation() {
        let c = Circuit::new(vec![Role::Input; 3], vec![Layer::new(vec![Gate::fanout(0, vec![1, 0])])], true);
        assert_eq!(c.validate(), vec![Violation::RepeatedQubit { layer: 0, gate: 0, qubit: 0 }]);
    }

    #[test]
    fn fanout_stats() {
        let n = 5;
        let c = Circuit::new(vec![Role::Input; n + 1], vec![Layer::new(vec![Gate::fanout(0, (1..=n).collect())])], true);
        let s = c.stats();
        assert_eq!((s.depth, s.size), (1, n + 1));
    }

    #[test]
    fn compose_adds_stats_and_inverse_preserves_them() {
        let a = fanout_circuit();
        let b = a.inverse();
        let c = a.compose(&b).unwrap();
        assert_eq!(c.stats().depth, a.stats().depth + b.stats().depth);
        assert_eq!(c.stats().size, a.stats().size + b.stats().size);
        assert_eq!(a.inverse().stats(), a.stats());
        assert_eq!(a.inverse().inverse(), a);
        let e = Circuit::empty(a.roles.clone());
        assert_eq!(e.compose(&a).unwrap(), a);
    }

    #[test]
    fn diagonal_oracle_inverse_negates_phase() {
        let g = Gate::Diag(Oracle::unit(DiagSpec::GlobalPhase { angle: 0.3 }, vec![vec![0]]));
        match g.adjoint() {
            Gate::Diag(o) => assert!(o.adjoint),
            _ => unreachable!(),
        }
    }

    #[test]
    fn hand_written_file_parses() {
        let text = r#"{"qubit_count": 2, "roles": ["input", "output"],
            "layers": [[{"kind": "fanout", "control": 0, "targets": [1]}]]}"#;
        let c = Circuit::from_json(text).unwrap();
        assert_eq!(c, Circuit::new(vec![Role::Input, Role::Output], vec![Layer::new(vec![Gate::fanout(0, vec![1])])], false));
        assert_eq!(c.stats().size, 2);
    }

    #[test]
    fn oracle_record_round_trips() {
        let g = Gate::Perm(Oracle::new(PermSpec::AddMod { q: 13 }, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]], 3, 40));
        let c = Circuit::new(vec![Role::Input; 8], vec![Layer::new(vec![g])], true);
        let text = c.to_json();
        assert!(text.contains(r#""kind":"perm","name":"add_mod","q":13"#), "{text}");
        assert_eq!(Circuit::from_json(&text).unwrap(), c);
    }

    #[test]
    fn empty_text_is_a_parse_error() {
        assert!(matches!(Circuit::from_json(""), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn parallel_blocks_align() {
        let a = Block::from_layers(vec![vec![Gate::one(Unitary2::h(), 0)], vec![Gate::one(Unitary2::h(), 0)]]);
        let b = Block::layer(vec![Gate::one(Unitary2::x(), 1)]);
        let p = a.beside(b);
        assert_eq!(p.depth(), 2);
        assert_eq!(p.layers[0].gates.len(), 2);
    }
}
