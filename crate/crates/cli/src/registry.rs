//! Named constructions the command line can build, simulate and bench.

use anyhow::{bail, ensure, Result};
use fanout::gates::{
    build_counting, build_counting_readout, build_exact_approx, build_or_approx, build_threshold_approx, constant_adder,
    increment_diagonal, CountingParams, OrParams, ReadOut, ThresholdMode,
};
use fanout::parallelize::{fanout_from_parity, fanout_gate, parity_from_fanout, parity_gate, rotate_state};
use fanout::qft::modq::{qfs_q, qft_q, QftParams, Stage};
use fanout::qft::pow2::{copy_fourier, qfs, qft_pow2, Readout};
use fanout::reduction::{
    exact_reduce_shifted, iterated_or, iterated_or_exact, linear_size_or, or_exact_logstar, or_reduce, OrCircuit, Tail,
};
use fanout::{Circuit, QubitId, Role};

use crate::params::Params;

/// A built circuit with the registers simulation reads and writes.
pub struct Built {
    pub circuit: Circuit,
    pub inputs: Vec<QubitId>,
    pub outputs: Vec<QubitId>,
    /// Construction-specific values reported next to the stats.
    pub nominal: Vec<(&'static str, String)>,
}

impl Built {
    /// Registers taken from the qubit roles, as for a circuit read from a file.
    pub fn from_roles(circuit: Circuit) -> Self {
        let inputs = circuit.qubits_with_role(Role::Input);
        let outputs = circuit.qubits_with_role(Role::Output);
        Built { circuit, inputs, outputs, nominal: vec![] }
    }

    fn from_or(c: OrCircuit) -> Self {
        Built { circuit: c.circuit, inputs: c.inputs, outputs: vec![c.output], nominal: vec![] }
    }

    fn note(mut self, key: &'static str, value: impl ToString) -> Self {
        self.nominal.push((key, value.to_string()));
        self
    }
}

pub struct Construction {
    pub name: &'static str,
    pub keys: &'static [&'static str],
    pub about: &'static str,
    build: fn(&Params) -> Result<Built>,
}

impl Construction {
    pub fn build(&self, p: &Params) -> Result<Built> {
        for k in p.keys() {
            ensure!(self.keys.contains(&k), "`{}` takes {}; got `{k}`", self.name, self.keys.join(", "));
        }
        (self.build)(p)
    }

    /// Label and value of the normalised size column in scaling tables.
    pub fn size_ratio(&self, n: usize, size: usize) -> (&'static str, f64) {
        let (nf, lg) = (n as f64, (n as f64).log2().max(1.0));
        match self.name {
            "or-approx" | "exact" => ("size/(n^2 log n)", size as f64 / (nf * nf * lg)),
            "counting" => ("size/(n log n)", size as f64 / (nf * lg)),
            _ => ("size/n", size as f64 / nf),
        }
    }
}

fn width(p: &Params) -> Result<usize> {
    let n: usize = p.get("n")?;
    ensure!(n >= 1, "n must be at least 1");
    Ok(n)
}

fn weight(p: &Params, n: usize) -> Result<usize> {
    let t: usize = p.get("t")?;
    ensure!(t <= n, "t must be at most n");
    Ok(t)
}

fn modulus(p: &Params) -> Result<u64> {
    let q: u64 = p.get("q")?;
    ensure!((2..=64).contains(&q), "q must lie in 2..=64");
    Ok(q)
}

fn or_params(b: Built, n: usize) -> Built {
    let op = OrParams::new(n);
    b.note("repetitions", op.a).note("rotations", op.m)
}

pub static CONSTRUCTIONS: &[Construction] = &[
    Construction {
        name: "fanout",
        keys: &["n"],
        about: "fan-out gate onto n targets",
        build: |p| Ok(Built::from_roles(fanout_gate(width(p)?))),
    },
    Construction {
        name: "parity",
        keys: &["n"],
        about: "parity gate of n sources",
        build: |p| Ok(Built::from_roles(parity_gate(width(p)?))),
    },
    Construction {
        name: "fanout-from-parity",
        keys: &["n"],
        about: "fan-out as a Hadamard-conjugated parity gate",
        build: |p| Ok(Built::from_roles(fanout_from_parity(width(p)?))),
    },
    Construction {
        name: "parity-from-fanout",
        keys: &["n"],
        about: "parity as a Hadamard-conjugated fan-out gate",
        build: |p| Ok(Built::from_roles(parity_from_fanout(width(p)?))),
    },
    Construction {
        name: "rotate",
        keys: &["n", "phi"],
        about: "target rotated by phi times the input weight",
        build: |p| {
            let r = rotate_state(width(p)?, p.get("phi")?);
            Ok(Built { circuit: r.circuit, inputs: r.controls, outputs: r.targets, nominal: vec![] })
        },
    },
    Construction {
        name: "or-approx",
        keys: &["n"],
        about: "Or with one-sided error from weight rotations",
        build: |p| {
            let n = width(p)?;
            let c = build_or_approx(n);
            Ok(or_params(Built { circuit: c.circuit, inputs: c.inputs, outputs: vec![c.output], nominal: vec![] }, n))
        },
    },
    Construction {
        name: "exact",
        keys: &["n", "t"],
        about: "indicator of weight t, one-sided error",
        build: |p| {
            let n = width(p)?;
            let c = build_exact_approx(n, weight(p, n)?);
            Ok(or_params(Built { circuit: c.circuit, inputs: c.inputs, outputs: vec![c.output], nominal: vec![] }, n))
        },
    },
    Construction {
        name: "threshold",
        keys: &["n", "t", "mode"],
        about: "indicator of weight at least t (mode=oracle|rotation)",
        build: |p| {
            let n = width(p)?;
            let mode = match p.choice("mode", &["oracle", "rotation"])? {
                "oracle" => ThresholdMode::Ideal,
                _ => ThresholdMode::Stochastic,
            };
            let c = build_threshold_approx(n, weight(p, n)?, mode);
            Ok(Built { circuit: c.circuit, inputs: c.inputs, outputs: vec![c.output], nominal: vec![] })
        },
    },
    Construction {
        name: "or-reduce",
        keys: &["n"],
        about: "n inputs to ceil(log(n+1)) outputs, zero iff the input is zero",
        build: |p| {
            let r = or_reduce(width(p)?);
            let m = r.outputs.len();
            Ok(Built { circuit: r.circuit, inputs: r.inputs, outputs: r.outputs, nominal: vec![] }.note("outputs", m))
        },
    },
    Construction {
        name: "exact-reduce",
        keys: &["n", "t"],
        about: "reduction whose outputs are zero iff the weight is t",
        build: |p| {
            let n = width(p)?;
            let r = exact_reduce_shifted(n, weight(p, n)?);
            let m = r.outputs.len();
            Ok(Built { circuit: r.circuit, inputs: r.inputs, outputs: r.outputs, nominal: vec![] }.note("outputs", m))
        },
    },
    Construction {
        name: "or-logstar",
        keys: &["n"],
        about: "exact Or by repeated reduction",
        build: |p| Ok(Built::from_or(or_exact_logstar(width(p)?))),
    },
    Construction {
        name: "iterated-or",
        keys: &["n", "d", "tail"],
        about: "d levels of block reduction over a blocked base (tail=real|ideal)",
        build: |p| {
            let tail = match p.choice("tail", &["real", "ideal"])? {
                "real" => Tail::Real,
                _ => Tail::Ideal,
            };
            Ok(Built::from_or(iterated_or(width(p)?, p.get("d")?, tail)?))
        },
    },
    Construction {
        name: "iterated-or-exact",
        keys: &["n", "d"],
        about: "d levels of block reduction over the exact base",
        build: |p| Ok(Built::from_or(iterated_or_exact(width(p)?, p.get("d")?)?)),
    },
    Construction {
        name: "linear-size-or",
        keys: &["n"],
        about: "exact Or in linear size",
        build: |p| Ok(Built::from_or(linear_size_or(width(p)?))),
    },
    Construction {
        name: "counting",
        keys: &["n"],
        about: "input weight added into a counter",
        build: |p| {
            let c = build_counting(&CountingParams::new(width(p)?));
            let m = c.counter.len();
            Ok(Built { circuit: c.circuit, inputs: c.inputs, outputs: c.counter, nominal: vec![] }.note("counter", m))
        },
    },
    Construction {
        name: "count-readout",
        keys: &["n", "t", "kind"],
        about: "threshold or exact indicator read from a counter (kind=threshold|exact)",
        build: |p| {
            let n = width(p)?;
            let kind = match p.choice("kind", &["threshold", "exact"])? {
                "threshold" => ReadOut::Threshold,
                _ => ReadOut::Exact,
            };
            let c = build_counting_readout(n, weight(p, n)?, kind);
            let Some(out) = c.output else { bail!("read-out circuit has no output qubit") };
            Ok(Built { circuit: c.circuit, inputs: c.inputs, outputs: vec![out], nominal: vec![] })
        },
    },
    Construction {
        name: "increment",
        keys: &["m"],
        about: "diagonal part of the increment on m qubits",
        build: |p| Ok(Built::from_roles(increment_diagonal(p.get("m")?))),
    },
    Construction {
        name: "adder",
        keys: &["m", "b"],
        about: "adds the constant b mod 2^m",
        build: |p| Ok(Built::from_roles(constant_adder(p.get("m")?, p.get("b")?))),
    },
    Construction {
        name: "qfs",
        keys: &["n"],
        about: "Fourier state of the input mod 2^n",
        build: |p| {
            let c = qfs(width(p)?);
            Ok(Built { circuit: c.circuit, inputs: c.inputs, outputs: c.outputs, nominal: vec![] })
        },
    },
    Construction {
        name: "copy",
        keys: &["n", "m"],
        about: "m copies of a Fourier state mod 2^n",
        build: |p| {
            let m: usize = p.get("m")?;
            ensure!(m >= 1, "m must be at least 1");
            let c = copy_fourier(width(p)?, m);
            let inputs = c.registers[0].clone();
            let outputs = c.registers[1..].concat();
            Ok(Built { circuit: c.circuit, inputs, outputs, nominal: vec![] })
        },
    },
    Construction {
        name: "qft-pow2",
        keys: &["n", "m", "readout"],
        about: "Fourier transform mod 2^n from m copies (readout=majority|ideal)",
        build: |p| {
            let m: usize = p.get("m")?;
            ensure!(m >= 1, "m must be at least 1");
            let readout = match p.choice("readout", &["majority", "ideal"])? {
                "majority" => Readout::Majority,
                _ => Readout::Ideal,
            };
            let c = qft_pow2(width(p)?, m, readout);
            Ok(Built { circuit: c.circuit, inputs: c.input, outputs: c.output, nominal: vec![] }.note("copies", m))
        },
    },
    Construction {
        name: "qfs-q",
        keys: &["q"],
        about: "Fourier state mod q through division",
        build: |p| {
            let c = qfs_q(&QftParams::new(modulus(p)?));
            let big_n = c.params.big_n;
            Ok(Built { circuit: c.circuit, inputs: c.inputs, outputs: c.register, nominal: vec![] }.note("width", big_n))
        },
    },
    Construction {
        name: "qft-q",
        keys: &["q", "m", "stage"],
        about: "Fourier transform mod q (stage=stochastic|ideal)",
        build: |p| {
            let q = modulus(p)?;
            let params = match p.raw("m") {
                Some(_) => QftParams::with_copies(q, p.get("m")?),
                None => QftParams::new(q),
            };
            let stage = match p.choice("stage", &["stochastic", "ideal"])? {
                "stochastic" => Stage::Stochastic,
                _ => Stage::Ideal,
            };
            let c = qft_q(&params, stage);
            Ok(Built { circuit: c.circuit, inputs: c.input, outputs: c.output, nominal: vec![] }
                .note("width", params.big_n)
                .note("copies", params.m))
        },
    },
];

pub fn find(name: &str) -> Result<&'static Construction> {
    match CONSTRUCTIONS.iter().find(|c| c.name == name) {
        Some(c) => Ok(c),
        None => bail!(
            "unknown construction `{name}`; known: {}",
            CONSTRUCTIONS.iter().map(|c| c.name).collect::<Vec<_>>().join(", ")
        ),
    }
}
