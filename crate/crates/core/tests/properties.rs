use fanout::classical::{anf_from_truth_table, Gf2Polynomial};
use fanout::gates::{
    build_counting, build_exact_approx, build_or_approx, build_threshold_approx, constant_adder, increment_diagonal,
    CountingParams, ThresholdMode,
};
use fanout::parallelize::{controlled_u_decomposition, fanout_from_parity, fanout_gate, parity_from_fanout, parity_gate, rotate_state};
use fanout::qft::modq::{qfs_q, QftParams};
use fanout::qft::pow2::{copy_fourier, qfs, qft_pow2, Readout};
use fanout::reduction::{dyadic_decompose, exact_reduce_shifted, linear_size_or, or_exact_logstar, or_reduce};
use fanout::{Basis, BasisState, Circuit, QubitId, Role, Simulator, StateVector, Unitary2};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KINDS: usize = 18;

/// Builder `kind` at size `n` (1..=5), with its input register.
fn corpus(kind: usize, n: usize) -> (Circuit, Vec<QubitId>) {
    let roles = |c: Circuit| {
        let xs = c.qubits_with_role(Role::Input);
        (c, xs)
    };
    match kind {
        0 => roles(fanout_gate(n)),
        1 => roles(parity_gate(n)),
        2 => roles(fanout_from_parity(n)),
        3 => roles(parity_from_fanout(n)),
        4 => {
            let r = rotate_state(n, 0.7);
            (r.circuit, r.controls)
        }
        5 => {
            let c = build_or_approx(n);
            (c.circuit, c.inputs)
        }
        6 => {
            let c = build_exact_approx(n, n / 2);
            (c.circuit, c.inputs)
        }
        7 => {
            let c = build_threshold_approx(n, n / 2, ThresholdMode::Ideal);
            (c.circuit, c.inputs)
        }
        8 => {
            let r = or_reduce(n);
            (r.circuit, r.inputs)
        }
        9 => {
            let r = exact_reduce_shifted(n, 1);
            (r.circuit, r.inputs)
        }
        10 => {
            let c = or_exact_logstar(n);
            (c.circuit, c.inputs)
        }
        11 => {
            let c = linear_size_or(n);
            (c.circuit, c.inputs)
        }
        12 => {
            let c = build_counting(&CountingParams::new(n));
            (c.circuit, c.inputs)
        }
        13 => {
            let c = qfs(n);
            (c.circuit, c.inputs)
        }
        14 => {
            let c = copy_fourier(n, 2);
            let xs = c.registers[0].clone();
            (c.circuit, xs)
        }
        15 => {
            let c = qft_pow2(n, 2, Readout::Majority);
            (c.circuit, c.input)
        }
        16 => roles(increment_diagonal(n + 1)),
        _ => {
            let c = qfs_q(&QftParams::new(n as u64 + 2));
            (c.circuit, c.inputs)
        }
    }
}

fn unitary() -> impl Strategy<Value = Unitary2> {
    let angle = -4.0..4.0f64;
    let theta = prop_oneof![Just(0.0), Just(std::f64::consts::PI), 0.0..std::f64::consts::PI];
    (theta, angle.clone(), angle.clone(), angle).prop_map(|(t, a, b, g)| {
        Unitary2::rz(a).mul(&Unitary2::ry(t)).mul(&Unitary2::rz(b)).scale(C64::from_polar(1.0, g))
    })
}

fn sim() -> Simulator {
    Simulator::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn builders_validate(kind in 0..KINDS, n in 1usize..=5) {
        let (c, _) = corpus(kind, n);
        prop_assert!(c.validate().is_empty(), "{:?}", c.validate());
    }

    #[test]
    fn json_round_trip(kind in 0..KINDS, n in 1usize..=5) {
        let (c, _) = corpus(kind, n);
        prop_assert_eq!(Circuit::from_json(&c.to_json()).unwrap(), c.clone());
        prop_assert_eq!(Circuit::from_json(&c.to_json_pretty()).unwrap(), c);
    }

    #[test]
    fn compose_adds_and_inverse_keeps_stats(kind in 0..KINDS, n in 1usize..=5) {
        let (c, _) = corpus(kind, n);
        let (s, inv) = (c.stats(), c.inverse().stats());
        prop_assert_eq!(s, inv);
        let both = c.compose(&c.inverse()).unwrap().stats();
        prop_assert_eq!(both.depth, 2 * s.depth);
        prop_assert_eq!(both.size, 2 * s.size);
        prop_assert_eq!(both.nominal_depth, 2 * s.nominal_depth);
    }

    #[test]
    fn inverse_undoes_the_circuit(kind in 0..KINDS, n in 1usize..=3, x in any::<u64>()) {
        let (c, xs) = corpus(kind, n);
        let input = BasisState::zeros(c.qubit_count).with_register(&xs, x & ((1 << xs.len()) - 1));
        let out = sim().run(&c, &input).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-9);
        let back = sim().run_state(&c.inverse(), out).unwrap();
        prop_assert!((back.fidelity(&StateVector::basis(&input).unwrap()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn simulation_is_linear(kind in 0..KINDS, n in 1usize..=3, x in any::<u64>(), y in any::<u64>()) {
        let (c, xs) = corpus(kind, n);
        let mask = (1u64 << xs.len()) - 1;
        let (x, y) = (x & mask, y & mask);
        prop_assume!(x != y);
        let basis = |v| BasisState::zeros(c.qubit_count).with_register(&xs, v);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let joint = sim().run_state(&c, StateVector::from_terms(c.qubit_count, &[(basis(x), h), (basis(y), h)])).unwrap();
        let mut terms: Vec<(BasisState, C64)> = vec![];
        for v in [x, y] {
            terms.extend(sim().run(&c, &basis(v)).unwrap().terms().map(|(b, a)| (b, a * h)));
        }
        let sum = StateVector::from_terms(c.qubit_count, &terms);
        prop_assert!((joint.fidelity(&sum) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seeded_measurement_is_reproducible(n in 1usize..=4, x in any::<u64>(), seed in any::<u64>()) {
        let c = qfs(n);
        let s = sim().run(&c.circuit, &BasisState::zeros(c.circuit.qubit_count).with_register(&c.inputs, x % (1 << n))).unwrap();
        let spec: Vec<(QubitId, Basis)> = c.outputs.iter().map(|&q| (q, Basis::Hadamard)).collect();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = s.clone();
            (0..3).map(|_| t.measure(&spec, &mut rng)).collect::<Vec<_>>()
        };
        prop_assert_eq!(draw(), draw());
    }

    #[test]
    fn euler_decomposition_recomposes(u in unitary()) {
        let d = controlled_u_decomposition(&u).unwrap();
        prop_assert!(d.recompose().max_diff(&u) <= 1e-9);
        prop_assert!(d.a.mul(&d.b).mul(&d.c).max_diff(&Unitary2::identity()) <= 1e-9);
    }

    #[test]
    fn dyadic_decomposition_recomposes(w in 1u64..1 << 20) {
        let d = dyadic_decompose(w).unwrap();
        prop_assert_eq!(d.w, w);
        prop_assert_eq!((1u64 << d.a) * (2 * d.b + 1), w);
    }

    #[test]
    fn adder_adds_mod_two_to_the_m(m in 1usize..=5, b in any::<u64>(), x in any::<u64>()) {
        let c = constant_adder(m, b % (1 << m));
        let xs: Vec<QubitId> = (0..m).collect();
        let x = x % (1 << m);
        let out = sim().run(&c, &BasisState::zeros(c.qubit_count).with_register(&xs, x)).unwrap();
        let dist = out.register_distribution(&xs);
        prop_assert!((dist[&((x + b) % (1 << m))] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn anf_evaluates_to_its_function(n in 1usize..=6, table in any::<u64>()) {
        let f = |x: u64| table >> x & 1 == 1;
        let p = anf_from_truth_table(n, f);
        for x in 0..1u64 << n {
            prop_assert_eq!(p.evaluate(x), f(x));
        }
    }

    #[test]
    fn polynomial_algebra_matches_evaluation(a in prop::collection::vec(0u32..64, 0..8), b in prop::collection::vec(0u32..64, 0..8), x in 0u64..64) {
        let (p, q) = (Gf2Polynomial::from_monomials(a), Gf2Polynomial::from_monomials(b));
        prop_assert_eq!(p.add(&q).evaluate(x), p.evaluate(x) ^ q.evaluate(x));
        prop_assert_eq!(p.mul(&q).evaluate(x), p.evaluate(x) & q.evaluate(x));
        prop_assert!(p.add(&p).is_zero());
    }
}
