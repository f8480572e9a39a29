use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quenc::ansatz::{brick_pairs, build_sequential, build_simultaneous, build_warmstart, prepare_warmstart_state, quenc_qubits, AnsatzFamily, AnsatzSpec};
use quenc::objective::{decode, extract_exact};
use quenc::problem::Bitstring;
use quenc::sim::Gate;

#[test]
fn qubit_counts() {
    assert_eq!(quenc_qubits(2), 2);
    assert_eq!(quenc_qubits(5), 4);
    assert_eq!(quenc_qubits(16), 5);
    assert_eq!(quenc_qubits(32), 6);
    assert_eq!(quenc_qubits(256), 9);
}

#[test]
fn parameter_counts() {
    for (n, l) in [(2, 1), (5, 3), (9, 4)] {
        assert_eq!(build_sequential(n, l).unwrap().n_params(), n * l);
        assert_eq!(build_simultaneous(n, l).unwrap().n_params(), n * l);
    }
    assert_eq!(AnsatzSpec::new(AnsatzFamily::WarmStart, 4, 6).unwrap().n_params(), 24);
    assert!(build_warmstart(4, 3).is_err());
    assert!(build_sequential(1, 2).is_err());
}

#[test]
fn brick_pattern_for_five_qubits() {
    assert_eq!(brick_pairs(5), (vec![(0, 1), (2, 3)], vec![(1, 2), (3, 4)]));
    assert_eq!(brick_pairs(2), (vec![(0, 1)], vec![]));
}

#[test]
fn simultaneous_alternates_rotation_axes() {
    let c = build_simultaneous(3, 3).unwrap();
    let axes: Vec<char> = c
        .gates()
        .iter()
        .filter_map(|g| match g {
            Gate::Ry { .. } => Some('y'),
            Gate::Rz { .. } => Some('z'),
            _ => None,
        })
        .collect();
    assert_eq!(axes.iter().collect::<String>(), "yyyzzzyyy");
}

#[test]
fn warm_start_identity_decodes_input() {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let n_c = r.gen_range(2..=40);
        let x = Bitstring::from_bits((0..n_c).map(|_| r.gen_range(0..2)).collect());
        let spec = AnsatzSpec::new(AnsatzFamily::WarmStart, quenc_qubits(n_c), 2 * r.gen_range(1..=3)).unwrap();
        let circuit = spec.build().unwrap();
        let input = prepare_warmstart_state(&x);
        let out = circuit.run(&vec![0.0; circuit.n_params()], &input).unwrap();
        assert!(out.distance(&input) < 1e-12);
        let dist = extract_exact(&out, n_c).unwrap();
        assert_eq!(decode(&dist), x);
        assert!(dist.p1.iter().zip(x.iter()).all(|(&p, &b)| (p - b as f64).abs() < 1e-12));
    }
}
