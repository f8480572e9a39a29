use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quenc::analysis::brute_force_constrained;
use quenc::ansatz::quenc_qubits;
use quenc::constraint::{build_constraint_block, decode_constrained, postselect_ancillas, remap_indices, remap_inverse, validate_constraints, BlockLayout, Constraint};
use quenc::objective::{extract_exact, SolutionDistribution};
use quenc::problem::MaxCutGraph;
use quenc::sim::{Gate, StateVector};
use quenc::Error;

fn run(gates: &[Gate], s: &StateVector) -> StateVector {
    let mut s = s.clone();
    for g in gates {
        s.apply(g, &[]).unwrap();
    }
    s
}

fn random_state(r: &mut ChaCha8Rng, n: usize) -> StateVector {
    let amps: Vec<Complex64> = (0..1 << n).map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn distinct_pair(r: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let i = r.gen_range(0..n);
    loop {
        let j = r.gen_range(0..n);
        if j != i {
            return (i, j);
        }
    }
}

#[test]
fn remap_sends_pair_to_zero_and_one() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n_reg = r.gen_range(1..=5);
        let (i, j) = distinct_pair(&mut r, 1 << n_reg);
        let gates = remap_indices(i, j, n_reg).unwrap();
        for a in 0..2 {
            let n = n_reg + 1;
            assert!(run(&gates, &StateVector::basis(n, (i << 1) | a)).distance(&StateVector::basis(n, a)) < 1e-12, "{i} {j}");
            assert!(run(&gates, &StateVector::basis(n, (j << 1) | a)).distance(&StateVector::basis(n, 2 | a)) < 1e-12, "{i} {j}");
        }
        let s = random_state(&mut r, n_reg + 1);
        assert!(run(&remap_inverse(i, j, n_reg).unwrap(), &run(&gates, &s)).distance(&s) < 1e-12);
    }
    assert!(remap_indices(3, 3, 2).is_err());
    assert!(remap_indices(0, 4, 2).is_err());
}

#[test]
fn block_projects_onto_feasible_subspace() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n_c = r.gen_range(2..=32);
        let n_reg = quenc_qubits(n_c) - 1;
        let (i, j) = distinct_pair(&mut r, n_c);
        let c = Constraint::new(i, j).unwrap();
        let block = build_constraint_block(c, BlockLayout { n_reg, constraint_ancilla: n_reg + 1 }).unwrap();
        let input = random_state(&mut r, n_reg + 1).widened(1);

        let (feasible, prob) = postselect_ancillas(&run(&block, &input), n_reg + 1).unwrap();
        assert!(prob > 0.0 && prob <= 1.0 + 1e-12);
        let dist = extract_exact(&feasible, n_c).unwrap();
        assert!((dist.p1[i] + dist.p1[j] - 1.0).abs() < 1e-12);

        // On the feasible subspace the block acts as the identity.
        let again = run(&block, &feasible);
        assert!(again.distance(&feasible) < 1e-12);
        let (_, prob2) = postselect_ancillas(&again, n_reg + 1).unwrap();
        assert!((prob2 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn constrained_decoder_breaks_ties_toward_zero() {
    let c = Constraint::new(1, 3).unwrap();
    let dist = |p1: Vec<f64>| SolutionDistribution { p1, flagged: vec![false; 4], support: None };
    assert_eq!(decode_constrained(&dist(vec![0.9, 0.5, 0.2, 0.5]), &[c]).to_string(), "1001");
    assert_eq!(decode_constrained(&dist(vec![0.1, 0.7, 0.6, 0.3]), &[c]).to_string(), "0110");
    assert_eq!(decode_constrained(&dist(vec![0.1, 0.2, 0.6, 0.3]), &[c]).to_string(), "0011");
}

#[test]
fn constraint_validation() {
    let c = |i, j| Constraint { i, j };
    assert!(Constraint::new(2, 2).is_err());
    assert!(validate_constraints(4, &[c(0, 1), c(2, 3)]).is_ok());
    for bad in [vec![c(0, 4)], vec![c(0, 1), c(1, 2)], vec![c(1, 1)]] {
        assert!(matches!(validate_constraints(4, &bad), Err(Error::InvalidConstraint(_))), "{bad:?}");
    }
}

#[test]
fn constrained_brute_force_on_five_vertex_graph() {
    let g = MaxCutGraph::new(5, vec![(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 4, 1.0), (3, 4, 1.0)]).unwrap();
    let q = g.to_qubo();
    let cs = [Constraint::new(0, 2).unwrap()];
    let (x, cost) = brute_force_constrained(&q, &cs).unwrap();
    assert_eq!(cost, -4.0);
    assert!(cs[0].is_satisfied(x.as_slice()));
    // Independent enumeration.
    let best = (0..32u32)
        .map(|t| (0..5).map(|b| ((t >> b) & 1) as u8).collect::<Vec<u8>>())
        .filter(|x| x[0] + x[2] == 1)
        .map(|x| q.cost(&x).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(best, cost);
    assert_eq!(quenc::analysis::brute_force_optimum(&q).unwrap().1, -5.0);
}
