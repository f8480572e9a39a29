use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quenc::analysis::{brute_force_optimum, is_complement_symmetric};
use quenc::problem::{normalized_cost, random_complete_graph, spins_to_bits, Bitstring, IsingModel, MaxCutGraph, QuboProblem, DEFAULT_WEIGHT_RANGE};
use quenc::Error;

fn bits(t: u64, n: usize) -> Vec<u8> {
    (0..n).map(|b| ((t >> b) & 1) as u8).collect()
}

#[test]
fn triangle_and_star_optima() {
    let tri = MaxCutGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap().to_qubo();
    assert_eq!(brute_force_optimum(&tri).unwrap().1, -2.0);
    let (x, cost) = brute_force_optimum(&MaxCutGraph::star(8).unwrap().to_qubo()).unwrap();
    assert_eq!(cost, -7.0);
    assert_eq!(x.to_string(), "01111111");
    let (x, cost) = brute_force_optimum(&QuboProblem::zeros(5)).unwrap();
    assert_eq!((x.to_string().as_str(), cost), ("00000", 0.0));
}

#[test]
fn brute_force_size_cap() {
    assert!(matches!(brute_force_optimum(&QuboProblem::zeros(25)), Err(Error::SizeCapExceeded { .. })));
}

#[test]
fn graph_validation() {
    assert!(MaxCutGraph::new(3, vec![(0, 0, 1.0)]).is_err());
    assert!(MaxCutGraph::new(3, vec![(0, 3, 1.0)]).is_err());
    assert!(MaxCutGraph::new(3, vec![(0, 1, 1.0), (1, 0, 2.0)]).is_err());
    assert!(MaxCutGraph::new(3, vec![(0, 1, -1.0)]).is_err());
    assert!(random_complete_graph(4, (1.0, 0.5), 0).is_err());
}

#[test]
fn normalized_cost_anchors() {
    assert_eq!(normalized_cost(-10.0, -10.0, -4.0).unwrap(), 0.0);
    assert_eq!(normalized_cost(-4.0, -10.0, -4.0).unwrap(), 1.0);
    assert!(matches!(normalized_cost(1.0, -3.0, -3.0), Err(Error::DegenerateNormalization(_))));
}

#[test]
fn ising_energy_through_reduction() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = r.gen_range(1..=7);
        let h: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let couplings: Vec<(usize, usize, f64)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| (i, j, r.gen_range(-1.0..1.0))).collect();
        let model = IsingModel::new(h, couplings).unwrap();
        let red = model.to_maxcut_qubo();
        assert!(is_complement_symmetric(&red.qubo));
        for t in 0..1u64 << n {
            let s: Vec<i8> = bits(t, n).iter().map(|&b| if b == 1 { 1 } else { -1 }).collect();
            let mut x = spins_to_bits(&s);
            x.insert(red.ancilla, 1);
            assert!((red.qubo.cost(&x).unwrap() + red.offset - model.energy(&s)).abs() < 1e-9);
        }
    }
}

proptest! {
    #[test]
    fn qubo_matches_cut_energy(seed in any::<u64>(), n in 2usize..10, t in any::<u64>()) {
        let g = random_complete_graph(n, DEFAULT_WEIGHT_RANGE, seed).unwrap();
        let x = bits(t, n);
        prop_assert!((g.to_qubo().cost(&x).unwrap() - g.energy(&x).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn maxcut_is_complement_symmetric(seed in any::<u64>(), n in 2usize..10, t in any::<u64>()) {
        let q = random_complete_graph(n, DEFAULT_WEIGHT_RANGE, seed).unwrap().to_qubo();
        prop_assert!(is_complement_symmetric(&q));
        let x = Bitstring::from_bits(bits(t, n));
        prop_assert!((q.cost(&x).unwrap() - q.cost(&x.complement()).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn bitstring_text_roundtrip(v in proptest::collection::vec(0u8..2, 0..40)) {
        let b = Bitstring::from_bits(v);
        prop_assert_eq!(b.to_string().parse::<Bitstring>().unwrap(), b);
    }

    #[test]
    fn padding_keeps_costs(seed in any::<u64>(), n in 2usize..9, extra in 0usize..5, t in any::<u64>()) {
        let q = random_complete_graph(n, DEFAULT_WEIGHT_RANGE, seed).unwrap().to_qubo();
        let p = q.padded(n + extra);
        let x = bits(t, n + extra);
        prop_assert!((p.cost(&x).unwrap() - q.cost(&x[..n]).unwrap()).abs() < 1e-12);
    }
}
