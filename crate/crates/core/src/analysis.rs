//! Exhaustive optima and expressibility estimates.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::constraint::{validate_constraints, Constraint};
use crate::error::{Error, Result};
use crate::objective::{decode, extract_exact};
use crate::problem::{Bitstring, QuboProblem};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::{Circuit, StateVector};

/// Largest problem [`brute_force_optimum`] accepts.
pub const BRUTE_FORCE_CAP: usize = 24;
/// Largest problem [`exact_optimum`] accepts.
pub const EXACT_CAP: usize = 34;

/// Costs this close count as ties.
const TIE_TOL: f64 = 1e-9;

/// Exhaustive minimum of `C(x)`, ties broken toward the lexicographically
/// smallest `x` (read as `x_0 x_1 …`).
pub fn brute_force_optimum(q: &QuboProblem) -> Result<(Bitstring, f64)> {
    let n = q.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::SizeCapExceeded { n, cap: BRUTE_FORCE_CAP });
    }
    if n == 0 {
        return Ok((Bitstring::zeros(0), 0.0));
    }
    // Gray-code walk; `field[i]` is the cost change from flipping bit i on.
    let mut x = vec![0u8; n];
    let mut field: Vec<f64> = (0..n).map(|i| q.diag(i)).collect();
    let mut cost = 0.0;
    let mut best = (x.clone(), 0.0);
    for t in 1u64..(1u64 << n) {
        let i = t.trailing_zeros() as usize;
        let sign = if x[i] == 0 { 1.0 } else { -1.0 };
        cost += sign * field[i];
        x[i] ^= 1;
        for k in 0..n {
            if k != i {
                field[k] += sign * q.coupling(i, k);
            }
        }
        if cost < best.1 - TIE_TOL || (cost <= best.1 + TIE_TOL && x < best.0) {
            best = (x.clone(), cost);
        }
    }
    let exact = q.cost_unchecked(&best.0);
    Ok((Bitstring::from_bits(best.0), exact))
}

/// Exhaustive minimum over bitstrings with `x_i + x_j = 1` for every pair,
/// with the same tie-break as [`brute_force_optimum`].
pub fn brute_force_constrained(q: &QuboProblem, constraints: &[Constraint]) -> Result<(Bitstring, f64)> {
    let n = q.n();
    validate_constraints(n, constraints)?;
    let dependent: Vec<usize> = constraints.iter().map(|c| c.j).collect();
    let free: Vec<usize> = (0..n).filter(|v| !dependent.contains(v)).collect();
    if free.len() > BRUTE_FORCE_CAP {
        return Err(Error::SizeCapExceeded { n: free.len(), cap: BRUTE_FORCE_CAP });
    }
    let mut best: Option<(Vec<u8>, f64)> = None;
    let mut x = vec![0u8; n];
    for t in 0u64..(1u64 << free.len()) {
        for (b, &v) in free.iter().enumerate() {
            x[v] = ((t >> b) & 1) as u8;
        }
        for c in constraints {
            x[c.j] = 1 - x[c.i];
        }
        let cost = q.cost_unchecked(&x);
        let better = match &best {
            None => true,
            Some((bx, bc)) => cost < bc - TIE_TOL || (cost <= bc + TIE_TOL && x < *bx),
        };
        if better {
            best = Some((x.clone(), cost));
        }
    }
    let (x, cost) = best.expect("at least one assignment");
    Ok((Bitstring::from_bits(x), cost))
}

/// `C(x̄) = C(x)` for every `x` (MaxCut-form QUBOs).
pub fn is_complement_symmetric(q: &QuboProblem) -> bool {
    let n = q.n();
    let scale = q.entries().map(|(_, _, v)| v.abs()).fold(0.0, f64::max).max(1.0);
    (0..n).all(|i| {
        let s: f64 = 2.0 * q.diag(i) + (0..n).filter(|&k| k != i).map(|k| q.coupling(i, k)).sum::<f64>();
        s.abs() <= 1e-12 * scale * n as f64
    })
}

/// Exhaustive minimum for up to [`EXACT_CAP`] variables, same tie-break as
/// [`brute_force_optimum`].
///
/// Variables split into a low half enumerated in an outer loop and a high
/// half walked in Gray order. For a fixed low assignment the cross terms
/// reduce to one weight per high bit, so each inner step is one addition.
/// Complement-symmetric problems pin `x_0 = 0`, which is also the
/// lexicographically smaller member of each complementary pair.
pub fn exact_optimum(q: &QuboProblem) -> Result<(Bitstring, f64)> {
    let n = q.n();
    if n > EXACT_CAP {
        return Err(Error::SizeCapExceeded { n, cap: EXACT_CAP });
    }
    if n <= 16 {
        return brute_force_optimum(q);
    }
    let pinned = is_complement_symmetric(q);
    let free_start = usize::from(pinned);
    let n_free = n - free_start;
    let n_high = n_free / 2;
    let n_low = n_free - n_high;
    let low: Vec<usize> = (free_start..free_start + n_low).collect();
    let high: Vec<usize> = (free_start + n_low..n).collect();

    // High-half costs and flip schedule in Gray order.
    let steps = 1usize << n_high;
    let mut high_cost = vec![0.0; steps];
    let mut flip = vec![(0usize, 0.0f64); steps];
    let mut hx = vec![0u8; n_high];
    {
        let mut field: Vec<f64> = high.iter().map(|&v| q.diag(v)).collect();
        let mut c = 0.0;
        for (t, slot) in high_cost.iter_mut().enumerate().skip(1) {
            let k = t.trailing_zeros() as usize;
            let sign = if hx[k] == 0 { 1.0 } else { -1.0 };
            c += sign * field[k];
            hx[k] ^= 1;
            for m in 0..n_high {
                if m != k {
                    field[m] += sign * q.coupling(high[k], high[m]);
                }
            }
            *slot = c;
            flip[t] = (k, sign);
        }
    }
    let gray_bits = |t: usize| -> Vec<u8> {
        let g = t ^ (t >> 1);
        (0..n_high).map(|k| ((g >> k) & 1) as u8).collect()
    };

    let best = (0usize..(1usize << n_low))
        .into_par_iter()
        .with_min_len(64)
        .map(|l| {
            let lx: Vec<u8> = (0..n_low).map(|b| ((l >> b) & 1) as u8).collect();
            let mut x = vec![0u8; n];
            for (b, &v) in low.iter().enumerate() {
                x[v] = lx[b];
            }
            let base = q.cost_unchecked(&x);
            let w: Vec<f64> = high
                .iter()
                .map(|&h| low.iter().zip(&lx).filter(|(_, &b)| b == 1).map(|(&v, _)| q.coupling(v, h)).sum())
                .collect();
            let mut s = 0.0;
            let mut local = (high_cost[0] + base, 0usize);
            for t in 1..steps {
                let (k, sign) = flip[t];
                s += sign * w[k];
                let v = high_cost[t] + s + base;
                if v < local.0 - TIE_TOL {
                    local = (v, t);
                } else if v <= local.0 + TIE_TOL && gray_bits(t) < gray_bits(local.1) {
                    // Low bits precede high bits, so within one low assignment
                    // the lexicographic order is decided by the high bits.
                    local = (v, t);
                }
            }
            for (b, &v) in high.iter().enumerate() {
                x[v] = gray_bits(local.1)[b];
            }
            (q.cost_unchecked(&x), x)
        })
        .reduce_with(|a, b| if b.0 < a.0 - TIE_TOL || (b.0 <= a.0 + TIE_TOL && b.1 < a.1) { b } else { a })
        .expect("at least one assignment");
    Ok((Bitstring::from_bits(best.1), best.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = ranks(a);
    let rb = ranks(b);
    pearson(&ra, &rb)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s;
        while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[s]] {
            e += 1;
        }
        let avg = (s + e) as f64 / 2.0 + 1.0;
        for &i in &idx[s..=e] {
            r[i] = avg;
        }
        s = e + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

/// Default histogram resolution for expressibility.
pub const EXPRESSIBILITY_BINS: usize = 75;
/// Added to every bin of both distributions before the divergence.
pub const KL_SMOOTHING: f64 = 1e-9;
pub const MIN_EXPRESSIBILITY_SAMPLES: usize = 1000;

/// Fidelity counts over uniform bins of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityHistogram {
    pub bins: Vec<u64>,
    pub samples: u64,
    /// Hilbert-space dimension of the sampled states.
    pub n_dim: usize,
}

impl FidelityHistogram {
    pub fn new(n_bins: usize, n_dim: usize) -> Self {
        FidelityHistogram { bins: vec![0; n_bins], samples: 0, n_dim }
    }

    pub fn add(&mut self, f: f64) {
        let n = self.bins.len();
        let b = ((f.clamp(0.0, 1.0) * n as f64) as usize).min(n - 1);
        self.bins[b] += 1;
        self.samples += 1;
    }

    pub fn merge(mut self, other: &FidelityHistogram) -> Self {
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.samples += other.samples;
        self
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let s = self.samples.max(1) as f64;
        self.bins.iter().map(|&c| c as f64 / s).collect()
    }

    /// Haar bin masses `(1 − F_lo)^{N−1} − (1 − F_hi)^{N−1}`.
    pub fn haar_probabilities(&self) -> Vec<f64> {
        haar_bins(self.bins.len(), self.n_dim)
    }

    pub fn kl_to_haar(&self) -> f64 {
        kl_divergence(&self.probabilities(), &self.haar_probabilities())
    }

    /// `bin_lo,bin_hi,count,probability,haar_probability` rows.
    pub fn to_csv(&self) -> String {
        let n = self.bins.len() as f64;
        let haar = self.haar_probabilities();
        let mut out = String::from("bin_lo,bin_hi,count,probability,haar_probability\n");
        for (b, (&c, p)) in self.bins.iter().zip(self.probabilities()).enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", b as f64 / n, (b + 1) as f64 / n, c, p, haar[b]));
        }
        out
    }
}

pub fn haar_bins(n_bins: usize, n_dim: usize) -> Vec<f64> {
    let e = n_dim.saturating_sub(1) as i32;
    (0..n_bins)
        .map(|b| {
            let lo = b as f64 / n_bins as f64;
            let hi = (b + 1) as f64 / n_bins as f64;
            (1.0 - lo).powi(e) - (1.0 - hi).powi(e)
        })
        .collect()
}

/// `KL(p ‖ q)` after adding [`KL_SMOOTHING`] to every entry and renormalizing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let smooth = |v: &[f64]| {
        let s: f64 = v.iter().map(|x| x + KL_SMOOTHING).sum();
        v.iter().map(|x| (x + KL_SMOOTHING) / s).collect::<Vec<f64>>()
    };
    let (p, q) = (smooth(p), smooth(q));
    p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum::<f64>().max(0.0)
}

fn random_theta<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..TAU)).collect()
}

/// Fidelity histogram of `circuit` over `samples` random parameter pairs.
/// Sample `s` draws from its own derived seed, so the result does not
/// depend on thread count.
pub fn fidelity_histogram(circuit: &Circuit, initial: &StateVector, samples: usize, n_bins: usize, seed: u64) -> Result<FidelityHistogram> {
    if n_bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }
    let n_dim = initial.dim();
    let fids = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_from_seed(derive_seed(seed, s as u64));
            let a = random_theta(circuit.n_params(), &mut rng);
            let b = random_theta(circuit.n_params(), &mut rng);
            Ok(circuit.run(&a, initial)?.fidelity(&circuit.run(&b, initial)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut h = FidelityHistogram::new(n_bins, n_dim);
    for f in fids {
        h.add(f);
    }
    Ok(h)
}

/// Summary of one quantum expressibility estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressibilityReport {
    pub ansatz: AnsatzSpec,
    pub samples: usize,
    pub seed: u64,
    pub kl: f64,
    pub histogram: FidelityHistogram,
}

pub fn quantum_expressibility_report(spec: &AnsatzSpec, samples: usize, n_bins: usize, seed: u64) -> Result<ExpressibilityReport> {
    if samples < MIN_EXPRESSIBILITY_SAMPLES {
        return Err(Error::InvalidConfig(format!("expressibility needs at least {MIN_EXPRESSIBILITY_SAMPLES} samples, got {samples}")));
    }
    let circuit = spec.build()?;
    let h = fidelity_histogram(&circuit, &StateVector::zero(spec.n_qubits), samples, n_bins, seed)?;
    Ok(ExpressibilityReport { ansatz: *spec, samples, seed, kl: h.kl_to_haar(), histogram: h })
}

/// KL divergence of the ansatz fidelity distribution from Haar; lower is
/// more expressive.
pub fn quantum_expressibility(spec: &AnsatzSpec, samples: usize, n_bins: usize, seed: u64) -> Result<f64> {
    quantum_expressibility_report(spec, samples, n_bins, seed).map(|r| r.kl)
}

/// Largest `n_c` for which the decoded-bitstring histogram is enumerated.
pub const CLASSICAL_EXPRESSIBILITY_CAP: usize = 20;

/// KL divergence of the decoded-bitstring distribution from uniform over
/// `2^{n_c}` bitstrings.
pub fn classical_expressibility(spec: &AnsatzSpec, n_c: usize, samples: usize, seed: u64) -> Result<f64> {
    if samples < MIN_EXPRESSIBILITY_SAMPLES {
        return Err(Error::InvalidConfig(format!("expressibility needs at least {MIN_EXPRESSIBILITY_SAMPLES} samples, got {samples}")));
    }
    if n_c > CLASSICAL_EXPRESSIBILITY_CAP {
        return Err(Error::SizeCapExceeded { n: n_c, cap: CLASSICAL_EXPRESSIBILITY_CAP });
    }
    let circuit = spec.build()?;
    let initial = StateVector::zero(spec.n_qubits);
    let decoded = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_from_seed(derive_seed(seed, s as u64));
            let theta = random_theta(circuit.n_params(), &mut rng);
            let dist = extract_exact(&circuit.run(&theta, &initial)?, n_c)?;
            Ok(decode(&dist).iter().enumerate().fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i)))
        })
        .collect::<Result<Vec<u64>>>()?;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for d in decoded {
        *counts.entry(d).or_default() += 1;
    }
    Ok(uniform_kl(&counts, samples as f64, 1u64 << n_c))
}

/// Smoothed `KL(counts ‖ uniform)` without materializing empty bins.
fn uniform_kl(counts: &HashMap<u64, u64>, total: f64, n_bins: u64) -> f64 {
    let b = n_bins as f64;
    let z = 1.0 + KL_SMOOTHING * b;
    let u = 1.0 / b;
    let term = |p: f64| {
        let p = (p + KL_SMOOTHING) / z;
        p * (p / u).ln()
    };
    let observed: f64 = counts.values().map(|&c| term(c as f64 / total)).sum();
    let empty = (n_bins - counts.len() as u64) as f64;
    (observed + empty * term(0.0)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::MaxCutGraph;
    use crate::sim::Gate;

    #[test]
    fn zero_qubo_prefers_all_zeros() {
        let (x, c) = brute_force_optimum(&QuboProblem::zeros(5)).unwrap();
        assert_eq!(x.as_slice(), &[0; 5]);
        assert_eq!(c, 0.0);
    }

    #[test]
    fn triangle_cut() {
        let g = MaxCutGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let (x, c) = brute_force_optimum(&g.to_qubo()).unwrap();
        assert_eq!(c, -2.0);
        assert_eq!(x.to_string(), "001");
    }

    #[test]
    fn star_tie_break() {
        let (x, c) = brute_force_optimum(&MaxCutGraph::star(8).unwrap().to_qubo()).unwrap();
        assert_eq!(c, -7.0);
        assert_eq!(x.to_string(), "01111111");
    }

    #[test]
    fn size_caps() {
        assert!(brute_force_optimum(&QuboProblem::zeros(25)).is_err());
        assert!(exact_optimum(&QuboProblem::zeros(35)).is_err());
    }

    #[test]
    fn exact_agrees_with_brute_force() {
        for seed in 0..3 {
            let q = crate::problem::random_complete_graph(18, (0.01, 1.0), seed).unwrap().to_qubo();
            assert!(is_complement_symmetric(&q));
            assert_eq!(exact_optimum(&q).unwrap(), brute_force_optimum(&q).unwrap());
        }
        let mut rng = rng_from_seed(4);
        let entries: Vec<(usize, usize, f64)> =
            (0..17).flat_map(|i| (i..17).map(move |j| (i, j))).map(|(i, j)| (i, j, rng.gen_range(-1.0..1.0))).collect();
        let q = QuboProblem::from_entries(17, entries).unwrap();
        assert!(!is_complement_symmetric(&q));
        assert_eq!(exact_optimum(&q).unwrap(), brute_force_optimum(&q).unwrap());
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn haar_bins_sum_to_one() {
        for n in [2, 4, 32, 512] {
            let s: f64 = haar_bins(75, n).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn su2_reference_circuit_is_haar_like() {
        let c = Circuit::new(1, vec![Gate::rz(0, 0), Gate::ry(0, 1), Gate::rz(0, 2)], 3).unwrap();
        let h = fidelity_histogram(&c, &StateVector::zero(1), 10_000, 75, 1).unwrap();
        assert!(h.kl_to_haar() < 0.05, "kl {}", h.kl_to_haar());
        assert_eq!(h.bins.iter().sum::<u64>(), 10_000);
    }

    #[test]
    fn fixed_state_is_least_expressive() {
        let fixed = fidelity_histogram(&Circuit::empty(1), &StateVector::zero(1), 1000, 75, 1).unwrap();
        assert_eq!(fixed.bins[74], 1000);
        let c = Circuit::new(1, vec![Gate::ry(0, 0)], 1).unwrap();
        let ry = fidelity_histogram(&c, &StateVector::zero(1), 1000, 75, 1).unwrap();
        assert!(fixed.kl_to_haar() > ry.kl_to_haar());
    }

    #[test]
    fn point_mass_reaches_log_dimension() {
        let mut counts = HashMap::new();
        counts.insert(3u64, 1000u64);
        let kl = uniform_kl(&counts, 1000.0, 16);
        assert!((kl - 16f64.ln()).abs() < 1e-6);
        let flat: HashMap<u64, u64> = (0..16).map(|b| (b, 100)).collect();
        assert!(uniform_kl(&flat, 1600.0, 16) < 1e-12);
    }

    #[test]
    fn expressibility_is_seed_reproducible() {
        let spec = AnsatzSpec::new(crate::ansatz::AnsatzFamily::Sequential2Qg, 3, 2).unwrap();
        let a = quantum_expressibility(&spec, 1000, 75, 9).unwrap();
        assert_eq!(a, quantum_expressibility(&spec, 1000, 75, 9).unwrap());
        assert!(quantum_expressibility(&spec, 10, 75, 9).is_err());
        assert!(classical_expressibility(&spec, 4, 1000, 9).unwrap() >= 0.0);
    }
}
