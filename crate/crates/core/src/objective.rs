//! Reading encoded solutions out of a state and scoring them.
//!
//! For register index `i` the joint mass `J_i = Pr(a = 1, r = i)` and the
//! register mass `M_i = Pr(r = i)` give the encoded bit probability
//! `|b_i|² = J_i / M_i`. Qubits above the register (constraint ancillas) are
//! postselected on |0⟩: only basis states with those bits clear contribute.
//! The ratio is unchanged by renormalization, so the unnormalized masses of
//! the pre-selection state give the post-selection probabilities directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{register_qubits, Bitstring, QuboProblem};
use crate::sim::StateVector;

/// Register masses below this are treated as unsupported.
pub const MASS_EPS: f64 = 1e-12;

/// Value assigned to unsupported indices.
pub const UNSUPPORTED_P1: f64 = 0.5;

/// `Pr(x_i = 1)` per variable with unsupported-index flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDistribution {
    pub p1: Vec<f64>,
    /// `true` where the register index carried no (or too little) mass.
    pub flagged: Vec<bool>,
    /// Kept shots per register index, shot mode only.
    pub support: Option<Vec<u64>>,
}

impl SolutionDistribution {
    pub fn len(&self) -> usize {
        self.p1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p1.is_empty()
    }

    /// Point mass on `x`.
    pub fn vertex(x: &[u8]) -> Self {
        SolutionDistribution { p1: x.iter().map(|&b| b as f64).collect(), flagged: vec![false; x.len()], support: None }
    }

    pub fn n_flagged(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

/// Joint and register masses for the first `n_c` register indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterMasses {
    pub joint: Vec<f64>,
    pub total: Vec<f64>,
    /// Mass with every bit above the register clear, padding indices included.
    pub kept: f64,
}

impl RegisterMasses {
    /// Exact masses from amplitudes; every qubit above the register must read 0.
    pub fn from_state(state: &StateVector, n_c: usize) -> Self {
        let amps = state.amplitudes();
        let limit = (1usize << (register_qubits(n_c) + 1)).min(amps.len());
        let kept = amps[..limit].iter().map(|a| a.norm_sqr()).sum();
        let mut joint = vec![0.0; n_c];
        let mut total = vec![0.0; n_c];
        // Indices with all upper bits clear are exactly the first 2^(n_reg+1).
        for i in 0..n_c {
            let p0 = amps[i << 1].norm_sqr();
            let p1 = amps[(i << 1) | 1].norm_sqr();
            joint[i] = p1;
            total[i] = p0 + p1;
        }
        RegisterMasses { joint, total, kept }
    }

    /// Empirical masses (fractions of `outcomes.len()`); also returns kept counts.
    pub fn from_outcomes(outcomes: &[usize], n_c: usize, n_reg: usize) -> (Self, Vec<u64>) {
        let mut ones = vec![0u64; n_c];
        let mut counts = vec![0u64; n_c];
        let limit = 1usize << (n_reg + 1);
        let mut kept = 0u64;
        for &o in outcomes {
            if o >= limit {
                continue;
            }
            kept += 1;
            let r = o >> 1;
            if r < n_c {
                counts[r] += 1;
                ones[r] += (o & 1) as u64;
            }
        }
        let k = outcomes.len().max(1) as f64;
        let masses = RegisterMasses {
            joint: ones.iter().map(|&c| c as f64 / k).collect(),
            total: counts.iter().map(|&c| c as f64 / k).collect(),
            kept: kept as f64 / k,
        };
        (masses, counts)
    }

    /// Postselection success probability.
    pub fn kept(&self) -> f64 {
        self.kept
    }
}

fn ratio_distribution(masses: &RegisterMasses, supported: impl Fn(usize) -> bool) -> SolutionDistribution {
    let n = masses.joint.len();
    let mut p1 = Vec::with_capacity(n);
    let mut flagged = Vec::with_capacity(n);
    for i in 0..n {
        if supported(i) {
            p1.push((masses.joint[i] / masses.total[i]).clamp(0.0, 1.0));
            flagged.push(false);
        } else {
            p1.push(UNSUPPORTED_P1);
            flagged.push(true);
        }
    }
    SolutionDistribution { p1, flagged, support: None }
}

pub(crate) fn distribution_from_masses(masses: &RegisterMasses) -> SolutionDistribution {
    ratio_distribution(masses, |i| masses.total[i] >= MASS_EPS)
}

pub(crate) fn distribution_from_counts(masses: &RegisterMasses, counts: Vec<u64>, min_count: u64) -> SolutionDistribution {
    let mut d = ratio_distribution(masses, |i| counts[i] >= min_count.max(1));
    d.support = Some(counts);
    d
}

/// Exact conditional probabilities `|b_i|²` for the first `n_c` variables.
pub fn extract_exact(state: &StateVector, n_c: usize) -> Result<SolutionDistribution> {
    let n_reg = register_qubits(n_c);
    if state.n_qubits() < n_reg + 1 {
        return Err(Error::InvalidConfig(format!(
            "{n_c} variables need {} qubits, state has {}",
            n_reg + 1,
            state.n_qubits()
        )));
    }
    Ok(distribution_from_masses(&RegisterMasses::from_state(state, n_c)))
}

/// Shot estimate of `|b_i|²`. Outcomes with any bit above the register set
/// are discarded; unobserved indices are flagged.
pub fn extract_shots(outcomes: &[usize], n_c: usize) -> Result<SolutionDistribution> {
    extract_shots_with_floor(outcomes, n_c, 1)
}

/// As [`extract_shots`], flagging indices with fewer than `min_count` kept shots.
pub fn extract_shots_with_floor(outcomes: &[usize], n_c: usize, min_count: u64) -> Result<SolutionDistribution> {
    if outcomes.is_empty() {
        return Err(Error::InvalidConfig("no measurement outcomes".into()));
    }
    let (masses, counts) = RegisterMasses::from_outcomes(outcomes, n_c, register_qubits(n_c));
    Ok(distribution_from_counts(&masses, counts, min_count))
}

/// `Σ_{i<j} Q_ij p_i p_j + Σ_i Q_ii p_i` over the stored upper triangle.
pub fn quenc_cost(q: &QuboProblem, dist: &SolutionDistribution) -> Result<f64> {
    if q.n() != dist.len() {
        return Err(Error::LengthMismatch { expected: q.n(), got: dist.len() });
    }
    Ok(quenc_cost_unchecked(q, &dist.p1))
}

pub(crate) fn quenc_cost_unchecked(q: &QuboProblem, p: &[f64]) -> f64 {
    let n = q.n();
    let mut total = 0.0;
    for i in 0..n {
        let row = q.row(i);
        let mut acc = row[i];
        for j in (i + 1)..n {
            acc += row[j] * p[j];
        }
        total += acc * p[i];
    }
    total
}

/// `∂𝒞/∂p_i = Q_ii + Σ_{k≠i} (Q_ik + Q_ki) p_k`.
pub(crate) fn cost_field(q: &QuboProblem, p: &[f64]) -> Vec<f64> {
    let n = q.n();
    let mut g: Vec<f64> = (0..n).map(|i| q.diag(i)).collect();
    for i in 0..n {
        let row = q.row(i);
        let mut gi = 0.0;
        for j in (i + 1)..n {
            let v = row[j];
            gi += v * p[j];
            g[j] += v * p[i];
        }
        g[i] += gi;
    }
    g
}

/// `x_i = 1` iff `p1[i] > 0.5`; ties go to 0.
pub fn decode(dist: &SolutionDistribution) -> Bitstring {
    Bitstring::from_bits(dist.p1.iter().map(|&p| u8::from(p > 0.5)).collect())
}
