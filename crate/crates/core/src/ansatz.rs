//! Parameterized circuit templates.
//!
//! Register layout shared by every QuEnc circuit: qubit 0 is the algorithm
//! ancilla, qubits `1..=n_reg` hold the register index (qubit 1 is its least
//! significant bit), and constraint ancillas, when present, sit above.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::padded_size;
use crate::sim::{Circuit, Gate, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzFamily {
    /// Hadamard layer, then per layer one RY per qubit and a CNOT ladder.
    Sequential2Qg,
    /// Hadamard layer, then per layer alternating RY/RZ and a CNOT brick wall.
    Simultaneous2Qg,
    /// No Hadamards; CNOT ladders reversed on every second layer (identity at θ = 0).
    WarmStart,
}

impl fmt::Display for AnsatzFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnsatzFamily::Sequential2Qg => "seq",
            AnsatzFamily::Simultaneous2Qg => "sim",
            AnsatzFamily::WarmStart => "warm",
        })
    }
}

impl FromStr for AnsatzFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seq" | "sequential" | "sequential_2qg" => Ok(AnsatzFamily::Sequential2Qg),
            "sim" | "simultaneous" | "simultaneous_2qg" => Ok(AnsatzFamily::Simultaneous2Qg),
            "warm" | "warmstart" | "warm_start" => Ok(AnsatzFamily::WarmStart),
            other => Err(Error::InvalidConfig(format!("unknown ansatz {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub family: AnsatzFamily,
    pub n_qubits: usize,
    pub layers: usize,
}

impl AnsatzSpec {
    pub fn new(family: AnsatzFamily, n_qubits: usize, layers: usize) -> Result<Self> {
        let spec = AnsatzSpec { family, n_qubits, layers };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::InvalidConfig("ansatz needs at least one layer".into()));
        }
        if self.n_qubits < 2 {
            return Err(Error::InvalidConfig("ansatz needs at least two qubits".into()));
        }
        if self.family == AnsatzFamily::WarmStart && self.layers % 2 != 0 {
            return Err(Error::InvalidConfig(format!("warm-start ansatz needs an even layer count, got {}", self.layers)));
        }
        Ok(())
    }

    /// One rotation per qubit per layer.
    pub fn n_params(&self) -> usize {
        self.layers * self.n_qubits
    }

    pub fn build(&self) -> Result<Circuit> {
        match self.family {
            AnsatzFamily::Sequential2Qg => build_sequential(self.n_qubits, self.layers),
            AnsatzFamily::Simultaneous2Qg => build_simultaneous(self.n_qubits, self.layers),
            AnsatzFamily::WarmStart => build_warmstart(self.n_qubits, self.layers),
        }
    }
}

/// Qubits for `n_c` variables under minimal encoding: register plus one ancilla.
pub fn quenc_qubits(n_c: usize) -> usize {
    crate::problem::register_qubits(n_c) + 1
}

fn check_width(n_qubits: usize) -> Result<()> {
    if n_qubits < 2 {
        return Err(Error::InvalidConfig("ansatz needs at least two qubits".into()));
    }
    Ok(())
}

fn ladder(n_qubits: usize) -> impl DoubleEndedIterator<Item = Gate> {
    (0..n_qubits - 1).map(|q| Gate::cnot(q, q + 1))
}

pub fn build_sequential(n_qubits: usize, layers: usize) -> Result<Circuit> {
    check_width(n_qubits)?;
    let mut gates: Vec<Gate> = (0..n_qubits).map(Gate::h).collect();
    for layer in 0..layers {
        gates.extend((0..n_qubits).map(|q| Gate::ry(q, layer * n_qubits + q)));
        gates.extend(ladder(n_qubits));
    }
    Circuit::new(n_qubits, gates, layers * n_qubits)
}

/// Two-qubit pairs of one brick-wall layer: even pairs, then odd pairs.
pub fn brick_pairs(n_qubits: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let even = (0..n_qubits.saturating_sub(1)).step_by(2).map(|q| (q, q + 1)).collect();
    let odd = (1..n_qubits.saturating_sub(1)).step_by(2).map(|q| (q, q + 1)).collect();
    (even, odd)
}

pub fn build_simultaneous(n_qubits: usize, layers: usize) -> Result<Circuit> {
    check_width(n_qubits)?;
    let (even, odd) = brick_pairs(n_qubits);
    let mut gates: Vec<Gate> = (0..n_qubits).map(Gate::h).collect();
    for layer in 0..layers {
        // Layers are counted from 1: odd layers rotate about Y, even about Z.
        let about_y = layer % 2 == 0;
        gates.extend((0..n_qubits).map(|q| {
            let slot = layer * n_qubits + q;
            if about_y {
                Gate::ry(q, slot)
            } else {
                Gate::rz(q, slot)
            }
        }));
        gates.extend(even.iter().chain(&odd).map(|&(a, b)| Gate::cnot(a, b)));
    }
    Circuit::new(n_qubits, gates, layers * n_qubits)
}

pub fn build_warmstart(n_qubits: usize, layers: usize) -> Result<Circuit> {
    check_width(n_qubits)?;
    if layers == 0 || layers % 2 != 0 {
        return Err(Error::InvalidConfig(format!("warm-start ansatz needs an even, positive layer count, got {layers}")));
    }
    let mut gates = Vec::new();
    for layer in 0..layers {
        gates.extend((0..n_qubits).map(|q| Gate::ry(q, layer * n_qubits + q)));
        if layer % 2 == 0 {
            gates.extend(ladder(n_qubits));
        } else {
            gates.extend(ladder(n_qubits).rev());
        }
    }
    Circuit::new(n_qubits, gates, layers * n_qubits)
}

/// `Σ_i 1/√N |x_i⟩_a |i⟩_r` over the padded register, phantom bits set to 0.
pub fn prepare_warmstart_state(x: &[u8]) -> StateVector {
    let n = padded_size(x.len());
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 2 * n];
    for i in 0..n {
        let bit = x.get(i).copied().unwrap_or(0) as usize;
        amps[(i << 1) | bit] = amp;
    }
    StateVector::from_amplitudes(amps).expect("power-of-two length")
}

/// |0…0⟩ for the circuits that begin with a Hadamard layer.
pub fn zero_state(n_qubits: usize) -> StateVector {
    StateVector::zero(n_qubits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_two_qubit_gate_list() {
        let c = build_sequential(2, 1).unwrap();
        assert_eq!(c.gates(), &[Gate::h(0), Gate::h(1), Gate::ry(0, 0), Gate::ry(1, 1), Gate::cnot(0, 1)]);
        assert_eq!(c.n_params(), 2);
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(build_sequential(4, 4).unwrap().n_params(), 16);
        assert_eq!(build_sequential(14, 4).unwrap().n_params(), 56);
        // 8192 variables: 13 register qubits + 1 ancilla.
        assert_eq!(quenc_qubits(8192), 14);
        assert_eq!(AnsatzSpec::new(AnsatzFamily::Sequential2Qg, quenc_qubits(16), 3).unwrap().n_params(), 15);
    }

    #[test]
    fn brick_pattern() {
        assert_eq!(brick_pairs(2), (vec![(0, 1)], vec![]));
        assert_eq!(brick_pairs(5), (vec![(0, 1), (2, 3)], vec![(1, 2), (3, 4)]));
        let c = build_simultaneous(5, 2).unwrap();
        let rz = c.gates().iter().filter(|g| matches!(g, Gate::Rz { .. })).count();
        let ry = c.gates().iter().filter(|g| matches!(g, Gate::Ry { .. })).count();
        assert_eq!((ry, rz), (5, 5));
    }

    #[test]
    fn warmstart_requires_even_layers() {
        assert!(build_warmstart(3, 3).is_err());
        assert!(AnsatzSpec::new(AnsatzFamily::WarmStart, 3, 1).is_err());
        assert!(build_warmstart(3, 2).unwrap().gates().iter().all(|g| !matches!(g, Gate::H { .. })));
    }

    #[test]
    fn warmstart_state_example() {
        let s = prepare_warmstart_state(&[0, 1, 1, 0]);
        let nonzero: Vec<usize> = s.probabilities().iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, _)| i).collect();
        // |a⟩|r⟩ → index (r << 1) | a
        assert_eq!(nonzero, vec![0, 3, 5, 6]);
        for i in nonzero {
            assert!((s.amplitudes()[i].re - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn warmstart_zero_bits_keep_ancilla_low() {
        let s = prepare_warmstart_state(&[0; 8]);
        assert!((s.qubit_probability(0, 0) - 1.0).abs() < 1e-12);
        assert_eq!(s.n_qubits(), 4);
    }

    #[test]
    fn family_parse() {
        assert_eq!("seq".parse::<AnsatzFamily>().unwrap(), AnsatzFamily::Sequential2Qg);
        assert_eq!("sim".parse::<AnsatzFamily>().unwrap(), AnsatzFamily::Simultaneous2Qg);
        assert!("qaoa".parse::<AnsatzFamily>().is_err());
    }
}
