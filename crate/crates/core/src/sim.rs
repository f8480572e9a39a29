//! Dense state-vector simulator.
//!
//! Qubit `q` is bit `q` of the basis index (little-endian): qubit 0 is the
//! least-significant bit. Gates act in place by iterating over index pairs
//! selected with bit masks; no gate unitary is ever materialized.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Gate set of the QuEnc circuits. Rotations read their angle from `theta[slot]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum Gate {
    /// `exp(-iθY/2)`.
    Ry { target: usize, slot: usize },
    /// `exp(-iθZ/2)`.
    Rz { target: usize, slot: usize },
    H { target: usize },
    X { target: usize },
    Swap { a: usize, b: usize },
    Cnot { control: usize, target: usize },
    /// X on `target` iff every control is |1⟩. No controls means plain X.
    Mcx { controls: Vec<usize>, target: usize },
}

impl Gate {
    pub fn ry(target: usize, slot: usize) -> Self {
        Gate::Ry { target, slot }
    }
    pub fn rz(target: usize, slot: usize) -> Self {
        Gate::Rz { target, slot }
    }
    pub fn h(target: usize) -> Self {
        Gate::H { target }
    }
    pub fn x(target: usize) -> Self {
        Gate::X { target }
    }
    pub fn swap(a: usize, b: usize) -> Self {
        Gate::Swap { a, b }
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }
    pub fn mcx(controls: Vec<usize>, target: usize) -> Self {
        Gate::Mcx { controls, target }
    }

    pub fn param_slot(&self) -> Option<usize> {
        match *self {
            Gate::Ry { slot, .. } | Gate::Rz { slot, .. } => Some(slot),
            _ => None,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Ry { target, .. } | Gate::Rz { target, .. } | Gate::H { target } | Gate::X { target } => vec![*target],
            Gate::Swap { a, b } => vec![*a, *b],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Mcx { controls, target } => controls.iter().copied().chain(std::iter::once(*target)).collect(),
        }
    }

    /// Checks qubit range and distinctness.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for (k, &q) in qs.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
            }
            if qs[..k].contains(&q) {
                return Err(Error::InvalidGate(format!("{self:?} uses qubit {q} twice")));
            }
        }
        Ok(())
    }
}

/// Reverses a sequence of self-inverse gates. Rotations are rejected because
/// their adjoint needs a negated angle, which a slot cannot express.
pub fn inverse_sequence(gates: &[Gate]) -> Result<Vec<Gate>> {
    if let Some(g) = gates.iter().find(|g| g.param_slot().is_some()) {
        return Err(Error::InvalidGate(format!("cannot invert parameterized gate {g:?}")));
    }
    Ok(gates.iter().rev().cloned().collect())
}

/// Ordered gate list over `n_qubits` with a parameter vector of size `n_params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>, n_params: usize) -> Result<Self> {
        for g in &gates {
            g.validate(n_qubits)?;
            if let Some(slot) = g.param_slot() {
                if slot >= n_params {
                    return Err(Error::MissingParameter { slot, len: n_params });
                }
            }
        }
        Ok(Circuit { n_qubits, gates, n_params })
    }

    pub fn empty(n_qubits: usize) -> Self {
        Circuit { n_qubits, gates: Vec::new(), n_params: 0 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn n_params(&self) -> usize {
        self.n_params
    }
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Appends fixed gates, widening the register if needed.
    pub fn extended(&self, n_qubits: usize, tail: &[Gate]) -> Result<Circuit> {
        let mut gates = self.gates.clone();
        gates.extend_from_slice(tail);
        Circuit::new(n_qubits.max(self.n_qubits), gates, self.n_params)
    }

    /// Applies all gates in order to `initial`.
    pub fn run(&self, theta: &[f64], initial: &StateVector) -> Result<StateVector> {
        let mut s = initial.clone();
        self.run_in_place(theta, &mut s)?;
        Ok(s)
    }

    pub fn run_in_place(&self, theta: &[f64], state: &mut StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::LengthMismatch { expected: self.n_qubits, got: state.n_qubits() });
        }
        if theta.len() < self.n_params {
            return Err(Error::MissingParameter { slot: theta.len(), len: theta.len() });
        }
        for g in &self.gates {
            state.apply_unchecked(g, theta);
        }
        Ok(())
    }
}

/// Complex amplitudes over `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// Hard cap: 2^26 amplitudes is 1 GiB.
pub const MAX_QUBITS: usize = 26;

impl StateVector {
    /// |0…0⟩.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "{n_qubits} qubits exceeds simulator cap");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    /// Normalizes `amps`; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidConfig(format!("amplitude count {len} is not a power of two")));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidConfig("state has zero or non-finite norm".into()));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(StateVector { n_qubits: len.trailing_zeros() as usize, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Tensor product with `self` on the low qubits: `|high⟩ ⊗ |self⟩`.
    pub fn tensor_high(&self, high: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * high.dim());
        for h in &high.amps {
            amps.extend(self.amps.iter().map(|l| h * l));
        }
        StateVector { n_qubits: self.n_qubits + high.n_qubits, amps }
    }

    /// Adds `extra` qubits in |0⟩ above the existing ones.
    pub fn widened(&self, extra: usize) -> StateVector {
        let mut amps = self.amps.clone();
        amps.resize(self.dim() << extra, Complex64::new(0.0, 0.0));
        StateVector { n_qubits: self.n_qubits + extra, amps }
    }

    pub fn apply(&mut self, gate: &Gate, theta: &[f64]) -> Result<()> {
        gate.validate(self.n_qubits)?;
        if let Some(slot) = gate.param_slot() {
            if slot >= theta.len() {
                return Err(Error::MissingParameter { slot, len: theta.len() });
            }
        }
        self.apply_unchecked(gate, theta);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate, theta: &[f64]) {
        match *gate {
            Gate::Ry { target, slot } => self.apply_ry(target, theta[slot]),
            Gate::Rz { target, slot } => self.apply_rz(target, theta[slot]),
            Gate::H { target } => self.apply_h(target),
            Gate::X { target } => self.apply_controlled_x(0, target),
            Gate::Cnot { control, target } => self.apply_controlled_x(1 << control, target),
            Gate::Mcx { ref controls, target } => {
                let mask = controls.iter().fold(0usize, |m, &c| m | (1 << c));
                self.apply_controlled_x(mask, target)
            }
            Gate::Swap { a, b } => self.apply_swap(a, b),
        }
    }

    pub fn apply_ry(&mut self, target: usize, angle: f64) {
        let (s, c) = (angle * 0.5).sin_cos();
        self.for_each_pair(target, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = x * c - y * s;
            *a1 = x * s + y * c;
        });
    }

    pub fn apply_rz(&mut self, target: usize, angle: f64) {
        let (s, c) = (angle * 0.5).sin_cos();
        let lo = Complex64::new(c, -s);
        let hi = Complex64::new(c, s);
        self.for_each_pair(target, |a0, a1| {
            *a0 *= lo;
            *a1 *= hi;
        });
    }

    pub fn apply_h(&mut self, target: usize) {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        self.for_each_pair(target, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = (x + y) * r;
            *a1 = (x - y) * r;
        });
    }

    fn apply_controlled_x(&mut self, control_mask: usize, target: usize) {
        let stride = 1usize << target;
        if control_mask == 0 {
            self.for_each_pair(target, std::mem::swap);
            return;
        }
        for i in 0..self.amps.len() {
            if i & stride == 0 && i & control_mask == control_mask {
                self.amps.swap(i, i | stride);
            }
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        let (ma, mb) = (1usize << a, 1usize << b);
        for i in 0..self.amps.len() {
            if i & ma != 0 && i & mb == 0 {
                self.amps.swap(i, i ^ ma ^ mb);
            }
        }
    }

    #[inline]
    fn for_each_pair(&mut self, target: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        let stride = 1usize << target;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                f(a0, a1);
            }
        }
    }

    /// Probability that `qubit` reads `value`.
    pub fn qubit_probability(&self, qubit: usize, value: u8) -> f64 {
        let mask = 1usize << qubit;
        let want = if value == 1 { mask } else { 0 };
        self.amps.iter().enumerate().filter(|(i, _)| i & mask == want).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Conditions on `qubit == value` and renormalizes. Returns the probability
    /// of that outcome before conditioning.
    pub fn postselect(&self, qubit: usize, value: u8) -> Result<(StateVector, f64)> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange { qubit, n_qubits: self.n_qubits });
        }
        let prob = self.qubit_probability(qubit, value);
        if prob <= POSTSELECT_EPS {
            return Err(Error::ZeroProbabilityBranch { qubit, value });
        }
        let mask = 1usize << qubit;
        let want = if value == 1 { mask } else { 0 };
        let scale = 1.0 / prob.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == want { a * scale } else { Complex64::new(0.0, 0.0) })
            .collect();
        Ok((StateVector { n_qubits: self.n_qubits, amps }, prob))
    }

    /// `⟨ψ| (|v⟩⟨v|_q0 ⊗ |i⟩⟨i|_rest) |ψ⟩`: probability that qubit 0 reads
    /// `ancilla_value` and the remaining qubits read `register_index`.
    pub fn projector_expectation(&self, ancilla_value: u8, register_index: usize) -> Result<f64> {
        let idx = (register_index << 1) | usize::from(ancilla_value & 1);
        if ancilla_value > 1 || idx >= self.dim() {
            return Err(Error::InvalidConfig(format!(
                "register index {register_index} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(self.amps[idx].norm_sqr())
    }

    /// `k` i.i.d. basis-index draws from the Born distribution.
    pub fn sample(&self, k: usize, seed: u64) -> Vec<usize> {
        let mut rng = rng_from_seed(seed);
        self.sample_with(k, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<usize> {
        let cdf = cumulative(self.amps.iter().map(|a| a.norm_sqr()));
        (0..k).map(|_| draw(&cdf, rng)).collect()
    }
}

/// Below this the branch is treated as impossible.
pub const POSTSELECT_EPS: f64 = 1e-14;

pub(crate) fn cumulative(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

pub(crate) fn draw<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("non-empty distribution");
    let u = rng.gen::<f64>() * total;
    let idx = cdf.partition_point(|&c| c <= u);
    // Guard against rounding at the top end landing on a zero-probability tail.
    let mut idx = idx.min(cdf.len() - 1);
    while idx > 0 && cdf[idx] == cdf[idx - 1] {
        idx -= 1;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> StateVector {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_amplitudes(vec![c(r), c(0.0), c(0.0), c(r)]).unwrap()
    }

    #[test]
    fn ry_pi_flips() {
        let mut s = StateVector::zero(1);
        s.apply(&Gate::ry(0, 0), &[PI]).unwrap();
        assert!((s.probabilities()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_flips_target_bit() {
        for b in 0..8 {
            let mut s = StateVector::basis(3, b);
            s.apply(&Gate::x(1), &[]).unwrap();
            assert_eq!(s.amplitudes()[b ^ 2], c(1.0));
        }
    }

    #[test]
    fn cnot_makes_bell_state() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // (|00⟩ + |10⟩)/√2 with qubit 1 in superposition: indices 0 and 2.
        let mut s = StateVector::from_amplitudes(vec![c(r), c(0.0), c(r), c(0.0)]).unwrap();
        s.apply(&Gate::cnot(1, 0), &[]).unwrap();
        assert!(s.distance(&bell()) < 1e-12);
    }

    #[test]
    fn mcx_degenerate_forms() {
        for b in 0..8 {
            let mut a = StateVector::basis(3, b);
            let mut x = a.clone();
            a.apply(&Gate::mcx(vec![], 2), &[]).unwrap();
            x.apply(&Gate::x(2), &[]).unwrap();
            assert_eq!(a, x);
            let mut m = StateVector::basis(3, b);
            let mut cn = m.clone();
            m.apply(&Gate::mcx(vec![0], 2), &[]).unwrap();
            cn.apply(&Gate::cnot(0, 2), &[]).unwrap();
            assert_eq!(m, cn);
        }
    }

    #[test]
    fn swap_exchanges_bits() {
        let mut s = StateVector::basis(3, 0b001);
        s.apply(&Gate::swap(0, 2), &[]).unwrap();
        assert_eq!(s.amplitudes()[0b100], c(1.0));
    }

    #[test]
    fn invalid_gates_rejected() {
        let mut s = StateVector::zero(2);
        assert!(matches!(s.apply(&Gate::x(2), &[]), Err(Error::QubitOutOfRange { .. })));
        assert!(matches!(s.apply(&Gate::cnot(1, 1), &[]), Err(Error::InvalidGate(_))));
        assert!(matches!(s.apply(&Gate::ry(0, 3), &[0.0]), Err(Error::MissingParameter { .. })));
        assert!(Circuit::new(2, vec![Gate::ry(0, 1)], 1).is_err());
    }

    #[test]
    fn empty_and_double_x_circuits() {
        let s = StateVector::basis(2, 3);
        assert_eq!(Circuit::empty(2).run(&[], &s).unwrap(), s);
        let xx = Circuit::new(2, vec![Gate::x(1), Gate::x(1)], 0).unwrap();
        assert_eq!(xx.run(&[], &s).unwrap(), s);
    }

    #[test]
    fn postselect_cases() {
        let (s, p) = bell().postselect(0, 0).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!(s.distance(&StateVector::zero(2)) < 1e-12);

        let b = StateVector::basis(2, 0b10);
        let (s, p) = b.postselect(1, 1).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(s, b);

        assert!(matches!(b.postselect(0, 1), Err(Error::ZeroProbabilityBranch { qubit: 0, value: 1 })));
    }

    #[test]
    fn postselect_product_state() {
        // (0.6|0⟩ + 0.8|1⟩) on qubit 2, |φ⟩ on qubits 0..2.
        let phi = StateVector::from_amplitudes(vec![c(0.1), Complex64::new(0.2, 0.3), c(-0.4), c(0.5)]).unwrap();
        let top = StateVector::from_amplitudes(vec![c(0.6), c(0.8)]).unwrap();
        let s = phi.tensor_high(&top);
        let (post, p) = s.postselect(2, 1).unwrap();
        assert!((p - 0.64).abs() < 1e-12);
        let expected = phi.tensor_high(&StateVector::basis(1, 1));
        assert!(post.distance(&expected) < 1e-12);
    }

    #[test]
    fn projector_expectation_cases() {
        let amps = vec![c(0.5); 4];
        let u = StateVector::from_amplitudes(amps).unwrap();
        for v in 0..2 {
            for i in 0..2 {
                assert!((u.projector_expectation(v, i).unwrap() - 0.25).abs() < 1e-12);
            }
        }
        let d = StateVector::basis(3, (2 << 1) | 1);
        assert_eq!(d.projector_expectation(1, 2).unwrap(), 1.0);
        assert_eq!(d.projector_expectation(0, 2).unwrap(), 0.0);
        assert_eq!(d.projector_expectation(1, 1).unwrap(), 0.0);
        assert!(d.projector_expectation(1, 4).is_err());
    }

    #[test]
    fn sampling_deterministic_and_degenerate() {
        let s = StateVector::basis(3, 5);
        assert!(s.sample(100, 1).iter().all(|&o| o == 5));
        let u = StateVector::from_amplitudes(vec![c(0.5); 4]).unwrap();
        assert_eq!(u.sample(1000, 9), u.sample(1000, 9));
        assert_ne!(u.sample(1000, 9), u.sample(1000, 10));
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let u = StateVector::from_amplitudes(vec![c(0.5); 4]).unwrap();
        let k = 100_000;
        let mut counts = [0usize; 4];
        for o in u.sample(k, 2024) {
            counts[o] += 1;
        }
        let sigma = (0.25f64 * 0.75 / k as f64).sqrt();
        for n in counts {
            assert!((n as f64 / k as f64 - 0.25).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn draw_never_selects_zero_probability_tail() {
        let cdf = cumulative([0.5, 0.5, 0.0, 0.0].into_iter());
        let mut rng = rng_from_seed(0);
        for _ in 0..1000 {
            assert!(draw(&cdf, &mut rng) < 2);
        }
    }
}
