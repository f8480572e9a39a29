//! Parameter-shift derivatives and assembly of the QuEnc cost gradient.
//!
//! Every rotation `exp(-iθG/2)` with `G² = I` satisfies
//! `∂f/∂θ = ½[f(θ + π/2) − f(θ − π/2)]` exactly. The cost gradient chains the
//! shifted joint and register masses through the quotient rule
//! `∂(J/M) = ∂J/M − J·∂M/M²` and the cost field `∂𝒞/∂p`.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{cost_field, distribution_from_counts, distribution_from_masses, quenc_cost_unchecked, RegisterMasses, SolutionDistribution, MASS_EPS};
use crate::problem::{register_qubits, QuboProblem};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::{Circuit, Gate, StateVector};

/// How expectations are obtained: exactly from amplitudes, or from `k` shots
/// per circuit execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Shots(usize),
}

impl Mode {
    /// `0` means exact.
    pub fn from_shots(k: usize) -> Self {
        if k == 0 {
            Mode::Exact
        } else {
            Mode::Shots(k)
        }
    }

    pub fn shots(&self) -> usize {
        match self {
            Mode::Exact => 0,
            Mode::Shots(k) => *k,
        }
    }
}

/// Observable `|v⟩⟨v|_ancilla ⊗ |i⟩⟨i|_register` (qubit 0 is the ancilla).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectorQuery {
    pub ancilla_value: u8,
    pub register_index: usize,
}

/// `½[f(θ_slot + π/2) − f(θ_slot − π/2)]` for `f = ⟨ψ(θ)|P|ψ(θ)⟩`.
pub fn shift_derivative(circuit: &Circuit, theta: &[f64], initial: &StateVector, slot: usize, query: ProjectorQuery) -> Result<f64> {
    if slot >= circuit.n_params() || slot >= theta.len() {
        return Err(Error::MissingParameter { slot, len: theta.len() });
    }
    let mut shifted = theta.to_vec();
    let mut eval = |delta: f64| -> Result<f64> {
        shifted[slot] = theta[slot] + delta;
        circuit.run(&shifted, initial)?.projector_expectation(query.ancilla_value, query.register_index)
    };
    Ok(0.5 * (eval(FRAC_PI_2)? - eval(-FRAC_PI_2)?))
}

/// Cost, distribution and postselection mass at one parameter point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub dist: SolutionDistribution,
    pub cost: f64,
    /// Fraction of probability (or shots) surviving constraint postselection.
    pub kept: f64,
}

/// Binds a problem to a circuit and its input state.
///
/// The circuit acts on `1 + n_reg (+ constraint ancillas)` qubits; only
/// the first `n_c` register indices are read.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    qubo: &'a QuboProblem,
    circuit: &'a Circuit,
    initial: &'a StateVector,
    n_c: usize,
    n_reg: usize,
    mode: Mode,
    min_count: u64,
}

/// Above this state dimension the shifted circuits are evaluated on the rayon pool.
const PARALLEL_DIM: usize = 256;

impl<'a> Evaluator<'a> {
    pub fn new(qubo: &'a QuboProblem, circuit: &'a Circuit, initial: &'a StateVector) -> Result<Self> {
        let n_c = qubo.n();
        let n_reg = register_qubits(n_c);
        if circuit.n_qubits() < n_reg + 1 {
            return Err(Error::InvalidConfig(format!(
                "{n_c} variables need at least {} qubits, circuit has {}",
                n_reg + 1,
                circuit.n_qubits()
            )));
        }
        if initial.n_qubits() != circuit.n_qubits() {
            return Err(Error::LengthMismatch { expected: circuit.n_qubits(), got: initial.n_qubits() });
        }
        Ok(Evaluator { qubo, circuit, initial, n_c, n_reg, mode: Mode::Exact, min_count: 1 })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// Minimum kept shots per register index before it counts as supported.
    pub fn with_min_count(mut self, min_count: u64) -> Self {
        self.min_count = min_count.max(1);
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.circuit.n_params() {
            return Err(Error::LengthMismatch { expected: self.circuit.n_params(), got: theta.len() });
        }
        Ok(())
    }

    /// Runs the circuit; `seed` drives sampling in shot mode.
    pub fn evaluate(&self, theta: &[f64], seed: u64) -> Result<Evaluation> {
        self.check_theta(theta)?;
        let state = self.circuit.run(theta, self.initial)?;
        Ok(self.read(&state, derive_seed(seed, 0)).0)
    }

    /// Exact evaluation regardless of mode.
    pub fn evaluate_exact(&self, theta: &[f64]) -> Result<Evaluation> {
        self.check_theta(theta)?;
        let state = self.circuit.run(theta, self.initial)?;
        let masses = RegisterMasses::from_state(&state, self.n_c);
        Ok(self.finish(distribution_from_masses(&masses), masses.kept()))
    }

    pub fn final_state(&self, theta: &[f64]) -> Result<StateVector> {
        self.circuit.run(theta, self.initial)
    }

    fn finish(&self, dist: SolutionDistribution, kept: f64) -> Evaluation {
        let cost = quenc_cost_unchecked(self.qubo, &dist.p1);
        Evaluation { dist, cost, kept }
    }

    fn masses(&self, state: &StateVector, seed: u64) -> (RegisterMasses, Option<Vec<u64>>) {
        match self.mode {
            Mode::Exact => (RegisterMasses::from_state(state, self.n_c), None),
            Mode::Shots(k) => {
                let outcomes = state.sample_with(k, &mut rng_from_seed(seed));
                let (m, counts) = RegisterMasses::from_outcomes(&outcomes, self.n_c, self.n_reg);
                (m, Some(counts))
            }
        }
    }

    fn read(&self, state: &StateVector, seed: u64) -> (Evaluation, RegisterMasses) {
        let (masses, counts) = self.masses(state, seed);
        let dist = match counts {
            None => distribution_from_masses(&masses),
            Some(c) => distribution_from_counts(&masses, c, self.min_count),
        };
        let kept = masses.kept();
        (self.finish(dist, kept), masses)
    }

    /// Evaluation at `theta` together with `∇𝒞`.
    ///
    /// One forward pass stores the state in front of every rotation; each
    /// rotation is then re-run from its snapshot with the angle shifted by
    /// ±π/2. Contributions are summed per slot in gate order.
    pub fn evaluate_with_gradient(&self, theta: &[f64], seed: u64) -> Result<(Evaluation, Vec<f64>)> {
        self.check_theta(theta)?;
        let gates = self.circuit.gates();
        let mut state = self.initial.clone();
        let mut snapshots = Vec::with_capacity(self.circuit.n_params());
        for (idx, g) in gates.iter().enumerate() {
            if g.param_slot().is_some() {
                snapshots.push((idx, state.clone()));
            }
            state.apply_unchecked(g, theta);
        }
        let (eval, masses) = self.read(&state, derive_seed(seed, 0));

        let supported: Vec<bool> = eval.dist.flagged.iter().map(|f| !f).collect();
        let field = cost_field(self.qubo, &eval.dist.p1);
        // ∂𝒞/∂θ = Σ_i g_i (∂J_i/M_i − J_i ∂M_i/M_i²) over supported indices.
        let weights: Vec<(f64, f64)> = (0..self.n_c)
            .map(|i| {
                let m = masses.total[i];
                if !supported[i] || m < MASS_EPS {
                    (0.0, 0.0)
                } else {
                    (field[i] / m, -field[i] * masses.joint[i] / (m * m))
                }
            })
            .collect();

        let contribution = |(n, (idx, snap)): (usize, &(usize, StateVector))| -> (usize, f64) {
            let gate = &gates[*idx];
            let shifted = |delta: f64, stream: u64| {
                let mut s = snap.clone();
                apply_shifted(&mut s, gate, theta, delta);
                for g in &gates[idx + 1..] {
                    s.apply_unchecked(g, theta);
                }
                self.masses(&s, derive_seed(seed, stream)).0
            };
            let plus = shifted(FRAC_PI_2, 2 * n as u64 + 1);
            let minus = shifted(-FRAC_PI_2, 2 * n as u64 + 2);
            let mut acc = 0.0;
            for (i, &(wj, wm)) in weights.iter().enumerate() {
                if wj == 0.0 && wm == 0.0 {
                    continue;
                }
                let dj = 0.5 * (plus.joint[i] - minus.joint[i]);
                let dm = 0.5 * (plus.total[i] - minus.total[i]);
                acc += wj * dj + wm * dm;
            }
            (gate.param_slot().expect("snapshot gates are parameterized"), acc)
        };

        let parts: Vec<(usize, f64)> = if self.initial.dim() >= PARALLEL_DIM {
            snapshots.par_iter().enumerate().map(contribution).collect()
        } else {
            snapshots.iter().enumerate().map(contribution).collect()
        };
        let mut grad = vec![0.0; self.circuit.n_params()];
        for (slot, c) in parts {
            grad[slot] += c;
        }
        Ok((eval, grad))
    }
}

fn apply_shifted(state: &mut StateVector, gate: &Gate, theta: &[f64], delta: f64) {
    match *gate {
        Gate::Ry { target, slot } => state.apply_ry(target, theta[slot] + delta),
        Gate::Rz { target, slot } => state.apply_rz(target, theta[slot] + delta),
        _ => unreachable!("only rotations are shifted"),
    }
}

/// `∇𝒞(θ)` for a circuit started from |0…0⟩. `seed` only matters in shot mode.
pub fn cost_gradient(q: &QuboProblem, circuit: &Circuit, theta: &[f64], mode: Mode, seed: u64) -> Result<Vec<f64>> {
    let initial = StateVector::zero(circuit.n_qubits());
    Evaluator::new(q, circuit, &initial)?.with_mode(mode).evaluate_with_gradient(theta, seed).map(|(_, g)| g)
}
