//! Pairwise `x_i + x_j = 1` constraints compiled into circuit blocks.
//!
//! Each constraint gets its own ancilla above the register. The block moves
//! the pair onto register indices 0 and 1, rotates the Bell basis of
//! (register bit 0, algorithm ancilla) onto the computational basis with `A`,
//! flips the constraint ancilla on the unfeasible half, and undoes both
//! steps. Postselecting every constraint ancilla on |0⟩ projects onto the
//! feasible subspace, where `p_i + p_j = 1` holds exactly.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::error::{Error, Result};
use crate::gradient::Evaluator;
use crate::objective::{decode, SolutionDistribution};
use crate::problem::{register_qubits, Bitstring, QuboProblem};
use crate::record::RunRecord;
use crate::sim::{inverse_sequence, Circuit, Gate, StateVector, MAX_QUBITS};
use crate::train::{check_ansatz, optimize, prepare_init, Init, TrainConfig};

/// Kept shots a register index needs in constrained shot mode before its
/// estimate is trusted.
pub const CONSTRAINED_MIN_COUNT: u64 = 10;

/// `x_i + x_j = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint {
    pub i: usize,
    pub j: usize,
}

impl Constraint {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidConstraint(format!("constraint needs two distinct variables, got {i} twice")));
        }
        Ok(Constraint { i, j })
    }

    pub fn is_satisfied(&self, x: &[u8]) -> bool {
        x[self.i] + x[self.j] == 1
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{} + x{} = 1", self.i, self.j)
    }
}

/// Checks ranges, distinctness, and that no variable appears twice.
pub fn validate_constraints(n_c: usize, constraints: &[Constraint]) -> Result<()> {
    let mut seen = vec![false; n_c];
    for c in constraints {
        if c.i == c.j {
            return Err(Error::InvalidConstraint(format!("{c}: indices must differ")));
        }
        for v in [c.i, c.j] {
            if v >= n_c {
                return Err(Error::InvalidConstraint(format!("{c}: variable {v} out of range for {n_c} variables")));
            }
            if seen[v] {
                return Err(Error::InvalidConstraint(format!("{c}: variable {v} already used by another constraint")));
            }
            seen[v] = true;
        }
    }
    Ok(())
}

/// Qubit carrying register bit `b`.
fn reg(b: usize) -> usize {
    1 + b
}

/// Gates for `A` on (register qubit, algorithm ancilla):
/// CNOT(r→a), H on r, then CZ written as H·CNOT·H on the ancilla.
pub fn build_a_block(register_qubit: usize, ancilla: usize) -> Result<Vec<Gate>> {
    if register_qubit == ancilla {
        return Err(Error::InvalidGate(format!("A block needs two distinct qubits, got {ancilla} twice")));
    }
    Ok(vec![
        Gate::cnot(register_qubit, ancilla),
        Gate::h(register_qubit),
        Gate::h(ancilla),
        Gate::cnot(register_qubit, ancilla),
        Gate::h(ancilla),
    ])
}

/// `A⁻¹` as the reversed sequence (every gate in `A` is self-inverse).
pub fn build_a_inverse(register_qubit: usize, ancilla: usize) -> Result<Vec<Gate>> {
    inverse_sequence(&build_a_block(register_qubit, ancilla)?)
}

/// Register permutation sending index `i` to 0 and `j` to 1.
///
/// Gates act on register qubits `1..=n_reg`; bit `b` of an index lives on
/// qubit `1 + b`.
pub fn remap_indices(i: usize, j: usize, n_reg: usize) -> Result<Vec<Gate>> {
    if i == j {
        return Err(Error::InvalidConstraint(format!("cannot remap identical indices {i}")));
    }
    let cap = 1usize << n_reg;
    if i >= cap || j >= cap {
        return Err(Error::InvalidConstraint(format!("indices {i}, {j} do not fit in {n_reg} register qubits")));
    }
    let mut gates = Vec::new();
    let d = (i ^ j).trailing_zeros() as usize;
    let swap_bits = |v: usize| {
        let (a, b) = ((v >> d) & 1, v & 1);
        (v & !(1 | (1 << d))) | (a) | (b << d)
    };
    let (mut i, mut j) = (i, j);
    if d != 0 {
        gates.push(Gate::swap(reg(0), reg(d)));
        i = swap_bits(i);
        j = swap_bits(j);
    }
    for b in 0..n_reg {
        if (i >> b) & 1 == 1 {
            gates.push(Gate::x(reg(b)));
        }
    }
    j ^= i;
    for b in 1..n_reg {
        if (j >> b) & 1 == 1 {
            gates.push(Gate::cnot(reg(0), reg(b)));
        }
    }
    Ok(gates)
}

pub fn remap_inverse(i: usize, j: usize, n_reg: usize) -> Result<Vec<Gate>> {
    inverse_sequence(&remap_indices(i, j, n_reg)?)
}

/// Where a constraint block sits: register width and its ancilla qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub n_reg: usize,
    pub constraint_ancilla: usize,
}

/// remap → A → X-framed MCX onto the constraint ancilla → A⁻¹ → remap⁻¹.
///
/// The MCX fires iff register bit 0 is 1 and every other register bit is 0,
/// which after `A` marks exactly the unfeasible component of the pair.
pub fn build_constraint_block(c: Constraint, layout: BlockLayout) -> Result<Vec<Gate>> {
    let BlockLayout { n_reg, constraint_ancilla } = layout;
    if n_reg == 0 {
        return Err(Error::InvalidConstraint("constraints need at least one register qubit".into()));
    }
    if constraint_ancilla <= n_reg {
        return Err(Error::InvalidConstraint(format!(
            "constraint ancilla {constraint_ancilla} overlaps the register (qubits 0..={n_reg})"
        )));
    }
    let remap = remap_indices(c.i, c.j, n_reg)?;
    let frame: Vec<Gate> = (1..n_reg).map(|b| Gate::x(reg(b))).collect();
    let mut gates = remap.clone();
    gates.extend(build_a_block(reg(0), 0)?);
    gates.extend(frame.iter().cloned());
    gates.push(Gate::mcx((0..n_reg).map(reg).collect(), constraint_ancilla));
    gates.extend(frame);
    gates.extend(build_a_inverse(reg(0), 0)?);
    gates.extend(inverse_sequence(&remap)?);
    Ok(gates)
}

/// An ansatz followed by one block per constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedCircuit {
    base: Circuit,
    constraints: Vec<Constraint>,
    blocks: Vec<Vec<Gate>>,
    constraint_ancillas: Vec<usize>,
    n_c: usize,
}

impl ConstrainedCircuit {
    pub fn new(base: Circuit, n_c: usize, constraints: &[Constraint]) -> Result<Self> {
        validate_constraints(n_c, constraints)?;
        let n_reg = register_qubits(n_c);
        if base.n_qubits() != n_reg + 1 {
            return Err(Error::InvalidConfig(format!(
                "base circuit has {} qubits, {n_c} variables need {}",
                base.n_qubits(),
                n_reg + 1
            )));
        }
        let total = n_reg + 1 + constraints.len();
        if total > MAX_QUBITS {
            return Err(Error::SizeCapExceeded { n: total, cap: MAX_QUBITS });
        }
        let constraint_ancillas: Vec<usize> = (0..constraints.len()).map(|k| n_reg + 1 + k).collect();
        let blocks = constraints
            .iter()
            .zip(&constraint_ancillas)
            .map(|(&c, &a)| build_constraint_block(c, BlockLayout { n_reg, constraint_ancilla: a }))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConstrainedCircuit { base, constraints: constraints.to_vec(), blocks, constraint_ancillas, n_c })
    }

    pub fn base(&self) -> &Circuit {
        &self.base
    }
    pub fn blocks(&self) -> &[Vec<Gate>] {
        &self.blocks
    }
    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }
    pub fn constraint_ancillas(&self) -> &[usize] {
        &self.constraint_ancillas
    }

    /// `⌈log₂ n_c⌉ + 1 + m`.
    pub fn n_qubits(&self) -> usize {
        register_qubits(self.n_c) + 1 + self.constraints.len()
    }

    /// Base gates followed by the blocks in constraint order.
    pub fn circuit(&self) -> Result<Circuit> {
        let tail: Vec<Gate> = self.blocks.iter().flatten().cloned().collect();
        self.base.extended(self.n_qubits(), &tail)
    }

    /// Same as [`circuit`](Self::circuit) with the blocks in the given order.
    pub fn circuit_with_order(&self, order: &[usize]) -> Result<Circuit> {
        let mut tail = Vec::new();
        for &k in order {
            let block = self.blocks.get(k).ok_or_else(|| Error::InvalidConfig(format!("no constraint block {k}")))?;
            tail.extend(block.iter().cloned());
        }
        self.base.extended(self.n_qubits(), &tail)
    }

    /// Widens a base-width input state by the constraint ancillas.
    pub fn widen(&self, state: &StateVector) -> StateVector {
        state.widened(self.constraints.len())
    }
}

/// Projects every qubit from `first` upward onto |0⟩ and renormalizes.
/// Returns the projected state and the success probability.
pub fn postselect_ancillas(state: &StateVector, first: usize) -> Result<(StateVector, f64)> {
    let mut s = state.clone();
    let mut prob = 1.0;
    for q in first..state.n_qubits() {
        let (next, p) = s.postselect(q, 0)?;
        prob *= p;
        s = next;
    }
    Ok((s, prob))
}

/// Threshold decode, then settle each pair by comparing `p_i` with `p_j`.
///
/// On the exact feasible subspace `p_i + p_j = 1`, so the comparison agrees
/// with thresholding except at an exact tie, which resolves to `x_i = 0`.
pub fn decode_constrained(dist: &SolutionDistribution, constraints: &[Constraint]) -> Bitstring {
    let mut x = decode(dist).into_inner();
    for c in constraints {
        let one = dist.p1[c.i] > dist.p1[c.j];
        x[c.i] = one as u8;
        x[c.j] = (!one) as u8;
    }
    Bitstring::from_bits(x)
}

/// Training with every evaluation postselected on the constraint ancillas.
pub fn constrained_train(q: &QuboProblem, constraints: &[Constraint], spec: &AnsatzSpec, cfg: &TrainConfig, init: &Init) -> Result<RunRecord> {
    let started = Instant::now();
    cfg.validate()?;
    check_ansatz(q, spec)?;
    let cc = ConstrainedCircuit::new(spec.build()?, q.n(), constraints)?;
    let circuit = cc.circuit()?;
    let (base_state, theta0, warm) = prepare_init(q, spec, cfg, init)?;
    if let Some(x) = &warm {
        if let Some(c) = constraints.iter().find(|c| !c.is_satisfied(x)) {
            return Err(Error::InvalidConstraint(format!("warm start violates {c}")));
        }
    }
    let initial = cc.widen(&base_state);
    let evaluator = Evaluator::new(q, &circuit, &initial)?.with_mode(cfg.mode()).with_min_count(CONSTRAINED_MIN_COUNT);
    let decoder = |d: &SolutionDistribution| decode_constrained(d, constraints);
    let outcome = optimize(q, &evaluator, theta0, cfg, &decoder, warm, true)?;
    Ok(RunRecord::from_outcome(q, spec, cfg, outcome, constraints.len(), started))
}
