//! MaxCut graphs, QUBO matrices and Ising models.
//!
//! A QUBO is stored as a dense upper-triangular matrix: `Q[i][j]` for `i < j`
//! holds the full pair coefficient and the lower triangle is always zero, so
//! `C(x) = xᵀQx = Σ_i Q_ii x_i + Σ_{i<j} Q_ij x_i x_j`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Binary assignment, one `0`/`1` byte per variable. Displays as `"0110"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Bitstring(Vec<u8>);

impl Bitstring {
    pub fn zeros(n: usize) -> Self {
        Bitstring(vec![0; n])
    }

    pub fn from_bits(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Bitstring(bits)
    }

    /// Bits of `value`, variable `i` taken from bit `i` (LSB first).
    pub fn from_index(value: u64, n: usize) -> Self {
        Bitstring((0..n).map(|i| ((value >> i) & 1) as u8).collect())
    }

    pub fn complement(&self) -> Self {
        Bitstring(self.0.iter().map(|b| 1 - b).collect())
    }

    pub fn truncated(&self, n: usize) -> Self {
        Bitstring(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn padded(&self, n: usize) -> Self {
        let mut bits = self.0.clone();
        bits.resize(n.max(bits.len()), 0);
        Bitstring(bits)
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl std::ops::Deref for Bitstring {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse { line: 1, msg: format!("invalid bit character {other:?}") }),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Bitstring)
    }
}

impl From<Bitstring> for String {
    fn from(b: Bitstring) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for Bitstring {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Weighted undirected graph for MaxCut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCutGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl MaxCutGraph {
    /// Validates node range, self-loops, duplicate unordered pairs and weight sign.
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &(i, j, w) in &edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) outside 0..{n_nodes}")));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop on node {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) has weight {w}; weights must be finite and non-negative")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(MaxCutGraph { n_nodes, edges })
    }

    /// Star: node 0 joined to every other node with unit weight.
    pub fn star(n_nodes: usize) -> Result<Self> {
        Self::new(n_nodes, (1..n_nodes).map(|j| (0, j, 1.0)).collect())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// `E = -Σ_edges d_ij (x_i - x_j)²`, each edge counted once.
    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        check_len(self.n_nodes, x.len())?;
        Ok(-self
            .edges
            .iter()
            .filter(|&&(i, j, _)| x[i] != x[j])
            .map(|&(_, _, w)| w)
            .sum::<f64>())
    }

    /// `Q_ij = 2 d_ij` (upper triangle), `Q_ii = -Σ_j d_ij`.
    pub fn to_qubo(&self) -> QuboProblem {
        let n = self.n_nodes;
        let mut q = vec![0.0; n * n];
        for &(i, j, w) in &self.edges {
            let (a, b) = (i.min(j), i.max(j));
            q[a * n + b] += 2.0 * w;
            q[a * n + a] -= w;
            q[b * n + b] -= w;
        }
        QuboProblem { n, q, known_optimum: None }
    }
}

/// Random complete graph with i.i.d. uniform weights in `[lo, hi]`.
pub fn random_complete_graph(n_nodes: usize, weight_range: (f64, f64), seed: u64) -> Result<MaxCutGraph> {
    let (lo, hi) = weight_range;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
        return Err(Error::InvalidRange { lo, hi });
    }
    if n_nodes < 2 {
        return Err(Error::InvalidGraph("complete graph needs at least two nodes".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::with_capacity(n_nodes * (n_nodes - 1) / 2);
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            edges.push((i, j, rng.gen_range(lo..=hi)));
        }
    }
    MaxCutGraph::new(n_nodes, edges)
}

pub const DEFAULT_WEIGHT_RANGE: (f64, f64) = (0.01, 1.0);

/// Upper-triangular QUBO `min xᵀQx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboProblem {
    n: usize,
    /// Row-major `n × n`, lower triangle zero.
    q: Vec<f64>,
    pub known_optimum: Option<f64>,
}

impl QuboProblem {
    pub fn zeros(n: usize) -> Self {
        QuboProblem { n, q: vec![0.0; n * n], known_optimum: None }
    }

    /// Builds from `(i, j, q)` triples. Entries with `i > j` are folded into the
    /// upper triangle; repeated entries accumulate.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidQubo("QUBO needs at least one variable".into()));
        }
        let mut p = Self::zeros(n);
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidQubo(format!("entry ({i}, {j}) outside 0..{n}")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidQubo(format!("entry ({i}, {j}) is not finite")));
            }
            let (a, b) = (i.min(j), i.max(j));
            p.q[a * n + b] += v;
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.q[i * self.n + i]
    }

    /// Row `i` of the stored matrix (entries left of the diagonal are zero).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    /// Stored nonzero entries `(i, j, q)` with `i <= j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j, self.get(i, j)))).filter(|e| e.2 != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&v| v == 0.0)
    }

    /// Symmetric coupling `Q_ij + Q_ji` for `i != j`.
    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.get(i, j) + self.get(j, i)
    }

    /// `xᵀQx`.
    pub fn cost(&self, x: &[u8]) -> Result<f64> {
        check_len(self.n, x.len())?;
        Ok(self.cost_unchecked(x))
    }

    pub(crate) fn cost_unchecked(&self, x: &[u8]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            let row = self.row(i);
            total += row[i];
            for j in (i + 1)..n {
                if x[j] == 1 {
                    total += row[j];
                }
            }
        }
        total
    }

    /// Copy embedded into `n_total >= n` variables; extra variables have no terms.
    pub fn padded(&self, n_total: usize) -> QuboProblem {
        assert!(n_total >= self.n);
        if n_total == self.n {
            return self.clone();
        }
        let mut p = Self::zeros(n_total);
        for i in 0..self.n {
            for j in i..self.n {
                p.q[i * n_total + j] = self.get(i, j);
            }
        }
        p.known_optimum = self.known_optimum;
        p
    }

    /// Mean cost over `samples` uniform random bitstrings.
    pub fn random_mean_cost(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = rng_from_seed(seed);
        let mut x = vec![0u8; self.n];
        let mut acc = 0.0;
        for _ in 0..samples {
            for b in x.iter_mut() {
                *b = rng.gen_range(0..=1);
            }
            acc += self.cost_unchecked(&x);
        }
        acc / samples as f64
    }
}

/// Sample count used when the random-guess cost is not supplied.
pub const RANDOM_COST_SAMPLES: usize = 1000;

/// `(c - c_glob) / (c_rand - c_glob)`: 0 at the optimum, 1 at random-guess quality.
pub fn normalized_cost(c: f64, c_glob: f64, c_rand: f64) -> Result<f64> {
    let denom = c_rand - c_glob;
    if denom.abs() <= f64::EPSILON * c_glob.abs().max(1.0) || !denom.is_finite() {
        return Err(Error::DegenerateNormalization(c_glob));
    }
    Ok((c - c_glob) / denom)
}

/// Ising model `H(s) = Σ_i h_i s_i + Σ_{i<j} J_ij s_i s_j`, `s ∈ {-1, +1}`.
/// Couplings are stored once per unordered pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    pub h: Vec<f64>,
    couplings: Vec<(usize, usize, f64)>,
}

impl IsingModel {
    pub fn new(h: Vec<f64>, couplings: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = h.len();
        let mut seen = std::collections::HashSet::new();
        let mut stored = Vec::with_capacity(couplings.len());
        for (i, j, v) in couplings {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidConfig(format!("invalid coupling ({i}, {j}) for {n} spins")));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::InvalidConfig(format!("duplicate coupling ({i}, {j})")));
            }
            stored.push((key.0, key.1, v));
        }
        Ok(IsingModel { h, couplings: stored })
    }

    pub fn n_spins(&self) -> usize {
        self.h.len()
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn energy(&self, s: &[i8]) -> f64 {
        let field: f64 = self.h.iter().zip(s).map(|(h, &si)| h * si as f64).sum();
        let pair: f64 = self.couplings.iter().map(|&(i, j, v)| v * (s[i] * s[j]) as f64).sum();
        field + pair
    }

    /// Moves every field into a coupling with one extra ancilla spin
    /// (`J_ia = h_i`) and maps the purely quadratic model to a QUBO through
    /// `x = (s + 1) / 2`. The ancilla is the last variable.
    pub fn to_maxcut_qubo(&self) -> IsingReduction {
        let n = self.n_spins();
        let ancilla = n;
        let mut entries = Vec::new();
        let mut offset = 0.0;
        let lifted = self
            .couplings
            .iter()
            .copied()
            .chain(self.h.iter().enumerate().filter(|(_, &h)| h != 0.0).map(|(i, &h)| (i, ancilla, h)));
        // s_i s_j = 4 x_i x_j - 2 x_i - 2 x_j + 1
        for (i, j, v) in lifted {
            entries.push((i, j, 4.0 * v));
            entries.push((i, i, -2.0 * v));
            entries.push((j, j, -2.0 * v));
            offset += v;
        }
        let qubo = QuboProblem::from_entries(n + 1, entries).expect("indices are in range by construction");
        IsingReduction { qubo, ancilla, offset }
    }
}

/// Output of [`IsingModel::to_maxcut_qubo`]: `H_g(s) = qubo.cost(x) + offset`.
#[derive(Debug, Clone)]
pub struct IsingReduction {
    pub qubo: QuboProblem,
    pub ancilla: usize,
    pub offset: f64,
}

pub fn spins_to_bits(s: &[i8]) -> Vec<u8> {
    s.iter().map(|&v| u8::from(v > 0)).collect()
}

/// Smallest power of two `>= n` (and at least 2, so there is always one register qubit).
pub fn padded_size(n: usize) -> usize {
    n.max(2).next_power_of_two()
}

/// Register qubits needed for `n` variables.
pub fn register_qubits(n: usize) -> usize {
    padded_size(n).trailing_zeros() as usize
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}
