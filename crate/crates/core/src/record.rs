//! Serializable run records.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::AnsatzSpec;
use crate::error::Result;
use crate::problem::{normalized_cost, Bitstring, QuboProblem, RANDOM_COST_SAMPLES};
use crate::rng::{derive_seed, RNG_NAME};
use crate::train::{TrainConfig, TrainOutcome};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub bitstring: Bitstring,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    Converged,
    TargetReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    /// Relaxed cost of the distribution at this iteration.
    pub cost: f64,
    /// Best classical cost of any decoded bitstring so far.
    pub best_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostselectionStats {
    pub min_probability: f64,
    pub mean_probability: f64,
    pub final_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub n_c: usize,
    /// SHA-256 over the variable count and the stored matrix entries.
    pub hash: String,
    pub known_optimum: Option<f64>,
    pub n_constraints: usize,
}

impl ProblemInfo {
    pub fn of(q: &QuboProblem, n_constraints: usize) -> Self {
        ProblemInfo { n_c: q.n(), hash: problem_hash(q), known_optimum: q.known_optimum, n_constraints }
    }
}

pub fn problem_hash(q: &QuboProblem) -> String {
    let mut h = Sha256::new();
    h.update((q.n() as u64).to_le_bytes());
    for (i, j, v) in q.entries() {
        h.update((i as u64).to_le_bytes());
        h.update((j as u64).to_le_bytes());
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub master: u64,
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub seed: u64,
    pub iterations: usize,
    pub best_cost: f64,
    pub final_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub restart: usize,
    pub stage: String,
    pub input_cost: Option<f64>,
    pub output_cost: Option<f64>,
    pub error: Option<String>,
}

/// Fields that legitimately differ between identical reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u64,
    pub wall_ms: u64,
}

impl Timing {
    pub fn since(started: Instant) -> Self {
        let wall_ms = started.elapsed().as_millis() as u64;
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
        Timing { started_unix_ms: now.saturating_sub(wall_ms), wall_ms }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub problem: ProblemInfo,
    /// Absent for purely classical pipelines.
    pub ansatz: Option<AnsatzSpec>,
    pub config: Option<TrainConfig>,
    pub seeds: SeedInfo,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<TracePoint>,
    pub best: Solution,
    pub final_solution: Solution,
    pub final_theta: Vec<f64>,
    pub c_norm: Option<f64>,
    pub postselection: Option<PostselectionStats>,
    #[serde(default)]
    pub restarts: Vec<RestartSummary>,
    #[serde(default)]
    pub stages: Vec<StageSummary>,
    pub timing: Timing,
}

impl RunRecord {
    pub(crate) fn from_outcome(q: &QuboProblem, spec: &AnsatzSpec, cfg: &TrainConfig, outcome: TrainOutcome, n_constraints: usize, started: Instant) -> Self {
        let mut rec = RunRecord {
            schema_version: SCHEMA_VERSION,
            problem: ProblemInfo::of(q, n_constraints),
            ansatz: Some(*spec),
            config: Some(cfg.clone()),
            seeds: SeedInfo { master: cfg.seed, rng: RNG_NAME.to_string() },
            iterations: outcome.trace.len(),
            stop_reason: outcome.stop_reason,
            trace: outcome.trace,
            best: outcome.best,
            final_solution: outcome.final_solution,
            final_theta: outcome.final_theta,
            c_norm: None,
            postselection: outcome.postselection,
            restarts: Vec::new(),
            stages: Vec::new(),
            timing: Timing::since(started),
        };
        rec.c_norm = c_norm_for(q, rec.best.cost, cfg.seed);
        rec
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// `iter,cost,best_cost` rows preceded by a seed comment.
    pub fn trace_csv(&self) -> String {
        let mut out = format!("# master_seed={}\niter,cost,best_cost\n", self.seeds.master);
        for p in &self.trace {
            out.push_str(&format!("{},{},{}\n", p.iter, p.cost, p.best_cost));
        }
        out
    }
}

/// Normalized cost against the known optimum, with the random-guess level
/// estimated from seeded samples.
pub fn c_norm_for(q: &QuboProblem, cost: f64, seed: u64) -> Option<f64> {
    let opt = q.known_optimum?;
    let c_rand = q.random_mean_cost(RANDOM_COST_SAMPLES, derive_seed(seed, u64::MAX));
    normalized_cost(cost, opt, c_rand).ok()
}
