//! Restarts, classical refinement, and the experiment harnesses built on them.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::exact_optimum;
use crate::ansatz::{quenc_qubits, AnsatzFamily, AnsatzSpec};
use crate::constraint::{constrained_train, validate_constraints, Constraint};
use crate::error::{Error, Result};
use crate::problem::{random_complete_graph, Bitstring, QuboProblem, DEFAULT_WEIGHT_RANGE, RANDOM_COST_SAMPLES};
use crate::record::{c_norm_for, ProblemInfo, RestartSummary, RunRecord, SeedInfo, Solution, StageSummary, StopReason, Timing, TracePoint, SCHEMA_VERSION};
use crate::rng::{derive_seed, rng_from_seed, RNG_NAME};
use crate::train::{train, Init, TrainConfig};

/// Improvements smaller than this do not count as a descent move.
const MOVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSearchResult {
    pub x: Bitstring,
    pub cost: f64,
    pub flips: usize,
    /// No improving move remained when the search stopped.
    pub local_optimum: bool,
    /// Cost before the first move and after each move.
    pub trace: Vec<f64>,
}

/// Steepest-descent single-bit-flip search, at most `budget` flips.
pub fn local_search(q: &QuboProblem, x0: &[u8], budget: usize) -> Result<LocalSearchResult> {
    local_search_constrained(q, x0, &[], budget)
}

/// As [`local_search`], but variables tied by a constraint only move
/// together, so a feasible start stays feasible.
pub fn local_search_constrained(q: &QuboProblem, x0: &[u8], constraints: &[Constraint], budget: usize) -> Result<LocalSearchResult> {
    let n = q.n();
    if x0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: x0.len() });
    }
    validate_constraints(n, constraints)?;
    let mut partner = vec![None; n];
    for c in constraints {
        partner[c.i] = Some(c.j);
        partner[c.j] = Some(c.i);
    }
    let mut x = x0.to_vec();
    // field[i] = Q_ii + Σ_k c_ik x_k; flipping i changes the cost by (1 − 2x_i)·field[i].
    let mut field: Vec<f64> = (0..n).map(|i| q.diag(i) + (0..n).filter(|&k| k != i && x[k] == 1).map(|k| q.coupling(i, k)).sum::<f64>()).collect();
    let mut cost = q.cost_unchecked(&x);
    let mut trace = vec![cost];
    let sgn = |b: u8| if b == 0 { 1.0 } else { -1.0 };
    let flip = |x: &mut Vec<u8>, field: &mut Vec<f64>, i: usize| {
        let s = sgn(x[i]);
        x[i] ^= 1;
        for k in 0..n {
            if k != i {
                field[k] += s * q.coupling(i, k);
            }
        }
    };
    let mut flips = 0;
    let local_optimum = loop {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            let delta = match partner[i] {
                None => sgn(x[i]) * field[i],
                Some(j) if j > i => sgn(x[i]) * field[i] + sgn(x[j]) * field[j] + sgn(x[i]) * sgn(x[j]) * q.coupling(i, j),
                Some(_) => continue,
            };
            if delta < -MOVE_TOL && best.map_or(true, |(d, _)| delta < d) {
                best = Some((delta, i));
            }
        }
        let Some((delta, i)) = best else { break true };
        if flips >= budget {
            break false;
        }
        flip(&mut x, &mut field, i);
        if let Some(j) = partner[i] {
            flip(&mut x, &mut field, j);
        }
        cost += delta;
        flips += 1;
        trace.push(cost);
    };
    let cost = q.cost_unchecked(&x);
    Ok(LocalSearchResult { x: Bitstring::from_bits(x), cost, flips, local_optimum, trace })
}

/// A classical solver that improves a given bitstring.
pub trait ClassicalSolver: Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, q: &QuboProblem, x0: &[u8], constraints: &[Constraint]) -> Result<LocalSearchResult>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSearch {
    /// Maximum number of accepted moves.
    pub budget: usize,
}

impl ClassicalSolver for LocalSearch {
    fn name(&self) -> &'static str {
        "local_search"
    }
    fn solve(&self, q: &QuboProblem, x0: &[u8], constraints: &[Constraint]) -> Result<LocalSearchResult> {
        local_search_constrained(q, x0, constraints, self.budget)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuEncStage {
    pub family: AnsatzFamily,
    pub layers: usize,
    /// `seed` is replaced by the stage seed.
    pub config: TrainConfig,
}

impl QuEncStage {
    /// Ansatz for a cold start, or the warm-start family (layers rounded up
    /// to even) when a predecessor supplies a bitstring.
    fn ansatz(&self, n_c: usize, warm: bool) -> Result<AnsatzSpec> {
        if warm {
            AnsatzSpec::new(AnsatzFamily::WarmStart, quenc_qubits(n_c), self.layers + self.layers % 2)
        } else {
            AnsatzSpec::new(self.family, quenc_qubits(n_c), self.layers)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Quenc(QuEncStage),
    LocalSearch(LocalSearch),
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Quenc(_) => "quenc",
            Stage::LocalSearch(_) => "local_search",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub stages: Vec<Stage>,
    pub restarts: usize,
    pub seed: u64,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    /// Warm start handed to the first stage of every restart.
    #[serde(default)]
    pub initial: Option<Bitstring>,
}

impl PipelineSpec {
    pub fn validate(&self, n_c: usize) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidConfig("pipeline needs at least one stage".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("pipeline needs at least one restart".into()));
        }
        if let Some(x) = &self.initial {
            if x.len() != n_c {
                return Err(Error::LengthMismatch { expected: n_c, got: x.len() });
            }
        }
        validate_constraints(n_c, &self.constraints)
    }
}

struct RestartResult {
    best: Option<Solution>,
    quenc: Option<RunRecord>,
    classical: Option<LocalSearchResult>,
    stages: Vec<StageSummary>,
    iterations: usize,
    error: Option<Error>,
}

/// Uniform random bitstring; constrained pairs get one 0 and one 1.
fn random_start(n: usize, constraints: &[Constraint], seed: u64) -> Vec<u8> {
    let mut rng = rng_from_seed(seed);
    let mut x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    for c in constraints {
        x[c.j] = 1 - x[c.i];
    }
    x
}

fn run_restart(q: &QuboProblem, spec: &PipelineSpec, r: usize) -> RestartResult {
    let seed = derive_seed(spec.seed, r as u64);
    let initial = spec.initial.as_ref().map(|x| Solution { bitstring: x.clone(), cost: q.cost(x).expect("length checked by validate") });
    let mut out = RestartResult { best: initial, quenc: None, classical: None, stages: Vec::new(), iterations: 0, error: None };
    for (s, stage) in spec.stages.iter().enumerate() {
        let stage_seed = derive_seed(seed, s as u64);
        let input = out.best.clone();
        let result: Result<Solution> = match stage {
            Stage::Quenc(st) => (|| {
                let warm = input.as_ref().map(|b| b.bitstring.clone());
                let ansatz = st.ansatz(q.n(), warm.is_some())?;
                let cfg = TrainConfig { seed: stage_seed, ..st.config.clone() };
                let init = warm.map_or(Init::Random, Init::WarmStart);
                let rec = if spec.constraints.is_empty() {
                    train(q, &ansatz, &cfg, &init)?
                } else {
                    constrained_train(q, &spec.constraints, &ansatz, &cfg, &init)?
                };
                out.iterations += rec.iterations;
                let best = rec.best.clone();
                out.quenc = Some(rec);
                Ok(best)
            })(),
            Stage::LocalSearch(ls) => (|| {
                let x0 = match &input {
                    Some(b) => b.bitstring.clone().into_inner(),
                    None => random_start(q.n(), &spec.constraints, stage_seed),
                };
                let res = ls.solve(q, &x0, &spec.constraints)?;
                let sol = Solution { bitstring: res.x.clone(), cost: res.cost };
                out.classical = Some(res);
                Ok(sol)
            })(),
        };
        let mut summary = StageSummary { restart: r, stage: stage.name().into(), input_cost: input.as_ref().map(|b| b.cost), output_cost: None, error: None };
        match result {
            Ok(sol) => {
                summary.output_cost = Some(sol.cost);
                if input.as_ref().map_or(true, |b| sol.cost < b.cost) {
                    out.best = Some(sol);
                }
            }
            Err(e) => {
                summary.error = Some(e.to_string());
                out.error = Some(e);
            }
        }
        out.stages.push(summary);
    }
    out
}

/// Runs every restart of the pipeline and keeps the global best.
///
/// Restart `r` uses seed `derive_seed(spec.seed, r)`, and stage `s` within it
/// `derive_seed(restart_seed, s)`. The returned record carries the trace of
/// the winning restart's last QuEnc stage, or of its local search when the
/// pipeline is purely classical.
pub fn run_pipeline(q: &QuboProblem, spec: &PipelineSpec) -> Result<RunRecord> {
    let started = Instant::now();
    spec.validate(q.n())?;
    let mut results: Vec<RestartResult> = (0..spec.restarts).into_par_iter().map(|r| run_restart(q, spec, r)).collect();

    let winner = results
        .iter()
        .enumerate()
        .filter_map(|(r, res)| res.best.as_ref().map(|b| (r, b.cost)))
        .fold(None, |acc: Option<(usize, f64)>, (r, c)| match acc {
            Some((_, bc)) if bc <= c => acc,
            _ => Some((r, c)),
        });
    let Some((w, _)) = winner else {
        let err = results.iter_mut().find_map(|r| r.error.take());
        return Err(err.unwrap_or_else(|| Error::InvalidConfig("pipeline produced no solution".into())));
    };

    let restarts: Vec<RestartSummary> = results
        .iter()
        .enumerate()
        .map(|(r, res)| RestartSummary {
            index: r,
            seed: derive_seed(spec.seed, r as u64),
            iterations: res.iterations,
            best_cost: res.best.as_ref().map_or(f64::NAN, |b| b.cost),
            final_cost: res.stages.last().and_then(|s| s.output_cost).unwrap_or(f64::NAN),
        })
        .collect();
    let stages: Vec<StageSummary> = results.iter().flat_map(|r| r.stages.iter().cloned()).collect();
    let win = results.swap_remove(w);
    let best = win.best.clone().expect("winner has a solution");

    let mut rec = match win.quenc {
        Some(rec) => rec,
        None => {
            // Purely classical, or every stage failed and the warm start stands.
            let (costs, local_optimum) = win.classical.map_or((Vec::new(), false), |ls| (ls.trace, ls.local_optimum));
            let trace: Vec<TracePoint> = costs
                .iter()
                .enumerate()
                .scan(f64::INFINITY, |b, (i, &c)| {
                    *b = b.min(c);
                    Some(TracePoint { iter: i, cost: c, best_cost: *b })
                })
                .collect();
            RunRecord {
                schema_version: SCHEMA_VERSION,
                problem: ProblemInfo::of(q, spec.constraints.len()),
                ansatz: None,
                config: None,
                seeds: SeedInfo { master: spec.seed, rng: RNG_NAME.into() },
                iterations: trace.len(),
                stop_reason: if local_optimum { StopReason::Converged } else { StopReason::MaxIters },
                trace,
                best: best.clone(),
                final_solution: best.clone(),
                final_theta: Vec::new(),
                c_norm: None,
                postselection: None,
                restarts: Vec::new(),
                stages: Vec::new(),
                timing: Timing::since(started),
            }
        }
    };
    rec.seeds = SeedInfo { master: spec.seed, rng: RNG_NAME.into() };
    rec.final_solution = best.clone();
    rec.best = best;
    rec.c_norm = c_norm_for(q, rec.best.cost, spec.seed);
    rec.restarts = restarts;
    rec.stages = stages;
    rec.timing = Timing::since(started);
    Ok(rec)
}

/// `restarts` independent QuEnc trainings with the best kept.
pub fn solve_with_restarts(q: &QuboProblem, family: AnsatzFamily, layers: usize, cfg: &TrainConfig, restarts: usize, constraints: &[Constraint]) -> Result<RunRecord> {
    let spec = PipelineSpec {
        stages: vec![Stage::Quenc(QuEncStage { family, layers, config: cfg.clone() })],
        restarts,
        seed: cfg.seed,
        constraints: constraints.to_vec(),
        initial: None,
    };
    run_pipeline(q, &spec)
}

/// `count` random complete graphs with weights from [`DEFAULT_WEIGHT_RANGE`]
/// and their exact optima. Graph `i` uses `derive_seed(seed, i)`.
pub fn random_maxcut_problems(n_c: usize, count: usize, seed: u64, with_optimum: bool) -> Result<Vec<QuboProblem>> {
    (0..count)
        .map(|i| {
            let mut q = random_complete_graph(n_c, DEFAULT_WEIGHT_RANGE, derive_seed(seed, i as u64))?.to_qubo();
            if with_optimum {
                q.known_optimum = Some(exact_optimum(&q)?.1);
            }
            Ok(q)
        })
        .collect()
}

/// One random-init training in a local-minima sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimaRow {
    pub n_c: usize,
    pub layers: usize,
    pub problem: usize,
    pub run: usize,
    pub seed: u64,
    pub cost: f64,
    pub optimum: f64,
    pub hit: bool,
    pub iterations: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalOptEstimate {
    pub hits: usize,
    pub runs: usize,
    pub probability: f64,
    pub std_error: f64,
}

impl GlobalOptEstimate {
    pub fn from_rows(rows: &[LocalMinimaRow]) -> Self {
        let runs = rows.len();
        let hits = rows.iter().filter(|r| r.hit).count();
        let p = if runs == 0 { 0.0 } else { hits as f64 / runs as f64 };
        GlobalOptEstimate { hits, runs, probability: p, std_error: (p * (1.0 - p) / runs.max(1) as f64).sqrt() }
    }
}

fn same_cost(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Random-init trainings on every problem; a run hits when its final
/// decoded cost equals the problem's optimum (computed if not recorded).
pub fn local_minima_runs(problems: &[QuboProblem], spec: &AnsatzSpec, runs_per_problem: usize, cfg: &TrainConfig) -> Result<Vec<LocalMinimaRow>> {
    let optima = problems
        .iter()
        .map(|q| q.known_optimum.map_or_else(|| exact_optimum(q).map(|r| r.1), Ok))
        .collect::<Result<Vec<f64>>>()?;
    let jobs: Vec<(usize, usize)> = (0..problems.len()).flat_map(|p| (0..runs_per_problem).map(move |r| (p, r))).collect();
    jobs.into_par_iter()
        .map(|(p, r)| {
            let seed = derive_seed(derive_seed(cfg.seed, p as u64), r as u64);
            let rec = train(&problems[p], spec, &TrainConfig { seed, ..cfg.clone() }, &Init::Random)?;
            let cost = rec.final_solution.cost;
            Ok(LocalMinimaRow {
                n_c: problems[p].n(),
                layers: spec.layers,
                problem: p,
                run: r,
                seed,
                cost,
                optimum: optima[p],
                hit: same_cost(cost, optima[p]),
                iterations: rec.iterations,
                wall_ms: rec.timing.wall_ms,
            })
        })
        .collect()
}

/// Fraction of random-init trainings that end on a global optimum.
pub fn global_opt_probability(problems: &[QuboProblem], spec: &AnsatzSpec, runs_per_problem: usize, cfg: &TrainConfig) -> Result<GlobalOptEstimate> {
    Ok(GlobalOptEstimate::from_rows(&local_minima_runs(problems, spec, runs_per_problem, cfg)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotScalingConfig {
    pub family: AnsatzFamily,
    pub layers: usize,
    /// Shots per circuit execution; `0` is the exact-mode column.
    pub k_grid: Vec<usize>,
    pub alpha_grid: Vec<f64>,
    /// Learning rate of the exact-mode baseline.
    pub alpha0: f64,
    /// Shared settings; shot-mode cells run with the convergence window off
    /// because single-iteration costs are noisy.
    pub base: TrainConfig,
}

/// One (k, α, problem) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRow {
    pub n_c: usize,
    pub layers: usize,
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
    pub cost: f64,
    /// Same ratio as the table's relative cost, for this problem alone.
    pub relative_cost: f64,
    pub iterations: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSummary {
    pub k: usize,
    pub alpha: f64,
    pub mean_cost: f64,
    /// `(⟨C⟩_{k,α} − ⟨C⟩_{exact,α0}) / (⟨C_rand⟩ − ⟨C⟩_{exact,α0})` over problem means.
    pub relative_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotScalingTable {
    pub rows: Vec<ShotRow>,
    pub summary: Vec<ShotSummary>,
    pub baseline_cost: f64,
    pub random_cost: f64,
}

/// Relative cost of `cost` against a baseline and the random-guess level.
pub fn relative_cost(cost: f64, baseline: f64, random: f64) -> f64 {
    (cost - baseline) / (random - baseline)
}

/// Final decoded cost of every (k, α) cell on every problem, plus the
/// exact-mode α0 baseline. Problem `p` trains from `derive_seed(base.seed, p)`
/// in every cell, so cells differ only in shots and learning rate.
pub fn shot_scaling_experiment(problems: &[QuboProblem], cfg: &ShotScalingConfig) -> Result<ShotScalingTable> {
    if cfg.k_grid.is_empty() || cfg.alpha_grid.is_empty() || problems.is_empty() {
        return Err(Error::InvalidConfig("shot scaling needs non-empty grids and at least one problem".into()));
    }
    let n_c = problems[0].n();
    if problems.iter().any(|q| q.n() != n_c) {
        return Err(Error::InvalidConfig("shot scaling problems must share one size".into()));
    }
    let spec = AnsatzSpec::new(cfg.family, quenc_qubits(n_c), cfg.layers)?;
    let run = |p: usize, k: usize, alpha: f64| -> Result<ShotRow> {
        let seed = derive_seed(cfg.base.seed, p as u64);
        let window = if k == 0 { cfg.base.window } else { 0 };
        let tc = TrainConfig { alpha, shots: k, seed, window, ..cfg.base.clone() };
        let rec = train(&problems[p], &spec, &tc, &Init::Random)?;
        Ok(ShotRow {
            n_c,
            layers: cfg.layers,
            k,
            alpha,
            seed,
            cost: rec.final_solution.cost,
            relative_cost: f64::NAN,
            iterations: rec.iterations,
            wall_ms: rec.timing.wall_ms,
        })
    };
    let baseline: Vec<ShotRow> = (0..problems.len()).into_par_iter().map(|p| run(p, 0, cfg.alpha0)).collect::<Result<_>>()?;
    let random: Vec<f64> = problems
        .par_iter()
        .enumerate()
        .map(|(p, q)| q.random_mean_cost(RANDOM_COST_SAMPLES, derive_seed(derive_seed(cfg.base.seed, p as u64), u64::MAX)))
        .collect();
    let cells: Vec<(usize, f64, usize)> = cfg
        .k_grid
        .iter()
        .flat_map(|&k| cfg.alpha_grid.iter().flat_map(move |&a| (0..problems.len()).map(move |p| (k, a, p))))
        .collect();
    let mut rows: Vec<ShotRow> = cells.into_par_iter().map(|(k, a, p)| run(p, k, a)).collect::<Result<_>>()?;
    for (i, row) in rows.iter_mut().enumerate() {
        let p = i % problems.len();
        row.relative_cost = relative_cost(row.cost, baseline[p].cost, random[p]);
    }
    let mean = |v: &mut dyn Iterator<Item = f64>| {
        let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        s / n as f64
    };
    let baseline_cost = mean(&mut baseline.iter().map(|r| r.cost));
    let random_cost = mean(&mut random.iter().copied());
    let summary = rows
        .chunks(problems.len())
        .map(|chunk| {
            let m = mean(&mut chunk.iter().map(|r| r.cost));
            ShotSummary { k: chunk[0].k, alpha: chunk[0].alpha, mean_cost: m, relative_cost: relative_cost(m, baseline_cost, random_cost) }
        })
        .collect();
    Ok(ShotScalingTable { rows, summary, baseline_cost, random_cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::MaxCutGraph;

    fn neighbours_no_better(q: &QuboProblem, x: &[u8], cost: f64) -> bool {
        (0..x.len()).all(|i| {
            let mut y = x.to_vec();
            y[i] ^= 1;
            q.cost_unchecked(&y) >= cost - 1e-9
        })
    }

    #[test]
    fn local_optimum_is_returned_unchanged() {
        let q = MaxCutGraph::star(6).unwrap().to_qubo();
        let x = [0, 1, 1, 1, 1, 1];
        let r = local_search(&q, &x, 100).unwrap();
        assert_eq!(r.x.as_slice(), &x);
        assert_eq!(r.flips, 0);
        assert!(r.local_optimum);
    }

    #[test]
    fn star_from_all_ones() {
        let q = MaxCutGraph::star(6).unwrap().to_qubo();
        let r = local_search(&q, &[1; 6], 100).unwrap();
        assert_eq!(r.x.as_slice(), &[0, 1, 1, 1, 1, 1]);
        assert_eq!(r.cost, -5.0);
    }

    #[test]
    fn result_is_one_flip_optimal() {
        for seed in 0..20 {
            let q = random_complete_graph(10, DEFAULT_WEIGHT_RANGE, seed).unwrap().to_qubo();
            let x0 = random_start(10, &[], seed);
            let r = local_search(&q, &x0, 1000).unwrap();
            assert!(r.local_optimum);
            assert!(r.cost <= q.cost_unchecked(&x0));
            assert!(neighbours_no_better(&q, r.x.as_slice(), r.cost));
            assert!((r.trace.last().unwrap() - r.cost).abs() < 1e-9);
        }
    }

    #[test]
    fn budget_truncates() {
        let q = MaxCutGraph::star(6).unwrap().to_qubo();
        let r = local_search(&q, &[1; 6], 0).unwrap();
        assert_eq!(r.flips, 0);
        assert!(!r.local_optimum);
        assert!(local_search(&q, &[1; 5], 10).is_err());
    }

    #[test]
    fn constrained_search_stays_feasible() {
        let q = random_complete_graph(8, DEFAULT_WEIGHT_RANGE, 3).unwrap().to_qubo();
        let cs = [Constraint { i: 0, j: 5 }, Constraint { i: 2, j: 3 }];
        let x0 = random_start(8, &cs, 1);
        let r = local_search_constrained(&q, &x0, &cs, 100).unwrap();
        assert!(cs.iter().all(|c| c.is_satisfied(r.x.as_slice())));
        assert!(r.cost <= q.cost_unchecked(&x0));
    }

    #[test]
    fn classical_pipeline_equals_local_search() {
        let q = random_complete_graph(12, DEFAULT_WEIGHT_RANGE, 8).unwrap().to_qubo();
        let spec = PipelineSpec { stages: vec![Stage::LocalSearch(LocalSearch { budget: 500 })], restarts: 1, seed: 4, constraints: vec![], initial: None };
        let rec = run_pipeline(&q, &spec).unwrap();
        let x0 = random_start(12, &[], derive_seed(derive_seed(4, 0), 0));
        let direct = local_search(&q, &x0, 500).unwrap();
        assert_eq!(rec.best.bitstring, direct.x);
        assert_eq!(rec.iterations, rec.trace.len());
        assert!(rec.ansatz.is_none());
    }

    #[test]
    fn pipeline_is_deterministic_and_monotone() {
        let q = random_complete_graph(8, DEFAULT_WEIGHT_RANGE, 2).unwrap().to_qubo();
        let cfg = TrainConfig { max_iters: 30, ..Default::default() };
        let spec = PipelineSpec {
            stages: vec![
                Stage::Quenc(QuEncStage { family: AnsatzFamily::Sequential2Qg, layers: 2, config: cfg }),
                Stage::LocalSearch(LocalSearch { budget: 100 }),
            ],
            restarts: 3,
            seed: 11,
            constraints: vec![],
            initial: None,
        };
        let a = run_pipeline(&q, &spec).unwrap();
        let mut b = run_pipeline(&q, &spec).unwrap();
        b.timing = a.timing.clone();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.stages.len(), 6);
        for s in &a.stages {
            if let (Some(i), Some(o)) = (s.input_cost, s.output_cost) {
                assert!(o <= i + 1e-12 || s.stage == "quenc");
            }
        }
        assert!(a.restarts.iter().all(|r| r.best_cost >= a.best.cost));
    }

    #[test]
    fn initial_bitstring_feeds_first_stage() {
        let q = MaxCutGraph::star(6).unwrap().to_qubo();
        let x: Bitstring = "111111".parse().unwrap();
        let spec = PipelineSpec { stages: vec![Stage::LocalSearch(LocalSearch { budget: 50 })], restarts: 2, seed: 1, constraints: vec![], initial: Some(x) };
        let rec = run_pipeline(&q, &spec).unwrap();
        assert_eq!(rec.best.bitstring.to_string(), "011111");
        assert!(rec.stages.iter().all(|s| s.input_cost == Some(0.0)));
        let bad = PipelineSpec { initial: Some("11".parse().unwrap()), ..spec };
        assert!(matches!(run_pipeline(&q, &bad), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn zero_qubo_is_always_solved() {
        let mut q = QuboProblem::zeros(4);
        q.known_optimum = Some(0.0);
        let spec = AnsatzSpec::new(AnsatzFamily::Sequential2Qg, 3, 2).unwrap();
        let cfg = TrainConfig { max_iters: 5, ..Default::default() };
        let est = global_opt_probability(&[q], &spec, 4, &cfg).unwrap();
        assert_eq!(est.probability, 1.0);
        assert_eq!(est.runs, 4);
    }

    #[test]
    fn relative_cost_anchors() {
        assert_eq!(relative_cost(-3.0, -3.0, -1.0), 0.0);
        assert_eq!(relative_cost(-1.0, -3.0, -1.0), 1.0);
    }
}
