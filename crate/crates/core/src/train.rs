//! Gradient-descent and ADAM training of a QuEnc circuit.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{prepare_warmstart_state, quenc_qubits, AnsatzFamily, AnsatzSpec};
use crate::error::{Error, Result};
use crate::gradient::{Evaluator, Mode};
use crate::objective::{decode, SolutionDistribution};
use crate::problem::{Bitstring, QuboProblem};
use crate::record::{PostselectionStats, RunRecord, Solution, StopReason, TracePoint};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Gd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub const fn adam() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Learning rate tuned for 16-variable problems in exact mode.
pub const ALPHA0_16: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub optimizer: Optimizer,
    /// Update steps; the trace holds `max_iters + 1` points unless a stop rule fires.
    pub max_iters: usize,
    /// Stop when the cost improved by less than `threshold` (relative) over
    /// the last `window` iterations. `0` disables the rule.
    pub window: usize,
    pub threshold: f64,
    /// Shots per circuit execution, `0` for exact expectations.
    pub shots: usize,
    pub seed: u64,
    /// Stop as soon as a decoded bitstring reaches this classical cost.
    pub target_cost: Option<f64>,
    /// Abort constrained runs whose postselection probability drops below this.
    pub postselect_floor: f64,
    /// Half-width of the uniform perturbation around θ = 0 for warm starts.
    pub warm_perturbation: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: ALPHA0_16,
            optimizer: Optimizer::adam(),
            max_iters: 500,
            window: 20,
            threshold: 1e-4,
            shots: 0,
            seed: 0,
            target_cost: None,
            postselect_floor: 1e-6,
            warm_perturbation: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.alpha));
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                return bad(format!("ADAM betas must lie in [0, 1), got {beta1}, {beta2}"));
            }
            if !(eps > 0.0) {
                return bad(format!("ADAM epsilon must be positive, got {eps}"));
            }
        }
        if self.window > 0 && !(self.threshold >= 0.0) {
            return bad("convergence threshold must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.postselect_floor) {
            return bad("postselection floor must lie in [0, 1)".into());
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        Mode::from_shots(self.shots)
    }
}

/// Parameters and optimizer moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub theta: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Completed update steps.
    pub t: usize,
}

impl TrainState {
    pub fn new(theta: Vec<f64>) -> Self {
        let n = theta.len();
        TrainState { theta, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, grad: &[f64], alpha: f64, optimizer: Optimizer) {
        match optimizer {
            Optimizer::Gd => self.gd_step(grad, alpha),
            Optimizer::Adam { beta1, beta2, eps } => self.adam_step(grad, alpha, beta1, beta2, eps),
        }
    }

    /// `θ ← θ − α∇`.
    pub fn gd_step(&mut self, grad: &[f64], alpha: f64) {
        assert_eq!(grad.len(), self.theta.len());
        for (t, g) in self.theta.iter_mut().zip(grad) {
            *t -= alpha * g;
        }
        self.t += 1;
    }

    /// Moments are kept raw; bias correction is applied to the step only.
    pub fn adam_step(&mut self, grad: &[f64], alpha: f64, beta1: f64, beta2: f64, eps: f64) {
        assert_eq!(grad.len(), self.theta.len());
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for i in 0..self.theta.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            self.theta[i] -= alpha * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// θ uniform in `[0, 2π)` from |0…0⟩.
    Random,
    /// Bitstring injected into the register; θ near zero.
    WarmStart(Bitstring),
    /// Explicit parameters from |0…0⟩.
    Theta(Vec<f64>),
}

/// Raw result of an optimization run before it is wrapped in a [`RunRecord`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trace: Vec<TracePoint>,
    pub best: Solution,
    pub final_solution: Solution,
    pub final_theta: Vec<f64>,
    pub stop_reason: StopReason,
    pub postselection: Option<PostselectionStats>,
}

/// Streams of `cfg.seed` used by training.
pub(crate) const INIT_STREAM: u64 = 0;
const EVAL_STREAM_BASE: u64 = 1 << 32;

pub(crate) fn initial_theta(n_params: usize, cfg: &TrainConfig, warm: bool) -> Vec<f64> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, INIT_STREAM));
    if warm {
        let d = cfg.warm_perturbation;
        (0..n_params).map(|_| if d > 0.0 { rng.gen_range(-d..d) } else { 0.0 }).collect()
    } else {
        (0..n_params).map(|_| rng.gen_range(0.0..TAU)).collect()
    }
}

/// The descent loop shared by unconstrained and constrained training.
///
/// `decoder` maps a distribution to a bitstring over the problem variables;
/// `seed_best` pre-loads the best-so-far monitor (warm starts).
pub(crate) fn optimize(
    q: &QuboProblem,
    evaluator: &Evaluator<'_>,
    theta0: Vec<f64>,
    cfg: &TrainConfig,
    decoder: &dyn Fn(&SolutionDistribution) -> Bitstring,
    seed_best: Option<Bitstring>,
    constrained: bool,
) -> Result<TrainOutcome> {
    let mut state = TrainState::new(theta0);
    let mut best: Option<Solution> = seed_best.map(|x| Solution { cost: q.cost_unchecked(&x), bitstring: x });
    let mut trace = Vec::new();
    let mut kept_min = f64::INFINITY;
    let mut kept_sum = 0.0;
    let stop_reason;

    loop {
        let t = state.t;
        let seed = derive_seed(cfg.seed, EVAL_STREAM_BASE + t as u64);
        let more = t < cfg.max_iters;
        let (eval, grad) = if more {
            let (e, g) = evaluator.evaluate_with_gradient(&state.theta, seed)?;
            (e, Some(g))
        } else {
            (evaluator.evaluate(&state.theta, seed)?, None)
        };
        if constrained {
            if eval.kept < cfg.postselect_floor.max(f64::MIN_POSITIVE) {
                return Err(Error::PostselectionFailure { prob: eval.kept, floor: cfg.postselect_floor });
            }
            kept_min = kept_min.min(eval.kept);
            kept_sum += eval.kept;
        }
        if !eval.cost.is_finite() {
            return Err(Error::InvalidConfig(format!("cost became non-finite at iteration {t}")));
        }
        let x = decoder(&eval.dist);
        let c = q.cost_unchecked(&x);
        if best.as_ref().map_or(true, |b| c < b.cost) {
            best = Some(Solution { bitstring: x, cost: c });
        }
        let best_cost = best.as_ref().map(|b| b.cost).unwrap();
        trace.push(TracePoint { iter: t, cost: eval.cost, best_cost });

        if let Some(target) = cfg.target_cost {
            if best_cost <= target + 1e-9 {
                stop_reason = StopReason::TargetReached;
                break;
            }
        }
        if cfg.window > 0 && trace.len() > cfg.window {
            let old = trace[trace.len() - 1 - cfg.window].cost;
            let improvement = (old - eval.cost) / old.abs().max(1e-12);
            if improvement < cfg.threshold {
                stop_reason = StopReason::Converged;
                break;
            }
        }
        match grad {
            Some(g) => state.step(&g, cfg.alpha, cfg.optimizer),
            None => {
                stop_reason = StopReason::MaxIters;
                break;
            }
        }
    }

    let fin = evaluator.evaluate_exact(&state.theta)?;
    let fx = decoder(&fin.dist);
    let final_solution = Solution { cost: q.cost_unchecked(&fx), bitstring: fx };
    let postselection = constrained.then(|| PostselectionStats {
        min_probability: kept_min,
        mean_probability: kept_sum / trace.len() as f64,
        final_probability: fin.kept,
    });
    Ok(TrainOutcome {
        best: best.expect("at least one evaluation"),
        final_solution,
        final_theta: state.theta,
        trace,
        stop_reason,
        postselection,
    })
}

pub(crate) fn check_ansatz(q: &QuboProblem, spec: &AnsatzSpec) -> Result<()> {
    spec.validate()?;
    let need = quenc_qubits(q.n());
    if spec.n_qubits != need {
        return Err(Error::InvalidConfig(format!(
            "{} variables need {need} qubits, ansatz has {}",
            q.n(),
            spec.n_qubits
        )));
    }
    Ok(())
}

/// Initial state and θ for `init`; warm starts need the warm-start family.
pub(crate) fn prepare_init(q: &QuboProblem, spec: &AnsatzSpec, cfg: &TrainConfig, init: &Init) -> Result<(StateVector, Vec<f64>, Option<Bitstring>)> {
    let n_params = spec.n_params();
    match init {
        Init::Random => Ok((StateVector::zero(spec.n_qubits), initial_theta(n_params, cfg, false), None)),
        Init::Theta(theta) => {
            if theta.len() != n_params {
                return Err(Error::LengthMismatch { expected: n_params, got: theta.len() });
            }
            Ok((StateVector::zero(spec.n_qubits), theta.clone(), None))
        }
        Init::WarmStart(x) => {
            if x.len() != q.n() {
                return Err(Error::LengthMismatch { expected: q.n(), got: x.len() });
            }
            if spec.family != AnsatzFamily::WarmStart {
                return Err(Error::InvalidConfig("warm starts need the warm-start ansatz".into()));
            }
            Ok((prepare_warmstart_state(x), initial_theta(n_params, cfg, true), Some(x.clone())))
        }
    }
}

/// Trains `spec` on `q` and returns the full run record.
pub fn train(q: &QuboProblem, spec: &AnsatzSpec, cfg: &TrainConfig, init: &Init) -> Result<RunRecord> {
    let started = Instant::now();
    cfg.validate()?;
    check_ansatz(q, spec)?;
    let circuit = spec.build()?;
    let (initial, theta0, warm) = prepare_init(q, spec, cfg, init)?;
    let evaluator = Evaluator::new(q, &circuit, &initial)?.with_mode(cfg.mode());
    let outcome = optimize(q, &evaluator, theta0, cfg, &decode, warm, false)?;
    Ok(RunRecord::from_outcome(q, spec, cfg, outcome, 0, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::MaxCutGraph;

    #[test]
    fn gd_zero_gradient_keeps_theta() {
        let mut s = TrainState::new(vec![0.5, 1.0]);
        s.gd_step(&[0.0, 0.0], 0.1);
        assert_eq!(s.theta, vec![0.5, 1.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn gd_unit_step() {
        let mut s = TrainState::new(vec![0.5, 1.0, 2.0]);
        s.gd_step(&[0.0, 1.0, 0.0], 1.0);
        assert_eq!(s.theta, vec![0.5, 0.0, 2.0]);
    }

    #[test]
    fn gd_descends_quadratic() {
        // f(θ) = Σ (θ_i − c_i)²
        let c = [1.0, -2.0, 0.5];
        let f = |t: &[f64]| t.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut s = TrainState::new(vec![0.0; 3]);
        let mut last = f(&s.theta);
        for _ in 0..50 {
            let g: Vec<f64> = s.theta.iter().zip(&c).map(|(a, b)| 2.0 * (a - b)).collect();
            s.gd_step(&g, 0.1);
            let now = f(&s.theta);
            assert!(now < last);
            last = now;
        }
    }

    #[test]
    fn adam_without_memory_takes_sign_steps() {
        let mut s = TrainState::new(vec![0.0; 3]);
        s.adam_step(&[2.0, -0.5, 1e-3], 0.1, 0.0, 0.0, 1e-12);
        for (t, e) in s.theta.iter().zip([-0.1, 0.1, -0.1]) {
            assert!((t - e).abs() < 1e-8);
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_theta() {
        let mut s = TrainState::new(vec![0.3, -0.2]);
        s.adam_step(&[0.0, 0.0], 0.1, 0.9, 0.999, 1e-8);
        assert_eq!(s.theta, vec![0.3, -0.2]);
    }

    #[test]
    fn adam_constant_gradient_step_tends_to_alpha() {
        let mut s = TrainState::new(vec![0.0]);
        let mut prev = 0.0;
        let mut step = 0.0;
        for _ in 0..2000 {
            s.adam_step(&[0.37], 0.01, 0.9, 0.999, 1e-8);
            step = prev - s.theta[0];
            prev = s.theta[0];
        }
        assert!((step - 0.01).abs() < 1e-6, "step {step}");
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { alpha: 0.0, ..Default::default() }.validate().is_err());
        let bad_beta = TrainConfig { optimizer: Optimizer::Adam { beta1: 1.0, beta2: 0.9, eps: 1e-8 }, ..Default::default() };
        assert!(bad_beta.validate().is_err());
        let bad_eps = TrainConfig { optimizer: Optimizer::Adam { beta1: 0.9, beta2: 0.9, eps: 0.0 }, ..Default::default() };
        assert!(bad_eps.validate().is_err());
    }

    #[test]
    fn zero_iterations_evaluates_once() {
        let q = MaxCutGraph::star(4).unwrap().to_qubo();
        let spec = AnsatzSpec::new(AnsatzFamily::Sequential2Qg, 3, 2).unwrap();
        let cfg = TrainConfig { max_iters: 0, ..Default::default() };
        let rec = train(&q, &spec, &cfg, &Init::Random).unwrap();
        assert_eq!(rec.trace.len(), 1);
        assert_eq!(rec.iterations, 1);
        assert_eq!(rec.stop_reason, StopReason::MaxIters);
    }

    #[test]
    fn qubit_count_must_match_problem() {
        let q = MaxCutGraph::star(8).unwrap().to_qubo();
        let spec = AnsatzSpec::new(AnsatzFamily::Sequential2Qg, 3, 2).unwrap();
        assert!(train(&q, &spec, &TrainConfig::default(), &Init::Random).is_err());
    }

    #[test]
    fn warm_start_needs_warm_family() {
        let q = MaxCutGraph::star(4).unwrap().to_qubo();
        let spec = AnsatzSpec::new(AnsatzFamily::Sequential2Qg, 3, 2).unwrap();
        let init = Init::WarmStart(Bitstring::from_bits(vec![1, 0, 0, 0]));
        assert!(train(&q, &spec, &TrainConfig::default(), &init).is_err());
    }
}
