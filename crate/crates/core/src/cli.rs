//! Command-line front end: `quenc solve` and `quenc experiment`.
//!
//! Exit codes: 0 on success, 2 for unusable input (bad flags, files,
//! configs, sizes), 3 when constrained training loses its postselected
//! branch, 1 for anything else.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{brute_force_constrained, classical_expressibility, quantum_expressibility_report, EXACT_CAP, EXPRESSIBILITY_BINS};
use crate::ansatz::{quenc_qubits, AnsatzFamily, AnsatzSpec};
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::hybrid::{local_minima_runs, random_maxcut_problems, shot_scaling_experiment, GlobalOptEstimate, LocalMinimaRow, LocalSearch, PipelineSpec, QuEncStage, ShotScalingConfig, Stage};
use crate::io::{read_constraints, read_graph, read_qubo};
use crate::problem::{normalized_cost, Bitstring, QuboProblem, RANDOM_COST_SAMPLES};
use crate::record::{RunRecord, SCHEMA_VERSION};
use crate::rng::{derive_seed, RNG_NAME};
use crate::sim::MAX_QUBITS;
use crate::train::{Optimizer, TrainConfig, ALPHA0_16};

/// Known optima are filled in by exhaustive search up to this size.
pub const KNOWN_OPTIMUM_CAP: usize = 20;

/// Accepted moves per variable for `--refine local` unless overridden.
pub const REFINE_MOVES_PER_VAR: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "quenc", version, about = "Amplitude-encoded variational QUBO/MaxCut solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on one problem and write result.json, trace.csv and solution.txt.
    Solve(SolveArgs),
    /// Run an experiment grid from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnsatzArg {
    Seq,
    Sim,
}

impl From<AnsatzArg> for AnsatzFamily {
    fn from(a: AnsatzArg) -> Self {
        match a {
            AnsatzArg::Seq => AnsatzFamily::Sequential2Qg,
            AnsatzArg::Sim => AnsatzFamily::Simultaneous2Qg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Gd,
    Adam,
}

impl From<OptimizerArg> for Optimizer {
    fn from(o: OptimizerArg) -> Self {
        match o {
            OptimizerArg::Gd => Optimizer::Gd,
            OptimizerArg::Adam => Optimizer::adam(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefineArg {
    Local,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Weighted edge list.
    #[arg(long, required_unless_present = "qubo", conflicts_with = "qubo")]
    pub graph: Option<PathBuf>,
    /// Upper-triangular QUBO entries.
    #[arg(long)]
    pub qubo: Option<PathBuf>,
    /// `i j` pairs enforcing `x_i + x_j = 1`.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long)]
    pub layers: usize,
    #[arg(long, value_enum, default_value = "seq")]
    pub ansatz: AnsatzArg,
    /// Shots per circuit execution; 0 evaluates exact expectations.
    #[arg(long, default_value_t = 0)]
    pub shots: usize,
    #[arg(long, value_enum, default_value = "adam")]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = ALPHA0_16)]
    pub alpha: f64,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Initial bitstring, given inline or as a file whose first line holds it.
    #[arg(long, value_name = "BITS|FILE")]
    pub warmstart: Option<String>,
    /// Classical refinement of the trained solution.
    #[arg(long, value_enum)]
    pub refine: Option<RefineArg>,
    /// Move budget for `--refine local` (default 100 per variable).
    #[arg(long)]
    pub refine_budget: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    LocalMinima,
    Shots,
    Expressibility,
    AnsatzCompare,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub kind: ExperimentKind,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    let result = match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Experiment(a) => experiment(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::PostselectionFailure { .. } | Error::ZeroProbabilityBranch { .. } => 3,
        Error::Parse { .. }
        | Error::LengthMismatch { .. }
        | Error::InvalidGraph(_)
        | Error::InvalidQubo(_)
        | Error::InvalidRange { .. }
        | Error::InvalidConstraint(_)
        | Error::InvalidConfig(_)
        | Error::SizeCapExceeded { .. }
        | Error::Json(_) => 2,
        _ => 1,
    }
}

/// `QUENC_THREADS` caps the worker pool.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("QUENC_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::InvalidConfig(format!("QUENC_THREADS must be a positive integer, got {v:?}")))?;
    // A pool already exists when called twice in one process; keep it.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

fn parse_warmstart(arg: &str) -> Result<Bitstring> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("cannot read {arg}: {e}")))?
    } else {
        arg.to_string()
    };
    let line = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::InvalidConfig(format!("warm start {arg:?} holds no bitstring")))?;
    line.parse().map_err(|_| Error::InvalidConfig(format!("warm start {line:?} is not a bitstring")))
}

fn load_problem(a: &SolveArgs) -> Result<QuboProblem> {
    match (&a.graph, &a.qubo) {
        (Some(g), None) => Ok(read_graph(g)?.to_qubo()),
        (None, Some(q)) => read_qubo(q),
        _ => Err(Error::InvalidConfig("give exactly one of --graph and --qubo".into())),
    }
}

fn solve(a: &SolveArgs) -> Result<()> {
    let mut q = load_problem(a)?;
    let constraints: Vec<Constraint> = match &a.constraints {
        Some(p) => read_constraints(p)?,
        None => Vec::new(),
    };
    let n_qubits = quenc_qubits(q.n()) + constraints.len();
    if n_qubits > MAX_QUBITS {
        return Err(Error::InvalidConfig(format!("problem needs {n_qubits} qubits, budget is {MAX_QUBITS}")));
    }
    let initial = a.warmstart.as_deref().map(parse_warmstart).transpose()?;
    if q.n() <= KNOWN_OPTIMUM_CAP {
        q.known_optimum = Some(brute_force_constrained(&q, &constraints)?.1);
    }

    let config = TrainConfig { alpha: a.alpha, optimizer: a.optimizer.into(), max_iters: a.iters, shots: a.shots, seed: a.seed, ..TrainConfig::default() };
    config.validate()?;
    let mut stages = vec![Stage::Quenc(QuEncStage { family: a.ansatz.into(), layers: a.layers, config })];
    if a.refine.is_some() {
        let budget = a.refine_budget.unwrap_or(REFINE_MOVES_PER_VAR * q.n().max(1));
        stages.push(Stage::LocalSearch(LocalSearch { budget }));
    }
    let spec = PipelineSpec { stages, restarts: a.restarts, seed: a.seed, constraints, initial };
    let rec = crate::hybrid::run_pipeline(&q, &spec)?;
    write_solve_outputs(&a.out, &rec)?;
    println!("cost {} bitstring {}", rec.best.cost, rec.best.bitstring);
    Ok(())
}

pub fn write_solve_outputs(dir: &Path, rec: &RunRecord) -> Result<()> {
    create_dir(dir)?;
    write_file(&dir.join("result.json"), &(rec.to_json()? + "\n"))?;
    write_file(&dir.join("trace.csv"), &rec.trace_csv())?;
    write_file(&dir.join("solution.txt"), &format!("{}\n# master_seed={}\n", rec.best.bitstring, rec.seeds.master))
}

// Experiment configs: flat JSON, versioned, unknown keys rejected.

fn default_ansatz() -> String {
    "seq".into()
}
fn default_families() -> Vec<String> {
    vec!["seq".into(), "sim".into()]
}
fn default_optimizer() -> String {
    "adam".into()
}
fn default_sweep_alpha() -> f64 {
    0.05
}
fn default_alpha0() -> f64 {
    ALPHA0_16
}
fn default_sweep_iters() -> usize {
    3000
}
fn default_sweep_window() -> usize {
    100
}
fn default_sweep_threshold() -> f64 {
    1e-6
}
fn default_samples() -> usize {
    10_000
}
fn default_bins() -> usize {
    EXPRESSIBILITY_BINS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalMinimaConfig {
    pub schema_version: u32,
    pub n_c: usize,
    pub layers: Vec<usize>,
    #[serde(default = "default_ansatz")]
    pub ansatz: String,
    pub problems: usize,
    pub runs_per_problem: usize,
    pub seed: u64,
    #[serde(default = "default_sweep_alpha")]
    pub alpha: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default = "default_sweep_iters")]
    pub max_iters: usize,
    #[serde(default = "default_sweep_window")]
    pub window: usize,
    #[serde(default = "default_sweep_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotsConfig {
    pub schema_version: u32,
    pub n_c: usize,
    pub problems: usize,
    pub layers: usize,
    #[serde(default = "default_ansatz")]
    pub ansatz: String,
    pub k_grid: Vec<usize>,
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_alpha0")]
    pub alpha0: f64,
    pub seed: u64,
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default = "default_sweep_iters")]
    pub max_iters: usize,
    #[serde(default = "default_sweep_window")]
    pub window: usize,
    #[serde(default = "default_sweep_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressibilityConfig {
    pub schema_version: u32,
    pub n_qubits: Vec<usize>,
    pub layers: Vec<usize>,
    #[serde(default = "default_families")]
    pub ansatz: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    pub seed: u64,
    /// Also report the decoded-bitstring divergence for this many variables.
    #[serde(default)]
    pub classical_n_c: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzCompareConfig {
    pub schema_version: u32,
    pub n_c: usize,
    pub layers: Vec<usize>,
    #[serde(default = "default_families")]
    pub ansatz: Vec<String>,
    pub problems: usize,
    pub runs_per_problem: usize,
    pub seed: u64,
    #[serde(default = "default_sweep_alpha")]
    pub alpha: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default = "default_sweep_iters")]
    pub max_iters: usize,
    #[serde(default = "default_sweep_window")]
    pub window: usize,
    #[serde(default = "default_sweep_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: String,
    pub version: String,
    pub master_seed: u64,
    pub rng: String,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

fn parse_family(s: &str) -> Result<AnsatzFamily> {
    match s.parse()? {
        AnsatzFamily::WarmStart => Err(Error::InvalidConfig("warm-start ansatz is not a sweep family".into())),
        f => Ok(f),
    }
}

fn parse_optimizer(s: &str) -> Result<Optimizer> {
    match s {
        "gd" => Ok(Optimizer::Gd),
        "adam" => Ok(Optimizer::adam()),
        other => Err(Error::InvalidConfig(format!("unknown optimizer {other:?}"))),
    }
}

fn load_config<C: DeserializeOwned>(path: &Path) -> Result<(C, serde_json::Value)> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(Error::InvalidConfig(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
        None => return Err(Error::InvalidConfig("config needs a numeric schema_version".into())),
    }
    Ok((serde_json::from_value(value.clone())?, value))
}

/// CSV with a leading `# master_seed=S` comment.
fn csv_with_seed<R: Serialize>(seed: u64, rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    let body = w.into_inner().map_err(|e| csv_error(e.into_error()))?;
    Ok(format!("# master_seed={seed}\n{}", String::from_utf8(body).expect("csv output is UTF-8")))
}

fn csv_error<E: Into<Box<dyn std::error::Error + Send + Sync>>>(e: E) -> Error {
    Error::Io(std::io::Error::other(e))
}

struct Outputs<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl Outputs<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        write_file(&self.dir.join(name), contents)?;
        self.names.push(name.to_string());
        Ok(())
    }
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let (name, seed, value, outputs) = match a.kind {
        ExperimentKind::LocalMinima => {
            let (c, v) = load_config::<LocalMinimaConfig>(&a.config)?;
            create_dir(&a.out)?;
            let mut out = Outputs { dir: &a.out, names: Vec::new() };
            local_minima_experiment(&c, &mut out)?;
            ("local-minima", c.seed, v, out.names)
        }
        ExperimentKind::Shots => {
            let (c, v) = load_config::<ShotsConfig>(&a.config)?;
            create_dir(&a.out)?;
            let mut out = Outputs { dir: &a.out, names: Vec::new() };
            shots_experiment(&c, &mut out)?;
            ("shots", c.seed, v, out.names)
        }
        ExperimentKind::Expressibility => {
            let (c, v) = load_config::<ExpressibilityConfig>(&a.config)?;
            create_dir(&a.out)?;
            let mut out = Outputs { dir: &a.out, names: Vec::new() };
            expressibility_experiment(&c, &mut out)?;
            ("expressibility", c.seed, v, out.names)
        }
        ExperimentKind::AnsatzCompare => {
            let (c, v) = load_config::<AnsatzCompareConfig>(&a.config)?;
            create_dir(&a.out)?;
            let mut out = Outputs { dir: &a.out, names: Vec::new() };
            ansatz_compare_experiment(&c, &mut out)?;
            ("ansatz-compare", c.seed, v, out.names)
        }
    };
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        experiment: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: seed,
        rng: RNG_NAME.into(),
        config: value,
        outputs,
    };
    write_file(&a.out.join("manifest.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

fn sweep_config(seed: u64, alpha: f64, optimizer: &str, max_iters: usize, window: usize, threshold: f64) -> Result<TrainConfig> {
    let cfg = TrainConfig { alpha, optimizer: parse_optimizer(optimizer)?, max_iters, window, threshold, seed, ..TrainConfig::default() };
    cfg.validate()?;
    Ok(cfg)
}

fn check_sweep_size(n_c: usize, problems: usize, runs: usize) -> Result<()> {
    if n_c < 2 || problems == 0 || runs == 0 {
        return Err(Error::InvalidConfig("need n_c >= 2 and at least one problem and run".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct LocalMinimaSummary {
    n_c: usize,
    layers: usize,
    hits: usize,
    runs: usize,
    probability: f64,
    std_error: f64,
}

fn local_minima_experiment(c: &LocalMinimaConfig, out: &mut Outputs) -> Result<()> {
    check_sweep_size(c.n_c, c.problems, c.runs_per_problem)?;
    let family = parse_family(&c.ansatz)?;
    let cfg = sweep_config(c.seed, c.alpha, &c.optimizer, c.max_iters, c.window, c.threshold)?;
    let problems = random_maxcut_problems(c.n_c, c.problems, c.seed, true)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &layers in &c.layers {
        let spec = AnsatzSpec::new(family, quenc_qubits(c.n_c), layers)?;
        let r = local_minima_runs(&problems, &spec, c.runs_per_problem, &cfg)?;
        let est = GlobalOptEstimate::from_rows(&r);
        eprintln!("L={layers}: p={:.4} ({}/{})", est.probability, est.hits, est.runs);
        summary.push(LocalMinimaSummary { n_c: c.n_c, layers, hits: est.hits, runs: est.runs, probability: est.probability, std_error: est.std_error });
        rows.extend(r);
    }
    out.write("local_minima.csv", &csv_with_seed::<LocalMinimaRow>(c.seed, &rows)?)?;
    out.write("local_minima_summary.csv", &csv_with_seed(c.seed, &summary)?)
}

fn shots_experiment(c: &ShotsConfig, out: &mut Outputs) -> Result<()> {
    check_sweep_size(c.n_c, c.problems, 1)?;
    let problems = random_maxcut_problems(c.n_c, c.problems, c.seed, false)?;
    let cfg = ShotScalingConfig {
        family: parse_family(&c.ansatz)?,
        layers: c.layers,
        k_grid: c.k_grid.clone(),
        alpha_grid: c.alpha_grid.clone(),
        alpha0: c.alpha0,
        base: sweep_config(c.seed, c.alpha0, &c.optimizer, c.max_iters, c.window, c.threshold)?,
    };
    let table = shot_scaling_experiment(&problems, &cfg)?;
    for s in &table.summary {
        eprintln!("k={} alpha={}: relative cost {:.4}", s.k, s.alpha, s.relative_cost);
    }
    out.write("shots.csv", &csv_with_seed(c.seed, &table.rows)?)?;
    out.write("shots_summary.csv", &csv_with_seed(c.seed, &table.summary)?)
}

#[derive(Debug, Clone, Serialize)]
struct ExpressibilityRow {
    ansatz: String,
    n_qubits: usize,
    layers: usize,
    samples: usize,
    bins: usize,
    kl: f64,
    classical_kl: Option<f64>,
}

fn expressibility_experiment(c: &ExpressibilityConfig, out: &mut Outputs) -> Result<()> {
    let families = c.ansatz.iter().map(|s| parse_family(s)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &family in &families {
        let mut per_family = Vec::new();
        for &nq in &c.n_qubits {
            for &layers in &c.layers {
                let spec = AnsatzSpec::new(family, nq, layers)?;
                let report = quantum_expressibility_report(&spec, c.samples, c.bins, c.seed)?;
                let classical_kl = c.classical_n_c.map(|n_c| classical_expressibility(&spec, n_c, c.samples, c.seed)).transpose()?;
                let hist = format!("histogram_{family}_{nq}q_L{layers}.csv");
                out.write(&hist, &format!("# master_seed={}\n{}", c.seed, report.histogram.to_csv()))?;
                let row = ExpressibilityRow { ansatz: family.to_string(), n_qubits: nq, layers, samples: c.samples, bins: c.bins, kl: report.kl, classical_kl };
                eprintln!("{family} {nq}q L={layers}: KL {:.4}", row.kl);
                per_family.push(row.clone());
                rows.push(row);
            }
        }
        let summary = serde_json::json!({ "ansatz": family.to_string(), "master_seed": c.seed, "rows": per_family });
        out.write(&format!("expressibility_{family}.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    }
    out.write("expressibility.csv", &csv_with_seed(c.seed, &rows)?)
}

#[derive(Debug, Clone, Serialize)]
struct AnsatzCompareRow {
    ansatz: String,
    n_qubits: usize,
    layers: usize,
    hits: usize,
    runs: usize,
    probability: f64,
    std_error: f64,
    mean_c_norm: f64,
}

fn ansatz_compare_experiment(c: &AnsatzCompareConfig, out: &mut Outputs) -> Result<()> {
    check_sweep_size(c.n_c, c.problems, c.runs_per_problem)?;
    if c.n_c > EXACT_CAP {
        return Err(Error::SizeCapExceeded { n: c.n_c, cap: EXACT_CAP });
    }
    let families = c.ansatz.iter().map(|s| parse_family(s)).collect::<Result<Vec<_>>>()?;
    let cfg = sweep_config(c.seed, c.alpha, &c.optimizer, c.max_iters, c.window, c.threshold)?;
    let problems = random_maxcut_problems(c.n_c, c.problems, c.seed, true)?;
    let c_rand: Vec<f64> = problems.iter().enumerate().map(|(p, q)| q.random_mean_cost(RANDOM_COST_SAMPLES, derive_seed(derive_seed(c.seed, p as u64), u64::MAX))).collect();
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &family in &families {
        for &layers in &c.layers {
            let spec = AnsatzSpec::new(family, quenc_qubits(c.n_c), layers)?;
            let r = local_minima_runs(&problems, &spec, c.runs_per_problem, &cfg)?;
            let est = GlobalOptEstimate::from_rows(&r);
            let norms = r.iter().map(|row| normalized_cost(row.cost, row.optimum, c_rand[row.problem])).collect::<Result<Vec<f64>>>()?;
            let mean_c_norm = norms.iter().sum::<f64>() / norms.len() as f64;
            eprintln!("{family} L={layers}: p={:.4} c_norm={mean_c_norm:.4}", est.probability);
            rows.push(AnsatzCompareRow {
                ansatz: family.to_string(),
                n_qubits: spec.n_qubits,
                layers,
                hits: est.hits,
                runs: est.runs,
                probability: est.probability,
                std_error: est.std_error,
                mean_c_norm,
            });
            runs.extend(r.into_iter().map(|row| (family.to_string(), row)));
        }
    }
    #[derive(Serialize)]
    struct RunRow {
        ansatz: String,
        #[serde(flatten)]
        row: LocalMinimaRow,
    }
    let runs: Vec<RunRow> = runs.into_iter().map(|(ansatz, row)| RunRow { ansatz, row }).collect();
    out.write("ansatz_compare.csv", &csv_with_seed(c.seed, &rows)?)?;
    out.write("ansatz_compare_runs.csv", &csv_with_seed(c.seed, &runs)?)
}
