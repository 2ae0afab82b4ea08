//! Command implementations behind the `pstcube` binary.
//!
//! Every command writes its data to `--out` (or stdout) as CSV or JSON. JSON
//! documents carry the resolved configuration and a summary next to the data;
//! CSV files get the same metadata in a `<out>.meta.json` sidecar. Feeding
//! either metadata file to `pstcube rerun` repeats the run exactly.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use pstcube::coupler::{
    compile_schedule, cutoff_frequency, effective_coupling_capacitive, effective_coupling_full, CouplerParams, EdgeParams, EdgeState,
    ScheduleOptions,
};
use pstcube::hypergraph::{hamming_distance, induced_subcube, make_hypercube, switch, verify_block_structure, VertexLabel, WeightedGraph};
use pstcube::robustness::{monte_carlo_fidelity, DeviationConfig};
use pstcube::spinsim::{
    build_device_hamiltonian, full_state_transfer_fidelity, log_log_slope, single_excitation_block, sw_scaling_study, DeviceCoupling,
    DeviceSpec, SpinNetworkSpec,
};
use pstcube::walker::{check_unitarity, spectrum_curve, transfer_fidelity, uniform_grid, HamiltonianKind, WalkHamiltonian};

pub const THREADS_ENV: &str = "PSTCUBE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<pstcube::Error> for CliError {
    fn from(e: pstcube::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "pstcube", version, about = "Perfect state transfer on switched hypercube qubit networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    #[command(flatten)]
    Run(Experiment),
    /// Repeat a run from the metadata of an earlier one (a JSON output or a `.meta.json` sidecar).
    Rerun(RerunArgs),
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    /// Find the sub-hypercube in which x and y are antipodal.
    Plan(PlanArgs),
    /// Fidelity curve of the switched transfer x → y.
    Evolve(EvolveArgs),
    /// Effective coupling against qubit-coupler detuning.
    CouplingCurve(CurveArgs),
    /// Coupler frequencies for every edge and the transfer time.
    Schedule(ScheduleArgs),
    /// Monte-Carlo fidelity under coupling errors with certified bounds.
    Robustness(RobustnessArgs),
    /// Full-register checks of the spin and device models.
    SpinCheck(SpinCheckArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RerunArgs {
    pub metadata: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Adjacency,
    Laplacian,
}

impl From<Model> for HamiltonianKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Adjacency => HamiltonianKind::Adjacency,
            Model::Laplacian => HamiltonianKind::Laplacian,
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    /// Output file (stdout when absent).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Hypercube dimension and endpoints; labels are bit strings or integers.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
}

impl Pair {
    fn labels(&self) -> CliResult<(VertexLabel, VertexLabel)> {
        Ok((VertexLabel::parse(&self.x, self.n)?, VertexLabel::parse(&self.y, self.n)?))
    }

    fn canonicalize(&mut self) -> CliResult<()> {
        let (x, y) = self.labels()?;
        self.x = x.to_string();
        self.y = y.to_string();
        Ok(())
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: Pair,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: Pair,
    #[arg(long, value_enum, default_value_t = Model::Adjacency)]
    pub model: Model,
    #[arg(long, default_value_t = PI)]
    pub t_max: f64,
    #[arg(long, default_value_t = 200)]
    pub t_steps: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveArgs {
    /// Coupler parameter file (JSON); the reference circuit when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = -2.5, allow_negative_numbers = true)]
    pub delta_min: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: Pair,
    /// Coupler parameter file (JSON); the reference circuit when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Coupler frequency for the On edges (GHz).
    #[arg(long)]
    pub omega_on: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub spread_tolerance: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: Pair,
    /// Half-width of the relative On-edge coupling error.
    #[arg(long, default_value_t = 0.005)]
    pub delta_rel: f64,
    /// Half-width of the relative residual Off-edge coupling.
    #[arg(long, default_value_t = 0.0)]
    pub leakage: f64,
    /// On-edge coupling; the transfer time scales as 1/|j_on|.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub j_on: f64,
    /// Evaluation time; π/(2|j_on|) when absent.
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinCheckArgs {
    /// Write the XY Hamiltonian of Q_n as sparse triplets to this file.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

impl Experiment {
    pub fn output(&self) -> &Output {
        match self {
            Experiment::Plan(a) => &a.output,
            Experiment::Evolve(a) => &a.output,
            Experiment::CouplingCurve(a) => &a.output,
            Experiment::Schedule(a) => &a.output,
            Experiment::Robustness(a) => &a.output,
            Experiment::SpinCheck(a) => &a.output,
        }
    }

    fn output_mut(&mut self) -> &mut Output {
        match self {
            Experiment::Plan(a) => &mut a.output,
            Experiment::Evolve(a) => &mut a.output,
            Experiment::CouplingCurve(a) => &mut a.output,
            Experiment::Schedule(a) => &mut a.output,
            Experiment::Robustness(a) => &mut a.output,
            Experiment::SpinCheck(a) => &mut a.output,
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Experiment::Plan(_) | Experiment::Schedule(_) | Experiment::SpinCheck(_) => Format::Json,
            Experiment::Evolve(_) | Experiment::CouplingCurve(_) | Experiment::Robustness(_) => Format::Csv,
        }
    }

    /// Fills in defaults and canonical labels so the echoed config is complete.
    pub fn resolve(&mut self) -> CliResult<()> {
        let format = self.output().format.unwrap_or(self.default_format());
        self.output_mut().format = Some(format);
        match self {
            Experiment::Plan(a) => a.pair.canonicalize(),
            Experiment::Evolve(a) => a.pair.canonicalize(),
            Experiment::Schedule(a) => a.pair.canonicalize(),
            Experiment::Robustness(a) => {
                a.pair.canonicalize()?;
                if a.j_on == 0.0 {
                    return Err(CliError::Validation("j_on must be nonzero".into()));
                }
                a.t0.get_or_insert(FRAC_PI_2 / a.j_on.abs());
                Ok(())
            }
            Experiment::CouplingCurve(_) | Experiment::SpinCheck(_) => Ok(()),
        }
    }
}

/// Result of a command before serialization.
struct Outcome {
    summary: Value,
    data: Value,
    csv: String,
    /// Human-readable lines for stderr.
    notes: Vec<String>,
    /// Reported after the output is written.
    failure: Option<CliError>,
}

pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Validation(format!("cannot configure thread pool: {e}")))
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Run(experiment) => run_experiment(experiment),
        Command::Rerun(args) => {
            let mut experiment = load_metadata(&args.metadata)?;
            experiment.output_mut().out = args.out;
            run_experiment(experiment)
        }
    }
}

/// Reads the configuration echoed by an earlier run.
pub fn load_metadata(path: &Path) -> CliResult<Experiment> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let config = doc.get("config").cloned().ok_or_else(|| CliError::Validation(format!("{}: no \"config\" entry", path.display())))?;
    serde_json::from_value(config).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn run_experiment(mut experiment: Experiment) -> CliResult<()> {
    experiment.resolve()?;
    let outcome = match &experiment {
        Experiment::Plan(a) => plan(a)?,
        Experiment::Evolve(a) => evolve(a)?,
        Experiment::CouplingCurve(a) => coupling_curve(a)?,
        Experiment::Schedule(a) => schedule(a)?,
        Experiment::Robustness(a) => robustness(a)?,
        Experiment::SpinCheck(a) => spin_check(a)?,
    };
    emit(&experiment, outcome)
}

fn metadata(experiment: &Experiment, summary: &Value) -> Value {
    json!({
        "tool": "pstcube",
        "version": env!("CARGO_PKG_VERSION"),
        "config": experiment,
        "summary": summary,
    })
}

fn emit(experiment: &Experiment, outcome: Outcome) -> CliResult<()> {
    let output = experiment.output();
    let mut meta = metadata(experiment, &outcome.summary);
    let body = match output.format.unwrap_or(Format::Json) {
        Format::Json => {
            meta["data"] = outcome.data;
            to_pretty(&meta)
        }
        Format::Csv => {
            if let Some(out) = &output.out {
                let sidecar = sidecar_path(out);
                fs::write(&sidecar, to_pretty(&meta)).map_err(|e| io_error(&sidecar, e))?;
            }
            outcome.csv
        }
    };
    match &output.out {
        Some(path) => fs::write(path, body).map_err(|e| io_error(path, e))?,
        None => io::stdout().write_all(body.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))?,
    }
    for line in &outcome.notes {
        eprintln!("{line}");
    }
    outcome.failure.map_or(Ok(()), Err)
}

fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// `<out>.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Full double precision: 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn plan(a: &PlanArgs) -> CliResult<Outcome> {
    let (x, y) = a.pair.labels()?;
    let spec = induced_subcube(&x, &y)?;
    let (cx, cy) = (spec.compress(x.index()), spec.compress(y.index()));
    let antipodal = cx ^ cy == (1usize << spec.d) - 1;

    let vertices: Vec<String> = spec.vertices.iter().map(|v| v.to_string()).collect();
    let summary = json!({
        "d": spec.d,
        "hamming_distance": hamming_distance(&x, &y)?,
        "fixed_positions": spec.fixed_positions,
        "free_positions": spec.free_positions,
        "vertices": vertices,
        "antipodal": antipodal,
    });
    let mut csv = String::from("vertex,index,subcube_index\n");
    for v in &spec.vertices {
        csv += &format!("{v},{},{}\n", v.index(), spec.compress(v.index()));
    }
    let fixed: Vec<String> = spec.fixed_positions.iter().map(|(p, b)| format!("{p}={}", u8::from(*b))).collect();
    let notes = vec![
        format!("d = {}", spec.d),
        format!("fixed positions: {}", if fixed.is_empty() { "none".into() } else { fixed.join(" ") }),
        format!("free positions: {:?}", spec.free_positions),
        format!("vertices: {}", vertices.join(" ")),
        format!("{x} and {y} are {}antipodal in Q_{}", if antipodal { "" } else { "NOT " }, spec.d),
    ];
    let failure = (!antipodal).then(|| CliError::Numerical("planned subcube does not make the endpoints antipodal".into()));
    Ok(Outcome { summary, data: serde_json::to_value(&spec).expect("spec serializes"), csv, notes, failure })
}

fn evolve(a: &EvolveArgs) -> CliResult<Outcome> {
    let (x, y) = a.pair.labels()?;
    if !(a.t_max.is_finite() && a.t_max >= 0.0) {
        return Err(CliError::Validation(format!("t-max must be finite and non-negative, got {}", a.t_max)));
    }
    let cube = make_hypercube(a.pair.n)?;
    let spec = induced_subcube(&x, &y)?;
    let switched = switch(&cube, &spec)?;
    let h = WalkHamiltonian::new(&switched, a.model.into());
    let spectrum = h.spectrum()?;
    let defect = check_unitarity(&spectrum)?;
    let grid = uniform_grid(a.t_max, a.t_steps);
    let curve = spectrum_curve(&spectrum, x.index(), y.index(), &grid)?;
    let at_t0 = spectrum.amplitude(FRAC_PI_2, y.index(), x.index());
    let peak = curve.iter().copied().fold(curve[0], |best, r| if r.fidelity > best.fidelity { r } else { best });

    let summary = json!({
        "d": spec.d,
        "t0": FRAC_PI_2,
        "fidelity_at_t0": at_t0.norm(),
        "amplitude_at_t0": [at_t0.re, at_t0.im],
        "peak_fidelity": peak.fidelity,
        "peak_time": peak.time,
        "orthonormality_defect": defect,
        "block_structure": verify_block_structure(&switched, &spec),
    });
    let mut csv = String::from("t,amplitude_re,amplitude_im,fidelity\n");
    for r in &curve {
        csv += &format!("{},{},{},{}\n", num(r.time), num(r.amplitude.re), num(r.amplitude.im), num(r.fidelity));
    }
    let notes = vec![format!("fidelity {x} -> {y} at t0 = pi/2: {:.12}", at_t0.norm())];
    Ok(Outcome { summary, data: serde_json::to_value(&curve).expect("curve serializes"), csv, notes, failure: None })
}

fn read_params(path: Option<&Path>) -> CliResult<EdgeParams> {
    let Some(path) = path else {
        return Ok(EdgeParams::Uniform(CouplerParams::reference()));
    };
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let params: EdgeParams = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    params.validate()?;
    Ok(params)
}

/// Linearly interpolated zero crossings of a sampled curve.
fn zero_crossings(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..xs.len() {
        if ys[k] == 0.0 {
            out.push(xs[k]);
        } else if k + 1 < xs.len() && ys[k + 1] != 0.0 && ys[k].signum() != ys[k + 1].signum() {
            out.push(xs[k] - ys[k] * (xs[k + 1] - xs[k]) / (ys[k + 1] - ys[k]));
        }
    }
    out
}

fn coupling_curve(a: &CurveArgs) -> CliResult<Outcome> {
    if a.points < 2 {
        return Err(CliError::Validation("need at least 2 points".into()));
    }
    if !(a.delta_min < a.delta_max) {
        return Err(CliError::Validation(format!("empty detuning range [{}, {}]", a.delta_min, a.delta_max)));
    }
    if a.delta_min <= 0.0 && a.delta_max >= 0.0 {
        return Err(CliError::Validation("detuning range crosses the qubit-coupler resonance".into()));
    }
    let base = match read_params(a.params.as_deref())? {
        EdgeParams::Uniform(p) => p,
        EdgeParams::PerEdge { default, .. } => default,
    };
    let omega = base.omega_i;
    let equal = base.omega_i == base.omega_j;

    let deltas: Vec<f64> = (0..a.points).map(|k| a.delta_min + (a.delta_max - a.delta_min) * k as f64 / (a.points - 1) as f64).collect();
    let mut js = Vec::with_capacity(a.points);
    let mut csv = String::from("delta,omega_c,J,J_capacitive\n");
    for &delta in &deltas {
        let p = base.with_omega_c(omega - delta);
        p.validate()?;
        let j = effective_coupling_full(&p)?;
        let cap = if equal { num(effective_coupling_capacitive(&p)?) } else { String::new() };
        csv += &format!("{},{},{},{cap}\n", num(delta), num(p.omega_c), num(j));
        js.push(j);
    }
    let crossings = zero_crossings(&deltas, &js);
    let cutoff = if equal { cutoff_frequency(&base).ok() } else { None };

    let summary = json!({
        "params": base,
        "eta": base.eta(),
        "cutoff": cutoff,
        "crossings": crossings,
    });
    let data: Vec<Value> = deltas.iter().zip(&js).map(|(d, j)| json!({"delta": d, "omega_c": omega - d, "J": j})).collect();
    let notes = match crossings.as_slice() {
        [] => vec!["no zero crossing in range".into()],
        c => c.iter().map(|d| format!("J = 0 at delta = {d:.6} GHz (omega_c = {:.6} GHz)", omega - d)).collect(),
    };
    Ok(Outcome { summary, data: Value::Array(data), csv, notes, failure: None })
}

fn schedule(a: &ScheduleArgs) -> CliResult<Outcome> {
    let (x, y) = a.pair.labels()?;
    let params = read_params(a.params.as_deref())?;
    let options = ScheduleOptions { spread_tolerance: a.spread_tolerance };
    let s = compile_schedule(a.pair.n, &x, &y, &params, a.omega_on, &options)?;
    let (on, off) = (s.count(EdgeState::On), s.count(EdgeState::Off));
    let summary = json!({
        "on": on,
        "off": off,
        "j_on": s.j_on,
        "j_on_spread": s.j_on_spread,
        "t0_ns": s.t0_ns,
        "warnings": s.warnings,
    });
    let mut csv = String::from("i,j,state,omega_c,J,g_over_delta\n");
    for e in &s.edges {
        let state = if e.state == EdgeState::On { "on" } else { "off" };
        csv += &format!("{},{},{state},{},{},{}\n", e.i, e.j, num(e.omega_c), num(e.coupling), num(e.g_over_delta));
    }
    let mut notes = vec![format!("{on} on, {off} off, J_on = {:.6e} GHz, t0 = {:.4} ns", s.j_on, s.t0_ns)];
    notes.extend(s.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(Outcome { summary, data: serde_json::to_value(&s).expect("schedule serializes"), csv, notes, failure: None })
}

fn robustness(a: &RobustnessArgs) -> CliResult<Outcome> {
    let (x, y) = a.pair.labels()?;
    let t0 = a.t0.expect("resolved");
    let unit = make_hypercube(a.pair.n)?;
    let ambient = WeightedGraph::from_edges(unit.num_vertices(), unit.edges().map(|(i, j, _)| (i, j, a.j_on)))?;
    let spec = induced_subcube(&x, &y)?;
    let cfg = DeviationConfig { delta_rel: a.delta_rel, j_on: a.j_on, leakage: a.leakage };
    let report = monte_carlo_fidelity(&ambient, &spec, &cfg, t0, a.trials, a.seed)?;

    let mut summary = serde_json::to_value(&report).expect("report serializes");
    summary.as_object_mut().expect("object").remove("per_trial");
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    let notes = vec![format!(
        "{} trials: fidelity min {:.9} mean {:.9}; bounds spectral {:.6} frobenius {:.6}",
        report.trials, report.min_fidelity, report.mean_fidelity, report.bound_spectral, report.bound_frobenius
    )];
    let failure = (report.soundness_violations > 0)
        .then(|| CliError::Numerical(format!("{} trials fell below the certified bound", report.soundness_violations)));
    Ok(Outcome {
        summary,
        data: serde_json::to_value(&report.per_trial).expect("trials serialize"),
        csv: String::from_utf8(csv).expect("CSV is ASCII"),
        notes,
        failure,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    value: f64,
    expected: String,
    pass: bool,
}

fn at_most(name: String, value: f64, limit: f64) -> Check {
    let expected = if limit == 0.0 { "== 0".into() } else { format!("<= {limit:e}") };
    Check { name, value, expected, pass: value <= limit }
}

const SW_RATIOS: [f64; 3] = [0.025, 0.05, 0.1];

fn spin_check(a: &SpinCheckArgs) -> CliResult<Outcome> {
    let graphs = [
        ("K2", make_hypercube(1)?),
        ("P3", WeightedGraph::path(3)),
        ("Q2", make_hypercube(2)?),
        ("Q3", make_hypercube(3)?),
    ];
    let mut checks = Vec::new();
    for (name, g) in &graphs {
        let xy = SpinNetworkSpec::xy(g).hamiltonian()?;
        let block = single_excitation_block(&xy)?;
        checks.push(at_most(format!("xy_block_minus_adjacency/{name}"), (block - g.adjacency()).amax(), 0.0));
        checks.push(at_most(format!("xy_excitation_commutator/{name}"), xy.excitation_commutator_norm(), 0.0));

        let heis = SpinNetworkSpec::heisenberg(g)?;
        let block = single_excitation_block(&heis.hamiltonian()?)?;
        let diff = block - g.laplacian();
        let offset = diff.trace() / g.num_vertices() as f64;
        let residual = diff.map_with_location(|i, j, v| if i == j { v - offset } else { v }).amax();
        checks.push(at_most(format!("heisenberg_block_minus_shifted_laplacian/{name}"), residual, 1e-12));
    }

    let q2 = &graphs[2].1;
    let full = full_state_transfer_fidelity(&SpinNetworkSpec::xy(q2), PI, 0.0, 0, 3, FRAC_PI_2)?;
    checks.push(at_most("full_register_infidelity/Q2".into(), 1.0 - full.fidelity, 1e-9));
    let p3 = &graphs[1].1;
    let t = PI / SQRT_2;
    let full = full_state_transfer_fidelity(&SpinNetworkSpec::xy(p3), PI, 0.0, 0, 2, t)?;
    let walk = transfer_fidelity(&WalkHamiltonian::adjacency(p3), t, 0, 2)?;
    checks.push(at_most("full_register_vs_walker/P3".into(), (full.fidelity - walk.fidelity).abs(), 1e-9));

    let dev = DeviceSpec::uniform(q2, CouplerParams::reference())?;
    let rwa = build_device_hamiltonian(&dev, DeviceCoupling::RotatingWave)?;
    checks.push(at_most("device_rwa_excitation_commutator/Q2".into(), rwa.excitation_commutator_norm(), 0.0));
    let raw = build_device_hamiltonian(&dev, DeviceCoupling::Full)?.excitation_commutator_norm();
    checks.push(Check { name: "device_counter_rotating_terms/Q2".into(), value: raw, expected: "> 0".into(), pass: raw > 0.0 });

    let reference = CouplerParams::reference();
    let points = sw_scaling_study(reference.omega_i, reference.omega_c, &SW_RATIOS)?;
    let slope = log_log_slope(&points);

    if let Some(path) = &a.dump {
        let h = SpinNetworkSpec::xy(&make_hypercube(a.n)?).hamiltonian()?;
        let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
        h.write_triplets(io::BufWriter::new(file)).map_err(|e| io_error(path, e))?;
    }

    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let summary = json!({
        "passed": checks.len() - failed.len(),
        "failed": failed,
        "sw_scaling": { "points": points, "log_log_slope": slope },
    });
    let mut csv = String::from("name,value,expected,pass\n");
    for c in &checks {
        csv += &format!("{},{},{},{}\n", c.name, num(c.value), c.expected, c.pass);
    }
    let mut notes: Vec<String> = checks.iter().map(|c| format!("{} {} = {:.3e}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value)).collect();
    notes.push(format!("effective-model error vs g: log-log slope {slope:.3}"));
    let failure = (!failed.is_empty()).then(|| CliError::Numerical(format!("spin checks failed: {}", failed.join(", "))));
    Ok(Outcome { summary, data: serde_json::to_value(&checks).expect("checks serialize"), csv, notes, failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossings_interpolate() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(zero_crossings(&xs, &[1.0, -1.0, -2.0, -3.0]), vec![0.5]);
        assert_eq!(zero_crossings(&xs, &[1.0, 0.0, -2.0, -3.0]), vec![1.0]);
        assert!(zero_crossings(&xs, &[1.0, 2.0, 3.0, 4.0]).is_empty());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/curve.csv")), PathBuf::from("out/curve.csv.meta.json"));
    }

    #[test]
    fn numbers_carry_17_digits() {
        assert_eq!(num(FRAC_PI_2), "1.5707963267948966e0");
        assert_eq!(num(FRAC_PI_2).parse::<f64>().unwrap(), FRAC_PI_2);
    }

    #[test]
    fn resolve_fills_defaults() {
        let cli = Cli::try_parse_from(["pstcube", "robustness", "--n", "4", "--x", "0", "--y", "5", "--j-on", "2"]).unwrap();
        let Command::Run(mut e) = cli.command else { panic!() };
        e.resolve().unwrap();
        let Experiment::Robustness(a) = &e else { panic!() };
        assert_eq!((a.pair.x.as_str(), a.pair.y.as_str()), ("0000", "0101"));
        assert_eq!(a.t0, Some(FRAC_PI_2 / 2.0));
        assert_eq!(a.output.format, Some(Format::Csv));
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(v["command"], "robustness");
        assert!(v.get("out").is_none());
        assert_eq!(serde_json::from_value::<Experiment>(v).unwrap(), e);
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(CliError::from(pstcube::Error::DegeneratePair).exit_code(), 2);
        assert_eq!(CliError::from(pstcube::Error::Numerical("x".into())).exit_code(), 3);
    }
}
