//! Command implementations for the `gridloss` binary.
//!
//! Every command is deterministic in its arguments and seed. Tabular output is
//! CSV with a leading `#` comment line that echoes the full configuration and
//! the crate version; when `--out` is given a JSON sidecar with the same
//! configuration and a run summary is written next to it.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridloss::coupled::{gamma_curve, GammaCurve};
use gridloss::dynamics::{assemble_coupled, assemble_decoupled, assemble_full, NodeParams};
use gridloss::h2::{
    complete_graph_asymptote, complete_graph_bounds, h2_norm_analytic, h2_norm_gramian, path_graph_bound,
};
use gridloss::network::{complete_graph, path_graph, NetworkFile, Susceptances};
use gridloss::sim::{simulate, SimConfig, Trajectory};
use gridloss::spectral::certify_stability;
use gridloss::{BoundsReport, H2Report, InverterParams, LaplacianKind, NetworkGraph, SpectrumReport};
use serde::Serialize;
use serde_json::json;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gridloss::Error),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "gridloss", version, about = "Transient power losses in inverter microgrids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum, H2 norms and bounds for a network file.
    Analyze(AnalyzeArgs),
    /// Exact norm, bounds and asymptote across network sizes.
    ScalingSweep(ScalingArgs),
    /// Noise-free relaxation on a complete and a line graph from the same disturbance.
    Transient(TransientArgs),
    /// Relative norm error of the decoupled model across coupling ratios.
    AlphaSweep(AlphaArgs),
    /// Dense matrices of an assembled model as JSON.
    DumpModel(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Complete,
    Line,
}

/// Inclusive integer range `start:end[:step]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntRange {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl FromStr for IntRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("bad integer {p:?} in range: {e}"));
        let r = match parts.as_slice() {
            [a, b] => IntRange { start: num(a)?, end: num(b)?, step: 1 },
            [a, b, c] => IntRange { start: num(a)?, end: num(b)?, step: num(c)? },
            _ => return Err(format!("expected start:end[:step], got {s:?}")),
        };
        if r.step == 0 || r.end < r.start {
            return Err(format!("empty or invalid range {s:?}"));
        }
        Ok(r)
    }
}

impl IntRange {
    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.step).collect()
    }
}

/// `count` evenly spaced points `start:end:count`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloatRange {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl FromStr for FloatRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("expected start:end:count, got {s:?}"));
        };
        let f = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}"));
        let count = c.trim().parse::<usize>().map_err(|e| format!("bad count {c:?}: {e}"))?;
        let r = FloatRange { start: f(a)?, end: f(b)?, count };
        if count < 2 || r.start.is_nan() || r.end.is_nan() || r.end <= r.start {
            return Err(format!("need count >= 2 and end > start, got {s:?}"));
        }
        Ok(r)
    }
}

impl FloatRange {
    pub fn values(&self) -> Vec<f64> {
        let h = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.end } else { self.start + h * i as f64 })
            .collect()
    }
}

/// Droop and filter parameters shared by the sweep commands. Unset values
/// fall back to the command's reference parameter set.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ParamArgs {
    #[arg(long)]
    pub kp: Option<f64>,
    #[arg(long)]
    pub kq: Option<f64>,
    #[arg(long)]
    pub taup: Option<f64>,
    #[arg(long)]
    pub tauq: Option<f64>,
    /// Voltage-loop constant c_Q = 1 + 2 k_Q b̄.
    #[arg(long, conflicts_with = "shunt_b")]
    pub cq: Option<f64>,
    /// Uniform shunt susceptance b̄; sets c_Q = 1 + 2 k_Q b̄.
    #[arg(long)]
    pub shunt_b: Option<f64>,
    /// Use the reference parameter set and reject any parameter flag.
    #[arg(long, conflicts_with_all = ["kp", "kq", "taup", "tauq", "cq", "shunt_b"])]
    pub defaults: bool,
}

impl ParamArgs {
    fn resolve(&self, base: InverterParams, alpha: f64) -> CliResult<InverterParams> {
        let k_q = self.kq.unwrap_or(base.k_q);
        let c_q = match (self.cq, self.shunt_b) {
            (Some(c), _) => c,
            (None, Some(b)) => 1.0 + 2.0 * k_q * b,
            (None, None) => base.c_q,
        };
        Ok(InverterParams::new(
            self.kp.unwrap_or(base.k_p),
            k_q,
            self.taup.unwrap_or(base.tau_p),
            self.tauq.unwrap_or(base.tau_q),
            c_q,
            alpha,
        )?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Network file (JSON, 1-based node indices).
    pub network: PathBuf,
    #[arg(long)]
    pub kp: Option<f64>,
    #[arg(long)]
    pub kq: Option<f64>,
    #[arg(long)]
    pub taup: Option<f64>,
    #[arg(long)]
    pub tauq: Option<f64>,
    /// Override every node's shunt susceptance.
    #[arg(long)]
    pub shunt_b: Option<f64>,
    /// Write the JSON record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long, value_enum, default_value = "complete")]
    pub topology: Topology,
    #[arg(long, default_value = "2:100")]
    pub n_range: IntRange,
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Constant line susceptance; random on (0.5, 3.25) when absent.
    #[arg(long)]
    pub b: Option<f64>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, env = "GRIDLOSS_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransientArgs {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Line susceptance on both graphs; random on (0.5, 3.25) with `--random-b`.
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long)]
    pub random_b: bool,
    /// Initial phase deviation at node 1.
    #[arg(long, default_value_t = 0.1)]
    pub delta0: f64,
    /// Initial voltage deviation at node 1.
    #[arg(long, default_value_t = 0.05)]
    pub v0: f64,
    #[arg(long, default_value_t = 20.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// White-noise intensity on every channel (0 for a pure relaxation).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 10)]
    pub record_stride: usize,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, env = "GRIDLOSS_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlphaArgs {
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value = "0.01:0.5:50")]
    pub alpha_range: FloatRange,
    /// Line susceptance (reactance 0.2 by default).
    #[arg(long, default_value_t = 5.0)]
    pub b: f64,
    /// Restrict to one topology; both by default.
    #[arg(long, value_enum)]
    pub topology: Option<Topology>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, env = "GRIDLOSS_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ModelChoice {
    Full,
    Decoupled,
    Coupled,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DumpArgs {
    pub network: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    pub model: ModelChoice,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::ScalingSweep(a) => cmd_scaling_sweep(&a),
        Command::Transient(a) => cmd_transient(&a),
        Command::AlphaSweep(a) => cmd_alpha_sweep(&a),
        Command::DumpModel(a) => cmd_dump_model(&a),
    }
}

fn comment_line(command: &str, config: &impl Serialize) -> CliResult<String> {
    Ok(format!("# gridloss {VERSION} {command} {}\n", serde_json::to_string(config)?))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write `comment + csv` to `out` (or stdout) and the sidecar next to `out`.
fn emit_table(
    command: &str,
    config: &impl Serialize,
    csv_body: &[u8],
    out: Option<&Path>,
    summary: serde_json::Value,
) -> CliResult<()> {
    let comment = comment_line(command, config)?;
    match out {
        Some(path) => {
            let mut f = fs::File::create(path)?;
            f.write_all(comment.as_bytes())?;
            f.write_all(csv_body)?;
            write_sidecar(&sidecar_path(path), command, config, summary)?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(comment.as_bytes())?;
            stdout.write_all(csv_body)?;
        }
    }
    Ok(())
}

fn write_sidecar(path: &Path, command: &str, config: &impl Serialize, summary: serde_json::Value) -> CliResult<()> {
    let doc = json!({ "version": VERSION, "command": command, "config": config, "summary": summary });
    fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Serialize)]
pub struct AnalyzeRecord {
    pub n_nodes: usize,
    pub topology: &'static str,
    pub uniform: bool,
    pub spectrum: SpectrumReport,
    /// Gramian norm of the full model (general `L_G`, heterogeneous parameters).
    pub h2_gramian_full: H2Report,
    /// Closed form, when every inverter and line ratio is identical.
    pub h2_analytic: Option<H2Report>,
    /// Gramian norm of the decoupled model, for comparison with the closed form.
    pub h2_gramian_decoupled: Option<H2Report>,
    pub bounds: Option<BoundsReport>,
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<AnalyzeRecord> {
    let file = NetworkFile::load(&args.network)?;
    let mut graph = file.graph.clone();
    if let Some(b) = args.shunt_b {
        graph = graph.with_uniform_shunt(b)?;
    }
    if !graph.is_connected() {
        return Err(gridloss::Error::Disconnected.into());
    }
    let n = graph.n_nodes();
    let base = InverterParams::scaling_defaults();
    let mut node = match &file.params {
        Some(p) => NodeParams {
            k_p: p.kp.expand(n, "kp")?,
            k_q: p.kq.expand(n, "kq")?,
            tau_p: p.taup.expand(n, "taup")?,
            tau_q: p.tauq.expand(n, "tauq")?,
        },
        None => NodeParams::uniform(&base, n),
    };
    for (flag, field) in [
        (args.kp, &mut node.k_p),
        (args.kq, &mut node.k_q),
        (args.taup, &mut node.tau_p),
        (args.tauq, &mut node.tau_q),
    ] {
        if let Some(v) = flag {
            field.iter_mut().for_each(|x| *x = v);
        }
    }

    let full = assemble_full(&graph, &node)?;
    let spectrum = certify_stability(&full)?;
    let h2_gramian_full = h2_norm_gramian(&full)?;

    let uniform = match (node.as_uniform(), graph.uniform_ratio(), graph.uniform_shunt()) {
        (Some((kp, kq, tp, tq)), Some(alpha), Some(shunt)) => InverterParams::from_shunt(kp, kq, tp, tq, shunt, alpha).ok(),
        _ => None,
    };
    let topology = if graph.is_complete() {
        "complete"
    } else if graph.is_path() {
        "path"
    } else {
        "other"
    };
    let (h2_analytic, h2_gramian_decoupled, bounds) = match &uniform {
        Some(p) => {
            let eigs = graph.laplacian(LaplacianKind::Susceptance).eigenvalues();
            let analytic = h2_norm_analytic(p, &eigs)?;
            let gram = h2_norm_gramian(&assemble_decoupled(&graph, p)?)?;
            let bounds = match topology {
                "complete" => Some(complete_graph_bounds(p, &graph)?),
                "path" => Some(path_graph_bound(p, &graph)?),
                _ => None,
            };
            (Some(analytic), Some(gram), bounds)
        }
        None => (None, None, None),
    };
    Ok(AnalyzeRecord {
        n_nodes: n,
        topology,
        uniform: uniform.is_some(),
        spectrum,
        h2_gramian_full,
        h2_analytic,
        h2_gramian_decoupled,
        bounds,
    })
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let record = analyze(args)?;
    let doc = json!({ "version": VERSION, "config": args, "result": record });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &args.out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn build_graph(topology: Topology, n: usize, s: Susceptances, alpha: f64) -> gridloss::Result<NetworkGraph> {
    match topology {
        Topology::Complete => complete_graph(n, s, alpha),
        Topology::Line => path_graph(n, s, alpha),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub h2_exact: f64,
    pub h2_bound_upper: f64,
    pub h2_bound_lower: Option<f64>,
    pub h2_asymptote: Option<f64>,
}

pub fn scaling_rows(args: &ScalingArgs) -> CliResult<Vec<ScalingRow>> {
    let params = args.params.resolve(InverterParams::scaling_defaults(), args.alpha)?;
    let sizes = args.n_range.values();
    if sizes.first().is_some_and(|&n| n < 2) {
        return Err(CliError::Usage("network sizes start at 2".into()));
    }
    let rows = gridloss::parallel::map(&sizes, |&n| -> gridloss::Result<ScalingRow> {
        let s = match args.b {
            Some(b) => Susceptances::Constant(b),
            None => Susceptances::fig_default(args.seed.wrapping_add(n as u64)),
        };
        let g = build_graph(args.topology, n, s, params.alpha)?;
        let eigs = g.laplacian(LaplacianKind::Susceptance).eigenvalues();
        let exact = h2_norm_analytic(&params, &eigs)?.total;
        Ok(match args.topology {
            Topology::Complete => {
                let b = complete_graph_bounds(&params, &g)?;
                ScalingRow {
                    n,
                    h2_exact: exact,
                    h2_bound_upper: b.upper,
                    h2_bound_lower: Some(b.lower),
                    h2_asymptote: Some(complete_graph_asymptote(&params, n)),
                }
            }
            Topology::Line => ScalingRow {
                n,
                h2_exact: exact,
                h2_bound_upper: path_graph_bound(&params, &g)?.upper,
                h2_bound_lower: None,
                h2_asymptote: None,
            },
        })
    });
    Ok(rows.into_iter().collect::<gridloss::Result<Vec<_>>>()?)
}

pub fn cmd_scaling_sweep(args: &ScalingArgs) -> CliResult<()> {
    let rows = scaling_rows(args)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["N", "h2_exact", "h2_bound_upper", "h2_bound_lower", "h2_asymptote"])?;
    for r in &rows {
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        w.write_record([r.n.to_string(), num(r.h2_exact), num(r.h2_bound_upper), opt(r.h2_bound_lower), opt(r.h2_asymptote)])?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    let sandwiched = rows
        .iter()
        .all(|r| r.h2_exact <= r.h2_bound_upper * (1.0 + 1e-12) && r.h2_bound_lower.is_none_or(|l| l <= r.h2_exact * (1.0 + 1e-12)));
    emit_table("scaling-sweep", args, &body, args.out.as_deref(), json!({ "rows": rows.len(), "bounds_hold": sandwiched }))
}

#[derive(Debug, Serialize)]
pub struct TransientSummary {
    pub envelope_time_complete: f64,
    pub envelope_time_line: f64,
    pub total_loss_complete: f64,
    pub total_loss_line: f64,
}

pub fn transient_runs(args: &TransientArgs) -> CliResult<(Trajectory, Trajectory)> {
    let params = args.params.resolve(InverterParams::scaling_defaults(), args.alpha)?;
    let n = args.n;
    if n < 2 {
        return Err(CliError::Usage("transient needs at least 2 nodes".into()));
    }
    let s = if args.random_b { Susceptances::fig_default(args.seed) } else { Susceptances::Constant(args.b) };
    let mut x0 = vec![0.0; 3 * n];
    x0[0] = args.delta0;
    x0[2 * n] = args.v0;
    let config = SimConfig {
        dt: args.dt,
        horizon: args.horizon,
        burn_in: 0.0,
        seed: args.seed,
        noise_intensity: gridloss::sim::NoiseIntensity::Uniform(args.noise),
        initial_state: Some(x0),
        record_stride: args.record_stride,
    };
    let topologies = [Topology::Complete, Topology::Line];
    let runs = gridloss::parallel::map(&topologies, |&t| -> gridloss::Result<Trajectory> {
        let g = build_graph(t, n, s, params.alpha)?;
        simulate(&assemble_decoupled(&g, &params)?, &config)
    });
    let mut it = runs.into_iter();
    let complete = it.next().unwrap()?;
    let line = it.next().unwrap()?;
    Ok((complete, line))
}

pub fn transient_summary(complete: &Trajectory, line: &Trajectory) -> TransientSummary {
    TransientSummary {
        envelope_time_complete: complete.envelope_time(0.05),
        envelope_time_line: line.envelope_time(0.05),
        total_loss_complete: complete.total_loss(),
        total_loss_line: line.total_loss(),
    }
}

pub fn cmd_transient(args: &TransientArgs) -> CliResult<()> {
    let (complete, line) = transient_runs(args)?;
    let cc = complete.cumulative_loss();
    let cl = line.cumulative_loss();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "loss_complete", "cum_loss_complete", "loss_line", "cum_loss_line"])?;
    for i in 0..complete.times.len() {
        w.write_record([
            num(complete.times[i]),
            num(complete.loss_series[i]),
            num(cc[i]),
            num(line.loss_series[i]),
            num(cl[i]),
        ])?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    let summary = serde_json::to_value(transient_summary(&complete, &line))?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            emit_table("transient", args, &body, Some(&dir.join("transient.csv")), summary)?;
            for (name, t) in [("trajectory_complete.csv", &complete), ("trajectory_line.csv", &line)] {
                let mut f = fs::File::create(dir.join(name))?;
                f.write_all(comment_line("transient", args)?.as_bytes())?;
                t.write_csv(&mut f)?;
            }
            Ok(())
        }
        None => emit_table("transient", args, &body, None, summary),
    }
}

#[derive(Debug, Serialize)]
pub struct AlphaSweep {
    pub complete: Option<GammaCurve>,
    pub line: Option<GammaCurve>,
}

pub fn alpha_sweep(args: &AlphaArgs) -> CliResult<AlphaSweep> {
    let params = args.params.resolve(InverterParams::coupling_defaults(0.0), 0.0)?;
    let alphas = args.alpha_range.values();
    let s = Susceptances::Constant(args.b);
    let want = |t: Topology| args.topology.is_none_or(|x| x == t);
    let curve = |t: Topology| -> CliResult<Option<GammaCurve>> {
        if !want(t) {
            return Ok(None);
        }
        let g = build_graph(t, args.n, s, 0.0)?;
        Ok(Some(gamma_curve(&g, &params, &alphas, t == Topology::Complete)?))
    };
    Ok(AlphaSweep { complete: curve(Topology::Complete)?, line: curve(Topology::Line)? })
}

pub fn cmd_alpha_sweep(args: &AlphaArgs) -> CliResult<()> {
    let sweep = alpha_sweep(args)?;
    let alphas = args.alpha_range.values();
    let lookup = |c: &Option<GammaCurve>, a: f64| -> Option<f64> {
        let c = c.as_ref()?;
        c.alphas.iter().position(|x| *x == a).map(|i| c.gammas[i])
    };
    let params = args.params.resolve(InverterParams::coupling_defaults(0.0), 0.0)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "gamma_complete", "gamma_line", "gamma_series"])?;
    let mut skipped = Vec::new();
    for &a in &alphas {
        let gc = lookup(&sweep.complete, a);
        let gl = lookup(&sweep.line, a);
        let wanted_c = sweep.complete.is_some();
        let wanted_l = sweep.line.is_some();
        if (wanted_c && gc.is_none()) || (wanted_l && gl.is_none()) {
            skipped.push(a);
            continue;
        }
        let series = gridloss::coupled::gamma_series_complete(&params, a, gridloss::coupled::SeriesTerms::Infinite).ok();
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        w.write_record([num(a), opt(gc), opt(gl), opt(series)])?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    let mut reasons = Vec::new();
    for (name, c) in [("complete", &sweep.complete), ("line", &sweep.line)] {
        for (a, why) in c.iter().flat_map(|c| &c.skipped) {
            eprintln!("skipped alpha = {a} ({name}): {why}");
            reasons.push(json!({ "alpha": a, "topology": name, "reason": why }));
        }
    }
    let violations: Vec<_> = sweep
        .line
        .as_ref()
        .map(|line| {
            let series: Vec<Option<f64>> = line
                .alphas
                .iter()
                .map(|&a| gridloss::coupled::gamma_series_complete(&params, a, gridloss::coupled::SeriesTerms::Infinite).ok())
                .collect();
            GammaCurve { series_prediction: Some(series), ..line.clone() }.series_bound_violations()
        })
        .unwrap_or_default();
    for (a, g, s) in &violations {
        eprintln!("note: line-graph gamma {g:.3e} exceeds the complete-graph series {s:.3e} at alpha = {a}");
    }
    let summary = json!({
        "rows": alphas.len() - skipped.len(),
        "skipped": reasons,
        "fitted_exponent_complete": sweep.complete.as_ref().and_then(|c| c.fitted_exponent),
        "fitted_exponent_line": sweep.line.as_ref().and_then(|c| c.fitted_exponent),
        "series_bound_violations_line": violations.len(),
    });
    emit_table("alpha-sweep", args, &body, args.out.as_deref(), summary)
}

pub fn cmd_dump_model(args: &DumpArgs) -> CliResult<()> {
    let file = NetworkFile::load(&args.network)?;
    let g = &file.graph;
    let n = g.n_nodes();
    let model = match args.model {
        ModelChoice::Full => {
            let node = match &file.params {
                Some(p) => NodeParams {
                    k_p: p.kp.expand(n, "kp")?,
                    k_q: p.kq.expand(n, "kq")?,
                    tau_p: p.taup.expand(n, "taup")?,
                    tau_q: p.tauq.expand(n, "tauq")?,
                },
                None => NodeParams::uniform(&InverterParams::scaling_defaults(), n),
            };
            assemble_full(g, &node)?
        }
        choice => {
            let (kp, kq, tp, tq) = match &file.params {
                Some(p) => NodeParams {
                    k_p: p.kp.expand(n, "kp")?,
                    k_q: p.kq.expand(n, "kq")?,
                    tau_p: p.taup.expand(n, "taup")?,
                    tau_q: p.tauq.expand(n, "tauq")?,
                }
                .as_uniform()
                .ok_or_else(|| CliError::Usage("decoupled and coupled models need identical inverters".into()))?,
                None => (1.0, 1.0, 1.0, 1.0),
            };
            let alpha = g
                .uniform_ratio()
                .or(file.alpha)
                .ok_or_else(|| CliError::Usage("decoupled and coupled models need a uniform g/b ratio".into()))?;
            let shunt = g
                .uniform_shunt()
                .ok_or_else(|| CliError::Usage("decoupled and coupled models need a uniform shunt".into()))?;
            let p = InverterParams::from_shunt(kp, kq, tp, tq, shunt, alpha)?;
            if choice == ModelChoice::Decoupled {
                assemble_decoupled(g, &p)?
            } else {
                assemble_coupled(g, &p)?
            }
        }
    };
    let text = serde_json::to_string_pretty(&model.dump())? + "\n";
    match &args.out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
