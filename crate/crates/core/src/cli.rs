//! The `defectoscope` command line.
//!
//! Every subcommand reads a [`RunConfig`] assembled from an optional
//! `--config` file, `--set key=value` pairs and the dedicated flags (applied
//! in that order). Exit codes: 0 on success, 1 for invalid input, 2 for
//! numerical failure, including a minimisation that stops unconverged.

use crate::config::{Command, ConfigBuilder, RunConfig};
use crate::defects::{classify_defects, default_threshold, monotonicity_check, scaled_density, DefectReport, DensityProfile};
use crate::elastic::{check_hypotheses, ScanSpec};
use crate::error::{Error, Result};
use crate::fields::{default_center, generate, DirectorField};
use crate::io::{self, Format};
use crate::lifting::{lift_region, obstruction_chain};
use crate::minimizer::{minimize, minimize_penalized, QField, ResolvedOptions, Status, TraceRow};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Version of the JSON report and sidecar layout.
pub const REPORT_SCHEMA: &str = "defectoscope.report/1";

#[derive(Parser, Debug)]
#[command(name = "defectoscope", version, about = "Constrained elastic energy minimisation and defect analysis")]
struct Cli {
    /// Print errors as a JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Write a generated field.
    Generate(Common),
    /// Minimise the constrained energy from a file or a generated field.
    Minimize(Common),
    /// Relax the Q-tensor penalized energy and project back.
    MinimizePenalized(Common),
    /// Compute the obstruction chain and, if it is empty, the lift.
    Lift(Common),
    /// Classify the singular set of a field.
    Analyze(Common),
    /// Evaluate the almost-monotonicity identity.
    Monotonicity(Common),
    /// Check the modulus hypotheses.
    CheckModulus(Common),
    /// Convert a DFSC field to another format.
    Export(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Set any config key, e.g. `--set opts.grad_tol=1e-9`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    dims: Option<String>,
    /// Nodes per axis.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    half_width: Option<String>,
    /// `box` or `ball`.
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    b: Option<String>,
    /// Generator kind, e.g. `hedgehog` or `disclination(1/2)`.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "in")]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// `dfsc`, `vtk`, `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    trace: Option<String>,
    #[arg(long)]
    meta: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    #[arg(long)]
    grad_tol: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    /// Semicolon-separated points.
    #[arg(long, allow_hyphen_values = true)]
    centers: Option<String>,
    #[arg(long)]
    radii: Option<String>,
    /// Inner radius of the monotonicity check.
    #[arg(long = "r")]
    inner: Option<String>,
    /// Outer radius of the monotonicity check.
    #[arg(long = "big-r")]
    outer: Option<String>,
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, &'static str, &Option<String>)> {
        vec![
            ("--target", "target", &self.target),
            ("--dims", "grid.dims", &self.dims),
            ("--grid", "grid.n", &self.grid),
            ("--half-width", "grid.half_width", &self.half_width),
            ("--shape", "grid.shape", &self.shape),
            ("--p", "modulus.p", &self.p),
            ("--b", "modulus.b", &self.b),
            ("--kind", "field.kind", &self.kind),
            ("--direction", "field.direction", &self.direction),
            ("--center", "field.center", &self.center),
            ("--seed", "seed", &self.seed),
            ("--in", "io.in", &self.input),
            ("--out", "io.out", &self.out),
            ("--format", "io.format", &self.format),
            ("--trace", "io.trace", &self.trace),
            ("--meta", "io.meta", &self.meta),
            ("--max-iters", "opts.max_iters", &self.max_iters),
            ("--grad-tol", "opts.grad_tol", &self.grad_tol),
            ("--epsilon", "penalized.epsilon", &self.epsilon),
            ("--threshold", "analysis.threshold", &self.threshold),
            ("--centers", "analysis.centers", &self.centers),
            ("--radii", "analysis.radii", &self.radii),
            ("--r", "analysis.r", &self.inner),
            ("--big-r", "analysis.big_r", &self.outer),
        ]
    }
}

impl Sub {
    fn parts(&self) -> (Command, &Common) {
        match self {
            Sub::Generate(c) => (Command::Generate, c),
            Sub::Minimize(c) => (Command::Minimize, c),
            Sub::MinimizePenalized(c) => (Command::MinimizePenalized, c),
            Sub::Lift(c) => (Command::Lift, c),
            Sub::Analyze(c) => (Command::Analyze, c),
            Sub::Monotonicity(c) => (Command::Monotonicity, c),
            Sub::CheckModulus(c) => (Command::CheckModulus, c),
            Sub::Export(c) => (Command::Export, c),
        }
    }
}

fn build_config(cmd: Command, common: &Common) -> ConfigBuilder {
    let mut b = ConfigBuilder::default();
    if let Some(path) = &common.config {
        match std::fs::read_to_string(path) {
            Ok(text) => b.read_text(&text),
            Err(e) => b.push_error(format!("--config {}: {e}", path.display())),
        }
    }
    for kv in &common.set {
        match kv.split_once('=') {
            Some((k, v)) => b.apply(k.trim(), v, "--set"),
            None => b.push_error(format!("--set: expected KEY=VALUE, got `{kv}`")),
        }
    }
    for (flag, key, value) in common.flags() {
        if let Some(v) = value {
            b.apply(key, v, flag);
        }
    }
    b.apply("command", cmd.name(), "subcommand");
    b
}

/// What a finished subcommand reports back.
struct Outcome {
    status: Option<Status>,
    summary: Value,
    outputs: Vec<PathBuf>,
    /// Numerical failure detected after outputs were written.
    failure: Option<Error>,
}

impl Outcome {
    fn new(summary: Value) -> Self {
        Outcome { status: None, summary, outputs: Vec::new(), failure: None }
    }
}

fn threads() -> Result<Option<usize>> {
    match std::env::var("DEFECTOSCOPE_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                // Fails only if a pool exists already, which then stays in use.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                Ok(Some(n))
            }
            _ => Err(Error::Config(vec![format!("DEFECTOSCOPE_THREADS = `{v}` must be a positive integer")])),
        },
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let json_errors = args.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.render().to_string();
            report_error(&Error::Invalid(msg.trim().to_string()), 1, json_errors);
            return 1;
        }
    };
    let started = Instant::now();
    let started_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let (cmd, common) = cli.command.parts();
    let builder = build_config(cmd, common);
    let config = builder.config.clone();
    let defaulted = builder.defaulted();

    let result = threads().and_then(|t| builder.finish().map(|c| (c, t))).and_then(|(c, t)| {
        let outcome = run_command(cmd, &c)?;
        Ok((outcome, t))
    });
    let (code, status, summary, outputs, error, threads) = match result {
        Ok((o, t)) => {
            let stopped = match o.status {
                Some(status @ (Status::Unconverged | Status::Stalled)) => Some(Error::NotConverged {
                    status: status.label(),
                    iterations: o.summary["iterations"].as_u64().unwrap_or(0) as usize,
                    grad_norm: o.summary["grad_norm"].as_f64().unwrap_or(f64::NAN),
                }),
                _ => None,
            };
            let failure = o.failure.or(stopped);
            let code = if failure.is_some() { 2 } else { 0 };
            if let Some(e) = &failure {
                report_error(e, code, json_errors);
            }
            (code, o.status, o.summary, o.outputs, failure, t)
        }
        Err(e) => {
            let code = if e.is_numerical() { 2 } else { 1 };
            report_error(&e, code, json_errors);
            (code, None, Value::Null, Vec::new(), Some(e), None)
        }
    };

    let meta = json!({
        "schema": REPORT_SCHEMA,
        "tool": "defectoscope",
        "version": env!("CARGO_PKG_VERSION"),
        "dfsc_version": io::DFSC_VERSION,
        "command": cmd.name(),
        "seed": config.seed,
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
        "started_unix": started_unix,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "exit_code": code,
        "status": status.map(|s| s.label()),
        "error": error.as_ref().map(|e| json!({"kind": e.kind(), "message": e.to_string()})),
        "config": crate::config::KEYS.iter().map(|k| (k.to_string(), Value::from(config.get(k)))).collect::<serde_json::Map<_, _>>(),
        "defaulted": defaulted,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "summary": summary,
    });
    let path = sidecar_path(cmd, &config);
    if let Err(e) = io::create(&path).and_then(|w| io::write_json(w, &meta)) {
        eprintln!("warning: could not write metadata sidecar: {e}");
    }
    code
}

fn report_error(e: &Error, code: i32, json_errors: bool) {
    if json_errors {
        let details: Vec<String> = match e {
            Error::Config(list) => list.clone(),
            _ => vec![],
        };
        let v = json!({"error": {"kind": e.kind(), "message": e.to_string(), "details": details, "exit_code": code}});
        eprintln!("{v}");
    } else {
        match e {
            Error::Config(list) => {
                eprintln!("error: invalid configuration");
                for item in list {
                    eprintln!("  - {item}");
                }
            }
            _ => eprintln!("error: {e}"),
        }
    }
}

fn sidecar_path(cmd: Command, config: &RunConfig) -> PathBuf {
    if let Some(p) = &config.meta {
        return p.clone();
    }
    let with_suffix = |p: &Path, suffix: &str| {
        let mut s = p.as_os_str().to_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    match (&config.output, &config.input) {
        (Some(out), _) => with_suffix(out, ".meta.json"),
        (None, Some(input)) => with_suffix(input, &format!(".{}.meta.json", cmd.name())),
        _ => PathBuf::from(format!("defectoscope-{}.meta.json", cmd.name())),
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn output_format(config: &RunConfig, path: &Path, fallback: Format) -> Result<Format> {
    match &config.format {
        Some(f) => Format::parse(f),
        None => Ok(Format::from_path(path).unwrap_or(fallback)),
    }
}

fn write_field(path: &Path, format: Format, field: &DirectorField, status: Option<Status>) -> Result<()> {
    match format {
        Format::Dfsc => io::save_dfsc(path, field, status),
        Format::Vtk => io::write_field_vtk(io::create(path)?, field),
        Format::Csv => io::write_field_csv(io::create(path)?, field),
        Format::Json => Err(Error::Format("a field cannot be written as json (use dfsc, vtk or csv)".into())),
    }
}

fn emit_json<T: Serialize>(config: &RunConfig, value: &T, outputs: &mut Vec<PathBuf>) -> Result<()> {
    match &config.output {
        Some(p) => {
            io::write_json(io::create(p)?, value)?;
            outputs.push(p.clone());
            Ok(())
        }
        None => io::write_json(std::io::stdout().lock(), value),
    }
}

fn load_input(config: &RunConfig) -> Result<io::FieldFile> {
    let path = config.input.as_ref().ok_or_else(|| Error::Config(vec!["io.in is required".into()]))?;
    io::load_dfsc(path)
}

fn initial_field(config: &RunConfig) -> Result<DirectorField> {
    match &config.input {
        Some(p) => Ok(io::load_dfsc(p)?.field),
        None => Ok(generate(&config.field_kind()?, &config.generator_params(), &config.grid()?, &config.quotient_target()?)?.field),
    }
}

fn grid_json(field: &DirectorField) -> Value {
    let g = field.grid();
    json!({
        "dims": g.dims(),
        "n": &g.n()[..g.dims()],
        "h": g.h(),
        "origin": &g.origin()[..g.dims()],
        "shape": g.shape().name(),
    })
}

fn write_trace(config: &RunConfig, out: &Path, trace: &[TraceRow], outputs: &mut Vec<PathBuf>) -> Result<()> {
    let path = config.trace.clone().unwrap_or_else(|| sibling(out, ".trace.csv"));
    io::write_trace_csv(io::create(&path)?, trace)?;
    outputs.push(path);
    Ok(())
}

fn solver_summary(options: &ResolvedOptions, status: Status, iterations: usize, energy: f64, grad_norm: f64) -> Value {
    json!({
        "status": status.label(),
        "iterations": iterations,
        "energy": energy,
        "grad_norm": grad_norm,
        "options": options,
    })
}

/// The `analyze` document.
#[derive(Serialize)]
struct AnalysisDocument<'a> {
    schema: &'static str,
    target: &'a str,
    grid: Value,
    modulus: Value,
    input_status: Option<&'static str>,
    report: &'a DefectReport,
    densities: Vec<DensityProfile>,
}

fn run_command(cmd: Command, config: &RunConfig) -> Result<Outcome> {
    let mut outputs = Vec::new();
    match cmd {
        Command::CheckModulus => {
            let modulus = config.modulus()?;
            let report = check_hypotheses(&modulus, &ScanSpec::default())?;
            emit_json(config, &report, &mut outputs)?;
            let failure = (!report.admissible).then(|| Error::InadmissibleModulus(report.failures.clone()));
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(Outcome { outputs, ..Outcome::new(json!({"alpha": report.alpha, "psi_bound": report.psi_bound})) })
        }
        Command::Generate => {
            let out = config.output.clone().expect("validated");
            let grid = config.grid()?;
            let g = generate(&config.field_kind()?, &config.generator_params(), &grid, &config.quotient_target()?)?;
            write_field(&out, output_format(config, &out, Format::Dfsc)?, &g.field, None)?;
            outputs.push(out);
            Ok(Outcome { outputs, ..Outcome::new(json!({"nodes": grid.node_count(), "kind": config.kind})) })
        }
        Command::Minimize => {
            let out = config.output.clone().expect("validated");
            let format = output_format(config, &out, Format::Dfsc)?;
            let field = initial_field(config)?;
            let res = minimize(&field, &config.modulus()?, &config.minimize_options())?;
            write_field(&out, format, &res.field, Some(res.status))?;
            outputs.push(out.clone());
            write_trace(config, &out, &res.trace, &mut outputs)?;
            let summary = solver_summary(&res.options, res.status, res.iterations, res.energy, res.grad_norm);
            Ok(Outcome { status: Some(res.status), outputs, ..Outcome::new(summary) })
        }
        Command::MinimizePenalized => {
            let out = config.output.clone().expect("validated");
            let format = output_format(config, &out, Format::Dfsc)?;
            let field = initial_field(config)?;
            let res = minimize_penalized(&QField::from_director_field(&field)?, &config.modulus()?, &config.penalized_options())?;
            write_field(&out, format, &res.projected, Some(res.status))?;
            outputs.push(out.clone());
            let q_path = sibling(&out, ".q.vtk");
            io::write_q_field_vtk(io::create(&q_path)?, &res.q_field)?;
            outputs.push(q_path);
            write_trace(config, &out, &res.trace, &mut outputs)?;
            let mut summary = solver_summary(&res.options, res.status, res.iterations, res.energy, f64::NAN);
            summary["elastic_energy"] = json!(res.elastic_energy);
            summary["penalty_energy"] = json!(res.penalty_energy);
            summary["epsilon"] = json!(config.epsilon);
            Ok(Outcome { status: Some(res.status), outputs, ..Outcome::new(summary) })
        }
        Command::Lift => {
            let field = load_input(config)?.field;
            let chain = obstruction_chain(&field)?;
            let polylines = chain.polylines();
            let summary = json!({
                "orientable": chain.is_empty(),
                "support": chain.support().len(),
                "lines": polylines.len(),
                "cycle_violations": chain.cycle_violations(field.target()).len(),
            });
            if let Some(out) = &config.output {
                let chain_path = sibling(out, ".chain.csv");
                io::write_chain_csv(io::create(&chain_path)?, &chain)?;
                outputs.push(chain_path);
            }
            if !chain.is_empty() {
                let first = chain.segments().first().map(|s| s.plaquette).unwrap_or_default();
                let e = Error::NonOrientable(format!("{} plaquettes carry holonomy, first {first}", chain.support().len()));
                return Ok(Outcome { outputs, failure: Some(e), ..Outcome::new(summary) });
            }
            let region: Vec<usize> = (0..field.grid().node_count()).collect();
            let seed = region[0];
            let lifted = lift_region(&field, &region, seed, field.value(seed))?;
            let sphere = lifted.to_sphere_field(field.boundary().to_vec())?;
            match &config.output {
                Some(out) => {
                    write_field(out, output_format(config, out, Format::Dfsc)?, &sphere, None)?;
                    outputs.push(out.clone());
                }
                None => io::write_json(std::io::stdout().lock(), &summary)?,
            }
            Ok(Outcome { outputs, ..Outcome::new(summary) })
        }
        Command::Analyze => {
            let file = load_input(config)?;
            let field = &file.field;
            let modulus = config.modulus()?;
            let report = classify_defects(field, &modulus, &config.classify_options())?;
            let mut densities = Vec::new();
            for c in &config.centers {
                let radii = if config.radii.is_empty() {
                    crate::defects::dyadic_radii(field.grid(), c)
                } else {
                    config.radii.clone()
                };
                densities.push(scaled_density(field, &modulus, *c, &radii)?);
            }
            let doc = AnalysisDocument {
                schema: REPORT_SCHEMA,
                target: field.target().name(),
                grid: grid_json(field),
                modulus: json!({"p": modulus.p(), "b": modulus.b(), "default_threshold": default_threshold(modulus.p())}),
                input_status: file.status.map(|s| s.label()),
                report: &report,
                densities,
            };
            let vtk = config.output.as_ref().map(|p| output_format(config, p, Format::Json)).transpose()?;
            match (vtk, &config.output) {
                (Some(Format::Vtk), Some(p)) => {
                    io::write_defects_vtk(io::create(p)?, &report)?;
                    outputs.push(p.clone());
                }
                (Some(Format::Json) | None, _) => emit_json(config, &doc, &mut outputs)?,
                (Some(f), _) => return Err(Error::Format(format!("a defect report cannot be written as {}", f.name()))),
            }
            let summary = json!({
                "lines": report.lines.len(),
                "points": report.points.iter().map(|p| p.degree).collect::<Vec<_>>(),
                "singular_cells": report.singular_cells.len(),
                "unclassified": report.unclassified().count(),
            });
            Ok(Outcome { outputs, ..Outcome::new(summary) })
        }
        Command::Monotonicity => {
            let field = load_input(config)?.field;
            let modulus = config.modulus()?;
            let grid = field.grid();
            let centers = if config.centers.is_empty() { vec![default_center(grid)] } else { config.centers.clone() };
            let mut reports = Vec::with_capacity(centers.len());
            for c in centers {
                let r = config.inner_radius.unwrap_or(4.0 * grid.h());
                let big_r = config.outer_radius.unwrap_or(0.95 * grid.distance_to_boundary(&c));
                reports.push(monotonicity_check(&field, &modulus, c, r, big_r)?);
            }
            emit_json(config, &reports, &mut outputs)?;
            let summary = json!({
                "centers": reports.len(),
                "max_abs_residual": reports.iter().map(|r| r.residual.abs()).fold(0.0, f64::max),
                "rhs_nonnegative": reports.iter().all(|r| r.rhs_nonnegative),
            });
            Ok(Outcome { outputs, ..Outcome::new(summary) })
        }
        Command::Export => {
            let file = load_input(config)?;
            let out = config.output.clone().expect("validated");
            let format = output_format(config, &out, Format::Vtk)?;
            write_field(&out, format, &file.field, file.status)?;
            outputs.push(out);
            Ok(Outcome { outputs, ..Outcome::new(json!({"format": format.name()})) })
        }
    }
}
