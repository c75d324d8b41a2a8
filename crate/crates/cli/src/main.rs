// SPDX-License-Identifier: Apache-2.0

//! `mgforge` command-line front end.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mgforge::compiler::{decompose_general, decompose_symmetric, simulate_circuit, CircuitJson};
use mgforge::gates::phase_distance;
use mgforge::json::MatrixJson;
use mgforge::matchgate::{named_gate, recognize_matchgate, Matchgate, MatchgateJson, NamedGate};
use mgforge::nonlocal_map::{build_chamber_grid, fidelity_map, locate_maximum, write_csv, GridPreset, MapSummary, OrbitOptions};
use mgforge::optics::{
    calibrate_to_targets, experiment_process, max_unitary_fidelity, synthesize_experiment,
    CalibrationBounds, CalibrationTargets, ExperimentConfig, PipelineOptions,
};
use mgforge::process::{
    compose, noise_channel, process_fidelity, process_purity, unitary_to_chi, NoiseChannel, ProcessMatrix,
    ProcessMatrixJson,
};
use mgforge::tomography::{bootstrap_errors_multi, mle_reconstruct_detailed, simulate_counts, TomographyDataset};
use mgforge::weyl::{is_perfect_entangler, kak_coordinates, makhlin_invariants, nearest_named_gate};
use mgforge::{Error, Unitary4F64};

const DECOMPOSE_TOLERANCE: f64 = 1e-8;
const CALIBRATION_TOLERANCE: f64 = 0.015;

#[derive(Parser, Debug)]
#[command(name = "mgforge", version, about = "Matchgate compiler and nonlocal process analysis")]
struct Cli {
    /// Master seed for every stochastic stage.
    #[arg(long, global = true, env = "MG_FORGE_SEED")]
    seed: Option<u64>,
    /// Directory for output files and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Worker threads for map and bootstrap stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Command-specific tolerance (decompose residual, calibration residual).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the matrix of a named gate.
    Gates { name: String },
    /// Compile a matchgate into a circuit and verify it.
    Decompose(DecomposeArgs),
    /// KAK coordinates, invariants and perfect-entangler test of a gate.
    Kak(GateInput),
    /// Write the chi matrix of a gate, a noisy gate or the experiment model.
    Chi(ChiArgs),
    /// Tomography simulation and reconstruction.
    #[command(subcommand)]
    Tomo(TomoCommand),
    /// Nonlocal fidelity map over the Weyl chamber.
    Weylmap(WeylmapArgs),
    /// Synthetic optical experiment.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args, Debug)]
struct GateInput {
    /// Named gate.
    #[arg(long, conflicts_with = "unitary")]
    gate: Option<String>,
    /// File with a 4×4 matrix JSON.
    #[arg(long)]
    unitary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Matchgate JSON or 4×4 matrix JSON; omit when using --gate.
    input: Option<PathBuf>,
    /// Named gate instead of a file.
    #[arg(long, conflicts_with = "input")]
    gate: Option<String>,
    /// Use the symmetric CZ(θ) decomposition.
    #[arg(long)]
    symmetric: bool,
}

#[derive(Args, Debug)]
struct ChiArgs {
    #[command(flatten)]
    gate: GateInput,
    /// Experiment configuration JSON; the model process is written.
    #[arg(long, conflicts_with_all = ["gate", "unitary"])]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    depolarizing: f64,
    #[arg(long, default_value_t = 0.0)]
    dephasing: f64,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "chi.json")]
    out: String,
}

#[derive(Subcommand, Debug)]
enum TomoCommand {
    /// Simulate Poisson counts for all 576 settings.
    Simulate {
        #[command(flatten)]
        source: ProcessInput,
        /// Nominal counts per setting.
        #[arg(long, default_value_t = 10_000)]
        counts: u64,
        #[arg(long, default_value = "dataset.jsonl")]
        out: String,
    },
    /// Maximum-likelihood reconstruction of a dataset.
    Reconstruct {
        /// Dataset in JSON lines.
        #[arg(long)]
        data: PathBuf,
        /// Ideal gate for the reported fidelity.
        #[arg(long)]
        gate: Option<String>,
        /// Bootstrap resamples (0 disables).
        #[arg(long, default_value_t = 0)]
        bootstrap: usize,
        #[arg(long, default_value = "chi_mle.json")]
        out: String,
    },
}

#[derive(Args, Debug)]
struct ProcessInput {
    /// Named gate.
    #[arg(long, conflicts_with = "chi")]
    gate: Option<String>,
    /// Process matrix JSON.
    #[arg(long)]
    chi: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Grid {
    Fine,
    Desk,
}

#[derive(Args, Debug)]
struct WeylmapArgs {
    /// Process matrix JSON.
    #[arg(long, conflicts_with = "gate")]
    target: Option<PathBuf>,
    /// Named gate as the target.
    #[arg(long)]
    gate: Option<String>,
    /// Ideal gate for delta_nl; defaults to --gate, else the grid maximum.
    #[arg(long)]
    ideal: Option<String>,
    #[arg(long, value_enum, default_value = "desk", conflicts_with = "points")]
    grid: Grid,
    /// Explicit target grid size.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value = "map")]
    prefix: String,
}

#[derive(Subcommand, Debug)]
enum ExperimentCommand {
    /// Model → counts → MLE → bootstrap → map, written as a report.
    Run {
        /// Experiment configuration JSON; default is the noiseless model.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        counts: Option<u64>,
        #[arg(long, value_enum, default_value = "desk", conflicts_with = "points")]
        grid: Grid,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, default_value_t = 50)]
        bootstrap: usize,
    },
    /// Fit the noise model to a target triple.
    Calibrate {
        #[arg(long, default_value_t = 0.923)]
        raw_fidelity: f64,
        #[arg(long, default_value_t = 0.947)]
        f_max: f64,
        #[arg(long, default_value_t = 0.898)]
        purity: f64,
        /// Calibration bounds JSON.
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        counts: u64,
        #[arg(long, default_value = "calibrated_config.json")]
        out: String,
    },
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config_path: Option<String>,
    seed: u64,
    output_dir: String,
    tool_version: String,
    timestamp_unix: u64,
    outputs: Vec<String>,
}

struct RunContext {
    seed: u64,
    seed_given: bool,
    output_dir: PathBuf,
    tolerance: Option<f64>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: e.into() }
}

fn classify(e: anyhow::Error) -> Failure {
    let code = match e.downcast_ref::<Error>() {
        Some(
            Error::NonFinite
            | Error::NotUnitary { .. }
            | Error::Shape { .. }
            | Error::DeterminantMismatch { .. }
            | Error::PatternViolation { .. }
            | Error::NotSymmetric { .. }
            | Error::RelaxedMatchgate
            | Error::UnknownGate(_)
            | Error::NotCanonical { .. }
            | Error::InvalidParameter(_)
            | Error::Dataset(_)
            | Error::Json(_),
        ) => 2,
        _ if e.downcast_ref::<serde_json::Error>().is_some() => 2,
        _ => 1,
    };
    Failure { code, error: e }
}

type CmdResult = Result<Value, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be ≥ 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if let Some(t) = cli.tolerance {
        if !(t.is_finite() && t > 0.0) {
            eprintln!("error: --tolerance must be positive");
            return ExitCode::from(2);
        }
    }
    let ctx = RunContext {
        seed: cli.seed.unwrap_or(0),
        seed_given: cli.seed.is_some(),
        output_dir: cli.output_dir.clone(),
        tolerance: cli.tolerance,
    };
    match run(&cli.command, &ctx) {
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("JSON values always serialize");
            // A closed pipe (e.g. `| head`) is not an error of the command.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: &Command, ctx: &RunContext) -> CmdResult {
    match cmd {
        Command::Gates { name } => cmd_gates(name),
        Command::Decompose(a) => cmd_decompose(a, ctx),
        Command::Kak(g) => cmd_kak(g),
        Command::Chi(a) => cmd_chi(a, ctx),
        Command::Tomo(TomoCommand::Simulate { source, counts, out }) => cmd_tomo_simulate(source, *counts, out, ctx),
        Command::Tomo(TomoCommand::Reconstruct {
            data,
            gate,
            bootstrap,
            out,
        }) => cmd_tomo_reconstruct(data, gate.as_deref(), *bootstrap, out, ctx),
        Command::Weylmap(a) => cmd_weylmap(a, ctx),
        Command::Experiment(ExperimentCommand::Run {
            config,
            counts,
            grid,
            points,
            bootstrap,
        }) => cmd_experiment_run(config.as_deref(), *counts, grid_size(*grid, *points), *bootstrap, ctx),
        Command::Experiment(ExperimentCommand::Calibrate {
            raw_fidelity,
            f_max,
            purity,
            bounds,
            counts,
            out,
        }) => {
            let targets = CalibrationTargets {
                raw_fidelity: *raw_fidelity,
                f_max: *f_max,
                purity: *purity,
            };
            cmd_experiment_calibrate(&targets, bounds.as_deref(), *counts, out, ctx)
        }
    }
}

fn grid_size(grid: Grid, points: Option<usize>) -> usize {
    points.unwrap_or(match grid {
        Grid::Fine => GridPreset::Fine.target_count(),
        Grid::Desk => GridPreset::Desk.target_count(),
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display())).map_err(usage)?;
    serde_json::from_reader(BufReader::new(f))
        .with_context(|| format!("cannot parse {}", path.display()))
        .map_err(usage)
}

fn named_unitary(name: &str) -> Result<Unitary4F64, Failure> {
    match named_gate::<f64>(name).map_err(|e| classify(e.into()))? {
        NamedGate::Two(u) => Ok(u),
        NamedGate::One(_) => Err(usage(anyhow!("`{name}` is a single-qubit gate"))),
    }
}

fn gate_unitary(g: &GateInput) -> Result<Unitary4F64, Failure> {
    match (&g.gate, &g.unitary) {
        (Some(name), _) => named_unitary(name),
        (None, Some(path)) => {
            let m: MatrixJson = read_json(path)?;
            m.to_mat().map_err(|e| classify(e.into()))
        }
        (None, None) => Err(usage(anyhow!("one of --gate or --unitary is required"))),
    }
}

fn process_input(p: &ProcessInput) -> Result<(ProcessMatrix, String), Failure> {
    match (&p.gate, &p.chi) {
        (Some(name), _) => {
            let chi = unitary_to_chi(&named_unitary(name)?).map_err(|e| classify(e.into()))?;
            Ok((chi, name.clone()))
        }
        (None, Some(path)) => {
            let j: ProcessMatrixJson = read_json(path)?;
            Ok((j.to_process().map_err(|e| classify(e.into()))?, path.display().to_string()))
        }
        (None, None) => Err(usage(anyhow!("one of --gate or --chi is required"))),
    }
}

fn output_file(ctx: &RunContext, name: &str) -> Result<(PathBuf, BufWriter<File>), Failure> {
    fs::create_dir_all(&ctx.output_dir)
        .with_context(|| format!("cannot create {}", ctx.output_dir.display()))
        .map_err(classify)?;
    let path = ctx.output_dir.join(name);
    let f = File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(classify)?;
    Ok((path, BufWriter::new(f)))
}

fn write_json<T: Serialize>(ctx: &RunContext, name: &str, value: &T) -> Result<PathBuf, Failure> {
    let (path, mut w) = output_file(ctx, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| classify(e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| classify(e.into()))?;
    Ok(path)
}

fn write_manifest(ctx: &RunContext, command: &str, config_path: Option<&Path>, outputs: &[&Path]) -> Result<(), Failure> {
    let manifest = RunManifest {
        command: command.to_string(),
        config_path: config_path.map(|p| p.display().to_string()),
        seed: ctx.seed,
        output_dir: ctx.output_dir.display().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    write_json(ctx, "manifest.json", &manifest).map(|_| ())
}

fn cmd_gates(name: &str) -> CmdResult {
    let g = named_gate::<f64>(name).map_err(|e| classify(e.into()))?;
    let matrix = match g {
        NamedGate::One(u) => json!(MatrixJson::from_mat(&u)),
        NamedGate::Two(u) => json!(MatrixJson::from_mat(&u)),
    };
    let mut out = json!({ "name": name.to_ascii_uppercase(), "matrix": matrix });
    if name.eq_ignore_ascii_case("G_IX") {
        out["note"] = json!("relaxed matchgate: det(a) ≠ det(b); equals SWAP");
    }
    Ok(out)
}

fn load_matchgate(a: &DecomposeArgs) -> Result<Matchgate<f64>, Failure> {
    let u = match (&a.gate, &a.input) {
        (Some(name), _) => named_unitary(name)?,
        (None, Some(path)) => {
            let v: Value = read_json(path)?;
            if v.get("a").is_some() {
                let j: MatchgateJson = serde_json::from_value(v).map_err(usage)?;
                return j.to_matchgate().map_err(|e| classify(e.into()));
            }
            let m: MatrixJson = serde_json::from_value(v).map_err(usage)?;
            m.to_mat().map_err(|e| classify(e.into()))?
        }
        (None, None) => return Err(usage(anyhow!("an input file or --gate is required"))),
    };
    recognize_matchgate(&u).map_err(|r| classify(Error::from(r).into()))
}

fn cmd_decompose(a: &DecomposeArgs, ctx: &RunContext) -> CmdResult {
    let m = load_matchgate(a)?;
    let target = m.to_unitary();
    let tol = ctx.tolerance.unwrap_or(DECOMPOSE_TOLERANCE);
    let mut out = if a.symmetric {
        let d = decompose_symmetric(&m).map_err(|e| classify(e.into()))?;
        json!({
            "mode": "symmetric",
            "theta": d.theta,
            "phase": d.phase,
            "pre_top": MatrixJson::from_mat(&d.pre_top),
            "pre_bottom": MatrixJson::from_mat(&d.pre_bottom),
            "post_top": MatrixJson::from_mat(&d.post_top),
            "post_bottom": MatrixJson::from_mat(&d.post_bottom),
            "circuit": CircuitJson::from_circuit(&d.circuit()),
        })
    } else {
        let d = decompose_general(&m).map_err(|e| classify(e.into()))?;
        json!({
            "mode": "general",
            "u": MatrixJson::from_mat(&d.u),
            "circuit": CircuitJson::from_circuit(&d.circuit),
        })
    };
    let circuit: CircuitJson = serde_json::from_value(out["circuit"].clone()).map_err(|e| classify(e.into()))?;
    let built = simulate_circuit(&circuit.to_circuit::<f64>().map_err(|e| classify(e.into()))?)
        .map_err(|e| classify(e.into()))?;
    let residual = phase_distance(&built, &target);
    out["residual"] = json!(residual);
    let path = write_json(ctx, "circuit.json", &circuit)?;
    write_manifest(ctx, "decompose", a.input.as_deref(), &[&path])?;
    if residual > tol {
        return Err(Failure {
            code: 1,
            error: anyhow!("decomposition residual {residual:.12e} exceeds {tol:e}"),
        });
    }
    Ok(out)
}

fn cmd_kak(g: &GateInput) -> CmdResult {
    let u = gate_unitary(g)?;
    let p = kak_coordinates(&u).map_err(|e| classify(e.into()))?;
    let inv = makhlin_invariants(&u).map_err(|e| classify(e.into()))?;
    let (name, dist) = nearest_named_gate(&p);
    Ok(json!({
        "point": p,
        "invariants": inv,
        "perfect_entangler": is_perfect_entangler(&p),
        "nearest_named_gate": { "name": name, "distance": dist },
    }))
}

fn cmd_chi(a: &ChiArgs, ctx: &RunContext) -> CmdResult {
    let base = if let Some(path) = &a.config {
        let cfg: ExperimentConfig = read_json(path)?;
        experiment_process(&cfg).map_err(|e| classify(e.into()))?
    } else {
        unitary_to_chi(&gate_unitary(&a.gate)?).map_err(|e| classify(e.into()))?
    };
    let mut chi = base;
    for kind in [NoiseChannel::Depolarizing(a.depolarizing), NoiseChannel::Dephasing(a.dephasing)] {
        let n = noise_channel(&kind).map_err(|e| classify(e.into()))?;
        chi = compose(&chi, &n).map_err(|e| classify(e.into()))?;
    }
    let path = write_json(ctx, &a.out, &ProcessMatrixJson::from_process(&chi))?;
    write_manifest(ctx, "chi", a.config.as_deref(), &[&path])?;
    Ok(json!({
        "path": path.display().to_string(),
        "trace_norm": chi.trace_norm(),
        "purity": process_purity(&chi),
        "min_eigenvalue": chi.min_eigenvalue(),
    }))
}

fn cmd_tomo_simulate(source: &ProcessInput, counts: u64, out: &str, ctx: &RunContext) -> CmdResult {
    let (chi, label) = process_input(source)?;
    let data = simulate_counts(&chi, counts, ctx.seed).map_err(|e| classify(e.into()))?;
    let (path, mut w) = output_file(ctx, out)?;
    data.write_jsonl(&mut w).map_err(|e| classify(e.into()))?;
    w.flush().map_err(|e| classify(e.into()))?;
    write_manifest(ctx, "tomo simulate", source.chi.as_deref(), &[&path])?;
    let total: u64 = data.records.iter().map(|r| r.counts).sum();
    Ok(json!({
        "path": path.display().to_string(),
        "source": label,
        "n_nominal": counts,
        "seed": ctx.seed,
        "records": data.records.len(),
        "total_counts": total,
    }))
}

fn cmd_tomo_reconstruct(data: &Path, gate: Option<&str>, bootstrap: usize, out: &str, ctx: &RunContext) -> CmdResult {
    let f = File::open(data)
        .with_context(|| format!("cannot open {}", data.display()))
        .map_err(usage)?;
    let ds = TomographyDataset::read_jsonl(BufReader::new(f)).map_err(|e| classify(e.into()))?;
    let r = mle_reconstruct_detailed(&ds).map_err(|e| classify(e.into()))?;
    let ideal = gate.map(|g| named_unitary(g).and_then(|u| unitary_to_chi(&u).map_err(|e| classify(e.into())))).transpose()?;
    let path = write_json(ctx, out, &ProcessMatrixJson::from_process(&r.process))?;
    write_manifest(ctx, "tomo reconstruct", Some(data), &[&path])?;
    let mut report = json!({
        "path": path.display().to_string(),
        "purity": process_purity(&r.process),
        "trace_norm": r.process.trace_norm(),
        "max_unitary_fidelity": max_unitary_fidelity(&r.process).1,
        "log_likelihood": r.log_likelihood,
        "iterations": r.iterations,
        "converged": r.converged,
        "tp_defect": r.tp_defect,
    });
    if let Some(ideal) = &ideal {
        report["fidelity"] = json!(process_fidelity(&r.process, ideal).value);
    }
    if bootstrap > 0 {
        let seed = if ctx.seed_given { ctx.seed } else { ds.seed };
        let stats = bootstrap_errors_multi(&ds, bootstrap, seed, |p| {
            let mut v = vec![process_purity(p)];
            if let Some(ideal) = &ideal {
                v.push(process_fidelity(p, ideal).value);
            }
            v
        })
        .map_err(|e| classify(e.into()))?;
        report["purity_std"] = json!(stats[0].std);
        if stats.len() > 1 {
            report["fidelity_std"] = json!(stats[1].std);
        }
        report["bootstrap_failures"] = json!(stats[0].failures);
    }
    Ok(report)
}

fn cmd_weylmap(a: &WeylmapArgs, ctx: &RunContext) -> CmdResult {
    let source = ProcessInput {
        gate: a.gate.clone(),
        chi: a.target.clone(),
    };
    let (chi, label) = process_input(&source)?;
    if a.restarts == 0 {
        return Err(usage(anyhow!("--restarts must be ≥ 1")));
    }
    let grid = build_chamber_grid(grid_size(a.grid, a.points)).map_err(|e| classify(e.into()))?;
    let opts = OrbitOptions {
        restarts: a.restarts,
        seed: ctx.seed,
        ..OrbitOptions::default()
    };
    let map = fidelity_map(&chi, &grid, &label, &opts);
    let argmax = map
        .values
        .iter()
        .max_by(|x, y| x.f_nl.total_cmp(&y.f_nl))
        .map(|v| v.point)
        .ok_or_else(|| classify(anyhow!("empty grid")))?;
    let target_point = match a.ideal.as_ref().or(a.gate.as_ref()) {
        Some(g) => kak_coordinates(&named_unitary(g)?).map_err(|e| classify(e.into()))?,
        None => argmax,
    };
    let max = locate_maximum(&chi, &map, &target_point).map_err(|e| classify(e.into()))?;
    let (csv_path, mut w) = output_file(ctx, &format!("{}.csv", a.prefix))?;
    write_csv(&map, &mut w).map_err(|e| classify(e.into()))?;
    w.flush().map_err(|e| classify(e.into()))?;
    let summary = MapSummary::new(&map, &max);
    let summary_path = write_json(ctx, &format!("{}_summary.json", a.prefix), &summary)?;
    write_manifest(ctx, "weylmap", a.target.as_deref(), &[&csv_path, &summary_path])?;
    Ok(json!({
        "csv": csv_path.display().to_string(),
        "summary_path": summary_path.display().to_string(),
        "summary": summary,
    }))
}

fn cmd_experiment_run(
    config: Option<&Path>,
    counts: Option<u64>,
    grid_points: usize,
    bootstrap: usize,
    ctx: &RunContext,
) -> CmdResult {
    let mut cfg = match config {
        Some(path) => read_json::<ExperimentConfig>(path)?,
        None => ExperimentConfig::noiseless(10_000, ctx.seed),
    };
    if ctx.seed_given {
        cfg.seed = ctx.seed;
    }
    if let Some(n) = counts {
        cfg.n_nominal = n;
    }
    cfg.validate().map_err(|e| classify(e.into()))?;
    let opts = PipelineOptions {
        grid_points,
        bootstrap_resamples: bootstrap,
        ..PipelineOptions::default()
    };
    let out = synthesize_experiment(&cfg, &opts).map_err(|e| classify(e.into()))?;
    let (data_path, mut w) = output_file(ctx, "dataset.jsonl")?;
    out.dataset.write_jsonl(&mut w).map_err(|e| classify(e.into()))?;
    w.flush().map_err(|e| classify(e.into()))?;
    let (map_path, mut w) = output_file(ctx, "map.csv")?;
    write_csv(&out.map, &mut w).map_err(|e| classify(e.into()))?;
    w.flush().map_err(|e| classify(e.into()))?;
    let chi_path = write_json(ctx, "chi_mle.json", &ProcessMatrixJson::from_process(&out.reconstructed))?;
    let mut report = out.report;
    report.dataset_path = Some(data_path.display().to_string());
    report.map_path = Some(map_path.display().to_string());
    let report_path = write_json(ctx, "report.json", &report)?;
    let manifest_ctx = RunContext {
        seed: cfg.seed,
        seed_given: true,
        output_dir: ctx.output_dir.clone(),
        tolerance: ctx.tolerance,
    };
    write_manifest(&manifest_ctx, "experiment run", config, &[&report_path, &data_path, &map_path, &chi_path])?;
    serde_json::to_value(&report).map_err(|e| classify(e.into()))
}

fn cmd_experiment_calibrate(
    targets: &CalibrationTargets,
    bounds: Option<&Path>,
    counts: u64,
    out: &str,
    ctx: &RunContext,
) -> CmdResult {
    let bounds = match bounds {
        Some(p) => read_json::<CalibrationBounds>(p)?,
        None => CalibrationBounds::default(),
    };
    let base = ExperimentConfig::noiseless(counts, ctx.seed);
    let tol = ctx.tolerance.unwrap_or(CALIBRATION_TOLERANCE);
    let cal = calibrate_to_targets(targets, &bounds, &base, tol).map_err(|e| classify(e.into()))?;
    let path = write_json(ctx, out, &cal.config)?;
    write_manifest(ctx, "experiment calibrate", None, &[&path])?;
    Ok(json!({
        "path": path.display().to_string(),
        "config": cal.config,
        "model": cal.model,
        "residuals": cal.residuals,
        "targets": targets,
        "tolerance": tol,
    }))
}
