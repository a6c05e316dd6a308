//! Command-line front end: filter synthesis, response generation, parameter
//! extraction, response fitting, and S-parameter format conversion.
//!
//! Exit codes: 0 success, 1 data/model errors (single-line message on
//! stderr), 2 usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use xcoupler_core::extraction::{
    band_metrics, extract_k_even_odd, extract_qext_group_delay, extract_qu, find_even_odd_peaks,
    normalize_coupling, ExtractionReport,
};
use xcoupler_core::fitter::{fit_matrix, FitOptions, FitProblem, FitTarget, Weights};
use xcoupler_core::matrix_json::{
    read_mask_json, read_matrix_json, write_fit_json, write_matrix_json,
};
use xcoupler_core::prototype::{reconfigure, synthesize_polynomials, transversal_matrix};
use xcoupler_core::response::{
    default_grid, linspace, read_csv, sparams, write_csv, FrequencyPlan, LossSpec,
};
use xcoupler_core::touchstone::{parse_touchstone, write_touchstone, TouchstoneOptions, TsFormat};
use xcoupler_core::{CouplingMatrix, SParamSweep, TopologyMask};

#[derive(Parser)]
#[command(
    name = "xcoupler",
    version,
    about = "Coupling-matrix filter synthesis, response evaluation, and extraction toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a coupling matrix from order, return loss, and zeros
    Synth(SynthArgs),
    /// Evaluate a coupling matrix's S-parameters over a frequency grid
    Respond(RespondArgs),
    /// Extract parameters or band metrics from S-parameter data
    Extract(ExtractArgs),
    /// Fit a masked coupling matrix to a target response
    Fit(FitArgs),
    /// Convert between Touchstone and CSV sweep formats
    Convert(ConvertArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Filter order (number of resonators)
    #[arg(long)]
    order: usize,
    /// In-band return loss in dB
    #[arg(long)]
    rl: f64,
    /// Transmission zero in Hz (repeatable; requires --f0 and --bw)
    #[arg(long = "tz-f")]
    tz_f: Vec<f64>,
    /// Transmission zero as a normalized lowpass position (repeatable)
    #[arg(long = "tz-omega")]
    tz_omega: Vec<f64>,
    /// Plan center frequency in Hz
    #[arg(long)]
    f0: Option<f64>,
    /// Plan absolute bandwidth in Hz
    #[arg(long)]
    bw: Option<f64>,
    /// Target topology: transversal, fig7 (4th-order chain S-1-2-3-L with a
    /// bridge resonator 4 on 1 and 3), or a mask JSON path
    #[arg(long, default_value = "transversal")]
    topology: String,
    /// Output matrix JSON path
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct RespondArgs {
    /// Input matrix JSON path
    #[arg(long)]
    matrix: PathBuf,
    /// Plan center frequency in Hz (falls back to the matrix file's plan)
    #[arg(long)]
    f0: Option<f64>,
    /// Plan absolute bandwidth in Hz (falls back to the matrix file's plan)
    #[arg(long)]
    bw: Option<f64>,
    /// Unloaded quality factor; 0 or negative means lossless
    #[arg(long, default_value_t = 0.0)]
    qu: f64,
    /// Grid start in Hz (default f0 - 1.5*bw)
    #[arg(long)]
    fstart: Option<f64>,
    /// Grid stop in Hz (default f0 + 1.5*bw)
    #[arg(long)]
    fstop: Option<f64>,
    /// Grid point count
    #[arg(long, default_value_t = 1001)]
    points: usize,
    /// Data format for Touchstone output
    #[arg(long, value_enum, ignore_case = true, default_value_t = CliFormat::Ma)]
    format: CliFormat,
    /// Output path (.csv or .s2p)
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    /// What to extract
    #[arg(value_enum)]
    kind: ExtractKind,
    /// Input Touchstone file
    #[arg(long = "in")]
    input: PathBuf,
    /// Matrix JSON (required for qu)
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Plan center frequency in Hz
    #[arg(long)]
    f0: Option<f64>,
    /// Plan absolute bandwidth in Hz
    #[arg(long)]
    bw: Option<f64>,
    /// Band-edge drop from the midband return loss, in dB
    #[arg(long = "edge-db", default_value_t = 3.0)]
    edge_db: f64,
    /// Spurious-band detection threshold in dB
    #[arg(long = "spur-db", default_value_t = -20.0, allow_hyphen_values = true)]
    spur_db: f64,
    /// Output report path (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExtractKind {
    /// Inter-resonator coupling from an even/odd split
    Kij,
    /// External Q from the reflection group-delay peak
    Qext,
    /// Unloaded Q from midband insertion loss against a matrix model
    Qu,
    /// Band edges, bandwidth, zeros, and spurious-free range
    Band,
}

#[derive(Args)]
struct FitArgs {
    /// Target Touchstone file
    #[arg(long)]
    target: PathBuf,
    /// Topology mask: mask JSON path, or the fig7/transversal aliases
    #[arg(long)]
    mask: String,
    /// Initial matrix JSON
    #[arg(long)]
    init: PathBuf,
    /// Plan center frequency in Hz (falls back to the init file's plan)
    #[arg(long)]
    f0: Option<f64>,
    /// Plan absolute bandwidth in Hz (falls back to the init file's plan)
    #[arg(long)]
    bw: Option<f64>,
    /// Multistart seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeded starts
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Convergence tolerance on the fit cost
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap per start
    #[arg(long = "max-iters", default_value_t = 5000)]
    max_iters: usize,
    /// Output fit JSON path
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    /// Input sweep (.s2p or .csv)
    #[arg(long = "in")]
    input: PathBuf,
    /// Output sweep (.s2p or .csv)
    #[arg(long = "out")]
    output: PathBuf,
    /// Data format for Touchstone output
    #[arg(long, value_enum, ignore_case = true, default_value_t = CliFormat::Ma)]
    format: CliFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliFormat {
    Ri,
    Ma,
    Db,
}

impl From<CliFormat> for TsFormat {
    fn from(f: CliFormat) -> Self {
        match f {
            CliFormat::Ri => TsFormat::Ri,
            CliFormat::Ma => TsFormat::Ma,
            CliFormat::Db => TsFormat::Db,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.cmd {
        Cmd::Synth(args) => cmd_synth(args),
        Cmd::Respond(args) => cmd_respond(args),
        Cmd::Extract(args) => cmd_extract(args),
        Cmd::Fit(args) => cmd_fit(args),
        Cmd::Convert(args) => cmd_convert(args),
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn plan_from(
    f0: Option<f64>,
    bw: Option<f64>,
    fallback: Option<FrequencyPlan>,
) -> Result<FrequencyPlan, String> {
    match (f0, bw) {
        (Some(f0), Some(bw)) => FrequencyPlan::new(f0, bw).map_err(|e| e.to_string()),
        (None, None) => fallback.ok_or_else(|| {
            "no frequency plan: pass --f0 and --bw or use a matrix file carrying a plan".to_string()
        }),
        _ => Err("--f0 and --bw must be given together".to_string()),
    }
}

fn load_mask(spec: &str, order: usize) -> Result<TopologyMask, String> {
    match spec {
        "transversal" => Ok(TopologyMask::transversal(order)),
        "fig7" | "parallel4" => {
            if order != 4 {
                return Err(format!(
                    "the fig7 topology is 4th order, matrix has order {order}"
                ));
            }
            Ok(TopologyMask::parallel_path_order4())
        }
        path => {
            let mask = read_mask_json(&read_file(Path::new(path))?).map_err(|e| e.to_string())?;
            if mask.order() != order {
                return Err(format!(
                    "mask order {} does not match order {order}",
                    mask.order()
                ));
            }
            Ok(mask)
        }
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), String> {
    let plan = match (args.f0, args.bw) {
        (Some(f0), Some(bw)) => Some(FrequencyPlan::new(f0, bw).map_err(|e| e.to_string())?),
        (None, None) => None,
        _ => return Err("--f0 and --bw must be given together".to_string()),
    };
    let mut tz: Vec<f64> = args.tz_omega.clone();
    if !args.tz_f.is_empty() {
        let plan = plan
            .as_ref()
            .ok_or("--tz-f requires --f0 and --bw to map into the lowpass domain")?;
        for &f in &args.tz_f {
            tz.push(plan.normalized_frequency(f).map_err(|e| e.to_string())?);
        }
    }
    let cp = synthesize_polynomials(args.order, args.rl, &tz).map_err(|e| e.to_string())?;
    let transversal = transversal_matrix(&cp).map_err(|e| e.to_string())?;
    let matrix = if args.topology == "transversal" {
        transversal
    } else {
        let mask = load_mask(&args.topology, args.order)?;
        reconfigure(&transversal, &mask).map_err(|e| e.to_string())?
    };
    write_file(&args.output, &write_matrix_json(&matrix, plan.as_ref()))
}

fn load_matrix(path: &Path) -> Result<(CouplingMatrix, Option<FrequencyPlan>), String> {
    read_matrix_json(&read_file(path)?).map_err(|e| e.to_string())
}

fn cmd_respond(args: RespondArgs) -> Result<(), String> {
    let (matrix, file_plan) = load_matrix(&args.matrix)?;
    let plan = plan_from(args.f0, args.bw, file_plan)?;
    if args.points < 3 {
        return Err("--points must be at least 3".to_string());
    }
    let grid = match (args.fstart, args.fstop) {
        (Some(lo), Some(hi)) => {
            if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi <= lo {
                return Err("grid must satisfy 0 < fstart < fstop".to_string());
            }
            linspace(lo, hi, args.points)
        }
        (None, None) => default_grid(&plan, args.points),
        _ => return Err("--fstart and --fstop must be given together".to_string()),
    };
    let loss = if args.qu > 0.0 {
        LossSpec::quality_factor(args.qu).map_err(|e| e.to_string())?
    } else {
        LossSpec::Lossless
    };
    let sweep = sparams(&matrix, &plan, &grid, loss).map_err(|e| e.to_string())?;
    write_sweep(&args.output, &sweep, args.format)
}

fn write_sweep(path: &Path, sweep: &SParamSweep, format: CliFormat) -> Result<(), String> {
    match extension(path)? {
        "csv" => write_file(path, &write_csv(sweep).map_err(|e| e.to_string())?),
        "s2p" => {
            let opts = TouchstoneOptions {
                format: format.into(),
                ..Default::default()
            };
            write_file(path, &write_touchstone(sweep, &opts))
        }
        other => Err(format!(
            "unsupported output extension .{other} (use .csv or .s2p)"
        )),
    }
}

fn extension(path: &Path) -> Result<&str, String> {
    path.extension()
        .and_then(|e| e.to_str())
        .ok_or_else(|| format!("{} has no file extension", path.display()))
}

fn cmd_extract(args: ExtractArgs) -> Result<(), String> {
    let sweep = parse_touchstone(&read_file(&args.input)?).map_err(|e| e.to_string())?;
    let text = match args.kind {
        ExtractKind::Kij => {
            let (fa, fb) = find_even_odd_peaks(&sweep).map_err(|e| e.to_string())?;
            let k = extract_k_even_odd(fa, fb).map_err(|e| e.to_string())?;
            let plan = match (args.f0, args.bw) {
                (Some(f0), Some(bw)) => {
                    Some(FrequencyPlan::new(f0, bw).map_err(|e| e.to_string())?)
                }
                (None, None) => None,
                _ => return Err("--f0 and --bw must be given together".to_string()),
            };
            let report = ExtractionReport {
                k: Some(k),
                m_normalized: plan.as_ref().map(|p| normalize_coupling(p, k)),
                diagnostics: format!(
                    "even/odd peaks at {:.6e} Hz and {:.6e} Hz",
                    fa.min(fb),
                    fa.max(fb)
                ),
                ..Default::default()
            };
            to_json(&report)?
        }
        ExtractKind::Qext => {
            let f0 = args
                .f0
                .ok_or("--f0 (resonance frequency) is required for qext")?;
            let q = extract_qext_group_delay(&sweep, f0).map_err(|e| e.to_string())?;
            let report = ExtractionReport {
                q_ext: Some(q),
                diagnostics: "reflection group-delay peak, singly terminated".into(),
                ..Default::default()
            };
            to_json(&report)?
        }
        ExtractKind::Qu => {
            let matrix_path = args.matrix.as_ref().ok_or("--matrix is required for qu")?;
            let (matrix, file_plan) = load_matrix(matrix_path)?;
            let plan = plan_from(args.f0, args.bw, file_plan)?;
            let qu = extract_qu(&sweep, &matrix, &plan).map_err(|e| e.to_string())?;
            let report = ExtractionReport {
                q_u: Some(qu),
                diagnostics: "midband insertion-loss match against the lossy model".into(),
                ..Default::default()
            };
            to_json(&report)?
        }
        ExtractKind::Band => {
            let file_plan = match &args.matrix {
                Some(p) => load_matrix(p)?.1,
                None => None,
            };
            let plan = plan_from(args.f0, args.bw, file_plan)?;
            let bm = band_metrics(&sweep, &plan, args.edge_db, args.spur_db)
                .map_err(|e| e.to_string())?;
            to_json(&bm)?
        }
    };
    match &args.output {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| e.to_string())
}

fn cmd_fit(args: FitArgs) -> Result<(), String> {
    let sweep = parse_touchstone(&read_file(&args.target)?).map_err(|e| e.to_string())?;
    let (initial, file_plan) = load_matrix(&args.init)?;
    let plan = plan_from(args.f0, args.bw, file_plan)?;
    let mask = load_mask(&args.mask, initial.order())?;
    let problem = FitProblem {
        mask,
        initial,
        plan,
        target: FitTarget::Sweep(sweep),
        weights: Weights::default(),
        bounds: None,
    };
    let threads = std::env::var("XCOUPLER_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1);
    let options = FitOptions {
        max_iters: args.max_iters,
        tol: args.tol,
        multistart_count: args.starts,
        seed: args.seed,
        threads,
    };
    let result = fit_matrix(&problem, &options).map_err(|e| e.to_string())?;
    write_file(&args.output, &write_fit_json(&result, Some(&plan)))
}

fn cmd_convert(args: ConvertArgs) -> Result<(), String> {
    let text = read_file(&args.input)?;
    let sweep = match extension(&args.input)? {
        "s2p" => parse_touchstone(&text).map_err(|e| e.to_string())?,
        "csv" => read_csv(&text).map_err(|e| e.to_string())?,
        other => {
            return Err(format!(
                "unsupported input extension .{other} (use .csv or .s2p)"
            ))
        }
    };
    write_sweep(&args.output, &sweep, args.format)
}
