//! Command-line frontend: evaluate parameter points, run the concurrence
//! maximization, sweep the b=2 analytic landscape, emit concurrence-vs-purity
//! data, and run the randomized verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage/input error,
//! 3 numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use fcs::entanglement::{analytic_assistance_b2, analytic_concurrence_b2, mems_point, werner_point};
use fcs::error::OptimizerError;
use fcs::optimizer::{multi_start_with, Objective, OptimizationResult};
use fcs::{report, verify, AnnealingConfig, ParameterVector, StateReport, WOOTTERS_BOUND};

/// Schema-versioned envelope for every JSON artifact the tool writes.
#[derive(Debug, Serialize, Deserialize)]
struct RunRecord {
    schema_version: u32,
    command: String,
    inputs: serde_json::Value,
    outputs: serde_json::Value,
    timestamp: String,
    version: String,
}

impl RunRecord {
    fn new(command: &str, inputs: serde_json::Value, outputs: serde_json::Value) -> Self {
        Self {
            schema_version: 1,
            command: command.to_string(),
            inputs,
            outputs,
            timestamp: chrono::Utc::now().to_rfc3339(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fcs",
    version,
    about = "Finitely correlated qubit-chain states: entanglement evaluation and maximization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct AnnealingFlags {
    /// Step-adjustment loops per temperature stage.
    #[arg(long, default_value_t = 20)]
    nt: usize,
    /// Coordinate sweeps per step adjustment.
    #[arg(long, default_value_t = 10)]
    ns: usize,
    /// Temperature reduction factor.
    #[arg(long, default_value_t = 0.75)]
    rt: f64,
    /// Convergence window length.
    #[arg(long, default_value_t = 5)]
    neps: usize,
    /// Convergence tolerance on the stage values.
    #[arg(long, default_value_t = 1e-10)]
    eps: f64,
    /// Initial temperature.
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    /// Evaluation budget per start.
    #[arg(long, default_value_t = 200_000)]
    max_evals: u64,
    /// Base RNG seed; start i uses seed + i.
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    /// Record the best-so-far trace in the result.
    #[arg(long)]
    trace: bool,
}

impl AnnealingFlags {
    fn config(&self) -> AnnealingConfig {
        AnnealingConfig {
            nt: self.nt,
            ns: self.ns,
            rt: self.rt,
            neps: self.neps,
            eps: self.eps,
            t0: self.t0,
            max_evals: self.max_evals,
            seed: self.seed,
            trace: self.trace,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one parameter point and report all state diagnostics.
    Evaluate {
        /// JSON parameter file {"b": .., "alpha": [..], "phi": [..]} (radians).
        #[arg(long, conflicts_with_all = ["b", "alpha", "phi"])]
        params_file: Option<PathBuf>,
        /// Auxiliary dimension (inline alternative to --params-file).
        #[arg(long)]
        b: Option<usize>,
        /// Comma-separated alpha angles in radians.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Vec<f64>,
        /// Comma-separated phi angles in radians.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phi: Vec<f64>,
        /// Write the run record here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximize the nearest-neighbour concurrence for one dimension.
    Optimize {
        /// Auxiliary dimension b >= 2.
        #[arg(long)]
        b: usize,
        /// Number of independent annealing starts.
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[command(flatten)]
        annealing: AnnealingFlags,
        /// Replace the real rotation by a complex unitary (robustness probe).
        #[arg(long = "complex-R")]
        complex_r: bool,
        /// Allow a non-nilpotent generator (robustness probe).
        #[arg(long)]
        non_nilpotent: bool,
        /// Write the run record here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the b=2 closed forms over [0, pi] x [-pi/2, pi/2] into a CSV.
    ScanB2 {
        /// Points per axis (>= 2).
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect optimize/evaluate records into concurrence-vs-purity CSV data.
    ReportCp {
        /// Run-record JSON files produced by `optimize` or `evaluate`.
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the randomized self-consistency suite.
    Verify {
        /// Dimensions to draw from.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
        b: Vec<usize>,
        /// Random draws per dimension.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long, default_value_t = 20240817)]
        seed: u64,
    },
}

const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn fail(code: u8, message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn emit(record: &RunRecord, out: Option<&PathBuf>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(record).map_err(|e| e.to_string())?;
    match out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Evaluate {
            params_file,
            b,
            alpha,
            phi,
            out,
        } => cmd_evaluate(params_file, b, alpha, phi, out),
        Command::Optimize {
            b,
            starts,
            annealing,
            complex_r,
            non_nilpotent,
            out,
        } => cmd_optimize(b, starts, &annealing, complex_r, non_nilpotent, out),
        Command::ScanB2 { grid, out } => cmd_scan_b2(grid, &out),
        Command::ReportCp { results, out } => cmd_report_cp(&results, &out),
        Command::Verify { b, draws, seed } => cmd_verify(&b, draws, seed),
    }
}

fn load_params(
    params_file: Option<PathBuf>,
    b: Option<usize>,
    alpha: Vec<f64>,
    phi: Vec<f64>,
) -> Result<ParameterVector<f64>, String> {
    match (params_file, b) {
        (Some(path), None) => {
            let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
        (None, Some(b)) => ParameterVector::new(b, alpha, phi).map_err(|e| e.to_string()),
        _ => Err("provide either --params-file or --b with --alpha/--phi".into()),
    }
}

fn cmd_evaluate(
    params_file: Option<PathBuf>,
    b: Option<usize>,
    alpha: Vec<f64>,
    phi: Vec<f64>,
    out: Option<PathBuf>,
) -> ExitCode {
    let params = match load_params(params_file, b, alpha, phi) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let rep = match report::evaluate(&params) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_NUMERIC, &e.to_string()),
    };
    let record = RunRecord::new(
        "evaluate",
        json!({ "params": params }),
        serde_json::to_value(&rep).expect("report serializes"),
    );
    match emit(&record, out.as_ref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_INPUT, &e),
    }
}

fn cmd_optimize(
    b: usize,
    starts: usize,
    annealing: &AnnealingFlags,
    complex_r: bool,
    non_nilpotent: bool,
    out: Option<PathBuf>,
) -> ExitCode {
    if b < 2 {
        return fail(EXIT_INPUT, "b must be at least 2");
    }
    let config = annealing.config();
    let objective = Objective::with_probes(b, complex_r, non_nilpotent);
    let result = match multi_start_with(&objective, &config, starts) {
        Ok(r) => r,
        Err(e @ OptimizerError::BadConfig { .. }) => return fail(EXIT_INPUT, &e.to_string()),
        Err(e) => return fail(EXIT_NUMERIC, &e.to_string()),
    };
    let rel = 100.0 * (WOOTTERS_BOUND - result.concurrence) / WOOTTERS_BOUND;
    println!(
        "b={b}  concurrence={:.6}  relative difference from Wootters' bound: {rel:.2}%",
        result.concurrence
    );
    let record = RunRecord::new(
        "optimize",
        json!({
            "b": b,
            "starts": starts,
            "annealing": config,
            "complex_r": complex_r,
            "non_nilpotent": non_nilpotent,
        }),
        serde_json::to_value(&result).expect("result serializes"),
    );
    match emit(&record, out.as_ref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_INPUT, &e),
    }
}

fn cmd_scan_b2(grid: usize, out: &PathBuf) -> ExitCode {
    if grid < 2 {
        return fail(EXIT_INPUT, "grid size must be at least 2");
    }
    let mut writer = match csv::Writer::from_path(out) {
        Ok(w) => w,
        Err(e) => return fail(EXIT_INPUT, &format!("{}: {e}", out.display())),
    };
    let write = |w: &mut csv::Writer<fs::File>| -> csv::Result<()> {
        w.write_record(["alpha1", "phi1", "concurrence", "assistance"])?;
        let last = (grid - 1) as f64;
        for i in 0..grid {
            let alpha1 = std::f64::consts::PI * i as f64 / last;
            for j in 0..grid {
                let phi1 = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * j as f64 / last;
                w.write_record(&[
                    alpha1.to_string(),
                    phi1.to_string(),
                    analytic_concurrence_b2(alpha1, phi1).to_string(),
                    analytic_assistance_b2(alpha1, phi1).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    };
    match write(&mut writer) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_INPUT, &format!("{}: {e}", out.display())),
    }
}

/// Extracts the `(purity12, concurrence)` point from either kind of record.
fn cp_point(record: &RunRecord) -> Result<(f64, f64), String> {
    match record.command.as_str() {
        "optimize" => {
            let res: OptimizationResult = serde_json::from_value(record.outputs.clone())
                .map_err(|e| format!("optimize outputs: {e}"))?;
            Ok((res.purity12, res.concurrence))
        }
        "evaluate" => {
            let rep: StateReport = serde_json::from_value(record.outputs.clone())
                .map_err(|e| format!("evaluate outputs: {e}"))?;
            Ok((rep.purity12, rep.concurrence))
        }
        other => Err(format!("unsupported record command {other:?}")),
    }
}

fn cmd_report_cp(results: &[PathBuf], out: &PathBuf) -> ExitCode {
    let mut points = Vec::new();
    for path in results {
        let parsed: Result<RunRecord, String> = fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| serde_json::from_str(&text).map_err(|e| e.to_string()));
        match parsed.and_then(|record| cp_point(&record)) {
            Ok(point) => points.push(point),
            Err(e) => return fail(EXIT_INPUT, &format!("{}: {e}", path.display())),
        }
    }
    let mut writer = match csv::Writer::from_path(out) {
        Ok(w) => w,
        Err(e) => return fail(EXIT_INPUT, &format!("{}: {e}", out.display())),
    };
    let write = |w: &mut csv::Writer<fs::File>| -> Result<(), String> {
        w.write_record(["set", "purity", "concurrence"])
            .map_err(|e| e.to_string())?;
        let mut row = |set: &str, purity: f64, concurrence: f64| -> Result<(), String> {
            w.write_record(&[
                set.to_string(),
                purity.to_string(),
                concurrence.to_string(),
            ])
            .map_err(|e| e.to_string())
        };
        for &(purity, concurrence) in &points {
            row("optima", purity, concurrence)?;
        }
        const SAMPLES: usize = 200;
        for k in 0..SAMPLES {
            let q = k as f64 / (SAMPLES - 1) as f64;
            let (purity, concurrence) = mems_point(q).map_err(|e| e.to_string())?;
            row("mems", purity, concurrence)?;
            let (purity, concurrence) = werner_point(q).map_err(|e| e.to_string())?;
            row("werner", purity, concurrence)?;
        }
        // horizontal reference line of the concurrence-vs-purity diagram
        row("wootters_bound", 1.0 / 3.0, WOOTTERS_BOUND)?;
        row("wootters_bound", 1.0, WOOTTERS_BOUND)?;
        w.flush().map_err(|e| e.to_string())
    };
    match write(&mut writer) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_INPUT, &format!("{}: {e}", out.display())),
    }
}

fn cmd_verify(bs: &[usize], draws: usize, seed: u64) -> ExitCode {
    let report = match verify::run_suite(bs, draws, seed) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_NUMERIC, &e.to_string()),
    };
    for check in &report.checks {
        println!(
            "{} {:42} b={}  draws={:5}  failures={}  worst={:9.3e}  tol={:7.1e}",
            if check.passed() { "PASS" } else { "FAIL" },
            check.name,
            check.b,
            check.draws,
            check.failures,
            check.worst,
            check.tolerance
        );
    }
    println!(
        "{} draws total, {} degenerate solves skipped",
        report.total_draws, report.degenerate_draws
    );
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}
