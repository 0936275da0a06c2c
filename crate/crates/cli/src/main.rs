//! `merasim`: run checkerboard circuits through a ternary MERA.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use mera_core::sim::{
    run_simulation_with, run_sweep, write_record, write_sweep, ErrorRecord, InitMode, OutputFormat, RunConfig,
    SweepGrid,
};
use mera_core::update::UpdateMode;
use mera_core::{AdamParams, Error};
use serde::Serialize;

const WORKERS_ENV: &str = "MERASIM_WORKERS";

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Init {
    Analytic,
    Optimized,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Adam,
    Linearized,
    Hybrid,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

/// Simulate a random checkerboard circuit on 3^M qubits with a ternary MERA
/// and report the per-gate fidelity product.
#[derive(Debug, Parser)]
#[command(name = "merasim", version)]
struct Args {
    /// Number of qubits, a power of 3.
    #[arg(long, default_value_t = 9)]
    qubits: usize,
    /// Bond dimension cap.
    #[arg(long, default_value_t = 4)]
    chi: usize,
    /// Circuit depth in checkerboard layers.
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeds for a sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Optimizer iteration budget per gate.
    #[arg(long, default_value_t = 500)]
    iters: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    /// Stop a gate update after this many iterations without progress.
    #[arg(long, default_value_t = 50)]
    patience: usize,
    #[arg(long, value_enum, default_value_t = Mode::Adam)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Init::Analytic)]
    init: Init,
    /// Iteration budget of the optimized initialization.
    #[arg(long, default_value_t = 2000)]
    init_iters: usize,
    /// Also run the dense simulator and report the exact fidelity (n <= 12).
    #[arg(long)]
    oracle_check: bool,
    /// Sweep over these bond dimensions.
    #[arg(long, value_delimiter = ',')]
    sweep_chi: Option<Vec<usize>>,
    /// Sweep over these depths.
    #[arg(long, value_delimiter = ',')]
    sweep_layers: Option<Vec<usize>>,
    /// Output path stem; `.json` and/or `.csv` is appended.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Run sweep cells one after another.
    #[arg(long)]
    deterministic: bool,
    /// Print one line per gate to stderr.
    #[arg(long)]
    progress: bool,
}

impl Args {
    fn config(&self) -> RunConfig {
        RunConfig {
            qubits: self.qubits,
            chi: self.chi,
            layers: self.layers,
            seed: self.seed,
            adam: AdamParams {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                ..AdamParams::default()
            },
            iterations: self.iters,
            patience: self.patience,
            update_mode: match self.mode {
                Mode::Adam => UpdateMode::Adam,
                Mode::Linearized => UpdateMode::Linearized,
                Mode::Hybrid => UpdateMode::Hybrid,
            },
            init: match self.init {
                Init::Analytic => InitMode::Analytic,
                Init::Optimized => InitMode::Optimized,
            },
            init_iterations: self.init_iters,
            oracle_check: self.oracle_check,
            deterministic: self.deterministic,
            out: self.out.clone(),
            format: match self.format {
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
                Format::Both => OutputFormat::Both,
            },
            ..RunConfig::default()
        }
    }

    fn is_sweep(&self) -> bool {
        self.sweep_chi.is_some() || self.sweep_layers.is_some() || self.seeds.is_some()
    }
}

#[derive(Serialize)]
struct RunSummary {
    qubits: usize,
    chi: usize,
    layers: usize,
    seed: u64,
    gate_count: usize,
    fidelity_product: f64,
    average_gate_fidelity: f64,
    error_rate: f64,
    exact_fidelity: Option<f64>,
    seconds: f64,
    outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct SweepSummary {
    cells: usize,
    failures: usize,
    medians: Vec<MedianRow>,
    outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct MedianRow {
    chi: usize,
    layers: usize,
    median_fidelity_product: Option<f64>,
}

fn configure_workers() -> Result<(), Error> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

fn run(args: &Args) -> Result<String, Error> {
    configure_workers()?;
    let cfg = args.config();
    if args.is_sweep() {
        let grid = SweepGrid {
            chis: args.sweep_chi.clone().unwrap_or_else(|| vec![args.chi]),
            layers: args.sweep_layers.clone().unwrap_or_else(|| vec![args.layers]),
            seeds: args.seeds.clone().unwrap_or_else(|| vec![args.seed]),
        };
        cfg.validate()?;
        let table = run_sweep(&cfg, &grid)?;
        let outputs = match &args.out {
            Some(out) => write_sweep(out, cfg.format, &table)?,
            None => Vec::new(),
        };
        let mut medians = Vec::new();
        for &chi in &grid.chis {
            for &layers in &grid.layers {
                medians.push(MedianRow {
                    chi,
                    layers,
                    median_fidelity_product: table.median_fidelity(chi, layers),
                });
            }
        }
        let summary = SweepSummary {
            cells: table.cells.len(),
            failures: table.failures(),
            medians,
            outputs,
        };
        return Ok(serde_json::to_string_pretty(&summary)?);
    }

    let progress = args.progress;
    let result = run_simulation_with(&cfg, &mut |g| {
        if progress {
            eprintln!(
                "gate {:>4} ({}, {}) fidelity {:.12} iterations {:>5} {:.3}s",
                g.index, g.pair[0], g.pair[1], g.fidelity, g.iterations, g.seconds
            );
        }
    });
    let record = match result {
        Ok(r) => r,
        Err(Error::Aborted { reason, record }) => {
            // keep what was computed before the abort
            if let Some(out) = &args.out {
                write_record(out, cfg.format, &record)?;
            }
            return Err(Error::Aborted { reason, record });
        }
        Err(e) => return Err(e),
    };
    let outputs = match &args.out {
        Some(out) => write_record(out, cfg.format, &record)?,
        None => Vec::new(),
    };
    let summary = RunSummary {
        qubits: cfg.qubits,
        chi: cfg.chi,
        layers: cfg.layers,
        seed: cfg.seed,
        gate_count: record.gate_count,
        fidelity_product: record.fidelity_product,
        average_gate_fidelity: record.average_gate_fidelity,
        error_rate: record.error_rate,
        exact_fidelity: record.exact_fidelity,
        seconds: record.seconds,
        outputs,
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = ErrorRecord::from(&e);
            let json = serde_json::to_string(&record)
                .unwrap_or_else(|_| format!("{{\"kind\":\"{}\",\"message\":\"unprintable\"}}", e.kind()));
            eprintln!("{json}");
            ExitCode::FAILURE
        }
    }
}
