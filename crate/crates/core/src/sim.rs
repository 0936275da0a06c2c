//! Batch driver: run a checkerboard circuit through the MERA gate by gate,
//! accumulate the fidelity product, and persist the results.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::checkerboard_circuit;
use crate::error::{Error, Result};
use crate::mera::{MeraNetwork, DENSE_CAP};
use crate::oracle::{exact_fidelity, run_dense, DenseState};
use crate::stiefel::AdamParams;
use crate::update::{apply_gate, initialize_optimized, GateUpdateOptions, UpdateMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Exact product state built directly.
    Analytic,
    /// Random network driven toward `|0...0>` by optimization.
    Optimized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub qubits: usize,
    pub chi: usize,
    pub layers: usize,
    pub seed: u64,
    pub adam: AdamParams,
    /// Optimizer iteration budget per gate.
    pub iterations: usize,
    pub convergence_threshold: f64,
    pub patience: usize,
    pub update_mode: UpdateMode,
    pub init: InitMode,
    pub init_iterations: usize,
    pub oracle_check: bool,
    pub deterministic: bool,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let gate = GateUpdateOptions::default();
        RunConfig {
            qubits: 9,
            chi: 4,
            layers: 1,
            seed: 0,
            adam: gate.adam,
            iterations: gate.max_iterations,
            convergence_threshold: gate.convergence_threshold,
            patience: gate.patience,
            update_mode: gate.mode,
            init: InitMode::Analytic,
            init_iterations: 2000,
            oracle_check: false,
            deterministic: true,
            out: None,
            format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    /// Number of MERA levels `M` with `qubits = 3^M`.
    pub fn levels(&self) -> Result<usize> {
        let mut n = self.qubits;
        let mut m = 0;
        while n > 1 && n % 3 == 0 {
            n /= 3;
            m += 1;
        }
        if n != 1 || m == 0 {
            return Err(Error::Config(format!(
                "qubit count must be a power of 3 (at least 3), got {}",
                self.qubits
            )));
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.levels()?;
        if self.chi < 2 {
            return Err(Error::Config(format!("chi must be at least 2, got {}", self.chi)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iteration budget must be positive".into()));
        }
        if self.init == InitMode::Optimized && self.init_iterations == 0 {
            return Err(Error::Config("initialization budget must be positive".into()));
        }
        let p = self.adam;
        if !(p.lr > 0.0 && p.lr.is_finite()) || !(0.0..1.0).contains(&p.beta1) || !(0.0..1.0).contains(&p.beta2) {
            return Err(Error::Config(format!("invalid optimizer parameters {p:?}")));
        }
        if self.oracle_check && self.qubits > DENSE_CAP {
            return Err(Error::Config(format!(
                "oracle check needs at most {DENSE_CAP} qubits, got {}",
                self.qubits
            )));
        }
        Ok(())
    }

    pub fn gate_options(&self) -> GateUpdateOptions {
        GateUpdateOptions {
            max_iterations: self.iterations,
            adam: self.adam,
            convergence_threshold: self.convergence_threshold,
            patience: self.patience,
            keep_best: true,
            mode: self.update_mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateEntry {
    pub index: usize,
    pub pair: [usize; 2],
    pub fidelity: f64,
    pub initial_fidelity: f64,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub mode: InitMode,
    /// `sum_i |<up|rho_i|up>|^2`, equal to `n` for the analytic state.
    pub objective: f64,
    pub min_qubit_fidelity: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub config: RunConfig,
    pub init: InitReport,
    pub gates: Vec<GateEntry>,
    /// Actual gate count `G = k (n - 1)`.
    pub gate_count: usize,
    /// `n k`, the nominal count; `average_gate_fidelity` uses `gate_count`.
    pub nominal_gate_count: usize,
    /// Sequential product of the per-gate fidelities.
    pub fidelity_product: f64,
    /// `fidelity_product^(1/G)`, or 1 without gates.
    pub average_gate_fidelity: f64,
    pub error_rate: f64,
    /// `|<psi_exact|psi_mera>|^2` when the dense check ran.
    pub exact_fidelity: Option<f64>,
    pub max_constraint_defect: f64,
    pub seconds: f64,
}

/// `(product, f, epsilon)` from per-gate fidelities.
pub fn summarize(fidelities: impl IntoIterator<Item = f64>) -> (f64, f64, f64) {
    let mut product = 1.0;
    let mut count = 0usize;
    for f in fidelities {
        product *= f;
        count += 1;
    }
    let average = if count == 0 {
        1.0
    } else {
        product.powf(1.0 / count as f64)
    };
    (product, average, 1.0 - average)
}

impl SimulationRecord {
    fn new(config: RunConfig, init: InitReport, gate_count: usize) -> Self {
        SimulationRecord {
            nominal_gate_count: config.qubits * config.layers,
            config,
            init,
            gates: Vec::with_capacity(gate_count),
            gate_count,
            fidelity_product: 1.0,
            average_gate_fidelity: 1.0,
            error_rate: 0.0,
            exact_fidelity: None,
            max_constraint_defect: 0.0,
            seconds: 0.0,
        }
    }

    fn refresh(&mut self) {
        let (p, f, e) = summarize(self.gates.iter().map(|g| g.fidelity));
        self.fidelity_product = p;
        self.average_gate_fidelity = f;
        self.error_rate = e;
    }

    /// Checks the stored aggregates against the per-gate entries, bit for bit.
    pub fn check_bookkeeping(&self) -> Result<()> {
        let (p, f, e) = summarize(self.gates.iter().map(|g| g.fidelity));
        let ok = self.gates.len() == self.gate_count
            && p.to_bits() == self.fidelity_product.to_bits()
            && f.to_bits() == self.average_gate_fidelity.to_bits()
            && e.to_bits() == self.error_rate.to_bits();
        if ok {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "stored aggregates ({}, {}, {}) do not match entries ({p}, {f}, {e})",
                self.fidelity_product, self.average_gate_fidelity, self.error_rate
            )))
        }
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.gates.iter().map(|g| g.fidelity).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn initial_network(cfg: &RunConfig, levels: usize) -> Result<(MeraNetwork, InitReport)> {
    match cfg.init {
        InitMode::Analytic => Ok((
            MeraNetwork::build_product_state(levels, cfg.chi)?,
            InitReport {
                mode: InitMode::Analytic,
                objective: cfg.qubits as f64,
                min_qubit_fidelity: 1.0,
                iterations: 0,
            },
        )),
        InitMode::Optimized => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            // keep the circuit's stream untouched
            rng.set_stream(1);
            let start = MeraNetwork::build_random(levels, cfg.chi, &mut rng)?;
            let opts = GateUpdateOptions {
                max_iterations: cfg.init_iterations,
                ..cfg.gate_options()
            };
            let (net, out) = initialize_optimized(&start, &opts)?;
            Ok((
                net,
                InitReport {
                    mode: InitMode::Optimized,
                    objective: out.objective,
                    min_qubit_fidelity: out.per_qubit.iter().copied().fold(f64::INFINITY, f64::min),
                    iterations: out.iterations,
                },
            ))
        }
    }
}

pub fn run_simulation(cfg: &RunConfig) -> Result<SimulationRecord> {
    run_simulation_with(cfg, &mut |_| {})
}

/// As [`run_simulation`], calling `on_gate` after every gate.
pub fn run_simulation_with(cfg: &RunConfig, on_gate: &mut dyn FnMut(&GateEntry)) -> Result<SimulationRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let levels = cfg.levels()?;
    let circuit = checkerboard_circuit(cfg.qubits, cfg.layers, cfg.seed)?;
    let (mut network, init) = initial_network(cfg, levels)?;
    let reference = if cfg.oracle_check {
        Some(DenseState::from_network(&network)?)
    } else {
        None
    };
    let opts = cfg.gate_options();
    let mut record = SimulationRecord::new(cfg.clone(), init, circuit.gate_count());

    for (index, gate) in circuit.gates.iter().enumerate() {
        let t0 = Instant::now();
        let (next, outcome) = match apply_gate(&network, &gate.matrix, gate.pair, &opts) {
            Ok(r) => r,
            Err(e @ Error::NonFinite(_)) => {
                record.refresh();
                record.seconds = start.elapsed().as_secs_f64();
                return Err(Error::Aborted {
                    reason: format!("gate {index}: {e}"),
                    record: Box::new(record),
                });
            }
            Err(e) => return Err(e),
        };
        let entry = GateEntry {
            index,
            pair: [gate.pair.0, gate.pair.1],
            fidelity: outcome.fidelity,
            initial_fidelity: outcome.initial_fidelity,
            iterations: outcome.iterations,
            seconds: t0.elapsed().as_secs_f64(),
        };
        on_gate(&entry);
        record.gates.push(entry);
        network = next;
    }
    record.refresh();
    record.max_constraint_defect = network.max_constraint_defect();
    if let Some(initial) = reference {
        let exact = run_dense(&circuit, &initial)?;
        record.exact_fidelity = Some(exact_fidelity(&exact, &network)?);
    }
    record.seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub chis: Vec<usize>,
    pub layers: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.chis.is_empty() || self.layers.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("sweep grid has an empty axis".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<(usize, usize, u64)> {
        let mut cells = Vec::new();
        for &chi in &self.chis {
            for &k in &self.layers {
                for &seed in &self.seeds {
                    cells.push((chi, k, seed));
                }
            }
        }
        cells.sort_unstable();
        cells.dedup();
        cells
    }
}

/// Machine-readable form of an [`Error`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub partial: Option<Box<SimulationRecord>>,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        ErrorRecord {
            kind: e.kind().to_string(),
            message: e.to_string(),
            partial: match e {
                Error::Aborted { record, .. } => Some(record.clone()),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub chi: usize,
    pub layers: usize,
    pub seed: u64,
    pub record: Option<SimulationRecord>,
    pub error: Option<ErrorRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn records(&self) -> impl Iterator<Item = &SimulationRecord> {
        self.cells.iter().filter_map(|c| c.record.as_ref())
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    /// Median fidelity product over seeds of one `(chi, k)` cell.
    pub fn median_fidelity(&self, chi: usize, layers: usize) -> Option<f64> {
        median(
            self.cells
                .iter()
                .filter(|c| c.chi == chi && c.layers == layers)
                .filter_map(|c| c.record.as_ref().map(|r| r.fidelity_product))
                .collect(),
        )
    }
}

pub fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    })
}

/// Runs every `(chi, k, seed)` cell. Cells run in parallel unless
/// `base.deterministic` is set; each cell is sequential either way, so the
/// table is the same.
pub fn run_sweep(base: &RunConfig, grid: &SweepGrid) -> Result<SweepTable> {
    grid.validate()?;
    let run_cell = |&(chi, layers, seed): &(usize, usize, u64)| {
        let cfg = RunConfig {
            chi,
            layers,
            seed,
            ..base.clone()
        };
        match run_simulation(&cfg) {
            Ok(r) => SweepCell {
                chi,
                layers,
                seed,
                record: Some(r),
                error: None,
            },
            Err(e) => SweepCell {
                chi,
                layers,
                seed,
                record: None,
                error: Some(ErrorRecord::from(&e)),
            },
        }
    };
    let cells = grid.cells();
    let cells = if base.deterministic {
        cells.iter().map(run_cell).collect()
    } else {
        cells.par_iter().map(run_cell).collect()
    };
    Ok(SweepTable { cells })
}

/// One CSV row per gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRow {
    pub qubits: usize,
    pub chi: usize,
    pub layers: usize,
    pub seed: u64,
    pub index: usize,
    pub q0: usize,
    pub q1: usize,
    pub fidelity: f64,
    pub initial_fidelity: f64,
    pub iterations: usize,
    pub seconds: f64,
}

pub fn gate_rows(record: &SimulationRecord) -> Vec<GateRow> {
    let c = &record.config;
    record
        .gates
        .iter()
        .map(|g| GateRow {
            qubits: c.qubits,
            chi: c.chi,
            layers: c.layers,
            seed: c.seed,
            index: g.index,
            q0: g.pair[0],
            q1: g.pair[1],
            fidelity: g.fidelity,
            initial_fidelity: g.initial_fidelity,
            iterations: g.iterations,
            seconds: g.seconds,
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_record(path: &Path) -> Result<SimulationRecord> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn read_sweep(path: &Path) -> Result<SweepTable> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_csv<'a>(path: &Path, records: impl IntoIterator<Item = &'a SimulationRecord>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        for row in gate_rows(r) {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<GateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Paths written for `out` under `format`: `<out>.json` and/or `<out>.csv`
/// (any extension on `out` is replaced).
pub fn output_paths(out: &Path, format: OutputFormat) -> (Option<PathBuf>, Option<PathBuf>) {
    let json = matches!(format, OutputFormat::Json | OutputFormat::Both).then(|| out.with_extension("json"));
    let csv = matches!(format, OutputFormat::Csv | OutputFormat::Both).then(|| out.with_extension("csv"));
    (json, csv)
}

pub fn write_record(out: &Path, format: OutputFormat, record: &SimulationRecord) -> Result<Vec<PathBuf>> {
    let (json, csv) = output_paths(out, format);
    let mut written = Vec::new();
    if let Some(p) = json {
        write_json(&p, record)?;
        written.push(p);
    }
    if let Some(p) = csv {
        write_csv(&p, [record])?;
        written.push(p);
    }
    Ok(written)
}

pub fn write_sweep(out: &Path, format: OutputFormat, table: &SweepTable) -> Result<Vec<PathBuf>> {
    let (json, csv) = output_paths(out, format);
    let mut written = Vec::new();
    if let Some(p) = json {
        write_json(&p, table)?;
        written.push(p);
    }
    if let Some(p) = csv {
        write_csv(&p, table.records())?;
        written.push(p);
    }
    Ok(written)
}
