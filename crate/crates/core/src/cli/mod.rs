//! Command-line front end: one experiment per invocation, written as a CSV
//! table plus a JSON manifest.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{Experiment, ExperimentConfig};

use crate::dynamics::{self, TimeGrid, TimeSeries};
use crate::error::{Error, Result};
use crate::estimation::{cfi_closed, single_qubit_cfi};
use crate::measurement::{
    delay_error_order, sequential_joint_prob_closed, sequential_joint_prob_exact, MeasurementRecord,
};
use crate::model::{effective_model, PulseSequence, SensorParams};
use crate::noise::{self, cfi_noisy_closed, decay_model, fit_decay_times, lindblad_solve, DecayFit};
use crate::qla::StateVector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "acsense", version, about = "Two-qubit AC field sensor simulations")]
pub struct Cli {
    pub experiment: Experiment,
    /// JSON config file; unset keys take per-experiment defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (overrides `output_path`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a config key, e.g. `--set b=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Worker threads for trajectory ensembles. Does not change results.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Column-oriented table written as CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn from_series(x_label: &str, x: &[f64], series: &[&TimeSeries]) -> Self {
        let mut columns = vec![x_label.to_string()];
        columns.extend(series.iter().map(|s| s.label.clone()));
        let rows = x
            .iter()
            .enumerate()
            .map(|(i, &t)| std::iter::once(t).chain(series.iter().map(|s| s.values[i])).collect())
            .collect();
        Self { columns, rows }
    }

    /// Header row, 17 significant digits, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write!(out, "{v:.16e}").expect("write to String");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: Experiment,
    pub version: String,
    pub seed: Option<u64>,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputFile>,
    pub results: Value,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid manifest: {e}")))
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
}

/// Computes the experiment described by a resolved config without writing
/// anything.
pub fn compute(config: &ExperimentConfig, workers: Option<usize>) -> Result<(Table, Value)> {
    let p = config.params()?;
    match config.experiment()? {
        Experiment::Dynamics => dynamics_table(config, &p),
        Experiment::DynamicsPhase => dynamics_phase_table(config, &p),
        Experiment::Fisher => fisher_table(config, &p),
        Experiment::FisherNoisy => fisher_noisy_table(config, &p),
        Experiment::Lindblad => lindblad_table(config, &p, false),
        Experiment::LindbladFit => lindblad_table(config, &p, true),
        Experiment::OuPulses => ou_pulses_table(config, &p, workers),
        Experiment::MeasureDelay => measure_delay_table(config, &p),
    }
}

/// Resolves `config` for `experiment`, runs it and writes
/// `<out>/<experiment>.csv` and `<out>/<experiment>.manifest.json`.
pub fn run(
    experiment: Experiment,
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
    workers: Option<usize>,
) -> Result<RunOutput> {
    let resolved = config.resolve(experiment)?;
    let (table, results) = compute(&resolved, workers)?;
    let dir = match (out_dir, &resolved.output_path) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;

    let csv = table.to_csv();
    let csv_name = format!("{experiment}.csv");
    let csv_path = dir.join(&csv_name);
    write_file(&csv_path, csv.as_bytes())?;

    let manifest = Manifest {
        experiment,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: resolved.seed,
        config: resolved,
        outputs: vec![OutputFile { file: csv_name, sha256: hex::encode(Sha256::digest(csv.as_bytes())) }],
        results,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let manifest_path = dir.join(format!("{experiment}.manifest.json"));
    write_file(&manifest_path, text.as_bytes())?;
    Ok(RunOutput { csv_path, manifest_path, manifest })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn error_kind(e: &Error) -> &'static str {
    if e.is_numerical() {
        "numerical"
    } else {
        "config"
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Single-line error report: `error: <kind>: <message>`.
pub fn error_line(e: &Error) -> String {
    format!("error: {}: {}", error_kind(e), e.to_string().replace('\n', " "))
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: config: {}", first.trim_start_matches("error: "));
            return EXIT_CONFIG;
        }
    };
    let outcome = ExperimentConfig::load(cli.config.as_deref(), &cli.sets, cli.seed)
        .and_then(|cfg| run(cli.experiment, &cfg, cli.out.as_deref(), cli.workers));
    match outcome {
        Ok(out) => {
            println!("{}", out.csv_path.display());
            println!("{}", out.manifest_path.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            exit_code(&e)
        }
    }
}

fn dynamics_table(c: &ExperimentConfig, p: &SensorParams) -> Result<(Table, Value)> {
    let grid = c.sample_grid()?;
    let full = dynamics::m_curve_full(p, &grid)?;
    let eff = dynamics::m_curve_effective(p, &grid);
    let nofield = TimeSeries::from_fn("m_nofield", &full.times, |t| (2.0 * p.g * t).cos());
    let results = json!({
        "coupling_scale": p.coupling_scale(),
        "max_abs_deviation": full.max_abs_diff(&eff),
        "high_frequency": p.high_frequency(),
    });
    Ok((Table::from_series("t", &full.times, &[&full, &eff, &nofield]), results))
}

fn dynamics_phase_table(c: &ExperimentConfig, p: &SensorParams) -> Result<(Table, Value)> {
    let grid = c.sample_grid()?;
    let p0 = SensorParams { phi: 0.0, ..*p };
    let mut full = dynamics::m_curve_full(p, &grid)?;
    full.label = "m_full_phase".into();
    let mut full0 = dynamics::m_curve_full(&p0, &grid)?;
    full0.label = "m_full_phase0".into();
    let eff = dynamics::m_curve_effective(&p0, &grid);
    let results = json!({
        "max_abs_deviation_phase": full.max_abs_diff(&eff),
        "max_abs_deviation_phase0": full0.max_abs_diff(&eff),
    });
    Ok((Table::from_series("t", &full.times, &[&full, &full0, &eff]), results))
}

fn fisher_table(c: &ExperimentConfig, p: &SensorParams) -> Result<(Table, Value)> {
    let times = c.sample_grid()?.sample_times();
    let two = TimeSeries::from_fn("cfi_two_qubit", &times, |t| cfi_closed(p, t));
    let one = TimeSeries::from_fn("cfi_single_qubit", &times, |t| single_qubit_cfi(p, t));
    let max = |s: &TimeSeries| s.values.iter().copied().fold(0.0_f64, f64::max);
    let results = json!({ "max_cfi_two_qubit": max(&two), "max_cfi_single_qubit": max(&one) });
    Ok((Table::from_series("t", &times, &[&two, &one]), results))
}

fn fisher_noisy_table(c: &ExperimentConfig, p: &SensorParams) -> Result<(Table, Value)> {
    let n = c.phenom()?;
    let times = c.sample_grid()?.sample_times();
    let noisy = TimeSeries::from_fn("cfi_noisy", &times, |t| cfi_noisy_closed(p, &n, t));
    let ideal = TimeSeries::from_fn("cfi_ideal", &times, |t| cfi_closed(p, t));
    let (t_max, max) =
        times
            .iter()
            .zip(&noisy.values)
            .fold((0.0, f64::NEG_INFINITY), |acc, (&t, &v)| if v > acc.1 { (t, v) } else { acc });
    let results = json!({ "max_cfi_noisy": max, "t_at_max": t_max });
    Ok((Table::from_series("t", &times, &[&noisy, &ideal]), results))
}

fn lindblad_table(c: &ExperimentConfig, p: &SensorParams, fit: bool) -> Result<(Table, Value)> {
    let lp = c.lindblad()?;
    let grid = c.sample_grid()?;
    let model = effective_model(p);
    let run = lindblad_solve(&model.hamiltonian(), &lp, &StateVector::basis(4, 0).to_density(), &grid)?;
    let plus = TimeSeries::new("p_plus", run.times.clone(), run.populations(0))?;
    let minus = TimeSeries::new("p_minus", run.times.clone(), run.populations(3))?;
    let (est1, est2) = noise::estimated_decay_times(&lp);
    if !fit {
        let rest = plus.values.iter().zip(&minus.values).map(|(a, b)| 1.0 - a - b).collect();
        let zero = TimeSeries::new("p_zero", run.times.clone(), rest)?;
        let results = json!({
            "max_trace_drift": run.max_trace_drift,
            "estimated_t1": est1,
            "estimated_t2": est2,
        });
        return Ok((Table::from_series("t", &run.times, &[&plus, &minus, &zero]), results));
    }
    let result = fit_decay_times(&plus, &minus, &model, p.g)?;
    let ag = model.a * p.g;
    let (t1, t2) = result.timescales().unwrap_or((f64::INFINITY, f64::INFINITY));
    let fit_plus = TimeSeries::from_fn("fit_plus", &run.times, |t| decay_model(t, t1, t2, ag, 1.0));
    let fit_minus = TimeSeries::from_fn("fit_minus", &run.times, |t| decay_model(t, t1, t2, ag, -1.0));
    let mut results = json!({
        "max_trace_drift": run.max_trace_drift,
        "estimated_t1": est1,
        "estimated_t2": est2,
    });
    let fit_value = match result {
        DecayFit::Decaying { t1, t2, residual } => {
            json!({ "kind": "decaying", "t1": t1, "t2": t2, "residual": residual })
        }
        DecayFit::NoDecay { residual } => json!({ "kind": "no_decay", "residual": residual }),
    };
    results["fit"] = fit_value;
    Ok((Table::from_series("t", &run.times, &[&plus, &minus, &fit_plus, &fit_minus]), results))
}

fn ou_pulses_table(c: &ExperimentConfig, p: &SensorParams, workers: Option<usize>) -> Result<(Table, Value)> {
    let ou = c.ou()?;
    let grid = c.sample_grid()?;
    let n_traj = c.n_traj.unwrap_or(0);
    let seed = c.seed.ok_or_else(|| Error::Config("missing required key 'seed'".into()))?;
    let delta_t = c.delta_t.ok_or_else(|| Error::Config("missing required key 'delta_t'".into()))?;
    let seq = PulseSequence::periodic(delta_t, grid.t1)?;
    let free =
        dynamics::simulate_pulsed_noisy_with_workers(p, &PulseSequence::empty(), &ou, &grid, n_traj, seed, workers)?;
    let pulsed = dynamics::simulate_pulsed_noisy_with_workers(p, &seq, &ou, &grid, n_traj, seed, workers)?;
    let ideal = dynamics::m_curve_effective(p, &grid);
    let mut free_err = free.std_error.clone();
    free_err.label = "stderr_noisy".into();
    let mut pulsed_err = pulsed.std_error.clone();
    pulsed_err.label = "stderr_noisy_pulsed".into();
    let rms_free = free.mean.rms_diff(&ideal);
    let rms_pulsed = pulsed.mean.rms_diff(&ideal);
    let results = json!({
        "rms_deviation_noisy": rms_free,
        "rms_deviation_pulsed": rms_pulsed,
        "ratio": rms_pulsed / rms_free,
        "x_pulses": seq.x_times().len(),
        "z_pulses": seq.z_times().len(),
        "resonant": seq.resonant(p.omega),
    });
    let table = Table::from_series("t", &ideal.times, &[&free.mean, &pulsed.mean, &free_err, &pulsed_err, &ideal]);
    Ok((table, results))
}

fn measure_delay_table(c: &ExperimentConfig, p: &SensorParams) -> Result<(Table, Value)> {
    let lp = c.lindblad()?;
    let t_state = c.t_state.ok_or_else(|| Error::Config("missing required key 't_state'".into()))?;
    let delay_max = c.delay_max.ok_or_else(|| Error::Config("missing required key 'delay_max'".into()))?;
    let n = c.n_samples.unwrap_or(2);
    let model = effective_model(p);
    let h_eff = model.hamiltonian();
    let rho0 = StateVector::basis(4, 0).to_density();
    let rho = if t_state > 0.0 {
        let grid = TimeGrid::new(0.0, t_state, 2, c.h.unwrap_or(0.01))?;
        lindblad_solve(&h_eff, &lp, &rho0, &grid)?.states.pop().expect("two samples")
    } else {
        rho0
    };

    let delays: Vec<f64> = (0..n).map(|k| delay_max * k as f64 / (n - 1) as f64).collect();
    let mut exact = Vec::with_capacity(n);
    let mut closed = Vec::with_capacity(n);
    for &dt in &delays {
        exact.push(sequential_joint_prob_exact(&rho, &h_eff, dt)?);
        closed.push(sequential_joint_prob_closed(&MeasurementRecord::from_density(&rho, dt)?, model.a, p.g));
    }
    let alpha = rho.population(0);
    let exact = TimeSeries::new("joint_exact", delays.clone(), exact)?;
    let closed = TimeSeries::new("joint_closed", delays.clone(), closed)?;
    let dev = TimeSeries::new("deviation", delays.clone(), exact.values.iter().map(|v| v - alpha).collect())?;

    let mut orders = Vec::new();
    for k in 0..3 {
        let dt = delay_max / f64::from(1u32 << k);
        let order = delay_error_order(&rho, &h_eff, dt)?;
        orders.push(json!({ "delta_t": dt, "err": order.err, "ratio": order.ratio }));
    }
    let results = json!({
        "alpha": alpha,
        "beta2": rho.population(1),
        "max_closed_form_gap": exact.max_abs_diff(&closed),
        "orders": orders,
    });
    Ok((Table::from_series("delta_t", &delays, &[&exact, &closed, &dev]), results))
}
