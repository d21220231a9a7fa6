//! Run configuration: flags over config file over defaults.

use std::path::Path;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use qrm2_core::model::validate_params;
use qrm2_core::spectrum::{default_emin, SolverConfig};
use qrm2_core::{ModelParams, Parity};

pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_EMAX: f64 = 3.0;
pub const DEFAULT_MATCH_TOL: f64 = 1e-6;
pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_SWEEP: (f64, f64, usize) = (0.05, 1.0, 20);

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityArg {
    Even,
    Odd,
    Both,
}

impl ParityArg {
    pub fn parities(self) -> Vec<Parity> {
        match self {
            ParityArg::Even => vec![Parity::Even],
            ParityArg::Odd => vec![Parity::Odd],
            ParityArg::Both => Parity::BOTH.to_vec(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ParityArg::Even => "even",
            ParityArg::Odd => "odd",
            ParityArg::Both => "both",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by every command. Every field is optional so that the
/// config file can fill the gaps.
#[derive(Args, Clone, Debug, Default)]
pub struct Opts {
    #[arg(long, allow_negative_numbers = true)]
    pub delta1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub emin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub emax: Option<f64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Truncation order of the G-function series.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Photon cutoff of the exact-diagonalization reference.
    #[arg(long)]
    pub oracle_n: Option<usize>,
    #[arg(long, value_enum)]
    pub parity: Option<ParityArg>,
    #[arg(long, value_enum)]
    pub out: Option<Format>,
    /// JSON config file.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct SweepOpts {
    #[arg(long, allow_negative_numbers = true)]
    pub g_from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g_to: Option<f64>,
    #[arg(long)]
    pub g_steps: Option<usize>,
}

/// The config file. Field names match the long flags with `_` for `-`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub schema_version: u32,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub emin: Option<f64>,
    pub emax: Option<f64>,
    pub grid_step: Option<f64>,
    pub nmax: Option<usize>,
    pub oracle_n: Option<usize>,
    pub parity: Option<ParityArg>,
    pub out: Option<Format>,
    pub g_from: Option<f64>,
    pub g_to: Option<f64>,
    pub g_steps: Option<usize>,
    pub samples: Option<usize>,
    pub match_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

pub fn load_file(path: &Path) -> Result<FileConfig, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    let file: FileConfig =
        serde_json::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    if file.schema_version != SCHEMA_VERSION {
        return usage(format!(
            "config {}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            file.schema_version
        ));
    }
    Ok(file)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub window: (f64, f64),
    pub solver: SolverConfig,
    pub parity: ParityArg,
    pub out: Format,
    pub match_tol: f64,
    /// `(g_from, g_to, g_steps)`
    pub sweep: (f64, f64, usize),
    pub samples: usize,
    /// Inputs whose sign was flipped to the canonical non-negative form.
    pub flipped: Vec<&'static str>,
}

impl RunConfig {
    pub fn parities(&self) -> Vec<Parity> {
        self.parity.parities()
    }
}

/// What a command needs beyond the shared options.
#[derive(Clone, Copy, Debug, Default)]
pub struct Needs {
    /// Couplings may be omitted (they default to zero).
    pub optional_couplings: bool,
}

fn pick<T: Copy>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn required(name: &str, v: Option<f64>) -> Result<f64, UsageError> {
    v.ok_or_else(|| UsageError(format!("missing required value `{name}` (flag --{} or config field)", name.replace('_', "-"))))
}

fn finite(name: &str, v: f64) -> Result<f64, UsageError> {
    if v.is_finite() {
        Ok(v)
    } else {
        usage(format!("`{name}` must be finite"))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, UsageError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        usage(format!("`{name}` must be positive, got {v}"))
    }
}

pub fn resolve(
    opts: &Opts,
    sweep: Option<&SweepOpts>,
    samples: Option<usize>,
    needs: Needs,
) -> Result<RunConfig, UsageError> {
    let file = match &opts.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    let delta1 = finite("delta1", required("delta1", pick(opts.delta1, file.delta1))?)?;
    let delta2 = finite("delta2", required("delta2", pick(opts.delta2, file.delta2))?)?;
    let coupling = |name: &str, flag, field| -> Result<f64, UsageError> {
        match pick(flag, field) {
            Some(v) => finite(name, v),
            None if needs.optional_couplings => Ok(0.0),
            None => required(name, None),
        }
    };
    let g1 = coupling("g1", opts.g1, file.g1)?;
    let g2 = coupling("g2", opts.g2, file.g2)?;
    let v = validate_params(delta1, delta2, g1, g2).map_err(|e| UsageError(e.to_string()))?;
    let mut flipped = Vec::new();
    for (name, f) in [("delta1", v.flips.delta1), ("delta2", v.flips.delta2), ("g1", v.flips.g1), ("g2", v.flips.g2)] {
        if f {
            flipped.push(name);
        }
    }
    let params = v.params;

    let (g_from, g_to, g_steps) = {
        let s = sweep.cloned().unwrap_or_default();
        (
            finite("g_from", pick(s.g_from, file.g_from).unwrap_or(DEFAULT_SWEEP.0))?,
            finite("g_to", pick(s.g_to, file.g_to).unwrap_or(DEFAULT_SWEEP.1))?,
            pick(s.g_steps, file.g_steps).unwrap_or(DEFAULT_SWEEP.2),
        )
    };
    if g_steps == 0 {
        return usage("`g_steps` must be at least 1");
    }

    // The default lower edge must sit below the ground state at every
    // coupling a sweep visits.
    let emin_default = if sweep.is_some() {
        let strongest = if g_from.abs() > g_to.abs() { g_from } else { g_to };
        let mode = sweep_mode(&params);
        default_emin(&qrm2_core::spectrum::sweep_params(&params, mode, strongest.abs()))
    } else {
        default_emin(&params)
    };
    let emin = finite("emin", pick(opts.emin, file.emin).unwrap_or(emin_default))?;
    let emax = finite("emax", pick(opts.emax, file.emax).unwrap_or(DEFAULT_EMAX))?;
    if emin >= emax {
        return usage(format!("empty window: emin {emin} must be below emax {emax}"));
    }

    let mut solver = SolverConfig::default();
    if let Some(step) = pick(opts.grid_step, file.grid_step) {
        solver.grid_step = positive("grid_step", step)?;
    }
    if let Some(n) = pick(opts.nmax, file.nmax) {
        if n == 0 {
            return usage("`nmax` must be at least 1");
        }
        solver.n_max = Some(n);
    }
    if let Some(n) = pick(opts.oracle_n, file.oracle_n) {
        if n == 0 {
            return usage("`oracle_n` must be at least 1");
        }
        solver.oracle_n = n;
    }
    solver.validate().map_err(|e| UsageError(e.to_string()))?;
    let match_tol = positive("match_tol", file.match_tol.unwrap_or(DEFAULT_MATCH_TOL))?;
    let samples = pick(samples, file.samples).unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return usage("`samples` must be at least 1");
    }

    Ok(RunConfig {
        params,
        window: (emin, emax),
        solver,
        parity: pick(opts.parity, file.parity).unwrap_or(ParityArg::Both),
        out: pick(opts.out, file.out).unwrap_or(Format::Csv),
        match_tol,
        sweep: (g_from, g_to, g_steps),
        samples,
        flipped,
    })
}

/// Equal couplings are kept equal along a sweep; otherwise `g2/g1` is held.
pub fn sweep_mode(base: &ModelParams) -> qrm2_core::spectrum::SweepMode {
    use qrm2_core::spectrum::SweepMode;
    if (base.g1 - base.g2).abs() <= qrm2_core::model::EPS_EQ {
        SweepMode::Equal
    } else {
        SweepMode::FixedRatio
    }
}
