//! CSV and JSON writers.
//!
//! Floats go through the shortest round-trip representation in both formats,
//! so parsing a field back yields the same bits.

use serde::Serialize;

use crate::config::{Format, RunConfig, SCHEMA_VERSION};

/// Echo of the resolved configuration.
#[derive(Clone, Debug, Serialize)]
pub struct ParamsOut {
    pub delta1: f64,
    pub delta2: f64,
    pub g1: f64,
    pub g2: f64,
    pub regime: &'static str,
    pub emin: f64,
    pub emax: f64,
    pub grid_step: f64,
    pub nmax: usize,
    pub oracle_n: usize,
    pub parity: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_mode: Option<&'static str>,
}

impl ParamsOut {
    pub fn new(cfg: &RunConfig) -> Self {
        let p = &cfg.params;
        let regime = p.regime();
        let nmax = cfg.solver.trunc(regime).map(|t| t.n_max).unwrap_or(0);
        ParamsOut {
            delta1: p.delta1,
            delta2: p.delta2,
            g1: p.g1,
            g2: p.g2,
            regime: regime.as_str(),
            emin: cfg.window.0,
            emax: cfg.window.1,
            grid_step: cfg.solver.grid_step,
            nmax,
            oracle_n: cfg.solver.oracle_n,
            parity: cfg.parity.as_str(),
            match_tol: None,
            samples: None,
            g_from: None,
            g_to: None,
            g_steps: None,
            sweep_mode: None,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    params: &'a ParamsOut,
    results: &'a T,
}

/// Rows with a fixed header. An empty table still gets its header.
pub fn csv<R: Serialize>(header: &[&str], rows: &[R]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("flat row");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn json<T: Serialize>(command: &str, params: &ParamsOut, results: &T) -> String {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        params,
        results,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("serializable results");
    s.push('\n');
    s
}

/// Picks the format: CSV gets the rows, JSON the full results object.
pub fn render<R: Serialize, T: Serialize>(
    format: Format,
    command: &str,
    params: &ParamsOut,
    header: &[&str],
    rows: &[R],
    results: &T,
) -> String {
    match format {
        Format::Csv => csv(header, rows),
        Format::Json => json(command, params, results),
    }
}
