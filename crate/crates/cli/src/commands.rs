use rayon::prelude::*;
use serde::Serialize;

use qrm2_core::gfunction::GFunction;
use qrm2_core::oracle::{oracle_spectrum, ComparisonReport};
use qrm2_core::spectrum::{
    detect_dark_states, solve_parities, sweep_grid, sweep_point, track_levels, verify, EnergyLevel, SpectrumResult,
    SweepMode,
};
use qrm2_core::{Error, Parity};

use crate::config::{sweep_mode, RunConfig, UsageError};
use crate::emit::{render, ParamsOut};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

/// What a command hands back to `main`.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub messages: Vec<String>,
    pub code: u8,
}

fn core_err(e: Error) -> UsageError {
    UsageError(e.to_string())
}

pub const LEVEL_HEADER: &[&str] = &[
    "parity",
    "level_index",
    "E",
    "kind",
    "r_nc",
    "coeff_decay",
    "n_max_used",
    "cross_check",
    "converged",
];

#[derive(Clone, Debug, Serialize)]
pub struct LevelRow {
    pub parity: &'static str,
    pub level_index: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    pub kind: &'static str,
    pub r_nc: f64,
    pub coeff_decay: f64,
    pub n_max_used: usize,
    pub cross_check: Option<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RejectedRow {
    pub parity: &'static str,
    #[serde(rename = "E")]
    pub energy: f64,
    pub r_nc: f64,
    pub shift: f64,
    pub coeff_decay: f64,
    pub reason: &'static str,
}

/// Index of each level within its parity, in ascending energy.
fn level_indices(levels: &[EnergyLevel]) -> Vec<usize> {
    let mut count = [0usize; 2];
    levels
        .iter()
        .map(|l| {
            let k = l.parity as usize;
            count[k] += 1;
            count[k] - 1
        })
        .collect()
}

fn level_rows(res: &SpectrumResult) -> Vec<LevelRow> {
    res.levels
        .iter()
        .zip(level_indices(&res.levels))
        .map(|(l, i)| LevelRow {
            parity: l.parity.as_str(),
            level_index: i,
            energy: l.energy,
            kind: l.kind.as_str(),
            r_nc: l.r_nc,
            coeff_decay: l.coeff_decay,
            n_max_used: l.n_max_used,
            cross_check: l.cross_check,
            converged: l.converged,
        })
        .collect()
}

#[derive(Serialize)]
struct SpectrumOut<'a> {
    notices: &'a [&'static str],
    all_converged: bool,
    levels: &'a [LevelRow],
    rejected_zeros: Vec<RejectedRow>,
}

pub fn spectrum(cfg: &RunConfig) -> Result<Outcome, UsageError> {
    let res = solve_parities(&cfg.params, cfg.window, &cfg.parities(), &cfg.solver).map_err(core_err)?;
    let rows = level_rows(&res);
    let mut messages: Vec<String> = res.notices.iter().map(|n| format!("notice: {n}")).collect();
    for l in res.levels.iter().filter(|l| !l.converged) {
        messages.push(format!("warning: {} level at E={} did not converge", l.parity, l.energy));
    }
    let out = SpectrumOut {
        notices: &res.notices,
        all_converged: res.all_converged(),
        levels: &rows,
        rejected_zeros: res
            .rejected_zeros
            .iter()
            .map(|z| RejectedRow {
                parity: z.parity.as_str(),
                energy: z.energy,
                r_nc: z.r_nc,
                shift: z.shift,
                coeff_decay: z.coeff_decay,
                reason: z.reason.as_str(),
            })
            .collect(),
    };
    Ok(Outcome {
        stdout: render(cfg.out, "spectrum", &ParamsOut::new(cfg), LEVEL_HEADER, &rows, &out),
        messages,
        code: if res.all_converged() { EXIT_OK } else { EXIT_CONVERGENCE },
    })
}

pub const SCAN_HEADER: &[&str] = &["E", "G_even", "G_odd", "pole_flag"];

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "G_even")]
    pub g_even: Option<f64>,
    #[serde(rename = "G_odd")]
    pub g_odd: Option<f64>,
    pub pole_flag: bool,
}

#[derive(Serialize)]
struct ScanOut<'a> {
    method: &'static str,
    rows: &'a [ScanRow],
}

pub fn gscan(cfg: &RunConfig) -> Result<Outcome, UsageError> {
    let p = cfg.params;
    let trunc = cfg.solver.trunc(p.regime()).map_err(core_err)?;
    let parities = cfg.parities();
    let mut funcs: [Option<GFunction>; 2] = [None, None];
    for &parity in &parities {
        let g = GFunction::for_params(p, parity, trunc)
            .map_err(|e| UsageError(format!("gscan: {e}; the spectrum command handles this regime")))?
            .with_precision(cfg.solver.precision);
        funcs[parity as usize] = Some(g);
    }
    let method = funcs.iter().flatten().next().map_or("", |g| g.method.as_str());
    let rows: Vec<ScanRow> = sweep_grid(cfg.window, cfg.samples)
        .into_par_iter()
        .map(|e| {
            let mut pole = false;
            let mut values = [None, None];
            for (k, g) in funcs.iter().enumerate() {
                if let Some(g) = g {
                    let ev = g.eval(e);
                    pole |= ev.pole_adjacent;
                    values[k] = ev.value;
                }
            }
            ScanRow {
                energy: e,
                g_even: values[Parity::Even as usize],
                g_odd: values[Parity::Odd as usize],
                pole_flag: pole,
            }
        })
        .collect();
    let mut params = ParamsOut::new(cfg);
    params.samples = Some(cfg.samples);
    let out = ScanOut { method, rows: &rows };
    Ok(Outcome {
        stdout: render(cfg.out, "gscan", &params, SCAN_HEADER, &rows, &out),
        messages: Vec::new(),
        code: EXIT_OK,
    })
}

pub const SWEEP_HEADER: &[&str] = &["g", "parity", "level_index", "E", "kind", "converged", "continuous", "error"];

/// One long-format sweep row. `kind = reference` rows mark `E = m` and carry
/// no coupling; `kind = error` rows record a failed step.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub g: Option<f64>,
    pub parity: Option<&'static str>,
    pub level_index: Option<usize>,
    #[serde(rename = "E")]
    pub energy: Option<f64>,
    pub kind: &'static str,
    pub converged: Option<bool>,
    pub continuous: Option<bool>,
    pub error: Option<String>,
}

#[derive(Serialize)]
struct SweepOut<'a> {
    rows: &'a [SweepRow],
    failed_steps: usize,
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, UsageError> {
    let (g_from, g_to, steps) = cfg.sweep;
    let mode = sweep_mode(&cfg.params);
    let parities = cfg.parities();
    let mut results: Vec<_> = sweep_grid((g_from, g_to), steps)
        .into_par_iter()
        .map(|g| sweep_point(&cfg.params, mode, g, &parities, cfg.window, &cfg.solver))
        .collect();
    track_levels(&mut results);

    let mut rows = Vec::new();
    let (lo, hi) = cfg.window;
    let first = lo.max(0.0).ceil() as usize;
    for m in first..=(hi.floor().max(0.0) as usize) {
        let e = m as f64;
        if e > lo && e < hi {
            rows.push(SweepRow {
                g: None,
                parity: None,
                level_index: Some(m),
                energy: Some(e),
                kind: "reference",
                converged: None,
                continuous: None,
                error: None,
            });
        }
    }
    let mut messages = Vec::new();
    let mut failed = 0;
    let mut unconverged = 0;
    for step in &results {
        match &step.result {
            Ok(res) => {
                for (l, &track) in res.levels.iter().zip(&step.tracks) {
                    unconverged += usize::from(!l.converged);
                    rows.push(SweepRow {
                        g: Some(step.g),
                        parity: Some(l.parity.as_str()),
                        level_index: Some(track),
                        energy: Some(l.energy),
                        kind: l.kind.as_str(),
                        converged: Some(l.converged),
                        continuous: Some(step.continuous),
                        error: None,
                    });
                }
            }
            Err(e) => {
                failed += 1;
                messages.push(format!("warning: step g={} failed: {e}", step.g));
                rows.push(SweepRow {
                    g: Some(step.g),
                    parity: None,
                    level_index: None,
                    energy: None,
                    kind: "error",
                    converged: None,
                    continuous: Some(false),
                    error: Some(e.to_string()),
                });
            }
        }
    }
    if unconverged > 0 {
        messages.push(format!("warning: {unconverged} sweep levels did not converge"));
    }
    let mut params = ParamsOut::new(cfg);
    params.g_from = Some(g_from);
    params.g_to = Some(g_to);
    params.g_steps = Some(steps);
    params.sweep_mode = Some(match mode {
        SweepMode::Equal => "equal",
        SweepMode::FixedRatio => "fixed_ratio",
    });
    let out = SweepOut {
        rows: &rows,
        failed_steps: failed,
    };
    Ok(Outcome {
        stdout: render(cfg.out, "sweep", &params, SWEEP_HEADER, &rows, &out),
        messages,
        code: if failed + unconverged > 0 { EXIT_CONVERGENCE } else { EXIT_OK },
    })
}

pub const VERIFY_HEADER: &[&str] = &["parity", "E", "E_oracle", "residual", "status"];

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub parity: &'static str,
    #[serde(rename = "E")]
    pub computed: Option<f64>,
    #[serde(rename = "E_oracle")]
    pub reference: Option<f64>,
    pub residual: Option<f64>,
    /// `matched`, `spurious` (no oracle partner) or `missing` (oracle level
    /// without a computed partner).
    pub status: &'static str,
}

#[derive(Serialize)]
struct VerifyOut<'a> {
    passed: bool,
    max_residual: f64,
    mean_residual: f64,
    matched: usize,
    spurious: usize,
    missing: usize,
    worst: Option<String>,
    rows: &'a [VerifyRow],
}

fn verify_rows(report: &ComparisonReport) -> Vec<VerifyRow> {
    let mut rows: Vec<VerifyRow> = report
        .matches
        .iter()
        .map(|m| VerifyRow {
            parity: m.parity.as_str(),
            computed: Some(m.computed),
            reference: Some(m.reference),
            residual: Some(m.gap()),
            status: "matched",
        })
        .collect();
    rows.extend(report.unmatched_computed.iter().map(|&(parity, e)| VerifyRow {
        parity: parity.as_str(),
        computed: Some(e),
        reference: None,
        residual: None,
        status: "spurious",
    }));
    rows.extend(report.unmatched_oracle.iter().map(|&(parity, e)| VerifyRow {
        parity: parity.as_str(),
        computed: None,
        reference: Some(e),
        residual: None,
        status: "missing",
    }));
    let key = |r: &VerifyRow| r.computed.or(r.reference).unwrap_or(f64::NAN);
    rows.sort_by(|a, b| a.parity.cmp(b.parity).then(key(a).total_cmp(&key(b))));
    rows
}

/// The lowest unmatched level if there is one, otherwise the widest match.
fn worst_offender(report: &ComparisonReport, match_tol: f64) -> Option<String> {
    let unmatched = report
        .unmatched_computed
        .iter()
        .map(|&(p, e)| (p, e, "spurious level without oracle partner"))
        .chain(report.unmatched_oracle.iter().map(|&(p, e)| (p, e, "oracle level without computed partner")))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((parity, e, what)) = unmatched {
        return Some(format!("{parity} E={e}: {what}"));
    }
    report
        .worst()
        .filter(|m| m.gap() >= match_tol)
        .map(|m| format!("{} E={}: oracle {} differs by {:e}", m.parity, m.computed, m.reference, m.gap()))
}

pub fn verify_cmd(cfg: &RunConfig) -> Result<Outcome, UsageError> {
    let mut res = solve_parities(&cfg.params, cfg.window, &cfg.parities(), &cfg.solver).map_err(core_err)?;
    let report = verify(&mut res, cfg.solver.oracle_n, cfg.match_tol).map_err(core_err)?;
    let rows = verify_rows(&report);
    let worst = worst_offender(&report, cfg.match_tol);
    let passed = report.is_clean() && report.max_residual < cfg.match_tol;
    let mut messages: Vec<String> = res.notices.iter().map(|n| format!("notice: {n}")).collect();
    if !passed {
        messages.push(format!(
            "verification failed: {}",
            worst.as_deref().unwrap_or("no levels to compare")
        ));
    }
    let out = VerifyOut {
        passed,
        max_residual: report.max_residual,
        mean_residual: report.mean_residual,
        matched: report.matches.len(),
        spurious: report.unmatched_computed.len(),
        missing: report.unmatched_oracle.len(),
        worst,
        rows: &rows,
    };
    let mut params = ParamsOut::new(cfg);
    params.match_tol = Some(cfg.match_tol);
    Ok(Outcome {
        stdout: render(cfg.out, "verify", &params, VERIFY_HEADER, &rows, &out),
        messages,
        code: if passed { EXIT_OK } else { EXIT_VERIFY },
    })
}

pub const DARK_HEADER: &[&str] = &["parity", "condition_residual", "holds", "E_oracle", "oracle_gap"];

#[derive(Clone, Debug, Serialize)]
pub struct DarkRow {
    pub parity: &'static str,
    pub condition_residual: f64,
    pub holds: bool,
    /// Oracle level of this parity closest to `E = 1`.
    #[serde(rename = "E_oracle")]
    pub oracle_energy: Option<f64>,
    pub oracle_gap: Option<f64>,
}

#[derive(Serialize)]
struct DarkOut<'a> {
    notices: Vec<&'static str>,
    rows: &'a [DarkRow],
}

pub fn darkstate(cfg: &RunConfig) -> Result<Outcome, UsageError> {
    let parities = cfg.parities();
    let states: Vec<_> = detect_dark_states(&cfg.params)
        .into_iter()
        .filter(|d| parities.contains(&d.parity))
        .collect();
    let mut notices = Vec::new();
    let mut rows = Vec::new();
    if states.is_empty() {
        notices.push("dark states need equal couplings and delta1 != delta2");
    } else {
        let spec = oracle_spectrum(&cfg.params, cfg.solver.oracle_n).map_err(core_err)?;
        for d in states {
            let near = spec.nearest(d.parity, 1.0);
            rows.push(DarkRow {
                parity: d.parity.as_str(),
                condition_residual: d.condition_residual,
                holds: d.holds,
                oracle_energy: near,
                oracle_gap: near.map(|e| (e - 1.0).abs()),
            });
        }
    }
    let messages = notices.iter().map(|n| format!("notice: {n}")).collect();
    let out = DarkOut { notices, rows: &rows };
    Ok(Outcome {
        stdout: render(cfg.out, "darkstate", &ParamsOut::new(cfg), DARK_HEADER, &rows, &out),
        messages,
        code: EXIT_OK,
    })
}
