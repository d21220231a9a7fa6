//! From G-function values to a classified level list.
//!
//! Zeros are bracketed on a grid that never crosses a pole, bisected, then
//! polished in the evaluator's own precision. A zero is kept as a regular
//! level only when it survives a re-truncation `n_max -> n_max + n_max_step`
//! with relative drift below `stability_tol` and the Fock coefficients built
//! on it decay below `decay_tol`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gfunction::{pole_map, GFunction, Method};
use crate::model::{ModelParams, Parity, Regime, EPS_EQ};
use crate::oracle::{self, compare_spectra, ComparisonReport, OracleSpectrum};
use crate::real::Precision;
use crate::recurrence::{TruncationConfig, EPS_POLE, TAIL_TOL};

/// Tolerance on the dark-state conditions `(Δ2 ± Δ1)² = 1`.
pub const DARK_TOL: f64 = 1e-10;
/// Oracle distance below which a pole energy counts as an eigenvalue.
pub const EXCEPTIONAL_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LevelKind {
    Regular,
    Exceptional,
    Dark,
    Singlet,
}

impl LevelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LevelKind::Regular => "regular",
            LevelKind::Exceptional => "exceptional",
            LevelKind::Dark => "dark",
            LevelKind::Singlet => "singlet",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyLevel {
    pub energy: f64,
    pub parity: Parity,
    pub kind: LevelKind,
    /// `ln(E_N / E_{N+step})`; zero for levels that do not come from a zero.
    pub r_nc: f64,
    /// Tail-to-peak ratio of the scaled Fock coefficients at the root.
    pub coeff_decay: f64,
    pub n_max_used: usize,
    /// Distance to the continued-fraction root (equal couplings only).
    pub cross_check: Option<f64>,
    pub converged: bool,
}

impl EnergyLevel {
    fn fixed(energy: f64, parity: Parity, kind: LevelKind) -> Self {
        EnergyLevel {
            energy,
            parity,
            kind,
            r_nc: 0.0,
            coeff_decay: 0.0,
            n_max_used: 0,
            cross_check: None,
            converged: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RejectReason {
    /// Position moved by more than the stability tolerance.
    Drift,
    /// The sign change disappeared after re-truncation.
    Vanished,
    /// Coefficients do not decay at the root.
    Growth,
    /// The re-truncated evaluator hit a pole inside the bracket.
    Pole,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Drift => "drift",
            RejectReason::Vanished => "vanished",
            RejectReason::Growth => "growth",
            RejectReason::Pole => "pole",
        }
    }
}

/// A zero that failed the stability test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RejectedZero {
    pub energy: f64,
    pub parity: Parity,
    pub r_nc: f64,
    /// `|E_N − E_{N+step}|`, infinite when the zero vanished.
    pub shift: f64,
    pub coeff_decay: f64,
    pub reason: RejectReason,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub params: ModelParams,
    pub regime: Regime,
    pub window: (f64, f64),
    /// Parity sectors that were solved.
    pub parities: Vec<Parity>,
    pub levels: Vec<EnergyLevel>,
    pub rejected_zeros: Vec<RejectedZero>,
    /// Per-level distance to the nearest same-parity oracle eigenvalue.
    pub oracle_residuals: Option<Vec<f64>>,
    pub notices: Vec<&'static str>,
}

impl SpectrumResult {
    pub fn levels_of(&self, parity: Parity) -> impl Iterator<Item = &EnergyLevel> {
        self.levels.iter().filter(move |l| l.parity == parity)
    }

    pub fn energies(&self, parity: Parity) -> Vec<f64> {
        self.levels_of(parity).map(|l| l.energy).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.levels.iter().all(|l| l.converged)
    }

    fn sort(&mut self) {
        self.levels
            .sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.parity.cmp(&b.parity)));
        self.rejected_zeros.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    }
}

/// Solver knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub grid_step: f64,
    pub refine_tol: f64,
    pub decay_tol: f64,
    /// Largest relative drift of a stable zero under re-truncation.
    pub stability_tol: f64,
    /// `None` picks 80 (general) or 120 (equal coupling).
    pub n_max: Option<usize>,
    pub n_max_step: usize,
    pub eps_pole: f64,
    pub tail_tol: f64,
    pub precision: Precision,
    pub oracle_n: usize,
    /// Query the oracle for pole energies that are eigenvalues.
    pub exceptional: bool,
    /// Cross-check equal-coupling roots against the continued fraction.
    pub cross_check: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_step: 0.005,
            refine_tol: 1e-10,
            decay_tol: 1e-8,
            stability_tol: 1e-8,
            n_max: None,
            n_max_step: 1,
            eps_pole: EPS_POLE,
            tail_tol: TAIL_TOL,
            precision: Precision::Auto,
            oracle_n: oracle::DEFAULT_N,
            exceptional: true,
            cross_check: true,
        }
    }
}

impl SolverConfig {
    pub fn trunc(&self, regime: Regime) -> Result<TruncationConfig> {
        let base = TruncationConfig::for_regime(regime);
        let mut t = TruncationConfig::new(self.n_max.unwrap_or(base.n_max), self.n_max_step)?;
        t.eps_pole = self.eps_pole;
        t.tail_tol = self.tail_tol;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grid_step", self.grid_step),
            ("refine_tol", self.refine_tol),
            ("decay_tol", self.decay_tol),
            ("stability_tol", self.stability_tol),
            ("eps_pole", self.eps_pole),
            ("tail_tol", self.tail_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonFinite(name));
            }
        }
        Ok(())
    }
}

/// Lower window edge that is guaranteed to sit below the ground state.
pub fn default_emin(p: &ModelParams) -> f64 {
    let c = p.couplings();
    -(c.g_sum * c.g_sum).max(c.g_diff * c.g_diff) - p.delta1 - p.delta2 - 0.5
}

fn check_window(window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Window(lo, hi));
    }
    Ok(())
}

/// Pole-free subintervals of `window`.
fn segments(poles: &[f64], window: (f64, f64), eps: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = window.0;
    for &q in poles {
        if q + eps <= window.0 || q - eps >= window.1 {
            continue;
        }
        if q - eps > start {
            out.push((start, q - eps));
        }
        start = start.max(q + eps);
    }
    if start < window.1 {
        out.push((start, window.1));
    }
    out
}

/// Anything the scanner and bisection can drive.
pub trait Evaluate {
    /// `None` where the function is undefined (pole-adjacent, overflow).
    fn value(&self, e: f64) -> Option<f64>;
    /// Energies the scan must not straddle.
    fn poles(&self) -> Vec<f64>;
    fn eps_pole(&self) -> f64;
}

impl Evaluate for GFunction {
    fn value(&self, e: f64) -> Option<f64> {
        GFunction::value(self, e)
    }
    fn poles(&self) -> Vec<f64> {
        GFunction::poles(self)
    }
    fn eps_pole(&self) -> f64 {
        self.trunc.eps_pole
    }
}

fn brackets_in<G: Evaluate + ?Sized>(g: &G, seg: (f64, f64), step: f64) -> Vec<(f64, f64)> {
    let n = libm::ceil((seg.1 - seg.0) / step).max(1.0) as usize;
    let h = (seg.1 - seg.0) / n as f64;
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let e = if i == n { seg.1 } else { seg.0 + i as f64 * h };
        let v = g.value(e);
        if let (Some((pe, pv)), Some(v)) = (prev, v) {
            if (pv < 0.0) != (v < 0.0) {
                out.push((pe, e));
            }
        }
        prev = v.map(|v| (e, v));
    }
    out
}

/// Sign-change brackets of `g` over `window`, each inside one pole-free
/// subinterval. Segments whose brackets touch are rescanned at half the step.
pub fn scan_sign_changes<G: Evaluate + ?Sized>(g: &G, window: (f64, f64), grid_step: f64) -> Result<Vec<(f64, f64)>> {
    check_window(window)?;
    if !(grid_step > 0.0) {
        return Err(Error::NonFinite("grid_step"));
    }
    let mut out = Vec::new();
    for seg in segments(&g.poles(), window, g.eps_pole()) {
        let mut step = grid_step;
        let mut found = brackets_in(g, seg, step);
        for _ in 0..6 {
            let touching = found.windows(2).any(|w| w[0].1 == w[1].0);
            if !touching {
                break;
            }
            step *= 0.5;
            found = brackets_in(g, seg, step);
        }
        out.extend(found);
    }
    Ok(out)
}

fn bisect<G: Evaluate + ?Sized>(g: &G, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let val = |e: f64| g.value(e).ok_or(Error::NonFinite("G value"));
    let mut flo = val(lo)?;
    let fhi = val(hi)?;
    if (flo < 0.0) == (fhi < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = val(mid)?;
        if fm == 0.0 {
            return Ok((mid, mid));
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Bisects a bracket down to `refine_tol`; returns the final bracket.
///
/// If the end signs agree the bracket is widened by its own width on each
/// side and tried once more.
pub fn refine_bracket<G: Evaluate + ?Sized>(g: &G, bracket: (f64, f64), refine_tol: f64) -> Result<(f64, f64)> {
    match bisect(g, bracket.0, bracket.1, refine_tol) {
        Err(Error::NoSignChange { .. }) => {
            let w = bracket.1 - bracket.0;
            bisect(g, bracket.0 - w, bracket.1 + w, refine_tol)
        }
        other => other,
    }
}

pub fn refine_zero<G: Evaluate + ?Sized>(g: &G, bracket: (f64, f64), refine_tol: f64) -> Result<f64> {
    refine_bracket(g, bracket, refine_tol).map(|(lo, hi)| 0.5 * (lo + hi))
}

/// Outcome of [`classify_zero`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Classified {
    Level(EnergyLevel),
    Rejected(RejectedZero),
}

/// Applies the re-truncation and coefficient-decay tests to the zero inside
/// `bracket` (a grid bracket; it is refined here).
pub fn classify_zero(g: &GFunction, bracket: (f64, f64), cfg: &SolverConfig) -> Result<Classified> {
    let fine = refine_bracket(g, bracket, cfg.refine_tol)?;
    let root = g.polish(fine.0, fine.1.max(fine.0))?;
    let e0 = root.energy;
    let reject = |shift: f64, r_nc: f64, reason| {
        Ok(Classified::Rejected(RejectedZero {
            energy: e0,
            parity: g.parity,
            r_nc,
            shift,
            coeff_decay: root.coeff_decay,
            reason,
        }))
    };
    let next = g.with_trunc(g.trunc.stepped());
    let wide = (bracket.0.min(fine.0), bracket.1.max(fine.1));
    let e1 = match bisect(&next, wide.0, wide.1, cfg.refine_tol) {
        Ok((lo, hi)) => match next.polish(lo, hi) {
            Ok(r) => r.energy,
            Err(_) => return reject(f64::INFINITY, f64::NAN, RejectReason::Pole),
        },
        Err(Error::NoSignChange { .. }) => return reject(f64::INFINITY, f64::NAN, RejectReason::Vanished),
        Err(_) => return reject(f64::INFINITY, f64::NAN, RejectReason::Pole),
    };
    let shift = libm::fabs(e0 - e1);
    let r_nc = if e0 * e1 > 0.0 { libm::log(e0 / e1) } else { f64::NAN };
    let rel = shift / libm::fabs(e1);
    if !(rel < cfg.stability_tol) {
        return reject(shift, r_nc, RejectReason::Drift);
    }
    if !(root.coeff_decay < cfg.decay_tol) {
        return reject(shift, r_nc, RejectReason::Growth);
    }
    Ok(Classified::Level(EnergyLevel {
        energy: e0,
        parity: g.parity,
        kind: LevelKind::Regular,
        r_nc,
        coeff_decay: root.coeff_decay,
        n_max_used: g.trunc.n_max,
        cross_check: None,
        converged: true,
    }))
}

/// Dark-state condition for one parity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DarkState {
    pub parity: Parity,
    /// `(Δ2 + Δ1)² − 1` (even) or `(Δ2 − Δ1)² − 1` (odd).
    pub condition_residual: f64,
    pub holds: bool,
}

/// Coupling-independent `E = 1` levels at equal couplings with `Δ1 != Δ2`.
pub fn detect_dark_states(p: &ModelParams) -> Vec<DarkState> {
    if p.regime() != Regime::EqualCoupling || libm::fabs(p.delta1 - p.delta2) <= EPS_EQ {
        return Vec::new();
    }
    Parity::BOTH
        .iter()
        .map(|&parity| {
            let s = p.delta2 + parity.sign() * p.delta1;
            let r = s * s - 1.0;
            DarkState {
                parity,
                condition_residual: r,
                holds: libm::fabs(r) <= DARK_TOL,
            }
        })
        .collect()
}

pub fn dark_levels(p: &ModelParams, window: (f64, f64)) -> Vec<EnergyLevel> {
    if !(window.0 < 1.0 && 1.0 < window.1) {
        return Vec::new();
    }
    detect_dark_states(p)
        .into_iter()
        .filter(|d| d.holds)
        .map(|d| EnergyLevel::fixed(1.0, d.parity, LevelKind::Dark))
        .collect()
}

/// `E = m` levels of the spin singlet: even `m` for odd parity, odd `m` for
/// even parity. Only for `Δ1 == Δ2` at equal couplings.
pub fn singlet_levels(p: &ModelParams, parity: Parity, window: (f64, f64)) -> Vec<EnergyLevel> {
    let eligible = matches!(p.regime(), Regime::EqualCoupling | Regime::ZeroCoupling);
    if !eligible || libm::fabs(p.delta1 - p.delta2) > EPS_EQ {
        return Vec::new();
    }
    let first = libm::ceil(window.0.max(0.0)) as i64;
    let last = libm::floor(window.1) as i64;
    let want_odd_m = parity == Parity::Even;
    (first..=last)
        .filter(|&m| (m as f64) > window.0 && (m as f64) < window.1)
        .filter(|m| (m % 2 == 1) == want_odd_m)
        .map(|m| EnergyLevel::fixed(m as f64, parity, LevelKind::Singlet))
        .collect()
}

/// Which pole family an exceptional candidate belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoleFamily {
    /// `m − g²`
    A,
    /// `m − g′²`
    B,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExceptionalCandidate {
    pub energy: f64,
    pub family: PoleFamily,
    pub m: usize,
    pub is_eigenvalue: bool,
    /// Distance to the nearest oracle eigenvalue of either parity.
    pub oracle_gap: f64,
    /// Parity of that nearest eigenvalue.
    pub parity: Parity,
}

/// Pole energies inside `window`, each checked against the oracle.
pub fn exceptional_candidates(
    p: &ModelParams,
    window: (f64, f64),
    trunc: &TruncationConfig,
    oracle: &OracleSpectrum,
) -> Vec<ExceptionalCandidate> {
    let map = pole_map(p, trunc);
    let b_family = if p.regime() == Regime::EqualCoupling { &[][..] } else { &map.b_poles[..] };
    let mut out = Vec::new();
    for (family, poles) in [(PoleFamily::A, &map.a_poles[..]), (PoleFamily::B, b_family)] {
        for (m, &e) in poles.iter().enumerate() {
            if !(e > window.0 && e < window.1) {
                continue;
            }
            let mut best = (f64::INFINITY, Parity::Even);
            for parity in Parity::BOTH {
                if let Some(x) = oracle.nearest(parity, e) {
                    let gap = libm::fabs(x - e);
                    if gap < best.0 {
                        best = (gap, parity);
                    }
                }
            }
            out.push(ExceptionalCandidate {
                energy: e,
                family,
                m,
                is_eigenvalue: best.0 <= EXCEPTIONAL_TOL,
                oracle_gap: best.0,
                parity: best.1,
            });
        }
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    out
}

fn zeros_for(g: &GFunction, window: (f64, f64), cfg: &SolverConfig, out: &mut SpectrumResult) -> Result<()> {
    for bracket in scan_sign_changes(g, window, cfg.grid_step)? {
        match classify_zero(g, bracket, cfg) {
            Ok(Classified::Level(level)) => out.levels.push(level),
            Ok(Classified::Rejected(z)) => out.rejected_zeros.push(z),
            Err(Error::NoSignChange { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn cross_check(p: &ModelParams, level: &mut EnergyLevel, trunc: TruncationConfig, cfg: &SolverConfig) {
    let Ok(cf) = GFunction::new(*p, level.parity, Method::ContinuedFraction, trunc) else {
        return;
    };
    let cf = cf.with_precision(cfg.precision);
    let w = cfg.grid_step;
    let poles = cf.poles();
    let (mut lo, mut hi) = (level.energy - w, level.energy + w);
    for &q in &poles {
        if q < level.energy {
            lo = lo.max(q + cfg.eps_pole);
        } else {
            hi = hi.min(q - cfg.eps_pole);
        }
    }
    level.cross_check = Some(match cf.polish(lo, hi) {
        Ok(r) => libm::fabs(r.energy - level.energy),
        Err(_) => f64::NAN,
    });
}

fn oracle_only(p: &ModelParams, window: (f64, f64), cfg: &SolverConfig, out: &mut SpectrumResult) -> Result<()> {
    for parity in Parity::BOTH {
        let (levels, drift) = oracle::converged_levels(p, parity, cfg.oracle_n, window.1)?;
        for e in levels.into_iter().filter(|&e| e > window.0) {
            let mut l = EnergyLevel::fixed(e, parity, LevelKind::Regular);
            l.n_max_used = cfg.oracle_n;
            l.converged = drift <= 1e-9;
            out.levels.push(l);
        }
    }
    // Singlets are exact eigenvalues of the oracle too; relabel them.
    if libm::fabs(p.delta1 - p.delta2) <= EPS_EQ && p.regime() == Regime::ZeroCoupling {
        for l in out.levels.iter_mut() {
            let m = libm::round(l.energy);
            let odd_m = (m as i64) % 2 != 0;
            if m >= 0.0 && libm::fabs(l.energy - m) <= 1e-10 && odd_m == (l.parity == Parity::Even) {
                l.kind = LevelKind::Singlet;
            }
        }
    }
    Ok(())
}

/// Drops regular levels that duplicate a fixed (dark/singlet/exceptional) one.
fn merge_fixed(out: &mut SpectrumResult, fixed: Vec<EnergyLevel>) {
    out.levels.retain(|l| {
        !fixed
            .iter()
            .any(|f| f.parity == l.parity && libm::fabs(f.energy - l.energy) <= 1e-7)
    });
    out.levels.extend(fixed);
}

/// Full parity-resolved spectrum inside `window`.
pub fn solve_spectrum(p: &ModelParams, window: (f64, f64), cfg: &SolverConfig) -> Result<SpectrumResult> {
    solve_parities(p, window, &Parity::BOTH, cfg)
}

pub fn solve_parities(
    p: &ModelParams,
    window: (f64, f64),
    parities: &[Parity],
    cfg: &SolverConfig,
) -> Result<SpectrumResult> {
    check_window(window)?;
    cfg.validate()?;
    let regime = p.regime();
    let mut out = SpectrumResult {
        params: *p,
        regime,
        window,
        parities: parities.to_vec(),
        levels: Vec::new(),
        rejected_zeros: Vec::new(),
        oracle_residuals: None,
        notices: Vec::new(),
    };
    let trunc = cfg.trunc(regime)?;
    match regime {
        Regime::ZeroCoupling | Regime::SingleQubitLike => {
            out.notices.push(if regime == Regime::ZeroCoupling {
                "zero coupling: levels come from exact diagonalization only"
            } else {
                "one coupling vanishes: levels come from exact diagonalization only"
            });
            oracle_only(p, window, cfg, &mut out)?;
            out.levels.retain(|l| parities.contains(&l.parity));
        }
        Regime::General | Regime::EqualCoupling => {
            for &parity in parities {
                let g = GFunction::for_params(*p, parity, trunc)?.with_precision(cfg.precision);
                zeros_for(&g, window, cfg, &mut out)?;
            }
            if regime == Regime::EqualCoupling && cfg.cross_check {
                for l in out.levels.iter_mut() {
                    cross_check(p, l, trunc, cfg);
                }
            }
            let mut fixed: Vec<EnergyLevel> = dark_levels(p, window);
            for &parity in parities {
                fixed.extend(singlet_levels(p, parity, window));
            }
            if cfg.exceptional {
                let spec = oracle::oracle_spectrum(p, cfg.oracle_n)?;
                for c in exceptional_candidates(p, window, &trunc, &spec) {
                    if c.is_eigenvalue {
                        fixed.push(EnergyLevel::fixed(c.energy, c.parity, LevelKind::Exceptional));
                    }
                }
            }
            fixed.retain(|l| parities.contains(&l.parity));
            merge_fixed(&mut out, fixed);
        }
    }
    out.sort();
    Ok(out)
}

/// Matches the levels of `result` against the oracle at truncation `n` and
/// stores per-level residuals.
pub fn verify(result: &mut SpectrumResult, n: usize, match_tol: f64) -> Result<ComparisonReport> {
    let spec = oracle::oracle_spectrum(&result.params, n)?;
    let (lo, hi) = result.window;
    let computed: Vec<(Parity, f64)> = result.levels.iter().map(|l| (l.parity, l.energy)).collect();
    let mut reference = Vec::new();
    for &parity in &result.parities {
        reference.extend(spec.in_window(parity, lo, hi).into_iter().map(|e| (parity, e)));
    }
    result.oracle_residuals = Some(
        result
            .levels
            .iter()
            .map(|l| spec.nearest(l.parity, l.energy).map_or(f64::INFINITY, |x| libm::fabs(x - l.energy)))
            .collect(),
    );
    Ok(compare_spectra(&computed, &reference, match_tol))
}

/// How the couplings follow the swept `g = g1 + g2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepMode {
    /// `g1 = g2 = g/2`.
    Equal,
    /// `g2/g1` fixed to the base parameters' ratio.
    FixedRatio,
}

/// One step of a coupling sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepStep {
    pub g: f64,
    pub params: ModelParams,
    pub result: core::result::Result<SpectrumResult, Error>,
    /// Track index per level (index within its parity, ascending).
    pub tracks: Vec<usize>,
    /// False when nearest-neighbour matching to the previous step is
    /// ambiguous (a near crossing) or the level count changed.
    pub continuous: bool,
}

pub fn sweep_params(base: &ModelParams, mode: SweepMode, g: f64) -> ModelParams {
    match mode {
        SweepMode::Equal => base.with_equal_couplings(g),
        SweepMode::FixedRatio => {
            let total = base.g1 + base.g2;
            let f1 = if total > 0.0 { base.g1 / total } else { 0.5 };
            ModelParams {
                g1: g * f1,
                g2: g * (1.0 - f1),
                ..*base
            }
        }
    }
}

/// `steps` evenly spaced couplings from `g_range.0` to `g_range.1` inclusive.
pub fn sweep_grid(g_range: (f64, f64), steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => alloc::vec![g_range.0],
        _ => (0..steps)
            .map(|i| g_range.0 + (g_range.1 - g_range.0) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Solves one sweep step.
pub fn sweep_point(
    base: &ModelParams,
    mode: SweepMode,
    g: f64,
    parities: &[Parity],
    window: (f64, f64),
    cfg: &SolverConfig,
) -> SweepStep {
    let params = sweep_params(base, mode, g);
    SweepStep {
        g,
        params,
        result: solve_parities(&params, window, parities, cfg),
        tracks: Vec::new(),
        continuous: true,
    }
}

/// Assigns track indices and continuity flags to consecutive steps.
pub fn track_levels(steps: &mut [SweepStep]) {
    let mut prev: Option<Vec<(Parity, f64)>> = None;
    for step in steps.iter_mut() {
        let Ok(res) = &step.result else {
            prev = None;
            step.continuous = false;
            continue;
        };
        let mut counter = [0usize; 2];
        let mut tracks = Vec::with_capacity(res.levels.len());
        let cur: Vec<(Parity, f64)> = res.levels.iter().map(|l| (l.parity, l.energy)).collect();
        for l in &res.levels {
            let k = l.parity as usize;
            tracks.push(counter[k]);
            counter[k] += 1;
        }
        let mut continuous = true;
        if let Some(prev) = &prev {
            for parity in Parity::BOTH {
                let a: Vec<f64> = prev.iter().filter(|x| x.0 == parity).map(|x| x.1).collect();
                let b: Vec<f64> = cur.iter().filter(|x| x.0 == parity).map(|x| x.1).collect();
                if a.len() != b.len() {
                    continuous = false;
                    continue;
                }
                // Each level's nearest predecessor must be the one with the
                // same index.
                for (i, &e) in b.iter().enumerate() {
                    let nearest = a
                        .iter()
                        .enumerate()
                        .min_by(|x, y| libm::fabs(x.1 - e).total_cmp(&libm::fabs(y.1 - e)))
                        .map(|x| x.0);
                    if nearest != Some(i) {
                        continuous = false;
                    }
                }
            }
        }
        step.tracks = tracks;
        step.continuous = continuous;
        prev = Some(cur);
    }
}

/// Sequential sweep over `steps` couplings with level tracking.
pub fn sweep_coupling(
    base: &ModelParams,
    mode: SweepMode,
    g_range: (f64, f64),
    steps: usize,
    parities: &[Parity],
    window: (f64, f64),
    cfg: &SolverConfig,
) -> Vec<SweepStep> {
    let mut out: Vec<SweepStep> = sweep_grid(g_range, steps)
        .into_iter()
        .map(|g| sweep_point(base, mode, g, parities, window, cfg))
        .collect();
    track_levels(&mut out);
    out
}
