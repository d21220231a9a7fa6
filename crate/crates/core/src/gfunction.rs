//! G-functions: the 2×2 determinant for `g1 != g2`, the scalar equal-coupling
//! series and the continued-fraction residual.
//!
//! Evaluation only; grids and zero handling live in [`crate::spectrum`].

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Parity, Regime, EPS_EQ};
use crate::real::{Mp, Precision, Real};
use crate::recurrence::{
    a_space_coeffs, b_space_coeffs, d_space_coeffs, eq_coupling_coeffs, eq_initial_from_d,
    initial_from_d, three_term_coeffs, InitChoice, Space, TruncationConfig,
};

/// Couplings above this run the equal-coupling series in multiprecision.
pub const EQUAL_DOUBLE_MAX_G: f64 = 1.5;
const EQUAL_BITS: usize = 192;

/// One determinant entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entry {
    G11,
    G12,
    G21,
    G22,
}

/// A G-function value at one trial energy.
#[derive(Clone, Debug, PartialEq)]
pub struct GEvaluation {
    pub energy: f64,
    /// `None` when the energy is pole-adjacent or the evaluation overflowed.
    pub value: Option<f64>,
    pub parity: Parity,
    pub n_max_used: usize,
    pub pole_adjacent: bool,
    /// `(G11, G12, G21, G22)` on the determinant path.
    pub entries: Option<[f64; 4]>,
    /// Worst `|last term| / |sum|` over the series that were summed.
    pub tail: f64,
}

/// Pole energies of the chains up to `n_max`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PoleMap {
    /// `m − g²`.
    pub a_poles: Vec<f64>,
    /// `m − g′²`, general regime only.
    pub b_poles: Vec<f64>,
    /// Integers `m`, equal-coupling regime only.
    pub integer_poles: Vec<f64>,
}

impl PoleMap {
    /// All pole energies, sorted.
    pub fn all(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .a_poles
            .iter()
            .chain(&self.b_poles)
            .chain(&self.integer_poles)
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Distance from `e` to the nearest pole.
    pub fn distance(&self, e: f64) -> f64 {
        self.all().iter().map(|&x| libm::fabs(e - x)).fold(f64::INFINITY, f64::min)
    }
}

pub fn pole_map(p: &ModelParams, trunc: &TruncationConfig) -> PoleMap {
    let cp = p.couplings();
    let span = 0..=trunc.n_max;
    let mut map = PoleMap {
        a_poles: span.clone().map(|m| m as f64 - cp.g_sum * cp.g_sum).collect(),
        ..PoleMap::default()
    };
    match p.regime() {
        Regime::EqualCoupling => map.integer_poles = span.map(|m| m as f64).collect(),
        _ => map.b_poles = span.map(|m| m as f64 - cp.g_diff * cp.g_diff).collect(),
    }
    map
}

/// Working precision of the determinant.
///
/// The truncated A-row picks up a multiple of the B-row that grows like
/// `(g/g′)^N`, so the determinant loses `N·log2(g/|g′|)` bits. Twice that loss
/// plus a 96-bit margin leaves enough digits to polish roots well past double
/// precision.
pub fn auto_bits(p: &ModelParams, trunc: &TruncationConfig) -> Option<usize> {
    let cp = p.couplings();
    match p.regime() {
        Regime::General => {
            let ratio = (cp.g_sum / libm::fabs(cp.g_diff)).max(2.0);
            Some(96 + libm::ceil(2.0 * trunc.n_max as f64 * libm::log2(ratio)) as usize)
        }
        Regime::EqualCoupling if cp.g_sum > EQUAL_DOUBLE_MAX_G => Some(EQUAL_BITS),
        _ => None,
    }
}

fn resolve_bits(p: &ModelParams, trunc: &TruncationConfig, precision: Precision) -> Option<usize> {
    match precision {
        Precision::Double => None,
        Precision::Bits(b) => Some(b),
        Precision::Auto => auto_bits(p, trunc),
    }
}

/// `Σ (x_n − s·y_n)` with its tail ratio.
fn signed_sum<R: Real>(x: &[R], y: &[R], s: f64, like: &R) -> (R, f64) {
    let sgn = like.lift(s);
    let mut sum = like.lift(0.0);
    let mut peak = 0.0f64;
    let mut last = 0.0f64;
    for (a, b) in x.iter().zip(y) {
        let t = a.clone() - sgn.clone() * b.clone();
        last = t.to_f64().abs();
        sum = sum + t;
        peak = peak.max(sum.to_f64().abs());
    }
    let tail = if last == 0.0 { 0.0 } else { last / peak };
    (sum, tail)
}

/// The four entries, in any precision, with the worst tail ratio.
pub fn g_entries<R: Real>(
    p: &ModelParams,
    parity: Parity,
    energy: R,
    trunc: &TruncationConfig,
) -> Result<([R; 4], f64)> {
    let s = parity.sign();
    let one = energy.lift(1.0);
    let zero = energy.lift(0.0);
    let mut tail = 0.0f64;
    let mut col = |init: (R, R)| -> Result<(R, R)> {
        let d = d_space_coeffs(p, parity, energy.clone(), init, trunc)?;
        let pa = initial_from_d(&d, Space::A, p, trunc)?;
        let a = a_space_coeffs(p, energy.clone(), pa.values, trunc)?;
        let (ga, ta) = signed_sum(&a.u, &a.z, s, &energy);
        let pb = initial_from_d(&d, Space::B, p, trunc)?;
        let b = b_space_coeffs(p, energy.clone(), pb.values, trunc)?;
        let (gb, tb) = signed_sum(&b.v, &b.w, s, &energy);
        tail = tail.max(ta).max(tb);
        Ok((ga, gb))
    };
    let (g11, g21) = col((one.clone(), zero.clone()))?;
    let (g12, g22) = col((zero, one))?;
    Ok(([g11, g12, g21, g22], tail))
}

fn det<R: Real>(g: &[R; 4]) -> R {
    g[0].clone() * g[3].clone() - g[1].clone() * g[2].clone()
}

fn is_pole(e: &Error) -> bool {
    matches!(e, Error::PoleAtA(_) | Error::PoleAtB(_) | Error::PoleAtInteger(_))
}

fn require(p: &ModelParams, regime: Regime, expected: &'static str) -> Result<()> {
    let found = p.regime();
    if found == regime {
        Ok(())
    } else {
        Err(Error::WrongRegime { expected, found })
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// One entry of the determinant at automatic precision.
pub fn g_entry(p: &ModelParams, parity: Parity, e: f64, which: Entry, trunc: &TruncationConfig) -> Result<f64> {
    require(p, Regime::General, "general")?;
    let g = match auto_bits(p, trunc) {
        Some(bits) => g_entries(p, parity, Mp::new(e, bits), trunc)?.0.map(|x| x.to_f64()),
        None => g_entries(p, parity, e, trunc)?.0,
    };
    Ok(match which {
        Entry::G11 => g[0],
        Entry::G12 => g[1],
        Entry::G21 => g[2],
        Entry::G22 => g[3],
    })
}

/// `G11·G22 − G12·G21` at automatic precision.
pub fn g_det(p: &ModelParams, parity: Parity, e: f64, trunc: &TruncationConfig) -> Result<GEvaluation> {
    g_det_with(p, parity, e, trunc, Precision::Auto)
}

pub fn g_det_with(
    p: &ModelParams,
    parity: Parity,
    e: f64,
    trunc: &TruncationConfig,
    precision: Precision,
) -> Result<GEvaluation> {
    require(p, Regime::General, "general")?;
    let out = match resolve_bits(p, trunc, precision) {
        Some(bits) => g_entries(p, parity, Mp::new(e, bits), trunc)
            .map(|(g, t)| (det(&g).to_f64(), g.map(|x| x.to_f64()), t)),
        None => g_entries(p, parity, e, trunc).map(|(g, t)| (det(&g), g, t)),
    };
    evaluation(e, parity, trunc, out.map(|(v, g, t)| (v, Some(g), t)))
}

fn evaluation(
    e: f64,
    parity: Parity,
    trunc: &TruncationConfig,
    out: Result<(f64, Option<[f64; 4]>, f64)>,
) -> Result<GEvaluation> {
    let mut ev = GEvaluation {
        energy: e,
        value: None,
        parity,
        n_max_used: trunc.n_max,
        pole_adjacent: false,
        entries: None,
        tail: f64::NAN,
    };
    match out {
        Ok((v, entries, tail)) => {
            ev.value = finite(v);
            ev.entries = entries;
            ev.tail = tail;
        }
        Err(err) if is_pole(&err) => ev.pole_adjacent = true,
        Err(err) => return Err(err),
    }
    Ok(ev)
}

/// Equal-coupling `G = Σ (u_n ∓ z_n) g^n`, any precision.
///
/// The `A+` initial values come from the three-term Fock chain, so integer
/// energies with a nonzero bracket factor are poles of this evaluation too.
pub fn g_equal_value<R: Real>(p: &ModelParams, parity: Parity, energy: R, trunc: &TruncationConfig) -> Result<(R, f64)> {
    let d = three_term_coeffs(p, parity, energy.clone(), InitChoice::Auto, trunc)?;
    let pr = eq_initial_from_d(&d, p, trunc)?;
    let s = eq_coupling_coeffs(p, energy.clone(), pr.values, trunc)?;
    let (g, t) = signed_sum(&s.u, &s.z, parity.sign(), &energy);
    Ok((g, t.max(pr.tail_ratio.min(f64::MAX))))
}

pub fn g_equal(p: &ModelParams, parity: Parity, e: f64, trunc: &TruncationConfig) -> Result<GEvaluation> {
    g_equal_with(p, parity, e, trunc, Precision::Auto)
}

pub fn g_equal_with(
    p: &ModelParams,
    parity: Parity,
    e: f64,
    trunc: &TruncationConfig,
    precision: Precision,
) -> Result<GEvaluation> {
    require(p, Regime::EqualCoupling, "equal_coupling")?;
    let out = match resolve_bits(p, trunc, precision) {
        Some(bits) => g_equal_value(p, parity, Mp::new(e, bits), trunc).map(|(v, t)| (v.to_f64(), t)),
        None => g_equal_value(p, parity, e, trunc),
    };
    evaluation(e, parity, trunc, out.map(|(v, t)| (v, None, t)))
}

/// Last scaled coefficient of the forward three-term chain over its largest.
pub fn cf_value<R: Real>(p: &ModelParams, parity: Parity, energy: R, trunc: &TruncationConfig) -> Result<R> {
    let d = three_term_coeffs(p, parity, energy, InitChoice::Auto, trunc)?;
    let mut peak = d.a[0].abs();
    for a in &d.a {
        let m = a.abs();
        if m > peak {
            peak = m;
        }
    }
    let last = d.a[d.a.len() - 1].clone();
    if peak.is_zero() {
        return Ok(last);
    }
    Ok(last / peak)
}

/// Continued-fraction residual at automatic precision.
pub fn cf_residual(p: &ModelParams, parity: Parity, e: f64, trunc: &TruncationConfig) -> Result<f64> {
    cf_residual_with(p, parity, e, trunc, Precision::Auto)
}

pub fn cf_residual_with(
    p: &ModelParams,
    parity: Parity,
    e: f64,
    trunc: &TruncationConfig,
    precision: Precision,
) -> Result<f64> {
    require(p, Regime::EqualCoupling, "equal_coupling")?;
    match resolve_bits(p, trunc, precision) {
        Some(bits) => cf_value(p, parity, Mp::new(e, bits), trunc).map(|v| v.to_f64()),
        None => cf_value(p, parity, e, trunc),
    }
}

/// Which G-function a [`GFunction`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Determinant,
    Equal,
    ContinuedFraction,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Determinant => "determinant",
            Method::Equal => "equal",
            Method::ContinuedFraction => "continued_fraction",
        }
    }
}

/// A G-function bound to one parameter point, parity and truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GFunction {
    pub params: ModelParams,
    pub parity: Parity,
    pub trunc: TruncationConfig,
    pub method: Method,
    pub precision: Precision,
}

/// A root polished in the evaluator's precision, with the decay of the
/// Fock-space coefficients built on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolishedRoot {
    pub energy: f64,
    pub coeff_decay: f64,
}

impl GFunction {
    pub fn new(params: ModelParams, parity: Parity, method: Method, trunc: TruncationConfig) -> Result<Self> {
        let want = match method {
            Method::Determinant => (Regime::General, "general"),
            _ => (Regime::EqualCoupling, "equal_coupling"),
        };
        require(&params, want.0, want.1)?;
        Ok(GFunction {
            params,
            parity,
            trunc,
            method,
            precision: Precision::Auto,
        })
    }

    /// Determinant for the general regime, scalar series at equal couplings.
    pub fn for_params(params: ModelParams, parity: Parity, trunc: TruncationConfig) -> Result<Self> {
        let method = match params.regime() {
            Regime::EqualCoupling => Method::Equal,
            _ => Method::Determinant,
        };
        Self::new(params, parity, method, trunc)
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_trunc(mut self, trunc: TruncationConfig) -> Self {
        self.trunc = trunc;
        self
    }

    /// Mantissa bits in use, `None` for double.
    pub fn bits(&self) -> Option<usize> {
        resolve_bits(&self.params, &self.trunc, self.precision)
    }

    pub fn eval(&self, e: f64) -> GEvaluation {
        let (p, par, t, prec) = (&self.params, self.parity, &self.trunc, self.precision);
        let out = match self.method {
            Method::Determinant => g_det_with(p, par, e, t, prec),
            Method::Equal => g_equal_with(p, par, e, t, prec),
            Method::ContinuedFraction => {
                let r = cf_residual_with(p, par, e, t, prec);
                evaluation(e, par, t, r.map(|v| (v, None, 0.0)))
            }
        };
        // The regime was checked on construction; anything else is numerical.
        out.unwrap_or(GEvaluation {
            energy: e,
            value: None,
            parity: par,
            n_max_used: t.n_max,
            pole_adjacent: false,
            entries: None,
            tail: f64::NAN,
        })
    }

    pub fn value(&self, e: f64) -> Option<f64> {
        self.eval(e).value
    }

    /// Poles this evaluator cannot cross, for this parity.
    pub fn poles(&self) -> Vec<f64> {
        let map = pole_map(&self.params, &self.trunc);
        let mut v = match self.method {
            Method::Determinant => [map.a_poles, map.b_poles].concat(),
            Method::Equal => map.a_poles,
            Method::ContinuedFraction => Vec::new(),
        };
        if self.method != Method::Determinant {
            let first = if libm::fabs(self.params.delta1 - self.params.delta2) <= EPS_EQ { 0 } else { 1 };
            for m in first..=self.trunc.n_max {
                if libm::fabs(self.parity.bracket(&self.params, m)) > EPS_EQ {
                    v.push(m as f64);
                }
            }
        }
        v.sort_by(f64::total_cmp);
        v
    }

    /// Polishes a sign-change bracket to well below double precision and
    /// measures the tail-to-peak ratio of the Fock coefficients at the root.
    pub fn polish(&self, lo: f64, hi: f64) -> Result<PolishedRoot> {
        match self.bits() {
            Some(bits) => self.polish_in(Mp::new(lo, bits), Mp::new(hi, bits), bits / 2),
            None => self.polish_in(lo, hi, 50),
        }
    }

    fn value_r<R: Real>(&self, e: &R) -> Result<R> {
        let (p, par, t) = (&self.params, self.parity, &self.trunc);
        match self.method {
            Method::Determinant => g_entries(p, par, e.clone(), t).map(|(g, _)| det(&g)),
            Method::Equal => g_equal_value(p, par, e.clone(), t).map(|(v, _)| v),
            Method::ContinuedFraction => cf_value(p, par, e.clone(), t),
        }
    }

    fn polish_in<R: Real>(&self, lo: R, hi: R, tol_bits: usize) -> Result<PolishedRoot> {
        let tol = lo.lift(libm::ldexp(1.0, -(tol_bits as i32)) * (1.0 + lo.to_f64().abs()));
        let root = illinois(|e| self.value_r(e), lo, hi, &tol, 400)?;
        let (p, par, t) = (&self.params, self.parity, &self.trunc);
        let decay = match self.method {
            Method::Determinant => {
                let (g, _) = g_entries(p, par, root.clone(), t)?;
                let [g11, g12, g21, g22] = g;
                // Null vector of G from the better-conditioned row.
                let (a0, b0) = if g21.abs().to_f64() + g22.abs().to_f64() > 0.0 {
                    (g22, -g21)
                } else {
                    (g12, -g11)
                };
                let n = if a0.abs() > b0.abs() { a0.abs() } else { b0.abs() };
                if n.is_zero() {
                    return Err(Error::NonFinite("null vector"));
                }
                let d = d_space_coeffs(p, par, root.clone(), (a0 / n.clone(), b0 / n), t)?;
                d.decay()
            }
            _ => three_term_coeffs(p, par, root.clone(), InitChoice::Auto, t)?.decay(),
        };
        Ok(PolishedRoot {
            energy: root.to_f64(),
            coeff_decay: decay,
        })
    }
}

fn negative<R: Real>(x: &R) -> bool {
    *x < x.lift(0.0)
}

/// Illinois-modified regula falsi on a sign-change bracket.
pub fn illinois<R: Real, F: Fn(&R) -> Result<R>>(f: F, lo: R, hi: R, tol: &R, max_iter: usize) -> Result<R> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(&a)?;
    let mut fb = f(&b)?;
    if fa.is_zero() {
        return Ok(a);
    }
    if fb.is_zero() {
        return Ok(b);
    }
    if negative(&fa) == negative(&fb) {
        return Err(Error::NoSignChange { lo: a.to_f64(), hi: b.to_f64() });
    }
    let half = a.lift(0.5);
    let mut side = 0i8;
    for _ in 0..max_iter {
        let width = (b.clone() - a.clone()).abs();
        if width <= *tol {
            break;
        }
        let mut c = (a.clone() * fb.clone() - b.clone() * fa.clone()) / (fb.clone() - fa.clone());
        let inside = |c: &R| c.is_finite() && ((*c > a && *c < b) || (*c > b && *c < a));
        if !inside(&c) {
            c = half.clone() * (a.clone() + b.clone());
        }
        let fc = f(&c)?;
        if fc.is_zero() {
            return Ok(c);
        }
        if negative(&fc) == negative(&fb) {
            b = c;
            fb = fc;
            if side == -1 {
                fa = fa * half.clone();
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb = fb * half.clone();
            }
            side = 1;
        }
    }
    Ok(half * (a + b))
}
