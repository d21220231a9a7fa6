//! Expansion-coefficient chains.
//!
//! Four expansions of the same eigenvector are used:
//!
//! * the parity-adapted Fock expansion `|d⟩` with coefficients `a_n, b_n`,
//! * the `A+` displaced basis (`d† + g`) with `u, v, w, z`,
//! * the `B+` displaced basis (`d† + g′`) with `u, v, w, z`,
//! * the equal-coupling reduction of the `A+` chain with `u, y, x, z`.
//!
//! Every chain is stored pre-scaled: the stored value is `c_n · s^n`, where the
//! scale `s` is the displacement the G-functions evaluate at (`g` for the
//! d-space and A-space chains, `g′` for the B-space chain). The series sums
//! consumed downstream become plain sums over the stored values, and tail decay
//! can be read off directly.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Parity, Regime, EPS_EQ};
use crate::real::Real;

/// Default exclusion radius around pole energies (units of ω).
pub const EPS_POLE: f64 = 1e-6;
/// Default relative tail threshold for the initial-value projections.
pub const TAIL_TOL: f64 = 1e-12;

/// Truncation and pole settings shared by all chains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationConfig {
    /// Highest retained index `N_c`.
    pub n_max: usize,
    /// Increment used by the stability re-run.
    pub n_max_step: usize,
    pub eps_pole: f64,
    pub tail_tol: f64,
}

impl TruncationConfig {
    pub fn new(n_max: usize, n_max_step: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::Truncation("n_max must be at least 2"));
        }
        if n_max_step < 1 {
            return Err(Error::Truncation("n_max_step must be at least 1"));
        }
        Ok(TruncationConfig {
            n_max,
            n_max_step,
            eps_pole: EPS_POLE,
            tail_tol: TAIL_TOL,
        })
    }

    /// Default for the unequal-coupling determinant.
    pub fn general() -> Self {
        Self::new(80, 1).unwrap()
    }

    /// Default for the equal-coupling solvers.
    pub fn equal() -> Self {
        Self::new(120, 1).unwrap()
    }

    pub fn for_regime(regime: Regime) -> Self {
        match regime {
            Regime::EqualCoupling => Self::equal(),
            _ => Self::general(),
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max.max(2);
        self
    }

    /// The truncation used by the stability re-run.
    pub fn stepped(&self) -> Self {
        self.with_n_max(self.n_max + self.n_max_step)
    }
}

/// Which displaced basis an initial-value projection targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    A,
    B,
}

/// Initial value of the three-term chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitChoice {
    /// `b0 = 1`; used when `Δ1 != Δ2`.
    B0,
    /// `a0 = 1`; used when `Δ1 == Δ2`.
    A0,
    /// Pick by the rule above.
    Auto,
}

/// Parity-adapted Fock coefficients, stored as `a_n g^n`, `b_n g^n`.
#[derive(Clone, Debug)]
pub struct DSeries<R> {
    pub a: Vec<R>,
    pub b: Vec<R>,
    pub parity: Parity,
    pub energy: R,
    pub scale: f64,
}

impl<R: Real> DSeries<R> {
    pub fn n_max(&self) -> usize {
        self.a.len() - 1
    }

    /// Unscaled `a_n`.
    pub fn a_n(&self, n: usize) -> f64 {
        self.a[n].to_f64() / libm::pow(self.scale, n as f64)
    }

    /// Unscaled `b_n`.
    pub fn b_n(&self, n: usize) -> f64 {
        self.b[n].to_f64() / libm::pow(self.scale, n as f64)
    }

    /// Tail-to-peak ratio of the scaled coefficients.
    pub fn decay(&self) -> f64 {
        decay_of(&[&self.a, &self.b])
    }
}

/// `A+` displaced-basis coefficients, stored scaled by `g^n`.
#[derive(Clone, Debug)]
pub struct ASeries<R> {
    pub u: Vec<R>,
    pub v: Vec<R>,
    pub w: Vec<R>,
    pub z: Vec<R>,
    pub energy: R,
}

/// `B+` displaced-basis coefficients, stored scaled by `g′^n`.
#[derive(Clone, Debug)]
pub struct BSeries<R> {
    pub u: Vec<R>,
    pub v: Vec<R>,
    pub w: Vec<R>,
    pub z: Vec<R>,
    pub energy: R,
}

/// Equal-coupling `A+` chain, stored scaled by `g^n`.
///
/// `y = Δ2 v + Δ1 w` feeds the `u` line; `x = Δ1 v + Δ2 w` feeds the `z`
/// line. The two coincide when `Δ1 == Δ2`.
#[derive(Clone, Debug)]
pub struct EqSeries<R> {
    pub u: Vec<R>,
    pub y: Vec<R>,
    pub x: Vec<R>,
    pub z: Vec<R>,
    pub energy: R,
}

/// Result of projecting a d-space series onto a displaced vacuum.
#[derive(Clone, Debug)]
pub struct Projection<R> {
    /// `(v0, w0, z0)` for the A-space, `(u0, w0, z0)` for the B-space,
    /// `(y0, x0, z0)` for the equal-coupling chain.
    pub values: [R; 3],
    /// Largest `|last term| / |partial sum|` over the three sums.
    pub tail_ratio: f64,
    pub converged: bool,
}

pub(crate) fn decay_of<R: Real>(chains: &[&Vec<R>]) -> f64 {
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    for c in chains {
        let n = c.len();
        for (i, x) in c.iter().enumerate() {
            let v = x.to_f64().abs();
            peak = peak.max(v);
            if i + 2 >= n {
                tail = tail.max(v);
            }
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        tail / peak
    }
}

fn require(p: &ModelParams, ok: &[Regime], expected: &'static str) -> Result<()> {
    let found = p.regime();
    if ok.contains(&found) {
        Ok(())
    } else {
        Err(Error::WrongRegime { expected, found })
    }
}

fn check_poles(energy: f64, shift: f64, trunc: &TruncationConfig, err: fn(usize) -> Error) -> Result<()> {
    // Poles sit at m - shift for 0 <= m <= n_max.
    let m = libm::round(energy + shift);
    if m >= 0.0 && m <= trunc.n_max as f64 && libm::fabs(energy + shift - m) <= trunc.eps_pole {
        return Err(err(m as usize));
    }
    Ok(())
}

fn nat<R: Real>(like: &R, m: usize) -> R {
    like.lift(m as f64)
}

/// `Δ2 ± Δ1(−1)^m` formed in the working precision. The chains only cancel
/// their divergent parts when this matches `Δ1`, `Δ2` used elsewhere exactly.
fn bracket_r<R: Real>(p: &ModelParams, parity: Parity, m: usize, like: &R) -> R {
    let (d1, d2) = (like.lift(p.delta1), like.lift(p.delta2));
    let alt = if m % 2 == 0 { 1.0 } else { -1.0 };
    if parity.sign() * alt > 0.0 {
        d2 + d1
    } else {
        d2 - d1
    }
}

fn prev<R: Real>(c: &[R], m: usize, zero: &R) -> R {
    if m == 0 {
        zero.clone()
    } else {
        c[m - 1].clone()
    }
}

/// Fock-space chain for `g1 != g2`, from `(a0, b0)`.
pub fn d_space_coeffs<R: Real>(
    p: &ModelParams,
    parity: Parity,
    energy: R,
    init: (R, R),
    trunc: &TruncationConfig,
) -> Result<DSeries<R>> {
    require(p, &[Regime::General], "general")?;
    let cp = p.couplings();
    let e = energy;
    let zero = e.lift(0.0);
    let g = e.lift(cp.g_sum);
    let gp = e.lift(cp.g_diff);
    let g2 = g.clone() * g.clone();
    let ggp = g.clone() * gp.clone();
    let ratio = g.clone() / gp;
    let n = trunc.n_max;
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    a.push(init.0);
    b.push(init.1);
    for m in 0..n {
        let c = bracket_r(p, parity, m, &e);
        let me = nat(&e, m) - e.clone();
        let m1 = nat(&e, m + 1);
        let a_next = (c.clone() * b[m].clone()
            - me.clone() * a[m].clone()
            - g2.clone() * prev(&a, m, &zero))
            / m1.clone();
        let b_next = ratio.clone()
            * (c * a[m].clone() - me * b[m].clone() - ggp.clone() * prev(&b, m, &zero))
            / m1;
        a.push(a_next);
        b.push(b_next);
    }
    Ok(DSeries {
        a,
        b,
        parity,
        energy: e,
        scale: cp.g_sum,
    })
}

fn resolve_init(p: &ModelParams, init: InitChoice) -> InitChoice {
    match init {
        InitChoice::Auto if libm::fabs(p.delta1 - p.delta2) <= EPS_EQ => InitChoice::A0,
        InitChoice::Auto => InitChoice::B0,
        other => other,
    }
}

/// Three-term chain for `g1 == g2`.
///
/// `b_m = [Δ2 ± Δ1(−1)^m] a_m / (m − E)` eliminates `b`, so the chain has an
/// integer pole at every `m` whose bracket factor is nonzero (the `m = 0`
/// pole is absent when starting from `b0 = 1`).
pub fn three_term_coeffs<R: Real>(
    p: &ModelParams,
    parity: Parity,
    energy: R,
    init: InitChoice,
    trunc: &TruncationConfig,
) -> Result<DSeries<R>> {
    require(p, &[Regime::EqualCoupling], "equal_coupling")?;
    let init = resolve_init(p, init);
    let e = energy;
    let e64 = e.to_f64();
    let zero = e.lift(0.0);
    let g = p.couplings().g_sum;
    let g2 = e.lift(g) * e.lift(g);
    let n = trunc.n_max;
    let first = if init == InitChoice::A0 { 0 } else { 1 };
    for m in first..=n {
        if libm::fabs(parity.bracket(p, m)) > EPS_EQ && libm::fabs(e64 - m as f64) <= trunc.eps_pole {
            return Err(Error::PoleAtInteger(m));
        }
    }
    let b_of = |m: usize, a_m: &R| -> R {
        let c = parity.bracket(p, m);
        if libm::fabs(c) <= EPS_EQ {
            zero.clone()
        } else {
            bracket_r(p, parity, m, &e) * a_m.clone() / (nat(&e, m) - e.clone())
        }
    };
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    match init {
        InitChoice::B0 => {
            let c0 = parity.bracket(p, 0);
            if libm::fabs(c0) <= EPS_EQ {
                return Err(Error::Truncation("b0 = 1 needs a nonzero bracket factor at m = 0"));
            }
            a.push(-e.clone() / bracket_r(p, parity, 0, &e));
            b.push(e.lift(1.0));
        }
        _ => {
            let a0 = e.lift(1.0);
            b.push(b_of(0, &a0));
            a.push(a0);
        }
    }
    for m in 0..n {
        let c = bracket_r(p, parity, m, &e);
        let me = nat(&e, m) - e.clone();
        let a_next = (c * b[m].clone() - me * a[m].clone() - g2.clone() * prev(&a, m, &zero))
            / nat(&e, m + 1);
        b.push(b_of(m + 1, &a_next));
        a.push(a_next);
    }
    Ok(DSeries {
        a,
        b,
        parity,
        energy: e,
        scale: g,
    })
}

struct SumTracker<R> {
    sum: R,
    last: R,
}

impl<R: Real> SumTracker<R> {
    fn new(zero: &R) -> Self {
        SumTracker {
            sum: zero.clone(),
            last: zero.clone(),
        }
    }
    fn push(&mut self, t: R) {
        self.sum = self.sum.clone() + t.clone();
        self.last = t;
    }
    fn ratio(&self) -> f64 {
        let s = self.sum.to_f64().abs();
        let l = self.last.to_f64().abs();
        if l == 0.0 {
            0.0
        } else if s == 0.0 {
            f64::INFINITY
        } else {
            l / s
        }
    }
}

fn projection<R: Real>(sums: [SumTracker<R>; 3], trunc: &TruncationConfig) -> Projection<R> {
    let tail_ratio = sums.iter().map(SumTracker::ratio).fold(0.0, f64::max);
    let [s0, s1, s2] = sums;
    Projection {
        values: [s0.sum, s1.sum, s2.sum],
        tail_ratio,
        converged: tail_ratio <= trunc.tail_tol,
    }
}

/// Projects `|d⟩` onto the `A+` or `B+` vacuum.
///
/// A-space: `v0 = Σ b_n (−g)^n`, `w0 = ±Σ b_n g^n`, `z0 = ±Σ a_n g^n`.
/// B-space: `u0 = Σ a_n (−g′)^n`, `w0 = ±Σ b_n g′^n`, `z0 = ±Σ a_n g′^n`.
/// The common factor `e^{−s²/2}` is dropped.
pub fn initial_from_d<R: Real>(
    series: &DSeries<R>,
    which: Space,
    p: &ModelParams,
    trunc: &TruncationConfig,
) -> Result<Projection<R>> {
    let e = &series.energy;
    let zero = e.lift(0.0);
    let sgn = e.lift(series.parity.sign());
    let mut s = [SumTracker::new(&zero), SumTracker::new(&zero), SumTracker::new(&zero)];
    match which {
        Space::A => {
            for (n, (a, b)) in series.a.iter().zip(&series.b).enumerate() {
                let alt = if n % 2 == 0 { b.clone() } else { -b.clone() };
                s[0].push(alt);
                s[1].push(sgn.clone() * b.clone());
                s[2].push(sgn.clone() * a.clone());
            }
        }
        Space::B => {
            require(p, &[Regime::General], "general")?;
            let cp = p.couplings();
            // Chains are scaled by g; the B vacuum sits at g′.
            let r = e.lift(cp.g_diff) / e.lift(series.scale);
            let mut rn = e.lift(1.0);
            for (n, (a, b)) in series.a.iter().zip(&series.b).enumerate() {
                let ar = a.clone() * rn.clone();
                let alt = if n % 2 == 0 { ar.clone() } else { -ar.clone() };
                s[0].push(alt);
                s[1].push(sgn.clone() * b.clone() * rn.clone());
                s[2].push(sgn.clone() * ar);
                rn = rn * r.clone();
            }
        }
    }
    Ok(projection(s, trunc))
}

/// Projects an equal-coupling `|d⟩` onto the `A+` vacuum, giving
/// `(y0, x0, z0)`.
pub fn eq_initial_from_d<R: Real>(
    series: &DSeries<R>,
    p: &ModelParams,
    trunc: &TruncationConfig,
) -> Result<Projection<R>> {
    let pr = initial_from_d(series, Space::A, p, trunc)?;
    let e = &series.energy;
    let (d1, d2) = (e.lift(p.delta1), e.lift(p.delta2));
    let [v0, w0, z0] = pr.values;
    let y0 = d2.clone() * v0.clone() + d1.clone() * w0.clone();
    let x0 = d1 * v0 + d2 * w0;
    Ok(Projection {
        values: [y0, x0, z0],
        tail_ratio: pr.tail_ratio,
        converged: pr.converged,
    })
}

/// `A+` chain from `(v0, w0, z0)`.
pub fn a_space_coeffs<R: Real>(
    p: &ModelParams,
    energy: R,
    init: [R; 3],
    trunc: &TruncationConfig,
) -> Result<ASeries<R>> {
    require(p, &[Regime::General, Regime::EqualCoupling], "general or equal_coupling")?;
    let cp = p.couplings();
    let (gs, gd) = (cp.g_sum, cp.g_diff);
    check_poles(energy.to_f64(), gs * gs, trunc, Error::PoleAtA)?;
    let e = energy;
    let zero = e.lift(0.0);
    let (d1, d2) = (e.lift(p.delta1), e.lift(p.delta2));
    let g = e.lift(gs);
    let gp = e.lift(gd);
    let g2 = g.clone() * g.clone();
    let two_ggp = e.lift(2.0) * g.clone() * gp.clone();
    let kv = g.clone() / (g.clone() - gp.clone());
    let kw = g.clone() / (g.clone() + gp);
    let three_g2 = e.lift(3.0) * g2.clone();
    let half = e.lift(0.5);
    let n = trunc.n_max;
    let [v0, w0, z0] = init;
    let (mut u, mut v, mut w, mut z) = (
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
    );
    v.push(v0);
    w.push(w0);
    z.push(z0);
    for m in 0..=n {
        let me = nat(&e, m) - e.clone();
        let um = (d2.clone() * v[m].clone() + d1.clone() * w[m].clone()) / (me.clone() - g2.clone());
        u.push(um.clone());
        if m == n {
            break;
        }
        let m1 = nat(&e, m + 1);
        let base = me + g2.clone();
        let v_next = -(kv.clone()
            * (d1.clone() * z[m].clone() + d2.clone() * um.clone()
                - (base.clone() - two_ggp.clone()) * v[m].clone()))
            / m1.clone()
            - g2.clone() * prev(&v, m, &zero) / m1.clone();
        let w_next = -(kw.clone()
            * (d2.clone() * z[m].clone() + d1.clone() * um
                - (base.clone() + two_ggp.clone()) * w[m].clone()))
            / m1.clone()
            - g2.clone() * prev(&w, m, &zero) / m1.clone();
        let z_next = -(half.clone()
            * (d1.clone() * v[m].clone() + d2.clone() * w[m].clone()
                - (base - g2.clone() + three_g2.clone()) * z[m].clone()))
            / m1.clone()
            - g2.clone() * prev(&z, m, &zero) / m1;
        v.push(v_next);
        w.push(w_next);
        z.push(z_next);
    }
    Ok(ASeries { u, v, w, z, energy: e })
}

/// `B+` chain from `(u0, w0, z0)`.
pub fn b_space_coeffs<R: Real>(
    p: &ModelParams,
    energy: R,
    init: [R; 3],
    trunc: &TruncationConfig,
) -> Result<BSeries<R>> {
    require(p, &[Regime::General], "general")?;
    let cp = p.couplings();
    let (gs, gd) = (cp.g_sum, cp.g_diff);
    check_poles(energy.to_f64(), gd * gd, trunc, Error::PoleAtB)?;
    let e = energy;
    let zero = e.lift(0.0);
    let (d1, d2) = (e.lift(p.delta1), e.lift(p.delta2));
    let g = e.lift(gs);
    let gp = e.lift(gd);
    let gp2 = gp.clone() * gp.clone();
    let two_ggp = e.lift(2.0) * g.clone() * gp.clone();
    let ku = gp.clone() / (gp.clone() - g.clone());
    let kz = gp.clone() / (g + gp);
    let three_gp2 = e.lift(3.0) * gp2.clone();
    let half = e.lift(0.5);
    let n = trunc.n_max;
    let [u0, w0, z0] = init;
    let (mut u, mut v, mut w, mut z) = (
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
    );
    u.push(u0);
    w.push(w0);
    z.push(z0);
    for m in 0..=n {
        let me = nat(&e, m) - e.clone();
        let vm = (d1.clone() * z[m].clone() + d2.clone() * u[m].clone()) / (me.clone() - gp2.clone());
        v.push(vm.clone());
        if m == n {
            break;
        }
        let m1 = nat(&e, m + 1);
        let base = me + gp2.clone();
        let u_next = -(ku.clone()
            * (d2.clone() * vm.clone() + d1.clone() * w[m].clone()
                - (base.clone() - two_ggp.clone()) * u[m].clone()))
            / m1.clone()
            - gp2.clone() * prev(&u, m, &zero) / m1.clone();
        let w_next = -(half.clone()
            * (d2.clone() * z[m].clone() + d1.clone() * u[m].clone()
                - (base.clone() - gp2.clone() + three_gp2.clone()) * w[m].clone()))
            / m1.clone()
            - gp2.clone() * prev(&w, m, &zero) / m1.clone();
        let z_next = -(kz.clone()
            * (d1.clone() * vm + d2.clone() * w[m].clone() - (base + two_ggp.clone()) * z[m].clone()))
            / m1.clone()
            - gp2.clone() * prev(&z, m, &zero) / m1;
        u.push(u_next);
        w.push(w_next);
        z.push(z_next);
    }
    Ok(BSeries { u, v, w, z, energy: e })
}

/// Equal-coupling `A+` chain from `(y0, x0, z0)`.
///
/// Only `m − g²` is a pole; integer energies are regular here.
pub fn eq_coupling_coeffs<R: Real>(
    p: &ModelParams,
    energy: R,
    init: [R; 3],
    trunc: &TruncationConfig,
) -> Result<EqSeries<R>> {
    require(p, &[Regime::EqualCoupling], "equal_coupling")?;
    let gs = p.couplings().g_sum;
    check_poles(energy.to_f64(), gs * gs, trunc, Error::PoleAtA)?;
    let e = energy;
    let zero = e.lift(0.0);
    let g2 = e.lift(gs) * e.lift(gs);
    let (d1, d2) = (e.lift(p.delta1), e.lift(p.delta2));
    let cross = e.lift(2.0) * d1.clone() * d2.clone();
    let norm = d1.clone() * d1 + d2.clone() * d2;
    let three_g2 = e.lift(3.0) * g2.clone();
    let half = e.lift(0.5);
    let n = trunc.n_max;
    let [y0, x0, z0] = init;
    let (mut u, mut y, mut x, mut z) = (
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
    );
    y.push(y0);
    x.push(x0);
    z.push(z0);
    for m in 0..=n {
        let me = nat(&e, m) - e.clone();
        let um = y[m].clone() / (me.clone() - g2.clone());
        u.push(um.clone());
        if m == n {
            break;
        }
        let m1 = nat(&e, m + 1);
        let base = me.clone() + g2.clone();
        let y_next = -(cross.clone() * z[m].clone() + norm.clone() * um.clone()
            - base.clone() * y[m].clone())
            / m1.clone()
            - g2.clone() * prev(&y, m, &zero) / m1.clone();
        let x_next = -(norm.clone() * z[m].clone() + cross.clone() * um - base * x[m].clone())
            / m1.clone()
            - g2.clone() * prev(&x, m, &zero) / m1.clone();
        let z_next = -(half.clone() * (x[m].clone() - (me + three_g2.clone()) * z[m].clone()))
            / m1.clone()
            - g2.clone() * prev(&z, m, &zero) / m1;
        y.push(y_next);
        x.push(x_next);
        z.push(z_next);
    }
    Ok(EqSeries { u, y, x, z, energy: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> ModelParams {
        ModelParams::new(0.7, 0.4, 0.8, 0.4).unwrap()
    }

    fn fig2() -> ModelParams {
        ModelParams::new(0.7, 0.4, 0.4, 0.4).unwrap()
    }

    fn tr(n: usize) -> TruncationConfig {
        TruncationConfig::new(n, 1).unwrap()
    }

    #[test]
    fn truncation_validation() {
        assert!(TruncationConfig::new(1, 1).is_err());
        assert!(TruncationConfig::new(2, 0).is_err());
        assert_eq!(TruncationConfig::new(2, 3).unwrap().stepped().n_max, 5);
    }

    #[test]
    fn d_chain_first_step() {
        let p = fig1();
        let g = p.couplings().g_sum;
        for &e in &[0.5, -1.2, 2.25] {
            let d = d_space_coeffs(&p, Parity::Even, e, (1.0, 0.0), &tr(4)).unwrap();
            assert!((d.a_n(1) - e / g).abs() < 1e-15);
        }
        let d = d_space_coeffs(&p, Parity::Even, 0.3, (0.0, 1.0), &tr(4)).unwrap();
        assert!((d.a_n(1) - (0.4 + 0.7) / g).abs() < 1e-15);
        let d = d_space_coeffs(&p, Parity::Odd, 0.3, (0.0, 1.0), &tr(4)).unwrap();
        assert!((d.a_n(1) - (0.4 - 0.7) / g).abs() < 1e-15);
    }

    #[test]
    fn d_chain_rejects_equal_coupling() {
        let err = d_space_coeffs(&fig2(), Parity::Even, 0.5, (1.0, 0.0), &tr(4)).unwrap_err();
        assert!(matches!(err, Error::WrongRegime { found: Regime::EqualCoupling, .. }));
    }

    #[test]
    fn a_chain_zero_splitting_has_no_u() {
        let p = ModelParams::new(0.0, 0.0, 0.8, 0.4).unwrap();
        let s = a_space_coeffs(&p, 0.5, [1.0, 0.3, -0.2], &tr(20)).unwrap();
        assert!(s.u.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn chains_vanish_from_zero_initials() {
        let p = fig1();
        let s = a_space_coeffs(&p, 0.5, [0.0; 3], &tr(20)).unwrap();
        assert!(s.u.iter().chain(&s.v).chain(&s.w).chain(&s.z).all(|&c| c == 0.0));
        let s = b_space_coeffs(&p, 0.5, [0.0; 3], &tr(20)).unwrap();
        assert!(s.u.iter().chain(&s.v).chain(&s.w).chain(&s.z).all(|&c| c == 0.0));
        let s = eq_coupling_coeffs(&fig2(), 0.3, [0.0; 3], &tr(20)).unwrap();
        assert!(s.u.iter().chain(&s.y).chain(&s.z).all(|&c| c == 0.0));
    }

    #[test]
    fn b_chain_zero_splitting_has_no_v() {
        let p = ModelParams::new(0.0, 0.0, 0.8, 0.4).unwrap();
        let s = b_space_coeffs(&p, 0.5, [1.0, 0.3, -0.2], &tr(20)).unwrap();
        assert!(s.v.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eq_chain_zero_splitting_decouples_z() {
        let p = ModelParams::new(0.0, 0.0, 0.4, 0.4).unwrap();
        let s = eq_coupling_coeffs(&p, 0.3, [0.0, 0.0, 1.0], &tr(20)).unwrap();
        assert!(s.y.iter().chain(&s.u).all(|&c| c == 0.0));
        assert!(s.z.iter().any(|&c| c != 0.0));
    }

    #[test]
    fn poles_are_flagged_not_divided() {
        let p = fig1();
        let g2 = 1.2f64 * 1.2;
        assert_eq!(a_space_coeffs(&p, 2.0 - g2, [1.0; 3], &tr(10)).unwrap_err(), Error::PoleAtA(2));
        assert_eq!(b_space_coeffs(&p, 3.0 - 0.16 + 5e-7, [1.0; 3], &tr(10)).unwrap_err(), Error::PoleAtB(3));
        // Beyond the truncation the pole is not reached.
        assert!(a_space_coeffs(&p, 12.0 - g2, [1.0; 3], &tr(10)).is_ok());
        let e = three_term_coeffs(&fig2(), Parity::Even, 1.0, InitChoice::Auto, &tr(10)).unwrap_err();
        assert_eq!(e, Error::PoleAtInteger(1));
    }

    #[test]
    fn reduced_chain_is_regular_at_integers() {
        let p = fig2();
        for m in 0..=10 {
            let s = eq_coupling_coeffs(&p, m as f64, [1.0, 0.5, -0.25], &tr(40)).unwrap();
            assert!(s.u.iter().chain(&s.y).chain(&s.x).chain(&s.z).all(|c| c.is_finite()));
        }
    }

    #[test]
    fn three_term_first_coefficient_near_dark_point() {
        // a1 = -[(Δ2+Δ1)² - 1] a0 / g as E -> 1.
        let p = fig2();
        let g = 0.8;
        let d = three_term_coeffs(&p, Parity::Even, 1.0 - 1e-4, InitChoice::A0, &tr(3)).unwrap();
        let expect = -((0.4f64 + 0.7).powi(2) - 1.0) / g;
        assert!((d.a_n(1) - expect).abs() < 1e-3);
        let d = three_term_coeffs(&p, Parity::Odd, 1.0 + 1e-4, InitChoice::A0, &tr(3)).unwrap();
        let expect = -((0.4f64 - 0.7).powi(2) - 1.0) / g;
        assert!((d.a_n(1) - expect).abs() < 1e-3);
    }

    #[test]
    fn three_term_singlet_brackets_vanish() {
        let p = ModelParams::new(0.5, 0.5, 0.3, 0.3).unwrap();
        for m in 0..8 {
            let c_odd = Parity::Odd.bracket(&p, m);
            let c_even = Parity::Even.bracket(&p, m);
            assert_eq!(c_odd == 0.0, m % 2 == 0);
            assert_eq!(c_even == 0.0, m % 2 == 1);
        }
        // Odd parity never has a pole at even integers.
        assert!(three_term_coeffs(&p, Parity::Odd, 2.0, InitChoice::Auto, &tr(6)).is_ok());
    }

    #[test]
    fn projections_at_zero_displacement() {
        let p = fig2();
        let series = DSeries {
            a: alloc::vec![0.3, 0.0, 0.0],
            b: alloc::vec![1.7, 0.0, 0.0],
            parity: Parity::Odd,
            energy: 0.1,
            scale: 0.0,
        };
        let pr = initial_from_d(&series, Space::A, &p, &tr(2)).unwrap();
        assert_eq!(pr.values, [1.7, -1.7, -0.3]);
        let pr = eq_initial_from_d(&series, &p, &tr(2)).unwrap();
        assert!((pr.values[0] - (0.4 - 0.7) * 1.7).abs() < 1e-15);
        assert_eq!(pr.values[2], -0.3);
        let zero = DSeries { b: alloc::vec![0.0; 3], ..series };
        let pr = initial_from_d(&zero, Space::A, &p, &tr(2)).unwrap();
        assert_eq!(&pr.values[..2], &[0.0, 0.0]);
    }

    #[test]
    fn reduced_chain_matches_full_a_chain() {
        // y and x are linear combinations of v and w of the g′ = 0 A-space chain.
        let p = fig2();
        let (d1, d2) = (p.delta1, p.delta2);
        let (v0, w0, z0) = (0.3, -1.1, 0.7);
        let full = a_space_coeffs(&p, 0.3, [v0, w0, z0], &tr(30)).unwrap();
        let red = eq_coupling_coeffs(&p, 0.3, [d2 * v0 + d1 * w0, d1 * v0 + d2 * w0, z0], &tr(30)).unwrap();
        for n in 0..=30 {
            let y = d2 * full.v[n] + d1 * full.w[n];
            let x = d1 * full.v[n] + d2 * full.w[n];
            let scale = 1.0 + full.v[n].abs() + full.w[n].abs();
            assert!((red.y[n] - y).abs() < 1e-12 * scale, "y at {n}");
            assert!((red.x[n] - x).abs() < 1e-12 * scale, "x at {n}");
            assert!((red.z[n] - full.z[n]).abs() < 1e-12 * (1.0 + full.z[n].abs()));
            assert!((red.u[n] - full.u[n]).abs() < 1e-12 * (1.0 + full.u[n].abs()));
        }
    }
}
