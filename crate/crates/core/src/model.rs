//! Physical parameters, derived couplings and solver routing.

use core::fmt;

use crate::error::{Error, Result};

/// Default coupling-equality tolerance.
pub const EPS_EQ: f64 = 1e-12;

/// Qubit splittings and couplings in units of the cavity frequency.
///
/// Constructed through [`validate_params`], which canonicalizes every field to
/// be non-negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub delta1: f64,
    pub delta2: f64,
    pub g1: f64,
    pub g2: f64,
}

/// Which inputs had their sign flipped during canonicalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SignFlips {
    pub delta1: bool,
    pub delta2: bool,
    pub g1: bool,
    pub g2: bool,
}

impl SignFlips {
    pub fn any(&self) -> bool {
        self.delta1 || self.delta2 || self.g1 || self.g2
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validated {
    pub params: ModelParams,
    pub flips: SignFlips,
}

/// `g = g1 + g2` and `g′ = g1 − g2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedCouplings {
    pub g_sum: f64,
    pub g_diff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    General,
    EqualCoupling,
    ZeroCoupling,
    SingleQubitLike,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::General => "general",
            Regime::EqualCoupling => "equal_coupling",
            Regime::ZeroCoupling => "zero_coupling",
            Regime::SingleQubitLike => "single_qubit_like",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Eigenvalue of the joint photon-number/qubit-flip parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Even, Parity::Odd];

    /// `+1` for even, `-1` for odd.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }

    /// Qubit-flip coupling `Δ2 ± Δ1 (−1)^m` of the parity-adapted basis.
    pub fn bracket(self, p: &ModelParams, m: usize) -> f64 {
        let alt = if m % 2 == 0 { 1.0 } else { -1.0 };
        p.delta2 + self.sign() * alt * p.delta1
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Checks finiteness and canonicalizes signs.
///
/// Flipping the sign of `gi` (or `Δi`) is a unitary qubit rotation, so the
/// spectrum is unchanged.
pub fn validate_params(delta1: f64, delta2: f64, g1: f64, g2: f64) -> Result<Validated> {
    for (name, v) in [("delta1", delta1), ("delta2", delta2), ("g1", g1), ("g2", g2)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    let flips = SignFlips {
        delta1: delta1 < 0.0,
        delta2: delta2 < 0.0,
        g1: g1 < 0.0,
        g2: g2 < 0.0,
    };
    // `abs` also maps -0.0 to 0.0.
    let params = ModelParams {
        delta1: libm::fabs(delta1),
        delta2: libm::fabs(delta2),
        g1: libm::fabs(g1),
        g2: libm::fabs(g2),
    };
    Ok(Validated { params, flips })
}

impl ModelParams {
    /// Shorthand for [`validate_params`] that drops the sign-flip record.
    pub fn new(delta1: f64, delta2: f64, g1: f64, g2: f64) -> Result<Self> {
        validate_params(delta1, delta2, g1, g2).map(|v| v.params)
    }

    pub fn omega(&self) -> f64 {
        1.0
    }

    pub fn couplings(&self) -> DerivedCouplings {
        derived_couplings(self)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self, EPS_EQ)
    }

    /// Same qubits with both couplings set to `g1 = g2 = g_sum / 2`.
    pub fn with_equal_couplings(&self, g_sum: f64) -> Self {
        ModelParams {
            g1: 0.5 * g_sum,
            g2: 0.5 * g_sum,
            ..*self
        }
    }
}

pub fn derived_couplings(p: &ModelParams) -> DerivedCouplings {
    DerivedCouplings {
        g_sum: p.g1 + p.g2,
        g_diff: p.g1 - p.g2,
    }
}

pub fn classify_regime(p: &ModelParams, eps_eq: f64) -> Regime {
    let small1 = p.g1 <= eps_eq;
    let small2 = p.g2 <= eps_eq;
    match (small1, small2) {
        (true, true) => Regime::ZeroCoupling,
        (true, false) | (false, true) => Regime::SingleQubitLike,
        _ if libm::fabs(p.g1 - p.g2) <= eps_eq => Regime::EqualCoupling,
        _ => Regime::General,
    }
}
