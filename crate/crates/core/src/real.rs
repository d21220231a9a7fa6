//! Scalar abstraction shared by every coefficient chain.
//!
//! The unequal-coupling determinant cancels roughly `N·log10(g/|g′|)`
//! leading digits at truncation `N`, so the chains are generic over
//! [`Real`] and can run either in `f64` or in the multiprecision [`Mp`].

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, RoundingMode, Sign, WORD_BIT_SIZE};

/// Real field operations needed by the recurrences.
pub trait Real:
    Clone
    + PartialOrd
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Construction context (working precision for [`Mp`], nothing for `f64`).
    type Ctx: Copy + fmt::Debug;

    fn from_f64(x: f64, ctx: Self::Ctx) -> Self;
    fn to_f64(&self) -> f64;
    fn ctx(&self) -> Self::Ctx;
    fn abs(&self) -> Self;
    fn is_finite(&self) -> bool;
    fn is_zero(&self) -> bool;

    /// Constant in the same context as `self`.
    fn lift(&self, x: f64) -> Self {
        Self::from_f64(x, self.ctx())
    }
}

impl Real for f64 {
    type Ctx = ();

    fn from_f64(x: f64, _: ()) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn ctx(&self) {}
    fn abs(&self) -> Self {
        libm::fabs(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

const RM: RoundingMode = RoundingMode::ToEven;

/// Binary floating point number with a run-time mantissa width.
///
/// Binary operations round to the wider of the two operand precisions.
#[derive(Clone)]
pub struct Mp {
    x: BigFloat,
    bits: usize,
}

impl Mp {
    pub fn new(x: f64, bits: usize) -> Self {
        let bits = round_bits(bits);
        Mp {
            x: BigFloat::from_f64(x, bits),
            bits,
        }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    fn wrap(x: BigFloat, bits: usize) -> Self {
        Mp { x, bits }
    }
}

fn round_bits(bits: usize) -> usize {
    let w = WORD_BIT_SIZE;
    bits.max(w).div_ceil(w) * w
}

impl fmt::Debug for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mp({:e}, {} bits)", self.to_f64(), self.bits)
    }
}

impl PartialEq for Mp {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Mp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.x.cmp(&other.x).map(|c| c.cmp(&0))
    }
}

macro_rules! mp_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for Mp {
            type Output = Mp;
            fn $method(self, rhs: Mp) -> Mp {
                let bits = self.bits.max(rhs.bits);
                Mp::wrap(self.x.$method(&rhs.x, bits, RM), bits)
            }
        }
    };
}

mp_binop!(Add, add);
mp_binop!(Sub, sub);
mp_binop!(Mul, mul);
mp_binop!(Div, div);

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp::wrap(self.x.neg(), self.bits)
    }
}

impl Real for Mp {
    type Ctx = usize;

    fn from_f64(x: f64, bits: usize) -> Self {
        Mp::new(x, bits)
    }

    fn to_f64(&self) -> f64 {
        if self.x.is_nan() {
            return f64::NAN;
        }
        if self.x.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.x.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        if self.x.is_zero() {
            return 0.0;
        }
        let Some((words, _, sign, exp, _)) = self.x.as_raw_parts() else {
            return f64::NAN;
        };
        // Normalized mantissa 0.1xxx… stored least significant word first.
        let n = words.len();
        let hi = words[n - 1] as f64;
        let lo = if n > 1 { words[n - 2] as f64 } else { 0.0 };
        let w = WORD_BIT_SIZE as i32;
        let m = hi + libm::ldexp(lo, -w);
        let v = libm::ldexp(m, exp - w);
        match sign {
            Sign::Neg => -v,
            Sign::Pos => v,
        }
    }

    fn ctx(&self) -> usize {
        self.bits
    }

    fn abs(&self) -> Self {
        Mp::wrap(self.x.abs(), self.bits)
    }

    fn is_finite(&self) -> bool {
        !self.x.is_nan() && !self.x.is_inf()
    }

    fn is_zero(&self) -> bool {
        self.x.is_zero()
    }
}

/// Working precision requested for G-function evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    /// IEEE double throughout.
    Double,
    /// Multiprecision with the given mantissa width in bits.
    Bits(usize),
    /// Pick per regime and truncation (see `gfunction::auto_bits`).
    Auto,
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Auto
    }
}
