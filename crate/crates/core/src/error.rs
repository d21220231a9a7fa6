use thiserror::Error;

use crate::model::Regime;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("invalid truncation: {0}")]
    Truncation(&'static str),
    #[error("operation needs the {expected} regime, parameters are {found}")]
    WrongRegime {
        expected: &'static str,
        found: Regime,
    },
    #[error("energy sits on the A-space pole m - g^2 at m = {0}")]
    PoleAtA(usize),
    #[error("energy sits on the B-space pole m - g'^2 at m = {0}")]
    PoleAtB(usize),
    #[error("energy sits on the integer pole E = {0} of the three-term chain")]
    PoleAtInteger(usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix dimension {dim} exceeds the dense limit {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("bracket [{lo}, {hi}] does not enclose a sign change")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("invalid energy window ({0}, {1})")]
    Window(f64, f64),
}
