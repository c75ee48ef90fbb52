use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// `c*z + d` vanished (relative to the size of its terms) at `z`.
    #[error("point {re}{im:+}i is numerically a pole (|c*z+d| = {denominator:e})")]
    Pole { re: f64, im: f64, denominator: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("degenerate Moebius matrix (all entries zero)")]
    Degenerate,

    #[error("{family} requires {constraint}, got N = {n}")]
    IncompatibleN {
        family: &'static str,
        constraint: &'static str,
        n: usize,
    },

    #[error("family {0} has no alpha(k) interpretation")]
    UnsupportedFamily(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("orbit left |w| <= 10 at step {step} (|w| = {modulus:e})")]
    Divergence { step: usize, modulus: f64 },

    #[error("basin membership of w = {re}{im:+}i undecided after {max_iter} iterations")]
    Indeterminate { re: f64, im: f64, max_iter: usize },

    #[error("w = {re}{im:+}i is not in the parabolic basin of g")]
    NotInBasin { re: f64, im: f64 },
}

impl Error {
    /// Numerical failures as opposed to invalid requests.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Pole { .. } | Error::Divergence { .. } | Error::Indeterminate { .. } | Error::NotInBasin { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
