//! The Cantor function ("devil's staircase").

use thiserror::Error;

use crate::ternary;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("the Cantor function is defined on [0, 1], got {x}")]
pub struct DomainError {
    pub x: f64,
}

/// `C(x)` from the ternary digits of `x`: digits up to the first `1` are
/// read as binary (`2 → 1`), and a `1` contributes one final binary digit.
///
/// Inputs within two ulp of a triadic rational `p / 3^k` are treated as that
/// rational, so endpoints such as `1/3` evaluate exactly.
pub fn cantor_function(x: f64) -> Result<f64, DomainError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(DomainError { x });
    }
    Ok(ternary::cantor_value(x))
}
