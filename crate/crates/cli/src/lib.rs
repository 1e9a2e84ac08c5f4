//! Batch driver: `train`, `evaluate`, `oracle` and `mc-estimate` over the
//! `distrl-core` library, with file-based configuration and outputs.

pub mod commands;
pub mod config;

use distrl_core::Error;

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Index { .. } | Error::Infeasible { .. } => 2,
        Error::Numerical { .. } | Error::NonFiniteGradient { .. } => 3,
        Error::Incompatible(_) => 4,
        _ => 1,
    }
}
