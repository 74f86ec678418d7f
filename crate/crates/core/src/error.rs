use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// A state, input or memory entry was read before it was written.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("non-finite state at iteration {k}, time {t} (u = {u})")]
    Overflow { k: u64, t: usize, u: f64 },

    /// The fixed-point iterate left the reals. Usually means l' underestimates
    /// the input gain or the gain changes sign.
    #[error("input solver diverged after {iterations} iterations (l' = {l_prime}, last iterate {last})")]
    Divergence {
        iterations: u64,
        l_prime: f64,
        last: f64,
    },

    #[error("no sign change found while bracketing; sampled (u, Z(u)) = {samples:?}")]
    Bracketing { samples: Vec<(f64, f64)> },

    #[error("scenario validation failed:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("iteration {k}, time {t}: {source}")]
    At {
        k: u64,
        t: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, k: u64, t: usize) -> Self {
        match self {
            e @ (Error::At { .. } | Error::Overflow { .. }) => e,
            e => Error::At {
                k,
                t,
                source: Box::new(e),
            },
        }
    }

    /// Strips `At` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code used by the CLI: 1 for configuration problems,
    /// 2 for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Overflow { .. } | Error::Divergence { .. } | Error::Bracketing { .. } => 2,
            _ => 1,
        }
    }
}
