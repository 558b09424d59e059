//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building states, applying operators,
/// constructing dense oracles, or parsing the text formats.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid tree shape: n={n}, m={m} (both must be >= 1 and <= {max})")]
    InvalidShape { n: u32, m: u32, max: u32 },

    #[error("node (w={pos}, l={level}) does not exist in a depth-{n} tree")]
    InvalidNode { pos: u64, level: u32, n: u32 },

    #[error("address {address} out of range for n={n}")]
    AddressOutOfRange { address: u64, n: u32 },

    #[error("data word {data} out of range for m={m}")]
    DataOutOfRange { data: u64, m: u32 },

    #[error("address superposition is empty")]
    EmptySuperposition,

    #[error("address superposition has zero norm")]
    ZeroNorm,

    #[error("non-finite amplitude encountered")]
    NonFiniteAmplitude,

    #[error("shift level {level} out of range (need 0 <= l <= n-1 with n={n})")]
    LevelOutOfRange { level: u32, n: u32 },

    #[error("coin target {k} out of range (need 0 <= k <= n with n={n})")]
    CoinOutOfRange { k: u32, n: u32 },

    #[error("shape mismatch: expected n={expected_n} m={expected_m}, got n={found_n} m={found_m}")]
    ShapeMismatch {
        expected_n: u32,
        expected_m: u32,
        found_n: u32,
        found_m: u32,
    },

    #[error("dense dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{found:?} is {found_width} bits wide, expected {expected_width} ({what})")]
    WordWidth {
        found: String,
        found_width: usize,
        expected_width: u32,
        what: &'static str,
    },

    #[error("line {line}: duplicate address {address}")]
    DuplicateAddress { line: usize, address: u64 },

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Maps an error to the CLI exit-code class: 1 for malformed input
    /// content, 2 for shape/range/resource problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::DuplicateAddress { .. }
            | Error::EmptySuperposition
            | Error::ZeroNorm
            | Error::NonFiniteAmplitude => 1,
            Error::AtLine { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn at_line(line: usize, source: Error) -> Error {
        Error::AtLine {
            line,
            source: Box::new(source),
        }
    }
}
