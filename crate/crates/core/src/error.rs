use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Group axiom checked by [`crate::finitegroup::validate_group`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    Closure,
    Associativity,
    Identity,
    Inverse,
}

impl core::fmt::Display for Axiom {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let name = match self {
            Axiom::Closure => "closure",
            Axiom::Associativity => "associativity",
            Axiom::Identity => "identity",
            Axiom::Inverse => "inverse",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside the function's domain: {0}")]
    Domain(&'static str),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("magnification {a} maps the patch corner past the south pole")]
    MagnificationTooLarge { a: f64 },
    #[error("band-limit mismatch: coefficients have L={coeffs}, table has L={table}")]
    BandLimitMismatch { coeffs: usize, table: usize },
    #[error("{axiom} axiom violated at x={x}, y={y}, z={z}")]
    AxiomViolation {
        axiom: Axiom,
        x: usize,
        y: usize,
        z: usize,
    },
    #[error("invalid representation: {0}")]
    InvalidRepresentation(&'static str),
    #[error("Clebsch-Gordan decomposition failed (residual {residual:e})")]
    DecompositionFailure { residual: f64 },
}
