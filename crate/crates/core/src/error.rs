use nalgebra::Complex;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("matrix is singular (smallest singular value {smallest:e}, largest {largest:e})")]
    Singular { smallest: f64, largest: f64 },

    #[error("matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("drift is not Hurwitz; offending eigenvalues: {}", format_eigenvalues(.offending))]
    NotHurwitz { offending: Vec<Complex<f64>> },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid adjacency matrix: {0}")]
    InvalidAdjacency(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("state is unphysical: min eig(V + iΣ/2) = {margin:e}")]
    Unphysical { margin: f64 },

    #[error("fidelity requires zero-mean states")]
    NonzeroMean,

    #[error("fidelity target must be pure (purity {purity})")]
    ImpureTarget { purity: f64 },

    #[error("invalid search bracket [{lower}, {upper}]")]
    InvalidBracket { lower: f64, upper: f64 },
}

fn format_eigenvalues(values: &[Complex<f64>]) -> String {
    values
        .iter()
        .map(|z| format!("{:.6e}{:+.6e}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn dimension(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Dimension {
        op,
        detail: detail.into(),
    }
}
