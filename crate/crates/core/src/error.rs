use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph not connected")]
    Disconnected,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("interior admittance block is singular")]
    SingularInterior,

    #[error("reduced network is not physical: {0}")]
    NonPhysicalReduction(String),

    #[error("topology mismatch: expected {expected} graph")]
    WrongTopology { expected: &'static str },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("series does not converge: ratio {ratio} >= 1")]
    SeriesDivergent { ratio: f64 },

    #[error("system is not stable on its observable subspace (spectral abscissa {abscissa:.3e})")]
    Unstable { abscissa: f64 },

    #[error("matrix is not Hurwitz")]
    NotHurwitz,

    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. } | Error::NotHurwitz | Error::NotPsd(_) | Error::Numerical(_)
        )
    }
}
