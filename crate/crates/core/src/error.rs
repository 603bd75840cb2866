use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("point ({x:.6}, {y:.6}) lies outside the closed annulus")]
    OutsideAnnulus { x: f64, y: f64 },

    #[error("invalid boundary data: {0}")]
    BoundaryData(String),

    #[error("no zero-net-mass grouping exists: {0}")]
    DecompositionAmbiguous(String),

    #[error("mass mismatch: positive part {plus:.12} vs negative part {minus:.12}")]
    MassMismatch { plus: f64, minus: f64 },

    #[error("missing anchor: {0}")]
    MissingAnchor(String),

    #[error("ray {ray}: outer level {outer:.9} and inner level {inner:.9} differ by more than {tol:.3e}")]
    LevelMismatch { ray: usize, outer: f64, inner: f64, tol: f64 },

    #[error("cell ({i}, {j}) is claimed by two ray families")]
    UncoveredCell { i: usize, j: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
