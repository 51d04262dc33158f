use thiserror::Error;

/// Cone-membership failure details, kept structured so reports can echo them.
#[derive(Debug, Clone)]
pub struct ConeViolation {
    /// Number of grid points failing the membership test.
    pub count: usize,
    /// Flat index of the worst offender.
    pub point: usize,
    /// Margin at the worst offender (min over j <= k of sigma_j / binom(n,j)).
    pub worst_margin: f64,
    /// Eigenvalues at the worst offender, ascending.
    pub lambda: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),

    #[error("field: {0}")]
    Field(String),

    #[error("metric not SPD at point {point}: Cholesky pivot {pivot:.3e} below floor {floor:.3e}")]
    NotSpd { point: usize, pivot: f64, floor: f64 },

    #[error(
        "cone violation at {} point(s): worst margin {:.6e} at point {}",
        .0.count, .0.worst_margin, .0.point
    )]
    ConeViolation(ConeViolation),

    #[error("parameter gate: {0}")]
    Params(String),

    #[error("cone constant: {0}")]
    ConeConstant(String),

    #[error("seed: {0}")]
    Seed(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("no admissible background in scan range: {0}")]
    NoMatch(String),

    #[error("format: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
