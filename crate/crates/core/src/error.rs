use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("turning point near r = {r}: |N² - σ²| = {gap:e}")]
    Degeneracy { r: f64, gap: f64 },
    #[error("regime mismatch: {0}")]
    Regime(String),
    #[error("step size underflow at r = {r} (h = {h:e})")]
    StepFailure { r: f64, h: f64 },
    #[error("singular boundary value problem (normalized determinant {det:e})")]
    SingularBvp { det: f64 },
    #[error("singular discretized operator (pivot ratio {ratio:e})")]
    SingularOperator { ratio: f64 },
    #[error("eigenvalue bracket failed for index {index}")]
    BracketFailure { index: usize },
    #[error("eigenvalue gap {gap} below the bound {bound}")]
    GapFailure { gap: f64, bound: f64 },
    #[error("phase pair has cos(ϑ1 - ϑ2) = 0")]
    Phase,
    #[error("degenerate denominator in modulus")]
    DegenerateDenominator,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
