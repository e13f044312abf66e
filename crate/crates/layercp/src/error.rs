use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grazing/degenerate incidence")]
    DegenerateIncidence,

    #[error("dispersion-relation pole at kz = {0}")]
    DispersionPole(Complex64),

    #[error("pole clustering near {0}")]
    PoleClustering(f64),

    #[error("missing pole near {0}")]
    MissingPole(f64),

    #[error("increase scan_points")]
    ScanTooCoarse,

    #[error("normalization breakdown (bracket = {0})")]
    NormalizationBreakdown(f64),

    #[error("series form singular (n_l^4-1=0); use integral form")]
    SeriesSingular,

    #[error("use slab-limit coefficients")]
    SlabLimit,
}

pub type Result<T> = std::result::Result<T, Error>;
