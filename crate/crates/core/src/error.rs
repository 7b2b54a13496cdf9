use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("rank mismatch: {0}")]
    RankMismatch(String),

    #[error("invalid band: k_band = {k_band} exceeds dealiasing cutoff {cutoff}")]
    InvalidBand { k_band: f64, cutoff: usize },

    #[error("vorticity is not divergence-free (max |k.w_k| = {0:e})")]
    InvalidVorticity(f64),

    #[error("wrong dimension: {0}")]
    WrongDimension(String),

    #[error("tau law {law} is undefined for alpha = {alpha}")]
    InvalidLawForAlpha { law: &'static str, alpha: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite coefficients detected (blow-up) at t = {t}")]
    BlowUp { t: f64 },

    #[error("CFL violation at t = {t}: dt = {dt:e} too large, suggest dt <= {suggested:e}")]
    StepRejected { t: f64, dt: f64, suggested: f64 },

    #[error("too few usable shells for a radius fit: {found} < {required}")]
    TooFewShells { found: usize, required: usize },

    #[error("field is numerically zero; no shell above the noise floor")]
    AllBelowFloor,

    #[error("missing input for floor variant {variant}: {name}")]
    MissingInput { variant: &'static str, name: &'static str },

    #[error("zero dyadic block (q = {0})")]
    ZeroBlock(i32),

    #[error("insufficient padding: band limits {0} + {1} exceed {2}")]
    InsufficientPadding(usize, usize, usize),

    #[error("band too large for brute-force enumeration: B = {band}, about {triads} triads")]
    BandTooLarge { band: usize, triads: u64 },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("snapshot checksum mismatch (stored {stored:#018x}, computed {computed:#018x})")]
    Checksum { stored: u64, computed: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
