use thiserror::Error;

/// Errors raised by the kinematics, quadrature, Fock-space and branch layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invariant mass {invariant_mass} does not exceed the mass threshold {threshold}")]
    BelowThreshold { invariant_mass: f64, threshold: f64 },

    #[error("direction is not a unit vector (|n| = {norm})")]
    NotUnit { norm: f64 },

    #[error("photon momentum is not lightlike (k^2 = {square})")]
    NotLightlike { square: f64 },

    #[error("photon frequency must be positive, got {omega}")]
    NonPositiveFrequency { omega: f64 },

    #[error("particle is off shell: p^2 = {square}, m^2 = {mass_sq}")]
    OffShell { square: f64, mass_sq: f64 },

    #[error("particle energy must be positive, got {energy}")]
    NonPositiveEnergy { energy: f64 },

    #[error("charged legs need a strictly positive mass, got {mass}")]
    NonPositiveMass { mass: f64 },

    #[error("legs of one current must share a mass ({first} vs {second})")]
    MassMismatch { first: f64, second: f64 },

    #[error("a composite current needs at least two legs, got {legs}")]
    TooFewLegs { legs: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("-J*.J = {value} is negative beyond rounding (scale {scale}); current not conserved")]
    NegativeBeyondTolerance { value: f64, scale: f64 },

    #[error(
        "invalid spectral cutoffs: need 0 < omega_min ({omega_min}) < omega_max ({omega_max})"
    )]
    InvalidCutoffs { omega_min: f64, omega_max: f64 },

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("fit window spans {decades:.3} decades, at least 2 are required")]
    WindowTooNarrow { decades: f64 },

    #[error("threshold {threshold} lies outside the window [{omega_min}, {omega_max}]")]
    ThresholdOutOfRange {
        threshold: f64,
        omega_min: f64,
        omega_max: f64,
    },

    #[error("truncation n_max = {n_max} too small, amplitude |alpha| = {amplitude} needs at least {required}")]
    TruncationTooSmall {
        n_max: usize,
        amplitude: f64,
        required: usize,
    },

    #[error("states live on different mode grids or truncations")]
    GridMismatch,

    #[error("operator is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("operator references mode {mode}, but the state has {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("entangled sum would hold {terms} product terms, the cap is {cap}")]
    TooManyTerms { terms: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("branch weights are not normalized: sum |c|^2 = {total}")]
    InvalidWeights { total: f64 },

    #[error("invalid {what}: {value}")]
    InvalidParameter { what: &'static str, value: f64 },

    #[error("angular tolerance must lie in (0, 1], got {0}")]
    InvalidTolerance(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
