use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("laser angular frequency {laser:.6e} rad/s is within 1e-6 of the transition at {transition:.6e} rad/s")]
    Resonance { laser: f64, transition: f64 },

    #[error("out-of-plane confinement impossible: omega_z^2 = {omega_z_sq:.6e} rad^2/s^2")]
    AntiTrapped { omega_z_sq: f64 },

    #[error("ions {i} and {j} are {distance:.3e} m apart (coincident)")]
    SingularConfiguration { i: usize, j: usize, distance: f64 },

    #[error("no converged minimum after {restarts} restarts")]
    ConvergenceFailure { restarts: usize },

    #[error("no sign change of the lowest out-of-plane eigenvalue for aspect ratio in [0, {max_alpha}]")]
    BracketFailure { max_alpha: f64 },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("drive {drive} at {mu:.6e} rad/s is within tolerance of mode {mode} at {omega:.6e} rad/s")]
    DriveResonance { drive: usize, mode: usize, mu: f64, omega: f64 },

    #[error("no candidate in the grey region after {draws} proposals")]
    SamplingFailure { draws: usize },

    #[error("no converged barrier paths")]
    NoConvergedPaths,

    #[error("species data: {0}")]
    Species(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
