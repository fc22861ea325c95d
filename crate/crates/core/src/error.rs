use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("kappa = {kappa} outside (0, 1/(8M)) for M = {tv_bound}")]
    KappaOutOfRange { kappa: f64, tv_bound: f64 },

    #[error("no atom within {tol} of requested position {position}")]
    PositionNotFound { position: f64, tol: f64 },

    #[error("degenerate jump: |{right} - {left}| below state tolerance")]
    DegenerateJump { left: f64, right: f64 },

    #[error("envelope needs at least 2 samples, got {0}")]
    InsufficientSamples(usize),

    #[error("state {state} outside working range [{min}, {max}]")]
    StateOutOfRange { state: f64, min: f64, max: f64 },

    #[error("flux model invalid: {0}")]
    InvalidFlux(String),

    #[error("total variation {tv} exceeds configured bound {bound}")]
    TvBoundExceeded { tv: f64, bound: f64 },

    #[error("inconsistent collision event: {0}")]
    InconsistentEvent(String),

    #[error("event count {count} exceeded limit {limit}")]
    EventCountExceeded { count: usize, limit: usize },

    #[error("source evaluation produced a non-finite value at x = {x}, u = {u}")]
    QuadratureFailure { x: f64, u: f64 },

    #[error("Glimm functional {upsilon} exceeds delta_bar + G t = {bound} at t = {t}")]
    TvBlowup { t: f64, upsilon: f64, bound: f64 },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("jump family does not belong to this run: {0}")]
    FamilyRunMismatch(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("anchor ({t}, {x}) outside the run window")]
    OutOfWindow { t: f64, x: f64 },

    #[error("boundary is not a generalized characteristic: {0}")]
    InvalidBoundary(String),

    #[error("flux is not uniformly convex (convexity constant is 0)")]
    Degenerate,

    #[error("refinement schedule violates beta > 4(eps + (delta_bar + G T) tau) at level {level}")]
    ScheduleViolation { level: usize },

    #[error("point ({t}, {x}) outside the ramp region")]
    OutOfRampRegion { t: f64, x: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
}
