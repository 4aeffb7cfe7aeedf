use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain violation: {func}({arg})")]
    Domain { func: &'static str, arg: f64 },

    #[error("point ({s}, {t}) lies outside the chart domain of {surface}")]
    OutsideChart { surface: String, s: f64, t: f64 },

    #[error("parse error at byte {offset}: {message} (expected one of: {})", expected.join(", "))]
    Parse {
        offset: usize,
        expected: Vec<String>,
        message: String,
    },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("unknown surface `{0}`")]
    UnknownSurface(String),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("induced metric is not positive definite (det g = {detg})")]
    NotSpacelike { detg: f64 },

    #[error("point is not on the future lightcone (<psi,psi> = {inner}, psi0 = {psi0})")]
    NotOnLightcone { inner: f64, psi0: f64 },

    #[error("icosphere level {0} out of range 0..=8")]
    LevelOutOfRange(u32),

    #[error("edge {edge} has non-spacelike chord (squared length {len_sq}); refine the mesh")]
    NonSpacelikeChord { edge: usize, len_sq: f64 },

    #[error("surface `{0}` is not compact")]
    NotCompact(String),

    #[error("unknown vertex field `{0}`")]
    UnknownField(String),

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    SolverNoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("triangle {tri} is degenerate")]
    DegenerateTriangle { tri: usize },

    #[error("surface definition error at {path}: {message}")]
    Definition { path: String, message: String },

    #[error("{0}")]
    Config(String),
}
