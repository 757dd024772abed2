use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tiling spec: {0}")]
    InvalidSpec(String),

    #[error("cannot parse scalar `{0}`")]
    Parse(String),

    #[error("torus size m = {m} folds edge {edge:?} into a self-loop")]
    SelfLoop { m: usize, edge: (usize, usize, Vec<i64>) },

    #[error("condition A violated: edge {edge:?} at lattice point {at:?} crosses a hyperplane of family {family}")]
    ConditionAViolated {
        family: usize,
        edge: (usize, usize, Vec<i64>),
        at: Vec<i64>,
    },

    #[error("tiling is not symmetric under reflection in family {family} at level {level}: {detail}")]
    NotReflectionSymmetric {
        family: usize,
        level: i64,
        detail: String,
    },

    #[error("invalid reflection family: {0}")]
    InvalidFamily(String),

    #[error("stopped walk did not converge (residual mass {residual:e} after {steps} steps)")]
    NonConvergent { residual: f64, steps: usize },

    #[error("transfer matrix is singular at the requested frequency")]
    SingularSolve,

    #[error("frequency {0:?} is within 1e-9 of the origin")]
    PoleAtZero(Vec<f64>),

    #[error("input must have total mass zero (got {0:e})")]
    MeanNotZero(f64),

    #[error("function class {found} is weaker than the required {required}")]
    ClassMismatch { found: String, required: String },

    #[error("precision {target:e} unreachable: best value {value} with error bar {bar:e}")]
    PrecisionUnreachable { value: f64, bar: f64, target: f64 },

    #[error("function is not anti-symmetric in the requested hyperplanes")]
    NotAntisymmetric,

    #[error("group order {order} exceeds the enumeration cap {cap}")]
    GroupTooLarge { order: String, cap: u64 },

    #[error("chip count overflow at vertex {0}")]
    ChipOverflow(usize),

    #[error("configuration has {got} entries but the graph has {expected} non-sink vertices")]
    SizeMismatch { expected: usize, got: usize },

    #[error("{0}")]
    Invalid(String),
}
