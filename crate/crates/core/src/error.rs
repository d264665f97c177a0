use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),
    #[error("matrix is not square")]
    NonSquare,
    #[error("shape mismatch")]
    ShapeMismatch,
    #[error("zero matrix has no phase")]
    ZeroMatrix,
    #[error("gate `{0}` is not unitary")]
    NotUnitary(String),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("duplicate gate name `{0}`")]
    DuplicateName(String),
    #[error("gate set is empty")]
    EmptyGateSet,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("partitions cover different index ranges")]
    RangeMismatch,
    #[error("operation requires a qubit gate set (dimension 2)")]
    NotQubit,
    #[error("gate set is not markable")]
    NotMarkable,
    #[error("gate set is not jointly discriminable")]
    NotJointlyDiscriminable,
    #[error("outcome states are not orthonormal")]
    OutcomesNotOrthonormal,
    #[error("fixed vector witness does not hold for this gate set")]
    InvalidWitness,
    #[error("marking circuit does not verify (residual {0:.3e})")]
    MarkingInvalid(f64),
    #[error("fixed vector does not satisfy the strict condition")]
    FixedVectorInvalid,
    #[error("gate set is not controllable")]
    NotControllable,
    #[error("set lacks single-ancilla structure")]
    StructureMismatch,
    #[error("board is not of marking shape")]
    NotMarkingShape,
    #[error("board disturbs gate `{0}`")]
    Disturbing(String),
    #[error("synthesized circuit failed self-verification (residual {0:.3e})")]
    SelfCheckFailed(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
