//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch on axis {axis} ({context}): expected {expected}, got {actual}")]
    Dimension {
        axis: usize,
        expected: usize,
        actual: usize,
        context: String,
    },

    #[error("shape {shape:?} holds {expected} elements, buffer holds {actual}")]
    ShapeData {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value produced by node {node} ({op})")]
    NonFinite { node: usize, op: String },

    #[error("non-finite gradient at node {node} ({op})")]
    NonFiniteGrad { node: usize, op: String },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("backward invoked twice on the same graph without reset")]
    BackwardTwice,

    #[error("gradients not populated; run backward before the optimizer step")]
    MissingGrads,

    #[error("network input extent {extent} not divisible by cumulative stride {stride}")]
    ExtentStride { extent: usize, stride: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown attribute value {value:?} for class {class:?}")]
    UnknownValue { class: String, value: String },

    #[error("edge labels are undefined for i == k (got {0})")]
    SelfEdge(usize),

    #[error("sample id {id} out of range [0..{n})")]
    IdRange { id: usize, n: usize },

    #[error("no candidate shares exactly class {class:?} with the center sample")]
    OneOverlapInfeasible { class: String },

    #[error("no sample shares zero attributes with the center sample")]
    NoOverlapInfeasible,

    #[error("holdout split infeasible: {0}")]
    HoldoutInfeasible(String),

    #[error("no training sample carries value {value:?} for class {class:?}")]
    ProviderMissing { class: String, value: String },

    #[error("provider for class {class:?} carries {actual:?}, query requires {expected:?}")]
    ProviderMismatch {
        class: String,
        expected: String,
        actual: String,
    },

    #[error("group member for class {class:?} shares {shared} classes with the center, expected exactly 1")]
    GroupContract { class: String, shared: usize },

    #[error("latent partitions differ")]
    PartitionMismatch,

    #[error("class index {j} out of range for {m} classes")]
    ClassRange { j: usize, m: usize },

    #[error("label {label} out of range for {classes} classes")]
    LabelRange { label: usize, classes: usize },

    #[error("non-finite loss at step {step} in term {term}")]
    NonFiniteLoss { step: usize, term: String },

    #[error("checkpoint magic mismatch: not a GZSN file")]
    CkptMagic,

    #[error("checkpoint version {found} unsupported (reader handles {supported})")]
    CkptVersion { found: u16, supported: u16 },

    #[error("checkpoint truncated while reading {0}")]
    CkptTruncated(String),

    #[error("checkpoint missing record {0:?}")]
    CkptMissing(String),

    #[error("manifest parse error at line {line}: {msg}")]
    Manifest { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}
