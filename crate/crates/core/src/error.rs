use thiserror::Error;

/// Errors raised by the numeric core, the models and the protocol engine.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("shape mismatch at layer {layer}: expected {expected}, got {got}")]
    LayerShapeMismatch {
        layer: usize,
        expected: String,
        got: String,
    },

    #[error("tensor shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("label {label} out of range [0, {classes}) at pixel (image {image}, row {row}, col {col})")]
    LabelOutOfRange {
        image: usize,
        row: usize,
        col: usize,
        label: f64,
        classes: usize,
    },

    #[error("channel mismatch for selection {selection}: head expects {expected} channels, shared features carry {got}")]
    ChannelMismatch {
        selection: String,
        expected: usize,
        got: usize,
    },

    #[error("model is frozen; operation requires trainable parameters")]
    NotTrainable,

    #[error("selection {selection} requires backbone depth >= {required}, got {depth}")]
    DepthTooShallow {
        selection: String,
        required: usize,
        depth: usize,
    },

    #[error("spatial dims must be even for 2x downsampling, got {height}x{width}")]
    OddSpatialDims { height: usize, width: usize },

    #[error("no vehicles configured")]
    NoVehicles,

    #[error("non-finite loss at round {round} (vehicle {vehicle})")]
    NonFiniteLoss { round: u64, vehicle: usize },

    #[error("round {round} barrier incomplete: missing uploads from vehicles {missing:?}")]
    BarrierIncomplete { round: u64, missing: Vec<usize> },

    #[error("savings undefined: baseline overhead M_FL is zero")]
    UndefinedSavings,

    #[error("decode error: {0}")]
    Decode(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
