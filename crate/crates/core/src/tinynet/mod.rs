//! A desk-scale binary network: a small MLP with batch normalization, sign
//! activations and hand-written backpropagation, plus the datasets and the
//! training loop that drive the binary optimizers.

mod data;
mod net;
mod train;

pub use data::{load_csv, make_blobs, DataError, DataSource, Dataset};
pub use net::{
    ste_mask, Activation, BatchNormLayer, BinaryLinearLayer, ForwardCache, Mode, Net, Param, RealLinearLayer,
    BN_EPS, BN_MOMENTUM,
};
pub use train::{
    evaluate, train, BinaryOptimizerConfig, EpochRecord, FilterHyper, LatentHyper, RealOptimizerConfig,
    TracePoint, TrackedWeight, TrainConfig, TrainError, TrainLog,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("{what}: expected {expected} values, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("binary weight {index} is {value}, expected -1 or +1")]
    NotBinary { index: usize, value: i8 },
    #[error("backward needs a training-mode forward cache")]
    EvalCache,
    #[error("forward cache does not belong to this network or batch")]
    CacheMismatch,
}
