pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] braglab_core::Error),
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("cannot train: {0}")]
    DegenerateTraining(String),
    #[error("training diverged (seed {seed}, epoch {epoch}, batch {batch}): loss is {loss}")]
    NonFiniteLoss {
        seed: u64,
        epoch: usize,
        batch: usize,
        loss: f64,
    },
    #[error("label set mismatch: model has {model:?}, expected {expected:?}")]
    LabelMismatch {
        model: Vec<String>,
        expected: Vec<String>,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("encoder `{0}` not found locally; pass a directory with config.json, model.safetensors and tokenizer.json, set BRAGLAB_MODEL_DIR, or use `scratch`")]
    EncoderNotFound(String),
    #[error("tokenizer: {0}")]
    Tokenizer(String),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: std::path::PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
