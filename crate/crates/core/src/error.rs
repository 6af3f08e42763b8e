use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported sample rate {0} Hz (expected 8000 or 16000)")]
    UnsupportedSampleRate(u32),
    #[error("signal is already prepared; pre-emphasis must be applied exactly once")]
    AlreadyPrepared,
    #[error("signal must be prepared (8 kHz, pre-emphasized) before framing")]
    NotPrepared,
    #[error("frame has zero energy")]
    DegenerateFrame,
    #[error("autocorrelation is not positive definite (reflection {reflection} at order {order})")]
    Singular { order: usize, reflection: f64 },
    #[error("LPC model is unstable (reflection {reflection} at order {order})")]
    UnstableModel { order: usize, reflection: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("insufficient training data: got {have} vectors, need at least {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("empty cluster passed to a split rule")]
    EmptyCluster,
    #[error("no frames to process")]
    NoFrames,
    #[error("speaker `{0}` has no nonlinear codebook")]
    MissingNonlinearCodebook(String),
    #[error("speaker `{0}` has no LPC predictor codebook")]
    MissingLpcCodebook(String),
    #[error("preselection size k = {k} outside 1..={n}")]
    InvalidK { k: usize, n: usize },
}
