//! Corpus handling, synthetic speakers, training orchestration, evaluation
//! and model persistence around [`spkid_core`].
//!
//! The `spkid` binary exposes these as subcommands; everything it does is
//! reachable from here.

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod persist;
pub mod pipeline;
pub mod synth;
pub mod wav;

pub use corpus::{load_corpus, Corpus, SpeakerData, Utterance};
pub use error::{Error, Result};
pub use eval::{evaluate, parse_alphas, sweep_alpha, sweep_k, EvalReport, ScoredCorpus};
pub use persist::{load_models, save_models, ModelSet, FORMAT_NAME, FORMAT_VERSION};
pub use pipeline::{train_models, TrainingConfig};
pub use synth::{synth_corpus, SyntheticSpec};
