//! Bragging classifiers: a majority baseline, bag-of-words logistic
//! regression, a BiGRU with attention, and transformer encoders with optional
//! multimodal adaptation gate (MAG) fusion of lexicon features.
//!
//! ```
//! use braglab_core::{BraggingLabel, Task};
//! use braglab_models::{train_seed, Arch, Example, ModelConfig};
//!
//! let ex = |id: &str, text: &str, label| {
//!     Example::new(id, text.split(' ').map(String::from).collect(), label)
//! };
//! let train = vec![
//!     ex("1", "i won the award", BraggingLabel::Achievement),
//!     ex("2", "nice weather today", BraggingLabel::NotBragging),
//!     ex("3", "won my first race", BraggingLabel::Achievement),
//!     ex("4", "so sunny outside", BraggingLabel::NotBragging),
//! ];
//! let mut config = ModelConfig::new(Arch::LrBow, Task::Binary);
//! config.l2_strength = 0.1;
//! let model = train_seed(&config, &train, &[], 13).unwrap();
//! let p = model.predict(&[&["won".to_string(), "award".to_string()][..]]).unwrap();
//! assert_eq!(model.labels[p[0].label], "BRAGGING");
//! ```

pub mod bigru;
pub mod config;
pub mod data;
pub mod encoder;
mod error;
pub mod gradcheck;
pub mod lr;
pub mod mag;
mod model;
pub mod nn;
pub mod text;

pub use config::{Arch, ModelConfig, DEFAULT_SEEDS, SCRATCH_ENCODER};
pub use data::{class_weights, Dataset, Example};
pub use error::{Error, Result};
pub use model::{evaluate, evaluate_subset, learning_curve, train, train_seed, EpochLog, Prediction, TrainedModel};
