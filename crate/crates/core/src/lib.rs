//! Fake news detection from news text and time-ordered reader comments.
//!
//! The detector fuses two channels. The semantic channel encodes news and
//! comment tokens with a shared bidirectional GRU and aligns them with
//! interactive co-attention. The emotion channel builds lexicon-based emotion
//! vectors per text, pools them into publisher/crowd "dual emotion" features,
//! and runs a second bidirectional GRU over the comment emotions in timestamp
//! order to capture how the crowd's mood evolves. A softmax head classifies the
//! concatenation. Training can be extended with augmented variants that are
//! pseudo-labeled by the model and admitted only above a confidence threshold.

pub mod augment;
pub mod cli;
pub mod corpus;
pub mod emotion;
pub mod error;
pub mod network;
pub mod pseudolabel;
pub mod resources;
pub mod training;

pub use error::{Error, Result};
