//! Trainable detector: recurrent encoders, co-attention, fusion, classifier.

pub mod attention;
pub mod checkpoint;
pub mod gru;
pub mod input;
pub mod linalg;
pub mod model;
pub mod params;

pub use attention::{co_attention, Attended};
pub use checkpoint::{config_hash, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use gru::{bigru, BiGru, GruCell};
pub use input::{embed, prefix_len, Featurizer, PaddedSequence, RecordInput, SequenceBatch};
pub use model::{classify, supervised_loss, EncodedBundle, ForwardCache, Model, WeightedExample, PROB_EPS};
pub use params::{ModelConfig, ModelParams};
