use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gru::{BiGru, GruCell};
use crate::error::{Error, Result};

/// Shapes and feature switches of a model. Everything that determines the
/// parameter layout or the forward computation lives here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Rows of the embedding table, including the OOV row.
    pub vocab_size: usize,
    pub embedding_dim: usize,
    /// Per-direction GRU width.
    pub hidden_dim: usize,
    /// Width of one emotion vector.
    pub emotion_dim: usize,
    /// Attended (true) or mean-pooled (false) news/comment features.
    pub co_attention: bool,
    /// Whether the temporal comment-emotion feature is fed to the classifier.
    pub temporal: bool,
}

impl ModelConfig {
    /// Width of the fused feature vector:
    /// `V_SN (2h) ⊕ V_SC (2h) ⊕ A_EN (d) ⊕ A_EC (d) ⊕ E_TC (2h) ⊕ E_dual (5d)`.
    pub fn feature_width(&self) -> usize {
        6 * self.hidden_dim + 7 * self.emotion_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 || self.embedding_dim == 0 || self.hidden_dim == 0 || self.emotion_dim == 0 {
            return Err(Error::Config(format!("model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w: Array2<f64>,
    /// Length 1.
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    /// `2 × feature_width`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// All trainable parameters. The embedding table is frozen and lives in
/// [`crate::resources::Resources`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Shared by news and comment texts.
    pub semantic: BiGru,
    /// Runs over comment emotion vectors in time order.
    pub temporal: BiGru,
    pub semantic_attention: AttentionParams,
    pub emotion_attention: AttentionParams,
    pub classifier: Classifier,
}

/// One named parameter array, viewed flat.
pub struct Block<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
    /// Weight matrices get L2 regularization; biases do not.
    pub is_weight: bool,
}

pub struct BlockMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a mut [f64],
    pub is_weight: bool,
}

pub(crate) fn glorot(w: &mut Array2<f64>, rng: &mut impl Rng) {
    let (rows, cols) = w.dim();
    let r = (6.0 / (rows + cols) as f64).sqrt();
    w.mapv_inplace(|_| rng.gen_range(-r..=r));
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let h = config.hidden_dim;
        let d = config.emotion_dim;
        ModelParams {
            semantic: BiGru::zeros(config.embedding_dim, h),
            temporal: BiGru::zeros(d, h),
            semantic_attention: AttentionParams {
                w: Array2::zeros((2 * h, 2 * h)),
                b: Array1::zeros(1),
            },
            emotion_attention: AttentionParams {
                w: Array2::zeros((d, d)),
                b: Array1::zeros(1),
            },
            classifier: Classifier {
                w: Array2::zeros((2, config.feature_width())),
                b: Array1::zeros(2),
            },
        }
    }

    /// Glorot-uniform weights and zero biases from a fixed seed.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ModelParams::zeros(config);
        let h = config.hidden_dim;
        p.semantic = BiGru::init(config.embedding_dim, h, &mut rng);
        p.temporal = BiGru::init(config.emotion_dim, h, &mut rng);
        glorot(&mut p.semantic_attention.w, &mut rng);
        glorot(&mut p.emotion_attention.w, &mut rng);
        glorot(&mut p.classifier.w, &mut rng);
        p
    }

    pub fn blocks(&self) -> Vec<Block<'_>> {
        let mut out = Vec::new();
        for (prefix, bigru) in [("semantic", &self.semantic), ("temporal", &self.temporal)] {
            for (dir, cell) in [("fwd", &bigru.forward), ("bwd", &bigru.backward)] {
                push_cell(&mut out, &format!("{prefix}.{dir}"), cell);
            }
        }
        for (prefix, att) in [
            ("semantic_attention", &self.semantic_attention),
            ("emotion_attention", &self.emotion_attention),
        ] {
            out.push(block2(format!("{prefix}.w"), &att.w, true));
            out.push(block1(format!("{prefix}.b"), &att.b));
        }
        out.push(block2("classifier.w".into(), &self.classifier.w, true));
        out.push(block1("classifier.b".into(), &self.classifier.b));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        let mut out = Vec::new();
        let ModelParams {
            semantic,
            temporal,
            semantic_attention,
            emotion_attention,
            classifier,
        } = self;
        for (prefix, bigru) in [("semantic", semantic), ("temporal", temporal)] {
            let BiGru { forward, backward } = bigru;
            for (dir, cell) in [("fwd", forward), ("bwd", backward)] {
                push_cell_mut(&mut out, &format!("{prefix}.{dir}"), cell);
            }
        }
        for (prefix, att) in [
            ("semantic_attention", semantic_attention),
            ("emotion_attention", emotion_attention),
        ] {
            let AttentionParams { w, b } = att;
            out.push(block2_mut(format!("{prefix}.w"), w, true));
            out.push(block1_mut(format!("{prefix}.b"), b));
        }
        let Classifier { w, b } = classifier;
        out.push(block2_mut("classifier.w".into(), w, true));
        out.push(block1_mut("classifier.b".into(), b));
        out
    }

    pub fn n_params(&self) -> usize {
        self.blocks().iter().map(|b| b.data.len()).sum()
    }

    /// `Σ w²` over weight matrices (biases excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        self.blocks()
            .iter()
            .filter(|b| b.is_weight)
            .flat_map(|b| b.data.iter())
            .map(|v| v * v)
            .sum()
    }

    /// `self += alpha * other`, block by block.
    pub fn add_scaled(&mut self, alpha: f64, other: &ModelParams) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (a, b) in dst.data.iter_mut().zip(src.data) {
                *a += alpha * b;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for block in self.blocks_mut() {
            block.data.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    pub fn all_finite(&self) -> std::result::Result<(), String> {
        for b in self.blocks() {
            if b.data.iter().any(|v| !v.is_finite()) {
                return Err(b.name);
            }
        }
        Ok(())
    }
}

fn block2(name: String, a: &Array2<f64>, is_weight: bool) -> Block<'_> {
    Block {
        name,
        shape: a.shape().to_vec(),
        data: a.as_slice().expect("standard layout"),
        is_weight,
    }
}

fn block1(name: String, a: &Array1<f64>) -> Block<'_> {
    Block {
        name,
        shape: a.shape().to_vec(),
        data: a.as_slice().expect("standard layout"),
        is_weight: false,
    }
}

fn block2_mut(name: String, a: &mut Array2<f64>, is_weight: bool) -> BlockMut<'_> {
    BlockMut {
        name,
        shape: a.shape().to_vec(),
        data: a.as_slice_mut().expect("standard layout"),
        is_weight,
    }
}

fn block1_mut(name: String, a: &mut Array1<f64>) -> BlockMut<'_> {
    BlockMut {
        name,
        shape: a.shape().to_vec(),
        data: a.as_slice_mut().expect("standard layout"),
        is_weight: false,
    }
}

fn push_cell<'a>(out: &mut Vec<Block<'a>>, prefix: &str, cell: &'a GruCell) {
    out.push(block2(format!("{prefix}.w_input"), &cell.w_input, true));
    out.push(block2(format!("{prefix}.w_hidden"), &cell.w_hidden, true));
    out.push(block1(format!("{prefix}.b_input"), &cell.b_input));
    out.push(block1(format!("{prefix}.b_hidden"), &cell.b_hidden));
}

fn push_cell_mut<'a>(out: &mut Vec<BlockMut<'a>>, prefix: &str, cell: &'a mut GruCell) {
    let GruCell {
        w_input,
        w_hidden,
        b_input,
        b_hidden,
    } = cell;
    out.push(block2_mut(format!("{prefix}.w_input"), w_input, true));
    out.push(block2_mut(format!("{prefix}.w_hidden"), w_hidden, true));
    out.push(block1_mut(format!("{prefix}.b_input"), b_input));
    out.push(block1_mut(format!("{prefix}.b_hidden"), b_hidden));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ModelConfig {
        ModelConfig {
            vocab_size: 10,
            embedding_dim: 4,
            hidden_dim: 3,
            emotion_dim: 7,
            co_attention: true,
            temporal: true,
        }
    }

    #[test]
    fn feature_width_matches_bundle_arithmetic() {
        let c = ModelConfig {
            hidden_dim: 32,
            emotion_dim: 14,
            ..config()
        };
        assert_eq!(c.feature_width(), 64 + 64 + 14 + 14 + 64 + 70);
    }

    #[test]
    fn init_is_seeded_and_biases_zero() {
        let a = ModelParams::init(&config(), 3);
        assert_eq!(a, ModelParams::init(&config(), 3));
        assert_ne!(a, ModelParams::init(&config(), 4));
        for b in a.blocks().iter().filter(|b| !b.is_weight) {
            assert!(b.data.iter().all(|&v| v == 0.0), "{}", b.name);
        }
        let r = (6.0f64 / (9 + 4) as f64).sqrt();
        assert!(a.semantic.forward.w_input.iter().all(|v| v.abs() <= r));
    }

    #[test]
    fn blocks_and_blocks_mut_agree() {
        let mut p = ModelParams::init(&config(), 1);
        let names: Vec<String> = p.blocks().into_iter().map(|b| b.name).collect();
        let names_mut: Vec<String> = p.blocks_mut().into_iter().map(|b| b.name).collect();
        assert_eq!(names, names_mut);
        assert_eq!(names.len(), 4 * 4 + 4 + 2);
    }
}
