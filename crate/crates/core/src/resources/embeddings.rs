use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Row reserved for unknown tokens and padding. Always all zeros.
pub const OOV_ID: usize = 0;

/// Frozen pretrained word vectors. Row 0 is the zero OOV/padding row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vocab: HashMap<String, usize>,
    tokens: Vec<String>,
    vectors: Array2<f64>,
}

impl EmbeddingTable {
    /// `entries` must all have the same width; later duplicates are ignored.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("embedding width must be positive".into()));
        }
        let mut vocab = HashMap::new();
        let mut tokens = vec!["<unk>".to_string()];
        let mut flat = vec![0.0; dim];
        for (token, vector) in entries {
            if vector.len() != dim {
                return Err(Error::Shape(format!(
                    "vector for `{token}` has width {}, expected {dim}",
                    vector.len()
                )));
            }
            if vocab.contains_key(&token) {
                continue;
            }
            vocab.insert(token.clone(), tokens.len());
            tokens.push(token);
            flat.extend(vector);
        }
        let vectors = Array2::from_shape_vec((tokens.len(), dim), flat)
            .expect("row-major layout matches token count");
        Ok(EmbeddingTable {
            vocab,
            tokens,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// Number of rows including the OOV row.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 1
    }

    pub fn id(&self, token: &str) -> usize {
        self.vocab.get(token).copied().unwrap_or(OOV_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains_key(token)
    }

    pub fn row(&self, id: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(id)
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    /// Ids in the order they were loaded, excluding the OOV row.
    pub fn vocab_ids(&self) -> impl Iterator<Item = usize> {
        1..self.tokens.len()
    }

    /// The `k` tokens with highest cosine similarity to `token`, excluding the
    /// token itself and zero vectors. Ties keep table order.
    pub fn nearest_neighbors(&self, token: &str, k: usize) -> Vec<(usize, f64)> {
        let Some(&id) = self.vocab.get(token) else {
            return Vec::new();
        };
        let query = self.vectors.row(id);
        let qn = query.dot(&query).sqrt();
        if qn == 0.0 {
            return Vec::new();
        }
        let mut scored: Vec<(usize, f64)> = self
            .vocab_ids()
            .filter(|&j| j != id)
            .filter_map(|j| {
                let v = self.vectors.row(j);
                let n = v.dot(&v).sqrt();
                (n > 0.0).then(|| (j, query.dot(&v) / (qn * n)))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        scored.truncate(k);
        scored
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for id in self.vocab_ids() {
            let row: Vec<String> = self.vectors.row(id).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{} {}", self.tokens[id], row.join(" ")).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Parses a "token v1 ... vd" text file. An optional word2vec-style
/// "count dim" header line is skipped. Returns the table and the number of
/// duplicate tokens that were ignored.
pub fn load_embeddings(path: &Path) -> Result<(EmbeddingTable, usize)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut dim = None;
    let mut duplicates = 0;
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if line_no == 0 && values.len() == 1 && token.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
            continue;
        }
        let vector = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| Error::parse(path, line_no + 1, e.to_string()))?;
        match dim {
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(Error::parse(
                    path,
                    line_no + 1,
                    format!("vector width {} differs from {d}", vector.len()),
                ))
            }
            _ => {}
        }
        let token = token.to_lowercase();
        if !seen.insert(token.clone()) {
            log::warn!("{}:{}: duplicate token `{token}` ignored", path.display(), line_no + 1);
            duplicates += 1;
            continue;
        }
        entries.push((token, vector));
    }
    let dim = match dim {
        Some(d) if d > 0 => d,
        _ => return Err(Error::parse(path, 0, "no embedding vectors found")),
    };
    Ok((EmbeddingTable::from_entries(dim, entries)?, duplicates))
}
