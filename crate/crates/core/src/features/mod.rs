//! Feature construction: vocabulary building under document-frequency and
//! count thresholds, sparse bag-of-words vectors, dense embedding features,
//! and the horizontal combination of both blocks.

pub mod embedding;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::PreprocessedDoc;

pub use embedding::{
    infer_doc_vector, ns_gradients, train_pvdbow, train_skipgram, DocEmbedding, EmbeddingModel,
    SkipgramConfig,
};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("vocabulary has fewer than two terms")]
    DegenerateVocabulary,
    #[error("row mismatch: {0}")]
    RowMismatch(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("container error: {0}")]
    Container(#[from] crate::container::ContainerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabParams {
    pub min_count: u32,
    pub max_df_ratio: f64,
    pub max_size: usize,
}

impl Default for VocabParams {
    fn default() -> Self {
        // Topic-modelling dictionary defaults; the classifier block uses
        // 3,000 terms with a 0.6 df ceiling instead.
        VocabParams {
            min_count: 10,
            max_df_ratio: 0.4,
            max_size: 10_000,
        }
    }
}

/// Term dictionary with dense indices. Retained terms are ordered by
/// descending corpus frequency, ties broken lexicographically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabularySerde", into = "VocabularySerde")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    corpus_freq: Vec<u64>,
    total_docs: u64,
    params: VocabParams,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularySerde {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    corpus_freq: Vec<u64>,
    total_docs: u64,
    params: VocabParams,
}

impl From<VocabularySerde> for Vocabulary {
    fn from(v: VocabularySerde) -> Self {
        let index = v
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            terms: v.terms,
            doc_freq: v.doc_freq,
            corpus_freq: v.corpus_freq,
            total_docs: v.total_docs,
            params: v.params,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularySerde {
    fn from(v: Vocabulary) -> Self {
        VocabularySerde {
            terms: v.terms,
            doc_freq: v.doc_freq,
            corpus_freq: v.corpus_freq,
            total_docs: v.total_docs,
            params: v.params,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: u32) -> &str {
        &self.terms[index as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn corpus_freq(&self, index: u32) -> u64 {
        self.corpus_freq[index as usize]
    }

    pub fn total_docs(&self) -> u64 {
        self.total_docs
    }

    pub fn params(&self) -> VocabParams {
        self.params
    }
}

/// Build the dictionary: keep unigrams whose corpus count reaches
/// `min_count` and whose document frequency stays at or below
/// `max_df_ratio`, then truncate to the `max_size` most frequent.
pub fn build_vocabulary(
    docs: &[PreprocessedDoc],
    params: VocabParams,
) -> Result<Vocabulary, FeatureError> {
    if docs.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let total_docs = docs.len() as u64;
    let mut stats: HashMap<&str, (u64, u32)> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = Vec::new();
        for token in &doc.tokens {
            let entry = stats.entry(token.as_str()).or_insert((0, 0));
            entry.0 += 1;
            if !seen.contains(&token.as_str()) {
                entry.1 += 1;
                seen.push(token.as_str());
            }
        }
    }

    let mut retained: Vec<(&str, u64, u32)> = stats
        .into_iter()
        .filter(|&(_, (tf, df))| {
            tf >= params.min_count as u64 && df as f64 / total_docs as f64 <= params.max_df_ratio
        })
        .map(|(term, (tf, df))| (term, tf, df))
        .collect();
    retained.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    retained.truncate(params.max_size);

    let terms: Vec<String> = retained.iter().map(|(t, _, _)| t.to_string()).collect();
    let corpus_freq: Vec<u64> = retained.iter().map(|&(_, tf, _)| tf).collect();
    let doc_freq: Vec<u32> = retained.iter().map(|&(_, _, df)| df).collect();
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    Ok(Vocabulary {
        terms,
        doc_freq,
        corpus_freq,
        total_docs,
        params,
        index,
    })
}

/// Sparse term-frequency vector: strictly increasing indices, counts >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowVector {
    pub entries: Vec<(u32, u32)>,
}

impl BowVector {
    pub fn count_sum(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c as u64).sum()
    }
}

/// Count in-vocabulary token multiplicities; out-of-vocabulary tokens are
/// ignored.
pub fn bow_vector(tokens: &[String], vocab: &Vocabulary) -> BowVector {
    let mut counts: HashMap<u32, u32> = HashMap::new();
    for token in tokens {
        if let Some(i) = vocab.index_of(token) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(u32, u32)> = counts.into_iter().collect();
    entries.sort_unstable_by_key(|&(i, _)| i);
    BowVector { entries }
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine over mismatched lengths");
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// One classifier row: a sparse block (bag-of-words) followed by an
/// optional dense block (embeddings). The sparse block never densifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub sparse: Vec<(u32, f64)>,
    pub sparse_arity: usize,
    pub dense: Vec<f64>,
}

impl FeatureRow {
    pub fn from_bow(bow: &BowVector, sparse_arity: usize) -> Self {
        FeatureRow {
            sparse: bow.entries.iter().map(|&(i, c)| (i, c as f64)).collect(),
            sparse_arity,
            dense: Vec::new(),
        }
    }

    pub fn from_dense(dense: Vec<f64>) -> Self {
        FeatureRow {
            sparse: Vec::new(),
            sparse_arity: 0,
            dense,
        }
    }

    pub fn arity(&self) -> usize {
        self.sparse_arity + self.dense.len()
    }

    /// Value of feature `j`, resolving into the sparse or dense block.
    pub fn value(&self, j: usize) -> f64 {
        if j < self.sparse_arity {
            match self.sparse.binary_search_by_key(&(j as u32), |&(i, _)| i) {
                Ok(k) => self.sparse[k].1,
                Err(_) => 0.0,
            }
        } else {
            self.dense[j - self.sparse_arity]
        }
    }

    /// Dot product against a dense weight vector of matching arity.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        let mut sum = 0.0;
        for &(i, v) in &self.sparse {
            sum += weights[i as usize] * v;
        }
        for (j, &v) in self.dense.iter().enumerate() {
            sum += weights[self.sparse_arity + j] * v;
        }
        sum
    }
}

/// Row-aligned feature matrix with ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub rows: Vec<FeatureRow>,
    pub arity: usize,
}

/// Per-column mean and standard deviation of the dense block, fit on
/// training rows and reused on test rows. A constant column's deviation is
/// clamped to one so it standardizes to zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Horizontally combine bag-of-words and bag-of-embeddings rows: the sparse
/// block comes first, then the standardized dense block. Returns the fitted
/// standardizer so test rows can be transformed with training statistics.
pub fn concat_features(
    ids: &[String],
    bow_rows: &[BowVector],
    boe_rows: &[Vec<f64>],
    sparse_arity: usize,
) -> Result<(FeatureMatrix, Standardizer), FeatureError> {
    if bow_rows.len() != boe_rows.len() || ids.len() != bow_rows.len() {
        return Err(FeatureError::RowMismatch(format!(
            "{} ids, {} bow rows, {} boe rows",
            ids.len(),
            bow_rows.len(),
            boe_rows.len()
        )));
    }
    let dim = boe_rows.first().map_or(0, |r| r.len());
    if boe_rows.iter().any(|r| r.len() != dim) {
        return Err(FeatureError::RowMismatch(
            "dense rows of unequal length".into(),
        ));
    }
    let standardizer = Standardizer::fit(boe_rows);
    let matrix = concat_features_with(ids, bow_rows, boe_rows, sparse_arity, &standardizer)?;
    Ok((matrix, standardizer))
}

/// Combine rows using an already-fitted standardizer (test-time path).
pub fn concat_features_with(
    ids: &[String],
    bow_rows: &[BowVector],
    boe_rows: &[Vec<f64>],
    sparse_arity: usize,
    standardizer: &Standardizer,
) -> Result<FeatureMatrix, FeatureError> {
    if bow_rows.len() != boe_rows.len() || ids.len() != bow_rows.len() {
        return Err(FeatureError::RowMismatch(format!(
            "{} ids, {} bow rows, {} boe rows",
            ids.len(),
            bow_rows.len(),
            boe_rows.len()
        )));
    }
    let dim = standardizer.mean.len();
    let rows = bow_rows
        .iter()
        .zip(boe_rows)
        .map(|(bow, boe)| {
            if boe.len() != dim {
                return Err(FeatureError::RowMismatch(format!(
                    "dense row of length {}, expected {dim}",
                    boe.len()
                )));
            }
            Ok(FeatureRow {
                sparse: bow.entries.iter().map(|&(i, c)| (i, c as f64)).collect(),
                sparse_arity,
                dense: standardizer.transform(boe),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureMatrix {
        ids: ids.to_vec(),
        rows,
        arity: sparse_arity + dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, tokens: &[&str]) -> PreprocessedDoc {
        PreprocessedDoc::new(id, tokens.iter().map(|t| t.to_string()).collect())
    }

    #[test]
    fn vocabulary_thresholds() {
        let docs = vec![doc("1", &["a", "b"]), doc("2", &["b", "c"]), doc("3", &["b"])];
        let vocab = build_vocabulary(
            &docs,
            VocabParams {
                min_count: 1,
                max_df_ratio: 0.6,
                max_size: 10,
            },
        )
        .unwrap();
        // "b" has df 1.0 > 0.6 and is excluded; ties break lexicographically.
        assert_eq!(vocab.terms(), &["a".to_string(), "c".to_string()]);
        assert_eq!(vocab.index_of("a"), Some(0));
        assert_eq!(vocab.index_of("c"), Some(1));
        assert_eq!(vocab.index_of("b"), None);
    }

    #[test]
    fn vocabulary_can_end_up_empty() {
        let docs = vec![doc("1", &["a", "b"]), doc("2", &["b", "c"]), doc("3", &["b"])];
        let vocab = build_vocabulary(
            &docs,
            VocabParams {
                min_count: 2,
                max_df_ratio: 0.6,
                max_size: 10,
            },
        )
        .unwrap();
        assert!(vocab.is_empty());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            build_vocabulary(&[], VocabParams::default()),
            Err(FeatureError::EmptyCorpus)
        ));
    }

    #[test]
    fn vocabulary_orders_by_frequency_then_term() {
        let docs = vec![
            doc("1", &["z", "z", "z", "m"]),
            doc("2", &["a", "a", "m"]),
            doc("3", &["q", "a"]),
        ];
        let vocab = build_vocabulary(
            &docs,
            VocabParams {
                min_count: 1,
                max_df_ratio: 1.0,
                max_size: 10,
            },
        )
        .unwrap();
        // z:3, a:3, m:2, q:1 with the z/a tie broken lexicographically.
        assert_eq!(
            vocab.terms(),
            &["a".to_string(), "z".to_string(), "m".to_string(), "q".to_string()]
        );
    }

    #[test]
    fn bow_counts_multiplicities() {
        let docs = vec![doc("1", &["a"]), doc("2", &["c"])];
        let vocab = build_vocabulary(
            &docs,
            VocabParams {
                min_count: 1,
                max_df_ratio: 1.0,
                max_size: 10,
            },
        )
        .unwrap();
        let tokens: Vec<String> = ["a", "a", "c", "z"].iter().map(|s| s.to_string()).collect();
        let bow = bow_vector(&tokens, &vocab);
        assert_eq!(bow.entries, vec![(0, 2), (1, 1)]);

        assert!(bow_vector(&[], &vocab).entries.is_empty());
        let oov: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        assert!(bow_vector(&oov, &vocab).entries.is_empty());
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((cosine(&[1.0, 1.0], &[-1.0, -1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn concat_shapes_and_standardization() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let bows = vec![
            BowVector {
                entries: vec![(0, 1), (2, 2)],
            },
            BowVector {
                entries: vec![(1, 1)],
            },
        ];
        let boes = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let (matrix, standardizer) = concat_features(&ids, &bows, &boes, 3).unwrap();
        assert_eq!(matrix.arity, 5);
        assert_eq!(matrix.rows[0].arity(), 5);
        // First dense column standardizes to -1/+1, the constant column to 0.
        assert!((matrix.rows[0].dense[0] + 1.0).abs() < 1e-12);
        assert!((matrix.rows[1].dense[0] - 1.0).abs() < 1e-12);
        assert_eq!(matrix.rows[0].dense[1], 0.0);
        assert_eq!(standardizer.std[1], 1.0);
    }

    #[test]
    fn concat_rejects_mismatched_rows() {
        let ids = vec!["a".to_string()];
        let bows = vec![BowVector { entries: vec![] }];
        let boes: Vec<Vec<f64>> = vec![];
        assert!(matches!(
            concat_features(&ids, &bows, &boes, 3),
            Err(FeatureError::RowMismatch(_))
        ));
    }

    #[test]
    fn feature_row_value_and_dot() {
        let row = FeatureRow {
            sparse: vec![(1, 2.0), (4, 3.0)],
            sparse_arity: 5,
            dense: vec![0.5, -1.0],
        };
        assert_eq!(row.value(0), 0.0);
        assert_eq!(row.value(1), 2.0);
        assert_eq!(row.value(4), 3.0);
        assert_eq!(row.value(5), 0.5);
        assert_eq!(row.value(6), -1.0);
        let weights = vec![1.0, 1.0, 1.0, 1.0, 2.0, 10.0, 4.0];
        assert_eq!(row.dot(&weights), 2.0 + 6.0 + 5.0 - 4.0);
    }
}
