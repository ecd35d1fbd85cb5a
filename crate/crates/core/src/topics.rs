//! Latent topic discovery: LDA trained by collapsed Gibbs sampling, topic
//! inspection, manual label-map aggregation, and temporal topic activity.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container;
use crate::features::Vocabulary;
use crate::rng::SplitMix64;
use crate::textprep::{weekday_iso, PreprocessedDoc};

pub const LDA_MAGIC: &str = "CPLDA1";

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("container error: {0}")]
    Container(#[from] container::ContainerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    /// Number of latent topics.
    pub topics: usize,
    /// Full Gibbs sweeps over every token.
    pub iterations: usize,
    /// Document-topic Dirichlet prior; defaults to 50/K.
    pub alpha: f64,
    /// Topic-word Dirichlet prior.
    pub beta: f64,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(topics: usize, iterations: usize, seed: u64) -> Self {
        LdaConfig {
            topics,
            iterations,
            alpha: 50.0 / topics.max(1) as f64,
            beta: 0.01,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.topics == 0 {
            return Err("topics must be >= 1".into());
        }
        if self.iterations == 0 {
            return Err("iterations must be >= 1".into());
        }
        if self.alpha <= 0.0 || self.beta <= 0.0 {
            return Err("priors must be positive".into());
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig::new(50, 20, 1)
    }
}

/// Trained topic model: integer count tables plus the token-level topic
/// assignments they were accumulated from.
#[derive(Debug, Clone)]
pub struct LdaModel {
    pub vocab: Vocabulary,
    pub config: LdaConfig,
    /// K x |V| topic-word counts, row-major.
    topic_word: Vec<u32>,
    /// Per-topic totals (row sums of `topic_word`).
    topic_total: Vec<u32>,
    /// M x K document-topic counts, row-major.
    doc_topic: Vec<u32>,
    /// Per-document token totals.
    doc_total: Vec<u32>,
    /// Token-level assignments, one entry per retained token.
    assignments: Vec<Vec<u32>>,
    /// Token ids per document (in-vocabulary tokens only).
    docs: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic: usize,
    /// (term, probability) pairs, probability descending.
    pub terms: Vec<(String, f64)>,
}

/// Manual many-to-one aggregation of topics into labels. Topic ids absent
/// from both maps are tallied under the reserved "unlabeled" bucket.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicLabelMap {
    pub labels: BTreeMap<usize, String>,
    #[serde(default)]
    pub unlabeled: Vec<usize>,
}

pub const UNLABELED: &str = "unlabeled";

impl TopicLabelMap {
    pub fn from_json(raw: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("label map serializes")
    }

    /// True when every topic id in [0, k) is either labeled or explicitly
    /// marked unlabeled.
    pub fn covers(&self, k: usize) -> bool {
        (0..k).all(|t| self.labels.contains_key(&t) || self.unlabeled.contains(&t))
    }

    pub fn label_for(&self, topic: usize) -> &str {
        self.labels.get(&topic).map(String::as_str).unwrap_or(UNLABELED)
    }
}

#[derive(Serialize, Deserialize)]
struct LdaHeader {
    vocab: Vocabulary,
    config: LdaConfig,
    num_docs: usize,
    doc_lens: Vec<u32>,
}

impl LdaModel {
    pub fn num_topics(&self) -> usize {
        self.config.topics
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn topic_word_count(&self, k: usize, w: usize) -> u32 {
        self.topic_word[k * self.vocab.len() + w]
    }

    pub fn doc_topic_count(&self, d: usize, k: usize) -> u32 {
        self.doc_topic[d * self.config.topics + k]
    }

    pub fn assignments(&self, d: usize) -> &[u32] {
        &self.assignments[d]
    }

    /// Document-topic distribution for a training document.
    pub fn theta(&self, d: usize) -> Vec<f64> {
        let k = self.config.topics;
        let denom = self.doc_total[d] as f64 + k as f64 * self.config.alpha;
        (0..k)
            .map(|t| (self.doc_topic_count(d, t) as f64 + self.config.alpha) / denom)
            .collect()
    }

    /// Topic-word distribution for one topic.
    pub fn phi(&self, k: usize) -> Vec<f64> {
        let v = self.vocab.len();
        let denom = self.topic_total[k] as f64 + v as f64 * self.config.beta;
        (0..v)
            .map(|w| (self.topic_word_count(k, w) as f64 + self.config.beta) / denom)
            .collect()
    }

    /// Count-table consistency: row sums match per-document and per-topic
    /// totals and every assignment is a valid topic id.
    pub fn check_consistency(&self) -> bool {
        let k = self.config.topics;
        for d in 0..self.docs.len() {
            let sum: u32 = (0..k).map(|t| self.doc_topic_count(d, t)).sum();
            if sum != self.doc_total[d] || sum as usize != self.docs[d].len() {
                return false;
            }
        }
        for t in 0..k {
            let sum: u32 = (0..self.vocab.len()).map(|w| self.topic_word_count(t, w)).sum();
            if sum != self.topic_total[t] {
                return false;
            }
        }
        self.assignments
            .iter()
            .flatten()
            .all(|&z| (z as usize) < k)
    }

    pub fn save(&self, path: &Path) -> Result<(), TopicError> {
        let mut w = BufWriter::new(File::create(path).map_err(container::ContainerError::Io)?);
        let header = LdaHeader {
            vocab: self.vocab.clone(),
            config: self.config,
            num_docs: self.docs.len(),
            doc_lens: self.docs.iter().map(|d| d.len() as u32).collect(),
        };
        container::write_header(&mut w, LDA_MAGIC, &header)?;
        container::write_i32_table(&mut w, &self.topic_word)?;
        container::write_i32_table(&mut w, &self.doc_topic)?;
        let flat_docs: Vec<u32> = self.docs.iter().flatten().copied().collect();
        let flat_assignments: Vec<u32> = self.assignments.iter().flatten().copied().collect();
        container::write_i32_table(&mut w, &flat_docs)?;
        container::write_i32_table(&mut w, &flat_assignments)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TopicError> {
        let mut r = BufReader::new(File::open(path).map_err(container::ContainerError::Io)?);
        let header: LdaHeader = container::read_header(&mut r, LDA_MAGIC)?;
        let k = header.config.topics;
        let v = header.vocab.len();
        let topic_word = container::read_i32_table(&mut r, k * v)?;
        let doc_topic = container::read_i32_table(&mut r, header.num_docs * k)?;
        let total_tokens: usize = header.doc_lens.iter().map(|&l| l as usize).sum();
        let flat_docs = container::read_i32_table(&mut r, total_tokens)?;
        let flat_assignments = container::read_i32_table(&mut r, total_tokens)?;

        let mut docs = Vec::with_capacity(header.num_docs);
        let mut assignments = Vec::with_capacity(header.num_docs);
        let mut offset = 0usize;
        for &len in &header.doc_lens {
            let len = len as usize;
            docs.push(flat_docs[offset..offset + len].to_vec());
            assignments.push(flat_assignments[offset..offset + len].to_vec());
            offset += len;
        }
        let topic_total = (0..k)
            .map(|t| topic_word[t * v..(t + 1) * v].iter().sum())
            .collect();
        let doc_total = (0..header.num_docs)
            .map(|d| doc_topic[d * k..(d + 1) * k].iter().sum())
            .collect();
        Ok(LdaModel {
            vocab: header.vocab,
            config: header.config,
            topic_word,
            topic_total,
            doc_topic,
            doc_total,
            assignments,
            docs,
        })
    }
}

/// Train by collapsed Gibbs sampling: random initial assignments, then
/// `iterations` full sweeps resampling every token's topic from
/// (n_dk + alpha) * (n_kw + beta) / (n_k + |V| beta).
pub fn train_lda(
    docs: &[PreprocessedDoc],
    vocab: &Vocabulary,
    config: LdaConfig,
) -> Result<LdaModel, TopicError> {
    config.validate().map_err(TopicError::BadConfig)?;
    if docs.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }
    let token_docs: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| vocab.index_of(t)).collect())
        .collect();
    if token_docs.iter().all(Vec::is_empty) {
        return Err(TopicError::EmptyCorpus);
    }

    let k = config.topics;
    let v = vocab.len();
    let mut rng = SplitMix64::new(config.seed);

    let mut model = LdaModel {
        vocab: vocab.clone(),
        config,
        topic_word: vec![0; k * v],
        topic_total: vec![0; k],
        doc_topic: vec![0; token_docs.len() * k],
        doc_total: vec![0; token_docs.len()],
        assignments: token_docs.iter().map(|d| vec![0; d.len()]).collect(),
        docs: token_docs,
    };

    for d in 0..model.docs.len() {
        for i in 0..model.docs[d].len() {
            let w = model.docs[d][i] as usize;
            let z = rng.next_below(k);
            model.assignments[d][i] = z as u32;
            model.topic_word[z * v + w] += 1;
            model.topic_total[z] += 1;
            model.doc_topic[d * k + z] += 1;
            model.doc_total[d] += 1;
        }
    }

    let beta_denom = v as f64 * model.config.beta;
    let mut weights = vec![0.0; k];
    for _sweep in 0..model.config.iterations {
        for d in 0..model.docs.len() {
            for i in 0..model.docs[d].len() {
                let w = model.docs[d][i] as usize;
                let old = model.assignments[d][i] as usize;
                model.topic_word[old * v + w] -= 1;
                model.topic_total[old] -= 1;
                model.doc_topic[d * k + old] -= 1;

                let mut cum = 0.0;
                for (t, slot) in weights.iter_mut().enumerate() {
                    let p = (model.doc_topic[d * k + t] as f64 + model.config.alpha)
                        * (model.topic_word[t * v + w] as f64 + model.config.beta)
                        / (model.topic_total[t] as f64 + beta_denom);
                    cum += p;
                    *slot = cum;
                }
                let z = rng.next_weighted(&weights);
                model.assignments[d][i] = z as u32;
                model.topic_word[z * v + w] += 1;
                model.topic_total[z] += 1;
                model.doc_topic[d * k + z] += 1;
            }
        }
        debug_assert!(model.check_consistency(), "count tables out of sync");
    }

    Ok(model)
}

/// Infer a topic distribution for a new document with the topic-word counts
/// frozen. Returns theta of length K summing to one.
pub fn infer_topics(model: &LdaModel, tokens: &[String], iterations: usize) -> Vec<f64> {
    let k = model.config.topics;
    let v = model.vocab.len();
    let ids: Vec<usize> = tokens
        .iter()
        .filter_map(|t| model.vocab.index_of(t).map(|i| i as usize))
        .collect();
    let mut rng = SplitMix64::new(model.config.seed ^ 0x1DA1_77F3_0000_0001);

    let mut doc_topic = vec![0u32; k];
    let mut z: Vec<usize> = ids.iter().map(|_| rng.next_below(k)).collect();
    for &t in &z {
        doc_topic[t] += 1;
    }

    let beta_denom = v as f64 * model.config.beta;
    let mut weights = vec![0.0; k];
    for _ in 0..iterations {
        for (i, &w) in ids.iter().enumerate() {
            doc_topic[z[i]] -= 1;
            let mut cum = 0.0;
            for (t, slot) in weights.iter_mut().enumerate() {
                let p = (doc_topic[t] as f64 + model.config.alpha)
                    * (model.topic_word_count(t, w) as f64 + model.config.beta)
                    / (model.topic_total[t] as f64 + beta_denom);
                cum += p;
                *slot = cum;
            }
            z[i] = rng.next_weighted(&weights);
            doc_topic[z[i]] += 1;
        }
    }

    let denom = ids.len() as f64 + k as f64 * model.config.alpha;
    (0..k)
        .map(|t| (doc_topic[t] as f64 + model.config.alpha) / denom)
        .collect()
}

/// Top-n most probable terms of one topic, ties broken lexicographically.
pub fn top_words(model: &LdaModel, topic: usize, n: usize) -> TopicSummary {
    let phi = model.phi(topic);
    let mut ranked: Vec<(u32, f64)> = phi
        .iter()
        .enumerate()
        .map(|(w, &p)| (w as u32, p))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| model.vocab.term(a.0).cmp(model.vocab.term(b.0)))
    });
    ranked.truncate(n);
    TopicSummary {
        topic,
        terms: ranked
            .into_iter()
            .map(|(w, p)| (model.vocab.term(w).to_string(), p))
            .collect(),
    }
}

/// Hard assignment: argmax with lowest-index tie-break.
pub fn dominant_topic(theta: &[f64]) -> usize {
    let mut best = 0;
    let mut best_p = f64::NEG_INFINITY;
    for (t, &p) in theta.iter().enumerate() {
        if p > best_p {
            best = t;
            best_p = p;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub count: usize,
    pub percentage: f64,
}

/// Group hard topic assignments under the manual label map; every document
/// lands in a bucket (its label, or "unlabeled"), and percentages are over
/// all grouped documents so they total 100.
pub fn apply_label_map(
    assignments: &[(String, usize)],
    map: &TopicLabelMap,
) -> Vec<LabelCount> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, topic) in assignments {
        *counts.entry(map.label_for(*topic)).or_insert(0) += 1;
    }
    let total = assignments.len().max(1) as f64;
    let mut rows: Vec<LabelCount> = counts
        .into_iter()
        .map(|(label, count)| LabelCount {
            label: label.to_string(),
            count,
            percentage: 100.0 * count as f64 / total,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
    rows
}

/// K x 7 topic activity by local weekday, row-normalized; rows with no
/// documents stay zero. Input pairs are (topic, local timestamp seconds).
pub fn topic_day_of_week(items: &[(usize, i64)], k: usize) -> Vec<[f64; 7]> {
    let mut matrix = vec![[0.0f64; 7]; k];
    for &(topic, local_ts) in items {
        matrix[topic][weekday_iso(local_ts)] += 1.0;
    }
    for row in &mut matrix {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            for cell in row.iter_mut() {
                *cell /= sum;
            }
        }
    }
    matrix
}

/// Held-out per-token perplexity: exp of the negative mean log-likelihood
/// under theta inferred per document and the trained topic-word table.
pub fn perplexity(model: &LdaModel, docs: &[PreprocessedDoc], infer_iterations: usize) -> f64 {
    let phis: Vec<Vec<f64>> = (0..model.config.topics).map(|t| model.phi(t)).collect();
    let mut log_sum = 0.0;
    let mut tokens = 0usize;
    for doc in docs {
        let theta = infer_topics(model, &doc.tokens, infer_iterations);
        for token in &doc.tokens {
            if let Some(w) = model.vocab.index_of(token) {
                let p: f64 = theta
                    .iter()
                    .zip(&phis)
                    .map(|(th, phi)| th * phi[w as usize])
                    .sum();
                log_sum += p.max(f64::MIN_POSITIVE).ln();
                tokens += 1;
            }
        }
    }
    if tokens == 0 {
        return f64::INFINITY;
    }
    (-log_sum / tokens as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{build_vocabulary, VocabParams};

    fn doc(id: &str, tokens: &[&str]) -> PreprocessedDoc {
        PreprocessedDoc::new(id, tokens.iter().map(|t| t.to_string()).collect())
    }

    fn loose() -> VocabParams {
        VocabParams {
            min_count: 1,
            max_df_ratio: 1.0,
            max_size: 100_000,
        }
    }

    #[test]
    fn single_topic_degeneracy() {
        let docs = vec![doc("1", &["a", "b", "a"]), doc("2", &["b", "c"])];
        let vocab = build_vocabulary(&docs, loose()).unwrap();
        let model = train_lda(&docs, &vocab, LdaConfig::new(1, 5, 3)).unwrap();
        for d in 0..model.num_docs() {
            assert!(model.assignments(d).iter().all(|&z| z == 0));
            let theta = model.theta(d);
            assert_eq!(theta.len(), 1);
            assert!((theta[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn label_switching_symmetry() {
        // Two disjoint one-word vocabulary halves; across seeds the learned
        // per-topic word sets agree up to topic permutation.
        let mut docs = Vec::new();
        for i in 0..30 {
            docs.push(doc(&format!("a{i}"), &["a", "a", "a", "a"]));
            docs.push(doc(&format!("b{i}"), &["b", "b", "b", "b"]));
        }
        let vocab = build_vocabulary(&docs, loose()).unwrap();
        let summarize = |seed: u64| {
            let mut config = LdaConfig::new(2, 100, seed);
            config.alpha = 0.1;
            let model = train_lda(&docs, &vocab, config).unwrap();
            let mut tops: Vec<String> = (0..2)
                .map(|t| top_words(&model, t, 1).terms[0].0.clone())
                .collect();
            tops.sort();
            tops
        };
        assert_eq!(summarize(1), summarize(99));
        assert_eq!(summarize(1), vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn deterministic_given_seed() {
        let docs = vec![
            doc("1", &["a", "b", "c", "a"]),
            doc("2", &["c", "d", "d"]),
            doc("3", &["a", "d", "b"]),
        ];
        let vocab = build_vocabulary(&docs, loose()).unwrap();
        let m1 = train_lda(&docs, &vocab, LdaConfig::new(3, 10, 42)).unwrap();
        let m2 = train_lda(&docs, &vocab, LdaConfig::new(3, 10, 42)).unwrap();
        assert_eq!(m1.assignments, m2.assignments);
    }

    #[test]
    fn empty_corpus_rejected() {
        let docs = vec![doc("1", &["a"])];
        let vocab = build_vocabulary(&docs, loose()).unwrap();
        assert!(matches!(
            train_lda(&[], &vocab, LdaConfig::new(2, 5, 1)),
            Err(TopicError::EmptyCorpus)
        ));
    }

    #[test]
    fn theta_is_distribution() {
        let docs = vec![doc("1", &["a", "b", "c"]), doc("2", &["b", "c", "d"])];
        let vocab = build_vocabulary(&docs, loose()).unwrap();
        let model = train_lda(&docs, &vocab, LdaConfig::new(4, 10, 9)).unwrap();
        for d in 0..model.num_docs() {
            let theta = model.theta(d);
            let sum: f64 = theta.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(theta.iter().all(|&p| p >= 0.0));
        }
        for t in 0..4 {
            let phi = model.phi(t);
            let sum: f64 = phi.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn infer_empty_doc_is_uniform() {
        let docs = vec![doc("1", &["a", "b"]), doc("2", &["c", "d"])];
        let vocab = build_vocabulary(&docs, loose()).unwrap();
        let model = train_lda(&docs, &vocab, LdaConfig::new(4, 5, 1)).unwrap();
        let theta = infer_topics(&model, &[], 10);
        for &p in &theta {
            assert!((p - 0.25).abs() < 1e-9);
        }
        let sum: f64 = theta.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn top_words_cover_all_when_n_large() {
        let docs = vec![doc("1", &["a", "b", "c"])];
        let vocab = build_vocabulary(&docs, loose()).unwrap();
        let model = train_lda(&docs, &vocab, LdaConfig::new(2, 5, 1)).unwrap();
        let summary = top_words(&model, 0, 100);
        assert_eq!(summary.terms.len(), 3);
        for pair in summary.terms.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
    }

    #[test]
    fn dominant_topic_tie_break() {
        assert_eq!(dominant_topic(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(dominant_topic(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(dominant_topic(&[1.0]), 0);
    }

    #[test]
    fn label_map_grouping() {
        let map = TopicLabelMap {
            labels: [(0, "Sports".to_string()), (1, "Sports".to_string()), (2, "Mood".to_string())]
                .into_iter()
                .collect(),
            unlabeled: vec![],
        };
        let assignments = vec![
            ("d1".to_string(), 0),
            ("d2".to_string(), 1),
            ("d3".to_string(), 2),
            ("d4".to_string(), 0),
        ];
        let rows = apply_label_map(&assignments, &map);
        assert_eq!(rows[0].label, "Sports");
        assert_eq!(rows[0].count, 3);
        assert!((rows[0].percentage - 75.0).abs() < 1e-9);
        assert_eq!(rows[1].label, "Mood");
        assert!((rows[1].percentage - 25.0).abs() < 1e-9);
        let total: f64 = rows.iter().map(|r| r.percentage).sum();
        assert!((total - 100.0).abs() < 0.01);
    }

    #[test]
    fn missing_map_entry_goes_unlabeled() {
        let map = TopicLabelMap {
            labels: [(0, "Sports".to_string())].into_iter().collect(),
            unlabeled: vec![],
        };
        let rows = apply_label_map(&[("d1".to_string(), 5)], &map);
        assert_eq!(rows[0].label, UNLABELED);
        assert_eq!(rows[0].count, 1);
        assert!(!map.covers(6));
    }

    #[test]
    fn label_map_json_round_trip() {
        let raw = r#"{ "labels": {"0": "Sports", "1": "Mood"}, "unlabeled": [2, 3] }"#;
        let map = TopicLabelMap::from_json(raw).unwrap();
        assert_eq!(map.label_for(0), "Sports");
        assert_eq!(map.label_for(2), UNLABELED);
        assert!(map.covers(4));
        let round = TopicLabelMap::from_json(&map.to_json()).unwrap();
        assert_eq!(round, map);
    }

    #[test]
    fn day_of_week_all_monday() {
        // 2017-03-06 is a Monday.
        let monday = 1488762000;
        let items = vec![(0usize, monday), (0, monday + 3600), (2, monday)];
        let matrix = topic_day_of_week(&items, 3);
        assert_eq!(matrix[0][0], 1.0);
        assert_eq!(matrix[2][0], 1.0);
        assert!(matrix[1].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn day_of_week_rows_normalized() {
        let day = 86400;
        let items: Vec<(usize, i64)> = (0..14).map(|i| (0usize, 1488762000 + i * day)).collect();
        let matrix = topic_day_of_week(&items, 1);
        let sum: f64 = matrix[0].iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        for &cell in &matrix[0] {
            assert!((cell - 1.0 / 7.0).abs() < 1e-9);
        }
    }

    #[test]
    fn day_of_week_empty() {
        let matrix = topic_day_of_week(&[], 3);
        assert!(matrix.iter().all(|row| row.iter().all(|&c| c == 0.0)));
    }

    #[test]
    fn save_load_round_trip() {
        let docs = vec![doc("1", &["a", "b", "c", "a"]), doc("2", &["c", "d"])];
        let vocab = build_vocabulary(&docs, loose()).unwrap();
        let model = train_lda(&docs, &vocab, LdaConfig::new(3, 10, 5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cplda");
        model.save(&path).unwrap();
        let loaded = LdaModel::load(&path).unwrap();
        assert_eq!(loaded.assignments, model.assignments);
        assert_eq!(loaded.topic_word, model.topic_word);
        assert!(loaded.check_consistency());
        let path2 = dir.path().join("model2.cplda");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }
}
