//! Skip-gram word embeddings and distributed-bag-of-words document
//! embeddings, both trained by stochastic gradient ascent with negative
//! sampling. Training is single-threaded and fully determined by the seed.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container;
use crate::rng::SplitMix64;
use crate::textprep::PreprocessedDoc;

use super::{FeatureError, Vocabulary};

pub const EMBEDDING_MAGIC: &str = "CPEMB1";
pub const DOC_VECTORS_MAGIC: &str = "CPDOC1";

/// Hyper-parameters for skip-gram and distributed-bag-of-words training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkipgramConfig {
    /// Embedding dimensionality.
    pub dim: usize,
    /// Context window: positions within this distance of the center word
    /// form (center, context) pairs.
    pub window: usize,
    /// Full passes over the corpus.
    pub epochs: usize,
    /// Negative samples drawn per positive pair.
    pub negatives: usize,
    /// Initial learning rate; decays linearly to 1e-4 of itself.
    pub learning_rate: f64,
    /// Optional frequent-token subsampling threshold. Off by default.
    pub subsample: Option<f64>,
    /// Whether document-vector training also updates word input vectors.
    pub co_train_words: bool,
    pub seed: u64,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        SkipgramConfig {
            dim: 100,
            window: 2,
            epochs: 10,
            negatives: 5,
            learning_rate: 0.025,
            subsample: None,
            co_train_words: true,
            seed: 1,
        }
    }
}

impl SkipgramConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dim == 0 {
            return Err("dim must be positive".into());
        }
        if self.window == 0 {
            return Err("window must be >= 1".into());
        }
        if self.epochs == 0 {
            return Err("epochs must be >= 1".into());
        }
        if self.negatives == 0 {
            return Err("negatives must be >= 1".into());
        }
        if self.learning_rate <= 0.0 {
            return Err("learning rate must be positive".into());
        }
        Ok(())
    }
}

/// Learned embedding tables: the input (word) vectors and the output
/// (context) vectors, both |V| x dim, kept as f64 in memory and stored as
/// little-endian f32 on disk.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub vocab: Vocabulary,
    pub config: SkipgramConfig,
    input: Vec<f64>,
    output: Vec<f64>,
    /// Average negative-sampling loss over a fixed evaluation batch,
    /// recorded before training and after each epoch.
    pub epoch_losses: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingHeader {
    vocab: Vocabulary,
    config: SkipgramConfig,
    rows: usize,
    cols: usize,
    epoch_losses: Vec<f64>,
}

/// A dense document vector tied to its source id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocEmbedding {
    pub source_id: String,
    pub vector: Vec<f64>,
}

impl EmbeddingModel {
    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn word_vector(&self, index: u32) -> &[f64] {
        let d = self.config.dim;
        &self.input[index as usize * d..(index as usize + 1) * d]
    }

    pub fn output_vector(&self, index: u32) -> &[f64] {
        let d = self.config.dim;
        &self.output[index as usize * d..(index as usize + 1) * d]
    }

    pub fn vector_for(&self, term: &str) -> Option<&[f64]> {
        self.vocab.index_of(term).map(|i| self.word_vector(i))
    }

    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        Some(super::cosine(self.vector_for(a)?, self.vector_for(b)?))
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let mut w = BufWriter::new(File::create(path).map_err(container::ContainerError::Io)?);
        let header = EmbeddingHeader {
            vocab: self.vocab.clone(),
            config: self.config,
            rows: self.vocab.len(),
            cols: self.config.dim,
            epoch_losses: self.epoch_losses.clone(),
        };
        container::write_header(&mut w, EMBEDDING_MAGIC, &header)?;
        container::write_f32_table(&mut w, &self.input)?;
        container::write_f32_table(&mut w, &self.output)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let mut r = BufReader::new(File::open(path).map_err(container::ContainerError::Io)?);
        let header: EmbeddingHeader = container::read_header(&mut r, EMBEDDING_MAGIC)?;
        let n = header.rows * header.cols;
        let input = container::read_f32_table(&mut r, n)?;
        let output = container::read_f32_table(&mut r, n)?;
        Ok(EmbeddingModel {
            vocab: header.vocab,
            config: header.config,
            input,
            output,
            epoch_losses: header.epoch_losses,
        })
    }
}

/// Save document vectors alongside their ids.
pub fn save_doc_vectors(docs: &[DocEmbedding], dim: usize, path: &Path) -> Result<(), FeatureError> {
    #[derive(Serialize)]
    struct Header<'a> {
        ids: Vec<&'a str>,
        rows: usize,
        cols: usize,
    }
    let mut w = BufWriter::new(File::create(path).map_err(container::ContainerError::Io)?);
    let header = Header {
        ids: docs.iter().map(|d| d.source_id.as_str()).collect(),
        rows: docs.len(),
        cols: dim,
    };
    container::write_header(&mut w, DOC_VECTORS_MAGIC, &header)?;
    for d in docs {
        container::write_f32_table(&mut w, &d.vector)?;
    }
    Ok(())
}

pub fn load_doc_vectors(path: &Path) -> Result<Vec<DocEmbedding>, FeatureError> {
    #[derive(Deserialize)]
    struct Header {
        ids: Vec<String>,
        rows: usize,
        cols: usize,
    }
    let mut r = BufReader::new(File::open(path).map_err(container::ContainerError::Io)?);
    let header: Header = container::read_header(&mut r, DOC_VECTORS_MAGIC)?;
    let mut out = Vec::with_capacity(header.rows);
    for id in header.ids {
        let vector = container::read_f32_table(&mut r, header.cols)?;
        out.push(DocEmbedding {
            source_id: id,
            vector,
        });
    }
    Ok(out)
}

fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-30.0, 30.0);
    1.0 / (1.0 + (-x).exp())
}

/// Loss and gradients of one negative-sampling pair:
///
///   L = -ln sigmoid(u_pos . v) - sum_i ln sigmoid(-u_neg_i . v)
///
/// Returns (loss, grad wrt center, grad wrt positive output, grads wrt each
/// negative output). The training loops apply exactly these gradients, so
/// the finite-difference check in the test suite exercises the production
/// math.
pub fn ns_gradients(
    center: &[f64],
    out_pos: &[f64],
    out_negs: &[&[f64]],
) -> (f64, Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let dim = center.len();
    let mut loss = 0.0;
    let mut g_center = vec![0.0; dim];

    let s_pos = sigmoid(dot(center, out_pos));
    loss -= s_pos.max(f64::MIN_POSITIVE).ln();
    let coeff_pos = s_pos - 1.0;
    let g_pos: Vec<f64> = center.iter().map(|&c| coeff_pos * c).collect();
    for (g, &u) in g_center.iter_mut().zip(out_pos) {
        *g += coeff_pos * u;
    }

    let mut g_negs = Vec::with_capacity(out_negs.len());
    for neg in out_negs {
        let s_neg = sigmoid(-dot(center, neg));
        loss -= s_neg.max(f64::MIN_POSITIVE).ln();
        let coeff = 1.0 - s_neg; // = sigmoid(u_neg . v)
        g_negs.push(center.iter().map(|&c| coeff * c).collect());
        for (g, &u) in g_center.iter_mut().zip(*neg) {
            *g += coeff * u;
        }
    }
    (loss, g_center, g_pos, g_negs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cumulative noise distribution: unigram frequency raised to 0.75.
fn noise_table(vocab: &Vocabulary) -> Vec<f64> {
    let mut cum = Vec::with_capacity(vocab.len());
    let mut total = 0.0;
    for i in 0..vocab.len() as u32 {
        total += (vocab.corpus_freq(i) as f64).powf(0.75);
        cum.push(total);
    }
    cum
}

struct Trainer<'a> {
    dim: usize,
    negatives: usize,
    output: &'a mut [f64],
    noise: &'a [f64],
    scratch: Vec<f64>,
}

impl<'a> Trainer<'a> {
    /// One SGD step on a (center, positive) pair against `negatives` noise
    /// draws. Negative draws equal to the positive are skipped. The center
    /// slice lives in whichever table the caller is training (word input
    /// vectors or document vectors).
    fn step(&mut self, center: &mut [f64], pos: usize, lr: f64, rng: &mut SplitMix64) {
        self.scratch.iter_mut().for_each(|g| *g = 0.0);
        let d = self.dim;

        let (s_pos, coeff_pos);
        {
            let u = &self.output[pos * d..(pos + 1) * d];
            s_pos = sigmoid(dot(center, u));
            coeff_pos = s_pos - 1.0;
            for (g, &uv) in self.scratch.iter_mut().zip(u) {
                *g += coeff_pos * uv;
            }
        }
        {
            let u = &mut self.output[pos * d..(pos + 1) * d];
            for (uv, &c) in u.iter_mut().zip(center.iter()) {
                *uv -= lr * coeff_pos * c;
            }
        }

        for _ in 0..self.negatives {
            let neg = rng.next_weighted(self.noise);
            if neg == pos {
                continue;
            }
            let coeff;
            {
                let u = &self.output[neg * d..(neg + 1) * d];
                coeff = sigmoid(dot(center, u)); // = 1 - sigmoid(-u.v)
                for (g, &uv) in self.scratch.iter_mut().zip(u) {
                    *g += coeff * uv;
                }
            }
            let u = &mut self.output[neg * d..(neg + 1) * d];
            for (uv, &c) in u.iter_mut().zip(center.iter()) {
                *uv -= lr * coeff * c;
            }
        }

        for (c, &g) in center.iter_mut().zip(&self.scratch) {
            *c -= lr * g;
        }
    }
}

/// Uniform init in [-0.5/dim, 0.5/dim], the usual word2vec convention.
fn init_table(rng: &mut SplitMix64, rows: usize, dim: usize) -> Vec<f64> {
    (0..rows * dim)
        .map(|_| (rng.next_f64() - 0.5) / dim as f64)
        .collect()
}

fn corpus_to_ids(docs: &[PreprocessedDoc], vocab: &Vocabulary) -> Vec<Vec<u32>> {
    docs.iter()
        .map(|doc| {
            doc.tokens
                .iter()
                .filter_map(|t| vocab.index_of(t))
                .collect()
        })
        .collect()
}

/// Keep a token with probability sqrt(t/f) + t/f where f is the corpus
/// relative frequency, following the usual subsampling formula.
fn subsample_ids(
    ids: Vec<Vec<u32>>,
    vocab: &Vocabulary,
    threshold: f64,
    rng: &mut SplitMix64,
) -> Vec<Vec<u32>> {
    let total: u64 = (0..vocab.len() as u32).map(|i| vocab.corpus_freq(i)).sum();
    ids.into_iter()
        .map(|doc| {
            doc.into_iter()
                .filter(|&w| {
                    let f = vocab.corpus_freq(w) as f64 / total as f64;
                    let keep = (threshold / f).sqrt() + threshold / f;
                    rng.next_f64() < keep
                })
                .collect()
        })
        .collect()
}

fn skipgram_pairs(ids: &[Vec<u32>], window: usize) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for doc in ids {
        for (t, &center) in doc.iter().enumerate() {
            let lo = t.saturating_sub(window);
            let hi = (t + window).min(doc.len().saturating_sub(1));
            for j in lo..=hi {
                if j != t {
                    pairs.push((center, doc[j]));
                }
            }
        }
    }
    pairs
}

/// Average pair loss over a fixed evaluation batch with frozen negatives.
fn eval_loss(
    input: &[f64],
    output: &[f64],
    dim: usize,
    batch: &[(u32, u32, Vec<usize>)],
) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (center, pos, negs) in batch {
        let v = &input[*center as usize * dim..(*center as usize + 1) * dim];
        let u_pos = &output[*pos as usize * dim..(*pos as usize + 1) * dim];
        let neg_slices: Vec<&[f64]> = negs
            .iter()
            .map(|&n| &output[n * dim..(n + 1) * dim])
            .collect();
        let (loss, _, _, _) = ns_gradients(v, u_pos, &neg_slices);
        total += loss;
    }
    total / batch.len() as f64
}

fn make_eval_batch(
    pairs: &[(u32, u32)],
    noise: &[f64],
    negatives: usize,
    rng: &mut SplitMix64,
) -> Vec<(u32, u32, Vec<usize>)> {
    pairs
        .iter()
        .take(2000)
        .map(|&(c, p)| {
            let negs = (0..negatives)
                .map(|_| rng.next_weighted(noise))
                .filter(|&n| n != p as usize)
                .collect();
            (c, p, negs)
        })
        .collect()
}

/// Train skip-gram word embeddings with negative sampling.
pub fn train_skipgram(
    docs: &[PreprocessedDoc],
    vocab: &Vocabulary,
    config: SkipgramConfig,
) -> Result<EmbeddingModel, FeatureError> {
    config.validate().map_err(FeatureError::BadConfig)?;
    if docs.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    if vocab.len() < 2 {
        return Err(FeatureError::DegenerateVocabulary);
    }
    let mut rng = SplitMix64::new(config.seed);
    let mut ids = corpus_to_ids(docs, vocab);
    if let Some(threshold) = config.subsample {
        let mut sub_rng = rng.split();
        ids = subsample_ids(ids, vocab, threshold, &mut sub_rng);
    }
    let pairs = skipgram_pairs(&ids, config.window);
    if pairs.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }

    let dim = config.dim;
    let mut input = init_table(&mut rng, vocab.len(), dim);
    let mut output = vec![0.0; vocab.len() * dim];
    let noise = noise_table(vocab);

    let mut eval_rng = rng.split();
    let eval_batch = make_eval_batch(&pairs, &noise, config.negatives, &mut eval_rng);
    let mut epoch_losses = vec![eval_loss(&input, &output, dim, &eval_batch)];

    let total_steps = (pairs.len() * config.epochs) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for _epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut trainer = Trainer {
            dim,
            negatives: config.negatives,
            output: &mut output,
            noise: &noise,
            scratch: vec![0.0; dim],
        };
        for &k in &order {
            let (center, pos) = pairs[k];
            let lr = config.learning_rate
                * (1.0 - step as f64 / total_steps).max(1e-4);
            let v = &mut input[center as usize * dim..(center as usize + 1) * dim];
            trainer.step(v, pos as usize, lr, &mut rng);
            step += 1;
        }
        epoch_losses.push(eval_loss(&input, &output, dim, &eval_batch));
    }

    Ok(EmbeddingModel {
        vocab: vocab.clone(),
        config,
        input,
        output,
        epoch_losses,
    })
}

/// Train distributed-bag-of-words document vectors: each document vector
/// learns to predict the document's tokens against the shared output table.
/// With `co_train_words` set, skip-gram pairs are trained in the same pass,
/// which keeps word input vectors meaningful too.
pub fn train_pvdbow(
    docs: &[PreprocessedDoc],
    vocab: &Vocabulary,
    config: SkipgramConfig,
) -> Result<(Vec<DocEmbedding>, EmbeddingModel), FeatureError> {
    config.validate().map_err(FeatureError::BadConfig)?;
    if docs.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    if vocab.len() < 2 {
        return Err(FeatureError::DegenerateVocabulary);
    }
    let mut rng = SplitMix64::new(config.seed);
    let ids = corpus_to_ids(docs, vocab);

    let dim = config.dim;
    let mut input = init_table(&mut rng, vocab.len(), dim);
    let mut doc_table = init_table(&mut rng, docs.len(), dim);
    let mut output = vec![0.0; vocab.len() * dim];
    let noise = noise_table(vocab);

    let pairs = skipgram_pairs(&ids, config.window);
    let mut eval_rng = rng.split();
    let eval_batch = make_eval_batch(&pairs, &noise, config.negatives, &mut eval_rng);
    let mut epoch_losses = vec![eval_loss(&input, &output, dim, &eval_batch)];

    let tokens_total: usize = ids.iter().map(Vec::len).sum();
    let total_steps = (tokens_total.max(1) * config.epochs) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..docs.len()).collect();
    for _epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut trainer = Trainer {
            dim,
            negatives: config.negatives,
            output: &mut output,
            noise: &noise,
            scratch: vec![0.0; dim],
        };
        for &d in &order {
            let doc = &ids[d];
            for (t, &w) in doc.iter().enumerate() {
                let lr = config.learning_rate
                    * (1.0 - step as f64 / total_steps).max(1e-4);
                {
                    let dv = &mut doc_table[d * dim..(d + 1) * dim];
                    trainer.step(dv, w as usize, lr, &mut rng);
                }
                if config.co_train_words {
                    let lo = t.saturating_sub(config.window);
                    let hi = (t + config.window).min(doc.len() - 1);
                    for j in lo..=hi {
                        if j == t {
                            continue;
                        }
                        let v = &mut input[w as usize * dim..(w as usize + 1) * dim];
                        trainer.step(v, doc[j] as usize, lr, &mut rng);
                    }
                }
                step += 1;
            }
        }
        epoch_losses.push(eval_loss(&input, &output, dim, &eval_batch));
    }

    let doc_vectors = docs
        .iter()
        .enumerate()
        .map(|(d, doc)| DocEmbedding {
            source_id: doc.source_id.clone(),
            vector: doc_table[d * dim..(d + 1) * dim].to_vec(),
        })
        .collect();

    Ok((
        doc_vectors,
        EmbeddingModel {
            vocab: vocab.clone(),
            config,
            input,
            output,
            epoch_losses,
        },
    ))
}

/// Infer a vector for a new document: gradient steps on a fresh vector with
/// every model table frozen. An empty (or fully out-of-vocabulary) document
/// gets the zero vector.
pub fn infer_doc_vector(
    model: &EmbeddingModel,
    doc: &PreprocessedDoc,
    infer_epochs: usize,
) -> DocEmbedding {
    let dim = model.config.dim;
    let ids: Vec<u32> = doc
        .tokens
        .iter()
        .filter_map(|t| model.vocab.index_of(t))
        .collect();
    if ids.is_empty() {
        return DocEmbedding {
            source_id: doc.source_id.clone(),
            vector: vec![0.0; dim],
        };
    }
    // Fixed derivation from the model seed keeps inference repeatable.
    let mut rng = SplitMix64::new(model.config.seed ^ 0xD0C5_EED5_0000_0001);
    let mut vector: Vec<f64> = (0..dim)
        .map(|_| (rng.next_f64() - 0.5) / dim as f64)
        .collect();
    let noise = noise_table(&model.vocab);
    let total_steps = (ids.len() * infer_epochs.max(1)) as f64;
    let mut step = 0usize;
    let mut scratch = vec![0.0; dim];
    for _epoch in 0..infer_epochs {
        for &w in &ids {
            let lr = model.config.learning_rate * (1.0 - step as f64 / total_steps).max(1e-4);
            scratch.iter_mut().for_each(|g| *g = 0.0);
            let u_pos = model.output_vector(w);
            let s_pos = sigmoid(dot(&vector, u_pos));
            for (g, &uv) in scratch.iter_mut().zip(u_pos) {
                *g += (s_pos - 1.0) * uv;
            }
            for _ in 0..model.config.negatives {
                let neg = rng.next_weighted(&noise);
                if neg == w as usize {
                    continue;
                }
                let u = model.output_vector(neg as u32);
                let coeff = sigmoid(dot(&vector, u));
                for (g, &uv) in scratch.iter_mut().zip(u) {
                    *g += coeff * uv;
                }
            }
            for (v, &g) in vector.iter_mut().zip(&scratch) {
                *v -= lr * g;
            }
            step += 1;
        }
    }
    DocEmbedding {
        source_id: doc.source_id.clone(),
        vector,
    }
}
