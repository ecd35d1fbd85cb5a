//! Seeded synthetic corpora with ground-truth ledgers: planted topics,
//! planted transport modes with synonym vocabulary, geo placement,
//! timestamps and user activity. Every generator is deterministic given its
//! seed, and the ledger records the truth every downstream check compares
//! against. Templates are token lists with slots; statistical structure is
//! the goal, not linguistic realism.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoBox, GeoPoint, GeoTagKind, PlaceTag};
use crate::ingest::{EntityCounts, TweetRecord};
use crate::rng::SplitMix64;
use crate::textprep::localize_timestamp;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("bad spec: {0}")]
    BadSpec(String),
}

/// One planted topic: a term list with sampling weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTopicSpec {
    pub topic: usize,
    pub terms: Vec<String>,
    pub weights: Vec<f64>,
}

impl PlantedTopicSpec {
    pub fn uniform(topic: usize, terms: Vec<String>) -> Self {
        let w = 1.0 / terms.len().max(1) as f64;
        let weights = vec![w; terms.len()];
        PlantedTopicSpec {
            topic,
            terms,
            weights,
        }
    }
}

/// Disjoint topic vocabularies: topic t owns terms "t{t}w{0..n}".
pub fn disjoint_topic_specs(k: usize, terms_per_topic: usize) -> Vec<PlantedTopicSpec> {
    (0..k)
        .map(|t| {
            PlantedTopicSpec::uniform(
                t,
                (0..terms_per_topic).map(|w| format!("t{t}w{w}")).collect(),
            )
        })
        .collect()
}

/// Template slots: a literal token, the mode term, a negative-topic word,
/// or a draw from the shared filler pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Slot {
    Word(String),
    Term,
    NegWord,
    Filler,
    /// Draw from the shared travel-context pool.
    Context,
}

/// One planted transport mode. Core terms go into training docs; synonym
/// terms share the same contexts and can be reserved to a held-out split so
/// classifiers meet them only at test time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedModeSpec {
    pub mode: String,
    pub core_terms: Vec<String>,
    pub synonym_terms: Vec<String>,
    pub templates: Vec<Vec<Slot>>,
}

/// Non-travel documents: negative-topic word pools plus template shapes.
/// `filler_only_fraction` of negatives carry no topic word at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeSpec {
    pub topic_pools: Vec<Vec<String>>,
    pub templates: Vec<Vec<Slot>>,
    pub filler_templates: Vec<Vec<Slot>>,
    pub filler_only_fraction: f64,
}

/// Shared knobs for every generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusOptions {
    pub seed: u64,
    pub lang: String,
    pub id_prefix: String,
    /// Timestamps are uniform in [start_utc, start_utc + days * 86400).
    pub start_utc: i64,
    pub days: u32,
    pub utc_offset_minutes: i32,
    pub n_users: usize,
    /// Zipf exponent for user draws; None = uniform users.
    pub user_zipf: Option<f64>,
    /// Probability that a record carries each entity kind
    /// (hashtags, mentions, urls, media).
    pub entity_probs: [f64; 4],
    /// Shared pools referenced by Slot::Filler and Slot::Context.
    pub filler_pool: Vec<String>,
    pub context_pool: Vec<String>,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            seed: 1,
            lang: "en".into(),
            id_prefix: "synth".into(),
            start_utc: 1_488_326_400, // 2017-03-01T00:00:00Z
            days: 30,
            utc_offset_minutes: 0,
            n_users: 50,
            user_zipf: None,
            entity_probs: [0.3, 0.25, 0.15, 0.05],
            filler_pool: [
                "coffee", "music", "movie", "friend", "night", "game", "photo", "street",
                "house", "phone", "water", "food", "book", "party", "beach", "morning",
                "weather", "school", "money", "dream",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            context_pool: ["ride", "catch", "waiting", "station", "late", "commute"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

/// Which split a record was generated for when synonym holdout is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

/// Ground truth for one generated record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub id: String,
    pub topic: Option<usize>,
    /// Some(mode) for planted positives, None for negatives/topic docs.
    pub mode: Option<String>,
    pub split: Option<Split>,
    pub geotag: Option<GeoTagKind>,
    pub inside: Option<bool>,
    pub user_id: String,
    pub utc_ts: i64,
    pub local_ts: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthLedger {
    pub entries: Vec<LedgerEntry>,
    /// Tweets carrying >= 1 of each entity kind
    /// (hashtags, mentions, urls, media).
    pub entity_tweets: [u64; 4],
}

impl SynthLedger {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(raw)
    }

    pub fn by_id(&self) -> BTreeMap<&str, &LedgerEntry> {
        self.entries.iter().map(|e| (e.id.as_str(), e)).collect()
    }
}

struct RecordFactory<'a> {
    opts: &'a CorpusOptions,
    user_cumulative: Vec<f64>,
    counter: usize,
}

impl<'a> RecordFactory<'a> {
    fn new(opts: &'a CorpusOptions) -> Self {
        let user_cumulative = match opts.user_zipf {
            Some(s) => {
                let mut cum = Vec::with_capacity(opts.n_users);
                let mut total = 0.0;
                for rank in 1..=opts.n_users {
                    total += 1.0 / (rank as f64).powf(s);
                    cum.push(total);
                }
                cum
            }
            None => (1..=opts.n_users).map(|i| i as f64).collect(),
        };
        RecordFactory {
            opts,
            user_cumulative,
            counter: 0,
        }
    }

    fn next(
        &mut self,
        text: String,
        rng: &mut SplitMix64,
        ledger: &mut SynthLedger,
        topic: Option<usize>,
        mode: Option<String>,
        split: Option<Split>,
    ) -> TweetRecord {
        let id = format!("{}-{:06}", self.opts.id_prefix, self.counter);
        self.counter += 1;
        let span = self.opts.days.max(1) as i64 * 86_400;
        let utc_ts = self.opts.start_utc + (rng.next_f64() * span as f64) as i64;
        let user_id = format!("u{:04}", rng.next_weighted(&self.user_cumulative));
        let entities = EntityCounts {
            hashtags: (rng.next_f64() < self.opts.entity_probs[0]) as u32,
            user_mentions: (rng.next_f64() < self.opts.entity_probs[1]) as u32,
            urls: (rng.next_f64() < self.opts.entity_probs[2]) as u32,
            media: (rng.next_f64() < self.opts.entity_probs[3]) as u32,
        };
        for (slot, present) in ledger.entity_tweets.iter_mut().zip([
            entities.hashtags > 0,
            entities.user_mentions > 0,
            entities.urls > 0,
            entities.media > 0,
        ]) {
            if present {
                *slot += 1;
            }
        }
        ledger.entries.push(LedgerEntry {
            id: id.clone(),
            topic,
            mode: mode.clone(),
            split,
            geotag: None,
            inside: None,
            user_id: user_id.clone(),
            utc_ts,
            local_ts: localize_timestamp(utc_ts, self.opts.utc_offset_minutes),
        });
        TweetRecord {
            id,
            text,
            created_at_utc: utc_ts,
            lang: self.opts.lang.clone(),
            coordinate: None,
            place: None,
            entities,
            user_id,
        }
    }
}

fn draw<'a>(pool: &'a [String], rng: &mut SplitMix64) -> &'a str {
    &pool[rng.next_below(pool.len())]
}

fn realize_template(
    template: &[Slot],
    term: Option<&str>,
    neg_pool: Option<&[String]>,
    opts: &CorpusOptions,
    rng: &mut SplitMix64,
) -> String {
    let mut tokens = Vec::with_capacity(template.len());
    for slot in template {
        match slot {
            Slot::Word(w) => tokens.push(w.clone()),
            Slot::Term => tokens.push(term.expect("template with Term needs a term").to_string()),
            Slot::NegWord => {
                let pool = neg_pool.expect("template with NegWord needs a pool");
                tokens.push(draw(pool, rng).to_string());
            }
            Slot::Filler => tokens.push(draw(&opts.filler_pool, rng).to_string()),
            Slot::Context => tokens.push(draw(&opts.context_pool, rng).to_string()),
        }
    }
    tokens.join(" ")
}

/// Sample a topic corpus: each document draws one topic (or a Dirichlet
/// mixture when `mixture_alpha` is set) and then `doc_len` tokens from the
/// topic's term distribution.
pub fn generate_topic_corpus(
    specs: &[PlantedTopicSpec],
    num_docs: usize,
    doc_len: usize,
    mixture_alpha: Option<f64>,
    opts: &CorpusOptions,
) -> Result<(Vec<TweetRecord>, SynthLedger), SynthError> {
    if specs.is_empty() {
        return Err(SynthError::BadSpec("no topic specs".into()));
    }
    for spec in specs {
        if spec.terms.is_empty() || spec.terms.len() != spec.weights.len() {
            return Err(SynthError::BadSpec(format!(
                "topic {} has malformed terms/weights",
                spec.topic
            )));
        }
        if spec.weights.iter().any(|&w| w <= 0.0) {
            return Err(SynthError::BadSpec(format!(
                "topic {} has non-positive weights",
                spec.topic
            )));
        }
    }
    let cumulatives: Vec<Vec<f64>> = specs
        .iter()
        .map(|s| {
            let mut total = 0.0;
            s.weights
                .iter()
                .map(|w| {
                    total += w;
                    total
                })
                .collect()
        })
        .collect();

    let mut rng = SplitMix64::new(opts.seed);
    let mut ledger = SynthLedger::default();
    let mut factory = RecordFactory::new(opts);
    let mut records = Vec::with_capacity(num_docs);

    for _ in 0..num_docs {
        // Dominant topic is the ledger truth; under a mixture it is the
        // mixture's argmax component.
        let (dominant, token_topic): (usize, Box<dyn FnMut(&mut SplitMix64) -> usize>) =
            match mixture_alpha {
                None => {
                    let t = rng.next_below(specs.len());
                    (t, Box::new(move |_| t))
                }
                Some(alpha) => {
                    let theta = sample_dirichlet(specs.len(), alpha, &mut rng);
                    let mut cum = Vec::with_capacity(theta.len());
                    let mut total = 0.0;
                    for w in &theta {
                        total += w;
                        cum.push(total);
                    }
                    let dominant = crate::topics::dominant_topic(&theta);
                    (dominant, Box::new(move |rng| rng.next_weighted(&cum)))
                }
            };
        let mut token_topic = token_topic;
        let tokens: Vec<&str> = (0..doc_len)
            .map(|_| {
                let t = token_topic(&mut rng);
                let w = rng.next_weighted(&cumulatives[t]);
                specs[t].terms[w].as_str()
            })
            .collect();
        let text = tokens.join(" ");
        let record = factory.next(
            text,
            &mut rng,
            &mut ledger,
            Some(specs[dominant].topic),
            None,
            None,
        );
        records.push(record);
    }
    Ok((records, ledger))
}

fn sample_dirichlet(k: usize, alpha: f64, rng: &mut SplitMix64) -> Vec<f64> {
    // Gamma(alpha, 1) by Marsaglia-Tsang for alpha >= 1, boosted for
    // alpha < 1 by the power trick.
    let mut draws: Vec<f64> = (0..k).map(|_| sample_gamma(alpha, rng)).collect();
    let total: f64 = draws.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / k as f64; k];
    }
    for d in &mut draws {
        *d /= total;
    }
    draws
}

fn sample_gamma(alpha: f64, rng: &mut SplitMix64) -> f64 {
    if alpha < 1.0 {
        let u = rng.next_f64().max(f64::MIN_POSITIVE);
        return sample_gamma(alpha + 1.0, rng) * u.powf(1.0 / alpha);
    }
    let d = alpha - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = sample_standard_normal(rng);
        let v = (1.0 + c * x).powi(3);
        if v <= 0.0 {
            continue;
        }
        let u = rng.next_f64().max(f64::MIN_POSITIVE);
        if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
            return d * v;
        }
    }
}

fn sample_standard_normal(rng: &mut SplitMix64) -> f64 {
    // Box-Muller.
    let u1 = rng.next_f64().max(f64::MIN_POSITIVE);
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Knuth's Poisson sampler; fine for the small rates used in fixtures.
pub fn sample_poisson(lambda: f64, rng: &mut SplitMix64) -> u64 {
    let l = (-lambda).exp();
    let mut k = 0u64;
    let mut p = 1.0;
    loop {
        p *= rng.next_f64();
        if p <= l {
            return k;
        }
        k += 1;
    }
}

/// Per-mode training counts, per-mode synonym test counts (used when the
/// holdout flag is on), and the negative pool size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationCounts {
    pub train_per_mode: BTreeMap<String, usize>,
    pub synonym_test_per_mode: BTreeMap<String, usize>,
    pub negatives: usize,
}

/// Generate a travel-classification corpus. With `holdout_synonyms`,
/// training-split positives realize only core terms and the test split
/// realizes only synonym terms; otherwise every positive draws from the
/// combined term pool.
pub fn generate_classification_corpus(
    mode_specs: &[PlantedModeSpec],
    negative_spec: &NegativeSpec,
    counts: &ClassificationCounts,
    holdout_synonyms: bool,
    opts: &CorpusOptions,
) -> Result<(Vec<TweetRecord>, SynthLedger), SynthError> {
    if mode_specs.is_empty() {
        return Err(SynthError::BadSpec("no mode specs".into()));
    }
    for spec in mode_specs {
        if spec.core_terms.is_empty() || spec.templates.is_empty() {
            return Err(SynthError::BadSpec(format!(
                "mode {} needs core terms and templates",
                spec.mode
            )));
        }
        if holdout_synonyms
            && spec.synonym_terms.is_empty()
            && counts
                .synonym_test_per_mode
                .get(&spec.mode)
                .copied()
                .unwrap_or(0)
                > 0
        {
            return Err(SynthError::BadSpec(format!(
                "mode {} has no synonyms to hold out",
                spec.mode
            )));
        }
    }

    let mut rng = SplitMix64::new(opts.seed);
    let mut ledger = SynthLedger::default();
    let mut factory = RecordFactory::new(opts);
    let mut records = Vec::new();

    for spec in mode_specs {
        let train_n = counts.train_per_mode.get(&spec.mode).copied().unwrap_or(0);
        let train_pool: Vec<String> = if holdout_synonyms {
            spec.core_terms.clone()
        } else {
            spec.core_terms
                .iter()
                .chain(&spec.synonym_terms)
                .cloned()
                .collect()
        };
        for _ in 0..train_n {
            let term = draw(&train_pool, &mut rng).to_string();
            let template = &spec.templates[rng.next_below(spec.templates.len())];
            let text = realize_template(template, Some(&term), None, opts, &mut rng);
            records.push(factory.next(
                text,
                &mut rng,
                &mut ledger,
                None,
                Some(spec.mode.clone()),
                Some(Split::Train),
            ));
        }
        if holdout_synonyms {
            let test_n = counts
                .synonym_test_per_mode
                .get(&spec.mode)
                .copied()
                .unwrap_or(0);
            for _ in 0..test_n {
                let term = draw(&spec.synonym_terms, &mut rng).to_string();
                let template = &spec.templates[rng.next_below(spec.templates.len())];
                let text = realize_template(template, Some(&term), None, opts, &mut rng);
                records.push(factory.next(
                    text,
                    &mut rng,
                    &mut ledger,
                    None,
                    Some(spec.mode.clone()),
                    Some(Split::Test),
                ));
            }
        }
    }

    for _ in 0..counts.negatives {
        let filler_only = rng.next_f64() < negative_spec.filler_only_fraction;
        let text = if filler_only {
            let template =
                &negative_spec.filler_templates[rng.next_below(negative_spec.filler_templates.len())];
            realize_template(template, None, None, opts, &mut rng)
        } else {
            let pool = &negative_spec.topic_pools[rng.next_below(negative_spec.topic_pools.len())];
            let template = &negative_spec.templates[rng.next_below(negative_spec.templates.len())];
            realize_template(template, None, Some(pool), opts, &mut rng)
        };
        records.push(factory.next(text, &mut rng, &mut ledger, None, None, Some(Split::Train)));
    }

    Ok((records, ledger))
}

/// The bundled six-mode travel corpus shape used by fixtures: core/synonym
/// term pairs sharing contexts, plus football/politics/leisure negatives.
pub fn default_travel_spec() -> (Vec<PlantedModeSpec>, NegativeSpec) {
    use Slot::{Context, Filler, NegWord, Term};
    let positive_templates = vec![vec![
        Filler, Filler, Context, Term, Context, Filler, Filler,
    ]];
    let modes = [
        ("bike", "bike", "bicycle"),
        ("bus", "bus", "busao"),
        ("car", "car", "carro"),
        ("taxi", "taxi", "uber"),
        ("train", "train", "metro"),
        ("walk", "walk", "stroll"),
    ];
    let mode_specs = modes
        .iter()
        .map(|(mode, core, synonym)| PlantedModeSpec {
            mode: mode.to_string(),
            core_terms: vec![core.to_string()],
            synonym_terms: vec![synonym.to_string()],
            templates: positive_templates.clone(),
        })
        .collect();

    // Negative-topic words sit at distance >= 3 from the context slots so
    // a window-2 skip-gram never pairs them.
    let negative = NegativeSpec {
        topic_pools: vec![
            ["goal", "match", "team", "player"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            ["vote", "election", "mayor", "debate"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            ["show", "concert", "series", "episode"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ],
        templates: vec![vec![
            Context, Filler, Filler, NegWord, Filler, Filler, Context,
        ]],
        filler_templates: vec![vec![
            Context, Filler, Filler, Filler, Filler, Filler, Context,
        ]],
        filler_only_fraction: 0.3,
    };
    (mode_specs, negative)
}

/// Attach geo fields: `inside_fraction` of records satisfy the city filter,
/// the rest are placed to fail it under every place-matching mode (or carry
/// no geo info at all, per `untagged_fraction` of the outside share).
/// `kind_mix` gives the precise/degenerate/variable proportions.
pub fn generate_geo(
    records: &mut [TweetRecord],
    ledger: &mut SynthLedger,
    city: &GeoBox,
    inside_fraction: f64,
    kind_mix: (f64, f64, f64),
    untagged_fraction: f64,
    seed: u64,
) -> Result<(), SynthError> {
    let (p_precise, p_degenerate, p_variable) = kind_mix;
    let total = p_precise + p_degenerate + p_variable;
    if total <= 0.0 {
        return Err(SynthError::BadSpec("kind mix sums to zero".into()));
    }
    let kind_cum = [p_precise, p_precise + p_degenerate, total];
    let mut rng = SplitMix64::new(seed);
    let mut by_id: BTreeMap<String, usize> = BTreeMap::new();
    for (i, e) in ledger.entries.iter().enumerate() {
        by_id.insert(e.id.clone(), i);
    }

    let lat_span = city.ne().lat() - city.sw().lat();
    let lon_span = city.ne().lon() - city.sw().lon();

    for record in records.iter_mut() {
        let inside = rng.next_f64() < inside_fraction;
        let untagged = !inside && rng.next_f64() < untagged_fraction;
        let kind = if untagged {
            GeoTagKind::Untagged
        } else {
            match rng.next_weighted(&kind_cum) {
                0 => GeoTagKind::PreciseCoordinate,
                1 => GeoTagKind::DegeneratePlaceBox,
                _ => GeoTagKind::VariablePlaceBox,
            }
        };

        record.coordinate = None;
        record.place = None;
        match kind {
            GeoTagKind::Untagged => {}
            GeoTagKind::PreciseCoordinate => {
                let p = if inside {
                    point_inside(city, &mut rng)
                } else {
                    point_outside(city, &mut rng)
                };
                record.coordinate = Some(p);
            }
            GeoTagKind::DegeneratePlaceBox | GeoTagKind::VariablePlaceBox => {
                let degenerate = kind == GeoTagKind::DegeneratePlaceBox;
                let bbox = if inside {
                    box_inside(city, degenerate, &mut rng)
                } else {
                    box_outside(city, degenerate, &mut rng)
                };
                record.place = Some(PlaceTag {
                    name: format!("place-{}", record.id),
                    bbox,
                });
            }
        }

        let entry = &mut ledger.entries[*by_id
            .get(&record.id)
            .ok_or_else(|| SynthError::BadSpec(format!("record {} missing from ledger", record.id)))?];
        entry.geotag = Some(kind);
        entry.inside = Some(inside && kind != GeoTagKind::Untagged);
    }
    let _ = (lat_span, lon_span);
    Ok(())
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn point_inside(city: &GeoBox, rng: &mut SplitMix64) -> GeoPoint {
    // Stay strictly interior so float noise cannot leak across the edge.
    let t_lat = 0.05 + 0.9 * rng.next_f64();
    let t_lon = 0.05 + 0.9 * rng.next_f64();
    GeoPoint::new(
        lerp(city.sw().lat(), city.ne().lat(), t_lat),
        lerp(city.sw().lon(), city.ne().lon(), t_lon),
    )
    .expect("interior point is valid")
}

fn point_outside(city: &GeoBox, rng: &mut SplitMix64) -> GeoPoint {
    // Offset east or west of the box, wherever there is room.
    let span = (city.ne().lon() - city.sw().lon()).max(0.1);
    let east_room = city.ne().lon() + 2.0 * span <= 180.0;
    let go_east = if east_room { rng.next_f64() < 0.5 } else { false };
    let west_room = city.sw().lon() - 2.0 * span >= -180.0;
    let lon = if go_east || !west_room {
        city.ne().lon() + span * (0.5 + rng.next_f64())
    } else {
        city.sw().lon() - span * (0.5 + rng.next_f64())
    };
    GeoPoint::new(
        lerp(city.sw().lat(), city.ne().lat(), rng.next_f64()),
        lon.clamp(-180.0, 180.0),
    )
    .expect("outside point is valid")
}

fn box_inside(city: &GeoBox, degenerate: bool, rng: &mut SplitMix64) -> GeoBox {
    if degenerate {
        let p = point_inside(city, rng);
        return GeoBox::new(p, p).expect("degenerate box");
    }
    let lat_a = 0.05 + 0.9 * rng.next_f64();
    let lat_b = 0.05 + 0.9 * rng.next_f64();
    let lon_a = 0.05 + 0.9 * rng.next_f64();
    let lon_b = 0.05 + 0.9 * rng.next_f64();
    GeoBox::from_corners(
        lerp(city.sw().lat(), city.ne().lat(), lat_a.min(lat_b)),
        lerp(city.sw().lon(), city.ne().lon(), lon_a.min(lon_b)),
        lerp(city.sw().lat(), city.ne().lat(), lat_a.max(lat_b)),
        lerp(city.sw().lon(), city.ne().lon(), lon_a.max(lon_b)),
    )
    .expect("interior box is valid")
}

fn box_outside(city: &GeoBox, degenerate: bool, rng: &mut SplitMix64) -> GeoBox {
    // Fully disjoint from the city box, so every matching mode rejects it.
    let anchor = point_outside(city, rng);
    if degenerate {
        return GeoBox::new(anchor, anchor).expect("degenerate box");
    }
    let lat_extent = 0.01 + 0.05 * rng.next_f64();
    let lon_extent = 0.01 + 0.05 * rng.next_f64();
    let ne_lat = (anchor.lat() + lat_extent).min(90.0);
    let ne_lon = (anchor.lon() + lon_extent).min(180.0);
    // The anchor sits outside the city's longitude interval with margin, so
    // extending the box by at most 0.06 degrees cannot reach back inside.
    GeoBox::from_corners(anchor.lat(), anchor.lon(), ne_lat, ne_lon).expect("outside box is valid")
}

/// Serialize records to the ingest NDJSON wire schema.
pub fn to_ndjson(records: &[TweetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&crate::ingest::to_wire_json(r));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{city_filter, geotag_breakdown, PlaceMode};

    fn opts(seed: u64) -> CorpusOptions {
        CorpusOptions {
            seed,
            ..CorpusOptions::default()
        }
    }

    #[test]
    fn one_topic_one_term_repeats() {
        let specs = vec![PlantedTopicSpec::uniform(0, vec!["word".into()])];
        let (records, ledger) = generate_topic_corpus(&specs, 5, 4, None, &opts(1)).unwrap();
        for r in &records {
            assert_eq!(r.text, "word word word word");
        }
        assert_eq!(ledger.entries.len(), 5);
        assert!(ledger.entries.iter().all(|e| e.topic == Some(0)));
    }

    #[test]
    fn zero_docs_is_empty() {
        let specs = disjoint_topic_specs(3, 5);
        let (records, ledger) = generate_topic_corpus(&specs, 0, 10, None, &opts(1)).unwrap();
        assert!(records.is_empty());
        assert!(ledger.entries.is_empty());
    }

    #[test]
    fn topic_counts_within_multinomial_bound() {
        let specs = disjoint_topic_specs(5, 20);
        let (_, ledger) = generate_topic_corpus(&specs, 500, 15, None, &opts(7)).unwrap();
        let mut counts = [0usize; 5];
        for e in &ledger.entries {
            counts[e.topic.unwrap()] += 1;
        }
        // Uniform multinomial: mean 100, sigma = sqrt(500 * 0.2 * 0.8) ~ 8.9.
        let sigma = (500.0f64 * 0.2 * 0.8).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - 100.0).abs() <= 3.0 * sigma,
                "topic count {c} outside 3 sigma"
            );
        }
    }

    #[test]
    fn deterministic_ndjson() {
        let specs = disjoint_topic_specs(3, 8);
        let (r1, l1) = generate_topic_corpus(&specs, 50, 10, Some(0.2), &opts(9)).unwrap();
        let (r2, l2) = generate_topic_corpus(&specs, 50, 10, Some(0.2), &opts(9)).unwrap();
        assert_eq!(to_ndjson(&r1), to_ndjson(&r2));
        assert_eq!(l1, l2);
        let (r3, _) = generate_topic_corpus(&specs, 50, 10, Some(0.2), &opts(10)).unwrap();
        assert_ne!(to_ndjson(&r1), to_ndjson(&r3));
    }

    #[test]
    fn ledger_covers_every_record_once() {
        let (modes, negative) = default_travel_spec();
        let counts = ClassificationCounts {
            train_per_mode: modes.iter().map(|m| (m.mode.clone(), 10)).collect(),
            synonym_test_per_mode: modes.iter().map(|m| (m.mode.clone(), 5)).collect(),
            negatives: 30,
        };
        let (records, ledger) =
            generate_classification_corpus(&modes, &negative, &counts, true, &opts(3)).unwrap();
        assert_eq!(records.len(), 6 * 15 + 30);
        assert_eq!(ledger.entries.len(), records.len());
        let ids: std::collections::BTreeSet<&str> =
            ledger.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids.len(), records.len());
        for r in &records {
            assert!(ids.contains(r.id.as_str()));
        }
    }

    #[test]
    fn mode_counts_honored_exactly() {
        let (modes, negative) = default_travel_spec();
        let mut train: BTreeMap<String, usize> = BTreeMap::new();
        for (i, m) in modes.iter().enumerate() {
            train.insert(m.mode.clone(), 5 + i);
        }
        let counts = ClassificationCounts {
            train_per_mode: train.clone(),
            synonym_test_per_mode: BTreeMap::new(),
            negatives: 12,
        };
        let (_, ledger) =
            generate_classification_corpus(&modes, &negative, &counts, false, &opts(4)).unwrap();
        for (mode, want) in &train {
            let got = ledger
                .entries
                .iter()
                .filter(|e| e.mode.as_deref() == Some(mode))
                .count();
            assert_eq!(got, *want, "mode {mode}");
        }
        let negs = ledger.entries.iter().filter(|e| e.mode.is_none()).count();
        assert_eq!(negs, 12);
    }

    #[test]
    fn holdout_reserves_synonyms() {
        let (modes, negative) = default_travel_spec();
        let counts = ClassificationCounts {
            train_per_mode: modes.iter().map(|m| (m.mode.clone(), 20)).collect(),
            synonym_test_per_mode: modes.iter().map(|m| (m.mode.clone(), 10)).collect(),
            negatives: 20,
        };
        let (records, ledger) =
            generate_classification_corpus(&modes, &negative, &counts, true, &opts(5)).unwrap();
        let by_id = ledger.by_id();
        let synonyms: Vec<&str> = modes.iter().flat_map(|m| &m.synonym_terms).map(String::as_str).collect();
        for r in &records {
            let entry = by_id[r.id.as_str()];
            if entry.split == Some(Split::Train) {
                for syn in &synonyms {
                    assert!(
                        !r.text.split(' ').any(|t| t == *syn),
                        "training text {:?} leaks synonym {syn}",
                        r.text
                    );
                }
            }
        }
        // Every test-split positive realizes a synonym term.
        for r in &records {
            let entry = by_id[r.id.as_str()];
            if entry.split == Some(Split::Test) {
                assert!(r.text.split(' ').any(|t| synonyms.contains(&t)));
            }
        }
    }

    #[test]
    fn geo_all_inside_accepts_everything() {
        let city = GeoBox::from_corners(-23.08302, -43.795449, -22.739823, -43.087707).unwrap();
        let specs = disjoint_topic_specs(2, 5);
        let (mut records, mut ledger) =
            generate_topic_corpus(&specs, 80, 8, None, &opts(6)).unwrap();
        generate_geo(&mut records, &mut ledger, &city, 1.0, (0.3, 0.1, 0.6), 0.0, 11).unwrap();
        for (r, e) in records.iter().zip(&ledger.entries) {
            assert_eq!(e.inside, Some(true));
            for mode in [PlaceMode::Containment, PlaceMode::CenterInside, PlaceMode::Overlap] {
                assert!(city_filter(r, &city, mode).accepted, "record {}", r.id);
            }
        }
    }

    #[test]
    fn geo_all_outside_rejects_everything() {
        let city = GeoBox::from_corners(-23.08302, -43.795449, -22.739823, -43.087707).unwrap();
        let specs = disjoint_topic_specs(2, 5);
        let (mut records, mut ledger) =
            generate_topic_corpus(&specs, 80, 8, None, &opts(8)).unwrap();
        generate_geo(&mut records, &mut ledger, &city, 0.0, (0.3, 0.1, 0.6), 0.2, 12).unwrap();
        for (r, e) in records.iter().zip(&ledger.entries) {
            assert_eq!(e.inside, Some(false));
            for mode in [PlaceMode::Containment, PlaceMode::CenterInside, PlaceMode::Overlap] {
                assert!(!city_filter(r, &city, mode).accepted, "record {}", r.id);
            }
        }
    }

    #[test]
    fn geo_breakdown_matches_ledger() {
        let city = GeoBox::from_corners(-23.08302, -43.795449, -22.739823, -43.087707).unwrap();
        let specs = disjoint_topic_specs(2, 5);
        let (mut records, mut ledger) =
            generate_topic_corpus(&specs, 400, 6, None, &opts(13)).unwrap();
        generate_geo(&mut records, &mut ledger, &city, 0.7, (0.2, 0.01, 0.79), 0.1, 14).unwrap();
        let breakdown = geotag_breakdown(&records);
        let ledger_count = |kind: GeoTagKind| {
            ledger
                .entries
                .iter()
                .filter(|e| e.geotag == Some(kind))
                .count()
        };
        assert_eq!(breakdown.rows[0].tweets, ledger_count(GeoTagKind::PreciseCoordinate));
        assert_eq!(breakdown.rows[1].tweets, ledger_count(GeoTagKind::DegeneratePlaceBox));
        assert_eq!(breakdown.rows[2].tweets, ledger_count(GeoTagKind::VariablePlaceBox));
        assert_eq!(breakdown.untagged, ledger_count(GeoTagKind::Untagged));
    }

    #[test]
    fn ledger_json_round_trip() {
        let specs = disjoint_topic_specs(2, 4);
        let (_, ledger) = generate_topic_corpus(&specs, 10, 5, None, &opts(2)).unwrap();
        let round = SynthLedger::from_json(&ledger.to_json()).unwrap();
        assert_eq!(round, ledger);
    }

    #[test]
    fn records_parse_back_from_wire() {
        let (modes, negative) = default_travel_spec();
        let counts = ClassificationCounts {
            train_per_mode: modes.iter().map(|m| (m.mode.clone(), 3)).collect(),
            synonym_test_per_mode: BTreeMap::new(),
            negatives: 5,
        };
        let (records, _) =
            generate_classification_corpus(&modes, &negative, &counts, false, &opts(15)).unwrap();
        for r in &records {
            let parsed = crate::ingest::parse_record(&crate::ingest::to_wire_json(r)).unwrap();
            assert_eq!(&parsed, r);
        }
    }
}
