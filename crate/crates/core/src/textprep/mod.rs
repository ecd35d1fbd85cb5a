//! Text preprocessing: the tokenizer plus seven composable cleanup steps,
//! two shipped pipeline presets (topic modelling and travel classification),
//! and timestamp localization.
//!
//! Steps listed before `tokenize` in a pipeline run on the raw string;
//! steps after it run on the token list. Each step is idempotent.

pub mod tokenize;

use std::collections::HashSet;

use chrono::{DateTime, Datelike, NaiveDate, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tokenize::{tokenize, Token, TokenKind};

const STOPWORDS_EN: &str = include_str!("../../data/stopwords_en.txt");
const STOPWORDS_PT: &str = include_str!("../../data/stopwords_pt.txt");
const SHORTWORDS: &str = include_str!("../../data/shortwords.txt");
const PLURAL_EXCEPTIONS_EN: &str = include_str!("../../data/plural_exceptions_en.txt");
const PLURAL_EXCEPTIONS_PT: &str = include_str!("../../data/plural_exceptions_pt.txt");

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("unknown step: {0}")]
    UnknownStep(String),
    #[error("pipeline must contain the tokenize step exactly once")]
    MissingTokenize,
    #[error("step {0:?} requires tokens and must come after tokenize")]
    StepBeforeTokenize(Step),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lang {
    En,
    Pt,
}

impl std::str::FromStr for Lang {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "en" => Ok(Lang::En),
            "pt" => Ok(Lang::Pt),
            other => Err(format!("unknown language {other:?} (expected en|pt)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Lowercase,
    SqueezeRepeats,
    Tokenize,
    StripPunctuation,
    StripEntitiesAndDigits,
    RemoveStopwordsAndShort,
    LemmatizePlurals,
}

impl Step {
    /// True when the step only makes sense over a token list.
    fn needs_tokens(&self) -> bool {
        matches!(
            self,
            Step::StripPunctuation
                | Step::StripEntitiesAndDigits
                | Step::RemoveStopwordsAndShort
                | Step::LemmatizePlurals
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Step::Lowercase => "lowercase",
            Step::SqueezeRepeats => "squeeze-repeats",
            Step::Tokenize => "tokenize",
            Step::StripPunctuation => "strip-punctuation",
            Step::StripEntitiesAndDigits => "strip-entities-and-digits",
            Step::RemoveStopwordsAndShort => "remove-stopwords-and-short",
            Step::LemmatizePlurals => "lemmatize-plurals",
        }
    }
}

impl std::str::FromStr for Step {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, PipelineError> {
        match s {
            "lowercase" => Ok(Step::Lowercase),
            "squeeze-repeats" => Ok(Step::SqueezeRepeats),
            "tokenize" => Ok(Step::Tokenize),
            "strip-punctuation" => Ok(Step::StripPunctuation),
            "strip-entities-and-digits" => Ok(Step::StripEntitiesAndDigits),
            "remove-stopwords-and-short" => Ok(Step::RemoveStopwordsAndShort),
            "lemmatize-plurals" => Ok(Step::LemmatizePlurals),
            other => Err(PipelineError::UnknownStep(other.to_string())),
        }
    }
}

/// An ordered, validated pipeline with its word lists.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    steps: Vec<Step>,
    stopwords: HashSet<String>,
    shortwords: HashSet<String>,
    min_token_len: usize,
    lang: Lang,
}

fn load_wordlist(raw: &str) -> HashSet<String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// Parse a word-list file body: one token per line, `#` comments.
pub fn parse_wordlist(raw: &str) -> HashSet<String> {
    load_wordlist(raw)
}

pub fn bundled_stopwords(lang: Lang) -> HashSet<String> {
    match lang {
        Lang::En => load_wordlist(STOPWORDS_EN),
        Lang::Pt => load_wordlist(STOPWORDS_PT),
    }
}

pub fn bundled_shortwords() -> HashSet<String> {
    load_wordlist(SHORTWORDS)
}

fn plural_exceptions(lang: Lang) -> &'static HashSet<String> {
    use std::sync::OnceLock;
    static EN: OnceLock<HashSet<String>> = OnceLock::new();
    static PT: OnceLock<HashSet<String>> = OnceLock::new();
    match lang {
        Lang::En => EN.get_or_init(|| load_wordlist(PLURAL_EXCEPTIONS_EN)),
        Lang::Pt => PT.get_or_init(|| load_wordlist(PLURAL_EXCEPTIONS_PT)),
    }
}

impl PipelineConfig {
    pub fn new(
        steps: Vec<Step>,
        stopwords: HashSet<String>,
        shortwords: HashSet<String>,
        min_token_len: usize,
        lang: Lang,
    ) -> Result<Self, PipelineError> {
        let tokenize_count = steps.iter().filter(|s| **s == Step::Tokenize).count();
        if tokenize_count != 1 {
            return Err(PipelineError::MissingTokenize);
        }
        let tokenize_at = steps.iter().position(|s| *s == Step::Tokenize).unwrap();
        for (i, step) in steps.iter().enumerate() {
            if step.needs_tokens() && i < tokenize_at {
                return Err(PipelineError::StepBeforeTokenize(*step));
            }
        }
        Ok(PipelineConfig {
            steps,
            stopwords,
            shortwords,
            min_token_len,
            lang,
        })
    }

    pub fn from_step_names(
        names: &[&str],
        stopwords: HashSet<String>,
        shortwords: HashSet<String>,
        min_token_len: usize,
        lang: Lang,
    ) -> Result<Self, PipelineError> {
        let steps = names
            .iter()
            .map(|n| n.parse())
            .collect::<Result<Vec<Step>, _>>()?;
        PipelineConfig::new(steps, stopwords, shortwords, min_token_len, lang)
    }

    /// Preset used by the topic-modelling pipeline.
    pub fn topic_preset(lang: Lang) -> Self {
        PipelineConfig::new(
            vec![
                Step::Lowercase,
                Step::SqueezeRepeats,
                Step::Tokenize,
                Step::StripPunctuation,
                Step::StripEntitiesAndDigits,
                Step::RemoveStopwordsAndShort,
                Step::LemmatizePlurals,
            ],
            bundled_stopwords(lang),
            bundled_shortwords(),
            2,
            lang,
        )
        .expect("topic preset is valid")
    }

    /// Preset used by the travel-related classification pipeline.
    pub fn travel_preset(lang: Lang) -> Self {
        PipelineConfig::new(
            vec![
                Step::Lowercase,
                Step::SqueezeRepeats,
                Step::Tokenize,
                Step::StripEntitiesAndDigits,
                Step::RemoveStopwordsAndShort,
            ],
            bundled_stopwords(lang),
            bundled_shortwords(),
            2,
            lang,
        )
        .expect("travel preset is valid")
    }

    pub fn preset(name: &str, lang: Lang) -> Result<Self, PipelineError> {
        match name {
            "topic" => Ok(Self::topic_preset(lang)),
            "travel" => Ok(Self::travel_preset(lang)),
            other => Err(PipelineError::UnknownStep(format!("preset {other}"))),
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn lang(&self) -> Lang {
        self.lang
    }
}

/// Preprocessed document: the retained token surfaces plus the source id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessedDoc {
    pub source_id: String,
    pub tokens: Vec<String>,
}

impl PreprocessedDoc {
    pub fn new(source_id: impl Into<String>, tokens: Vec<String>) -> Self {
        PreprocessedDoc {
            source_id: source_id.into(),
            tokens,
        }
    }
}

/// Unicode lowercasing of Word, Hashtag and Mention surfaces; URLs and
/// everything else untouched.
pub fn lowercase(tokens: Vec<Token>) -> Vec<Token> {
    tokens
        .into_iter()
        .map(|t| match t.kind {
            TokenKind::Word | TokenKind::Hashtag | TokenKind::Mention => Token {
                surface: t.surface.to_lowercase(),
                kind: t.kind,
            },
            _ => t,
        })
        .collect()
}

fn squeeze_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut run_char = None;
    let mut run_len = 0usize;
    for c in s.chars() {
        if Some(c) == run_char {
            run_len += 1;
        } else {
            run_char = Some(c);
            run_len = 1;
        }
        if run_len <= 3 {
            out.push(c);
        }
    }
    out
}

/// Truncate any run of the same character longer than three to exactly
/// three ("loooool" becomes "loool"). URLs are left alone.
pub fn squeeze_repeats(tokens: Vec<Token>) -> Vec<Token> {
    tokens
        .into_iter()
        .map(|t| match t.kind {
            TokenKind::Url => t,
            _ => Token {
                surface: squeeze_str(&t.surface),
                kind: t.kind,
            },
        })
        .collect()
}

/// Drop punctuation and emoticon tokens. Intra-word apostrophes survive
/// because they are part of Word surfaces, not Punct tokens.
pub fn strip_punctuation(tokens: Vec<Token>) -> Vec<Token> {
    tokens
        .into_iter()
        .filter(|t| !matches!(t.kind, TokenKind::Punct | TokenKind::Emoticon))
        .collect()
}

/// Drop URLs, mentions, hashtags, number tokens, and words containing any
/// digit.
pub fn strip_entities_and_digits(tokens: Vec<Token>) -> Vec<Token> {
    tokens
        .into_iter()
        .filter(|t| match t.kind {
            TokenKind::Url | TokenKind::Mention | TokenKind::Hashtag | TokenKind::Number => false,
            _ => !t.surface.chars().any(|c| c.is_ascii_digit()),
        })
        .collect()
}

/// Drop stop words, short-word-list entries, and tokens shorter than the
/// configured minimum length. Matching is case-insensitive.
pub fn remove_stopwords_and_short(tokens: Vec<Token>, config: &PipelineConfig) -> Vec<Token> {
    tokens
        .into_iter()
        .filter(|t| {
            if t.surface.chars().count() < config.min_token_len {
                return false;
            }
            let lower = t.surface.to_lowercase();
            !config.stopwords.contains(&lower) && !config.shortwords.contains(&lower)
        })
        .collect()
}

fn strip_once(word: &str, lang: Lang) -> Option<String> {
    // Suffix table per language; replacement applied when the remaining stem
    // keeps at least two characters.
    let rules: &[(&str, &str)] = match lang {
        Lang::En => &[
            ("ies", "y"),
            ("sses", "ss"),
            ("xes", "x"),
            ("zes", "z"),
            ("ches", "ch"),
            ("shes", "sh"),
            ("ses", "s"),
            ("oes", "o"),
            ("s", ""),
        ],
        Lang::Pt => &[
            ("ões", "ão"),
            ("ais", "al"),
            ("éis", "el"),
            ("óis", "ol"),
            ("ns", "m"),
            ("es", ""),
            ("s", ""),
        ],
    };
    if plural_exceptions(lang).contains(word) {
        return None;
    }
    // Words already ending in a double s or a Latin -us are singular-ish.
    if word.ends_with("ss") || (lang == Lang::En && word.ends_with("us")) {
        return None;
    }
    for (suffix, replacement) in rules {
        if let Some(stem) = word.strip_suffix(suffix) {
            if *suffix == "ies" && word.chars().count() < 5 {
                continue;
            }
            let candidate = format!("{stem}{replacement}");
            if candidate.chars().count() >= 2 && candidate != word {
                return Some(candidate);
            }
        }
    }
    None
}

/// Rule-based plural-to-singular for one token. When the stripped form
/// would itself still look plural, the token is left unchanged; that keeps
/// the step idempotent and avoids over-stripping chains.
pub fn lemmatize_word(word: &str, lang: Lang) -> String {
    match strip_once(word, lang) {
        Some(singular) if strip_once(&singular, lang).is_none() => singular,
        _ => word.to_string(),
    }
}

/// Plural lemmatization over Word tokens only.
pub fn lemmatize_plurals(tokens: Vec<Token>, lang: Lang) -> Vec<Token> {
    tokens
        .into_iter()
        .map(|t| match t.kind {
            TokenKind::Word => Token {
                surface: lemmatize_word(&t.surface, lang),
                kind: TokenKind::Word,
            },
            _ => t,
        })
        .collect()
}

enum PipelineState {
    Text(String),
    Tokens(Vec<Token>),
}

/// Run the configured steps over one text. Steps before `tokenize` apply to
/// the raw string, the rest to the token list; the output is the retained
/// token surfaces in order.
pub fn run_pipeline(text: &str, config: &PipelineConfig) -> Vec<String> {
    let mut state = PipelineState::Text(text.to_string());
    for step in &config.steps {
        state = match (step, state) {
            (Step::Tokenize, PipelineState::Text(s)) => PipelineState::Tokens(tokenize(&s)),
            (Step::Tokenize, PipelineState::Tokens(_)) => unreachable!("validated single tokenize"),
            (Step::Lowercase, PipelineState::Text(s)) => PipelineState::Text(s.to_lowercase()),
            (Step::SqueezeRepeats, PipelineState::Text(s)) => {
                PipelineState::Text(squeeze_str(&s))
            }
            (step, PipelineState::Text(_)) => {
                unreachable!("validated config: {step:?} before tokenize")
            }
            (Step::Lowercase, PipelineState::Tokens(ts)) => PipelineState::Tokens(lowercase(ts)),
            (Step::SqueezeRepeats, PipelineState::Tokens(ts)) => {
                PipelineState::Tokens(squeeze_repeats(ts))
            }
            (Step::StripPunctuation, PipelineState::Tokens(ts)) => {
                PipelineState::Tokens(strip_punctuation(ts))
            }
            (Step::StripEntitiesAndDigits, PipelineState::Tokens(ts)) => {
                PipelineState::Tokens(strip_entities_and_digits(ts))
            }
            (Step::RemoveStopwordsAndShort, PipelineState::Tokens(ts)) => {
                PipelineState::Tokens(remove_stopwords_and_short(ts, config))
            }
            (Step::LemmatizePlurals, PipelineState::Tokens(ts)) => {
                PipelineState::Tokens(lemmatize_plurals(ts, config.lang))
            }
        };
    }
    match state {
        PipelineState::Tokens(ts) => ts.into_iter().map(|t| t.surface).collect(),
        PipelineState::Text(_) => unreachable!("validated config contains tokenize"),
    }
}

/// Preprocess a record's text, carrying its id along.
pub fn preprocess_record(
    record: &crate::ingest::TweetRecord,
    config: &PipelineConfig,
) -> PreprocessedDoc {
    PreprocessedDoc::new(record.id.clone(), run_pipeline(&record.text, config))
}

/// Shift a UTC timestamp into city-local seconds. Weekday/hour/date helpers
/// below interpret the shifted value as local wall-clock time. Offsets are
/// fixed per city; DST transitions are out of scope.
pub fn localize_timestamp(utc_secs: i64, offset_minutes: i32) -> i64 {
    utc_secs + 60 * offset_minutes as i64
}

fn local_datetime(local_secs: i64) -> DateTime<chrono::Utc> {
    DateTime::from_timestamp(local_secs, 0).expect("timestamp in range")
}

/// ISO weekday of the local timestamp: Monday = 0 .. Sunday = 6.
pub fn weekday_iso(local_secs: i64) -> usize {
    local_datetime(local_secs).weekday().num_days_from_monday() as usize
}

/// Hour of the local day, 0..24.
pub fn hour_of_day(local_secs: i64) -> u32 {
    local_datetime(local_secs).hour()
}

/// Local calendar date.
pub fn local_date(local_secs: i64) -> NaiveDate {
    local_datetime(local_secs).date_naive()
}
