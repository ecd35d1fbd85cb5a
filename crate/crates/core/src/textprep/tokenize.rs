//! Tweet-aware tokenizer: a hand-written rule cascade that keeps hashtags,
//! mentions, URLs and emoticons as single tokens and groups punctuation
//! into same-character runs. Total over arbitrary input: every
//! non-whitespace character lands in exactly one token.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Bundled emoticon grammar; one literal pattern per line, `#` comments.
const EMOTICON_GRAMMAR: &str = include_str!("../../data/emoticons.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Hashtag,
    Mention,
    Url,
    Emoticon,
    Number,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(surface: impl Into<String>, kind: TokenKind) -> Self {
        Token {
            surface: surface.into(),
            kind,
        }
    }
}

fn emoticons() -> &'static Vec<&'static str> {
    static PATTERNS: OnceLock<Vec<&'static str>> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        let mut pats: Vec<&'static str> = EMOTICON_GRAMMAR
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        // Longest first so ":-)" wins over ":-" prefixes.
        pats.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        pats
    })
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_mention_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_hashtag_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Byte length of the URL starting at the front of `rest`, if any.
fn match_url(rest: &str) -> Option<usize> {
    let lower: String = rest.chars().take(8).collect::<String>().to_ascii_lowercase();
    let is_url =
        lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.");
    if !is_url {
        return None;
    }
    let end = rest
        .char_indices()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, _)| i)
        .unwrap_or(rest.len());
    Some(end)
}

fn match_emoticon(rest: &str) -> Option<usize> {
    emoticons()
        .iter()
        .find(|p| {
            if !rest.starts_with(**p) {
                return false;
            }
            // A letter-final pattern must not bite into a word ("xdrive").
            let ends_alnum = p.chars().last().is_some_and(char::is_alphanumeric);
            let next_alnum = rest[p.len()..].chars().next().is_some_and(char::is_alphanumeric);
            !(ends_alnum && next_alnum)
        })
        .map(|p| p.len())
}

/// `@` followed by at least one ASCII word character.
fn match_mention(rest: &str) -> Option<usize> {
    let mut chars = rest.char_indices();
    match chars.next() {
        Some((_, '@')) => {}
        _ => return None,
    }
    let mut end = 0;
    for (i, c) in chars {
        if is_mention_char(c) {
            end = i + c.len_utf8();
        } else {
            break;
        }
    }
    if end > 1 {
        Some(end)
    } else {
        None
    }
}

/// `#` followed by at least one alphanumeric (unicode) or underscore.
fn match_hashtag(rest: &str) -> Option<usize> {
    let mut chars = rest.char_indices();
    match chars.next() {
        Some((_, '#')) => {}
        _ => return None,
    }
    let mut end = 0;
    for (i, c) in chars {
        if is_hashtag_char(c) {
            end = i + c.len_utf8();
        } else {
            break;
        }
    }
    if end > 1 {
        Some(end)
    } else {
        None
    }
}

/// Digits with internal `.`, `,` or `:` separators, each followed by another
/// digit. Returns None when the match is immediately followed by a word
/// character ("2nd", "10km"), which the word rule should take instead.
fn match_number(rest: &str) -> Option<usize> {
    let bytes = rest.as_bytes();
    if !bytes[0].is_ascii_digit() {
        return None;
    }
    let mut end = 0;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    loop {
        if end + 1 < bytes.len()
            && matches!(bytes[end], b'.' | b',' | b':')
            && bytes[end + 1].is_ascii_digit()
        {
            end += 1;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
        } else {
            break;
        }
    }
    if rest[end..].chars().next().is_some_and(is_word_char) {
        return None;
    }
    Some(end)
}

/// Alphanumeric run with intra-word apostrophes ("don't").
fn match_word(rest: &str) -> Option<usize> {
    let mut end = 0;
    let mut chars = rest.char_indices().peekable();
    match chars.peek() {
        Some(&(_, c)) if is_word_char(c) => {}
        _ => return None,
    }
    while let Some(&(i, c)) = chars.peek() {
        if is_word_char(c) {
            end = i + c.len_utf8();
            chars.next();
        } else if is_apostrophe(c) {
            let mut ahead = chars.clone();
            ahead.next();
            match ahead.peek() {
                Some(&(_, n)) if is_word_char(n) => {
                    end = i + c.len_utf8();
                    chars.next();
                }
                _ => break,
            }
        } else {
            break;
        }
    }
    Some(end)
}

/// Maximal run of the same character ("..." and "!!" are separate tokens).
fn match_punct_run(rest: &str) -> usize {
    let first = rest.chars().next().expect("non-empty rest");
    let mut end = first.len_utf8();
    for (i, c) in rest.char_indices().skip(1) {
        if c == first {
            end = i + c.len_utf8();
        } else {
            break;
        }
    }
    end
}

/// Tokenize tweet text. Rule order: URL, mention, hashtag, emoticon,
/// number, word, punctuation run.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().expect("pos on char boundary");
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        let (len, kind) = if let Some(n) = match_url(rest) {
            (n, TokenKind::Url)
        } else if let Some(n) = match_mention(rest) {
            (n, TokenKind::Mention)
        } else if let Some(n) = match_hashtag(rest) {
            (n, TokenKind::Hashtag)
        } else if let Some(n) = match_emoticon(rest) {
            (n, TokenKind::Emoticon)
        } else if let Some(n) = match_number(rest) {
            (n, TokenKind::Number)
        } else if let Some(n) = match_word(rest) {
            (n, TokenKind::Word)
        } else {
            (match_punct_run(rest), TokenKind::Punct)
        };
        tokens.push(Token::new(&rest[..len], kind));
        pos += len;
    }
    tokens
}
