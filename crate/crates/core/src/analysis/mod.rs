//! English text analysis: Unicode word segmentation, lowercasing,
//! possessive stripping, stopword removal and Porter stemming.
//!
//! The analyzer is fully deterministic; the stopword list ships as a data
//! file so the token stream is reproducible across builds.

pub mod porter;

use std::collections::HashSet;
use std::sync::LazyLock;

use unicode_segmentation::UnicodeSegmentation;

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    include_str!("data/stopwords_en.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
});

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(token)
}

/// Strip a trailing English possessive (`'s`, including the typographic
/// apostrophe) from an already-lowercased token.
fn strip_possessive(token: &str) -> &str {
    token
        .strip_suffix("'s")
        .or_else(|| token.strip_suffix("\u{2019}s"))
        .unwrap_or(token)
}

/// Segment into Unicode words and lowercase. No filtering or stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(|w| w.to_lowercase()).collect()
}

/// Full analysis chain: word segmentation, lowercase, possessive strip,
/// stopword removal, Porter stemming.
pub fn analyze(text: &str) -> Vec<String> {
    text.unicode_words()
        .map(|w| w.to_lowercase())
        .map(|w| strip_possessive(&w).to_string())
        .filter(|w| !w.is_empty() && !is_stopword(w))
        .map(|w| porter::stem(&w))
        .collect()
}
