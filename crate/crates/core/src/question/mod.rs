//! Critical-question generation, filtering, diversity selection and
//! quality metrics.

pub mod kmeans;

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::analysis::analyze;
use crate::error::{Error, Result};
use crate::gateway::{render, Embedding, Gateway};
use crate::index::{idf, Document, IndexStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionStatus {
    Candidate,
    RejectedCompound,
    RejectedLength,
    Selected,
}

/// A generated critical question for one article.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Question {
    pub topic_id: String,
    pub text: String,
    pub status: QuestionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityMetrics>,
    #[serde(skip)]
    pub embedding: Option<Embedding>,
}

impl Question {
    pub fn candidate(topic_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            topic_id: topic_id.into(),
            text: text.into(),
            status: QuestionStatus::Candidate,
            quality: None,
            embedding: None,
        }
    }
}

/// CRAAP component scores, each in 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CraapScores {
    pub currency: u8,
    pub relevance: u8,
    pub authority: u8,
    pub accuracy: u8,
    pub purpose: u8,
}

/// Question-vs-article quality diagnostics. CRAAP scores are recorded for
/// analysis only and never gate selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityMetrics {
    pub tfidf_cosine: f64,
    pub jaccard: f64,
    pub embed_cosine: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub craap: Option<CraapScores>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Per-topic slice of the question run artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicQuestions {
    pub topic_id: String,
    pub questions: Vec<Question>,
}

pub type QuestionRun = Vec<TopicQuestions>;

fn strip_list_marker(line: &str) -> &str {
    let trimmed = line.trim();
    let unbulleted = trimmed
        .strip_prefix(['-', '*', '\u{2022}'])
        .map(str::trim_start)
        .unwrap_or(trimmed);
    let digits = unbulleted.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        if let Some(rest) = unbulleted[digits..].strip_prefix(['.', ')']) {
            return rest.trim_start();
        }
    }
    unbulleted
}

/// Parse one question per line, accepting numbered or bulleted markers.
/// Lines that do not end with a question mark are ignored.
pub fn parse_question_lines(response: &str) -> Vec<String> {
    response
        .lines()
        .map(strip_list_marker)
        .map(str::trim)
        .filter(|l| l.ends_with('?') && l.len() > 1)
        .map(str::to_string)
        .collect()
}

/// Generate candidate questions for an article. At most
/// `n_target + slack` candidates are returned; a response with zero
/// parseable questions is retried once before failing.
pub fn generate_questions(
    gateway: &Gateway,
    article: &Document,
    n_target: usize,
    slack: usize,
) -> Result<Vec<Question>> {
    if article.body.trim().is_empty() {
        return Err(Error::Generation(format!(
            "article {} has an empty body",
            article.doc_id
        )));
    }
    let limit = n_target + slack;
    let n = limit.to_string();
    let req = render(
        "question_gen",
        &[
            ("title", article.title.as_str()),
            ("url", article.url.as_str()),
            ("body", article.body.as_str()),
            ("n", n.as_str()),
        ],
    )?;
    for _attempt in 0..2 {
        let response = gateway.chat(&req)?;
        let texts = parse_question_lines(&response);
        if !texts.is_empty() {
            return Ok(texts
                .into_iter()
                .take(limit)
                .map(|t| Question::candidate(&article.doc_id, t))
                .collect());
        }
    }
    Err(Error::Generation(format!(
        "no parseable questions for article {}",
        article.doc_id
    )))
}

static INTERROGATIVE_CONJUNCTION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:and|or)[,]?\s+(?:who|what|when|where|why|how|which|whose|whom)\b")
        .unwrap()
});

static INTERROGATIVE_LEAD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:who|what|when|where|why|how|which|whose|whom)\b").unwrap()
});

/// A compound question: more than one question mark, or two interrogative
/// leads joined by "and"/"or".
pub fn is_compound(text: &str) -> bool {
    if text.matches('?').count() > 1 {
        return true;
    }
    INTERROGATIVE_LEAD.is_match(text) && INTERROGATIVE_CONJUNCTION.is_match(text)
}

/// Mark compound and over-long candidates as rejected. Texts are never
/// mutated and order is preserved.
pub fn semantic_filter(mut questions: Vec<Question>, max_words: usize) -> Vec<Question> {
    for q in &mut questions {
        if q.status != QuestionStatus::Candidate {
            continue;
        }
        if is_compound(&q.text) {
            q.status = QuestionStatus::RejectedCompound;
        } else if q.text.split_whitespace().count() > max_words {
            q.status = QuestionStatus::RejectedLength;
        }
    }
    questions
}

/// Optional LLM-judged filter (flag-controlled alternative to the rule
/// based filter): candidates judged INVALID are marked compound.
pub fn llm_filter(gateway: &Gateway, mut questions: Vec<Question>) -> Result<Vec<Question>> {
    for q in &mut questions {
        if q.status != QuestionStatus::Candidate {
            continue;
        }
        let response = gateway.chat_template("question_filter", &[("question", &q.text)])?;
        if response.trim_start().to_uppercase().starts_with("INVALID") {
            q.status = QuestionStatus::RejectedCompound;
        }
    }
    Ok(questions)
}

/// Outcome of diversity selection.
#[derive(Debug)]
pub struct SelectionOutcome {
    /// Indices into the input questions, ordered by cluster id.
    pub selected: Vec<usize>,
    /// True when fewer candidates than `k` were available and every
    /// candidate was selected instead.
    pub shortfall: bool,
}

/// Embed candidates, cluster them with seeded k-means, and select the
/// candidate closest to each centroid. Statuses and embeddings are updated
/// in place.
pub fn select_diverse(
    gateway: &Gateway,
    questions: &mut [Question],
    k: usize,
    seed: u64,
) -> Result<SelectionOutcome> {
    let candidate_indices: Vec<usize> = questions
        .iter()
        .enumerate()
        .filter(|(_, q)| q.status == QuestionStatus::Candidate)
        .map(|(i, _)| i)
        .collect();
    if candidate_indices.is_empty() {
        return Ok(SelectionOutcome {
            selected: Vec::new(),
            shortfall: true,
        });
    }

    let texts: Vec<String> = candidate_indices
        .iter()
        .map(|&i| questions[i].text.clone())
        .collect();
    let embeddings = gateway.embed(&texts)?;
    for (&i, e) in candidate_indices.iter().zip(&embeddings) {
        questions[i].embedding = Some(e.clone().normalized());
    }

    if candidate_indices.len() <= k {
        // fewer candidates than clusters requested: keep all of them
        for &i in &candidate_indices {
            questions[i].status = QuestionStatus::Selected;
        }
        return Ok(SelectionOutcome {
            shortfall: candidate_indices.len() < k,
            selected: candidate_indices,
        });
    }

    let points: Vec<Vec<f64>> = candidate_indices
        .iter()
        .map(|&i| questions[i].embedding.as_ref().unwrap().vector.clone())
        .collect();
    let clustering = kmeans::kmeans(&points, k, seed)?;

    let selected: Vec<usize> = clustering
        .selected_indices
        .iter()
        .map(|&local| candidate_indices[local])
        .collect();
    for &i in &selected {
        questions[i].status = QuestionStatus::Selected;
    }
    Ok(SelectionOutcome {
        selected,
        shortfall: false,
    })
}

/// Document-frequency statistics over an evaluation article set, used for
/// TF-IDF question quality metrics.
pub fn article_stats(articles: &[Document]) -> IndexStats {
    let mut doc_freq = std::collections::BTreeMap::new();
    let mut total = 0u64;
    for article in articles {
        let tokens = analyze(&article.body);
        total += tokens.len() as u64;
        let distinct: HashSet<String> = tokens.into_iter().collect();
        for t in distinct {
            *doc_freq.entry(t).or_insert(0u32) += 1;
        }
    }
    let n = articles.len();
    IndexStats {
        doc_count: n,
        avg_field_len: [0.0, 0.0, if n > 0 { total as f64 / n as f64 } else { 0.0 }],
        doc_freq,
    }
}

fn term_counts(tokens: &[String]) -> std::collections::BTreeMap<&str, f64> {
    let mut counts = std::collections::BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0.0) += 1.0;
    }
    counts
}

/// Cosine similarity of raw-count TF-IDF vectors over analyzed tokens.
pub fn tfidf_cosine(question: &str, article_body: &str, stats: &IndexStats) -> f64 {
    let q = term_counts(&analyze(question));
    let a = term_counts(&analyze(article_body));
    let weight = |term: &str, tf: f64| {
        tf * idf(stats.doc_count, stats.doc_freq.get(term).copied().unwrap_or(0))
    };
    let mut dot = 0.0;
    let mut q_norm = 0.0;
    let mut a_norm = 0.0;
    for (&term, &tf) in &q {
        let w = weight(term, tf);
        q_norm += w * w;
        if let Some(&atf) = a.get(term) {
            dot += w * weight(term, atf);
        }
    }
    for (&term, &tf) in &a {
        let w = weight(term, tf);
        a_norm += w * w;
    }
    if q_norm == 0.0 || a_norm == 0.0 {
        return 0.0;
    }
    dot / (q_norm.sqrt() * a_norm.sqrt())
}

/// Jaccard similarity of analyzed token sets.
pub fn jaccard(question: &str, article_body: &str) -> f64 {
    let q: HashSet<String> = analyze(question).into_iter().collect();
    let a: HashSet<String> = analyze(article_body).into_iter().collect();
    let union = q.union(&a).count();
    if union == 0 {
        return 0.0;
    }
    q.intersection(&a).count() as f64 / union as f64
}

fn parse_craap(response: &str) -> Option<CraapScores> {
    let mut values = std::collections::HashMap::new();
    for line in response.lines() {
        let Some((name, value)) = line.split_once(':') else {
            continue;
        };
        let name = name.trim().to_lowercase();
        if let Ok(v) = value.trim().parse::<u8>() {
            if (1..=5).contains(&v) {
                values.insert(name, v);
            }
        }
    }
    Some(CraapScores {
        currency: *values.get("currency")?,
        relevance: *values.get("relevance")?,
        authority: *values.get("authority")?,
        accuracy: *values.get("accuracy")?,
        purpose: *values.get("purpose")?,
    })
}

/// Compute the full quality-metric record for one question.
pub fn quality_metrics(
    gateway: &Gateway,
    question: &str,
    article: &Document,
    stats: &IndexStats,
) -> Result<QualityMetrics> {
    let embeddings = gateway.embed(&[question.to_string(), article.body.clone()])?;
    let embed_cosine = embeddings[0].cosine(&embeddings[1]);

    let mut flags = Vec::new();
    let req = render(
        "craap_score",
        &[
            ("question", question),
            ("title", article.title.as_str()),
            ("body", article.body.as_str()),
        ],
    )?;
    let mut craap = None;
    for _attempt in 0..2 {
        let response = gateway.chat(&req)?;
        craap = parse_craap(&response);
        if craap.is_some() {
            break;
        }
    }
    if craap.is_none() {
        flags.push("craap_unparseable".to_string());
    }

    Ok(QualityMetrics {
        tfidf_cosine: tfidf_cosine(question, &article.body, stats),
        jaccard: jaccard(question, &article.body),
        embed_cosine,
        craap,
        flags,
    })
}
