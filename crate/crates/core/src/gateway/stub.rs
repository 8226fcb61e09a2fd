//! Deterministic offline backend.
//!
//! Chat responses are a pure function of (system prompt, user prompt): the
//! task marker in the system prompt selects a responder, and a keyed hash
//! of both prompts drives any variation. Embeddings hash tokens into a
//! fixed number of buckets with ±1 signs and L2-normalize, so identical
//! texts embed identically and token overlap yields positive cosine.

use sha2::{Digest, Sha256};
use unicode_segmentation::UnicodeSegmentation;

use super::{Backend, ChatRequest, Embedding};
use crate::analysis;
use crate::error::Result;

pub struct StubBackend {
    dim: usize,
}

impl StubBackend {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

fn hash64(parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0x1f]);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Token bucket index and sign for the hashing embedder.
fn token_feature(token: &str, dim: usize) -> (usize, f64) {
    let digest = Sha256::digest(token.as_bytes());
    let bucket = u64::from_le_bytes(digest[..8].try_into().unwrap()) as usize % dim;
    let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
    (bucket, sign)
}

pub fn hash_embedding(text: &str, dim: usize) -> Embedding {
    let mut vector = vec![0.0; dim];
    for word in text.unicode_words() {
        let (bucket, sign) = token_feature(&word.to_lowercase(), dim);
        vector[bucket] += sign;
    }
    if vector.iter().all(|&x| x == 0.0) {
        vector[0] = 1.0;
    }
    Embedding { vector }.normalized()
}

/// First line of the form `## TASK: <name>` selects the responder.
fn task_marker(system_prompt: &str) -> Option<&str> {
    system_prompt
        .lines()
        .next()?
        .strip_prefix("## TASK: ")
        .map(str::trim)
}

/// Value of the first line starting with `<label>` (e.g. `QUESTION: `).
fn labeled_line<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(label))
        .map(str::trim)
}

/// Multiline section between `<label>\n` and the next blank line or end.
fn labeled_section<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    let start = prompt.find(label)? + label.len();
    let rest = &prompt[start..];
    let end = rest.find("\n\n").unwrap_or(rest.len());
    Some(rest[..end].trim())
}

fn content_words(text: &str) -> Vec<String> {
    text.unicode_words()
        .map(|w| w.to_lowercase())
        .filter(|w| w.len() > 2 && !analysis::is_stopword(w))
        .collect()
}

fn overlap_count(question: &str, document: &str) -> usize {
    let q: std::collections::HashSet<String> = analysis::analyze(question).into_iter().collect();
    if q.is_empty() {
        return 0;
    }
    let d: std::collections::HashSet<String> = analysis::analyze(document).into_iter().collect();
    q.intersection(&d).count()
}

const QUESTION_FORMS: &[&str] = &[
    "Who owns the outlet that published the coverage of {}?",
    "What are the funding sources behind the reporting on {}?",
    "Which named experts or organizations are quoted about {}?",
    "What primary documents support the central claims about {}?",
    "Has the publisher issued corrections on earlier {} coverage?",
    "What is the track record of the reporter covering {}?",
    "Do independent outlets corroborate the claims about {}?",
    "What editorial policies govern how {} stories are reviewed?",
    "Which stakeholders benefit if the claims about {} are believed?",
    "What viewpoints are missing from the coverage of {}?",
    "How current is the evidence cited in the {} story?",
    "Does the headline overstate what the body says about {}?",
    "What potential conflicts of interest surround the {} coverage?",
    "Are statistics about {} attributed to verifiable datasets?",
    "What do subject-matter experts say about the {} claims?",
    "Is the outlet transparent about its ownership while covering {}?",
    "Were the people affected by {} given a chance to respond?",
    "What advertising relationships might influence coverage of {}?",
    "How does the {} coverage compare with wire-service reporting?",
    "Did the article disclose how the {} data was collected?",
];

fn question_generation(hash: u64, user_prompt: &str) -> String {
    let title = labeled_line(user_prompt, "ARTICLE TITLE:").unwrap_or("the article");
    let keyword = content_words(title)
        .into_iter()
        .next()
        .unwrap_or_else(|| "the story".to_string());
    let requested: usize = user_prompt
        .split("Write ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|n| n.parse().ok())
        .unwrap_or(12);
    let count = requested.clamp(4, 20);
    let offset = (hash % QUESTION_FORMS.len() as u64) as usize;

    let mut lines = Vec::with_capacity(count);
    for i in 0..count {
        let text = if count >= 10 && i == 3 {
            // one compound question, to exercise downstream filtering
            format!("Who wrote the {keyword} piece? And why was it published now?")
        } else if count >= 10 && i == 8 {
            // one over-long question
            format!(
                "Considering the full publication history, ownership structure, funding \
                 disclosures, editorial policies, and every previous correction ever issued, \
                 how exactly should a careful reader weigh the reliability of this {keyword} \
                 coverage today?"
            )
        } else {
            let form = QUESTION_FORMS[(offset + i) % QUESTION_FORMS.len()];
            form.replace("{}", &keyword)
        };
        lines.push(format!("{}. {}", i + 1, text));
    }
    lines.join("\n")
}

fn boolean_expansion(user_prompt: &str) -> String {
    let question = labeled_line(user_prompt, "QUESTION:").unwrap_or("");
    let words = content_words(question);
    let first = words.first().map(String::as_str).unwrap_or("topic");
    let second = words.get(1).map(String::as_str).unwrap_or("coverage");
    [
        format!("{first} background"),
        "funding sources".to_string(),
        "editorial policy".to_string(),
        format!("{second} credibility"),
    ]
    .join("\n")
}

fn cot_expansion(user_prompt: &str) -> String {
    let question = labeled_line(user_prompt, "QUESTION:").unwrap_or("");
    let words = content_words(question);
    let first = words.first().map(String::as_str).unwrap_or("topic");
    format!(
        "To answer this, a reader would need background on {first}, the outlet's \
         ownership, and any independent verification of the claims.\n\
         Records of past corrections and third-party assessments would also help.\n\
         TERMS: {first} history; source credibility; independent verification"
    )
}

fn structured_expansion(user_prompt: &str) -> String {
    let question = labeled_line(user_prompt, "QUESTION:").unwrap_or("");
    let words = content_words(question);
    let first = words.first().map(String::as_str).unwrap_or("topic");
    let body_query = if words.is_empty() {
        "news coverage".to_string()
    } else {
        words.join(" ")
    };
    serde_json::json!({
        "bool": {
            "must": [
                {"match": {"body": {"query": body_query, "boost": 1.0}}}
            ],
            "should": [
                {"match": {"title": {"query": first, "boost": 2.0}}}
            ]
        }
    })
    .to_string()
}

fn relevance_judgment(user_prompt: &str) -> String {
    let question = labeled_line(user_prompt, "QUESTION:").unwrap_or("");
    let title = labeled_line(user_prompt, "DOCUMENT TITLE:").unwrap_or("");
    let body = labeled_section(user_prompt, "DOCUMENT BODY:\n").unwrap_or("");
    let shared = overlap_count(question, &format!("{title} {body}"));
    if shared >= 2 {
        format!("RELEVANT - shares {shared} key terms with the question.")
    } else {
        "NOT RELEVANT - insufficient topical overlap.".to_string()
    }
}

fn craap_scores(hash: u64) -> String {
    let components = ["currency", "relevance", "authority", "accuracy", "purpose"];
    components
        .iter()
        .enumerate()
        .map(|(i, name)| format!("{name}: {}", 2 + (hash.wrapping_add(i as u64 * 7) % 4)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn answer_synthesis(user_prompt: &str) -> String {
    let question = labeled_line(user_prompt, "QUESTION:").unwrap_or("");
    let evidence_count = user_prompt
        .lines()
        .filter(|l| {
            let t = l.trim_start();
            t.starts_with('[') && t[1..].chars().next().is_some_and(|c| c.is_ascii_digit())
        })
        .count();
    let topic = content_words(question)
        .into_iter()
        .next()
        .unwrap_or_else(|| "this claim".to_string());
    match evidence_count {
        0 => "The provided evidence is insufficient to answer the question.".to_string(),
        1 => format!(
            "The cited reporting partially addresses {topic}, though coverage is thin [1]."
        ),
        _ => format!(
            "The strongest available passages indicate that {topic} is covered by \
             independent reporting [1], with additional context on sourcing and \
             ownership [2]."
        ),
    }
}

fn report_synthesis(user_prompt: &str) -> String {
    let source_count = labeled_section(user_prompt, "SOURCES:\n")
        .map(|s| s.lines().count())
        .unwrap_or(0);
    match source_count {
        0 => "The retrieved evidence was too sparse to assess the article's central \
              claims; readers should treat them as unverified."
            .to_string(),
        1 => "The article's central claims are only partially corroborated by outside \
              reporting [1]. The available source addresses the topic but leaves \
              ownership and funding questions open, so moderate caution is warranted."
            .to_string(),
        2 => "Outside reporting corroborates part of the article's account [1], and a \
              second source speaks to the outlet's sourcing practices [2]. Key \
              questions about funding and editorial independence remain only \
              partially answered, so the article merits cautious trust."
            .to_string(),
        _ => "Independent coverage supports the article's core factual claims [1], and \
              further sources address the publisher's ownership and track record \
              [2][3]. Remaining gaps concern motivation and completeness of \
              viewpoints, so the article appears broadly trustworthy with reservations."
            .to_string(),
    }
}

fn similarity_judgment(user_prompt: &str) -> String {
    let rubric = labeled_line(user_prompt, "RUBRIC QUESTION:").unwrap_or("");
    let candidate = labeled_line(user_prompt, "CANDIDATE QUESTION:").unwrap_or("");
    let a: std::collections::HashSet<String> = analysis::analyze(rubric).into_iter().collect();
    let b: std::collections::HashSet<String> = analysis::analyze(candidate).into_iter().collect();
    let union = a.union(&b).count();
    let jaccard = if union == 0 {
        0.0
    } else {
        a.intersection(&b).count() as f64 / union as f64
    };
    if jaccard >= 0.8 {
        "VERY SIMILAR"
    } else if jaccard >= 0.4 {
        "SIMILAR"
    } else if jaccard >= 0.15 {
        "DIFFERENT"
    } else {
        "VERY DIFFERENT"
    }
    .to_string()
}

fn question_filter(user_prompt: &str) -> String {
    let question = labeled_line(user_prompt, "QUESTION:").unwrap_or("");
    let word_count = question.split_whitespace().count();
    let question_marks = question.matches('?').count();
    if question_marks > 1 || word_count > 30 || !question.trim_end().ends_with('?') {
        "INVALID".to_string()
    } else {
        "VALID".to_string()
    }
}

impl Backend for StubBackend {
    fn chat(&self, req: &ChatRequest) -> Result<String> {
        let hash = hash64(&[&req.system_prompt, &req.user_prompt]);
        let response = match task_marker(&req.system_prompt) {
            Some("question-generation") => question_generation(hash, &req.user_prompt),
            Some("boolean-expansion") => boolean_expansion(&req.user_prompt),
            Some("cot-expansion") => cot_expansion(&req.user_prompt),
            Some("structured-expansion") => structured_expansion(&req.user_prompt),
            Some("relevance-judge") => relevance_judgment(&req.user_prompt),
            Some("craap-scoring") => craap_scores(hash),
            Some("answer-synthesis") => answer_synthesis(&req.user_prompt),
            Some("report-synthesis") => report_synthesis(&req.user_prompt),
            Some("similarity-judge") => similarity_judgment(&req.user_prompt),
            Some("question-filter") => question_filter(&req.user_prompt),
            _ => format!("stub-response-{:016x}", hash),
        };
        Ok(response)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        Ok(texts.iter().map(|t| hash_embedding(t, self.dim)).collect())
    }
}
