//! Citation-backed answer and report synthesis.
//!
//! Each question gets a short answer grounded in its filtered evidence via
//! bracketed citations; the per-question answers are then compressed into
//! one article-level trustworthiness report whose citations are
//! re-validated against the union of the answers' citations.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{render, Gateway};

/// Evidence passage offered to the answer prompt.
#[derive(Debug, Clone)]
pub struct EvidenceSnippet {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CitedAnswer {
    pub question: String,
    pub answer_text: String,
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrustReport {
    pub topic_id: String,
    pub report_text: String,
    #[serde(rename = "citations")]
    pub report_citations: Vec<String>,
    pub answers: Vec<CitedAnswer>,
    pub word_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

static CITATION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[(\d{1,3})\]").unwrap());

/// Extract bracketed citation indices (1-based) and map them to doc ids,
/// dropping out-of-range indices. Returns (doc_ids, dropped_any).
fn map_citations(text: &str, doc_ids: &[String]) -> (Vec<String>, bool) {
    let mut cited = Vec::new();
    let mut dropped = false;
    for capture in CITATION_RE.captures_iter(text) {
        let index: usize = capture[1].parse().unwrap_or(0);
        if index >= 1 && index <= doc_ids.len() {
            let id = &doc_ids[index - 1];
            if !cited.contains(id) {
                cited.push(id.clone());
            }
        } else {
            dropped = true;
        }
    }
    (cited, dropped)
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Verbatim-copy guard: true when `answer` shares a run of `n` consecutive
/// whitespace tokens with any evidence text.
fn shares_ngram(answer: &str, evidence: &[EvidenceSnippet], n: usize) -> bool {
    let answer_tokens: Vec<&str> = answer.split_whitespace().collect();
    if answer_tokens.len() < n {
        return false;
    }
    let grams: HashSet<Vec<&str>> = answer_tokens.windows(n).map(|w| w.to_vec()).collect();
    for snippet in evidence {
        let tokens: Vec<&str> = snippet.text.split_whitespace().collect();
        if tokens.len() < n {
            continue;
        }
        if tokens.windows(n).any(|w| grams.contains(w)) {
            return true;
        }
    }
    false
}

pub const VERBATIM_GUARD_TOKENS: usize = 25;

const INSUFFICIENT_EVIDENCE: &str =
    "No sufficiently relevant and trustworthy evidence was retrieved for this question.";

/// Answer one question from its filtered evidence. The evidence snippets
/// are numbered in the prompt and citations come back as bracketed indices.
pub fn answer_question(
    gateway: &Gateway,
    question: &str,
    evidence: &[EvidenceSnippet],
) -> Result<CitedAnswer> {
    if evidence.is_empty() {
        return Ok(CitedAnswer {
            question: question.to_string(),
            answer_text: INSUFFICIENT_EVIDENCE.to_string(),
            citations: Vec::new(),
            flags: vec!["no_evidence".to_string()],
        });
    }

    let block: String = evidence
        .iter()
        .enumerate()
        .map(|(i, s)| format!("[{}] {}", i + 1, s.text.replace('\n', " ")))
        .collect::<Vec<_>>()
        .join("\n");
    let req = render("answer", &[("question", question), ("evidence", block.as_str())])?;
    let doc_ids: Vec<String> = evidence.iter().map(|s| s.doc_id.clone()).collect();

    let mut flags = Vec::new();
    let mut answer_text = String::new();
    let mut citations = Vec::new();
    for attempt in 0..2 {
        let response = gateway.chat(&req)?;
        let (cited, dropped) = map_citations(&response, &doc_ids);
        answer_text = response;
        citations = cited;
        if dropped {
            flags.push(format!("citation_out_of_range_attempt_{attempt}"));
        }
        if !citations.is_empty() {
            break;
        }
    }
    if citations.is_empty() {
        flags.push("uncited".to_string());
    }
    if shares_ngram(&answer_text, evidence, VERBATIM_GUARD_TOKENS) {
        flags.push("verbatim_overlap".to_string());
    }

    Ok(CitedAnswer {
        question: question.to_string(),
        answer_text,
        citations,
        flags,
    })
}

/// Truncate at the last sentence boundary within `max_words`; falls back to
/// a hard word cut when the first sentence alone is too long.
fn truncate_at_sentence(text: &str, max_words: usize) -> String {
    let mut kept = String::new();
    let mut words_used = 0usize;
    for sentence in split_sentences(text) {
        let w = word_count(sentence);
        if words_used + w > max_words {
            break;
        }
        if !kept.is_empty() {
            kept.push(' ');
        }
        kept.push_str(sentence.trim());
        words_used += w;
    }
    if kept.is_empty() {
        let words: Vec<&str> = text.split_whitespace().take(max_words).collect();
        return words.join(" ");
    }
    kept
}

fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if matches!(b, b'.' | b'!' | b'?') {
            let next = bytes.get(i + 1);
            if next.is_none() || next.is_some_and(|c| c.is_ascii_whitespace()) {
                out.push(text[start..=i].trim());
                start = i + 1;
            }
        }
    }
    if start < text.len() {
        let tail = text[start..].trim();
        if !tail.is_empty() {
            out.push(tail);
        }
    }
    out
}

/// Compress per-question answers into an article-level report. Report
/// citations are re-validated against the union of answer citations; a
/// report still over `max_words` after one retry is truncated at a
/// sentence boundary and flagged.
pub fn synthesize_report(
    gateway: &Gateway,
    topic_id: &str,
    answers: &[CitedAnswer],
    max_words: usize,
) -> Result<TrustReport> {
    if answers.is_empty() {
        return Err(Error::InvalidArgument(
            "synthesize_report requires at least one answer".into(),
        ));
    }

    let mut union: Vec<String> = Vec::new();
    for answer in answers {
        for c in &answer.citations {
            if !union.contains(c) {
                union.push(c.clone());
            }
        }
    }

    let findings: String = answers
        .iter()
        .map(|a| {
            let sources: String = a
                .citations
                .iter()
                .map(|c| {
                    let idx = union.iter().position(|u| u == c).unwrap() + 1;
                    format!("[{idx}]")
                })
                .collect();
            let cited = if sources.is_empty() {
                String::new()
            } else {
                format!(" (sources: {sources})")
            };
            format!("Q: {}\nA: {}{}", a.question, strip_markers(&a.answer_text), cited)
        })
        .collect::<Vec<_>>()
        .join("\n\n");
    let sources_block: String = union
        .iter()
        .enumerate()
        .map(|(i, id)| format!("[{}] {}", i + 1, id))
        .collect::<Vec<_>>()
        .join("\n");
    let max_words_s = max_words.to_string();
    let req = render(
        "report",
        &[
            ("answers", findings.as_str()),
            ("sources", sources_block.as_str()),
            ("max_words", max_words_s.as_str()),
        ],
    )?;

    let mut flags = Vec::new();
    let mut report_text = String::new();
    for _attempt in 0..2 {
        report_text = gateway.chat(&req)?;
        if word_count(&report_text) <= max_words {
            break;
        }
    }
    if word_count(&report_text) > max_words {
        report_text = truncate_at_sentence(&report_text, max_words);
        flags.push("truncated".to_string());
    }

    let (report_citations, dropped) = map_citations(&report_text, &union);
    if dropped {
        flags.push("report_citation_out_of_range".to_string());
    }
    if answers.iter().all(|a| a.flags.contains(&"no_evidence".to_string())) {
        flags.push("low_evidence".to_string());
    }

    Ok(TrustReport {
        topic_id: topic_id.to_string(),
        word_count: word_count(&report_text),
        report_text,
        report_citations,
        answers: answers.to_vec(),
        flags,
    })
}

/// Remove bracketed per-answer citation markers so the synthesis prompt
/// only carries union-numbered markers.
fn strip_markers(text: &str) -> String {
    CITATION_RE.replace_all(text, "").trim().to_string()
}

/// Check that every citation in the report (answers included) resolves to
/// a dumped evidence doc id.
pub fn verify_citations(report: &TrustReport, dumped: &HashSet<String>) -> Result<()> {
    for c in &report.report_citations {
        if !dumped.contains(c) {
            return Err(Error::CitationIntegrity { doc_id: c.clone() });
        }
    }
    for answer in &report.answers {
        for c in &answer.citations {
            if !dumped.contains(c) {
                return Err(Error::CitationIntegrity { doc_id: c.clone() });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::live::ScriptedBackend;

    fn snippets(n: usize) -> Vec<EvidenceSnippet> {
        (1..=n)
            .map(|i| EvidenceSnippet {
                doc_id: format!("doc{i}"),
                text: format!("evidence text number {i} about publisher funding"),
            })
            .collect()
    }

    #[test]
    fn citations_map_to_doc_ids() {
        let backend = ScriptedBackend::new(["Funded by X [1][3]."]);
        let gw = Gateway::with_backend(Box::new(backend));
        let answer = answer_question(&gw, "Who funds X?", &snippets(3)).unwrap();
        assert_eq!(answer.citations, vec!["doc1", "doc3"]);
        assert!(answer.flags.is_empty());
    }

    #[test]
    fn out_of_range_citation_dropped_and_flagged() {
        let backend = ScriptedBackend::new(["Claim [9] and [2]."]);
        let gw = Gateway::with_backend(Box::new(backend));
        let answer = answer_question(&gw, "Who funds X?", &snippets(3)).unwrap();
        assert_eq!(answer.citations, vec!["doc2"]);
        assert!(answer.flags.iter().any(|f| f.starts_with("citation_out_of_range")));
    }

    #[test]
    fn empty_evidence_yields_templated_answer() {
        let gw = Gateway::stub();
        let answer = answer_question(&gw, "Who funds X?", &[]).unwrap();
        assert!(answer.citations.is_empty());
        assert!(answer.flags.contains(&"no_evidence".to_string()));
        assert!(!answer.answer_text.is_empty());
    }

    #[test]
    fn uncited_answer_retained_with_flag() {
        let backend = ScriptedBackend::new(["no citations here", "still none"]);
        let gw = Gateway::with_backend(Box::new(backend));
        let answer = answer_question(&gw, "Who funds X?", &snippets(2)).unwrap();
        assert!(answer.citations.is_empty());
        assert!(answer.flags.contains(&"uncited".to_string()));
    }

    #[test]
    fn verbatim_copy_is_flagged() {
        let long_text = (0..30).map(|i| format!("tok{i}")).collect::<Vec<_>>().join(" ");
        let evidence = vec![EvidenceSnippet {
            doc_id: "doc1".into(),
            text: long_text.clone(),
        }];
        let backend = ScriptedBackend::new([format!("{long_text} [1]")]);
        let gw = Gateway::with_backend(Box::new(backend));
        let answer = answer_question(&gw, "q", &evidence).unwrap();
        assert!(answer.flags.contains(&"verbatim_overlap".to_string()));
    }

    fn answer_with(question: &str, citations: &[&str]) -> CitedAnswer {
        CitedAnswer {
            question: question.into(),
            answer_text: format!("Answer to {question} [1]."),
            citations: citations.iter().map(|s| s.to_string()).collect(),
            flags: Vec::new(),
        }
    }

    #[test]
    fn report_citations_subset_of_union() {
        let gw = Gateway::stub();
        let answers = vec![
            answer_with("Who funds X?", &["doc1", "doc2"]),
            answer_with("Who owns X?", &["doc3"]),
        ];
        let report = synthesize_report(&gw, "topic1", &answers, 250).unwrap();
        let union: HashSet<String> = ["doc1", "doc2", "doc3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert!(!report.report_citations.is_empty());
        assert!(report.report_citations.iter().all(|c| union.contains(c)));
        assert!(report.word_count <= 250);
    }

    #[test]
    fn over_long_report_truncated_at_sentence() {
        let long_report = format!(
            "First sentence with cite [1]. {} Third sentence trails on.",
            (0..300).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
        );
        let backend = ScriptedBackend::new([long_report.clone(), long_report]);
        let gw = Gateway::with_backend(Box::new(backend));
        let answers = vec![answer_with("Who funds X?", &["doc1"])];
        let report = synthesize_report(&gw, "t", &answers, 50).unwrap();
        assert!(report.flags.contains(&"truncated".to_string()));
        assert!(report.word_count <= 50);
        assert!(report.report_text.ends_with("[1]."));
    }

    #[test]
    fn all_insufficient_answers_flagged_low_evidence() {
        let gw = Gateway::stub();
        let answers = vec![CitedAnswer {
            question: "Who funds X?".into(),
            answer_text: INSUFFICIENT_EVIDENCE.into(),
            citations: vec![],
            flags: vec!["no_evidence".into()],
        }];
        let report = synthesize_report(&gw, "t", &answers, 250).unwrap();
        assert!(report.flags.contains(&"low_evidence".to_string()));
        assert!(report.report_citations.is_empty());
    }

    #[test]
    fn integrity_check_finds_unknown_citation() {
        let report = TrustReport {
            topic_id: "t".into(),
            report_text: "text [1]".into(),
            report_citations: vec!["ghost".into()],
            answers: vec![],
            word_count: 2,
            flags: vec![],
        };
        let dumped: HashSet<String> = ["doc1".to_string()].into_iter().collect();
        let err = verify_citations(&report, &dumped).unwrap_err();
        assert!(matches!(err, Error::CitationIntegrity { doc_id } if doc_id == "ghost"));
    }
}
