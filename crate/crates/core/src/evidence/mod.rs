//! Per-question evidence pipeline: retrieval, re-ranking, relevance
//! judging, domain-trust attachment, filtering and retrieval metrics.

pub mod trust;

use serde::{Deserialize, Serialize};

use crate::analysis::analyze;
use crate::error::{Error, Result};
use crate::expand::QueryPlan;
use crate::gateway::{render, Gateway};
use crate::index::IndexReader;

pub use trust::{load_trust_table, TrustTable, DEFAULT_TRUST};

/// One retrieved document moving through the pipeline stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub doc_id: String,
    pub url: String,
    pub bm25_score: f64,
    /// 1-based rank in the BM25 candidate list.
    pub bm25_rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank_rank: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant: Option<bool>,
    pub trust: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Retrieve the top-k candidates for a query plan.
pub fn retrieve(reader: &IndexReader, plan: &QueryPlan, k: usize) -> Result<Vec<EvidenceItem>> {
    let hits = reader.search(plan, k)?;
    Ok(hits
        .into_iter()
        .enumerate()
        .map(|(i, hit)| {
            let url = reader
                .document(&hit.doc_id)
                .map(|d| d.url.clone())
                .unwrap_or_default();
            EvidenceItem {
                doc_id: hit.doc_id,
                url,
                bm25_score: hit.score,
                bm25_rank: i as u32 + 1,
                rerank_score: None,
                rerank_rank: None,
                relevant: None,
                trust: DEFAULT_TRUST,
                flags: Vec::new(),
            }
        })
        .collect())
}

/// Cross-encoder style relevance scorer interface.
pub trait RelevanceScorer: Send + Sync {
    fn score(&self, question: &str, passage: &str) -> Result<f64>;
}

/// Deterministic stand-in scorer: counts distinct analyzed question tokens
/// present in the passage.
pub struct OverlapScorer;

impl RelevanceScorer for OverlapScorer {
    fn score(&self, question: &str, passage: &str) -> Result<f64> {
        let q: std::collections::HashSet<String> = analyze(question).into_iter().collect();
        let p: std::collections::HashSet<String> = analyze(passage).into_iter().collect();
        Ok(q.intersection(&p).count() as f64)
    }
}

/// Remote cross-encoder over HTTP: `POST {url}/score` with
/// `{"query": ..., "passages": [...]}` returning `{"scores": [...]}`.
pub struct HttpScorer {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpScorer {
    pub fn new(endpoint: impl Into<String>) -> Result<Self> {
        Ok(Self {
            endpoint: endpoint.into(),
            client: reqwest::blocking::Client::builder()
                .timeout(std::time::Duration::from_secs(120))
                .build()
                .map_err(|e| Error::Transport {
                    status: None,
                    message: e.to_string(),
                })?,
        })
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    query: &'a str,
    passages: Vec<&'a str>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

impl RelevanceScorer for HttpScorer {
    fn score(&self, question: &str, passage: &str) -> Result<f64> {
        let url = format!("{}/score", self.endpoint.trim_end_matches('/'));
        let resp = self
            .client
            .post(&url)
            .json(&ScoreRequest {
                query: question,
                passages: vec![passage],
            })
            .send()
            .map_err(|e| Error::Transport {
                status: None,
                message: e.to_string(),
            })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::Transport {
                status: Some(status.as_u16()),
                message: "scorer request failed".into(),
            });
        }
        let parsed: ScoreResponse = resp.json().map_err(|e| Error::Transport {
            status: Some(status.as_u16()),
            message: e.to_string(),
        })?;
        parsed
            .scores
            .first()
            .copied()
            .ok_or_else(|| Error::Transport {
                status: Some(status.as_u16()),
                message: "scorer returned no scores".into(),
            })
    }
}

/// Re-rank items by scorer output (descending), ties broken by ascending
/// BM25 rank. Items whose scoring fails after one retry keep their BM25
/// order at the tail, flagged and without a re-rank position.
pub fn rerank(
    question: &str,
    items: Vec<(EvidenceItem, String)>,
    scorer: &dyn RelevanceScorer,
) -> Vec<EvidenceItem> {
    let mut scored: Vec<EvidenceItem> = Vec::new();
    let mut failed: Vec<EvidenceItem> = Vec::new();
    for (mut item, passage) in items {
        let score = scorer
            .score(question, &passage)
            .or_else(|_| scorer.score(question, &passage));
        match score {
            Ok(s) => {
                item.rerank_score = Some(s);
                scored.push(item);
            }
            Err(_) => {
                item.flags.push("rerank_failed".to_string());
                failed.push(item);
            }
        }
    }
    scored.sort_by(|a, b| {
        b.rerank_score
            .partial_cmp(&a.rerank_score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.bm25_rank.cmp(&b.bm25_rank))
    });
    for (i, item) in scored.iter_mut().enumerate() {
        item.rerank_rank = Some(i as u32 + 1);
    }
    failed.sort_by_key(|item| item.bm25_rank);
    scored.extend(failed);
    scored
}

/// Binary LLM relevance judgment. Returns `(relevant, flagged)`; an
/// unparseable response after one retry is conservatively not relevant.
pub fn judge_relevance(
    gateway: &Gateway,
    question: &str,
    doc_title: &str,
    doc_body: &str,
) -> Result<(bool, bool)> {
    let req = render(
        "relevance_judge",
        &[
            ("question", question),
            ("title", doc_title),
            ("body", doc_body),
        ],
    )?;
    for _attempt in 0..2 {
        let response = gateway.chat(&req)?;
        match parse_judgment(&response) {
            Some(verdict) => return Ok((verdict, false)),
            None => continue,
        }
    }
    Ok((false, true))
}

/// Parse a leading RELEVANT / NOT RELEVANT verdict, case-insensitively.
pub fn parse_judgment(response: &str) -> Option<bool> {
    let upper = response.trim_start().to_uppercase();
    if upper.starts_with("NOT RELEVANT") {
        Some(false)
    } else if upper.starts_with("RELEVANT") {
        Some(true)
    } else {
        None
    }
}

/// Attach domain-trust scores to every item.
pub fn attach_trust(items: &mut [EvidenceItem], table: &TrustTable) {
    for item in items {
        let (score, flagged) = table.trust_of(&item.url);
        item.trust = score;
        if flagged {
            item.flags.push("trust_url_unparseable".to_string());
        }
    }
}

/// Scan re-ranked items within the top `window`, lazily judging relevance
/// via `ensure_judged`, and return the first `quota` relevant items in
/// order. When fewer than `quota` qualify, all qualifying items within the
/// window are returned.
pub fn filter_top_relevant(
    items: &mut [EvidenceItem],
    mut ensure_judged: impl FnMut(usize, &mut EvidenceItem) -> bool,
    quota: usize,
    window: usize,
) -> Vec<EvidenceItem> {
    let mut kept = Vec::new();
    for i in 0..items.len().min(window) {
        if kept.len() >= quota {
            break;
        }
        let relevant = match items[i].relevant {
            Some(r) => r,
            None => ensure_judged(i, &mut items[i]),
        };
        if relevant {
            kept.push(items[i].clone());
        }
    }
    kept
}

/// As [`filter_top_relevant`], additionally requiring a domain trust score
/// of at least `threshold` (inclusive). Items below the trust threshold
/// are skipped without judging.
pub fn filter_top_trusted(
    items: &mut [EvidenceItem],
    mut ensure_judged: impl FnMut(usize, &mut EvidenceItem) -> bool,
    threshold: f64,
    quota: usize,
    window: usize,
) -> Vec<EvidenceItem> {
    let mut kept = Vec::new();
    for i in 0..items.len().min(window) {
        if kept.len() >= quota {
            break;
        }
        if items[i].trust < threshold {
            continue;
        }
        let relevant = match items[i].relevant {
            Some(r) => r,
            None => ensure_judged(i, &mut items[i]),
        };
        if relevant {
            kept.push(items[i].clone());
        }
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    PreRerank,
    PostRerank,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::PreRerank => "pre_rerank",
            Stage::PostRerank => "post_rerank",
        })
    }
}

/// Top-10 retrieval quality for one stage's ordering.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RetrievalMetrics {
    pub stage: Stage,
    /// Proportion of the top min(10, n) items judged relevant.
    pub relevance_at_10: f64,
    pub mean_trust_at_10: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flagged_empty: bool,
}

/// Compute stage metrics over the top min(10, n) items of `items`, which
/// must already be in the stage's ordering with relevance judged for that
/// prefix.
pub fn compute_metrics(items: &[EvidenceItem], stage: Stage) -> RetrievalMetrics {
    let m = items.len().min(10);
    if m == 0 {
        return RetrievalMetrics {
            stage,
            relevance_at_10: 0.0,
            mean_trust_at_10: 0.0,
            flagged_empty: true,
        };
    }
    let top = &items[..m];
    let relevant = top.iter().filter(|i| i.relevant == Some(true)).count();
    let trust_sum: f64 = top.iter().map(|i| i.trust).sum();
    RetrievalMetrics {
        stage,
        relevance_at_10: relevant as f64 / m as f64,
        mean_trust_at_10: trust_sum / m as f64,
        flagged_empty: false,
    }
}

/// Post-minus-pre metric deltas.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricsDelta {
    pub relevance: f64,
    pub trust: f64,
}

pub fn metrics_delta(post: &RetrievalMetrics, pre: &RetrievalMetrics) -> MetricsDelta {
    MetricsDelta {
        relevance: post.relevance_at_10 - pre.relevance_at_10,
        trust: post.mean_trust_at_10 - pre.mean_trust_at_10,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(doc_id: &str, bm25_rank: u32) -> EvidenceItem {
        EvidenceItem {
            doc_id: doc_id.into(),
            url: format!("https://example.com/{doc_id}"),
            bm25_score: 100.0 - bm25_rank as f64,
            bm25_rank,
            rerank_score: None,
            rerank_rank: None,
            relevant: None,
            trust: 0.0,
            flags: Vec::new(),
        }
    }

    struct FailingScorer;

    impl RelevanceScorer for FailingScorer {
        fn score(&self, _q: &str, passage: &str) -> Result<f64> {
            if passage.contains("poison") {
                Err(Error::Transport {
                    status: Some(500),
                    message: "boom".into(),
                })
            } else {
                Ok(passage.len() as f64)
            }
        }
    }

    #[test]
    fn rerank_orders_by_overlap() {
        let items = vec![
            (item("d1", 1), "zebra migration".to_string()),
            (item("d2", 2), "publisher funding disclosure".to_string()),
        ];
        let ranked = rerank("who funds the publisher", items, &OverlapScorer);
        assert_eq!(ranked[0].doc_id, "d2");
        assert_eq!(ranked[0].rerank_rank, Some(1));
        assert_eq!(ranked[1].doc_id, "d1");
        assert_eq!(ranked[1].rerank_rank, Some(2));
    }

    #[test]
    fn equal_scores_keep_bm25_order() {
        let items = vec![
            (item("d3", 3), "same text".to_string()),
            (item("d1", 1), "same text".to_string()),
            (item("d2", 2), "same text".to_string()),
        ];
        let ranked = rerank("unrelated question", items, &OverlapScorer);
        let ids: Vec<&str> = ranked.iter().map(|i| i.doc_id.as_str()).collect();
        assert_eq!(ids, ["d1", "d2", "d3"]);
    }

    #[test]
    fn scorer_failure_goes_to_tail_flagged() {
        let items = vec![
            (item("d1", 1), "poison passage".to_string()),
            (item("d2", 2), "good passage".to_string()),
        ];
        let ranked = rerank("q", items, &FailingScorer);
        assert_eq!(ranked[0].doc_id, "d2");
        assert_eq!(ranked[1].doc_id, "d1");
        assert_eq!(ranked[1].rerank_rank, None);
        assert!(ranked[1].flags.contains(&"rerank_failed".to_string()));
    }

    #[test]
    fn rerank_is_a_permutation() {
        let items: Vec<(EvidenceItem, String)> = (1..=20)
            .map(|i| (item(&format!("d{i}"), i), format!("text {}", i % 3)))
            .collect();
        let mut before: Vec<String> = items.iter().map(|(i, _)| i.doc_id.clone()).collect();
        let ranked = rerank("text", items, &OverlapScorer);
        let mut after: Vec<String> = ranked.iter().map(|i| i.doc_id.clone()).collect();
        before.sort();
        after.sort();
        assert_eq!(before, after);
    }

    #[test]
    fn judgment_parsing() {
        assert_eq!(parse_judgment("RELEVANT - discusses funding"), Some(true));
        assert_eq!(parse_judgment("not relevant"), Some(false));
        assert_eq!(parse_judgment("  Relevant."), Some(true));
        assert_eq!(parse_judgment("maybe"), None);
    }

    #[test]
    fn unparseable_judge_is_false_with_flag() {
        let backend = crate::gateway::live::ScriptedBackend::new(["maybe", "maybe"]);
        let gw = Gateway::with_backend(Box::new(backend));
        let (relevant, flagged) = judge_relevance(&gw, "q", "t", "b").unwrap();
        assert!(!relevant);
        assert!(flagged);
    }

    fn no_judge(_: usize, _: &mut EvidenceItem) -> bool {
        panic!("judge must not be called for pre-judged items")
    }

    #[test]
    fn relevant_filter_takes_first_quota_in_order() {
        let mut items: Vec<EvidenceItem> = (1..=100)
            .map(|i| {
                let mut it = item(&format!("d{i:03}"), i);
                it.rerank_rank = Some(i);
                it.relevant = Some((3..=12).contains(&i));
                it
            })
            .collect();
        let kept = filter_top_relevant(&mut items, no_judge, 10, 100);
        let ids: Vec<&str> = kept.iter().map(|i| i.doc_id.as_str()).collect();
        let expected: Vec<String> = (3..=12).map(|i| format!("d{i:03}")).collect();
        assert_eq!(ids, expected.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn fewer_than_quota_returns_all_qualifying() {
        let mut items: Vec<EvidenceItem> = (1..=100)
            .map(|i| {
                let mut it = item(&format!("d{i:03}"), i);
                it.relevant = Some(i % 25 == 0); // 4 relevant in top 100
                it
            })
            .collect();
        let kept = filter_top_relevant(&mut items, no_judge, 10, 100);
        assert_eq!(kept.len(), 4);
    }

    #[test]
    fn judging_is_lazy() {
        let mut items: Vec<EvidenceItem> = (1..=50).map(|i| item(&format!("d{i:03}"), i)).collect();
        let mut calls = 0usize;
        let kept = filter_top_relevant(
            &mut items,
            |_, it| {
                calls += 1;
                it.relevant = Some(true);
                true
            },
            10,
            100,
        );
        assert_eq!(kept.len(), 10);
        assert_eq!(calls, 10, "lazy filtering judges only until the quota is met");
    }

    #[test]
    fn trusted_filter_threshold_is_inclusive() {
        let mut items: Vec<EvidenceItem> = (1..=5)
            .map(|i| {
                let mut it = item(&format!("d{i}"), i);
                it.relevant = Some(true);
                it.trust = match i {
                    1 => 0.9,
                    2 => 0.8,
                    3 => 0.7,
                    4 => 0.69,
                    _ => 0.0,
                };
                it
            })
            .collect();
        let kept = filter_top_trusted(&mut items, no_judge, 0.7, 3, 100);
        let ids: Vec<&str> = kept.iter().map(|i| i.doc_id.as_str()).collect();
        assert_eq!(ids, ["d1", "d2", "d3"]);
    }

    #[test]
    fn trusted_filter_skips_low_trust_without_judging() {
        let mut items: Vec<EvidenceItem> = (1..=10)
            .map(|i| {
                let mut it = item(&format!("d{i}"), i);
                it.trust = if i == 7 { 0.9 } else { 0.1 };
                it
            })
            .collect();
        let mut judged = Vec::new();
        let kept = filter_top_trusted(
            &mut items,
            |idx, it| {
                judged.push(idx);
                it.relevant = Some(true);
                true
            },
            0.7,
            3,
            100,
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(judged, vec![6]);
    }

    #[test]
    fn metrics_proportions() {
        let items: Vec<EvidenceItem> = (1..=10)
            .map(|i| {
                let mut it = item(&format!("d{i}"), i);
                it.relevant = Some(i <= 7);
                it
            })
            .collect();
        let m = compute_metrics(&items, Stage::PostRerank);
        assert!((m.relevance_at_10 - 0.7).abs() < 1e-12);
        assert_eq!(m.mean_trust_at_10, 0.0);
    }

    #[test]
    fn short_list_uses_min_denominator() {
        let items: Vec<EvidenceItem> = (1..=5)
            .map(|i| {
                let mut it = item(&format!("d{i}"), i);
                it.relevant = Some(true);
                it
            })
            .collect();
        let m = compute_metrics(&items, Stage::PreRerank);
        assert_eq!(m.relevance_at_10, 1.0);
    }

    #[test]
    fn empty_list_metrics_flagged() {
        let m = compute_metrics(&[], Stage::PreRerank);
        assert_eq!(m.relevance_at_10, 0.0);
        assert_eq!(m.mean_trust_at_10, 0.0);
        assert!(m.flagged_empty);
    }
}
