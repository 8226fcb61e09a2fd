//! Rubric-based question scoring and quality dashboards.
//!
//! Rubric questions carry importance weights (4 / 2 / 1); each earns its
//! weight times the best similarity points (1 / 0.5 / 0 / 0) among its
//! matched system questions, and the topic score averages those weighted
//! scores. The normalized mode divides by the total weight instead of the
//! rubric count, yielding a [0, 1] score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::Gateway;
use crate::question::QuestionRun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Importance {
    HaveToKnow,
    GoodToKnow,
    NiceToKnow,
}

impl Importance {
    pub fn weight(self) -> f64 {
        match self {
            Importance::HaveToKnow => 4.0,
            Importance::GoodToKnow => 2.0,
            Importance::NiceToKnow => 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RubricEntry {
    pub question: String,
    pub importance: Importance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityLabel {
    VerySimilar,
    Similar,
    Different,
    VeryDifferent,
}

impl SimilarityLabel {
    pub fn points(self) -> f64 {
        match self {
            SimilarityLabel::VerySimilar => 1.0,
            SimilarityLabel::Similar => 0.5,
            SimilarityLabel::Different | SimilarityLabel::VeryDifferent => 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchJudgment {
    pub system_index: usize,
    pub label: SimilarityLabel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityJudgment {
    pub rubric_index: usize,
    pub matches: Vec<MatchJudgment>,
}

/// For each rubric question, the `top_m` most similar system questions by
/// embedding cosine (ties toward the lower system index).
pub fn match_questions(
    gateway: &Gateway,
    rubric: &[RubricEntry],
    system_questions: &[String],
    top_m: usize,
) -> Result<Vec<(usize, Vec<usize>)>> {
    if system_questions.is_empty() {
        return Err(Error::InvalidArgument("no system questions to match".into()));
    }
    if rubric.is_empty() {
        return Ok(Vec::new());
    }
    let rubric_texts: Vec<String> = rubric.iter().map(|r| r.question.clone()).collect();
    let rubric_embs = gateway.embed(&rubric_texts)?;
    let system_embs = gateway.embed(system_questions)?;

    Ok(rubric_embs
        .iter()
        .enumerate()
        .map(|(ri, rr)| {
            let mut scored: Vec<(usize, f64)> = system_embs
                .iter()
                .enumerate()
                .map(|(si, se)| (si, rr.cosine(se)))
                .collect();
            scored.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.0.cmp(&b.0))
            });
            (ri, scored.into_iter().take(top_m).map(|(si, _)| si).collect())
        })
        .collect())
}

/// Weighted rubric score. `normalize` divides by the total weight (range
/// [0, 1]); otherwise the raw mean of weighted scores is returned.
pub fn qgen_score(
    rubric: &[RubricEntry],
    judgments: &[SimilarityJudgment],
    normalize: bool,
) -> Result<f64> {
    if judgments.len() != rubric.len() {
        return Err(Error::InvalidArgument(format!(
            "{} judgments for {} rubric questions",
            judgments.len(),
            rubric.len()
        )));
    }
    let mut seen = vec![false; rubric.len()];
    let mut weighted_sum = 0.0;
    let mut weight_sum = 0.0;
    for judgment in judgments {
        let entry = rubric.get(judgment.rubric_index).ok_or_else(|| {
            Error::InvalidArgument(format!("rubric_index {} out of range", judgment.rubric_index))
        })?;
        if std::mem::replace(&mut seen[judgment.rubric_index], true) {
            return Err(Error::InvalidArgument(format!(
                "duplicate judgment for rubric_index {}",
                judgment.rubric_index
            )));
        }
        let best = judgment
            .matches
            .iter()
            .map(|m| m.label.points())
            .fold(0.0f64, f64::max);
        weighted_sum += entry.weight() * best;
        weight_sum += entry.weight();
    }
    if normalize {
        Ok(if weight_sum == 0.0 { 0.0 } else { weighted_sum / weight_sum })
    } else {
        Ok(weighted_sum / rubric.len() as f64)
    }
}

fn parse_similarity_label(response: &str) -> Option<SimilarityLabel> {
    let upper = response.trim_start().to_uppercase();
    if upper.starts_with("VERY SIMILAR") {
        Some(SimilarityLabel::VerySimilar)
    } else if upper.starts_with("VERY DIFFERENT") {
        Some(SimilarityLabel::VeryDifferent)
    } else if upper.starts_with("SIMILAR") {
        Some(SimilarityLabel::Similar)
    } else if upper.starts_with("DIFFERENT") {
        Some(SimilarityLabel::Different)
    } else {
        None
    }
}

/// Unofficial LLM-judged similarity labels for matched pairs. Unparseable
/// responses are conservatively labeled very_different.
pub fn llm_judgments(
    gateway: &Gateway,
    rubric: &[RubricEntry],
    system_questions: &[String],
    top_m: usize,
) -> Result<Vec<SimilarityJudgment>> {
    let matches = match_questions(gateway, rubric, system_questions, top_m)?;
    matches
        .into_iter()
        .map(|(rubric_index, system_indices)| {
            let judged: Result<Vec<MatchJudgment>> = system_indices
                .into_iter()
                .map(|system_index| {
                    let response = gateway.chat_template(
                        "similarity_judge",
                        &[
                            ("rubric_question", rubric[rubric_index].question.as_str()),
                            ("candidate_question", system_questions[system_index].as_str()),
                        ],
                    )?;
                    Ok(MatchJudgment {
                        system_index,
                        label: parse_similarity_label(&response)
                            .unwrap_or(SimilarityLabel::VeryDifferent),
                    })
                })
                .collect();
            Ok(SimilarityJudgment {
                rubric_index,
                matches: judged?,
            })
        })
        .collect()
}

pub const METRIC_COLUMNS: [&str; 8] = [
    "tfidf_cosine",
    "jaccard",
    "embed_cosine",
    "craap_currency",
    "craap_relevance",
    "craap_authority",
    "craap_accuracy",
    "craap_purpose",
];

#[derive(Debug, Serialize)]
pub struct TopicAggregate {
    pub topic_id: String,
    pub question_count: usize,
    /// Mean per metric column; `None` when no question carried the metric.
    pub means: Vec<Option<f64>>,
}

#[derive(Debug)]
pub struct Dashboard {
    pub topics: Vec<TopicAggregate>,
    /// Pearson correlations between metric columns; `None` for undefined
    /// cells (fewer than two samples or zero variance).
    pub correlations: Vec<Vec<Option<f64>>>,
}

fn metric_values(q: &crate::question::Question) -> Vec<Option<f64>> {
    match &q.quality {
        None => vec![None; METRIC_COLUMNS.len()],
        Some(m) => {
            let craap = |f: fn(&crate::question::CraapScores) -> u8| {
                m.craap.as_ref().map(|c| f(c) as f64)
            };
            vec![
                Some(m.tfidf_cosine),
                Some(m.jaccard),
                Some(m.embed_cosine),
                craap(|c| c.currency),
                craap(|c| c.relevance),
                craap(|c| c.authority),
                craap(|c| c.accuracy),
                craap(|c| c.purpose),
            ]
        }
    }
}

/// Pearson correlation; `None` when undefined.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

/// Build per-topic aggregates and the metric correlation matrix for a
/// question run.
pub fn quality_dashboard(run: &QuestionRun) -> Dashboard {
    let n_cols = METRIC_COLUMNS.len();
    let mut topics = Vec::new();
    let mut all_rows: Vec<Vec<Option<f64>>> = Vec::new();

    for topic in run {
        let rows: Vec<Vec<Option<f64>>> =
            topic.questions.iter().map(metric_values).collect();
        let mut means = Vec::with_capacity(n_cols);
        for c in 0..n_cols {
            let values: Vec<f64> = rows.iter().filter_map(|r| r[c]).collect();
            means.push(if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            });
        }
        topics.push(TopicAggregate {
            topic_id: topic.topic_id.clone(),
            question_count: topic.questions.len(),
            means,
        });
        all_rows.extend(rows);
    }

    let mut correlations = vec![vec![None; n_cols]; n_cols];
    for a in 0..n_cols {
        for b in 0..n_cols {
            let pairs: Vec<(f64, f64)> = all_rows
                .iter()
                .filter_map(|r| Some((r[a]?, r[b]?)))
                .collect();
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            correlations[a][b] = pearson(&xs, &ys);
        }
    }

    Dashboard {
        topics,
        correlations,
    }
}

impl Dashboard {
    pub fn aggregates_csv(&self) -> String {
        let mut out = String::from("topic_id,question_count");
        for c in METRIC_COLUMNS {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for t in &self.topics {
            out.push_str(&t.topic_id);
            out.push_str(&format!(",{}", t.question_count));
            for m in &t.means {
                match m {
                    Some(v) => out.push_str(&format!(",{v:.6}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn correlations_csv(&self) -> String {
        let mut out = String::from("metric");
        for c in METRIC_COLUMNS {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (a, row) in self.correlations.iter().enumerate() {
            out.push_str(METRIC_COLUMNS[a]);
            for cell in row {
                match cell {
                    Some(v) => out.push_str(&format!(",{v:.6}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("Question quality by topic\n");
        for t in &self.topics {
            out.push_str(&format!("  {} ({} questions):", t.topic_id, t.question_count));
            for (c, m) in METRIC_COLUMNS.iter().zip(&t.means) {
                match m {
                    Some(v) => out.push_str(&format!(" {c}={v:.3}")),
                    None => out.push_str(&format!(" {c}=-")),
                }
            }
            out.push('\n');
        }
        out.push_str("Metric correlations (Pearson)\n");
        for (a, row) in self.correlations.iter().enumerate() {
            out.push_str(&format!("  {:>16}:", METRIC_COLUMNS[a]));
            for cell in row {
                match cell {
                    Some(v) => out.push_str(&format!(" {v:+.2}")),
                    None => out.push_str("     -"),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rubric(entries: &[(&str, Importance)]) -> Vec<RubricEntry> {
        entries
            .iter()
            .map(|(q, i)| RubricEntry {
                question: q.to_string(),
                importance: *i,
            })
            .collect()
    }

    fn judgment(rubric_index: usize, labels: &[SimilarityLabel]) -> SimilarityJudgment {
        SimilarityJudgment {
            rubric_index,
            matches: labels
                .iter()
                .enumerate()
                .map(|(i, &label)| MatchJudgment {
                    system_index: i,
                    label,
                })
                .collect(),
        }
    }

    #[test]
    fn worked_example() {
        let r = rubric(&[
            ("Who funds the outlet?", Importance::HaveToKnow),
            ("What corrections exist?", Importance::GoodToKnow),
        ]);
        let judgments = vec![
            judgment(0, &[SimilarityLabel::VerySimilar]),
            judgment(1, &[SimilarityLabel::Similar]),
        ];
        let raw = qgen_score(&r, &judgments, false).unwrap();
        let normalized = qgen_score(&r, &judgments, true).unwrap();
        assert!((raw - 2.5).abs() < 1e-9);
        assert!((normalized - 5.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn all_very_different_scores_zero() {
        let r = rubric(&[
            ("a?", Importance::HaveToKnow),
            ("b?", Importance::NiceToKnow),
        ]);
        let judgments = vec![
            judgment(0, &[SimilarityLabel::VeryDifferent]),
            judgment(1, &[SimilarityLabel::VeryDifferent]),
        ];
        assert_eq!(qgen_score(&r, &judgments, false).unwrap(), 0.0);
        assert_eq!(qgen_score(&r, &judgments, true).unwrap(), 0.0);
    }

    #[test]
    fn all_very_similar_normalizes_to_one() {
        let r = rubric(&[
            ("a?", Importance::HaveToKnow),
            ("b?", Importance::GoodToKnow),
            ("c?", Importance::NiceToKnow),
        ]);
        let judgments = vec![
            judgment(0, &[SimilarityLabel::VerySimilar]),
            judgment(1, &[SimilarityLabel::VerySimilar]),
            judgment(2, &[SimilarityLabel::VerySimilar]),
        ];
        assert!((qgen_score(&r, &judgments, true).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn best_match_wins() {
        let r = rubric(&[("a?", Importance::HaveToKnow)]);
        let judgments = vec![judgment(
            0,
            &[SimilarityLabel::Different, SimilarityLabel::Similar],
        )];
        assert!((qgen_score(&r, &judgments, false).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn count_mismatch_is_error() {
        let r = rubric(&[("a?", Importance::HaveToKnow)]);
        assert!(qgen_score(&r, &[], false).is_err());
    }

    #[test]
    fn duplicate_rubric_index_is_error() {
        let r = rubric(&[
            ("a?", Importance::HaveToKnow),
            ("b?", Importance::GoodToKnow),
        ]);
        let judgments = vec![
            judgment(0, &[SimilarityLabel::Similar]),
            judgment(0, &[SimilarityLabel::Similar]),
        ];
        assert!(qgen_score(&r, &judgments, false).is_err());
    }

    #[test]
    fn upgrading_a_label_never_decreases_score() {
        let r = rubric(&[
            ("a?", Importance::HaveToKnow),
            ("b?", Importance::NiceToKnow),
        ]);
        let ladder = [
            SimilarityLabel::VeryDifferent,
            SimilarityLabel::Different,
            SimilarityLabel::Similar,
            SimilarityLabel::VerySimilar,
        ];
        let mut prev = -1.0;
        for label in ladder {
            let judgments = vec![
                judgment(0, &[label]),
                judgment(1, &[SimilarityLabel::Different]),
            ];
            let score = qgen_score(&r, &judgments, true).unwrap();
            assert!(score >= prev);
            prev = score;
        }
    }

    #[test]
    fn verbatim_question_matches_itself() {
        let gw = Gateway::stub();
        let r = rubric(&[("Who funds the publisher?", Importance::HaveToKnow)]);
        let system = vec![
            "Unrelated zebra question?".to_string(),
            "Who funds the publisher?".to_string(),
        ];
        let matches = match_questions(&gw, &r, &system, 1).unwrap();
        assert_eq!(matches[0].1, vec![1]);
    }

    #[test]
    fn top_m_returns_all_sorted() {
        let gw = Gateway::stub();
        let r = rubric(&[("Who funds the publisher?", Importance::HaveToKnow)]);
        let system = vec![
            "Who funds the publisher?".to_string(),
            "Totally different zebra topic?".to_string(),
        ];
        let matches = match_questions(&gw, &r, &system, 2).unwrap();
        assert_eq!(matches[0].1, vec![0, 1]);
    }

    #[test]
    fn pearson_hand_computed() {
        // (1,2), (2,4), (3,5): r = 0.981980...
        let xs = [1.0, 2.0, 3.0];
        let ys = [2.0, 4.0, 5.0];
        let r = pearson(&xs, &ys).unwrap();
        let expected = 3.0 / (2.0f64.sqrt() * (14.0f64 / 3.0).sqrt());
        assert!((r - expected).abs() < 1e-12);
    }

    #[test]
    fn pearson_identical_columns_is_one() {
        let xs = [0.3, 0.5, 0.9];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_constant_column_undefined() {
        assert!(pearson(&[1.0, 1.0, 1.0], &[0.1, 0.5, 0.9]).is_none());
    }
}
