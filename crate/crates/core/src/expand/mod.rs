//! Query planning: turn a critical question into a boolean query AST under
//! one of four expansion strategies.
//!
//! All strategies embed the baseline bag-of-words query; LLM-driven
//! strategies fall back to the baseline plan (with the fallback flag set)
//! when the model output cannot be parsed after one retry.

pub mod dsl;

use serde::{Deserialize, Serialize};

use crate::analysis::analyze;
use crate::error::{Error, Result};
use crate::gateway::{render, Gateway};

/// Maximum AST depth accepted by [`validate`].
pub const MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Baseline,
    Boolean,
    Cot,
    Structured,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Baseline,
        Strategy::Boolean,
        Strategy::Cot,
        Strategy::Structured,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::Boolean => "boolean",
            Strategy::Cot => "cot",
            Strategy::Structured => "structured",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Strategy::Baseline),
            "boolean" => Ok(Strategy::Boolean),
            "cot" => Ok(Strategy::Cot),
            "structured" => Ok(Strategy::Structured),
            other => Err(Error::InvalidArgument(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Field selector for query terms; `All` searches every indexed field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryField {
    Title,
    Headings,
    Body,
    All,
}

/// Boolean query AST. Term text is a single analyzed token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryNode {
    Term {
        field: QueryField,
        text: String,
        boost: f64,
    },
    And(Vec<QueryNode>),
    Or(Vec<QueryNode>),
}

impl QueryNode {
    pub fn term(text: impl Into<String>) -> QueryNode {
        QueryNode::Term {
            field: QueryField::All,
            text: text.into(),
            boost: 1.0,
        }
    }

    /// All term texts in the subtree, in traversal order.
    pub fn term_texts(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            QueryNode::Term { text, .. } => out.push(text),
            QueryNode::And(children) | QueryNode::Or(children) => {
                for c in children {
                    c.collect_terms(out);
                }
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            QueryNode::Term { .. } => 1,
            QueryNode::And(children) | QueryNode::Or(children) => {
                1 + children.iter().map(QueryNode::depth).max().unwrap_or(0)
            }
        }
    }
}

/// Check AST invariants: non-empty boolean nodes, positive finite boosts,
/// non-empty term text, depth within [`MAX_DEPTH`].
pub fn validate(node: &QueryNode) -> Result<()> {
    if node.depth() > MAX_DEPTH {
        return Err(Error::InvalidQuery(format!(
            "query depth {} exceeds {MAX_DEPTH}",
            node.depth()
        )));
    }
    validate_inner(node)
}

fn validate_inner(node: &QueryNode) -> Result<()> {
    match node {
        QueryNode::Term { text, boost, .. } => {
            if text.is_empty() {
                return Err(Error::InvalidQuery("empty term text".into()));
            }
            if !(*boost > 0.0) || !boost.is_finite() {
                return Err(Error::InvalidQuery(format!("boost must be > 0, got {boost}")));
            }
            Ok(())
        }
        QueryNode::And(children) | QueryNode::Or(children) => {
            if children.is_empty() {
                return Err(Error::InvalidQuery("boolean node with no children".into()));
            }
            children.iter().try_for_each(validate_inner)
        }
    }
}

/// A planned query: the AST plus provenance for auditing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryPlan {
    pub strategy: Strategy,
    pub ast: QueryNode,
    pub source_question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion_text: Option<String>,
    /// True when an LLM strategy fell back to the baseline plan.
    #[serde(default)]
    pub fallback: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// How expansion nodes are combined with the baseline query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    Or,
    And,
}

impl Default for Combiner {
    fn default() -> Self {
        Combiner::Or
    }
}

/// Analyzed question tokens, deduplicated in first-occurrence order.
pub fn baseline_tokens(question: &str) -> Result<Vec<String>> {
    let mut seen = std::collections::HashSet::new();
    let tokens: Vec<String> = analyze(question)
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptyQuery);
    }
    Ok(tokens)
}

fn baseline_ast(question: &str) -> Result<QueryNode> {
    let terms: Vec<QueryNode> = baseline_tokens(question)?
        .into_iter()
        .map(QueryNode::term)
        .collect();
    Ok(if terms.len() == 1 {
        terms.into_iter().next().unwrap()
    } else {
        QueryNode::Or(terms)
    })
}

/// Disjunctive bag-of-words plan over the analyzed question tokens.
pub fn plan_baseline(question: &str) -> Result<QueryPlan> {
    Ok(QueryPlan {
        strategy: Strategy::Baseline,
        ast: baseline_ast(question)?,
        source_question: question.to_string(),
        expansion_text: None,
        fallback: false,
        warnings: Vec::new(),
    })
}

/// Node for one expansion keyphrase: a single term, or an `And` group over
/// the phrase's analyzed tokens. Returns `None` for keyphrases that analyze
/// to nothing.
fn keyphrase_node(phrase: &str) -> Option<QueryNode> {
    let tokens = analyze(phrase);
    match tokens.len() {
        0 => None,
        1 => Some(QueryNode::term(tokens.into_iter().next().unwrap())),
        _ => Some(QueryNode::And(
            tokens.into_iter().map(QueryNode::term).collect(),
        )),
    }
}

fn combine(baseline: QueryNode, extra: Vec<QueryNode>, combiner: Combiner) -> QueryNode {
    let mut children = vec![baseline];
    for node in extra {
        if !children.contains(&node) {
            children.push(node);
        }
    }
    if children.len() == 1 {
        return children.pop().unwrap();
    }
    match combiner {
        Combiner::Or => QueryNode::Or(children),
        Combiner::And => QueryNode::And(children),
    }
}

/// Parse expansion keyphrases: one per line, list markers stripped, at most
/// eight kept.
pub fn parse_keyphrases(text: &str) -> Vec<String> {
    text.lines()
        .map(strip_list_marker)
        .map(str::trim)
        .filter(|l| !l.is_empty() && l.len() <= 80 && !l.ends_with(':'))
        .map(str::to_string)
        .take(8)
        .collect()
}

fn strip_list_marker(line: &str) -> &str {
    let trimmed = line.trim_start();
    let trimmed = trimmed
        .strip_prefix(['-', '*', '\u{2022}'])
        .unwrap_or(trimmed);
    let digits = trimmed.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &trimmed[digits..];
        if let Some(rest) = rest.strip_prefix(['.', ')']) {
            return rest;
        }
    }
    trimmed
}

/// Final `TERMS:` line of a chain-of-thought response, split on `;`.
pub fn parse_terms_line(text: &str) -> Option<Vec<String>> {
    let line = text
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix("TERMS:"))?;
    let terms: Vec<String> = line
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .take(8)
        .collect();
    if terms.is_empty() {
        None
    } else {
        Some(terms)
    }
}

fn expansion_plan(
    strategy: Strategy,
    question: &str,
    phrases: &[String],
    raw: String,
    combiner: Combiner,
) -> Result<QueryPlan> {
    let baseline = baseline_ast(question)?;
    let nodes: Vec<QueryNode> = phrases.iter().filter_map(|p| keyphrase_node(p)).collect();
    let ast = combine(baseline, nodes, combiner);
    validate(&ast)?;
    Ok(QueryPlan {
        strategy,
        ast,
        source_question: question.to_string(),
        expansion_text: Some(raw),
        fallback: false,
        warnings: Vec::new(),
    })
}

fn fallback_plan(strategy: Strategy, question: &str, raw: Option<String>, reason: &str) -> Result<QueryPlan> {
    let mut plan = plan_baseline(question)?;
    plan.strategy = strategy;
    plan.fallback = true;
    plan.expansion_text = raw;
    plan.warnings.push(format!("fell back to baseline: {reason}"));
    Ok(plan)
}

/// Boolean expansion: LLM keyphrases are attached to the baseline query
/// under the configured combiner.
pub fn plan_boolean(gateway: &Gateway, question: &str, combiner: Combiner) -> Result<QueryPlan> {
    baseline_tokens(question)?;
    let req = render("boolean_expand", &[("question", question)])?;
    let mut last_raw = String::new();
    for _attempt in 0..2 {
        let raw = gateway.chat(&req)?;
        let phrases = parse_keyphrases(&raw);
        if !phrases.is_empty() {
            return expansion_plan(Strategy::Boolean, question, &phrases, raw, combiner);
        }
        last_raw = raw;
    }
    fallback_plan(
        Strategy::Boolean,
        question,
        Some(last_raw),
        "no parseable keyphrases",
    )
}

/// Chain-of-thought expansion: free-form reasoning with a final
/// `TERMS: t1; t2; ...` line. Only the TERMS line feeds the query.
pub fn plan_cot(gateway: &Gateway, question: &str, combiner: Combiner) -> Result<QueryPlan> {
    baseline_tokens(question)?;
    let req = render("cot_expand", &[("question", question)])?;
    let mut last_raw = String::new();
    for _attempt in 0..2 {
        let raw = gateway.chat(&req)?;
        if let Some(terms) = parse_terms_line(&raw) {
            return expansion_plan(Strategy::Cot, question, &terms, raw, combiner);
        }
        last_raw = raw;
    }
    fallback_plan(Strategy::Cot, question, Some(last_raw), "missing TERMS line")
}

/// Structured expansion: the LLM emits a restricted JSON query DSL object
/// which is validated and mapped onto the AST.
pub fn plan_structured(gateway: &Gateway, question: &str) -> Result<QueryPlan> {
    let tokens = baseline_tokens(question)?;
    let req = render("structured_expand", &[("question", question)])?;
    let mut last_err = String::new();
    let mut last_raw = String::new();
    for _attempt in 0..2 {
        let raw = gateway.chat(&req)?;
        match dsl::parse(&raw) {
            Ok(ast) => {
                let mut plan = QueryPlan {
                    strategy: Strategy::Structured,
                    ast,
                    source_question: question.to_string(),
                    expansion_text: Some(raw),
                    fallback: false,
                    warnings: Vec::new(),
                };
                // The DSL may legitimately restructure the query; record a
                // warning when baseline tokens were dropped.
                let present: std::collections::HashSet<&str> =
                    plan.ast.term_texts().into_iter().collect();
                let missing: Vec<&String> = tokens
                    .iter()
                    .filter(|t| !present.contains(t.as_str()))
                    .collect();
                if !missing.is_empty() {
                    plan.warnings.push(format!(
                        "structured plan drops baseline tokens: {}",
                        missing
                            .iter()
                            .map(|s| s.as_str())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ));
                }
                return Ok(plan);
            }
            Err(e) => {
                last_err = e.to_string();
                last_raw = raw;
            }
        }
    }
    fallback_plan(Strategy::Structured, question, Some(last_raw), &last_err)
}

/// Plan under the given strategy.
pub fn plan(
    gateway: &Gateway,
    strategy: Strategy,
    question: &str,
    combiner: Combiner,
) -> Result<QueryPlan> {
    match strategy {
        Strategy::Baseline => plan_baseline(question),
        Strategy::Boolean => plan_boolean(gateway, question, combiner),
        Strategy::Cot => plan_cot(gateway, question, combiner),
        Strategy::Structured => plan_structured(gateway, question),
    }
}

/// True when every baseline token of the question appears as a term in the
/// plan's AST.
pub fn contains_baseline_tokens(plan: &QueryPlan) -> bool {
    let Ok(tokens) = baseline_tokens(&plan.source_question) else {
        return true;
    };
    let present: std::collections::HashSet<&str> = plan.ast.term_texts().into_iter().collect();
    tokens.iter().all(|t| present.contains(t.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::live::ScriptedBackend;

    #[test]
    fn baseline_strips_stopwords_and_stems() {
        let plan = plan_baseline("Who funds the publisher?").unwrap();
        assert_eq!(
            plan.ast,
            QueryNode::Or(vec![QueryNode::term("fund"), QueryNode::term("publish")])
        );
        assert!(plan.expansion_text.is_none());
        assert!(!plan.fallback);
    }

    #[test]
    fn single_token_collapses_to_term() {
        let plan = plan_baseline("ownership?").unwrap();
        assert_eq!(plan.ast, QueryNode::term("ownership"));
    }

    #[test]
    fn all_stopwords_is_empty_query() {
        assert!(matches!(plan_baseline("the of and"), Err(Error::EmptyQuery)));
    }

    #[test]
    fn boolean_expansion_builds_groups() {
        let backend = ScriptedBackend::new(["editorial policy\nownership"]);
        let gw = Gateway::with_backend(Box::new(backend));
        let plan = plan_boolean(&gw, "Who funds the publisher?", Combiner::Or).unwrap();
        match &plan.ast {
            QueryNode::Or(children) => {
                assert_eq!(children.len(), 3);
                assert_eq!(
                    children[1],
                    QueryNode::And(vec![QueryNode::term("editori"), QueryNode::term("polici")])
                );
                assert_eq!(children[2], QueryNode::term("ownership"));
            }
            other => panic!("expected Or, got {other:?}"),
        }
        assert!(!plan.fallback);
        assert!(contains_baseline_tokens(&plan));
    }

    #[test]
    fn boolean_empty_response_falls_back() {
        let backend = ScriptedBackend::new(["", ""]);
        let gw = Gateway::with_backend(Box::new(backend));
        let plan = plan_boolean(&gw, "Who funds the publisher?", Combiner::Or).unwrap();
        assert!(plan.fallback);
        assert_eq!(plan.strategy, Strategy::Boolean);
        assert_eq!(plan.ast, plan_baseline("Who funds the publisher?").unwrap().ast);
    }

    #[test]
    fn boolean_dedups_repeated_keyphrases() {
        let backend = ScriptedBackend::new(["ownership\nownership\nfunds publisher"]);
        let gw = Gateway::with_backend(Box::new(backend));
        let plan = plan_boolean(&gw, "ownership", Combiner::Or).unwrap();
        // "ownership" keyphrase duplicates the baseline term and is dropped;
        // the multi-word phrase forms one And group.
        match &plan.ast {
            QueryNode::Or(children) => {
                assert_eq!(children.len(), 2);
                assert_eq!(children[0], QueryNode::term("ownership"));
            }
            other => panic!("expected Or, got {other:?}"),
        }
    }

    #[test]
    fn cot_parses_terms_line() {
        let backend =
            ScriptedBackend::new(["step one reasoning\nmore thoughts\nTERMS: funding sources; media ownership"]);
        let gw = Gateway::with_backend(Box::new(backend));
        let plan = plan_cot(&gw, "Who funds the publisher?", Combiner::Or).unwrap();
        match &plan.ast {
            QueryNode::Or(children) => {
                assert_eq!(children.len(), 3);
                assert!(matches!(children[1], QueryNode::And(_)));
                assert!(matches!(children[2], QueryNode::And(_)));
            }
            other => panic!("expected Or, got {other:?}"),
        }
        assert!(plan.expansion_text.as_ref().unwrap().contains("step one"));
    }

    #[test]
    fn cot_missing_terms_line_falls_back() {
        let backend = ScriptedBackend::new(["no terms here", "still none"]);
        let gw = Gateway::with_backend(Box::new(backend));
        let plan = plan_cot(&gw, "Who funds the publisher?", Combiner::Or).unwrap();
        assert!(plan.fallback);
    }

    #[test]
    fn structured_parses_valid_dsl() {
        let backend = ScriptedBackend::new(
            [r#"{"bool":{"must":[{"match":{"title":{"query":"ownership","boost":2.0}}}]}}"#],
        );
        let gw = Gateway::with_backend(Box::new(backend));
        let plan = plan_structured(&gw, "Who owns the outlet?").unwrap();
        assert!(!plan.fallback);
        assert_eq!(
            plan.ast,
            QueryNode::Term {
                field: QueryField::Title,
                text: "ownership".into(),
                boost: 2.0
            }
        );
        // baseline tokens were dropped by the DSL: warning recorded
        assert!(!plan.warnings.is_empty());
    }

    #[test]
    fn structured_bad_json_falls_back_after_retry() {
        let backend = ScriptedBackend::new(["{nope", "{\"bool\":{}}"]);
        let gw = Gateway::with_backend(Box::new(backend));
        let plan = plan_structured(&gw, "Who owns the outlet?").unwrap();
        assert!(plan.fallback);
        assert_eq!(plan.strategy, Strategy::Structured);
    }

    #[test]
    fn ast_serialization_round_trips() {
        let plan = plan_baseline("Who funds the publisher and why?").unwrap();
        let json = serde_json::to_string(&plan.ast).unwrap();
        let back: QueryNode = serde_json::from_str(&json).unwrap();
        assert_eq!(plan.ast, back);
    }

    #[test]
    fn depth_guard_rejects_deep_trees() {
        let mut node = QueryNode::term("a");
        for _ in 0..9 {
            node = QueryNode::And(vec![node]);
        }
        assert!(validate(&node).is_err());
    }

    #[test]
    fn stub_planners_are_deterministic() {
        let gw = Gateway::stub();
        for strategy in Strategy::ALL {
            let a = plan(&gw, strategy, "Who funds the publisher?", Combiner::Or).unwrap();
            let b = plan(&gw, strategy, "Who funds the publisher?", Combiner::Or).unwrap();
            assert_eq!(
                serde_json::to_string(&a.ast).unwrap(),
                serde_json::to_string(&b.ast).unwrap(),
                "strategy {strategy} not deterministic"
            );
        }
    }
}
