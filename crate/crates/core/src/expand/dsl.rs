//! Restricted JSON query DSL: `bool` / `must` / `should` / `match` /
//! `boost` only. Parsed output maps onto [`QueryNode`]: `must` becomes
//! `And`, `should` becomes `Or`, and each `match` leaf becomes the analyzed
//! token sequence for its field (an `And` group when multi-token).

use serde_json::Value;

use crate::analysis::analyze;
use crate::error::{Error, Result};
use crate::expand::{QueryField, QueryNode};

fn violation(msg: impl Into<String>) -> Error {
    Error::InvalidQuery(msg.into())
}

/// Strip optional Markdown code fences around a JSON payload.
pub fn strip_code_fences(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    let rest = rest.trim_start_matches(['\r', '\n']);
    rest.strip_suffix("```").map(str::trim_end).unwrap_or(rest)
}

/// Parse and validate a DSL object, producing a query AST.
pub fn parse(text: &str) -> Result<QueryNode> {
    let value: Value = serde_json::from_str(strip_code_fences(text))
        .map_err(|e| violation(format!("not valid JSON: {e}")))?;
    let node = parse_clause(&value)?;
    super::validate(&node)?;
    Ok(node)
}

fn parse_clause(value: &Value) -> Result<QueryNode> {
    let obj = value
        .as_object()
        .ok_or_else(|| violation("clause must be an object"))?;
    if obj.len() != 1 {
        return Err(violation("clause must have exactly one key"));
    }
    let (key, inner) = obj.iter().next().unwrap();
    match key.as_str() {
        "bool" => parse_bool(inner),
        "match" => parse_match(inner),
        other => Err(violation(format!("unsupported clause {other:?}"))),
    }
}

fn parse_bool(value: &Value) -> Result<QueryNode> {
    let obj = value
        .as_object()
        .ok_or_else(|| violation("bool must be an object"))?;
    for key in obj.keys() {
        if key != "must" && key != "should" {
            return Err(violation(format!("unsupported bool key {key:?}")));
        }
    }
    let must = parse_clause_array(obj.get("must"))?;
    let should = parse_clause_array(obj.get("should"))?;
    match (must.is_empty(), should.is_empty()) {
        (true, true) => Err(violation("bool has no must or should clauses")),
        (false, true) => Ok(collapse(QueryNode::And(must))),
        (true, false) => Ok(collapse(QueryNode::Or(should))),
        (false, false) => {
            let mut children = must;
            children.push(collapse(QueryNode::Or(should)));
            Ok(QueryNode::And(children))
        }
    }
}

fn parse_clause_array(value: Option<&Value>) -> Result<Vec<QueryNode>> {
    match value {
        None => Ok(Vec::new()),
        Some(Value::Array(items)) => items.iter().map(parse_clause).collect(),
        Some(_) => Err(violation("must/should must be arrays")),
    }
}

fn parse_match(value: &Value) -> Result<QueryNode> {
    let obj = value
        .as_object()
        .ok_or_else(|| violation("match must be an object"))?;
    if obj.len() != 1 {
        return Err(violation("match must have exactly one field"));
    }
    let (field_name, spec) = obj.iter().next().unwrap();
    let field = match field_name.as_str() {
        "title" => QueryField::Title,
        "headings" => QueryField::Headings,
        "body" => QueryField::Body,
        // unknown fields fall back to searching all fields
        _ => QueryField::All,
    };
    let (query, boost) = match spec {
        Value::String(s) => (s.clone(), 1.0),
        Value::Object(m) => {
            for key in m.keys() {
                if key != "query" && key != "boost" {
                    return Err(violation(format!("unsupported match key {key:?}")));
                }
            }
            let query = m
                .get("query")
                .and_then(Value::as_str)
                .ok_or_else(|| violation("match needs a string \"query\""))?
                .to_string();
            let boost = match m.get("boost") {
                None => 1.0,
                Some(b) => b
                    .as_f64()
                    .ok_or_else(|| violation("boost must be a number"))?,
            };
            (query, boost)
        }
        _ => return Err(violation("match field spec must be a string or object")),
    };
    if !(boost > 0.0) || !boost.is_finite() {
        return Err(violation(format!("boost must be > 0, got {boost}")));
    }
    let tokens = analyze(&query);
    if tokens.is_empty() {
        return Err(violation(format!("match query {query:?} analyzes to no tokens")));
    }
    let terms: Vec<QueryNode> = tokens
        .into_iter()
        .map(|text| QueryNode::Term { field, text, boost })
        .collect();
    Ok(collapse(QueryNode::And(terms)))
}

fn collapse(node: QueryNode) -> QueryNode {
    match node {
        QueryNode::And(mut c) | QueryNode::Or(mut c) if c.len() == 1 => c.pop().unwrap(),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn must_maps_to_and() {
        let node = parse(
            r#"{"bool":{"must":[{"match":{"title":{"query":"ownership","boost":2.0}}}]}}"#,
        )
        .unwrap();
        assert_eq!(
            node,
            QueryNode::Term {
                field: QueryField::Title,
                text: "ownership".into(),
                boost: 2.0
            }
        );
    }

    #[test]
    fn empty_bool_is_invalid() {
        assert!(parse(r#"{"bool":{}}"#).is_err());
    }

    #[test]
    fn zero_boost_is_invalid() {
        let err = parse(
            r#"{"bool":{"must":[{"match":{"title":{"query":"ownership","boost":0}}}]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidQuery(_)));
    }

    #[test]
    fn unknown_field_maps_to_all() {
        let node =
            parse(r#"{"bool":{"should":[{"match":{"abstract":{"query":"funding"}}}]}}"#).unwrap();
        assert_eq!(
            node,
            QueryNode::Term {
                field: QueryField::All,
                text: "fund".into(),
                boost: 1.0
            }
        );
    }

    #[test]
    fn multi_token_query_becomes_and_group() {
        let node =
            parse(r#"{"bool":{"must":[{"match":{"body":{"query":"editorial policy"}}}]}}"#)
                .unwrap();
        match node {
            QueryNode::And(children) => {
                assert_eq!(children.len(), 2);
                assert_eq!(
                    children[0],
                    QueryNode::Term {
                        field: QueryField::Body,
                        text: "editori".into(),
                        boost: 1.0
                    }
                );
            }
            other => panic!("expected And, got {other:?}"),
        }
    }

    #[test]
    fn code_fences_are_stripped() {
        let node = parse("```json\n{\"bool\":{\"must\":[{\"match\":{\"body\":\"funding\"}}]}}\n```").unwrap();
        assert_eq!(
            node,
            QueryNode::Term {
                field: QueryField::Body,
                text: "fund".into(),
                boost: 1.0
            }
        );
    }

    #[test]
    fn stopword_only_query_is_invalid() {
        assert!(parse(r#"{"bool":{"must":[{"match":{"body":"the of and"}}]}}"#).is_err());
    }
}
