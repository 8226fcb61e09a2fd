//! Persistent inverted index with BM25 scoring over boolean query plans.
//!
//! Ingestion is single-writer and deterministic: the same corpus always
//! produces byte-identical index files. An opened index is immutable and
//! can be shared freely across threads.

mod storage;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::analyze;
use crate::error::{Error, Result};
use crate::expand::{QueryField, QueryNode, QueryPlan};

pub use storage::{FORMAT_NAME, FORMAT_VERSION};

/// One corpus segment: the unit of retrieval.
///
/// Serialized form matches the corpus JSONL schema (`docid`, `url`,
/// `title`, `headings`, `segment`); unknown keys are ignored on read.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Document {
    #[serde(rename = "docid")]
    pub doc_id: String,
    pub url: String,
    pub title: String,
    pub headings: String,
    #[serde(rename = "segment")]
    pub body: String,
}

impl Document {
    pub fn field_text(&self, field: Field) -> &str {
        match field {
            Field::Title => &self.title,
            Field::Headings => &self.headings,
            Field::Body => &self.body,
        }
    }
}

/// Indexed document fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Headings,
    Body,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Title, Field::Headings, Field::Body];

    pub fn ordinal(self) -> usize {
        match self {
            Field::Title => 0,
            Field::Headings => 1,
            Field::Body => 2,
        }
    }

    fn from_byte(b: u8) -> Option<Field> {
        match b {
            0 => Some(Field::Title),
            1 => Some(Field::Headings),
            2 => Some(Field::Body),
            _ => None,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Field::Title => "title",
            Field::Headings => "headings",
            Field::Body => "body",
        };
        f.write_str(name)
    }
}

/// A single posting: term occurrence counts for one (document, field) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub ordinal: u32,
    pub field: Field,
    pub tf: u32,
}

/// Postings for one analyzed term, sorted by (ordinal, field).
#[derive(Debug, Clone)]
pub struct PostingList {
    pub term: String,
    /// Number of distinct documents containing the term in any field.
    pub df: u32,
    pub postings: Vec<Posting>,
}

/// Corpus-level statistics needed for BM25.
#[derive(Debug, Clone)]
pub struct IndexStats {
    pub doc_count: usize,
    /// Average token count per field (title, headings, body).
    pub avg_field_len: [f64; 3],
    pub doc_freq: BTreeMap<String, u32>,
}

/// BM25 parameters; `field_weights` scale per-field contributions.
#[derive(Debug, Clone)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    pub field_weights: [f64; 3],
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            field_weights: [1.0, 1.0, 1.0],
        }
    }
}

/// IDF with the +1 inside the logarithm: non-negative by construction.
pub fn idf(doc_count: usize, doc_freq: u32) -> f64 {
    let n = doc_count as f64;
    let df = doc_freq as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Single-term, single-field BM25 contribution.
pub fn bm25_term_score(idf: f64, tf: u32, len: u32, avg_len: f64, k1: f64, b: f64) -> f64 {
    if tf == 0 || avg_len <= 0.0 {
        return 0.0;
    }
    let tf = tf as f64;
    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len as f64 / avg_len))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Skip malformed JSONL lines instead of failing on the first one.
    pub lenient: bool,
}

#[derive(Debug)]
pub struct IngestReport {
    pub stats: IndexStats,
    pub skipped: usize,
}

/// Build a persistent index from a corpus JSONL file.
///
/// Duplicate `doc_id`s are always an error; malformed lines are an error in
/// strict mode and counted in `skipped` in lenient mode.
pub fn ingest(corpus_path: &Path, index_path: &Path, options: IngestOptions) -> Result<IngestReport> {
    let file = File::open(corpus_path)?;
    let reader = BufReader::new(file);

    let mut docs: Vec<Document> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut skipped = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = match serde_json::from_str(&line) {
            Ok(d) => d,
            Err(e) => {
                if options.lenient {
                    skipped += 1;
                    continue;
                }
                return Err(Error::Corpus {
                    line: lineno + 1,
                    message: e.to_string(),
                });
            }
        };
        if doc.doc_id.is_empty() {
            if options.lenient {
                skipped += 1;
                continue;
            }
            return Err(Error::Corpus {
                line: lineno + 1,
                message: "empty docid".into(),
            });
        }
        if seen.insert(doc.doc_id.clone(), docs.len()).is_some() {
            return Err(Error::DuplicateDocId(doc.doc_id));
        }
        docs.push(doc);
    }

    // term -> (ordinal, field) -> tf, in deterministic order
    let mut terms: BTreeMap<String, BTreeMap<(u32, Field), u32>> = BTreeMap::new();
    let mut lens: Vec<[u32; 3]> = Vec::with_capacity(docs.len());
    let mut totals = [0u64; 3];

    for (ordinal, doc) in docs.iter().enumerate() {
        let ordinal = ordinal as u32;
        let mut doc_lens = [0u32; 3];
        for field in Field::ALL {
            let tokens = analyze(doc.field_text(field));
            doc_lens[field.ordinal()] = tokens.len() as u32;
            totals[field.ordinal()] += tokens.len() as u64;
            for token in tokens {
                *terms.entry(token).or_default().entry((ordinal, field)).or_insert(0) += 1;
            }
        }
        lens.push(doc_lens);
    }

    std::fs::create_dir_all(index_path)?;

    let mut docs_out = Vec::new();
    for doc in &docs {
        serde_json::to_writer(&mut docs_out, doc)?;
        docs_out.push(b'\n');
    }
    storage::write_atomic(&index_path.join("docs.jsonl"), &docs_out)?;

    let mut lens_out = storage::BinWriter::new(storage::DOCLENS_MAGIC);
    lens_out.u32(docs.len() as u32);
    for dl in &lens {
        for &l in dl {
            lens_out.u32(l);
        }
    }
    storage::write_atomic(&index_path.join("doclens.bin"), &lens_out.finish())?;

    let mut post_out = storage::BinWriter::new(storage::POSTINGS_MAGIC);
    post_out.u32(terms.len() as u32);
    let mut doc_freq = BTreeMap::new();
    for (term, occurrences) in &terms {
        let mut doc_ids: Vec<u32> = occurrences.keys().map(|(o, _)| *o).collect();
        doc_ids.dedup();
        let df = doc_ids.len() as u32;
        doc_freq.insert(term.clone(), df);

        post_out.u16(term.len() as u16);
        post_out.bytes(term.as_bytes());
        post_out.u32(df);
        post_out.u32(occurrences.len() as u32);
        for (&(ordinal, field), &tf) in occurrences {
            post_out.u32(ordinal);
            post_out.u8(field.ordinal() as u8);
            post_out.u32(tf);
        }
    }
    storage::write_atomic(&index_path.join("postings.bin"), &post_out.finish())?;

    let meta = storage::Meta {
        format: storage::FORMAT_NAME.to_string(),
        version: storage::FORMAT_VERSION,
        doc_count: docs.len() as u32,
        total_field_tokens: totals,
        skipped_lines: skipped as u32,
    };
    storage::write_atomic(
        &index_path.join("meta.json"),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )?;

    let doc_count = docs.len();
    Ok(IngestReport {
        stats: IndexStats {
            doc_count,
            avg_field_len: average_lens(&totals, doc_count),
            doc_freq,
        },
        skipped,
    })
}

fn average_lens(totals: &[u64; 3], doc_count: usize) -> [f64; 3] {
    if doc_count == 0 {
        return [0.0; 3];
    }
    let n = doc_count as f64;
    [
        totals[0] as f64 / n,
        totals[1] as f64 / n,
        totals[2] as f64 / n,
    ]
}

/// A search hit: document id plus its score under the query plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub score: f64,
}

struct TermEntry {
    df: u32,
    postings: Vec<Posting>,
}

/// Read-only view of a persisted index. Immutable and shareable; search is
/// reentrant.
pub struct IndexReader {
    docs: Vec<Document>,
    ordinals: HashMap<String, u32>,
    lens: Vec<[u32; 3]>,
    avg_len: [f64; 3],
    terms: HashMap<String, TermEntry>,
}

impl IndexReader {
    pub fn open(index_path: &Path) -> Result<Self> {
        let meta = storage::read_meta(index_path)?;

        let docs_path = index_path.join("docs.jsonl");
        let mut docs = Vec::with_capacity(meta.doc_count as usize);
        let reader = BufReader::new(File::open(&docs_path)?);
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(&line).map_err(|e| Error::IndexFormat {
                path: docs_path.clone(),
                message: format!("doc store line {}: {e}", lineno + 1),
            })?;
            docs.push(doc);
        }
        if docs.len() != meta.doc_count as usize {
            return Err(Error::IndexFormat {
                path: docs_path,
                message: format!(
                    "doc store has {} documents, meta says {}",
                    docs.len(),
                    meta.doc_count
                ),
            });
        }

        let mut lens_in = storage::BinReader::open(&index_path.join("doclens.bin"), storage::DOCLENS_MAGIC)?;
        let n = lens_in.u32()? as usize;
        if n != docs.len() {
            return Err(lens_in.error("doc length table does not match doc store"));
        }
        let mut lens = Vec::with_capacity(n);
        for _ in 0..n {
            lens.push([lens_in.u32()?, lens_in.u32()?, lens_in.u32()?]);
        }

        let mut post_in = storage::BinReader::open(&index_path.join("postings.bin"), storage::POSTINGS_MAGIC)?;
        let term_count = post_in.u32()? as usize;
        let mut terms = HashMap::with_capacity(term_count);
        for _ in 0..term_count {
            let len = post_in.u16()? as usize;
            let term = String::from_utf8(post_in.bytes(len)?)
                .map_err(|_| post_in.error("term is not valid UTF-8"))?;
            let df = post_in.u32()?;
            let n_postings = post_in.u32()? as usize;
            let mut postings = Vec::with_capacity(n_postings);
            for _ in 0..n_postings {
                let ordinal = post_in.u32()?;
                let field = Field::from_byte(post_in.u8()?)
                    .ok_or_else(|| post_in.error("invalid field tag"))?;
                let tf = post_in.u32()?;
                if tf == 0 || ordinal as usize >= docs.len() {
                    return Err(post_in.error("invalid posting"));
                }
                postings.push(Posting { ordinal, field, tf });
            }
            terms.insert(term, TermEntry { df, postings });
        }
        if !post_in.done() {
            return Err(post_in.error("trailing bytes"));
        }

        let ordinals = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id.clone(), i as u32))
            .collect();

        Ok(Self {
            docs,
            ordinals,
            lens,
            avg_len: average_lens(&meta.total_field_tokens, meta.doc_count as usize),
            terms,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.ordinals.get(doc_id).map(|&o| &self.docs[o as usize])
    }

    pub fn document_by_ordinal(&self, ordinal: u32) -> Option<&Document> {
        self.docs.get(ordinal as usize)
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn doc_freq(&self, term: &str) -> u32 {
        self.terms.get(term).map(|t| t.df).unwrap_or(0)
    }

    pub fn idf(&self, term: &str) -> f64 {
        idf(self.docs.len(), self.doc_freq(term))
    }

    pub fn posting_list(&self, term: &str) -> Option<PostingList> {
        self.terms.get(term).map(|e| PostingList {
            term: term.to_string(),
            df: e.df,
            postings: e.postings.clone(),
        })
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            doc_count: self.docs.len(),
            avg_field_len: self.avg_len,
            doc_freq: self
                .terms
                .iter()
                .map(|(t, e)| (t.clone(), e.df))
                .collect(),
        }
    }

    fn tf(&self, term: &str, ordinal: u32, field: Field) -> u32 {
        let Some(entry) = self.terms.get(term) else {
            return 0;
        };
        entry
            .postings
            .binary_search_by_key(&(ordinal, field), |p| (p.ordinal, p.field))
            .map(|i| entry.postings[i].tf)
            .unwrap_or(0)
    }

    fn term_in_doc(&self, term: &str, ordinal: u32, field: QueryField) -> bool {
        match field {
            QueryField::All => Field::ALL.iter().any(|&f| self.tf(term, ordinal, f) > 0),
            _ => self.tf(term, ordinal, query_field(field)) > 0,
        }
    }

    /// Flat bag-of-words BM25 score: sum of per-term, per-field
    /// contributions weighted by `params.field_weights`. Unknown terms
    /// contribute zero.
    pub fn bm25_score(&self, query_terms: &[String], ordinal: u32, params: &Bm25Params) -> f64 {
        query_terms
            .iter()
            .map(|t| self.term_score(t, ordinal, None, 1.0, params))
            .sum()
    }

    fn term_score(
        &self,
        term: &str,
        ordinal: u32,
        field: Option<Field>,
        boost: f64,
        params: &Bm25Params,
    ) -> f64 {
        let idf = self.idf(term);
        let lens = self.lens[ordinal as usize];
        let fields: &[Field] = match field {
            Some(ref f) => std::slice::from_ref(f),
            None => &Field::ALL,
        };
        let mut score = 0.0;
        for &f in fields {
            let tf = self.tf(term, ordinal, f);
            score += params.field_weights[f.ordinal()]
                * bm25_term_score(
                    idf,
                    tf,
                    lens[f.ordinal()],
                    self.avg_len[f.ordinal()],
                    params.k1,
                    params.b,
                );
        }
        boost * score
    }

    fn matching(&self, node: &QueryNode) -> Vec<u32> {
        match node {
            QueryNode::Term { field, text, .. } => {
                let mut out: Vec<u32> = match self.terms.get(text) {
                    Some(entry) => {
                        let mut v: Vec<u32> = entry
                            .postings
                            .iter()
                            .filter(|p| match field {
                                QueryField::All => true,
                                _ => p.field == query_field(*field),
                            })
                            .map(|p| p.ordinal)
                            .collect();
                        v.dedup();
                        v
                    }
                    None => Vec::new(),
                };
                out.sort_unstable();
                out.dedup();
                out
            }
            QueryNode::And(children) => {
                let mut sets = children.iter().map(|c| self.matching(c));
                let Some(mut acc) = sets.next() else {
                    return Vec::new();
                };
                for s in sets {
                    acc = intersect_sorted(&acc, &s);
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            QueryNode::Or(children) => {
                let mut acc: Vec<u32> = Vec::new();
                for c in children {
                    acc.extend(self.matching(c));
                }
                acc.sort_unstable();
                acc.dedup();
                acc
            }
        }
    }

    fn score_node(&self, node: &QueryNode, ordinal: u32, params: &Bm25Params) -> f64 {
        match node {
            QueryNode::Term { field, text, boost } => {
                let f = match field {
                    QueryField::All => None,
                    other => Some(query_field(*other)),
                };
                self.term_score(text, ordinal, f, *boost, params)
            }
            QueryNode::And(children) | QueryNode::Or(children) => children
                .iter()
                .map(|c| self.score_node(c, ordinal, params))
                .sum(),
        }
    }

    /// Evaluate a query plan: documents matching the boolean structure,
    /// BM25-scored, sorted by descending score with ascending `doc_id`
    /// tie-break, truncated to `k`.
    pub fn search(&self, plan: &QueryPlan, k: usize) -> Result<Vec<SearchHit>> {
        self.search_ast(&plan.ast, k)
    }

    pub fn search_ast(&self, ast: &QueryNode, k: usize) -> Result<Vec<SearchHit>> {
        if k == 0 {
            return Err(Error::InvalidArgument("search k must be >= 1".into()));
        }
        let matches = self.matching(ast);
        let mut hits: Vec<SearchHit> = matches
            .into_iter()
            .map(|ordinal| SearchHit {
                doc_id: self.docs[ordinal as usize].doc_id.clone(),
                score: self.score_node(ast, ordinal, &Bm25Params::default()),
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        hits.truncate(k);
        Ok(hits)
    }
}

fn query_field(field: QueryField) -> Field {
    match field {
        QueryField::Title => Field::Title,
        QueryField::Headings => Field::Headings,
        QueryField::Body => Field::Body,
        QueryField::All => unreachable!("All expands to concrete fields"),
    }
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::plan_baseline;

    fn write_corpus(dir: &Path, lines: &[&str]) -> std::path::PathBuf {
        let path = dir.join("corpus.jsonl");
        std::fs::write(&path, lines.join("\n")).unwrap();
        path
    }

    fn doc_line(id: &str, title: &str, body: &str) -> String {
        serde_json::json!({
            "docid": id,
            "url": format!("https://example.com/{id}"),
            "title": title,
            "headings": "",
            "segment": body,
        })
        .to_string()
    }

    #[test]
    fn ingest_counts_documents() {
        let dir = tempfile::tempdir().unwrap();
        let lines = [
            doc_line("d1", "alpha", "alpha beta"),
            doc_line("d2", "beta", "beta gamma"),
            doc_line("d3", "gamma", "gamma delta"),
        ];
        let refs: Vec<&str> = lines.iter().map(|s| s.as_str()).collect();
        let corpus = write_corpus(dir.path(), &refs);
        let report = ingest(&corpus, &dir.path().join("idx"), IngestOptions::default()).unwrap();
        assert_eq!(report.stats.doc_count, 3);
        assert_eq!(report.skipped, 0);
    }

    #[test]
    fn lenient_mode_skips_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let good = doc_line("d1", "alpha", "alpha beta");
        let lines = [good.as_str(), "{not json", doc_line("d2", "b", "c").as_str()];
        let corpus = write_corpus(dir.path(), &lines);

        let strict = ingest(&corpus, &dir.path().join("strict"), IngestOptions::default());
        match strict {
            Err(Error::Corpus { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected corpus error, got {other:?}"),
        }

        let report = ingest(
            &corpus,
            &dir.path().join("lenient"),
            IngestOptions { lenient: true },
        )
        .unwrap();
        assert_eq!(report.stats.doc_count, 2);
        assert_eq!(report.skipped, 1);
    }

    #[test]
    fn duplicate_doc_id_always_errors() {
        let dir = tempfile::tempdir().unwrap();
        let lines = [doc_line("d1", "a", "b"), doc_line("d1", "c", "d")];
        let refs: Vec<&str> = lines.iter().map(|s| s.as_str()).collect();
        let corpus = write_corpus(dir.path(), &refs);
        let err = ingest(
            &corpus,
            &dir.path().join("idx"),
            IngestOptions { lenient: true },
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateDocId(id) if id == "d1"));
    }

    #[test]
    fn ingest_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let lines = [
            doc_line("d1", "alpha beta", "gamma delta epsilon"),
            doc_line("d2", "beta", "alpha alpha zeta"),
        ];
        let refs: Vec<&str> = lines.iter().map(|s| s.as_str()).collect();
        let corpus = write_corpus(dir.path(), &refs);
        ingest(&corpus, &dir.path().join("a"), IngestOptions::default()).unwrap();
        ingest(&corpus, &dir.path().join("b"), IngestOptions::default()).unwrap();
        for name in ["meta.json", "docs.jsonl", "doclens.bin", "postings.bin"] {
            let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
            assert_eq!(a, b, "file {name} differs between ingests");
        }
    }

    #[test]
    fn single_doc_formula() {
        // one doc, one query term with tf=1 and len == avglen:
        // score = IDF * (k1+1) / (1 + k1)
        let dir = tempfile::tempdir().unwrap();
        let line = doc_line("d1", "", "zebra");
        let corpus = write_corpus(dir.path(), &[line.as_str()]);
        ingest(&corpus, &dir.path().join("idx"), IngestOptions::default()).unwrap();
        let reader = IndexReader::open(&dir.path().join("idx")).unwrap();
        let params = Bm25Params::default();
        let got = reader.bm25_score(&["zebra".into()], 0, &params);
        let expected_idf = (1.0f64 + (1.0 - 1.0 + 0.5) / (1.0 + 0.5)).ln();
        let expected = expected_idf * (params.k1 + 1.0) / (1.0 + params.k1);
        assert!((got - expected).abs() < 1e-12, "got {got}, expected {expected}");
    }

    #[test]
    fn unknown_terms_score_zero() {
        let dir = tempfile::tempdir().unwrap();
        let line = doc_line("d1", "", "zebra");
        let corpus = write_corpus(dir.path(), &[line.as_str()]);
        ingest(&corpus, &dir.path().join("idx"), IngestOptions::default()).unwrap();
        let reader = IndexReader::open(&dir.path().join("idx")).unwrap();
        assert_eq!(
            reader.bm25_score(&["missing".into()], 0, &Bm25Params::default()),
            0.0
        );
    }

    #[test]
    fn search_ties_break_by_doc_id() {
        let dir = tempfile::tempdir().unwrap();
        let lines = [
            doc_line("d2", "", "zebra"),
            doc_line("d1", "", "zebra"),
        ];
        let refs: Vec<&str> = lines.iter().map(|s| s.as_str()).collect();
        let corpus = write_corpus(dir.path(), &refs);
        ingest(&corpus, &dir.path().join("idx"), IngestOptions::default()).unwrap();
        let reader = IndexReader::open(&dir.path().join("idx")).unwrap();
        let plan = plan_baseline("zebra").unwrap();
        let hits = reader.search(&plan, 10).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].doc_id, "d1");
        assert_eq!(hits[1].doc_id, "d2");
        assert_eq!(hits[0].score, hits[1].score);
    }

    #[test]
    fn search_nothing_matches() {
        let dir = tempfile::tempdir().unwrap();
        let line = doc_line("d1", "", "zebra");
        let corpus = write_corpus(dir.path(), &[line.as_str()]);
        ingest(&corpus, &dir.path().join("idx"), IngestOptions::default()).unwrap();
        let reader = IndexReader::open(&dir.path().join("idx")).unwrap();
        let plan = plan_baseline("quagga").unwrap();
        assert!(reader.search(&plan, 10).unwrap().is_empty());
    }

    #[test]
    fn reopen_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lines = [
            doc_line("d1", "alpha beta", "gamma delta"),
            doc_line("d2", "beta", "alpha zeta"),
            doc_line("d3", "zeta", "beta beta beta"),
        ];
        let refs: Vec<&str> = lines.iter().map(|s| s.as_str()).collect();
        let corpus = write_corpus(dir.path(), &refs);
        ingest(&corpus, &dir.path().join("idx"), IngestOptions::default()).unwrap();
        let r1 = IndexReader::open(&dir.path().join("idx")).unwrap();
        let r2 = IndexReader::open(&dir.path().join("idx")).unwrap();
        let plan = plan_baseline("alpha beta zeta").unwrap();
        assert_eq!(r1.search(&plan, 10).unwrap(), r2.search(&plan, 10).unwrap());
    }

    #[test]
    fn version_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let line = doc_line("d1", "", "zebra");
        let corpus = write_corpus(dir.path(), &[line.as_str()]);
        let idx = dir.path().join("idx");
        ingest(&corpus, &idx, IngestOptions::default()).unwrap();
        let meta_path = idx.join("meta.json");
        let meta = std::fs::read_to_string(&meta_path).unwrap();
        std::fs::write(&meta_path, meta.replace("\"version\": 1", "\"version\": 99")).unwrap();
        assert!(matches!(
            IndexReader::open(&idx),
            Err(Error::IndexFormat { .. })
        ));
    }
}
