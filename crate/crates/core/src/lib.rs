//! Retrieval-augmented trustworthiness assessment for news articles.
//!
//! The pipeline generates critical questions for a target article, retrieves
//! supporting evidence from a segmented corpus with BM25 and several query
//! expansion strategies, re-ranks and filters the evidence by relevance and
//! domain trust, and synthesizes citation-backed trustworthiness reports.
//! A rubric-based scorer is included for offline evaluation of generated
//! questions.
//!
//! All model calls go through [`gateway`], which ships a deterministic stub
//! backend so the full pipeline can run offline and reproducibly.

pub mod analysis;
pub mod config;
pub mod error;
pub mod eval;
pub mod evidence;
pub mod expand;
pub mod gateway;
pub mod index;
pub mod question;
pub mod report;
pub mod runner;

pub use error::{Error, Result};
