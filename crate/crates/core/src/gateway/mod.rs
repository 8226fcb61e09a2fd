//! Single choke-point for all model calls.
//!
//! Every chat completion and embedding request in the pipeline goes through
//! a [`Gateway`], which dispatches to either a live OpenAI-compatible HTTP
//! backend or the deterministic [`stub`] backend. Prompt text lives in
//! versioned template files under `prompts/` and is rendered with
//! `{{placeholder}}` substitution.

pub mod live;
pub mod ratelimit;
pub mod stub;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A chat completion request. Temperature defaults to 0.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

impl ChatRequest {
    pub fn new(system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> Self {
        Self {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            temperature: 0.0,
            max_tokens: 1024,
            seed: None,
        }
    }
}

/// A dense text embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub vector: Vec<f64>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn norm(&self) -> f64 {
        self.vector.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &Embedding) -> f64 {
        let dot: f64 = self
            .vector
            .iter()
            .zip(&other.vector)
            .map(|(a, b)| a * b)
            .sum();
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            0.0
        } else {
            dot / denom
        }
    }

    /// Scale to unit L2 norm; zero vectors are left unchanged.
    pub fn normalized(mut self) -> Embedding {
        let n = self.norm();
        if n > 0.0 {
            for x in &mut self.vector {
                *x /= n;
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Stub,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatewayConfig {
    pub base_url: String,
    pub api_key_env_var: String,
    pub model_chat: String,
    pub model_embed: String,
    pub max_retries: u32,
    pub requests_per_second: f64,
    pub backend: BackendKind,
    /// Embedding dimension used by the stub backend.
    pub embed_dim: usize,
    /// Base delay for exponential retry backoff.
    pub backoff_base_ms: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".to_string(),
            api_key_env_var: "OPENAI_API_KEY".to_string(),
            model_chat: "gpt-4o-mini".to_string(),
            model_embed: "text-embedding-3-small".to_string(),
            max_retries: 3,
            requests_per_second: 8.0,
            backend: BackendKind::Stub,
            embed_dim: 384,
            backoff_base_ms: 1000,
        }
    }
}

impl GatewayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.requests_per_second <= 0.0 {
            return Err(Error::Config("requests_per_second must be > 0".into()));
        }
        if self.embed_dim == 0 {
            return Err(Error::Config("embed_dim must be > 0".into()));
        }
        Ok(())
    }
}

/// A model backend: chat completion plus embeddings.
pub trait Backend: Send + Sync {
    fn chat(&self, req: &ChatRequest) -> Result<String>;
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>>;
}

/// Shared handle through which the pipeline issues model calls.
pub struct Gateway {
    backend: Box<dyn Backend>,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self> {
        config.validate()?;
        let backend: Box<dyn Backend> = match config.backend {
            BackendKind::Stub => Box::new(stub::StubBackend::new(config.embed_dim)),
            BackendKind::Live => Box::new(live::LiveBackend::new(config)?),
        };
        Ok(Self { backend })
    }

    /// Deterministic offline gateway with default settings.
    pub fn stub() -> Self {
        Self {
            backend: Box::new(stub::StubBackend::new(
                GatewayConfig::default().embed_dim,
            )),
        }
    }

    /// Wrap an arbitrary backend (used by tests for fault injection).
    pub fn with_backend(backend: Box<dyn Backend>) -> Self {
        Self { backend }
    }

    pub fn chat(&self, req: &ChatRequest) -> Result<String> {
        self.backend.chat(req)
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        if texts.is_empty() {
            return Err(Error::InvalidArgument("embed requires at least one text".into()));
        }
        self.backend.embed(texts)
    }

    /// Render a named prompt template and issue it as a chat request.
    pub fn chat_template(&self, template: &str, vars: &[(&str, &str)]) -> Result<String> {
        self.chat(&render(template, vars)?)
    }
}

/// Registry of versioned prompt templates. Each file holds the system
/// prompt, a `---` separator line, then the user prompt.
const TEMPLATES: &[(&str, &str)] = &[
    ("question_gen", include_str!("prompts/question_gen.txt")),
    ("question_filter", include_str!("prompts/question_filter.txt")),
    ("craap_score", include_str!("prompts/craap_score.txt")),
    ("boolean_expand", include_str!("prompts/boolean_expand.txt")),
    ("cot_expand", include_str!("prompts/cot_expand.txt")),
    ("structured_expand", include_str!("prompts/structured_expand.txt")),
    ("relevance_judge", include_str!("prompts/relevance_judge.txt")),
    ("answer", include_str!("prompts/answer.txt")),
    ("report", include_str!("prompts/report.txt")),
    ("similarity_judge", include_str!("prompts/similarity_judge.txt")),
];

fn template_source(name: &str) -> Result<&'static str> {
    TEMPLATES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, body)| *body)
        .ok_or_else(|| Error::Template {
            name: name.to_string(),
            placeholder: "<template not found>".to_string(),
        })
}

fn substitute(name: &str, section: &str, vars: &[(&str, &str)]) -> Result<String> {
    let mut out = section.to_string();
    for (key, value) in vars {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    if let Some(start) = out.find("{{") {
        let rest = &out[start + 2..];
        let end = rest.find("}}").unwrap_or(rest.len().min(24));
        return Err(Error::Template {
            name: name.to_string(),
            placeholder: rest[..end].to_string(),
        });
    }
    Ok(out)
}

/// Render a named template into a [`ChatRequest`]. Every `{{placeholder}}`
/// in the template must be covered by `vars`.
pub fn render(name: &str, vars: &[(&str, &str)]) -> Result<ChatRequest> {
    let source = template_source(name)?;
    let (system, user) = source.split_once("\n---\n").ok_or_else(|| Error::Template {
        name: name.to_string(),
        placeholder: "<missing --- separator>".to_string(),
    })?;
    Ok(ChatRequest::new(
        substitute(name, system, vars)?,
        substitute(name, user, vars)?,
    ))
}
