//! OpenAI-compatible HTTP backend with retry, backoff and rate limiting.
//!
//! Endpoints: `POST {base_url}/chat/completions` and
//! `POST {base_url}/embeddings`. HTTP 429 and 5xx responses are retried
//! with exponential backoff (base `backoff_base_ms`, factor 2, jitter),
//! up to `max_retries` retries. Requests are spaced by a token bucket at
//! `requests_per_second`.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use rand::Rng;
use serde::Deserialize;
use serde_json::json;

use super::ratelimit::{Clock, SystemClock, TokenBucket};
use super::{Backend, ChatRequest, Embedding, GatewayConfig};
use crate::error::{Error, Result};

pub struct LiveBackend {
    client: reqwest::blocking::Client,
    config: GatewayConfig,
    api_key: String,
    limiter: TokenBucket,
    clock: SystemClock,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingRow>,
}

#[derive(Deserialize)]
struct EmbeddingRow {
    index: usize,
    embedding: Vec<f64>,
}

impl LiveBackend {
    pub fn new(config: GatewayConfig) -> Result<Self> {
        let api_key = std::env::var(&config.api_key_env_var)
            .map_err(|_| Error::MissingApiKey(config.api_key_env_var.clone()))?;
        let clock = SystemClock;
        let limiter = TokenBucket::new(config.requests_per_second, clock.now());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Transport {
                status: None,
                message: e.to_string(),
            })?;
        Ok(Self {
            client,
            config,
            api_key,
            limiter,
            clock,
        })
    }

    /// POST a JSON body, retrying on 429/5xx. Returns the response body.
    fn post(&self, path: &str, body: &serde_json::Value) -> Result<String> {
        let url = format!("{}{}", self.config.base_url.trim_end_matches('/'), path);
        let mut last: Error = Error::Transport {
            status: None,
            message: "no attempt made".into(),
        };
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let base = Duration::from_millis(self.config.backoff_base_ms)
                    .saturating_mul(1u32 << (attempt - 1).min(16));
                let jitter = base.mul_f64(rand::rng().random_range(0.0..0.25));
                self.clock.sleep(base + jitter);
            }
            self.limiter.acquire(&self.clock);
            let sent = self
                .client
                .post(&url)
                .bearer_auth(&self.api_key)
                .json(body)
                .send();
            match sent {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.text().map_err(|e| Error::Transport {
                            status: Some(status.as_u16()),
                            message: e.to_string(),
                        });
                    }
                    let retryable = status.as_u16() == 429 || status.is_server_error();
                    let message = resp.text().unwrap_or_default();
                    last = Error::Transport {
                        status: Some(status.as_u16()),
                        message,
                    };
                    if !retryable {
                        return Err(last);
                    }
                }
                Err(e) => {
                    last = Error::Transport {
                        status: None,
                        message: e.to_string(),
                    };
                }
            }
        }
        Err(last)
    }
}

impl Backend for LiveBackend {
    fn chat(&self, req: &ChatRequest) -> Result<String> {
        let mut body = json!({
            "model": self.config.model_chat,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_prompt},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        if let Some(seed) = req.seed {
            body["seed"] = json!(seed);
        }
        let raw = self.post("/chat/completions", &body)?;
        let parsed: ChatResponse = serde_json::from_str(&raw)?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Error::Transport {
                status: None,
                message: "chat response contained no choices".into(),
            })
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        let body = json!({
            "model": self.config.model_embed,
            "input": texts,
        });
        let raw = self.post("/embeddings", &body)?;
        let parsed: EmbeddingsResponse = serde_json::from_str(&raw)?;
        if parsed.data.len() != texts.len() {
            return Err(Error::Transport {
                status: None,
                message: format!(
                    "embeddings response had {} rows for {} inputs",
                    parsed.data.len(),
                    texts.len()
                ),
            });
        }
        let mut rows = parsed.data;
        rows.sort_by_key(|r| r.index);
        Ok(rows
            .into_iter()
            .map(|r| Embedding { vector: r.embedding })
            .collect())
    }
}

/// Test backend that replays a fixed queue of chat responses. Embeddings
/// fall back to the stub's hashing embedder.
pub struct ScriptedBackend {
    responses: Mutex<VecDeque<String>>,
    embed_dim: usize,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
            embed_dim: 384,
        }
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().unwrap().len()
    }
}

impl Backend for ScriptedBackend {
    fn chat(&self, _req: &ChatRequest) -> Result<String> {
        self.responses
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| Error::Transport {
                status: None,
                message: "scripted backend exhausted".into(),
            })
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        Ok(texts
            .iter()
            .map(|t| super::stub::hash_embedding(t, self.embed_dim))
            .collect())
    }
}
