//! Prompting harness: render parsing prompts, call a chat-completions-style
//! endpoint through a response cache, and extract CoNLL candidates from the
//! raw replies.
//!
//! The cache is consulted before any network activity and written only on
//! success, so a frozen cache directory makes whole pipeline runs
//! reproducible offline.

pub mod cache;
mod extract;
mod transport;

pub use cache::{CacheEntry, CacheError, RequestMetadata, ResponseCache};
pub use extract::{blocks_to_prediction, extract_conll};
pub use transport::{HttpTransport, Transport, TransportError, TransportResponse};

use crate::conll::{Dialect, Sentence};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};
use thiserror::Error;

/// Placeholder replaced by the space-joined sentence tokens.
pub const SENTENCE_PLACEHOLDER: &str = "{sentence}";

/// A versioned parsing prompt.
///
/// The version participates in the cache key, so editing a template never
/// silently replays responses to the old wording.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: String,
    /// Instruction text containing the `{sentence}` placeholder.
    pub instruction_text: String,
    /// Optional system message sent before the instruction.
    #[serde(default)]
    pub system_text: Option<String>,
    /// Which CoNLL column layout the instruction asks for.
    pub dialect: Dialect,
    pub version: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {template_id:?} has no {SENTENCE_PLACEHOLDER} placeholder")]
    MissingPlaceholder { template_id: String },
    #[error("cannot render a prompt for an empty sentence")]
    EmptySentence,
}

/// Substitute the sentence into the template: tokens joined by single
/// spaces, in order, preserving the given segmentation.
pub fn render_prompt(
    template: &PromptTemplate,
    sentence: &Sentence,
) -> Result<String, TemplateError> {
    if !template.instruction_text.contains(SENTENCE_PLACEHOLDER) {
        return Err(TemplateError::MissingPlaceholder {
            template_id: template.template_id.clone(),
        });
    }
    if sentence.is_empty() {
        return Err(TemplateError::EmptySentence);
    }
    let joined = sentence.forms().join(" ");
    Ok(template
        .instruction_text
        .replace(SENTENCE_PLACEHOLDER, &joined))
}

/// Endpoint and decoding configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// 0 for reproduction runs: greedy decoding.
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout: Duration,
    /// Name of the environment variable holding the API key. An empty value
    /// in the environment sends no Authorization header.
    pub api_key_env: String,
}

impl LlmConfig {
    pub fn new(endpoint_url: &str, model_name: &str) -> Self {
        LlmConfig {
            endpoint_url: endpoint_url.to_string(),
            model_name: model_name.to_string(),
            temperature: 0.0,
            max_retries: 3,
            timeout: Duration::from_secs(60),
            api_key_env: "OPENAI_API_KEY".to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("CACHE_MISS: offline run has no cached response for key {key}")]
    CacheMiss { key: String },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("api key environment variable {env} is not set")]
    MissingApiKey { env: String },
    #[error("HTTP {status} from endpoint: {body}")]
    Http { status: u16, body: String },
    #[error("malformed completion response: {detail}")]
    MalformedResponse { detail: String },
    #[error("transport failed after {} attempts: {}", attempts.len(), attempts.join("; "))]
    Exhausted { attempts: Vec<String> },
}

/// Cache-first chat client.
pub struct LlmClient {
    config: LlmConfig,
    cache: ResponseCache,
    transport: Option<Box<dyn Transport>>,
    /// All cache access is serialized through this lock; worker threads
    /// otherwise share nothing mutable.
    cache_lock: Mutex<()>,
}

impl LlmClient {
    pub fn online(config: LlmConfig, cache: ResponseCache, transport: Box<dyn Transport>) -> Self {
        LlmClient {
            config,
            cache,
            transport: Some(transport),
            cache_lock: Mutex::new(()),
        }
    }

    /// Replay-only client: answers from the cache and reports a cache miss
    /// instead of ever touching the network.
    pub fn offline(config: LlmConfig, cache: ResponseCache) -> Self {
        LlmClient {
            config,
            cache,
            transport: None,
            cache_lock: Mutex::new(()),
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// Complete one rendered prompt, cache-first.
    ///
    /// On a miss, one JSON POST per attempt: 5xx and transport failures are
    /// retried with exponential backoff up to `max_retries`, other non-2xx
    /// statuses fail immediately. The response is persisted before
    /// returning; errors never touch the cache.
    pub fn complete(&self, template: &PromptTemplate, prompt: &str) -> Result<String, LlmError> {
        let key = ResponseCache::key(
            &self.config.model_name,
            &template.template_id,
            &template.version,
            prompt,
        );
        {
            let _guard = self.cache_lock.lock().unwrap();
            if let Some(entry) = self.cache.get(&key)? {
                return Ok(entry.raw_response);
            }
        }
        let transport = self
            .transport
            .as_ref()
            .ok_or_else(|| LlmError::CacheMiss { key: key.clone() })?;

        let api_key = match std::env::var(&self.config.api_key_env) {
            Ok(value) if value.is_empty() => None,
            Ok(value) => Some(value),
            Err(_) => {
                return Err(LlmError::MissingApiKey {
                    env: self.config.api_key_env.clone(),
                })
            }
        };

        let mut messages = Vec::new();
        if let Some(system) = &template.system_text {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": prompt}));
        let body = json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature,
        });

        let mut attempts = Vec::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(backoff(attempt));
            }
            match transport.post_json(
                &self.config.endpoint_url,
                api_key.as_deref(),
                &body,
                self.config.timeout,
            ) {
                Ok(response) if (200..300).contains(&response.status) => {
                    let raw = extract_content(&response.body)?;
                    let entry = CacheEntry {
                        key: key.clone(),
                        raw_response: raw.clone(),
                        timestamp: unix_now(),
                        request: RequestMetadata {
                            model: self.config.model_name.clone(),
                            template_id: template.template_id.clone(),
                            template_version: template.version.clone(),
                            prompt: prompt.to_string(),
                        },
                    };
                    let _guard = self.cache_lock.lock().unwrap();
                    self.cache.put(&entry)?;
                    return Ok(raw);
                }
                Ok(response) if response.status >= 500 => {
                    attempts.push(format!("attempt {}: HTTP {}", attempt + 1, response.status));
                }
                Ok(response) => {
                    return Err(LlmError::Http {
                        status: response.status,
                        body: snippet(&response.body),
                    });
                }
                Err(e) => {
                    attempts.push(format!("attempt {}: {e}", attempt + 1));
                }
            }
        }
        Err(LlmError::Exhausted { attempts })
    }

    /// Complete many prompts with bounded parallelism; results come back in
    /// input order regardless of completion order.
    pub fn complete_batch(
        &self,
        template: &PromptTemplate,
        prompts: &[String],
        parallelism: usize,
    ) -> Vec<Result<String, LlmError>> {
        let workers = parallelism.max(1).min(prompts.len().max(1));
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<String, LlmError>>>> =
            Mutex::new((0..prompts.len()).map(|_| None).collect());

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let index = next.fetch_add(1, Ordering::SeqCst);
                    if index >= prompts.len() {
                        break;
                    }
                    let result = self.complete(template, &prompts[index]);
                    results.lock().unwrap()[index] = Some(result);
                });
            }
        });

        results
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|r| r.expect("every prompt was processed"))
            .collect()
    }
}

fn backoff(attempt: u32) -> Duration {
    Duration::from_millis(200 * (1 << (attempt - 1).min(5)))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_secs()
}

fn snippet(body: &str) -> String {
    body.chars().take(300).collect()
}

/// Text of the first choice in a chat-completions response body.
fn extract_content(body: &str) -> Result<String, LlmError> {
    let value: Value = serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse {
        detail: format!("response is not JSON: {e}"),
    })?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| LlmError::MalformedResponse {
            detail: "missing choices[0].message.content".to_string(),
        })
}
