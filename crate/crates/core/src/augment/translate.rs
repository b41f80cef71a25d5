//! Machine translation clients for back-translation.

use std::time::Duration;

use crate::error::{Error, Result};

/// Environment variable holding the translation service key.
pub const API_KEY_VAR: &str = "DIDA_MT_KEY";

pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, src: &str, dst: &str) -> Result<String>;
}

/// Offline translator that returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubTranslator;

impl Translator for StubTranslator {
    fn translate(&self, text: &str, _src: &str, _dst: &str) -> Result<String> {
        Ok(text.to_string())
    }
}

/// Client for a LibreTranslate-compatible `POST /translate` endpoint.
#[derive(Debug, Clone)]
pub struct HttpTranslator {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpTranslator {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        HttpTranslator {
            endpoint: endpoint.into(),
            api_key,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    /// Reads the key from [`API_KEY_VAR`] if set.
    pub fn from_env(endpoint: impl Into<String>) -> Self {
        HttpTranslator::new(endpoint, std::env::var(API_KEY_VAR).ok(), Duration::from_secs(30))
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, text: &str, src: &str, dst: &str) -> Result<String> {
        let mut body = serde_json::json!({"q": text, "source": src, "target": dst, "format": "text"});
        if let Some(key) = &self.api_key {
            body["api_key"] = serde_json::Value::String(key.clone());
        }
        let resp: serde_json::Value = self
            .agent
            .post(&self.endpoint)
            .send_json(body)
            .map_err(|e| Error::Translate(e.to_string()))?
            .into_json()
            .map_err(|e| Error::Translate(e.to_string()))?;
        resp.get("translatedText")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| Error::Translate(format!("unexpected response {resp}")))
    }
}

/// Attempts per translation call and the delay before the first retry
/// (doubled after each failure).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

fn with_retries(policy: RetryPolicy, mut f: impl FnMut() -> Result<String>) -> Result<String> {
    let mut delay = policy.base_delay;
    let mut last = Error::Translate("no attempts made".into());
    for attempt in 0..policy.attempts.max(1) {
        match f() {
            Ok(s) => return Ok(s),
            Err(e) => {
                log::warn!("translation attempt {} failed: {e}", attempt + 1);
                last = e;
            }
        }
        if attempt + 1 < policy.attempts {
            std::thread::sleep(delay);
            delay *= 2;
        }
    }
    Err(last)
}

/// Translates `text` into `pivot` and back into `src`.
pub fn back_translate(
    text: &str,
    translator: &dyn Translator,
    src: &str,
    pivot: &str,
    policy: RetryPolicy,
) -> Result<String> {
    let there = with_retries(policy, || translator.translate(text, src, pivot))?;
    with_retries(policy, || translator.translate(&there, pivot, src))
}

/// Default pivot for a source language.
pub fn default_pivot(src: &str) -> &'static str {
    match src {
        "zh" => "en",
        _ => "fr",
    }
}
