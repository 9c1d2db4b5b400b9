//! Chat-completions-style HTTP provider with base64 image attachments.
//!
//! The endpoint, model name and timeout come from configuration; the API key
//! comes from an environment variable so it never lands in config files or
//! session logs.

use base64::Engine as _;
use serde_json::{json, Value};
use std::time::Duration;

use super::{GatewayError, LlmProvider, LlmRequest, LlmResponse, Usage};

pub const API_KEY_ENV: &str = "UIPILOT_API_KEY";

#[derive(Debug, Clone)]
pub struct HttpProviderConfig {
    /// Full chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub timeout_ms: u64,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        HttpProviderConfig {
            endpoint: String::new(),
            model: String::new(),
            timeout_ms: 60_000,
            api_key_env: API_KEY_ENV.to_string(),
        }
    }
}

pub struct HttpProvider {
    cfg: HttpProviderConfig,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(cfg: HttpProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .build()
            .into();
        HttpProvider { cfg, agent }
    }

    fn build_body(&self, req: &LlmRequest) -> Result<Value, GatewayError> {
        let mut content = vec![json!({ "type": "text", "text": req.text })];
        for img in &req.images {
            let png = img
                .encode_png()
                .map_err(|e| GatewayError::Transport(format!("encode image: {e}")))?;
            let b64 = base64::engine::general_purpose::STANDARD.encode(png);
            content.push(json!({
                "type": "image_url",
                "image_url": { "url": format!("data:image/png;base64,{b64}") }
            }));
        }
        Ok(json!({
            "model": self.cfg.model,
            "temperature": req.params.temperature,
            "max_tokens": req.params.max_tokens,
            "messages": [{ "role": "user", "content": content }]
        }))
    }
}

impl LlmProvider for HttpProvider {
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, GatewayError> {
        let key = std::env::var(&self.cfg.api_key_env).map_err(|_| {
            GatewayError::Transport(format!(
                "environment variable {} not set",
                self.cfg.api_key_env
            ))
        })?;
        let body = self.build_body(req)?;

        let result = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .header("Content-Type", "application/json")
            .send_json(&body);

        let mut response = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(GatewayError::Timeout(self.cfg.timeout_ms)),
            Err(e) => {
                // Connection-level failures under a global deadline surface in
                // several shapes; classify the timeout-ish ones uniformly.
                let msg = e.to_string();
                if msg.contains("timed out") || msg.contains("timeout") {
                    return Err(GatewayError::Timeout(self.cfg.timeout_ms));
                }
                return Err(GatewayError::Transport(msg));
            }
        };

        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| GatewayError::Transport(format!("bad response body: {e}")))?;

        let text = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| GatewayError::Parse("response has no message content".into()))?
            .to_string();
        let usage = Usage::new(
            value["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
            value["usage"]["completion_tokens"].as_u64().unwrap_or(0),
        );
        Ok(LlmResponse { text, usage })
    }

    fn name(&self) -> &str {
        "http"
    }
}
