use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::PromptRequest;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Chat-completion URL.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub timeout_secs: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: String::new(),
            model: "gpt-4o".into(),
            api_key_env: "JOINTSMITH_API_KEY".into(),
            max_attempts: 3,
            base_delay_ms: 500,
            timeout_secs: 120,
        }
    }
}

pub struct RemoteClient {
    config: RemoteConfig,
    key: String,
    http: reqwest::blocking::Client,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient").field("config", &self.config).finish_non_exhaustive()
    }
}

impl RemoteClient {
    /// Reads the credential from the configured environment variable.
    pub fn from_env(config: RemoteConfig) -> Result<Self> {
        let key = std::env::var(&config.api_key_env).unwrap_or_default();
        if key.trim().is_empty() {
            return Err(Error::Config(format!(
                "remote oracle needs a credential in ${}",
                config.api_key_env
            )));
        }
        RemoteClient::with_key(config, key)
    }

    pub fn with_key(config: RemoteConfig, key: String) -> Result<Self> {
        if config.endpoint.trim().is_empty() {
            return Err(Error::Config("remote oracle needs an endpoint".into()));
        }
        if config.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(RemoteClient { config, key, http })
    }

    pub fn request_body(&self, request: &PromptRequest) -> Value {
        let mut messages = Vec::new();
        if !request.system_text.is_empty() {
            messages.push(json!({"role": "system", "content": request.system_text}));
        }
        let mut content = vec![json!({"type": "text", "text": request.user_text})];
        for image in &request.images {
            let data = base64::engine::general_purpose::STANDARD.encode(&image.png);
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{data}")}
            }));
        }
        messages.push(json!({"role": "user", "content": content}));
        for m in &request.history {
            messages.push(json!({"role": m.role, "content": m.text}));
        }
        json!({
            "model": self.config.model,
            "temperature": request.temperature,
            "messages": messages,
        })
    }

    /// Posts the request, retrying transport errors, 429 and 5xx with exponential backoff.
    pub fn send(&self, request: &PromptRequest) -> Result<String> {
        let body = self.request_body(request);
        let mut last = String::new();
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.base_delay_ms << (attempt - 1)));
            }
            let response = self
                .http
                .post(&self.config.endpoint)
                .bearer_auth(&self.key)
                .json(&body)
                .send();
            let response = match response {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = response.status();
            if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
                return Err(Error::OracleAuth(format!("endpoint answered {status}")));
            }
            if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
                last = format!("endpoint answered {status}");
                continue;
            }
            if !status.is_success() {
                return Err(Error::OracleTransport {
                    attempts: attempt + 1,
                    message: format!("endpoint answered {status}"),
                });
            }
            let value: Value = response.json().map_err(|e| Error::OracleTransport {
                attempts: attempt + 1,
                message: format!("unreadable response body: {e}"),
            })?;
            return value["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::OracleTransport {
                    attempts: attempt + 1,
                    message: "response has no choices[0].message.content".into(),
                });
        }
        Err(Error::OracleTransport {
            attempts: self.config.max_attempts,
            message: last,
        })
    }
}
