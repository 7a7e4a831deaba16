use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{MessageRole, Provider, ProviderError, ProviderRequest, ProviderResponse, Usage};

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub endpoint: String,
    pub model: String,
    pub key: Option<String>,
    pub max_attempts: u32,
    pub base_backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
    pub max_concurrent: usize,
    pub requests_per_minute: usize,
}

impl LiveConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        LiveConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            key: None,
            max_attempts: 5,
            base_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(30),
            timeout: Duration::from_secs(120),
            max_concurrent: 4,
            requests_per_minute: 60,
        }
    }

    /// Reads `PRACTIQ_LLM_ENDPOINT`, `PRACTIQ_LLM_MODEL` and `PRACTIQ_LLM_KEY`.
    pub fn from_env() -> Result<Self, ProviderError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let endpoint = var("PRACTIQ_LLM_ENDPOINT")
            .ok_or_else(|| ProviderError::Refusal("PRACTIQ_LLM_ENDPOINT is not set".into()))?;
        let model = var("PRACTIQ_LLM_MODEL").ok_or_else(|| ProviderError::Refusal("PRACTIQ_LLM_MODEL is not set".into()))?;
        let mut cfg = LiveConfig::new(endpoint, model);
        cfg.key = var("PRACTIQ_LLM_KEY");
        Ok(cfg)
    }
}

struct Gate {
    in_flight: usize,
    started: VecDeque<Instant>,
}

/// Chat-completions client with retries, a concurrency cap and a
/// requests-per-minute budget.
pub struct LiveProvider {
    cfg: LiveConfig,
    id: String,
    agent: ureq::Agent,
    gate: Mutex<Gate>,
    cv: Condvar,
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl LiveProvider {
    pub fn new(cfg: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(true)
            .build()
            .new_agent();
        LiveProvider {
            id: format!("live:{}", cfg.model),
            cfg,
            agent,
            gate: Mutex::new(Gate {
                in_flight: 0,
                started: VecDeque::new(),
            }),
            cv: Condvar::new(),
        }
    }

    pub fn from_env() -> Result<Self, ProviderError> {
        Ok(Self::new(LiveConfig::from_env()?))
    }

    fn acquire(&self) {
        let window = Duration::from_secs(60);
        let mut g = self.gate.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            let now = Instant::now();
            while g.started.front().is_some_and(|t| now.duration_since(*t) >= window) {
                g.started.pop_front();
            }
            let rpm_ok = self.cfg.requests_per_minute == 0 || g.started.len() < self.cfg.requests_per_minute;
            if g.in_flight < self.cfg.max_concurrent.max(1) && rpm_ok {
                g.in_flight += 1;
                g.started.push_back(now);
                return;
            }
            let wait = if rpm_ok {
                window
            } else {
                window.saturating_sub(now.duration_since(g.started[0]))
            };
            g = self
                .cv
                .wait_timeout(g, wait.max(Duration::from_millis(10)))
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    fn release(&self) {
        let mut g = self.gate.lock().unwrap_or_else(|e| e.into_inner());
        g.in_flight -= 1;
        self.cv.notify_all();
    }

    fn body(&self, req: &ProviderRequest) -> Value {
        let mut messages = vec![json!({"role": "system", "content": req.system_prompt})];
        for m in &req.messages {
            let role = match m.role {
                MessageRole::User => "user",
                MessageRole::Assistant => "assistant",
            };
            messages.push(json!({"role": role, "content": m.content}));
        }
        json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": req.decode.temperature,
            "top_p": req.decode.top_p,
            "max_tokens": req.decode.max_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<ProviderResponse, Attempt> {
        let mut call = self.agent.post(&self.cfg.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match call.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(code)) if code == 429 || code >= 500 => {
                return Err(Attempt::Retry(format!("http status {code}")))
            }
            Err(ureq::Error::StatusCode(code)) => return Err(Attempt::Fatal(format!("http status {code}"))),
            Err(e) => return Err(Attempt::Retry(e.to_string())),
        };
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(format!("malformed response: {e}")))?;
        let text = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Attempt::Fatal("response has no message content".into()))?;
        Ok(ProviderResponse {
            text: text.to_string(),
            usage: Usage {
                prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
                completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
            },
            provider_id: self.id.clone(),
        })
    }
}

impl Provider for LiveProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let body = self.body(request);
        let attempts = self.cfg.max_attempts.max(1);
        let mut last = String::new();
        for n in 0..attempts {
            if n > 0 {
                let backoff = self.cfg.base_backoff.saturating_mul(1 << (n - 1).min(16)).min(self.cfg.max_backoff);
                log::warn!("provider retry {n}/{} after {backoff:?}: {last}", attempts - 1);
                std::thread::sleep(backoff);
            }
            self.acquire();
            let result = self.attempt(&body);
            self.release();
            match result {
                Ok(r) => return Ok(r),
                Err(Attempt::Fatal(m)) => return Err(ProviderError::Refusal(m)),
                Err(Attempt::Retry(m)) => last = m,
            }
        }
        Err(ProviderError::RateLimited {
            attempts,
            message: last,
        })
    }
}
