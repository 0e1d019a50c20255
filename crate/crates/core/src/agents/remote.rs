//! Chat-completion backend over HTTPS.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::backend::{AgentRequest, Backend, BackendError, ChatMessage};

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

/// Posts `{model, temperature, messages}` to `endpoint` with bearer auth and
/// returns `choices[0].message.content`.
pub struct RemoteBackend {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend").field("endpoint", &self.endpoint).finish()
    }
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>, timeout_secs: u64) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout_secs))
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            client,
        })
    }
}

impl Backend for RemoteBackend {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &AgentRequest<'_>) -> Result<String, BackendError> {
        let body = CompletionRequest {
            model: &request.model,
            temperature: request.temperature,
            messages: &request.messages,
        };
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Unavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Http {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        let parsed: CompletionResponse =
            serde_json::from_str(&text).map_err(|e| BackendError::Protocol(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendError::Protocol("no choices in reply".into()))
    }

    /// Hosted models are not guaranteed to be reproducible even at
    /// temperature 0.
    fn is_deterministic(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentRole, Task};
    use crate::model::ThemeSet;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Serves one HTTP request with `status` and `body`, returning the raw
    /// request body it received.
    fn serve_once(status: &'static str, body: &'static str) -> (String, std::thread::JoinHandle<(String, String)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut len = 0;
            let mut auth = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = line.trim().to_string();
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let reply = format!(
                "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            reader.get_mut().write_all(reply.as_bytes()).unwrap();
            (String::from_utf8(buf).unwrap(), auth)
        });
        (url, handle)
    }

    fn request(ts: &ThemeSet) -> AgentRequest<'_> {
        AgentRequest {
            role: AgentRole::ThemeReviser,
            identity: None,
            reference: "r".into(),
            messages: vec![ChatMessage::user("hello")],
            model: "m1".into(),
            temperature: 0.0,
            seed: 0,
            task: Task::Revise { themes: ts },
        }
    }

    #[test]
    fn posts_chat_completion() {
        let (url, h) = serve_once("200 OK", r#"{"choices":[{"message":{"role":"assistant","content":"NONE"}}]}"#);
        let backend = RemoteBackend::new(url, "secret", 5).unwrap();
        let ts = ThemeSet::new("s", vec![]);
        assert_eq!(backend.complete(&request(&ts)).unwrap(), "NONE");
        let (body, auth) = h.join().unwrap();
        let v: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["model"], "m1");
        assert_eq!(v["temperature"], 0.0);
        assert_eq!(v["messages"][0]["content"], "hello");
        assert!(auth.to_ascii_lowercase().ends_with("bearer secret"), "{auth}");
    }

    #[test]
    fn http_error_is_reported() {
        let (url, h) = serve_once("500 Internal Server Error", "boom");
        let backend = RemoteBackend::new(url, "k", 5).unwrap();
        let ts = ThemeSet::new("s", vec![]);
        let err = backend.complete(&request(&ts)).unwrap_err();
        assert_eq!(err, BackendError::Http { status: 500, body: "boom".into() });
        h.join().unwrap();
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let backend = RemoteBackend::new(format!("http://127.0.0.1:{port}/"), "k", 2).unwrap();
        let ts = ThemeSet::new("s", vec![]);
        assert!(matches!(backend.complete(&request(&ts)), Err(BackendError::Unavailable(_))));
    }
}
