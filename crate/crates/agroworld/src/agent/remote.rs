//! Remote LLM policy over a minimal chat-completion wire protocol.
//!
//! Request body: `{"messages": [{"role": ..., "content": ...}, ...]}`.
//! Response body: `{"content": "..."}`, where the content must carry the next
//! plan inside a fenced ```json block. The endpoint and bearer token come
//! from `AGRO_LLM_ENDPOINT` and `AGRO_LLM_KEY`.

use super::episode::EpisodeMemory;
use super::plan::PlanProgram;
use super::policy::Policy;
use crate::canonical;
use crate::protocol::TaskInstance;
use crate::toolkit::{ErrorCode, Registry, ToolError};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::time::Duration;

pub const ENDPOINT_ENV: &str = "AGRO_LLM_ENDPOINT";
pub const KEY_ENV: &str = "AGRO_LLM_KEY";

const MAX_RETRIES: u32 = 2;
const BACKOFF_START_MS: u64 = 500;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

pub struct RemotePolicy {
    endpoint: String,
    key: Option<String>,
    registry_specs: Vec<String>,
}

impl RemotePolicy {
    pub fn new(endpoint: String, key: Option<String>, registry: &Registry) -> RemotePolicy {
        RemotePolicy {
            endpoint,
            key,
            registry_specs: registry.specs().iter().map(|s| s.signature()).collect(),
        }
    }

    pub fn from_env(registry: &Registry) -> Result<RemotePolicy, ToolError> {
        let endpoint = std::env::var(ENDPOINT_ENV).map_err(|_| {
            ToolError::new(
                ErrorCode::TransportError,
                format!("remote policy requires {ENDPOINT_ENV} to be set"),
            )
        })?;
        let key = std::env::var(KEY_ENV).ok();
        Ok(RemotePolicy::new(endpoint, key, registry))
    }

    /// Build the chat transcript: environment contract, the task's public
    /// fields, and per turn the proposed plan plus what the sandbox and
    /// checker reported back. Sealed checker data never enters the prompt.
    pub fn messages(&self, task: &TaskInstance, memory: &EpisodeMemory) -> Vec<ChatMessage> {
        let mut messages = Vec::new();
        let system = format!(
            "You are an agronomic analysis agent operating a tool registry over an \
             immutable world snapshot. Respond with exactly one plan program inside a \
             fenced ```json block: {{\"steps\": [{{\"id\", \"tool\", \"args\"}}...], \
             \"answer\": {{...}}}}. Step arguments and answer leaves may reference \
             earlier step values as {{\"ref\": \"<step id>\", \"path\": \"a.b.0\"}}. \
             Available tools:\n{}",
            self.registry_specs.join("\n")
        );
        messages.push(ChatMessage { role: "system".into(), content: system });
        let task_view = json!({
            "bindings": task.bindings,
            "budget": task.budget,
            "family": task.family,
            "output_schema": task.output_schema,
            "q": task.q,
        });
        messages.push(ChatMessage {
            role: "user".into(),
            content: format!("Task:\n{}", canonical::to_string(&task_view)),
        });
        for turn in &memory.turns {
            messages.push(ChatMessage {
                role: "assistant".into(),
                content: format!("```json\n{}\n```", canonical::to_string(&turn.plan)),
            });
            let feedback = json!({
                "observations": turn.observations,
                "report": turn.visible_report,
            });
            messages.push(ChatMessage {
                role: "user".into(),
                content: format!("Execution feedback:\n{}", canonical::to_string(&feedback)),
            });
        }
        messages
    }

    fn post(&self, body: &str) -> Result<String, ToolError> {
        let mut delay = Duration::from_millis(BACKOFF_START_MS);
        let mut last_error = String::new();
        for attempt in 0..=MAX_RETRIES {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            let mut request = ureq::post(&self.endpoint).header("content-type", "application/json");
            if let Some(key) = &self.key {
                request = request.header("authorization", &format!("Bearer {key}"));
            }
            match request.send(body) {
                Ok(mut response) => match response.body_mut().read_to_string() {
                    Ok(text) => return Ok(text),
                    Err(e) => last_error = format!("reading response body: {e}"),
                },
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(ToolError::new(
            ErrorCode::TransportError,
            format!("endpoint unreachable after {} attempts: {last_error}", MAX_RETRIES + 1),
        )
        .with("endpoint", &self.endpoint))
    }
}

/// Extract the first fenced JSON block; falls back to any fenced block, then
/// to the full text.
pub fn extract_json_block(content: &str) -> &str {
    for fence in ["```json", "```"] {
        if let Some(start) = content.find(fence) {
            let rest = &content[start + fence.len()..];
            if let Some(end) = rest.find("```") {
                return rest[..end].trim();
            }
        }
    }
    content.trim()
}

/// Parse the wire reply into a plan.
pub fn parse_reply(text: &str) -> Result<PlanProgram, ToolError> {
    let reply: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ToolError::new(ErrorCode::ParseError, format!("response is not JSON: {e}")))?;
    let content = reply
        .get("content")
        .and_then(serde_json::Value::as_str)
        .ok_or_else(|| ToolError::new(ErrorCode::ParseError, "response carries no \"content\" string"))?;
    let block = extract_json_block(content);
    let plan: PlanProgram = serde_json::from_str(block).map_err(|e| {
        ToolError::new(ErrorCode::ParseError, format!("content carries no parsable plan: {e}"))
            .with("content", content)
    })?;
    plan.validate()?;
    Ok(plan)
}

impl Policy for RemotePolicy {
    fn name(&self) -> String {
        "remote".into()
    }

    fn propose(&self, task: &TaskInstance, memory: &EpisodeMemory) -> Result<PlanProgram, ToolError> {
        let body = canonical::to_string(&json!({ "messages": self.messages(task, memory) }));
        let text = self.post(&body)?;
        parse_reply(&text)
    }
}
