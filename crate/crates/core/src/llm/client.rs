use std::sync::Arc;
use std::time::Duration;

use serde_json::Value;
use tokio::sync::Semaphore;

use super::structured::{parse_with_schema, Schema};
use super::{ChatMessage, ChatRole, CompletionRequest, LlmBackend, LlmError, RoleKind, RolePolicy};
use crate::transcript::{Event, Recorder, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LlmRetry {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for LlmRetry {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

/// Applies the role policy, bounds in-flight requests, retries transient
/// failures and records every exchange.
#[derive(Clone)]
pub struct LlmClient {
    backend: Arc<dyn LlmBackend>,
    model: String,
    policy: RolePolicy,
    retry: LlmRetry,
    limiter: Arc<Semaphore>,
}

impl LlmClient {
    pub fn new(
        backend: Arc<dyn LlmBackend>,
        model: impl Into<String>,
        policy: RolePolicy,
        retry: LlmRetry,
        max_in_flight: usize,
    ) -> Self {
        Self {
            backend,
            model: model.into(),
            policy,
            retry,
            limiter: Arc::new(Semaphore::new(max_in_flight.max(1))),
        }
    }

    pub fn policy(&self) -> &RolePolicy {
        &self.policy
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn is_deterministic(&self) -> bool {
        self.backend.is_deterministic()
    }

    pub async fn complete(
        &self,
        rec: &Recorder,
        stage: Stage,
        question: Option<usize>,
        kind: RoleKind,
        messages: Vec<ChatMessage>,
    ) -> Result<String, LlmError> {
        match messages.first() {
            None => return Err(LlmError::InvalidRequest("no messages".into())),
            Some(m) if m.role != ChatRole::System => {
                return Err(LlmError::InvalidRequest("first message must be the system prompt".into()))
            }
            _ => {}
        }
        let params = self.policy.params(kind);
        let request = CompletionRequest {
            model: self.model.clone(),
            messages,
            temperature: params.temperature,
            top_p: params.top_p,
        };
        let mut attempt = 1;
        let result = loop {
            let outcome = {
                let _permit = self.limiter.acquire().await.expect("limiter never closes");
                self.backend.complete(&request).await
            };
            match outcome {
                Err(e) if e.is_transient() && attempt < self.retry.attempts => {
                    tracing::debug!(attempt, error = %e, "retrying completion");
                    tokio::time::sleep(self.retry.base_delay * 2u32.pow(attempt - 1)).await;
                    attempt += 1;
                }
                other => break other,
            }
        };
        match result {
            Ok(completion) => {
                rec.record(
                    stage,
                    question,
                    Event::Exchange {
                        role_kind: kind,
                        temperature: request.temperature,
                        top_p: request.top_p,
                        model: request.model,
                        messages: request.messages,
                        response: completion.text.clone(),
                        usage: completion.usage,
                    },
                );
                Ok(completion.text)
            }
            Err(e) => {
                rec.record(
                    stage,
                    question,
                    Event::Failure {
                        message: format!("completion failed: {e}"),
                    },
                );
                Err(e)
            }
        }
    }

    /// Completes and parses with `parse`. A rejected reply gets one repair
    /// round on the executive role, with the parse error appended; the repair
    /// prompt opens with `repair_header`.
    #[allow(clippy::too_many_arguments)]
    pub async fn complete_parsed<T>(
        &self,
        rec: &Recorder,
        stage: Stage,
        question: Option<usize>,
        kind: RoleKind,
        messages: Vec<ChatMessage>,
        repair_header: &str,
        format_hint: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, LlmError> {
        let first = self.complete(rec, stage, question, kind, messages.clone()).await?;
        let err = match parse(&first) {
            Ok(v) => return Ok(v),
            Err(e) => e,
        };
        let second = self
            .repair(rec, stage, question, messages, first, repair_header, &err, format_hint)
            .await?;
        parse(&second).map_err(|e| {
            rec.record(
                stage,
                question,
                Event::Failure {
                    message: format!("repair failed: {e}"),
                },
            );
            LlmError::Structure(e)
        })
    }

    /// One repair round: replays the conversation with the rejected reply
    /// and asks the executive role for a corrected one.
    #[allow(clippy::too_many_arguments)]
    pub async fn repair(
        &self,
        rec: &Recorder,
        stage: Stage,
        question: Option<usize>,
        mut messages: Vec<ChatMessage>,
        rejected: String,
        repair_header: &str,
        error: &str,
        format_hint: &str,
    ) -> Result<String, LlmError> {
        rec.warn(stage, format!("reply rejected, requesting repair: {error}"));
        messages.push(ChatMessage::assistant(rejected));
        messages.push(ChatMessage::user(format!(
            "{repair_header}\nYour previous reply could not be used: {error}.\nReply again with only {format_hint}."
        )));
        self.complete(rec, Stage::Repair, question, RoleKind::Executive, messages).await
    }

    /// [`complete_parsed`](Self::complete_parsed) against a JSON schema.
    pub async fn complete_structured(
        &self,
        rec: &Recorder,
        stage: Stage,
        question: Option<usize>,
        kind: RoleKind,
        messages: Vec<ChatMessage>,
        repair_header: &str,
        schema: &Schema,
    ) -> Result<Value, LlmError> {
        let hint = format!("a JSON object of the form {}", schema.describe());
        self.complete_parsed(rec, stage, question, kind, messages, repair_header, &hint, |t| {
            parse_with_schema(t, schema)
        })
        .await
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicU32, Ordering};

    use async_trait::async_trait;

    use super::*;
    use crate::llm::structured::TypeTag;
    use crate::llm::{Completion, MockBackend, MockScript};
    use crate::transcript::{Transcript, PHASE_SETUP};

    fn client(backend: Arc<dyn LlmBackend>) -> LlmClient {
        LlmClient::new(
            backend,
            "test-model",
            RolePolicy::default(),
            LlmRetry {
                attempts: 3,
                base_delay: Duration::ZERO,
            },
            4,
        )
    }

    struct Flaky(AtomicU32);

    #[async_trait]
    impl LlmBackend for Flaky {
        async fn complete(&self, _: &CompletionRequest) -> Result<Completion, LlmError> {
            if self.0.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(LlmError::Http {
                    status: 503,
                    body: "busy".into(),
                })
            } else {
                Ok(Completion {
                    text: "done".into(),
                    usage: None,
                })
            }
        }
    }

    #[tokio::test]
    async fn retries_transient_failures() {
        let t = Transcript::new(true);
        let rec = t.recorder(PHASE_SETUP, None);
        let backend = Arc::new(Flaky(AtomicU32::new(0)));
        let c = client(backend.clone());
        let msgs = vec![ChatMessage::system("s"), ChatMessage::user("u")];
        assert_eq!(c.complete(&rec, Stage::Qs, None, RoleKind::Executive, msgs).await.unwrap(), "done");
        assert_eq!(backend.0.load(Ordering::SeqCst), 3);
    }

    #[tokio::test]
    async fn records_role_parameters() {
        let t = Transcript::new(true);
        let rec = t.recorder(PHASE_SETUP, None);
        let mut script = MockScript::default();
        script.push("x", "a").push("y", "b");
        let c = client(Arc::new(MockBackend::new(script)));
        c.complete(&rec, Stage::Mp, None, RoleKind::Creative, vec![ChatMessage::system("s"), ChatMessage::user("x")])
            .await
            .unwrap();
        c.complete(&rec, Stage::Ce, None, RoleKind::Executive, vec![ChatMessage::system("s"), ChatMessage::user("y")])
            .await
            .unwrap();
        let temps: Vec<f64> = t
            .records()
            .iter()
            .filter_map(|r| match &r.event {
                Event::Exchange { temperature, .. } => Some(*temperature),
                _ => None,
            })
            .collect();
        assert_eq!(temps, vec![0.5, 0.0]);
    }

    #[tokio::test]
    async fn first_message_must_be_system() {
        let t = Transcript::new(true);
        let rec = t.recorder(PHASE_SETUP, None);
        let c = client(Arc::new(MockBackend::new(MockScript::default())));
        let err = c
            .complete(&rec, Stage::Qs, None, RoleKind::Executive, vec![ChatMessage::user("u")])
            .await
            .unwrap_err();
        assert!(matches!(err, LlmError::InvalidRequest(_)));
    }

    #[tokio::test]
    async fn repair_then_structure_error() {
        let t = Transcript::new(true);
        let rec = t.recorder(PHASE_SETUP, None);
        let mut script = MockScript::default();
        script.push("ask", "not json").push("REPAIR", "still not json");
        let c = client(Arc::new(MockBackend::new(script)));
        let schema = Schema::new().required("intents", TypeTag::Array(Box::new(TypeTag::String)));
        let err = c
            .complete_structured(
                &rec,
                Stage::De,
                None,
                RoleKind::Creative,
                vec![ChatMessage::system("s"), ChatMessage::user("ask")],
                "[task=REPAIR]",
                &schema,
            )
            .await
            .unwrap_err();
        assert!(matches!(err, LlmError::Structure(_)));
        let stages: Vec<Stage> = t.records().iter().filter(|r| r.is_exchange()).map(|r| r.stage).collect();
        assert_eq!(stages, vec![Stage::De, Stage::Repair]);
    }

    #[tokio::test]
    async fn repair_succeeds() {
        let t = Transcript::new(true);
        let rec = t.recorder(PHASE_SETUP, None);
        let mut script = MockScript::default();
        script.push("ask", "oops").push("REPAIR", "{\"intents\": [\"A1\"]}");
        let c = client(Arc::new(MockBackend::new(script)));
        let schema = Schema::new().required("intents", TypeTag::Array(Box::new(TypeTag::String)));
        let v = c
            .complete_structured(
                &rec,
                Stage::De,
                None,
                RoleKind::Creative,
                vec![ChatMessage::system("s"), ChatMessage::user("ask")],
                "[task=REPAIR]",
                &schema,
            )
            .await
            .unwrap();
        assert_eq!(v["intents"][0], "A1");
    }
}
