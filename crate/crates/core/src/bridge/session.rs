use std::sync::Arc;

use thiserror::Error;

use super::provider::{ChatMessage, ChatParams, ChatProvider, ProviderError, ProviderProfile, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("provider timed out after retry: {0}")]
    ProviderTimeout(String),
    #[error("provider rejected the request: {0}")]
    ProviderRejected(String),
    #[error("context overflow: ~{estimated} tokens exceeds budget of {budget}")]
    ContextOverflow { estimated: u64, budget: u64 },
    #[error("message is empty")]
    EmptyMessage,
}

/// Rough token count: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// A conversation with one model. The transcript only grows, and only by
/// complete user/assistant pairs.
pub struct ChatSession {
    provider_id: String,
    model_id: String,
    context_tokens: u64,
    params: ChatParams,
    transcript: Vec<ChatMessage>,
    provider: Arc<dyn ChatProvider>,
}

impl ChatSession {
    pub fn new(profile: &ProviderProfile, provider: Arc<dyn ChatProvider>) -> Self {
        Self {
            provider_id: profile.id.clone(),
            model_id: profile.model_id.clone(),
            context_tokens: profile.context_tokens,
            params: ChatParams::default(),
            transcript: Vec::new(),
            provider,
        }
    }

    pub fn with_params(mut self, params: ChatParams) -> Self {
        self.params = params;
        self
    }

    /// Only valid before the first exchange.
    pub fn with_system(mut self, content: impl Into<String>) -> Self {
        assert!(self.transcript.is_empty(), "system message must come first");
        self.transcript.push(ChatMessage::system(content));
        self
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn transcript(&self) -> &[ChatMessage] {
        &self.transcript
    }

    pub fn estimated_tokens(&self) -> u64 {
        self.transcript.iter().map(|m| estimate_tokens(&m.content)).sum()
    }

    /// Sends `message` with the whole transcript as context and records the
    /// exchange. Transient failures are retried once.
    pub fn send(&mut self, message: &str) -> Result<String, SessionError> {
        if message.trim().is_empty() {
            return Err(SessionError::EmptyMessage);
        }
        let estimated = self.estimated_tokens() + estimate_tokens(message);
        if estimated > self.context_tokens {
            return Err(SessionError::ContextOverflow {
                estimated,
                budget: self.context_tokens,
            });
        }
        let mut messages = self.transcript.clone();
        messages.push(ChatMessage::user(message));

        let mut attempt = self.provider.complete(&messages, &self.params);
        if let Err(e) = &attempt {
            if e.is_transient() {
                tracing::debug!(provider = %self.provider_id, "retrying after transient failure: {e}");
                attempt = self.provider.complete(&messages, &self.params);
            }
        }
        let reply = attempt.map_err(|e| match e {
            ProviderError::Timeout(d) | ProviderError::Transport(d) => SessionError::ProviderTimeout(d),
            ProviderError::Rejected(d) => SessionError::ProviderRejected(d),
        })?;
        debug_assert!(self.transcript.last().is_none_or(|m| m.role != Role::User));
        self.transcript = messages;
        self.transcript.push(ChatMessage::assistant(reply.clone()));
        Ok(reply)
    }
}
