//! Prediction collection from chat-completion providers.

pub mod collect;
pub mod prompt;
pub mod provider;

pub use collect::{
    collect_predictions, split_response, CollectError, CollectOptions, CollectSummary,
};
pub use prompt::{build_prompt, PROMPT_TEMPLATE_VERSION};
pub use provider::{
    load_mock_fixture, prompt_hash, GatewayError, Provider, ProviderConfig, ProviderKind,
    RetryPolicy,
};

/// Sends one prompt through the configured provider.
pub fn query_model(provider: &Provider, prompt: &str) -> Result<String, GatewayError> {
    provider.query(prompt)
}
