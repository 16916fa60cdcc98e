//! Live-network plumbing and the process-wide network guard.
//!
//! Every live provider calls [`begin_request`] before opening a connection.
//! The counter lets hermetic tests assert that nothing touched the network,
//! and [`deny_live_requests`] turns any attempt into an immediate error.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Duration;

use thiserror::Error;

static LIVE_REQUESTS: AtomicUsize = AtomicUsize::new(0);
static DENY_LIVE: AtomicBool = AtomicBool::new(false);

/// Errors raised by search, embedding and LLM providers.
#[derive(Debug, Error)]
pub enum ProviderError {
    /// Connection, timeout or 5xx-class failure; worth one retry.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("http status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Response(String),
    /// A scripted fixture has no entry for the request.
    #[error("script miss: {0}")]
    Script(String),
    #[error("live network access denied: {0}")]
    Denied(String),
    #[error("no {0} provider configured")]
    Unconfigured(&'static str),
}

impl ProviderError {
    pub fn is_transport(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Number of live requests attempted by this process so far.
pub fn live_requests() -> usize {
    LIVE_REQUESTS.load(Ordering::SeqCst)
}

pub fn deny_live_requests(deny: bool) {
    DENY_LIVE.store(deny, Ordering::SeqCst);
}

pub(crate) fn begin_request(url: &str) -> Result<(), ProviderError> {
    LIVE_REQUESTS.fetch_add(1, Ordering::SeqCst);
    if DENY_LIVE.load(Ordering::SeqCst) {
        return Err(ProviderError::Denied(url.to_string()));
    }
    Ok(())
}

pub(crate) fn agent(timeout: Duration, user_agent: &str) -> ureq::Agent {
    ureq::AgentBuilder::new()
        .timeout(timeout)
        .user_agent(user_agent)
        .build()
}

pub(crate) fn map_ureq(err: ureq::Error) -> ProviderError {
    match err {
        ureq::Error::Status(status, resp) => ProviderError::Status {
            status,
            body: resp.into_string().unwrap_or_default().chars().take(512).collect(),
        },
        ureq::Error::Transport(t) => ProviderError::Transport(t.to_string()),
    }
}

pub(crate) fn read_json(resp: ureq::Response) -> Result<serde_json::Value, ProviderError> {
    resp.into_json()
        .map_err(|e| ProviderError::Response(e.to_string()))
}
