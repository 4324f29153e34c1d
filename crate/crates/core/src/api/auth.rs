use axum::extract::{Request, State};
use axum::http::header::{AUTHORIZATION, COOKIE};
use axum::http::HeaderMap;
use axum::middleware::Next;
use axum::response::Response;
use subtle::ConstantTimeEq;

use super::error::ApiError;
use super::AppState;
use crate::endpoints::Principal;

pub const COOKIE_NAME: &str = "agentclick_token";

/// Secrets per principal. Both default to the same token.
#[derive(Debug, Clone)]
pub struct Tokens {
    pub agent: String,
    pub reviewer: String,
}

pub fn token_matches(presented: &str, expected: &str) -> bool {
    presented.as_bytes().ct_eq(expected.as_bytes()).into()
}

fn presented(headers: &HeaderMap) -> Vec<&str> {
    let mut out = Vec::new();
    if let Some(token) = headers
        .get(AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
    {
        out.push(token.trim());
    }
    for value in headers.get_all(COOKIE) {
        let Ok(value) = value.to_str() else { continue };
        for pair in value.split(';') {
            if let Some((k, v)) = pair.trim().split_once('=') {
                if k == COOKIE_NAME {
                    out.push(v);
                }
            }
        }
    }
    out
}

impl Tokens {
    /// Whether any credential on the request satisfies `principal`. The
    /// agent's memory read also accepts the reviewer token.
    pub fn authorize(&self, headers: &HeaderMap, principal: Principal, allow_reviewer: bool) -> bool {
        let expected: &[&str] = match principal {
            Principal::Anyone => return true,
            Principal::Agent if allow_reviewer => &[&self.agent, &self.reviewer],
            Principal::Agent => &[&self.agent],
            Principal::Reviewer => &[&self.reviewer],
        };
        presented(headers)
            .iter()
            .any(|p| expected.iter().fold(false, |ok, e| ok | token_matches(p, e)))
    }
}

async fn guard(state: &AppState, principal: Principal, allow_reviewer: bool, req: Request, next: Next) -> Result<Response, ApiError> {
    if !state.tokens.authorize(req.headers(), principal, allow_reviewer) {
        return Err(ApiError::Unauthorized);
    }
    Ok(next.run(req).await)
}

pub async fn require_agent(State(state): State<AppState>, req: Request, next: Next) -> Result<Response, ApiError> {
    guard(&state, Principal::Agent, false, req, next).await
}

pub async fn require_reviewer(State(state): State<AppState>, req: Request, next: Next) -> Result<Response, ApiError> {
    guard(&state, Principal::Reviewer, false, req, next).await
}

pub async fn require_any_token(State(state): State<AppState>, req: Request, next: Next) -> Result<Response, ApiError> {
    guard(&state, Principal::Agent, true, req, next).await
}
