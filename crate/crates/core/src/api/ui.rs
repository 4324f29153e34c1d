use axum::extract::{Path, State};
use axum::http::header::{CACHE_CONTROL, LOCATION, SET_COOKIE};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;

use super::auth::{token_matches, COOKIE_NAME};
use super::AppState;

const SHELL: &str = include_str!("ui/index.html");

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/", get(shell))
        .route("/review/{id}", get(shell))
        .route("/memory", get(shell))
        .route("/t/{token}/review/{id}", get(bootstrap))
}

async fn shell() -> Response {
    let mut res = Html(SHELL).into_response();
    res.headers_mut().insert(CACHE_CONTROL, HeaderValue::from_static("no-store"));
    res
}

/// Trades a token in the path for a cookie, then redirects to the review
/// page so the token does not stay in the address bar.
async fn bootstrap(State(state): State<AppState>, Path((token, id)): Path<(String, String)>) -> Response {
    if !token_matches(&token, &state.tokens.reviewer) {
        return StatusCode::UNAUTHORIZED.into_response();
    }
    let location = format!("/review/{}", id.replace(|c: char| !c.is_ascii_alphanumeric() && c != '-', ""));
    let cookie = format!("{COOKIE_NAME}={token}; Path=/; HttpOnly; SameSite=Strict");
    let mut res = StatusCode::SEE_OTHER.into_response();
    let headers = res.headers_mut();
    headers.insert(LOCATION, HeaderValue::from_str(&location).expect("sanitized path"));
    if let Ok(v) = HeaderValue::from_str(&cookie) {
        headers.insert(SET_COOKIE, v);
    }
    headers.insert(CACHE_CONTROL, HeaderValue::from_static("no-store"));
    res
}
