//! The HTTP endpoint table shared by the server, the skill bundle and the
//! fixture coverage checks.

pub const API_PREFIX: &str = "/api/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Principal {
    Agent,
    Reviewer,
    Anyone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub method: &'static str,
    /// Path template below [`API_PREFIX`], with `{id}` placeholders.
    pub path: &'static str,
    pub principal: Principal,
    pub name: &'static str,
}

pub const ENDPOINTS: &[Endpoint] = &[
    Endpoint { method: "POST", path: "/proposals", principal: Principal::Agent, name: "submit_proposal" },
    Endpoint { method: "GET", path: "/proposals/{id}/outcome", principal: Principal::Agent, name: "poll_outcome" },
    Endpoint { method: "PUT", path: "/proposals/{id}/artifact", principal: Principal::Agent, name: "update_artifact" },
    Endpoint { method: "GET", path: "/sessions", principal: Principal::Reviewer, name: "list_sessions" },
    Endpoint { method: "GET", path: "/sessions/{id}", principal: Principal::Reviewer, name: "get_session" },
    Endpoint { method: "POST", path: "/sessions/{id}/actions", principal: Principal::Reviewer, name: "post_action" },
    Endpoint { method: "POST", path: "/sessions/{id}/resolve", principal: Principal::Reviewer, name: "resolve" },
    Endpoint { method: "GET", path: "/sessions/{id}/events", principal: Principal::Reviewer, name: "events" },
    Endpoint { method: "GET", path: "/memory", principal: Principal::Agent, name: "read_memory" },
    Endpoint { method: "POST", path: "/memory/actions", principal: Principal::Reviewer, name: "memory_action" },
    Endpoint { method: "GET", path: "/healthz", principal: Principal::Anyone, name: "healthz" },
];

/// The subset an agent needs: submit, poll, update, read memory.
pub fn agent_endpoints() -> impl Iterator<Item = &'static Endpoint> {
    ENDPOINTS.iter().filter(|e| e.principal == Principal::Agent)
}

impl Endpoint {
    pub fn full_path(&self) -> String {
        format!("{API_PREFIX}{}", self.path)
    }

    /// Whether a concrete path (query string allowed) matches this template.
    pub fn matches(&self, method: &str, path: &str) -> bool {
        self.method.eq_ignore_ascii_case(method) && template_matches(&self.full_path(), path)
    }
}

fn template_matches(template: &str, path: &str) -> bool {
    let path = path.split('?').next().unwrap_or(path).trim_end_matches('/');
    let t: Vec<&str> = template.split('/').collect();
    let p: Vec<&str> = path.split('/').collect();
    t.len() == p.len()
        && t.iter().zip(&p).all(|(ts, ps)| if ts.starts_with('{') { !ps.is_empty() } else { ts == ps })
}

/// Finds the endpoint a request hits.
pub fn lookup(method: &str, path: &str) -> Option<&'static Endpoint> {
    ENDPOINTS.iter().find(|e| e.matches(method, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_concrete_path() {
        assert_eq!(lookup("GET", "/api/v1/proposals/abc/outcome?wait_ms=0").unwrap().name, "poll_outcome");
        assert_eq!(lookup("get", "/api/v1/sessions/abc").unwrap().name, "get_session");
        assert_eq!(lookup("GET", "/api/v1/sessions").unwrap().name, "list_sessions");
        assert!(lookup("DELETE", "/api/v1/sessions/abc").is_none());
        assert!(lookup("GET", "/api/v1/sessions//events").is_none());
        assert_eq!(agent_endpoints().count(), 4);
    }
}
