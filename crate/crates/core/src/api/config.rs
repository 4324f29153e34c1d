use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::time::Duration;

use crate::session::DEFAULT_TTL;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    pub data_dir: Option<PathBuf>,
    pub memory_file: PathBuf,
    pub token: Option<String>,
    pub reviewer_token: Option<String>,
    pub external_url: Option<String>,
    pub session_ttl: Duration,
    pub max_wait: Duration,
    pub generate_skills: Option<PathBuf>,
    pub ui: bool,
    pub fsync: bool,
    pub sweep_interval: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            host: "127.0.0.1".into(),
            port: 4517,
            data_dir: None,
            memory_file: PathBuf::from("MEMORY.md"),
            token: None,
            reviewer_token: None,
            external_url: None,
            session_ttl: DEFAULT_TTL,
            max_wait: Duration::from_secs(30),
            generate_skills: None,
            ui: true,
            fsync: true,
            sweep_interval: Duration::from_secs(1),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{name} must be 16 to 256 printable ASCII characters without spaces, `;` or `,`")]
    BadToken { name: &'static str },
    #[error("external url `{0}` is not an absolute http(s) URL")]
    BadExternalUrl(String),
    #[error("session ttl must be positive")]
    ZeroTtl,
}

fn token_ok(t: &str) -> bool {
    (16..=256).contains(&t.len()) && t.bytes().all(|b| b.is_ascii_graphic() && b != b';' && b != b',')
}

impl ServerConfig {
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.token.as_deref().is_some_and(|t| !token_ok(t)) {
            return Err(ConfigError::BadToken { name: "token" });
        }
        if self.reviewer_token.as_deref().is_some_and(|t| !token_ok(t)) {
            return Err(ConfigError::BadToken { name: "reviewer token" });
        }
        if let Some(url) = &self.external_url {
            let ok = url::Url::parse(url).is_ok_and(|u| matches!(u.scheme(), "http" | "https") && u.host().is_some());
            if !ok {
                return Err(ConfigError::BadExternalUrl(url.clone()));
            }
        }
        if self.session_ttl.is_zero() {
            return Err(ConfigError::ZeroTtl);
        }
        Ok(())
    }

    /// The configured external URL, or one derived from the bound address.
    pub fn base_url(&self, bound: SocketAddr) -> String {
        if let Some(url) = &self.external_url {
            return url.trim_end_matches('/').to_string();
        }
        let ip = match bound.ip() {
            ip if ip.is_unspecified() => IpAddr::V4(Ipv4Addr::LOCALHOST),
            ip => ip,
        };
        format!("http://{}", SocketAddr::new(ip, bound.port()))
    }
}

fn parse_duration(s: &str) -> Result<Duration, String> {
    humantime::parse_duration(s).map_err(|e| e.to_string())
}

/// Flags for `agentclick serve`.
#[derive(Debug, Clone, clap::Args)]
pub struct ServeArgs {
    #[arg(long, env = "AGENTCLICK_HOST", default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "AGENTCLICK_PORT", default_value_t = 4517)]
    pub port: u16,
    /// Directory for session event logs; sessions are kept in memory only when unset.
    #[arg(long, env = "AGENTCLICK_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, env = "AGENTCLICK_MEMORY_FILE", default_value = "./MEMORY.md")]
    pub memory_file: PathBuf,
    /// Shared secret; a random one is generated and printed when unset.
    #[arg(long, env = "AGENTCLICK_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    /// Separate secret for reviewer endpoints; defaults to --token.
    #[arg(long, env = "AGENTCLICK_REVIEWER_TOKEN", hide_env_values = true)]
    pub reviewer_token: Option<String>,
    /// Base URL reviewers and agents reach the server at, e.g. a tunnel hostname.
    #[arg(long, env = "AGENTCLICK_EXTERNAL_URL")]
    pub external_url: Option<String>,
    #[arg(long, env = "AGENTCLICK_SESSION_TTL", default_value = "24h", value_parser = parse_duration)]
    pub session_ttl: Duration,
    #[arg(long, env = "AGENTCLICK_MAX_WAIT_MS", default_value_t = 30_000)]
    pub max_wait_ms: u64,
    /// Write the skill bundle to this directory after binding.
    #[arg(long, env = "AGENTCLICK_GENERATE_SKILLS")]
    pub generate_skills: Option<PathBuf>,
    #[arg(long, env = "AGENTCLICK_NO_UI")]
    pub no_ui: bool,
}

impl From<ServeArgs> for ServerConfig {
    fn from(a: ServeArgs) -> Self {
        ServerConfig {
            host: a.host,
            port: a.port,
            data_dir: a.data_dir,
            memory_file: a.memory_file,
            token: a.token,
            reviewer_token: a.reviewer_token,
            external_url: a.external_url,
            session_ttl: a.session_ttl,
            max_wait: Duration::from_millis(a.max_wait_ms),
            generate_skills: a.generate_skills,
            ui: !a.no_ui,
            ..ServerConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_url_falls_back_to_loopback() {
        let cfg = ServerConfig::default();
        assert_eq!(cfg.base_url("0.0.0.0:9000".parse().unwrap()), "http://127.0.0.1:9000");
        assert_eq!(cfg.base_url("10.1.2.3:9000".parse().unwrap()), "http://10.1.2.3:9000");
        let cfg = ServerConfig { external_url: Some("https://r.example.org/".into()), ..cfg };
        assert_eq!(cfg.base_url("0.0.0.0:9000".parse().unwrap()), "https://r.example.org");
    }

    #[test]
    fn check_rejects_bad_values() {
        let ok = ServerConfig::default();
        assert_eq!(ok.check(), Ok(()));
        let short = ServerConfig { token: Some("abc".into()), ..ok.clone() };
        assert_eq!(short.check(), Err(ConfigError::BadToken { name: "token" }));
        let cookie_breaker = ServerConfig { token: Some("aaaaaaaaaaaaaaaa;x".into()), ..ok.clone() };
        assert!(cookie_breaker.check().is_err());
        let url = ServerConfig { external_url: Some("example.org".into()), ..ok };
        assert!(matches!(url.check(), Err(ConfigError::BadExternalUrl(_))));
    }
}
