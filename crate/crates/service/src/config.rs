use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ServiceError;

/// Environment variable overriding the configured listen address.
pub const LISTEN_ENV: &str = "CORPUSDEDUP_LISTEN";

/// Service configuration, read from TOML:
///
/// ```toml
/// listen = "127.0.0.1:8080"
/// max_document_bytes = 1048576
/// request_timeout_ms = 30000
/// static_dir = "webui/dist"
///
/// [datasets.jm52m]
/// index_dir = "indexes/jm52m"     # every manifest found here
/// manifests = ["extra/jm52m.t0.90.manifest.json"]
/// store = "stores/jm52m"          # overrides the store recorded in manifests
/// ```
///
/// Relative paths are resolved against the configuration file's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default = "default_max_bytes")]
    pub max_document_bytes: usize,
    #[serde(default = "default_timeout")]
    pub request_timeout_ms: u64,
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
    #[serde(default)]
    pub datasets: BTreeMap<String, DatasetConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub index_dir: Option<PathBuf>,
    #[serde(default)]
    pub manifests: Vec<PathBuf>,
    #[serde(default)]
    pub store: Option<PathBuf>,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

fn default_max_bytes() -> usize {
    1 << 20
}

fn default_timeout() -> u64 {
    30_000
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: default_listen(),
            max_document_bytes: default_max_bytes(),
            request_timeout_ms: default_timeout(),
            static_dir: None,
            datasets: BTreeMap::new(),
        }
    }
}

impl ServiceConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self, ServiceError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(dir) = cfg.static_dir.as_mut() {
            abs(dir);
        }
        for ds in cfg.datasets.values_mut() {
            ds.index_dir.as_mut().map(abs);
            ds.manifests.iter_mut().for_each(abs);
            ds.store.as_mut().map(abs);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Applies [`LISTEN_ENV`] if set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(addr) = std::env::var(LISTEN_ENV) {
            if !addr.trim().is_empty() {
                self.listen = addr.trim().to_string();
            }
        }
        self
    }

    pub fn listen_addr(&self) -> Result<SocketAddr, ServiceError> {
        self.listen.parse().map_err(|e| ServiceError::Config(format!("listen address {:?}: {e}", self.listen)))
    }

    fn validate(&self) -> Result<(), ServiceError> {
        if self.max_document_bytes == 0 || self.request_timeout_ms == 0 {
            return Err(ServiceError::Config("max_document_bytes and request_timeout_ms must be positive".into()));
        }
        for (name, ds) in &self.datasets {
            if ds.index_dir.is_none() && ds.manifests.is_empty() {
                return Err(ServiceError::Config(format!("dataset {name} has neither index_dir nor manifests")));
            }
        }
        Ok(())
    }
}
