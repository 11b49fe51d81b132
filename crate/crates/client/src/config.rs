use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ClientError;

/// Environment variable read for the explorer API key.
pub const API_KEY_ENV: &str = "ETHERSCAN_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Mainnet,
    Ropsten,
    Kovan,
    /// Any explorer with the same API; needs an explicit base URL.
    Custom,
}

impl Network {
    pub fn as_str(&self) -> &'static str {
        match self {
            Network::Mainnet => "mainnet",
            Network::Ropsten => "ropsten",
            Network::Kovan => "kovan",
            Network::Custom => "custom",
        }
    }

    pub fn default_base_url(&self) -> Option<&'static str> {
        match self {
            Network::Mainnet => Some("https://api.etherscan.io/api"),
            Network::Ropsten => Some("https://api-ropsten.etherscan.io/api"),
            Network::Kovan => Some("https://api-kovan.etherscan.io/api"),
            Network::Custom => None,
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Network {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mainnet" => Ok(Network::Mainnet),
            "ropsten" => Ok(Network::Ropsten),
            "kovan" => Ok(Network::Kovan),
            "custom" => Ok(Network::Custom),
            other => Err(format!("unknown network {other:?}")),
        }
    }
}

/// Where to send requests and how politely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub name: Network,
    /// Overrides the network's public endpoint; required for `custom`.
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    /// Requests per second, shared by every caller of one client.
    pub rate_limit: f64,
    /// Retries after the first attempt for transport failures, 5xx and 429.
    pub max_retries: u32,
    #[serde(with = "millis")]
    pub initial_backoff: Duration,
    #[serde(with = "millis")]
    pub max_backoff: Duration,
    #[serde(with = "millis")]
    pub timeout: Duration,
    /// How long a cached source stays fresh; `None` keeps it forever since
    /// verified source never changes.
    #[serde(with = "opt_secs")]
    pub source_ttl: Option<Duration>,
    #[serde(with = "opt_secs")]
    pub tx_count_ttl: Option<Duration>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig::new(Network::Mainnet)
    }
}

impl NetworkConfig {
    /// Defaults for a named network. The free explorer tier allows 5
    /// requests per second.
    pub fn new(name: Network) -> Self {
        NetworkConfig {
            name,
            base_url: None,
            api_key: None,
            rate_limit: 5.0,
            max_retries: 4,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
            timeout: Duration::from_secs(30),
            source_ttl: None,
            tx_count_ttl: Some(Duration::from_secs(3600)),
        }
    }

    /// A custom endpoint, e.g. a local mock server.
    pub fn custom(base_url: impl Into<String>) -> Self {
        NetworkConfig { base_url: Some(base_url.into()), ..NetworkConfig::new(Network::Custom) }
    }

    /// Fills `api_key` from the environment when not already set.
    pub fn with_env_api_key(mut self) -> Self {
        if self.api_key.is_none() {
            self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        }
        self
    }

    /// The API endpoint requests go to.
    pub fn endpoint(&self) -> Option<&str> {
        self.base_url.as_deref().or(self.name.default_base_url())
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let invalid = |m: String| Err(ClientError::InvalidConfig(m));
        if !(self.rate_limit.is_finite() && self.rate_limit > 0.0) {
            return invalid(format!("rate_limit must be positive, got {}", self.rate_limit));
        }
        let Some(url) = self.endpoint() else {
            return invalid(format!("network {} needs a base_url", self.name));
        };
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return invalid(format!("base_url must be http(s): {url}"));
        }
        Ok(())
    }

    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 2u32.saturating_pow(retry.saturating_sub(1));
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// Seconds; 0 or absent means no expiry.
mod opt_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.map_or(0, |d| d.as_secs()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        let secs = Option::<u64>::deserialize(d)?.unwrap_or(0);
        Ok((secs > 0).then(|| Duration::from_secs(secs)))
    }
}
