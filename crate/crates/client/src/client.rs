use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::thread;

use log::{debug, warn};
use lure_core::crypto::Address;
use lure_core::scanner::{TxCountError, TxCounter};
use serde_json::Value;

use crate::cache::{unix_now, Cache, CacheEntry, EntryKind};
use crate::config::NetworkConfig;
use crate::limiter::RateLimiter;
use crate::ClientError;

/// Response bodies larger than this are refused.
const BODY_LIMIT: u64 = 64 * 1024 * 1024;

/// Transactions per `txlist` page. The explorer caps `page * offset` at
/// 10,000, so larger histories are counted only up to that window.
const TX_PAGE: usize = 1000;
const TX_PAGES: usize = 10;

type Flight = Arc<OnceLock<Result<String, ClientError>>>;

/// Shareable across threads: the rate limiter, cache appends and in-flight
/// table are internally synchronized.
pub struct ExplorerClient {
    config: NetworkConfig,
    endpoint: String,
    agent: ureq::Agent,
    limiter: RateLimiter,
    cache: Option<Cache>,
    in_flight: Mutex<HashMap<(Address, EntryKind), Flight>>,
    requests: AtomicU64,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(ClientError),
}

impl ExplorerClient {
    /// A client caching under `cache_dir`, or not caching at all.
    pub fn new(config: NetworkConfig, cache_dir: Option<PathBuf>) -> Result<Self, ClientError> {
        config.validate()?;
        let endpoint = config.endpoint().expect("validated").to_owned();
        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder().timeout_global(Some(config.timeout)).http_status_as_error(false).build(),
        );
        Ok(ExplorerClient {
            limiter: RateLimiter::new(config.rate_limit),
            cache: cache_dir.map(|d| Cache::new(d, config.name)),
            endpoint,
            agent,
            config,
            in_flight: Mutex::new(HashMap::new()),
            requests: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// HTTP requests sent so far, retries included.
    pub fn requests_sent(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// The raw `getsourcecode` response for `address`, ready for
    /// `lure_core::scanner::preprocess`.
    pub fn fetch_source(&self, address: &Address) -> Result<String, ClientError> {
        self.cached(address, EntryKind::Source, self.config.source_ttl, || {
            let body = self.call(&[("module", "contract"), ("action", "getsourcecode"), ("address", &hex(address))])?;
            let envelope: Value = parse(&body)?;
            let record = envelope.get("result").and_then(|r| r.get(0));
            match record.and_then(|r| r.get("SourceCode")).and_then(Value::as_str) {
                Some(s) if !s.trim().is_empty() => Ok(body),
                Some(_) => Err(ClientError::NotVerified { address: *address }),
                None => Err(api_error(&envelope)),
            }
        })
    }

    /// Transactions sent by `address`, from the explorer's transaction list.
    pub fn outgoing_tx_count(&self, address: &Address) -> Result<u64, ClientError> {
        let text = self.cached(address, EntryKind::TxCount, self.config.tx_count_ttl, || {
            let me = hex(address);
            let mut count = 0u64;
            for page in 1..=TX_PAGES {
                let (page, offset) = (page.to_string(), TX_PAGE.to_string());
                let body = self.call(&[
                    ("module", "account"),
                    ("action", "txlist"),
                    ("address", &me),
                    ("startblock", "0"),
                    ("endblock", "99999999"),
                    ("page", &page),
                    ("offset", &offset),
                    ("sort", "asc"),
                ])?;
                let envelope: Value = parse(&body)?;
                let txs = match envelope.get("result") {
                    Some(Value::Array(txs)) => txs,
                    _ if message(&envelope).starts_with("No transactions found") => break,
                    _ => return Err(api_error(&envelope)),
                };
                count += txs
                    .iter()
                    .filter(|tx| tx.get("from").and_then(Value::as_str).is_some_and(|f| f.eq_ignore_ascii_case(&me)))
                    .count() as u64;
                if txs.len() < TX_PAGE {
                    break;
                }
            }
            Ok(count.to_string())
        })?;
        text.parse().map_err(|_| ClientError::Malformed(format!("cached count {text:?}")))
    }

    /// Cache lookup, then one fetch per key no matter how many callers
    /// arrive while it runs. Only successes are stored.
    fn cached(
        &self,
        address: &Address,
        kind: EntryKind,
        ttl: Option<std::time::Duration>,
        fetch: impl FnOnce() -> Result<String, ClientError>,
    ) -> Result<String, ClientError> {
        if let Some(hit) = self.fresh(address, kind, ttl)? {
            return Ok(hit);
        }
        let key = (*address, kind);
        let flight: Flight = self.in_flight.lock().unwrap_or_else(|p| p.into_inner()).entry(key).or_default().clone();
        let result = flight
            .get_or_init(|| {
                // a flight that just landed may have filled the cache
                if let Some(hit) = self.fresh(address, kind, ttl)? {
                    return Ok(hit);
                }
                let payload = fetch()?;
                if let Some(cache) = &self.cache {
                    cache.append(&CacheEntry::new(*address, kind, payload.clone(), unix_now()))?;
                }
                Ok(payload)
            })
            .clone();
        let mut table = self.in_flight.lock().unwrap_or_else(|p| p.into_inner());
        if table.get(&key).is_some_and(|f| Arc::ptr_eq(f, &flight)) {
            table.remove(&key);
        }
        result
    }

    fn fresh(
        &self,
        address: &Address,
        kind: EntryKind,
        ttl: Option<std::time::Duration>,
    ) -> Result<Option<String>, ClientError> {
        let Some(cache) = &self.cache else {
            return Ok(None);
        };
        Ok(cache.latest(address, kind)?.filter(|e| e.is_fresh(ttl, unix_now())).map(|e| e.payload))
    }

    /// One API call with rate limiting and retries.
    fn call(&self, params: &[(&str, &str)]) -> Result<String, ClientError> {
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                let delay = self.config.backoff(attempt - 1);
                debug!("retry {} of {} in {:?}: {last}", attempt - 1, self.config.max_retries, delay);
                thread::sleep(delay);
            }
            match self.attempt(params) {
                Attempt::Done(body) => return Ok(body),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(reason) => last = reason,
            }
        }
        warn!("giving up after {attempts} attempts: {last}");
        Err(ClientError::Transport { attempts, reason: last })
    }

    fn attempt(&self, params: &[(&str, &str)]) -> Attempt {
        self.limiter.acquire();
        self.requests.fetch_add(1, Ordering::Relaxed);
        let mut request = self.agent.get(&self.endpoint);
        for (k, v) in params {
            request = request.query(*k, *v);
        }
        if let Some(key) = &self.config.api_key {
            request = request.query("apikey", key);
        }
        let mut response = match request.call() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("http status {status}"));
        }
        if status >= 400 {
            return Attempt::Fail(ClientError::Api(format!("http status {status}")));
        }
        let body = match response.body_mut().with_config().limit(BODY_LIMIT).read_to_string() {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        // the explorer reports throttling inside a 200 response
        if let Ok(envelope) = serde_json::from_str::<Value>(&body) {
            if envelope.get("status").and_then(Value::as_str) == Some("0") {
                let detail = envelope.get("result").and_then(Value::as_str).unwrap_or_default();
                if detail.to_ascii_lowercase().contains("rate limit") {
                    return Attempt::Retry(detail.to_owned());
                }
            }
        }
        Attempt::Done(body)
    }
}

impl TxCounter for ExplorerClient {
    fn outgoing_tx_count(&self, address: &Address) -> Result<u64, TxCountError> {
        ExplorerClient::outgoing_tx_count(self, address).map_err(|e| TxCountError(e.to_string()))
    }
}

fn hex(address: &Address) -> String {
    format!("0x{}", address.to_lower_hex())
}

fn parse(body: &str) -> Result<Value, ClientError> {
    serde_json::from_str(body).map_err(|e| ClientError::Malformed(e.to_string()))
}

fn message(envelope: &Value) -> &str {
    envelope.get("message").and_then(Value::as_str).unwrap_or_default()
}

fn api_error(envelope: &Value) -> ClientError {
    let detail = envelope.get("result").and_then(Value::as_str).unwrap_or_default();
    ClientError::Api(format!("{} {}", message(envelope), detail).trim().to_owned())
}
