//! Append-only response cache: `<root>/<network>/<lowerhex>.jsonl` holds
//! every payload fetched for one address, newest last, and
//! `<root>/<network>/index.tsv` lists each append for quick inspection.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use lure_core::crypto::{keccak256, Address};
use serde::{Deserialize, Serialize};

use crate::config::Network;
use crate::ClientError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    /// Raw `getsourcecode` response body.
    Source,
    /// Outgoing transaction count, as decimal text.
    TxCount,
}

impl EntryKind {
    fn as_str(&self) -> &'static str {
        match self {
            EntryKind::Source => "source",
            EntryKind::TxCount => "tx_count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub address: Address,
    pub kind: EntryKind,
    /// Seconds since the Unix epoch.
    pub fetched_at: u64,
    pub payload: String,
    /// Hex keccak256 of `payload`.
    pub payload_digest: String,
}

impl CacheEntry {
    pub fn new(address: Address, kind: EntryKind, payload: String, fetched_at: u64) -> Self {
        let payload_digest = digest(&payload);
        CacheEntry { address, kind, fetched_at, payload, payload_digest }
    }

    pub fn digest_ok(&self) -> bool {
        digest(&self.payload) == self.payload_digest
    }

    /// Fresh when younger than `ttl`; `None` never expires.
    pub fn is_fresh(&self, ttl: Option<Duration>, now: u64) -> bool {
        ttl.is_none_or(|ttl| now.saturating_sub(self.fetched_at) < ttl.as_secs())
    }
}

fn digest(payload: &str) -> String {
    hex::encode(keccak256(payload.as_bytes()))
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Debug)]
pub struct Cache {
    root: PathBuf,
    network: Network,
    /// Serializes appends so lines never interleave.
    write: Mutex<()>,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>, network: Network) -> Self {
        Cache { root: root.into(), network, write: Mutex::new(()) }
    }

    pub fn dir(&self) -> PathBuf {
        self.root.join(self.network.as_str())
    }

    pub fn file_for(&self, address: &Address) -> PathBuf {
        self.dir().join(format!("{}.jsonl", address.to_lower_hex()))
    }

    /// Newest intact entry of `kind` for `address`. Lines that fail to parse
    /// or whose digest does not match are ignored.
    pub fn latest(&self, address: &Address, kind: EntryKind) -> Result<Option<CacheEntry>, ClientError> {
        let path = self.file_for(address);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(ClientError::cache(path, e)),
        };
        Ok(text
            .lines()
            .rev()
            .filter_map(|l| serde_json::from_str::<CacheEntry>(l).ok())
            .find(|e| e.kind == kind && e.address == *address && e.digest_ok()))
    }

    pub fn append(&self, entry: &CacheEntry) -> Result<(), ClientError> {
        let _guard = self.write.lock().unwrap_or_else(|p| p.into_inner());
        let dir = self.dir();
        fs::create_dir_all(&dir).map_err(|e| ClientError::cache(dir.clone(), e))?;

        let path = self.file_for(&entry.address);
        let line = serde_json::to_string(entry).expect("cache entries serialize");
        append_line(&path, &line)?;
        let index = dir.join("index.tsv");
        let row = format!(
            "{}\t{}\t{}\t{}",
            entry.address.to_lower_hex(),
            entry.kind.as_str(),
            entry.fetched_at,
            entry.payload_digest
        );
        append_line(&index, &row)
    }
}

fn append_line(path: &Path, line: &str) -> Result<(), ClientError> {
    let err = |e| ClientError::cache(path.to_owned(), e);
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
    writeln!(f, "{line}").map_err(err)
}
