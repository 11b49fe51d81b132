//! Brute-force searches that turn the address and selector tricks into
//! concrete artifacts: accounts whose checksum is all lowercase, look-alike
//! address pairs with colliding checksum patterns, and function names whose
//! selector collides with a homograph header.
//!
//! Every search is deterministic for a fixed seed at one worker. With more
//! workers each one draws from its own stream derived from the master seed
//! and the first hit wins.

mod collision;
mod lowercase;
mod pair;
mod twin;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::OnceLock;
use std::thread;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::crypto::{keccak256, ParseError, PrivateKey};

pub use collision::{mine_selector_collision, CollisionFound, CollisionSearchSpec};
pub use lowercase::{is_lowercase_checksum, mine_lowercase_account, mine_lowercase_account_parallel, MinedAccount};
pub use pair::{find_decoy, mine_similar_pair, Mutation, PairStats, SimilarPair};
pub use twin::homograph_twin_selector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinerError {
    #[error("no lowercase-checksum account within {attempts} attempts")]
    LowercaseNotFound { attempts: u64 },
    #[error("no similar pair within budget: {0}")]
    PairNotFound(PairStats),
    #[error("no selector collision after {trials} trials")]
    CollisionNotFound { trials: u64 },
    #[error("invalid search spec: {0}")]
    InvalidSpec(String),
    #[error("invalid substitution: {0}")]
    InvalidSubstitution(String),
}

/// 32-byte master seed for a search.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub [u8; 32]);

impl Seed {
    /// Published default so unattended runs are reproducible.
    pub const DEFAULT: Seed = Seed(*b"lure/default-seed/v1............");

    /// Independent child seed, e.g. one per worker or per repeated run.
    pub fn derive(&self, label: &str, index: u64) -> Seed {
        let mut input = Vec::with_capacity(32 + label.len() + 8);
        input.extend_from_slice(&self.0);
        input.extend_from_slice(label.as_bytes());
        input.extend_from_slice(&index.to_le_bytes());
        Seed(keccak256(input))
    }

    pub(crate) fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.0)
    }

    /// First valid secp256k1 scalar drawn from this seed's stream.
    pub(crate) fn private_key(&self) -> PrivateKey {
        let mut rng = self.rng();
        loop {
            let mut bytes = [0u8; 32];
            rng.fill_bytes(&mut bytes);
            if let Ok(key) = PrivateKey::from_bytes(&bytes) {
                return key;
            }
        }
    }
}

impl Default for Seed {
    fn default() -> Self {
        Seed::DEFAULT
    }
}

impl FromStr for Seed {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crate::crypto::parse_fixed_hex::<32>(s.trim()).map(Seed)
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seed({self})")
    }
}

/// Runs `work(worker_index, stop)` on `workers` threads; the first `Some`
/// raises the stop flag and is returned. One worker runs inline.
pub(crate) fn race<T, F>(workers: usize, work: F) -> Option<T>
where
    T: Send + Sync,
    F: Fn(usize, &AtomicBool) -> Option<T> + Sync,
{
    let stop = AtomicBool::new(false);
    if workers <= 1 {
        return work(0, &stop);
    }
    let slot = OnceLock::new();
    thread::scope(|scope| {
        for w in 0..workers {
            let (work, stop, slot) = (&work, &stop, &slot);
            scope.spawn(move || {
                if let Some(found) = work(w, stop) {
                    let _ = slot.set(found);
                    stop.store(true, Ordering::Release);
                }
            });
        }
    });
    slot.into_inner()
}
