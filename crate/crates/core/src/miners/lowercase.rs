use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use serde::Serialize;

use super::{race, MinerError, Seed};
use crate::crypto::{derive_address, eip55_encode, eip55_validate, Address, Eip55Class, KeyWalk, PrivateKey};

/// An account whose EIP-55 rendering carries no uppercase letter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinedAccount {
    #[serde(serialize_with = "key_hex")]
    pub key: PrivateKey,
    pub address: Address,
    pub attempts: u64,
    pub elapsed_ms: u128,
}

fn key_hex<S: serde::Serializer>(key: &PrivateKey, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&key.to_hex())
}

impl MinedAccount {
    /// `key<TAB>eip55-address<TAB>attempts<TAB>elapsed-ms`
    pub fn to_record(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.key.to_hex(), eip55_encode(&self.address), self.attempts, self.elapsed_ms)
    }

    /// Re-derives the address and re-classifies its checksum.
    pub fn verify(&self) -> Result<(), String> {
        if derive_address(&self.key) != self.address {
            return Err(format!("key does not derive {}", self.address));
        }
        let class = eip55_validate(eip55_encode(&self.address).as_str());
        if class != Eip55Class::AllLowercase {
            return Err(format!("{} classifies as {class}", self.address));
        }
        Ok(())
    }
}

/// The acceptance predicate: no hex letter gets capitalized.
pub fn is_lowercase_checksum(addr: &Address) -> bool {
    addr.checksum_case_mask() == 0
}

/// Walks keys from the seed's first scalar until an all-lowercase checksum
/// appears. Deterministic for a given seed.
pub fn mine_lowercase_account(seed: &Seed, max_attempts: u64) -> Result<MinedAccount, MinerError> {
    mine_lowercase_account_parallel(seed, max_attempts, 1)
}

/// As [`mine_lowercase_account`] across `workers` threads. `max_attempts`
/// bounds the total. With one worker the stream is the master seed's; with
/// more, worker `w` uses `seed.derive("worker", w)`.
pub fn mine_lowercase_account_parallel(
    seed: &Seed,
    max_attempts: u64,
    workers: usize,
) -> Result<MinedAccount, MinerError> {
    let max_attempts = max_attempts.max(1);
    let started = Instant::now();
    let attempts = AtomicU64::new(0);
    let workers = workers.max(1);

    let found = race(workers, |w, stop: &AtomicBool| {
        let worker_seed = if workers == 1 { *seed } else { seed.derive("worker", w as u64) };
        let mut walk = KeyWalk::new(&worker_seed.private_key());
        loop {
            if stop.load(Ordering::Relaxed) {
                return None;
            }
            let n = attempts.fetch_add(1, Ordering::Relaxed) + 1;
            if n > max_attempts {
                return None;
            }
            let address = walk.current_address();
            if is_lowercase_checksum(&address) {
                return Some((walk.current_key(), address, n));
            }
            walk.advance();
        }
    });

    match found {
        Some((key, address, n)) => {
            let attempts = if workers == 1 { n } else { attempts.load(Ordering::Relaxed).min(max_attempts) };
            Ok(MinedAccount { key, address, attempts, elapsed_ms: started.elapsed().as_millis() })
        }
        None => Err(MinerError::LowercaseNotFound { attempts: max_attempts }),
    }
}
