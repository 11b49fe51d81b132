use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{MinerError, Seed};
use crate::crypto::{derive_address, predict_contract_address, Address, KeyWalk, Nonce, PrivateKey};

const NONCES_PER_KEY: u64 = 5;
const ADDRESS_MASK: u64 = (1 << 40) - 1;
const HEX: &[u8; 16] = b"0123456789abcdef";

/// How the displayed address differs from the real one. Positions index the
/// 40 lowercase hex digits from the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mutation {
    /// `real` has `old_digit` at `position` where `decoy` has `new_digit`.
    Substitution { position: usize, old_digit: char, new_digit: char },
    /// Digits at `position` and `position + 1` are exchanged.
    AdjacentSwap { position: usize },
}

impl Mutation {
    pub fn apply(&self, addr: &Address) -> Address {
        match *self {
            Mutation::Substitution { position, new_digit, .. } => {
                addr.with_nibble(position, new_digit.to_digit(16).expect("hex digit") as u8)
            }
            Mutation::AdjacentSwap { position } => {
                let (a, b) = (addr.nibble(position), addr.nibble(position + 1));
                addr.with_nibble(position, b).with_nibble(position + 1, a)
            }
        }
    }

    fn touched(&self) -> u64 {
        match *self {
            Mutation::Substitution { position, .. } => 1 << position,
            Mutation::AdjacentSwap { position } => 0b11 << position,
        }
    }
}

/// A look-alike pair for the fee-address swap: users see `decoy`, funds go
/// to `real`, a contract address the miner can deploy to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarPair {
    pub decoy: Address,
    pub real: Address,
    #[serde(serialize_with = "key_hex")]
    pub deployer_key: PrivateKey,
    pub nonce: Nonce,
    pub mutation: Mutation,
}

fn key_hex<S: serde::Serializer>(key: &PrivateKey, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&key.to_hex())
}

impl SimilarPair {
    /// Re-checks every pair invariant through the crypto primitives.
    pub fn verify(&self) -> Result<(), String> {
        let deployer = derive_address(&self.deployer_key);
        if predict_contract_address(&deployer, self.nonce) != self.real {
            return Err("real address is not the deployer's contract address".into());
        }
        if self.mutation.apply(&self.real) != self.decoy || self.decoy == self.real {
            return Err("decoy is not the recorded mutation of real".into());
        }
        if let Mutation::Substitution { position, old_digit, .. } = self.mutation {
            if HEX[self.real.nibble(position) as usize] as char != old_digit {
                return Err("old digit does not match real".into());
            }
        }
        let decoy_text = self.decoy.to_eip55();
        let real_text = self.real.to_eip55();
        let touched = self.mutation.touched();
        let differs = decoy_text.as_str()[2..]
            .chars()
            .zip(real_text.as_str()[2..].chars())
            .enumerate()
            .any(|(i, (d, r))| touched & (1 << i) == 0 && d != r);
        if differs {
            return Err(format!("checksums diverge outside the mutation: {decoy_text} vs {real_text}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PairStats {
    pub keys_tried: u64,
    pub addresses_tried: u64,
    pub elapsed_ms: u128,
}

impl fmt::Display for PairStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} keys, {} contract addresses in {} ms", self.keys_tried, self.addresses_tried, self.elapsed_ms)
    }
}

/// First single-digit substitution or adjacent swap of `real` whose EIP-55
/// capitalization agrees with `real` at every untouched position.
///
/// Order: substitutions by position then digit, then swaps by position.
/// Swaps of equal digits are skipped since they change nothing.
pub fn find_decoy(real: &Address) -> Option<(Address, Mutation)> {
    let real_mask = real.checksum_case_mask();
    let agrees =
        |decoy: &Address, touched: u64| (decoy.checksum_case_mask() ^ real_mask) & !touched & ADDRESS_MASK == 0;
    for position in 0..40 {
        let old = real.nibble(position);
        for new in (0..16u8).filter(|&d| d != old) {
            let decoy = real.with_nibble(position, new);
            if agrees(&decoy, 1 << position) {
                let mutation = Mutation::Substitution {
                    position,
                    old_digit: HEX[old as usize] as char,
                    new_digit: HEX[new as usize] as char,
                };
                return Some((decoy, mutation));
            }
        }
    }
    for position in 0..39 {
        if real.nibble(position) == real.nibble(position + 1) {
            continue;
        }
        let mutation = Mutation::AdjacentSwap { position };
        let decoy = mutation.apply(real);
        if agrees(&decoy, 0b11 << position) {
            return Some((decoy, mutation));
        }
    }
    None
}

/// Tries deployer keys from the seed's stream with nonces 0..=4 until some
/// contract address has a checksum-compatible look-alike.
pub fn mine_similar_pair(seed: &Seed, time_budget: Duration) -> Result<SimilarPair, MinerError> {
    let started = Instant::now();
    let mut stats = PairStats::default();
    let mut walk = KeyWalk::new(&seed.private_key());
    loop {
        if started.elapsed() >= time_budget {
            stats.elapsed_ms = started.elapsed().as_millis();
            return Err(MinerError::PairNotFound(stats));
        }
        stats.keys_tried += 1;
        let deployer = walk.current_address();
        for nonce in (0..NONCES_PER_KEY).map(Nonce) {
            stats.addresses_tried += 1;
            let real = predict_contract_address(&deployer, nonce);
            if let Some((decoy, mutation)) = find_decoy(&real) {
                return Ok(SimilarPair { decoy, real, deployer_key: walk.current_key(), nonce, mutation });
            }
        }
        walk.advance();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mined_pair_verifies_and_is_reproducible() {
        let seed = Seed::DEFAULT.derive("pair-unit", 0);
        let pair = mine_similar_pair(&seed, Duration::from_secs(60)).unwrap();
        pair.verify().unwrap();
        let again = mine_similar_pair(&seed, Duration::from_secs(60)).unwrap();
        assert_eq!(pair, again);
    }

    #[test]
    fn digit_only_target_matches_first_mutation() {
        let real: Address = "1234567890123456789012345678901234567890".parse().unwrap();
        let (decoy, mutation) = find_decoy(&real).unwrap();
        assert_eq!(mutation, Mutation::Substitution { position: 0, old_digit: '1', new_digit: '0' });
        assert_eq!(decoy.to_lower_hex(), "0234567890123456789012345678901234567890");
    }

    #[test]
    fn zero_budget_is_not_found() {
        let err = mine_similar_pair(&Seed::DEFAULT, Duration::ZERO).unwrap_err();
        assert!(matches!(err, MinerError::PairNotFound(PairStats { keys_tried: 0, .. })));
    }

    #[test]
    fn verify_rejects_tampering() {
        let seed = Seed::DEFAULT.derive("pair-unit", 1);
        let pair = mine_similar_pair(&seed, Duration::from_secs(60)).unwrap();
        let mut bad = pair.clone();
        bad.nonce = Nonce(pair.nonce.0 + 1);
        assert!(bad.verify().is_err());
        let mut bad = pair.clone();
        bad.decoy = pair.real;
        assert!(bad.verify().is_err());
    }

    #[test]
    fn swap_mutation_round_trips() {
        let addr: Address = "ab00000000000000000000000000000000000000".parse().unwrap();
        let swapped = Mutation::AdjacentSwap { position: 0 }.apply(&addr);
        assert_eq!(swapped.to_lower_hex(), "ba00000000000000000000000000000000000000");
        assert_eq!(Mutation::AdjacentSwap { position: 0 }.apply(&swapped), addr);
    }
}
