//! Cross-checks of the crypto primitives against independent
//! implementations: tiny-keccak for hashing and the `rlp` crate for
//! transaction encoding.

use lure_core::crypto::{
    eip55_encode, eip55_validate, normalize_signature, predict_contract_address, Address, Eip55Class, Nonce, Selector,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiny_keccak::{Hasher, Keccak};

fn oracle_keccak(data: &[u8]) -> [u8; 32] {
    let mut k = Keccak::v256();
    k.update(data);
    let mut out = [0u8; 32];
    k.finalize(&mut out);
    out
}

/// Textbook EIP-55: uppercase a letter when the matching digest nibble is >= 8.
fn oracle_eip55(bytes: &[u8; 20]) -> String {
    let lower = hex::encode(bytes);
    let digest = oracle_keccak(lower.as_bytes());
    let mut out = String::from("0x");
    for (i, c) in lower.chars().enumerate() {
        let nibble = (digest[i / 2] >> if i % 2 == 0 { 4 } else { 0 }) & 0xf;
        out.push(if nibble >= 8 { c.to_ascii_uppercase() } else { c });
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn eip55_matches_oracle(bytes in any::<[u8; 20]>()) {
        let expected = oracle_eip55(&bytes);
        let encoded = eip55_encode(&Address(bytes));
        prop_assert_eq!(encoded.as_str(), expected.as_str());
        let class = eip55_validate(&expected);
        let lowercase = expected == expected.to_ascii_lowercase();
        prop_assert_eq!(class, if lowercase { Eip55Class::AllLowercase } else { Eip55Class::ValidMixedCase });
    }

    #[test]
    fn eip55_round_trips(bytes in any::<[u8; 20]>()) {
        let encoded = eip55_encode(&Address(bytes));
        prop_assert_eq!(encoded.address(), Address(bytes));
        prop_assert_eq!(encoded.as_str().parse::<Address>().unwrap(), Address(bytes));
    }

    #[test]
    fn selector_matches_oracle(name in "[a-zA-Z_][a-zA-Z0-9_]{0,20}", arity in 0usize..4) {
        let types = ["uint256", "address", "bool", "bytes32"];
        let args: Vec<&str> = (0..arity).map(|i| types[(i + name.len()) % types.len()]).collect();
        let text = format!("{name}({})", args.join(","));
        let sig = normalize_signature(&text).unwrap();
        let digest = oracle_keccak(text.as_bytes());
        prop_assert_eq!(sig.selector().0, [digest[0], digest[1], digest[2], digest[3]]);
    }
}

#[test]
fn predicted_addresses_match_rlp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..1000 {
        let deployer: [u8; 20] = rng.random();
        let nonce: u64 = rng.random_range(0..=8);
        let mut stream = rlp::RlpStream::new_list(2);
        stream.append(&deployer.as_slice());
        stream.append(&nonce);
        let digest = oracle_keccak(&stream.out());
        let expected = Address::from_slice(&digest[12..]).unwrap();
        assert_eq!(predict_contract_address(&Address(deployer), Nonce(nonce)), expected, "nonce {nonce}");
    }
}

#[test]
fn predicted_addresses_match_rlp_oracle_for_large_nonces() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6eed);
    for nonce in [0x7f, 0x80, 0xff, 0x100, 0xffff, 0x1_0000, u32::MAX as u64, u64::MAX] {
        let deployer: [u8; 20] = rng.random();
        let mut stream = rlp::RlpStream::new_list(2);
        stream.append(&deployer.as_slice());
        stream.append(&nonce);
        let expected = Address::from_slice(&oracle_keccak(&stream.out())[12..]).unwrap();
        assert_eq!(predict_contract_address(&Address(deployer), Nonce(nonce)), expected, "nonce {nonce}");
    }
}

#[test]
fn single_character_changes_change_the_selector() {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    for _ in 0..10_000 {
        let len = rng.random_range(1..16);
        let mut name: Vec<u8> = (0..len).map(|_| CHARS[rng.random_range(0..CHARS.len())]).collect();
        name[0] = b'f';
        let original = format!("{}(uint256)", String::from_utf8_lossy(&name));
        let at = rng.random_range(0..len);
        let replacement = loop {
            let c = CHARS[rng.random_range(0..CHARS.len())];
            if c != name[at] && !(at == 0 && c.is_ascii_digit()) {
                break c;
            }
        };
        name[at] = replacement;
        let changed = format!("{}(uint256)", String::from_utf8_lossy(&name));
        assert_ne!(Selector::of_text(&original), Selector::of_text(&changed), "{original} vs {changed}");
    }
}
