//! Deterministic Ethereum primitives: Keccak-256, addresses and their
//! EIP-55 rendering, key-to-address derivation, function selectors and
//! CREATE contract-address prediction.

mod address;
mod contract;
mod key;
mod rlp;
mod selector;

use sha3::{Digest, Keccak256};
use thiserror::Error;

pub use address::{eip55_encode, eip55_validate, Address, Eip55Address, Eip55Class};
pub use contract::{predict_contract_address, Nonce};
pub use key::{derive_address, KeyWalk, PrivateKey};
pub use rlp::{encode_bytes as rlp_encode_bytes, encode_list as rlp_encode_list, encode_u64 as rlp_encode_u64};
pub use selector::{compute_selector, normalize_signature, FunctionSignature, Selector, SignatureError, MAX_ARITY};

/// Keccak-256 (the pre-standard SHA-3 padding used by Ethereum).
pub fn keccak256(data: impl AsRef<[u8]>) -> [u8; 32] {
    Keccak256::digest(data.as_ref()).into()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("expected {expected} hex digits, got {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid hex character {ch:?} at position {position}")]
    NonHex { ch: char, position: usize },
    #[error("private key must be nonzero and below the secp256k1 group order")]
    KeyOutOfRange,
}

/// Strips an optional `0x`/`0X` prefix and decodes exactly `N` bytes of hex.
pub(crate) fn parse_fixed_hex<const N: usize>(text: &str) -> Result<[u8; N], ParseError> {
    let digits = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")).unwrap_or(text);
    if let Some((position, ch)) = digits.chars().enumerate().find(|(_, c)| !c.is_ascii_hexdigit()) {
        return Err(ParseError::NonHex { ch, position });
    }
    if digits.len() != N * 2 {
        return Err(ParseError::Length { expected: N * 2, found: digits.len() });
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(digits, &mut out).expect("validated hex");
    Ok(out)
}
