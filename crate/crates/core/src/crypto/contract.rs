use serde::{Deserialize, Serialize};

use super::{keccak256, rlp, Address};

/// Transaction count of the deploying account at deployment time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Nonce(pub u64);

/// Address of the contract created by `deployer` in the transaction with the
/// given nonce: `keccak256(rlp([deployer, nonce]))[12..]`.
pub fn predict_contract_address(deployer: &Address, nonce: Nonce) -> Address {
    let encoded = rlp::encode_list(&[rlp::encode_bytes(deployer.as_bytes()), rlp::encode_u64(nonce.0)]);
    let digest = keccak256(encoded);
    Address::from_slice(&digest[12..]).expect("20 bytes")
}
