use std::fmt;
use std::str::FromStr;

use k256::elliptic_curve::sec1::ToEncodedPoint;
use k256::elliptic_curve::PrimeField;
use k256::{AffinePoint, ProjectivePoint, Scalar, SecretKey};

use super::{keccak256, parse_fixed_hex, Address, ParseError};

/// A secp256k1 secret scalar in `[1, n)`.
#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey(SecretKey);

impl PrivateKey {
    pub fn from_bytes(bytes: &[u8; 32]) -> Result<Self, ParseError> {
        SecretKey::from_slice(bytes).map(PrivateKey).map_err(|_| ParseError::KeyOutOfRange)
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes().into()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    fn scalar(&self) -> Scalar {
        *self.0.to_nonzero_scalar()
    }
}

impl FromStr for PrivateKey {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = parse_fixed_hex::<32>(s.trim())?;
        PrivateKey::from_bytes(&bytes)
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrivateKey({})", self.to_hex())
    }
}

impl fmt::Display for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Last 20 bytes of Keccak-256 over the 64-byte uncompressed public point
/// (X || Y, without the 0x04 tag).
pub fn derive_address(key: &PrivateKey) -> Address {
    address_of_point(&key.0.public_key().as_affine().clone())
}

fn address_of_point(point: &AffinePoint) -> Address {
    let encoded = point.to_encoded_point(false);
    let digest = keccak256(&encoded.as_bytes()[1..]);
    Address::from_slice(&digest[12..]).expect("20 bytes")
}

/// Walks consecutive keys `k, k+1, k+2, ...`, deriving each address with one
/// point addition instead of a full scalar multiplication.
pub struct KeyWalk {
    scalar: Scalar,
    point: ProjectivePoint,
}

impl KeyWalk {
    pub fn new(start: &PrivateKey) -> Self {
        let scalar = start.scalar();
        KeyWalk { scalar, point: ProjectivePoint::GENERATOR * scalar }
    }

    pub fn current_key(&self) -> PrivateKey {
        let bytes: [u8; 32] = self.scalar.to_repr().into();
        PrivateKey::from_bytes(&bytes).expect("walk never yields zero")
    }

    pub fn current_address(&self) -> Address {
        address_of_point(&self.point.to_affine())
    }

    pub fn advance(&mut self) {
        self.scalar += Scalar::ONE;
        self.point += ProjectivePoint::GENERATOR;
        if bool::from(self.scalar.is_zero()) {
            // wrapped past n - 1; restart at 1
            self.scalar = Scalar::ONE;
            self.point = ProjectivePoint::GENERATOR;
        }
    }
}
