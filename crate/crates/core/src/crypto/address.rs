use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{keccak256, parse_fixed_hex, ParseError};

/// A 160-bit account identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0u8; 20]);

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; 20]>::try_from(bytes).ok().map(Address)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    /// The 40 lowercase hex digits, without prefix.
    pub fn to_lower_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn to_eip55(&self) -> Eip55Address {
        eip55_encode(self)
    }

    /// Nibble `i` of the address (0 = most significant).
    pub fn nibble(&self, i: usize) -> u8 {
        nibble(&self.0, i)
    }

    pub fn with_nibble(mut self, i: usize, value: u8) -> Self {
        let shift = if i.is_multiple_of(2) { 4 } else { 0 };
        let byte = &mut self.0[i / 2];
        *byte = (*byte & !(0x0f << shift)) | ((value & 0x0f) << shift);
        self
    }

    /// Bit `i` set iff hex digit `i` of the EIP-55 form is an uppercase letter.
    pub fn checksum_case_mask(&self) -> u64 {
        let digest = keccak256(self.to_lower_hex().as_bytes());
        let mut mask = 0u64;
        for i in 0..40 {
            if self.nibble(i) >= 10 && nibble(&digest, i) >= 8 {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Bit `i` set iff hex digit `i` is a letter (`a`-`f`).
    pub fn letter_mask(&self) -> u64 {
        (0..40).filter(|&i| self.nibble(i) >= 10).fold(0, |m, i| m | (1 << i))
    }
}

fn nibble(bytes: &[u8], i: usize) -> u8 {
    let b = bytes[i / 2];
    if i.is_multiple_of(2) {
        b >> 4
    } else {
        b & 0x0f
    }
}

impl FromStr for Address {
    type Err = ParseError;

    /// Accepts 40 hex digits in any case, with or without `0x`. Does not check
    /// the EIP-55 capitalization; use [`eip55_validate`] for that.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fixed_hex::<20>(s.trim()).map(Address)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_lower_hex())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// `0x` followed by 40 hex digits whose letter case is the EIP-55 checksum of
/// the address. Only constructible through [`eip55_encode`] or a successful
/// parse, so the capitalization is always correct.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Eip55Address(String);

impl Eip55Address {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn address(&self) -> Address {
        self.0.parse().expect("eip55 text is valid hex")
    }

    pub fn is_all_lowercase(&self) -> bool {
        !self.0[2..].bytes().any(|b| b.is_ascii_uppercase())
    }
}

impl FromStr for Eip55Address {
    type Err = Eip55Class;

    /// Succeeds only when `s` is exactly the checksummed rendering.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match eip55_validate(s) {
            Eip55Class::ValidMixedCase | Eip55Class::AllLowercase => Ok(Eip55Address(s.to_owned())),
            other => Err(other),
        }
    }
}

impl fmt::Display for Eip55Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Eip55Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Eip55Address({})", self.0)
    }
}

impl Serialize for Eip55Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

pub fn eip55_encode(addr: &Address) -> Eip55Address {
    let lower = addr.to_lower_hex();
    let digest = keccak256(lower.as_bytes());
    let mut out = String::with_capacity(42);
    out.push_str("0x");
    for (i, ch) in lower.chars().enumerate() {
        if ch.is_ascii_alphabetic() && nibble(&digest, i) >= 8 {
            out.push(ch.to_ascii_uppercase());
        } else {
            out.push(ch);
        }
    }
    Eip55Address(out)
}

/// Classification of a textual address against its EIP-55 checksum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eip55Class {
    /// Correct checksum containing at least one uppercase letter.
    ValidMixedCase,
    /// Lowercase text whose correct checksum is also entirely lowercase.
    AllLowercase,
    /// Every letter uppercase and that is not the correct checksum.
    AllUppercase,
    /// Wrong capitalization. `case_insensitive_match` is true when the input
    /// carried no uppercase at all, i.e. it names the right account but simply
    /// lacks a checksum; false means some letters were capitalized wrongly.
    InvalidChecksum { case_insensitive_match: bool },
    /// Wrong length, missing `0x` prefix, or non-hex characters.
    Malformed,
}

impl Eip55Class {
    pub fn as_str(&self) -> &'static str {
        match self {
            Eip55Class::ValidMixedCase => "valid_mixed_case",
            Eip55Class::AllLowercase => "all_lowercase",
            Eip55Class::AllUppercase => "all_uppercase",
            Eip55Class::InvalidChecksum { .. } => "invalid_checksum",
            Eip55Class::Malformed => "malformed",
        }
    }
}

impl fmt::Display for Eip55Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn eip55_validate(text: &str) -> Eip55Class {
    let Some(digits) = text.strip_prefix("0x") else {
        return Eip55Class::Malformed;
    };
    if digits.len() != 40 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Eip55Class::Malformed;
    }
    let addr: Address = digits.parse().expect("validated hex");
    let correct = eip55_encode(&addr);
    let has_upper = digits.bytes().any(|b| b.is_ascii_uppercase());
    let has_lower = digits.bytes().any(|b| b.is_ascii_lowercase());

    if correct.as_str()[2..] == *digits {
        if has_upper {
            Eip55Class::ValidMixedCase
        } else {
            Eip55Class::AllLowercase
        }
    } else if !has_upper {
        Eip55Class::InvalidChecksum { case_insensitive_match: true }
    } else if !has_lower {
        Eip55Class::AllUppercase
    } else {
        Eip55Class::InvalidChecksum { case_insensitive_match: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE4_LOWERCASE: [&str; 6] = [
        "0x47aa51fd5a98e155623202944c44f414a7205a46",
        "0x8310561552fa9569337d53493c6a5a8991894072",
        "0x2797a2c394686d33da258c7de6206617c398605e",
        "0x596443674c431e7da447803ef94a7e52cfd71169",
        "0x52206f3a3b80212898760a6ae124474183b30612",
        "0xc71c3eec3aa44e7746725fc771b8b821419e4360",
    ];

    #[test]
    fn published_lowercase_addresses_encode_to_themselves() {
        for text in TABLE4_LOWERCASE {
            let addr: Address = text.parse().unwrap();
            assert_eq!(eip55_encode(&addr).as_str(), text);
            assert_eq!(eip55_validate(text), Eip55Class::AllLowercase);
        }
    }

    #[test]
    fn zero_address_is_all_lowercase() {
        let zero = "0x0000000000000000000000000000000000000000";
        assert_eq!(eip55_encode(&Address::ZERO).as_str(), zero);
        assert_eq!(eip55_validate(zero), Eip55Class::AllLowercase);
    }

    #[test]
    fn standard_mixed_case_vector() {
        let addr: Address = "5aaeb6053f3e94c9b9a09f33669435e7ef1beaed".parse().unwrap();
        let encoded = eip55_encode(&addr);
        assert_eq!(encoded.as_str(), "0x5aAeb6053F3E94C9b9A09f33669435E7Ef1BeAed");
        assert_eq!(eip55_validate(encoded.as_str()), Eip55Class::ValidMixedCase);
    }

    #[test]
    fn lowercase_of_mixed_address_is_flagged_as_unchecksummed() {
        assert_eq!(
            eip55_validate("0x5aaeb6053f3e94c9b9a09f33669435e7ef1beaed"),
            Eip55Class::InvalidChecksum { case_insensitive_match: true }
        );
        assert_eq!(eip55_validate("0x5AAEB6053F3E94C9B9A09F33669435E7EF1BEAED"), Eip55Class::AllUppercase);
        // one letter's case flipped
        assert_eq!(
            eip55_validate("0x5aaeb6053F3E94C9b9A09f33669435E7Ef1BeAed"),
            Eip55Class::InvalidChecksum { case_insensitive_match: false }
        );
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "47aa51fd5a98e155623202944c44f414a7205a46",
            "0x47aa51fd5a98e155623202944c44f414a7205a4",
            "0x47aa51fd5a98e155623202944c44f414a7205a4g",
            "0x47aa51fd5a98e155623202944c44f414a7205a4600",
            "",
        ] {
            assert_eq!(eip55_validate(bad), Eip55Class::Malformed, "{bad}");
        }
    }

    #[test]
    fn nibble_editing() {
        let addr: Address = "0x47aa51fd5a98e155623202944c44f414a7205a46".parse().unwrap();
        assert_eq!(addr.nibble(0), 4);
        assert_eq!(addr.nibble(1), 7);
        assert_eq!(addr.nibble(39), 6);
        let edited = addr.with_nibble(1, 0xb).with_nibble(39, 0);
        assert_eq!(edited.to_lower_hex(), "4baa51fd5a98e155623202944c44f414a7205a40");
    }

    #[test]
    fn case_mask_agrees_with_rendering() {
        let addr: Address = "5aaeb6053f3e94c9b9a09f33669435e7ef1beaed".parse().unwrap();
        let rendered = eip55_encode(&addr);
        let mask = addr.checksum_case_mask();
        for (i, ch) in rendered.as_str()[2..].chars().enumerate() {
            assert_eq!(ch.is_ascii_uppercase(), mask & (1 << i) != 0);
        }
    }
}
