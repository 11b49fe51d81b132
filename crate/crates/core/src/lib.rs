//! Building blocks for studying social-engineering patterns in Ethereum
//! smart contracts: checksum and selector primitives, brute-force miners that
//! make address and homograph tricks concrete, a confusables analyzer, and a
//! source scanner that flags candidate contracts for human review.

pub mod crypto;
pub mod homograph;
pub mod miners;
pub mod scanner;
