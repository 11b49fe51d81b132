//! Textual detector for social-engineering contracts: preprocessing,
//! the 22 signature detectors, the six attack rules in conjunctive normal
//! form, corpus scanning and triage reports, plus auditor advisories.

mod audit;
mod cnf;
mod corpus;
pub mod lexer;
pub mod model;
mod preprocess;
mod signatures;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::homograph::HomographFinding;

pub use audit::{auditor_checks, Advisory, AdvisoryKind, TxCountError, TxCounter};
pub use cnf::{attack_rule, evaluate_cnf, rule_holds};
pub use corpus::{
    collect_inputs, load_reports, parse_annotations, scan_corpus, scan_unit, summarize, summary_tsv, write_outputs,
    CorpusScan, RawInput, ScanOptions, Skipped, SummaryRow,
};
pub use preprocess::{normalize_whitespace, preprocess, SourceFile, SourceUnit, StringLiteral};
pub use signatures::detect_signatures;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("{origin}: not Solidity ({reason})")]
    NotSolidity { origin: String, reason: String },
    #[error("{origin}: malformed bundle: {reason}")]
    MalformedBundle { origin: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("annotations line {line}: {reason}")]
    Annotation { line: usize, reason: String },
    #[error("report {path}: {reason}")]
    Report { path: PathBuf, reason: String },
}

macro_rules! numbered_id {
    ($name:ident, $prefix:literal, $max:literal) => {
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(u8);

        impl $name {
            pub const fn new(n: u8) -> Option<Self> {
                if n >= 1 && n <= $max {
                    Some($name(n))
                } else {
                    None
                }
            }

            pub fn number(self) -> u8 {
                self.0
            }

            pub fn all() -> impl Iterator<Item = Self> {
                (1..=$max).map($name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(self, f)
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                s.strip_prefix($prefix)
                    .and_then(|n| n.parse().ok())
                    .and_then($name::new)
                    .ok_or_else(|| format!("expected {}1..{}{}, got {s:?}", $prefix, $prefix, $max))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

numbered_id!(SignatureId, "S", 22);
numbered_id!(AttackId, "A", 6);

/// Shorthand for `SignatureId::new(n).unwrap()` on constants.
pub(crate) const fn sig(n: u8) -> SignatureId {
    match SignatureId::new(n) {
        Some(id) => id,
        None => panic!("signature number out of range"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub file: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureHit {
    pub signature_id: SignatureId,
    /// Sorted, never empty.
    pub locations: Vec<Location>,
    /// The source line at the first location.
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackMatch {
    pub attack_id: AttackId,
    /// For each clause of the rule, the fired signatures that satisfy it;
    /// the first one is the witness.
    pub satisfied_clauses: Vec<Vec<SignatureId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriageLabel {
    NonExploitable,
    SyntacticallyMatching,
    SemanticallyExploitable,
}

impl FromStr for TriageLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "non_exploitable" => Ok(TriageLabel::NonExploitable),
            "syntactically_matching" => Ok(TriageLabel::SyntacticallyMatching),
            "semantically_exploitable" => Ok(TriageLabel::SemanticallyExploitable),
            other => Err(format!("unknown triage label {other:?}")),
        }
    }
}

/// A homograph finding tagged with the file it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileFinding {
    pub file: String,
    #[serde(flatten)]
    pub finding: HomographFinding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    pub origin: String,
    pub hits: Vec<SignatureHit>,
    pub matches: Vec<AttackMatch>,
    pub homograph_findings: Vec<FileFinding>,
    /// Set only from human annotations.
    pub triage_label: Option<TriageLabel>,
}

impl AttackReport {
    pub fn fired(&self) -> Vec<SignatureId> {
        self.hits.iter().map(|h| h.signature_id).collect()
    }

    pub fn matched(&self) -> Vec<AttackId> {
        self.matches.iter().map(|m| m.attack_id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        let s: SignatureId = "S22".parse().unwrap();
        assert_eq!(s.number(), 22);
        assert_eq!(s.to_string(), "S22");
        assert!("S23".parse::<SignatureId>().is_err());
        assert!("S0".parse::<SignatureId>().is_err());
        assert!("A7".parse::<AttackId>().is_err());
        assert_eq!(SignatureId::all().count(), 22);
        assert_eq!(serde_json::to_string(&AttackId::new(3).unwrap()).unwrap(), "\"A3\"");
        assert!(sig(2) < sig(10));
    }

    #[test]
    fn labels_parse() {
        assert_eq!("semantically_exploitable".parse::<TriageLabel>(), Ok(TriageLabel::SemanticallyExploitable));
        assert!("exploitable".parse::<TriageLabel>().is_err());
    }
}
