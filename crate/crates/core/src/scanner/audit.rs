//! Advisories for a human auditor: hard-coded accounts to check on chain,
//! all-lowercase checksums, and a hex view of string literals that steer
//! low-level calls or comparisons.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::lexer::{tokenize, Token, TokenKind};
use super::model::{matching, BodyShape, FileModel};
use super::{Location, SourceUnit};
use crate::crypto::{Address, Selector};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct TxCountError(pub String);

/// Source of outgoing-transaction counts, usually a chain explorer client.
pub trait TxCounter {
    fn outgoing_tx_count(&self, address: &Address) -> Result<u64, TxCountError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvisoryKind {
    /// Hard-coded account that has never sent a transaction.
    NoOutgoingTransactions,
    /// Hard-coded account whose history could not be checked.
    OutgoingUnverified,
    /// Address written in a form whose checksum is all lowercase.
    LowercaseChecksum,
    /// Exact bytes and selector of a string literal.
    HexView,
    /// Low-level call whose arguments are not literals.
    DynamicCallArguments,
}

impl AdvisoryKind {
    pub fn recommendation(&self) -> &'static str {
        match self {
            AdvisoryKind::NoOutgoingTransactions | AdvisoryKind::OutgoingUnverified => "R2",
            AdvisoryKind::LowercaseChecksum => "R4",
            AdvisoryKind::HexView | AdvisoryKind::DynamicCallArguments => "R6",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Advisory {
    pub recommendation: &'static str,
    pub kind: AdvisoryKind,
    pub location: Location,
    /// The address or literal the advisory is about.
    pub subject: String,
    pub message: String,
}

impl Advisory {
    fn new(kind: AdvisoryKind, location: Location, subject: String, message: String) -> Self {
        Advisory { recommendation: kind.recommendation(), kind, location, subject, message }
    }
}

/// Advisories for one unit, ordered by location then kind. Chain lookups are
/// made once per distinct address; a failing or absent client downgrades the
/// outgoing-transaction check to "unverified".
pub fn auditor_checks(unit: &SourceUnit, client: Option<&dyn TxCounter>) -> Vec<Advisory> {
    let mut out = Vec::new();
    let mut first_seen: BTreeMap<Address, Location> = BTreeMap::new();

    for file in &unit.files {
        let model = FileModel::parse(tokenize(&file.text));
        let tokens = &model.tokens;
        let at = |t: &Token| Location { file: file.name.clone(), line: t.line };

        for t in tokens.iter().filter(|t| t.is_hex_number(40)) {
            let address: Address = t.text.parse().expect("40 hex digits");
            first_seen.entry(address).or_insert_with(|| at(t));
            if address.to_eip55().is_all_lowercase() {
                out.push(Advisory::new(
                    AdvisoryKind::LowercaseChecksum,
                    at(t),
                    t.text.clone(),
                    format!(
                        "checksum of {} is all lowercase; treat this account as suspect",
                        address.to_eip55().as_str()
                    ),
                ));
            }
        }

        let mut viewed = std::collections::BTreeSet::new();
        for contract in &model.contracts {
            for f in contract.functions.iter().filter(|f| f.has_body) {
                let body = f.body.clone();
                let shape = BodyShape::of(tokens, body.clone());
                let mut ranges: Vec<std::ops::Range<usize>> = shape.conditions.clone();
                ranges.extend(shape.requires.iter().map(|(_, r)| r.clone()));
                for k in body.clone() {
                    if tokens[k].is("==") || tokens[k].is("!=") {
                        ranges.push(comparison_span(tokens, k, body.clone()));
                    }
                    let low_level = tokens[k].is(".")
                        && tokens.get(k + 1).is_some_and(|n| n.is("call") || n.is("delegatecall"))
                        && k + 2 < body.end;
                    if !low_level {
                        continue;
                    }
                    // skip `{value: ...}` and legacy `.value(...)` to the argument list
                    let mut open = k + 2;
                    while open < body.end && !tokens[open].is("(") {
                        open += 1;
                    }
                    if open >= body.end {
                        continue;
                    }
                    let mut close = matching(tokens, open);
                    if tokens.get(open - 1).is_some_and(|t| t.is("value")) {
                        open = close + 1;
                        if !tokens.get(open).is_some_and(|t| t.is("(")) {
                            continue;
                        }
                        close = matching(tokens, open);
                    }
                    let args = open + 1..close.min(body.end);
                    if tokens[args.clone()].iter().any(|t| t.is_string()) {
                        ranges.push(args);
                    } else if !args.is_empty() {
                        out.push(Advisory::new(
                            AdvisoryKind::DynamicCallArguments,
                            at(&tokens[k + 1]),
                            tokens[k + 1].text.clone(),
                            format!(
                                "{} arguments are not literals; the selector cannot be checked from source",
                                tokens[k + 1].text
                            ),
                        ));
                    }
                }
                for range in ranges {
                    for k in range {
                        if viewed.insert(k) {
                            if let Some(a) = hex_view(&tokens[k], at(&tokens[k])) {
                                out.push(a);
                            }
                        }
                    }
                }
            }
        }
    }

    for (address, location) in first_seen {
        let checksummed = address.to_eip55().as_str().to_owned();
        let advisory = match client.map(|c| c.outgoing_tx_count(&address)) {
            Some(Ok(0)) => Some(Advisory::new(
                AdvisoryKind::NoOutgoingTransactions,
                location,
                checksummed.clone(),
                format!("{checksummed} has never sent a transaction; nobody may hold its key"),
            )),
            Some(Ok(_)) => None,
            Some(Err(e)) => Some(Advisory::new(
                AdvisoryKind::OutgoingUnverified,
                location,
                checksummed.clone(),
                format!("could not check outgoing transactions of {checksummed}: {e}"),
            )),
            None => Some(Advisory::new(
                AdvisoryKind::OutgoingUnverified,
                location,
                checksummed.clone(),
                format!("check that {checksummed} has at least one outgoing transaction"),
            )),
        };
        out.extend(advisory);
    }

    out.sort_by(|a, b| (&a.location, a.kind, &a.subject).cmp(&(&b.location, b.kind, &b.subject)));
    out
}

/// Both operands of the comparison at `op`: out to the nearest unmatched
/// bracket, argument separator, statement end or boolean connective.
fn comparison_span(tokens: &[Token], op: usize, body: std::ops::Range<usize>) -> std::ops::Range<usize> {
    let stops = |t: &Token| [",", ";", "&&", "||", "?", ":", "=", "return"].iter().any(|s| t.is(s));
    let mut depth = 0i32;
    let mut lo = op;
    while lo > body.start {
        let t = &tokens[lo - 1];
        if t.is(")") || t.is("]") {
            depth += 1;
        } else if t.is("(") || t.is("[") || t.is("{") || t.is("}") {
            if depth == 0 {
                break;
            }
            depth -= 1;
        } else if depth == 0 && stops(t) {
            break;
        }
        lo -= 1;
    }
    let mut depth = 0i32;
    let mut hi = op + 1;
    while hi < body.end {
        let t = &tokens[hi];
        if t.is("(") || t.is("[") {
            depth += 1;
        } else if t.is(")") || t.is("]") || t.is("{") || t.is("}") {
            if depth == 0 {
                break;
            }
            depth -= 1;
        } else if depth == 0 && stops(t) {
            break;
        }
        hi += 1;
    }
    lo..hi
}

fn hex_view(t: &Token, location: Location) -> Option<Advisory> {
    let TokenKind::Str { value, non_ascii } = &t.kind else {
        return None;
    };
    let bytes = value.as_bytes();
    let hex = bytes.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(" ");
    let mut message = format!("{} bytes [{}], selector {}", bytes.len(), hex, Selector::of_text(value));
    if *non_ascii {
        message.push_str(", contains non-ASCII");
    }
    if bytes.is_empty() {
        message.push_str(", empty string");
    }
    Some(Advisory::new(AdvisoryKind::HexView, location, t.text.clone(), message))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scanner::preprocess;

    struct Fixed(Result<u64, TxCountError>);

    impl TxCounter for Fixed {
        fn outgoing_tx_count(&self, _: &Address) -> Result<u64, TxCountError> {
            self.0.clone()
        }
    }

    const FEE: &str = r#"pragma solidity ^0.4.24;
contract Fee {
    address fee = 0xfeefeefeefeefeefeefeefeefeefeefeefeefeef;
    function pay() public payable { fee.transfer(msg.value); }
}
"#;

    fn kinds(advisories: &[Advisory]) -> Vec<AdvisoryKind> {
        advisories.iter().map(|a| a.kind).collect()
    }

    #[test]
    fn hard_coded_account_outcomes() {
        let unit = preprocess("fee.sol", FEE).unwrap();
        assert_eq!(kinds(&auditor_checks(&unit, None)), [AdvisoryKind::OutgoingUnverified]);
        assert_eq!(kinds(&auditor_checks(&unit, Some(&Fixed(Ok(0))))), [AdvisoryKind::NoOutgoingTransactions]);
        assert!(auditor_checks(&unit, Some(&Fixed(Ok(3)))).is_empty());
        let failed = auditor_checks(&unit, Some(&Fixed(Err(TxCountError("timeout".into())))));
        assert_eq!(kinds(&failed), [AdvisoryKind::OutgoingUnverified]);
        assert!(failed[0].message.contains("timeout"));
        assert_eq!(failed[0].recommendation, "R2");
    }

    #[test]
    fn lowercase_checksum_is_flagged() {
        // no letters, so no capitals in the checksum
        let src = "pragma solidity ^0.8.0;\ncontract C { address a = 0x0000000000000000000000000000000000000001; }";
        let unit = preprocess("c.sol", src).unwrap();
        let advisories = auditor_checks(&unit, Some(&Fixed(Ok(1))));
        assert_eq!(kinds(&advisories), [AdvisoryKind::LowercaseChecksum]);
    }

    #[test]
    fn hex_view_of_call_and_comparison_literals() {
        let src = r#"pragma solidity ^0.8.0;
contract C {
    function f(address t, string memory s) public {
        (bool ok, ) = t.call(abi.encodeWithSignature("accountRegistеred(address)", msg.sender));
        if (keccak256(bytes(s)) == keccak256(bytes(""))) { ok = false; }
        t.delegatecall(msg.data);
    }
}
"#;
        let unit = preprocess("c.sol", src).unwrap();
        let advisories = auditor_checks(&unit, None);
        let views: Vec<&Advisory> = advisories.iter().filter(|a| a.kind == AdvisoryKind::HexView).collect();
        assert_eq!(views.len(), 2);
        assert!(views[0].message.contains("d0 b5"), "{}", views[0].message);
        assert!(views[0].message.contains("non-ASCII"));
        assert!(views[0].message.contains(&Selector::of_text("accountRegist\u{0435}red(address)").to_string()));
        assert!(views[1].message.starts_with("0 bytes []"));
        assert!(advisories.iter().any(|a| a.kind == AdvisoryKind::DynamicCallArguments && a.location.line == 6));
    }

    #[test]
    fn messages_beside_a_comparison_are_not_viewed() {
        let src = r#"pragma solidity ^0.8.0;
contract C {
    function f(address to, string memory s) public {
        require(to != address(0), "zero address");
        require(keccak256(bytes(s)) == keccak256("BT") && to != msg.sender, "bad symbol");
    }
}
"#;
        let advisories = auditor_checks(&preprocess("c.sol", src).unwrap(), None);
        let subjects: Vec<&str> = advisories.iter().map(|a| a.subject.as_str()).collect();
        assert_eq!(subjects, ["\"BT\""]);
    }

    #[test]
    fn plain_contract_has_no_advisories() {
        let src = "pragma solidity ^0.8.0;\ncontract C { uint x; function f(uint y) public { x = y + 1; } }";
        assert!(auditor_checks(&preprocess("c.sol", src).unwrap(), None).is_empty());
    }
}
