use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::lexer::{strip_comments, tokenize, TokenKind};
use super::ScanError;
use crate::crypto::keccak256;

/// One comment-stripped Solidity file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
}

/// A string literal from code (never from comments).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringLiteral {
    /// Decoded contents, with escapes such as `\x41` resolved.
    pub value: String,
    /// The literal as written, quotes included.
    pub raw: String,
    pub file: String,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub origin: String,
    /// Sorted by name.
    pub files: Vec<SourceFile>,
    pub string_literals: Vec<StringLiteral>,
    pub dedup_key: [u8; 32],
}

impl SourceUnit {
    pub fn dedup_hex(&self) -> String {
        hex::encode(self.dedup_key)
    }

    /// Builds a unit from already-separated files, stripping comments.
    pub fn from_files(origin: impl Into<String>, files: Vec<(String, String)>) -> SourceUnit {
        let mut files: Vec<SourceFile> =
            files.into_iter().map(|(name, raw)| SourceFile { name, text: strip_comments(&raw) }).collect();
        files.sort_by(|a, b| a.name.cmp(&b.name));

        let mut string_literals = Vec::new();
        for file in &files {
            for tok in tokenize(&file.text) {
                if let TokenKind::Str { value, .. } = tok.kind {
                    string_literals.push(StringLiteral {
                        value,
                        raw: tok.text,
                        file: file.name.clone(),
                        line: tok.line,
                        column: tok.column,
                    });
                }
            }
        }

        let joined = files.iter().map(|f| f.text.as_str()).collect::<Vec<_>>().join("\n");
        SourceUnit {
            origin: origin.into(),
            files,
            string_literals,
            dedup_key: keccak256(normalize_whitespace(&joined)),
        }
    }
}

/// Collapses every whitespace run to one space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Turns a single source file or an explorer bundle into a [`SourceUnit`].
///
/// Accepted bundle shapes: an explorer API envelope (`result[0].SourceCode`),
/// a bare record with `SourceCode`, a standard-JSON input (`language` plus
/// `sources`), the same wrapped in doubled braces, or a plain
/// `{name: {content}}` map.
pub fn preprocess(origin: &str, raw: &str) -> Result<SourceUnit, ScanError> {
    let solidity: Vec<(String, String)> = if raw.trim_start().starts_with('{') {
        let files = extract_files(origin, raw, 0)?;
        files.into_iter().filter(|(name, text)| name.ends_with(".sol") || has_pragma(text)).collect()
    } else if has_pragma(raw) {
        let base = origin.rsplit(['/', '\\']).next().unwrap_or(origin);
        vec![(base.to_owned(), raw.to_owned())]
    } else {
        Vec::new()
    };
    if solidity.is_empty() {
        return Err(ScanError::NotSolidity { origin: origin.to_owned(), reason: "no Solidity source found".into() });
    }
    Ok(SourceUnit::from_files(origin, solidity))
}

fn default_name(origin: &str) -> String {
    let base = origin.rsplit(['/', '\\']).next().unwrap_or(origin);
    if base.ends_with(".sol") {
        base.to_owned()
    } else {
        format!("{base}.sol")
    }
}

fn extract_files(origin: &str, raw: &str, depth: u8) -> Result<Vec<(String, String)>, ScanError> {
    let trimmed = raw.trim();
    let malformed = |reason: String| ScanError::MalformedBundle { origin: origin.to_owned(), reason };
    if depth > 3 {
        return Err(malformed("bundle nested too deeply".into()));
    }
    // doubled braces wrap standard-JSON input in explorer responses
    let body =
        if trimmed.starts_with("{{") && trimmed.ends_with("}}") { &trimmed[1..trimmed.len() - 1] } else { trimmed };
    let value: Value = serde_json::from_str(body).map_err(|e| malformed(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| malformed("bundle is not an object".into()))?;

    if let Some(result) = obj.get("result") {
        let record = match result {
            Value::Array(items) => items.first(),
            other => Some(other),
        };
        return match record.and_then(|r| r.get("SourceCode")) {
            Some(Value::String(code)) => source_code(origin, record.unwrap(), code, depth),
            _ => Err(malformed("explorer response without SourceCode".into())),
        };
    }
    if let Some(Value::String(code)) = obj.get("SourceCode") {
        return source_code(origin, &value, code, depth);
    }
    if let Some(sources) = obj.get("sources") {
        if let Some(lang) = obj.get("language").and_then(Value::as_str) {
            if !lang.eq_ignore_ascii_case("solidity") {
                return Err(ScanError::NotSolidity {
                    origin: origin.to_owned(),
                    reason: format!("declared language {lang}"),
                });
            }
        }
        return content_map(sources).ok_or_else(|| malformed("sources entries need string content".into()));
    }
    content_map(&value).ok_or_else(|| malformed("unrecognized bundle layout".into()))
}

fn source_code(origin: &str, record: &Value, code: &str, depth: u8) -> Result<Vec<(String, String)>, ScanError> {
    if code.trim().is_empty() {
        return Err(ScanError::NotSolidity { origin: origin.to_owned(), reason: "source not verified".into() });
    }
    if code.trim_start().starts_with('{') {
        return extract_files(origin, code, depth + 1);
    }
    let name = record
        .get("ContractName")
        .and_then(Value::as_str)
        .filter(|n| !n.is_empty())
        .map(default_name)
        .unwrap_or_else(|| default_name(origin));
    Ok(vec![(name, code.to_owned())])
}

fn content_map(value: &Value) -> Option<Vec<(String, String)>> {
    let map = value.as_object()?;
    if map.is_empty() {
        return None;
    }
    map.iter()
        .map(|(name, entry)| entry.get("content").and_then(Value::as_str).map(|c| (name.clone(), c.to_owned())))
        .collect()
}

fn has_pragma(raw: &str) -> bool {
    let toks = tokenize(&strip_comments(raw));
    toks.windows(2).any(|w| w[0].is("pragma") && w[1].is("solidity"))
}
