use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::{keccak256, parse_fixed_hex, ParseError};

pub const MAX_ARITY: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("signature must look like name(args): {0:?}")]
    Shape(String),
    #[error("unbalanced parentheses in {0:?}")]
    Unbalanced(String),
    #[error("empty function name")]
    EmptyName,
    #[error("{0} arguments exceeds the maximum of {MAX_ARITY}")]
    TooManyArgs(usize),
    #[error("unsupported or non-canonical type {0:?}")]
    UnsupportedType(String),
    #[error("unexpected token {0:?} in parameter {1:?}")]
    ParameterSyntax(String, String),
}

/// A function header: name plus canonical argument types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctionSignature {
    name: String,
    arg_types: Vec<String>,
}

impl FunctionSignature {
    /// Builds a signature from already-canonical parts. Type names are checked
    /// with the same rules as [`normalize_signature`].
    pub fn new(name: impl Into<String>, arg_types: Vec<String>) -> Result<Self, SignatureError> {
        let name = name.into();
        check_name(&name)?;
        if arg_types.len() > MAX_ARITY {
            return Err(SignatureError::TooManyArgs(arg_types.len()));
        }
        let arg_types =
            arg_types.iter().map(|t| canonical_param(t).map(|(ty, _)| ty)).collect::<Result<Vec<_>, _>>()?;
        Ok(FunctionSignature { name, arg_types })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arg_types(&self) -> &[String] {
        &self.arg_types
    }

    /// `name(type1,type2,...)` without spaces.
    pub fn canonical(&self) -> String {
        format!("{}({})", self.name, self.arg_types.join(","))
    }

    pub fn selector(&self) -> Selector {
        compute_selector(self)
    }
}

impl fmt::Display for FunctionSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for FunctionSignature {
    type Err = SignatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_signature(s)
    }
}

/// The 4-byte function selector.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Selector(pub [u8; 4]);

impl Selector {
    /// Selector of an arbitrary header string, hashed as its UTF-8 bytes.
    pub fn of_text(text: &str) -> Selector {
        let digest = keccak256(text.as_bytes());
        Selector([digest[0], digest[1], digest[2], digest[3]])
    }

    pub fn as_u32(&self) -> u32 {
        u32::from_be_bytes(self.0)
    }

    /// True when the leading `bits` bits agree. `bits` must be in 1..=32.
    pub fn matches_prefix(&self, other: &Selector, bits: u32) -> bool {
        debug_assert!((1..=32).contains(&bits));
        let shift = 32 - bits;
        (self.as_u32() >> shift) == (other.as_u32() >> shift)
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Selector({self})")
    }
}

impl FromStr for Selector {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fixed_hex::<4>(s.trim()).map(Selector)
    }
}

impl Serialize for Selector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Selector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub fn compute_selector(sig: &FunctionSignature) -> Selector {
    Selector::of_text(&sig.canonical())
}

/// Canonicalizes a human-written header such as `log (address user)`, with
/// or without a leading `function` keyword.
///
/// Whitespace, parameter names, data-location keywords and `indexed` are
/// dropped; `uint`/`int` expand to `uint256`/`int256`. The function name is
/// kept byte-for-byte, so look-alike codepoints survive.
pub fn normalize_signature(raw: &str) -> Result<FunctionSignature, SignatureError> {
    let raw = raw.trim();
    let raw = raw.strip_prefix("function").filter(|r| r.starts_with(char::is_whitespace)).map_or(raw, str::trim_start);
    let open = raw.find('(').ok_or_else(|| SignatureError::Shape(raw.to_owned()))?;
    if !raw.ends_with(')') {
        return Err(if depth_balanced(raw) {
            SignatureError::Shape(raw.to_owned())
        } else {
            SignatureError::Unbalanced(raw.to_owned())
        });
    }
    let name = raw[..open].trim();
    check_name(name)?;
    let inner = &raw[open + 1..raw.len() - 1];
    if matching_close(raw, open) != Some(raw.len() - 1) {
        return Err(SignatureError::Unbalanced(raw.to_owned()));
    }
    let arg_types = parse_param_list(inner)?;
    if arg_types.len() > MAX_ARITY {
        return Err(SignatureError::TooManyArgs(arg_types.len()));
    }
    Ok(FunctionSignature { name: name.to_owned(), arg_types })
}

fn check_name(name: &str) -> Result<(), SignatureError> {
    if name.is_empty() {
        return Err(SignatureError::EmptyName);
    }
    if name.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '[' | ']')) {
        return Err(SignatureError::Shape(name.to_owned()));
    }
    Ok(())
}

fn depth_balanced(text: &str) -> bool {
    let mut depth = 0i32;
    for c in text.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            return false;
        }
    }
    depth == 0
}

fn matching_close(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in text[open..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_param_list(inner: &str) -> Result<Vec<String>, SignatureError> {
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut params = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                params.push(&inner[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(SignatureError::Unbalanced(inner.to_owned()));
        }
    }
    if depth != 0 {
        return Err(SignatureError::Unbalanced(inner.to_owned()));
    }
    params.push(&inner[start..]);
    params.into_iter().map(|p| canonical_param(p).map(|(ty, _)| ty)).collect()
}

/// Returns the canonical type of one parameter and its (dropped) name.
fn canonical_param(param: &str) -> Result<(String, Option<String>), SignatureError> {
    let param = param.trim();
    if param.is_empty() {
        return Err(SignatureError::ParameterSyntax(String::new(), param.to_owned()));
    }
    let (base, rest) = if param.starts_with('(') {
        let close = matching_close(param, 0).ok_or_else(|| SignatureError::Unbalanced(param.to_owned()))?;
        let inner = parse_param_list(&param[1..close])?;
        (format!("({})", inner.join(",")), &param[close + 1..])
    } else {
        let end = param.find(|c: char| c.is_whitespace() || c == '[').unwrap_or(param.len());
        (elementary_type(&param[..end])?, &param[end..])
    };

    let mut ty = base;
    let mut rest = rest.trim_start();
    while let Some(after) = rest.strip_prefix('[') {
        let close = after.find(']').ok_or_else(|| SignatureError::Unbalanced(param.to_owned()))?;
        let dim = after[..close].trim();
        if !dim.chars().all(|c| c.is_ascii_digit()) {
            return Err(SignatureError::UnsupportedType(param.to_owned()));
        }
        ty.push('[');
        ty.push_str(dim);
        ty.push(']');
        rest = after[close + 1..].trim_start();
    }

    let mut name = None;
    for word in rest.split_whitespace() {
        match word {
            "memory" | "calldata" | "storage" | "indexed" | "payable" => {}
            w if name.is_none() && is_identifier(w) => name = Some(w.to_owned()),
            w => return Err(SignatureError::ParameterSyntax(w.to_owned(), param.to_owned())),
        }
    }
    Ok((ty, name))
}

fn is_identifier(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

fn elementary_type(word: &str) -> Result<String, SignatureError> {
    let unsupported = || SignatureError::UnsupportedType(word.to_owned());
    match word {
        "address" | "bool" | "string" | "bytes" | "function" => return Ok(word.to_owned()),
        "uint" => return Ok("uint256".to_owned()),
        "int" => return Ok("int256".to_owned()),
        _ => {}
    }
    let sized = |digits: &str, ok: &dyn Fn(u32) -> bool| -> Result<String, SignatureError> {
        if digits.is_empty() || digits.starts_with('0') || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(unsupported());
        }
        let n: u32 = digits.parse().map_err(|_| unsupported())?;
        if ok(n) {
            Ok(word.to_owned())
        } else {
            Err(unsupported())
        }
    };
    if let Some(d) = word.strip_prefix("uint") {
        sized(d, &|n| n % 8 == 0 && (8..=256).contains(&n))
    } else if let Some(d) = word.strip_prefix("int") {
        sized(d, &|n| n % 8 == 0 && (8..=256).contains(&n))
    } else if let Some(d) = word.strip_prefix("bytes") {
        sized(d, &|n| (1..=32).contains(&n))
    } else {
        Err(unsupported())
    }
}
