use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ConfusablesTable, HomographError};

/// Invisible codepoints that render as nothing in most editors.
pub const ZERO_WIDTH: &[char] = &['\u{200B}', '\u{200C}', '\u{200D}', '\u{2060}', '\u{FEFF}'];

const CONTEXT_CHARS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Confusable,
    ZeroWidth,
    OtherNonascii,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomographFinding {
    pub line: usize,
    pub column: usize,
    pub byte_offset: usize,
    #[serde(serialize_with = "as_codepoint", deserialize_with = "from_codepoint")]
    pub codepoint: char,
    pub kind: FindingKind,
    /// ASCII partner for confusables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookalike: Option<char>,
    pub context: String,
}

fn as_codepoint<S: Serializer>(c: &char, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("U+{:04X}", *c as u32))
}

fn from_codepoint<'de, D: Deserializer<'de>>(d: D) -> Result<char, D::Error> {
    let text = String::deserialize(d)?;
    text.strip_prefix("U+")
        .and_then(|hex| u32::from_str_radix(hex, 16).ok())
        .and_then(char::from_u32)
        .ok_or_else(|| serde::de::Error::custom(format!("bad codepoint {text:?}")))
}

/// Reports every non-ASCII codepoint in `text`, one finding each.
/// Lines and columns are 1-based; columns count codepoints.
pub fn scan_text(text: &str, table: &ConfusablesTable) -> Vec<HomographFinding> {
    let mut findings = Vec::new();
    let mut line = 1;
    let mut line_start = 0;
    let mut column = 0;
    for (offset, ch) in text.char_indices() {
        column += 1;
        if ch == '\n' {
            line += 1;
            line_start = offset + 1;
            column = 0;
            continue;
        }
        if ch.is_ascii() {
            continue;
        }
        let (kind, lookalike) = if ZERO_WIDTH.contains(&ch) {
            (FindingKind::ZeroWidth, None)
        } else if let Some(ascii) = table.partner_of(ch) {
            (FindingKind::Confusable, Some(ascii))
        } else {
            (FindingKind::OtherNonascii, None)
        };
        findings.push(HomographFinding {
            line,
            column,
            byte_offset: offset,
            codepoint: ch,
            kind,
            lookalike,
            context: excerpt(text, line_start, offset),
        });
    }
    findings
}

/// As [`scan_text`], but rejects input that is not UTF-8.
pub fn scan_bytes(bytes: &[u8], table: &ConfusablesTable) -> Result<Vec<HomographFinding>, HomographError> {
    let text = std::str::from_utf8(bytes).map_err(|e| HomographError::Encoding { offset: e.valid_up_to() })?;
    Ok(scan_text(text, table))
}

fn excerpt(text: &str, line_start: usize, offset: usize) -> String {
    let line_end = text[offset..].find('\n').map_or(text.len(), |i| offset + i);
    let before: Vec<char> = text[line_start..offset].chars().collect();
    let skip = before.len().saturating_sub(CONTEXT_CHARS);
    let mut out: String = before[skip..].iter().collect();
    out.extend(text[offset..line_end].chars().take(CONTEXT_CHARS + 1));
    out.trim_end_matches('\r').to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyrillic_te_in_symbol() {
        let findings = scan_text("B\u{0422}", &ConfusablesTable::builtin());
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.kind, FindingKind::Confusable);
        assert_eq!(f.lookalike, Some('T'));
        assert_eq!((f.line, f.column, f.byte_offset), (1, 2, 1));
        assert_eq!(f.codepoint, '\u{0422}');
    }

    #[test]
    fn ascii_only_is_clean() {
        assert!(scan_text("BT", &ConfusablesTable::builtin()).is_empty());
        assert!(scan_text("", &ConfusablesTable::builtin()).is_empty());
    }

    #[test]
    fn zero_width_space() {
        let findings = scan_text("\u{200B}", &ConfusablesTable::builtin());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].kind, FindingKind::ZeroWidth);
    }

    #[test]
    fn other_non_ascii_and_positions() {
        let text = "ok\nnaïve \u{043E}";
        let findings = scan_text(text, &ConfusablesTable::builtin());
        assert_eq!(findings.len(), 2);
        assert_eq!(findings[0].kind, FindingKind::OtherNonascii);
        assert_eq!((findings[0].line, findings[0].column), (2, 3));
        assert_eq!(&text[findings[0].byte_offset..][..2], "ï");
        assert_eq!(findings[1].kind, FindingKind::Confusable);
        assert_eq!((findings[1].line, findings[1].column), (2, 7));
        assert_eq!(findings[1].context, "naïve \u{043E}");
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let err = scan_bytes(b"abc\xff\xfe", &ConfusablesTable::builtin()).unwrap_err();
        assert!(matches!(err, HomographError::Encoding { offset: 3 }));
    }

    #[test]
    fn serializes_codepoint_notation() {
        let findings = scan_text("\u{200B}", &ConfusablesTable::builtin());
        let json = serde_json::to_string(&findings[0]).unwrap();
        assert!(json.contains("\"codepoint\":\"U+200B\""), "{json}");
        assert!(json.contains("\"kind\":\"zero_width\""), "{json}");
    }
}
