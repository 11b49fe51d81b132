//! Comment stripping and a flat token stream for Solidity source.
//!
//! Both passes understand string literals, so `//` inside `"http://..."` is
//! not a comment and `.transfer(` inside a string is not code.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    /// Decimal or `0x` hex number.
    Number,
    /// Quoted string; `value` holds the decoded bytes (lossy UTF-8).
    Str {
        value: String,
        non_ascii: bool,
    },
    /// `hex"..."` literal.
    HexStr,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
    pub column: usize,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text && !matches!(self.kind, TokenKind::Str { .. } | TokenKind::HexStr)
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }

    pub fn is_string(&self) -> bool {
        matches!(self.kind, TokenKind::Str { .. })
    }

    /// `0x` followed by exactly `digits` hex digits.
    pub fn is_hex_number(&self, digits: usize) -> bool {
        self.kind == TokenKind::Number
            && self.text.len() == digits + 2
            && (self.text.starts_with("0x") || self.text.starts_with("0X"))
            && self.text[2..].bytes().all(|b| b.is_ascii_hexdigit())
    }
}

/// Removes `//` and `/* */` comments. Newlines inside block comments are
/// kept so line numbers of the remaining code do not move; every other
/// comment character becomes nothing, and a block comment leaves one space
/// so it still separates tokens.
pub fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '/' if chars.peek() == Some(&'/') => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                out.push(' ');
                let mut prev = '\0';
                for n in chars.by_ref() {
                    if n == '\n' {
                        out.push('\n');
                    }
                    if prev == '*' && n == '/' {
                        break;
                    }
                    prev = n;
                }
            }
            '"' | '\'' => {
                out.push(c);
                let mut escaped = false;
                for n in chars.by_ref() {
                    out.push(n);
                    if escaped {
                        escaped = false;
                    } else if n == '\\' {
                        escaped = true;
                    } else if n == c || n == '\n' {
                        break;
                    }
                }
            }
            _ => out.push(c),
        }
    }
    out
}

const PUNCT2: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "=>", "++", "--", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<", ">>",
    "**", "->",
];

/// Tokenizes comment-free source. Lines and columns are 1-based.
pub fn tokenize(src: &str) -> Vec<Token> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for k in 0..n {
            if chars[*i + k] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c == '"' || c == '\'' {
            let (len, value, non_ascii) = read_string(&chars[i..]);
            let text: String = chars[i..i + len].iter().collect();
            let is_hex = matches!(tokens.last(), Some(Token { kind: TokenKind::Ident, text, line: l, column: cl })
                if text == "hex" && *l == start_line && cl + 3 == start_col);
            if is_hex {
                tokens.pop();
                tokens.push(Token {
                    kind: TokenKind::HexStr,
                    text: format!("hex{text}"),
                    line: start_line,
                    column: start_col - 3,
                });
            } else {
                tokens.push(Token {
                    kind: TokenKind::Str { value, non_ascii },
                    text,
                    line: start_line,
                    column: start_col,
                });
            }
            advance(&mut i, &mut line, &mut col, len);
            continue;
        }
        if c.is_ascii_digit() {
            let mut len = 1;
            while i + len < chars.len()
                && (chars[i + len].is_ascii_alphanumeric() || chars[i + len] == '_' || chars[i + len] == '.')
            {
                len += 1;
            }
            let text: String = chars[i..i + len].iter().collect();
            tokens.push(Token { kind: TokenKind::Number, text, line: start_line, column: start_col });
            advance(&mut i, &mut line, &mut col, len);
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '$' {
            let mut len = 1;
            while i + len < chars.len()
                && (chars[i + len].is_alphanumeric() || chars[i + len] == '_' || chars[i + len] == '$')
            {
                len += 1;
            }
            let text: String = chars[i..i + len].iter().collect();
            tokens.push(Token { kind: TokenKind::Ident, text, line: start_line, column: start_col });
            advance(&mut i, &mut line, &mut col, len);
            continue;
        }
        let len = if i + 1 < chars.len() {
            let pair: String = chars[i..i + 2].iter().collect();
            if PUNCT2.contains(&pair.as_str()) {
                2
            } else {
                1
            }
        } else {
            1
        };
        let text: String = chars[i..i + len].iter().collect();
        tokens.push(Token { kind: TokenKind::Punct, text, line: start_line, column: start_col });
        advance(&mut i, &mut line, &mut col, len);
    }
    tokens
}

/// Returns (length in chars including quotes, decoded value, has non-ASCII).
fn read_string(chars: &[char]) -> (usize, String, bool) {
    let quote = chars[0];
    let mut bytes = Vec::new();
    let mut i = 1;
    let mut buf = [0u8; 4];
    while i < chars.len() {
        let c = chars[i];
        if c == quote || c == '\n' {
            i += 1;
            break;
        }
        if c == '\\' && i + 1 < chars.len() {
            let e = chars[i + 1];
            i += 2;
            match e {
                'n' => bytes.push(b'\n'),
                't' => bytes.push(b'\t'),
                'r' => bytes.push(b'\r'),
                '\n' => {}
                'x' => {
                    let hex: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                    match u8::from_str_radix(&hex, 16) {
                        Ok(b) if hex.len() == 2 => {
                            bytes.push(b);
                            i += 2;
                        }
                        _ => bytes.push(b'x'),
                    }
                }
                'u' => {
                    let hex: String = chars[i..(i + 4).min(chars.len())].iter().collect();
                    match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                        Some(ch) if hex.len() == 4 => {
                            bytes.extend_from_slice(ch.encode_utf8(&mut buf).as_bytes());
                            i += 4;
                        }
                        _ => bytes.push(b'u'),
                    }
                }
                other => bytes.extend_from_slice(other.encode_utf8(&mut buf).as_bytes()),
            }
            continue;
        }
        bytes.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
        i += 1;
    }
    let non_ascii = bytes.iter().any(|b| !b.is_ascii());
    (i, String::from_utf8_lossy(&bytes).into_owned(), non_ascii)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_both_comment_kinds_but_not_strings() {
        let src = "a = \"http://x\"; // tail\n/* block\n comment */ b = 'it''s /* no */';";
        let out = strip_comments(src);
        assert_eq!(out, "a = \"http://x\"; \n \n b = 'it''s /* no */';");
        assert_eq!(out.lines().count(), src.lines().count());
    }

    #[test]
    fn escaped_quote_does_not_end_string() {
        let out = strip_comments(r#"s = "a\"//b"; // c"#);
        assert_eq!(out, r#"s = "a\"//b"; "#);
    }

    #[test]
    fn token_kinds_and_positions() {
        let toks = tokenize("if (x == 0x1F) {\n  y.transfer(1);\n}");
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["if", "(", "x", "==", "0x1F", ")", "{", "y", ".", "transfer", "(", "1", ")", ";", "}"]);
        assert_eq!(toks[4].kind, TokenKind::Number);
        assert_eq!((toks[7].line, toks[7].column), (2, 3));
    }

    #[test]
    fn string_values_are_decoded() {
        let toks = tokenize(r#"f("BТ", "\xe2\x80\x8b", "plain", unicode"fо")"#);
        let strs: Vec<(String, bool)> = toks
            .iter()
            .filter_map(|t| match &t.kind {
                TokenKind::Str { value, non_ascii } => Some((value.clone(), *non_ascii)),
                _ => None,
            })
            .collect();
        assert_eq!(strs[0], ("B\u{0422}".to_owned(), true));
        assert_eq!(strs[1], ("\u{200B}".to_owned(), true));
        assert_eq!(strs[2], ("plain".to_owned(), false));
        assert_eq!(strs[3], ("f\u{043E}".to_owned(), true));
    }

    #[test]
    fn hex_literals_are_not_strings() {
        let toks = tokenize("bytes32 h = hex\"00ff\";");
        assert!(toks.iter().any(|t| t.kind == TokenKind::HexStr && t.text == "hex\"00ff\""));
        assert!(!toks.iter().any(|t| t.is_string()));
    }

    #[test]
    fn address_literal_detection() {
        let toks = tokenize("0x47aa51fd5a98e155623202944c44f414a7205a46 0x12 100");
        assert!(toks[0].is_hex_number(40));
        assert!(!toks[1].is_hex_number(40));
        assert!(!toks[2].is_hex_number(40));
    }
}
