//! Just enough Solidity structure for the detectors: contracts, state
//! variables, functions with their headers and body ranges, and the
//! branch/require/call shapes inside bodies. Anything unrecognized is
//! skipped, never rejected.

use std::ops::Range;

use super::lexer::{Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    Function,
    Constructor,
    Fallback,
    Receive,
    Modifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
}

#[derive(Debug, Clone)]
pub struct Function {
    pub name: String,
    pub kind: FunctionKind,
    pub visibility: Visibility,
    pub payable: bool,
    pub modifiers: Vec<String>,
    pub returns_bytes32: bool,
    /// Parameter (type head, name) pairs.
    pub params: Vec<(String, String)>,
    pub line: usize,
    /// Token range strictly inside the body braces.
    pub body: Range<usize>,
    /// False for bodiless declarations (interfaces, abstract functions).
    pub has_body: bool,
}

#[derive(Debug, Clone)]
pub struct StateVar {
    pub name: String,
    /// First type token, e.g. `address`, `bytes32`, `mapping`.
    pub type_head: String,
    pub constant: bool,
    pub line: usize,
    /// Tokens after `=`, if any.
    pub init: Range<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Contract {
    pub name: String,
    pub bases: Vec<String>,
    pub functions: Vec<Function>,
    pub state_vars: Vec<StateVar>,
}

/// Parsed view of one comment-stripped file.
#[derive(Debug, Clone)]
pub struct FileModel {
    pub tokens: Vec<Token>,
    pub contracts: Vec<Contract>,
}

const VISIBILITY_AND_MUTABILITY: &[&str] = &[
    "public",
    "external",
    "internal",
    "private",
    "view",
    "pure",
    "payable",
    "constant",
    "virtual",
    "override",
    "nonpayable",
];

impl FileModel {
    pub fn parse(tokens: Vec<Token>) -> FileModel {
        let mut contracts = Vec::new();
        let mut free = Contract { name: String::new(), ..Contract::default() };
        let mut i = 0;
        while i < tokens.len() {
            let t = &tokens[i];
            if t.is("contract") || t.is("library") || t.is("interface") {
                let (contract, next) = parse_contract(&tokens, i + 1);
                contracts.push(contract);
                i = next;
            } else if t.is("function") {
                let (item, next) = parse_callable(&tokens, i);
                free.functions.push(item);
                i = next;
            } else {
                i += 1;
            }
        }
        if !free.functions.is_empty() {
            contracts.push(free);
        }
        FileModel { tokens, contracts }
    }
}

/// Index of the token closing the bracket opened at `open`, or the end.
pub fn matching(tokens: &[Token], open: usize) -> usize {
    let (o, c) = match tokens[open].text.as_str() {
        "(" => ("(", ")"),
        "[" => ("[", "]"),
        _ => ("{", "}"),
    };
    let mut depth = 0usize;
    for (k, t) in tokens.iter().enumerate().skip(open) {
        if t.is(o) {
            depth += 1;
        } else if t.is(c) {
            depth -= 1;
            if depth == 0 {
                return k;
            }
        }
    }
    tokens.len()
}

/// Splits `range` on commas at bracket depth zero.
pub fn split_args(tokens: &[Token], range: Range<usize>) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    if range.is_empty() {
        return out;
    }
    let mut depth = 0i32;
    let mut start = range.start;
    for k in range.clone() {
        let t = &tokens[k];
        if t.is("(") || t.is("[") || t.is("{") {
            depth += 1;
        } else if t.is(")") || t.is("]") || t.is("}") {
            depth -= 1;
        } else if depth == 0 && t.is(",") {
            out.push(start..k);
            start = k + 1;
        }
    }
    out.push(start..range.end);
    out
}

fn parse_contract(tokens: &[Token], mut i: usize) -> (Contract, usize) {
    let mut contract = Contract::default();
    if let Some(t) = tokens.get(i).filter(|t| t.is_ident()) {
        contract.name = t.text.clone();
        i += 1;
    }
    // inheritance list up to the body
    let mut in_bases = false;
    while i < tokens.len() && !tokens[i].is("{") {
        let t = &tokens[i];
        if t.is("is") {
            in_bases = true;
        } else if t.is("(") {
            i = matching(tokens, i);
        } else if in_bases && t.is_ident() {
            contract.bases.push(t.text.clone());
        }
        i += 1;
    }
    if i >= tokens.len() {
        return (contract, i);
    }
    let end = matching(tokens, i);
    i += 1;
    while i < end {
        let t = &tokens[i];
        let text = t.text.as_str();
        match text {
            "function" | "constructor" | "fallback" | "receive" | "modifier" if t.is_ident() => {
                let (mut item, next) = parse_callable(tokens, i);
                // pre-0.5 constructors are named after the contract
                if item.kind == FunctionKind::Function && item.name == contract.name {
                    item.kind = FunctionKind::Constructor;
                }
                contract.functions.push(item);
                i = next;
            }
            "struct" | "enum" => {
                while i < end && !tokens[i].is("{") {
                    i += 1;
                }
                i = matching(tokens, i) + 1;
            }
            "event" | "error" | "using" | "pragma" | "import" => {
                while i < end && !tokens[i].is(";") {
                    i += 1;
                }
                i += 1;
            }
            ";" | "}" => i += 1,
            _ => {
                let start = i;
                let mut k = i;
                while k < end && !tokens[k].is(";") {
                    if tokens[k].is("(") || tokens[k].is("[") || tokens[k].is("{") {
                        k = matching(tokens, k);
                    }
                    k += 1;
                }
                if let Some(var) = parse_state_var(tokens, start..k.min(end)) {
                    contract.state_vars.push(var);
                }
                i = k + 1;
            }
        }
    }
    (contract, end + 1)
}

fn parse_state_var(tokens: &[Token], range: Range<usize>) -> Option<StateVar> {
    let decl = &tokens[range.clone()];
    let first = decl.first()?;
    if !first.is_ident() {
        return None;
    }
    let eq = decl.iter().position(|t| t.is("="));
    let head_end = eq.unwrap_or(decl.len());
    let mut name = None;
    let mut depth = 0i32;
    for t in &decl[..head_end] {
        if t.is("(") || t.is("[") {
            depth += 1;
        } else if t.is(")") || t.is("]") {
            depth -= 1;
        } else if depth == 0 && t.is_ident() && !is_var_keyword(&t.text) {
            name = Some(t.text.clone());
        }
    }
    let name = name?;
    if name == first.text {
        return None;
    }
    let constant = decl[..head_end].iter().any(|t| t.is("constant") || t.is("immutable"));
    let init = match eq {
        Some(e) => range.start + e + 1..range.end,
        None => range.end..range.end,
    };
    Some(StateVar { name, type_head: first.text.clone(), constant, line: first.line, init })
}

fn is_var_keyword(text: &str) -> bool {
    matches!(
        text,
        "public"
            | "private"
            | "internal"
            | "constant"
            | "immutable"
            | "override"
            | "payable"
            | "memory"
            | "storage"
            | "calldata"
    )
}

fn parse_callable(tokens: &[Token], start: usize) -> (Function, usize) {
    let keyword = tokens[start].text.as_str();
    let mut i = start + 1;
    let mut kind = match keyword {
        "constructor" => FunctionKind::Constructor,
        "fallback" => FunctionKind::Fallback,
        "receive" => FunctionKind::Receive,
        "modifier" => FunctionKind::Modifier,
        _ => FunctionKind::Function,
    };
    let mut name = keyword.to_owned();
    if matches!(kind, FunctionKind::Function | FunctionKind::Modifier) {
        match tokens.get(i) {
            Some(t) if t.is_ident() => {
                name = t.text.clone();
                i += 1;
            }
            // pre-0.6 unnamed fallback: `function() payable`
            _ => {
                kind = FunctionKind::Fallback;
                name = "fallback".into();
            }
        }
    }
    let mut params = Vec::new();
    if tokens.get(i).is_some_and(|t| t.is("(")) {
        let close = matching(tokens, i);
        for arg in split_args(tokens, i + 1..close) {
            let idents: Vec<&Token> = tokens[arg.clone()].iter().filter(|t| t.is_ident()).collect();
            if let Some(ty) = idents.first() {
                let pname = idents
                    .iter()
                    .skip(1)
                    .rev()
                    .find(|t| !is_var_keyword(&t.text))
                    .map(|t| t.text.clone())
                    .unwrap_or_default();
                params.push((ty.text.clone(), pname));
            }
        }
        i = close + 1;
    }

    let mut visibility = None;
    let mut payable = false;
    let mut modifiers = Vec::new();
    let mut returns_bytes32 = false;
    while i < tokens.len() && !tokens[i].is("{") && !tokens[i].is(";") {
        let t = &tokens[i];
        match t.text.as_str() {
            "public" => visibility = Some(Visibility::Public),
            "external" => visibility = Some(Visibility::External),
            "internal" => visibility = Some(Visibility::Internal),
            "private" => visibility = Some(Visibility::Private),
            "payable" => payable = true,
            "returns" => {
                if let Some(open) = tokens.get(i + 1).filter(|t| t.is("(")).map(|_| i + 1) {
                    let close = matching(tokens, open);
                    let rets = split_args(tokens, open + 1..close);
                    returns_bytes32 = rets.len() == 1 && tokens[rets[0].start].is("bytes32");
                    i = close;
                }
            }
            "override" => {
                if tokens.get(i + 1).is_some_and(|t| t.is("(")) {
                    i = matching(tokens, i + 1);
                }
            }
            "(" => i = matching(tokens, i),
            text if t.is_ident() && !VISIBILITY_AND_MUTABILITY.contains(&text) => modifiers.push(text.to_owned()),
            _ => {}
        }
        i += 1;
    }
    let has_body = tokens.get(i).is_some_and(|t| t.is("{"));
    let body = if has_body {
        let close = matching(tokens, i);
        let body = i + 1..close;
        i = close + 1;
        body
    } else {
        i += 1;
        i..i
    };
    let visibility = visibility.unwrap_or(match kind {
        FunctionKind::Function | FunctionKind::Fallback | FunctionKind::Receive => Visibility::Public,
        _ => Visibility::Internal,
    });
    let function = Function {
        name,
        kind,
        visibility,
        payable,
        modifiers,
        returns_bytes32,
        params,
        line: tokens[start].line,
        body,
        has_body,
    };
    (function, i)
}

/// Control-flow shapes found inside one function body.
#[derive(Debug, Clone, Default)]
pub struct BodyShape {
    /// Conditions of `if`, `while` and ternaries.
    pub conditions: Vec<Range<usize>>,
    /// Statements governed by `if`/`else` or a ternary arm.
    pub arms: Vec<Range<usize>>,
    /// First argument of every `require(...)`, with the `require` token index.
    pub requires: Vec<(usize, Range<usize>)>,
}

impl BodyShape {
    pub fn of(tokens: &[Token], body: Range<usize>) -> BodyShape {
        let mut shape = BodyShape::default();
        let mut i = body.start;
        while i < body.end {
            let t = &tokens[i];
            if (t.is("if") || t.is("while")) && tokens.get(i + 1).is_some_and(|n| n.is("(")) {
                let close = matching(tokens, i + 1);
                shape.conditions.push(i + 2..close);
                if t.is("if") {
                    shape.arms.push(close + 1..statement_end(tokens, close + 1, body.end));
                }
            } else if t.is("else") && !tokens.get(i + 1).is_some_and(|n| n.is("if")) {
                shape.arms.push(i + 1..statement_end(tokens, i + 1, body.end));
            } else if t.is("require") && tokens.get(i + 1).is_some_and(|n| n.is("(")) {
                let close = matching(tokens, i + 1);
                if let Some(first) = split_args(tokens, i + 2..close).into_iter().next() {
                    shape.requires.push((i, first));
                }
            } else if t.is("?") {
                let (cond, arms) = ternary(tokens, i, body.clone());
                shape.conditions.push(cond);
                shape.arms.extend(arms);
            }
            i += 1;
        }
        shape
    }
}

/// End (exclusive) of the statement or block starting at `from`.
pub fn statement_end(tokens: &[Token], from: usize, limit: usize) -> usize {
    if from >= limit {
        return limit;
    }
    if tokens[from].is("{") {
        return (matching(tokens, from) + 1).min(limit);
    }
    let control = tokens[from].is("if") || tokens[from].is("while") || tokens[from].is("for");
    if control && tokens.get(from + 1).is_some_and(|t| t.is("(")) {
        // nested control statement: its own arm, plus a trailing else
        let close = matching(tokens, from + 1);
        let mut end = statement_end(tokens, close + 1, limit);
        if tokens[from].is("if") && end < limit && tokens[end].is("else") {
            end = statement_end(tokens, end + 1, limit);
        }
        return end;
    }
    let mut k = from;
    while k < limit {
        let t = &tokens[k];
        if t.is(";") {
            return k + 1;
        }
        if t.is("(") || t.is("[") || t.is("{") {
            k = matching(tokens, k);
        }
        k += 1;
    }
    limit
}

/// Condition and the two arms of the ternary whose `?` is at `q`.
fn ternary(tokens: &[Token], q: usize, body: Range<usize>) -> (Range<usize>, Vec<Range<usize>>) {
    // walk back to the start of the condition at the same depth
    let mut depth = 0i32;
    let mut start = q;
    while start > body.start {
        let t = &tokens[start - 1];
        if t.is(")") || t.is("]") {
            depth += 1;
        } else if t.is("(") || t.is("[") {
            if depth == 0 {
                break;
            }
            depth -= 1;
        } else if depth == 0
            && (t.is(";")
                || t.is("{")
                || t.is("}")
                || t.is("=")
                || t.is(",")
                || t.is("return")
                || t.is("?")
                || t.is(":"))
        {
            break;
        }
        start -= 1;
    }
    // forward to the matching ':' and then to the end of the expression
    let mut depth = 0i32;
    let mut colon = None;
    let mut end = body.end;
    let mut k = q + 1;
    let mut nested = 0;
    while k < body.end {
        let t = &tokens[k];
        if t.is("(") || t.is("[") || t.is("{") {
            depth += 1;
        } else if t.is(")") || t.is("]") || t.is("}") {
            if depth == 0 {
                end = k;
                break;
            }
            depth -= 1;
        } else if depth == 0 {
            if t.is("?") {
                nested += 1;
            } else if t.is(":") {
                if nested == 0 && colon.is_none() {
                    colon = Some(k);
                } else if nested > 0 {
                    nested -= 1;
                }
            } else if t.is(";") || (t.is(",") && colon.is_some()) {
                end = k;
                break;
            }
        }
        k += 1;
    }
    let arms = match colon {
        Some(c) => vec![q + 1..c, c + 1..end],
        #[allow(clippy::single_range_in_vec_init)]
        None => vec![q + 1..end],
    };
    (start..q, arms)
}

/// Tokens of the receiver expression ending just before the `.` at `dot`,
/// e.g. `payable(owner)` in `payable(owner).transfer(x)`.
pub fn receiver(tokens: &[Token], dot: usize, floor: usize) -> Range<usize> {
    let mut k = dot;
    while k > floor {
        let t = &tokens[k - 1];
        if t.is(")") || t.is("]") {
            let mut depth = 0i32;
            while k > floor {
                let u = &tokens[k - 1];
                if u.is(")") || u.is("]") {
                    depth += 1;
                } else if u.is("(") || u.is("[") {
                    depth -= 1;
                }
                k -= 1;
                if depth == 0 {
                    break;
                }
            }
        } else if t.is_ident() || t.is(".") || t.kind == TokenKind::Number {
            k -= 1;
        } else {
            break;
        }
    }
    k..dot
}
