//! The 22 signature detectors.
//!
//! "Same call stack" is approximated lexically: a function's own body, the
//! bodies of the modifiers applied to it, and the bodies of functions it
//! calls by name within its contract (inherited ones included), one level
//! deep.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::ops::Range;

use super::lexer::{tokenize, Token, TokenKind};
use super::model::{matching, receiver, split_args, BodyShape, FileModel, Function, FunctionKind, Visibility};
use super::{sig, Location, SignatureHit, SignatureId, SourceUnit};

/// File index and token index.
type Site = (usize, usize);

/// File, contract and function indices.
type FnRef = (usize, usize, usize);

const TOKEN_TRANSFER_CALLS: &[&str] =
    &["transfer", "transferFrom", "_transfer", "safeTransfer", "safeTransferFrom", "_safeTransfer"];
const HASH_FUNCTIONS: &[&str] = &["keccak256", "sha3"];

#[derive(Debug, Clone)]
struct Ether {
    site: Site,
    line: usize,
    /// `call` with a value; also counts as a low-level call.
    call_value: bool,
    receiver: Range<usize>,
}

/// Markers found in one body.
#[derive(Debug, Clone, Default)]
struct Facts {
    ether: Vec<Ether>,
    token: Vec<(Site, usize)>,
    icc: Vec<(Site, usize)>,
    requires: Vec<(usize, usize)>,
    emits: Vec<(usize, usize)>,
    address_writes: Vec<(usize, usize)>,
    calls: Vec<String>,
}

impl Facts {
    fn absorb(&mut self, other: &Facts) {
        self.ether.extend(other.ether.iter().cloned());
        self.token.extend_from_slice(&other.token);
        self.icc.extend_from_slice(&other.icc);
        self.requires.extend_from_slice(&other.requires);
        self.emits.extend_from_slice(&other.emits);
        self.address_writes.extend_from_slice(&other.address_writes);
    }
}

struct Collector<'a> {
    names: Vec<&'a str>,
    found: BTreeMap<SignatureId, BTreeSet<(usize, usize)>>,
}

impl Collector<'_> {
    fn add(&mut self, id: u8, file: usize, line: usize) {
        self.found.entry(sig(id)).or_default().insert((file, line));
    }
}

/// Runs every detector over the unit. Hits are ordered by their first
/// location, then by signature number.
pub fn detect_signatures(unit: &SourceUnit) -> Vec<SignatureHit> {
    let models: Vec<FileModel> = unit.files.iter().map(|f| FileModel::parse(tokenize(&f.text))).collect();
    let mut out = Collector { names: unit.files.iter().map(|f| f.name.as_str()).collect(), found: BTreeMap::new() };

    let mut by_name: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
    for (fi, m) in models.iter().enumerate() {
        for (ci, c) in m.contracts.iter().enumerate() {
            by_name.entry(c.name.as_str()).or_default().push((fi, ci));
        }
    }

    for (fi, m) in models.iter().enumerate() {
        file_level(&mut out, fi, &m.tokens);
        for ci in 0..m.contracts.len() {
            let lineage = lineage(&models, &by_name, (fi, ci));
            contract_level(&mut out, &models, &lineage);
        }
    }

    let mut hits: Vec<SignatureHit> = out
        .found
        .into_iter()
        .map(|(id, locs)| {
            let locations: Vec<Location> =
                locs.iter().map(|&(f, line)| Location { file: out.names[f].to_owned(), line }).collect();
            let (f, line) = *locs.iter().next().expect("hits have locations");
            let evidence = unit.files[f].text.lines().nth(line - 1).unwrap_or("").trim();
            let evidence: String = evidence.chars().take(160).collect();
            SignatureHit { signature_id: id, locations, evidence }
        })
        .collect();
    hits.sort_by(|a, b| (&a.locations[0], a.signature_id).cmp(&(&b.locations[0], b.signature_id)));
    hits
}

/// The contract and its bases, transitively, resolved by name within the unit.
fn lineage(
    models: &[FileModel],
    by_name: &HashMap<&str, Vec<(usize, usize)>>,
    start: (usize, usize),
) -> Vec<(usize, usize)> {
    let mut seen = vec![start];
    let mut k = 0;
    while k < seen.len() {
        let (fi, ci) = seen[k];
        for base in &models[fi].contracts[ci].bases {
            for &r in by_name.get(base.as_str()).into_iter().flatten() {
                if !seen.contains(&r) {
                    seen.push(r);
                }
            }
        }
        k += 1;
    }
    seen
}

/// Signatures that need no structure: S10 for 64-digit hex literals and S21.
fn file_level(out: &mut Collector, fi: usize, tokens: &[Token]) {
    for t in tokens {
        if t.is_hex_number(64) {
            out.add(10, fi, t.line);
        }
        if let TokenKind::Str { non_ascii: true, .. } = t.kind {
            out.add(21, fi, t.line);
        }
    }
}

struct Lineage<'m> {
    models: &'m [FileModel],
    functions: Vec<(FnRef, &'m Function)>,
    address_vars: HashSet<&'m str>,
    bytes32_vars: HashSet<&'m str>,
    hard_coded: HashSet<String>,
    bytes32_returning: HashSet<&'m str>,
}

impl<'m> Lineage<'m> {
    fn tokens(&self, fi: usize) -> &'m [Token] {
        &self.models[fi].tokens
    }

    fn named(&self, name: &str, modifier: bool) -> impl Iterator<Item = &(FnRef, &'m Function)> + '_ {
        let name = name.to_owned();
        self.functions
            .iter()
            .filter(move |(_, f)| f.name == name && (f.kind == FunctionKind::Modifier) == modifier && f.has_body)
    }
}

fn contract_level(out: &mut Collector, models: &[FileModel], lineage: &[(usize, usize)]) {
    let (own_file, own_contract) = lineage[0];
    let mut ctx = Lineage {
        models,
        functions: Vec::new(),
        address_vars: HashSet::new(),
        bytes32_vars: HashSet::new(),
        hard_coded: HashSet::new(),
        bytes32_returning: HashSet::new(),
    };
    for &(fi, ci) in lineage {
        let c = &models[fi].contracts[ci];
        for (k, f) in c.functions.iter().enumerate() {
            ctx.functions.push(((fi, ci, k), f));
            if f.returns_bytes32 {
                ctx.bytes32_returning.insert(f.name.as_str());
            }
        }
        for v in &c.state_vars {
            match v.type_head.as_str() {
                "address" => {
                    ctx.address_vars.insert(v.name.as_str());
                }
                "bytes32" => {
                    ctx.bytes32_vars.insert(v.name.as_str());
                }
                _ => {}
            }
        }
    }

    // hard-coded addresses: reported for the contract's own declarations,
    // but names from the whole lineage count for S9
    for &(fi, ci) in lineage {
        let report = (fi, ci) == (own_file, own_contract);
        let tokens = ctx.tokens(fi);
        let c = &models[fi].contracts[ci];
        for v in &c.state_vars {
            if v.type_head == "address" && tokens[v.init.clone()].iter().any(|t| t.is_hex_number(40)) {
                ctx.hard_coded.insert(v.name.clone());
                if report {
                    out.add(if v.constant { 7 } else { 8 }, fi, v.line);
                }
            }
            if v.type_head == "bytes32" && report && literal_initializer(&tokens[v.init.clone()]) {
                out.add(10, fi, v.line);
            }
        }
        for f in &c.functions {
            for (name, line) in hard_coded_writes(tokens, f.body.clone(), &ctx.address_vars) {
                ctx.hard_coded.insert(name);
                if report {
                    out.add(8, fi, line);
                }
            }
            if report {
                for line in bytes32_literal_locals(tokens, f.body.clone()) {
                    out.add(10, fi, line);
                }
            }
        }
    }

    let c = &models[own_file].contracts[own_contract];
    let tokens = ctx.tokens(own_file);
    for (k, f) in c.functions.iter().enumerate() {
        if !f.has_body {
            continue;
        }
        if f.payable && f.kind != FunctionKind::Modifier {
            out.add(5, own_file, f.line);
        }
        let own = facts(tokens, own_file, f, &ctx.address_vars);
        lexical(out, &ctx, own_file, f, &own);

        if f.kind == FunctionKind::Modifier {
            continue;
        }
        let scope = scope_facts(&ctx, (own_file, own_contract, k), f, &own);
        stack_rules(out, f, &scope);
    }
}

/// Markers in the body of `f`.
fn facts(tokens: &[Token], fi: usize, f: &Function, address_vars: &HashSet<&str>) -> Facts {
    let mut facts = Facts::default();
    let body = f.body.clone();
    let shadowed: HashSet<&str> = f.params.iter().map(|(_, n)| n.as_str()).collect();
    let next_is = |k: usize, text: &str| tokens.get(k).is_some_and(|t| t.is(text)) && k < body.end;

    for k in body.clone() {
        let t = &tokens[k];
        let prev = if k > body.start { tokens.get(k - 1) } else { None };
        if t.is(".") {
            let Some(name) = tokens.get(k + 1).filter(|n| n.is_ident() && k + 1 < body.end) else {
                continue;
            };
            match name.text.as_str() {
                "transfer" | "send" if next_is(k + 2, "(") => {
                    let close = matching(tokens, k + 2);
                    let args = split_args(tokens, k + 3..close).len();
                    if args == 1 {
                        let receiver = receiver(tokens, k, body.start);
                        facts.ether.push(Ether { site: (fi, k), line: name.line, call_value: false, receiver });
                    } else if args >= 2 && name.text == "transfer" {
                        facts.token.push(((fi, k), name.line));
                    }
                }
                "transferFrom" | "safeTransfer" | "safeTransferFrom" if next_is(k + 2, "(") => {
                    facts.token.push(((fi, k), name.line));
                }
                "call" | "delegatecall" if next_is(k + 2, "(") || next_is(k + 2, "{") || next_is(k + 2, ".") => {
                    facts.icc.push(((fi, k), name.line));
                    let with_value = if next_is(k + 2, "{") {
                        let close = matching(tokens, k + 2);
                        tokens[k + 3..close].windows(2).any(|w| w[0].is("value") && w[1].is(":"))
                    } else {
                        next_is(k + 2, ".") && next_is(k + 3, "value")
                    };
                    if with_value && name.text == "call" {
                        let receiver = receiver(tokens, k, body.start);
                        facts.ether.push(Ether { site: (fi, k), line: name.line, call_value: true, receiver });
                    }
                }
                _ => {}
            }
            continue;
        }
        if t.is("emit") {
            facts.emits.push((fi, t.line));
            continue;
        }
        if !t.is_ident() || prev.is_some_and(|p| p.is(".")) {
            continue;
        }
        if next_is(k + 1, "(") {
            let declaring = prev.is_some_and(|p| p.is("function") || p.is("modifier") || p.is("event") || p.is("new"));
            if declaring {
                continue;
            }
            let name = t.text.as_str();
            if name == "require" {
                facts.requires.push((fi, t.line));
            } else {
                let close = matching(tokens, k + 1);
                let args = split_args(tokens, k + 2..close).len();
                // the ERC-20 `Transfer` event marks a balance move done in place
                if (TOKEN_TRANSFER_CALLS.contains(&name) && args >= 2) || (name == "Transfer" && args == 3) {
                    facts.token.push(((fi, k), t.line));
                }
                facts.calls.push(name.to_owned());
            }
        } else if next_is(k + 1, "=")
            && address_vars.contains(t.text.as_str())
            && !shadowed.contains(t.text.as_str())
            && !prev.is_some_and(|p| p.is_ident() && !p.is("return"))
        {
            facts.address_writes.push((fi, t.line));
        }
    }
    facts
}

/// Facts of `f` merged with its applied modifiers and direct callees.
fn scope_facts(ctx: &Lineage, me: FnRef, f: &Function, own: &Facts) -> Facts {
    let mut scope = own.clone();
    let mut included: HashSet<FnRef> = HashSet::from([me]);
    let mut pull = |target: &(FnRef, &Function), scope: &mut Facts| {
        if included.insert(target.0) {
            let (fi, _, _) = target.0;
            scope.absorb(&facts(ctx.tokens(fi), fi, target.1, &ctx.address_vars));
        }
    };
    for m in &f.modifiers {
        for target in ctx.named(m, true) {
            pull(target, &mut scope);
        }
    }
    for name in &own.calls {
        for target in ctx.named(name, false) {
            pull(target, &mut scope);
        }
    }
    scope
}

/// Rules over the whole call-stack approximation of one entry function.
fn stack_rules(out: &mut Collector, f: &Function, s: &Facts) {
    let plain: Vec<&Ether> = s.ether.iter().filter(|e| !e.call_value).collect();

    if plain.len() >= 2 {
        for e in &plain {
            out.add(2, e.site.0, e.line);
        }
    }
    if s.ether.len() >= 2 && s.ether.iter().any(|e| e.call_value) {
        for e in &s.ether {
            out.add(3, e.site.0, e.line);
        }
    }
    if !s.ether.is_empty() && !s.token.is_empty() {
        for e in &s.ether {
            out.add(4, e.site.0, e.line);
        }
        for &((fi, _), line) in &s.token {
            out.add(4, fi, line);
        }
    }
    if !s.requires.is_empty() {
        for e in &s.ether {
            out.add(13, e.site.0, e.line);
        }
        for &((fi, _), line) in &s.token {
            out.add(14, fi, line);
        }
    }
    for e in &s.ether {
        if s.icc.iter().any(|c| c.0 != e.site) {
            out.add(19, e.site.0, e.line);
        }
    }
    if !s.icc.is_empty() {
        for &((fi, _), line) in &s.token {
            out.add(20, fi, line);
        }
    }
    if f.payable {
        for &(fi, line) in &s.emits {
            out.add(6, fi, line);
        }
    }
    let entry = matches!(f.kind, FunctionKind::Function | FunctionKind::Fallback | FunctionKind::Receive)
        && matches!(f.visibility, Visibility::Public | Visibility::External);
    if entry {
        for &(fi, line) in &s.address_writes {
            out.add(1, fi, line);
        }
    }
}

/// Detectors that look only at the text of one body.
fn lexical(out: &mut Collector, ctx: &Lineage, fi: usize, f: &Function, own: &Facts) {
    let tokens = ctx.tokens(fi);
    let shape = BodyShape::of(tokens, f.body.clone());
    let in_arm = |site: Site| shape.arms.iter().any(|a| a.contains(&site.1));

    for e in &own.ether {
        let target = &tokens[e.receiver.clone()];
        let hard = target.iter().enumerate().any(|(k, t)| {
            t.is_hex_number(40)
                || (t.is_ident() && ctx.hard_coded.contains(&t.text) && (k == 0 || !target[k - 1].is(".")))
        });
        if hard {
            out.add(9, fi, e.line);
        }
        if in_arm(e.site) {
            out.add(11, fi, e.line);
        }
    }
    for &(site, line) in &own.token {
        if in_arm(site) {
            out.add(12, fi, line);
        }
    }

    let mut bytes32_names: HashSet<&str> = ctx.bytes32_vars.clone();
    bytes32_names.extend(f.params.iter().filter(|(ty, _)| ty == "bytes32").map(|(_, n)| n.as_str()));
    for k in f.body.clone() {
        if tokens[k].is("bytes32") {
            if let Some(n) = tokens.get(k + 1).filter(|n| n.is_ident() && !n.is("memory")) {
                bytes32_names.insert(n.text.as_str());
            }
        }
    }
    for cond in &shape.conditions {
        let toks = &tokens[cond.clone()];
        let bytes32 = toks.iter().enumerate().any(|(k, t)| {
            let member = k > 0 && toks[k - 1].is(".");
            let called = toks.get(k + 1).is_some_and(|n| n.is("("));
            t.is_hex_number(64)
                || (t.is_ident() && !member && !called && bytes32_names.contains(t.text.as_str()))
                || (t.is_ident() && !member && called && ctx.bytes32_returning.contains(t.text.as_str()))
        });
        if bytes32 {
            out.add(15, fi, toks[0].line);
        }
        if let Some(lit) = toks.iter().find(|t| t.is_string()) {
            out.add(17, fi, lit.line);
        }
    }
    for (req, first) in &shape.requires {
        if tokens[first.clone()].iter().any(|t| t.is_string()) {
            out.add(18, fi, tokens[*req].line);
        }
    }

    for k in f.body.clone() {
        let t = &tokens[k];
        if (t.is("==") || t.is("!="))
            && (hashes(&tokens[operand_left(tokens, k, f.body.start)..k])
                || hashes(&tokens[k + 1..operand_right(tokens, k, f.body.end)]))
        {
            out.add(16, fi, t.line);
        }
    }

    // S22: the success flag of a low-level call checked by require
    let status = status_vars(tokens, f.body.clone(), own);
    for (req, first) in &shape.requires {
        let arg = &tokens[first.clone()];
        let direct = arg.windows(2).any(|w| w[0].is(".") && (w[1].is("call") || w[1].is("delegatecall")));
        let via_flag = arg
            .iter()
            .enumerate()
            .any(|(k, t)| t.is_ident() && status.contains(t.text.as_str()) && (k == 0 || !arg[k - 1].is(".")));
        if direct || via_flag {
            out.add(22, fi, tokens[*req].line);
        }
    }
}

fn hashes(operand: &[Token]) -> bool {
    operand.iter().any(|t| t.is_ident() && HASH_FUNCTIONS.contains(&t.text.as_str()))
}

fn is_operand_boundary(t: &Token) -> bool {
    ["&&", "||", ",", ";", "{", "}", "=", "?", ":", "return", "==", "!=", "!"].iter().any(|b| t.is(b))
}

/// Start of the operand to the left of the comparison at `op`.
fn operand_left(tokens: &[Token], op: usize, floor: usize) -> usize {
    let mut depth = 0i32;
    let mut k = op;
    while k > floor {
        let t = &tokens[k - 1];
        if t.is(")") || t.is("]") {
            depth += 1;
        } else if t.is("(") || t.is("[") {
            if depth == 0 {
                break;
            }
            depth -= 1;
        } else if depth == 0 && is_operand_boundary(t) {
            break;
        }
        k -= 1;
    }
    k
}

/// End (exclusive) of the operand to the right of the comparison at `op`.
fn operand_right(tokens: &[Token], op: usize, limit: usize) -> usize {
    let mut depth = 0i32;
    let mut k = op + 1;
    while k < limit {
        let t = &tokens[k];
        if t.is("(") || t.is("[") {
            depth += 1;
        } else if t.is(")") || t.is("]") {
            if depth == 0 {
                break;
            }
            depth -= 1;
        } else if depth == 0 && is_operand_boundary(t) && !t.is("!") {
            break;
        }
        k += 1;
    }
    k
}

/// Names bound to the result of a low-level call in this body, as in
/// `(bool ok, ) = a.call(...)` or `ok = a.delegatecall(...)`.
fn status_vars<'t>(tokens: &'t [Token], body: Range<usize>, own: &Facts) -> HashSet<&'t str> {
    let mut vars = HashSet::new();
    for &((_, site), _) in &own.icc {
        let mut start = site;
        while start > body.start
            && !(tokens[start - 1].is(";") || tokens[start - 1].is("{") || tokens[start - 1].is("}"))
        {
            start -= 1;
        }
        let Some(eq) = (start..site).find(|&k| tokens[k].is("=")) else {
            continue;
        };
        for k in start..eq {
            let t = &tokens[k];
            let named = tokens.get(k + 1).is_some_and(|n| n.is(",") || n.is(")") || n.is("="));
            if t.is_ident() && named {
                vars.insert(t.text.as_str());
            }
        }
    }
    vars
}

/// `bytes32` initializers made only of literals, possibly hashed or cast.
fn literal_initializer(init: &[Token]) -> bool {
    const ALLOWED: &[&str] = &["bytes32", "keccak256", "sha3", "abi", "encodePacked", "bytes"];
    let has_literal =
        init.iter().any(|t| matches!(t.kind, TokenKind::Number | TokenKind::Str { .. } | TokenKind::HexStr));
    has_literal && init.iter().all(|t| !t.is_ident() || ALLOWED.contains(&t.text.as_str()))
}

/// Lines of `bytes32 name = <literal>;` inside a body.
fn bytes32_literal_locals(tokens: &[Token], body: Range<usize>) -> Vec<usize> {
    let mut lines = Vec::new();
    for k in body.clone() {
        if tokens[k].is("bytes32")
            && tokens.get(k + 1).is_some_and(|t| t.is_ident())
            && tokens.get(k + 2).is_some_and(|t| t.is("="))
        {
            let end = (k + 3..body.end).find(|&e| tokens[e].is(";")).unwrap_or(body.end);
            if literal_initializer(&tokens[k + 3..end]) {
                lines.push(tokens[k].line);
            }
        }
    }
    lines
}

/// Address variables given a 40-digit literal in a body: local
/// declarations and assignments to address state variables.
fn hard_coded_writes(tokens: &[Token], body: Range<usize>, address_vars: &HashSet<&str>) -> Vec<(String, usize)> {
    let mut found = Vec::new();
    for k in body.clone() {
        let t = &tokens[k];
        if !t.is_ident() || !tokens.get(k + 1).is_some_and(|n| n.is("=")) || k + 1 >= body.end {
            continue;
        }
        let prev = if k > body.start { Some(&tokens[k - 1]) } else { None };
        let declared_here =
            prev.is_some_and(|p| p.is("address") || (p.is("payable") && k >= 2 && tokens[k - 2].is("address")));
        let state_write = address_vars.contains(t.text.as_str()) && !prev.is_some_and(|p| p.is(".") || p.is_ident());
        if !(declared_here || state_write) {
            continue;
        }
        let end = (k + 2..body.end).find(|&e| tokens[e].is(";")).unwrap_or(body.end);
        if tokens[k + 2..end].iter().any(|t| t.is_hex_number(40)) {
            found.push((t.text.clone(), t.line));
        }
    }
    found
}
