use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{race, MinerError};
use crate::crypto::{keccak256, FunctionSignature, Selector};

const CHUNK: u64 = 1 << 14;

/// Parameters for a selector-collision name search.
///
/// Names are `name_prefix` + suffix, with suffixes enumerated over `charset`
/// in shortlex order (shorter first, then by charset order). Index 0 is the
/// empty suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionSearchSpec {
    pub target: Selector,
    pub name_prefix: String,
    pub charset: Vec<char>,
    pub arg_types: Vec<String>,
    /// Leading selector bits that must match: 8, 16, 24 or 32.
    pub truncate_bits: u32,
    /// Shortlex index to resume from.
    pub start_index: u64,
    /// Names that must never be returned, e.g. the function being imitated.
    pub excluded: Vec<String>,
    pub max_trials: Option<u64>,
    pub workers: usize,
}

impl CollisionSearchSpec {
    pub fn new(target: Selector, name_prefix: impl Into<String>, charset: &str) -> Self {
        CollisionSearchSpec {
            target,
            name_prefix: name_prefix.into(),
            charset: charset.chars().collect(),
            arg_types: Vec::new(),
            truncate_bits: 32,
            start_index: 0,
            excluded: Vec::new(),
            max_trials: None,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), MinerError> {
        let invalid = |msg: &str| Err(MinerError::InvalidSpec(msg.to_owned()));
        if ![8, 16, 24, 32].contains(&self.truncate_bits) {
            return invalid("truncate_bits must be one of 8, 16, 24, 32");
        }
        if self.charset.is_empty() {
            return invalid("charset is empty");
        }
        let unique: HashSet<char> = self.charset.iter().copied().collect();
        if unique.len() != self.charset.len() {
            return invalid("charset has repeated characters");
        }
        if self.charset.iter().any(|c| c.is_whitespace() || "(),[]".contains(*c)) {
            return invalid("charset contains characters that cannot appear in a name");
        }
        // every generated name must start with a letter
        match self.name_prefix.chars().next() {
            Some(c) if c.is_alphabetic() || c == '_' => {}
            Some(_) => return invalid("name prefix must start with a letter or underscore"),
            None if self.charset.iter().all(|c| c.is_alphabetic() || *c == '_') => {}
            None => return invalid("with an empty prefix the charset must be alphabetic"),
        }
        FunctionSignature::new(format!("{}{}", self.name_prefix, self.charset[0]), self.arg_types.clone())
            .map_err(|e| MinerError::InvalidSpec(e.to_string()))?;
        Ok(())
    }

    /// Suffix at shortlex `index`.
    pub fn suffix_at(&self, index: u64) -> String {
        digits_at(index, self.charset.len() as u64).into_iter().map(|d| self.charset[d]).collect()
    }
}

/// Suffix digits (most significant first) of shortlex index `index` in base `base`.
fn digits_at(mut index: u64, base: u64) -> Vec<usize> {
    let mut len = 0u32;
    let mut block = 1u64;
    while index >= block {
        index -= block;
        len += 1;
        block = block.saturating_mul(base);
    }
    let mut digits = vec![0usize; len as usize];
    for slot in digits.iter_mut().rev() {
        *slot = (index % base) as usize;
        index /= base;
    }
    digits
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CollisionFound {
    pub signature: String,
    pub selector: Selector,
    /// Shortlex index of the hit.
    pub index: u64,
    /// Candidates hashed before and including the hit (one worker), or in
    /// total across workers.
    pub trials: u64,
    pub elapsed_ms: u128,
}

impl CollisionFound {
    pub fn function_signature(&self) -> FunctionSignature {
        self.signature.parse().expect("mined signatures are canonical")
    }
}

/// Enumerates candidate names until one's selector agrees with the target
/// on the leading `truncate_bits` bits.
pub fn mine_selector_collision(
    spec: &CollisionSearchSpec,
    time_budget: Duration,
) -> Result<CollisionFound, MinerError> {
    spec.validate()?;
    let started = Instant::now();
    let workers = spec.workers.max(1) as u64;
    let total = AtomicU64::new(0);
    let excluded: HashSet<&str> = spec.excluded.iter().map(String::as_str).collect();
    let tail = format!("({})", spec.arg_types.join(","));
    let limit = spec.max_trials.unwrap_or(u64::MAX);

    // single worker: one contiguous run; several: interleaved chunks
    let found = race(workers as usize, |w, stop: &AtomicBool| {
        let mut chunk = w as u64;
        loop {
            let (from, len) = if workers == 1 {
                (spec.start_index, limit)
            } else {
                (spec.start_index.saturating_add(chunk * CHUNK), CHUNK)
            };
            let mut cursor = Cursor::new(spec, from);
            for _ in 0..len {
                if stop.load(Ordering::Relaxed) {
                    return None;
                }
                let n = total.fetch_add(1, Ordering::Relaxed) + 1;
                if n > limit {
                    return None;
                }
                if n.is_multiple_of(4096) && started.elapsed() >= time_budget {
                    return None;
                }
                let hit = cursor.probe(&tail, spec, &excluded);
                if let Some((name, selector)) = hit {
                    return Some((name, selector, cursor.index, n));
                }
                cursor.advance();
            }
            if workers == 1 {
                return None;
            }
            chunk += workers;
        }
    });

    let trials = total.load(Ordering::Relaxed).min(limit);
    match found {
        Some((name, selector, index, n)) => Ok(CollisionFound {
            signature: format!("{name}{tail}"),
            selector,
            index,
            trials: if workers == 1 { n } else { trials },
            elapsed_ms: started.elapsed().as_millis(),
        }),
        None => Err(MinerError::CollisionNotFound { trials }),
    }
}

/// Incrementing shortlex odometer over the charset.
struct Cursor {
    index: u64,
    digits: Vec<usize>,
    base: usize,
    buf: String,
    prefix_len: usize,
    charset: Vec<char>,
}

impl Cursor {
    fn new(spec: &CollisionSearchSpec, index: u64) -> Self {
        Cursor {
            index,
            digits: digits_at(index, spec.charset.len() as u64),
            base: spec.charset.len(),
            buf: spec.name_prefix.clone(),
            prefix_len: spec.name_prefix.len(),
            charset: spec.charset.clone(),
        }
    }

    fn probe(
        &mut self,
        tail: &str,
        spec: &CollisionSearchSpec,
        excluded: &HashSet<&str>,
    ) -> Option<(String, Selector)> {
        self.buf.truncate(self.prefix_len);
        self.buf.extend(self.digits.iter().map(|&d| self.charset[d]));
        if self.buf.is_empty() {
            return None;
        }
        let name_len = self.buf.len();
        self.buf.push_str(tail);
        let digest = keccak256(self.buf.as_bytes());
        let selector = Selector([digest[0], digest[1], digest[2], digest[3]]);
        if selector.matches_prefix(&spec.target, spec.truncate_bits) && !excluded.contains(&self.buf[..name_len]) {
            return Some((self.buf[..name_len].to_owned(), selector));
        }
        None
    }

    fn advance(&mut self) {
        self.index += 1;
        for slot in self.digits.iter_mut().rev() {
            *slot += 1;
            if *slot < self.base {
                return;
            }
            *slot = 0;
        }
        self.digits.insert(0, 0);
    }
}
