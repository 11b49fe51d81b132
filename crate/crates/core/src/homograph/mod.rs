//! Look-alike codepoint knowledge base and text analysis.
//!
//! Solidity forbids non-ASCII identifiers but allows arbitrary Unicode inside
//! string literals, so a literal that reads `"foo()"` or `"BT"` may hash to
//! something else entirely. This module finds such characters and enumerates
//! twin spellings of a given string.

mod scan;
mod table;

use thiserror::Error;

pub use scan::{scan_bytes, scan_text, FindingKind, HomographFinding, ZERO_WIDTH};
pub use table::{load_confusables, ConfusableEntry, ConfusablesTable};

#[derive(Debug, Error)]
pub enum HomographError {
    #[error("confusables file line {line} ({row:?}): {reason}")]
    Parse { line: usize, row: String, reason: String },
    #[error("invalid confusable entry: {0}")]
    InvalidEntry(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: usize },
}

/// Homograph spellings of `text`, excluding `text` itself.
///
/// Variants are ordered by the number of substituted positions, then by the
/// positions (leftmost first), then by twin codepoint. At most `max_variants`
/// are produced.
pub fn twin_variants(text: &str, table: &ConfusablesTable, max_variants: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let slots: Vec<(usize, &[char])> = chars
        .iter()
        .enumerate()
        .filter_map(|(i, &c)| {
            let twins = table.twins_of(c);
            (!twins.is_empty()).then_some((i, twins))
        })
        .collect();

    let mut out = Vec::new();
    for size in 1..=slots.len() {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            if !emit_products(&chars, &slots, &combo, max_variants, &mut out) {
                return out;
            }
            if !next_combination(&mut combo, slots.len()) {
                break;
            }
        }
    }
    out
}

/// Pushes every twin assignment for the chosen slots; false once full.
fn emit_products(
    chars: &[char],
    slots: &[(usize, &[char])],
    combo: &[usize],
    max: usize,
    out: &mut Vec<String>,
) -> bool {
    let mut choice = vec![0usize; combo.len()];
    loop {
        if out.len() >= max {
            return false;
        }
        let mut variant = chars.to_vec();
        for (k, &slot) in combo.iter().enumerate() {
            let (pos, twins) = slots[slot];
            variant[pos] = twins[choice[k]];
        }
        out.push(variant.into_iter().collect());

        // odometer over twin choices, rightmost fastest
        let mut k = combo.len();
        loop {
            if k == 0 {
                return true;
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < slots[combo[k]].1.len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
