use super::MinerError;
use crate::crypto::{FunctionSignature, Selector};
use crate::homograph::ConfusablesTable;

/// Selector of `sig`'s canonical header after replacing the characters at the
/// given codepoint positions with look-alikes from `table`.
pub fn homograph_twin_selector(
    sig: &FunctionSignature,
    substitutions: &[(usize, char)],
    table: &ConfusablesTable,
) -> Result<Selector, MinerError> {
    let mut chars: Vec<char> = sig.canonical().chars().collect();
    for &(position, twin) in substitutions {
        let Some(&original) = chars.get(position) else {
            return Err(MinerError::InvalidSubstitution(format!(
                "position {position} is outside {:?}",
                sig.canonical()
            )));
        };
        let original = table.partner_of(original).unwrap_or(original);
        if !table.twins_of(original).contains(&twin) {
            return Err(MinerError::InvalidSubstitution(format!(
                "U+{:04X} is not a twin of {original:?} at position {position}",
                twin as u32
            )));
        }
        chars[position] = twin;
    }
    Ok(Selector::of_text(&chars.into_iter().collect::<String>()))
}
