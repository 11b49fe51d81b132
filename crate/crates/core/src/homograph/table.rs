use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use super::HomographError;

/// Latin letters and their Cyrillic look-alikes. Always present, so the
/// well-known substitutions resolve without an external data file.
const BUILTIN: &[(char, char)] = &[
    ('a', '\u{0430}'),
    ('c', '\u{0441}'),
    ('e', '\u{0435}'),
    ('o', '\u{043E}'),
    ('p', '\u{0440}'),
    ('x', '\u{0445}'),
    ('y', '\u{0443}'),
    ('A', '\u{0410}'),
    ('B', '\u{0412}'),
    ('C', '\u{0421}'),
    ('E', '\u{0415}'),
    ('H', '\u{041D}'),
    ('K', '\u{041A}'),
    ('M', '\u{041C}'),
    ('O', '\u{041E}'),
    ('P', '\u{0420}'),
    ('T', '\u{0422}'),
    ('X', '\u{0425}'),
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConfusableEntry {
    pub ascii: char,
    pub twin: char,
    pub script: String,
}

/// Bidirectional ASCII <-> look-alike map. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct ConfusablesTable {
    entries: BTreeSet<ConfusableEntry>,
    twins: BTreeMap<char, Vec<char>>,
    partners: BTreeMap<char, char>,
}

impl ConfusablesTable {
    pub fn builtin() -> Self {
        Self::from_entries(BUILTIN.iter().map(|&(ascii, twin)| ConfusableEntry {
            ascii,
            twin,
            script: "Cyrillic".to_owned(),
        }))
        .expect("builtin entries are well formed")
    }

    /// A table holding exactly `entries` (no built-in set).
    pub fn from_entries(entries: impl IntoIterator<Item = ConfusableEntry>) -> Result<Self, HomographError> {
        let mut table = ConfusablesTable::default();
        for entry in entries {
            table.insert(entry)?;
        }
        Ok(table)
    }

    fn insert(&mut self, entry: ConfusableEntry) -> Result<(), HomographError> {
        if !(entry.ascii.is_ascii_graphic()) {
            return Err(HomographError::InvalidEntry(format!("{:?} is not printable ASCII", entry.ascii)));
        }
        if entry.twin.is_ascii() {
            return Err(HomographError::InvalidEntry(format!("twin {:?} must be non-ASCII", entry.twin)));
        }
        if let Some(&existing) = self.partners.get(&entry.twin) {
            if existing != entry.ascii {
                return Err(HomographError::InvalidEntry(format!(
                    "U+{:04X} already maps to {existing:?}",
                    entry.twin as u32
                )));
            }
        }
        self.partners.insert(entry.twin, entry.ascii);
        let twins = self.twins.entry(entry.ascii).or_default();
        if let Err(pos) = twins.binary_search(&entry.twin) {
            twins.insert(pos, entry.twin);
        }
        self.entries.insert(entry);
        Ok(())
    }

    /// Merges rows parsed from `text` on top of the current table.
    pub fn merge_text(&mut self, text: &str) -> Result<(), HomographError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let row = raw.split('#').next().unwrap_or("").trim_end_matches(['\r', ' ']);
            if row.trim().is_empty() {
                continue;
            }
            let entry = parse_row(row).map_err(|reason| HomographError::Parse { line, row: raw.to_owned(), reason })?;
            self.insert(entry).map_err(|e| HomographError::Parse {
                line,
                row: raw.to_owned(),
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = &ConfusableEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Look-alikes of an ASCII character, in codepoint order.
    pub fn twins_of(&self, ascii: char) -> &[char] {
        self.twins.get(&ascii).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The ASCII character a twin imitates.
    pub fn partner_of(&self, twin: char) -> Option<char> {
        self.partners.get(&twin).copied()
    }

    /// Maps every known twin back to its ASCII partner.
    pub fn ascii_fold(&self, text: &str) -> String {
        text.chars().map(|c| self.partner_of(c).unwrap_or(c)).collect()
    }
}

fn parse_row(row: &str) -> Result<ConfusableEntry, String> {
    let cols: Vec<&str> = row.split('\t').map(str::trim).collect();
    if cols.len() != 3 {
        return Err(format!("expected 3 tab-separated columns, found {}", cols.len()));
    }
    let mut ascii_chars = cols[0].chars();
    let ascii = match (ascii_chars.next(), ascii_chars.next()) {
        (Some(c), None) => c,
        _ => return Err(format!("ascii column must be one character, got {:?}", cols[0])),
    };
    let hex = cols[1]
        .strip_prefix("U+")
        .or_else(|| cols[1].strip_prefix("u+"))
        .ok_or_else(|| format!("codepoint column must look like U+XXXX, got {:?}", cols[1]))?;
    let value = u32::from_str_radix(hex, 16).map_err(|_| format!("bad codepoint {:?}", cols[1]))?;
    let twin = char::from_u32(value).ok_or_else(|| format!("U+{value:04X} is not a scalar value"))?;
    if cols[2].is_empty() {
        return Err("empty script column".to_owned());
    }
    Ok(ConfusableEntry { ascii, twin, script: cols[2].to_owned() })
}

/// Built-in set merged with the rows of the file at `path`.
pub fn load_confusables(path: impl AsRef<Path>) -> Result<ConfusablesTable, HomographError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| HomographError::Io { path: path.display().to_string(), source })?;
    let mut table = ConfusablesTable::builtin();
    table.merge_text(&text)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_covers_figure_pairs() {
        let table = ConfusablesTable::builtin();
        for (ascii, twin) in
            [('o', '\u{043E}'), ('T', '\u{0422}'), ('a', '\u{0430}'), ('c', '\u{0441}'), ('e', '\u{0435}')]
        {
            assert!(table.twins_of(ascii).contains(&twin));
            assert_eq!(table.partner_of(twin), Some(ascii));
        }
        assert!(table.twins_of('f').is_empty());
    }

    #[test]
    fn empty_file_yields_builtin() {
        let mut table = ConfusablesTable::builtin();
        table.merge_text("").unwrap();
        table.merge_text("# only a comment\n\n").unwrap();
        assert_eq!(table.len(), BUILTIN.len());
    }

    #[test]
    fn rows_merge_and_report_line_numbers() {
        let mut table = ConfusablesTable::default();
        table.merge_text("# header\no\tU+043E\tCyrillic\no\tU+03BF\tGreek  # omicron\n").unwrap();
        assert_eq!(table.twins_of('o'), &['\u{03BF}', '\u{043E}']);

        let err = table.merge_text("a\tU+0430\tCyrillic\nbad row here\n").unwrap_err();
        match err {
            HomographError::Parse { line, row, .. } => {
                assert_eq!(line, 2);
                assert_eq!(row, "bad row here");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(table.merge_text("o\tU+006F\tLatin\n").is_err());
        assert!(table.merge_text("oo\tU+043E\tCyrillic\n").is_err());
        assert!(table.merge_text("o\tU+ZZZZ\tCyrillic\n").is_err());
    }

    #[test]
    fn fold_maps_twins_home() {
        let table = ConfusablesTable::builtin();
        assert_eq!(table.ascii_fold("f\u{043E}\u{043E}()"), "foo()");
        assert_eq!(table.ascii_fold("B\u{0422}"), "BT");
    }
}
