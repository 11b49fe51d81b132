use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{
    detect_signatures, evaluate_cnf, preprocess, AttackId, AttackReport, FileFinding, ScanError, SourceUnit,
    TriageLabel,
};
use crate::homograph::{scan_text, ConfusablesTable};

/// Raw contents of one input, before preprocessing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawInput {
    pub origin: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub origin: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub confusables: ConfusablesTable,
    /// Human triage labels by origin.
    pub annotations: HashMap<String, TriageLabel>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { confusables: ConfusablesTable::builtin(), annotations: HashMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusScan {
    /// (hex dedup key, report), ordered by key.
    pub units: Vec<(String, AttackReport)>,
    pub skipped: Vec<Skipped>,
    /// Inputs dropped because an identical unit was already present.
    pub duplicates: usize,
}

impl CorpusScan {
    pub fn reports(&self) -> impl Iterator<Item = &AttackReport> {
        self.units.iter().map(|(_, r)| r)
    }

    /// Units matching at least one attack.
    pub fn flagged(&self) -> usize {
        self.reports().filter(|r| !r.matches.is_empty()).count()
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        summarize(self.reports())
    }
}

/// One row per attack: candidates flagged and how triage labelled them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SummaryRow {
    pub attack_id: AttackId,
    pub candidates: usize,
    pub labeled_non_exploitable: usize,
    pub labeled_syntactic: usize,
    pub labeled_semantic: usize,
}

pub fn summarize<'a>(reports: impl IntoIterator<Item = &'a AttackReport>) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = AttackId::all()
        .map(|attack_id| SummaryRow {
            attack_id,
            candidates: 0,
            labeled_non_exploitable: 0,
            labeled_syntactic: 0,
            labeled_semantic: 0,
        })
        .collect();
    for report in reports {
        for m in &report.matches {
            let row = &mut rows[m.attack_id.number() as usize - 1];
            row.candidates += 1;
            match report.triage_label {
                Some(TriageLabel::NonExploitable) => row.labeled_non_exploitable += 1,
                Some(TriageLabel::SyntacticallyMatching) => row.labeled_syntactic += 1,
                Some(TriageLabel::SemanticallyExploitable) => row.labeled_semantic += 1,
                None => {}
            }
        }
    }
    rows
}

pub fn summary_tsv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("attack_id\tcandidates\tlabeled_non_exploitable\tlabeled_syntactic\tlabeled_semantic\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.attack_id, r.candidates, r.labeled_non_exploitable, r.labeled_syntactic, r.labeled_semantic
        );
    }
    out
}

/// Parses `origin<TAB>label` lines; blank lines and `#` comments are ignored.
pub fn parse_annotations(text: &str) -> Result<HashMap<String, TriageLabel>, ScanError> {
    let mut labels = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (origin, label) = line
            .split_once('\t')
            .ok_or_else(|| ScanError::Annotation { line: n + 1, reason: "expected origin<TAB>label".into() })?;
        let label = label.parse().map_err(|reason| ScanError::Annotation { line: n + 1, reason })?;
        labels.insert(origin.trim().to_owned(), label);
    }
    Ok(labels)
}

/// Reads `.sol` and `.json` files under the given paths (directories are
/// walked recursively in name order; files named explicitly are always
/// read). Unreadable entries are reported as skipped.
pub fn collect_inputs(paths: &[PathBuf]) -> (Vec<RawInput>, Vec<Skipped>) {
    let mut inputs = Vec::new();
    let mut skipped = Vec::new();
    for path in paths {
        if path.is_dir() {
            walk(path, &mut inputs, &mut skipped);
        } else {
            read_one(path, &mut inputs, &mut skipped);
        }
    }
    (inputs, skipped)
}

fn walk(dir: &Path, inputs: &mut Vec<RawInput>, skipped: &mut Vec<Skipped>) {
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) => {
            skipped.push(Skipped { origin: dir.display().to_string(), reason: e.to_string() });
            return;
        }
    };
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for path in paths {
        if path.is_dir() {
            walk(&path, inputs, skipped);
        } else if matches!(path.extension().and_then(|e| e.to_str()), Some("sol" | "json")) {
            read_one(&path, inputs, skipped);
        }
    }
}

fn read_one(path: &Path, inputs: &mut Vec<RawInput>, skipped: &mut Vec<Skipped>) {
    let origin = origin_of(path);
    match fs::read(path) {
        Ok(bytes) => match String::from_utf8(bytes) {
            Ok(content) => inputs.push(RawInput { origin, content }),
            Err(_) => skipped.push(Skipped { origin, reason: "not UTF-8".into() }),
        },
        Err(e) => skipped.push(Skipped { origin, reason: e.to_string() }),
    }
}

/// Bundles saved as `<address>.json` are identified by the address.
fn origin_of(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let is_address = stem.len() == 42 && stem.starts_with("0x") && stem[2..].bytes().all(|b| b.is_ascii_hexdigit());
    if is_address {
        stem.to_ascii_lowercase()
    } else {
        path.display().to_string()
    }
}

/// Signatures, attack matches and homograph findings for one unit.
pub fn scan_unit(unit: &SourceUnit, confusables: &ConfusablesTable) -> AttackReport {
    let hits = detect_signatures(unit);
    let matches = evaluate_cnf(hits.iter().map(|h| h.signature_id));
    let homograph_findings = unit
        .files
        .iter()
        .flat_map(|f| {
            scan_text(&f.text, confusables).into_iter().map(|finding| FileFinding { file: f.name.clone(), finding })
        })
        .collect();
    AttackReport { origin: unit.origin.clone(), hits, matches, homograph_findings, triage_label: None }
}

/// Preprocesses, deduplicates and scans every input on the rayon pool.
///
/// When several inputs reduce to the same unit, the one with the smallest
/// origin is kept so the result does not depend on input order.
pub fn scan_corpus(inputs: Vec<RawInput>, options: &ScanOptions) -> CorpusScan {
    let prepared: Vec<Result<SourceUnit, Skipped>> = inputs
        .par_iter()
        .map(|input| {
            preprocess(&input.origin, &input.content)
                .map_err(|e| Skipped { origin: input.origin.clone(), reason: e.to_string() })
        })
        .collect();

    let mut skipped = Vec::new();
    let mut unique: BTreeMap<[u8; 32], SourceUnit> = BTreeMap::new();
    let mut all_origins: BTreeMap<[u8; 32], Vec<String>> = BTreeMap::new();
    let mut duplicates = 0;
    for item in prepared {
        match item {
            Ok(unit) => {
                all_origins.entry(unit.dedup_key).or_default().push(unit.origin.clone());
                match unique.get(&unit.dedup_key) {
                    Some(kept) => {
                        duplicates += 1;
                        if unit.origin < kept.origin {
                            unique.insert(unit.dedup_key, unit);
                        }
                    }
                    None => {
                        unique.insert(unit.dedup_key, unit);
                    }
                }
            }
            Err(skip) => skipped.push(skip),
        }
    }
    skipped.sort_by(|a, b| a.origin.cmp(&b.origin));

    let units: Vec<SourceUnit> = unique.into_values().collect();
    let mut reports: Vec<AttackReport> = units.par_iter().map(|u| scan_unit(u, &options.confusables)).collect();
    for (unit, report) in units.iter().zip(&mut reports) {
        // a label given for any duplicate of the unit applies to it
        report.triage_label = options
            .annotations
            .get(&unit.origin)
            .copied()
            .or_else(|| all_origins[&unit.dedup_key].iter().find_map(|o| options.annotations.get(o).copied()));
    }
    let reports = units.iter().map(SourceUnit::dedup_hex).zip(reports).collect();
    CorpusScan { units: reports, skipped, duplicates }
}

/// Writes `reports/<dedup key>.json`, `summary.tsv` and `skipped.tsv`.
pub fn write_outputs(dir: &Path, scan: &CorpusScan) -> Result<(), ScanError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ScanError::Io { path, source }
    };
    let reports_dir = dir.join("reports");
    fs::create_dir_all(&reports_dir).map_err(io(&reports_dir))?;
    for (key, report) in &scan.units {
        let path = reports_dir.join(format!("{key}.json"));
        let mut json = serde_json::to_string_pretty(report).expect("reports serialize");
        json.push('\n');
        fs::write(&path, json).map_err(io(&path))?;
    }
    let summary = dir.join("summary.tsv");
    fs::write(&summary, summary_tsv(&scan.summary())).map_err(io(&summary))?;
    let mut skipped = String::from("origin\treason\n");
    for s in &scan.skipped {
        let _ = writeln!(skipped, "{}\t{}", s.origin, s.reason.replace(['\t', '\n'], " "));
    }
    let path = dir.join("skipped.tsv");
    fs::write(&path, skipped).map_err(io(&path))?;
    Ok(())
}

/// Reads back the reports written by [`write_outputs`], in key order.
pub fn load_reports(dir: &Path) -> Result<Vec<AttackReport>, ScanError> {
    let reports_dir = if dir.join("reports").is_dir() { dir.join("reports") } else { dir.to_path_buf() };
    let entries = fs::read_dir(&reports_dir).map_err(|source| ScanError::Io { path: reports_dir.clone(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = fs::read_to_string(&path).map_err(|source| ScanError::Io { path: path.clone(), source })?;
            serde_json::from_str(&text).map_err(|e| ScanError::Report { path, reason: e.to_string() })
        })
        .collect()
}
