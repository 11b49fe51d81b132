use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::{info, warn};
use lure_client::{ClientError, ExplorerClient};
use lure_core::crypto::{
    derive_address, eip55_encode, eip55_validate, normalize_signature, predict_contract_address, Address, Eip55Address,
    Eip55Class, Nonce, PrivateKey, Selector,
};
use lure_core::homograph::{scan_bytes, scan_text, HomographFinding};
use lure_core::miners::{
    mine_lowercase_account_parallel, mine_selector_collision, mine_similar_pair, CollisionSearchSpec, Mutation,
};
use lure_core::scanner::{
    auditor_checks, collect_inputs, load_reports, parse_annotations, preprocess, scan_corpus, summarize, summary_tsv,
    write_outputs, Advisory, AttackId, ScanOptions, SignatureId, Skipped, SummaryRow, TriageLabel, TxCounter,
};
use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use crate::{CollisionArgs, Command, Failure, Outcome, Settings};

pub fn execute(command: &Command, s: &Settings) -> Result<Outcome, Failure> {
    match command {
        Command::Eip55 { address } => eip55(address),
        Command::Derive { private_key } => derive(private_key),
        Command::Selector { signature, raw } => selector(signature, *raw, s),
        Command::Predict { deployer, nonce } => predict(deployer, *nonce),
        Command::MineLowercase { max_attempts } => mine_lowercase(*max_attempts, s),
        Command::MinePair { budget_secs } => mine_pair(*budget_secs, s),
        Command::MineCollision(args) => mine_collision(args, s),
        Command::HomographScan { path, fail_on_finding } => homograph_scan(path, *fail_on_finding, s),
        Command::Scan { paths, output, annotations, fail_on_match } => {
            scan(paths, output.as_ref().or(s.output.as_ref()), annotations.as_deref(), *fail_on_match, s)
        }
        Command::Audit { path, online, fail_on_advisory } => audit(path, *online, *fail_on_advisory, s),
        Command::Fetch { addresses, output, tx_count } => {
            fetch(addresses, output.as_ref().or(s.output.as_ref()), *tx_count, s)
        }
        Command::Report { dir, annotations } => report(dir, annotations.as_deref()),
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn failed(e: impl std::fmt::Display) -> Failure {
    Failure::Failed(e.to_string())
}

fn parse_address(text: &str) -> Result<Address, Failure> {
    text.parse().map_err(|e| usage(format!("{text:?} is not an address: {e}")))
}

fn lowercase_warning(addr: &Eip55Address) -> Option<String> {
    addr.is_all_lowercase().then(|| {
        format!(
            "R4: the EIP-55 form of {addr} has no uppercase letter, so it looks exactly like \
             unchecksummed text and a mistyped copy would not be caught; do not use this account"
        )
    })
}

fn warning_lines(out: &mut String, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(out, "warning: {w}");
    }
}

#[derive(Serialize)]
struct Eip55Result {
    input: String,
    classification: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    case_insensitive_match: Option<bool>,
    checksummed: String,
    warnings: Vec<String>,
}

fn eip55(input: &str) -> Result<Outcome, Failure> {
    let class = eip55_validate(input);
    if class == Eip55Class::Malformed {
        return Err(usage(format!("{input:?} is not 0x followed by 40 hex digits")));
    }
    let checksummed = eip55_encode(&parse_address(input)?);
    let mut warnings: Vec<String> = lowercase_warning(&checksummed).into_iter().collect();
    let case_insensitive_match = match class {
        Eip55Class::InvalidChecksum { case_insensitive_match } => {
            warnings.push(if case_insensitive_match {
                "the text carries no checksum; compare it digit by digit".to_owned()
            } else {
                "capitalization contradicts the checksum: mistyped or a look-alike".to_owned()
            });
            Some(case_insensitive_match)
        }
        Eip55Class::AllUppercase => {
            warnings.push("all-uppercase text carries no checksum".to_owned());
            None
        }
        _ => None,
    };

    let mut text = format!("{}\t{class}\nchecksummed\t{checksummed}\n", input);
    warning_lines(&mut text, &warnings);
    let result = Eip55Result {
        input: input.to_owned(),
        classification: class.as_str(),
        case_insensitive_match,
        checksummed: checksummed.to_string(),
        warnings,
    };
    Ok(Outcome::new("eip55", result, text))
}

#[derive(Serialize)]
struct DeriveResult {
    address: String,
    classification: &'static str,
    warnings: Vec<String>,
}

fn derive(key: &str) -> Result<Outcome, Failure> {
    let key: PrivateKey = key.parse().map_err(|e| usage(format!("private key: {e}")))?;
    let address = derive_address(&key).to_eip55();
    let class = eip55_validate(address.as_str());
    let warnings: Vec<String> = lowercase_warning(&address).into_iter().collect();
    let mut text = format!("{address}\t{class}\n");
    warning_lines(&mut text, &warnings);
    let result = DeriveResult { address: address.to_string(), classification: class.as_str(), warnings };
    Ok(Outcome::new("derive", result, text))
}

#[derive(Serialize)]
struct Lookalike {
    header: String,
    selector: Selector,
}

#[derive(Serialize)]
struct SelectorResult {
    header: String,
    selector: Selector,
    non_ascii: Vec<HomographFinding>,
    /// The ASCII header this one imitates, when it contains known look-alikes.
    #[serde(skip_serializing_if = "Option::is_none")]
    imitates: Option<Lookalike>,
}

fn selector(input: &str, raw: bool, s: &Settings) -> Result<Outcome, Failure> {
    let header = if raw { input.to_owned() } else { normalize_signature(input).map_err(usage)?.canonical() };
    let selector = Selector::of_text(&header);
    let non_ascii = scan_text(&header, &s.confusables);
    let folded = s.confusables.ascii_fold(&header);
    let imitates = (folded != header).then(|| Lookalike { selector: Selector::of_text(&folded), header: folded });

    let mut text = format!("{selector}\t{header}\n");
    for f in &non_ascii {
        let _ = writeln!(text, "warning: U+{:04X} at column {} is not ASCII", f.codepoint as u32, f.column);
    }
    if let Some(l) = &imitates {
        let _ = writeln!(text, "warning: looks like {} whose selector is {}", l.header, l.selector);
    }
    Ok(Outcome::new("selector", SelectorResult { header, selector, non_ascii, imitates }, text))
}

#[derive(Serialize)]
struct PredictResult {
    deployer: String,
    nonce: u64,
    address: String,
}

fn predict(deployer: &str, nonce: u64) -> Result<Outcome, Failure> {
    let deployer = parse_address(deployer)?;
    let address = predict_contract_address(&deployer, Nonce(nonce)).to_eip55();
    let text = format!("{address}\n");
    let result = PredictResult { deployer: deployer.to_eip55().to_string(), nonce, address: address.to_string() };
    Ok(Outcome::new("predict", result, text))
}

// Elapsed times go to the log, never into the output, so reruns with the
// same seed print identical bytes.

#[derive(Serialize)]
struct LowercaseResult {
    private_key: String,
    address: String,
    attempts: u64,
    seed: String,
    workers: usize,
}

fn mine_lowercase(max_attempts: u64, s: &Settings) -> Result<Outcome, Failure> {
    let mined = mine_lowercase_account_parallel(&s.seed, max_attempts, s.workers).map_err(failed)?;
    mined.verify().map_err(failed)?;
    info!("found after {} attempts in {} ms", mined.attempts, mined.elapsed_ms);
    let address = mined.address.to_eip55();
    let text = format!("{}\t{address}\t{} attempts\n", mined.key.to_hex(), mined.attempts);
    let result = LowercaseResult {
        private_key: mined.key.to_hex(),
        address: address.to_string(),
        attempts: mined.attempts,
        seed: s.seed.to_string(),
        workers: s.workers,
    };
    Ok(Outcome::new("mine-lowercase", result, text))
}

#[derive(Serialize)]
struct PairResult {
    decoy: String,
    real: String,
    deployer: String,
    deployer_key: String,
    nonce: u64,
    mutation: Mutation,
    seed: String,
}

fn mine_pair(budget_secs: u64, s: &Settings) -> Result<Outcome, Failure> {
    if s.workers > 1 {
        warn!("the pair search is sequential; --workers is ignored");
    }
    let pair = mine_similar_pair(&s.seed, Duration::from_secs(budget_secs)).map_err(failed)?;
    pair.verify().map_err(failed)?;
    let deployer = derive_address(&pair.deployer_key).to_eip55();
    let (decoy, real) = (pair.decoy.to_eip55(), pair.real.to_eip55());
    let text = format!(
        "decoy\t{decoy}\nreal\t{real}\ndeployer\t{deployer}\ndeployer_key\t{}\nnonce\t{}\n",
        pair.deployer_key.to_hex(),
        pair.nonce.0
    );
    let result = PairResult {
        decoy: decoy.to_string(),
        real: real.to_string(),
        deployer: deployer.to_string(),
        deployer_key: pair.deployer_key.to_hex(),
        nonce: pair.nonce.0,
        mutation: pair.mutation,
        seed: s.seed.to_string(),
    };
    Ok(Outcome::new("mine-pair", result, text))
}

#[derive(Serialize)]
struct CollisionResult {
    target: Selector,
    signature: String,
    selector: Selector,
    bits: u32,
    index: u64,
    trials: u64,
}

fn mine_collision(args: &CollisionArgs, s: &Settings) -> Result<Outcome, Failure> {
    let (target, target_sig) = match args.target.parse::<Selector>() {
        Ok(selector) => (selector, None),
        Err(_) => {
            let sig = normalize_signature(&args.target).map_err(usage)?;
            (sig.selector(), Some(sig))
        }
    };
    let arg_types = match (&args.args, &target_sig) {
        (Some(list), _) => normalize_signature(&format!("x({list})")).map_err(usage)?.arg_types().to_vec(),
        (None, Some(sig)) => sig.arg_types().to_vec(),
        (None, None) => Vec::new(),
    };
    let mut spec = CollisionSearchSpec::new(target, args.prefix.clone(), &args.charset);
    spec.arg_types = arg_types;
    spec.truncate_bits = args.bits;
    spec.start_index = args.start_index;
    spec.max_trials = args.max_trials;
    spec.workers = s.workers;
    spec.excluded = target_sig.iter().map(|sig| sig.name().to_owned()).collect();
    spec.validate().map_err(usage)?;

    let found = mine_selector_collision(&spec, Duration::from_secs(args.budget_secs)).map_err(failed)?;
    info!("{} trials in {} ms", found.trials, found.elapsed_ms);
    let text = format!("{}\t{}\t{} trials\n", found.selector, found.signature, found.trials);
    let result = CollisionResult {
        target,
        signature: found.signature,
        selector: found.selector,
        bits: args.bits,
        index: found.index,
        trials: found.trials,
    };
    Ok(Outcome::new("mine-collision", result, text))
}

#[derive(Serialize)]
struct FileFindings {
    file: String,
    findings: Vec<HomographFinding>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct HomographResult {
    files_scanned: usize,
    files: Vec<FileFindings>,
}

/// Files named directly, or `.sol`/`.json` files under a directory.
fn source_files(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !path.exists() {
        return Err(usage(format!("{} does not exist", path.display())));
    }
    if path.is_file() {
        return Ok(vec![path.to_owned()]);
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(failed)?;
        let wanted = matches!(entry.path().extension().and_then(|e| e.to_str()), Some("sol" | "json"));
        if entry.file_type().is_file() && wanted {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

fn homograph_scan(path: &Path, gate: bool, s: &Settings) -> Result<Outcome, Failure> {
    let paths = source_files(path)?;
    let mut files = Vec::new();
    let mut text = String::new();
    for p in &paths {
        let name = p.display().to_string();
        let bytes = fs::read(p).map_err(|e| failed(format!("{name}: {e}")))?;
        match scan_bytes(&bytes, &s.confusables) {
            Ok(findings) if findings.is_empty() => {}
            Ok(findings) => {
                for f in &findings {
                    let look = f.lookalike.map(|c| format!(" looks like {c:?}")).unwrap_or_default();
                    let kind = serde_json::to_value(f.kind).expect("kinds serialize");
                    let _ = writeln!(
                        text,
                        "{name}:{}:{}\tU+{:04X}\t{}{look}\t{}",
                        f.line,
                        f.column,
                        f.codepoint as u32,
                        kind.as_str().unwrap_or_default(),
                        f.context
                    );
                }
                files.push(FileFindings { file: name, findings, error: None });
            }
            Err(e) => {
                let _ = writeln!(text, "{name}\t{e}");
                files.push(FileFindings { file: name, findings: Vec::new(), error: Some(e.to_string()) });
            }
        }
    }
    let total: usize = files.iter().map(|f| f.findings.len()).sum();
    let _ = writeln!(text, "{total} findings in {} of {} files", files.len(), paths.len());
    let found = !files.is_empty();
    Ok(Outcome::new("homograph-scan", HomographResult { files_scanned: paths.len(), files }, text)
        .findings(found, gate))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(failed)
}

fn read_annotations(path: Option<&Path>) -> Result<HashMap<String, TriageLabel>, Failure> {
    let Some(path) = path else {
        return Ok(HashMap::new());
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_annotations(&text).map_err(usage)
}

#[derive(Serialize)]
struct UnitLine {
    origin: String,
    dedup_key: String,
    matches: Vec<AttackId>,
    signatures: Vec<SignatureId>,
    homograph_findings: usize,
    triage_label: Option<TriageLabel>,
}

#[derive(Serialize)]
struct FilterRate {
    flagged: usize,
    total: usize,
    /// `flagged / total`; 0 for an empty corpus.
    rate: f64,
}

impl FilterRate {
    fn new(flagged: usize, total: usize) -> Self {
        let rate = if total == 0 { 0.0 } else { flagged as f64 / total as f64 };
        FilterRate { flagged, total, rate }
    }

    fn line(&self) -> String {
        format!("flagged {} of {} units ({:.1}%)", self.flagged, self.total, self.rate * 100.0)
    }
}

#[derive(Serialize)]
struct ScanResult {
    units: Vec<UnitLine>,
    skipped: Vec<Skipped>,
    duplicates: usize,
    summary: Vec<SummaryRow>,
    filter: FilterRate,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
}

fn joined<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn sorted<T: Ord>(mut items: Vec<T>) -> Vec<T> {
    items.sort();
    items
}

fn scan(
    paths: &[PathBuf],
    output: Option<&PathBuf>,
    annotations: Option<&Path>,
    gate: bool,
    s: &Settings,
) -> Result<Outcome, Failure> {
    if let Some(p) = paths.iter().find(|p| !p.exists()) {
        return Err(usage(format!("{} does not exist", p.display())));
    }
    let options = ScanOptions { confusables: s.confusables.clone(), annotations: read_annotations(annotations)? };
    let (inputs, unreadable) = collect_inputs(paths);
    let mut corpus = pool(s.workers)?.install(|| scan_corpus(inputs, &options));
    corpus.skipped.extend(unreadable);
    corpus.skipped.sort_by(|a, b| a.origin.cmp(&b.origin));
    if let Some(dir) = output {
        write_outputs(dir, &corpus).map_err(failed)?;
    }

    let filter = FilterRate::new(corpus.flagged(), corpus.units.len());
    let mut text = String::new();
    for (_, r) in corpus.units.iter().filter(|(_, r)| !r.matches.is_empty()) {
        let _ = writeln!(text, "{}\t{}\t{}", joined(&r.matched()), r.origin, joined(&sorted(r.fired())));
    }
    for skip in &corpus.skipped {
        let _ = writeln!(text, "skipped\t{}\t{}", skip.origin, skip.reason);
    }
    let _ = writeln!(text, "{}; {} duplicates, {} skipped", filter.line(), corpus.duplicates, corpus.skipped.len());
    if let Some(dir) = output {
        let _ = writeln!(text, "reports written to {}", dir.display());
    }

    let result = ScanResult {
        units: corpus
            .units
            .iter()
            .map(|(key, r)| UnitLine {
                origin: r.origin.clone(),
                dedup_key: key.clone(),
                matches: r.matched(),
                signatures: sorted(r.fired()),
                homograph_findings: r.homograph_findings.len(),
                triage_label: r.triage_label,
            })
            .collect(),
        summary: corpus.summary(),
        skipped: corpus.skipped,
        duplicates: corpus.duplicates,
        output: output.map(|d| d.display().to_string()),
        filter,
    };
    let flagged = result.filter.flagged > 0;
    Ok(Outcome::new("scan", result, text).findings(flagged, gate))
}

#[derive(Serialize)]
struct AuditUnit {
    origin: String,
    advisories: Vec<Advisory>,
}

#[derive(Serialize)]
struct AuditResult {
    units: Vec<AuditUnit>,
    skipped: Vec<Skipped>,
    online: bool,
}

fn audit(path: &Path, online: bool, gate: bool, s: &Settings) -> Result<Outcome, Failure> {
    if !path.exists() {
        return Err(usage(format!("{} does not exist", path.display())));
    }
    let client = if online { Some(explorer(s)?) } else { None };
    let counter = client.as_ref().map(|c| c as &dyn TxCounter);
    let (inputs, mut skipped) = collect_inputs(&[path.to_owned()]);
    let mut units = Vec::new();
    for input in inputs {
        match preprocess(&input.origin, &input.content) {
            Ok(unit) => units.push(AuditUnit { advisories: auditor_checks(&unit, counter), origin: input.origin }),
            Err(e) => skipped.push(Skipped { origin: input.origin, reason: e.to_string() }),
        }
    }

    let mut text = String::new();
    for u in &units {
        for a in &u.advisories {
            let kind = serde_json::to_value(a.kind).expect("kinds serialize");
            let _ = writeln!(
                text,
                "{}:{}:{}\t{}\t{}\t{}",
                u.origin,
                a.location.file,
                a.location.line,
                a.recommendation,
                kind.as_str().unwrap_or_default(),
                a.message
            );
        }
    }
    for skip in &skipped {
        let _ = writeln!(text, "skipped\t{}\t{}", skip.origin, skip.reason);
    }
    let count: usize = units.iter().map(|u| u.advisories.len()).sum();
    let _ = writeln!(text, "{count} advisories in {} units", units.len());
    Ok(Outcome::new("audit", AuditResult { units, skipped, online }, text).findings(count > 0, gate))
}

fn explorer(s: &Settings) -> Result<ExplorerClient, Failure> {
    ExplorerClient::new(s.network.clone(), s.cache_dir.clone()).map_err(usage)
}

#[derive(Serialize)]
struct Fetched {
    address: String,
    /// `fetched`, `not_verified`, `transport_error` or `error`.
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    bytes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    saved_to: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outgoing_tx_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

fn status_of(e: &ClientError) -> &'static str {
    match e {
        ClientError::NotVerified { .. } => "not_verified",
        e if e.is_transport() => "transport_error",
        _ => "error",
    }
}

fn fetch(addresses: &[String], output: Option<&PathBuf>, tx_count: bool, s: &Settings) -> Result<Outcome, Failure> {
    let addresses: Vec<Address> = addresses.iter().map(|a| parse_address(a)).collect::<Result<_, _>>()?;
    let client = explorer(s)?;
    if let Some(dir) = output {
        fs::create_dir_all(dir).map_err(|e| failed(format!("{}: {e}", dir.display())))?;
    }

    let one = |address: &Address| -> Fetched {
        let name = format!("0x{}", address.to_lower_hex());
        let mut item = Fetched {
            address: name.clone(),
            status: "fetched",
            bytes: None,
            saved_to: None,
            outgoing_tx_count: None,
            message: None,
        };
        match client.fetch_source(address) {
            Ok(body) => {
                item.bytes = Some(body.len());
                if let Some(dir) = output {
                    let path = dir.join(format!("{name}.json"));
                    match fs::write(&path, &body) {
                        Ok(()) => item.saved_to = Some(path.display().to_string()),
                        Err(e) => {
                            item.status = "error";
                            item.message = Some(format!("{}: {e}", path.display()));
                        }
                    }
                }
            }
            Err(e) => {
                item.status = status_of(&e);
                item.message = Some(e.to_string());
            }
        }
        if tx_count && item.status != "transport_error" {
            match client.outgoing_tx_count(address) {
                Ok(n) => item.outgoing_tx_count = Some(n),
                Err(e) => {
                    if e.is_transport() {
                        item.status = "transport_error";
                    }
                    item.message = Some(e.to_string());
                }
            }
        }
        item
    };
    let items: Vec<Fetched> = pool(s.workers)?.install(|| addresses.par_iter().map(one).collect());

    let mut text = String::new();
    for item in &items {
        let mut line = format!("{}\t{}", item.address, item.status);
        if let Some(n) = item.outgoing_tx_count {
            let _ = write!(line, "\t{n} outgoing");
        }
        if let Some(m) = item.saved_to.as_ref().or(item.message.as_ref()) {
            let _ = write!(line, "\t{m}");
        }
        let _ = writeln!(text, "{line}");
    }
    let count = |status| items.iter().filter(|i| i.status == status).count();
    let failure = match (count("transport_error"), count("error")) {
        (0, 0) => None,
        (0, n) => Some(Failure::Failed(format!("{n} addresses failed"))),
        (n, _) => Some(Failure::Transport(format!("{n} addresses could not reach the explorer"))),
    };
    Ok(Outcome::new("fetch", items, text).failed(failure))
}

#[derive(Serialize)]
struct ReportResult {
    summary: Vec<SummaryRow>,
    filter: FilterRate,
    flagged: Vec<UnitMatches>,
}

#[derive(Serialize)]
struct UnitMatches {
    origin: String,
    matches: Vec<AttackId>,
    triage_label: Option<TriageLabel>,
}

fn report(dir: &Path, annotations: Option<&Path>) -> Result<Outcome, Failure> {
    let labels = read_annotations(annotations)?;
    let mut reports = load_reports(dir).map_err(failed)?;
    for r in &mut reports {
        if let Some(label) = labels.get(&r.origin) {
            r.triage_label = Some(*label);
        }
    }
    let summary = summarize(&reports);
    let filter = FilterRate::new(reports.iter().filter(|r| !r.matches.is_empty()).count(), reports.len());
    let text = format!("{}{}\n", summary_tsv(&summary), filter.line());
    let flagged = reports
        .iter()
        .filter(|r| !r.matches.is_empty())
        .map(|r| UnitMatches { origin: r.origin.clone(), matches: r.matched(), triage_label: r.triage_label })
        .collect();
    Ok(Outcome::new("report", ReportResult { summary, filter, flagged }, text))
}
