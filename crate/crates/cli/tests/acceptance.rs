//! Acceptance gate: prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails. Runs offline; the explorer is a local mock.

#[path = "../../client/tests/support/mock.rs"]
mod mock;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use lure_client::{ClientError, ExplorerClient, NetworkConfig};
use lure_core::crypto::{
    derive_address, eip55_encode, eip55_validate, normalize_signature, predict_contract_address, Address, Eip55Class,
    Nonce, PrivateKey, Selector,
};
use lure_core::homograph::ConfusablesTable;
use lure_core::miners::{
    homograph_twin_selector, mine_lowercase_account, mine_selector_collision, mine_similar_pair, CollisionSearchSpec,
    Seed,
};
use lure_core::scanner::{
    evaluate_cnf, preprocess, scan_corpus, scan_unit, write_outputs, AttackId, RawInput, ScanOptions, SignatureId,
};
use mock::{Account, MockExplorer};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let checks: [(&str, Check); 8] = [
        ("published vectors", published_vectors),
        ("lowercase checksum rate", lowercase_rate),
        ("miner statistics", miner_statistics),
        ("similar-pair miner", similar_pairs),
        ("scanner fixture suite", fixture_suite),
        ("cnf truth tables", cnf_truth_tables),
        ("offline property suites", property_suites),
        ("explorer client on a mock", explorer_client),
    ];
    let mut failures = 0;
    for (n, (name, check)) in checks.iter().enumerate() {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} {name}: {detail} [{secs:.1}s]", n + 1),
            Err(reason) => {
                failures += 1;
                println!("FAIL criterion {} {name}: {reason} [{secs:.1}s]", n + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}

fn oracle_keccak(data: &[u8]) -> [u8; 32] {
    use tiny_keccak::{Hasher, Keccak};
    let mut k = Keccak::v256();
    k.update(data);
    let mut out = [0u8; 32];
    k.finalize(&mut out);
    out
}

fn oracle_selector(text: &str) -> String {
    format!("0x{}", hex_of(&oracle_keccak(text.as_bytes())[..4]))
}

fn hex_of(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

const LOWERCASE_KEYS: [(&str, &str); 6] = [
    ("0x47aa51fd5a98e155623202944c44f414a7205a46", "bed6ad86fa57efe205abdcda885b30107b1a75d6196b271d4785cd3ed66c8d5d"),
    ("0x8310561552fa9569337d53493c6a5a8991894072", "4856d3e9c032724eca42a5fd48e99dc5b77cb5be96ca68eb9e03511257999e61"),
    ("0x2797a2c394686d33da258c7de6206617c398605e", "1321d554cddf1b756e8d15cba0a33fb4e84b95119acf8e267f7505f29f652020"),
    ("0x596443674c431e7da447803ef94a7e52cfd71169", "1265ca0334308e3dfb2ddd9a7eb466aa488a863671e6ad6290d93383489159d1"),
    ("0x52206f3a3b80212898760a6ae124474183b30612", "a532795660fbb9ccb5f3862e102f19680a5def583aea24a2875de7f1dd6c8298"),
    ("0xc71c3eec3aa44e7746725fc771b8b821419e4360", "3b1b3a32d73bd32f837440cd0469a8010fa6f3e02358ffeb76c95454ee2a0e36"),
];

fn published_vectors() -> Result<String, String> {
    let foo_uint = normalize_signature("foo(uint256)").map_err(|e| e.to_string())?.selector().to_string();
    ensure!(foo_uint == "0x2fbebd38" && foo_uint == oracle_selector("foo(uint256)"), "foo(uint256) -> {foo_uint}");
    let plain = normalize_signature("foo()").map_err(|e| e.to_string())?;
    ensure!(plain.selector().to_string() == "0xc2985578", "foo() -> {}", plain.selector());
    let twin = homograph_twin_selector(&plain, &[(1, '\u{043E}'), (2, '\u{043E}')], &ConfusablesTable::builtin())
        .map_err(|e| e.to_string())?;
    ensure!(twin.to_string() == "0x3293f02a", "Cyrillic foo() -> {twin}");
    ensure!(oracle_selector("f\u{043E}\u{043E}()") == "0x3293f02a", "oracle disagrees on the Cyrillic twin");

    for (address, key) in LOWERCASE_KEYS {
        let key: PrivateKey = key.parse().map_err(|e| format!("{key}: {e}"))?;
        let derived = eip55_encode(&derive_address(&key));
        ensure!(derived.as_str() == address, "key derives {derived}, expected {address}");
        ensure!(eip55_validate(derived.as_str()) == Eip55Class::AllLowercase, "{derived} is not all_lowercase");
    }
    Ok("3 selectors and 6 published keys match".into())
}

fn lowercase_rate() -> Result<String, String> {
    const N: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ce);
    let mut hits = 0usize;
    let mut bytes = [0u8; 20];
    for _ in 0..N {
        rng.fill_bytes(&mut bytes);
        if eip55_encode(&Address(bytes)).is_all_lowercase() {
            hits += 1;
        }
    }
    let rate = hits as f64 / N as f64;
    ensure!((0.0002..=0.0003).contains(&rate), "rate {rate:.6} outside [0.0002, 0.0003]");
    Ok(format!("{hits}/{N} = {rate:.6}, analytic {:.6}", 0.8125f64.powi(40)))
}

fn median(values: &[u64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Pearson chi-square of trial counts against a geometric law with success
/// probability `p`, over `bins` near-equiprobable bins. Returns the p-value.
fn geometric_fit(samples: &[u64], p: f64, bins: usize) -> f64 {
    let cdf = |k: f64| 1.0 - (1.0 - p).powf(k);
    let mut edges = vec![0.0];
    for j in 1..bins {
        edges.push(((1.0 - j as f64 / bins as f64).ln() / (1.0 - p).ln()).round());
    }
    edges.push(f64::INFINITY);
    let n = samples.len() as f64;
    let mut stat = 0.0;
    for w in edges.windows(2) {
        let observed = samples.iter().filter(|&&x| (x as f64) > w[0] && (x as f64) <= w[1]).count() as f64;
        let hi = if w[1].is_infinite() { 1.0 } else { cdf(w[1]) };
        let expected = n * (hi - cdf(w[0]));
        stat += (observed - expected).powi(2) / expected;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

fn miner_statistics() -> Result<String, String> {
    let attempts: Vec<u64> = (0..50)
        .map(|i| {
            mine_lowercase_account(&Seed::DEFAULT.derive("acceptance-lowercase", i), 10_000_000).map(|m| m.attempts)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let lower_median = median(&attempts);
    ensure!((2000.0..=8000.0).contains(&lower_median), "lowercase median {lower_median} outside [2000, 8000]");
    let lower_fit = geometric_fit(&attempts, 0.8125f64.powi(40), 5);
    ensure!(lower_fit > 0.01, "lowercase attempts do not fit a geometric law (p = {lower_fit:.4})");

    let mut trials = Vec::new();
    for i in 0..30 {
        let target = Selector::of_text(&format!("acceptanceTarget{i}(address)"));
        let mut spec = CollisionSearchSpec::new(target, "probe", "0123456789abcdefghijklmnopqrstuvwxyz");
        spec.truncate_bits = 16;
        spec.arg_types = vec!["address".into()];
        let found = mine_selector_collision(&spec, Duration::from_secs(600)).map_err(|e| e.to_string())?;
        ensure!(found.selector.matches_prefix(&target, 16), "{} does not share 16 bits with {target}", found.signature);
        trials.push(found.trials);
    }
    let coll_median = median(&trials);
    ensure!((32768.0..=131072.0).contains(&coll_median), "16-bit collision median {coll_median} outside [2^15, 2^17]");
    let coll_fit = geometric_fit(&trials, 1.0 / 65536.0, 5);
    ensure!(coll_fit > 0.01, "collision trials do not fit a geometric law (p = {coll_fit:.4})");

    Ok(format!(
        "lowercase median {lower_median} (chi-square p {lower_fit:.3}); 16-bit collision median {coll_median} (chi-square p {coll_fit:.3})"
    ))
}

fn similar_pairs() -> Result<String, String> {
    let mut found = 0;
    let mut slowest = Duration::ZERO;
    for i in 0..50 {
        let started = Instant::now();
        if let Ok(pair) = mine_similar_pair(&Seed::DEFAULT.derive("acceptance-pair", i), Duration::from_secs(120)) {
            pair.verify().map_err(|e| format!("run {i}: {e}"))?;
            found += 1;
        }
        slowest = slowest.max(started.elapsed());
    }
    ensure!(found >= 45, "only {found}/50 runs found a pair");
    Ok(format!("{found}/50 pairs, all verified, slowest run {} ms", slowest.as_millis()))
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn fixture_inputs() -> Vec<RawInput> {
    let mut out = Vec::new();
    for sub in ["attacks", "benign"] {
        let mut paths: Vec<PathBuf> =
            fs::read_dir(fixture_dir().join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        paths.sort();
        for path in paths {
            let origin = format!("{sub}/{}", path.file_stem().unwrap().to_string_lossy());
            out.push(RawInput { origin, content: fs::read_to_string(&path).unwrap() });
        }
    }
    out
}

fn fixture_suite() -> Result<String, String> {
    let expected_text = fs::read_to_string(fixture_dir().join("expected.tsv")).map_err(|e| e.to_string())?;
    let mut expected: BTreeMap<String, BTreeSet<AttackId>> = BTreeMap::new();
    for line in expected_text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (name, attacks) = line.split_once('\t').ok_or(format!("bad expected row {line:?}"))?;
        let set = attacks.split(',').filter(|a| *a != "-").map(|a| a.parse().unwrap()).collect();
        expected.insert(name.to_owned(), set);
    }

    let scan = scan_corpus(fixture_inputs(), &ScanOptions::default());
    ensure!(scan.skipped.is_empty(), "skipped fixtures: {:?}", scan.skipped);
    let (mut attacks, mut benign) = (0, 0);
    for report in scan.reports() {
        let got: BTreeSet<AttackId> = report.matched().into_iter().collect();
        let key = format!("{}.sol", report.origin);
        if report.origin.starts_with("benign/") {
            benign += 1;
            ensure!(got.is_empty(), "benign {key} matched {got:?}");
            ensure!(expected.get(&key).is_none_or(|w| w.is_empty()), "{key} is benign but expected to match");
        } else {
            attacks += 1;
            let want = expected.get(&key).ok_or(format!("{key} has no expected row"))?;
            ensure!(&got == want, "{key}: matched {got:?}, expected {want:?}");
        }
    }
    ensure!(benign >= 5, "only {benign} benign fixtures");
    ensure!(attacks == expected.values().filter(|s| !s.is_empty()).count(), "{attacks} attack fixtures scanned");
    Ok(format!("{attacks} attack fixtures match their classes, {benign} benign fixtures match nothing"))
}

/// The attack rules written out as plain boolean formulas.
fn rule_oracle(attack: u8, s: &dyn Fn(u8) -> bool) -> bool {
    let guarded = s(11) || s(12) || s(13) || s(14);
    let paired = s(2) || s(3) || s(4);
    let icc = s(19) || s(20);
    match attack {
        1 => s(1) && paired && s(5),
        2 => paired && s(5) && s(6) && (s(7) || s(8)) && s(9),
        3 => s(5) && s(10) && guarded && s(15),
        4 => s(5) && guarded && s(16) && (s(17) || s(18)),
        5 => s(5) && guarded && icc && s(21),
        6 => s(5) && guarded && icc && s(21) && s(22),
        _ => unreachable!(),
    }
}

const MENTIONED: [&[u8]; 6] = [
    &[1, 2, 3, 4, 5],
    &[2, 3, 4, 5, 6, 7, 8, 9],
    &[5, 10, 11, 12, 13, 14, 15],
    &[5, 11, 12, 13, 14, 16, 17, 18],
    &[5, 11, 12, 13, 14, 19, 20, 21],
    &[5, 11, 12, 13, 14, 19, 20, 21, 22],
];

fn cnf_truth_tables() -> Result<String, String> {
    let mut cases = 0;
    for (a, mentioned) in MENTIONED.iter().enumerate() {
        let attack = AttackId::new(a as u8 + 1).unwrap();
        for bits in 0u32..(1 << mentioned.len()) {
            let set: BTreeSet<u8> =
                mentioned.iter().enumerate().filter(|(i, _)| bits & (1 << i) != 0).map(|(_, &n)| n).collect();
            let want = rule_oracle(attack.number(), &|n| set.contains(&n));
            let got =
                evaluate_cnf(set.iter().map(|&n| SignatureId::new(n).unwrap())).iter().any(|m| m.attack_id == attack);
            ensure!(got == want, "{attack} on {set:?}: got {got}, oracle {want}");
            cases += 1;
        }
    }
    Ok(format!("{cases} subsets agree"))
}

const COMMENT_WORDS: &[&str] = &[
    "transfer",
    "require(",
    "\"BT\"",
    "0x4bbeEB066eD09B7AEd07bF39EEe0460DFa261520",
    "payable",
    "{",
    "}",
    "\u{0455}ymbol",
    "l\u{043E}g(address)",
    "emit",
    "'",
    "\u{200b}",
    "keccak256(",
    "==",
    ".call(",
    "//",
    "if (",
    "bytes32",
];

/// Adds 1..=4 line or block comments without moving any code.
fn sprinkle_comments(text: &str, rng: &mut ChaCha8Rng) -> String {
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    for _ in 0..rng.random_range(1..=4) {
        let i = rng.random_range(0..lines.len());
        let words: Vec<&str> =
            (0..rng.random_range(1..6)).map(|_| COMMENT_WORDS[rng.random_range(0..COMMENT_WORDS.len())]).collect();
        let comment = words.join(" ");
        if rng.random_bool(0.5) {
            lines[i].push_str(&format!(" // {comment}"));
        } else {
            let indent = lines[i].len() - lines[i].trim_start().len();
            lines[i].insert_str(indent, &format!("/* {comment} */"));
        }
    }
    lines.join("\n") + "\n"
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(dir).unwrap().to_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

fn oracle_contract_address(deployer: &Address, nonce: u64) -> Address {
    let mut stream = rlp::RlpStream::new_list(2);
    stream.append(&deployer.0.as_slice());
    stream.append(&nonce);
    let digest = oracle_keccak(&stream.out());
    Address::from_slice(&digest[12..]).unwrap()
}

fn property_suites() -> Result<String, String> {
    let table = ConfusablesTable::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let inputs = fixture_inputs();
    for input in &inputs {
        let base = scan_unit(&preprocess(&input.origin, &input.content).unwrap(), &table);
        for round in 0..100 {
            let mutated = sprinkle_comments(&input.content, &mut rng);
            let r = scan_unit(&preprocess(&input.origin, &mutated).unwrap(), &table);
            ensure!(
                r.hits == base.hits && r.matches == base.matches,
                "{} changed after comment round {round}",
                input.origin
            );
        }
    }

    let dir = std::env::temp_dir().join(format!("lure-acceptance-{}", std::process::id()));
    let first = scan_corpus(inputs.clone(), &ScanOptions::default());
    let mut reversed = inputs.clone();
    reversed.reverse();
    let second = scan_corpus(reversed, &ScanOptions::default());
    write_outputs(&dir.join("a"), &first).map_err(|e| e.to_string())?;
    write_outputs(&dir.join("b"), &second).map_err(|e| e.to_string())?;
    let (a, b) = (files_under(&dir.join("a")), files_under(&dir.join("b")));
    fs::remove_dir_all(&dir).ok();
    ensure!(a == b, "re-scan output differs");

    let mut rng = ChaCha8Rng::seed_from_u64(0x41f);
    for _ in 0..1000 {
        let mut bytes = [0u8; 20];
        rng.fill_bytes(&mut bytes);
        let deployer = Address(bytes);
        let nonce = rng.random_range(0..=8u64);
        let got = predict_contract_address(&deployer, Nonce(nonce));
        let want = oracle_contract_address(&deployer, nonce);
        ensure!(got == want, "{deployer} nonce {nonce}: {got} vs oracle {want}");
    }
    Ok(format!(
        "{} fixtures x 100 comment mutations unchanged; {} report files byte-identical; 1000 contract addresses match the oracle",
        inputs.len(),
        a.len()
    ))
}

fn explorer_client() -> Result<String, String> {
    let verified = Address([0x11; 20]);
    let unverified = Address([0x22; 20]);
    let broken = Address([0x33; 20]);
    let key = |a: &Address| format!("0x{}", a.to_lower_hex());
    let mut accounts = HashMap::from([
        (key(&verified), Account::Source(vec![("A.sol".into(), "pragma solidity ^0.8.0;\ncontract A {}\n".into())])),
        (key(&unverified), Account::Unverified),
        (key(&broken), Account::Status(500)),
    ]);
    let paced: Vec<Address> = (0..40u8).map(|i| Address([0x80 + i; 20])).collect();
    for a in &paced {
        accounts.insert(key(a), Account::Transactions(vec![key(a)]));
    }
    let mock = MockExplorer::start(accounts, Duration::ZERO);
    let cache = std::env::temp_dir().join(format!("lure-acceptance-cache-{}", std::process::id()));
    let _ = fs::remove_dir_all(&cache);
    let mut config = NetworkConfig::custom(mock.url.clone());
    config.rate_limit = 1000.0;
    config.max_retries = 2;
    config.initial_backoff = Duration::from_millis(5);

    let client = ExplorerClient::new(config.clone(), Some(cache.clone())).map_err(|e| e.to_string())?;
    let body = client.fetch_source(&verified).map_err(|e| e.to_string())?;
    let again = ExplorerClient::new(config.clone(), Some(cache.clone())).map_err(|e| e.to_string())?;
    ensure!(again.fetch_source(&verified).ok().as_ref() == Some(&body), "cached body differs");
    ensure!(mock.hits() == 1, "cache allowed {} requests", mock.hits());

    let not_verified = matches!(client.fetch_source(&unverified), Err(ClientError::NotVerified { .. }));
    ensure!(not_verified, "unverified source was not reported as such");
    let before = mock.hits();
    let transport = client.fetch_source(&broken);
    ensure!(matches!(transport, Err(ClientError::Transport { attempts: 3, .. })), "server errors gave {transport:?}");
    ensure!(mock.hits() - before == 3, "expected 3 attempts, saw {}", mock.hits() - before);
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dead = ExplorerClient::new(
        NetworkConfig { max_retries: 0, ..NetworkConfig::custom(format!("http://127.0.0.1:{port}/api")) },
        None,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        dead.fetch_source(&verified).is_err_and(|e| e.is_transport()),
        "refused connection was not a transport error"
    );

    let mut paced_config = config;
    paced_config.rate_limit = 20.0;
    let paced_client = Arc::new(ExplorerClient::new(paced_config, None).map_err(|e| e.to_string())?);
    let start_hits = mock.arrivals().len();
    thread::scope(|s| {
        for chunk in paced.chunks(10) {
            let c = paced_client.clone();
            s.spawn(move || chunk.iter().for_each(|a| assert_eq!(c.outgoing_tx_count(a).unwrap(), 1)));
        }
    });
    let mut stamps = mock.arrivals()[start_hits..].to_vec();
    stamps.sort();
    let peak = (0..stamps.len())
        .map(|i| stamps[i..].iter().take_while(|t| **t - stamps[i] < Duration::from_secs(1)).count())
        .max()
        .unwrap_or(0);
    fs::remove_dir_all(&cache).ok();
    ensure!(stamps.len() == 40, "{} paced requests", stamps.len());
    ensure!(peak as f64 <= 20.0 * 1.1, "{peak} requests in one second at limit 20");
    Ok(format!("1 request for 2 clients via cache, not-verified and transport outcomes, peak {peak}/s at limit 20"))
}
