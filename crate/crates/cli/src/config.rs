use std::fs;
use std::path::PathBuf;

use lure_client::NetworkConfig;
use lure_core::homograph::{load_confusables, ConfusablesTable};
use lure_core::miners::Seed;
use serde::Deserialize;

use crate::{Failure, Format, GlobalArgs};

/// Contents of the optional `--config` TOML file. Flags win over the file.
///
/// ```toml
/// workers = 4
/// output = "out"
/// [network]
/// name = "ropsten"
/// rate_limit = 2
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub network: NetworkConfig,
    pub confusables: Option<PathBuf>,
    pub workers: usize,
    /// 32-byte hex.
    pub seed: Option<String>,
    /// Default output directory for `scan` and `fetch`.
    pub output: Option<PathBuf>,
    /// Where explorer responses are cached; `.lure-cache` when unset.
    pub cache_dir: Option<PathBuf>,
    pub verbosity: u8,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            network: NetworkConfig::default(),
            confusables: None,
            workers: 1,
            seed: None,
            output: None,
            cache_dir: None,
            verbosity: 0,
        }
    }
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Everything a command needs, after merging flags over the config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub format: Format,
    pub seed: Seed,
    pub workers: usize,
    pub confusables: ConfusablesTable,
    pub network: NetworkConfig,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub verbosity: u8,
}

impl Settings {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, Failure> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
                CliConfig::parse(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))?
            }
            None => CliConfig::default(),
        };

        let workers = args.workers.unwrap_or(file.workers);
        if workers == 0 {
            return Err(Failure::Usage("workers must be at least 1".into()));
        }
        let seed = match (args.seed, &file.seed) {
            (Some(seed), _) => seed,
            (None, Some(text)) => text.parse().map_err(|e| Failure::Usage(format!("config seed: {e}")))?,
            (None, None) => Seed::DEFAULT,
        };
        let confusables = match args.confusables.as_ref().or(file.confusables.as_ref()) {
            Some(path) => load_confusables(path).map_err(|e| Failure::Usage(e.to_string()))?,
            None => ConfusablesTable::builtin(),
        };

        let mut network = file.network;
        if let Some(name) = args.network {
            if name != network.name {
                network.base_url = None;
            }
            network.name = name;
        }
        if let Some(url) = &args.base_url {
            network.base_url = Some(url.clone());
        }
        let network = network.with_env_api_key();

        let cache_dir = if args.no_cache {
            None
        } else {
            Some(args.cache_dir.clone().or(file.cache_dir).unwrap_or_else(|| PathBuf::from(".lure-cache")))
        };

        Ok(Settings {
            format: args.format,
            seed,
            workers,
            confusables,
            network,
            output: file.output,
            cache_dir,
            verbosity: args.verbose.max(file.verbosity),
        })
    }
}
