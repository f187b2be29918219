//! Flat `key = value` config files and flag/file/default resolution.

use std::collections::BTreeMap;
use std::path::Path;

use relzeta::QuadSpec;

use crate::CliError;

const KEYS: [&str; 7] = ["rel-tol", "abs-tol", "tail-log", "seed", "threads", "kernel", "m"];

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            let k = k.trim().trim_start_matches("--").replace('_', "-");
            if !KEYS.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key '{k}'", n + 1)));
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| CliError::Usage(format!("config: bad value '{v}' for {key}"))),
        }
    }
}

/// Settings after applying flags over the config file over defaults.
#[derive(Clone, Debug)]
pub struct Settings {
    pub spec: QuadSpec,
    pub seed: u64,
    pub threads: Option<usize>,
}

pub fn resolve(
    file: &ConfigFile,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    tail_log: Option<f64>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<Settings, CliError> {
    let mut spec = QuadSpec::outer();
    if let Some(v) = rel_tol.or(file.get("rel-tol")?) {
        spec.rel_tol = v;
    }
    if let Some(v) = abs_tol.or(file.get("abs-tol")?) {
        spec.abs_tol = v;
    }
    if let Some(v) = tail_log.or(file.get("tail-log")?) {
        spec.tail_log = v;
    }
    let seed = seed.or(file.get("seed")?).unwrap_or(0);
    spec.seed = seed;
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if !(spec.tail_log > 0.0) {
        return Err(CliError::Usage("tail-log must be positive".into()));
    }
    let threads = threads.or(file.get("threads")?);
    if threads == Some(0) {
        return Err(CliError::Usage("threads must be at least 1".into()));
    }
    Ok(Settings { spec, seed, threads })
}
