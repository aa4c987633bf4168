//! Flat `key = value` run configuration. Keys are long flag names; dashes and
//! underscores are interchangeable. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

pub const KEYS: &[&str] = &[
    "root",
    "out",
    "models",
    "datasets",
    "granularity",
    "jobs",
    "loop_aggregate",
    "tracer",
    "timeout",
    "model",
    "provider",
    "endpoint",
    "api_key_env",
    "temperature",
    "max_tokens",
    "concurrency",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key `{key}`", n + 1));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.str(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| format!("config key `{key}`: {e}"))
            })
            .transpose()
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.str(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// CLI value, else config value, else default.
pub fn pick<T: FromStr>(cli: Option<T>, config: &Config, key: &str, default: T) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    match cli {
        Some(v) => Ok(v),
        None => Ok(config.get(key)?.unwrap_or(default)),
    }
}

pub fn pick_list(cli: Vec<String>, config: &Config, key: &str) -> Vec<String> {
    if cli.is_empty() {
        config.list(key)
    } else {
        cli
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_pairs() {
        let c = Config::parse("# run\nmodels = a, b\n\nloop-aggregate=sum\njobs = 3\n").unwrap();
        assert_eq!(c.list("models"), ["a", "b"]);
        assert_eq!(c.str("loop_aggregate"), Some("sum"));
        assert_eq!(c.get::<usize>("jobs").unwrap(), Some(3));
        assert_eq!(c.get::<usize>("timeout").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(Config::parse("colour = red")
            .unwrap_err()
            .contains("unknown key"));
        assert!(Config::parse("models").unwrap_err().contains("line 1"));
        assert!(Config::parse("jobs = many")
            .unwrap()
            .get::<usize>("jobs")
            .is_err());
    }

    #[test]
    fn flag_beats_config_beats_default() {
        let c = Config::parse("jobs = 3\ndatasets = x").unwrap();
        assert_eq!(pick(Some(8), &c, "jobs", 1).unwrap(), 8);
        assert_eq!(pick(None, &c, "jobs", 1).unwrap(), 3);
        assert_eq!(pick(None, &Config::default(), "jobs", 1).unwrap(), 1);
        assert_eq!(pick_list(vec!["y".into()], &c, "datasets"), ["y"]);
        assert_eq!(pick_list(Vec::new(), &c, "datasets"), ["x"]);
    }
}
