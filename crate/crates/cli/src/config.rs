//! `key = value` configuration files and their merge with flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys a configuration file may set; each is also a flag of the same name
/// with `_` spelled `-`.
pub const KEYS: [&str; 22] = [
    "alpha", "beta", "kappa", "dim", "seed", "budget", "tol", "out", "t", "x", "y", "q", "points", "n", "extent",
    "gamma", "n_points", "lo", "hi", "times", "slack", "explore",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::usage(format!("config line {}: expected `key = value`", i + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(CliError::usage(format!("config line {}: unknown key `{k}`", i + 1)));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::usage(format!("config line {}: duplicate key `{k}`", i + 1)));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The flag value if given, else the file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                v.parse().map(Some).map_err(|_| CliError::usage(format!("config key `{key}`: cannot parse `{v}`")))
            }
        }
    }
}

/// Parses `a,b,c` into numbers.
pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            if s == "inf" {
                return Ok(f64::INFINITY);
            }
            s.parse::<f64>().map_err(|_| CliError::usage(format!("{what}: cannot parse `{s}` as a number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let c = ConfigFile::parse("# sweep\nalpha = 1.5\nbeta = 1, 0.5, 0, 0  # trailing\n\ndim=2\n").unwrap();
        assert_eq!(c.pick::<f64>(None, "alpha", 1.0).unwrap(), 1.5);
        assert_eq!(c.pick(Some(0.7), "alpha", 1.0).unwrap(), 0.7);
        assert_eq!(c.pick::<usize>(None, "dim", 1).unwrap(), 2);
        assert_eq!(c.pick::<u64>(None, "seed", 9).unwrap(), 9);
        assert_eq!(parse_list(c.raw("beta").unwrap(), "beta").unwrap(), vec![1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_files() {
        for bad in ["alpha 1", "colour = red", "alpha = 1\nalpha = 2"] {
            assert!(ConfigFile::parse(bad).is_err(), "{bad}");
        }
        let c = ConfigFile::parse("alpha = x").unwrap();
        assert!(c.pick::<f64>(None, "alpha", 1.0).is_err());
    }
}
