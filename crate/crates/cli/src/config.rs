//! `key = value` configuration files.
//!
//! Keys are the long flag names (`plane-threshold`, `knn-backend`, ...);
//! underscores are accepted in place of dashes. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every key a config file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "knn-backend",
    "k",
    "bayes-k",
    "angle-window",
    "cell",
    "segment",
    "plane-threshold",
    "ransac-iterations",
    "seed",
    "spread",
    "neighbor-space",
    "voxel-size",
    "flatness",
    "height-offset",
    "min-points",
    "ground-classes",
    "format",
    "threads",
    "repetitions",
    "epsilon",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    origin: String,
    values: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{origin}:{}: expected key=value", no + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("{origin}:{}: unknown key {key:?}", no + 1)));
            }
            values.insert(key, (no + 1, value.trim().to_string()));
        }
        Ok(Self {
            origin: origin.to_string(),
            values,
        })
    }

    /// Parsed value of `key`, if the file sets it.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse().map(Some).map_err(|e| {
                CliError::Usage(format!("{}:{line}: bad value for {key}: {e}", self.origin))
            }),
        }
    }

    /// Flag value if given, else the config value, else `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }
}

/// `lo,hi` or `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleWindow(pub f64, pub f64);

impl FromStr for AngleWindow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once([',', ':'])
            .ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
        let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        Ok(Self(p(a)?, p(b)?))
    }
}

/// Comma-separated class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassList(pub Vec<i64>);

impl FromStr for ClassList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<Result<_, _>>()
            .map(Self)
    }
}
