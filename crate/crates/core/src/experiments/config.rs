//! Flat `key = value` config files mirroring the CLI flags.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are flag names
//! without the leading dashes; `_` and `-` are interchangeable.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, (usize, String)>,
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config { line: line_no, msg: format!("expected key = value, got {line:?}") });
            };
            let key = normalize(k);
            if key.is_empty() {
                return Err(Error::Config { line: line_no, msg: "empty key".into() });
            }
            if values.insert(key.clone(), (line_no, v.trim().to_string())).is_some() {
                return Err(Error::Config { line: line_no, msg: format!("duplicate key {key:?}") });
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Fails on the first key not in `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for (k, (line, _)) in &self.values {
            if !known.contains(&k.as_str()) {
                return Err(Error::Config { line: *line, msg: format!("unknown key {k:?}") });
            }
        }
        Ok(())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(&normalize(key)) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Config {
                line: *line,
                msg: format!("cannot parse {v:?} for {key}"),
            }),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
