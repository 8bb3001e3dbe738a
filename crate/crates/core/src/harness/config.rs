//! INI-style configuration files whose keys mirror the command-line flags.
//!
//! Section headers only group keys for readability; every key must be unique
//! across the file. `-` and `_` are interchangeable in key names.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut values = HashMap::new();
        for (section, props) in ini.iter() {
            for (k, v) in props.iter() {
                if values.insert(normalize(k), v.trim().to_string()).is_some() {
                    let at = section.map(|s| format!(" (section [{s}])")).unwrap_or_default();
                    return Err(Error::Parse(format!("duplicate key '{k}'{at}")));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Parse(format!("{key}: cannot parse '{v}'")))
            })
            .transpose()
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| parse_list(v).map_err(|e| Error::Parse(format!("{key}: {e}"))))
            .transpose()
    }

    /// Keys not in `known` (typos are better reported than ignored).
    pub fn unknown_keys(&self, known: &[&str]) -> Vec<String> {
        let known: Vec<String> = known.iter().map(|k| normalize(k)).collect();
        let mut extra: Vec<String> = self.values.keys().filter(|k| !known.contains(k)).cloned().collect();
        extra.sort();
        extra
    }
}

/// Parses `a,b,c`; numeric ranges `start:step:stop` expand inclusively.
pub fn parse_list<T: FromStr>(text: &str) -> std::result::Result<Vec<T>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() == 3 {
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad range '{item}'"));
            let (a, step, b) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || b < a {
                return Err(format!("bad range '{item}'"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            for k in 0..count {
                // Round to suppress accumulated binary noise (0.1 * 3 etc.).
                let v = ((a + k as f64 * step) * 1e9).round() / 1e9;
                out.push(v.to_string().parse().map_err(|_| format!("bad range '{item}'"))?);
            }
        } else {
            out.push(item.parse().map_err(|_| format!("cannot parse '{item}'"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
