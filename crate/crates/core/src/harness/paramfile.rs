//! Plain-text auxiliary-parameter files: `key = value` lines, complex values
//! as `re,im`, index 0 on-symbol and 1 between-symbol.
//!
//! ```text
//! taps = 3
//! tap_0 = 0.012,-0.003
//! ...
//! mu_pre_0 = 0,0
//! mu_post_0 = 0.0004
//! var_pre_0 = 1.2e-5
//! var_post_0 = 3e-4
//! ```
//!
//! Any other keys are carried along as metadata.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ini::Ini;
use num_complex::Complex64;

use crate::density::AuxChannelParams;
use crate::error::{Error, Result};

const RESERVED: [&str; 5] = ["taps", "mu_pre", "mu_post", "var_pre", "var_post"];

/// Parameters plus free-form metadata (fit id, pilot AIR, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamFile {
    pub params: AuxChannelParams,
    pub meta: BTreeMap<String, String>,
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e6)`.
fn num(v: f64) -> String {
    if v == 0.0 || (1e-4..1e6).contains(&v.abs()) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn complex_str(v: Complex64) -> String {
    format!("{},{}", num(v.re), num(v.im))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: cannot parse '{v}' as a number")))
}

fn parse_complex(key: &str, v: &str) -> Result<Complex64> {
    let (re, im) = v
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("{key}: expected 're,im', got '{v}'")))?;
    Ok(Complex64::new(parse_f64(key, re)?, parse_f64(key, im)?))
}

fn is_reserved(key: &str) -> bool {
    RESERVED
        .iter()
        .any(|r| key == *r || key.strip_prefix(r).is_some_and(|s| s.starts_with('_')))
        || key.starts_with("tap_")
}

impl ParamFile {
    pub fn new(params: AuxChannelParams) -> Self {
        Self {
            params,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::from("# auxiliary channel parameters\n");
        for (k, v) in &self.meta {
            s += &format!("{k} = {v}\n");
        }
        s += &format!("taps = {}\n", p.taps.len());
        for (k, t) in p.taps.iter().enumerate() {
            s += &format!("tap_{k} = {}\n", complex_str(*t));
        }
        for i in 0..2 {
            s += &format!("mu_pre_{i} = {}\n", complex_str(p.mu_pre[i]));
            s += &format!("mu_post_{i} = {}\n", num(p.mu_post[i]));
            s += &format!("var_pre_{i} = {}\n", num(p.var_pre[i]));
            s += &format!("var_post_{i} = {}\n", num(p.var_post[i]));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let props = ini.general_section();
        let get = |key: &str| {
            props
                .get(key)
                .ok_or_else(|| Error::Parse(format!("missing key '{key}'")))
        };
        let count: usize = get("taps")?
            .trim()
            .parse()
            .map_err(|_| Error::Parse("taps: expected a count".into()))?;
        let taps = (0..count)
            .map(|k| {
                let key = format!("tap_{k}");
                parse_complex(&key, get(&key)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let pair_c = |name: &str| -> Result<[Complex64; 2]> {
            let k0 = format!("{name}_0");
            let k1 = format!("{name}_1");
            Ok([parse_complex(&k0, get(&k0)?)?, parse_complex(&k1, get(&k1)?)?])
        };
        let pair_r = |name: &str| -> Result<[f64; 2]> {
            let k0 = format!("{name}_0");
            let k1 = format!("{name}_1");
            Ok([parse_f64(&k0, get(&k0)?)?, parse_f64(&k1, get(&k1)?)?])
        };
        let params = AuxChannelParams {
            taps,
            mu_pre: pair_c("mu_pre")?,
            mu_post: pair_r("mu_post")?,
            var_pre: pair_r("var_pre")?,
            var_post: pair_r("var_post")?,
        };
        params.validate()?;
        let stray = props
            .iter()
            .find(|(k, _)| k.starts_with("tap_") && { k[4..].parse::<usize>().map_or(true, |i| i >= count) });
        if let Some((k, _)) = stray {
            return Err(Error::Parse(format!("unexpected key '{k}' for {count} taps")));
        }
        let meta = props
            .iter()
            .filter(|(k, _)| !is_reserved(k))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Ok(Self { params, meta })
    }
}

pub fn write_params(path: impl AsRef<Path>, file: &ParamFile) -> Result<()> {
    Ok(fs::write(path, file.to_text())?)
}

pub fn read_params(path: impl AsRef<Path>) -> Result<ParamFile> {
    ParamFile::from_text(&fs::read_to_string(path)?)
}
