//! Flat `key=value` configuration files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Keys are the long flag names with `-` replaced by `_`; `N` is the step
//! count. A value given on the command line always wins over the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use kfreewalk::Error;

use crate::args::Format;

pub const KEYS: &[&str] = &[
    "k",
    "a",
    "b",
    "r",
    "alpha",
    "q",
    "N",
    "trials",
    "seed",
    "grid",
    "prime_limit",
    "pair_cap",
    "variance",
    "oracle",
    "quick",
    "out",
    "format",
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    entries: BTreeMap<String, Entry>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text, Some(path.to_path_buf()))
    }

    pub fn parse(text: &str, path: Option<PathBuf>) -> Result<Self> {
        let mut file = ConfigFile {
            path,
            entries: BTreeMap::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                bail!("{}: expected key=value, got '{body}'", file.location(line));
            };
            let (key, value) = (key.trim(), value.trim());
            let key = if key == "n" { "N" } else { key };
            if !KEYS.contains(&key) {
                bail!(
                    "{}: unknown key '{key}' (known keys: {})",
                    file.location(line),
                    KEYS.join(", ")
                );
            }
            if value.is_empty() {
                bail!("{}: {key}: missing value", file.location(line));
            }
            if let Some(first) = file.entries.get(key) {
                bail!(
                    "{}: duplicate key '{key}' (first set on line {})",
                    file.location(line),
                    first.line
                );
            }
            file.entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(file)
    }

    fn location(&self, line: usize) -> String {
        match &self.path {
            Some(p) => format!("{} line {line}", p.display()),
            None => format!("config line {line}"),
        }
    }
}

/// Resolves each setting as flag, then config file, then default, and
/// remembers which settings came from the file so that later validation
/// errors can point at the offending line.
#[derive(Debug, Default)]
pub struct Resolver {
    file: ConfigFile,
    from_file: BTreeMap<&'static str, usize>,
}

impl Resolver {
    pub fn new(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Resolver {
            file,
            from_file: BTreeMap::new(),
        })
    }

    #[cfg(test)]
    pub fn from_text(text: &str) -> Result<Self> {
        Ok(Resolver {
            file: ConfigFile::parse(text, None)?,
            from_file: BTreeMap::new(),
        })
    }

    pub fn get<T, E: fmt::Display>(
        &mut self,
        key: &'static str,
        flag: Option<T>,
        parse: impl Fn(&str) -> std::result::Result<T, E>,
    ) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        let Some(entry) = self.file.entries.get(key) else {
            return Ok(None);
        };
        let value = parse(&entry.value)
            .map_err(|e| anyhow!("{}: {key}: {e}", self.file.location(entry.line)))?;
        self.from_file.insert(key, entry.line);
        Ok(Some(value))
    }

    pub fn or<T, E: fmt::Display>(
        &mut self,
        key: &'static str,
        flag: Option<T>,
        default: T,
        parse: impl Fn(&str) -> std::result::Result<T, E>,
    ) -> Result<T> {
        Ok(self.get(key, flag, parse)?.unwrap_or(default))
    }

    /// Boolean switches can only be turned on by the flag.
    pub fn switch(&mut self, key: &'static str, flag: bool) -> Result<bool> {
        Ok(flag || self.get(key, None, parse_bool)?.unwrap_or(false))
    }

    pub fn format(&mut self, flag: Option<Format>, default: Format) -> Result<Format> {
        self.or("format", flag, default, |s| Format::from_str(s, true))
    }

    pub fn out(&mut self, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
        self.get("out", flag, |s| Ok::<_, String>(PathBuf::from(s)))
    }

    /// Attaches the config location to a library error when the field it
    /// names was read from the file.
    pub fn explain(&self, err: Error) -> anyhow::Error {
        let field = match &err {
            Error::InvalidParam { field, .. } => Some(*field),
            Error::KTooSmall(_) => Some("k"),
            Error::NotKFreeGcd { .. } => Some("r"),
            _ => None,
        };
        match field.and_then(|f| self.from_file.get(f)) {
            Some(&line) => anyhow!("{}: {err}", self.file.location(line)),
            None => err.into(),
        }
    }
}

pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim().replace('_', "");
    let bad = || format!("expected a non-negative integer such as 1000, 1e6 or 2^20, got '{s}'");
    let overflow = || format!("'{s}' does not fit in 64 bits");
    if let Some((base, exp)) = t.split_once('^') {
        let base: u64 = base.parse().map_err(|_| bad())?;
        let exp: u32 = exp.parse().map_err(|_| bad())?;
        return base.checked_pow(exp).ok_or_else(overflow);
    }
    if let Some((mantissa, exp)) = t.split_once(['e', 'E']) {
        let mantissa: u64 = mantissa.parse().map_err(|_| bad())?;
        let exp: u32 = exp.parse().map_err(|_| bad())?;
        return 10u64
            .checked_pow(exp)
            .and_then(|p| p.checked_mul(mantissa))
            .ok_or_else(overflow);
    }
    t.parse().map_err(|_| bad())
}

pub fn parse_k(s: &str) -> std::result::Result<u32, String> {
    let k = parse_count(s)?;
    u32::try_from(k).map_err(|_| format!("k = {k} is out of range"))
}

pub fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("expected a number, got '{s}'"))
}

pub fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("expected true or false, got '{s}'")),
    }
}

/// A list of step counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<u64>);

/// Comma-separated counts; an item `B^x..B^y` expands to `B^x, ..., B^y`.
pub fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        if let Some((lo, hi)) = item.split_once("..") {
            let power = |t: &str| -> std::result::Result<(u64, u32), String> {
                let (b, e) = t
                    .trim()
                    .split_once('^')
                    .ok_or_else(|| format!("range ends must look like B^e, got '{t}'"))?;
                let b = b.parse().map_err(|_| format!("bad base in '{t}'"))?;
                let e = e.parse().map_err(|_| format!("bad exponent in '{t}'"))?;
                Ok((b, e))
            };
            let (b0, e0) = power(lo)?;
            let (b1, e1) = power(hi)?;
            if b0 != b1 || b0 < 2 || e0 > e1 {
                return Err(format!("'{item}' is not an increasing range of powers"));
            }
            for e in e0..=e1 {
                out.push(
                    b0.checked_pow(e)
                        .ok_or_else(|| format!("{b0}^{e} does not fit in 64 bits"))?,
                );
            }
        } else {
            out.push(parse_count(item)?);
        }
    }
    if out.is_empty() {
        return Err("grid is empty".to_string());
    }
    Ok(Grid(out))
}
