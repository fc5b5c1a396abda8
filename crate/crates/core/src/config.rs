//! Plain-text key-value configuration with `[section]` headers.
//!
//! ```text
//! # comment
//! seed = 7            # keys before any header live in the "" section
//! [helmholtz]
//! n = 64
//! ppw = 24, 20, 16    # lists are comma separated
//! ```
//!
//! Keys are unique within a section. Values run to the end of the line, with trailing
//! `#` comments and surrounding whitespace removed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Format(format!("line {}: {msg}: {raw:?}", lineno + 1));
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err("unterminated section header"))?.trim();
                if name.is_empty() || !name.chars().all(is_key_char) {
                    return Err(err("bad section name"));
                }
                section = name.to_string();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(is_key_char) {
                return Err(err("bad key"));
            }
            let entries = cfg.sections.entry(section.clone()).or_default();
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(err("duplicate key"));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn sections(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.raw(section, key).map(|v| parse_value(section, key, v)).transpose()
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.get(section, key)?
            .ok_or_else(|| Error::Format(format!("missing key `{key}` in section [{section}]")))
    }

    pub fn get_list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.raw(section, key) else { return Ok(None) };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_value(section, key, s))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, entries) in &self.sections {
            if !name.is_empty() {
                if !first {
                    writeln!(f)?;
                }
                writeln!(f, "[{name}]")?;
            }
            for (k, v) in entries {
                writeln!(f, "{k} = {v}")?;
            }
            first = false;
        }
        Ok(())
    }
}

fn is_key_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(head, _)| head)
}

fn parse_value<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Format(format!("cannot parse value {v:?} of `{key}` in section [{section}]")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_lists_and_comments() {
        let cfg = Config::parse("seed = 7 # root\n\n[grid]\nn = 64\nppw = 24, 20,16\nname = two layer\n").unwrap();
        assert_eq!(cfg.get::<u64>("", "seed").unwrap(), Some(7));
        assert_eq!(cfg.require::<usize>("grid", "n").unwrap(), 64);
        assert_eq!(cfg.get_list::<f64>("grid", "ppw").unwrap(), Some(vec![24.0, 20.0, 16.0]));
        assert_eq!(cfg.raw("grid", "name"), Some("two layer"));
        assert_eq!(cfg.get_or("grid", "missing", 3).unwrap(), 3);
        assert!(cfg.require::<f64>("grid", "name").is_err());
    }

    #[test]
    fn round_trips_through_display() {
        let mut cfg = Config::new();
        cfg.set("", "seed", 1);
        cfg.set("solve", "rtol", 1e-6);
        cfg.set("solve", "format", "npbs");
        assert_eq!(Config::parse(&cfg.to_string()).unwrap(), cfg);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("[open\n").is_err());
        assert!(Config::parse("novalue\n").is_err());
        assert!(Config::parse("a = 1\na = 2\n").is_err());
        assert!(Config::parse("bad key = 1\n").is_err());
    }
}
