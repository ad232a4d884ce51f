//! Line-oriented `key = value` run configuration.
//!
//! Files hold one assignment per line; `#` starts a comment, blank lines
//! are ignored, and duplicate keys are rejected. The schema is closed: a
//! command reads every key it understands and then calls [`ConfigMap::finish`],
//! which names the first key nothing consumed. A typo therefore fails the
//! run instead of silently reverting to a default.

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

impl ConfigMap {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", i + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if value.is_empty() {
                return Err(Error::Config(format!(
                    "line {}: key '{key}' has no value",
                    i + 1
                )));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key '{key}'",
                    i + 1
                )));
            }
        }
        Ok(ConfigMap {
            values,
            used: BTreeSet::new(),
        })
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        let v = self.values.get(key).cloned();
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    pub fn str_opt(&mut self, key: &str) -> Option<String> {
        self.raw(key)
    }

    pub fn str_or(&mut self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or_else(|| default.to_string())
    }

    pub fn str_req(&mut self, key: &str) -> Result<String> {
        self.raw(key)
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    fn parse_as<T: std::str::FromStr>(key: &str, text: &str) -> Result<T> {
        text.parse()
            .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{text}'")))
    }

    pub fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|v| Self::parse_as(key, &v)).transpose()
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn f64_req(&mut self, key: &str) -> Result<f64> {
        let v = self.str_req(key)?;
        Self::parse_as(key, &v)
    }

    pub fn u64_opt(&mut self, key: &str) -> Result<Option<u64>> {
        self.raw(key).map(|v| Self::parse_as(key, &v)).transpose()
    }

    pub fn usize_opt(&mut self, key: &str) -> Result<Option<usize>> {
        self.raw(key).map(|v| Self::parse_as(key, &v)).transpose()
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.usize_opt(key)?.unwrap_or(default))
    }

    pub fn usize_req(&mut self, key: &str) -> Result<usize> {
        let v = self.str_req(key)?;
        Self::parse_as(key, &v)
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key).as_deref() {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(Error::Config(format!(
                "key '{key}': expected true or false, got '{other}'"
            ))),
        }
    }

    pub fn usize_list_opt(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| Self::parse_as(key, s.trim()))
                .collect::<Result<Vec<usize>>>()
                .map(Some),
        }
    }

    pub fn usize_list_req(&mut self, key: &str) -> Result<Vec<usize>> {
        self.usize_list_opt(key)?
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    pub fn f64_list_opt(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| Self::parse_as(key, s.trim()))
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    /// Fails on the first key no reader consumed.
    pub fn finish(self) -> Result<()> {
        for key in self.values.keys() {
            if !self.used.contains(key) {
                return Err(Error::Config(format!("unknown key '{key}'")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_assignments_and_comments() {
        let mut cfg = ConfigMap::parse(
            "# a run\nseed = 7\nopt.eta = 0.5   # trailing note\n\nmodel.sizes = 2, 8, 3\n",
        )
        .unwrap();
        assert_eq!(cfg.u64_opt("seed").unwrap(), Some(7));
        assert_eq!(cfg.f64_req("opt.eta").unwrap(), 0.5);
        assert_eq!(cfg.usize_list_req("model.sizes").unwrap(), vec![2, 8, 3]);
        cfg.finish().unwrap();
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = ConfigMap::parse("seed = 1\nseed = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate key 'seed'"), "{err}");
    }

    #[test]
    fn unread_keys_fail_the_schema_check() {
        let mut cfg = ConfigMap::parse("seed = 1\nmodle.sizes = 2,2\n").unwrap();
        let _ = cfg.u64_opt("seed").unwrap();
        let err = cfg.finish().unwrap_err();
        assert!(err.to_string().contains("unknown key 'modle.sizes'"), "{err}");
    }

    #[test]
    fn malformed_lines_name_their_line_number() {
        let err = ConfigMap::parse("seed\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = ConfigMap::parse("ok = 1\n = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn values_must_parse_as_their_requested_type() {
        let mut cfg = ConfigMap::parse("opt.eta = fast\n").unwrap();
        let err = cfg.f64_req("opt.eta").unwrap_err();
        assert!(err.to_string().contains("opt.eta"), "{err}");
    }

    #[test]
    fn missing_required_keys_are_named() {
        let mut cfg = ConfigMap::parse("seed = 1\n").unwrap();
        let err = cfg.str_req("objective").unwrap_err();
        assert!(err.to_string().contains("objective"), "{err}");
    }

    #[test]
    fn booleans_accept_only_the_two_literals() {
        let mut cfg = ConfigMap::parse("model.bias = yes\n").unwrap();
        assert!(cfg.bool_or("model.bias", true).is_err());
        let mut cfg = ConfigMap::parse("model.bias = false\n").unwrap();
        assert!(!cfg.bool_or("model.bias", true).unwrap());
    }
}
