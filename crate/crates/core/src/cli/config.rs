//! TOML configuration with `--set` overrides.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{config, Result};
use crate::materials::MaterialsConfig;

const MODULE: &str = "cli";

/// Parsed config file plus the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct ConfigTree {
    pub value: toml::Value,
    pub base_dir: PathBuf,
}

impl ConfigTree {
    pub fn empty() -> Self {
        Self {
            value: toml::Value::Table(Default::default()),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::empty());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            config(
                MODULE,
                format!("cannot read config {}: {e}", path.display()),
            )
        })?;
        let value: toml::Value = toml::from_str(&text)
            .map_err(|e| config(MODULE, format!("{}: {e}", path.display())))?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { value, base_dir })
    }

    /// Apply `key.path=value` overrides in order, so later ones win.
    /// Values are read as TOML literals, falling back to plain strings.
    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<()> {
        for s in sets {
            let (key, raw) = s
                .split_once('=')
                .ok_or_else(|| config(MODULE, format!("override `{s}` is not key=value")))?;
            let parts: Vec<&str> = key.trim().split('.').collect();
            if parts.iter().any(|p| p.is_empty()) {
                return Err(config(MODULE, format!("override key `{key}` is malformed")));
            }
            let value = parse_literal(raw.trim());
            let mut node = &mut self.value;
            for (i, part) in parts.iter().enumerate() {
                let table = node.as_table_mut().ok_or_else(|| {
                    config(
                        MODULE,
                        format!(
                            "override `{key}`: `{}` is not a table",
                            parts[..i].join(".")
                        ),
                    )
                })?;
                if i + 1 == parts.len() {
                    table.insert(part.to_string(), value.clone());
                    break;
                }
                node = table
                    .entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(Default::default()));
            }
        }
        Ok(())
    }

    /// Deserialize one top-level section laid over `T::default()`, so a file
    /// or override may set a single nested key.
    pub fn section<T: Serialize + DeserializeOwned + Default>(&self, name: &str) -> Result<T> {
        let Some(user) = self.value.get(name) else {
            return Ok(T::default());
        };
        let mut merged = toml::Value::try_from(T::default())
            .map_err(|e| config(MODULE, format!("[{name}] defaults: {e}")))?;
        merge(&mut merged, user);
        merged
            .try_into()
            .map_err(|e: toml::de::Error| config(MODULE, format!("[{name}]: {e}")))
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.value.get(name).is_some()
    }

    /// Reject top-level keys outside `allowed`.
    pub fn check_sections(&self, allowed: &[&str]) -> Result<()> {
        if let Some(t) = self.value.as_table() {
            for k in t.keys() {
                if !allowed.contains(&k.as_str()) {
                    return Err(config(
                        MODULE,
                        format!(
                            "unknown section `{k}`; expected one of {}",
                            allowed.join(", ")
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn materials(&self) -> Result<MaterialsConfig> {
        MaterialsConfig::from_toml_value(&self.value)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn merge(base: &mut toml::Value, over: &toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, serde::Serialize, serde::Deserialize)]
    #[serde(deny_unknown_fields, default)]
    struct S {
        x: f64,
        name: String,
        list: Vec<f64>,
    }

    #[derive(Debug, serde::Serialize, serde::Deserialize, PartialEq)]
    #[serde(deny_unknown_fields, default)]
    struct Outer {
        inner: Range,
        k: u32,
    }

    #[derive(Debug, serde::Serialize, serde::Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Range {
        lo: f64,
        hi: f64,
    }

    impl Default for Outer {
        fn default() -> Self {
            Self {
                inner: Range { lo: 1.0, hi: 2.0 },
                k: 3,
            }
        }
    }

    #[test]
    fn nested_key_overrides_keep_sibling_defaults() {
        let mut c = ConfigTree::empty();
        c.apply_overrides(&["o.inner.hi=5".into()]).unwrap();
        let o: Outer = c.section("o").unwrap();
        assert_eq!(
            o,
            Outer {
                inner: Range { lo: 1.0, hi: 5.0 },
                k: 3
            }
        );
    }

    #[test]
    fn overrides_last_wins_and_create_tables() {
        let mut c = ConfigTree::empty();
        c.apply_overrides(&[
            "s.x=1.5".into(),
            "s.name=abc".into(),
            "s.x=2".into(),
            "s.list=[1, 2]".into(),
        ])
        .unwrap();
        let s: S = c.section("s").unwrap();
        assert_eq!(s.x, 2.0);
        assert_eq!(s.name, "abc");
        assert_eq!(s.list, vec![1.0, 2.0]);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut c = ConfigTree::empty();
        c.apply_overrides(&["s.y=1".into()]).unwrap();
        assert!(c.section::<S>("s").is_err());
        assert!(c.apply_overrides(&["novalue".into()]).is_err());
        assert!(c.check_sections(&["t"]).is_err());
    }
}
