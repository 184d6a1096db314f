//! TOML configuration with dotted-key overrides.

use std::path::Path;

use irs_mixgamma::geometry::NetworkConfig;
use toml::{Table, Value};

use crate::error::CliError;

/// Configuration tree: defaults, then the file, then `--set` overrides.
#[derive(Debug, Clone)]
pub struct ConfigTree(Table);

impl ConfigTree {
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self, CliError> {
        let mut base = match Value::try_from(NetworkConfig::default()) {
            Ok(Value::Table(t)) => t,
            _ => unreachable!("configuration serializes to a table"),
        };
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let file: Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            merge(&mut base, file);
        }
        let mut tree = ConfigTree(base);
        for s in sets {
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override '{s}' is not of the form key=value")))?;
            tree.set(key.trim(), parse_value(value.trim()))?;
        }
        tree.resolve()?;
        Ok(tree)
    }

    /// Sets a dotted key, creating intermediate tables.
    pub fn set(&mut self, key: &str, value: Value) -> Result<(), CliError> {
        let parts: Vec<&str> = key.split('.').collect();
        let mut t = &mut self.0;
        for p in &parts[..parts.len() - 1] {
            t = t
                .entry(p.to_string())
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("'{p}' in '{key}' is not a table")))?;
        }
        t.insert(parts[parts.len() - 1].to_string(), value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        let mut v: Option<&Value> = None;
        let mut t = &self.0;
        for p in key.split('.') {
            v = t.get(p);
            match v {
                Some(Value::Table(inner)) => t = inner,
                Some(_) => {}
                None => return None,
            }
        }
        v
    }

    pub fn resolve(&self) -> Result<NetworkConfig, CliError> {
        let cfg: NetworkConfig =
            Value::Table(self.0.clone()).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Canonical text of the resolved configuration.
    pub fn canonical(&self) -> Result<String, CliError> {
        let cfg = self.resolve()?;
        toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// A TOML literal, or a bare string when the text is not one.
pub fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}
