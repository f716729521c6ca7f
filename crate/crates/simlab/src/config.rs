//! TOML configuration for the simulation studies. A file may hold any of
//! the tables `[study1]`, `[study2]`, `[study3]`; keys given there override
//! the defaults of the chosen scale, and nested `scenario` tables override
//! individual trial parameters.

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use sigwald::{Error, Result};

use crate::study1::Study1Config;
use crate::study2::Study2Config;
use crate::study3::Study3Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationConfig {
    overrides: toml::Table,
}

fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

impl SimulationConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let overrides: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        for key in overrides.keys() {
            if !["study1", "study2", "study3"].contains(&key.as_str()) {
                return Err(Error::Parse(format!("unknown section {key:?}")));
            }
        }
        Ok(Self { overrides })
    }

    fn resolve<T: Serialize + DeserializeOwned>(
        &self,
        section: &str,
        base: T,
        seed: Option<u64>,
    ) -> Result<T> {
        let mut table = toml::Table::try_from(base).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(toml::Value::Table(over)) = self.overrides.get(section) {
            merge(&mut table, over);
        } else if self.overrides.contains_key(section) {
            return Err(Error::Parse(format!("[{section}] must be a table")));
        }
        if let Some(seed) = seed {
            table.insert("seed".into(), toml::Value::Integer(seed as i64));
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))
    }

    /// Whether the file sets a seed for `study` (1, 2 or 3).
    pub fn has_seed(&self, study: u8) -> bool {
        matches!(
            self.overrides.get(&format!("study{study}")),
            Some(toml::Value::Table(t)) if t.contains_key("seed")
        )
    }

    pub fn study1(&self, scale: Scale, seed: Option<u64>) -> Result<Study1Config> {
        let base = match scale {
            Scale::Desk => Study1Config::desk(),
            Scale::Paper => Study1Config::paper(),
        };
        self.resolve("study1", base, seed)
    }

    pub fn study2(&self, scale: Scale, seed: Option<u64>) -> Result<Study2Config> {
        let base = match scale {
            Scale::Desk => Study2Config::desk(),
            Scale::Paper => Study2Config::paper(),
        };
        self.resolve("study2", base, seed)
    }

    pub fn study3(&self, scale: Scale, seed: Option<u64>) -> Result<Study3Config> {
        let base = match scale {
            Scale::Desk => Study3Config::desk(),
            Scale::Paper => Study3Config::paper(),
        };
        self.resolve("study3", base, seed)
    }
}
