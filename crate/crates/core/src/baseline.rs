//! Frozen sweep reports keyed by command and lattice hash.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::report::{SweepReport, SCHEMA_VERSION};

/// First 16 hex digits of the SHA-256 of a lattice description.
pub fn lattice_hash(echo: &str) -> String {
    let d = Sha256::digest(echo.as_bytes());
    d.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn baseline_key(command: &str, echo: &str) -> String {
    format!("{command}@{}", lattice_hash(echo))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub schema_version: u32,
    pub entries: BTreeMap<String, SweepReport>,
}

impl Default for Baselines {
    fn default() -> Self {
        Baselines { schema_version: SCHEMA_VERSION, entries: BTreeMap::new() }
    }
}

impl Baselines {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// The frozen report for the same command and lattice.
    pub fn get(&self, command: &str, echo: &str) -> Option<&SweepReport> {
        self.entries.get(&baseline_key(command, echo))
    }

    /// Stores `rep` with its gates cleared, replacing any earlier entry.
    pub fn insert(&mut self, rep: &SweepReport) {
        let mut r = rep.clone();
        r.gates.clear();
        self.entries.insert(baseline_key(&r.command, &r.command_echo), r);
    }

    pub fn merge(&mut self, other: Baselines) {
        self.entries.extend(other.entries);
    }
}
