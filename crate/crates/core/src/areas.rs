//! Area code table: canonical codes, display labels, provider aliases.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::AreaKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaDef {
    pub code: String,
    pub label: String,
    /// Other spellings providers use for the same area (Eurostat 2-letter codes, alternate names).
    #[serde(default)]
    pub aliases: Vec<String>,
}

/// Lookup from provider codes or labels to canonical [`AreaKey`]s.
#[derive(Debug, Clone)]
pub struct AreaTable {
    defs: Vec<AreaDef>,
    index: HashMap<String, usize>,
}

const DEFAULT_AREAS: &[(&str, &str, &[&str])] = &[
    ("EUU", "European Union", &["EU", "EU27_2020", "EU28", "EU27", "EU15"]),
    ("AFR", "Sub-Saharan Africa", &["SSF", "SSA"]),
    ("USA", "United States", &["US", "United States of America"]),
    ("GBR", "United Kingdom", &["UK", "GB"]),
    ("DEU", "Germany", &["DE"]),
    ("PRT", "Portugal", &["PT"]),
    ("FRA", "France", &["FR"]),
    ("ITA", "Italy", &["IT"]),
    ("ESP", "Spain", &["ES"]),
    ("GRC", "Greece", &["EL", "GR"]),
    ("NLD", "Netherlands", &["NL"]),
    ("BEL", "Belgium", &["BE"]),
    ("AUT", "Austria", &["AT"]),
    ("CHE", "Switzerland", &["CH"]),
    ("NOR", "Norway", &["NO"]),
    ("SWE", "Sweden", &["SE"]),
    ("DNK", "Denmark", &["DK"]),
    ("FIN", "Finland", &["FI"]),
    ("IRL", "Ireland", &["IE"]),
    ("LUX", "Luxembourg", &["LU"]),
    ("POL", "Poland", &["PL"]),
    ("CZE", "Czech Republic", &["CZ", "Czechia"]),
    ("HUN", "Hungary", &["HU"]),
    ("MLT", "Malta", &["MT"]),
    ("CYP", "Cyprus", &["CY"]),
    ("HRV", "Croatia", &["HR"]),
    ("SVN", "Slovenia", &["SI"]),
    ("TUR", "Turkey", &["TR"]),
    ("JPN", "Japan", &["JP"]),
];

fn fold(text: &str) -> String {
    text.trim().to_lowercase()
}

impl Default for AreaTable {
    fn default() -> Self {
        let defs = DEFAULT_AREAS
            .iter()
            .map(|(code, label, aliases)| AreaDef {
                code: code.to_string(),
                label: label.to_string(),
                aliases: aliases.iter().map(|a| a.to_string()).collect(),
            })
            .collect();
        AreaTable::new(defs)
    }
}

impl AreaTable {
    pub fn new(defs: Vec<AreaDef>) -> Self {
        let mut index = HashMap::new();
        // codes take precedence over labels and aliases
        for (i, def) in defs.iter().enumerate() {
            index.entry(fold(&def.code)).or_insert(i);
        }
        for (i, def) in defs.iter().enumerate() {
            index.entry(fold(&def.label)).or_insert(i);
            for alias in &def.aliases {
                index.entry(fold(alias)).or_insert(i);
            }
        }
        AreaTable { defs, index }
    }

    /// Loads a JSON list of [`AreaDef`]s.
    pub fn from_json_file(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let defs: Vec<AreaDef> = serde_json::from_slice(&bytes)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        Ok(AreaTable::new(defs))
    }

    pub fn defs(&self) -> &[AreaDef] {
        &self.defs
    }

    /// Resolves a code, alias or label. Unknown tokens yield `None`.
    pub fn lookup(&self, token: &str) -> Option<AreaKey> {
        self.index.get(&fold(token)).map(|&i| {
            let def = &self.defs[i];
            AreaKey { code: def.code.clone(), label: def.label.clone() }
        })
    }

    /// Resolves a provider code; unknown codes are kept (uppercased) with the code as label.
    pub fn resolve_code(&self, code: &str) -> AreaKey {
        self.lookup(code).unwrap_or_else(|| {
            let code = code.trim().to_uppercase();
            AreaKey { label: code.clone(), code }
        })
    }

    /// Resolves a display label; unknown labels get a slug code and keep their text as label.
    pub fn resolve_label(&self, label: &str) -> AreaKey {
        self.lookup(label).unwrap_or_else(|| AreaKey {
            code: slug_code(label),
            label: label.trim().to_string(),
        })
    }
}

/// Uppercase code derived from free text: alphanumerics kept, runs of anything else become `_`.
pub fn slug_code(label: &str) -> String {
    let mut out = String::new();
    let mut pending_sep = false;
    for c in label.trim().chars() {
        if c.is_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.extend(c.to_uppercase());
        } else {
            pending_sep = true;
        }
    }
    if out.is_empty() {
        out.push('_');
    }
    out
}
