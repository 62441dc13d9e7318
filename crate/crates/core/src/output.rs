//! Emitted artifacts: CSV tables and JSON records.
//!
//! Both carry the seed, the config hash and the full config, so any artifact
//! can be fed back through `--config` to rerun the computation that made it.
//!
//! CSV layout: `# key=value` header lines, then a normal header row and data
//! rows. Floats are written in shortest round-trip form.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{ExperimentConfig, Format};
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: Value,
}

impl Provenance {
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            seed,
            config_hash: cfg.hash(),
            config: serde_json::to_value(cfg).expect("config serializes"),
        }
    }
}

/// One result object with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record<T> {
    pub kind: String,
    #[serde(flatten)]
    pub provenance: Provenance,
    pub result: T,
}

impl<T: Serialize> Record<T> {
    pub fn new(kind: &str, cfg: &ExperimentConfig, seed: u64, result: T) -> Self {
        Self {
            kind: kind.to_string(),
            provenance: Provenance::new(cfg, seed),
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// A table with named columns and text cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputTable {
    pub kind: String,
    #[serde(flatten)]
    pub provenance: Provenance,
    /// Scalars that describe the whole table (fit parameters and the like).
    pub extras: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn cell(x: f64) -> String {
    format!("{x:?}")
}

impl OutputTable {
    pub fn new(kind: &str, cfg: &ExperimentConfig, seed: u64, columns: &[&str]) -> Self {
        Self {
            kind: kind.to_string(),
            provenance: Provenance::new(cfg, seed),
            extras: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn extra(&mut self, key: &str, value: impl ToString) {
        self.extras.insert(key.to_string(), value.to_string());
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)
            .map(|c| c.iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        let p = &self.provenance;
        out.push_str(&format!("# kind={}\n", self.kind));
        out.push_str(&format!("# tool_version={}\n", p.tool_version));
        out.push_str(&format!("# seed={}\n", p.seed));
        out.push_str(&format!("# config_hash={}\n", p.config_hash));
        for (k, v) in &self.extras {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&format!("# config={}\n", serde_json::to_string(&p.config)?));
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(kv) if body.is_empty() => {
                    let (k, v) = kv.split_once('=').ok_or_else(|| {
                        Error::config("<csv>", format!("bad header line `{line}`"))
                    })?;
                    meta.insert(k.to_string(), v.to_string());
                }
                _ => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut take = |k: &str| {
            meta.remove(k)
                .ok_or_else(|| Error::config("<csv>", format!("missing `{k}` header")))
        };
        let kind = take("kind")?;
        let tool_version = take("tool_version")?;
        let seed = take("seed")?
            .parse()
            .map_err(|_| Error::config("<csv>", "seed is not an integer"))?;
        let config_hash = take("config_hash")?;
        let config = serde_json::from_str(&take("config")?)?;
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self {
            kind,
            provenance: Provenance {
                tool_version,
                seed,
                config_hash,
                config,
            },
            extras: meta,
            columns,
            rows,
        })
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
        }
    }
}

/// Recovers the config embedded in an emitted artifact (CSV table or JSON
/// record). Returns `None` when `text` is not an artifact. The embedded hash
/// must match the embedded config.
pub fn embedded_config(text: &str) -> Result<Option<ExperimentConfig>> {
    let prov = if text.trim_start().starts_with('#') {
        OutputTable::from_csv(text)?.provenance
    } else {
        let v: Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        if v.get("kind").is_none() || v.get("config").is_none() {
            return Ok(None);
        }
        serde_json::from_value::<ProvenanceOnly>(v)?.provenance
    };
    let cfg = ExperimentConfig::from_json(&prov.config.to_string())?;
    if cfg.hash() != prov.config_hash {
        return Err(Error::config(
            "config_hash",
            format!(
                "artifact hash {} does not match its config ({})",
                prov.config_hash,
                cfg.hash()
            ),
        ));
    }
    Ok(Some(cfg))
}

#[derive(Deserialize)]
struct ProvenanceOnly {
    #[serde(flatten)]
    provenance: Provenance,
}

/// Writes to `path`, or stdout when `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
