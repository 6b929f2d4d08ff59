//! Experiment configuration: a JSON file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::args::{Common, Format};
use crate::error::{HarnessError, Result};

/// Run settings that do not affect output bytes and are excluded from the
/// config hash.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    #[serde(default)]
    pub force: bool,
}

const SETTINGS_KEYS: [&str; 4] = ["threads", "out", "format", "force"];

fn read_object(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::config(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(HarnessError::config(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(HarnessError::config(format!("{}: {e}", path.display()))),
    }
}

fn strip_nulls(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(map) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

/// Resolves the command config `C` and the run settings from the config file
/// (if any), then the flags.
pub fn resolve<C: DeserializeOwned>(common: &Common, flags: &impl Serialize) -> Result<(C, Settings)> {
    let mut merged = match &common.config {
        Some(path) => read_object(path)?,
        None => Map::new(),
    };
    let mut settings_map = Map::new();
    for key in SETTINGS_KEYS {
        if let Some(v) = merged.remove(key) {
            settings_map.insert(key.to_owned(), v);
        }
    }
    let mut settings: Settings = serde_json::from_value(Value::Object(settings_map))
        .map_err(|e| HarnessError::config(format!("config settings: {e}")))?;
    if common.threads.is_some() {
        settings.threads = common.threads;
    }
    if common.out.is_some() {
        settings.out = common.out.clone();
    }
    if common.format.is_some() {
        settings.format = common.format;
    }
    settings.force |= common.force;
    if settings.threads == Some(0) {
        return Err(HarnessError::config("--threads must be at least 1"));
    }
    let flags = serde_json::to_value(flags).map_err(|e| HarnessError::config(e.to_string()))?;
    merged.extend(strip_nulls(flags));
    if let Some(seed) = common.seed {
        merged.insert("seed".into(), seed.into());
    }
    let config = serde_json::from_value(Value::Object(merged)).map_err(|e| HarnessError::config(e.to_string()))?;
    Ok((config, settings))
}

/// SHA-256 of the canonical JSON form of a resolved config.
pub fn config_hash(config: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(config).expect("configs serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Ascending grid of horizons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "Vec<usize>")]
pub struct Grid(pub Vec<usize>);

#[derive(Deserialize)]
#[serde(untagged)]
enum GridSpec {
    List(Vec<usize>),
    Text(String),
}

impl TryFrom<GridSpec> for Grid {
    type Error = String;

    fn try_from(spec: GridSpec) -> std::result::Result<Self, String> {
        let points = match spec {
            GridSpec::List(v) => v,
            GridSpec::Text(s) => parse_grid(&s)?,
        };
        if points.is_empty() {
            return Err("empty grid".into());
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("grid must be strictly increasing: {points:?}"));
        }
        Ok(Grid(points))
    }
}

impl From<Grid> for Vec<usize> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

fn number(s: &str) -> std::result::Result<usize, String> {
    s.trim().parse().map_err(|_| format!("bad grid value {s:?}"))
}

/// `lo:hi:xF`, `lo:hi:+S` or `a,b,c`.
pub fn parse_grid(s: &str) -> std::result::Result<Vec<usize>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(number).collect(),
        [lo, hi, step] => {
            let (lo, hi) = (number(lo)?, number(hi)?);
            let next: Box<dyn Fn(usize) -> Option<usize>> = if let Some(f) = step.strip_prefix('x') {
                let f = number(f)?;
                if f < 2 || lo == 0 {
                    return Err(format!("geometric grid needs lo >= 1 and factor >= 2: {s:?}"));
                }
                Box::new(move |n| n.checked_mul(f))
            } else if let Some(d) = step.strip_prefix('+') {
                let d = number(d)?;
                if d == 0 {
                    return Err(format!("arithmetic grid needs a positive step: {s:?}"));
                }
                Box::new(move |n| n.checked_add(d))
            } else {
                return Err(format!("grid step must be xF or +S: {s:?}"));
            };
            let mut out = Vec::new();
            let mut n = Some(lo);
            while let Some(v) = n.filter(|&v| v <= hi) {
                out.push(v);
                n = next(v);
            }
            Ok(out)
        }
        _ => Err(format!("cannot parse grid {s:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("64:4096:x2").unwrap(), vec![64, 128, 256, 512, 1024, 2048, 4096]);
        assert_eq!(parse_grid("1:10:+3").unwrap(), vec![1, 4, 7, 10]);
        assert_eq!(parse_grid("64,256,1024").unwrap(), vec![64, 256, 1024]);
        assert!(parse_grid("0:8:x2").is_err());
        assert!(parse_grid("1:8:y2").is_err());
        assert!(parse_grid("a,b").is_err());
        let g: Grid = serde_json::from_str("[4, 8]").unwrap();
        assert_eq!(g.0, vec![4, 8]);
        assert!(serde_json::from_str::<Grid>("[8, 4]").is_err());
        assert!(serde_json::from_str::<Grid>("\"16:4:x2\"").is_err());
    }
}
