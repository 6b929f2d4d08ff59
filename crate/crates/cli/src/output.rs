//! Output persistence. Every file is written under a `.tmp` name and only
//! renamed into place once the run manifest describing it has been written.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{config_hash, Settings};
use crate::error::{HarnessError, Result};

/// Version of the CSV and JSON layouts written by the harness.
pub const SCHEMA_VERSION: u32 = 1;

/// One output of a command. `suffix = None` is the primary output (the
/// `--out` path); others go to `<stem>-<suffix>.<ext>` next to it.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub suffix: Option<&'static str>,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn primary(bytes: Vec<u8>) -> Self {
        Self { suffix: None, bytes }
    }

    pub fn sibling(suffix: &'static str, bytes: Vec<u8>) -> Self {
        Self { suffix: Some(suffix), bytes }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub command: String,
    pub code_version: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub threads: Option<usize>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputRecord>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    append(out, ".manifest.json")
}

fn append(path: &Path, tail: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(tail);
    PathBuf::from(s)
}

pub fn sibling_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}-{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{suffix}"),
    };
    out.with_file_name(name)
}

fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Fails early when an output would overwrite an existing file without `--force`.
pub fn check_targets(settings: &Settings, suffixes: &[&str]) -> Result<()> {
    let Some(out) = &settings.out else { return Ok(()) };
    if settings.force {
        return Ok(());
    }
    let targets = std::iter::once(out.clone())
        .chain(std::iter::once(manifest_path(out)))
        .chain(suffixes.iter().map(|s| sibling_path(out, s)));
    for path in targets {
        if path.exists() {
            return Err(HarnessError::config(format!("{} exists (use --force to overwrite)", path.display())));
        }
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| HarnessError::io(path, e))
}

fn rename(from: &Path, to: &Path) -> Result<()> {
    fs::rename(from, to).map_err(|e| HarnessError::io(to, e))
}

/// Writes the artifacts and the manifest, or the primary artifact to stdout
/// when no `--out` is set.
pub fn emit<C: Serialize>(
    command: &str,
    config: &C,
    settings: &Settings,
    started: DateTime<Utc>,
    artifacts: Vec<Artifact>,
) -> Result<()> {
    let Some(out) = &settings.out else {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        for a in artifacts.iter().filter(|a| a.suffix.is_none()) {
            lock.write_all(&a.bytes).map_err(|e| HarnessError::io("<stdout>", e))?;
        }
        return Ok(());
    };
    let suffixes: Vec<&str> = artifacts.iter().filter_map(|a| a.suffix).collect();
    check_targets(settings, &suffixes)?;
    let mut records = Vec::with_capacity(artifacts.len());
    let mut staged = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        let path = match a.suffix {
            None => out.clone(),
            Some(s) => sibling_path(out, s),
        };
        let tmp = append(&path, ".tmp");
        write_file(&tmp, &a.bytes)?;
        records.push(OutputRecord {
            path: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            bytes: a.bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&a.bytes)),
        });
        staged.push((tmp, path));
    }
    let manifest = RunManifest {
        schema: SCHEMA_VERSION,
        command: command.to_owned(),
        code_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_owned(),
        config: serde_json::to_value(config).expect("configs serialize"),
        config_hash: config_hash(config),
        threads: settings.threads,
        started: timestamp(started),
        finished: timestamp(Utc::now()),
        outputs: records,
    };
    let mpath = manifest_path(out);
    let mtmp = append(&mpath, ".tmp");
    let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    text.push(b'\n');
    write_file(&mtmp, &text)?;
    rename(&mtmp, &mpath)?;
    for (tmp, path) in staged {
        rename(&tmp, &path)?;
    }
    Ok(())
}

/// JSON document with the schema version and a kind tag around a report.
pub fn json_document<T: Serialize>(kind: &str, data: &T) -> Vec<u8> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        schema: u32,
        kind: &'a str,
        data: &'a T,
    }
    let mut v = serde_json::to_vec_pretty(&Doc { schema: SCHEMA_VERSION, kind, data }).expect("reports serialize");
    v.push(b'\n');
    v
}

/// CSV with a header row; every record must have the header's length.
pub fn csv_table<R: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: R) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
