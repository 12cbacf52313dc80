//! On-disk store of compiled programs, one directory per program name.
//!
//! ```text
//! <root>/<percent-encoded name>/program.zvm   canonical program text
//! <root>/<percent-encoded name>/meta          key: value lines
//! <root>/<percent-encoded name>/data          reference data, if any
//! <root>/<percent-encoded name>/report        candidate table from the compile
//! ```

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::parser::NormalizedSpec;
use crate::values::{parse_value, TypeClass, Value};
use crate::vm::{parse_program, Callable, CompiledProgram, InstructionDescriptor, ProgramResolver};

pub const DEFAULT_ROOT: &str = "./zoea-registry";
pub const ROOT_ENV: &str = "ZOEA_REGISTRY";

const NAME_SET: &AsciiSet = &NON_ALPHANUMERIC.remove(b'_').remove(b'-');
const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub name: String,
    pub compiled: CompiledProgram,
    pub data: Option<Value>,
    pub input: TypeClass,
    pub output: TypeClass,
    pub source_digest: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub report: Option<String>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("storage error at {path}: {source}")]
    Storage { path: PathBuf, source: io::Error },
    #[error("program {0:?} not found in registry")]
    NotFound(String),
    #[error("registry entry {name:?} is unreadable: {detail}")]
    Corrupt { name: String, detail: String },
    #[error("dangling composition: {name:?} calls missing program(s) {}", missing.join(", "))]
    DanglingComposition { name: String, missing: Vec<String> },
    #[error("used program(s) not compiled: {}", .0.join(", "))]
    MissingUses(Vec<String>),
}

impl RegistryError {
    fn storage(path: &Path, source: io::Error) -> Self {
        RegistryError::Storage { path: path.to_path_buf(), source }
    }
}

/// Hex SHA-256 of a source text.
pub fn source_digest(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Directory name for a program name.
pub fn encode_name(name: &str) -> String {
    utf8_percent_encode(name, NAME_SET).to_string()
}

pub fn decode_name(dir: &str) -> Option<String> {
    percent_decode_str(dir).decode_utf8().ok().map(|s| s.into_owned())
}

/// Root directory from an explicit flag, then `ZOEA_REGISTRY`, then the default.
pub fn resolve_root(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_ROOT)),
    }
}

/// A registry root. Loaded programs are cached; `store` refreshes the cache.
#[derive(Debug)]
pub struct Registry {
    root: PathBuf,
    cache: RwLock<HashMap<String, Arc<Callable>>>,
}

impl Registry {
    pub fn open(root: impl Into<PathBuf>) -> Registry {
        Registry { root: root.into(), cache: RwLock::new(HashMap::new()) }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_dir(&self, name: &str) -> PathBuf {
        self.root.join(encode_name(name))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entry_dir(name).join("program.zvm").is_file()
    }

    /// Writes `entry`, replacing any program of the same name.
    pub fn store(&self, entry: &RegistryEntry) -> Result<(), RegistryError> {
        let missing: Vec<String> = entry
            .compiled
            .call_targets()
            .into_iter()
            .filter(|t| t != &entry.name && !self.contains(t))
            .collect();
        if !missing.is_empty() {
            return Err(RegistryError::DanglingComposition { name: entry.name.clone(), missing });
        }
        fs::create_dir_all(&self.root).map_err(|e| RegistryError::storage(&self.root, e))?;
        let _lock = self.lock()?;
        let dir = self.entry_dir(&entry.name);
        fs::create_dir_all(&dir).map_err(|e| RegistryError::storage(&dir, e))?;
        write_atomic(&dir.join("program.zvm"), &entry.compiled.canonical_form())?;
        write_atomic(&dir.join("meta"), &render_meta(entry))?;
        let optional = [("data", entry.data.as_ref().map(|d| d.render() + "\n")), ("report", entry.report.clone())];
        for (file, content) in optional {
            let path = dir.join(file);
            match content {
                Some(text) => write_atomic(&path, &text)?,
                None => match fs::remove_file(&path) {
                    Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(RegistryError::storage(&path, e)),
                    _ => {}
                },
            }
        }
        self.cache.write().unwrap().remove(&entry.name);
        Ok(())
    }

    fn lock(&self) -> Result<File, RegistryError> {
        let path = self.root.join(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| RegistryError::storage(&path, e))?;
        file.lock().map_err(|e| RegistryError::storage(&path, e))?;
        Ok(file)
    }

    pub fn load(&self, name: &str) -> Result<RegistryEntry, RegistryError> {
        let dir = self.entry_dir(name);
        let program_path = dir.join("program.zvm");
        let text = match fs::read_to_string(&program_path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(RegistryError::NotFound(name.to_string())),
            Err(e) => return Err(RegistryError::storage(&program_path, e)),
        };
        let corrupt = |detail: String| RegistryError::Corrupt { name: name.to_string(), detail };
        let compiled = parse_program(&text).map_err(|e| corrupt(e.to_string()))?;
        let meta_path = dir.join("meta");
        let meta = fs::read_to_string(&meta_path).map_err(|e| RegistryError::storage(&meta_path, e))?;
        let fields: HashMap<&str, &str> =
            meta.lines().filter_map(|l| l.split_once(':')).map(|(k, v)| (k.trim(), v.trim())).collect();
        let class = |key: &str| {
            fields.get(key).and_then(|v| TypeClass::from_name(v)).ok_or_else(|| corrupt(format!("bad {key} in meta")))
        };
        let data = match read_optional(&dir.join("data"))? {
            Some(t) => Some(parse_value(t.trim_end()).map_err(|e| corrupt(e.to_string()))?),
            None => None,
        };
        Ok(RegistryEntry {
            name: name.to_string(),
            compiled,
            data,
            input: class("input")?,
            output: class("output")?,
            source_digest: fields.get("digest").unwrap_or(&"").to_string(),
            created: fields.get("created").and_then(|c| c.parse().ok()).unwrap_or(0),
            report: read_optional(&dir.join("report"))?,
        })
    }

    /// Stored program names, sorted.
    pub fn list(&self) -> Result<Vec<String>, RegistryError> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(RegistryError::storage(&self.root, e)),
        };
        let mut names = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| RegistryError::storage(&self.root, e))?;
            if !entry.path().join("program.zvm").is_file() {
                continue;
            }
            if let Some(name) = entry.file_name().to_str().and_then(decode_name) {
                names.push(name);
            }
        }
        names.sort();
        Ok(names)
    }

    /// One callable descriptor per used program.
    pub fn resolve_uses(&self, spec: &NormalizedSpec) -> Result<Vec<InstructionDescriptor>, RegistryError> {
        let mut out = Vec::new();
        let mut missing = Vec::new();
        for name in &spec.uses {
            match self.load(name) {
                Ok(e) => out.push(InstructionDescriptor::call(name, e.input, e.output)),
                Err(RegistryError::NotFound(_)) => missing.push(name.clone()),
                Err(e) => return Err(e),
            }
        }
        if !missing.is_empty() {
            return Err(RegistryError::MissingUses(missing));
        }
        Ok(out)
    }

    pub fn callable(&self, name: &str) -> Result<Arc<Callable>, RegistryError> {
        if let Some(c) = self.cache.read().unwrap().get(name) {
            return Ok(c.clone());
        }
        let entry = self.load(name)?;
        let c = Arc::new(Callable { name: entry.name, program: entry.compiled, data: entry.data });
        self.cache.write().unwrap().insert(name.to_string(), c.clone());
        Ok(c)
    }
}

impl ProgramResolver for Registry {
    fn resolve(&self, name: &str) -> Option<Arc<Callable>> {
        self.callable(name).ok()
    }
}

fn render_meta(e: &RegistryEntry) -> String {
    format!(
        "name: {}\ninput: {}\noutput: {}\ndigest: {}\ncreated: {}\ncalls: {}\n",
        e.name,
        e.input.name(),
        e.output.name(),
        e.source_digest,
        e.created,
        e.compiled.call_targets().join(",")
    )
}

fn read_optional(path: &Path) -> Result<Option<String>, RegistryError> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(RegistryError::storage(path, e)),
    }
}

fn write_atomic(path: &Path, content: &str) -> Result<(), RegistryError> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(|e| RegistryError::storage(&tmp, e))?;
    f.write_all(content.as_bytes()).map_err(|e| RegistryError::storage(&tmp, e))?;
    f.sync_all().map_err(|e| RegistryError::storage(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| RegistryError::storage(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_through_directory_encoding() {
        for name in ["sales_tax", "a b/c", "..", "日付"] {
            let enc = encode_name(name);
            assert!(!enc.contains('/') && enc != "..");
            assert_eq!(decode_name(&enc).as_deref(), Some(name));
        }
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(source_digest("").len(), 64);
        assert_eq!(&source_digest("abc")[..8], "ba7816bf");
    }
}
