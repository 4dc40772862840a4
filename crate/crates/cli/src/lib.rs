//! Library side of the `spvote` binary: run configurations, manifests, exit
//! codes and the experiment helpers shared by the subcommands.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub mod commands;
pub mod experiment;
pub mod methods;

pub use methods::Method;

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum Fail {
    /// Bad flags, config file, environment or unreadable input path (exit 2).
    Config(anyhow::Error),
    /// Input data that parses badly or violates a model invariant (exit 3).
    Data(anyhow::Error),
    /// Well-formed request the library refuses: guards, unsupported rules (exit 4).
    Capability(anyhow::Error),
}

impl Fail {
    pub fn code(&self) -> u8 {
        match self {
            Fail::Config(_) => 2,
            Fail::Data(_) => 3,
            Fail::Capability(_) => 4,
        }
    }

    pub fn config(e: impl Into<anyhow::Error>) -> Self {
        Fail::Config(e.into())
    }

    pub fn data(e: impl Into<anyhow::Error>) -> Self {
        Fail::Data(e.into())
    }

    fn inner(&self) -> &anyhow::Error {
        match self {
            Fail::Config(e) | Fail::Data(e) | Fail::Capability(e) => e,
        }
    }
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.inner())
    }
}

impl std::error::Error for Fail {}

impl From<spvote_core::Error> for Fail {
    fn from(e: spvote_core::Error) -> Self {
        use spvote_core::Error as E;
        match e {
            E::InvalidGeometry { .. }
            | E::InvalidPlan(_)
            | E::InvalidDispersion(_)
            | E::InvalidParams(_)
            | E::EmptyGrid
            | E::InvalidDistance { .. }
            | E::InvalidT { .. } => Fail::Config(e.into()),
            E::UnsupportedRuleForFormat { .. } | E::InstanceTooLarge(_) => Fail::Capability(e.into()),
            _ => Fail::Data(e.into()),
        }
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, Fail>;

/// A subcommand's fully resolved configuration.
pub trait Command: Serialize + DeserializeOwned + Default {
    const NAME: &'static str;

    /// Makes the config self-contained (absolute paths, implied files) before
    /// it is recorded. Not re-applied on replay.
    fn normalize(&mut self) -> CmdResult {
        Ok(())
    }

    /// Writes every output into `out`; the manifest is added by [`execute`].
    fn run(&self, out: &Path) -> CmdResult;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: Value,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Runs `cfg` into `out` and records the manifest next to its outputs.
pub fn execute<C: Command>(cfg: &C, out: &Path) -> CmdResult {
    fs::create_dir_all(out).map_err(|e| Fail::config(anyhow!("cannot create {}: {e}", out.display())))?;
    cfg.run(out)?;
    let manifest = Manifest {
        command: C::NAME.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::to_value(cfg).expect("config serializes"),
    };
    write_text(out, MANIFEST_FILE, &format!("{}\n", serde_json::to_string_pretty(&manifest).expect("manifest serializes")))
}

/// Shallow-merges the non-null keys of `layer` into `base`.
fn overlay(base: &mut Value, layer: Value, what: &str) -> CmdResult {
    let Value::Object(layer) = layer else {
        return Err(Fail::config(anyhow!("{what} must be a JSON object")));
    };
    let base = base.as_object_mut().expect("configs serialize to objects");
    for (k, v) in layer {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    Ok(())
}

/// Defaults, then `SPVOTE_SEED`, then the config file, then flags (`null`s skipped).
pub fn resolve<C: Command>(config_file: Option<&Path>, flags: Value) -> CmdResult<C> {
    let mut merged = serde_json::to_value(C::default()).expect("config serializes");
    if let Ok(raw) = std::env::var("SPVOTE_SEED") {
        if merged.get("seed").is_some() {
            let seed: u64 = raw
                .trim()
                .parse()
                .map_err(|_| Fail::config(anyhow!("SPVOTE_SEED={raw:?} is not an unsigned integer")))?;
            merged["seed"] = seed.into();
        }
    }
    if let Some(path) = config_file {
        let text = read_input(path)?;
        let layer: Value = serde_json::from_str(&text)
            .map_err(|e| Fail::config(anyhow!("config file {}: {e}", path.display())))?;
        overlay(&mut merged, layer, "config file")?;
    }
    overlay(&mut merged, flags, "flags")?;
    let mut cfg: C = serde_json::from_value(merged).map_err(|e| Fail::config(anyhow!("{} config: {e}", C::NAME)))?;
    cfg.normalize()?;
    Ok(cfg)
}

/// Reads a manifest and returns its command name and raw config.
pub fn read_manifest(path: &Path) -> CmdResult<Manifest> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| Fail::config(anyhow!("manifest {}: {e}", path.display())))
}

/// Re-runs a manifest's config verbatim.
pub fn replay<C: Command>(manifest: &Manifest, out: &Path) -> CmdResult {
    let cfg: C = serde_json::from_value(manifest.config.clone())
        .map_err(|e| Fail::config(anyhow!("manifest config for {}: {e}", C::NAME)))?;
    execute(&cfg, out)
}

/// Input files that cannot be opened are configuration errors.
pub fn read_input(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| Fail::config(anyhow!("cannot read {}: {e}", path.display())))
}

pub fn write_text(dir: &Path, name: &str, contents: &str) -> CmdResult {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Fail::config(anyhow!("cannot write {}: {e}", path.display())))
}

/// Absolute form of `p` without touching the filesystem.
pub fn absolute(p: &Path) -> CmdResult<PathBuf> {
    std::path::absolute(p).map_err(|e| Fail::config(anyhow!("bad path {}: {e}", p.display())))
}
