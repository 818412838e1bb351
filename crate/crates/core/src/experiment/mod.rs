//! Experiment harness behind the command line: JSON configs, worker pool, result files
//! and replayable manifests.
//!
//! Every command writes `manifest.json` into its output directory. A manifest holds the
//! fully resolved config, so passing it back as `--config` repeats the run; all CSV output
//! is then bit-identical.

pub mod analyze;
pub mod fit;
pub mod run;
pub mod shim;
pub mod theory;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{Schedule, SchedulePoint};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_VERSION: u32 = 1;
pub const WORKERS_ENV: &str = "KZSIM_WORKERS";

pub(crate) fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleSpec {
    Linear { beta_ghz: f64 },
    Quadratic { beta_ghz: f64 },
    /// CSV table with header `s,gamma_ghz,jcal_ghz`, relative to the config file.
    Tabulated { path: PathBuf },
    /// Inline knots; tabulated files are stored this way in manifests.
    Table { points: Vec<SchedulePoint> },
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self::Linear { beta_ghz: 1.0 }
    }
}

impl ScheduleSpec {
    /// Builds the schedule and the self-contained spec to record for it.
    pub fn resolve(&self, base: &Path) -> Result<(Schedule, ScheduleSpec)> {
        let sch = match self {
            Self::Linear { beta_ghz } => Schedule::linear(*beta_ghz),
            Self::Quadratic { beta_ghz } => Schedule::quadratic(*beta_ghz),
            Self::Tabulated { path } => Schedule::from_csv_path(&base.join(path)),
            Self::Table { points } => Schedule::tabulated(points),
        }
        .map_err(config_err)?;
        let spec = match sch.table() {
            Some(points) => Self::Table { points },
            None => self.clone(),
        };
        Ok((sch, spec))
    }
}

/// A config read from disk: either a plain config or the `config` field of a manifest.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub config: T,
    pub base: PathBuf,
    pub note: Option<String>,
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut note = None;
    let value = match value.get("manifest_version") {
        Some(_) => {
            let tool = value.get("tool_version").and_then(|v| v.as_str()).unwrap_or("unknown");
            note = Some(format!("replaying manifest written by kzsim {tool}"));
            value.get("config").cloned().ok_or_else(|| Error::Config(format!("{}: manifest without config", path.display())))?
        }
        None => value,
    };
    let version = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(u64::from(SCHEMA_VERSION));
    if version > u64::from(SCHEMA_VERSION) {
        return Err(Error::Config(format!(
            "{}: schema_version {version} is newer than this build ({SCHEMA_VERSION})",
            path.display()
        )));
    }
    if version < u64::from(SCHEMA_VERSION) {
        let msg = format!("config schema v{version} read as v{SCHEMA_VERSION}");
        note = Some(note.map_or(msg.clone(), |n| format!("{n}; {msg}")));
    }
    let config = serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base, note })
}

pub(crate) fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Output directory from the command line, else from the config.
pub fn output_dir(cli: Option<&Path>, config: Option<&Path>, base: &Path) -> Result<PathBuf> {
    match (cli, config) {
        (Some(p), _) => Ok(p.to_path_buf()),
        (None, Some(p)) => Ok(base.join(p)),
        (None, None) => Err(Error::Config("no output directory: pass --out or set \"out\"".into())),
    }
}

/// Errors that should end the process with the configuration exit status.
pub fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Json(_))
}

/// Worker count from `KZSIM_WORKERS`, else the available parallelism.
pub fn workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, usize::from)),
    }
}

pub fn pool(n: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Result of a command: how many units failed and what was written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub failures: usize,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub index: usize,
    pub label: String,
    pub seed: Option<u64>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl UnitRecord {
    pub fn new(index: usize, label: String, seed: Option<u64>, result: &std::result::Result<(), String>) -> Self {
        Self {
            index,
            label,
            seed,
            status: if result.is_ok() { "ok".into() } else { "error".into() },
            error: result.as_ref().err().cloned(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    manifest_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    command: &'a str,
    config: &'a C,
    workers: usize,
    started_unix: u64,
    wall_clock_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
    units: &'a [UnitRecord],
    outputs: Vec<String>,
}

/// Wall-clock bookkeeping for a manifest.
pub struct Clock {
    start: Instant,
    unix: u64,
}

impl Clock {
    pub fn start() -> Self {
        Self { start: Instant::now(), unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()) }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn write_manifest<C: Serialize>(
    out: &Path,
    command: &str,
    config: &C,
    workers: usize,
    clock: &Clock,
    note: Option<&str>,
    units: &[UnitRecord],
    outputs: &[PathBuf],
) -> Result<PathBuf> {
    let path = out.join("manifest.json");
    let m = Manifest {
        manifest_version: MANIFEST_VERSION,
        tool: "kzsim",
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        workers,
        started_unix: clock.unix,
        wall_clock_seconds: clock.start.elapsed().as_secs_f64(),
        note,
        units,
        outputs: outputs
            .iter()
            .map(|p| p.strip_prefix(out).unwrap_or(p).display().to_string())
            .collect(),
    };
    std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub(crate) fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

pub(crate) fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Accepts either a single value or a list.
pub(crate) fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Deserialize, Serialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Toy {
        #[serde(default = "schema_version")]
        schema_version: u32,
        x: f64,
    }

    #[test]
    fn plain_and_manifest_configs_load_alike() {
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("c.json");
        std::fs::write(&plain, r#"{"x": 2.5}"#).unwrap();
        let a: Loaded<Toy> = load_config(&plain).unwrap();
        assert_eq!(a.config.x, 2.5);
        assert!(a.note.is_none());
        let out = dir.path().join("o");
        create_dir(&out).unwrap();
        let m = write_manifest(&out, "toy", &a.config, 1, &Clock::start(), None, &[], &[]).unwrap();
        let b: Loaded<Toy> = load_config(&m).unwrap();
        assert_eq!(b.config, a.config);
        assert!(b.note.unwrap().contains("replaying"));
    }

    #[test]
    fn unknown_keys_and_future_schemas_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"x": 1, "y": 2}"#).unwrap();
        assert!(is_config_error(&load_config::<Toy>(&p).unwrap_err()));
        std::fs::write(&p, r#"{"x": 1, "schema_version": 99}"#).unwrap();
        assert!(is_config_error(&load_config::<Toy>(&p).unwrap_err()));
        std::fs::write(&p, "{not json").unwrap();
        assert!(is_config_error(&load_config::<Toy>(&p).unwrap_err()));
    }

    #[test]
    fn tabulated_schedules_are_embedded() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("s.csv"), "s,gamma_ghz,jcal_ghz\n0,2,0\n0.5,1,1\n1,0,2\n").unwrap();
        let (_, spec) = ScheduleSpec::Tabulated { path: "s.csv".into() }.resolve(dir.path()).unwrap();
        match spec {
            ScheduleSpec::Table { points } => assert_eq!(points.len(), 3),
            other => panic!("{other:?}"),
        }
        let err = ScheduleSpec::Linear { beta_ghz: -1.0 }.resolve(dir.path()).unwrap_err();
        assert!(is_config_error(&err));
    }
}
