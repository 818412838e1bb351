//! `fit`: power-law or Landau-Zener fits over columns of any result CSV.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{create_dir, load_config, output_dir, schema_version, write_file, write_manifest, Clock, Outcome, UnitRecord};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::theory::{fit_lz_exponent, fit_power_law, FitResult, ALL, LZ_P_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    /// `log y = slope·log x + c`
    PowerLaw,
    /// `log(1 − y) = −a·x + c`, y a ground-state probability.
    Lz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub input: PathBuf,
    pub kind: FitKind,
    pub x: String,
    pub y: String,
    #[serde(default)]
    pub group_by: Vec<String>,
    /// Range of x kept in the fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    #[serde(default = "lz_window")]
    pub p_window: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn lz_window() -> (f64, f64) {
    LZ_P_WINDOW
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rd.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        rows.push(rec.map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect());
    }
    Ok(Table { header, rows })
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse { path: path.to_path_buf(), line, msg: format!("{other:?}") },
    }
}

fn column(t: &Table, name: &str) -> Result<usize> {
    t.header.iter().position(|h| h == name).ok_or_else(|| Error::Config(format!("no column {name:?}")))
}

fn do_fit(kind: FitKind, pts: &[(f64, f64)], window: (f64, f64), p_window: (f64, f64)) -> Result<(FitResult, f64)> {
    match kind {
        FitKind::PowerLaw => fit_power_law(pts, window).map(|f| (f, f.slope)),
        FitKind::Lz => fit_lz_exponent(pts, p_window, window).map(|f| (f, -f.slope)),
    }
}

pub fn fit(cfg: &FitConfig, base: &Path, out: &Path, note: Option<&str>) -> Result<Outcome> {
    let clock = Clock::start();
    let input = base.join(&cfg.input);
    let table = read_table(&input)?;
    let (xi, yi) = (column(&table, &cfg.x)?, column(&table, &cfg.y)?);
    let gi: Vec<usize> = cfg.group_by.iter().map(|g| column(&table, g)).collect::<Result<_>>()?;
    let window = cfg.window.unwrap_or(ALL);

    let mut groups: Vec<(Vec<String>, Vec<(f64, f64)>)> = Vec::new();
    for (n, row) in table.rows.iter().enumerate() {
        let key: Vec<String> = gi.iter().map(|&i| row.get(i).cloned().unwrap_or_default()).collect();
        let cell = |i: usize| row.get(i).map(String::as_str).unwrap_or("");
        if cell(xi).is_empty() || cell(yi).is_empty() {
            continue;
        }
        let parse = |i: usize| {
            cell(i).parse::<f64>().map_err(|e| Error::Parse { path: input.clone(), line: n + 2, msg: format!("{:?}: {e}", cell(i)) })
        };
        let p = (parse(xi)?, parse(yi)?);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(p),
            None => groups.push((key, vec![p])),
        }
    }

    let mut header: Vec<String> = cfg.group_by.clone();
    header.extend(["kind", "x", "y", "n_points", "value", "stderr", "slope", "intercept", "window_lo", "window_hi"].map(String::from));
    let mut rows = header.join(",") + "\n";
    let mut units = Vec::new();
    let mut failures = 0;
    let kind = match cfg.kind {
        FitKind::PowerLaw => "power-law",
        FitKind::Lz => "lz",
    };
    for (i, (key, pts)) in groups.iter().enumerate() {
        let status = match do_fit(cfg.kind, pts, window, cfg.p_window) {
            Ok((f, value)) => {
                let mut cells = key.clone();
                cells.extend([
                    kind.to_string(),
                    cfg.x.clone(),
                    cfg.y.clone(),
                    f.n_points.to_string(),
                    num(value),
                    num(f.slope_stderr()),
                    num(f.slope),
                    num(f.intercept),
                    num(window.0),
                    num(window.1),
                ]);
                rows += &(cells.join(",") + "\n");
                Ok(())
            }
            Err(e) => {
                failures += 1;
                Err(e.to_string())
            }
        };
        units.push(UnitRecord::new(i, key.join(" "), None, &status));
    }
    create_dir(out)?;
    let path = out.join("fits.csv");
    write_file(&path, &rows)?;
    let resolved = FitConfig { input: std::path::absolute(&input).unwrap_or(input), out: None, ..cfg.clone() };
    let manifest = write_manifest(out, "fit", &resolved, 1, &clock, note, &units, std::slice::from_ref(&path))?;
    Ok(Outcome { failures, outputs: vec![path, manifest] })
}

pub fn fit_file(config: &Path, out: Option<&Path>) -> Result<Outcome> {
    let loaded = load_config::<FitConfig>(config)?;
    let out = output_dir(out, loaded.config.out.as_deref(), &loaded.base)?;
    fit(&loaded.config, &loaded.base, &out, loaded.note.as_deref())
}
