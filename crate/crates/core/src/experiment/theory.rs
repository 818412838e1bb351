//! `theory`: closed-form predictions on a grid, for overlaying on measured curves.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{create_dir, load_config, one_or_many, output_dir, schema_version, write_file, write_manifest, Clock, Outcome, ScheduleSpec};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::theory::{cumulant_ratio_targets, lz_rate, predict_density, predict_lz};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(deserialize_with = "one_or_many")]
    pub l: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub j: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub t_a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

pub const THEORY_HEADER: &str = "L,J,t_a,s_c,b,n_bar,kappa2_ratio,kappa3_ratio,lz_a,p_gs_lz";

pub fn theory(cfg: &TheoryConfig, base: &Path, out: &Path, note: Option<&str>) -> Result<Outcome> {
    let clock = Clock::start();
    if cfg.l.is_empty() || cfg.j.is_empty() || cfg.t_a.is_empty() {
        return Err(Error::Config("l, j and t_a must be non-empty".into()));
    }
    let (schedule, spec) = cfg.schedule.resolve(base)?;
    let (r2, r3) = cumulant_ratio_targets();
    let mut rows = format!("{THEORY_HEADER}\n");
    for &l in &cfg.l {
        for &j in &cfg.j {
            let kz = schedule.kz_constants(j).map_err(super::config_err)?;
            let a = lz_rate(kz.b, l).map_err(super::config_err)?;
            for &t in &cfg.t_a {
                let n = predict_density(kz.b, t).map_err(super::config_err)?;
                let p = predict_lz(kz.b, l, t)?;
                rows += &format!("{l},{},{},{},{},{},{},{},{},{}\n", num(j), num(t), num(kz.s_c), num(kz.b), num(n), num(r2), num(r3), num(a), num(p));
            }
        }
    }
    create_dir(out)?;
    let path = out.join("theory.csv");
    write_file(&path, &rows)?;
    let resolved = TheoryConfig { schedule: spec, out: None, ..cfg.clone() };
    let manifest = write_manifest(out, "theory", &resolved, 1, &clock, note, &[], std::slice::from_ref(&path))?;
    Ok(Outcome { failures: 0, outputs: vec![path, manifest] })
}

pub fn theory_file(config: &Path, out: Option<&Path>) -> Result<Outcome> {
    let loaded = load_config::<TheoryConfig>(config)?;
    let out = output_dir(out, loaded.config.out.as_deref(), &loaded.base)?;
    theory(&loaded.config, &loaded.base, &out, loaded.note.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_schedule_row() {
        let dir = tempfile::tempdir().unwrap();
        let cfg: TheoryConfig = serde_json::from_str(r#"{"l": 16, "j": -1, "t_a": [1, 4]}"#).unwrap();
        theory(&cfg, dir.path(), dir.path(), None).unwrap();
        let text = std::fs::read_to_string(dir.path().join("theory.csv")).unwrap();
        let row: Vec<f64> = text.lines().nth(2).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        let b = std::f64::consts::FRAC_PI_4;
        assert!((row[3] - 0.5).abs() < 1e-9);
        assert!((row[4] - b).abs() < 1e-9);
        let n = 1.0 / (2.0 * std::f64::consts::PI * (2.0 * b).sqrt() * 2.0);
        assert!((row[5] - n).abs() < 1e-9 * n);
    }
}
