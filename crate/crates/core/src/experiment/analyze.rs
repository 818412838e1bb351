//! `analyze`: kink statistics of saved sample files.
//!
//! Each input is a sample text file, optionally with its JSON sidecar. The bootstrap seed is
//! the sidecar seed unless the config overrides it, so analysing the samples written by `run`
//! reproduces its correlator files byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{correlator_csv, sample_statistics};
use super::{create_dir, load_config, one_or_many, output_dir, schema_version, write_file, write_manifest, Clock, Outcome, UnitRecord};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::samples::{SampleMeta, SampleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    /// Sample files, with or without the `.txt` extension.
    #[serde(deserialize_with = "one_or_many")]
    pub samples: Vec<PathBuf>,
    /// Coupling sign convention; taken from the sidecar when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default = "thousand")]
    pub n_resamples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn thousand() -> usize {
    1000
}

pub const SUMMARY_HEADER: &str = "index,file,L,n_samples,n_batches,n_bar,kappa1,kappa2,kappa3,ci_kappa1_lo,ci_kappa1_hi,ci_kappa2_lo,ci_kappa2_hi,ci_kappa3_lo,ci_kappa3_hi,p_gs";

fn load(path: &Path, seed: Option<u64>) -> Result<SampleSet> {
    let stem = if path.extension().is_some_and(|e| e == "txt" || e == "json") { path.with_extension("") } else { path.to_path_buf() };
    let mut set = if stem.with_extension("json").exists() {
        SampleSet::load(&stem)?
    } else {
        let txt = stem.with_extension("txt");
        let file = std::fs::File::open(&txt).map_err(|e| Error::io(&txt, e))?;
        let meta = SampleMeta { sampler: "unknown".into(), seed: 0, params: serde_json::Value::Null };
        SampleSet::read_text(std::io::BufReader::new(file), &txt, meta)?
    };
    if let Some(s) = seed {
        set.meta.seed = s;
    }
    Ok(set)
}

fn j_sign(cfg: &AnalyzeConfig, set: &SampleSet) -> Result<f64> {
    cfg.j
        .or_else(|| set.meta.params.get("j").and_then(serde_json::Value::as_f64))
        .map(f64::signum)
        .filter(|s| *s != 0.0)
        .ok_or_else(|| Error::Config("coupling sign unknown: set \"j\" in the config".into()))
}

fn analyze_one(cfg: &AnalyzeConfig, base: &Path, index: usize, out: &Path) -> Result<(String, Vec<PathBuf>)> {
    let path = base.join(&cfg.samples[index]);
    let set = load(&path, cfg.seed)?;
    let sg = j_sign(cfg, &set)?;
    let l = set.len();
    let r_max = cfg.r_max.unwrap_or(l / 2).min(l.saturating_sub(1));
    let (summary, p_gs, corr) = sample_statistics(&set, sg, cfg.n_resamples, r_max)?;
    let corr_path = out.join(format!("correlator_{index:04}.csv"));
    write_file(&corr_path, &correlator_csv(&corr))?;
    let json_path = out.join(format!("summary_{index:04}.json"));
    write_file(&json_path, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    let row = [
        index.to_string(),
        cfg.samples[index].display().to_string().replace(',', "_"),
        l.to_string(),
        set.n_samples().to_string(),
        set.n_batches().to_string(),
        num(summary.kappa1),
        num(summary.kappa1),
        num(summary.kappa2),
        num(summary.kappa3),
        num(summary.ci95_kappa1.lo),
        num(summary.ci95_kappa1.hi),
        num(summary.ci95_kappa2.lo),
        num(summary.ci95_kappa2.hi),
        num(summary.ci95_kappa3.lo),
        num(summary.ci95_kappa3.hi),
        num(p_gs),
    ]
    .join(",");
    Ok((row, vec![corr_path, json_path]))
}

pub fn analyze(cfg: &AnalyzeConfig, base: &Path, out: &Path, note: Option<&str>) -> Result<Outcome> {
    let clock = Clock::start();
    if cfg.samples.is_empty() {
        return Err(Error::Config("no sample files given".into()));
    }
    if cfg.n_resamples == 0 || cfg.r_max == Some(0) {
        return Err(Error::Config("n_resamples and r_max must be positive".into()));
    }
    create_dir(out)?;
    let mut rows = format!("{SUMMARY_HEADER}\n");
    let mut outputs = Vec::new();
    let mut units = Vec::new();
    let mut failures = 0;
    for i in 0..cfg.samples.len() {
        let status = match analyze_one(cfg, base, i, out) {
            Ok((row, files)) => {
                rows += &row;
                rows.push('\n');
                outputs.extend(files);
                Ok(())
            }
            Err(e) => {
                failures += 1;
                Err(e.to_string())
            }
        };
        units.push(UnitRecord::new(i, cfg.samples[i].display().to_string(), cfg.seed, &status));
    }
    let summary = out.join("summary.csv");
    write_file(&summary, &rows)?;
    outputs.insert(0, summary);
    let resolved = AnalyzeConfig {
        samples: cfg.samples.iter().map(|p| absolute(&base.join(p))).collect(),
        out: None,
        ..cfg.clone()
    };
    outputs.push(write_manifest(out, "analyze", &resolved, 1, &clock, note, &units, &outputs)?);
    Ok(Outcome { failures, outputs })
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

pub fn analyze_file(config: &Path, out: Option<&Path>) -> Result<Outcome> {
    let loaded = load_config::<AnalyzeConfig>(config)?;
    let out = output_dir(out, loaded.config.out.as_deref(), &loaded.base)?;
    analyze(&loaded.config, &loaded.base, &out, loaded.note.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSpec;
    use crate::mc::{run_sa, SamplerRequest, SimulatedAnnealing};
    use crate::stats::summarize;

    #[test]
    fn empty_input_is_an_explicit_failure() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("empty.txt"), "").unwrap();
        let cfg = AnalyzeConfig {
            schema_version: 1,
            samples: vec!["empty.txt".into()],
            j: Some(-1.0),
            n_resamples: 10,
            seed: None,
            r_max: None,
            out: None,
        };
        let out = dir.path().join("out");
        let o = analyze(&cfg, dir.path(), &out, None).unwrap();
        assert_eq!(o.failures, 1);
        let m = std::fs::read_to_string(out.join("manifest.json")).unwrap();
        assert!(m.contains("holds no samples"), "{m}");
    }

    #[test]
    fn bootstrap_respects_recorded_batches() {
        let dir = tempfile::tempdir().unwrap();
        let mut req = SamplerRequest::new(ChainSpec::uniform(16, -1.0).unwrap(), 120, 5);
        req.batch_size = 30;
        let set = run_sa(&req, &SimulatedAnnealing::new(5).unwrap()).unwrap();
        set.save(&dir.path().join("s")).unwrap();
        // Manual split into the same four batches.
        let batches: Vec<Vec<Vec<i8>>> = set.samples().map(<[i8]>::to_vec).collect::<Vec<_>>().chunks(30).map(<[_]>::to_vec).collect();
        let manual = SampleSet::new(16, batches, set.meta.clone()).unwrap();
        let expect = summarize(&manual, -1.0, 200, set.meta.seed).unwrap();
        let cfg = AnalyzeConfig {
            schema_version: 1,
            samples: vec!["s.txt".into()],
            j: Some(-1.0),
            n_resamples: 200,
            seed: None,
            r_max: None,
            out: None,
        };
        let out = dir.path().join("out");
        assert_eq!(analyze(&cfg, dir.path(), &out, None).unwrap().failures, 0);
        let got: crate::stats::KinkSummary =
            serde_json::from_str(&std::fs::read_to_string(out.join("summary_0000.json")).unwrap()).unwrap();
        assert_eq!(got, expect);
        assert_eq!(got.n_batches, 4);
    }
}
