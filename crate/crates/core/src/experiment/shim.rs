//! `shim`: calibrate a sampler against hidden disorder and record the convergence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::DisorderConfig;
use super::{create_dir, load_config, output_dir, schema_version, workers, pool, write_file, write_manifest, Clock, Outcome, ScheduleSpec, UnitRecord};
use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::mc::{HiddenDisorder, Sampler, SimulatedAnnealing, SvmcTf, TransferMatrixSampler};
use crate::schedule::Schedule;
use crate::shim::{run_shim, staged_protocol, write_history_csv, ShimConfig, ShimReport, ShimStage, ShimState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmcSpec {
    pub sweeps: usize,
    #[serde(default = "svmc_beta")]
    pub beta: f64,
}

fn svmc_beta() -> f64 {
    SvmcTf::DEFAULT_BETA
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerSpec {
    Sa(SimulatedAnnealing),
    Svmc(SvmcSpec),
    TransferMatrix(TransferMatrixSampler),
}

impl SamplerSpec {
    pub fn build(&self, schedule: &Schedule) -> Result<Box<dyn Sampler>> {
        Ok(match *self {
            Self::Sa(sa) => {
                sa.validate()?;
                Box::new(sa)
            }
            Self::Svmc(s) => Box::new(SvmcTf::new(s.sweeps, s.beta, schedule.clone())?),
            Self::TransferMatrix(t) => {
                if !(t.beta >= 0.0 && t.beta.is_finite() && t.offset_gain.is_finite()) {
                    return Err(Error::InvalidArgument(format!("invalid transfer-matrix parameters {t:?}")));
                }
                Box::new(t)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Protocol {
    /// Every update switched on from the first iteration.
    AllOn { iterations: usize },
    /// 100 idle, 300 flux, 400 with couplers, 400 with offsets.
    Staged,
}

impl Default for Protocol {
    fn default() -> Self {
        Self::AllOn { iterations: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShimRunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub l: usize,
    pub j: f64,
    /// Anneal schedule for the svmc sampler.
    #[serde(default)]
    pub schedule: ScheduleSpec,
    pub sampler: SamplerSpec,
    /// Disorder the sampler applies without the shim knowing; realization 0 is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_disorder: Option<DisorderConfig>,
    #[serde(default)]
    pub shim: ShimConfig,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default = "eval_samples")]
    pub eval_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn eval_samples() -> usize {
    20000
}

impl ShimRunConfig {
    pub fn stages(&self) -> Vec<ShimStage> {
        match self.protocol {
            Protocol::AllOn { iterations } => vec![ShimStage { iterations, config: self.shim.clone() }],
            Protocol::Staged => staged_protocol(&self.shim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShimSummary {
    #[serde(flatten)]
    pub report: ShimReport,
    pub iterations: usize,
    pub std_f_reduction: f64,
    pub median_abs_m_reduction: f64,
}

fn adjustments_csv(state: &ShimState) -> String {
    let offsets = state.site_offsets();
    let mut s = String::from("site,line,flux,coupling,nominal_coupling,offset\n");
    for i in 0..state.nominal.len() {
        s += &format!(
            "{i},{},{},{},{},{}\n",
            state.line_of[i],
            num(state.flux[i]),
            num(state.couplings[i]),
            num(state.nominal.couplings[i]),
            num(offsets[i])
        );
    }
    s
}

pub fn shim(cfg: &ShimRunConfig, base: &Path, out: &Path, note: Option<&str>) -> Result<Outcome> {
    let clock = Clock::start();
    let (schedule, spec) = cfg.schedule.resolve(base)?;
    let nominal = ChainSpec::uniform(cfg.l, cfg.j).map_err(super::config_err)?;
    let inner = cfg.sampler.build(&schedule).map_err(super::config_err)?;
    if cfg.eval_samples == 0 {
        return Err(Error::Config("eval_samples must be positive".into()));
    }
    let stages = cfg.stages();
    for st in &stages {
        st.config.validate().map_err(super::config_err)?;
    }
    let sampler: Box<dyn Sampler> = match &cfg.hidden_disorder {
        Some(d) => {
            let realized = d.spec(cfg.j).realize(&nominal, 0).map_err(super::config_err)?;
            Box::new(HiddenDisorder::new(inner, &nominal, &realized))
        }
        None => inner,
    };
    let n_workers = workers()?;
    let (state, report) = pool(n_workers)?.install(|| run_shim(sampler.as_ref(), &nominal, &stages, cfg.eval_samples, cfg.seed))?;

    create_dir(out)?;
    let history = out.join("history.csv");
    let mut buf = Vec::new();
    write_history_csv(&state, &mut buf).map_err(|e| Error::io(&history, e))?;
    write_file(&history, &String::from_utf8_lossy(&buf))?;
    let adjustments = out.join("adjustments.csv");
    write_file(&adjustments, &adjustments_csv(&state))?;
    let summary = ShimSummary {
        iterations: state.iterations(),
        std_f_reduction: report.before.std_f / report.after.std_f,
        median_abs_m_reduction: report.before.median_abs_m / report.after.median_abs_m,
        report,
    };
    let report_path = out.join("report.json");
    write_file(&report_path, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    let mut outputs = vec![history, adjustments, report_path];
    let resolved = ShimRunConfig { schedule: spec, out: None, ..cfg.clone() };
    let unit = UnitRecord::new(0, format!("shim L={} J={}", cfg.l, cfg.j), Some(cfg.seed), &Ok(()));
    outputs.push(write_manifest(out, "shim", &resolved, n_workers, &clock, note, &[unit], &outputs)?);
    Ok(Outcome { failures: 0, outputs })
}

pub fn shim_file(config: &Path, out: Option<&Path>) -> Result<Outcome> {
    let loaded = load_config::<ShimRunConfig>(config)?;
    let out = output_dir(out, loaded.config.out.as_deref(), &loaded.base)?;
    shim(&loaded.config, &loaded.base, &out, loaded.note.as_deref())
}
