//! `run`: sweep a grid of solvers or samplers and write per-point rows, correlators and fits.
//!
//! Grid order is method × L × J × (t_a or sweeps). Point `k` draws its seed as
//! `derive_seed(seed, k)`; disorder realizations come from the disorder master seed alone,
//! so the same instances are reused across methods and anneal times.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    create_dir, load_config, one_or_many, output_dir, pool, schema_version, workers, write_file, write_manifest, Clock,
    Outcome, ScheduleSpec, UnitRecord,
};
use crate::bdg::dense::dense_oracle;
use crate::bdg::{evolve_bdg, ground_state_probability, kink_stats_bdg};
use crate::chain::ChainSpec;
use crate::disorder::{DisorderSpec, DisorderTargets};
use crate::error::{Error, Result};
use crate::fmt::{num, opt};
use crate::mc::{derive_seed, run_sampler, BetaSchedule, Sampler, SamplerRequest, SimulatedAnnealing, SvmcTf};
use crate::modes::mode_spectrum;
use crate::ode::StepPolicy;
use crate::samples::{SampleMeta, SampleSet};
use crate::schedule::Schedule;
use crate::stats::{bootstrap, kinks, summarize, Interval, KinkSummary};
use crate::tebd::{run_tebd, TebdConfig};
use crate::theory::{cumulant_ratio_targets, fit_lz_exponent, fit_power_law, predict_density, predict_lz, lz_rate, ALL, LZ_P_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Modes,
    Bdg,
    Tebd,
    Sa,
    Svmc,
    DenseOracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Modes => "modes",
            Self::Bdg => "bdg",
            Self::Tebd => "tebd",
            Self::Sa => "sa",
            Self::Svmc => "svmc",
            Self::DenseOracle => "dense-oracle",
        }
    }

    pub fn is_sampler(self) -> bool {
        matches!(self, Self::Sa | Self::Svmc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaName {
    Hardware,
}

/// Disorder strength: a number, or `"hardware"` for 0.05·1.4/|J|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Value(f64),
    Named(SigmaName),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub sigma: Sigma,
    #[serde(default = "both")]
    pub targets: DisorderTargets,
    #[serde(default = "one")]
    pub n_realizations: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn both() -> DisorderTargets {
    DisorderTargets::Both
}

fn one() -> usize {
    1
}

impl DisorderConfig {
    pub fn spec(&self, j: f64) -> DisorderSpec {
        let sigma = match self.sigma {
            Sigma::Value(s) => s,
            Sigma::Named(SigmaName::Hardware) => DisorderSpec::hardware_sigma(j),
        };
        DisorderSpec { sigma, targets: self.targets, n_realizations: self.n_realizations, master_seed: self.master_seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    /// Samples per realization for sampler methods.
    pub n_samples: usize,
    pub batch_size: usize,
    pub n_resamples: usize,
    /// Largest correlator distance; defaults to L/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self { n_samples: 1000, batch_size: 100, n_resamples: 1000, r_max: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaConfig {
    pub beta: BetaSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmcConfig {
    pub beta: f64,
}

impl Default for SvmcConfig {
    fn default() -> Self {
        Self { beta: SvmcTf::DEFAULT_BETA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(deserialize_with = "one_or_many")]
    pub method: Vec<Method>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(deserialize_with = "one_or_many")]
    pub l: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub j: Vec<f64>,
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub t_a: Vec<f64>,
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderConfig>,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub tebd: TebdConfig,
    /// Integrator policy; each solver has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode: Option<StepPolicy>,
    #[serde(default)]
    pub sa: SaConfig,
    #[serde(default)]
    pub svmc: SvmcConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.method.is_empty() || self.l.is_empty() || self.j.is_empty() {
            return bad("method, l and j must be non-empty".into());
        }
        if self.method.iter().any(|m| !m.is_sampler()) && self.t_a.is_empty() {
            return bad("solver methods need t_a values".into());
        }
        if self.method.iter().any(|m| m.is_sampler()) && self.sweeps.is_empty() {
            return bad("sampler methods need sweeps values".into());
        }
        if let Some(&t) = self.t_a.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return bad(format!("t_a must be positive, got {t}"));
        }
        if self.sweeps.contains(&0) {
            return bad("sweeps must be positive".into());
        }
        for &l in &self.l {
            for &j in &self.j {
                let chain = ChainSpec::uniform(l, j).map_err(super::config_err)?;
                if self.method.iter().any(|m| !m.is_sampler()) {
                    chain.require_even().map_err(super::config_err)?;
                }
                if let Some(d) = &self.disorder {
                    d.spec(j).validate().map_err(super::config_err)?;
                }
            }
        }
        let disordered = self.disorder.is_some_and(|d| d.spec(1.0).sigma > 0.0 || matches!(d.sigma, Sigma::Named(_)));
        if disordered && self.method.contains(&Method::Modes) {
            return bad("the modes solver needs a uniform chain; drop disorder or use bdg".into());
        }
        if self.stats.n_samples == 0 || self.stats.batch_size == 0 || self.stats.n_resamples == 0 {
            return bad("stats.n_samples, stats.batch_size and stats.n_resamples must be positive".into());
        }
        if self.stats.r_max == Some(0) {
            return bad("stats.r_max must be positive".into());
        }
        self.tebd.validate().map_err(super::config_err)?;
        SimulatedAnnealing { sweeps: 1, beta: self.sa.beta }.validate().map_err(super::config_err)?;
        if !(self.svmc.beta >= 0.0 && self.svmc.beta.is_finite()) {
            return bad(format!("svmc.beta must be >= 0, got {}", self.svmc.beta));
        }
        Ok(())
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub index: usize,
    pub method: Method,
    pub l: usize,
    pub j: f64,
    pub t_a: Option<f64>,
    pub sweeps: Option<usize>,
    pub seed: u64,
}

impl Point {
    pub fn label(&self) -> String {
        let x = match (self.t_a, self.sweeps) {
            (Some(t), _) => format!("t_a={t}"),
            (_, Some(s)) => format!("sweeps={s}"),
            _ => String::new(),
        };
        format!("{} L={} J={} {x}", self.method.name(), self.l, self.j)
    }

    /// Anneal time or sweep count, whichever drives this point.
    pub fn x(&self) -> f64 {
        self.t_a.unwrap_or_else(|| self.sweeps.unwrap_or(0) as f64)
    }
}

pub fn grid(cfg: &RunConfig) -> Vec<Point> {
    let mut pts = Vec::new();
    for &method in &cfg.method {
        for &l in &cfg.l {
            for &j in &cfg.j {
                let xs: Vec<(Option<f64>, Option<usize>)> = if method.is_sampler() {
                    cfg.sweeps.iter().map(|&s| (None, Some(s))).collect()
                } else {
                    cfg.t_a.iter().map(|&t| (Some(t), None)).collect()
                };
                for (t_a, sweeps) in xs {
                    let index = pts.len();
                    pts.push(Point { index, method, l, j, t_a, sweeps, seed: derive_seed(cfg.seed, index as u64) });
                }
            }
        }
    }
    pts
}

/// Kink-kink correlator for r = 1..=r_max with optional 95% intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlator {
    pub n_bar: f64,
    pub ckk: Vec<f64>,
    pub ci: Option<Vec<Interval>>,
}

pub(crate) fn correlator_csv(c: &Correlator) -> String {
    let mut s = String::from("r,x,ckk,ci_lo,ci_hi\n");
    for (i, v) in c.ckk.iter().enumerate() {
        let r = i + 1;
        let ci = c.ci.as_ref().and_then(|ci| ci.get(i));
        s += &format!(
            "{r},{},{},{},{}\n",
            num(c.n_bar * r as f64),
            num(*v),
            opt(ci.map(|c| c.lo)),
            opt(ci.map(|c| c.hi))
        );
    }
    s
}

/// Everything measured at one point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointResult {
    pub realizations: usize,
    pub n_bar: f64,
    pub kappa2: Option<f64>,
    pub kappa3: Option<f64>,
    pub p_gs: Option<f64>,
    pub ci_n_bar: Option<Interval>,
    pub discarded_weight: Option<f64>,
    pub max_entropy: Option<f64>,
    pub correlator: Option<Correlator>,
    pub samples: Option<SampleSet>,
}

/// Statistics of a sample set; `analyze` uses the same function, so both agree bit for bit.
pub(crate) fn sample_statistics(set: &SampleSet, j_sign: f64, n_resamples: usize, r_max: usize) -> Result<(KinkSummary, f64, Correlator)> {
    let summary = summarize(set, j_sign, n_resamples, set.meta.seed)?;
    let zero = set.samples().filter(|s| kinks(s, j_sign).iter().all(|&k| k == 0)).count();
    let p_gs = zero as f64 / set.n_samples() as f64;
    let r_max = r_max.min(summary.ckk.len());
    let corr = Correlator {
        n_bar: summary.kappa1,
        ckk: summary.ckk[..r_max].to_vec(),
        ci: Some(summary.ci95_ckk[..r_max].to_vec()),
    };
    Ok((summary, p_gs, corr))
}

struct Context<'a> {
    cfg: &'a RunConfig,
    schedule: &'a Schedule,
}

impl Context<'_> {
    fn chains(&self, p: &Point) -> Result<Vec<ChainSpec>> {
        let nominal = ChainSpec::uniform(p.l, p.j)?;
        match &self.cfg.disorder {
            Some(d) => d.spec(p.j).ensemble(&nominal),
            None => Ok(vec![nominal]),
        }
    }

    fn r_max(&self, l: usize) -> usize {
        self.cfg.stats.r_max.unwrap_or(l / 2).min(l - 1)
    }

    fn evaluate(&self, p: &Point) -> Result<PointResult> {
        match p.method {
            Method::Modes => self.modes(p),
            Method::Sa | Method::Svmc => self.sampled(p),
            _ => self.physics(p),
        }
    }

    fn modes(&self, p: &Point) -> Result<PointResult> {
        let policy = self.cfg.ode.unwrap_or_default();
        let sp = mode_spectrum(self.schedule, p.j, p.t_a.unwrap_or_default(), p.l, &policy)?;
        let c = sp.cumulants();
        Ok(PointResult {
            realizations: 1,
            n_bar: c.k1,
            kappa2: Some(c.k2),
            kappa3: Some(c.k3),
            p_gs: Some(sp.ground_state_probability()),
            ..Default::default()
        })
    }

    /// Real-space solvers, averaged over disorder realizations. The pooled correlator is
    /// `(mean⟨K_iK_{i+r}⟩ − n̄²)/n̄²` with n̄ the ensemble mean.
    fn physics(&self, p: &Point) -> Result<PointResult> {
        let t_a = p.t_a.unwrap_or_default();
        let rs: Vec<usize> = (1..=self.r_max(p.l)).collect();
        let chains = self.chains(p)?;
        let mut ns = Vec::with_capacity(chains.len());
        let mut kk = vec![0.0; rs.len()];
        let mut pgs = 0.0;
        let (mut discarded, mut entropy) = (None::<f64>, None::<f64>);
        for chain in &chains {
            let (n, ckk, pg) = match p.method {
                Method::Bdg => {
                    let st = evolve_bdg(chain, self.schedule, t_a, &self.cfg.ode.unwrap_or_else(StepPolicy::bdg_default))?;
                    let ks = kink_stats_bdg(&st, chain, &rs)?;
                    (ks.n_bar, ks.ckk, ground_state_probability(&st, chain, self.schedule)?)
                }
                Method::Tebd => {
                    let (_, obs) = run_tebd(chain, self.schedule, t_a, &self.cfg.tebd, &rs)?;
                    discarded = Some(discarded.unwrap_or(0.0).max(obs.discarded_weight));
                    entropy = Some(entropy.unwrap_or(0.0).max(obs.max_entropy));
                    (obs.kinks.n_bar, obs.kinks.ckk, f64::NAN)
                }
                _ => {
                    let d = dense_oracle(chain, self.schedule, t_a, &self.cfg.ode.unwrap_or_default())?;
                    (d.n_bar, rs.iter().map(|&r| d.ckk[r]).collect(), d.p_gs)
                }
            };
            for (acc, c) in kk.iter_mut().zip(&ckk) {
                *acc += (c + 1.0) * n * n;
            }
            ns.push(n);
            pgs += pg;
        }
        let m = chains.len() as f64;
        let n_bar = ns.iter().sum::<f64>() / m;
        let ckk = kk.iter().map(|v| (v / m - n_bar * n_bar) / (n_bar * n_bar)).collect();
        let ci_n_bar = if ns.len() >= 2 {
            Some(bootstrap(&ns, |xs| Ok(xs.iter().copied().sum::<f64>() / xs.len() as f64), self.cfg.stats.n_resamples, p.seed)?)
        } else {
            None
        };
        Ok(PointResult {
            realizations: chains.len(),
            n_bar,
            kappa2: None,
            kappa3: None,
            p_gs: (p.method != Method::Tebd).then_some(pgs / m),
            ci_n_bar,
            discarded_weight: discarded,
            max_entropy: entropy,
            correlator: Some(Correlator { n_bar, ckk, ci: None }),
            samples: None,
        })
    }

    fn sampler(&self, p: &Point) -> Result<Box<dyn Sampler>> {
        let sweeps = p.sweeps.unwrap_or(1);
        Ok(match p.method {
            Method::Sa => {
                let sa = SimulatedAnnealing { sweeps, beta: self.cfg.sa.beta };
                sa.validate()?;
                Box::new(sa)
            }
            _ => Box::new(SvmcTf::new(sweeps, self.cfg.svmc.beta, self.schedule.clone())?),
        })
    }

    fn sampled(&self, p: &Point) -> Result<PointResult> {
        let sampler = self.sampler(p)?;
        let chains = self.chains(p)?;
        let mut batches = Vec::new();
        for (k, chain) in chains.iter().enumerate() {
            let mut req = SamplerRequest::new(chain.clone(), self.cfg.stats.n_samples, derive_seed(p.seed, k as u64));
            req.batch_size = self.cfg.stats.batch_size;
            let set = run_sampler(sampler.as_ref(), &req)?;
            batches.extend(set.batches().iter().cloned());
        }
        let meta = SampleMeta {
            sampler: sampler.id(),
            seed: p.seed,
            params: serde_json::json!({
                "sampler": sampler.params(),
                "j": p.j,
                "realizations": chains.len(),
            }),
        };
        let set = SampleSet::new(p.l, batches, meta)?;
        let (summary, p_gs, corr) = sample_statistics(&set, p.j.signum(), self.cfg.stats.n_resamples, self.r_max(p.l))?;
        Ok(PointResult {
            realizations: chains.len(),
            n_bar: summary.kappa1,
            kappa2: Some(summary.kappa2),
            kappa3: Some(summary.kappa3),
            p_gs: Some(p_gs),
            ci_n_bar: Some(summary.ci95_kappa1),
            discarded_weight: None,
            max_entropy: None,
            correlator: Some(corr),
            samples: Some(set),
        })
    }
}

pub const POINTS_HEADER: &str = "index,method,L,J,t_a,sweeps,realizations,n_bar,kappa1,kappa2,kappa3,kappa2_ratio_N,kappa3_ratio_N,p_gs,n_bar_theory,p_gs_lz_theory,kappa2_ratio_theory,kappa3_ratio_theory,ci_n_bar_lo,ci_n_bar_hi,discarded_weight,max_entropy";

fn point_row(p: &Point, r: &PointResult, schedule: &Schedule) -> String {
    let l = p.l as f64;
    let ratio2 = r.kappa2.map(|k| k / r.n_bar * l);
    let ratio3 = r.kappa3.map(|k| k / r.n_bar * l * l);
    let (mut nth, mut pth, mut r2th, mut r3th) = (None, None, None, None);
    if let Some(t_a) = p.t_a {
        if let Ok(kz) = schedule.kz_constants(p.j) {
            nth = predict_density(kz.b, t_a).ok();
            pth = predict_lz(kz.b, p.l, t_a).ok();
            let (a, b) = cumulant_ratio_targets();
            (r2th, r3th) = (Some(a), Some(b));
        }
    }
    [
        p.index.to_string(),
        p.method.name().to_string(),
        p.l.to_string(),
        num(p.j),
        opt(p.t_a),
        p.sweeps.map(|s| s.to_string()).unwrap_or_default(),
        r.realizations.to_string(),
        num(r.n_bar),
        num(r.n_bar),
        opt(r.kappa2),
        opt(r.kappa3),
        opt(ratio2),
        opt(ratio3),
        opt(r.p_gs),
        opt(nth),
        opt(pth),
        opt(r2th),
        opt(r3th),
        opt(r.ci_n_bar.map(|c| c.lo)),
        opt(r.ci_n_bar.map(|c| c.hi)),
        opt(r.discarded_weight),
        opt(r.max_entropy),
    ]
    .join(",")
}

pub const FITS_HEADER: &str = "method,L,J,fit,x,n_points,value,stderr,intercept,theory";

/// Per (method, L, J): the density exponent against t_a or sweeps, and for solvers the
/// Landau-Zener rate a. Groups with too few usable points are left out.
fn fits(points: &[Point], results: &[Option<&PointResult>], schedule: &Schedule) -> String {
    let mut s = format!("{FITS_HEADER}\n");
    let mut groups: Vec<(Method, usize, u64)> = Vec::new();
    for p in points {
        let key = (p.method, p.l, p.j.to_bits());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    for (method, l, jb) in groups {
        let j = f64::from_bits(jb);
        let members: Vec<(&Point, &PointResult)> = points
            .iter()
            .zip(results)
            .filter(|(p, _)| p.method == method && p.l == l && p.j.to_bits() == jb)
            .filter_map(|(p, r)| r.map(|r| (p, r)))
            .collect();
        let x = if method.is_sampler() { "sweeps" } else { "t_a" };
        let kz: Vec<(f64, f64)> = members.iter().filter(|(_, r)| r.n_bar > 0.0).map(|(p, r)| (p.x(), r.n_bar)).collect();
        if let Ok(f) = fit_power_law(&kz, ALL) {
            let theory = if method.is_sampler() { String::new() } else { num(-0.5) };
            s += &format!(
                "{},{l},{},kz_exponent,{x},{},{},{},{},{theory}\n",
                method.name(),
                num(j),
                f.n_points,
                num(f.slope),
                num(f.slope_stderr()),
                num(f.intercept)
            );
        }
        if !method.is_sampler() {
            let lz: Vec<(f64, f64)> = members.iter().filter_map(|(p, r)| r.p_gs.map(|g| (p.x(), g))).collect();
            if let Ok(f) = fit_lz_exponent(&lz, LZ_P_WINDOW, ALL) {
                let theory = schedule.kz_constants(j).ok().and_then(|kz| lz_rate(kz.b, l).ok());
                s += &format!(
                    "{},{l},{},lz_rate,{x},{},{},{},{},{}\n",
                    method.name(),
                    num(j),
                    f.n_points,
                    num(-f.slope),
                    num(f.slope_stderr()),
                    num(f.intercept),
                    opt(theory)
                );
            }
        }
    }
    s
}

/// Runs a resolved config into `out`.
pub fn run(cfg: &RunConfig, base: &Path, out: &Path, note: Option<&str>) -> Result<Outcome> {
    let clock = Clock::start();
    cfg.validate()?;
    let (schedule, spec) = cfg.schedule.resolve(base)?;
    let resolved = RunConfig { schedule: spec, out: None, ..cfg.clone() };
    let n_workers = workers()?;
    let pool = pool(n_workers)?;
    let points = grid(cfg);
    let ctx = Context { cfg, schedule: &schedule };
    let results: Vec<Result<PointResult>> = pool.install(|| points.par_iter().map(|p| ctx.evaluate(p)).collect());

    create_dir(out)?;
    let corr_dir = out.join("correlators");
    let sample_dir = out.join("samples");
    let mut outputs = Vec::new();
    let mut rows = format!("{POINTS_HEADER}\n");
    let mut units = Vec::with_capacity(points.len());
    let mut failures = 0;
    for (p, r) in points.iter().zip(&results) {
        let status = match r {
            Ok(r) => {
                rows += &point_row(p, r, &schedule);
                rows.push('\n');
                if let Some(c) = &r.correlator {
                    create_dir(&corr_dir)?;
                    let path = corr_dir.join(format!("point_{:04}.csv", p.index));
                    write_file(&path, &correlator_csv(c))?;
                    outputs.push(path);
                }
                if let Some(set) = &r.samples {
                    create_dir(&sample_dir)?;
                    let stem = sample_dir.join(format!("point_{:04}", p.index));
                    set.save(&stem)?;
                    outputs.push(stem.with_extension("txt"));
                }
                Ok(())
            }
            Err(e) => {
                failures += 1;
                Err(e.to_string())
            }
        };
        units.push(UnitRecord::new(p.index, p.label(), Some(p.seed), &status));
    }
    let points_path = out.join("points.csv");
    write_file(&points_path, &rows)?;
    let ok: Vec<Option<&PointResult>> = results.iter().map(|r| r.as_ref().ok()).collect();
    let fits_path = out.join("fits.csv");
    write_file(&fits_path, &fits(&points, &ok, &schedule))?;
    outputs.splice(0..0, [points_path, fits_path]);
    let manifest = write_manifest(out, "run", &resolved, n_workers, &clock, note, &units, &outputs)?;
    outputs.push(manifest);
    Ok(Outcome { failures, outputs })
}

/// Loads `config` (a config or a manifest) and runs it.
pub fn run_file(config: &Path, out: Option<&Path>) -> Result<Outcome> {
    let loaded = load_config::<RunConfig>(config)?;
    let out = output_dir(out, loaded.config.out.as_deref(), &loaded.base)?;
    run(&loaded.config, &loaded.base, &out, loaded.note.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> RunConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn grid_order_and_seeds() {
        let c = cfg(r#"{"method": ["modes", "sa"], "l": [8, 16], "j": -1, "t_a": [1, 2], "sweeps": [10], "seed": 3}"#);
        let g = grid(&c);
        assert_eq!(g.len(), 2 * 2 + 2);
        assert_eq!(g[1].t_a, Some(2.0));
        assert_eq!(g[2].l, 16);
        assert_eq!(g[4].method, Method::Sa);
        assert_eq!(g[5].sweeps, Some(10));
        for p in &g {
            assert_eq!(p.seed, derive_seed(3, p.index as u64));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            r#"{"method": "modes", "l": 8, "j": -1}"#,
            r#"{"method": "sa", "l": 8, "j": -1, "t_a": 1}"#,
            r#"{"method": "bdg", "l": 7, "j": -1, "t_a": 1}"#,
            r#"{"method": "modes", "l": 8, "j": -1, "t_a": 1, "disorder": {"sigma": "hardware"}}"#,
            r#"{"method": "bdg", "l": 8, "j": -1, "t_a": -1}"#,
        ] {
            assert!(cfg(bad).validate().is_err(), "{bad}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"method": "bdg", "l": 8, "j": -1, "t_a": 1, "extra": 0}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"method": "shim", "l": 8, "j": -1, "t_a": 1}"#).is_err());
    }

    #[test]
    fn hardware_sigma_follows_j() {
        let d: DisorderConfig = serde_json::from_str(r#"{"sigma": "hardware", "n_realizations": 3}"#).unwrap();
        assert!((d.spec(-1.4).sigma - 0.05).abs() < 1e-15);
        assert!((d.spec(-0.7).sigma - 0.1).abs() < 1e-15);
        assert_eq!(d.targets, DisorderTargets::Both);
    }

    #[test]
    fn ensemble_of_one_clean_chain_matches_single_solver() {
        let c = cfg(r#"{"method": ["bdg", "modes"], "l": 8, "j": -1, "t_a": [0.5], "stats": {"r_max": 3}}"#);
        let sch = Schedule::linear(1.0).unwrap();
        let ctx = Context { cfg: &c, schedule: &sch };
        let g = grid(&c);
        let b = ctx.evaluate(&g[0]).unwrap();
        let m = ctx.evaluate(&g[1]).unwrap();
        assert!((b.n_bar - m.n_bar).abs() < 1e-8);
        assert!((b.p_gs.unwrap() - m.p_gs.unwrap()).abs() < 1e-7);
        let chain = ChainSpec::uniform(8, -1.0).unwrap();
        let st = evolve_bdg(&chain, &sch, 0.5, &StepPolicy::bdg_default()).unwrap();
        let ks = kink_stats_bdg(&st, &chain, &[1, 2, 3]).unwrap();
        for (a, e) in b.correlator.unwrap().ckk.iter().zip(&ks.ckk) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn correlator_csv_has_fixed_header_and_x_column() {
        let c = Correlator { n_bar: 0.25, ckk: vec![-1.0, 0.5], ci: None };
        let s = correlator_csv(&c);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "r,x,ckk,ci_lo,ci_hi");
        assert!(lines[2].starts_with(&format!("2,{},", num(0.5))));
        assert!(lines[2].ends_with(",,"));
    }
}
