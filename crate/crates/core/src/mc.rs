//! Classical baselines behind one sampler interface: simulated annealing, spin-vector Monte
//! Carlo with transverse-field proposals, and an exact transfer-matrix Gibbs sampler.
//!
//! Every sample draws from ChaCha20 seeded with the request seed on stream = sample index,
//! so a set is reproducible and independent of how samples are scheduled over threads.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::samples::{SampleMeta, SampleSet};
use crate::schedule::Schedule;

/// Sampler input: a chain plus the calibration knobs a shim can turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerRequest {
    pub chain: ChainSpec,
    /// Per-site flux Φ_i; the sampler sees `h_i − flux_gain·Φ_i`. Empty means zero.
    #[serde(default)]
    pub flux: Vec<f64>,
    /// Per-site shift of the anneal parameter s. Empty means zero.
    #[serde(default)]
    pub offsets: Vec<f64>,
    #[serde(default = "one")]
    pub flux_gain: f64,
    pub n_samples: usize,
    #[serde(default = "hundred")]
    pub batch_size: usize,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn hundred() -> usize {
    100
}

impl SamplerRequest {
    pub fn new(chain: ChainSpec, n_samples: usize, seed: u64) -> Self {
        Self { chain, flux: Vec::new(), offsets: Vec::new(), flux_gain: 1.0, n_samples, batch_size: 100, seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        let l = self.chain.len();
        if self.n_samples == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("n_samples and batch_size must be positive".into()));
        }
        for (name, v) in [("flux", &self.flux), ("offsets", &self.offsets)] {
            if !v.is_empty() && v.len() != l {
                return Err(Error::InvalidArgument(format!("{name} has {} entries for {l} sites", v.len())));
            }
        }
        Ok(())
    }

    /// Longitudinal fields after flux compensation.
    pub fn effective_fields(&self) -> Vec<f64> {
        let mut h = self.chain.fields.clone();
        for (h, phi) in h.iter_mut().zip(&self.flux) {
            *h -= self.flux_gain * phi;
        }
        h
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets.get(i).copied().unwrap_or(0.0)
    }
}

/// Chain data in the form the samplers consume.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub req: SamplerRequest,
    pub couplings: Vec<f64>,
    pub fields: Vec<f64>,
}

impl Prepared {
    pub fn plain(req: &SamplerRequest) -> Self {
        Self { req: req.clone(), couplings: req.chain.couplings.clone(), fields: req.effective_fields() }
    }
}

pub trait Sampler: Sync {
    fn id(&self) -> String;
    fn params(&self) -> serde_json::Value;
    fn prepare(&self, req: &SamplerRequest) -> Result<Prepared> {
        Ok(Prepared::plain(req))
    }
    fn draw(&self, chain: &Prepared, rng: &mut ChaCha20Rng) -> Vec<i8>;
}

impl<S: Sampler + ?Sized> Sampler for Box<S> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn params(&self) -> serde_json::Value {
        (**self).params()
    }

    fn prepare(&self, req: &SamplerRequest) -> Result<Prepared> {
        (**self).prepare(req)
    }

    fn draw(&self, chain: &Prepared, rng: &mut ChaCha20Rng) -> Vec<i8> {
        (**self).draw(chain, rng)
    }
}

/// Seed for the `k`-th derived task of a master seed.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    use rand::RngCore;
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(k);
    rng.set_word_pos(1 << 40);
    rng.next_u64()
}

/// Any sampler run on a miscalibrated device: fixed hidden errors are added to the couplings
/// and fields it is asked for, before flux compensation.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenDisorder<S> {
    pub inner: S,
    pub coupling_error: Vec<f64>,
    pub field_error: Vec<f64>,
}

impl<S: Sampler> HiddenDisorder<S> {
    /// Errors taken as the deviation of `realized` from `nominal`.
    pub fn new(inner: S, nominal: &ChainSpec, realized: &ChainSpec) -> Self {
        Self {
            inner,
            coupling_error: realized.couplings.iter().zip(&nominal.couplings).map(|(a, b)| a - b).collect(),
            field_error: realized.fields.iter().zip(&nominal.fields).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<S: Sampler> Sampler for HiddenDisorder<S> {
    fn id(&self) -> String {
        format!("{}+hidden-disorder", self.inner.id())
    }

    fn params(&self) -> serde_json::Value {
        self.inner.params()
    }

    fn prepare(&self, req: &SamplerRequest) -> Result<Prepared> {
        let l = req.chain.len();
        if self.coupling_error.len() != l || self.field_error.len() != l {
            return Err(Error::InvalidArgument(format!("hidden disorder is for L = {}, got L = {l}", self.coupling_error.len())));
        }
        let mut req = req.clone();
        req.chain.couplings.iter_mut().zip(&self.coupling_error).for_each(|(j, e)| *j += e);
        req.chain.fields.iter_mut().zip(&self.field_error).for_each(|(h, e)| *h += e);
        self.inner.prepare(&req)
    }

    fn draw(&self, chain: &Prepared, rng: &mut ChaCha20Rng) -> Vec<i8> {
        self.inner.draw(chain, rng)
    }
}

pub fn sample_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws `n_samples` independent samples, grouped into batches of `batch_size`.
pub fn run_sampler<S: Sampler + ?Sized>(sampler: &S, req: &SamplerRequest) -> Result<SampleSet> {
    req.validate()?;
    let prep = sampler.prepare(req)?;
    let samples: Vec<Vec<i8>> =
        (0..req.n_samples).into_par_iter().map(|k| sampler.draw(&prep, &mut sample_rng(req.seed, k))).collect();
    let batches = samples.chunks(req.batch_size).map(<[Vec<i8>]>::to_vec).collect();
    let meta = SampleMeta { sampler: sampler.id().into(), seed: req.seed, params: sampler.params() };
    SampleSet::new(req.chain.len(), batches, meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum BetaSchedule {
    Fixed { beta: f64 },
    /// β_k = from·(to/from)^{k/(sweeps−1)}.
    Geometric { from: f64, to: f64 },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self::Geometric { from: 0.1, to: 100.0 }
    }
}

impl BetaSchedule {
    pub fn at(&self, k: usize, sweeps: usize) -> f64 {
        match *self {
            Self::Fixed { beta } => beta,
            Self::Geometric { from, to } if sweeps > 1 => from * (to / from).powf(k as f64 / (sweeps - 1) as f64),
            Self::Geometric { to, .. } => to,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Fixed { beta } => beta >= 0.0 && beta.is_finite(),
            Self::Geometric { from, to } => from > 0.0 && to > 0.0 && from.is_finite() && to.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid inverse temperature schedule {self:?}")))
        }
    }
}

fn random_spins(l: usize, rng: &mut ChaCha20Rng) -> Vec<i8> {
    (0..l).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

/// Single-spin Metropolis on `E = Σ J_i s_i s_{i+1} + Σ h_i s_i`, one random visiting order
/// per sweep, starting from uniformly random spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatedAnnealing {
    pub sweeps: usize,
    #[serde(default)]
    pub beta: BetaSchedule,
}

impl SimulatedAnnealing {
    pub fn new(sweeps: usize) -> Result<Self> {
        let sa = Self { sweeps, beta: BetaSchedule::default() };
        sa.validate()?;
        Ok(sa)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidArgument("sweeps must be >= 1".into()));
        }
        self.beta.validate()
    }
}

impl Sampler for SimulatedAnnealing {
    fn id(&self) -> String {
        "sa".into()
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or_default()
    }

    fn draw(&self, chain: &Prepared, rng: &mut ChaCha20Rng) -> Vec<i8> {
        let (j, h) = (&chain.couplings, &chain.fields);
        let l = j.len();
        let mut s = random_spins(l, rng);
        let mut order: Vec<usize> = (0..l).collect();
        for k in 0..self.sweeps {
            let beta = self.beta.at(k, self.sweeps);
            order.shuffle(rng);
            for &i in &order {
                let left = (i + l - 1) % l;
                let local = j[left] * f64::from(s[left]) + j[i] * f64::from(s[(i + 1) % l]) + h[i];
                let de = -2.0 * f64::from(s[i]) * local;
                if de <= 0.0 || rng.random::<f64>() < (-beta * de).exp() {
                    s[i] = -s[i];
                }
            }
        }
        s
    }
}

pub fn run_sa(req: &SamplerRequest, sa: &SimulatedAnnealing) -> Result<SampleSet> {
    sa.validate()?;
    run_sampler(sa, req)
}

/// Spin-vector Monte Carlo with transverse-field-limited proposals.
///
/// Rotors θ_i ∈ [0, π] start at π/2 and feel
/// `E = [−Σ Γ_i γ_i sin θ_i + Σ 𝒥_{i,i+1} J_i cos θ_i cos θ_{i+1} + Σ 𝒥_i h_i cos θ_i] / Γ(s_c)`,
/// with Γ_i, 𝒥_i taken at the site's own `s + offset`, and 𝒥_{i,i+1} the mean of the two
/// sites. Proposals are uniform within ±w of the current angle, w = π·min(1, Γ/(𝒥|J|)),
/// reflected at the poles. Readout is sign(cos θ).
#[derive(Debug, Clone, PartialEq)]
pub struct SvmcTf {
    pub sweeps: usize,
    pub beta: f64,
    pub schedule: Schedule,
}

impl SvmcTf {
    pub const DEFAULT_BETA: f64 = 32.0;
}

impl SvmcTf {
    pub fn new(sweeps: usize, beta: f64, schedule: Schedule) -> Result<Self> {
        let s = Self { sweeps, beta, schedule };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidArgument("sweeps must be >= 1".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be >= 0, got {}", self.beta)));
        }
        Ok(())
    }

    /// Energy unit: Γ at the crossing Γ = 𝒥|J| of the nominal coupling.
    fn energy_unit(&self, chain: &ChainSpec) -> Result<f64> {
        let sc = self.schedule.critical_point(chain.j_nominal)?;
        Ok(self.schedule.eval(sc)?.gamma)
    }

    /// One sweep at fixed per-site energies; `window` per site.
    #[allow(clippy::too_many_arguments)]
    fn sweep(
        &self,
        rot: &mut Rotors,
        order: &mut [usize],
        gam: &[f64],
        jc: &[f64],
        window: &[f64],
        prep: &Prepared,
        unit: f64,
        rng: &mut ChaCha20Rng,
    ) {
        let l = rot.theta.len();
        let (j, h) = (&prep.couplings, &prep.fields);
        let chain = &prep.req.chain;
        order.shuffle(rng);
        for &i in order.iter() {
            let w = window[i];
            if w <= 0.0 {
                continue;
            }
            let mut new = rot.theta[i] + w * (2.0 * rng.random::<f64>() - 1.0);
            if new < 0.0 {
                new = -new;
            } else if new > PI {
                new = 2.0 * PI - new;
            }
            let (sn, cn) = new.sin_cos();
            let left = (i + l - 1) % l;
            let right = (i + 1) % l;
            let bonds = 0.5 * (jc[left] + jc[i]) * j[left] * rot.cos[left]
                + 0.5 * (jc[i] + jc[right]) * j[i] * rot.cos[right]
                + jc[i] * h[i];
            let de = (-gam[i] * chain.transverse_at(i) * (sn - rot.sin[i]) + bonds * (cn - rot.cos[i])) / unit;
            if de <= 0.0 || rng.random::<f64>() < (-self.beta * de).exp() {
                rot.theta[i] = new;
                rot.sin[i] = sn;
                rot.cos[i] = cn;
            }
        }
    }

    /// Fixed-s rotor sampling, used for equilibrium checks.
    pub fn equilibrate(&self, prep: &Prepared, s: f64, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
        let l = prep.couplings.len();
        let unit = self.energy_unit(&prep.req.chain)?;
        let (gam, jc, window) = self.site_energies(prep, s);
        let mut rot = Rotors::equator(l);
        let mut order: Vec<usize> = (0..l).collect();
        for _ in 0..self.sweeps {
            self.sweep(&mut rot, &mut order, &gam, &jc, &window, prep, unit, rng);
        }
        Ok(rot.theta)
    }

    /// Normalized rotor energy of a configuration at anneal parameter `s`.
    pub fn energy(&self, prep: &Prepared, theta: &[f64], s: f64) -> Result<f64> {
        let unit = self.energy_unit(&prep.req.chain)?;
        let (gam, jc, _) = self.site_energies(prep, s);
        let l = theta.len();
        let chain = &prep.req.chain;
        let e: f64 = (0..l)
            .map(|i| {
                let r = (i + 1) % l;
                -gam[i] * chain.transverse_at(i) * theta[i].sin()
                    + 0.5 * (jc[i] + jc[r]) * prep.couplings[i] * theta[i].cos() * theta[r].cos()
                    + jc[i] * prep.fields[i] * theta[i].cos()
            })
            .sum();
        Ok(e / unit)
    }

    fn site_energies(&self, prep: &Prepared, s: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (s0, s1) = self.schedule.range();
        let aj = prep.req.chain.j_nominal.abs();
        let l = prep.couplings.len();
        let mut gam = Vec::with_capacity(l);
        let mut jc = Vec::with_capacity(l);
        let mut window = Vec::with_capacity(l);
        for i in 0..l {
            let e = self.schedule.eval_unchecked((s + prep.req.offset(i)).clamp(s0, s1));
            gam.push(e.gamma);
            jc.push(e.jcal);
            let ratio = if e.jcal * aj > 0.0 { e.gamma / (e.jcal * aj) } else { f64::INFINITY };
            window.push(PI * ratio.min(1.0));
        }
        (gam, jc, window)
    }
}

impl Sampler for SvmcTf {
    fn id(&self) -> String {
        "svmc-tf".into()
    }

    fn params(&self) -> serde_json::Value {
        serde_json::json!({ "sweeps": self.sweeps, "beta": self.beta, "schedule": self.schedule.kind() })
    }

    fn prepare(&self, req: &SamplerRequest) -> Result<Prepared> {
        self.energy_unit(&req.chain)?;
        Ok(Prepared::plain(req))
    }

    fn draw(&self, prep: &Prepared, rng: &mut ChaCha20Rng) -> Vec<i8> {
        let l = prep.couplings.len();
        let unit = self.energy_unit(&prep.req.chain).expect("checked in prepare");
        let (s0, s1) = self.schedule.range();
        let mut rot = Rotors::equator(l);
        let mut order: Vec<usize> = (0..l).collect();
        for k in 0..self.sweeps {
            let s = s0 + (k as f64 + 0.5) / self.sweeps as f64 * (s1 - s0);
            let (gam, jc, window) = self.site_energies(prep, s);
            self.sweep(&mut rot, &mut order, &gam, &jc, &window, prep, unit, rng);
        }
        rot.cos.iter().map(|&c| if c >= 0.0 { 1 } else { -1 }).collect()
    }
}

struct Rotors {
    theta: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Rotors {
    fn equator(l: usize) -> Self {
        let (sn, cn) = (PI / 2.0).sin_cos();
        Self { theta: vec![PI / 2.0; l], cos: vec![cn; l], sin: vec![sn; l] }
    }
}

pub fn run_svmc_tf(req: &SamplerRequest, svmc: &SvmcTf) -> Result<SampleSet> {
    svmc.validate()?;
    run_sampler(svmc, req)
}

/// Exact Boltzmann samples of `β·(Σ J_i s_i s_{i+1} + Σ h_i s_i)` on the ring.
///
/// Anneal offsets rescale the local inverse temperature, `β_i = β(1 + offset_gain·O_i)`,
/// shared by a bond as the mean of its two sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferMatrixSampler {
    pub beta: f64,
    #[serde(default)]
    pub offset_gain: f64,
}

impl TransferMatrixSampler {
    pub fn ideal(beta: f64) -> Self {
        Self { beta, offset_gain: 0.0 }
    }
}

impl Sampler for TransferMatrixSampler {
    fn id(&self) -> String {
        "transfer-matrix".into()
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or_default()
    }

    fn prepare(&self, req: &SamplerRequest) -> Result<Prepared> {
        let l = req.chain.len();
        let site_beta: Vec<f64> = (0..l).map(|i| self.beta * (1.0 + self.offset_gain * req.offset(i))).collect();
        let mut prep = Prepared::plain(req);
        for (i, j) in prep.couplings.iter_mut().enumerate() {
            *j *= 0.5 * (site_beta[i] + site_beta[(i + 1) % l]);
        }
        for (h, b) in prep.fields.iter_mut().zip(&site_beta) {
            *h *= b;
        }
        Ok(prep)
    }

    /// `couplings` and `fields` already carry β. Samples s_0 from its marginal, then the
    /// rest of the ring conditioned on s_0 from backward transfer products.
    fn draw(&self, prep: &Prepared, rng: &mut ChaCha20Rng) -> Vec<i8> {
        let (j, h) = (&prep.couplings, &prep.fields);
        let l = j.len();
        let spin = |a: usize| if a == 0 { 1.0 } else { -1.0 };
        let t = |i: usize, a: usize, b: usize| (-(j[i] * spin(a) * spin(b) + h[i] * spin(a))).exp();
        // back[k] = T_k T_{k+1} ⋯ T_{L−1}, each rescaled to unit max entry.
        let mut back = vec![[[0.0f64; 2]; 2]; l + 1];
        back[l] = [[1.0, 0.0], [0.0, 1.0]];
        for k in (0..l).rev() {
            let mut m = [[0.0; 2]; 2];
            for a in 0..2 {
                for c in 0..2 {
                    m[a][c] = (0..2).map(|b| t(k, a, b) * back[k + 1][b][c]).sum();
                }
            }
            let scale = m.iter().flatten().fold(0.0f64, |x, &y| x.max(y));
            back[k] = m.map(|row| row.map(|x| x / scale));
        }
        let pick = |w0: f64, w1: f64, rng: &mut ChaCha20Rng| usize::from(rng.random::<f64>() * (w0 + w1) >= w0);
        let first = pick(back[0][0][0], back[0][1][1], rng);
        let mut s = vec![first; l];
        for k in 1..l {
            let prev = s[k - 1];
            let w = |c: usize| t(k - 1, prev, c) * back[k][c][first];
            s[k] = pick(w(0), w(1), rng);
        }
        s.into_iter().map(|a| if a == 0 { 1 } else { -1 }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn gibbs_tv(chain: &ChainSpec, beta: f64, set: &SampleSet) -> f64 {
        let l = chain.len();
        let energy = |x: usize| {
            let s = |i: usize| if x >> i & 1 == 0 { 1.0 } else { -1.0 };
            (0..l).map(|i| chain.couplings[i] * s(i) * s((i + 1) % l) + chain.fields[i] * s(i)).sum::<f64>()
        };
        let w: Vec<f64> = (0..1usize << l).map(|x| (-beta * energy(x)).exp()).collect();
        let z: f64 = w.iter().sum();
        let mut counts = vec![0.0; 1 << l];
        for s in set.samples() {
            let x = s.iter().enumerate().fold(0usize, |acc, (i, &v)| acc | (usize::from(v < 0) << i));
            counts[x] += 1.0;
        }
        let n = set.n_samples() as f64;
        0.5 * counts.iter().zip(&w).map(|(c, p)| (c / n - p / z).abs()).sum::<f64>()
    }

    fn small_chain() -> ChainSpec {
        let mut chain = ChainSpec::uniform(8, -1.0).unwrap();
        chain.couplings = vec![-1.0, -0.8, -1.2, -1.0, -0.9, -1.1, -1.0, -0.7];
        chain.fields = vec![0.1, -0.2, 0.0, 0.15, -0.05, 0.0, 0.2, -0.1];
        chain
    }

    #[test]
    fn transfer_matrix_sampler_is_exact() {
        let chain = small_chain();
        let req = SamplerRequest { batch_size: 1000, ..SamplerRequest::new(chain.clone(), 200_000, 11) };
        let set = run_sampler(&TransferMatrixSampler::ideal(0.7), &req).unwrap();
        assert!(gibbs_tv(&chain, 0.7, &set) < 0.01);
    }

    #[test]
    fn sa_at_fixed_beta_samples_gibbs() {
        // Weak couplings keep the two ordered basins connected at β = 3.
        let mut chain = small_chain();
        chain.couplings.iter_mut().for_each(|j| *j *= 0.6);
        let sa = SimulatedAnnealing { sweeps: 1500, beta: BetaSchedule::Fixed { beta: 3.0 } };
        let req = SamplerRequest { batch_size: 1000, ..SamplerRequest::new(chain.clone(), 50_000, 3) };
        let set = run_sa(&req, &sa).unwrap();
        let tv = gibbs_tv(&chain, 3.0, &set);
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn samplers_are_deterministic() {
        let chain = ChainSpec::uniform(16, -1.0).unwrap();
        let req = SamplerRequest::new(chain, 20, 5);
        let sa = SimulatedAnnealing::new(50).unwrap();
        assert_eq!(run_sa(&req, &sa).unwrap(), run_sa(&req, &sa).unwrap());
        let svmc = SvmcTf::new(50, 32.0, Schedule::linear(1.0).unwrap()).unwrap();
        assert_eq!(run_svmc_tf(&req, &svmc).unwrap(), run_svmc_tf(&req, &svmc).unwrap());
        let other = SamplerRequest { seed: 6, ..req.clone() };
        assert_ne!(run_sa(&req, &sa).unwrap(), run_sa(&other, &sa).unwrap());
    }

    #[test]
    fn batches_follow_batch_size() {
        let req = SamplerRequest { batch_size: 7, ..SamplerRequest::new(ChainSpec::uniform(6, -1.0).unwrap(), 20, 1) };
        let set = run_sampler(&TransferMatrixSampler::ideal(1.0), &req).unwrap();
        assert_eq!(set.batch_sizes(), vec![7, 7, 6]);
    }

    #[test]
    fn long_sa_anneal_orders_the_chain() {
        let req = SamplerRequest::new(ChainSpec::uniform(32, -1.0).unwrap(), 20, 2);
        let fast = stats::density(&run_sa(&req, &SimulatedAnnealing::new(10).unwrap()).unwrap(), -1.0).unwrap();
        let slow = stats::density(&run_sa(&req, &SimulatedAnnealing::new(1000).unwrap()).unwrap(), -1.0).unwrap();
        assert!(slow < fast, "{slow} vs {fast}");
    }

    #[test]
    fn rotors_on_the_poles_carry_the_ising_energy() {
        let chain = small_chain();
        let sch = Schedule::linear(1.0).unwrap();
        let svmc = SvmcTf { sweeps: 1, beta: 32.0, schedule: sch.clone() };
        let req = SamplerRequest::new(chain.clone(), 1, 0);
        let prep = svmc.prepare(&req).unwrap();
        let unit = sch.eval(sch.critical_point(-1.0).unwrap()).unwrap().gamma;
        let spins: Vec<i8> = vec![1, 1, -1, 1, -1, -1, 1, 1];
        let theta: Vec<f64> = spins.iter().map(|&x| if x > 0 { 0.0 } else { PI }).collect();
        let ising: f64 = (0..8)
            .map(|i| chain.couplings[i] * f64::from(spins[i] * spins[(i + 1) % 8]) + chain.fields[i] * f64::from(spins[i]))
            .sum();
        let e = svmc.energy(&prep, &theta, 1.0).unwrap() * unit;
        assert!((e - ising).abs() < 1e-12, "{e} vs {ising}");
    }

    #[test]
    fn svmc_rotor_density_matches_quadrature() {
        // Two decoupled rotors (J = 0) at fixed s: each θ follows exp(−β E(θ)) dθ on [0, π].
        let mut chain = ChainSpec::uniform(4, -1.0).unwrap();
        chain.couplings = vec![0.0; 4];
        chain.fields = vec![0.3; 4];
        let sch = Schedule::linear(1.0).unwrap();
        let svmc = SvmcTf { sweeps: 400, beta: 4.0, schedule: sch.clone() };
        let req = SamplerRequest::new(chain.clone(), 1, 0);
        let prep = svmc.prepare(&req).unwrap();
        let s = 0.6;
        let e = sch.eval(s).unwrap();
        let unit = sch.eval(0.5).unwrap().gamma;
        let bins = 20;
        let mut hist = vec![0.0; bins];
        let n = 3000;
        for k in 0..n {
            let th = svmc.equilibrate(&prep, s, &mut sample_rng(9, k)).unwrap();
            for t in th {
                hist[((t / PI * bins as f64) as usize).min(bins - 1)] += 1.0;
            }
        }
        let density = |t: f64| (-4.0 * (-e.gamma * t.sin() + e.jcal * 0.3 * t.cos()) / unit).exp();
        let fine = 200;
        let exact: Vec<f64> = (0..bins)
            .map(|b| (0..fine).map(|q| density((b as f64 + (q as f64 + 0.5) / fine as f64) * PI / bins as f64)).sum::<f64>())
            .collect();
        let z: f64 = exact.iter().sum();
        let total = (4 * n) as f64;
        let tv: f64 = 0.5 * hist.iter().zip(&exact).map(|(h, p)| (h / total - p / z).abs()).sum::<f64>();
        assert!(tv < 0.02, "tv {tv}");
    }
}
