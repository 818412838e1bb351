//! Time-evolving block decimation for the periodic chain.
//!
//! The ring is folded onto an open chain (see [`Layout`]) so every coupling is at most a
//! next-nearest-neighbour gate. The state is kept in mixed-canonical form with a two-site
//! centre block that moves with the sweep; each gate costs one SVD.

mod layout;

pub use layout::{GateApplication, Layout};

use faer::{c64, Mat, MatRef, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bdg::KinkCorrelation;
use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::schedule::{angular, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TebdConfig {
    /// Largest bond dimension D.
    pub bond_dim: usize,
    /// Trotter step in ns.
    pub dt: f64,
    /// Singular values below `svd_threshold · σ_max` are dropped.
    pub svd_threshold: f64,
}

impl Default for TebdConfig {
    fn default() -> Self {
        Self { bond_dim: 32, dt: 0.01, svd_threshold: 1e-10 }
    }
}

impl TebdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bond_dim < 2 {
            return Err(Error::InvalidArgument(format!("bond dimension must be >= 2, got {}", self.bond_dim)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("Trotter step must be positive, got {}", self.dt)));
        }
        if !(0.0..1.0).contains(&self.svd_threshold) {
            return Err(Error::InvalidArgument(format!("svd_threshold {} outside [0, 1)", self.svd_threshold)));
        }
        Ok(())
    }
}

type Gate = [[c64; 4]; 4];

#[derive(Debug, Clone)]
struct Site {
    m: [Mat<c64>; 2],
}

/// Two neighbouring sites, pieces indexed `2σ_left + σ_right`.
#[derive(Debug, Clone)]
struct Block {
    m: [Mat<c64>; 4],
}

/// Matrix product state on the folded chain.
///
/// Between slices the centre block covers linear sites 0 and 1 and every other site is
/// right-canonical, so the norm of the state is the norm of the block.
#[derive(Debug, Clone)]
pub struct MpsState {
    layout: Layout,
    sites: Vec<Site>,
    head: Block,
    discarded: f64,
    entropy: Vec<f64>,
    slices: usize,
}

struct Split {
    left: Mat<c64>,
    right: Mat<c64>,
    entropy: f64,
    discarded: f64,
}

/// Gram eigenvalues below this fraction of the largest are indistinguishable from rounding.
const GRAM_FLOOR: f64 = 1e-14;

/// Truncated factorisation `θ ≈ left · right` with one factor an isometry: the left one
/// when `left_isometry`, otherwise the right one. Kept Schmidt values are renormalised.
///
/// When the bond dimension is what limits the rank, the isometry comes from the
/// eigenvectors of the Gram matrix θθ† (or θ†θ) and the other factor is the projection of θ
/// onto it. Otherwise a full SVD resolves the small Schmidt values the Gram matrix cannot.
fn svd_split(theta: MatRef<'_, c64>, cfg: &TebdConfig, left_isometry: bool) -> Result<Split> {
    if theta.nrows().min(theta.ncols()) <= cfg.bond_dim {
        return exact_split(theta, cfg, left_isometry);
    }
    let gram = if left_isometry { theta * theta.adjoint() } else { theta.adjoint() * theta };
    let eig = gram
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("Schmidt decomposition failed: {e:?}")))?;
    let n = gram.nrows();
    let lambda: Vec<f64> = eig.S().column_vector().iter().rev().map(|x| x.re.max(0.0)).collect();
    let resolved = lambda.iter().filter(|&&x| x > GRAM_FLOOR * lambda[0]).count();
    if resolved <= cfg.bond_dim && resolved < theta.nrows().min(theta.ncols()) {
        return exact_split(theta, cfg, left_isometry);
    }
    let total: f64 = lambda.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::LinearAlgebra(format!("degenerate two-site tensor (norm² = {total})")));
    }
    let cut = lambda[0] * cfg.svd_threshold * cfg.svd_threshold;
    let chi = lambda.iter().take(cfg.bond_dim).take_while(|&&x| x > cut).count().max(1);
    let vecs = eig.U();
    let iso = Mat::from_fn(n, chi, |i, j| vecs[(i, n - 1 - j)]);
    let (mut left, mut right) = if left_isometry {
        let right = iso.adjoint() * theta;
        (iso, right)
    } else {
        (theta * &iso, iso.adjoint().to_owned())
    };
    let kept = if left_isometry { right.squared_norm_l2() } else { left.squared_norm_l2() };
    let scale = faer::Scale(c64::new(kept.sqrt().recip(), 0.0));
    if left_isometry {
        right *= scale;
    } else {
        left *= scale;
    }
    Ok(Split { left, right, entropy: entropy(&lambda[..chi]), discarded: (1.0 - kept / total).max(0.0) })
}

fn exact_split(theta: MatRef<'_, c64>, cfg: &TebdConfig, left_isometry: bool) -> Result<Split> {
    let svd = theta.thin_svd().map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
    let sv: Vec<f64> = svd.S().column_vector().iter().map(|x| x.re).collect();
    let total: f64 = sv.iter().map(|x| x * x).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::LinearAlgebra(format!("degenerate two-site tensor (norm² = {total})")));
    }
    let cut = cfg.svd_threshold * sv[0];
    let chi = sv.iter().take(cfg.bond_dim).take_while(|&&x| x > cut).count().max(1);
    let kept: f64 = sv[..chi].iter().map(|x| x * x).sum();
    let scale = kept.sqrt().recip();
    let (u, v) = (svd.U(), svd.V());
    let (lw, rw) = if left_isometry { (1.0, scale) } else { (scale, 1.0) };
    let left = Mat::from_fn(u.nrows(), chi, |i, j| u[(i, j)] * if left_isometry { lw } else { sv[j] * lw });
    let right = Mat::from_fn(chi, v.nrows(), |i, j| v[(j, i)].conj() * if left_isometry { sv[i] * rw } else { rw });
    let sq: Vec<f64> = sv[..chi].iter().map(|x| x * x).collect();
    Ok(Split { left, right, entropy: entropy(&sq), discarded: 1.0 - kept / total })
}

/// Von Neumann entropy of unnormalised Schmidt weights.
fn entropy(weights: &[f64]) -> f64 {
    let w: f64 = weights.iter().sum();
    weights.iter().map(|&x| x / w).filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

fn rows(m: &Mat<c64>, start: usize, n: usize) -> Mat<c64> {
    m.as_ref().subrows(start, n).to_owned()
}

fn cols(m: &Mat<c64>, start: usize, n: usize) -> Mat<c64> {
    m.as_ref().subcols(start, n).to_owned()
}

/// `out[o] = Σ_i g[o][i] · m[i]`.
fn mix4(g: &Gate, m: [&Mat<c64>; 4]) -> [Mat<c64>; 4] {
    let (r, c) = (m[0].nrows(), m[0].ncols());
    std::array::from_fn(|o| {
        Mat::from_fn(r, c, |i, j| {
            g[o][0] * m[0][(i, j)] + g[o][1] * m[1][(i, j)] + g[o][2] * m[2][(i, j)] + g[o][3] * m[3][(i, j)]
        })
    })
}

/// Three-site tensor indexed `4σ1 + 2σ2 + σ3`; the gate acts on σ1 and σ3.
fn gate_outer(g: &Gate, theta: &mut [Mat<c64>; 8]) {
    for s2 in 0..2 {
        let idx = [s2 * 2, s2 * 2 + 1, 4 + s2 * 2, 4 + s2 * 2 + 1];
        let new = mix4(g, idx.map(|k| &theta[k]));
        for (k, m) in idx.into_iter().zip(new) {
            theta[k] = m;
        }
    }
}

/// `exp(−i 2π τ h)` for the two-site Hamiltonian of a linear bond `(p, q)`.
fn bond_gate(chain: &ChainSpec, layout: &Layout, g: &GateApplication, gamma: f64, jcal: f64, tau: f64) -> Result<Gate> {
    let (a, b) = (layout.ring_site[g.p], layout.ring_site[g.q]);
    let j = chain.couplings[g.ring_bond];
    let z = |s: usize| if s == 0 { 1.0 } else { -1.0 };
    let mut h = Mat::<f64>::zeros(4, 4);
    for sp in 0..2 {
        for sq in 0..2 {
            let k = sp * 2 + sq;
            h[(k, k)] = jcal * (j * z(sp) * z(sq) + 0.5 * (chain.fields[a] * z(sp) + chain.fields[b] * z(sq)));
            h[((1 - sp) * 2 + sq, k)] = -0.5 * gamma * chain.transverse_at(a);
            h[(sp * 2 + 1 - sq, k)] = -0.5 * gamma * chain.transverse_at(b);
        }
    }
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("gate eigensolver failed: {e:?}")))?;
    let vecs = eig.U();
    let vals = eig.S().column_vector();
    let w = angular(tau);
    let phase: Vec<c64> = (0..4).map(|k| c64::from_polar(1.0, -w * vals[k])).collect();
    Ok(std::array::from_fn(|r| {
        std::array::from_fn(|c| (0..4).map(|k| phase[k] * (vecs[(r, k)] * vecs[(c, k)])).sum())
    }))
}

impl MpsState {
    /// Product state with every spin along +x (−x where the transverse multiplier is negative).
    pub fn paramagnet(chain: &ChainSpec) -> Result<Self> {
        chain.validate()?;
        let layout = Layout::new(chain.len())?;
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        let sites: Vec<Site> = layout
            .ring_site
            .iter()
            .map(|&r| {
                let sgn = if chain.transverse_at(r) < 0.0 { -1.0 } else { 1.0 };
                Site { m: [Mat::from_fn(1, 1, |_, _| c64::new(amp, 0.0)), Mat::from_fn(1, 1, |_, _| c64::new(sgn * amp, 0.0))] }
            })
            .collect();
        let head = Block { m: std::array::from_fn(|k| &sites[0].m[k / 2] * &sites[1].m[k % 2]) };
        let l = layout.l;
        Ok(Self { layout, sites, head, discarded: 0.0, entropy: vec![0.0; l - 1], slices: 0 })
    }

    pub fn len(&self) -> usize {
        self.layout.l
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Cumulative discarded weight, summed over every truncation.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded
    }

    /// Entanglement entropy across each linear cut `k | k+1`, from the latest split there.
    pub fn bond_entropy(&self) -> &[f64] {
        &self.entropy
    }

    /// Bond dimension of each linear cut `k | k+1`.
    pub fn bond_dimensions(&self) -> Vec<usize> {
        let mut d = vec![self.head_rank()];
        d.extend(self.sites[2..].iter().map(|s| s.m[0].nrows()));
        d
    }

    fn head_rank(&self) -> usize {
        self.head_matrix().thin_svd().map_or(0, |s| s.S().column_vector().iter().filter(|x| x.re > 1e-14).count())
    }

    pub fn max_bond_dimension(&self) -> usize {
        self.bond_dimensions().into_iter().max().unwrap_or(1)
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    fn head_matrix(&self) -> Mat<c64> {
        let dr = self.head.m[0].ncols();
        Mat::from_fn(2, 2 * dr, |i, j| self.head.m[i * 2 + j / dr][(0, j % dr)])
    }

    /// One symmetric Trotter slice of length `dt` ns with the Hamiltonian frozen at `s`.
    pub fn trotter_slice(&mut self, chain: &ChainSpec, schedule: &Schedule, s: f64, dt: f64, cfg: &TebdConfig) -> Result<()> {
        if chain.len() != self.layout.l {
            return Err(Error::InvalidChain(format!("chain has {} sites, state has {}", chain.len(), self.layout.l)));
        }
        let e = schedule.eval_unchecked(s);
        let mut centre = 0;
        for g in self.layout.sweep.clone() {
            let tau = if g.squared { dt } else { 0.5 * dt };
            let gate = bond_gate(chain, &self.layout, &g, e.gamma, e.jcal, tau)?;
            if g.q == g.p + 1 {
                debug_assert_eq!(centre, g.p);
                let new = mix4(&gate, [&self.head.m[0], &self.head.m[1], &self.head.m[2], &self.head.m[3]]);
                self.head.m = new;
            } else if centre == g.p {
                self.move_right(g.p, &gate, cfg)?;
                centre = g.p + 1;
            } else {
                debug_assert_eq!(centre, g.p + 1);
                self.move_left(g.p, &gate, cfg)?;
                centre = g.p;
            }
        }
        debug_assert_eq!(centre, 0);
        self.slices += 1;
        Ok(())
    }

    fn move_right(&mut self, p: usize, gate: &Gate, cfg: &TebdConfig) -> Result<()> {
        let site = &self.sites[p + 2];
        let (dl, dr) = (self.head.m[0].nrows(), site.m[0].ncols());
        let mut theta: [Mat<c64>; 8] = std::array::from_fn(|k| &self.head.m[k >> 1] * &site.m[k & 1]);
        gate_outer(gate, &mut theta);
        let big = Mat::from_fn(2 * dl, 4 * dr, |i, j| theta[(i / dl) * 4 + j / dr][(i % dl, j % dr)]);
        let sp = svd_split(big.as_ref(), cfg, true)?;
        let chi = sp.left.ncols();
        self.sites[p] = Site { m: [rows(&sp.left, 0, dl), rows(&sp.left, dl, dl)] };
        self.head = Block { m: std::array::from_fn(|k| cols(&sp.right, k * dr, dr)) };
        debug_assert_eq!(self.head.m[0].nrows(), chi);
        self.discarded += sp.discarded;
        self.entropy[p] = sp.entropy;
        Ok(())
    }

    fn move_left(&mut self, p: usize, gate: &Gate, cfg: &TebdConfig) -> Result<()> {
        let site = &self.sites[p];
        let (dl, dr) = (site.m[0].nrows(), self.head.m[0].ncols());
        let mut theta: [Mat<c64>; 8] = std::array::from_fn(|k| &site.m[k >> 2] * &self.head.m[k & 3]);
        gate_outer(gate, &mut theta);
        let big = Mat::from_fn(4 * dl, 2 * dr, |i, j| theta[(i / dl) * 2 + j / dr][(i % dl, j % dr)]);
        let sp = svd_split(big.as_ref(), cfg, false)?;
        self.head = Block { m: std::array::from_fn(|k| rows(&sp.left, k * dl, dl)) };
        self.sites[p + 2] = Site { m: [cols(&sp.right, 0, dr), cols(&sp.right, dr, dr)] };
        self.discarded += sp.discarded;
        self.entropy[p + 1] = sp.entropy;
        Ok(())
    }

    /// Site tensors with the centre block split; site 0 carries the norm, the rest are
    /// right-canonical.
    fn resolved_sites(&self) -> Result<Vec<Site>> {
        let dr = self.head.m[0].ncols();
        let theta = self.head_matrix();
        let svd = theta.thin_svd().map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
        let sv: Vec<f64> = svd.S().column_vector().iter().map(|x| x.re).collect();
        let chi = sv.iter().filter(|&&x| x > 1e-14 * sv[0]).count().max(1);
        let (u, v) = (svd.U(), svd.V());
        let left = Mat::from_fn(2, chi, |i, j| u[(i, j)] * sv[j]);
        let right = Mat::from_fn(chi, 2 * dr, |i, j| v[(j, i)].conj());
        let mut sites = self.sites.clone();
        sites[0] = Site { m: [rows(&left, 0, 1), rows(&left, 1, 1)] };
        sites[1] = Site { m: [cols(&right, 0, dr), cols(&right, dr, dr)] };
        Ok(sites)
    }

    pub fn norm(&self) -> f64 {
        self.head.m.iter().map(|m| m.squared_norm_l2()).sum::<f64>().sqrt()
    }

    /// Exact expectation values of kink observables.
    pub fn observables(&self) -> Result<Observer> {
        let sites = self.resolved_sites()?;
        let mut envs = Vec::with_capacity(sites.len());
        let mut e = Mat::<c64>::identity(1, 1);
        for s in &sites {
            e = transfer(e.as_ref(), s, false);
            envs.push(e.clone());
        }
        Ok(Observer { layout: self.layout.clone(), sites, envs })
    }
}

/// `Σ_σ (±1) A_σ† E A_σ`, with −1 on σ = 1 when a σᶻ is inserted.
fn transfer(e: MatRef<'_, c64>, site: &Site, z: bool) -> Mat<c64> {
    let a0 = site.m[0].as_ref();
    let a1 = site.m[1].as_ref();
    let t0 = a0.adjoint() * (e * a0);
    let t1 = a1.adjoint() * (e * a1);
    if z {
        t0 - t1
    } else {
        t0 + t1
    }
}

fn trace(m: &Mat<c64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Left environments of a resolved state, for σᶻ-string expectation values.
pub struct Observer {
    layout: Layout,
    sites: Vec<Site>,
    envs: Vec<Mat<c64>>,
}

impl Observer {
    fn env_before(&self, p: usize) -> Mat<c64> {
        if p == 0 {
            Mat::identity(1, 1)
        } else {
            self.envs[p - 1].clone()
        }
    }

    pub fn norm_squared(&self) -> f64 {
        trace(&self.envs[self.envs.len() - 1])
    }

    /// `⟨Π σᶻ⟩` over a set of linear positions.
    pub fn z_string(&self, positions: &[usize]) -> f64 {
        let mut pos = positions.to_vec();
        pos.sort_unstable();
        pos.dedup();
        let Some((&first, &last)) = pos.first().zip(pos.last()) else {
            return self.norm_squared();
        };
        let mut e = self.env_before(first);
        for x in first..=last {
            e = transfer(e.as_ref(), &self.sites[x], pos.binary_search(&x).is_ok());
        }
        trace(&e)
    }

    /// `⟨σᶻ_i σᶻ_{i+1}⟩` on every ring bond.
    pub fn two_point(&self) -> Vec<f64> {
        (0..self.layout.l)
            .map(|b| {
                let (p, q) = self.layout.bond_positions(b);
                self.z_string(&[p, q])
            })
            .collect()
    }

    /// `⟨σᶻ_a σᶻ_{a+1} σᶻ_b σᶻ_{b+1}⟩` for pairs of ring bonds `(a, b)`.
    pub fn bond_pairs(&self, pairs: &[(usize, usize)]) -> Vec<f64> {
        let l = self.layout.l;
        let mut out = vec![0.0; pairs.len()];
        let mut by_left: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); l];
        let mut mixed = Vec::new();
        for (t, &(b1, b2)) in pairs.iter().enumerate() {
            let (p1, q1) = self.layout.bond_positions(b1);
            let (p2, q2) = self.layout.bond_positions(b2);
            if q1 < p2 {
                by_left[b1].push((p2, q2, t));
            } else if q2 < p1 {
                by_left[b2].push((p1, q1, t));
            } else {
                mixed.push(t);
            }
        }
        let swept: Vec<(usize, f64)> = by_left
            .par_iter_mut()
            .enumerate()
            .flat_map_iter(|(b, partners)| {
                partners.sort_unstable();
                let mut vals = Vec::with_capacity(partners.len());
                if !partners.is_empty() {
                    let (p1, q1) = self.layout.bond_positions(b);
                    let mut e = self.env_before(p1);
                    for x in p1..=q1 {
                        e = transfer(e.as_ref(), &self.sites[x], x == p1 || x == q1);
                    }
                    let mut cur = q1;
                    for &(p2, q2, t) in partners.iter() {
                        while cur + 1 < p2 {
                            cur += 1;
                            e = transfer(e.as_ref(), &self.sites[cur], false);
                        }
                        let mut f = e.clone();
                        for x in p2..=q2 {
                            f = transfer(f.as_ref(), &self.sites[x], x == p2 || x == q2);
                        }
                        vals.push((t, trace(&f)));
                    }
                }
                vals
            })
            .collect();
        for (t, v) in swept {
            out[t] = v;
        }
        let mixed_vals: Vec<f64> = mixed
            .par_iter()
            .map(|&t| {
                let (b1, b2) = pairs[t];
                let (p1, q1) = self.layout.bond_positions(b1);
                let (p2, q2) = self.layout.bond_positions(b2);
                let mut set: Vec<usize> = Vec::with_capacity(4);
                for x in [p1, q1, p2, q2] {
                    if let Some(k) = set.iter().position(|&y| y == x) {
                        set.swap_remove(k);
                    } else {
                        set.push(x);
                    }
                }
                self.z_string(&set)
            })
            .collect();
        for (t, v) in mixed.into_iter().zip(mixed_vals) {
            out[t] = v;
        }
        out
    }

    /// Kink density and `C^KK_r` with `K_i = (1 + sign(J) σᶻσᶻ)/2`.
    pub fn kink_stats(&self, chain: &ChainSpec, rs: &[usize]) -> Result<KinkCorrelation> {
        let l = self.layout.l;
        let sg = chain.j_sign();
        let zz = self.two_point();
        let n_bar = zz.iter().map(|z| 0.5 * (1.0 + sg * z)).sum::<f64>() / l as f64;
        if !(n_bar > 0.0) {
            return Err(Error::ZeroDensity);
        }
        if let Some(&r) = rs.iter().find(|&&r| r == 0 || r >= l) {
            return Err(Error::InvalidArgument(format!("separation r = {r} outside 1..{l}")));
        }
        let pairs: Vec<(usize, usize)> = rs.iter().flat_map(|&r| (0..l).map(move |i| (i, (i + r) % l))).collect();
        let four = self.bond_pairs(&pairs);
        let ckk = rs
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let kk = (0..l)
                    .map(|i| 0.25 * (1.0 + sg * zz[i] + sg * zz[(i + r) % l] + four[k * l + i]))
                    .sum::<f64>()
                    / l as f64;
                (kk - n_bar * n_bar) / (n_bar * n_bar)
            })
            .collect();
        Ok(KinkCorrelation { n_bar, r: rs.to_vec(), ckk })
    }
}

/// Summary of a TEBD anneal.
#[derive(Debug, Clone, PartialEq)]
pub struct TebdObservables {
    pub kinks: KinkCorrelation,
    pub two_point: Vec<f64>,
    pub discarded_weight: f64,
    pub max_entropy: f64,
    pub max_bond_dimension: usize,
    pub slices: usize,
    pub dt: f64,
}

/// Anneal from the all-+x product state over the schedule range in slices of at most
/// `cfg.dt` ns, each evaluated at its midpoint in s.
pub fn evolve_tebd(chain: &ChainSpec, schedule: &Schedule, t_a: f64, cfg: &TebdConfig) -> Result<MpsState> {
    cfg.validate()?;
    if !(t_a > 0.0 && t_a.is_finite()) {
        return Err(Error::InvalidArgument(format!("anneal time must be positive, got {t_a}")));
    }
    chain.require_even()?;
    let mut state = MpsState::paramagnet(chain)?;
    let (s0, s1) = schedule.range();
    let total = (s1 - s0) * t_a;
    let m = ((total / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let (ds, dt) = ((s1 - s0) / m as f64, total / m as f64);
    for k in 0..m {
        state.trotter_slice(chain, schedule, s0 + (k as f64 + 0.5) * ds, dt, cfg)?;
    }
    Ok(state)
}

pub fn run_tebd(
    chain: &ChainSpec,
    schedule: &Schedule,
    t_a: f64,
    cfg: &TebdConfig,
    rs: &[usize],
) -> Result<(MpsState, TebdObservables)> {
    let state = evolve_tebd(chain, schedule, t_a, cfg)?;
    let obs = state.observables()?;
    let kinks = obs.kink_stats(chain, rs)?;
    let summary = TebdObservables {
        kinks,
        two_point: obs.two_point(),
        discarded_weight: state.discarded_weight(),
        max_entropy: state.bond_entropy().iter().fold(0.0, |m: f64, &s| m.max(s)),
        max_bond_dimension: state.max_bond_dimension(),
        slices: state.slices(),
        dt: (schedule.range().1 - schedule.range().0) * t_a / state.slices() as f64,
    };
    Ok((state, summary))
}
