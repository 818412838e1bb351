//! Real-space Bogoliubov-de Gennes dynamics of the fermionized chain.
//!
//! With `a_i = Σ_m u_im b_m + v*_im b†_m` the coefficient matrices obey
//! `i du/ds = 2π t_a (A u + B v)` and `i dv/ds = −2π t_a (A v + B u)`, where
//! `A_ii = −2Γ_i`, `A_{i,i±1} = J`, `B_{i,i+1} = −B_{i+1,i} = J_i` and the wrap-around
//! entries carry the anti-periodic sign.

pub mod dense;

use faer::{c64, Mat, MatRef, Side};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::modes::fermion_phase;
use crate::ode::StepPolicy;
use crate::schedule::{angular, Schedule};

const UNITARITY_ABORT: f64 = 1e-5;
const CHECK_EVERY: usize = 64;
const ZERO_MODE_TOL: f64 = 1e-10;

/// Dense A and B at schedule position `s`.
pub fn build_ab(chain: &ChainSpec, schedule: &Schedule, s: f64) -> Result<(Mat<f64>, Mat<f64>)> {
    chain.validate()?;
    let e = schedule.eval(s)?;
    let l = chain.len();
    let mut a = Mat::<f64>::zeros(l, l);
    let mut b = Mat::<f64>::zeros(l, l);
    for i in 0..l {
        a[(i, i)] = -2.0 * e.gamma * chain.transverse_at(i);
    }
    for i in 0..l {
        let j = (i + 1) % l;
        let jv = e.jcal * chain.couplings[i];
        let sign = if j == 0 { -1.0 } else { 1.0 };
        a[(i, j)] += sign * jv;
        a[(j, i)] += sign * jv;
        b[(i, j)] += sign * jv;
        b[(j, i)] -= sign * jv;
    }
    Ok((a, b))
}

/// The 2L×2L block matrix `[[A, B], [−B, −A]]`.
pub fn bdg_matrix(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let l = a.nrows();
    Mat::from_fn(2 * l, 2 * l, |i, j| match (i < l, j < l) {
        (true, true) => a[(i, j)],
        (true, false) => b[(i, j - l)],
        (false, true) => -b[(i - l, j)],
        (false, false) => -a[(i - l, j - l)],
    })
}

/// Bogoliubov coefficients, stored column-major (`u[m*L + i] = u_im`).
#[derive(Debug, Clone, PartialEq)]
pub struct BdgState {
    pub l: usize,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub s: f64,
    pub steps: usize,
}

impl BdgState {
    pub fn u_mat(&self) -> MatRef<'_, c64> {
        MatRef::from_column_major_slice(&self.u, self.l, self.l)
    }

    pub fn v_mat(&self) -> MatRef<'_, c64> {
        MatRef::from_column_major_slice(&self.v, self.l, self.l)
    }

    /// ‖u†u + v†v − I‖_max
    pub fn unitarity_error(&self) -> f64 {
        let u = self.u_mat();
        let v = self.v_mat();
        let g = u.adjoint() * u + v.adjoint() * v;
        let mut worst = 0.0f64;
        for j in 0..self.l {
            for i in 0..self.l {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - c64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Quasiparticle vacuum of the instantaneous Hamiltonian at `s`.
pub fn ground_state_at(chain: &ChainSpec, schedule: &Schedule, s: f64) -> Result<BdgState> {
    check_chain(chain)?;
    let l = chain.len();
    let e = schedule.eval(s)?;
    if e.jcal * chain.max_abs_coupling() == 0.0 {
        if (0..l).any(|i| e.gamma * chain.transverse_at(i) <= 0.0) {
            return Err(Error::InvalidArgument(format!("degenerate zero modes at s = {s}")));
        }
        // A = −2Γ, B = 0: every site mode is filled, u = 0, v = I.
        let mut v = vec![C64::new(0.0, 0.0); l * l];
        for i in 0..l {
            v[i * l + i] = C64::new(1.0, 0.0);
        }
        return Ok(BdgState { l, u: vec![C64::new(0.0, 0.0); l * l], v, s, steps: 0 });
    }
    let (a, b) = build_ab(chain, schedule, s)?;
    let m = bdg_matrix(a.as_ref(), b.as_ref());
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("BdG eigendecomposition failed: {e:?}")))?;
    let vals: Vec<f64> = eig.S().column_vector().iter().copied().collect();
    if vals[l - 1] > -ZERO_MODE_TOL || vals[l] < ZERO_MODE_TOL {
        return Err(Error::InvalidArgument(format!(
            "degenerate zero modes at s = {s} (eigenvalues {} and {})",
            vals[l - 1],
            vals[l]
        )));
    }
    let vecs = eig.U();
    let mut u = Vec::with_capacity(l * l);
    let mut v = Vec::with_capacity(l * l);
    for m in 0..l {
        let col = l + m;
        u.extend((0..l).map(|i| C64::new(vecs[(i, col)], 0.0)));
        v.extend((0..l).map(|i| C64::new(vecs[(l + i, col)], 0.0)));
    }
    Ok(BdgState { l, u, v, s, steps: 0 })
}

/// Initial state at the start of the schedule.
pub fn init_uv(chain: &ChainSpec, schedule: &Schedule) -> Result<BdgState> {
    ground_state_at(chain, schedule, schedule.range().0)
}

fn check_chain(chain: &ChainSpec) -> Result<()> {
    chain.validate()?;
    chain.require_even()?;
    if chain.has_fields() {
        return Err(Error::InvalidChain("longitudinal fields are not representable in the BdG solver".into()));
    }
    Ok(())
}

/// Column-independent form of the BdG equations. With `S = u + v` and `D = u − v`,
/// `dS/ds = −i w (Γ g ∘ D + 2𝒥 jdn ∘ D_{i−1})` and `dD/ds = −i w (Γ g ∘ S + 2𝒥 jup ∘ S_{i+1})`,
/// where `g_i = −2γ_i` and `jup`, `jdn` carry the anti-periodic wrap sign.
struct ColumnSystem {
    g: Vec<f64>,
    jup2: Vec<f64>,
    jdn2: Vec<f64>,
}

impl ColumnSystem {
    fn new(chain: &ChainSpec) -> Self {
        let l = chain.len();
        let g = (0..l).map(|i| -2.0 * chain.transverse_at(i)).collect();
        let jup2 = (0..l).map(|i| if i == l - 1 { -2.0 } else { 2.0 } * chain.couplings[i]).collect();
        let jdn2 = (0..l).map(|i| if i == 0 { -2.0 } else { 2.0 } * chain.couplings[(i + l - 1) % l]).collect();
        Self { g, jup2, jdn2 }
    }

    /// `out = −i w (Γ g ∘ x + 𝒥 c ∘ shift(x))` with `shift(x)_i = x_{i+offset mod L}`.
    #[inline]
    fn apply(&self, gamma: f64, jcal: f64, w: f64, x: &[C64], up: bool, out: &mut [C64]) {
        let l = x.len();
        let c = if up { &self.jup2 } else { &self.jdn2 };
        let edge = |i: usize| {
            let j = if up { (i + 1) % l } else { (i + l - 1) % l };
            let t = x[i] * (gamma * self.g[i]) + x[j] * (jcal * c[i]);
            C64::new(t.im * w, -t.re * w)
        };
        out[0] = edge(0);
        out[l - 1] = edge(l - 1);
        let (gw, jw) = (gamma * w, jcal * w);
        let inner = 1..l - 1;
        let shifted = if up { &x[2..] } else { &x[..l - 2] };
        for ((((o, xi), xs), gi), ci) in out[inner.clone()]
            .iter_mut()
            .zip(&x[inner.clone()])
            .zip(shifted)
            .zip(&self.g[inner.clone()])
            .zip(&c[inner])
        {
            let re = xi.re * (gw * gi) + xs.re * (jw * ci);
            let im = xi.im * (gw * gi) + xs.im * (jw * ci);
            *o = C64::new(im, -re);
        }
    }
}

/// Integrates one Bogoliubov column through every step. `grid[n]` holds (Γ, 𝒥) at
/// `s0 + n·ds/2`. Returns the largest norm drift seen at the checkpoints.
fn evolve_column(sys: &ColumnSystem, grid: &[(f64, f64)], w: f64, ds: f64, sv: &mut [C64], dv: &mut [C64]) -> f64 {
    let l = sv.len();
    let zero = C64::new(0.0, 0.0);
    let mut buf = vec![zero; 6 * l];
    let (acc_s, rest) = buf.split_at_mut(l);
    let (acc_d, rest) = rest.split_at_mut(l);
    let (tmp_s, rest) = rest.split_at_mut(l);
    let (tmp_d, rest) = rest.split_at_mut(l);
    let (k_s, k_d) = rest.split_at_mut(l);
    let steps = (grid.len() - 1) / 2;
    let mut worst = 0.0f64;
    let stage = |g: (f64, f64), s_in: &[C64], d_in: &[C64], k_s: &mut [C64], k_d: &mut [C64]| {
        sys.apply(g.0, g.1, w, d_in, false, k_s);
        sys.apply(g.0, g.1, w, s_in, true, k_d);
    };
    for step in 0..steps {
        let (lo, mid, hi) = (grid[2 * step], grid[2 * step + 1], grid[2 * step + 2]);
        stage(lo, sv, dv, k_s, k_d);
        for i in 0..l {
            acc_s[i] = sv[i] + k_s[i] * (ds / 6.0);
            acc_d[i] = dv[i] + k_d[i] * (ds / 6.0);
            tmp_s[i] = sv[i] + k_s[i] * (0.5 * ds);
            tmp_d[i] = dv[i] + k_d[i] * (0.5 * ds);
        }
        stage(mid, tmp_s, tmp_d, k_s, k_d);
        for i in 0..l {
            acc_s[i] += k_s[i] * (ds / 3.0);
            acc_d[i] += k_d[i] * (ds / 3.0);
            tmp_s[i] = sv[i] + k_s[i] * (0.5 * ds);
            tmp_d[i] = dv[i] + k_d[i] * (0.5 * ds);
        }
        stage(mid, tmp_s, tmp_d, k_s, k_d);
        for i in 0..l {
            acc_s[i] += k_s[i] * (ds / 3.0);
            acc_d[i] += k_d[i] * (ds / 3.0);
            tmp_s[i] = sv[i] + k_s[i] * ds;
            tmp_d[i] = dv[i] + k_d[i] * ds;
        }
        stage(hi, tmp_s, tmp_d, k_s, k_d);
        for i in 0..l {
            sv[i] = acc_s[i] + k_s[i] * (ds / 6.0);
            dv[i] = acc_d[i] + k_d[i] * (ds / 6.0);
        }
        if (step + 1) % CHECK_EVERY == 0 || step + 1 == steps {
            // ‖u‖² + ‖v‖² = (‖S‖² + ‖D‖²)/2
            let n: f64 = sv.iter().chain(dv.iter()).map(|z| z.norm_sqr()).sum::<f64>() * 0.5;
            worst = worst.max((n - 1.0).abs());
            if !(worst < UNITARITY_ABORT) {
                return worst;
            }
        }
    }
    worst
}

/// Phase bound for the step policy. Uniform chains use exactly the mode-solver bound so
/// the two solvers share one s-grid.
fn bdg_phase(chain: &ChainSpec, schedule: &Schedule, t_a: f64) -> f64 {
    fermion_phase(schedule, chain.max_abs_coupling(), t_a) * chain.max_transverse().max(1.0)
}

/// Evolves the initial vacuum across the whole schedule at anneal time `t_a` (ns).
pub fn evolve_bdg(chain: &ChainSpec, schedule: &Schedule, t_a: f64, policy: &StepPolicy) -> Result<BdgState> {
    if !(t_a > 0.0 && t_a.is_finite()) {
        return Err(Error::InvalidArgument(format!("anneal time must be positive, got {t_a}")));
    }
    let init = init_uv(chain, schedule)?;
    let (s0, s1) = schedule.range();
    let steps = policy.steps(bdg_phase(chain, schedule, t_a));
    let l = chain.len();
    let ds = (s1 - s0) / steps as f64;
    let grid: Vec<(f64, f64)> = (0..=2 * steps)
        .map(|n| {
            let s = if n == 2 * steps { s1 } else { s0 + 0.5 * n as f64 * ds };
            let e = schedule.eval_unchecked(s);
            (e.gamma, e.jcal)
        })
        .collect();
    let sys = ColumnSystem::new(chain);
    let w = angular(t_a);
    let mut sum: Vec<C64> = init.u.iter().zip(&init.v).map(|(a, b)| a + b).collect();
    let mut diff: Vec<C64> = init.u.iter().zip(&init.v).map(|(a, b)| a - b).collect();
    let drift = sum
        .par_chunks_mut(l)
        .zip(diff.par_chunks_mut(l))
        .map(|(sv, dv)| evolve_column(&sys, &grid, w, ds, sv, dv))
        .reduce(|| 0.0, f64::max);
    if !(drift < UNITARITY_ABORT) {
        return Err(Error::Integration {
            s: s1,
            steps,
            reason: format!("Bogoliubov unitarity drift {drift:.3e}; increase the step count"),
        });
    }
    let u = sum.iter().zip(&diff).map(|(a, b)| (a + b) * 0.5).collect();
    let v = sum.iter().zip(&diff).map(|(a, b)| (a - b) * 0.5).collect();
    let state = BdgState { l, u, v, s: s1, steps };
    let drift = state.unitarity_error();
    if !(drift < UNITARITY_ABORT) {
        return Err(Error::Integration {
            s: s1,
            steps,
            reason: format!("Bogoliubov unitarity drift {drift:.3e}; increase the step count"),
        });
    }
    Ok(state)
}

/// Wick contractions of a BdG state: QP†, PQ†, QQ†, PP† with P = u+v, Q = v−u.
pub struct Correlators {
    l: usize,
    qp: Mat<c64>,
    pq: Mat<c64>,
    qq: Mat<c64>,
    pp: Mat<c64>,
}

impl Correlators {
    pub fn new(state: &BdgState) -> Self {
        let u = state.u_mat();
        let v = state.v_mat();
        let p = u + v;
        let q = v - u;
        Self {
            l: state.l,
            qp: &q * p.adjoint(),
            pq: &p * q.adjoint(),
            qq: &q * q.adjoint(),
            pp: &p * p.adjoint(),
        }
    }

    fn eta(&self, i: usize) -> f64 {
        if i == self.l - 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// ⟨σᶻ_i σᶻ_{i+1}⟩ for every bond.
    pub fn two_point(&self) -> Vec<f64> {
        let l = self.l;
        (0..l).map(|i| self.eta(i) * self.qp[(i, (i + 1) % l)].re).collect()
    }

    /// ⟨σᶻ_i σᶻ_{i+1} σᶻ_{i+r} σᶻ_{i+r+1}⟩ for every i, 1 ≤ r ≤ L−1.
    pub fn four_point(&self, r: usize) -> Result<Vec<f64>> {
        let l = self.l;
        if r == 0 || r >= l {
            return Err(Error::InvalidArgument(format!("separation r = {r} outside 1..{l}")));
        }
        // The Wick expression is written for the shorter arc; the longer one is the same
        // pair of bonds seen from the other end.
        if 2 * r > l {
            let back = self.four_point(l - r)?;
            return Ok((0..l).map(|i| back[(i + r) % l]).collect());
        }
        Ok((0..l)
            .map(|i| {
                let (a, b, c, d) = (i, (i + 1) % l, (i + r) % l, (i + r + 1) % l);
                let val = -self.qp[(a, d)] * self.pq[(b, c)]
                    + self.qq[(a, c)] * self.pp[(b, d)]
                    + self.qp[(a, b)] * self.qp[(c, d)];
                self.eta(a) * self.eta(c) * val.re
            })
            .collect())
    }
}

/// Kink density and normalized kink-kink correlator of a BdG state.
#[derive(Debug, Clone, PartialEq)]
pub struct KinkCorrelation {
    pub n_bar: f64,
    pub r: Vec<usize>,
    pub ckk: Vec<f64>,
}

/// `K_i = (1 + sign(J) σᶻσᶻ)/2`; `C_r = mean_i(⟨K_i K_{i+r}⟩ − n̄²)/n̄²`.
pub fn kink_stats_bdg(state: &BdgState, chain: &ChainSpec, rs: &[usize]) -> Result<KinkCorrelation> {
    let corr = Correlators::new(state);
    let sg = chain.j_sign();
    let zz = corr.two_point();
    let l = state.l as f64;
    let n_bar = zz.iter().map(|z| 0.5 * (1.0 + sg * z)).sum::<f64>() / l;
    if !(n_bar > 0.0) {
        return Err(Error::ZeroDensity);
    }
    let mut ckk = Vec::with_capacity(rs.len());
    for &r in rs {
        let four = corr.four_point(r)?;
        let kk: f64 = (0..state.l)
            .map(|i| 0.25 * (1.0 + sg * zz[i] + sg * zz[(i + r) % state.l] + four[i]))
            .sum::<f64>()
            / l;
        ckk.push((kk - n_bar * n_bar) / (n_bar * n_bar));
    }
    Ok(KinkCorrelation { n_bar, r: rs.to_vec(), ckk })
}

/// Probability of ending in the instantaneous ground state at the final schedule point,
/// `|⟨0_f|ψ⟩|² = |det(u_f†u + v_f†v)|`.
pub fn ground_state_probability(state: &BdgState, chain: &ChainSpec, schedule: &Schedule) -> Result<f64> {
    let gs = ground_state_at(chain, schedule, state.s)?;
    let m = gs.u_mat().adjoint() * state.u_mat() + gs.v_mat().adjoint() * state.v_mat();
    Ok(m.determinant().norm())
}
