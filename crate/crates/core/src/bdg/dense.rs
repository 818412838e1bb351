//! Brute-force 2^L state-vector integration of
//! `H(s) = −Γ(s) Σ γ_i σˣ_i + 𝒥(s) (Σ J_i σᶻ_i σᶻ_{i+1} + Σ h_i σᶻ_i)` for small chains.
//!
//! Basis state `x` has spin `i` up (σᶻ = +1) when bit `i` is clear.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::ode::StepPolicy;
use crate::schedule::{angular, Schedule};

pub const MAX_SITES: usize = 12;

const LANCZOS_MAX_KRYLOV: usize = 160;
const LANCZOS_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseObservables {
    pub n_bar: f64,
    /// ⟨σᶻ_i σᶻ_{i+1}⟩ per bond.
    pub two_point: Vec<f64>,
    /// C^KK_r for r = 0..L.
    pub ckk: Vec<f64>,
    pub p_gs: f64,
    pub steps: usize,
}

struct DenseHamiltonian<'a> {
    chain: &'a ChainSpec,
    l: usize,
    classical: Vec<f64>,
    gamma_site: Vec<f64>,
}

#[inline]
fn z(x: usize, i: usize) -> f64 {
    if x >> i & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl<'a> DenseHamiltonian<'a> {
    fn new(chain: &'a ChainSpec) -> Result<Self> {
        chain.validate()?;
        let l = chain.len();
        if l > MAX_SITES {
            return Err(Error::InvalidArgument(format!("dense oracle refuses L = {l} > {MAX_SITES}")));
        }
        let classical = (0..1usize << l)
            .map(|x| {
                (0..l)
                    .map(|i| chain.couplings[i] * z(x, i) * z(x, (i + 1) % l) + chain.fields[i] * z(x, i))
                    .sum()
            })
            .collect();
        let gamma_site = (0..l).map(|i| chain.transverse_at(i)).collect();
        Ok(Self { chain, l, classical, gamma_site })
    }

    fn dim(&self) -> usize {
        1 << self.l
    }

    fn apply_real(&self, gamma: f64, jcal: f64, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = jcal * self.classical[k] * x[k];
            for i in 0..self.l {
                acc -= gamma * self.gamma_site[i] * x[k ^ (1 << i)];
            }
            *o = acc;
        }
    }

    /// out = −i·w·H·x
    fn apply_evolution(&self, gamma: f64, jcal: f64, w: f64, x: &[C64], out: &mut [C64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = x[k] * (jcal * self.classical[k]);
            for i in 0..self.l {
                acc -= x[k ^ (1 << i)] * (gamma * self.gamma_site[i]);
            }
            *o = C64::new(acc.im * w, -acc.re * w);
        }
    }

    /// Spectral-radius bound Σ|Γγ_i| + 𝒥 Σ(|J_i| + |h_i|) maximised over the schedule.
    fn norm_bound(&self, schedule: &Schedule) -> f64 {
        let ext = schedule.extremes();
        let gsum: f64 = self.gamma_site.iter().map(|g| g.abs()).sum();
        let jsum: f64 = self.chain.couplings.iter().chain(&self.chain.fields).map(|v| v.abs()).sum();
        ext.gamma * gsum + ext.jcal * jsum
    }

    /// Ground state at fixed (Γ, 𝒥). Without longitudinal fields the search stays in the
    /// even sector of the global spin flip, which contains the free-fermion vacuum.
    fn ground_state(&self, gamma: f64, jcal: f64) -> Result<Vec<f64>> {
        let dim = self.dim();
        let even = !self.chain.has_fields();
        let flip = dim - 1;
        let project = |v: &mut [f64]| {
            if even {
                for k in 0..dim / 2 {
                    let m = 0.5 * (v[k] + v[k ^ flip]);
                    v[k] = m;
                    v[k ^ flip] = m;
                }
            }
        };
        let mut start: Vec<f64> =
            (0..dim).map(|k| 1.0 + 0.1 * ((k.wrapping_mul(2_654_435_761) % 1000) as f64 / 1000.0)).collect();
        project(&mut start);
        lanczos_ground(dim, |x, out| self.apply_real(gamma, jcal, x, out), start, project)
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
    n
}

/// Lowest eigenvector of a real symmetric operator by restarted Lanczos with full
/// reorthogonalisation.
fn lanczos_ground(
    dim: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    mut start: Vec<f64>,
    project: impl Fn(&mut [f64]),
) -> Result<Vec<f64>> {
    let krylov = LANCZOS_MAX_KRYLOV.min(dim);
    let mut w = vec![0.0; dim];
    for _restart in 0..50 {
        normalize(&mut start);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut result: Option<(Vec<f64>, bool)> = None;
        for j in 0..krylov {
            apply(&basis[j], &mut w);
            project(&mut w);
            let a: f64 = w.iter().zip(&basis[j]).map(|(x, y)| x * y).sum();
            alpha.push(a);
            for _pass in 0..2 {
                for b in &basis {
                    let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                    for (x, y) in w.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            let bnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let k = alpha.len();
            let t = Mat::from_fn(k, k, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = t
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::LinearAlgebra(format!("tridiagonal eigensolver failed: {e:?}")))?;
            let y = eig.U().col(0);
            let lambda = eig.S().column_vector()[0];
            let residual = (bnorm * y[k - 1]).abs();
            let done = residual < LANCZOS_TOL * lambda.abs().max(1.0) || bnorm < 1e-14 || k == dim;
            if done || j + 1 == krylov {
                let mut vec = vec![0.0; dim];
                for (coef, b) in y.iter().zip(&basis) {
                    for (o, x) in vec.iter_mut().zip(b) {
                        *o += coef * x;
                    }
                }
                result = Some((vec, done));
                break;
            }
            beta.push(bnorm);
            basis.push(w.iter().map(|x| x / bnorm).collect());
        }
        let (mut vec, done) = result.expect("krylov loop always produces a vector");
        project(&mut vec);
        normalize(&mut vec);
        if done {
            return Ok(vec);
        }
        start = vec;
    }
    Err(Error::LinearAlgebra("Lanczos did not converge".into()))
}

/// Final state of the full Schrödinger evolution.
pub fn dense_evolve(chain: &ChainSpec, schedule: &Schedule, t_a: f64, policy: &StepPolicy) -> Result<(Vec<C64>, usize)> {
    if !(t_a > 0.0 && t_a.is_finite()) {
        return Err(Error::InvalidArgument(format!("anneal time must be positive, got {t_a}")));
    }
    let ham = DenseHamiltonian::new(chain)?;
    let dim = ham.dim();
    let (s0, s1) = schedule.range();
    let e0 = schedule.eval(s0)?;
    let mut psi: Vec<C64> = if e0.jcal == 0.0 && ham.gamma_site.iter().all(|&g| g > 0.0) && e0.gamma > 0.0 {
        vec![C64::new((dim as f64).sqrt().recip(), 0.0); dim]
    } else {
        ham.ground_state(e0.gamma, e0.jcal)?.into_iter().map(|x| C64::new(x, 0.0)).collect()
    };
    let w = angular(t_a);
    let steps = policy.steps(w * (s1 - s0) * ham.norm_bound(schedule));
    let ds = (s1 - s0) / steps as f64;
    let zero = C64::new(0.0, 0.0);
    let (mut acc, mut tmp, mut k) = (vec![zero; dim], vec![zero; dim], vec![zero; dim]);
    for step in 0..steps {
        let s = s0 + step as f64 * ds;
        let s_next = if step + 1 == steps { s1 } else { s + ds };
        let lo = schedule.eval_unchecked(s);
        let mid = schedule.eval_unchecked(s + 0.5 * ds);
        let hi = schedule.eval_unchecked(s_next);
        acc.copy_from_slice(&psi);
        ham.apply_evolution(lo.gamma, lo.jcal, w, &psi, &mut k);
        for n in 0..dim {
            acc[n] += k[n] * (ds / 6.0);
            tmp[n] = psi[n] + k[n] * (0.5 * ds);
        }
        ham.apply_evolution(mid.gamma, mid.jcal, w, &tmp, &mut k);
        for n in 0..dim {
            acc[n] += k[n] * (ds / 3.0);
            tmp[n] = psi[n] + k[n] * (0.5 * ds);
        }
        ham.apply_evolution(mid.gamma, mid.jcal, w, &tmp, &mut k);
        for n in 0..dim {
            acc[n] += k[n] * (ds / 3.0);
            tmp[n] = psi[n] + k[n] * ds;
        }
        ham.apply_evolution(hi.gamma, hi.jcal, w, &tmp, &mut k);
        for n in 0..dim {
            acc[n] += k[n] * (ds / 6.0);
        }
        std::mem::swap(&mut psi, &mut acc);
    }
    Ok((psi, steps))
}

/// Kink density, bond correlations, kink-kink correlator and ground-state probability at
/// the end of the anneal.
pub fn dense_oracle(chain: &ChainSpec, schedule: &Schedule, t_a: f64, policy: &StepPolicy) -> Result<DenseObservables> {
    let (psi, steps) = dense_evolve(chain, schedule, t_a, policy)?;
    let ham = DenseHamiltonian::new(chain)?;
    let l = chain.len();
    let sg = chain.j_sign();
    let mut two_point = vec![0.0; l];
    let mut kk = vec![0.0; l];
    let mut kinks = vec![0.0; l];
    for (x, amp) in psi.iter().enumerate() {
        let p = amp.norm_sqr();
        for i in 0..l {
            let zz = z(x, i) * z(x, (i + 1) % l);
            two_point[i] += p * zz;
            kinks[i] = 0.5 * (1.0 + sg * zz);
        }
        for r in 0..l {
            let mut acc = 0.0;
            for i in 0..l {
                acc += kinks[i] * kinks[(i + r) % l];
            }
            kk[r] += p * acc / l as f64;
        }
    }
    let n_bar = two_point.iter().map(|zz| 0.5 * (1.0 + sg * zz)).sum::<f64>() / l as f64;
    if !(n_bar > 0.0) {
        return Err(Error::ZeroDensity);
    }
    let ckk = kk.iter().map(|v| (v - n_bar * n_bar) / (n_bar * n_bar)).collect();
    let e1 = schedule.eval(schedule.range().1)?;
    let gs = ham.ground_state(e1.gamma, e1.jcal)?;
    let overlap: C64 = gs.iter().zip(&psi).map(|(g, p)| p * g).sum();
    Ok(DenseObservables { n_bar, two_point, ckk, p_gs: overlap.norm_sqr(), steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdg::{evolve_bdg, ground_state_probability, kink_stats_bdg, Correlators};

    #[test]
    fn refuses_large_chains() {
        let chain = ChainSpec::uniform(14, -1.0).unwrap();
        let sch = Schedule::linear(1.0).unwrap();
        assert!(dense_oracle(&chain, &sch, 1.0, &StepPolicy::default()).is_err());
    }

    #[test]
    fn two_spin_chain_matches_analytic_solution() {
        // For L = 2 the even sector is spanned by |↑↑⟩+|↓↓⟩ and |↑↓⟩+|↓↑⟩, where
        // H = 2𝒥J τᶻ − 2Γ τˣ; the two-level integrator is the independent reference.
        use crate::modes::{evolve_two_level, TwoLevel};
        let sch = Schedule::linear(1.0).unwrap();
        let j = -0.8;
        let chain = ChainSpec::uniform(2, j).unwrap();
        let t_a = 1.7;
        let obs = dense_oracle(&chain, &sch, t_a, &StepPolicy::default()).unwrap();
        let h = |s: f64| {
            let e = sch.eval_unchecked(s);
            TwoLevel { z: 2.0 * e.jcal * j, x: -2.0 * e.gamma }
        };
        let (g0, _) = h(0.0).eigenvectors().unwrap();
        let (g1, _) = h(1.0).eigenvectors().unwrap();
        let psi0 = [C64::new(g0[0], 0.0), C64::new(g0[1], 0.0)];
        let (psi, _) = evolve_two_level(h, psi0, 0.0, 1.0, angular(t_a), 400_000);
        let zz = psi[0].norm_sqr() - psi[1].norm_sqr();
        assert!((obs.two_point[0] - zz).abs() < 1e-9, "{} vs {zz}", obs.two_point[0]);
        let pgs = (psi[0] * g1[0] + psi[1] * g1[1]).norm_sqr();
        assert!((obs.p_gs - pgs).abs() < 1e-9);
    }

    #[test]
    fn lanczos_matches_dense_diagonalisation() {
        let mut chain = ChainSpec::uniform(6, -1.0).unwrap();
        chain.fields = vec![0.03, -0.02, 0.01, 0.0, 0.05, -0.04];
        chain.couplings[2] = -1.1;
        let ham = DenseHamiltonian::new(&chain).unwrap();
        let (g, jc) = (0.6, 0.4);
        let gs = ham.ground_state(g, jc).unwrap();
        let dim = ham.dim();
        let mut cols = vec![0.0; dim];
        let h = Mat::from_fn(dim, dim, |r, c| {
            let mut e = vec![0.0; dim];
            e[c] = 1.0;
            ham.apply_real(g, jc, &e, &mut cols);
            cols[r]
        });
        let eig = h.self_adjoint_eigen(Side::Lower).unwrap();
        let v0 = eig.U().col(0);
        let ov: f64 = gs.iter().zip(v0.iter()).map(|(a, b)| a * b).sum();
        assert!((ov.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn agrees_with_bdg_on_disordered_chain() {
        let sch = Schedule::linear(1.0).unwrap();
        let mut chain = ChainSpec::uniform(8, -1.0).unwrap();
        chain.couplings = vec![-1.03, -0.96, -1.07, -0.99, -1.01, -0.94, -1.05, -0.98];
        let pol = StepPolicy::default();
        let t_a = 2.0;
        let dense = dense_oracle(&chain, &sch, t_a, &pol).unwrap();
        let st = evolve_bdg(&chain, &sch, t_a, &pol).unwrap();
        let zz = Correlators::new(&st).two_point();
        for i in 0..8 {
            assert!((zz[i] - dense.two_point[i]).abs() < 1e-7, "bond {i}: {} vs {}", zz[i], dense.two_point[i]);
        }
        let rs: Vec<usize> = (1..8).collect();
        let kc = kink_stats_bdg(&st, &chain, &rs).unwrap();
        assert!((kc.n_bar - dense.n_bar).abs() < 1e-7);
        for (r, c) in rs.iter().zip(&kc.ckk) {
            assert!((c - dense.ckk[*r]).abs() < 1e-6, "r={r}: {c} vs {}", dense.ckk[*r]);
        }
        let pgs = ground_state_probability(&st, &chain, &sch).unwrap();
        assert!((pgs - dense.p_gs).abs() < 1e-7, "{pgs} vs {}", dense.p_gs);
    }
}
