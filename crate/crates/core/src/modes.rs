//! Momentum-space dynamics of the uniform periodic chain.
//!
//! In the anti-periodic sector every positive momentum `k = (2m−1)π/L` carries an
//! independent two-level problem
//! `H_k(s) = 2[𝒥|J|cos k − Γ]τᶻ + 2𝒥|J| sin k τˣ` (GHz), integrated in s with
//! `i dψ/ds = 2π t_a H_k ψ` from the mode ground state at the start of the schedule.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::StepPolicy;
use crate::schedule::{angular, Schedule};

const NORM_LIMIT: f64 = 1e-9;

pub fn momenta(l: usize) -> Result<Vec<f64>> {
    if l < 2 || l % 2 != 0 {
        return Err(Error::InvalidArgument(format!("chain length must be even and >= 2, got {l}")));
    }
    Ok((1..=l / 2).map(|m| (2 * m - 1) as f64 * PI / l as f64).collect())
}

/// Two-level Hamiltonian `z τᶻ + x τˣ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevel {
    pub z: f64,
    pub x: f64,
}

impl TwoLevel {
    pub fn mode(gamma: f64, jcal_abs_j: f64, k: f64) -> Self {
        Self { z: 2.0 * (jcal_abs_j * k.cos() - gamma), x: 2.0 * jcal_abs_j * k.sin() }
    }

    /// Normalised (ground, excited) eigenvectors, real.
    pub fn eigenvectors(&self) -> Result<([f64; 2], [f64; 2])> {
        if self.z == 0.0 && self.x == 0.0 {
            return Err(Error::InvalidArgument("degenerate two-level Hamiltonian".into()));
        }
        let phi = self.x.atan2(self.z);
        let (s, c) = (0.5 * phi).sin_cos();
        Ok(([-s, c], [c, s]))
    }
}

/// Integrates `i dψ/ds = rate·H(s)ψ` on `steps` equal RK4 steps over `[s0, s1]`.
/// Returns the final state and the largest norm deviation seen.
pub fn evolve_two_level(
    h: impl Fn(f64) -> TwoLevel,
    psi0: [C64; 2],
    s0: f64,
    s1: f64,
    rate: f64,
    steps: usize,
) -> ([C64; 2], f64) {
    let ds = (s1 - s0) / steps as f64;
    let mut psi = psi0;
    let mut worst = 0.0f64;
    let mut h_lo = h(s0);
    for n in 0..steps {
        let s = s0 + n as f64 * ds;
        let h_mid = h(s + 0.5 * ds);
        let h_hi = h(if n + 1 == steps { s1 } else { s + ds });
        psi = rk4_step(psi, h_lo, h_mid, h_hi, rate * ds);
        h_lo = h_hi;
        worst = worst.max((psi[0].norm_sqr() + psi[1].norm_sqr() - 1.0).abs());
    }
    (psi, worst)
}

#[inline]
fn deriv(h: TwoLevel, y: [C64; 2]) -> [C64; 2] {
    // −i (z τᶻ + x τˣ) y
    let a = C64::new(h.z, 0.0) * y[0] + h.x * y[1];
    let b = h.x * y[0] - h.z * y[1];
    [C64::new(a.im, -a.re), C64::new(b.im, -b.re)]
}

#[inline]
fn rk4_step(y: [C64; 2], h0: TwoLevel, hm: TwoLevel, h1: TwoLevel, dt: f64) -> [C64; 2] {
    let add = |y: [C64; 2], k: [C64; 2], c: f64| [y[0] + k[0] * c, y[1] + k[1] * c];
    let k1 = deriv(h0, y);
    let k2 = deriv(hm, add(y, k1, 0.5 * dt));
    let k3 = deriv(hm, add(y, k2, 0.5 * dt));
    let k4 = deriv(h1, add(y, k3, dt));
    let w = dt / 6.0;
    [
        y[0] + (k1[0] + (k2[0] + k3[0]) * 2.0 + k4[0]) * w,
        y[1] + (k1[1] + (k2[1] + k3[1]) * 2.0 + k4[1]) * w,
    ]
}

/// Total phase bound `2π t_a Δs · max_s ‖H‖` used to choose step counts for
/// the free-fermion solvers; ‖H_k‖ ≤ 2(Γ + 𝒥|J|).
pub(crate) fn fermion_phase(schedule: &Schedule, j_max: f64, t_a: f64) -> f64 {
    let (s0, s1) = schedule.range();
    angular(t_a) * (s1 - s0) * 2.0 * schedule.max_energy_scale(j_max)
}

/// Per-mode excitation probabilities of a uniform chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub l: usize,
    pub k: Vec<f64>,
    pub p: Vec<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl ModeSpectrum {
    /// n̄ = (2/L) Σ_{k>0} p_k
    pub fn kink_density(&self) -> f64 {
        2.0 * self.p.iter().sum::<f64>() / self.l as f64
    }

    /// Cumulants of the kink density n = N/L with N = 2 Σ_{k>0} Bernoulli(p_k).
    pub fn cumulants(&self) -> Cumulants {
        let l = self.l as f64;
        let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
        for &p in &self.p {
            s1 += p;
            s2 += p * (1.0 - p);
            s3 += p * (1.0 - p) * (1.0 - 2.0 * p);
        }
        Cumulants { k1: 2.0 * s1 / l, k2: 4.0 * s2 / (l * l), k3: 8.0 * s3 / (l * l * l) }
    }

    /// Π_{k>0}(1 − p_k)
    pub fn ground_state_probability(&self) -> f64 {
        self.p.iter().map(|p| 1.0 - p).product()
    }
}

/// Excitation probability of a single mode at the end of the schedule.
pub fn evolve_mode(schedule: &Schedule, j: f64, t_a: f64, k: f64, policy: &StepPolicy) -> Result<f64> {
    check_ta(t_a)?;
    let steps = policy.steps(fermion_phase(schedule, j, t_a));
    evolve_mode_with_steps(schedule, j.abs(), t_a, k, steps)
}

fn check_ta(t_a: f64) -> Result<()> {
    if t_a > 0.0 && t_a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("anneal time must be positive, got {t_a}")))
    }
}

fn evolve_mode_with_steps(schedule: &Schedule, aj: f64, t_a: f64, k: f64, steps: usize) -> Result<f64> {
    let (s0, s1) = schedule.range();
    let h = |s: f64| {
        let e = schedule.eval_unchecked(s);
        TwoLevel::mode(e.gamma, e.jcal * aj, k)
    };
    let (g0, _) = h(s0).eigenvectors()?;
    let (_, e1) = h(s1).eigenvectors()?;
    let psi0 = [C64::new(g0[0], 0.0), C64::new(g0[1], 0.0)];
    let (psi, worst) = evolve_two_level(h, psi0, s0, s1, angular(t_a), steps);
    if worst > NORM_LIMIT {
        return Err(Error::Integration {
            s: s1,
            steps,
            reason: format!("mode k = {k}: norm drift {worst:.3e} exceeds {NORM_LIMIT:e}"),
        });
    }
    Ok((psi[0] * e1[0] + psi[1] * e1[1]).norm_sqr().clamp(0.0, 1.0))
}

/// Evolves every positive momentum of a length-`l` chain.
pub fn mode_spectrum(schedule: &Schedule, j: f64, t_a: f64, l: usize, policy: &StepPolicy) -> Result<ModeSpectrum> {
    check_ta(t_a)?;
    let k = momenta(l)?;
    let steps = policy.steps(fermion_phase(schedule, j, t_a));
    let p = k
        .par_iter()
        .map(|&k| evolve_mode_with_steps(schedule, j.abs(), t_a, k, steps))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeSpectrum { l, k, p, steps })
}

pub fn kink_density_modes(schedule: &Schedule, j: f64, t_a: f64, l: usize, policy: &StepPolicy) -> Result<f64> {
    Ok(mode_spectrum(schedule, j, t_a, l, policy)?.kink_density())
}

pub fn cumulants_modes(schedule: &Schedule, j: f64, t_a: f64, l: usize, policy: &StepPolicy) -> Result<Cumulants> {
    Ok(mode_spectrum(schedule, j, t_a, l, policy)?.cumulants())
}

pub fn pgs_modes(schedule: &Schedule, j: f64, t_a: f64, l: usize, policy: &StepPolicy) -> Result<f64> {
    Ok(mode_spectrum(schedule, j, t_a, l, policy)?.ground_state_probability())
}

/// Sudden-quench limit: overlap of the initial mode ground state with the final excited state.
pub fn sudden_quench_probability(schedule: &Schedule, j: f64, k: f64) -> Result<f64> {
    let (s0, s1) = schedule.range();
    let e0 = schedule.eval(s0)?;
    let e1 = schedule.eval(s1)?;
    let (g0, _) = TwoLevel::mode(e0.gamma, e0.jcal * j.abs(), k).eigenvectors()?;
    let (_, x1) = TwoLevel::mode(e1.gamma, e1.jcal * j.abs(), k).eigenvectors()?;
    Ok((g0[0] * x1[0] + g0[1] * x1[1]).powi(2))
}
