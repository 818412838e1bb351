//! Annealing schedules Γ(s), 𝒥(s) and the Kibble-Zurek constants derived from them.
//!
//! Energies are ordinary frequencies in GHz (E/h), times are in ns. An energy enters a
//! propagator as the angular rate `2π·E` rad/ns.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::num;

const BISECTION_TOL: f64 = 1e-12;
const DERIVATIVE_STEP: f64 = 1e-4;

/// Angular frequency in rad/ns for a frequency in GHz.
#[inline]
pub fn angular(freq_ghz: f64) -> f64 {
    2.0 * PI * freq_ghz
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Tabulated,
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub s: f64,
    pub gamma_ghz: f64,
    pub jcal_ghz: f64,
}

/// Transverse-field and Ising energy scales at one value of s, in GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub gamma: f64,
    pub jcal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KzConstants {
    pub s_c: f64,
    /// 1/ns
    pub b: f64,
}

impl KzConstants {
    /// Quench time τ_Q = b·t_a.
    pub fn tau_q(&self, t_a: f64) -> f64 {
        self.b * t_a
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Linear { beta: f64 },
    Quadratic { beta: f64 },
    Tabulated { s: Vec<f64>, gamma: Vec<f64>, jcal: Vec<f64> },
}

/// An annealing schedule. Analytic kinds:
/// linear `Γ = β(1−s)`, `𝒥 = βs`; quadratic `Γ = 4β(1−s)²`, `𝒥 = 4βs²`.
/// The Ising scale 𝒥 multiplies the dimensionless couplings J_i of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    repr: Repr,
}

impl Schedule {
    pub fn linear(beta_ghz: f64) -> Result<Self> {
        check_beta(beta_ghz)?;
        Ok(Self { repr: Repr::Linear { beta: beta_ghz } })
    }

    pub fn quadratic(beta_ghz: f64) -> Result<Self> {
        check_beta(beta_ghz)?;
        Ok(Self { repr: Repr::Quadratic { beta: beta_ghz } })
    }

    pub fn tabulated(points: &[SchedulePoint]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidSchedule("need at least two tabulated points".into()));
        }
        for p in points {
            if !(p.s.is_finite() && p.gamma_ghz.is_finite() && p.jcal_ghz.is_finite()) {
                return Err(Error::InvalidSchedule(format!("non-finite entry at s = {}", p.s)));
            }
            if !(0.0..=1.0).contains(&p.s) {
                return Err(Error::InvalidSchedule(format!("s = {} outside [0, 1]", p.s)));
            }
            if p.gamma_ghz < 0.0 || p.jcal_ghz < 0.0 {
                return Err(Error::InvalidSchedule(format!("negative energy at s = {}", p.s)));
            }
        }
        for w in points.windows(2) {
            if w[1].s <= w[0].s {
                return Err(Error::InvalidSchedule(format!(
                    "s values must be strictly increasing ({} then {})",
                    w[0].s, w[1].s
                )));
            }
            if w[1].gamma_ghz > w[0].gamma_ghz {
                return Err(Error::InvalidSchedule(format!("Gamma increases at s = {}", w[1].s)));
            }
            if w[1].jcal_ghz < w[0].jcal_ghz {
                return Err(Error::InvalidSchedule(format!("Jcal decreases at s = {}", w[1].s)));
            }
        }
        Ok(Self {
            repr: Repr::Tabulated {
                s: points.iter().map(|p| p.s).collect(),
                gamma: points.iter().map(|p| p.gamma_ghz).collect(),
                jcal: points.iter().map(|p| p.jcal_ghz).collect(),
            },
        })
    }

    /// Reads a CSV table with header `s,gamma_ghz,jcal_ghz`.
    pub fn from_csv_reader<R: Read>(reader: R, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse { path: origin.to_path_buf(), line, msg };
        let mut points = Vec::new();
        let mut saw_header = false;
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["s", "gamma_ghz", "jcal_ghz"] {
                    return Err(parse_err(lineno, format!("expected header `s,gamma_ghz,jcal_ghz`, got `{line}`")));
                }
                saw_header = true;
                continue;
            }
            let vals: Vec<&str> = line.split(',').map(str::trim).collect();
            if vals.len() != 3 {
                return Err(parse_err(lineno, format!("expected 3 columns, got {}", vals.len())));
            }
            let mut v = [0.0; 3];
            for (slot, text) in v.iter_mut().zip(&vals) {
                *slot = text.parse().map_err(|_| parse_err(lineno, format!("not a number: `{text}`")))?;
            }
            points.push(SchedulePoint { s: v[0], gamma_ghz: v[1], jcal_ghz: v[2] });
        }
        if !saw_header {
            return Err(parse_err(0, "empty schedule file".into()));
        }
        Self::tabulated(&points)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, path)
    }

    /// Writes the knots of a tabulated schedule, or `n` evenly spaced samples of an analytic one.
    pub fn write_csv<W: Write>(&self, mut out: W, n: usize) -> std::io::Result<()> {
        writeln!(out, "s,gamma_ghz,jcal_ghz")?;
        for p in self.knots(n) {
            writeln!(out, "{},{},{}", num(p.s), num(p.gamma_ghz), num(p.jcal_ghz))?;
        }
        Ok(())
    }

    fn knots(&self, n: usize) -> Vec<SchedulePoint> {
        match &self.repr {
            Repr::Tabulated { s, gamma, jcal } => (0..s.len())
                .map(|i| SchedulePoint { s: s[i], gamma_ghz: gamma[i], jcal_ghz: jcal[i] })
                .collect(),
            _ => {
                let n = n.max(2);
                (0..n)
                    .map(|i| {
                        let s = i as f64 / (n - 1) as f64;
                        let e = self.eval_unchecked(s);
                        SchedulePoint { s, gamma_ghz: e.gamma, jcal_ghz: e.jcal }
                    })
                    .collect()
            }
        }
    }

    /// Knots of a tabulated schedule; `None` for analytic kinds.
    pub fn table(&self) -> Option<Vec<SchedulePoint>> {
        matches!(self.repr, Repr::Tabulated { .. }).then(|| self.knots(0))
    }

    pub fn kind(&self) -> ScheduleKind {
        match self.repr {
            Repr::Linear { .. } => ScheduleKind::Linear,
            Repr::Quadratic { .. } => ScheduleKind::Quadratic,
            Repr::Tabulated { .. } => ScheduleKind::Tabulated,
        }
    }

    /// Domain of s covered by the schedule.
    pub fn range(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Tabulated { s, .. } => (s[0], s[s.len() - 1]),
            _ => (0.0, 1.0),
        }
    }

    pub fn eval(&self, s: f64) -> Result<Energies> {
        let (lo, hi) = self.range();
        if !(s >= lo && s <= hi) {
            return Err(Error::OutOfRange { s, lo, hi });
        }
        Ok(self.eval_unchecked(s))
    }

    /// Evaluation without the range check; tabulated schedules clamp to the end knots.
    pub(crate) fn eval_unchecked(&self, s: f64) -> Energies {
        match &self.repr {
            Repr::Linear { beta } => Energies { gamma: beta * (1.0 - s), jcal: beta * s },
            Repr::Quadratic { beta } => {
                Energies { gamma: 4.0 * beta * (1.0 - s) * (1.0 - s), jcal: 4.0 * beta * s * s }
            }
            Repr::Tabulated { s: xs, gamma, jcal } => {
                let n = xs.len();
                if s <= xs[0] {
                    return Energies { gamma: gamma[0], jcal: jcal[0] };
                }
                if s >= xs[n - 1] {
                    return Energies { gamma: gamma[n - 1], jcal: jcal[n - 1] };
                }
                // first knot strictly greater than s
                let hi = xs.partition_point(|&x| x <= s);
                let lo = hi - 1;
                let t = (s - xs[lo]) / (xs[hi] - xs[lo]);
                Energies {
                    gamma: gamma[lo] + t * (gamma[hi] - gamma[lo]),
                    jcal: jcal[lo] + t * (jcal[hi] - jcal[lo]),
                }
            }
        }
    }

    /// dΓ/ds and d𝒥/ds: exact for analytic kinds, central differences (h = 1e-4) for tables.
    pub fn derivatives(&self, s: f64) -> Result<Energies> {
        self.eval(s)?;
        Ok(match &self.repr {
            Repr::Linear { beta } => Energies { gamma: -beta, jcal: *beta },
            Repr::Quadratic { beta } => Energies { gamma: -8.0 * beta * (1.0 - s), jcal: 8.0 * beta * s },
            Repr::Tabulated { .. } => {
                let (lo, hi) = self.range();
                let a = (s - DERIVATIVE_STEP).max(lo);
                let b = (s + DERIVATIVE_STEP).min(hi);
                let ea = self.eval_unchecked(a);
                let eb = self.eval_unchecked(b);
                Energies { gamma: (eb.gamma - ea.gamma) / (b - a), jcal: (eb.jcal - ea.jcal) / (b - a) }
            }
        })
    }

    /// Solves Γ(s_c) = 𝒥(s_c)|J| by bisection.
    pub fn critical_point(&self, j: f64) -> Result<f64> {
        let aj = j.abs();
        if !(aj > 0.0 && aj.is_finite()) {
            return Err(Error::InvalidArgument(format!("coupling magnitude must be positive, got {j}")));
        }
        let f = |s: f64| {
            let e = self.eval_unchecked(s);
            e.gamma - e.jcal * aj
        };
        let (mut lo, mut hi) = self.range();
        let (flo, fhi) = (f(lo), f(hi));
        if !(flo > 0.0 && fhi < 0.0) {
            let (lo, hi) = self.range();
            return Err(Error::NoCriticalPoint { lo, hi });
        }
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `b = 2πΓ(s_c) / (𝒥′/𝒥 − Γ′/Γ)` evaluated at the critical point, in 1/ns.
    pub fn kz_constants(&self, j: f64) -> Result<KzConstants> {
        let s_c = self.critical_point(j)?;
        let e = self.eval(s_c)?;
        let d = self.derivatives(s_c)?;
        let denom = d.jcal / e.jcal - d.gamma / e.gamma;
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "non-positive log-derivative difference {denom} at s_c = {s_c}"
            )));
        }
        Ok(KzConstants { s_c, b: angular(e.gamma) / denom })
    }

    /// Largest Γ and largest 𝒥 over the schedule range (not necessarily at the same s).
    pub fn extremes(&self) -> Energies {
        match &self.repr {
            Repr::Tabulated { gamma, jcal, .. } => Energies {
                gamma: gamma.iter().copied().fold(0.0, f64::max),
                jcal: jcal.iter().copied().fold(0.0, f64::max),
            },
            _ => Energies { gamma: self.eval_unchecked(0.0).gamma, jcal: self.eval_unchecked(1.0).jcal },
        }
    }

    /// Upper bound on Γ(s) + 𝒥(s)·j_max over the schedule range, in GHz.
    pub fn max_energy_scale(&self, j_max: f64) -> f64 {
        let j_max = j_max.abs();
        match &self.repr {
            Repr::Tabulated { gamma, jcal, .. } => {
                gamma.iter().zip(jcal).map(|(g, jc)| g + jc * j_max).fold(0.0, f64::max)
            }
            // Both analytic kinds are convex in s, so the maximum is at an endpoint.
            _ => {
                let a = self.eval_unchecked(0.0);
                let b = self.eval_unchecked(1.0);
                (a.gamma + a.jcal * j_max).max(b.gamma + b.jcal * j_max)
            }
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSchedule(format!("beta_ghz must be positive, got {beta}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn analytic_values() {
        let lin = Schedule::linear(1.0).unwrap();
        assert_eq!(lin.eval(0.0).unwrap(), Energies { gamma: 1.0, jcal: 0.0 });
        assert_eq!(lin.eval(0.5).unwrap(), Energies { gamma: 0.5, jcal: 0.5 });
        let quad = Schedule::quadratic(1.0).unwrap();
        assert_eq!(quad.eval(0.5).unwrap(), Energies { gamma: 1.0, jcal: 1.0 });
        assert!(lin.eval(1.5).is_err());
    }

    #[test]
    fn critical_points() {
        let lin = Schedule::linear(1.0).unwrap();
        assert!(close(lin.critical_point(1.0).unwrap(), 0.5, 1e-11));
        assert!(close(lin.critical_point(-2.0).unwrap(), 1.0 / 3.0, 1e-11));
    }

    #[test]
    fn kz_b_analytic() {
        let b = |s: Schedule| s.kz_constants(1.0).unwrap().b;
        assert!(close(b(Schedule::linear(1.0).unwrap()), PI / 4.0, 1e-10));
        assert!(close(b(Schedule::linear(2.0).unwrap()), PI / 2.0, 1e-10));
        // s_c = 1/2, Γ(s_c) = 1, 𝒥'/𝒥 − Γ'/Γ = 4 + 4
        assert!(close(b(Schedule::quadratic(1.0).unwrap()), PI / 4.0, 1e-10));
    }

    #[test]
    fn tabulated_interpolation_and_range() {
        let pts = [
            SchedulePoint { s: 0.1, gamma_ghz: 4.0, jcal_ghz: 0.0 },
            SchedulePoint { s: 0.5, gamma_ghz: 1.0, jcal_ghz: 1.0 },
            SchedulePoint { s: 0.9, gamma_ghz: 0.0, jcal_ghz: 3.0 },
        ];
        let t = Schedule::tabulated(&pts).unwrap();
        for p in &pts {
            let e = t.eval(p.s).unwrap();
            assert_eq!((e.gamma, e.jcal), (p.gamma_ghz, p.jcal_ghz));
        }
        let e = t.eval(0.3).unwrap();
        assert!(close(e.gamma, 2.5, 1e-15) && close(e.jcal, 0.5, 1e-15));
        assert!(matches!(t.eval(0.05), Err(Error::OutOfRange { .. })));
        assert!(matches!(t.eval(0.95), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        let p = |s, g, j| SchedulePoint { s, gamma_ghz: g, jcal_ghz: j };
        assert!(Schedule::tabulated(&[p(0.0, 1.0, 0.0)]).is_err());
        assert!(Schedule::tabulated(&[p(0.5, 1.0, 0.0), p(0.5, 0.5, 1.0)]).is_err());
        assert!(Schedule::tabulated(&[p(0.0, 1.0, 0.0), p(1.0, 2.0, 1.0)]).is_err());
        assert!(Schedule::tabulated(&[p(0.0, 1.0, 1.0), p(1.0, 0.0, 0.5)]).is_err());
    }

    #[test]
    fn no_crossing_is_an_error() {
        let p = |s, g, j| SchedulePoint { s, gamma_ghz: g, jcal_ghz: j };
        let t = Schedule::tabulated(&[p(0.0, 5.0, 0.0), p(1.0, 4.0, 1.0)]).unwrap();
        assert!(matches!(t.critical_point(1.0), Err(Error::NoCriticalPoint { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let lin = Schedule::linear(1.0).unwrap();
        let mut buf = Vec::new();
        lin.write_csv(&mut buf, 101).unwrap();
        let t = Schedule::from_csv_reader(&buf[..], Path::new("mem")).unwrap();
        for s in [0.0, 0.123, 0.5, 0.77, 1.0] {
            let a = lin.eval(s).unwrap();
            let b = t.eval(s).unwrap();
            assert!(close(a.gamma, b.gamma, 1e-14) && close(a.jcal, b.jcal, 1e-14));
        }
        let kz_a = lin.kz_constants(1.0).unwrap();
        let kz_b = t.kz_constants(1.0).unwrap();
        assert!(close(kz_a.b, kz_b.b, 1e-9));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let text = "s,gamma_ghz,jcal_ghz\n0,1,0\n0.5,abc,1\n";
        match Schedule::from_csv_reader(text.as_bytes(), Path::new("x.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn max_energy_scale_bounds_samples() {
        for sch in [Schedule::linear(1.3).unwrap(), Schedule::quadratic(0.7).unwrap()] {
            let m = sch.max_energy_scale(1.4);
            for i in 0..=100 {
                let e = sch.eval(i as f64 / 100.0).unwrap();
                assert!(e.gamma + 1.4 * e.jcal <= m + 1e-12);
            }
        }
    }
}
