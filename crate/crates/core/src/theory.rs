//! Closed-form Kibble-Zurek and Landau-Zener predictions, and the fits that test them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// `n̄ = t_a^{−1/2} / (2π√(2b))`, b in 1/ns and t_a in ns.
pub fn predict_density(b: f64, t_a: f64) -> Result<f64> {
    check_positive("b", b)?;
    check_positive("t_a", t_a)?;
    Ok(1.0 / (t_a.sqrt() * 2.0 * PI * (2.0 * b).sqrt()))
}

/// Landau-Zener rate `a = 2π³ b / L²` in 1/ns.
pub fn lz_rate(b: f64, l: usize) -> Result<f64> {
    check_positive("b", b)?;
    if l == 0 {
        return Err(Error::InvalidArgument("L must be positive".into()));
    }
    Ok(2.0 * PI.powi(3) * b / (l * l) as f64)
}

/// `P_GS = 1 − exp(−a t_a)`.
pub fn predict_lz(b: f64, l: usize, t_a: f64) -> Result<f64> {
    if !(t_a >= 0.0 && t_a.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_a must be >= 0, got {t_a}")));
    }
    Ok(-(-lz_rate(b, l)? * t_a).exp_m1())
}

/// Coherent-limit `κ2/κ1 = 2 − √2` and `κ3/κ1 = 4(1 − 3/√2 + 2/√3)`.
pub fn cumulant_ratio_targets() -> (f64, f64) {
    let r2 = 2.0 - 2f64.sqrt();
    let r3 = 4.0 * (1.0 - 3.0 / 2f64.sqrt() + 2.0 / 3f64.sqrt());
    (r2, r3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Covariance of (slope, intercept); residual-scaled when unweighted.
    pub covariance: [[f64; 2]; 2],
    pub window: (f64, f64),
    pub n_points: usize,
}

impl FitResult {
    pub fn slope_stderr(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }
}

/// Least squares `y = slope·x + intercept`. With weights, the covariance is `(XᵀWX)⁻¹`
/// (weights as inverse variances); without, it is scaled by the residual variance.
pub fn linear_fit(x: &[f64], y: &[f64], weights: Option<&[f64]>, window: (f64, f64)) -> Result<FitResult> {
    let n = x.len();
    if y.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::InvalidArgument("fit inputs differ in length".into()));
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!("a fit needs at least 3 points, got {n}")));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let wi = w(i);
        if !(wi > 0.0 && wi.is_finite()) || !x[i].is_finite() || !y[i].is_finite() {
            return Err(Error::InvalidArgument(format!("bad fit point {i}: ({}, {}, weight {wi})", x[i], y[i])));
        }
        sw += wi;
        sx += wi * x[i];
        sy += wi * y[i];
        sxx += wi * x[i] * x[i];
        sxy += wi * x[i] * y[i];
    }
    let det = sw * sxx - sx * sx;
    if !(det > 0.0) || det.abs() < 1e-300 {
        return Err(Error::InsufficientData("fit abscissae are degenerate".into()));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let scale = if weights.is_some() {
        1.0
    } else {
        let rss: f64 = (0..n).map(|i| (y[i] - slope * x[i] - intercept).powi(2)).sum();
        rss / (n - 2) as f64
    };
    let covariance = [[scale * sw / det, -scale * sx / det], [-scale * sx / det, scale * sxx / det]];
    Ok(FitResult { slope, intercept, covariance, window, n_points: n })
}

fn in_window(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

/// Log-log fit of `(t_a, n̄)` points with `t_a` inside `window`.
pub fn fit_power_law(points: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    fit_power_law_weighted(points, None, window)
}

/// As [`fit_power_law`], with optional inverse-variance weights for log n̄.
pub fn fit_power_law_weighted(points: &[(f64, f64)], weights: Option<&[f64]>, window: (f64, f64)) -> Result<FitResult> {
    if weights.is_some_and(|w| w.len() != points.len()) {
        return Err(Error::InvalidArgument("one weight per point is required".into()));
    }
    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &(t, n)) in points.iter().enumerate() {
        if !(t > 0.0 && n > 0.0) {
            return Err(Error::InvalidArgument(format!("power-law fit needs positive values, got ({t}, {n})")));
        }
        if in_window(t, window) {
            x.push(t.ln());
            y.push(n.ln());
            w.push(weights.map_or(1.0, |ws| ws[i]));
        }
    }
    linear_fit(&x, &y, weights.map(|_| w.as_slice()), window)
}

/// Rate fit of `log(1 − P_GS) = −a·t_a + c` over points with `p_window.0 ≤ P_GS ≤ p_window.1`
/// and t_a inside `t_window`. The fitted slope is −a.
pub fn fit_lz_exponent(points: &[(f64, f64)], p_window: (f64, f64), t_window: (f64, f64)) -> Result<FitResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|&&(t, p)| in_window(p, p_window) && in_window(t, t_window) && p < 1.0)
        .map(|&(t, p)| (t, (-p).ln_1p()))
        .unzip();
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} points with P_GS in [{}, {}]",
            x.len(),
            p_window.0,
            p_window.1
        )));
    }
    linear_fit(&x, &y, None, p_window)
}

pub const LZ_P_WINDOW: (f64, f64) = (0.1, 0.9);
pub const ALL: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, Normal};

    const B: f64 = PI / 4.0;

    #[test]
    fn density_at_reference_point() {
        // 1/(10·2π·√(π/2)) by hand
        let n = predict_density(B, 100.0).unwrap();
        assert!((n - 0.012_698_6).abs() < 1e-6, "{n}");
        assert!((predict_density(B, 400.0).unwrap() - n / 2.0).abs() < 1e-15);
        assert!((predict_density(4.0 * B, 100.0).unwrap() - n / 2.0).abs() < 1e-15);
        assert!(predict_density(0.0, 1.0).is_err());
    }

    #[test]
    fn lz_limits() {
        assert_eq!(predict_lz(B, 8, 0.0).unwrap(), 0.0);
        let a = lz_rate(B, 16).unwrap();
        assert!((predict_lz(B, 16, 2f64.ln() / a).unwrap() - 0.5).abs() < 1e-15);
        assert!((lz_rate(B, 8).unwrap() / lz_rate(B, 16).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn ratio_targets() {
        let (r2, r3) = cumulant_ratio_targets();
        assert!((r2 - 0.585_786).abs() < 1e-6);
        // 1 − 2.1213203 + 1.1547005 = 0.0333802, times 4
        assert!((r3 - 0.133_520_8).abs() < 1e-6, "{r3}");
        assert!((r3 - 0.134).abs() < 1e-3);
        assert!(r2 > 0.0 && r2 < 1.0 && r3 > 0.0 && r3 < 1.0);
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 3.0, 10.0, 30.0, 100.0].iter().map(|&t| (t, predict_density(B, t).unwrap())).collect();
        let fit = fit_power_law(&pts, ALL).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - predict_density(B, 1.0).unwrap().ln()).abs() < 1e-12);
        assert_eq!(fit.n_points, 5);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let t = 2f64.powf(k as f64 / 3.0);
                (t, predict_density(B, t).unwrap() * (1.0 + noise.sample(&mut rng)))
            })
            .collect();
        let fit = fit_power_law(&pts, ALL).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.02, "{}", fit.slope);
        assert!(fit.slope_stderr() < 0.01);
    }

    #[test]
    fn constant_data_and_windows() {
        let pts = [(1.0, 0.2), (2.0, 0.2), (4.0, 0.2), (8.0, 0.2)];
        assert!(fit_power_law(&pts, ALL).unwrap().slope.abs() < 1e-15);
        assert_eq!(fit_power_law(&pts, (1.5, 9.0)).unwrap().n_points, 3);
        assert!(matches!(fit_power_law(&pts, (3.0, 9.0)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn weighted_fit_ignores_downweighted_outlier() {
        let mut pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|&t| (t, t.powf(-0.5))).collect();
        pts.push((16.0, 10.0));
        let w = [1.0, 1.0, 1.0, 1.0, 1e-12];
        let fit = fit_power_law_weighted(&pts, Some(&w), ALL).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-9);
    }

    #[test]
    fn lz_window_is_applied() {
        let pts: Vec<(f64, f64)> = (1..=200).map(|k| (k as f64 * 0.5, predict_lz(B, 16, k as f64 * 0.5).unwrap())).collect();
        let fit = fit_lz_exponent(&pts, LZ_P_WINDOW, ALL).unwrap();
        assert!((-fit.slope - lz_rate(B, 16).unwrap()).abs() < 1e-12);
        assert!(fit.n_points < pts.len());
        let outside = [(0.01, 0.001), (0.02, 0.002), (100.0, 0.99), (200.0, 0.999)];
        assert!(fit_lz_exponent(&outside, LZ_P_WINDOW, ALL).is_err());
    }

    proptest! {
        #[test]
        fn lz_round_trip(b in 0.1f64..5.0, half_l in 2usize..40) {
            let l = 2 * half_l;
            let a = lz_rate(b, l).unwrap();
            let pts: Vec<(f64, f64)> = (1..=40).map(|k| {
                let t = k as f64 * 0.05 / a;
                (t, predict_lz(b, l, t).unwrap())
            }).collect();
            let fit = fit_lz_exponent(&pts, LZ_P_WINDOW, ALL).unwrap();
            prop_assert!((-fit.slope / a - 1.0).abs() < 1e-10);
        }

        #[test]
        fn power_law_round_trip(exponent in -2.0f64..2.0, scale in 0.01f64..100.0) {
            let pts: Vec<(f64, f64)> = (0..6).map(|k| { let t = 1.5f64.powi(k); (t, scale * t.powf(exponent)) }).collect();
            let fit = fit_power_law(&pts, ALL).unwrap();
            prop_assert!((fit.slope - exponent).abs() < 1e-10);
        }
    }
}
