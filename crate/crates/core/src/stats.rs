//! Kink statistics of spin samples and batch bootstrap.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::Cumulants;
use crate::samples::SampleSet;

/// `K_i = (1 + sign(J) s_i s_{i+1})/2` with periodic wrap.
pub fn kinks(sample: &[i8], j_sign: f64) -> Vec<u8> {
    let l = sample.len();
    (0..l)
        .map(|i| {
            let zz = f64::from(sample[i] * sample[(i + 1) % l]);
            u8::from(j_sign * zz > 0.0)
        })
        .collect()
}

/// Per-sample kink density `n = (1/L) Σ K_i`.
pub fn sample_density(sample: &[i8], j_sign: f64) -> f64 {
    kinks(sample, j_sign).iter().map(|&k| f64::from(k)).sum::<f64>() / sample.len() as f64
}

fn densities<'a>(samples: impl Iterator<Item = &'a [i8]>, j_sign: f64) -> Vec<f64> {
    samples.map(|s| sample_density(s, j_sign)).collect()
}

pub fn density(set: &SampleSet, j_sign: f64) -> Result<f64> {
    let n = densities(set.samples(), j_sign);
    if n.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    Ok(n.iter().sum::<f64>() / n.len() as f64)
}

/// Mean and second and third central moments of a list of per-sample densities.
pub fn cumulants_of(n: &[f64]) -> Result<Cumulants> {
    if n.len() < 3 {
        return Err(Error::InsufficientData(format!("cumulants need at least 3 samples, got {}", n.len())));
    }
    let m = n.len() as f64;
    let k1 = n.iter().sum::<f64>() / m;
    let k2 = n.iter().map(|x| (x - k1).powi(2)).sum::<f64>() / m;
    let k3 = n.iter().map(|x| (x - k1).powi(3)).sum::<f64>() / m;
    Ok(Cumulants { k1, k2, k3 })
}

pub fn cumulants(set: &SampleSet, j_sign: f64) -> Result<Cumulants> {
    cumulants_of(&densities(set.samples(), j_sign))
}

/// `C_r = (mean_{samples,i} K_i K_{i+r} − n̄²)/n̄²` for r = 0..L, with n̄ from the same samples.
pub fn kk_correlator_of<'a>(samples: impl Iterator<Item = &'a [i8]>, j_sign: f64) -> Result<Vec<f64>> {
    let mut acc: Vec<f64> = Vec::new();
    let (mut count, mut total) = (0usize, 0.0);
    for s in samples {
        let k = kinks(s, j_sign);
        let l = k.len();
        if acc.is_empty() {
            acc = vec![0.0; l];
        } else if acc.len() != l {
            return Err(Error::InvalidArgument("samples of different lengths".into()));
        }
        let at: Vec<usize> = (0..l).filter(|&i| k[i] == 1).collect();
        total += at.len() as f64 / l as f64;
        let inv = 1.0 / l as f64;
        for &a in &at {
            for &b in &at {
                acc[(b + l - a) % l] += inv;
            }
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let n_bar = total / count as f64;
    if n_bar <= 0.0 {
        return Err(Error::ZeroDensity);
    }
    let n2 = n_bar * n_bar;
    Ok(acc.into_iter().map(|a| (a / count as f64 - n2) / n2).collect())
}

pub fn kk_correlator(set: &SampleSet, j_sign: f64) -> Result<Vec<f64>> {
    kk_correlator_of(set.samples(), j_sign)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Percentile (linear interpolation) of a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, f) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Resamples whole batches with replacement and reports the median and central 95% range
/// of `statistic` over the resamples.
pub fn bootstrap<T, F>(batches: &[T], statistic: F, n_resamples: usize, seed: u64) -> Result<Interval>
where
    F: Fn(&[&T]) -> Result<f64>,
{
    if batches.len() < 2 {
        return Err(Error::InsufficientData(format!("bootstrap needs at least 2 batches, got {}", batches.len())));
    }
    if n_resamples == 0 {
        return Err(Error::InvalidArgument("n_resamples must be positive".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(n_resamples);
    let mut pick: Vec<&T> = Vec::with_capacity(batches.len());
    for _ in 0..n_resamples {
        pick.clear();
        pick.extend((0..batches.len()).map(|_| batches.choose(&mut rng).expect("non-empty")));
        let v = statistic(&pick)?;
        if v.is_finite() {
            stats.push(v);
        }
    }
    if stats.is_empty() {
        return Err(Error::InsufficientData("statistic undefined on every resample".into()));
    }
    stats.sort_by(f64::total_cmp);
    Ok(Interval { median: percentile(&stats, 0.5), lo: percentile(&stats, 0.025), hi: percentile(&stats, 0.975) })
}

fn mean_of(xs: &[&f64]) -> Result<f64> {
    Ok(xs.iter().copied().sum::<f64>() / xs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkSummary {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// C^KK_r for r = 1..=L/2, pooled over all samples.
    pub ckk: Vec<f64>,
    pub ci95_kappa1: Interval,
    pub ci95_kappa2: Interval,
    pub ci95_kappa3: Interval,
    /// Bootstrap of per-batch correlator estimates, r = 1..=L/2.
    pub ci95_ckk: Vec<Interval>,
    pub n_batches: usize,
}

/// Point estimates plus batch-bootstrap intervals. Correlator intervals resample the
/// per-batch estimates, each normalised by its own batch n̄.
pub fn summarize(set: &SampleSet, j_sign: f64, n_resamples: usize, seed: u64) -> Result<KinkSummary> {
    let c = cumulants(set, j_sign)?;
    let half = set.len() / 2;
    let full = kk_correlator(set, j_sign)?;
    let per_batch_n: Vec<Vec<f64>> = set.batches().iter().map(|b| densities(b.iter().map(Vec::as_slice), j_sign)).collect();
    let pooled = |bs: &[&Vec<f64>], f: fn(&Cumulants) -> f64| -> Result<f64> {
        let all: Vec<f64> = bs.iter().flat_map(|b| b.iter().copied()).collect();
        cumulants_of(&all).map(|c| f(&c))
    };
    let ci1 = bootstrap(&per_batch_n, |bs| pooled(bs, |c| c.k1), n_resamples, seed)?;
    let ci2 = bootstrap(&per_batch_n, |bs| pooled(bs, |c| c.k2), n_resamples, seed.wrapping_add(1))?;
    let ci3 = bootstrap(&per_batch_n, |bs| pooled(bs, |c| c.k3), n_resamples, seed.wrapping_add(2))?;
    let batch_ckk: Vec<Option<Vec<f64>>> =
        set.batches().iter().map(|b| kk_correlator_of(b.iter().map(Vec::as_slice), j_sign).ok()).collect();
    let usable: Vec<&Vec<f64>> = batch_ckk.iter().flatten().collect();
    let mut ci_ckk = Vec::with_capacity(half);
    for r in 1..=half {
        let vals: Vec<f64> = usable.iter().map(|c| c[r]).collect();
        ci_ckk.push(bootstrap(&vals, mean_of, n_resamples, seed.wrapping_add(3 + r as u64))?);
    }
    Ok(KinkSummary {
        kappa1: c.k1,
        kappa2: c.k2,
        kappa3: c.k3,
        ckk: full[1..=half].to_vec(),
        ci95_kappa1: ci1,
        ci95_kappa2: ci2,
        ci95_kappa3: ci3,
        ci95_ckk: ci_ckk,
        n_batches: set.n_batches(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::SampleMeta;
    use rand::Rng;

    const FERRO: f64 = -1.0;

    fn single(s: Vec<i8>) -> SampleSet {
        SampleSet::new(s.len(), vec![vec![s]], SampleMeta::default()).unwrap()
    }

    #[test]
    fn kink_indicators() {
        assert_eq!(kinks(&[1, 1, 1, 1], FERRO), vec![0, 0, 0, 0]);
        assert_eq!(kinks(&[1, 1, -1, -1], FERRO), vec![0, 1, 0, 1]);
        assert_eq!(kinks(&[1, -1, 1, -1, 1, -1], 1.0), vec![0; 6]);
    }

    #[test]
    fn hand_enumerated_density_and_correlator() {
        let set = single(vec![1, 1, -1, -1]);
        assert_eq!(density(&set, FERRO).unwrap(), 0.5);
        let c = kk_correlator(&set, FERRO).unwrap();
        assert_eq!(c[1], -1.0);
        assert_eq!(c[2], 1.0);
    }

    #[test]
    fn ordered_batch_has_zero_density_and_undefined_correlator() {
        let set = single(vec![-1; 6]);
        assert_eq!(density(&set, FERRO).unwrap(), 0.0);
        assert!(matches!(kk_correlator(&set, FERRO), Err(Error::ZeroDensity)));
    }

    #[test]
    fn identical_samples_have_no_spread() {
        let s = vec![1, 1, -1, -1, 1, -1];
        let set = SampleSet::new(6, vec![vec![s.clone(), s.clone(), s]], SampleMeta::default()).unwrap();
        let c = cumulants(&set, FERRO).unwrap();
        assert_eq!((c.k2, c.k3), (0.0, 0.0));
        assert!(cumulants_of(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn random_spins_have_half_density_and_no_correlation() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let batch: Vec<Vec<i8>> =
            (0..4000).map(|_| (0..32).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()).collect();
        let set = SampleSet::new(32, vec![batch], SampleMeta::default()).unwrap();
        let n = density(&set, FERRO).unwrap();
        // σ(n̄) = 0.5/√(32·4000)
        assert!((n - 0.5).abs() < 5.0 * 0.5 / (32.0f64 * 4000.0).sqrt());
        let c = kk_correlator(&set, FERRO).unwrap();
        for r in 1..32 {
            assert!(c[r].abs() < 0.03, "r={r}: {}", c[r]);
            assert!((c[r] - c[32 - r]).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_constant_and_two_point() {
        let flat = vec![0.3; 10];
        let ci = bootstrap(&flat, mean_of, 200, 1).unwrap();
        assert_eq!(ci.lo, ci.hi);
        assert!((ci.median - 0.3).abs() < 1e-15);
        let two = vec![0.0, 1.0];
        let ci = bootstrap(&two, mean_of, 2000, 5).unwrap();
        // Resample means are 0, 1/2, 1 with probabilities 1/4, 1/2, 1/4.
        assert_eq!((ci.lo, ci.median, ci.hi), (0.0, 0.5, 1.0));
        assert_eq!(bootstrap(&two, mean_of, 2000, 5).unwrap(), ci);
        assert!(bootstrap(&[1.0], mean_of, 10, 0).is_err());
    }

    #[test]
    fn summary_shapes() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let batches: Vec<Vec<Vec<i8>>> = (0..10)
            .map(|_| (0..50).map(|_| (0..16).map(|_| if rng.random::<f64>() < 0.5 { 1 } else { -1 }).collect()).collect())
            .collect();
        let set = SampleSet::new(16, batches, SampleMeta::default()).unwrap();
        let s = summarize(&set, FERRO, 300, 0).unwrap();
        assert_eq!(s.ckk.len(), 8);
        assert_eq!(s.ci95_ckk.len(), 8);
        assert!(s.ci95_kappa1.lo <= s.kappa1 && s.kappa1 <= s.ci95_kappa1.hi);
        assert!(s.kappa2 >= 0.0);
    }

    /// N = 2 Σ_k Bernoulli(p_k) per sample, from a mode spectrum.
    fn mode_model_densities(p: &[f64], l: usize, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| 2.0 * p.iter().filter(|&&pk| rng.random::<f64>() < pk).count() as f64 / l as f64).collect()
    }

    #[test]
    fn mode_model_sampler_matches_mode_cumulants() {
        use crate::modes::mode_spectrum;
        let sch = crate::Schedule::linear(1.0).unwrap();
        let sp = mode_spectrum(&sch, -1.0, 2.0, 64, &crate::StepPolicy::default()).unwrap();
        let exact = sp.cumulants();
        let n = mode_model_densities(&sp.p, 64, 40_000, 11);
        let batches: Vec<Vec<f64>> = n.chunks(400).map(<[f64]>::to_vec).collect();
        let pooled = |bs: &[&Vec<f64>], f: fn(&Cumulants) -> f64| -> Result<f64> {
            let all: Vec<f64> = bs.iter().flat_map(|b| b.iter().copied()).collect();
            cumulants_of(&all).map(|c| f(&c))
        };
        let est = cumulants_of(&n).unwrap();
        let pick: [(fn(&Cumulants) -> f64, f64, f64); 3] =
            [(|c| c.k1, est.k1, exact.k1), (|c| c.k2, est.k2, exact.k2), (|c| c.k3, est.k3, exact.k3)];
        for (k, (f, e, x)) in pick.into_iter().enumerate() {
            let ci = bootstrap(&batches, |bs| pooled(bs, f), 500, k as u64).unwrap();
            assert!((e - x).abs() <= ci.hi - ci.lo, "kappa{}: {e} vs {x}, ci {ci:?}", k + 1);
        }
    }

    #[test]
    fn slow_anneal_mode_ensemble_has_coherent_variance_ratio() {
        use crate::modes::mode_spectrum;
        let sch = crate::Schedule::linear(1.0).unwrap();
        let sp = mode_spectrum(&sch, -1.0, 20.0, 512, &crate::StepPolicy::default()).unwrap();
        let c = cumulants_of(&mode_model_densities(&sp.p, 512, 20_000, 12)).unwrap();
        let ratio = c.k2 / c.k1 * 512.0;
        assert!((ratio / (2.0 - 2f64.sqrt()) - 1.0).abs() < 0.03, "{ratio}");
    }

    #[test]
    fn sampled_quantum_state_matches_bdg_expectations() {
        use crate::bdg::dense::dense_evolve;
        use crate::bdg::{evolve_bdg, kink_stats_bdg};
        let chain = crate::ChainSpec::uniform(8, -1.0).unwrap();
        let sch = crate::Schedule::linear(1.0).unwrap();
        let (psi, _) = dense_evolve(&chain, &sch, 1.0, &crate::StepPolicy::default()).unwrap();
        let mut cdf = Vec::with_capacity(psi.len());
        let mut acc = 0.0;
        for a in &psi {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let draw = |rng: &mut ChaCha20Rng| -> Vec<i8> {
            let u = rng.random::<f64>() * acc;
            let x = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
            (0..8).map(|i| if x >> i & 1 == 0 { 1 } else { -1 }).collect()
        };
        let batches: Vec<Vec<Vec<i8>>> = (0..100).map(|_| (0..100).map(|_| draw(&mut rng)).collect()).collect();
        let set = SampleSet::new(8, batches, SampleMeta::default()).unwrap();
        let s = summarize(&set, FERRO, 500, 2).unwrap();
        let st = evolve_bdg(&chain, &sch, 1.0, &crate::StepPolicy::bdg_default()).unwrap();
        let ks = kink_stats_bdg(&st, &chain, &[1, 2, 3, 4]).unwrap();
        let w = s.ci95_kappa1.hi - s.ci95_kappa1.lo;
        assert!((s.kappa1 - ks.n_bar).abs() < 3.0 * w, "{} vs {}", s.kappa1, ks.n_bar);
        for r in 1..=4 {
            let ci = &s.ci95_ckk[r - 1];
            assert!((s.ckk[r - 1] - ks.ckk[r - 1]).abs() < 3.0 * (ci.hi - ci.lo), "r={r}");
        }
    }

    #[test]
    fn bootstrap_interval_covers_the_plug_in_estimate() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let toy: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let plug = toy.iter().sum::<f64>() / toy.len() as f64;
        let hits = (0..300u64)
            .filter(|&seed| {
                let ci = bootstrap(&toy, mean_of, 400, seed).unwrap();
                ci.lo <= plug && plug <= ci.hi
            })
            .count();
        assert!(hits as f64 >= 0.99 * 300.0, "{hits}");
    }

    proptest::proptest! {
        #[test]
        fn full_wrap_correlator_is_symmetric(
            l in 2usize..40,
            bits in proptest::collection::vec(proptest::bool::ANY, 40 * 12),
            n in 1usize..12,
        ) {
            let samples: Vec<Vec<i8>> =
                (0..n).map(|k| (0..l).map(|i| if bits[k * 40 + i] { 1 } else { -1 }).collect()).collect();
            let set = SampleSet::new(l, vec![samples], SampleMeta::default()).unwrap();
            proptest::prop_assume!(density(&set, FERRO).unwrap() > 0.0);
            let c = kk_correlator(&set, FERRO).unwrap();
            for r in 1..l {
                proptest::prop_assert_eq!(c[r], c[l - r]);
            }
        }
    }
}
