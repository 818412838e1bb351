//! Gaussian coupling and field disorder with reproducible per-realization streams.
//!
//! Realization `k` of an ensemble draws from ChaCha20 seeded with the master seed on stream
//! `k`, so any member can be regenerated alone and in any order. Each realization always
//! draws L coupling deviates and then L field deviates, whichever targets are enabled.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::fmt::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderTargets {
    Couplings,
    Fields,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub sigma: f64,
    pub targets: DisorderTargets,
    pub n_realizations: usize,
    pub master_seed: u64,
}

impl DisorderSpec {
    /// σ = 0.05·1.4/|J|, the strength that matches the hardware ensembles.
    pub fn hardware_sigma(j: f64) -> f64 {
        0.05 * 1.4 / j.abs()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidArgument("need at least one realization".into()));
        }
        Ok(())
    }

    pub fn rng(&self, index: usize) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Realization `index`: `J_i ← J_i + N(0,σ)`, `h_i ← h_i + N(0,σ)` on the enabled targets.
    pub fn realize(&self, nominal: &ChainSpec, index: usize) -> Result<ChainSpec> {
        self.validate()?;
        nominal.validate()?;
        if index >= self.n_realizations {
            return Err(Error::InvalidArgument(format!(
                "realization {index} out of range (ensemble has {})",
                self.n_realizations
            )));
        }
        let mut rng = self.rng(index);
        let l = nominal.len();
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
        let dj = draw(l);
        let dh = draw(l);
        let mut chain = nominal.clone();
        if matches!(self.targets, DisorderTargets::Couplings | DisorderTargets::Both) {
            chain.couplings.iter_mut().zip(&dj).for_each(|(j, d)| *j += self.sigma * d);
        }
        if matches!(self.targets, DisorderTargets::Fields | DisorderTargets::Both) {
            chain.fields.iter_mut().zip(&dh).for_each(|(h, d)| *h += self.sigma * d);
        }
        Ok(chain)
    }

    pub fn ensemble(&self, nominal: &ChainSpec) -> Result<Vec<ChainSpec>> {
        (0..self.n_realizations).map(|k| self.realize(nominal, k)).collect()
    }
}

/// `index,coupling,field` rows; bond `i` joins sites `i` and `i+1 mod L`.
pub fn write_chain_csv<W: Write>(chain: &ChainSpec, mut out: W) -> std::io::Result<()> {
    writeln!(out, "index,coupling,field")?;
    for (i, (j, h)) in chain.couplings.iter().zip(&chain.fields).enumerate() {
        writeln!(out, "{i},{},{}", num(*j), num(*h))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sigma: f64) -> DisorderSpec {
        DisorderSpec { sigma, targets: DisorderTargets::Both, n_realizations: 300, master_seed: 7 }
    }

    #[test]
    fn zero_sigma_is_identity() {
        let nominal = ChainSpec::uniform(16, -1.4).unwrap();
        assert_eq!(spec(0.0).realize(&nominal, 3).unwrap(), nominal);
    }

    #[test]
    fn hardware_sigma_at_reference_coupling() {
        assert!((DisorderSpec::hardware_sigma(-1.4) - 0.05).abs() < 1e-15);
        assert!((DisorderSpec::hardware_sigma(-0.7) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn realizations_are_independent_of_order() {
        let nominal = ChainSpec::uniform(8, -1.4).unwrap();
        let sp = spec(0.05);
        let all = sp.ensemble(&nominal).unwrap();
        assert_eq!(sp.realize(&nominal, 123).unwrap(), all[123]);
        assert_ne!(all[0], all[1]);
    }

    #[test]
    fn targets_select_what_moves() {
        let nominal = ChainSpec::uniform(8, -1.4).unwrap();
        let mut sp = spec(0.05);
        let both = sp.realize(&nominal, 5).unwrap();
        sp.targets = DisorderTargets::Couplings;
        let c = sp.realize(&nominal, 5).unwrap();
        assert_eq!(c.couplings, both.couplings);
        assert!(c.fields.iter().all(|&h| h == 0.0));
        sp.targets = DisorderTargets::Fields;
        let f = sp.realize(&nominal, 5).unwrap();
        assert_eq!(f.fields, both.fields);
        assert!(f.couplings.iter().all(|&j| j == -1.4));
    }

    #[test]
    fn out_of_range_index() {
        let nominal = ChainSpec::uniform(8, -1.4).unwrap();
        assert!(spec(0.05).realize(&nominal, 300).is_err());
    }

    #[test]
    fn csv_round_trips_values() {
        let nominal = ChainSpec::uniform(4, -1.4).unwrap();
        let c = spec(0.05).realize(&nominal, 0).unwrap();
        let mut buf = Vec::new();
        write_chain_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "index,coupling,field");
        let f: Vec<f64> = rows[2].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!((f[1], f[2]), (c.couplings[1], c.fields[1]));
    }
}
