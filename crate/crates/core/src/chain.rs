use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A periodic Ising chain: bond `i` joins sites `i` and `i+1 mod L`.
///
/// `transverse` holds per-site multipliers of Γ(s); it is all ones unless transverse-field
/// disorder is being modelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub j_nominal: f64,
    pub couplings: Vec<f64>,
    pub fields: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transverse: Option<Vec<f64>>,
}

impl ChainSpec {
    pub fn uniform(l: usize, j: f64) -> Result<Self> {
        let chain = Self { j_nominal: j, couplings: vec![j; l], fields: vec![0.0; l], transverse: None };
        chain.validate()?;
        Ok(chain)
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.couplings.len();
        if l < 2 {
            return Err(Error::InvalidChain(format!("need at least 2 sites, got {l}")));
        }
        if self.fields.len() != l {
            return Err(Error::InvalidChain(format!("{} fields for {l} sites", self.fields.len())));
        }
        if let Some(t) = &self.transverse {
            if t.len() != l {
                return Err(Error::InvalidChain(format!("{} transverse multipliers for {l} sites", t.len())));
            }
        }
        if !(self.j_nominal != 0.0 && self.j_nominal.is_finite()) {
            return Err(Error::InvalidChain("nominal coupling must be finite and non-zero".into()));
        }
        let finite = self.couplings.iter().chain(&self.fields).chain(self.transverse.iter().flatten());
        if finite.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidChain("non-finite coupling or field".into()));
        }
        Ok(())
    }

    pub fn require_even(&self) -> Result<()> {
        if self.len() % 2 == 0 {
            Ok(())
        } else {
            Err(Error::InvalidChain(format!("chain length must be even, got {}", self.len())))
        }
    }

    /// Sign of the nominal coupling: −1 ferromagnetic, +1 antiferromagnetic.
    pub fn j_sign(&self) -> f64 {
        self.j_nominal.signum()
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&h| h != 0.0)
    }

    pub fn is_uniform(&self) -> bool {
        !self.has_fields()
            && self.couplings.iter().all(|&j| j == self.j_nominal)
            && self.transverse.as_ref().is_none_or(|t| t.iter().all(|&g| g == 1.0))
    }

    pub fn transverse_at(&self, i: usize) -> f64 {
        self.transverse.as_ref().map_or(1.0, |t| t[i])
    }

    pub fn max_abs_coupling(&self) -> f64 {
        self.couplings.iter().fold(0.0, |m, j| m.max(j.abs()))
    }

    pub fn max_abs_field(&self) -> f64 {
        self.fields.iter().fold(0.0, |m, h| m.max(h.abs()))
    }

    pub fn max_transverse(&self) -> f64 {
        self.transverse.as_ref().map_or(1.0, |t| t.iter().fold(0.0, |m, g| m.max(g.abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_chain() {
        let c = ChainSpec::uniform(6, -1.4).unwrap();
        assert_eq!(c.len(), 6);
        assert!(c.is_uniform());
        assert_eq!(c.j_sign(), -1.0);
        assert!(ChainSpec::uniform(1, 1.0).is_err());
        assert!(ChainSpec::uniform(4, 0.0).is_err());
    }

    #[test]
    fn validation_catches_length_mismatch() {
        let mut c = ChainSpec::uniform(4, 1.0).unwrap();
        c.fields.pop();
        assert!(c.validate().is_err());
    }
}
