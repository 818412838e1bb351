//! Folding of the periodic chain onto an open chain with next-nearest-neighbour bonds.
//!
//! Ring sites `0, 1, …, L/2−1` sit on even linear positions `0, 2, …, L−2`, and ring
//! sites `L/2, …, L−1` on odd positions `L−1, L−3, …, 1`. Every ring bond becomes a
//! linear bond `(p, p+2)`, except the two folds `(0, 1)` and `(L−2, L−1)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateApplication {
    /// Linear positions, `p < q`.
    pub p: usize,
    pub q: usize,
    /// Ring bond realised by this gate.
    pub ring_bond: usize,
    /// Full time step instead of a half step (the centre of the symmetric sweep).
    pub squared: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub l: usize,
    /// Linear position of each ring site.
    pub position: Vec<usize>,
    /// Ring site at each linear position.
    pub ring_site: Vec<usize>,
    /// Linear bonds in sweep order: (0,1), (0,2), (1,3), …, (L−3,L−1), (L−2,L−1).
    pub bonds: Vec<(usize, usize)>,
    /// One symmetric Trotter slice: right sweep, squared centre gate, mirrored left sweep.
    pub sweep: Vec<GateApplication>,
}

impl Layout {
    pub fn new(l: usize) -> Result<Self> {
        if l < 4 || l % 2 != 0 {
            return Err(Error::InvalidArgument(format!("TEBD needs an even chain with L >= 4, got {l}")));
        }
        let position: Vec<usize> = (0..l).map(|r| if r < l / 2 { 2 * r } else { 2 * (l - 1 - r) + 1 }).collect();
        let mut ring_site = vec![0; l];
        for (r, &p) in position.iter().enumerate() {
            ring_site[p] = r;
        }
        let mut bonds = vec![(0, 1)];
        bonds.extend((0..l - 2).map(|k| (k, k + 2)));
        bonds.push((l - 2, l - 1));
        let ring_bond_of = |p: usize, q: usize| {
            let (a, b) = (ring_site[p], ring_site[q]);
            if (a + 1) % l == b {
                a
            } else {
                debug_assert_eq!((b + 1) % l, a);
                b
            }
        };
        let gate = |(p, q): (usize, usize), squared| GateApplication { p, q, ring_bond: ring_bond_of(p, q), squared };
        let mut sweep: Vec<GateApplication> = bonds[..l - 1].iter().map(|&b| gate(b, false)).collect();
        sweep.push(gate(bonds[l - 1], true));
        sweep.extend(bonds[..l - 1].iter().rev().map(|&b| gate(b, false)));
        Ok(Self { l, position, ring_site, bonds, sweep })
    }

    /// Linear positions of ring bond `b`, ascending.
    pub fn bond_positions(&self, b: usize) -> (usize, usize) {
        let p = self.position[b];
        let q = self.position[(b + 1) % self.l];
        (p.min(q), p.max(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_site_bonds() {
        let lay = Layout::new(4).unwrap();
        let one_based: Vec<(usize, usize)> = lay.bonds.iter().map(|&(p, q)| (p + 1, q + 1)).collect();
        assert_eq!(one_based, vec![(1, 2), (1, 3), (2, 4), (3, 4)]);
    }

    #[test]
    fn bonds_biject_onto_ring_couplers() {
        for l in [4, 6, 8, 16, 30] {
            let lay = Layout::new(l).unwrap();
            assert_eq!(lay.bonds.len(), l);
            let mut seen = vec![false; l];
            for g in &lay.sweep {
                seen[g.ring_bond] = true;
                let (p, q) = lay.bond_positions(g.ring_bond);
                assert_eq!((p, q), (g.p, g.q));
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn sweep_is_symmetric_with_one_squared_gate() {
        let lay = Layout::new(10).unwrap();
        let n = lay.sweep.len();
        assert_eq!(n, 2 * 10 - 1);
        assert_eq!(lay.sweep.iter().filter(|g| g.squared).count(), 1);
        for i in 0..n {
            assert_eq!((lay.sweep[i].p, lay.sweep[i].q), (lay.sweep[n - 1 - i].p, lay.sweep[n - 1 - i].q));
        }
    }

    #[test]
    fn folding_keeps_ring_neighbours_close() {
        let lay = Layout::new(64).unwrap();
        for a in 0..64 {
            for r in 1..32 {
                let (p, q) = (lay.position[a], lay.position[(a + r) % 64]);
                assert!(p.abs_diff(q) <= 2 * r + 1);
            }
        }
    }

    #[test]
    fn rejects_small_or_odd() {
        assert!(Layout::new(2).is_err());
        assert!(Layout::new(7).is_err());
    }
}
