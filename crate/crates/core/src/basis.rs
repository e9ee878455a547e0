//! Flattened permutation-symmetric spin (x) boson basis.
//!
//! A symmetric density matrix is expanded over `|J,n><J,m| (x) |l><k|`. The spin
//! part `(J,n,m)` is packed into a single flat index `i`, ordered by descending
//! `J`, then descending `n`, then descending `m`, so that the fully symmetric
//! sector `J = N/2` sits at the front. Half-integer quantum numbers are stored
//! doubled (`j2 = 2J`, `n2 = 2n`, `m2 = 2m`) so all index arithmetic stays exact.
//!
//! Each basis element stands for the *average* over the `d_N^J` degenerate
//! copies of the spin-`J` irrep, so every diagonal element has unit trace and
//! `tr(rho) = sum_{J,m,l} rho_{(J,m,m),l,l}`.
//!
//! Note on notation: the collective dissipator coefficients are usually written
//! with `l, k` as *spin projections*; here `l, k` always denote boson numbers and
//! spin projections are `n, m`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::binomial;

/// Largest qubit count for which the exact `u128` sector combinatorics cannot overflow.
pub const MAX_QUBITS: u32 = 100;

/// `(J, n, m)` with all three stored doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinTriple {
    pub j2: u32,
    pub n2: i32,
    pub m2: i32,
}

impl SpinTriple {
    pub fn new(j2: u32, n2: i32, m2: i32) -> Option<Self> {
        let t = SpinTriple { j2, n2, m2 };
        t.is_valid().then_some(t)
    }

    pub fn is_valid(&self) -> bool {
        let j2 = self.j2 as i32;
        self.n2.abs() <= j2
            && self.m2.abs() <= j2
            && (j2 - self.n2) % 2 == 0
            && (j2 - self.m2) % 2 == 0
    }

    pub fn j(&self) -> f64 {
        self.j2 as f64 / 2.0
    }

    pub fn n(&self) -> f64 {
        self.n2 as f64 / 2.0
    }

    pub fn m(&self) -> f64 {
        self.m2 as f64 / 2.0
    }

    /// The triple of the Hermitian-conjugate element, `|J,m><J,n|`.
    pub fn transposed(&self) -> Self {
        SpinTriple { j2: self.j2, n2: self.m2, m2: self.n2 }
    }
}

/// Doubled total spin lengths `2J` for `N` qubits, strictly decreasing from `N`
/// down to `N mod 2`.
pub fn spin_lengths(qubits: u32) -> Result<Vec<u32>> {
    if qubits == 0 || qubits > MAX_QUBITS {
        return Err(Error::InvalidQubitCount(qubits));
    }
    Ok((0..=qubits / 2).map(|s| qubits - 2 * s).collect())
}

/// One total-spin sector inside the flat spin index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sector {
    pub j2: u32,
    /// First flat spin index belonging to this sector.
    pub offset: usize,
}

impl Sector {
    /// Number of projections, `2J + 1`.
    pub fn width(&self) -> usize {
        self.j2 as usize + 1
    }
}

/// Index tables for the flattened basis of an `N`-qubit system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisLayout {
    qubits: u32,
    boson_cutoff: u32,
    sectors: Vec<Sector>,
    triples: Vec<SpinTriple>,
}

impl BasisLayout {
    /// Builds the layout with the boson cutoff equal to the qubit count.
    pub fn new(qubits: u32) -> Result<Self> {
        let lengths = spin_lengths(qubits)?;
        let mut sectors = Vec::with_capacity(lengths.len());
        let mut triples = Vec::new();
        for j2 in lengths {
            sectors.push(Sector { j2, offset: triples.len() });
            let j2i = j2 as i32;
            for n2 in (-j2i..=j2i).rev().step_by(2) {
                for m2 in (-j2i..=j2i).rev().step_by(2) {
                    triples.push(SpinTriple { j2, n2, m2 });
                }
            }
        }
        Ok(BasisLayout { qubits, boson_cutoff: qubits, sectors, triples })
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    pub fn boson_cutoff(&self) -> u32 {
        self.boson_cutoff
    }

    /// Number of boson levels, `cutoff + 1`.
    pub fn boson_levels(&self) -> usize {
        self.boson_cutoff as usize + 1
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Sector holding total spin `j2 / 2`, if it exists for this qubit count.
    pub fn sector(&self, j2: u32) -> Option<&Sector> {
        if j2 > self.qubits || (self.qubits - j2) % 2 != 0 {
            return None;
        }
        self.sectors.get(((self.qubits - j2) / 2) as usize)
    }

    pub fn spin_dim(&self) -> usize {
        self.triples.len()
    }

    pub fn total_dim(&self) -> usize {
        self.spin_dim() * self.boson_levels() * self.boson_levels()
    }

    pub fn flat_to_triple(&self, i: usize) -> Option<SpinTriple> {
        self.triples.get(i).copied()
    }

    pub fn triple_to_flat(&self, t: SpinTriple) -> Option<usize> {
        if !t.is_valid() {
            return None;
        }
        let sector = self.sector(t.j2)?;
        let j2 = t.j2 as i32;
        let row = ((j2 - t.n2) / 2) as usize;
        let col = ((j2 - t.m2) / 2) as usize;
        Some(sector.offset + row * sector.width() + col)
    }

    /// Flat component index of `(i, l, k)`.
    #[inline]
    pub fn index(&self, spin: usize, l: usize, k: usize) -> usize {
        let levels = self.boson_levels();
        (spin * levels + l) * levels + k
    }

    /// Inverse of [`BasisLayout::index`].
    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize, usize) {
        let levels = self.boson_levels();
        let k = idx % levels;
        let rest = idx / levels;
        (rest / levels, rest % levels, k)
    }

    /// Component index of `|J,n><J,m| (x) |l><k|`, if every quantum number is in range.
    pub fn component(&self, t: SpinTriple, l: usize, k: usize) -> Option<usize> {
        let levels = self.boson_levels();
        if l >= levels || k >= levels {
            return None;
        }
        Some(self.index(self.triple_to_flat(t)?, l, k))
    }

    /// Component index of the Hermitian partner `(J,m,n), k, l` of component `idx`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (i, l, k) = self.split(idx);
        let t = self.triples[i].transposed();
        // transposition never leaves the layout
        self.index(self.triple_to_flat(t).unwrap(), k, l)
    }

    /// Dimension of the square spin-boson matrix for one sector, `(2J+1)(cutoff+1)`.
    pub fn block_dim(&self, sector: &Sector) -> usize {
        sector.width() * self.boson_levels()
    }
}

/// Exact sector combinatorics: multiplicities `alpha_N^J = C(N, N/2 - J)` and
/// irrep degeneracies `d_N^J = C(N, N/2 - J) (2J+1) / (N/2 + J + 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorWeights {
    qubits: u32,
    alpha: Vec<u128>,
    deg: Vec<u128>,
}

impl SectorWeights {
    pub fn new(qubits: u32) -> Result<Self> {
        let lengths = spin_lengths(qubits)?;
        let alpha: Vec<u128> = lengths.iter().map(|&j2| alpha_exact(qubits, j2)).collect();
        let deg = lengths
            .iter()
            .zip(&alpha)
            // N/2 + J + 1 = (N + 2J + 2) / 2
            .map(|(&j2, &a)| a * (j2 as u128 + 1) * 2 / (qubits as u128 + j2 as u128 + 2))
            .collect();
        Ok(SectorWeights { qubits, alpha, deg })
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    /// `alpha_N^J`; zero for `J > N/2`, which is what the raising branch needs at the top sector.
    pub fn alpha(&self, j2: u32) -> u128 {
        alpha_exact(self.qubits, j2)
    }

    /// `d_N^J`; zero when `J` is not a sector of this qubit count.
    pub fn degeneracy(&self, j2: u32) -> u128 {
        if j2 > self.qubits || (self.qubits - j2) % 2 != 0 {
            return 0;
        }
        self.deg[((self.qubits - j2) / 2) as usize]
    }

    /// Multiplicities in sector order (descending `J`).
    pub fn alphas(&self) -> &[u128] {
        &self.alpha
    }

    /// Degeneracies in sector order (descending `J`).
    pub fn degeneracies(&self) -> &[u128] {
        &self.deg
    }
}

fn alpha_exact(qubits: u32, j2: u32) -> u128 {
    if j2 > qubits || (qubits - j2) % 2 != 0 {
        return 0;
    }
    binomial(qubits, ((qubits - j2) / 2) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn spin_lengths_examples() {
        assert_eq!(spin_lengths(2).unwrap(), vec![2, 0]);
        assert_eq!(spin_lengths(3).unwrap(), vec![3, 1]);
        let l20 = spin_lengths(20).unwrap();
        assert_eq!(l20.len(), 11);
        assert_eq!(l20[0], 20);
        assert_eq!(*l20.last().unwrap(), 0);
        assert!(l20.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(spin_lengths(0), Err(Error::InvalidQubitCount(0)));
    }

    // brute force: every (2J, 2n, 2m) in a bounding box, filtered by validity
    fn brute_force_spin_dim(qubits: u32) -> usize {
        let n = qubits as i32;
        let mut count = 0;
        for j2 in 0..=qubits {
            if (qubits - j2) % 2 != 0 {
                continue;
            }
            for n2 in -n..=n {
                for m2 in -n..=n {
                    if (SpinTriple { j2, n2, m2 }).is_valid() {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn layout_dimensions() {
        let l1 = BasisLayout::new(1).unwrap();
        assert_eq!((l1.spin_dim(), l1.total_dim()), (4, 16));
        let l2 = BasisLayout::new(2).unwrap();
        assert_eq!(brute_force_spin_dim(2), 10);
        assert_eq!((l2.spin_dim(), l2.total_dim()), (10, 90));
        let independent: usize = (0..=10usize).map(|j| (2 * j + 1) * (2 * j + 1)).sum();
        assert_eq!(independent, 1771);
        assert_eq!(BasisLayout::new(20).unwrap().spin_dim(), 1771);
    }

    #[test]
    fn spin_dim_closed_forms() {
        for qubits in 1..=12u32 {
            let layout = BasisLayout::new(qubits).unwrap();
            assert_eq!(layout.spin_dim(), brute_force_spin_dim(qubits));
            let n = qubits as usize;
            // odd N sums the even squares 2^2 + ... + (N+1)^2, which lands on the same cubic
            let closed = (n + 1) * (n + 2) * (n + 3) / 6;
            assert_eq!(layout.spin_dim(), closed, "N = {qubits}");
        }
    }

    #[test]
    fn round_trip_and_order() {
        for qubits in 1..=12u32 {
            let layout = BasisLayout::new(qubits).unwrap();
            for i in 0..layout.spin_dim() {
                let t = layout.flat_to_triple(i).unwrap();
                assert_eq!(layout.triple_to_flat(t), Some(i));
            }
            let first = layout.flat_to_triple(0).unwrap();
            assert_eq!(first, SpinTriple { j2: qubits, n2: qubits as i32, m2: qubits as i32 });
        }
        let layout = BasisLayout::new(3).unwrap();
        assert_eq!(layout.triple_to_flat(SpinTriple { j2: 1, n2: 3, m2: 1 }), None);
        assert_eq!(layout.triple_to_flat(SpinTriple { j2: 2, n2: 0, m2: 0 }), None);
    }

    #[test]
    fn conjugate_index_is_involution() {
        let layout = BasisLayout::new(3).unwrap();
        for idx in 0..layout.total_dim() {
            let c = layout.conjugate_index(idx);
            assert_eq!(layout.conjugate_index(c), idx);
        }
    }

    #[test]
    fn sector_weight_examples() {
        let w2 = SectorWeights::new(2).unwrap();
        assert_eq!((w2.alpha(2), w2.degeneracy(2)), (1, 1));
        assert_eq!((w2.alpha(0), w2.degeneracy(0)), (2, 1));
        let w4 = SectorWeights::new(4).unwrap();
        assert_eq!((w4.alpha(2), w4.degeneracy(2)), (4, 3));
        assert_eq!(w4.alpha(6), 0);
    }

    #[test]
    fn dimension_identity() {
        for qubits in 1..=30u32 {
            let w = SectorWeights::new(qubits).unwrap();
            let total: u128 = spin_lengths(qubits)
                .unwrap()
                .iter()
                .map(|&j2| w.degeneracy(j2) * (j2 as u128 + 1))
                .sum();
            assert_eq!(total, 1u128 << qubits, "N = {qubits}");
        }
    }

    #[test]
    fn degeneracy_matches_catalan_path_count() {
        // number of length-N +/-1 paths from 0 ending at 2J that never go below 0
        fn paths(qubits: u32, j2: u32) -> u128 {
            let mut counts = vec![0u128; qubits as usize + 2];
            counts[0] = 1;
            for _ in 0..qubits {
                let mut next = vec![0u128; qubits as usize + 2];
                for (h, &c) in counts.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    next[h + 1] += c;
                    if h > 0 {
                        next[h - 1] += c;
                    }
                }
                counts = next;
            }
            counts[j2 as usize]
        }
        for qubits in 1..=16u32 {
            let w = SectorWeights::new(qubits).unwrap();
            for j2 in spin_lengths(qubits).unwrap() {
                assert_eq!(w.degeneracy(j2), paths(qubits, j2));
            }
        }
    }
}
