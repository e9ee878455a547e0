//! Sparse linear action on flattened density vectors.
//!
//! Stored row-wise by destination (compressed sparse rows), so one application
//! is a single pass over the table with a fixed summation order per row.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex64;

/// A sparse superoperator `x -> L x` on complex vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    dim: usize,
    row_start: Vec<usize>,
    src: Vec<u32>,
    weight: Vec<Complex64>,
}

/// Collects the source terms of one destination row.
pub struct RowSink {
    terms: Vec<(u32, Complex64)>,
}

impl RowSink {
    #[inline]
    pub fn push(&mut self, src: usize, w: Complex64) {
        if w != Complex64::new(0.0, 0.0) {
            self.terms.push((src as u32, w));
        }
    }
}

impl SuperOp {
    pub fn zero(dim: usize) -> Self {
        SuperOp { dim, row_start: vec![0; dim + 1], src: Vec::new(), weight: Vec::new() }
    }

    /// Builds the operator row by row. `emit(dest, sink)` pushes `(source, weight)`
    /// terms for `dest`; repeated sources are summed and exact zeros dropped.
    pub fn from_rows(dim: usize, mut emit: impl FnMut(usize, &mut RowSink)) -> Self {
        assert!(dim <= u32::MAX as usize, "superoperator dimension exceeds u32 indexing");
        let mut row_start = Vec::with_capacity(dim + 1);
        let mut src = Vec::new();
        let mut weight = Vec::new();
        let mut sink = RowSink { terms: Vec::new() };
        row_start.push(0);
        for dest in 0..dim {
            sink.terms.clear();
            emit(dest, &mut sink);
            sink.terms.sort_by_key(|&(s, _)| s);
            let mut iter = sink.terms.iter().copied().peekable();
            while let Some((s, mut w)) = iter.next() {
                while let Some(&(s2, w2)) = iter.peek() {
                    if s2 != s {
                        break;
                    }
                    w += w2;
                    iter.next();
                }
                if w != Complex64::new(0.0, 0.0) {
                    debug_assert!((s as usize) < dim);
                    src.push(s);
                    weight.push(w);
                }
            }
            row_start.push(src.len());
        }
        SuperOp { dim, row_start, src, weight }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored nonzero weights.
    pub fn nnz(&self) -> usize {
        self.src.len()
    }

    pub fn is_zero(&self) -> bool {
        self.src.is_empty()
    }

    pub fn row(&self, dest: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let r = self.row_start[dest]..self.row_start[dest + 1];
        self.src[r.clone()].iter().map(|&s| s as usize).zip(self.weight[r].iter().copied())
    }

    /// `out = L x`.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.apply_rows(0..self.dim, x, out);
    }

    /// Writes rows `rows` of `L x` into `out` (which has length `rows.len()`), so
    /// callers can split the destination range across workers.
    pub fn apply_rows(&self, rows: Range<usize>, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), rows.len());
        for (o, dest) in out.iter_mut().zip(rows) {
            let r = self.row_start[dest]..self.row_start[dest + 1];
            let mut acc = Complex64::new(0.0, 0.0);
            for (&s, &w) in self.src[r.clone()].iter().zip(&self.weight[r]) {
                acc += w * x[s as usize];
            }
            *o = acc;
        }
    }

    /// Elementwise sum of operators of equal dimension.
    pub fn sum(ops: &[&SuperOp]) -> SuperOp {
        let dim = ops.first().map_or(0, |op| op.dim);
        assert!(ops.iter().all(|op| op.dim == dim), "dimension mismatch in SuperOp::sum");
        SuperOp::from_rows(dim, |dest, sink| {
            for op in ops {
                for (s, w) in op.row(dest) {
                    sink.push(s, w);
                }
            }
        })
    }

    /// Sorted set of components reachable from `seeds` by repeated application.
    /// Components outside this set stay exactly zero along any trajectory
    /// started from a vector supported on `seeds`.
    pub fn reachable(&self, seeds: &[usize]) -> Vec<usize> {
        // forward adjacency (source -> destinations) by counting sort
        let mut start = vec![0usize; self.dim + 1];
        for &s in &self.src {
            start[s as usize + 1] += 1;
        }
        for i in 0..self.dim {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut dests = vec![0u32; self.src.len()];
        for dest in 0..self.dim {
            for k in self.row_start[dest]..self.row_start[dest + 1] {
                let s = self.src[k] as usize;
                dests[fill[s]] = dest as u32;
                fill[s] += 1;
            }
        }
        let mut seen = vec![false; self.dim];
        let mut queue = VecDeque::new();
        for &s in seeds {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &d in &dests[start[s]..start[s + 1]] {
                let d = d as usize;
                if !seen[d] {
                    seen[d] = true;
                    queue.push_back(d);
                }
            }
        }
        seen.iter().enumerate().filter_map(|(i, &r)| r.then_some(i)).collect()
    }

    /// The operator restricted to the sorted component set `support`: row and
    /// column `p` of the result correspond to component `support[p]`. Terms whose
    /// source lies outside `support` are dropped.
    pub fn restrict(&self, support: &[usize]) -> SuperOp {
        let mut local = vec![u32::MAX; self.dim];
        for (p, &g) in support.iter().enumerate() {
            local[g] = p as u32;
        }
        SuperOp::from_rows(support.len(), |dest, sink| {
            for (s, w) in self.row(support[dest]) {
                let l = local[s];
                if l != u32::MAX {
                    sink.push(l as usize, w);
                }
            }
        })
    }

    /// The product `self * other`, i.e. `other` applied first.
    pub fn compose(&self, other: &SuperOp) -> SuperOp {
        assert_eq!(self.dim, other.dim, "dimension mismatch in SuperOp::compose");
        SuperOp::from_rows(self.dim, |dest, sink| {
            for (mid, w) in self.row(dest) {
                for (s, w2) in other.row(mid) {
                    sink.push(s, w * w2);
                }
            }
        })
    }

    /// Returns `L` with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> SuperOp {
        let mut out = self.clone();
        for w in &mut out.weight {
            *w *= factor;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn duplicates_merge_and_zeros_drop() {
        let op = SuperOp::from_rows(3, |dest, sink| {
            if dest == 0 {
                sink.push(2, c(1.0));
                sink.push(1, c(0.5));
                sink.push(2, c(2.0));
                sink.push(1, c(-0.5));
            }
        });
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.row(0).collect::<Vec<_>>(), vec![(2, c(3.0))]);
    }

    #[test]
    fn apply_and_restrict() {
        // chain 0 -> 1 -> 2, isolated 3
        let op = SuperOp::from_rows(4, |dest, sink| match dest {
            1 => sink.push(0, c(2.0)),
            2 => sink.push(1, c(3.0)),
            3 => sink.push(3, c(-1.0)),
            _ => {}
        });
        let x = [c(1.0), c(1.0), c(1.0), c(1.0)];
        let mut out = [c(0.0); 4];
        op.apply(&x, &mut out);
        assert_eq!(out, [c(0.0), c(2.0), c(3.0), c(-1.0)]);
        assert_eq!(op.reachable(&[1]), vec![1, 2]);
        assert_eq!(op.reachable(&[0]), vec![0, 1, 2]);
        let r = op.restrict(&[1, 2]);
        assert_eq!(r.dim(), 2);
        assert_eq!(r.row(0).count(), 0);
        assert_eq!(r.row(1).collect::<Vec<_>>(), vec![(0, c(3.0))]);
    }

    #[test]
    fn sum_of_operators() {
        let a = SuperOp::from_rows(2, |d, s| s.push(d, c(1.0)));
        let b = SuperOp::from_rows(2, |d, s| s.push(1 - d, c(2.0)));
        let sum = SuperOp::sum(&[&a, &b]);
        assert_eq!(sum.row(0).collect::<Vec<_>>(), vec![(0, c(1.0)), (1, c(2.0))]);
        assert_eq!(a.scaled(0.0).nnz(), 2);
    }
}
