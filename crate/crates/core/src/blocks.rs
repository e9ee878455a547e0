//! Block-diagonal views of flattened density vectors.
//!
//! A symmetric-basis state is block diagonal in `J`, and the master equation
//! conserves total excitation number up to a fixed bra-ket offset, so most
//! states split further into smaller blocks. [`BlockPlan`] finds those blocks
//! from the sparsity pattern (union-find over row/column labels) and gathers
//! dense Hermitian matrices for eigendecomposition.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::BasisLayout;

/// Maps flat component indices onto entries of block-diagonal square matrices.
pub trait MatrixStructure {
    /// Number of flat components.
    fn components(&self) -> usize;
    /// Dimensions of the structural blocks.
    fn block_dims(&self) -> Vec<usize>;
    /// `(block, row, col)` of a component.
    fn locate(&self, idx: usize) -> (usize, usize, usize);
    /// Index of the Hermitian-conjugate component.
    fn conjugate(&self, idx: usize) -> usize;
}

impl MatrixStructure for BasisLayout {
    fn components(&self) -> usize {
        self.total_dim()
    }

    fn block_dims(&self) -> Vec<usize> {
        self.sectors().iter().map(|s| self.block_dim(s)).collect()
    }

    fn locate(&self, idx: usize) -> (usize, usize, usize) {
        let (i, l, k) = self.split(idx);
        let t = self.flat_to_triple(i).unwrap();
        let block = ((self.qubits() - t.j2) / 2) as usize;
        let levels = self.boson_levels();
        let row = ((t.j2 as i32 - t.n2) / 2) as usize * levels + l;
        let col = ((t.j2 as i32 - t.m2) / 2) as usize * levels + k;
        (block, row, col)
    }

    fn conjugate(&self, idx: usize) -> usize {
        self.conjugate_index(idx)
    }
}

/// A dense `dim x dim` matrix as row-major storage `idx = row * dim + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseSquare {
    pub dim: usize,
}

impl MatrixStructure for DenseSquare {
    fn components(&self) -> usize {
        self.dim * self.dim
    }

    fn block_dims(&self) -> Vec<usize> {
        vec![self.dim]
    }

    fn locate(&self, idx: usize) -> (usize, usize, usize) {
        (0, idx / self.dim, idx % self.dim)
    }

    fn conjugate(&self, idx: usize) -> usize {
        let (_, r, c) = self.locate(idx);
        c * self.dim + r
    }
}

/// One connected block: gathered entries `(row, col, slot)` where `slot` indexes
/// the (support-local) value vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub dim: usize,
    pub entries: Vec<(u32, u32, u32)>,
}

impl Block {
    pub fn gather(&self, values: &[Complex64]) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, s) in &self.entries {
            m[(r as usize, c as usize)] = values[s as usize];
        }
        m
    }

    /// Gathers `f(slot)` for every entry.
    pub fn gather_with(&self, f: impl Fn(usize) -> Complex64) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, s) in &self.entries {
            m[(r as usize, c as usize)] = f(s as usize);
        }
        m
    }
}

/// Connected blocks covering a set of components.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockPlan {
    pub blocks: Vec<Block>,
}

impl BlockPlan {
    /// Plan for the components `support` (sorted global indices); slot `p` of the
    /// value vector holds component `support[p]`.
    pub fn new<S: MatrixStructure + ?Sized>(structure: &S, support: &[usize]) -> Self {
        let dims = structure.block_dims();
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        offsets.push(0usize);
        for d in &dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        // union-find over all (block, label) pairs; rows and columns share labels
        let mut parent: Vec<usize> = (0..total).collect();
        let located: Vec<(usize, usize, usize)> =
            support.iter().map(|&g| structure.locate(g)).collect();
        for &(b, r, c) in &located {
            union(&mut parent, offsets[b] + r, offsets[b] + c);
        }
        let mut root_block = vec![usize::MAX; total];
        let mut local = vec![0u32; total];
        let mut blocks: Vec<Block> = Vec::new();
        // assign labels in increasing order so block layout is deterministic
        let mut touched = vec![false; total];
        for &(b, r, c) in &located {
            touched[offsets[b] + r] = true;
            touched[offsets[b] + c] = true;
        }
        for label in 0..total {
            if !touched[label] {
                continue;
            }
            let root = find(&mut parent, label);
            if root_block[root] == usize::MAX {
                root_block[root] = blocks.len();
                blocks.push(Block { dim: 0, entries: Vec::new() });
            }
            let blk = &mut blocks[root_block[root]];
            local[label] = blk.dim as u32;
            blk.dim += 1;
        }
        for (slot, &(b, r, c)) in located.iter().enumerate() {
            let (lr, lc) = (offsets[b] + r, offsets[b] + c);
            let root = find(&mut parent, lr);
            blocks[root_block[root]].entries.push((local[lr], local[lc], slot as u32));
        }
        BlockPlan { blocks }
    }

    pub fn max_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).max().unwrap_or(0)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        // keep the smaller label as root
        if ra < rb {
            parent[rb] = ra;
        } else {
            parent[ra] = rb;
        }
    }
}

/// Spectrum of a Hermitian matrix through its real embedding
/// `[[Re H, -Im H], [Im H, Re H]]`.
///
/// Every eigenvalue of `H` appears twice in `values`. Column `k` of `frame` is
/// `x + i y` for the real eigenvector `(x; y)`; the columns are unit vectors
/// with `sum_k |u_k><u_k| = 2 I` and `H u_k = values[k] u_k`.
#[derive(Debug, Clone)]
pub struct HermitianFrame {
    pub values: Vec<f64>,
    pub frame: DMatrix<Complex64>,
}

fn real_embedding(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        // Hermitian part only
        let (i, j) = (r % n, c % n);
        let h = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        match (r < n, c < n) {
            (true, true) | (false, false) => h.re,
            (true, false) => -h.im,
            (false, true) => h.im,
        }
    })
}

/// Implicit QL on a symmetric tridiagonal matrix (diagonal `d`, off-diagonal
/// `e[i]` between rows `i` and `i + 1`, `e[n - 1] = 0`). Rotations are
/// accumulated into the columns of `v` when given.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut v: Option<&mut DMatrix<f64>>) {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..v.nrows() {
                            let h = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * h;
                            v[(k, i)] = c * v[(k, i)] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

fn symmetric_spectrum(a: DMatrix<f64>, vectors: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), vectors.then(|| DMatrix::zeros(0, 0)));
    }
    let tri = a.symmetric_tridiagonalize();
    let (q, diag, off) = if vectors {
        let (q, d, o) = tri.unpack();
        (Some(q), d, o)
    } else {
        let (d, o) = tri.unpack_tridiagonal();
        (None, d, o)
    };
    let mut d: Vec<f64> = diag.iter().copied().collect();
    let mut e: Vec<f64> = off.iter().copied().chain(core::iter::once(0.0)).collect();
    let mut q = q;
    tridiagonal_ql(&mut d, &mut e, q.as_mut());
    (d, q)
}

pub fn hermitian_frame(m: &DMatrix<Complex64>) -> HermitianFrame {
    let n = m.nrows();
    let (values, v) = symmetric_spectrum(real_embedding(m), true);
    let v = v.unwrap();
    let frame = DMatrix::from_fn(n, 2 * n, |r, k| Complex64::new(v[(r, k)], v[(r + n, k)]));
    HermitianFrame { values, frame }
}

/// Eigenvalues of a Hermitian matrix, each listed twice.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    symmetric_spectrum(real_embedding(m), false).0
}
