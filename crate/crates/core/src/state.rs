//! Block-diagonal density matrices.
//!
//! Because the total Hamiltonian commutes with the dot occupation, the
//! reduced state is block diagonal: `rho = |0><0| (x) rho^0 + |1><1| (x) rho^1`
//! with oscillator blocks `rho^n`.
//!
//! Solvers work on hermitian coordinates: for each block, position `(j, m)`
//! holds `rho_jj` when `j == m`, `Re rho_jm` when `j < m` and `Im rho_mj`
//! when `j > m`. Block `n` occupies `n d^2 .. (n + 1) d^2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Reference frame of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Polaron,
    Lab,
}

/// Density matrix split into empty-dot and occupied-dot oscillator blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    pub blocks: [DMatrix<Complex64>; 2],
    pub frame: Frame,
}

impl BlockState {
    pub fn new(block0: DMatrix<Complex64>, block1: DMatrix<Complex64>, frame: Frame) -> Result<Self> {
        if !block0.is_square() || block0.shape() != block1.shape() {
            return Err(Error::DimensionMismatch { expected: block0.nrows(), found: block1.nrows() });
        }
        Ok(Self { blocks: [block0, block1], frame })
    }

    pub fn zeros(dim: usize, frame: Frame) -> Self {
        Self { blocks: [DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim)], frame }
    }

    /// Pure state `|j, n>` (oscillator level `j`, dot occupation `n`).
    pub fn fock(dim: usize, dot: usize, j: usize, frame: Frame) -> Result<Self> {
        if dot > 1 {
            return Err(invalid("dot", "must be 0 or 1"));
        }
        if j >= dim {
            return Err(invalid("level", format!("{j} outside the truncated space of {dim} levels")));
        }
        let mut s = Self::zeros(dim, frame);
        s.blocks[dot][(j, j)] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Product of dot populations `(p0, p1)` with an oscillator state.
    pub fn product(p0: f64, p1: f64, osc: &DMatrix<Complex64>, frame: Frame) -> Self {
        Self { blocks: [osc * Complex64::new(p0, 0.0), osc * Complex64::new(p1, 0.0)], frame }
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks[0].trace() + self.blocks[1].trace()
    }

    /// Probability that the dot is occupied.
    pub fn dot_population(&self) -> f64 {
        self.blocks[1].trace().re
    }

    /// Largest `|rho - rho^dag|` element over both blocks.
    pub fn hermiticity_error(&self) -> f64 {
        self.blocks.iter().map(|b| (b - b.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
    }

    /// Replaces each block by its hermitian part.
    pub fn symmetrize(&mut self) {
        for b in &mut self.blocks {
            let h = (&*b + b.adjoint()) * Complex64::new(0.5, 0.0);
            *b = h;
        }
    }

    /// Smallest eigenvalue over both blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().flat_map(hermitian_eigenvalues).fold(f64::INFINITY, f64::min)
    }

    /// Hermitian coordinates of the state.
    pub fn to_coords(&self) -> DVector<f64> {
        let d = self.dim();
        let mut v = DVector::zeros(2 * d * d);
        for (n, b) in self.blocks.iter().enumerate() {
            for j in 0..d {
                for m in 0..d {
                    let idx = n * d * d + j * d + m;
                    v[idx] = match j.cmp(&m) {
                        std::cmp::Ordering::Equal => b[(j, j)].re,
                        std::cmp::Ordering::Less => b[(j, m)].re,
                        std::cmp::Ordering::Greater => b[(m, j)].im,
                    };
                }
            }
        }
        v
    }

    /// Inverse of [`BlockState::to_coords`].
    pub fn from_coords(v: &DVector<f64>, dim: usize, frame: Frame) -> Result<Self> {
        let d = dim;
        if v.len() != 2 * d * d {
            return Err(Error::DimensionMismatch { expected: 2 * d * d, found: v.len() });
        }
        let mut s = Self::zeros(d, frame);
        for n in 0..2 {
            let b = &mut s.blocks[n];
            let off = n * d * d;
            for j in 0..d {
                b[(j, j)] = Complex64::new(v[off + j * d + j], 0.0);
                for m in j + 1..d {
                    let z = Complex64::new(v[off + j * d + m], v[off + m * d + j]);
                    b[(j, m)] = z;
                    b[(m, j)] = z.conj();
                }
            }
        }
        Ok(s)
    }
}

/// Eigenvalues of a hermitian matrix via its real symmetric embedding.
pub fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let d = h.nrows();
    let mut r = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            r[(i, j)] = z.re;
            r[(i + d, j + d)] = z.re;
            r[(i + d, j)] = z.im;
            r[(i, j + d)] = -z.im;
        }
    }
    let mut ev: Vec<f64> = r.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    // Each eigenvalue appears twice in the embedding.
    ev.into_iter().step_by(2).collect()
}

/// Trace distance `(1/2) sum |eig(rho - sigma)|` between two states.
pub fn trace_distance(a: &BlockState, b: &BlockState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    if a.frame != b.frame {
        return Err(invalid("frame", "states must be expressed in the same frame"));
    }
    let mut acc = 0.0;
    for n in 0..2 {
        let diff = &a.blocks[n] - &b.blocks[n];
        acc += hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>();
    }
    Ok(0.5 * acc)
}
