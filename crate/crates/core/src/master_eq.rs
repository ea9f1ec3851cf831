//! Projected Redfield and GKLS generators in the polaron frame.
//!
//! For every lead four real rank-4 tensors describe tunnelling: `r00` and
//! `r11` drain the empty and occupied blocks, `r10` feeds the empty block from
//! the occupied one (electron leaves the dot) and `r01` feeds the occupied
//! block from the empty one (electron enters). Block `n` evolves as
//!
//! `d rho^n_jm/dt = -i omega (j - m) rho^n_jm + sum_nu sum_kl (-R^{nn}_{jm,kl} rho^n_kl + R^{n'->n}_{jm,kl} rho^{n'}_kl)`.
//!
//! The GKLS generator keeps only population transfer and the decay of
//! coherences at half the summed escape rates, which makes it trace
//! preserving and reduces to the two-level rate equation when `lambda = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::fock::{displacement_elements, transition_energy};
use crate::leads::LeadParams;
use crate::ode::{integrate_linear, Tolerances};
use crate::state::{BlockState, Frame};
use crate::system::SystemParams;

/// Dense real tensor indexed `[j][m][k][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    d: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    fn zeros(d: usize) -> Self {
        Self { d, data: vec![0.0; d * d * d * d] }
    }

    #[inline]
    fn idx(&self, j: usize, m: usize, k: usize, l: usize) -> usize {
        ((j * self.d + m) * self.d + k) * self.d + l
    }

    #[inline]
    pub fn get(&self, j: usize, m: usize, k: usize, l: usize) -> f64 {
        self.data[self.idx(j, m, k, l)]
    }

    #[inline]
    fn add(&mut self, j: usize, m: usize, k: usize, l: usize, v: f64) {
        let i = self.idx(j, m, k, l);
        self.data[i] += v;
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

/// Tunnelling tensors of one lead.
#[derive(Debug, Clone, PartialEq)]
pub struct RedfieldTensorSet {
    pub r00: Tensor4,
    pub r11: Tensor4,
    /// Occupied to empty, weighted by out-tunnelling rates.
    pub r10: Tensor4,
    /// Empty to occupied, weighted by in-tunnelling rates.
    pub r01: Tensor4,
}

/// Builds the tunnelling tensors of `lead` from the displacement matrix `disp`.
pub fn build_tensors(system: &SystemParams, disp: &DMatrix<f64>, lead: &LeadParams) -> Result<RedfieldTensorSet> {
    let d = system.dim();
    if disp.nrows() != d || disp.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: disp.nrows() });
    }
    let eps = |k: usize, l: usize| transition_energy(system.mu_tilde, system.omega, k, l);
    let rin = DMatrix::from_fn(d, d, |k, l| lead.rate_in(eps(k, l)));
    let rout = DMatrix::from_fn(d, d, |k, l| lead.rate_out(eps(k, l)));
    // a[j][k] = 1/2 sum_i rin(eps_ki) D_ij D_ik ; b[j][k] = 1/2 sum_i rout(eps_ik) D_ji D_ki
    let a = DMatrix::from_fn(d, d, |j, k| 0.5 * (0..d).map(|i| rin[(k, i)] * disp[(i, j)] * disp[(i, k)]).sum::<f64>());
    let b = DMatrix::from_fn(d, d, |j, k| 0.5 * (0..d).map(|i| rout[(i, k)] * disp[(j, i)] * disp[(k, i)]).sum::<f64>());
    let mut t = RedfieldTensorSet {
        r00: Tensor4::zeros(d),
        r11: Tensor4::zeros(d),
        r10: Tensor4::zeros(d),
        r01: Tensor4::zeros(d),
    };
    for j in 0..d {
        for m in 0..d {
            for k in 0..d {
                t.r00.add(j, m, k, m, a[(j, k)]);
                t.r00.add(j, m, j, k, a[(m, k)]);
                t.r11.add(j, m, k, m, b[(j, k)]);
                t.r11.add(j, m, j, k, b[(m, k)]);
                for l in 0..d {
                    let v10 = 0.5 * disp[(k, j)] * disp[(l, m)] * (rout[(j, k)] + rout[(m, l)]);
                    let v01 = 0.5 * disp[(j, k)] * disp[(m, l)] * (rin[(k, j)] + rin[(l, m)]);
                    t.r10.add(j, m, k, l, v10);
                    t.r01.add(j, m, k, l, v01);
                }
            }
        }
    }
    Ok(t)
}

/// Which generator to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Redfield,
    Gkls,
}

/// System, leads and the derived displacement matrix and tensors.
#[derive(Debug, Clone)]
pub struct Model {
    pub system: SystemParams,
    pub leads: Vec<LeadParams>,
    pub displacement: DMatrix<f64>,
    pub tensors: Vec<RedfieldTensorSet>,
}

impl Model {
    pub fn new(system: SystemParams, leads: Vec<LeadParams>) -> Result<Self> {
        system.validate()?;
        if leads.is_empty() {
            return Err(invalid("leads", "at least one lead is required"));
        }
        for l in &leads {
            l.validate()?;
        }
        let displacement = displacement_elements(&system.fock_space(), system.lambda)?;
        let tensors = leads.iter().map(|l| build_tensors(&system, &displacement, l)).collect::<Result<Vec<_>>>()?;
        Ok(Self { system, leads, displacement, tensors })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// Complex generator coefficient coupling input `(n2, k, l)` into output
    /// `(n, j, m)`, excluding the coherent term.
    fn coefficient(&self, kind: SolverKind, n: usize, j: usize, m: usize, n2: usize, k: usize, l: usize) -> f64 {
        let sum = |f: &dyn Fn(&RedfieldTensorSet) -> f64| self.tensors.iter().map(f).sum::<f64>();
        match kind {
            SolverKind::Redfield => match (n, n2) {
                (0, 0) => -sum(&|t| t.r00.get(j, m, k, l)),
                (0, 1) => sum(&|t| t.r10.get(j, m, k, l)),
                (1, 1) => -sum(&|t| t.r11.get(j, m, k, l)),
                _ => sum(&|t| t.r01.get(j, m, k, l)),
            },
            SolverKind::Gkls => {
                if n == n2 {
                    if k == j && l == m {
                        let esc = |q: usize| match n {
                            0 => sum(&|t| t.r00.get(q, q, q, q)),
                            _ => sum(&|t| t.r11.get(q, q, q, q)),
                        };
                        -0.5 * (esc(j) + esc(m))
                    } else {
                        0.0
                    }
                } else if j == m && k == l {
                    match n {
                        0 => sum(&|t| t.r10.get(j, j, k, k)),
                        _ => sum(&|t| t.r01.get(j, j, k, k)),
                    }
                } else {
                    0.0
                }
            }
        }
    }

    /// Time derivative of `state` computed directly from the tensors.
    pub fn apply(&self, kind: SolverKind, state: &BlockState) -> Result<BlockState> {
        let d = self.dim();
        if state.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: state.dim() });
        }
        let mut out = BlockState::zeros(d, state.frame);
        let w = self.system.omega;
        for n in 0..2 {
            for j in 0..d {
                for m in 0..d {
                    let mut acc = num_complex::Complex64::new(0.0, -w * (j as f64 - m as f64)) * state.blocks[n][(j, m)];
                    for n2 in 0..2 {
                        for k in 0..d {
                            for l in 0..d {
                                let c = self.coefficient(kind, n, j, m, n2, k, l);
                                if c != 0.0 {
                                    acc += c * state.blocks[n2][(k, l)];
                                }
                            }
                        }
                    }
                    out.blocks[n][(j, m)] = acc;
                }
            }
        }
        Ok(out)
    }

    /// Current into each lead; positive when particles flow towards the lead.
    pub fn currents(&self, kind: SolverKind, state: &BlockState) -> Result<Vec<f64>> {
        let d = self.dim();
        if state.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: state.dim() });
        }
        let diag_only = kind == SolverKind::Gkls;
        Ok(self
            .tensors
            .iter()
            .map(|t| {
                let mut acc = 0.0;
                for q in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            if diag_only && k != l {
                                continue;
                            }
                            acc += t.r10.get(q, q, k, l) * state.blocks[1][(k, l)].re
                                - t.r01.get(q, q, k, l) * state.blocks[0][(k, l)].re;
                            // Imaginary parts cancel between (k, l) and (l, k).
                        }
                    }
                }
                acc
            })
            .collect())
    }
}

/// Default memory budget for the dense generator, 1 GiB.
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

/// Dense real generator acting on hermitian coordinates (see [`crate::state`]).
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub kind: SolverKind,
    /// Oscillator levels per block.
    pub dim: usize,
    pub matrix: DMatrix<f64>,
}

impl Liouvillian {
    /// Frobenius norm of the generator.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Time derivative of `state`.
    pub fn apply(&self, state: &BlockState) -> Result<BlockState> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: state.dim() });
        }
        BlockState::from_coords(&(&self.matrix * state.to_coords()), self.dim, state.frame)
    }
}

/// Assembles the dense generator of `model`, refusing sizes above `budget` bytes.
pub fn build_liouvillian(model: &Model, kind: SolverKind, budget: usize) -> Result<Liouvillian> {
    let d = model.dim();
    let d2 = d * d;
    let size = 2 * d2;
    let bytes = size.saturating_mul(size).saturating_mul(std::mem::size_of::<f64>());
    if bytes > budget {
        return Err(Error::DimensionTooLarge { dim: size, bytes, budget });
    }
    let w = model.system.omega;
    let mut mat = DMatrix::<f64>::zeros(size, size);
    // Coefficient c multiplies complex rho_kl; rho_kl is expressed through the
    // hermitian coordinates as (coord, factor) pairs with factor in {1, i, -i}.
    for n in 0..2 {
        for j in 0..d {
            for m in j..d {
                let row_re = n * d2 + j * d + m;
                let row_im = n * d2 + m * d + j;
                // Coherent rotation: -i w (j - m) rho_jm.
                if j != m {
                    let c = w * (j as f64 - m as f64);
                    // -i c (x + i y) = c y - i c x
                    mat[(row_re, row_im)] += c;
                    mat[(row_im, row_re)] -= c;
                }
                for n2 in 0..2 {
                    for k in 0..d {
                        for l in 0..d {
                            let c = model.coefficient(kind, n, j, m, n2, k, l);
                            if c == 0.0 {
                                continue;
                            }
                            let off = n2 * d2;
                            match k.cmp(&l) {
                                std::cmp::Ordering::Equal => {
                                    mat[(row_re, off + k * d + k)] += c;
                                }
                                std::cmp::Ordering::Less => {
                                    // rho_kl = x_(k,l) + i x_(l,k)
                                    mat[(row_re, off + k * d + l)] += c;
                                    if j != m {
                                        mat[(row_im, off + l * d + k)] += c;
                                    }
                                }
                                std::cmp::Ordering::Greater => {
                                    // rho_kl = x_(l,k) - i x_(k,l)
                                    mat[(row_re, off + l * d + k)] += c;
                                    if j != m {
                                        mat[(row_im, off + k * d + l)] -= c;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Liouvillian { kind, dim: d, matrix: mat })
}

/// Tolerances of the steady-state solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    /// Residual bound relative to the generator norm.
    pub residual_tol: f64,
    /// Kernel threshold on singular values relative to the largest.
    pub uniqueness_tol: f64,
    /// Verify the kernel dimension with a singular value decomposition.
    pub check_uniqueness: bool,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { residual_tol: 1e-10, uniqueness_tol: 1e-6, check_uniqueness: true }
    }
}

/// Stationary state together with solve diagnostics.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: BlockState,
    /// `||L rho||_2`.
    pub residual: f64,
    /// Second-smallest over largest singular value, when checked.
    pub gap_ratio: Option<f64>,
}

fn trace_row(d: usize) -> DVector<f64> {
    let mut r = DVector::zeros(2 * d * d);
    for n in 0..2 {
        for j in 0..d {
            r[n * d * d + j * d + j] = 1.0;
        }
    }
    r
}

fn sorted_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Unique stationary state of `l`, normalised to unit trace.
///
/// Solves the generator with one population row replaced by the trace
/// condition. Fails if the kernel is not one-dimensional or the residual
/// exceeds `residual_tol * ||L||`.
pub fn steady_state(l: &Liouvillian, opts: SteadyStateOptions) -> Result<SteadyState> {
    let d = l.dim;
    let size = 2 * d * d;
    let mut gap_ratio = None;
    if opts.check_uniqueness {
        let s = sorted_singular_values(&l.matrix);
        let smax = *s.last().unwrap_or(&0.0);
        let nullity = s.iter().filter(|&&x| x <= opts.uniqueness_tol * smax).count();
        if nullity != 1 {
            return Err(Error::NonUniqueSteadyState { nullity });
        }
        gap_ratio = Some(s[1] / smax);
    }
    let mut a = l.matrix.clone();
    a.set_row(0, &trace_row(d).transpose());
    let mut rhs = DVector::zeros(size);
    rhs[0] = 1.0;
    let x = match a.lu().solve(&rhs) {
        Some(x) if x.iter().all(|v| v.is_finite()) => x,
        _ => {
            let svd = l.matrix.clone().svd(false, true);
            let vt = svd.v_t.ok_or(Error::SingularSystem)?;
            let (imin, _) = svd.singular_values.argmin();
            let v: DVector<f64> = vt.row(imin).transpose();
            let tr = trace_row(d).dot(&v);
            if tr.abs() < f64::EPSILON {
                return Err(Error::SingularSystem);
            }
            v / tr
        }
    };
    let residual = (&l.matrix * &x).norm();
    let bound = opts.residual_tol * l.norm();
    if !(residual <= bound) {
        return Err(Error::ResidualTooLarge { residual, bound });
    }
    let state = BlockState::from_coords(&x, d, Frame::Polaron)?;
    Ok(SteadyState { state, residual, gap_ratio })
}

/// Long-time limit of the evolution started from `rho0` when the generator
/// has a degenerate kernel.
///
/// Projects `rho0` onto the kernel along the range using left and right null
/// vectors, each taken from the right singular vectors of `L` or `L^T`.
pub fn steady_state_from(l: &Liouvillian, rho0: &BlockState, kernel_tol: f64) -> Result<BlockState> {
    if rho0.dim() != l.dim {
        return Err(Error::DimensionMismatch { expected: l.dim, found: rho0.dim() });
    }
    let null_space = |m: DMatrix<f64>| -> Result<DMatrix<f64>> {
        let svd = m.svd(false, true);
        let vt = svd.v_t.as_ref().ok_or(Error::SingularSystem)?;
        let smax = svd.singular_values.max();
        let ker: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= kernel_tol * smax).collect();
        Ok(DMatrix::from_fn(vt.ncols(), ker.len(), |r, c| vt[(ker[c], r)]))
    };
    let right = null_space(l.matrix.clone())?;
    let left = null_space(l.matrix.transpose())?;
    if right.ncols() == 0 || right.ncols() != left.ncols() {
        return Err(Error::NonUniqueSteadyState { nullity: right.ncols() });
    }
    let overlap = left.transpose() * &right;
    let coeffs = overlap.lu().solve(&(left.transpose() * rho0.to_coords())).ok_or(Error::SingularSystem)?;
    BlockState::from_coords(&(right * coeffs), l.dim, rho0.frame)
}

/// Slowest decay rate of `l`: the smallest `-Re(eigenvalue)` after removing
/// the `nullity` eigenvalues closest to zero.
pub fn spectral_gap(l: &Liouvillian, nullity: usize) -> f64 {
    let mut rates: Vec<f64> = l.matrix.complex_eigenvalues().iter().map(|z| -z.re).collect();
    rates.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    rates.get(nullity).copied().unwrap_or(f64::NAN)
}

/// Evolves `rho0` under `l` and returns the state at each time in `t_grid`.
pub fn evolve(l: &Liouvillian, rho0: &BlockState, t_grid: &[f64], tol: Tolerances) -> Result<Vec<BlockState>> {
    if rho0.dim() != l.dim {
        return Err(Error::DimensionMismatch { expected: l.dim, found: rho0.dim() });
    }
    integrate_linear(&l.matrix, &rho0.to_coords(), t_grid, tol)?
        .iter()
        .map(|x| BlockState::from_coords(x, l.dim, rho0.frame))
        .collect()
}

/// Dot-only rate equation without the oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct DotRates {
    pub p0: f64,
    pub p1: f64,
    /// Current into each lead.
    pub currents: Vec<f64>,
}

/// Stationary solution of the two-level rate equation at dot level `energy`.
pub fn qd_rate_equation(leads: &[LeadParams], energy: f64) -> Result<DotRates> {
    if leads.is_empty() {
        return Err(invalid("leads", "at least one lead is required"));
    }
    let rin: Vec<f64> = leads.iter().map(|l| l.rate_in(energy)).collect();
    let rout: Vec<f64> = leads.iter().map(|l| l.rate_out(energy)).collect();
    let (sin, sout): (f64, f64) = (rin.iter().sum(), rout.iter().sum());
    if !(sin + sout > 0.0) {
        return Err(Error::SingularSystem);
    }
    let p1 = sin / (sin + sout);
    let p0 = sout / (sin + sout);
    let currents = rin.iter().zip(&rout).map(|(i, o)| o * p1 - i * p0).collect();
    Ok(DotRates { p0, p1, currents })
}

/// Stationary state of the population-only rate equations obtained from the
/// diagonal of the generator. Coherences are zero.
pub fn population_steady_state(model: &Model) -> Result<BlockState> {
    let d = model.dim();
    let size = 2 * d;
    let mut w = DMatrix::<f64>::zeros(size, size);
    for n in 0..2 {
        for j in 0..d {
            for n2 in 0..2 {
                for k in 0..d {
                    w[(n * d + j, n2 * d + k)] = model.coefficient(SolverKind::Gkls, n, j, j, n2, k, k);
                }
            }
        }
    }
    for c in 0..size {
        w[(0, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(size);
    rhs[0] = 1.0;
    let p = w.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    let mut s = BlockState::zeros(d, Frame::Polaron);
    for n in 0..2 {
        for j in 0..d {
            s.blocks[n][(j, j)] = num_complex::Complex64::new(p[n * d + j], 0.0);
        }
    }
    Ok(s)
}
