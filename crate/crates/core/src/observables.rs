//! Frame changes, reduced states and stability maps.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::leads::LeadParams;
use crate::master_eq::{build_liouvillian, population_steady_state, steady_state, Model, SolverKind, SteadyStateOptions};
use crate::state::{BlockState, Frame};
use crate::system::SystemParams;

fn conjugate(block: &DMatrix<Complex64>, left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<Complex64> {
    let l = left.map(|x| Complex64::new(x, 0.0));
    let r = right.map(|x| Complex64::new(x, 0.0));
    l * block * r
}

fn check_disp(state: &BlockState, disp: &DMatrix<f64>) -> Result<()> {
    if disp.nrows() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: disp.nrows() });
    }
    Ok(())
}

/// Polaron-frame state to the lab frame: `rho^1 -> D^T rho^1 D`.
///
/// The empty-dot block is unchanged. Weight displaced beyond the truncated
/// space is lost, so the trace is preserved only as far as the state stays
/// inside the interior levels.
pub fn to_lab_frame(state: &BlockState, disp: &DMatrix<f64>) -> Result<BlockState> {
    if state.frame != Frame::Polaron {
        return Err(invalid("frame", "state is not in the polaron frame"));
    }
    check_disp(state, disp)?;
    let b1 = conjugate(&state.blocks[1], &disp.transpose(), disp);
    BlockState::new(state.blocks[0].clone(), b1, Frame::Lab)
}

/// Lab-frame state to the polaron frame: `rho^1 -> D rho^1 D^T`.
pub fn to_polaron_frame(state: &BlockState, disp: &DMatrix<f64>) -> Result<BlockState> {
    if state.frame != Frame::Lab {
        return Err(invalid("frame", "state is not in the lab frame"));
    }
    check_disp(state, disp)?;
    let b1 = conjugate(&state.blocks[1], disp, &disp.transpose());
    BlockState::new(state.blocks[0].clone(), b1, Frame::Polaron)
}

/// Oscillator state with the dot traced out, `rho^0 + rho^1`.
pub fn reduced_qho(state: &BlockState) -> DMatrix<Complex64> {
    &state.blocks[0] + &state.blocks[1]
}

/// `tr(b rho)` for an oscillator block.
fn mean_annihilation(block: &DMatrix<Complex64>) -> Complex64 {
    (0..block.nrows() - 1).map(|n| ((n + 1) as f64).sqrt() * block[(n + 1, n)]).sum()
}

/// Lab-frame phonon number of a polaron-frame state.
///
/// Uses `U b U^dag = b - lambda` on the occupied block, so no truncated
/// frame change is needed.
pub fn mean_phonons_lab(state: &BlockState, lambda: f64) -> Result<f64> {
    if state.frame != Frame::Polaron {
        return Err(invalid("frame", "state is not in the polaron frame"));
    }
    let number = |b: &DMatrix<Complex64>| (0..b.nrows()).map(|n| n as f64 * b[(n, n)].re).sum::<f64>();
    let b1 = &state.blocks[1];
    Ok(number(&state.blocks[0]) + number(b1) - 2.0 * lambda * mean_annihilation(b1).re + lambda * lambda * b1.trace().re)
}

/// Diagonal lab-frame state built from the population-only rate equations.
///
/// Solves the populations without coherences, moves the result to the lab
/// frame and discards the off-diagonal elements created by the frame change.
pub fn classical_diagonal_analogue(model: &Model) -> Result<BlockState> {
    let pops = population_steady_state(model)?;
    let lab = to_lab_frame(&pops, &model.displacement)?;
    let d = model.dim();
    let mut out = BlockState::zeros(d, Frame::Lab);
    for n in 0..2 {
        for j in 0..d {
            out.blocks[n][(j, j)] = Complex64::new(lab.blocks[n][(j, j)].re, 0.0);
        }
    }
    Ok(out)
}

/// How a bias `delta_mu` is split between the two leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BiasSplit {
    /// `mu_L = delta_mu / 2`, `mu_R = -delta_mu / 2`.
    #[default]
    Symmetric,
    /// `mu_L = delta_mu`, `mu_R = 0`.
    Left,
    /// `mu_L = 0`, `mu_R = -delta_mu`.
    Right,
}

impl BiasSplit {
    /// Sets the chemical potentials of `(left, right)` for bias `delta_mu`.
    pub fn apply(self, leads: &mut [LeadParams; 2], delta_mu: f64) {
        let (l, r) = match self {
            BiasSplit::Symmetric => (0.5 * delta_mu, -0.5 * delta_mu),
            BiasSplit::Left => (delta_mu, 0.0),
            BiasSplit::Right => (0.0, -delta_mu),
        };
        leads[0].chem_potential = l;
        leads[1].chem_potential = r;
    }
}

/// Steady-state currents of one parameter point.
#[derive(Debug, Clone)]
pub struct PointSolution {
    pub state: BlockState,
    /// Currents into the left and right leads.
    pub currents: Vec<f64>,
    pub residual: f64,
}

/// Builds the model, solves the steady state and evaluates the currents.
pub fn solve_point(
    system: SystemParams,
    leads: Vec<LeadParams>,
    kind: SolverKind,
    opts: SteadyStateOptions,
    budget: usize,
) -> Result<PointSolution> {
    let model = Model::new(system, leads)?;
    let l = build_liouvillian(&model, kind, budget)?;
    let ss = steady_state(&l, opts)?;
    let currents = model.currents(kind, &ss.state)?;
    Ok(PointSolution { state: ss.state, currents, residual: ss.residual })
}

/// Finite-difference derivative of `values` on `grid`: central differences in
/// the interior and one-sided differences at the edges.
pub fn conductance(values: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if grid.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
    }
    let n = grid.len();
    if n < 2 {
        return Err(Error::CoarseGrid { reason: format!("{n} point(s) along the bias axis, at least 2 needed") });
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid", "must be strictly increasing"));
    }
    Ok((0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (values[b] - values[a]) / (grid[b] - grid[a])
        })
        .collect())
}

/// Current and conductance on a `(mu_tilde, delta_mu)` grid.
#[derive(Debug, Clone)]
pub struct StabilityMap {
    pub mu_tilde: Vec<f64>,
    pub delta_mu: Vec<f64>,
    /// `current[i][j]`: current into the right lead at `(mu_tilde[i], delta_mu[j])`.
    pub current: Vec<Vec<f64>>,
    /// `dI_R / d delta_mu` on the same grid.
    pub conductance: Vec<Vec<f64>>,
}

impl StabilityMap {
    /// Ratio of `sum |dI/d delta_mu|` over positive bias to that over negative
    /// bias, with trapezoid weights along `mu_tilde`.
    pub fn edge_asymmetry(&self) -> f64 {
        let nm = self.mu_tilde.len();
        let weight = |i: usize| if nm > 1 && (i == 0 || i == nm - 1) { 0.5 } else { 1.0 };
        let (mut pos, mut neg) = (0.0, 0.0);
        for (i, row) in self.conductance.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                let dm = self.delta_mu[j];
                if dm > 0.0 {
                    pos += weight(i) * g.abs();
                } else if dm < 0.0 {
                    neg += weight(i) * g.abs();
                }
            }
        }
        pos / neg
    }
}

/// Steady-state current map over `mu_tilde` and bias.
///
/// `leads` holds the left and right lead; their chemical potentials are
/// overwritten by `split`. Grid points are solved in parallel on the current
/// rayon pool; results do not depend on the number of threads.
pub fn stability_map(
    system: SystemParams,
    leads: [LeadParams; 2],
    kind: SolverKind,
    mu_tilde: &[f64],
    delta_mu: &[f64],
    split: BiasSplit,
    opts: SteadyStateOptions,
    budget: usize,
) -> Result<StabilityMap> {
    if delta_mu.len() < 2 {
        return Err(Error::CoarseGrid { reason: "the bias axis needs at least 2 points".into() });
    }
    let points: Vec<(usize, usize)> = (0..mu_tilde.len()).flat_map(|i| (0..delta_mu.len()).map(move |j| (i, j))).collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(i, j)| {
            let mut sys = system;
            sys.mu_tilde = mu_tilde[i];
            let mut ls = leads;
            split.apply(&mut ls, delta_mu[j]);
            solve_point(sys, ls.to_vec(), kind, opts, budget).map(|p| p.currents[1])
        })
        .collect::<Result<Vec<_>>>()?;
    let current: Vec<Vec<f64>> = values.chunks(delta_mu.len()).map(|c| c.to_vec()).collect();
    let conductance = current.iter().map(|row| conductance(row, delta_mu)).collect::<Result<Vec<_>>>()?;
    Ok(StabilityMap { mu_tilde: mu_tilde.to_vec(), delta_mu: delta_mu.to_vec(), current, conductance })
}
