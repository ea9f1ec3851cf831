//! Parameters of the dot-oscillator system.

use crate::error::{invalid, Result};
use crate::fock::{polaron_shift, FockSpace};

/// System parameters in the polaron frame, in angular GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Renormalised dot level `mu - omega lambda^2`.
    pub mu_tilde: f64,
    /// Oscillator frequency.
    pub omega: f64,
    /// Dimensionless coupling `g / omega`.
    pub lambda: f64,
    /// Highest retained oscillator level.
    pub n_fock: usize,
}

impl SystemParams {
    pub fn new(mu_tilde: f64, omega: f64, lambda: f64, n_fock: usize) -> Result<Self> {
        let p = Self { mu_tilde, omega, lambda, n_fock };
        p.validate()?;
        Ok(p)
    }

    /// Builds the parameters from the bare dot level `mu` and coupling `g`.
    pub fn from_bare(mu: f64, omega: f64, g: f64, n_fock: usize) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(invalid("omega", "must be finite and > 0"));
        }
        let lambda = g / omega;
        Self::new(polaron_shift(mu, omega, lambda), omega, lambda, n_fock)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(invalid("omega", "must be finite and > 0"));
        }
        if !self.mu_tilde.is_finite() {
            return Err(invalid("mu_tilde", "must be finite"));
        }
        if !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be finite"));
        }
        if self.n_fock < 1 {
            return Err(invalid("n_fock", "must be >= 1"));
        }
        Ok(())
    }

    pub fn fock_space(&self) -> FockSpace {
        FockSpace { n_max: self.n_fock, build_pad: self.n_fock }
    }

    /// Oscillator levels per dot block, `n_fock + 1`.
    pub fn dim(&self) -> usize {
        self.n_fock + 1
    }

    /// Energy `n mu_tilde + j omega` of `|j, n>` in the polaron frame.
    pub fn level_energy(&self, j: usize, n: usize) -> f64 {
        n as f64 * self.mu_tilde + j as f64 * self.omega
    }
}
