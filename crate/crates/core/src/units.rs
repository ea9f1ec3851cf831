//! Unit conventions.
//!
//! Energies, rates and temperatures are angular frequencies in units of
//! 10^9 rad/s with hbar = k_B = 1. Quantities quoted as `X/2pi` in GHz are
//! converted with [`from_cycles`]; temperatures in millikelvin with
//! [`temperature_from_millikelvin`].

use std::f64::consts::PI;

/// Boltzmann constant in J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Reduced Planck constant in J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Converts a value quoted as `X/2pi` (GHz) to angular GHz.
pub fn from_cycles(x_over_2pi: f64) -> f64 {
    2.0 * PI * x_over_2pi
}

/// Converts angular GHz to the `X/2pi` value in GHz.
pub fn to_cycles(x: f64) -> f64 {
    x / (2.0 * PI)
}

/// Converts a temperature in mK to the energy unit k_B T / hbar in 10^9 rad/s.
pub fn temperature_from_millikelvin(mk: f64) -> f64 {
    K_B * mk * 1e-3 / HBAR / 1e9
}

/// Inverse of [`temperature_from_millikelvin`].
pub fn temperature_to_millikelvin(t: f64) -> f64 {
    t * 1e9 * HBAR / K_B * 1e3
}
