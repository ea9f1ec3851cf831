//! Fermionic leads with Lorentzian spectral density.
//!
//! A lead is described by its coupling `gamma_rate`, temperature, chemical
//! potential and a Lorentzian transmission `Gamma delta^2 / ((e - center)^2 + delta^2)`.
//! The wide-band limit replaces the Lorentzian by the constant `Gamma`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::special::scaled_e1;

/// Parameters of one reservoir, in angular GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadParams {
    /// Overall tunnelling rate `Gamma`.
    pub gamma_rate: f64,
    pub temperature: f64,
    pub chem_potential: f64,
    /// Lorentzian centre `gamma`.
    pub center: f64,
    /// Lorentzian half width `delta`.
    pub width: f64,
    pub wide_band: bool,
}

impl LeadParams {
    pub fn new(gamma_rate: f64, temperature: f64, chem_potential: f64, center: f64, width: f64) -> Result<Self> {
        let lead = Self { gamma_rate, temperature, chem_potential, center, width, wide_band: false };
        lead.validate()?;
        Ok(lead)
    }

    pub fn wide_band(gamma_rate: f64, temperature: f64, chem_potential: f64) -> Result<Self> {
        let lead = Self { gamma_rate, temperature, chem_potential, center: 0.0, width: 1.0, wide_band: true };
        lead.validate()?;
        Ok(lead)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_rate.is_finite() && self.gamma_rate > 0.0) {
            return Err(invalid("gamma_rate", "must be finite and > 0"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(invalid("temperature", "must be finite and > 0"));
        }
        if !self.chem_potential.is_finite() {
            return Err(invalid("chem_potential", "must be finite"));
        }
        if !self.wide_band {
            if !self.center.is_finite() {
                return Err(invalid("lorentz_center", "must be finite"));
            }
            if !(self.width.is_finite() && self.width > 0.0) {
                return Err(invalid("lorentz_width", "must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Soft validity conditions of the sequential-tunnelling treatment that
    /// are reported rather than enforced: `Gamma / T <= 0.1` and, for a
    /// finite band, `delta >= 10 Gamma`.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let gt = self.gamma_rate / self.temperature;
        if gt > 0.1 {
            out.push(format!("Gamma/T = {gt:.3} exceeds 0.1"));
        }
        if !self.wide_band && self.width < 10.0 * self.gamma_rate {
            out.push(format!("delta/Gamma = {:.3} is below 10", self.width / self.gamma_rate));
        }
        out
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// Transmission `Upsilon(e)`.
    pub fn lorentzian(&self, e: f64) -> f64 {
        lorentzian(self, e)
    }

    /// Fermi occupation of the lead at energy `e`.
    pub fn fermi(&self, e: f64) -> f64 {
        fermi(e, self.chem_potential, self.temperature)
    }

    /// Rate for an electron to tunnel from the lead onto the dot at energy `e`.
    pub fn rate_in(&self, e: f64) -> f64 {
        self.lorentzian(e) * self.fermi(e)
    }

    /// Rate for an electron to tunnel from the dot into the lead at energy `e`.
    pub fn rate_out(&self, e: f64) -> f64 {
        self.lorentzian(e) * fermi(-e, -self.chem_potential, self.temperature)
    }
}

/// Overflow-safe Fermi function `1 / (exp((e - mu)/T) + 1)`.
pub fn fermi(e: f64, mu: f64, temperature: f64) -> f64 {
    let x = (e - mu) / temperature;
    if x >= 0.0 {
        let t = (-x).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Lorentzian transmission of a lead, or `Gamma` in the wide-band limit.
pub fn lorentzian(lead: &LeadParams, e: f64) -> f64 {
    if lead.wide_band {
        return lead.gamma_rate;
    }
    let x = e - lead.center;
    lead.gamma_rate * lead.width * lead.width / (x * x + lead.width * lead.width)
}

/// Bath correlation channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Electron leaving the dot, weight `Upsilon (1 - f)`.
    Out,
    /// Electron entering the dot, weight `Upsilon f`.
    In,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Channel::Out => 0,
            Channel::In => 1,
        }
    }

    /// Spectral weight `Upsilon(e) F(e)` of this channel.
    pub fn weight(self, lead: &LeadParams, e: f64) -> f64 {
        match self {
            Channel::Out => lead.rate_out(e),
            Channel::In => lead.rate_in(e),
        }
    }
}

fn complex_fermi(z: Complex64, mu: f64, temperature: f64) -> Complex64 {
    let x = (z - mu) / temperature;
    if x.re >= 0.0 {
        let t = (-x).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

fn complex_lorentzian(lead: &LeadParams, z: Complex64) -> Complex64 {
    let x = z - lead.center;
    lead.gamma_rate * lead.width * lead.width / (x * x + lead.width * lead.width)
}

/// Half-width of the frequency window used for correlation functions.
pub fn correlation_window(lead: &LeadParams) -> f64 {
    let offset = (lead.chem_potential - lead.center).abs();
    (50.0 * lead.width)
        .max(20.0 * lead.temperature)
        .max(10.0 * offset)
        .max(offset + 40.0 * lead.temperature)
}

/// `int_W^inf delta^2/(y^2 + delta^2) exp(i s y) dy` for `s >= 0`.
fn lorentz_tail(width: f64, w: f64, s: f64) -> Complex64 {
    if s == 0.0 {
        return Complex64::new(width * (0.5 * PI - (w / width).atan()), 0.0);
    }
    let i = Complex64::i();
    let phase = Complex64::from_polar(1.0, s * w);
    // int_W^inf e^{isy}/(y - c) dy = e^{isW} e^z E1(z), z = -i s (W - c)
    let h = |c: Complex64| phase * scaled_e1(-i * s * (w - c));
    width / (2.0 * i) * (h(i * width) - h(-i * width))
}

/// `(1/2pi) int Upsilon(w) F(w) exp(i w s) dw` for a channel weight `F`.
fn spectral_transform(lead: &LeadParams, channel: Channel, times: &[f64]) -> Vec<Complex64> {
    let w = correlation_window(lead);
    let h_max = lead.width.min(lead.temperature) / 16.0;
    let m = ((2.0 * w / h_max).ceil() as usize).clamp(1 << 14, 1 << 22);
    let h = 2.0 * w / m as f64;
    let grid: Vec<(f64, f64)> = (0..=m)
        .map(|k| {
            let e = lead.center - w + k as f64 * h;
            let wt = if k == 0 || k == m { 0.5 } else { 1.0 };
            (e, wt * h * channel.weight(lead, e))
        })
        .collect();
    // Limits of the occupation factor far above and below the window.
    let (f_hi, f_lo) = match channel {
        Channel::In => (0.0, 1.0),
        Channel::Out => (1.0, 0.0),
    };
    times
        .iter()
        .map(|&t| {
            let s = t.abs();
            let mut acc = Complex64::new(0.0, 0.0);
            for &(e, wt) in &grid {
                acc += wt * Complex64::from_polar(1.0, e * s);
            }
            // Euler-Maclaurin endpoint correction -h^2/12 [G'(b) - G'(a)].
            let dg = |e: f64| {
                let g = channel.weight(lead, e);
                let gp = (channel.weight(lead, e + h) - channel.weight(lead, e - h)) / (2.0 * h);
                Complex64::new(gp, s * g) * Complex64::from_polar(1.0, e * s)
            };
            acc -= h * h / 12.0 * (dg(lead.center + w) - dg(lead.center - w));
            let tail = lorentz_tail(lead.width, w, s);
            acc += lead.gamma_rate * Complex64::from_polar(1.0, lead.center * s) * (f_hi * tail + f_lo * tail.conj());
            let v = acc / (2.0 * PI);
            if t < 0.0 {
                v.conj()
            } else {
                v
            }
        })
        .collect()
}

/// Bath correlation function of a lead on the given time grid.
///
/// `Channel::Out` gives `(1/2pi) int exp(-i w s) Upsilon (1 - f) dw`,
/// `Channel::In` gives `(1/2pi) int exp(+i w s) Upsilon f dw`. The integral is a
/// trapezoid sum over a window around the Lorentzian centre with the
/// Lorentzian tails outside the window added in closed form.
pub fn bath_correlation(lead: &LeadParams, channel: Channel, times: &[f64]) -> Result<Vec<Complex64>> {
    lead.validate()?;
    if lead.wide_band {
        return Err(Error::WideBand { what: "bath correlation function" });
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("times", "must be finite"));
    }
    let j = spectral_transform(lead, channel, times);
    Ok(match channel {
        Channel::In => j,
        Channel::Out => j.into_iter().map(|v| v.conj()).collect(),
    })
}

/// Earliest grid time after which `|C(s)|` stays below `threshold * |C(0)|`.
///
/// `values[0]` must be the value at `s = 0`. Returns `None` if the
/// correlation has not decayed by the end of the grid.
pub fn decay_time(times: &[f64], values: &[Complex64], threshold: f64) -> Option<f64> {
    let c0 = values.first()?.norm();
    let bound = threshold * c0;
    let last_above = values.iter().rposition(|v| v.norm() >= bound)?;
    if last_above + 1 >= values.len() {
        return None;
    }
    times.get(last_above + 1).copied()
}

/// Imaginary part of the half-sided transform of a bath correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambShift {
    /// `Im G_q(E) = (1/2pi) PV int Upsilon F_q(w) / (w - E) dw`.
    pub im: f64,
    /// `Re G_q(E) = Upsilon F_q(E) / 2`.
    pub re: f64,
    /// Magnitude of the Lorentzian-pole residue.
    pub lorentz_residue: f64,
    /// Magnitude of the summed Matsubara residues, excluding the first pole
    /// when it is merged with the Lorentzian pole.
    pub matsubara_sum: f64,
    /// `|Re G| + |pole residues| + |Matsubara sum|`, an upper bound on `|Im G|`.
    pub bound: f64,
    /// Number of Matsubara terms used.
    pub matsubara_terms: usize,
    /// Set when `beta delta` lies within `1e-3` of `pi`, where the
    /// Lorentzian and first Matsubara residues nearly cancel.
    pub near_pole: bool,
}

const MATSUBARA_CAP: usize = 1_000_000;
const MATSUBARA_RTOL: f64 = 1e-12;

/// Principal-value part of the half-sided bath transform, evaluated by
/// residues: the Lorentzian pole, the Matsubara poles of the Fermi function
/// and the half residue on the real axis.
///
/// Requires `beta delta < pi`; the wide-band limit has no finite value.
pub fn lamb_shift_im(lead: &LeadParams, channel: Channel, energy: f64) -> Result<LambShift> {
    lead.validate()?;
    if lead.wide_band {
        return Err(Error::WideBand { what: "Lamb shift" });
    }
    if !energy.is_finite() {
        return Err(invalid("energy", "must be finite"));
    }
    let beta_delta = lead.width / lead.temperature;
    if beta_delta >= PI {
        return Err(Error::LambShiftGuard { beta_delta });
    }
    let i = Complex64::i();
    let (mu, t) = (lead.chem_potential, lead.temperature);
    let pole = Complex64::new(lead.center, lead.width);
    let occ = complex_fermi(pole, mu, t);
    let occ = match channel {
        Channel::In => occ,
        Channel::Out => 1.0 - occ,
    };
    let res_l = -0.5 * i * lead.gamma_rate * lead.width * occ / (pole - energy);
    // Residue of f at the Matsubara poles is -T; of 1 - f it is +T.
    let sign = match channel {
        Channel::In => -t,
        Channel::Out => t,
    };
    let weight = |z: Complex64| {
        let occ = complex_fermi(z, mu, t);
        let occ = match channel {
            Channel::In => occ,
            Channel::Out => 1.0 - occ,
        };
        complex_lorentzian(lead, z) * occ / (z - energy)
    };
    let first = Complex64::new(mu, PI * t);
    let merge = (pole - first).norm() < 0.25 * lead.width.min(PI * t);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut combined = res_l;
    let mut start = 0;
    if merge {
        // The Lorentzian pole and the first Matsubara pole nearly coincide and
        // their residues cancel; integrate around both on a small circle.
        let centre = 0.5 * (pole + first);
        let radius = 0.5 * lead.width.min(PI * t);
        let n = 128;
        let mut acc = Complex64::new(0.0, 0.0);
        for q in 0..n {
            let e = Complex64::from_polar(1.0, 2.0 * PI * q as f64 / n as f64);
            acc += weight(centre + radius * e) * radius * e;
        }
        combined = acc / n as f64;
        start = 1;
    }
    let mut terms = start;
    for k in start..MATSUBARA_CAP {
        let z = Complex64::new(mu, PI * t * (2 * k + 1) as f64);
        let term = sign * complex_lorentzian(lead, z) / (z - energy);
        sum += term;
        terms = k + 1;
        if term.norm() <= MATSUBARA_RTOL * (combined + sum).norm() {
            break;
        }
    }
    let pv = (2.0 * PI * i * (combined + sum)).re;
    Ok(LambShift {
        im: pv / (2.0 * PI),
        re: 0.5 * channel.weight(lead, energy),
        lorentz_residue: res_l.norm(),
        matsubara_sum: sum.norm(),
        bound: 0.5 * channel.weight(lead, energy) + combined.norm() + sum.norm(),
        matsubara_terms: terms,
        near_pole: PI - beta_delta < 1e-3,
    })
}

/// One line of the Lamb-shift magnitude report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambShiftBound {
    pub energy: f64,
    pub channel: Channel,
    pub im: f64,
    pub re: f64,
    /// `|Im G| / |Re G|`, infinite when `Re G` vanishes exactly.
    pub ratio: f64,
    /// Right-hand side of `|Im G| <= |Re G| + |Lorentz residue| + |Matsubara sum|`.
    pub bound: f64,
    pub near_pole: bool,
}

/// Compares the Lamb shift with the dissipative rates at each energy, for
/// both channels.
pub fn lamb_shift_bound_report(lead: &LeadParams, energies: &[f64]) -> Result<Vec<LambShiftBound>> {
    let mut out = Vec::with_capacity(2 * energies.len());
    for &e in energies {
        for channel in [Channel::Out, Channel::In] {
            let v = lamb_shift_im(lead, channel, e)?;
            let ratio = if v.re == 0.0 { f64::INFINITY } else { v.im.abs() / v.re.abs() };
            out.push(LambShiftBound {
                energy: e,
                channel,
                im: v.im,
                re: v.re,
                ratio,
                bound: v.bound,
                near_pole: v.near_pole,
            });
        }
    }
    Ok(out)
}

/// Secular-approximation check `Gamma_nu / (2 max(|mu_tilde|, omega))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularReport {
    /// Per lead, `Gamma / (2 max(|mu_tilde|, omega))`; used for pass/fail.
    pub ratios: Vec<f64>,
    /// Per lead, `Gamma / max(|mu_tilde|, omega)`.
    pub strict_ratios: Vec<f64>,
    pub threshold: f64,
    pub pass: bool,
}

pub fn secular_validity(mu_tilde: f64, omega: f64, leads: &[LeadParams], threshold: f64) -> Result<SecularReport> {
    let scale = mu_tilde.abs().max(omega);
    if !(scale > 0.0) {
        return Err(Error::UndefinedSecularBound);
    }
    let strict_ratios: Vec<f64> = leads.iter().map(|l| l.gamma_rate / scale).collect();
    let ratios: Vec<f64> = strict_ratios.iter().map(|r| 0.5 * r).collect();
    let pass = ratios.iter().all(|&r| r < threshold);
    Ok(SecularReport { ratios, strict_ratios, threshold, pass })
}
