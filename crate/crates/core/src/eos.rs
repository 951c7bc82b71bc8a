//! Polytropic equation of state `p = rho^gamma` expressed through the number density.

use crate::error::{Error, Result};

/// Guard kept between an admissible density and the causality endpoint.
pub const ADMISSIBILITY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eos {
    pub gamma: f64,
    pub guard: f64,
}

impl Eos {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!(
                "gamma = {gamma}: the exponent must exceed 1 (gamma = 1 is the excluded linear case)"
            )));
        }
        Ok(Self {
            gamma,
            guard: ADMISSIBILITY_GUARD,
        })
    }

    /// Largest admissible value of `n^(gamma-1)`.
    pub fn bound(&self) -> f64 {
        1.0 / (self.gamma + 1.0)
    }

    /// Supremum of admissible densities (`1/3` for `gamma = 2`).
    pub fn n_max(&self) -> f64 {
        self.bound().powf(1.0 / (self.gamma - 1.0))
    }

    pub fn check(&self, n: f64) -> Result<()> {
        if !(n >= 0.0) || n.powf(self.gamma - 1.0) >= self.bound() - self.guard {
            return Err(Error::Domain(format!(
                "density n = {n} outside the admissible range 0 <= n^(gamma-1) < 1/(gamma+1)"
            )));
        }
        Ok(())
    }

    /// `rho(n) = n (1 - n^(gamma-1))^(1/(1-gamma))`, no range check.
    pub fn rho_raw(&self, n: f64) -> f64 {
        let g = self.gamma;
        n * (1.0 - n.powf(g - 1.0)).powf(1.0 / (1.0 - g))
    }

    pub fn sound_speed_sq_raw(&self, n: f64) -> f64 {
        let q = n.powf(self.gamma - 1.0);
        self.gamma * q / (1.0 - q)
    }

    pub fn enthalpy_raw(&self, n: f64) -> f64 {
        let g = self.gamma;
        (1.0 - n.powf(g - 1.0)).powf(-g / (g - 1.0))
    }

    /// `ds/dn`, finite at `n = 0` only for `gamma >= 2`.
    pub fn enthalpy_derivative_raw(&self, n: f64) -> f64 {
        let g = self.gamma;
        let q = n.powf(g - 1.0);
        let pre = if g == 2.0 { 2.0 } else { g * n.powf(g - 2.0) };
        pre * (1.0 - q).powf(-(2.0 * g - 1.0) / (g - 1.0))
    }

    pub fn rho_of_n(&self, n: f64) -> Result<f64> {
        self.check(n)?;
        Ok(self.rho_raw(n))
    }

    pub fn pressure_of_rho(&self, rho: f64) -> f64 {
        rho.powf(self.gamma)
    }

    pub fn sound_speed_sq(&self, n: f64) -> Result<f64> {
        self.check(n)?;
        Ok(self.sound_speed_sq_raw(n))
    }

    pub fn enthalpy_s(&self, n: f64) -> Result<f64> {
        self.check(n)?;
        Ok(self.enthalpy_raw(n))
    }

    /// `S = s(f)` for the Lagrangian density `f`.
    pub fn enthalpy_s_of_f(&self, f: f64) -> Result<f64> {
        self.enthalpy_s(f)
    }
}

/// Number of extra tau-derivatives in the general-gamma norm: the smallest
/// non-negative integer `p0` with `1 + 1/(gamma-1) - p0 <= 2`.
pub fn p_zero_index(gamma: f64) -> Result<usize> {
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("gamma = {gamma} must exceed 1")));
    }
    let x = 1.0 / (gamma - 1.0) - 1.0;
    Ok((x - 1e-12).ceil().max(0.0) as usize)
}
