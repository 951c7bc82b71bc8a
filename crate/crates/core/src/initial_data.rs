//! Physical vacuum initial data `(n, v, F = n v0)` on the material grid.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField4};
use std::f64::consts::PI;

/// Smallest boundary slope of `F` accepted as a physical vacuum.
pub const VACUUM_RATE_MIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataBundle {
    pub n_ring: ScalarField,
    pub v_spatial: [ScalarField; 3],
    pub v0: ScalarField,
    pub f_ring: ScalarField,
    pub d_f3_boundary_min: f64,
    /// Density amplitude actually used after the smallness rescaling.
    pub eps_effective: f64,
}

impl InitialDataBundle {
    /// Builds a bundle from an arbitrary density and spatial velocity.
    pub fn from_fields(grid: &GridSpec, n_ring: ScalarField, v_spatial: [ScalarField; 3]) -> Result<Self> {
        if n_ring.len() != grid.len() || v_spatial.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Domain("initial fields do not match the grid".into()));
        }
        if n_ring.iter().chain(v_spatial.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("initial data".into()));
        }
        let v0 = derive_v0(&v_spatial);
        let f_ring: ScalarField = n_ring.iter().zip(&v0).map(|(n, v)| n * v).collect();
        let d_f3_boundary_min = boundary_slope_min(grid, &f_ring);
        let eps_effective = n_ring.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            n_ring,
            v_spatial,
            v0,
            f_ring,
            d_f3_boundary_min,
            eps_effective,
        })
    }

    /// Four-velocity `(v0, v1, v2, v3)`.
    pub fn velocity(&self) -> VectorField4 {
        [
            self.v0.clone(),
            self.v_spatial[0].clone(),
            self.v_spatial[1].clone(),
            self.v_spatial[2].clone(),
        ]
    }
}

/// `v0 = sqrt(1 + |v|^2)` pointwise.
pub fn derive_v0(v_spatial: &[ScalarField; 3]) -> ScalarField {
    (0..v_spatial[0].len())
        .map(|p| (1.0 + v_spatial.iter().map(|c| c[p] * c[p]).sum::<f64>()).sqrt())
        .collect()
}

fn boundary_slope_min(grid: &GridSpec, f: &[f64]) -> f64 {
    let d3 = grid.partial_vertical(f);
    grid.face(&d3, false)
        .into_iter()
        .chain(grid.face(&d3, true))
        .map(f64::abs)
        .fold(f64::INFINITY, f64::min)
}

/// Parabolic vacuum profile `eps 4 y3 (1 - y3) (1 + pert cos 2pi y1 cos 2pi y2)` with
/// a divergence-free tangential velocity.
pub fn make_physical_vacuum_data(
    grid: &GridSpec,
    eps: f64,
    pert_amp: f64,
    velocity_amp: f64,
) -> Result<InitialDataBundle> {
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return Err(Error::Domain(format!("eps = {eps} must lie in (0, 1/3)")));
    }
    if !(pert_amp.abs() < 0.5) {
        return Err(Error::Domain(format!("|pert_amp| = {} must be below 1/2", pert_amp.abs())));
    }
    if !(velocity_amp >= 0.0 && velocity_amp.is_finite()) {
        return Err(Error::Domain(format!("velocity_amp = {velocity_amp} must be non-negative")));
    }
    let shape = grid.sample(|y| {
        4.0 * y[2] * (1.0 - y[2]) * (1.0 + pert_amp * (2.0 * PI * y[0]).cos() * (2.0 * PI * y[1]).cos())
    });
    let v_spatial = [
        grid.sample(|y| velocity_amp * (2.0 * PI * y[1]).sin()),
        grid.sample(|y| velocity_amp * (2.0 * PI * y[0]).sin()),
        grid.zeros(),
    ];
    let v0_max = derive_v0(&v_spatial).into_iter().fold(1.0, f64::max);
    let shape_max = shape.iter().cloned().fold(0.0, f64::max);
    let bound = eps / v0_max;
    let amp = if eps * shape_max > bound * (1.0 + 1e-14) {
        bound / shape_max
    } else {
        eps
    };
    let n_ring = shape.iter().map(|s| amp * s).collect();
    let mut b = InitialDataBundle::from_fields(grid, n_ring, v_spatial)?;
    b.eps_effective = amp;
    Ok(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumReport {
    pub c1: f64,
    pub c2: f64,
    pub sup_n: f64,
    pub sup_n_ok: bool,
    pub eq125_ok: bool,
    pub d_f3_min: f64,
    pub physical_vacuum_ok: bool,
}

impl VacuumReport {
    pub fn ok(&self) -> bool {
        self.sup_n_ok && self.eq125_ok && self.physical_vacuum_ok && self.c1 > 0.0
    }
}

/// Checks the vacuum rate bounds, the density ceiling and the smallness bound
/// `sup n <= eps / sup v0`. On the faces `n/d` is replaced by its limit `|d_3 n|`.
pub fn validate_physical_vacuum(bundle: &InitialDataBundle, grid: &GridSpec, eps: f64) -> VacuumReport {
    let d3 = grid.partial_vertical(&bundle.n_ring);
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    for p in 0..grid.len() {
        let y3 = grid.coords(p)[2];
        let d = y3.min(1.0 - y3);
        let r = if d == 0.0 { d3[p].abs() } else { bundle.n_ring[p] / d };
        c1 = c1.min(r);
        c2 = c2.max(r);
    }
    let sup_n = bundle.n_ring.iter().cloned().fold(0.0, f64::max);
    let v0_max = bundle.v0.iter().cloned().fold(1.0, f64::max);
    let d_f3_min = boundary_slope_min(grid, &bundle.f_ring);
    VacuumReport {
        c1,
        c2,
        sup_n,
        sup_n_ok: sup_n < 1.0 / 3.0 && bundle.n_ring.iter().all(|n| *n >= 0.0),
        eq125_ok: sup_n <= eps / v0_max * (1.0 + 1e-12),
        d_f3_min,
        physical_vacuum_ok: d_f3_min > VACUUM_RATE_MIN,
    }
}
