//! Runtime checks of the five bootstrap bounds, reported as margins
//! (`bound - value`; for two-sided bands the smaller of both sides).

use super::norms::{full_map_sobolev_sq, half_norm_from_sq, vector_sobolev_sq};
use crate::grid::{GridSpec, ScalarField, VectorField4};
use crate::initial_data::InitialDataBundle;
use crate::integrator::{Evaluation, Model};
use crate::kinematics::{a3_quadratic_form, FlowMapState};

pub const F_CEILING: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapReport {
    /// `[f, eta H^3.5, d_tau^a v, J band, a^3 band]`
    pub margins: [f64; 5],
}

impl BootstrapReport {
    pub fn flags(&self) -> [bool; 5] {
        self.margins.map(|m| m >= 0.0)
    }

    pub fn all_ok(&self) -> bool {
        self.flags().iter().all(|x| *x)
    }
}

/// `H^{3.5}` surrogate of the full map.
pub fn eta_h35(grid: &GridSpec, eta: &VectorField4) -> f64 {
    half_norm_from_sq(full_map_sobolev_sq(grid, eta, 3), full_map_sobolev_sq(grid, eta, 4))
}

/// `||v||_{H^3}` and the `H^{2.5}` surrogate of `d_tau v`.
pub fn velocity_norms(grid: &GridSpec, v: &VectorField4, accel: &VectorField4) -> [f64; 2] {
    [
        vector_sobolev_sq(grid, v, 3).sqrt(),
        half_norm_from_sq(vector_sobolev_sq(grid, accel, 2), vector_sobolev_sq(grid, accel, 3)),
    ]
}

/// Margin of `f <= 1/8`.
pub fn f_margin(f: &[f64]) -> f64 {
    F_CEILING - f.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Margin of `v0_ring - 1/2 <= J <= v0_ring + 1/2`.
pub fn j_margin(j: &[f64], v0_ring: &[f64]) -> f64 {
    j.iter()
        .zip(v0_ring)
        .map(|(j, v0)| (j - (v0 - 0.5)).min((v0 + 0.5) - j))
        .fold(f64::INFINITY, f64::min)
}

/// Margin of `1/4 + t <= Q <= 2 + t` with `t = (v1_ring)^2 + (v2_ring)^2`.
pub fn a3_margin(q: &[f64], tangential_sq: &[f64]) -> f64 {
    q.iter()
        .zip(tangential_sq)
        .map(|(q, t)| (q - (0.25 + t)).min((2.0 + t) - q))
        .fold(f64::INFINITY, f64::min)
}

/// Reference values frozen on the initial slice.
#[derive(Debug, Clone)]
pub struct BootstrapMonitor {
    v0_ring: ScalarField,
    tangential_sq: ScalarField,
    eta_h35_ring: f64,
    velocity_ring: [f64; 2],
}

impl BootstrapMonitor {
    pub fn new(model: &Model, data: &InitialDataBundle, flow: &FlowMapState, eval: &Evaluation) -> Self {
        let g = &model.grid;
        let reference: VectorField4 = std::array::from_fn(|_| g.zeros());
        Self {
            v0_ring: data.v0.clone(),
            tangential_sq: (0..g.len())
                .map(|p| data.v_spatial[0][p].powi(2) + data.v_spatial[1][p].powi(2))
                .collect(),
            eta_h35_ring: eta_h35(g, &reference),
            velocity_ring: velocity_norms(g, &flow.v, &eval.accel),
        }
    }

    pub fn check(&self, model: &Model, flow: &FlowMapState, eval: &Evaluation) -> BootstrapReport {
        let g = &model.grid;
        let vn = velocity_norms(g, &flow.v, &eval.accel);
        let v_margin = (0..2)
            .map(|a| self.velocity_ring[a] + 1.0 - vn[a])
            .fold(f64::INFINITY, f64::min);
        BootstrapReport {
            margins: [
                f_margin(&eval.f),
                2.0 * self.eta_h35_ring + 1.0 - eta_h35(g, &flow.eta),
                v_margin,
                j_margin(&eval.mats.j, &self.v0_ring),
                a3_margin(&a3_quadratic_form(&eval.mats), &self.tangential_sq),
            ],
        }
    }
}
