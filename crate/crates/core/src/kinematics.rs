//! Change-of-variables matrices of the flow map.
//!
//! `M[K][nu] = d_K eta^nu` with `K = 0` the proper-time direction, so row 0 is
//! the four-velocity. `A = M^{-1}` is stored as `A[nu][K]`, `J = det M` and the
//! cofactor is `cof[alpha][K] = J A[alpha][K]`.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField4};
use crate::mat4::{self, Mat4, ETA};

/// Smallest admissible `|det M|` before the chart is declared broken.
pub const SINGULAR_THRESHOLD: f64 = 1e-10;

/// Flow map and four-velocity on a proper-time slice.
///
/// `eta` holds the displacement from the reference embedding `(0, y1, y2, y3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMapState {
    pub tau: f64,
    pub eta: VectorField4,
    pub v: VectorField4,
}

impl FlowMapState {
    /// Slice at `tau = 0`: zero displacement and the given velocity.
    pub fn initial(grid: &GridSpec, v: VectorField4) -> Self {
        Self {
            tau: 0.0,
            eta: std::array::from_fn(|_| grid.zeros()),
            v,
        }
    }

    /// Full map component `eta^mu` including the reference embedding.
    pub fn full_eta(&self, grid: &GridSpec, mu: usize) -> ScalarField {
        if mu == 0 {
            return self.eta[0].clone();
        }
        (0..grid.len())
            .map(|k| grid.coords(k)[mu - 1] + self.eta[mu][k])
            .collect()
    }

    /// `max |g(v, v) + 1|`.
    pub fn constraint_drift(&self) -> f64 {
        (0..self.v[0].len())
            .map(|k| (mat4::g_dot(&self.v_at(k), &self.v_at(k)) + 1.0).abs())
            .fold(0.0, f64::max)
    }

    #[inline]
    pub fn v_at(&self, k: usize) -> [f64; 4] {
        [self.v[0][k], self.v[1][k], self.v[2][k], self.v[3][k]]
    }
}

#[derive(Debug, Clone)]
pub struct KinematicMatrices {
    pub m: Vec<Mat4>,
    pub a: Vec<Mat4>,
    pub j: ScalarField,
    pub cof: Vec<Mat4>,
}

impl KinematicMatrices {
    fn from_m(m: Vec<Mat4>, grid: Option<&GridSpec>) -> Result<Self> {
        let n = m.len();
        let mut a = Vec::with_capacity(n);
        let mut j = Vec::with_capacity(n);
        let mut cof = Vec::with_capacity(n);
        let mut worst = (f64::INFINITY, 0usize);
        for (k, mk) in m.iter().enumerate() {
            let (d, adj) = mat4::det_adjugate(mk);
            if !d.is_finite() {
                return Err(Error::NonFinite("det M".into()));
            }
            if d.abs() < worst.0 {
                worst = (d.abs(), k);
            }
            a.push(mat4::scale(&adj, 1.0 / d));
            j.push(d);
            cof.push(adj);
        }
        if worst.0 < SINGULAR_THRESHOLD {
            let (i1, i2, i3) = grid.map(|g| g.unflatten(worst.1)).unwrap_or((worst.1, 0, 0));
            return Err(Error::SingularMap {
                i1,
                i2,
                i3,
                value: worst.0,
            });
        }
        Ok(Self { m, a, j, cof })
    }

    pub fn len(&self) -> usize {
        self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j.is_empty()
    }

    pub fn min_j(&self) -> f64 {
        self.j.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_j(&self) -> f64 {
        self.j.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max |M A - I|` over nodes.
    pub fn inverse_defect(&self) -> f64 {
        self.m
            .iter()
            .zip(&self.a)
            .map(|(m, a)| mat4::max_abs_diff(&mat4::mul(m, a), &mat4::IDENTITY))
            .fold(0.0, f64::max)
    }

    /// Entry field `A[nu][k]` over the grid.
    pub fn a_entry(&self, nu: usize, k: usize) -> ScalarField {
        self.a.iter().map(|a| a[nu][k]).collect()
    }

    pub fn cof_entry(&self, nu: usize, k: usize) -> ScalarField {
        self.cof.iter().map(|a| a[nu][k]).collect()
    }
}

/// Spatial gradient `D[k-1][nu] = d_k X^nu` for `k = 1, 2, 3`.
pub fn spatial_gradient(grid: &GridSpec, x: &VectorField4) -> [VectorField4; 3] {
    std::array::from_fn(|k| std::array::from_fn(|nu| grid.partial(&x[nu], k + 1)))
}

pub fn compute_matrices(state: &FlowMapState, grid: &GridSpec) -> Result<KinematicMatrices> {
    let d = spatial_gradient(grid, &state.eta);
    let m = (0..grid.len())
        .map(|p| {
            let mut mk = mat4::ZERO;
            for nu in 0..4 {
                mk[0][nu] = state.v[nu][p];
                for k in 1..4 {
                    mk[k][nu] = d[k - 1][nu][p] + if k == nu { 1.0 } else { 0.0 };
                }
            }
            mk
        })
        .collect();
    KinematicMatrices::from_m(m, Some(grid))
}

/// Closed-form matrices on the initial slice where the map is the identity in space.
pub fn initial_matrices(v: &VectorField4) -> Result<KinematicMatrices> {
    let n = v[0].len();
    let mut m = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut cof = Vec::with_capacity(n);
    let mut j = Vec::with_capacity(n);
    for p in 0..n {
        let v0 = v[0][p];
        if !(v0 > 0.0) {
            return Err(Error::Domain(format!("v0 = {v0} must be positive")));
        }
        let mut mk = mat4::IDENTITY;
        let mut ak = mat4::IDENTITY;
        for nu in 0..4 {
            mk[0][nu] = v[nu][p];
        }
        ak[0][0] = 1.0 / v0;
        for i in 1..4 {
            ak[0][i] = -v[i][p] / v0;
        }
        m.push(mk);
        cof.push(mat4::scale(&ak, v0));
        a.push(ak);
        j.push(v0);
    }
    Ok(KinematicMatrices { m, a, j, cof })
}

/// Direction of differentiation of the matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Tau,
    Space(usize),
}

/// Derivative of `M` along `dir`. The tau-derivative needs the acceleration
/// `d_tau v`; spatial derivatives are stencils of `v` and of `D eta`.
pub fn m_derivative(
    state: &FlowMapState,
    grid: &GridSpec,
    dir: Direction,
    accel: Option<&VectorField4>,
) -> Vec<Mat4> {
    let rows: [VectorField4; 4] = match dir {
        Direction::Tau => {
            let acc = accel.expect("tau-derivative of M needs the acceleration");
            let dv = spatial_gradient(grid, &state.v);
            let [d1, d2, d3] = dv;
            [acc.clone(), d1, d2, d3]
        }
        Direction::Space(l) => {
            let dl_v = std::array::from_fn(|nu| grid.partial(&state.v[nu], l));
            let dl_eta: VectorField4 = std::array::from_fn(|nu| grid.partial(&state.eta[nu], l));
            let [d1, d2, d3] = spatial_gradient(grid, &dl_eta);
            [dl_v, d1, d2, d3]
        }
    };
    (0..grid.len())
        .map(|p| std::array::from_fn(|k| std::array::from_fn(|nu| rows[k][nu][p])))
        .collect()
}

/// `dA = -A (dM) A`.
pub fn differentiate_a(mats: &KinematicMatrices, dm: &[Mat4]) -> Vec<Mat4> {
    mats.a
        .iter()
        .zip(dm)
        .map(|(a, d)| mat4::scale(&mat4::mul(&mat4::mul(a, d), a), -1.0))
        .collect()
}

/// `dJ = J A_alpha^K dM_K^alpha` for any derivative `dM`.
pub fn determinant_rate(mats: &KinematicMatrices, dm: &[Mat4]) -> ScalarField {
    mats.a
        .iter()
        .zip(dm)
        .zip(&mats.j)
        .map(|((a, d), j)| j * mat4::trace(&mat4::mul(a, d)))
        .collect()
}

/// `d_tau J`; `dm_tau` is the tau-derivative of `M` built with the acceleration.
pub fn jacobian_rate(mats: &KinematicMatrices, dm_tau: &[Mat4]) -> ScalarField {
    determinant_rate(mats, dm_tau)
}

/// Per-column max-norm of `sum_K d_K cof[alpha][K]`.
///
/// The `K = 0` term uses the cofactor derivative identity along `tau`, where the
/// `L = 0` contributions cancel, so only spatial gradients of `v` enter.
pub fn piola_residual_columns(
    mats: &KinematicMatrices,
    state: &FlowMapState,
    grid: &GridSpec,
) -> [f64; 4] {
    let dv = spatial_gradient(grid, &state.v);
    let mut out = [0.0; 4];
    for (alpha, slot) in out.iter_mut().enumerate() {
        let mut r = grid.zeros();
        for k in 1..4 {
            let dk = grid.partial(&mats.cof_entry(alpha, k), k);
            r.iter_mut().zip(&dk).for_each(|(x, y)| *x += y);
        }
        for (p, rp) in r.iter_mut().enumerate() {
            let a = &mats.a[p];
            let mut t = 0.0;
            for l in 1..4 {
                for beta in 0..4 {
                    t += dv[l - 1][beta][p] * (a[alpha][0] * a[beta][l] - a[alpha][l] * a[beta][0]);
                }
            }
            *rp += mats.j[p] * t;
        }
        *slot = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    }
    out
}

pub fn piola_residual(mats: &KinematicMatrices, state: &FlowMapState, grid: &GridSpec) -> f64 {
    piola_residual_columns(mats, state, grid)
        .into_iter()
        .fold(0.0, f64::max)
}

/// `g^{mu nu} cof[mu][3] cof[nu][3]` at every node.
pub fn a3_quadratic_form(mats: &KinematicMatrices) -> ScalarField {
    mats.cof
        .iter()
        .map(|c| (0..4).map(|mu| ETA[mu] * c[mu][3] * c[mu][3]).sum())
        .collect()
}

/// Smooth maps with known structure, used by the convergence checks.
pub mod test_maps {
    use super::*;
    use std::f64::consts::PI;

    /// Smooth nonlinear flow map at proper time `tau`: periodic in `y1, y2` and
    /// polynomial of degree at most four in `y3`.
    pub fn nonlinear(grid: &GridSpec, tau: f64) -> FlowMapState {
        let s1 = |y: [f64; 3]| (2.0 * PI * y[0]).sin();
        let c2 = |y: [f64; 3]| (2.0 * PI * y[1]).cos();
        let w = |y: [f64; 3]| -> [f64; 4] {
            [
                1.0 + 0.1 * s1(y),
                0.05 * c2(y) * y[2],
                0.04 * s1(y) * (1.0 - y[2] * y[2]),
                0.03 * s1(y) * c2(y),
            ]
        };
        let disp = |y: [f64; 3]| -> [f64; 4] {
            [
                0.0,
                0.02 * (2.0 * PI * (y[0] + y[1])).sin() * y[2],
                0.03 * s1(y) * y[2] * y[2],
                0.02 * c2(y) * y[2] * y[2] * (1.0 - y[2]),
            ]
        };
        let eta = std::array::from_fn(|mu| grid.sample(|y| disp(y)[mu] + tau * w(y)[mu]));
        let v = std::array::from_fn(|mu| grid.sample(|y| w(y)[mu]));
        FlowMapState { tau, eta, v }
    }
}
