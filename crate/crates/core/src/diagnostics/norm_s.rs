//! The high-order square norm and its general-gamma variant, truncated at `p_max`
//! tau-pairs, with running suprema over the emitted slices.

use super::norms::{for_each_derivative, full_map_sobolev_sq, tangential_indices, derivative, vector_sobolev_sq};
use super::stack::TimeDerivativeStack;
use crate::eos::p_zero_index;
use crate::error::Result;
use crate::grid::{GridSpec, ScalarField, VectorField4};
use crate::integrator::Model;
use crate::operators::eta_vort;

/// Per-slice values of the five lines of the norm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SBlocks {
    /// `sum_p ||d_tau^{2p} eta||^2_{H^{4-p}}`
    pub eta: f64,
    /// `sum_p ||F d_tau^{2p}(J^-2)||^2_{H^{4-p}}`, `p <= 3`
    pub jinv2: f64,
    /// `sum_p ||F d_tau^{2p} dbar^{4-p} D eta||^2 + ||sqrt F d_tau^{2p+1} dbar^{4-p} eta||^2`
    pub top: f64,
    /// `||vort v||^2_{H^3}`
    pub vort: f64,
    /// `||F dbar^4 vort v||^2`
    pub vort_top: f64,
}

impl SBlocks {
    pub fn as_array(&self) -> [f64; 5] {
        [self.eta, self.jinv2, self.top, self.vort, self.vort_top]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

/// `D X` as sixteen fields: `d_tau X^mu` then `d_k X^mu` for `k = 1..3`.
pub fn spacetime_gradient(grid: &GridSpec, x: &VectorField4, x_tau: &VectorField4) -> Vec<ScalarField> {
    let mut out = x_tau.to_vec();
    for k in 1..4 {
        for c in x {
            out.push(grid.partial(c, k));
        }
    }
    out
}

/// `sum over tangential multi-indices of order m of int weight |dbar^i X|^2`.
fn weighted_tangential_sq(grid: &GridSpec, comps: &[ScalarField], m: usize, weight: &[f64]) -> f64 {
    let mut s = 0.0;
    for idx in tangential_indices(m) {
        for c in comps {
            let d = derivative(grid, c, idx);
            let integrand: ScalarField = d.iter().zip(weight).map(|(x, w)| w * x * x).collect();
            s += grid.integrate(&integrand);
        }
    }
    s
}

fn mat_fields(v: &[crate::mat4::Mat4]) -> Vec<ScalarField> {
    let mut out = Vec::with_capacity(16);
    for mu in 0..4 {
        for nu in 0..4 {
            out.push(v.iter().map(|m| m[mu][nu]).collect());
        }
    }
    out
}

fn weighted(f: &[f64], w: &[f64]) -> ScalarField {
    f.iter().zip(w).map(|(a, b)| a * b).collect()
}

/// First three lines, shared with the general-gamma norm.
fn base_blocks(model: &Model, stack: &TimeDerivativeStack, p_max: usize) -> Result<[f64; 3]> {
    let g = &model.grid;
    let fr = &model.f_ring;
    let f2: ScalarField = fr.iter().map(|x| x * x).collect();
    let mut eta = 0.0;
    let mut jinv2 = 0.0;
    let mut top = 0.0;
    for p in 0..=p_max {
        let x = stack.eta_dtau(2 * p)?;
        let xt = stack.eta_dtau(2 * p + 1)?;
        eta += if p == 0 {
            full_map_sobolev_sq(g, &x, 4 - p)
        } else {
            vector_sobolev_sq(g, &x, 4 - p)
        };
        if p <= 3 {
            let j = stack.jinv2_dtau(2 * p)?;
            jinv2 += vector_sobolev_sq(g, &[weighted(&j, fr)], 4 - p);
        }
        top += weighted_tangential_sq(g, &spacetime_gradient(g, &x, &xt), 4 - p, &f2);
        top += weighted_tangential_sq(g, &xt, 4 - p, fr);
    }
    Ok([eta, jinv2, top])
}

/// Values of the five lines on the middle slice of `stack`.
pub fn s_blocks(model: &Model, stack: &TimeDerivativeStack, p_max: usize) -> Result<SBlocks> {
    let g = &model.grid;
    let [eta, jinv2, top] = base_blocks(model, stack, p_max)?;
    let e = stack.center_eval();
    let flow = stack.center_flow();
    let vort = mat_fields(&eta_vort(g, &e.mats.a, &flow.v, &e.accel));
    let vort_sq = vector_sobolev_sq(g, &vort, 3);
    let f2: ScalarField = model.f_ring.iter().map(|x| x * x).collect();
    let vort_top = weighted_tangential_sq(g, &vort, 4, &f2);
    Ok(SBlocks {
        eta,
        jinv2,
        top,
        vort: vort_sq,
        vort_top,
    })
}

/// Per-slice values of the general-gamma norm: the three shared lines and one
/// line per `p = 0..=p0` of the weighted block.
#[derive(Debug, Clone, PartialEq)]
pub struct SGammaBlocks {
    pub base: [f64; 3],
    pub extra: Vec<f64>,
}

impl SGammaBlocks {
    pub fn lines(&self) -> Vec<f64> {
        self.base.iter().chain(&self.extra).copied().collect()
    }
}

/// Exponent of `F` in the weighted block at index `p` (`sqrt F` raised to
/// `1 + 1/(gamma - 1) - p`, squared in the norm).
pub fn extra_weight_exponent(gamma: f64, p: usize) -> f64 {
    1.0 + 1.0 / (gamma - 1.0) - p as f64
}

/// Highest tau-order of `D eta` used in the weighted block at index `p`:
/// the full norm uses `8 + p0 - p`, truncated here to `2 p_max + p0 - p`.
pub fn extra_block_order(p_max: usize, p0: usize, p: usize) -> usize {
    2 * p_max + p0 - p
}

pub fn s_gamma_blocks(model: &Model, stack: &TimeDerivativeStack, p_max: usize) -> Result<SGammaBlocks> {
    let g = &model.grid;
    let gamma = model.eos.gamma;
    let p0 = p_zero_index(gamma)?;
    let base = base_blocks(model, stack, p_max)?;
    let mut extra = Vec::with_capacity(p0 + 1);
    for p in 0..=p0 {
        let k = extra_block_order(p_max, p0, p);
        let w: ScalarField = model.f_ring.iter().map(|f| f.powf(extra_weight_exponent(gamma, p))).collect();
        let x = stack.eta_dtau(k)?;
        let xt = stack.eta_dtau(k + 1)?;
        let mut s = 0.0;
        for c in spacetime_gradient(g, &x, &xt) {
            s += g.integrate(&weighted(&c, &weighted(&c, &w)));
        }
        extra.push(s);
    }
    Ok(SGammaBlocks { base, extra })
}

/// Running supremum of a norm taken line by line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunningSup {
    sup: Vec<f64>,
}

impl RunningSup {
    /// Feeds one slice and returns the current value of the norm.
    pub fn push(&mut self, lines: &[f64]) -> f64 {
        if self.sup.is_empty() {
            self.sup = vec![0.0; lines.len()];
        }
        for (s, l) in self.sup.iter_mut().zip(lines) {
            *s = s.max(*l);
        }
        self.value()
    }

    pub fn value(&self) -> f64 {
        self.sup.iter().sum()
    }
}

/// Squared `H^k` norm over all multi-indices, visiting each once; used by the
/// tests to cross-check the tangential sums.
pub fn tangential_part_sq(grid: &GridSpec, f: &[f64], m: usize) -> f64 {
    let mut s = 0.0;
    for_each_derivative(grid, f, m, |idx, d| {
        if idx[2] == 0 && idx[0] + idx[1] == m {
            s += grid.l2_sq(d);
        }
    });
    s
}
