//! High-order energies built on the positive metric `h`.

use super::norms::{derivative, tangential_indices};
use super::stack::TimeDerivativeStack;
use crate::error::Result;
use crate::grid::VectorField4;
use crate::integrator::Model;
use crate::operators::{eta_grad, grad_inner_h, inner_h, metric_h};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// `E_p` for `p = 0..=4`; `None` where the truncation skipped it.
    pub e_p: Vec<Option<f64>>,
    pub total: f64,
    /// Every integrand sample was non-negative.
    pub positive: bool,
    /// Smallest integrand sample seen.
    pub min_integrand: f64,
    pub notes: Vec<String>,
}

/// `E_p` and the smallest pointwise integrand.
pub fn energy_p(model: &Model, stack: &TimeDerivativeStack, p: usize) -> Result<(f64, f64)> {
    let g = &model.grid;
    let n = g.len();
    let e = stack.center_eval();
    let flow = stack.center_flow();
    let metric = metric_h(&flow.v)?;
    let m = 4 - p;
    let x = stack.eta_dtau(2 * p)?;
    let xt = stack.eta_dtau(2 * p + 1)?;
    let jk = stack.j_dtau(2 * p)?;
    let fr = &model.f_ring;
    let (f, j) = (&e.f, &e.mats.j);

    let mut integrand = vec![0.0; n];
    let mut min_i = f64::INFINITY;
    for idx in tangential_indices(m) {
        let dx: VectorField4 = std::array::from_fn(|mu| derivative(g, &x[mu], idx));
        let dxt: VectorField4 = std::array::from_fn(|mu| derivative(g, &xt[mu], idx));
        let dj = derivative(g, &jk, idx);
        let grad = eta_grad(g, &e.mats.a, &dx, &dxt);
        for q in 0..n {
            let one_minus = 1.0 - f[q];
            let xtq = [dxt[0][q], dxt[1][q], dxt[2][q], dxt[3][q]];
            let kinetic = fr[q] / (one_minus * one_minus) * inner_h(&metric.h[q], &xtq, &xtq);
            let gradient = fr[q] * fr[q] / (j[q] * one_minus * one_minus)
                * grad_inner_h(&metric.h[q], &metric.h_inv[q], &grad[q], &grad[q]);
            let compress = fr[q] * fr[q] * (1.0 + f[q]) / one_minus.powi(3) / j[q].powi(3) * dj[q] * dj[q];
            let local = kinetic + gradient + compress;
            min_i = min_i.min(kinetic).min(gradient).min(compress);
            integrand[q] += 0.5 * local;
        }
    }
    Ok((g.integrate(&integrand), min_i))
}

/// `E = sum_p E_p` over `p <= p_max`; higher `p` are reported as skipped.
pub fn energy(model: &Model, stack: &TimeDerivativeStack, p_max: usize) -> Result<EnergyReport> {
    let mut e_p = vec![None; 5];
    let mut notes = Vec::new();
    let mut total = 0.0;
    let mut min_i = f64::INFINITY;
    for (p, slot) in e_p.iter_mut().enumerate() {
        if p > p_max {
            notes.push(format!("E_{p} skipped: truncated at p_max = {p_max}"));
            continue;
        }
        let (v, m) = energy_p(model, stack, p)?;
        *slot = Some(v);
        total += v;
        min_i = min_i.min(m);
    }
    // Rounding in the metric contraction may leave tiny negative samples.
    let positive = min_i >= -1e-14 * total.abs().max(f64::MIN_POSITIVE);
    Ok(EnergyReport {
        e_p,
        total,
        positive,
        min_integrand: min_i,
        notes,
    })
}
