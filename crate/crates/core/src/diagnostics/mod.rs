//! Norms, energies, vorticity diagnostics, bootstrap monitors and lemma checks.

pub mod bootstrap;
pub mod energy;
pub mod jet;
pub mod lemmas;
pub mod norm_s;
pub mod norms;
pub mod stack;
pub mod vorticity;

use crate::cli_io::snapshot::Snapshot;
use crate::error::Result;
use crate::initial_data::InitialDataBundle;
use crate::integrator::Model;
use crate::kinematics::FlowMapState;
use energy::EnergyReport;
use norm_s::{RunningSup, SBlocks, SGammaBlocks};
use stack::TimeDerivativeStack;
use std::collections::BTreeMap;
use vorticity::VorticityReport;

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    /// `(tag, k) -> ||field||_{H^k}`; tags `eta` (full map), `v`, `f`.
    pub sobolev: BTreeMap<(String, usize), f64>,
    /// `(tag, k) -> weighted H^1 norm with weight d^k`.
    pub weighted: BTreeMap<(String, u32), f64>,
    pub s_norm: f64,
    pub s_gamma: Option<f64>,
    pub p_max_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceReport {
    pub tau: f64,
    pub blocks: SBlocks,
    pub gamma_blocks: SGammaBlocks,
    pub norms: NormReport,
    pub energy: EnergyReport,
    pub vorticity: VorticityReport,
}

/// Evaluates a series of slices in order, keeping the running suprema.
#[derive(Debug, Clone)]
pub struct SeriesDiagnostics {
    pub p_max: usize,
    /// Fixed tau spacing of the derivative stacks; `None` uses the CFL default.
    pub tau_fd_step: Option<f64>,
    pub cfl_safety: f64,
    s_sup: RunningSup,
    g_sup: RunningSup,
}

impl SeriesDiagnostics {
    pub fn new(p_max: usize, tau_fd_step: Option<f64>, cfl_safety: f64) -> Self {
        Self {
            p_max,
            tau_fd_step,
            cfl_safety,
            s_sup: RunningSup::default(),
            g_sup: RunningSup::default(),
        }
    }

    pub fn stack(&self, model: &Model, flow: &FlowMapState) -> Result<TimeDerivativeStack> {
        let dt = match self.tau_fd_step {
            Some(dt) => dt,
            None => TimeDerivativeStack::default_dt(model, &model.evaluate(flow)?, self.cfl_safety),
        };
        TimeDerivativeStack::evolve(model, flow, TimeDerivativeStack::half_width(self.p_max), dt)
    }

    pub fn process(&mut self, model: &Model, flow: &FlowMapState) -> Result<SliceReport> {
        let stack = self.stack(model, flow)?;
        self.process_stack(model, &stack)
    }

    pub fn process_stack(&mut self, model: &Model, stack: &TimeDerivativeStack) -> Result<SliceReport> {
        let g = &model.grid;
        let blocks = norm_s::s_blocks(model, stack, self.p_max)?;
        let gamma_blocks = norm_s::s_gamma_blocks(model, stack, self.p_max)?;
        let energy = energy::energy(model, stack, self.p_max)?;
        let vorticity = vorticity::vorticity_diagnostics(model, stack)?;
        let flow = stack.center_flow();
        let mut sobolev = BTreeMap::new();
        let mut weighted = BTreeMap::new();
        for k in 0..=4 {
            sobolev.insert(("eta".into(), k), norms::full_map_sobolev_sq(g, &flow.eta, k).sqrt());
            sobolev.insert(("v".into(), k), norms::vector_sobolev_sq(g, &flow.v, k).sqrt());
            sobolev.insert(("f".into(), k), norms::sobolev_norm(g, &stack.center_eval().f, k));
        }
        for k in [1, 2] {
            weighted.insert(("F_ring".into(), k), norms::weighted_h1_norm(g, &model.f_ring, k));
        }
        let s_norm = self.s_sup.push(&blocks.as_array());
        let s_gamma = Some(self.g_sup.push(&gamma_blocks.lines()));
        Ok(SliceReport {
            tau: flow.tau,
            blocks,
            gamma_blocks,
            norms: NormReport {
                sobolev,
                weighted,
                s_norm,
                s_gamma,
                p_max_used: self.p_max,
            },
            energy,
            vorticity,
        })
    }
}

/// Slice record extended with the tau-derivative fields used by the norm and
/// the energy: `dtau{k}_eta` for `k <= 2 p_max + 1` and `dtau{2p}_J`,
/// `dtau{2p}_jinv2` for `p <= p_max`.
pub fn derivative_snapshot(
    model: &Model,
    data: &InitialDataBundle,
    stack: &TimeDerivativeStack,
    p_max: usize,
) -> Result<Snapshot> {
    let mut s = Snapshot::from_state(&model.grid, stack.center_flow(), data);
    for k in 0..=2 * p_max + 1 {
        s.push(&format!("dtau{k}_eta"), stack.eta_dtau(k)?.to_vec());
    }
    for p in 0..=p_max {
        s.push(&format!("dtau{}_J", 2 * p), vec![stack.j_dtau(2 * p)?]);
        s.push(&format!("dtau{}_jinv2", 2 * p), vec![stack.jinv2_dtau(2 * p)?]);
    }
    Ok(s)
}
