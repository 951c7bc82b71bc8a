//! Method-of-lines evolution of `(eta, v)` by the transport form of the momentum
//! equation `d_tau(S v_mu) + A_mu^K d_K S = 0`, with `f = F / J` enforced
//! algebraically, plus residuals of the two alternative momentum forms.

use crate::cli_io::config::SimConfig;
use crate::diagnostics::bootstrap::{BootstrapMonitor, BootstrapReport};
use crate::eos::Eos;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField4};
use crate::initial_data::{make_physical_vacuum_data, InitialDataBundle};
use crate::kinematics::{
    compute_matrices, differentiate_a, m_derivative, spatial_gradient, Direction, FlowMapState,
    KinematicMatrices,
};
use crate::mat4::ETA;

/// Largest accepted change of `d_tau S` under one extra fixed-point sweep.
pub const IMPLICIT_TOL: f64 = 1e-10;

/// The evolution problem: grid, equation of state and the conserved weight `F`.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: GridSpec,
    pub eos: Eos,
    pub f_ring: ScalarField,
}

/// Everything derived from a flow-map slice in one right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub mats: KinematicMatrices,
    pub f: ScalarField,
    pub s: ScalarField,
    /// Acceleration `d_tau v^mu` (upper index).
    pub accel: VectorField4,
    /// `d_tau J`.
    pub jdot: ScalarField,
    /// `d_tau S`.
    pub sdot: ScalarField,
    /// `d_tau (S v_mu) = -A_mu^K d_K S` (lower index).
    pub w: VectorField4,
    /// Change of `d_tau S` under one extra sweep of the implicit coupling.
    pub implicit_residual: f64,
}

impl Evaluation {
    pub fn mass_residual(&self, f_ring: &[f64]) -> f64 {
        (0..self.f.len())
            .map(|p| (self.f[p] * self.mats.j[p] - f_ring[p]).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_f(&self) -> f64 {
        self.f.iter().cloned().fold(0.0, f64::max)
    }
}

impl Model {
    pub fn new(grid: GridSpec, eos: Eos, f_ring: ScalarField) -> Result<Self> {
        if f_ring.len() != grid.len() {
            return Err(Error::Domain("weight F does not match the grid".into()));
        }
        if eos.gamma < 2.0 {
            return Err(Error::Domain(format!(
                "evolution needs gamma >= 2 so that dS/df stays finite at the vacuum (gamma = {})",
                eos.gamma
            )));
        }
        Ok(Self { grid, eos, f_ring })
    }

    pub fn from_data(grid: GridSpec, eos: Eos, data: &InitialDataBundle) -> Result<Self> {
        Self::new(grid, eos, data.f_ring.clone())
    }

    /// Derived thermodynamics and acceleration of a slice.
    pub fn evaluate(&self, flow: &FlowMapState) -> Result<Evaluation> {
        let g = &self.grid;
        let mats = compute_matrices(flow, g)?;
        let n = g.len();
        let mut f = Vec::with_capacity(n);
        for p in 0..n {
            let fp = self.f_ring[p] / mats.j[p];
            if !fp.is_finite() {
                return Err(Error::NonFinite("f".into()));
            }
            self.eos.check(fp).map_err(|_| {
                let (i1, i2, i3) = g.unflatten(p);
                Error::Domain(format!("f = {fp} left the admissible range at node ({i1}, {i2}, {i3})"))
            })?;
            f.push(fp);
        }
        let s: ScalarField = f.iter().map(|x| self.eos.enthalpy_raw(*x)).collect();
        let ds: ScalarField = f.iter().map(|x| self.eos.enthalpy_derivative_raw(*x)).collect();
        let df: [ScalarField; 3] = std::array::from_fn(|k| g.partial(&f, k + 1));
        let dv = spatial_gradient(g, &flow.v);

        let mut accel: VectorField4 = std::array::from_fn(|_| vec![0.0; n]);
        let mut w: VectorField4 = std::array::from_fn(|_| vec![0.0; n]);
        let mut jdot = vec![0.0; n];
        let mut sdot = vec![0.0; n];
        let mut implicit = 0.0f64;
        for p in 0..n {
            let a = &mats.a[p];
            let v = flow.v_at(p);
            let vl = [-v[0], v[1], v[2], v[3]];
            let grad_s = [ds[p] * df[0][p], ds[p] * df[1][p], ds[p] * df[2][p]];
            // Spatial part of A_mu^K d_K S and of A_alpha^K d_K v^alpha.
            let r: [f64; 4] = std::array::from_fn(|mu| (0..3).map(|k| a[mu][k + 1] * grad_s[k]).sum());
            let div_s: f64 = (0..4)
                .map(|al| (0..3).map(|k| a[al][k + 1] * dv[k][al][p]).sum::<f64>())
                .sum();
            let inv_s = 1.0 / s[p];
            let c = ds[p] * f[p];
            // Acceleration is affine in q = d_tau S, and q depends on A_alpha^0 d_tau v^alpha.
            let e1: f64 = (0..4).map(|al| a[al][0] * v[al]).sum();
            let pp: f64 = (0..4).map(|al| ETA[al] * a[al][0] * a[al][0]).sum();
            let t: f64 = (0..4).map(|al| ETA[al] * a[al][0] * r[al]).sum();
            let q = c * (inv_s * t - div_s) / (1.0 - c * inv_s * (e1 + pp));
            let acc_low: [f64; 4] = std::array::from_fn(|mu| -inv_s * ((vl[mu] + a[mu][0]) * q + r[mu]));
            let x: f64 = (0..4).map(|al| a[al][0] * ETA[al] * acc_low[al]).sum();
            let q_next = -c * (x + div_s);
            implicit = implicit.max((q_next - q).abs());
            for mu in 0..4 {
                accel[mu][p] = ETA[mu] * acc_low[mu];
                w[mu][p] = -(a[mu][0] * q + r[mu]);
            }
            jdot[p] = mats.j[p] * (x + div_s);
            sdot[p] = q;
        }
        if accel.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("acceleration".into()));
        }
        Ok(Evaluation {
            mats,
            f,
            s,
            accel,
            jdot,
            sdot,
            w,
            implicit_residual: implicit,
        })
    }

    /// `(d_tau eta, d_tau v)`.
    pub fn rhs(&self, flow: &FlowMapState) -> Result<(VectorField4, VectorField4)> {
        let e = self.evaluate(flow)?;
        Ok((flow.v.clone(), e.accel))
    }

    /// Classical RK4 step. `k1` may carry a precomputed evaluation of `flow`.
    pub fn step_rk4(&self, flow: &FlowMapState, dt: f64, k1: Option<&Evaluation>) -> Result<FlowMapState> {
        let owned;
        let a1 = match k1 {
            Some(e) => &e.accel,
            None => {
                owned = self.evaluate(flow)?;
                &owned.accel
            }
        };
        let stage = |base: &FlowMapState, de: &VectorField4, dv: &VectorField4, h: f64| FlowMapState {
            tau: base.tau + h,
            eta: std::array::from_fn(|mu| axpy(&base.eta[mu], h, &de[mu])),
            v: std::array::from_fn(|mu| axpy(&base.v[mu], h, &dv[mu])),
        };
        let v1 = &flow.v;
        let s2 = stage(flow, v1, a1, 0.5 * dt);
        let a2 = self.evaluate(&s2)?.accel;
        let s3 = stage(flow, &s2.v, &a2, 0.5 * dt);
        let a3 = self.evaluate(&s3)?.accel;
        let s4 = stage(flow, &s3.v, &a3, dt);
        let a4 = self.evaluate(&s4)?.accel;
        let h6 = dt / 6.0;
        let combine = |base: &ScalarField, k: [&ScalarField; 4]| -> ScalarField {
            (0..base.len())
                .map(|p| base[p] + h6 * (k[0][p] + 2.0 * k[1][p] + 2.0 * k[2][p] + k[3][p]))
                .collect()
        };
        Ok(FlowMapState {
            tau: flow.tau + dt,
            eta: std::array::from_fn(|mu| combine(&flow.eta[mu], [&v1[mu], &s2.v[mu], &s3.v[mu], &s4.v[mu]])),
            v: std::array::from_fn(|mu| combine(&flow.v[mu], [&a1[mu], &a2[mu], &a3[mu], &a4[mu]])),
        })
    }

    /// Step size from the largest characteristic speed bound `c_s |A| + 1`.
    pub fn cfl_dt(&self, eval: &Evaluation, safety: f64, dt_min: f64) -> f64 {
        let mut speed = 1.0f64;
        for (p, a) in eval.mats.a.iter().enumerate() {
            let row = a
                .iter()
                .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max);
            let cs = self.eos.sound_speed_sq_raw(eval.f[p]).max(0.0).sqrt();
            speed = speed.max(cs * row + 1.0);
        }
        (safety * self.grid.h_min() / speed).max(dt_min)
    }

    fn require_gamma_two(&self) -> Result<()> {
        if self.eos.gamma != 2.0 {
            return Err(Error::Domain("momentum-form residuals are defined for gamma = 2".into()));
        }
        Ok(())
    }

    /// Divergence form `F S d_tau v_mu + d_K(F^2 A_mu^K J^-1 S) - 2 F^2 v_mu J^-2 S^{3/2} d_tau J`
    /// (lower index `mu`). `accel` is the acceleration used on the slice.
    pub fn residual_form_146(&self, flow: &FlowMapState, eval: &Evaluation, accel: &VectorField4) -> Result<VectorField4> {
        self.require_gamma_two()?;
        let g = &self.grid;
        let n = g.len();
        let m = &eval.mats;
        let dm = m_derivative(flow, g, Direction::Tau, Some(accel));
        let da = differentiate_a(m, &dm);
        let jdot = crate::kinematics::jacobian_rate(m, &dm);
        let f2 = |p: usize| self.f_ring[p] * self.f_ring[p];
        let mut out: VectorField4 = std::array::from_fn(|_| vec![0.0; n]);
        for mu in 0..4 {
            for k in 1..4 {
                let flux: ScalarField = (0..n).map(|p| f2(p) * m.a[p][mu][k] / m.j[p] * eval.s[p]).collect();
                let d = g.partial(&flux, k);
                out[mu].iter_mut().zip(&d).for_each(|(o, x)| *o += x);
            }
            for p in 0..n {
                let (j, s) = (m.j[p], eval.s[p]);
                let sdot = -2.0 * self.f_ring[p] * s.powf(1.5) / (j * j) * jdot[p];
                let a0 = m.a[p][mu][0];
                let dtau_flux = f2(p) * (da[p][mu][0] * s / j - a0 * s * jdot[p] / (j * j) + a0 * sdot / j);
                let v_low = ETA[mu] * flow.v[mu][p];
                let acc_low = ETA[mu] * accel[mu][p];
                out[mu][p] += self.f_ring[p] * s * acc_low + dtau_flux
                    - 2.0 * f2(p) * v_low * s.powf(1.5) * jdot[p] / (j * j);
            }
        }
        Ok(out)
    }

    /// Left-minus-right of the vertical form with the boundary-normal terms isolated
    /// (lower index `mu`).
    pub fn residual_form_149b(&self, flow: &FlowMapState, eval: &Evaluation, accel: &VectorField4) -> Result<VectorField4> {
        self.require_gamma_two()?;
        let g = &self.grid;
        let n = g.len();
        let m = &eval.mats;
        let dm = m_derivative(flow, g, Direction::Tau, Some(accel));
        let jdot = crate::kinematics::jacobian_rate(m, &dm);
        let jm2: ScalarField = m.j.iter().map(|j| 1.0 / (j * j)).collect();
        let djm2: [ScalarField; 3] = std::array::from_fn(|k| g.partial(&jm2, k + 1));
        let dfr: [ScalarField; 3] = std::array::from_fn(|k| g.partial(&self.f_ring, k + 1));
        let mut out: VectorField4 = std::array::from_fn(|_| vec![0.0; n]);
        for p in 0..n {
            let c = &m.cof[p];
            let (j, fr) = (m.j[p], self.f_ring[p]);
            let dtau_jm2 = -2.0 * jdot[p] / (j * j * j);
            for mu in 0..4 {
                let v_low = ETA[mu] * flow.v[mu][p];
                let acc_low = ETA[mu] * accel[mu][p];
                let lhs = fr * c[mu][3] * djm2[2][p] + 2.0 * c[mu][3] * dfr[2][p] * jm2[p];
                let mut rhs = -acc_low / eval.s[p].sqrt() + 2.0 * fr * jm2[p] * jdot[p] * v_low
                    - fr * c[mu][0] * dtau_jm2;
                for a in 1..3 {
                    rhs -= fr * c[mu][a] * djm2[a - 1][p] + 2.0 * c[mu][a] * dfr[a - 1][p] * jm2[p];
                }
                out[mu][p] = lhs - rhs;
            }
        }
        Ok(out)
    }
}

fn axpy(x: &[f64], h: f64, y: &[f64]) -> ScalarField {
    x.iter().zip(y).map(|(a, b)| a + h * b).collect()
}

/// Replaces `v0` by `sqrt(1 + |v|^2)`, keeping the spatial components.
pub fn renormalize_velocity(flow: &FlowMapState) -> FlowMapState {
    let mut out = flow.clone();
    for p in 0..out.v[0].len() {
        let s2 = out.v[1][p].powi(2) + out.v[2][p].powi(2) + out.v[3][p].powi(2);
        out.v[0][p] = (1.0 + s2).sqrt();
    }
    out
}

pub fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `a - b` elementwise.
pub fn diff(a: &[f64], b: &[f64]) -> ScalarField {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// One row of the per-step monitor log.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRow {
    pub step: usize,
    pub tau: f64,
    pub dt: f64,
    pub constraint_drift: f64,
    pub min_j: f64,
    pub max_j: f64,
    pub sup_f: f64,
    pub mass_residual: f64,
    pub implicit_residual: f64,
    pub bootstrap: BootstrapReport,
}

impl MonitorRow {
    pub const HEADER: &'static str = "step,tau,dt,constraint_drift,min_J,max_J,sup_f,mass_residual,implicit_residual,margin_f,margin_eta,margin_v,margin_J,margin_a3,bootstrap_ok";

    pub fn csv(&self) -> String {
        let m = &self.bootstrap.margins;
        format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.step,
            self.tau,
            self.dt,
            self.constraint_drift,
            self.min_j,
            self.max_j,
            self.sup_f,
            self.mass_residual,
            self.implicit_residual,
            m[0],
            m[1],
            m[2],
            m[3],
            m[4],
            self.bootstrap.all_ok() as u8
        )
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub model: Model,
    pub data: InitialDataBundle,
    pub monitor: Vec<MonitorRow>,
    pub final_state: FlowMapState,
    pub snapshots_emitted: usize,
    pub abort: Option<Error>,
}

/// Builds the model and initial slice described by a configuration.
pub fn setup(config: &SimConfig) -> Result<(Model, InitialDataBundle, FlowMapState)> {
    let grid = GridSpec::new(config.grid.n1, config.grid.n2, config.grid.n3)?;
    let eos = Eos::new(config.eos.gamma)?;
    let data = make_physical_vacuum_data(&grid, config.data.eps, config.data.pert_amp, config.data.velocity_amp)?;
    let model = Model::from_data(grid, eos, &data)?;
    let flow = FlowMapState::initial(&grid, data.velocity());
    Ok((model, data, flow))
}

/// Advances the configured problem to `t_end`, calling `emit` with every
/// snapshot slice (the first, every `output_every` steps, and the last). On a
/// numerical failure the last good slice is emitted and the error is returned in
/// `abort`.
pub fn run(config: &SimConfig, emit: impl FnMut(&FlowMapState) -> Result<()>) -> Result<RunOutput> {
    let (model, data, flow) = setup(config)?;
    run_model(model, data, flow, config, emit)
}

pub fn run_model(
    model: Model,
    data: InitialDataBundle,
    mut flow: FlowMapState,
    config: &SimConfig,
    mut emit: impl FnMut(&FlowMapState) -> Result<()>,
) -> Result<RunOutput> {
    let rc = &config.run;
    let mut eval = model.evaluate(&flow)?;
    let monitor_ref = BootstrapMonitor::new(&model, &data, &flow, &eval);
    let mut monitor = Vec::new();
    let mut emitted = 0usize;
    let mut step = 0usize;
    let mut abort = None;

    let row = |step: usize, dt: f64, flow: &FlowMapState, eval: &Evaluation| MonitorRow {
        step,
        tau: flow.tau,
        dt,
        constraint_drift: flow.constraint_drift(),
        min_j: eval.mats.min_j(),
        max_j: eval.mats.max_j(),
        sup_f: eval.sup_f(),
        mass_residual: eval.mass_residual(&model.f_ring),
        implicit_residual: eval.implicit_residual,
        bootstrap: monitor_ref.check(&model, &flow, eval),
    };
    monitor.push(row(0, 0.0, &flow, &eval));
    emit(&flow)?;
    emitted += 1;
    let mut last_emitted = 0;

    while flow.tau < rc.t_end * (1.0 - 1e-14) {
        let dt = model.cfl_dt(&eval, rc.cfl_safety, rc.dt_min).min(rc.t_end - flow.tau);
        let next = model
            .step_rk4(&flow, dt, Some(&eval))
            .map(|s| if rc.renormalize { renormalize_velocity(&s) } else { s })
            .and_then(|s| model.evaluate(&s).map(|e| (s, e)));
        match next {
            Ok((s, e)) => {
                flow = s;
                eval = e;
                step += 1;
            }
            Err(err) => {
                abort = Some(err);
                break;
            }
        }
        monitor.push(row(step, dt, &flow, &eval));
        if rc.output_every > 0 && step % rc.output_every == 0 {
            emit(&flow)?;
            emitted += 1;
            last_emitted = step;
        }
    }
    if last_emitted != step {
        emit(&flow)?;
        emitted += 1;
    }
    Ok(RunOutput {
        model,
        data,
        monitor,
        final_state: flow,
        snapshots_emitted: emitted,
        abort,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::make_physical_vacuum_data;

    fn model(grid: GridSpec, eps: f64, pert: f64, vamp: f64) -> (Model, FlowMapState) {
        let data = make_physical_vacuum_data(&grid, eps, pert, vamp).unwrap();
        let m = Model::from_data(grid, Eos::new(2.0).unwrap(), &data).unwrap();
        let flow = FlowMapState::initial(&grid, data.velocity());
        (m, flow)
    }

    fn free(grid: GridSpec) -> (Model, FlowMapState) {
        let m = Model::new(grid, Eos::new(2.0).unwrap(), grid.zeros()).unwrap();
        let vs = [0.3, -0.2, 0.1];
        let v0 = (1.0f64 + vs.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let v = [vec![v0; grid.len()], vec![vs[0]; grid.len()], vec![vs[1]; grid.len()], vec![vs[2]; grid.len()]];
        (m, FlowMapState::initial(&grid, v))
    }

    #[test]
    fn free_streaming_has_zero_acceleration() {
        let g = GridSpec::new(8, 8, 9).unwrap();
        let (m, s) = free(g);
        let (de, dv) = m.rhs(&s).unwrap();
        assert_eq!(de, s.v);
        assert!(dv.iter().flatten().all(|x| *x == 0.0));
        let e = m.evaluate(&s).unwrap();
        assert!((m.cfl_dt(&e, 0.4, 1e-9) - 0.4 * g.h_min()).abs() < 1e-15);
        let mut t = s.clone();
        for _ in 0..20 {
            t = m.step_rk4(&t, 0.01, None).unwrap();
        }
        for mu in 0..4 {
            for p in 0..g.len() {
                assert!((t.eta[mu][p] - t.tau * s.v[mu][p]).abs() < 1e-13);
            }
        }
        let r146 = m.residual_form_146(&t, &m.evaluate(&t).unwrap(), &dv).unwrap();
        let r149 = m.residual_form_149b(&t, &m.evaluate(&t).unwrap(), &dv).unwrap();
        assert!(r146.iter().flatten().all(|x| x.abs() < 1e-14));
        assert!(r149.iter().flatten().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn homogeneous_rest_state_is_static() {
        let g = GridSpec::new(8, 8, 9).unwrap();
        let m = Model::new(g, Eos::new(2.0).unwrap(), vec![0.05; g.len()]).unwrap();
        let mut v: VectorField4 = std::array::from_fn(|_| g.zeros());
        v[0] = vec![1.0; g.len()];
        let (_, dv) = m.rhs(&FlowMapState::initial(&g, v)).unwrap();
        assert!(dv.iter().flatten().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn boundary_acceleration_points_outward() {
        let g = GridSpec::new(16, 16, 17).unwrap();
        let (m, s) = model(g, 0.01, 0.0, 0.0);
        let e = m.evaluate(&s).unwrap();
        for p in 0..g.n1 * g.n2 {
            assert!(e.accel[3][p] < 0.0);
            assert!(e.accel[3][g.len() - 1 - p] > 0.0);
        }
        // At rest and on the lower face: d_tau v^3 = -S^-1 dS/dy3 = -2 dF/dy3.
        assert!((e.accel[3][0] + 2.0 * 0.04).abs() < 1e-12);
        assert!(e.implicit_residual < IMPLICIT_TOL);
    }

    #[test]
    fn cfl_scaling() {
        let g = GridSpec::new(16, 16, 17).unwrap();
        let (m, s) = model(g, 0.01, 0.1, 0.1);
        let dt = m.cfl_dt(&m.evaluate(&s).unwrap(), 0.4, 1e-9);
        let (m2, s2) = model(g.refined(), 0.01, 0.1, 0.1);
        let dt2 = m2.cfl_dt(&m2.evaluate(&s2).unwrap(), 0.4, 1e-9);
        assert!((dt / dt2 - 2.0).abs() < 0.02);
        let (m3, s3) = model(g, 0.05, 0.1, 0.1);
        assert!(m3.cfl_dt(&m3.evaluate(&s3).unwrap(), 0.4, 1e-9) < dt);
    }

    #[test]
    fn renormalization() {
        let g = GridSpec::new(8, 8, 9).unwrap();
        let mut s = free(g).1;
        s.v[0][0] = 1.1;
        s.v[1][0] = 0.6;
        s.v[2][0] = 0.0;
        s.v[3][0] = 0.8;
        let r = renormalize_velocity(&s);
        assert!((r.v[0][0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(renormalize_velocity(&r), r);
        let n = renormalize_velocity(&free(g).1);
        assert!(n.v[0].iter().zip(&free(g).1.v[0]).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn implicit_coupling_is_resolved() {
        let g = GridSpec::new(16, 16, 17).unwrap();
        let (m, s) = model(g, 0.05, 0.2, 0.5);
        let e = m.evaluate(&s).unwrap();
        assert!(e.implicit_residual < IMPLICIT_TOL);
        // Transport form holds pointwise: S d_tau v_mu + v_mu d_tau S = w_mu.
        for p in 0..g.len() {
            for mu in 0..4 {
                let lhs = e.s[p] * ETA[mu] * e.accel[mu][p] + ETA[mu] * s.v[mu][p] * e.sdot[p];
                assert!((lhs - e.w[mu][p]).abs() < 1e-13);
            }
            // The normalization is preserved by the semi-discrete system.
            let v = s.v_at(p);
            let a = [e.accel[0][p], e.accel[1][p], e.accel[2][p], e.accel[3][p]];
            assert!(crate::mat4::g_dot(&v, &a).abs() < 1e-13);
        }
    }

    #[test]
    fn time_reversal() {
        let g = GridSpec::new(16, 16, 17).unwrap();
        let (m, s) = model(g, 0.01, 0.2, 0.1);
        let err = |dt: f64| {
            let fwd = m.step_rk4(&s, dt, None).unwrap();
            let back = m.step_rk4(&fwd, -dt, None).unwrap();
            (0..4)
                .map(|mu| max_abs(&axpy(&back.v[mu], -1.0, &s.v[mu])))
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(0.02), err(0.01));
        assert!(a < 1e-8 && a / b > 12.0, "{a} {b}");
    }

    #[test]
    fn perturbed_map_is_not_a_solution() {
        let g = GridSpec::new(16, 16, 17).unwrap();
        let (m, s) = model(g, 0.01, 0.0, 0.0);
        let e = m.evaluate(&s).unwrap();
        let good = m.residual_form_149b(&s, &e, &e.accel).unwrap();
        let mut bent = s.clone();
        bent.eta[3] = g.sample(|y| 0.05 * (2.0 * std::f64::consts::PI * y[0]).sin() * y[2] * (1.0 - y[2]));
        let eb = m.evaluate(&bent).unwrap();
        let bad = m.residual_form_149b(&bent, &eb, &e.accel).unwrap();
        let norm = |r: &VectorField4| r.iter().map(|c| max_abs(c)).fold(0.0, f64::max);
        assert!(norm(&bad) > 1e-3 && norm(&bad) > 1e4 * norm(&good), "{} {}", norm(&bad), norm(&good));
        let bad146 = m.residual_form_146(&bent, &eb, &e.accel).unwrap();
        let good146 = m.residual_form_146(&s, &e, &e.accel).unwrap();
        // The conservative form carries an O(h^4) commutator error on the exact state.
        assert!(norm(&bad146) > 1e2 * norm(&good146), "{} {}", norm(&bad146), norm(&good146));
    }
}
