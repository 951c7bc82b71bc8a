//! Proper-time derivatives from a short, uniformly spaced series of slices.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField4};
use crate::integrator::{Evaluation, Model};
use crate::kinematics::FlowMapState;

/// Finite-difference weights `w[m][j]` for the `m`-th derivative at `x0` from
/// values at `xs[j]`, for `m = 0..=max_order` (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Per-slice quantities kept for differentiation.
#[derive(Debug, Clone)]
struct SliceData {
    eta: VectorField4,
    accel: VectorField4,
    jdot: ScalarField,
    jinv2_rate: ScalarField,
    w: VectorField4,
    sdot: ScalarField,
}

/// Uniformly spaced slices around a target slice.
///
/// Low orders are exact: `d_tau eta = v`, `d_tau^2 eta` is the evaluated
/// acceleration, `d_tau J` and `d_tau S` come from the same evaluation. Higher
/// orders differentiate those exact fields across the series.
#[derive(Debug, Clone)]
pub struct TimeDerivativeStack {
    pub dt: f64,
    pub center: usize,
    center_flow: FlowMapState,
    center_eval: Evaluation,
    slices: Vec<SliceData>,
    weights: Vec<Vec<f64>>,
}

impl TimeDerivativeStack {
    /// Half-width of the locally evolved series for a given `p_max`.
    pub fn half_width(p_max: usize) -> usize {
        p_max + 2
    }

    /// Builds a stack from given uniformly spaced slices.
    pub fn from_slices(model: &Model, flows: Vec<FlowMapState>, center: usize) -> Result<Self> {
        if flows.len() < 2 || center >= flows.len() {
            return Err(Error::InsufficientHistory {
                needed: 2,
                available: flows.len(),
            });
        }
        let dt = flows[1].tau - flows[0].tau;
        for w in flows.windows(2) {
            if ((w[1].tau - w[0].tau) - dt).abs() > 1e-9 * dt.abs().max(1e-300) {
                return Err(Error::Domain("tau history is not uniformly spaced".into()));
            }
        }
        if dt == 0.0 {
            return Err(Error::Domain("tau history has zero spacing".into()));
        }
        let mut slices = Vec::with_capacity(flows.len());
        let mut center_eval = None;
        for (i, f) in flows.iter().enumerate() {
            let e = model.evaluate(f)?;
            slices.push(SliceData {
                eta: f.eta.clone(),
                accel: e.accel.clone(),
                jdot: e.jdot.clone(),
                jinv2_rate: e.mats.j.iter().zip(&e.jdot).map(|(j, d)| -2.0 * d / (j * j * j)).collect(),
                w: e.w.clone(),
                sdot: e.sdot.clone(),
            });
            if i == center {
                center_eval = Some(e);
            }
        }
        let xs: Vec<f64> = (0..flows.len()).map(|i| (i as f64 - center as f64) * dt).collect();
        let weights = fornberg_weights(0.0, &xs, flows.len() - 1);
        Ok(Self {
            dt,
            center,
            center_flow: flows[center].clone(),
            center_eval: center_eval.expect("center index checked above"),
            slices,
            weights,
        })
    }

    /// Evolves `half` steps of size `dt` backwards from `flow` and then `2 half`
    /// steps forwards, so every slice lies on one forward discrete trajectory.
    /// The middle slice differs from `flow` by the round-trip error of the scheme.
    pub fn evolve(model: &Model, flow: &FlowMapState, half: usize, dt: f64) -> Result<Self> {
        let mut s = flow.clone();
        for _ in 0..half {
            s = model.step_rk4(&s, -dt, None)?;
        }
        let mut flows = Vec::with_capacity(2 * half + 1);
        flows.push(s.clone());
        for _ in 0..2 * half {
            s = model.step_rk4(&s, dt, None)?;
            flows.push(s.clone());
        }
        // Summing the steps leaves rounding in tau; the middle slice is `flow`'s time.
        flows[half].tau = flow.tau;
        Self::from_slices(model, flows, half)
    }

    /// Default spacing: a quarter of the CFL step of `eval`.
    pub fn default_dt(model: &Model, eval: &Evaluation, safety: f64) -> f64 {
        0.25 * model.cfl_dt(eval, safety, 0.0)
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn center_flow(&self) -> &FlowMapState {
        &self.center_flow
    }

    pub fn center_eval(&self) -> &Evaluation {
        &self.center_eval
    }

    fn check(&self, order: usize) -> Result<()> {
        if order + 1 > self.len() {
            return Err(Error::InsufficientHistory {
                needed: order + 1,
                available: self.len(),
            });
        }
        Ok(())
    }

    fn fd_scalar(&self, order: usize, get: impl Fn(&SliceData) -> &ScalarField) -> Result<ScalarField> {
        self.check(order)?;
        let w = &self.weights[order];
        let n = get(&self.slices[0]).len();
        let mut out = vec![0.0; n];
        for (s, wj) in self.slices.iter().zip(w) {
            if *wj == 0.0 {
                continue;
            }
            out.iter_mut().zip(get(s)).for_each(|(o, x)| *o += wj * x);
        }
        Ok(out)
    }

    fn fd_vector(&self, order: usize, get: impl Fn(&SliceData) -> &VectorField4) -> Result<VectorField4> {
        let c: Vec<ScalarField> = (0..4)
            .map(|mu| self.fd_scalar(order, |s| &get(s)[mu]))
            .collect::<Result<_>>()?;
        Ok(c.try_into().expect("four components"))
    }

    /// Pure finite difference of the stored displacement history.
    pub fn time_derivatives(&self, k: usize) -> Result<VectorField4> {
        self.fd_vector(k, |s| &s.eta)
    }

    /// `d_tau^k eta` (displacement part for `k = 0`).
    pub fn eta_dtau(&self, k: usize) -> Result<VectorField4> {
        match k {
            0 => Ok(self.center_flow.eta.clone()),
            1 => Ok(self.center_flow.v.clone()),
            2 => Ok(self.center_eval.accel.clone()),
            _ => self.fd_vector(k - 2, |s| &s.accel),
        }
    }

    pub fn j_dtau(&self, k: usize) -> Result<ScalarField> {
        match k {
            0 => Ok(self.center_eval.mats.j.clone()),
            1 => Ok(self.center_eval.jdot.clone()),
            _ => self.fd_scalar(k - 1, |s| &s.jdot),
        }
    }

    /// `d_tau^k (J^-2)`, via the exact rate `-2 J^-3 d_tau J` on every slice.
    pub fn jinv2_dtau(&self, k: usize) -> Result<ScalarField> {
        let j = &self.center_eval.mats.j;
        if k == 0 {
            return Ok(j.iter().map(|x| 1.0 / (x * x)).collect());
        }
        if k == 1 {
            return Ok(j
                .iter()
                .zip(&self.center_eval.jdot)
                .map(|(x, d)| -2.0 * d / (x * x * x))
                .collect());
        }
        self.fd_scalar(k - 1, |s| &s.jinv2_rate)
    }

    /// `d_tau^k (S v_mu)` for `k >= 1` (lower index).
    pub fn w_dtau(&self, k: usize) -> Result<VectorField4> {
        match k {
            0 => Err(Error::Domain("order 0 of d_tau(S v) is not a derivative".into())),
            1 => Ok(self.center_eval.w.clone()),
            _ => self.fd_vector(k - 1, |s| &s.w),
        }
    }

    /// `d_tau^k S` for `k >= 1`.
    pub fn s_dtau(&self, k: usize) -> Result<ScalarField> {
        match k {
            0 => Ok(self.center_eval.s.clone()),
            1 => Ok(self.center_eval.sdot.clone()),
            _ => self.fd_scalar(k - 1, |s| &s.sdot),
        }
    }
}
