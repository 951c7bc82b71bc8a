//! Vorticity of `d_tau(S v)` and the transport identity for `vort(d_tau v)`.
//!
//! With `nabla_mu = A_mu^K d_K`, `W_mu = d_tau(S v_mu) = -nabla_mu S` and
//! `v.v = -1`, the identity reads
//!
//! ```text
//! vort(d_tau v)_{mu nu} = -S^-1 d_tau S vort(v)_{mu nu}
//!     + S^-1 (W_mu d_tau v_nu - W_nu d_tau v_mu)
//!     - 2 S^-1 d_tau S (d_tau v_nu v_mu - d_tau v_mu v_nu)
//!     - (d_tau^2 v_nu v_mu - d_tau^2 v_mu v_nu)
//!     + (nabla_mu v^b d_tau v_b v_nu - nabla_nu v^b d_tau v_b v_mu)
//! ```
//!
//! The last line is the commutator of `d_tau` with `nabla`.

use super::stack::TimeDerivativeStack;
use crate::error::Result;
use crate::integrator::Model;
use crate::mat4::{lower, Mat4, Vec4, ZERO};
use crate::operators::{eta_grad, eta_vort, raise_index, TwoForm4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VorticityReport {
    pub vort_sv_norm: f64,
    pub identity44_residual: f64,
}

/// Pointwise inputs of the transport identity. Vectors carry upper indices
/// except `w`; `grad_v[mu][b] = nabla_mu v^b`.
#[derive(Debug, Clone, Copy)]
pub struct TransportInputs {
    pub s: f64,
    pub sdot: f64,
    pub v: Vec4,
    pub dtv: Vec4,
    pub dt2v: Vec4,
    pub w: Vec4,
    pub vort_v: Mat4,
    pub grad_v: Mat4,
}

/// Right-hand side of the transport identity for `vort(d_tau v)`.
pub fn identity44_rhs(x: &TransportInputs) -> Mat4 {
    let (vl, al, bl) = (lower(&x.v), lower(&x.dtv), lower(&x.dt2v));
    let inv_s = 1.0 / x.s;
    let q = x.sdot;
    // c_mu = nabla_mu v^b d_tau v_b
    let c: Vec4 = std::array::from_fn(|mu| (0..4).map(|b| x.grad_v[mu][b] * al[b]).sum());
    let mut out = ZERO;
    for mu in 0..4 {
        for nu in 0..4 {
            out[mu][nu] = -inv_s * q * x.vort_v[mu][nu] + inv_s * (x.w[mu] * al[nu] - x.w[nu] * al[mu])
                - 2.0 * inv_s * q * (al[nu] * vl[mu] - al[mu] * vl[nu])
                - (bl[nu] * vl[mu] - bl[mu] * vl[nu])
                + (c[mu] * vl[nu] - c[nu] * vl[mu]);
        }
    }
    out
}

/// `vort(d_tau(S v))` on the middle slice of the stack.
pub fn vort_sv(model: &Model, stack: &TimeDerivativeStack) -> Result<TwoForm4> {
    let e = stack.center_eval();
    let w = raise_index(&e.w);
    let wt = raise_index(&stack.w_dtau(2)?);
    Ok(eta_vort(&model.grid, &e.mats.a, &w, &wt))
}

fn two_form_l2(model: &Model, w: &TwoForm4) -> f64 {
    let mut s = 0.0;
    for mu in 0..4 {
        for nu in 0..4 {
            let c: Vec<f64> = w.iter().map(|m| m[mu][nu]).collect();
            s += model.grid.l2_sq(&c);
        }
    }
    s.sqrt()
}

/// Both diagnostics on the middle slice of `stack`.
pub fn vorticity_diagnostics(model: &Model, stack: &TimeDerivativeStack) -> Result<VorticityReport> {
    let g = &model.grid;
    let e = stack.center_eval();
    let flow = stack.center_flow();
    let a = &e.mats.a;
    let dt2v = stack.eta_dtau(3)?;
    let vort_v = eta_vort(g, a, &flow.v, &e.accel);
    let vort_dtv = eta_vort(g, a, &e.accel, &dt2v);
    let grad_v = eta_grad(g, a, &flow.v, &e.accel);
    let mut worst = 0.0f64;
    for p in 0..g.len() {
        let at = |f: &crate::grid::VectorField4| [f[0][p], f[1][p], f[2][p], f[3][p]];
        let rhs = identity44_rhs(&TransportInputs {
            s: e.s[p],
            sdot: e.sdot[p],
            v: at(&flow.v),
            dtv: at(&e.accel),
            dt2v: at(&dt2v),
            w: at(&e.w),
            vort_v: vort_v[p],
            grad_v: grad_v[p],
        });
        worst = worst.max(crate::mat4::max_abs_diff(&vort_dtv[p], &rhs));
    }
    Ok(VorticityReport {
        vort_sv_norm: two_form_l2(model, &vort_sv(model, stack)?),
        identity44_residual: worst,
    })
}

/// Irrotational flow built from a spacetime potential: `S u_mu = d_mu phi`,
/// `S = sqrt(-d phi . d phi)`. Returns the identity inputs at `x0` and the
/// exact `vort(d_tau v)` and `vort(d_tau(S v))` there.
pub fn potential_flow_sample(x0: [f64; 4], amp: f64) -> (TransportInputs, Mat4, Mat4) {
    use super::jet::{Jet, JetSpace};
    const ETA: [f64; 4] = crate::mat4::ETA;
    let sp = JetSpace::new(5);
    let x: Vec<Jet> = (0..4).map(|i| sp.variable(i, x0[i])).collect();
    // phi = -t + amp * (smooth polynomial).
    let poly = x[1]
        .mul(&x[1])
        .mul(&x[0])
        .add(&x[2].mul(&x[3]).scale(0.7))
        .sub(&x[1].mul(&x[2]).mul(&x[3]).scale(0.4))
        .add(&x[0].mul(&x[0]).mul(&x[3]).scale(0.3))
        .add(&x[3].mul(&x[3]).mul(&x[3]).mul(&x[1]).scale(0.2))
        .add(&x[2].mul(&x[2]).scale(0.5));
    let phi = x[0].scale(-1.0).add(&poly.scale(amp));
    let dphi: Vec<Jet> = (0..4).map(|m| phi.d(m)).collect();
    let norm = (0..4).fold(sp.constant(0.0), |acc, m| acc.add(&dphi[m].mul(&dphi[m]).scale(ETA[m])));
    let s = norm.scale(-1.0).sqrt();
    let inv_s = s.recip();
    let u_low: Vec<Jet> = dphi.iter().map(|d| d.mul(&inv_s)).collect();
    let u_up: Vec<Jet> = (0..4).map(|m| u_low[m].scale(ETA[m])).collect();
    let material = |f: &Jet| (0..4).fold(sp.constant(0.0), |acc, n| acc.add(&u_up[n].mul(&f.d(n))));
    let dtv_low: Vec<Jet> = u_low.iter().map(material).collect();
    let dt2v_low: Vec<Jet> = dtv_low.iter().map(material).collect();
    let sdot = material(&s);
    let w_low: Vec<Jet> = u_low.iter().map(|u| material(&s.mul(u))).collect();
    let vort = |f: &[Jet]| -> Mat4 {
        std::array::from_fn(|m| std::array::from_fn(|n| f[n].d(m).value() - f[m].d(n).value()))
    };
    let val = |f: &[Jet]| -> Vec4 { std::array::from_fn(|m| f[m].value()) };
    let up = |v: Vec4| -> Vec4 { std::array::from_fn(|m| ETA[m] * v[m]) };
    let inputs = TransportInputs {
        s: s.value(),
        sdot: sdot.value(),
        v: val(&u_up),
        dtv: up(val(&dtv_low)),
        dt2v: up(val(&dt2v_low)),
        w: val(&w_low),
        vort_v: vort(&u_low),
        grad_v: std::array::from_fn(|m| std::array::from_fn(|b| u_up[b].d(m).value())),
    };
    (inputs, vort(&dtv_low), vort(&w_low))
}
