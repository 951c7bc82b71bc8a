//! Numerical ratios for the Hardy, Hodge and tangential trace inequalities.

use super::norms::{face_fractional_norms, sobolev_norm, sobolev_sq};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::operators::{flat_div3, flat_vort3};

/// Relative size below which a face value counts as vanishing.
pub const FACE_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyRatios {
    /// `||f/d||_{L2} / ||f||_{H1}`
    pub s1: f64,
    /// `||f/d||_{H1} / ||f||_{H2}`
    pub s2: f64,
}

/// `f / d` with face values extrapolated from the four nearest interior nodes.
pub fn quotient_by_distance(grid: &GridSpec, f: &[f64]) -> ScalarField {
    let d = grid.distance_field();
    let mut q: ScalarField = f.iter().zip(&d).map(|(f, d)| if *d > 0.0 { f / d } else { 0.0 }).collect();
    let plane = grid.n1 * grid.n2;
    let last = grid.n3 - 1;
    for p in 0..plane {
        let at = |i3: usize| q[i3 * plane + p];
        let low = 4.0 * at(1) - 6.0 * at(2) + 4.0 * at(3) - at(4);
        let high = 4.0 * at(last - 1) - 6.0 * at(last - 2) + 4.0 * at(last - 3) - at(last - 4);
        q[p] = low;
        q[last * plane + p] = high;
    }
    q
}

pub fn hardy_check(grid: &GridSpec, f: &[f64]) -> Result<HardyRatios> {
    let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for top in [false, true] {
        let worst = grid.face(f, top).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if worst > FACE_ZERO_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Hypothesis(format!(
                "field does not vanish on the {} face (max |f| = {worst:e})",
                if top { "upper" } else { "lower" }
            )));
        }
    }
    if scale == 0.0 {
        return Err(Error::Hypothesis("zero field has no Hardy ratio".into()));
    }
    let q = quotient_by_distance(grid, f);
    Ok(HardyRatios {
        s1: sobolev_norm(grid, &q, 0) / sobolev_norm(grid, f, 1),
        s2: sobolev_norm(grid, &q, 1) / sobolev_norm(grid, f, 2),
    })
}

/// `sum_a sum over faces ||dbar Y^a||_{H^{-1/2}}` for `a = 1, 2`, with the face
/// norm of the tangential gradient taken as the root sum of squares of its two
/// components. Returns `(lower, upper)` totals.
pub fn boundary_tangential_terms(grid: &GridSpec, y: &[ScalarField; 3]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for comp in y.iter().take(2) {
        let per: Vec<[f64; 2]> = (1..3).map(|b| face_fractional_norms(grid, &grid.partial(comp, b))).collect();
        for (face, o) in out.iter_mut().enumerate() {
            *o += (per[0][face].powi(2) + per[1][face].powi(2)).sqrt();
        }
    }
    out
}

/// `||curl Y||_{L2}` from the independent components of the flat vorticity.
pub fn vort3_l2(grid: &GridSpec, y: &[ScalarField; 3]) -> f64 {
    let w = flat_vort3(grid, y);
    let mut s = 0.0;
    for (k, j) in [(0, 1), (0, 2), (1, 2)] {
        let c: ScalarField = w.iter().map(|m| m[k][j]).collect();
        s += grid.l2_sq(&c);
    }
    s.sqrt()
}

/// `||dbar Y||_{L2}` over all components and both tangential directions.
pub fn tangential_l2(grid: &GridSpec, y: &[ScalarField; 3]) -> f64 {
    let mut s = 0.0;
    for c in y {
        for b in 1..3 {
            s += grid.l2_sq(&grid.partial(c, b));
        }
    }
    s.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HodgeReport {
    pub lhs: f64,
    pub l2: f64,
    pub div: f64,
    pub vort: f64,
    /// Boundary term per face `(lower, upper)`.
    pub boundary_faces: [f64; 2],
}

impl HodgeReport {
    pub fn boundary(&self) -> f64 {
        self.boundary_faces[0] + self.boundary_faces[1]
    }

    pub fn rhs_sum(&self) -> f64 {
        self.l2 + self.div + self.vort + self.boundary()
    }

    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs_sum()
    }
}

pub fn hodge_check(grid: &GridSpec, y: &[ScalarField; 3]) -> HodgeReport {
    let lhs: f64 = y.iter().map(|c| sobolev_sq(grid, c, 1)).sum::<f64>().sqrt();
    let l2: f64 = y.iter().map(|c| grid.l2_sq(c)).sum::<f64>().sqrt();
    HodgeReport {
        lhs,
        l2,
        div: grid.l2_sq(&flat_div3(grid, y)).sqrt(),
        vort: vort3_l2(grid, y),
        boundary_faces: boundary_tangential_terms(grid, y),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceReport {
    pub lhs_faces: [f64; 2],
    pub lhs: f64,
    pub rhs: f64,
}

impl TraceReport {
    /// `lhs / rhs`, zero when both sides vanish.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

pub fn trace_check(grid: &GridSpec, y: &[ScalarField; 3]) -> TraceReport {
    let faces = boundary_tangential_terms(grid, y);
    TraceReport {
        lhs_faces: faces,
        lhs: faces[0] + faces[1],
        rhs: vort3_l2(grid, y) + tangential_l2(grid, y),
    }
}

/// Shipped test families.
pub mod families {
    use crate::grid::{GridSpec, ScalarField};
    use std::f64::consts::PI;

    pub fn distance(grid: &GridSpec) -> ScalarField {
        grid.distance_field()
    }

    pub fn sine_profile(grid: &GridSpec) -> ScalarField {
        grid.sample(|y| (PI * y[2]).sin())
    }

    /// Gradient of `sin 2pi y1 sin 2pi y2 y3 (1 - y3)`.
    pub fn hodge_gradient(grid: &GridSpec) -> [ScalarField; 3] {
        let (s, c) = (|t: f64| (2.0 * PI * t).sin(), |t: f64| (2.0 * PI * t).cos());
        [
            grid.sample(|y| 2.0 * PI * c(y[0]) * s(y[1]) * y[2] * (1.0 - y[2])),
            grid.sample(|y| 2.0 * PI * s(y[0]) * c(y[1]) * y[2] * (1.0 - y[2])),
            grid.sample(|y| s(y[0]) * s(y[1]) * (1.0 - 2.0 * y[2])),
        ]
    }

    /// Curl of `(0, 0, sin 2pi y1 cos 2pi y2)`.
    pub fn curl_field(grid: &GridSpec) -> [ScalarField; 3] {
        let (s, c) = (|t: f64| (2.0 * PI * t).sin(), |t: f64| (2.0 * PI * t).cos());
        [
            grid.sample(|y| -2.0 * PI * s(y[0]) * s(y[1])),
            grid.sample(|y| -2.0 * PI * c(y[0]) * c(y[1])),
            grid.zeros(),
        ]
    }

    pub fn horizontal_shear(grid: &GridSpec) -> [ScalarField; 3] {
        [grid.sample(|y| (2.0 * PI * y[1]).sin()), grid.zeros(), grid.zeros()]
    }

    pub fn vertical_only(grid: &GridSpec) -> [ScalarField; 3] {
        [
            grid.sample(|y| y[2] * y[2]),
            grid.sample(|y| (PI * y[2]).cos()),
            grid.sample(|y| 1.0 - y[2]),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;

    #[test]
    fn hardy_negative_control() {
        let g = GridSpec::new(8, 8, 17).unwrap();
        let e = hardy_check(&g, &vec![1.0; g.len()]).unwrap_err();
        assert!(matches!(e, Error::Hypothesis(_)));
    }

    #[test]
    fn hardy_quotient_of_linear_vanishing() {
        let g = GridSpec::new(8, 8, 17).unwrap();
        let f = g.sample(|y| y[2] * (1.0 - y[2]) * 3.0);
        let q = quotient_by_distance(&g, &f);
        // f / d = 3 (1 - y3) near the lower face, 3 y3 near the upper one.
        assert!((q[0] - 3.0).abs() < 1e-12);
        assert!((q[g.len() - 1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hodge_constant_field() {
        let g = GridSpec::new(8, 8, 9).unwrap();
        let y = [vec![1.0; g.len()], vec![-2.0; g.len()], vec![0.5; g.len()]];
        let r = hodge_check(&g, &y);
        assert!((r.lhs - r.l2).abs() < 1e-14);
        assert!(r.div < 1e-14 && r.vort < 1e-14 && r.boundary() < 1e-14, "{r:?}");
        assert!((r.ratio() - 1.0).abs() < 1e-14);
        let t = trace_check(&g, &y);
        assert_eq!((t.lhs, t.ratio()), (0.0, 0.0));
    }

    #[test]
    fn curl_field_is_divergence_free() {
        let g = GridSpec::new(16, 16, 9).unwrap();
        let r = hodge_check(&g, &curl_field(&g));
        assert!(r.div < 1e-12 * r.lhs, "{r:?}");
    }

    #[test]
    fn vertical_field_has_no_tangential_trace() {
        let g = GridSpec::new(8, 8, 9).unwrap();
        let t = trace_check(&g, &vertical_only(&g));
        assert_eq!(t.lhs, 0.0);
    }

    #[test]
    fn shear_trace_values() {
        let g = GridSpec::new(32, 32, 9).unwrap();
        let t = trace_check(&g, &horizontal_shear(&g));
        let per_face = std::f64::consts::PI * 2f64.sqrt() * (1.0 + 4.0 * std::f64::consts::PI.powi(2)).powf(-0.25);
        // Stencil derivative of the single mode, exact up to the fourth-order symbol.
        assert!((t.lhs_faces[0] / per_face - 1.0).abs() < 2e-3, "{t:?}");
        assert!(t.lhs > 0.0 && t.rhs > 0.0 && t.ratio() < 2.0);
    }
}
