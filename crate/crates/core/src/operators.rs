//! Lagrangian gradient, divergence and vorticity, flat 3-d operators, and the
//! Riemannian metric `h = g + 2 v v`.
//!
//! Tau-derivatives are always supplied by the caller.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField4};
use crate::kinematics::spatial_gradient;
use crate::mat4::{self, Mat4, Vec4, ETA};

/// Normalization defect above which the metric `h` is refused.
pub const METRIC_NORMALIZATION_TOL: f64 = 1e-4;

pub type TwoForm4 = Vec<Mat4>;
pub type Mat3 = [[f64; 3]; 3];

pub fn lower_index(x: &VectorField4) -> VectorField4 {
    let mut y = x.clone();
    y[0].iter_mut().for_each(|c| *c = -*c);
    y
}

pub fn raise_index(x: &VectorField4) -> VectorField4 {
    lower_index(x)
}

/// `G[mu][nu] = A_mu^K d_K X^nu` with `d_0 X = dx_dtau`.
pub fn eta_grad(grid: &GridSpec, a: &[Mat4], x: &VectorField4, dx_dtau: &VectorField4) -> Vec<Mat4> {
    let d = spatial_gradient(grid, x);
    a.iter()
        .enumerate()
        .map(|(p, ak)| {
            let mut g = mat4::ZERO;
            for mu in 0..4 {
                for nu in 0..4 {
                    g[mu][nu] = ak[mu][0] * dx_dtau[nu][p]
                        + ak[mu][1] * d[0][nu][p]
                        + ak[mu][2] * d[1][nu][p]
                        + ak[mu][3] * d[2][nu][p];
                }
            }
            g
        })
        .collect()
}

pub fn eta_div(grid: &GridSpec, a: &[Mat4], x: &VectorField4, dx_dtau: &VectorField4) -> ScalarField {
    eta_grad(grid, a, x, dx_dtau).iter().map(mat4::trace).collect()
}

/// Antisymmetrized gradient of the lowered field; `x` and `dx_dtau` carry upper indices.
pub fn eta_vort(grid: &GridSpec, a: &[Mat4], x: &VectorField4, dx_dtau: &VectorField4) -> TwoForm4 {
    let g = eta_grad(grid, a, &lower_index(x), &lower_index(dx_dtau));
    g.iter().map(antisymmetrize).collect()
}

/// `w[mu][nu] = g[mu][nu] - g[nu][mu]`.
pub fn antisymmetrize(g: &Mat4) -> Mat4 {
    let mut w = mat4::ZERO;
    for mu in 0..4 {
        for nu in 0..4 {
            w[mu][nu] = g[mu][nu] - g[nu][mu];
        }
    }
    w
}

pub fn flat_div3(grid: &GridSpec, y: &[ScalarField; 3]) -> ScalarField {
    let mut out = grid.partial(&y[0], 1);
    for a in 1..3 {
        let d = grid.partial(&y[a], a + 1);
        out.iter_mut().zip(&d).for_each(|(o, x)| *o += x);
    }
    out
}

/// `w[K][j] = d_K Y_j - d_j Y_K` with indices `0..3` standing for axes `1..3`.
pub fn flat_vort3(grid: &GridSpec, y: &[ScalarField; 3]) -> Vec<Mat3> {
    let d: [[ScalarField; 3]; 3] =
        std::array::from_fn(|k| std::array::from_fn(|j| grid.partial(&y[j], k + 1)));
    (0..grid.len())
        .map(|p| std::array::from_fn(|k| std::array::from_fn(|j| d[k][j][p] - d[j][k][p])))
        .collect()
}

/// `h_{mu nu} = g_{mu nu} + 2 v_mu v_nu` at a point; `v` has an upper index.
pub fn h_point(v: &Vec4) -> Mat4 {
    let vl = mat4::lower(v);
    std::array::from_fn(|mu| {
        std::array::from_fn(|nu| if mu == nu { ETA[mu] } else { 0.0 } + 2.0 * vl[mu] * vl[nu])
    })
}

/// `(h^{-1})^{mu nu} = g^{mu nu} + 2 v^mu v^nu`.
pub fn h_inv_point(v: &Vec4) -> Mat4 {
    std::array::from_fn(|mu| {
        std::array::from_fn(|nu| if mu == nu { ETA[mu] } else { 0.0 } + 2.0 * v[mu] * v[nu])
    })
}

#[derive(Debug, Clone)]
pub struct MetricH {
    pub h: Vec<Mat4>,
    pub h_inv: Vec<Mat4>,
    /// `max |h h^{-1} - I|`; zero only on the constraint surface.
    pub inverse_defect: f64,
}

pub fn metric_h(v: &VectorField4) -> Result<MetricH> {
    let n = v[0].len();
    let mut h = Vec::with_capacity(n);
    let mut h_inv = Vec::with_capacity(n);
    let mut worst = 0.0f64;
    let mut defect = 0.0f64;
    for p in 0..n {
        let vp = [v[0][p], v[1][p], v[2][p], v[3][p]];
        worst = worst.max((mat4::g_dot(&vp, &vp) + 1.0).abs());
        let (hp, hi) = (h_point(&vp), h_inv_point(&vp));
        defect = defect.max(mat4::max_abs_diff(&mat4::mul(&hp, &hi), &mat4::IDENTITY));
        h.push(hp);
        h_inv.push(hi);
    }
    if worst > METRIC_NORMALIZATION_TOL {
        return Err(Error::ConstraintViolation(worst));
    }
    Ok(MetricH {
        h,
        h_inv,
        inverse_defect: defect,
    })
}

/// Extreme eigenvalues of `h` at a point.
///
/// `h` is the identity on the spatial directions orthogonal to `v`; on the plane
/// spanned by `e_0` and the spatial direction of `v` it is a 2x2 block.
pub fn h_eigen_bounds(v: &Vec4) -> (f64, f64) {
    let s2 = v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
    let s = s2.sqrt();
    let a = -1.0 + 2.0 * v[0] * v[0];
    let b = -2.0 * v[0] * s;
    let c = 1.0 + 2.0 * s2;
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let hi = mean + rad;
    // The smaller root from the determinant avoids cancellation for fast flows.
    let lo = (a * c - b * b) / hi;
    (lo.min(1.0), hi.max(1.0))
}

#[inline]
pub fn inner_g(x: &Vec4, y: &Vec4) -> f64 {
    mat4::g_dot(x, y)
}

/// `h_{mu nu} X^mu Y^nu`.
pub fn inner_h(h: &Mat4, x: &Vec4, y: &Vec4) -> f64 {
    let mut s = 0.0;
    for mu in 0..4 {
        for nu in 0..4 {
            s += h[mu][nu] * x[mu] * y[nu];
        }
    }
    s
}

/// `w_{ab} s^{ab}` with both indices of `s` raised by `g`.
pub fn vort_inner(w: &Mat4, s: &Mat4) -> f64 {
    let mut t = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            t += w[a][b] * ETA[a] * ETA[b] * s[a][b];
        }
    }
    t
}

/// Trace contraction `G_a^b H_b^a` of two gradients `G[mu][nu] = grad_mu X^nu`.
pub fn grad_trace_contraction(g: &Mat4, h: &Mat4) -> f64 {
    let mut t = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            t += g[a][b] * h[b][a];
        }
    }
    t
}

/// Full contraction `g_{a a'} g^{b b'} G_b^a H_{b'}^{a'}`.
pub fn grad_inner_g(g: &Mat4, h: &Mat4) -> f64 {
    let mut t = 0.0;
    for b in 0..4 {
        for a in 0..4 {
            t += ETA[a] * ETA[b] * g[b][a] * h[b][a];
        }
    }
    t
}

/// `h_{a a'} (h^{-1})^{b b'} G_b^a H_{b'}^{a'}`.
pub fn grad_inner_h(h: &Mat4, h_inv: &Mat4, g: &Mat4, k: &Mat4) -> f64 {
    // (h^{-1} G h)[b'][a'] contracted with K[b'][a'].
    let t = mat4::mul(&mat4::mul(h_inv, g), h);
    let mut s = 0.0;
    for b in 0..4 {
        for a in 0..4 {
            s += t[b][a] * k[b][a];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{compute_matrices, jacobian_rate, m_derivative, test_maps, Direction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn normalized(sp: [f64; 3]) -> Vec4 {
        [(1.0 + sp.iter().map(|x| x * x).sum::<f64>()).sqrt(), sp[0], sp[1], sp[2]]
    }

    #[test]
    fn index_gymnastics() {
        let x: VectorField4 = [vec![2.0], vec![3.0], vec![0.0], vec![1.0]];
        assert_eq!(lower_index(&x), [vec![-2.0], vec![3.0], vec![0.0], vec![1.0]]);
        assert_eq!(raise_index(&lower_index(&x)), x);
        assert_eq!(mat4::lower(&[1.0, 0.0, 0.0, 0.0]), [-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn grad_div_vort_on_rest_flow() {
        let g = GridSpec::new(16, 8, 9).unwrap();
        let a = vec![mat4::IDENTITY; g.len()];
        let zero: VectorField4 = std::array::from_fn(|_| g.zeros());
        let mut x = zero.clone();
        x[1] = g.sample(|y| (2.0 * PI * y[0]).sin());
        let gr = eta_grad(&g, &a, &x, &zero);
        let div = eta_div(&g, &a, &x, &zero);
        for p in 0..g.len() {
            let y = g.coords(p);
            assert!((gr[p][1][1] - 2.0 * PI * (2.0 * PI * y[0]).cos()).abs() < 2e-2);
            for mu in 0..4 {
                for nu in 0..4 {
                    if (mu, nu) != (1, 1) {
                        assert!(gr[p][mu][nu].abs() < 1e-12);
                    }
                }
            }
            assert_eq!(div[p], mat4::trace(&gr[p]));
        }
        let mut v = zero.clone();
        v[0] = vec![1.0; g.len()];
        assert!(eta_div(&g, &a, &v, &zero).iter().all(|d| d.abs() < 1e-13));
        assert!(eta_vort(&g, &a, &v, &zero)
            .iter()
            .all(|w| mat4::max_abs_diff(w, &mat4::ZERO) < 1e-13));
    }

    fn gradient_vorticity(n: usize) -> f64 {
        let g = GridSpec::new(n, n, n + 1).unwrap();
        let s = test_maps::nonlinear(&g, 0.3);
        let m = compute_matrices(&s, &g).unwrap();
        let phi = g.sample(|y| (2.0 * PI * y[0]).cos() * (2.0 * PI * y[1]).sin() * y[2] * y[2]);
        // phi is tau-independent, so its tau-derivative vanishes.
        let dphi: [ScalarField; 3] = std::array::from_fn(|k| g.partial(&phi, k + 1));
        let x_low: VectorField4 = std::array::from_fn(|mu| {
            (0..g.len())
                .map(|p| (1..4).map(|k| m.a[p][mu][k] * dphi[k - 1][p]).sum())
                .collect()
        });
        let x = raise_index(&x_low);
        // d_tau of A_mu^K d_K phi comes from d_tau A.
        let acc: VectorField4 = std::array::from_fn(|_| g.zeros());
        let da = crate::kinematics::differentiate_a(&m, &m_derivative(&s, &g, Direction::Tau, Some(&acc)));
        let dx_low: VectorField4 = std::array::from_fn(|mu| {
            (0..g.len())
                .map(|p| (1..4).map(|k| da[p][mu][k] * dphi[k - 1][p]).sum())
                .collect()
        });
        let w = eta_vort(&g, &m.a, &x, &raise_index(&dx_low));
        w.iter().map(|w| mat4::max_abs_diff(w, &mat4::ZERO)).fold(0.0, f64::max)
    }

    #[test]
    fn vorticity_annihilates_gradients() {
        let (a, b) = (gradient_vorticity(16), gradient_vorticity(32));
        assert!(a / b >= 12.0, "ratio {}", a / b);
    }

    #[test]
    fn divergence_of_v_matches_jacobian_rate() {
        let g = GridSpec::new(16, 16, 17).unwrap();
        let s = test_maps::nonlinear(&g, 0.2);
        let m = compute_matrices(&s, &g).unwrap();
        let acc: VectorField4 = std::array::from_fn(|_| g.zeros());
        let rate = jacobian_rate(&m, &m_derivative(&s, &g, Direction::Tau, Some(&acc)));
        let div = eta_div(&g, &m.a, &s.v, &acc);
        for p in 0..g.len() {
            assert!((div[p] - rate[p] / m.j[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn vorticity_is_antisymmetric() {
        let g = GridSpec::new(16, 16, 17).unwrap();
        let s = test_maps::nonlinear(&g, 0.2);
        let m = compute_matrices(&s, &g).unwrap();
        let w = eta_vort(&g, &m.a, &s.v, &s.eta);
        for wp in &w {
            assert!(mat4::max_abs_diff(wp, &mat4::scale(&mat4::transpose(wp), -1.0)) < 1e-15);
        }
    }

    #[test]
    fn flat_operators() {
        let g = GridSpec::new(16, 16, 9).unwrap();
        let y = [g.sample(|y| (2.0 * PI * y[1]).sin()), g.zeros(), g.zeros()];
        let div = flat_div3(&g, &y);
        assert!(div.iter().all(|d| d.abs() < 1e-12));
        let w = flat_vort3(&g, &y);
        for p in 0..g.len() {
            let c = 2.0 * PI * (2.0 * PI * g.coords(p)[1]).cos();
            assert!((w[p][0][1] + c).abs() < 2e-2);
            assert!((w[p][1][0] - c).abs() < 2e-2);
        }
        let c = [vec![1.0; g.len()], vec![2.0; g.len()], vec![-1.0; g.len()]];
        assert!(flat_div3(&g, &c).iter().all(|d| d.abs() < 1e-12));
        let psi = g.sample(|y| (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).cos() * y[2].powi(3));
        let grad = [g.partial(&psi, 1), g.partial(&psi, 2), g.partial(&psi, 3)];
        let w = flat_vort3(&g, &grad);
        // Distinct-axis stencils commute exactly on the grid.
        assert!(w.iter().flatten().flatten().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn metric_examples() {
        let h = h_point(&[1.0, 0.0, 0.0, 0.0]);
        assert!(mat4::max_abs_diff(&h, &mat4::IDENTITY) < 1e-15);
        let v = [1.25, 0.75, 0.0, 0.0];
        let h = h_point(&v);
        assert!((h[0][0] - 17.0 / 8.0).abs() < 1e-15);
        assert!((h[0][1] + 15.0 / 8.0).abs() < 1e-15);
        assert!((h[1][1] - 17.0 / 8.0).abs() < 1e-15);
        assert_eq!((h[2][2], h[3][3]), (1.0, 1.0));
        assert!((h[0][0] * h[1][1] - h[0][1] * h[1][0] - 1.0).abs() < 1e-14);
        let (lo, hi) = h_eigen_bounds(&v);
        assert!((lo - 0.25).abs() < 1e-12 && (hi - 4.0).abs() < 1e-12);
        assert_eq!(h_eigen_bounds(&[1.0, 0.0, 0.0, 0.0]), (1.0, 1.0));
        let bad: VectorField4 = [vec![1.1], vec![0.0], vec![0.0], vec![0.0]];
        assert!(matches!(metric_h(&bad), Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn metric_inverse_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let v = normalized([rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
            let p = mat4::mul(&h_point(&v), &h_inv_point(&v));
            assert!(mat4::max_abs_diff(&p, &mat4::IDENTITY) < 1e-10);
        }
    }

    #[test]
    fn eigen_bounds_positive_and_reciprocal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let dir: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let r = rng.gen_range(0.0..10.0) / dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
            let v = normalized([dir[0] * r, dir[1] * r, dir[2] * r]);
            let (lo, hi) = h_eigen_bounds(&v);
            assert!(lo > 0.0);
            if v[1..].iter().any(|x| x.abs() > 1e-6) {
                assert!((lo * hi - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let v = normalized(std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            assert!((inner_g(&v, &v) + 1.0).abs() < 1e-12);
            let x: Vec4 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let h = h_point(&v);
            let d = inner_h(&h, &x, &x) - inner_g(&x, &x) - 2.0 * inner_g(&v, &x).powi(2);
            assert!(d.abs() < 1e-12 * (1.0 + inner_h(&h, &x, &x)));
            assert!(inner_h(&h, &x, &x) > 0.0);
        }
        let h = h_point(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(inner_h(&h, &[0.0; 4], &[0.0; 4]), 0.0);
    }

    #[test]
    fn gradient_decomposition_identity() {
        // G_b^a G_a^b = <G, G>_g - (1/2) <vort, vort>_g for the lowered antisymmetrization.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let g: Mat4 = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
            let lowered: Mat4 = std::array::from_fn(|mu| std::array::from_fn(|nu| ETA[nu] * g[mu][nu]));
            let w = antisymmetrize(&lowered);
            let lhs = grad_trace_contraction(&g, &g);
            let rhs = grad_inner_g(&g, &g) - 0.5 * vort_inner(&w, &w);
            assert!((lhs - rhs).abs() < 1e-13, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn h_contraction_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let v = normalized(std::array::from_fn(|_| rng.gen_range(-4.0..4.0)));
            let g: Mat4 = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
            assert!(grad_inner_h(&h_point(&v), &h_inv_point(&v), &g, &g) > 0.0);
        }
    }
}
