//! Sobolev, weighted, fractional and boundary norms of grid fields.

use crate::grid::{GridSpec, ScalarField};
use rustfft::{num_complex::Complex, FftPlanner};

/// Calls `visit(index, field)` once for every multi-index of order `<= k`,
/// each derivative obtained by one stencil application from its parent.
pub fn for_each_derivative(grid: &GridSpec, f: &[f64], k: usize, mut visit: impl FnMut([usize; 3], &[f64])) {
    fn rec(
        grid: &GridSpec,
        f: &[f64],
        idx: [usize; 3],
        first_axis: usize,
        left: usize,
        visit: &mut dyn FnMut([usize; 3], &[f64]),
    ) {
        visit(idx, f);
        if left == 0 {
            return;
        }
        for axis in first_axis..3 {
            let d = grid.partial(f, axis + 1);
            let mut next = idx;
            next[axis] += 1;
            rec(grid, &d, next, axis, left - 1, visit);
        }
    }
    rec(grid, f, [0; 3], 0, k, &mut visit);
}

/// `d1^i1 d2^i2 d3^i3 f` by repeated first-derivative stencils.
pub fn derivative(grid: &GridSpec, f: &[f64], idx: [usize; 3]) -> ScalarField {
    let mut out = f.to_vec();
    for (axis, n) in idx.iter().enumerate() {
        for _ in 0..*n {
            out = grid.partial(&out, axis + 1);
        }
    }
    out
}

/// The `m + 1` distinct tangential multi-indices `(i, m - i, 0)`.
pub fn tangential_indices(m: usize) -> Vec<[usize; 3]> {
    (0..=m).map(|i| [i, m - i, 0]).collect()
}

pub fn sobolev_sq(grid: &GridSpec, f: &[f64], k: usize) -> f64 {
    let mut s = 0.0;
    for_each_derivative(grid, f, k, |_, d| s += grid.l2_sq(d));
    s
}

/// Square root of the sum of `||d^i f||^2` over `|i| <= k`.
pub fn sobolev_norm(grid: &GridSpec, f: &[f64], k: usize) -> f64 {
    sobolev_sq(grid, f, k).sqrt()
}

pub fn vector_sobolev_sq(grid: &GridSpec, comps: &[ScalarField], k: usize) -> f64 {
    comps.iter().map(|c| sobolev_sq(grid, c, k)).sum()
}

/// Squared `H^k` norm of `y^axis + disp` where `y` is the node coordinate; the
/// coordinate contributes its nodal values and a unit first derivative.
pub fn shifted_sobolev_sq(grid: &GridSpec, disp: &[f64], axis: usize, k: usize) -> f64 {
    let full: ScalarField = (0..grid.len()).map(|p| grid.coords(p)[axis - 1] + disp[p]).collect();
    let mut s = grid.l2_sq(&full);
    if k == 0 {
        return s;
    }
    for_each_derivative(grid, disp, k, |idx, d| {
        let order: usize = idx.iter().sum();
        if order == 0 {
            return;
        }
        if order == 1 && idx[axis - 1] == 1 {
            let shifted: ScalarField = d.iter().map(|x| x + 1.0).collect();
            s += grid.l2_sq(&shifted);
        } else {
            s += grid.l2_sq(d);
        }
    });
    s
}

/// Squared `H^k` norm of the full map `(0, y) + eta`, `eta` a displacement.
pub fn full_map_sobolev_sq(grid: &GridSpec, eta: &[ScalarField; 4], k: usize) -> f64 {
    sobolev_sq(grid, &eta[0], k) + (1..4).map(|a| shifted_sobolev_sq(grid, &eta[a], a, k)).sum::<f64>()
}

/// `H^{k + 1/2}` surrogate: geometric mean of the neighbouring integer norms.
pub fn half_norm_from_sq(lower_sq: f64, upper_sq: f64) -> f64 {
    (lower_sq.sqrt() * upper_sq.sqrt()).sqrt()
}

/// `(int d^k (f^2 + |D f|^2))^{1/2}` with `d` the distance to the boundary.
pub fn weighted_h1_norm(grid: &GridSpec, f: &[f64], k: u32) -> f64 {
    let d: [ScalarField; 3] = std::array::from_fn(|a| grid.partial(f, a + 1));
    let w = grid.distance_field();
    let integrand: ScalarField = (0..grid.len())
        .map(|p| w[p].powi(k as i32) * (f[p] * f[p] + d[0][p].powi(2) + d[1][p].powi(2) + d[2][p].powi(2)))
        .collect();
    grid.integrate(&integrand).sqrt()
}

/// Interior `H^{1/2}` surrogate `(||f||_{L2} ||f||_{H1})^{1/2}`.
pub fn fractional_interior_norm(grid: &GridSpec, f: &[f64]) -> f64 {
    half_norm_from_sq(grid.l2_sq(f), sobolev_sq(grid, f, 1))
}

/// `H^{-1/2}` norm of a periodic face field sampled on an `n1 x n2` grid:
/// `sqrt(sum (1 + |2 pi k|^2)^{-1/2} |f_k|^2)` with normalized DFT coefficients.
pub fn boundary_fractional_norm(n1: usize, n2: usize, trace: &[f64]) -> f64 {
    assert_eq!(trace.len(), n1 * n2);
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = trace.iter().map(|x| Complex::new(*x, 0.0)).collect();
    let row = planner.plan_fft_forward(n1);
    for chunk in buf.chunks_exact_mut(n1) {
        row.process(chunk);
    }
    let col = planner.plan_fft_forward(n2);
    let mut line = vec![Complex::new(0.0, 0.0); n2];
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            line[i2] = buf[i1 + n1 * i2];
        }
        col.process(&mut line);
        for i2 in 0..n2 {
            buf[i1 + n1 * i2] = line[i2];
        }
    }
    let signed = |k: usize, n: usize| if 2 * k <= n { k as f64 } else { k as f64 - n as f64 };
    let norm = 1.0 / (n1 * n2) as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut s = 0.0;
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            let (k1, k2) = (two_pi * signed(i1, n1), two_pi * signed(i2, n2));
            let c = buf[i1 + n1 * i2] * norm;
            s += c.norm_sqr() / (1.0 + k1 * k1 + k2 * k2).sqrt();
        }
    }
    s.sqrt()
}

/// `H^{-1/2}` norms of `f` restricted to the lower and upper faces.
pub fn face_fractional_norms(grid: &GridSpec, f: &[f64]) -> [f64; 2] {
    [false, true].map(|top| boundary_fractional_norm(grid.n1, grid.n2, &grid.face(f, top)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_norms() {
        let g = GridSpec::new(8, 8, 9).unwrap();
        let one = vec![1.0; g.len()];
        for k in 0..=4 {
            assert_relative_eq!(sobolev_norm(&g, &one, k), 1.0, max_relative = 1e-13);
        }
        assert_relative_eq!(fractional_interior_norm(&g, &one), 1.0, max_relative = 1e-13);
        assert_relative_eq!(boundary_fractional_norm(8, 8, &vec![1.0; 64]), 1.0, max_relative = 1e-14);
        let c: Vec<f64> = vec![-3.0; g.len()];
        assert_relative_eq!(fractional_interior_norm(&g, &c), 3.0, max_relative = 1e-13);
    }

    #[test]
    fn derivative_tree_counts_each_multi_index_once() {
        let g = GridSpec::new(8, 8, 9).unwrap();
        let mut seen = Vec::new();
        for_each_derivative(&g, &g.zeros(), 4, |i, _| seen.push(i));
        assert_eq!(seen.len(), 35);
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 35);
        let f = g.sample(|y| (2.0 * PI * y[0]).sin() * y[2] * y[2]);
        for_each_derivative(&g, &f, 3, |i, d| assert_eq!(d, derivative(&g, &f, i).as_slice()));
    }

    #[test]
    fn cosine_h1_norm() {
        let g = GridSpec::new(16, 16, 17).unwrap();
        let f = g.sample(|y| (2.0 * PI * y[0]).cos());
        assert!((sobolev_norm(&g, &f, 1) - 4.4952).abs() < 1e-3);
        let fine = GridSpec::new(64, 8, 9).unwrap();
        let ff = fine.sample(|y| (2.0 * PI * y[0]).cos());
        assert!((sobolev_norm(&fine, &ff, 1) - (0.5 + 2.0 * PI * PI).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn weighted_norm_examples() {
        let g = GridSpec::new(8, 8, 33).unwrap();
        assert!((weighted_h1_norm(&g, &vec![1.0; g.len()], 2) - (1.0f64 / 12.0).sqrt()).abs() < 1e-3);
        assert_eq!(weighted_h1_norm(&g, &g.zeros(), 1), 0.0);
    }

    #[test]
    fn shifted_norm_matches_direct_evaluation() {
        let g = GridSpec::new(8, 8, 9).unwrap();
        let disp = g.sample(|y| 0.01 * (2.0 * PI * y[1]).cos() * y[2]);
        // Along axis 3 the coordinate is a grid polynomial, so stencils reproduce it.
        let full: Vec<f64> = (0..g.len()).map(|p| g.coords(p)[2] + disp[p]).collect();
        assert_relative_eq!(shifted_sobolev_sq(&g, &disp, 3, 4), sobolev_sq(&g, &full, 4), max_relative = 1e-12);
        // The reference map alone: ||y^a||^2 + 1 per component.
        let zero = g.zeros();
        let sq = shifted_sobolev_sq(&g, &zero, 1, 2);
        let l2: f64 = g.l2_sq(&g.sample(|y| y[0]));
        assert_relative_eq!(sq, l2 + 1.0, max_relative = 1e-14);
    }

    #[test]
    fn boundary_norm_of_single_mode() {
        let n = 16;
        let f: Vec<f64> = (0..n * n).map(|p| (2.0 * PI * (p % n) as f64 / n as f64).cos()).collect();
        let expected = 0.5f64.sqrt() * (1.0 + 4.0 * PI * PI).powf(-0.25);
        assert_relative_eq!(boundary_fractional_norm(n, n, &f), expected, max_relative = 1e-12);
        let l2 = (f.iter().map(|x| x * x).sum::<f64>() / (n * n) as f64).sqrt();
        assert!(boundary_fractional_norm(n, n, &f) <= l2);
    }

    proptest::proptest! {
        #[test]
        fn norm_orderings(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = GridSpec::new(8, 8, 9).unwrap();
            let f: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norms: Vec<f64> = (0..=4).map(|k| sobolev_norm(&g, &f, k)).collect();
            proptest::prop_assert!(norms.windows(2).all(|w| w[0] <= w[1]));
            let half = fractional_interior_norm(&g, &f);
            proptest::prop_assert!(norms[0] <= half * (1.0 + 1e-12) && half <= norms[1] * (1.0 + 1e-12));
            proptest::prop_assert!(weighted_h1_norm(&g, &f, 2) <= weighted_h1_norm(&g, &f, 1));
            let face = g.face(&f, true);
            let l2 = (face.iter().map(|x| x * x).sum::<f64>() / face.len() as f64).sqrt();
            proptest::prop_assert!(boundary_fractional_norm(8, 8, &face) <= l2 * (1.0 + 1e-12));
        }
    }
}
