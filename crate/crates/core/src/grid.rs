//! Material grid on the slab `T^2 x [0,1]`, finite-difference stencils and quadrature.
//!
//! Axes 1 and 2 are periodic with `n` nodes on `[0,1)`. Axis 3 is vertex
//! centred with `n3` nodes on `[0,1]`, both boundary faces included.
//! Fields are flat arrays with `i1` fastest, then `i2`, then `i3`.

use crate::error::{Error, Result};

pub type ScalarField = Vec<f64>;
pub type VectorField4 = [ScalarField; 4];

/// One-sided first-derivative rows used near the vertical boundaries,
/// in units of `1/(12 h)`. All are exact on quartics.
const ROW0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const ROW1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        if n1 < 8 || n2 < 8 || n3 < 9 {
            return Err(Error::Domain(format!(
                "grid ({n1}, {n2}, {n3}) too small: need n1, n2 >= 8 and n3 >= 9"
            )));
        }
        Ok(Self {
            n1,
            n2,
            n3,
            h1: 1.0 / n1 as f64,
            h2: 1.0 / n2 as f64,
            h3: 1.0 / (n3 - 1) as f64,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize, i3: usize) -> usize {
        i1 + self.n1 * (i2 + self.n2 * i3)
    }

    #[inline]
    pub fn unflatten(&self, k: usize) -> (usize, usize, usize) {
        let i1 = k % self.n1;
        let r = k / self.n1;
        (i1, r % self.n2, r / self.n2)
    }

    /// Material coordinates of node `k`.
    #[inline]
    pub fn coords(&self, k: usize) -> [f64; 3] {
        let (i1, i2, i3) = self.unflatten(k);
        [
            i1 as f64 * self.h1,
            i2 as f64 * self.h2,
            i3 as f64 * self.h3,
        ]
    }

    pub fn h_min(&self) -> f64 {
        self.h1.min(self.h2).min(self.h3)
    }

    /// Same grid with every axis refined by a factor two.
    pub fn refined(&self) -> Self {
        GridSpec::new(2 * self.n1, 2 * self.n2, 2 * self.n3 - 1).expect("refinement of a valid grid")
    }

    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> ScalarField {
        (0..self.len()).map(|k| f(self.coords(k))).collect()
    }

    pub fn zeros(&self) -> ScalarField {
        vec![0.0; self.len()]
    }

    /// First derivative along `axis` in `{1, 2, 3}`.
    pub fn partial(&self, f: &[f64], axis: usize) -> ScalarField {
        match axis {
            1 | 2 => self.partial_horizontal(f, axis),
            3 => self.partial_vertical(f),
            _ => panic!("axis must be 1, 2 or 3, got {axis}"),
        }
    }

    /// Fourth-order centred periodic difference along axis 1 or 2.
    pub fn partial_horizontal(&self, f: &[f64], axis: usize) -> ScalarField {
        assert_eq!(f.len(), self.len());
        let (n1, n2, n3) = (self.n1, self.n2, self.n3);
        let mut out = vec![0.0; f.len()];
        match axis {
            1 => {
                let c = 1.0 / (12.0 * self.h1);
                for row in 0..n2 * n3 {
                    let base = row * n1;
                    let r = &f[base..base + n1];
                    for i in 0..n1 {
                        let p1 = r[(i + 1) % n1];
                        let p2 = r[(i + 2) % n1];
                        let m1 = r[(i + n1 - 1) % n1];
                        let m2 = r[(i + n1 - 2) % n1];
                        out[base + i] = c * (-p2 + 8.0 * p1 - 8.0 * m1 + m2);
                    }
                }
            }
            2 => {
                let c = 1.0 / (12.0 * self.h2);
                for i3 in 0..n3 {
                    for i2 in 0..n2 {
                        let at = |j: usize| (j % n2) * n1 + i3 * n1 * n2;
                        let (p1, p2) = (at(i2 + 1), at(i2 + 2));
                        let (m1, m2) = (at(i2 + n2 - 1), at(i2 + n2 - 2));
                        let o = at(i2);
                        for i1 in 0..n1 {
                            out[o + i1] = c
                                * (-f[p2 + i1] + 8.0 * f[p1 + i1] - 8.0 * f[m1 + i1] + f[m2 + i1]);
                        }
                    }
                }
            }
            _ => panic!("axis {axis} is not periodic"),
        }
        out
    }

    /// Fourth-order vertical difference: centred inside, one-sided within two
    /// nodes of either face.
    pub fn partial_vertical(&self, f: &[f64]) -> ScalarField {
        assert_eq!(f.len(), self.len());
        let plane = self.n1 * self.n2;
        let n3 = self.n3;
        let c = 1.0 / (12.0 * self.h3);
        let mut out = vec![0.0; f.len()];
        for i3 in 0..n3 {
            let (start, w): (usize, [f64; 5]) = match i3 {
                0 => (0, ROW0),
                1 => (0, ROW1),
                _ if i3 == n3 - 1 => (n3 - 5, mirror(ROW0)),
                _ if i3 == n3 - 2 => (n3 - 5, mirror(ROW1)),
                _ => (i3 - 2, [1.0, -8.0, 0.0, 8.0, -1.0]),
            };
            let o = i3 * plane;
            for (j, wj) in w.iter().enumerate() {
                if *wj == 0.0 {
                    continue;
                }
                let src = (start + j) * plane;
                let s = c * wj;
                for p in 0..plane {
                    out[o + p] += s * f[src + p];
                }
            }
        }
        out
    }

    /// Quadrature weight of every node: trapezoid in `y3`, rectangle in `y1, y2`.
    pub fn weights(&self) -> ScalarField {
        let plane = self.n1 * self.n2;
        let base = self.h1 * self.h2 * self.h3;
        let mut w = vec![base; self.len()];
        for p in 0..plane {
            w[p] *= 0.5;
            w[(self.n3 - 1) * plane + p] *= 0.5;
        }
        w
    }

    /// Approximates the integral of `f` over the slab.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len());
        let plane = self.n1 * self.n2;
        let mut total = 0.0;
        for i3 in 0..self.n3 {
            let s: f64 = f[i3 * plane..(i3 + 1) * plane].iter().sum();
            let end = i3 == 0 || i3 == self.n3 - 1;
            total += if end { 0.5 * s } else { s };
        }
        total * self.h1 * self.h2 * self.h3
    }

    /// Squared L2 norm.
    pub fn l2_sq(&self, f: &[f64]) -> f64 {
        let sq: Vec<f64> = f.iter().map(|x| x * x).collect();
        self.integrate(&sq)
    }

    /// Values on the face `i3 = 0` (`top = false`) or `i3 = n3 - 1`.
    pub fn face(&self, f: &[f64], top: bool) -> Vec<f64> {
        let plane = self.n1 * self.n2;
        let i3 = if top { self.n3 - 1 } else { 0 };
        f[i3 * plane..(i3 + 1) * plane].to_vec()
    }

    /// Distance of every node to the boundary.
    pub fn distance_field(&self) -> ScalarField {
        self.sample(|y| y[2].min(1.0 - y[2]))
    }
}

fn mirror(row: [f64; 5]) -> [f64; 5] {
    let mut m = [0.0; 5];
    for j in 0..5 {
        m[4 - j] = -row[j];
    }
    m
}

/// `min(y3, 1 - y3)` for `y3` in `[0, 1]`.
pub fn distance_to_boundary(y3: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y3) {
        return Err(Error::Domain(format!("y3 = {y3} outside [0, 1]")));
    }
    Ok(y3.min(1.0 - y3))
}
