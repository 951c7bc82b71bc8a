//! Brute-force re-evaluation of the high-order norm and energy on one slice,
//! reading the snapshot bytes directly. Shares no code with the library.

use std::collections::HashMap;

pub struct Slice {
    pub n: [usize; 3],
    pub tau: f64,
    pub fields: HashMap<String, Vec<Vec<f64>>>,
}

fn u32_at(b: &[u8], at: &mut usize) -> usize {
    let v = u32::from_le_bytes(b[*at..*at + 4].try_into().unwrap());
    *at += 4;
    v as usize
}

fn f64_at(b: &[u8], at: &mut usize) -> f64 {
    let v = f64::from_le_bytes(b[*at..*at + 8].try_into().unwrap());
    *at += 8;
    v
}

pub fn parse(bytes: &[u8]) -> Slice {
    assert_eq!(&bytes[..8], b"RELEUv1\0");
    let mut at = 8;
    let n = [u32_at(bytes, &mut at), u32_at(bytes, &mut at), u32_at(bytes, &mut at)];
    let tau = f64_at(bytes, &mut at);
    let count = u32_at(bytes, &mut at);
    let len = n[0] * n[1] * n[2];
    let mut fields = HashMap::new();
    for _ in 0..count {
        let l = u32_at(bytes, &mut at);
        let name = String::from_utf8(bytes[at..at + l].to_vec()).unwrap();
        at += l;
        let ncomp = u32_at(bytes, &mut at);
        let comps = (0..ncomp).map(|_| (0..len).map(|_| f64_at(bytes, &mut at)).collect()).collect();
        fields.insert(name, comps);
    }
    assert_eq!(at, bytes.len());
    Slice { n, tau, fields }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let m = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= m * a[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// First-derivative weights at offset `x0` from the integer nodes `xs`.
fn fd_weights(xs: &[f64], x0: f64, h: f64) -> Vec<f64> {
    let m = xs.len();
    let a: Vec<Vec<f64>> = (0..m).map(|r| xs.iter().map(|x| (x - x0).powi(r as i32)).collect()).collect();
    let mut b = vec![0.0; m];
    b[1] = 1.0;
    solve(a, b).into_iter().map(|w| w / h).collect()
}

pub struct Grid {
    pub n: [usize; 3],
    pub h: [f64; 3],
    /// Centred weights for axes 1 and 2 at unit spacing.
    periodic: Vec<f64>,
    /// Per vertical node: first source node and five weights.
    vertical: Vec<(usize, Vec<f64>)>,
}

impl Grid {
    pub fn new(n: [usize; 3]) -> Self {
        let h = [1.0 / n[0] as f64, 1.0 / n[1] as f64, 1.0 / (n[2] - 1) as f64];
        let five: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let periodic = fd_weights(&five, 2.0, 1.0);
        let vertical = (0..n[2])
            .map(|i| {
                let start = i.saturating_sub(2).min(n[2] - 5);
                (start, fd_weights(&five, (i - start) as f64, h[2]))
            })
            .collect();
        Self { n, h, periodic, vertical }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    fn at(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    pub fn d(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let [n1, n2, n3] = self.n;
        let mut out = vec![0.0; f.len()];
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    let mut s = 0.0;
                    match axis {
                        1 => {
                            for (o, w) in self.periodic.iter().enumerate() {
                                s += w * f[self.at((i + n1 + o - 2) % n1, j, k)];
                            }
                            s /= self.h[0];
                        }
                        2 => {
                            for (o, w) in self.periodic.iter().enumerate() {
                                s += w * f[self.at(i, (j + n2 + o - 2) % n2, k)];
                            }
                            s /= self.h[1];
                        }
                        _ => {
                            let (start, w) = &self.vertical[k];
                            for (o, wo) in w.iter().enumerate() {
                                s += wo * f[self.at(i, j, start + o)];
                            }
                        }
                    }
                    out[self.at(i, j, k)] = s;
                }
            }
        }
        out
    }

    pub fn dmulti(&self, f: &[f64], idx: [usize; 3]) -> Vec<f64> {
        let mut g = f.to_vec();
        for (axis, count) in idx.iter().enumerate() {
            for _ in 0..*count {
                g = self.d(&g, axis + 1);
            }
        }
        g
    }

    pub fn integral(&self, f: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.n[2] {
            let w = if k == 0 || k == self.n[2] - 1 { 0.5 } else { 1.0 };
            for j in 0..self.n[1] {
                for i in 0..self.n[0] {
                    s += w * f[self.at(i, j, k)];
                }
            }
        }
        s * self.h[0] * self.h[1] * self.h[2]
    }

    fn l2sq(&self, f: &[f64]) -> f64 {
        self.integral(&f.iter().map(|x| x * x).collect::<Vec<_>>())
    }

    fn weighted_sq(&self, f: &[f64], w: &[f64]) -> f64 {
        self.integral(&f.iter().zip(w).map(|(x, w)| w * x * x).collect::<Vec<_>>())
    }

    fn multi_indices(k: usize) -> Vec<[usize; 3]> {
        let mut v = Vec::new();
        for a in 0..=k {
            for b in 0..=k - a {
                for c in 0..=k - a - b {
                    v.push([a, b, c]);
                }
            }
        }
        v
    }

    pub fn hk_sq(&self, f: &[f64], k: usize) -> f64 {
        Self::multi_indices(k).into_iter().map(|i| self.l2sq(&self.dmulti(f, i))).sum()
    }

    /// `H^k` square of `y^axis + disp` with the coordinate differentiated exactly.
    fn coord_hk_sq(&self, disp: &[f64], axis: usize, k: usize) -> f64 {
        let mut s = 0.0;
        for idx in Self::multi_indices(k) {
            let mut d = self.dmulti(disp, idx);
            let order: usize = idx.iter().sum();
            for (p, x) in d.iter_mut().enumerate() {
                let (i, j, kk) = (p % self.n[0], (p / self.n[0]) % self.n[1], p / (self.n[0] * self.n[1]));
                let y = [i as f64 * self.h[0], j as f64 * self.h[1], kk as f64 * self.h[2]];
                if order == 0 {
                    *x += y[axis - 1];
                } else if order == 1 && idx[axis - 1] == 1 {
                    *x += 1.0;
                }
            }
            s += self.l2sq(&d);
        }
        s
    }
}

const ETA: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

fn inverse4(m: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for c in 0..4 {
        let a: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
        let mut e = vec![0.0; 4];
        e[c] = 1.0;
        let x = solve(a, e);
        for r in 0..4 {
            out[r][c] = x[r];
        }
    }
    out
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for c in 0..4 {
        let piv = (c..4).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        if piv != c {
            a.swap(c, piv);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..4 {
            let f = a[r][c] / a[c][c];
            for k in c..4 {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

pub struct Kinematics {
    pub a: Vec<[[f64; 4]; 4]>,
    pub j: Vec<f64>,
}

fn kinematics(g: &Grid, eta: &[Vec<f64>], v: &[Vec<f64>]) -> Kinematics {
    let d: Vec<Vec<Vec<f64>>> = (1..4).map(|k| eta.iter().map(|c| g.d(c, k)).collect()).collect();
    let mut a = Vec::with_capacity(g.len());
    let mut j = Vec::with_capacity(g.len());
    for p in 0..g.len() {
        let mut m = [[0.0; 4]; 4];
        for nu in 0..4 {
            m[0][nu] = v[nu][p];
            for k in 1..4 {
                m[k][nu] = d[k - 1][nu][p] + if k == nu { 1.0 } else { 0.0 };
            }
        }
        // A = M^-1 with A[nu][K]: rows of A indexed by the spacetime index.
        a.push(inverse4(&m));
        j.push(det4(&m));
    }
    Kinematics { a, j }
}

/// `grad[mu][nu] = A[mu][K] d_K X^nu` with `d_0 X = xt`.
fn lagrangian_grad(g: &Grid, kin: &Kinematics, x: &[Vec<f64>], xt: &[Vec<f64>]) -> Vec<[[f64; 4]; 4]> {
    let d: Vec<Vec<Vec<f64>>> = (1..4).map(|k| x.iter().map(|c| g.d(c, k)).collect()).collect();
    (0..g.len())
        .map(|p| {
            let a = &kin.a[p];
            let mut out = [[0.0; 4]; 4];
            for mu in 0..4 {
                for nu in 0..4 {
                    let mut s = a[mu][0] * xt[nu][p];
                    for k in 1..4 {
                        s += a[mu][k] * d[k - 1][nu][p];
                    }
                    out[mu][nu] = s;
                }
            }
            out
        })
        .collect()
}

fn tangential(m: usize) -> Vec<[usize; 3]> {
    (0..=m).map(|i| [i, m - i, 0]).collect()
}

pub struct OracleValues {
    pub s_lines: [f64; 5],
    pub energy: Vec<f64>,
}

pub fn evaluate(slice: &Slice, p_max: usize) -> OracleValues {
    let g = Grid::new(slice.n);
    let n = g.len();
    let field = |name: &str| slice.fields.get(name).unwrap_or_else(|| panic!("missing {name}")).clone();
    let fr = field("F_ring")[0].clone();
    let v = field("v");
    let eta = field("eta");
    let dt = |k: usize| field(&format!("dtau{k}_eta"));
    let kin = kinematics(&g, &eta, &v);
    let f2: Vec<f64> = fr.iter().map(|x| x * x).collect();

    let mut lines = [0.0; 5];
    for p in 0..=p_max {
        let m = 4 - p;
        let x = dt(2 * p);
        let xt = dt(2 * p + 1);
        lines[0] += if p == 0 {
            g.hk_sq(&x[0], m) + (1..4).map(|a| g.coord_hk_sq(&x[a], a, m)).sum::<f64>()
        } else {
            x.iter().map(|c| g.hk_sq(c, m)).sum::<f64>()
        };
        let jf: Vec<f64> = field(&format!("dtau{}_jinv2", 2 * p))[0].iter().zip(&fr).map(|(a, b)| a * b).collect();
        lines[1] += g.hk_sq(&jf, m);
        let mut comps: Vec<Vec<f64>> = xt.clone();
        for k in 1..4 {
            for c in &x {
                comps.push(g.d(c, k));
            }
        }
        for idx in tangential(m) {
            for c in &comps {
                lines[2] += g.weighted_sq(&g.dmulti(c, idx), &f2);
            }
            for c in &xt {
                lines[2] += g.weighted_sq(&g.dmulti(c, idx), &fr);
            }
        }
    }
    let lower = |x: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        x.iter().enumerate().map(|(mu, c)| c.iter().map(|y| ETA[mu] * y).collect()).collect()
    };
    let grad_v = lagrangian_grad(&g, &kin, &lower(&v), &lower(&dt(2)));
    for mu in 0..4 {
        for nu in 0..4 {
            let w: Vec<f64> = grad_v.iter().map(|gm| gm[mu][nu] - gm[nu][mu]).collect();
            lines[3] += g.hk_sq(&w, 3);
            for idx in tangential(4) {
                lines[4] += g.weighted_sq(&g.dmulti(&w, idx), &f2);
            }
        }
    }

    let f: Vec<f64> = (0..n).map(|p| fr[p] / kin.j[p]).collect();
    let mut energy = Vec::new();
    for p in 0..=p_max {
        let x = dt(2 * p);
        let xt = dt(2 * p + 1);
        let jk = field(&format!("dtau{}_J", 2 * p))[0].clone();
        let mut integrand = vec![0.0; n];
        for idx in tangential(4 - p) {
            let dx: Vec<Vec<f64>> = x.iter().map(|c| g.dmulti(c, idx)).collect();
            let dxt: Vec<Vec<f64>> = xt.iter().map(|c| g.dmulti(c, idx)).collect();
            let dj = g.dmulti(&jk, idx);
            let grad = lagrangian_grad(&g, &kin, &dx, &dxt);
            for q in 0..n {
                let vl: Vec<f64> = (0..4).map(|mu| ETA[mu] * v[mu][q]).collect();
                let h = |a: usize, b: usize| if a == b { ETA[a] } else { 0.0 } + 2.0 * vl[a] * vl[b];
                let hi = |a: usize, b: usize| if a == b { ETA[a] } else { 0.0 } + 2.0 * v[a][q] * v[b][q];
                let mut kin_e = 0.0;
                let mut grad_e = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        kin_e += h(a, b) * dxt[a][q] * dxt[b][q];
                        for c in 0..4 {
                            for d in 0..4 {
                                grad_e += h(a, c) * hi(b, d) * grad[q][b][a] * grad[q][d][c];
                            }
                        }
                    }
                }
                let om = 1.0 - f[q];
                let j = kin.j[q];
                integrand[q] += 0.5
                    * (fr[q] / (om * om) * kin_e
                        + fr[q] * fr[q] / (j * om * om) * grad_e
                        + fr[q] * fr[q] * (1.0 + f[q]) / (om * om * om) / (j * j * j) * dj[q] * dj[q]);
            }
        }
        energy.push(g.integral(&integrand));
    }
    OracleValues { s_lines: lines, energy }
}
