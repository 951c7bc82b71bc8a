//! Truncated multivariate Taylor polynomials in four variables, used to build
//! exact manufactured fields for algebraic identity checks.

use std::collections::HashMap;
use std::rc::Rc;

#[derive(Debug)]
struct Basis {
    order: usize,
    exps: Vec<[u8; 4]>,
    index: HashMap<[u8; 4], usize>,
}

impl Basis {
    fn new(order: usize) -> Self {
        let mut exps = Vec::new();
        for total in 0..=order {
            for a in 0..=total {
                for b in 0..=total - a {
                    for c in 0..=total - a - b {
                        exps.push([a as u8, b as u8, c as u8, (total - a - b - c) as u8]);
                    }
                }
            }
        }
        let index = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        Self { order, exps, index }
    }
}

/// Taylor polynomial about a point, exact through total degree `valid`.
#[derive(Debug, Clone)]
pub struct Jet {
    basis: Rc<Basis>,
    c: Vec<f64>,
    valid: usize,
}

/// Factory for jets of a fixed storage order.
#[derive(Debug, Clone)]
pub struct JetSpace {
    basis: Rc<Basis>,
}

impl JetSpace {
    pub fn new(order: usize) -> Self {
        Self {
            basis: Rc::new(Basis::new(order)),
        }
    }

    pub fn constant(&self, x: f64) -> Jet {
        let mut c = vec![0.0; self.basis.exps.len()];
        c[0] = x;
        Jet {
            basis: self.basis.clone(),
            c,
            valid: self.basis.order,
        }
    }

    /// The coordinate `x_i = x0_i + dx_i`.
    pub fn variable(&self, i: usize, x0: f64) -> Jet {
        let mut j = self.constant(x0);
        if self.basis.order > 0 {
            let mut e = [0u8; 4];
            e[i] = 1;
            j.c[self.basis.index[&e]] = 1.0;
        }
        j
    }
}

impl Jet {
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn valid_order(&self) -> usize {
        self.valid
    }

    fn zip(&self, o: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        Jet {
            basis: self.basis.clone(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| f(*a, *b)).collect(),
            valid: self.valid.min(o.valid),
        }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            basis: self.basis.clone(),
            c: self.c.iter().map(|x| x * s).collect(),
            valid: self.valid,
        }
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let b = &self.basis;
        let valid = self.valid.min(o.valid);
        let mut c = vec![0.0; b.exps.len()];
        for (i, ei) in b.exps.iter().enumerate() {
            if self.c[i] == 0.0 {
                continue;
            }
            let di: u8 = ei.iter().sum();
            for (j, ej) in b.exps.iter().enumerate() {
                let dj: u8 = ej.iter().sum();
                if (di + dj) as usize > valid {
                    break;
                }
                if o.c[j] == 0.0 {
                    continue;
                }
                let e = [ei[0] + ej[0], ei[1] + ej[1], ei[2] + ej[2], ei[3] + ej[3]];
                c[b.index[&e]] += self.c[i] * o.c[j];
            }
        }
        Jet {
            basis: b.clone(),
            c,
            valid,
        }
    }

    /// `sum_k a_k (x - x0)^k` applied to the non-constant part.
    fn compose(&self, coeffs: &[f64]) -> Jet {
        let mut d = self.clone();
        d.c[0] = 0.0;
        let mut out = JetSpace { basis: self.basis.clone() }.constant(coeffs[0]);
        out.valid = self.valid;
        let mut pow = out.clone();
        pow.c[0] = 1.0;
        for a in coeffs.iter().skip(1) {
            pow = pow.mul(&d);
            out = out.add(&pow.scale(*a));
        }
        out
    }

    pub fn powf(&self, r: f64) -> Jet {
        let x0 = self.value();
        let mut coeffs = vec![x0.powf(r)];
        let mut binom = 1.0;
        for k in 1..=self.valid {
            binom *= (r - (k - 1) as f64) / k as f64;
            coeffs.push(binom * x0.powf(r - k as f64));
        }
        self.compose(&coeffs)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet {
        self.powf(-1.0)
    }

    /// Partial derivative along variable `i`; validity drops by one.
    pub fn d(&self, i: usize) -> Jet {
        let b = &self.basis;
        let mut c = vec![0.0; b.exps.len()];
        for (k, e) in b.exps.iter().enumerate() {
            if e[i] == 0 || self.c[k] == 0.0 {
                continue;
            }
            let mut lower = *e;
            lower[i] -= 1;
            c[b.index[&lower]] += e[i] as f64 * self.c[k];
        }
        Jet {
            basis: b.clone(),
            c,
            valid: self.valid.saturating_sub(1),
        }
    }
}
