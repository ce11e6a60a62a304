use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

/// Truncated Taylor series about a point: `c[k] = f^(k)(x0) / k!`.
///
/// All arithmetic is exact up to the truncation order, which makes jets the
/// carrier for every analytic derivative in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    c: Vec<C64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Jet {
    pub fn from_coeffs(c: Vec<C64>) -> Self {
        assert!(!c.is_empty(), "jet needs at least one coefficient");
        Self { c }
    }

    /// Build from derivative values f, f', f'', ...
    pub fn from_derivs(d: &[C64]) -> Self {
        Self::from_coeffs(d.iter().enumerate().map(|(k, v)| v / factorial(k)).collect())
    }

    pub fn constant(v: C64, order: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        c[0] = v;
        Self { c }
    }

    /// The identity map t -> x0 + t.
    pub fn variable(x0: C64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.c[1] = C64::new(1.0, 0.0);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.c
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn deriv(&self, k: usize) -> C64 {
        self.c[k] * factorial(k)
    }

    pub fn derivs(&self) -> Vec<C64> {
        (0..self.c.len()).map(|k| self.deriv(k)).collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_coeffs(self.c[..=order.min(self.order())].to_vec())
    }

    /// Jet of f' (one order lower).
    pub fn differentiate(&self) -> Self {
        if self.c.len() == 1 {
            return Self::constant(C64::new(0.0, 0.0), 0);
        }
        Self::from_coeffs(self.c.iter().enumerate().skip(1).map(|(k, v)| v * k as f64).collect())
    }

    /// Antiderivative with the given value at the expansion point (one order higher).
    pub fn integrate(&self, c0: C64) -> Self {
        let mut c = Vec::with_capacity(self.c.len() + 1);
        c.push(c0);
        c.extend(self.c.iter().enumerate().map(|(k, v)| v / (k as f64 + 1.0)));
        Self::from_coeffs(c)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_coeffs(self.c.iter().map(|v| v * s).collect())
    }

    /// Reparametrize t -> s t (the chain rule for an affine inner map).
    pub fn stretch(&self, s: C64) -> Self {
        let mut p = C64::new(1.0, 0.0);
        let c = self
            .c
            .iter()
            .map(|v| {
                let r = v * p;
                p *= s;
                r
            })
            .collect();
        Self::from_coeffs(c)
    }

    pub fn recip(&self) -> Self {
        Self::constant(C64::new(1.0, 0.0), self.order()) / self
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let s: C64 = (1..=k).map(|j| self.c[j] * e[k - j] * j as f64).sum();
            e[k] = s / k as f64;
        }
        Self::from_coeffs(e)
    }

    /// Principal logarithm at the expansion point.
    pub fn ln(&self) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        let mut l = vec![C64::new(0.0, 0.0); n];
        l[0] = a0.ln();
        for k in 1..n {
            let s: C64 = (1..k).map(|j| l[j] * self.c[k - j] * j as f64).sum();
            l[k] = (self.c[k] * k as f64 - s) / (a0 * k as f64);
        }
        Self::from_coeffs(l)
    }

    /// Logarithmic derivative f'/f, one order lower.
    pub fn log_derivative(&self) -> Self {
        self.differentiate() / &self.truncate(self.order().saturating_sub(1))
    }

    /// Principal square root at the expansion point.
    pub fn sqrt(&self) -> Self {
        let n = self.c.len();
        let mut s = vec![C64::new(0.0, 0.0); n];
        s[0] = self.c[0].sqrt();
        for k in 1..n {
            let acc: C64 = (1..k).map(|j| s[j] * s[k - j]).sum();
            s[k] = (self.c[k] - acc) / (2.0 * s[0]);
        }
        Self::from_coeffs(s)
    }

    pub fn powi(&self, p: u32) -> Self {
        let mut out = Self::constant(C64::new(1.0, 0.0), self.order());
        for _ in 0..p {
            out = &out * self;
        }
        out
    }

    /// f(self) given the derivatives f, f', f'', ... of the outer function
    /// at `self.value()`; missing higher derivatives are treated as zero.
    pub fn compose(&self, outer: &[C64]) -> Self {
        let n = self.order();
        let mut delta = self.clone();
        delta.c[0] = C64::new(0.0, 0.0);
        let mut out = Self::constant(outer[0], n);
        let mut pw = Self::constant(C64::new(1.0, 0.0), n);
        for (m, fm) in outer.iter().enumerate().skip(1).take(n) {
            pw = &pw * &delta;
            let w = fm / factorial(m);
            for k in 0..=n {
                out.c[k] += pw.c[k] * w;
            }
        }
        out
    }

    fn zip_with(&self, o: &Jet, f: impl Fn(C64, C64) -> C64) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet::from_coeffs((0..n).map(|k| f(self.c[k], o.c[k])).collect())
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        self.zip_with(o, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        self.zip_with(o, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet::from_coeffs((0..n).map(|k| (0..=k).map(|j| self.c[j] * o.c[k - j]).sum()).collect())
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        let mut q = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let s: C64 = (0..k).map(|j| q[j] * o.c[k - j]).sum();
            q[k] = (self.c[k] - s) / o.c[0];
        }
        Jet::from_coeffs(q)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                (&self).$m(&o)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                (&self).$m(o)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl Add<C64> for &Jet {
    type Output = Jet;
    fn add(self, v: C64) -> Jet {
        let mut j = self.clone();
        j.c[0] += v;
        j
    }
}

impl Add<C64> for Jet {
    type Output = Jet;
    fn add(mut self, v: C64) -> Jet {
        self.c[0] += v;
        self
    }
}

impl Mul<C64> for &Jet {
    type Output = Jet;
    fn mul(self, v: C64) -> Jet {
        self.scale(v)
    }
}

impl Mul<C64> for Jet {
    type Output = Jet;
    fn mul(self, v: C64) -> Jet {
        self.scale(v)
    }
}

impl Sub<C64> for &Jet {
    type Output = Jet;
    fn sub(self, v: C64) -> Jet {
        self + (-v)
    }
}

impl Sub<C64> for Jet {
    type Output = Jet;
    fn sub(self, v: C64) -> Jet {
        self + (-v)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.scale(C64::new(v, 0.0))
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.scale(C64::new(v, 0.0))
    }
}
