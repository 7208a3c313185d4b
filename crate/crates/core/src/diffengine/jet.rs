//! Second-order forward jets in time.
//!
//! A [`Jet`] carries `(f, f', f'')` of a quantity along one scalar input
//! (time). Arithmetic propagates the Leibniz rule to second order,
//! `(fg)'' = f''g + 2f'g' + fg''`, and univariate functions use
//! `h(f)'' = h''(f) f'^2 + h'(f) f''`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::{sigmoid, sign0, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub v: T,
    pub d1: T,
    pub d2: T,
}

/// Time jet over plain floats.
pub type JetScalar = Jet<f64>;

impl<T: Real> Jet<T> {
    pub fn new(v: T, d1: T, d2: T) -> Self {
        Self { v, d1, d2 }
    }

    /// A quantity that does not move with time.
    pub fn constant(v: T) -> Self {
        let zero = v.cst(0.0);
        Self { v, d1: zero, d2: zero }
    }

    /// Applies `h` given its value and first two derivatives at `self.v`.
    #[inline]
    pub fn chain(self, h: T, dh: T, ddh: T) -> Self {
        Self {
            v: h,
            d1: dh * self.d1,
            d2: ddh * self.d1 * self.d1 + dh * self.d2,
        }
    }

    #[inline]
    pub fn scale(self, k: T) -> Self {
        Self {
            v: self.v * k,
            d1: self.d1 * k,
            d2: self.d2 * k,
        }
    }

    pub fn recip(self) -> Self {
        let r = self.v.recip();
        let r2 = r * r;
        self.chain(r, -r2, r2 * r * 2.0)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let ds = s.recip() * 0.5;
        self.chain(s, ds, -(ds / self.v) * 0.5)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let r = self.v.recip();
        self.chain(self.v.ln(), r, -(r * r))
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(self.v.cst(1.0)),
            1 => self,
            _ => {
                let pm2 = self.v.powi(n - 2);
                let pm1 = pm2 * self.v;
                self.chain(pm1 * self.v, pm1 * n as f64, pm2 * (n * (n - 1)) as f64)
            }
        }
    }

    pub fn sigmoid(self) -> Self {
        let s = self.v.sigmoid();
        let ds = s * (s.cst(1.0) - s);
        let dds = ds * (s.cst(1.0) - s * 2.0);
        self.chain(s, ds, dds)
    }

    /// `|f|`; the sign flips every component, and all three vanish at `f = 0`.
    pub fn abs(self) -> Self {
        let s = sign0(self.v.value());
        Self {
            v: self.v.abs(),
            d1: self.d1 * s,
            d2: self.d2 * s,
        }
    }
}

impl JetScalar {
    /// The independent variable itself at `t`.
    pub fn variable(t: f64) -> Self {
        Self::new(t, 1.0, 0.0)
    }

    /// Logistic function without going through the generic path.
    pub fn sigmoid_f64(self) -> Self {
        let s = sigmoid(self.v);
        let ds = s * (1.0 - s);
        self.chain(s, ds, ds * (1.0 - 2.0 * s))
    }
}

/// Evaluates `f` on the time jet seeded at `t`, giving `(f, ḟ, f̈)`.
pub fn time_jet(f: impl Fn(JetScalar) -> JetScalar, t: f64) -> JetScalar {
    f(JetScalar::variable(t))
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + self.d1 * o.d1 * 2.0 + self.v * o.d2,
        )
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d1, -self.d2)
    }
}

impl<T: Real> Add<f64> for Jet<T> {
    type Output = Self;
    #[inline]
    fn add(self, c: f64) -> Self {
        Self::new(self.v + c, self.d1, self.d2)
    }
}

impl<T: Real> Sub<f64> for Jet<T> {
    type Output = Self;
    #[inline]
    fn sub(self, c: f64) -> Self {
        Self::new(self.v - c, self.d1, self.d2)
    }
}

impl<T: Real> Mul<f64> for Jet<T> {
    type Output = Self;
    #[inline]
    fn mul(self, c: f64) -> Self {
        Self::new(self.v * c, self.d1 * c, self.d2 * c)
    }
}

impl<T: Real> Div<f64> for Jet<T> {
    type Output = Self;
    #[inline]
    fn div(self, c: f64) -> Self {
        self * (1.0 / c)
    }
}
