//! Forward-mode dual numbers carrying derivatives with respect to the three
//! GRFN parameters `(mu, sigma2, h)`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::normal;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dual {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual {
    pub const fn cst(v: f64) -> Self {
        Dual { v, d: [0.0; 3] }
    }

    /// The `i`-th independent variable with value `v`.
    pub const fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; 3];
        d[i] = 1.0;
        Dual { v, d }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        Dual {
            v,
            d: [self.d[0] * dv, self.d[1] * dv, self.d[2] * dv],
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }

    /// `exp(self) - 1` without cancellation near zero.
    pub fn exp_m1(self) -> Self {
        self.chain(self.v.exp_m1(), self.v.exp())
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }

    pub fn square(self) -> Self {
        self * self
    }

    pub fn scale(self, k: f64) -> Self {
        self.chain(self.v * k, k)
    }

    /// Standard normal CDF. Infinite arguments yield constants.
    pub fn norm_cdf(self) -> Self {
        if self.v.is_infinite() {
            return Dual::cst(if self.v > 0.0 { 1.0 } else { 0.0 });
        }
        self.chain(normal::cdf(self.v), normal::pdf(self.v))
    }

    /// Standard normal survival function `1 - Phi`.
    pub fn norm_sf(self) -> Self {
        if self.v.is_infinite() {
            return Dual::cst(if self.v > 0.0 { 0.0 } else { 1.0 });
        }
        self.chain(normal::sf(self.v), -normal::pdf(self.v))
    }

    pub fn max_cst(self, lo: f64) -> Self {
        if self.v < lo {
            Dual::cst(lo)
        } else {
            self
        }
    }

    pub fn min_cst(self, hi: f64) -> Self {
        if self.v > hi {
            Dual::cst(hi)
        } else {
            self
        }
    }
}

/// `Phi(hi) - Phi(lo)` evaluated on the tail that keeps precision.
pub(crate) fn cdf_diff(lo: Dual, hi: Dual) -> Dual {
    if lo.v > 0.0 {
        lo.norm_sf() - hi.norm_sf()
    } else {
        hi.norm_cdf() - lo.norm_cdf()
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
                self.d[2] * o.v + self.v * o.d[2],
            ],
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        Dual {
            v: q,
            d: [
                (self.d[0] - q * o.d[0]) * inv,
                (self.d[1] - q * o.d[1]) * inv,
                (self.d[2] - q * o.d[2]) * inv,
            ],
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.chain(-self.v, -1.0)
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, o: f64) -> Dual {
        Dual { v: self.v + o, d: self.d }
    }
}

impl Sub<Dual> for f64 {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        -o + self
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        o.scale(self)
    }
}
