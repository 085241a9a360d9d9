//! Scalar abstraction shared by the forward kernels.
//!
//! Nonlinear kernels (advection, light volume, ray marching, losses) are
//! written once over [`Real`]. Instantiated with `f64` they are the production
//! forward pass; instantiated with [`Dual`] they give exact forward-mode
//! directional derivatives, which is the independent route the hand-written
//! adjoints are checked against.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn cst(v: f64) -> Self;
    fn val(self) -> f64;
    fn exp(self) -> Self;

    #[inline]
    fn scale(self, s: f64) -> Self {
        self * Self::cst(s)
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// First-order dual number `v + d·ε`, `ε² = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }
}

impl Real for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }
    #[inline]
    fn val(self) -> f64 {
        self.v
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual { v: e, d: e * self.d }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        Dual { v: self.v / o.v, d: (self.d * o.v - self.v * o.d) / (o.v * o.v) }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        self.v += o.v;
        self.d += o.d;
    }
}

/// Lift primal values and a tangent direction into dual numbers.
pub fn seed(values: &[f64], tangent: &[f64]) -> Vec<Dual> {
    assert_eq!(values.len(), tangent.len());
    values.iter().zip(tangent).map(|(&v, &d)| Dual::new(v, d)).collect()
}

pub fn lift(values: &[f64]) -> Vec<Dual> {
    values.iter().map(|&v| Dual::cst(v)).collect()
}

pub fn tangent(values: &[Dual]) -> Vec<f64> {
    values.iter().map(|x| x.d).collect()
}

pub fn primal(values: &[Dual]) -> Vec<f64> {
    values.iter().map(|x| x.v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_product_and_exp_rules() {
        let x = Dual::new(2.0, 1.0);
        let y = x * x * x;
        assert_eq!(y.v, 8.0);
        assert_eq!(y.d, 12.0);
        let e = (x.scale(0.5)).exp();
        assert!((e.d - 0.5 * 1f64.exp()).abs() < 1e-15);
        let q = Dual::cst(1.0) / x;
        assert!((q.d + 0.25).abs() < 1e-15);
    }
}
