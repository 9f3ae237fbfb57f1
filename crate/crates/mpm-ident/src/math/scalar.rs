//! Forward-mode dual scalar.
//!
//! Every quantity that can depend on an identified material parameter is a
//! [`Scalar`]: a 64-bit value plus up to [`MAX_TANGENTS`] tangent lanes, one
//! per active parameter of the current run. Arithmetic propagates the lanes
//! by the chain rule. In plain-simulation mode no lane is ever seeded, so all
//! tangents stay exactly zero and the value path behaves like ordinary `f64`
//! arithmetic (bit for bit).
//!
//! The lane count is fixed at compile time because no material exposes more
//! than four identifiable parameters; unseeded lanes are zero-filled and cost
//! a few fused multiply-adds per operation.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Maximum number of simultaneously identified parameters.
pub const MAX_TANGENTS: usize = 4;

/// Dual number: value plus tangent lanes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Scalar {
    pub val: f64,
    pub dot: [f64; MAX_TANGENTS],
}

pub const ZERO: Scalar = Scalar { val: 0.0, dot: [0.0; MAX_TANGENTS] };
pub const ONE: Scalar = Scalar { val: 1.0, dot: [0.0; MAX_TANGENTS] };

impl Scalar {
    /// A constant: carries no parameter sensitivity.
    #[inline]
    pub fn new(val: f64) -> Self {
        Scalar { val, dot: [0.0; MAX_TANGENTS] }
    }

    /// A value seeded as the `slot`-th active parameter with d(value)/d(param) = `seed`.
    #[inline]
    pub fn seeded(val: f64, slot: usize, seed: f64) -> Self {
        let mut dot = [0.0; MAX_TANGENTS];
        dot[slot] = seed;
        Scalar { val, dot }
    }

    #[inline]
    pub fn zero() -> Self {
        ZERO
    }

    #[inline]
    pub fn one() -> Self {
        ONE
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.val.is_finite() && self.dot.iter().all(|d| d.is_finite())
    }

    /// Map value and tangents through a differentiable univariate function:
    /// `f(value)` and `dfdx * dot` lane-wise.
    #[inline]
    fn lift(self, f: f64, dfdx: f64) -> Self {
        let mut dot = [0.0; MAX_TANGENTS];
        for k in 0..MAX_TANGENTS {
            dot[k] = dfdx * self.dot[k];
        }
        Scalar { val: f, dot }
    }

    #[inline]
    pub fn recip(self) -> Self {
        let inv = 1.0 / self.val;
        self.lift(inv, -inv * inv)
    }

    #[inline]
    pub fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        // At exactly zero the one-sided derivative is unbounded; propagate zero
        // tangents instead of infinities so downstream sums stay finite.
        let d = if s == 0.0 { 0.0 } else { 0.5 / s };
        self.lift(s, d)
    }

    #[inline]
    pub fn ln(self) -> Self {
        self.lift(self.val.ln(), 1.0 / self.val)
    }

    #[inline]
    pub fn exp(self) -> Self {
        let e = self.val.exp();
        self.lift(e, e)
    }

    #[inline]
    pub fn sin(self) -> Self {
        self.lift(self.val.sin(), self.val.cos())
    }

    #[inline]
    pub fn cos(self) -> Self {
        self.lift(self.val.cos(), -self.val.sin())
    }

    #[inline]
    pub fn powi(self, n: i32) -> Self {
        self.lift(self.val.powi(n), n as f64 * self.val.powi(n - 1))
    }

    /// Power with a constant exponent.
    #[inline]
    pub fn powf(self, p: f64) -> Self {
        self.lift(self.val.powf(p), p * self.val.powf(p - 1.0))
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.val < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Squared value, keeping tangents.
    #[inline]
    pub fn sq(self) -> Self {
        self * self
    }

    /// Larger of the two by value part; the winner's tangents are kept.
    #[inline]
    pub fn max(self, other: Scalar) -> Self {
        if self.val >= other.val {
            self
        } else {
            other
        }
    }

    #[inline]
    pub fn min(self, other: Scalar) -> Self {
        if self.val <= other.val {
            self
        } else {
            other
        }
    }

    /// Clamp by value part. Inside the band the tangents pass through,
    /// outside they are cut (the clamped branch is constant).
    #[inline]
    pub fn clamp(self, lo: f64, hi: f64) -> Self {
        if self.val < lo {
            Scalar::new(lo)
        } else if self.val > hi {
            Scalar::new(hi)
        } else {
            self
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.val)
    }
}

impl Add for Scalar {
    type Output = Scalar;
    #[inline]
    fn add(self, rhs: Scalar) -> Scalar {
        let mut dot = [0.0; MAX_TANGENTS];
        for k in 0..MAX_TANGENTS {
            dot[k] = self.dot[k] + rhs.dot[k];
        }
        Scalar { val: self.val + rhs.val, dot }
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    #[inline]
    fn sub(self, rhs: Scalar) -> Scalar {
        let mut dot = [0.0; MAX_TANGENTS];
        for k in 0..MAX_TANGENTS {
            dot[k] = self.dot[k] - rhs.dot[k];
        }
        Scalar { val: self.val - rhs.val, dot }
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    #[inline]
    fn mul(self, rhs: Scalar) -> Scalar {
        let mut dot = [0.0; MAX_TANGENTS];
        for k in 0..MAX_TANGENTS {
            dot[k] = self.dot[k] * rhs.val + self.val * rhs.dot[k];
        }
        Scalar { val: self.val * rhs.val, dot }
    }
}

impl Div for Scalar {
    type Output = Scalar;
    #[inline]
    fn div(self, rhs: Scalar) -> Scalar {
        let q = self.val / rhs.val;
        let inv = 1.0 / rhs.val;
        let mut dot = [0.0; MAX_TANGENTS];
        for k in 0..MAX_TANGENTS {
            dot[k] = (self.dot[k] - q * rhs.dot[k]) * inv;
        }
        Scalar { val: q, dot }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    #[inline]
    fn neg(self) -> Scalar {
        let mut dot = [0.0; MAX_TANGENTS];
        for k in 0..MAX_TANGENTS {
            dot[k] = -self.dot[k];
        }
        Scalar { val: -self.val, dot }
    }
}

impl AddAssign for Scalar {
    #[inline]
    fn add_assign(&mut self, rhs: Scalar) {
        self.val += rhs.val;
        for k in 0..MAX_TANGENTS {
            self.dot[k] += rhs.dot[k];
        }
    }
}

impl SubAssign for Scalar {
    #[inline]
    fn sub_assign(&mut self, rhs: Scalar) {
        self.val -= rhs.val;
        for k in 0..MAX_TANGENTS {
            self.dot[k] -= rhs.dot[k];
        }
    }
}

impl MulAssign for Scalar {
    #[inline]
    fn mul_assign(&mut self, rhs: Scalar) {
        *self = *self * rhs;
    }
}

impl DivAssign for Scalar {
    #[inline]
    fn div_assign(&mut self, rhs: Scalar) {
        *self = *self / rhs;
    }
}

impl Mul<f64> for Scalar {
    type Output = Scalar;
    #[inline]
    fn mul(self, rhs: f64) -> Scalar {
        self.lift(self.val * rhs, rhs)
    }
}

impl Mul<Scalar> for f64 {
    type Output = Scalar;
    #[inline]
    fn mul(self, rhs: Scalar) -> Scalar {
        rhs * self
    }
}

impl Div<f64> for Scalar {
    type Output = Scalar;
    #[inline]
    fn div(self, rhs: f64) -> Scalar {
        self * (1.0 / rhs)
    }
}

impl Add<f64> for Scalar {
    type Output = Scalar;
    #[inline]
    fn add(self, rhs: f64) -> Scalar {
        Scalar { val: self.val + rhs, dot: self.dot }
    }
}

impl Sub<f64> for Scalar {
    type Output = Scalar;
    #[inline]
    fn sub(self, rhs: f64) -> Scalar {
        Scalar { val: self.val - rhs, dot: self.dot }
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        let mut acc = ZERO;
        for s in iter {
            acc += s;
        }
        acc
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.val.partial_cmp(&other.val)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite difference of a univariate f64 function.
    fn central_fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5 * x.abs().max(1.0);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn check_tangent(f_dual: impl Fn(Scalar) -> Scalar, f_plain: impl Fn(f64) -> f64, x: f64) {
        let out = f_dual(Scalar::seeded(x, 0, 1.0));
        let fd = central_fd(&f_plain, x);
        let denom = fd.abs().max(1e-12);
        assert!(
            ((out.dot[0] - fd) / denom).abs() < 1e-4,
            "tangent {} vs fd {} at x={}",
            out.dot[0],
            fd,
            x
        );
        assert!((out.val - f_plain(x)).abs() <= 1e-12 * f_plain(x).abs().max(1.0));
    }

    #[test]
    fn arithmetic_matches_f64() {
        let a = Scalar::new(3.5);
        let b = Scalar::new(-1.25);
        assert_eq!((a + b).val, 3.5 - 1.25);
        assert_eq!((a * b).val, 3.5 * -1.25);
        assert_eq!((a / b).val, 3.5 / -1.25);
        assert_eq!((-a).val, -3.5);
    }

    #[test]
    fn unseeded_lanes_stay_zero() {
        let a = Scalar::new(2.0);
        let b = Scalar::new(7.0);
        let c = ((a * b + a).sqrt() / b).exp().ln();
        assert_eq!(c.dot, [0.0; MAX_TANGENTS]);
    }

    #[test]
    fn composite_tangents_match_finite_differences() {
        check_tangent(|x| x * x * x, |x| x * x * x, 1.7);
        check_tangent(|x| x.sqrt(), |x| x.sqrt(), 4.2);
        check_tangent(|x| x.ln(), |x| x.ln(), 0.8);
        check_tangent(|x| x.exp(), |x| x.exp(), -0.3);
        check_tangent(|x| x.recip(), |x| 1.0 / x, 2.1);
        check_tangent(|x| x.sin(), |x| x.sin(), 0.6);
        check_tangent(|x| x.cos(), |x| x.cos(), 0.6);
        check_tangent(|x| x.powf(2.5), |x| x.powf(2.5), 1.9);
        check_tangent(
            |x| (x.sq() + Scalar::one()).sqrt().ln() * x.exp(),
            |x| (x * x + 1.0).sqrt().ln() * x.exp(),
            0.9,
        );
    }

    #[test]
    fn product_rule_over_two_slots() {
        let a = Scalar::seeded(2.0, 0, 1.0);
        let b = Scalar::seeded(5.0, 1, 1.0);
        let p = a * b;
        assert_eq!(p.val, 10.0);
        assert_eq!(p.dot[0], 5.0);
        assert_eq!(p.dot[1], 2.0);
    }

    #[test]
    fn max_takes_winner_tangents() {
        let a = Scalar::seeded(2.0, 0, 1.0);
        let b = Scalar::seeded(3.0, 1, 1.0);
        let m = a.max(b);
        assert_eq!(m.val, 3.0);
        assert_eq!(m.dot[0], 0.0);
        assert_eq!(m.dot[1], 1.0);
    }

    #[test]
    fn clamp_cuts_tangents_outside_band() {
        let x = Scalar::seeded(5.0, 0, 1.0);
        let c = x.clamp(0.0, 1.0);
        assert_eq!(c.val, 1.0);
        assert_eq!(c.dot[0], 0.0);
        let inside = Scalar::seeded(0.5, 0, 1.0).clamp(0.0, 1.0);
        assert_eq!(inside.dot[0], 1.0);
    }
}
