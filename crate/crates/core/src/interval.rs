//! Closed floating-point intervals with outward rounding.
//!
//! Every arithmetic result is widened by one ulp on each side, so the
//! enclosure property `x ∈ a, y ∈ b ⇒ x ∘ y ∈ a ∘ b` holds for the exact
//! real operation even though the endpoints are computed in `f64`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::ToPrimitive;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub const fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub const ZERO: Interval = Interval::point(0.0);

    /// Enclosure of `x ± r`.
    pub fn around(x: f64, r: f64) -> Self {
        Interval::new((x - r).next_down(), (x + r).next_up())
    }

    /// Tight enclosure of an exact rational.
    pub fn from_rational(r: &BigRational) -> Self {
        match r.to_f64() {
            Some(v) if v.is_finite() => {
                let exact = (r.denom() == &num_bigint::BigInt::from(1) && v.abs() < 9.0e15)
                    || BigRational::from_float(v).as_ref() == Some(r);
                if exact {
                    Interval::point(v)
                } else {
                    Interval::new(v.next_down(), v.next_up())
                }
            }
            _ => Interval::new(f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Enclosure of the quotient `num / den` of two exactly representable integers.
    pub fn ratio(num: f64, den: f64) -> Self {
        let v = num / den;
        if v.mul_add(den, -num) == 0.0 {
            Interval::point(v)
        } else {
            Interval::new(v.next_down(), v.next_up())
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(&self) -> f64 {
        if self.lo <= 0.0 && self.hi >= 0.0 {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn sqr(self) -> Interval {
        let a = self.lo * self.lo;
        let b = self.hi * self.hi;
        if self.lo >= 0.0 {
            Interval::new(a.next_down().max(0.0), b.next_up())
        } else if self.hi <= 0.0 {
            Interval::new(b.next_down().max(0.0), a.next_up())
        } else {
            Interval::new(0.0, a.max(b).next_up())
        }
    }

    /// Square root of the non-negative part; `None` if the interval is entirely negative.
    pub fn sqrt(self) -> Option<Interval> {
        if self.hi < 0.0 {
            return None;
        }
        let lo = if self.lo <= 0.0 { 0.0 } else { self.lo.sqrt().next_down().max(0.0) };
        Some(Interval::new(lo, self.hi.sqrt().next_up()))
    }

    pub fn abs(self) -> Interval {
        Interval::new(self.mig(), self.mag())
    }

    /// Reciprocal; `None` when the interval contains zero.
    pub fn recip(self) -> Option<Interval> {
        if self.contains_zero() {
            return None;
        }
        Some(Interval::new((1.0 / self.hi).next_down(), (1.0 / self.lo).next_up()))
    }

    pub fn div(self, rhs: Interval) -> Option<Interval> {
        rhs.recip().map(|r| self * r)
    }
}

/// Rounding error of `a + b` (Knuth's TwoSum).
fn two_sum_err(a: f64, b: f64) -> f64 {
    let s = a + b;
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        let lo = self.lo + rhs.lo;
        let hi = self.hi + rhs.hi;
        if self.lo == self.hi && rhs.lo == rhs.hi && two_sum_err(self.lo, rhs.lo) == 0.0 {
            return Interval::point(lo);
        }
        Interval::new(lo.next_down(), hi.next_up())
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        self + Interval::point(rhs)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        self + (-rhs)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, rhs: f64) -> Interval {
        self + Interval::point(-rhs)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi];
        let mut lo = c[0];
        let mut hi = c[0];
        for &v in &c[1..] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if self.lo == self.hi && rhs.lo == rhs.hi && self.lo.mul_add(rhs.lo, -lo) == 0.0 {
            return Interval::point(lo);
        }
        Interval::new(lo.next_down(), hi.next_up())
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self * Interval::point(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_encloses_exact_results() {
        let a = Interval::new(0.1, 0.2);
        let b = Interval::new(-0.3, 0.4);
        let s = a + b;
        assert!(s.lo <= -0.2 && s.hi >= 0.6);
        let p = a * b;
        assert!(p.lo <= -0.06 && p.hi >= 0.08);
        assert_eq!(Interval::new(-2.0, 1.0).sqr().lo, 0.0);
    }

    #[test]
    fn third_is_enclosed() {
        let third = Interval::ratio(1.0, 3.0);
        assert!(third.lo < third.hi);
        assert!((third * 3.0).contains(1.0));
        assert_eq!(Interval::ratio(3.0, 4.0), Interval::point(0.75));
    }

    #[test]
    fn sqrt_and_recip() {
        assert!(Interval::new(-1.0, -0.5).sqrt().is_none());
        let r = Interval::new(1.0, 4.0).sqrt().unwrap();
        assert!(r.contains(1.0) && r.contains(2.0));
        assert!(Interval::new(-1.0, 1.0).recip().is_none());
    }
}
