use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type that metric functions are evaluated over.
///
/// Implemented by `f64` and by [`Jet`](super::Jet) over any `Scalar`, so a
/// single generic evaluation of φ(r, s) yields plain values, univariate
/// derivative stacks, or mixed partials from nested jets.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;

    /// Plain value at the innermost level.
    fn value(&self) -> f64;

    /// True when every derivative component is exactly zero.
    fn is_constant(&self) -> bool;

    fn scale(self, k: f64) -> Self;

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powf(self, p: f64) -> Self;

    /// Element carrying a unit first-order perturbation at nesting `level`
    /// (0 = outermost). For `f64` there is no such element.
    fn infinitesimal(level: usize) -> Self;

    /// Component addressed by one coefficient slot per nesting level,
    /// outermost first. An empty path addresses the plain value.
    fn component(&self, path: &[usize]) -> f64;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn one() -> Self {
        Self::constant(1.0)
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        acc
    }
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn infinitesimal(_level: usize) -> Self {
        0.0
    }
    fn component(&self, path: &[usize]) -> f64 {
        if path.iter().all(|&p| p == 0) {
            *self
        } else {
            0.0
        }
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}
