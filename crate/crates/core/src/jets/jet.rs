use std::array;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

/// Deepest derivative order any consumer needs (μ_ss needs φ_ssss).
pub const MAX_ORDER: usize = 4;

const FACTORIAL: [f64; MAX_ORDER + 1] = [1.0, 1.0, 2.0, 6.0, 24.0];

/// Truncated univariate Taylor value with `K` coefficients (order `K - 1`).
///
/// Coefficients are stored normalized, `c[k] = f⁽ᵏ⁾(t₀) / k!`, so that
/// products are plain Cauchy convolutions. [`Jet::derivative`] returns the
/// unnormalized derivative. The coefficient type may itself be a jet: four
/// nested first-order jets (`K = 2`) carry the exact mixed fourth partial
/// in their innermost ε₀ε₁ε₂ε₃ slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T, const K: usize> {
    c: [T; K],
}

/// φ and its first four s-derivatives.
pub type Jet4 = Jet<f64, 5>;

/// First-order jet; nests into hyper-dual numbers.
pub type Dual<T> = Jet<T, 2>;

/// Four nested duals: mixed partials up to ∂⁴ in four independent directions.
pub type HyperDual4 = Dual<Dual<Dual<Dual<f64>>>>;

impl<T: Scalar, const K: usize> Jet<T, K> {
    const ORDER_OK: () = assert!(K >= 1 && K <= MAX_ORDER + 1, "jet order must be in 0..=4");

    pub const fn order() -> usize {
        K - 1
    }

    pub fn constant_jet(v: T) -> Self {
        #[allow(clippy::let_unit_value)]
        let _ = Self::ORDER_OK;
        let mut c = [T::zero(); K];
        c[0] = v;
        Self { c }
    }

    /// The identity function seeded at `v`: value `v`, unit first derivative.
    pub fn variable(v: T) -> Self {
        let mut j = Self::constant_jet(v);
        if K > 1 {
            j.c[1] = T::one();
        }
        j
    }

    /// Build from unnormalized derivatives (value, f', f'', ...).
    pub fn from_derivatives(d: [T; K]) -> Self {
        Self {
            c: array::from_fn(|k| d[k].scale(1.0 / FACTORIAL[k])),
        }
    }

    pub fn taylor_coeffs(&self) -> &[T; K] {
        &self.c
    }

    pub fn re(&self) -> T {
        self.c[0]
    }

    /// k-th derivative; zero beyond the truncation order.
    pub fn derivative(&self, k: usize) -> T {
        if k < K {
            self.c[k].scale(FACTORIAL[k])
        } else {
            T::zero()
        }
    }

    pub fn derivatives(&self) -> [T; K] {
        array::from_fn(|k| self.derivative(k))
    }

    fn map(self, f: impl Fn(T) -> T) -> Self {
        Self { c: self.c.map(f) }
    }
}

impl<T: Scalar, const K: usize> Add for Jet<T, K> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            c: array::from_fn(|k| self.c[k] + rhs.c[k]),
        }
    }
}

impl<T: Scalar, const K: usize> Sub for Jet<T, K> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            c: array::from_fn(|k| self.c[k] - rhs.c[k]),
        }
    }
}

impl<T: Scalar, const K: usize> Neg for Jet<T, K> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|v| -v)
    }
}

impl<T: Scalar, const K: usize> Mul for Jet<T, K> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut c = [T::zero(); K];
        for (k, ck) in c.iter_mut().enumerate() {
            let mut acc = self.c[0] * rhs.c[k];
            for j in 1..=k {
                acc = acc + self.c[j] * rhs.c[k - j];
            }
            *ck = acc;
        }
        Self { c }
    }
}

impl<T: Scalar, const K: usize> Div for Jet<T, K> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv_b0 = T::one() / rhs.c[0];
        let mut c = [T::zero(); K];
        for k in 0..K {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc = acc - rhs.c[j] * c[k - j];
            }
            c[k] = acc * inv_b0;
        }
        Self { c }
    }
}

impl<T: Scalar, const K: usize> Scalar for Jet<T, K> {
    fn constant(v: f64) -> Self {
        Self::constant_jet(T::constant(v))
    }

    fn value(&self) -> f64 {
        self.c[0].value()
    }

    fn is_constant(&self) -> bool {
        let zero = T::zero();
        self.c[0].is_constant() && self.c[1..].iter().all(|v| *v == zero)
    }

    fn scale(self, k: f64) -> Self {
        self.map(|v| v.scale(k))
    }

    fn sqrt(self) -> Self {
        let mut c = [T::zero(); K];
        c[0] = self.c[0].sqrt();
        let inv_2c0 = T::one() / c[0].scale(2.0);
        for k in 1..K {
            let mut acc = self.c[k];
            for j in 1..k {
                acc = acc - c[j] * c[k - j];
            }
            c[k] = acc * inv_2c0;
        }
        Self { c }
    }

    fn exp(self) -> Self {
        let mut c = [T::zero(); K];
        c[0] = self.c[0].exp();
        for k in 1..K {
            let mut acc = T::zero();
            for j in 1..=k {
                acc = acc + (self.c[j] * c[k - j]).scale(j as f64);
            }
            c[k] = acc.scale(1.0 / k as f64);
        }
        Self { c }
    }

    fn ln(self) -> Self {
        let mut c = [T::zero(); K];
        c[0] = self.c[0].ln();
        let inv_a0 = T::one() / self.c[0];
        for k in 1..K {
            let mut acc = T::zero();
            for j in 1..k {
                acc = acc + (c[j] * self.c[k - j]).scale(j as f64);
            }
            c[k] = (self.c[k] - acc.scale(1.0 / k as f64)) * inv_a0;
        }
        Self { c }
    }

    fn sin(self) -> Self {
        sin_cos(self).0
    }

    fn cos(self) -> Self {
        sin_cos(self).1
    }

    fn powf(self, p: f64) -> Self {
        // k a₀ c_k = Σ_{j=1..k} (p·j − (k − j)) a_j c_{k−j}
        let mut c = [T::zero(); K];
        c[0] = self.c[0].powf(p);
        let inv_a0 = T::one() / self.c[0];
        for k in 1..K {
            let mut acc = T::zero();
            for j in 1..=k {
                let w = p * j as f64 - (k - j) as f64;
                acc = acc + (self.c[j] * c[k - j]).scale(w);
            }
            c[k] = acc.scale(1.0 / k as f64) * inv_a0;
        }
        Self { c }
    }

    fn infinitesimal(level: usize) -> Self {
        let mut j = Self::constant_jet(T::zero());
        if level == 0 {
            if K > 1 {
                j.c[1] = T::one();
            }
        } else {
            j.c[0] = T::infinitesimal(level - 1);
        }
        j
    }

    fn component(&self, path: &[usize]) -> f64 {
        match path.split_first() {
            None => self.value(),
            Some((&k, rest)) if k < K => self.c[k].component(rest),
            Some(_) => 0.0,
        }
    }
}

fn sin_cos<T: Scalar, const K: usize>(a: Jet<T, K>) -> (Jet<T, K>, Jet<T, K>) {
    let mut s = [T::zero(); K];
    let mut c = [T::zero(); K];
    s[0] = a.c[0].sin();
    c[0] = a.c[0].cos();
    for k in 1..K {
        let mut acc_s = T::zero();
        let mut acc_c = T::zero();
        for j in 1..=k {
            acc_s = acc_s + (a.c[j] * c[k - j]).scale(j as f64);
            acc_c = acc_c + (a.c[j] * s[k - j]).scale(j as f64);
        }
        s[k] = acc_s.scale(1.0 / k as f64);
        c[k] = -acc_c.scale(1.0 / k as f64);
    }
    (Jet { c: s }, Jet { c })
}
