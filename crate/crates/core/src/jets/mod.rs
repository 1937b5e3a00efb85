//! Forward-mode differentiation.
//!
//! Two consumers: the closed-form path needs φ and its s-derivatives up to
//! order four at a point ([`phi_jet`]); the definitional oracle needs exact
//! mixed y-partials of F² = u²φ(r, s)², which come from evaluating F² over
//! four nested first-order jets ([`fpow2_partial`]).

mod jet;
mod scalar;

pub use jet::{Dual, HyperDual4, Jet, Jet4, MAX_ORDER};
pub use scalar::Scalar;

use serde::Serialize;

use crate::catalog::MetricSpec;
use crate::error::{Error, Result};

/// φ and its s-partials at a fixed (r, s). Slots above `order` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiJet {
    pub phi: f64,
    pub phi_s: f64,
    pub phi_ss: f64,
    pub phi_sss: f64,
    pub phi_ssss: f64,
    pub r: f64,
    pub s: f64,
    pub order: usize,
}

impl PhiJet {
    pub fn from_derivatives(r: f64, s: f64, d: [f64; 5], order: usize) -> PhiJet {
        let keep = |k: usize| if k <= order { d[k] } else { 0.0 };
        PhiJet {
            phi: keep(0),
            phi_s: keep(1),
            phi_ss: keep(2),
            phi_sss: keep(3),
            phi_ssss: keep(4),
            r,
            s,
            order,
        }
    }

    pub fn require_order(&self, need: usize) -> Result<()> {
        if self.order < need {
            Err(Error::InsufficientOrder { have: self.order, need })
        } else {
            Ok(())
        }
    }

    pub fn derivatives(&self) -> [f64; 5] {
        [self.phi, self.phi_s, self.phi_ss, self.phi_sss, self.phi_ssss]
    }
}

/// φ and its s-derivatives up to `order` (at most 4) at (r, s).
pub fn phi_jet(metric: &MetricSpec, r: f64, s: f64, order: usize) -> Result<PhiJet> {
    if order > MAX_ORDER {
        return Err(Error::InsufficientOrder {
            have: MAX_ORDER,
            need: order,
        });
    }
    let j = metric.phi(r, Jet4::variable(s))?;
    Ok(PhiJet::from_derivatives(r, s, j.derivatives(), order))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn check_vectors(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { x: x.len(), y: y.len() });
    }
    if norm(x) == 0.0 {
        return Err(Error::ZeroVector("x"));
    }
    if norm(y) == 0.0 {
        return Err(Error::ZeroVector("y"));
    }
    Ok(())
}

/// F(x, y) = u·φ(|x|, ⟨x, y⟩/u) with y in an arbitrary scalar algebra.
pub fn finsler_generic<S: Scalar>(metric: &MetricSpec, x: &[f64], y: &[S]) -> Result<S> {
    let u = fpow2_base(y).sqrt();
    let s = dot(x, y) / u;
    Ok(u * metric.phi(norm(x), s)?)
}

/// F² = u²·φ² with y in an arbitrary scalar algebra.
pub fn fpow2_generic<S: Scalar>(metric: &MetricSpec, x: &[f64], y: &[S]) -> Result<S> {
    let u2 = fpow2_base(y);
    let s = dot(x, y) / u2.sqrt();
    let phi = metric.phi(norm(x), s)?;
    Ok(u2 * phi * phi)
}

fn fpow2_base<S: Scalar>(y: &[S]) -> S {
    y.iter().fold(S::zero(), |acc, v| acc + *v * *v)
}

fn dot<S: Scalar>(x: &[f64], y: &[S]) -> S {
    x.iter().zip(y).fold(S::zero(), |acc, (a, b)| acc + b.scale(*a))
}

fn seeded(y: &[f64], idx: &[usize]) -> Result<Vec<HyperDual4>> {
    let n = y.len();
    if idx.len() > 4 {
        return Err(Error::InsufficientOrder {
            have: 4,
            need: idx.len(),
        });
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    Ok(y.iter()
        .enumerate()
        .map(|(c, &v)| {
            idx.iter()
                .enumerate()
                .filter(|(_, &i)| i == c)
                .fold(HyperDual4::constant(v), |acc, (level, _)| {
                    acc + HyperDual4::infinitesimal(level)
                })
        })
        .collect())
}

fn mixed_path(order: usize) -> [usize; 4] {
    let mut path = [0; 4];
    for p in path.iter_mut().take(order) {
        *p = 1;
    }
    path
}

/// Exact ∂ᵏ(F²)/∂y^{idx₀}…∂y^{idx_{k−1}} for k = idx.len() ≤ 4 (0-based
/// indices), from F² evaluated over four nested first-order jets.
pub fn fpow2_partial(metric: &MetricSpec, x: &[f64], y: &[f64], idx: &[usize]) -> Result<f64> {
    check_vectors(x, y)?;
    let yy = seeded(y, idx)?;
    let f2 = fpow2_generic(metric, x, &yy)?;
    Ok(f2.component(&mixed_path(idx.len())))
}

/// ∂⁴(F²)/∂y^h∂y^i∂y^j∂y^k.
pub fn fpow2_partial4(metric: &MetricSpec, x: &[f64], y: &[f64], idx: [usize; 4]) -> Result<f64> {
    fpow2_partial(metric, x, y, &idx)
}

/// Exact ∂F/∂y^i for every i.
pub fn finsler_gradient(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_vectors(x, y)?;
    (0..y.len())
        .map(|i| {
            let yy: Vec<Dual<f64>> = y
                .iter()
                .enumerate()
                .map(|(c, &v)| if c == i { Dual::variable(v) } else { Dual::constant(v) })
                .collect();
            Ok(finsler_generic(metric, x, &yy)?.derivative(1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin, Params};

    fn randers() -> MetricSpec {
        builtin("randers", &Params::new()).unwrap()
    }

    #[test]
    fn randers_phi_jet_order2() {
        let pj = phi_jet(&randers(), 0.4, 0.3, 2).unwrap();
        assert_eq!(pj.derivatives(), [1.3, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(pj.order, 2);
    }

    #[test]
    fn kropina_phi_jet() {
        let k = builtin("kropina", &Params::new()).unwrap();
        let pj = phi_jet(&k, 2.0, 1.0, 4).unwrap();
        assert_eq!(pj.derivatives(), [1.0, -1.0, 2.0, -6.0, 24.0]);
        assert!(phi_jet(&k, 2.0, 1.0, 5).is_err());
    }

    #[test]
    fn family_collapses_to_circle() {
        let f = builtin(
            "tcondition_family",
            &[("a".to_string(), 1.0), ("c".to_string(), 1.0)].into(),
        )
        .unwrap();
        let s: f64 = 0.4;
        let pj = phi_jet(&f, 1.0, s, 4).unwrap();
        let w = (1.0 - s * s).sqrt();
        // derivatives of √(1 − s²)
        let want = [
            w,
            -s / w,
            -1.0 / w.powi(3),
            -3.0 * s / w.powi(5),
            -3.0 * (1.0 + 4.0 * s * s) / w.powi(7),
        ];
        for (a, b) in pj.derivatives().iter().zip(want) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn euclidean_partials() {
        let e = builtin("euclidean", &Params::new()).unwrap();
        let x = [0.3, -0.1, 0.2];
        let y = [0.5, 1.0, -0.7];
        for i in 0..3 {
            for j in 0..3 {
                let v = fpow2_partial(&e, &x, &y, &[i, j]).unwrap();
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-14);
                for k in 0..3 {
                    assert!(fpow2_partial(&e, &x, &y, &[i, j, k]).unwrap().abs() < 1e-14);
                    for h in 0..3 {
                        assert!(fpow2_partial4(&e, &x, &y, [h, i, j, k]).unwrap().abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn randers_second_and_third_partials() {
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        let g11 = fpow2_partial(&randers(), &x, &y, &[0, 0]).unwrap();
        assert!((g11 - 4.0).abs() < 1e-14);
        let c111 = fpow2_partial(&randers(), &x, &y, &[0, 0, 0]).unwrap();
        assert!((c111 - 6.0).abs() < 1e-14);
        let f2 = fpow2_partial(&randers(), &x, &y, &[]).unwrap();
        assert!((f2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs() {
        let m = randers();
        assert_eq!(
            fpow2_partial(&m, &[1.0, 0.0], &[0.0, 0.0], &[0]).unwrap_err(),
            Error::ZeroVector("y")
        );
        assert!(matches!(
            fpow2_partial(&m, &[1.0, 0.0], &[0.0, 1.0, 0.0], &[0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            fpow2_partial(&m, &[1.0, 0.0], &[0.0, 1.0], &[2]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
