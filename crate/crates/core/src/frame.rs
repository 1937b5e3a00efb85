//! Pointwise frame: r, u, s, the covector m_i = x_i − (s/u)y_i, the angular
//! metric ℏ_ij = δ_ij − y_iy_j/u² and n_ij = (y_im_j + y_jm_i)/u.
//!
//! Indices are raised and lowered with δ throughout, so m_i and m^i coincide.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{SymTensor2, MAX_DIM};

/// m² at or below this multiple of r² marks y ∥ x.
pub const DEGENERACY_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalPoint {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r: f64,
    pub u: f64,
    pub s: f64,
    pub m: Vec<f64>,
    pub hbar: SymTensor2,
    pub m2: f64,
    pub degenerate: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn make_eval_point(x: &[f64], y: &[f64]) -> Result<EvalPoint> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { x: x.len(), y: y.len() });
    }
    let n = x.len();
    if !(2..=MAX_DIM).contains(&n) {
        return Err(Error::DimensionOutOfRange(n));
    }
    let r = dot(x, x).sqrt();
    let u = dot(y, y).sqrt();
    if r == 0.0 {
        return Err(Error::ZeroVector("x"));
    }
    if u == 0.0 {
        return Err(Error::ZeroVector("y"));
    }
    let s = dot(x, y) / u;
    let m: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| xi - s / u * yi).collect();
    // r² − s² cancels badly near y ∥ x; Σm_i² does not
    let m2 = dot(&m, &m);
    let hbar = SymTensor2::from_fn(n, |[i, j]| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - y[i] * y[j] / (u * u)
    });
    Ok(EvalPoint {
        n,
        x: x.to_vec(),
        y: y.to_vec(),
        r,
        u,
        s,
        m,
        hbar,
        m2,
        degenerate: m2 <= DEGENERACY_RTOL * r * r,
    })
}

impl EvalPoint {
    /// Reject points where y ∥ x.
    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.degenerate {
            Err(Error::DegeneratePoint("y is parallel to x (m = 0)"))
        } else {
            Ok(())
        }
    }

    /// Same x, direction scaled by λ.
    pub fn rescaled(&self, lambda: f64) -> Result<EvalPoint> {
        let y: Vec<f64> = self.y.iter().map(|v| v * lambda).collect();
        make_eval_point(&self.x, &y)
    }
}

pub fn n_tensor(p: &EvalPoint) -> SymTensor2 {
    SymTensor2::from_fn(p.n, |[i, j]| (p.y[i] * p.m[j] + p.y[j] * p.m[i]) / p.u)
}

/// Symmetrized rank-4 building blocks over ℏ, m and n.
pub struct Blocks<'a> {
    p: &'a EvalPoint,
    nt: SymTensor2,
}

impl<'a> Blocks<'a> {
    pub fn new(p: &'a EvalPoint) -> Self {
        Blocks { p, nt: n_tensor(p) }
    }

    fn h(&self, a: usize, b: usize) -> f64 {
        self.p.hbar.get([a, b])
    }

    /// ℏ_hiℏ_jk + ℏ_hjℏ_ik + ℏ_hkℏ_ij
    pub fn hh(&self, [h, i, j, k]: [usize; 4]) -> f64 {
        self.h(h, i) * self.h(j, k) + self.h(h, j) * self.h(i, k) + self.h(h, k) * self.h(i, j)
    }

    /// The six ℏ_ab m_c m_d over pairings of {h, i, j, k}.
    pub fn hmm(&self, [h, i, j, k]: [usize; 4]) -> f64 {
        let m = &self.p.m;
        self.h(h, i) * m[j] * m[k]
            + self.h(h, j) * m[i] * m[k]
            + self.h(h, k) * m[i] * m[j]
            + self.h(i, j) * m[h] * m[k]
            + self.h(i, k) * m[h] * m[j]
            + self.h(j, k) * m[h] * m[i]
    }

    pub fn mmmm(&self, [h, i, j, k]: [usize; 4]) -> f64 {
        let m = &self.p.m;
        m[h] * m[i] * m[j] * m[k]
    }

    /// The six ℏ_ab n_cd over ordered pairings.
    pub fn hn(&self, [h, i, j, k]: [usize; 4]) -> f64 {
        let n = |a, b| self.nt.get([a, b]);
        self.h(i, k) * n(j, h)
            + self.h(j, k) * n(i, h)
            + self.h(i, j) * n(k, h)
            + self.h(j, h) * n(i, k)
            + self.h(k, h) * n(i, j)
            + self.h(i, h) * n(j, k)
    }

    /// n_ij m_h m_k + n_hk m_i m_j
    pub fn nmm(&self, [h, i, j, k]: [usize; 4]) -> f64 {
        let m = &self.p.m;
        self.nt.get([i, j]) * m[h] * m[k] + self.nt.get([h, k]) * m[i] * m[j]
    }
}
