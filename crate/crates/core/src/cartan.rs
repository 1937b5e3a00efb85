//! Cartan tensor C_ijk = ½∂g_ij/∂y^k in closed form, its (1,2) form, the
//! mean Cartan tensor C_i = 𝒜m_i, the vertical derivative ∂̇_hC_ijk and the
//! quasi-C-reducible decomposition
//! C_ijk = Q_ijC_k + Q_jkC_i + Q_kiC_j.
//!
//! Everything is expressed through σ₂ and μ_s (plus ρ's for raised
//! indices); Riemannian metrics have both zero and so C ≡ 0.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{Blocks, EvalPoint};
use crate::metric::SigmaRho;
use crate::tensor::{MixedTensor, SymTensor2, SymTensor3, SymTensor4};

/// |𝒜|·u at or below this counts as a vanishing mean Cartan tensor.
pub const MEAN_CARTAN_ZERO: f64 = 1e-10;

/// C_ijk = (σ₂/2u)(ℏ_ij m_k + ℏ_jk m_i + ℏ_ik m_j) + (μ_s/2u) m_i m_j m_k
pub fn cartan_tensor(p: &EvalPoint, sr: &SigmaRho) -> SymTensor3 {
    SymTensor3::from_fn(p.n, |idx| cartan_entry(p, sr, idx))
}

/// One entry of the closed form, for any index order.
pub fn cartan_entry(p: &EvalPoint, sr: &SigmaRho, [i, j, k]: [usize; 3]) -> f64 {
    let (h, m) = (&p.hbar, &p.m);
    let a = sr.sigma2 / (2.0 * p.u);
    let b = sr.mu_s / (2.0 * p.u);
    a * (h.get([i, j]) * m[k] + h.get([j, k]) * m[i] + h.get([i, k]) * m[j]) + b * m[i] * m[j] * m[k]
}

/// C^r_jk = g^{ri}C_ijk from the ρ/σ closed form.
pub fn cartan_mixed(p: &EvalPoint, sr: &SigmaRho) -> MixedTensor {
    let (h, m, x, y, u, m2) = (&p.hbar, &p.m, &p.x, &p.y, p.u, p.m2);
    let (s2, ms) = (sr.sigma2, sr.mu_s);
    let edge = sr.rho0 * s2 / (2.0 * u);
    let m_h = sr.rho0 * s2 / (2.0 * u);
    let m_mm = sr.rho0 * ms / (2.0 * u);
    let y_h = sr.rho2 * s2 * m2 / (2.0 * u * u);
    let y_mm = (2.0 * sr.rho2 * s2 + sr.rho2 * ms * m2) / (2.0 * u * u);
    let x_h = sr.rho3 * s2 * m2 / (2.0 * u);
    let x_mm = (2.0 * sr.rho3 * s2 + sr.rho3 * ms * m2) / (2.0 * u);
    let slices = (0..p.n)
        .map(|r| {
            SymTensor2::from_fn(p.n, |[j, k]| {
                let hjk = h.get([j, k]);
                let mjk = m[j] * m[k];
                edge * (h.get([r, j]) * m[k] + h.get([r, k]) * m[j])
                    + m[r] * (m_h * hjk + m_mm * mjk)
                    + y[r] * (y_h * hjk + y_mm * mjk)
                    + x[r] * (x_h * hjk + x_mm * mjk)
            })
        })
        .collect();
    MixedTensor { slices }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCartan {
    /// The scalar 𝒜.
    #[serde(rename = "A")]
    pub a: f64,
    /// C_i = 𝒜 m_i
    #[serde(rename = "C")]
    pub c: Vec<f64>,
}

/// 𝒜 = (1/2u)(ρ₀σ₂(n+1) + ρ₀μ_s m² + 3ρ₃σ₂m² + ρ₃μ_s m⁴)
pub fn mean_cartan(p: &EvalPoint, sr: &SigmaRho) -> MeanCartan {
    let (m2, n) = (p.m2, p.n as f64);
    let a = (sr.rho0 * sr.sigma2 * (n + 1.0)
        + sr.rho0 * sr.mu_s * m2
        + 3.0 * sr.rho3 * sr.sigma2 * m2
        + sr.rho3 * sr.mu_s * m2 * m2)
        / (2.0 * p.u);
    MeanCartan {
        a,
        c: p.m.iter().map(|mi| a * mi).collect(),
    }
}

/// ∂̇_hC_ijk, the y^h-derivative of the closed-form Cartan tensor.
pub fn cartan_vertical_closed(p: &EvalPoint, sr: &SigmaRho) -> SymTensor4 {
    let bl = Blocks::new(p);
    let u2 = p.u * p.u;
    let (s, s2, ms, mss) = (p.s, sr.sigma2, sr.mu_s, sr.mu_ss);
    SymTensor4::from_fn(p.n, |idx| {
        (-s2 * bl.hn(idx) - s * s2 * bl.hh(idx) - s * ms * bl.hmm(idx) + mss * bl.mmmm(idx) - ms * bl.nmm(idx))
            / (2.0 * u2)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiCDecomposition {
    #[serde(rename = "Q")]
    pub q: SymTensor2,
    /// max over index multisets of |C_ijk − (Q_ijC_k + Q_jkC_i + Q_kiC_j)|
    pub residual: f64,
    /// max |C_ijk|, the natural scale for `residual`
    pub c_norm: f64,
}

/// Q_ij = σ₂/(2u𝒜)·ℏ_ij + μ_s/(6u𝒜³)·C_iC_j and the reconstruction residual.
pub fn quasi_c_decomposition(p: &EvalPoint, sr: &SigmaRho, mc: &MeanCartan) -> Result<QuasiCDecomposition> {
    if p.n < 3 {
        return Err(Error::DimensionTooSmall(p.n));
    }
    if mc.a.abs() * p.u <= MEAN_CARTAN_ZERO {
        return Err(Error::ZeroMeanCartan(mc.a));
    }
    let u = p.u;
    let a = mc.a;
    let ci = &mc.c;
    let q = SymTensor2::from_fn(p.n, |[i, j]| {
        sr.sigma2 / (2.0 * u * a) * p.hbar.get([i, j]) + sr.mu_s / (6.0 * u * a * a * a) * ci[i] * ci[j]
    });
    let c = cartan_tensor(p, sr);
    let rebuilt = SymTensor3::from_fn(p.n, |[i, j, k]| {
        q.get([i, j]) * ci[k] + q.get([j, k]) * ci[i] + q.get([k, i]) * ci[j]
    });
    Ok(QuasiCDecomposition {
        residual: c.max_abs_diff(&rebuilt),
        c_norm: c.max_abs(),
        q,
    })
}
