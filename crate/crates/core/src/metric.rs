//! The scalar bundle σ₀..σ₃, μ = σ₁ with μ_s, μ_ss, the inverse-metric
//! scalars ρ₀..ρ₃ and κ = ρ₀ + ρ₃m², and the metric tensor with its inverse:
//!
//! ```text
//! g_ij = σ₀δ_ij + σ₁x_ix_j + (σ₂/u)(x_iy_j + x_jy_i) + (σ₃/u²)y_iy_j
//! g^ij = ρ₀δ^ij + (ρ₁/u²)y^iy^j + (ρ₂/u)(x^iy^j + x^jy^i) + ρ₃x^ix^j
//! ```

use serde::Serialize;

use crate::catalog::MetricSpec;
use crate::error::{Error, Result};
use crate::frame::{make_eval_point, EvalPoint};
use crate::jets::{phi_jet, PhiJet, Scalar};
use crate::tensor::SymTensor2;

/// Relative threshold (in the scale φ²) below which a denominator of the
/// inverse metric counts as zero.
pub const SINGULAR_RTOL: f64 = 1e-14;

/// σ-part over any scalar algebra, so identities like ∂_sσ₀ = σ₂ can be
/// checked with jets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaParts<S> {
    pub sigma0: S,
    pub sigma1: S,
    pub sigma2: S,
    pub sigma3: S,
    pub mu_s: S,
    pub mu_ss: S,
}

/// σ's from (φ, φ_s, φ_ss, φ_sss, φ_ssss).
pub fn sigma_parts<S: Scalar>(d: [S; 5], s: S) -> SigmaParts<S> {
    let [p, p1, p2, p3, p4] = d;
    let a = p - s * p1;
    let sigma2 = a * p1 - s * p * p2;
    SigmaParts {
        sigma0: p * a,
        sigma1: p1 * p1 + p * p2,
        sigma2,
        sigma3: -(s * sigma2),
        mu_s: (p1 * p2).scale(3.0) + p * p3,
        mu_ss: (p2 * p2).scale(3.0) + (p1 * p3).scale(4.0) + p * p4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaRho {
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    /// μ = σ₁
    pub mu: f64,
    pub mu_s: f64,
    pub mu_ss: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub kappa: f64,
    /// Jet order the σ-part was built from; μ_s needs 3, μ_ss needs 4.
    pub order: usize,
}

impl SigmaRho {
    /// Full bundle at a point with m² = r² − s².
    pub fn at(pj: &PhiJet, m2: f64) -> Result<SigmaRho> {
        let mut sr = sigmas(pj)?;
        let rh = rhos(pj, m2)?;
        sr.rho0 = rh.rho0;
        sr.rho1 = rh.rho1;
        sr.rho2 = rh.rho2;
        sr.rho3 = rh.rho3;
        sr.kappa = rh.kappa;
        Ok(sr)
    }

    pub fn require_order(&self, need: usize) -> Result<()> {
        if self.order < need {
            Err(Error::InsufficientOrder { have: self.order, need })
        } else {
            Ok(())
        }
    }
}

/// σ/μ part; ρ fields are left at zero. Needs order ≥ 2; μ_s and μ_ss are
/// zero when the jet is too short to supply them.
pub fn sigmas(pj: &PhiJet) -> Result<SigmaRho> {
    pj.require_order(2)?;
    let sp = sigma_parts(pj.derivatives(), pj.s);
    Ok(SigmaRho {
        sigma0: sp.sigma0,
        sigma1: sp.sigma1,
        sigma2: sp.sigma2,
        sigma3: sp.sigma3,
        mu: sp.sigma1,
        mu_s: sp.mu_s,
        mu_ss: sp.mu_ss,
        rho0: 0.0,
        rho1: 0.0,
        rho2: 0.0,
        rho3: 0.0,
        kappa: 0.0,
        order: pj.order,
    })
}

/// ρ/κ part; σ fields are left at zero.
pub fn rhos(pj: &PhiJet, m2: f64) -> Result<SigmaRho> {
    pj.require_order(2)?;
    let (p, p1, p2, s) = (pj.phi, pj.phi_s, pj.phi_ss, pj.s);
    if p == 0.0 || !p.is_finite() {
        return Err(Error::SingularMetric("phi"));
    }
    let a = p - s * p1;
    let den = a + m2 * p2;
    if a.abs() <= SINGULAR_RTOL * p.abs() {
        return Err(Error::SingularMetric("phi - s*phi_s"));
    }
    if den.abs() <= SINGULAR_RTOL * p.abs() {
        return Err(Error::SingularMetric("phi - s*phi_s + m^2*phi_ss"));
    }
    let b = p * p1 - s * p1 * p1 - s * p * p2;
    let rho0 = 1.0 / (p * a);
    let rho1 = (s * p + m2 * p1) * b / (p * p * p * a * den);
    let rho2 = -b / (p * p * a * den);
    let rho3 = -p2 / (p * a * den);
    Ok(SigmaRho {
        sigma0: 0.0,
        sigma1: 0.0,
        sigma2: 0.0,
        sigma3: 0.0,
        mu: 0.0,
        mu_s: 0.0,
        mu_ss: 0.0,
        rho0,
        rho1,
        rho2,
        rho3,
        // equals rho0 + rho3*m², which cancels badly when m² ≫ s²
        kappa: 1.0 / (p * den),
        order: pj.order,
    })
}

pub fn metric_tensor(p: &EvalPoint, sr: &SigmaRho) -> SymTensor2 {
    let (x, y, u) = (&p.x, &p.y, p.u);
    SymTensor2::from_fn(p.n, |[i, j]| {
        let d = if i == j { sr.sigma0 } else { 0.0 };
        d + sr.sigma1 * x[i] * x[j] + sr.sigma2 / u * (x[i] * y[j] + x[j] * y[i]) + sr.sigma3 / (u * u) * y[i] * y[j]
    })
}

pub fn inverse_metric(p: &EvalPoint, sr: &SigmaRho) -> SymTensor2 {
    let (x, y, u) = (&p.x, &p.y, p.u);
    SymTensor2::from_fn(p.n, |[i, j]| {
        let d = if i == j { sr.rho0 } else { 0.0 };
        d + sr.rho1 / (u * u) * y[i] * y[j] + sr.rho2 / u * (x[i] * y[j] + x[j] * y[i]) + sr.rho3 * x[i] * x[j]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    pub phi_positive: bool,
    /// φ − sφ_s
    pub first: f64,
    /// φ − sφ_s + (r² − s²)φ_ss
    pub second: f64,
    pub regular: bool,
}

pub fn regularity(pj: &PhiJet, m2: f64) -> RegularityReport {
    let first = pj.phi - pj.s * pj.phi_s;
    let second = first + m2 * pj.phi_ss;
    let phi_positive = pj.phi > 0.0;
    RegularityReport {
        phi_positive,
        first,
        second,
        regular: phi_positive && first > 0.0 && second > 0.0,
    }
}

/// Frame, φ-jet (order 4) and scalar bundle at one point: everything the
/// closed-form tensors consume.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalData {
    pub point: EvalPoint,
    pub jet: PhiJet,
    pub sr: SigmaRho,
}

impl LocalData {
    pub fn new(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<LocalData> {
        let point = make_eval_point(x, y)?;
        let jet = phi_jet(metric, point.r, point.s, 4)?;
        let sr = SigmaRho::at(&jet, point.m2)?;
        Ok(LocalData { point, jet, sr })
    }

    pub fn regularity(&self) -> RegularityReport {
        regularity(&self.jet, self.point.m2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin, Params};
    use proptest::prelude::*;

    fn named(name: &str) -> MetricSpec {
        builtin(name, &Params::new()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn randers_sigmas_and_rhos() {
        let (r, s) = (0.7, 0.3);
        let pj = phi_jet(&named("randers"), r, s, 4).unwrap();
        let sr = SigmaRho::at(&pj, r * r - s * s).unwrap();
        assert_eq!((sr.sigma0, sr.sigma1, sr.sigma2, sr.sigma3), (1.0 + s, 1.0, 1.0, -s));
        assert_eq!((sr.mu_s, sr.mu_ss), (0.0, 0.0));
        assert!(close(sr.rho0, 1.0 / (1.0 + s), 1e-15));
        assert!(close(sr.rho1, (r * r + s) / (1.0 + s).powi(3), 1e-15));
        assert!(close(sr.rho2, -1.0 / (1.0 + s).powi(2), 1e-15));
        assert_eq!(sr.rho3, 0.0);
        assert!(close(sr.kappa, 1.0 / (1.0 + s), 1e-15));
    }

    #[test]
    fn euclidean_sigmas_and_rhos() {
        let pj = phi_jet(&named("euclidean"), 0.5, 0.1, 4).unwrap();
        let sr = SigmaRho::at(&pj, 0.24).unwrap();
        assert_eq!((sr.sigma0, sr.sigma1, sr.sigma2, sr.sigma3), (1.0, 0.0, 0.0, -0.0));
        assert_eq!(
            (sr.rho0, sr.rho1, sr.rho2, sr.rho3, sr.kappa),
            (1.0, 0.0, -0.0, -0.0, 1.0)
        );
    }

    #[test]
    fn kropina_sigmas_and_rhos() {
        let (r, s): (f64, f64) = (1.5, 0.6);
        let pj = phi_jet(&named("kropina"), r, s, 4).unwrap();
        let m2 = r * r - s * s;
        let sr = SigmaRho::at(&pj, m2).unwrap();
        assert!(close(sr.sigma0, 2.0 / (s * s), 1e-14));
        assert!(close(sr.sigma2, -4.0 / s.powi(3), 1e-14));
        assert!(close(sr.mu, 3.0 / s.powi(4), 1e-14));
        assert!(close(sr.mu_s, -12.0 / s.powi(5), 1e-14));
        assert!(close(sr.mu_ss, 60.0 / s.powi(6), 1e-14));
        assert!(close(sr.rho0, s * s / 2.0, 1e-14));
        assert!(close(sr.rho3, -s * s / (2.0 * r * r), 1e-14));
        assert!(close(sr.kappa, s.powi(4) / (2.0 * r * r), 1e-14));
    }

    #[test]
    fn randers_metric_and_inverse() {
        let m = named("randers");
        let p = make_eval_point(&[1.0, 1.0, 0.0], &[0.0, 2.0, 0.0]).unwrap();
        let pj = phi_jet(&m, p.r, p.s, 2).unwrap();
        let g = metric_tensor(&p, &SigmaRho::at(&pj, p.m2).unwrap());
        assert_eq!(
            g.to_rows(),
            vec![vec![3.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 2.0]]
        );
        assert_eq!(g.mat_vec(&p.y).iter().zip(&p.y).map(|(a, b)| a * b).sum::<f64>(), 16.0);

        let p = make_eval_point(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        let pj = phi_jet(&m, p.r, p.s, 2).unwrap();
        let sr = SigmaRho::at(&pj, p.m2).unwrap();
        assert_eq!(
            metric_tensor(&p, &sr).to_rows(),
            vec![vec![2.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        assert_eq!(
            inverse_metric(&p, &sr).to_rows(),
            vec![vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
    }

    #[test]
    fn regularity_examples() {
        let rep = regularity(&phi_jet(&named("randers"), 0.5, -0.4, 2).unwrap(), 0.09);
        assert!(rep.regular);
        assert_eq!((rep.first, rep.second), (1.0, 1.0));
        let rep = regularity(&phi_jet(&named("kropina"), 0.5, -0.4, 2).unwrap(), 0.09);
        assert!(!rep.phi_positive && !rep.regular);
        assert!(regularity(&phi_jet(&named("euclidean"), 0.5, 0.4, 2).unwrap(), 0.09).regular);
    }

    #[test]
    fn singular_and_short_jets() {
        // φ = s: φ − sφ_s ≡ 0
        let m = MetricSpec::from_expr("s", &Params::new()).unwrap();
        let pj = phi_jet(&m, 1.0, 0.5, 4).unwrap();
        assert_eq!(rhos(&pj, 0.75).unwrap_err(), Error::SingularMetric("phi - s*phi_s"));
        let pj = phi_jet(&named("randers"), 0.5, 0.1, 1).unwrap();
        assert_eq!(sigmas(&pj).unwrap_err(), Error::InsufficientOrder { have: 1, need: 2 });
    }

    proptest! {
        #[test]
        fn kappa_identity_and_sigma3(r in 0.1f64..0.9, frac in -0.95f64..0.95) {
            let s = r * frac;
            let m = MetricSpec::from_expr("exp(s)*(1+s^2)^(1/3) + r^2", &Params::new()).unwrap();
            let pj = phi_jet(&m, r, s, 4).unwrap();
            let m2 = r * r - s * s;
            let sr = SigmaRho::at(&pj, m2).unwrap();
            let den = pj.phi - s * pj.phi_s + m2 * pj.phi_ss;
            prop_assert!(close(sr.kappa * pj.phi * den, 1.0, 1e-10));
            prop_assert!(close(sr.rho0 + sr.rho3 * m2, sr.kappa, 1e-9));
            let expanded = s * s * pj.phi * pj.phi_ss - s * (pj.phi - s * pj.phi_s) * pj.phi_s;
            prop_assert!(close(sr.sigma3, expanded, 1e-12));
        }
    }
}
