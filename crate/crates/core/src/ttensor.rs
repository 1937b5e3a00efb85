//! The T-tensor
//!
//! ```text
//! T_hijk = F·C_hijk − F·(C_rij C^r_hk + C_rjh C^r_ik + C_rih C^r_jk)
//!        + C_hij ℓ_k + C_hik ℓ_j + C_hjk ℓ_i + C_ijk ℓ_h,   ℓ_i = ∂F/∂y^i
//! ```
//!
//! For F = uφ(r, s) it collapses to three scalars:
//! T = Φ·(ℏℏ, 3 terms) + Ψ·(ℏmm, 6 terms) + Ω·mmmm. [`t_tensor_closed`]
//! builds that form; [`t_tensor_oracle`] builds the definition directly from
//! y-partials of F² and shares nothing with the σ/ρ path.
//!
//! The T-condition (T ≡ 0) holds iff σ₂ ≡ 0 (Riemannian) or, at every r,
//! φ = a·s^((cr² − 1)/(cr²))·(r² − s²)^(1/(2cr²)) for constants a, c > 0
//! in s. [`t_condition_check`] tests a metric against that on a grid and
//! [`recover_family_params`] reads c back off through
//! W = φ_s/(φ − sφ_s): 1 + sW = c(r² − s²).
//!
//! The identity behind the Φ = 0 branch is implemented as
//!
//! ```text
//! 2s + m²σ₂κ = s·m²·(φ − sφ_s)²/(φ(φ − sφ_s + m²φ_ss)) · (W_s + (1/s + 2s/m²)W + 2/m²)
//! ```
//!
//! The factor s·m² on the right is required; without it Randers at r = 2,
//! s = 1 gives 7/6 on the right against 3.5 on the left.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::cartan::{cartan_mixed, cartan_tensor, mean_cartan, quasi_c_decomposition, MEAN_CARTAN_ZERO};
use crate::catalog::MetricSpec;
use crate::error::{Error, Result};
use crate::frame::{make_eval_point, Blocks, EvalPoint};
use crate::jets::{finsler_generic, finsler_gradient, fpow2_partial, phi_jet, PhiJet};
use crate::metric::{regularity, SigmaRho, SINGULAR_RTOL};
use crate::tensor::{SymTensor2, SymTensor3, SymTensor4};

/// Condition number of the numeric g beyond which the oracle refuses.
pub const ORACLE_MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TCoefficients {
    #[serde(rename = "Phi")]
    pub phi: f64,
    #[serde(rename = "Psi")]
    pub psi: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
}

/// Φ, Ψ, Ω at a point. `sr` must be built from an order-4 jet.
pub fn t_coefficients(pj: &PhiJet, sr: &SigmaRho, u: f64) -> Result<TCoefficients> {
    sr.require_order(4)?;
    let (p, p1, s) = (pj.phi, pj.phi_s, pj.s);
    let m2 = pj.r * pj.r - s * s;
    let (s2, ms, mss, k) = (sr.sigma2, sr.mu_s, sr.mu_ss, sr.kappa);
    let lead = p / (4.0 * u);
    let tail = 2.0 * s2 + ms * m2;
    Ok(TCoefficients {
        phi: -lead * s2 * (2.0 * s + s2 * m2 * k),
        psi: lead * (4.0 * p1 * s2 / p - 2.0 * s * ms - 2.0 * sr.rho0 * s2 * s2 - s2 * k * tail),
        omega: lead
            * (8.0 * ms * p1 / p + 2.0 * mss - 6.0 * sr.rho0 * s2 * ms - 3.0 * tail * (k * ms + 2.0 * sr.rho3 * s2)),
    })
}

/// Magnitude against which each of Φ, Ψ, Ω is judged to vanish: the sum of
/// the absolute values of the terms in its formula, plus φ³/(u r^{2k})
/// (k = 0, 1, 2) so that an identically-zero formula is not judged against
/// nothing.
pub fn t_coefficient_scales(pj: &PhiJet, sr: &SigmaRho, u: f64) -> [f64; 3] {
    let (p, p1, s, r) = (pj.phi, pj.phi_s, pj.s, pj.r);
    let m2 = r * r - s * s;
    let (s2, ms, mss, k) = (sr.sigma2.abs(), sr.mu_s.abs(), sr.mu_ss.abs(), sr.kappa.abs());
    let lead = p.abs() / (4.0 * u);
    let tail = 2.0 * s2 + ms * m2;
    let floor = p.abs().powi(3) / u;
    let r2 = r * r;
    [
        lead * s2 * (2.0 * s.abs() + s2 * m2 * k) + floor,
        lead * (4.0 * (p1 * s2 / p).abs() + 2.0 * (s * ms).abs() + 2.0 * sr.rho0.abs() * s2 * s2 + s2 * k * tail)
            + floor / r2,
        lead * (8.0 * (ms * p1 / p).abs()
            + 2.0 * mss
            + 6.0 * sr.rho0.abs() * s2 * ms
            + 3.0 * tail * (k * ms + 2.0 * sr.rho3.abs() * s2))
            + floor / (r2 * r2),
    ]
}

/// Bound on the size of the terms that make up the closed-form T:
/// |ℏℏ| ≤ 3, |ℏmm| ≤ 6m², |mmmm| ≤ m⁴, each weighted by the term scale of
/// its coefficient.
pub fn t_closed_term_scale(pj: &PhiJet, sr: &SigmaRho, u: f64) -> f64 {
    let [a, b, c] = t_coefficient_scales(pj, sr, u);
    let m2 = pj.r * pj.r - pj.s * pj.s;
    3.0 * a + 6.0 * m2 * b + m2 * m2 * c
}

/// Φ·(ℏ_hiℏ_jk + …) + Ψ·(ℏ_hi m_j m_k + …) + Ω·m_h m_i m_j m_k
pub fn t_tensor_closed(p: &EvalPoint, tc: &TCoefficients) -> SymTensor4 {
    let bl = Blocks::new(p);
    SymTensor4::from_fn(p.n, |idx| t_closed_entry(&bl, tc, idx))
}

/// One entry of the closed form, for any index order.
pub fn t_closed_entry(bl: &Blocks, tc: &TCoefficients, idx: [usize; 4]) -> f64 {
    tc.phi * bl.hh(idx) + tc.psi * bl.hmm(idx) + tc.omega * bl.mmmm(idx)
}

/// Closed forms of the two cyclic sums in the definition of T:
/// (C_rij C^r_hk + C_rjh C^r_ik + C_rih C^r_jk, C_hij ℓ_k + C_hik ℓ_j + C_hjk ℓ_i + C_ijk ℓ_h).
pub fn t_tensor_cyclic_lemmas(p: &EvalPoint, pj: &PhiJet, sr: &SigmaRho) -> Result<(SymTensor4, SymTensor4)> {
    sr.require_order(3)?;
    let bl = Blocks::new(p);
    let (u, m2) = (p.u, p.m2);
    let (s2, ms, r0, r3, k) = (sr.sigma2, sr.mu_s, sr.rho0, sr.rho3, sr.kappa);
    let tail = 2.0 * s2 + ms * m2;
    let u2 = 4.0 * u * u;
    let cc_m = 3.0 * (2.0 * r0 * s2 * ms + tail * (r0 * ms + 2.0 * r3 * s2 + r3 * ms * m2)) / u2;
    let cc_hh = s2 * s2 * m2 * k / u2;
    let cc_hm = (2.0 * r0 * s2 * s2 + tail * (r0 * s2 + r3 * s2 * m2)) / u2;
    let cc = SymTensor4::from_fn(p.n, |idx| {
        cc_m * bl.mmmm(idx) + cc_hh * bl.hh(idx) + cc_hm * bl.hmm(idx)
    });

    let (f, f1) = (pj.phi, pj.phi_s);
    let cl = SymTensor4::from_fn(p.n, |idx| {
        ms * f / (2.0 * u) * bl.nmm(idx)
            + 2.0 * ms * f1 / u * bl.mmmm(idx)
            + f1 * s2 / u * bl.hmm(idx)
            + f * s2 / (2.0 * u) * bl.hn(idx)
    });
    Ok((cc, cl))
}

/// The same two cyclic sums by explicit contraction of the closed-form
/// C_ijk, C^r_jk and ℓ_i = (φ/u)y_i + φ_s m_i.
pub fn cyclic_sums_by_contraction(p: &EvalPoint, pj: &PhiJet, sr: &SigmaRho) -> (SymTensor4, SymTensor4) {
    let c = cartan_tensor(p, sr);
    let cm = cartan_mixed(p, sr);
    let ell: Vec<f64> = (0..p.n).map(|i| pj.phi / p.u * p.y[i] + pj.phi_s * p.m[i]).collect();
    let n = p.n;
    let cc = SymTensor4::from_fn(n, |[h, i, j, k]| {
        (0..n)
            .map(|r| {
                c.get([r, i, j]) * cm.get(r, h, k)
                    + c.get([r, j, h]) * cm.get(r, i, k)
                    + c.get([r, i, h]) * cm.get(r, j, k)
            })
            .sum()
    });
    let cl = SymTensor4::from_fn(n, |[h, i, j, k]| {
        c.get([h, i, j]) * ell[k] + c.get([h, i, k]) * ell[j] + c.get([h, j, k]) * ell[i] + c.get([i, j, k]) * ell[h]
    });
    (cc, cl)
}

/// Every ingredient of the T-tensor definition, computed from y-partials of
/// F² alone. Arrays are full (not symmetry-packed) and row-major, so the
/// symmetry of the result is something to check rather than assume.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTensors {
    pub n: usize,
    pub f: f64,
    /// ½∂²F²
    pub g: Vec<f64>,
    pub g_inv: Vec<f64>,
    /// ¼∂³F²
    pub c3: Vec<f64>,
    /// ¼∂⁴F²
    pub c4: Vec<f64>,
    /// C^r_jk = g^{ri}C_ijk
    pub c_mixed: Vec<f64>,
    /// ∂F/∂y^i
    pub ell: Vec<f64>,
    pub cc: Vec<f64>,
    pub cl: Vec<f64>,
    pub t: Vec<f64>,
    /// Σ_i |g^{ri}C_ijk| per entry of `c_mixed`.
    pub c_mixed_terms: Vec<f64>,
    /// Sum of |summands| per entry of `cc`.
    pub cc_terms: Vec<f64>,
}

/// Row-major offset of an index tuple in a full n^R array.
pub fn flat<const R: usize>(n: usize, idx: [usize; R]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Every index tuple of length R over 0..n, row-major.
pub fn tuples<const R: usize>(n: usize) -> impl Iterator<Item = [usize; R]> {
    (0..n.pow(R as u32)).map(move |mut f| {
        let mut idx = [0; R];
        for slot in idx.iter_mut().rev() {
            *slot = f % n;
            f /= n;
        }
        idx
    })
}

impl OracleTensors {
    pub fn new(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<OracleTensors> {
        let n = y.len();
        let partial = |idx: &[usize], k: f64| fpow2_partial(metric, x, y, idx).map(|v| v * k);
        let g: Vec<f64> = tuples::<2>(n).map(|i| partial(&i, 0.5)).collect::<Result<_>>()?;
        let c3: Vec<f64> = tuples::<3>(n).map(|i| partial(&i, 0.25)).collect::<Result<_>>()?;
        let c4: Vec<f64> = tuples::<4>(n).map(|i| partial(&i, 0.25)).collect::<Result<_>>()?;
        let f = finsler_generic(metric, x, y)?;
        let ell = finsler_gradient(metric, x, y)?;
        if !g.iter().chain(&c3).chain(&c4).chain(&ell).all(|v| v.is_finite()) || !f.is_finite() {
            return Err(Error::SingularMetric("derivatives of F^2 (not finite)"));
        }

        let gm = DMatrix::from_row_slice(n, n, &g);
        let eig = gm.clone().symmetric_eigen();
        let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), l| {
            (lo.min(l.abs()), hi.max(l.abs()))
        });
        if !(lo > 0.0 && hi / lo <= ORACLE_MAX_CONDITION) {
            return Err(Error::SingularMetric("numeric g (condition number above 1e12)"));
        }
        let gi = gm.try_inverse().ok_or(Error::SingularMetric("numeric g"))?;
        let g_inv: Vec<f64> = tuples::<2>(n).map(|[i, j]| gi[(i, j)]).collect();

        let c_at = |i, j, k| c3[flat(n, [i, j, k])];
        let c_mixed: Vec<f64> = tuples::<3>(n)
            .map(|[r, j, k]| (0..n).map(|i| g_inv[flat(n, [r, i])] * c_at(i, j, k)).sum())
            .collect();
        let c_mixed_terms: Vec<f64> = tuples::<3>(n)
            .map(|[r, j, k]| (0..n).map(|i| (g_inv[flat(n, [r, i])] * c_at(i, j, k)).abs()).sum())
            .collect();
        let cm_at = |r, j, k| c_mixed[flat(n, [r, j, k])];
        let cc_summands = |[h, i, j, k]: [usize; 4], r: usize| {
            [
                c_at(r, i, j) * cm_at(r, h, k),
                c_at(r, j, h) * cm_at(r, i, k),
                c_at(r, i, h) * cm_at(r, j, k),
            ]
        };
        let cc: Vec<f64> = tuples::<4>(n)
            .map(|idx| (0..n).map(|r| cc_summands(idx, r).iter().sum::<f64>()).sum())
            .collect();
        let cc_terms: Vec<f64> = tuples::<4>(n)
            .map(|idx| {
                (0..n)
                    .map(|r| cc_summands(idx, r).iter().map(|v| v.abs()).sum::<f64>())
                    .sum()
            })
            .collect();
        let cl: Vec<f64> = tuples::<4>(n)
            .map(|[h, i, j, k]| {
                c_at(h, i, j) * ell[k] + c_at(h, i, k) * ell[j] + c_at(h, j, k) * ell[i] + c_at(i, j, k) * ell[h]
            })
            .collect();
        let t: Vec<f64> = (0..c4.len()).map(|q| f * c4[q] - f * cc[q] + cl[q]).collect();
        Ok(OracleTensors {
            n,
            f,
            g,
            g_inv,
            c3,
            c4,
            c_mixed,
            ell,
            cc,
            cl,
            t,
            c_mixed_terms,
            cc_terms,
        })
    }

    pub fn g_sym(&self) -> SymTensor2 {
        SymTensor2::from_fn(self.n, |i| self.g[flat(self.n, i)])
    }

    pub fn g_inv_sym(&self) -> SymTensor2 {
        SymTensor2::from_fn(self.n, |i| self.g_inv[flat(self.n, i)])
    }

    pub fn c_sym(&self) -> SymTensor3 {
        SymTensor3::from_fn(self.n, |i| self.c3[flat(self.n, i)])
    }

    pub fn c4_sym(&self) -> SymTensor4 {
        SymTensor4::from_fn(self.n, |i| self.c4[flat(self.n, i)])
    }

    pub fn t_sym(&self) -> SymTensor4 {
        SymTensor4::from_fn(self.n, |i| self.t[flat(self.n, i)])
    }

    /// max over index tuples of |T_hijk − T_sorted(hijk)|.
    pub fn t_asymmetry(&self) -> f64 {
        tuples::<4>(self.n).fold(0.0, |acc, idx| {
            let mut sorted = idx;
            sorted.sort_unstable();
            acc.max((self.t[flat(self.n, idx)] - self.t[flat(self.n, sorted)]).abs())
        })
    }

    /// max over entries of F|∂̇C_hijk| + F·Σ|CC summands| + |Cℓ|: the size
    /// of what cancels to give T.
    pub fn t_term_scale(&self) -> f64 {
        (0..self.t.len()).fold(0.0, |acc, q| {
            acc.max(self.f * self.c4[q].abs() + self.f * self.cc_terms[q] + self.cl[q].abs())
        })
    }

    pub fn c_mixed_term_scale(&self) -> f64 {
        self.c_mixed_terms.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn cc_term_scale(&self) -> f64 {
        self.cc_terms.iter().fold(0.0, |m, v| m.max(*v))
    }

    /// max_j |T_hijk y^h| over (i, j, k).
    pub fn t_y_contraction(&self, y: &[f64]) -> f64 {
        let n = self.n;
        tuples::<3>(n).fold(0.0, |acc, [i, j, k]| {
            let v: f64 = (0..n).map(|h| y[h] * self.t[flat(n, [h, i, j, k])]).sum();
            acc.max(v.abs())
        })
    }
}

/// T_hijk from its definition, every derivative taken by jets.
pub fn t_tensor_oracle(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Result<SymTensor4> {
    Ok(OracleTensors::new(metric, x, y)?.t_sym())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WValue {
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "W_s")]
    pub w_s: f64,
}

/// W = φ_s/(φ − sφ_s), W_s = φφ_ss/(φ − sφ_s)².
pub fn w_value(pj: &PhiJet) -> Result<WValue> {
    pj.require_order(2)?;
    let a = pj.phi - pj.s * pj.phi_s;
    if a.abs() <= SINGULAR_RTOL * pj.phi.abs() || a == 0.0 {
        return Err(Error::SingularMetric("phi - s*phi_s"));
    }
    Ok(WValue {
        w: pj.phi_s / a,
        w_s: pj.phi * pj.phi_ss / (a * a),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiZeroIdentity {
    pub lhs: f64,
    pub rhs: f64,
}

/// Both sides of 2s + m²σ₂κ = s·m²·(φ−sφ_s)²/(φ·(φ−sφ_s+m²φ_ss))·(W_s + (1/s + 2s/m²)W + 2/m²).
pub fn phi_zero_identity(pj: &PhiJet, sr: &SigmaRho) -> Result<PhiZeroIdentity> {
    let (s, r) = (pj.s, pj.r);
    let m2 = r * r - s * s;
    if s == 0.0 {
        return Err(Error::DegeneratePoint("s = 0"));
    }
    if m2 <= crate::frame::DEGENERACY_RTOL * r * r {
        return Err(Error::DegeneratePoint("m^2 = 0"));
    }
    let w = w_value(pj)?;
    let a = pj.phi - s * pj.phi_s;
    let den = a + m2 * pj.phi_ss;
    let lhs = 2.0 * s + m2 * sr.sigma2 * sr.kappa;
    let rhs = s * m2 * a * a / (pj.phi * den) * (w.w_s + (1.0 / s + 2.0 * s / m2) * w.w + 2.0 / m2);
    Ok(PhiZeroIdentity { lhs, rhs })
}

/// Sample grid for classification. Each r is paired with s = ±r·f for every
/// fraction f; x = (r, 0, …), and y has length u.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub r_values: Vec<f64>,
    pub s_fractions: Vec<f64>,
    pub both_signs: bool,
    pub u: f64,
    pub n: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            r_values: vec![0.2, 0.4, 0.6, 0.8],
            s_fractions: vec![0.15, 0.35, 0.55, 0.75, 0.95],
            both_signs: true,
            u: 1.0,
            n: 3,
        }
    }
}

impl Grid {
    /// (r, s) pairs in a fixed order: r outer, then −f before +f.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &r in &self.r_values {
            for &f in &self.s_fractions {
                if self.both_signs {
                    out.push((r, -r * f));
                }
                out.push((r, r * f));
            }
        }
        out
    }

    /// Base point realizing (r, s) with |y| = u in dimension n.
    pub fn vectors(&self, r: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
        vectors_for(self.n, r, s, self.u)
    }

    pub fn describe(&self) -> String {
        let fr: Vec<String> = self.s_fractions.iter().map(|f| f.to_string()).collect();
        let rv: Vec<String> = self.r_values.iter().map(|f| f.to_string()).collect();
        format!(
            "r in {{{}}}, s = {}r*{{{}}}, u = {}, n = {}",
            rv.join(", "),
            if self.both_signs { "±" } else { "" },
            fr.join(", "),
            self.u,
            self.n
        )
    }
}

/// x = (r, 0, …), y = u·(s/r, √(1 − s²/r²), 0, …).
pub fn vectors_for(n: usize, r: f64, s: f64, u: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    x[0] = r;
    let c = s / r;
    y[0] = u * c;
    if n > 1 {
        y[1] = u * (1.0 - c * c).max(0.0).sqrt();
    }
    (x, y)
}

/// A worst-case grid value and where it occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extreme {
    pub value: f64,
    /// `value` divided by its natural magnitude; this is what is compared
    /// with the tolerance.
    pub scaled: f64,
    pub r: f64,
    pub s: f64,
}

impl Extreme {
    fn none() -> Extreme {
        Extreme {
            value: f64::NAN,
            scaled: f64::NAN,
            r: f64::NAN,
            s: f64::NAN,
        }
    }

    fn keep_max(self, other: Extreme) -> Extreme {
        if self.scaled.is_nan() || other.scaled > self.scaled {
            other
        } else {
            self
        }
    }

    fn keep_min(self, other: Extreme) -> Extreme {
        if self.scaled.is_nan() || other.scaled < self.scaled {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremes {
    #[serde(rename = "Phi")]
    pub phi: Extreme,
    #[serde(rename = "Psi")]
    pub psi: Extreme,
    #[serde(rename = "Omega")]
    pub omega: Extreme,
    pub sigma2: Extreme,
    /// smallest |𝒜| (scaled = |𝒜|·u)
    #[serde(rename = "A_min")]
    pub a_min: Extreme,
    /// largest quasi-C residual (scaled = residual / max|C|)
    pub quasi_c_residual: Extreme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub metric: String,
    pub riemannian: bool,
    pub t_condition: bool,
    pub quasi_c_reducible: bool,
    /// regular points / points inside the metric's domain
    pub regular_fraction: f64,
    pub grid: Grid,
    pub grid_description: String,
    pub tol: f64,
    pub points_total: usize,
    pub points_evaluated: usize,
    pub excluded_domain: usize,
    pub excluded_irregular: usize,
    pub excluded_singular: usize,
    pub extremes: Extremes,
}

enum Outcome {
    OutsideDomain,
    Irregular,
    Singular,
    Evaluated(Box<PointSummary>),
}

struct PointSummary {
    r: f64,
    s: f64,
    tc: TCoefficients,
    scales: [f64; 3],
    sigma2: f64,
    sigma2_scaled: f64,
    a_abs_u: f64,
    a: f64,
    quasi: Option<(f64, f64)>,
}

/// |σ₂| against |(φ − sφ_s)φ_s| + |sφφ_ss| + φ²/r, the size of the terms it
/// is built from.
pub fn sigma2_scaled(pj: &PhiJet, sr: &SigmaRho) -> f64 {
    let scale =
        ((pj.phi - pj.s * pj.phi_s) * pj.phi_s).abs() + (pj.s * pj.phi * pj.phi_ss).abs() + pj.phi * pj.phi / pj.r;
    sr.sigma2.abs() / scale
}

fn classify_point(metric: &MetricSpec, grid: &Grid, r: f64, s: f64) -> Outcome {
    if !metric.admits(r, s) {
        return Outcome::OutsideDomain;
    }
    let pj = match phi_jet(metric, r, s, 4) {
        Ok(pj) if pj.derivatives().iter().all(|v| v.is_finite()) => pj,
        Ok(_) => return Outcome::Singular,
        Err(e) if e.is_domain() => return Outcome::OutsideDomain,
        Err(_) => return Outcome::Singular,
    };
    let m2 = r * r - s * s;
    if !regularity(&pj, m2).regular {
        return Outcome::Irregular;
    }
    let sr = match SigmaRho::at(&pj, m2) {
        Ok(sr) => sr,
        Err(_) => return Outcome::Singular,
    };
    let (x, y) = grid.vectors(r, s);
    let p = match make_eval_point(&x, &y) {
        Ok(p) if !p.degenerate => p,
        _ => return Outcome::Singular,
    };
    let tc = match t_coefficients(&pj, &sr, grid.u) {
        Ok(tc) => tc,
        Err(_) => return Outcome::Singular,
    };
    let mc = mean_cartan(&p, &sr);
    let quasi = quasi_c_decomposition(&p, &sr, &mc).ok().map(|q| (q.residual, q.c_norm));
    Outcome::Evaluated(Box::new(PointSummary {
        r,
        s,
        tc,
        scales: t_coefficient_scales(&pj, &sr, grid.u),
        sigma2: sr.sigma2,
        sigma2_scaled: sigma2_scaled(&pj, &sr),
        a_abs_u: mc.a.abs() * grid.u,
        a: mc.a,
        quasi,
    }))
}

/// Evaluate Φ, Ψ, Ω, σ₂ and 𝒜 over the grid and decide whether the metric is
/// Riemannian, satisfies the T-condition, and is quasi-C-reducible there.
/// Points run in parallel; the report depends only on the inputs.
pub fn t_condition_check(metric: &MetricSpec, grid: &Grid, tol: f64) -> Result<ClassificationReport> {
    let pts = grid.points();
    let outcomes: Vec<Outcome> = pts
        .par_iter()
        .map(|&(r, s)| classify_point(metric, grid, r, s))
        .collect();

    let (mut dom, mut irr, mut sing) = (0, 0, 0);
    let mut ex = Extremes {
        phi: Extreme::none(),
        psi: Extreme::none(),
        omega: Extreme::none(),
        sigma2: Extreme::none(),
        a_min: Extreme::none(),
        quasi_c_residual: Extreme::none(),
    };
    let mut evaluated = 0;
    let mut quasi_all = grid.n >= 3;
    for o in &outcomes {
        let ps = match o {
            Outcome::OutsideDomain => {
                dom += 1;
                continue;
            }
            Outcome::Irregular => {
                irr += 1;
                continue;
            }
            Outcome::Singular => {
                sing += 1;
                continue;
            }
            Outcome::Evaluated(ps) => ps,
        };
        evaluated += 1;
        let at = |value: f64, scaled: f64| Extreme {
            value,
            scaled,
            r: ps.r,
            s: ps.s,
        };
        ex.phi = ex.phi.keep_max(at(ps.tc.phi, ps.tc.phi.abs() / ps.scales[0]));
        ex.psi = ex.psi.keep_max(at(ps.tc.psi, ps.tc.psi.abs() / ps.scales[1]));
        ex.omega = ex.omega.keep_max(at(ps.tc.omega, ps.tc.omega.abs() / ps.scales[2]));
        ex.sigma2 = ex.sigma2.keep_max(at(ps.sigma2, ps.sigma2_scaled));
        ex.a_min = ex.a_min.keep_min(at(ps.a, ps.a_abs_u));
        match ps.quasi {
            Some((res, norm)) => {
                let scaled = if norm > 0.0 { res / norm } else { 0.0 };
                ex.quasi_c_residual = ex.quasi_c_residual.keep_max(at(res, scaled));
                if scaled > QUASI_C_RTOL {
                    quasi_all = false;
                }
            }
            None => quasi_all = false,
        }
    }
    if evaluated == 0 {
        return Err(Error::EmptyGrid);
    }
    let in_domain = pts.len() - dom;
    let t_max = ex.phi.scaled.max(ex.psi.scaled).max(ex.omega.scaled);
    Ok(ClassificationReport {
        metric: metric.label.clone(),
        riemannian: ex.sigma2.scaled < tol,
        t_condition: t_max < tol,
        quasi_c_reducible: quasi_all && ex.a_min.scaled > MEAN_CARTAN_ZERO,
        regular_fraction: (in_domain - irr) as f64 / in_domain as f64,
        grid_description: grid.describe(),
        grid: grid.clone(),
        tol,
        points_total: pts.len(),
        points_evaluated: evaluated,
        excluded_domain: dom,
        excluded_irregular: irr,
        excluded_singular: sing,
        extremes: ex,
    })
}

/// Quasi-C residual bound relative to max|C|.
pub const QUASI_C_RTOL: f64 = 1e-9;

/// s-samples r·{0.15, 0.35, 0.55, 0.75, 0.95}.
pub fn default_family_samples(r: f64) -> Vec<f64> {
    [0.15, 0.35, 0.55, 0.75, 0.95].iter().map(|f| r * f).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyFit {
    pub r: f64,
    pub c_estimate: f64,
    /// max over samples of |c(s) − c_estimate|
    pub max_deviation: f64,
    /// (s, c(s)) with c(s) = (1 + sW)/(r² − s²)
    pub samples: Vec<(f64, f64)>,
}

/// Read c off c = (1 + sW)/(r² − s²) at each sample. A family member gives
/// the same c everywhere.
pub fn recover_family_params(metric: &MetricSpec, r: f64, s_samples: &[f64]) -> Result<FamilyFit> {
    if s_samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut cs = Vec::with_capacity(s_samples.len());
    let mut riemannian = true;
    for &s in s_samples {
        let pj = phi_jet(metric, r, s, 4)?;
        let sr = crate::metric::sigmas(&pj)?;
        if sigma2_scaled(&pj, &sr) >= 1e-9 {
            riemannian = false;
        }
        let w = w_value(&pj)?;
        let m2 = r * r - s * s;
        if m2 <= 0.0 {
            return Err(Error::DegeneratePoint("s^2 >= r^2"));
        }
        cs.push((s, (1.0 + s * w.w) / m2));
    }
    if riemannian {
        return Err(Error::RiemannianAtRadius(r));
    }
    let mean = cs.iter().map(|(_, c)| c).sum::<f64>() / cs.len() as f64;
    let dev = cs.iter().fold(0.0f64, |m, (_, c)| m.max((c - mean).abs()));
    Ok(FamilyFit {
        r,
        c_estimate: mean,
        max_deviation: dev,
        samples: cs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin, Params};

    fn named(name: &str) -> MetricSpec {
        builtin(name, &Params::new()).unwrap()
    }

    fn with(name: &str, kv: &[(&str, f64)]) -> MetricSpec {
        builtin(name, &kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()).unwrap()
    }

    fn local(m: &MetricSpec, r: f64, s: f64, u: f64) -> (PhiJet, SigmaRho) {
        let pj = phi_jet(m, r, s, 4).unwrap();
        let sr = SigmaRho::at(&pj, r * r - s * s).unwrap();
        let _ = u;
        (pj, sr)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn randers_coefficients() {
        let (r, s, u) = (0.6, -0.25, 1.7);
        let (pj, sr) = local(&named("randers"), r, s, u);
        let tc = t_coefficients(&pj, &sr, u).unwrap();
        assert!(rel(tc.phi, -(r * r + s * s + 2.0 * s) / (4.0 * u)) < 1e-14);
        assert_eq!((tc.psi, tc.omega), (0.0, 0.0));
    }

    #[test]
    fn kropina_coefficients() {
        let (r, s, u): (f64, f64, f64) = (0.9, 0.4, 0.8);
        let (pj, sr) = local(&named("kropina"), r, s, u);
        let tc = t_coefficients(&pj, &sr, u).unwrap();
        assert!(rel(tc.phi, 2.0 / (s * u * r * r)) < 1e-13);
        assert!(rel(tc.psi, 2.0 / (u * r * r * s.powi(3))) < 1e-13);
        assert!(rel(tc.omega, 6.0 / (u * r * r * s.powi(5))) < 1e-13);
    }

    #[test]
    fn kropina_small_s_conditioning() {
        // Ω sums terms of order 1/s⁶ into a value of order 1/(r²s⁴): rounding
        // grows like (r/s)², about 1e-12 relative at s = r/20
        let (r, s, u): (f64, f64, f64) = (0.89, 0.0445, 1.85);
        let (pj, sr) = local(&named("kropina"), r, s, u);
        let tc = t_coefficients(&pj, &sr, u).unwrap();
        assert!(rel(tc.phi, 2.0 / (s * u * r * r)) < 1e-13);
        assert!(rel(tc.omega, 6.0 / (u * r * r * s.powi(5))) < 1e-11);
    }

    #[test]
    fn randers_closed_tensor_entries() {
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        let m = named("randers");
        let p = make_eval_point(&x, &y).unwrap();
        let (pj, sr) = local(&m, p.r, p.s, p.u);
        let t = t_tensor_closed(&p, &t_coefficients(&pj, &sr, p.u).unwrap());
        assert!((t.get([0, 0, 0, 0]) + 0.75).abs() < 1e-15);
        assert!((t.get([0, 0, 2, 2]) + 0.25).abs() < 1e-15);
        let o = t_tensor_oracle(&m, &x, &y).unwrap();
        assert!((o.get([0, 0, 0, 0]) + 0.75).abs() < 1e-14);
        assert!(o.max_abs_diff(&t) < 1e-14);
    }

    #[test]
    fn kropina_oracle_spot() {
        let x = [1.0, 1.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        let m = named("kropina");
        let p = make_eval_point(&x, &y).unwrap();
        let (pj, sr) = local(&m, p.r, p.s, p.u);
        let tc = t_coefficients(&pj, &sr, p.u).unwrap();
        assert!((tc.phi - 1.0).abs() < 1e-14);
        let closed = t_tensor_closed(&p, &tc);
        let oracle = t_tensor_oracle(&m, &x, &y).unwrap();
        assert!(closed.max_abs_diff(&oracle) <= 1e-12 * closed.max_abs());
    }

    #[test]
    fn euclidean_everything_zero() {
        let m = named("euclidean");
        let x = [0.3, 0.1, -0.2];
        let y = [0.4, 1.0, 0.2];
        let p = make_eval_point(&x, &y).unwrap();
        let (pj, sr) = local(&m, p.r, p.s, p.u);
        let tc = t_coefficients(&pj, &sr, p.u).unwrap();
        assert_eq!(t_tensor_closed(&p, &tc).max_abs(), 0.0);
        assert!(t_tensor_oracle(&m, &x, &y).unwrap().max_abs() < 1e-14);
        let (cc, cl) = t_tensor_cyclic_lemmas(&p, &pj, &sr).unwrap();
        assert_eq!((cc.max_abs(), cl.max_abs()), (0.0, 0.0));
        assert_eq!(w_value(&pj).unwrap().w, 0.0);
    }

    #[test]
    fn lemmas_match_contraction() {
        let m = MetricSpec::from_expr("exp(s)*(1+s^2)^(1/3)", &Params::new()).unwrap();
        let p = make_eval_point(&[0.4, -0.3, 0.2, 0.1], &[0.9, 0.4, -1.1, 0.3]).unwrap();
        let (pj, sr) = local(&m, p.r, p.s, p.u);
        let (cc, cl) = t_tensor_cyclic_lemmas(&p, &pj, &sr).unwrap();
        let (cc2, cl2) = cyclic_sums_by_contraction(&p, &pj, &sr);
        assert!(cc.max_abs_diff(&cc2) <= 1e-12 * cc.max_abs());
        assert!(cl.max_abs_diff(&cl2) <= 1e-12 * cl.max_abs());
    }

    #[test]
    fn w_examples() {
        let (pj, _) = local(&named("randers"), 0.5, 0.2, 1.0);
        assert_eq!(w_value(&pj).unwrap(), WValue { w: 1.0, w_s: 0.0 });
        let fam = with("tcondition_family", &[("a", 1.0), ("c", 2.0)]);
        let (r, s) = (0.7, 0.3);
        let (pj, _) = local(&fam, r, s, 1.0);
        let want = (2.0 * (r * r - s * s) - 1.0) / s;
        assert!(rel(w_value(&pj).unwrap().w, want) < 1e-12);
    }

    #[test]
    fn phi_zero_spot_values() {
        let (pj, sr) = local(&named("randers"), 2.0, 1.0, 1.0);
        let id = phi_zero_identity(&pj, &sr).unwrap();
        assert!((id.lhs - 3.5).abs() < 1e-14 && (id.rhs - 3.5).abs() < 1e-14);
        for m in [named("euclidean"), with("riemannian", &[("c1", 1.0), ("c2", 1.0)])] {
            let (pj, sr) = local(&m, 0.8, -0.3, 1.0);
            let id = phi_zero_identity(&pj, &sr).unwrap();
            assert!((id.lhs + 0.6).abs() < 1e-14 && (id.rhs + 0.6).abs() < 1e-14, "{id:?}");
        }
        let (pj, sr) = local(&named("randers"), 0.5, 0.0, 1.0);
        assert_eq!(
            phi_zero_identity(&pj, &sr).unwrap_err(),
            Error::DegeneratePoint("s = 0")
        );
    }

    #[test]
    fn grid_defaults() {
        let g = Grid::default();
        let pts = g.points();
        assert_eq!(pts.len(), 40);
        assert_eq!(pts[0], (0.2, -0.2 * 0.15));
        let (x, y) = g.vectors(0.6, -0.33);
        let p = make_eval_point(&x, &y).unwrap();
        assert!((p.r - 0.6).abs() < 1e-15 && (p.s + 0.33).abs() < 1e-15 && (p.u - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let fam = with("tcondition_family", &[("a", 1.0), ("c", 1.0)]);
        let rep = t_condition_check(&fam, &Grid::default(), 1e-9).unwrap();
        assert!(rep.t_condition && !rep.riemannian);
        assert_eq!(rep.excluded_domain, 20);

        let rep = t_condition_check(&named("randers"), &Grid::default(), 1e-9).unwrap();
        assert!(!rep.t_condition && !rep.riemannian && rep.quasi_c_reducible);
        assert_eq!(rep.regular_fraction, 1.0);

        let rm = with("riemannian", &[("c1", 1.0), ("c2", 1.0)]);
        let rep = t_condition_check(&rm, &Grid::default(), 1e-9).unwrap();
        assert!(rep.riemannian && rep.t_condition && !rep.quasi_c_reducible);

        let empty = Grid {
            r_values: vec![],
            ..Grid::default()
        };
        assert_eq!(t_condition_check(&rm, &empty, 1e-9).unwrap_err(), Error::EmptyGrid);
    }

    #[test]
    fn family_recovery() {
        let fam = with("tcondition_family", &[("a", 1.0), ("c", 2.0)]);
        let fit = recover_family_params(&fam, 0.5, &default_family_samples(0.5)).unwrap();
        assert!((fit.c_estimate - 2.0).abs() < 1e-10 && fit.max_deviation < 1e-10);
        let fit = recover_family_params(&named("randers"), 0.5, &default_family_samples(0.5)).unwrap();
        assert!(fit.max_deviation > 1e-3);
        let rm = with("riemannian", &[("c1", 2.0), ("c2", 0.5)]);
        assert_eq!(
            recover_family_params(&rm, 0.5, &default_family_samples(0.5)).unwrap_err(),
            Error::RiemannianAtRadius(0.5)
        );
    }
}
