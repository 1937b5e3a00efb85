//! Property suites run over seeded random points.
//!
//! * `oracle`: every closed form against its definition via jets
//!   (g, C, ∂̇C, C^r_jk, ℓ, both cyclic sums, T), plus symmetry,
//!   y-annihilation and homogeneity of the oracle T.
//! * `identities`: σ-derivative identities, κ, W, g·g⁻¹ = I, F² = g(y, y),
//!   y-annihilation, index symmetry, homogeneity degrees, mean Cartan and
//!   (1,2) form by contraction, the cyclic-sum lemmas.
//! * `phi-zero`: both sides of the Φ = 0 identity.
//! * `quasi-c`: reconstruction of C_ijk from Q_ij and C_i (n ≥ 3, 𝒜 ≠ 0).
//!
//! Each property reports its worst error, where it happened, and both
//! compared values there.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::cartan::{
    cartan_entry, cartan_mixed, cartan_tensor, cartan_vertical_closed, mean_cartan, quasi_c_decomposition,
    MEAN_CARTAN_ZERO,
};
use crate::catalog::MetricSpec;
use crate::error::{Error, Result};
use crate::frame::Blocks;
use crate::jets::{Dual, Jet};
use crate::metric::{inverse_metric, metric_tensor, sigma_parts, LocalData};
use crate::sampling::{sample_points, SamplePoint};
use crate::tensor::{multisets, MixedTensor, SymTensor, SymTensor4};
use crate::tolerance::{relative, scale_of, worst_entry};
use crate::ttensor::{
    cyclic_sums_by_contraction, flat, phi_zero_identity, t_closed_entry, t_closed_term_scale, t_coefficients,
    t_tensor_closed, t_tensor_cyclic_lemmas, tuples, w_value, OracleTensors,
};

/// Direction scalings used for homogeneity checks.
pub const HOMOGENEITY_LAMBDAS: [f64; 2] = [2.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Oracle,
    Identities,
    PhiZero,
    QuasiC,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["oracle", "identities", "phi-zero", "quasi-c", "all"];

    fn covers(self, part: Suite) -> bool {
        self == Suite::All || self == part
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "oracle" => Suite::Oracle,
            "identities" => Suite::Identities,
            "phi-zero" => Suite::PhiZero,
            "quasi-c" => Suite::QuasiC,
            "all" => Suite::All,
            other => {
                return Err(format!(
                    "unknown suite `{other}` (expected one of {})",
                    Suite::NAMES.join(", ")
                ))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [
            Suite::Oracle,
            Suite::Identities,
            Suite::PhiZero,
            Suite::QuasiC,
            Suite::All,
        ]
        .iter()
        .position(|s| s == self)
        .unwrap_or(0);
        f.write_str(Suite::NAMES[i])
    }
}

/// Where a property was worst, and the two values compared there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Tensor index of the worst entry (empty for scalars).
    pub entry: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub tol: f64,
    pub max_err: f64,
    /// Points where the property was evaluated.
    pub points: usize,
    /// Points where it does not apply (e.g. 𝒜 = 0 for the quasi-C check).
    pub skipped: usize,
    pub passed: bool,
    pub worst: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub metric: String,
    pub suite: Suite,
    pub seed: u64,
    pub samples: usize,
    pub dim: usize,
    /// Raw draws needed to collect `samples` admissible points.
    pub draws: usize,
    pub rejected: BTreeMap<&'static str, usize>,
    pub checks: Vec<PropertyCheck>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub samples: usize,
    pub seed: u64,
    pub dim: usize,
    /// Replaces every property's own tolerance when set.
    pub tol: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            suite: Suite::All,
            samples: 200,
            seed: 42,
            dim: 3,
            tol: None,
        }
    }
}

enum Outcome {
    Measured { err: f64, witness: Witness },
    Skipped,
}

struct Measure {
    name: &'static str,
    tol: f64,
    outcome: Outcome,
}

struct Recorder<'a> {
    pt: &'a SamplePoint,
    out: Vec<Measure>,
}

impl<'a> Recorder<'a> {
    fn witness(&self, entry: Vec<usize>, lhs: f64, rhs: f64) -> Witness {
        Witness {
            x: self.pt.x.clone(),
            y: self.pt.y.clone(),
            entry,
            lhs,
            rhs,
            note: None,
        }
    }

    fn push(&mut self, name: &'static str, tol: f64, err: f64, witness: Witness) {
        self.out.push(Measure {
            name,
            tol,
            outcome: Outcome::Measured { err, witness },
        });
    }

    fn skip(&mut self, name: &'static str, tol: f64) {
        self.out.push(Measure {
            name,
            tol,
            outcome: Outcome::Skipped,
        });
    }

    fn error(&mut self, name: &'static str, e: &Error) {
        let mut w = self.witness(vec![], f64::NAN, f64::NAN);
        w.note = Some(e.to_string());
        self.push(name, 0.0, f64::INFINITY, w);
    }

    fn scalar(&mut self, name: &'static str, tol: f64, lhs: f64, rhs: f64, natural: f64) {
        let err = relative((lhs - rhs).abs(), scale_of(&[lhs, rhs, natural]));
        let w = self.witness(vec![], lhs, rhs);
        self.push(name, tol, err, w);
    }

    /// Compare two flat arrays; `entry` maps a flat offset to its index.
    fn arrays(
        &mut self,
        name: &'static str,
        tol: f64,
        a: &[f64],
        b: &[f64],
        natural: f64,
        entry: impl Fn(usize) -> Vec<usize>,
    ) {
        let (k, d) = worst_entry(a, b);
        let scale = scale_of(a).max(scale_of(b)).max(natural);
        let w = self.witness(entry(k), a[k], b[k]);
        self.push(name, tol, relative(d, scale), w);
    }

    fn sym<const R: usize>(&mut self, name: &'static str, tol: f64, a: &SymTensor<R>, b: &SymTensor<R>, natural: f64) {
        let n = a.dim();
        self.arrays(name, tol, a.stored(), b.stored(), natural, |k| {
            multisets::<R>(n).nth(k).map(|m| m.to_vec()).unwrap_or_default()
        });
    }

    /// A quantity that should vanish, measured against `scale`.
    fn zero(&mut self, name: &'static str, tol: f64, value: f64, scale: f64, entry: Vec<usize>) {
        let w = self.witness(entry, value, 0.0);
        self.push(name, tol, relative(value.abs(), scale), w);
    }
}

fn mixed_flat(t: &MixedTensor) -> Vec<f64> {
    let n = t.dim();
    tuples::<3>(n).map(|[r, j, k]| t.get(r, j, k)).collect()
}

fn full_entry<const R: usize>(n: usize) -> impl Fn(usize) -> Vec<usize> {
    move |k| tuples::<R>(n).nth(k).map(|t| t.to_vec()).unwrap_or_default()
}

fn identities(rec: &mut Recorder, metric: &MetricSpec, ld: &LocalData) {
    let (p, pj, sr) = (&ld.point, &ld.jet, &ld.sr);
    let n = p.n;
    let (r, s, u) = (p.r, p.s, p.u);
    let phi2 = pj.phi * pj.phi;

    match metric.phi(r, Jet::<Dual<f64>, 5>::variable(Dual::variable(s))) {
        Ok(j) => {
            let sp = sigma_parts(j.derivatives(), Dual::variable(s));
            let d = |v: Dual<f64>| v.derivative(1);
            rec.scalar("dsigma0/ds = sigma2", 1e-10, d(sp.sigma0), sp.sigma2.re(), phi2 / r);
            rec.scalar(
                "dsigma2/ds = -s*mu_s",
                1e-10,
                d(sp.sigma2),
                -s * sp.mu_s.re(),
                phi2 / (r * r),
            );
            rec.scalar(
                "dsigma3/ds = s^2*mu_s - sigma2",
                1e-10,
                d(sp.sigma3),
                s * s * sp.mu_s.re() - sp.sigma2.re(),
                phi2 / r,
            );
            let dd = j.derivatives();
            let wd = dd[1] / (dd[0] - Dual::variable(s) * dd[1]);
            if let Ok(w) = w_value(pj) {
                rec.scalar("W_s = dW/ds", 1e-10, w.w_s, d(wd), 1.0 / (r * r));
                rec.scalar(
                    "W*(phi - s*phi_s) = phi_s",
                    1e-12,
                    w.w * (pj.phi - s * pj.phi_s),
                    pj.phi_s,
                    pj.phi / r,
                );
            }
        }
        Err(e) => rec.error("jet evaluation", &e),
    }
    let den = pj.phi - s * pj.phi_s + p.m2 * pj.phi_ss;
    rec.scalar(
        "kappa*phi*(phi - s*phi_s + m^2*phi_ss) = 1",
        1e-10,
        sr.kappa * pj.phi * den,
        1.0,
        1.0,
    );
    let rho_terms = sr.rho0.abs() + (sr.rho3 * p.m2).abs();
    rec.scalar(
        "rho0 + rho3*m^2 = kappa",
        1e-10,
        sr.rho0 + sr.rho3 * p.m2,
        sr.kappa,
        rho_terms,
    );
    let expanded = s * s * pj.phi * pj.phi_ss - s * (pj.phi - s * pj.phi_s) * pj.phi_s;
    rec.scalar("sigma3 = -s*sigma2", 1e-12, sr.sigma3, expanded, phi2);

    let g = metric_tensor(p, sr);
    let gi = inverse_metric(p, sr);
    let big_g = g.max_abs();
    let gy = g.mat_vec(&p.y);
    let f2 = u * u * phi2;
    let gyy_terms: f64 = tuples::<2>(n)
        .map(|[i, j]| (g.get([i, j]) * p.y[i] * p.y[j]).abs())
        .sum();
    rec.scalar(
        "g(y, y) = F^2",
        1e-10,
        gy.iter().zip(&p.y).map(|(a, b)| a * b).sum(),
        f2,
        gyy_terms,
    );

    let prod: Vec<f64> = tuples::<2>(n)
        .map(|[i, j]| (0..n).map(|k| gi.get([i, k]) * g.get([k, j])).sum())
        .collect();
    let ident: Vec<f64> = tuples::<2>(n).map(|[i, j]| if i == j { 1.0 } else { 0.0 }).collect();
    // rounding in a contraction is relative to the sum of |terms|, not to the result
    let prod_terms = tuples::<2>(n).fold(0.0f64, |m, [i, j]| {
        m.max((0..n).map(|k| (gi.get([i, k]) * g.get([k, j])).abs()).sum())
    });
    rec.arrays("g^-1 g = I", 1e-10, &prod, &ident, prod_terms, full_entry::<2>(n));

    let hy = p.hbar.mat_vec(&p.y);
    let (k, v) = worst_entry(&hy, &vec![0.0; n]);
    rec.zero("hbar y = 0", 1e-12, v, u, vec![k]);
    let my: f64 = p.m.iter().zip(&p.y).map(|(a, b)| a * b).sum();
    rec.zero("m . y = 0", 1e-12, my, r * u, vec![]);

    let c = cartan_tensor(p, sr);
    let c_nat = big_g / u;
    let cy = c.contract_first(&p.y);
    let (k, v) = worst_entry(&cy, &vec![0.0; cy.len()]);
    rec.zero(
        "y^i C_ijk = 0",
        1e-11,
        v,
        u * c.max_abs().max(c_nat),
        full_entry::<2>(n)(k),
    );

    let c_full: Vec<f64> = tuples::<3>(n).map(|idx| cartan_entry(p, sr, idx)).collect();
    let c_sorted: Vec<f64> = tuples::<3>(n)
        .map(|mut idx| {
            idx.sort_unstable();
            cartan_entry(p, sr, idx)
        })
        .collect();
    rec.arrays("C total symmetry", 1e-12, &c_full, &c_sorted, c_nat, full_entry::<3>(n));

    let tc = match t_coefficients(pj, sr, u) {
        Ok(tc) => tc,
        Err(e) => return rec.error("T coefficients", &e),
    };
    let t = t_tensor_closed(p, &tc);
    let f = u * pj.phi;
    let t_nat = (f * big_g / (u * u)).max(t_closed_term_scale(pj, sr, u));
    let ty = t.contract_first(&p.y);
    let (k, v) = worst_entry(&ty, &vec![0.0; ty.len()]);
    rec.zero(
        "y^h T_hijk = 0",
        1e-12,
        v,
        u * t.max_abs().max(t_nat),
        full_entry::<3>(n)(k),
    );

    let bl = Blocks::new(p);
    let t_full: Vec<f64> = tuples::<4>(n).map(|idx| t_closed_entry(&bl, &tc, idx)).collect();
    let t_sorted: Vec<f64> = tuples::<4>(n)
        .map(|mut idx| {
            idx.sort_unstable();
            t_closed_entry(&bl, &tc, idx)
        })
        .collect();
    rec.arrays("T total symmetry", 1e-12, &t_full, &t_sorted, t_nat, full_entry::<4>(n));

    let cv = cartan_vertical_closed(p, sr);
    for &lambda in &HOMOGENEITY_LAMBDAS {
        let ys: Vec<f64> = p.y.iter().map(|v| v * lambda).collect();
        match LocalData::new(metric, &p.x, &ys) {
            Ok(l2) => {
                let (p2, sr2) = (&l2.point, &l2.sr);
                rec.sym("g(x, ly) = g(x, y)", 1e-10, &metric_tensor(p2, sr2), &g, big_g);
                rec.sym(
                    "C(x, ly) = C(x, y)/l",
                    1e-10,
                    &cartan_tensor(p2, sr2),
                    &c.scaled(1.0 / lambda),
                    c_nat / lambda,
                );
                rec.sym(
                    "dC(x, ly) = dC(x, y)/l^2",
                    1e-10,
                    &cartan_vertical_closed(p2, sr2),
                    &cv.scaled(1.0 / (lambda * lambda)),
                    big_g / (u * u * lambda * lambda),
                );
                match t_coefficients(&l2.jet, sr2, p2.u) {
                    Ok(tc2) => {
                        let nat = t_nat.max(lambda * t_closed_term_scale(&l2.jet, sr2, p2.u)) / lambda;
                        rec.sym(
                            "T(x, ly) = T(x, y)/l",
                            1e-10,
                            &t_tensor_closed(p2, &tc2),
                            &t.scaled(1.0 / lambda),
                            nat,
                        )
                    }
                    Err(e) => rec.error("T coefficients", &e),
                }
            }
            Err(e) => rec.error("closed-form evaluation", &e),
        }
    }

    let mc = mean_cartan(p, sr);
    let direct: Vec<f64> = (0..n)
        .map(|i| tuples::<2>(n).map(|[j, k]| gi.get([j, k]) * c.get([i, j, k])).sum())
        .collect();
    let gi_nat = gi.max_abs() * big_g / u;
    let direct_terms = (0..n).fold(0.0f64, |m, i| {
        m.max(
            tuples::<2>(n)
                .map(|[j, k]| (gi.get([j, k]) * c.get([i, j, k])).abs())
                .sum(),
        )
    });
    rec.arrays("C_i = A m_i = g^jk C_ijk", 1e-10, &mc.c, &direct, direct_terms, |k| {
        vec![k]
    });

    let cm = mixed_flat(&cartan_mixed(p, sr));
    let raised: Vec<f64> = tuples::<3>(n)
        .map(|[rr, j, k]| (0..n).map(|i| gi.get([rr, i]) * c.get([i, j, k])).sum())
        .collect();
    let raised_terms = tuples::<3>(n).fold(0.0f64, |m, [rr, j, k]| {
        m.max((0..n).map(|i| (gi.get([rr, i]) * c.get([i, j, k])).abs()).sum())
    });
    rec.arrays(
        "C^r_jk = g^ri C_ijk",
        1e-10,
        &cm,
        &raised,
        raised_terms,
        full_entry::<3>(n),
    );

    match t_tensor_cyclic_lemmas(p, pj, sr) {
        Ok((cc, cl)) => {
            let (cc2, cl2) = cyclic_sums_by_contraction(p, pj, sr);
            let cc_nat = c_nat * gi_nat;
            let ell_nat = pj.phi.abs() + (pj.phi_s * r).abs();
            rec.sym("CC-sum lemma = contraction", 1e-9, &cc, &cc2, cc_nat);
            rec.sym("Cl-sum lemma = contraction", 1e-9, &cl, &cl2, c_nat * ell_nat);
            let rebuilt = SymTensor4::from_fn(n, |idx| f * cv.get(idx) - f * cc2.get(idx) + cl2.get(idx));
            let nat = t_nat.max(f * cv.max_abs()).max(f * cc2.max_abs()).max(cl2.max_abs());
            rec.sym("T = F dC - F CC + Cl (closed parts)", 1e-9, &t, &rebuilt, nat);
        }
        Err(e) => rec.error("cyclic lemmas", &e),
    }
}

fn oracle(rec: &mut Recorder, metric: &MetricSpec, ld: &LocalData) {
    let (p, pj, sr) = (&ld.point, &ld.jet, &ld.sr);
    let n = p.n;
    let u = p.u;
    let o = match OracleTensors::new(metric, &p.x, &p.y) {
        Ok(o) => o,
        Err(e) => return rec.error("oracle evaluation", &e),
    };
    let g = metric_tensor(p, sr);
    let big_g = g.max_abs();
    rec.sym("g = 1/2 d2(F^2)", 1e-9, &g, &o.g_sym(), big_g);
    let c = cartan_tensor(p, sr);
    rec.sym("C = 1/4 d3(F^2)", 1e-9, &c, &o.c_sym(), big_g / u);
    let cv = cartan_vertical_closed(p, sr);
    rec.sym("dC = 1/4 d4(F^2)", 1e-9, &cv, &o.c4_sym(), big_g / (u * u));
    let gi = inverse_metric(p, sr);
    let gi_nat = gi.max_abs() * big_g / u;
    rec.arrays(
        "C^r_jk closed = oracle",
        1e-9,
        &mixed_flat(&cartan_mixed(p, sr)),
        &o.c_mixed,
        gi_nat.max(o.c_mixed_term_scale()),
        full_entry::<3>(n),
    );

    let ell: Vec<f64> = (0..n).map(|i| pj.phi / u * p.y[i] + pj.phi_s * p.m[i]).collect();
    let ell_nat = pj.phi.abs() + (pj.phi_s * p.r).abs();
    rec.arrays(
        "l_i = (phi/u) y_i + phi_s m_i = dF/dy^i",
        1e-10,
        &ell,
        &o.ell,
        ell_nat,
        |k| vec![k],
    );
    let euler: f64 = o.ell.iter().zip(&p.y).map(|(a, b)| a * b).sum();
    rec.scalar("y^i dF/dy^i = F", 1e-10, euler, o.f, 0.0);

    let c_asym = tuples::<3>(n).fold((0.0f64, vec![]), |(m, at), idx| {
        let mut sorted = idx;
        sorted.sort_unstable();
        let d = (o.c3[flat(n, idx)] - o.c3[flat(n, sorted)]).abs();
        if d > m {
            (d, idx.to_vec())
        } else {
            (m, at)
        }
    });
    rec.zero(
        "oracle C total symmetry",
        1e-10,
        c_asym.0,
        c.max_abs().max(big_g / u),
        c_asym.1,
    );

    let f = o.f;
    let t_nat = (f * big_g / (u * u)).max(t_closed_term_scale(pj, sr, u));
    match (t_coefficients(pj, sr, u), t_tensor_cyclic_lemmas(p, pj, sr)) {
        (Ok(tc), Ok((cc, cl))) => {
            let cc_nat = ((big_g / u) * gi_nat).max(o.cc_term_scale());
            let cc_o = SymTensor4::from_fn(n, |i| o.cc[flat(n, i)]);
            let cl_o = SymTensor4::from_fn(n, |i| o.cl[flat(n, i)]);
            rec.sym("CC-sum lemma = oracle", 1e-9, &cc, &cc_o, cc_nat);
            rec.sym("Cl-sum lemma = oracle", 1e-9, &cl, &cl_o, (big_g / u) * ell_nat);
            let t = t_tensor_closed(p, &tc);
            let to = o.t_sym();
            let scale_t = o.t_term_scale().max(t_nat);
            rec.sym("T closed = T oracle", 1e-8, &t, &to, scale_t);
            rec.zero(
                "oracle T total symmetry",
                1e-10,
                o.t_asymmetry(),
                scale_t.max(to.max_abs()),
                vec![],
            );
            rec.zero(
                "oracle y^h T_hijk = 0",
                1e-9,
                o.t_y_contraction(&p.y),
                u * scale_t.max(to.max_abs()),
                vec![],
            );
            for &lambda in &HOMOGENEITY_LAMBDAS {
                let ys: Vec<f64> = p.y.iter().map(|v| v * lambda).collect();
                match OracleTensors::new(metric, &p.x, &ys) {
                    Ok(o2) => {
                        let want = to.scaled(1.0 / lambda);
                        let nat = scale_t.max(o2.t_term_scale() * lambda) / lambda;
                        rec.sym("oracle T(x, ly) = T(x, y)/l", 1e-9, &o2.t_sym(), &want, nat);
                    }
                    Err(e) => rec.error("oracle evaluation", &e),
                }
            }
        }
        (Err(e), _) | (_, Err(e)) => rec.error("T coefficients", &e),
    }
}

fn phi_zero(rec: &mut Recorder, ld: &LocalData) {
    const NAME: &str = "2s + m^2 sigma2 kappa = s m^2 (...)(W_s + (1/s + 2s/m^2) W + 2/m^2)";
    match phi_zero_identity(&ld.jet, &ld.sr) {
        Ok(id) => {
            let err = (id.lhs - id.rhs).abs() / id.lhs.abs().max(1.0);
            let w = rec.witness(vec![], id.lhs, id.rhs);
            rec.push(NAME, 1e-9, err, w);
        }
        Err(Error::DegeneratePoint(_)) => rec.skip(NAME, 1e-9),
        Err(e) => rec.error("phi-zero identity", &e),
    }
}

fn quasi_c(rec: &mut Recorder, ld: &LocalData) {
    const RESIDUAL: &str = "C_ijk = Q_ij C_k + Q_jk C_i + Q_ki C_j";
    const INDICATORY: &str = "Q_ij y^j = 0";
    let p = &ld.point;
    let mc = mean_cartan(p, &ld.sr);
    if p.n < 3 || mc.a.abs() * p.u <= MEAN_CARTAN_ZERO {
        rec.skip(RESIDUAL, 1e-9);
        rec.skip(INDICATORY, 1e-12);
        return;
    }
    match quasi_c_decomposition(p, &ld.sr, &mc) {
        Ok(q) => {
            let w = rec.witness(vec![], q.residual, 0.0);
            let err = if q.c_norm > 0.0 {
                q.residual / q.c_norm
            } else {
                q.residual
            };
            rec.push(RESIDUAL, 1e-9, err, w);
            let qy = q.q.mat_vec(&p.y);
            let (k, v) = worst_entry(&qy, &vec![0.0; qy.len()]);
            rec.zero(INDICATORY, 1e-12, v, q.q.max_abs() * p.u, vec![k]);
        }
        Err(e) => rec.error("quasi-C decomposition", &e),
    }
}

fn check_point(metric: &MetricSpec, suite: Suite, pt: &SamplePoint) -> Vec<Measure> {
    let mut rec = Recorder { pt, out: Vec::new() };
    let ld = match LocalData::new(metric, &pt.x, &pt.y) {
        Ok(ld) => ld,
        Err(e) => {
            rec.error("closed-form evaluation", &e);
            return rec.out;
        }
    };
    if suite.covers(Suite::Identities) {
        identities(&mut rec, metric, &ld);
    }
    if suite.covers(Suite::Oracle) {
        oracle(&mut rec, metric, &ld);
    }
    if suite.covers(Suite::PhiZero) {
        phi_zero(&mut rec, &ld);
    }
    if suite.covers(Suite::QuasiC) {
        quasi_c(&mut rec, &ld);
    }
    rec.out
}

/// Aggregate per-point measures, keeping properties in first-seen order.
fn aggregate(per_point: Vec<Vec<Measure>>, tol: Option<f64>) -> Vec<PropertyCheck> {
    let mut checks: Vec<PropertyCheck> = Vec::new();
    for m in per_point.into_iter().flatten() {
        let pos = match checks.iter().position(|c| c.name == m.name) {
            Some(i) => i,
            None => {
                checks.push(PropertyCheck {
                    name: m.name.to_string(),
                    tol: tol.unwrap_or(m.tol),
                    max_err: 0.0,
                    points: 0,
                    skipped: 0,
                    passed: true,
                    worst: None,
                });
                checks.len() - 1
            }
        };
        let c = &mut checks[pos];
        match m.outcome {
            Outcome::Skipped => c.skipped += 1,
            Outcome::Measured { err, witness } => {
                c.points += 1;
                let err = if err.is_nan() { f64::INFINITY } else { err };
                if c.worst.is_none() || err > c.max_err {
                    c.max_err = err;
                    c.worst = Some(witness);
                }
            }
        }
    }
    for c in &mut checks {
        c.passed = c.max_err <= c.tol;
    }
    checks
}

/// Run `opts.suite` on `opts.samples` seeded points. Points are evaluated in
/// parallel; the report depends only on the arguments.
pub fn run_verify(metric: &MetricSpec, opts: &VerifyOptions) -> Result<VerifyReport> {
    let set = sample_points(metric, opts.dim, opts.samples, opts.seed)?;
    let points = &set.points;
    let per_point: Vec<Vec<Measure>> = points
        .par_iter()
        .map(|pt| check_point(metric, opts.suite, pt))
        .collect();
    let checks = aggregate(per_point, opts.tol);
    Ok(VerifyReport {
        metric: metric.label.clone(),
        suite: opts.suite,
        seed: opts.seed,
        samples: points.len(),
        dim: opts.dim,
        draws: set.draws,
        rejected: set.rejected,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Max relative discrepancy for a single named property, if present.
pub fn max_err(report: &VerifyReport, name: &str) -> Option<f64> {
    report.checks.iter().find(|c| c.name == name).map(|c| c.max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin, Params};

    #[test]
    fn suite_names_roundtrip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().to_string(), name);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn randers_all_suites_pass() {
        let m = builtin("randers", &Params::new()).unwrap();
        let rep = run_verify(
            &m,
            &VerifyOptions {
                samples: 10,
                ..VerifyOptions::default()
            },
        )
        .unwrap();
        for c in &rep.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(rep.passed);
        assert!(rep
            .checks
            .iter()
            .any(|c| c.name == "T closed = T oracle" && c.points == 10));
    }

    #[test]
    fn tolerance_override_can_fail() {
        let m = builtin("kropina", &Params::new()).unwrap();
        let rep = run_verify(
            &m,
            &VerifyOptions {
                suite: Suite::Oracle,
                samples: 5,
                tol: Some(0.0),
                ..VerifyOptions::default()
            },
        )
        .unwrap();
        assert!(!rep.passed);
        let f = rep.failures().next().unwrap();
        assert!(f.worst.is_some());
    }

    #[test]
    fn euclidean_quasi_c_is_vacuous() {
        let m = builtin("euclidean", &Params::new()).unwrap();
        let rep = run_verify(
            &m,
            &VerifyOptions {
                suite: Suite::QuasiC,
                samples: 5,
                ..VerifyOptions::default()
            },
        )
        .unwrap();
        assert!(rep.checks.iter().all(|c| c.points == 0 && c.skipped == 5 && c.passed));
    }
}
