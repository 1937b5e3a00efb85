//! Seeded random base points.
//!
//! x is uniform on the sphere of radius r ~ U(0.1, 0.9); y has a uniform
//! direction and length u ~ U(0.5, 2). Draws are rejected until the point
//! lies in the metric's domain, is regular and non-degenerate, and is
//! numerically resolved: finite φ-derivatives, the regularity quantities
//! φ − sφ_s and φ − sφ_s + m²φ_ss not swamped by cancellation, tensor
//! magnitudes inside [1e-100, 1e100], and cond(g) ≤ 1e10.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::catalog::MetricSpec;
use crate::error::{Error, Result};
use crate::metric::{metric_tensor, LocalData};
use crate::tensor::MAX_DIM;
use crate::ttensor::t_closed_term_scale;

/// Attempts allowed per requested point.
pub const TRIES_PER_POINT: usize = 2000;

/// m²/r² below this is treated as too close to y ∥ x for sampling.
pub const MIN_ANGLE: f64 = 1e-6;

/// Largest accepted Σ|terms| / |value| for φ − sφ_s and φ − sφ_s + m²φ_ss.
pub const MAX_CANCELLATION: f64 = 1e6;

/// Accepted magnitude window for F², max|g| and the T-term scale.
pub const MAGNITUDE_WINDOW: (f64, f64) = (1e-100, 1e100);

/// Largest accepted condition number of g.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Accepted points plus how many draws were rejected, by reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    pub points: Vec<SamplePoint>,
    pub draws: usize,
    pub rejected: BTreeMap<&'static str, usize>,
}

fn direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len > 1e-8 {
            return v.into_iter().map(|a| a / len).collect();
        }
    }
}

/// One raw draw, before any rejection.
pub fn draw(rng: &mut ChaCha8Rng, n: usize) -> SamplePoint {
    let r = rng.random_range(0.1..0.9);
    let x = direction(rng, n).into_iter().map(|a| a * r).collect();
    let u = rng.random_range(0.5..2.0);
    let y = direction(rng, n).into_iter().map(|a| a * u).collect();
    SamplePoint { x, y }
}

fn in_window(v: f64) -> bool {
    v.is_finite() && (MAGNITUDE_WINDOW.0..=MAGNITUDE_WINDOW.1).contains(&v)
}

/// Why (x, y) is not a usable sample, or `None` if it is.
pub fn rejection(metric: &MetricSpec, x: &[f64], y: &[f64]) -> Option<&'static str> {
    let ld = match LocalData::new(metric, x, y) {
        Ok(ld) => ld,
        Err(e) if e.is_domain() => return Some("domain"),
        Err(_) => return Some("evaluation"),
    };
    let p = &ld.point;
    if !metric.admits(p.r, p.s) {
        return Some("domain");
    }
    if p.m2 < MIN_ANGLE * p.r * p.r {
        return Some("degenerate");
    }
    let pj = &ld.jet;
    if !pj.derivatives().iter().all(|v| v.is_finite()) {
        return Some("non-finite");
    }
    let reg = ld.regularity();
    if !reg.regular {
        return Some("irregular");
    }
    let first_terms = pj.phi.abs() + (pj.s * pj.phi_s).abs();
    let second_terms = first_terms + (p.m2 * pj.phi_ss).abs();
    if first_terms > MAX_CANCELLATION * reg.first || second_terms > MAX_CANCELLATION * reg.second {
        return Some("cancellation");
    }
    let sr = &ld.sr;
    let all = [
        sr.sigma0, sr.sigma1, sr.sigma2, sr.mu_s, sr.mu_ss, sr.rho0, sr.rho1, sr.rho2, sr.rho3,
    ];
    if !all.iter().all(|v| v.is_finite()) {
        return Some("non-finite");
    }
    let g = metric_tensor(p, sr);
    let f2 = (p.u * pj.phi).powi(2);
    if !in_window(f2) || !in_window(g.max_abs()) || !in_window(t_closed_term_scale(pj, sr, p.u).max(1e-100)) {
        return Some("magnitude");
    }
    let gm = DMatrix::from_fn(p.n, p.n, |i, j| g.get([i, j]));
    let (lo, hi) = gm
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), l| {
            (lo.min(l.abs()), hi.max(l.abs()))
        });
    if !(lo > 0.0 && hi / lo <= MAX_CONDITION) {
        return Some("conditioning");
    }
    None
}

/// Whether the closed-form path is well-posed at (x, y).
pub fn admissible(metric: &MetricSpec, x: &[f64], y: &[f64]) -> bool {
    rejection(metric, x, y).is_none()
}

/// `count` admissible points in dimension `n`, reproducible from `seed`.
pub fn sample_points(metric: &MetricSpec, n: usize, count: usize, seed: u64) -> Result<SampleSet> {
    if !(2..=MAX_DIM).contains(&n) {
        return Err(Error::DimensionOutOfRange(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = TRIES_PER_POINT * count.max(1);
    let mut set = SampleSet {
        points: Vec::with_capacity(count),
        draws: 0,
        rejected: BTreeMap::new(),
    };
    while set.points.len() < count {
        if set.draws == budget {
            return Err(Error::SamplingExhausted {
                metric: metric.label.clone(),
                wanted: count,
                tries: set.draws,
            });
        }
        set.draws += 1;
        let pt = draw(&mut rng, n);
        match rejection(metric, &pt.x, &pt.y) {
            None => set.points.push(pt),
            Some(why) => *set.rejected.entry(why).or_default() += 1,
        }
    }
    Ok(set)
}
