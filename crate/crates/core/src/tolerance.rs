//! Relative-error policy for comparing two computations of the same
//! quantity.
//!
//! err = |a − b| / (scale + 1e-12), where scale is the larger of the two
//! compared magnitudes, widened when needed to the size of the terms that
//! cancel to produce the value and to a natural magnitude fixed by the
//! metric's size at the point. Without the widening, a tensor that vanishes
//! identically (T for Riemannian or T-condition metrics) would be judged by
//! its rounding noise against itself.

pub const ABS_FLOOR: f64 = 1e-12;

pub fn relative(diff: f64, scale: f64) -> f64 {
    diff / (scale + ABS_FLOOR)
}

/// |a − b| / (max(|a|, |b|) + 1e-12)
pub fn rel_scalar(a: f64, b: f64) -> f64 {
    relative((a - b).abs(), a.abs().max(b.abs()))
}

/// Largest of the given magnitudes.
pub fn scale_of(parts: &[f64]) -> f64 {
    parts.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Index of the largest |a_k − b_k| with that difference.
pub fn worst_entry(a: &[f64], b: &[f64]) -> (usize, f64) {
    a.iter().zip(b).enumerate().fold((0, 0.0), |(k, d), (q, (x, y))| {
        let e = (x - y).abs();
        if e > d || e.is_nan() {
            (q, e)
        } else {
            (k, d)
        }
    })
}
