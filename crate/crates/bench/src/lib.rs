//! Shared fixtures for the criterion benches.

use finsler_sph::catalog::{builtin, MetricSpec, Params};
use finsler_sph::sampling::{sample_points, SamplePoint};

/// Metrics covering polynomial, rational, radical and power-law φ.
pub fn metrics() -> Vec<MetricSpec> {
    let p = |kv: &[(&str, f64)]| -> Params { kv.iter().map(|(k, v)| (k.to_string(), *v)).collect() };
    vec![
        builtin("randers", &p(&[])).expect("builtin"),
        builtin("kropina", &p(&[])).expect("builtin"),
        builtin("riemannian", &p(&[("c1", 1.0), ("c2", 1.0)])).expect("builtin"),
        builtin("tcondition_family", &p(&[("a", 1.0), ("c", 2.0)])).expect("builtin"),
        MetricSpec::from_expr("exp(s)*(1 + s^2)^(1/3)", &p(&[])).expect("valid expression"),
    ]
}

/// `count` admissible points for `metric` in dimension `n`, fixed seed.
pub fn points(metric: &MetricSpec, n: usize, count: usize) -> Vec<SamplePoint> {
    sample_points(metric, n, count, 7)
        .expect("fixture metrics admit samples")
        .points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_sample() {
        for m in metrics() {
            assert_eq!(points(&m, 4, 3).len(), 3);
        }
    }
}
