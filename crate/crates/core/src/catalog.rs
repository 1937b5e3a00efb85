//! Built-in metric families and expression-defined metrics.
//!
//! | name                | φ(r, s)                                      | params  | domain           |
//! |---------------------|----------------------------------------------|---------|------------------|
//! | `euclidean`         | 1                                            |         | all              |
//! | `riemannian`        | √(c1·s² + c2)                                | c1, c2  | c1·s² + c2 > 0   |
//! | `randers`           | 1 + s                                        |         | r < 1            |
//! | `kropina`           | 1/s                                          |         | s > 0            |
//! | `tcondition_family` | a·s^((c r² − 1)/(c r²))·(r² − s²)^(1/(2c r²)) | a, c    | 0 < s < r        |
//!
//! Regular sub-domains: euclidean everywhere; riemannian wherever c2 > 0 and
//! c1 + c2/r² > 0 (φ − sφ_s = c2/φ); randers for r < 1; kropina satisfies the
//! three inequalities for s > 0 but is not a positive-definite Finsler metric
//! on any full tangent space; tcondition_family for 0 < s < r as long as
//! φ − sφ_s + m²φ_ss stays positive (it fails, e.g., for a = 2, c = 2 at
//! r = 0.8).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse_metric_expr, MetricExpr};
use crate::jets::Scalar;

pub type Params = BTreeMap<String, f64>;

pub const BUILTIN_NAMES: [&str; 5] = [
    BUILTINS[0].name,
    BUILTINS[1].name,
    BUILTINS[2].name,
    BUILTINS[3].name,
    BUILTINS[4].name,
];

/// Listing entry for a built-in family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuiltinInfo {
    pub name: &'static str,
    pub phi: &'static str,
    pub params: &'static [&'static str],
    pub domain: &'static str,
    pub regular_on: &'static str,
}

pub const BUILTINS: [BuiltinInfo; 5] = [
    BuiltinInfo {
        name: "euclidean",
        phi: "1",
        params: &[],
        domain: "all",
        regular_on: "all",
    },
    BuiltinInfo {
        name: "riemannian",
        phi: "sqrt(c1*s^2 + c2)",
        params: &["c1", "c2"],
        domain: "c1*s^2 + c2 > 0",
        regular_on: "c2 > 0 and c1 + c2/r^2 > 0",
    },
    BuiltinInfo {
        name: "randers",
        phi: "1 + s",
        params: &[],
        domain: "r < 1",
        regular_on: "r < 1",
    },
    BuiltinInfo {
        name: "kropina",
        phi: "1/s",
        params: &[],
        domain: "s > 0",
        regular_on: "s > 0 (not positive definite on a full tangent space)",
    },
    BuiltinInfo {
        name: "tcondition_family",
        phi: "a*s^((c*r^2 - 1)/(c*r^2))*(r^2 - s^2)^(1/(2*c*r^2))",
        params: &["a", "c"],
        domain: "0 < s < r, a > 0, c > 0",
        regular_on: "0 < s < r where phi - s*phi_s + m^2*phi_ss > 0",
    },
];

#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    Euclidean,
    Riemannian { c1: f64, c2: f64 },
    Randers,
    Kropina,
    TConditionFamily { a: f64, c: f64 },
    Expr(MetricExpr),
}

/// Constraints on (r, s) a metric declares for itself.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Domain {
    /// s > 0
    pub s_positive: bool,
    /// s < r (strict; implies the point is not degenerate)
    pub s_below_r: bool,
    /// r < bound
    pub r_max: Option<f64>,
    /// c1·s² + c2 > 0 for the Riemannian family
    pub radicand: Option<(f64, f64)>,
}

impl Domain {
    pub fn admits(&self, r: f64, s: f64) -> bool {
        self.violation(r, s).is_none()
    }

    pub fn violation(&self, r: f64, s: f64) -> Option<&'static str> {
        if self.s_positive && s <= 0.0 {
            return Some("s > 0");
        }
        if self.s_below_r && s >= r {
            return Some("s < r");
        }
        if let Some(bound) = self.r_max {
            if r >= bound {
                return Some("r < 1");
            }
        }
        if let Some((c1, c2)) = self.radicand {
            if c1 * s * s + c2 <= 0.0 {
                return Some("c1*s^2 + c2 > 0");
            }
        }
        None
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.s_positive {
            parts.push("s > 0".to_string());
        }
        if self.s_below_r {
            parts.push("s < r".to_string());
        }
        if let Some(b) = self.r_max {
            parts.push(format!("r < {b}"));
        }
        if self.radicand.is_some() {
            parts.push("c1*s^2 + c2 > 0".to_string());
        }
        if parts.is_empty() {
            "all".to_string()
        } else {
            parts.join(", ")
        }
    }
}

/// A definition of φ(r, s) plus its declared domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub params: Params,
    pub domain: Domain,
    pub label: String,
}

fn require(name: &str, params: &Params, key: &'static str) -> Result<f64> {
    params.get(key).copied().ok_or(Error::MissingParam {
        metric: name.to_string(),
        param: key,
    })
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParam {
            name: key.to_string(),
            value: v,
            reason: "must be positive",
        })
    }
}

/// Look up a built-in family by name.
pub fn builtin(name: &str, params: &Params) -> Result<MetricSpec> {
    let mut domain = Domain::default();
    let (kind, label, used): (MetricKind, String, Vec<&str>) = match name {
        "euclidean" => (MetricKind::Euclidean, "euclidean".into(), vec![]),
        "randers" => {
            domain.r_max = Some(1.0);
            (MetricKind::Randers, "randers".into(), vec![])
        }
        "kropina" => {
            domain.s_positive = true;
            (MetricKind::Kropina, "kropina".into(), vec![])
        }
        "riemannian" => {
            let c1 = require(name, params, "c1")?;
            let c2 = require(name, params, "c2")?;
            domain.radicand = Some((c1, c2));
            (
                MetricKind::Riemannian { c1, c2 },
                format!("riemannian(c1={c1}, c2={c2})"),
                vec!["c1", "c2"],
            )
        }
        "tcondition_family" => {
            let a = positive("a", require(name, params, "a")?)?;
            let c = positive("c", require(name, params, "c")?)?;
            domain.s_positive = true;
            domain.s_below_r = true;
            (
                MetricKind::TConditionFamily { a, c },
                format!("tcondition_family(a={a}, c={c})"),
                vec!["a", "c"],
            )
        }
        other => return Err(Error::UnknownMetric(other.to_string())),
    };
    let params = params
        .iter()
        .filter(|(k, _)| used.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    Ok(MetricSpec {
        kind,
        params,
        domain,
        label,
    })
}

impl MetricSpec {
    /// Metric defined by an expression; every referenced parameter must be
    /// bound in `params`.
    pub fn from_expr(source: &str, params: &Params) -> Result<MetricSpec> {
        let expr = parse_metric_expr(source, params.keys().cloned())?;
        let used = expr.referenced_params();
        let params = params
            .iter()
            .filter(|(k, _)| used.contains(*k))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        Ok(MetricSpec {
            label: format!("expr:{source}"),
            kind: MetricKind::Expr(expr),
            params,
            domain: Domain::default(),
        })
    }

    /// Parse `name` or `expr:<source>`.
    pub fn parse(spec: &str, params: &Params) -> Result<MetricSpec> {
        match spec.strip_prefix("expr:") {
            Some(src) => MetricSpec::from_expr(src, params),
            None => builtin(spec, params),
        }
    }

    pub fn admits(&self, r: f64, s: f64) -> bool {
        self.domain.admits(r, s)
    }

    /// φ(r, s) over any scalar algebra. `r` is a plain number: no formula
    /// differentiates in r.
    pub fn phi<S: Scalar>(&self, r: f64, s: S) -> Result<S> {
        match &self.kind {
            MetricKind::Euclidean => Ok(S::one()),
            MetricKind::Randers => Ok(S::one() + s),
            MetricKind::Kropina => {
                if s.value() == 0.0 {
                    return Err(Error::DivisionByZero { subexpr: "1/s".into() });
                }
                Ok(S::one() / s)
            }
            MetricKind::Riemannian { c1, c2 } => {
                let rad = (s * s).scale(*c1) + S::constant(*c2);
                if rad.value() <= 0.0 {
                    return Err(Error::Domain {
                        op: "sqrt",
                        subexpr: "c1*s^2 + c2".into(),
                        value: rad.value(),
                    });
                }
                Ok(rad.sqrt())
            }
            MetricKind::TConditionFamily { a, c } => family_phi_generic(*a, *c, r, s),
            MetricKind::Expr(e) => e.eval(S::constant(r), s, &self.params),
        }
    }
}

/// φ = a·s^((c r² − 1)/(c r²))·(r² − s²)^(1/(2 c r²)) on the principal
/// branch 0 < s < r.
pub fn family_phi(a: f64, c: f64, r: f64, s: f64) -> Result<f64> {
    family_phi_generic(a, c, r, s)
}

fn family_phi_generic<S: Scalar>(a: f64, c: f64, r: f64, s: S) -> Result<S> {
    let cr2 = c * r * r;
    if cr2 == 0.0 {
        return Err(Error::DivisionByZero {
            subexpr: "c*r^2".into(),
        });
    }
    let sv = s.value();
    if sv <= 0.0 || sv >= r {
        return Err(Error::OutsideDomain {
            metric: "tcondition_family".into(),
            r,
            s: sv,
            constraint: "0 < s < r",
        });
    }
    let m2 = S::constant(r * r) - s * s;
    Ok(s.powf((cr2 - 1.0) / cr2).scale(a) * m2.powf(1.0 / (2.0 * cr2)))
}
