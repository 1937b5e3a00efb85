use std::collections::BTreeMap;

use finsler_sph::cartan::{cartan_mixed, cartan_tensor, cartan_vertical_closed, mean_cartan};
use finsler_sph::catalog::{MetricSpec, BUILTINS};
use finsler_sph::metric::{inverse_metric, metric_tensor, LocalData};
use finsler_sph::ttensor::{
    default_family_samples, recover_family_params, t_coefficients, t_condition_check, t_tensor_closed, w_value, Grid,
    OracleTensors,
};
use finsler_sph::verify::{run_verify, Suite, VerifyOptions, VerifyReport};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{csv_float, fmt_float, to_json};
use crate::{CliError, Format, Run, EXIT_OK, EXIT_VERIFY_FAILED};

pub const TENSOR_NAMES: [&str; 8] = [
    "g",
    "g_inv",
    "cartan",
    "cartan_mixed",
    "mean_cartan",
    "cartan_vert",
    "T_closed",
    "T_oracle",
];

fn ok(stdout: String) -> Run {
    Run {
        stdout,
        diagnostics: Vec::new(),
        code: EXIT_OK,
    }
}

fn value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

fn csv_text(rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Io(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn requested_tensors(names: &[String]) -> Result<Vec<&'static str>, CliError> {
    let mut want = Vec::new();
    for n in names {
        let n = n.trim();
        if n == "all" {
            return Ok(TENSOR_NAMES.to_vec());
        }
        match TENSOR_NAMES.iter().find(|t| **t == n) {
            Some(t) if !want.contains(t) => want.push(*t),
            Some(_) => {}
            None => {
                return Err(CliError::Usage(format!(
                    "unknown tensor `{n}` (expected any of {} or all)",
                    TENSOR_NAMES.join(",")
                )))
            }
        }
    }
    Ok(want)
}

/// Flatten nested arrays into (`name[i][j]…`, value) pairs.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Array(items) => {
            for (k, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{k}]"), item, out);
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                flatten(&format!("{prefix}.{k}"), item, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => csv_float(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::String(s) => s.clone(),
        _ => String::new(),
    }
}

pub fn eval(metric: &MetricSpec, x: &[f64], y: &[f64], tensors: &[String], format: Format) -> Result<Run, CliError> {
    if format == Format::Text {
        return Err(CliError::UnsupportedFormat {
            command: "eval",
            format,
        });
    }
    let want = requested_tensors(tensors)?;
    let ld = LocalData::new(metric, x, y)?;
    let (p, pj, sr) = (&ld.point, &ld.jet, &ld.sr);
    let in_domain = metric.admits(p.r, p.s);
    let mc = mean_cartan(p, sr);
    let tc = t_coefficients(pj, sr, p.u)?;
    let w = w_value(pj).map(|w| w.w).unwrap_or(f64::NAN);

    let scalars = json!({
        "phi": pj.phi, "phi_s": pj.phi_s, "phi_ss": pj.phi_ss,
        "sigma0": sr.sigma0, "sigma1": sr.sigma1, "sigma2": sr.sigma2, "sigma3": sr.sigma3,
        "rho0": sr.rho0, "rho1": sr.rho1, "rho2": sr.rho2, "rho3": sr.rho3,
        "kappa": sr.kappa, "A": mc.a,
        "Phi": tc.phi, "Psi": tc.psi, "Omega": tc.omega, "W": w,
    });
    let mut blocks = serde_json::Map::new();
    for name in &want {
        let v = match *name {
            "g" => value(&metric_tensor(p, sr).to_rows()),
            "g_inv" => value(&inverse_metric(p, sr).to_rows()),
            "cartan" => value(&cartan_tensor(p, sr).to_nested()),
            "cartan_mixed" => value(&cartan_mixed(p, sr).to_nested()),
            "mean_cartan" => value(&mc),
            "cartan_vert" => value(&cartan_vertical_closed(p, sr).to_nested()),
            "T_closed" => value(&t_tensor_closed(p, &tc).to_nested()),
            "T_oracle" => value(&OracleTensors::new(metric, x, y)?.t_sym().to_nested()),
            _ => unreachable!("filtered by requested_tensors"),
        };
        blocks.insert(name.to_string(), v);
    }
    let report = json!({
        "metric": metric.label,
        "point": {"x": x, "y": y, "r": p.r, "u": p.u, "s": p.s},
        "in_domain": in_domain,
        "domain": metric.domain.describe(),
        "regularity": value(&ld.regularity()),
        "scalars": scalars,
        "tensors": Value::Object(blocks),
    });
    let mut diagnostics = Vec::new();
    if !in_domain {
        diagnostics.push(format!(
            "warning: (r = {}, s = {}) is outside the declared domain of {} ({})",
            p.r,
            p.s,
            metric.label,
            metric.domain.describe()
        ));
    }
    let stdout = match format {
        Format::Json => to_json(&report),
        _ => {
            let mut pairs = Vec::new();
            for key in ["point", "in_domain", "regularity", "scalars", "tensors"] {
                flatten(key, &report[key], &mut pairs);
            }
            let mut rows = vec![vec!["name".to_string(), "value".to_string()]];
            rows.extend(pairs.iter().map(|(k, v)| vec![k.clone(), cell(v)]));
            csv_text(rows)?
        }
    };
    Ok(Run {
        stdout,
        diagnostics,
        code: EXIT_OK,
    })
}

fn verify_text(rep: &VerifyReport) -> String {
    let mut s = String::new();
    let rejected: Vec<String> = rep.rejected.iter().map(|(k, v)| format!("{k} {v}")).collect();
    s.push_str(&format!(
        "metric {} | suite {} | seed {} | dim {} | samples {} of {} draws (rejected: {})\n",
        rep.metric,
        rep.suite,
        rep.seed,
        rep.dim,
        rep.samples,
        rep.draws,
        if rejected.is_empty() {
            "none".to_string()
        } else {
            rejected.join(", ")
        }
    ));
    let width = rep.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &rep.checks {
        s.push_str(&format!(
            "{:<4}  {:<width$}  max_err {:.3e}  tol {:.0e}  points {}  skipped {}\n",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.max_err,
            c.tol,
            c.points,
            c.skipped,
        ));
        if let (false, Some(w)) = (c.passed, &c.worst) {
            s.push_str(&format!(
                "      at x = {:?}, y = {:?}, entry {:?}: lhs = {}, rhs = {}{}\n",
                w.x,
                w.y,
                w.entry,
                fmt_float(w.lhs),
                fmt_float(w.rhs),
                w.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
            ));
        }
    }
    let passed = rep.checks.iter().filter(|c| c.passed).count();
    let worst = rep.checks.iter().fold(0.0f64, |m, c| m.max(c.max_err));
    s.push_str(&format!(
        "summary: {passed}/{} properties passed, max relative error {worst:.3e}\n",
        rep.checks.len()
    ));
    s
}

pub fn verify(
    metric: &MetricSpec,
    suite: Suite,
    samples: usize,
    seed: u64,
    dim: usize,
    tol: Option<f64>,
    format: Format,
) -> Result<Run, CliError> {
    if let Some(t) = tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!(
                "--tol must be a finite non-negative number, got {t}"
            )));
        }
    }
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let rep = run_verify(
        metric,
        &VerifyOptions {
            suite,
            samples,
            seed,
            dim,
            tol,
        },
    )?;
    let stdout = match format {
        Format::Text => verify_text(&rep),
        Format::Json => to_json(&value(&rep)),
        Format::Csv => {
            let mut rows = vec![["name", "tol", "max_err", "points", "skipped", "passed"]
                .map(String::from)
                .to_vec()];
            rows.extend(rep.checks.iter().map(|c| {
                vec![
                    c.name.clone(),
                    csv_float(c.tol),
                    csv_float(c.max_err),
                    c.points.to_string(),
                    c.skipped.to_string(),
                    c.passed.to_string(),
                ]
            }));
            csv_text(rows)?
        }
    };
    let diagnostics = rep
        .failures()
        .map(|c| {
            format!(
                "verification failed: {} (max_err {:.3e} > tol {:.0e})",
                c.name, c.max_err, c.tol
            )
        })
        .collect();
    Ok(Run {
        stdout,
        diagnostics,
        code: if rep.passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
    })
}

pub fn classify(metric: &MetricSpec, grid: &Grid, tol: f64, format: Format) -> Result<Run, CliError> {
    if format != Format::Json {
        return Err(CliError::UnsupportedFormat {
            command: "classify",
            format,
        });
    }
    let rep = t_condition_check(metric, grid, tol)?;
    let fits: Vec<Value> = grid
        .r_values
        .iter()
        .map(
            |&r| match recover_family_params(metric, r, &default_family_samples(r)) {
                Ok(fit) => value(&fit),
                Err(e) => json!({"r": r, "error": e.to_string()}),
            },
        )
        .collect();
    let mut v = value(&rep);
    v["family_fit"] = Value::Array(fits);
    Ok(ok(to_json(&v)))
}

struct SweepRow {
    r: f64,
    s: f64,
    u: f64,
    coeffs: [f64; 3],
    regular: bool,
}

pub fn sweep(metric: &MetricSpec, grid: &Grid, format: Format) -> Result<Run, CliError> {
    if format == Format::Text {
        return Err(CliError::UnsupportedFormat {
            command: "sweep",
            format,
        });
    }
    if !(2..=6).contains(&grid.n) {
        return Err(finsler_sph::Error::DimensionOutOfRange(grid.n).into());
    }
    let pts = grid.points();
    let rows: Vec<Result<SweepRow, &'static str>> = pts
        .par_iter()
        .map(|&(r, s)| {
            if !metric.admits(r, s) {
                return Err("domain");
            }
            let (x, y) = grid.vectors(r, s);
            let ld = LocalData::new(metric, &x, &y).map_err(|_| "singular")?;
            let tc = t_coefficients(&ld.jet, &ld.sr, ld.point.u).map_err(|_| "singular")?;
            Ok(SweepRow {
                r,
                s,
                u: ld.point.u,
                coeffs: [tc.phi, tc.psi, tc.omega],
                regular: ld.regularity().regular,
            })
        })
        .collect();
    let mut skipped: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut kept = Vec::new();
    for row in rows {
        match row {
            Ok(r) => kept.push(r),
            Err(why) => *skipped.entry(why).or_default() += 1,
        }
    }
    let stdout = match format {
        Format::Csv => {
            let mut out = vec![["r", "s", "u", "Phi", "Psi", "Omega", "regular"]
                .map(String::from)
                .to_vec()];
            out.extend(kept.iter().map(|k| {
                vec![
                    csv_float(k.r),
                    csv_float(k.s),
                    csv_float(k.u),
                    csv_float(k.coeffs[0]),
                    csv_float(k.coeffs[1]),
                    csv_float(k.coeffs[2]),
                    k.regular.to_string(),
                ]
            }));
            csv_text(out)?
        }
        _ => {
            let rows: Vec<Value> = kept
                .iter()
                .map(|k| {
                    json!({"r": k.r, "s": k.s, "u": k.u, "Phi": k.coeffs[0], "Psi": k.coeffs[1], "Omega": k.coeffs[2], "regular": k.regular})
                })
                .collect();
            to_json(&json!({
                "metric": metric.label,
                "grid": value(grid),
                "grid_description": grid.describe(),
                "rows": rows,
                "skipped": value(&skipped),
            }))
        }
    };
    let diagnostics = skipped
        .iter()
        .map(|(why, n)| format!("skipped {n} grid point(s): {why}"))
        .collect();
    Ok(Run {
        stdout,
        diagnostics,
        code: EXIT_OK,
    })
}

pub fn catalog(format: Format) -> Result<Run, CliError> {
    match format {
        Format::Json => Ok(ok(to_json(&json!({
            "builtins": value(&BUILTINS),
            "expressions": "expr:<source> with variables r, s, bound parameters, + - * / ^, sqrt exp ln sin cos",
            "tensors": TENSOR_NAMES,
            "suites": Suite::NAMES,
        })))),
        Format::Text => {
            let mut s = String::new();
            for b in BUILTINS {
                let params = if b.params.is_empty() {
                    "-".to_string()
                } else {
                    b.params.join(",")
                };
                s.push_str(&format!("{:<18} phi = {}\n", b.name, b.phi));
                s.push_str(&format!(
                    "{:<18} params: {params}; domain: {}; regular on: {}\n",
                    "", b.domain, b.regular_on
                ));
            }
            Ok(ok(s))
        }
        Format::Csv => Err(CliError::UnsupportedFormat {
            command: "catalog",
            format,
        }),
    }
}
