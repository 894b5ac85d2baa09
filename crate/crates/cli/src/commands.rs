//! The five subcommands.

use crate::config::Loaded;
use crate::report::{complex, fmt_complex, fmt_err, fmt_real, real, table, verdict, Report};
use crate::CliError;
use lzeta::geometry::{curvature, MetricField};
use lzeta::hadamard::{diagonal_u1_direct, transport_solve};
use lzeta::minkmodel::{contour_power_scalar, BranchedPower, ContourGamma};
use lzeta::quad::circle_integral;
use lzeta::special::rgamma;
use lzeta::specoracle::continue_mode_zeta;
use lzeta::zeta::{
    cc_expansion_check, epsilon_extrapolation, extrapolate_epsilon, predicted_residue, zeta_density, CValue, TestFunction, CIRCLE_NODES,
    CIRCLE_RADIUS, EPSILON_LADDER,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::sync::Mutex;

fn header(command: &str, loaded: &Loaded) -> Value {
    json!({
        "command": command,
        "schema_version": loaded.config.schema_version,
        "lz_version": env!("CARGO_PKG_VERSION"),
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (base.as_object_mut(), extra) {
        a.extend(b);
    }
    base
}

// ---------------------------------------------------------------------------
// curvature

/// Christoffel symbols by central differences of metric values.
fn fd_christoffel(m: &MetricField, x: &[f64], h: f64) -> Result<Vec<f64>, CliError> {
    let n = m.dim();
    let g = m.metric_at(x)?;
    let ginv = g.try_inverse().ok_or_else(|| CliError::Numerical("singular metric in the finite-difference oracle".into()))?;
    let mut dg: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[a] += h;
        xm[a] -= h;
        dg.push((m.metric_at(&xp)? - m.metric_at(&xm)?) / (2.0 * h));
    }
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[(i * n + j) * n + k] = (0..n)
                    .map(|l| 0.5 * ginv[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]))
                    .sum();
            }
        }
    }
    Ok(out)
}

/// Scalar curvature from finite differences of finite-difference
/// Christoffels, outer step `h`.
fn fd_scalar(m: &MetricField, x: &[f64], h: f64) -> Result<f64, CliError> {
    let n = m.dim();
    let inner = 1e-5;
    let gam = fd_christoffel(m, x, inner)?;
    let mut dgam = Vec::with_capacity(n);
    for a in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[a] += h;
        xm[a] -= h;
        let p = fd_christoffel(m, &xp, inner)?;
        let q = fd_christoffel(m, &xm, inner)?;
        dgam.push(p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    let gi = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let ginv = m
        .metric_at(x)?
        .try_inverse()
        .ok_or_else(|| CliError::Numerical("singular metric in the finite-difference oracle".into()))?;
    let mut scalar = 0.0;
    for k in 0..n {
        for l in 0..n {
            let mut ric = 0.0;
            for i in 0..n {
                ric += dgam[i][gi(i, l, k)] - dgam[l][gi(i, i, k)];
                for mm in 0..n {
                    ric += gam[gi(i, i, mm)] * gam[gi(mm, l, k)] - gam[gi(i, l, mm)] * gam[gi(mm, i, k)];
                }
            }
            scalar += ginv[(k, l)] * ric;
        }
    }
    Ok(scalar)
}

pub fn curvature_cmd(loaded: &Loaded) -> Result<Report, CliError> {
    let (m, x) = loaded.metric()?;
    let tol = loaded.config.tolerances.agreement.unwrap_or(1e-4);
    let b = curvature(&m, &x)?;
    let n = b.dim;
    let defect = b.symmetry_defect();
    let round = |v: f64| 64.0 * f64::EPSILON * (1.0 + v.abs()) + defect;
    // Richardson step on the outer difference; the floor covers the inner
    // difference's rounding amplified by the outer step
    let h = 1e-3;
    let r1 = fd_scalar(&m, &x, h)?;
    let r2 = fd_scalar(&m, &x, 2.0 * h)?;
    let fd = r1 + (r1 - r2) / 3.0;
    let fd_err = (r1 - r2).abs() / 3.0 + 1e-7 * (1.0 + fd.abs());
    let gap = (b.scalar - fd).abs();
    let ok = gap <= tol * b.scalar.abs().max(1.0);
    let ricci: Vec<Vec<Value>> = (0..n)
        .map(|k| (0..n).map(|l| real(b.ricci(k, l), round(b.ricci(k, l)))).collect())
        .collect();
    let json = merge(
        header("curvature", loaded),
        json!({
            "metric": m.name,
            "dim": n,
            "signature": m.signature(),
            "point": x,
            "scalar": real(b.scalar, round(b.scalar)),
            "ricci": ricci,
            "oracle": {
                "method": "finite differences",
                "scalar": real(fd, fd_err),
                "abs_difference": real(gap, fd_err + round(b.scalar)),
                "tolerance": tol,
                "pass": ok,
            },
        }),
    );
    let mut rows = vec![
        vec!["R (jets)".into(), fmt_real(b.scalar), fmt_err(round(b.scalar)), String::new()],
        vec!["R (finite differences)".into(), fmt_real(fd), fmt_err(fd_err), String::new()],
        vec!["|difference|".into(), fmt_real(gap), fmt_err(fd_err), verdict(ok).into()],
    ];
    for k in 0..n {
        for l in k..n {
            let v = b.ricci(k, l);
            rows.push(vec![format!("Ric[{k}][{l}]"), fmt_real(v), fmt_err(round(v)), String::new()]);
        }
    }
    let text = format!(
        "curvature of {} at {:?}\n\n{}",
        m.name,
        x,
        table(&["quantity", "value", "error", "check"], &rows)
    );
    let failures = if ok {
        vec![]
    } else {
        vec![format!("jet and finite-difference scalar curvature differ by {gap:e} (tolerance {tol:e})")]
    };
    Ok(Report {
        json,
        text,
        csv: None,
        failures,
    })
}

// ---------------------------------------------------------------------------
// hadamard

/// Agreement required of the two independent u_1 paths.
const U1_PATHS_TOL: f64 = 1e-5;

pub fn hadamard_cmd(loaded: &Loaded) -> Result<Report, CliError> {
    let (m, x) = loaded.metric()?;
    let order = loaded.config.order.unwrap_or(2);
    let tol = loaded.config.tolerances.agreement.unwrap_or(1e-4);
    let hc = transport_solve(&m, &x, order)?;
    let coeffs: Vec<Value> = hc
        .diag_values
        .iter()
        .enumerate()
        .map(|(k, u)| json!({ "k": k, "u": real(u.value, u.error) }))
        .collect();
    let mut rows: Vec<Vec<String>> = hc
        .diag_values
        .iter()
        .enumerate()
        .map(|(k, u)| vec![format!("u_{k}(x,x)"), fmt_real(u.value), fmt_err(u.error), String::new()])
        .collect();
    let mut failures = Vec::new();
    let mut json = merge(
        header("hadamard", loaded),
        json!({ "metric": m.name, "point": x, "order": order, "coefficients": coeffs }),
    );
    if order >= 1 {
        let scalar = curvature(&m, &x)?.scalar;
        let u1 = hc.diag_values[1];
        let direct = diagonal_u1_direct(&m, &x)?;
        let paths = (u1.value - direct).abs();
        let identity = (u1.value + scalar / 6.0).abs();
        let ok_paths = paths <= U1_PATHS_TOL;
        let ok_identity = identity <= tol;
        json = merge(
            json,
            json!({
                "comparison": {
                    "u1_transport": real(u1.value, u1.error),
                    "u1_direct": real(direct, paths),
                    "minus_R_over_6": real(-scalar / 6.0, 64.0 * f64::EPSILON * (1.0 + scalar.abs())),
                    "paths_difference": real(paths, u1.error),
                    "identity_defect": real(identity, u1.error),
                    "paths_tolerance": U1_PATHS_TOL,
                    "identity_tolerance": tol,
                    "pass": ok_paths && ok_identity,
                }
            }),
        );
        rows.push(vec!["u_1 (direct)".into(), fmt_real(direct), fmt_err(paths), String::new()]);
        rows.push(vec!["-R/6".into(), fmt_real(-scalar / 6.0), fmt_err(0.0), String::new()]);
        rows.push(vec!["|u_1 - u_1 direct|".into(), fmt_real(paths), fmt_err(u1.error), verdict(ok_paths).into()]);
        rows.push(vec!["|u_1 + R/6|".into(), fmt_real(identity), fmt_err(u1.error), verdict(ok_identity).into()]);
        if !ok_paths {
            failures.push(format!("transport and direct u_1 differ by {paths:e}"));
        }
        if !ok_identity {
            failures.push(format!("|u_1 + R/6| = {identity:e} exceeds {tol:e}"));
        }
    }
    let text = format!(
        "Hadamard coefficients of {} at {:?}, N = {order}\n\n{}",
        m.name,
        x,
        table(&["quantity", "value", "error", "check"], &rows)
    );
    Ok(Report {
        json,
        text,
        csv: None,
        failures,
    })
}

// ---------------------------------------------------------------------------
// zeta-residue

fn relative_gap(a: CValue, b: CValue, scale: f64) -> CValue {
    CValue::new(Complex64::new((a.value - b.value).norm() / scale, 0.0), (a.error + b.error) / scale)
}

/// Residue of the continued mode sum at `alpha0` for one ε.
fn mode_residue(model: &lzeta::specoracle::SpectralModel, alpha0: f64, eps: f64) -> Result<CValue, CliError> {
    let failure: Mutex<Option<lzeta::Error>> = Mutex::new(None);
    let (r, err) = circle_integral(
        |a| match continue_mode_zeta(model, a, eps) {
            Ok(v) => v.value,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                Complex64::new(f64::NAN, f64::NAN)
            }
        },
        Complex64::new(alpha0, 0.0),
        CIRCLE_RADIUS,
        CIRCLE_NODES,
    );
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e.into());
    }
    Ok(CValue::new(r, err))
}

pub fn zeta_residue_cmd(loaded: &Loaded) -> Result<Report, CliError> {
    let c = &loaded.config;
    let (m, x) = loaded.metric()?;
    let n = m.dim();
    let order = c.order.unwrap_or(1);
    let tol = c.tolerances.agreement.unwrap_or(1e-3);
    let ladder = c.epsilon_ladder.clone().unwrap_or_else(|| EPSILON_LADDER.to_vec());
    let density = zeta_density(&m, &x, ladder[0], order)?;
    let poles = density.pole_locations();
    let alpha0 = c.alpha0.unwrap_or(n as f64 / 2.0 - 1.0);
    if !poles.contains(&alpha0) {
        return Err(CliError::Validation(format!("alpha0 = {alpha0} is not in the pole set {poles:?}")));
    }
    let scalar = curvature(&m, &x)?.scalar;
    let half = n as f64 / 2.0;
    let prediction = if alpha0 == half - 1.0 {
        Some(predicted_residue(n, scalar))
    } else if alpha0 == half {
        Some(Complex64::i() * (4.0 * PI).powf(-half) * rgamma(Complex64::new(half, 0.0)))
    } else {
        None
    };
    let prediction = prediction.map(|p| CValue::new(p, 64.0 * f64::EPSILON * p.norm()));
    let param = epsilon_extrapolation(&density, alpha0, &ladder, 1, scalar)?;
    let top = density.residue_analytic(half)?;
    let scale = prediction.map(|p| p.value.norm()).unwrap_or(0.0).max(top.value.norm());

    let model = loaded.model()?;
    let mode = match &model {
        Some(model) => {
            if model.spacetime_dim() != n {
                return Err(CliError::Validation(format!(
                    "model '{}' has spacetime dimension {}, the metric {}",
                    model.name,
                    model.spacetime_dim(),
                    n
                )));
            }
            let rungs = ladder
                .iter()
                .map(|&e| mode_residue(model, alpha0, e))
                .collect::<Result<Vec<_>, _>>()?;
            let limit = extrapolate_epsilon(&ladder, &rungs, 1)?;
            Some((rungs, limit))
        }
        None => {
            log::warn!("no model_file given: reporting the parametrix and curvature columns only");
            None
        }
    };

    let mut checks: Vec<(String, CValue)> = Vec::new();
    if let Some(p) = prediction {
        checks.push(("parametrix vs curvature".into(), relative_gap(param.extrapolated, p, scale)));
        if let Some((_, lim)) = &mode {
            checks.push(("mode sum vs curvature".into(), relative_gap(*lim, p, scale)));
        }
    }
    if let Some((_, lim)) = &mode {
        checks.push(("parametrix vs mode sum".into(), relative_gap(param.extrapolated, *lim, scale)));
    }
    let failures: Vec<String> = checks
        .iter()
        .filter(|(_, g)| g.value.re > tol)
        .map(|(name, g)| format!("{name}: relative gap {:e} exceeds {tol:e}", g.value.re))
        .collect();

    let ladder_json: Vec<Value> = param
        .epsilon_ladder
        .iter()
        .enumerate()
        .map(|(i, r)| {
            json!({
                "epsilon": r.epsilon,
                "parametrix_analytic": complex(r.analytic),
                "parametrix_numeric": complex(r.numeric),
                "mode_sum": mode.as_ref().map(|(rungs, _)| complex(rungs[i])),
            })
        })
        .collect();
    let json = merge(
        header("zeta-residue", loaded),
        json!({
            "metric": m.name,
            "model": model.as_ref().map(|m| m.name.clone()),
            "point": x,
            "order": order,
            "alpha0": alpha0,
            "scalar_curvature": real(scalar, 64.0 * f64::EPSILON * (1.0 + scalar.abs())),
            "epsilon_ladder": ladder_json,
            "residue_parametrix": complex(param.extrapolated),
            "residue_parametrix_numeric": complex(param.residue_numeric),
            "residue_mode_sum": mode.as_ref().map(|(_, l)| complex(*l)),
            "predicted_from_R": prediction.map(complex),
            "scale": real(scale, 64.0 * f64::EPSILON * scale),
            "comparisons": checks.iter().map(|(name, g)| json!({
                "name": name,
                "relative_gap": real(g.value.re, g.error),
                "tolerance": tol,
                "pass": g.value.re <= tol,
            })).collect::<Vec<_>>(),
        }),
    );

    let mut rows = vec![vec![
        "parametrix (eps -> 0)".to_string(),
        fmt_complex(param.extrapolated.value),
        fmt_err(param.extrapolated.error),
    ]];
    if let Some((_, lim)) = &mode {
        rows.push(vec!["mode sum (eps -> 0)".into(), fmt_complex(lim.value), fmt_err(lim.error)]);
    }
    if let Some(p) = prediction {
        rows.push(vec!["curvature prediction".into(), fmt_complex(p.value), fmt_err(p.error)]);
    }
    let check_rows: Vec<Vec<String>> = checks
        .iter()
        .map(|(name, g)| vec![name.clone(), fmt_real(g.value.re), fmt_err(g.error), verdict(g.value.re <= tol).into()])
        .collect();
    let text = format!(
        "residue at alpha0 = {alpha0} for {} at {:?} (R = {scalar:.12})\n\n{}\n{}",
        m.name,
        x,
        table(&["source", "residue", "error"], &rows),
        table(&["comparison", "relative gap", "error", "check"], &check_rows)
    );

    let csv_header: Vec<String> = [
        "epsilon",
        "parametrix_re",
        "parametrix_im",
        "parametrix_error",
        "mode_re",
        "mode_im",
        "mode_error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let csv_rows = param
        .epsilon_ladder
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![
                r.epsilon.to_string(),
                r.analytic.value.re.to_string(),
                r.analytic.value.im.to_string(),
                r.analytic.error.to_string(),
            ];
            match &mode {
                Some((rungs, _)) => row.extend([
                    rungs[i].value.re.to_string(),
                    rungs[i].value.im.to_string(),
                    rungs[i].error.to_string(),
                ]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
            row
        })
        .collect();
    Ok(Report {
        json,
        text,
        csv: Some((csv_header, csv_rows)),
        failures,
    })
}

// ---------------------------------------------------------------------------
// contour-check

pub fn contour_check_cmd(loaded: &Loaded) -> Result<Report, CliError> {
    let cfg = loaded
        .config
        .contour
        .as_ref()
        .ok_or_else(|| CliError::Validation("contour-check needs a contour section".into()))?;
    let tol = loaded.config.tolerances.contour.unwrap_or(1e-7);
    let eps = cfg.epsilon;
    let contour = ContourGamma::with_theta(eps, cfg.theta.unwrap_or(PI / 4.0))?;
    let alphas: Vec<Complex64> = cfg.alpha.iter().map(|a| a.value()).collect();
    let sweep = cfg.r_max.clone().unwrap_or_default();
    if sweep.windows(2).any(|p| p[1] <= p[0]) {
        return Err(CliError::Validation("r_max values must increase".into()));
    }

    let mut cells = Vec::new();
    let mut csv_rows = Vec::new();
    let mut failures = Vec::new();
    let mut text_rows = Vec::new();
    let mut push_row = |kind: &str, w: f64, a: Complex64, r: f64, v: Complex64, exact: Complex64, err: f64, est: f64| {
        csv_rows.push(vec![
            kind.to_string(),
            w.to_string(),
            a.re.to_string(),
            a.im.to_string(),
            r.to_string(),
            v.re.to_string(),
            v.im.to_string(),
            exact.re.to_string(),
            exact.im.to_string(),
            err.to_string(),
            est.to_string(),
        ]);
    };
    for &w in &cfg.w {
        for &a in &alphas {
            let exact = BranchedPower::shifted_real(w, eps, -a).value();
            let v = contour_power_scalar(w, eps, a, &contour)?;
            let err = (v.value - exact).norm();
            let bound = err <= v.error();
            let ok = err <= tol && bound;
            if !ok {
                failures.push(format!("w = {w}, alpha = {a}: error {err:e}, estimate {:e}", v.error()));
            }
            push_row("grid", w, a, v.r_max, v.value, exact, err, v.error());
            text_rows.push(vec![
                format!("{w}"),
                format!("{a}"),
                format!("{:.3e}", v.r_max),
                fmt_real(err),
                fmt_err(v.error()),
                verdict(ok).into(),
            ]);
            let mut sweep_json = Vec::new();
            let mut errs = Vec::new();
            for &r in &sweep {
                let s = contour_power_scalar(w, eps, a, &contour.with_r_max(r))?;
                let e = (s.value - exact).norm();
                errs.push(e);
                push_row("sweep", w, a, r, s.value, exact, e, s.error());
                sweep_json.push(json!({ "r_max": r, "value": complex(CValue::new(s.value, s.error())), "abs_error": e }));
            }
            let monotone = errs.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-6) + 1e-12);
            if !monotone {
                failures.push(format!("w = {w}, alpha = {a}: R_max sweep error is not decreasing"));
            }
            cells.push(json!({
                "w": w,
                "alpha": [a.re, a.im],
                "value": complex(CValue::new(v.value, v.error())),
                "exact": complex(CValue::new(exact, 64.0 * f64::EPSILON * exact.norm())),
                "abs_error": err,
                "quadrature_error": v.quadrature_error,
                "truncation_error": v.truncation_error,
                "r_max": v.r_max,
                "bound_holds": bound,
                "pass": ok,
                "sweep": sweep_json,
                "sweep_monotone": monotone,
            }));
        }
    }
    let json = merge(
        header("contour-check", loaded),
        json!({
            "epsilon": eps,
            "theta": contour.theta,
            "tail_tolerance": contour.tail_tol,
            "tolerance": tol,
            "cells": cells,
        }),
    );
    let text = format!(
        "contour functional calculus, epsilon = {eps}, theta = {:.6}\n\n{}",
        contour.theta,
        table(&["w", "alpha", "R_max", "|error|", "estimate", "check"], &text_rows)
    );
    let csv_header = [
        "kind", "w", "alpha_re", "alpha_im", "r_max", "value_re", "value_im", "exact_re", "exact_im", "abs_error", "error_estimate",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    Ok(Report {
        json,
        text,
        csv: Some((csv_header, csv_rows)),
        failures,
    })
}

// ---------------------------------------------------------------------------
// cc-expansion

pub fn cc_expansion_cmd(loaded: &Loaded) -> Result<Report, CliError> {
    let c = &loaded.config;
    let model = loaded
        .model()?
        .ok_or_else(|| CliError::Validation("cc-expansion needs a model_file".into()))?;
    let tf = c
        .test_function
        .as_ref()
        .ok_or_else(|| CliError::Validation("cc-expansion needs a test_function".into()))?;
    let f = TestFunction::new(&tf.f_hat, (tf.support[0], tf.support[1]))?;
    let lambdas = c
        .lambdas
        .clone()
        .ok_or_else(|| CliError::Validation("cc-expansion needs lambdas".into()))?;
    let order = c.order.unwrap_or(3);
    let eps = c.epsilon.unwrap_or(1e-2);
    let tol0 = c.tolerances.agreement.unwrap_or(1e-2);
    let tol1 = c.tolerances.subleading.unwrap_or(5e-2);
    // ultrastatic dt² − h: R_g = −R_h
    let scalar = match c.scalar {
        Some(s) => s,
        None if c.metric_file.is_some() || c.benchmark.is_some() => {
            let (m, x) = loaded.metric()?;
            curvature(&m, &x)?.scalar
        }
        None => -model
            .spatial_scalar()
            .ok_or_else(|| CliError::Validation("give 'scalar' or a metric: the model's curvature is unknown".into()))?,
    };
    let r = cc_expansion_check(&model, &f, &lambdas, order, eps, scalar)?;
    let n = r.n as i32;
    let fit_at = |l: f64| -> CValue {
        r.fitted.iter().enumerate().fold(CValue::new(Complex64::new(0.0, 0.0), 0.0), |acc, (j, cj)| {
            let p = l.powi(n - 2 * j as i32);
            CValue::new(acc.value + cj.value * p, acc.error + cj.error * p)
        })
    };

    let ok0 = r.rel_error_c0a0.value.re <= tol0;
    let (sub_name, sub) = if scalar != 0.0 {
        ("rel_error_c1a1", r.rel_error_c1a1)
    } else {
        ("c1_gap_over_c0a0", r.c1_gap_over_c0a0)
    };
    let ok1 = sub.value.re <= tol1;
    let mut failures = Vec::new();
    if !ok0 {
        failures.push(format!("leading coefficient off by {:e} (tolerance {tol0:e})", r.rel_error_c0a0.value.re));
    }
    if !ok1 {
        failures.push(format!("{sub_name} = {:e} exceeds {tol1:e}", sub.value.re));
    }

    let samples: Vec<Value> = r
        .samples
        .iter()
        .map(|s| json!({ "lambda": s.lambda, "value": complex(s.value), "fit": complex(fit_at(s.lambda)) }))
        .collect();
    let json = merge(
        header("cc-expansion", loaded),
        json!({
            "model": r.model,
            "n": r.n,
            "epsilon": r.epsilon,
            "scalar": r.scalar + 0.0,
            "test_function": { "f_hat": tf.f_hat, "support": tf.support },
            "order": order,
            "samples": samples,
            "fitted": r.fitted.iter().map(|v| complex(*v)).collect::<Vec<_>>(),
            "c_coeffs": r.c_coeffs.iter().map(|v| complex(*v)).collect::<Vec<_>>(),
            "a_coeffs": [real(r.a_coeffs[0], 64.0 * f64::EPSILON * r.a_coeffs[0].abs()), real(r.a_coeffs[1], 64.0 * f64::EPSILON * r.a_coeffs[1].abs())],
            "predicted_c0a0": complex(r.predicted_c0a0),
            "predicted_c1a1": complex(r.predicted_c1a1),
            "rel_error_c0a0": real(r.rel_error_c0a0.value.re, r.rel_error_c0a0.error),
            "rel_error_c1a1": real(r.rel_error_c1a1.value.re, r.rel_error_c1a1.error),
            "c1_gap_over_c0a0": real(r.c1_gap_over_c0a0.value.re, r.c1_gap_over_c0a0.error),
            "condition": r.condition,
            "tolerances": { "leading": tol0, "subleading": tol1 },
            "pass": ok0 && ok1,
        }),
    );
    let mut rows: Vec<Vec<String>> = r
        .fitted
        .iter()
        .enumerate()
        .map(|(j, v)| vec![format!("c_{j} (Lambda^{})", n - 2 * j as i32), fmt_complex(v.value), fmt_err(v.error), String::new()])
        .collect();
    rows.push(vec!["C_0 a_0".into(), fmt_complex(r.predicted_c0a0.value), fmt_err(r.predicted_c0a0.error), String::new()]);
    rows.push(vec!["C_1 a_1".into(), fmt_complex(r.predicted_c1a1.value), fmt_err(r.predicted_c1a1.error), String::new()]);
    rows.push(vec!["rel. error c_0".into(), fmt_real(r.rel_error_c0a0.value.re), fmt_err(r.rel_error_c0a0.error), verdict(ok0).into()]);
    rows.push(vec![sub_name.into(), fmt_real(sub.value.re), fmt_err(sub.error), verdict(ok1).into()]);
    let text = format!(
        "spectral-action expansion on {}, epsilon = {eps}, R = {scalar}, fit order {order} (condition {:.3e})\n\n{}",
        r.model,
        r.condition,
        table(&["quantity", "value", "error", "check"], &rows),
        scalar = scalar + 0.0,
    );
    let csv_header = ["lambda", "value_re", "value_im", "error", "fit_re", "fit_im"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let csv_rows = r
        .samples
        .iter()
        .map(|s| {
            let fit = fit_at(s.lambda).value;
            vec![
                s.lambda.to_string(),
                s.value.value.re.to_string(),
                s.value.value.im.to_string(),
                s.value.error.to_string(),
                fit.re.to_string(),
                fit.im.to_string(),
            ]
        })
        .collect();
    Ok(Report {
        json,
        text,
        csv: Some((csv_header, csv_rows)),
        failures,
    })
}
