//! Geodesics by the Dormand–Prince 5(4) pair with adaptive steps, optionally
//! integrating the first variational equations to obtain ∂x(s)/∂v.

use super::curvature::christoffel_jets;
use super::MetricField;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

const MAX_STEPS: usize = 1_000_000;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// End point of a geodesic segment.
#[derive(Clone, Debug)]
pub struct GeodesicEnd {
    pub x: Vec<f64>,
    pub velocity: Vec<f64>,
    /// ∂x(s)/∂v when requested.
    pub jacobian: Option<DMatrix<f64>>,
    pub steps: usize,
}

/// Right-hand side of the geodesic system, with or without the variational
/// block. Layout: x (n), p (n), then J = ∂x/∂v and K = ∂p/∂v (n×n each,
/// row-major).
fn rhs(m: &MetricField, y: &[f64], variational: bool, s: f64) -> Result<Vec<f64>> {
    let n = m.dim();
    let x = &y[..n];
    let p = &y[n..2 * n];
    let order = if variational { 2 } else { 1 };
    let jet = m.eval_metric_jet(x, order).map_err(|e| match e {
        Error::OutsideDomain { .. } => Error::ChartExit { s },
        other => other,
    })?;
    let (gamma, _) = christoffel_jets(&jet.g, n)?;
    let gi = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut out = vec![0.0; y.len()];
    out[..n].copy_from_slice(p);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += gamma[gi(i, j, k)].value() * p[j] * p[k];
            }
        }
        out[n + i] = -acc;
    }
    if variational {
        let jm = &y[2 * n..2 * n + n * n];
        let km = &y[2 * n + n * n..];
        let mut unit = vec![0u8; n];
        for i in 0..n {
            for c in 0..n {
                out[2 * n + i * n + c] = km[i * n + c];
                // −∂_a Γ^i_{jk} p^j p^k J^a_c − 2 Γ^i_{jk} p^j K^k_c
                let mut acc = 0.0;
                for a in 0..n {
                    unit.iter_mut().for_each(|u| *u = 0);
                    unit[a] = 1;
                    let mut d = 0.0;
                    for j in 0..n {
                        for k in 0..n {
                            d += gamma[gi(i, j, k)].partial(&unit) * p[j] * p[k];
                        }
                    }
                    acc += d * jm[a * n + c];
                }
                for j in 0..n {
                    for k in 0..n {
                        acc += 2.0 * gamma[gi(i, j, k)].value() * p[j] * km[k * n + c];
                    }
                }
                out[2 * n + n * n + i * n + c] = -acc;
            }
        }
    }
    Ok(out)
}

/// Integrate the geodesic from x0 with initial velocity v up to parameter s.
pub fn geodesic_full(m: &MetricField, x0: &[f64], v: &[f64], s: f64, jacobian: bool) -> Result<GeodesicEnd> {
    let n = m.dim();
    m.metric_at(x0)?;
    let mut y: Vec<f64> = x0.iter().chain(v).copied().collect();
    if jacobian {
        y.extend(std::iter::repeat_n(0.0, n * n));
        for i in 0..n {
            for c in 0..n {
                y.push(if i == c { 1.0 } else { 0.0 });
            }
        }
    }
    let tol = m.tol.ode;
    let dir = s.signum();
    let total = s.abs();
    let vnorm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut h = if vnorm > 0.0 { (0.05 / vnorm).min(total) } else { total };
    let mut t = 0.0;
    let mut steps = 0;
    let mut k1 = if total > 0.0 { rhs(m, &y, jacobian, 0.0)? } else { vec![0.0; y.len()] };
    while t < total {
        if steps >= MAX_STEPS {
            return Err(Error::StepUnderflow { s: dir * t });
        }
        if total - t <= 1e-13 * total.max(1.0) {
            break;
        }
        h = h.min(total - t);
        if h <= 1e-14 * total.max(1.0) {
            return Err(Error::StepUnderflow { s: dir * t });
        }
        let hs = dir * h;
        let mut ks = vec![k1.clone()];
        let mut failed = None;
        for stage in 1..7 {
            let yi: Vec<f64> = (0..y.len())
                .map(|q| y[q] + hs * (0..stage).map(|r| A[stage][r] * ks[r][q]).sum::<f64>())
                .collect();
            match rhs(m, &yi, jacobian, dir * (t + C[stage] * h)) {
                Ok(k) => ks.push(k),
                Err(e @ Error::ChartExit { .. }) | Err(e @ Error::Domain(_)) | Err(e @ Error::SingularMetric { .. }) | Err(e @ Error::Signature { .. }) => {
                    failed = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if let Some(e) = failed {
            // A trial stage left the chart: retry with a smaller step, and
            // give up only when the step becomes negligible.
            h *= 0.25;
            if h <= 1e-12 * total.max(1.0) {
                return Err(match e {
                    Error::ChartExit { .. } => Error::ChartExit { s: dir * t },
                    other => other,
                });
            }
            continue;
        }
        let y5: Vec<f64> = (0..y.len())
            .map(|q| y[q] + hs * (0..7).map(|r| B5[r] * ks[r][q]).sum::<f64>())
            .collect();
        let mut err: f64 = 0.0;
        for q in 0..y.len() {
            let e = hs * (0..7).map(|r| (B5[r] - B4[r]) * ks[r][q]).sum::<f64>();
            let sc = tol + tol * y[q].abs().max(y5[q].abs());
            err = err.max((e / sc).abs());
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            k1 = ks.pop().unwrap(); // first-same-as-last
            steps += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    let jac = if jacobian {
        Some(DMatrix::from_row_slice(n, n, &y[2 * n..2 * n + n * n]))
    } else {
        None
    };
    Ok(GeodesicEnd {
        x: y[..n].to_vec(),
        velocity: y[n..2 * n].to_vec(),
        jacobian: jac,
        steps,
    })
}

/// Point reached at parameter s along the geodesic through x0 with
/// initial velocity v; exp_{x0}(v) is the value at s = 1.
pub fn geodesic(m: &MetricField, x0: &[f64], v: &[f64], s: f64) -> Result<Vec<f64>> {
    Ok(geodesic_full(m, x0, v, s, false)?.x)
}
