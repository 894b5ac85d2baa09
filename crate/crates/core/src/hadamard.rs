//! Hadamard coefficients u_k from the transport hierarchy
//!
//! ```text
//! 2k u_k + b^i η_ij x^j u_k + 2 x^i ∂_i u_k + 2 P u_{k−1} = 0,   u_0(0) = 1,
//! ```
//!
//! solved in normal coordinates at x0. Along a ray x = s·v the equation is a
//! linear ODE in s with integrating factor s^k G^{1/4}, G = |det g̃|:
//!
//! ```text
//! u_k(x) = −G(x)^{−1/4} ∫₀¹ σ^{k−1} G(σx)^{1/4} (P u_{k−1})(σx) dσ.
//! ```
//!
//! Everything is carried as multivariate Taylor jets in a displacement δ
//! around the evaluation point, so P u_{k−1} is an exact derivative of the
//! discretised scheme. The jet of u_{k−1} at σ(x + δ) is the jet at σx
//! rescaled by σ, so all evaluations of a given u_k(x) stay on one ray.

use crate::error::{Error, Result};
use crate::geometry::{abs_det, apply_p_jet, b_vector_jet, MetricField, NormalChart};
use crate::jet::{Jet, JetSpace};
use crate::quad::{extrapolate, Quadrature};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::cell::{Cell, RefCell};

/// Default residual tolerance of the transport solution.
pub const TOL_TRANSPORT: f64 = 1e-8;

/// Settings of the transport solver.
#[derive(Clone, Debug)]
pub struct TransportOptions {
    /// Tolerance of each σ-quadrature.
    pub quad_tol: f64,
    /// Diagonal sample radii are r, r/2, r/4, r/8 with r = radius_fraction·r_max.
    pub radius_fraction: f64,
    /// Direction (in normal coordinates) used for the diagonal limit.
    pub direction: Option<Vec<f64>>,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            quad_tol: 1e-10,
            radius_fraction: 0.1,
            direction: None,
        }
    }
}

/// A value with its error estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Valued {
    pub value: f64,
    pub error: f64,
}

/// u_k at a point of a ray, with quadrature metadata.
#[derive(Clone, Debug, Serialize)]
pub struct RayValue {
    pub k: usize,
    pub point: Vec<f64>,
    pub value: f64,
    pub error: f64,
    /// Number of metric jet evaluations spent.
    pub evaluations: usize,
}

/// Terms of the k-th transport equation at one point.
#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub k: usize,
    pub point: Vec<f64>,
    pub u: f64,
    /// 2k u_k + b^i η_ij x^j u_k + 2 x^i ∂_i u_k + 2 P u_{k−1}.
    pub residual: f64,
    /// Error estimate of the residual coming from the quadratures.
    pub error: f64,
}

/// Jet-level transport solver on a fixed normal chart.
#[derive(Clone, Debug)]
pub struct TransportSolver {
    chart: NormalChart,
    quad: Quadrature,
}

struct Work {
    evaluations: Cell<usize>,
    failure: RefCell<Option<Error>>,
}

impl Work {
    fn new() -> Work {
        Work {
            evaluations: Cell::new(0),
            failure: RefCell::new(None),
        }
    }

    fn fail(&self, e: Error) {
        let mut f = self.failure.borrow_mut();
        if f.is_none() {
            *f = Some(e);
        }
    }

    fn check(&self) -> Result<()> {
        match self.failure.borrow_mut().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl TransportSolver {
    pub fn new(chart: NormalChart, quad_tol: f64) -> TransportSolver {
        TransportSolver {
            chart,
            quad: Quadrature::new(quad_tol, quad_tol).with_max_intervals(200),
        }
    }

    pub fn chart(&self) -> &NormalChart {
        &self.chart
    }

    fn metric(&self, x: &[f64], order: usize, work: &Work) -> Result<Vec<Jet>> {
        work.evaluations.set(work.evaluations.get() + 1);
        self.chart.metric_jet(x, order)
    }

    /// Jet of u_k at x in the space of the given order, with an error
    /// estimate. Coefficients are exact up to degree order − 2k.
    pub fn u_jet(&self, k: usize, x: &[f64], order: usize) -> Result<(Jet, f64, usize)> {
        let work = Work::new();
        let r = self.u_jet_in(k, x, order, &work)?;
        Ok((r.0, r.1, work.evaluations.get()))
    }

    fn u_jet_in(&self, k: usize, x: &[f64], order: usize, work: &Work) -> Result<(Jet, f64)> {
        let g = self.metric(x, order, work)?;
        self.u_jet_with(k, x, &g, order, work)
    }

    /// As `u_jet_in` with the metric jet at x already computed.
    fn u_jet_with(&self, k: usize, x: &[f64], g: &[Jet], order: usize, work: &Work) -> Result<(Jet, f64)> {
        if k > 0 && order < 2 * k {
            return Err(Error::JetOrder {
                needed: 2 * k,
                have: order,
            });
        }
        let det = abs_det(g, self.chart.dim());
        if k == 0 {
            return Ok((det.powf(-0.25), 0.0));
        }
        let inner_err = Cell::new(0.0f64);
        let integrand = |sigma: f64| -> Jet {
            let y: Vec<f64> = x.iter().map(|a| sigma * a).collect();
            match self.source_jet(k, &y, order, work) {
                Ok((j, e)) => {
                    inner_err.set(inner_err.get().max(e));
                    (j * sigma.powi(k as i32 - 1)).rescaled(sigma)
                }
                Err(e) => {
                    work.fail(e);
                    Jet::zero(&JetSpace::get(x.len(), order))
                }
            }
        };
        let est = self.quad.integrate(integrand, 0.0, 1.0);
        work.check()?;
        let est = est.require(self.quad.abs_tol)?;
        let factor = det.powf(-0.25);
        let scale = factor.value().abs();
        let u = &factor * &est.value * -1.0;
        Ok((u, scale * (est.error + inner_err.get())))
    }

    /// G^{1/4} P u_{k−1} at y, with the error estimate of the P u_{k−1}
    /// value scaled through the two derivatives (a heuristic bound).
    fn source_jet(&self, k: usize, y: &[f64], order: usize, work: &Work) -> Result<(Jet, f64)> {
        let g = self.metric(y, order, work)?;
        let (u, err) = self.u_jet_with(k - 1, y, &g, order, work)?;
        let pu = apply_p_jet(&g, &u)?;
        let det = abs_det(&g, self.chart.dim());
        Ok((&det.powf(0.25) * &pu, err))
    }

    /// u_k(x) as a plain value.
    pub fn value(&self, k: usize, x: &[f64]) -> Result<RayValue> {
        let (j, err, evaluations) = self.u_jet(k, x, 2 * k)?;
        Ok(RayValue {
            k,
            point: x.to_vec(),
            value: j.value(),
            error: err,
            evaluations,
        })
    }

    /// Residual of the k-th transport equation at x. For k = 0 the source
    /// term is absent.
    pub fn residual(&self, k: usize, x: &[f64]) -> Result<Residual> {
        let n = self.chart.dim();
        let order = 2 * k + 1;
        let work = Work::new();
        let g = self.metric(x, order, &work)?;
        let (u, err_u) = self.u_jet_with(k, x, &g, order, &work)?;
        let b = b_vector_jet(&g, n)?;
        let eta = self.chart.eta();
        let bx: f64 = (0..n).map(|i| b[i].value() * eta[i] * x[i]).sum();
        let radial: f64 = (0..n).map(|i| x[i] * u.derivative(i).value()).sum();
        let mut res = (2.0 * k as f64 + bx) * u.value() + 2.0 * radial;
        let mut err = err_u;
        if k > 0 {
            let (prev, err_p) = self.u_jet_with(k - 1, x, &g, order, &work)?;
            res += 2.0 * apply_p_jet(&g, &prev)?.value();
            err += err_p;
        }
        Ok(Residual {
            k,
            point: x.to_vec(),
            u: u.value(),
            residual: res,
            error: err,
        })
    }
}

/// Hadamard coefficients at a point: diagonal values and a ray evaluator.
#[derive(Clone, Debug)]
pub struct HadamardCoefficients {
    pub center: Vec<f64>,
    pub order: usize,
    /// u_k(x0, x0) for k = 0..=order.
    pub diag_values: Vec<Valued>,
    solver: TransportSolver,
}

impl HadamardCoefficients {
    pub fn solver(&self) -> &TransportSolver {
        &self.solver
    }

    /// u_k(s·v), v and s in normal coordinates at the center.
    pub fn ray(&self, k: usize, v: &[f64], s: f64) -> Result<RayValue> {
        let x: Vec<f64> = v.iter().map(|a| s * a).collect();
        self.solver.value(k, &x)
    }

    /// Transport residual for u_k at s·v.
    pub fn residual(&self, k: usize, v: &[f64], s: f64) -> Result<Residual> {
        let x: Vec<f64> = v.iter().map(|a| s * a).collect();
        self.solver.residual(k, &x)
    }
}

/// Fixed direction used for diagonal limits unless one is supplied.
pub fn default_direction(n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / r).collect()
}

/// u_k(0) as the s → 0 limit of ½(u_k(sv) + u_k(−sv)) at s = r, r/2, r/4,
/// r/8, extrapolated in even powers of s.
pub fn diagonal_limit(solver: &TransportSolver, k: usize, direction: &[f64], radius: f64) -> Result<Valued> {
    let norm = direction.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Invalid("zero direction".into()));
    }
    let hs: Vec<f64> = (0..4).map(|i| radius / 2f64.powi(i)).collect();
    let jobs: Vec<(f64, f64)> = hs.iter().flat_map(|&h| [(h, 1.0), (h, -1.0)]).collect();
    let vals: Vec<Result<RayValue>> = jobs
        .par_iter()
        .map(|&(h, sign)| {
            let x: Vec<f64> = direction.iter().map(|a| sign * h * a / norm).collect();
            solver.value(k, &x)
        })
        .collect();
    let mut sym = Vec::with_capacity(4);
    let mut qerr: f64 = 0.0;
    for pair in vals.chunks(2) {
        let (a, b) = (pair[0].as_ref().map_err(clone_err)?, pair[1].as_ref().map_err(clone_err)?);
        sym.push(0.5 * (a.value + b.value));
        qerr = qerr.max(a.error.max(b.error));
    }
    let ex = extrapolate(&hs, &sym, &[2.0, 4.0, 6.0]);
    Ok(Valued {
        value: ex.value,
        error: ex.error + qerr,
    })
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::Quadrature { error, tol } => Error::Quadrature {
            error: *error,
            tol: *tol,
        },
        Error::ChartExit { s } => Error::ChartExit { s: *s },
        Error::JetOrder { needed, have } => Error::JetOrder {
            needed: *needed,
            have: *have,
        },
        other => Error::Domain(other.to_string()),
    }
}

/// u_0(s·v) = |g̃(0)|^{1/4} |g̃(s·v)|^{−1/4} through the normal chart at x0.
pub fn u0(m: &MetricField, x0: &[f64], v: &[f64], s: f64) -> Result<f64> {
    let chart = NormalChart::new(m, x0)?;
    let x: Vec<f64> = v.iter().map(|a| s * a).collect();
    let n = m.dim();
    let g0 = chart.metric_jet(&vec![0.0; n], 0)?;
    let g = chart.metric_jet(&x, 0)?;
    Ok((abs_det(&g0, n).value() / abs_det(&g, n).value()).powf(0.25))
}

/// Solve the hierarchy up to u_N at x0 on the default normal chart.
pub fn transport_solve(m: &MetricField, x0: &[f64], order: usize) -> Result<HadamardCoefficients> {
    transport_solve_with(NormalChart::new(m, x0)?, order, &TransportOptions::default())
}

/// Solve the hierarchy on a given chart (for instance with another frame).
pub fn transport_solve_with(chart: NormalChart, order: usize, opts: &TransportOptions) -> Result<HadamardCoefficients> {
    let n = chart.dim();
    let direction = match &opts.direction {
        Some(d) if d.len() == n => d.clone(),
        Some(d) => {
            return Err(Error::Invalid(format!("direction has {} components, expected {n}", d.len())));
        }
        None => default_direction(n),
    };
    let radius = opts.radius_fraction * chart.r_max();
    let center = chart.center().to_vec();
    let solver = TransportSolver::new(chart, opts.quad_tol);
    let mut diag_values = vec![Valued { value: 1.0, error: 0.0 }];
    for k in 1..=order {
        diag_values.push(diagonal_limit(&solver, k, &direction, radius)?);
    }
    Ok(HadamardCoefficients {
        center,
        order,
        diag_values,
        solver,
    })
}

/// u_1(x0, x0) = −P(|g̃(0)|^{1/4}|g̃|^{−1/4}) at the center, from fourth-order
/// jets of the pulled-back metric and no quadrature.
pub fn diagonal_u1_direct(m: &MetricField, x0: &[f64]) -> Result<f64> {
    diagonal_u1_on(&NormalChart::new(m, x0)?)
}

/// [`diagonal_u1_direct`] on a given chart.
pub fn diagonal_u1_on(chart: &NormalChart) -> Result<f64> {
    let n = chart.dim();
    let g = chart.metric_jet(&vec![0.0; n], 4)?;
    let det = abs_det(&g, n);
    let u = det.powf(-0.25) * det.value().powf(0.25);
    Ok(-apply_p_jet(&g, &u)?.value())
}

/// Chart at x0 whose frame is the default one composed with a fixed
/// rotation or boost, for frame-covariance checks.
pub fn chart_with_frame(m: &MetricField, x0: &[f64], transform: &DMatrix<f64>) -> Result<NormalChart> {
    let base = NormalChart::new(m, x0)?;
    NormalChart::with_frame(m, x0, base.frame() * transform, base.degree())
}
