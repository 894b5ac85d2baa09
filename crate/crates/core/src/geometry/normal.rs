//! Exponential map and normal coordinates.
//!
//! Two independent constructions are provided. [`normal_coordinates`] and
//! [`NormalChart::pullback_metric_ode`] shoot geodesics with the adaptive
//! ODE solver. [`NormalChart`] itself builds the Taylor polynomial of the
//! exponential map v ↦ x0 + X(v) from the geodesic equation
//!
//! ```text
//! m(m−1) X_m = −[Γ(x0 + X)(EX, EX)]_m        (E = Euler operator v·∂_v)
//! ```
//!
//! solved degree by degree, which gives exact jets of the pulled-back
//! metric g̃(v) = (∂X/∂v)ᵀ g(x0 + X(v)) (∂X/∂v) at any point of the chart.

use super::curvature::christoffel_jets;
use super::geodesic::geodesic_full;
use super::{MetricField, Signature};
use crate::error::{Error, Result};
use crate::jet::{compose_many, shifted_many, Jet, JetSpace};
use nalgebra::{DMatrix, DVector};

/// Default degree of the exponential-map polynomial.
pub const DEFAULT_DEGREE: usize = 10;

/// Orthonormal frame at x0 (columns), by Gram–Schmidt on the coordinate
/// basis: timelike leg first, lowest index first, orientation preserving.
pub fn orthonormal_frame(m: &MetricField, x0: &[f64]) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let g = m.metric_at(x0)?;
    let eta = m.signature().eta(n);
    let dot = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &g * b)[(0, 0)];
    let scale = g.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let basis = |i: usize| {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        e
    };
    let mut candidates: Vec<DVector<f64>> = Vec::new();
    if m.signature() == Signature::Lorentzian {
        // the first timelike candidate is placed in front
        let mut timelike = (0..n).map(basis).find(|e| dot(e, e) > 1e-8 * scale);
        if timelike.is_none() {
            'outer: for i in 0..n {
                for j in i + 1..n {
                    for sgn in [1.0, -1.0] {
                        let e = basis(i) + basis(j) * sgn;
                        if dot(&e, &e) > 1e-8 * scale {
                            timelike = Some(e);
                            break 'outer;
                        }
                    }
                }
            }
        }
        candidates.push(timelike.ok_or_else(|| Error::Invalid("no timelike direction at x0".into()))?);
    }
    candidates.extend((0..n).map(basis));
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(n);
    for c in candidates {
        if frame.len() == n {
            break;
        }
        let mut w = c.clone();
        for (a, e) in frame.iter().enumerate() {
            w -= e * (eta[a] * dot(&c, e));
        }
        let q = dot(&w, &w);
        let want = eta[frame.len()];
        if q.abs() <= 1e-10 * scale * w.norm_squared() || q.signum() != want {
            continue;
        }
        frame.push(w / q.abs().sqrt());
    }
    if frame.len() < n {
        return Err(Error::SingularMetric {
            point: x0.to_vec(),
            det: g.determinant(),
        });
    }
    let mut e = DMatrix::from_columns(&frame);
    if e.determinant() < 0.0 {
        let last = -e.column(n - 1);
        e.set_column(n - 1, &last);
    }
    Ok(e)
}

/// Normal coordinates at x0 (in the standard frame) of the point y, by
/// Newton iteration on the shooting map.
pub fn normal_coordinates(m: &MetricField, x0: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let e = orthonormal_frame(m, x0)?;
    normal_coordinates_in_frame(m, x0, &e, y)
}

pub(crate) fn normal_coordinates_in_frame(m: &MetricField, x0: &[f64], e: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let n = m.dim();
    let target = DVector::from_column_slice(y);
    let origin = DVector::from_column_slice(x0);
    let e_inv = e.clone().try_inverse().ok_or_else(|| Error::Invalid("degenerate frame".into()))?;
    let mut v = &e_inv * (&target - &origin);
    let tol = m.tol.ode.max(1e-12) * (1.0 + target.norm());
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        if v.norm() == 0.0 && (&target - &origin).norm() == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let w = e * &v;
        let end = geodesic_full(m, x0, w.as_slice(), 1.0, true)?;
        let f = DVector::from_column_slice(&end.x) - &target;
        residual = f.norm();
        if residual <= tol {
            return Ok(v.iter().copied().collect());
        }
        let jac = end.jacobian.unwrap() * e;
        let step = jac
            .lu()
            .solve(&f)
            .ok_or(Error::NewtonFailure { residual })?;
        v -= step;
        if !v.iter().all(|a| a.is_finite()) {
            break;
        }
    }
    Err(Error::NewtonFailure { residual })
}

/// Normal chart at x0 given by the Taylor polynomial of the exponential map.
#[derive(Clone, Debug)]
pub struct NormalChart {
    metric: MetricField,
    center: Vec<f64>,
    frame: DMatrix<f64>,
    /// X^i(v) = exp_{x0}(Ev)^i − x0^i as polynomials in v.
    exp_map: Vec<Jet>,
    degree: usize,
    convergence_radius: f64,
    r_max: f64,
}

impl NormalChart {
    pub fn new(m: &MetricField, x0: &[f64]) -> Result<NormalChart> {
        let e = orthonormal_frame(m, x0)?;
        NormalChart::with_frame(m, x0, e, DEFAULT_DEGREE)
    }

    /// Chart for a given orthonormal frame (columns) and polynomial degree.
    pub fn with_frame(m: &MetricField, x0: &[f64], frame: DMatrix<f64>, degree: usize) -> Result<NormalChart> {
        let n = m.dim();
        assert!(degree >= 4);
        let g0 = m.metric_at(x0)?;
        let eta = m.signature().eta(n);
        let pulled = frame.transpose() * &g0 * &frame;
        for a in 0..n {
            for b in 0..n {
                let want = if a == b { eta[a] } else { 0.0 };
                if (pulled[(a, b)] - want).abs() > 1e-8 {
                    return Err(Error::Invalid("frame is not orthonormal".into()));
                }
            }
        }
        let gj = m.eval_metric_jet(x0, degree - 1)?;
        let (gamma, _) = christoffel_jets(&gj.g, n)?;
        // distinct components Γ^i_{jk}, j ≤ k
        let mut pairs = Vec::new();
        let mut polys = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    pairs.push((i, j, k));
                    polys.push(gamma[(i * n + j) * n + k].clone());
                }
            }
        }
        let vs = JetSpace::get(n, degree);
        let linear: Vec<Jet> = (0..n)
            .map(|i| {
                let mut x = Jet::zero(&vs);
                for a in 0..n {
                    x += &(Jet::variable(&vs, a, 0.0) * frame[(i, a)]);
                }
                x
            })
            .collect();
        let mut x = linear.clone();
        for _ in 1..degree {
            let gx = compose_many(&polys, &x);
            let ex: Vec<Jet> = x.iter().map(euler).collect();
            let mut q = vec![Jet::zero(&vs); n];
            let mut products = vec![None; n * n];
            for (&(i, j, k), gc) in pairs.iter().zip(&gx) {
                let w = products[j * n + k].get_or_insert_with(|| &ex[j] * &ex[k]);
                let factor = if j == k { 1.0 } else { 2.0 };
                q[i] += &(gc * &*w * factor);
            }
            for i in 0..n {
                let mut next = linear[i].clone();
                let c = next.coeffs_mut();
                for d in 2..=degree {
                    let scale = -1.0 / (d * (d - 1)) as f64;
                    for idx in vs.degree_range(d) {
                        c[idx] = scale * q[i].coeffs()[idx];
                    }
                }
                x[i] = next;
            }
        }
        let convergence_radius = estimate_radius(&x, degree);
        let box_dist = m
            .domain()
            .iter()
            .zip(x0)
            .map(|(&(lo, hi), &c)| (c - lo).min(hi - c))
            .fold(f64::INFINITY, f64::min);
        let op_norm = frame.norm();
        let r_max = 1.0f64.min(0.5 * convergence_radius).min(0.8 * box_dist / op_norm);
        Ok(NormalChart {
            metric: m.clone(),
            center: x0.to_vec(),
            frame,
            exp_map: x,
            degree,
            convergence_radius,
            r_max,
        })
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Working radius: points with Euclidean norm |v| ≤ r_max are accepted.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Estimated convergence radius of the exponential-map series.
    pub fn convergence_radius(&self) -> f64 {
        self.convergence_radius
    }

    pub fn eta(&self) -> Vec<f64> {
        self.metric.signature().eta(self.dim())
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r > self.r_max * (1.0 + 1e-12) {
            return Err(Error::ChartExit { s: r });
        }
        Ok(())
    }

    /// exp_{x0}(Ev) from the Taylor polynomial.
    pub fn exp(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(self
            .exp_map
            .iter()
            .zip(&self.center)
            .map(|(x, c)| c + x.eval(v))
            .collect())
    }

    /// Jets of the pulled-back metric g̃_{ab} at v, valid to `order`.
    pub fn metric_jet(&self, v: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.check(v)?;
        let n = self.dim();
        let work = JetSpace::get(n, order + 1);
        let out = JetSpace::get(n, order);
        let xs = shifted_many(&self.exp_map, v, &work);
        let coords: Vec<Jet> = xs.iter().zip(&self.center).map(|(x, &c)| x.clone() + c).collect();
        let g = self.metric.eval_at_jets(&coords).map_err(|e| match e {
            Error::OutsideDomain { .. } | Error::Domain(_) => Error::ChartExit {
                s: v.iter().map(|a| a * a).sum::<f64>().sqrt(),
            },
            other => other,
        })?;
        // J^i_a = ∂X^i/∂v^a
        let jac: Vec<Jet> = (0..n)
            .flat_map(|i| (0..n).map(move |a| (i, a)))
            .map(|(i, a)| xs[i].derivative(a))
            .collect();
        let mut gj = vec![Jet::zero(&work); n * n];
        for i in 0..n {
            for a in 0..n {
                for j in 0..n {
                    gj[i * n + a] += &(&g[i * n + j] * &jac[j * n + a]);
                }
            }
        }
        let mut result: Vec<Jet> = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                if b < a {
                    let t: Jet = result[b * n + a].clone();
                    result.push(t);
                    continue;
                }
                let mut s = Jet::zero(&work);
                for i in 0..n {
                    s += &(&jac[i * n + a] * &gj[i * n + b]);
                }
                result.push(s.project(&out));
            }
        }
        Ok(result)
    }

    /// Pulled-back metric at v computed independently by shooting the
    /// geodesic with the ODE solver: g̃ = (J E)ᵀ g(exp(Ev)) (J E) with
    /// J = ∂ exp / ∂(initial velocity).
    pub fn pullback_metric_ode(&self, v: &[f64]) -> Result<DMatrix<f64>> {
        let w = &self.frame * DVector::from_column_slice(v);
        let end = geodesic_full(&self.metric, &self.center, w.as_slice(), 1.0, true)?;
        let g = self.metric.metric_at(&end.x)?;
        let je = end.jacobian.unwrap() * &self.frame;
        Ok(je.transpose() * g * je)
    }

    /// Normal coordinates in this chart's frame of a point y, by Newton
    /// iteration on the shooting map.
    pub fn coordinates_of(&self, y: &[f64]) -> Result<Vec<f64>> {
        normal_coordinates_in_frame(&self.metric, &self.center, &self.frame, y)
    }
}

/// The Euler operator v·∂_v: multiplies each degree-d coefficient by d.
fn euler(x: &Jet) -> Jet {
    let mut y = x.clone();
    let space = x.space().clone();
    let c = y.coeffs_mut();
    for d in 1..=space.order() {
        for idx in space.degree_range(d) {
            c[idx] *= d as f64;
        }
    }
    y
}

/// Root-test estimate of the convergence radius from the upper half of the
/// Taylor coefficients; infinite when they all vanish.
fn estimate_radius(x: &[Jet], degree: usize) -> f64 {
    let space = x[0].space().clone();
    let mut radius = f64::INFINITY;
    for d in (degree / 2).max(3)..=degree {
        let a = x
            .iter()
            .map(|xi| space.degree_range(d).map(|i| xi.coeffs()[i].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if a > 1e-300 {
            radius = radius.min(a.powf(-1.0 / d as f64));
        }
    }
    radius
}
