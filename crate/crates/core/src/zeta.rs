//! The local zeta density ζ_{g,ε}(α)(x) assembled from Hadamard data and the
//! model family, its poles and residues, and the spectral-action
//! coefficients.
//!
//! The density is represented by the truncated parametrix series
//!
//! ```text
//! ζ_{g,ε}(α)(x) ≈ Σ_{m=0}^{N} u_m(x,x) · c(α, m) · F_{m+α−1}(iε, 0)
//! ```
//!
//! with c(α, m) = (−1)^m Γ(1−α)/(Γ(1−α−m)Γ(α+m)). The holomorphic remainder
//! (the difference between the resolvent and its parametrix) is not
//! computed: pole locations and residues are exact up to the accuracy of the
//! u_m, while values off the poles depend on the truncation N.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{curvature, MetricField};
use crate::hadamard::{transport_solve, Valued};
use crate::minkmodel::{f_diagonal, f_diagonal_residue};
use crate::quad::{circle_integral, extrapolate, Quadrature};
use crate::special::{gamma, pochhammer, rgamma};
use crate::specoracle::{mode_action, SpectralModel};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Radius of the α-circles used for numerical residues.
pub const CIRCLE_RADIUS: f64 = 0.05;
/// Trapezoid nodes on an α-circle.
pub const CIRCLE_NODES: usize = 64;
/// Allowed gap between the analytic and the numerical residue, relative to
/// the sum of the magnitudes of the per-term residues.
pub const RESIDUE_TOL: f64 = 1e-6;
/// Default ε ladder for the ε → 0 extrapolation.
pub const EPSILON_LADDER: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A complex number with an error estimate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct CValue {
    pub value: Complex64,
    pub error: f64,
}

impl CValue {
    pub fn new(value: Complex64, error: f64) -> Self {
        CValue { value, error }
    }
}

/// c(α, m) in the stable form (−1)^m (1−α−m)_m / Γ(α+m), free of the
/// removable singularities of the Γ-ratio.
pub fn series_coefficient(alpha: Complex64, m: usize) -> Complex64 {
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * pochhammer(1.0 - alpha - m as f64, m) * rgamma(alpha + m as f64)
}

/// c(α, m) as the literal ratio (−1)^m Γ(1−α)/(Γ(1−α−m)Γ(α+m)). Not finite
/// where 1 − α is a non-positive integer.
pub fn series_coefficient_gamma_ratio(alpha: Complex64, m: usize) -> Complex64 {
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * gamma(1.0 - alpha) * rgamma(1.0 - alpha - m as f64) * rgamma(alpha + m as f64)
}

/// One term of the series at a given α.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesTerm {
    pub m: usize,
    pub u: Valued,
    pub coefficient: Complex64,
    pub model: Complex64,
    pub value: CValue,
}

/// Value of the density at α with its per-term breakdown.
#[derive(Clone, Debug, Serialize)]
pub struct DensityValue {
    pub alpha: Complex64,
    pub value: CValue,
    pub terms: Vec<SeriesTerm>,
}

/// Analytic and numerical residue at a pole.
#[derive(Clone, Debug, Serialize)]
pub struct Residue {
    pub alpha0: f64,
    pub epsilon: f64,
    pub analytic: CValue,
    pub numeric: CValue,
    /// Residue contributed by each u_m, m = 0..=N.
    pub terms: Vec<Complex64>,
}

/// The truncated parametrix series at a point.
#[derive(Clone, Debug, Serialize)]
pub struct MeromorphicDensity {
    pub dim: usize,
    pub point: Vec<f64>,
    pub epsilon: f64,
    /// u_m(x, x) for m = 0..=N.
    pub u: Vec<Valued>,
}

impl MeromorphicDensity {
    pub fn new(dim: usize, point: Vec<f64>, epsilon: f64, u: Vec<Valued>) -> Result<Self> {
        if dim < 4 || !dim.is_multiple_of(2) {
            return Err(Error::Unsupported(format!("zeta density needs even n ≥ 4, got {dim}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Invalid(format!("epsilon = {epsilon} must be positive")));
        }
        if u.is_empty() {
            return Err(Error::Invalid("no Hadamard coefficients".into()));
        }
        Ok(MeromorphicDensity {
            dim,
            point,
            epsilon,
            u,
        })
    }

    /// The Minkowski density: u_0 = 1 and u_m = 0 for m ≥ 1.
    pub fn flat(dim: usize, epsilon: f64, order: usize) -> Result<Self> {
        let mut u = vec![Valued { value: 0.0, error: 0.0 }; order + 1];
        u[0].value = 1.0;
        MeromorphicDensity::new(dim, vec![0.0; dim], epsilon, u)
    }

    pub fn order(&self) -> usize {
        self.u.len() - 1
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        MeromorphicDensity::new(self.dim, self.point.clone(), epsilon, self.u.clone())
    }

    /// The spectral parameter z = iε at which the model family is evaluated.
    pub fn z(&self) -> Complex64 {
        Complex64::new(0.0, self.epsilon)
    }

    /// Poles resolved by the truncation: n/2 − j for 0 ≤ j ≤ N, down to 1.
    pub fn pole_locations(&self) -> Vec<f64> {
        let h = self.dim / 2;
        (0..=self.order().min(h - 1)).map(|j| (h - j) as f64).collect()
    }

    fn is_pole(&self, alpha: Complex64) -> bool {
        let h = (self.dim / 2) as f64;
        let r = alpha.re.round();
        alpha.im.abs() < 1e-12 && (alpha.re - r).abs() < 1e-12 && r >= 1.0 && r <= h
    }

    /// ζ(α) off the poles.
    pub fn evaluate(&self, alpha: Complex64) -> Result<DensityValue> {
        if self.is_pole(alpha) {
            return Err(Error::Pole { alpha });
        }
        let z = self.z();
        let mut terms = Vec::with_capacity(self.u.len());
        let mut total = c(0.0);
        let mut error = 0.0;
        for (m, u) in self.u.iter().enumerate() {
            let coefficient = series_coefficient(alpha, m);
            let model = if coefficient == c(0.0) {
                c(0.0)
            } else {
                f_diagonal(self.dim, alpha + m as f64 - 1.0, z)?
            };
            let value = u.value * coefficient * model;
            let term_error = u.error * (coefficient * model).norm() + 4.0 * f64::EPSILON * value.norm();
            total += value;
            error += term_error;
            terms.push(SeriesTerm {
                m,
                u: *u,
                coefficient,
                model,
                value: CValue::new(value, term_error),
            });
        }
        Ok(DensityValue {
            alpha,
            value: CValue::new(total, error),
            terms,
        })
    }

    pub fn value(&self, alpha: Complex64) -> Result<Complex64> {
        Ok(self.evaluate(alpha)?.value.value)
    }

    fn check_pole(&self, alpha0: f64) -> Result<()> {
        if self.pole_locations().contains(&alpha0) {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "alpha0 = {alpha0} is not in the pole set {:?}",
                self.pole_locations()
            )))
        }
    }

    /// Res_{α=α₀} of each term: u_m · (1/Γ(α₀)) · Res F_{m+α−1}(iε, 0).
    pub fn residue_terms(&self, alpha0: f64) -> Result<Vec<Complex64>> {
        self.check_pole(alpha0)?;
        let g = rgamma(c(alpha0));
        self.u
            .iter()
            .enumerate()
            .map(|(m, u)| Ok(u.value * g * f_diagonal_residue(self.dim, m as f64 + alpha0 - 1.0, self.z())?))
            .collect()
    }

    /// Analytic residue with the error propagated from the u_m.
    pub fn residue_analytic(&self, alpha0: f64) -> Result<CValue> {
        let terms = self.residue_terms(alpha0)?;
        let g = rgamma(c(alpha0));
        let mut err = 0.0;
        for (m, u) in self.u.iter().enumerate() {
            err += u.error * (g * f_diagonal_residue(self.dim, m as f64 + alpha0 - 1.0, self.z())?).norm();
        }
        let sum: Complex64 = terms.iter().sum();
        Ok(CValue::new(sum, err + 4.0 * f64::EPSILON * sum.norm()))
    }

    /// (2πi)^{−1}∮ζ over the circle of radius [`CIRCLE_RADIUS`] around α₀.
    pub fn residue_numeric(&self, alpha0: f64) -> Result<CValue> {
        self.check_pole(alpha0)?;
        let failure = std::sync::Mutex::new(None);
        let (value, err) = circle_integral(
            |a| match self.value(a) {
                Ok(v) => v,
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e.to_string());
                    c(f64::NAN)
                }
            },
            c(alpha0),
            CIRCLE_RADIUS,
            CIRCLE_NODES,
        );
        if let Some(msg) = failure.into_inner().unwrap() {
            return Err(Error::Domain(msg));
        }
        Ok(CValue::new(value, err))
    }

    /// Both residue paths; fails when they disagree.
    pub fn residue(&self, alpha0: f64) -> Result<Residue> {
        let terms = self.residue_terms(alpha0)?;
        let analytic = self.residue_analytic(alpha0)?;
        let numeric = self.residue_numeric(alpha0)?;
        let scale: f64 = terms.iter().map(|t| t.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
        if (analytic.value - numeric.value).norm() > RESIDUE_TOL * scale {
            return Err(Error::ResidueMismatch {
                analytic: analytic.value,
                numeric: numeric.value,
            });
        }
        Ok(Residue {
            alpha0,
            epsilon: self.epsilon,
            analytic,
            numeric,
            terms,
        })
    }

    /// Mean-value test of holomorphy at α: |f(α) − mean over a circle|,
    /// relative to |f(α)|.
    pub fn mean_value_defect(&self, alpha: Complex64, radius: f64) -> Result<f64> {
        let center = self.value(alpha)?;
        let nodes: Vec<Complex64> = (0..CIRCLE_NODES)
            .map(|k| alpha + Complex64::from_polar(radius, 2.0 * PI * k as f64 / CIRCLE_NODES as f64))
            .collect();
        let vals: Result<Vec<Complex64>> = nodes.par_iter().map(|&a| self.value(a)).collect();
        let mean: Complex64 = vals?.iter().sum::<Complex64>() / CIRCLE_NODES as f64;
        Ok((mean - center).norm() / center.norm().max(f64::MIN_POSITIVE))
    }
}

/// Solve the transport hierarchy to order N at x and assemble the density.
pub fn zeta_density(m: &MetricField, x: &[f64], epsilon: f64, order: usize) -> Result<MeromorphicDensity> {
    let h = transport_solve(m, x, order)?;
    MeromorphicDensity::new(m.dim(), x.to_vec(), epsilon, h.diag_values)
}

/// Analytic and numerical residue of the density at α₀.
pub fn residue(m: &MetricField, x: &[f64], epsilon: f64, order: usize, alpha0: f64) -> Result<Residue> {
    zeta_density(m, x, epsilon, order)?.residue(alpha0)
}

/// −i R/(6 (4π)^{n/2} Γ(n/2 − 1)): the ε → 0 residue at α = n/2 − 1 predicted
/// by the scalar curvature.
pub fn predicted_residue(n: usize, scalar: f64) -> Complex64 {
    let h = n as f64 / 2.0;
    -I * scalar / (6.0 * (4.0 * PI).powf(h)) * rgamma(c(h - 1.0))
}

/// One rung of the ε ladder.
#[derive(Clone, Debug, Serialize)]
pub struct LadderRung {
    pub epsilon: f64,
    pub analytic: CValue,
    pub numeric: CValue,
}

/// ε → 0 residue report.
#[derive(Clone, Debug, Serialize)]
pub struct ResidueReport {
    pub alpha0: f64,
    /// ε → 0 limit of the analytic residues.
    pub residue_analytic: CValue,
    /// ε → 0 limit of the α-circle residues.
    pub residue_numeric: CValue,
    pub epsilon_ladder: Vec<LadderRung>,
    /// Best ε → 0 value (the analytic path).
    pub extrapolated: CValue,
    #[serde(rename = "predicted_from_R")]
    pub predicted_from_r: CValue,
    pub rel_error: CValue,
}

/// Richardson extrapolation ε → 0 in powers ε, ε², … up to `degree`.
pub fn extrapolate_epsilon(eps: &[f64], values: &[CValue], degree: usize) -> Result<CValue> {
    if eps.len() < degree + 1 {
        return Err(Error::Invalid(format!(
            "{} ladder points cannot support extrapolation of degree {degree}",
            eps.len()
        )));
    }
    let powers: Vec<f64> = (1..=degree).map(|p| p as f64).collect();
    let v: Vec<Complex64> = values.iter().map(|x| x.value).collect();
    let ex = extrapolate(eps, &v, &powers);
    // the extrapolation weights amplify the per-rung errors
    let input: f64 = values.iter().map(|x| x.error).fold(0.0, f64::max);
    let gain = if degree == 0 { 1.0 } else { 1.0 + 2.0 * degree as f64 };
    Ok(CValue::new(ex.value, ex.error + gain * input))
}

/// Residues along an ε ladder, their ε → 0 limits (Richardson of the given
/// degree, 1 by default since the residue is affine in ε) and the comparison
/// with the curvature prediction.
pub fn epsilon_extrapolation(
    density: &MeromorphicDensity,
    alpha0: f64,
    ladder: &[f64],
    degree: usize,
    scalar: f64,
) -> Result<ResidueReport> {
    let rungs: Result<Vec<LadderRung>> = ladder
        .iter()
        .map(|&eps| {
            let d = density.with_epsilon(eps)?;
            let r = d.residue(alpha0)?;
            Ok(LadderRung {
                epsilon: eps,
                analytic: r.analytic,
                numeric: r.numeric,
            })
        })
        .collect();
    let rungs = rungs?;
    let analytic = extrapolate_epsilon(ladder, &rungs.iter().map(|r| r.analytic).collect::<Vec<_>>(), degree)?;
    let numeric = extrapolate_epsilon(ladder, &rungs.iter().map(|r| r.numeric).collect::<Vec<_>>(), degree)?;
    let predicted = CValue::new(
        predicted_residue(density.dim, scalar),
        64.0 * f64::EPSILON * predicted_residue(density.dim, scalar.abs().max(1.0)).norm(),
    );
    let rel_error = relative_error(analytic, predicted);
    Ok(ResidueReport {
        alpha0,
        residue_analytic: analytic,
        residue_numeric: numeric,
        epsilon_ladder: rungs,
        extrapolated: analytic,
        predicted_from_r: predicted,
        rel_error,
    })
}

/// |a − b|/|b| with a first-order error bound; the absolute gap when b = 0.
pub fn relative_error(a: CValue, b: CValue) -> CValue {
    let gap = (a.value - b.value).norm();
    let scale = b.value.norm();
    if scale == 0.0 {
        CValue::new(c(gap), a.error + b.error)
    } else {
        CValue::new(c(gap / scale), (a.error + b.error) / scale)
    }
}

/// Residue report at α₀ = n/2 − 1 for a metric, using the default ladder.
pub fn curvature_residue_report(m: &MetricField, x: &[f64], order: usize) -> Result<ResidueReport> {
    let density = zeta_density(m, x, EPSILON_LADDER[0], order)?;
    let scalar = curvature(m, x)?.scalar;
    epsilon_extrapolation(&density, m.dim() as f64 / 2.0 - 1.0, &EPSILON_LADDER, 1, scalar)
}

// ---------------------------------------------------------------------------
// spectral action

/// Test function of the spectral action, given through f̂ on its support
/// [a, b] ⊂ (0, ∞). The profile is f(μ) = ∫ f̂(t) e^{iμ/t} dt/t.
#[derive(Clone, Debug)]
pub struct TestFunction {
    expr: Expr,
    support: (f64, f64),
    scale: f64,
}

/// Serialized form of a [`TestFunction`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSpec {
    /// f̂ as an expression in `t`.
    pub f_hat: String,
    pub support: [f64; 2],
}

impl TestFunction {
    pub fn new(f_hat: &str, support: (f64, f64)) -> Result<Self> {
        let (a, b) = support;
        if !(a > 0.0) {
            return Err(Error::Invalid(format!("support of f_hat must stay away from 0, got [{a}, {b}]")));
        }
        if !(b.is_finite() && b > a) {
            return Err(Error::Invalid(format!("support of f_hat must be a bounded interval, got [{a}, {b}]")));
        }
        let expr = Expr::parse(f_hat, &["t".to_string()])?;
        Ok(TestFunction {
            expr,
            support,
            scale: 1.0,
        })
    }

    pub fn from_spec(spec: &TestFunctionSpec) -> Result<Self> {
        TestFunction::new(&spec.f_hat, (spec.support[0], spec.support[1]))
    }

    /// The smooth bump exp(−1/((t−a)(b−t))) on [a, b].
    pub fn bump(a: f64, b: f64) -> Result<Self> {
        TestFunction::new(&format!("exp(-1/((t-{a})*({b}-t)))"), (a, b))
    }

    pub fn spec(&self) -> TestFunctionSpec {
        let (a, b) = self.support();
        TestFunctionSpec {
            f_hat: self.expr.source().to_string(),
            support: [a, b],
        }
    }

    /// Support of f̂ (after any dilation).
    pub fn support(&self) -> (f64, f64) {
        (self.support.0 * self.scale, self.support.1 * self.scale)
    }

    /// The function t ↦ f̂(t/s).
    pub fn dilated(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Invalid(format!("dilation {s} must be positive")));
        }
        let mut d = self.clone();
        d.scale *= s;
        Ok(d)
    }

    /// f̂(t), zero off the support.
    pub fn f_hat(&self, t: f64) -> Result<f64> {
        let (a, b) = self.support();
        if t <= a || t >= b {
            return Ok(0.0);
        }
        let v = self.expr.eval_f64(&[t / self.scale])?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("f_hat is not finite at t = {t}")))
        }
    }

    fn integrate<F: Fn(f64) -> f64 + Sync>(&self, g: F) -> Result<(f64, f64)> {
        let (a, b) = self.support();
        let failed = std::sync::Mutex::new(None);
        let q = Quadrature::new(1e-15, 1e-12).with_max_intervals(2000);
        let est = q.integrate(
            |t: f64| match self.f_hat(t) {
                Ok(v) => v * g(t),
                Err(e) => {
                    failed.lock().unwrap().get_or_insert(e);
                    0.0
                }
            },
            a,
            b,
        );
        if let Some(e) = failed.into_inner().unwrap() {
            return Err(e);
        }
        let est = est.require(1e-12)?;
        Ok((est.value, est.error))
    }

    /// ∫ f̂(t) t^p dt with its error estimate.
    pub fn moment(&self, p: f64) -> Result<(f64, f64)> {
        self.integrate(|t| t.powf(p))
    }

    /// f(μ) = ∫ f̂(t) e^{iμ/t} dt/t.
    pub fn profile(&self, mu: Complex64) -> Result<CValue> {
        let (re, e1) = self.integrate(|t| ((I * mu / t).exp() / t).re)?;
        let (im, e2) = self.integrate(|t| ((I * mu / t).exp() / t).im)?;
        Ok(CValue::new(Complex64::new(re, im), e1 + e2))
    }

    /// Trapezoid nodes (t_i, h·f̂(t_i)) on the support with `count` interior
    /// points. Spectrally accurate when f̂ vanishes to all orders at the ends.
    pub(crate) fn trapezoid(&self, count: usize) -> Result<Vec<(f64, f64)>> {
        let (a, b) = self.support();
        let h = (b - a) / (count + 1) as f64;
        (1..=count)
            .map(|i| {
                let t = a + h * i as f64;
                Ok((t, h * self.f_hat(t)?))
            })
            .collect()
    }
}

/// C_j(f) = i^{−1} e^{i(n−2j)π/4} ∫ f̂(t) t^{n/2−1−j} dt.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CcCoefficient {
    pub n: usize,
    pub j: usize,
    pub moment: f64,
    pub value: CValue,
}

pub fn cc_coefficients(f: &TestFunction, n: usize, j: usize) -> Result<CcCoefficient> {
    if n < 2 {
        return Err(Error::Invalid(format!("dimension {n} too small")));
    }
    let p = n as f64 / 2.0 - 1.0 - j as f64;
    let (moment, err) = f.moment(p)?;
    let phase = -I * Complex64::from_polar(1.0, (n as f64 - 2.0 * j as f64) * PI / 4.0);
    Ok(CcCoefficient {
        n,
        j,
        moment,
        value: CValue::new(phase * moment, err),
    })
}

/// a_0 = (4π)^{−n/2} and a_1 = −(4π)^{−n/2} R/6.
pub fn heat_coefficients(n: usize, scalar: f64) -> [f64; 2] {
    let a0 = (4.0 * PI).powf(-(n as f64) / 2.0);
    [a0, -a0 * scalar / 6.0]
}

/// Value of f((□ + iε)/Λ²)(x, x) at one Λ.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ActionSample {
    pub lambda: f64,
    pub value: CValue,
}

/// Fit of the Λ-sweep to Σ_j c_j Λ^{n−2j}.
#[derive(Clone, Debug, Serialize)]
pub struct CcFitReport {
    pub model: String,
    pub n: usize,
    pub epsilon: f64,
    pub scalar: f64,
    pub samples: Vec<ActionSample>,
    /// c_j, the coefficient of Λ^{n−2j}.
    pub fitted: Vec<CValue>,
    pub c_coeffs: Vec<CValue>,
    pub a_coeffs: [f64; 2],
    pub predicted_c0a0: CValue,
    pub predicted_c1a1: CValue,
    pub rel_error_c0a0: CValue,
    pub rel_error_c1a1: CValue,
    /// |c_1 − C_1 a_1| relative to |C_0 a_0|, meaningful when a_1 = 0.
    pub c1_gap_over_c0a0: CValue,
    pub condition: f64,
}

/// Largest condition number accepted for the Λ fit.
pub const MAX_FIT_CONDITION: f64 = 1e10;

fn fit_powers(lambdas: &[f64], values: &[Complex64], exponents: &[f64]) -> Result<(Vec<Complex64>, f64)> {
    let scale = lambdas.iter().cloned().fold(0.0, f64::max);
    let a = DMatrix::from_fn(lambdas.len(), exponents.len(), |i, j| (lambdas[i] / scale).powf(exponents[j]));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > MAX_FIT_CONDITION {
        return Err(Error::IllConditioned { cond });
    }
    let solve = |rhs: Vec<f64>| -> Result<Vec<f64>> {
        let b = nalgebra::DVector::from_vec(rhs);
        let x = svd
            .solve(&b, 1e-14 * smax)
            .map_err(|e| Error::Domain(format!("least squares: {e}")))?;
        Ok(x.iter().copied().collect())
    };
    let re = solve(values.iter().map(|v| v.re).collect())?;
    let im = solve(values.iter().map(|v| v.im).collect())?;
    let coeffs = re
        .iter()
        .zip(&im)
        .zip(exponents)
        .map(|((r, i), e)| Complex64::new(*r, *i) / scale.powf(*e))
        .collect();
    Ok((coeffs, cond))
}

/// Computes f((□+iε)/Λ²)(x,x) over the Λ grid by mode sums, fits
/// Σ_{j=0}^{N} c_j Λ^{n−2j} and compares c_0, c_1 with C_0 a_0, C_1 a_1.
/// `scalar` is the spacetime scalar curvature R_g.
pub fn cc_expansion_check(
    model: &SpectralModel,
    f: &TestFunction,
    lambdas: &[f64],
    order: usize,
    epsilon: f64,
    scalar: f64,
) -> Result<CcFitReport> {
    let n = model.spatial_dim + 1;
    if lambdas.len() < order + 2 {
        return Err(Error::Invalid(format!(
            "a fit of order {order} needs at least {} values of Lambda",
            order + 2
        )));
    }
    if order < 1 {
        return Err(Error::Invalid("the fit needs order N ≥ 1".into()));
    }
    let samples: Result<Vec<ActionSample>> = lambdas
        .iter()
        .map(|&l| {
            let r = mode_action(model, f, l, epsilon, 1.0)?;
            Ok(ActionSample {
                lambda: l,
                value: CValue::new(r.value, r.truncation_error_estimate),
            })
        })
        .collect();
    let samples = samples?;
    let values: Vec<Complex64> = samples.iter().map(|s| s.value.value).collect();
    let exps: Vec<f64> = (0..=order).map(|j| n as f64 - 2.0 * j as f64).collect();
    let (coeffs, cond) = fit_powers(lambdas, &values, &exps)?;
    // error: change under one more fit term, plus the propagated sample errors
    let (longer, _) = if lambdas.len() > order + 2 {
        let e2: Vec<f64> = (0..=order + 1).map(|j| n as f64 - 2.0 * j as f64).collect();
        fit_powers(lambdas, &values, &e2).unwrap_or((coeffs.clone(), cond))
    } else {
        (coeffs.clone(), cond)
    };
    let sample_err = samples.iter().map(|s| s.value.error).fold(0.0, f64::max);
    let lmin = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    let fitted: Vec<CValue> = coeffs
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let drift = (longer[j] - v).norm();
            CValue::new(*v, drift + cond * sample_err / lmin.powf(exps[j]))
        })
        .collect();
    let c0 = cc_coefficients(f, n, 0)?;
    let c1 = cc_coefficients(f, n, 1)?;
    let a = heat_coefficients(n, scalar);
    let p0 = CValue::new(c0.value.value * a[0], c0.value.error * a[0]);
    let p1 = CValue::new(c1.value.value * a[1], c1.value.error * a[1].abs());
    let gap1 = CValue::new(
        c((fitted[1].value - p1.value).norm() / p0.value.norm()),
        (fitted[1].error + p1.error) / p0.value.norm(),
    );
    Ok(CcFitReport {
        model: model.name.clone(),
        n,
        epsilon,
        scalar,
        samples,
        rel_error_c0a0: relative_error(fitted[0], p0),
        rel_error_c1a1: relative_error(fitted[1], p1),
        c1_gap_over_c0a0: gap1,
        fitted,
        c_coeffs: vec![c0.value, c1.value],
        a_coeffs: a,
        predicted_c0a0: p0,
        predicted_c1a1: p1,
        condition: cond,
    })
}
