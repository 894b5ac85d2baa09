//! Mode-sum oracle on ultrastatic spacetimes R × Y with Y compact and its
//! Laplace spectrum known explicitly.
//!
//! With □ = ∂_t² − Δ_h, separation of variables turns (□ − iε)^{−α}(x, x)
//! into (2π)^{−1} Σ_j w_j ∫(λ_j − τ² − iε)^{−α} dτ, where λ_j are the
//! eigenvalues of −Δ_h and w_j = Σ|e_j(y)|² over an eigenspace. On the
//! homogeneous built-ins the weights are multiplicity/volume.
//!
//! Built-in spectra (standard, see e.g. Berger–Gauduchon–Mazet, *Le spectre
//! d'une variété riemannienne*): the flat torus of side L has λ = |2πk/L|²,
//! k ∈ Z^d, each with weight L^{−d}; the round sphere S^d of radius r has
//! λ_k = k(k+d−1)/r² with multiplicity (2k+d−1)(k+1)⋯(k+d−2)/(d−1)!. Both are
//! re-checked against the Weyl law by [`SpectralModel::weyl_defect`].

use crate::error::{Error, Result};
use crate::minkmodel::BranchedPower;
use crate::quad::Quadrature;
use crate::special::{gamma, hurwitz_zeta, rgamma};
use crate::zeta::{CValue, TestFunction};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use once_cell::sync::Lazy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Default number of torus shells (N = |k|² < K).
pub const DEFAULT_TORUS_SHELLS: usize = 100_000;
/// Default number of sphere levels.
pub const DEFAULT_SPHERE_LEVELS: usize = 2001;

/// One eigenvalue with its summed eigenfunction density.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Level {
    pub lambda: f64,
    pub weight: f64,
}

/// How the spectrum is generated.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum Generator {
    Torus { side: f64 },
    Sphere { radius: f64 },
    Explicit,
    Product { factors: Vec<SpectralModel> },
}

/// Eigenvalue/weight data of a compact Riemannian manifold (Y, h).
#[derive(Clone, Debug, Serialize)]
pub struct SpectralModel {
    pub name: String,
    pub spatial_dim: usize,
    pub generator: Generator,
    /// Number of generator steps (torus shells, sphere levels, explicit
    /// levels).
    pub truncation: usize,
    /// Every eigenvalue up to this bound is included.
    pub complete_up_to: f64,
    levels: Vec<Level>,
    /// Torus only: lattice-point counts r_d(N) for N < truncation.
    #[serde(skip)]
    shell_counts: Vec<f64>,
}

/// Model file: `{name, spatial_dim, generator, params, K}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub spatial_dim: usize,
    pub generator: String,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(rename = "K", default)]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// r_d(N) = #{k ∈ Z^d : |k|² = N} for N < count, by repeated convolution
/// with the squares.
pub fn lattice_counts(d: usize, count: usize) -> Vec<f64> {
    let mut r = vec![0.0; count];
    if count == 0 {
        return r;
    }
    r[0] = 1.0;
    for _ in 0..d {
        let mut next = r.clone();
        let mut m = 1usize;
        while m * m < count {
            let s = m * m;
            for n in s..count {
                next[n] += 2.0 * r[n - s];
            }
            m += 1;
        }
        r = next;
    }
    r
}

fn sphere_multiplicity(d: usize, k: usize) -> f64 {
    let mut m = (2 * k + d - 1) as f64;
    let mut fact = 1.0;
    for i in 1..=d - 2 {
        m *= (k + i) as f64;
        fact *= (i + 1) as f64;
    }
    m / fact
}

fn sphere_volume(d: usize, r: f64) -> f64 {
    2.0 * PI.powf((d + 1) as f64 / 2.0) / gamma(c((d + 1) as f64 / 2.0)).re * r.powi(d as i32)
}

impl SpectralModel {
    /// Flat torus R^d/(L Z)^d with shells N = |k|² < `shells`.
    pub fn torus(d: usize, side: f64, shells: usize) -> Result<Self> {
        if d == 0 || !(side > 0.0 && side.is_finite()) || shells == 0 {
            return Err(Error::Invalid(format!("torus needs d ≥ 1, side > 0 and K ≥ 1 (d = {d}, side = {side}, K = {shells})")));
        }
        let counts = lattice_counts(d, shells);
        let kappa2 = (2.0 * PI / side).powi(2);
        let vol = side.powi(d as i32);
        let levels = counts
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0.0)
            .map(|(n, &r)| Level {
                lambda: kappa2 * n as f64,
                weight: r / vol,
            })
            .collect();
        Ok(SpectralModel {
            name: format!("T{d}(L={side})"),
            spatial_dim: d,
            generator: Generator::Torus { side },
            truncation: shells,
            complete_up_to: kappa2 * (shells - 1) as f64,
            levels,
            shell_counts: counts,
        })
    }

    /// Round sphere S^d of radius r with levels k < `levels`.
    pub fn sphere(d: usize, radius: f64, levels: usize) -> Result<Self> {
        if d < 2 || !(radius > 0.0 && radius.is_finite()) || levels == 0 {
            return Err(Error::Invalid(format!("sphere needs d ≥ 2, radius > 0 and K ≥ 1 (d = {d}, r = {radius}, K = {levels})")));
        }
        let vol = sphere_volume(d, radius);
        let lv: Vec<Level> = (0..levels)
            .map(|k| Level {
                lambda: (k * (k + d - 1)) as f64 / (radius * radius),
                weight: sphere_multiplicity(d, k) / vol,
            })
            .collect();
        Ok(SpectralModel {
            name: format!("S{d}(r={radius})"),
            spatial_dim: d,
            generator: Generator::Sphere { radius },
            truncation: levels,
            complete_up_to: lv.last().unwrap().lambda,
            levels: lv,
            shell_counts: Vec::new(),
        })
    }

    /// Explicit eigenvalues and weights (sorted on input, zero weights
    /// rejected).
    pub fn explicit(name: &str, d: usize, eigenvalues: &[f64], weights: &[f64]) -> Result<Self> {
        if eigenvalues.len() != weights.len() || eigenvalues.is_empty() {
            return Err(Error::Invalid("eigenvalues and weights must be non-empty and of equal length".into()));
        }
        let mut levels = Vec::with_capacity(eigenvalues.len());
        for (i, (&l, &w)) in eigenvalues.iter().zip(weights).enumerate() {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Invalid(format!("eigenvalue {i} = {l} must be finite and non-negative")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Invalid(format!("weight {i} = {w} must be positive")));
            }
            if i > 0 && l < eigenvalues[i - 1] {
                return Err(Error::Invalid(format!("eigenvalues must be nondecreasing (index {i})")));
            }
            levels.push(Level { lambda: l, weight: w });
        }
        Ok(SpectralModel {
            name: name.to_string(),
            spatial_dim: d,
            generator: Generator::Explicit,
            truncation: levels.len(),
            complete_up_to: levels.last().unwrap().lambda,
            levels,
            shell_counts: Vec::new(),
        })
    }

    /// Riemannian product: eigenvalues add, weights multiply. Only levels
    /// below the smaller completeness bound are kept.
    pub fn product(a: &SpectralModel, b: &SpectralModel) -> Result<Self> {
        let bound = a.complete_up_to.min(b.complete_up_to);
        let mut levels: Vec<Level> = Vec::new();
        for x in &a.levels {
            if x.lambda > bound {
                break;
            }
            for y in &b.levels {
                let l = x.lambda + y.lambda;
                if l > bound {
                    break;
                }
                levels.push(Level {
                    lambda: l,
                    weight: x.weight * y.weight,
                });
            }
        }
        levels.sort_by(|p, q| p.lambda.total_cmp(&q.lambda).then(p.weight.total_cmp(&q.weight)));
        Ok(SpectralModel {
            name: format!("{}x{}", a.name, b.name),
            spatial_dim: a.spatial_dim + b.spatial_dim,
            generator: Generator::Product {
                factors: vec![a.clone(), b.clone()],
            },
            truncation: levels.len(),
            complete_up_to: bound,
            levels,
            shell_counts: Vec::new(),
        })
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        let d = file.spatial_dim;
        let mut m = match file.generator.as_str() {
            "torus" => {
                let side = file.params.side.ok_or_else(|| Error::Invalid("torus model needs params.side".into()))?;
                SpectralModel::torus(d, side, file.k.unwrap_or(DEFAULT_TORUS_SHELLS))?
            }
            "sphere" => {
                let r = file.params.radius.ok_or_else(|| Error::Invalid("sphere model needs params.radius".into()))?;
                SpectralModel::sphere(d, r, file.k.unwrap_or(DEFAULT_SPHERE_LEVELS))?
            }
            "explicit" => {
                let (Some(l), Some(w)) = (&file.params.eigenvalues, &file.params.weights) else {
                    return Err(Error::Invalid("explicit model needs params.eigenvalues and params.weights".into()));
                };
                let k = file.k.unwrap_or(l.len()).min(l.len());
                SpectralModel::explicit(&file.name, d, &l[..k], &w[..k])?
            }
            other => {
                return Err(Error::Invalid(format!("unknown generator '{other}' (expected torus, sphere or explicit)")));
            }
        };
        m.name = file.name.clone();
        Ok(m)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        SpectralModel::from_file(&file)
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Spacetime dimension n = dim Y + 1.
    pub fn spacetime_dim(&self) -> usize {
        self.spatial_dim + 1
    }

    /// Scalar curvature of (Y, h) where known.
    pub fn spatial_scalar(&self) -> Option<f64> {
        match &self.generator {
            Generator::Torus { .. } => Some(0.0),
            Generator::Sphere { radius } => {
                let d = self.spatial_dim as f64;
                Some(d * (d - 1.0) / (radius * radius))
            }
            Generator::Explicit => None,
            Generator::Product { factors } => factors.iter().map(|f| f.spatial_scalar()).sum(),
        }
    }

    /// Length scale for heat-trace fits.
    fn length_scale(&self) -> f64 {
        match &self.generator {
            Generator::Torus { side } => side / (2.0 * PI),
            Generator::Sphere { radius } => *radius,
            Generator::Explicit => 1.0,
            Generator::Product { factors } => factors.iter().map(|f| f.length_scale()).fold(f64::INFINITY, f64::min),
        }
    }

    /// The same model with every eigenvalue up to `lambda` included.
    pub fn complete_to(&self, lambda: f64) -> Result<SpectralModel> {
        if lambda <= self.complete_up_to {
            return Ok(self.clone());
        }
        let mut m = match &self.generator {
            Generator::Torus { side } => {
                let kappa2 = (2.0 * PI / side).powi(2);
                SpectralModel::torus(self.spatial_dim, *side, (lambda / kappa2).ceil() as usize + 2)?
            }
            Generator::Sphere { radius } => {
                let d = self.spatial_dim as f64;
                let k = (-(d - 1.0) / 2.0 + ((d - 1.0).powi(2) / 4.0 + lambda * radius * radius).sqrt()).ceil();
                SpectralModel::sphere(self.spatial_dim, *radius, k as usize + 2)?
            }
            Generator::Product { factors } => {
                let a = factors[0].complete_to(lambda)?;
                let b = factors[1].complete_to(lambda)?;
                SpectralModel::product(&a, &b)?
            }
            Generator::Explicit => {
                return Err(Error::Truncation {
                    estimate: lambda,
                    tol: self.complete_up_to,
                });
            }
        };
        m.name = self.name.clone();
        Ok(m)
    }

    /// Leading Weyl constant (4π)^{−d/2}/Γ(d/2 + 1).
    pub fn weyl_constant(&self) -> f64 {
        let d = self.spatial_dim as f64;
        (4.0 * PI).powf(-d / 2.0) / gamma(c(d / 2.0 + 1.0)).re
    }

    /// Σ_{λ_j ≤ L} w_j relative to the Weyl prediction, minus one.
    pub fn weyl_defect(&self, lambda: f64) -> Result<f64> {
        if lambda > self.complete_up_to {
            return Err(Error::Truncation {
                estimate: lambda,
                tol: self.complete_up_to,
            });
        }
        let sum: f64 = self.levels.iter().take_while(|l| l.lambda <= lambda).map(|l| l.weight).sum();
        Ok(sum / (self.weyl_constant() * lambda.powf(self.spatial_dim as f64 / 2.0)) - 1.0)
    }

    fn next_lambda(&self) -> f64 {
        match &self.generator {
            Generator::Torus { side } => (2.0 * PI / side).powi(2) * self.truncation as f64,
            Generator::Sphere { radius } => {
                let k = self.truncation;
                (k * (k + self.spatial_dim - 1)) as f64 / (radius * radius)
            }
            _ => self.complete_up_to,
        }
    }
}

/// Mode sum with truncation data.
#[derive(Clone, Debug, Serialize)]
pub struct ModeSumResult {
    pub value: Complex64,
    pub truncation_error_estimate: f64,
    #[serde(rename = "K_used")]
    pub k_used: usize,
    pub counterterm_breakdown: Vec<Counterterm>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterterm {
    pub label: String,
    pub value: Complex64,
}

/// Deterministic pairwise sum.
fn pairwise(v: &[Complex64]) -> Complex64 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise(a) + pairwise(b)
}

// ---------------------------------------------------------------------------
// τ-integral

/// i√π Γ(α−½)/Γ(α), the prefactor of the closed form of the τ-integral.
fn tau_prefactor(alpha: Complex64) -> Complex64 {
    I * PI.sqrt() * gamma(alpha - 0.5) * rgamma(alpha)
}

/// ∫_R (λ − τ² − iε)^{−α} dτ by adaptive quadrature; needs Re α > ½.
///
/// The line is rotated to τ = e^{iπ/4}s. On the rotated line the base
/// λ − iε − is² keeps a negative imaginary part, so no branch cut is
/// crossed; the zeros ±√(λ − iε) lie in the second and fourth quadrants,
/// which the rotation does not sweep, and the arcs at infinity vanish for
/// Re α > ½. The rotated integrand is smooth and free of the cancellation
/// the real-line integrand shows near τ = √λ.
pub fn tau_integral_quadrature(alpha: Complex64, lambda: f64, epsilon: f64) -> Result<CValue> {
    if alpha.re <= 0.5 {
        return Err(Error::Domain(format!("direct tau quadrature needs Re alpha > 1/2, got {alpha}")));
    }
    check_tau_args(lambda, epsilon)?;
    let f = |s: f64| BranchedPower::principal(Complex64::new(lambda, -epsilon - s * s), -alpha).value();
    let q = Quadrature::new(1e-300, 1e-12).with_max_intervals(8000);
    let scale = (lambda + epsilon).sqrt();
    let pts: Vec<f64> = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|k| k * scale).collect();
    let end = *pts.last().unwrap();
    let head = q.integrate_breaks(f, &pts);
    // s = end·x^{−1/p} with p = 2Re α − 1 maps the algebraic tail to a
    // bounded, regular integrand on (0, 1]
    let p = 2.0 * alpha.re - 1.0;
    let tail = q.integrate(
        |x: f64| {
            if x <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let s = end * x.powf(-1.0 / p);
            f(s) * s / (p * x)
        },
        0.0,
        1.0,
    );
    let total = head.value + tail.value;
    let tol = 1e-10 * total.norm();
    if head.error + tail.error > tol {
        return Err(Error::Quadrature {
            error: head.error + tail.error,
            tol,
        });
    }
    let phase = Complex64::from_polar(2.0, PI / 4.0);
    Ok(CValue::new(phase * total, 2.0 * (head.error + tail.error)))
}

/// The closed-form hypothesis e^{iπα} √π Γ(α−½)/Γ(α) (iε − λ)^{½−α} with
/// arg(iε − λ) ∈ (0, π). Not validated; see [`tau_integral`].
pub fn tau_integral_hypothesis(alpha: Complex64, lambda: f64, epsilon: f64) -> Complex64 {
    let base = Complex64::new(-lambda, epsilon);
    let p = BranchedPower::with_branch(base, 0.5 - alpha, 0.0).value();
    (I * PI * alpha).exp() * PI.sqrt() * gamma(alpha - 0.5) * rgamma(alpha) * p
}

fn check_tau_args(lambda: f64, epsilon: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Invalid(format!("lambda = {lambda} must be finite and non-negative")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Invalid(format!("epsilon = {epsilon} must be positive")));
    }
    Ok(())
}

/// Relative tolerance of the τ closed-form validation.
pub const TAU_GATE_TOL: f64 = 1e-8;

static TAU_GATE: Lazy<std::result::Result<(), String>> = Lazy::new(|| {
    let cases = [
        (c(2.5), 0.0, 0.1),
        (c(1.0), 1.0, 0.1),
        (Complex64::new(1.7, 0.3), 3.0, 0.2),
        (Complex64::new(3.2, -0.5), 0.5, 0.05),
        (Complex64::new(0.9, 1.1), 40.0, 0.3),
        (Complex64::new(0.6, -1.4), 46.0, 0.2),
        (Complex64::new(3.9, -1.4), 8.4, 0.02),
    ];
    for (alpha, lambda, eps) in cases {
        let q = tau_integral_quadrature(alpha, lambda, eps).map_err(|e| e.to_string())?;
        let h = tau_integral_hypothesis(alpha, lambda, eps);
        let gap = (q.value - h).norm() / h.norm();
        if gap > TAU_GATE_TOL {
            return Err(format!("alpha = {alpha}, lambda = {lambda}, eps = {eps}: relative gap {gap:e}"));
        }
    }
    Ok(())
});

/// Outcome of the τ closed-form validation.
pub fn tau_closed_form_status() -> std::result::Result<(), String> {
    TAU_GATE.clone()
}

/// ∫_R (λ − τ² − iε)^{−α} dτ, spectral-calculus branch. Uses the validated
/// closed form i√πΓ(α−½)/Γ(α)(λ − iε)^{½−α}, which continues the integral to
/// all α ≠ ½, −½, …; falls back to quadrature if the validation failed.
pub fn tau_integral(alpha: Complex64, lambda: f64, epsilon: f64) -> Result<Complex64> {
    check_tau_args(lambda, epsilon)?;
    match &*TAU_GATE {
        Ok(()) => Ok(tau_prefactor(alpha) * BranchedPower::shifted_real(lambda, epsilon, 0.5 - alpha).value()),
        Err(msg) => {
            log::warn!("tau closed form rejected ({msg}); using quadrature");
            if alpha.re > 0.5 {
                Ok(tau_integral_quadrature(alpha, lambda, epsilon)?.value)
            } else {
                Err(Error::ClosedFormRejected(format!("tau integral: {msg}")))
            }
        }
    }
}

fn require_tau_gate() -> Result<()> {
    match &*TAU_GATE {
        Ok(()) => Ok(()),
        Err(msg) => Err(Error::ClosedFormRejected(format!("tau integral: {msg}"))),
    }
}

// ---------------------------------------------------------------------------
// mode sums of the zeta density

/// (2π)^{−1} Σ_j w_j τ(α, λ_j, ε) over the model's levels, plus the Weyl-law
/// tail beyond the truncation (reported as a counterterm and used as the
/// error estimate). Needs Re α > n/2.
pub fn mode_zeta(model: &SpectralModel, alpha: Complex64, epsilon: f64, tol: Option<f64>) -> Result<ModeSumResult> {
    let n = model.spacetime_dim() as f64;
    if alpha.re <= n / 2.0 {
        return Err(Error::Domain(format!(
            "the raw mode sum needs Re alpha > n/2 = {}; use continue_mode_zeta",
            n / 2.0
        )));
    }
    check_tau_args(0.0, epsilon)?;
    require_tau_gate()?;
    let pref = tau_prefactor(alpha) / (2.0 * PI);
    let terms: Vec<Complex64> = model
        .levels
        .par_iter()
        .map(|l| l.weight * BranchedPower::shifted_real(l.lambda, epsilon, 0.5 - alpha).value())
        .collect();
    let head = pref * pairwise(&terms);
    let cut = 0.5 * (model.complete_up_to + model.next_lambda());
    let d = model.spatial_dim as f64;
    let wc = model.weyl_constant() * d / 2.0;
    let q = Quadrature::new(1e-300, 1e-10).with_max_intervals(2000);
    let tail = q.integrate_to_infinity(
        |x: f64| {
            let l = cut * (1.0 + x);
            cut * wc * l.powf(d / 2.0 - 1.0) * BranchedPower::shifted_real(l, epsilon, 0.5 - alpha).value()
        },
        0.0,
    );
    let tail_value = pref * tail.value;
    let estimate = tail_value.norm() + pref.norm() * tail.error + 1e-15 * head.norm();
    if let Some(t) = tol {
        if estimate > t {
            return Err(Error::Truncation { estimate, tol: t });
        }
    }
    Ok(ModeSumResult {
        value: head + tail_value,
        truncation_error_estimate: estimate,
        k_used: model.levels.len(),
        counterterm_breakdown: vec![Counterterm {
            label: format!("weyl tail above lambda = {cut}"),
            value: tail_value,
        }],
    })
}

/// Hyperparameters of the continuation.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationOptions {
    /// Levels (sphere ν, torus shells N) summed exactly.
    pub head: Option<usize>,
    /// Number of binomial counterterms M; by default terms are added until
    /// they drop below rounding.
    pub terms: Option<usize>,
}

const MAX_COUNTERTERMS: usize = 400;

/// Meromorphic continuation of the mode sum to all α off the pole lattice.
///
/// The sum splits into a head summed exactly and a tail where the binomial
/// expansion of the weight-times-power in the small parameter iε/λ turns each
/// counterterm into a zeta value: Hurwitz ζ for the sphere S³ (levels
/// ν² − 1 with ν = k+1, weight ν²) and the Epstein zeta of Z^d for the flat
/// torus. Every counterterm is meromorphic, so the result is too.
pub fn continue_mode_zeta(model: &SpectralModel, alpha: Complex64, epsilon: f64) -> Result<ModeSumResult> {
    continue_mode_zeta_with(model, alpha, epsilon, &ContinuationOptions::default())
}

pub fn continue_mode_zeta_with(
    model: &SpectralModel,
    alpha: Complex64,
    epsilon: f64,
    opts: &ContinuationOptions,
) -> Result<ModeSumResult> {
    check_tau_args(0.0, epsilon)?;
    require_tau_gate()?;
    match &*CONTINUATION_GATE {
        Ok(()) => {}
        Err(msg) => return Err(Error::ClosedFormRejected(format!("continuation: {msg}"))),
    }
    continue_unchecked(model, alpha, epsilon, opts)
}

fn continue_unchecked(model: &SpectralModel, alpha: Complex64, epsilon: f64, opts: &ContinuationOptions) -> Result<ModeSumResult> {
    let half = alpha.re - 0.5;
    if alpha.im == 0.0 && half <= 0.0 && half == half.round() {
        return Err(Error::Pole { alpha });
    }
    match &model.generator {
        Generator::Sphere { radius } if model.spatial_dim == 3 => continue_sphere3(*radius, alpha, epsilon, opts),
        Generator::Torus { side } => continue_torus(model.spatial_dim, *side, alpha, epsilon, opts),
        _ => Err(Error::Unsupported(format!(
            "continuation is implemented for the round S^3 and flat tori, not for '{}'",
            model.name
        ))),
    }
}

struct Series {
    total: Complex64,
    terms: Vec<Complex64>,
    remainder: f64,
}

/// Σ_j term(j), stopping when two consecutive terms drop below rounding or
/// after `fixed` terms.
fn binomial_series<F: FnMut(usize, Complex64) -> Complex64>(s: Complex64, fixed: Option<usize>, mut term: F) -> Result<Series> {
    let mut binom = c(1.0);
    let mut total = c(0.0);
    let mut terms = Vec::new();
    let mut small = 0;
    let limit = fixed.unwrap_or(MAX_COUNTERTERMS);
    for j in 0..limit {
        let t = if binom == c(0.0) { c(0.0) } else { term(j, binom) };
        total += t;
        terms.push(t);
        if fixed.is_none() {
            if t.norm() <= 1e-17 * total.norm() {
                small += 1;
                if small >= 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        binom = binom * (s - j as f64) / (j as f64 + 1.0);
    }
    if fixed.is_none() && small < 2 {
        return Err(Error::Truncation {
            estimate: terms.last().map(|t| t.norm()).unwrap_or(0.0),
            tol: 1e-17 * total.norm(),
        });
    }
    // the remainder of a binomial series with ratio q ≤ 1/16 is below
    // twice the last term
    let remainder = 2.0 * terms.last().map(|t| t.norm()).unwrap_or(0.0);
    Ok(Series { total, terms, remainder })
}

fn continue_sphere3(radius: f64, alpha: Complex64, epsilon: f64, opts: &ContinuationOptions) -> Result<ModeSumResult> {
    let s = 0.5 - alpha;
    let cc = Complex64::new(1.0, epsilon * radius * radius);
    // |c|/(H+1)² ≤ 1/16 keeps the binomial ratio small
    let min_head = (4.0 * cc.norm().sqrt()).ceil() as usize;
    let head_n = opts.head.unwrap_or(min_head.max(8));
    if ((head_n + 1) as f64).powi(2) <= cc.norm() {
        return Err(Error::Invalid(format!("head {head_n} too short for |c| = {}", cc.norm())));
    }
    let head_terms: Vec<Complex64> = (1..=head_n)
        .map(|nu| {
            let nu2 = (nu * nu) as f64;
            nu2 * BranchedPower::principal(nu2 - cc, s).value()
        })
        .collect();
    let head = pairwise(&head_terms);
    let a = (head_n + 1) as f64;
    let series = binomial_series(s, opts.terms, |j, binom| {
        binom * (-cc).powi(j as i32) * hurwitz_zeta(2.0 * j as f64 - 2.0 * s - 2.0, a)
    })?;
    if opts.terms.is_some() {
        check_fixed_remainder(&series, head + series.total)?;
    }
    let pref = tau_prefactor(alpha) / (2.0 * PI) * c(radius).powc(-2.0 * s) / (2.0 * PI * PI * radius.powi(3));
    let value = pref * (head + series.total);
    Ok(ModeSumResult {
        value,
        truncation_error_estimate: pref.norm() * series.remainder + 1e-14 * value.norm(),
        k_used: head_n,
        counterterm_breakdown: counterterms(&series, pref, "hurwitz"),
    })
}

fn check_fixed_remainder(series: &Series, total: Complex64) -> Result<()> {
    let tol = 1e-10 * total.norm();
    if series.remainder > tol {
        return Err(Error::Truncation {
            estimate: series.remainder,
            tol,
        });
    }
    Ok(())
}

fn counterterms(series: &Series, pref: Complex64, label: &str) -> Vec<Counterterm> {
    series
        .terms
        .iter()
        .enumerate()
        .map(|(j, t)| Counterterm {
            label: format!("{label} j={j}"),
            value: pref * t,
        })
        .collect()
}

/// θ_3(t) − 1 = 2 Σ_{m≥1} e^{−πm²t}, without the cancellation of forming
/// θ_3 first.
fn theta3_minus_one(t: f64) -> f64 {
    let mut s = 0.0;
    let mut m = 1.0f64;
    loop {
        let e = (-PI * m * m * t).exp();
        s += 2.0 * e;
        if e < 1e-18 * s {
            return s;
        }
        m += 1.0;
    }
}

/// Σ_{N > H} r_d(N) N^{−σ}: the Epstein zeta of Z^d minus its first H
/// shells, meromorphic with a single pole at σ = d/2.
pub fn epstein_tail(d: usize, sigma: Complex64, head: usize) -> Result<Complex64> {
    let dh = d as f64 / 2.0;
    if sigma.re >= dh + 12.0 {
        // direct sum converges fast; no cancellation against the head
        let count = ((head + 1) as f64 * 2f64.powf(48.0 / (sigma.re - dh))).ceil() as usize + 2;
        let count = count.min(head + 200_000);
        let r = lattice_counts(d, count);
        let terms: Vec<Complex64> = (head + 1..count)
            .filter(|&n| r[n] > 0.0)
            .map(|n| r[n] * (-sigma * (n as f64).ln()).exp())
            .collect();
        return Ok(pairwise(&terms));
    }
    let z = epstein(d, sigma)?;
    let r = lattice_counts(d, head + 1);
    let partial: Vec<Complex64> = (1..=head)
        .filter(|&n| r[n] > 0.0)
        .map(|n| r[n] * (-sigma * (n as f64).ln()).exp())
        .collect();
    Ok(z - pairwise(&partial))
}

/// Z_d(σ) = Σ_{k ∈ Z^d∖0} |k|^{−2σ} through the theta-function split
/// π^{−σ}Γ(σ)Z(σ) = −1/σ − 1/(d/2−σ) + ∫_1^∞ (θ(t)^d − 1)(t^{σ−1} + t^{d/2−σ−1}) dt.
pub fn epstein(d: usize, sigma: Complex64) -> Result<Complex64> {
    let dh = d as f64 / 2.0;
    if (sigma - dh).norm() < 1e-14 {
        return Err(Error::Pole { alpha: sigma });
    }
    let q = Quadrature::new(1e-16, 1e-13).with_max_intervals(2000);
    let f = |t: f64| {
        // (1 + q)^d − 1 expanded so that the tail keeps full relative accuracy
        let q = theta3_minus_one(t);
        let mut th = 0.0;
        let mut binom = 1.0;
        for k in 1..=d {
            binom *= (d - k + 1) as f64 / k as f64;
            th += binom * q.powi(k as i32);
        }
        let lt = t.ln();
        th * (((sigma - 1.0) * lt).exp() + ((dh - sigma - 1.0) * lt).exp())
    };
    // θ^d − 1 ≈ 2d e^{−πt}; beyond t = 60 + 2|σ| the integrand is negligible
    let end = 60.0 + 2.0 * sigma.norm();
    let est = q.integrate_breaks(f, &[1.0, 5.0, 20.0, end]);
    let tol = 1e-11 * (1.0 + est.value.norm());
    if est.error > tol {
        return Err(Error::Quadrature { error: est.error, tol });
    }
    let bracket = -rgamma(sigma + 1.0) + rgamma(sigma) * (est.value - 1.0 / (dh - sigma));
    Ok(c(PI).powc(sigma) * bracket)
}

fn continue_torus(d: usize, side: f64, alpha: Complex64, epsilon: f64, opts: &ContinuationOptions) -> Result<ModeSumResult> {
    let s = 0.5 - alpha;
    let kappa2 = (2.0 * PI / side).powi(2);
    let ratio = epsilon / kappa2;
    let min_head = (16.0 * ratio).ceil() as usize;
    let head_n = opts.head.unwrap_or(min_head.max(8));
    if (head_n + 1) as f64 <= ratio {
        return Err(Error::Invalid(format!("head {head_n} too short for eps/kappa^2 = {ratio}")));
    }
    let r = lattice_counts(d, head_n + 1);
    let head_terms: Vec<Complex64> = (0..=head_n)
        .filter(|&n| r[n] > 0.0)
        .map(|n| r[n] * BranchedPower::shifted_real(kappa2 * n as f64, epsilon, s).value())
        .collect();
    let head = pairwise(&head_terms);
    let mie = Complex64::new(0.0, -epsilon);
    let k2s = c(kappa2).powc(s);
    let mut failure = None;
    let series = binomial_series(s, opts.terms, |j, binom| {
        match epstein_tail(d, j as f64 - s, head_n) {
            Ok(z) => binom * mie.powi(j as i32) * k2s * kappa2.powi(-(j as i32)) * z,
            Err(e) => {
                failure.get_or_insert(e);
                c(0.0)
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if opts.terms.is_some() {
        check_fixed_remainder(&series, head + series.total)?;
    }
    let pref = tau_prefactor(alpha) / (2.0 * PI) / side.powi(d as i32);
    let value = pref * (head + series.total);
    Ok(ModeSumResult {
        value,
        truncation_error_estimate: pref.norm() * series.remainder + 1e-13 * value.norm(),
        k_used: head_n,
        counterterm_breakdown: counterterms(&series, pref, "epstein"),
    })
}

/// Relative tolerance of the overlap check gating the continuation.
pub const OVERLAP_TOL: f64 = 1e-6;

static CONTINUATION_GATE: Lazy<std::result::Result<(), String>> = Lazy::new(|| {
    let models = [
        SpectralModel::sphere(3, 1.0, DEFAULT_SPHERE_LEVELS),
        SpectralModel::torus(3, 2.0 * PI, 20_000),
    ];
    for m in models {
        let m = m.map_err(|e| e.to_string())?;
        for alpha in [c(3.5), Complex64::new(3.2, 0.7)] {
            let raw = mode_zeta(&m, alpha, 0.1, None).map_err(|e| e.to_string())?;
            let cont = continue_unchecked(&m, alpha, 0.1, &ContinuationOptions::default()).map_err(|e| e.to_string())?;
            let gap = (raw.value - cont.value).norm();
            let allowed = OVERLAP_TOL * raw.value.norm() + raw.truncation_error_estimate;
            if gap > allowed {
                return Err(format!("{} at alpha = {alpha}: gap {gap:e} > {allowed:e}", m.name));
            }
        }
    }
    Ok(())
});

/// Outcome of the overlap validation of the continuation formulas.
pub fn continuation_status() -> std::result::Result<(), String> {
    CONTINUATION_GATE.clone()
}

// ---------------------------------------------------------------------------
// spectral action

/// Trapezoid weights for g(λ) = ∫ f̂(t) t^{−1/2} e^{i(λ + iσε)/(Λ²t)} dt.
struct ActionKernel {
    t: Vec<f64>,
    /// h f̂(t) t^{−1/2} e^{−σε/(Λ²t)}.
    w: Vec<f64>,
    inv_l2: f64,
}

impl ActionKernel {
    fn new(f: &TestFunction, lambda: f64, epsilon: f64, sign: f64, log2_nodes: u32) -> Result<Self> {
        let count = (1usize << log2_nodes) - 1;
        let nodes = f.trapezoid(count)?;
        let inv_l2 = 1.0 / (lambda * lambda);
        let (t, w) = nodes
            .iter()
            .map(|&(t, hf)| (t, hf / t.sqrt() * (-sign * epsilon * inv_l2 / t).exp()))
            .unzip();
        Ok(ActionKernel { t, w, inv_l2 })
    }

    /// (fine, coarse) values of g at λ; the coarse rule uses every second
    /// node with doubled weights.
    fn g(&self, lam: f64) -> (Complex64, Complex64) {
        let mut fine = c(0.0);
        let mut coarse = c(0.0);
        for (i, (&t, &w)) in self.t.iter().zip(&self.w).enumerate() {
            let v = w * Complex64::from_polar(1.0, lam * self.inv_l2 / t);
            fine += v;
            if i % 2 == 1 {
                coarse += 2.0 * v;
            }
        }
        (fine, coarse)
    }
}

fn nodes_for(f: &TestFunction, omega: f64) -> u32 {
    let (a, b) = f.support();
    let cycles = omega * (1.0 / a - 1.0 / b) / (2.0 * PI);
    let want = 24.0 * cycles + 512.0;
    (want.log2().ceil() as u32).clamp(9, 20)
}

/// ω beyond which |g(ω)| stays below 1e−13 of its maximum.
fn decay_cutoff(f: &TestFunction) -> Result<f64> {
    let (a, b) = f.support();
    let step = 0.25 / (1.0 / a - 1.0 / b);
    let window = (16.0 / (1.0 / a - 1.0 / b)).max(8.0 * step);
    let mut omega_max = 64.0 * step;
    loop {
        let k = ActionKernel::new(f, 1.0, 0.0, 1.0, nodes_for(f, omega_max))?;
        let samples: Vec<(f64, f64)> = (0..=((omega_max / step) as usize))
            .map(|i| {
                let om = i as f64 * step;
                (om, k.g(om).0.norm())
            })
            .collect();
        let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::Invalid("f_hat vanishes on its support".into()));
        }
        // first ω after which the whole remaining sample stays small
        let mut cut = None;
        for (i, s) in samples.iter().enumerate().rev() {
            if s.1 > 1e-13 * peak {
                if samples[i + 1..].len() as f64 * step >= window {
                    cut = Some(samples[i + 1].0);
                }
                break;
            }
        }
        if let Some(c) = cut {
            return Ok(c.max(step));
        }
        omega_max *= 2.0;
        if omega_max > 1e5 {
            return Err(Error::Domain("f_hat profile does not decay; is it smooth on its support?".into()));
        }
    }
}

/// f((□ ± iε)/Λ²)(x, x) = (2π)^{−1} Σ_j w_j ∫ f((λ_j − τ² ± iε)/Λ²) dτ with
/// f(μ) = ∫ f̂(t) e^{iμ/t} dt/t. The τ-integral is Gaussian, leaving
/// (2π)^{−1} √π Λ e^{−iπ/4} Σ_j w_j ∫ f̂(t) t^{−1/2} e^{i(λ_j ± iε)/(Λ²t)} dt.
/// `sign` is +1 or −1.
pub fn mode_action(model: &SpectralModel, f: &TestFunction, lambda: f64, epsilon: f64, sign: f64) -> Result<ModeSumResult> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Invalid(format!("Lambda = {lambda} must be positive")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Invalid(format!("epsilon = {epsilon} must be non-negative")));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::Invalid(format!("sign must be +1 or -1, got {sign}")));
    }
    let omega_cut = decay_cutoff(f)?;
    let lam_cut = omega_cut * lambda * lambda;
    let model = model.complete_to(lam_cut)?;
    let kernel = ActionKernel::new(f, lambda, epsilon, sign, nodes_for(f, omega_cut))?;
    let (fine, coarse, used) = match (&model.generator, model.shell_counts.is_empty()) {
        (Generator::Torus { side }, false) => torus_action(&model, &kernel, (2.0 * PI / side).powi(2), lam_cut),
        _ => {
            let lv: Vec<&Level> = model.levels.iter().take_while(|l| l.lambda <= lam_cut).collect();
            let pairs: Vec<(Complex64, Complex64)> = lv
                .par_iter()
                .map(|l| {
                    let (a, b) = kernel.g(l.lambda);
                    (l.weight * a, l.weight * b)
                })
                .collect();
            let f: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
            let g: Vec<Complex64> = pairs.iter().map(|p| p.1).collect();
            (pairwise(&f), pairwise(&g), lv.len())
        }
    };
    let pref = PI.sqrt() * lambda * Complex64::from_polar(1.0, -PI / 4.0) / (2.0 * PI);
    let value = pref * fine;
    let estimate = pref.norm() * (fine - coarse).norm() + 1e-13 * value.norm();
    Ok(ModeSumResult {
        value,
        truncation_error_estimate: estimate,
        k_used: used,
        counterterm_breakdown: Vec::new(),
    })
}

/// Torus shells advance every node phase by e^{iκ²/(Λ²t)} per shell; the
/// phases are recomputed exactly every 256 shells.
fn torus_action(model: &SpectralModel, k: &ActionKernel, kappa2: f64, lam_cut: f64) -> (Complex64, Complex64, usize) {
    let shells = ((lam_cut / kappa2).floor() as usize + 1).min(model.shell_counts.len());
    let vol_w = model.levels[0].weight; // r_d(0) = 1
    let step: Vec<Complex64> = k.t.iter().map(|&t| Complex64::from_polar(1.0, kappa2 * k.inv_l2 / t)).collect();
    let mut phase: Vec<Complex64> = vec![c(1.0); k.t.len()];
    let mut fine_terms = Vec::with_capacity(shells);
    let mut coarse_terms = Vec::with_capacity(shells);
    let mut used = 0;
    for n in 0..shells {
        if n % 256 == 0 && n > 0 {
            for (p, &t) in phase.iter_mut().zip(&k.t) {
                *p = Complex64::from_polar(1.0, kappa2 * n as f64 * k.inv_l2 / t);
            }
        }
        let r = model.shell_counts[n];
        if r > 0.0 {
            let mut fine = c(0.0);
            let mut coarse = c(0.0);
            for (i, (p, &w)) in phase.iter().zip(&k.w).enumerate() {
                let v = w * p;
                fine += v;
                if i % 2 == 1 {
                    coarse += 2.0 * v;
                }
            }
            fine_terms.push(r * vol_w * fine);
            coarse_terms.push(r * vol_w * coarse);
            used += 1;
        }
        for (p, s) in phase.iter_mut().zip(&step) {
            *p *= s;
        }
    }
    (pairwise(&fine_terms), pairwise(&coarse_terms), used)
}

// ---------------------------------------------------------------------------
// Riemannian cross-check

/// Residue of the Riemannian zeta density from a heat-trace fit.
#[derive(Clone, Debug, Serialize)]
pub struct RiemannianResidue {
    pub n: usize,
    pub k: usize,
    pub alpha0: f64,
    pub residue: CValue,
    /// Fitted heat coefficients a_j of (4πt)^{n/2} K(t) = Σ a_j t^j.
    pub heat_coefficients: Vec<CValue>,
    pub t_range: [f64; 2],
    pub condition: f64,
}

/// Heat-fit grid and degree.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatFitOptions {
    /// Fit range as fractions of ℓ², with ℓ the model's length scale.
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub degree: usize,
}

impl Default for HeatFitOptions {
    fn default() -> Self {
        HeatFitOptions {
            t_min: 0.01,
            t_max: 0.1,
            points: 32,
            degree: 6,
        }
    }
}

/// Largest condition number accepted for the heat fit.
pub const MAX_HEAT_CONDITION: f64 = 1e12;

/// Residue of (−Δ_g)^{−α}(x, x) on a closed n-manifold at α₀ = n/2 − k.
///
/// ζ(α) = Γ(α)^{−1}∫ t^{α−1} K(t) dt with the heat-trace density
/// K(t) = Σ_j w_j e^{−tλ_j} ~ (4πt)^{−n/2} Σ_j a_j t^j, so the residue at
/// n/2 − k is a_k (4π)^{−n/2}/Γ(n/2 − k). The a_j come from a least-squares
/// polynomial fit of (4πt)^{n/2}K(t) at small t.
pub fn riemannian_residue(model: &SpectralModel, k: usize) -> Result<RiemannianResidue> {
    riemannian_residue_with(model, k, &HeatFitOptions::default())
}

pub fn riemannian_residue_with(model: &SpectralModel, k: usize, opts: &HeatFitOptions) -> Result<RiemannianResidue> {
    let n = model.spatial_dim;
    if 2 * k >= n {
        return Err(Error::Invalid(format!("k = {k} must satisfy n/2 − k > 0 (n = {n})")));
    }
    if opts.degree < k + 1 || opts.points < opts.degree + 3 || !(0.0 < opts.t_min && opts.t_min < opts.t_max) {
        return Err(Error::Invalid(format!("unusable heat-fit options {opts:?}")));
    }
    let l2 = model.length_scale().powi(2);
    let (t0, t1) = (opts.t_min * l2, opts.t_max * l2);
    // e^{−t λ} below 1e−17 at the smallest t
    let model = model.complete_to(40.0 / t0)?;
    let ts: Vec<f64> = (0..opts.points)
        .map(|i| t0 + (t1 - t0) * i as f64 / (opts.points - 1) as f64)
        .collect();
    let nh = n as f64 / 2.0;
    let ys: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let mut terms: Vec<f64> = model.levels.iter().map(|l| l.weight * (-t * l.lambda).exp()).collect();
            terms.reverse();
            (4.0 * PI * t).powf(nh) * terms.iter().sum::<f64>()
        })
        .collect();
    let fit = |deg: usize| -> Result<(Vec<f64>, f64)> {
        let a = DMatrix::from_fn(ts.len(), deg + 1, |i, j| (ts[i] / t1).powi(j as i32));
        let svd = a.svd(true, true);
        let cond = svd.singular_values.max() / svd.singular_values.min();
        if !(cond <= MAX_HEAT_CONDITION) {
            return Err(Error::IllConditioned { cond });
        }
        let x = svd
            .solve(&DVector::from_vec(ys.clone()), 0.0)
            .map_err(|e| Error::Domain(format!("least squares: {e}")))?;
        Ok((x.iter().enumerate().map(|(j, v)| v / t1.powi(j as i32)).collect(), cond))
    };
    let (a, cond) = fit(opts.degree)?;
    let (b, _) = fit(opts.degree + 1)?;
    let coeffs: Vec<CValue> = a.iter().zip(&b).map(|(x, y)| CValue::new(c(*x), (x - y).abs())).collect();
    let factor = (4.0 * PI).powf(-nh) * gamma(c(nh - k as f64)).re.recip();
    let residue = CValue::new(c(a[k] * factor), coeffs[k].error * factor.abs() + 1e-15 * (a[k] * factor).abs());
    Ok(RiemannianResidue {
        n,
        k,
        alpha0: nh - k as f64,
        residue,
        heat_coefficients: coeffs,
        t_range: [t0, t1],
        condition: cond,
    })
}
