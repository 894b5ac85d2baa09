//! The constant-coefficient model: power integrals over R^n in Euclidean and
//! Lorentzian signature, the diagonal values F_α(z, 0) of the model kernel
//! family, and scalar functional calculus on the contour γ_ε.
//!
//! The Lorentzian quadratic form is the symbol of the wave operator,
//! Q(ξ) = −ξ₀² + ξ₁² + … + ξ_{n−1}², and every power (Q − z)^{−α} with
//! Im z > 0 is taken on the principal branch (argument in (−π, 0)).
//!
//! Closed forms are hypotheses until checked: each one is unlocked at run
//! time by comparing it with direct quadrature on a fixed validation set
//! (see [`closed_form_status`]). Calls made while a closed form is rejected
//! fail with [`Error::ClosedFormRejected`].

use crate::error::{Error, Result};
use crate::quad::{extrapolate, Estimate, Extrapolated, Quadrature};
use crate::special::{gamma, rgamma};
use num_complex::Complex64;
use once_cell::sync::Lazy;
use serde::Serialize;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A power base^exponent on a chosen branch of the logarithm: the argument
/// of the base is taken in [arg_min, arg_min + 2π).
///
/// The default branch is the principal one, which for a base w − iε with w
/// real and ε > 0 places the argument in (−π, 0), so that (w − iε)^{−α} has
/// the boundary values |w|^{−α} for w > 0 and |w|^{−α}e^{iπα} for w < 0.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BranchedPower {
    pub base: Complex64,
    pub exponent: Complex64,
    pub arg_min: f64,
}

impl BranchedPower {
    /// Principal branch, argument in (−π, π].
    pub fn principal(base: Complex64, exponent: Complex64) -> Self {
        BranchedPower {
            base,
            exponent,
            arg_min: -PI,
        }
    }

    /// (w − iε)^exponent for real w.
    pub fn shifted_real(w: f64, epsilon: f64, exponent: Complex64) -> Self {
        BranchedPower::principal(Complex64::new(w, -epsilon), exponent)
    }

    /// Argument in [arg_min, arg_min + 2π).
    pub fn with_branch(base: Complex64, exponent: Complex64, arg_min: f64) -> Self {
        BranchedPower { base, exponent, arg_min }
    }

    /// The argument of the base on this branch.
    pub fn arg(&self) -> f64 {
        let mut a = self.base.arg();
        if self.arg_min == -PI {
            return a;
        }
        let two_pi = 2.0 * PI;
        while a < self.arg_min {
            a += two_pi;
        }
        while a >= self.arg_min + two_pi {
            a -= two_pi;
        }
        a
    }

    pub fn log(&self) -> Complex64 {
        Complex64::new(self.base.norm().ln(), self.arg())
    }

    pub fn value(&self) -> Complex64 {
        if self.base == Complex64::new(0.0, 0.0) {
            return if self.exponent.re > 0.0 {
                c(0.0)
            } else {
                Complex64::new(f64::INFINITY, 0.0)
            };
        }
        (self.exponent * self.log()).exp()
    }
}

fn principal_pow(base: Complex64, exponent: Complex64) -> Complex64 {
    BranchedPower::principal(base, exponent).value()
}

/// Area of the unit sphere S^{d−1} in R^d.
fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(c(d as f64 / 2.0)).re
}

fn nonpositive_integer(z: Complex64) -> Option<usize> {
    let r = z.re.round();
    if z.im.abs() < 1e-12 && (z.re - r).abs() < 1e-12 && r <= 0.0 {
        Some((-r) as usize)
    } else {
        None
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Invalid(format!("dimension n = {n} must be at least 2")));
    }
    Ok(())
}

fn check_z_euclid(z: Complex64) -> Result<()> {
    if z.im > 0.0 || (z.im == 0.0 && z.re < 0.0) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("z = {z} must satisfy Im z > 0 or be real negative")))
    }
}

fn quad() -> Quadrature {
    Quadrature::new(1e-14, 1e-11).with_max_intervals(4000)
}

/// ∫_{R^n} (‖ξ‖² − z)^{−α} d^nξ by radial quadrature; needs Re α > n/2.
pub fn euclid_power_integral_direct(n: usize, alpha: Complex64, z: Complex64) -> Result<Estimate<Complex64>> {
    check_dim(n)?;
    check_z_euclid(z)?;
    if alpha.re <= n as f64 / 2.0 {
        return Err(Error::Invalid(format!("direct quadrature needs Re α > n/2, got α = {alpha}")));
    }
    let area = sphere_area(n);
    let scale = z.norm().sqrt().max(1e-300);
    let f = |r: f64| area * r.powi(n as i32 - 1) * principal_pow(r * r - z, -alpha);
    let q = quad();
    let head = q.integrate_breaks(f, &[0.0, 0.5 * scale, scale, 2.0 * scale]);
    let tail = q.integrate_to_infinity(f, 2.0 * scale);
    let est = Estimate {
        value: head.value + tail.value,
        error: head.error + tail.error,
        intervals: head.intervals + tail.intervals,
        converged: head.converged && tail.converged,
    };
    est.require(1e-11)
}

/// Closed form π^{n/2} Γ(α−n/2)/Γ(α) (−z)^{n/2−α}, without the gate.
fn euclid_closed(n: usize, alpha: Complex64, z: Complex64) -> Result<Complex64> {
    let h = n as f64 / 2.0;
    if nonpositive_integer(alpha - h).is_some() {
        return Err(Error::Pole { alpha });
    }
    Ok(PI.powf(h) * gamma(alpha - h) * rgamma(alpha) * principal_pow(-z, h - alpha))
}

/// ∫_{R^n} (‖ξ‖² − z)^{−α} d^nξ continued to all α off the poles
/// α ∈ {n/2, n/2 − 1, …}.
pub fn euclid_power_integral(n: usize, alpha: Complex64, z: Complex64) -> Result<Complex64> {
    check_dim(n)?;
    check_z_euclid(z)?;
    gate(&EUCLID_GATE, "euclidean power integral")?;
    euclid_closed(n, alpha, z)
}

/// Res_{α=k} of the Euclidean power integral: z^{n/2−k} π^{n/2}/((n/2−k)! Γ(k)).
pub fn euclid_residue(n: usize, k: usize, z: Complex64) -> Result<Complex64> {
    check_dim(n)?;
    if !n.is_multiple_of(2) || k == 0 || 2 * k > n {
        return Err(Error::Invalid(format!("α = {k} is not a pole for n = {n}")));
    }
    let m = n / 2 - k;
    let fact: f64 = (1..=m).map(|i| i as f64).product();
    Ok(z.powi(m as i32) * PI.powf(n as f64 / 2.0) / (fact * gamma(c(k as f64)).re))
}

fn check_z_lorentz(z: Complex64) -> Result<()> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("z = {z} must lie in the upper half-plane")))
    }
}

/// Inner time integral ∫_R e^{−δξ₀²}(r² − ξ₀² − z)^{−α} dξ₀.
///
/// On the real axis the integrand has a peak of height |z|^{−Re α} at
/// ξ₀ ≈ ±r whose oscillation cancels to a value of size r^{1−2Re α}, which
/// limits the attainable accuracy at large r; the regulator suppresses that
/// range. Without a regulator the half-line is rotated to ξ₀ = e^{iπ/4}s,
/// which keeps r² − ξ₀² − z in the lower half-plane (no branch crossing, no
/// zero swept) and removes the peak altogether.
fn lorentz_inner(r: f64, alpha: Complex64, z: Complex64, delta: f64, q: &Quadrature) -> Estimate<Complex64> {
    if delta == 0.0 {
        let rot = Complex64::from_polar(1.0, PI / 4.0);
        let f = |s: f64| rot * principal_pow(c(r * r) - I * s * s - z, -alpha);
        let scale = (r * r + z.norm()).sqrt().max(1e-3);
        let head = q.integrate_breaks(f, &[0.0, scale, 2.0 * scale]);
        let tail = q.integrate_to_infinity(f, 2.0 * scale);
        return Estimate {
            value: 2.0 * (head.value + tail.value),
            error: 2.0 * (head.error + tail.error),
            intervals: head.intervals + tail.intervals,
            converged: head.converged && tail.converged,
        };
    }
    // (r − t)(r + t) keeps the base accurate near the peak
    let f = |t: f64| principal_pow((r - t) * (r + t) - z, -alpha) * (-delta * t * t).exp();
    let w = (z.norm() / r.max(1e-3)).min(0.5 * r.max(1e-300));
    let mut pts = vec![0.0];
    if r > 0.0 {
        pts.extend([r - w, r, r + w]);
    }
    let end = pts.last().unwrap().max(1.0) * 2.0;
    pts.push(end);
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    let head = q.integrate_breaks(f, &pts);
    let tail = q.integrate_to_infinity(f, end);
    Estimate {
        value: 2.0 * (head.value + tail.value),
        error: 2.0 * (head.error + tail.error),
        intervals: head.intervals + tail.intervals,
        converged: head.converged && tail.converged,
    }
}

fn lorentz_iterated(n: usize, alpha: Complex64, z: Complex64, delta: f64) -> Result<Estimate<Complex64>> {
    let area = sphere_area(n - 1);
    let q_in = Quadrature::new(1e-15, 1e-12).with_max_intervals(4000);
    let failed = std::sync::atomic::AtomicBool::new(false);
    let inner_err = std::sync::Mutex::new(0.0f64);
    let f = |r: f64| {
        let e = lorentz_inner(r, alpha, z, delta, &q_in);
        if !e.converged {
            failed.store(true, std::sync::atomic::Ordering::Relaxed);
        }
        let w = area * r.powi(n as i32 - 2) * (-delta * r * r).exp();
        let mut m = inner_err.lock().unwrap();
        *m = m.max(w * e.error);
        e.value * w
    };
    let q = if delta > 0.0 { Quadrature::new(1e-13, 1e-9).with_max_intervals(4000) } else { quad() };
    let scale = z.norm().sqrt();
    let head = q.integrate_breaks(f, &[0.0, 0.5 * scale, scale, 2.0 * scale]);
    let tail = q.integrate_to_infinity(f, 2.0 * scale);
    let est = Estimate {
        value: head.value + tail.value,
        error: head.error + tail.error + *inner_err.lock().unwrap(),
        intervals: head.intervals + tail.intervals,
        converged: head.converged && tail.converged && !failed.into_inner(),
    };
    est.require(1e-10)
}

/// ∫_{R^n} (Q(ξ) − z)^{−α} d^nξ as an iterated integral, time variable
/// innermost; absolutely convergent as an iterated integral for Re α > n/2.
pub fn lorentz_power_integral_direct(n: usize, alpha: Complex64, z: Complex64) -> Result<Estimate<Complex64>> {
    check_dim(n)?;
    check_z_lorentz(z)?;
    if alpha.re <= n as f64 / 2.0 {
        return Err(Error::Invalid(format!("direct quadrature needs Re α > n/2, got α = {alpha}")));
    }
    lorentz_iterated(n, alpha, z, 0.0)
}

/// The integral with the Gaussian regulator e^{−δ‖ξ‖²}.
pub fn lorentz_power_integral_regulated(
    n: usize,
    alpha: Complex64,
    z: Complex64,
    delta: f64,
) -> Result<Estimate<Complex64>> {
    check_dim(n)?;
    check_z_lorentz(z)?;
    if alpha.re <= 0.5 || delta <= 0.0 {
        return Err(Error::Invalid("regulated quadrature needs Re α > 1/2 and δ > 0".into()));
    }
    lorentz_iterated(n, alpha, z, delta)
}

/// Default regulator ladder.
pub const REGULATOR_LADDER: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Longer ladder continuing the default one by halving.
pub const REGULATOR_LADDER_LONG: [f64; 5] = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4];

/// δ → 0 extrapolation of the regulated integral. The regulated value
/// behaves like I + Σ_j (a_j δ^{1+j} + b_j δ^{α−n/2+j}); the model uses as
/// many of these powers, in increasing order, as the ladder allows.
pub fn lorentz_power_integral_regulator_limit(
    n: usize,
    alpha: Complex64,
    z: Complex64,
    deltas: &[f64],
) -> Result<Extrapolated<Complex64>> {
    let vals: Vec<Complex64> = deltas
        .iter()
        .map(|&d| lorentz_power_integral_regulated(n, alpha, z, d).map(|e| e.value))
        .collect::<Result<_>>()?;
    // integer powers from the regulator's Taylor series, half-integer
    // offsets α − n/2 + j from the homogeneous tail of the integrand
    let p = alpha.re - n as f64 / 2.0;
    let mut powers: Vec<f64> = Vec::new();
    for j in 0..4 {
        for q in [1.0 + j as f64, p + j as f64] {
            if q > 0.0 && powers.iter().all(|&x| (x - q).abs() > 1e-6) {
                powers.push(q);
            }
        }
    }
    powers.sort_by(f64::total_cmp);
    powers.truncate(deltas.len().saturating_sub(1));
    Ok(extrapolate(deltas, &vals, &powers))
}

/// ∫_{R^n} (Q(ξ) − z − i0)^{−α} d^nξ continued in α: i times the Euclidean
/// integral (Wick rotation ξ₀ → iξ₀).
pub fn lorentz_power_integral(n: usize, alpha: Complex64, z: Complex64) -> Result<Complex64> {
    check_dim(n)?;
    check_boundary_z(z)?;
    gate(&LORENTZ_GATE, "lorentzian power integral")?;
    Ok(I * euclid_closed(n, alpha, z)?)
}

/// Res_{α=k} of the Lorentzian power integral, i times the Euclidean one.
pub fn lorentz_residue(n: usize, k: usize, z: Complex64) -> Result<Complex64> {
    Ok(I * euclid_residue(n, k, z)?)
}

fn check_boundary_z(z: Complex64) -> Result<()> {
    if z.im > 0.0 || (z.im == 0.0 && z.re < 0.0) {
        Ok(())
    } else if z.im == 0.0 && z.re > 0.0 {
        // boundary value from the upper half-plane
        Ok(())
    } else if z == c(0.0) {
        Err(Error::Invalid("z = 0".into()))
    } else {
        Err(Error::Invalid(format!("z = {z} lies in the lower half-plane")))
    }
}

/// Diagonal value F_α(z, 0) of the model kernel family.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModelDiagonal {
    pub n: usize,
    pub alpha: Complex64,
    pub z: Complex64,
    pub value: Complex64,
}

impl ModelDiagonal {
    pub fn new(n: usize, alpha: Complex64, z: Complex64) -> Result<Self> {
        Ok(ModelDiagonal {
            n,
            alpha,
            z,
            value: f_diagonal(n, alpha, z)?,
        })
    }
}

fn check_even(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Invalid(format!("n = {n} must be even and at least 4")));
    }
    Ok(())
}

/// F_α(z, 0) = Γ(α+1)/(2π)^n · ∫(Q − i0 − z)^{−α−1} d^nξ
/// = i (4π)^{−n/2} Γ(α+1−n/2) (−z)^{n/2−1−α}.
///
/// Meromorphic in α with simple poles at α = n/2 − 1 − m, m = 0, 1, ….
/// The z argument may be any non-zero point of the closed upper half-plane
/// or, by continuation on the principal branch of (−z), any z ≠ 0 not on
/// the positive real axis approached from below.
pub fn f_diagonal(n: usize, alpha: Complex64, z: Complex64) -> Result<Complex64> {
    check_even(n)?;
    if z == c(0.0) {
        return Err(Error::Invalid("z = 0".into()));
    }
    gate(&LORENTZ_GATE, "lorentzian power integral")?;
    let h = n as f64 / 2.0;
    let s = alpha + 1.0 - h;
    if nonpositive_integer(s).is_some() {
        return Err(Error::Pole { alpha });
    }
    Ok(I * (4.0 * PI).powf(-h) * gamma(s) * principal_pow(-z, h - 1.0 - alpha))
}

/// F_α(z, 0) through the normalised Lorentzian integral itself,
/// Γ(α+1)/(2π)^n · lorentz_power_integral(n, α+1, z).
pub fn f_diagonal_via_integral(n: usize, alpha: Complex64, z: Complex64) -> Result<Complex64> {
    check_even(n)?;
    Ok(gamma(alpha + 1.0) / (2.0 * PI).powi(n as i32) * lorentz_power_integral(n, alpha + 1.0, z)?)
}

/// Pole set of α ↦ F_α(z, 0): n/2 − 1 − m for m = 0..count.
pub fn f_pole_set(n: usize, count: usize) -> Vec<f64> {
    (0..count).map(|m| n as f64 / 2.0 - 1.0 - m as f64).collect()
}

/// Res_{α=α₀} F_α(z, 0) = i (4π)^{−n/2} (−1)^m/m! (−z)^m at α₀ = n/2 − 1 − m,
/// read off the Γ factor; zero at any other α₀.
pub fn f_diagonal_residue(n: usize, alpha0: f64, z: Complex64) -> Result<Complex64> {
    check_even(n)?;
    let h = n as f64 / 2.0;
    match nonpositive_integer(c(alpha0 + 1.0 - h)) {
        None => Ok(c(0.0)),
        Some(m) => {
            let fact: f64 = (1..=m).map(|i| i as f64).product();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            Ok(I * (4.0 * PI).powf(-h) * sign / fact * (-z).powi(m as i32))
        }
    }
}

// ---------------------------------------------------------------------------
// closed-form gates

type Gate = Lazy<std::result::Result<(), String>>;

static EUCLID_GATE: Gate = Lazy::new(validate_euclid);
static LORENTZ_GATE: Gate = Lazy::new(validate_lorentz);

fn gate(g: &Gate, name: &str) -> Result<()> {
    match &**g {
        Ok(()) => Ok(()),
        Err(msg) => Err(Error::ClosedFormRejected(format!("{name}: {msg}"))),
    }
}

fn relative_gap(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn validate_euclid() -> std::result::Result<(), String> {
    let cases = [
        (4, c(3.0), c(-1.0)),
        (4, Complex64::new(3.2, 0.5), I),
        (6, c(4.5), Complex64::new(1.0, 2.0)),
        (3, Complex64::new(2.1, -0.7), Complex64::new(-2.0, 0.1)),
    ];
    for (n, alpha, z) in cases {
        let direct = euclid_power_integral_direct(n, alpha, z).map_err(|e| e.to_string())?;
        let closed = euclid_closed(n, alpha, z).map_err(|e| e.to_string())?;
        let gap = relative_gap(closed, direct.value);
        if gap > 1e-8 {
            return Err(format!("n = {n}, α = {alpha}, z = {z}: relative gap {gap:e}"));
        }
    }
    Ok(())
}

fn validate_lorentz() -> std::result::Result<(), String> {
    let cases = [
        (4, c(3.5), Complex64::new(0.0, 2.0)),
        (4, Complex64::new(3.0, 0.4), Complex64::new(-1.0, 1.0)),
        (6, c(4.5), Complex64::new(1.5, 0.5)),
    ];
    for (n, alpha, z) in cases {
        let direct = lorentz_power_integral_direct(n, alpha, z).map_err(|e| e.to_string())?;
        let closed = I * euclid_closed(n, alpha, z).map_err(|e| e.to_string())?;
        let gap = relative_gap(closed, direct.value);
        if gap > 1e-7 {
            return Err(format!("n = {n}, α = {alpha}, z = {z}: relative gap {gap:e}"));
        }
    }
    Ok(())
}

/// Outcome of each closed-form validation: (name, Ok or the reason it was
/// rejected). Forces the validations to run.
pub fn closed_form_status() -> Vec<(&'static str, std::result::Result<(), String>)> {
    vec![
        ("euclidean power integral", EUCLID_GATE.clone()),
        ("lorentzian power integral", LORENTZ_GATE.clone()),
    ]
}

// ---------------------------------------------------------------------------
// contour functional calculus

/// The contour γ_ε: z = iε + ζ with ζ running in from ∞·e^{i(π−θ)} along a
/// ray, around the origin below it on the arc |ζ| = ε/2, and out to
/// ∞·e^{iθ}. The real axis lies below the contour. Rays are truncated at
/// |ζ| = R_max.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContourGamma {
    pub epsilon: f64,
    pub theta: f64,
    pub radius: f64,
    /// Truncation radius; chosen per integrand from the tail bound when None.
    pub r_max: Option<f64>,
    /// Target size of the truncated tail.
    pub tail_tol: f64,
}

/// One of the three pieces of the contour.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment {
    /// ζ = ρe^{i(π−θ)}, ρ from R_max down to ε/2.
    Incoming,
    /// ζ = (ε/2)e^{iφ}, φ from −π−θ up to θ.
    Arc,
    /// ζ = ρe^{iθ}, ρ from ε/2 up to R_max.
    Outgoing,
}

impl ContourGamma {
    pub fn new(epsilon: f64) -> Result<Self> {
        ContourGamma::with_theta(epsilon, PI / 4.0)
    }

    pub fn with_theta(epsilon: f64, theta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Invalid(format!("ε = {epsilon} must be positive")));
        }
        if !(theta > 0.0 && theta < PI / 2.0) {
            return Err(Error::Invalid(format!("θ = {theta} must lie in (0, π/2)")));
        }
        Ok(ContourGamma {
            epsilon,
            theta,
            radius: epsilon / 2.0,
            r_max: None,
            tail_tol: 1e-10,
        })
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = Some(r_max);
        self
    }

    /// Branch of log(z − iε) continuous along the contour: arguments in
    /// [−π−θ, θ].
    pub fn arg_min(&self) -> f64 {
        -PI - self.theta
    }

    /// Point of a segment at parameter t ∈ [0, 1], with the argument of
    /// ζ = z − iε on the contour branch.
    pub fn point(&self, seg: Segment, t: f64, r_max: f64) -> (Complex64, f64) {
        let (rho, phi) = match seg {
            Segment::Incoming => (r_max * (self.radius / r_max).powf(t), -PI - self.theta),
            Segment::Arc => (self.radius, -PI - self.theta + t * (PI + 2.0 * self.theta)),
            Segment::Outgoing => (self.radius * (r_max / self.radius).powf(t), self.theta),
        };
        (I * self.epsilon + Complex64::from_polar(rho, phi), phi)
    }

    /// Upper bound on the part of (2πi)^{−1}∫(z−iε)^{−α}(w−z)^{−1}dz beyond
    /// |ζ| = R on both rays.
    pub fn tail_bound(&self, alpha: Complex64, w: f64, r: f64) -> f64 {
        let d = r - w.abs() - self.epsilon;
        if d <= 0.0 || alpha.re <= 0.0 {
            return f64::INFINITY;
        }
        let growth = (alpha.im.abs() * (PI + self.theta)).exp();
        growth * r.powf(-alpha.re) / alpha.re * (r / d) / PI
    }

    fn choose_r_max(&self, alpha: Complex64, w: f64) -> Result<f64> {
        if let Some(r) = self.r_max {
            return Ok(r);
        }
        let mut r = 4.0 * (w.abs() + self.epsilon).max(1.0);
        while self.tail_bound(alpha, w, r) > self.tail_tol {
            r *= 2.0;
            if r > 1e300 {
                return Err(Error::Truncation {
                    estimate: self.tail_bound(alpha, w, 1e300),
                    tol: self.tail_tol,
                });
            }
        }
        Ok(r)
    }
}

/// Value of a contour integral with its quadrature and truncation errors.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContourValue {
    pub value: Complex64,
    pub quadrature_error: f64,
    pub truncation_error: f64,
    pub r_max: f64,
}

impl ContourValue {
    pub fn error(&self) -> f64 {
        self.quadrature_error + self.truncation_error
    }
}

/// (2πi)^{−1}∮_{γ_ε} (z − iε)^{−α} (w − z)^{−1} dz for real w; equals
/// (w − iε)^{−α} on the principal branch once the truncation is removed.
pub fn contour_power_scalar(w: f64, epsilon: f64, alpha: Complex64, contour: &ContourGamma) -> Result<ContourValue> {
    if (contour.epsilon - epsilon).abs() > 1e-15 * epsilon {
        return Err(Error::Invalid("ε differs from the contour's ε".into()));
    }
    if alpha.re <= 0.0 {
        return Err(Error::Invalid(format!("Re α must be positive, got α = {alpha}")));
    }
    if !w.is_finite() {
        return Err(Error::Invalid("w must be finite".into()));
    }
    let r_max = contour.choose_r_max(alpha, w)?;
    let q = Quadrature::new(1e-13, 1e-11).with_max_intervals(4000);
    // log-radial parametrisation on the rays: ζ = ρ e^{iφ}, dz = ζ d(ln ρ)
    let ray = |phi: f64, s: f64| -> Complex64 {
        let zeta = Complex64::from_polar(s.exp(), phi);
        let z = I * epsilon + zeta;
        let pow = (-alpha * Complex64::new(s, phi)).exp();
        pow * zeta / (w - z)
    };
    let (lo, hi) = (contour.radius.ln(), r_max.ln());
    let mut breaks = vec![lo];
    let lw = w.abs().max(contour.radius).ln();
    if lw > lo && lw < hi {
        breaks.push(lw);
    }
    breaks.push(hi);
    let phi_in = -PI - contour.theta;
    let phi_out = contour.theta;
    let incoming = q.integrate_breaks(|s| ray(phi_in, s), &breaks);
    let outgoing = q.integrate_breaks(|s| ray(phi_out, s), &breaks);
    let arc = q.integrate(
        |phi: f64| {
            let zeta = Complex64::from_polar(contour.radius, phi);
            let z = I * epsilon + zeta;
            let pow = (-alpha * Complex64::new(contour.radius.ln(), phi)).exp();
            pow * I * zeta / (w - z)
        },
        phi_in,
        phi_out,
    );
    let converged = incoming.converged && outgoing.converged && arc.converged;
    let err = incoming.error + outgoing.error + arc.error;
    if !converged {
        return Err(Error::Quadrature { error: err, tol: 1e-11 });
    }
    // incoming ray runs from R_max inwards
    let total = outgoing.value - incoming.value + arc.value;
    Ok(ContourValue {
        value: total / (2.0 * PI * I),
        quadrature_error: err / (2.0 * PI),
        truncation_error: contour.tail_bound(alpha, w, r_max),
        r_max,
    })
}

