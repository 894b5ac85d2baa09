//! Complex special functions: Γ, 1/Γ, Pochhammer symbols, Hurwitz and
//! Riemann zeta.
//!
//! Γ uses the Lanczos approximation with g = 7 and the classic nine-term
//! coefficient set (relative error around 1e-15 for Re z ≥ 1/2), extended
//! to the left half-plane by reflection. The Hurwitz zeta function is
//! evaluated by Euler–Maclaurin summation, which is valid for every complex
//! s ≠ 1.

#![allow(clippy::excessive_precision)]

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// B_2, B_4, …, B_30.
const BERNOULLI_EVEN: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174_611.0 / 330.0,
    854_513.0 / 138.0,
    -236_364_091.0 / 2730.0,
    8_553_103.0 / 6.0,
    -23_749_461_029.0 / 870.0,
    8_615_841_276_005.0 / 14322.0,
];

/// sin(πx) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r < 0.25 {
        (PI * r).sin()
    } else if r < 0.75 {
        (PI * (0.5 - r)).cos()
    } else if r < 1.25 {
        (PI * (1.0 - r)).sin()
    } else if r < 1.75 {
        -(PI * (r - 1.5)).cos()
    } else {
        (PI * (r - 2.0)).sin()
    }
}

/// cos(πx) with exact zeros at the half-integers.
pub fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

/// sin(πz) for complex z.
pub fn csin_pi(z: Complex64) -> Complex64 {
    let (sx, cx) = (sin_pi(z.re), cos_pi(z.re));
    let y = PI * z.im;
    Complex64::new(sx * y.cosh(), cx * y.sinh())
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// ln Γ(z) for Re z ≥ 1/2 (principal branch of the Lanczos form).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut a = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// Γ(z). Non-finite at the poles z = 0, −1, −2, ….
pub fn gamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    if z.re < 0.5 {
        PI / (csin_pi(z) * ln_gamma_right(1.0 - z).exp())
    } else {
        ln_gamma_right(z).exp()
    }
}

/// Real Γ(x).
pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}

/// 1/Γ(z), entire; exactly zero at the non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        csin_pi(z) * ln_gamma_right(1.0 - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// Rising factorial (s)_p = s(s+1)…(s+p−1).
pub fn pochhammer(s: Complex64, p: usize) -> Complex64 {
    (0..p).fold(Complex64::new(1.0, 0.0), |acc, k| acc * (s + k as f64))
}

/// Hurwitz zeta ζ(s, a) = Σ_{k≥0} (a+k)^{-s} for a > 0, continued to all
/// s ≠ 1 (non-finite at s = 1).
pub fn hurwitz_zeta(s: Complex64, a: f64) -> Complex64 {
    assert!(a > 0.0, "hurwitz_zeta requires a > 0");
    if s == Complex64::new(1.0, 0.0) {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    let n_head = 12 + s.norm().ceil() as usize;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n_head {
        sum += (-s * (a + k as f64).ln()).exp();
    }
    let x = a + n_head as f64;
    let lx = x.ln();
    let x_pow = (-s * lx).exp(); // x^{-s}
    sum += x_pow * x / (s - 1.0) + 0.5 * x_pow;
    // Euler–Maclaurin corrections B_{2j}/(2j)! · s(s+1)…(s+2j−2) · x^{-s-2j+1}
    let mut fac = s * x_pow / x;
    let mut factorial = 2.0;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = fac * (b / factorial);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
        let m = 2.0 * (j as f64 + 1.0);
        fac = fac * (s + m - 1.0) * (s + m) / (x * x);
        factorial *= (m + 1.0) * (m + 2.0);
    }
    sum
}

/// Riemann zeta ζ(s).
pub fn riemann_zeta(s: Complex64) -> Complex64 {
    hurwitz_zeta(s, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_known_values() {
        assert!((gamma(c(0.5, 0.0)).re - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(c(5.0, 0.0)).re - 24.0).abs() < 1e-12);
        // Γ(1+i) = 0.498015668118356… − 0.154949828301810… i
        let g = gamma(c(1.0, 1.0));
        assert!((g - c(0.498_015_668_118_356_04, -0.154_949_828_301_810_69)).norm() < 1e-14);
        // Γ(−1/2) = −2√π
        assert!((gamma(c(-0.5, 0.0)).re + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_recurrence_on_strip() {
        for k in 0..40 {
            let z = c(-4.3 + 0.37 * k as f64, -3.0 + 0.16 * k as f64);
            let lhs = gamma(z + 1.0);
            let rhs = z * gamma(z);
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm(), "z = {z}");
        }
    }

    #[test]
    fn reflection_formula() {
        let z = c(0.3, 0.7);
        let lhs = gamma(z) * gamma(1.0 - z);
        let rhs = PI / csin_pi(z);
        assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());
    }

    #[test]
    fn rgamma_vanishes_at_poles_and_is_continuous() {
        assert_eq!(rgamma(c(-3.0, 0.0)), c(0.0, 0.0));
        // near the pole at -2: 1/Γ(-2 + h) ≈ (-2)! ... = h·(−1)^2·2! = 2h
        let h = 1e-7;
        let v = rgamma(c(-2.0 + h, 0.0));
        assert!((v.re - 2.0 * h).abs() < 1e-12);
    }

    #[test]
    fn zeta_known_values() {
        assert!((riemann_zeta(c(2.0, 0.0)).re - PI * PI / 6.0).abs() < 1e-14);
        assert!((riemann_zeta(c(0.0, 0.0)).re + 0.5).abs() < 1e-14);
        assert!((riemann_zeta(c(-1.0, 0.0)).re + 1.0 / 12.0).abs() < 1e-12);
        assert!(riemann_zeta(c(-2.0, 0.0)).norm() < 1e-11);
        assert!((riemann_zeta(c(3.0, 0.0)).re - 1.202_056_903_159_594_3).abs() < 1e-14);
        // first nontrivial zero
        assert!(riemann_zeta(c(0.5, 14.134_725_141_734_693)).norm() < 1e-12);
    }

    #[test]
    fn hurwitz_shift_identity() {
        for &(s, a) in &[(c(2.5, 1.0), 0.3), (c(-1.7, 0.4), 2.0), (c(0.2, -3.0), 5.5)] {
            let lhs = hurwitz_zeta(s, a);
            let rhs = (-s * a.ln()).exp() + hurwitz_zeta(s, a + 1.0);
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()), "s={s} a={a}");
        }
    }

    #[test]
    fn hurwitz_residue_at_one() {
        let h = 1e-6;
        let v = hurwitz_zeta(c(1.0 + h, 0.0), 3.0) * h;
        assert!((v.re - 1.0).abs() < 1e-5);
    }
}
