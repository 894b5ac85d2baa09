use lzeta::minkmodel::*;
use lzeta::quad::circle_integral;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn branched_power_boundary_values() {
    for &w in &[2.0f64, 0.3, -0.5, -4.0] {
        for &a in &[0.5, 1.7, 2.25] {
            let alpha = c(a);
            let limit = if w > 0.0 {
                c(w.abs().powf(-a))
            } else {
                w.abs().powf(-a) * (I * PI * a).exp()
            };
            let v = BranchedPower::shifted_real(w, 1e-9, -alpha).value();
            assert!(rel(v, limit) < 1e-8, "w = {w}, α = {a}: {v} vs {limit}");
            let arg = BranchedPower::shifted_real(w, 1e-3, -alpha).arg();
            assert!(arg < 0.0 && arg > -PI);
        }
    }
}

#[test]
fn branched_power_is_continuous_off_the_cut() {
    // a path from 1 − i to −1 − i through the lower half-plane
    let alpha = Complex64::new(1.3, 0.4);
    let mut prev = BranchedPower::principal(Complex64::new(1.0, -1.0), -alpha).value();
    for k in 1..=1000 {
        let t = k as f64 / 1000.0;
        let base = Complex64::new(1.0 - 2.0 * t, -1.0 - (PI * t).sin());
        let v = BranchedPower::principal(base, -alpha).value();
        assert!((v - prev).norm() < 0.05, "jump at t = {t}");
        prev = v;
    }
    // the contour branch puts the cut in the upper wedge instead
    let b = BranchedPower::with_branch(Complex64::new(-1.0, 0.5), c(1.0), -PI - PI / 4.0);
    assert!(b.arg() < -PI);
}

#[test]
fn euclidean_closed_form_matches_quadrature() {
    let d = euclid_power_integral_direct(4, c(3.0), c(-1.0)).unwrap();
    let cf = euclid_power_integral(4, c(3.0), c(-1.0)).unwrap();
    assert!(rel(cf, d.value) < 1e-8);
    // π²Γ(1)/Γ(3) = π²/2 at z = −1
    assert!(rel(cf, c(PI * PI / 2.0)) < 1e-13);
}

#[test]
fn euclidean_residues() {
    let r = euclid_residue(4, 1, I).unwrap();
    assert!(rel(r, I * PI * PI) < 1e-14);
    for (k, z) in [(1, I), (2, Complex64::new(-1.0, 0.5)), (1, Complex64::new(2.0, 1.0))] {
        let (num, err) = circle_integral(|a| euclid_power_integral(4, a, z).unwrap(), c(k as f64), 0.1, 64);
        let want = euclid_residue(4, k, z).unwrap();
        assert!((num - want).norm() < 1e-10, "k = {k}: {num} vs {want} ({err:e})");
    }
    assert!(euclid_power_integral(4, c(2.0), I).is_err());
}

#[test]
fn lorentzian_residue_is_i_times_euclidean() {
    let z = I;
    for k in [1, 2] {
        let (num, _) = circle_integral(|a| lorentz_power_integral(4, a, z).unwrap(), c(k as f64), 0.1, 64);
        let e = euclid_residue(4, k, z).unwrap();
        assert!((num - I * e).norm() < 1e-10);
        assert!((lorentz_residue(4, k, z).unwrap() - I * e).norm() < 1e-15);
    }
}

#[test]
fn lorentzian_direct_quadrature_matches_closed_form() {
    let (alpha, z) = (c(3.5), Complex64::new(0.0, 2.0));
    let cf = lorentz_power_integral(4, alpha, z).unwrap();
    let direct = lorentz_power_integral_direct(4, alpha, z).unwrap();
    assert!(rel(direct.value, cf) < 1e-8, "{direct:?} vs {cf}");
    let ladder = lorentz_power_integral_regulator_limit(4, alpha, z, &REGULATOR_LADDER_LONG).unwrap();
    assert!(rel(ladder.value, cf) < 1e-5, "{ladder:?} vs {cf}");
}

#[test]
fn lorentzian_boundary_values_are_continuous_in_epsilon() {
    for alpha in [c(3.5), c(1.5), Complex64::new(0.7, 0.3)] {
        let a = lorentz_power_integral(4, alpha, Complex64::new(-1.0, 1e-3)).unwrap();
        let b = lorentz_power_integral(4, alpha, Complex64::new(-1.0, 1e-6)).unwrap();
        assert!((a - b).norm() <= 1e-2 * b.norm(), "{alpha}: {a} vs {b}");
    }
}

#[test]
fn closed_forms_agree_with_quadrature_on_a_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let n = if rng.random_bool(0.5) { 4 } else { 6 };
        let alpha = Complex64::new(n as f64 / 2.0 + 1.0 + rng.random_range(0.05..2.0), rng.random_range(-1.0..1.0));
        let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(0.2..3.0));
        let e = euclid_power_integral_direct(n, alpha, z).unwrap().value;
        assert!(rel(euclid_power_integral(n, alpha, z).unwrap(), e) < 1e-5);
        let l = lorentz_power_integral_direct(n, alpha, z).unwrap().value;
        assert!(rel(lorentz_power_integral(n, alpha, z).unwrap(), l) < 1e-5, "n = {n}, α = {alpha}, z = {z}");
    }
}

#[test]
fn closed_forms_pass_their_gates() {
    for (name, status) in closed_form_status() {
        assert!(status.is_ok(), "{name}: {status:?}");
    }
}

#[test]
fn f_diagonal_residues() {
    let a0 = (4.0 * PI).powi(-2);
    for z in [I, Complex64::new(-2.0, 0.3), Complex64::new(0.5, 1e-3), Complex64::new(3.0, 2.0)] {
        let (r1, _) = circle_integral(|a| f_diagonal(4, a, z).unwrap(), c(1.0), 0.1, 64);
        assert!((r1 - I * a0).norm() < 1e-12, "{z}: {r1}");
        assert!((f_diagonal_residue(4, 1.0, z).unwrap() - I * a0).norm() < 1e-16);
        let (r0, _) = circle_integral(|a| f_diagonal(4, a, z).unwrap(), c(0.0), 0.1, 64);
        assert!((r0 - I * a0 * z).norm() < 1e-12, "{z}: {r0}");
        assert!((f_diagonal_residue(4, 0.0, z).unwrap() - I * a0 * z).norm() < 1e-16);
    }
    // n = 6: Res at α = 2 is i(4π)^{-3}
    let (r, _) = circle_integral(|a| f_diagonal(6, a, I).unwrap(), c(2.0), 0.1, 64);
    assert!((r - I * (4.0 * PI).powi(-3)).norm() < 1e-13);
}

#[test]
fn f_diagonal_has_no_other_poles() {
    assert_eq!(f_pole_set(4, 3), vec![1.0, 0.0, -1.0]);
    let z = Complex64::new(0.3, 0.8);
    for center in [2.0, 3.0, 1.5, 0.5, -0.5] {
        let (r, _) = circle_integral(|a| f_diagonal(4, a, z).unwrap(), c(center), 0.1, 64);
        assert!(r.norm() < 1e-8, "{center}: {r}");
        assert_eq!(f_diagonal_residue(4, center, z).unwrap(), c(0.0));
    }
    assert!(matches!(f_diagonal(4, c(1.0), I), Err(lzeta::Error::Pole { .. })));
    assert!(f_diagonal(4, c(1.2), c(0.0)).is_err());
    assert!(f_diagonal(5, c(1.2), I).is_err());
}

#[test]
fn f_diagonal_is_homogeneous() {
    let alpha = Complex64::new(2.3, 0.7);
    for z in [Complex64::new(0.4, 0.9), Complex64::new(-1.0, 0.2)] {
        let lhs = f_diagonal(4, alpha, 4.0 * z).unwrap();
        let rhs = f_diagonal(4, alpha, z).unwrap() * principal(c(2.0), c(4.0) - 2.0 * alpha - 2.0);
        assert!(rel(lhs, rhs) < 1e-9);
    }
}

fn principal(b: Complex64, e: Complex64) -> Complex64 {
    BranchedPower::principal(b, e).value()
}

#[test]
fn f_diagonal_matches_the_normalised_integral() {
    for alpha in [Complex64::new(2.3, 0.7), c(3.1), Complex64::new(-0.4, 0.2)] {
        let z = Complex64::new(0.2, 1.1);
        let a = f_diagonal(4, alpha, z).unwrap();
        let b = f_diagonal_via_integral(4, alpha, z).unwrap();
        assert!(rel(a, b) < 1e-12);
    }
    // direct quadrature where it converges
    let (alpha, z) = (c(2.6), Complex64::new(0.0, 1.5));
    let direct = lorentz_power_integral_direct(4, alpha + 1.0, z).unwrap().value * lzeta::special::gamma(alpha + 1.0)
        / (2.0 * PI).powi(4);
    assert!(rel(f_diagonal(4, alpha, z).unwrap(), direct) < 1e-8);
    let md = ModelDiagonal::new(4, alpha, z).unwrap();
    assert_eq!(md.value, f_diagonal(4, alpha, z).unwrap());
}

#[test]
fn contour_resolvent_identity() {
    let g = ContourGamma::new(0.1).unwrap();
    let v = contour_power_scalar(1.0, 0.1, c(1.0), &g).unwrap();
    assert!((v.value - 1.0 / Complex64::new(1.0, -0.1)).norm() < 1e-8, "{v:?}");
    assert!(v.error() < 1e-8);
}

#[test]
fn contour_matches_principal_branch() {
    let g = ContourGamma::new(0.05).unwrap();
    let v = contour_power_scalar(-3.0, 0.05, c(1.7), &g).unwrap();
    let want = BranchedPower::shifted_real(-3.0, 0.05, c(-1.7)).value();
    assert!((v.value - want).norm() < 1e-7, "{v:?} vs {want}");
    for (w, alpha) in [(0.0, Complex64::new(0.8, 0.5)), (10.0, c(2.5)), (-0.02, c(0.6))] {
        let v = contour_power_scalar(w, 0.05, alpha, &g).unwrap();
        let want = BranchedPower::shifted_real(w, 0.05, -alpha).value();
        assert!((v.value - want).norm() <= 10.0 * v.error().max(1e-9), "w = {w}: {v:?} vs {want}");
    }
}

#[test]
fn contour_truncation_error_shrinks_and_is_bounded() {
    let (w, eps, alpha) = (0.7, 0.1, c(1.2));
    let exact = BranchedPower::shifted_real(w, eps, -alpha).value();
    let mut last = f64::INFINITY;
    for r in [1e2, 1e3, 1e4, 1e5, 1e6] {
        let g = ContourGamma::new(eps).unwrap().with_r_max(r);
        let v = contour_power_scalar(w, eps, alpha, &g).unwrap();
        let err = (v.value - exact).norm();
        assert!(err < last, "R = {r}");
        assert!(err <= v.error(), "R = {r}: true {err:e}, estimate {:e}", v.error());
        last = err;
    }
}

#[test]
fn contour_segments_join_continuously() {
    let g = ContourGamma::with_theta(0.2, 0.6).unwrap();
    let r = 50.0;
    let (a, pa) = g.point(Segment::Incoming, 1.0, r);
    let (b, pb) = g.point(Segment::Arc, 0.0, r);
    assert!((a - b).norm() < 1e-14 && pa == pb);
    let (a, pa) = g.point(Segment::Arc, 1.0, r);
    let (b, pb) = g.point(Segment::Outgoing, 0.0, r);
    assert!((a - b).norm() < 1e-14 && (pa - pb).abs() < 1e-14);
    // the lowest point is iε/2, above the real axis
    let (low, _) = g.point(Segment::Arc, 0.5, r);
    assert!((low - Complex64::new(0.0, 0.1)).norm() < 1e-12);
    assert!(ContourGamma::with_theta(0.1, 1.7).is_err());
    assert!(ContourGamma::new(-1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, rng_seed: proptest::test_runner::RngSeed::Fixed(4), ..ProptestConfig::default() })]

    #[test]
    fn contour_exponent_law(w in -5.0f64..5.0, a1 in 0.6f64..1.5, a2 in 0.6f64..1.5) {
        let g = ContourGamma::new(0.1).unwrap();
        let p1 = contour_power_scalar(w, 0.1, c(a1), &g).unwrap().value;
        let p2 = contour_power_scalar(w, 0.1, c(a2), &g).unwrap().value;
        let p12 = contour_power_scalar(w, 0.1, c(a1 + a2), &g).unwrap().value;
        prop_assert!((p1 * p2 - p12).norm() < 1e-6);
    }
}
