//! Acceptance suite: one line per criterion, exit status 1 if any fails.
//!
//! Runs without the libtest harness so that the report is always printed.

use lzeta::geometry::{benchmark, benchmarks, curvature, Signature};
use lzeta::hadamard::{diagonal_u1_direct, transport_solve, TOL_TRANSPORT};
use lzeta::minkmodel::*;
use lzeta::quad::circle_integral;
use lzeta::special::{gamma, rgamma};
use lzeta::specoracle::*;
use lzeta::zeta::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: lzeta::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn esu() -> SpectralModel {
    SpectralModel::sphere(3, 1.0, 400).unwrap()
}

fn mode_residue(model: &SpectralModel, alpha0: f64, eps: f64) -> Result<Complex64, String> {
    let failure = std::sync::Mutex::new(None);
    let (r, _) = circle_integral(
        |a| match continue_mode_zeta(model, a, eps) {
            Ok(v) => v.value,
            Err(e) => {
                *failure.lock().unwrap() = Some(e.to_string());
                Complex64::new(f64::NAN, f64::NAN)
            }
        },
        cx(alpha0, 0.0),
        CIRCLE_RADIUS,
        CIRCLE_NODES,
    );
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

fn extrapolated_mode_residue(model: &SpectralModel, alpha0: f64) -> Result<CValue, String> {
    let eps = EPSILON_LADDER.to_vec();
    let rungs: Result<Vec<CValue>, String> = eps
        .iter()
        .map(|&e| mode_residue(model, alpha0, e).map(|v| CValue::new(v, 0.0)))
        .collect();
    lib(extrapolate_epsilon(&eps, &rungs?, 1))
}

/// Seeded α with distance ≥ 0.2 from `avoid`.
fn random_points(seed: u64, count: usize, avoid: &[f64]) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let a = cx(rng.random_range(-2.5..4.5), rng.random_range(-1.5..1.5));
        if avoid.iter().all(|&p| (a - cx(p, 0.0)).norm() >= 0.2) {
            out.push(a);
        }
    }
    out
}

fn esu_residue_identity() -> Outcome {
    let b = benchmark("einstein_static").unwrap();
    let r_g = lib(curvature(&b.metric, &b.point))?.scalar;
    let want = -I * r_g / (96.0 * PI * PI);
    let mode = extrapolated_mode_residue(&esu(), 1.0)?;
    let d = lib(zeta_density(&b.metric, &b.point, 0.1, 1))?;
    let par = lib(epsilon_extrapolation(&d, 1.0, &EPSILON_LADDER, 1, r_g))?.residue_analytic;
    let (e_mode, e_par, e_both) = (rel(mode.value, want), rel(par.value, want), rel(par.value, mode.value));
    check(
        e_mode <= 1e-3 && e_par <= 1e-3 && e_both <= 1e-3 && mode.error <= 1e-3 * want.norm(),
        format!(
            "R = {r_g:.12}, -iR/(96 pi^2) = {:.10e}i; mode sum rel {e_mode:.1e} (est {:.1e}), parametrix rel {e_par:.1e}, mutual {e_both:.1e} (tol 1e-3)",
            want.im, mode.error
        ),
    )
}

fn flat_cylinder_null() -> Outcome {
    let t = SpectralModel::torus(3, 2.0 * PI, 20_000).unwrap();
    let at1 = extrapolated_mode_residue(&t, 1.0)?;
    let at2 = mode_residue(&t, 2.0, 1e-2)?;
    let ratio = at1.value.norm() / at2.norm();
    check(ratio <= 1e-6, format!("|res(1)| / |res(2)| = {ratio:.2e} (tol 1e-6)"))
}

fn pole_set() -> Outcome {
    let b = benchmark("einstein_static").unwrap();
    let d = lib(zeta_density(&b.metric, &b.point, 0.1, 2))?;
    if d.pole_locations() != vec![2.0, 1.0] {
        return Err(format!("parametrix pole list {:?}", d.pole_locations()));
    }
    let m = esu();
    let mut worst_par: f64 = 0.0;
    let mut worst_mode: f64 = 0.0;
    let mut smallest_pole = f64::INFINITY;
    for p in [2.0, 1.0] {
        let (r, _) = circle_integral(|a| d.value(a).unwrap(), cx(p, 0.0), CIRCLE_RADIUS, CIRCLE_NODES);
        smallest_pole = smallest_pole.min(r.norm()).min(mode_residue(&m, p, 0.1)?.norm());
    }
    for a in random_points(11, 9, &[0.0, 1.0, 2.0, 3.0, -1.0, -2.0, 4.0]) {
        let (r, _) = circle_integral(|z| d.value(z).unwrap(), a, CIRCLE_RADIUS, CIRCLE_NODES);
        worst_par = worst_par.max(r.norm());
    }
    // the continued sphere sum is also evaluated away from the removable
    // points of Γ(α − 1/2)
    for a in random_points(31, 9, &[1.0, 2.0, 0.5, -0.5, -1.5, -2.5]) {
        let (r, _) = circle_integral(
            |z| continue_mode_zeta(&m, z, 0.1).map(|v| v.value).unwrap_or(cx(f64::NAN, 0.0)),
            a,
            CIRCLE_RADIUS,
            CIRCLE_NODES,
        );
        worst_mode = worst_mode.max(r.norm());
    }
    check(
        smallest_pole > 1e-4 && worst_par <= 1e-8 && worst_mode <= 1e-8,
        format!("smallest residue at {{2, 1}} {smallest_pole:.2e}; off-lattice max parametrix {worst_par:.1e}, mode sum {worst_mode:.1e} (tol 1e-8)"),
    )
}

fn hadamard_identity() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut count = 0;
    for b in benchmarks().into_iter().filter(|b| b.metric.signature() == Signature::Lorentzian) {
        let start = Instant::now();
        let c = lib(curvature(&b.metric, &b.point))?;
        let h = lib(transport_solve(&b.metric, &b.point, 1))?;
        let u1 = h.diag_values[1].value;
        let direct = lib(diagonal_u1_direct(&b.metric, &b.point))?;
        let want = -c.scalar / 6.0;
        let paths = (u1 - direct).abs();
        let vs_r = (u1 - want).abs() / want.abs().max(1.0);
        let secs = start.elapsed().as_secs_f64();
        ok &= paths <= 1e-5 && vs_r <= 1e-4 && secs <= 120.0;
        count += 1;
        lines.push(format!("{} paths {paths:.1e} vs -R/6 {vs_r:.1e} {secs:.0}s", b.metric.name));
    }
    let has_poly = lines.iter().any(|l| l.starts_with("poly_perturbed"));
    check(ok && count >= 4 && has_poly, format!("{} (tol 1e-5, 1e-4, 120s)", lines.join("; ")))
}

fn euclidean_toy() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut wick: f64 = 0.0;
    for k in [1usize, 2] {
        for z in [I, cx(-1.0, 0.5)] {
            let (num, _) = circle_integral(|a| euclid_power_integral(4, a, z).unwrap(), cx(k as f64, 0.0), 0.1, 64);
            let m = 2 - k;
            let fact = (1..=m).product::<usize>() as f64;
            let want = z.powu(m as u32) * PI * PI / (fact * gamma(cx(k as f64, 0.0)));
            worst = worst.max(rel(num, want));
            let (lor, _) = circle_integral(|a| lorentz_power_integral(4, a, z).unwrap(), cx(k as f64, 0.0), 0.1, 64);
            wick = wick.max((lor / num - I).norm());
        }
    }
    let gates = closed_form_status();
    let gates_ok = gates.iter().all(|(_, s)| s.is_ok());
    check(
        worst <= 1e-6 && wick <= 1e-6 && gates_ok,
        format!("max rel residue error {worst:.1e}, max |L/E - i| {wick:.1e} (tol 1e-6); closed forms validated: {gates_ok}"),
    )
}

fn riemannian_cross_check() -> Outcome {
    let b = benchmark("s3_x_s1").unwrap();
    let r_g = lib(curvature(&b.metric, &b.point))?.scalar;
    let m = lib(SpectralModel::product(&esu(), &SpectralModel::torus(1, 2.0 * PI, 400).unwrap()))?;
    let r = lib(riemannian_residue(&m, 1))?;
    let want = r_g / (6.0 * 16.0 * PI * PI);
    let e = (r.residue.value - cx(want, 0.0)).norm() / want;
    let t4 = SpectralModel::torus(4, 2.0 * PI, 5000).unwrap();
    let flat = lib(riemannian_residue(&t4, 1))?.residue.value.norm();
    check(
        e <= 1e-3 && flat <= 1e-6,
        format!("S3xS1 rel {e:.1e} vs R/(96 pi^2) = {want:.6e} (tol 1e-3); T4 |res| {flat:.1e} (tol 1e-6)"),
    )
}

fn contour_calculus() -> Outcome {
    let eps = 0.1;
    let g = lib(ContourGamma::new(eps))?;
    let ws = [-3.0, -0.5, 0.0, 0.7, 4.0];
    let alphas = [cx(0.5, 0.0), cx(1.0, 0.0), cx(1.5, 0.5), cx(2.0, 0.0), cx(2.5, -0.3)];
    let mut worst: f64 = 0.0;
    let mut bounded = true;
    let (mut r_lo, mut r_hi) = (f64::INFINITY, 0.0f64);
    for &w in &ws {
        for &a in &alphas {
            let v = lib(contour_power_scalar(w, eps, a, &g))?;
            let exact = BranchedPower::shifted_real(w, eps, -a).value();
            let err = (v.value - exact).norm();
            worst = worst.max(err);
            bounded &= err <= v.error();
            r_lo = r_lo.min(v.r_max);
            r_hi = r_hi.max(v.r_max);
        }
    }
    check(
        worst <= 1e-7 && bounded,
        format!("5x5 grid, eps = {eps}: max error {worst:.1e} (tol 1e-7), estimate bounds every cell: {bounded}; R_max in [{r_lo:.1e}, {r_hi:.1e}]"),
    )
}

fn spectral_action() -> Outcome {
    let f = lib(TestFunction::bump(1.0, 2.0))?;
    let lams = [4.0, 5.0, 6.0, 8.0, 10.0, 12.0];
    let t = SpectralModel::torus(3, 2.0 * PI, 1000).unwrap();
    let torus = lib(cc_expansion_check(&t, &f, &lams, 3, 1e-2, 0.0))?;
    let sphere = lib(cc_expansion_check(&esu(), &f, &lams, 3, 1e-2, -6.0))?;
    let (m1, _) = lib(f.moment(1.0))?;
    let (m0, _) = lib(f.moment(0.0))?;
    let c0 = lib(cc_coefficients(&f, 4, 0))?.value.value;
    let c1 = lib(cc_coefficients(&f, 4, 1))?.value.value;
    let phase = ((c0 - I * m1).norm() / m1).max((c1 - m0).norm() / m0);
    let e0 = torus.rel_error_c0a0.value.re;
    let e1 = sphere.rel_error_c1a1.value.re;
    check(
        e0 <= 1e-2 && e1 <= 5e-2 && phase <= 1e-12,
        format!("torus C0 a0 rel {e0:.1e} (tol 1e-2); Einstein universe C1 a1 rel {e1:.1e} (tol 5e-2); phase identities {phase:.1e}"),
    )
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // Γ-coefficient identity
    let mut gamma_worst: f64 = 0.0;
    for _ in 0..64 {
        let a = cx(rng.random_range(-4.0..6.0), rng.random_range(-2.0..2.0));
        if (a.re - a.re.round()).abs() < 0.05 && a.im.abs() < 0.05 {
            continue;
        }
        let base = rgamma(a);
        for m in 0..=8 {
            gamma_worst = gamma_worst.max((series_coefficient(a, m) - base).norm() / base.norm().max(1.0));
        }
    }
    // Riemann symmetries
    let mut sym_ok = true;
    for b in benchmarks() {
        let n = b.metric.dim();
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|i| b.point[i] + rng.random_range(-0.2..0.2)).collect();
            let c = lib(curvature(&b.metric, &x))?;
            sym_ok &= c.symmetry_defect() < b.metric.tol.tensor;
        }
    }
    // transport residuals
    let b = benchmark("poly_perturbed").unwrap();
    let h = lib(transport_solve(&b.metric, &b.point, 2))?;
    let r_max = h.solver().chart().r_max();
    let mut transport_worst: f64 = 0.0;
    for k in 0..=2 {
        for _ in 0..20 {
            let mut v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
            v.iter_mut().for_each(|a| *a /= norm);
            let res = lib(h.residual(k, &v, rng.random_range(0.0..r_max)))?;
            transport_worst = transport_worst.max(res.residual.abs() / (1.0 + res.u.abs()));
        }
    }
    // F_diagonal homogeneity: F(sz) = s^{n/2-1-α} F(z) for s > 0
    let mut homog_worst: f64 = 0.0;
    for _ in 0..20 {
        let alpha = cx(rng.random_range(2.1..3.9), rng.random_range(-1.0..1.0));
        let z = cx(rng.random_range(-2.0..2.0), rng.random_range(0.1..2.0));
        let s: f64 = rng.random_range(0.5..4.0);
        let lhs = lib(f_diagonal(4, alpha, s * z))?;
        let rhs = lib(f_diagonal(4, alpha, z))? * BranchedPower::principal(cx(s, 0.0), cx(1.0, 0.0) - alpha).value();
        homog_worst = homog_worst.max(rel(lhs, rhs));
    }
    check(
        gamma_worst <= 1e-11 && sym_ok && transport_worst <= TOL_TRANSPORT && homog_worst <= 1e-9,
        format!(
            "gamma identity {gamma_worst:.1e} (tol 1e-11); Riemann symmetries {}; transport residual {transport_worst:.1e} (tol {TOL_TRANSPORT:.0e}); F homogeneity {homog_worst:.1e} (tol 1e-9)",
            if sym_ok { "ok" } else { "violated" }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("scalar-curvature residue on the Einstein universe", esu_residue_identity),
        ("flat cylinder null test", flat_cylinder_null),
        ("pole set {2, 1}", pole_set),
        ("Hadamard u_1 = -R/6", hadamard_identity),
        ("Euclidean toy residue and Wick factor", euclidean_toy),
        ("Riemannian cross-check", riemannian_cross_check),
        ("contour functional calculus", contour_calculus),
        ("spectral-action expansion", spectral_action),
        ("property suites", property_suites),
    ];
    let total = Instant::now();
    let gates = [
        ("tau closed form", tau_closed_form_status()),
        ("mode-sum continuation", continuation_status()),
    ];
    for (name, s) in closed_form_status().into_iter().chain(gates) {
        println!("gate {name}: {}", s.err().unwrap_or_else(|| "validated".into()));
    }
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {}. {name} ({secs:.1}s): {detail}", i + 1);
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s",
        criteria.len() - failed,
        criteria.len(),
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
