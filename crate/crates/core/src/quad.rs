//! Quadrature and extrapolation primitives.
//!
//! The adaptive integrator is the 21-point Gauss–Kronrod rule with global
//! bisection of the interval carrying the largest error, the same strategy
//! as QUADPACK's QAG. It is generic over the integrand value so that the same
//! code integrates real, complex, vector and jet-valued functions.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Values that can be integrated: a real vector space with a norm.
pub trait Integrand: Clone {
    fn scaled(&self, a: f64) -> Self;
    fn add_scaled(&mut self, a: f64, x: &Self);
    fn norm(&self) -> f64;
}

impl Integrand for f64 {
    fn scaled(&self, a: f64) -> Self {
        a * self
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn scaled(&self, a: f64) -> Self {
        self * a
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

impl<T: Integrand> Integrand for Vec<T> {
    fn scaled(&self, a: f64) -> Self {
        self.iter().map(|x| x.scaled(a)).collect()
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            s.add_scaled(a, v);
        }
    }
    fn norm(&self) -> f64 {
        self.iter().map(Integrand::norm).fold(0.0, f64::max)
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_866_690_776,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Weights of the embedded 10-point Gauss rule, nodes XGK[1], XGK[3], …
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One application of the 21-point Kronrod rule on [a, b]: (value, error).
pub fn gauss_kronrod21<T, F>(f: &F, a: f64, b: f64) -> (T, f64)
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc.scaled(WGK[10]);
    let mut gauss = fc.scaled(0.0);
    let mut abs_sum = WGK[10] * fc.norm();
    let mut vals = Vec::with_capacity(21);
    vals.push((WGK[10], fc));
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron.add_scaled(WGK[j], &f1);
        kron.add_scaled(WGK[j], &f2);
        if j % 2 == 1 {
            gauss.add_scaled(WG[j / 2], &f1);
            gauss.add_scaled(WG[j / 2], &f2);
        }
        abs_sum += WGK[j] * (f1.norm() + f2.norm());
        vals.push((WGK[j], f1));
        vals.push((WGK[j], f2));
    }
    // QUADPACK error heuristic: scale |K − G| by the variation of f.
    let mean = kron.scaled(0.5);
    let mut asc = 0.0;
    for (w, v) in &vals {
        let mut d = v.clone();
        d.add_scaled(-1.0, &mean);
        asc += w * d.norm();
    }
    let mut diff = kron.clone();
    diff.add_scaled(-1.0, &gauss);
    let habs = h.abs();
    let mut err = diff.norm() * habs;
    let asc = asc * habs;
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let res_abs = abs_sum * habs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (kron.scaled(h), err)
}

/// Integral value together with an error estimate.
#[derive(Clone, Debug)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

impl<T> Estimate<T> {
    /// Turn a non-converged estimate into a quadrature error.
    pub fn require(self, tol: f64) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Quadrature {
                error: self.error,
                tol,
            })
        }
    }
}

/// Adaptive Gauss–Kronrod integrator settings.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    /// ∫_a^b f.
    pub fn integrate<T, F>(&self, f: F, a: f64, b: f64) -> Estimate<T>
    where
        T: Integrand,
        F: Fn(f64) -> T,
    {
        self.integrate_breaks(f, &[a, b])
    }

    /// ∫ f over [p_0, p_last], starting from the subintervals given by the
    /// break points (useful near known peaks or kinks).
    pub fn integrate_breaks<T, F>(&self, f: F, points: &[f64]) -> Estimate<T>
    where
        T: Integrand,
        F: Fn(f64) -> T,
    {
        assert!(points.len() >= 2);
        let mut pieces: Vec<(f64, f64, T, f64)> = points
            .windows(2)
            .map(|w| {
                let (v, e) = gauss_kronrod21(&f, w[0], w[1]);
                (w[0], w[1], v, e)
            })
            .collect();
        loop {
            let (total, err) = sum_pieces(&pieces);
            let tol = self.abs_tol.max(self.rel_tol * total.norm());
            if err <= tol || pieces.len() >= self.max_intervals {
                return Estimate {
                    value: total,
                    error: err,
                    intervals: pieces.len(),
                    converged: err <= tol,
                };
            }
            let worst = pieces
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
                .map(|(i, _)| i)
                .unwrap();
            let (a, b, _, _) = pieces.swap_remove(worst);
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                let (total, err) = sum_pieces(&pieces);
                return Estimate {
                    value: total,
                    error: err,
                    intervals: pieces.len(),
                    converged: false,
                };
            }
            let (v1, e1) = gauss_kronrod21(&f, a, m);
            let (v2, e2) = gauss_kronrod21(&f, m, b);
            pieces.push((a, m, v1, e1));
            pieces.push((m, b, v2, e2));
        }
    }

    /// ∫_a^∞ f, through the substitution x = a + t/(1−t).
    pub fn integrate_to_infinity<T, F>(&self, f: F, a: f64) -> Estimate<T>
    where
        T: Integrand,
        F: Fn(f64) -> T,
    {
        self.integrate(
            |t: f64| {
                let u = 1.0 - t;
                f(a + t / u).scaled(1.0 / (u * u))
            },
            0.0,
            1.0,
        )
    }

    /// ∫_{−∞}^{∞} f, through x = t/(1−t²).
    pub fn integrate_real_line<T, F>(&self, f: F) -> Estimate<T>
    where
        T: Integrand,
        F: Fn(f64) -> T,
    {
        self.integrate_breaks(
            |t: f64| {
                let u = 1.0 - t * t;
                f(t / u).scaled((1.0 + t * t) / (u * u))
            },
            &[-1.0, 0.0, 1.0],
        )
    }
}

fn sum_pieces<T: Integrand>(pieces: &[(f64, f64, T, f64)]) -> (T, f64) {
    // Summing in order of the left end point keeps the result independent
    // of the bisection history.
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    order.sort_by(|&i, &j| pieces[i].0.total_cmp(&pieces[j].0));
    let mut total = pieces[order[0]].2.clone();
    let mut err = pieces[order[0]].3;
    for &i in &order[1..] {
        total.add_scaled(1.0, &pieces[i].2);
        err += pieces[i].3;
    }
    (total, err)
}

/// Extrapolated limit with an error estimate.
#[derive(Clone, Debug)]
pub struct Extrapolated<T> {
    pub value: T,
    pub error: f64,
}

/// Weights w with Σ w_i = 1 and Σ w_i h_i^p = 0 for every p in `powers`
/// (least squares when there are more samples than unknowns).
fn elimination_weights(h: &[f64], powers: &[f64]) -> Vec<f64> {
    let rows = h.len();
    let cols = powers.len() + 1;
    assert!(rows >= cols, "need at least {cols} samples");
    let m = DMatrix::from_fn(rows, cols, |i, j| {
        if j == 0 {
            1.0
        } else {
            h[i].powf(powers[j - 1])
        }
    });
    // value = e_0ᵀ (MᵀM)^{-1} Mᵀ v
    let mtm = m.transpose() * &m;
    let mut e0 = DVector::zeros(cols);
    e0[0] = 1.0;
    let y = mtm
        .lu()
        .solve(&e0)
        .expect("extrapolation design matrix is singular");
    (m * y).iter().copied().collect()
}

fn combine<T: Integrand>(w: &[f64], v: &[T]) -> T {
    let mut acc = v[0].scaled(w[0]);
    for (wi, vi) in w.iter().zip(v).skip(1) {
        acc.add_scaled(*wi, vi);
    }
    acc
}

/// Extrapolate samples v_i = A + Σ_p c_p h_i^p + … to h → 0.
///
/// The error estimate is the change in the limit when the sample with the
/// largest h is dropped. An over-determined fit keeps its powers on the
/// remaining samples; otherwise the highest power is dropped as well.
pub fn extrapolate<T: Integrand>(h: &[f64], v: &[T], powers: &[f64]) -> Extrapolated<T> {
    assert_eq!(h.len(), v.len());
    let w = elimination_weights(h, powers);
    let value = combine(&w, v);
    let error = if powers.is_empty() || h.len() < 2 {
        0.0
    } else {
        let imax = (0..h.len())
            .max_by(|&i, &j| h[i].total_cmp(&h[j]))
            .unwrap();
        let hs: Vec<f64> = (0..h.len()).filter(|&i| i != imax).map(|i| h[i]).collect();
        let vs: Vec<T> = (0..h.len()).filter(|&i| i != imax).map(|i| v[i].clone()).collect();
        let low = if hs.len() > powers.len() {
            powers
        } else {
            &powers[..powers.len() - 1]
        };
        let w2 = elimination_weights(&hs, low);
        let mut d = combine(&w2, &vs);
        d.add_scaled(-1.0, &value);
        d.norm()
    };
    Extrapolated { value, error }
}

/// (2πi)^{-1} ∮ f(α) dα over the circle |α − center| = radius, by the
/// N-point trapezoid rule. The error estimate compares with the N/2-point
/// rule on every second node.
pub fn circle_integral<F>(f: F, center: Complex64, radius: f64, n: usize) -> (Complex64, f64)
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    assert!(n >= 4 && n.is_multiple_of(2));
    let terms: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            f(center + radius * phase) * radius * phase
        })
        .collect();
    let full: Complex64 = terms.iter().sum::<Complex64>() / n as f64;
    let half: Complex64 = terms.iter().step_by(2).sum::<Complex64>() / (n / 2) as f64;
    (full, (full - half).norm())
}
