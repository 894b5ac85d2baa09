//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients c_α = ∂^α f / α! of a function
//! of `nvars` variables up to total degree `order`. Arithmetic is exact on
//! polynomials whose degree does not exceed the order, so derivatives come
//! out without finite-difference noise.
//!
//! Differentiation lowers the number of trustworthy degrees by one: the
//! result lives in the same space but its top-degree coefficients are zero.
//! Callers track the valid order.

use crate::quad::Integrand;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

/// Monomial tables for a fixed (nvars, order).
pub struct JetSpace {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    degree_start: Vec<usize>,
    mul: Vec<(u32, u32, u32)>,
    // per variable: (source, target, factor) for ∂/∂x_i
    deriv: Vec<Vec<(u32, u32, f64)>>,
    // per variable: (source, target) for multiplication by x_i
    shift: Vec<Vec<(u32, u32)>>,
    // per monomial (except 1): the monomial divided by its first variable
    parent: Vec<(u32, u8)>,
}

static SPACES: Lazy<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn monomials(nvars: usize, degree: usize) -> Vec<Vec<u8>> {
    // Lexicographically descending exponent vectors of the given degree.
    if nvars == 1 {
        return vec![vec![degree as u8]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in monomials(nvars - 1, degree - first) {
            rest.insert(0, first as u8);
            out.push(rest);
        }
    }
    out
}

impl JetSpace {
    /// Shared space for the given shape; tables are built once per process.
    pub fn get(nvars: usize, order: usize) -> Arc<JetSpace> {
        let mut cache = SPACES.lock().unwrap();
        cache
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, order)))
            .clone()
    }

    fn build(nvars: usize, order: usize) -> JetSpace {
        assert!(nvars >= 1);
        let mut exps = Vec::new();
        let mut degree_start = Vec::new();
        for d in 0..=order {
            degree_start.push(exps.len());
            exps.extend(monomials(nvars, d));
        }
        degree_start.push(exps.len());
        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let degree = |e: &Vec<u8>| e.iter().map(|&x| x as usize).sum::<usize>();
        let mut mul = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            let da = degree(a);
            for (j, b) in exps.iter().enumerate() {
                if da + degree(b) > order {
                    continue;
                }
                let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                mul.push((i as u32, j as u32, index[&s] as u32));
            }
        }
        let mut deriv = vec![Vec::new(); nvars];
        for (v, table) in deriv.iter_mut().enumerate() {
            for (i, e) in exps.iter().enumerate() {
                if e[v] > 0 {
                    let mut t = e.clone();
                    t[v] -= 1;
                    table.push((i as u32, index[&t] as u32, e[v] as f64));
                }
            }
        }
        let mut shift = vec![Vec::new(); nvars];
        for (v, table) in shift.iter_mut().enumerate() {
            for (i, e) in exps.iter().enumerate() {
                let mut t = e.clone();
                t[v] += 1;
                if let Some(&k) = index.get(&t) {
                    table.push((i as u32, k as u32));
                }
            }
        }
        let parent = exps
            .iter()
            .map(|e| match e.iter().position(|&k| k > 0) {
                Some(v) => {
                    let mut t = e.clone();
                    t[v] -= 1;
                    (index[&t] as u32, v as u8)
                }
                None => (0, 0),
            })
            .collect();
        JetSpace {
            nvars,
            order,
            exps,
            index,
            degree_start,
            mul,
            deriv,
            shift,
            parent,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Exponent vector of the i-th monomial.
    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    /// Index of the monomial with the given exponents, if within the order.
    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    /// Range of indices holding monomials of total degree d.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.exps[i].iter().map(|&x| x as usize).sum()
    }
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetSpace(nvars={}, order={})", self.nvars, self.order)
    }
}

/// Truncated Taylor expansion around a point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet{:?}", self.c)
    }
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, v: f64) -> Jet {
        let mut c = vec![0.0; space.len()];
        c[0] = v;
        Jet {
            space: space.clone(),
            c,
        }
    }

    pub fn zero(space: &Arc<JetSpace>) -> Jet {
        Jet::constant(space, 0.0)
    }

    /// The coordinate function x_i expanded around x_i = value.
    pub fn variable(space: &Arc<JetSpace>, i: usize, value: f64) -> Jet {
        let mut j = Jet::constant(space, value);
        if space.order >= 1 {
            let mut e = vec![0u8; space.nvars];
            e[i] = 1;
            j.c[space.index[&e]] = 1.0;
        }
        j
    }

    pub fn from_coeffs(space: &Arc<JetSpace>, c: Vec<f64>) -> Jet {
        assert_eq!(c.len(), space.len());
        Jet {
            space: space.clone(),
            c,
        }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.c
    }

    /// Taylor coefficient of the monomial with the given exponents.
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.space.index_of(exps).map_or(0.0, |i| self.c[i])
    }

    /// Partial derivative ∂^α f at the expansion point.
    pub fn partial(&self, exps: &[u8]) -> f64 {
        let fact: f64 = exps
            .iter()
            .map(|&k| (1..=k as u64).product::<u64>() as f64)
            .product();
        self.coeff(exps) * fact
    }

    /// ∂f/∂x_i as a jet (valid to one degree less).
    pub fn derivative(&self, i: usize) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        for &(src, dst, k) in &self.space.deriv[i] {
            c[dst as usize] = k * self.c[src as usize];
        }
        Jet {
            space: self.space.clone(),
            c,
        }
    }

    /// self · (a + x_i), exact and much cheaper than a general product.
    pub fn mul_linear(&self, i: usize, a: f64) -> Jet {
        let mut c: Vec<f64> = self.c.iter().map(|v| v * a).collect();
        for &(src, dst) in &self.space.shift[i] {
            c[dst as usize] += self.c[src as usize];
        }
        Jet {
            space: self.space.clone(),
            c,
        }
    }

    /// Evaluate the polynomial with these coefficients at the jets `inner`
    /// (one per variable, all in a common target space).
    ///
    /// Exact up to the target order when `self` is a polynomial. When `self`
    /// is itself a truncated series, the result is correct to the target
    /// order only if every inner jet has zero constant term.
    pub fn compose(&self, inner: &[Jet]) -> Jet {
        compose_many(std::slice::from_ref(self), inner).pop().unwrap()
    }

    /// Evaluate this polynomial at point + δ, as a jet in δ in `target`.
    pub fn shifted(&self, point: &[f64], target: &Arc<JetSpace>) -> Jet {
        shifted_many(std::slice::from_ref(self), point, target).pop().unwrap()
    }

    /// Re-express in another space with the same variables, keeping the
    /// coefficients both spaces share (truncating or zero-padding).
    pub fn project(&self, target: &Arc<JetSpace>) -> Jet {
        assert_eq!(self.space.nvars, target.nvars);
        let mut c = vec![0.0; target.len()];
        let k = c.len().min(self.c.len());
        c[..k].copy_from_slice(&self.c[..k]);
        Jet {
            space: target.clone(),
            c,
        }
    }

    /// Zero all coefficients above the given degree.
    pub fn truncated(&self, degree: usize) -> Jet {
        let mut j = self.clone();
        if degree < self.space.order {
            let start = self.space.degree_start[degree + 1];
            for v in &mut j.c[start..] {
                *v = 0.0;
            }
        }
        j
    }

    /// The jet of x ↦ f(σx), i.e. c_α ↦ σ^{|α|} c_α.
    pub fn rescaled(&self, sigma: f64) -> Jet {
        let mut j = self.clone();
        let mut p = 1.0;
        for d in 0..=self.space.order {
            for i in self.space.degree_range(d) {
                j.c[i] *= p;
            }
            p *= sigma;
        }
        j
    }

    /// Evaluate the Taylor polynomial at a displacement h.
    pub fn eval(&self, h: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, e) in self.space.exps.iter().enumerate() {
            if self.c[i] != 0.0 {
                let mut t = self.c[i];
                for (hv, &k) in h.iter().zip(e) {
                    t *= hv.powi(k as i32);
                }
                s += t;
            }
        }
        s
    }

    /// Compose with a univariate function given its Taylor coefficients
    /// d_k = f^{(k)}(a)/k! at a = self.value().
    pub fn compose_taylor(&self, d: &[f64]) -> Jet {
        let order = self.space.order;
        let mut h = self.clone();
        h.c[0] = 0.0;
        let top = order.min(d.len() - 1);
        let mut acc = Jet::constant(&self.space, d[top]);
        for k in (0..top).rev() {
            acc = &acc * &h;
            acc.c[0] += d[k];
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut d = vec![e; self.space.order + 1];
        let mut f = 1.0;
        for (k, v) in d.iter_mut().enumerate().skip(1) {
            f *= k as f64;
            *v = e / f;
        }
        self.compose_taylor(&d)
    }

    /// Natural logarithm; the value must be positive.
    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut d = vec![a.ln(); self.space.order + 1];
        for (k, v) in d.iter_mut().enumerate().skip(1) {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            *v = sign / (k as f64 * a.powi(k as i32));
        }
        self.compose_taylor(&d)
    }

    /// x^p for real p; the value must be positive unless p is an integer.
    pub fn powf(&self, p: f64) -> Jet {
        if p.fract() == 0.0 && p.abs() < 64.0 {
            return self.powi(p as i32);
        }
        let a = self.value();
        let mut d = vec![0.0; self.space.order + 1];
        let mut binom = 1.0;
        for (k, v) in d.iter_mut().enumerate() {
            *v = binom * a.powf(p - k as f64);
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose_taylor(&d)
    }

    pub fn powi(&self, p: i32) -> Jet {
        if p < 0 {
            return self.powi(-p).recip();
        }
        let mut result = Jet::constant(&self.space, 1.0);
        let mut base = self.clone();
        let mut e = p as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let mut d = vec![0.0; self.space.order + 1];
        let mut p = 1.0 / a;
        for v in d.iter_mut() {
            *v = p;
            p *= -1.0 / a;
        }
        self.compose_taylor(&d)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn sin(&self) -> Jet {
        self.compose_trig(false)
    }

    pub fn cos(&self) -> Jet {
        self.compose_trig(true)
    }

    fn compose_trig(&self, cosine: bool) -> Jet {
        let (s, c) = self.value().sin_cos();
        // derivatives cycle sin → cos → −sin → −cos
        let cycle = if cosine { [c, -s, -c, s] } else { [s, c, -s, -c] };
        let mut d = vec![0.0; self.space.order + 1];
        let mut f = 1.0;
        for (k, v) in d.iter_mut().enumerate() {
            if k > 0 {
                f *= k as f64;
            }
            *v = cycle[k % 4] / f;
        }
        self.compose_taylor(&d)
    }

    pub fn tan(&self) -> Jet {
        &self.sin() * &self.cos().recip()
    }

    pub fn sinh(&self) -> Jet {
        let e = self.exp();
        let m = self.neg_ref().exp();
        (&e - &m) * 0.5
    }

    pub fn cosh(&self) -> Jet {
        let e = self.exp();
        let m = self.neg_ref().exp();
        (&e + &m) * 0.5
    }

    fn neg_ref(&self) -> Jet {
        self * -1.0
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &rhs.space));
        let mut c = vec![0.0; self.c.len()];
        let (a, b) = (&self.c, &rhs.c);
        for &(i, j, k) in &self.space.mul {
            let x = a[i as usize];
            if x != 0.0 {
                c[k as usize] += x * b[j as usize];
            }
        }
        Jet {
            space: self.space.clone(),
            c,
        }
    }
}

impl Mul<Jet> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            c: self.c.iter().map(|v| v * rhs).collect(),
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for v in &mut self.c {
            *v *= rhs;
        }
        self
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let mut r = self.clone();
        r += rhs;
        r
    }
}

impl Add<Jet> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self += &rhs;
        self
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let mut r = self.clone();
        for (a, b) in r.c.iter_mut().zip(&rhs.c) {
            *a -= b;
        }
        r
    }
}

impl Sub<Jet> for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Integrand for Jet {
    fn scaled(&self, a: f64) -> Self {
        self * a
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        for (s, v) in self.c.iter_mut().zip(&x.c) {
            *s += a * v;
        }
    }
    fn norm(&self) -> f64 {
        self.max_abs()
    }
}

/// Evaluate several polynomials over the same space at common inner jets,
/// sharing the table of monomials. See [`Jet::compose`].
pub fn compose_many(polys: &[Jet], inner: &[Jet]) -> Vec<Jet> {
    let space = polys[0].space.clone();
    assert_eq!(inner.len(), space.nvars);
    let target = inner[0].space().clone();
    let mut powers: Vec<Jet> = Vec::with_capacity(space.len());
    powers.push(Jet::constant(&target, 1.0));
    let mut acc: Vec<Jet> = polys.iter().map(|p| Jet::constant(&target, p.c[0])).collect();
    for idx in 1..space.len() {
        let (prev, v) = space.parent[idx];
        let p = &powers[prev as usize] * &inner[v as usize];
        for (a, poly) in acc.iter_mut().zip(polys) {
            if poly.c[idx] != 0.0 {
                a.add_scaled(poly.c[idx], &p);
            }
        }
        powers.push(p);
    }
    acc
}

/// Evaluate several polynomials at point + δ as jets in δ.
pub fn shifted_many(polys: &[Jet], point: &[f64], target: &Arc<JetSpace>) -> Vec<Jet> {
    let space = polys[0].space.clone();
    assert_eq!(target.nvars, space.nvars);
    let mut powers: Vec<Jet> = Vec::with_capacity(space.len());
    powers.push(Jet::constant(target, 1.0));
    let mut acc: Vec<Jet> = polys.iter().map(|p| Jet::constant(target, p.c[0])).collect();
    for idx in 1..space.len() {
        let (prev, v) = space.parent[idx];
        let v = v as usize;
        let p = powers[prev as usize].mul_linear(v, point[v]);
        for (a, poly) in acc.iter_mut().zip(polys) {
            if poly.c[idx] != 0.0 {
                a.add_scaled(poly.c[idx], &p);
            }
        }
        powers.push(p);
    }
    acc
}

/// Inverse of a matrix of jets (row-major, n×n).
///
/// The constant part is inverted numerically and the nilpotent remainder is
/// handled by the Neumann series A^{-1} = Σ_k (−A_0^{-1}N)^k A_0^{-1}, which
/// terminates after `order` terms.
pub fn invert_matrix(a: &[Jet], n: usize) -> Option<Vec<Jet>> {
    let space = a[0].space().clone();
    let a0 = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i * n + j].value());
    let inv0 = a0.try_inverse()?;
    let inv0_jets: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(&space, inv0[(k / n, k % n)]))
        .collect();
    // M = −A_0^{-1} N
    let mut nil: Vec<Jet> = a.to_vec();
    for j in &mut nil {
        j.c[0] = 0.0;
    }
    let m_mat = mat_mul(&inv0_jets, &nil, n).into_iter().map(|j| -j).collect::<Vec<_>>();
    let mut result = inv0_jets.clone();
    let mut term = inv0_jets;
    for _ in 0..space.order() {
        term = mat_mul(&m_mat, &term, n);
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
    }
    Some(result)
}

/// Product of two n×n row-major jet matrices.
pub fn mat_mul(a: &[Jet], b: &[Jet], n: usize) -> Vec<Jet> {
    let space = a[0].space().clone();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut s = Jet::zero(&space);
            for k in 0..n {
                s += &(&a[i * n + k] * &b[k * n + j]);
            }
            out.push(s);
        }
    }
    out
}

/// Determinant of an n×n row-major jet matrix by Gaussian elimination,
/// pivoting on the constant parts.
pub fn determinant(a: &[Jet], n: usize) -> Jet {
    let space = a[0].space().clone();
    let mut m = a.to_vec();
    let mut det = Jet::constant(&space, 1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| {
                m[x * n + col]
                    .value()
                    .abs()
                    .total_cmp(&m[y * n + col].value().abs())
            })
            .unwrap();
        if m[piv * n + col].value() == 0.0 {
            return Jet::zero(&space);
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col].clone();
        det = &det * &p;
        let pinv = p.recip();
        for r in col + 1..n {
            let f = &m[r * n + col] * &pinv;
            for k in col..n {
                let t = &f * &m[col * n + k];
                m[r * n + k] = &m[r * n + k] - &t;
            }
        }
    }
    det
}
