//! The wave (or Laplace) operator P = |g|^{-1/2} ∂_j |g|^{1/2} g^{jk} ∂_k
//! and its first-order coefficient b^k = |g|^{-1/2} g^{jk} ∂_j |g|^{1/2}.

use super::curvature::christoffel_jets;
use super::{abs_det, MetricField};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{invert_matrix, Jet, JetSpace};

fn singular(g: &[Jet]) -> Error {
    Error::SingularMetric {
        point: vec![],
        det: crate::jet::determinant(g, (g.len() as f64).sqrt() as usize).value(),
    }
}

/// b^k = ½ g^{jk} ∂_j log|g| from metric jets (valid one order lower).
pub fn b_vector_jet(g: &[Jet], n: usize) -> Result<Vec<Jet>> {
    let ginv = invert_matrix(g, n).ok_or_else(|| singular(g))?;
    let logdet = abs_det(g, n).ln();
    let dlog: Vec<Jet> = (0..n).map(|j| logdet.derivative(j)).collect();
    Ok((0..n)
        .map(|k| {
            let mut s = Jet::zero(g[0].space());
            for (j, d) in dlog.iter().enumerate() {
                s += &(&ginv[j * n + k] * d);
            }
            s * 0.5
        })
        .collect())
}

/// b^k(x).
pub fn b_vector(m: &MetricField, x: &[f64]) -> Result<Vec<f64>> {
    let j = m.eval_metric_jet(x, 1)?;
    Ok(b_vector_jet(&j.g, m.dim())?.iter().map(Jet::value).collect())
}

/// b^k(x) through the contracted Christoffel symbols, b^k = g^{jk} Γ^a_{aj}.
pub fn b_vector_contracted(m: &MetricField, x: &[f64]) -> Result<Vec<f64>> {
    let n = m.dim();
    let j = m.eval_metric_jet(x, 1)?;
    let (gamma, ginv) = christoffel_jets(&j.g, n)?;
    Ok((0..n)
        .map(|k| {
            (0..n)
                .map(|jj| {
                    let trace: f64 = (0..n).map(|a| gamma[(a * n + a) * n + jj].value()).sum();
                    ginv[jj * n + k].value() * trace
                })
                .sum()
        })
        .collect())
}

/// P f in divergence form, for jets of f and g in a common space. The result
/// is valid two orders below the inputs.
pub fn apply_p_jet(g: &[Jet], f: &Jet) -> Result<Jet> {
    let n = f.space().nvars();
    let ginv = invert_matrix(g, n).ok_or_else(|| singular(g))?;
    let sqrt_det = abs_det(g, n).sqrt();
    let df: Vec<Jet> = (0..n).map(|k| f.derivative(k)).collect();
    let mut div = Jet::zero(f.space());
    for j in 0..n {
        let mut flux = Jet::zero(f.space());
        for (k, d) in df.iter().enumerate() {
            flux += &(&ginv[j * n + k] * d);
        }
        div += &(&sqrt_det * &flux).derivative(j);
    }
    Ok(&div * &sqrt_det.recip())
}

/// P f in expanded form ∂_j(g^{jk}∂_k f) + b^k ∂_k f.
pub fn apply_p_expanded_jet(g: &[Jet], f: &Jet) -> Result<Jet> {
    let n = f.space().nvars();
    let ginv = invert_matrix(g, n).ok_or_else(|| singular(g))?;
    let b = b_vector_jet(g, n)?;
    let df: Vec<Jet> = (0..n).map(|k| f.derivative(k)).collect();
    let mut out = Jet::zero(f.space());
    for j in 0..n {
        let mut flux = Jet::zero(f.space());
        for (k, d) in df.iter().enumerate() {
            flux += &(&ginv[j * n + k] * d);
        }
        out += &flux.derivative(j);
        out += &(&b[j] * &df[j]);
    }
    Ok(out)
}

fn jets_at(m: &MetricField, f: &Expr, x: &[f64]) -> Result<(Vec<Jet>, Jet)> {
    let gj = m.eval_metric_jet(x, 2)?;
    let space = JetSpace::get(m.dim(), 2);
    let vars: Vec<Jet> = x.iter().enumerate().map(|(i, &v)| Jet::variable(&space, i, v)).collect();
    let fj = f.eval(&vars)?;
    Ok((gj.g, fj))
}

/// (P f)(x) for a scalar expression f in the metric's coordinates.
pub fn apply_p(m: &MetricField, f: &Expr, x: &[f64]) -> Result<f64> {
    let (g, fj) = jets_at(m, f, x)?;
    Ok(apply_p_jet(&g, &fj)?.value())
}

/// (P f)(x) through the expanded form, for cross-checking [`apply_p`].
pub fn apply_p_expanded(m: &MetricField, f: &Expr, x: &[f64]) -> Result<f64> {
    let (g, fj) = jets_at(m, f, x)?;
    Ok(apply_p_expanded_jet(&g, &fj)?.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{benchmark, Signature};

    #[test]
    fn minkowski_box_of_squares() {
        let m = benchmark("minkowski").unwrap().metric;
        let x0sq = Expr::parse("x0^2", m.coords()).unwrap();
        let x1sq = Expr::parse("x1^2", m.coords()).unwrap();
        let p = [0.1, 0.2, 0.3, 0.4];
        assert!((apply_p(&m, &x0sq, &p).unwrap() - 2.0).abs() < 1e-15);
        assert!((apply_p(&m, &x1sq, &p).unwrap() + 2.0).abs() < 1e-15);
        assert_eq!(b_vector(&m, &p).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn b_vector_two_paths_and_hand_expansion() {
        // g11 = −(1 + x1²): |g| = 1 + x1², b^1 = g^{11}·½∂_1 log|g| = −x1/(1 + x1²)²
        let m = MetricField::new(
            "bump",
            Signature::Lorentzian,
            &["x0", "x1", "x2", "x3"],
            &[
                &["1", "0", "0", "0"],
                &["0", "-(1 + x1^2)", "0", "0"],
                &["0", "0", "-1", "0"],
                &["0", "0", "0", "-1"],
            ],
            &[(-2.0, 2.0); 4],
        )
        .unwrap();
        let x = [0.3, 0.7, -0.2, 0.1];
        let a = b_vector(&m, &x).unwrap();
        let b = b_vector_contracted(&m, &x).unwrap();
        let hand = -0.7 / (1.49f64 * 1.49);
        assert!((a[1] - hand).abs() < 1e-14, "{a:?}");
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-14);
        }
    }
}
