//! Metrics given by component expressions on a single chart, and the
//! geometry derived from them.
//!
//! Conventions (fixed throughout the crate):
//!
//! * Lorentzian signature (+, −, …, −);
//! * Γ^i_{jk} = ½ g^{il}(∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk});
//! * R^i_{jkl} = ∂_kΓ^i_{lj} − ∂_lΓ^i_{kj} + Γ^i_{km}Γ^m_{lj} − Γ^i_{lm}Γ^m_{kj};
//! * Ric_{kl} = R^i_{kil}, R = g^{kl} Ric_{kl}.
//!
//! With these, the unit round S³ has R = +6 and the Einstein static
//! universe dt² − h_{S³} has R = −6.

mod benchmarks;
mod curvature;
mod geodesic;
mod normal;
mod operator;

pub use benchmarks::{benchmark, benchmarks, Benchmark, BENCHMARK_NAMES};
pub use curvature::{curvature, curvature_from_jets, CurvatureBundle};
pub use geodesic::{geodesic, geodesic_full, GeodesicEnd};
pub use normal::{normal_coordinates, orthonormal_frame, NormalChart};
pub use operator::{
    apply_p, apply_p_expanded, apply_p_expanded_jet, apply_p_jet, b_vector, b_vector_contracted, b_vector_jet,
};

use crate::error::{Error, Result};
use crate::expr::{Expr, GRAMMAR_VERSION};
use crate::jet::{determinant, Jet, JetSpace};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Lorentzian,
    Riemannian,
}

impl Signature {
    /// Diagonal of the model metric: (+,−,…,−) or (+,…,+).
    pub fn eta(self, n: usize) -> Vec<f64> {
        match self {
            Signature::Lorentzian => (0..n).map(|i| if i == 0 { 1.0 } else { -1.0 }).collect(),
            Signature::Riemannian => vec![1.0; n],
        }
    }
}

/// Numerical tolerances of the geometry layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub det: f64,
    pub tensor: f64,
    pub op: f64,
    pub ode: f64,
    pub transport: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            det: 1e-12,
            tensor: 1e-8,
            op: 1e-9,
            ode: 1e-10,
            transport: 1e-8,
        }
    }
}

/// On-disk form of a metric definition.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_grammar")]
    pub grammar: u32,
    pub dim: usize,
    pub signature: Signature,
    pub coords: Vec<String>,
    pub g: Vec<Vec<String>>,
    #[serde(default)]
    pub domain: BTreeMap<String, [f64; 2]>,
}

fn default_grammar() -> u32 {
    GRAMMAR_VERSION
}

/// A metric g_{jk}(x) on a coordinate box.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub name: String,
    dim: usize,
    signature: Signature,
    coords: Vec<String>,
    g: Vec<Expr>,
    domain: Vec<(f64, f64)>,
    // component pairs whose expressions differ textually and so are
    // compared numerically at every query
    asymmetric_pairs: Vec<(usize, usize)>,
    pub tol: Tolerances,
}

/// All metric components at a point as jets of a common order.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub point: Vec<f64>,
    /// g_{jk}, row-major.
    pub g: Vec<Jet>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        self.g[0].space()
    }

    pub fn value(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.g[i * n + j].value())
    }
}

impl MetricField {
    pub fn new(
        name: &str,
        signature: Signature,
        coords: &[&str],
        g: &[&[&str]],
        domain: &[(f64, f64)],
    ) -> Result<MetricField> {
        let file = MetricFile {
            name: Some(name.to_string()),
            grammar: GRAMMAR_VERSION,
            dim: coords.len(),
            signature,
            coords: coords.iter().map(|s| s.to_string()).collect(),
            g: g.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
            domain: coords
                .iter()
                .zip(domain)
                .map(|(c, &(lo, hi))| (c.to_string(), [lo, hi]))
                .collect(),
        };
        MetricField::from_file(file)
    }

    pub fn from_json(text: &str) -> Result<MetricField> {
        let file: MetricFile = serde_json::from_str(text)?;
        MetricField::from_file(file)
    }

    pub fn from_file(file: MetricFile) -> Result<MetricField> {
        let n = file.dim;
        if file.grammar != GRAMMAR_VERSION {
            return Err(Error::Invalid(format!(
                "expression grammar version {} not supported (expected {GRAMMAR_VERSION})",
                file.grammar
            )));
        }
        if n < 2 {
            return Err(Error::Invalid(format!("dim must be at least 2, got {n}")));
        }
        if file.coords.len() != n {
            return Err(Error::Invalid(format!(
                "expected {n} coordinate names, got {}",
                file.coords.len()
            )));
        }
        for (i, c) in file.coords.iter().enumerate() {
            if file.coords[..i].contains(c) {
                return Err(Error::Invalid(format!("duplicate coordinate name '{c}'")));
            }
        }
        if file.g.len() != n || file.g.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("g must be a {n}×{n} array")));
        }
        let mut g = Vec::with_capacity(n * n);
        for (i, row) in file.g.iter().enumerate() {
            for (j, src) in row.iter().enumerate() {
                let e = Expr::parse(src, &file.coords).map_err(|e| match e {
                    Error::Parse { column, message } => Error::Parse {
                        column,
                        message: format!("in g[{i}][{j}] = \"{src}\": {message}"),
                    },
                    other => other,
                })?;
                g.push(e);
            }
        }
        let mut asymmetric_pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if g[i * n + j] != g[j * n + i] {
                    asymmetric_pairs.push((i, j));
                }
            }
        }
        for key in file.domain.keys() {
            if !file.coords.contains(key) {
                return Err(Error::Invalid(format!("domain names unknown coordinate '{key}'")));
            }
        }
        let domain = file
            .coords
            .iter()
            .map(|c| match file.domain.get(c) {
                Some(&[lo, hi]) if lo < hi => Ok((lo, hi)),
                Some(&[lo, hi]) => Err(Error::Invalid(format!("empty domain [{lo}, {hi}] for {c}"))),
                None => Ok((f64::NEG_INFINITY, f64::INFINITY)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricField {
            name: file.name.unwrap_or_else(|| "metric".to_string()),
            dim: n,
            signature: file.signature,
            coords: file.coords,
            g,
            domain,
            asymmetric_pairs,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// Expression of g_{ij}.
    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.g[i * self.dim + j]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.domain).all(|(v, (lo, hi))| v > lo && v < hi)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Invalid(format!(
                "point has {} coordinates, metric has dim {}",
                x.len(),
                self.dim
            )));
        }
        if !self.contains(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        Ok(())
    }

    /// Metric components at x without any validation.
    pub(crate) fn raw_value(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.g[i * n + j].eval_f64(x)?;
            }
        }
        Ok(m)
    }

    /// Evaluate the metric at x and check symmetry, invertibility and
    /// signature.
    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let m = self.raw_value(x)?;
        self.validate(x, &m)?;
        Ok(m)
    }

    fn validate(&self, x: &[f64], m: &DMatrix<f64>) -> Result<()> {
        let n = self.dim;
        for &(i, j) in &self.asymmetric_pairs {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            if (a - b).abs() > self.tol.tensor * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::Asymmetric {
                    point: x.to_vec(),
                    i,
                    j,
                });
            }
        }
        let sym = (m + m.transpose()) * 0.5;
        let det = sym.determinant();
        if !det.is_finite() || det.abs() <= self.tol.det {
            return Err(Error::SingularMetric {
                point: x.to_vec(),
                det,
            });
        }
        let eig = SymmetricEigen::new(sym);
        let pos = eig.eigenvalues.iter().filter(|&&e| e > 0.0).count();
        let expected = match self.signature {
            Signature::Lorentzian => 1,
            Signature::Riemannian => n,
        };
        if pos != expected {
            let describe = |p: usize| {
                let mut s = "(".to_string();
                for k in 0..n {
                    s.push(if k < p { '+' } else { '-' });
                    if k + 1 < n {
                        s.push(',');
                    }
                }
                s + ")"
            };
            return Err(Error::Signature {
                point: x.to_vec(),
                found: describe(pos),
                expected: describe(expected),
            });
        }
        Ok(())
    }

    /// Value and all partial derivatives up to total degree `order` of every
    /// component, exact for the expressions.
    pub fn eval_metric_jet(&self, x: &[f64], order: usize) -> Result<MetricJet> {
        self.check_point(x)?;
        let space = JetSpace::get(self.dim, order);
        let vars: Vec<Jet> = x.iter().enumerate().map(|(i, &v)| Jet::variable(&space, i, v)).collect();
        let jets = self.eval_at_jets(&vars)?;
        self.validate(x, &DMatrix::from_fn(self.dim, self.dim, |i, j| jets[i * self.dim + j].value()))?;
        Ok(MetricJet {
            point: x.to_vec(),
            g: jets,
        })
    }

    /// Components evaluated at arbitrary coordinate jets (used for
    /// pull-backs). Symmetric pairs are evaluated once.
    pub fn eval_at_jets(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let n = self.dim;
        let mut out: Vec<Option<Jet>> = vec![None; n * n];
        for i in 0..n {
            for j in 0..n {
                if j < i && !self.asymmetric_pairs.contains(&(j, i)) {
                    out[i * n + j] = out[j * n + i].clone();
                    continue;
                }
                let e = &self.g[i * n + j];
                out[i * n + j] = Some(match e.as_constant() {
                    Some(c) => Jet::constant(x[0].space(), c),
                    None => e.eval(x)?,
                });
            }
        }
        // Use the symmetrized metric from here on.
        let mut g: Vec<Jet> = out.into_iter().map(Option::unwrap).collect();
        for &(i, j) in &self.asymmetric_pairs {
            let s = (&g[i * n + j] + &g[j * n + i]) * 0.5;
            g[i * n + j] = s.clone();
            g[j * n + i] = s;
        }
        Ok(g)
    }
}

/// |det g| as a jet.
pub(crate) fn abs_det(g: &[Jet], n: usize) -> Jet {
    let d = determinant(g, n);
    if d.value() < 0.0 {
        -d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_component_jets() {
        let m = MetricField::new(
            "test",
            Signature::Lorentzian,
            &["x0", "x1"],
            &[&["1 + x1^2", "0"], &["0", "-1"]],
            &[(-1.0, 1.0), (-1.0, 1.0)],
        )
        .unwrap();
        let j = m.eval_metric_jet(&[0.0, 0.5], 2).unwrap();
        assert_eq!(j.g[0].value(), 1.25);
        assert_eq!(j.g[0].partial(&[0, 1]), 1.0);
        assert_eq!(j.g[0].partial(&[0, 2]), 2.0);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let text = r#"{"dim": 2, "signature": "lorentzian", "coords": ["t", "x"],
                       "g": [["1", "0"], ["0", "-exp(2*t)"]], "domain": {"t": [-1, 1]}}"#;
        let m = MetricField::from_json(text).unwrap();
        assert!(m.metric_at(&[0.3, 100.0]).is_ok());
        assert!(matches!(m.metric_at(&[2.0, 0.0]), Err(Error::OutsideDomain { .. })));

        let bad = r#"{"dim": 2, "signature": "lorentzian", "coords": ["t", "x"],
                      "g": [["1", "0"], ["0", "-(1 +"]]}"#;
        match MetricField::from_json(bad) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("g[1][1]")),
            other => panic!("{other:?}"),
        }
        let unknown = r#"{"dim": 2, "signature": "lorentzian", "coords": ["t", "x"],
                          "g": [["1", "0"], ["0", "-1"]], "colour": 3}"#;
        assert!(matches!(MetricField::from_json(unknown), Err(Error::Json(_))));
    }

    #[test]
    fn signature_and_singularity_checks() {
        let riem = MetricField::new("e", Signature::Lorentzian, &["a", "b"], &[&["1", "0"], &["0", "1"]], &[(-1.0, 1.0); 2])
            .unwrap();
        assert!(matches!(riem.metric_at(&[0.0, 0.0]), Err(Error::Signature { .. })));
        let sing = MetricField::new("s", Signature::Lorentzian, &["a", "b"], &[&["1", "0"], &["0", "-b^2"]], &[(-1.0, 1.0); 2])
            .unwrap();
        assert!(matches!(sing.metric_at(&[0.0, 0.0]), Err(Error::SingularMetric { .. })));
        let asym = MetricField::new("s", Signature::Lorentzian, &["a", "b"], &[&["1", "a"], &["0", "-1"]], &[(-1.0, 1.0); 2])
            .unwrap();
        assert!(asym.metric_at(&[0.0, 0.0]).is_ok());
        assert!(matches!(asym.metric_at(&[0.5, 0.0]), Err(Error::Asymmetric { .. })));
        let log = MetricField::new("l", Signature::Lorentzian, &["a", "b"], &[&["log(a)", "0"], &["0", "-1"]], &[(-1.0, 3.0); 2])
            .unwrap();
        assert!(matches!(log.eval_metric_jet(&[-0.5, 0.0], 2), Err(Error::Domain(_))));
    }
}
