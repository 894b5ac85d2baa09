use super::MetricField;
use crate::error::{Error, Result};
use crate::jet::{invert_matrix, Jet};
use serde::Serialize;

/// Christoffel symbols, Riemann and Ricci tensors and scalar curvature at a
/// point.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBundle {
    pub point: Vec<f64>,
    pub dim: usize,
    /// g_{ij}, row-major.
    pub metric: Vec<f64>,
    /// Γ^i_{jk} at index (i·n + j)·n + k.
    pub christoffel: Vec<f64>,
    /// R^i_{jkl} at index ((i·n + j)·n + k)·n + l.
    pub riemann: Vec<f64>,
    /// Ric_{kl}, row-major.
    pub ricci: Vec<f64>,
    pub scalar: f64,
}

impl CurvatureBundle {
    pub fn christoffel(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.christoffel[(i * n + j) * n + k]
    }

    pub fn riemann(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.riemann[((i * n + j) * n + k) * n + l]
    }

    /// R_{ijkl} = g_{im} R^m_{jkl}.
    pub fn riemann_lowered(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        (0..self.dim)
            .map(|m| self.metric[i * self.dim + m] * self.riemann(m, j, k, l))
            .sum()
    }

    pub fn ricci(&self, k: usize, l: usize) -> f64 {
        self.ricci[k * self.dim + l]
    }

    /// Largest violation of the algebraic symmetries of R_{ijkl}
    /// (antisymmetry in each pair, pair exchange, first Bianchi identity),
    /// relative to 1 + max |R_{ijkl}|.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim;
        let mut low = vec![0.0; n * n * n * n];
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        low[idx(i, j, k, l)] = self.riemann_lowered(i, j, k, l);
                    }
                }
            }
        }
        let scale = 1.0 + low.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = low[idx(i, j, k, l)];
                        worst = worst
                            .max((r + low[idx(j, i, k, l)]).abs())
                            .max((r + low[idx(i, j, l, k)]).abs())
                            .max((r - low[idx(k, l, i, j)]).abs())
                            .max((r + low[idx(i, k, l, j)] + low[idx(i, l, j, k)]).abs());
                    }
                }
            }
        }
        worst / scale
    }
}

/// Γ^i_{jk} as jets from metric jets of order q (valid to order q − 1).
/// Returns (Γ, g^{-1}) with Γ at index (i·n + j)·n + k.
pub fn christoffel_jets(g: &[Jet], n: usize) -> Result<(Vec<Jet>, Vec<Jet>)> {
    let ginv = invert_matrix(g, n).ok_or_else(|| Error::SingularMetric {
        point: vec![],
        det: 0.0,
    })?;
    let dg: Vec<Vec<Jet>> = (0..n).map(|a| g.iter().map(|c| c.derivative(a)).collect()).collect();
    // Γ_{l,jk} = ½(∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk})
    let space = g[0].space().clone();
    let mut first = vec![Jet::zero(&space); n * n * n];
    for l in 0..n {
        for j in 0..n {
            for k in j..n {
                let v = (&(&dg[j][l * n + k] + &dg[k][l * n + j]) - &dg[l][j * n + k]) * 0.5;
                first[(l * n + j) * n + k] = v.clone();
                first[(l * n + k) * n + j] = v;
            }
        }
    }
    let mut gamma = vec![Jet::zero(&space); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut s = Jet::zero(&space);
                for l in 0..n {
                    s += &(&ginv[i * n + l] * &first[(l * n + j) * n + k]);
                }
                gamma[(i * n + j) * n + k] = s.clone();
                gamma[(i * n + k) * n + j] = s;
            }
        }
    }
    Ok((gamma, ginv))
}

/// Curvature at the expansion point of metric jets of order ≥ 2.
pub fn curvature_from_jets(point: &[f64], g: &[Jet]) -> Result<CurvatureBundle> {
    let n = point.len();
    if g[0].space().order() < 2 {
        return Err(Error::JetOrder {
            needed: 2,
            have: g[0].space().order(),
        });
    }
    let (gamma, ginv) = christoffel_jets(g, n)?;
    let gidx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let gv: Vec<f64> = gamma.iter().map(Jet::value).collect();
    let mut riemann = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut r = gamma[gidx(i, l, j)].partial(&unit(n, k))
                        - gamma[gidx(i, k, j)].partial(&unit(n, l));
                    for m in 0..n {
                        r += gv[gidx(i, k, m)] * gv[gidx(m, l, j)] - gv[gidx(i, l, m)] * gv[gidx(m, k, j)];
                    }
                    riemann[((i * n + j) * n + k) * n + l] = r;
                }
            }
        }
    }
    let mut ricci = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            ricci[k * n + l] = (0..n).map(|i| riemann[((i * n + k) * n + i) * n + l]).sum();
        }
    }
    let mut scalar = 0.0;
    for k in 0..n {
        for l in 0..n {
            scalar += ginv[k * n + l].value() * ricci[k * n + l];
        }
    }
    Ok(CurvatureBundle {
        point: point.to_vec(),
        dim: n,
        metric: g.iter().map(Jet::value).collect(),
        christoffel: gv,
        riemann,
        ricci,
        scalar,
    })
}

fn unit(n: usize, k: usize) -> Vec<u8> {
    let mut e = vec![0u8; n];
    e[k] = 1;
    e
}

/// Curvature of the metric at x.
pub fn curvature(m: &MetricField, x: &[f64]) -> Result<CurvatureBundle> {
    let jet = m.eval_metric_jet(x, 2)?;
    curvature_from_jets(x, &jet.g)
}
