//! Registered test metrics with a sample point and, where known in closed
//! form, the scalar curvature there.

use super::{MetricField, Signature};
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct Benchmark {
    pub metric: MetricField,
    pub point: Vec<f64>,
    /// R_g at `point` when known in closed form (repo conventions).
    pub scalar: Option<f64>,
}

const COORDS4: [&str; 4] = ["x0", "x1", "x2", "x3"];

fn diag(entries: &[&str]) -> Vec<Vec<String>> {
    let n = entries.len();
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { entries[i].to_string() } else { "0".into() }).collect())
        .collect()
}

fn build(name: &str, sig: Signature, coords: &[&str], g: Vec<Vec<String>>, domain: &[(f64, f64)]) -> MetricField {
    let rows: Vec<Vec<&str>> = g.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    let refs: Vec<&[&str]> = rows.iter().map(Vec::as_slice).collect();
    MetricField::new(name, sig, coords, &refs, domain).expect("benchmark metric must parse")
}

/// Names of all registered benchmarks.
pub const BENCHMARK_NAMES: [&str; 10] = [
    "minkowski",
    "einstein_static",
    "einstein_static_stereo",
    "poly_perturbed",
    "de_sitter_flat",
    "schwarzschild",
    "round_s2",
    "round_s3",
    "s3_x_s1",
    "s3_x_s1_r2",
];

/// Look up a registered benchmark by name.
pub fn benchmark(name: &str) -> Option<Benchmark> {
    let wide = (-10.0, 10.0);
    Some(match name {
        "minkowski" => Benchmark {
            metric: build(name, Signature::Lorentzian, &COORDS4, diag(&["1", "-1", "-1", "-1"]), &[wide; 4]),
            point: vec![0.0; 4],
            scalar: Some(0.0),
        },
        // dt² − (dχ² + sin²χ (dθ² + sin²θ dφ²)), unit spatial sphere
        "einstein_static" => Benchmark {
            metric: build(
                name,
                Signature::Lorentzian,
                &["t", "chi", "theta", "phi"],
                diag(&["1", "-1", "-sin(chi)^2", "-sin(chi)^2*sin(theta)^2"]),
                &[wide, (0.0, PI), (0.0, PI), wide],
            ),
            point: vec![0.0, 1.0, 1.2, 0.3],
            scalar: Some(-6.0),
        },
        // the same spacetime with the spatial sphere in stereographic coordinates
        "einstein_static_stereo" => {
            let c = "-4/(1 + x^2 + y^2 + z^2)^2";
            Benchmark {
                metric: build(name, Signature::Lorentzian, &["t", "x", "y", "z"], diag(&["1", c, c, c]), &[wide; 4]),
                point: vec![0.2, 0.3, -0.4, 0.5],
                scalar: Some(-6.0),
            }
        }
        // Minkowski plus a polynomial perturbation without any symmetry
        "poly_perturbed" => {
            let g = [vec!["1 + 0.1*x1^2 + 0.05*x0*x2", "0.03*x2*x3 + 0.02*x0^2", "0.04*x1*x3", "0.01*x0*x1*x2"],
                vec!["0.03*x2*x3 + 0.02*x0^2", "-1 + 0.07*x0*x3 - 0.04*x2^2", "0.05*x0*x1", "-0.02*x3^2"],
                vec!["0.04*x1*x3", "0.05*x0*x1", "-1 - 0.06*x1*x3 + 0.03*x0^3", "0.02*x0*x2"],
                vec!["0.01*x0*x1*x2", "-0.02*x3^2", "0.02*x0*x2", "-1 + 0.05*x0*x1 - 0.08*x2*x3"]];
            Benchmark {
                metric: build(
                    name,
                    Signature::Lorentzian,
                    &COORDS4,
                    g.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
                    &[(-1.0, 1.0); 4],
                ),
                point: vec![0.1, 0.2, -0.1, 0.15],
                scalar: None,
            }
        }
        // flat slicing with H = 1: R = −12 H²
        "de_sitter_flat" => Benchmark {
            metric: build(
                name,
                Signature::Lorentzian,
                &COORDS4,
                diag(&["1", "-exp(2*x0)", "-exp(2*x0)", "-exp(2*x0)"]),
                &[(-3.0, 3.0), wide, wide, wide],
            ),
            point: vec![0.1, 0.0, 0.0, 0.0],
            scalar: Some(-12.0),
        },
        // M = 1, outside the horizon: Ricci flat, Riemann non-zero
        "schwarzschild" => Benchmark {
            metric: build(
                name,
                Signature::Lorentzian,
                &["t", "r", "theta", "phi"],
                diag(&["1 - 2/r", "-1/(1 - 2/r)", "-r^2", "-r^2*sin(theta)^2"]),
                &[wide, (2.5, 50.0), (0.0, PI), wide],
            ),
            point: vec![0.0, 6.0, 1.3, 0.0],
            scalar: Some(0.0),
        },
        "round_s2" => Benchmark {
            metric: build(
                name,
                Signature::Riemannian,
                &["theta", "phi"],
                diag(&["1", "sin(theta)^2"]),
                &[(0.0, PI), (-20.0, 20.0)],
            ),
            point: vec![PI / 2.0, 0.0],
            scalar: Some(2.0),
        },
        "round_s3" => Benchmark {
            metric: build(
                name,
                Signature::Riemannian,
                &["chi", "theta", "phi"],
                diag(&["1", "sin(chi)^2", "sin(chi)^2*sin(theta)^2"]),
                &[(0.0, PI), (0.0, PI), wide],
            ),
            point: vec![1.0, 1.2, 0.3],
            scalar: Some(6.0),
        },
        "s3_x_s1" => Benchmark {
            metric: build(
                name,
                Signature::Riemannian,
                &["chi", "theta", "phi", "psi"],
                diag(&["1", "sin(chi)^2", "sin(chi)^2*sin(theta)^2", "1"]),
                &[(0.0, PI), (0.0, PI), wide, wide],
            ),
            point: vec![1.0, 1.2, 0.3, 0.0],
            scalar: Some(6.0),
        },
        // sphere of radius 2: R = 6/r²
        "s3_x_s1_r2" => Benchmark {
            metric: build(
                name,
                Signature::Riemannian,
                &["chi", "theta", "phi", "psi"],
                diag(&["4", "4*sin(chi)^2", "4*sin(chi)^2*sin(theta)^2", "1"]),
                &[(0.0, PI), (0.0, PI), wide, wide],
            ),
            point: vec![1.0, 1.2, 0.3, 0.0],
            scalar: Some(1.5),
        },
        _ => return None,
    })
}

/// All registered benchmarks, in a fixed order.
pub fn benchmarks() -> Vec<Benchmark> {
    BENCHMARK_NAMES.iter().map(|n| benchmark(n).unwrap()).collect()
}
