//! Gauss-Legendre rules.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-order rule applied on an interval chosen around the integrand's mass.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    nodes: Arc<Vec<f64>>,
    weights: Arc<Vec<f64>>,
    log_weights: Arc<Vec<f64>>,
    coverage: f64,
}

impl QuadratureSpec {
    pub const DEFAULT_NODES: usize = 96;
    pub const DEFAULT_COVERAGE: f64 = 8.0;

    pub fn new(node_count: usize, coverage: f64) -> Result<Self> {
        if node_count < 16 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least 16 nodes, got {node_count}"
            )));
        }
        if !(coverage >= 6.0) {
            return Err(Error::InvalidParameter(format!(
                "coverage factor must be at least 6, got {coverage}"
            )));
        }
        let (nodes, weights) = gauss_legendre(node_count);
        Ok(Self {
            nodes: Arc::new(nodes),
            log_weights: Arc::new(weights.iter().map(|w| w.ln()).collect()),
            weights: Arc::new(weights),
            coverage,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub(crate) fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::new(Self::DEFAULT_NODES, Self::DEFAULT_COVERAGE).expect("valid defaults")
    }
}
