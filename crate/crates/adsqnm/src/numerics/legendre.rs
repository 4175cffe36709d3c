//! Gauss–Legendre nodes and weights, plus collocation matrices on them.

use ndarray::Array2;
use std::f64::consts::PI;

use super::{barycentric_weights, diff_matrices, lagrange_row};

#[derive(Debug, Clone)]
pub struct LegendreGrid {
    /// Nodes in (-1, 1), increasing.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub bary: Vec<f64>,
    pub d1: Array2<f64>,
    pub d2: Array2<f64>,
}

impl LegendreGrid {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        let bary = barycentric_weights(&nodes);
        let (d1, d2) = diff_matrices(&nodes, &bary);
        Self { nodes, weights, bary, d1, d2 }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interp_row(&self, x: f64) -> Vec<f64> {
        lagrange_row(&self.nodes, &self.bary, x)
    }
}

/// Legendre polynomial and its derivative at `x`.
pub fn legendre_p(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_p(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_p(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}
