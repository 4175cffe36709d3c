//! Chebyshev–Gauss–Lobatto nodes on an interval, with Clenshaw–Curtis weights.

use ndarray::Array2;
use std::f64::consts::PI;

use super::{diff_matrices, lagrange_row};

#[derive(Debug, Clone)]
pub struct ChebGrid {
    /// Nodes in increasing order, endpoints included.
    pub nodes: Vec<f64>,
    pub bary: Vec<f64>,
    pub d1: Array2<f64>,
    pub d2: Array2<f64>,
    /// Clenshaw–Curtis quadrature weights on the same interval.
    pub weights: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl ChebGrid {
    pub fn new(n: usize, lo: f64, hi: f64) -> Self {
        assert!(n >= 2 && hi > lo);
        let nn = (n - 1) as f64;
        let half = 0.5 * (hi - lo);
        let unit: Vec<f64> = (0..n).map(|i| -(PI * i as f64 / nn).cos()).collect();
        let nodes: Vec<f64> = unit
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == 0 {
                    lo
                } else if i == n - 1 {
                    hi
                } else {
                    lo + half * (x + 1.0)
                }
            })
            .collect();
        let bary: Vec<f64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                if i == 0 || i == n - 1 {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        let (mut d1, mut d2) = diff_matrices(&unit, &bary);
        d1.mapv_inplace(|v| v / half);
        d2.mapv_inplace(|v| v / (half * half));
        let weights = clenshaw_curtis(n).into_iter().map(|w| w * half).collect();
        Self { nodes, bary, d1, d2, weights, lo, hi }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Interpolation coefficients at `x` (any point of the interval).
    pub fn interp_row(&self, x: f64) -> Vec<f64> {
        lagrange_row(&self.nodes, &self.bary, x)
    }
}

/// Clenshaw–Curtis weights on [-1, 1] for `n` Lobatto points.
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let big_n = n - 1;
    if big_n == 0 {
        return vec![2.0];
    }
    let nf = big_n as f64;
    let mut w = vec![0.0; n];
    if big_n == 1 {
        return vec![1.0, 1.0];
    }
    let theta: Vec<f64> = (0..n).map(|k| PI * k as f64 / nf).collect();
    let mut v = vec![1.0; big_n - 1];
    if big_n.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[big_n] = w[0];
        for k in 1..big_n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta[i + 1]).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[big_n] = w[0];
        for k in 1..=(big_n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_polynomial_is_exact() {
        let g = ChebGrid::new(12, 0.0, 2.0);
        let f: Vec<f64> = g.nodes.iter().map(|x| x.powi(5) - 3.0 * x * x).collect();
        for i in 0..g.len() {
            let x = g.nodes[i];
            let d: f64 = (0..g.len()).map(|j| g.d1[[i, j]] * f[j]).sum();
            let dd: f64 = (0..g.len()).map(|j| g.d2[[i, j]] * f[j]).sum();
            assert!((d - (5.0 * x.powi(4) - 6.0 * x)).abs() < 1e-9);
            assert!((dd - (20.0 * x.powi(3) - 6.0)).abs() < 1e-7);
        }
    }

    #[test]
    fn clenshaw_curtis_integrates_exp() {
        let g = ChebGrid::new(20, -1.0, 3.0);
        let q: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.exp()).sum();
        assert!((q - (3f64.exp() - (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_smooth_function() {
        let g = ChebGrid::new(30, 0.0, 1.0);
        let f: Vec<f64> = g.nodes.iter().map(|x| (3.0 * x).sin()).collect();
        let row = g.interp_row(0.3137);
        let v: f64 = row.iter().zip(&f).map(|(c, y)| c * y).sum();
        assert!((v - (3.0f64 * 0.3137).sin()).abs() < 1e-13);
    }
}
