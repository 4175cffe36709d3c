//! Small numerical building blocks shared by the physics modules.

pub mod chebyshev;
pub mod dense;
pub mod fit;
pub mod legendre;
pub mod quadrature;

pub use num_complex::Complex64 as C64;

/// Barycentric Lagrange interpolation row: coefficients `c` with
/// `p(x) = sum_j c_j f_j` for data `f_j` sampled at `nodes`.
pub fn lagrange_row(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    let mut row = vec![0.0; nodes.len()];
    if let Some(j) = nodes.iter().position(|&xj| xj == x) {
        row[j] = 1.0;
        return row;
    }
    let mut denom = 0.0;
    for (j, (&xj, &wj)) in nodes.iter().zip(bary).enumerate() {
        let t = wj / (x - xj);
        row[j] = t;
        denom += t;
    }
    for c in &mut row {
        *c /= denom;
    }
    row
}

/// Barycentric weights `1 / prod_{k != j} (x_j - x_k)`, rescaled to unit max.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w: Vec<f64> = (0..n)
        .map(|j| {
            let mut p = 1.0;
            for k in 0..n {
                if k != j {
                    p *= 2.0 * (nodes[j] - nodes[k]);
                }
            }
            1.0 / p
        })
        .collect();
    let m = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for v in &mut w {
        *v /= m;
    }
    w
}

/// First and second differentiation matrices on arbitrary distinct nodes.
pub fn diff_matrices(nodes: &[f64], bary: &[f64]) -> (ndarray::Array2<f64>, ndarray::Array2<f64>) {
    let n = nodes.len();
    let mut d1 = ndarray::Array2::<f64>::zeros((n, n));
    let mut d2 = ndarray::Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                d1[[i, j]] = v;
                diag -= v;
            }
        }
        d1[[i, i]] = diag;
    }
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = 2.0 * d1[[i, j]] * (d1[[i, i]] - 1.0 / (nodes[i] - nodes[j]));
                d2[[i, j]] = v;
                diag -= v;
            }
        }
        d2[[i, i]] = diag;
    }
    (d1, d2)
}
