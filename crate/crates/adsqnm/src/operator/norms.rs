use std::f64::consts::PI;

use crate::geometry::KerrAds;
use crate::numerics::C64;

use super::{Coefficients, DiscreteOperator, GridSpec, OperatorError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
}

/// s² times the density of r⁻¹ dS_t in (s, x), integrated over φ: 2π √(1+a²x²s²) √G^{tt} / (1−a²).
fn slice_measure(co: &Coefficients, s: f64, x: f64) -> f64 {
    2.0 * PI * (1.0 + co.a2 * x * x * s * s).sqrt() * co.gtt(s, x).max(0.0).sqrt() / co.e
}

/// Weights W with ‖u‖²_{L²} ≈ Σ W_i |w_i|².
///
/// The factor s^{1−2ν} is singular at s = 0 when ν > 1/2; the boundary node then gets weight 0
/// (admissible fields vanish there fast enough).
pub fn l2_weights(geom: &KerrAds, grid: &GridSpec, k: i32) -> Vec<f64> {
    let co = Coefficients::new(geom, k);
    let expo = 1.0 - 2.0 * geom.params.nu;
    let mut w = vec![0.0; grid.len()];
    for i in 0..grid.n_radial {
        let s = grid.s(i);
        let sp = if s == 0.0 {
            if expo.abs() < 1e-14 {
                1.0
            } else {
                0.0
            }
        } else {
            s.powf(expo)
        };
        for j in 0..grid.n_angular {
            let x = grid.x(j);
            let ang = (1.0 - x * x).powf(co.m);
            w[grid.index(i, j)] = grid.radial.weights[i] * grid.angular.weights[j] * sp * ang * slice_measure(&co, s, x);
        }
    }
    w
}

/// Radial and angular derivatives of a grid function.
pub(crate) fn grid_derivatives(grid: &GridSpec, w: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let mut ws = vec![C64::new(0.0, 0.0); grid.len()];
    let mut wx = vec![C64::new(0.0, 0.0); grid.len()];
    for i in 0..grid.n_radial {
        for j in 0..grid.n_angular {
            let mut a = C64::new(0.0, 0.0);
            for ip in 0..grid.n_radial {
                a += w[grid.index(ip, j)] * grid.radial.d1[[i, ip]];
            }
            ws[grid.index(i, j)] = a;
            let mut b = C64::new(0.0, 0.0);
            for jp in 0..grid.n_angular {
                b += w[grid.index(i, jp)] * grid.angular.d1[[j, jp]];
            }
            wx[grid.index(i, j)] = b;
        }
    }
    (ws, wx)
}

/// Pointwise r² h⁻¹(d̃u, d̃ū) at every node, where h⁻¹ is the induced dual metric on the
/// slice and d̃ the twisted differential. Non-finite at s = 0 for some ν; callers drop such nodes.
pub fn h1_density(geom: &KerrAds, grid: &GridSpec, k: i32, w: &[C64]) -> Vec<f64> {
    let co = Coefficients::new(geom, k);
    let (ws, wx) = grid_derivatives(grid, w);
    let m = co.m;
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.n_radial {
        let s = grid.s(i);
        for j in 0..grid.n_angular {
            let idx = grid.index(i, j);
            let x = grid.x(j);
            out[idx] = if s == 0.0 {
                f64::NAN
            } else {
                let omx = 1.0 - x * x;
                let sb = s.powf(co.beta);
                let f = omx.powf(0.5 * m);
                let dr = -ws[idx] * (sb * s * s * f);
                let dth = -(wx[idx] * omx - w[idx] * (m * x)) * (sb * omx.powf(0.5 * (m - 1.0)));
                let dphi = C64::new(0.0, co.k) * w[idx] * (sb * f);
                let rho2 = (1.0 + co.a2 * x * x * s * s) / (s * s);
                let gtt = co.gtt(s, x);
                let gtr = co.gtr(s);
                let gtphi = co.gtphi(s, x);
                let grr = -co.d(s) / s.powi(4);
                let grphi = -co.e * co.a;
                let gphiphi = -co.e * co.e / (co.delta_theta(x) * omx);
                let hrr = -(grr - gtr * gtr / gtt) / rho2;
                let hrphi = -(grphi - gtr * gtphi / gtt) / rho2;
                let hphiphi = -(gphiphi - gtphi * gtphi / gtt) / rho2;
                let hthth = co.delta_theta(x) / rho2;
                let q = hrr * dr.norm_sqr()
                    + hthth * dth.norm_sqr()
                    + hphiphi * dphi.norm_sqr()
                    + 2.0 * hrphi * (dr * dphi.conj()).re;
                q / (s * s)
            };
        }
    }
    out
}

/// Quadrature approximations of ‖u‖_{L²(X_δ)} and ‖u‖_{H¹(X_δ)} for the twisted field `w`.
pub fn norms(op: &DiscreteOperator, w: &[C64]) -> Result<Norms, OperatorError> {
    if w.len() != op.dim() {
        return Err(OperatorError::DimensionMismatch { expected: op.dim(), got: w.len() });
    }
    let Some(l) = &op.layout else {
        let l2 = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        return Ok(Norms { l2, h1: l2 });
    };
    let l2sq: f64 = l.weights.iter().zip(w).map(|(wt, v)| wt * v.norm_sqr()).sum();
    let dens = h1_density(&l.geometry, &l.grid, l.k, w);
    let co = Coefficients::new(&l.geometry, l.k);
    let grid = &l.grid;
    let mut grad = 0.0;
    for i in 0..grid.n_radial {
        let s = grid.s(i);
        if s == 0.0 {
            continue;
        }
        for j in 0..grid.n_angular {
            let idx = grid.index(i, j);
            let d = dens[idx];
            if d.is_finite() {
                let x = grid.x(j);
                grad += grid.radial.weights[i] * grid.angular.weights[j] * slice_measure(&co, s, x) / (s * s) * d;
            }
        }
    }
    Ok(Norms { l2: l2sq.sqrt(), h1: (l2sq + grad).sqrt() })
}
