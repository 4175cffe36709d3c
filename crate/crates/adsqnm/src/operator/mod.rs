//! Collocation discretization of the stationary Klein–Gordon operator P(λ).
//!
//! The unknown is the twisted field `w` with `u = s^β (1−x²)^{|k|/2} w`,
//! `s = 1/r`, `β = 3/2 − ν`, `x = cos θ`. Rows are scaled by `s^{2−β}`, so the
//! stored triple represents `L(λ) = s^{2−β} P(λ) s^β` acting on `w`; every entry
//! stays finite up to the conformal boundary s = 0.

mod dump;
mod grid;
mod norms;

pub use dump::{read_dump, read_modes, write_dump, write_modes, DumpHeader};
pub use grid::{build_grid, build_truncated_grid, GridSpec, InnerEdge, MIN_ANGULAR, MIN_RADIAL};
pub use norms::{h1_density, l2_weights, norms, Norms};

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::KerrAds;
use crate::numerics::dense::{CMat, CVec};
use crate::numerics::legendre::legendre_p;
use crate::numerics::C64;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("grid needs n_radial ≥ 8 and n_angular ≥ 4 (got {n_radial} × {n_angular})")]
    InvalidCounts { n_radial: usize, n_angular: usize },
    #[error("wall radius r1 = {r1} must exceed r₊ = {r_plus}")]
    InvalidWall { r1: f64, r_plus: f64 },
    #[error("axial mode |k| = {k} exceeds the angular resolution {n_angular}")]
    AxialModeTooLarge { k: i32, n_angular: usize },
    #[error("non-finite coefficient at node (i = {i}, j = {j}), s = {s}, x = {x}")]
    AssemblyFailure { i: usize, j: usize, s: f64, x: f64 },
    #[error("ν = {nu} is too close to an integer; the logarithmic boundary branch is not supported")]
    LogarithmicBranch { nu: f64 },
    #[error("vector length {got} does not match operator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator has no grid layout")]
    NoLayout,
    #[error("dump I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dump: {0}")]
    MalformedDump(String),
}

/// Robin coefficient on the conformal boundary, as a function of x = cos θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaProfile {
    Constant(f64),
    /// Coefficients of Legendre polynomials P_n(cos θ).
    Legendre(Vec<f64>),
}

impl BetaProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BetaProfile::Constant(b) => *b,
            BetaProfile::Legendre(c) => c.iter().enumerate().map(|(n, cn)| cn * legendre_p(n, x).0).sum(),
        }
    }

    /// Invariant under θ ↦ π − θ.
    pub fn is_even(&self) -> bool {
        match self {
            BetaProfile::Constant(_) => true,
            BetaProfile::Legendre(c) => c.iter().skip(1).step_by(2).all(|v| *v == 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// γ₋u = 0.
    Dirichlet,
    /// γ₊u + β γ₋u = 0 (only meaningful for 0 < ν < 1).
    Robin { beta: BetaProfile },
}

/// Grid and bookkeeping attached to an assembled operator.
#[derive(Debug, Clone)]
pub struct OperatorLayout {
    pub geometry: KerrAds,
    pub grid: GridSpec,
    /// Boundary condition actually imposed (Robin degrades to Dirichlet for ν ≥ 1).
    pub bc: BoundaryCondition,
    pub k: i32,
    pub nu: f64,
    /// Rows replaced by boundary conditions (conformal boundary, and the wall if any).
    pub boundary_rows: Vec<usize>,
    /// Quadrature weights for ∫|u|² r⁻¹ dS_t written in terms of |w|².
    pub weights: Vec<f64>,
    /// Weights turning |(L w)_i|² into the physical ∫|P u|² r⁻¹ dS_t.
    pub row_weights: Vec<f64>,
}

/// P(λ) = P0 + λ P1 + λ² P2 as dense matrices.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub p0: CMat,
    pub p1: CMat,
    pub p2: CMat,
    pub layout: Option<OperatorLayout>,
}

/// Coefficient functions of the twisted operator at a node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coefficients {
    pub mass: f64,
    pub a: f64,
    pub a2: f64,
    pub e: f64,
    pub beta: f64,
    pub mass_term: f64,
    pub k: f64,
    pub m: f64,
}

impl Coefficients {
    pub fn new(geom: &KerrAds, k: i32) -> Self {
        let p = geom.params;
        let a2 = p.spin * p.spin;
        Self {
            mass: p.mass,
            a: p.spin,
            a2,
            e: 1.0 - a2,
            beta: 1.5 - p.nu,
            mass_term: p.mass_term(),
            k: k as f64,
            m: k.unsigned_abs() as f64,
        }
    }

    /// s⁴ Δ_r.
    pub fn d(&self, s: f64) -> f64 {
        (1.0 + self.a2 * s * s) * (1.0 + s * s) - 2.0 * self.mass * s * s * s
    }

    pub fn d_prime(&self, s: f64) -> f64 {
        2.0 * self.a2 * s * (1.0 + s * s) + 2.0 * s * (1.0 + self.a2 * s * s) - 6.0 * self.mass * s * s
    }

    pub fn delta_theta(&self, x: f64) -> f64 {
        1.0 - self.a2 * x * x
    }

    /// Kerr-star G^{tt} = (ϱ² g⁻¹)^{tt} written in (s, x).
    pub fn gtt(&self, s: f64, x: f64) -> f64 {
        let e2 = self.e * self.e;
        let q = 1.0 + s * s;
        -self.d(s) * e2 / (q * q) + 2.0 * e2 * (1.0 + self.a2 * s * s) / q
            - e2 * self.a2 * (1.0 - x * x) / self.delta_theta(x)
    }

    pub fn gtphi(&self, s: f64, x: f64) -> f64 {
        let e2 = self.e * self.e;
        e2 * self.a * s * s / (1.0 + s * s) - e2 * self.a / self.delta_theta(x)
    }

    /// G^{tr} = −2M(1−a²) r/(1+r²) in s.
    pub fn gtr(&self, s: f64) -> f64 {
        -2.0 * self.mass * self.e * s / (1.0 + s * s)
    }

    /// Angular operator after conjugation by (1−x²)^{m/2}: coefficients of ∂²_x, ∂_x, 1.
    pub fn angular(&self, x: f64) -> (f64, f64, f64) {
        let dth = self.delta_theta(x);
        let omx = 1.0 - x * x;
        let m = self.m;
        let c2 = -dth * omx;
        let c1 = 2.0 * self.a2 * x * omx + 2.0 * x * dth + 2.0 * m * x * dth;
        let poly = self.a2 * self.a2 * x.powi(4) - self.a2 * (2.0 - self.a2) * x * x + self.e * self.e;
        let c0 = m * (1.0 - 3.0 * self.a2 * x * x) + m * m * poly / dth;
        (c2, c1, c0)
    }

    /// Radial coefficients of L₀ (∂²_s, ∂_s, 1) without the angular and a²x² mass parts.
    pub fn radial0(&self, s: f64) -> (C64, C64, C64) {
        let b = self.beta;
        let d = self.d(s);
        let dp = self.d_prime(s);
        let kk = 2.0 * self.k * self.e * self.a;
        let a2c = C64::new(-d * s * s, 0.0);
        let a1c = C64::new((2.0 - 2.0 * b) * d * s - dp * s * s, kk * s.powi(4));
        let a0c = C64::new((d - 1.0) * (3.0 * b - b * b) - b * dp * s, kk * b * s.powi(3));
        (a2c, a1c, a0c)
    }

    /// Coefficients of L₁ (∂_s, 1).
    pub fn first_order(&self, s: f64, x: f64) -> (C64, C64) {
        let q = 1.0 + s * s;
        let me = self.mass * self.e;
        let b1 = C64::new(0.0, -4.0 * me * s.powi(5) / q);
        let b0 = C64::new(
            2.0 * self.k * s * s * self.gtphi(s, x),
            -(4.0 * me * self.beta * s.powi(4) / q + 2.0 * me * s.powi(4) * (1.0 - s * s) / (q * q)),
        );
        (b1, b0)
    }

    pub fn second_order(&self, s: f64, x: f64) -> f64 {
        -s * s * self.gtt(s, x)
    }
}

/// Exponents of the two boundary branches are 0 and 2ν in w; a stencil fitting
/// {1, s^{2ν}, s², s^{2ν+2}, …} on the first nodes extracts their coefficients.
pub(crate) fn trace_stencil(grid: &GridSpec, nu: f64) -> Result<(Vec<f64>, Vec<f64>), OperatorError> {
    let two_nu = 2.0 * nu;
    if (nu - nu.round()).abs() < 1e-6 && nu.round() >= 1.0 {
        return Err(OperatorError::LogarithmicBranch { nu });
    }
    if (nu - 0.5).abs() < 1e-14 {
        // Both branches are smooth in s: value and global derivative.
        let c0: Vec<f64> = (0..grid.n_radial).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let c1: Vec<f64> = (0..grid.n_radial).map(|i| grid.radial.d1[[0, i]]).collect();
        return Ok((c0, c1));
    }
    let kk = 6.min(grid.n_radial / 2);
    let mut exps: Vec<f64> = Vec::new();
    let mut j = 0;
    while exps.len() < 2 * kk {
        exps.push(2.0 * j as f64);
        exps.push(two_nu + 2.0 * j as f64);
        j += 1;
    }
    exps.sort_by(|a, b| a.total_cmp(b));
    exps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    exps.truncate(kk);
    if !exps.iter().any(|e| (e - two_nu).abs() < 1e-9) {
        exps.pop();
        exps.push(two_nu);
    }
    let scale = grid.s(kk - 1);
    let v = Array2::from_shape_fn((kk, kk), |(i, p)| {
        let t = grid.s(i) / scale;
        if exps[p] == 0.0 {
            1.0
        } else {
            t.powf(exps[p])
        }
    });
    // Rows of V⁻¹ for the exponents 0 and 2ν give the coefficient functionals.
    let inv = invert_real(&v).ok_or(OperatorError::LogarithmicBranch { nu })?;
    let p1 = exps.iter().position(|e| (e - two_nu).abs() < 1e-9).expect("2ν is among the exponents");
    let mut c0 = vec![0.0; grid.n_radial];
    let mut c1 = vec![0.0; grid.n_radial];
    for i in 0..kk {
        c0[i] = inv[[0, i]];
        c1[i] = inv[[p1, i]] / scale.powf(two_nu);
    }
    Ok((c0, c1))
}

fn invert_real(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = Array2::<f64>::eye(n);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[[x, col]].abs().total_cmp(&m[[y, col]].abs()))?;
        if m[[piv, col]].abs() < 1e-300 {
            return None;
        }
        for c in 0..n {
            m.swap([col, c], [piv, c]);
            inv.swap([col, c], [piv, c]);
        }
        let d = m[[col, col]];
        for c in 0..n {
            m[[col, c]] /= d;
            inv[[col, c]] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[[r, col]];
                if f != 0.0 {
                    for c in 0..n {
                        m[[r, c]] -= f * m[[col, c]];
                        inv[[r, c]] -= f * inv[[col, c]];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Assemble P0, P1, P2 on `grid` for axial mode `k`.
pub fn assemble(
    geom: &KerrAds,
    grid: &GridSpec,
    bc: &BoundaryCondition,
    k: i32,
) -> Result<DiscreteOperator, OperatorError> {
    let nr = grid.n_radial;
    let na = grid.n_angular;
    if k.unsigned_abs() as usize > na {
        return Err(OperatorError::AxialModeTooLarge { k, n_angular: na });
    }
    let nu = geom.params.nu;
    let n = grid.len();
    let co = Coefficients::new(geom, k);
    let mut p0 = CMat::zeros((n, n));
    let mut p1 = CMat::zeros((n, n));
    let mut p2 = CMat::zeros((n, n));

    let effective_bc = match bc {
        BoundaryCondition::Robin { .. } if nu >= 1.0 => {
            log::warn!("Robin condition requested with ν = {nu} ≥ 1; imposing the Dirichlet-branch row");
            BoundaryCondition::Dirichlet
        }
        other => other.clone(),
    };
    let wall = matches!(grid.inner, InnerEdge::Wall { .. });
    let mut boundary_rows: Vec<usize> = (0..na).map(|j| grid.index(0, j)).collect();
    if wall {
        boundary_rows.extend((0..na).map(|j| grid.index(nr - 1, j)));
    }

    let ang: Vec<(f64, f64, f64)> = (0..na).map(|j| co.angular(grid.x(j))).collect();
    for i in 0..nr {
        if i == 0 || (wall && i == nr - 1) {
            continue;
        }
        let s = grid.s(i);
        let (a2c, a1c, a0c) = co.radial0(s);
        for j in 0..na {
            let x = grid.x(j);
            let row = grid.index(i, j);
            let (c2, c1, c0) = ang[j];
            let (b1, b0) = co.first_order(s, x);
            let diag0 = a0c + C64::new(s * s * c0 + co.mass_term * co.a2 * x * x * s * s, 0.0);
            let p2v = co.second_order(s, x);
            for v in [diag0.re, diag0.im, b0.re, b0.im, p2v, a2c.re, a1c.re, a1c.im, b1.im] {
                if !v.is_finite() {
                    return Err(OperatorError::AssemblyFailure { i, j, s, x });
                }
            }
            for ip in 0..nr {
                let col = grid.index(ip, j);
                let d1 = grid.radial.d1[[i, ip]];
                let d2 = grid.radial.d2[[i, ip]];
                p0[[row, col]] += a2c * d2 + a1c * d1;
                p1[[row, col]] += b1 * d1;
            }
            for jp in 0..na {
                let col = grid.index(i, jp);
                let v = s * s * (c2 * grid.angular.d2[[j, jp]] + c1 * grid.angular.d1[[j, jp]]);
                p0[[row, col]] += C64::new(v, 0.0);
            }
            p0[[row, row]] += diag0;
            p1[[row, row]] += b0;
            p2[[row, row]] = C64::new(p2v, 0.0);
        }
    }

    // Conformal boundary rows.
    match &effective_bc {
        BoundaryCondition::Dirichlet => {
            for j in 0..na {
                let r = grid.index(0, j);
                p0[[r, r]] = C64::new(1.0, 0.0);
            }
        }
        BoundaryCondition::Robin { beta } => {
            let (c0, c1) = trace_stencil(grid, nu)?;
            for j in 0..na {
                let r = grid.index(0, j);
                let b = beta.eval(grid.x(j));
                for i in 0..nr {
                    let v = b * c0[i] - 2.0 * nu * c1[i];
                    if v != 0.0 {
                        p0[[r, grid.index(i, j)]] = C64::new(v, 0.0);
                    }
                }
            }
        }
    }
    if wall {
        for j in 0..na {
            let r = grid.index(nr - 1, j);
            p0[[r, r]] = C64::new(1.0, 0.0);
        }
    }

    let weights = l2_weights(geom, grid, k);
    let row_weights: Vec<f64> = (0..n)
        .map(|idx| {
            let s = grid.s(idx / na);
            if s == 0.0 || boundary_rows.contains(&idx) {
                0.0
            } else {
                weights[idx] / s.powi(4)
            }
        })
        .collect();

    Ok(DiscreteOperator {
        p0,
        p1,
        p2,
        layout: Some(OperatorLayout {
            geometry: *geom,
            grid: grid.clone(),
            bc: effective_bc,
            k,
            nu,
            boundary_rows,
            weights,
            row_weights,
        }),
    })
}

impl DiscreteOperator {
    /// A bare quadratic pencil with unit weights and no grid.
    pub fn from_pencil(p0: CMat, p1: CMat, p2: CMat) -> Self {
        assert_eq!(p0.dim(), p1.dim());
        assert_eq!(p0.dim(), p2.dim());
        Self { p0, p1, p2, layout: None }
    }

    pub fn dim(&self) -> usize {
        self.p0.nrows()
    }

    pub fn layout(&self) -> Result<&OperatorLayout, OperatorError> {
        self.layout.as_ref().ok_or(OperatorError::NoLayout)
    }

    /// P0 + λ P1 + λ² P2.
    pub fn evaluate_at(&self, lambda: C64) -> CMat {
        let l2 = lambda * lambda;
        let mut out = self.p0.clone();
        Zip::from(&mut out).and(&self.p1).and(&self.p2).for_each(|o, &b, &c| {
            if b != C64::new(0.0, 0.0) || c != C64::new(0.0, 0.0) {
                *o += lambda * b + l2 * c;
            }
        });
        out
    }

    /// P(λ)v computed from the three matrices separately.
    pub fn apply_at(&self, lambda: C64, v: &CVec) -> CVec {
        let mut out = self.p0.dot(v);
        out.scaled_add(lambda, &self.p1.dot(v));
        out.scaled_add(lambda * lambda, &self.p2.dot(v));
        out
    }

    /// h² P(z/h) = h² P0 + h z P1 + z² P2.
    pub fn semiclassical_rescale(&self, h: f64, z: C64) -> CMat {
        let mut out = self.p0.mapv(|v| v * h * h);
        Zip::from(&mut out).and(&self.p1).and(&self.p2).for_each(|o, &b, &c| {
            *o += b * (z * h) + c * (z * z);
        });
        out
    }

    /// L² quadrature weights (unit weights without a layout).
    pub fn weights(&self) -> Vec<f64> {
        match &self.layout {
            Some(l) => l.weights.clone(),
            None => vec![1.0; self.dim()],
        }
    }

    /// Row weights for physical residual norms (unit weights without a layout).
    pub fn row_weights(&self) -> Vec<f64> {
        match &self.layout {
            Some(l) => l.row_weights.clone(),
            None => vec![1.0; self.dim()],
        }
    }

    /// Discrete traces (γ₋u, γ₊u) at the angular nodes.
    pub fn boundary_traces(&self, w: &[C64]) -> Result<(Vec<C64>, Vec<C64>), OperatorError> {
        let l = self.layout()?;
        if w.len() != self.dim() {
            return Err(OperatorError::DimensionMismatch { expected: self.dim(), got: w.len() });
        }
        boundary_traces(&l.grid, l.nu, l.k, w)
    }
}

/// (γ₋u, γ₊u) per angular node for u = s^β (1−x²)^{|k|/2} w.
pub fn boundary_traces(grid: &GridSpec, nu: f64, k: i32, w: &[C64]) -> Result<(Vec<C64>, Vec<C64>), OperatorError> {
    let (c0, c1) = trace_stencil(grid, nu)?;
    let m = k.unsigned_abs() as f64;
    let mut gm = Vec::with_capacity(grid.n_angular);
    let mut gp = Vec::with_capacity(grid.n_angular);
    for j in 0..grid.n_angular {
        let f = (1.0 - grid.x(j).powi(2)).powf(0.5 * m);
        let mut a = C64::new(0.0, 0.0);
        let mut b = C64::new(0.0, 0.0);
        for i in 0..grid.n_radial {
            let v = w[grid.index(i, j)];
            a += v * c0[i];
            b += v * c1[i];
        }
        gm.push(a * f);
        gp.push(b * (-2.0 * nu * f));
    }
    Ok((gm, gp))
}

#[cfg(test)]
mod tests;
