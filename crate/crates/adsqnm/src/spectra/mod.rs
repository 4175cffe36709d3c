//! Quasinormal frequencies as eigenvalues of the quadratic pencil, resolvent-norm scans
//! and quasimode-to-pole matching.

mod pencil;
mod resolvent;

pub use pencil::{polish, reduce, sectors, Polished, ReducedPencil, Sector};
pub use resolvent::{resolvent_norm, scan_rectangle, Resolvent, ResolventScan, ScanSample, ScanSpec};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::dense::{eigenvalues, generalized_eigenvalues, CMat, CVec, Lu};
use crate::numerics::legendre::legendre_p;
use crate::numerics::C64;
use crate::operator::{DiscreteOperator, OperatorError, OperatorLayout};

/// Residual bound for a converged entry.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Relative shift allowed between resolutions, |Δλ| ≤ STABILITY_TOL·(1+|λ|).
pub const STABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("linearization failed: {0}")]
    LinearizationFailure(String),
    #[error("no eigenvalues in the search region")]
    NoEigenvaluesInRegion,
    #[error("rectangle lower edge C₋ = {c_minus} must exceed −κ/2 = {bound}")]
    InvalidRectangle { c_minus: f64, bound: f64 },
    #[error("no pole within the window (nearest {nearest:?} at distance {distance})")]
    NotFound { nearest: Option<C64>, distance: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("linear algebra: {0}")]
    Linalg(String),
}

/// Axis-aligned box in the λ-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchRegion {
    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumEntry {
    pub lambda: C64,
    /// ‖P(λ)w‖/‖w‖ in the weighted norms.
    pub residual: f64,
    /// Grid vector of the twisted mode.
    pub mode: Vec<C64>,
    pub converged: bool,
    /// λ found on the finer grid, when one was supplied.
    pub lambda_fine: Option<C64>,
    pub sector: Sector,
    /// Dominant angular degree (|k| plus the dominant Gram–Schmidt degree).
    pub ell_hint: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub entries: Vec<SpectrumEntry>,
    pub n_radial: usize,
    pub n_angular: usize,
    pub k: i32,
}

impl Spectrum {
    pub fn converged(&self) -> impl Iterator<Item = &SpectrumEntry> {
        self.entries.iter().filter(|e| e.converged)
    }
}

/// All eigenvalues of A0 + λA1 + λ²A2 from a first-companion linearization.
pub fn pencil_eigenvalues(p: &ReducedPencil) -> Result<Vec<C64>, SpectraError> {
    let n = p.dim();
    let zero = C64::new(0.0, 0.0);
    let diagonal = p.a2.indexed_iter().all(|((i, j), v)| i == j || *v == zero);
    let inv_a2: Option<(CMat, CMat)> = if diagonal && (0..n).all(|i| p.a2[[i, i]] != zero) {
        let d: Vec<C64> = (0..n).map(|i| p.a2[[i, i]]).collect();
        let b0 = CMat::from_shape_fn((n, n), |(i, j)| p.a0[[i, j]] / d[i]);
        let b1 = CMat::from_shape_fn((n, n), |(i, j)| p.a1[[i, j]] / d[i]);
        Some((b0, b1))
    } else {
        match Lu::new(&p.a2) {
            Ok(lu) => {
                let mut b0 = CMat::zeros((n, n));
                let mut b1 = CMat::zeros((n, n));
                for j in 0..n {
                    let c0 = lu.solve(&p.a0.column(j).to_owned());
                    let c1 = lu.solve(&p.a1.column(j).to_owned());
                    match (c0, c1) {
                        (Ok(c0), Ok(c1)) => {
                            b0.column_mut(j).assign(&c0);
                            b1.column_mut(j).assign(&c1);
                        }
                        _ => return generalized(p),
                    }
                }
                Some((b0, b1))
            }
            Err(_) => None,
        }
    };
    let Some((b0, b1)) = inv_a2 else {
        return generalized(p);
    };
    let mut c = CMat::zeros((2 * n, 2 * n));
    for i in 0..n {
        c[[i, n + i]] = C64::new(1.0, 0.0);
        for j in 0..n {
            c[[n + i, j]] = -b0[[i, j]];
            c[[n + i, n + j]] = -b1[[i, j]];
        }
    }
    eigenvalues(&c).map_err(|e| SpectraError::LinearizationFailure(e.to_string()))
}

/// λ [[I,0],[0,A2]] − [[0,I],[−A0,−A1]] as a generalized problem.
fn generalized(p: &ReducedPencil) -> Result<Vec<C64>, SpectraError> {
    let n = p.dim();
    let mut a = CMat::zeros((2 * n, 2 * n));
    let mut b = CMat::zeros((2 * n, 2 * n));
    for i in 0..n {
        a[[i, n + i]] = C64::new(1.0, 0.0);
        b[[i, i]] = C64::new(1.0, 0.0);
        for j in 0..n {
            a[[n + i, j]] = -p.a0[[i, j]];
            a[[n + i, n + j]] = -p.a1[[i, j]];
            b[[n + i, n + j]] = p.a2[[i, j]];
        }
    }
    let ev = generalized_eigenvalues(&a, &b).map_err(|e| SpectraError::LinearizationFailure(e.to_string()))?;
    if ev.is_empty() {
        return Err(SpectraError::LinearizationFailure("pencil is singular".into()));
    }
    Ok(ev)
}

/// ‖P(λ)w‖/‖w‖ with the operator's row and L² weights.
pub fn weighted_residual(op: &DiscreteOperator, lambda: C64, w: &[C64]) -> f64 {
    let v: CVec = w.iter().copied().collect();
    let r = op.apply_at(lambda, &v);
    let rw = op.row_weights();
    let lw = op.weights();
    let num: f64 = r.iter().zip(&rw).map(|(x, a)| a * x.norm_sqr()).sum();
    let den: f64 = w.iter().zip(&lw).map(|(x, a)| a * x.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Eigenvalues of the pencil in `region`, polished by nonlinear inverse iteration.
///
/// With `op_fine` each eigenvalue is re-polished on the finer operator (started from the
/// interpolated mode), and `converged` requires |Δλ| ≤ 1e−6(1+|λ|) and residual ≤ 1e−8.
/// Without it `converged` only reflects polishing and the residual bound.
pub fn solve_qnf(
    op: &DiscreteOperator,
    region: &SearchRegion,
    op_fine: Option<&DiscreteOperator>,
) -> Result<Spectrum, SpectraError> {
    let mut entries = Vec::new();
    for sector in sectors(op) {
        let pencil = reduce(op, sector)?;
        let fine = match op_fine {
            Some(f) => Some(reduce(f, sector)?),
            None => None,
        };
        let mut cands: Vec<C64> = pencil_eigenvalues(&pencil)?.into_iter().filter(|z| region.contains(*z)).collect();
        cands.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        log::debug!("sector {sector:?}: {} candidate eigenvalues", cands.len());
        let polished: Vec<SpectrumEntry> = cands
            .par_iter()
            .map(|&z| polish_entry(op, &pencil, z, op_fine.zip(fine.as_ref())))
            .collect();
        for e in polished {
            if !region.contains(e.lambda) {
                continue;
            }
            let dup = entries.iter().any(|o: &SpectrumEntry| {
                o.sector == e.sector && (o.lambda - e.lambda).norm() <= 1e-8 * (1.0 + e.lambda.norm())
            });
            if !dup {
                entries.push(e);
            }
        }
    }
    if entries.is_empty() {
        return Err(SpectraError::NoEigenvaluesInRegion);
    }
    entries.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    let (n_radial, n_angular, k) = match &op.layout {
        Some(l) => (l.grid.n_radial, l.grid.n_angular, l.k),
        None => (op.dim(), 1, 0),
    };
    Ok(Spectrum { entries, n_radial, n_angular, k })
}

fn polish_entry(
    op: &DiscreteOperator,
    pencil: &ReducedPencil,
    z: C64,
    fine: Option<(&DiscreteOperator, &ReducedPencil)>,
) -> SpectrumEntry {
    let p = polish(pencil, z, None, 40);
    let mode = pencil.expand(&p.vector);
    let residual = weighted_residual(op, p.lambda, &mode);
    let mut converged = p.converged && residual <= RESIDUAL_TOL;
    let mut lambda_fine = None;
    if let (Some((fop, fpencil)), Some(layout)) = (fine, op.layout.as_ref()) {
        if let Some(fl) = fop.layout.as_ref() {
            let interp = layout.grid.interpolate_to(&fl.grid, &mode);
            let v0 = fpencil.restrict(&interp);
            let pf = polish(fpencil, p.lambda, Some(&v0), 15);
            lambda_fine = Some(pf.lambda);
            converged = converged
                && pf.converged
                && (pf.lambda - p.lambda).norm() <= STABILITY_TOL * (1.0 + p.lambda.norm());
        }
    }
    let ell_hint = op.layout.as_ref().map(|l| ell_hint(l, &mode));
    SpectrumEntry { lambda: p.lambda, residual, mode, converged, lambda_fine, sector: pencil.sector, ell_hint }
}

/// Dominant angular degree of a mode: project each radial slice onto polynomials orthonormal
/// under gl·(1−x²)^{|k|} and add |k| to the degree carrying the most energy.
pub fn ell_hint(layout: &OperatorLayout, w: &[C64]) -> usize {
    let grid = &layout.grid;
    let na = grid.n_angular;
    let m = layout.k.unsigned_abs() as usize;
    let wt: Vec<f64> = (0..na).map(|j| grid.angular.weights[j] * (1.0 - grid.x(j).powi(2)).powi(m as i32)).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(na);
    for d in 0..na {
        let mut q: Vec<f64> = (0..na).map(|j| legendre_p(d, grid.x(j)).0).collect();
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = (0..na).map(|j| wt[j] * q[j] * b[j]).sum();
                for j in 0..na {
                    q[j] -= proj * b[j];
                }
            }
        }
        let nq = (0..na).map(|j| wt[j] * q[j] * q[j]).sum::<f64>().sqrt();
        q.iter_mut().for_each(|v| *v /= nq);
        basis.push(q);
    }
    let mut energy = vec![0.0; na];
    for i in 0..grid.n_radial {
        for (d, b) in basis.iter().enumerate() {
            let c: C64 = (0..na).map(|j| w[grid.index(i, j)] * (wt[j] * b[j])).sum();
            energy[d] += grid.radial.weights[i] * c.norm_sqr();
        }
    }
    let best = energy.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|e| e.0).unwrap_or(0);
    best + m
}

/// Refine a pole near `lambda0` by nonlinear inverse iteration in every sector; the
/// result with the smallest residual wins.
pub fn refine_pole(op: &DiscreteOperator, lambda0: C64) -> Result<(C64, f64), SpectraError> {
    let mut best: Option<(C64, f64)> = None;
    for sector in sectors(op) {
        let pencil = reduce(op, sector)?;
        let p = polish(&pencil, lambda0, None, 40);
        let res = pencil.weighted_residual(p.lambda, &p.vector);
        if best.is_none_or(|b| res < b.1) {
            best = Some((p.lambda, res));
        }
    }
    best.ok_or(SpectraError::NoEigenvaluesInRegion)
}

/// Match window W = c_match·residual·(1+λ♯)^γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchWindow {
    pub c_match: f64,
    pub gamma: f64,
}

impl Default for MatchWindow {
    fn default() -> Self {
        Self { c_match: 1e3, gamma: 10.0 }
    }
}

impl MatchWindow {
    pub fn radius(&self, lambda_sharp: f64, residual: f64) -> f64 {
        self.c_match * residual * (1.0 + lambda_sharp).powf(self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleMatch {
    pub lambda_sharp: f64,
    pub radius_re: f64,
    pub radius_im: f64,
    pub found: Option<C64>,
    /// |λ − λ♯| for the found pole.
    pub distance: f64,
    pub within_window: bool,
}

/// Find the converged pole with Im λ < 0 nearest to λ♯ inside the window
/// |Re λ − λ♯| ≤ W, −Im λ ≤ W.
pub fn match_pole(
    spectrum: &Spectrum,
    lambda_sharp: f64,
    residual: f64,
    window: &MatchWindow,
) -> Result<PoleMatch, SpectraError> {
    if !(lambda_sharp > 0.0 && residual > 0.0) {
        return Err(SpectraError::InvalidInput(format!(
            "need λ♯ > 0 and residual > 0 (got {lambda_sharp}, {residual})"
        )));
    }
    let w = window.radius(lambda_sharp, residual);
    let target = C64::new(lambda_sharp, 0.0);
    let mut nearest: Option<(C64, f64)> = None;
    let mut found: Option<(C64, f64)> = None;
    for e in spectrum.converged() {
        let d = (e.lambda - target).norm();
        if nearest.is_none_or(|n| d < n.1) {
            nearest = Some((e.lambda, d));
        }
        let inside = e.lambda.im < 0.0 && (e.lambda.re - lambda_sharp).abs() <= w && -e.lambda.im <= w;
        if inside && found.is_none_or(|f| d < f.1) {
            found = Some((e.lambda, d));
        }
    }
    match found {
        Some((z, d)) => Ok(PoleMatch {
            lambda_sharp,
            radius_re: w,
            radius_im: w,
            found: Some(z),
            distance: d,
            within_window: true,
        }),
        None => Err(SpectraError::NotFound {
            nearest: nearest.map(|n| n.0),
            distance: nearest.map(|n| n.1).unwrap_or(f64::INFINITY),
        }),
    }
}
