//! Trapped quasimodes: eigenmodes of the problem cut off by a Dirichlet wall at r₁,
//! multiplied by a smooth cutoff and extended by zero to the full grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{delta_r, KerrAds};
use crate::numerics::fit::{fit_line, LineFit};
use crate::numerics::C64;
use crate::operator::{
    assemble, build_grid, build_truncated_grid, BoundaryCondition, DiscreteOperator, GridSpec, InnerEdge,
    OperatorError,
};
use crate::spectra::{
    ell_hint, pencil_eigenvalues, polish, reduce, sectors, weighted_residual, Sector, SpectraError,
};

/// |Im λ| ≤ NEARLY_REAL_TOL·(1+|Re λ|) marks a truncated eigenvalue as nearly real.
pub const NEARLY_REAL_TOL: f64 = 1e-6;
/// Largest |Im λ|/Re λ discarded when projecting onto the real axis.
pub const REAL_PROJECTION_TOL: f64 = 1e-6;
/// Fewest truncated-grid radial nodes allowed inside the cutoff transition.
pub const MIN_TRANSITION_NODES: usize = 3;
/// Resolution-doubling tolerance on λ♯, relative.
pub const DOUBLING_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum QuasimodeError {
    #[error("no nearly-real eigenvalue of the truncated problem with 0 < Re λ ≤ {re_max}")]
    NoTrappedModes { re_max: f64 },
    #[error("cutoff of width {width} spans only {nodes} radial nodes; differentiation error would dominate")]
    CutoffTooSharp { width: f64, nodes: usize },
    #[error("only {converged} resolved quasimode branches; at least 4 are needed")]
    InsufficientResolution { converged: usize },
    #[error("eigenvalue {lambda} is too far from the real axis to project")]
    NotReal { lambda: C64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Eigenpair of the wall problem on the truncated grid.
#[derive(Debug, Clone)]
pub struct TruncatedMode {
    pub lambda: C64,
    /// Unit vector in the truncated weighted l2.
    pub mode: Vec<C64>,
    pub nearly_real: bool,
    pub ell_hint: usize,
    pub sector: Sector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quasimode {
    pub ell: usize,
    pub lambda_sharp: f64,
    /// Mode on the full grid; exactly zero at nodes with r ≤ r₁.
    #[serde(skip)]
    pub vector: Vec<C64>,
    /// ‖P(λ♯)u♯‖ in the weighted norms.
    pub residual: f64,
    /// The same norm from the full-grid operator applied to `vector`. Global spectral
    /// differentiation of the cutoff pollutes it near the conformal boundary.
    pub grid_residual: f64,
    pub r1: f64,
    pub transition_width: f64,
    pub norm_check: f64,
    /// Imaginary part dropped by the real projection.
    pub discarded_imag: f64,
    /// Share of the residual's weighted mass carried by nodes in the transition annulus.
    pub annulus_fraction: f64,
}

/// Radius of the photon-sphere barrier: the interior maximum over r > r₊ of
/// 1/[(1−a²)²((r²+a²)²/Δ_r − a²)] on the equator. `None` if the ratio is monotone.
pub fn trapping_radius(geom: &KerrAds) -> Option<f64> {
    let p = &geom.params;
    let a2 = p.spin * p.spin;
    let e2 = (1.0 - a2).powi(2);
    let ratio = |r: f64| {
        let d = delta_r(p, r);
        1.0 / (e2 * ((r * r + a2).powi(2) / d - a2))
    };
    let rp = geom.r_plus();
    let n = 4000;
    let (lo, hi) = (rp * (1.0 + 1e-6), 200.0 * rp);
    let rs: Vec<f64> = (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect();
    let vals: Vec<f64> = rs.iter().map(|&r| ratio(r)).collect();
    let i = (1..n).find(|&i| vals[i] >= vals[i - 1] && vals[i] > vals[i + 1])?;
    // Golden-section refinement on the bracketing cell pair.
    let (mut a, mut b) = (rs[i - 1], rs[i + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if ratio(c) > ratio(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Some(0.5 * (a + b))
}

/// Midpoint of r₊ and the trapping radius, or 2r₊ when no barrier is found.
pub fn default_r1(geom: &KerrAds) -> f64 {
    let rp = geom.r_plus();
    match trapping_radius(geom) {
        Some(rt) => 0.5 * (rp + rt),
        None => 2.0 * rp,
    }
}

pub fn default_transition_width(geom: &KerrAds) -> f64 {
    0.5 * geom.r_plus()
}

/// C⁴ step: 0 for t ≤ 0, 1 for t ≥ 1.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t.powi(5) * (126.0 - 420.0 * t + 540.0 * t * t - 315.0 * t.powi(3) + 70.0 * t.powi(4))
    }
}

fn wall_radius(grid: &GridSpec) -> Result<f64, QuasimodeError> {
    match grid.inner {
        InnerEdge::Wall { r1 } => Ok(r1),
        InnerEdge::Extended { .. } => Err(QuasimodeError::InvalidInput("truncated grid needs a wall".into())),
    }
}

fn normalize(v: &mut [C64], weights: &[f64]) -> f64 {
    let n = v.iter().zip(weights).map(|(x, w)| w * x.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Axisymmetric eigenpairs of the wall problem with 0 < Re λ ≤ `re_max`, sorted by Re λ.
pub fn solve_truncated(
    geom: &KerrAds,
    grid: &GridSpec,
    bc: &BoundaryCondition,
    re_max: f64,
) -> Result<Vec<TruncatedMode>, QuasimodeError> {
    wall_radius(grid)?;
    truncated_modes(&assemble(geom, grid, bc, 0)?, re_max)
}

fn truncated_modes(op: &DiscreteOperator, re_max: f64) -> Result<Vec<TruncatedMode>, QuasimodeError> {
    let layout = op.layout()?;
    let mut modes = Vec::new();
    for sector in sectors(op) {
        let pencil = reduce(op, sector)?;
        let cands: Vec<C64> = pencil_eigenvalues(&pencil)?
            .into_iter()
            .filter(|z| z.re > 0.0 && z.re <= re_max && z.im.abs() <= 1e-2 * (1.0 + z.re))
            .collect();
        let found: Vec<TruncatedMode> = cands
            .par_iter()
            .map(|&z| {
                let p = polish(&pencil, z, None, 30);
                let mut mode = pencil.expand(&p.vector);
                normalize(&mut mode, &layout.weights);
                TruncatedMode {
                    lambda: p.lambda,
                    nearly_real: p.lambda.im.abs() <= NEARLY_REAL_TOL * (1.0 + p.lambda.re.abs()),
                    ell_hint: ell_hint(layout, &mode),
                    mode,
                    sector,
                }
            })
            .collect();
        for m in found {
            let dup = modes.iter().any(|o: &TruncatedMode| {
                o.sector == m.sector && (o.lambda - m.lambda).norm() <= 1e-8 * (1.0 + m.lambda.norm())
            });
            if !dup && m.lambda.re > 0.0 && m.lambda.re <= re_max {
                modes.push(m);
            }
        }
    }
    if !modes.iter().any(|m| m.nearly_real) {
        return Err(QuasimodeError::NoTrappedModes { re_max });
    }
    modes.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re));
    Ok(modes)
}

/// Radial indices of `grid` lying strictly inside (r₁, r₁ + width).
fn annulus_nodes(grid: &GridSpec, r1: f64, width: f64) -> Vec<usize> {
    (0..grid.n_radial).filter(|&i| grid.s(i) > 0.0 && grid.r(i) > r1 && grid.r(i) < r1 + width).collect()
}

/// The cutoff χ and its first two s-derivatives at s.
fn cutoff_in_s(s: f64, r1: f64, width: f64) -> (f64, f64, f64) {
    if s == 0.0 {
        return (1.0, 0.0, 0.0);
    }
    let t = (1.0 / s - r1) / width;
    if t <= 0.0 || t >= 1.0 {
        return (smooth_step(t), 0.0, 0.0);
    }
    let d1 = 630.0 * (t * (1.0 - t)).powi(4);
    let d2 = 2520.0 * (t * (1.0 - t)).powi(3) * (1.0 - 2.0 * t);
    let ts = -1.0 / (s * s * width);
    let tss = 2.0 / (s * s * s * width);
    (smooth_step(t), d1 * ts, d2 * ts * ts + d1 * tss)
}

/// L(χw) by the product rule: χ·L w + w(a χ'' + b χ') + χ'(2a w_s + c_x w_x), where a, b, c_x
/// are the ∂_s², ∂_s and ∂_s∂_x coefficients of L. The coefficients are read off by applying
/// the discrete operator to low-degree polynomials, which it differentiates exactly, so the
/// cutoff itself is never differentiated numerically.
fn product_rule_apply(op: &DiscreteOperator, lambda: C64, w: &[C64], chi: &[(f64, f64, f64)]) -> Vec<C64> {
    let Some(layout) = op.layout.as_ref() else {
        return vec![C64::new(0.0, 0.0); w.len()];
    };
    let grid = &layout.grid;
    let (nr, na) = (grid.n_radial, grid.n_angular);
    let probe = |f: &dyn Fn(f64, f64) -> f64| {
        let v: crate::numerics::dense::CVec =
            (0..nr * na).map(|q| C64::new(f(grid.s(q / na), grid.x(q % na)), 0.0)).collect();
        op.apply_at(lambda, &v)
    };
    let l1 = probe(&|_, _| 1.0);
    let ls = probe(&|s, _| s);
    let lss = probe(&|s, _| s * s);
    let lx = probe(&|_, x| x);
    let lxs = probe(&|s, x| x * s);
    let lw = op.apply_at(lambda, &w.iter().copied().collect());
    let d1 = &grid.radial.d1;
    let dx = &grid.angular.d1;
    let mut out = vec![C64::new(0.0, 0.0); w.len()];
    for i in 0..nr {
        let s = grid.s(i);
        let (c, cp, cpp) = chi[i];
        for j in 0..na {
            let q = grid.index(i, j);
            if layout.boundary_rows.contains(&q) {
                continue;
            }
            let x = grid.x(j);
            let c0 = l1[q];
            let b = ls[q] - c0 * s;
            let a = (lss[q] - c0 * s * s - b * (2.0 * s)) * 0.5;
            let cx = lxs[q] - ls[q] * x - lx[q] * s + c0 * (x * s);
            let ws: C64 = (0..nr).map(|k| w[grid.index(k, j)] * d1[[i, k]]).sum();
            let wx: C64 = (0..na).map(|k| w[grid.index(i, k)] * dx[[j, k]]).sum();
            out[q] = lw[q] * c + w[q] * (a * cpp + b * cp) + (a * ws * 2.0 + cx * wx) * cp;
        }
    }
    out
}

/// Cut off a truncated mode over [r₁, r₁ + width], embed it in the grid of `full`, and
/// measure ‖P(λ♯)u♯‖ with λ♯ = Re λ.
///
/// The reported residual is evaluated on the truncated grid through the product rule; the
/// plain full-grid value ‖P(λ♯)u♯‖ is kept as `grid_residual`.
pub fn extend_cutoff(
    mode: &TruncatedMode,
    truncated: &DiscreteOperator,
    full: &DiscreteOperator,
    ell: usize,
    width: f64,
) -> Result<Quasimode, QuasimodeError> {
    let tl = truncated.layout()?;
    let tgrid = &tl.grid;
    let r1 = wall_radius(tgrid)?;
    let layout = full.layout()?;
    let grid = &layout.grid;
    if !(width > 0.0) {
        return Err(QuasimodeError::InvalidInput(format!("transition width {width} must be positive")));
    }
    let lambda_sharp = mode.lambda.re;
    if !(lambda_sharp > 0.0) || mode.lambda.im.abs() > REAL_PROJECTION_TOL * lambda_sharp {
        return Err(QuasimodeError::NotReal { lambda: mode.lambda });
    }
    let annulus = annulus_nodes(tgrid, r1, width);
    if annulus.len() < MIN_TRANSITION_NODES {
        return Err(QuasimodeError::CutoffTooSharp { width, nodes: annulus.len() });
    }
    let lam = C64::new(lambda_sharp, 0.0);

    let chi: Vec<(f64, f64, f64)> = (0..tgrid.n_radial).map(|i| cutoff_in_s(tgrid.s(i), r1, width)).collect();
    let cut: Vec<C64> = (0..tgrid.len()).map(|q| mode.mode[q] * chi[q / tgrid.n_angular].0).collect();
    let cut_norm = cut.iter().zip(&tl.weights).map(|(x, w)| w * x.norm_sqr()).sum::<f64>().sqrt();
    let pr = product_rule_apply(truncated, lam, &mode.mode, &chi);
    let mass = |i: usize| -> f64 {
        (0..tgrid.n_angular)
            .map(|j| {
                let q = tgrid.index(i, j);
                tl.row_weights[q] * pr[q].norm_sqr()
            })
            .sum()
    };
    let total: f64 = (0..tgrid.n_radial).map(mass).sum();
    let inside: f64 = annulus.iter().map(|&i| mass(i)).sum();

    let mut v = tgrid.interpolate_to(grid, &mode.mode);
    for i in 0..grid.n_radial {
        let c = cutoff_in_s(grid.s(i), r1, width).0;
        for j in 0..grid.n_angular {
            v[grid.index(i, j)] *= c;
        }
    }
    normalize(&mut v, &layout.weights);
    let norm_check = v.iter().zip(&layout.weights).map(|(x, w)| w * x.norm_sqr()).sum::<f64>().sqrt();
    Ok(Quasimode {
        ell,
        lambda_sharp,
        residual: total.sqrt() / cut_norm,
        grid_residual: weighted_residual(full, lam, &v),
        vector: v,
        r1,
        transition_width: width,
        norm_check,
        discarded_imag: mode.lambda.im,
        annulus_fraction: if total > 0.0 { inside / total } else { 1.0 },
    })
}

/// Resolution and cutoff settings for [`residual_sequence`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasimodeConfig {
    /// Radial nodes of the truncated grid.
    pub n_radial: usize,
    pub n_angular: usize,
    /// Radial nodes of the full grid on which residuals are measured.
    pub n_radial_full: usize,
    /// Wall radius; defaults to [`default_r1`].
    #[serde(default)]
    pub r1: Option<f64>,
    /// Defaults to 0.5·r₊.
    #[serde(default)]
    pub transition_width: Option<f64>,
}

impl Default for QuasimodeConfig {
    fn default() -> Self {
        Self { n_radial: 40, n_angular: 20, n_radial_full: 64, r1: None, transition_width: None }
    }
}

/// One branch of the sequence: the quasimode and its resolution check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub quasimode: Quasimode,
    /// λ♯ recomputed with twice the truncated radial nodes.
    pub lambda_doubled: f64,
    /// |Δλ♯| ≤ DOUBLING_TOL·λ♯ under doubling.
    pub resolved: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasimodeSequence {
    /// One entry per ℓ for which a trapped branch was found, in increasing ℓ.
    pub branches: Vec<Branch>,
    /// log(residual) against ℓ over resolved branches.
    pub residual_fit: LineFit,
    /// λ♯ against ℓ over resolved branches.
    pub frequency_fit: LineFit,
}

impl QuasimodeSequence {
    pub fn resolved(&self) -> impl Iterator<Item = &Quasimode> {
        self.branches.iter().filter(|b| b.resolved).map(|b| &b.quasimode)
    }
}

/// Sector holding axisymmetric modes of degree ℓ.
fn sector_for(ell: usize, available: &[Sector]) -> Sector {
    if available.contains(&Sector::Even) {
        if ell.is_multiple_of(2) {
            Sector::Even
        } else {
            Sector::Odd
        }
    } else {
        Sector::Full
    }
}

/// Quasimodes for every ℓ in `ells`: for each ℓ the lowest nearly-real wall mode whose
/// dominant angular degree is ℓ, cut off and measured on the full grid.
pub fn residual_sequence(
    geom: &KerrAds,
    ells: std::ops::RangeInclusive<usize>,
    bc: &BoundaryCondition,
    cfg: &QuasimodeConfig,
) -> Result<QuasimodeSequence, QuasimodeError> {
    if ells.is_empty() {
        return Err(QuasimodeError::InvalidInput("empty ℓ range".into()));
    }
    let rp = geom.r_plus();
    let r1 = cfg.r1.unwrap_or_else(|| default_r1(geom));
    let width = cfg.transition_width.unwrap_or_else(|| default_transition_width(geom));
    let ell_max = *ells.end();
    let nu = geom.params.nu;
    let re_max = 1.5 * (ell_max as f64 + 1.5 + nu) + 2.0;
    let tgrid = build_truncated_grid(geom, cfg.n_radial, cfg.n_angular, r1)?;
    let top = assemble(geom, &tgrid, bc, 0)?;
    let modes = truncated_modes(&top, re_max)?;
    let full = assemble(geom, &build_grid(geom, cfg.n_radial_full, cfg.n_angular)?, bc, 0)?;
    let fgrid = tgrid.resized(2 * cfg.n_radial, cfg.n_angular)?;
    let fop = assemble(geom, &fgrid, bc, 0)?;
    let avail = sectors(&fop);
    log::debug!("r1 = {r1} (r₊ = {rp}), width = {width}, {} truncated modes", modes.len());

    let picks: Vec<(usize, &TruncatedMode)> = ells
        .clone()
        .filter_map(|ell| {
            let sector = sector_for(ell, &avail);
            modes.iter().find(|m| m.nearly_real && m.ell_hint == ell && m.sector == sector).map(|m| (ell, m))
        })
        .collect();
    let branches: Vec<Branch> = picks
        .par_iter()
        .map(|&(ell, m)| -> Result<Branch, QuasimodeError> {
            let quasimode = extend_cutoff(m, &top, &full, ell, width)?;
            let pencil = reduce(&fop, m.sector)?;
            let v0 = pencil.restrict(&tgrid.interpolate_to(&fgrid, &m.mode));
            let p = polish(&pencil, m.lambda, Some(&v0), 20);
            let lambda_doubled = p.lambda.re;
            let resolved = p.converged
                && (p.lambda - m.lambda).norm() <= DOUBLING_TOL * quasimode.lambda_sharp
                && quasimode.residual.is_finite()
                && quasimode.residual > 0.0;
            Ok(Branch { quasimode, lambda_doubled, resolved })
        })
        .collect::<Result<_, _>>()?;
    let good: Vec<&Quasimode> = branches.iter().filter(|b| b.resolved).map(|b| &b.quasimode).collect();
    if good.len() < 4 {
        return Err(QuasimodeError::InsufficientResolution { converged: good.len() });
    }
    let x: Vec<f64> = good.iter().map(|q| q.ell as f64).collect();
    let logr: Vec<f64> = good.iter().map(|q| q.residual.ln()).collect();
    let lam: Vec<f64> = good.iter().map(|q| q.lambda_sharp).collect();
    let residual_fit = fit_line(&x, &logr).ok_or_else(|| QuasimodeError::InvalidInput("degenerate fit".into()))?;
    let frequency_fit = fit_line(&x, &lam).ok_or_else(|| QuasimodeError::InvalidInput("degenerate fit".into()))?;
    Ok(QuasimodeSequence { branches, residual_fit, frequency_fit })
}
