//! Twisted stress-energy, the energy identity, upper-half-plane bounds and indicial roots.
//!
//! All pointwise quantities are written in (s, x) with s = 1/r, x = cos θ, for the mode
//! v = e^{−iλt★} e^{ikφ★} u with u = s^β (1−x²)^{|k|/2} w. The dual metric G = ϱ² g⁻¹ has
//! signature (+,−,−,−), the same convention in which the twisted tensor reads
//! T̃(Y,Z) = Re(Ỹv·Z̃v̄) − ½ g(Y,Z) [g⁻¹(d̃v, d̃v̄) − (Q + ν² − 9/4)|v|²].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{delta_r_prime, KerrAds};
use crate::numerics::fit::{fit_line, LineFit};
use crate::numerics::legendre::gauss_legendre;
use crate::numerics::C64;
use crate::operator::{
    assemble, boundary_traces, norms, BoundaryCondition, Coefficients, DiscreteOperator, GridSpec, OperatorError,
};
use crate::spectra::{weighted_residual, Resolvent, SpectraError};


/// Inputs whose weighted residual ‖P(λ)u‖ exceeds this are flagged as not converged.
pub const NON_CONVERGED_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// The Killing field the current is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KillingField {
    /// ∂_t★.
    T,
    /// ∂_t★ + a/(r₊²+a²) ∂_φ★, null on the horizon.
    K,
}

impl KillingField {
    /// Components (W^t, W^φ).
    fn components(self, geom: &KerrAds) -> (f64, f64) {
        match self {
            KillingField::T => (1.0, 0.0),
            KillingField::K => (1.0, horizon_angular_velocity(geom)),
        }
    }
}

/// a/(r₊²+a²).
pub fn horizon_angular_velocity(geom: &KerrAds) -> f64 {
    let a = geom.params.spin;
    a / (geom.r_plus().powi(2) + a * a)
}

// ---------------------------------------------------------------------------
// Twisting potential

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistData {
    pub nu: f64,
    /// q = r^{exponent} = s^{−exponent}.
    pub twist_exponent: f64,
    /// Q = q⁻¹ □ q at every grid node (NaN at s = 0, where only the limit is defined).
    pub q_values: Vec<f64>,
    /// Fitted power p in |Q + ν² − 9/4| ~ s^p on s ∈ [DECAY_WINDOW.0, DECAY_WINDOW.1]·s_max.
    /// `None` when Q + ν² − 9/4 vanishes identically.
    pub decay_power: Option<f64>,
    /// max |Q + ν² − 9/4| over the grid.
    pub max_abs_shifted: f64,
}

/// The decade of s (relative to the grid's s_max) used for the decay fit. The s³ mass term
/// competes with the a²x²s² term until s ~ a²/M, so the window sits well inside that.
pub const DECAY_WINDOW: (f64, f64) = (1e-4, 1e-3);

/// ϱ²(Q + ν² − 9/4) s² = L(0)[1] for the axisymmetric twisted operator, since q = s^β
/// corresponds to w ≡ 1.
fn shifted_potential_scaled(co0: &Coefficients, s: f64, x: f64) -> f64 {
    let (_, _, a0c) = co0.radial0(s);
    a0c.re + co0.mass_term * co0.a2 * x * x * s * s
}

/// Q + ν² − 9/4 at (s, x), s > 0.
pub fn shifted_potential(geom: &KerrAds, s: f64, x: f64) -> f64 {
    let co0 = Coefficients::new(geom, 0);
    shifted_potential_scaled(&co0, s, x) / (1.0 + co0.a2 * x * x * s * s)
}

/// Q = q⁻¹ □_g q for q = r^{ν−3/2} on the nodes of `grid`, with the decay of Q + ν² − 9/4.
pub fn twisting_potential(geom: &KerrAds, grid: &GridSpec, nu: f64) -> Result<TwistData, EnergyError> {
    if !(nu > 0.0) {
        return Err(EnergyError::InvalidInput(format!("ν = {nu} must be positive")));
    }
    let mut params = geom.params;
    params.nu = nu;
    let g = KerrAds { params, ..*geom };
    let co0 = Coefficients::new(&g, 0);
    let mu2 = params.mass_term();
    let mut q_values = vec![f64::NAN; grid.len()];
    let mut max_abs: f64 = 0.0;
    for i in 0..grid.n_radial {
        let s = grid.s(i);
        if s == 0.0 {
            continue;
        }
        for j in 0..grid.n_angular {
            let x = grid.x(j);
            let shifted = shifted_potential_scaled(&co0, s, x) / (1.0 + co0.a2 * x * x * s * s);
            max_abs = max_abs.max(shifted.abs());
            q_values[grid.index(i, j)] = shifted - mu2;
        }
    }
    let (lo, hi) = (DECAY_WINDOW.0 * grid.s_max, DECAY_WINDOW.1 * grid.s_max);
    let mut pts = Vec::new();
    for p in 0..=20 {
        let s = lo * (hi / lo).powf(p as f64 / 20.0);
        let m = (0..grid.n_angular)
            .map(|j| {
                let x = grid.x(j);
                (shifted_potential_scaled(&co0, s, x) / (1.0 + co0.a2 * x * x * s * s)).abs()
            })
            .fold(0.0, f64::max);
        if m > 0.0 {
            pts.push((s.ln(), m.ln()));
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let decay_power = if xs.len() >= 3 { fit_line(&xs, &ys).map(|f| f.slope) } else { None };
    Ok(TwistData { nu, twist_exponent: nu - 1.5, q_values, decay_power, max_abs_shifted: max_abs })
}

/// Q from a centred finite-difference evaluation of (qϱ²)⁻¹ ∂_r(G^{rr} ∂_r q); ∂_t and ∂_φ
/// terms drop because q depends on r alone.
pub fn twisting_potential_fd(geom: &KerrAds, r: f64, theta: f64, h: f64) -> f64 {
    let e = geom.params.nu - 1.5;
    let q = |r: f64| r.powf(e);
    let flux = |r: f64| geom.dual_metric(r, theta).rr * (q(r + h) - q(r - h)) / (2.0 * h);
    let div = (flux(r + h) - flux(r - h)) / (2.0 * h);
    div / (q(r) * geom.dual_metric(r, theta).rho2)
}

// ---------------------------------------------------------------------------
// Pointwise fields

/// w and its first and second derivatives in s and x at a point.
#[derive(Debug, Clone, Copy, Default)]
struct Jet {
    w: C64,
    ws: C64,
    wss: C64,
    wx: C64,
    wxx: C64,
}

/// Derivative fields of a grid function, kept on the source grid for interpolation.
struct JetField<'a> {
    grid: &'a GridSpec,
    w: &'a [C64],
    ws: Vec<C64>,
    wss: Vec<C64>,
    wx: Vec<C64>,
    wxx: Vec<C64>,
}

impl<'a> JetField<'a> {
    fn new(grid: &'a GridSpec, w: &'a [C64]) -> Self {
        let (nr, na) = (grid.n_radial, grid.n_angular);
        let n = grid.len();
        let zero = C64::new(0.0, 0.0);
        let (mut ws, mut wss, mut wx, mut wxx) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
        for i in 0..nr {
            for j in 0..na {
                let (mut a, mut b) = (zero, zero);
                for ip in 0..nr {
                    let v = w[grid.index(ip, j)];
                    a += v * grid.radial.d1[[i, ip]];
                    b += v * grid.radial.d2[[i, ip]];
                }
                ws[grid.index(i, j)] = a;
                wss[grid.index(i, j)] = b;
                let (mut c, mut d) = (zero, zero);
                for jp in 0..na {
                    let v = w[grid.index(i, jp)];
                    c += v * grid.angular.d1[[j, jp]];
                    d += v * grid.angular.d2[[j, jp]];
                }
                wx[grid.index(i, j)] = c;
                wxx[grid.index(i, j)] = d;
            }
        }
        Self { grid, w, ws, wss, wx, wxx }
    }

    /// Radial interpolation at s for every angular node of the source grid.
    fn at(&self, s: f64) -> Vec<Jet> {
        let row = self.grid.radial.interp_row(s);
        (0..self.grid.n_angular)
            .map(|j| {
                let mut out = Jet::default();
                for (i, &c) in row.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let q = self.grid.index(i, j);
                    out.w += self.w[q] * c;
                    out.ws += self.ws[q] * c;
                    out.wss += self.wss[q] * c;
                    out.wx += self.wx[q] * c;
                    out.wxx += self.wxx[q] * c;
                }
                out
            })
            .collect()
    }

    fn node(&self, i: usize, j: usize) -> Jet {
        let q = self.grid.index(i, j);
        Jet { w: self.w[q], ws: self.ws[q], wss: self.wss[q], wx: self.wx[q], wxx: self.wxx[q] }
    }
}

/// Components of d̃v at t = 0 in the order (t, r, θ, φ), and v itself.
#[derive(Debug, Clone, Copy)]
struct Differential {
    v: C64,
    dt: C64,
    dr: C64,
    dth: C64,
    dphi: C64,
}

/// Dual metric G = ϱ²g⁻¹ in (s, x) together with ϱ².
#[derive(Debug, Clone, Copy)]
struct DualAt {
    tt: f64,
    tr: f64,
    tphi: f64,
    rr: f64,
    rphi: f64,
    thth: f64,
    phiphi: f64,
    rho2: f64,
}

fn dual_at(co: &Coefficients, s: f64, x: f64) -> DualAt {
    let omx = 1.0 - x * x;
    DualAt {
        tt: co.gtt(s, x),
        tr: co.gtr(s),
        tphi: co.gtphi(s, x),
        rr: -co.d(s) / s.powi(4),
        rphi: -co.e * co.a,
        thth: -co.delta_theta(x),
        phiphi: -co.e * co.e / (co.delta_theta(x) * omx),
        rho2: (1.0 + co.a2 * x * x * s * s) / (s * s),
    }
}

fn differential(co: &Coefficients, lambda: C64, s: f64, x: f64, jet: &Jet) -> Differential {
    let omx = 1.0 - x * x;
    let m = co.m;
    let sb = s.powf(co.beta);
    let f = omx.powf(0.5 * m);
    let v = jet.w * (sb * f);
    Differential {
        v,
        dt: C64::new(0.0, -1.0) * lambda * v,
        dr: -jet.ws * (sb * s * s * f),
        dth: -(jet.wx - jet.w * (m * x / omx)) * (sb * f * omx.sqrt()),
        dphi: C64::new(0.0, co.k) * v,
    }
}

/// ϱ²J^t and ϱ²J^r for J^μ = g^{μν}T̃(W, ∂_ν), and the raw quadratic form pieces.
#[derive(Debug, Clone, Copy)]
struct Current {
    jt: f64,
    jr: f64,
}

fn current(g: &DualAt, d: &Differential, wt: f64, wphi: f64, pot: f64) -> Current {
    let wv = d.dt * wt + d.dphi * wphi;
    let gt = d.dt * g.tt + d.dr * g.tr + d.dphi * g.tphi;
    let gr = d.dt * g.tr + d.dr * g.rr + d.dphi * g.rphi;
    let gphi = d.dt * g.tphi + d.dr * g.rphi + d.dphi * g.phiphi;
    let quad = (d.dt.conj() * gt).re + (d.dr.conj() * gr).re + (d.dphi.conj() * gphi).re + g.thth * d.dth.norm_sqr();
    Current {
        jt: (wv * gt.conj()).re - 0.5 * wt * (quad - pot * d.v.norm_sqr()),
        jr: (wv * gr.conj()).re,
    }
}

/// ϱ²(Q + ν² − 9/4) at (s, x).
fn potential(co0: &Coefficients, s: f64, x: f64) -> f64 {
    shifted_potential_scaled(co0, s, x) / (s * s)
}

/// L(λ)w at a point from the coefficient functions of the assembled operator.
fn apply_pointwise(co: &Coefficients, lambda: C64, s: f64, x: f64, jet: &Jet) -> C64 {
    let (a2c, a1c, a0c) = co.radial0(s);
    let (c2, c1, c0) = co.angular(x);
    let (b1, b0) = co.first_order(s, x);
    let diag0 = a0c + C64::new(s * s * c0 + co.mass_term * co.a2 * x * x * s * s, 0.0);
    let l0 = a2c * jet.wss + a1c * jet.ws + (jet.wxx * c2 + jet.wx * c1) * (s * s) + diag0 * jet.w;
    let l1 = b1 * jet.ws + b0 * jet.w;
    let l2 = jet.w * co.second_order(s, x);
    l0 + lambda * l1 + lambda * lambda * l2
}

// ---------------------------------------------------------------------------
// Stress-energy along the slice normal

/// Mode-independent coefficients of T̃(K, N̄_t) at a point:
/// F₁|λ|²|u|² + F₂|∂̃_r u|² + F₃|∂_θ u|² + E₁ k Im(u ∂̃_r ū) + E₂|u|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonCoefficients {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    /// Coefficient of the k Im(u ∂̃_r ū) cross term, ∝ G^{rφ} − Ω G^{tr}.
    pub e1: f64,
}

/// r A/ϱ², the factor turning ϱ²J^t into T̃(W, N̄_t) with lapse A = ϱ/√G^{tt}.
fn normal_scale(g: &DualAt, s: f64) -> f64 {
    1.0 / (s * g.rho2.sqrt() * g.tt.sqrt())
}

pub fn horizon_coefficients(geom: &KerrAds, s: f64, x: f64) -> HorizonCoefficients {
    let co = Coefficients::new(geom, 0);
    let g = dual_at(&co, s, x);
    let c = normal_scale(&g, s);
    let omega = horizon_angular_velocity(geom);
    HorizonCoefficients {
        f1: 0.5 * c * g.tt,
        f2: -0.5 * c * g.rr,
        f3: -0.5 * c * g.thth,
        e1: c * (g.rphi - omega * g.tr),
    }
}

/// Pointwise T̃(K, N̄_t) split into its named parts.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Decomposition {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
    pub e1: Vec<f64>,
    /// T̃(K, N̄_t) minus the four explicit terms, divided by |u|² (NaN where u = 0).
    pub e2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StressEnergy {
    pub field: KillingField,
    /// T̃(Y, N̄_t) at each grid node; NaN at s = 0.
    pub values: Vec<f64>,
    pub decomposition: Option<Decomposition>,
}

/// T̃(Y, N̄_t) at every node of `grid` for the mode `w` (twisted unknown, axial mode k).
pub fn stress_energy(
    geom: &KerrAds,
    grid: &GridSpec,
    k: i32,
    w: &[C64],
    lambda: C64,
    field: KillingField,
) -> Result<StressEnergy, EnergyError> {
    if w.len() != grid.len() {
        return Err(OperatorError::DimensionMismatch { expected: grid.len(), got: w.len() }.into());
    }
    let co = Coefficients::new(geom, k);
    let co0 = Coefficients::new(geom, 0);
    let (wt, wphi) = field.components(geom);
    let jets = JetField::new(grid, w);
    let n = grid.len();
    let mut values = vec![f64::NAN; n];
    let mut dec = (field == KillingField::K).then(|| Decomposition {
        f1: vec![f64::NAN; n],
        f2: vec![f64::NAN; n],
        f3: vec![f64::NAN; n],
        e1: vec![f64::NAN; n],
        e2: vec![f64::NAN; n],
    });
    for i in 0..grid.n_radial {
        let s = grid.s(i);
        if s == 0.0 {
            continue;
        }
        for j in 0..grid.n_angular {
            let x = grid.x(j);
            let q = grid.index(i, j);
            let g = dual_at(&co, s, x);
            let d = differential(&co, lambda, s, x, &jets.node(i, j));
            let c = current(&g, &d, wt, wphi, potential(&co0, s, x));
            let value = normal_scale(&g, s) * c.jt;
            values[q] = value;
            if let Some(dec) = dec.as_mut() {
                let h = horizon_coefficients(geom, s, x);
                let u2 = d.v.norm_sqr();
                let explicit = h.f1 * lambda.norm_sqr() * u2
                    + h.f2 * d.dr.norm_sqr()
                    + h.f3 * d.dth.norm_sqr()
                    + h.e1 * co.k * (d.v * d.dr.conj()).im;
                dec.f1[q] = h.f1;
                dec.f2[q] = h.f2;
                dec.f3[q] = h.f3;
                dec.e1[q] = h.e1;
                dec.e2[q] = if u2 > 0.0 { (value - explicit) / u2 } else { f64::NAN };
            }
        }
    }
    Ok(StressEnergy { field, values, decomposition: dec })
}

// ---------------------------------------------------------------------------
// Energy identity

/// Terms of 2 Im λ E − B_Y + H = ∫ Re(F·W̄v̄), all integrated over φ as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub n_radial: usize,
    /// ∫ √g Re(F·conj(Wv)), F = (□ + ν² − 9/4)v.
    pub bulk_term: f64,
    /// ∫_Y Re(γ₋Wv · γ₊v̄) (1−a²)⁻¹ dx dφ.
    pub boundary_y_term: f64,
    /// ∫_{H₀} T̃(W, K) dσ, from the radial current at r₊.
    pub horizon_term: f64,
    /// d/dt★ of the slice energy: 2 Im λ ∫ √g J^t.
    pub time_derivative_term: f64,
    /// |time − Y + horizon − bulk| relative to the largest term.
    pub residual: f64,
    /// Weighted ‖P(λ)u‖ of the input on its grid.
    pub mode_residual: f64,
    /// Input is not a converged mode (expected for manufactured data).
    pub non_converged: bool,
}

/// Horizon integrand (r₊²+a²)|Kv|² at each angular node of `grid`.
pub fn horizon_integrand(geom: &KerrAds, grid: &GridSpec, k: i32, w: &[C64], lambda: C64) -> Vec<f64> {
    let co = Coefficients::new(geom, k);
    let sh = 1.0 / geom.r_plus();
    let omega = horizon_angular_velocity(geom);
    let ra = geom.r_plus().powi(2) + geom.params.spin.powi(2);
    JetField::new(grid, w)
        .at(sh)
        .iter()
        .enumerate()
        .map(|(j, jet)| {
            let d = differential(&co, lambda, sh, grid.x(j), jet);
            ra * (d.dt + d.dphi * omega).norm_sqr()
        })
        .collect()
}

/// Evaluate every term of the energy identity for the mode `w` on `grid`, integrating over
/// r ≥ r₊ with Gauss–Legendre nodes in s ∈ (0, 1/r₊) and the grid's angular nodes.
pub fn verify_identity(
    geom: &KerrAds,
    grid: &GridSpec,
    k: i32,
    w: &[C64],
    lambda: C64,
    bc: &BoundaryCondition,
    field: KillingField,
) -> Result<FluxReport, EnergyError> {
    let report = identity_terms(geom, grid, k, w, lambda, bc, field)?;
    if report.non_converged {
        log::warn!("energy identity evaluated on a non-converged input (‖P(λ)u‖ = {:.3e})", report.mode_residual);
    }
    Ok(report)
}

fn identity_terms(
    geom: &KerrAds,
    grid: &GridSpec,
    k: i32,
    w: &[C64],
    lambda: C64,
    bc: &BoundaryCondition,
    field: KillingField,
) -> Result<FluxReport, EnergyError> {
    if w.len() != grid.len() {
        return Err(OperatorError::DimensionMismatch { expected: grid.len(), got: w.len() }.into());
    }
    let sh = 1.0 / geom.r_plus();
    if grid.s_max < sh * (1.0 - 1e-12) {
        return Err(EnergyError::InvalidInput("the grid does not reach the horizon".into()));
    }
    let co = Coefficients::new(geom, k);
    let co0 = Coefficients::new(geom, 0);
    let (wt, wphi) = field.components(geom);
    let xi = co.e;
    let jets = JetField::new(grid, w);
    let (nodes, weights) = gauss_legendre(grid.n_radial);
    let ang = &grid.angular;

    let (time, bulk) = nodes
        .par_iter()
        .zip(&weights)
        .map(|(&t, &wq)| {
            let s = 0.5 * sh * (t + 1.0);
            let ds = 0.5 * sh * wq;
            let mut acc_t = 0.0;
            let mut acc_b = 0.0;
            for (j, jet) in jets.at(s).iter().enumerate() {
                let x = grid.x(j);
                let g = dual_at(&co, s, x);
                let d = differential(&co, lambda, s, x, jet);
                let c = current(&g, &d, wt, wphi, potential(&co0, s, x));
                let wv = d.dt * wt + d.dphi * wphi;
                let f = apply_pointwise(&co, lambda, s, x, jet)
                    * ((1.0 - x * x).powf(0.5 * co.m) * s.powf(co.beta - 2.0));
                let meas = ang.weights[j] * ds / (s * s) / xi;
                acc_t += meas * c.jt;
                acc_b += meas * (f * wv.conj()).re;
            }
            (acc_t, acc_b)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let time = 2.0 * PI * 2.0 * lambda.im * time;
    let bulk = 2.0 * PI * bulk;

    let horizon = -2.0
        * PI
        * jets
            .at(sh)
            .iter()
            .enumerate()
            .map(|(j, jet)| {
                let x = grid.x(j);
                let g = dual_at(&co, sh, x);
                let d = differential(&co, lambda, sh, x, jet);
                ang.weights[j] * current(&g, &d, wt, wphi, potential(&co0, sh, x)).jr / xi
            })
            .sum::<f64>();

    let (gm, gp) = boundary_traces(grid, geom.params.nu, k, w)?;
    let wfac = C64::new(0.0, -1.0) * lambda * wt + C64::new(0.0, co.k * wphi);
    let boundary =
        2.0 * PI * (0..grid.n_angular).map(|j| ang.weights[j] * (wfac * gm[j] * gp[j].conj()).re / xi).sum::<f64>();

    let scale = [time, boundary, horizon, bulk].iter().map(|v| v.abs()).fold(f64::MIN_POSITIVE, f64::max);
    let residual = (time - boundary + horizon - bulk).abs() / scale;

    let op = assemble(geom, grid, bc, k)?;
    let mode_residual = weighted_residual(&op, lambda, w);
    let non_converged = !(mode_residual <= NON_CONVERGED_TOL);
    Ok(FluxReport {
        n_radial: grid.n_radial,
        bulk_term: bulk,
        boundary_y_term: boundary,
        horizon_term: horizon,
        time_derivative_term: time,
        residual,
        mode_residual,
        non_converged,
    })
}

/// The manufactured member u = r^{ν−3/2} e^{−r} (w = e^{−1/s}) on `grid`.
pub fn manufactured_mode(grid: &GridSpec) -> Vec<C64> {
    (0..grid.len())
        .map(|q| {
            let s = grid.s(q / grid.n_angular);
            C64::new(if s > 0.0 { (-1.0 / s).exp() } else { 0.0 }, 0.0)
        })
        .collect()
}

/// Identity reports for the manufactured mode at n and 2n radial nodes.
pub fn identity_refinement(
    geom: &KerrAds,
    n_radial: usize,
    n_angular: usize,
    lambda: C64,
    bc: &BoundaryCondition,
    field: KillingField,
) -> Result<(FluxReport, FluxReport), EnergyError> {
    let run = |n: usize| -> Result<FluxReport, EnergyError> {
        let grid = crate::operator::build_grid(geom, n, n_angular)?;
        identity_terms(geom, &grid, 0, &manufactured_mode(&grid), lambda, bc, field)
    };
    Ok((run(n_radial)?, run(2 * n_radial)?))
}

// ---------------------------------------------------------------------------
// Hardy-type absorption

/// ∫_Y |γ₋u|² (1−a²)⁻¹ dx dφ.
pub fn boundary_mass(op: &DiscreteOperator, w: &[C64]) -> Result<f64, EnergyError> {
    let l = op.layout()?;
    let (gm, _) = op.boundary_traces(w)?;
    let xi = 1.0 - l.geometry.params.spin.powi(2);
    Ok(2.0 * PI * gm.iter().enumerate().map(|(j, g)| l.grid.angular.weights[j] * g.norm_sqr() / xi).sum::<f64>())
}

/// Smallest C with ∫_Y|γ₋u|² ≤ δ‖u‖²_{H¹} + C‖u‖²_{L²} over `family` (never negative).
pub fn hardy_constant(op: &DiscreteOperator, family: &[Vec<C64>], delta: f64) -> Result<f64, EnergyError> {
    let mut c: f64 = 0.0;
    for w in family {
        let n = norms(op, w)?;
        let b = boundary_mass(op, w)?;
        if n.l2 > 0.0 {
            c = c.max((b - delta * n.h1 * n.h1) / (n.l2 * n.l2));
        }
    }
    Ok(c)
}

/// Smooth members cos(j s/s_max)·P_l(x) for j ≤ 3, l ≤ 2; their leading traces are nonzero.
pub fn hardy_family(grid: &GridSpec) -> Vec<Vec<C64>> {
    let mut out = Vec::new();
    for j in 0..=3 {
        for l in 0..=2 {
            out.push(
                (0..grid.len())
                    .map(|q| {
                        let s = grid.s(q / grid.n_angular) / grid.s_max;
                        let x = grid.x(q % grid.n_angular);
                        let p = crate::numerics::legendre::legendre_p(l, x).0;
                        C64::new((j as f64 * s).cos() * p, 0.0)
                    })
                    .collect(),
            );
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Upper-half-plane bound

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub lambda: C64,
    pub resolvent_norm: f64,
    /// ‖R(λ)‖·|λ|·Im λ.
    pub product: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    /// Samples dropped for lying in the excluded strip |λ| ≤ C₀ or outside Im λ > 0.
    pub skipped: usize,
    /// max/min of the product column.
    pub spread: f64,
}

/// Default excluded radius C₀.
pub const DEFAULT_STRIP: f64 = 2.0;

/// λ = it for t ∈ {5, 10, 20, 50} and Re λ ∈ {±5, ±10, ±20} with Im λ ∈ {1, 5}.
pub fn default_samples() -> Vec<C64> {
    let mut out: Vec<C64> = [5.0, 10.0, 20.0, 50.0].iter().map(|&t| C64::new(0.0, t)).collect();
    for &x in &[5.0, 10.0, 20.0] {
        for &y in &[1.0, 5.0] {
            out.push(C64::new(x, y));
            out.push(C64::new(-x, y));
        }
    }
    out
}

/// ‖P(λ)⁻¹‖·|λ|·Im λ over `samples`. With several operators (one per axial mode) the norm is
/// the maximum over them, which is the norm on data mixing those modes.
pub fn upper_bound_probe(ops: &[DiscreteOperator], samples: &[C64], strip: f64) -> Result<ProbeTable, EnergyError> {
    if ops.is_empty() {
        return Err(EnergyError::InvalidInput("no operators".into()));
    }
    let resolvents = ops.iter().map(Resolvent::new).collect::<Result<Vec<_>, _>>()?;
    let kept: Vec<C64> = samples.iter().copied().filter(|z| z.im > 0.0 && z.norm() > strip).collect();
    let rows: Vec<ProbeRow> = kept
        .par_iter()
        .map(|&z| {
            let n = resolvents.iter().map(|r| r.norm(z)).fold(0.0, f64::max);
            ProbeRow { lambda: z, resolvent_norm: n, product: n * z.norm() * z.im }
        })
        .collect();
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r.product), hi.max(r.product)));
    let spread = if rows.is_empty() { f64::NAN } else { hi / lo };
    Ok(ProbeTable { rows, skipped: samples.len() - kept.len(), spread })
}

// ---------------------------------------------------------------------------
// Indicial roots at the horizon

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicialRoots {
    pub s_value: C64,
    pub roots: [C64; 2],
}

/// s(λ,k) = 2(1−a²)(ak − (r₊²+a²)λ) and the roots {0, −i s/Δ_r'(r₊)} of Δ_r'(r₊)m² + i s m.
pub fn indicial_roots(geom: &KerrAds, lambda: C64, k: i32) -> IndicialRoots {
    let a = geom.params.spin;
    let rp = geom.r_plus();
    let s_value = (C64::new(a * k as f64, 0.0) - lambda * (rp * rp + a * a)) * (2.0 * (1.0 - a * a));
    let dp = delta_r_prime(&geom.params, rp);
    IndicialRoots { s_value, roots: [C64::new(0.0, 0.0), C64::new(0.0, -1.0) * s_value / dp] }
}

/// The exceptional frequency ak/(r₊²+a²) where both roots coincide.
pub fn exceptional_frequency(geom: &KerrAds, k: i32) -> f64 {
    horizon_angular_velocity(geom) * k as f64
}

/// Power-law fit log y = p log x + c through positive samples.
pub fn power_fit(points: &[(f64, f64)]) -> Option<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).unzip();
    fit_line(&xs, &ys)
}
