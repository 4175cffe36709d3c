//! Kerr–AdS geometry in units with cosmological constant −3.
//!
//! The metric signature is (+,−,−,−). Components are indexed (t, r, θ, φ).
//! In the Kerr-star chart the rescaled dual metric `ϱ² g⁻¹` is polynomial in
//! `Δ_r`, so it extends smoothly a little past the event horizon.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::quadrature::{self, QuadratureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no horizon: Δ_r > 0 for all r > 0 (min Δ_r = {min_delta:e})")]
    NoHorizon { min_delta: f64 },
    #[error("degenerate horizon at r = {r_plus}: Δ_r'(r₊) = {derivative:e}")]
    DegenerateHorizon { r_plus: f64, derivative: f64 },
    #[error("r = {r} outside the {chart:?} chart (needs r > {bound})")]
    OutsideChart { r: f64, chart: Chart, bound: f64 },
    #[error("horizon extension depth {delta} is too large: {reason}")]
    BadExtension { delta: f64, reason: String },
    #[error("Kerr-star shift quadrature failed: {0}")]
    Quadrature(#[from] QuadratureError),
}

/// Physical configuration: mass, spin, Klein–Gordon parameter ν and axial mode k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackHoleParams {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "a")]
    pub spin: f64,
    pub nu: f64,
    pub k: i32,
}

impl BlackHoleParams {
    pub fn new(mass: f64, spin: f64, nu: f64, k: i32) -> Result<Self, GeometryError> {
        let p = Self { mass, spin, nu, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(GeometryError::InvalidParams(format!("mass M must be positive, got {}", self.mass)));
        }
        if !(self.spin.is_finite() && self.spin.abs() < 1.0) {
            return Err(GeometryError::InvalidParams(format!("spin must satisfy |a| < 1, got a = {}", self.spin)));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(GeometryError::InvalidParams(format!("nu must be positive, got {}", self.nu)));
        }
        Ok(())
    }

    /// Same black hole, different axial mode.
    pub fn with_k(&self, k: i32) -> Self {
        Self { k, ..*self }
    }

    /// ν² − 9/4, the effective mass term multiplying ϱ².
    pub fn mass_term(&self) -> f64 {
        self.nu * self.nu - 2.25
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScalars {
    pub delta_r: f64,
    pub delta_theta: f64,
    pub rho2: f64,
}

pub fn delta_r(p: &BlackHoleParams, r: f64) -> f64 {
    let a2 = p.spin * p.spin;
    (r * r + a2) * (1.0 + r * r) - 2.0 * p.mass * r
}

pub fn delta_r_prime(p: &BlackHoleParams, r: f64) -> f64 {
    let a2 = p.spin * p.spin;
    4.0 * r * r * r + 2.0 * r * (1.0 + a2) - 2.0 * p.mass
}

pub fn metric_scalars(p: &BlackHoleParams, r: f64, theta: f64) -> MetricScalars {
    let a2 = p.spin * p.spin;
    let c = theta.cos();
    MetricScalars {
        delta_r: delta_r(p, r),
        delta_theta: 1.0 - a2 * c * c,
        rho2: r * r + a2 * c * c,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonData {
    pub r_plus: f64,
    pub surface_gravity: f64,
    /// Coefficient of Φ in the horizon generator K = T + (a/(r₊²+a²)) Φ.
    pub killing_coeff: f64,
    /// |a| < r₊².
    pub hawking_reall: bool,
}

/// Largest positive simple root of Δ_r, with surface gravity.
pub fn find_horizon(p: &BlackHoleParams) -> Result<HorizonData, GeometryError> {
    p.validate()?;
    let r_hi = 10.0 * (1.0 + p.mass);
    let n = 4000;
    let r_lo = 1e-6 * r_hi;
    let ratio = (r_hi / r_lo).powf(1.0 / n as f64);
    let mut bracket = None;
    let mut min_delta = f64::INFINITY;
    let mut prev_r = r_hi;
    let mut prev_d = delta_r(p, r_hi);
    for i in (0..n).rev() {
        let r = r_lo * ratio.powi(i);
        let d = delta_r(p, r);
        min_delta = min_delta.min(d);
        if d <= 0.0 && prev_d > 0.0 {
            bracket = Some((r, prev_r));
            break;
        }
        prev_r = r;
        prev_d = d;
    }
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => {
            // A double root touching zero from above is also a failure mode worth naming.
            let rmin = golden_min(|r| delta_r(p, r), r_lo, r_hi);
            let dmin = delta_r(p, rmin);
            if dmin.abs() <= 1e-12 * (1.0 + rmin.powi(4)) {
                return Err(GeometryError::DegenerateHorizon { r_plus: rmin, derivative: delta_r_prime(p, rmin) });
            }
            return Err(GeometryError::NoHorizon { min_delta: min_delta.min(dmin) });
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if delta_r(p, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = delta_r_prime(p, r);
        if d > 0.0 {
            let step = delta_r(p, r) / d;
            if step.abs() < 1e-10 * r {
                r -= step;
            }
        }
    }
    let dprime = delta_r_prime(p, r);
    if dprime <= 1e-10 * (1.0 + r.powi(3)) {
        return Err(GeometryError::DegenerateHorizon { r_plus: r, derivative: dprime });
    }
    let a = p.spin;
    let a2 = a * a;
    Ok(HorizonData {
        r_plus: r,
        surface_gravity: dprime / (2.0 * (1.0 - a2) * (r * r + a2)),
        killing_coeff: a / (r * r + a2),
        hawking_reall: a.abs() < r * r,
    })
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..200 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    BoyerLindquist,
    KerrStar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub r: f64,
    pub theta: f64,
    pub chart: Chart,
}

/// Components of `ϱ² g⁻¹` in the Kerr-star chart.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualMetric {
    pub tt: f64,
    pub tr: f64,
    pub tphi: f64,
    pub rr: f64,
    pub rphi: f64,
    pub thth: f64,
    pub phiphi: f64,
    pub rho2: f64,
}

/// Derivatives of the Kerr-star components with respect to r or θ.
pub type DualMetricDerivative = DualMetric;

/// Default horizon extension depth as a fraction of r₊.
pub const DEFAULT_DELTA_FACTOR: f64 = 0.05;

/// A black hole with its horizon data and the extension depth δ of X_δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrAds {
    pub params: BlackHoleParams,
    pub horizon: HorizonData,
    pub delta: f64,
}

impl KerrAds {
    pub fn new(params: BlackHoleParams) -> Result<Self, GeometryError> {
        Self::with_delta_factor(params, DEFAULT_DELTA_FACTOR)
    }

    /// Build with δ = `factor`·r₊, checking that Δ_r' > 0 and dt★ stays timelike on [r₊−δ, r₊].
    pub fn with_delta_factor(params: BlackHoleParams, factor: f64) -> Result<Self, GeometryError> {
        let horizon = find_horizon(&params)?;
        let delta = factor * horizon.r_plus;
        if !(factor > 0.0 && factor < 1.0) {
            return Err(GeometryError::BadExtension { delta, reason: "delta factor must lie in (0, 1)".into() });
        }
        let g = Self { params, horizon, delta };
        for i in 0..=64 {
            let r = horizon.r_plus - delta * i as f64 / 64.0;
            if delta_r_prime(&params, r) <= 0.0 {
                return Err(GeometryError::BadExtension { delta, reason: format!("Δ_r' ≤ 0 at r = {r}") });
            }
            for j in 1..16 {
                let th = std::f64::consts::PI * j as f64 / 16.0;
                if g.dual_metric(r, th).tt <= 0.0 {
                    return Err(GeometryError::BadExtension {
                        delta,
                        reason: format!("dt★ not timelike at r = {r}, θ = {th}"),
                    });
                }
            }
        }
        Ok(g)
    }

    pub fn r_plus(&self) -> f64 {
        self.horizon.r_plus
    }

    pub fn r_inner(&self) -> f64 {
        self.horizon.r_plus - self.delta
    }

    /// The slice-function shift f₊(r) = (a²−1)/(r²+1).
    pub fn f_plus(&self, r: f64) -> f64 {
        (self.params.spin * self.params.spin - 1.0) / (r * r + 1.0)
    }

    fn f_plus_prime(&self, r: f64) -> f64 {
        let a2 = self.params.spin * self.params.spin;
        2.0 * r * (1.0 - a2) / (1.0 + r * r).powi(2)
    }

    /// `ϱ² g⁻¹` in Kerr-star coordinates.
    pub fn dual_metric(&self, r: f64, theta: f64) -> DualMetric {
        let a = self.params.spin;
        let a2 = a * a;
        let e = 1.0 - a2;
        let ms = metric_scalars(&self.params, r, theta);
        let f = self.f_plus(r);
        let sin2 = theta.sin().powi(2);
        let ra = r * r + a2;
        DualMetric {
            rr: -ms.delta_r,
            tr: -ms.delta_r * f - e * ra,
            rphi: -e * a,
            tt: -ms.delta_r * f * f - 2.0 * e * f * ra - e * e * a2 * sin2 / ms.delta_theta,
            tphi: -e * a * f - e * e * a / ms.delta_theta,
            phiphi: -e * e / (ms.delta_theta * sin2),
            thth: -ms.delta_theta,
            rho2: ms.rho2,
        }
    }

    pub fn dual_metric_dr(&self, r: f64, _theta: f64) -> DualMetricDerivative {
        let a = self.params.spin;
        let a2 = a * a;
        let e = 1.0 - a2;
        let dr = delta_r(&self.params, r);
        let drp = delta_r_prime(&self.params, r);
        let f = self.f_plus(r);
        let fp = self.f_plus_prime(r);
        let ra = r * r + a2;
        DualMetric {
            rr: -drp,
            tr: -drp * f - dr * fp - 2.0 * e * r,
            rphi: 0.0,
            tt: -drp * f * f - 2.0 * dr * f * fp - 2.0 * e * (fp * ra + 2.0 * r * f),
            tphi: -e * a * fp,
            phiphi: 0.0,
            thth: 0.0,
            rho2: 2.0 * r,
        }
    }

    pub fn dual_metric_dtheta(&self, _r: f64, theta: f64) -> DualMetricDerivative {
        let a = self.params.spin;
        let a2 = a * a;
        let e = 1.0 - a2;
        let (s, c) = theta.sin_cos();
        let dth = 1.0 - a2 * c * c;
        let sc = s * c;
        DualMetric {
            rr: 0.0,
            tr: 0.0,
            rphi: 0.0,
            tt: -e * e * e * a2 * 2.0 * sc / (dth * dth),
            tphi: e * e * a * 2.0 * a2 * sc / (dth * dth),
            phiphi: e * e * 2.0 * sc * (a2 * s * s + dth) / (dth * s * s).powi(2),
            thth: -2.0 * a2 * sc,
            rho2: -2.0 * a2 * sc,
        }
    }

    /// Boyer–Lindquist `ϱ² g⁻¹` (valid for r > r₊).
    pub fn dual_metric_bl(&self, r: f64, theta: f64) -> DualMetric {
        let a = self.params.spin;
        let a2 = a * a;
        let e = 1.0 - a2;
        let ms = metric_scalars(&self.params, r, theta);
        let sin2 = theta.sin().powi(2);
        let ra = r * r + a2;
        let dt = ms.delta_theta;
        DualMetric {
            rr: -ms.delta_r,
            tr: 0.0,
            rphi: 0.0,
            tt: e * e * ra * ra / ms.delta_r - e * e * a2 * sin2 / dt,
            tphi: e * e * a * ra / ms.delta_r - e * e * a / dt,
            phiphi: e * e * a2 / ms.delta_r - e * e / (dt * sin2),
            thth: -dt,
            rho2: ms.rho2,
        }
    }

    /// Inverse metric g⁻¹ as a 4×4 array in the point's chart.
    pub fn inverse_metric(&self, point: &SpacetimePoint) -> Result<[[f64; 4]; 4], GeometryError> {
        let g = match point.chart {
            Chart::BoyerLindquist => {
                if point.r <= self.r_plus() {
                    return Err(GeometryError::OutsideChart { r: point.r, chart: point.chart, bound: self.r_plus() });
                }
                self.dual_metric_bl(point.r, point.theta)
            }
            Chart::KerrStar => {
                if point.r <= self.r_inner() {
                    return Err(GeometryError::OutsideChart { r: point.r, chart: point.chart, bound: self.r_inner() });
                }
                self.dual_metric(point.r, point.theta)
            }
        };
        Ok(g.to_matrix())
    }

    /// Derivatives (F_t', F_φ') of the Kerr-star shifts.
    pub fn kerr_star_shift_derivative(&self, r: f64) -> (f64, f64) {
        let a = self.params.spin;
        let a2 = a * a;
        let e = 1.0 - a2;
        let dr = delta_r(&self.params, r);
        (e * (r * r + a2) / dr + self.f_plus(r), a * e / dr)
    }

    /// Kerr-star shifts (F_t, F_φ) at r > r₊, normalized to vanish at infinity.
    pub fn kerr_star_shift(&self, r: f64) -> Result<(f64, f64), GeometryError> {
        if r <= self.r_plus() {
            return Err(GeometryError::OutsideChart { r, chart: Chart::BoyerLindquist, bound: self.r_plus() });
        }
        let a = self.params.spin;
        let a2 = a * a;
        let e = 1.0 - a2;
        let m = self.params.mass;
        // In u = 1/r the integrands are u⁻² F'(1/u); the cancellation in F_t' is done analytically.
        let ft_u = |u: f64| {
            let r = 1.0 / u;
            let dr = delta_r(&self.params, r);
            // e (r²+a²)/Δ_r − e/(r²+1) = e [ (r²+a²)(r²+1) − Δ_r ] / (Δ_r (r²+1)) = e·2Mr / (Δ_r (r²+1))
            let val = e * 2.0 * m * r / (dr * (r * r + 1.0));
            val / (u * u)
        };
        let fphi_u = |u: f64| {
            let r = 1.0 / u;
            a * e / delta_r(&self.params, r) / (u * u)
        };
        let upper = 1.0 / r;
        let ft = -quadrature::integrate(ft_u, 0.0, upper, 1e-15, 1e-11)?;
        let fphi = if a == 0.0 { 0.0 } else { -quadrature::integrate(fphi_u, 0.0, upper, 1e-15, 1e-11)? };
        Ok((ft, fphi))
    }

    /// Δ_r ≤ a² Δ_θ sin²θ.
    pub fn ergoregion_contains(&self, r: f64, theta: f64) -> bool {
        ergoregion_contains(&self.params, r, theta)
    }
}

pub fn ergoregion_contains(p: &BlackHoleParams, r: f64, theta: f64) -> bool {
    let ms = metric_scalars(p, r, theta);
    ms.delta_r <= p.spin * p.spin * ms.delta_theta * theta.sin().powi(2)
}

impl DualMetric {
    /// g⁻¹ = (ϱ² g⁻¹)/ϱ² as a symmetric matrix in (t, r, θ, φ) order.
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let s = 1.0 / self.rho2;
        [
            [self.tt * s, self.tr * s, 0.0, self.tphi * s],
            [self.tr * s, self.rr * s, 0.0, self.rphi * s],
            [0.0, 0.0, self.thth * s, 0.0],
            [self.tphi * s, self.rphi * s, 0.0, self.phiphi * s],
        ]
    }

    /// Contract `ϱ² g⁻¹` with two covectors given in (t, r, θ, φ) components.
    pub fn pair(&self, x: [f64; 4], y: [f64; 4]) -> f64 {
        let m = [
            [self.tt, self.tr, 0.0, self.tphi],
            [self.tr, self.rr, 0.0, self.rphi],
            [0.0, 0.0, self.thth, 0.0],
            [self.tphi, self.rphi, 0.0, self.phiphi],
        ];
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += x[i] * m[i][j] * y[j];
            }
        }
        acc
    }
}

/// Convenience wrapper building [`KerrAds`] with the default δ.
pub fn inverse_metric(p: &BlackHoleParams, point: &SpacetimePoint) -> Result<[[f64; 4]; 4], GeometryError> {
    KerrAds::new(*p)?.inverse_metric(point)
}

pub fn kerr_star_shift(p: &BlackHoleParams, r: f64) -> Result<(f64, f64), GeometryError> {
    KerrAds::new(*p)?.kerr_star_shift(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bh(m: f64, a: f64) -> BlackHoleParams {
        BlackHoleParams::new(m, a, 1.5, 0).unwrap()
    }

    #[test]
    fn schwarzschild_ads_unit_mass_horizon() {
        let h = find_horizon(&bh(1.0, 0.0)).unwrap();
        assert!((h.r_plus - 1.0).abs() < 1e-14);
        assert!((h.surface_gravity - 2.0).abs() < 1e-12);
        assert!(delta_r(&bh(1.0, 0.0), h.r_plus).abs() <= 1e-12);
    }

    #[test]
    fn light_fast_spinner_has_no_horizon() {
        assert!(matches!(find_horizon(&bh(0.05, 0.9)), Err(GeometryError::NoHorizon { .. })));
    }

    #[test]
    fn scalars_by_direct_substitution() {
        // r = 2, θ = 0, a = 0.5, M = 1: Δ_r = 4.25·5 − 4 = 17.25, Δ_θ = 0.75, ϱ² = 4.25.
        let ms = metric_scalars(&bh(1.0, 0.5), 2.0, 0.0);
        assert!((ms.delta_r - 17.25).abs() < 1e-14);
        assert!((ms.delta_theta - 0.75).abs() < 1e-15);
        assert!((ms.rho2 - 4.25).abs() < 1e-15);
    }

    #[test]
    fn invalid_spin_is_rejected() {
        assert!(BlackHoleParams::new(1.0, 1.2, 1.5, 0).is_err());
        assert!(BlackHoleParams::new(-1.0, 0.0, 1.5, 0).is_err());
    }

    #[test]
    fn static_bl_metric_has_no_mixing() {
        let g = KerrAds::new(bh(1.0, 0.0)).unwrap();
        let m = g.inverse_metric(&SpacetimePoint { r: 3.0, theta: 1.0, chart: Chart::BoyerLindquist }).unwrap();
        let dr = delta_r(&g.params, 3.0);
        assert!((m[0][0] - 81.0 / (9.0 * dr)).abs() < 1e-14);
        assert_eq!(m[0][3], 0.0);
    }

    #[test]
    fn kerr_star_chart_is_regular_at_horizon() {
        let g = KerrAds::new(bh(1.0, 0.4)).unwrap();
        let m = g.inverse_metric(&SpacetimePoint { r: g.r_plus(), theta: 0.7, chart: Chart::KerrStar }).unwrap();
        assert!(m.iter().flatten().all(|v| v.is_finite()));
        let out = g.inverse_metric(&SpacetimePoint { r: g.r_plus(), theta: 0.7, chart: Chart::BoyerLindquist });
        assert!(out.is_err());
    }

    fn push_forward(g: &KerrAds, r: f64, th: f64) -> [[f64; 4]; 4] {
        let bl = g.dual_metric_bl(r, th).to_matrix();
        let (ft, fphi) = g.kerr_star_shift_derivative(r);
        // d t★ = dt + F_t' dr, d φ★ = dφ + F_φ' dr.
        let mut j = [[0.0; 4]; 4];
        for (i, row) in j.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        j[0][1] = ft;
        j[3][1] = fphi;
        let mut out = [[0.0; 4]; 4];
        for mu in 0..4 {
            for nu in 0..4 {
                let mut acc = 0.0;
                for al in 0..4 {
                    for be in 0..4 {
                        acc += j[mu][al] * j[nu][be] * bl[al][be];
                    }
                }
                out[mu][nu] = acc;
            }
        }
        out
    }

    #[test]
    fn chain_rule_links_the_two_charts() {
        let g = KerrAds::new(bh(1.0, 0.3)).unwrap();
        let pushed = push_forward(&g, 3.0, 1.0);
        let ks = g.dual_metric(3.0, 1.0).to_matrix();
        for mu in 0..4 {
            for nu in 0..4 {
                assert!((pushed[mu][nu] - ks[mu][nu]).abs() < 1e-12, "{mu}{nu}");
            }
        }
    }

    #[test]
    fn horizon_limit_of_pushed_bl_metric() {
        let g = KerrAds::new(bh(1.0, 0.3)).unwrap();
        let ks = g.dual_metric(g.r_plus(), 0.9).to_matrix();
        let pushed = push_forward(&g, g.r_plus() + 1e-7, 0.9);
        for mu in 0..4 {
            for nu in 0..4 {
                assert!((pushed[mu][nu] - ks[mu][nu]).abs() < 1e-5, "{mu}{nu}");
            }
        }
    }

    #[test]
    fn shift_derivative_matches_finite_difference() {
        let g = KerrAds::new(bh(1.0, 0.4)).unwrap();
        let h = 1e-4;
        let (_, fp) = g.kerr_star_shift(2.0 + h).unwrap();
        let (_, fm) = g.kerr_star_shift(2.0 - h).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        let exact = 0.4 * (1.0 - 0.16) / delta_r(&g.params, 2.0);
        assert!((fd - exact).abs() < 1e-7 * exact.abs());
        let (ftp, _) = g.kerr_star_shift(2.0 + h).unwrap();
        let (ftm, _) = g.kerr_star_shift(2.0 - h).unwrap();
        assert!(((ftp - ftm) / (2.0 * h) - g.kerr_star_shift_derivative(2.0).0).abs() < 1e-7);
    }

    #[test]
    fn shifts_vanish_at_infinity_and_phi_shift_vanishes_without_spin() {
        let g = KerrAds::new(bh(1.0, 0.4)).unwrap();
        let (ft, fphi) = g.kerr_star_shift(1e7).unwrap();
        assert!(ft.abs() < 1e-12 && fphi.abs() < 1e-12);
        let g0 = KerrAds::new(bh(1.0, 0.0)).unwrap();
        assert_eq!(g0.kerr_star_shift(1.5).unwrap().1, 0.0);
    }

    #[test]
    fn ergoregion_examples() {
        let g0 = KerrAds::new(bh(1.0, 0.0)).unwrap();
        assert!(!g0.ergoregion_contains(1.3, 1.0));
        let g = KerrAds::new(bh(1.0, 0.5)).unwrap();
        assert!(g.ergoregion_contains(g.r_plus(), PI / 2.0));
        let r = g.r_plus() + 0.01;
        let th = PI / 4.0;
        let ms = metric_scalars(&g.params, r, th);
        let direct = ms.delta_r <= 0.25 * ms.delta_theta * 0.5;
        assert_eq!(g.ergoregion_contains(r, th), direct);
    }

    #[test]
    fn metric_derivatives_match_finite_differences() {
        let g = KerrAds::new(bh(0.7, 0.35)).unwrap();
        let (r, th, h) = (1.3, 0.8, 1e-6);
        let d = g.dual_metric_dr(r, th);
        let fd = |f: fn(&DualMetric) -> f64| (f(&g.dual_metric(r + h, th)) - f(&g.dual_metric(r - h, th))) / (2.0 * h);
        assert!((d.tt - fd(|m| m.tt)).abs() < 1e-7);
        assert!((d.tr - fd(|m| m.tr)).abs() < 1e-7);
        assert!((d.tphi - fd(|m| m.tphi)).abs() < 1e-7);
        assert!((d.rr - fd(|m| m.rr)).abs() < 1e-7);
        let dt = g.dual_metric_dtheta(r, th);
        let fdt = |f: fn(&DualMetric) -> f64| (f(&g.dual_metric(r, th + h)) - f(&g.dual_metric(r, th - h))) / (2.0 * h);
        assert!((dt.tt - fdt(|m| m.tt)).abs() < 1e-7);
        assert!((dt.tphi - fdt(|m| m.tphi)).abs() < 1e-7);
        assert!((dt.phiphi - fdt(|m| m.phiphi)).abs() < 1e-6);
        assert!((dt.thth - fdt(|m| m.thth)).abs() < 1e-7);
        assert!((dt.rho2 - fdt(|m| m.rho2)).abs() < 1e-7);
    }
}
