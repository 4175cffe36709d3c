//! Semiclassical principal symbol p = −g⁻¹(ζ, ζ), ζ = ξ·dx − z dt★, its characteristic set,
//! and the rescaled Hamilton flow ⟨ξ⟩⁻¹H_p on the fiber-compactified cotangent bundle.
//!
//! Near fiber infinity the flow runs in the chart (ρ, ω) = (|ξ|⁻¹, ξ/|ξ|), where it extends
//! smoothly to ρ = 0. |·| is the Euclidean norm of (ξ_r, ξ_θ, ξ_φ).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DualMetric, KerrAds};

#[cfg(test)]
mod tests;

/// |ξ| above which the flow switches to the (ρ, ω) chart, and below which it switches back.
pub const FIBER_SWITCH: f64 = 1e6;
const FIBER_RETURN: f64 = 1e5;
/// Distance to L± (in r, ρ, ω) counted as converged.
pub const CONVERGENCE_DISTANCE: f64 = 1e-6;
/// Consecutive accepted steps within CONVERGENCE_DISTANCE.
pub const CONVERGENCE_STEPS: usize = 10;
pub const RELATIVE_TOL: f64 = 1e-10;
/// Tolerances tried in turn when a trajectory ends with more drift than DRIFT_TOL allows.
/// Drift made while |ξ| is large is amplified once the fibers contract, which no per-step
/// test can anticipate.
const RETRY_TOLS: [f64; 3] = [RELATIVE_TOL, 1e-12, 1e-13];
/// Allowed drift of ⟨ξ⟩⁻²p, relative to 1 + |p(0)|.
pub const DRIFT_TOL: f64 = 1e-8;
/// Share of the drift allowance a single step may use.
const STEP_DRIFT_FRACTION: f64 = 1e-3;
const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("characteristic point with light-cone pairing {pairing:e} inside tolerance")]
    AmbiguousClassification { pairing: f64 },
    #[error("z must be nonzero")]
    ZeroFrequency,
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64, last: Box<FlowSample> },
    #[error("step limit {steps} reached at t = {t}")]
    StepLimit { steps: usize, t: f64 },
    #[error("point outside the chart domain: {0}")]
    OutsideChart(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub xi_r: f64,
    pub xi_theta: f64,
    pub xi_phi: f64,
    pub z: f64,
}

impl PhasePoint {
    pub fn xi_norm(&self) -> f64 {
        (self.xi_r * self.xi_r + self.xi_theta * self.xi_theta + self.xi_phi * self.xi_phi).sqrt()
    }

    /// ⟨ξ⟩ = (1 + |ξ|²)^{1/2}.
    pub fn japanese_bracket(&self) -> f64 {
        (1.0 + self.xi_norm().powi(2)).sqrt()
    }

    /// (x, cξ; cz).
    pub fn scaled(&self, c: f64) -> Self {
        Self { xi_r: c * self.xi_r, xi_theta: c * self.xi_theta, xi_phi: c * self.xi_phi, z: c * self.z, ..*self }
    }

    /// (x, −ξ; −z).
    pub fn reflected(&self) -> Self {
        self.scaled(-1.0)
    }

    fn zeta(&self) -> [f64; 4] {
        [-self.z, self.xi_r, self.xi_theta, self.xi_phi]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Characteristic {
    SigmaPlus,
    SigmaMinus,
    NotCharacteristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitReason {
    ReachedInnerBoundary,
    ReachedOuterBound,
    ConvergedToLPlus,
    ConvergedToLMinus,
    MaxTime,
}

impl ExitReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitReason::ReachedInnerBoundary => "reached_inner_boundary",
            ExitReason::ReachedOuterBound => "reached_outer_bound",
            ExitReason::ConvergedToLPlus => "converged_to_l_plus",
            ExitReason::ConvergedToLMinus => "converged_to_l_minus",
            ExitReason::MaxTime => "max_time",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub point: PhasePoint,
    pub p_value: f64,
    /// ⟨ξ⟩⁻¹.
    pub fiber_scale: f64,
    /// ξ/|ξ|, still defined at fiber infinity.
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub samples: Vec<FlowSample>,
    pub exit_reason: ExitReason,
    /// max |p(t) − p(0)| over samples in the momentum chart.
    pub max_drift: f64,
    /// max ⟨ξ⟩⁻²|p(t) − p(0)| over all samples.
    pub max_scaled_drift: f64,
    /// Relative tolerance the returned run used.
    pub relative_tol: f64,
}

impl FlowTrajectory {
    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("trajectories hold at least the start")
    }
}

/// The radial window the flow is confined to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowWindow {
    pub r_min: f64,
    pub r_max: f64,
}

impl FlowWindow {
    /// {r₊ − δ < r < r₊ + δ}.
    pub fn horizon(geom: &KerrAds, delta: f64) -> Self {
        Self { r_min: geom.r_plus() - delta, r_max: geom.r_plus() + delta }
    }
}

// ---------------------------------------------------------------------------
// Symbol

fn matrix(g: &DualMetric) -> [[f64; 4]; 4] {
    [
        [g.tt, g.tr, 0.0, g.tphi],
        [g.tr, g.rr, 0.0, g.rphi],
        [0.0, 0.0, g.thth, 0.0],
        [g.tphi, g.rphi, 0.0, g.phiphi],
    ]
}

fn quad(m: &[[f64; 4]; 4], a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += a[i] * m[i][j] * b[j];
        }
    }
    acc
}

/// p and its partial derivatives for the covector ζ = (ζ_t, ζ_r, ζ_θ, ζ_φ) at (r, θ).
struct SymbolJet {
    /// ∂p/∂ζ_{r,θ,φ}.
    dxi: [f64; 3],
    /// ∂p/∂(r, θ, φ).
    dx: [f64; 3],
}

fn symbol_jet(geom: &KerrAds, r: f64, theta: f64, zeta: &[f64; 4]) -> SymbolJet {
    let g = geom.dual_metric(r, theta);
    let gr = geom.dual_metric_dr(r, theta);
    let gth = geom.dual_metric_dtheta(r, theta);
    let (m, mr, mth) = (matrix(&g), matrix(&gr), matrix(&gth));
    let q = quad(&m, zeta, zeta);
    let inv = 1.0 / g.rho2;
    let mut dxi = [0.0; 3];
    for (i, d) in dxi.iter_mut().enumerate() {
        *d = -2.0 * inv * (0..4).map(|nu| m[i + 1][nu] * zeta[nu]).sum::<f64>();
    }
    let dr = -inv * quad(&mr, zeta, zeta) + q * gr.rho2 * inv * inv;
    let dth = -inv * quad(&mth, zeta, zeta) + q * gth.rho2 * inv * inv;
    SymbolJet { dxi, dx: [dr, dth, 0.0] }
}

/// p(x, ξ; z) = −g⁻¹(ξ·dx − z dt★, ξ·dx − z dt★) in the Kerr-star chart.
pub fn principal_symbol(geom: &KerrAds, pt: &PhasePoint) -> f64 {
    let g = geom.dual_metric(pt.r, pt.theta);
    let z = pt.zeta();
    -g.pair(z, z) / g.rho2
}

/// g⁻¹(ξ·dx − z dt★, dt★).
pub fn light_cone_pairing(geom: &KerrAds, pt: &PhasePoint) -> f64 {
    let g = geom.dual_metric(pt.r, pt.theta);
    g.pair(pt.zeta(), [1.0, 0.0, 0.0, 0.0]) / g.rho2
}

/// Default classification tolerance.
pub const CLASSIFY_TOL: f64 = 1e-8;

/// Σ± by the sign of ±⟨ξ⟩⁻¹g(ζ, dt★) < 0 on {|p| ≤ tol⟨ξ⟩²}.
pub fn classify(geom: &KerrAds, pt: &PhasePoint, tol: f64) -> Result<Characteristic, FlowError> {
    if pt.z == 0.0 {
        return Err(FlowError::ZeroFrequency);
    }
    let jb = pt.japanese_bracket();
    if principal_symbol(geom, pt).abs() > tol * jb * jb {
        return Ok(Characteristic::NotCharacteristic);
    }
    let pairing = light_cone_pairing(geom, pt) / jb;
    if pairing.abs() <= tol {
        return Err(FlowError::AmbiguousClassification { pairing });
    }
    Ok(if pairing < 0.0 { Characteristic::SigmaPlus } else { Characteristic::SigmaMinus })
}

/// ⟨ξ⟩⁻¹H_p as (ṙ, θ̇, φ̇, ξ̇_r, ξ̇_θ, ξ̇_φ).
pub fn hamilton_rhs(geom: &KerrAds, pt: &PhasePoint) -> [f64; 6] {
    let j = symbol_jet(geom, pt.r, pt.theta, &pt.zeta());
    let s = 1.0 / pt.japanese_bracket();
    [s * j.dxi[0], s * j.dxi[1], s * j.dxi[2], -s * j.dx[0], -s * j.dx[1], -s * j.dx[2]]
}

// ---------------------------------------------------------------------------
// Integration

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chart {
    /// y = (r, θ, φ, ξ_r, ξ_θ, ξ_φ, unused).
    Momentum,
    /// y = (r, θ, φ, ρ, ω_r, ω_θ, ω_φ).
    Sphere,
}

type State = [f64; 7];

fn to_state(pt: &PhasePoint, chart: Chart) -> State {
    match chart {
        Chart::Momentum => [pt.r, pt.theta, pt.phi, pt.xi_r, pt.xi_theta, pt.xi_phi, 0.0],
        Chart::Sphere => {
            let n = pt.xi_norm();
            [pt.r, pt.theta, pt.phi, 1.0 / n, pt.xi_r / n, pt.xi_theta / n, pt.xi_phi / n]
        }
    }
}

fn to_point(y: &State, chart: Chart, z: f64) -> PhasePoint {
    match chart {
        Chart::Momentum => PhasePoint { r: y[0], theta: y[1], phi: y[2], xi_r: y[3], xi_theta: y[4], xi_phi: y[5], z },
        Chart::Sphere => {
            let inv = 1.0 / y[3];
            PhasePoint {
                r: y[0],
                theta: y[1],
                phi: y[2],
                xi_r: y[4] * inv,
                xi_theta: y[5] * inv,
                xi_phi: y[6] * inv,
                z,
            }
        }
    }
}

fn rhs(geom: &KerrAds, y: &State, chart: Chart, z: f64) -> State {
    match chart {
        Chart::Momentum => {
            let v = hamilton_rhs(geom, &to_point(y, chart, z));
            [v[0], v[1], v[2], v[3], v[4], v[5], 0.0]
        }
        Chart::Sphere => {
            let rho = y[3];
            let om = [y[4], y[5], y[6]];
            let j = symbol_jet(geom, y[0], y[1], &[-rho * z, om[0], om[1], om[2]]);
            let c = 1.0 / (1.0 + rho * rho).sqrt();
            let odx: f64 = (0..3).map(|i| om[i] * j.dx[i]).sum();
            [
                c * j.dxi[0],
                c * j.dxi[1],
                c * j.dxi[2],
                rho * c * odx,
                -c * (j.dx[0] - om[0] * odx),
                -c * (j.dx[1] - om[1] * odx),
                -c * (j.dx[2] - om[2] * odx),
            ]
        }
    }
}

/// ⟨ξ⟩⁻²p and ⟨ξ⟩⁻¹ at a state.
fn scaled_symbol(geom: &KerrAds, y: &State, chart: Chart, z: f64) -> (f64, f64) {
    match chart {
        Chart::Momentum => {
            let pt = to_point(y, chart, z);
            let jb = pt.japanese_bracket();
            (principal_symbol(geom, &pt) / (jb * jb), 1.0 / jb)
        }
        Chart::Sphere => {
            let rho = y[3];
            let g = geom.dual_metric(y[0], y[1]);
            let zeta = [-rho * z, y[4], y[5], y[6]];
            let pr = -g.pair(zeta, zeta) / g.rho2;
            (pr / (1.0 + rho * rho), rho / (1.0 + rho * rho).sqrt())
        }
    }
}

/// Distance from a state to L± in (r, ρ, ω).
fn distance_to_l(geom: &KerrAds, y: &State, chart: Chart, sign: f64) -> f64 {
    let (rho, om) = match chart {
        Chart::Momentum => {
            let n = (y[3] * y[3] + y[4] * y[4] + y[5] * y[5]).sqrt();
            if n == 0.0 {
                return f64::INFINITY;
            }
            (1.0 / n, [y[3] / n, y[4] / n, y[5] / n])
        }
        Chart::Sphere => (y[3], [y[4], y[5], y[6]]),
    };
    let dr = y[0] - geom.r_plus();
    (dr * dr + rho * rho + (om[0] - sign).powi(2) + om[1] * om[1] + om[2] * om[2]).sqrt()
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand–Prince step: (5th-order solution, error estimate).
fn dp_step(geom: &KerrAds, y: &State, chart: Chart, z: f64, h: f64, rtol: f64) -> (State, f64) {
    let mut k = [[0.0; 7]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..7 {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = rhs(geom, &ys, chart, z);
    }
    let mut y5 = *y;
    let mut err: f64 = 0.0;
    for i in 0..7 {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for s in 0..7 {
            d5 += B5[s] * k[s][i];
            d4 += B4[s] * k[s][i];
        }
        y5[i] += h * d5;
        let sc = rtol * (1.0 + y[i].abs().max(y5[i].abs()));
        err = err.max((h * (d5 - d4)).abs() / sc);
    }
    if chart == Chart::Sphere {
        let n = (y5[4] * y5[4] + y5[5] * y5[5] + y5[6] * y5[6]).sqrt();
        for v in &mut y5[4..7] {
            *v /= n;
        }
    }
    (y5, err)
}

fn sample(geom: &KerrAds, y: &State, chart: Chart, z: f64, t: f64) -> FlowSample {
    let point = to_point(y, chart, z);
    let (sp, fs) = scaled_symbol(geom, y, chart, z);
    // At fiber infinity p itself is undefined.
    let p_value = if fs > 0.0 { sp / (fs * fs) } else { f64::NAN };
    let direction = match chart {
        Chart::Momentum => {
            let n = point.xi_norm();
            if n > 0.0 { [y[3] / n, y[4] / n, y[5] / n] } else { [0.0; 3] }
        }
        Chart::Sphere => [y[4], y[5], y[6]],
    };
    FlowSample { t, point, p_value, fiber_scale: fs, direction }
}

/// Integrate ⟨ξ⟩⁻¹H_p from `start` for flow time `t_max` (negative for backward time) inside
/// `window`. Exits at the window edges are located to 1e-12 in r.
pub fn integrate(
    geom: &KerrAds,
    start: &PhasePoint,
    window: FlowWindow,
    t_max: f64,
) -> Result<FlowTrajectory, FlowError> {
    let chart = if start.xi_norm() > FIBER_SWITCH { Chart::Sphere } else { Chart::Momentum };
    let allowance = DRIFT_TOL * (1.0 + principal_symbol(geom, start).abs());
    let mut last = None;
    for rtol in RETRY_TOLS {
        let tr = run(geom, to_state(start, chart), chart, start.z, window, t_max, rtol)?;
        if tr.max_scaled_drift <= allowance {
            return Ok(tr);
        }
        log::debug!("drift {:.1e} at rtol {rtol:e}; retrying", tr.max_scaled_drift);
        last = Some(tr);
    }
    Ok(last.expect("at least one tolerance"))
}

/// Integrate from a point of the compactified bundle given by base point, ρ = |ξ|⁻¹ ≥ 0 and
/// fiber direction ω (normalized here). ρ = 0 starts on fiber infinity, which is invariant.
pub fn integrate_compactified(
    geom: &KerrAds,
    base: [f64; 3],
    rho: f64,
    omega: [f64; 3],
    z: f64,
    window: FlowWindow,
    t_max: f64,
) -> Result<FlowTrajectory, FlowError> {
    let n = (omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]).sqrt();
    if !(rho >= 0.0 && n > 0.0) {
        return Err(FlowError::OutsideChart(format!("ρ = {rho}, |ω| = {n}")));
    }
    let y = [base[0], base[1], base[2], rho, omega[0] / n, omega[1] / n, omega[2] / n];
    run(geom, y, Chart::Sphere, z, window, t_max, RELATIVE_TOL)
}

fn run(
    geom: &KerrAds,
    mut y: State,
    mut chart: Chart,
    z: f64,
    window: FlowWindow,
    t_max: f64,
    rtol: f64,
) -> Result<FlowTrajectory, FlowError> {
    if !(y[0] > geom.r_inner() && y[1] > 0.0 && y[1] < std::f64::consts::PI) {
        return Err(FlowError::OutsideChart(format!("r = {}, θ = {}", y[0], y[1])));
    }
    let dir = if t_max < 0.0 { -1.0 } else { 1.0 };
    let t_end = t_max.abs();
    let (sp0, fs0) = scaled_symbol(geom, &y, chart, z);
    // On fiber infinity p is infinite and only the characteristic set is invariant, so the
    // drift control is off.
    let p0 = if fs0 > 0.0 { sp0 / (fs0 * fs0) } else { f64::NAN };
    let drift_scale = DRIFT_TOL * (1.0 + p0.abs());
    let mut samples = vec![sample(geom, &y, chart, z, 0.0)];
    let (mut max_drift, mut max_scaled): (f64, f64) = (0.0, 0.0);
    let mut t = 0.0;
    let mut h = 1e-3;
    let mut near = [0usize; 2];
    let mut steps = 0;
    let exit = loop {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(FlowError::StepLimit { steps: MAX_STEPS, t });
        }
        if h < 1e-14 * (1.0 + t) {
            return Err(FlowError::StepSizeUnderflow {
                t: dir * t,
                h,
                last: Box::new(*samples.last().expect("start sample")),
            });
        }
        let h_try = h.min(t_end - t);
        let (y_new, err_state) = dp_step(geom, &y, chart, z, dir * h_try, rtol);
        // The drift this step adds, at the new fiber scale, enters the error norm so the
        // controller shrinks steps where conservation degrades. Past drift cannot be undone
        // by a smaller step, so the cumulative value is only recorded.
        let (sp_old, fs_old) = scaled_symbol(geom, &y, chart, z);
        let (sp, fs) = scaled_symbol(geom, &y_new, chart, z);
        let err = if p0.is_finite() && fs_old > 0.0 {
            let increment = (sp - sp_old * (fs / fs_old).powi(2)).abs();
            err_state.max(increment / (STEP_DRIFT_FRACTION * drift_scale))
        } else {
            err_state
        };
        if !(err <= 1.0) {
            h = h_try * if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            continue;
        }
        // Window exits: shorten the step until the crossing is resolved.
        let crossing = if y_new[0] <= window.r_min {
            Some((window.r_min, ExitReason::ReachedInnerBoundary))
        } else if y_new[0] >= window.r_max {
            Some((window.r_max, ExitReason::ReachedOuterBound))
        } else {
            None
        };
        if let Some((edge, reason)) = crossing {
            let (mut lo, mut hi) = (0.0, h_try);
            let mut y_hit = y_new;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let (ym, _) = dp_step(geom, &y, chart, z, dir * mid, rtol);
                let inside = ym[0] > window.r_min && ym[0] < window.r_max;
                if inside {
                    lo = mid;
                } else {
                    hi = mid;
                    y_hit = ym;
                }
                if (ym[0] - edge).abs() < 1e-12 || hi - lo < 1e-15 * (1.0 + t) {
                    y_hit = ym;
                    break;
                }
            }
            t += 0.5 * (lo + hi);
            y = y_hit;
            record_drift(geom, &y, chart, z, p0, &mut max_drift, &mut max_scaled);
            samples.push(sample(geom, &y, chart, z, dir * t));
            break reason;
        }
        t += h_try;
        y = y_new;
        let s = sample(geom, &y, chart, z, dir * t);
        record_drift(geom, &y, chart, z, p0, &mut max_drift, &mut max_scaled);
        samples.push(s);

        // Chart switches.
        match chart {
            Chart::Momentum if s.point.xi_norm() > FIBER_SWITCH => {
                chart = Chart::Sphere;
                y = to_state(&s.point, chart);
            }
            Chart::Sphere if y[3] > 1.0 / FIBER_RETURN => {
                chart = Chart::Momentum;
                y = to_state(&s.point, chart);
            }
            _ => {}
        }

        for (slot, sign) in [(0, 1.0), (1, -1.0)] {
            near[slot] = if distance_to_l(geom, &y, chart, sign) < CONVERGENCE_DISTANCE { near[slot] + 1 } else { 0 };
        }
        if near[0] >= CONVERGENCE_STEPS {
            break ExitReason::ConvergedToLPlus;
        }
        if near[1] >= CONVERGENCE_STEPS {
            break ExitReason::ConvergedToLMinus;
        }
        if t >= t_end {
            break ExitReason::MaxTime;
        }
        h = h_try * (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    };
    Ok(FlowTrajectory { samples, exit_reason: exit, max_drift, max_scaled_drift: max_scaled, relative_tol: rtol })
}

fn record_drift(geom: &KerrAds, y: &State, chart: Chart, z: f64, p0: f64, max_drift: &mut f64, max_scaled: &mut f64) {
    if !p0.is_finite() {
        return;
    }
    let (sp, fs) = scaled_symbol(geom, y, chart, z);
    let scaled = (sp - p0 * fs * fs).abs();
    *max_scaled = max_scaled.max(scaled);
    if chart == Chart::Momentum {
        *max_drift = max_drift.max(scaled / (fs * fs));
    }
}

// ---------------------------------------------------------------------------
// Seeds and the horizon dichotomy

/// Random points of Σ₊ ∩ {|r − r₊| ≤ δ} with z ∈ z_range, from a seeded ChaCha stream.
/// ξ_θ, ξ_φ are drawn from [−2, 2]; ξ_r solves p = 0 on the Σ₊ branch.
pub fn sigma_plus_seeds(geom: &KerrAds, n: usize, delta: f64, z_range: (f64, f64), rng_seed: u64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let rp = geom.r_plus();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let r = rng.random_range(rp - delta..=rp + delta);
        let theta = rng.random_range(0.3..std::f64::consts::PI - 0.3);
        let z = rng.random_range(z_range.0..=z_range.1);
        let (xt, xp) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        if let Some(xr) = solve_xi_r(geom, r, theta, xt, xp, z, Characteristic::SigmaPlus) {
            out.push(PhasePoint { r, theta, phi: 0.0, xi_r: xr, xi_theta: xt, xi_phi: xp, z });
        }
    }
    out
}

/// ξ_r with p(r, θ, ξ; z) = 0 on the requested component, if it exists.
pub fn solve_xi_r(
    geom: &KerrAds,
    r: f64,
    theta: f64,
    xi_theta: f64,
    xi_phi: f64,
    z: f64,
    want: Characteristic,
) -> Option<f64> {
    xi_r_roots(geom, r, theta, xi_theta, xi_phi, z, want).into_iter().next()
}

/// All ξ_r with p = 0 on the requested component (at most two).
pub fn xi_r_roots(
    geom: &KerrAds,
    r: f64,
    theta: f64,
    xi_theta: f64,
    xi_phi: f64,
    z: f64,
    want: Characteristic,
) -> Vec<f64> {
    let g = geom.dual_metric(r, theta);
    // G(ζ,ζ) = G^{rr}ξ_r² + 2Bξ_r + C.
    let b = -z * g.tr + g.rphi * xi_phi;
    let c = g.pair([-z, 0.0, xi_theta, xi_phi], [-z, 0.0, xi_theta, xi_phi]);
    let a = g.rr;
    let roots: Vec<f64> = if a.abs() < 1e-14 * (b.abs() + c.abs()) {
        if b == 0.0 {
            vec![]
        } else {
            vec![-c / (2.0 * b)]
        }
    } else {
        let disc = b * b - a * c;
        if disc < 0.0 {
            return vec![];
        }
        let sq = disc.sqrt();
        // Cancellation-free pair.
        let q = -(b + b.signum() * sq);
        let mut v = vec![q / a];
        if q != 0.0 {
            v.push(c / q);
        }
        v
    };
    roots
        .into_iter()
        .filter(|&xr| {
            let pt = PhasePoint { r, theta, phi: 0.0, xi_r: xr, xi_theta, xi_phi, z };
            matches!(classify(geom, &pt, 1e-6), Ok(c) if c == want)
        })
        .collect()
}

/// Horizon dichotomy for one Σ₊ seed: where its forward and backward trajectories go.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyOutcome {
    pub forward: ExitReason,
    pub backward: ExitReason,
    /// Forward exit through r ≤ r₊ − δ and backward exit through r ≥ r₊ + δ.
    pub escapes: bool,
    /// Backward convergence to L₊ and forward exit from the window.
    pub source_then_leaves: bool,
    /// max ⟨ξ⟩⁻²|p − p(0)| over both directions.
    pub max_scaled_drift: f64,
    /// max |p − p(0)| over momentum-chart samples.
    pub max_drift: f64,
}

impl DichotomyOutcome {
    /// Classify a seed from its forward and backward trajectories.
    pub fn from_pair(fwd: &FlowTrajectory, bwd: &FlowTrajectory) -> Self {
        let left = matches!(fwd.exit_reason, ExitReason::ReachedInnerBoundary | ExitReason::ReachedOuterBound);
        Self {
            forward: fwd.exit_reason,
            backward: bwd.exit_reason,
            escapes: fwd.exit_reason == ExitReason::ReachedInnerBoundary && bwd.exit_reason == ExitReason::ReachedOuterBound,
            source_then_leaves: bwd.exit_reason == ExitReason::ConvergedToLPlus && left,
            max_scaled_drift: fwd.max_scaled_drift.max(bwd.max_scaled_drift),
            max_drift: fwd.max_drift.max(bwd.max_drift),
        }
    }

    pub fn holds(&self) -> bool {
        self.escapes || self.source_then_leaves
    }
}

pub fn horizon_dichotomy(geom: &KerrAds, seed: &PhasePoint, delta: f64, t_max: f64) -> Result<DichotomyOutcome, FlowError> {
    let window = FlowWindow::horizon(geom, delta);
    let fwd = integrate(geom, seed, window, t_max)?;
    let bwd = integrate(geom, seed, window, -t_max)?;
    Ok(DichotomyOutcome::from_pair(&fwd, &bwd))
}
