use super::*;
use crate::geometry::{BlackHoleParams, Chart as MetricChart, SpacetimePoint};

fn geom(mass: f64, spin: f64) -> KerrAds {
    KerrAds::new(BlackHoleParams::new(mass, spin, 1.5, 0).unwrap()).unwrap()
}

fn pt(r: f64, theta: f64, xi: [f64; 3], z: f64) -> PhasePoint {
    PhasePoint { r, theta, phi: 0.3, xi_r: xi[0], xi_theta: xi[1], xi_phi: xi[2], z }
}

#[test]
fn zero_covector_has_zero_symbol() {
    let g = geom(1.0, 0.3);
    assert_eq!(principal_symbol(&g, &pt(2.0, 1.0, [0.0; 3], 0.0)), 0.0);
}

#[test]
fn symbol_matches_the_inverse_metric_matrix() {
    let g = geom(1.0, 0.3);
    for (r, th, xi, z) in [(g.r_plus(), 1.1, [1.0, 0.0, 0.0], 1.0), (1.7, 0.6, [0.3, -1.2, 0.8], 1.4)] {
        let m = g.inverse_metric(&SpacetimePoint { r, theta: th, chart: MetricChart::KerrStar }).unwrap();
        let zeta = [-z, xi[0], xi[1], xi[2]];
        let mut q = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                q += zeta[i] * m[i][j] * zeta[j];
            }
        }
        let p = principal_symbol(&g, &pt(r, th, xi, z));
        assert!((p + q).abs() <= 1e-13 * (1.0 + q.abs()), "{p} vs {}", -q);
    }
}

#[test]
fn symbol_is_quadratically_homogeneous() {
    let g = geom(1.0, 0.3);
    let p0 = pt(1.4, 0.9, [0.7, -0.4, 1.1], 1.3);
    for c in [0.5, 2.0, -3.0, 10.0] {
        let a = principal_symbol(&g, &p0.scaled(c));
        let b = c * c * principal_symbol(&g, &p0);
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }
}

#[test]
fn classification_cases() {
    let g = geom(1.0, 0.3);
    let elliptic = pt(5.0, 1.0, [0.0; 3], 1.0);
    assert_eq!(classify(&g, &elliptic, CLASSIFY_TOL).unwrap(), Characteristic::NotCharacteristic);
    let lp = pt(g.r_plus(), 1.0, [1e9, 0.0, 0.0], 1.0);
    assert_eq!(classify(&g, &lp, CLASSIFY_TOL).unwrap(), Characteristic::SigmaPlus);
    assert_eq!(classify(&g, &lp.reflected(), CLASSIFY_TOL).unwrap(), Characteristic::SigmaMinus);
    assert!(matches!(classify(&g, &pt(2.0, 1.0, [1.0, 0.0, 0.0], 0.0), 1e-8), Err(FlowError::ZeroFrequency)));
    for s in sigma_plus_seeds(&g, 20, g.delta, (1.0, 2.0), 7) {
        assert_eq!(classify(&g, &s, 1e-6).unwrap(), Characteristic::SigmaPlus);
        assert_eq!(classify(&g, &s.reflected(), 1e-6).unwrap(), Characteristic::SigmaMinus);
    }
}

#[test]
fn hamilton_field_matches_finite_differences() {
    let g = geom(1.0, 0.3);
    for p0 in [pt(1.3, 0.8, [0.7, -0.4, 1.1], 1.3), pt(0.98, 2.0, [-2.0, 0.5, 0.3], 1.9)] {
        let v = hamilton_rhs(&g, &p0);
        assert_eq!(v[5], 0.0);
        let s = 1.0 / p0.japanese_bracket();
        let f = |q: PhasePoint| principal_symbol(&g, &q);
        let d = |a: PhasePoint, b: PhasePoint, h: f64| (f(a) - f(b)) / (2.0 * h);
        let h = 1e-6;
        let fd = [
            s * d(PhasePoint { xi_r: p0.xi_r + h, ..p0 }, PhasePoint { xi_r: p0.xi_r - h, ..p0 }, h),
            s * d(PhasePoint { xi_theta: p0.xi_theta + h, ..p0 }, PhasePoint { xi_theta: p0.xi_theta - h, ..p0 }, h),
            s * d(PhasePoint { xi_phi: p0.xi_phi + h, ..p0 }, PhasePoint { xi_phi: p0.xi_phi - h, ..p0 }, h),
            -s * d(PhasePoint { r: p0.r + h, ..p0 }, PhasePoint { r: p0.r - h, ..p0 }, h),
            -s * d(PhasePoint { theta: p0.theta + h, ..p0 }, PhasePoint { theta: p0.theta - h, ..p0 }, h),
            -s * d(PhasePoint { phi: p0.phi + h, ..p0 }, PhasePoint { phi: p0.phi - h, ..p0 }, h),
        ];
        let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for i in 0..6 {
            assert!((v[i] - fd[i]).abs() <= 1e-6 * scale, "component {i}: {} vs {}", v[i], fd[i]);
        }
    }
}

#[test]
fn radial_speed_is_negative_on_sigma_plus_at_the_horizon() {
    for a in [0.0, 0.3] {
        let g = geom(1.0, a);
        let mut n = 0;
        for s in sigma_plus_seeds(&g, 50, g.delta, (1.0, 2.0), 11) {
            let Some(xr) = solve_xi_r(&g, g.r_plus(), s.theta, s.xi_theta, s.xi_phi, s.z, Characteristic::SigmaPlus)
            else {
                continue;
            };
            let q = PhasePoint { r: g.r_plus(), xi_r: xr, ..s };
            assert!(hamilton_rhs(&g, &q)[0] < 0.0);
            n += 1;
        }
        assert_eq!(n, 50);
    }
}

#[test]
fn the_horizon_conormal_is_invariant() {
    let g = geom(1.0, 0.3);
    let w = FlowWindow::horizon(&g, g.delta);
    for t in [5.0, -5.0] {
        let tr = integrate_compactified(&g, [g.r_plus(), 1.0, 0.0], 0.0, [1.0, 0.0, 0.0], 1.5, w, t).unwrap();
        assert!(tr.samples.len() > 2);
        for s in &tr.samples {
            assert!((s.point.r - g.r_plus()).abs() < 1e-9, "{}", s.point.r);
            assert_eq!(s.fiber_scale, 0.0);
            assert!((s.direction[0] - 1.0).abs() < 1e-12 && s.direction[1].abs() < 1e-9 && s.direction[2].abs() < 1e-9);
        }
    }
}

#[test]
fn backward_flow_near_the_source_converges_to_it() {
    let g = geom(1.0, 0.3);
    let r = g.r_plus() + 1e-3;
    let roots = xi_r_roots(&g, r, 1.2, 3.0, 1.0, 1.5, Characteristic::SigmaPlus);
    let xr = roots.iter().copied().fold(0.0, f64::max);
    assert!(xr > 1e2, "{roots:?}");
    let start = pt(r, 1.2, [xr, 3.0, 1.0], 1.5);
    let tr = integrate(&g, &start, FlowWindow { r_min: g.r_inner(), r_max: 10.0 }, -500.0).unwrap();
    assert_eq!(tr.exit_reason, ExitReason::ConvergedToLPlus);
    assert!(tr.last().fiber_scale < 1e-6);
}

#[test]
fn inward_sigma_plus_points_fall_through_the_inner_boundary() {
    let g = geom(1.0, 0.3);
    let (r, th) = (g.r_plus() + 0.5 * g.delta, 1.0);
    let start = xi_r_roots(&g, r, th, 0.5, 0.2, 1.2, Characteristic::SigmaPlus)
        .into_iter()
        .map(|xr| PhasePoint { r, theta: th, phi: 0.0, xi_r: xr, xi_theta: 0.5, xi_phi: 0.2, z: 1.2 })
        .find(|p| hamilton_rhs(&g, p)[0] < 0.0)
        .unwrap();
    let tr = integrate(&g, &start, FlowWindow::horizon(&g, g.delta), 1e3).unwrap();
    assert_eq!(tr.exit_reason, ExitReason::ReachedInnerBoundary);
    assert!((tr.last().point.r - g.r_inner()).abs() < 1e-10);
    assert!(tr.max_drift <= DRIFT_TOL);
}

#[test]
fn scaled_seeds_trace_the_same_base_curve() {
    let g = geom(1.0, 0.3);
    for s in sigma_plus_seeds(&g, 5, g.delta, (1.0, 2.0), 3) {
        let w = FlowWindow::horizon(&g, g.delta);
        let a = integrate(&g, &s, w, 1e3).unwrap();
        let b = integrate(&g, &s.scaled(2.0), w, 1e3).unwrap();
        assert_eq!(a.exit_reason, b.exit_reason);
        let (pa, pb) = (a.last().point, b.last().point);
        assert!((pa.r - pb.r).abs() < 1e-6 && (pa.theta - pb.theta).abs() < 1e-6 && (pa.phi - pb.phi).abs() < 1e-6);
    }
}

#[test]
fn classification_is_constant_along_trajectories() {
    let g = geom(1.0, 0.3);
    for s in sigma_plus_seeds(&g, 5, g.delta, (1.0, 2.0), 5) {
        let tr = integrate(&g, &s, FlowWindow::horizon(&g, g.delta), 1e3).unwrap();
        for smp in tr.samples.iter().step_by(7) {
            assert_eq!(classify(&g, &smp.point, 1e-6).unwrap(), Characteristic::SigmaPlus);
        }
    }
}

#[test]
fn dichotomy_holds_for_random_seeds() {
    for a in [0.0, 0.3] {
        let g = geom(1.0, a);
        for s in sigma_plus_seeds(&g, 20, g.delta, (1.0, 2.0), 99) {
            let o = horizon_dichotomy(&g, &s, g.delta, 1e3).unwrap();
            assert!(o.holds(), "{s:?}: {o:?}");
            assert!(o.max_scaled_drift <= DRIFT_TOL * (1.0 + principal_symbol(&g, &s).abs()));
        }
    }
}

#[test]
fn characteristic_set_at_fiber_infinity_lies_over_the_ergoregion() {
    let g = geom(1.0, 0.3);
    let mut found = 0;
    for i in 0..40 {
        for j in 1..20 {
            let r = g.r_inner() + 0.5 * g.r_plus() * i as f64 / 40.0;
            let th = std::f64::consts::PI * j as f64 / 20.0;
            // A spatial null covector (ρ = 0) with ξ_θ = 0 exists iff G^{rr}ξ_r² + 2G^{rφ}ξ_r + G^{φφ} has a root.
            let gm = g.dual_metric(r, th);
            let disc = gm.rphi * gm.rphi - gm.rr * gm.phiphi;
            if disc < 0.0 || gm.rr == 0.0 {
                continue;
            }
            let xr = (-gm.rphi + disc.sqrt()) / gm.rr;
            let n = (xr * xr + 1.0).sqrt();
            let rho = 1e-3;
            let q = pt(r, th, [xr / n / rho, 0.0, 1.0 / n / rho], 1.0);
            if classify(&g, &q, 1e-2).unwrap() != Characteristic::NotCharacteristic {
                found += 1;
                let ms = crate::geometry::metric_scalars(&g.params, r, th);
                assert!(ms.delta_r <= 0.09 * ms.delta_theta * th.sin().powi(2) + 1e-2, "r = {r}, θ = {th}");
            }
        }
    }
    assert!(found > 0);
}
