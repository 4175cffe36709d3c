use super::*;
use crate::geometry::{BlackHoleParams, KerrAds};
use crate::numerics::dense::CVec;
use crate::numerics::quadrature;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn geom(mass: f64, spin: f64, nu: f64) -> KerrAds {
    KerrAds::new(BlackHoleParams::new(mass, spin, nu, 0).unwrap()).unwrap()
}

/// Test field u = e^{−r} sin^{|k|} θ (1 + 0.3 cos²θ) and its analytic r, θ derivatives.
fn test_field(k: i32, r: f64, th: f64) -> (f64, f64, f64) {
    let er = (-r).exp();
    let (st, ct) = th.sin_cos();
    let m = k.unsigned_abs() as f64;
    let ang = st.powf(m) * (1.0 + 0.3 * ct * ct);
    let dang = m * st.powf(m - 1.0) * ct * (1.0 + 0.3 * ct * ct) - st.powf(m) * 0.6 * ct * st;
    (er * ang, -er * ang, er * dang)
}

/// ϱ²(□_g + ν² − 9/4) applied to e^{−iλt} e^{ikφ} u, stripped of the exponentials,
/// with the divergence form (1/sin θ) ∂_μ(sin θ G^{μν} ∂_ν u) and G = ϱ² g⁻¹.
fn reference_pu(g: &KerrAds, k: i32, lam: C64, r: f64, th: f64) -> C64 {
    let i = c(0.0, 1.0);
    let kk = k as f64;
    let dt = -i * lam;
    let dphi = i * kk;
    let flux_r = |r: f64, th: f64| {
        let dm = g.dual_metric(r, th);
        let (u, ur, _) = test_field(k, r, th);
        th.sin() * (dm.rr * ur + dm.tr * dt * u + dm.rphi * dphi * u)
    };
    let flux_th = |r: f64, th: f64| {
        let dm = g.dual_metric(r, th);
        let (_, _, uth) = test_field(k, r, th);
        th.sin() * dm.thth * uth
    };
    let h = 1e-4;
    let dr_flux = (flux_r(r + h, th) - flux_r(r - h, th)) / (2.0 * h);
    let h4 = (flux_r(r + 2.0 * h, th) - flux_r(r - 2.0 * h, th)) / (4.0 * h);
    let dr_flux = (4.0 * dr_flux - h4) / 3.0;
    let dth_a = (flux_th(r, th + h) - flux_th(r, th - h)) / (2.0 * h);
    let dth_b = (flux_th(r, th + 2.0 * h) - flux_th(r, th - 2.0 * h)) / (4.0 * h);
    let dth_flux = (4.0 * dth_a - dth_b) / 3.0;
    let dm = g.dual_metric(r, th);
    let (u, ur, _) = test_field(k, r, th);
    let t_part = dt * (dm.tt * dt * u + dm.tr * ur + dm.tphi * dphi * u);
    let phi_part = dphi * (dm.tphi * dt * u + dm.rphi * ur + dm.phiphi * dphi * u);
    (dr_flux + dth_flux) / th.sin() + t_part + phi_part + dm.rho2 * g.params.mass_term() * u
}

/// Max relative mismatch between L(λ)w and s^{2−β} f⁻¹ P(λ)u over interior rows.
fn interior_mismatch(g: &KerrAds, k: i32, lam: C64, nr: usize, na: usize) -> f64 {
    let grid = build_grid(g, nr, na).unwrap();
    let op = assemble(g, &grid, &BoundaryCondition::Dirichlet, k).unwrap();
    let beta = 1.5 - g.params.nu;
    let m = k.unsigned_abs() as f64;
    let mut w = CVec::zeros(grid.len());
    for i in 1..nr {
        for j in 0..na {
            let (s, x) = (grid.s(i), grid.x(j));
            let u = test_field(k, 1.0 / s, x.acos()).0;
            w[grid.index(i, j)] = c(u / (s.powf(beta) * (1.0 - x * x).powf(0.5 * m)), 0.0);
        }
    }
    let lw = op.apply_at(lam, &w);
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 1..nr {
        let s = grid.s(i);
        for j in 0..na {
            let x = grid.x(j);
            let reference = reference_pu(g, k, lam, 1.0 / s, x.acos()) * s.powf(2.0 - beta)
                / (1.0 - x * x).powf(0.5 * m);
            err = err.max((lw[grid.index(i, j)] - reference).norm());
            scale = scale.max(reference.norm());
        }
    }
    err / scale
}

#[test]
fn interior_rows_match_divergence_form_reference() {
    let g = geom(1.0, 0.2, 1.5);
    let e = interior_mismatch(&g, 0, c(1.3, 0.0), 64, 16);
    assert!(e < 1e-5, "relative mismatch {e}");
}

#[test]
fn interior_rows_match_reference_with_rotation_and_twist() {
    let g = geom(1.0, 0.3, 0.8);
    let e = interior_mismatch(&g, 1, c(1.3, -0.4), 64, 16);
    assert!(e < 1e-5, "relative mismatch {e}");
    let g = geom(0.5, 0.2, 2.3);
    let e = interior_mismatch(&g, -2, c(0.7, 0.2), 64, 16);
    assert!(e < 1e-5, "relative mismatch {e}");
}

#[test]
fn interior_mismatch_converges_fast() {
    let g = geom(1.0, 0.2, 1.5);
    // Faster than any fixed power of n: the observed order keeps growing with each doubling.
    let errs: Vec<f64> = [8, 16, 32, 64].iter().map(|&n| interior_mismatch(&g, 0, c(1.3, 0.0), n, 12)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|p| (p[0] / p[1]).log2()).collect();
    assert!(orders.windows(2).all(|o| o[1] > o[0]), "{errs:?}");
    assert!(orders[2] > 8.0, "{errs:?}");
}

#[test]
fn angular_operator_is_conjugated_laplacian() {
    // f⁻¹[−(1/sinθ)∂θ(sinθ Δθ ∂θ) + m²(1−a²)²/(Δθ sin²θ)](f w) with f = sin^m θ.
    let co = Coefficients::new(&geom(1.0, 0.4, 1.5), 2);
    let m = 2.0;
    let a2 = co.a2;
    let w = |x: f64| 1.0 + 0.5 * x + x * x * x;
    let (w1, w2) = (|x: f64| 0.5 + 3.0 * x * x, |x: f64| 6.0 * x);
    let fw = |th: f64| th.sin().powf(m) * w(th.cos());
    let h = 1e-4;
    for &x in &[-0.8, -0.3, 0.1, 0.6] {
        let th: f64 = f64::acos(x);
        let flux = |t: f64| {
            let d = (fw(t + h) - fw(t - h)) / (2.0 * h);
            t.sin() * (1.0 - a2 * t.cos().powi(2)) * d
        };
        let div = (flux(th + h) - flux(th - h)) / (2.0 * h) / th.sin();
        let dth = 1.0 - a2 * x * x;
        let reference = (-div + m * m * co.e * co.e / (dth * th.sin().powi(2)) * fw(th)) / th.sin().powf(m);
        let (c2, c1, c0) = co.angular(x);
        let ours = c2 * w2(x) + c1 * w1(x) + c0 * w(x);
        assert!((ours - reference).abs() < 1e-5 * reference.abs().max(1.0), "x={x}: {ours} vs {reference}");
    }
}

#[test]
fn angular_operator_at_zero_spin_gives_l_l_plus_1() {
    let grid = crate::numerics::legendre::LegendreGrid::new(14);
    for m in 0..2 {
        let co = Coefficients::new(&geom(1.0, 0.0, 1.5), m);
        for l in (m as usize)..8 {
            // w = d^m P_l / dx^m
            let w: Vec<f64> = grid.nodes.iter().map(|&x| if m == 0 { legendre_p(l, x).0 } else { legendre_p(l, x).1 }).collect();
            for j in 0..grid.len() {
                let (c2, c1, c0) = co.angular(grid.nodes[j]);
                let mut v = c0 * w[j];
                for jp in 0..grid.len() {
                    v += (c2 * grid.d2[[j, jp]] + c1 * grid.d1[[j, jp]]) * w[jp];
                }
                let expect = (l * (l + 1)) as f64 * w[j];
                assert!((v - expect).abs() < 1e-9 * (1.0 + expect.abs()), "l={l} m={m}: {v} vs {expect}");
            }
        }
    }
}

#[test]
fn static_case_matches_radial_reduction() {
    // a = 0, k = 0: on w = g(s) P_l(x), interior rows reduce to an independent 1D radial pencil.
    let (mass, nu, l) = (1.0, 1.5, 3usize);
    let g = geom(mass, 0.0, nu);
    let grid = build_grid(&g, 24, 8).unwrap();
    let op = assemble(&g, &grid, &BoundaryCondition::Dirichlet, 0).unwrap();
    let beta = 1.5 - nu;
    let rad = &grid.radial;
    let gfun: Vec<f64> = (0..grid.n_radial).map(|i| (grid.s(i) * 1.7).sin() + 0.2).collect();
    let ll = (l * (l + 1)) as f64;
    for (pk, which) in [(&op.p0, 0), (&op.p1, 1), (&op.p2, 2)] {
        let mut w = CVec::zeros(grid.len());
        for i in 0..grid.n_radial {
            for j in 0..grid.n_angular {
                w[grid.index(i, j)] = c(gfun[i] * legendre_p(l, grid.x(j)).0, 0.0);
            }
        }
        let out = pk.dot(&w);
        for i in 1..grid.n_radial {
            let s = grid.s(i);
            let dd = (1.0 + s * s) - 2.0 * mass * s.powi(3);
            let dp = 2.0 * s - 6.0 * mass * s * s;
            let g1: f64 = (0..grid.n_radial).map(|ip| rad.d1[[i, ip]] * gfun[ip]).sum();
            let g2: f64 = (0..grid.n_radial).map(|ip| rad.d2[[i, ip]] * gfun[ip]).sum();
            let expect = match which {
                0 => c(
                    -dd * s * s * g2
                        + ((2.0 - 2.0 * beta) * dd * s - dp * s * s) * g1
                        + ((dd - 1.0) * (3.0 * beta - beta * beta) - beta * dp * s + s * s * ll) * gfun[i],
                    0.0,
                ),
                1 => {
                    let grt = -2.0 * mass * s * s * (s * s - 1.0) / (1.0 + s * s).powi(2);
                    c(0.0, -(4.0 * mass * s.powi(3) / (1.0 + s * s) * (s * s * g1 + beta * s * gfun[i]) + s * s * grt * gfun[i]))
                }
                _ => {
                    let gtt = -dd / (1.0 + s * s).powi(2) + 2.0 / (1.0 + s * s);
                    c(-s * s * gtt * gfun[i], 0.0)
                }
            };
            for j in 0..grid.n_angular {
                let got = out[grid.index(i, j)];
                let e = expect * legendre_p(l, grid.x(j)).0;
                assert!((got - e).norm() < 1e-9 * (1.0 + e.norm()), "P{which} row ({i},{j}): {got} vs {e}");
            }
        }
        if which != 0 {
            // Static metric: P1, P2 carry no real (resp. imaginary) parts.
            let bad = pk.iter().any(|v| if which == 1 { v.re != 0.0 } else { v.im != 0.0 });
            assert!(!bad, "P{which} has an unexpected component");
        }
    }
}

#[test]
fn radial_nodes_are_monotone_in_r() {
    let g = geom(1.0, 0.2, 1.5);
    let grid = build_grid(&g, 8, 4).unwrap();
    for i in 1..grid.n_radial - 1 {
        assert!(grid.r(i) > grid.r(i + 1));
    }
    assert!(grid.r(0).is_infinite());
    assert!((grid.r(grid.n_radial - 1) - g.r_inner()).abs() < 1e-12);
}

#[test]
fn invalid_counts_rejected() {
    let g = geom(1.0, 0.2, 1.5);
    assert!(matches!(build_grid(&g, 7, 8), Err(OperatorError::InvalidCounts { .. })));
    assert!(matches!(build_grid(&g, 8, 3), Err(OperatorError::InvalidCounts { .. })));
    assert!(matches!(build_truncated_grid(&g, 16, 8, 0.5 * g.r_plus()), Err(OperatorError::InvalidWall { .. })));
}

#[test]
fn radial_derivative_of_inverse_square() {
    // d/dr (r⁻²) = −2 r⁻³, with d/dr = −s² d/ds.
    let g = geom(1.0, 0.2, 1.5);
    let grid = build_grid(&g, 64, 4).unwrap();
    let f: Vec<f64> = (0..64).map(|i| grid.s(i).powi(2)).collect();
    for i in 1..63 {
        let s = grid.s(i);
        let dfds: f64 = (0..64).map(|ip| grid.radial.d1[[i, ip]] * f[ip]).sum();
        let dfdr = -s * s * dfds;
        assert!((dfdr + 2.0 * s.powi(3)).abs() < 1e-8, "node {i}");
    }
}

#[test]
fn bump_quadrature_matches_adaptive_reference() {
    let g = geom(1.0, 0.2, 1.5);
    let grid = build_grid(&g, 128, 24).unwrap();
    let (lo, hi) = (0.05 * grid.s_max, 0.95 * grid.s_max);
    let bump = |s: f64| {
        if s <= lo || s >= hi {
            0.0
        } else {
            let t = (2.0 * s - lo - hi) / (hi - lo);
            (-1.0 / (1.0 - t * t)).exp()
        }
    };
    let ours: f64 = (0..grid.n_radial).map(|i| grid.radial.weights[i] * bump(grid.s(i))).sum();
    let reference = quadrature::integrate(bump, lo, hi, 1e-14, 1e-12).unwrap();
    assert!((ours - reference).abs() < 1e-8, "{ours} vs {reference}");

    let grid = build_grid(&g, 8, 96).unwrap();
    let abump = |x: f64| if x.abs() >= 0.9 { 0.0 } else { (-1.0 / (1.0 - (x / 0.9).powi(2))).exp() };
    let ours: f64 = (0..grid.n_angular).map(|j| grid.angular.weights[j] * abump(grid.x(j))).sum();
    let reference = quadrature::integrate(abump, -0.9, 0.9, 1e-14, 1e-12).unwrap();
    assert!((ours - reference).abs() < 1e-8, "{ours} vs {reference}");
}

#[test]
fn evaluate_at_is_the_quadratic_polynomial() {
    let g = geom(1.0, 0.3, 0.75);
    let grid = build_grid(&g, 10, 4).unwrap();
    let op = assemble(&g, &grid, &BoundaryCondition::Robin { beta: BetaProfile::Constant(0.4) }, 1).unwrap();
    assert_eq!(op.evaluate_at(c(0.0, 0.0)), op.p0);
    let one = op.evaluate_at(c(1.0, 0.0));
    let sum = &op.p0 + &op.p1 + &op.p2;
    assert!(one.iter().zip(sum.iter()).all(|(a, b)| (a - b).norm() <= 1e-14 * (1.0 + b.norm())));

    // Lagrange reconstruction from three samples.
    let base = [c(0.0, 0.0), c(1.0, 0.5), c(-0.7, 1.1)];
    let samples: Vec<CMat> = base.iter().map(|&z| op.evaluate_at(z)).collect();
    for &z in &[c(0.3, -0.2), c(2.0, 1.0), c(-1.5, -0.5), c(0.0, 3.0), c(4.0, 0.0)] {
        let mut rec = CMat::zeros(op.p0.dim());
        for a in 0..3 {
            let mut coef = c(1.0, 0.0);
            for b in 0..3 {
                if a != b {
                    coef *= (z - base[b]) / (base[a] - base[b]);
                }
            }
            rec.scaled_add(coef, &samples[a]);
        }
        let direct = op.evaluate_at(z);
        let scale = direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = rec.iter().zip(direct.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10 * scale, "z={z}: {err}");
    }
}

#[test]
fn two_application_paths_agree() {
    let g = geom(1.0, 0.2, 1.5);
    let grid = build_grid(&g, 12, 6).unwrap();
    let op = assemble(&g, &grid, &BoundaryCondition::Dirichlet, 0).unwrap();
    let v = CVec::from_shape_fn(op.dim(), |i| c((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
    let lam = c(1.2, -0.3);
    let a = op.evaluate_at(lam).dot(&v);
    let b = op.apply_at(lam, &v);
    let scale = a.iter().map(|x| x.norm()).fold(0.0, f64::max);
    assert!(a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() < 1e-12 * scale));
}

#[test]
fn semiclassical_rescale_identities() {
    let g = geom(1.0, 0.2, 1.5);
    let grid = build_grid(&g, 10, 4).unwrap();
    let op = assemble(&g, &grid, &BoundaryCondition::Dirichlet, 0).unwrap();
    let z = c(1.0, -0.1);
    let close = |a: &CMat, b: &CMat| {
        let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= 1e-12 * scale)
    };
    assert!(close(&op.semiclassical_rescale(1.0, z), &op.evaluate_at(z)));
    let h = 0.25;
    let expect = op.evaluate_at(z / h).mapv(|v| v * h * h);
    assert!(close(&op.semiclassical_rescale(h, z), &expect));
    let fro = |m: &CMat| m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let bound = fro(&op.p0) + z.norm() * fro(&op.p1) + z.norm_sqr() * fro(&op.p2);
    for h in [1.0, 0.5, 0.1] {
        assert!(fro(&op.semiclassical_rescale(h, z)) <= bound);
    }
}

#[test]
fn p2_shared_across_axial_modes() {
    let g = geom(1.0, 0.3, 1.5);
    let grid = build_grid(&g, 10, 6).unwrap();
    let op0 = assemble(&g, &grid, &BoundaryCondition::Dirichlet, 0).unwrap();
    let op1 = assemble(&g, &grid, &BoundaryCondition::Dirichlet, 1).unwrap();
    assert_eq!(op0.p2, op1.p2);
    // P1 differs only on the diagonal (the 2k G^{tφ} term).
    for ((r, col), v) in op0.p1.indexed_iter() {
        if r != col {
            assert_eq!(*v, op1.p1[[r, col]]);
        }
    }
    assert_ne!(op0.p1, op1.p1);
    assert_ne!(op0.p0, op1.p0);
}

#[test]
fn operator_entries_are_finite() {
    for (nu, bc) in [
        (1.5, BoundaryCondition::Dirichlet),
        (0.5, BoundaryCondition::Robin { beta: BetaProfile::Constant(0.0) }),
        (0.75, BoundaryCondition::Robin { beta: BetaProfile::Legendre(vec![0.2, 0.0, 0.1]) }),
        (2.3, BoundaryCondition::Robin { beta: BetaProfile::Constant(1.0) }),
    ] {
        let g = geom(1.0, 0.4, nu);
        let grid = build_grid(&g, 16, 6).unwrap();
        let op = assemble(&g, &grid, &bc, 2).unwrap();
        for m in [&op.p0, &op.p1, &op.p2] {
            assert!(m.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        }
        if nu >= 1.0 {
            assert_eq!(op.layout().unwrap().bc, BoundaryCondition::Dirichlet);
        }
    }
}

#[test]
fn integer_nu_robin_is_rejected() {
    let g = geom(1.0, 0.2, 1.0);
    let grid = build_grid(&g, 16, 6).unwrap();
    assert!(matches!(trace_stencil(&grid, 1.0), Err(OperatorError::LogarithmicBranch { .. })));
}

fn trace_error(nu: f64, n: usize) -> f64 {
    let g = geom(1.0, 0.2, nu);
    let grid = build_grid(&g, n, 6).unwrap();
    let gm = |s2: f64, x: f64| (1.0 + x * x) * (1.0 + 0.5 * s2).recip();
    let gp = |s2: f64, x: f64| (0.3 - x) * (s2 * 0.7).cos();
    let mut w = vec![c(0.0, 0.0); grid.len()];
    for i in 0..grid.n_radial {
        let s = grid.s(i);
        for j in 0..grid.n_angular {
            let x = grid.x(j);
            w[grid.index(i, j)] = c(s.powf(2.0 * nu) * gp(s * s, x) + gm(s * s, x), 0.0);
        }
    }
    let (tm, tp) = boundary_traces(&grid, nu, 0, &w).unwrap();
    let mut err: f64 = 0.0;
    for j in 0..grid.n_angular {
        let x = grid.x(j);
        err = err.max((tm[j].re - gm(0.0, x)).abs());
        err = err.max((tp[j].re + 2.0 * nu * gp(0.0, x)).abs());
    }
    err
}

#[test]
fn traces_recover_branch_coefficients() {
    assert!(trace_error(0.5, 24) < 1e-10);
    let e64 = trace_error(0.75, 64);
    assert!(e64 < 1e-6, "ν = 3/4: {e64}");
    let e16 = trace_error(0.75, 16);
    assert!(e64 < e16, "{e16} → {e64}");
}

#[test]
fn norms_basic_properties() {
    let g = geom(1.0, 0.2, 1.5);
    let grid = build_grid(&g, 16, 6).unwrap();
    let op = assemble(&g, &grid, &BoundaryCondition::Dirichlet, 0).unwrap();
    let zero = vec![c(0.0, 0.0); op.dim()];
    assert_eq!(norms(&op, &zero).unwrap(), Norms { l2: 0.0, h1: 0.0 });
    let v: Vec<C64> = (0..op.dim()).map(|i| c((i as f64).sin(), 0.1 * i as f64)).collect();
    let n1 = norms(&op, &v).unwrap();
    let scaled: Vec<C64> = v.iter().map(|z| z * c(3.0, 4.0)).collect();
    let n2 = norms(&op, &scaled).unwrap();
    assert!((n2.l2 - 5.0 * n1.l2).abs() < 1e-12 * n2.l2);
    assert!((n2.h1 - 5.0 * n1.h1).abs() < 1e-12 * n2.h1);
    assert!(n1.h1 >= n1.l2);
    assert!(matches!(norms(&op, &zero[1..]), Err(OperatorError::DimensionMismatch { .. })));
}

#[test]
fn l2_norm_matches_reference_integral() {
    // u = r^{ν−3/2} e^{−r}, i.e. w = e^{−r}; reference integrates |u|² r⁻¹ dS_t in (r, θ) directly.
    for nu in [1.5, 0.75] {
        let g = geom(1.0, 0.3, nu);
        let grid = build_grid(&g, 64, 12).unwrap();
        let op = assemble(&g, &grid, &BoundaryCondition::Dirichlet, 0).unwrap();
        let w: Vec<C64> = (0..op.dim())
            .map(|idx| {
                let s = grid.s(idx / grid.n_angular);
                c(if s == 0.0 { 0.0 } else { (-1.0 / s).exp() }, 0.0)
            })
            .collect();
        let ours = norms(&op, &w).unwrap().l2;
        let e = 1.0 - g.params.spin.powi(2);
        let inner = |th: f64| {
            let f = |r: f64| {
                let dm = g.dual_metric(r, th);
                let u2 = r.powf(2.0 * nu - 3.0) * (-2.0 * r).exp();
                // dS_t = √|g| √(g^{tt}) dr dθ dφ with √|g| = ϱ² sinθ/(1−a²).
                u2 / r * dm.rho2 * th.sin() / e * (dm.tt / dm.rho2).sqrt() * 2.0 * PI
            };
            quadrature::integrate(f, g.r_inner(), 60.0, 1e-15, 1e-11).unwrap()
        };
        let reference = quadrature::integrate(inner, 0.0, PI, 1e-15, 1e-10).unwrap().sqrt();
        assert!((ours - reference).abs() < 1e-6 * reference, "ν={nu}: {ours} vs {reference}");
    }
}

#[test]
fn truncated_grid_has_wall_rows() {
    let g = geom(1.0, 0.2, 1.5);
    let r1 = 2.0 * g.r_plus();
    let grid = build_truncated_grid(&g, 12, 4, r1).unwrap();
    let op = assemble(&g, &grid, &BoundaryCondition::Dirichlet, 0).unwrap();
    let l = op.layout().unwrap();
    assert_eq!(l.boundary_rows.len(), 8);
    let row = grid.index(11, 2);
    assert_eq!(op.p0[[row, row]], c(1.0, 0.0));
    assert!(op.p1.row(row).iter().all(|v| *v == c(0.0, 0.0)));
    assert!((grid.r(11) - r1).abs() < 1e-12);
}

#[test]
fn dump_roundtrip() {
    let g = geom(1.0, 0.2, 0.75);
    let grid = build_grid(&g, 8, 4).unwrap();
    let op = assemble(&g, &grid, &BoundaryCondition::Robin { beta: BetaProfile::Constant(0.1) }, -1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("op.bin");
    write_dump(&op, &path).unwrap();
    let (h, [p0, p1, p2]) = read_dump(&path).unwrap();
    assert_eq!(h.dim as usize, op.dim());
    assert_eq!((h.n_radial, h.n_angular, h.k), (8, 4, -1));
    assert_eq!(h.nu, 0.75);
    assert_eq!(h.delta, g.delta);
    assert_eq!(p0, op.p0);
    assert_eq!(p1, op.p1);
    assert_eq!(p2, op.p2);
    std::fs::write(&path, b"garbage").unwrap();
    assert!(matches!(read_dump(&path), Err(OperatorError::MalformedDump(_))));
}

#[test]
fn mode_dump_roundtrip() {
    let g = geom(1.0, 0.2, 1.5);
    let grid = build_grid(&g, 8, 4).unwrap();
    let op = assemble(&g, &grid, &BoundaryCondition::Dirichlet, 0).unwrap();
    let v: Vec<C64> = (0..op.dim()).map(|i| c(i as f64, -0.5 * i as f64)).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("modes.bin");
    write_modes(&DumpHeader::from_operator(&op), &[(c(2.0, -1.0), &v), (c(3.0, 0.0), &v)], &path).unwrap();
    let (h, modes) = read_modes(&path).unwrap();
    assert_eq!(h, DumpHeader::for_grid(&g, &grid, 0));
    assert_eq!(modes.len(), 2);
    assert_eq!(modes[0].0, c(2.0, -1.0));
    assert_eq!(modes[1].1, v);
    assert!(matches!(read_dump(&path), Err(OperatorError::MalformedDump(_))));
    assert!(write_modes(&h, &[(c(1.0, 0.0), &v[1..])], &path).is_err());
}

#[test]
fn interpolation_between_grids_is_exact_for_polynomials() {
    let g = geom(1.0, 0.2, 1.5);
    let a = build_grid(&g, 12, 6).unwrap();
    let b = a.resized(20, 8).unwrap();
    let f = |s: f64, x: f64| c(s * s - 0.3 * s + x * x * x, s * x);
    let vals: Vec<C64> = (0..a.len()).map(|idx| f(a.s(idx / 6), a.x(idx % 6))).collect();
    let out = a.interpolate_to(&b, &vals);
    for idx in 0..b.len() {
        let e = f(b.s(idx / 8), b.x(idx % 8));
        assert!((out[idx] - e).norm() < 1e-11);
    }
}

