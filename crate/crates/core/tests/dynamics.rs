use cavitation::dynamics::{self, integrate, solve, OdeOptions, OmegaState, PhaseState};
use cavitation::{solver, Error, Material, Options};

fn ex1() -> Material {
    Material::example_one().unwrap()
}

#[test]
fn exponential_to_tolerance() {
    for tol in [1e-6, 1e-9, 1e-12] {
        let opts = OdeOptions::tolerances(tol, tol * 1e-2);
        let tr = solve(&mut |_t, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], 1.0, &opts).unwrap();
        assert!((tr.last_state()[0] - std::f64::consts::E).abs() <= 10.0 * tol);
    }
}

#[test]
fn linear_crossing_event() {
    let mut ev = |_t: f64, y: &[f64; 1]| Ok(y[0]);
    let opts = OdeOptions::default();
    let tr = integrate(&mut |_t, _y: &[f64; 1]| Ok([-1.0]), 0.0, [1.0], 3.0, &opts, &[], Some(&mut ev)).unwrap();
    assert!((tr.event_time().unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn fixed_step_convergence_order() {
    let exact = 2f64.sin();
    let err = |h: f64| {
        let tr = solve(&mut |_t, y: &[f64; 2]| Ok([y[1], -y[0]]), 0.0, [0.0, 1.0], 2.0, &OdeOptions::fixed(h)).unwrap();
        (tr.last_state()[0] - exact).abs()
    };
    let (a, b) = (err(0.2), err(0.1));
    assert!(a / b >= 8.0, "ratio {}", a / b);
}

#[test]
fn invalid_tolerances_rejected() {
    let opts = OdeOptions::tolerances(0.0, 0.0);
    let r = solve(&mut |_t, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], 1.0, &opts);
    assert!(matches!(r, Err(Error::InvalidParameter(_))));
}

#[test]
fn affine_data_stays_affine() {
    let m = ex1();
    for lambda in [0.95, 1.05, 1.3] {
        let tr = solve(&mut dynamics::equilibrium_system(&m), 0.01, [0.01 * lambda, lambda], 1.0, &OdeOptions::default())
            .unwrap();
        for (x, y) in tr.times().iter().zip(tr.states()) {
            assert!((y[0] - lambda * x).abs() <= 1e-9);
            assert!((y[1] - lambda).abs() <= 1e-9);
        }
        assert!(dynamics::equilibrium_rhs(&m, 0.3, 0.3 * lambda, lambda).unwrap().abs() <= 1e-12);
    }
}

#[test]
fn original_and_modified_forms_agree() {
    let m = ex1();
    let opts = OdeOptions::tolerances(1e-10, 1e-12);
    let y0 = [1.05, 0.98];
    let a = solve(&mut dynamics::equilibrium_system(&m), 1.0, y0, 0.1, &opts).unwrap();
    let b = solve(&mut dynamics::equilibrium_system_modified(&m), 1.0, y0, 0.1, &opts).unwrap();
    let (ya, yb) = (a.last_state(), b.last_state());
    for k in 0..2 {
        assert!((ya[k] - yb[k]).abs() <= 10.0 * 1e-10 * ya[k].abs().max(1.0), "{ya:?} {yb:?}");
    }
}

/// `R^(n-1) Phi_1` along the quadratic Taylor model of the solution through `(x, r, rp)`.
fn flux(m: &Material, x: f64, r: f64, rp: f64, rpp: f64, h: f64) -> f64 {
    let (xh, rh, rph) = (x + h, r + rp * h + 0.5 * rpp * h * h, rp + rpp * h);
    xh * xh * m.phi_1(rph, rh / xh).unwrap()
}

#[test]
fn equilibrium_matches_flux_balance() {
    let m = ex1();
    let (x, r, rp) = (0.5, 0.6, 0.9);
    let rpp = dynamics::equilibrium_rhs(&m, x, r, rp).unwrap();
    let h = 1e-4;
    let lhs = (flux(&m, x, r, rp, rpp, h) - flux(&m, x, r, rp, rpp, -h)) / (2.0 * h);
    let rhs = 2.0 * x * m.phi_2(rp, r / x).unwrap();
    assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
}

#[test]
fn compressed_radial_stretch_bends_up() {
    let m = ex1();
    for i in 1..=12 {
        for j in 1..=12 {
            let x = 0.08 * i as f64;
            let v = 0.4 + 0.15 * j as f64;
            for frac in [0.05, 0.3, 0.6, 0.95] {
                let rpp = dynamics::equilibrium_rhs(&m, x, v * x, frac * v).unwrap();
                assert!(rpp >= 0.0, "R {x} v {v} frac {frac}: {rpp}");
            }
        }
    }
    assert!(dynamics::equilibrium_rhs(&m, 0.0, 0.1, 1.0).is_err());
    assert!(dynamics::equilibrium_rhs(&m, 0.5, 0.1, -1.0).is_err());
}

#[test]
fn autonomous_fixed_point_and_autonomy() {
    let m = ex1();
    let d = dynamics::autonomous_rhs(&m, PhaseState { v: m.bar_lambda().unwrap(), vdot: 0.0 }).unwrap();
    assert!(d.v.abs() <= 1e-12 && d.vdot.abs() <= 1e-12);

    let mut sys = dynamics::autonomous_system(&m);
    let y = [1.2, -0.3];
    let base = sys(0.0, &y).unwrap();
    for s in [-7.0, -1.5, 0.0, 2.5] {
        let x = f64::exp(s);
        let state = PhaseState::from_profile(x, 1.2 * x, 0.9);
        assert!((state.v - 1.2).abs() <= 1e-12 && (state.vdot + 0.3).abs() <= 1e-12);
        let d = sys(s, &y).unwrap();
        assert!((d[0] - base[0]).abs() <= 1e-12 && (d[1] - base[1]).abs() <= 1e-12);
        let e = dynamics::autonomous_rhs(&m, state).unwrap();
        assert!((e.vdot - base[1]).abs() <= 1e-12);
    }
}

#[test]
fn backward_trajectory_lowers_modified_stress() {
    let m = ex1();
    let opts = OdeOptions::tolerances(1e-10, 1e-12);
    let tr = solve(&mut dynamics::autonomous_system(&m), 0.0, [1.05, -1e-3], -6.0, &opts).unwrap();
    let that: Vec<f64> = tr.states().iter().map(|y| m.modified_stress(y[0] + y[1], y[0]).unwrap()).collect();
    assert!(tr.steps() > 5);
    for w in that.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
    assert!(that[that.len() - 1] < that[0]);
}

#[test]
fn stress_derivative_values() {
    let m = ex1();
    assert!((dynamics::stress_rhs(&m, 0.5, 1.0, 0.5).unwrap() - 0.9375).abs() <= 1e-14);
    assert_eq!(dynamics::stress_rhs(&m, 0.5, 1.0, 2.0).unwrap(), 0.0);
    assert!(dynamics::stress_rhs(&m, 0.5, 1.0, 1.0).unwrap() > 0.0);
    assert!(dynamics::stress_rhs(&m, 0.5, -1.0, 1.0).is_err());
}

#[test]
fn stress_derivative_along_a_solution() {
    let m = ex1();
    let b = solver::shoot_punctured(&m, 1.05, 1e-2, &Options::default()).unwrap();
    let (x, r, s) = (b.field.nodes(), b.field.values(), b.field.nodal_slopes());
    let that: Vec<f64> = (0..x.len()).map(|i| m.modified_stress(s[i], r[i] / x[i]).unwrap()).collect();
    let mut checked = 0;
    for i in 1..x.len() - 1 {
        if x[i] < 0.05 {
            continue;
        }
        let fd = (that[i + 1] - that[i - 1]) / (x[i + 1] - x[i - 1]);
        let exact = dynamics::stress_rhs(&m, x[i], r[i], s[i]).unwrap();
        assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "R {}: {fd} vs {exact}", x[i]);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn stress_ivp_rhs() {
    let m = ex1();
    for (w, t) in [(0.2, 0.0), (0.5, 0.1), (0.9, -0.2)] {
        let nu = m.invert_nu_hat(t, 1.0 / w).unwrap();
        let rhs = dynamics::ivp_t_rhs(&m, OmegaState { omega: w, that: t }).unwrap();
        assert!((rhs - 2.0 * (nu + w * nu * nu)).abs() <= 1e-14 * rhs.abs().max(1.0));
    }
    let near: Vec<f64> =
        [1e-8, 1e-10].iter().map(|&w| dynamics::ivp_t_rhs(&m, OmegaState { omega: w, that: 0.0 }).unwrap()).collect();
    assert!(near.iter().all(|v| *v > 0.0 && v.is_finite()));
    assert!((near[0] - near[1]).abs() <= 1e-4);
    let zero = dynamics::ivp_t_rhs(&m, OmegaState { omega: 0.0, that: 0.0 }).unwrap();
    assert!(zero.is_finite() && (zero - near[1]).abs() <= 1e-4);
    assert!(dynamics::ivp_t_rhs(&m, OmegaState { omega: -0.1, that: 0.0 }).is_err());
}

#[test]
fn stress_ivp_rhs_is_positive_below_the_homogeneous_stress() {
    let m = ex1();
    for i in 1..=20 {
        let w = 0.045 * i as f64;
        let g = m.homogeneous_stress(1.0 / w).unwrap();
        for frac in [0.0, 0.25, 0.5, 0.75, 0.99] {
            let t = frac * g;
            if g <= 0.0 {
                continue;
            }
            assert!(dynamics::ivp_t_rhs(&m, OmegaState { omega: w, that: t }).unwrap() > 0.0, "w {w} t {t}");
        }
    }
}

#[test]
fn determinant_decreases_in_v() {
    let m = ex1();
    for i in 0..=30 {
        let v = 1.01 * 10f64.powf(0.1 * i as f64);
        for frac in [1e-3, 0.05, 0.2, 0.49] {
            let jac = frac * v * v.powi(2);
            assert!(dynamics::det_vs_v_rhs(&m, v, jac).unwrap() < 0.0, "v {v} frac {frac}");
        }
    }
    assert!(dynamics::det_vs_v_rhs(&m, -1.0, 0.5).is_err());
    assert!(dynamics::det_vs_v_rhs(&m, 2.0, 0.0).is_err());
}

/// Integrates the determinant in `t = ln v` from the outer boundary of the `lambda = 1.05` solution.
fn determinant_path(m: &Material, to: f64) -> (cavitation::Bundle, dynamics::Trajectory<f64, 1>) {
    let b = solver::shoot_punctured(m, 1.05, 1e-4, &Options::default()).unwrap();
    let jac1 = b.slope_at_outer * 1.05f64.powi(2);
    let mut f = |t: f64, y: &[f64; 1]| {
        let v = t.exp();
        Ok([v * dynamics::det_vs_v_rhs(m, v, y[0])?])
    };
    let tr = solve(&mut f, 1.05f64.ln(), [jac1], to.ln(), &OdeOptions::tolerances(1e-11, 1e-300)).unwrap();
    (b, tr)
}

#[test]
fn determinant_path_matches_the_solution_and_decays() {
    let m = ex1();
    let (b, tr) = determinant_path(&m, 1e8);
    let (x, r, s) = (b.field.nodes(), b.field.values(), b.field.nodal_slopes());
    for i in (0..x.len()).step_by(37) {
        let v = r[i] / x[i];
        let jac = s[i] * v * v;
        let got = tr.eval(v.ln()).unwrap()[0];
        assert!((got - jac).abs() <= 1e-6 * jac, "R {}: {got} vs {jac}", x[i]);
    }
    let ys: Vec<f64> = tr.states().iter().map(|y| y[0]).collect();
    assert!(ys.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));

    // jac^-3 grows like an affine function of ln v: equal increments per decade
    let g = |k: i32| tr.eval(10f64.powi(k).ln()).unwrap()[0].powi(-3);
    let steps: Vec<f64> = (1..8).map(|k| g(k + 1) - g(k)).collect();
    assert!(steps.iter().all(|d| *d > 0.0));
    let (lo, hi) = steps.iter().fold((f64::INFINITY, 0f64), |(a, c), &d| (a.min(d), c.max(d)));
    assert!(hi / lo < 1.1, "increments {steps:?}");
    assert!(ys[ys.len() - 1] < 0.5);
}
