use cavitation::energy;
use cavitation::solver::{self, FlowOptions, FlowStatus, SolveStatus};
use cavitation::{Error, Field, Material, Mesh, Options};

fn ex1() -> Material {
    Material::example_one().unwrap()
}

#[test]
fn cavitating_solve_at_small_puncture() {
    let m = ex1();
    let b = solver::shoot_punctured(&m, 1.05, 1e-4, &Options::default()).unwrap();
    assert_eq!(b.status, SolveStatus::Converged);
    assert!((b.cavity - 0.44184).abs() <= 2e-3, "cavity {}", b.cavity);
    assert!((b.energy.modified - 1.2774).abs() <= 2e-3, "energy {}", b.energy.modified);
    assert!(b.bc_residual.abs() <= 1e-9);
    assert!(b.that_profile[0].abs() <= 1e-9);
    assert_eq!(*b.field.values().last().unwrap(), 1.05);
    assert!(b.that_max_drop() <= 1e-8);
    let (x, r, s) = (b.field.nodes(), b.field.values(), b.field.nodal_slopes());
    assert!((0..x.len() - 1).all(|i| s[i] < r[i] / x[i]));
    assert!(energy::equilibrium_residual(&m, &b.field).unwrap() <= 1e-6);
}

#[test]
fn compressive_solve_is_nearly_affine_and_concave() {
    let m = ex1();
    let b = solver::shoot_punctured(&m, 0.95, 1e-4, &Options::default()).unwrap();
    assert!(b.field.sup_distance_to_affine(0.95, 0.0) <= 5e-3);
    let (x, r, s) = (b.field.nodes(), b.field.values(), b.field.nodal_slopes());
    for i in 0..20 {
        assert!(s[i] > r[i] / x[i], "node {i}");
    }
    assert!(s.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn slightly_stretched_solve_has_a_boundary_layer() {
    let m = ex1();
    let eps = 1e-4;
    let b = solver::shoot_punctured(&m, 1.01, eps, &Options::default()).unwrap();
    assert!(b.field.sup_distance_to_affine(1.01, 2.0 * eps) <= 5e-3);
    let s = b.field.nodal_slopes();
    let v = b.field.stretches();
    assert!((v[0] - s[0]) / v[0] > 0.1, "v {} nu {}", v[0], s[0]);
}

#[test]
fn rejects_bad_problems() {
    let m = ex1();
    let o = Options::default();
    for (lambda, eps) in [(1.05, 0.0), (1.05, 1.0), (0.0, 0.1), (-1.0, 0.1), (f64::NAN, 0.1)] {
        assert!(matches!(solver::shoot_punctured(&m, lambda, eps, &o), Err(Error::InvalidParameter(_))));
    }
    assert!(solver::validate_eps_list(&[0.1, 0.2]).is_err());
    assert!(solver::validate_eps_list::<f64>(&[]).is_err());
    assert!(solver::validate_eps_list(&[0.5, 1.5]).is_err());
    assert!(solver::validate_eps_list(&[0.3, 0.2, 1e-4]).is_ok());
}

#[test]
fn stretched_sweep_converges() {
    let m = ex1();
    let list = [0.3, 0.2, 1e-4];
    let sweep = solver::eps_sweep(&m, 1.05, &list, &Options::default()).unwrap();
    let rows = &sweep.rows;
    assert!(rows.iter().all(|r| r.status == "converged"));
    assert!((rows[2].cavity - 0.44184).abs() <= 2e-3);
    // the cavity radius shrinks toward its limit as the puncture closes
    assert!(rows[0].cavity > rows[1].cavity && rows[1].cavity > rows[2].cavity);
    assert!(rows[2].sup_dist_prev < rows[1].sup_dist_prev);
    assert!(rows[0].sup_dist_prev.is_nan());
    assert_eq!(rows[2].sup_dist_final, 0.0);
    for ((eps, b), row) in sweep.bundles.iter().zip(rows) {
        let cold = solver::shoot_punctured(&m, 1.05, *eps, &Options::default()).unwrap();
        assert!((cold.cavity - b.as_ref().unwrap().cavity).abs() <= 1e-8);
        assert_eq!(row.cavity, b.as_ref().unwrap().cavity);
    }
}

#[test]
fn near_threshold_sweep_approaches_affine() {
    let m = ex1();
    let sweep = solver::eps_sweep(&m, 1.01, &[0.2, 0.1, 0.05, 1e-4], &Options::default()).unwrap();
    let d: Vec<f64> = sweep.rows.iter().map(|r| r.sup_dist_affine).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn compressive_sweep_stress_tends_to_a_negative_constant() {
    let m = ex1();
    let sweep = solver::eps_sweep(&m, 0.95, &[0.2, 0.1, 0.05, 1e-4], &Options::default()).unwrap();
    let (_, last) = sweep.bundles.last().unwrap();
    let b = last.as_ref().unwrap();
    let tail: Vec<f64> =
        b.field.nodes().iter().zip(&b.that_profile).filter(|(x, _)| **x >= 0.1).map(|(_, t)| *t).collect();
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &t| (a.min(t), c.max(t)));
    assert!(hi < 0.0);
    assert!(hi - lo <= 1e-2, "spread {}", hi - lo);
    let g = m.homogeneous_stress(0.95).unwrap();
    assert!((hi - g).abs() <= 1e-2, "{hi} vs {g}");
}

#[test]
fn sweep_writes_table() {
    let m = ex1();
    let sweep = solver::eps_sweep(&m, 1.05, &[0.3, 0.2], &Options::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    solver::write_sweep_csv(&sweep.rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "eps,cavity,energy,sup_dist_affine,sup_dist_prev");
    assert_eq!(lines.count(), 2);
}

#[test]
fn bundle_exports() {
    let m = ex1();
    let b = solver::shoot_punctured(&m, 1.05, 0.1, &Options::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    b.write_csv(dir.path().join("b.csv")).unwrap();
    b.write_metadata(dir.path().join("b.txt")).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(csv.starts_with("R,r,dr,v,That,T,jac\n"));
    assert_eq!(csv.lines().count(), b.field.nodes().len() + 1);
    let meta = std::fs::read_to_string(dir.path().join("b.txt")).unwrap();
    for key in ["lambda", "eps", "cavity", "energy", "iterations", "residual"] {
        assert!(meta.lines().any(|l| l.starts_with(&format!("{key}="))), "{key}");
    }
}

#[test]
fn gradient_flow_predicts_the_shooting_energy() {
    let m = ex1();
    let mesh = Mesh::graded(0.2, 200).unwrap();
    let flow = solver::gradient_flow_minimize(&m, 1.05, &mesh, &FlowOptions::default()).unwrap();
    let shot = solver::shoot_punctured(&m, 1.05, 0.2, &Options::default()).unwrap();
    assert!((flow.energy - shot.energy.modified).abs() <= 5e-2);
    assert!(flow.energy <= flow.initial_energy);
    assert!(flow.gradient <= 0.1 * flow.initial_gradient);
    assert!((flow.field.cavity() - shot.cavity).abs() <= 1e-2);
}

#[test]
fn gradient_flow_stays_affine_under_compression() {
    let m = ex1();
    let mesh = Mesh::graded(0.01, 200).unwrap();
    let flow = solver::gradient_flow_minimize(&m, 0.95, &mesh, &FlowOptions::default()).unwrap();
    assert!(flow.field.sup_distance_to_affine(0.95, 0.0) <= 1e-2);
    assert!(flow.energy <= flow.initial_energy);
    assert_ne!(flow.status, FlowStatus::Stagnated);
}

#[test]
fn gradient_flow_rejects_mismatched_start() {
    let m = ex1();
    let mesh = Mesh::graded(0.1, 50).unwrap();
    let other = Field::affine(Mesh::graded(0.2, 50).unwrap(), 1.05, 3).unwrap();
    let opts = FlowOptions { initial: Some(other), ..FlowOptions::default() };
    assert!(solver::gradient_flow_minimize(&m, 1.05, &mesh, &opts).is_err());
}

#[test]
fn discrete_gradient_matches_differences() {
    use rand::{Rng, SeedableRng};
    let m = ex1();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mesh = Mesh::graded(0.05, 40).unwrap();
    let mut values: Vec<f64> = mesh.nodes().iter().map(|x| 0.3 + 0.8 * x).collect();
    for v in values.iter_mut().take(mesh.len() - 1) {
        *v += rng.gen_range(-0.002..0.002);
    }
    let f = Field::new(mesh.clone(), values.clone(), 3).unwrap();
    let g = solver::discrete_gradient(&m, &f).unwrap();
    for i in 0..mesh.len() - 1 {
        let h = 1e-6 * values[i];
        let mut plus = values.clone();
        let mut minus = values.clone();
        plus[i] += h;
        minus[i] -= h;
        let ep = energy::modified_energy(&m, &Field::new(mesh.clone(), plus, 3).unwrap()).unwrap();
        let em = energy::modified_energy(&m, &Field::new(mesh.clone(), minus, 3).unwrap()).unwrap();
        let fd = (ep - em) / (2.0 * h);
        assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1e-3), "node {i}: {fd} vs {}", g[i]);
    }
}

#[test]
fn predictor_then_corrector() {
    let m = ex1();
    let (pred, b) =
        solver::solve_with_predictor(&m, 1.05, 1e-2, &Options::default(), &FlowOptions::default(), 120).unwrap();
    let cold = solver::shoot_punctured(&m, 1.05, 1e-2, &Options::default()).unwrap();
    assert!(pred.field.cavity() > 0.0);
    assert!((b.cavity - cold.cavity).abs() <= 1e-8);
}

#[test]
fn critical_displacement() {
    let m = ex1();
    let c = solver::critical_lambda(&m, &Options::default()).unwrap();
    assert!((c.lambda_c - 1.0258).abs() <= 1e-3, "{}", c.lambda_c);
    assert!(c.lambda_c > 1.0);
    assert!((c.bar_lambda - 1.0).abs() <= 1e-10);
    assert!(c.integral_check <= 1e-3);
    assert!((c.omega_star * c.lambda_c - 1.0).abs() <= 1e-12);
    assert!((c.lambda_c_profile - c.lambda_c).abs() <= 1e-3);
    let ts = c.ivp.times();
    assert!(ts[0] >= 0.0 && ts[0] <= 1e-8);
    assert!(c.ivp.states().windows(2).all(|w| w[1][0] >= w[0][0]));
}

#[test]
fn critical_profile_scales_onto_stretched_solutions() {
    let m = ex1();
    let c = solver::critical_lambda(&m, &Options::default()).unwrap();
    let b = solver::shoot_punctured(&m, 1.05, 1e-4, &Options::default()).unwrap();
    let alpha = c.alpha_for(1.05).unwrap();
    assert!(alpha > 0.0);
    let mut worst = 0f64;
    for (&x, &r) in b.field.nodes().iter().zip(b.field.values()) {
        if alpha * x < c.profile_start() || alpha * x > 1.0 {
            continue;
        }
        worst = worst.max((r - c.rc(alpha * x).unwrap() / alpha).abs());
    }
    assert!(worst <= 5e-3, "sup error {worst}");
}

#[test]
fn critical_requires_a_stress_free_material() {
    use cavitation::material::{MaterialLaw, VolumetricLaw};
    let vol = VolumetricLaw::power_law(1.0, 2.0, 2.0, 1.0).unwrap();
    let m = MaterialLaw::new(3, 1.0, vol).unwrap();
    assert!(m.bar_lambda().unwrap() < 1.0);
    assert!(matches!(solver::critical_lambda(&m, &Options::default()), Err(Error::Config(_))));
}
