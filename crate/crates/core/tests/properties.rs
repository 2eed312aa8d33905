use navier_cpi::bubble::{epsilon_ij, functional_j, Configuration, Mass};
use navier_cpi::domain::DomainModel;
use navier_cpi::infinity::build_matrix;
use navier_cpi::kmodel::{classify, k_eval, CriticalPointRecord, KModel};
use navier_cpi::numerics::{integrate_radial, min_eigenvalue_sym, ode_integrate, sphere_area, OdeControl, QuadratureSpec, SymMatrix};
use navier_cpi::pseudoflow::{cutoffs, CutoffParams};
use proptest::prelude::*;
use statrs::function::beta::beta;

fn sym(dim: usize, raw: &[f64]) -> SymMatrix<f64> {
    let mut rows = vec![vec![0.0f64; dim]; dim];
    let mut it = raw.iter().cycle();
    for i in 0..dim {
        for j in i..dim {
            let v = *it.next().unwrap();
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymMatrix::from_rows(&rows).unwrap()
}

fn record(n: usize, y: Vec<f64>, beta: f64, b: Vec<f64>) -> CriticalPointRecord {
    debug_assert_eq!(y.len(), n);
    CriticalPointRecord { y, beta, b, radius: 0.2, value: 1.0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn least_eigenvalue_shifts_with_the_diagonal(dim in 1usize..7, raw in prop::collection::vec(-5.0f64..5.0, 28), t in -10.0f64..10.0) {
        let m = sym(dim, &raw);
        let base = min_eigenvalue_sym(&m).unwrap();
        let shifted = min_eigenvalue_sym(&m.shifted(t)).unwrap();
        prop_assert!((shifted - base - t).abs() <= 1e-10 * (1.0 + base.abs() + t.abs()));
    }

    #[test]
    fn radial_integral_of_rational_profiles(n in 5usize..=8, extra in 1usize..=4) {
        // ∫ (1+r²)^{-q} over R^n = |S^{n-1}| B(n/2, q-n/2) / 2
        let q = n as f64 / 2.0 + extra as f64;
        let tol = 1e-9;
        let spec = QuadratureSpec::default().with_tol(tol);
        let got = integrate_radial(|r: f64| (1.0 + r * r).powf(-q), n, &spec).unwrap();
        let exact = sphere_area::<f64>(n) * 0.5 * beta(n as f64 / 2.0, q - n as f64 / 2.0);
        prop_assert!(((got - exact) / exact).abs() <= 10.0 * tol, "{got} vs {exact}");
    }

    #[test]
    fn ode_matches_exponential(a in -2.0f64..0.5, w in 0.0f64..3.0, t_end in 0.5f64..3.0) {
        // x' = a x - w y, y' = w x + a y
        let ctrl = OdeControl { initial_step: 1e-3, max_step: 0.1, rel_tol: 1e-8, max_steps: 100_000 };
        let traj = ode_integrate(&[1.0, 0.0], |s: &[f64]| Ok(vec![a * s[0] - w * s[1], w * s[0] + a * s[1]]), &ctrl, |t, _| t >= t_end).unwrap();
        let (t, s) = (*traj.times.last().unwrap(), traj.states.last().unwrap());
        let r = (a * t).exp();
        let err = ((s[0] - r * (w * t).cos()).powi(2) + (s[1] - r * (w * t).sin()).powi(2)).sqrt();
        prop_assert!(err <= 10.0 * ctrl.rel_tol * r.max(1.0), "err {err} at t {t}");
    }

    #[test]
    fn interaction_is_symmetric_and_bounded(
        n in 5usize..=8,
        a in prop::collection::vec(-0.5f64..0.5, 8),
        b in prop::collection::vec(-0.5f64..0.5, 8),
        li in 1.0f64..200.0,
        lj in 1.0f64..200.0,
    ) {
        let (a, b) = (&a[..n], &b[..n]);
        let e1 = epsilon_ij(n, a, li, b, lj);
        let e2 = epsilon_ij(n, b, lj, a, li);
        prop_assert!((e1 - e2).abs() <= 1e-14 * e1.abs().max(1e-300));
        prop_assert!(e1 <= 2f64.powf(-(n as f64 - 4.0) / 2.0) * (1.0 + 1e-14));
        prop_assert!(e1 > 0.0);
    }

    #[test]
    fn negative_count_ignores_order(b in prop::collection::vec(-3.0f64..3.0, 6), rot in 0usize..6) {
        let r1 = record(6, vec![0.0; 6], 1.5, b.clone());
        let mut p = b.clone();
        p.rotate_left(rot);
        p.reverse();
        let r2 = record(6, vec![0.0; 6], 1.5, p);
        prop_assert_eq!(r1.tilde_i(), r2.tilde_i());
    }

    #[test]
    fn cutoff_plateaus_are_exact(delta in 0.05f64..0.6, gamma in 0.05f64..0.95, u in 0.0f64..1.0) {
        let p = CutoffParams { delta, gamma };
        let near = cutoffs(&p, u * delta / 4.0);
        prop_assert_eq!((near.theta1, near.theta2, near.theta3), (1.0, 0.0, 0.0));
        let mid = cutoffs(&p, delta / 2.0 + u * (1.0 / delta - delta / 2.0));
        prop_assert_eq!(mid.theta2, 1.0);
        let far = cutoffs(&p, (2.0 / delta) * (1.0 + u));
        prop_assert_eq!((far.theta1, far.theta2, far.theta3, far.psi), (0.0, 0.0, 1.0, 1.0));
        prop_assert_eq!(cutoffs(&p, gamma * u).psi, 0.0);
        let neg = cutoffs(&p, -u);
        prop_assert_eq!(neg, cutoffs(&p, u));
    }

    #[test]
    fn k_is_continuous_across_patch_edges(
        dir in prop::collection::vec(-1.0f64..1.0, 5),
        b in prop::collection::vec(-2.0f64..2.0, 5),
        edge in prop::bool::ANY,
    ) {
        let d = DomainModel::unit_ball(5).unwrap();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let rec = record(5, vec![0.1, 0.0, -0.1, 0.0, 0.05], 1.5, b);
        let radius = rec.radius;
        let k = KModel { background: 1.2, tilt: vec![0.1, 0.0, 0.0, -0.1, 0.0], curvature: -0.2, records: vec![rec.clone()] };
        let r = if edge { radius } else { radius / 2.0 };
        let at = |s: f64| -> Vec<f64> { rec.y.iter().zip(&dir).map(|(y, u)| y + s * u / norm).collect() };
        let h = 1e-12;
        let inner = k_eval(&k, &d, &at(r - h)).unwrap();
        let outer = k_eval(&k, &d, &at(r + h)).unwrap();
        prop_assert!((inner - outer).abs() <= 1e-10, "jump {}", (inner - outer).abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equality_class_plus_flag_is_the_diagonal_sign(n in 6usize..=7, b in prop::collection::vec(-2.0f64..2.0, 7), r in 0.0f64..0.5) {
        let d = DomainModel::unit_ball(n).unwrap();
        let mut y = vec![0.0; n];
        y[0] = r;
        let k = KModel { records: vec![record(n, y, n as f64 - 4.0, b[..n].to_vec())], ..KModel::constant(1.0) };
        let classes = classify(&k, &d).unwrap();
        let m = build_matrix(&[0], &k, &d, &classes).unwrap();
        let m11 = m.entries.get(0, 0);
        prop_assume!(m11.abs() > 1e-12);
        prop_assert_eq!(classes.records[0].plus, m11 > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn energy_ignores_mass_labels(
        a1 in prop::collection::vec(-0.3f64..0.3, 5),
        a2 in prop::collection::vec(-0.3f64..0.3, 5),
        l1 in 20.0f64..60.0,
        l2 in 20.0f64..60.0,
        w in 0.5f64..1.5,
    ) {
        let d = DomainModel::unit_ball(5).unwrap();
        let k = KModel { background: 1.0, tilt: vec![0.2, 0.0, -0.1, 0.0, 0.0], curvature: 0.0, records: vec![] };
        let spec = QuadratureSpec::default();
        let m1 = Mass { alpha: 1.0, a: a1, lambda: l1 };
        let m2 = Mass { alpha: w, a: a2, lambda: l2 };
        let fwd = functional_j(&d, &k, &Configuration { masses: vec![m1.clone(), m2.clone()] }, &spec).unwrap();
        let rev = functional_j(&d, &k, &Configuration { masses: vec![m2, m1] }, &spec).unwrap();
        prop_assert!((fwd - rev).abs() <= 1e-9 * fwd.abs(), "{fwd} vs {rev}");
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let d = DomainModel::unit_ball(5).unwrap();
    let k = KModel {
        records: vec![record(5, vec![0.0; 5], 1.5, vec![-1.0, 1.0, 1.0, 1.0, 1.0])],
        ..KModel::constant(1.0)
    };
    let c = Configuration::single(1.0, vec![0.01, 0.0, 0.0, 0.0, 0.0], 40.0);
    let spec = QuadratureSpec::default();
    let a = functional_j(&d, &k, &c, &spec).unwrap();
    let b = functional_j(&d, &k, &c, &spec).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let e = DomainModel::ellipsoid(5, vec![0.0; 5], vec![1.0; 5], 1, 200, 3).unwrap();
    let f = DomainModel::ellipsoid(5, vec![0.0; 5], vec![1.0; 5], 1, 200, 3).unwrap();
    let x = [0.1, 0.2, 0.0, 0.0, 0.0];
    let y = [-0.1, 0.0, 0.2, 0.0, 0.0];
    let (g1, g2) = (navier_cpi::domain::green(&e, &x, &y).unwrap(), navier_cpi::domain::green(&f, &x, &y).unwrap());
    assert_eq!(g1.g.to_bits(), g2.g.to_bits());
}
