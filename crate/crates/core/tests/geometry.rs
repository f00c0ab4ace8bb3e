use proptest::prelude::*;
use ucn_core::geometry::MANIFOLD_TOL;
use ucn_core::Blocks;
use ucn_testkit::{dense_gamma, dense_multiplier, max_rel, Instance};

fn instance(seed: u64) -> Instance {
    Instance::random(seed, 4, 4, 4, 2, 2)
}

#[test]
fn metric_is_symmetric_bilinear_and_matches_norm() {
    for seed in 0..20 {
        let mut inst = instance(seed);
        let p = inst.random_point();
        let (x, y, z) = (inst.random_ambient(), inst.random_ambient(), inst.random_ambient());
        let m = inst.manifold();
        let g = |a: &Blocks, b: &Blocks| m.metric(&p, a, b).unwrap();
        assert!((g(&x, &x) - x.norm_sq()).abs() <= 1e-12 * x.norm_sq());
        assert!((g(&x, &y) - g(&y, &x)).abs() <= 1e-12 * (x.norm_sq() + y.norm_sq()));
        let (a, b) = (1.7, -0.3);
        let lhs = g(&Blocks::lincomb(a, &x, b, &y), &z);
        let rhs = a * g(&x, &z) + b * g(&y, &z);
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn tangency_residual_special_cases() {
    let mut inst = instance(3);
    let p = inst.random_point();
    let m = inst.manifold();
    let r = m.tangency_residual(&p, &p);
    for (k, rk) in r.iter().enumerate() {
        let expected = if m.cluster().is_active(k) { 2.0 * m.powers()[k] } else { 0.0 };
        assert!((rk - expected).abs() <= 1e-12 * (1.0 + expected));
    }
    assert!(m.tangency_residual(&p, &m.zeros()).iter().all(|&v| v == 0.0));
}

#[test]
fn projection_fixes_tangents_and_kills_normals() {
    for seed in 0..20 {
        let mut inst = instance(seed);
        let p = inst.random_point();
        let xi = inst.random_ambient();
        let m = inst.manifold();
        let (t, _) = m.project_tangent(&p, &xi).unwrap();
        let (tt, mu) = m.project_tangent(&p, &t).unwrap();
        assert!(tt.max_abs_diff(&t) <= 1e-12 * (1.0 + t.norm_sq().sqrt()));
        assert!(mu.iter().all(|v| v.abs() <= 1e-12));

        let normal = p.scale(-0.8);
        let (zero, mu) = m.project_tangent(&p, &normal).unwrap();
        assert!(zero.norm_sq().sqrt() <= 1e-12);
        for (k, mu_k) in mu.iter().enumerate() {
            if m.cluster().is_active(k) {
                assert!((mu_k + 0.8).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn retraction_zero_step_and_first_order_agreement() {
    for seed in 0..10 {
        let mut inst = instance(seed);
        let p = inst.random_point();
        let xi = inst.random_ambient();
        let m = inst.manifold();
        let (out, gammas) = m.retract(&p, &m.zeros()).unwrap();
        assert!(out.max_abs_diff(&p) <= 1e-14 * 10.0);
        assert!(gammas.iter().all(|g| (g - 1.0).abs() <= 1e-14));

        let (t, _) = m.project_tangent(&p, &xi).unwrap();
        let constants: Vec<f64> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&s| {
                let step = t.scale(s);
                let (r, _) = m.retract(&p, &step).unwrap();
                let lin = &p + &step;
                (&r - &lin).norm_sq().sqrt() / (s * s)
            })
            .collect();
        // second-order remainder: the fitted constant stays put as t shrinks
        let (lo, hi) = constants.iter().fold((f64::MAX, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
        assert!(hi <= 1.5 * lo + 1e-3, "seed {seed}: {constants:?}");
    }
}

#[test]
fn transport_special_cases() {
    let mut inst = instance(9);
    let p = inst.random_point();
    let xi = inst.random_ambient();
    let m = inst.manifold();
    let (t, _) = m.project_tangent(&p, &xi).unwrap();
    let (same, rho) = m.transport(&p, &p, &t).unwrap();
    assert!(same.max_abs_diff(&t) <= 1e-12);
    assert!(rho.iter().all(|v| v.abs() <= 1e-12));
    let (proj, _) = m.project_tangent(&p, &xi).unwrap();
    assert_eq!(m.transport(&p, &p, &xi).unwrap().0, proj);
    let (q, _) = m.retract(&p, &t).unwrap();
    let (zero, _) = m.transport(&p, &q, &m.zeros()).unwrap();
    assert_eq!(zero.norm_sq(), 0.0);
}

#[test]
fn random_points_are_feasible_and_seeded() {
    for seed in 0..20 {
        let inst = instance(seed);
        let m = inst.manifold();
        let a = m.random_point(seed);
        assert!(m.is_on_manifold(&a));
        for (k, r) in m.feasibility_residual(&a).iter().enumerate() {
            assert!(r.abs() <= MANIFOLD_TOL * m.powers()[k]);
        }
        assert_eq!(a, m.random_point(seed));
        assert_ne!(a, m.random_point(seed + 1));
    }
}

#[test]
fn multipliers_match_dense_oracle() {
    for seed in 0..40 {
        let mut inst = instance(seed);
        let p = inst.random_point();
        let xi = inst.random_ambient();
        let m = inst.manifold();
        let mt = inst.config.mt;
        let (cluster, powers) = (m.cluster(), m.powers());

        let (t, mu) = m.project_tangent(&p, &xi).unwrap();
        assert!(max_rel(&mu, &dense_multiplier(cluster, powers, &p, &xi, mt)) <= 1e-12);

        let (_, gammas) = m.retract(&p, &t).unwrap();
        assert!(max_rel(&gammas, &dense_gamma(cluster, powers, &p, &t, mt)) <= 1e-12);

        let (q, _) = m.retract(&p, &t).unwrap();
        let (_, rho) = m.transport(&p, &q, &t).unwrap();
        assert!(max_rel(&rho, &dense_multiplier(cluster, powers, &q, &t, mt)) <= 1e-12);

        let egrad = inst.problem.euclidean_gradient(&inst.problem.build_cache(&p).unwrap());
        let (_, lambda) = inst.problem.riemannian_gradient(&p, &egrad).unwrap();
        assert!(max_rel(&lambda, &dense_multiplier(cluster, powers, &p, &egrad, mt)) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_orthogonal_decomposition(seed in any::<u64>()) {
        let mut inst = instance(seed);
        let p = inst.random_point();
        let xi = inst.random_ambient();
        let m = inst.manifold();
        let (t, _) = m.project_tangent(&p, &xi).unwrap();
        let normal = &xi - &t;
        prop_assert!(m.is_tangent(&p, &t));
        prop_assert!(m.metric(&p, &t, &normal).unwrap().abs() <= 1e-9 * xi.norm_sq());
        let (tt, _) = m.project_tangent(&p, &t).unwrap();
        prop_assert!(tt.max_abs_diff(&t) <= 1e-12 * (1.0 + xi.norm_sq().sqrt()));
    }

    #[test]
    fn retraction_lands_on_manifold(seed in any::<u64>(), scale in 0.01f64..10.0) {
        let mut inst = instance(seed);
        let p = inst.random_point();
        let xi = inst.random_ambient().scale(scale);
        let m = inst.manifold();
        let (t, _) = m.project_tangent(&p, &xi).unwrap();
        let (q, _) = m.retract(&p, &t).unwrap();
        prop_assert!(m.max_relative_infeasibility(&q) <= 1e-12);
    }

    #[test]
    fn transport_lands_in_destination_tangent_space(seed in any::<u64>()) {
        let mut inst = instance(seed);
        let p = inst.random_point();
        let (xi, eta) = (inst.random_ambient(), inst.random_ambient());
        let m = inst.manifold();
        let (t, _) = m.project_tangent(&p, &xi).unwrap();
        let (step, _) = m.project_tangent(&p, &eta).unwrap();
        let (q, _) = m.retract(&p, &step).unwrap();
        let (moved, _) = m.transport(&p, &q, &t).unwrap();
        prop_assert!(m.is_tangent(&q, &moved), "{}", m.relative_tangency(&q, &moved));
    }
}
