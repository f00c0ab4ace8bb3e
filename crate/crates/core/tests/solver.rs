use ucn_core::baselines::mrt_precoder;
use ucn_core::objective::{EffectiveChannels, LinePowers};
use ucn_core::solver::{backtrack, search_direction, Termination};
use ucn_core::{
    dbm_to_watts, generate_channels, rcg_solve, rcg_solve_observed, select_clusters, ClusterMap, NetworkConfig,
    NoClock, SolverOptions, WsrProblem,
};
use ucn_testkit::Instance;

#[allow(clippy::too_many_arguments)]
fn desk_problem(
    b: usize,
    u: usize,
    mt: usize,
    mr: usize,
    d: usize,
    bsc: usize,
    dbm: f64,
    seed: u64,
) -> (NetworkConfig, WsrProblem) {
    let config = NetworkConfig::uniform(b, u, mt, mr, d, dbm_to_watts(dbm), dbm_to_watts(-104.0), bsc);
    let channels = generate_channels(&config, seed).unwrap();
    let cluster = select_clusters(&channels, bsc).unwrap();
    let problem = WsrProblem::from_config(&config, channels, cluster).unwrap();
    (config, problem)
}

#[test]
fn converges_on_small_instance() {
    let (config, problem) = desk_problem(2, 2, 2, 1, 1, 2, 20.0, 1);
    let p0 = mrt_precoder(&problem).unwrap();
    let sol = rcg_solve(&problem, &p0, &config.solver, &NoClock).unwrap();
    assert_eq!(sol.trace.termination, Termination::GradientTolerance);
    assert!(sol.trace.final_record().grad_norm <= 1e-6);
    assert!(sol.trace.outer_iterations() <= 500);
    assert!(sol.trace.final_record().wsr >= sol.trace.records[0].wsr);
}

#[test]
fn iterates_are_monotone_feasible_and_armijo() {
    let opts = SolverOptions { max_outer: 200, ..Default::default() };
    for seed in 0..50 {
        let mut inst = Instance::random(seed, 3, 4, 4, 2, 2);
        let p0 = inst.random_point();
        let manifold = inst.manifold().clone();
        let mut prev: Option<(f64, f64)> = None;
        let mut violations = 0usize;
        rcg_solve_observed(&inst.problem, &p0, &opts, &NoClock, |s| {
            if manifold.max_relative_infeasibility(s.precoder) > 1e-9 {
                violations += 1;
            }
            let f = s.record.objective;
            if let Some((f_prev, slope)) = prev {
                if f > f_prev {
                    violations += 1;
                }
                if s.record.inner_iters <= opts.max_inner && f_prev - f < -opts.armijo * s.record.step * slope {
                    violations += 1;
                }
            }
            prev = Some((f, s.direction.inner(s.gradient)));
        })
        .unwrap();
        assert_eq!(violations, 0, "seed {seed}");
    }
}

#[test]
fn incremental_cache_tracks_scratch_recomputation() {
    let (_, problem) = desk_problem(3, 6, 8, 2, 2, 2, 20.0, 1);
    let opts = SolverOptions { max_outer: 100, grad_tol: 0.0, ..Default::default() };
    let mut worst = 0.0f64;
    let sol = rcg_solve_observed(&problem, &mrt_precoder(&problem).unwrap(), &opts, &NoClock, |s| {
        let fresh = EffectiveChannels::compute(problem.channels(), problem.cluster(), s.precoder);
        worst = worst.max(s.cache.effective().max_rel_diff(&fresh, 1e-300));
        let objective = problem.objective(s.precoder).unwrap();
        worst = worst.max((objective - s.record.objective).abs() / objective.abs());
    })
    .unwrap();
    assert_eq!(sol.trace.outer_iterations(), 100);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn full_cluster_run_is_bit_identical_to_conventional_network() {
    for seed in 0..5 {
        let (config, problem) = desk_problem(3, 4, 2, 2, 1, 3, 20.0, seed);
        let conventional =
            WsrProblem::from_config(&config, problem.channels().clone(), ClusterMap::conventional(3, 4)).unwrap();
        let opts = SolverOptions { max_outer: 60, ..Default::default() };
        let a = rcg_solve(&problem, &mrt_precoder(&problem).unwrap(), &opts, &NoClock).unwrap();
        let b = rcg_solve(&conventional, &mrt_precoder(&conventional).unwrap(), &opts, &NoClock).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.precoder, b.precoder);
    }
}

#[test]
fn singleton_clusters_update_one_station_per_user() {
    let (_, problem) = desk_problem(3, 4, 2, 2, 1, 1, 20.0, 3);
    let cluster = problem.cluster().clone();
    let opts = SolverOptions { max_outer: 30, ..Default::default() };
    rcg_solve_observed(&problem, &mrt_precoder(&problem).unwrap(), &opts, &NoClock, |s| {
        for i in 0..cluster.num_ut() {
            assert_eq!(s.precoder.ut(i).len(), 1);
            assert_eq!(s.direction.ut(i).len(), 1);
        }
    })
    .unwrap();
}

#[test]
fn tiny_initial_step_is_accepted_at_once() {
    let mut inst = Instance::random(9, 3, 4, 4, 2, 2);
    let p = inst.random_point();
    let problem = &inst.problem;
    let cache = problem.build_cache(&p).unwrap();
    let (g, _) = problem.riemannian_gradient(&p, &problem.euclidean_gradient(&cache)).unwrap();
    let eta = -&g;
    let dir = problem.direction_channels(&eta).unwrap();
    let line = LinePowers::new(problem.manifold(), &p, &eta);
    let opts = SolverOptions { initial_step: 1e-9, ..Default::default() };
    let accepted = backtrack(problem, &cache, &dir, &line, eta.inner(&g), &opts).unwrap();
    assert_eq!(accepted.inner_iters, 1);
    assert_eq!(accepted.candidate.alpha, 1e-9);
    assert!(accepted.candidate.objective < cache.objective(problem.weights()));
}

#[test]
fn search_direction_is_descent_or_steepest() {
    for seed in 0..20 {
        let mut inst = Instance::random(seed, 3, 4, 4, 2, 2);
        let p = inst.random_point();
        let m = inst.manifold().clone();
        let (g, _) = m.project_tangent(&p, &inst.random_ambient()).unwrap();
        let (prev, _) = m.project_tangent(&p, &inst.random_ambient()).unwrap();

        let (d0, b0) = search_direction(&m, &p, &g, Some(&prev), 0.0).unwrap();
        assert_eq!((d0, b0), (-&g, 0.0));

        let (d, b) = search_direction(&m, &p, &g, Some(&prev), 0.5).unwrap();
        assert!(d.inner(&g) < 0.0);
        assert!(m.is_tangent(&p, &d));
        assert!(b == 0.5 || (b == 0.0 && d == -&g));

        // A huge multiple of an ascent direction cannot stay descending.
        let (up, b_up) = search_direction(&m, &p, &g, Some(&g), 10.0).unwrap();
        assert_eq!((up, b_up), (-&g, 0.0));
    }
}

#[test]
fn factorizations_stay_small() {
    for (mr, d) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
        let (config, problem) = desk_problem(3, 3, 4, mr, d, 2, 20.0, 4);
        let opts = SolverOptions { max_outer: 20, ..config.solver };
        let sol = rcg_solve(&problem, &mrt_precoder(&problem).unwrap(), &opts, &NoClock).unwrap();
        assert!(sol.trace.factors.count > 0);
        assert!(sol.trace.factors.max_dim <= mr.max(d));
    }
}

#[test]
fn infeasible_start_is_rejected() {
    let mut inst = Instance::random(1, 2, 2, 2, 2, 1);
    let p = inst.random_point().scale(2.0);
    assert!(rcg_solve(&inst.problem, &p, &SolverOptions::default(), &NoClock).is_err());
}
