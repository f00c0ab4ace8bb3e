use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ucn_core::baselines::{linear_baseline, mrt_precoder, BaselineKind};
use ucn_core::linalg::CMat;
use ucn_core::{
    dbm_to_watts, generate_channels, rcg_solve, select_clusters, ChannelSet, ClusterMap, Error, NetworkConfig, NoClock,
    WsrProblem,
};
use ucn_testkit::{c, unit_channels};

fn conventional(channels: ChannelSet, d: usize, power: f64, noise: f64) -> WsrProblem {
    let (b, u, mt, mr) = (channels.num_bs(), channels.num_ut(), channels.mt(), channels.mr());
    let config = NetworkConfig::uniform(b, u, mt, mr, d, power, noise, b);
    WsrProblem::from_config(&config, channels, ClusterMap::conventional(b, u)).unwrap()
}

fn row(values: &[Complex64]) -> CMat {
    CMat::from_row_slice(1, values.len(), values)
}

/// `|<a, b>| = ‖a‖‖b‖` for every column pair.
fn columns_parallel(a: &CMat, b: &CMat, tol: f64) -> bool {
    a.column_iter().zip(b.column_iter()).all(|(x, y)| {
        let ip = x.dotc(&y).norm();
        (ip - x.norm() * y.norm()).abs() <= tol * x.norm() * y.norm()
    })
}

#[test]
fn mrt_is_a_matched_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let problem = conventional(unit_channels(2, 3, 4, 1, &mut rng), 1, 1.5, 0.2);
    let p = mrt_precoder(&problem).unwrap();
    for i in 0..3 {
        for k in 0..2 {
            let h = problem.channels().block(i, k);
            assert!(columns_parallel(p.block(i, k), &h.adjoint(), 1e-12));
        }
    }
    assert!(problem.manifold().is_on_manifold(&p));
}

#[test]
fn collinear_users_get_collinear_mrt_blocks() {
    let h = row(&[c(1.0, 0.5), c(-0.3, 0.2), c(0.7, -1.1)]);
    let ch = ChannelSet::new(1, 2, 3, 1, vec![h.clone(), h * c(2.0, 0.0)], vec![1.0, 1.0]).unwrap();
    let problem = conventional(ch, 1, 1.0, 0.1);
    let p = mrt_precoder(&problem).unwrap();
    assert!(columns_parallel(p.block(0, 0), p.block(1, 0), 1e-12));
}

#[test]
fn every_baseline_lands_on_the_manifold() {
    for seed in 0..5 {
        let config = NetworkConfig::uniform(3, 6, 8, 2, 2, dbm_to_watts(20.0), dbm_to_watts(-104.0), 2);
        let channels = generate_channels(&config, seed).unwrap();
        let cluster = select_clusters(&channels, 2).unwrap();
        let problem = WsrProblem::from_config(&config, channels, cluster).unwrap();
        for kind in BaselineKind::ALL {
            let p = linear_baseline(kind, &problem).unwrap();
            assert!(problem.manifold().is_on_manifold(&p), "{}", kind.name());
            assert!(problem.build_cache(&p).unwrap().wsr(problem.weights()) > 0.0);
        }
    }
}

#[test]
fn single_station_zf_nulls_interference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let problem = conventional(unit_channels(1, 2, 5, 2, &mut rng), 1, 1.0, 0.1);
    let p = linear_baseline(BaselineKind::Zf, &problem).unwrap();
    for i in 0..2 {
        for j in (0..2).filter(|&j| j != i) {
            let leak = problem.channels().block(j, 0) * p.block(i, 0);
            assert!(leak.norm() < 1e-10, "user {i} leaks {:e} into {j}", leak.norm());
        }
    }
}

#[test]
fn single_user_zf_points_like_mrt() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in 1..=2 {
        let problem = conventional(unit_channels(1, 1, 4, 2, &mut rng), d, 1.0, 0.3);
        let zf = linear_baseline(BaselineKind::Zf, &problem).unwrap();
        let mrt = mrt_precoder(&problem).unwrap();
        assert!(columns_parallel(zf.block(0, 0), mrt.block(0, 0), 1e-10));
    }
}

#[test]
fn mmse_approaches_zf_as_noise_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ch = unit_channels(1, 2, 4, 2, &mut rng);
    let problem = conventional(ch, 2, 1.0, 1e-12);
    let zf = linear_baseline(BaselineKind::Zf, &problem).unwrap();
    let mmse = linear_baseline(BaselineKind::Mmse, &problem).unwrap();
    assert!(zf.max_abs_diff(&mmse) <= 1e-6);
}

#[test]
fn single_station_bd_lives_in_the_others_null_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let problem = conventional(unit_channels(1, 3, 6, 2, &mut rng), 2, 1.0, 0.1);
    let p = linear_baseline(BaselineKind::Bd, &problem).unwrap();
    for i in 0..3 {
        for j in (0..3).filter(|&j| j != i) {
            let leak = problem.channels().block(j, 0) * p.block(i, 0);
            assert!(leak.norm() < 1e-10);
        }
    }
}

#[test]
fn rcg_barely_moves_on_orthogonal_equal_channels() {
    let z = c(0.0, 0.0);
    let s = c(0.8, 0.6);
    let h1 = CMat::from_row_slice(2, 4, &[s, z, z, z, z, s, z, z]);
    let h2 = CMat::from_row_slice(2, 4, &[z, z, s, z, z, z, z, s]);
    let problem = conventional(ChannelSet::new(1, 2, 4, 2, vec![h1, h2], vec![1.0, 1.0]).unwrap(), 2, 2.0, 0.5);
    let p0 = mrt_precoder(&problem).unwrap();
    let sol = rcg_solve(&problem, &p0, &Default::default(), &NoClock).unwrap();
    let (w0, w1) = (sol.trace.records[0].wsr, sol.trace.final_record().wsr);
    assert!((w1 - w0).abs() < 1e-3 * w0);
}

#[test]
fn over_constrained_nulling_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let problem = conventional(unit_channels(1, 3, 2, 1, &mut rng), 1, 1.0, 0.1);
    for kind in [BaselineKind::Zf, BaselineKind::Ezf, BaselineKind::Bd] {
        assert!(matches!(linear_baseline(kind, &problem), Err(Error::BaselineInfeasible { .. })), "{}", kind.name());
    }
    assert!(linear_baseline(BaselineKind::Mmse, &problem).is_ok());
}

#[test]
fn names_round_trip() {
    for kind in BaselineKind::ALL {
        assert_eq!(BaselineKind::from_name(kind.name()), Some(kind));
    }
    assert_eq!(BaselineKind::from_name("rzf"), None);
}
