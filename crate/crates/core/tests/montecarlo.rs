use comwalk::increments::{make_lazy_ssrw, make_point_mass, make_ssrw, make_stable_lattice, LatticeLaw};
use comwalk::lattice::LatticeBasis;
use comwalk::montecarlo::{
    clt_check, deviation_check, escape_exponent, lln_check, mc_cell_frequencies, recurrence_stats,
    sample_gn_trajectory, sample_gn_weighted, simulate, stable_transience_stats, write_trajectory_csv,
    zn_identity_check, CellSpec, SimConfig,
};
use comwalk::rng::RandomStream;
use comwalk::stats::{ks_two_sample, ks_two_sample_critical};
use comwalk::Error;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn law_of_large_numbers_with_drift() {
    let law = LatticeLaw::finite(1, &[(&[0], 0.5), (&[2], 0.5)]).unwrap();
    let cfg = SimConfig::new(100_000, 20, 3);
    let r = lln_check(&law, &cfg).unwrap();
    // G_n / n -> mu / 2 = 1/2 with spread of order n^{-1/2}
    assert!(r.max_deviation < 0.01, "{}", r.max_deviation);
    assert!((r.mean_ratio[0] - 0.5).abs() < 0.005);
}

#[test]
fn identical_configs_give_identical_stats_for_any_worker_count() {
    let law = make_lazy_ssrw(2).unwrap();
    let mut cfg = SimConfig::new(20_000, 12, 99);
    cfg.targets = vec![vec![0.0, 0.0], vec![1.0, -1.0]];
    cfg.beta = Some(2.0);
    cfg.dyadic = true;
    cfg.ball = Some(Default::default());
    let a = pool(1).install(|| simulate(&law, &cfg).unwrap());
    let b = pool(4).install(|| simulate(&law, &cfg).unwrap());
    let c = simulate(&law, &cfg).unwrap();
    // exponents at n = 1 are not numbers, so compare renderings
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert_eq!(format!("{a:?}"), format!("{c:?}"));
    let mut x = Vec::new();
    let mut y = Vec::new();
    write_trajectory_csv(&a, &mut x).unwrap();
    write_trajectory_csv(&b, &mut y).unwrap();
    assert_eq!(x, y);
    let mut other = cfg.clone();
    other.base_seed = 100;
    assert_ne!(format!("{:?}", simulate(&law, &other).unwrap()), format!("{a:?}"));
}

#[test]
fn batch_samplers_are_worker_independent() {
    let law = make_ssrw(1).unwrap();
    let a = pool(1).install(|| sample_gn_weighted(&law, 30, 40_000, 5).unwrap());
    let b = pool(3).install(|| sample_gn_weighted(&law, 30, 40_000, 5).unwrap());
    assert_eq!(a, b);
}

#[test]
fn weighted_and_trajectory_samplers_agree() {
    let law = make_ssrw(1).unwrap();
    let n = 50;
    let samples = 100_000;
    let mut a = sample_gn_weighted(&law, n, samples, 7).unwrap();
    let mut b = sample_gn_trajectory(&law, n, samples, 7).unwrap();
    let ks = ks_two_sample(&mut a, &mut b);
    let critical = ks_two_sample_critical(1.628, samples, samples);
    assert!(ks < critical, "KS {ks} vs {critical}");
}

#[test]
fn shifted_walk_matches_rescaled_centre_of_mass() {
    let r = zn_identity_check(&make_ssrw(1).unwrap(), 100, 100_000, 7).unwrap();
    assert!(r.ks_distance < r.critical_0_1pct, "{r:?}");
}

#[test]
fn deterministic_drift_exponents_are_exact() {
    let law = make_point_mass(&[1, 1]).unwrap();
    let mut cfg = SimConfig::new(1 << 20, 2, 1);
    cfg.burn_in = 1;
    let stats = simulate(&law, &cfg).unwrap();
    for s in &stats {
        for c in s.checkpoints.iter().filter(|c| c.n > 1) {
            let n = c.n as f64;
            let want = ((n + 1.0) / 2.0 * 2f64.sqrt()).ln() / n.ln();
            assert!((c.exponent - want).abs() < 1e-12, "n = {}: {} vs {want}", c.n, c.exponent);
        }
        assert!(s.identity_residual < 1e-9);
    }
}

#[test]
fn running_update_matches_the_direct_average() {
    for law in [make_ssrw(1).unwrap(), make_lazy_ssrw(3).unwrap(), make_stable_lattice(0.5).unwrap()] {
        let cfg = SimConfig::new(50_000, 8, 21);
        for s in simulate(&law, &cfg).unwrap() {
            assert!(s.identity_residual < 1e-9, "{}", s.identity_residual);
        }
    }
}

#[test]
fn sampled_increments_match_exact_moments() {
    let law = LatticeLaw::finite(2, &[(&[0, 0], 0.1), (&[1, 0], 0.4), (&[-2, 1], 0.3), (&[3, -1], 0.2)]).unwrap();
    let m = law.moments().unwrap();
    let draws = 1_000_000;
    let mut rng = RandomStream::new(17, 0);
    let mut sum = [0.0f64; 2];
    let mut sq = [0.0f64; 2];
    for _ in 0..draws {
        let x = law.sample(&mut rng);
        for i in 0..2 {
            sum[i] += x[i] as f64;
            sq[i] += (x[i] * x[i]) as f64;
        }
    }
    for i in 0..2 {
        let mean = sum[i] / draws as f64;
        let var = m.m[(i, i)];
        let se = (var / draws as f64).sqrt();
        assert!((mean - m.mu[i]).abs() < 5.0 * se, "coordinate {i}");
        let second = sq[i] / draws as f64;
        let want = var + m.mu[i] * m.mu[i];
        // fourth moment bounds the spread of the squares
        let fourth: f64 = law.atoms().iter().map(|a| a.prob * (a.point[i] as f64).powi(4)).sum();
        let se2 = ((fourth - want * want) / draws as f64).sqrt();
        assert!((second - want).abs() < 5.0 * se2, "coordinate {i}");
    }
}

#[test]
fn clt_in_the_plane() {
    let mut cfg = SimConfig::new(2_000, 2_000, 8);
    cfg.checkpoints = vec![2_000];
    let r = clt_check(&make_lazy_ssrw(2).unwrap(), &cfg).unwrap();
    for i in 0..2 {
        let ratio = r.sample_covariance[i][i] / r.limit_covariance[i][i];
        assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
    }
    assert!(r.ks_distance < r.ks_critical_1pct * 1.5);
    let small = SimConfig::new(100, 10, 1);
    assert!(matches!(clt_check(&make_ssrw(1).unwrap(), &small), Err(Error::TooFewRuns { .. })));
    assert!(matches!(clt_check(&make_point_mass(&[1]).unwrap(), &small), Err(Error::Degenerate(_))));
}

#[test]
fn window_deviations_shrink() {
    let law = make_ssrw(1).unwrap();
    let mut cfg = SimConfig::new(100_000, 20, 4);
    // windows of length about k^{1/2} make the deviations decay like k^{-1/4}
    cfg.beta = Some(1.5);
    let r = deviation_check(&law, &cfg, 0.5, 10).unwrap();
    let mean: f64 = r.violation_fraction.iter().sum::<f64>() / r.violation_fraction.len() as f64;
    assert!(mean < 0.05, "{mean}");
    let first = r.median_deviation.iter().find(|w| w.0 == 10).unwrap().1;
    let last = r.median_deviation.last().unwrap().1;
    assert!(last < first);
    assert!(deviation_check(&law, &SimConfig::new(100, 2, 1), 0.5, 1).is_err());
}

#[test]
fn recurrence_statistics_shape() {
    let cfg = SimConfig::new(20_000, 10, 5);
    let r = recurrence_stats(&make_ssrw(1).unwrap(), &cfg).unwrap();
    assert_eq!(r.targets, vec![0.0, 1.0, -1.0]);
    assert_eq!(r.minima.len(), 3);
    assert!(r.minima.iter().all(|m| m.len() == 10));
    assert!(recurrence_stats(&make_ssrw(2).unwrap(), &cfg).is_err());
}

#[test]
fn escape_statistics_shape() {
    let cfg = SimConfig::new(20_000, 10, 5);
    let r = escape_exponent(&make_lazy_ssrw(2).unwrap(), &cfg).unwrap();
    assert_eq!(r.rows.last().unwrap().n, 20_000);
    assert!(r.rows.iter().all(|row| row.q10 <= row.median && row.median <= row.q90));
    assert!(r.final_median > 0.2 && r.final_median < 0.7);
}

#[test]
fn stable_walk_drifts_away() {
    let law = make_stable_lattice(0.5).unwrap();
    let cfg = SimConfig::new(1 << 12, 40, 2);
    let r = stable_transience_stats(&law, &cfg).unwrap();
    let k: Vec<u32> = r.median_window_minima.iter().map(|w| w.0).collect();
    assert_eq!(k, (0..=12).collect::<Vec<_>>());
    let late = &r.median_window_minima[6..];
    assert!(late.last().unwrap().1 > late[0].1);
}

#[test]
fn cell_frequencies_follow_the_stable_target() {
    let law = make_stable_lattice(0.5).unwrap();
    let basis = LatticeBasis::unit(1);
    let spec = CellSpec {
        n: 16,
        samples: 200_000,
        window: 1.0,
        cell_width: 0.1,
        seed: 3,
        min_hits: 100,
    };
    let r = mc_cell_frequencies(&law, &basis, &spec).unwrap();
    assert_eq!(r.points_per_cell % 2, 1);
    assert!(r.rows.len() > 10);
    assert!(r.window_mass > 0.0 && r.window_mass < 1.0);
    assert!(r.symmetry_z < 5.0);
    assert!(r.max_error < 0.5);
    let starved = CellSpec {
        samples: 10,
        ..spec
    };
    assert!(matches!(mc_cell_frequencies(&law, &basis, &starved), Err(Error::TooFewSamples { .. })));
    assert!(mc_cell_frequencies(&make_ssrw(1).unwrap(), &basis, &spec).is_err());
}
