use std::collections::BTreeMap;

use balance_assist::config::AppConfig;
use balance_assist::experiment::campaign::{
    generate_population, run_campaign_with, write_aggregate, write_campaign, Index, Subject, AGGREGATE_HEADER,
    TABLE_ORDER,
};
use balance_assist::experiment::log::{LogRow, TrialLog};
use balance_assist::experiment::metrics::{
    compute_result, metric_max_distance, metric_max_force, metric_time_outside, Axis,
};
use balance_assist::experiment::stats::sign_test;
use balance_assist::experiment::trial::run_trial;
use balance_assist::human::{Direction, Phase};
use balance_assist::strategies::Strategy;
use proptest::prelude::*;

fn row(t: f64, cop_x: f64, f: [f64; 3], phase: Phase) -> LogRow {
    LogRow { t, cop_x, dz_lo: -0.06, dz_hi: 0.11, f, ee_x: 0.5, ee_z: 1.0, ref_x: 0.5, ref_z: 1.0, elbow: -1.2, phase }
}

fn outside(r: &LogRow) -> f64 {
    if r.cop_x > r.dz_hi {
        r.cop_x - r.dz_hi
    } else if r.cop_x < r.dz_lo {
        r.dz_lo - r.cop_x
    } else {
        0.0
    }
}

/// CoP sweeps an arc past the front border between t = 1 and t = 1 + width.
fn arc_log(peak: f64, width: f64, n: usize) -> TrialLog {
    let mut log = TrialLog::new(0.01);
    for k in 0..n {
        let t = 0.01 * k as f64;
        let s = ((t - 1.0) / width).clamp(0.0, 1.0);
        let cop = 0.05 + (0.06 + peak) * (std::f64::consts::PI * s).sin();
        let phase = if s == 0.0 {
            Phase::Lean
        } else if s < 1.0 {
            Phase::Hold
        } else {
            Phase::Restored
        };
        log.push(row(t, cop, [30.0 * (7.0 * t).sin(), 1.0, -5.0 * t], phase));
    }
    log
}

#[test]
fn max_distance_matches_exhaustive_scan() {
    for (peak, width) in [(0.02, 1.0), (0.073, 2.5), (0.001, 0.3)] {
        let log = arc_log(peak, width, 500);
        let scan = log.rows.iter().map(outside).fold(0.0, f64::max);
        let got = metric_max_distance(&log).unwrap();
        assert_eq!(got, scan);
        assert!((got - peak).abs() < 2e-3 * (1.0 + peak * 100.0));
        let first = log.rows.iter().find(|r| outside(r) > 0.0).unwrap().t;
        let back = log.rows.iter().skip_while(|r| outside(r) == 0.0).find(|r| outside(r) == 0.0).unwrap().t;
        assert_eq!(metric_time_outside(&log).unwrap(), back - first);
    }
}

#[test]
fn failure_truncates_force_window() {
    let mut log = TrialLog::new(0.01);
    for k in 0..300 {
        let t = 0.01 * k as f64;
        let cop = if t < 1.0 { 0.0 } else { 0.115 + 0.02 * (t - 1.0) };
        let phase = if t < 1.0 {
            Phase::Lean
        } else if t < 2.0 {
            Phase::Hold
        } else {
            Phase::Stepped
        };
        let fx = if t < 1.0 { 80.0 } else { 10.0 + 20.0 * t };
        log.push(row(t, cop, [fx, 0.0, -fx / 4.0], phase));
    }
    let w = 700.0;
    let window = |end: f64| {
        log.rows.iter().filter(|r| r.t >= 1.0 && r.t <= end).map(|r| r.f[0].abs()).fold(0.0, f64::max) / w * 100.0
    };
    let truncated = window(2.0);
    let full = window(f64::INFINITY);
    assert!(full > truncated);
    assert_eq!(metric_max_force(&log, w, Axis::X), truncated);
    assert_eq!(metric_max_force(&log, w, Axis::Z), truncated / 4.0);
    let r = compute_result(&log, w);
    assert!(r.failed && r.dt_out.is_none() && r.d_max.is_none());
    assert_eq!(r.t_fail, Some(2.0));
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[test]
fn sign_test_matches_binomial_enumeration() {
    for n in 1..=20u64 {
        for pos in 0..=n {
            let k = pos.min(n - pos);
            let tail: u128 = (0..=k).map(|i| binomial(n, i)).sum();
            let total = 1u128 << n;
            let exact = if 2 * tail >= total { 1.0 } else { (2 * tail) as f64 / total as f64 };
            let mut diffs = vec![0.5; pos as usize];
            diffs.extend(std::iter::repeat_n(-2.0, (n - pos) as usize));
            diffs.extend([0.0, 0.0]);
            let p = sign_test(&diffs);
            assert!((p - exact).abs() <= 1e-12 * exact, "n={n} pos={pos}: {p} vs {exact}");
        }
    }
}

#[test]
fn metrics_recompute_exactly_from_csv() {
    let cfg = AppConfig::default();
    for (strategy, direction) in
        [(Strategy::Fsa, Direction::Fwd), (Strategy::Hwa, Direction::Bwd), (Strategy::Mba, Direction::Bwd)]
    {
        let tc = cfg.trial(strategy, direction, 77);
        let out = run_trial(&tc).unwrap();
        let mut buf = Vec::new();
        out.log.write_csv(&mut buf).unwrap();
        let back = TrialLog::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows, out.log.rows);
        assert_eq!(compute_result(&back, tc.human.weight()), out.result);
    }
}

#[test]
fn identical_seeds_give_identical_logs() {
    let cfg = AppConfig::default();
    let tc = cfg.trial(Strategy::Fsa, Direction::Fwd, 5);
    let (a, b) = (run_trial(&tc).unwrap(), run_trial(&tc).unwrap());
    assert_eq!(a.log, b.log);
    let other = run_trial(&cfg.trial(Strategy::Fsa, Direction::Fwd, 6)).unwrap();
    assert_ne!(a.log, other.log);
}

#[test]
fn log_is_uniform_and_results_are_consistent() {
    let cfg = AppConfig::default();
    for strategy in Strategy::ALL {
        let out = run_trial(&cfg.trial(strategy, Direction::Fwd, 3)).unwrap();
        let rows = &out.log.rows;
        for w in rows.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!((w[1].t - w[0].t - cfg.simulation.log_period).abs() < 1e-6);
        }
        let r = out.result;
        if r.failed {
            assert!(r.dt_out.is_none() && r.d_max.is_none());
        } else {
            assert!(r.dt_out.unwrap() >= 0.0 && r.d_max.unwrap() >= 0.0);
        }
        assert!(r.f_max_x >= 0.0 && r.f_max_z >= 0.0);
    }
}

#[test]
fn mirrored_assistance_recovers_without_voluntary_force() {
    let cfg = AppConfig::default();
    let out = run_trial(&cfg.trial(Strategy::Mba, Direction::Fwd, cfg.simulation.seed)).unwrap();
    assert!(!out.result.failed);
    assert!(out.result.t_in.is_some());
    assert_eq!(out.diagnostics.max_voluntary, 0.0);
}

#[test]
fn horizontal_wall_fails_backward() {
    let cfg = AppConfig::default();
    let out = run_trial(&cfg.trial(Strategy::Hwa, Direction::Bwd, cfg.simulation.seed)).unwrap();
    assert!(out.result.failed);
    assert_eq!(out.log.rows.last().unwrap().phase, Phase::Stepped);
}

fn small_setup(subjects: usize, trials: usize) -> balance_assist::experiment::CampaignSetup {
    let mut setup = AppConfig::default().campaign_setup();
    setup.population.subjects = subjects;
    setup.population.trials = trials;
    setup
}

#[test]
fn identical_subjects_have_zero_spread() {
    let mut setup = small_setup(3, 2);
    setup.system.sensor_noise = 0.0;
    let subjects: Vec<Subject> = (0..3).map(|id| Subject { id, mass: 70.0, height: 1.72 }).collect();
    let c = run_campaign_with(&setup, subjects).unwrap();
    for row in &c.aggregate {
        for ix in Index::ALL {
            let s = row.stat(ix);
            if s.n > 0 {
                assert_eq!(s.std, Some(0.0), "{:?} {:?} {}", row.strategy, row.direction, ix.name());
            }
        }
    }
}

#[test]
fn aggregate_table_shape() {
    let c = run_campaign_with(&small_setup(2, 2), generate_population(&small_setup(2, 2).population)).unwrap();
    assert_eq!(c.records.len(), 2 * 3 * 2);
    let mut buf = Vec::new();
    write_aggregate(&c.aggregate, &mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rd.headers().unwrap().len(), AGGREGATE_HEADER.len());
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for (rec, (direction, strategy)) in rows.iter().zip(TABLE_ORDER) {
        assert_eq!(rec.len() - 2, 8);
        assert_eq!(&rec[0], strategy.name());
        assert_eq!(&rec[1], direction.name());
    }
}

#[test]
fn aggregate_means_match_recomputation_from_trial_files() {
    let setup = small_setup(3, 2);
    let c = run_campaign_with(&setup, generate_population(&setup.population)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_campaign(&c, dir.path()).unwrap();
    let cfg = AppConfig::default();

    let mut pooled: BTreeMap<(String, String), Vec<[Option<f64>; 4]>> = BTreeMap::new();
    let mut rd = csv::Reader::from_path(dir.path().join("trials.csv")).unwrap();
    for rec in rd.records() {
        let rec = rec.unwrap();
        let mass: f64 = rec[1].parse().unwrap();
        let height: f64 = rec[2].parse().unwrap();
        let log = TrialLog::load(&dir.path().join("trials").join(&rec[15])).unwrap();
        let r = compute_result(&log, cfg.human_params(mass, height).weight());
        pooled.entry((rec[3].to_string(), rec[5].to_string())).or_default().push([
            r.dt_out,
            r.d_max.map(|d| d * 100.0),
            Some(r.f_max_x),
            Some(r.f_max_z),
        ]);
    }

    let mut rd = csv::Reader::from_path(dir.path().join("aggregate.csv")).unwrap();
    let mut seen = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        let vals = &pooled[&(rec[0].to_string(), rec[1].to_string())];
        for k in 0..4 {
            let xs: Vec<f64> = vals.iter().filter_map(|v| v[k]).collect();
            let cell = &rec[2 + 2 * k];
            if xs.is_empty() {
                assert_eq!(cell, "");
            } else {
                let want = xs.iter().sum::<f64>() / xs.len() as f64;
                let got: f64 = cell.parse().unwrap();
                assert!((got - want).abs() <= 5e-6 * want.abs(), "{got} vs {want}");
            }
        }
        seen += 1;
    }
    assert_eq!(seen, 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn indexes_are_non_negative_and_defined_iff_not_failed(
        cops in prop::collection::vec(-0.2..0.3f64, 2..80),
        forces in prop::collection::vec(-60.0..60.0f64, 80),
        fail_at in prop::option::of(0usize..80),
    ) {
        let mut log = TrialLog::new(0.01);
        for (k, c) in cops.iter().enumerate() {
            let phase = match fail_at {
                Some(f) if k >= f => Phase::Stepped,
                _ => Phase::Hold,
            };
            log.push(row(0.01 * k as f64, *c, [forces[k], 0.0, forces[79 - k]], phase));
        }
        let r = compute_result(&log, 650.0);
        let failed = fail_at.is_some_and(|f| f < cops.len());
        prop_assert_eq!(r.failed, failed);
        if failed {
            prop_assert!(r.dt_out.is_none() && r.d_max.is_none());
        }
        prop_assert!(r.dt_out.is_none_or(|v| v >= 0.0));
        prop_assert!(r.d_max.is_none_or(|v| v >= 0.0));
        prop_assert!(r.f_max_x >= 0.0 && r.f_max_z >= 0.0);
        prop_assert!(r.f_max_x <= 60.0 / 650.0 * 100.0 + 1e-9);
    }
}
