use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::*;
use crate::agent::Transition;
use crate::envs::gridworld::CODE_PREDATOR;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn state_est(seed: u64, dim: usize) -> RndEstimator {
    RndEstimator::for_agent(EstimatorKind::State, dim, 2, &EstimatorConfig::default(), seed, 0).unwrap()
}

fn vec_in(r: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

#[test]
fn copied_predictor_means_zero_uncertainty() {
    let mut est = state_est(1, 4);
    let target = est.target().clone();
    est.predictor_mut().copy_parameters_from(&target).unwrap();
    let mut r = rng(2);
    for _ in 0..20 {
        assert_eq!(est.estimate(&vec_in(&mut r, 4, -3.0, 3.0)).unwrap(), 0.0);
    }
}

#[test]
fn fresh_estimate_is_positive_and_matches_raw_mse() {
    let est = state_est(3, 4);
    let mut r = rng(4);
    for _ in 0..20 {
        let x = vec_in(&mut r, 4, -1.0, 1.0);
        let u = est.estimate(&x).unwrap();
        assert!(u > 0.0);
        let a = est.target().predict(&x).unwrap();
        let b = est.predictor().predict(&x).unwrap();
        assert_eq!(a.len(), 1024);
        let oracle = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / 1024.0;
        assert!((u - oracle).abs() <= 1e-12);
    }
}

#[test]
fn estimate_is_pure_and_update_reports_it() {
    let mut est = state_est(5, 4);
    let x = [0.1, -0.2, 0.3, 0.05];
    let u1 = est.estimate(&x).unwrap();
    let u2 = est.estimate(&x).unwrap();
    assert_eq!(u1, u2);
    assert_eq!(est.update(&x).unwrap(), u1);
    assert!(est.estimate(&x).unwrap() < u1);
}

#[test]
fn training_on_one_input_shrinks_it_tenfold() {
    let mut est = state_est(6, 4);
    let x = [0.5, -0.5, 0.25, 0.1];
    let u0 = est.estimate(&x).unwrap();
    for _ in 0..500 {
        est.update(&x).unwrap();
    }
    let u1 = est.estimate(&x).unwrap();
    assert!(u1 * 10.0 <= u0, "{u0} -> {u1}");
}

#[test]
fn target_is_frozen() {
    let mut est = state_est(7, 4);
    let before = est.target().params_flat();
    let mut r = rng(8);
    for _ in 0..1_000 {
        est.update(&vec_in(&mut r, 4, -1.0, 1.0)).unwrap();
    }
    assert_eq!(est.target().params_flat(), before);
}

#[test]
fn same_seed_same_sequence() {
    let mut a = state_est(9, 4);
    let mut b = state_est(9, 4);
    let mut r = rng(10);
    for _ in 0..50 {
        let x = vec_in(&mut r, 4, -1.0, 1.0);
        assert_eq!(a.update(&x).unwrap(), b.update(&x).unwrap());
    }
}

#[test]
fn agents_share_targets_but_not_predictors() {
    let cfg = EstimatorConfig::default();
    let a = RndEstimator::for_agent(EstimatorKind::Transition, 4, 2, &cfg, 11, 0).unwrap();
    let b = RndEstimator::for_agent(EstimatorKind::Transition, 4, 2, &cfg, 11, 1).unwrap();
    assert_eq!(a.target().params_flat(), b.target().params_flat());
    assert_ne!(a.predictor().params_flat(), b.predictor().params_flat());
}

#[test]
fn batched_estimates_match_single() {
    let est = state_est(12, 4);
    let mut r = rng(13);
    let n = 300;
    let x = vec_in(&mut r, 4 * n, -1.0, 1.0);
    let batched = est.estimate_batch(&x, n).unwrap();
    for (i, u) in batched.iter().enumerate() {
        let single = est.estimate(&x[4 * i..4 * i + 4]).unwrap();
        assert!((u - single).abs() <= 1e-12 * single.max(1.0));
    }
    assert!(est.estimate_batch(&x[..7], 2).is_err());
}

#[test]
fn transition_input_layout() {
    let est = RndEstimator::for_agent(EstimatorKind::Transition, 2, 3, &EstimatorConfig::default(), 0, 0).unwrap();
    let t = Transition {
        s: vec![0.5, 0.6],
        a: 2,
        r: -1.0,
        s_next: vec![0.7, 0.8],
        done: false,
    };
    assert_eq!(est.encode(&t).unwrap(), vec![0.5, 0.6, 0.0, 0.0, 1.0, -0.1, 0.7, 0.8]);
    assert_eq!(est.input_size(), 8);
    let state = state_est(0, 2);
    assert_eq!(state.encode(&t).unwrap(), vec![0.5, 0.6]);
}

#[test]
fn repeated_input_trend_is_non_increasing() {
    let mut est = state_est(14, 4);
    let x = [0.3, 0.3, -0.6, 0.9];
    let trace: Vec<f64> = (0..300).map(|_| est.update(&x).unwrap()).collect();
    let smooth: Vec<f64> = trace.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
    for w in smooth.windows(2) {
        assert!(w[1] <= w[0], "{} then {}", w[0], w[1]);
    }
}

#[test]
fn unfamiliar_inputs_look_more_uncertain() {
    // Per seed: train on a cluster D, compare held-out D samples with inputs far
    // from D. One-sided paired t-test over 20 seeds.
    let mut diffs = Vec::new();
    for seed in 0..20 {
        let mut est = state_est(100 + seed, 4);
        let mut r = rng(200 + seed);
        let near = |r: &mut ChaCha8Rng| vec_in(r, 4, 0.3, 0.7);
        for _ in 0..400 {
            let x = near(&mut r);
            est.update(&x).unwrap();
        }
        let mut on_d = 0.0;
        let mut far = 0.0;
        for _ in 0..50 {
            on_d += est.estimate(&near(&mut r)).unwrap() / 50.0;
            far += est.estimate(&vec_in(&mut r, 4, -2.5, -1.5)).unwrap() / 50.0;
        }
        diffs.push(far - on_d);
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let t = mean / (sd / n.sqrt());
    let p = 1.0 - StudentsT::new(0.0, 1.0, n - 1.0).unwrap().cdf(t);
    assert!(p < 0.05, "t = {t}, p = {p}");
}

#[test]
fn sars_rnd_recognises_seen_states_under_new_actions() {
    let cfg = EstimatorConfig::default();
    let mut r = rng(15);
    let mut wins = 0;
    for seed in 0..10 {
        let mut est = RndEstimator::for_agent(EstimatorKind::Transition, 4, 2, &cfg, seed, 0).unwrap();
        let seen: Vec<Vec<f64>> = (0..8).map(|_| vec_in(&mut r, 4, -1.0, 1.0)).collect();
        let mk = |s: &Vec<f64>, a| Transition {
            s: s.clone(),
            a,
            r: 0.0,
            s_next: s.iter().map(|v| v * 0.9).collect(),
            done: false,
        };
        for _ in 0..100 {
            for s in &seen {
                est.update(&est.encode(&mk(s, 0)).unwrap()).unwrap();
            }
        }
        let mut u_seen = 0.0;
        let mut u_new = 0.0;
        for s in &seen {
            let unseen = vec_in(&mut r, 4, -1.0, 1.0).iter().map(|v| v + 3.0).collect();
            u_seen += est.estimate(&est.encode(&mk(s, 1)).unwrap()).unwrap();
            u_new += est.estimate(&est.encode(&mk(&unseen, 1)).unwrap()).unwrap();
        }
        if u_seen < u_new {
            wins += 1;
        }
    }
    assert_eq!(wins, 10);
}

#[test]
fn spike_fixtures_look_as_described() {
    let mut r = rng(0);
    for (state_id, team) in [(1, 1.0), (2, 2.0)] {
        let mut w = spike_fixture(state_id);
        let first = w.observe(0).unwrap();
        for (k, cell) in first.chunks(3).enumerate() {
            if k == 7 {
                assert_eq!(cell, [CODE_PREDATOR, team, 0.0]);
            } else {
                assert_eq!(cell, [0.0, 0.0, 0.0]);
            }
        }
        for _ in 0..4 {
            w.step(&[crate::envs::PredatorAction::RotateLeft], &mut r).unwrap();
            assert_eq!(w.observe(0).unwrap(), first);
        }
    }
    assert_ne!(spike_fixture(1).observe(0).unwrap(), spike_fixture(2).observe(0).unwrap());
    let script = spike_script();
    assert_eq!(script.len(), 300);
    assert_eq!(script[249], crate::envs::PredatorAction::Hold);
    assert_eq!(script[250], crate::envs::PredatorAction::RotateLeft);
    assert_eq!(script[275], crate::envs::PredatorAction::Hold);
}

#[test]
fn spike_traces_and_table() {
    let traces = spike_experiment(3, &EstimatorConfig::default()).unwrap();
    assert_eq!(traces.len(), 4);
    assert!(traces.iter().all(|t| t.u.len() == 300 && t.u.iter().all(|u| u.is_finite() && *u >= 0.0)));
    let table = spike_table(&traces);
    assert_eq!(table.header, SPIKE_HEADER);
    assert_eq!(table.rows.len(), 1_200);
    let again = spike_experiment(3, &EstimatorConfig::default()).unwrap();
    assert_eq!(traces, again);
}
