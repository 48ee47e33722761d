use super::*;
use crate::agent::{majority_vote, DqnAgent};
use crate::nn::Layer;
use crate::runner::{explore_actions, Coordinator, RunOutput, RunSpec};
use crate::transfer::{Efontl, TransferConfig};
use crate::uncertainty::{EstimatorConfig, EstimatorKind, RndEstimator};

fn small_spec(episodes: usize) -> RunSpec {
    RunSpec::cartpole(episodes)
}

/// Forces `agent`'s greedy action to `a` everywhere.
fn pin_greedy(agent: &mut DqnAgent, a: usize) {
    let n = agent.n_actions();
    let last = agent.net_mut().online_mut().layers_mut().iter_mut().rev().find_map(Layer::dense_mut).unwrap();
    last.weights_mut().iter_mut().for_each(|w| *w = 0.0);
    let bias: Vec<f64> = std::iter::once(0.0).chain((0..n).map(|j| if j == a { 1.0 } else { 0.0 })).collect();
    last.bias_mut().copy_from_slice(&bias);
    agent.net_mut().sync_target();
}

fn same_trajectory(a: &RunOutput, b: &RunOutput) {
    assert_eq!(a.episodes, b.episodes);
    for (x, y) in a.agents.iter().zip(&b.agents) {
        assert_eq!(x.net().online().params_flat(), y.net().online().params_flat());
    }
}

fn state_est(agent: u64) -> RndEstimator {
    RndEstimator::for_agent(EstimatorKind::State, 4, 2, &EstimatorConfig::default(), 0, agent).unwrap()
}

fn jury_from(spec: &RunSpec, seed: u64, n: usize) -> ExpertJury {
    let agents = spec.agents(seed).unwrap();
    ExpertJury::from_agents(agents.iter().take(n)).unwrap()
}

#[test]
fn budget_accounting() {
    let mut b = AdviceBudget::new(2);
    assert!(b.spend() && b.spend());
    assert!(!b.spend());
    assert_eq!((b.used(), b.remaining(), b.total()), (2, 0, 2));
    assert!(!AdviceBudget::new(0).has_remaining());
}

#[test]
fn seeker_is_the_most_uncertain_member_with_budget() {
    let full = vec![AdviceBudget::new(5); 3];
    assert_eq!(ocmas_seeker(&[Some(0.1), Some(0.9), Some(0.2)], &full), Some(1));
    assert_eq!(ocmas_seeker(&[Some(0.4), Some(0.4), Some(0.2)], &full), Some(0));
    assert_eq!(ocmas_seeker(&[Some(0.1), None, Some(0.2)], &full), Some(2));
    assert_eq!(ocmas_seeker(&[None, None, None], &full), None);
    let mut spent = full.clone();
    spent[1] = AdviceBudget::new(0);
    // The most uncertain agent asks or nobody does.
    assert_eq!(ocmas_seeker(&[Some(0.1), Some(0.9), Some(0.2)], &spent), None);
}

#[test]
fn seeker_follows_the_advisor_majority() {
    let spec = small_spec(10);
    let mut agents: Vec<DqnAgent> = (0..4).map(|i| DqnAgent::new(&spec.dqn, 1, i).unwrap()).collect();
    let pinned = [1, 0, 0, 1];
    for (a, &p) in agents.iter_mut().zip(&pinned) {
        pin_greedy(a, p);
    }
    let ests: Vec<RndEstimator> = (0..4).map(state_est).collect();
    let obs: Vec<Vec<f64>> = (0..4).map(|i| vec![0.01 * i as f64; 4]).collect();
    let u: Vec<f64> = (0..4).map(|i| ests[i].estimate(&obs[i]).unwrap()).collect();
    let seeker = (0..4).fold(0, |b, i| if u[i] > u[b] { i } else { b });
    let mut budgets = vec![AdviceBudget::new(3); 4];
    let active = vec![true; 4];
    let (actions, who) = ocmas_step(&mut agents, &[0, 1, 2, 3], &ests, &obs, &active, &mut budgets).unwrap();
    assert_eq!(who, Some(seeker));
    assert_eq!(budgets.iter().map(AdviceBudget::used).sum::<usize>(), 1);
    assert_eq!(budgets[seeker].used(), 1);
    let votes: Vec<usize> = (0..4).filter(|&i| i != seeker).map(|i| pinned[i]).collect();
    assert_eq!(actions[seeker], Some(majority_vote(&votes, 2)));
    assert!(actions.iter().all(Option::is_some));
    assert_eq!(majority_vote(&[0, 0, 1], 2), 0);
}

#[test]
fn exhausted_budget_means_own_policy() {
    let spec = small_spec(10);
    let agents: Vec<DqnAgent> = (0..3).map(|i| DqnAgent::new(&spec.dqn, 2, i).unwrap()).collect();
    let ests: Vec<RndEstimator> = (0..3).map(state_est).collect();
    let obs = vec![vec![0.1, 0.0, -0.1, 0.0]; 3];
    let active = vec![true; 3];
    let mut own = agents.clone();
    let expect = explore_actions(&mut own, &obs, &active).unwrap();
    let mut advised = agents;
    let mut budgets = vec![AdviceBudget::new(0); 3];
    let (got, who) = ocmas_step(&mut advised, &[0, 1, 2], &ests, &obs, &active, &mut budgets).unwrap();
    assert_eq!(who, None);
    assert_eq!(got, expect);
}

#[test]
fn rcmp_asks_only_when_heads_disagree() {
    let spec = small_spec(10);
    let jury_agents: Vec<DqnAgent> = (0..3)
        .map(|i| {
            let mut a = DqnAgent::new(&spec.dqn, 3, i).unwrap();
            pin_greedy(&mut a, usize::from(i > 0));
            a
        })
        .collect();
    let jury = ExpertJury::from_agents(&jury_agents).unwrap();
    let s = [0.0, 0.1, 0.0, -0.1];
    assert_eq!(jury.votes(&s).unwrap(), vec![0, 1, 1]);
    assert_eq!(jury.advise(&s).unwrap(), 1);

    let mut r = crate::rng::stream(4, crate::rng::Stream::EnsembleInit, 0);
    let mut student = crate::agent::EnsembleQNet::new(&spec.dqn.qnet, 5, &mut r).unwrap();
    // All heads agree: no advice at a small positive threshold.
    {
        let last = student.net_mut().online_mut().layers_mut().iter_mut().rev().find_map(Layer::dense_mut).unwrap();
        last.weights_mut().iter_mut().for_each(|w| *w = 0.0);
        let bias: Vec<f64> = (0..5).flat_map(|_| [0.0, 1.0, 0.0]).collect();
        last.bias_mut().copy_from_slice(&bias);
    }
    assert_eq!(student.uncertainty(&s).unwrap(), 0.0);
    let mut b = AdviceBudget::new(3);
    assert_eq!(rcmp_step(&student, &jury, &s, 0.02, &mut b).unwrap(), None);
    assert_eq!(b.used(), 0);
    // One head of five dissents: 0.2 > 0.02.
    {
        let last = student.net_mut().online_mut().layers_mut().iter_mut().rev().find_map(Layer::dense_mut).unwrap();
        last.bias_mut()[4] = 0.0;
        last.bias_mut()[5] = 1.0;
    }
    assert!((student.uncertainty(&s).unwrap() - 0.2).abs() < 1e-12);
    assert_eq!(rcmp_step(&student, &jury, &s, 0.02, &mut b).unwrap(), Some(1));
    assert_eq!(b.used(), 1);
    assert_eq!(rcmp_step(&student, &jury, &s, 0.2, &mut b).unwrap(), None);
    let mut empty = AdviceBudget::new(0);
    assert_eq!(rcmp_step(&student, &jury, &s, 0.02, &mut empty).unwrap(), None);
}

#[test]
fn zero_budgets_reproduce_independent_learning() {
    let spec = small_spec(25);
    let seed = 5;
    let base = run_no_transfer(&spec, seed).unwrap();

    let mut ocmas = Ocmas::new(spec.members(), 4, 2, &spec.estimator, 0, seed).unwrap();
    same_trajectory(&base, &runner::run(&spec, &mut ocmas, seed).unwrap());

    let mut rcmp = Rcmp::new(&spec, spec.members(), jury_from(&spec, 99, 5), 0.02, 0, seed).unwrap();
    same_trajectory(&base, &runner::run(&spec, &mut rcmp, seed).unwrap());

    let mut never = Rcmp::new(&spec, spec.members(), jury_from(&spec, 99, 5), f64::INFINITY, 100, seed).unwrap();
    let out = runner::run(&spec, &mut never, seed).unwrap();
    same_trajectory(&base, &out);
    assert!(out.budget.iter().all(|b| b.used == 0));

    let mut cfg = TransferConfig::cartpole();
    cfg.budget = 0;
    cfg.start_episode = 0;
    cfg.transfer_frequency = 1;
    let mut ef = Efontl::new(cfg, spec.members(), 4, 2, &spec.estimator, seed).unwrap();
    let out = runner::run(&spec, &mut ef, seed).unwrap();
    same_trajectory(&base, &out);
    assert_eq!(out.transfers.len(), 24);

    let mut late = TransferConfig::cartpole();
    late.start_episode = 0;
    late.transfer_frequency = 100;
    let mut ef = Efontl::new(late, spec.members(), 4, 2, &spec.estimator, seed).unwrap();
    let out = runner::run(&spec, &mut ef, seed).unwrap();
    same_trajectory(&base, &out);
    assert!(out.transfers.is_empty());
}

#[test]
fn advice_ledger_and_frozen_jury() {
    let spec = small_spec(12);
    let jury = jury_from(&spec, 77, 5);
    let before = jury.fingerprint();
    let mut rcmp = Rcmp::new(&spec, spec.members(), jury, -1.0, 150, 6).unwrap();
    let out = runner::run(&spec, &mut rcmp, 6).unwrap();
    assert_eq!(rcmp.jury().fingerprint(), before);
    // A negative threshold asks on every step until the budget runs out.
    for (m, b) in rcmp.budgets().iter().enumerate() {
        let steps: usize = out.episodes.iter().filter(|r| r.agent == m).map(|r| r.length).sum();
        assert_eq!(b.used(), steps.min(150));
    }
    for m in spec.members() {
        let used: Vec<usize> = out.budget.iter().filter(|b| b.agent == m).map(|b| b.used).collect();
        assert_eq!(used.len(), 12);
        assert!(used.windows(2).all(|w| w[0] <= w[1]));
    }

    let mut ocmas = Ocmas::new(spec.members(), 4, 2, &spec.estimator, 40, 6).unwrap();
    let out = runner::run(&spec, &mut ocmas, 6).unwrap();
    let total: usize = ocmas.budgets().iter().map(AdviceBudget::used).sum();
    assert_eq!(total, ocmas.advised());
    assert!(total > 0);
    let last = out.budget.iter().filter(|b| b.episode == 11).map(|b| b.used).sum::<usize>();
    assert_eq!(last, total);
}

#[test]
fn sweep_budget_is_ordered_by_threshold() {
    let spec = small_spec(8);
    let jury = jury_from(&spec, 55, 5);
    let sweep = rcmp_threshold_sweep(&spec, &jury, &[0.0, 0.3, f64::INFINITY], 10_000, &[1, 2]).unwrap();
    let curves: Vec<Vec<f64>> = sweep.iter().map(SweepResult::mean_cumulative_budget).collect();
    for pair in curves.windows(2) {
        assert!(pair[0].iter().zip(&pair[1]).all(|(lo, hi)| lo >= hi), "{pair:?}");
    }
    assert!(curves[2].iter().all(|&c| c == 0.0));
}

#[test]
fn jury_checkpoints_round_trip() {
    let spec = small_spec(10);
    let jury = jury_from(&spec, 8, 3);
    let dir = tempfile::tempdir().unwrap();
    let paths = jury.save(dir.path()).unwrap();
    let back = ExpertJury::load(&spec.dqn.qnet, &paths).unwrap();
    assert_eq!(back.fingerprint(), jury.fingerprint());
    let s = [0.2, -0.1, 0.05, 0.0];
    assert_eq!(back.votes(&s).unwrap(), jury.votes(&s).unwrap());
    assert!(ExpertJury::new(Vec::new()).is_err());
}

#[test]
fn coordinators_report_their_names() {
    let spec = small_spec(5);
    assert_eq!(NoTransfer.name(), "no_transfer");
    assert_eq!(Ocmas::new(vec![0, 1], 4, 2, &spec.estimator, 1, 0).unwrap().name(), "ocmas");
    assert_eq!(Rcmp::new(&spec, vec![0], jury_from(&spec, 0, 1), 0.1, 1, 0).unwrap().name(), "rcmp");
}
