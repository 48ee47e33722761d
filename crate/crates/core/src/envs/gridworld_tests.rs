use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gridworld::*;
use crate::Error;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn predator(team: Team, position: (i32, i32), orientation: Orientation) -> Entity {
    Entity {
        kind: EntityKind::Predator,
        team,
        position,
        orientation,
        alive: true,
    }
}

fn prey(team: Team, position: (i32, i32), orientation: Orientation) -> Entity {
    Entity {
        kind: EntityKind::Prey,
        ..predator(team, position, orientation)
    }
}

fn frozen_multi() -> GridConfig {
    GridConfig {
        prey_move: false,
        ..GridConfig::multi_team()
    }
}

#[test]
fn catching_own_prey_pays_one_and_removes_it() {
    let ents = vec![
        predator(Team::Red, (5, 5), Orientation::Up),
        prey(Team::Red, (4, 5), Orientation::Left),
        prey(Team::Green, (9, 9), Orientation::Left),
    ];
    let mut w = GridWorld::from_entities(frozen_multi(), ents, vec![0]).unwrap();
    let r = w.step(&[PredatorAction::Catch], &mut rng(0)).unwrap();
    assert_eq!(r[0].reward, REWARD_CATCH_OWN);
    assert_eq!(r[0].info.catch, Some(CatchOutcome::OwnPrey));
    assert!(!w.entities()[1].alive);
    assert_eq!(w.occupant((4, 5)), None);
    // Red prey exhausted first: red wins.
    assert_eq!(w.outcome(), Some(MatchOutcome::Win(Team::Red)));
    assert!(r[0].terminal && r[0].done);
}

#[test]
fn catching_opponent_prey_costs_one() {
    let ents = vec![
        predator(Team::Red, (5, 5), Orientation::Right),
        prey(Team::Red, (0, 0), Orientation::Left),
        prey(Team::Green, (5, 6), Orientation::Left),
        prey(Team::Green, (9, 9), Orientation::Left),
    ];
    let mut w = GridWorld::from_entities(frozen_multi(), ents, vec![0]).unwrap();
    let r = w.step(&[PredatorAction::Catch], &mut rng(0)).unwrap();
    assert_eq!(r[0].reward, REWARD_CATCH_OPPONENT);
    assert_eq!(r[0].info.catch, Some(CatchOutcome::OpponentPrey));
    assert!(!w.is_done());
}

#[test]
fn failed_catch_hold_and_moves() {
    let ents = vec![
        predator(Team::Red, (5, 5), Orientation::Up),
        prey(Team::Red, (0, 0), Orientation::Left),
        prey(Team::Green, (11, 11), Orientation::Left),
    ];
    let mut w = GridWorld::from_entities(frozen_multi(), ents, vec![0]).unwrap();
    let mut r = rng(0);
    assert_eq!(w.step(&[PredatorAction::Catch], &mut r).unwrap()[0].reward, REWARD_FAILED_CATCH);
    assert_eq!(w.step(&[PredatorAction::Hold], &mut r).unwrap()[0].reward, REWARD_HOLD);
    assert_eq!(w.step(&[PredatorAction::Forward], &mut r).unwrap()[0].reward, REWARD_OTHER);
    assert_eq!(w.entities()[0].position, (4, 5));
    assert_eq!(w.step(&[PredatorAction::RotateLeft], &mut r).unwrap()[0].reward, REWARD_OTHER);
    assert_eq!(w.entities()[0].orientation, Orientation::Left);
    assert_eq!(w.step(&[PredatorAction::RotateRight], &mut r).unwrap()[0].reward, REWARD_OTHER);
    assert_eq!(w.entities()[0].orientation, Orientation::Up);
}

#[test]
fn contended_cell_goes_to_higher_priority() {
    let ents = vec![
        predator(Team::Red, (5, 4), Orientation::Right),
        predator(Team::Green, (5, 6), Orientation::Left),
        prey(Team::Red, (0, 0), Orientation::Left),
        prey(Team::Green, (11, 11), Orientation::Left),
    ];
    for (priority, winner) in [(vec![1, 0], 1), (vec![0, 1], 0)] {
        let mut w = GridWorld::from_entities(frozen_multi(), ents.clone(), priority).unwrap();
        w.step(&[PredatorAction::Forward, PredatorAction::Forward], &mut rng(0)).unwrap();
        assert_eq!(w.occupant((5, 5)), Some(winner));
        let loser = 1 - winner;
        assert_eq!(w.entities()[loser].position, ents[loser].position);
    }
}

#[test]
fn capture_by_first_predator_makes_second_catch_fail() {
    let ents = vec![
        predator(Team::Red, (5, 4), Orientation::Right),
        predator(Team::Green, (5, 6), Orientation::Left),
        prey(Team::Red, (5, 5), Orientation::Up),
        prey(Team::Red, (0, 0), Orientation::Up),
        prey(Team::Green, (11, 11), Orientation::Left),
    ];
    let mut w = GridWorld::from_entities(frozen_multi(), ents, vec![1, 0]).unwrap();
    let r = w.step(&[PredatorAction::Catch, PredatorAction::Catch], &mut rng(0)).unwrap();
    assert_eq!(r[1].reward, REWARD_CATCH_OPPONENT);
    assert_eq!(r[0].reward, REWARD_FAILED_CATCH);
}

#[test]
fn simultaneous_exhaustion_is_a_draw() {
    let ents = vec![
        predator(Team::Red, (5, 4), Orientation::Right),
        predator(Team::Green, (2, 2), Orientation::Down),
        prey(Team::Red, (5, 5), Orientation::Up),
        prey(Team::Green, (3, 2), Orientation::Up),
    ];
    let mut w = GridWorld::from_entities(frozen_multi(), ents, vec![0, 1]).unwrap();
    w.step(&[PredatorAction::Catch, PredatorAction::Catch], &mut rng(0)).unwrap();
    assert_eq!(w.outcome(), Some(MatchOutcome::Draw));
}

#[test]
fn facing_the_wall_reads_wall_in_front() {
    let ents = vec![
        predator(Team::Red, (0, 5), Orientation::Up),
        prey(Team::Red, (9, 9), Orientation::Left),
    ];
    let w = GridWorld::from_entities(frozen_multi(), ents, vec![0]).unwrap();
    let obs = w.observe(0).unwrap();
    for cell in 0..6 {
        assert_eq!(&obs[3 * cell..3 * cell + 3], &[CODE_WALL, 0.0, 0.0]);
    }
    // The predator itself sits at the back-centre cell.
    assert_eq!(&obs[21..24], &[CODE_PREDATOR, 1.0, 0.0]);
}

#[test]
fn prey_directly_ahead_is_the_centre_cell() {
    let ents = vec![
        predator(Team::Green, (5, 5), Orientation::Left),
        prey(Team::Green, (5, 4), Orientation::Down),
    ];
    let w = GridWorld::from_entities(frozen_multi(), ents, vec![0]).unwrap();
    let obs = w.observe(0).unwrap();
    assert_eq!(&obs[12..15], &[CODE_PREY, 2.0, 3.0]);
}

#[test]
fn rotation_moves_the_window_hand_fixture() {
    let ents = vec![
        predator(Team::Red, (5, 5), Orientation::Up),
        predator(Team::Green, (5, 6), Orientation::Down),
        prey(Team::Red, (3, 5), Orientation::Left),
        prey(Team::Green, (6, 5), Orientation::Up),
    ];
    let mut w = GridWorld::from_entities(frozen_multi(), ents, vec![0, 1]).unwrap();
    let v = [0.0, 0.0, 0.0];
    #[rustfmt::skip]
    let facing_up: Vec<f64> = [
        v, [3.0, 1.0, 4.0], v,
        v, v, v,
        v, [2.0, 1.0, 0.0], [2.0, 2.0, 3.0],
    ].concat();
    assert_eq!(w.observe(0).unwrap(), facing_up);
    w.step(&[PredatorAction::RotateRight, PredatorAction::Hold], &mut rng(0)).unwrap();
    #[rustfmt::skip]
    let facing_right: Vec<f64> = [
        v, v, v,
        v, [2.0, 2.0, 3.0], v,
        v, [2.0, 1.0, 0.0], [3.0, 2.0, 1.0],
    ].concat();
    assert_eq!(w.observe(0).unwrap(), facing_right);
}

#[test]
fn orientation_channel_is_viewer_independent() {
    let ents = vec![
        predator(Team::Red, (5, 3), Orientation::Right),
        predator(Team::Green, (5, 7), Orientation::Left),
        prey(Team::Red, (5, 5), Orientation::Down),
    ];
    let w = GridWorld::from_entities(frozen_multi(), ents, vec![0, 1]).unwrap();
    let a = w.observe(0).unwrap();
    let b = w.observe(1).unwrap();
    // Prey is two cells ahead of both: farthest row, centre column.
    assert_eq!(&a[3..6], &[CODE_PREY, 1.0, 3.0]);
    assert_eq!(&a[3..6], &b[3..6]);
}

#[test]
fn observe_errors() {
    let ents = vec![
        predator(Team::Red, (5, 5), Orientation::Up),
        prey(Team::Red, (0, 0), Orientation::Left),
    ];
    let w = GridWorld::from_entities(frozen_multi(), ents, vec![0]).unwrap();
    assert!(matches!(w.observe(7), Err(Error::UnknownAgent(7))));
    assert!(matches!(w.observe(1), Err(Error::UnknownAgent(1))));
    let mut w2 = w.clone();
    let mut map = BTreeMap::new();
    map.insert(3, PredatorAction::Hold);
    assert!(matches!(w2.step_map(&map, &mut rng(0)), Err(Error::UnknownAgent(3))));
}

#[test]
fn prey_policy_frequencies() {
    let mut r = rng(21);
    let mut counts = [0usize; 5];
    let n = 100_000;
    for _ in 0..n {
        counts[prey_policy(&mut r).index()] += 1;
    }
    let f = |a: PredatorAction| counts[a.index()] as f64 / n as f64;
    assert!((f(PredatorAction::Hold) - 0.10).abs() < 0.01);
    assert!((f(PredatorAction::RotateLeft) - 0.25).abs() < 0.01);
    assert!((f(PredatorAction::RotateRight) - 0.25).abs() < 0.01);
    assert!((f(PredatorAction::Forward) - 0.40).abs() < 0.01);
    assert_eq!(counts[PredatorAction::Catch.index()], 0);
    assert!((PREY_PROBS.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
    let a: Vec<_> = (0..50).map(|_| prey_policy(&mut rng(3))).collect();
    let b: Vec<_> = (0..50).map(|_| prey_policy(&mut rng(3))).collect();
    assert_eq!(a, b);
}

#[test]
fn resets_are_balanced_and_exclusive() {
    let mut r = rng(22);
    let mut w = GridWorld::new(GridConfig::multi_team());
    for _ in 0..1000 {
        w.reset(&mut r);
        assert!(w.invariants_hold());
        for team in [Team::Red, Team::Green] {
            let preds = w
                .entities()
                .iter()
                .filter(|e| e.kind == EntityKind::Predator && e.team == team)
                .count();
            assert_eq!(preds, 4);
            assert_eq!(w.prey_remaining(team), 2);
        }
        let mut p = w.priority().to_vec();
        p.sort_unstable();
        assert_eq!(p, (0..8).collect::<Vec<_>>());
    }
    let mut a = GridWorld::new(GridConfig::multi_team());
    let mut b = GridWorld::new(GridConfig::multi_team());
    a.reset(&mut rng(5));
    b.reset(&mut rng(5));
    assert_eq!(a.entities(), b.entities());
    assert_eq!(a.priority(), b.priority());
}

#[test]
fn random_episodes_respect_invariants_and_step_limit() {
    let mut r = rng(23);
    let mut w = GridWorld::new(GridConfig::multi_team());
    for _ in 0..20 {
        w.reset(&mut r);
        let mut caught = [0usize; 2];
        while !w.is_done() {
            let acts: Vec<PredatorAction> = (0..8).map(|_| PredatorAction::ALL[rand::Rng::random_range(&mut r, 0..5)]).collect();
            let res = w.step(&acts, &mut r).unwrap();
            assert!(w.invariants_hold());
            for (id, s) in res.iter().enumerate() {
                if s.info.catch == Some(CatchOutcome::OwnPrey) {
                    caught[id / 4] += 1;
                }
            }
        }
        assert!(w.step_count() <= 200);
        // A team can catch at most the prey assigned to it.
        assert!(caught.iter().all(|&c| c <= 2));
    }
}

#[test]
fn stepping_a_finished_episode_fails() {
    let mut w = GridWorld::new(GridConfig::multi_team());
    assert!(matches!(w.step(&[PredatorAction::Hold; 8], &mut rng(0)), Err(Error::EpisodeDone)));
}
