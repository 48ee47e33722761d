//! Cart-Pole balancing with the classic Euler-integrated dynamics.

use rand::Rng;

use super::StepResult;
use crate::{Error, Result};

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const HALF_POLE_LENGTH: f64 = 0.5;
pub const FORCE: f64 = 10.0;
pub const DT: f64 = 0.02;
pub const POSITION_LIMIT: f64 = 2.4;
pub const ANGLE_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const INIT_SPREAD: f64 = 0.05;
pub const DEFAULT_MAX_STEPS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CartAction {
    Left = 0,
    Right = 1,
}

impl TryFrom<usize> for CartAction {
    type Error = Error;

    fn try_from(a: usize) -> Result<Self> {
        match a {
            0 => Ok(CartAction::Left),
            1 => Ok(CartAction::Right),
            _ => Err(Error::DimensionMismatch { expected: 2, got: a + 1 }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleState {
    pub cart_position: f64,
    pub cart_velocity: f64,
    pub pole_angle: f64,
    pub pole_angular_velocity: f64,
    pub step_count: usize,
}

impl CartPoleState {
    pub fn upright() -> Self {
        Self {
            cart_position: 0.0,
            cart_velocity: 0.0,
            pole_angle: 0.0,
            pole_angular_velocity: 0.0,
            step_count: 0,
        }
    }

    pub fn observation(&self) -> Vec<f64> {
        vec![
            self.cart_position,
            self.cart_velocity,
            self.pole_angle,
            self.pole_angular_velocity,
        ]
    }

    pub fn out_of_bounds(&self) -> bool {
        self.cart_position.abs() > POSITION_LIMIT || self.pole_angle.abs() > ANGLE_LIMIT
    }
}

#[derive(Debug, Clone)]
pub struct CartPole {
    state: CartPoleState,
    max_steps: usize,
    done: bool,
}

impl CartPole {
    pub fn new(max_steps: usize) -> Self {
        Self {
            state: CartPoleState::upright(),
            max_steps,
            done: true,
        }
    }

    /// Starts an episode from an explicit state.
    pub fn with_state(state: CartPoleState, max_steps: usize) -> Self {
        Self {
            state,
            max_steps,
            done: false,
        }
    }

    pub fn state(&self) -> &CartPoleState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    /// Each state component uniform in ±0.05.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let mut u = || rng.random_range(-INIT_SPREAD..INIT_SPREAD);
        self.state = CartPoleState {
            cart_position: u(),
            cart_velocity: u(),
            pole_angle: u(),
            pole_angular_velocity: u(),
            step_count: 0,
        };
        self.done = false;
        self.state.observation()
    }

    pub fn step(&mut self, action: CartAction) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let s = &mut self.state;
        let force = match action {
            CartAction::Right => FORCE,
            CartAction::Left => -FORCE,
        };
        let total_mass = CART_MASS + POLE_MASS;
        let pole_mass_length = POLE_MASS * HALF_POLE_LENGTH;
        let (sin, cos) = s.pole_angle.sin_cos();
        let temp = (force + pole_mass_length * s.pole_angular_velocity.powi(2) * sin) / total_mass;
        let angular_acc = (GRAVITY * sin - cos * temp)
            / (HALF_POLE_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total_mass));
        let acc = temp - pole_mass_length * angular_acc * cos / total_mass;

        s.cart_position += DT * s.cart_velocity;
        s.cart_velocity += DT * acc;
        s.pole_angle += DT * s.pole_angular_velocity;
        s.pole_angular_velocity += DT * angular_acc;
        s.step_count += 1;

        let terminal = s.out_of_bounds();
        let truncated = !terminal && s.step_count >= self.max_steps;
        self.done = terminal || truncated;
        Ok(StepResult {
            next_observation: s.observation(),
            reward: 1.0,
            terminal,
            done: self.done,
            info: Default::default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent integration of the reference equations of motion.
    fn reference_step(s: [f64; 4], right: bool) -> [f64; 4] {
        let [x, xd, th, thd] = s;
        let f = if right { 10.0 } else { -10.0 };
        let mt = 1.1;
        let ml = 0.05;
        let tmp = (f + ml * thd * thd * th.sin()) / mt;
        let tha = (9.8 * th.sin() - th.cos() * tmp) / (0.5 * (4.0 / 3.0 - 0.1 * th.cos() * th.cos() / mt));
        let xa = tmp - ml * tha * th.cos() / mt;
        [x + 0.02 * xd, xd + 0.02 * xa, th + 0.02 * thd, thd + 0.02 * tha]
    }

    #[test]
    fn balanced_start_alternating_forces_survives_ten_steps() {
        let mut env = CartPole::with_state(CartPoleState::upright(), 400);
        let mut reference = [0.0; 4];
        let mut total = 0.0;
        for k in 0..10 {
            let right = k % 2 == 1;
            let r = env
                .step(if right { CartAction::Right } else { CartAction::Left })
                .unwrap();
            reference = reference_step(reference, right);
            total += r.reward;
            assert!(!r.done);
            for (a, b) in r.next_observation.iter().zip(reference) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(total, 10.0);
    }

    #[test]
    fn angle_past_threshold_terminates() {
        let mut s = CartPoleState::upright();
        s.pole_angle = ANGLE_LIMIT - 1e-4;
        s.pole_angular_velocity = 1.0;
        let mut env = CartPole::with_state(s, 400);
        let r = env.step(CartAction::Left).unwrap();
        assert!(r.done && r.terminal);
        assert_eq!(r.reward, 1.0);
        assert!(matches!(env.step(CartAction::Left), Err(Error::EpisodeDone)));
    }

    #[test]
    fn position_past_threshold_terminates() {
        let mut s = CartPoleState::upright();
        s.cart_position = POSITION_LIMIT;
        s.cart_velocity = 1.0;
        let mut env = CartPole::with_state(s, 400);
        assert!(env.step(CartAction::Right).unwrap().terminal);
    }

    #[test]
    fn max_steps_truncates_without_terminal_flag() {
        let mut env = CartPole::with_state(CartPoleState::upright(), 3);
        let mut last = None;
        for k in 0..3 {
            last = Some(env.step(if k % 2 == 0 { CartAction::Left } else { CartAction::Right }).unwrap());
        }
        let last = last.unwrap();
        assert!(last.done && !last.terminal);
    }

    #[test]
    fn seeded_episodes_are_identical() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut env = CartPole::new(400);
            let mut obs = vec![env.reset(&mut rng)];
            let mut k = 0;
            while !env.is_done() {
                let a = if k % 3 == 0 { CartAction::Left } else { CartAction::Right };
                obs.push(env.step(a).unwrap().next_observation);
                k += 1;
            }
            obs
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn reset_is_a_small_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut env = CartPole::new(400);
        for _ in 0..100 {
            assert!(env.reset(&mut rng).iter().all(|v| v.abs() <= INIT_SPREAD));
        }
    }
}
