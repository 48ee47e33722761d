use serde::{Deserialize, Serialize};

use crate::agent::Transition;
use crate::nn::{mse_grad, Activation, AdamConfig, Network};
use crate::rng::{self, Rng, Stream};
use crate::{Error, Result};

/// What the estimator sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Plain RND over the state.
    State,
    /// sars-RND over `(s, one-hot(a), scaled r, s')`.
    Transition,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::State => "rnd",
            EstimatorKind::Transition => "sars_rnd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub hidden: usize,
    pub encoder_size: usize,
    pub learning_rate: f64,
    /// Multiplier on the reward before it enters a sars-RND input.
    pub reward_scale: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            hidden: 256,
            encoder_size: 1024,
            learning_rate: 1e-4,
            reward_scale: 0.1,
        }
    }
}

/// A frozen random target network and a predictor trained to imitate it.
/// Uncertainty is the mean squared gap between their encodings.
#[derive(Debug, Clone)]
pub struct RndEstimator {
    kind: EstimatorKind,
    obs_dim: usize,
    n_actions: usize,
    reward_scale: f64,
    target: Network,
    predictor: Network,
}

impl RndEstimator {
    pub fn new(
        kind: EstimatorKind,
        obs_dim: usize,
        n_actions: usize,
        cfg: &EstimatorConfig,
        target_rng: &mut Rng,
        predictor_rng: &mut Rng,
    ) -> Result<Self> {
        let input = match kind {
            EstimatorKind::State => obs_dim,
            EstimatorKind::Transition => 2 * obs_dim + n_actions + 1,
        };
        let sizes = [input, cfg.hidden, cfg.encoder_size];
        let adam = AdamConfig::new(cfg.learning_rate);
        Ok(Self {
            kind,
            obs_dim,
            n_actions,
            reward_scale: cfg.reward_scale,
            target: Network::mlp(&sizes, Activation::Relu, None, adam, target_rng)?,
            predictor: Network::mlp(&sizes, Activation::Relu, None, adam, predictor_rng)?,
        })
    }

    /// Estimator for agent `agent` of a run. Every agent's target network comes
    /// from the same stream, so raw uncertainties are comparable across agents;
    /// predictors are seeded per agent.
    pub fn for_agent(
        kind: EstimatorKind,
        obs_dim: usize,
        n_actions: usize,
        cfg: &EstimatorConfig,
        seed: u64,
        agent: u64,
    ) -> Result<Self> {
        let mut t = rng::stream(seed, Stream::EstimatorTarget, kind as u64);
        let mut p = rng::stream(seed, Stream::EstimatorPredictor, agent);
        Self::new(kind, obs_dim, n_actions, cfg, &mut t, &mut p)
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn input_size(&self) -> usize {
        self.target.input_size()
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    pub fn predictor(&self) -> &Network {
        &self.predictor
    }

    pub fn predictor_mut(&mut self) -> &mut Network {
        &mut self.predictor
    }

    /// Builds the estimator input for one interaction.
    pub fn encode(&self, t: &Transition) -> Result<Vec<f64>> {
        if t.s.len() != self.obs_dim {
            return Err(Error::DimensionMismatch {
                expected: self.obs_dim,
                got: t.s.len(),
            });
        }
        Ok(match self.kind {
            EstimatorKind::State => t.s.clone(),
            EstimatorKind::Transition => {
                if t.a >= self.n_actions || t.s_next.len() != self.obs_dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.obs_dim,
                        got: t.s_next.len(),
                    });
                }
                let mut x = Vec::with_capacity(self.input_size());
                x.extend_from_slice(&t.s);
                x.extend((0..self.n_actions).map(|i| if i == t.a { 1.0 } else { 0.0 }));
                x.push(self.reward_scale * t.r);
                x.extend_from_slice(&t.s_next);
                x
            }
        })
    }

    /// Uncertainty on `x`; does not touch the estimator.
    pub fn estimate(&self, x: &[f64]) -> Result<f64> {
        let a = self.target.predict(x)?;
        let b = self.predictor.predict(x)?;
        Ok(mse(&a, &b))
    }

    /// [`estimate`](Self::estimate) over row-major `[n x input]`.
    pub fn estimate_batch(&self, x: &[f64], n: usize) -> Result<Vec<f64>> {
        const CHUNK: usize = 256;
        let d = self.input_size();
        let e = self.target.output_size();
        let mut out = Vec::with_capacity(n);
        for rows in x.chunks(CHUNK * d) {
            let m = rows.len() / d;
            let a = self.target.predict_batch(rows, m)?;
            let b = self.predictor.predict_batch(rows, m)?;
            out.extend(a.chunks_exact(e).zip(b.chunks_exact(e)).map(|(a, b)| mse(a, b)));
        }
        if out.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: x.len(),
            });
        }
        Ok(out)
    }

    /// Encodes and estimates a set of interactions.
    pub fn estimate_transitions(&self, ts: &[&Transition]) -> Result<Vec<f64>> {
        let mut x = Vec::with_capacity(ts.len() * self.input_size());
        for t in ts {
            x.extend(self.encode(t)?);
        }
        self.estimate_batch(&x, ts.len())
    }

    /// One Adam step of the predictor toward the target's encoding of `x`.
    ///
    /// Returns the loss before the step, which equals `estimate(x)` at call
    /// time, so a caller that needs both "estimate, then update" gets them from
    /// one forward pass.
    pub fn update(&mut self, x: &[f64]) -> Result<f64> {
        let goal = self.target.predict(x)?;
        let out = self.predictor.forward(x)?;
        let (loss, grad) = mse_grad(&out, &goal, None)?;
        let grads = self.predictor.backward(&grad)?;
        self.predictor.adam_step(&grads)?;
        Ok(loss)
    }
}

/// Same accumulation order as the training loss, so `update(x)` returns
/// exactly `estimate(x)`.
fn mse(target: &[f64], prediction: &[f64]) -> f64 {
    let n = target.len() as f64;
    let mut loss = 0.0;
    for (t, p) in target.iter().zip(prediction) {
        let e = p - t;
        loss += e * e / n;
    }
    loss
}
