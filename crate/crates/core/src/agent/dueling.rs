use rand::Rng;
use serde::{Deserialize, Serialize};

use super::replay::Transition;
use crate::nn::{Activation, AdamConfig, Dense, Layer, Network, per_cell_encoder};
use crate::{Error, Result};

/// Shared feature extractor in front of the value/advantage streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    /// Dense ReLU stack.
    Mlp { input: usize, hidden: Vec<usize> },
    /// Per-cell encoder (kernel size 1) through `channels`, flattened, then a
    /// dense ReLU stack.
    PerCell {
        cells: usize,
        channels: Vec<usize>,
        hidden: Vec<usize>,
    },
}

impl Architecture {
    pub fn input_size(&self) -> usize {
        match self {
            Architecture::Mlp { input, .. } => *input,
            Architecture::PerCell { cells, channels, .. } => cells * channels[0],
        }
    }

    /// Trunk layers and their output width.
    pub fn build_trunk<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<Layer>, usize) {
        let (mut layers, mut width, hidden) = match self {
            Architecture::Mlp { input, hidden } => (Vec::new(), *input, hidden),
            Architecture::PerCell {
                cells,
                channels,
                hidden,
            } => (
                per_cell_encoder(*cells, channels, Activation::Relu, rng),
                cells * channels.last().copied().unwrap_or(0),
                hidden,
            ),
        };
        for &h in hidden {
            layers.push(Layer::Dense(Dense::he_uniform(width, h, rng)));
            layers.push(Layer::Activation {
                kind: Activation::Relu,
                size: h,
            });
            width = h;
        }
        (layers, width)
    }
}

/// `V + A - mean(A)`.
pub fn dueling_aggregate(value: f64, advantages: &[f64]) -> Vec<f64> {
    let mean = advantages.iter().sum::<f64>() / advantages.len() as f64;
    advantages.iter().map(|a| value + a - mean).collect()
}

/// Learning hyper-parameters of a dueling Q-network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetConfig {
    pub arch: Architecture,
    pub n_actions: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    /// Minibatch size; external batches are consumed in chunks of this size.
    pub batch_size: usize,
    /// Online-to-target hard copy period, in training steps.
    pub update_step_period: u64,
}

/// Dueling Q-network with `heads` independent value/advantage stream pairs on
/// a shared trunk, plus a hard-copied target network.
///
/// The streams are stored as one dense layer whose output is laid out per head
/// as `[V, A_0, .., A_{n-1}]`. Rows never share parameters, so this is the same
/// function as separate value and advantage layers.
#[derive(Debug, Clone)]
pub struct DuelingQNet {
    online: Network,
    target: Network,
    n_actions: usize,
    heads: usize,
    gamma: f64,
    batch_size: usize,
    update_period: u64,
    train_steps: u64,
}

impl DuelingQNet {
    pub fn new<R: Rng + ?Sized>(cfg: &QNetConfig, heads: usize, rng: &mut R) -> Result<Self> {
        if cfg.n_actions == 0 || heads == 0 || cfg.batch_size == 0 || cfg.update_step_period == 0 {
            return Err(Error::Config("q-network sizes and periods must be positive".into()));
        }
        if !(0.0..=1.0).contains(&cfg.gamma) {
            return Err(Error::Config(format!("gamma {} outside [0, 1]", cfg.gamma)));
        }
        let (mut layers, width) = cfg.arch.build_trunk(rng);
        layers.push(Layer::Dense(Dense::he_uniform(width, heads * (1 + cfg.n_actions), rng)));
        let online = Network::new(layers, AdamConfig::new(cfg.learning_rate))?;
        let target = online.clone();
        Ok(Self {
            online,
            target,
            n_actions: cfg.n_actions,
            heads,
            gamma: cfg.gamma,
            batch_size: cfg.batch_size,
            update_period: cfg.update_step_period,
            train_steps: 0,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn input_size(&self) -> usize {
        self.online.input_size()
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn online(&self) -> &Network {
        &self.online
    }

    /// Direct parameter access; the target is left alone.
    pub fn online_mut(&mut self) -> &mut Network {
        &mut self.online
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    pub fn sync_target(&mut self) {
        self.target.copy_parameters_from(&self.online).expect("online and target share a topology");
    }

    /// Replaces both networks with `net`, e.g. a loaded checkpoint.
    pub fn load_parameters(&mut self, net: &Network) -> Result<()> {
        self.online.copy_parameters_from(net)?;
        self.sync_target();
        Ok(())
    }

    fn stride(&self) -> usize {
        1 + self.n_actions
    }

    /// Aggregated Q-values for every sample and head: `[batch][head][action]`
    /// flattened.
    fn aggregate_all(&self, raw: &[f64]) -> Vec<f64> {
        let s = self.stride();
        raw.chunks_exact(s)
            .flat_map(|block| dueling_aggregate(block[0], &block[1..]))
            .collect()
    }

    /// Q-values of head 0.
    pub fn q_values(&self, s: &[f64]) -> Result<Vec<f64>> {
        let raw = self.online.predict(s)?;
        Ok(dueling_aggregate(raw[0], &raw[1..self.stride()]))
    }

    /// Q-values of every head.
    pub fn head_q_values(&self, s: &[f64]) -> Result<Vec<Vec<f64>>> {
        let raw = self.online.predict(s)?;
        Ok(self.aggregate_all(&raw).chunks_exact(self.n_actions).map(<[f64]>::to_vec).collect())
    }

    /// Raw `(V, A)` of head 0, before aggregation.
    pub fn streams(&self, s: &[f64]) -> Result<(f64, Vec<f64>)> {
        let raw = self.online.predict(s)?;
        Ok((raw[0], raw[1..self.stride()].to_vec()))
    }

    fn stack<'a>(&self, rows: impl Iterator<Item = &'a [f64]>, n: usize) -> Result<Vec<f64>> {
        let d = self.input_size();
        let mut x = Vec::with_capacity(n * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                });
            }
            x.extend_from_slice(r);
        }
        Ok(x)
    }

    /// Bootstrapped regression targets, one per sample and head.
    fn targets(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        let x_next = self.stack(batch.iter().map(|t| t.s_next.as_slice()), batch.len())?;
        let q_next = self.aggregate_all(&self.target.predict_batch(&x_next, batch.len())?);
        let mut y = Vec::with_capacity(batch.len() * self.heads);
        for (i, t) in batch.iter().enumerate() {
            for h in 0..self.heads {
                let off = (i * self.heads + h) * self.n_actions;
                let best = q_next[off..off + self.n_actions].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let bootstrap = if t.done { 0.0 } else { self.gamma * best };
                y.push(t.r + bootstrap);
            }
        }
        Ok(y)
    }

    /// Signed TD error of head 0: `r + γ(1-done) max_a Q_target(s',a) - Q(s,a)`.
    pub fn td_error(&self, t: &Transition) -> Result<f64> {
        Ok(self.td_errors(&[t])?[0])
    }

    /// Batched [`td_error`](Self::td_error).
    pub fn td_errors(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        const CHUNK: usize = 256;
        let mut out = Vec::with_capacity(batch.len());
        for chunk in batch.chunks(CHUNK) {
            let y = self.targets(chunk)?;
            let x = self.stack(chunk.iter().map(|t| t.s.as_slice()), chunk.len())?;
            let q = self.aggregate_all(&self.online.predict_batch(&x, chunk.len())?);
            for (i, t) in chunk.iter().enumerate() {
                self.check_action(t.a)?;
                out.push(y[i * self.heads] - q[i * self.heads * self.n_actions + t.a]);
            }
        }
        Ok(out)
    }

    fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.n_actions {
            return Err(Error::DimensionMismatch {
                expected: self.n_actions,
                got: a,
            });
        }
        Ok(())
    }

    /// One Adam step on the masked squared TD error averaged over samples and
    /// heads. Returns the loss before the step.
    fn fit(&mut self, batch: &[&Transition]) -> Result<f64> {
        let y = self.targets(batch)?;
        let x = self.stack(batch.iter().map(|t| t.s.as_slice()), batch.len())?;
        let raw = self.online.forward_batch(&x, batch.len())?;
        let (s, na, heads) = (self.stride(), self.n_actions, self.heads);
        let n = (batch.len() * heads) as f64;
        let mut grad = vec![0.0; raw.len()];
        let mut loss = 0.0;
        for (i, t) in batch.iter().enumerate() {
            self.check_action(t.a)?;
            for h in 0..heads {
                let off = (i * heads + h) * s;
                let q = dueling_aggregate(raw[off], &raw[off + 1..off + s])[t.a];
                let e = q - y[i * heads + h];
                loss += e * e / n;
                let g = 2.0 * e / n;
                // dQ_a/dV = 1, dQ_a/dA_j = [j == a] - 1/|A|.
                grad[off] = g;
                for j in 0..na {
                    let ind = if j == t.a { 1.0 } else { 0.0 };
                    grad[off + 1 + j] = g * (ind - 1.0 / na as f64);
                }
            }
        }
        let grads = self.online.backward(&grad)?;
        self.online.adam_step(&grads)?;
        Ok(loss)
    }

    /// One training step on the agent's own minibatch; hard-copies the online
    /// network into the target every `update_step_period` steps.
    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBuffer(0));
        }
        let loss = self.fit(batch)?;
        self.train_steps += 1;
        if self.train_steps.is_multiple_of(self.update_period) {
            self.sync_target();
        }
        Ok(loss)
    }

    /// Trains on an externally supplied batch in one pass of
    /// `ceil(len / batch_size)` minibatches. The target-copy counter does not
    /// move. Returns the mean minibatch loss, 0 for an empty batch.
    pub fn train_on_external(&mut self, batch: &[&Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        let mut k = 0;
        for chunk in batch.chunks(self.batch_size) {
            total += self.fit(chunk)?;
            k += 1;
        }
        Ok(total / k as f64)
    }
}
