use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::{Activation, Dense, Layer, ParamGrad, PerCellLinear};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub betas: (f64, f64),
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            betas: (0.9, 0.999),
            epsilon: 1e-8,
        }
    }
}

/// Per-layer parameter gradients; `None` for parameter-free layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub(crate) layers: Vec<Option<ParamGrad>>,
}

impl Gradients {
    pub fn zeros_for(net: &Network) -> Self {
        Self {
            layers: net.layers.iter().map(|l| l.dense().map(ParamGrad::zeros_like)).collect(),
        }
    }

    pub fn layers(&self) -> &[Option<ParamGrad>] {
        &self.layers
    }

    /// Concatenation of every weight then bias tensor, layer by layer.
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flatten()
            .flat_map(|g| g.weights.iter().chain(&g.bias).copied())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .flatten()
            .all(|g| g.weights.iter().chain(&g.bias).all(|&v| v == 0.0))
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::TopologyMismatch("gradient layer count".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            match (a, b) {
                (Some(a), Some(b)) if a.weights.len() == b.weights.len() && a.bias.len() == b.bias.len() => {
                    a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
                    a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
                }
                (None, None) => {}
                _ => return Err(Error::TopologyMismatch("gradient shapes".into())),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Moments {
    first: ParamGrad,
    second: ParamGrad,
}

#[derive(Debug, Clone)]
struct ForwardCache {
    batch: usize,
    /// `activations[0]` is the input, `activations[k + 1]` the output of layer `k`.
    activations: Vec<Vec<f64>>,
}

/// Sequential stack of layers with its own Adam state.
///
/// A network is a single-writer object. `predict*` take `&self` and are safe to
/// call from several threads on a shared snapshot; `forward*` cache activations
/// for the next `backward*` call and therefore need `&mut self`.
#[derive(Debug, Clone)]
pub struct Network {
    pub(crate) layers: Vec<Layer>,
    adam: AdamConfig,
    moments: Vec<Option<Moments>>,
    step: u64,
    cache: Option<ForwardCache>,
}

impl Network {
    pub fn new(layers: Vec<Layer>, adam: AdamConfig) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("no layers".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].output_size() != pair[1].input_size() {
                return Err(Error::InvalidNetwork(format!(
                    "layer {k} outputs {} values but layer {} expects {}",
                    pair[0].output_size(),
                    k + 1,
                    pair[1].input_size()
                )));
            }
        }
        if !(adam.learning_rate > 0.0
            && adam.epsilon > 0.0
            && (0.0..1.0).contains(&adam.betas.0)
            && (0.0..1.0).contains(&adam.betas.1))
        {
            return Err(Error::InvalidNetwork(format!("bad Adam hyper-parameters {adam:?}")));
        }
        let moments = layers
            .iter()
            .map(|l| {
                l.dense().map(|d| Moments {
                    first: ParamGrad::zeros_like(d),
                    second: ParamGrad::zeros_like(d),
                })
            })
            .collect();
        Ok(Self {
            layers,
            adam,
            moments,
            step: 0,
            cache: None,
        })
    }

    /// Dense stack `sizes[0] -> sizes[1] -> ...` with `hidden` between layers and
    /// an optional activation after the last one.
    pub fn mlp<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Option<Activation>,
        adam: AdamConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidNetwork("an MLP needs at least two sizes".into()));
        }
        let mut layers = Vec::new();
        for (i, w) in sizes.windows(2).enumerate() {
            layers.push(Layer::Dense(Dense::he_uniform(w[0], w[1], rng)));
            let last = i + 2 == sizes.len();
            let act = if last { output } else { Some(hidden) };
            if let Some(kind) = act {
                layers.push(Layer::Activation { kind, size: w[1] });
            }
        }
        Self::new(layers, adam)
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size()
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].output_size()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access to parameters; drops any cached forward pass.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        self.cache = None;
        &mut self.layers
    }

    pub fn adam_config(&self) -> AdamConfig {
        self.adam
    }

    pub fn adam_steps(&self) -> u64 {
        self.step
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .filter_map(Layer::dense)
            .map(|d| d.weights.len() + d.bias.len())
            .sum()
    }

    /// All parameters in [`Gradients::flat`] order.
    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .filter_map(Layer::dense)
            .flat_map(|d| d.weights.iter().chain(&d.bias).copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.param_count();
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for d in self.layers_mut().iter_mut().filter_map(Layer::dense_mut) {
            d.weights.iter_mut().chain(d.bias.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64], batch: usize) -> Result<()> {
        let expected = self.input_size() * batch;
        if x.len() != expected || batch == 0 {
            return Err(Error::DimensionMismatch {
                expected,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Cache-free batched forward pass over row-major `[batch x input]`.
    pub fn predict_batch(&self, x: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.check_input(x, batch)?;
        let mut h = self.layers[0].forward(x, batch);
        for layer in &self.layers[1..] {
            match layer {
                Layer::Activation { kind, .. } => kind.apply(&mut h),
                _ => h = layer.forward(&h, batch),
            }
        }
        Ok(h)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict_batch(x, 1)
    }

    /// Batched forward pass that caches every activation for `backward`.
    pub fn forward_batch(&mut self, x: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.check_input(x, batch)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.forward(activations.last().unwrap(), batch);
            activations.push(next);
        }
        let out = activations.last().unwrap().clone();
        self.cache = Some(ForwardCache { batch, activations });
        Ok(out)
    }

    pub fn forward(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_batch(x, 1)
    }

    /// Backpropagates `grad_out` (dL/d output, `[batch x output]`) through the
    /// cached forward pass. Returns parameter gradients and dL/d input.
    pub fn backward_with_input(&self, grad_out: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let (g, dx) = self.backward_impl(grad_out, true)?;
        Ok((g, dx.unwrap()))
    }

    pub fn backward(&self, grad_out: &[f64]) -> Result<Gradients> {
        Ok(self.backward_impl(grad_out, false)?.0)
    }

    fn backward_impl(&self, grad_out: &[f64], need_input: bool) -> Result<(Gradients, Option<Vec<f64>>)> {
        let cache = self.cache.as_ref().ok_or(Error::NoForwardCache)?;
        let expected = cache.batch * self.output_size();
        if grad_out.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: grad_out.len(),
            });
        }
        let mut grads: Vec<Option<ParamGrad>> = vec![None; self.layers.len()];
        let mut dy = grad_out.to_vec();
        for k in (0..self.layers.len()).rev() {
            let need_dx = k > 0 || need_input;
            let (g, dx) = self.layers[k].backward(
                &cache.activations[k],
                &cache.activations[k + 1],
                &dy,
                cache.batch,
                need_dx,
            );
            grads[k] = g;
            match dx {
                Some(dx) => dy = dx,
                None => {
                    return Ok((Gradients { layers: grads }, None));
                }
            }
        }
        Ok((Gradients { layers: grads }, Some(dy)))
    }

    /// Mean-squared-error gradients for the cached single-sample forward pass.
    ///
    /// With `mask`, only the listed outputs enter the loss and `target` holds one
    /// value per masked index; the remaining outputs receive zero gradient.
    pub fn backward_mse(&self, target: &[f64], mask: Option<&[usize]>) -> Result<(f64, Gradients)> {
        let cache = self.cache.as_ref().ok_or(Error::NoForwardCache)?;
        let output = cache.activations.last().unwrap();
        let (loss, grad) = mse_grad(output, target, mask)?;
        Ok((loss, self.backward(&grad)?))
    }

    pub fn adam_step(&mut self, grads: &Gradients) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::TopologyMismatch("gradient layer count".into()));
        }
        for ((layer, g), m) in self.layers.iter().zip(&grads.layers).zip(&self.moments) {
            let ok = match (layer.dense(), g, m) {
                (Some(d), Some(g), Some(_)) => {
                    g.weights.len() == d.weights.len() && g.bias.len() == d.bias.len()
                }
                (None, None, None) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::TopologyMismatch("gradient shape".into()));
            }
        }
        self.step += 1;
        let AdamConfig {
            learning_rate: lr,
            betas: (b1, b2),
            epsilon: eps,
        } = self.adam;
        let t = self.step as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        // lr * (m / c1) / (sqrt(v / c2) + eps), folded to one sqrt and one
        // division per parameter.
        let step_size = lr / c1;
        let inv_sqrt_c2 = 1.0 / c2.sqrt();
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= step_size * *m / (v.sqrt() * inv_sqrt_c2 + eps);
            }
        };
        for ((layer, g), m) in self.layers.iter_mut().zip(&grads.layers).zip(&mut self.moments) {
            if let (Some(d), Some(g), Some(m)) = (layer.dense_mut(), g, m) {
                update(&mut d.weights, &g.weights, &mut m.first.weights, &mut m.second.weights);
                update(&mut d.bias, &g.bias, &mut m.first.bias, &mut m.second.bias);
            }
        }
        self.cache = None;
        Ok(())
    }

    /// First and second Adam moments, flattened in [`Gradients::flat`] order.
    pub fn adam_moments_flat(&self) -> (Vec<f64>, Vec<f64>) {
        let mut first = Vec::new();
        let mut second = Vec::new();
        for m in self.moments.iter().flatten() {
            first.extend(m.first.weights.iter().chain(&m.first.bias));
            second.extend(m.second.weights.iter().chain(&m.second.bias));
        }
        (first, second)
    }

    pub fn same_topology(&self, other: &Network) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.same_topology(b))
    }

    /// Copies parameters (not optimizer state) from `src`.
    pub fn copy_parameters_from(&mut self, src: &Network) -> Result<()> {
        copy_parameters(src, self)
    }
}

/// Hard copy of `src` parameters into `dst`. Adam moments and step counters stay.
pub fn copy_parameters(src: &Network, dst: &mut Network) -> Result<()> {
    if !src.same_topology(dst) {
        return Err(Error::TopologyMismatch(
            "copy_parameters requires identical layer stacks".into(),
        ));
    }
    for (s, d) in src.layers.iter().zip(dst.layers.iter_mut()) {
        if let (Some(s), Some(d)) = (s.dense(), d.dense_mut()) {
            d.weights.copy_from_slice(&s.weights);
            d.bias.copy_from_slice(&s.bias);
        }
    }
    dst.cache = None;
    Ok(())
}

/// Mean squared error and its gradient w.r.t. `output`.
pub fn mse_grad(output: &[f64], target: &[f64], mask: Option<&[usize]>) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; output.len()];
    let mut loss = 0.0;
    match mask {
        None => {
            if target.len() != output.len() {
                return Err(Error::DimensionMismatch {
                    expected: output.len(),
                    got: target.len(),
                });
            }
            let n = output.len() as f64;
            for i in 0..output.len() {
                let e = output[i] - target[i];
                loss += e * e / n;
                grad[i] = 2.0 * e / n;
            }
        }
        Some(idx) => {
            if target.len() != idx.len() {
                return Err(Error::DimensionMismatch {
                    expected: idx.len(),
                    got: target.len(),
                });
            }
            if idx.is_empty() {
                return Ok((0.0, grad));
            }
            let n = idx.len() as f64;
            for (&i, &t) in idx.iter().zip(target) {
                if i >= output.len() {
                    return Err(Error::DimensionMismatch {
                        expected: output.len(),
                        got: i + 1,
                    });
                }
                let e = output[i] - t;
                loss += e * e / n;
                grad[i] += 2.0 * e / n;
            }
        }
    }
    Ok((loss, grad))
}

/// Kernel-size-1 encoder: per-cell linear maps through `channels`
/// (e.g. `[3, 7, 15]`), `activation` after each stage, flattened output of
/// `cells * channels.last()` values.
pub fn per_cell_encoder<R: Rng + ?Sized>(
    cells: usize,
    channels: &[usize],
    activation: Activation,
    rng: &mut R,
) -> Vec<Layer> {
    let mut layers = Vec::new();
    for w in channels.windows(2) {
        layers.push(Layer::PerCell(PerCellLinear::new(cells, Dense::he_uniform(w[0], w[1], rng))));
        layers.push(Layer::Activation {
            kind: activation,
            size: cells * w[1],
        });
    }
    layers
}
