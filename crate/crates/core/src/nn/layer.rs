use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// C (m x n) = A (m x k) * B (k x n) + beta * C, with explicit row/column strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(m * k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k * n == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() >= m * n);
    // SAFETY: the asserts above bound every index dgemm touches inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Up to this many rows, a direct matrix-vector loop beats packing the
/// weights for a blocked GEMM.
const SMALL_ROWS: usize = 4;

/// Dot product with four independent accumulators so the loop vectorises.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a * x`.
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, &x)| *y += a * x);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: &mut [f64]) {
        match self {
            Activation::Relu => x.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Tanh => x.iter_mut().for_each(|v| *v = v.tanh()),
        }
    }

    /// Gradient through the activation, expressed with the activation's output `y`.
    fn backward(self, y: &[f64], dy: &[f64]) -> Vec<f64> {
        match self {
            Activation::Relu => y
                .iter()
                .zip(dy)
                .map(|(&y, &g)| if y > 0.0 { g } else { 0.0 })
                .collect(),
            Activation::Tanh => y.iter().zip(dy).map(|(&y, &g)| g * (1.0 - y * y)).collect(),
        }
    }
}

/// Fully connected layer, `weights` row-major `[output x input]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub(crate) input: usize,
    pub(crate) output: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            input,
            output,
            weights: vec![0.0; input * output],
            bias: vec![0.0; output],
        }
    }

    /// He-style uniform fan-in initialization: weights in ±sqrt(6/fan_in),
    /// biases in ±1/sqrt(fan_in).
    pub fn he_uniform<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let wb = (6.0 / input as f64).sqrt();
        let bb = 1.0 / (input as f64).sqrt();
        let weights = (0..input * output).map(|_| rng.random_range(-wb..wb)).collect();
        let bias = (0..output).map(|_| rng.random_range(-bb..bb)).collect();
        Self {
            input,
            output,
            weights,
            bias,
        }
    }

    pub fn from_parts(input: usize, output: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != input * output {
            return Err(Error::DimensionMismatch {
                expected: input * output,
                got: weights.len(),
            });
        }
        if bias.len() != output {
            return Err(Error::DimensionMismatch {
                expected: output,
                got: bias.len(),
            });
        }
        Ok(Self {
            input,
            output,
            weights,
            bias,
        })
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn forward(&self, x: &[f64], rows: usize) -> Vec<f64> {
        if rows <= SMALL_ROWS {
            let mut y = Vec::with_capacity(rows * self.output);
            for xr in x.chunks_exact(self.input).take(rows) {
                for (w, b) in self.weights.chunks_exact(self.input).zip(&self.bias) {
                    y.push(b + dot(w, xr));
                }
            }
            return y;
        }
        let mut y = Vec::with_capacity(rows * self.output);
        for _ in 0..rows {
            y.extend_from_slice(&self.bias);
        }
        gemm(
            rows,
            self.input,
            self.output,
            x,
            (self.input, 1),
            &self.weights,
            (1, self.input),
            1.0,
            &mut y,
        );
        y
    }

    fn backward(&self, x: &[f64], dy: &[f64], rows: usize, need_dx: bool) -> (ParamGrad, Option<Vec<f64>>) {
        let mut db = vec![0.0; self.output];
        for row in dy.chunks_exact(self.output) {
            db.iter_mut().zip(row).for_each(|(d, &g)| *d += g);
        }
        if rows <= SMALL_ROWS {
            let mut dw = vec![0.0; self.weights.len()];
            let mut dx = need_dx.then(|| vec![0.0; rows * self.input]);
            for r in 0..rows {
                let xr = &x[r * self.input..(r + 1) * self.input];
                let dyr = &dy[r * self.output..(r + 1) * self.output];
                for ((dw_row, w_row), &g) in dw.chunks_exact_mut(self.input).zip(self.weights.chunks_exact(self.input)).zip(dyr) {
                    if g == 0.0 {
                        continue;
                    }
                    axpy(g, xr, dw_row);
                    if let Some(dx) = dx.as_mut() {
                        axpy(g, w_row, &mut dx[r * self.input..(r + 1) * self.input]);
                    }
                }
            }
            return (
                ParamGrad {
                    weights: dw,
                    bias: db,
                },
                dx,
            );
        }
        let mut dw = vec![0.0; self.weights.len()];
        gemm(
            self.output,
            rows,
            self.input,
            dy,
            (1, self.output),
            x,
            (self.input, 1),
            0.0,
            &mut dw,
        );
        let dx = need_dx.then(|| {
            let mut dx = vec![0.0; rows * self.input];
            gemm(
                rows,
                self.output,
                self.input,
                dy,
                (self.output, 1),
                &self.weights,
                (self.input, 1),
                0.0,
                &mut dx,
            );
            dx
        });
        (
            ParamGrad {
                weights: dw,
                bias: db,
            },
            dx,
        )
    }
}

/// The same linear map applied independently to each of `cells` contiguous
/// channel groups (a kernel-size-1 convolution). Input layout is cell-major:
/// cell `i` occupies `[i*map.input, (i+1)*map.input)`; output block `i` occupies
/// `[i*map.output, (i+1)*map.output)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerCellLinear {
    pub(crate) cells: usize,
    pub(crate) map: Dense,
}

impl PerCellLinear {
    pub fn new(cells: usize, map: Dense) -> Self {
        Self { cells, map }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn map(&self) -> &Dense {
        &self.map
    }

    pub fn map_mut(&mut self) -> &mut Dense {
        &mut self.map
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    PerCell(PerCellLinear),
    Activation { kind: Activation, size: usize },
}

/// Gradient (or any same-shaped quantity) for one parametrised layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ParamGrad {
    pub(crate) fn zeros_like(d: &Dense) -> Self {
        Self {
            weights: vec![0.0; d.weights.len()],
            bias: vec![0.0; d.bias.len()],
        }
    }
}

impl Layer {
    pub fn input_size(&self) -> usize {
        match self {
            Layer::Dense(d) => d.input,
            Layer::PerCell(p) => p.cells * p.map.input,
            Layer::Activation { size, .. } => *size,
        }
    }

    pub fn output_size(&self) -> usize {
        match self {
            Layer::Dense(d) => d.output,
            Layer::PerCell(p) => p.cells * p.map.output,
            Layer::Activation { size, .. } => *size,
        }
    }

    pub fn dense(&self) -> Option<&Dense> {
        match self {
            Layer::Dense(d) => Some(d),
            Layer::PerCell(p) => Some(&p.map),
            Layer::Activation { .. } => None,
        }
    }

    pub fn dense_mut(&mut self) -> Option<&mut Dense> {
        match self {
            Layer::Dense(d) => Some(d),
            Layer::PerCell(p) => Some(&mut p.map),
            Layer::Activation { .. } => None,
        }
    }

    pub(crate) fn forward(&self, x: &[f64], batch: usize) -> Vec<f64> {
        match self {
            Layer::Dense(d) => d.forward(x, batch),
            Layer::PerCell(p) => p.map.forward(x, batch * p.cells),
            Layer::Activation { kind, .. } => {
                let mut y = x.to_vec();
                kind.apply(&mut y);
                y
            }
        }
    }

    /// `x` is this layer's cached input, `y` its cached output.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        y: &[f64],
        dy: &[f64],
        batch: usize,
        need_dx: bool,
    ) -> (Option<ParamGrad>, Option<Vec<f64>>) {
        match self {
            Layer::Dense(d) => {
                let (g, dx) = d.backward(x, dy, batch, need_dx);
                (Some(g), dx)
            }
            Layer::PerCell(p) => {
                let (g, dx) = p.map.backward(x, dy, batch * p.cells, need_dx);
                (Some(g), dx)
            }
            Layer::Activation { kind, .. } => (None, need_dx.then(|| kind.backward(y, dy))),
        }
    }

    pub(crate) fn same_topology(&self, other: &Layer) -> bool {
        match (self, other) {
            (Layer::Dense(a), Layer::Dense(b)) => a.input == b.input && a.output == b.output,
            (Layer::PerCell(a), Layer::PerCell(b)) => {
                a.cells == b.cells && a.map.input == b.map.input && a.map.output == b.map.output
            }
            (Layer::Activation { kind: a, size: sa }, Layer::Activation { kind: b, size: sb }) => {
                a == b && sa == sb
            }
            _ => false,
        }
    }
}
