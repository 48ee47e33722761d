//! Binary parameter checkpoints.
//!
//! Layout (all integers u32 little-endian, all reals f64 little-endian):
//!
//! ```text
//! "EFNN" version=1 n_layers lr beta1 beta2 epsilon
//! per layer: tag:u8  (0 dense, 1 per-cell, 2 relu, 3 tanh)
//!   dense:    in out weights[out*in] bias[out]
//!   per-cell: cells in out weights[out*in] bias[out]
//!   relu/tanh: size
//! ```
//!
//! Reals are stored as raw IEEE-754 bits, so a save/load cycle is bit-exact.
//! Optimizer moments are not stored; a loaded network starts a fresh Adam state.

use std::io::{Read, Write};

use super::layer::{Activation, Dense, Layer, PerCellLinear};
use super::network::{AdamConfig, Network};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"EFNN";
const VERSION: u32 = 1;

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64s<W: Write>(w: &mut W, xs: &[f64]) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}

fn put_dense<W: Write>(w: &mut W, d: &Dense) -> Result<()> {
    put_u32(w, d.input)?;
    put_u32(w, d.output)?;
    put_f64s(w, &d.weights)?;
    put_f64s(w, &d.bias)
}

fn get_dense<R: Read>(r: &mut R) -> Result<Dense> {
    let input = get_u32(r)?;
    let output = get_u32(r)?;
    let weights = get_f64s(r, input * output)?;
    let bias = get_f64s(r, output)?;
    Dense::from_parts(input, output, weights, bias)
}

pub fn write_network<W: Write>(w: &mut W, net: &Network) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION as usize)?;
    put_u32(w, net.layers.len())?;
    let adam = net.adam_config();
    put_f64s(w, &[adam.learning_rate, adam.betas.0, adam.betas.1, adam.epsilon])?;
    for layer in &net.layers {
        match layer {
            Layer::Dense(d) => {
                w.write_all(&[0])?;
                put_dense(w, d)?;
            }
            Layer::PerCell(p) => {
                w.write_all(&[1])?;
                put_u32(w, p.cells)?;
                put_dense(w, &p.map)?;
            }
            Layer::Activation { kind, size } => {
                w.write_all(&[match kind {
                    Activation::Relu => 2,
                    Activation::Tanh => 3,
                }])?;
                put_u32(w, *size)?;
            }
        }
    }
    Ok(())
}

pub fn read_network<R: Read>(r: &mut R) -> Result<Network> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = get_u32(r)?;
    if version != VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = get_u32(r)?;
    let adam = AdamConfig {
        learning_rate: get_f64(r)?,
        betas: (get_f64(r)?, get_f64(r)?),
        epsilon: get_f64(r)?,
    };
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        layers.push(match tag[0] {
            0 => Layer::Dense(get_dense(r)?),
            1 => {
                let cells = get_u32(r)?;
                Layer::PerCell(PerCellLinear::new(cells, get_dense(r)?))
            }
            2 => Layer::Activation {
                kind: Activation::Relu,
                size: get_u32(r)?,
            },
            3 => Layer::Activation {
                kind: Activation::Tanh,
                size: get_u32(r)?,
            },
            t => return Err(Error::Checkpoint(format!("unknown layer tag {t}"))),
        });
    }
    Network::new(layers, adam)
}

pub fn to_bytes(net: &Network) -> Vec<u8> {
    let mut buf = Vec::new();
    write_network(&mut buf, net).expect("writing to a Vec cannot fail");
    buf
}

pub fn from_bytes(mut bytes: &[u8]) -> Result<Network> {
    let net = read_network(&mut bytes)?;
    if !bytes.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len())));
    }
    Ok(net)
}
