//! Modified Latin hypercube (MLHS) draws for simulated integration.
//!
//! For every (individual, dimension) the `n_draws` uniforms are
//! `(i + u) / n_draws`, `i = 0..n_draws`, with one uniform shift `u`,
//! randomly permuted. Each individual gets its own ChaCha stream selected
//! from the master seed by the individual's key, so generation order and
//! thread count never change the values.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Dense (individual, draw, dimension) array, dimension fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawMatrix {
    n_individuals: usize,
    n_draws: usize,
    n_dims: usize,
    values: Vec<f64>,
    seed: u64,
}

impl DrawMatrix {
    pub fn n_individuals(&self) -> usize {
        self.n_individuals
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, individual: usize, draw: usize, dim: usize) -> f64 {
        self.values[(individual * self.n_draws + draw) * self.n_dims + dim]
    }

    /// All draws of one individual, `n_draws * n_dims` values.
    pub fn individual(&self, individual: usize) -> &[f64] {
        let len = self.n_draws * self.n_dims;
        &self.values[individual * len..(individual + 1) * len]
    }

    /// One draw of one individual, `n_dims` values.
    pub fn draw(&self, individual: usize, draw: usize) -> &[f64] {
        let start = (individual * self.n_draws + draw) * self.n_dims;
        &self.values[start..start + self.n_dims]
    }

    /// Debug dump with one row per value: `individual,draw,dim,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["individual", "draw", "dim", "value"])?;
        for i in 0..self.n_individuals {
            for r in 0..self.n_draws {
                for d in 0..self.n_dims {
                    w.write_record([
                        i.to_string(),
                        r.to_string(),
                        d.to_string(),
                        self.get(i, r, d).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Random stream for `key` under `seed`.
pub fn substream(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// Random stream for `key` within a named use of `seed`, so that different
/// consumers of one master seed never share values.
pub fn domain_substream(seed: u64, domain: u64, key: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(key);
    rng
}

const LARGEST_BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

fn mlhs_block(seed: u64, key: u64, n_draws: usize, n_dims: usize) -> Vec<f64> {
    let mut rng = substream(seed, key);
    let mut out = vec![0.0; n_draws * n_dims];
    let mut column: Vec<f64> = Vec::with_capacity(n_draws);
    let n = n_draws as f64;
    for d in 0..n_dims {
        let shift: f64 = rng.sample(Open01);
        column.clear();
        column.extend((0..n_draws).map(|i| ((i as f64 + shift) / n).min(LARGEST_BELOW_ONE)));
        column.shuffle(&mut rng);
        for (r, v) in column.iter().enumerate() {
            out[r * n_dims + d] = *v;
        }
    }
    out
}

fn check_counts(n_individuals: usize, n_draws: usize, n_dims: usize) -> Result<()> {
    if n_individuals == 0 {
        return Err(Error::ZeroCount("n_individuals"));
    }
    if n_draws == 0 {
        return Err(Error::ZeroCount("n_draws"));
    }
    if n_dims == 0 {
        return Err(Error::ZeroCount("n_dims"));
    }
    Ok(())
}

/// MLHS uniforms for individuals keyed `0..n_individuals`.
pub fn mlhs_uniform(
    n_individuals: usize,
    n_draws: usize,
    n_dims: usize,
    seed: u64,
) -> Result<DrawMatrix> {
    let keys: Vec<u64> = (0..n_individuals as u64).collect();
    mlhs_uniform_keyed(&keys, n_draws, n_dims, seed)
}

/// MLHS uniforms where row `i` is generated from the stream of `keys[i]`.
/// Reordering `keys` reorders rows without changing their contents.
pub fn mlhs_uniform_keyed(
    keys: &[u64],
    n_draws: usize,
    n_dims: usize,
    seed: u64,
) -> Result<DrawMatrix> {
    check_counts(keys.len(), n_draws, n_dims)?;
    let blocks: Vec<Vec<f64>> = keys
        .par_iter()
        .map(|&key| mlhs_block(seed, key, n_draws, n_dims))
        .collect();
    Ok(DrawMatrix {
        n_individuals: keys.len(),
        n_draws,
        n_dims,
        values: blocks.concat(),
        seed,
    })
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF on the open unit interval.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutsideUnitInterval(p));
    }
    // 1 - p is exact for p > 0.5, so mirroring keeps upper-tail precision.
    let x = if p > 0.5 {
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * (1.0 - p))
    } else {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
    };
    // One Newton step against the CDF; the series inverse alone is good to
    // about 1e-10.
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let residual = if p > 0.5 {
        (1.0 - p) - normal_cdf(-x)
    } else {
        normal_cdf(x) - p
    };
    let step = residual / density;
    Ok(if step.is_finite() { x - step } else { x })
}

/// Elementwise inverse normal CDF.
pub fn to_standard_normal(u: &DrawMatrix) -> Result<DrawMatrix> {
    let values = u
        .values
        .iter()
        .map(|&p| inverse_normal_cdf(p))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DrawMatrix {
        values,
        ..u.clone()
    })
}

/// Standard normal MLHS draws, the form consumed by the likelihood.
pub fn mlhs_normal_keyed(
    keys: &[u64],
    n_draws: usize,
    n_dims: usize,
    seed: u64,
) -> Result<DrawMatrix> {
    to_standard_normal(&mlhs_uniform_keyed(keys, n_draws, n_dims, seed)?)
}
