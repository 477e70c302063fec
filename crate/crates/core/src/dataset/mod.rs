//! Point sets, synthetic generators and variance-based column reordering.
//!
//! Coordinates are stored row-major with each row padded with zeros up to a
//! multiple of four columns, so every point splits evenly into 4-wide chunks.

mod io;

pub use io::{read_dataset, write_dataset, Format};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Width of one distance chunk in dimensions.
pub const CHUNK: usize = 4;

pub fn padded_dims(d: usize) -> usize {
    d.div_ceil(CHUNK) * CHUNK
}

pub fn chunk_count(d: usize) -> usize {
    d.div_ceil(CHUNK)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    d_padded: usize,
    coords: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from `n * d` logical coordinates in row-major order.
    pub fn from_flat(d: usize, values: &[f64]) -> Result<Self> {
        if d == 0 {
            return Err(Error::validation("dimensionality must be at least 1"));
        }
        if values.is_empty() || !values.len().is_multiple_of(d) {
            return Err(Error::validation(format!(
                "{} coordinates cannot form rows of {d} dimensions",
                values.len()
            )));
        }
        let n = values.len() / d;
        let d_padded = padded_dims(d);
        let mut coords = vec![0.0; n * d_padded];
        for (i, (src, dst)) in values
            .chunks_exact(d)
            .zip(coords.chunks_exact_mut(d_padded))
            .enumerate()
        {
            for (j, &v) in src.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::validation(format!(
                        "point {i} has non-finite coordinate {v} in dimension {j}"
                    )));
                }
            }
            dst[..d].copy_from_slice(src);
        }
        Ok(Self {
            n,
            d,
            d_padded,
            coords,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::validation("dataset must contain at least one point"))?;
        let mut flat = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::validation(format!(
                    "point {i} has {} dimensions, expected {d}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(d, &flat)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dims(&self) -> usize {
        self.d
    }

    pub fn padded_dims(&self) -> usize {
        self.d_padded
    }

    pub fn chunks(&self) -> usize {
        self.d_padded / CHUNK
    }

    /// Padded row-major storage, `len() * padded_dims()` values.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Logical coordinates of point `i` (no padding).
    pub fn point(&self, i: usize) -> &[f64] {
        &self.padded_point(i)[..self.d]
    }

    pub fn padded_point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d_padded..(i + 1) * self.d_padded]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords
            .chunks_exact(self.d_padded)
            .map(move |row| &row[..self.d])
    }

    /// Logical coordinates, row-major, without padding.
    pub fn to_flat(&self) -> Vec<f64> {
        self.points().flatten().copied().collect()
    }

    /// SHA-256 over the binary file encoding, truncated to 16 hex digits.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(io::encode_binary(self));
        hex::encode(&hasher.finalize()[..8])
    }

    /// Per-dimension population variance of the logical columns.
    pub fn column_variances(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.d)
            .map(|j| {
                let mean = self.points().map(|p| p[j]).sum::<f64>() / n;
                self.points().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n
            })
            .collect()
    }

    /// Returns a dataset whose column `k` is column `perm[k]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.d];
        if perm.len() != self.d {
            return Err(Error::validation("permutation length differs from d"));
        }
        for &p in perm {
            if p >= self.d || std::mem::replace(&mut seen[p], true) {
                return Err(Error::validation("column order is not a permutation"));
            }
        }
        let mut out = self.clone();
        for (dst, src) in out
            .coords
            .chunks_exact_mut(self.d_padded)
            .zip(self.coords.chunks_exact(self.d_padded))
        {
            for (k, &p) in perm.iter().enumerate() {
                dst[k] = src[p];
            }
        }
        Ok(out)
    }
}

/// Sorts columns by non-increasing variance. Ties keep their original
/// relative order, so an already-sorted dataset maps to the identity.
pub fn reorder_dims_by_variance(dataset: &Dataset) -> Result<(Dataset, Vec<usize>)> {
    if dataset.len() < 2 {
        return Err(Error::validation(
            "variance reordering needs at least two points",
        ));
    }
    let var = dataset.column_variances();
    let mut perm: Vec<usize> = (0..dataset.dims()).collect();
    perm.sort_by(|&a, &b| var[b].total_cmp(&var[a]));
    let out = dataset.permute_columns(&perm)?;
    Ok((out, perm))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution01 {
    Uniform,
    Exponential,
}

/// Default rate of the truncated exponential generator.
pub const DEFAULT_EXPO_RATE: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub distribution: Distribution01,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub rate: f64,
}

impl GenSpec {
    pub fn uniform(n: usize, d: usize, seed: u64) -> Self {
        Self {
            distribution: Distribution01::Uniform,
            n,
            d,
            seed,
            rate: DEFAULT_EXPO_RATE,
        }
    }

    pub fn exponential(n: usize, d: usize, seed: u64) -> Self {
        Self {
            distribution: Distribution01::Exponential,
            ..Self::uniform(n, d, seed)
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }
}

/// Generates a synthetic dataset on `[0, 1)^d`.
///
/// Each dimension draws from its own ChaCha8 stream (stream id = dimension
/// index) seeded with `spec.seed`, so output is portable and identical for
/// identical specs. Exponential coordinates are resampled until below 1.
pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    if spec.n == 0 || spec.d == 0 {
        return Err(Error::validation("n and d must both be at least 1"));
    }
    if spec.distribution == Distribution01::Exponential && !(spec.rate > 0.0 && spec.rate.is_finite())
    {
        return Err(Error::validation("exponential rate must be positive and finite"));
    }
    let (n, d) = (spec.n, spec.d);
    let mut flat = vec![0.0; n * d];
    for j in 0..d {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(j as u64);
        match spec.distribution {
            Distribution01::Uniform => {
                for i in 0..n {
                    flat[i * d + j] = rng.random::<f64>();
                }
            }
            Distribution01::Exponential => {
                let exp = Exp::new(spec.rate).expect("rate validated above");
                for i in 0..n {
                    flat[i * d + j] = loop {
                        let v: f64 = exp.sample(&mut rng);
                        if v < 1.0 {
                            break v;
                        }
                    };
                }
            }
        }
    }
    Dataset::from_flat(d, &flat)
}
