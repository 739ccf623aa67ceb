//! Uniform search grids and quantized index layouts.
//!
//! A [`GridSpec`] maps between three views of a search point:
//! real coordinates in the box `[lower, upper]`, integer grid indices
//! per dimension, and (when quantized) base-`P` digit strings of length
//! `d * q` that the optimizer treats as the modes of a long tensor.
//!
//! Digits are big-endian: the first digit of a dimension is its most
//! significant, so lexicographic digit order equals numeric index order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidSpec(String),
    #[error("index {index} out of range for dimension {dim} (size {size})")]
    IndexOutOfRange { dim: usize, index: usize, size: usize },
    #[error("digit {digit} out of range for base {base}")]
    DigitOutOfRange { digit: usize, base: usize },
    #[error("grid is not quantized")]
    NotQuantized,
}

/// Base-`P`/length-`q` digit layout shared by every dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quantization {
    /// Submode base `P >= 2`.
    pub base: usize,
    /// Number of submodes `q >= 1`; each mode size is `base^q`.
    pub submodes: usize,
}

/// Per-dimension bounds and mode sizes, with an optional quantized layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    mode_sizes: Vec<usize>,
    quantization: Option<Quantization>,
}

impl GridSpec {
    /// Plain uniform grid with explicit mode sizes.
    pub fn uniform(
        lower: Vec<f64>,
        upper: Vec<f64>,
        mode_sizes: Vec<usize>,
    ) -> Result<Self, GridError> {
        let spec = Self {
            lower,
            upper,
            mode_sizes,
            quantization: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Quantized grid: every mode has size `base^submodes`.
    pub fn quantized(
        lower: Vec<f64>,
        upper: Vec<f64>,
        base: usize,
        submodes: usize,
    ) -> Result<Self, GridError> {
        if base < 2 {
            return Err(GridError::InvalidSpec("submode base must be >= 2".into()));
        }
        if submodes < 1 {
            return Err(GridError::InvalidSpec("submode count must be >= 1".into()));
        }
        let n = base
            .checked_pow(submodes as u32)
            .ok_or_else(|| GridError::InvalidSpec("mode size overflows".into()))?;
        let dims = lower.len();
        let spec = Self {
            lower,
            upper,
            mode_sizes: vec![n; dims],
            quantization: Some(Quantization { base, submodes }),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same box bounds for every dimension.
    pub fn uniform_box(dims: usize, a: f64, b: f64, mode_size: usize) -> Result<Self, GridError> {
        Self::uniform(vec![a; dims], vec![b; dims], vec![mode_size; dims])
    }

    /// Same box bounds for every dimension, quantized layout.
    pub fn quantized_box(
        dims: usize,
        a: f64,
        b: f64,
        base: usize,
        submodes: usize,
    ) -> Result<Self, GridError> {
        Self::quantized(vec![a; dims], vec![b; dims], base, submodes)
    }

    fn validate(&self) -> Result<(), GridError> {
        let d = self.lower.len();
        if d == 0 {
            return Err(GridError::InvalidSpec("zero dimensions".into()));
        }
        if self.upper.len() != d || self.mode_sizes.len() != d {
            return Err(GridError::InvalidSpec("bounds/sizes length mismatch".into()));
        }
        for i in 0..d {
            if !(self.lower[i] < self.upper[i]) {
                return Err(GridError::InvalidSpec(format!(
                    "lower[{i}] must be strictly below upper[{i}]"
                )));
            }
            if self.mode_sizes[i] < 2 {
                return Err(GridError::InvalidSpec(format!(
                    "mode size of dimension {i} must be >= 2"
                )));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn mode_sizes(&self) -> &[usize] {
        &self.mode_sizes
    }

    pub fn quantization(&self) -> Option<Quantization> {
        self.quantization
    }

    /// Coordinate of grid node `n` along `dim`; node 0 is the lower bound
    /// and node `N - 1` the upper bound.
    pub fn grid_point(&self, dim: usize, n: usize) -> Result<f64, GridError> {
        let size = *self
            .mode_sizes
            .get(dim)
            .ok_or(GridError::IndexOutOfRange { dim, index: n, size: 0 })?;
        if n >= size {
            return Err(GridError::IndexOutOfRange { dim, index: n, size });
        }
        Ok(self.point_value(dim, n))
    }

    /// Unchecked node-to-coordinate map shared by [`grid_point`](Self::grid_point)
    /// and the optimizer's block assembly, so both produce bit-identical
    /// coordinates.
    #[inline]
    pub(crate) fn point_value(&self, dim: usize, n: usize) -> f64 {
        let size = self.mode_sizes[dim];
        if n == 0 {
            self.lower[dim]
        } else if n == size - 1 {
            self.upper[dim]
        } else {
            self.lower[dim]
                + (self.upper[dim] - self.lower[dim]) * (n as f64) / ((size - 1) as f64)
        }
    }

    /// Mode sizes of the quantized layout: `d * q` entries, all equal to `P`.
    pub fn quantize_shape(&self) -> Result<Vec<usize>, GridError> {
        let q = self.quantization.ok_or(GridError::NotQuantized)?;
        Ok(vec![q.base; self.dims() * q.submodes])
    }

    /// Mode sizes as seen by the optimizer: the quantized shape when
    /// quantization is active, the plain mode sizes otherwise.
    pub fn tensor_shape(&self) -> Vec<usize> {
        match self.quantization {
            Some(_) => self.quantize_shape().expect("quantized"),
            None => self.mode_sizes.clone(),
        }
    }

    /// Decode a full digit string (length `d * q`, big-endian per dimension)
    /// into per-dimension grid indices and coordinates.
    pub fn decode_digits(&self, digits: &[usize]) -> Result<(Vec<usize>, Vec<f64>), GridError> {
        let q = self.quantization.ok_or(GridError::NotQuantized)?;
        let d = self.dims();
        if digits.len() != d * q.submodes {
            return Err(GridError::InvalidSpec(format!(
                "expected {} digits, got {}",
                d * q.submodes,
                digits.len()
            )));
        }
        let mut indices = Vec::with_capacity(d);
        for k in 0..d {
            let mut idx = 0usize;
            for j in 0..q.submodes {
                let digit = digits[k * q.submodes + j];
                if digit >= q.base {
                    return Err(GridError::DigitOutOfRange { digit, base: q.base });
                }
                idx = idx * q.base + digit;
            }
            indices.push(idx);
        }
        let coords = indices
            .iter()
            .enumerate()
            .map(|(k, &i)| self.grid_point(k, i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((indices, coords))
    }

    /// Inverse of [`decode_digits`](Self::decode_digits): per-dimension
    /// indices to the full digit string.
    pub fn encode_indices(&self, indices: &[usize]) -> Result<Vec<usize>, GridError> {
        let q = self.quantization.ok_or(GridError::NotQuantized)?;
        let d = self.dims();
        if indices.len() != d {
            return Err(GridError::InvalidSpec(format!(
                "expected {} indices, got {}",
                d,
                indices.len()
            )));
        }
        let mut digits = vec![0usize; d * q.submodes];
        for k in 0..d {
            let mut idx = indices[k];
            let size = self.mode_sizes[k];
            if idx >= size {
                return Err(GridError::IndexOutOfRange { dim: k, index: idx, size });
            }
            for j in (0..q.submodes).rev() {
                digits[k * q.submodes + j] = idx % q.base;
                idx /= q.base;
            }
        }
        Ok(digits)
    }

    /// Decode a working multi-index (one entry per tensor mode) into
    /// per-dimension grid indices and coordinates. For unquantized grids
    /// the multi-index already is the index vector.
    pub fn decode_point(&self, multi: &[usize]) -> Result<(Vec<usize>, Vec<f64>), GridError> {
        match self.quantization {
            Some(_) => self.decode_digits(multi),
            None => {
                if multi.len() != self.dims() {
                    return Err(GridError::InvalidSpec(format!(
                        "expected {} indices, got {}",
                        self.dims(),
                        multi.len()
                    )));
                }
                let coords = multi
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| self.grid_point(k, i))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((multi.to_vec(), coords))
            }
        }
    }

    /// For every tensor mode, the dimension it belongs to and the weight of
    /// its digit in that dimension's grid index.
    pub(crate) fn mode_slots(&self) -> Vec<(usize, usize)> {
        match self.quantization {
            Some(q) => {
                let mut slots = Vec::with_capacity(self.dims() * q.submodes);
                for k in 0..self.dims() {
                    for j in 0..q.submodes {
                        slots.push((k, q.base.pow((q.submodes - 1 - j) as u32)));
                    }
                }
                slots
            }
            None => (0..self.dims()).map(|k| (k, 1)).collect(),
        }
    }
}
