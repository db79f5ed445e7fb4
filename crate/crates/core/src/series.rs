//! Time series container, block geometry and differencing transforms.
//!
//! Blocks are documented 1-based (block `j` covers observations
//! `(j-1)·ℓ+1 ..= j·ℓ`); in code they are 0-based half-open ranges
//! `j·ℓ .. (j+1)·ℓ`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered sequence of finite observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self {
            values,
            source: None,
        })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    /// Contiguous sub-series `range` (0-based, half-open).
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidParameter(format!(
                "slice {}..{} out of bounds for length {}",
                range.start,
                range.end,
                self.len()
            )));
        }
        Ok(Self {
            values: self.values[range].to_vec(),
            source: self.source.clone(),
        })
    }

    /// Multiplies every observation by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }

    /// Removes the observations at the given 0-based positions.
    pub fn drop_indices(&self, indices: &[usize]) -> Result<Self> {
        let mut drop = vec![false; self.len()];
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidParameter(format!(
                    "drop index {i} out of bounds for length {}",
                    self.len()
                )));
            }
            drop[i] = true;
        }
        let kept = self
            .values
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(&v, _)| v)
            .collect();
        Self {
            values: kept,
            source: self.source.clone(),
        }
        .non_empty()
    }

    fn non_empty(self) -> Result<Self> {
        if self.values.is_empty() {
            Err(Error::EmptySeries)
        } else {
            Ok(self)
        }
    }
}

/// Block geometry for a sample of length `n` with block exponent `s`:
/// `ℓ = ⌊n^s⌋`, `b = ⌊n/ℓ⌋`, remainder `r = n − b·ℓ` (unused).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub n: usize,
    pub s: f64,
    pub block_len: usize,
    pub block_count: usize,
    pub remainder: usize,
}

impl BlockPartition {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "block exponent must lie in (0, 1), got {s}"
            )));
        }
        let block_len = floor_pow(n, s);
        let block_count = n.checked_div(block_len).unwrap_or(0);
        if n < 4 || block_len < 2 || block_count < 2 {
            return Err(Error::SampleTooShort {
                n,
                s,
                block_len,
                block_count,
            });
        }
        Ok(Self {
            n,
            s,
            block_len,
            block_count,
            remainder: n - block_count * block_len,
        })
    }

    /// Number of observations covered by full blocks, `b·ℓ`.
    pub fn covered(&self) -> usize {
        self.block_count * self.block_len
    }

    /// 0-based half-open index range of block `j` (0-based).
    pub fn block(&self, j: usize) -> Range<usize> {
        debug_assert!(j < self.block_count);
        j * self.block_len..(j + 1) * self.block_len
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.block_count).map(|j| self.block(j))
    }
}

/// `⌊n^s⌋`, nudged so that exact integer powers are not lost to rounding.
fn floor_pow(n: usize, s: f64) -> usize {
    let x = (n as f64).powf(s);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// First differences `Z_i = X_{i+1} − X_i`.
pub fn difference(x: &TimeSeries) -> Result<TimeSeries> {
    if x.len() < 2 {
        return Err(Error::SeriesTooShort(x.len()));
    }
    seasonal_difference(x, 1)
}

/// Lag-`lag` differences `Z_i = X_{i+lag} − X_i`.
pub fn seasonal_difference(x: &TimeSeries, lag: usize) -> Result<TimeSeries> {
    if lag == 0 {
        return Err(Error::InvalidParameter("lag must be positive".into()));
    }
    if x.len() <= lag {
        return Err(Error::LagExceedsLength { lag, n: x.len() });
    }
    let v = x.values();
    let values = v[lag..].iter().zip(v).map(|(a, b)| a - b).collect();
    Ok(TimeSeries {
        values,
        source: x.source.clone(),
    })
}
