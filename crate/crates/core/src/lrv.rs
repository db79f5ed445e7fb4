//! Subsampling estimator of the long-run standard deviation of `Y²`.
//!
//! Observations are first centered by the means of the test blocks
//! (exponent `s`), then split into non-overlapping sub-blocks of length
//! `ℓ̃ = ⌊n′^q⌋` on the centered length `n′ = b·ℓ`:
//!
//! `κ̂ = (1/b̃)·√(π/2)·(1/σ̂_H²)·Σ_j |ℓ̃^{-1/2} Σ_{i∈j} (X̃_i² − σ̂_H²)|`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{BlockPartition, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrvEstimate {
    pub kappa_hat: f64,
    pub sigma_h_sq_hat: f64,
    /// Partition of the centered series with exponent `q`.
    pub sub_partition: BlockPartition,
    /// Per-sub-block means of `X̃²`.
    pub sub_block_sq_means: Vec<f64>,
}

/// `X̃_i = X_i − mean of the s-block containing i`, over the `b·ℓ` covered
/// observations.
pub fn center_by_block_means(x: &TimeSeries, p: &BlockPartition) -> Result<TimeSeries> {
    if p.n != x.len() {
        return Err(Error::InvalidParameter(format!(
            "partition built for n = {}, series has {} observations",
            p.n,
            x.len()
        )));
    }
    let v = x.values();
    let mut out = Vec::with_capacity(p.covered());
    for range in p.blocks() {
        let block = &v[range];
        let mean = block.iter().sum::<f64>() / block.len() as f64;
        out.extend(block.iter().map(|x| x - mean));
    }
    TimeSeries::new(out)
}

pub fn estimate_kappa(x: &TimeSeries, s: f64, q: f64) -> Result<LrvEstimate> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    if q >= s {
        return Err(Error::QNotBelowS { q, s });
    }
    let p = BlockPartition::new(x.len(), s)?;
    let centered = center_by_block_means(x, &p)?;
    let sq: Vec<f64> = centered.values().iter().map(|v| v * v).collect();
    let n_cov = sq.len();
    let sigma_h_sq_hat = sq.iter().sum::<f64>() / n_cov as f64;
    if !(sigma_h_sq_hat > 0.0) {
        return Err(Error::ConstantInput);
    }
    let sub = BlockPartition::new(n_cov, q)?;
    let root_len = (sub.block_len as f64).sqrt();
    let mut abs_sum = 0.0;
    let mut sub_block_sq_means = Vec::with_capacity(sub.block_count);
    for range in sub.blocks() {
        let block = &sq[range];
        let total: f64 = block.iter().sum();
        let dev: f64 = block.iter().map(|v| v - sigma_h_sq_hat).sum();
        abs_sum += (dev / root_len).abs();
        sub_block_sq_means.push(total / block.len() as f64);
    }
    let kappa_hat =
        (PI / 2.0).sqrt() / sigma_h_sq_hat * abs_sum / sub.block_count as f64;
    Ok(LrvEstimate {
        kappa_hat,
        sigma_h_sq_hat,
        sub_partition: sub,
        sub_block_sq_means,
    })
}

/// Long-run variance of `values` by non-overlapping batch means.
///
/// Used for pilot estimates of `κ²` when no closed form is available.
pub fn batch_means_lrv(values: &[f64], batch_len: usize) -> Result<f64> {
    if batch_len == 0 {
        return Err(Error::InvalidParameter("batch length must be positive".into()));
    }
    let batches = values.len() / batch_len;
    if batches < 2 {
        return Err(Error::InvalidParameter(format!(
            "{} observations give fewer than two batches of length {batch_len}",
            values.len()
        )));
    }
    let used = &values[..batches * batch_len];
    let grand = used.iter().sum::<f64>() / used.len() as f64;
    let ss: f64 = used
        .chunks_exact(batch_len)
        .map(|c| {
            let m = c.iter().sum::<f64>() / batch_len as f64;
            (m - grand).powi(2)
        })
        .sum();
    Ok(batch_len as f64 * ss / (batches as f64 - 1.0))
}
