//! Recursive localization of variance change points.
//!
//! A segment is tested; on rejection the adjacent block pair with the
//! largest jump in log local variance is selected, the split point inside
//! that two-block window maximizes the difference of left and right
//! empirical variances, and both halves are processed recursively.
//!
//! Positions are split positions: a change point at `t` separates
//! observations `0..t` from `t..n` (0-based), which is `X_1..X_t` versus
//! `X_{t+1}..X_n` in 1-based terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{BlockPartition, TimeSeries};
use crate::variance_test::{run_test_with, BlockStats, TestConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub index: usize,
    /// 0-based index `j` of the selected block pair `(j, j+1)` within its segment.
    pub block_pair: usize,
    pub left_var: f64,
    pub right_var: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SegmentOutcome {
    Split { index: usize },
    NotRejected,
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub start: usize,
    pub end: usize,
    pub depth: usize,
    pub p_value: Option<f64>,
    pub t_stat: Option<f64>,
    pub reject: Option<bool>,
    #[serde(flatten)]
    pub outcome: SegmentOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointSet {
    pub n: usize,
    pub points: Vec<ChangePoint>,
    pub trace: Vec<TraceEntry>,
}

impl ChangePointSet {
    pub fn indices(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.index).collect()
    }
}

/// Boundary exclusion for a refinement window: `max(min_margin, ⌈frac·len⌉)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginRule {
    pub min_margin: usize,
    pub fraction: f64,
}

impl Default for MarginRule {
    fn default() -> Self {
        Self {
            min_margin: 10,
            fraction: 0.05,
        }
    }
}

impl MarginRule {
    pub fn margin(&self, window_len: usize) -> usize {
        let frac = (self.fraction * window_len as f64).ceil() as usize;
        self.min_margin.max(frac)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LocateConfig {
    pub test: TestConfig,
    pub margin: MarginRule,
}

/// Smallest `j` maximizing `|ν_j − ν_{j+1}|`.
pub fn dominant_block_pair(stats: &BlockStats) -> Result<usize> {
    dominant_pair(&stats.log_local_vars)
}

fn dominant_pair(nu: &[f64]) -> Result<usize> {
    if nu.len() < 2 {
        return Err(Error::NeedTwoBlocks(nu.len()));
    }
    let mut best = 0;
    let mut best_gap = f64::NEG_INFINITY;
    for (j, w) in nu.windows(2).enumerate() {
        let gap = (w[0] - w[1]).abs();
        if gap > best_gap {
            best = j;
            best_gap = gap;
        }
    }
    Ok(best)
}

/// Refines the split inside the window formed by blocks `j` and `j+1` of
/// `p`. Returns the split position (in `x` coordinates) and the left/right
/// window variances at that position.
pub fn refine_within_window(
    x: &TimeSeries,
    p: &BlockPartition,
    j: usize,
    margin: usize,
) -> Result<(usize, f64, f64)> {
    if j + 1 >= p.block_count {
        return Err(Error::InvalidParameter(format!(
            "block pair {j} out of range for {} blocks",
            p.block_count
        )));
    }
    let start = p.block(j).start;
    let end = p.block(j + 1).end;
    if end > x.len() {
        return Err(Error::InvalidParameter("partition exceeds series".into()));
    }
    let (k, lv, rv) = best_split(&x.values()[start..end], margin)?;
    Ok((start + k, lv, rv))
}

/// Left size `k ∈ [margin, len − margin]` maximizing
/// `|σ̂²(w[..k]) − σ̂²(w[k..])|`, ties to the smallest `k`.
fn best_split(w: &[f64], margin: usize) -> Result<(usize, f64, f64)> {
    let len = w.len();
    if margin == 0 || len < 2 * margin + 2 {
        return Err(Error::WindowTooShort {
            window: len,
            margin,
        });
    }
    // prefix sums of values and squares, shifted by the window mean for accuracy
    let shift = w.iter().sum::<f64>() / len as f64;
    let mut s1 = vec![0.0; len + 1];
    let mut s2 = vec![0.0; len + 1];
    for (i, v) in w.iter().enumerate() {
        let d = v - shift;
        s1[i + 1] = s1[i] + d;
        s2[i + 1] = s2[i] + d * d;
    }
    let var = |a: usize, b: usize| {
        let m = (b - a) as f64;
        let mean = (s1[b] - s1[a]) / m;
        ((s2[b] - s2[a]) / m - mean * mean).max(0.0)
    };
    let mut best = (margin, var(0, margin), var(margin, len));
    let mut best_gap = (best.1 - best.2).abs();
    for k in margin + 1..=len - margin {
        let (l, r) = (var(0, k), var(k, len));
        let gap = (l - r).abs();
        if gap > best_gap {
            best = (k, l, r);
            best_gap = gap;
        }
    }
    Ok(best)
}

/// Smallest sample length whose partition with exponent `s` has at least
/// four blocks and admits the sub-partition with exponent `q`.
pub fn min_segment_len(s: f64, q: f64) -> usize {
    (4..100_000)
        .find(|&n| match BlockPartition::new(n, s) {
            Ok(p) => p.block_count >= 4 && BlockPartition::new(p.covered(), q).is_ok(),
            Err(_) => false,
        })
        .unwrap_or(usize::MAX)
}

pub fn locate_all(x: &TimeSeries, s: f64, q: f64, alpha: f64) -> Result<ChangePointSet> {
    locate_all_with(
        x,
        &LocateConfig {
            test: TestConfig { s, q, alpha },
            ..LocateConfig::default()
        },
    )
}

pub fn locate_all_with(x: &TimeSeries, config: &LocateConfig) -> Result<ChangePointSet> {
    config.test.validate()?;
    let min_len = min_segment_len(config.test.s, config.test.q);
    let (mut points, mut trace) = segment(x.values(), 0, x.len(), 0, config, min_len)?;
    points.sort_by_key(|p| p.index);
    trace.sort_by_key(|t| (t.start, t.end));
    Ok(ChangePointSet {
        n: x.len(),
        points,
        trace,
    })
}

type Found = (Vec<ChangePoint>, Vec<TraceEntry>);

fn segment(
    all: &[f64],
    start: usize,
    end: usize,
    depth: usize,
    config: &LocateConfig,
    min_len: usize,
) -> Result<Found> {
    let skipped = |reason: String| TraceEntry {
        start,
        end,
        depth,
        p_value: None,
        t_stat: None,
        reject: None,
        outcome: SegmentOutcome::Skipped { reason },
    };
    let len = end - start;
    if len < min_len {
        return Ok((vec![], vec![skipped(format!("too short: {len} < {min_len}"))]));
    }
    let seg = TimeSeries::new(all[start..end].to_vec())?;
    let result = match run_test_with(&seg, &config.test) {
        Ok(r) => r,
        Err(e) if e.is_statistical() => return Ok((vec![], vec![skipped(e.to_string())])),
        Err(e) => return Err(e),
    };
    let mut entry = TraceEntry {
        start,
        end,
        depth,
        p_value: Some(result.p_value),
        t_stat: Some(result.t_stat),
        reject: Some(result.reject),
        outcome: SegmentOutcome::NotRejected,
    };
    if !result.reject {
        return Ok((vec![], vec![entry]));
    }

    let j = dominant_block_pair(&result.block_stats)?;
    let window_len = 2 * result.partition.block_len;
    let margin = config.margin.margin(window_len);
    let (split, _, _) = match refine_within_window(&seg, &result.partition, j, margin) {
        Ok(found) => found,
        Err(e @ Error::WindowTooShort { .. }) => {
            entry.outcome = SegmentOutcome::Skipped {
                reason: e.to_string(),
            };
            return Ok((vec![], vec![entry]));
        }
        Err(e) => return Err(e),
    };
    let index = start + split;
    entry.outcome = SegmentOutcome::Split { index };
    let point = ChangePoint {
        index,
        block_pair: j,
        left_var: population_var(&all[start..index]),
        right_var: population_var(&all[index..end]),
        depth,
    };

    let (left, right) = rayon::join(
        || segment(all, start, index, depth + 1, config, min_len),
        || segment(all, index, end, depth + 1, config, min_len),
    );
    let (mut points, mut trace) = left?;
    let (rp, rt) = right?;
    points.push(point);
    points.extend(rp);
    trace.push(entry);
    trace.extend(rt);
    Ok((points, trace))
}

fn population_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n
}
