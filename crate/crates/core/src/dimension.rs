//! Box-counting dimension estimation for interval families and point clouds
//! in one to three dimensions, with log-log slope fits.
//!
//! Grids are anchored at the origin with cells `[k eps, (k+1) eps)^d`. A
//! point exactly on a cell boundary belongs to the higher-index cell. An
//! interval occupies the cells it meets in positive length, so families that
//! tile a grid exactly (middle thirds at powers of 1/3) count without
//! phantom boundary cells.

use std::collections::HashSet;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::{DeletionSequence, RankInterval};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Finite sample of a set in `[0,1]^d`, `d <= 3`; unused coordinates are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
    pub provenance: String,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<[f64; 3]>, provenance: impl Into<String>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::OutOfRange {
                what: "cloud dimension",
                value: dim.to_string(),
                range: "{1, 2, 3}",
            });
        }
        for p in &points {
            for (axis, c) in p.iter().enumerate().take(dim) {
                if !(0.0..=1.0).contains(c) {
                    return Err(Error::OutOfRange {
                        what: "cloud coordinate",
                        value: format!("axis {axis}: {c}"),
                        range: "[0, 1]",
                    });
                }
            }
        }
        Ok(Self { dim, points, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: eps.to_string(),
            range: "(0, inf)",
        });
    }
    Ok(())
}

/// Occupied-cell count of a cloud on the origin-anchored `eps` grid.
pub fn box_count(cloud: &PointCloud, eps: f64) -> Result<u64> {
    box_count_offset(cloud, eps, 0.0)
}

/// Same count on a grid shifted by `offset` (cells `[k eps - offset, ...)`).
pub fn box_count_offset(cloud: &PointCloud, eps: f64, offset: f64) -> Result<u64> {
    check_eps(eps)?;
    if cloud.is_empty() {
        return Err(Error::EmptyInput("point cloud"));
    }
    let dim = cloud.dim;
    let cells: HashSet<[i64; 3]> = cloud
        .points
        .par_iter()
        .fold(HashSet::new, |mut set, p| {
            let mut idx = [0i64; 3];
            for a in 0..dim {
                idx[a] = ((p[a] + offset) / eps).floor() as i64;
            }
            set.insert(idx);
            set
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    Ok(cells.len() as u64)
}

/// Count of grid cells meeting any interval of the family in positive
/// length. Exact when `S` is rational.
pub fn box_count_intervals<S: Scalar>(
    intervals: &[RankInterval<S>],
    eps: &S,
) -> Result<u64> {
    if *eps <= S::zero() {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: eps.to_string(),
            range: "(0, inf)",
        });
    }
    if intervals.is_empty() {
        return Err(Error::EmptyInput("interval family"));
    }
    let mut ranges: Vec<(i64, i64)> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        if iv.hi <= iv.lo {
            continue; // degenerate interval covers nothing in positive length
        }
        let lo_cell = (iv.lo.clone() / eps.clone()).floor_i64();
        let hi_cell = (iv.hi.clone() / eps.clone()).ceil_i64() - 1;
        ranges.push((lo_cell, hi_cell.max(lo_cell)));
    }
    ranges.sort_unstable();
    let mut total = 0u64;
    let mut current: Option<(i64, i64)> = None;
    for (lo, hi) in ranges {
        match current {
            None => current = Some((lo, hi)),
            Some((clo, chi)) if lo <= chi + 1 => current = Some((clo, chi.max(hi))),
            Some((clo, chi)) => {
                total += (chi - clo + 1) as u64;
                current = Some((lo, hi));
            }
        }
    }
    if let Some((clo, chi)) = current {
        total += (chi - clo + 1) as u64;
    }
    Ok(total)
}

/// Exact `(scale, count)` pair of a rank family: `(lambda_n, 2^n)`,
/// bypassing any grid.
pub fn count_rank_intervals<S: Scalar>(
    seq: &DeletionSequence<S>,
    n: usize,
) -> Result<(S, u128)> {
    if n >= 128 {
        return Err(Error::OutOfRange {
            what: "rank",
            value: n.to_string(),
            range: "< 128",
        });
    }
    Ok((crate::cantor::interval_length(seq, n)?, 1u128 << n))
}

/// One `(eps, count)` sample of a scaling law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub eps: f64,
    pub count: u128,
}

impl SeriesEntry {
    pub fn ln_inv_eps(&self) -> f64 {
        -self.eps.ln()
    }

    pub fn ln_count(&self) -> f64 {
        (self.count as f64).ln()
    }
}

/// A box-count series: `eps` strictly decreasing, counts non-decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountSeries {
    pub entries: Vec<SeriesEntry>,
}

impl BoxCountSeries {
    pub fn new(entries: Vec<SeriesEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("box-count series"));
        }
        for w in entries.windows(2) {
            if !(w[1].eps < w[0].eps) || w[1].count < w[0].count {
                return Err(Error::DegenerateFit(format!(
                    "series not monotone: ({}, {}) then ({}, {})",
                    w[0].eps, w[0].count, w[1].eps, w[1].count
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Default fit window: drop the two coarsest and two finest scales when
    /// the series is long enough to afford it.
    pub fn default_fit_range(&self) -> Range<usize> {
        let n = self.len();
        if n >= 6 {
            2..n - 2
        } else {
            0..n
        }
    }
}

/// Pointwise scaling exponent `ln(count) / ln(1/eps)`.
pub fn effective_dimension(eps: f64, count: u128) -> f64 {
    (count as f64).ln() / -eps.ln()
}

/// Least-squares fit of `ln(count)` against `ln(1/eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub range: (usize, usize),
}

pub fn fit_dimension(series: &BoxCountSeries, range: Range<usize>) -> Result<FitSummary> {
    if range.end > series.len() || range.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "range {range:?} needs >= 2 entries inside 0..{}",
            series.len()
        )));
    }
    let pts: Vec<(f64, f64)> = series.entries[range.clone()]
        .iter()
        .map(|e| (e.ln_inv_eps(), e.ln_count()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det == 0.0 {
        return Err(Error::DegenerateFit("all scales equal".into()));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();
    Ok(FitSummary {
        slope,
        intercept,
        residual_rms: (ss / n).sqrt(),
        range: (range.start, range.end),
    })
}

/// Series from the exact `(lambda_n, 2^n)` pairs over a rank range.
pub fn exact_series<S: Scalar>(
    seq: &DeletionSequence<S>,
    ranks: Range<usize>,
) -> Result<BoxCountSeries> {
    let mut entries = Vec::with_capacity(ranks.len());
    for n in ranks {
        let (lambda, count) = count_rank_intervals(seq, n)?;
        entries.push(SeriesEntry { eps: lambda.to_f64_lossy(), count });
    }
    BoxCountSeries::new(entries)
}

/// Series for a cloud on the dyadic ladder `eps = 2^-k`.
pub fn cloud_series(
    cloud: &PointCloud,
    octaves: Range<u32>,
) -> Result<BoxCountSeries> {
    let mut entries = Vec::new();
    for k in octaves {
        let eps = 2f64.powi(-(k as i32));
        entries.push(SeriesEntry { eps, count: box_count(cloud, eps)? as u128 });
    }
    BoxCountSeries::new(entries)
}

/// Series for an interval family on the ladder `eps = scale^k`.
pub fn interval_series<S: Scalar>(
    intervals: &[RankInterval<S>],
    scale: &S,
    powers: Range<u32>,
) -> Result<BoxCountSeries> {
    if *scale <= S::zero() || *scale >= S::one() {
        return Err(Error::OutOfRange {
            what: "ladder scale",
            value: scale.to_string(),
            range: "(0, 1)",
        });
    }
    let mut entries = Vec::new();
    for k in powers {
        let eps = scale.powu(k);
        entries.push(SeriesEntry {
            eps: eps.to_f64_lossy(),
            count: box_count_intervals(intervals, &eps)? as u128,
        });
    }
    BoxCountSeries::new(entries)
}

/// Cross a planar cloud with a list of `h` values: the finite-scale version
/// of taking a product with an interval, which lifts the box dimension by
/// exactly one at scales the `h` samples saturate.
pub fn product_cloud(base: &PointCloud, h_samples: &[f64]) -> Result<PointCloud> {
    if base.is_empty() {
        return Err(Error::EmptyInput("product base cloud"));
    }
    if base.dim != 2 {
        return Err(Error::OutOfRange {
            what: "product base dimension",
            value: base.dim.to_string(),
            range: "{2}",
        });
    }
    if h_samples.is_empty() {
        return Err(Error::EmptyInput("h samples"));
    }
    let mut points = Vec::with_capacity(base.len() * h_samples.len());
    for p in &base.points {
        for &h in h_samples {
            points.push([p[0], p[1], h]);
        }
    }
    PointCloud::new(3, points, format!("{} x {} h-values", base.provenance, h_samples.len()))
}

/// `count` midpoints `(i + 1/2) / count`: hits every cell of any grid with
/// at least `1/count` spacing.
pub fn midpoint_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| (i as f64 + 0.5) / count as f64).collect()
}
