//! Certified lower bounds on Hausdorff dimension.
//!
//! The natural measure of a Cantor family gives every rank-`n` interval mass
//! `2^{-n}`, so the ratio `2^{-n} / lambda_n^gamma` controls gamma-regularity
//! (`mu(U) < c |U|^gamma` for small `U`); a bounded ratio plus the mass
//! distribution principle yields `dim_H >= gamma`. Arbitrary small intervals
//! reduce to rank intervals at the price of a `3^gamma` factor, which is
//! folded into the certified constant.
//!
//! All ratio arithmetic runs in log space so certificates reach ranks far
//! past f64 underflow of the lengths themselves.

use serde::{Deserialize, Serialize};

use crate::cantor::DeletionSequence;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const LN_2: f64 = std::f64::consts::LN_2;
const LN_3: f64 = 1.0986122886681098f64;

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::OutOfRange {
            what: "gamma",
            value: gamma.to_string(),
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// `2^{-n} / lambda_n^gamma`, the mass-to-size ratio of rank-`n` intervals.
/// Infinite when `lambda_n = 0` (a full deletion occurred up to rank `n`).
pub fn regularity_ratio<S: Scalar>(
    seq: &DeletionSequence<S>,
    gamma: f64,
    n: usize,
) -> Result<f64> {
    Ok(ln_regularity_ratio(seq, gamma, n)?.exp())
}

pub(crate) fn ln_regularity_ratio<S: Scalar>(
    seq: &DeletionSequence<S>,
    gamma: f64,
    n: usize,
) -> Result<f64> {
    check_gamma(gamma)?;
    let ln_lambda = crate::cantor::ln_interval_length(seq, n)?;
    Ok(-(n as f64) * LN_2 - gamma * ln_lambda)
}

/// A finitely checked witness that the natural measure is gamma-regular at
/// scales below `delta`, hence that the family's limit set has Hausdorff
/// dimension at least `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityCertificate {
    pub gamma: f64,
    /// Last rank violating the tail inequality `2^{gamma-1} < (1-p_j)^gamma`
    /// (0 if none); past it the ratio sequence is non-increasing.
    pub threshold: usize,
    /// `3^gamma` times the largest ratio over the checked nondegenerate
    /// ranks.
    pub constant_c: f64,
    /// `lambda_{checked_rank}`: the certificate speaks for diameters below
    /// this scale. May underflow to 0.0 at very deep ranks; see `ln_delta`.
    pub delta: f64,
    /// Natural log of `delta`; `None` when the scale is exactly zero
    /// (degenerate families with a full deletion).
    pub ln_delta: Option<f64>,
    pub checked_rank: usize,
}

/// Data outcome of a failed certification; not a program error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyFailure {
    pub gamma: f64,
    pub checked_rank: usize,
    pub reason: FailureReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    /// `2^{gamma-1} < (1-p_j)^gamma` never starts holding through the
    /// checked range: gamma sits too close to 1 for this sequence prefix.
    NoThreshold,
}

pub type CertifyOutcome = std::result::Result<RegularityCertificate, CertifyFailure>;

/// Scan ranks `1..=rank_max` and certify gamma-regularity.
///
/// Ranks whose interval length is exactly zero (possible only after a full
/// deletion `p_j = 1`, as in the q-orbit started at 1) carry an empty
/// interval family; they are excluded from the constant's supremum and the
/// certificate degenerates to `delta = 0`, a vacuously sound claim.
pub fn certify<S: Scalar>(
    seq: &DeletionSequence<S>,
    gamma: f64,
    rank_max: usize,
) -> Result<CertifyOutcome> {
    check_gamma(gamma)?;
    if rank_max == 0 {
        return Err(Error::OutOfRange {
            what: "rank_max",
            value: "0".into(),
            range: "n >= 1",
        });
    }
    let proportions = seq.prefix(rank_max)?;
    let mut ln_lambda = 0.0f64;
    let mut last_violation = 0usize;
    // Rank 0 ratio is 1 (ln = 0).
    let mut max_ln_ratio = 0.0f64;
    for (j, p) in proportions.iter().enumerate() {
        let j = j + 1;
        let one_minus_p = (S::one() - p.clone()).to_f64_lossy();
        ln_lambda += one_minus_p.ln() - LN_2;
        if (gamma - 1.0) * LN_2 >= gamma * one_minus_p.ln() {
            last_violation = j;
        }
        if ln_lambda > f64::NEG_INFINITY {
            let ln_ratio = -(j as f64) * LN_2 - gamma * ln_lambda;
            if ln_ratio > max_ln_ratio {
                max_ln_ratio = ln_ratio;
            }
        }
    }
    if last_violation == rank_max {
        return Ok(Err(CertifyFailure {
            gamma,
            checked_rank: rank_max,
            reason: FailureReason::NoThreshold,
        }));
    }
    let delta = ln_lambda.exp();
    Ok(Ok(RegularityCertificate {
        gamma,
        threshold: last_violation,
        constant_c: (gamma * LN_3 + max_ln_ratio).exp(),
        delta,
        ln_delta: (delta > 0.0).then_some(ln_lambda),
        checked_rank: rank_max,
    }))
}

/// Replay a certificate against its sequence and re-check every invariant.
pub fn validate_certificate<S: Scalar>(
    cert: &RegularityCertificate,
    seq: &DeletionSequence<S>,
) -> Result<std::result::Result<(), Vec<String>>> {
    check_gamma(cert.gamma)?;
    let proportions = seq.prefix(cert.checked_rank)?;
    let mut problems = Vec::new();
    let ln_cap = cert.constant_c.ln() - cert.gamma * LN_3;
    let mut ln_lambda = 0.0f64;
    let mut prev_ln_ratio = 0.0f64;
    for (j, p) in proportions.iter().enumerate() {
        let j = j + 1;
        let one_minus_p = (S::one() - p.clone()).to_f64_lossy();
        ln_lambda += one_minus_p.ln() - LN_2;
        let degenerate = ln_lambda == f64::NEG_INFINITY;
        let ln_ratio = -(j as f64) * LN_2 - cert.gamma * ln_lambda;
        if !degenerate && ln_ratio > ln_cap + 1e-9 {
            problems.push(format!("ratio at rank {j} exceeds constant_c / 3^gamma"));
        }
        if j > cert.threshold {
            if (cert.gamma - 1.0) * LN_2 >= cert.gamma * one_minus_p.ln() {
                problems.push(format!("tail inequality fails at rank {j}"));
            }
            if j > cert.threshold + 1 && !degenerate && ln_ratio > prev_ln_ratio + 1e-9 {
                problems.push(format!("ratio increases from rank {} to {j}", j - 1));
            }
        }
        prev_ln_ratio = ln_ratio;
    }
    let replay_delta = ln_lambda.exp();
    if (replay_delta - cert.delta).abs() > 1e-12 * cert.delta.max(1e-300) {
        problems.push("delta does not match lambda at checked_rank".into());
    }
    Ok(if problems.is_empty() { Ok(()) } else { Err(problems) })
}

/// The dimension bound a certificate witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionBound {
    /// `dim_H >= gamma` for the limit set carrying the natural measure.
    pub gamma: f64,
    /// Any cover by sets of diameter below `delta` has gamma-volume at
    /// least this much: `sum |U_i|^gamma >= 1/c`.
    pub cover_mass_floor: f64,
}

pub fn dimension_lower_bound(cert: &RegularityCertificate) -> DimensionBound {
    DimensionBound {
        gamma: cert.gamma,
        cover_mass_floor: cert.constant_c.recip(),
    }
}
