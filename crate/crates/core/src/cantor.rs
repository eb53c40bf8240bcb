//! Two-branch Cantor families driven by a sequence of deletion proportions.
//!
//! Rank-`n` intervals are the 2^n closed intervals left after `n` central
//! deletions; the deletion at step `j` removes the closed central part of
//! relative length `p_j` from each interval. Deleted central parts are
//! treated as closed, so gap endpoints do not survive; the surviving
//! children are the complementary half-open pieces and the outer endpoints
//! 0 and 1 survive every rank (for proportions below 1).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::q_raw;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Deletion proportions `p_1, p_2, ...` defining a Cantor family.
#[derive(Debug, Clone, PartialEq)]
pub enum DeletionSequence<S: Scalar> {
    /// Finite explicit list, 1-based: `list[0]` is `p_1`.
    Explicit(Vec<S>),
    /// The same proportion at every rank.
    Constant(S),
    /// `p_n = q^{n-1}(p_0)` with `q(p) = p/(1+p)`.
    QOrbit(S),
}

impl<S: Scalar> DeletionSequence<S> {
    pub fn explicit(list: Vec<S>) -> Result<Self> {
        for (i, p) in list.iter().enumerate() {
            check_proportion(p, i + 1, false)?;
        }
        Ok(Self::Explicit(list))
    }

    pub fn constant(p: S) -> Result<Self> {
        check_proportion(&p, 1, false)?;
        Ok(Self::Constant(p))
    }

    /// `p0 = 1` is admitted: its orbit `(1, 1/2, 1/3, ...)` is the
    /// componentwise majorant of every other q-orbit, at the price of a
    /// degenerate first deletion that removes the whole interval.
    pub fn q_orbit(p0: S) -> Result<Self> {
        check_proportion(&p0, 1, true)?;
        Ok(Self::QOrbit(p0))
    }

    /// Iterator over `p_1, p_2, ...` (finite only for `Explicit`).
    pub fn proportions(&self) -> Proportions<'_, S> {
        Proportions { seq: self, index: 0, orbit: None }
    }

    /// The proportion `p_n` (1-based).
    pub fn proportion(&self, n: usize) -> Result<S> {
        if n == 0 {
            return Err(Error::OutOfRange {
                what: "proportion index",
                value: "0".into(),
                range: "n >= 1",
            });
        }
        self.proportions().nth(n - 1).ok_or_else(|| self.too_short(n))
    }

    /// First `n` proportions, or an error if the sequence is shorter.
    pub fn prefix(&self, n: usize) -> Result<Vec<S>> {
        let out: Vec<S> = self.proportions().take(n).collect();
        if out.len() < n {
            return Err(self.too_short(n));
        }
        Ok(out)
    }

    fn too_short(&self, index: usize) -> Error {
        let len = match self {
            Self::Explicit(list) => list.len(),
            _ => usize::MAX,
        };
        Error::SequenceTooShort { index, len }
    }
}

fn check_proportion<S: Scalar>(p: &S, index: usize, allow_one: bool) -> Result<()> {
    let ok = p > &S::zero() && (*p < S::one() || (allow_one && *p == S::one()));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidProportion {
            index,
            value: p.to_string(),
            range: if allow_one { "(0, 1]" } else { "(0, 1)" },
        })
    }
}

pub struct Proportions<'a, S: Scalar> {
    seq: &'a DeletionSequence<S>,
    index: usize,
    orbit: Option<S>,
}

impl<S: Scalar> Iterator for Proportions<'_, S> {
    type Item = S;

    fn next(&mut self) -> Option<S> {
        self.index += 1;
        match self.seq {
            DeletionSequence::Explicit(list) => list.get(self.index - 1).cloned(),
            DeletionSequence::Constant(p) => Some(p.clone()),
            DeletionSequence::QOrbit(p0) => {
                let next = match self.orbit.take() {
                    None => p0.clone(),
                    Some(prev) => q_raw(prev),
                };
                self.orbit = Some(next.clone());
                Some(next)
            }
        }
    }
}

/// `lambda_n`: the common length of every rank-`n` interval,
/// `prod_{j<=n} (1 - p_j)/2`.
pub fn interval_length<S: Scalar>(seq: &DeletionSequence<S>, n: usize) -> Result<S> {
    let mut acc = S::one();
    for p in seq.prefix(n)? {
        acc = acc * (S::one() - p).half();
    }
    Ok(acc)
}

/// Natural log of `lambda_n`, summed in f64 so deep ranks (past f64
/// underflow) stay usable. `-inf` when some `p_j = 1`.
pub fn ln_interval_length<S: Scalar>(seq: &DeletionSequence<S>, n: usize) -> Result<f64> {
    let mut acc = 0.0f64;
    for p in seq.prefix(n)? {
        acc += (S::one() - p).to_f64_lossy().ln() - std::f64::consts::LN_2;
    }
    Ok(acc)
}

/// Lebesgue measure of the union of rank-`n` intervals,
/// `prod_{j<=n} (1 - p_j) = 2^n lambda_n`.
pub fn survivor_measure<S: Scalar>(seq: &DeletionSequence<S>, n: usize) -> Result<S> {
    let mut acc = S::one();
    for p in seq.prefix(n)? {
        acc = acc * (S::one() - p);
    }
    Ok(acc)
}

/// Left/right child selector; `Left` keeps the low end of the parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn bit(self) -> u8 {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

/// Bit-string address of a rank interval (0 = left child, 1 = right child).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Address {
    bits: Vec<u8>,
}

impl Address {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        assert!(bits.iter().all(|b| *b <= 1), "address bits must be 0 or 1");
        Self { bits: bits.to_vec() }
    }

    pub fn push(&mut self, side: Side) {
        self.bits.push(side.bit());
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// One of the 2^n closed intervals of rank `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInterval<S: Scalar> {
    pub rank: u32,
    pub address: Address,
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> RankInterval<S> {
    pub fn unit() -> Self {
        Self {
            rank: 0,
            address: Address::root(),
            lo: S::zero(),
            hi: S::one(),
        }
    }

    pub fn length(&self) -> S {
        self.hi.clone() - self.lo.clone()
    }

    /// Child after deleting the closed central part of relative length
    /// `p_next`: side 0 keeps `[lo, lo + L(1-p)/2]`, side 1 keeps
    /// `[hi - L(1-p)/2, hi]`.
    pub fn child(&self, p_next: &S, side: Side) -> Self {
        let keep = (self.length() * (S::one() - p_next.clone())).half();
        let (lo, hi) = match side {
            Side::Left => (self.lo.clone(), self.lo.clone() + keep),
            Side::Right => (self.hi.clone() - keep, self.hi.clone()),
        };
        let mut address = self.address.clone();
        address.push(side);
        Self { rank: self.rank + 1, address, lo, hi }
    }

    /// Natural measure of a rank-`n` interval: `2^{-n}`.
    pub fn mu_measure(&self) -> S {
        S::from_ratio(1, 2).powu(self.rank)
    }
}

/// Result of descending `n` ranks toward a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    /// The point lies in the rank-`n` interval with this address.
    Address(Address),
    /// The point fell into the closed central gap deleted at this rank.
    Deleted { rank: u32 },
}

impl Location {
    pub fn is_address(&self) -> bool {
        matches!(self, Location::Address(_))
    }
}

/// Deterministic descent of `x` through `n` deletion steps.
///
/// Gap membership is closed on both sides, matching the dynamics module's
/// escape rule, so a point equal to a gap endpoint is reported `Deleted`.
pub fn locate<S: Scalar>(seq: &DeletionSequence<S>, x: &S, n: usize) -> Result<Location> {
    if *x < S::zero() || *x > S::one() {
        return Err(Error::OutOfRange {
            what: "locate point",
            value: x.to_string(),
            range: "[0, 1]",
        });
    }
    let mut lo = S::zero();
    let mut hi = S::one();
    let mut address = Address::root();
    let mut proportions = seq.proportions();
    for rank in 1..=n {
        let p = proportions.next().ok_or_else(|| seq.too_short(rank))?;
        let keep = ((hi.clone() - lo.clone()) * (S::one() - p)).half();
        let gap_lo = lo.clone() + keep.clone();
        let gap_hi = hi.clone() - keep;
        if *x < gap_lo {
            address.push(Side::Left);
            hi = gap_lo;
        } else if *x > gap_hi {
            address.push(Side::Right);
            lo = gap_hi;
        } else {
            return Ok(Location::Deleted { rank: rank as u32 });
        }
    }
    Ok(Location::Address(address))
}

/// A Cantor family truncated at a fixed rank.
#[derive(Debug, Clone)]
pub struct CantorApprox<S: Scalar> {
    pub sequence: DeletionSequence<S>,
    pub rank: usize,
}

impl<S: Scalar> CantorApprox<S> {
    pub fn new(sequence: DeletionSequence<S>, rank: usize) -> Result<Self> {
        // Validate the prefix up front so iteration cannot fail midway.
        sequence.prefix(rank)?;
        Ok(Self { sequence, rank })
    }

    /// Streamed rank intervals in address order.
    pub fn intervals(&self) -> Result<RankIntervals<S>> {
        enumerate_rank(&self.sequence, self.rank)
    }

    pub fn survivor_measure(&self) -> Result<S> {
        survivor_measure(&self.sequence, self.rank)
    }

    pub fn interval_length(&self) -> Result<S> {
        interval_length(&self.sequence, self.rank)
    }
}

/// Streaming depth-first enumeration of the 2^n rank-`n` intervals in
/// address order; memory stays O(n).
pub fn enumerate_rank<S: Scalar>(
    seq: &DeletionSequence<S>,
    n: usize,
) -> Result<RankIntervals<S>> {
    let proportions = seq.prefix(n)?;
    Ok(RankIntervals {
        proportions,
        path: Vec::new(),
        root: RankInterval::unit(),
        started: false,
        done: false,
    })
}

pub struct RankIntervals<S: Scalar> {
    proportions: Vec<S>,
    path: Vec<RankInterval<S>>,
    root: RankInterval<S>,
    started: bool,
    done: bool,
}

impl<S: Scalar> RankIntervals<S> {
    fn descend_left(&mut self) {
        while self.path.len() < self.proportions.len() {
            let parent = self.path.last().unwrap_or(&self.root);
            let p = &self.proportions[self.path.len()];
            let child = parent.child(p, Side::Left);
            self.path.push(child);
        }
    }
}

impl<S: Scalar> Iterator for RankIntervals<S> {
    type Item = RankInterval<S>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.descend_left();
            if self.proportions.is_empty() {
                self.done = true;
                return Some(self.root.clone());
            }
            return Some(self.path.last().unwrap().clone());
        }
        // Pop trailing right-children, then flip the deepest left-child.
        while let Some(leaf) = self.path.last() {
            if *leaf.address.bits().last().unwrap() == 1 {
                self.path.pop();
            } else {
                break;
            }
        }
        let Some(left) = self.path.pop() else {
            self.done = true;
            return None;
        };
        let parent = self.path.last().unwrap_or(&self.root);
        let p = &self.proportions[self.path.len()];
        debug_assert_eq!(left.rank as usize, self.path.len() + 1);
        self.path.push(parent.child(p, Side::Right));
        self.descend_left();
        Some(self.path.last().unwrap().clone())
    }
}

/// Verification that a q-orbit falls down the harmonic ladder: once
/// `1/(n0+1) < p_0 <= 1/n0`, each iterate satisfies
/// `1/(n0+k+1) < q^k(p_0) <= 1/(n0+k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BracketReport {
    pub n0: u64,
    pub checked_k: u64,
    pub violations: Vec<u64>,
}

pub fn check_class_p<S: Scalar>(p0: &S, k_max: u64) -> Result<BracketReport> {
    if *p0 <= S::zero() || *p0 > S::one() {
        return Err(Error::OutOfRange {
            what: "q-orbit start",
            value: p0.to_string(),
            range: "(0, 1]",
        });
    }
    // Float guess for 1/p0, then exact adjustment.
    let mut n0 = (1.0 / p0.to_f64_lossy()).floor().max(1.0) as u64;
    loop {
        let upper_ok = *p0 <= S::from_ratio(1, n0 as i64);
        let lower_ok = S::from_ratio(1, n0 as i64 + 1) < *p0;
        if upper_ok && lower_ok {
            break;
        }
        if !upper_ok {
            n0 += 1;
        } else {
            n0 -= 1;
        }
    }
    let mut violations = Vec::new();
    let mut p = p0.clone();
    for k in 1..=k_max {
        p = q_raw(p);
        let m = n0 + k;
        let in_bracket = S::from_ratio(1, m as i64 + 1) < p && p <= S::from_ratio(1, m as i64);
        if !in_bracket {
            violations.push(k);
        }
    }
    Ok(BracketReport { n0, checked_k: k_max, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn exact(n: i64, d: i64) -> Exact {
        Exact::from_ratio(n, d)
    }

    fn middle_thirds() -> DeletionSequence<Exact> {
        DeletionSequence::constant(exact(1, 3)).unwrap()
    }

    fn half_orbit() -> DeletionSequence<Exact> {
        DeletionSequence::q_orbit(exact(1, 2)).unwrap()
    }

    #[test]
    fn interval_length_examples() {
        assert_eq!(interval_length(&middle_thirds(), 2).unwrap(), exact(1, 9));
        assert_eq!(interval_length(&middle_thirds(), 0).unwrap(), Exact::one());
        // q-orbit of 1/2: lambda_n = 1 / (2^n (n+1)), checked against the
        // direct product the implementation computes.
        assert_eq!(interval_length(&half_orbit(), 3).unwrap(), exact(1, 32));
        for n in 0..=100usize {
            let closed_form = Exact::new(
                1.into(),
                (num_bigint::BigInt::from(1) << n) * num_bigint::BigInt::from(n as i64 + 1),
            );
            assert_eq!(interval_length(&half_orbit(), n).unwrap(), closed_form);
        }
    }

    #[test]
    fn explicit_too_short_is_an_error() {
        let seq = DeletionSequence::explicit(vec![exact(1, 4), exact(1, 5)]).unwrap();
        // (3/4)/2 * (4/5)/2 = 3/20.
        assert_eq!(interval_length(&seq, 2).unwrap(), exact(3, 20));
        assert!(matches!(
            interval_length(&seq, 3),
            Err(Error::SequenceTooShort { index: 3, len: 2 })
        ));
    }

    #[test]
    fn survivor_measure_examples() {
        assert_eq!(survivor_measure(&middle_thirds(), 3).unwrap(), exact(8, 27));
        assert_eq!(survivor_measure(&middle_thirds(), 0).unwrap(), Exact::one());
        for n in 0..=1000usize {
            assert_eq!(
                survivor_measure(&half_orbit(), n).unwrap() * exact(n as i64 + 1, 1),
                Exact::one(),
                "telescoping fails at n={n}"
            );
        }
    }

    #[test]
    fn length_recurrence_and_survivor_relation() {
        let seq = half_orbit();
        let mut prev = Exact::one();
        for n in 1..=60usize {
            let lam = interval_length(&seq, n).unwrap();
            let p = seq.proportion(n).unwrap();
            assert_eq!(lam, prev.clone() * (Exact::one() - p).half());
            assert!(lam.clone() / prev < exact(1, 2) + Exact::zero());
            assert_eq!(
                survivor_measure(&seq, n).unwrap(),
                lam.clone() * exact(2, 1).powu(n as u32)
            );
            prev = lam;
        }
    }

    #[test]
    fn length_ratio_eventually_below_three() {
        // lambda_n / lambda_{n+1} = 2 / (1 - p_{n+1}) < 3 once p_{n+1} < 1/3.
        let seq = half_orbit();
        let proportions = seq.prefix(1001).unwrap();
        let first_good = proportions
            .iter()
            .position(|p| *p < exact(1, 3))
            .expect("q-orbit proportions tend to zero");
        assert!(first_good <= 2);
        for (i, p) in proportions.iter().enumerate().skip(first_good) {
            let ratio = exact(2, 1) / (Exact::one() - p.clone());
            assert!(ratio < exact(3, 1), "ratio >= 3 at n={}", i);
        }
    }

    #[test]
    fn ln_interval_length_tracks_exact_values() {
        let seq = half_orbit();
        for n in [1usize, 10, 100, 1000] {
            let ln = ln_interval_length(&seq, n).unwrap();
            let expected = -(n as f64) * std::f64::consts::LN_2 - ((n + 1) as f64).ln();
            assert!((ln - expected).abs() < 1e-9, "n={n}: {ln} vs {expected}");
        }
    }

    #[test]
    fn child_endpoints_examples() {
        let unit = RankInterval::<Exact>::unit();
        let right = unit.child(&exact(1, 3), Side::Right);
        assert_eq!((right.lo.clone(), right.hi.clone()), (exact(2, 3), exact(1, 1)));
        let left = unit.child(&exact(1, 2), Side::Left);
        assert_eq!((left.lo.clone(), left.hi.clone()), (exact(0, 1), exact(1, 4)));
        let deeper = right.child(&exact(1, 3), Side::Left);
        assert_eq!((deeper.lo.clone(), deeper.hi.clone()), (exact(2, 3), exact(7, 9)));
        assert_eq!(deeper.address.to_string(), "10");
        assert_eq!(deeper.rank, 2);
    }

    #[test]
    fn locate_center_and_left_endpoint() {
        for seq in [middle_thirds(), half_orbit()] {
            assert_eq!(
                locate(&seq, &exact(1, 2), 4).unwrap(),
                Location::Deleted { rank: 1 }
            );
            match locate(&seq, &Exact::zero(), 7).unwrap() {
                Location::Address(addr) => assert_eq!(addr.to_string(), "0000000"),
                other => panic!("expected address, got {other:?}"),
            }
        }
        assert!(locate(&middle_thirds(), &exact(-1, 2), 3).is_err());
    }

    /// Base-3 digits of a rational in [0,1): the independent oracle for
    /// middle-thirds addresses (digit 0 -> bit 0, digit 2 -> bit 1,
    /// digit 1 -> deleted).
    fn base3_oracle(mut num: i64, den: i64, n: usize) -> Location {
        let mut addr = Address::root();
        for rank in 1..=n {
            num *= 3;
            let digit = num / den;
            num -= digit * den;
            match digit {
                0 => addr.push(Side::Left),
                2 => addr.push(Side::Right),
                _ => return Location::Deleted { rank: rank as u32 },
            }
        }
        Location::Address(addr)
    }

    #[test]
    fn locate_quarter_in_middle_thirds() {
        let got = locate(&middle_thirds(), &exact(1, 4), 6).unwrap();
        assert_eq!(got, base3_oracle(1, 4, 6));
        match got {
            Location::Address(addr) => assert_eq!(addr.to_string(), "010101"),
            other => panic!("expected address, got {other:?}"),
        }
        // A few more rationals against the digit oracle.
        for (num, den) in [(1i64, 10), (3, 10), (7, 9), (1, 13), (12, 13)] {
            let got = locate(&middle_thirds(), &exact(num, den), 12).unwrap();
            assert_eq!(got, base3_oracle(num, den, 12), "x = {num}/{den}");
        }
    }

    #[test]
    fn mu_measure_examples() {
        let unit = RankInterval::<Exact>::unit();
        assert_eq!(unit.mu_measure(), Exact::one());
        let mut iv = unit;
        for _ in 0..5 {
            iv = iv.child(&exact(1, 3), Side::Right);
        }
        assert_eq!(iv.mu_measure(), exact(1, 32));
        let total: Exact = enumerate_rank(&middle_thirds(), 7)
            .unwrap()
            .map(|iv| iv.mu_measure())
            .sum();
        assert_eq!(total, Exact::one());
    }

    #[test]
    fn enumeration_is_ordered_disjoint_and_complete() {
        for (seq, n) in [(middle_thirds(), 9usize), (half_orbit(), 9)] {
            let intervals: Vec<_> = enumerate_rank(&seq, n).unwrap().collect();
            assert_eq!(intervals.len(), 1 << n);
            let lam = interval_length(&seq, n).unwrap();
            let mut total = Exact::zero();
            for (i, iv) in intervals.iter().enumerate() {
                assert_eq!(iv.length(), lam);
                assert_eq!(iv.rank as usize, n);
                // Address order means strictly increasing endpoints with gaps.
                if i > 0 {
                    assert!(intervals[i - 1].hi < iv.lo);
                }
                total = total + iv.length();
            }
            assert_eq!(total, survivor_measure(&seq, n).unwrap());
        }
    }

    #[test]
    fn enumeration_float_total_length_error_is_tiny() {
        let seq = DeletionSequence::<f64>::q_orbit(0.5).unwrap();
        let n = 14;
        let total: f64 = enumerate_rank(&seq, n).unwrap().map(|iv| iv.length()).sum();
        let expected = survivor_measure(&seq, n).unwrap();
        assert!((total - expected).abs() <= 2f64.powi(-40));
    }

    #[test]
    fn children_sit_inside_parent() {
        let seq = half_orbit();
        let parents: Vec<_> = enumerate_rank(&seq, 6).unwrap().collect();
        let p7 = seq.proportion(7).unwrap();
        for parent in parents {
            let l = parent.child(&p7, Side::Left);
            let r = parent.child(&p7, Side::Right);
            assert!(parent.lo <= l.lo && l.hi < r.lo && r.hi <= parent.hi);
        }
    }

    #[test]
    fn locate_classifies_interval_endpoints_per_closed_gap_rule() {
        // Under closed gaps only the all-left interval keeps its left
        // endpoint and only the all-right interval keeps its right endpoint;
        // every other endpoint was the edge of some deleted gap and locates
        // as Deleted at the rank where that gap was cut.
        let seq = middle_thirds();
        let n = 6usize;
        for iv in enumerate_rank(&seq, n).unwrap() {
            let bits = iv.address.bits().to_vec();
            let lo_loc = locate(&seq, &iv.lo, n).unwrap();
            if bits.iter().all(|b| *b == 0) {
                assert_eq!(lo_loc, Location::Address(iv.address.clone()));
            } else {
                let cut = bits.iter().rposition(|b| *b == 1).unwrap() as u32 + 1;
                assert_eq!(lo_loc, Location::Deleted { rank: cut }, "{}", iv.address);
            }
            let hi_loc = locate(&seq, &iv.hi, n).unwrap();
            if bits.iter().all(|b| *b == 1) {
                assert_eq!(hi_loc, Location::Address(iv.address.clone()));
            } else {
                let cut = bits.iter().rposition(|b| *b == 0).unwrap() as u32 + 1;
                assert_eq!(hi_loc, Location::Deleted { rank: cut }, "{}", iv.address);
            }
            // Interior points always locate to the interval's address.
            let mid = (iv.lo.clone() + iv.hi.clone()).half();
            assert_eq!(locate(&seq, &mid, n).unwrap(), Location::Address(iv.address));
        }
    }

    #[test]
    fn approximation_bundles_sequence_and_rank() {
        let approx = CantorApprox::new(half_orbit(), 6).unwrap();
        assert_eq!(approx.interval_length().unwrap(), exact(1, 448));
        assert_eq!(approx.survivor_measure().unwrap(), exact(1, 7));
        let total: Exact = approx.intervals().unwrap().map(|iv| iv.length()).sum();
        assert_eq!(total, exact(1, 7));
        // Construction validates the prefix up front.
        let short = DeletionSequence::explicit(vec![exact(1, 3)]).unwrap();
        assert!(CantorApprox::new(short, 2).is_err());
    }

    #[test]
    fn bracket_report_examples() {
        // p0 = 1: orbit (1, 1/2, 1/3, 1/4, 1/5, 1/6).
        let report = check_class_p(&Exact::one(), 5).unwrap();
        assert_eq!(report.n0, 1);
        assert!(report.violations.is_empty());
        let seq = DeletionSequence::q_orbit(Exact::one()).unwrap();
        let orbit = seq.prefix(6).unwrap();
        let expected: Vec<Exact> = (1..=6).map(|d| exact(1, d)).collect();
        assert_eq!(orbit, expected);

        // n0 = 2 since 1/3 < 1/2 <= 1/2, and q^3(1/2) = 1/5 sits in
        // (1/(2+3+1), 1/(2+3)] = (1/6, 1/5].
        let mut p = exact(1, 2);
        for _ in 0..3 {
            p = q_raw(p);
        }
        assert_eq!(p, exact(1, 5));
        let report = check_class_p(&exact(1, 2), 3).unwrap();
        assert_eq!(report.n0, 2);
        assert!(report.violations.is_empty());

        // p0 = 0.4 brackets at n0 = 2 and stays clean for 100 iterates.
        let report = check_class_p(&exact(2, 5), 100).unwrap();
        assert_eq!(report.n0, 2);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn qorbit_values_strictly_decrease() {
        let seq = half_orbit();
        let ps = seq.prefix(200).unwrap();
        for w in ps.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn degenerate_full_deletion_zeroes_lengths() {
        let seq = DeletionSequence::q_orbit(Exact::one()).unwrap();
        assert_eq!(interval_length(&seq, 1).unwrap(), Exact::zero());
        assert_eq!(survivor_measure(&seq, 5).unwrap(), Exact::zero());
        // Everything, endpoints included, is deleted at rank 1.
        assert_eq!(
            locate(&seq, &Exact::zero(), 3).unwrap(),
            Location::Deleted { rank: 1 }
        );
    }

    #[test]
    fn constructor_rejects_bad_proportions() {
        assert!(DeletionSequence::constant(exact(1, 1)).is_err());
        assert!(DeletionSequence::constant(exact(0, 1)).is_err());
        assert!(DeletionSequence::explicit(vec![exact(1, 3), exact(3, 2)]).is_err());
        assert!(DeletionSequence::q_orbit(exact(1, 1)).is_ok());
        assert!(DeletionSequence::q_orbit(exact(5, 4)).is_err());
    }

    proptest! {
        #[test]
        fn prop_children_disjoint_and_contained(num in 1i64..99, side_bits in proptest::collection::vec(any::<bool>(), 1..10)) {
            let p = exact(num, 100);
            let mut iv = RankInterval::<Exact>::unit();
            for bit in side_bits {
                let l = iv.child(&p, Side::Left);
                let r = iv.child(&p, Side::Right);
                prop_assert!(iv.lo <= l.lo && l.hi < r.lo && r.hi <= iv.hi);
                prop_assert_eq!(l.length(), r.length());
                iv = if bit { r } else { l };
            }
        }

        #[test]
        fn prop_locate_agrees_with_enumeration(num in 1i64..=9999, n in 1usize..=8) {
            let seq = half_orbit();
            let x = exact(num, 10000);
            let loc = locate(&seq, &x, n).unwrap();
            let containing = enumerate_rank(&seq, n).unwrap()
                .find(|iv| iv.lo <= x && x <= iv.hi);
            match (loc, containing) {
                (Location::Address(addr), Some(iv)) => prop_assert_eq!(addr, iv.address),
                (Location::Deleted { .. }, None) => {},
                (Location::Deleted { rank }, Some(iv)) => {
                    // Closed-gap rule: endpoints shared with a gap count as deleted.
                    prop_assert!(x == iv.lo || x == iv.hi, "rank {} vs {}", rank, iv.address);
                }
                (Location::Address(addr), None) => {
                    return Err(TestCaseError::fail(format!("address {addr} but no interval")));
                }
            }
        }
    }
}
