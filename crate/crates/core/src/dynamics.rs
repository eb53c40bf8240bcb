//! The sieving dynamics: the level map `q`, the piecewise-affine square map
//! that deletes each level's central part, and the cube return map that adds
//! a thirds-contracted `h` coordinate.
//!
//! Branch conventions match the cantor module exactly: the central part
//! `[(1-p)/2, (1+p)/2]` is closed and escapes to the sink, the side parts
//! are half-open and stretch affinely onto the next level `q(p)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::{Address, Side};
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::scalar::Scalar;

/// `q(p) = p / (1 + p)`, so `q(1/n) = 1/(n+1)`; callers guarantee range.
pub(crate) fn q_raw<S: Scalar>(p: S) -> S {
    p.clone() / (S::one() + p)
}

/// `q(p) = p / (1 + p)` on `[0, 1]`: strictly increasing, fixes 0, and
/// `q(p) < p` for positive `p`.
pub fn q_map<S: Scalar>(p: &S) -> Result<S> {
    if *p < S::zero() || *p > S::one() {
        return Err(Error::OutOfRange {
            what: "q argument",
            value: p.to_string(),
            range: "[0, 1]",
        });
    }
    Ok(q_raw(p.clone()))
}

/// A point of the square: horizontal coordinate and level.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveState<S: Scalar> {
    pub x: S,
    pub p: S,
}

impl<S: Scalar> SieveState<S> {
    pub fn new(x: S, p: S) -> Result<Self> {
        check_unit("x", &x)?;
        check_unit("p", &p)?;
        Ok(Self { x, p })
    }
}

/// A point of the cube: square coordinates plus the glued `h` coordinate.
/// Levels are restricted to `p <= 1/2` here.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnState<S: Scalar> {
    pub x: S,
    pub p: S,
    pub h: S,
}

impl<S: Scalar> ReturnState<S> {
    pub fn new(x: S, p: S, h: S) -> Result<Self> {
        check_unit("x", &x)?;
        check_unit("h", &h)?;
        if p < S::zero() || p > S::from_ratio(1, 2) {
            return Err(Error::OutOfRange {
                what: "p",
                value: p.to_string(),
                range: "[0, 1/2]",
            });
        }
        Ok(Self { x, p, h })
    }
}

fn check_unit<S: Scalar>(what: &'static str, v: &S) -> Result<()> {
    if *v < S::zero() || *v > S::one() {
        return Err(Error::OutOfRange {
            what,
            value: v.to_string(),
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// One application of a map: either thrown to the sink or still in play.
#[derive(Debug, Clone, PartialEq)]
pub enum Step<T> {
    Escaped,
    Alive(T),
}

enum Branch<S: Scalar> {
    Escaped,
    Taken(Side, SieveState<S>),
}

/// Shared x/p branching of the square and cube maps. For `p = 1` the whole
/// level escapes; for `p = 0` the central part degenerates to `x = 1/2`.
fn branch_step<S: Scalar>(x: &S, p: &S) -> Branch<S> {
    let one = S::one();
    if *p == one {
        return Branch::Escaped;
    }
    let keep = (one.clone() - p.clone()).half();
    let gap_hi = one - keep.clone();
    if *x < keep {
        Branch::Taken(
            Side::Left,
            SieveState { x: x.clone() / keep, p: q_raw(p.clone()) },
        )
    } else if *x > gap_hi {
        Branch::Taken(
            Side::Right,
            SieveState { x: (x.clone() - gap_hi) / keep, p: q_raw(p.clone()) },
        )
    } else {
        Branch::Escaped
    }
}

/// The square map: stretch the side parts onto the next level, send the
/// closed central part (and the whole `p = 1` level) to the sink.
pub fn sieve_step<S: Scalar>(s: &SieveState<S>) -> Step<SieveState<S>> {
    match branch_step(&s.x, &s.p) {
        Branch::Escaped => Step::Escaped,
        Branch::Taken(_, next) => Step::Alive(next),
    }
}

/// The cube map: x/p branching identical to [`sieve_step`]; the left branch
/// contracts `h -> h/3`, the right branch `h -> 1 - h/3`.
pub fn return_step<S: Scalar>(s: &ReturnState<S>) -> Step<ReturnState<S>> {
    match branch_step(&s.x, &s.p) {
        Branch::Escaped => Step::Escaped,
        Branch::Taken(side, next) => {
            let third = s.h.clone() / S::from_ratio(3, 1);
            let h = match side {
                Side::Left => third,
                Side::Right => S::one() - third,
            };
            Step::Alive(ReturnState { x: next.x, p: next.p, h })
        }
    }
}

/// Finite-depth orbit classification.
#[derive(Debug, Clone, PartialEq)]
pub enum OrbitOutcome<T> {
    /// First landed in a central part at this step (1-based).
    Escaped { step: u32 },
    /// Still alive after the full depth; carries the final state.
    Alive { state: T },
}

impl<T> OrbitOutcome<T> {
    pub fn is_alive(&self) -> bool {
        matches!(self, OrbitOutcome::Alive { .. })
    }

    pub fn escape_step(&self) -> Option<u32> {
        match self {
            OrbitOutcome::Escaped { step } => Some(*step),
            OrbitOutcome::Alive { .. } => None,
        }
    }
}

pub fn classify_sieve<S: Scalar>(s0: &SieveState<S>, depth: usize) -> OrbitOutcome<SieveState<S>> {
    let mut state = s0.clone();
    for step in 1..=depth {
        match sieve_step(&state) {
            Step::Escaped => return OrbitOutcome::Escaped { step: step as u32 },
            Step::Alive(next) => state = next,
        }
    }
    OrbitOutcome::Alive { state }
}

pub fn classify_return<S: Scalar>(
    s0: &ReturnState<S>,
    depth: usize,
) -> OrbitOutcome<ReturnState<S>> {
    classify_return_traced(s0, depth).0
}

/// Like [`classify_return`], also reporting the branch word taken (one bit
/// per completed step).
pub fn classify_return_traced<S: Scalar>(
    s0: &ReturnState<S>,
    depth: usize,
) -> (OrbitOutcome<ReturnState<S>>, Address) {
    let mut state = s0.clone();
    let mut word = Address::root();
    for step in 1..=depth {
        match branch_step(&state.x, &state.p) {
            Branch::Escaped => return (OrbitOutcome::Escaped { step: step as u32 }, word),
            Branch::Taken(side, next) => {
                let third = state.h.clone() / S::from_ratio(3, 1);
                let h = match side {
                    Side::Left => third,
                    Side::Right => S::one() - third,
                };
                state = ReturnState { x: next.x, p: next.p, h };
                word.push(side);
            }
        }
    }
    (OrbitOutcome::Alive { state }, word)
}

/// Which phase space a Monte Carlo run samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Sieve,
    Return,
}

/// Escape-time tally of a seeded uniform sample at a fixed level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeTimeStats {
    pub map: MapKind,
    pub p0: f64,
    pub depth: usize,
    pub samples: u64,
    /// `escape_counts[t]` = samples first escaping at step `t` (index 0 unused).
    pub escape_counts: Vec<u64>,
    pub alive: u64,
}

impl EscapeTimeStats {
    /// Samples still alive after `n <= depth` steps.
    pub fn survivors_at(&self, n: usize) -> u64 {
        let escaped: u64 = self.escape_counts[1..=n].iter().sum();
        self.samples - escaped
    }

    pub fn survivor_fraction(&self) -> f64 {
        self.alive as f64 / self.samples as f64
    }

    /// Binomial standard error of the survivor fraction.
    pub fn std_error(&self) -> f64 {
        let f = self.survivor_fraction();
        (f * (1.0 - f) / self.samples as f64).sqrt()
    }
}

/// Uniform samples `x` (and `h` for the cube map) at level `p0`, classified
/// to `depth`. The expected survivor fraction is the survivor measure of the
/// q-orbit sequence started at `p0`.
pub fn escape_time_mc(
    map: MapKind,
    p0: f64,
    depth: usize,
    samples: u64,
    seed: u64,
) -> Result<EscapeTimeStats> {
    if samples == 0 {
        return Err(Error::EmptyInput("samples"));
    }
    if depth == 0 {
        return Err(Error::OutOfRange {
            what: "depth",
            value: "0".into(),
            range: "n >= 1",
        });
    }
    match map {
        MapKind::Sieve => check_unit("p0", &p0)?,
        MapKind::Return => {
            ReturnState::new(0.0, p0, 0.0)?;
        }
    }
    let rng = CounterRng::new(seed);
    let (escape_counts, alive) = (0..samples)
        .into_par_iter()
        .fold(
            || (vec![0u64; depth + 1], 0u64),
            |(mut counts, mut alive), i| {
                let mut stream = rng.stream(i);
                let x: f64 = stream.gen();
                let outcome = match map {
                    MapKind::Sieve => {
                        classify_sieve(&SieveState { x, p: p0 }, depth).escape_step()
                    }
                    MapKind::Return => {
                        let h: f64 = stream.gen();
                        classify_return(&ReturnState { x, p: p0, h }, depth).escape_step()
                    }
                };
                match outcome {
                    Some(step) => counts[step as usize] += 1,
                    None => alive += 1,
                }
                (counts, alive)
            },
        )
        .reduce(
            || (vec![0u64; depth + 1], 0u64),
            |(mut ca, aa), (cb, ab)| {
                for (a, b) in ca.iter_mut().zip(cb) {
                    *a += b;
                }
                (ca, aa + ab)
            },
        );
    Ok(EscapeTimeStats { map, p0, depth, samples, escape_counts, alive })
}

/// Surviving fraction with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McFraction {
    pub fraction: f64,
    pub std_error: f64,
    pub survivors: u64,
    pub samples: u64,
}

pub fn survivor_fraction_mc(
    map: MapKind,
    p0: f64,
    depth: usize,
    samples: u64,
    seed: u64,
) -> Result<McFraction> {
    let stats = escape_time_mc(map, p0, depth, samples, seed)?;
    Ok(McFraction {
        fraction: stats.survivor_fraction(),
        std_error: stats.std_error(),
        survivors: stats.alive,
        samples,
    })
}

/// The 2^n depth-`n` branch words paired with the image in `h` of the full
/// interval `[0, 1]` under that branch composition. Each image is one of the
/// middle-thirds rank-`n` intervals (length `3^{-n}`); the family does not
/// depend on the level, which only decides which words survivors realize.
pub fn survivor_h_cover<S: Scalar>(n: usize) -> Vec<(Address, (S, S))> {
    let mut out = Vec::with_capacity(1usize << n);
    let mut stack: Vec<(Address, (S, S))> =
        vec![(Address::root(), (S::zero(), S::one()))];
    // Depth-first in word order.
    while let Some((word, (lo, hi))) = stack.pop() {
        if word.len() == n {
            out.push((word, (lo, hi)));
            continue;
        }
        let three = S::from_ratio(3, 1);
        let left = (lo.clone() / three.clone(), hi.clone() / three.clone());
        let right = (S::one() - hi / three.clone(), S::one() - lo / three);
        let mut wl = word.clone();
        wl.push(Side::Left);
        let mut wr = word;
        wr.push(Side::Right);
        // Push right first so left pops first.
        stack.push((wr, right));
        stack.push((wl, left));
    }
    out
}
