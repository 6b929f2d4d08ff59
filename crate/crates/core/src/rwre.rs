//! Quenched random walks in a fixed environment, coupled pairs, and the
//! excursion/holding decomposition of their difference process.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{Cell, CrossingRow, Environment, RowSource};
use crate::error::{Error, Result};
use crate::rng::{domain, stream, Coins};

/// Stream for walker `walker` of replicate `replicate`.
pub fn walk_stream(seed: u64, replicate: u64, walker: u64) -> ChaCha8Rng {
    stream(seed, &[domain::WALK, replicate, walker])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkPath {
    pub start: (usize, i64),
    pub steps: Vec<i8>,
}

impl WalkPath {
    pub fn at_origin() -> Self {
        Self { start: (0, 0), steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `(t, y)` after each step, starting with the start point.
    pub fn positions(&self) -> Vec<(usize, i64)> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let (mut t, mut y) = self.start;
        out.push((t, y));
        for &s in &self.steps {
            t += 1;
            y += s as i64;
            out.push((t, y));
        }
        out
    }

    pub fn end(&self) -> (usize, i64) {
        let (t, y) = self.start;
        (t + self.steps.len(), y + self.steps.iter().map(|&s| s as i64).sum::<i64>())
    }
}

/// Step taken from a cell given a uniform draw `u ∈ [0, 1)`: up with
/// probability `e+/v`, down with probability `e-/v`.
#[inline]
pub fn step_in_cell(cell: Cell, u: f64) -> Option<i8> {
    let v = cell.occupancy();
    if v == 0 {
        None
    } else if u * (v as f64) < cell.plus as f64 {
        Some(1)
    } else {
        Some(-1)
    }
}

pub fn walk_step(env: &Environment, (t, y): (usize, i64), u: f64) -> Result<(usize, i64)> {
    let cell = env.cell(t, y)?;
    let s = step_in_cell(cell, u).ok_or(Error::DeadCell { t, y })?;
    Ok((t + 1, y + s as i64))
}

fn row_step<R: Rng>(row: &CrossingRow, y: i64, rng: &mut R) -> Result<(Cell, i8)> {
    let t = row.t();
    let cell = row.cell(y)?;
    let s = step_in_cell(cell, rng.random::<f64>()).ok_or(Error::DeadCell { t, y })?;
    Ok((cell, s))
}

/// Walk from `(0, 0)` for `n` steps, reading rows from `source`.
pub fn sample_walk_from<S: RowSource + ?Sized, R: Rng>(source: &mut S, n: usize, rng: &mut R) -> Result<WalkPath> {
    if n > source.horizon() {
        return Err(Error::BeyondHorizon { requested: n, horizon: source.horizon() });
    }
    let mut path = WalkPath { start: (0, 0), steps: Vec::with_capacity(n) };
    let mut y = 0;
    for _ in 0..n {
        let (_, s) = row_step(source.require_row(n)?, y, rng)?;
        y += s as i64;
        path.steps.push(s);
    }
    Ok(path)
}

pub fn sample_walk<R: Rng>(env: &Environment, n: usize, rng: &mut R) -> Result<WalkPath> {
    sample_walk_from(&mut env.source(), n, rng)
}

/// Two walks from `(0, 0)`, conditionally independent given the environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupledPaths {
    pub x: WalkPath,
    pub x_tilde: WalkPath,
    /// `v(X_k)` for `k < n`.
    pub occupancy: Vec<u32>,
}

impl CoupledPaths {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `Y_k = X_k - X̃_k` (spatial coordinates), `k = 0..=n`.
    pub fn difference(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.x.len() + 1);
        let mut y = 0i64;
        out.push(0);
        for (&a, &b) in self.x.steps.iter().zip(&self.x_tilde.steps) {
            y += (a - b) as i64;
            out.push(y);
        }
        out
    }

    pub fn decompose(&self) -> Result<DifferenceDecomposition> {
        decompose(&self.difference(), &self.occupancy)
    }
}

/// Coupled pair over `source`. The two walks draw from separate streams even
/// when they share a cell.
pub fn sample_coupled_from<S: RowSource + ?Sized, R: Rng>(
    source: &mut S,
    n: usize,
    rng_x: &mut R,
    rng_x_tilde: &mut R,
) -> Result<CoupledPaths> {
    if n > source.horizon() {
        return Err(Error::BeyondHorizon { requested: n, horizon: source.horizon() });
    }
    let mut pair = CoupledStepper::with_capacity(rng_x, rng_x_tilde, n);
    for _ in 0..n {
        pair.step(source.require_row(n)?)?;
    }
    Ok(pair.finish())
}

/// Incremental coupled pair, for callers that drive the row stream themselves.
pub struct CoupledStepper<R> {
    rng_x: R,
    rng_x_tilde: R,
    paths: CoupledPaths,
    at: (i64, i64),
}

impl<R: Rng> CoupledStepper<R> {
    pub fn new(rng_x: R, rng_x_tilde: R) -> Self {
        Self::with_capacity(rng_x, rng_x_tilde, 0)
    }

    fn with_capacity(rng_x: R, rng_x_tilde: R, n: usize) -> Self {
        let walk = || WalkPath { start: (0, 0), steps: Vec::with_capacity(n) };
        let paths = CoupledPaths { x: walk(), x_tilde: walk(), occupancy: Vec::with_capacity(n) };
        Self { rng_x, rng_x_tilde, paths, at: (0, 0) }
    }

    /// Number of steps taken so far; the next row must carry this time label.
    pub fn t(&self) -> usize {
        self.paths.len()
    }

    /// Current `Y`.
    pub fn gap(&self) -> i64 {
        self.at.0 - self.at.1
    }

    pub fn step(&mut self, row: &CrossingRow) -> Result<()> {
        if row.t() != self.t() {
            return Err(Error::Malformed(format!("expected environment row {}, got {}", self.t(), row.t())));
        }
        let (cell, s) = row_step(row, self.at.0, &mut self.rng_x)?;
        let (_, st) = row_step(row, self.at.1, &mut self.rng_x_tilde)?;
        self.paths.occupancy.push(cell.occupancy());
        self.at.0 += s as i64;
        self.at.1 += st as i64;
        self.paths.x.steps.push(s);
        self.paths.x_tilde.steps.push(st);
        Ok(())
    }

    pub fn paths(&self) -> &CoupledPaths {
        &self.paths
    }

    pub fn finish(self) -> CoupledPaths {
        self.paths
    }
}

pub fn sample_coupled<R: Rng>(env: &Environment, n: usize, rng_x: &mut R, rng_x_tilde: &mut R) -> Result<CoupledPaths> {
    sample_coupled_from(&mut env.source(), n, rng_x, rng_x_tilde)
}

/// `[start, end]` with `|Y_start| = 2`, `Y_end = 0`; `end` is `None` when the
/// path ends before returning to zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excursion {
    pub start: usize,
    pub end: Option<usize>,
}

impl Excursion {
    pub fn duration(&self) -> Option<usize> {
        self.end.map(|e| e - self.start)
    }
}

/// A maximal run of zeros. `gamma` is the run length minus one, i.e. the
/// number of steps the pair stays together; `censored` marks a run cut by
/// the end of the path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hold {
    pub start: usize,
    pub gamma: usize,
    pub censored: bool,
    /// `v(X_k)` over the run (times beyond the occupancy record are omitted).
    pub occupancies: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceDecomposition {
    pub y_path: Vec<i64>,
    pub excursions: Vec<Excursion>,
    pub holds: Vec<Hold>,
    /// `a(n)`: excursions started by time `n`.
    pub excursion_count: usize,
    /// `#{i < n : Y_i = 0}`.
    pub zero_count: usize,
}

impl DifferenceDecomposition {
    pub fn horizon(&self) -> usize {
        self.y_path.len() - 1
    }

    pub fn max_hold(&self) -> usize {
        self.holds.iter().map(|h| h.gamma).max().unwrap_or(0)
    }

    /// `∑_j (γ_j + 1)`, the number of zeros on `[0, n]`.
    pub fn hold_occupation(&self) -> usize {
        self.holds.iter().map(|h| h.gamma + 1).sum()
    }

    /// Checks `zero_count <= ∑ (γ_j + 1) <= (a(n) + 1)(max γ + 1)`.
    pub fn bounds_hold(&self) -> bool {
        let occupation = self.hold_occupation();
        self.zero_count <= occupation
            && self.holds.len() <= self.excursion_count + 1
            && occupation <= (self.excursion_count + 1) * (self.max_hold() + 1)
    }
}

pub fn decompose(y: &[i64], occupancy: &[u32]) -> Result<DifferenceDecomposition> {
    match y.first() {
        None => return Err(Error::MalformedPath { index: 0, reason: "empty path".into() }),
        Some(&y0) if y0 != 0 => return Err(Error::MalformedPath { index: 0, reason: format!("Y_0 = {y0}") }),
        _ => {}
    }
    for (i, w) in y.windows(2).enumerate() {
        let d = w[1] - w[0];
        if !matches!(d, -2 | 0 | 2) {
            return Err(Error::MalformedPath { index: i + 1, reason: format!("increment {d}") });
        }
    }
    let n = y.len() - 1;
    let mut excursions = Vec::new();
    let mut holds = Vec::new();
    let mut s = 0;
    loop {
        let mut e = s;
        while e < n && y[e + 1] == 0 {
            e += 1;
        }
        let occ_end = (e + 1).min(occupancy.len());
        let occupancies = if s < occ_end { occupancy[s..occ_end].to_vec() } else { Vec::new() };
        holds.push(Hold { start: s, gamma: e - s, censored: e == n, occupancies });
        if e == n {
            break;
        }
        let alpha = e + 1;
        match (alpha + 1..=n).find(|&k| y[k] == 0) {
            Some(beta) => {
                excursions.push(Excursion { start: alpha, end: Some(beta) });
                s = beta;
            }
            None => {
                excursions.push(Excursion { start: alpha, end: None });
                break;
            }
        }
    }
    let zero_count = y[..n].iter().filter(|&&v| v == 0).count();
    Ok(DifferenceDecomposition { y_path: y.to_vec(), excursion_count: excursions.len(), excursions, holds, zero_count })
}

/// Lazy walk with increments `+2, 0, -2` at probabilities `1/4, 1/2, 1/4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LazyWalk {
    pub increments: Vec<i8>,
}

impl LazyWalk {
    pub fn positions(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut r = 0i64;
        out.push(0);
        for &d in &self.increments {
            r += d as i64;
            out.push(r);
        }
        out
    }

    /// `R*_k = max_{j <= k} R_j` for every `k`.
    pub fn running_max(&self) -> Vec<i64> {
        let mut best = 0;
        self.positions()
            .into_iter()
            .map(|r| {
                best = best.max(r);
                best
            })
            .collect()
    }

    pub fn max(&self) -> i64 {
        self.running_max().last().copied().unwrap_or(0)
    }

    /// First `k` with `R_k >= level`.
    pub fn hitting_time_to(&self, level: i64) -> Option<usize> {
        self.positions().into_iter().position(|r| r >= level)
    }
}

pub fn lazy_walk<R: Rng>(n: usize, rng: R) -> LazyWalk {
    let mut coins = Coins::new(rng);
    let increments = (0..n).map(|_| 2 * (coins.heads(1) as i8 - coins.heads(1) as i8)).collect();
    LazyWalk { increments }
}

pub fn lazy_stream(seed: u64, replicate: u64) -> ChaCha8Rng {
    stream(seed, &[domain::LAZY, replicate])
}

/// Meeting-cell outcomes stratified by the occupancy of the shared cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationTally {
    /// occupancy → (stayed together, separated)
    pub by_occupancy: BTreeMap<u32, (u64, u64)>,
}

impl SeparationTally {
    pub fn record(&mut self, pair: &CoupledPaths) {
        let y = pair.difference();
        for (i, &v) in pair.occupancy.iter().enumerate() {
            if y[i] == 0 {
                let e = self.by_occupancy.entry(v).or_default();
                if y[i + 1] == 0 {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, other: &SeparationTally) {
        for (&v, &(s, l)) in &other.by_occupancy {
            let e = self.by_occupancy.entry(v).or_default();
            e.0 += s;
            e.1 += l;
        }
    }

    pub fn get(&self, v: u32) -> (u64, u64) {
        self.by_occupancy.get(&v).copied().unwrap_or((0, 0))
    }

    /// Pooled counts over occupancies `>= v`.
    pub fn pooled_from(&self, v: u32) -> (u64, u64) {
        self.by_occupancy.range(v..).fold((0, 0), |(a, b), (_, &(s, l))| (a + s, b + l))
    }
}

/// Increments of `Y` taken from nonzero states: counts of `-2, 0, +2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionTally {
    pub down: u64,
    pub stay: u64,
    pub up: u64,
}

impl TransitionTally {
    pub fn record(&mut self, y: &[i64]) {
        for w in y.windows(2) {
            if w[0] != 0 {
                match w[1] - w[0] {
                    -2 => self.down += 1,
                    0 => self.stay += 1,
                    _ => self.up += 1,
                }
            }
        }
    }

    pub fn merge(&mut self, o: &TransitionTally) {
        self.down += o.down;
        self.stay += o.stay;
        self.up += o.up;
    }

    pub fn total(&self) -> u64 {
        self.down + self.stay + self.up
    }
}

/// `τ_0`: first `l` with `v(X_l) >= 2`.
pub fn first_shared_time(occupancy: &[u32]) -> Option<usize> {
    occupancy.iter().position(|&v| v >= 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{generate, EnvSeedSpec, Measure};
    use crate::mass::mass_run;
    use proptest::prelude::*;
    use rand::Rng;

    fn cell(plus: u32, minus: u32) -> Cell {
        Cell { plus, minus }
    }

    #[test]
    fn steps_follow_crossings() {
        for u in [0.0, 0.3, 0.999] {
            assert_eq!(step_in_cell(cell(1, 0), u), Some(1));
            assert_eq!(step_in_cell(cell(0, 2), u), Some(-1));
        }
        assert_eq!(step_in_cell(cell(1, 1), 0.49), Some(1));
        assert_eq!(step_in_cell(cell(1, 1), 0.5), Some(-1));
        assert_eq!(step_in_cell(cell(0, 0), 0.5), None);
    }

    #[test]
    fn balanced_cell_is_fair() {
        let mut rng = walk_stream(1, 0, 0);
        let n = 200_000;
        let ups = (0..n).filter(|_| step_in_cell(cell(1, 1), rng.random()) == Some(1)).count();
        assert!(((ups as f64) - n as f64 / 2.0).abs() < 4.0 * (n as f64 / 4.0).sqrt());
    }

    #[test]
    fn walk_stays_in_cone() {
        let env = generate(&EnvSeedSpec::new(9, 30, Measure::SizeBiased)).unwrap();
        for r in 0..50 {
            let path = sample_walk(&env, 30, &mut walk_stream(9, 0, r)).unwrap();
            for (t, y) in path.positions() {
                assert!(y.unsigned_abs() as usize <= t);
                assert!(env.occupancy(t.min(29), y).is_some());
            }
        }
        assert_eq!(sample_walk(&env, 0, &mut walk_stream(9, 0, 0)).unwrap(), WalkPath::at_origin());
    }

    #[test]
    fn empirical_walk_law_matches_mass() {
        let env = generate(&EnvSeedSpec::new(12, 8, Measure::SizeBiased)).unwrap();
        let field = mass_run(&env, 8).unwrap();
        let mut rng = walk_stream(12, 0, 0);
        let n = 100_000;
        let mut counts = BTreeMap::<i64, u64>::new();
        for _ in 0..n {
            *counts.entry(sample_walk(&env, 8, &mut rng).unwrap().end().1).or_default() += 1;
        }
        for (y, p) in field.row(8).unwrap().sites() {
            let c = counts.get(&y).copied().unwrap_or(0) as f64;
            assert!((c - n as f64 * p).abs() <= 4.5 * (n as f64 * p * (1.0 - p)).sqrt() + 1e-9, "y={y}");
        }
    }

    #[test]
    fn corridor_forces_coalescence() {
        // one walker at the origin and nobody else: both walks ride it
        let rows: Vec<CrossingRow> = (0..10)
            .map(|t| {
                let w = 2 * t + 1;
                let mut plus = vec![0; w];
                plus[2 * t] = 1;
                CrossingRow::new(t, -(t as i64), 1, plus, vec![0; w]).unwrap()
            })
            .collect();
        let env = Environment::from_rows(Measure::SizeBiased, rows).unwrap();
        let pair = sample_coupled(&env, 10, &mut walk_stream(1, 0, 0), &mut walk_stream(1, 0, 1)).unwrap();
        assert!(pair.difference().iter().all(|&y| y == 0));
        assert_eq!(pair.x, pair.x_tilde);
        assert!(pair.occupancy.iter().all(|&v| v == 1));
    }

    #[test]
    fn decomposition_worked_example() {
        let d = decompose(&[0, 2, 0, 0, 2, 0], &[]).unwrap();
        assert_eq!(d.excursions[0], Excursion { start: 1, end: Some(2) });
        assert_eq!(d.excursions[0].duration(), Some(1));
        assert_eq!(d.holds[0].gamma, 0);
        assert_eq!(d.holds[1].gamma, 1);
        assert_eq!(d.excursion_count, 2);
        assert_eq!(d.zero_count, 3);
        assert!(d.holds[2].censored);
        assert!(d.bounds_hold());
    }

    #[test]
    fn all_zero_path() {
        let d = decompose(&[0; 9], &[1; 8]).unwrap();
        assert!(d.excursions.is_empty());
        assert_eq!(d.excursion_count, 0);
        assert_eq!(d.zero_count, 8);
        assert_eq!(d.holds.len(), 1);
        assert!(d.holds[0].censored);
        assert_eq!(d.holds[0].occupancies.len(), 8);
    }

    #[test]
    fn excursion_without_return() {
        let d = decompose(&[0, 0, 2, 4, 2, 2], &[]).unwrap();
        assert_eq!(d.excursion_count, 1);
        assert_eq!(d.excursions[0].end, None);
        assert_eq!(d.holds.len(), 1);
        assert_eq!(d.holds[0].gamma, 1);
        assert!(!d.holds[0].censored);
    }

    #[test]
    fn malformed_paths() {
        assert!(decompose(&[], &[]).is_err());
        assert!(decompose(&[2, 0], &[]).is_err());
        assert!(matches!(decompose(&[0, 2, -2], &[]), Err(Error::MalformedPath { index: 2, .. })));
        assert!(decompose(&[0, 1], &[]).is_err());
    }

    #[test]
    fn lazy_walk_basics() {
        let w = lazy_walk(10_000, lazy_stream(3, 0));
        assert!(w.increments.iter().all(|d| matches!(d, -2 | 0 | 2)));
        let runmax = w.running_max();
        assert!(runmax.windows(2).all(|p| p[0] <= p[1]));
        if let Some(k) = w.hitting_time_to(4) {
            assert_eq!(w.positions()[k], 4);
            assert!(w.positions()[..k].iter().all(|&r| r < 4));
        }
        assert_eq!(w.hitting_time_to(0), Some(0));
    }

    #[test]
    fn lazy_increment_frequencies() {
        let w = lazy_walk(400_000, lazy_stream(4, 0));
        let n = w.increments.len() as f64;
        for (d, p) in [(-2i8, 0.25), (0, 0.5), (2, 0.25)] {
            let c = w.increments.iter().filter(|&&x| x == d).count() as f64;
            assert!((c - n * p).abs() < 4.0 * (n * p * (1.0 - p)).sqrt());
        }
    }

    #[test]
    fn tallies_count_transitions() {
        let pair = CoupledPaths {
            x: WalkPath { start: (0, 0), steps: vec![1, 1, -1, -1] },
            x_tilde: WalkPath { start: (0, 0), steps: vec![1, -1, -1, 1] },
            occupancy: vec![3, 2, 1, 1],
        };
        assert_eq!(pair.difference(), vec![0, 0, 2, 2, 0]);
        let mut sep = SeparationTally::default();
        sep.record(&pair);
        assert_eq!(sep.get(3), (1, 0));
        assert_eq!(sep.get(2), (0, 1));
        assert_eq!(sep.pooled_from(2), (1, 1));
        let mut tr = TransitionTally::default();
        tr.record(&pair.difference());
        assert_eq!(tr, TransitionTally { down: 1, stay: 1, up: 0 });
        assert_eq!(first_shared_time(&[1, 1, 2]), Some(2));
        assert_eq!(first_shared_time(&[1, 1]), None);
    }

    proptest! {
        #[test]
        fn decomposition_invariants(steps in proptest::collection::vec(-1i64..=1, 0..200)) {
            // build a valid difference path from arbitrary {-2,0,2} increments
            let mut y = vec![0i64];
            for s in steps {
                let last = *y.last().unwrap();
                y.push(last + 2 * s);
            }
            let d = decompose(&y, &[]).unwrap();
            prop_assert!(d.bounds_hold());
            prop_assert_eq!(d.hold_occupation(), y.iter().filter(|&&v| v == 0).count());
            for e in &d.excursions {
                prop_assert_eq!(y[e.start].abs(), 2);
                let end = e.end.unwrap_or(y.len());
                prop_assert!(y[e.start..end].iter().all(|&v| v != 0));
                if let Some(b) = e.end { prop_assert_eq!(y[b], 0); }
            }
            prop_assert!(d.excursion_count == d.excursions.iter().filter(|e| e.start < y.len()).count());
        }

        #[test]
        fn coupled_difference_is_even(seed in any::<u64>()) {
            let env = generate(&EnvSeedSpec::new(seed, 20, Measure::SizeBiased)).unwrap();
            let pair = sample_coupled(&env, 20, &mut walk_stream(seed, 0, 0), &mut walk_stream(seed, 0, 1)).unwrap();
            let y = pair.difference();
            prop_assert!(y.iter().all(|v| v % 2 == 0));
            prop_assert!(y.windows(2).all(|w| matches!(w[1] - w[0], -2 | 0 | 2)));
            prop_assert!(pair.decompose().unwrap().bounds_hold());
        }
    }
}
