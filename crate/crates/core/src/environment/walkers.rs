use rand_distr::{Distribution, Poisson};

use super::{CrossingRow, Environment, Measure, Scheme};
use crate::error::{Error, Result};
use crate::rng::{domain, site_key, stream, Coins};

/// Initial occupancies `v(0,k)` on the contiguous site range starting at `lo`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialCounts {
    pub lo: i64,
    pub counts: Vec<u32>,
    pub measure: Measure,
}

impl InitialCounts {
    pub fn hi(&self) -> i64 {
        self.lo + self.counts.len() as i64 - 1
    }

    pub fn get(&self, site: i64) -> u32 {
        let i = site - self.lo;
        if i < 0 || i as usize >= self.counts.len() {
            0
        } else {
            self.counts[i as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| (self.lo + i as i64, c))
    }
}

/// Draws one site's count from its own keyed stream.
pub(crate) fn site_count(key: u64, site: i64, measure: Measure) -> u32 {
    let mut rng = stream(key, &[domain::COUNT, site_key(site)]);
    let k = Poisson::new(1.0).expect("unit rate").sample(&mut rng) as u32;
    // the size-biased Poisson(1) law is 1 + Poisson(1)
    if measure == Measure::SizeBiased && site == 0 {
        k + 1
    } else {
        k
    }
}

/// Counts on `[-2T, 2T]`, enough for every light-cone cell up to `horizon`.
pub fn sample_initial_counts(key: u64, horizon: usize, measure: Measure) -> InitialCounts {
    let reach = 2 * horizon as i64;
    sample_counts_on(key, -reach, reach, measure)
}

/// Counts on an explicit window `[lo, hi]`. Each site has its own stream, so
/// widening the window leaves existing sites untouched.
pub fn sample_counts_on(key: u64, lo: i64, hi: i64, measure: Measure) -> InitialCounts {
    let counts = (lo..=hi).map(|k| site_count(key, k, measure)).collect();
    InitialCounts { lo, counts, measure }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walker {
    pub start: i64,
    pub index: u32,
    pub steps: Vec<i8>,
}

impl Walker {
    pub fn position(&self, t: usize) -> i64 {
        self.start + self.steps[..t].iter().map(|&s| s as i64).sum::<i64>()
    }
}

/// Background walkers together with the site window they were started on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkerSet {
    pub horizon: usize,
    pub lo: i64,
    pub hi: i64,
    pub measure: Measure,
    pub walkers: Vec<Walker>,
}

impl WalkerSet {
    pub fn new(horizon: usize, lo: i64, hi: i64, measure: Measure, walkers: Vec<Walker>) -> Result<Self> {
        for w in &walkers {
            if w.steps.len() != horizon {
                return Err(Error::Malformed(format!(
                    "walker ({}, {}) has {} steps, horizon is {horizon}",
                    w.start,
                    w.index,
                    w.steps.len()
                )));
            }
            if w.steps.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::Malformed(format!("walker ({}, {}) has a non-unit step", w.start, w.index)));
            }
            if w.start < lo || w.start > hi {
                return Err(Error::Malformed(format!("walker start {} outside [{lo}, {hi}]", w.start)));
            }
        }
        Ok(Self { horizon, lo, hi, measure, walkers })
    }

    pub fn is_empty(&self) -> bool {
        self.walkers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.walkers.len()
    }
}

/// Gives walker `(k, i)` fair ±1 steps drawn from the stream keyed by `(k, i)`.
pub fn evolve_walkers(counts: &InitialCounts, key: u64, horizon: usize) -> WalkerSet {
    let mut walkers = Vec::new();
    for (site, count) in counts.iter() {
        for index in 0..count {
            let mut coins = Coins::new(stream(key, &[domain::WALKER, site_key(site), u64::from(index)]));
            let steps = (0..horizon).map(|_| if coins.flip() { 1 } else { -1 }).collect();
            walkers.push(Walker { start: site, index, steps });
        }
    }
    WalkerSet { horizon, lo: counts.lo, hi: counts.hi(), measure: counts.measure, walkers }
}

/// Counts edge crossings. Row `t` covers `[lo + t, hi - t]`, the sites every
/// contributing walker is guaranteed to have started inside the window.
pub fn crossings_from_walkers(walkers: &WalkerSet) -> Result<Environment> {
    let horizon = walkers.horizon;
    let mut rows: Vec<CrossingRow> = (0..horizon)
        .map(|t| {
            let lo = walkers.lo + t as i64;
            let len = (walkers.hi - walkers.lo - 2 * t as i64 + 1).max(0) as usize;
            CrossingRow::empty(t, lo, 1, len)
        })
        .collect();
    for w in &walkers.walkers {
        let mut y = w.start;
        for (t, &step) in w.steps.iter().enumerate() {
            let row = &mut rows[t];
            if let Some(i) = row.index_of(y) {
                let (plus, minus) = row.counts_mut();
                let slot = if step > 0 { &mut plus[i] } else { &mut minus[i] };
                *slot = slot.checked_add(1).filter(|&c| c <= i32::MAX as u32).ok_or(Error::CountOverflow { t, y })?;
            }
            y += step as i64;
        }
    }
    // rebuild through the checked constructor so occupancy overflow is caught
    let rows =
        rows.into_iter().map(|r| CrossingRow::new(r.t, r.lo, r.stride, r.plus, r.minus)).collect::<Result<Vec<_>>>()?;
    let env = Environment { horizon, seed: 0, replicate: 0, measure: walkers.measure, scheme: Scheme::Walkers, rows };
    env.validate()?;
    Ok(env)
}
