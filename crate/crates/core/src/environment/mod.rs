//! The space-time environment: edge-crossing counts `e+(t,y)`, `e-(t,y)` of
//! Poisson(1) background walkers, and their occupancy `v = e+ + e-`.
//!
//! Two generation schemes produce environments with the same law on the light
//! cone `|y| <= t`:
//!
//! * [`Scheme::Walkers`] follows every walker started on `[-2T, 2T]` with its
//!   own keyed stream and records the exact window `|y| <= 2T - t`.
//! * [`Scheme::LightCone`] evolves only the counts inside the cone. Walkers
//!   never leave the cone (it grows at speed one) and those outside enter it
//!   along the edges as independent Poisson(1/2) streams, one per edge cell.
//!   It touches only the `T^2` cone cells instead of the `3T^2` window and
//!   can be streamed row by row, see [`ConeSampler`].

mod codec;
mod cone;
mod walkers;

pub use codec::{deserialize, serialize, FORMAT_VERSION, MAGIC};
pub use cone::{ConeClasses, ConeSampler};
pub use walkers::{crossings_from_walkers, evolve_walkers, sample_initial_counts, InitialCounts, Walker, WalkerSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive, domain};

/// Largest horizon [`generate`] will materialize.
pub const MAX_STORED_HORIZON: usize = 1 << 14;
/// Largest horizon a streaming sampler accepts.
pub const MAX_STREAM_HORIZON: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Base,
    SizeBiased,
}

impl Measure {
    pub fn tag(self) -> u8 {
        match self {
            Measure::Base => 0,
            Measure::SizeBiased => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Measure::Base),
            1 => Some(Measure::SizeBiased),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Walkers,
    LightCone,
}

impl Scheme {
    pub fn tag(self) -> u8 {
        match self {
            Scheme::Walkers => 0,
            Scheme::LightCone => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Scheme::Walkers),
            1 => Some(Scheme::LightCone),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Cell {
    pub plus: u32,
    pub minus: u32,
}

impl Cell {
    #[inline]
    pub fn occupancy(self) -> u32 {
        self.plus + self.minus
    }
}

/// One time slice of crossing counts over a contiguous range of sites.
///
/// With `stride == 2` only sites of the same parity as `lo` are stored; the
/// others are "not stored", which is different from "empty".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingRow {
    t: usize,
    lo: i64,
    stride: u8,
    plus: Vec<u32>,
    minus: Vec<u32>,
}

impl CrossingRow {
    pub fn new(t: usize, lo: i64, stride: u8, plus: Vec<u32>, minus: Vec<u32>) -> Result<Self> {
        if stride != 1 && stride != 2 {
            return Err(Error::Malformed(format!("row stride {stride}")));
        }
        if plus.len() != minus.len() {
            return Err(Error::Malformed(format!("row {t}: plus/minus length mismatch")));
        }
        let row = Self { t, lo, stride, plus, minus };
        for (i, (&p, &m)) in row.plus.iter().zip(&row.minus).enumerate() {
            let y = row.site(i);
            match p.checked_add(m) {
                Some(v) if v <= i32::MAX as u32 => {}
                _ => return Err(Error::CountOverflow { t, y }),
            }
        }
        Ok(row)
    }

    pub(crate) fn empty(t: usize, lo: i64, stride: u8, len: usize) -> Self {
        Self { t, lo, stride, plus: vec![0; len], minus: vec![0; len] }
    }

    pub fn t(&self) -> usize {
        self.t
    }
    pub fn lo(&self) -> i64 {
        self.lo
    }
    pub fn hi(&self) -> i64 {
        self.lo + self.stride as i64 * (self.len() as i64 - 1)
    }
    pub fn stride(&self) -> u8 {
        self.stride
    }
    pub fn len(&self) -> usize {
        self.plus.len()
    }
    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }
    pub fn plus(&self) -> &[u32] {
        &self.plus
    }
    pub fn minus(&self) -> &[u32] {
        &self.minus
    }
    pub(crate) fn counts_mut(&mut self) -> (&mut Vec<u32>, &mut Vec<u32>) {
        (&mut self.plus, &mut self.minus)
    }

    #[inline]
    pub fn site(&self, index: usize) -> i64 {
        self.lo + self.stride as i64 * index as i64
    }

    #[inline]
    pub fn index_of(&self, y: i64) -> Option<usize> {
        let off = y - self.lo;
        let s = self.stride as i64;
        if off < 0 || off % s != 0 {
            return None;
        }
        let i = (off / s) as usize;
        (i < self.len()).then_some(i)
    }

    #[inline]
    pub fn get(&self, y: i64) -> Option<Cell> {
        self.index_of(y).map(|i| Cell { plus: self.plus[i], minus: self.minus[i] })
    }

    pub fn cell(&self, y: i64) -> Result<Cell> {
        self.get(y).ok_or(Error::OutsideWindow { t: self.t, y })
    }

    /// Index of site `-t` and the index step between consecutive sites of
    /// parity `t`, provided the whole light-cone slice `|y| <= t` is stored.
    #[inline]
    pub fn cone_view(&self) -> Option<(usize, usize)> {
        let t = self.t as i64;
        let base = self.index_of(-t)?;
        self.index_of(t)?;
        Some((base, 2 / self.stride as usize))
    }

    pub fn cells(&self) -> impl Iterator<Item = (i64, Cell)> + '_ {
        (0..self.len()).map(|i| (self.site(i), Cell { plus: self.plus[i], minus: self.minus[i] }))
    }
}

/// A stream of crossing rows `t = 0, 1, ..., horizon - 1`.
pub trait RowSource {
    fn horizon(&self) -> usize;
    fn next_row(&mut self) -> Result<Option<&CrossingRow>>;

    /// Like `next_row`, but running out of rows before time `requested` is an error.
    fn require_row(&mut self, requested: usize) -> Result<&CrossingRow> {
        let horizon = self.horizon();
        self.next_row()?.ok_or(Error::BeyondHorizon { requested, horizon })
    }
}

/// Environment with every row materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    pub(crate) horizon: usize,
    pub(crate) seed: u64,
    pub(crate) replicate: u64,
    pub(crate) measure: Measure,
    pub(crate) scheme: Scheme,
    pub(crate) rows: Vec<CrossingRow>,
}

impl Environment {
    /// Assembles an environment from rows and validates it.
    pub fn from_rows(measure: Measure, rows: Vec<CrossingRow>) -> Result<Self> {
        let env = Self { horizon: rows.len(), seed: 0, replicate: 0, measure, scheme: Scheme::Walkers, rows };
        env.validate()?;
        Ok(env)
    }

    pub fn with_provenance(mut self, seed: u64, replicate: u64, scheme: Scheme) -> Self {
        self.seed = seed;
        self.replicate = replicate;
        self.scheme = scheme;
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn replicate(&self) -> u64 {
        self.replicate
    }
    pub fn measure(&self) -> Measure {
        self.measure
    }
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
    pub fn rows(&self) -> &[CrossingRow] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> Result<&CrossingRow> {
        self.rows.get(t).ok_or(Error::BeyondHorizon { requested: t, horizon: self.horizon })
    }

    pub fn get(&self, t: usize, y: i64) -> Option<Cell> {
        self.rows.get(t)?.get(y)
    }

    pub fn cell(&self, t: usize, y: i64) -> Result<Cell> {
        self.row(t)?.cell(y)
    }

    pub fn occupancy(&self, t: usize, y: i64) -> Option<u32> {
        self.get(t, y).map(Cell::occupancy)
    }

    pub fn source(&self) -> StoredRows<'_> {
        StoredRows { env: self, next: 0 }
    }

    /// Checks the flow identity `v(t,y) = e+(t-1,y-1) + e-(t-1,y+1)` wherever
    /// all three cells are stored, and the size-biased origin condition.
    pub fn validate(&self) -> Result<()> {
        for (t, row) in self.rows.iter().enumerate() {
            if row.t != t {
                return Err(Error::Malformed(format!("row {t} labelled {}", row.t)));
            }
        }
        for t in 1..self.rows.len() {
            let (prev, row) = (&self.rows[t - 1], &self.rows[t]);
            for (y, cell) in row.cells() {
                if let (Some(a), Some(b)) = (prev.get(y - 1), prev.get(y + 1)) {
                    let inflow = a.plus as u64 + b.minus as u64;
                    if inflow != cell.occupancy() as u64 {
                        return Err(Error::InvalidCell {
                            t,
                            y,
                            reason: format!("flow {inflow} != occupancy {}", cell.occupancy()),
                        });
                    }
                }
            }
        }
        if self.measure == Measure::SizeBiased {
            if let Some(row) = self.rows.first() {
                if row.get(0).map_or(0, Cell::occupancy) == 0 {
                    return Err(Error::InvalidCell { t: 0, y: 0, reason: "size-biased origin is empty".into() });
                }
            }
        }
        Ok(())
    }
}

pub struct StoredRows<'a> {
    env: &'a Environment,
    next: usize,
}

impl RowSource for StoredRows<'_> {
    fn horizon(&self) -> usize {
        self.env.horizon
    }

    fn next_row(&mut self) -> Result<Option<&CrossingRow>> {
        let row = self.env.rows.get(self.next);
        self.next += 1;
        Ok(row)
    }
}

/// Everything needed to regenerate one environment bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvSeedSpec {
    pub seed: u64,
    pub horizon: usize,
    pub measure: Measure,
    pub replicate: u64,
    #[serde(default)]
    pub scheme: Scheme,
}

impl EnvSeedSpec {
    pub fn new(seed: u64, horizon: usize, measure: Measure) -> Self {
        Self { seed, horizon, measure, replicate: 0, scheme: Scheme::Walkers }
    }

    pub fn replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Root key of this environment's random streams.
    pub fn key(&self) -> u64 {
        derive(self.seed, &[domain::ENV, self.replicate])
    }

    /// Streaming sampler restricted to the light cone.
    pub fn stream(&self, classes: ConeClasses) -> Result<ConeSampler> {
        ConeSampler::new(self.key(), self.horizon, self.measure, classes)
    }
}

/// Materializes the environment described by `spec`.
pub fn generate(spec: &EnvSeedSpec) -> Result<Environment> {
    if spec.horizon > MAX_STORED_HORIZON {
        return Err(Error::HorizonOverflow { horizon: spec.horizon, max: MAX_STORED_HORIZON });
    }
    let env = match spec.scheme {
        Scheme::Walkers => {
            let counts = sample_initial_counts(spec.key(), spec.horizon, spec.measure);
            let walkers = evolve_walkers(&counts, spec.key(), spec.horizon);
            crossings_from_walkers(&walkers)?
        }
        Scheme::LightCone => {
            let mut sampler = spec.stream(ConeClasses::All)?;
            let mut rows = Vec::with_capacity(spec.horizon);
            while let Some(row) = sampler.next_row()? {
                rows.push(row.clone());
            }
            Environment {
                horizon: spec.horizon,
                seed: 0,
                replicate: 0,
                measure: spec.measure,
                scheme: spec.scheme,
                rows,
            }
        }
    };
    Ok(env.with_provenance(spec.seed, spec.replicate, spec.scheme))
}
