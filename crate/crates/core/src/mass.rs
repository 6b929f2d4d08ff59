//! Exact mass field `p(t, y; ω)` by forward dynamic programming, the
//! per-environment functionals built on it, and a brute-force path-sum oracle.
//!
//! Rows are stored on the parity support only: index `j` of row `t` is site
//! `y = -t + 2j`, `0 <= j <= t`.

use std::io::Write;

use crate::environment::{CrossingRow, Environment, RowSource};
use crate::error::{Error, Result};

/// Depth limit of [`path_sum_oracle`]; it enumerates `2^t` paths.
pub const MAX_ORACLE_DEPTH: usize = 12;

/// Conservation tolerance; no renormalization is ever applied.
pub const CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MassRow {
    t: usize,
    probs: Vec<f64>,
}

impl MassRow {
    pub fn origin() -> Self {
        Self { t: 0, probs: vec![1.0] }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Masses on `y = -t, -t + 2, ..., t`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, y: i64) -> f64 {
        let off = y + self.t as i64;
        if off < 0 || off % 2 != 0 || off / 2 > self.t as i64 {
            0.0
        } else {
            self.probs[(off / 2) as usize]
        }
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let t = self.t as i64;
        self.probs.iter().enumerate().map(move |(j, &p)| (-t + 2 * j as i64, p))
    }

    pub fn total(&self) -> f64 {
        let mut s = Compensated::default();
        self.probs.iter().for_each(|&p| s.add(p));
        s.value()
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn view(row: &CrossingRow, t: usize) -> Result<(usize, usize)> {
    if row.t() != t {
        return Err(Error::Malformed(format!("expected environment row {t}, got {}", row.t())));
    }
    row.cone_view().ok_or(Error::OutsideWindow { t, y: t as i64 })
}

/// Reciprocals of small occupancies; larger ones fall back to division.
const INV_TABLE: usize = 64;
static INV: [f64; INV_TABLE] = {
    let mut table = [0.0; INV_TABLE];
    let mut v = 1;
    while v < INV_TABLE {
        table[v] = 1.0 / v as f64;
        v += 1;
    }
    table
};

#[inline]
fn inv(v: u32) -> f64 {
    if (v as usize) < INV_TABLE {
        INV[v as usize]
    } else {
        1.0 / v as f64
    }
}

/// Writes row `t + 1` into `next` given row `t` in `cur`, returning the row
/// sums `(∑ p^2, ∑ p^2 / v)`. Cells with `v = 0` pass on nothing.
fn step_into(cur: &[f64], env: &CrossingRow, next: &mut Vec<f64>) -> Result<(f64, f64)> {
    let t = cur.len() - 1;
    let (base, stride) = view(env, t)?;
    let (plus, minus) = (env.plus(), env.minus());
    next.clear();
    next.resize(t + 2, 0.0);
    let (mut collision, mut weighted) = (0.0, 0.0);
    let mut carry = 0.0;
    let mut cell = |j: usize, p: f64, up: u32, down: u32| {
        let share = p * inv(up + down);
        collision += p * p;
        weighted += p * share;
        next[j] = carry + share * down as f64;
        carry = share * up as f64;
    };
    if stride == 1 {
        let cells = plus[base..base + t + 1].iter().zip(&minus[base..base + t + 1]);
        for (j, (&p, (&up, &down))) in cur.iter().zip(cells).enumerate() {
            cell(j, p, up, down);
        }
    } else {
        for (j, &p) in cur.iter().enumerate() {
            let k = base + j * stride;
            cell(j, p, plus[k], minus[k]);
        }
    }
    next[t + 1] = carry;
    Ok((collision, weighted))
}

/// One step of the mass recursion.
pub fn mass_step(row: &MassRow, env_row: &CrossingRow) -> Result<MassRow> {
    let mut next = Vec::new();
    step_into(&row.probs, env_row, &mut next)?;
    Ok(MassRow { t: row.t + 1, probs: next })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassField {
    rows: Vec<MassRow>,
}

impl MassField {
    pub fn rows(&self) -> &[MassRow] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> Option<&MassRow> {
        self.rows.get(t)
    }

    pub fn horizon(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, t: usize, y: i64) -> f64 {
        self.rows.get(t).map_or(0.0, |r| r.get(y))
    }

    /// Largest `|∑_y p(t, y) - 1|` over the stored rows.
    pub fn conservation_error(&self) -> f64 {
        self.rows.iter().map(|r| (r.total() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// CSV with header `t,y,p`, one line per support site, ascending `t` then `y`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,y,p")?;
        for row in &self.rows {
            for (y, p) in row.sites() {
                writeln!(out, "{},{},{}", row.t, y, p)?;
            }
        }
        Ok(())
    }

    /// Binary rows: `"RMSMASS1"`, row count (u64 LE), then per row `t`
    /// (u64 LE) followed by `t + 1` little-endian f64 masses.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"RMSMASS1")?;
        out.write_all(&(self.rows.len() as u64).to_le_bytes())?;
        for row in &self.rows {
            out.write_all(&(row.t as u64).to_le_bytes())?;
            for p in &row.probs {
                out.write_all(&p.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(bytes: &[u8]) -> Result<Self> {
        let mut at = 0usize;
        let mut take = |n: usize, what: &'static str| -> Result<&[u8]> {
            let s = bytes.get(at..at + n).ok_or(Error::Truncated { what })?;
            at += n;
            Ok(s)
        };
        if take(8, "magic")? != b"RMSMASS1" {
            return Err(Error::BadMagic);
        }
        let count = u64::from_le_bytes(take(8, "row count")?.try_into().unwrap()) as usize;
        let mut rows = Vec::new();
        for expect in 0..count {
            let t = u64::from_le_bytes(take(8, "row time")?.try_into().unwrap()) as usize;
            if t != expect {
                return Err(Error::Malformed(format!("mass row {expect} labelled {t}")));
            }
            let raw = take(8 * (t + 1), "row masses")?;
            let probs = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            rows.push(MassRow { t, probs });
        }
        Ok(Self { rows })
    }
}

fn origin_occupied(row: Option<&CrossingRow>) -> Result<()> {
    match row.and_then(|r| r.get(0)) {
        Some(c) if c.occupancy() > 0 => Ok(()),
        Some(_) => Err(Error::EmptyOrigin),
        None => Err(Error::OutsideWindow { t: 0, y: 0 }),
    }
}

fn check_horizon(n: usize, horizon: usize) -> Result<()> {
    if n > horizon {
        return Err(Error::BeyondHorizon { requested: n, horizon });
    }
    Ok(())
}

/// Full field for `t = 0..=n`.
pub fn mass_run(env: &Environment, n: usize) -> Result<MassField> {
    check_horizon(n, env.horizon())?;
    if n > 0 {
        origin_occupied(env.rows().first())?;
    }
    let mut rows = Vec::with_capacity(n + 1);
    rows.push(MassRow::origin());
    for t in 0..n {
        let next = mass_step(&rows[t], &env.rows()[t])?;
        rows.push(next);
    }
    Ok(MassField { rows })
}

/// `∑ over nearest-neighbour paths 0 -> y of ∏ e^{±}(i, γ(i)) / v(i, γ(i))`,
/// enumerated path by path. A path through an empty cell contributes zero.
pub fn path_sum_oracle(env: &Environment, t: usize, y: i64) -> Result<f64> {
    if t > MAX_ORACLE_DEPTH {
        return Err(Error::OracleTooDeep { t, max: MAX_ORACLE_DEPTH });
    }
    check_horizon(t, env.horizon())?;
    if (y + t as i64).rem_euclid(2) != 0 || y.unsigned_abs() as usize > t {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for code in 0u32..(1u32 << t) {
        let mut pos = 0i64;
        let mut weight = 1.0;
        for i in 0..t {
            let up = (code >> i) & 1 == 1;
            let cell = env.cell(i, pos)?;
            let v = cell.occupancy();
            let e = if up { cell.plus } else { cell.minus };
            if v == 0 || e == 0 {
                weight = 0.0;
                break;
            }
            weight *= e as f64 / v as f64;
            pos += if up { 1 } else { -1 };
        }
        if pos == y {
            total += weight;
        }
    }
    Ok(total)
}

/// `(e+ - e-) / v` at `(t, y)`: the spatial component of the local drift.
pub fn local_drift(env: &Environment, t: usize, y: i64) -> Result<f64> {
    let cell = env.cell(t, y)?;
    let v = cell.occupancy();
    if v == 0 {
        return Err(Error::DeadCell { t, y });
    }
    Ok((cell.plus as f64 - cell.minus as f64) / v as f64)
}

/// Per-environment functionals at horizon `n`:
/// * `mean_displacement` `m(n) = ∑_y y p(n,y)`
/// * `zero_weighted_sum` `B(n) = ∑_{i<n} ∑_y p(i,y)^2 / v(i,y)`
/// * `collision_sum` `Z(n) = ∑_{i<n} ∑_y p(i,y)^2`
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuenchedMoments {
    pub horizon: usize,
    pub mean_displacement: f64,
    pub zero_weighted_sum: f64,
    pub collision_sum: f64,
}

/// Streams the mass recursion one row at a time in `O(T)` memory while
/// accumulating the [`QuenchedMoments`] functionals.
#[derive(Debug, Clone)]
pub struct MassSweep {
    cur: Vec<f64>,
    next: Vec<f64>,
    weighted: Compensated,
    collision: Compensated,
}

impl Default for MassSweep {
    fn default() -> Self {
        Self::new()
    }
}

impl MassSweep {
    pub fn new() -> Self {
        Self { cur: vec![1.0], next: Vec::new(), weighted: Compensated::default(), collision: Compensated::default() }
    }

    pub fn t(&self) -> usize {
        self.cur.len() - 1
    }

    /// Masses of the current row on the parity support.
    pub fn probs(&self) -> &[f64] {
        &self.cur
    }

    pub fn row(&self) -> MassRow {
        MassRow { t: self.t(), probs: self.cur.clone() }
    }

    /// Consumes environment row `t` and moves to `t + 1`.
    pub fn advance(&mut self, env: &CrossingRow) -> Result<()> {
        let t = self.t();
        if t == 0 {
            origin_occupied(Some(env))?;
        }
        let (collision, weighted) = step_into(&self.cur, env, &mut self.next)?;
        self.collision.add(collision);
        self.weighted.add(weighted);
        std::mem::swap(&mut self.cur, &mut self.next);
        Ok(())
    }

    pub fn moments(&self) -> QuenchedMoments {
        let t = self.t() as i64;
        let mut m = Compensated::default();
        for (j, &p) in self.cur.iter().enumerate() {
            m.add((-t + 2 * j as i64) as f64 * p);
        }
        QuenchedMoments {
            horizon: self.t(),
            mean_displacement: m.value(),
            zero_weighted_sum: self.weighted.value(),
            collision_sum: self.collision.value(),
        }
    }

    /// `∑_y y^2 p(t, y)`.
    pub fn second_moment(&self) -> f64 {
        let t = self.t() as i64;
        let mut s = Compensated::default();
        for (j, &p) in self.cur.iter().enumerate() {
            let y = (-t + 2 * j as i64) as f64;
            s.add(y * y * p);
        }
        s.value()
    }

    pub fn total(&self) -> f64 {
        let mut s = Compensated::default();
        self.cur.iter().for_each(|&p| s.add(p));
        s.value()
    }

    /// Fails when the current row's total strays from 1 by more than
    /// [`CONSERVATION_TOL`].
    pub fn check_conservation(&self) -> Result<()> {
        let total = self.total();
        if (total - 1.0).abs() > CONSERVATION_TOL {
            return Err(Error::Conservation { t: self.t(), total });
        }
        Ok(())
    }
}

/// Runs a sweep over `source`, recording moments at every grid point
/// (ascending, each `<= source.horizon()`).
pub fn moments_on_grid<S: RowSource + ?Sized>(source: &mut S, grid: &[usize]) -> Result<Vec<QuenchedMoments>> {
    let last = grid.iter().copied().max().unwrap_or(0);
    check_horizon(last, source.horizon())?;
    let mut sweep = MassSweep::new();
    let mut out = Vec::with_capacity(grid.len());
    let mut pending = grid.iter().copied().peekable();
    loop {
        while pending.peek() == Some(&sweep.t()) {
            out.push(sweep.moments());
            pending.next();
        }
        if sweep.t() >= last {
            break;
        }
        let row = source.next_row()?.ok_or(Error::BeyondHorizon { requested: last, horizon: sweep.t() })?;
        sweep.advance(row)?;
    }
    if out.len() != grid.len() {
        return Err(Error::Malformed("moment grid must be ascending".into()));
    }
    Ok(out)
}

pub fn quenched_moments(env: &Environment, n: usize) -> Result<QuenchedMoments> {
    Ok(moments_on_grid(&mut env.source(), &[n])?[0])
}
