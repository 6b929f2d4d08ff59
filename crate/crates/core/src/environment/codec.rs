//! Binary environment files.
//!
//! ```text
//! magic      7 bytes  "RMSENV1"
//! version    u16 LE
//! horizon    u64 LE
//! seed       u64 LE
//! measure    u8       0 = base, 1 = size-biased
//! scheme     u8       0 = walkers, 1 = light cone
//! replicate  u64 LE
//! rows       horizon times:
//!              lo (signed LEB128), stride (u8), len (unsigned LEB128),
//!              then len cells of e+, e-, v (unsigned LEB128 each)
//! ```

use std::io::Read;

use super::{CrossingRow, Environment, Measure, Scheme};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 7] = b"RMSENV1";
pub const FORMAT_VERSION: u16 = 1;

pub fn serialize(env: &Environment) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + env.rows.iter().map(|r| 3 * r.len() + 8).sum::<usize>());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(env.horizon as u64).to_le_bytes());
    out.extend_from_slice(&env.seed.to_le_bytes());
    out.push(env.measure.tag());
    out.push(env.scheme.tag());
    out.extend_from_slice(&env.replicate.to_le_bytes());
    for row in &env.rows {
        leb128::write::signed(&mut out, row.lo).expect("vec write");
        out.push(row.stride);
        leb128::write::unsigned(&mut out, row.len() as u64).expect("vec write");
        for (&p, &m) in row.plus.iter().zip(&row.minus) {
            leb128::write::unsigned(&mut out, u64::from(p)).expect("vec write");
            leb128::write::unsigned(&mut out, u64::from(m)).expect("vec write");
            leb128::write::unsigned(&mut out, u64::from(p) + u64::from(m)).expect("vec write");
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn exact<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.buf.read_exact(&mut b).map_err(|_| Error::Truncated { what })?;
        Ok(b)
    }

    fn uvar(&mut self, what: &'static str) -> Result<u64> {
        leb128::read::unsigned(&mut self.buf).map_err(|e| varint_error(e, what))
    }

    fn svar(&mut self, what: &'static str) -> Result<i64> {
        leb128::read::signed(&mut self.buf).map_err(|e| varint_error(e, what))
    }

    fn count(&mut self, what: &'static str) -> Result<u32> {
        let v = self.uvar(what)?;
        u32::try_from(v)
            .ok()
            .filter(|&c| c <= i32::MAX as u32)
            .ok_or_else(|| Error::Malformed(format!("{what} {v} overflows 32 bits")))
    }
}

fn varint_error(e: leb128::read::Error, what: &'static str) -> Error {
    match e {
        leb128::read::Error::IoError(_) => Error::Truncated { what },
        leb128::read::Error::Overflow => Error::Malformed(format!("{what}: varint overflow")),
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<Environment> {
    let mut r = Reader { buf: bytes };
    let magic: [u8; 7] = r.exact("magic")?;
    if &magic != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = u16::from_le_bytes(r.exact("version")?);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let horizon = u64::from_le_bytes(r.exact("horizon")?);
    let seed = u64::from_le_bytes(r.exact("seed")?);
    let [measure] = r.exact::<1>("measure tag")?;
    let measure = Measure::from_tag(measure).ok_or_else(|| Error::Malformed(format!("measure tag {measure}")))?;
    let [scheme] = r.exact::<1>("scheme tag")?;
    let scheme = Scheme::from_tag(scheme).ok_or_else(|| Error::Malformed(format!("scheme tag {scheme}")))?;
    let replicate = u64::from_le_bytes(r.exact("replicate")?);

    // every row needs at least three bytes
    if horizon > (r.buf.len() / 3) as u64 {
        return Err(Error::Truncated { what: "rows" });
    }
    let horizon = horizon as usize;
    let mut rows = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let lo = r.svar("row origin")?;
        let [stride] = r.exact::<1>("row stride")?;
        let len = r.uvar("row length")?;
        if len > (r.buf.len() / 3) as u64 {
            return Err(Error::Malformed(format!("row {t}: length {len} exceeds remaining data")));
        }
        let len = len as usize;
        let (mut plus, mut minus) = (Vec::with_capacity(len), Vec::with_capacity(len));
        for i in 0..len {
            let p = r.count("e+")?;
            let m = r.count("e-")?;
            let v = r.uvar("v")?;
            if u64::from(p) + u64::from(m) != v {
                let y = lo + i as i64 * i64::from(stride.max(1));
                return Err(Error::InvalidCell {
                    t,
                    y,
                    reason: format!("v = {v} but e+ + e- = {}", u64::from(p) + u64::from(m)),
                });
            }
            plus.push(p);
            minus.push(m);
        }
        rows.push(CrossingRow::new(t, lo, stride, plus, minus)?);
    }
    if !r.buf.is_empty() {
        return Err(Error::Malformed(format!("{} trailing bytes", r.buf.len())));
    }
    let env = Environment { horizon, seed, replicate, measure, scheme, rows };
    env.validate()?;
    Ok(env)
}
