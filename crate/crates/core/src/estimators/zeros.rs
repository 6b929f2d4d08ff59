use serde::{Deserialize, Serialize};

use super::stats::{Interval, Welford};
use super::{check_grid, Ensemble};
use crate::error::Result;
use crate::mass::MassSweep;
use crate::rwre::{decompose, CoupledStepper};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroPoint {
    pub n: usize,
    /// Mean of `#{i < n : Y_i = 0}`.
    pub zero_count: Interval,
    /// `M̂(n)` from the same environments.
    pub m: Interval,
    /// Mean of `zero_count - m(n)^2`, paired per environment.
    pub gap: Interval,
    /// Mean excursion count `a(n)`.
    pub excursions: Interval,
}

impl ZeroPoint {
    /// `M̂(n) <= zero-count mean`, allowing the 95% half-width of the paired gap.
    pub fn ordered(&self) -> bool {
        self.gap.hi >= 0.0
    }

    pub fn excursions_per_root(&self) -> f64 {
        self.excursions.estimate / (self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountCurve {
    pub replicates: usize,
    pub points: Vec<ZeroPoint>,
}

impl ZeroCountCurve {
    /// `max / min - 1` of `a(n)/sqrt(n)` over grid points with `n > 0`.
    pub fn excursion_spread(&self) -> Option<f64> {
        let r: Vec<f64> = self.points.iter().filter(|p| p.n > 0).map(|p| p.excursions_per_root()).collect();
        let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = r.iter().copied().fold(f64::INFINITY, f64::min);
        (min > 0.0).then(|| max / min - 1.0)
    }
}

/// One coupled pair per environment, run alongside the mass sweep of the same
/// environment.
pub fn zero_count_curve(ensemble: &Ensemble, grid: &[usize]) -> Result<ZeroCountCurve> {
    ensemble.require(2, "zero-count curve")?;
    let horizon = check_grid(grid)?;
    let k = grid.len();
    let acc = ensemble.fold(
        vec![[Welford::default(); 4]; k],
        |r| {
            ensemble.with_rows(r, horizon, |rows| {
                let (x, xt) = ensemble.walk_streams(r);
                let mut sweep = MassSweep::new();
                let mut pair = CoupledStepper::new(x, xt);
                let mut out = Vec::with_capacity(k);
                for &n in grid {
                    while sweep.t() < n {
                        let row = rows.require_row(n)?;
                        sweep.advance(row)?;
                        pair.step(row)?;
                    }
                    let m = sweep.moments().mean_displacement;
                    let paths = pair.paths();
                    let d = decompose(&paths.difference(), &paths.occupancy)?;
                    out.push([d.zero_count as f64, m * m, d.excursion_count as f64]);
                }
                Ok(out)
            })
        },
        |mut acc, rows| {
            for (a, [zeros, m2, exc]) in acc.iter_mut().zip(rows) {
                a[0].push(zeros);
                a[1].push(m2);
                a[2].push(zeros - m2);
                a[3].push(exc);
            }
            acc
        },
    )?;
    let points = grid
        .iter()
        .zip(&acc)
        .map(|(&n, a)| ZeroPoint {
            n,
            zero_count: a[0].interval(),
            m: a[1].interval(),
            gap: a[2].interval(),
            excursions: a[3].interval(),
        })
        .collect();
    Ok(ZeroCountCurve { replicates: ensemble.replicates, points })
}
