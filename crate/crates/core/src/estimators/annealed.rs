use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use super::stats::Welford;
use super::Ensemble;
use crate::error::{Error, Result};
use crate::mass::MassSweep;

/// `P(S_n = y)` for simple random walk.
pub fn binomial_pmf(n: usize, y: i64) -> f64 {
    let n_i = n as i64;
    if y.abs() > n_i || (n_i + y) % 2 != 0 {
        return 0.0;
    }
    let k = ((n_i + y) / 2) as u64;
    (ln_binomial(n as u64, k) - n as f64 * std::f64::consts::LN_2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealedCell {
    pub y: i64,
    pub target: f64,
    pub mean: f64,
    pub std_err: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealedReport {
    pub n: usize,
    pub replicates: usize,
    pub cells: Vec<AnnealedCell>,
    pub max_abs_z: f64,
}

/// Replicate mean of `p(n, y)` against the binomial law, one z-score per
/// reachable `y`.
pub fn annealed_mean_check(ensemble: &Ensemble, n: usize) -> Result<AnnealedReport> {
    ensemble.require(2, "annealed check")?;
    let acc = ensemble.fold(
        vec![Welford::default(); n + 1],
        |r| {
            ensemble.with_rows(r, n, |rows| {
                let mut sweep = MassSweep::new();
                for _ in 0..n {
                    let row = rows.require_row(n)?;
                    sweep.advance(row)?;
                }
                sweep.check_conservation()?;
                Ok(sweep.probs().to_vec())
            })
        },
        |mut acc, probs| {
            acc.iter_mut().zip(probs).for_each(|(w, p)| w.push(p));
            acc
        },
    )?;
    let mut cells = Vec::with_capacity(n + 1);
    let mut max_abs_z: f64 = 0.0;
    for (j, w) in acc.iter().enumerate() {
        let y = -(n as i64) + 2 * j as i64;
        let target = binomial_pmf(n, y);
        let (mean, std_err) = (w.mean(), w.std_err());
        let z = if std_err > 0.0 {
            (mean - target) / std_err
        } else if mean == target {
            0.0
        } else {
            return Err(Error::Insufficient(format!("degenerate interval at y={y}: every replicate gave {mean}")));
        };
        max_abs_z = max_abs_z.max(z.abs());
        cells.push(AnnealedCell { y, target, mean, std_err, z });
    }
    Ok(AnnealedReport { n, replicates: ensemble.replicates, cells, max_abs_z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Law of `S_n` by enumerating all `2^n` step sequences.
    fn enumerate(n: usize) -> Vec<f64> {
        let mut law = vec![0.0; n + 1];
        for bits in 0u32..(1 << n) {
            let ups = bits.count_ones() as usize;
            law[ups] += 1.0;
        }
        law.iter().map(|c| c / (1u64 << n) as f64).collect()
    }

    #[test]
    fn pmf_matches_enumeration() {
        for n in 0..=14 {
            let law = enumerate(n);
            for (ups, &p) in law.iter().enumerate() {
                let y = 2 * ups as i64 - n as i64;
                assert_abs_diff_eq!(binomial_pmf(n, y), p, epsilon = 1e-13);
            }
        }
        assert_eq!(binomial_pmf(3, 0), 0.0);
        assert_eq!(binomial_pmf(3, 5), 0.0);
        assert_abs_diff_eq!(binomial_pmf(2, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(binomial_pmf(2, 2), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(binomial_pmf(2, -2), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn zero_steps_is_exact() {
        let r = annealed_mean_check(&Ensemble::new(1, 5), 0).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].z, 0.0);
    }

    #[test]
    fn too_few_replicates() {
        assert!(annealed_mean_check(&Ensemble::new(1, 1), 4).is_err());
    }

    #[test]
    fn small_ensemble_is_consistent() {
        let r = annealed_mean_check(&Ensemble::new(5, 4000), 4).unwrap();
        assert_eq!(r.cells.len(), 5);
        assert!(r.max_abs_z < 4.5, "{r:?}");
        let total: f64 = r.cells.iter().map(|c| c.mean).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }
}
