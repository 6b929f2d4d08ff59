use serde::{Deserialize, Serialize};

use super::annealed::binomial_pmf;
use super::stats::normal_cdf;
use crate::environment::RowSource;
use crate::error::{Error, Result};
use crate::mass::{MassSweep, CONSERVATION_TOL};

/// `μ_t = ∑_{k>=1} P(S_t >= 2k)`, the expected number of background walkers
/// started right of the origin that end up left of a walk.
pub fn mu_t_exact(t: usize) -> f64 {
    // P(S_t = s) is counted once for every k with 2k <= s
    (2..=t as i64).map(|s| (s / 2) as f64 * binomial_pmf(t, s)).sum()
}

/// Kolmogorov distance between a discrete law, given as sorted atoms
/// `(x, mass)`, and the standard normal. Both the value and the left limit of
/// the step function are compared at every atom.
pub fn ks_distance(atoms: &[(f64, f64)]) -> Result<f64> {
    if atoms.is_empty() {
        return Err(Error::InvalidDistribution("no atoms".into()));
    }
    let mut cdf = 0.0;
    let mut prev = f64::NEG_INFINITY;
    let mut d: f64 = 0.0;
    for &(x, p) in atoms {
        if !x.is_finite() || x <= prev {
            return Err(Error::InvalidDistribution(format!("atoms not strictly increasing at x={x}")));
        }
        if p.is_nan() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("negative mass {p} at x={x}")));
        }
        let phi = normal_cdf(x);
        d = d.max((cdf - phi).abs());
        cdf += p;
        d = d.max((cdf - phi).abs());
        prev = x;
    }
    if (cdf - 1.0).abs() > CONSERVATION_TOL {
        return Err(Error::InvalidDistribution(format!("total mass {cdf}")));
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub horizon: usize,
    /// `y / sqrt(T)` on the support of `p(T, ·)`.
    pub support: Vec<f64>,
    /// Quenched CDF at each support point.
    pub cdf: Vec<f64>,
    pub ks: f64,
    /// `∑ y^2 p(T, y) / T`.
    pub sigma2: f64,
    /// `∑ y p(T, y) / sqrt(T)`.
    pub mean: f64,
}

/// Quenched law of `X_T / sqrt(T)` in one environment against `N(0, 1)`.
pub fn clt_report<S: RowSource + ?Sized>(source: &mut S, horizon: usize) -> Result<CltReport> {
    let mut sweep = MassSweep::new();
    while sweep.t() < horizon {
        let row = source.require_row(horizon)?;
        sweep.advance(row)?;
    }
    sweep.check_conservation()?;
    let scale = if horizon == 0 { 1.0 } else { (horizon as f64).sqrt() };
    let t = horizon as i64;
    let mut atoms = Vec::with_capacity(horizon + 1);
    for (j, &p) in sweep.probs().iter().enumerate() {
        atoms.push(((-t + 2 * j as i64) as f64 / scale, p));
    }
    let ks = ks_distance(&atoms)?;
    let mut cdf = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for &(_, p) in &atoms {
        acc += p;
        cdf.push(acc);
    }
    let sigma2 = if horizon == 0 { 0.0 } else { sweep.second_moment() / horizon as f64 };
    let mean = sweep.moments().mean_displacement / scale;
    Ok(CltReport { horizon, support: atoms.iter().map(|a| a.0).collect(), cdf, ks, sigma2, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{EnvSeedSpec, Measure, Scheme};
    use approx::assert_abs_diff_eq;

    /// `∑_k P(S_t >= 2k)` by enumerating all `2^t` paths.
    fn mu_by_enumeration(t: usize) -> f64 {
        let mut total = 0.0;
        for bits in 0u32..(1 << t) {
            let s = 2 * bits.count_ones() as i64 - t as i64;
            total += (1..).take_while(|k| 2 * k <= s).count() as f64;
        }
        total / (1u64 << t) as f64
    }

    #[test]
    fn mu_small_values() {
        assert_eq!(mu_t_exact(0), 0.0);
        assert_eq!(mu_t_exact(1), 0.0);
        assert_abs_diff_eq!(mu_t_exact(2), 0.25, epsilon = 1e-15);
        for t in 0..=16 {
            assert_abs_diff_eq!(mu_t_exact(t), mu_by_enumeration(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn ks_point_mass_and_two_points() {
        assert_abs_diff_eq!(ks_distance(&[(0.0, 1.0)]).unwrap(), 0.5, epsilon = 1e-15);
        let d = ks_distance(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_abs_diff_eq!(d, 0.5 - 0.158_655_253_931_457_05, epsilon = 1e-10);
    }

    #[test]
    fn ks_of_fine_normal_grid_is_small() {
        let h = 1e-3;
        let xs: Vec<f64> = (-8000..=8000).map(|i| i as f64 * h).collect();
        let mut atoms = Vec::new();
        let mut prev = 0.0;
        for &x in &xs {
            let f = normal_cdf(x + h / 2.0);
            atoms.push((x, f - prev));
            prev = f;
        }
        let last = atoms.len() - 1;
        atoms[last].1 += 1.0 - prev;
        assert!(ks_distance(&atoms).unwrap() < h);
    }

    #[test]
    fn ks_rejects_bad_input() {
        assert!(ks_distance(&[]).is_err());
        assert!(ks_distance(&[(1.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(ks_distance(&[(0.0, 1.5), (1.0, -0.5)]).is_err());
        assert!(ks_distance(&[(0.0, 0.5)]).is_err());
    }

    #[test]
    fn degenerate_horizon() {
        let spec = EnvSeedSpec::new(1, 10, Measure::SizeBiased).scheme(Scheme::LightCone);
        let r = clt_report(&mut spec.stream(crate::environment::ConeClasses::Origin).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(r.ks, 0.5, epsilon = 1e-15);
        assert_eq!(r.sigma2, 0.0);
    }
}
