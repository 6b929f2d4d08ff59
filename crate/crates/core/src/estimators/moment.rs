use serde::{Deserialize, Serialize};

use super::stats::{line_fit, Interval, Welford};
use super::{check_grid, Ensemble};
use crate::error::{Error, Result};
use crate::mass::moments_on_grid;

/// Smallest `n` used in exponent fits.
pub const FIT_MIN_N: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub n: usize,
    /// `M̂(n)`, replicate mean of `m(n)^2`.
    pub m: Interval,
    /// `B̂(n)`, replicate mean of `∑ p^2 / v`.
    pub b: Interval,
    /// Replicate mean of `∑ p^2`.
    pub z: Interval,
}

impl MomentPoint {
    pub fn consistent(&self) -> bool {
        self.m.overlaps(&self.b)
    }
}

/// Fit of `log M = alpha log n + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub alpha: f64,
    pub alpha_se: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCurve {
    pub replicates: usize,
    pub points: Vec<MomentPoint>,
    /// Plain power law over `n >= FIT_MIN_N`.
    pub fit: Option<PowerFit>,
    /// Same fit after dividing by `log(n)^3`.
    pub log_corrected: Option<PowerFit>,
    /// Grid points where the `M̂` and `B̂` intervals fail to overlap.
    pub mismatched: Vec<usize>,
}

/// Weighted least squares of `log value` on `log n`. With standard errors the
/// weights are the delta-method inverse variances `(value / se)^2`.
pub fn fit_power_law(ns: &[usize], values: &[f64], std_errs: Option<&[f64]>) -> Result<PowerFit> {
    if ns.len() != values.len() || std_errs.is_some_and(|s| s.len() != ns.len()) {
        return Err(Error::Malformed("fit inputs differ in length".into()));
    }
    if ns.contains(&0) || values.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::Malformed("power-law fit needs positive n and values".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let weights: Option<Vec<f64>> = match std_errs {
        Some(se) if se.iter().all(|&s| s > 0.0) => Some(values.iter().zip(se).map(|(v, s)| (v / s).powi(2)).collect()),
        _ => None,
    };
    let f = line_fit(&xs, &ys, weights.as_deref())?;
    Ok(PowerFit {
        alpha: f.slope,
        alpha_se: f.slope_se,
        intercept: f.intercept,
        r_squared: f.r_squared,
        points: f.points,
    })
}

fn fits(points: &[MomentPoint]) -> (Option<PowerFit>, Option<PowerFit>) {
    let used: Vec<&MomentPoint> = points.iter().filter(|p| p.n >= FIT_MIN_N && p.m.estimate > 0.0).collect();
    let ns: Vec<usize> = used.iter().map(|p| p.n).collect();
    let m: Vec<f64> = used.iter().map(|p| p.m.estimate).collect();
    let se: Vec<f64> = used.iter().map(|p| p.m.std_err).collect();
    let plain = fit_power_law(&ns, &m, Some(&se)).ok();
    let cube = |n: usize| (n as f64).ln().powi(3);
    let mc: Vec<f64> = used.iter().map(|p| p.m.estimate / cube(p.n)).collect();
    let sec: Vec<f64> = used.iter().map(|p| p.m.std_err / cube(p.n)).collect();
    let corrected = fit_power_law(&ns, &mc, Some(&sec)).ok();
    (plain, corrected)
}

/// `M̂(n)` and `B̂(n)` on `grid`, one environment per replicate shared across
/// the grid.
pub fn moment_curve(ensemble: &Ensemble, grid: &[usize]) -> Result<MomentCurve> {
    ensemble.require(2, "moment curve")?;
    let horizon = check_grid(grid)?;
    let k = grid.len();
    let acc = ensemble.fold(
        vec![[Welford::default(); 3]; k],
        |r| ensemble.with_rows(r, horizon, |rows| moments_on_grid(rows, grid)),
        |mut acc, qs| {
            for (a, q) in acc.iter_mut().zip(qs) {
                a[0].push(q.mean_displacement * q.mean_displacement);
                a[1].push(q.zero_weighted_sum);
                a[2].push(q.collision_sum);
            }
            acc
        },
    )?;
    let points: Vec<MomentPoint> = grid
        .iter()
        .zip(&acc)
        .map(|(&n, a)| MomentPoint { n, m: a[0].interval(), b: a[1].interval(), z: a[2].interval() })
        .collect();
    let mismatched = points.iter().filter(|p| !p.consistent()).map(|p| p.n).collect();
    let (fit, log_corrected) = fits(&points);
    Ok(MomentCurve { replicates: ensemble.replicates, points, fit, log_corrected, mismatched })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn synthetic_square_root_law() {
        let ns = [64, 128, 256, 512, 1024, 2048, 4096];
        let m: Vec<f64> = ns.iter().map(|&n| 5.0 * (n as f64).sqrt()).collect();
        let f = fit_power_law(&ns, &m, None).unwrap();
        assert_abs_diff_eq!(f.alpha, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(f.intercept, 5f64.ln(), epsilon = 1e-6);
        let se: Vec<f64> = m.iter().map(|v| 0.01 * v).collect();
        let g = fit_power_law(&ns, &m, Some(&se)).unwrap();
        assert_abs_diff_eq!(g.alpha, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn nonpositive_values_are_rejected() {
        assert!(fit_power_law(&[1, 2], &[1.0, 0.0], None).is_err());
        assert!(fit_power_law(&[0, 2], &[1.0, 1.0], None).is_err());
    }

    #[test]
    fn bad_grids() {
        let e = Ensemble::new(0, 10);
        assert!(moment_curve(&e, &[]).is_err());
        assert!(moment_curve(&e, &[4, 4]).is_err());
        assert!(moment_curve(&e, &[8, 4]).is_err());
    }

    #[test]
    fn small_curve_is_self_consistent() {
        let c = moment_curve(&Ensemble::new(9, 400), &[1, 2, 4, 8]).unwrap();
        assert_eq!(c.points.len(), 4);
        // Z(1) = p(0,0)^2 = 1 in every environment
        assert_abs_diff_eq!(c.points[0].z.estimate, 1.0, epsilon = 1e-15);
        for p in &c.points {
            assert!(p.m.estimate >= 0.0 && p.b.estimate >= 0.0);
            assert!(p.b.estimate <= p.z.estimate + 1e-12);
        }
        assert!(c.fit.is_none());
    }
}
