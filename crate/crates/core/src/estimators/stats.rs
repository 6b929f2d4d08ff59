use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Standard normal CDF (absolute error well below 1e-10).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn interval(&self) -> Interval {
        Interval::normal(self.mean(), self.std_err())
    }
}

/// Point estimate with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub std_err: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn normal(estimate: f64, std_err: f64) -> Self {
        Self { estimate, std_err, lo: estimate - Z95 * std_err, hi: estimate + Z95 * std_err }
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn half_width(&self) -> f64 {
        Z95 * self.std_err
    }
}

/// Observed frequency of an event against a null probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub hits: u64,
    pub trials: u64,
    pub observed: f64,
    pub target: f64,
    /// Binomial standard deviation of the frequency under the target.
    pub sigma: f64,
    pub z: f64,
}

impl Frequency {
    pub fn new(hits: u64, trials: u64, target: f64) -> Self {
        let observed = if trials == 0 { f64::NAN } else { hits as f64 / trials as f64 };
        let sigma = (target * (1.0 - target) / trials as f64).sqrt();
        let z = match (observed - target, sigma) {
            (d, s) if s > 0.0 => d / s,
            (0.0, _) => 0.0,
            (d, _) => d.signum() * f64::INFINITY,
        };
        Self { hits, trials, observed, target, sigma, z }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z.abs() <= sigmas
    }
}

/// Straight-line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Weighted least squares. With `weights = None` all points count equally and
/// the slope error comes from the residuals; otherwise weights are inverse
/// variances and the slope error is `1 / sqrt(Sxx)`.
pub fn line_fit(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    let n = xs.len();
    if ys.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::Malformed("fit inputs differ in length".into()));
    }
    if n < 2 {
        return Err(Error::Insufficient(format!("line fit needs two points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Malformed("non-finite fit input".into()));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(w).sum();
    let xbar = (0..n).map(|i| w(i) * xs[i]).sum::<f64>() / sw;
    let ybar = (0..n).map(|i| w(i) * ys[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w(i) * (xs[i] - xbar).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w(i) * (xs[i] - xbar) * (ys[i] - ybar)).sum();
    let syy: f64 = (0..n).map(|i| w(i) * (ys[i] - ybar).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Insufficient("line fit needs at least two distinct x".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = (0..n).map(|i| w(i) * (ys[i] - intercept - slope * xs[i]).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    let slope_se = match weights {
        Some(_) => sxx.recip().sqrt(),
        None if n > 2 => (rss / (n - 2) as f64 / sxx).sqrt(),
        None => 0.0,
    };
    Ok(LineFit { slope, intercept, slope_se, r_squared, points: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 7.25, 0.0];
        let mut w = Welford::default();
        xs.iter().for_each(|&x| w.push(x));
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        assert_abs_diff_eq!(w.mean(), mean, epsilon = 1e-14);
        assert_abs_diff_eq!(w.variance(), var, epsilon = 1e-12);
        assert_abs_diff_eq!(w.std_err(), (var / 6.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(-1.0), 0.158_655_253_931_457_05, epsilon = 1e-10);
        assert_abs_diff_eq!(normal_cdf(Z95), 0.975, epsilon = 1e-10);
        assert_abs_diff_eq!(normal_cdf(-8.0), 6.220_960_574_271_785e-16, epsilon = 1e-20);
    }

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let f = line_fit(&xs, &ys, None).unwrap();
        assert_abs_diff_eq!(f.slope, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        let w = vec![2.0; 10];
        let g = line_fit(&xs, &ys, Some(&w)).unwrap();
        assert_abs_diff_eq!(g.slope, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn weights_pull_the_fit() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 1.0, 0.0];
        let heavy_ends = line_fit(&xs, &ys, Some(&[1e6, 1.0, 1e6])).unwrap();
        assert_abs_diff_eq!(heavy_ends.slope, 0.0, epsilon = 1e-9);
        assert!(heavy_ends.intercept < 1e-5);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        assert!(line_fit(&[1.0], &[1.0], None).is_err());
        assert!(line_fit(&[1.0, 1.0], &[1.0, 2.0], None).is_err());
        assert!(line_fit(&[1.0, f64::NAN], &[1.0, 2.0], None).is_err());
    }

    #[test]
    fn frequency_z_score() {
        let f = Frequency::new(30, 100, 0.25);
        assert_abs_diff_eq!(f.sigma, (0.25f64 * 0.75 / 100.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.z, 0.05 / f.sigma, epsilon = 1e-12);
        assert!(f.within(3.0));
    }
}
