use serde::{Deserialize, Serialize};

use super::stats::{line_fit, Welford};
use super::Ensemble;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rng::{domain, stream, Coins};
use crate::rwre::{first_shared_time, sample_coupled_from};

/// Empirical survival `P̂(statistic >= t)` at each threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub thresholds: Vec<usize>,
    pub survival: Vec<f64>,
    pub std_err: Vec<f64>,
    pub samples: usize,
    /// Samples whose statistic was cut off by the horizon.
    pub censored: usize,
}

impl TailCurve {
    /// Survival of integer samples at thresholds `0..=max`; `None` marks a
    /// sample censored beyond `max`.
    fn from_samples(values: &[Option<usize>], max: usize) -> Self {
        let mut at_least = vec![0usize; max + 2];
        let mut censored = 0;
        for v in values {
            let top = match v {
                Some(x) => (*x).min(max + 1),
                None => {
                    censored += 1;
                    max + 1
                }
            };
            at_least[top] += 1;
        }
        // suffix sums: at_least[t] = #{x >= t}
        for t in (0..=max).rev() {
            at_least[t] += at_least[t + 1];
        }
        let n = values.len() as f64;
        let survival: Vec<f64> = (0..=max).map(|t| at_least[t] as f64 / n).collect();
        let std_err = survival.iter().map(|s| (s * (1.0 - s) / n).sqrt()).collect();
        Self { thresholds: (0..=max).collect(), survival, std_err, samples: values.len(), censored }
    }

    pub fn at(&self, t: usize) -> Option<f64> {
        self.thresholds.iter().position(|&x| x == t).map(|i| self.survival[i])
    }

    pub fn is_monotone(&self) -> bool {
        self.survival.windows(2).all(|w| w[1] <= w[0])
    }
}

/// `log S(t) ≈ a - b sqrt(t)` over a threshold window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchedExpFit {
    pub a: f64,
    pub b: f64,
    pub b_se: f64,
    pub r_squared: f64,
    pub points: usize,
    pub t_lo: usize,
    pub t_hi: usize,
}

pub fn fit_stretched_exp(curve: &TailCurve, t_lo: usize, t_hi: usize) -> Result<StretchedExpFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .thresholds
        .iter()
        .zip(&curve.survival)
        .filter(|&(&t, &s)| t >= t_lo && t <= t_hi && s > 0.0)
        .map(|(&t, &s)| ((t as f64).sqrt(), s.ln()))
        .unzip();
    let f = line_fit(&xs, &ys, None)
        .map_err(|_| Error::Insufficient(format!("fewer than two positive survival values on [{t_lo}, {t_hi}]")))?;
    Ok(StretchedExpFit {
        a: f.intercept,
        b: -f.slope,
        b_se: f.slope_se,
        r_squared: f.r_squared,
        points: f.points,
        t_lo,
        t_hi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldingTail {
    pub n: usize,
    /// `τ_0` read off the first walk of each pair, censored at `n`.
    pub tau0: TailCurve,
    /// `max_{j} γ_j` over `[0, n]`.
    pub max_hold: TailCurve,
    pub median_max_hold: f64,
    /// `median_max_hold / log(n)^3`.
    pub median_ratio: f64,
}

/// Holding statistics of one coupled pair per environment.
pub fn holding_tail(ensemble: &Ensemble, n: usize) -> Result<HoldingTail> {
    ensemble.require(1, "holding tail")?;
    if n < 2 {
        return Err(Error::Insufficient(format!("holding tail needs n >= 2, got {n}")));
    }
    let (mut tau, mut holds, mut censored, mut complete) = (Vec::new(), Vec::new(), 0, false);
    ensemble.fold(
        (),
        |r| {
            ensemble.with_rows(r, n, |rows| {
                let (mut x, mut xt) = ensemble.walk_streams(r);
                let pair = sample_coupled_from(rows, n, &mut x, &mut xt)?;
                let d = pair.decompose()?;
                let max = d.max_hold();
                let cut = d.holds.iter().all(|h| h.censored || h.gamma < max);
                let done = d.holds.iter().any(|h| !h.censored);
                Ok((first_shared_time(&pair.occupancy), max, cut, done))
            })
        },
        |(), (t, max, cut, done)| {
            tau.push(t);
            holds.push(max);
            censored += cut as usize;
            complete |= done;
        },
    )?;
    if !complete {
        return Err(Error::Insufficient(format!("every hold was censored at n={n}; increase the horizon")));
    }
    let top = holds.iter().copied().max().unwrap_or(0);
    let mut max_hold = TailCurve::from_samples(&holds.iter().map(|&h| Some(h)).collect::<Vec<_>>(), top);
    max_hold.censored = censored;
    let tau0 = TailCurve::from_samples(&tau, n);
    holds.sort_unstable();
    let mid = holds.len() / 2;
    let median = if holds.len() % 2 == 1 { holds[mid] as f64 } else { (holds[mid - 1] + holds[mid]) as f64 / 2.0 };
    Ok(HoldingTail { n, tau0, max_hold, median_max_hold: median, median_ratio: median / (n as f64).ln().powi(3) })
}

/// Conditional (Rao-Blackwellized) estimate of `P(τ_0 >= t)` under the
/// size-biased law, `t = 0..=t_max`.
///
/// The walk starts on the extra walker at the origin, and as long as every
/// visited cell holds that walker alone the walk follows it. So `τ_0 >= t`
/// iff the origin carries no other walker (probability `e^-1`) and no
/// background walker meets the tagged path at times `1..t-1`. Given the
/// tagged path the number of such meetings is Poisson with mean `Λ_{t-1}`,
/// the expected number of background walkers that first meet the path by
/// then, which is computed exactly by evolving the density of walkers that
/// have not met it yet. Each sample draws one tagged path and contributes
/// `e^-1 exp(-Λ_{t-1})` for every `t`.
pub fn tau0_tail(seed: u64, samples: usize, t_max: usize, exec: Execution) -> Result<TailCurve> {
    if samples < 2 {
        return Err(Error::Insufficient(format!("conditional tail needs at least 2 samples, got {samples}")));
    }
    let acc = par::fold_indexed(
        exec,
        samples,
        256,
        vec![Welford::default(); t_max],
        |i| unmet_weights(seed, i as u64, t_max),
        |mut acc, w| {
            acc.iter_mut().zip(w).for_each(|(a, x)| a.push(x));
            acc
        },
    );
    let e1 = (-1.0f64).exp();
    let mut survival = vec![1.0];
    let mut std_err = vec![0.0];
    for a in &acc {
        survival.push(e1 * a.mean());
        std_err.push(e1 * a.std_err());
    }
    Ok(TailCurve { thresholds: (0..=t_max).collect(), survival, std_err, samples, censored: 0 })
}

/// `exp(-Λ_{t-1})` for `t = 1..=t_max` along one tagged path.
fn unmet_weights(seed: u64, sample: u64, t_max: usize) -> Vec<f64> {
    let mut coins = Coins::new(stream(seed, &[domain::TAGGED, sample]));
    let mut out = Vec::with_capacity(t_max);
    // density of unmet background walkers on y = -l + 2j; 1 outside the cone
    let mut density = vec![0.0f64];
    let mut next = Vec::with_capacity(t_max + 1);
    let mut pos = 0usize;
    let mut lambda = 0.0f64;
    for l in 0..t_max {
        out.push((-lambda).exp());
        if l + 1 == t_max {
            break;
        }
        next.clear();
        let mut left = 1.0;
        for &f in &density {
            next.push(0.5 * (left + f));
            left = f;
        }
        next.push(0.5 * (left + 1.0));
        pos += coins.flip() as usize;
        lambda += next[pos];
        next[pos] = 0.0;
        std::mem::swap(&mut density, &mut next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn survival_from_samples() {
        let c = TailCurve::from_samples(&[Some(0), Some(2), Some(2), None], 3);
        assert_eq!(c.survival, vec![1.0, 0.75, 0.75, 0.25]);
        assert_eq!(c.censored, 1);
        assert!(c.is_monotone());
    }

    #[test]
    fn tau0_starts_at_one() {
        let e = Ensemble::new(2, 300);
        let h = holding_tail(&e, 64).unwrap();
        assert_eq!(h.tau0.at(0), Some(1.0));
        assert_eq!(h.max_hold.at(0), Some(1.0));
        assert!(h.tau0.is_monotone() && h.max_hold.is_monotone());
        let c = tau0_tail(2, 100, 30, Execution::Sequential).unwrap();
        assert_eq!(c.at(0), Some(1.0));
        assert_abs_diff_eq!(c.at(1).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(c.is_monotone());
    }

    #[test]
    fn second_step_weight_is_exact() {
        // After one step the tagged walker sits at ±1, where the unmet density
        // is (0 + 1)/2, so P(τ_0 >= 2) = e^-1 e^-1/2 for every path.
        let c = tau0_tail(7, 10, 3, Execution::Sequential).unwrap();
        assert_abs_diff_eq!(c.at(2).unwrap(), (-1.5f64).exp(), epsilon = 1e-15);
        assert_eq!(c.std_err[2], 0.0);
    }

    #[test]
    fn stretched_fit_of_exact_curve() {
        let thresholds: Vec<usize> = (0..=400).collect();
        let survival: Vec<f64> = thresholds.iter().map(|&t| 0.3 * (-1.2 * (t as f64).sqrt()).exp()).collect();
        let c = TailCurve { std_err: vec![0.0; survival.len()], thresholds, survival, samples: 1, censored: 0 };
        let f = fit_stretched_exp(&c, 25, 400).unwrap();
        assert_abs_diff_eq!(f.b, 1.2, epsilon = 1e-9);
        assert_abs_diff_eq!(f.a, 0.3f64.ln(), epsilon = 1e-9);
        assert_eq!(f.points, 376);
    }

    #[test]
    fn fit_needs_positive_points() {
        let c = TailCurve::from_samples(&[Some(1), Some(2)], 30);
        assert!(fit_stretched_exp(&c, 25, 30).is_err());
    }
}
