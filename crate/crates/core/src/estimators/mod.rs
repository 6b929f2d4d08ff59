//! Replicate aggregation into the statistics the model predicts.
//!
//! Every estimator maps replicate indices to per-environment summaries with
//! [`par::fold_indexed`] and folds them in index order, so reports are
//! bit-identical for any thread count.

use serde::{Deserialize, Serialize};

use crate::environment::{generate, ConeClasses, EnvSeedSpec, Measure, RowSource, Scheme};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rwre::walk_stream;
use rand_chacha::ChaCha8Rng;

pub mod annealed;
pub mod clt;
pub mod moment;
pub mod stats;
pub mod tails;
pub mod transitions;
pub mod zeros;

pub use annealed::{annealed_mean_check, binomial_pmf, AnnealedReport};
pub use clt::{clt_report, ks_distance, mu_t_exact, CltReport};
pub use moment::{fit_power_law, moment_curve, MomentCurve, PowerFit};
pub use stats::{Interval, LineFit, Welford};
pub use tails::{fit_stretched_exp, holding_tail, tau0_tail, HoldingTail, StretchedExpFit, TailCurve};
pub use transitions::{transition_frequencies, TransitionReport};
pub use zeros::{zero_count_curve, ZeroCountCurve};

/// Replicates folded per batch; bounds memory for large ensembles.
const CHUNK: usize = 1024;

/// A family of independent environments `0..replicates` under one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ensemble {
    pub seed: u64,
    pub replicates: usize,
    pub measure: Measure,
    pub scheme: Scheme,
    #[serde(skip)]
    pub exec: Execution,
}

impl Ensemble {
    /// Size-biased light-cone ensemble.
    pub fn new(seed: u64, replicates: usize) -> Self {
        Self { seed, replicates, measure: Measure::SizeBiased, scheme: Scheme::LightCone, exec: Execution::default() }
    }

    pub fn exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn env_spec(&self, replicate: usize, horizon: usize) -> EnvSeedSpec {
        EnvSeedSpec::new(self.seed, horizon, self.measure).replicate(replicate as u64).scheme(self.scheme)
    }

    /// Runs `f` on the rows of replicate `replicate` up to `horizon`. Light-cone
    /// replicates are streamed; walker replicates are materialized first.
    pub fn with_rows<T>(
        &self,
        replicate: usize,
        horizon: usize,
        f: impl FnOnce(&mut dyn RowSource) -> Result<T>,
    ) -> Result<T> {
        let spec = self.env_spec(replicate, horizon);
        match self.scheme {
            Scheme::LightCone => f(&mut spec.stream(ConeClasses::Origin)?),
            Scheme::Walkers => {
                let env = generate(&spec)?;
                f(&mut env.source())
            }
        }
    }

    /// The two walk streams of replicate `replicate`.
    pub fn walk_streams(&self, replicate: usize) -> (ChaCha8Rng, ChaCha8Rng) {
        let r = replicate as u64;
        (walk_stream(self.seed, r, 0), walk_stream(self.seed, r, 1))
    }

    /// Maps every replicate through `f` and folds the results in index order,
    /// stopping at the first error (by index).
    pub(crate) fn fold<T, A, F, G>(&self, init: A, f: F, mut fold: G) -> Result<A>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
        G: FnMut(A, T) -> A,
    {
        par::fold_indexed(self.exec, self.replicates, CHUNK, Ok(init), f, |acc, item| match (acc, item) {
            (Ok(a), Ok(t)) => Ok(fold(a, t)),
            (Err(e), _) | (Ok(_), Err(e)) => Err(e),
        })
    }

    pub(crate) fn require(&self, min: usize, what: &str) -> Result<()> {
        if self.replicates < min {
            return Err(Error::Insufficient(format!(
                "{what} needs at least {min} replicates, got {}",
                self.replicates
            )));
        }
        Ok(())
    }
}

/// Checks that `grid` is nonempty and strictly increasing.
pub(crate) fn check_grid(grid: &[usize]) -> Result<usize> {
    if grid.is_empty() {
        return Err(Error::Insufficient("empty n grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Malformed(format!("n grid must be strictly increasing: {grid:?}")));
    }
    Ok(*grid.last().unwrap())
}
