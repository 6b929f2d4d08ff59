use serde::{Deserialize, Serialize};

use super::stats::Frequency;
use super::Ensemble;
use crate::error::Result;
use crate::rwre::{sample_coupled_from, SeparationTally, TransitionTally};

/// Stay probability of `Y` at zero when the shared cell holds `v` crossings.
pub fn stay_probability(v: u32) -> f64 {
    0.5 * (1.0 + 1.0 / v as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroStay {
    pub v: u32,
    pub stay: Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub n: usize,
    pub replicates: usize,
    pub off_zero: TransitionTally,
    /// Frequencies of the increments `-2, 0, +2` away from zero against `1/4, 1/2, 1/4`.
    pub down: Frequency,
    pub stay: Frequency,
    pub up: Frequency,
    /// Stay frequencies at zero for each observed occupancy.
    pub at_zero: Vec<ZeroStay>,
    /// Stay frequency at zero pooled over `v >= 2`, against the bound `3/4`.
    pub pooled_shared: Frequency,
}

/// Transition frequencies of `Y` from one coupled pair per environment.
pub fn transition_frequencies(ensemble: &Ensemble, n: usize) -> Result<TransitionReport> {
    ensemble.require(1, "transition frequencies")?;
    let (off, sep) = ensemble.fold(
        (TransitionTally::default(), SeparationTally::default()),
        |r| {
            ensemble.with_rows(r, n, |rows| {
                let (mut x, mut xt) = ensemble.walk_streams(r);
                let pair = sample_coupled_from(rows, n, &mut x, &mut xt)?;
                let mut t = TransitionTally::default();
                t.record(&pair.difference());
                let mut s = SeparationTally::default();
                s.record(&pair);
                Ok((t, s))
            })
        },
        |(mut t, mut s), (t1, s1)| {
            t.merge(&t1);
            s.merge(&s1);
            (t, s)
        },
    )?;
    let total = off.total();
    let at_zero = sep
        .by_occupancy
        .iter()
        .map(|(&v, &(stay, leave))| ZeroStay { v, stay: Frequency::new(stay, stay + leave, stay_probability(v)) })
        .collect();
    let (stay, leave) = sep.pooled_from(2);
    Ok(TransitionReport {
        n,
        replicates: ensemble.replicates,
        off_zero: off,
        down: Frequency::new(off.down, total, 0.25),
        stay: Frequency::new(off.stay, total, 0.5),
        up: Frequency::new(off.up, total, 0.25),
        at_zero,
        pooled_shared: Frequency::new(stay, stay + leave, 0.75),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_walker_cells_always_keep_the_pair() {
        let r = transition_frequencies(&Ensemble::new(3, 200), 64).unwrap();
        let one = r.at_zero.iter().find(|z| z.v == 1).unwrap();
        assert_eq!(one.stay.hits, one.stay.trials);
        assert_eq!(one.stay.target, 1.0);
        assert_eq!(r.off_zero.total(), r.down.trials);
    }
}
