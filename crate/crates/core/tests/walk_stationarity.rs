use rms_core::environment::{generate, EnvSeedSpec, Measure, Scheme};
use rms_core::par::{map_indexed, Execution};
use rms_core::rwre::{sample_walk, walk_stream};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

/// Seen from the walk the environment is stationary, so `v(X_k)` keeps the
/// law of `v(0, 0)`, which is `1 + Poisson(1)`, at every step.
#[test]
fn occupancy_along_the_walk_is_size_biased_poisson() {
    const N: usize = 64;
    const ENVS: usize = 6000;
    let times = [0, 8, 32, N - 1];
    let seen = map_indexed(Execution::Parallel, ENVS, |r| {
        let spec = EnvSeedSpec::new(41, N, Measure::SizeBiased).replicate(r as u64).scheme(Scheme::Walkers);
        let env = generate(&spec).unwrap();
        let path = sample_walk(&env, N, &mut walk_stream(41, r as u64, 0)).unwrap().positions();
        times.map(|k| env.occupancy(k, path[k].1).unwrap())
    });
    let law = Poisson::new(1.0).unwrap();
    // bins v = 1, 2, 3 and v >= 4
    let mut probs: Vec<f64> = (0..3).map(|j| law.pmf(j)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let chi = ChiSquared::new(3.0).unwrap();
    for (i, k) in times.iter().enumerate() {
        let mut counts = [0u64; 4];
        for s in &seen {
            assert!(s[i] >= 1, "walk sits on an empty cell at k={k}");
            counts[(s[i] as usize - 1).min(3)] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| {
                let e = p * ENVS as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let p_value = 1.0 - chi.cdf(stat);
        assert!(p_value > 1e-3, "k={k}: counts {counts:?}, chi2 {stat}, p {p_value}");
    }
}
