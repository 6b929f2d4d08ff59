//! Distributional checks on generated environments, for both generation schemes.

use rms_core::environment::{deserialize, generate, serialize, ConeClasses, EnvSeedSpec, Measure, RowSource, Scheme};
use rms_core::estimators::binomial_pmf;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

fn spec(seed: u64, horizon: usize, measure: Measure, scheme: Scheme, r: u64) -> EnvSeedSpec {
    EnvSeedSpec::new(seed, horizon, measure).replicate(r).scheme(scheme)
}

/// Pearson statistic of `counts[k]` (last bin is `>= k`) against Poisson(1).
fn poisson_chi_square(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let law = Poisson::new(1.0).unwrap();
    let k = counts.len();
    let mut probs: Vec<f64> = (0..k as u64 - 1).map(|i| law.pmf(i)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

fn p_value(stat: f64, bins: usize) -> f64 {
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn base_occupancies_are_poisson_one() {
    for scheme in [Scheme::Walkers, Scheme::LightCone] {
        let mut counts = [0u64; 5];
        for r in 0..3000 {
            let env = generate(&spec(11, 6, Measure::Base, scheme, r)).unwrap();
            // one cell per environment keeps the draws independent
            let v = env.occupancy(5, 1).unwrap();
            counts[(v as usize).min(4)] += 1;
        }
        let p = p_value(poisson_chi_square(&counts), counts.len());
        assert!(p > 1e-3, "{scheme:?}: {counts:?}, p = {p}");
    }
}

#[test]
fn size_biased_origin_is_one_plus_poisson() {
    for scheme in [Scheme::Walkers, Scheme::LightCone] {
        let mut counts = [0u64; 5];
        for r in 0..3000 {
            let env = generate(&spec(12, 2, Measure::SizeBiased, scheme, r)).unwrap();
            let v = env.occupancy(0, 0).unwrap();
            assert!(v >= 1);
            counts[(v as usize - 1).min(4)] += 1;
        }
        let p = p_value(poisson_chi_square(&counts), counts.len());
        assert!(p > 1e-3, "{scheme:?}: {counts:?}, p = {p}");
    }
}

#[test]
fn mean_occupancy_carries_the_tagged_walker() {
    // Ẽ v(t, y) = 1 + P(S_t = y): the background is stationary and the
    // extra walker performs simple random walk.
    let (t, reps) = (6usize, 4000u64);
    for scheme in [Scheme::Walkers, Scheme::LightCone] {
        let mut sums = vec![(0.0f64, 0.0f64); t + 1];
        for r in 0..reps {
            let env = generate(&spec(13, t + 1, Measure::SizeBiased, scheme, r)).unwrap();
            for (j, s) in sums.iter_mut().enumerate() {
                let v = env.occupancy(t, -(t as i64) + 2 * j as i64).unwrap() as f64;
                s.0 += v;
                s.1 += v * v;
            }
        }
        for (j, &(s, ss)) in sums.iter().enumerate() {
            let y = -(t as i64) + 2 * j as i64;
            let mean = s / reps as f64;
            let var = ss / reps as f64 - mean * mean;
            let z = (mean - 1.0 - binomial_pmf(t, y)) / (var / reps as f64).sqrt();
            assert!(z.abs() < 4.5, "{scheme:?} y={y}: mean {mean}, z {z}");
        }
    }
}

#[test]
fn splits_are_binomial_given_occupancy() {
    let mut by_plus = [0u64; 3];
    for r in 0..400 {
        let env = generate(&spec(14, 20, Measure::Base, Scheme::LightCone, r)).unwrap();
        for row in env.rows() {
            for (_, cell) in row.cells() {
                if cell.occupancy() == 2 {
                    by_plus[cell.plus as usize] += 1;
                }
            }
        }
    }
    let n: u64 = by_plus.iter().sum();
    for (k, target) in [0.25, 0.5, 0.25].into_iter().enumerate() {
        let f = by_plus[k] as f64 / n as f64;
        let sigma = (target * (1.0 - target) / n as f64).sqrt();
        assert!((f - target).abs() < 4.0 * sigma, "e+={k}: {f} vs {target}");
    }
}

#[test]
fn streamed_rows_match_stored_light_cone() {
    let s = spec(15, 80, Measure::SizeBiased, Scheme::LightCone, 3);
    let env = generate(&s).unwrap();
    let mut stream = s.stream(ConeClasses::Origin).unwrap();
    while let Some(row) = stream.next_row().unwrap() {
        for (y, cell) in row.cells() {
            assert_eq!(env.get(row.t(), y), Some(cell));
        }
    }
}

#[test]
fn generated_environments_round_trip() {
    for scheme in [Scheme::Walkers, Scheme::LightCone] {
        let env = generate(&spec(16, 40, Measure::SizeBiased, scheme, 0)).unwrap();
        let bytes = serialize(&env);
        assert_eq!(&bytes[..7], b"RMSENV1");
        let back = deserialize(&bytes).unwrap();
        assert_eq!(back, env);
        assert_eq!(serialize(&back), bytes);
    }
}

#[test]
fn generation_is_deterministic() {
    for scheme in [Scheme::Walkers, Scheme::LightCone] {
        let s = spec(17, 30, Measure::SizeBiased, scheme, 9);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        assert_ne!(generate(&s).unwrap(), generate(&s.replicate(10)).unwrap());
    }
}
