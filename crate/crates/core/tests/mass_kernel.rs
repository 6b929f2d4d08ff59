use rms_core::environment::{generate, ConeClasses, EnvSeedSpec, Measure, RowSource, Scheme};
use rms_core::mass::{mass_run, path_sum_oracle, quenched_moments, MassSweep};

fn spec(seed: u64, horizon: usize, scheme: Scheme, r: u64) -> EnvSeedSpec {
    EnvSeedSpec::new(seed, horizon, Measure::SizeBiased).replicate(r).scheme(scheme)
}

#[test]
fn dynamic_program_matches_path_sums() {
    for scheme in [Scheme::Walkers, Scheme::LightCone] {
        for r in 0..20 {
            let env = generate(&spec(21, 9, scheme, r)).unwrap();
            let field = mass_run(&env, 9).unwrap();
            for t in 0..=9 {
                for y in -(t as i64)..=t as i64 {
                    let exact = path_sum_oracle(&env, t, y).unwrap();
                    assert!((field.get(t, y) - exact).abs() < 1e-12, "{scheme:?} r={r} ({t},{y})");
                }
            }
        }
    }
}

#[test]
fn streamed_sweep_equals_stored_run() {
    let s = spec(22, 300, Scheme::LightCone, 1);
    let field = mass_run(&generate(&s).unwrap(), 300).unwrap();
    let mut rows = s.stream(ConeClasses::Origin).unwrap();
    let mut sweep = MassSweep::new();
    while let Some(row) = rows.next_row().unwrap() {
        sweep.advance(row).unwrap();
        assert_eq!(sweep.probs(), field.row(sweep.t()).unwrap().probs());
    }
}

#[test]
fn long_sweeps_conserve_mass() {
    for r in 0..3 {
        let mut rows = spec(23, 10_000, Scheme::LightCone, r).stream(ConeClasses::Origin).unwrap();
        let mut sweep = MassSweep::new();
        while let Some(row) = rows.next_row().unwrap() {
            sweep.advance(row).unwrap();
            if sweep.t().is_multiple_of(1000) {
                sweep.check_conservation().unwrap();
            }
        }
        assert!((sweep.total() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn moments_agree_between_sources() {
    let s = spec(24, 64, Scheme::LightCone, 0);
    let env = generate(&s).unwrap();
    let stored = quenched_moments(&env, 64).unwrap();
    let mut sweep = MassSweep::new();
    let mut rows = s.stream(ConeClasses::Origin).unwrap();
    while let Some(row) = rows.next_row().unwrap() {
        sweep.advance(row).unwrap();
    }
    assert_eq!(sweep.moments(), stored);
    // B(n) <= Z(n) since every 1/v <= 1
    assert!(stored.zero_weighted_sum <= stored.collision_sum);
}
