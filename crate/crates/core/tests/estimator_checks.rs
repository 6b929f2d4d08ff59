use rms_core::environment::Scheme;
use rms_core::estimators::*;
use rms_core::par::Execution;

#[test]
fn annealed_law_is_binomial_for_both_schemes() {
    for scheme in [Scheme::LightCone, Scheme::Walkers] {
        let e = Ensemble::new(31, 6000).scheme(scheme);
        let r = annealed_mean_check(&e, 6).unwrap();
        assert!(r.max_abs_z < 4.5, "{scheme:?}: {r:?}");
    }
}

#[test]
fn mass_and_collision_estimators_agree() {
    let c = moment_curve(&Ensemble::new(32, 6000), &[2, 4, 8, 16]).unwrap();
    assert!(c.mismatched.is_empty(), "{:?}", c.points);
    for p in &c.points {
        assert!(p.b.estimate <= p.z.estimate);
    }
}

#[test]
fn zero_count_dominates_second_moment() {
    let c = zero_count_curve(&Ensemble::new(33, 3000), &[8, 32, 128]).unwrap();
    for p in &c.points {
        assert!(p.ordered(), "{p:?}");
    }
}

#[test]
fn conditional_tail_matches_direct_counts() {
    let direct = holding_tail(&Ensemble::new(34, 40_000), 24).unwrap().tau0;
    let conditional = tau0_tail(34, 4000, 24, Execution::Parallel).unwrap();
    for t in [1, 2, 4, 8, 12, 16, 20] {
        let (a, b) = (direct.survival[t], conditional.survival[t]);
        let se = (direct.std_err[t].powi(2) + conditional.std_err[t].powi(2)).sqrt();
        assert!((a - b).abs() <= 4.0 * se + 1e-15, "t={t}: direct {a} vs conditional {b} (se {se})");
    }
}

#[test]
fn transition_law_off_zero() {
    let r = transition_frequencies(&Ensemble::new(35, 300), 512).unwrap();
    for f in [r.down, r.stay, r.up] {
        assert!(f.within(4.0), "{f:?}");
    }
    for z in &r.at_zero {
        if z.stay.trials > 100 {
            assert!(z.stay.within(4.0), "{z:?}");
        }
    }
}

#[test]
fn reports_do_not_depend_on_threading() {
    let seq = Ensemble::new(36, 64).exec(Execution::Sequential);
    let par = seq.exec(Execution::Parallel);
    assert_eq!(moment_curve(&seq, &[4, 16, 64]).unwrap(), moment_curve(&par, &[4, 16, 64]).unwrap());
    assert_eq!(zero_count_curve(&seq, &[16, 64]).unwrap(), zero_count_curve(&par, &[16, 64]).unwrap());
    assert_eq!(
        tau0_tail(36, 50, 40, Execution::Sequential).unwrap(),
        tau0_tail(36, 50, 40, Execution::Parallel).unwrap()
    );
}

#[test]
fn mu_grows_like_root_t() {
    // E|S_t| / 4 for even t, so μ_t / sqrt(t) -> 1 / sqrt(8π)
    let limit = 1.0 / (8.0 * std::f64::consts::PI).sqrt();
    let mut prev = 0.0;
    for t in [100usize, 400, 1600, 6400, 10_000] {
        let r = mu_t_exact(t) / (t as f64).sqrt();
        assert!(r > prev && r < limit, "t={t}: {r}");
        assert!((r - limit).abs() < 0.01);
        prev = r;
    }
}
