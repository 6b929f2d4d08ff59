//! The acceptance checks, parameterized by scale so `selftest` can run them
//! quickly and the acceptance suite at full size.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use rms_core::environment::{generate, ConeClasses, EnvSeedSpec, Measure, RowSource, Scheme};
use rms_core::estimators::{self, Ensemble};
use rms_core::mass::{mass_run, path_sum_oracle, MassSweep};
use rms_core::par::{map_indexed, Execution};
use rms_core::rwre::{sample_walk, walk_stream};

use crate::commands::{KS_THRESHOLD, SIGMA2_WINDOW};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Scale {
    pub oracle_envs: usize,
    pub walks: usize,
    pub conservation_t: usize,
    pub conservation_envs: usize,
    pub annealed_reps: usize,
    pub identity_reps: usize,
    pub zero_reps: usize,
    pub transition_reps: usize,
    pub excursion_reps: usize,
    pub tail_samples: usize,
    pub moment_reps: usize,
    pub clt_horizon: usize,
    pub clt_envs: usize,
}

impl Scale {
    pub fn full() -> Self {
        Self {
            oracle_envs: 100,
            walks: 1_000_000,
            conservation_t: 10_000,
            conservation_envs: 10,
            annealed_reps: 100_000,
            identity_reps: 100_000,
            zero_reps: 10_000,
            transition_reps: 2_000,
            excursion_reps: 2_000,
            tail_samples: 100_000,
            moment_reps: 20_000,
            clt_horizon: 20_000,
            clt_envs: 10,
        }
    }

    pub fn reduced() -> Self {
        Self {
            oracle_envs: 20,
            walks: 1_000_000,
            conservation_t: 2_000,
            conservation_envs: 10,
            annealed_reps: 10_000,
            identity_reps: 10_000,
            zero_reps: 2_000,
            transition_reps: 300,
            excursion_reps: 300,
            tail_samples: 10_000,
            moment_reps: 500,
            clt_horizon: 20_000,
            clt_envs: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {:<22} {} ({:.1} s)", self.id, self.name, self.detail, self.seconds)
    }
}

type Verdict = Result<(bool, String)>;

const OFF_ZERO_MIN: u64 = 100_000;

pub const CHECKS: [(u8, &str); 12] = [
    (1, "mass-vs-oracle"),
    (2, "walks-vs-mass"),
    (3, "conservation"),
    (4, "annealed-binomial"),
    (5, "moment-identity"),
    (6, "zero-count-bound"),
    (7, "y-transitions"),
    (8, "excursion-growth"),
    (9, "tau0-tail"),
    (10, "moment-exponent"),
    (11, "quenched-clt"),
    (12, "thread-invariance"),
];

/// Runs one check, timing it and folding errors into a failure.
pub fn run_check(id: u8, scale: &Scale, seed: u64) -> Outcome {
    let name = CHECKS.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let start = Instant::now();
    let verdict = match id {
        1 => mass_vs_oracle(scale, seed),
        2 => walks_vs_mass(scale, seed),
        3 => conservation(scale, seed),
        4 => annealed(scale, seed),
        5 => moment_identity(scale, seed),
        6 => zero_bound(scale, seed),
        7 => transitions(scale, seed),
        8 => excursions(scale, seed),
        9 => tau0(scale, seed),
        10 => exponent(scale, seed),
        11 => clt(scale, seed),
        12 => thread_invariance(seed),
        _ => Ok((false, "no such check".into())),
    };
    let (passed, detail) = verdict.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all(scale: &Scale, seed: u64, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    CHECKS
        .iter()
        .map(|&(id, _)| {
            let o = run_check(id, scale, seed);
            report(&o);
            o
        })
        .collect()
}

fn ensemble(seed: u64, replicates: usize) -> Ensemble {
    Ensemble::new(seed, replicates).exec(Execution::Parallel)
}

fn mass_vs_oracle(scale: &Scale, seed: u64) -> Verdict {
    const T: usize = 10;
    let diffs = map_indexed(Execution::Parallel, scale.oracle_envs, |r| -> rms_core::Result<f64> {
        let env = generate(&EnvSeedSpec::new(seed, T, Measure::SizeBiased).replicate(r as u64))?;
        let field = mass_run(&env, T)?;
        let mut worst = 0.0f64;
        for t in 0..=T {
            for y in -(t as i64)..=t as i64 {
                worst = worst.max((field.get(t, y) - path_sum_oracle(&env, t, y)?).abs());
            }
        }
        Ok(worst)
    });
    let worst = diffs.into_iter().collect::<rms_core::Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    Ok((worst < 1e-12, format!("max |p - oracle| = {worst:.3e} over {} envs, t <= {T}", scale.oracle_envs)))
}

fn walks_vs_mass(scale: &Scale, seed: u64) -> Verdict {
    const T: usize = 12;
    const ENVS: usize = 10;
    let mut worst = 0.0f64;
    for r in 0..ENVS {
        let env = generate(&EnvSeedSpec::new(seed, T, Measure::SizeBiased).replicate(r as u64))?;
        let field = mass_run(&env, T)?;
        let ends = map_indexed(Execution::Parallel, scale.walks, |w| {
            sample_walk(&env, T, &mut walk_stream(seed, r as u64, w as u64)).map(|p| p.end().1)
        });
        let mut counts = [0u64; 2 * T + 1];
        for y in ends {
            counts[(y? + T as i64) as usize] += 1;
        }
        let n = scale.walks as f64;
        let tv = 0.5
            * counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (c as f64 / n - field.get(T, i as i64 - T as i64)).abs())
                .sum::<f64>();
        worst = worst.max(tv);
    }
    Ok((worst < 0.005, format!("max TV = {worst:.5} over {ENVS} envs, {} walks each at t = {T}", scale.walks)))
}

fn conservation(scale: &Scale, seed: u64) -> Verdict {
    let t = scale.conservation_t;
    let worst = map_indexed(Execution::Parallel, scale.conservation_envs, |r| -> rms_core::Result<f64> {
        let spec = EnvSeedSpec::new(seed, t, Measure::SizeBiased).replicate(r as u64).scheme(Scheme::LightCone);
        let mut rows = spec.stream(ConeClasses::Origin)?;
        let mut sweep = MassSweep::new();
        let mut worst = 0.0f64;
        while sweep.t() < t {
            sweep.advance(rows.require_row(t)?)?;
            worst = worst.max((sweep.total() - 1.0).abs());
        }
        Ok(worst)
    })
    .into_iter()
    .collect::<rms_core::Result<Vec<_>>>()?
    .into_iter()
    .fold(0.0, f64::max);
    Ok((worst <= 1e-9, format!("max |sum p - 1| = {worst:.3e} over {} envs, t <= {t}", scale.conservation_envs)))
}

fn annealed(scale: &Scale, seed: u64) -> Verdict {
    let r = estimators::annealed_mean_check(&ensemble(seed, scale.annealed_reps), 8)?;
    Ok((
        r.max_abs_z < 4.0,
        format!("max |z| = {:.3} over {} cells, {} replicates", r.max_abs_z, r.cells.len(), r.replicates),
    ))
}

fn moment_identity(scale: &Scale, seed: u64) -> Verdict {
    let c = estimators::moment_curve(&ensemble(seed, scale.identity_reps), &[16])?;
    let p = &c.points[0];
    Ok((
        p.consistent(),
        format!(
            "n = 16: M = {:.4} [{:.4}, {:.4}], B = {:.4} [{:.4}, {:.4}]",
            p.m.estimate, p.m.lo, p.m.hi, p.b.estimate, p.b.lo, p.b.hi
        ),
    ))
}

fn zero_bound(scale: &Scale, seed: u64) -> Verdict {
    let c = estimators::zero_count_curve(&ensemble(seed, scale.zero_reps), &[64, 256, 1024])?;
    let ok = c.points.iter().all(|p| p.ordered());
    let detail = c
        .points
        .iter()
        .map(|p| {
            format!(
                "n={}: M={:.2} Z={:.2} gap={:.2}+-{:.2}",
                p.n,
                p.m.estimate,
                p.zero_count.estimate,
                p.gap.estimate,
                p.gap.half_width()
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok((ok, detail))
}

fn transitions(scale: &Scale, seed: u64) -> Verdict {
    let r = estimators::transition_frequencies(&ensemble(seed, scale.transition_reps), 1024)?;
    let enough = r.off_zero.total() >= OFF_ZERO_MIN;
    let off = r.down.within(3.0) && r.stay.within(3.0) && r.up.within(3.0);
    let mut at = true;
    let mut parts =
        vec![format!("off-zero {} steps z=({:.2}, {:.2}, {:.2})", r.off_zero.total(), r.down.z, r.stay.z, r.up.z)];
    for v in 1..=3 {
        match r.at_zero.iter().find(|s| s.v == v) {
            Some(s) => {
                at &= s.stay.within(3.0);
                parts.push(format!("v={v} z={:.2} ({} visits)", s.stay.z, s.stay.trials));
            }
            None => {
                at = false;
                parts.push(format!("v={v} unobserved"));
            }
        }
    }
    let p = &r.pooled_shared;
    let pooled = p.observed <= p.target + 3.0 * p.sigma;
    parts.push(format!("pooled v>=2 stay {:.4} vs 0.75", p.observed));
    Ok((enough && off && at && pooled, parts.join("; ")))
}

fn excursions(scale: &Scale, seed: u64) -> Verdict {
    let c = estimators::zero_count_curve(&ensemble(seed, scale.excursion_reps), &[256, 1024, 4096])?;
    let spread = c.excursion_spread().unwrap_or(f64::INFINITY);
    let ratios: Vec<String> = c.points.iter().map(|p| format!("{:.3}", p.excursions_per_root())).collect();
    Ok((spread <= 0.25, format!("a(n)/sqrt(n) = [{}], spread {spread:.3}", ratios.join(", "))))
}

fn tau0(scale: &Scale, seed: u64) -> Verdict {
    let curve = estimators::tau0_tail(seed, scale.tail_samples, 400, Execution::Parallel)?;
    let fit = estimators::fit_stretched_exp(&curve, 25, 400)?;
    Ok((
        -fit.b < 0.0 && fit.r_squared > 0.9,
        format!("log S = {:.3} - {:.4} sqrt(t), R^2 = {:.5}, {} samples", fit.a, fit.b, fit.r_squared, curve.samples),
    ))
}

fn exponent(scale: &Scale, seed: u64) -> Verdict {
    let grid = [64, 128, 256, 512, 1024, 2048, 4096];
    let c = estimators::moment_curve(&ensemble(seed, scale.moment_reps), &grid)?;
    let Some(fit) = c.fit else { return Ok((false, "no power-law fit".into())) };
    Ok((
        (0.45..=0.80).contains(&fit.alpha),
        format!(
            "alpha = {:.4} +- {:.4}, R^2 = {:.4}, {} replicates",
            fit.alpha, fit.alpha_se, fit.r_squared, c.replicates
        ),
    ))
}

fn clt(scale: &Scale, seed: u64) -> Verdict {
    let t = scale.clt_horizon;
    let reports = map_indexed(Execution::Parallel, scale.clt_envs, |r| {
        let spec = EnvSeedSpec::new(seed, t, Measure::SizeBiased).replicate(r as u64).scheme(Scheme::LightCone);
        estimators::clt_report(&mut spec.stream(ConeClasses::Origin)?, t)
    })
    .into_iter()
    .collect::<rms_core::Result<Vec<_>>>()?;
    let passing = reports
        .iter()
        .filter(|r| r.ks < KS_THRESHOLD && (SIGMA2_WINDOW.0..=SIGMA2_WINDOW.1).contains(&r.sigma2))
        .count();
    let need = (scale.clt_envs * 9).div_ceil(10);
    let s: Vec<String> = reports.iter().map(|r| format!("{:.3}", r.sigma2)).collect();
    Ok((passing >= need, format!("{passing}/{} pass at T = {t}; sigma2 = [{}]", scale.clt_envs, s.join(", "))))
}

/// Data-producing invocations rerun under different thread counts.
fn invariance_commands(seed: u64) -> Vec<Vec<String>> {
    let s = seed.to_string();
    let cmds: [&[&str]; 8] = [
        &["gen-env", "--horizon", "64"],
        &["mass", "--t", "64", "--format", "csv"],
        &["walk", "--t", "64", "--walks", "200"],
        &["couple", "--t", "256", "--replicates", "20"],
        &["moment", "--replicates", "40", "--grid", "16:256:x4", "--format", "json"],
        &["zeros", "--replicates", "40", "--grid", "16,64", "--format", "csv"],
        &[
            "tails",
            "--replicates",
            "40",
            "--n",
            "64",
            "--samples",
            "200",
            "--t-max",
            "50",
            "--fit-lo",
            "5",
            "--fit-hi",
            "50",
        ],
        &["clt", "--horizon", "500", "--replicates", "3", "--format", "json"],
    ];
    cmds.iter()
        .map(|c| {
            let mut v: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            v.extend(["--seed".to_string(), s.clone()]);
            v
        })
        .collect()
}

/// Output files of a run directory, name and contents, manifests excluded.
fn data_files(dir: &Path) -> std::io::Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if !name.ends_with(".manifest.json") {
            out.push((name, std::fs::read(&path)?));
        }
    }
    out.sort();
    Ok(out)
}

fn thread_invariance(seed: u64) -> Verdict {
    let cmds = invariance_commands(seed);
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().map_err(|e| crate::HarnessError::io(Path::new("tempdir"), e))?;
        for (i, cmd) in cmds.iter().enumerate() {
            let out = dir.path().join(format!("{i}-{}.out", cmd[0]));
            let mut argv = vec!["rms".to_string()];
            argv.extend(cmd.iter().cloned());
            argv.extend(["--threads".into(), threads.into(), "--out".into(), out.display().to_string()]);
            let cli = <crate::args::Cli as clap::Parser>::try_parse_from(&argv)
                .map_err(|e| crate::HarnessError::config(e.to_string()))?;
            crate::commands::dispatch(cli.command)?;
        }
        runs.push(data_files(dir.path()).map_err(|e| crate::HarnessError::io(dir.path(), e))?);
    }
    let differing: Vec<&str> =
        runs[0].iter().zip(&runs[1]).filter(|(a, b)| a != b).map(|(a, _)| a.0.as_str()).collect();
    let same_set = runs[0].len() == runs[1].len();
    Ok((
        same_set && differing.is_empty(),
        if differing.is_empty() {
            format!("{} files identical for --threads 1 and 3", runs[0].len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    ))
}
