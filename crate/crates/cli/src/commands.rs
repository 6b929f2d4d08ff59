//! One function per subcommand: resolve the config, compute, emit artifacts.

use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use rms_core::environment::{self, generate, ConeClasses, EnvSeedSpec, Environment, Measure, Scheme};
use rms_core::estimators::{self, stats::Interval, Ensemble, TailCurve};
use rms_core::mass::{mass_run, CONSERVATION_TOL};
use rms_core::par::{map_indexed, Execution};
use rms_core::rwre::{sample_coupled, sample_walk, walk_stream, SeparationTally, TransitionTally};

use crate::args::{Command, Format, Invocation};
use crate::checks;
use crate::config::{resolve, Grid, Settings};
use crate::error::{HarnessError, Result};
use crate::output::{check_targets, csv_table, emit, json_document, Artifact};

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenEnv(inv) => run("gen-env", inv, gen_env),
        Command::Mass(inv) => run("mass", inv, mass),
        Command::Walk(inv) => run("walk", inv, walk),
        Command::Couple(inv) => run("couple", inv, couple),
        Command::Moment(inv) => run("moment", inv, moment),
        Command::Zeros(inv) => run("zeros", inv, zeros),
        Command::Tails(inv) => run("tails", inv, tails),
        Command::Annealed(inv) => run("annealed", inv, annealed),
        Command::Clt(inv) => run("clt", inv, clt),
        Command::Mu(inv) => run("mu", inv, mu),
        Command::Selftest(inv) => run("selftest", inv, selftest),
    }
}

fn run<F, C>(name: &str, inv: Invocation<F>, body: fn(&C, Option<Format>) -> Result<Vec<Artifact>>) -> Result<()>
where
    F: Args + Serialize,
    C: DeserializeOwned + Serialize + Sync,
{
    let (config, settings): (C, Settings) = resolve(&inv.common, &inv.flags)?;
    check_targets(&settings, &[])?;
    let started = Utc::now();
    let artifacts = with_threads(settings.threads, || body(&config, settings.format))?;
    emit(name, &config, &settings, started, artifacts)
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?
            .install(f),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    f()
}

fn pick(format: Option<Format>, default: Format, allowed: &[Format], command: &str) -> Result<Format> {
    let f = format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(HarnessError::config(format!("{command} does not write {f:?} output")));
    }
    Ok(f)
}

fn num(x: f64) -> String {
    x.to_string()
}

fn curve<'a>(points: impl IntoIterator<Item = (usize, &'a Interval)>) -> Vec<u8> {
    csv_table(
        &["n", "estimate", "ci_lo", "ci_hi"],
        points.into_iter().map(|(n, i)| vec![n.to_string(), num(i.estimate), num(i.lo), num(i.hi)]),
    )
}

fn tail_csv(c: &TailCurve) -> Vec<u8> {
    let intervals: Vec<Interval> = c.survival.iter().zip(&c.std_err).map(|(&s, &e)| Interval::normal(s, e)).collect();
    curve(c.thresholds.iter().copied().zip(&intervals))
}

fn size_biased() -> Measure {
    Measure::SizeBiased
}

fn light_cone() -> Scheme {
    Scheme::LightCone
}

fn one() -> usize {
    1
}

fn ensemble(seed: u64, replicates: usize, scheme: Scheme) -> Ensemble {
    Ensemble::new(seed, replicates).scheme(scheme).exec(Execution::Parallel)
}

fn load_env(path: &Path) -> Result<Environment> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(environment::deserialize(&bytes)?)
}

/// Environment named either by a file or by a seed spec.
fn environment_for(file: &Option<PathBuf>, spec: EnvSeedSpec, needed: usize) -> Result<Environment> {
    let env = match file {
        Some(path) => load_env(path)?,
        None => generate(&spec)?,
    };
    if env.horizon() < needed {
        return Err(HarnessError::config(format!("environment horizon {} is shorter than {needed}", env.horizon())));
    }
    Ok(env)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenEnvConfig {
    #[serde(default)]
    pub seed: u64,
    pub horizon: usize,
    #[serde(default = "size_biased")]
    pub measure: Measure,
    #[serde(default)]
    pub replicate: u64,
    #[serde(default)]
    pub scheme: Scheme,
}

fn gen_env(c: &GenEnvConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let format = pick(format, Format::Bin, &[Format::Bin, Format::Csv, Format::Json], "gen-env")?;
    let spec = EnvSeedSpec::new(c.seed, c.horizon, c.measure).replicate(c.replicate).scheme(c.scheme);
    let env = generate(&spec)?;
    let bytes = match format {
        Format::Bin => environment::serialize(&env),
        Format::Csv => csv_table(
            &["t", "y", "e_plus", "e_minus", "v"],
            env.rows().iter().flat_map(|row| {
                row.cells().map(move |(y, c)| {
                    vec![
                        row.t().to_string(),
                        y.to_string(),
                        c.plus.to_string(),
                        c.minus.to_string(),
                        c.occupancy().to_string(),
                    ]
                })
            }),
        ),
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                t: usize,
                lo: i64,
                stride: u8,
                plus: &'a [u32],
                minus: &'a [u32],
            }
            #[derive(Serialize)]
            struct Env<'a> {
                horizon: usize,
                seed: u64,
                replicate: u64,
                measure: Measure,
                scheme: Scheme,
                rows: Vec<Row<'a>>,
            }
            let rows = env
                .rows()
                .iter()
                .map(|r| Row { t: r.t(), lo: r.lo(), stride: r.stride(), plus: r.plus(), minus: r.minus() })
                .collect();
            json_document(
                "environment",
                &Env {
                    horizon: env.horizon(),
                    seed: env.seed(),
                    replicate: env.replicate(),
                    measure: env.measure(),
                    scheme: env.scheme(),
                    rows,
                },
            )
        }
    };
    Ok(vec![Artifact::primary(bytes)])
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub env: Option<PathBuf>,
    pub t: usize,
    #[serde(default = "size_biased")]
    pub measure: Measure,
    #[serde(default)]
    pub replicate: u64,
    #[serde(default)]
    pub scheme: Scheme,
}

fn mass(c: &MassConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let format = pick(format, Format::Csv, &[Format::Csv, Format::Json, Format::Bin], "mass")?;
    let spec = EnvSeedSpec::new(c.seed, c.t, c.measure).replicate(c.replicate).scheme(c.scheme);
    let env = environment_for(&c.env, spec, c.t)?;
    let field = mass_run(&env, c.t)?;
    let err = field.conservation_error();
    if err > CONSERVATION_TOL {
        return Err(HarnessError::Failed(format!("mass not conserved: deviation {err:e}")));
    }
    let mut bytes = Vec::new();
    match format {
        Format::Csv => field.write_csv(&mut bytes).expect("in-memory write"),
        Format::Bin => field.write_binary(&mut bytes).expect("in-memory write"),
        Format::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                t: usize,
                lo: i64,
                p: &'a [f64],
            }
            let rows: Vec<Row> =
                field.rows().iter().map(|r| Row { t: r.t(), lo: -(r.t() as i64), p: r.probs() }).collect();
            bytes = json_document("mass_field", &rows);
        }
    }
    Ok(vec![Artifact::primary(bytes)])
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub env: Option<PathBuf>,
    pub t: usize,
    #[serde(default = "one")]
    pub walks: usize,
    #[serde(default = "size_biased")]
    pub measure: Measure,
    #[serde(default)]
    pub replicate: u64,
    #[serde(default)]
    pub scheme: Scheme,
}

fn walk(c: &WalkConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let format = pick(format, Format::Csv, &[Format::Csv, Format::Json], "walk")?;
    let spec = EnvSeedSpec::new(c.seed, c.t, c.measure).replicate(c.replicate).scheme(c.scheme);
    let env = environment_for(&c.env, spec, c.t)?;
    let paths = map_indexed(Execution::Parallel, c.walks, |w| {
        sample_walk(&env, c.t, &mut walk_stream(c.seed, c.replicate, w as u64)).map(|p| p.positions())
    })
    .into_iter()
    .collect::<rms_core::Result<Vec<_>>>()?;
    let bytes = match format {
        Format::Json => {
            let ys: Vec<Vec<i64>> = paths.iter().map(|p| p.iter().map(|&(_, y)| y).collect()).collect();
            json_document("walks", &ys)
        }
        _ => csv_table(
            &["walk", "i", "y"],
            paths
                .iter()
                .enumerate()
                .flat_map(|(w, p)| p.iter().map(move |&(i, y)| vec![w.to_string(), i.to_string(), y.to_string()])),
        ),
    };
    Ok(vec![Artifact::primary(bytes)])
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub env: Option<PathBuf>,
    pub t: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

#[derive(Serialize)]
struct HoldRecord {
    start: usize,
    gamma: usize,
    censored: bool,
}

#[derive(Serialize)]
struct PairRecord {
    replicate: usize,
    zero_count: usize,
    excursion_count: usize,
    max_hold: usize,
    hold_occupation: usize,
    bounds_hold: bool,
    tau0: Option<usize>,
    excursions: Vec<(usize, Option<usize>)>,
    holds: Vec<HoldRecord>,
}

fn couple(c: &CoupleConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let format = pick(format, Format::Csv, &[Format::Csv, Format::Json], "couple")?;
    let shared = match &c.env {
        Some(path) => Some(environment_for(&Some(path.clone()), EnvSeedSpec::new(0, 0, Measure::SizeBiased), c.t)?),
        None => None,
    };
    let pairs = map_indexed(Execution::Parallel, c.replicates, |r| {
        let (mut x, mut xt) = (walk_stream(c.seed, r as u64, 0), walk_stream(c.seed, r as u64, 1));
        match &shared {
            Some(env) => sample_coupled(env, c.t, &mut x, &mut xt),
            None => {
                let spec = EnvSeedSpec::new(c.seed, c.t, Measure::SizeBiased).replicate(r as u64).scheme(c.scheme);
                sample_coupled(&generate(&spec)?, c.t, &mut x, &mut xt)
            }
        }
    })
    .into_iter()
    .collect::<rms_core::Result<Vec<_>>>()?;
    let bytes = match format {
        Format::Json => {
            let mut off = TransitionTally::default();
            let mut sep = SeparationTally::default();
            let mut records = Vec::with_capacity(pairs.len());
            for (r, pair) in pairs.iter().enumerate() {
                let d = pair.decompose()?;
                off.record(&d.y_path);
                sep.record(pair);
                records.push(PairRecord {
                    replicate: r,
                    zero_count: d.zero_count,
                    excursion_count: d.excursion_count,
                    max_hold: d.max_hold(),
                    hold_occupation: d.hold_occupation(),
                    bounds_hold: d.bounds_hold(),
                    tau0: rms_core::rwre::first_shared_time(&pair.occupancy),
                    excursions: d.excursions.iter().map(|e| (e.start, e.end)).collect(),
                    holds: d
                        .holds
                        .iter()
                        .map(|h| HoldRecord { start: h.start, gamma: h.gamma, censored: h.censored })
                        .collect(),
                });
            }
            #[derive(Serialize)]
            struct Doc {
                pairs: Vec<PairRecord>,
                off_zero: TransitionTally,
                at_zero: SeparationTally,
            }
            json_document("coupled_pairs", &Doc { pairs: records, off_zero: off, at_zero: sep })
        }
        _ => csv_table(
            &["replicate", "i", "y_X", "y_X_tilde", "Y", "v_at_X"],
            pairs.iter().enumerate().flat_map(|(r, pair)| {
                let (xs, xts) = (pair.x.positions(), pair.x_tilde.positions());
                (0..=pair.len()).map(move |i| {
                    let v = pair.occupancy.get(i).map(|v| v.to_string()).unwrap_or_default();
                    let (a, b) = (xs[i].1, xts[i].1);
                    vec![r.to_string(), i.to_string(), a.to_string(), b.to_string(), (a - b).to_string(), v]
                })
            }),
        ),
    };
    Ok(vec![Artifact::primary(bytes)])
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "moment_grid")]
    pub grid: Grid,
    #[serde(default = "light_cone")]
    pub scheme: Scheme,
}

fn default_replicates() -> usize {
    1000
}

fn moment_grid() -> Grid {
    Grid(vec![64, 128, 256, 512, 1024, 2048, 4096])
}

fn moment(c: &MomentConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let format = pick(format, Format::Json, &[Format::Csv, Format::Json], "moment")?;
    let m = estimators::moment_curve(&ensemble(c.seed, c.replicates, c.scheme), &c.grid.0)?;
    if !m.mismatched.is_empty() {
        eprintln!("rms: warning: M and B intervals do not overlap at n = {:?}", m.mismatched);
    }
    Ok(match format {
        Format::Json => vec![Artifact::primary(json_document("moment_curve", &m))],
        _ => vec![
            Artifact::primary(curve(m.points.iter().map(|p| (p.n, &p.m)))),
            Artifact::sibling("b", curve(m.points.iter().map(|p| (p.n, &p.b)))),
        ],
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZerosConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "zeros_grid")]
    pub grid: Grid,
    #[serde(default = "light_cone")]
    pub scheme: Scheme,
}

fn zeros_grid() -> Grid {
    Grid(vec![64, 256, 1024])
}

fn zeros(c: &ZerosConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let format = pick(format, Format::Json, &[Format::Csv, Format::Json], "zeros")?;
    let z = estimators::zero_count_curve(&ensemble(c.seed, c.replicates, c.scheme), &c.grid.0)?;
    Ok(match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                curve: &'a estimators::ZeroCountCurve,
                ordered: Vec<bool>,
                excursions_per_root: Vec<f64>,
                excursion_spread: Option<f64>,
            }
            let doc = Doc {
                curve: &z,
                ordered: z.points.iter().map(|p| p.ordered()).collect(),
                excursions_per_root: z.points.iter().map(|p| p.excursions_per_root()).collect(),
                excursion_spread: z.excursion_spread(),
            };
            vec![Artifact::primary(json_document("zero_count_curve", &doc))]
        }
        _ => vec![
            Artifact::primary(curve(z.points.iter().map(|p| (p.n, &p.zero_count)))),
            Artifact::sibling("m", curve(z.points.iter().map(|p| (p.n, &p.m)))),
            Artifact::sibling("excursions", curve(z.points.iter().map(|p| (p.n, &p.excursions)))),
        ],
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "tail_n")]
    pub n: usize,
    #[serde(default = "tail_samples")]
    pub samples: usize,
    #[serde(default = "tail_t_max")]
    pub t_max: usize,
    #[serde(default = "fit_lo")]
    pub fit_lo: usize,
    #[serde(default = "tail_t_max")]
    pub fit_hi: usize,
    #[serde(default = "light_cone")]
    pub scheme: Scheme,
}

fn tail_n() -> usize {
    1024
}

fn tail_samples() -> usize {
    10_000
}

fn tail_t_max() -> usize {
    400
}

fn fit_lo() -> usize {
    25
}

fn tails(c: &TailsConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let format = pick(format, Format::Json, &[Format::Csv, Format::Json], "tails")?;
    if c.fit_lo > c.fit_hi || c.fit_hi > c.t_max {
        return Err(HarnessError::config("need fit_lo <= fit_hi <= t_max"));
    }
    let holding = estimators::holding_tail(&ensemble(c.seed, c.replicates, c.scheme), c.n)?;
    let conditional = estimators::tau0_tail(c.seed, c.samples, c.t_max, Execution::Parallel)?;
    Ok(match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                holding: &'a estimators::HoldingTail,
                tau0_conditional: &'a TailCurve,
                fit: Option<estimators::StretchedExpFit>,
                fit_error: Option<String>,
            }
            let (fit, fit_error) = match estimators::fit_stretched_exp(&conditional, c.fit_lo, c.fit_hi) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            vec![Artifact::primary(json_document(
                "holding_tails",
                &Doc { holding: &holding, tau0_conditional: &conditional, fit, fit_error },
            ))]
        }
        _ => vec![
            Artifact::primary(tail_csv(&conditional)),
            Artifact::sibling("direct", tail_csv(&holding.tau0)),
            Artifact::sibling("maxhold", tail_csv(&holding.max_hold)),
        ],
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealedConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "annealed_replicates")]
    pub replicates: usize,
    #[serde(default = "annealed_n")]
    pub n: usize,
    #[serde(default = "light_cone")]
    pub scheme: Scheme,
}

fn annealed_replicates() -> usize {
    10_000
}

fn annealed_n() -> usize {
    8
}

fn annealed(c: &AnnealedConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let format = pick(format, Format::Json, &[Format::Csv, Format::Json], "annealed")?;
    let r = estimators::annealed_mean_check(&ensemble(c.seed, c.replicates, c.scheme), c.n)?;
    Ok(vec![Artifact::primary(match format {
        Format::Json => json_document("annealed_check", &r),
        _ => csv_table(
            &["y", "target", "mean", "std_err", "z"],
            r.cells.iter().map(|c| vec![c.y.to_string(), num(c.target), num(c.mean), num(c.std_err), num(c.z)]),
        ),
    })])
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub env: Option<PathBuf>,
    #[serde(default = "clt_horizon")]
    pub horizon: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default = "light_cone")]
    pub scheme: Scheme,
}

fn clt_horizon() -> usize {
    20_000
}

/// Desk-scale pass thresholds for one environment; not constants of the model.
pub const KS_THRESHOLD: f64 = 0.05;
pub const SIGMA2_WINDOW: (f64, f64) = (0.9, 1.1);

#[derive(Debug, Serialize)]
struct CltSummary {
    replicate: usize,
    horizon: usize,
    ks: f64,
    sigma2: f64,
    mean: f64,
    passes: bool,
}

fn clt_one(c: &CltConfig, r: usize) -> Result<estimators::CltReport> {
    if let Some(path) = &c.env {
        let env = load_env(path)?;
        return Ok(estimators::clt_report(&mut env.source(), c.horizon)?);
    }
    let spec = EnvSeedSpec::new(c.seed, c.horizon, Measure::SizeBiased).replicate(r as u64).scheme(c.scheme);
    Ok(match c.scheme {
        Scheme::LightCone => estimators::clt_report(&mut spec.stream(ConeClasses::Origin)?, c.horizon)?,
        Scheme::Walkers => estimators::clt_report(&mut generate(&spec)?.source(), c.horizon)?,
    })
}

fn clt(c: &CltConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let format = pick(format, Format::Json, &[Format::Csv, Format::Json], "clt")?;
    let count = if c.env.is_some() { 1 } else { c.replicates };
    let reports = map_indexed(Execution::Parallel, count, |r| clt_one(c, r)).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(vec![Artifact::primary(match format {
        Format::Json => {
            let summaries: Vec<CltSummary> = reports
                .iter()
                .enumerate()
                .map(|(r, rep)| CltSummary {
                    replicate: r,
                    horizon: rep.horizon,
                    ks: rep.ks,
                    sigma2: rep.sigma2,
                    mean: rep.mean,
                    passes: rep.ks < KS_THRESHOLD && rep.sigma2 >= SIGMA2_WINDOW.0 && rep.sigma2 <= SIGMA2_WINDOW.1,
                })
                .collect();
            #[derive(Serialize)]
            struct Doc {
                ks_threshold: f64,
                sigma2_window: (f64, f64),
                passing: usize,
                reports: Vec<CltSummary>,
            }
            let passing = summaries.iter().filter(|s| s.passes).count();
            json_document(
                "clt",
                &Doc { ks_threshold: KS_THRESHOLD, sigma2_window: SIGMA2_WINDOW, passing, reports: summaries },
            )
        }
        _ => csv_table(
            &["replicate", "x", "cdf"],
            reports.iter().enumerate().flat_map(|(r, rep)| {
                rep.support.iter().zip(&rep.cdf).map(move |(&x, &f)| vec![r.to_string(), num(x), num(f)])
            }),
        ),
    })])
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuConfig {
    pub t: usize,
    #[serde(default)]
    pub seed: u64,
}

fn mu(c: &MuConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    let value = estimators::mu_t_exact(c.t);
    let bytes = match format {
        None => format!("{value}\n").into_bytes(),
        Some(Format::Json) => {
            #[derive(Serialize)]
            struct Mu {
                t: usize,
                mu: f64,
                per_root_t: Option<f64>,
            }
            let per_root_t = (c.t > 0).then(|| value / (c.t as f64).sqrt());
            json_document("mu", &Mu { t: c.t, mu: value, per_root_t })
        }
        Some(Format::Csv) => csv_table(&["t", "mu"], [vec![c.t.to_string(), num(value)]]),
        Some(Format::Bin) => return Err(HarnessError::config("mu does not write Bin output")),
    };
    Ok(vec![Artifact::primary(bytes)])
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    #[serde(default = "selftest_seed")]
    pub seed: u64,
}

fn selftest_seed() -> u64 {
    1
}

fn selftest(c: &SelftestConfig, format: Option<Format>) -> Result<Vec<Artifact>> {
    pick(format, Format::Json, &[Format::Json], "selftest")?;
    let outcomes = checks::run_all(&checks::Scale::reduced(), c.seed, |o| eprintln!("{o}"));
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if !failed.is_empty() {
        return Err(HarnessError::Failed(format!("selftest failed checks {failed:?}")));
    }
    Ok(vec![Artifact::primary(json_document("selftest", &outcomes))])
}
