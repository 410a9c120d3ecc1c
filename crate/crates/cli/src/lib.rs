//! Benchmark harness: seeded replications of optimizers on the test-function
//! registry, long-format result tables and average-rank aggregation.
//!
//! Result CSV columns, in order:
//!
//! ```text
//! problem,optimizer,seed,eval_index,best_so_far,failure[,wall_seconds]
//! ```
//!
//! `eval_index` counts evaluations from 1 and `best_so_far` is the running
//! minimum. A failed run contributes a single row with `eval_index` 0, an
//! empty `best_so_far` and the message in `failure`. `wall_seconds` (total
//! run time) is only written with timing enabled, since it would make
//! otherwise identical runs differ.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use smbo_core::design::{lhs_design, DEFAULT_MAXIMIN_RESTARTS};
use smbo_core::multiobj::adaptive_reference;
use smbo_core::{
    mbo, mbo_multi, problem, Assignment, CriterionSpec, Design, FocusConfig, InfillOptimizer, MboControl, MoAlgorithm,
    MoControl, ParamSpace, ProblemPair, SurrogateChoice, TerminationRule,
};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Seed for one stream, mixed from the base seed, a key and a replicate.
pub fn derive_seed(base: u64, key: &str, replicate: u64) -> u64 {
    splitmix(splitmix(base ^ fnv1a(key)) ^ splitmix(replicate.wrapping_add(1)))
}

fn x_of(a: &Assignment) -> Vec<f64> {
    a.values()
        .iter()
        .map(|v| v.expect("box spaces have no inactive values").as_f64())
        .collect()
}

/// An optimizer in a benchmark: `random`, `mbo`, `mbo:<criterion>`,
/// `mbo-gp:<criterion>` or `mbo-rf:<criterion>`.
#[derive(Clone, Debug, PartialEq)]
pub enum OptimizerSpec {
    Random,
    Mbo {
        criterion: Option<CriterionSpec>,
        surrogate: SurrogateChoice,
    },
}

impl FromStr for OptimizerSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let s = s.trim();
        if s == "random" {
            return Ok(OptimizerSpec::Random);
        }
        let (head, crit) = match s.split_once(':') {
            Some((h, c)) => (h, Some(c)),
            None => (s, None),
        };
        let surrogate = match head {
            "mbo" => SurrogateChoice::Auto,
            "mbo-gp" => SurrogateChoice::Gp,
            "mbo-rf" => SurrogateChoice::Forest,
            _ => bail!("unknown optimizer `{s}`"),
        };
        let criterion = crit.map(CriterionSpec::from_str).transpose()?;
        Ok(OptimizerSpec::Mbo { criterion, surrogate })
    }
}

impl fmt::Display for OptimizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimizerSpec::Random => f.write_str("random"),
            OptimizerSpec::Mbo { criterion, surrogate } => {
                let head = match surrogate {
                    SurrogateChoice::Auto => "mbo",
                    SurrogateChoice::Gp => "mbo-gp",
                    SurrogateChoice::Forest => "mbo-rf",
                };
                match criterion {
                    Some(c) => write!(f, "{head}:{c}"),
                    None => f.write_str(head),
                }
            }
        }
    }
}

/// Engine settings shared by every MBO run of a benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineSettings {
    pub focus: FocusConfig,
    pub refit_interval: usize,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            focus: FocusConfig::default(),
            refit_interval: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub problems: Vec<String>,
    pub optimizers: Vec<String>,
    pub init: usize,
    pub iters: usize,
    pub seeds: u64,
    pub base_seed: u64,
    pub workers: usize,
    pub timing: bool,
    pub engine: EngineSettings,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            problems: vec![],
            optimizers: vec![],
            init: 25,
            iters: 50,
            seeds: 10,
            base_seed: 1,
            workers: 1,
            timing: false,
            engine: EngineSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub problem: String,
    pub optimizer: String,
    pub seed: u64,
    pub eval_index: usize,
    pub best_so_far: Option<f64>,
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

/// One finished or failed run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub rows: Vec<BenchRow>,
    pub failed: bool,
}

/// The shared initial design for `problem` and replicate `seed`.
pub fn shared_design(space: &ParamSpace, problem: &str, n: usize, base: u64, seed: u64) -> anyhow::Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base, &format!("design/{problem}"), seed));
    Ok(lhs_design(space, n, &mut rng, DEFAULT_MAXIMIN_RESTARTS)?)
}

fn trace(values: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    values
        .iter()
        .map(|&v| {
            best = best.min(v);
            best
        })
        .collect()
}

/// Objective values, in evaluation order, of one optimizer run.
pub fn run_single(
    problem_name: &str,
    optimizer: &OptimizerSpec,
    design: &Design,
    iters: usize,
    seed: u64,
    settings: &EngineSettings,
) -> anyhow::Result<Vec<f64>> {
    let p = problem(problem_name)?;
    let space = p.space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match optimizer {
        OptimizerSpec::Random => {
            let mut ys: Vec<f64> = design.points.iter().map(|a| p.eval(&x_of(a))).collect();
            ys.extend((0..iters).map(|_| p.eval(&x_of(&space.sample_uniform(&mut rng)))));
            Ok(ys)
        }
        OptimizerSpec::Mbo { criterion, surrogate } => {
            let mut control = MboControl {
                criterion: *criterion,
                optimizer: InfillOptimizer::Focus(settings.focus),
                termination: vec![TerminationRule::MaxIters(iters)],
                refit_interval: settings.refit_interval,
                parallel: false,
                ..MboControl::default()
            };
            control.surrogate.choice = *surrogate;
            if let Some(m) = control.resolved_criterion(&space).batch_size() {
                control.points_per_iter = m;
            }
            let result = mbo(
                |a| Ok(p.eval(&x_of(a))),
                &space,
                Some(design.clone()),
                &control,
                &mut rng,
            )?;
            Ok(result.archive.rows().iter().map(|r| r.y[0]).collect())
        }
    }
}

/// Runs every (problem, optimizer, seed) combination.
///
/// Runs execute on `workers` threads; rows come back ordered by problem,
/// optimizer and seed as listed in the config, whatever the scheduling.
pub fn run_benchmark(config: &BenchConfig) -> anyhow::Result<Vec<RunOutcome>> {
    let optimizers = config
        .optimizers
        .iter()
        .map(|o| o.parse::<OptimizerSpec>())
        .collect::<anyhow::Result<Vec<_>>>()?;
    if config.init < 2 {
        bail!("the initial design needs at least 2 points");
    }
    let mut designs = BTreeMap::new();
    for name in &config.problems {
        let space = problem(name)?.space();
        for seed in 0..config.seeds {
            designs.insert(
                (name.clone(), seed),
                shared_design(&space, name, config.init, config.base_seed, seed)?,
            );
        }
    }
    let mut jobs = Vec::new();
    for name in &config.problems {
        for (opt_text, opt) in config.optimizers.iter().zip(&optimizers) {
            for seed in 0..config.seeds {
                jobs.push((name.clone(), opt_text.trim().to_string(), opt.clone(), seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .context("building the worker pool")?;
    let outcomes = pool.install(|| {
        jobs.par_iter()
            .map(|(name, opt_text, opt, seed)| {
                let started = Instant::now();
                let run_seed = derive_seed(config.base_seed, &format!("run/{name}/{opt_text}"), *seed);
                let design = &designs[&(name.clone(), *seed)];
                let result = run_single(name, opt, design, config.iters, run_seed, &config.engine);
                let wall = config.timing.then(|| started.elapsed().as_secs_f64());
                let row = |eval_index, best_so_far, failure| BenchRow {
                    problem: name.clone(),
                    optimizer: opt_text.clone(),
                    seed: *seed,
                    eval_index,
                    best_so_far,
                    failure,
                    wall_seconds: wall,
                };
                match result {
                    Ok(ys) => RunOutcome {
                        rows: trace(&ys)
                            .into_iter()
                            .enumerate()
                            .map(|(i, b)| row(i + 1, Some(b), None))
                            .collect(),
                        failed: false,
                    },
                    Err(e) => RunOutcome {
                        rows: vec![row(0, None, Some(format!("{e:#}")))],
                        failed: true,
                    },
                }
            })
            .collect()
    });
    Ok(outcomes)
}

const COLUMNS: [&str; 6] = ["problem", "optimizer", "seed", "eval_index", "best_so_far", "failure"];

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W, timing: bool) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = COLUMNS.to_vec();
    if timing {
        header.push("wall_seconds");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.problem.clone(),
            r.optimizer.clone(),
            r.seed.to_string(),
            r.eval_index.to_string(),
            r.best_so_far.map(|v| v.to_string()).unwrap_or_default(),
            r.failure.clone().unwrap_or_default(),
        ];
        if timing {
            rec.push(r.wall_seconds.map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[BenchRow], mut out: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

/// Reads rows written by [`write_csv`], with or without timing.
pub fn read_csv<R: Read>(input: R) -> anyhow::Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let idx: Vec<usize> = COLUMNS
        .iter()
        .map(|c| col(c).ok_or_else(|| anyhow!("missing column `{c}`")))
        .collect::<anyhow::Result<_>>()?;
    let wall = col("wall_seconds");
    let opt_f64 = |s: &str| -> anyhow::Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            Ok(Some(s.parse()?))
        }
    };
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let parsed = (|| -> anyhow::Result<BenchRow> {
            Ok(BenchRow {
                problem: get(idx[0]).to_string(),
                optimizer: get(idx[1]).to_string(),
                seed: get(idx[2]).parse()?,
                eval_index: get(idx[3]).parse()?,
                best_so_far: opt_f64(get(idx[4]))?,
                failure: Some(get(idx[5]).to_string()).filter(|s| !s.is_empty()),
                wall_seconds: match wall {
                    Some(i) => opt_f64(get(i))?,
                    None => None,
                },
            })
        })();
        rows.push(parsed.with_context(|| format!("row {}", line + 2))?);
    }
    Ok(rows)
}

/// Mean rank of one optimizer over all (problem, seed) cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankRow {
    pub optimizer: String,
    pub mean_rank: f64,
    pub cells: usize,
    pub mean_wall_seconds: Option<f64>,
}

/// Final best value and wall time of one run.
type FinalEntry = (f64, Option<f64>);

/// Ranks optimizers by final best value within each (problem, seed) cell,
/// averaging ranks over ties, then averages over cells. Failed runs rank
/// last. Optimizers appear in order of first occurrence.
pub fn aggregate_ranks(rows: &[BenchRow]) -> anyhow::Result<Vec<RankRow>> {
    let mut order: Vec<String> = Vec::new();
    // (problem, seed) -> optimizer -> (final value, wall time)
    let mut cells: BTreeMap<(String, u64), BTreeMap<String, FinalEntry>> = BTreeMap::new();
    for r in rows {
        if !order.contains(&r.optimizer) {
            order.push(r.optimizer.clone());
        }
        let value = r.best_so_far.unwrap_or(f64::INFINITY);
        let cell = cells.entry((r.problem.clone(), r.seed)).or_default();
        let entry = cell.entry(r.optimizer.clone()).or_insert((value, r.wall_seconds));
        // rows are in eval order, so the last one holds the final value
        *entry = (value, r.wall_seconds);
    }
    if order.len() < 2 {
        bail!("ranking needs at least two optimizers");
    }
    let mut sums: BTreeMap<&str, (f64, usize, f64, usize)> = BTreeMap::new();
    for cell in cells.values() {
        let entries: Vec<(&String, f64)> = cell.iter().map(|(k, v)| (k, v.0)).collect();
        for (name, value) in &entries {
            let below = entries.iter().filter(|(_, v)| v < value).count() as f64;
            let equal = entries.iter().filter(|(_, v)| v == value).count() as f64;
            let rank = below + (equal + 1.0) / 2.0;
            let s = sums.entry(name.as_str()).or_default();
            s.0 += rank;
            s.1 += 1;
            if let Some(w) = cell[*name].1 {
                s.2 += w;
                s.3 += 1;
            }
        }
    }
    Ok(order
        .iter()
        .map(|name| {
            let (rank_sum, n, wall_sum, wall_n) = sums.get(name.as_str()).copied().unwrap_or_default();
            RankRow {
                optimizer: name.clone(),
                mean_rank: rank_sum / n.max(1) as f64,
                cells: n,
                mean_wall_seconds: (wall_n > 0).then(|| wall_sum / wall_n as f64),
            }
        })
        .collect())
}

pub fn write_ranks<W: Write>(ranks: &[RankRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let timing = ranks.iter().any(|r| r.mean_wall_seconds.is_some());
    let mut header = vec!["optimizer", "mean_rank", "cells"];
    if timing {
        header.push("mean_wall_seconds");
    }
    w.write_record(&header)?;
    for r in ranks {
        let mut rec = vec![r.optimizer.clone(), format!("{:.4}", r.mean_rank), r.cells.to_string()];
        if timing {
            rec.push(r.mean_wall_seconds.map(|v| format!("{v:.3}")).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A budget given either as an absolute count or as a multiple of the
/// dimension (`44d`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Evals(usize),
    PerDim(usize),
}

impl Budget {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            Budget::Evals(n) => n,
            Budget::PerDim(k) => k * d,
        }
    }
}

impl FromStr for Budget {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let s = s.trim();
        match s.strip_suffix('d') {
            Some(k) => Ok(Budget::PerDim(k.parse().with_context(|| format!("bad budget `{s}`"))?)),
            None => Ok(Budget::Evals(s.parse().with_context(|| format!("bad budget `{s}`"))?)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MoBenchConfig {
    pub pair: String,
    /// `parego`, `smsego` or `random`.
    pub algorithms: Vec<String>,
    pub budget: Budget,
    pub init: Budget,
    pub seeds: u64,
    pub base_seed: u64,
    /// Hypervolume reference point; by default `max + 0.1 * range` of each
    /// seed's shared initial design.
    pub reference: Option<[f64; 2]>,
    pub workers: usize,
    pub engine: EngineSettings,
}

impl Default for MoBenchConfig {
    fn default() -> Self {
        Self {
            pair: String::new(),
            algorithms: vec!["parego".into(), "smsego".into(), "random".into()],
            budget: Budget::PerDim(44),
            init: Budget::PerDim(4),
            seeds: 10,
            base_seed: 1,
            reference: None,
            workers: 1,
            engine: EngineSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoRow {
    pub pair: String,
    pub algorithm: String,
    pub seed: u64,
    pub evaluations: usize,
    pub front_size: usize,
    pub reference: [f64; 2],
    pub hypervolume: Option<f64>,
    pub failure: Option<String>,
}

/// Objective vectors, in evaluation order, of one bi-objective run.
pub fn run_mo_single(
    pair: &ProblemPair,
    algorithm: &str,
    design: &Design,
    budget: usize,
    seed: u64,
    settings: &EngineSettings,
) -> anyhow::Result<Vec<[f64; 2]>> {
    let space = pair.space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ys: Vec<[f64; 2]> = design.points.iter().map(|a| pair.eval(&x_of(a))).collect();
    if algorithm == "random" {
        while ys.len() < budget {
            ys.push(pair.eval(&x_of(&space.sample_uniform(&mut rng))));
        }
        return Ok(ys);
    }
    let control = MoControl {
        algorithm: algorithm.parse::<MoAlgorithm>()?,
        termination: vec![TerminationRule::MaxEvals(budget)],
        optimizer: InfillOptimizer::Focus(settings.focus),
        refit_interval: settings.refit_interval,
        parallel: false,
        ..MoControl::default()
    };
    let result = mbo_multi(
        |a| Ok(pair.eval(&x_of(a)).to_vec()),
        &space,
        Some(design.clone()),
        &control,
        &mut rng,
    )?;
    Ok(result.archive.rows().iter().map(|r| [r.y[0], r.y[1]]).collect())
}

pub fn run_mo_benchmark(config: &MoBenchConfig) -> anyhow::Result<Vec<MoRow>> {
    let pair = ProblemPair::parse(&config.pair)?;
    let d = pair.dim();
    let (budget, init) = (config.budget.resolve(d), config.init.resolve(d));
    if init < 2 || init > budget {
        bail!("need 2 <= initial design ({init}) <= budget ({budget})");
    }
    for a in &config.algorithms {
        if a != "random" {
            a.parse::<MoAlgorithm>()?;
        }
    }
    let space = pair.space();
    let name = pair.name();
    let designs = (0..config.seeds)
        .map(|s| shared_design(&space, &name, init, config.base_seed, s))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let jobs: Vec<(String, u64)> = config
        .algorithms
        .iter()
        .flat_map(|a| (0..config.seeds).map(move |s| (a.clone(), s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|(algo, seed)| {
                let design = &designs[*seed as usize];
                let reference = config.reference.unwrap_or_else(|| {
                    let init_ys: Vec<Vec<f64>> = design.points.iter().map(|a| pair.eval(&x_of(a)).to_vec()).collect();
                    adaptive_reference(&init_ys)
                });
                let run_seed = derive_seed(config.base_seed, &format!("mo/{name}/{algo}"), *seed);
                let mut row = MoRow {
                    pair: name.clone(),
                    algorithm: algo.clone(),
                    seed: *seed,
                    evaluations: 0,
                    front_size: 0,
                    reference,
                    hypervolume: None,
                    failure: None,
                };
                match run_mo_single(&pair, algo, design, budget, run_seed, &config.engine) {
                    Ok(ys) => {
                        let front = smbo_core::pareto_front(&ys);
                        let pts: Vec<[f64; 2]> = front.iter().map(|&i| ys[i]).collect();
                        row.evaluations = ys.len();
                        row.front_size = pts.len();
                        row.hypervolume = smbo_core::hypervolume_2d(&pts, reference).ok();
                    }
                    Err(e) => row.failure = Some(format!("{e:#}")),
                }
                row
            })
            .collect()
    }))
}

pub fn write_mo_csv<W: Write>(rows: &[MoRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "pair",
        "algorithm",
        "seed",
        "evaluations",
        "front_size",
        "ref1",
        "ref2",
        "hypervolume",
        "failure",
    ])?;
    for r in rows {
        w.write_record([
            r.pair.clone(),
            r.algorithm.clone(),
            r.seed.to_string(),
            r.evaluations.to_string(),
            r.front_size.to_string(),
            r.reference[0].to_string(),
            r.reference[1].to_string(),
            r.hypervolume.map(|v| v.to_string()).unwrap_or_default(),
            r.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
