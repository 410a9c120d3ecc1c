//! The sequential optimization loop and its archive.

use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::batch::{draw_qlcb_lambdas, propose_constant_liar, propose_qlcb, replace_duplicates};
use crate::criteria::{self, beta_quantile, ArchiveStats, CriterionSpec};
use crate::design::{default_init_size, lhs_design, Design, DEFAULT_MAXIMIN_RESTARTS};
use crate::error::{Error, Result};
use crate::focus::InfillOptimizer;
use crate::gp::KernelParams;
use crate::space::{Assignment, ParamSpace};
use crate::surrogate::{Surrogate, SurrogateChoice, SurrogateConfig};

/// Outcome of one objective call: the objective values or an error message.
pub type EvalOutcome = std::result::Result<Vec<f64>, String>;

/// When to stop. The first satisfied rule in the list wins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TerminationRule {
    MaxEvals(usize),
    MaxIters(usize),
    WallTime(Duration),
    /// Total time spent inside the objective.
    EvalTimeBudget(Duration),
    /// Best observed value at or below the target.
    TargetValue(f64),
}

/// Why a run stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    MaxEvals,
    MaxIters,
    WallTime,
    EvalTimeBudget,
    TargetValue,
    Aborted(String),
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::MaxEvals => f.write_str("max_evals"),
            Termination::MaxIters => f.write_str("max_iters"),
            Termination::WallTime => f.write_str("wall_time"),
            Termination::EvalTimeBudget => f.write_str("eval_time_budget"),
            Termination::TargetValue => f.write_str("target_value"),
            Termination::Aborted(msg) => write!(f, "aborted: {msg}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FinalPoint {
    #[default]
    BestObserved,
    /// Evaluated point with the lowest surrogate mean.
    ModelPredicted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OnEvalError {
    /// Record the failure with `max y + 0.1 * range(y)` so the model steers away.
    #[default]
    ImputeWorst,
    Abort,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MboControl {
    /// Points per iteration for single-point criteria. Batch criteria carry
    /// their own batch size.
    pub points_per_iter: usize,
    /// `None` picks LCB with `lambda = 1`, or `lambda = 2` when the space has
    /// integer or categorical parameters.
    pub criterion: Option<CriterionSpec>,
    pub optimizer: InfillOptimizer,
    pub termination: Vec<TerminationRule>,
    pub final_point: FinalPoint,
    pub on_eval_error: OnEvalError,
    pub surrogate: SurrogateConfig,
    /// Initial design size when no design is supplied; defaults to `4 * d`.
    pub init_size: Option<usize>,
    /// Kriging restarts once an earlier fit can warm-start the search.
    pub warm_restarts: usize,
    /// Re-estimate Kriging hyperparameters every this many iterations; in
    /// between, the model is conditioned on the new data with the previous
    /// hyperparameters.
    pub refit_interval: usize,
    /// Evaluate batches on the rayon pool.
    pub parallel: bool,
}

impl Default for MboControl {
    fn default() -> Self {
        Self {
            points_per_iter: 1,
            criterion: None,
            optimizer: InfillOptimizer::default(),
            termination: vec![TerminationRule::MaxIters(50)],
            final_point: FinalPoint::default(),
            on_eval_error: OnEvalError::default(),
            surrogate: SurrogateConfig::default(),
            init_size: None,
            warm_restarts: 3,
            refit_interval: 1,
            parallel: true,
        }
    }
}

impl MboControl {
    /// The criterion actually used on `space`.
    pub fn resolved_criterion(&self, space: &ParamSpace) -> CriterionSpec {
        self.criterion.unwrap_or(CriterionSpec::Lcb {
            lambda: if space.has_discrete() { 2.0 } else { 1.0 },
        })
    }

    /// Points evaluated per iteration.
    pub fn batch_size(&self, space: &ParamSpace) -> usize {
        self.resolved_criterion(space)
            .batch_size()
            .unwrap_or(self.points_per_iter)
    }

    pub fn validate(&self, space: &ParamSpace) -> Result<()> {
        let crit = self.resolved_criterion(space);
        crit.validate()?;
        if self.termination.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one termination rule is required".into(),
            ));
        }
        if let InfillOptimizer::Focus(cfg) = &self.optimizer {
            cfg.validate()?;
        }
        if self.surrogate.choice == SurrogateChoice::Gp && !space.is_plain_numeric() {
            return Err(Error::InvalidArgument(
                "Kriging needs a numeric space without requirements".into(),
            ));
        }
        match crit.batch_size() {
            Some(m) if self.points_per_iter != 1 && self.points_per_iter != m => Err(Error::InvalidArgument(format!(
                "points_per_iter = {} conflicts with criterion {crit}",
                self.points_per_iter
            ))),
            None if self.points_per_iter != 1 => Err(Error::InvalidArgument(format!(
                "criterion {crit} proposes one point; use qlcb or cl for batches"
            ))),
            _ => Ok(()),
        }
    }
}

/// How an archive row's point was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Initial,
    Infill,
    /// Uniform draw: after a failed surrogate fit or replacing a duplicate.
    Random,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Initial => "initial",
            Origin::Infill => "infill",
            Origin::Random => "random",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArchiveRow {
    /// 0 for the initial design, then 1, 2, ...
    pub iter: usize,
    pub origin: Origin,
    pub point: Assignment,
    /// Objective values; NaN when the evaluation failed and nothing was imputed.
    pub y: Vec<f64>,
    pub eval_seconds: f64,
    pub error: Option<String>,
    pub imputed: bool,
}

impl ArchiveRow {
    /// Successful, non-imputed evaluation.
    pub fn is_observed(&self) -> bool {
        self.error.is_none() && !self.imputed
    }

    /// Usable as surrogate training data.
    pub fn is_trainable(&self) -> bool {
        self.y.iter().all(|v| v.is_finite())
    }
}

/// Append-only record of every evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Archive {
    space: ParamSpace,
    n_objectives: usize,
    rows: Vec<ArchiveRow>,
}

impl Archive {
    pub fn new(space: ParamSpace, n_objectives: usize) -> Self {
        Self {
            space,
            n_objectives,
            rows: Vec::new(),
        }
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    pub fn n_objectives(&self) -> usize {
        self.n_objectives
    }

    pub fn rows(&self) -> &[ArchiveRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: ArchiveRow) {
        self.rows.push(row);
    }

    pub fn points(&self) -> Vec<Assignment> {
        self.rows.iter().map(|r| r.point.clone()).collect()
    }

    /// Points and objective vectors of all trainable rows, imputed ones included.
    pub fn training_data(&self) -> (Vec<Assignment>, Vec<Vec<f64>>) {
        self.rows
            .iter()
            .filter(|r| r.is_trainable())
            .map(|r| (r.point.clone(), r.y.clone()))
            .unzip()
    }

    /// Index of the observed row with the lowest first objective.
    pub fn best_index(&self) -> Option<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_observed())
            .min_by(|a, b| a.1.y[0].total_cmp(&b.1.y[0]))
            .map(|(i, _)| i)
    }

    /// Best observed first objective after each row; NaN before the first
    /// observed row.
    pub fn running_best(&self) -> Vec<f64> {
        let mut best = f64::NAN;
        self.rows
            .iter()
            .map(|r| {
                if r.is_observed() && (best.is_nan() || r.y[0] < best) {
                    best = r.y[0];
                }
                best
            })
            .collect()
    }

    pub fn eval_seconds(&self) -> f64 {
        self.rows.iter().map(|r| r.eval_seconds).sum()
    }

    /// Columns: `iter, origin`, one per parameter, `y` (or `y1..yk`),
    /// `eval_seconds, error, imputed`. Inactive values are empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iter".to_string(), "origin".to_string()];
        header.extend(self.space.params().iter().map(|p| p.name.clone()));
        header.extend(self.objective_names());
        header.extend(["eval_seconds", "error", "imputed"].map(String::from));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.iter.to_string(), r.origin.to_string()];
            rec.extend((0..self.space.dim()).map(|i| self.space.format_value(i, r.point.get(i))));
            rec.extend(
                r.y.iter()
                    .map(|v| if v.is_nan() { String::new() } else { v.to_string() }),
            );
            rec.push(r.eval_seconds.to_string());
            rec.push(r.error.clone().unwrap_or_default());
            rec.push(r.imputed.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    fn objective_names(&self) -> Vec<String> {
        if self.n_objectives == 1 {
            vec!["y".into()]
        } else {
            (1..=self.n_objectives).map(|k| format!("y{k}")).collect()
        }
    }
}

/// Progress snapshot the termination rules are checked against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunState {
    pub evaluations: usize,
    pub iterations: usize,
    pub elapsed: Duration,
    pub eval_time: Duration,
    pub best_y: Option<f64>,
}

impl RunState {
    pub fn of(archive: &Archive, iterations: usize, started: Instant) -> Self {
        Self {
            evaluations: archive.len(),
            iterations,
            elapsed: started.elapsed(),
            eval_time: Duration::from_secs_f64(archive.eval_seconds()),
            best_y: archive.best_index().map(|i| archive.rows()[i].y[0]),
        }
    }
}

/// The first rule in `rules` that `state` satisfies.
pub fn check_termination(state: &RunState, rules: &[TerminationRule]) -> Option<Termination> {
    rules.iter().find_map(|rule| match *rule {
        TerminationRule::MaxEvals(n) if state.evaluations >= n => Some(Termination::MaxEvals),
        TerminationRule::MaxIters(n) if state.iterations >= n => Some(Termination::MaxIters),
        TerminationRule::WallTime(t) if state.elapsed >= t => Some(Termination::WallTime),
        TerminationRule::EvalTimeBudget(t) if state.eval_time >= t => Some(Termination::EvalTimeBudget),
        TerminationRule::TargetValue(v) if state.best_y.is_some_and(|b| b <= v) => Some(Termination::TargetValue),
        _ => None,
    })
}

/// Evaluates `points` and appends them to the archive. Returns the abort
/// message if a failure stops the run.
pub(crate) fn evaluate_into<F>(
    archive: &mut Archive,
    objective: &F,
    points: Vec<Assignment>,
    origins: &[Origin],
    iter: usize,
    on_error: OnEvalError,
    parallel: bool,
) -> Option<String>
where
    F: Fn(&Assignment) -> EvalOutcome + Sync,
{
    let space = archive.space.clone();
    let k = archive.n_objectives;
    let run = |a: &Assignment| {
        let t = Instant::now();
        let out = objective(&space.transformed(a));
        let secs = t.elapsed().as_secs_f64();
        let out = match out {
            Ok(y) if y.len() != k => Err(format!("expected {k} objective values, got {}", y.len())),
            Ok(y) if y.iter().any(|v| !v.is_finite()) => Err("non-finite objective value".to_string()),
            other => other,
        };
        (out, secs)
    };
    let results: Vec<(EvalOutcome, f64)> = if parallel && points.len() > 1 {
        points.par_iter().map(run).collect()
    } else {
        points.iter().map(run).collect()
    };

    let first_new = archive.rows.len();
    let mut abort = None;
    for ((point, (out, secs)), &origin) in points.into_iter().zip(results).zip(origins) {
        let (y, error) = match out {
            Ok(y) => (y, None),
            Err(e) => (vec![f64::NAN; k], Some(e)),
        };
        let failed = error.is_some();
        archive.push(ArchiveRow {
            iter,
            origin,
            point,
            y,
            eval_seconds: secs,
            error: error.clone(),
            imputed: false,
        });
        if failed && on_error == OnEvalError::Abort {
            abort = error;
            break;
        }
    }
    if on_error == OnEvalError::ImputeWorst {
        impute_failures(archive, first_new);
    }
    abort
}

/// Fills failed rows from `from` on with `max + 0.1 * range` of the observed
/// values, per objective. Rows stay NaN while nothing has been observed.
pub(crate) fn impute_failures(archive: &mut Archive, from: usize) {
    for j in 0..archive.n_objectives {
        let observed: Vec<f64> = archive
            .rows
            .iter()
            .filter(|r| r.is_observed())
            .map(|r| r.y[j])
            .collect();
        let Some(stats) = ArchiveStats::from_values(&observed) else {
            continue;
        };
        let fill = stats.y_max + 0.1 * (stats.y_max - stats.y_min);
        for r in archive.rows[from..].iter_mut().filter(|r| r.error.is_some()) {
            r.y[j] = fill;
            r.imputed = true;
        }
    }
}

/// What happened while proposing one iteration's points.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IterationInfo {
    pub iter: usize,
    pub surrogate: Option<&'static str>,
    /// Set when the surrogate fit failed and random points were proposed.
    pub fit_error: Option<String>,
    pub refits: usize,
    pub duplicates_replaced: usize,
    /// Exploration weights drawn for qLCB.
    pub lambdas: Vec<f64>,
}

/// Points proposed for one iteration.
#[derive(Clone, Debug)]
pub struct Proposal {
    pub points: Vec<Assignment>,
    pub origins: Vec<Origin>,
    pub info: IterationInfo,
    /// Fitted Kriging hyperparameters, for warm-starting the next fit.
    pub gp_params: Option<KernelParams>,
}

/// Fits the configured surrogate. With `warm` hyperparameters, Kriging is
/// either re-estimated from a warm start or, when `reoptimize` is false,
/// only conditioned on the data.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_model<R: Rng + ?Sized>(
    space: &ParamSpace,
    xs: &[Assignment],
    ys: &[f64],
    config: &SurrogateConfig,
    warm: Option<&KernelParams>,
    warm_restarts: usize,
    reoptimize: bool,
    rng: &mut R,
) -> Result<Surrogate> {
    let Some(p) = warm else {
        return Surrogate::fit(space, xs, ys, config, rng);
    };
    if config.choice.resolve(space) == SurrogateChoice::Gp && !reoptimize {
        return Surrogate::condition(space, xs, ys, p);
    }
    let mut cfg = config.clone();
    cfg.gp.warm_start = Some(p.clone());
    cfg.gp.restarts = warm_restarts.max(1);
    Surrogate::fit(space, xs, ys, &cfg, rng)
}

pub(crate) fn reoptimize_at(iter: usize, interval: usize) -> bool {
    iter.is_multiple_of(interval.max(1))
}

/// Fits the surrogate to the archive and optimizes the infill criterion.
///
/// A failed fit does not stop the run: the iteration proposes uniform random
/// points and records the failure in [`IterationInfo::fit_error`].
pub fn propose_points<R: Rng + ?Sized>(
    archive: &Archive,
    control: &MboControl,
    warm: Option<&KernelParams>,
    iter: usize,
    rng: &mut R,
) -> Result<Proposal> {
    let space = archive.space();
    let crit = control.resolved_criterion(space);
    let m = control.batch_size(space);
    let mut info = IterationInfo {
        iter,
        ..Default::default()
    };
    let (xs, ys) = archive.training_data();
    let ys: Vec<f64> = ys.iter().map(|y| y[0]).collect();
    let reoptimize = reoptimize_at(iter, control.refit_interval);
    let fitted = fit_model(
        space,
        &xs,
        &ys,
        &control.surrogate,
        warm,
        control.warm_restarts,
        reoptimize,
        rng,
    );
    let model = match fitted {
        Ok(model) => model,
        Err(e) => {
            info.fit_error = Some(e.to_string());
            let mut points: Vec<Assignment> = (0..m).map(|_| space.sample_uniform(rng)).collect();
            info.duplicates_replaced = replace_duplicates(space, &archive.points(), &mut points, rng).len();
            return Ok(Proposal {
                origins: vec![Origin::Random; points.len()],
                points,
                info,
                gp_params: warm.cloned(),
            });
        }
    };
    info.surrogate = Some(model.name());
    let gp_params = model.as_gp().map(|g| g.params().clone());

    let mut stats = ArchiveStats::from_values(&ys).ok_or(Error::AllImputed)?;
    let mut points = match crit {
        CriterionSpec::Qlcb { lambda, m } => {
            info.lambdas = draw_qlcb_lambdas(lambda, m, rng)?;
            propose_qlcb(&model, space, &control.optimizer, &info.lambdas, rng)
        }
        CriterionSpec::ConstantLiar { liar, m } => {
            let batch = propose_constant_liar(
                |x, y, r| match &gp_params {
                    Some(p) => Surrogate::condition(space, x, y, p),
                    None => Surrogate::fit(space, x, y, &control.surrogate, r),
                },
                model,
                space,
                &control.optimizer,
                liar,
                m,
                &xs,
                &ys,
                rng,
            )?;
            info.refits = batch.refits;
            batch.points
        }
        _ => {
            if let CriterionSpec::Eqi { beta, .. } = crit {
                stats.q_min = xs
                    .iter()
                    .map(|x| {
                        let p = model.predict(space, x);
                        beta_quantile(p.mean, p.se, beta)
                    })
                    .min_by(f64::total_cmp);
            }
            let tau = model.noise_sd();
            let value = |a: &Assignment| criteria::evaluate(&crit, model.predict(space, a), &stats, tau);
            vec![control.optimizer.optimize(value, space, rng).point]
        }
    };
    let mut origins = vec![Origin::Infill; points.len()];
    let replaced = replace_duplicates(space, &archive.points(), &mut points, rng);
    for &i in &replaced {
        origins[i] = Origin::Random;
    }
    info.duplicates_replaced = replaced.len();
    Ok(Proposal {
        points,
        origins,
        info,
        gp_params,
    })
}

/// Result of a single-objective run.
#[derive(Clone, Debug)]
pub struct MboResult {
    pub best: Assignment,
    pub best_y: f64,
    /// Surrogate mean at `best` when the final point was chosen by the model.
    pub predicted_y: Option<f64>,
    pub archive: Archive,
    pub termination: Termination,
    pub iterations: usize,
    pub diagnostics: Vec<IterationInfo>,
}

#[derive(Serialize)]
struct Summary<'a> {
    termination: String,
    iterations: usize,
    evaluations: usize,
    errors: usize,
    imputed: usize,
    best_y: f64,
    predicted_y: Option<f64>,
    best: serde_json::Map<String, serde_json::Value>,
    seed: Option<u64>,
    diagnostics: &'a [IterationInfo],
}

impl MboResult {
    /// JSON run summary: termination, counts, best point and per-iteration
    /// diagnostics.
    pub fn summary_json(&self, seed: Option<u64>) -> Result<String> {
        let space = self.archive.space();
        let best = space
            .params()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let v = match self.best.get(i) {
                    None => serde_json::Value::Null,
                    Some(v) => match p.kind {
                        crate::space::ParamKind::Categorical { .. } => {
                            serde_json::Value::String(space.format_value(i, Some(v)))
                        }
                        _ => serde_json::json!(v.as_f64()),
                    },
                };
                (p.name.clone(), v)
            })
            .collect();
        let rows = self.archive.rows();
        let summary = Summary {
            termination: self.termination.to_string(),
            iterations: self.iterations,
            evaluations: rows.len(),
            errors: rows.iter().filter(|r| r.error.is_some()).count(),
            imputed: rows.iter().filter(|r| r.imputed).count(),
            best_y: self.best_y,
            predicted_y: self.predicted_y,
            best,
            seed,
            diagnostics: &self.diagnostics,
        };
        Ok(serde_json::to_string_pretty(&summary)?)
    }
}

/// Chooses the returned point according to `mode`.
pub fn final_point<R: Rng + ?Sized>(
    archive: &Archive,
    mode: FinalPoint,
    config: &SurrogateConfig,
    rng: &mut R,
) -> Result<(usize, Option<f64>)> {
    let best = archive.best_index().ok_or(Error::AllImputed)?;
    if mode == FinalPoint::BestObserved {
        return Ok((best, None));
    }
    let (xs, ys) = archive.training_data();
    let ys: Vec<f64> = ys.iter().map(|y| y[0]).collect();
    let model = match Surrogate::fit(archive.space(), &xs, &ys, config, rng) {
        Ok(m) => m,
        Err(Error::FitFailure(_)) => return Ok((best, None)),
        Err(e) => return Err(e),
    };
    let space = archive.space();
    Ok(archive
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_observed())
        .map(|(i, r)| (i, model.predict(space, &r.point).mean))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, m)| (i, Some(m)))
        .expect("best_index found an observed row"))
}

pub(crate) fn initial_points<R: Rng + ?Sized>(
    space: &ParamSpace,
    init: Option<Design>,
    init_size: Option<usize>,
    rng: &mut R,
) -> Result<Vec<Assignment>> {
    match init {
        Some(d) => {
            if d.is_empty() {
                return Err(Error::InvalidArgument("initial design is empty".into()));
            }
            for p in &d.points {
                space.check(p)?;
            }
            Ok(d.points)
        }
        None => {
            let n = init_size.unwrap_or_else(|| default_init_size(space));
            Ok(lhs_design(space, n, rng, DEFAULT_MAXIMIN_RESTARTS)?.points)
        }
    }
}

/// Remaining evaluations allowed by `MaxEvals` rules, if any.
pub(crate) fn eval_allowance(rules: &[TerminationRule], done: usize) -> Option<usize> {
    rules
        .iter()
        .filter_map(|r| match *r {
            TerminationRule::MaxEvals(n) => Some(n.saturating_sub(done)),
            _ => None,
        })
        .min()
}

/// Minimizes `objective` over `space`.
///
/// The objective sees transformed values (see [`ParamSpace::transformed`])
/// and returns the value or an error message. Without `init`, a maximin
/// Latin hypercube of `control.init_size` points starts the run.
pub fn mbo<F, R>(
    objective: F,
    space: &ParamSpace,
    init: Option<Design>,
    control: &MboControl,
    rng: &mut R,
) -> Result<MboResult>
where
    F: Fn(&Assignment) -> std::result::Result<f64, String> + Sync,
    R: Rng + ?Sized,
{
    control.validate(space)?;
    let started = Instant::now();
    let objective = |a: &Assignment| objective(a).map(|y| vec![y]);
    let mut archive = Archive::new(space.clone(), 1);
    let init = initial_points(space, init, control.init_size, rng)?;
    let origins = vec![Origin::Initial; init.len()];
    let mut abort = evaluate_into(
        &mut archive,
        &objective,
        init,
        &origins,
        0,
        control.on_eval_error,
        control.parallel,
    );
    if abort.is_none() && !archive.rows().iter().any(|r| r.is_observed()) {
        return Err(Error::Evaluation("every initial evaluation failed".into()));
    }

    let mut diagnostics = Vec::new();
    let mut warm: Option<KernelParams> = None;
    let mut iterations = 0;
    let termination = loop {
        if let Some(msg) = abort.take() {
            break Termination::Aborted(msg);
        }
        let state = RunState::of(&archive, iterations, started);
        if let Some(t) = check_termination(&state, &control.termination) {
            break t;
        }
        iterations += 1;
        let mut proposal = propose_points(&archive, control, warm.as_ref(), iterations, rng)?;
        if let Some(left) = eval_allowance(&control.termination, archive.len()) {
            proposal.points.truncate(left);
        }
        warm = proposal.gp_params.take();
        abort = evaluate_into(
            &mut archive,
            &objective,
            proposal.points,
            &proposal.origins,
            iterations,
            control.on_eval_error,
            control.parallel,
        );
        diagnostics.push(proposal.info);
    };

    let (best, predicted_y) = final_point(&archive, control.final_point, &control.surrogate, rng)?;
    let row = &archive.rows()[best];
    Ok(MboResult {
        best: row.point.clone(),
        best_y: row.y[0],
        predicted_y,
        termination,
        iterations,
        diagnostics,
        archive,
    })
}
