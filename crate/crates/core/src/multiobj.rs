//! Bi-objective model-based optimization: ParEGO and an S-metric selection
//! variant.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;

use crate::batch::replace_duplicates;
use crate::criteria::{expected_improvement, lower_confidence_bound};
use crate::design::Design;
use crate::engine::{
    check_termination, evaluate_into, fit_model, initial_points, reoptimize_at, Archive, OnEvalError, Origin, RunState,
    Termination, TerminationRule,
};
use crate::error::{Error, Result};
use crate::focus::InfillOptimizer;
use crate::gp::KernelParams;
use crate::pareto::{hv_contribution, hypervolume_2d, pareto_front, weakly_dominates};
use crate::space::{Assignment, ParamSpace};
use crate::surrogate::{Surrogate, SurrogateConfig};

/// Margin used in the penalty for dominated optimistic predictions.
const PENALTY_EPS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MoAlgorithm {
    /// Random augmented-Tchebycheff scalarizations optimized with EI.
    ParEgo { rho: f64, s: usize },
    /// Hypervolume contribution of the lower confidence bounds.
    SmsEgo { lambda: f64 },
}

impl MoAlgorithm {
    pub fn parego() -> Self {
        MoAlgorithm::ParEgo { rho: 0.05, s: 10 }
    }

    pub fn sms_ego() -> Self {
        MoAlgorithm::SmsEgo { lambda: 1.0 }
    }
}

impl FromStr for MoAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parego" => Ok(Self::parego()),
            "smsego" | "sms-ego" => Ok(Self::sms_ego()),
            _ => Err(Error::Parse(format!("unknown multi-objective algorithm `{s}`"))),
        }
    }
}

impl fmt::Display for MoAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoAlgorithm::ParEgo { .. } => f.write_str("parego"),
            MoAlgorithm::SmsEgo { .. } => f.write_str("smsego"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoControl {
    pub algorithm: MoAlgorithm,
    pub termination: Vec<TerminationRule>,
    pub optimizer: InfillOptimizer,
    pub surrogate: SurrogateConfig,
    pub init_size: Option<usize>,
    pub on_eval_error: OnEvalError,
    pub warm_restarts: usize,
    pub refit_interval: usize,
    /// Reference point for the reported hypervolume.
    pub reference: Option<[f64; 2]>,
    pub parallel: bool,
}

impl Default for MoControl {
    fn default() -> Self {
        Self {
            algorithm: MoAlgorithm::parego(),
            termination: vec![TerminationRule::MaxIters(50)],
            optimizer: InfillOptimizer::default(),
            surrogate: SurrogateConfig::default(),
            init_size: None,
            on_eval_error: OnEvalError::default(),
            warm_restarts: 3,
            refit_interval: 1,
            reference: None,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MoResult {
    pub archive: Archive,
    /// Archive indices of the non-dominated observed rows.
    pub front: Vec<usize>,
    /// Hypervolume of the front with respect to [`MoControl::reference`].
    pub hypervolume: Option<f64>,
    pub termination: Termination,
    pub iterations: usize,
    /// Iterations whose surrogate fit failed, with the error.
    pub fit_errors: Vec<(usize, String)>,
}

/// `s + 1` evenly spaced weight vectors `(j/s, 1 - j/s)`.
pub fn parego_weights(s: usize) -> Vec<[f64; 2]> {
    (0..=s)
        .map(|j| {
            let w = j as f64 / s.max(1) as f64;
            [w, 1.0 - w]
        })
        .collect()
}

/// Rescales each objective to `[0, 1]` by its observed range; constant
/// objectives map to 0.
pub fn normalize_objectives(ys: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = ys.first().map_or(0, Vec::len);
    let ranges: Vec<(f64, f64)> = (0..k)
        .map(|j| {
            ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
                (lo.min(y[j]), hi.max(y[j]))
            })
        })
        .collect();
    ys.iter()
        .map(|y| {
            y.iter()
                .zip(&ranges)
                .map(|(v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                .collect()
        })
        .collect()
}

/// `max_k w_k y_k + rho * sum_k w_k y_k`.
pub fn augmented_tchebycheff(y: &[f64], w: &[f64], rho: f64) -> f64 {
    let weighted = y.iter().zip(w).map(|(a, b)| a * b);
    weighted.clone().fold(f64::NEG_INFINITY, f64::max) + rho * weighted.sum::<f64>()
}

/// Reference point `max + 0.1 * range` per objective (`max + 1` when the
/// range is zero).
pub fn adaptive_reference(ys: &[Vec<f64>]) -> [f64; 2] {
    let mut r = [0.0; 2];
    for (j, slot) in r.iter_mut().enumerate() {
        let lo = ys.iter().map(|y| y[j]).fold(f64::INFINITY, f64::min);
        let hi = ys.iter().map(|y| y[j]).fold(f64::NEG_INFINITY, f64::max);
        *slot = if hi > lo { hi + 0.1 * (hi - lo) } else { hi + 1.0 };
    }
    r
}

/// S-metric criterion at one point (smaller is better).
///
/// The optimistic estimate `mean - lambda * se` is scored by its negated
/// hypervolume contribution to `front`. If some front point weakly dominates
/// it, the value is instead a positive penalty summing, over those front
/// points, how far the estimate trails them.
pub fn smsego_value(mean: [f64; 2], se: [f64; 2], front: &[[f64; 2]], reference: [f64; 2], lambda: f64) -> f64 {
    let opt = [
        lower_confidence_bound(mean[0], se[0], lambda),
        lower_confidence_bound(mean[1], se[1], lambda),
    ];
    let penalty: f64 = front
        .iter()
        .filter(|p| weakly_dominates(&p[..], &opt))
        .map(|p| (0..2).map(|i| (opt[i] - p[i] + PENALTY_EPS).max(0.0)).sum::<f64>())
        .sum();
    if penalty > 0.0 {
        return penalty;
    }
    -hv_contribution(front, opt, reference).expect("two objectives")
}

/// Bi-objective minimization of `objective` over `space`.
pub fn mbo_multi<F, R>(
    objective: F,
    space: &ParamSpace,
    init: Option<Design>,
    control: &MoControl,
    rng: &mut R,
) -> Result<MoResult>
where
    F: Fn(&Assignment) -> std::result::Result<Vec<f64>, String> + Sync,
    R: Rng + ?Sized,
{
    if control.termination.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one termination rule is required".into(),
        ));
    }
    let started = Instant::now();
    let mut archive = Archive::new(space.clone(), 2);
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

    let mut warm: [Option<KernelParams>; 2] = [None, None];
    let mut fit_errors = Vec::new();
    let mut iterations = 0;
    let termination = loop {
        if let Some(msg) = abort.take() {
            break Termination::Aborted(msg);
        }
        // a target value has no meaning for two objectives
        let mut state = RunState::of(&archive, iterations, started);
        state.best_y = None;
        if let Some(t) = check_termination(&state, &control.termination) {
            break t;
        }
        iterations += 1;
        let (point, origin) = match propose(&archive, control, &mut warm, iterations, rng) {
            Ok(p) => (p, Origin::Infill),
            Err(e) => {
                fit_errors.push((iterations, e.to_string()));
                (space.sample_uniform(rng), Origin::Random)
            }
        };
        let mut points = vec![point];
        let origin = if replace_duplicates(space, &archive.points(), &mut points, rng).is_empty() {
            origin
        } else {
            Origin::Random
        };
        abort = evaluate_into(
            &mut archive,
            &objective,
            points,
            &[origin],
            iterations,
            control.on_eval_error,
            control.parallel,
        );
    };

    let observed: Vec<usize> = (0..archive.len())
        .filter(|&i| archive.rows()[i].is_observed())
        .collect();
    let ys: Vec<&[f64]> = observed.iter().map(|&i| archive.rows()[i].y.as_slice()).collect();
    let front: Vec<usize> = pareto_front(&ys).into_iter().map(|j| observed[j]).collect();
    let hypervolume = match control.reference {
        Some(r) => {
            let pts: Vec<&[f64]> = front.iter().map(|&i| archive.rows()[i].y.as_slice()).collect();
            Some(hypervolume_2d(&pts, r)?)
        }
        None => None,
    };
    Ok(MoResult {
        archive,
        front,
        hypervolume,
        termination,
        iterations,
        fit_errors,
    })
}

fn propose<R: Rng + ?Sized>(
    archive: &Archive,
    control: &MoControl,
    warm: &mut [Option<KernelParams>; 2],
    iter: usize,
    rng: &mut R,
) -> Result<Assignment> {
    let space = archive.space();
    let (xs, ys) = archive.training_data();
    let reoptimize = reoptimize_at(iter, control.refit_interval);
    let mut fit = |targets: &[f64], slot: usize, rng: &mut R| -> Result<Surrogate> {
        let model = fit_model(
            space,
            &xs,
            targets,
            &control.surrogate,
            warm[slot].as_ref(),
            control.warm_restarts,
            reoptimize,
            rng,
        )?;
        if let Some(gp) = model.as_gp() {
            warm[slot] = Some(gp.params().clone());
        }
        Ok(model)
    };
    match control.algorithm {
        MoAlgorithm::ParEgo { rho, s } => {
            let weights = parego_weights(s);
            let w = weights[rng.random_range(0..weights.len())];
            let scalar: Vec<f64> = normalize_objectives(&ys)
                .iter()
                .map(|y| augmented_tchebycheff(y, &w, rho))
                .collect();
            let model = fit(&scalar, 0, rng)?;
            let y_min = scalar.iter().copied().fold(f64::INFINITY, f64::min);
            let crit = |a: &Assignment| {
                let p = model.predict(space, a);
                expected_improvement(p.mean, p.se, y_min)
            };
            Ok(control.optimizer.optimize(crit, space, rng).point)
        }
        MoAlgorithm::SmsEgo { lambda } => {
            let y1: Vec<f64> = ys.iter().map(|y| y[0]).collect();
            let y2: Vec<f64> = ys.iter().map(|y| y[1]).collect();
            let m1 = fit(&y1, 0, rng)?;
            let m2 = fit(&y2, 1, rng)?;
            let front: Vec<[f64; 2]> = pareto_front(&ys).into_iter().map(|i| [ys[i][0], ys[i][1]]).collect();
            let reference = adaptive_reference(&ys);
            let crit = |a: &Assignment| {
                let (p, q) = (m1.predict(space, a), m2.predict(space, a));
                smsego_value([p.mean, q.mean], [p.se, q.se], &front, reference, lambda)
            };
            Ok(control.optimizer.optimize(crit, space, rng).point)
        }
    }
}
