//! Infill optimizers: focus search and plain random search.
//!
//! Focus search draws a random design from a working copy of the space,
//! takes its best point, and narrows the working copy around that point:
//! each numeric interval shrinks to half its width (clipped to the current
//! bounds) and categoricals with more than two remaining levels lose one
//! randomly chosen level other than the incumbent. This repeats `n_iters`
//! times per restart; every restart begins again from the full space.

use rand::Rng;

use crate::error::{Error, Result};
use crate::space::{Assignment, Domain, ParamSpace, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FocusConfig {
    pub n_restart: usize,
    pub n_iters: usize,
    pub n_points: usize,
}

impl Default for FocusConfig {
    fn default() -> Self {
        Self {
            n_restart: 3,
            n_iters: 5,
            n_points: 1000,
        }
    }
}

impl FocusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_restart == 0 || self.n_iters == 0 || self.n_points == 0 {
            return Err(Error::InvalidArgument("focus search counts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn evaluations(&self) -> usize {
        self.n_restart * self.n_iters * self.n_points
    }
}

/// Best point found by an infill optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct InfillResult {
    pub point: Assignment,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfillOptimizer {
    Focus(FocusConfig),
    Random { budget: usize },
}

impl Default for InfillOptimizer {
    fn default() -> Self {
        InfillOptimizer::Focus(FocusConfig::default())
    }
}

impl InfillOptimizer {
    pub fn optimize<F, R>(&self, crit: F, space: &ParamSpace, rng: &mut R) -> InfillResult
    where
        F: FnMut(&Assignment) -> f64,
        R: Rng + ?Sized,
    {
        match *self {
            InfillOptimizer::Focus(cfg) => focus_search(crit, space, &cfg, rng),
            InfillOptimizer::Random { budget } => random_search(crit, space, budget.max(1), rng),
        }
    }
}

/// Narrows `domains` around `incumbent`. Dimensions where the incumbent is
/// inactive are left unchanged.
pub fn shrink<R: Rng + ?Sized>(domains: &mut [Domain], incumbent: &Assignment, rng: &mut R) {
    for (domain, value) in domains.iter_mut().zip(incumbent.values()) {
        let Some(value) = value else { continue };
        match domain {
            Domain::Real { lower, upper } => {
                let x = value.as_f64();
                let quarter = 0.25 * (*upper - *lower);
                let (l, u) = ((x - quarter).max(*lower), (x + quarter).min(*upper));
                *lower = l;
                *upper = u;
            }
            Domain::Int { lower, upper } => {
                let x = value.as_f64();
                let quarter = 0.25 * (*upper - *lower) as f64;
                let l = (x - quarter).max(*lower as f64).floor() as i64;
                let u = (x + quarter).min(*upper as f64).ceil() as i64;
                *lower = l;
                *upper = u;
            }
            Domain::Levels(levels) => {
                let Value::Level(keep) = *value else { continue };
                if levels.len() > 2 {
                    let others: Vec<usize> = levels.iter().copied().filter(|&l| l != keep).collect();
                    let drop = others[rng.random_range(0..others.len())];
                    levels.retain(|&l| l != drop);
                }
            }
        }
    }
}

/// Focus search; evaluates `crit` exactly `n_restart * n_iters * n_points`
/// times and returns the first point attaining the smallest value.
pub fn focus_search<F, R>(mut crit: F, space: &ParamSpace, cfg: &FocusConfig, rng: &mut R) -> InfillResult
where
    F: FnMut(&Assignment) -> f64,
    R: Rng + ?Sized,
{
    let mut best: Option<InfillResult> = None;
    for _ in 0..cfg.n_restart.max(1) {
        let mut domains = space.domains();
        for _ in 0..cfg.n_iters.max(1) {
            let mut round: Option<InfillResult> = None;
            for _ in 0..cfg.n_points.max(1) {
                let point = space.sample_in(&domains, rng);
                let value = crit(&point);
                if round.as_ref().is_none_or(|r| value < r.value) {
                    round = Some(InfillResult { point, value });
                }
            }
            let round = round.expect("n_points >= 1");
            shrink(&mut domains, &round.point, rng);
            if best.as_ref().is_none_or(|b| round.value < b.value) {
                best = Some(round);
            }
        }
    }
    best.expect("at least one evaluation")
}

fn random_search<F, R>(mut crit: F, space: &ParamSpace, budget: usize, rng: &mut R) -> InfillResult
where
    F: FnMut(&Assignment) -> f64,
    R: Rng + ?Sized,
{
    let mut best: Option<InfillResult> = None;
    for _ in 0..budget {
        let point = space.sample_uniform(rng);
        let value = crit(&point);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(InfillResult { point, value });
        }
    }
    best.expect("budget >= 1")
}

/// Minimum of `crit` over `budget` uniform draws.
pub fn random_opt<F, R>(crit: F, space: &ParamSpace, budget: usize, rng: &mut R) -> Result<InfillResult>
where
    F: FnMut(&Assignment) -> f64,
    R: Rng + ?Sized,
{
    if budget == 0 {
        return Err(Error::InvalidArgument("random search budget must be at least 1".into()));
    }
    Ok(random_search(crit, space, budget, rng))
}
