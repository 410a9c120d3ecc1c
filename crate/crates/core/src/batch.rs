//! Proposing several points per iteration.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::criteria::{expected_improvement, lower_confidence_bound, ArchiveStats, Liar};
use crate::error::{Error, Result};
use crate::focus::InfillOptimizer;
use crate::space::{Assignment, ParamSpace};
use crate::surrogate::Surrogate;

/// Points closer than this in unit-scaled coordinates count as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-9;

/// `m` exploration weights drawn from an exponential distribution with
/// mean `lambda`.
pub fn draw_qlcb_lambdas<R: Rng + ?Sized>(lambda: f64, m: usize, rng: &mut R) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("lambda must be positive and finite, got {lambda}"));
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(bad());
    }
    let exp = Exp::new(1.0 / lambda).map_err(|_| bad())?;
    Ok((0..m).map(|_| exp.sample(rng)).collect())
}

fn unit_distance(space: &ParamSpace, a: &Assignment, b: &Assignment) -> f64 {
    space
        .encode_unit(a)
        .iter()
        .zip(space.encode_unit(b))
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Replaces proposals that repeat an `existing` point or an earlier proposal
/// by uniform random draws. Returns the indices that were replaced.
pub fn replace_duplicates<R: Rng + ?Sized>(
    space: &ParamSpace,
    existing: &[Assignment],
    proposals: &mut [Assignment],
    rng: &mut R,
) -> Vec<usize> {
    let mut replaced = Vec::new();
    for i in 0..proposals.len() {
        let is_dup = |p: &Assignment, earlier: &[Assignment]| {
            existing
                .iter()
                .chain(earlier)
                .any(|q| unit_distance(space, p, q) <= DUPLICATE_TOL)
        };
        if is_dup(&proposals[i], &proposals[..i]) {
            // a handful of redraws is plenty outside degenerate finite spaces
            for _ in 0..100 {
                proposals[i] = space.sample_uniform(rng);
                if !is_dup(&proposals[i], &proposals[..i]) {
                    break;
                }
            }
            replaced.push(i);
        }
    }
    replaced
}

/// One LCB optimization per weight in `lambdas`, all on the same model.
pub fn propose_qlcb<R: Rng + ?Sized>(
    model: &Surrogate,
    space: &ParamSpace,
    optimizer: &InfillOptimizer,
    lambdas: &[f64],
    rng: &mut R,
) -> Vec<Assignment> {
    let mut points: Vec<Assignment> = lambdas
        .iter()
        .map(|&lambda| {
            let crit = |a: &Assignment| {
                let p = model.predict(space, a);
                lower_confidence_bound(p.mean, p.se, lambda)
            };
            optimizer.optimize(crit, space, rng).point
        })
        .collect();
    replace_duplicates(space, &[], &mut points, rng);
    points
}

/// A constant-liar batch and the number of model refits it took.
#[derive(Clone, Debug)]
pub struct LiarBatch {
    pub points: Vec<Assignment>,
    pub refits: usize,
}

/// Sequentially maximizes EI, after each pick pretending the point was
/// evaluated at the liar value and refitting with `refit`.
#[allow(clippy::too_many_arguments)]
pub fn propose_constant_liar<F, R>(
    mut refit: F,
    model: Surrogate,
    space: &ParamSpace,
    optimizer: &InfillOptimizer,
    liar: Liar,
    m: usize,
    points: &[Assignment],
    targets: &[f64],
    rng: &mut R,
) -> Result<LiarBatch>
where
    F: FnMut(&[Assignment], &[f64], &mut R) -> Result<Surrogate>,
    R: Rng + ?Sized,
{
    let stats = ArchiveStats::from_values(targets)
        .ok_or_else(|| Error::InvalidArgument("constant liar needs observed targets".into()))?;
    let mut xs = points.to_vec();
    let mut ys = targets.to_vec();
    let mut model = model;
    let mut batch = Vec::with_capacity(m);
    let mut refits = 0;
    for k in 0..m {
        let y_min = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let crit = |a: &Assignment| {
            let p = model.predict(space, a);
            expected_improvement(p.mean, p.se, y_min)
        };
        let x = optimizer.optimize(crit, space, rng).point;
        if k + 1 < m {
            let lie = match liar {
                Liar::Min => stats.y_min,
                Liar::Max => stats.y_max,
                Liar::Mean => stats.y_mean,
                Liar::Believer => model.predict(space, &x).mean,
            };
            xs.push(x.clone());
            ys.push(lie);
            model = refit(&xs, &ys, rng)?;
            refits += 1;
        }
        batch.push(x);
    }
    Ok(LiarBatch { points: batch, refits })
}
