//! Initial designs: random, grid and maximin Latin hypercube.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::space::{Assignment, ParamKind, ParamSpace, Value};

/// Default number of candidate hypercubes tried by [`lhs_design`].
pub const DEFAULT_MAXIMIN_RESTARTS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub points: Vec<Assignment>,
    pub generator: String,
    pub seed: Option<u64>,
}

impl Design {
    pub fn new(points: Vec<Assignment>, generator: impl Into<String>) -> Self {
        Self {
            points,
            generator: generator.into(),
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes one column per parameter; inactive values are empty cells.
    pub fn write_csv<W: Write>(&self, space: &ParamSpace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(space.params().iter().map(|p| p.name.as_str()))?;
        for a in &self.points {
            w.write_record((0..space.dim()).map(|i| space.format_value(i, a.get(i))))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a design written by [`Design::write_csv`]. Columns are matched
    /// by name and every row is validated against the space.
    pub fn read_csv<R: Read>(space: &ParamSpace, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let columns = space
            .params()
            .iter()
            .map(|p| {
                headers
                    .iter()
                    .position(|h| h == p.name)
                    .ok_or_else(|| Error::Parse(format!("missing column `{}`", p.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut points = Vec::new();
        for record in r.records() {
            let record = record?;
            let values = columns
                .iter()
                .enumerate()
                .map(|(i, &c)| space.parse_value(i, record.get(c).unwrap_or("")))
                .collect::<Result<Vec<_>>>()?;
            let a = Assignment(values);
            space.check(&a)?;
            points.push(a);
        }
        if points.is_empty() {
            return Err(Error::Parse("design has no rows".into()));
        }
        Ok(Self::new(points, "csv"))
    }
}

/// `4 * d` points, the default initial design size.
pub fn default_init_size(space: &ParamSpace) -> usize {
    4 * space.dim()
}

/// `n` independent uniform draws.
pub fn random_design<R: Rng + ?Sized>(space: &ParamSpace, n: usize, rng: &mut R) -> Result<Design> {
    if n == 0 {
        return Err(Error::InvalidArgument("design size must be at least 1".into()));
    }
    let points = (0..n).map(|_| space.sample_uniform(rng)).collect();
    Ok(Design::new(points, "random"))
}

/// Full factorial grid with `resolution` equally spaced values per numeric
/// parameter and every level per categorical. Points that coincide after
/// masking inactive parameters are kept once.
pub fn grid_design(space: &ParamSpace, resolution: usize) -> Result<Design> {
    if resolution < 2 {
        return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
    }
    let axes: Vec<Vec<Value>> = space
        .params()
        .iter()
        .map(|p| match &p.kind {
            ParamKind::Continuous { lower, upper } => (0..resolution)
                .map(|k| Value::Real(lower + (upper - lower) * k as f64 / (resolution - 1) as f64))
                .collect(),
            ParamKind::Integer { lower, upper } => {
                let mut v: Vec<Value> = (0..resolution)
                    .map(|k| {
                        let x = *lower as f64 + (upper - lower) as f64 * k as f64 / (resolution - 1) as f64;
                        Value::Int(x.round() as i64)
                    })
                    .collect();
                v.dedup();
                v
            }
            ParamKind::Categorical { levels } => (0..levels.len()).map(Value::Level).collect(),
        })
        .collect();
    let mut points: Vec<Assignment> = Vec::new();
    let mut index = vec![0usize; axes.len()];
    loop {
        let a = space.mask_inactive(Assignment(
            index.iter().zip(&axes).map(|(&k, axis)| Some(axis[k])).collect(),
        ));
        if !points.contains(&a) {
            points.push(a);
        }
        // odometer increment, last axis fastest
        let mut d = axes.len();
        loop {
            if d == 0 {
                return Ok(Design::new(points, "grid"));
            }
            d -= 1;
            index[d] += 1;
            if index[d] < axes[d].len() {
                break;
            }
            index[d] = 0;
        }
    }
}

/// Latin hypercube design chosen by best-of-`maximin_restarts` on the
/// minimum pairwise distance.
///
/// Every numeric dimension is stratified into `n` equal-width bins with one
/// point per bin. Categorical dimensions get a shuffled cyclic assignment of
/// levels, so level counts differ by at most one. Requirements are applied
/// after generation by masking inactive parameters.
pub fn lhs_design<R: Rng + ?Sized>(
    space: &ParamSpace,
    n: usize,
    rng: &mut R,
    maximin_restarts: usize,
) -> Result<Design> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "a Latin hypercube needs at least 2 points".into(),
        ));
    }
    if !space.params().iter().any(|p| p.is_numeric()) {
        return Err(Error::InvalidArgument(
            "a Latin hypercube needs at least one numeric parameter".into(),
        ));
    }
    let mut best: Option<(f64, Vec<Assignment>)> = None;
    for _ in 0..maximin_restarts.max(1) {
        let candidate = raw_lhs(space, n, rng);
        let score = min_pairwise_distance(space, &candidate);
        // strict improvement keeps the earliest candidate on ties
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, candidate));
        }
    }
    let points = best
        .expect("at least one candidate")
        .1
        .into_iter()
        .map(|a| space.mask_inactive(a))
        .collect();
    Ok(Design::new(points, "maximin-lhs"))
}

fn raw_lhs<R: Rng + ?Sized>(space: &ParamSpace, n: usize, rng: &mut R) -> Vec<Assignment> {
    let mut columns: Vec<Vec<Value>> = Vec::with_capacity(space.dim());
    for p in space.params() {
        let column = match &p.kind {
            ParamKind::Continuous { lower, upper } => {
                let mut bins: Vec<usize> = (0..n).collect();
                bins.shuffle(rng);
                bins.into_iter()
                    .map(|b| {
                        let u = (b as f64 + rng.random::<f64>()) / n as f64;
                        Value::Real((lower + u * (upper - lower)).min(*upper))
                    })
                    .collect()
            }
            ParamKind::Integer { lower, upper } => {
                let span = (upper - lower + 1) as f64;
                let mut bins: Vec<usize> = (0..n).collect();
                bins.shuffle(rng);
                bins.into_iter()
                    .map(|b| {
                        let u = (b as f64 + rng.random::<f64>()) / n as f64;
                        Value::Int((*lower + (u * span).floor() as i64).min(*upper))
                    })
                    .collect()
            }
            ParamKind::Categorical { levels } => {
                let offset = rng.random_range(0..levels.len());
                let mut col: Vec<Value> = (0..n).map(|i| Value::Level((i + offset) % levels.len())).collect();
                col.shuffle(rng);
                col
            }
        };
        columns.push(column);
    }
    (0..n)
        .map(|i| Assignment(columns.iter().map(|c| Some(c[i])).collect()))
        .collect()
}

/// Smallest Euclidean distance between two points, measured over numeric
/// parameters in unit-scaled coordinates. Inactive values count as 0.
pub fn min_pairwise_distance(space: &ParamSpace, points: &[Assignment]) -> f64 {
    let unit: Vec<Vec<f64>> = points
        .iter()
        .map(|a| {
            space
                .params()
                .iter()
                .enumerate()
                .filter_map(|(i, p)| {
                    let (l, u) = p.bounds()?;
                    Some(a.get(i).map_or(0.0, |v| (v.as_f64() - l) / (u - l)))
                })
                .collect()
        })
        .collect();
    let mut best = f64::INFINITY;
    for i in 0..unit.len() {
        for j in i + 1..unit.len() {
            let d: f64 = unit[i]
                .iter()
                .zip(&unit[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.min(d);
        }
    }
    best
}
