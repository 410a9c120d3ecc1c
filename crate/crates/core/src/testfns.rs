//! Standard synthetic test functions.
//!
//! Problems are looked up by name. Dimension-free families take the
//! dimension as a suffix (`ackley5`, `rosenbrock10`), defaulting to 5; fixed-dimension
//! problems (`branin`, `sixhumpcamel`, `hartmann6`) are named as is.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::space::{numeric_box, ParamSpace};

/// A box-constrained minimization problem.
#[derive(Clone, Debug)]
pub struct TestProblem {
    pub name: String,
    pub bounds: Vec<(f64, f64)>,
    /// Known global minimum value.
    pub optimum: Option<f64>,
    f: fn(&[f64]) -> f64,
}

impl TestProblem {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn space(&self) -> ParamSpace {
        numeric_box(&self.bounds).expect("test problem boxes are valid")
    }
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Sphere centred at `(1, ..., 1)`.
pub fn shifted_sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| (v - 1.0).powi(2)).sum()
}

pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cos = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cos.exp() + 20.0 + std::f64::consts::E
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn alpine01(x: &[f64]) -> f64 {
    x.iter().map(|v| (v * v.sin() + 0.1 * v).abs()).sum()
}

/// Minimum `-1` at `x = (5, ..., 5)`.
pub fn deflected_corrugated_spring(x: &[f64]) -> f64 {
    const ALPHA: f64 = 5.0;
    const K: f64 = 5.0;
    let r2: f64 = x.iter().map(|v| (v - ALPHA).powi(2)).sum();
    0.1 * r2 - (K * r2.sqrt()).cos()
}

pub fn schwefel(x: &[f64]) -> f64 {
    418.982_887_272_433_9 * x.len() as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
}

pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    sum - prod + 1.0
}

pub fn branin(x: &[f64]) -> f64 {
    let (a, b, c) = (1.0, 5.1 / (4.0 * PI * PI), 5.0 / PI);
    let (r, s, t) = (6.0, 10.0, 1.0 / (8.0 * PI));
    a * (x[1] - b * x[0] * x[0] + c * x[0] - r).powi(2) + s * (1.0 - t) * x[0].cos() + s
}

pub fn six_hump_camel(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b
}

pub fn hartmann6(x: &[f64]) -> f64 {
    const ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
    const A: [[f64; 6]; 4] = [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ];
    const P: [[f64; 6]; 4] = [
        [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
        [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
        [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
        [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
    ];
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..6).map(|j| A[i][j] * (x[j] - P[i][j]).powi(2)).sum();
            ALPHA[i] * (-inner).exp()
        })
        .sum::<f64>()
}

/// Dimension of a family named without a suffix.
pub const DEFAULT_DIM: usize = 5;

type Family = (&'static str, fn(&[f64]) -> f64, (f64, f64), f64);

/// Dimension-free families: name, function, per-coordinate box, minimum.
const FAMILIES: [Family; 8] = [
    ("ackley", ackley, (-32.768, 32.768), 0.0),
    ("alpine01", alpine01, (-10.0, 10.0), 0.0),
    (
        "deflectedcorrugatedspring",
        deflected_corrugated_spring,
        (0.0, 10.0),
        -1.0,
    ),
    ("griewank", griewank, (-600.0, 600.0), 0.0),
    ("rosenbrock", rosenbrock, (-5.0, 10.0), 0.0),
    ("schwefel", schwefel, (-500.0, 500.0), 0.0),
    ("sphere", sphere, (-5.12, 5.12), 0.0),
    ("shiftedsphere", shifted_sphere, (-5.12, 5.12), 0.0),
];

/// Every problem name accepted by [`problem`]; families are shown with a
/// `<d>` placeholder.
pub fn problem_names() -> Vec<String> {
    let mut names: Vec<String> = FAMILIES.iter().map(|f| format!("{}<d>", f.0)).collect();
    names.extend(["branin", "sixhumpcamel", "hartmann6"].map(String::from));
    names
}

/// Looks a problem up by name, e.g. `ackley5` or `branin`.
pub fn problem(name: &str) -> Result<TestProblem> {
    let lower = name.trim().to_ascii_lowercase();
    let fixed = |f: fn(&[f64]) -> f64, bounds: Vec<(f64, f64)>, optimum: f64| TestProblem {
        name: lower.clone(),
        bounds,
        optimum: Some(optimum),
        f,
    };
    match lower.as_str() {
        "branin" => return Ok(fixed(branin, vec![(-5.0, 10.0), (0.0, 15.0)], 0.397_887_357_729_738)),
        "sixhumpcamel" => {
            return Ok(fixed(
                six_hump_camel,
                vec![(-3.0, 3.0), (-2.0, 2.0)],
                -1.031_628_453_489_877,
            ))
        }
        "hartmann6" => return Ok(fixed(hartmann6, vec![(0.0, 1.0); 6], -3.322_368_011_415_515)),
        _ => {}
    }
    // family names may end in digits themselves (`alpine01`), so match on prefixes
    let family = FAMILIES
        .iter()
        .find(|f| lower.starts_with(f.0) && lower[f.0.len()..].chars().all(|c| c.is_ascii_digit()))
        .ok_or_else(|| Error::InvalidArgument(format!("unknown problem `{name}`")))?;
    let (base, digits) = lower.split_at(family.0.len());
    let d: usize = if digits.is_empty() {
        DEFAULT_DIM
    } else {
        digits
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad dimension in `{name}`")))?
    };
    if d == 0 || (base == "rosenbrock" && d < 2) {
        return Err(Error::InvalidArgument(format!("invalid dimension for `{name}`")));
    }
    Ok(TestProblem {
        name: lower.clone(),
        bounds: vec![family.2; d],
        optimum: Some(family.3),
        f: family.1,
    })
}

/// Two problems of equal dimension sharing one box, for bi-objective runs.
///
/// Written `first,second`, e.g. `sphere5,rosenbrock5`. The common box is the
/// intersection of both boxes.
#[derive(Clone, Debug)]
pub struct ProblemPair {
    pub first: TestProblem,
    pub second: TestProblem,
    pub bounds: Vec<(f64, f64)>,
}

impl ProblemPair {
    pub fn parse(spec: &str) -> Result<Self> {
        let (a, b) = spec
            .split_once(',')
            .ok_or_else(|| Error::InvalidArgument(format!("expected `first,second`, got `{spec}`")))?;
        let (first, second) = (problem(a)?, problem(b)?);
        if first.dim() != second.dim() {
            return Err(Error::InvalidArgument(format!(
                "`{}` and `{}` differ in dimension",
                first.name, second.name
            )));
        }
        let bounds = first
            .bounds
            .iter()
            .zip(&second.bounds)
            .map(|(p, q)| (p.0.max(q.0), p.1.min(q.1)))
            .collect::<Vec<_>>();
        if bounds.iter().any(|(l, u)| l >= u) {
            return Err(Error::InvalidArgument(format!("`{spec}`: boxes do not overlap")));
        }
        Ok(Self { first, second, bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn name(&self) -> String {
        format!("{},{}", self.first.name, self.second.name)
    }

    pub fn eval(&self, x: &[f64]) -> [f64; 2] {
        [self.first.eval(x), self.second.eval(x)]
    }

    pub fn space(&self) -> ParamSpace {
        numeric_box(&self.bounds).expect("overlap checked")
    }
}
