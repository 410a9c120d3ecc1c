//! Mixed, hierarchical parameter spaces.
//!
//! A [`ParamSpace`] is an ordered list of typed parameters. A parameter may be
//! continuous, integer or categorical, and may carry a requirement: a
//! conjunction of equality tests on parameters declared before it. A parameter
//! whose requirement fails is *inactive* and carries no value.
//!
//! Surrogate models never see raw assignments. [`ParamSpace::encode`] maps an
//! assignment to a fixed-length feature vector where inactive numeric values
//! are imputed out of range and inactive categoricals get an extra level.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the extra categorical level used for inactive categorical parameters.
pub const MISSING_LEVEL: &str = "__MISSING__";

/// Domain of a single parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ParamKind {
    Continuous { lower: f64, upper: f64 },
    Integer { lower: i64, upper: i64 },
    Categorical { levels: Vec<String> },
}

/// Monotone map applied to a value right before the objective sees it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    None,
    /// The box holds exponents; the objective receives `10^x`.
    Log10,
}

/// Right-hand side of an activation condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CondValue {
    Number(f64),
    Level(String),
}

/// One equality test `param == equals`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub param: String,
    pub equals: CondValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requires: Vec<Condition>,
    #[serde(default)]
    pub transform: Transform,
}

impl ParamDef {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self::new(name, ParamKind::Continuous { lower, upper })
    }

    pub fn integer(name: impl Into<String>, lower: i64, upper: i64) -> Self {
        Self::new(name, ParamKind::Integer { lower, upper })
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        let levels = levels.into_iter().map(Into::into).collect();
        Self::new(name, ParamKind::Categorical { levels })
    }

    fn new(name: impl Into<String>, kind: ParamKind) -> Self {
        Self {
            name: name.into(),
            kind,
            requires: Vec::new(),
            transform: Transform::None,
        }
    }

    /// Adds the condition `param == level`.
    pub fn requires_level(mut self, param: impl Into<String>, level: impl Into<String>) -> Self {
        self.requires.push(Condition {
            param: param.into(),
            equals: CondValue::Level(level.into()),
        });
        self
    }

    /// Adds the condition `param == value` for a numeric parent.
    pub fn requires_value(mut self, param: impl Into<String>, value: f64) -> Self {
        self.requires.push(Condition {
            param: param.into(),
            equals: CondValue::Number(value),
        });
        self
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    pub fn is_numeric(&self) -> bool {
        !matches!(self.kind, ParamKind::Categorical { .. })
    }

    /// Numeric bounds as reals; `None` for categoricals.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self.kind {
            ParamKind::Continuous { lower, upper } => Some((lower, upper)),
            ParamKind::Integer { lower, upper } => Some((lower as f64, upper as f64)),
            ParamKind::Categorical { .. } => None,
        }
    }

    /// Out-of-range code used for an inactive numeric parameter.
    pub fn sentinel(&self) -> Option<f64> {
        self.bounds().map(|(l, u)| u + 2.0 * (u - l))
    }

    fn contains(&self, value: &Value) -> bool {
        match (&self.kind, value) {
            (ParamKind::Continuous { lower, upper }, Value::Real(v)) => v.is_finite() && *v >= *lower && *v <= *upper,
            (ParamKind::Integer { lower, upper }, Value::Int(v)) => v >= lower && v <= upper,
            (ParamKind::Categorical { levels }, Value::Level(i)) => *i < levels.len(),
            _ => false,
        }
    }
}

/// A concrete parameter value. Categorical values are level indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Level(usize),
}

impl Value {
    /// Numeric view of the value; level indices map to their index.
    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Real(v) => v,
            Value::Int(v) => v as f64,
            Value::Level(i) => i as f64,
        }
    }
}

/// One configuration: a value per parameter, `None` where inactive.
///
/// Values are stored positionally, in the order of the owning space.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment(pub Vec<Option<Value>>);

impl Assignment {
    pub fn values(&self) -> &[Option<Value>] {
        &self.0
    }

    pub fn get(&self, index: usize) -> Option<Value> {
        self.0.get(index).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Current sampling domain of one parameter, possibly narrowed by an infill
/// optimizer.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Real { lower: f64, upper: f64 },
    Int { lower: i64, upper: i64 },
    Levels(Vec<usize>),
}

/// Type of one encoded feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    /// Level indices `0..n_levels`; the last index is [`MISSING_LEVEL`].
    Categorical {
        n_levels: usize,
    },
}

/// Checks every structural invariant of a parameter list.
///
/// Returns one human-readable description per violation; an empty vector
/// means the list forms a valid space.
pub fn validate(params: &[ParamDef]) -> Vec<String> {
    let mut violations = Vec::new();
    if params.is_empty() {
        violations.push("space has no parameters".to_string());
    }
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, p) in params.iter().enumerate() {
        if !seen.insert(p.name.as_str()) {
            violations.push(format!("duplicate name `{}`", p.name));
        }
        match &p.kind {
            ParamKind::Continuous { lower, upper } => {
                if !lower.is_finite() || !upper.is_finite() {
                    violations.push(format!("`{}`: non-finite bounds", p.name));
                } else if lower >= upper {
                    violations.push(format!("`{}`: empty interval [{lower}, {upper}]", p.name));
                }
            }
            ParamKind::Integer { lower, upper } => {
                if lower >= upper {
                    violations.push(format!("`{}`: empty interval [{lower}, {upper}]", p.name));
                }
            }
            ParamKind::Categorical { levels } => {
                if levels.is_empty() {
                    violations.push(format!("`{}`: no levels", p.name));
                }
                let mut lv: HashSet<&str> = HashSet::new();
                for l in levels {
                    if !lv.insert(l.as_str()) {
                        violations.push(format!("`{}`: duplicate level `{l}`", p.name));
                    }
                    if l == MISSING_LEVEL {
                        violations.push(format!("`{}`: reserved level `{l}`", p.name));
                    }
                }
            }
        }
        for cond in &p.requires {
            match params[..i].iter().find(|q| q.name == cond.param) {
                None => violations.push(format!(
                    "`{}`: requirement references `{}`, which is not declared before it",
                    p.name, cond.param
                )),
                Some(parent) => {
                    if resolve_condition(parent, &cond.equals).is_none() {
                        violations.push(format!(
                            "`{}`: requirement value {:?} is outside the domain of `{}`",
                            p.name, cond.equals, parent.name
                        ));
                    }
                }
            }
        }
    }
    violations
}

fn resolve_condition(parent: &ParamDef, equals: &CondValue) -> Option<Value> {
    let value = match (&parent.kind, equals) {
        (ParamKind::Categorical { levels }, CondValue::Level(l)) => Value::Level(levels.iter().position(|x| x == l)?),
        (ParamKind::Continuous { .. }, CondValue::Number(v)) => Value::Real(*v),
        (ParamKind::Integer { .. }, CondValue::Number(v)) if v.fract() == 0.0 => Value::Int(*v as i64),
        _ => return None,
    };
    parent.contains(&value).then_some(value)
}

/// A validated, immutable parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParamDef>", into = "Vec<ParamDef>")]
pub struct ParamSpace {
    params: Vec<ParamDef>,
    /// Resolved requirements: `(parent index, required value)`.
    requires: Vec<Vec<(usize, Value)>>,
}

impl TryFrom<Vec<ParamDef>> for ParamSpace {
    type Error = Error;

    fn try_from(params: Vec<ParamDef>) -> Result<Self> {
        Self::new(params)
    }
}

impl From<ParamSpace> for Vec<ParamDef> {
    fn from(space: ParamSpace) -> Self {
        space.params
    }
}

impl ParamSpace {
    pub fn new(params: Vec<ParamDef>) -> Result<Self> {
        let violations = validate(&params);
        if !violations.is_empty() {
            return Err(Error::InvalidSpace(violations));
        }
        let requires = params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.requires
                    .iter()
                    .map(|c| {
                        let parent = params[..i].iter().position(|q| q.name == c.param).expect("validated");
                        let value = resolve_condition(&params[parent], &c.equals).expect("validated");
                        (parent, value)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { params, requires })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn params(&self) -> &[ParamDef] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    /// True when every parameter is numeric and none has a requirement.
    pub fn is_plain_numeric(&self) -> bool {
        self.params.iter().all(|p| p.is_numeric() && p.requires.is_empty())
    }

    /// True when at least one integer or categorical parameter is present.
    pub fn has_discrete(&self) -> bool {
        self.params
            .iter()
            .any(|p| !matches!(p.kind, ParamKind::Continuous { .. }))
    }

    pub fn has_requirements(&self) -> bool {
        self.params.iter().any(|p| !p.requires.is_empty())
    }

    /// Looks up the value of a named parameter.
    pub fn value(&self, a: &Assignment, name: &str) -> Result<Option<Value>> {
        Ok(a.get(self.index_of(name)?))
    }

    /// Whether the full requirement chain of `name` holds under `a`.
    pub fn is_active(&self, a: &Assignment, name: &str) -> Result<bool> {
        let index = self.index_of(name)?;
        Ok(self.is_active_at(a.values(), index))
    }

    pub(crate) fn is_active_at(&self, values: &[Option<Value>], index: usize) -> bool {
        self.requires[index].iter().all(|&(parent, required)| {
            values.get(parent).copied().flatten() == Some(required) && self.is_active_at(values, parent)
        })
    }

    /// Requirement check against values decided so far; parents precede
    /// children, so their activity is already reflected in `values`.
    fn requirement_holds(&self, values: &[Option<Value>], index: usize) -> bool {
        self.requires[index]
            .iter()
            .all(|&(parent, required)| values[parent] == Some(required))
    }

    /// Full sampling domain of every parameter.
    pub fn domains(&self) -> Vec<Domain> {
        self.params
            .iter()
            .map(|p| match &p.kind {
                ParamKind::Continuous { lower, upper } => Domain::Real {
                    lower: *lower,
                    upper: *upper,
                },
                ParamKind::Integer { lower, upper } => Domain::Int {
                    lower: *lower,
                    upper: *upper,
                },
                ParamKind::Categorical { levels } => Domain::Levels((0..levels.len()).collect()),
            })
            .collect()
    }

    /// Draws every parameter uniformly from the whole space.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Assignment {
        self.sample_in(&self.domains(), rng)
    }

    /// Draws every parameter uniformly from `domains`, in declaration order,
    /// leaving parameters with a failed requirement inactive.
    pub fn sample_in<R: Rng + ?Sized>(&self, domains: &[Domain], rng: &mut R) -> Assignment {
        let mut values = Vec::with_capacity(self.dim());
        for (i, domain) in domains.iter().enumerate() {
            let v = if self.requirement_holds(&values, i) {
                Some(match domain {
                    Domain::Real { lower, upper } => Value::Real(rng.random_range(*lower..=*upper)),
                    Domain::Int { lower, upper } => Value::Int(rng.random_range(*lower..=*upper)),
                    Domain::Levels(levels) => Value::Level(levels[rng.random_range(0..levels.len())]),
                })
            } else {
                None
            };
            values.push(v);
        }
        Assignment(values)
    }

    /// Sets every parameter whose requirement fails to inactive, in order.
    pub fn mask_inactive(&self, mut a: Assignment) -> Assignment {
        for i in 0..a.0.len() {
            if !self.requirement_holds(&a.0, i) {
                a.0[i] = None;
            }
        }
        a
    }

    /// Checks activity and domain membership of every value.
    pub fn check(&self, a: &Assignment) -> Result<()> {
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: a.len(),
            });
        }
        for (i, p) in self.params.iter().enumerate() {
            let active = self.is_active_at(a.values(), i);
            match (active, a.get(i)) {
                (true, None) => return Err(Error::InvalidAssignment(format!("`{}` is active but missing", p.name))),
                (false, Some(_)) => {
                    return Err(Error::InvalidAssignment(format!(
                        "`{}` is inactive but has a value",
                        p.name
                    )))
                }
                (true, Some(v)) if !p.contains(&v) => {
                    return Err(Error::InvalidAssignment(format!(
                        "`{}` = {v:?} is outside its domain",
                        p.name
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Kind of each encoded feature, one per parameter.
    pub fn feature_kinds(&self) -> Vec<FeatureKind> {
        self.params
            .iter()
            .map(|p| match &p.kind {
                ParamKind::Categorical { levels } => FeatureKind::Categorical {
                    n_levels: levels.len() + 1,
                },
                _ => FeatureKind::Numeric,
            })
            .collect()
    }

    /// Fixed-length surrogate features for a valid assignment.
    ///
    /// Active numerics pass through untransformed. Inactive numerics become
    /// `upper + 2 * (upper - lower)`; inactive categoricals become the index
    /// of [`MISSING_LEVEL`], one past the declared levels.
    pub fn encode(&self, a: &Assignment) -> Result<Vec<f64>> {
        self.check(a)?;
        Ok(self.encode_unchecked(a))
    }

    pub(crate) fn encode_unchecked(&self, a: &Assignment) -> Vec<f64> {
        self.params
            .iter()
            .zip(a.values())
            .map(|(p, v)| match (v, &p.kind) {
                (Some(v), _) => v.as_f64(),
                (None, ParamKind::Categorical { levels }) => levels.len() as f64,
                (None, _) => p.sentinel().expect("numeric"),
            })
            .collect()
    }

    /// Encoding with numeric features rescaled so the box maps to `[0, 1]`.
    ///
    /// Inactive numerics land at 3.0; categorical features keep their level
    /// index.
    pub fn encode_unit(&self, a: &Assignment) -> Vec<f64> {
        self.params
            .iter()
            .zip(self.encode_unchecked(a))
            .map(|(p, x)| match p.bounds() {
                Some((l, u)) => (x - l) / (u - l),
                None => x,
            })
            .collect()
    }

    /// Applies each parameter's transform, yielding the values the objective sees.
    pub fn transformed(&self, a: &Assignment) -> Assignment {
        Assignment(
            self.params
                .iter()
                .zip(a.values())
                .map(|(p, v)| match (p.transform, v) {
                    (Transform::Log10, Some(v)) => Some(Value::Real(10f64.powf(v.as_f64()))),
                    (_, v) => *v,
                })
                .collect(),
        )
    }

    /// Display form used in CSV files: numbers verbatim, level names, empty
    /// for inactive.
    pub fn format_value(&self, index: usize, value: Option<Value>) -> String {
        match (value, &self.params[index].kind) {
            (None, _) => String::new(),
            (Some(Value::Level(i)), ParamKind::Categorical { levels }) => levels[i].clone(),
            (Some(Value::Real(v)), _) => format!("{v}"),
            (Some(Value::Int(v)), _) => format!("{v}"),
            (Some(Value::Level(i)), _) => format!("{i}"),
        }
    }

    /// Inverse of [`ParamSpace::format_value`].
    pub fn parse_value(&self, index: usize, text: &str) -> Result<Option<Value>> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(None);
        }
        let p = &self.params[index];
        let bad = || Error::Parse(format!("`{}`: cannot parse `{text}`", p.name));
        Ok(Some(match &p.kind {
            ParamKind::Continuous { .. } => Value::Real(text.parse().map_err(|_| bad())?),
            ParamKind::Integer { .. } => Value::Int(text.parse().map_err(|_| bad())?),
            ParamKind::Categorical { levels } => Value::Level(levels.iter().position(|l| l == text).ok_or_else(bad)?),
        }))
    }
}

impl fmt::Display for ParamSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        write!(f, "ParamSpace({})", names.join(", "))
    }
}

/// Numeric box `[lower, upper]^d` with parameters `x1..xd`.
pub fn numeric_box(bounds: &[(f64, f64)]) -> Result<ParamSpace> {
    ParamSpace::new(
        bounds
            .iter()
            .enumerate()
            .map(|(i, &(l, u))| ParamDef::continuous(format!("x{}", i + 1), l, u))
            .collect(),
    )
}
