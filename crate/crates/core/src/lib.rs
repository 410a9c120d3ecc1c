//! Sequential model-based optimization over mixed, hierarchical spaces.

pub mod batch;
pub mod criteria;
pub mod design;
pub mod engine;
pub mod error;
pub mod focus;
pub mod forest;
pub mod gp;
pub mod multiobj;
mod nelder_mead;
pub mod pareto;
pub mod space;
pub mod surrogate;
pub mod testfns;

pub use criteria::{ArchiveStats, CriterionSpec, Liar};
pub use design::{grid_design, lhs_design, random_design, Design};
pub use engine::{
    mbo, Archive, ArchiveRow, FinalPoint, MboControl, MboResult, OnEvalError, Origin, Termination, TerminationRule,
};
pub use error::{Error, Result};
pub use focus::{focus_search, random_opt, FocusConfig, InfillOptimizer, InfillResult};
pub use forest::{ForestConfig, ForestFit, ForestPrediction};
pub use gp::{GpConfig, GpFit, KernelParams};
pub use multiobj::{mbo_multi, MoAlgorithm, MoControl, MoResult};
pub use pareto::{dominates, hypervolume_2d, pareto_front};
pub use space::{Assignment, ParamDef, ParamKind, ParamSpace, Value};
pub use surrogate::{Prediction, Surrogate, SurrogateChoice, SurrogateConfig};
pub use testfns::{problem, ProblemPair, TestProblem};
