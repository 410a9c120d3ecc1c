//! Surrogate selection: Kriging for plain numeric spaces, forests otherwise.

use rand::Rng;

use crate::error::{Error, Result};
use crate::forest::{ForestConfig, ForestFit};
use crate::gp::{GpConfig, GpFit, KernelParams};
use crate::space::{Assignment, ParamSpace};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SurrogateChoice {
    /// Kriging when the space is purely numeric without requirements,
    /// a forest otherwise.
    #[default]
    Auto,
    Gp,
    Forest,
}

impl SurrogateChoice {
    /// The concrete model family used for `space`.
    pub fn resolve(self, space: &ParamSpace) -> SurrogateChoice {
        match self {
            SurrogateChoice::Auto if space.is_plain_numeric() => SurrogateChoice::Gp,
            SurrogateChoice::Auto => SurrogateChoice::Forest,
            other => other,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurrogateConfig {
    pub choice: SurrogateChoice,
    pub gp: GpConfig,
    pub forest: ForestConfig,
}

/// Posterior summary at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub se: f64,
}

#[derive(Clone, Debug)]
pub enum Surrogate {
    Gp(GpFit),
    Forest(ForestFit),
}

impl Surrogate {
    /// Fits the configured model family to evaluated points.
    pub fn fit<R: Rng + ?Sized>(
        space: &ParamSpace,
        points: &[Assignment],
        targets: &[f64],
        config: &SurrogateConfig,
        rng: &mut R,
    ) -> Result<Self> {
        match config.choice.resolve(space) {
            SurrogateChoice::Gp => {
                if !space.is_plain_numeric() {
                    return Err(Error::InvalidArgument(
                        "Kriging needs a numeric space without requirements".into(),
                    ));
                }
                let x: Vec<Vec<f64>> = points.iter().map(|a| space.encode_unit(a)).collect();
                Ok(Surrogate::Gp(GpFit::fit(&x, targets, &config.gp, rng)?))
            }
            _ => {
                let x = points.iter().map(|a| space.encode(a)).collect::<Result<Vec<_>>>()?;
                Ok(Surrogate::Forest(ForestFit::fit(
                    &x,
                    targets,
                    &space.feature_kinds(),
                    &config.forest,
                    rng,
                )?))
            }
        }
    }

    /// Kriging model conditioned on data with fixed hyperparameters.
    pub fn condition(
        space: &ParamSpace,
        points: &[Assignment],
        targets: &[f64],
        params: &KernelParams,
    ) -> Result<Self> {
        let x: Vec<Vec<f64>> = points.iter().map(|a| space.encode_unit(a)).collect();
        Ok(Surrogate::Gp(GpFit::with_params(&x, targets, params.clone())?))
    }

    pub fn predict(&self, space: &ParamSpace, a: &Assignment) -> Prediction {
        match self {
            Surrogate::Gp(fit) => {
                let (mean, se) = fit.predict_unchecked(&space.encode_unit(a));
                Prediction { mean, se }
            }
            Surrogate::Forest(fit) => {
                let p = fit.predict_unchecked(&space.encode_unchecked(a));
                Prediction { mean: p.mean, se: p.se }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Surrogate::Gp(_) => "gp",
            Surrogate::Forest(_) => "forest",
        }
    }

    /// Noise standard deviation implied by the fitted nugget; zero for forests.
    pub fn noise_sd(&self) -> f64 {
        match self {
            Surrogate::Gp(fit) => (fit.params().nugget * fit.params().signal_variance).sqrt(),
            Surrogate::Forest(_) => 0.0,
        }
    }

    pub fn as_gp(&self) -> Option<&GpFit> {
        match self {
            Surrogate::Gp(fit) => Some(fit),
            _ => None,
        }
    }
}
