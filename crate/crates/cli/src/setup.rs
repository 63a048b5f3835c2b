use std::path::PathBuf;

use cf_certify::edgeworth::correlation_effective_n;
use cf_certify::montecarlo::Statistic;
use cf_certify::{
    build_correlation_model, build_correlation_transformed_model, build_hotelling_t0sq_model,
    build_hotelling_transform, build_hotelling_transformed_model, EdgeworthModel, MonotoneTransform,
};
use clap::{Args, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stat {
    /// √N·R for the sample correlation, N = n − 2.5
    Corr,
    /// Hotelling's generalized T₀²
    T0sq,
    /// Model read from --model (and --transform for theorem 3)
    Custom,
}

#[derive(Debug, Clone, Args)]
pub struct StatArgs {
    #[arg(long, value_enum)]
    pub stat: Stat,
    /// Sample size
    #[arg(long)]
    pub n: Option<u32>,
    /// Dimension (t0sq)
    #[arg(long)]
    pub p: Option<u32>,
    /// Hypothesis degrees of freedom (t0sq)
    #[arg(long)]
    pub q: Option<u32>,
    /// Remainder constant: c_pq for theorem 1, c̃ for theorems 2 and 3.
    /// Defaults to 2.2 for corr; required for t0sq.
    #[arg(long)]
    pub c: Option<f64>,
    /// Model JSON; replaces the built-in model of --stat
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Transform JSON for theorem 3
    #[arg(long)]
    pub transform: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TheoremArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

/// What the certificate is about, ready to certify.
pub struct Setup {
    pub model: EdgeworthModel,
    pub transform: Option<MonotoneTransform>,
}

fn need<T>(value: Option<T>, flag: &str, stat: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --stat {stat}")))
}

fn read(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

impl StatArgs {
    pub fn statistic(&self) -> CliResult<Statistic> {
        match self.stat {
            Stat::Corr => Ok(Statistic::Correlation {
                n: need(self.n, "n", "corr")?,
            }),
            Stat::T0sq => Ok(Statistic::HotellingT0sq {
                p: need(self.p, "p", "t0sq")?,
                q: need(self.q, "q", "t0sq")?,
                n: need(self.n, "n", "t0sq")?,
            }),
            Stat::Custom => Err(CliError::Usage(
                "--stat custom has no sampler; use corr or t0sq with --model to override the model".into(),
            )),
        }
    }

    fn custom_model(&self) -> CliResult<Option<EdgeworthModel>> {
        match &self.model {
            None => Ok(None),
            Some(path) => Ok(Some(EdgeworthModel::from_json(&read(path)?)?)),
        }
    }

    fn custom_transform(&self) -> CliResult<Option<MonotoneTransform>> {
        match &self.transform {
            None => Ok(None),
            Some(path) => Ok(Some(MonotoneTransform::from_json(&read(path)?)?)),
        }
    }

    /// Model and transform for `theorem`. Theorem 1 folds any first-order
    /// term into the remainder; theorems 2 and 3 use the corrected statistic.
    pub fn setup(&self, theorem: TheoremArg) -> CliResult<Setup> {
        let (model, transform) = match self.stat {
            Stat::Corr => {
                let n = need(self.n, "n", "corr")?;
                match theorem {
                    TheoremArg::One => (build_correlation_model(n)?, None),
                    _ => (
                        build_correlation_transformed_model(n, self.c.unwrap_or(2.2))?,
                        Some(MonotoneTransform::correlation_cubic(correlation_effective_n(n))?),
                    ),
                }
            }
            Stat::T0sq => {
                let (p, q, n) = (need(self.p, "p", "t0sq")?, need(self.q, "q", "t0sq")?, need(self.n, "n", "t0sq")?);
                let model_given = self.model.is_some();
                let c = if model_given { self.c.unwrap_or(1.0) } else { need(self.c, "c", "t0sq")? };
                match theorem {
                    TheoremArg::One => (build_hotelling_t0sq_model(p, q, n, c)?, None),
                    _ => (
                        build_hotelling_transformed_model(p, q, n, c)?,
                        Some(build_hotelling_transform(p, q, n)?),
                    ),
                }
            }
            Stat::Custom => {
                let model = self
                    .custom_model()?
                    .ok_or_else(|| CliError::Usage("--model is required for --stat custom".into()))?;
                (model, None)
            }
        };
        let model = self.custom_model()?.unwrap_or(model);
        let transform = match (theorem, self.custom_transform()?, transform) {
            (TheoremArg::Three, Some(t), _) => Some(t),
            (TheoremArg::Three, None, Some(t)) => Some(t),
            (TheoremArg::Three, None, None) => {
                return Err(CliError::Usage("theorem 3 needs --transform for --stat custom".into()))
            }
            (_, _, t) => t,
        };
        let model = match theorem {
            TheoremArg::One => model.absorb_correction()?,
            _ => model,
        };
        Ok(Setup { model, transform })
    }
}
