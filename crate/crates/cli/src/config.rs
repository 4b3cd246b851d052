//! Model configuration files (JSON).
//!
//! ```json
//! { "model": "geometric_levy",
//!   "Q": [[-0.5, 0.5], [0.5, -0.5]],
//!   "mu": [0.15, 0.05], "sigma": [0.1, 0.1], "g": [-0.2, -0.1],
//!   "lambda": 1.0, "y0": 10.0, "initial_regime": 1 }
//!
//! { "model": "surplus",
//!   "Q": [[-1, 1], [1, -1]],
//!   "lambda_per_regime": [1, 2], "claim_mean": 1.0, "u": 5.0,
//!   "initial_regime": 1 }
//! ```
//!
//! Regimes are labelled from 1 in files. Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use regswitch::ctmc::GeneratorMatrix;
use regswitch::models::{GeometricLevyParams, SurplusParams};

use crate::CliError;

fn default_regime() -> usize {
    1
}

fn default_claim_mean() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    GeometricLevy {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        mu: Vec<f64>,
        sigma: Vec<f64>,
        g: Vec<f64>,
        lambda: f64,
        y0: f64,
        #[serde(default = "default_regime")]
        initial_regime: usize,
    },
    Surplus {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        lambda_per_regime: Vec<f64>,
        #[serde(default = "default_claim_mean")]
        claim_mean: f64,
        u: f64,
        #[serde(default = "default_regime")]
        initial_regime: usize,
    },
}

/// A configuration after validation against the model contracts.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    GeometricLevy(GeometricLevyParams),
    Surplus(SurplusParams),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::GeometricLevy(_) => "geometric_levy",
            Model::Surplus(_) => "surplus",
        }
    }
}

fn generator(q: &[Vec<f64>]) -> Result<GeneratorMatrix, CliError> {
    GeneratorMatrix::new(q).map_err(|e| CliError::Config(format!("Q: {e}")))
}

fn regime_index(label: usize, n: usize) -> Result<usize, CliError> {
    if label == 0 || label > n {
        return Err(CliError::Config(format!(
            "initial_regime: {label} not in 1..={n}"
        )));
    }
    Ok(label - 1)
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_owned(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<Model, CliError> {
        let field = |name: &'static str| move |e: regswitch::Error| CliError::Config(format!("{name}: {e}"));
        match self {
            ModelConfig::GeometricLevy {
                q,
                mu,
                sigma,
                g,
                lambda,
                y0,
                initial_regime,
            } => {
                let q = generator(q)?;
                let i0 = regime_index(*initial_regime, q.n_regimes())?;
                for (name, v) in [("mu", mu), ("sigma", sigma), ("g", g)] {
                    if v.len() != q.n_regimes() {
                        return Err(CliError::Config(format!(
                            "{name}: {} entries for {} regimes",
                            v.len(),
                            q.n_regimes()
                        )));
                    }
                }
                GeometricLevyParams::new(q, mu.clone(), sigma.clone(), g.clone(), *lambda, *y0, i0)
                    .map(Model::GeometricLevy)
                    .map_err(field("geometric_levy"))
            }
            ModelConfig::Surplus {
                q,
                lambda_per_regime,
                claim_mean,
                u,
                initial_regime,
            } => {
                let q = generator(q)?;
                let i0 = regime_index(*initial_regime, q.n_regimes())?;
                if lambda_per_regime.len() != q.n_regimes() {
                    return Err(CliError::Config(format!(
                        "lambda_per_regime: {} entries for {} regimes",
                        lambda_per_regime.len(),
                        q.n_regimes()
                    )));
                }
                SurplusParams::new(q, lambda_per_regime.clone(), *claim_mean, *u, i0)
                    .map(Model::Surplus)
                    .map_err(field("surplus"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GL: &str = r#"{"model":"geometric_levy","Q":[[-0.5,0.5],[0.5,-0.5]],
        "mu":[0.15,0.05],"sigma":[0.1,0.1],"g":[-0.2,-0.1],"lambda":1,"y0":10,"initial_regime":1}"#;

    #[test]
    fn parses_reference_models() {
        let m = ModelConfig::parse(GL).unwrap().validate().unwrap();
        assert_eq!(m, Model::GeometricLevy(GeometricLevyParams::reference()));
        let s = r#"{"model":"surplus","Q":[[-1,1],[1,-1]],"lambda_per_regime":[1,2],"u":5}"#;
        let m = ModelConfig::parse(s).unwrap().validate().unwrap();
        assert_eq!(m, Model::Surplus(SurplusParams::reference(5.0)));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_shapes() {
        let extra = GL.replace("\"y0\":10", "\"y0\":10,\"colour\":3");
        assert!(matches!(ModelConfig::parse(&extra), Err(CliError::Config(_))));
        assert!(ModelConfig::parse(r#"{"model":"heston"}"#).is_err());
        let short = GL.replace("\"mu\":[0.15,0.05]", "\"mu\":[0.15]");
        let err = ModelConfig::parse(&short).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("mu"), "{err}");
        let bad_q = GL.replace("[[-0.5,0.5],[0.5,-0.5]]", "[[-1,2],[1,-1]]");
        let err = ModelConfig::parse(&bad_q).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("Q"), "{err}");
        let bad_regime = GL.replace("\"initial_regime\":1", "\"initial_regime\":3");
        assert!(ModelConfig::parse(&bad_regime).unwrap().validate().is_err());
    }
}
