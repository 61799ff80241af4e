//! Versioned JSON documents for distributions, mixtures, and model
//! checkpoints.
//!
//! Distribution document (also used for plain distributions, as a single
//! component with weight one):
//!
//! ```json
//! {
//!   "version": 1,
//!   "dim": 2,
//!   "components": [
//!     { "points": [ { "x": [1.0, 0.0], "y": 1, "mass": 0.5 } ] }
//!   ],
//!   "weights": [1.0]
//! }
//! ```
//!
//! Checkpoint document: flat parameters in the stable layout (extractor
//! parameters, head coefficients, head bias), plus enough architecture to
//! rebuild the skeleton.

use serde::{Deserialize, Serialize};

use satlab_core::mixtures::{DiscreteDistribution, LabeledPoint, MixtureSpec};
use satlab_core::models::{Activation, ComposedModel, DictionaryExtractor, Extractor, LinearHead, MlpExtractor};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub x: Vec<f64>,
    pub y: i8,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub points: Vec<PointDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionDoc {
    pub version: u32,
    pub dim: usize,
    pub components: Vec<ComponentDoc>,
    pub weights: Vec<f64>,
}

impl DistributionDoc {
    pub fn from_mixture(spec: &MixtureSpec) -> Self {
        DistributionDoc {
            version: SCHEMA_VERSION,
            dim: spec.dim(),
            components: spec
                .components()
                .iter()
                .map(|c| ComponentDoc {
                    points: c
                        .points()
                        .iter()
                        .map(|p| PointDoc {
                            x: p.features.clone(),
                            y: p.label,
                            mass: p.mass,
                        })
                        .collect(),
                })
                .collect(),
            weights: spec.weights().to_vec(),
        }
    }

    pub fn from_distribution(dist: &DiscreteDistribution) -> Self {
        DistributionDoc {
            version: SCHEMA_VERSION,
            dim: dist.dim(),
            components: vec![ComponentDoc {
                points: dist
                    .points()
                    .iter()
                    .map(|p| PointDoc {
                        x: p.features.clone(),
                        y: p.label,
                        mass: p.mass,
                    })
                    .collect(),
            }],
            weights: vec![1.0],
        }
    }

    pub fn to_mixture(&self) -> CliResult<MixtureSpec> {
        if self.version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "unsupported distribution schema version {}",
                self.version
            )));
        }
        let components = self
            .components
            .iter()
            .map(|c| {
                DiscreteDistribution::new(
                    self.dim,
                    c.points
                        .iter()
                        .map(|p| LabeledPoint::new(p.x.clone(), p.y, p.mass))
                        .collect(),
                )
                .map_err(CliError::from)
            })
            .collect::<CliResult<Vec<_>>>()?;
        MixtureSpec::new(components, self.weights.clone()).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointDoc {
    pub version: u32,
    /// "dictionary" | "mlp" | "identity"
    pub kind: String,
    pub input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_widths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<String>,
    /// Flat parameters: extractor, head coefficients, head bias.
    pub parameters: Vec<f64>,
    /// Seeds this model's randomness descended from, outermost first.
    pub seed_lineage: Vec<u64>,
}

pub fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Tanh => "tanh",
        Activation::Relu => "relu",
    }
}

pub fn parse_activation(s: &str) -> CliResult<Activation> {
    match s {
        "tanh" => Ok(Activation::Tanh),
        "relu" => Ok(Activation::Relu),
        other => Err(CliError::config(format!("unknown activation '{other}'"))),
    }
}

pub fn save_model(model: &ComposedModel, seed_lineage: &[u64]) -> CliResult<CheckpointDoc> {
    let (kind, dictionary_dim, layer_widths, activation) = match &model.extractor {
        Extractor::Dictionary(d) => (
            "dictionary",
            Some(d.dictionary_dim()),
            None,
            None,
        ),
        Extractor::Mlp(m) => (
            "mlp",
            None,
            Some(m.layer_widths.clone()),
            Some(activation_name(m.activation).to_string()),
        ),
        Extractor::Identity(_) => ("identity", None, None, None),
        Extractor::Concat(_) => {
            return Err(CliError::config(
                "concatenated extractors are checkpointed member-wise",
            ))
        }
    };
    Ok(CheckpointDoc {
        version: SCHEMA_VERSION,
        kind: kind.to_string(),
        input_dim: model.input_dim(),
        dictionary_dim,
        layer_widths,
        activation,
        parameters: model.flatten_params(),
        seed_lineage: seed_lineage.to_vec(),
    })
}

pub fn load_model(doc: &CheckpointDoc) -> CliResult<ComposedModel> {
    if doc.version != SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "unsupported checkpoint schema version {}",
            doc.version
        )));
    }
    let extractor = match doc.kind.as_str() {
        "dictionary" => {
            let d = doc
                .dictionary_dim
                .ok_or_else(|| CliError::config("dictionary checkpoint needs dictionary_dim"))?;
            Extractor::Dictionary(DictionaryExtractor::new(vec![0.0; d]))
        }
        "mlp" => {
            let widths = doc
                .layer_widths
                .clone()
                .ok_or_else(|| CliError::config("mlp checkpoint needs layer_widths"))?;
            let activation = parse_activation(
                doc.activation
                    .as_deref()
                    .ok_or_else(|| CliError::config("mlp checkpoint needs activation"))?,
            )?;
            Extractor::Mlp(MlpExtractor::init(doc.input_dim, widths, activation, 0))
        }
        "identity" => Extractor::Identity(doc.input_dim),
        other => return Err(CliError::config(format!("unknown checkpoint kind '{other}'"))),
    };
    let head = LinearHead::zeros(extractor.output_dim());
    let skeleton = ComposedModel::new(extractor, head).map_err(CliError::from)?;
    skeleton
        .unflatten_params(&doc.parameters)
        .map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use satlab_core::mixtures::canonical_mixture;
    use satlab_core::models::ArchSpec;

    #[test]
    fn distribution_doc_roundtrips() {
        let spec = canonical_mixture();
        let doc = DistributionDoc::from_mixture(&spec);
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let parsed: DistributionDoc = serde_json::from_str(&text).unwrap();
        let back = parsed.to_mixture().unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"version":1,"dim":1,"components":[],"weights":[],"extra":1}"#;
        assert!(serde_json::from_str::<DistributionDoc>(text).is_err());
    }

    #[test]
    fn checkpoints_roundtrip_models() {
        for arch in [
            ArchSpec::Dictionary { init_scale: 0.5 },
            ArchSpec::Mlp {
                hidden: vec![5],
                features: 3,
                activation: Activation::Tanh,
            },
        ] {
            let model = arch.instantiate(2, 9).unwrap();
            let doc = save_model(&model, &[9]).unwrap();
            let text = serde_json::to_string(&doc).unwrap();
            let parsed: CheckpointDoc = serde_json::from_str(&text).unwrap();
            let loaded = load_model(&parsed).unwrap();
            assert_eq!(loaded, model);
        }
    }
}
