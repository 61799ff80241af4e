//! Experiment configuration documents: strict JSON (unknown fields
//! rejected), every field defaulted, validated before any compute.

use serde::{Deserialize, Serialize};

use satlab_core::mixtures::{
    canonical_mixture, paired_family_mixture, MixtureSpec, CANONICAL_WEIGHTS,
};
use satlab_core::models::{ArchSpec, Loss};
use satlab_core::training::TrainConfig;

use crate::error::{CliError, CliResult};
use crate::schema::{parse_activation, DistributionDoc, SCHEMA_VERSION};

fn check_version(v: u32) -> CliResult<()> {
    if v != SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

/// Which labeled mixture to run on. Exactly one source: a named generator
/// (`counterexample` or `paired_family`) or an inline distribution document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixtureConfig {
    pub generator: Option<String>,
    /// Full per-component weights (counterexample: 4 entries).
    pub weights: Option<Vec<f64>>,
    /// paired_family only: feature count (even, >= 2).
    pub k: Option<usize>,
    /// paired_family only: four local weights replicated per pair.
    pub pair_local_weights: Option<[f64; 4]>,
    pub inline: Option<DistributionDoc>,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            generator: Some("counterexample".to_string()),
            weights: None,
            k: None,
            pair_local_weights: None,
            inline: None,
        }
    }
}

impl MixtureConfig {
    pub fn build(&self) -> CliResult<MixtureSpec> {
        if let Some(doc) = &self.inline {
            if self.generator.is_some() {
                return Err(CliError::config(
                    "config sets both a generator and an inline distribution",
                ));
            }
            return doc.to_mixture();
        }
        match self.generator.as_deref() {
            Some("counterexample") | None => {
                if self.k.is_some() || self.pair_local_weights.is_some() {
                    return Err(CliError::config(
                        "k and pair_local_weights only apply to the paired_family generator",
                    ));
                }
                let weights = self
                    .weights
                    .clone()
                    .unwrap_or_else(|| CANONICAL_WEIGHTS.to_vec());
                MixtureSpec::new(
                    satlab_core::mixtures::counterexample_components(),
                    weights,
                )
                .map_err(CliError::from)
            }
            Some("paired_family") => {
                let k = self.k.unwrap_or(8);
                if let Some(weights) = &self.weights {
                    let comps = satlab_core::mixtures::gen_counterexample_family(k)
                        .map_err(CliError::from)?;
                    MixtureSpec::new(comps, weights.clone()).map_err(CliError::from)
                } else {
                    let local = self.pair_local_weights.unwrap_or(CANONICAL_WEIGHTS);
                    paired_family_mixture(k, &local).map_err(CliError::from)
                }
            }
            Some(other) => Err(CliError::config(format!("unknown generator '{other}'"))),
        }
    }
}

pub fn default_canonical() -> MixtureSpec {
    canonical_mixture()
}

/// Extractor architecture.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchConfig {
    /// "dictionary" | "mlp"
    pub kind: String,
    pub init_scale: Option<f64>,
    pub hidden: Option<Vec<usize>>,
    pub features: Option<usize>,
    pub activation: Option<String>,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            kind: "dictionary".to_string(),
            init_scale: None,
            hidden: None,
            features: None,
            activation: None,
        }
    }
}

impl ArchConfig {
    pub fn mlp_default() -> Self {
        ArchConfig {
            kind: "mlp".to_string(),
            ..ArchConfig::default()
        }
    }

    pub fn build(&self) -> CliResult<ArchSpec> {
        match self.kind.as_str() {
            "dictionary" => {
                if self.hidden.is_some() || self.features.is_some() || self.activation.is_some() {
                    return Err(CliError::config(
                        "hidden/features/activation only apply to the mlp architecture",
                    ));
                }
                Ok(ArchSpec::Dictionary {
                    init_scale: self.init_scale.unwrap_or(0.5),
                })
            }
            "mlp" => {
                if self.init_scale.is_some() {
                    return Err(CliError::config("init_scale only applies to dictionary"));
                }
                Ok(ArchSpec::Mlp {
                    hidden: self.hidden.clone().unwrap_or_else(|| vec![8]),
                    features: self.features.unwrap_or(4),
                    activation: parse_activation(self.activation.as_deref().unwrap_or("tanh"))?,
                })
            }
            other => Err(CliError::config(format!("unknown architecture '{other}'"))),
        }
    }
}

pub fn parse_loss(s: &str) -> CliResult<Loss> {
    match s {
        "logistic" => Ok(Loss::Logistic),
        "squared" => Ok(Loss::Squared),
        other => Err(CliError::config(format!("unknown loss '{other}'"))),
    }
}

/// Training knobs; defaults are the tuned counterexample settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainDoc {
    pub steps: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub l1_gate: f64,
    pub l2: f64,
    pub loss: String,
    pub seed: u64,
}

impl Default for TrainDoc {
    fn default() -> Self {
        let cfg = TrainConfig::default();
        TrainDoc {
            steps: cfg.steps,
            batch_size: cfg.batch_size,
            step_size: cfg.step_size,
            l1_gate: cfg.l1_gate,
            l2: cfg.l2,
            loss: "logistic".to_string(),
            seed: cfg.seed,
        }
    }
}

impl TrainDoc {
    pub fn build(&self) -> CliResult<TrainConfig> {
        if !(self.step_size >= 0.0) {
            return Err(CliError::config("step_size must be nonnegative"));
        }
        if !(self.l1_gate >= 0.0) || !(self.l2 >= 0.0) {
            return Err(CliError::config("regularizers must be nonnegative"));
        }
        if self.batch_size == 0 {
            return Err(CliError::config("batch_size must be positive"));
        }
        Ok(TrainConfig {
            steps: self.steps,
            batch_size: self.batch_size,
            step_size: self.step_size,
            l1_gate: self.l1_gate,
            l2: self.l2,
            loss: parse_loss(&self.loss)?,
            seed: self.seed,
        })
    }
}

/// Config for the counterexample gap experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    pub schema_version: u32,
    pub mixture: MixtureConfig,
    pub arch: ArchConfig,
    pub train: TrainDoc,
    /// Seeds swept for the gate-selection statistic (train.seed, +1, ...).
    pub selection_seeds: usize,
    /// Sampled mixture weights for the oracle-risk sweep table.
    pub lambda_sweep_trials: usize,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            schema_version: SCHEMA_VERSION,
            mixture: MixtureConfig::default(),
            arch: ArchConfig::default(),
            train: TrainDoc::default(),
            selection_seeds: 20,
            lambda_sweep_trials: 64,
        }
    }
}

impl CounterexampleConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_version(self.schema_version)?;
        if self.selection_seeds == 0 {
            return Err(CliError::config("selection_seeds must be positive"));
        }
        self.mixture.build()?;
        self.arch.build()?;
        self.train.build()?;
        Ok(())
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.train.seed = seed;
    }
}

/// Which feature functional the covariance analysis studies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub coordinate: Option<usize>,
    pub weights: Option<Vec<f64>>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            coordinate: Some(0),
            weights: None,
        }
    }
}

impl FeatureConfig {
    pub fn build(&self, dim: usize) -> CliResult<satlab_core::oracle::LinearFunctional> {
        match (&self.coordinate, &self.weights) {
            (Some(_), Some(_)) => Err(CliError::config(
                "feature sets both coordinate and weights",
            )),
            (None, Some(w)) => Ok(satlab_core::oracle::LinearFunctional::new(w.clone())),
            (Some(c), None) => {
                if *c >= dim {
                    return Err(CliError::config(format!(
                        "feature coordinate {c} out of range for dim {dim}"
                    )));
                }
                Ok(satlab_core::oracle::LinearFunctional::coordinate(*c, dim))
            }
            (None, None) => Ok(satlab_core::oracle::LinearFunctional::coordinate(0, dim)),
        }
    }
}

/// Config for the covariance proposition experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CovarianceConfig {
    pub schema_version: u32,
    pub mixture: MixtureConfig,
    pub feature: FeatureConfig,
    pub trials: usize,
    pub seed: u64,
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        CovarianceConfig {
            schema_version: SCHEMA_VERSION,
            mixture: MixtureConfig::default(),
            feature: FeatureConfig::default(),
            trials: 10_000,
            seed: 0,
        }
    }
}

impl CovarianceConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_version(self.schema_version)?;
        if self.trials == 0 {
            return Err(CliError::config("trials must be positive"));
        }
        let mixture = self.mixture.build()?;
        self.feature.build(mixture.dim())?;
        Ok(())
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

/// Config for the linearized fine-tuning experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NtkConfig {
    pub schema_version: u32,
    pub mixture: MixtureConfig,
    pub arch: ArchConfig,
    pub train: TrainDoc,
    /// Largest perturbation norm in the halving schedule.
    pub delta_norm: f64,
    pub halvings: usize,
    pub direction_seed: u64,
}

impl Default for NtkConfig {
    fn default() -> Self {
        NtkConfig {
            schema_version: SCHEMA_VERSION,
            mixture: MixtureConfig::default(),
            arch: ArchConfig::mlp_default(),
            train: TrainDoc {
                steps: 300,
                ..TrainDoc::default()
            },
            delta_norm: 1e-2,
            halvings: 3,
            direction_seed: 11,
        }
    }
}

impl NtkConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_version(self.schema_version)?;
        if !(self.delta_norm > 0.0) {
            return Err(CliError::config("delta_norm must be positive"));
        }
        if self.halvings == 0 {
            return Err(CliError::config("halvings must be positive"));
        }
        self.mixture.build()?;
        self.arch.build()?;
        self.train.build()?;
        Ok(())
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.train.seed = seed;
    }
}

/// Ensemble optimizer knobs; defaults are tuned for the eight-feature
/// paired family, where per-pair signals are a quarter of the
/// two-dimensional case.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemberOptDoc {
    pub batch_size: usize,
    pub step_size: f64,
    pub l1_gate: f64,
    pub l2: f64,
    pub loss: String,
}

impl Default for MemberOptDoc {
    fn default() -> Self {
        MemberOptDoc {
            batch_size: 64,
            step_size: 0.05,
            l1_gate: 0.0025,
            l2: 0.00125,
            loss: "logistic".to_string(),
        }
    }
}

impl MemberOptDoc {
    pub fn build(&self) -> CliResult<satlab_core::ensembles::MemberOpt> {
        Ok(satlab_core::ensembles::MemberOpt {
            batch_size: self.batch_size,
            step_size: self.step_size,
            l1_gate: self.l1_gate,
            l2: self.l2,
            loss: parse_loss(&self.loss)?,
        })
    }
}

/// Config for the fixed-compute concatenation experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimecatConfig {
    pub schema_version: u32,
    pub k: usize,
    pub pair_local_weights: [f64; 4],
    pub total_budget: usize,
    pub baseline_bonus: f64,
    pub splits: Vec<usize>,
    pub arch: ArchConfig,
    pub opt: MemberOptDoc,
    pub base_seed: u64,
    pub num_seeds: usize,
}

impl Default for TimecatConfig {
    fn default() -> Self {
        TimecatConfig {
            schema_version: SCHEMA_VERSION,
            k: 8,
            pair_local_weights: CANONICAL_WEIGHTS,
            total_budget: 22_500,
            baseline_bonus: 1.125,
            splits: vec![1, 2, 4],
            arch: ArchConfig::default(),
            opt: MemberOptDoc::default(),
            base_seed: 0,
            num_seeds: 10,
        }
    }
}

impl TimecatConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_version(self.schema_version)?;
        if self.num_seeds == 0 {
            return Err(CliError::config("num_seeds must be positive"));
        }
        paired_family_mixture(self.k, &self.pair_local_weights).map_err(CliError::from)?;
        self.arch.build()?;
        self.opt.build()?;
        let plan = self.plan(self.base_seed)?;
        plan.validate().map_err(CliError::from)
    }

    pub fn plan(&self, base_seed: u64) -> CliResult<satlab_core::ensembles::EnsemblePlan> {
        let mixture = paired_family_mixture(self.k, &self.pair_local_weights)?;
        let targets = mixture.components().to_vec();
        Ok(satlab_core::ensembles::EnsemblePlan {
            total_budget: self.total_budget,
            baseline_bonus: self.baseline_bonus,
            splits: self.splits.clone(),
            member_arch: self.arch.build()?,
            base_seed,
            mixture,
            targets,
            opt: self.opt.build()?,
        })
    }

    pub fn base_seeds(&self) -> Vec<u64> {
        (0..self.num_seeds as u64).map(|i| self.base_seed + i).collect()
    }

    pub fn override_seed(&mut self, seed: u64) {
        self.base_seed = seed;
    }
}

/// Parse a strict JSON config of type T.
pub fn parse_config<T: for<'de> Deserialize<'de>>(text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_fills_defaults() {
        let cfg: CounterexampleConfig = parse_config("{}").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.selection_seeds, 20);
        let spec = cfg.mixture.build().unwrap();
        assert_eq!(spec.weights(), CANONICAL_WEIGHTS);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse_config::<CounterexampleConfig>(r#"{"bogus": 1}"#).is_err());
        assert!(parse_config::<TimecatConfig>(r#"{"splits": [1], "junk": {}}"#).is_err());
    }

    #[test]
    fn bad_schema_version_fails_validation() {
        let cfg: CovarianceConfig = parse_config(r#"{"schema_version": 9}"#).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn effective_config_revalidates() {
        let cfg = TimecatConfig::default();
        cfg.validate().unwrap();
        let echoed = serde_json::to_string_pretty(&cfg).unwrap();
        let back: TimecatConfig = parse_config(&echoed).unwrap();
        back.validate().unwrap();
    }

    #[test]
    fn paired_family_generator_builds() {
        let cfg: CounterexampleConfig =
            parse_config(r#"{"mixture": {"generator": "paired_family", "k": 4}}"#).unwrap();
        let spec = cfg.mixture.build().unwrap();
        assert_eq!(spec.components().len(), 8);
        assert_eq!(spec.dim(), 4);
    }

    #[test]
    fn inline_mixture_builds() {
        let text = r#"{"mixture": {"generator": null, "inline": {
            "version": 1, "dim": 1,
            "components": [
              {"points": [{"x": [0.0], "y": -1, "mass": 1.0}]},
              {"points": [{"x": [1.0], "y": 1, "mass": 1.0}]}
            ],
            "weights": [0.5, 0.5]}}}"#;
        let cfg: CovarianceConfig = parse_config(text).unwrap();
        let spec = cfg.mixture.build().unwrap();
        assert_eq!(spec.components().len(), 2);
    }
}
