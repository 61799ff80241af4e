//! Seeded deterministic training: direct training and mixture pretraining by
//! (proximal) gradient descent, plus exact risk evaluation on discrete
//! distributions.
//!
//! The sparsity path is explicit: `l1_gate` soft-thresholds dictionary gate
//! parameters by `step_size * l1_gate` after every step, so a gate that stops
//! pulling its weight is driven to exactly zero.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mixtures::{mix, DiscreteDistribution, MixtureSpec};
use crate::models::{ArchSpec, ComposedModel, Extractor, Loss};
use crate::rng::{derive_seed, SplitMix64};

/// Gates with magnitude above this are considered alive after training.
pub const GATE_THRESHOLD: f64 = 1e-3;

/// Supports up to this size train on the exact expected loss (weighted
/// full-batch) instead of sampled minibatches, removing sampling noise from
/// oracle comparisons.
pub const EXACT_BATCH_SUPPORT_LIMIT: usize = 64;

/// Optimization budget and regularization knobs for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub step_size: f64,
    /// Proximal L1 strength on dictionary gate parameters only.
    pub l1_gate: f64,
    /// Plain weight decay on non-gate parameters.
    pub l2: f64,
    pub loss: Loss,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Tuned for the two-feature counterexample: sparse gate selection is
    /// stable across seeds at this setting, and the small head decay keeps a
    /// losing gate from parking at a nonzero L1 equilibrium.
    fn default() -> Self {
        TrainConfig {
            steps: 3000,
            batch_size: 64,
            step_size: 0.05,
            l1_gate: 0.01,
            l2: 0.005,
            loss: Loss::Logistic,
            seed: 0,
        }
    }
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedOutcome {
    pub model: ComposedModel,
    /// Loss evaluated at the parameters before each step.
    pub loss_trace: Vec<f64>,
    /// Exact zero-one risk at the parameters before each step.
    pub risk_trace: Vec<f64>,
    /// Exact zero-one risk on the training distribution.
    pub exact_risk: f64,
    /// Dictionary gate indices with magnitude above [`GATE_THRESHOLD`];
    /// empty for extractors without gates.
    pub surviving_gates: BTreeSet<usize>,
}

/// Exact zero-one risk: mass-weighted misclassification over the support.
pub fn exact_zero_one_risk(model: &ComposedModel, dist: &DiscreteDistribution) -> Result<f64> {
    if model.input_dim() != dist.dim() {
        return Err(Error::DimMismatch {
            expected: model.input_dim(),
            got: dist.dim(),
        });
    }
    let mut risk = 0.0;
    for p in dist.points() {
        if model.predict(&p.features)? != p.label {
            risk += p.mass;
        }
    }
    Ok(risk)
}

/// Exact expected surrogate loss over the support.
pub fn exact_expected_loss(
    model: &ComposedModel,
    dist: &DiscreteDistribution,
    loss: Loss,
) -> Result<f64> {
    if model.input_dim() != dist.dim() {
        return Err(Error::DimMismatch {
            expected: model.input_dim(),
            got: dist.dim(),
        });
    }
    let mut total = 0.0;
    for p in dist.points() {
        total += p.mass * loss.value(model.score(&p.features)?, p.y());
    }
    Ok(total)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Result of a raw optimizer run over flat parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdOutcome {
    pub params: Vec<f64>,
    pub loss_trace: Vec<f64>,
}

/// Deterministic (proximal) gradient descent over a flat parameter vector.
///
/// `objective(params, step)` returns the loss and gradient for that step;
/// with minibatch objectives the step index selects the batch. Gate
/// parameters (the `gate_span` range) receive proximal soft-thresholding by
/// `step_size * l1_gate` after each step; all other parameters receive plain
/// `l2` weight decay added to the gradient.
pub fn sgd_run<F>(
    mut objective: F,
    params0: &[f64],
    gate_span: Option<(usize, usize)>,
    cfg: &TrainConfig,
) -> Result<SgdOutcome>
where
    F: FnMut(&[f64], usize) -> (f64, Vec<f64>),
{
    let mut params = params0.to_vec();
    let mut trace = Vec::with_capacity(cfg.steps);
    let in_gates = |j: usize| gate_span.is_some_and(|(lo, hi)| j >= lo && j < hi);
    for step in 0..cfg.steps {
        let (loss, mut grad) = objective(&params, step);
        if !loss.is_finite() {
            return Err(Error::NonFinite { step });
        }
        trace.push(loss);
        if cfg.l2 > 0.0 {
            for (j, g) in grad.iter_mut().enumerate() {
                if !in_gates(j) {
                    *g += cfg.l2 * params[j];
                }
            }
        }
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= cfg.step_size * g;
        }
        if cfg.l1_gate > 0.0 {
            if let Some((lo, hi)) = gate_span {
                let t = cfg.step_size * cfg.l1_gate;
                for p in params[lo..hi].iter_mut() {
                    *p = soft_threshold(*p, t);
                }
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite { step });
        }
    }
    Ok(SgdOutcome {
        params,
        loss_trace: trace,
    })
}

fn surviving_gates(model: &ComposedModel) -> BTreeSet<usize> {
    match &model.extractor {
        Extractor::Dictionary(d) => d
            .gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.abs() > GATE_THRESHOLD)
            .map(|(i, _)| i)
            .collect(),
        _ => BTreeSet::new(),
    }
}

fn train_on_distribution(
    target: &DiscreteDistribution,
    arch: &ArchSpec,
    cfg: &TrainConfig,
) -> Result<TrainedOutcome> {
    let model0 = arch.instantiate(target.dim(), derive_seed(cfg.seed, 0))?;
    if model0.input_dim() != target.dim() {
        return Err(Error::DimMismatch {
            expected: model0.input_dim(),
            got: target.dim(),
        });
    }
    let gate_span = arch.gate_span(target.dim());
    let params0 = model0.flatten_params();
    let exact = target.support_size() <= EXACT_BATCH_SUPPORT_LIMIT;
    let mut batch_rng = SplitMix64::new(derive_seed(cfg.seed, 1));
    let n_params = params0.len();
    let mut risk_trace = Vec::with_capacity(cfg.steps);

    let objective = |params: &[f64], _step: usize| {
        let model = model0.unflatten_params(params).expect("layout is stable");
        risk_trace.push(exact_zero_one_risk(&model, target).expect("dims validated"));
        let mut loss = 0.0;
        let mut grad = alloc::vec![0.0; n_params];
        if exact {
            for p in target.points() {
                let (score, g) = model
                    .score_and_param_grad(&p.features)
                    .expect("dims validated");
                let d = cfg.loss.dscore(score, p.y());
                loss += p.mass * cfg.loss.value(score, p.y());
                for (acc, gi) in grad.iter_mut().zip(&g) {
                    *acc += p.mass * d * gi;
                }
            }
        } else {
            let scale = 1.0 / cfg.batch_size as f64;
            for _ in 0..cfg.batch_size {
                let u = batch_rng.next_f64();
                let mut acc = 0.0;
                let mut chosen = target.points().last().expect("nonempty");
                for p in target.points() {
                    acc += p.mass;
                    if u < acc {
                        chosen = p;
                        break;
                    }
                }
                let (score, g) = model
                    .score_and_param_grad(&chosen.features)
                    .expect("dims validated");
                let d = cfg.loss.dscore(score, chosen.y());
                loss += scale * cfg.loss.value(score, chosen.y());
                for (a, gi) in grad.iter_mut().zip(&g) {
                    *a += scale * d * gi;
                }
            }
        }
        (loss, grad)
    };

    let outcome = sgd_run(objective, &params0, gate_span, cfg)?;
    let model = model0.unflatten_params(&outcome.params)?;
    let exact_risk = exact_zero_one_risk(&model, target)?;
    let gates = surviving_gates(&model);
    Ok(TrainedOutcome {
        model,
        loss_trace: outcome.loss_trace,
        risk_trace,
        exact_risk,
        surviving_gates: gates,
    })
}

/// Train extractor and head directly on the target distribution.
pub fn direct_train(
    target: &DiscreteDistribution,
    arch: &ArchSpec,
    cfg: &TrainConfig,
) -> Result<TrainedOutcome> {
    train_on_distribution(target, arch, cfg)
}

/// Pretrain on the merged mixture distribution.
pub fn pretrain(
    mixture: &MixtureSpec,
    arch: &ArchSpec,
    cfg: &TrainConfig,
) -> Result<TrainedOutcome> {
    let merged = mix(mixture)?;
    train_on_distribution(&merged, arch, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixtures::{canonical_mixture, counterexample_components};
    use crate::models::{Activation, DictionaryExtractor, LinearHead};
    use alloc::vec;

    fn dict_arch() -> ArchSpec {
        ArchSpec::Dictionary { init_scale: 0.5 }
    }

    fn sparse_cfg(seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn quadratic_objective_reaches_closed_form_minimum() {
        // f(p) = 0.5 (p0 - 3)^2 + 0.5 (p1 + 2)^2, minimizer (3, -2)
        let objective = |p: &[f64], _| {
            let g = vec![p[0] - 3.0, p[1] + 2.0];
            (0.5 * g[0] * g[0] + 0.5 * g[1] * g[1], g)
        };
        let cfg = TrainConfig {
            steps: 600,
            step_size: 0.1,
            l1_gate: 0.0,
            l2: 0.0,
            ..TrainConfig::default()
        };
        let out = sgd_run(objective, &[0.0, 0.0], None, &cfg).unwrap();
        let grad_norm = ((out.params[0] - 3.0).powi(2) + (out.params[1] + 2.0).powi(2)).sqrt();
        assert!(grad_norm < 1e-6, "grad_norm={grad_norm}");
    }

    #[test]
    fn zero_step_size_leaves_parameters_unchanged() {
        let objective = |p: &[f64], _| (p[0] * p[0], vec![2.0 * p[0]]);
        let cfg = TrainConfig {
            steps: 10,
            step_size: 0.0,
            ..TrainConfig::default()
        };
        let out = sgd_run(objective, &[1.5], None, &cfg).unwrap();
        assert_eq!(out.params, vec![1.5]);
    }

    #[test]
    fn identical_configs_produce_identical_traces() {
        let mixture = canonical_mixture();
        let a = pretrain(&mixture, &dict_arch(), &sparse_cfg(11)).unwrap();
        let b = pretrain(&mixture, &dict_arch(), &sparse_cfg(11)).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn zero_budget_returns_initialization() {
        let comps = counterexample_components();
        let cfg = TrainConfig {
            steps: 0,
            ..sparse_cfg(5)
        };
        let out = direct_train(&comps[0], &dict_arch(), &cfg).unwrap();
        let init = dict_arch()
            .instantiate(2, derive_seed(5, 0))
            .unwrap();
        assert_eq!(out.model, init);
        assert!(out.loss_trace.is_empty());
    }

    #[test]
    fn direct_training_separates_each_component() {
        let comps = counterexample_components();
        for (i, c) in comps.iter().enumerate() {
            let out = direct_train(c, &dict_arch(), &sparse_cfg(3)).unwrap();
            assert_eq!(out.exact_risk, 0.0, "component {i}");
        }
    }

    #[test]
    fn direct_training_on_p3_works_through_second_feature() {
        let comps = counterexample_components();
        let out = direct_train(&comps[2], &dict_arch(), &sparse_cfg(17)).unwrap();
        assert_eq!(out.exact_risk, 0.0);
        assert!(out.surviving_gates.contains(&1));
    }

    #[test]
    fn sparse_pretraining_keeps_only_the_first_gate() {
        let out = pretrain(&canonical_mixture(), &dict_arch(), &sparse_cfg(1)).unwrap();
        let expected: BTreeSet<usize> = [0].into_iter().collect();
        assert_eq!(out.surviving_gates, expected);
        // Trained risk sits at the oracle optimum: misclassify the
        // least-weighted merged point.
        assert!((out.exact_risk - 0.175).abs() <= 0.02, "risk={}", out.exact_risk);
    }

    #[test]
    fn permuted_weights_select_the_second_gate() {
        let spec = MixtureSpec::new(
            counterexample_components(),
            vec![0.2, 0.1, 0.5, 0.2],
        )
        .unwrap();
        let out = pretrain(&spec, &dict_arch(), &sparse_cfg(1)).unwrap();
        let expected: BTreeSet<usize> = [1].into_iter().collect();
        assert_eq!(out.surviving_gates, expected);
    }

    #[test]
    fn unregularized_squared_loss_keeps_both_gates() {
        let cfg = TrainConfig {
            steps: 4000,
            l1_gate: 0.0,
            l2: 0.0,
            loss: Loss::Squared,
            seed: 2,
            ..TrainConfig::default()
        };
        let out = pretrain(&canonical_mixture(), &dict_arch(), &cfg).unwrap();
        assert_eq!(out.surviving_gates.len(), 2);
    }

    #[test]
    fn full_batch_loss_trace_is_non_increasing_without_l1() {
        let cfg = TrainConfig {
            steps: 800,
            l1_gate: 0.0,
            l2: 0.0,
            seed: 9,
            ..TrainConfig::default()
        };
        let out = pretrain(&canonical_mixture(), &dict_arch(), &cfg).unwrap();
        for w in out.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn non_finite_loss_reports_the_step() {
        let objective = |_: &[f64], step: usize| {
            if step == 3 {
                (f64::INFINITY, vec![0.0])
            } else {
                (1.0, vec![0.0])
            }
        };
        let cfg = TrainConfig {
            steps: 10,
            ..TrainConfig::default()
        };
        let err = sgd_run(objective, &[0.0], None, &cfg).unwrap_err();
        assert_eq!(err, crate::Error::NonFinite { step: 3 });
    }

    #[test]
    fn traces_align_with_the_step_budget() {
        let out = pretrain(&canonical_mixture(), &dict_arch(), &sparse_cfg(8)).unwrap();
        assert_eq!(out.loss_trace.len(), 3000);
        assert_eq!(out.risk_trace.len(), 3000);
        assert!(out.risk_trace.iter().all(|r| (0.0..=1.0).contains(r)));
        // the final recorded risk is one step behind the outcome's risk,
        // which has already converged by then
        assert_eq!(out.risk_trace[out.risk_trace.len() - 1], out.exact_risk);
    }

    #[test]
    fn constant_negative_predictor_risk_on_p1() {
        let comps = counterexample_components();
        let model = ComposedModel::new(
            crate::models::Extractor::Dictionary(DictionaryExtractor::new(vec![1.0, 1.0])),
            LinearHead::new(vec![0.0, 0.0], 0.0),
        )
        .unwrap();
        // sign(0) = -1 everywhere: misclassifies exactly the heavy positive point.
        assert_eq!(exact_zero_one_risk(&model, &comps[0]).unwrap(), 0.5);
    }

    #[test]
    fn mlp_training_runs_and_stays_finite() {
        let arch = ArchSpec::Mlp {
            hidden: vec![8],
            features: 4,
            activation: Activation::Tanh,
        };
        let cfg = TrainConfig {
            steps: 400,
            step_size: 0.05,
            seed: 4,
            ..TrainConfig::default()
        };
        let out = pretrain(&canonical_mixture(), &arch, &cfg).unwrap();
        assert!(out.surviving_gates.is_empty());
        assert!(out.loss_trace.iter().all(|l| l.is_finite()));
        assert!(out.exact_risk <= 0.5);
    }
}
