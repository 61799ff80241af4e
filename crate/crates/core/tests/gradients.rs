//! Central-finite-difference checks for every architecture's analytic
//! gradients, and the NTK jacobian contract.

use satlab_core::models::{
    Activation, ArchSpec, ComposedModel, ConcatExtractor, DictionaryExtractor, Extractor,
    LinearHead, Loss,
};
use satlab_core::rng::SplitMix64;
use satlab_core::transfer::ntk_features;

const FD_STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-6;

fn finite_diff_loss_grad(model: &ComposedModel, x: &[f64], y: f64, loss: Loss) -> Vec<f64> {
    let params = model.flatten_params();
    (0..params.len())
        .map(|j| {
            let mut plus = params.clone();
            plus[j] += FD_STEP;
            let mut minus = params.clone();
            minus[j] -= FD_STEP;
            let lp = loss.value(model.unflatten_params(&plus).unwrap().score(x).unwrap(), y);
            let lm = loss.value(model.unflatten_params(&minus).unwrap().score(x).unwrap(), y);
            (lp - lm) / (2.0 * FD_STEP)
        })
        .collect()
}

fn assert_matches_fd(model: &ComposedModel, rng: &mut SplitMix64, points: usize, loss: Loss) {
    let dim = model.input_dim();
    for _ in 0..points {
        let x: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.5, 1.5)).collect();
        let y = rng.sign();
        let analytic = model.grad_params(&x, y, loss).unwrap();
        let numeric = finite_diff_loss_grad(model, &x, y, loss);
        for (j, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
            let scale = a.abs().max(n.abs()).max(1.0);
            assert!(
                (a - n).abs() / scale <= REL_TOL,
                "param {j}: analytic {a} vs fd {n}"
            );
        }
    }
}

fn random_model(arch: &ArchSpec, input_dim: usize, seed: u64) -> ComposedModel {
    let base = arch.instantiate(input_dim, seed).unwrap();
    // spread the parameters away from the structured init
    let mut rng = SplitMix64::new(seed ^ 0xABCD);
    let params: Vec<f64> = base
        .flatten_params()
        .iter()
        .map(|_| rng.uniform(-1.0, 1.0))
        .collect();
    base.unflatten_params(&params).unwrap()
}

#[test]
fn dictionary_gradients_match_finite_differences() {
    let mut rng = SplitMix64::new(41);
    for seed in 0..5 {
        let model = random_model(&ArchSpec::Dictionary { init_scale: 0.5 }, 3, seed);
        assert_matches_fd(&model, &mut rng, 10, Loss::Logistic);
        assert_matches_fd(&model, &mut rng, 10, Loss::Squared);
    }
}

#[test]
fn tanh_mlp_gradients_match_finite_differences() {
    let arch = ArchSpec::Mlp {
        hidden: vec![8],
        features: 4,
        activation: Activation::Tanh,
    };
    let mut rng = SplitMix64::new(42);
    for seed in 0..5 {
        let model = random_model(&arch, 2, seed);
        assert_matches_fd(&model, &mut rng, 10, Loss::Logistic);
    }
}

#[test]
fn deep_tanh_mlp_gradients_match_finite_differences() {
    let arch = ArchSpec::Mlp {
        hidden: vec![6, 5],
        features: 3,
        activation: Activation::Tanh,
    };
    let mut rng = SplitMix64::new(43);
    for seed in 0..5 {
        let model = random_model(&arch, 4, seed);
        assert_matches_fd(&model, &mut rng, 10, Loss::Squared);
    }
}

#[test]
fn relu_mlp_gradients_match_finite_differences() {
    // fixed seeds keep every sampled pre-activation away from the kink
    let arch = ArchSpec::Mlp {
        hidden: vec![7],
        features: 3,
        activation: Activation::Relu,
    };
    let mut rng = SplitMix64::new(44);
    for seed in 0..5 {
        let model = random_model(&arch, 3, seed);
        assert_matches_fd(&model, &mut rng, 10, Loss::Logistic);
    }
}

#[test]
fn concat_gradients_match_finite_differences() {
    let mut rng = SplitMix64::new(45);
    for seed in 0..5 {
        let dict = random_model(&ArchSpec::Dictionary { init_scale: 0.5 }, 2, seed);
        let mlp = random_model(
            &ArchSpec::Mlp {
                hidden: vec![5],
                features: 3,
                activation: Activation::Tanh,
            },
            2,
            seed + 100,
        );
        let cat = Extractor::Concat(
            ConcatExtractor::new(vec![dict.extractor, mlp.extractor]).unwrap(),
        );
        let out = cat.output_dim();
        let gamma: Vec<f64> = (0..out).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let model = ComposedModel::new(cat, LinearHead::new(gamma, rng.uniform(-0.5, 0.5))).unwrap();
        assert_matches_fd(&model, &mut rng, 10, Loss::Logistic);
    }
}

#[test]
fn ntk_jacobian_matches_score_finite_differences() {
    let arch = ArchSpec::Mlp {
        hidden: vec![8],
        features: 4,
        activation: Activation::Tanh,
    };
    let model = random_model(&arch, 2, 9);
    let ntk = ntk_features(&model).unwrap();
    assert_eq!(ntk.param_count(), model.param_count());
    let params = model.flatten_params();
    let mut rng = SplitMix64::new(46);
    for _ in 0..20 {
        let x = vec![rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)];
        let jac = ntk.jacobian(&x).unwrap();
        assert_eq!(jac.len(), params.len());
        for j in 0..params.len() {
            let mut plus = params.clone();
            plus[j] += FD_STEP;
            let mut minus = params.clone();
            minus[j] -= FD_STEP;
            let fd = (model.unflatten_params(&plus).unwrap().score(&x).unwrap()
                - model.unflatten_params(&minus).unwrap().score(&x).unwrap())
                / (2.0 * FD_STEP);
            let scale = jac[j].abs().max(fd.abs()).max(1.0);
            assert!((jac[j] - fd).abs() / scale <= REL_TOL, "coord {j}");
        }
    }
}

#[test]
fn gate_dictionary_identity_jacobian() {
    // gates 1 with zero head: jacobian's head block reproduces the input
    let model = ComposedModel::new(
        Extractor::Dictionary(DictionaryExtractor::new(vec![1.0, 1.0])),
        LinearHead::new(vec![0.0, 0.0], 0.0),
    )
    .unwrap();
    let ntk = ntk_features(&model).unwrap();
    let j = ntk.jacobian(&[0.4, -0.9]).unwrap();
    // layout: [gate grads (= gamma * x = 0), feature values, bias]
    assert_eq!(j, vec![0.0, 0.0, 0.4, -0.9, 1.0]);
}
