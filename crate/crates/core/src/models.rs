//! Feature-extractor-plus-linear-head models: a gated dictionary extractor,
//! a small multilayer perceptron, extractor concatenation, and exact
//! parameter-space gradients.
//!
//! Flat parameter layout (stable, used by checkpoints and NTK features):
//! extractor parameters first, then head coefficients, then the head bias.
//! Within an extractor: dictionary gates in index order; MLP layers in order
//! with each layer's weight matrix row-major (output x input) followed by
//! its bias vector; concatenation members in order.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{dot, sigmoid, softplus, sqrt};
use crate::rng::{derive_seed, SplitMix64};

/// Pointwise nonlinearity for MLP layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => crate::numeric::tanh(z),
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative expressed through the activation value where possible.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Surrogate training losses. Zero-one risk is evaluation-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Logistic,
    Squared,
}

impl Loss {
    /// Pointwise loss of a score against label y in {+1, -1}.
    #[inline]
    pub fn value(self, score: f64, y: f64) -> f64 {
        match self {
            Loss::Logistic => softplus(-y * score),
            Loss::Squared => {
                let r = y - score;
                r * r
            }
        }
    }

    /// d(loss)/d(score).
    #[inline]
    pub fn dscore(self, score: f64, y: f64) -> f64 {
        match self {
            Loss::Logistic => -y * sigmoid(-y * score),
            Loss::Squared => 2.0 * (score - y),
        }
    }
}

/// Gated dictionary extractor: the input coordinates are the candidate
/// features and each gate scales one of them, `output_j = gate_j * x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryExtractor {
    pub gates: Vec<f64>,
}

impl DictionaryExtractor {
    pub fn new(gates: Vec<f64>) -> Self {
        DictionaryExtractor { gates }
    }

    #[inline]
    pub fn dictionary_dim(&self) -> usize {
        self.gates.len()
    }
}

/// Dense feed-forward extractor. `layer_widths` excludes the input width;
/// the final width is the representation dimension. The activation applies
/// to every layer output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpExtractor {
    pub input_dim: usize,
    pub layer_widths: Vec<usize>,
    /// Row-major (out x in) weight matrix per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
}

impl MlpExtractor {
    /// Scaled-uniform initialization with variance 2/fan_in per weight
    /// (uniform on +-sqrt(6/fan_in)); biases start at zero.
    pub fn init(
        input_dim: usize,
        layer_widths: Vec<usize>,
        activation: Activation,
        seed: u64,
    ) -> Self {
        assert!(!layer_widths.is_empty(), "MLP needs at least one layer");
        let mut rng = SplitMix64::new(seed);
        let mut weights = Vec::with_capacity(layer_widths.len());
        let mut biases = Vec::with_capacity(layer_widths.len());
        let mut fan_in = input_dim;
        for &out in &layer_widths {
            let bound = sqrt(6.0 / fan_in as f64);
            weights.push((0..out * fan_in).map(|_| rng.uniform(-bound, bound)).collect());
            biases.push(vec![0.0; out]);
            fan_in = out;
        }
        MlpExtractor {
            input_dim,
            layer_widths,
            weights,
            biases,
            activation,
        }
    }

    fn output_dim(&self) -> usize {
        *self.layer_widths.last().expect("nonempty layers")
    }

    /// Forward pass keeping pre-activations and activations per layer.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut zs = Vec::with_capacity(self.layer_widths.len());
        let mut activations = Vec::with_capacity(self.layer_widths.len() + 1);
        activations.push(x.to_vec());
        let mut a = x.to_vec();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            let fan_in = a.len();
            let out = b.len();
            let mut z = vec![0.0; out];
            for i in 0..out {
                z[i] = b[i] + dot(&w[i * fan_in..(i + 1) * fan_in], &a);
            }
            let act: Vec<f64> = z.iter().map(|&v| self.activation.apply(v)).collect();
            zs.push(z);
            a = act.clone();
            activations.push(act);
        }
        (zs, activations)
    }
}

/// Ordered concatenation of feature extractors sharing an input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatExtractor {
    pub members: Vec<Extractor>,
}

impl ConcatExtractor {
    pub fn new(members: Vec<Extractor>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidDistribution("concat needs members"));
        }
        let d = members[0].input_dim();
        for m in &members {
            if m.input_dim() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: m.input_dim(),
                });
            }
        }
        Ok(ConcatExtractor { members })
    }
}

/// Any of the supported feature extractors.
#[derive(Debug, Clone, PartialEq)]
pub enum Extractor {
    /// Parameter-free pass-through; composing it with a head gives a model
    /// that is exactly linear in its parameters.
    Identity(usize),
    Dictionary(DictionaryExtractor),
    Mlp(MlpExtractor),
    Concat(ConcatExtractor),
}

impl Extractor {
    pub fn input_dim(&self) -> usize {
        match self {
            Extractor::Identity(d) => *d,
            Extractor::Dictionary(d) => d.gates.len(),
            Extractor::Mlp(m) => m.input_dim,
            Extractor::Concat(c) => c.members[0].input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Extractor::Identity(d) => *d,
            Extractor::Dictionary(d) => d.gates.len(),
            Extractor::Mlp(m) => m.output_dim(),
            Extractor::Concat(c) => c.members.iter().map(|m| m.output_dim()).sum(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Extractor::Identity(_) => 0,
            Extractor::Dictionary(d) => d.gates.len(),
            Extractor::Mlp(m) => m
                .weights
                .iter()
                .zip(&m.biases)
                .map(|(w, b)| w.len() + b.len())
                .sum(),
            Extractor::Concat(c) => c.members.iter().map(|m| m.param_count()).sum(),
        }
    }

    /// Deterministic forward map.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.features_unchecked(x))
    }

    fn features_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Extractor::Identity(_) => x.to_vec(),
            Extractor::Dictionary(d) => d.gates.iter().zip(x).map(|(g, v)| g * v).collect(),
            Extractor::Mlp(m) => {
                let (_, mut activations) = m.forward_trace(x);
                activations.pop().expect("at least one layer")
            }
            Extractor::Concat(c) => {
                let mut out = Vec::with_capacity(self.output_dim());
                for m in &c.members {
                    out.extend(m.features_unchecked(x));
                }
                out
            }
        }
    }

    fn write_params(&self, out: &mut Vec<f64>) {
        match self {
            Extractor::Identity(_) => {}
            Extractor::Dictionary(d) => out.extend_from_slice(&d.gates),
            Extractor::Mlp(m) => {
                for (w, b) in m.weights.iter().zip(&m.biases) {
                    out.extend_from_slice(w);
                    out.extend_from_slice(b);
                }
            }
            Extractor::Concat(c) => {
                for m in &c.members {
                    m.write_params(out);
                }
            }
        }
    }

    fn read_params(&mut self, v: &[f64], offset: &mut usize) {
        match self {
            Extractor::Identity(_) => {}
            Extractor::Dictionary(d) => {
                let n = d.gates.len();
                d.gates.copy_from_slice(&v[*offset..*offset + n]);
                *offset += n;
            }
            Extractor::Mlp(m) => {
                for (w, b) in m.weights.iter_mut().zip(m.biases.iter_mut()) {
                    let (nw, nb) = (w.len(), b.len());
                    w.copy_from_slice(&v[*offset..*offset + nw]);
                    *offset += nw;
                    b.copy_from_slice(&v[*offset..*offset + nb]);
                    *offset += nb;
                }
            }
            Extractor::Concat(c) => {
                for m in c.members.iter_mut() {
                    m.read_params(v, offset);
                }
            }
        }
    }

    /// Backward pass: given d(score)/d(features), append d(score)/d(param)
    /// for every extractor parameter in layout order.
    fn backward(&self, x: &[f64], dfeatures: &[f64], out: &mut Vec<f64>) {
        match self {
            Extractor::Identity(_) => {}
            Extractor::Dictionary(_) => {
                // feature_j = gate_j * x_j, so d(score)/d(gate_j) = df_j * x_j
                out.extend(dfeatures.iter().zip(x).map(|(df, v)| df * v));
            }
            Extractor::Mlp(m) => {
                let (zs, activations) = m.forward_trace(x);
                let layers = m.layer_widths.len();
                // delta over pre-activations, starting at the top layer
                let mut delta: Vec<f64> = zs[layers - 1]
                    .iter()
                    .zip(&activations[layers])
                    .zip(dfeatures)
                    .map(|((&z, &a), &df)| df * m.activation.derivative(z, a))
                    .collect();
                let mut layer_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(layers);
                for l in (0..layers).rev() {
                    let input = &activations[l];
                    let fan_in = input.len();
                    let mut gw = vec![0.0; delta.len() * fan_in];
                    for i in 0..delta.len() {
                        for j in 0..fan_in {
                            gw[i * fan_in + j] = delta[i] * input[j];
                        }
                    }
                    let gb = delta.clone();
                    if l > 0 {
                        let w = &m.weights[l];
                        let mut prev = vec![0.0; fan_in];
                        for j in 0..fan_in {
                            let mut s = 0.0;
                            for i in 0..delta.len() {
                                s += w[i * fan_in + j] * delta[i];
                            }
                            prev[j] = s * m.activation.derivative(zs[l - 1][j], activations[l][j]);
                        }
                        delta = prev;
                    }
                    layer_grads.push((gw, gb));
                }
                for (gw, gb) in layer_grads.into_iter().rev() {
                    out.extend(gw);
                    out.extend(gb);
                }
            }
            Extractor::Concat(c) => {
                let mut start = 0;
                for m in &c.members {
                    let d = m.output_dim();
                    m.backward(x, &dfeatures[start..start + d], out);
                    start += d;
                }
            }
        }
    }
}

/// Linear classification head with an explicit bias. The bias is an addition
/// to the plain inner-product head: the optimal affine classifiers on the
/// counterexample have thresholds away from zero and are unrepresentable
/// without it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub gamma: Vec<f64>,
    pub bias: f64,
}

impl LinearHead {
    pub fn new(gamma: Vec<f64>, bias: f64) -> Self {
        LinearHead { gamma, bias }
    }

    pub fn zeros(n: usize) -> Self {
        LinearHead {
            gamma: vec![0.0; n],
            bias: 0.0,
        }
    }
}

/// Sign convention used everywhere: `sign(0) = -1` so zero-one risk is
/// deterministic.
#[inline]
pub fn predict_sign(score: f64) -> i8 {
    if score > 0.0 {
        1
    } else {
        -1
    }
}

/// Extractor composed with a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedModel {
    pub extractor: Extractor,
    pub head: LinearHead,
}

impl ComposedModel {
    pub fn new(extractor: Extractor, head: LinearHead) -> Result<Self> {
        if head.gamma.len() != extractor.output_dim() {
            return Err(Error::LengthMismatch {
                expected: extractor.output_dim(),
                got: head.gamma.len(),
            });
        }
        Ok(ComposedModel { extractor, head })
    }

    pub fn input_dim(&self) -> usize {
        self.extractor.input_dim()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let f = self.extractor.features(x)?;
        Ok(dot(&self.head.gamma, &f) + self.head.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(predict_sign(self.score(x)?))
    }

    pub fn param_count(&self) -> usize {
        self.extractor.param_count() + self.head.gamma.len() + 1
    }

    /// Flat parameter vector: extractor, then head coefficients, then bias.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.extractor.write_params(&mut out);
        out.extend_from_slice(&self.head.gamma);
        out.push(self.head.bias);
        out
    }

    /// Rebuild a model of this architecture from a flat parameter vector.
    pub fn unflatten_params(&self, v: &[f64]) -> Result<ComposedModel> {
        if v.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                got: v.len(),
            });
        }
        let mut model = self.clone();
        let mut offset = 0;
        model.extractor.read_params(v, &mut offset);
        let n = model.head.gamma.len();
        model.head.gamma.copy_from_slice(&v[offset..offset + n]);
        model.head.bias = v[offset + n];
        Ok(model)
    }

    /// Score and its exact gradient with respect to the flat parameters.
    pub fn score_and_param_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.input_dim() {
            return Err(Error::DimMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let features = self.extractor.features_unchecked(x);
        let score = dot(&self.head.gamma, &features) + self.head.bias;
        let mut grad = Vec::with_capacity(self.param_count());
        self.extractor.backward(x, &self.head.gamma, &mut grad);
        grad.extend_from_slice(&features);
        grad.push(1.0);
        Ok((score, grad))
    }

    /// Exact gradient of the pointwise loss with respect to the flat
    /// parameter vector.
    pub fn grad_params(&self, x: &[f64], y: f64, loss: Loss) -> Result<Vec<f64>> {
        let (score, mut grad) = self.score_and_param_grad(x)?;
        let d = loss.dscore(score, y);
        for g in grad.iter_mut() {
            *g *= d;
        }
        Ok(grad)
    }
}

/// Architecture recipe used by training entry points.
#[derive(Debug, Clone, PartialEq)]
pub enum ArchSpec {
    /// Gated dictionary over the raw input coordinates. Gates initialize
    /// positive with magnitude uniform in `[0.75 * init_scale, init_scale]`;
    /// head coefficients start small (`[init_scale/16, init_scale/8]`,
    /// random sign). Decision signs are carried by the head, which has no L1
    /// trap, so a wrong-signed start flips smoothly instead of parking the
    /// gate at zero.
    Dictionary { init_scale: f64 },
    /// MLP with the given hidden widths and representation width.
    Mlp {
        hidden: Vec<usize>,
        features: usize,
        activation: Activation,
    },
}

impl ArchSpec {
    /// Instantiate a seeded model for inputs of dimension `input_dim`.
    pub fn instantiate(&self, input_dim: usize, seed: u64) -> Result<ComposedModel> {
        match self {
            ArchSpec::Dictionary { init_scale } => {
                let s = *init_scale;
                if !(s > 0.0) {
                    return Err(Error::InvalidDistribution("init_scale must be positive"));
                }
                let mut rng = SplitMix64::new(seed);
                let gates: Vec<f64> = (0..input_dim)
                    .map(|_| rng.uniform(0.75 * s, s))
                    .collect();
                let gamma: Vec<f64> = (0..input_dim)
                    .map(|_| rng.sign() * rng.uniform(s / 16.0, s / 8.0))
                    .collect();
                ComposedModel::new(
                    Extractor::Dictionary(DictionaryExtractor::new(gates)),
                    LinearHead::new(gamma, 0.0),
                )
            }
            ArchSpec::Mlp {
                hidden,
                features,
                activation,
            } => {
                let mut widths = hidden.clone();
                widths.push(*features);
                let mlp = MlpExtractor::init(input_dim, widths, *activation, derive_seed(seed, 0));
                let mut rng = SplitMix64::new(derive_seed(seed, 1));
                let bound = sqrt(6.0 / *features as f64);
                let gamma: Vec<f64> = (0..*features).map(|_| rng.uniform(-bound, bound)).collect();
                ComposedModel::new(Extractor::Mlp(mlp), LinearHead::new(gamma, 0.0))
            }
        }
    }

    /// Span of flat-parameter indices holding dictionary gates, if any.
    /// Gates sit first in the layout.
    pub fn gate_span(&self, input_dim: usize) -> Option<(usize, usize)> {
        match self {
            ArchSpec::Dictionary { .. } => Some((0, input_dim)),
            ArchSpec::Mlp { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict_model(gates: Vec<f64>, gamma: Vec<f64>, bias: f64) -> ComposedModel {
        ComposedModel::new(
            Extractor::Dictionary(DictionaryExtractor::new(gates)),
            LinearHead::new(gamma, bias),
        )
        .unwrap()
    }

    #[test]
    fn dictionary_features_gate_arithmetic() {
        let e = Extractor::Dictionary(DictionaryExtractor::new(vec![1.0, 0.0]));
        assert_eq!(e.features(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let e = Extractor::Dictionary(DictionaryExtractor::new(vec![1.0, 1.0]));
        assert_eq!(e.features(&[0.0, -1.0]).unwrap(), vec![0.0, -1.0]);
        assert!(matches!(
            e.features(&[1.0]),
            Err(Error::DimMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn concat_features_preserve_order() {
        let a = Extractor::Dictionary(DictionaryExtractor::new(vec![1.0, 0.0]));
        let b = Extractor::Dictionary(DictionaryExtractor::new(vec![1.0, 0.0]));
        let c = Extractor::Concat(ConcatExtractor::new(vec![a, b]).unwrap());
        assert_eq!(c.features(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(c.output_dim(), 4);
    }

    #[test]
    fn score_matches_hand_evaluation() {
        // gates (1,0), head (2,0) with bias -1
        let m = dict_model(vec![1.0, 0.0], vec![2.0, 0.0], -1.0);
        assert_eq!(m.score(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(m.predict(&[1.0, 0.0]).unwrap(), 1);
        assert_eq!(m.score(&[0.0, 1.0]).unwrap(), -1.0);
        assert_eq!(m.predict(&[0.0, 1.0]).unwrap(), -1);
    }

    #[test]
    fn zero_score_predicts_negative() {
        let m = dict_model(vec![1.0, 1.0], vec![0.0, 0.0], 0.0);
        assert_eq!(m.score(&[0.3, -0.7]).unwrap(), 0.0);
        assert_eq!(m.predict(&[0.3, -0.7]).unwrap(), -1);
    }

    #[test]
    fn squared_loss_gradient_on_linear_model() {
        // f(x; w) = w . x realized as gates 1 with zero-bias head acting as w.
        // With w = 0 the only nonzero gradient coordinates are the head's,
        // and d/dgamma (y - gamma.x)^2 = -2 y x at gamma = 0.
        let m = dict_model(vec![1.0, 1.0], vec![0.0, 0.0], 0.0);
        let g = m.grad_params(&[1.0, 0.0], 1.0, Loss::Squared).unwrap();
        // layout: [gate0, gate1, gamma0, gamma1, bias]
        assert_eq!(g[2], -2.0);
        assert_eq!(g[3], 0.0);
    }

    #[test]
    fn logistic_gradient_at_zero_score_is_half_score_grad() {
        let m = dict_model(vec![0.7, -0.3], vec![0.0, 0.0], 0.0);
        let x = [0.4, 1.3];
        let (score, sg) = m.score_and_param_grad(&x).unwrap();
        assert_eq!(score, 0.0);
        let g = m.grad_params(&x, 1.0, Loss::Logistic).unwrap();
        for (gi, si) in g.iter().zip(&sg) {
            assert!((gi.abs() - 0.5 * si.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn flatten_roundtrip_is_exact() {
        let m = ArchSpec::Mlp {
            hidden: vec![5],
            features: 3,
            activation: Activation::Tanh,
        }
        .instantiate(2, 99)
        .unwrap();
        let v = m.flatten_params();
        let m2 = m.unflatten_params(&v).unwrap();
        assert_eq!(m, m2);
        let mut rng = SplitMix64::new(3);
        for _ in 0..100 {
            let x = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
            assert_eq!(m.score(&x).unwrap(), m2.score(&x).unwrap());
        }
    }

    #[test]
    fn dictionary_param_count_is_five_for_dim_two() {
        let m = dict_model(vec![1.0, 2.0], vec![3.0, 4.0], 5.0);
        assert_eq!(m.param_count(), 5);
        assert_eq!(m.flatten_params(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(
            m.unflatten_params(&[0.0; 4]),
            Err(Error::LengthMismatch { expected: 5, got: 4 })
        ));
    }

    #[test]
    fn score_is_linear_in_head() {
        let e = Extractor::Dictionary(DictionaryExtractor::new(vec![0.8, -1.2]));
        let g1 = vec![0.5, 1.5];
        let g2 = vec![-0.25, 2.0];
        let sum: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
        let x = [0.3, -0.9];
        let b = 0.7;
        let m1 = ComposedModel::new(e.clone(), LinearHead::new(g1, b)).unwrap();
        let m2 = ComposedModel::new(e.clone(), LinearHead::new(g2, b)).unwrap();
        let ms = ComposedModel::new(e, LinearHead::new(sum, b)).unwrap();
        let (s1, s2, ss) = (
            m1.score(&x).unwrap(),
            m2.score(&x).unwrap(),
            ms.score(&x).unwrap(),
        );
        assert!((ss - (s1 + s2 - b)).abs() < 1e-15);
    }

    #[test]
    fn concat_block_head_scores_like_member_alone() {
        let a = Extractor::Dictionary(DictionaryExtractor::new(vec![0.4, -0.6]));
        let b = Extractor::Dictionary(DictionaryExtractor::new(vec![1.1, 0.2]));
        let cat = Extractor::Concat(ConcatExtractor::new(vec![a, b.clone()]).unwrap());
        // head active only on member b's block
        let m_cat =
            ComposedModel::new(cat, LinearHead::new(vec![0.0, 0.0, 2.0, -1.0], 0.5)).unwrap();
        let m_b = ComposedModel::new(b, LinearHead::new(vec![2.0, -1.0], 0.5)).unwrap();
        let x = [0.3, 0.8];
        assert_eq!(m_cat.score(&x).unwrap(), m_b.score(&x).unwrap());
    }
}
