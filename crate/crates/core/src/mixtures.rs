//! Exact finite labeled distributions, mixture composition, the two-feature
//! counterexample family and its K-feature generalization, and seeded
//! sampling.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// Absolute tolerance for probability bookkeeping on exact constructions.
pub const MASS_TOL: f64 = 1e-12;

/// Canonical skewed mixture weights: a unique least-weighted support point,
/// so the optimal mixture classifier is unique.
pub const CANONICAL_WEIGHTS: [f64; 4] = [0.5, 0.2, 0.2, 0.1];

/// One support point: feature coordinates, a binary label, and a point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub features: Vec<f64>,
    /// +1 or -1.
    pub label: i8,
    pub mass: f64,
}

impl LabeledPoint {
    pub fn new(features: Vec<f64>, label: i8, mass: f64) -> Self {
        LabeledPoint {
            features,
            label,
            mass,
        }
    }

    /// Label as a float, for loss arithmetic.
    #[inline]
    pub fn y(&self) -> f64 {
        self.label as f64
    }
}

/// Canonicalize -0.0 to 0.0 so that bitwise coordinate comparison treats
/// them as the same support point.
fn canon(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn same_coords(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// A finitely supported labeled distribution with exact point masses.
///
/// Invariants enforced at construction: masses positive and summing to one
/// (within [`MASS_TOL`]), labels in {+1, -1}, all points of dimension `dim`,
/// and no two points sharing identical feature coordinates (same-label
/// coincidences are merged by summing masses, conflicting labels are an
/// error).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    points: Vec<LabeledPoint>,
    dim: usize,
}

impl DiscreteDistribution {
    pub fn new(dim: usize, raw: Vec<LabeledPoint>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidDistribution("empty support"));
        }
        let mut points: Vec<LabeledPoint> = Vec::with_capacity(raw.len());
        for mut p in raw {
            if p.features.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: p.features.len(),
                });
            }
            if p.label != 1 && p.label != -1 {
                return Err(Error::InvalidDistribution("label must be +1 or -1"));
            }
            if !(p.mass > 0.0) || !p.mass.is_finite() {
                return Err(Error::InvalidDistribution("mass must be positive"));
            }
            for x in p.features.iter_mut() {
                if !x.is_finite() {
                    return Err(Error::InvalidDistribution("non-finite coordinate"));
                }
                *x = canon(*x);
            }
            match points
                .iter_mut()
                .enumerate()
                .find(|(_, q)| same_coords(&q.features, &p.features))
            {
                Some((i, q)) => {
                    if q.label != p.label {
                        return Err(Error::LabelConflict { point_index: i });
                    }
                    q.mass += p.mass;
                }
                None => points.push(p),
            }
        }
        let total: f64 = points.iter().map(|p| p.mass).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution("masses must sum to 1"));
        }
        Ok(DiscreteDistribution { points, dim })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    #[inline]
    pub fn support_size(&self) -> usize {
        self.points.len()
    }

    /// Mass carried by coordinates `x`, or zero when `x` is off-support.
    pub fn mass_at(&self, x: &[f64]) -> f64 {
        let cx: Vec<f64> = x.iter().map(|v| canon(*v)).collect();
        self.points
            .iter()
            .find(|p| same_coords(&p.features, &cx))
            .map(|p| p.mass)
            .unwrap_or(0.0)
    }

    /// `n` i.i.d. draws using the documented SplitMix64 stream. All examples
    /// carry `component_id = 0`.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        assert!(n >= 1, "sample size must be at least 1");
        let mut rng = SplitMix64::new(derive_seed(seed, 0));
        let examples = (0..n)
            .map(|_| {
                let p = draw_point(&self.points, &mut rng);
                Example {
                    features: p.features.clone(),
                    label: p.label,
                    component_id: 0,
                }
            })
            .collect();
        Dataset { examples, seed }
    }
}

/// Cumulative-mass inversion of a single uniform draw.
fn draw_point<'a>(points: &'a [LabeledPoint], rng: &mut SplitMix64) -> &'a LabeledPoint {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for p in points {
        acc += p.mass;
        if u < acc {
            return p;
        }
    }
    points.last().expect("nonempty support")
}

fn draw_index(weights: &[f64], rng: &mut SplitMix64) -> usize {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Component distributions plus mixture weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    components: Vec<DiscreteDistribution>,
    weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(components: Vec<DiscreteDistribution>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDistribution("mixture needs components"));
        }
        if components.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: components.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidDistribution("mixture weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution("mixture weights must sum to 1"));
        }
        let dim = components[0].dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                got: components.iter().map(|c| c.dim()).find(|d| *d != dim).unwrap(),
            });
        }
        Ok(MixtureSpec {
            components,
            weights,
        })
    }

    #[inline]
    pub fn components(&self) -> &[DiscreteDistribution] {
        &self.components
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// `n` i.i.d. draws: component by weight, then point within component.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        assert!(n >= 1, "sample size must be at least 1");
        let mut rng = SplitMix64::new(derive_seed(seed, 0));
        let examples = (0..n)
            .map(|_| {
                let j = draw_index(&self.weights, &mut rng);
                let p = draw_point(self.components[j].points(), &mut rng);
                Example {
                    features: p.features.clone(),
                    label: p.label,
                    component_id: j,
                }
            })
            .collect();
        Dataset { examples, seed }
    }
}

/// A finite sample of labeled examples tagged with their source component.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: i8,
    pub component_id: usize,
}

/// Merge the weighted components into a single distribution.
///
/// The support is the union of component supports; coinciding feature
/// coordinates are merged by summing weighted masses, in order of first
/// occurrence. A point that appears with conflicting labels across
/// components is an error.
pub fn mix(spec: &MixtureSpec) -> Result<DiscreteDistribution> {
    let dim = spec.dim();
    let mut merged: Vec<LabeledPoint> = Vec::new();
    for (component, &w) in spec.components().iter().zip(spec.weights()) {
        for p in component.points() {
            match merged
                .iter_mut()
                .enumerate()
                .find(|(_, q)| same_coords(&q.features, &p.features))
            {
                Some((i, q)) => {
                    if q.label != p.label {
                        return Err(Error::LabelConflict { point_index: i });
                    }
                    q.mass += w * p.mass;
                }
                None => merged.push(LabeledPoint::new(p.features.clone(), p.label, w * p.mass)),
            }
        }
    }
    // Renormalize away the accumulated rounding from the weighted sums.
    let total: f64 = merged.iter().map(|p| p.mass).sum();
    if (total - 1.0).abs() > MASS_TOL {
        for p in merged.iter_mut() {
            p.mass /= total;
        }
    }
    DiscreteDistribution::new(dim, merged)
}

fn point2(x1: f64, x2: f64, label: i8, mass: f64) -> LabeledPoint {
    LabeledPoint::new(vec![x1, x2], label, mass)
}

/// The four two-dimensional component distributions of the counterexample.
///
/// Components 1 and 2 put mass 1/2 on a positive point at (+-1, 0); components
/// 3 and 4 put mass 1/2 on a negative point at (0, +-1); the remaining mass
/// 1/4 + 1/4 sits on the opposite axis.
pub fn counterexample_components() -> Vec<DiscreteDistribution> {
    let p1 = DiscreteDistribution::new(
        2,
        vec![
            point2(1.0, 0.0, 1, 0.5),
            point2(0.0, 1.0, -1, 0.25),
            point2(0.0, -1.0, -1, 0.25),
        ],
    )
    .expect("static construction");
    let p2 = DiscreteDistribution::new(
        2,
        vec![
            point2(-1.0, 0.0, 1, 0.5),
            point2(0.0, 1.0, -1, 0.25),
            point2(0.0, -1.0, -1, 0.25),
        ],
    )
    .expect("static construction");
    let p3 = DiscreteDistribution::new(
        2,
        vec![
            point2(0.0, 1.0, -1, 0.5),
            point2(1.0, 0.0, 1, 0.25),
            point2(-1.0, 0.0, 1, 0.25),
        ],
    )
    .expect("static construction");
    let p4 = DiscreteDistribution::new(
        2,
        vec![
            point2(0.0, -1.0, -1, 0.5),
            point2(1.0, 0.0, 1, 0.25),
            point2(-1.0, 0.0, 1, 0.25),
        ],
    )
    .expect("static construction");
    vec![p1, p2, p3, p4]
}

/// The canonical skewed mixture over the counterexample components.
pub fn canonical_mixture() -> MixtureSpec {
    MixtureSpec::new(counterexample_components(), CANONICAL_WEIGHTS.to_vec())
        .expect("static construction")
}

/// Mixture over the K-feature family with the same four local weights
/// replicated in every feature pair (scaled so pairs share mass equally).
pub fn paired_family_mixture(k: usize, pair_local: &[f64; 4]) -> Result<MixtureSpec> {
    let components = gen_counterexample_family(k)?;
    let pairs = (k / 2) as f64;
    let weights: Vec<f64> = (0..components.len())
        .map(|i| pair_local[i % 4] / pairs)
        .collect();
    MixtureSpec::new(components, weights)
}

/// K-feature generalization: for each feature pair (2m, 2m+1) in 0-based
/// coordinates, four components replicate the two-dimensional construction
/// embedded in that pair, all other coordinates zero. Returns 2K components
/// of dimension K, ordered pair by pair.
pub fn gen_counterexample_family(k: usize) -> Result<Vec<DiscreteDistribution>> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::InvalidK(k));
    }
    let base = counterexample_components();
    let mut out = Vec::with_capacity(2 * k);
    for pair in 0..(k / 2) {
        let (a, b) = (2 * pair, 2 * pair + 1);
        for component in &base {
            let points = component
                .points()
                .iter()
                .map(|p| {
                    let mut x = vec![0.0; k];
                    x[a] = p.features[0];
                    x[b] = p.features[1];
                    LabeledPoint::new(x, p.label, p.mass)
                })
                .collect();
            out.push(DiscreteDistribution::new(k, points)?);
        }
    }
    Ok(out)
}
