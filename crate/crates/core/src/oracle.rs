//! Brute-force ground truth on small supports: optimal affine classifiers,
//! optimal risk within feature subspaces, covariance and cancellation
//! analysis, and feature-recovery diagnostics.
//!
//! Every oracle answer is a concrete classifier that gets evaluated exactly,
//! so a reported risk is always achievable; completeness comes from a
//! generous candidate family (axis thresholds, hyperplanes through support
//! subsets with perturbations, pair bisectors, constants).

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mixtures::{mix, DiscreteDistribution, MixtureSpec};
use crate::models::{predict_sign, Extractor};
use crate::numeric::dot;
use crate::rng::{derive_seed, SplitMix64};

/// Brute-force enumeration is only attempted up to this support size.
pub const SUPPORT_LIMIT: usize = 20;

/// Risk-minimizing affine classifier over a small support.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub risk: f64,
    /// Support indices the classifier sacrifices (misclassifies).
    pub ignored_points: BTreeSet<usize>,
}

/// Support rows in a (possibly projected) coordinate system. Unlike a
/// `DiscreteDistribution`, projected rows may coincide.
struct Rows {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    mass: Vec<f64>,
    dim: usize,
}

impl Rows {
    fn from_distribution(dist: &DiscreteDistribution) -> Self {
        Rows {
            x: dist.points().iter().map(|p| p.features.clone()).collect(),
            y: dist.points().iter().map(|p| p.y()).collect(),
            mass: dist.points().iter().map(|p| p.mass).collect(),
            dim: dist.dim(),
        }
    }

    fn project(&self, coords: &[usize]) -> Rows {
        Rows {
            x: self
                .x
                .iter()
                .map(|row| coords.iter().map(|&c| row[c]).collect())
                .collect(),
            y: self.y.clone(),
            mass: self.mass.clone(),
            dim: coords.len(),
        }
    }

    fn evaluate(&self, w: &[f64], b: f64) -> (f64, BTreeSet<usize>) {
        let mut risk = 0.0;
        let mut ignored = BTreeSet::new();
        for i in 0..self.x.len() {
            let s = dot(w, &self.x[i]) + b;
            if f64::from(predict_sign(s)) != self.y[i] {
                risk += self.mass[i];
                ignored.insert(i);
            }
        }
        (risk, ignored)
    }
}

fn lex_less(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> bool {
    a.iter().lt(b.iter())
}

/// Null-space basis of the k x (dim+1) system `[x_i, 1] . v = 0` by Gaussian
/// elimination with partial pivoting.
fn hyperplanes_through(points: &[&[f64]], dim: usize) -> Vec<Vec<f64>> {
    let rows = points.len();
    let cols = dim + 1;
    let mut m = vec![0.0; rows * cols];
    for (r, p) in points.iter().enumerate() {
        m[r * cols..r * cols + dim].copy_from_slice(p);
        m[r * cols + dim] = 1.0;
    }
    let mut pivot_cols: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row >= rows {
            break;
        }
        let (mut best, mut best_abs) = (row, m[row * cols + col].abs());
        for r in (row + 1)..rows {
            let a = m[r * cols + col].abs();
            if a > best_abs {
                best = r;
                best_abs = a;
            }
        }
        if best_abs < 1e-12 {
            continue;
        }
        if best != row {
            for c in 0..cols {
                m.swap(row * cols + c, best * cols + c);
            }
        }
        let piv = m[row * cols + col];
        for r in 0..rows {
            if r != row {
                let factor = m[r * cols + col] / piv;
                if factor != 0.0 {
                    for c in 0..cols {
                        m[r * cols + c] -= factor * m[row * cols + c];
                    }
                }
            }
        }
        pivot_cols.push((row, col));
        row += 1;
    }
    let pivotal: BTreeSet<usize> = pivot_cols.iter().map(|&(_, c)| c).collect();
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivotal.contains(&free) {
            continue;
        }
        let mut v = vec![0.0; cols];
        v[free] = 1.0;
        for &(r, c) in pivot_cols.iter().rev() {
            let mut s = 0.0;
            for cc in (c + 1)..cols {
                s += m[r * cols + cc] * v[cc];
            }
            v[c] = -s / m[r * cols + c];
        }
        basis.push(v);
    }
    basis
}

/// Distinct sorted values of one coordinate.
fn distinct_values(rows: &Rows, coord: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = rows.x.iter().map(|r| r[coord]).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite coords"));
    vals.dedup_by(|a, b| a.to_bits() == b.to_bits());
    vals
}

fn candidate_classifiers(rows: &Rows) -> Vec<(Vec<f64>, f64)> {
    let d = rows.dim;
    let n = rows.x.len();
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    // constant predictors
    out.push((vec![0.0; d], 1.0));
    out.push((vec![0.0; d], -1.0));
    // per-coordinate thresholds: below, at, between, and above the values
    for coord in 0..d {
        let vals = distinct_values(rows, coord);
        let mut taus = Vec::with_capacity(2 * vals.len() + 1);
        taus.push(vals[0] - 1.0);
        for i in 0..vals.len() {
            taus.push(vals[i]);
            if i + 1 < vals.len() {
                taus.push(0.5 * (vals[i] + vals[i + 1]));
            }
        }
        taus.push(vals[vals.len() - 1] + 1.0);
        for tau in taus {
            for sign in [1.0, -1.0] {
                let mut w = vec![0.0; d];
                w[coord] = sign;
                out.push((w, -sign * tau));
            }
        }
    }
    if d >= 2 {
        // pair bisectors
        for i in 0..n {
            for j in (i + 1)..n {
                let w: Vec<f64> = rows.x[i]
                    .iter()
                    .zip(&rows.x[j])
                    .map(|(a, b)| a - b)
                    .collect();
                if w.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let mid: Vec<f64> = rows.x[i]
                    .iter()
                    .zip(&rows.x[j])
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                let b = -dot(&w, &mid);
                out.push((w.clone(), b));
                out.push((w.iter().map(|v| -v).collect(), -b));
            }
        }
        // hyperplanes through support subsets of size <= d, with epsilon
        // perturbations so on-plane points realize both sides
        enumerate_subsets(n, d.min(n), &mut |s: &[usize]| {
            let pts: Vec<&[f64]> = s.iter().map(|&i| rows.x[i].as_slice()).collect();
            for v in hyperplanes_through(&pts, d) {
                let (w, b) = (v[..d].to_vec(), v[d]);
                let scale = w
                    .iter()
                    .chain(core::iter::once(&b))
                    .fold(0.0_f64, |m, t| m.max(t.abs()));
                if scale < 1e-12 {
                    continue;
                }
                let eps = 1e-6 * scale;
                for sign in [1.0, -1.0] {
                    let base: Vec<f64> = w.iter().map(|t| sign * t).collect();
                    let bb = sign * b;
                    out.push((base.clone(), bb));
                    for pert in 0..=d {
                        for ps in [eps, -eps] {
                            let mut wp = base.clone();
                            let mut bp = bb;
                            if pert == d {
                                bp += ps;
                            } else {
                                wp[pert] += ps;
                            }
                            out.push((wp, bp));
                        }
                    }
                }
            }
        });
    }
    out
}

fn enumerate_subsets<F: FnMut(&[usize])>(n: usize, max_k: usize, f: &mut F) {
    fn rec<F: FnMut(&[usize])>(
        start: usize,
        n: usize,
        max_k: usize,
        buf: &mut Vec<usize>,
        f: &mut F,
    ) {
        if !buf.is_empty() {
            f(buf);
        }
        if buf.len() == max_k {
            return;
        }
        for i in start..n {
            buf.push(i);
            rec(i + 1, n, max_k, buf, f);
            buf.pop();
        }
    }
    let mut buf = Vec::new();
    rec(0, n, max_k, &mut buf, f);
}

fn best_affine(rows: &Rows) -> OptimalClassifier {
    let mut best: Option<OptimalClassifier> = None;
    for (w, b) in candidate_classifiers(rows) {
        let (risk, ignored) = rows.evaluate(&w, b);
        let better = match &best {
            None => true,
            Some(cur) => {
                risk < cur.risk - 1e-12
                    || (risk <= cur.risk + 1e-12 && lex_less(&ignored, &cur.ignored_points))
            }
        };
        if better {
            best = Some(OptimalClassifier {
                weights: w,
                bias: b,
                risk,
                ignored_points: ignored,
            });
        }
    }
    best.expect("candidate set is nonempty")
}

fn check_support(dist: &DiscreteDistribution) -> Result<()> {
    if dist.support_size() > SUPPORT_LIMIT {
        return Err(Error::SupportTooLarge {
            size: dist.support_size(),
            max: SUPPORT_LIMIT,
        });
    }
    Ok(())
}

/// Enumerate affine classifiers over the support and return a
/// risk-minimizing one; ties break toward the lexicographically smallest
/// ignored set.
pub fn optimal_affine_classifier(dist: &DiscreteDistribution) -> Result<OptimalClassifier> {
    check_support(dist)?;
    Ok(best_affine(&Rows::from_distribution(dist)))
}

/// Exact minimum zero-one risk of affine classifiers restricted to the
/// listed feature coordinates.
pub fn optimal_risk_in_span(dist: &DiscreteDistribution, subset: &BTreeSet<usize>) -> Result<f64> {
    check_support(dist)?;
    if subset.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    for &c in subset {
        if c >= dist.dim() {
            return Err(Error::DimMismatch {
                expected: dist.dim(),
                got: c + 1,
            });
        }
    }
    let coords: Vec<usize> = subset.iter().copied().collect();
    let rows = Rows::from_distribution(dist).project(&coords);
    Ok(best_affine(&rows).risk)
}

/// A linear functional of the input coordinates, used both as the feature
/// under covariance analysis and as a latent target for recovery probes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional {
    pub weights: Vec<f64>,
}

impl LinearFunctional {
    pub fn new(weights: Vec<f64>) -> Self {
        LinearFunctional { weights }
    }

    /// The coordinate projection x -> x[i].
    pub fn coordinate(i: usize, dim: usize) -> Self {
        let mut w = vec![0.0; dim];
        w[i] = 1.0;
        LinearFunctional { weights: w }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x)
    }
}

/// Exact covariances of a feature functional against the label, per
/// component and under the merged mixture, with the between-component term
/// of the law of total covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub component_covs: Vec<f64>,
    pub mixture_cov: f64,
    /// sum_j lambda_j (mu_phi^j - mu_phi^mix)(mu_y^j - mu_y^mix)
    pub between_term: f64,
}

fn moments(dist: &DiscreteDistribution, phi: &LinearFunctional) -> (f64, f64, f64) {
    let mut mean_phi = 0.0;
    let mut mean_y = 0.0;
    let mut mean_phi_y = 0.0;
    for p in dist.points() {
        let v = phi.eval(&p.features);
        mean_phi += p.mass * v;
        mean_y += p.mass * p.y();
        mean_phi_y += p.mass * v * p.y();
    }
    (mean_phi, mean_y, mean_phi_y)
}

fn covariance(dist: &DiscreteDistribution, phi: &LinearFunctional) -> f64 {
    let (mp, my, mpy) = moments(dist, phi);
    mpy - mp * my
}

/// Exact covariance decomposition of `phi` against the label over the
/// mixture.
pub fn covariance_report(
    phi: &LinearFunctional,
    mixture: &MixtureSpec,
) -> Result<CovarianceReport> {
    if phi.weights.len() != mixture.dim() {
        return Err(Error::DimMismatch {
            expected: mixture.dim(),
            got: phi.weights.len(),
        });
    }
    let merged = mix(mixture)?;
    let mixture_cov = covariance(&merged, phi);
    let (mix_mp, mix_my, _) = moments(&merged, phi);
    let mut component_covs = Vec::with_capacity(mixture.components().len());
    let mut between = 0.0;
    for (c, &w) in mixture.components().iter().zip(mixture.weights()) {
        component_covs.push(covariance(c, phi));
        let (mp, my, _) = moments(c, phi);
        between += w * (mp - mix_mp) * (my - mix_my);
    }
    Ok(CovarianceReport {
        component_covs,
        mixture_cov,
        between_term: between,
    })
}

/// Result of sampling mixture coefficients against a fixed covariance
/// profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CancellationProbe {
    pub trials: usize,
    pub hits: usize,
    pub hit_fraction: f64,
    /// A constructed interior lambda on the cancellation hyperplane, when
    /// component covariances of both signs exist.
    pub constructed: Option<Vec<f64>>,
}

/// Threshold below which a sampled weighted covariance sum counts as a hit.
pub const CANCELLATION_HIT_TOL: f64 = 1e-9;

/// Uniform draw from the (m-1)-simplex: normalized exponentials.
pub fn simplex_draw(m: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let mut e = vec![0.0; m];
    let mut total = 0.0;
    for v in e.iter_mut() {
        *v = -crate::numeric::ln(1.0 - rng.next_f64());
        total += *v;
    }
    for v in e.iter_mut() {
        *v /= total;
    }
    e
}

/// Draw mixture coefficients uniformly from the simplex and count how often
/// the weighted covariance sum lands within [`CANCELLATION_HIT_TOL`] of
/// zero. Also constructs one interior cancellation lambda when possible.
/// The draw stream is `SplitMix64::new(derive_seed(seed, 0))`.
pub fn cancellation_set_probe(
    component_covs: &[f64],
    trials: usize,
    seed: u64,
) -> Result<CancellationProbe> {
    if component_covs.is_empty() || component_covs.iter().all(|c| *c == 0.0) {
        return Err(Error::AllZeroCovs);
    }
    let m = component_covs.len();
    let mut rng = SplitMix64::new(derive_seed(seed, 0));
    let mut hits = 0;
    for _ in 0..trials {
        let lambda = simplex_draw(m, &mut rng);
        let s: f64 = lambda
            .iter()
            .zip(component_covs)
            .map(|(l, c)| l * c)
            .sum();
        if s.abs() < CANCELLATION_HIT_TOL {
            hits += 1;
        }
    }
    let constructed = construct_cancellation(component_covs);
    Ok(CancellationProbe {
        trials,
        hits,
        hit_fraction: if trials == 0 {
            0.0
        } else {
            hits as f64 / trials as f64
        },
        constructed,
    })
}

/// Solve for an interior lambda with `sum_j lambda_j cov_j = 0`: put a small
/// equal share on every component other than the first positive and first
/// negative one, then split the rest so those two cancel the shared
/// residual exactly.
fn construct_cancellation(covs: &[f64]) -> Option<Vec<f64>> {
    let m = covs.len();
    let p = covs.iter().position(|c| *c > 0.0)?;
    let n = covs.iter().position(|c| *c < 0.0)?;
    let mut share = if m > 2 { 0.5 / (m - 2) as f64 } else { 0.0 };
    for _ in 0..60 {
        let others = share * (m - 2) as f64;
        let residual: f64 = covs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != p && *i != n)
            .map(|(_, c)| share * c)
            .sum();
        let t = 1.0 - others;
        let u = (-residual - t * covs[n]) / (covs[p] - covs[n]);
        let v = t - u;
        if u > 0.0 && v > 0.0 {
            let mut lambda = vec![share; m];
            lambda[p] = u;
            lambda[n] = v;
            return Some(lambda);
        }
        share *= 0.1;
    }
    None
}

/// Coefficient of determination of the best affine reconstruction of each
/// latent functional from the extractor's features, over the evaluation
/// support.
pub fn feature_recovery_probe(
    extractor: &Extractor,
    latents: &[LinearFunctional],
    eval: &DiscreteDistribution,
) -> Result<Vec<f64>> {
    if extractor.input_dim() != eval.dim() {
        return Err(Error::DimMismatch {
            expected: extractor.input_dim(),
            got: eval.dim(),
        });
    }
    let n = extractor.output_dim() + 1; // features plus intercept
    let feats: Vec<Vec<f64>> = eval
        .points()
        .iter()
        .map(|p| {
            let mut f = extractor.features(&p.features)?;
            f.push(1.0);
            Ok(f)
        })
        .collect::<Result<_>>()?;
    let masses: Vec<f64> = eval.points().iter().map(|p| p.mass).collect();

    // normal-equation matrix shared across latents
    let mut gram = vec![0.0; n * n];
    for (f, &m) in feats.iter().zip(&masses) {
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] += m * f[i] * f[j];
            }
        }
    }

    let mut out = Vec::with_capacity(latents.len());
    for latent in latents {
        if latent.weights.len() != eval.dim() {
            return Err(Error::DimMismatch {
                expected: eval.dim(),
                got: latent.weights.len(),
            });
        }
        let targets: Vec<f64> = eval
            .points()
            .iter()
            .map(|p| latent.eval(&p.features))
            .collect();
        let mean: f64 = targets.iter().zip(&masses).map(|(t, m)| t * m).sum();
        let ss_tot: f64 = targets
            .iter()
            .zip(&masses)
            .map(|(t, m)| m * (t - mean) * (t - mean))
            .sum();
        if ss_tot <= 1e-15 {
            return Err(Error::DegenerateVariance);
        }
        let mut rhs = vec![0.0; n];
        for ((f, &m), &t) in feats.iter().zip(&masses).zip(&targets) {
            for i in 0..n {
                rhs[i] += m * f[i] * t;
            }
        }
        let coef = crate::numeric::solve_damped(&gram, n, &rhs);
        let ss_res: f64 = feats
            .iter()
            .zip(&masses)
            .zip(&targets)
            .map(|((f, &m), &t)| {
                let r = t - dot(&coef, f);
                m * r * r
            })
            .sum();
        let r2 = 1.0 - ss_res / ss_tot;
        out.push(r2.clamp(0.0, 1.0));
    }
    Ok(out)
}
