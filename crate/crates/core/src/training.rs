//! Pairwise-margin training.
//!
//! Every ordered pair of training objects whose labels differ must separate
//! by the margin `tau`; violations incur a squared hinge penalty. Parameters
//! are fit by SGD over the shuffled pair set, with optional L2 terms applied
//! inside each pair update, and an optional monotone variant that squares
//! the linear increments and projects factor rows onto the non-negative
//! orthant.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Normal;

use crate::dataset::Dataset;
use crate::encoding::{build_discretization, encode_dataset, AttributeVector};
use crate::error::{Error, Result};
use crate::fm::{score_fast_raw, ModelParams};
use crate::rng::derive_rng;

/// Per-attribute sub-interval counts, resolved against the attribute count
/// at training time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GammaSpec {
    /// The same count for every attribute.
    Uniform(usize),
    /// One count per attribute, in column order.
    PerAttribute(Vec<usize>),
}

impl GammaSpec {
    pub fn resolve(&self, n_attrs: usize) -> Result<Vec<usize>> {
        let gammas = match self {
            GammaSpec::Uniform(g) => vec![*g; n_attrs],
            GammaSpec::PerAttribute(v) => {
                if v.len() != n_attrs {
                    return Err(Error::InvalidInput(format!(
                        "{} gamma values for {} attributes",
                        v.len(),
                        n_attrs
                    )));
                }
                v.clone()
            }
        };
        if let Some(j) = gammas.iter().position(|&g| g < 1) {
            return Err(Error::InvalidInput(format!("gamma for attribute {j} must be >= 1")));
        }
        Ok(gammas)
    }
}

/// Which attributes carry a monotonicity constraint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum MonotoneSpec {
    /// No constraints; the monotone trainer reduces to plain SGD.
    #[default]
    None,
    /// Constrain every attribute.
    All,
    /// Constrain the named attributes.
    Attributes(Vec<String>),
}

impl MonotoneSpec {
    pub fn resolve(&self, attr_names: &[String]) -> Result<Vec<bool>> {
        match self {
            MonotoneSpec::None => Ok(vec![false; attr_names.len()]),
            MonotoneSpec::All => Ok(vec![true; attr_names.len()]),
            MonotoneSpec::Attributes(names) => {
                let mut flags = vec![false; attr_names.len()];
                for name in names {
                    match attr_names.iter().position(|a| a == name) {
                        Some(j) => flags[j] = true,
                        None => {
                            return Err(Error::InvalidInput(format!(
                                "unknown attribute `{name}` in monotone list"
                            )))
                        }
                    }
                }
                Ok(flags)
            }
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Required score gap between objects of strictly ordered classes.
    pub tau: f64,
    /// Learning rate.
    pub eta: f64,
    /// Number of epochs over the full pair set.
    pub iters: usize,
    /// L2 weight on the marginal score vector.
    pub lambda1: f64,
    /// L2 weight on the factor matrix.
    pub lambda2: f64,
    /// Factor dimension.
    pub k: usize,
    /// Standard deviation of the factor initialization.
    pub sigma: f64,
    /// Root seed; initialization and pair shuffles derive from it.
    pub seed: u64,
    /// Sub-interval counts.
    pub gammas: GammaSpec,
    /// Monotonicity constraints (used by [`train_monotone`] only).
    pub monotone: MonotoneSpec,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            tau: 0.1,
            eta: 0.01,
            iters: 100,
            lambda1: 0.0,
            lambda2: 0.0,
            k: 5,
            sigma: 0.1,
            seed: 42,
            gammas: GammaSpec::Uniform(4),
            monotone: MonotoneSpec::None,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidInput(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidInput(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.k < 1 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::InvalidInput("regularization weights must be >= 0".into()));
        }
        Ok(())
    }
}

/// Ordered index pairs `(i, j)` with `label(i) > label(j)`, without
/// duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    pairs: Vec<(usize, usize)>,
}

impl PairSet {
    pub fn from_labels(labels: &[u32]) -> Self {
        let mut pairs = Vec::new();
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                if labels[i] > labels[j] {
                    pairs.push((i, j));
                }
            }
        }
        PairSet { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }
}

/// Full training objective: half the sum of squared hinge violations over
/// all pairs, plus the L2 terms. Zero with no regularization iff every pair
/// clears the margin. An empty pair set yields 0 with a logged warning.
pub fn pairwise_loss(
    p: &ModelParams,
    pairs: &PairSet,
    encoded: &[AttributeVector],
    hp: &Hyperparams,
) -> f64 {
    if pairs.is_empty() {
        log::warn!("pairwise loss over an empty pair set; returning 0");
        return 0.0;
    }
    let scores: Vec<f64> =
        encoded.iter().map(|phi| score_fast_raw(phi, &p.u, &p.v, p.k)).collect();
    hinge_loss_from_scores(&scores, pairs, hp.tau)
        + hp.lambda1 * p.u.iter().map(|x| x * x).sum::<f64>()
        + hp.lambda2 * p.v.iter().map(|x| x * x).sum::<f64>()
}

/// The hinge part of the objective, computed from precomputed scores.
/// Adding any constant to every score leaves this value unchanged up to
/// rounding, since only differences enter.
pub fn hinge_loss_from_scores(scores: &[f64], pairs: &PairSet, tau: f64) -> f64 {
    let mut total = 0.0;
    for (i, j) in pairs.iter() {
        let r = scores[j] - scores[i] + tau;
        if r > 0.0 {
            total += r * r;
        }
    }
    0.5 * total
}

/// Gradient of one pair's squared hinge with respect to `(u, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub du: Vec<f64>,
    /// Flat `gamma_total x k`, row-major, matching [`ModelParams::v`].
    pub dv: Vec<f64>,
}

impl PairGradient {
    fn zeros(gamma: usize, k: usize) -> Self {
        PairGradient { du: vec![0.0; gamma], dv: vec![0.0; gamma * k] }
    }
}

/// Score an object and cache its per-factor sums `sum_n v[n,f] * phi[n]`,
/// which both the score and the factor gradient reuse.
fn eval_object(phi: &[f64], u: &[f64], v: &[f64], k: usize, sums: &mut [f64]) -> f64 {
    let mut linear = 0.0;
    for (x, un) in phi.iter().zip(u) {
        linear += x * un;
    }
    sums.fill(0.0);
    let mut sum_sq = vec![0.0; k];
    for (n, &x) in phi.iter().enumerate() {
        if x != 0.0 {
            for f in 0..k {
                let t = v[n * k + f] * x;
                sums[f] += t;
                sum_sq[f] += t * t;
            }
        }
    }
    let interaction: f64 = sums.iter().zip(&sum_sq).map(|(s, q)| s * s - q).sum();
    linear + 0.5 * interaction
}

/// Gradient of the squared hinge of a single pair `(i, j)`. Exactly zero
/// when the pair already clears the margin; otherwise
/// `2 r (dU(x_j)/dtheta - dU(x_i)/dtheta)` with `r` the violation.
pub fn pair_gradient(
    p: &ModelParams,
    pair: (usize, usize),
    encoded: &[AttributeVector],
    hp: &Hyperparams,
) -> PairGradient {
    let gamma = p.gamma_total();
    let k = p.k;
    let (i, j) = pair;
    let phi_i = &encoded[i];
    let phi_j = &encoded[j];
    let mut sums_i = vec![0.0; k];
    let mut sums_j = vec![0.0; k];
    let s_i = eval_object(phi_i, &p.u, &p.v, k, &mut sums_i);
    let s_j = eval_object(phi_j, &p.u, &p.v, k, &mut sums_j);
    let r = s_j - s_i + hp.tau;
    let mut g = PairGradient::zeros(gamma, k);
    if r <= 0.0 {
        return g;
    }
    for n in 0..gamma {
        g.du[n] = 2.0 * r * (phi_j[n] - phi_i[n]);
        let xi = phi_i[n];
        let xj = phi_j[n];
        for f in 0..k {
            let vnf = p.v[n * k + f];
            let d_j = xj * sums_j[f] - vnf * xj * xj;
            let d_i = xi * sums_i[f] - vnf * xi * xi;
            g.dv[n * k + f] = 2.0 * r * (d_j - d_i);
        }
    }
    g
}

/// Analytic gradient of [`pairwise_loss`] (all pairs, including the L2
/// terms) with respect to `(u, V)`.
pub fn loss_gradient(
    p: &ModelParams,
    pairs: &PairSet,
    encoded: &[AttributeVector],
    hp: &Hyperparams,
) -> PairGradient {
    let gamma = p.gamma_total();
    let k = p.k;
    let mut g = PairGradient::zeros(gamma, k);
    let mut sums: Vec<Vec<f64>> = Vec::with_capacity(encoded.len());
    let mut scores = Vec::with_capacity(encoded.len());
    for phi in encoded {
        let mut s = vec![0.0; k];
        scores.push(eval_object(phi, &p.u, &p.v, k, &mut s));
        sums.push(s);
    }
    for (i, j) in pairs.iter() {
        let r = scores[j] - scores[i] + hp.tau;
        if r <= 0.0 {
            continue;
        }
        let (phi_i, phi_j) = (&encoded[i], &encoded[j]);
        for n in 0..gamma {
            g.du[n] += r * (phi_j[n] - phi_i[n]);
            let xi = phi_i[n];
            let xj = phi_j[n];
            for f in 0..k {
                let vnf = p.v[n * k + f];
                let d_j = xj * sums[j][f] - vnf * xj * xj;
                let d_i = xi * sums[i][f] - vnf * xi * xi;
                g.dv[n * k + f] += r * (d_j - d_i);
            }
        }
    }
    for n in 0..gamma {
        g.du[n] += 2.0 * hp.lambda1 * p.u[n];
        for f in 0..k {
            g.dv[n * k + f] += 2.0 * hp.lambda2 * p.v[n * k + f];
        }
    }
    g
}

/// Plain SGD training. Monotonicity flags in `hp` are ignored; see
/// [`train_monotone`].
pub fn train_sgd(train: &Dataset, hp: &Hyperparams) -> Result<ModelParams> {
    fit(train, hp, &vec![false; train.n_attrs()])
}

/// Monotone-variant training: for each flagged attribute the linear
/// increments are squared reparameterizations (hence non-negative) and its
/// factor rows are projected onto `max(0, .)` after every update, so all
/// interactions between flagged attributes are non-negative by
/// construction. With no flags this is exactly [`train_sgd`].
pub fn train_monotone(train: &Dataset, hp: &Hyperparams) -> Result<ModelParams> {
    fit(train, hp, &hp.monotone.resolve(train.attr_names())?)
}

/// Initial value of the squared-reparameterization coordinate; small but
/// positive, since a zero start has zero gradient through the square.
const DELTA_PRIME_INIT: f64 = 0.01;

fn fit(train: &Dataset, hp: &Hyperparams, monotone: &[bool]) -> Result<ModelParams> {
    hp.validate()?;
    if train.n_rows() < 2 {
        return Err(Error::Training("training set has fewer than 2 rows".into()));
    }
    if train.distinct_labels() < 2 {
        return Err(Error::Training(
            "training set has a single class; no ordered pairs exist".into(),
        ));
    }
    let gammas = hp.gammas.resolve(train.n_attrs())?;
    let disc = build_discretization(train, &gammas)?;
    let encoded = encode_dataset(train, &disc)?;
    let pairs = PairSet::from_labels(train.labels());
    debug_assert!(!pairs.is_empty());

    let gamma = disc.gamma_total();
    let k = hp.k;
    let eta = hp.eta;

    // Per-coordinate bookkeeping: which blocks are squared-reparameterized,
    // projected, or frozen (constant attributes never influence a score and
    // keep zero parameters).
    let mut squared = vec![false; gamma];
    let mut projected = vec![false; gamma];
    let mut frozen = vec![false; gamma];
    for j in 0..disc.n_attrs() {
        for n in disc.offset(j)..disc.offset(j) + disc.gammas()[j] {
            squared[n] = monotone[j] && !disc.is_constant(j);
            projected[n] = monotone[j];
            frozen[n] = disc.is_constant(j);
        }
    }

    let mut rng = derive_rng(hp.seed, &[0x7472_6169_6e]);
    let normal = Normal::new(0.0, hp.sigma)
        .map_err(|e| Error::InvalidInput(format!("bad sigma: {e}")))?;

    let mut u = vec![0.0; gamma];
    let mut dp = vec![0.0; gamma];
    for n in 0..gamma {
        if squared[n] {
            dp[n] = DELTA_PRIME_INIT;
            u[n] = DELTA_PRIME_INIT * DELTA_PRIME_INIT;
        }
    }
    let mut v = vec![0.0; gamma * k];
    for n in 0..gamma {
        for f in 0..k {
            let draw: f64 = rng.sample(normal);
            v[n * k + f] = if frozen[n] {
                0.0
            } else if projected[n] {
                draw.max(0.0)
            } else {
                draw
            };
        }
    }

    let mut order: Vec<(usize, usize)> = pairs.iter().collect();
    let mut sums_i = vec![0.0; k];
    let mut sums_j = vec![0.0; k];
    for _epoch in 0..hp.iters {
        order.shuffle(&mut rng);
        for &(i, j) in &order {
            let phi_i = &encoded[i];
            let phi_j = &encoded[j];
            let s_i = eval_object(phi_i, &u, &v, k, &mut sums_i);
            let s_j = eval_object(phi_j, &u, &v, k, &mut sums_j);
            let r = s_j - s_i + hp.tau;
            let violated = r > 0.0;

            for n in 0..gamma {
                if frozen[n] {
                    continue;
                }
                let g = if violated { 2.0 * r * (phi_j[n] - phi_i[n]) } else { 0.0 };
                if squared[n] {
                    // Chain rule through delta = dp^2; the L2 term acts on
                    // delta, the model-space parameter.
                    let d = dp[n];
                    let delta = d * d;
                    dp[n] = d - eta * 2.0 * d * (g + 2.0 * hp.lambda1 * delta);
                    u[n] = dp[n] * dp[n];
                } else {
                    u[n] -= eta * (g + 2.0 * hp.lambda1 * u[n]);
                }
            }
            for n in 0..gamma {
                if frozen[n] {
                    continue;
                }
                let xi = phi_i[n];
                let xj = phi_j[n];
                for f in 0..k {
                    let vnf = v[n * k + f];
                    let g = if violated {
                        let d_j = xj * sums_j[f] - vnf * xj * xj;
                        let d_i = xi * sums_i[f] - vnf * xi * xi;
                        2.0 * r * (d_j - d_i)
                    } else {
                        0.0
                    };
                    let mut next = vnf - eta * (g + 2.0 * hp.lambda2 * vnf);
                    if projected[n] {
                        next = next.max(0.0);
                    }
                    v[n * k + f] = next;
                }
            }
        }
    }

    let train_scores: Vec<(f64, u32)> = encoded
        .iter()
        .zip(train.labels())
        .map(|(phi, &l)| (score_fast_raw(phi, &u, &v, k), l))
        .collect();
    let n_classes = train.labels().iter().copied().max().expect("non-empty labels");

    let model = ModelParams {
        u,
        v,
        k,
        tau: hp.tau,
        disc,
        train_scores,
        attr_names: train.attr_names().to_vec(),
        n_classes,
    };
    model.validate()?;
    Ok(model)
}

/// Objective value of a trained model on its training set, recomputed from
/// scratch (used by the CLI to report the final loss).
pub fn training_loss(p: &ModelParams, train: &Dataset, hp: &Hyperparams) -> Result<f64> {
    let encoded = encode_dataset(train, &p.disc)?;
    let pairs = PairSet::from_labels(train.labels());
    Ok(pairwise_loss(p, &pairs, &encoded, hp))
}
