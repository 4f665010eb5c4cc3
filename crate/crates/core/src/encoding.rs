//! Piecewise-linear attribute encoding.
//!
//! Each attribute's training range `[alpha, beta]` is partitioned into
//! `gamma` equal sub-intervals by characteristic points. A raw row maps to
//! an attribute vector of length `gamma_total`: within each attribute block
//! the components saturate to 1 below the value, hold the fractional
//! position inside the sub-interval containing it, and drop to 0 above it.
//! Out-of-range values clip to the all-ones / all-zeros block.

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// A flattened attribute vector of length `gamma_total`, every component in
/// `[0, 1]`.
pub type AttributeVector = Vec<f64>;

/// Equal-width characteristic-point grid for every attribute, built from
/// training data only.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    gammas: Vec<usize>,
    offsets: Vec<usize>,
    points: Vec<Vec<f64>>,
    gamma_total: usize,
}

impl Discretization {
    /// Assemble a grid from per-attribute ranges and sub-interval counts.
    /// Characteristic points are `alpha + (k/gamma)(beta - alpha)` with the
    /// endpoints pinned exactly to `alpha` and `beta`.
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>, gammas: Vec<usize>) -> Result<Self> {
        let m = alphas.len();
        if m == 0 || betas.len() != m || gammas.len() != m {
            return Err(Error::InvalidInput(format!(
                "mismatched discretization arrays: {} alphas, {} betas, {} gammas",
                m,
                betas.len(),
                gammas.len()
            )));
        }
        for j in 0..m {
            if gammas[j] < 1 {
                return Err(Error::InvalidInput(format!(
                    "gamma for attribute {j} must be >= 1"
                )));
            }
            if !alphas[j].is_finite() || !betas[j].is_finite() || betas[j] < alphas[j] {
                return Err(Error::InvalidInput(format!(
                    "invalid range [{}, {}] for attribute {j}",
                    alphas[j], betas[j]
                )));
            }
        }
        let mut offsets = Vec::with_capacity(m);
        let mut points = Vec::with_capacity(m);
        let mut total = 0;
        for j in 0..m {
            offsets.push(total);
            total += gammas[j];
            let g = gammas[j];
            let mut pts = Vec::with_capacity(g + 1);
            for k in 0..=g {
                let p = if k == 0 {
                    alphas[j]
                } else if k == g {
                    betas[j]
                } else {
                    alphas[j] + (k as f64 / g as f64) * (betas[j] - alphas[j])
                };
                pts.push(p);
            }
            points.push(pts);
        }
        Ok(Discretization {
            alphas,
            betas,
            gammas,
            offsets,
            points,
            gamma_total: total,
        })
    }

    pub fn n_attrs(&self) -> usize {
        self.gammas.len()
    }

    /// Total vector length `gamma = sum_j gamma_j`.
    pub fn gamma_total(&self) -> usize {
        self.gamma_total
    }

    pub fn gammas(&self) -> &[usize] {
        &self.gammas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Start index of attribute `j`'s block in the flattened vector.
    pub fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    /// Characteristic points of attribute `j` (length `gamma_j + 1`).
    pub fn points(&self, j: usize) -> &[f64] {
        &self.points[j]
    }

    /// Whether attribute `j` was constant in training data (`alpha == beta`);
    /// its block always encodes to zeros and stays frozen during training.
    pub fn is_constant(&self, j: usize) -> bool {
        self.alphas[j] == self.betas[j]
    }
}

/// Compute per-attribute ranges from the training data and build the
/// equal-width grid. Constant attributes are allowed.
pub fn build_discretization(train: &Dataset, gammas: &[usize]) -> Result<Discretization> {
    let m = train.n_attrs();
    if gammas.len() != m {
        return Err(Error::InvalidInput(format!(
            "{} gamma values for {} attributes",
            gammas.len(),
            m
        )));
    }
    let mut alphas = vec![f64::INFINITY; m];
    let mut betas = vec![f64::NEG_INFINITY; m];
    for row in train.rows() {
        for j in 0..m {
            alphas[j] = alphas[j].min(row[j]);
            betas[j] = betas[j].max(row[j]);
        }
    }
    Discretization::new(alphas, betas, gammas.to_vec())
}

/// Encode one raw row into its attribute vector.
///
/// Per block, component `k` (1-based) is 1 when `x > p[k]`, the fraction
/// `(x - p[k-1]) / (p[k] - p[k-1])` when `p[k-1] <= x <= p[k]`, and 0
/// otherwise; values outside `[alpha, beta]` therefore clip to all-ones or
/// all-zeros. Constant attributes encode to zeros.
pub fn encode(x: &[f64], disc: &Discretization) -> Result<AttributeVector> {
    if x.len() != disc.n_attrs() {
        return Err(Error::InvalidInput(format!(
            "row has {} attributes, discretization expects {}",
            x.len(),
            disc.n_attrs()
        )));
    }
    let mut phi = vec![0.0; disc.gamma_total()];
    for (j, &value) in x.iter().enumerate() {
        if value.is_nan() {
            return Err(Error::InvalidInput(format!("NaN value for attribute {j}")));
        }
        if disc.is_constant(j) {
            continue;
        }
        let pts = disc.points(j);
        let off = disc.offset(j);
        for k in 1..pts.len() {
            phi[off + k - 1] = if value > pts[k] {
                1.0
            } else if pts[k - 1] <= value && value <= pts[k] {
                (value - pts[k - 1]) / (pts[k] - pts[k - 1])
            } else {
                0.0
            };
        }
    }
    Ok(phi)
}

/// Encode every row of a dataset; row `i` of the result equals
/// `encode(ds.row(i))`.
pub fn encode_dataset(ds: &Dataset, disc: &Discretization) -> Result<Vec<AttributeVector>> {
    ds.rows().iter().map(|row| encode(row, disc)).collect()
}
