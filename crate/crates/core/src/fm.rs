//! The link function and its parameter container.
//!
//! An object's score is a linear term over the attribute vector plus
//! factorized pairwise interactions between vector components. There is no
//! global bias: only score differences ever matter downstream.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoding::Discretization;
use crate::error::{Error, Result};

/// Format version written by [`save_model`] and accepted by [`load_model`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Trained model state: marginal score vector, factor matrix, margin,
/// discretization grid, and the cached training scores used by ordinal
/// inference.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Marginal score vector of per-sub-interval increments, length
    /// `gamma_total`.
    pub u: Vec<f64>,
    /// Factor matrix, `gamma_total x k`, row-major. Row dot products model
    /// pairwise interaction strengths.
    pub v: Vec<f64>,
    /// Factor dimension.
    pub k: usize,
    /// Margin used in training and by the kappa indicator.
    pub tau: f64,
    /// Characteristic-point grid the model was trained against.
    pub disc: Discretization,
    /// `(score, label)` for every training object, in training-row order.
    pub train_scores: Vec<(f64, u32)>,
    /// Attribute names, for schema checks and reports.
    pub attr_names: Vec<String>,
    /// Class count observed in training (the maximum cached label).
    pub n_classes: u32,
}

impl ModelParams {
    /// Vector length `gamma_total`.
    pub fn gamma_total(&self) -> usize {
        self.u.len()
    }

    /// Factor row for vector component `n`.
    pub fn factor_row(&self, n: usize) -> &[f64] {
        &self.v[n * self.k..(n + 1) * self.k]
    }

    /// Check internal consistency; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        let gamma = self.disc.gamma_total();
        if self.k < 1 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidInput(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.u.len() != gamma {
            return Err(Error::InvalidInput(format!(
                "u has length {}, expected gamma_total {}",
                self.u.len(),
                gamma
            )));
        }
        if self.v.len() != gamma * self.k {
            return Err(Error::InvalidInput(format!(
                "V has {} entries, expected {} x {}",
                self.v.len(),
                gamma,
                self.k
            )));
        }
        if self.attr_names.len() != self.disc.n_attrs() {
            return Err(Error::InvalidInput(format!(
                "{} attribute names for {} attributes",
                self.attr_names.len(),
                self.disc.n_attrs()
            )));
        }
        if self.u.iter().chain(&self.v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite model parameter".into()));
        }
        for &(s, l) in &self.train_scores {
            if !s.is_finite() {
                return Err(Error::InvalidInput("non-finite cached training score".into()));
            }
            if l < 1 {
                return Err(Error::InvalidInput("cached training label below 1".into()));
            }
        }
        Ok(())
    }
}

/// Linear-plus-interaction score, written as the explicit double loop over
/// component pairs. Quadratic in the vector length; see [`link_score_fast`]
/// for the equivalent linear-time form.
pub fn link_score(phi: &[f64], p: &ModelParams) -> Result<f64> {
    check_phi(phi, p)?;
    let mut s = 0.0;
    for (x, un) in phi.iter().zip(&p.u) {
        s += x * un;
    }
    let gamma = p.gamma_total();
    for n1 in 0..gamma {
        if phi[n1] == 0.0 {
            continue;
        }
        for n2 in n1 + 1..gamma {
            if phi[n2] == 0.0 {
                continue;
            }
            let dot: f64 = p
                .factor_row(n1)
                .iter()
                .zip(p.factor_row(n2))
                .map(|(a, b)| a * b)
                .sum();
            s += dot * phi[n1] * phi[n2];
        }
    }
    Ok(s)
}

/// Same contract as [`link_score`], computed per factor dimension as
/// `((sum_n v*phi)^2 - sum_n (v*phi)^2) / 2`.
pub fn link_score_fast(phi: &[f64], p: &ModelParams) -> Result<f64> {
    check_phi(phi, p)?;
    Ok(score_fast_raw(phi, &p.u, &p.v, p.k))
}

fn check_phi(phi: &[f64], p: &ModelParams) -> Result<()> {
    if phi.len() != p.gamma_total() {
        return Err(Error::InvalidInput(format!(
            "attribute vector has length {}, model expects {}",
            phi.len(),
            p.gamma_total()
        )));
    }
    Ok(())
}

pub(crate) fn score_fast_raw(phi: &[f64], u: &[f64], v: &[f64], k: usize) -> f64 {
    let mut s = 0.0;
    for (x, un) in phi.iter().zip(u) {
        s += x * un;
    }
    let mut interaction = 0.0;
    for f in 0..k {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for (n, &x) in phi.iter().enumerate() {
            if x != 0.0 {
                let t = v[n * k + f] * x;
                sum += t;
                sum_sq += t * t;
            }
        }
        interaction += sum * sum - sum_sq;
    }
    s + 0.5 * interaction
}

/// On-disk document. Field names and layout are part of the model file
/// contract; reals round-trip losslessly through shortest-representation
/// decimal.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    k: usize,
    tau: f64,
    gammas: Vec<usize>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    u: Vec<f64>,
    #[serde(rename = "V")]
    v: Vec<f64>,
    train_scores: Vec<f64>,
    train_labels: Vec<u32>,
    attr_names: Vec<String>,
}

/// Write the model as a versioned JSON document.
pub fn save_model(p: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    p.validate()?;
    let doc = ModelFile {
        version: MODEL_FORMAT_VERSION,
        k: p.k,
        tau: p.tau,
        gammas: p.disc.gammas().to_vec(),
        alphas: p.disc.alphas().to_vec(),
        betas: p.disc.betas().to_vec(),
        u: p.u.clone(),
        v: p.v.clone(),
        train_scores: p.train_scores.iter().map(|&(s, _)| s).collect(),
        train_labels: p.train_scores.iter().map(|&(_, l)| l).collect(),
        attr_names: p.attr_names.to_vec(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &doc)
        .map_err(|e| Error::ModelFormat { path: path.into(), message: e.to_string() })?;
    Ok(())
}

/// Read a model document back; the inverse of [`save_model`] bit for bit.
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::ModelFormat { path: path.into(), message: e.to_string() })?;
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::ModelFormat {
            path: path.into(),
            message: "missing or non-integer `version` field".into(),
        })?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::ModelVersion { found: version as u32, supported: MODEL_FORMAT_VERSION });
    }
    let doc: ModelFile = serde_json::from_value(value)
        .map_err(|e| Error::ModelFormat { path: path.into(), message: e.to_string() })?;
    if doc.train_scores.len() != doc.train_labels.len() {
        return Err(Error::ModelFormat {
            path: path.into(),
            message: format!(
                "{} train_scores but {} train_labels",
                doc.train_scores.len(),
                doc.train_labels.len()
            ),
        });
    }
    let disc = Discretization::new(doc.alphas, doc.betas, doc.gammas)
        .map_err(|e| Error::ModelFormat { path: path.into(), message: e.to_string() })?;
    let n_classes = doc.train_labels.iter().copied().max().unwrap_or(0);
    let p = ModelParams {
        u: doc.u,
        v: doc.v,
        k: doc.k,
        tau: doc.tau,
        disc,
        train_scores: doc.train_scores.into_iter().zip(doc.train_labels).collect(),
        attr_names: doc.attr_names,
        n_classes,
    };
    p.validate().map_err(|e| Error::ModelFormat { path: path.into(), message: e.to_string() })?;
    Ok(p)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use rand::Rng;

    /// Hand-assembled model over a 2-component grid.
    pub(crate) fn tiny_model(u: Vec<f64>, v: Vec<f64>, k: usize) -> ModelParams {
        let gamma = u.len();
        assert_eq!(v.len(), gamma * k);
        // One attribute per component keeps block bookkeeping trivial.
        let disc = Discretization::new(vec![0.0; gamma], vec![1.0; gamma], vec![1; gamma]).unwrap();
        ModelParams {
            u,
            v,
            k,
            tau: 0.1,
            disc,
            train_scores: vec![],
            attr_names: (0..gamma).map(|j| format!("a{j}")).collect(),
            n_classes: 0,
        }
    }

    pub(crate) fn random_model(gamma: usize, k: usize, seed: u64) -> ModelParams {
        let mut rng = derive_rng(seed, &[0xf0]);
        let u: Vec<f64> = (0..gamma).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..gamma * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        tiny_model(u, v, k)
    }

    #[test]
    fn hand_example() {
        let p = tiny_model(vec![1.0, 1.0], vec![2.0, 3.0], 1);
        let phi = [1.0, 0.5];
        // 1*1 + 1*0.5 + (2*3)*1*0.5 = 4.5
        assert_eq!(link_score(&phi, &p).unwrap(), 4.5);
        assert!((link_score_fast(&phi, &p).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn zero_factors_reduce_to_linear_term() {
        let p = tiny_model(vec![0.25, -1.5, 2.0], vec![0.0; 6], 2);
        let phi = [1.0, 0.5, 0.25];
        let expect = 0.25 - 0.75 + 0.5;
        assert!((link_score(&phi, &p).unwrap() - expect).abs() < 1e-15);
        assert!((link_score_fast(&phi, &p).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_scores_zero() {
        let p = random_model(6, 3, 1);
        assert_eq!(link_score(&[0.0; 6], &p).unwrap(), 0.0);
        assert_eq!(link_score_fast(&[0.0; 6], &p).unwrap(), 0.0);
    }

    #[test]
    fn fast_matches_naive_on_random_instances() {
        let mut rng = derive_rng(2, &[]);
        for trial in 0..200 {
            let p = random_model(12, 5, trial);
            let phi: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
            let a = link_score(&phi, &p).unwrap();
            let b = link_score_fast(&phi, &p).unwrap();
            assert!((a - b).abs() <= 1e-9, "trial {trial}: {a} vs {b}");
        }
    }

    #[test]
    fn additive_in_linear_coefficients() {
        let mut rng = derive_rng(3, &[]);
        for trial in 0..50 {
            let p1 = random_model(8, 2, 100 + trial);
            let u2: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let phi: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();

            let mut p_sum = p1.clone();
            for (a, b) in p_sum.u.iter_mut().zip(&u2) {
                *a += b;
            }
            let mut p2 = p1.clone();
            p2.u = u2;
            let mut p0 = p1.clone();
            p0.u = vec![0.0; 8];

            let lhs = link_score(&phi, &p_sum).unwrap();
            let rhs = link_score(&phi, &p1).unwrap() - link_score(&phi, &p0).unwrap()
                + link_score(&phi, &p2).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = random_model(6, 2, 9);
        assert!(link_score(&[0.0; 5], &p).is_err());
        assert!(link_score_fast(&[0.0; 7], &p).is_err());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut p = random_model(7, 3, 4);
        // Awkward values that expose lossy formatting.
        p.u[0] = 0.1 + 0.2;
        p.u[1] = 1e-17;
        p.v[0] = f64::MIN_POSITIVE;
        p.train_scores = vec![(0.301 - 0.3, 1), (2.0f64.sqrt(), 3)];
        p.n_classes = 3;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&p, &path).unwrap();
        let q = load_model(&path).unwrap();
        assert_eq!(p.u.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   q.u.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_eq!(p.v.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   q.v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert_eq!(p, q);
    }

    #[test]
    fn missing_factor_section_is_structured_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let p = random_model(3, 1, 5);
        save_model(&p, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc.as_object_mut().unwrap().remove("V");
        std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, Error::ModelFormat { .. }), "{err}");
        assert!(err.to_string().contains("V"), "{err}");
    }

    #[test]
    fn unsupported_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let p = random_model(3, 1, 6);
        save_model(&p, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["version"] = serde_json::json!(2);
        std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        match load_model(&path).unwrap_err() {
            Error::ModelVersion { found, supported } => {
                assert_eq!(found, 2);
                assert_eq!(supported, 1);
            }
            other => panic!("expected version error, got {other}"),
        }
    }

    #[test]
    fn malformed_document_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), Error::ModelFormat { .. }));
    }
}
