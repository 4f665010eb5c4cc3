//! Metrics and the experimental protocol: k-fold cross-validation for
//! hyperparameter selection and repeated random-split trials with averaged
//! test metrics.

use rayon::prelude::*;

use crate::dataset::{kfold, random_split_attempt, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::inference::predict;
use crate::training::{train_monotone, Hyperparams};

/// Test metrics of one fitted model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub acc: f64,
    pub mae: f64,
    pub n: usize,
}

/// Fraction of exact label matches.
pub fn accuracy(pred: &[u32], truth: &[u32]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Mean absolute label deviation.
pub fn mae(pred: &[u32], truth: &[u32]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let total: f64 = pred
        .iter()
        .zip(truth)
        .map(|(&a, &b)| (f64::from(a) - f64::from(b)).abs())
        .sum();
    Ok(total / pred.len() as f64)
}

fn check_lengths(pred: &[u32], truth: &[u32]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} truth labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("empty label vectors".into()));
    }
    Ok(())
}

/// Train on `train`, score exact-match accuracy and MAE on `test`.
pub fn fit_and_score(train: &Dataset, test: &Dataset, hp: &Hyperparams) -> Result<Metrics> {
    let model = train_monotone(train, hp)?;
    let mut pred = Vec::with_capacity(test.n_rows());
    for row in test.rows() {
        pred.push(predict(row, &model)?.label);
    }
    Ok(Metrics {
        acc: accuracy(&pred, test.labels())?,
        mae: mae(&pred, test.labels())?,
        n: test.n_rows(),
    })
}

/// Index of the best `(acc, mae)` entry: highest accuracy, ties broken by
/// lower MAE, then by first position.
pub(crate) fn select_best(results: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, &(acc, m)) in results.iter().enumerate().skip(1) {
        let (bacc, bmae) = results[best];
        if acc > bacc || (acc == bacc && m < bmae) {
            best = i;
        }
    }
    best
}

/// Pick the grid entry with the highest mean validation accuracy over
/// `n_folds` folds (the same folds for every candidate); ties go to lower
/// mean MAE, then grid order.
pub fn cross_validate(
    ds: &Dataset,
    grid: &[Hyperparams],
    n_folds: usize,
    seed: u64,
) -> Result<Hyperparams> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty hyperparameter grid".into()));
    }
    let folds = kfold(ds, n_folds, seed)?;
    let mut means = Vec::with_capacity(grid.len());
    for hp in grid {
        let fold_metrics = folds
            .par_iter()
            .map(|(train, val)| fit_and_score(train, val, hp))
            .collect::<Result<Vec<_>>>()?;
        let acc = fold_metrics.iter().map(|m| m.acc).sum::<f64>() / fold_metrics.len() as f64;
        let m = fold_metrics.iter().map(|m| m.mae).sum::<f64>() / fold_metrics.len() as f64;
        means.push((acc, m));
    }
    Ok(grid[select_best(&means)].clone())
}

/// The default cross-validation grid: sub-interval counts {2, 4, 6} crossed
/// with margins {0.05, 0.1, 0.5}, everything else taken from `base`.
pub fn default_cv_grid(base: &Hyperparams) -> Vec<Hyperparams> {
    let mut grid = Vec::with_capacity(9);
    for &g in &[2usize, 4, 6] {
        for &tau in &[0.05, 0.1, 0.5] {
            grid.push(Hyperparams {
                gammas: crate::training::GammaSpec::Uniform(g),
                tau,
                ..base.clone()
            });
        }
    }
    grid
}

/// Per-trial metrics plus their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub trials: Vec<Metrics>,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
}

impl TrialSummary {
    fn from_trials(trials: Vec<Metrics>) -> Self {
        let accs: Vec<f64> = trials.iter().map(|m| m.acc).collect();
        let maes: Vec<f64> = trials.iter().map(|m| m.mae).collect();
        let (acc_mean, acc_std) = mean_std(&accs);
        let (mae_mean, mae_std) = mean_std(&maes);
        TrialSummary { trials, acc_mean, acc_std, mae_mean, mae_std }
    }

    /// Render as the results CSV: one row per trial and mean/std rows.
    /// Byte-identical for identical inputs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,acc,mae\n");
        for (t, m) in self.trials.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", t, m.acc, m.mae));
        }
        out.push_str(&format!("mean,{},{}\n", self.acc_mean, self.mae_mean));
        out.push_str(&format!("std,{},{}\n", self.acc_std, self.mae_std));
        out
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// How many fresh shuffles to try when a split leaves the training side
/// with a single class.
const MAX_SPLIT_ATTEMPTS: u32 = 10;

/// Run `spec.n_trials` independent train/test trials: split, train, predict
/// the held-out rows, and aggregate. Deterministic given `spec.seed`;
/// trials run in parallel and reduce in trial order. Degenerate splits are
/// reshuffled up to 10 times before erroring.
pub fn run_trials(ds: &Dataset, hp: &Hyperparams, spec: &SplitSpec) -> Result<TrialSummary> {
    spec.validate()?;
    let trials = (0..spec.n_trials)
        .into_par_iter()
        .map(|trial| {
            let (train, test) = split_with_retry(ds, spec, trial)?;
            fit_and_score(&train, &test, hp)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialSummary::from_trials(trials))
}

fn split_with_retry(ds: &Dataset, spec: &SplitSpec, trial: u32) -> Result<(Dataset, Dataset)> {
    for attempt in 0..MAX_SPLIT_ATTEMPTS {
        let (train, test) = random_split_attempt(ds, spec, trial, attempt);
        if train.distinct_labels() >= 2 && !test.labels().is_empty() {
            return Ok((train, test));
        }
    }
    Err(Error::Training(format!(
        "trial {trial}: training side kept a single class after {MAX_SPLIT_ATTEMPTS} split attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{noisy_ordinal_dataset, separable_three_class};
    use crate::training::GammaSpec;

    #[test]
    fn accuracy_hand_values() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        let a = accuracy(&[1, 3, 3], &[1, 2, 3]).unwrap();
        assert!((a - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(accuracy(&[2, 3, 1], &[1, 2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn mae_hand_values() {
        assert_eq!(mae(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        let m = mae(&[1, 3, 3], &[1, 2, 3]).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mae(&[2, 3, 4], &[1, 2, 3]).unwrap(), 1.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(accuracy(&[1], &[1, 2]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    // Independent oracle: straight counting loops.
    #[test]
    fn metrics_match_bruteforce_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(23, &[]);
        for _ in 0..100 {
            let n = rng.random_range(1..30);
            let pred: Vec<u32> = (0..n).map(|_| rng.random_range(1..=5)).collect();
            let truth: Vec<u32> = (0..n).map(|_| rng.random_range(1..=5)).collect();
            let mut hits = 0usize;
            let mut dev = 0.0f64;
            for i in 0..n {
                if pred[i] == truth[i] {
                    hits += 1;
                }
                dev += (pred[i] as f64 - truth[i] as f64).abs();
            }
            assert_eq!(accuracy(&pred, &truth).unwrap(), hits as f64 / n as f64);
            assert!((mae(&pred, &truth).unwrap() - dev / n as f64).abs() < 1e-15);
            // acc = 1 exactly when mae = 0.
            assert_eq!(
                accuracy(&pred, &truth).unwrap() == 1.0,
                mae(&pred, &truth).unwrap() == 0.0
            );
        }
    }

    #[test]
    fn selection_tie_breaks() {
        assert_eq!(select_best(&[(0.8, 0.3)]), 0);
        assert_eq!(select_best(&[(0.7, 0.3), (0.9, 0.5), (0.8, 0.1)]), 1);
        // Equal accuracy: lower MAE wins.
        assert_eq!(select_best(&[(0.8, 0.3), (0.8, 0.2)]), 1);
        // Full tie: first in grid order.
        assert_eq!(select_best(&[(0.8, 0.2), (0.8, 0.2)]), 0);
    }

    #[test]
    fn cv_singleton_grid_returns_it() {
        let ds = noisy_ordinal_dataset(20, 2, 3, 0.3, 3);
        let hp = Hyperparams { iters: 5, ..Hyperparams::default() };
        let chosen = cross_validate(&ds, &[hp.clone()], 5, 42).unwrap();
        assert_eq!(chosen, hp);
    }

    #[test]
    fn cv_empty_grid_rejected() {
        let ds = noisy_ordinal_dataset(20, 2, 3, 0.3, 3);
        assert!(cross_validate(&ds, &[], 5, 42).is_err());
    }

    #[test]
    fn cv_prefers_dominating_candidate() {
        // On cleanly separable data a real fit dominates a no-op fit
        // (0 epochs leaves the zero model, whose predictions collapse).
        let ds = separable_three_class(40, 6);
        let good = Hyperparams { iters: 40, ..Hyperparams::default() };
        let bad = Hyperparams { iters: 0, ..Hyperparams::default() };
        let chosen = cross_validate(&ds, &[bad, good.clone()], 4, 7).unwrap();
        assert_eq!(chosen, good);
    }

    #[test]
    fn default_grid_shape() {
        let grid = default_cv_grid(&Hyperparams::default());
        assert_eq!(grid.len(), 9);
        assert!(grid.iter().any(|hp| hp.tau == 0.5 && hp.gammas == GammaSpec::Uniform(6)));
    }

    #[test]
    fn single_trial_summary() {
        let ds = separable_three_class(40, 10);
        let hp = Hyperparams { iters: 30, ..Hyperparams::default() };
        let spec = SplitSpec { n_trials: 1, ..SplitSpec::default() };
        let summary = run_trials(&ds, &hp, &spec).unwrap();
        assert_eq!(summary.trials.len(), 1);
        assert_eq!(summary.acc_mean, summary.trials[0].acc);
        assert_eq!(summary.acc_std, 0.0);
        assert_eq!(summary.mae_std, 0.0);
    }

    #[test]
    fn trials_deterministic() {
        let ds = noisy_ordinal_dataset(30, 2, 3, 0.4, 8);
        let hp = Hyperparams { iters: 10, ..Hyperparams::default() };
        let spec = SplitSpec { n_trials: 4, ..SplitSpec::default() };
        let a = run_trials(&ds, &hp, &spec).unwrap();
        let b = run_trials(&ds, &hp, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn csv_layout() {
        let ds = separable_three_class(30, 12);
        let hp = Hyperparams { iters: 20, ..Hyperparams::default() };
        let spec = SplitSpec { n_trials: 2, ..SplitSpec::default() };
        let csv = run_trials(&ds, &hp, &spec).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "trial,acc,mae");
        assert_eq!(lines.len(), 1 + 2 + 2);
        assert!(lines[3].starts_with("mean,"));
        assert!(lines[4].starts_with("std,"));
    }
}
