//! K-fold evaluation of path cost estimates against held-out trajectories.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::dist::{convolve, kl_divergence_smoothed, CostDistribution, KL_SMOOTHING};
use crate::error::{Error, Result};
use crate::graph::{extract_tpaths, path_distribution, RoadGraph, Trajectory};
use crate::ids::{Cost, EdgeId};
use crate::par::{self, Execution};

#[derive(Clone, Debug)]
pub struct KlOptions {
    pub tau: u64,
    pub folds: usize,
    /// Test paths need at least this many held-out trips to form a ground truth.
    pub min_occurrences: usize,
    pub execution: Execution,
}

impl Default for KlOptions {
    fn default() -> Self {
        KlOptions { tau: 30, folds: 5, min_occurrences: 10, execution: Execution::default() }
    }
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct FoldKl {
    /// Mean KL of the T-path based estimate.
    pub pace: f64,
    /// Mean KL of convolving edge histograms.
    pub edge: f64,
    pub paths: usize,
    /// Test paths using an edge no training trip traversed.
    pub uncovered: usize,
    pub tpaths: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KlReport {
    pub folds: Vec<FoldKl>,
    pub pace_mean: f64,
    pub pace_ci95: f64,
    pub edge_mean: f64,
    pub edge_ci95: f64,
    pub uncovered: usize,
}

fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

fn one_fold(train: &[Trajectory], test: &[Trajectory], graph: &RoadGraph, opts: &KlOptions) -> Result<FoldKl> {
    let pace = extract_tpaths(train, graph, opts.tau, "eval")?;
    let seen: HashSet<EdgeId> = train.iter().flat_map(|t| t.steps.iter().map(|s| s.0)).collect();
    let mut totals: BTreeMap<Vec<EdgeId>, Vec<Cost>> = BTreeMap::new();
    for t in test {
        totals.entry(t.edges()).or_default().push(t.steps.iter().map(|s| s.1).sum());
    }
    let mut fold = FoldKl { tpaths: pace.tpaths().len(), ..FoldKl::default() };
    let (mut pace_sum, mut edge_sum) = (0.0, 0.0);
    for (path, samples) in totals {
        if samples.len() < opts.min_occurrences || !graph.is_simple_path(&path) {
            continue;
        }
        if path.iter().any(|e| !seen.contains(e)) {
            fold.uncovered += 1;
            continue;
        }
        let truth = CostDistribution::from_samples(samples)?;
        let estimate = path_distribution(&path, &pace)?;
        let edge = path.iter().map(|&e| pace.base.edge(e).weight.clone()).reduce(|a, b| convolve(&a, &b)).expect("non-empty path");
        pace_sum += kl_divergence_smoothed(&truth, &estimate, KL_SMOOTHING)?;
        edge_sum += kl_divergence_smoothed(&truth, &edge, KL_SMOOTHING)?;
        fold.paths += 1;
    }
    if fold.paths > 0 {
        fold.pace = pace_sum / fold.paths as f64;
        fold.edge = edge_sum / fold.paths as f64;
    }
    Ok(fold)
}

/// Trip `i` is tested in fold `i % folds` and trains every other fold.
/// With `folds == 1` training and testing both use every trip.
pub fn eval_kl(trajectories: &[Trajectory], graph: &RoadGraph, opts: &KlOptions) -> Result<KlReport> {
    if opts.folds == 0 {
        return Err(Error::InvalidParameter("folds must be at least 1".into()));
    }
    if trajectories.len() < opts.folds {
        return Err(Error::InvalidParameter("fewer trajectories than folds".into()));
    }
    let ids: Vec<usize> = (0..opts.folds).collect();
    let folds = par::map(opts.execution, &ids, |&k| {
        if opts.folds == 1 {
            return one_fold(trajectories, trajectories, graph, opts);
        }
        let (test, train): (Vec<_>, Vec<_>) = trajectories.iter().enumerate().partition(|(i, _)| i % opts.folds == k);
        let test: Vec<Trajectory> = test.into_iter().map(|(_, t)| t.clone()).collect();
        let train: Vec<Trajectory> = train.into_iter().map(|(_, t)| t.clone()).collect();
        one_fold(&train, &test, graph, opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pace: Vec<f64> = folds.iter().map(|f| f.pace).collect();
    let edge: Vec<f64> = folds.iter().map(|f| f.edge).collect();
    let (pace_mean, pace_ci95) = mean_ci(&pace);
    let (edge_mean, edge_ci95) = mean_ci(&edge);
    let uncovered = folds.iter().map(|f| f.uncovered).sum();
    Ok(KlReport { folds, pace_mean, pace_ci95, edge_mean, edge_ci95, uncovered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SyntheticSpec};

    fn data(n: usize, dependency: f64, seed: u64) -> (RoadGraph, Vec<Trajectory>) {
        let spec = SyntheticSpec { trajectories: n, dependency, popular_share: 0.9, ..SyntheticSpec::default() };
        let s = generate_synthetic(&spec, seed).unwrap();
        (s.graph, s.trajectories)
    }

    #[test]
    fn same_data_for_train_and_test_is_exact_on_tpaths() {
        let (g, ts) = data(600, 1.0, 2);
        let r = eval_kl(&ts, &g, &KlOptions { folds: 1, tau: 20, ..Default::default() }).unwrap();
        assert!(r.folds[0].paths > 0);
        assert!(r.pace_mean < 1e-4, "{}", r.pace_mean);
    }

    #[test]
    fn huge_tau_equals_edge_baseline() {
        let (g, ts) = data(500, 1.0, 3);
        let r = eval_kl(&ts, &g, &KlOptions { tau: 1_000_000, ..Default::default() }).unwrap();
        for f in &r.folds {
            assert_eq!(f.tpaths, 0);
            assert!((f.pace - f.edge).abs() < 1e-12);
        }
    }

    #[test]
    fn folds_partition_trajectories() {
        let (g, ts) = data(50, 0.5, 4);
        assert!(eval_kl(&ts, &g, &KlOptions { folds: 0, ..Default::default() }).is_err());
        let r = eval_kl(&ts, &g, &KlOptions { folds: 5, min_occurrences: 1, ..Default::default() }).unwrap();
        assert_eq!(r.folds.len(), 5);
    }

    #[test]
    fn confidence_interval() {
        let (m, ci) = mean_ci(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((ci - 1.96 / 3f64.sqrt()).abs() < 1e-12);
    }
}
