//! Query workloads and cross-variant benchmarking with an agreement check.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Engine, Variant};
use crate::error::{Error, Result};
use crate::graph::RoadGraph;
use crate::ids::{Cost, VertexId};
use crate::par::{self, Execution};
use crate::router::{Query, RouteResult};

/// Probabilities from different variants must agree this closely.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    /// Inclusive hop-count ranges for source–destination pairs.
    pub buckets: Vec<(usize, usize)>,
    pub multipliers: Vec<f64>,
    pub pairs_per_bucket: usize,
    pub departure: u64,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            buckets: vec![(1, 2), (3, 4), (5, 8)],
            multipliers: vec![0.5, 0.75, 1.0, 1.25, 1.5],
            pairs_per_bucket: 5,
            departure: 0,
            seed: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.pairs_per_bucket == 0 {
            return Err(Error::InvalidParameter("pairs_per_bucket must be at least 1".into()));
        }
        if self.multipliers.iter().any(|&m| m.is_nan() || m <= 0.0) {
            return Err(Error::InvalidParameter("budget multipliers must be positive".into()));
        }
        if self.buckets.iter().any(|&(lo, hi)| lo == 0 || lo > hi) {
            return Err(Error::InvalidParameter("hop buckets need 1 <= low <= high".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadQuery {
    pub query: Query,
    pub bucket: usize,
    pub multiplier: f64,
}

/// Hop distance from `s` to every vertex.
fn hops(g: &RoadGraph, s: VertexId) -> Vec<Option<usize>> {
    let mut d = vec![None; g.vertex_count()];
    d[s.index()] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &e in g.out_edges(v) {
            let w = g.edge(e).to;
            if d[w.index()].is_none() {
                d[w.index()] = Some(d[v.index()].unwrap() + 1);
                q.push_back(w);
            }
        }
    }
    d
}

/// Least expected travel time from `s` under per-edge mean costs.
pub fn least_expected_times(g: &RoadGraph, s: VertexId) -> Vec<Option<f64>> {
    let mut dist: Vec<Option<f64>> = vec![None; g.vertex_count()];
    dist[s.index()] = Some(0.0);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, s.0)));
    // Means are scaled to integers for the heap; the stored value stays exact.
    let scale = 1e9;
    while let Some(Reverse((_, vid))) = heap.pop() {
        let v = VertexId(vid);
        let dv = dist[v.index()].unwrap();
        for &e in g.out_edges(v) {
            let edge = g.edge(e);
            let nd = dv + edge.weight.mean();
            let w = edge.to.index();
            if dist[w].is_none_or(|o| nd < o - 1e-12) {
                dist[w] = Some(nd);
                heap.push(Reverse(((nd * scale) as u64, edge.to.0)));
            }
        }
    }
    dist
}

/// Source–destination pairs sampled per hop bucket, each crossed with every
/// budget multiplier of the least expected travel time.
pub fn generate_workload(g: &RoadGraph, spec: &WorkloadSpec) -> Result<Vec<WorkloadQuery>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut by_bucket: Vec<Vec<(VertexId, VertexId, f64)>> = vec![Vec::new(); spec.buckets.len()];
    for s in g.vertices() {
        let h = hops(g, s);
        let let_ = least_expected_times(g, s);
        for d in g.vertices() {
            let (Some(k), Some(t)) = (h[d.index()], let_[d.index()]) else { continue };
            if let Some(b) = spec.buckets.iter().position(|&(lo, hi)| (lo..=hi).contains(&k)) {
                by_bucket[b].push((s, d, t));
            }
        }
    }
    let mut out = Vec::new();
    for (b, pairs) in by_bucket.iter_mut().enumerate() {
        pairs.shuffle(&mut rng);
        for &(s, d, t) in pairs.iter().take(spec.pairs_per_bucket) {
            for &m in &spec.multipliers {
                let budget = (m * t).round() as Cost;
                out.push(WorkloadQuery {
                    query: Query { source: s, dest: d, departure: spec.departure, budget },
                    bucket: b,
                    multiplier: m,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measured {
    pub result: RouteResult,
    pub wall: Duration,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct CellSummary {
    pub variant: String,
    pub bucket: String,
    pub multiplier: f64,
    pub queries: usize,
    pub mean_wall_ms: f64,
    pub mean_explored: f64,
    pub zero_probability: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchReport {
    pub cells: Vec<CellSummary>,
    #[serde(skip)]
    pub runs: Vec<Vec<Measured>>,
}

impl BenchReport {
    /// Tab-separated lines with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("variant\tbucket\tmultiplier\tqueries\tmean_wall_ms\tmean_explored\tzero_probability\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.3}\t{:.1}\t{}\n",
                c.variant, c.bucket, c.multiplier, c.queries, c.mean_wall_ms, c.mean_explored, c.zero_probability
            ));
        }
        out
    }
}

/// Runs every variant on every query. Fails with the offending query when
/// two variants return different probabilities.
pub fn run_bench(
    engine: &Engine,
    workload: &[WorkloadQuery],
    spec: &WorkloadSpec,
    variants: &[Variant],
    exec: Execution,
) -> Result<BenchReport> {
    if variants.is_empty() {
        return Err(Error::InvalidParameter("no variants given".into()));
    }
    let runs: Vec<Vec<Measured>> = par::map(exec, workload, |wq| {
        variants
            .iter()
            .map(|&v| {
                let start = Instant::now();
                let result = engine.run(v, &wq.query)?;
                Ok(Measured { result, wall: start.elapsed() })
            })
            .collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    for (wq, row) in workload.iter().zip(&runs) {
        let p0 = row[0].result.probability;
        for (v, m) in variants.iter().zip(row).skip(1) {
            if (m.result.probability - p0).abs() > AGREEMENT_TOLERANCE {
                let q = &wq.query;
                return Err(Error::Disagreement(format!(
                    "query {} {} {} {}: {} gives {:.12}, {} gives {:.12}",
                    q.source, q.dest, q.departure, q.budget, variants[0], p0, v, m.result.probability
                )));
            }
        }
    }

    let mut cells: BTreeMap<(usize, usize, usize), CellSummary> = BTreeMap::new();
    for (wq, row) in workload.iter().zip(&runs) {
        let mi = spec.multipliers.iter().position(|&m| m == wq.multiplier).unwrap_or(0);
        for (vi, m) in row.iter().enumerate() {
            let (lo, hi) = spec.buckets[wq.bucket];
            let c = cells.entry((vi, wq.bucket, mi)).or_insert_with(|| CellSummary {
                variant: variants[vi].to_string(),
                bucket: format!("{lo}-{hi}"),
                multiplier: wq.multiplier,
                ..CellSummary::default()
            });
            c.queries += 1;
            c.mean_wall_ms += m.wall.as_secs_f64() * 1e3;
            c.mean_explored += m.result.explored as f64;
            if m.result.probability == 0.0 {
                c.zero_probability += 1;
            }
        }
    }
    let cells = cells
        .into_values()
        .map(|mut c| {
            c.mean_wall_ms /= c.queries as f64;
            c.mean_explored /= c.queries as f64;
            c
        })
        .collect();
    Ok(BenchReport { cells, runs })
}
