//! Reproducible synthetic road networks and trajectories with controllable
//! cost dependency along popular paths.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::CostDistribution;
use crate::error::{Error, Result};
use crate::graph::{extract_tpaths, PaceGraph, RoadGraph, Trajectory};
use crate::ids::{EdgeId, VertexId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub vertices: usize,
    /// Out-edges per vertex towards its nearest neighbours, besides the ring.
    pub out_degree: usize,
    /// Number of popular paths trajectories concentrate on.
    pub seeds: usize,
    pub seed_min_len: usize,
    pub seed_max_len: usize,
    /// Each popular path starts with the last edge of the previous one.
    pub chained: bool,
    /// Probability that an edge on a trip follows the trip-wide congestion
    /// state instead of drawing its own: 1 = fully correlated, 0 = independent.
    pub dependency: f64,
    pub trajectories: usize,
    /// Share of trips that follow a popular path.
    pub popular_share: f64,
    pub max_walk_len: usize,
    pub slow_prob: f64,
    /// Slow cost is base + ceil(base * slow_factor).
    pub slow_factor: f64,
    /// Probability of adding one unit of cost to an observation.
    pub noise: f64,
    pub period_tags: Vec<String>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            vertices: 12,
            out_degree: 2,
            seeds: 2,
            seed_min_len: 3,
            seed_max_len: 3,
            chained: true,
            dependency: 1.0,
            trajectories: 200,
            popular_share: 0.7,
            max_walk_len: 4,
            slow_prob: 0.3,
            slow_factor: 0.5,
            noise: 0.0,
            period_tags: vec!["all".to_string()],
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.vertices < 2 || self.trajectories == 0 || self.seed_min_len == 0 || self.max_walk_len == 0 {
            return bad("vertex, trajectory and length counts must be positive");
        }
        if self.seed_min_len > self.seed_max_len {
            return bad("seed_min_len exceeds seed_max_len");
        }
        for (name, p) in
            [("dependency", self.dependency), ("popular_share", self.popular_share), ("slow_prob", self.slow_prob), ("noise", self.noise)]
        {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.slow_factor < 0.0 {
            return bad("slow_factor must be non-negative");
        }
        if self.period_tags.is_empty() {
            return bad("at least one period tag is needed");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub graph: RoadGraph,
    pub trajectories: Vec<Trajectory>,
    /// The popular paths, as generated.
    pub seeds: Vec<Vec<EdgeId>>,
}

struct Costs {
    base: Vec<u32>,
    slow: Vec<u32>,
}

fn build_graph(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<(RoadGraph, Costs)> {
    let n = spec.vertices;
    let mut g = RoadGraph::new();
    let coords: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0))).collect();
    for (i, &c) in coords.iter().enumerate() {
        g.add_vertex(&format!("v{i}"), Some(c))?;
    }
    let dist = |a: usize, b: usize| ((coords[a].0 - coords[b].0).powi(2) + (coords[a].1 - coords[b].1).powi(2)).sqrt();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        pairs.push((i, (i + 1) % n));
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)));
        for &j in others.iter().take(spec.out_degree) {
            pairs.push((i, j));
        }
    }
    pairs.sort();
    pairs.dedup();
    let mut costs = Costs { base: Vec::new(), slow: Vec::new() };
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let base = ((dist(a, b) / 5.0).ceil() as u32).max(2);
        let slow = base + (f64::from(base) * spec.slow_factor).ceil() as u32;
        let weight = if slow == base {
            CostDistribution::point(base)
        } else {
            CostDistribution::new([(base, 1.0 - spec.slow_prob), (slow, spec.slow_prob)].into_iter().filter(|p| p.1 > 0.0))?
        };
        g.add_edge(&format!("e{k}"), VertexId(a as u32), VertexId(b as u32), weight)?;
        costs.base.push(base);
        costs.slow.push(slow);
    }
    Ok((g, costs))
}

/// Random vertex-simple walk of up to `len` edges from `start`, avoiding
/// `blocked` vertices.
fn walk(g: &RoadGraph, start: VertexId, len: usize, blocked: &[VertexId], rng: &mut ChaCha8Rng) -> Vec<EdgeId> {
    let mut seen: Vec<VertexId> = blocked.to_vec();
    seen.push(start);
    let mut at = start;
    let mut out = Vec::new();
    while out.len() < len {
        let options: Vec<EdgeId> = g.out_edges(at).iter().copied().filter(|&e| !seen.contains(&g.edge(e).to)).collect();
        let Some(&e) = options.choose(rng) else { break };
        at = g.edge(e).to;
        seen.push(at);
        out.push(e);
    }
    out
}

fn pick_seeds(spec: &SyntheticSpec, g: &RoadGraph, rng: &mut ChaCha8Rng) -> Vec<Vec<EdgeId>> {
    let mut seeds: Vec<Vec<EdgeId>> = Vec::new();
    let mut used: Vec<VertexId> = Vec::new();
    for _ in 0..spec.seeds {
        let len = rng.gen_range(spec.seed_min_len..=spec.seed_max_len);
        let mut found = None;
        for _ in 0..50 {
            let path = match seeds.last() {
                Some(prev) if spec.chained => {
                    let last = *prev.last().unwrap();
                    let from = g.edge(last).to;
                    let blocked: Vec<VertexId> = used.iter().copied().filter(|&v| v != from).collect();
                    let mut p = vec![last];
                    p.extend(walk(g, from, len - 1, &blocked, rng));
                    p
                }
                _ => {
                    let start = VertexId(rng.gen_range(0..g.vertex_count()) as u32);
                    walk(g, start, len, &[], rng)
                }
            };
            if path.len() == len {
                found = Some(path);
                break;
            }
        }
        let Some(path) = found else { break };
        used.extend(g.path_vertices(&path).unwrap());
        seeds.push(path);
    }
    seeds
}

/// Graph plus trajectories. The same spec and seed give identical output.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (graph, costs) = build_graph(spec, &mut rng)?;
    let seeds = pick_seeds(spec, &graph, &mut rng);
    let mut trajectories = Vec::with_capacity(spec.trajectories);
    for _ in 0..spec.trajectories {
        let path = if !seeds.is_empty() && rng.gen_bool(spec.popular_share) {
            seeds[rng.gen_range(0..seeds.len())].clone()
        } else {
            let mut p = Vec::new();
            while p.is_empty() {
                let start = VertexId(rng.gen_range(0..graph.vertex_count()) as u32);
                let len = rng.gen_range(1..=spec.max_walk_len);
                p = walk(&graph, start, len, &[], &mut rng);
            }
            p
        };
        let congested = rng.gen_bool(spec.slow_prob);
        let raw: Vec<(EdgeId, f64)> = path
            .iter()
            .map(|&e| {
                let slow = if rng.gen_bool(spec.dependency) { congested } else { rng.gen_bool(spec.slow_prob) };
                let mut c = if slow { costs.slow[e.index()] } else { costs.base[e.index()] };
                if rng.gen_bool(spec.noise) {
                    c += 1;
                }
                (e, f64::from(c))
            })
            .collect();
        let tag = &spec.period_tags[rng.gen_range(0..spec.period_tags.len())];
        trajectories.push(Trajectory::new(&graph, tag, &raw)?);
    }
    Ok(Synthetic { graph, trajectories, seeds })
}

/// Small instance for exhaustive checks: 8–14 vertices, two chained popular
/// paths, and at most `max_tpaths` T-paths (τ is raised until that holds).
pub fn desk_instance(seed: u64, max_tpaths: usize) -> Result<PaceGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let spec = SyntheticSpec { vertices: rng.gen_range(8..=14), ..SyntheticSpec::default() };
    let syn = generate_synthetic(&spec, seed)?;
    let mut tau = 30;
    loop {
        let g = extract_tpaths(&syn.trajectories, &syn.graph, tau, "all")?;
        if g.tpaths().len() <= max_tpaths {
            return Ok(g);
        }
        tau += 10;
    }
}

/// Instance with one long chain of overlapping popular paths.
pub fn chain_instance(seed: u64) -> Result<PaceGraph> {
    let spec = SyntheticSpec {
        vertices: 14,
        seeds: 4,
        seed_min_len: 2,
        seed_max_len: 3,
        trajectories: 400,
        popular_share: 0.8,
        ..SyntheticSpec::default()
    };
    let syn = generate_synthetic(&spec, seed)?;
    extract_tpaths(&syn.trajectories, &syn.graph, 30, "all")
}
