//! Road networks, trajectories and the path-centric graph built from them.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::dist::{assemble, convolve, total_cost, CostDistribution, JointDistribution};
use crate::error::{Error, Result};
use crate::ids::{Cost, EdgeId, VertexId};

#[derive(Clone, Debug)]
pub struct Vertex {
    pub name: String,
    pub coords: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub name: String,
    pub from: VertexId,
    pub to: VertexId,
    pub weight: CostDistribution,
}

/// Directed road network with one cost distribution per edge.
#[derive(Clone, Debug, Default)]
pub struct RoadGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_index: HashMap<String, VertexId>,
    edge_index: HashMap<String, EdgeId>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

impl RoadGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: &str, coords: Option<(f64, f64)>) -> Result<VertexId> {
        if self.vertex_index.contains_key(name) {
            return Err(Error::InvalidGraph(format!("duplicate vertex '{name}'")));
        }
        let id = VertexId(self.vertices.len() as u32);
        self.vertices.push(Vertex { name: name.to_string(), coords });
        self.vertex_index.insert(name.to_string(), id);
        self.out_edges.push(Vec::new());
        self.in_edges.push(Vec::new());
        Ok(id)
    }

    /// Adds a directed edge. Zero-cost support points are rejected so that
    /// every unit costs at least one grid unit.
    pub fn add_edge(&mut self, name: &str, from: VertexId, to: VertexId, weight: CostDistribution) -> Result<EdgeId> {
        if self.edge_index.contains_key(name) {
            return Err(Error::InvalidGraph(format!("duplicate edge '{name}'")));
        }
        if from.index() >= self.vertices.len() || to.index() >= self.vertices.len() {
            return Err(Error::InvalidGraph(format!("edge '{name}' references an undeclared vertex")));
        }
        if from == to {
            return Err(Error::InvalidGraph(format!("edge '{name}' is a self-loop")));
        }
        if weight.min_cost() == 0 {
            return Err(Error::InvalidGraph(format!("edge '{name}' has a zero-cost support point")));
        }
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge { name: name.to_string(), from, to, weight });
        self.edge_index.insert(name.to_string(), id);
        self.out_edges[from.index()].push(id);
        self.in_edges[to.index()].push(id);
        Ok(id)
    }

    /// Convenience for tests and generators: adds vertices on demand.
    pub fn add_edge_by_name(&mut self, name: &str, from: &str, to: &str, weight: CostDistribution) -> Result<EdgeId> {
        let f = match self.vertex_id(from) {
            Some(v) => v,
            None => self.add_vertex(from, None)?,
        };
        let t = match self.vertex_id(to) {
            Some(v) => v,
            None => self.add_vertex(to, None)?,
        };
        self.add_edge(name, f, t, weight)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.index()]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.index()]
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertices.len() as u32).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len() as u32).map(EdgeId)
    }

    pub fn vertex_id(&self, name: &str) -> Option<VertexId> {
        self.vertex_index.get(name).copied()
    }

    pub fn edge_id(&self, name: &str) -> Option<EdgeId> {
        self.edge_index.get(name).copied()
    }

    pub fn require_vertex(&self, name: &str) -> Result<VertexId> {
        self.vertex_id(name).ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn require_edge(&self, name: &str) -> Result<EdgeId> {
        self.edge_id(name).ok_or_else(|| Error::UnknownEdge(name.to_string()))
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v.index()]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[v.index()]
    }

    pub fn set_weight(&mut self, e: EdgeId, weight: CostDistribution) -> Result<()> {
        if weight.min_cost() == 0 {
            return Err(Error::InvalidGraph(format!("edge '{}' has a zero-cost support point", self.edge(e).name)));
        }
        self.edges[e.index()].weight = weight;
        Ok(())
    }

    pub fn has_coordinates(&self) -> bool {
        self.vertices.iter().all(|v| v.coords.is_some())
    }

    /// Vertex sequence of a connected edge sequence.
    pub fn path_vertices(&self, path: &[EdgeId]) -> Result<Vec<VertexId>> {
        let mut out = Vec::with_capacity(path.len() + 1);
        for (i, &e) in path.iter().enumerate() {
            if e.index() >= self.edges.len() {
                return Err(Error::UnknownEdge(e.to_string()));
            }
            let edge = self.edge(e);
            match out.last() {
                None => {
                    out.push(edge.from);
                }
                Some(&last) if last != edge.from => return Err(Error::Disconnected(i)),
                _ => {}
            }
            out.push(edge.to);
        }
        Ok(out)
    }

    /// Connected and never revisits a vertex.
    pub fn is_simple_path(&self, path: &[EdgeId]) -> bool {
        match self.path_vertices(path) {
            Ok(vs) => {
                let mut seen = HashSet::with_capacity(vs.len());
                vs.into_iter().all(|v| seen.insert(v))
            }
            Err(_) => false,
        }
    }

    pub fn edge_names(&self, path: &[EdgeId]) -> Vec<&str> {
        path.iter().map(|&e| self.edge(e).name.as_str()).collect()
    }
}

/// A map-matched trip: edge sequence with observed per-edge costs.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub period_tag: String,
    pub steps: Vec<(EdgeId, Cost)>,
}

impl Trajectory {
    /// Validates adjacency and rounds costs onto the integer grid (minimum 1).
    pub fn new(graph: &RoadGraph, period_tag: &str, raw: &[(EdgeId, f64)]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidTrajectory("empty trajectory".into()));
        }
        let mut steps = Vec::with_capacity(raw.len());
        for &(e, c) in raw {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidTrajectory(format!("negative cost {c}")));
            }
            steps.push((e, (c.round() as Cost).max(1)));
        }
        let edges: Vec<EdgeId> = steps.iter().map(|s| s.0).collect();
        graph.path_vertices(&edges).map_err(|err| Error::InvalidTrajectory(err.to_string()))?;
        Ok(Self { period_tag: period_tag.to_string(), steps })
    }

    pub fn edges(&self) -> Vec<EdgeId> {
        self.steps.iter().map(|s| s.0).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A path traversed by at least tau trajectories.
#[derive(Clone, Debug)]
pub struct TPath {
    pub name: String,
    pub edges: Vec<EdgeId>,
    pub vertices: Vec<VertexId>,
    pub joint: JointDistribution,
    pub total: CostDistribution,
    pub support: u64,
}

/// Road graph plus T-paths for one time period.
#[derive(Clone, Debug)]
pub struct PaceGraph {
    pub base: RoadGraph,
    pub period_tag: String,
    tpaths: Vec<TPath>,
    by_sequence: HashMap<Vec<EdgeId>, usize>,
    by_first_edge: HashMap<EdgeId, Vec<usize>>,
}

/// Reference to a piece of a path cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoverUnit {
    Edge(EdgeId),
    TPath(usize),
}

/// A unit placed over positions `start..end` of a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Placed {
    pub unit: CoverUnit,
    pub start: usize,
    pub end: usize,
}

impl PaceGraph {
    pub fn new(base: RoadGraph, tpaths: Vec<TPath>, period_tag: &str) -> Result<Self> {
        let mut by_sequence = HashMap::new();
        let mut by_first_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
        for (i, t) in tpaths.iter().enumerate() {
            if t.edges.len() < 2 {
                return Err(Error::InvalidGraph(format!("T-path '{}' has fewer than two edges", t.name)));
            }
            if !base.is_simple_path(&t.edges) {
                return Err(Error::InvalidGraph(format!("T-path '{}' is not a simple connected path", t.name)));
            }
            if t.joint.edges() != t.edges.as_slice() {
                return Err(Error::InvalidGraph(format!("T-path '{}' joint is over other edges", t.name)));
            }
            if t.total.min_cost() == 0 {
                return Err(Error::InvalidGraph(format!("T-path '{}' has a zero-cost support point", t.name)));
            }
            if by_sequence.insert(t.edges.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate T-path sequence '{}'", t.name)));
            }
            by_first_edge.entry(t.edges[0]).or_default().push(i);
        }
        Ok(Self { base, period_tag: period_tag.to_string(), tpaths, by_sequence, by_first_edge })
    }

    /// Builds a T-path record from a joint distribution.
    pub fn make_tpath(base: &RoadGraph, name: &str, joint: JointDistribution, support: u64) -> Result<TPath> {
        let edges = joint.edges().to_vec();
        let vertices = base.path_vertices(&edges)?;
        let total = total_cost(&joint);
        Ok(TPath { name: name.to_string(), edges, vertices, joint, total, support })
    }

    pub fn tpaths(&self) -> &[TPath] {
        &self.tpaths
    }

    pub fn tpath(&self, i: usize) -> &TPath {
        &self.tpaths[i]
    }

    pub fn tpath_by_sequence(&self, edges: &[EdgeId]) -> Option<usize> {
        self.by_sequence.get(edges).copied()
    }

    pub fn tpaths_starting_with(&self, e: EdgeId) -> &[usize] {
        self.by_first_edge.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Longest T-path in edges (1 when there are none).
    pub fn max_tpath_len(&self) -> usize {
        self.tpaths.iter().map(|t| t.edges.len()).max().unwrap_or(1)
    }

    pub fn unit_joint(&self, u: CoverUnit) -> JointDistribution {
        match u {
            CoverUnit::Edge(e) => JointDistribution::single(e, &self.base.edge(e).weight),
            CoverUnit::TPath(i) => self.tpaths[i].joint.clone(),
        }
    }

    pub fn unit_total(&self, u: CoverUnit) -> &CostDistribution {
        match u {
            CoverUnit::Edge(e) => &self.base.edge(e).weight,
            CoverUnit::TPath(i) => &self.tpaths[i].total,
        }
    }
}

/// All contiguous sub-paths of at least two edges, ordered by start then length.
pub fn candidate_subpaths(t: &Trajectory) -> Vec<Vec<EdgeId>> {
    let edges = t.edges();
    let n = edges.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 2..=n {
            out.push(edges[i..j].to_vec());
        }
    }
    out
}

/// Extracts T-paths supported by at least `tau` trajectory occurrences and
/// replaces edge weights with empirical histograms where at least `tau`
/// traversals exist.
pub fn extract_tpaths(trajectories: &[Trajectory], graph: &RoadGraph, tau: u64, period_tag: &str) -> Result<PaceGraph> {
    if tau < 1 {
        return Err(Error::InvalidTau);
    }
    let mut base = graph.clone();
    let mut edge_samples: HashMap<EdgeId, Vec<Cost>> = HashMap::new();
    let mut path_samples: HashMap<Vec<EdgeId>, Vec<Vec<Cost>>> = HashMap::new();
    for t in trajectories {
        let edges = t.edges();
        let costs: Vec<Cost> = t.steps.iter().map(|s| s.1).collect();
        let vertices = graph.path_vertices(&edges)?;
        for (&e, &c) in edges.iter().zip(&costs) {
            edge_samples.entry(e).or_default().push(c);
        }
        let n = edges.len();
        for i in 0..n {
            // Extend while the sub-path stays vertex-simple.
            let mut seen: HashSet<VertexId> = HashSet::new();
            seen.insert(vertices[i]);
            for j in i + 1..=n {
                if !seen.insert(vertices[j]) {
                    break;
                }
                if j - i >= 2 {
                    path_samples.entry(edges[i..j].to_vec()).or_default().push(costs[i..j].to_vec());
                }
            }
        }
    }
    for (e, samples) in edge_samples {
        if samples.len() as u64 >= tau {
            base.set_weight(e, CostDistribution::from_samples(samples)?)?;
        }
    }
    let kept: BTreeMap<Vec<EdgeId>, Vec<Vec<Cost>>> = path_samples.into_iter().filter(|(_, s)| s.len() as u64 >= tau).collect();
    let mut tpaths = Vec::with_capacity(kept.len());
    for (i, (edges, samples)) in kept.into_iter().enumerate() {
        let joint = JointDistribution::from_samples(edges, samples.iter().map(Vec::as_slice))?;
        tpaths.push(PaceGraph::make_tpath(&base, &format!("t{i}"), joint, samples.len() as u64)?);
    }
    PaceGraph::new(base, tpaths, period_tag)
}

/// Splits trajectories by period tag and extracts one graph per tag.
pub fn extract_by_period(trajectories: &[Trajectory], graph: &RoadGraph, tau: u64) -> Result<Vec<PaceGraph>> {
    let mut groups: BTreeMap<&str, Vec<Trajectory>> = BTreeMap::new();
    for t in trajectories {
        groups.entry(t.period_tag.as_str()).or_default().push(t.clone());
    }
    let groups: Vec<(&str, Vec<Trajectory>)> = groups.into_iter().collect();
    crate::par::map(crate::par::Execution::default(), &groups, |(tag, ts)| extract_tpaths(ts, graph, tau, tag)).into_iter().collect()
}

/// Access to T-path edge sequences for building covers.
pub trait TPathLookup {
    /// T-paths whose first edge is `e`.
    fn tpaths_from(&self, e: EdgeId) -> &[usize];
    fn tpath_edges(&self, t: usize) -> &[EdgeId];
    /// Larger support first, then smaller name.
    fn tpath_rank(&self, t: usize) -> (std::cmp::Reverse<u64>, &str);
}

impl TPathLookup for PaceGraph {
    fn tpaths_from(&self, e: EdgeId) -> &[usize] {
        self.tpaths_starting_with(e)
    }

    fn tpath_edges(&self, t: usize) -> &[EdgeId] {
        &self.tpaths[t].edges
    }

    fn tpath_rank(&self, t: usize) -> (std::cmp::Reverse<u64>, &str) {
        let t = &self.tpaths[t];
        (std::cmp::Reverse(t.support), t.name.as_str())
    }
}

/// Left-to-right greedy cover of `path` by T-paths and single edges.
///
/// Each step considers T-paths inside `path` that start after the previous
/// unit's start, no later than the covered end, and reach past it. The one
/// with the earliest start (largest overlap) wins, ties going to the longer
/// T-path, then larger support, then smaller name. Without a candidate the
/// next single edge is used.
pub fn coarsest_path_sequence(path: &[EdgeId], g: &PaceGraph) -> Result<Vec<Placed>> {
    g.base.path_vertices(path)?;
    Ok(greedy_cover(path, g))
}

/// [`coarsest_path_sequence`] without the connectivity check.
pub fn greedy_cover<L: TPathLookup + ?Sized>(path: &[EdgeId], lookup: &L) -> Vec<Placed> {
    let n = path.len();
    // matches[i] = T-paths that start at position i and fit inside the path.
    let matches: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|i| {
            lookup
                .tpaths_from(path[i])
                .iter()
                .filter_map(|&t| {
                    let edges = lookup.tpath_edges(t);
                    (i + edges.len() <= n && path[i..i + edges.len()] == edges[..]).then_some((i + edges.len(), t))
                })
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut prev_start: Option<usize> = None;
    let mut end = 0;
    while end < n {
        let lo = prev_start.map_or(0, |s| s + 1);
        let mut best: Option<(usize, usize)> = None; // (end, tpath)
        let mut best_start = 0;
        for (start, row) in matches.iter().enumerate().take(end + 1).skip(lo) {
            for &(reach, t) in row {
                if reach <= end {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((be, bt)) => (std::cmp::Reverse(reach), lookup.tpath_rank(t)) < (std::cmp::Reverse(be), lookup.tpath_rank(bt)),
                };
                if better {
                    best = Some((reach, t));
                    best_start = start;
                }
            }
            if best.is_some() {
                break;
            }
        }
        match best {
            Some((reach, t)) => {
                out.push(Placed { unit: CoverUnit::TPath(t), start: best_start, end: reach });
                prev_start = Some(best_start);
                end = reach;
            }
            None => {
                out.push(Placed { unit: CoverUnit::Edge(path[end]), start: end, end: end + 1 });
                prev_start = Some(end);
                end += 1;
            }
        }
    }
    out
}

/// Splits a cover into maximal runs of mutually overlapping units.
pub fn split_runs(cover: &[Placed]) -> Vec<&[Placed]> {
    let mut runs = Vec::new();
    let mut begin = 0;
    for i in 1..cover.len() {
        if cover[i].start >= cover[i - 1].end {
            runs.push(&cover[begin..i]);
            begin = i;
        }
    }
    if !cover.is_empty() {
        runs.push(&cover[begin..]);
    }
    runs
}

/// Joint distribution of a run of overlapping units by chained assembly.
pub fn run_joint(run: &[Placed], g: &PaceGraph) -> Result<JointDistribution> {
    let mut acc = g.unit_joint(run[0].unit);
    for p in &run[1..] {
        acc = assemble(&acc, &g.unit_joint(p.unit))?;
    }
    Ok(acc)
}

/// Total-cost distribution of one run.
pub fn run_total(run: &[Placed], g: &PaceGraph) -> Result<CostDistribution> {
    if let [single] = run {
        return Ok(g.unit_total(single.unit).clone());
    }
    Ok(total_cost(&run_joint(run, g)?))
}

/// Cost distribution of a path under the path-centric model: the coarsest
/// cover is assembled run by run, and runs that do not overlap are combined
/// by convolution.
pub fn path_distribution(path: &[EdgeId], g: &PaceGraph) -> Result<CostDistribution> {
    if path.is_empty() {
        return Ok(CostDistribution::point(0));
    }
    let cover = coarsest_path_sequence(path, g)?;
    let mut acc: Option<CostDistribution> = None;
    for run in split_runs(&cover) {
        let t = run_total(run, g)?;
        acc = Some(match acc {
            None => t,
            Some(a) => convolve(&a, &t),
        });
    }
    Ok(acc.expect("non-empty path has a cover"))
}

/// Full joint distribution of a path (left fold of assembly over the cover).
/// Exponential in the number of independent runs; meant for small paths.
pub fn path_joint(path: &[EdgeId], g: &PaceGraph) -> Result<JointDistribution> {
    let cover = coarsest_path_sequence(path, g)?;
    let mut acc = g.unit_joint(cover[0].unit);
    for p in &cover[1..] {
        acc = assemble(&acc, &g.unit_joint(p.unit))?;
    }
    Ok(acc)
}
