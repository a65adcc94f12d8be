//! Virtual paths: overlapping T-paths assembled offline so that every path
//! distribution becomes a plain convolution of unit totals.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::dist::{convolve, overlap_len, total_cost, CostDistribution, JointDistribution};
use crate::error::{Error, Result};
use crate::graph::{greedy_cover, run_joint, split_runs, CoverUnit, PaceGraph, Placed, RoadGraph, TPathLookup};
use crate::ids::{EdgeId, VertexId};
use crate::par::{self, Execution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnitKind {
    Edge,
    TPath,
    VPath,
}

impl UnitKind {
    pub fn tag(self) -> char {
        match self {
            UnitKind::Edge => 'E',
            UnitKind::TPath => 'T',
            UnitKind::VPath => 'V',
        }
    }
}

/// A virtual path assembled from overlapping T-paths.
#[derive(Clone, Debug)]
pub struct VPath {
    pub edges: Vec<EdgeId>,
    pub vertices: Vec<VertexId>,
    pub joint: JointDistribution,
    pub total: CostDistribution,
    /// T-path indices of the cover the joint was assembled from.
    pub constituents: Vec<usize>,
}

/// Borrowed view of an edge sequence and what kind of unit it is.
#[derive(Clone, Copy, Debug)]
pub struct PathUnit<'a> {
    pub edges: &'a [EdgeId],
    pub kind: UnitKind,
}

/// Combines two units overlapping on a suffix/prefix into a V-path.
///
/// Returns `None` when the merged sequence is already a T-path or would
/// revisit a vertex. The joint is assembled over the coarsest cover of the
/// merged sequence, which for two chained T-paths is exactly `a` then `b`.
pub fn combine(a: PathUnit<'_>, b: PathUnit<'_>, g: &PaceGraph) -> Result<Option<VPath>> {
    let k = overlap_len(a.edges, b.edges).map_err(|_| Error::NoOverlap)?;
    if k == 0 {
        return Err(Error::NoOverlap);
    }
    let mut edges = a.edges.to_vec();
    edges.extend_from_slice(&b.edges[k..]);
    if g.tpath_by_sequence(&edges).is_some() {
        return Ok(None);
    }
    let vertices = g.base.path_vertices(&edges)?;
    let mut seen = HashSet::with_capacity(vertices.len());
    if !vertices.iter().all(|v| seen.insert(*v)) {
        return Ok(None);
    }
    let cover = greedy_cover(&edges, g);
    let joint = run_joint(&cover, g)?;
    let total = total_cost(&joint);
    let constituents = cover
        .iter()
        .filter_map(|p| match p.unit {
            CoverUnit::TPath(t) => Some(t),
            CoverUnit::Edge(_) => None,
        })
        .collect();
    Ok(Some(VPath { edges, vertices, joint, total, constituents }))
}

#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    /// Longest V-path to build, in edges. `None` means unlimited.
    pub max_len: Option<usize>,
    pub execution: Option<Execution>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// New V-paths produced by each iteration.
    pub per_iteration: Vec<usize>,
}

/// Edge, T-path or V-path with its total-cost distribution.
#[derive(Clone, Debug)]
pub struct Unit {
    pub name: String,
    pub kind: UnitKind,
    pub edges: Vec<EdgeId>,
    pub vertices: Vec<VertexId>,
    pub total: CostDistribution,
    pub support: u64,
}

impl Unit {
    pub fn from(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn to(&self) -> VertexId {
        *self.vertices.last().unwrap()
    }

    pub fn min_cost(&self) -> u32 {
        self.total.min_cost()
    }
}

/// Road graph with edges, T-paths and V-paths as routable units.
///
/// Unit indices: edges first (same order as the road graph), then T-paths,
/// then V-paths.
#[derive(Clone, Debug)]
pub struct UpdatedPaceGraph {
    pub base: RoadGraph,
    pub period_tag: String,
    units: Vec<Unit>,
    tpath_offset: usize,
    vpath_offset: usize,
    by_sequence: HashMap<Vec<EdgeId>, usize>,
    out_units: Vec<Vec<usize>>,
    in_units: Vec<Vec<usize>>,
    tpaths_by_first: HashMap<EdgeId, Vec<usize>>,
    /// (e_i, e_{i+1}) -> (tpath index, offset of e_i)
    tpath_pairs: HashMap<(EdgeId, EdgeId), Vec<(usize, usize)>>,
    self_canonical: Vec<bool>,
    tpath_joints: Option<Vec<JointDistribution>>,
    max_tpath_len: usize,
}

impl TPathLookup for UpdatedPaceGraph {
    fn tpaths_from(&self, e: EdgeId) -> &[usize] {
        self.tpaths_by_first.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }

    fn tpath_edges(&self, t: usize) -> &[EdgeId] {
        &self.units[self.tpath_offset + t].edges
    }

    fn tpath_rank(&self, t: usize) -> (std::cmp::Reverse<u64>, &str) {
        let u = &self.units[self.tpath_offset + t];
        (std::cmp::Reverse(u.support), u.name.as_str())
    }
}

/// Raw T-path or V-path record, as stored in a unit file.
#[derive(Clone, Debug)]
pub struct UnitRecord {
    pub name: String,
    pub kind: UnitKind,
    pub edges: Vec<EdgeId>,
    pub total: CostDistribution,
    pub support: u64,
}

impl UpdatedPaceGraph {
    /// Assembles the unit set from T-path and V-path records. T-path records
    /// must come before V-path records.
    pub fn from_records(
        base: RoadGraph,
        period_tag: &str,
        records: Vec<UnitRecord>,
        tpath_joints: Option<Vec<JointDistribution>>,
    ) -> Result<Self> {
        let mut units = Vec::with_capacity(base.edge_count() + records.len());
        for e in base.edge_ids() {
            let edge = base.edge(e);
            units.push(Unit {
                name: edge.name.clone(),
                kind: UnitKind::Edge,
                edges: vec![e],
                vertices: vec![edge.from, edge.to],
                total: edge.weight.clone(),
                support: 0,
            });
        }
        let tpath_offset = units.len();
        let mut seen_v = false;
        for r in records {
            match r.kind {
                UnitKind::Edge => return Err(Error::InvalidGraph("edge records belong in the graph file".into())),
                UnitKind::TPath if seen_v => return Err(Error::InvalidGraph("T-path records must precede V-path records".into())),
                UnitKind::VPath => seen_v = true,
                UnitKind::TPath => {}
            }
            if r.edges.len() < 2 {
                return Err(Error::InvalidGraph(format!("unit '{}' has fewer than two edges", r.name)));
            }
            if !base.is_simple_path(&r.edges) {
                return Err(Error::InvalidGraph(format!("unit '{}' is not a simple path", r.name)));
            }
            if r.total.min_cost() == 0 {
                return Err(Error::InvalidGraph(format!("unit '{}' has a zero-cost support point", r.name)));
            }
            let vertices = base.path_vertices(&r.edges)?;
            units.push(Unit { name: r.name, kind: r.kind, edges: r.edges, vertices, total: r.total, support: r.support });
        }
        let vpath_offset = units.iter().position(|u| u.kind == UnitKind::VPath).unwrap_or(units.len());
        if let Some(j) = &tpath_joints {
            if j.len() != vpath_offset - tpath_offset {
                return Err(Error::InvalidGraph("T-path joint count mismatch".into()));
            }
        }

        let mut by_sequence = HashMap::new();
        let mut out_units = vec![Vec::new(); base.vertex_count()];
        let mut in_units = vec![Vec::new(); base.vertex_count()];
        for (i, u) in units.iter().enumerate() {
            if by_sequence.insert(u.edges.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate unit sequence '{}'", u.name)));
            }
            out_units[u.from().index()].push(i);
            in_units[u.to().index()].push(i);
        }
        let mut tpaths_by_first: HashMap<EdgeId, Vec<usize>> = HashMap::new();
        let mut tpath_pairs: HashMap<(EdgeId, EdgeId), Vec<(usize, usize)>> = HashMap::new();
        let mut max_tpath_len = 1;
        for t in 0..vpath_offset - tpath_offset {
            let edges = &units[tpath_offset + t].edges;
            tpaths_by_first.entry(edges[0]).or_default().push(t);
            for (o, w) in edges.windows(2).enumerate() {
                tpath_pairs.entry((w[0], w[1])).or_default().push((t, o));
            }
            max_tpath_len = max_tpath_len.max(edges.len());
        }
        let mut g = Self {
            base,
            period_tag: period_tag.to_string(),
            units,
            tpath_offset,
            vpath_offset,
            by_sequence,
            out_units,
            in_units,
            tpaths_by_first,
            tpath_pairs,
            self_canonical: Vec::new(),
            tpath_joints,
            max_tpath_len,
        };
        g.self_canonical = (0..g.units.len())
            .map(|i| {
                let segs = g.decompose(&g.units[i].edges);
                segs.len() == 1 && segs[0].unit == Some(i)
            })
            .collect();
        Ok(g)
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, i: usize) -> &Unit {
        &self.units[i]
    }

    pub fn unit_by_sequence(&self, edges: &[EdgeId]) -> Option<usize> {
        self.by_sequence.get(edges).copied()
    }

    pub fn units_from(&self, v: VertexId) -> &[usize] {
        &self.out_units[v.index()]
    }

    pub fn units_into(&self, v: VertexId) -> &[usize] {
        &self.in_units[v.index()]
    }

    pub fn tpath_count(&self) -> usize {
        self.vpath_offset - self.tpath_offset
    }

    pub fn vpath_count(&self) -> usize {
        self.units.len() - self.vpath_offset
    }

    pub fn vpaths(&self) -> &[Unit] {
        &self.units[self.vpath_offset..]
    }

    pub fn tpath_units(&self) -> &[Unit] {
        &self.units[self.tpath_offset..self.vpath_offset]
    }

    pub fn max_tpath_len(&self) -> usize {
        self.max_tpath_len
    }

    /// True when the unit's own edge sequence decomposes to exactly itself.
    pub fn is_self_canonical(&self, unit: usize) -> bool {
        self.self_canonical[unit]
    }

    /// Does a T-path lying inside `path` straddle position `boundary`
    /// (start before it, end after it)?
    pub fn tpath_crosses(&self, path: &[EdgeId], boundary: usize) -> bool {
        if boundary == 0 || boundary >= path.len() {
            return false;
        }
        let Some(hits) = self.tpath_pairs.get(&(path[boundary - 1], path[boundary])) else {
            return false;
        };
        hits.iter().any(|&(t, o)| {
            let edges = self.tpath_edges(t);
            let Some(start) = (boundary - 1).checked_sub(o) else { return false };
            let end = start + edges.len();
            end <= path.len() && path[start..end] == edges[..]
        })
    }

    /// Splits `path` into non-overlapping segments, one per run of the
    /// coarsest cover. `unit` is `None` for a run with no recorded V-path.
    pub fn decompose(&self, path: &[EdgeId]) -> Vec<Segment> {
        let cover = greedy_cover(path, self);
        split_runs(&cover)
            .into_iter()
            .map(|run| {
                let start = run[0].start;
                let end = run[run.len() - 1].end;
                let unit = match run {
                    [single] => Some(self.cover_unit_index(single)),
                    _ => self.unit_by_sequence(&path[start..end]),
                };
                Segment { start, end, unit, run: run.to_vec() }
            })
            .collect()
    }

    fn cover_unit_index(&self, p: &Placed) -> usize {
        match p.unit {
            CoverUnit::Edge(e) => e.index(),
            CoverUnit::TPath(t) => self.tpath_offset + t,
        }
    }

    fn run_total_fallback(&self, seg: &Segment) -> Result<CostDistribution> {
        let joints =
            self.tpath_joints.as_ref().ok_or_else(|| Error::InvalidGraph("run has no V-path and T-path joints were not loaded".into()))?;
        let joint_of = |p: &Placed| match p.unit {
            CoverUnit::Edge(e) => JointDistribution::single(e, &self.base.edge(e).weight),
            CoverUnit::TPath(t) => joints[t].clone(),
        };
        let mut acc = joint_of(&seg.run[0]);
        for p in &seg.run[1..] {
            acc = crate::dist::assemble(&acc, &joint_of(p))?;
        }
        Ok(total_cost(&acc))
    }
}

/// One run of a decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub unit: Option<usize>,
    pub run: Vec<Placed>,
}

/// Distribution of `path` as the convolution of its decomposition's unit
/// totals. Runs without a recorded V-path fall back to assembly.
pub fn convolution_path_distribution(path: &[EdgeId], g: &UpdatedPaceGraph) -> Result<CostDistribution> {
    if path.is_empty() {
        return Ok(CostDistribution::point(0));
    }
    g.base.path_vertices(path)?;
    let mut acc: Option<CostDistribution> = None;
    for seg in g.decompose(path) {
        let fallback;
        let total = match seg.unit {
            Some(u) => &g.unit(u).total,
            None => {
                fallback = g.run_total_fallback(&seg)?;
                &fallback
            }
        };
        acc = Some(match acc {
            None => total.clone(),
            Some(a) => convolve(&a, total),
        });
    }
    Ok(acc.expect("non-empty path"))
}

/// Iteratively combines overlapping T-paths, then overlapping units that
/// involve a V-path, until no new sequence appears.
pub fn build_vpaths(g: &PaceGraph, opts: &BuildOptions) -> Result<(UpdatedPaceGraph, BuildStats)> {
    let exec = opts.execution.unwrap_or_default();
    let tpaths: Vec<(Vec<EdgeId>, UnitKind)> = g.tpaths().iter().map(|t| (t.edges.clone(), UnitKind::TPath)).collect();
    let mut all: Vec<(Vec<EdgeId>, UnitKind)> = tpaths;
    let mut known: HashSet<Vec<EdgeId>> = all.iter().map(|u| u.0.clone()).collect();
    let mut vpaths: Vec<VPath> = Vec::new();
    let mut stats = BuildStats::default();
    let mut fresh: HashSet<usize> = (0..all.len()).collect();
    let limit = g.base.vertex_count();

    for iteration in 0.. {
        if fresh.is_empty() || iteration >= limit {
            break;
        }
        let mut by_first: HashMap<EdgeId, Vec<usize>> = HashMap::new();
        for (i, (edges, _)) in all.iter().enumerate() {
            by_first.entry(edges[0]).or_default().push(i);
        }
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (a, (ae, ak)) in all.iter().enumerate() {
            for pos in 1..ae.len() {
                for &b in by_first.get(&ae[pos]).map(Vec::as_slice).unwrap_or(&[]) {
                    if a == b || !(fresh.contains(&a) || fresh.contains(&b)) {
                        continue;
                    }
                    let bk = all[b].1;
                    let tt = *ak == UnitKind::TPath && bk == UnitKind::TPath;
                    if (iteration == 0) != tt {
                        continue;
                    }
                    let be = &all[b].0;
                    let k = ae.len() - pos;
                    if k >= be.len() || ae[pos..] != be[..k] {
                        continue;
                    }
                    if opts.max_len.is_some_and(|cap| ae.len() + be.len() - k > cap) {
                        continue;
                    }
                    pairs.push((a, b));
                }
            }
        }
        let results = par::map(exec, &pairs, |&(a, b)| {
            combine(PathUnit { edges: &all[a].0, kind: all[a].1 }, PathUnit { edges: &all[b].0, kind: all[b].1 }, g)
        });
        let mut produced: BTreeMap<Vec<EdgeId>, VPath> = BTreeMap::new();
        for r in results {
            if let Some(v) = r? {
                if !known.contains(&v.edges) {
                    produced.entry(v.edges.clone()).or_insert(v);
                }
            }
        }
        stats.per_iteration.push(produced.len());
        fresh.clear();
        for (edges, v) in produced {
            known.insert(edges.clone());
            fresh.insert(all.len());
            all.push((edges, UnitKind::VPath));
            vpaths.push(v);
        }
    }
    if stats.per_iteration.last() == Some(&0) {
        stats.per_iteration.pop();
    }

    let mut records: Vec<UnitRecord> = g
        .tpaths()
        .iter()
        .map(|t| UnitRecord {
            name: t.name.clone(),
            kind: UnitKind::TPath,
            edges: t.edges.clone(),
            total: t.total.clone(),
            support: t.support,
        })
        .collect();
    for (i, v) in vpaths.iter().enumerate() {
        records.push(UnitRecord {
            name: format!("x{i}"),
            kind: UnitKind::VPath,
            edges: v.edges.clone(),
            total: v.total.clone(),
            support: 0,
        });
    }
    let joints = g.tpaths().iter().map(|t| t.joint.clone()).collect();
    let updated = UpdatedPaceGraph::from_records(g.base.clone(), &g.period_tag, records, Some(joints))?;
    Ok((updated, stats))
}
