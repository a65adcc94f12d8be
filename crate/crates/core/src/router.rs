//! Best-first search for the path that maximizes the probability of
//! arriving within a budget.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use crate::dist::{compare_cdfs, convolve, prob_within, Budget, CdfOrder, CostDistribution};
use crate::error::{Error, Result};
use crate::graph::{greedy_cover, path_distribution, run_total, split_runs, PaceGraph};
use crate::heuristics::Heuristic;
use crate::ids::{Cost, EdgeId, VertexId};
use crate::vpath::UpdatedPaceGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Query {
    pub source: VertexId,
    pub dest: VertexId,
    pub departure: u64,
    pub budget: Cost,
}

#[derive(Clone, Debug)]
pub struct CandidatePath {
    pub path: Vec<EdgeId>,
    pub dist: CostDistribution,
    pub max_prob: f64,
    pub frontier: VertexId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteResult {
    pub path: Vec<EdgeId>,
    pub probability: f64,
    /// Number of candidates pushed onto the queue.
    pub explored: u64,
}

impl RouteResult {
    fn trivial() -> Self {
        RouteResult { path: Vec::new(), probability: 1.0, explored: 0 }
    }

    fn unreachable(explored: u64) -> Self {
        RouteResult { path: Vec::new(), probability: 0.0, explored }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RouteOptions {
    pub dominance_pruning: bool,
}

impl Default for RouteOptions {
    fn default() -> Self {
        RouteOptions { dominance_pruning: true }
    }
}

/// Upper bound on the probability that a completion of a path with cost
/// distribution `dist`, now at `frontier`, arrives within `budget`.
pub fn max_prob(dist: &CostDistribution, frontier: VertexId, budget: Cost, h: &Heuristic) -> f64 {
    let mut p = 0.0;
    for &(t, m) in dist.points() {
        if t > budget {
            break;
        }
        p += m * h.u(frontier, u64::from(budget - t));
    }
    p.min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PruneDecision {
    Keep { evict: usize },
    Discard,
}

/// Dominance check of a new distribution against queued ones at the same
/// frontier. Returns whether to keep it and which queued entries it
/// strictly dominates. Identical distributions keep the incumbent.
pub fn dominance_prune(new: &CostDistribution, queued: &[&CostDistribution]) -> (PruneDecision, Vec<usize>) {
    let mut evict = Vec::new();
    for (i, q) in queued.iter().enumerate() {
        match compare_cdfs(q, new) {
            CdfOrder::Dominates | CdfOrder::Equal => return (PruneDecision::Discard, Vec::new()),
            CdfOrder::Dominated => evict.push(i),
            CdfOrder::Incomparable => {}
        }
    }
    (PruneDecision::Keep { evict: evict.len() }, evict)
}

/// Fixed-size vertex set.
#[derive(Clone, Debug, PartialEq, Eq)]
struct VertexSet(Vec<u64>);

impl VertexSet {
    fn new(n: usize) -> Self {
        VertexSet(vec![0; n.div_ceil(64)])
    }

    fn contains(&self, v: VertexId) -> bool {
        self.0[v.index() / 64] >> (v.index() % 64) & 1 == 1
    }

    fn insert(&mut self, v: VertexId) {
        self.0[v.index() / 64] |= 1 << (v.index() % 64);
    }

    fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
}

#[derive(Clone, Copy, Debug)]
struct Priority(f64);

/// Probability bounds closer than this order as ties, so rounding noise
/// in the last bits cannot decide between equally good candidates.
const PRIORITY_GRAIN: f64 = 1e-12;

impl Priority {
    fn prob(p: f64) -> Self {
        Priority((p / PRIORITY_GRAIN).round())
    }
}

impl PartialEq for Priority {
    fn eq(&self, o: &Self) -> bool {
        self.0.total_cmp(&o.0) == Ordering::Equal
    }
}
impl Eq for Priority {}
impl PartialOrd for Priority {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Priority {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Max-heap key: higher priority, then fewer edges, then earlier insertion.
type Key = (Priority, Reverse<usize>, Reverse<u64>);

/// Min-heap key for the exhaustive baseline: lower expected cost first.
type MeanKey = (Reverse<Priority>, Reverse<usize>, Reverse<u64>);

struct Node {
    cand: CandidatePath,
    visited: VertexSet,
    alive: bool,
}

fn validate(g: &crate::graph::RoadGraph, q: &Query) -> Result<()> {
    for v in [q.source, q.dest] {
        if v.index() >= g.vertex_count() {
            return Err(Error::UnknownVertex(v.to_string()));
        }
    }
    Ok(())
}

/// Router over edges, T-paths and V-paths. Every candidate is kept in
/// canonical form, so its distribution is a plain convolution of unit
/// totals and dominance pruning applies.
pub fn route(g: &UpdatedPaceGraph, q: &Query, h: &Heuristic, opts: RouteOptions) -> Result<RouteResult> {
    validate(&g.base, q)?;
    if q.source == q.dest {
        return Ok(RouteResult::trivial());
    }
    let n = g.base.vertex_count();
    let tail = g.max_tpath_len().saturating_sub(1);
    let mut nodes: Vec<Node> = Vec::new();
    let mut queue: BinaryHeap<(Key, usize)> = BinaryHeap::new();
    let mut at_frontier: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pushes = 0u64;

    let mut start = VertexSet::new(n);
    start.insert(q.source);
    let root = CandidatePath { path: Vec::new(), dist: CostDistribution::point(0), max_prob: 1.0, frontier: q.source };
    let mut expand = |parent: &CandidatePath,
                      visited: &VertexSet,
                      nodes: &mut Vec<Node>,
                      queue: &mut BinaryHeap<(Key, usize)>,
                      at_frontier: &mut Vec<Vec<usize>>| {
        for &ui in g.units_from(parent.frontier) {
            if !g.is_self_canonical(ui) {
                continue;
            }
            let unit = g.unit(ui);
            if unit.vertices[1..].iter().any(|&v| visited.contains(v)) {
                continue;
            }
            if unit.vertices[1..unit.vertices.len() - 1].contains(&q.dest) {
                continue;
            }
            let Some(rest) = h.min_cost(unit.to()) else { continue };
            if u64::from(parent.dist.min_cost()) + u64::from(unit.min_cost()) + rest > u64::from(q.budget) {
                continue;
            }
            let mut path = parent.path.clone();
            path.extend_from_slice(&unit.edges);
            if g.tpath_crosses(&path, parent.path.len()) {
                continue;
            }
            let dist = convolve(&parent.dist, &unit.total);
            let mp = max_prob(&dist, unit.to(), q.budget, h);
            if mp <= 0.0 {
                continue;
            }
            let frontier = unit.to();
            let mut vs = visited.clone();
            for &v in &unit.vertices[1..] {
                vs.insert(v);
            }
            if opts.dominance_pruning {
                let peers: Vec<usize> = at_frontier[frontier.index()]
                    .iter()
                    .copied()
                    .filter(|&i| {
                        let o = &nodes[i];
                        o.alive && same_tail(&o.cand.path, &path, tail)
                    })
                    .collect();
                let mut discard = false;
                let mut evict = Vec::new();
                for &i in &peers {
                    let o = &nodes[i];
                    match compare_cdfs(&o.cand.dist, &dist) {
                        CdfOrder::Dominates | CdfOrder::Equal if o.visited.is_subset(&vs) => {
                            discard = true;
                            break;
                        }
                        CdfOrder::Dominated if vs.is_subset(&o.visited) => evict.push(i),
                        _ => {}
                    }
                }
                if discard {
                    continue;
                }
                for i in evict {
                    nodes[i].alive = false;
                }
                at_frontier[frontier.index()].retain(|&i| nodes[i].alive);
            }
            let id = nodes.len();
            let key = (Priority::prob(mp), Reverse(path.len()), Reverse(pushes));
            pushes += 1;
            nodes.push(Node { cand: CandidatePath { path, dist, max_prob: mp, frontier }, visited: vs, alive: true });
            at_frontier[frontier.index()].push(id);
            queue.push((key, id));
        }
    };

    expand(&root, &start, &mut nodes, &mut queue, &mut at_frontier);
    while let Some((_, id)) = queue.pop() {
        if !nodes[id].alive {
            continue;
        }
        nodes[id].alive = false;
        let frontier = nodes[id].cand.frontier;
        if frontier == q.dest {
            let c = &nodes[id].cand;
            return Ok(RouteResult { path: c.path.clone(), probability: prob_within(&c.dist, Budget(q.budget)), explored: pushes });
        }
        let cand = nodes[id].cand.clone();
        let visited = nodes[id].visited.clone();
        expand(&cand, &visited, &mut nodes, &mut queue, &mut at_frontier);
    }
    Ok(RouteResult::unreachable(pushes))
}

fn same_tail(a: &[EdgeId], b: &[EdgeId], k: usize) -> bool {
    let ta = &a[a.len().saturating_sub(k)..];
    let tb = &b[b.len().saturating_sub(k)..];
    ta == tb
}

/// Bound for a partial path under the T-path model. The cover of any
/// completion keeps the runs that end at least `max_tpath_len - 1` edges
/// before the frontier, so those runs convolve with an admissible bound
/// from the vertex where they end.
fn pace_bound(g: &PaceGraph, path: &[EdgeId], vertices: &[VertexId], q: &Query, h: &Heuristic) -> Result<(CostDistribution, f64)> {
    let dist = path_distribution(path, g)?;
    if *vertices.last().unwrap() == q.dest {
        let p = prob_within(&dist, Budget(q.budget));
        return Ok((dist, p));
    }
    let reach = g.max_tpath_len().saturating_sub(1);
    let cover = greedy_cover(path, g);
    let mut closed = CostDistribution::point(0);
    let mut y = 0;
    for run in split_runs(&cover) {
        let end = run[run.len() - 1].end;
        if path.len() - end < reach {
            break;
        }
        closed = convolve(&closed, &run_total(run, g)?);
        y = end;
    }
    let bound = max_prob(&closed, vertices[y], q.budget, h);
    Ok((dist, bound))
}

struct TNode {
    path: Vec<EdgeId>,
    vertices: Vec<VertexId>,
    dist: CostDistribution,
}

fn pace_successors<'a>(g: &'a PaceGraph, v: VertexId) -> impl Iterator<Item = Vec<EdgeId>> + 'a {
    let edges = g.base.out_edges(v).iter().map(|&e| vec![e]);
    let tpaths = g.tpaths().iter().filter(move |t| t.vertices[0] == v).map(|t| t.edges.clone());
    edges.chain(tpaths)
}

fn extend_pace(g: &PaceGraph, node: &TNode, unit: &[EdgeId], dest: VertexId) -> Option<(Vec<EdgeId>, Vec<VertexId>)> {
    let mut vertices = node.vertices.clone();
    for &e in unit {
        let v = g.base.edge(e).to;
        if vertices.contains(&v) {
            return None;
        }
        if *vertices.last().unwrap() == dest {
            return None;
        }
        vertices.push(v);
    }
    let mut path = node.path.clone();
    path.extend_from_slice(unit);
    Some((path, vertices))
}

/// Router over edges and T-paths only. Distributions are assembled per
/// candidate; no dominance pruning.
pub fn route_pace(g: &PaceGraph, q: &Query, h: &Heuristic) -> Result<RouteResult> {
    validate(&g.base, q)?;
    if q.source == q.dest {
        return Ok(RouteResult::trivial());
    }
    let mut seen: HashSet<Vec<EdgeId>> = HashSet::new();
    let mut nodes: Vec<TNode> = Vec::new();
    let mut queue: BinaryHeap<(Key, usize)> = BinaryHeap::new();
    let mut pushes = 0u64;
    let root = TNode { path: Vec::new(), vertices: vec![q.source], dist: CostDistribution::point(0) };
    let mut frontier_nodes = vec![root];
    loop {
        for node in frontier_nodes.drain(..) {
            let v = *node.vertices.last().unwrap();
            for unit in pace_successors(g, v) {
                let Some((path, vertices)) = extend_pace(g, &node, &unit, q.dest) else { continue };
                if !seen.insert(path.clone()) {
                    continue;
                }
                let (dist, bound) = pace_bound(g, &path, &vertices, q, h)?;
                if bound <= 0.0 {
                    continue;
                }
                let key = (Priority::prob(bound), Reverse(path.len()), Reverse(pushes));
                pushes += 1;
                queue.push((key, nodes.len()));
                nodes.push(TNode { path, vertices, dist });
            }
        }
        let Some((_, id)) = queue.pop() else { break };
        let node = &nodes[id];
        if *node.vertices.last().unwrap() == q.dest {
            return Ok(RouteResult { path: node.path.clone(), probability: prob_within(&node.dist, Budget(q.budget)), explored: pushes });
        }
        frontier_nodes.push(TNode { path: node.path.clone(), vertices: node.vertices.clone(), dist: node.dist.clone() });
    }
    Ok(RouteResult::unreachable(pushes))
}

/// Exhaustive baseline: expands candidates by expected cost over edges and
/// T-paths and keeps the best complete path. Only candidates that cannot
/// reach the destination within the budget are dropped.
pub fn route_naive(g: &PaceGraph, q: &Query) -> Result<RouteResult> {
    validate(&g.base, q)?;
    if q.source == q.dest {
        return Ok(RouteResult::trivial());
    }
    let h = Heuristic::None;
    let mut seen: HashSet<Vec<EdgeId>> = HashSet::new();
    let mut nodes: Vec<TNode> = Vec::new();
    let mut queue: BinaryHeap<(MeanKey, usize)> = BinaryHeap::new();
    let mut pushes = 0u64;
    let mut best: Option<(f64, Vec<EdgeId>)> = None;
    let mut pending = vec![TNode { path: Vec::new(), vertices: vec![q.source], dist: CostDistribution::point(0) }];
    loop {
        for node in pending.drain(..) {
            let v = *node.vertices.last().unwrap();
            for unit in pace_successors(g, v) {
                let Some((path, vertices)) = extend_pace(g, &node, &unit, q.dest) else { continue };
                if !seen.insert(path.clone()) {
                    continue;
                }
                let (dist, bound) = pace_bound(g, &path, &vertices, q, &h)?;
                if bound <= 0.0 {
                    continue;
                }
                pushes += 1;
                queue.push(((Reverse(Priority(dist.mean())), Reverse(path.len()), Reverse(pushes)), nodes.len()));
                nodes.push(TNode { path, vertices, dist });
            }
        }
        let Some((_, id)) = queue.pop() else { break };
        let node = &nodes[id];
        if *node.vertices.last().unwrap() == q.dest {
            let p = prob_within(&node.dist, Budget(q.budget));
            if best.as_ref().is_none_or(|(b, _)| p > *b) {
                best = Some((p, node.path.clone()));
            }
            continue;
        }
        pending.push(TNode { path: node.path.clone(), vertices: node.vertices.clone(), dist: node.dist.clone() });
    }
    Ok(match best {
        Some((probability, path)) => RouteResult { path, probability, explored: pushes },
        None => RouteResult::unreachable(pushes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::d;
    use crate::graph::RoadGraph;
    use crate::heuristics::{build_table, min_cost_map};
    use crate::vpath::{build_vpaths, BuildOptions};
    use std::sync::Arc;

    /// Two routes s→d: a1,a2 totals {40:.5,50:.2,60:.2,70:.1}; b1,b2 totals {50:.8,60:.2}.
    fn two_paths() -> PaceGraph {
        let mut g = RoadGraph::new();
        let s = g.add_vertex("s", None).unwrap();
        let m1 = g.add_vertex("m1", None).unwrap();
        let m2 = g.add_vertex("m2", None).unwrap();
        let t = g.add_vertex("d", None).unwrap();
        g.add_edge("a1", s, m1, d(&[(30, 0.5), (40, 0.2), (50, 0.2), (60, 0.1)])).unwrap();
        g.add_edge("a2", m1, t, d(&[(10, 1.0)])).unwrap();
        g.add_edge("b1", s, m2, d(&[(40, 0.8), (50, 0.2)])).unwrap();
        g.add_edge("b2", m2, t, d(&[(10, 1.0)])).unwrap();
        PaceGraph::new(g, Vec::new(), "all").unwrap()
    }

    fn q(g: &RoadGraph, s: &str, t: &str, b: Cost) -> Query {
        Query { source: g.vertex_id(s).unwrap(), dest: g.vertex_id(t).unwrap(), departure: 0, budget: b }
    }

    #[test]
    fn max_prob_weights_heuristic_by_mass() {
        let mut g = RoadGraph::new();
        let a = g.add_vertex("a", None).unwrap();
        let b = g.add_vertex("b", None).unwrap();
        g.add_edge("ab", a, b, d(&[(8, 0.5), (9, 0.5)])).unwrap();
        let up = build_vpaths(&PaceGraph::new(g, vec![], "all").unwrap(), &BuildOptions::default()).unwrap().0;
        let m = min_cost_map(&up, b).unwrap();
        let t = Arc::new(build_table(&up, b, 1, Some(40), &m).unwrap());
        let h = Heuristic::Table(t);
        let dist = d(&[(8, 0.9), (10, 0.1)]);
        let expected = 0.9 * h.u(a, 17) + 0.1 * h.u(a, 15);
        assert!((max_prob(&dist, a, 25, &h) - expected).abs() < 1e-15);
        assert_eq!(max_prob(&dist, b, 9, &h), 0.9);
        let bin = Heuristic::Binary(Arc::new(m));
        assert_eq!(max_prob(&d(&[(20, 1.0)]), a, 27, &bin), 0.0);
    }

    #[test]
    fn dominance_prune_examples() {
        let queued = d(&[(20, 1.0)]);
        let new = d(&[(20, 0.8), (30, 0.2)]);
        assert_eq!(dominance_prune(&new, &[&queued]).0, PruneDecision::Discard);
        assert_eq!(dominance_prune(&queued, &[&queued]).0, PruneDecision::Discard);
        let (pa, pb) = (d(&[(40, 0.5), (50, 0.2), (60, 0.2), (70, 0.1)]), d(&[(50, 0.8), (60, 0.2)]));
        assert_eq!(dominance_prune(&pa, &[&pb]), (PruneDecision::Keep { evict: 0 }, vec![]));
        assert_eq!(dominance_prune(&queued, &[&new]), (PruneDecision::Keep { evict: 1 }, vec![0]));
    }

    #[test]
    fn every_router_picks_the_safe_path() {
        let g = two_paths();
        let query = q(&g.base, "s", "d", 60);
        let up = build_vpaths(&g, &BuildOptions::default()).unwrap().0;
        let m = min_cost_map(&up, query.dest).unwrap();
        let t = build_table(&up, query.dest, 1, None, &m).unwrap();
        let hs = [Heuristic::None, Heuristic::Binary(Arc::new(m)), Heuristic::Table(Arc::new(t))];
        let pb: Vec<EdgeId> = ["b1", "b2"].iter().map(|e| g.base.edge_id(e).unwrap()).collect();
        let r = route_naive(&g, &query).unwrap();
        assert_eq!((r.path.clone(), r.probability), (pb.clone(), 1.0));
        for h in &hs {
            let r = route(&up, &query, h, RouteOptions::default()).unwrap();
            assert_eq!((r.path.clone(), r.probability), (pb.clone(), 1.0));
            let r = route_pace(&g, &query, h).unwrap();
            assert_eq!((r.path.clone(), r.probability), (pb.clone(), 1.0));
        }
    }

    #[test]
    fn trivial_and_unreachable_queries() {
        let g = two_paths();
        let up = build_vpaths(&g, &BuildOptions::default()).unwrap().0;
        let same = q(&g.base, "s", "s", 0);
        assert_eq!(route(&up, &same, &Heuristic::None, RouteOptions::default()).unwrap().probability, 1.0);
        assert_eq!(route_naive(&g, &same).unwrap().probability, 1.0);
        let back = q(&g.base, "d", "s", 1000);
        let r = route(&up, &back, &Heuristic::None, RouteOptions::default()).unwrap();
        assert_eq!((r.path.len(), r.probability), (0, 0.0));
        let tight = q(&g.base, "s", "d", 10);
        assert_eq!(route_naive(&g, &tight).unwrap().probability, 0.0);
        assert_eq!(route_pace(&g, &tight, &Heuristic::None).unwrap().probability, 0.0);
    }

    #[test]
    fn straight_line_single_unit() {
        let g = PaceGraph::new(crate::graph::tests::line(1, &d(&[(3, 0.5), (7, 0.5)])), vec![], "all").unwrap();
        let up = build_vpaths(&g, &BuildOptions::default()).unwrap().0;
        let query = q(&g.base, "v0", "v1", 5);
        let r = route(&up, &query, &Heuristic::None, RouteOptions::default()).unwrap();
        assert_eq!((r.path, r.probability, r.explored), (vec![EdgeId(0)], 0.5, 1));
    }

    #[test]
    fn chain_routers_agree_with_baseline() {
        let g = crate::graph::tests::chain_graph();
        let up = build_vpaths(&g, &BuildOptions::default()).unwrap().0;
        for b in [40, 50, 55, 60, 70, 75] {
            let query = q(&g.base, "v0", "v5", b);
            let naive = route_naive(&g, &query).unwrap();
            let v = route(&up, &query, &Heuristic::None, RouteOptions::default()).unwrap();
            let t = route_pace(&g, &query, &Heuristic::None).unwrap();
            assert!((naive.probability - v.probability).abs() < 1e-12, "b={b}");
            assert!((naive.probability - t.probability).abs() < 1e-12, "b={b}");
            assert_eq!(v.path, naive.path);
        }
    }
}
