//! Destination-specific upper bounds U(v, x) on the probability of reaching
//! the destination from `v` within budget `x`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::RoadGraph;
use crate::ids::{EdgeId, VertexId};
use crate::vpath::{UnitKind, UpdatedPaceGraph};

/// Values this close to 1 are stored as exactly 1.
const SATURATION_SLACK: f64 = 1e-12;
const FIXED_POINT_TOLERANCE: f64 = 1e-13;
const FIXED_POINT_MAX_ITERATIONS: usize = 200;
const HORIZON_SAFETY_FACTOR: u64 = 3;

/// One unit with its direction flipped and a deterministic weight.
#[derive(Clone, Debug)]
pub struct ReversedUnit {
    /// Forward end vertex: where the reversed unit starts.
    pub from: VertexId,
    /// Forward start vertex.
    pub to: VertexId,
    pub weight: u64,
    /// Edges the unit covers when it is a T-path or V-path, else 0.
    pub covered: u64,
    pub edges: Vec<EdgeId>,
}

#[derive(Clone, Debug)]
pub struct ReversedGraph {
    vertex_count: usize,
    units: Vec<ReversedUnit>,
    adjacency: Vec<Vec<usize>>,
}

impl ReversedGraph {
    pub fn units(&self) -> &[ReversedUnit] {
        &self.units
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }
}

/// Reverses every unit; each keeps its minimum support cost as weight.
pub fn reverse(g: &UpdatedPaceGraph) -> ReversedGraph {
    let vertex_count = g.base.vertex_count();
    let mut adjacency = vec![Vec::new(); vertex_count];
    let units: Vec<ReversedUnit> = g
        .units()
        .iter()
        .map(|u| ReversedUnit {
            from: u.to(),
            to: u.from(),
            weight: u64::from(u.min_cost()),
            covered: if u.kind == UnitKind::Edge { 0 } else { u.edges.len() as u64 },
            edges: u.edges.clone(),
        })
        .collect();
    for (i, u) in units.iter().enumerate() {
        adjacency[u.from.index()].push(i);
    }
    ReversedGraph { vertex_count, units, adjacency }
}

/// Least travel cost from every vertex to one destination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinCostMap {
    pub dest: VertexId,
    /// `None` marks a vertex that cannot reach the destination.
    pub get_min: Vec<Option<u64>>,
}

impl MinCostMap {
    pub fn get(&self, v: VertexId) -> Option<u64> {
        self.get_min[v.index()]
    }

    pub fn max_finite(&self) -> u64 {
        self.get_min.iter().flatten().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug)]
struct Label {
    c1: Option<u64>,
    c2: u64,
    parent: Option<usize>,
}

/// Forward edge sequence from `v` to the destination along parent units.
fn trace(rg: &ReversedGraph, labels: &[Label], mut v: VertexId) -> Vec<EdgeId> {
    let mut out = Vec::new();
    for _ in 0..rg.vertex_count {
        let Some(p) = labels[v.index()].parent else { break };
        let u = &rg.units[p];
        out.extend_from_slice(&u.edges);
        v = u.from;
    }
    out
}

/// Label-correcting search from `dest` over reversed units with (c1, c2)
/// labels: c1 is the tree cost, c2 the number of edges covered by reversed
/// T-paths or V-paths on the tree path.
pub fn shortest_path_tree(rg: &ReversedGraph, dest: VertexId) -> Result<MinCostMap> {
    if dest.index() >= rg.vertex_count {
        return Err(Error::UnknownVertex(dest.to_string()));
    }
    let mut labels = vec![Label { c1: None, c2: 0, parent: None }; rg.vertex_count];
    labels[dest.index()].c1 = Some(0);
    let mut queue = BinaryHeap::new();
    queue.push(Reverse((0u64, dest.0)));
    let cap = rg.vertex_count * (rg.units.len() + 1);
    let mut pops = 0;

    while let Some(Reverse((c, vid))) = queue.pop() {
        let v = VertexId(vid);
        if labels[v.index()].c1 != Some(c) {
            continue;
        }
        pops += 1;
        if pops > cap {
            break;
        }
        let c2 = labels[v.index()].c2;
        for &ri in &rg.adjacency[v.index()] {
            let ru = &rg.units[ri];
            let u = ru.to;
            if u == dest {
                continue;
            }
            let (n1, n2) = (c + ru.weight, c2 + ru.covered);
            let old = labels[u.index()];
            let update = match old.c1 {
                None => true,
                Some(o1) => {
                    let dominated_by_new = n1 <= o1 && n2 >= old.c2 && (n1 < o1 || n2 > old.c2);
                    let dominates_new = n1 >= o1 && n2 <= old.c2;
                    if dominated_by_new {
                        true
                    } else if dominates_new {
                        false
                    } else {
                        let p_old = trace(rg, &labels, u);
                        let mut p_new = ru.edges.clone();
                        p_new.extend(trace(rg, &labels, v));
                        if p_old != p_new {
                            n1 < o1
                        } else {
                            n2 > old.c2
                        }
                    }
                }
            };
            if update {
                labels[u.index()] = Label { c1: Some(n1), c2: n2, parent: Some(ri) };
                queue.push(Reverse((n1, u.0)));
            }
        }
    }
    Ok(MinCostMap { dest, get_min: labels.iter().map(|l| l.c1).collect() })
}

/// Convenience wrapper: reverse then search.
pub fn min_cost_map(g: &UpdatedPaceGraph, dest: VertexId) -> Result<MinCostMap> {
    shortest_path_tree(&reverse(g), dest)
}

/// Lower bound from straight-line distance divided by the fastest observed
/// speed over any edge. Needs vertex coordinates.
pub fn euclidean_min_costs(g: &RoadGraph, dest: VertexId) -> Result<MinCostMap> {
    if !g.has_coordinates() {
        return Err(Error::InvalidParameter("euclidean bound needs vertex coordinates".into()));
    }
    if dest.index() >= g.vertex_count() {
        return Err(Error::UnknownVertex(dest.to_string()));
    }
    let coord = |v: VertexId| g.vertex(v).coords.expect("checked above");
    let dist = |a: VertexId, b: VertexId| {
        let (p, q) = (coord(a), coord(b));
        ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
    };
    let max_speed = g
        .edge_ids()
        .map(|e| {
            let edge = g.edge(e);
            dist(edge.from, edge.to) / f64::from(edge.weight.min_cost())
        })
        .fold(0.0, f64::max);

    let mut reach = vec![false; g.vertex_count()];
    reach[dest.index()] = true;
    let mut stack = vec![dest];
    while let Some(v) = stack.pop() {
        for &e in g.in_edges(v) {
            let w = g.edge(e).from;
            if !reach[w.index()] {
                reach[w.index()] = true;
                stack.push(w);
            }
        }
    }
    let get_min = g
        .vertices()
        .map(|v| {
            reach[v.index()].then(|| {
                if max_speed <= 0.0 || v == dest {
                    0
                } else {
                    (dist(v, dest) / max_speed - 1e-9).floor().max(0.0) as u64
                }
            })
        })
        .collect();
    Ok(MinCostMap { dest, get_min })
}

/// 0/1 bound: reachable within `x` only if `x` covers the least cost.
pub fn binary_u(m: &MinCostMap, v: VertexId, x: u64) -> f64 {
    match m.get(v) {
        Some(c) if x >= c => 1.0,
        _ => 0.0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Row {
    Unreachable,
    /// Columns below `l` are 0, columns from `s` on are 1; `values` holds
    /// columns `l..=s`.
    Band {
        l: u64,
        s: u64,
        values: Vec<f64>,
    },
}

/// U(v, x) tabulated on the grid x = j·δ, j = 0..=η.
#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicTable {
    pub dest: VertexId,
    pub delta: u64,
    pub eta: u64,
    pub rows: Vec<Row>,
    pub min_costs: MinCostMap,
}

impl HeuristicTable {
    /// Value at column `j` of `v`'s row.
    pub fn cell(&self, v: VertexId, j: u64) -> f64 {
        match &self.rows[v.index()] {
            Row::Unreachable => 0.0,
            Row::Band { l, s, values } => {
                if j < *l {
                    0.0
                } else if j >= *s {
                    1.0
                } else {
                    values[(j - l) as usize]
                }
            }
        }
    }

    /// Dense row over all columns `0..=eta`.
    pub fn dense_row(&self, v: VertexId) -> Vec<f64> {
        (0..=self.eta).map(|j| self.cell(v, j)).collect()
    }
}

/// Looks up U(v, x), rounding `x` up to the next grid budget.
pub fn lookup_u(t: &HeuristicTable, v: VertexId, x: u64) -> f64 {
    if matches!(t.rows[v.index()], Row::Unreachable) {
        return 0.0;
    }
    let j = x.div_ceil(t.delta);
    if j > t.eta {
        1.0
    } else {
        t.cell(v, j)
    }
}

/// Smallest horizon column count at which every reachable row saturates:
/// the larger of the cheapest worst-case unit path and a multiple of the
/// largest least cost.
pub fn auto_eta(g: &UpdatedPaceGraph, m: &MinCostMap, delta: u64) -> u64 {
    let n = g.base.vertex_count();
    let mut worst: Vec<Option<u64>> = vec![None; n];
    worst[m.dest.index()] = Some(0);
    let mut queue = BinaryHeap::new();
    queue.push(Reverse((0u64, m.dest.0)));
    while let Some(Reverse((c, vid))) = queue.pop() {
        let v = VertexId(vid);
        if worst[v.index()] != Some(c) {
            continue;
        }
        for &ui in g.units_into(v) {
            let unit = g.unit(ui);
            let nc = c + u64::from(unit.total.max_cost());
            let w = unit.from().index();
            if worst[w].is_none_or(|o| nc < o) {
                worst[w] = Some(nc);
                queue.push(Reverse((nc, unit.from().0)));
            }
        }
    }
    let saturate = worst.iter().flatten().copied().max().unwrap_or(0);
    let by_min = m.max_finite() * HORIZON_SAFETY_FACTOR;
    saturate.div_ceil(delta).max(by_min.div_ceil(delta)).max(1)
}

/// Tabulates U(·, x) for one destination by the one-step recursion
/// U(v, x) = max over units ⟨v, z⟩ of Σ_k W(k)·U(z, x − k).
///
/// Columns are filled in ascending budget order. References that land in
/// the column being filled (unit costs below δ) are settled by fixed-point
/// iteration started from 1, so every iterate stays an upper bound.
pub fn build_table(g: &UpdatedPaceGraph, dest: VertexId, delta: u64, eta: Option<u64>, m: &MinCostMap) -> Result<HeuristicTable> {
    if delta == 0 {
        return Err(Error::InvalidParameter("delta must be at least 1".into()));
    }
    if m.dest != dest {
        return Err(Error::InvalidParameter("min-cost map is for another destination".into()));
    }
    let n = g.base.vertex_count();
    if dest.index() >= n {
        return Err(Error::UnknownVertex(dest.to_string()));
    }
    let eta = eta.unwrap_or_else(|| auto_eta(g, m, delta));
    let cols = eta as usize + 1;
    let first: Vec<Option<usize>> = (0..n).map(|i| m.get_min[i].map(|c| c.div_ceil(delta) as usize)).collect();
    let mut u = vec![vec![0.0f64; cols]; n];
    u[dest.index()].iter_mut().for_each(|c| *c = 1.0);

    let active: Vec<usize> = (0..n).filter(|&i| i != dest.index() && first[i].is_some()).collect();
    let h = |u: &[Vec<f64>], v: usize, j: usize| -> f64 {
        let x = j as u64 * delta;
        let mut best = 0.0f64;
        for &ui in g.units_from(VertexId(v as u32)) {
            let unit = g.unit(ui);
            let z = unit.to().index();
            if first[z].is_none() {
                continue;
            }
            let mut sum = 0.0;
            for &(k, p) in unit.total.points() {
                let k = u64::from(k);
                if k > x {
                    break;
                }
                sum += p * u[z][(x - k).div_ceil(delta) as usize];
            }
            best = best.max(sum);
        }
        best.min(1.0)
    };

    for j in 0..cols {
        let live: Vec<usize> = active.iter().copied().filter(|&v| j >= first[v].unwrap()).collect();
        if live.is_empty() {
            continue;
        }
        for &v in &live {
            u[v][j] = 1.0;
        }
        for _ in 0..FIXED_POINT_MAX_ITERATIONS {
            let next: Vec<f64> = live.iter().map(|&v| h(&u, v, j)).collect();
            let mut change = 0.0f64;
            for (&v, val) in live.iter().zip(next) {
                change = change.max((u[v][j] - val).abs());
                u[v][j] = val;
            }
            if change < FIXED_POINT_TOLERANCE {
                break;
            }
        }
        for &v in &live {
            let mut val = u[v][j];
            if val >= 1.0 - SATURATION_SLACK {
                val = 1.0;
            }
            if j > 0 {
                val = val.max(u[v][j - 1]);
            }
            u[v][j] = val;
        }
    }

    let rows = (0..n)
        .map(|v| {
            let Some(l) = first[v] else { return Ok(Row::Unreachable) };
            if v == dest.index() {
                return Ok(Row::Band { l: 0, s: 0, values: vec![1.0] });
            }
            let s = (l..cols)
                .find(|&j| u[v][j] == 1.0)
                .ok_or_else(|| Error::HorizonTooSmall { vertex: g.base.vertex(VertexId(v as u32)).name.clone(), horizon: eta * delta })?;
            Ok(Row::Band { l: l as u64, s: s as u64, values: u[v][l..=s].to_vec() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HeuristicTable { dest, delta, eta, rows, min_costs: m.clone() })
}

/// The bound a router consults.
#[derive(Clone, Debug)]
pub enum Heuristic {
    /// U ≡ 1.
    None,
    Binary(Arc<MinCostMap>),
    Table(Arc<HeuristicTable>),
}

impl Heuristic {
    pub fn u(&self, v: VertexId, x: u64) -> f64 {
        match self {
            Heuristic::None => 1.0,
            Heuristic::Binary(m) => binary_u(m, v, x),
            Heuristic::Table(t) => lookup_u(t, v, x),
        }
    }

    /// Lower bound on the cost still needed from `v`; `None` if the
    /// destination is unreachable.
    pub fn min_cost(&self, v: VertexId) -> Option<u64> {
        match self {
            Heuristic::None => Some(0),
            Heuristic::Binary(m) => m.get(v),
            Heuristic::Table(t) => t.min_costs.get(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{CostDistribution, JointDistribution};
    use crate::graph::tests::{d, line};
    use crate::graph::PaceGraph;
    use crate::vpath::{build_vpaths, BuildOptions};

    fn updated(g: PaceGraph) -> UpdatedPaceGraph {
        build_vpaths(&g, &BuildOptions::default()).unwrap().0
    }

    fn plain(base: RoadGraph) -> UpdatedPaceGraph {
        updated(PaceGraph::new(base, Vec::new(), "all").unwrap())
    }

    #[test]
    fn reverse_keeps_min_cost() {
        let mut base = line(2, &d(&[(8, 0.9), (10, 0.1)]));
        base.set_weight(EdgeId(1), CostDistribution::point(5)).unwrap();
        let j = JointDistribution::new(vec![EdgeId(0), EdgeId(1)], [(vec![11, 5], 0.5), (vec![12, 6], 0.5)]).unwrap();
        let t = PaceGraph::make_tpath(&base, "p1", j, 10).unwrap();
        let rg = reverse(&updated(PaceGraph::new(base, vec![t], "all").unwrap()));
        let w: Vec<u64> = rg.units().iter().map(|u| u.weight).collect();
        assert_eq!(w, vec![8, 5, 16]);
        assert_eq!(rg.units()[2].covered, 2);
        assert_eq!((rg.units()[2].from, rg.units()[2].to), (VertexId(2), VertexId(0)));
    }

    /// v5 -e6-> v6 -e8-> vd; edges sum to 13, the T-path over both to 15.
    fn conflict(with_tpath: bool) -> UpdatedPaceGraph {
        let mut base = RoadGraph::new();
        let v5 = base.add_vertex("v5", None).unwrap();
        let v6 = base.add_vertex("v6", None).unwrap();
        let vd = base.add_vertex("vd", None).unwrap();
        let e6 = base.add_edge("e6", v5, v6, d(&[(9, 0.5), (11, 0.5)])).unwrap();
        let e8 = base.add_edge("e8", v6, vd, d(&[(4, 0.5), (6, 0.5)])).unwrap();
        let mut tps = Vec::new();
        if with_tpath {
            let j = JointDistribution::new(vec![e6, e8], [(vec![9, 6], 0.5), (vec![11, 6], 0.5)]).unwrap();
            tps.push(PaceGraph::make_tpath(&base, "p4", j, 30).unwrap());
        }
        updated(PaceGraph::new(base, tps, "all").unwrap())
    }

    #[test]
    fn tpath_cost_wins_on_the_same_path() {
        let m = min_cost_map(&conflict(true), VertexId(2)).unwrap();
        assert_eq!(m.get_min, vec![Some(15), Some(4), Some(0)]);
        let m = min_cost_map(&conflict(false), VertexId(2)).unwrap();
        assert_eq!(m.get_min, vec![Some(13), Some(4), Some(0)]);
    }

    /// Bellman-Ford over edge minimum costs.
    fn classical(g: &RoadGraph, dest: VertexId) -> Vec<Option<u64>> {
        let mut dist = vec![None; g.vertex_count()];
        dist[dest.index()] = Some(0u64);
        for _ in 0..g.vertex_count() {
            for e in g.edge_ids() {
                let edge = g.edge(e);
                if let Some(t) = dist[edge.to.index()] {
                    let c = t + u64::from(edge.weight.min_cost());
                    if dist[edge.from.index()].is_none_or(|o| c < o) {
                        dist[edge.from.index()] = Some(c);
                    }
                }
            }
        }
        dist
    }

    #[test]
    fn edges_only_matches_classical_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let n = rng.gen_range(2..9);
            let mut g = RoadGraph::new();
            for i in 0..n {
                g.add_vertex(&format!("v{i}"), None).unwrap();
            }
            for i in 0..n * 2 {
                let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                let c = rng.gen_range(1..20);
                let _ = g.add_edge(&format!("e{i}"), VertexId(a), VertexId(b), d(&[(c, 0.5), (c + 3, 0.5)]));
            }
            let dest = VertexId(rng.gen_range(0..n));
            let m = min_cost_map(&plain(g.clone()), dest).unwrap();
            assert_eq!(m.get_min, classical(&g, dest));
        }
    }

    #[test]
    fn binary_examples() {
        let m = MinCostMap { dest: VertexId(0), get_min: vec![Some(0), Some(19), None] };
        assert_eq!(binary_u(&m, VertexId(1), 21), 1.0);
        assert_eq!(binary_u(&m, VertexId(1), 18), 0.0);
        assert_eq!(binary_u(&m, VertexId(1), 19), 1.0);
        assert_eq!(binary_u(&m, VertexId(2), 1_000_000), 0.0);
    }

    #[test]
    fn two_vertex_table() {
        for delta in [1u64, 3, 5] {
            let g = plain(line(1, &CostDistribution::point(delta as u32)));
            let m = min_cost_map(&g, VertexId(1)).unwrap();
            let t = build_table(&g, VertexId(1), delta, Some(4), &m).unwrap();
            assert_eq!(lookup_u(&t, VertexId(0), delta), 1.0);
            assert_eq!(lookup_u(&t, VertexId(0), 0), 0.0);
            assert!(t.dense_row(VertexId(1)).iter().all(|&x| x == 1.0));
        }
    }

    #[test]
    fn row_shape_and_round_up() {
        let g = plain(line(1, &d(&[(15, 0.5), (18, 0.5)])));
        let m = min_cost_map(&g, VertexId(1)).unwrap();
        let t = build_table(&g, VertexId(1), 3, None, &m).unwrap();
        let v = VertexId(0);
        assert_eq!(t.rows[0], Row::Band { l: 5, s: 6, values: vec![0.5, 1.0] });
        assert_eq!(lookup_u(&t, v, 12), 0.0);
        assert_eq!(lookup_u(&t, v, 15), 0.5);
        assert_eq!(lookup_u(&t, v, 14), 0.5);
        assert_eq!(lookup_u(&t, v, 17), lookup_u(&t, v, 18));
        assert_eq!(lookup_u(&t, v, 18), 1.0);
        assert_eq!(lookup_u(&t, v, 10_000), 1.0);
    }

    #[test]
    fn horizon_too_small_is_reported() {
        let g = plain(line(2, &d(&[(5, 0.5), (9, 0.5)])));
        let m = min_cost_map(&g, VertexId(2)).unwrap();
        assert!(matches!(build_table(&g, VertexId(2), 1, Some(12), &m), Err(Error::HorizonTooSmall { .. })));
        assert!(build_table(&g, VertexId(2), 1, Some(18), &m).is_ok());
    }

    #[test]
    fn unreachable_rows_are_zero() {
        let mut base = line(1, &CostDistribution::point(2));
        base.add_vertex("island", None).unwrap();
        let g = plain(base);
        let m = min_cost_map(&g, VertexId(1)).unwrap();
        let t = build_table(&g, VertexId(1), 1, None, &m).unwrap();
        assert_eq!(t.rows[2], Row::Unreachable);
        assert_eq!(lookup_u(&t, VertexId(2), 1_000), 0.0);
        assert_eq!(lookup_u(&t, VertexId(1), 0), 1.0);
    }

    #[test]
    fn two_edge_line_matches_direct_evaluation() {
        let w = d(&[(2, 0.5), (4, 0.5)]);
        let g = plain(line(2, &w));
        let m = min_cost_map(&g, VertexId(2)).unwrap();
        let t = build_table(&g, VertexId(2), 1, None, &m).unwrap();
        let conv = crate::dist::convolve(&w, &w);
        for x in 0..12u32 {
            let exact = crate::dist::prob_within(&conv, crate::dist::Budget(x));
            assert!((lookup_u(&t, VertexId(0), u64::from(x)) - exact).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn euclidean_bound() {
        let mut g = RoadGraph::new();
        let a = g.add_vertex("a", Some((0.0, 0.0))).unwrap();
        let b = g.add_vertex("b", Some((10.0, 0.0))).unwrap();
        let c = g.add_vertex("c", Some((20.0, 0.0))).unwrap();
        g.add_edge("ab", a, b, CostDistribution::point(5)).unwrap();
        g.add_edge("bc", b, c, CostDistribution::point(10)).unwrap();
        let m = euclidean_min_costs(&g, c).unwrap();
        assert_eq!(m.get_min, vec![Some(9), Some(4), Some(0)]);
        let m = euclidean_min_costs(&g, a).unwrap();
        assert_eq!(m.get_min, vec![Some(0), None, None]);
        assert!(euclidean_min_costs(&line(1, &CostDistribution::point(1)), VertexId(1)).is_err());
    }
}
