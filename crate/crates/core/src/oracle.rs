//! Brute-force ground truth: enumerate every simple path and evaluate each
//! with the assembly-based path distribution.

use crate::dist::{prob_within, Budget, CostDistribution};
use crate::error::{Error, Result};
use crate::graph::{path_distribution, PaceGraph, RoadGraph};
use crate::ids::{EdgeId, VertexId};
use crate::par::{self, Execution};
use crate::router::Query;

/// Enumeration stops with an error past this many paths.
pub const PATH_LIMIT: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PathRow {
    pub path: Vec<EdgeId>,
    pub dist: CostDistribution,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub best_path: Vec<EdgeId>,
    pub best_probability: f64,
    pub table: Vec<PathRow>,
}

/// All vertex-simple paths from `s` to `d` with at most `max_edges` edges,
/// in lexicographic order of edge ids.
pub fn enumerate_paths(g: &RoadGraph, s: VertexId, d: VertexId, max_edges: usize) -> Result<Vec<Vec<EdgeId>>> {
    for v in [s, d] {
        if v.index() >= g.vertex_count() {
            return Err(Error::UnknownVertex(v.to_string()));
        }
    }
    if s == d {
        return Ok(vec![Vec::new()]);
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; g.vertex_count()];
    on_path[s.index()] = true;
    let mut path = Vec::new();
    dfs(g, s, d, max_edges, &mut on_path, &mut path, &mut out)?;
    Ok(out)
}

fn dfs(
    g: &RoadGraph,
    v: VertexId,
    d: VertexId,
    max_edges: usize,
    on_path: &mut [bool],
    path: &mut Vec<EdgeId>,
    out: &mut Vec<Vec<EdgeId>>,
) -> Result<()> {
    if path.len() == max_edges {
        return Ok(());
    }
    let mut edges = g.out_edges(v).to_vec();
    edges.sort();
    for e in edges {
        let w = g.edge(e).to;
        if on_path[w.index()] {
            continue;
        }
        path.push(e);
        if w == d {
            if out.len() == PATH_LIMIT {
                return Err(Error::OracleTooLarge(PATH_LIMIT));
            }
            out.push(path.clone());
        } else {
            on_path[w.index()] = true;
            dfs(g, w, d, max_edges, on_path, path, out)?;
            on_path[w.index()] = false;
        }
        path.pop();
    }
    Ok(())
}

/// Distribution of every simple path from `s` to `d`.
pub fn path_table(
    g: &PaceGraph,
    s: VertexId,
    d: VertexId,
    max_edges: usize,
    exec: Execution,
) -> Result<Vec<(Vec<EdgeId>, CostDistribution)>> {
    let paths = enumerate_paths(&g.base, s, d, max_edges)?;
    let dists = par::map(exec, &paths, |p| if p.is_empty() { Ok(CostDistribution::point(0)) } else { path_distribution(p, g) });
    paths.into_iter().zip(dists).map(|(p, d)| Ok((p, d?))).collect()
}

/// Best path by exhaustive evaluation; ties go to the lexicographically
/// smallest path.
pub fn exact_best(g: &PaceGraph, q: &Query, max_edges: usize) -> Result<OracleResult> {
    exact_best_with(g, q, max_edges, Execution::default())
}

pub fn exact_best_with(g: &PaceGraph, q: &Query, max_edges: usize, exec: Execution) -> Result<OracleResult> {
    let rows = path_table(g, q.source, q.dest, max_edges, exec)?;
    let table: Vec<PathRow> = rows
        .into_iter()
        .map(|(path, dist)| {
            let probability = prob_within(&dist, Budget(q.budget));
            PathRow { path, dist, probability }
        })
        .collect();
    let mut best: Option<&PathRow> = None;
    for row in &table {
        if best.is_none_or(|b| row.probability > b.probability) {
            best = Some(row);
        }
    }
    let (best_path, best_probability) = match best {
        Some(b) => (b.path.clone(), b.probability),
        None => (Vec::new(), 0.0),
    };
    Ok(OracleResult { best_path, best_probability, table })
}

/// Renders the per-path table as tab-separated lines:
/// path, probability and `cost:prob,...`.
pub fn format_table(g: &RoadGraph, r: &OracleResult) -> String {
    let mut out = String::from("path\tprobability\tdistribution\n");
    for row in &r.table {
        let names = g.edge_names(&row.path).join(",");
        let dist: Vec<String> = row.dist.points().iter().map(|(c, p)| format!("{c}:{p}")).collect();
        out.push_str(&format!("{}\t{:.9}\t{}\n", if names.is_empty() { "-" } else { &names }, row.probability, dist.join(",")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::CostDistribution;
    use crate::graph::tests::d;

    fn names(g: &RoadGraph, paths: &[Vec<EdgeId>]) -> Vec<String> {
        paths.iter().map(|p| g.edge_names(p).join(",")).collect()
    }

    #[test]
    fn same_vertex_gives_empty_path() {
        let g = crate::graph::tests::line(2, &CostDistribution::point(1));
        assert_eq!(enumerate_paths(&g, VertexId(1), VertexId(1), 5).unwrap(), vec![Vec::<EdgeId>::new()]);
    }

    #[test]
    fn parallel_edges() {
        let mut g = RoadGraph::new();
        g.add_edge_by_name("a", "s", "d", CostDistribution::point(1)).unwrap();
        g.add_edge_by_name("b", "s", "d", CostDistribution::point(2)).unwrap();
        let ps = enumerate_paths(&g, VertexId(0), VertexId(1), 3).unwrap();
        assert_eq!(names(&g, &ps), vec!["a", "b"]);
    }

    #[test]
    fn four_cycle_has_two_paths() {
        let mut g = RoadGraph::new();
        let w = CostDistribution::point(1);
        for (n, a, b) in [
            ("sa", "s", "a"),
            ("ad", "a", "d"),
            ("sb", "s", "b"),
            ("bd", "b", "d"),
            ("as", "a", "s"),
            ("da", "d", "a"),
            ("bs", "b", "s"),
            ("db", "d", "b"),
        ] {
            g.add_edge_by_name(n, a, b, w.clone()).unwrap();
        }
        let (s, t) = (g.vertex_id("s").unwrap(), g.vertex_id("d").unwrap());
        let ps = enumerate_paths(&g, s, t, 4).unwrap();
        assert_eq!(names(&g, &ps), vec!["sa,ad", "sb,bd"]);
        assert_eq!(enumerate_paths(&g, s, t, 1).unwrap().len(), 0);
    }

    #[test]
    fn best_of_two_routes() {
        let mut g = RoadGraph::new();
        g.add_edge_by_name("a1", "s", "m1", d(&[(30, 0.5), (40, 0.2), (50, 0.2), (60, 0.1)])).unwrap();
        g.add_edge_by_name("a2", "m1", "d", CostDistribution::point(10)).unwrap();
        g.add_edge_by_name("b1", "s", "m2", d(&[(40, 0.8), (50, 0.2)])).unwrap();
        g.add_edge_by_name("b2", "m2", "d", CostDistribution::point(10)).unwrap();
        let g = PaceGraph::new(g, vec![], "all").unwrap();
        let (s, t) = (g.base.vertex_id("s").unwrap(), g.base.vertex_id("d").unwrap());
        let q = Query { source: s, dest: t, departure: 0, budget: 60 };
        let r = exact_best(&g, &q, 10).unwrap();
        assert_eq!(g.base.edge_names(&r.best_path), vec!["b1", "b2"]);
        assert_eq!(r.best_probability, 1.0);
        assert_eq!(r.table[0].probability, 0.9);
        let r = exact_best(&g, &Query { budget: 0, ..q }, 10).unwrap();
        assert_eq!(r.best_probability, 0.0);
        let seq = exact_best_with(&g, &q, 10, Execution::Sequential).unwrap();
        assert_eq!(format_table(&g.base, &seq), format_table(&g.base, &exact_best(&g, &q, 10).unwrap()));
    }

    #[test]
    fn guard_trips_on_huge_instances() {
        // Layered graph: 17 stages of two parallel edges gives 2^17 paths.
        let mut g = RoadGraph::new();
        for i in 0..17 {
            for k in 0..2 {
                g.add_edge_by_name(&format!("e{i}_{k}"), &format!("v{i}"), &format!("v{}", i + 1), CostDistribution::point(1)).unwrap();
            }
        }
        let (s, t) = (g.vertex_id("v0").unwrap(), g.vertex_id("v17").unwrap());
        assert!(matches!(enumerate_paths(&g, s, t, 100), Err(Error::OracleTooLarge(_))));
    }
}
