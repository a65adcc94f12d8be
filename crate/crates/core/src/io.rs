//! Line-oriented text formats. Blank lines and lines starting with `#` are
//! ignored everywhere. See `docs/formats.md`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Duration;

use crate::dist::{CostDistribution, JointDistribution};
use crate::error::{Error, Result};
use crate::graph::{PaceGraph, RoadGraph, Trajectory};
use crate::heuristics::{HeuristicTable, MinCostMap, Row};
use crate::ids::{Cost, EdgeId, VertexId};
use crate::router::{Query, RouteResult};
use crate::vpath::{UnitKind, UnitRecord, UpdatedPaceGraph};

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-comment lines with 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn num<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| err(line, format!("bad {what} '{s}'")))
}

fn parse_dist(line: usize, s: &str) -> Result<CostDistribution> {
    let pairs = s
        .split(',')
        .map(|p| {
            let (c, m) = p.split_once(':').ok_or_else(|| err(line, format!("expected cost:prob, got '{p}'")))?;
            Ok((num::<Cost>(line, c, "cost")?, num::<f64>(line, m, "probability")?))
        })
        .collect::<Result<Vec<_>>>()?;
    CostDistribution::new(pairs).map_err(|e| err(line, e.to_string()))
}

pub fn format_dist(d: &CostDistribution) -> String {
    let parts: Vec<String> = d.points().iter().map(|(c, p)| format!("{c}:{p}")).collect();
    parts.join(",")
}

fn edge_list(line: usize, g: &RoadGraph, s: &str) -> Result<Vec<EdgeId>> {
    s.split(',').map(|e| g.edge_id(e).ok_or_else(|| err(line, format!("unknown edge '{e}'")))).collect()
}

fn vertex(line: usize, g: &RoadGraph, s: &str) -> Result<VertexId> {
    g.vertex_id(s).ok_or_else(|| err(line, format!("unknown vertex '{s}'")))
}

fn parse_graph_line(g: &mut RoadGraph, line: usize, f: &[&str]) -> Result<bool> {
    match f[0] {
        "V" => {
            let coords = match f.len() {
                2 => None,
                4 => Some((num(line, f[2], "coordinate")?, num(line, f[3], "coordinate")?)),
                _ => return Err(err(line, "expected 'V <id> [x y]'")),
            };
            g.add_vertex(f[1], coords).map_err(|e| err(line, e.to_string()))?;
            Ok(true)
        }
        "E" => {
            if f.len() != 5 {
                return Err(err(line, "expected 'E <id> <from> <to> <cost:prob,...>'"));
            }
            let (from, to) = (vertex(line, g, f[2])?, vertex(line, g, f[3])?);
            let w = parse_dist(line, f[4])?;
            g.add_edge(f[1], from, to, w).map_err(|e| err(line, e.to_string()))?;
            Ok(true)
        }
        _ => Ok(false),
    }
}

/// `V <id> [x y]` and `E <id> <from> <to> <cost:prob,...>` records.
pub fn parse_graph(text: &str) -> Result<RoadGraph> {
    let mut g = RoadGraph::new();
    for (line, f) in records(text) {
        if !parse_graph_line(&mut g, line, &f)? {
            return Err(err(line, format!("unknown record '{}'", f[0])));
        }
    }
    Ok(g)
}

pub fn format_graph(g: &RoadGraph) -> String {
    let mut out = String::new();
    for v in g.vertices() {
        let vx = g.vertex(v);
        match vx.coords {
            Some((x, y)) => writeln!(out, "V {} {x} {y}", vx.name),
            None => writeln!(out, "V {}", vx.name),
        }
        .unwrap();
    }
    for e in g.edge_ids() {
        let ex = g.edge(e);
        writeln!(out, "E {} {} {} {}", ex.name, g.vertex(ex.from).name, g.vertex(ex.to).name, format_dist(&ex.weight)).unwrap();
    }
    out
}

/// One trajectory per line: `<period_tag> <edge:cost> <edge:cost> ...`.
pub fn parse_trajectories(text: &str, g: &RoadGraph) -> Result<Vec<Trajectory>> {
    records(text)
        .map(|(line, f)| {
            if f.len() < 2 {
                return Err(err(line, "expected '<period_tag> <edge:cost> ...'"));
            }
            let raw = f[1..]
                .iter()
                .map(|s| {
                    let (e, c) = s.split_once(':').ok_or_else(|| err(line, format!("expected edge:cost, got '{s}'")))?;
                    let e = g.edge_id(e).ok_or_else(|| err(line, format!("unknown edge '{e}'")))?;
                    Ok((e, num::<f64>(line, c, "cost")?))
                })
                .collect::<Result<Vec<_>>>()?;
            Trajectory::new(g, f[0], &raw).map_err(|e| err(line, e.to_string()))
        })
        .collect()
}

pub fn format_trajectories(ts: &[Trajectory], g: &RoadGraph) -> String {
    let mut out = String::new();
    for t in ts {
        out.push_str(&t.period_tag);
        for &(e, c) in &t.steps {
            write!(out, " {}:{c}", g.edge(e).name).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Period graph: `P <tag>`, graph records, then
/// `T <id> <e1,e2,...> <support> <c1/c2/...:prob,...>` per T-path.
pub fn format_pace(g: &PaceGraph) -> String {
    let mut out = format!("P {}\n", g.period_tag);
    out.push_str(&format_graph(&g.base));
    for t in g.tpaths() {
        let vecs: Vec<String> = t
            .joint
            .vectors()
            .map(|(v, p)| {
                let cs: Vec<String> = v.iter().map(u32::to_string).collect();
                format!("{}:{p}", cs.join("/"))
            })
            .collect();
        writeln!(out, "T {} {} {} {}", t.name, g.base.edge_names(&t.edges).join(","), t.support, vecs.join(",")).unwrap();
    }
    out
}

pub fn parse_pace(text: &str) -> Result<PaceGraph> {
    let mut g = RoadGraph::new();
    let mut tag = None;
    let mut pending = Vec::new();
    for (line, f) in records(text) {
        if parse_graph_line(&mut g, line, &f)? {
            continue;
        }
        match f[0] {
            "P" if f.len() == 2 => tag = Some(f[1].to_string()),
            "T" if f.len() == 5 => pending.push((line, f)),
            _ => return Err(err(line, format!("unknown or malformed record '{}'", f[0]))),
        }
    }
    let mut tpaths = Vec::new();
    for (line, f) in pending {
        let edges = edge_list(line, &g, f[2])?;
        let support: u64 = num(line, f[3], "support")?;
        let rows = f[4]
            .split(',')
            .map(|r| {
                let (v, p) = r.split_once(':').ok_or_else(|| err(line, format!("expected costs:prob, got '{r}'")))?;
                let costs = v.split('/').map(|c| num::<Cost>(line, c, "cost")).collect::<Result<Vec<_>>>()?;
                Ok((costs, num::<f64>(line, p, "probability")?))
            })
            .collect::<Result<Vec<_>>>()?;
        let joint = JointDistribution::new(edges, rows).map_err(|e| err(line, e.to_string()))?;
        tpaths.push(PaceGraph::make_tpath(&g, f[1], joint, support).map_err(|e| err(line, e.to_string()))?);
    }
    let tag = tag.ok_or_else(|| err(0, "missing 'P <tag>' record"))?;
    PaceGraph::new(g, tpaths, &tag)
}

/// Unit store: `U <id> <T|V> <e1,e2,...> <cost:prob,...>` per T-path and
/// V-path, T-paths first.
pub fn format_units(g: &UpdatedPaceGraph) -> String {
    let mut out = String::new();
    for u in g.tpath_units().iter().chain(g.vpaths()) {
        writeln!(out, "U {} {} {} {}", u.name, u.kind.tag(), g.base.edge_names(&u.edges).join(","), format_dist(&u.total)).unwrap();
    }
    out
}

/// Reads a unit store on top of the period graph it was built from.
/// T-path records must match the graph's T-paths in order.
pub fn parse_units(text: &str, g: &PaceGraph) -> Result<UpdatedPaceGraph> {
    let mut recs = Vec::new();
    for (line, f) in records(text) {
        if f.len() != 5 || f[0] != "U" {
            return Err(err(line, "expected 'U <id> <T|V> <edges> <cost:prob,...>'"));
        }
        let kind = match f[2] {
            "T" => UnitKind::TPath,
            "V" => UnitKind::VPath,
            k => return Err(err(line, format!("unit kind must be T or V, got '{k}'"))),
        };
        let edges = edge_list(line, &g.base, f[3])?;
        let mut support = 0;
        if kind == UnitKind::TPath {
            let i = recs.iter().filter(|r: &&UnitRecord| r.kind == UnitKind::TPath).count();
            if i >= g.tpaths().len() || g.tpath(i).edges != edges {
                return Err(err(line, format!("T-path '{}' does not match the period graph", f[1])));
            }
            support = g.tpath(i).support;
        }
        recs.push(UnitRecord { name: f[1].to_string(), kind, edges, total: parse_dist(line, f[4])?, support });
    }
    if recs.iter().filter(|r| r.kind == UnitKind::TPath).count() != g.tpaths().len() {
        return Err(err(0, "unit store lists a different number of T-paths than the period graph"));
    }
    let joints = g.tpaths().iter().map(|t| t.joint.clone()).collect();
    UpdatedPaceGraph::from_records(g.base.clone(), &g.period_tag, recs, Some(joints))
}

/// `M <dest> <vertex> <getMin>`; unreachable vertices print `inf`.
pub fn format_min_costs(m: &MinCostMap, g: &RoadGraph) -> String {
    let dest = &g.vertex(m.dest).name;
    let mut out = String::new();
    for v in g.vertices() {
        let c = m.get(v).map_or("inf".to_string(), |c| c.to_string());
        writeln!(out, "M {dest} {} {c}", g.vertex(v).name).unwrap();
    }
    out
}

/// Table header `D <dest> <delta> <eta>`, its `M` records, then one
/// `H <dest> <vertex> <l> <s> <v_l,...,v_s>` per vertex with `l` and `s`
/// as grid budgets. Unreachable rows read `H <dest> <vertex> inf inf -`.
pub fn format_table(t: &HeuristicTable, g: &RoadGraph) -> String {
    let dest = &g.vertex(t.dest).name;
    let mut out = format!("D {dest} {} {}\n", t.delta, t.eta);
    out.push_str(&format_min_costs(&t.min_costs, g));
    for v in g.vertices() {
        let name = &g.vertex(v).name;
        match &t.rows[v.index()] {
            Row::Unreachable => writeln!(out, "H {dest} {name} inf inf -"),
            Row::Band { l, s, values } => {
                let vals: Vec<String> = values.iter().map(f64::to_string).collect();
                writeln!(out, "H {dest} {name} {} {} {}", l * t.delta, s * t.delta, vals.join(","))
            }
        }
        .unwrap();
    }
    out
}

/// Reads every `M` map and `D`/`H` table in a heuristic cache file.
pub fn parse_heuristics(text: &str, g: &RoadGraph) -> Result<(Vec<MinCostMap>, Vec<HeuristicTable>)> {
    let n = g.vertex_count();
    let mut maps: Vec<MinCostMap> = Vec::new();
    let mut map_index: HashMap<VertexId, usize> = HashMap::new();
    // (line, dest, delta, eta, rows) per D record.
    #[allow(clippy::type_complexity)]
    let mut tables: Vec<(usize, VertexId, u64, u64, Vec<Option<Row>>)> = Vec::new();
    for (line, f) in records(text) {
        match (f[0], f.len()) {
            ("M", 4) => {
                let (d, v) = (vertex(line, g, f[1])?, vertex(line, g, f[2])?);
                let c = if f[3] == "inf" { None } else { Some(num(line, f[3], "cost")?) };
                let i = *map_index.entry(d).or_insert_with(|| {
                    maps.push(MinCostMap { dest: d, get_min: vec![None; n] });
                    maps.len() - 1
                });
                maps[i].get_min[v.index()] = c;
            }
            ("D", 4) => {
                let d = vertex(line, g, f[1])?;
                let delta: u64 = num(line, f[2], "delta")?;
                if delta == 0 {
                    return Err(err(line, "delta must be at least 1"));
                }
                tables.push((line, d, delta, num(line, f[3], "eta")?, vec![None; n]));
            }
            ("H", 6) => {
                let d = vertex(line, g, f[1])?;
                let v = vertex(line, g, f[2])?;
                let Some((_, _, delta, _, rows)) = tables.last_mut().filter(|t| t.1 == d) else {
                    return Err(err(line, "H record without a preceding D record for its destination"));
                };
                let row = if f[3] == "inf" {
                    Row::Unreachable
                } else {
                    let l: u64 = num(line, f[3], "l")?;
                    let s: u64 = num(line, f[4], "s")?;
                    if !l.is_multiple_of(*delta) || !s.is_multiple_of(*delta) || s < l {
                        return Err(err(line, "l and s must be grid budgets with l <= s"));
                    }
                    let values = f[5].split(',').map(|x| num::<f64>(line, x, "value")).collect::<Result<Vec<_>>>()?;
                    if values.len() as u64 != (s - l) / *delta + 1 {
                        return Err(err(line, "value count does not match l..s"));
                    }
                    Row::Band { l: l / *delta, s: s / *delta, values }
                };
                rows[v.index()] = Some(row);
            }
            _ => return Err(err(line, format!("unknown or malformed record '{}'", f[0]))),
        }
    }
    let tables = tables
        .into_iter()
        .map(|(line, dest, delta, eta, rows)| {
            let rows = rows.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| err(line, "table is missing rows"))?;
            let min_costs =
                map_index.get(&dest).map(|&i| maps[i].clone()).ok_or_else(|| err(line, "table has no M records for its destination"))?;
            Ok(HeuristicTable { dest, delta, eta, rows, min_costs })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((maps, tables))
}

/// One query per line: `<source> <dest> <departure_time> <budget>`.
pub fn parse_queries(text: &str, g: &RoadGraph) -> Result<Vec<Query>> {
    records(text)
        .map(|(line, f)| {
            if f.len() != 4 {
                return Err(err(line, "expected '<source> <dest> <departure_time> <budget>'"));
            }
            Ok(Query {
                source: vertex(line, g, f[0])?,
                dest: vertex(line, g, f[1])?,
                departure: num(line, f[2], "departure time")?,
                budget: num(line, f[3], "budget")?,
            })
        })
        .collect()
}

pub fn format_queries(qs: &[Query], g: &RoadGraph) -> String {
    qs.iter().map(|q| format!("{} {} {} {}\n", g.vertex(q.source).name, g.vertex(q.dest).name, q.departure, q.budget)).collect()
}

/// Result line: `<e1,e2,...|-> <probability> <explored> <wall_ms>`, tab-separated.
pub fn format_result(r: &RouteResult, g: &RoadGraph, wall: Duration) -> String {
    let path = if r.path.is_empty() { "-".to_string() } else { g.edge_names(&r.path).join(",") };
    format!("{path}\t{:.9}\t{}\t{:.3}", r.probability, r.explored, wall.as_secs_f64() * 1e3)
}
