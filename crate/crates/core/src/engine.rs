//! Query answering over period-tagged graphs with lazily built,
//! shared per-destination heuristics.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::graph::PaceGraph;
use crate::heuristics::{build_table, euclidean_min_costs, min_cost_map, Heuristic, HeuristicTable, MinCostMap};
use crate::ids::VertexId;
use crate::router::{route, route_naive, route_pace, Query, RouteOptions, RouteResult};
use crate::vpath::{build_vpaths, BuildOptions, UpdatedPaceGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bound {
    None,
    /// Binary bound from straight-line distance.
    Euclidean,
    /// Binary bound from the least-cost tree.
    Binary,
    /// Budget-specific table with grid step δ.
    Table(u64),
}

/// Router family plus the bound it consults.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Edges and T-paths only.
    T(Bound),
    /// Edges, T-paths and V-paths.
    V(Bound),
}

impl Variant {
    pub fn bound(self) -> Bound {
        match self {
            Variant::T(b) | Variant::V(b) => b,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (family, b) = match self {
            Variant::T(b) => ("T", b),
            Variant::V(b) => ("V", b),
        };
        match b {
            Bound::None => write!(f, "{family}-None"),
            Bound::Euclidean => write!(f, "{family}-B-E"),
            Bound::Binary => write!(f, "{family}-B-P"),
            Bound::Table(d) => write!(f, "{family}-BS-{d}"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown variant '{s}'"));
        let (family, rest) = s.split_once('-').ok_or_else(bad)?;
        let bound = match rest {
            "None" => Bound::None,
            "B-E" => Bound::Euclidean,
            "B-P" => Bound::Binary,
            _ => {
                let d = rest.strip_prefix("BS-").ok_or_else(bad)?;
                let d: u64 = d.parse().map_err(|_| bad())?;
                if d == 0 {
                    return Err(bad());
                }
                Bound::Table(d)
            }
        };
        match (family, bound) {
            ("T", b) => Ok(Variant::T(b)),
            ("V", Bound::Euclidean) => Err(bad()),
            ("V", b) => Ok(Variant::V(b)),
            _ => Err(bad()),
        }
    }
}

/// One period graph, used for departures in `start..end`.
#[derive(Clone, Debug)]
pub struct PeriodGraph {
    pub start: u64,
    pub end: u64,
    pub pace: PaceGraph,
    pub updated: UpdatedPaceGraph,
}

impl PeriodGraph {
    /// Builds V-paths without a length cap.
    pub fn new(pace: PaceGraph, start: u64, end: u64) -> Result<Self> {
        let updated = build_vpaths(&pace, &BuildOptions::default())?.0;
        Ok(PeriodGraph { start, end, pace, updated })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum CacheKey {
    Binary,
    Euclidean,
    Table(u64),
}

#[derive(Clone, Debug)]
enum Cached {
    Map(Arc<MinCostMap>),
    Table(Arc<HeuristicTable>),
}

pub struct Engine {
    periods: Vec<PeriodGraph>,
    cache: Mutex<HashMap<(usize, VertexId, CacheKey), Cached>>,
    pub options: RouteOptions,
}

impl Engine {
    pub fn new(periods: Vec<PeriodGraph>) -> Result<Self> {
        for (i, p) in periods.iter().enumerate() {
            if p.start >= p.end {
                return Err(Error::InvalidParameter(format!("period '{}' has an empty window", p.pace.period_tag)));
            }
            if periods[..i].iter().any(|o| o.start < p.end && p.start < o.end) {
                return Err(Error::InvalidParameter(format!("period '{}' overlaps another", p.pace.period_tag)));
            }
        }
        Ok(Engine { periods, cache: Mutex::new(HashMap::new()), options: RouteOptions::default() })
    }

    /// One graph for every departure time.
    pub fn single(pace: PaceGraph) -> Result<Self> {
        Engine::new(vec![PeriodGraph::new(pace, 0, u64::MAX)?])
    }

    pub fn periods(&self) -> &[PeriodGraph] {
        &self.periods
    }

    pub fn period_for(&self, departure: u64) -> Result<usize> {
        self.periods.iter().position(|p| p.start <= departure && departure < p.end).ok_or(Error::NoGraphForPeriod(departure))
    }

    fn cached(&self, key: (usize, VertexId, CacheKey), build: impl FnOnce() -> Result<Cached>) -> Result<Cached> {
        if let Some(c) = self.cache.lock().unwrap().get(&key) {
            return Ok(c.clone());
        }
        let built = build()?;
        Ok(self.cache.lock().unwrap().entry(key).or_insert(built).clone())
    }

    fn min_costs(&self, period: usize, dest: VertexId) -> Result<Arc<MinCostMap>> {
        let p = &self.periods[period];
        match self.cached((period, dest, CacheKey::Binary), || Ok(Cached::Map(Arc::new(min_cost_map(&p.updated, dest)?))))? {
            Cached::Map(m) => Ok(m),
            Cached::Table(_) => unreachable!("binary key holds a map"),
        }
    }

    /// The bound for `dest` in a period, built on first use.
    pub fn heuristic(&self, period: usize, dest: VertexId, bound: Bound) -> Result<Heuristic> {
        let p = &self.periods[period];
        if dest.index() >= p.pace.base.vertex_count() {
            return Err(Error::UnknownVertex(dest.to_string()));
        }
        Ok(match bound {
            Bound::None => Heuristic::None,
            Bound::Binary => Heuristic::Binary(self.min_costs(period, dest)?),
            Bound::Euclidean => {
                let c = self
                    .cached((period, dest, CacheKey::Euclidean), || Ok(Cached::Map(Arc::new(euclidean_min_costs(&p.pace.base, dest)?))))?;
                match c {
                    Cached::Map(m) => Heuristic::Binary(m),
                    Cached::Table(_) => unreachable!("euclidean key holds a map"),
                }
            }
            Bound::Table(delta) => {
                let m = self.min_costs(period, dest)?;
                let c = self.cached((period, dest, CacheKey::Table(delta)), || {
                    Ok(Cached::Table(Arc::new(build_table(&p.updated, dest, delta, None, &m)?)))
                })?;
                match c {
                    Cached::Table(t) => Heuristic::Table(t),
                    Cached::Map(_) => unreachable!("table key holds a table"),
                }
            }
        })
    }

    pub fn run(&self, variant: Variant, q: &Query) -> Result<RouteResult> {
        let period = self.period_for(q.departure)?;
        let p = &self.periods[period];
        match variant {
            Variant::T(Bound::None) => route_naive(&p.pace, q),
            Variant::T(b) => route_pace(&p.pace, q, &self.heuristic(period, q.dest, b)?),
            Variant::V(b) => route(&p.updated, q, &self.heuristic(period, q.dest, b)?, self.options),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::desk_instance;

    #[test]
    fn variant_names_round_trip() {
        for s in ["T-None", "T-B-E", "T-B-P", "T-BS-5", "V-None", "V-B-P", "V-BS-1"] {
            assert_eq!(s.parse::<Variant>().unwrap().to_string(), s);
        }
        for s in ["V-B-E", "T-BS-0", "X-None", "T", "T-BS-x"] {
            assert!(s.parse::<Variant>().is_err(), "{s}");
        }
    }

    #[test]
    fn periods_select_by_departure() {
        let g = desk_instance(1, 10).unwrap();
        let a = PeriodGraph::new(g.clone(), 0, 100).unwrap();
        let b = PeriodGraph::new(g.clone(), 100, 200).unwrap();
        let e = Engine::new(vec![a, b]).unwrap();
        assert_eq!(e.period_for(0).unwrap(), 0);
        assert_eq!(e.period_for(100).unwrap(), 1);
        assert!(matches!(e.period_for(200), Err(Error::NoGraphForPeriod(200))));
        let overlapping = vec![PeriodGraph::new(g.clone(), 0, 100).unwrap(), PeriodGraph::new(g, 50, 150).unwrap()];
        assert!(Engine::new(overlapping).is_err());
    }

    #[test]
    fn heuristics_are_cached() {
        let e = Engine::single(desk_instance(2, 10).unwrap()).unwrap();
        let a = e.heuristic(0, VertexId(1), Bound::Table(2)).unwrap();
        let b = e.heuristic(0, VertexId(1), Bound::Table(2)).unwrap();
        match (a, b) {
            (Heuristic::Table(x), Heuristic::Table(y)) => assert!(Arc::ptr_eq(&x, &y)),
            _ => panic!("expected tables"),
        }
    }
}
