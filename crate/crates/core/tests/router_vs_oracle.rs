use std::sync::Arc;

use pace_core::heuristics::{build_table, min_cost_map, Heuristic};
use pace_core::ids::VertexId;
use pace_core::oracle::exact_best;
use pace_core::router::{route, route_naive, route_pace, Query, RouteOptions};
use pace_core::synth::desk_instance;
use pace_core::vpath::{build_vpaths, BuildOptions};

#[test]
fn routers_match_oracle_on_random_instances() {
    let mut failures = Vec::new();
    for seed in 0..30u64 {
        let g = desk_instance(seed, 10).unwrap();
        let up = build_vpaths(&g, &BuildOptions::default()).unwrap().0;
        let n = g.base.vertex_count() as u32;
        for k in 0..4u32 {
            let s = VertexId((seed as u32 * 7 + k * 3) % n);
            let d = VertexId((seed as u32 * 5 + k * 11 + 1) % n);
            if s == d {
                continue;
            }
            let m = min_cost_map(&up, d).unwrap();
            let t1 = Arc::new(build_table(&up, d, 1, None, &m).unwrap());
            let t5 = Arc::new(build_table(&up, d, 5, None, &m).unwrap());
            let hs = [Heuristic::None, Heuristic::Binary(Arc::new(m)), Heuristic::Table(t1), Heuristic::Table(t5)];
            for budget in [10, 20, 30, 45, 60] {
                let q = Query { source: s, dest: d, departure: 0, budget };
                let truth = exact_best(&g, &q, 64).unwrap().best_probability;
                let naive = route_naive(&g, &q).unwrap().probability;
                if (naive - truth).abs() > 1e-9 {
                    failures.push(format!("seed {seed} {s}->{d} B={budget} naive {naive} oracle {truth}"));
                }
                for (i, h) in hs.iter().enumerate() {
                    for pruning in [true, false] {
                        let r = route(&up, &q, h, RouteOptions { dominance_pruning: pruning }).unwrap();
                        if (r.probability - truth).abs() > 1e-9 {
                            failures
                                .push(format!("seed {seed} {s}->{d} B={budget} V h{i} prune={pruning} {} oracle {truth}", r.probability));
                        }
                    }
                    let r = route_pace(&g, &q, h).unwrap();
                    if (r.probability - truth).abs() > 1e-9 {
                        failures.push(format!("seed {seed} {s}->{d} B={budget} T h{i} {} oracle {truth}", r.probability));
                    }
                }
            }
        }
    }
    assert!(failures.is_empty(), "{} failures:\n{}", failures.len(), failures.join("\n"));
}
