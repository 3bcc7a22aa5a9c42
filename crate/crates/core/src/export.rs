//! DOT and CSV exports.

use crate::game::{GameSpec, LoadVector};
use crate::search::SearchRecord;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Undirected DOT graph, nodes then edges, both in id order. Edge labels show
/// the load when `loads` is given, the cost function otherwise.
pub fn export_dot(spec: &GameSpec, loads: Option<&LoadVector>) -> String {
    let net = &spec.network;
    let mut out = String::from("graph game {\n");
    for n in net.nodes() {
        out.push_str(&format!("  {};\n", quote(&n.0)));
    }
    for (ix, e) in net.edges().iter().enumerate() {
        let label = match loads {
            Some(l) => format!("{}: {:.6}", e.id, l.get(ix)),
            None => format!("{}: {}", e.id, spec.costs[ix]),
        };
        out.push_str(&format!(
            "  {} -- {} [key={}, label={}];\n",
            quote(&e.a.0),
            quote(&e.b.0),
            quote(&e.id.0),
            quote(&label)
        ));
    }
    out.push_str("}\n");
    out
}

pub const CSV_HEADER: [&str; 12] = [
    "sample",
    "family",
    "kind",
    "status",
    "confidence",
    "target",
    "delta",
    "target_delta",
    "social_cost_before",
    "social_cost_after",
    "social_cost_delta",
    "note",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

// Debug formatting is the shortest round-tripping form, with an exponent
// for tiny values.
fn num(v: &Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Search records as CSV, header first. Floats use the shortest
/// round-tripping representation.
pub fn export_csv(records: &[SearchRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.sample.to_string(),
            r.family.to_string(),
            r.kind.to_string(),
            r.status.to_string(),
            opt(&r.confidence),
            opt(&r.target),
            num(&r.delta),
            num(&r.target_delta),
            num(&r.social_cost_before),
            num(&r.social_cost_after),
            num(&r.social_cost_delta),
            r.note.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Per-edge table of a solved game: id, endpoints, load and cost at that load.
pub fn export_edge_csv(spec: &GameSpec, loads: &LoadVector) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["edge", "a", "b", "load", "cost"]).expect("in-memory write");
    for (ix, e) in spec.network.edges().iter().enumerate() {
        let load = loads.get(ix);
        w.write_record([
            e.id.0.clone(),
            e.a.0.clone(),
            e.b.0.clone(),
            load.to_string(),
            spec.costs[ix].value(load).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{solve_icue, SolverOptions};
    use crate::game::Game;
    use crate::scenarios::{self, ScenarioId};

    #[test]
    fn ring_dot_has_four_nodes_and_edges() {
        let spec = scenarios::builtin(ScenarioId::TwoPopRing).spec;
        let dot = export_dot(&spec, None);
        let lines: Vec<&str> = dot.lines().collect();
        assert_eq!(lines.iter().filter(|l| l.contains(" -- ")).count(), 4);
        assert_eq!(lines.iter().filter(|l| l.trim_end().ends_with("\";")).count(), 4);
        assert_eq!(lines[1], "  \"D1\";");
    }

    #[test]
    fn solved_wheatstone_labels_carry_loads() {
        let spec = scenarios::builtin(ScenarioId::WheatstoneBp).spec;
        let game = Game::new(spec.clone()).unwrap();
        let r = solve_icue(&game, &SolverOptions::default()).unwrap();
        let dot = export_dot(&spec, Some(&r.loads));
        for want in ["O1: 0.500000", "1D: 0.500000", "O2: 0.500000", "2D: 0.500000", "12: 0.000000"] {
            assert!(dot.contains(want), "{want} missing from\n{dot}");
        }
        assert_eq!(dot, export_dot(&spec, Some(&r.loads)));
    }

    #[test]
    fn empty_results_are_header_only() {
        assert_eq!(export_csv(&[]), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn edge_table() {
        let spec = scenarios::builtin(ScenarioId::PigouIbpsc).spec;
        let csv = export_edge_csv(&spec, &LoadVector(vec![1.0, 0.0]));
        assert_eq!(csv, "edge,a,b,load,cost\ne1,O,D,1,1\ne2,O,D,0,2\n");
    }
}
