//! Builtin reference games with their paired cost modification or
//! information expansion.

use std::fmt;
use std::str::FromStr;

use crate::game::{CostFunction, GameSpec, Network, TypeKey};
use crate::paradox::Expansion;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioId {
    WheatstoneBp,
    WheatstoneIbp,
    PigouIbpsc,
    TwoPopRing,
    Grid2x3,
    StadiumRing,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        ScenarioId::WheatstoneBp,
        ScenarioId::WheatstoneIbp,
        ScenarioId::PigouIbpsc,
        ScenarioId::TwoPopRing,
        ScenarioId::Grid2x3,
        ScenarioId::StadiumRing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::WheatstoneBp => "wheatstone_bp",
            ScenarioId::WheatstoneIbp => "wheatstone_ibp",
            ScenarioId::PigouIbpsc => "pigou_ibpsc",
            ScenarioId::TwoPopRing => "two_pop_ring",
            ScenarioId::Grid2x3 => "grid_2x3",
            ScenarioId::StadiumRing => "stadium_ring",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = ScenarioId::ALL.iter().map(|i| i.as_str()).collect();
                format!("unknown scenario '{s}' (known: {})", known.join(", "))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: ScenarioId,
    pub description: String,
    pub spec: GameSpec,
    pub expansion: Option<Expansion>,
    /// Pointwise-reduced edge costs, aligned with edge indices.
    pub modified_costs: Option<Vec<CostFunction>>,
}

pub fn builtin(id: ScenarioId) -> Scenario {
    match id {
        ScenarioId::WheatstoneBp => wheatstone_bp(),
        ScenarioId::WheatstoneIbp => wheatstone_ibp(),
        ScenarioId::PigouIbpsc => pigou_ibpsc(),
        ScenarioId::TwoPopRing => two_pop_ring(),
        ScenarioId::Grid2x3 => grid_2x3(),
        ScenarioId::StadiumRing => stadium_ring(),
    }
}

pub fn by_name(name: &str) -> Result<Scenario, String> {
    Ok(builtin(name.parse()?))
}

fn expansion(spec: &GameSpec, target: TypeKey, added: &[&str]) -> Expansion {
    Expansion {
        target,
        added: spec.network.edge_set(added).expect("builtin edge ids"),
    }
}

fn wheatstone(middle: CostFunction) -> GameSpec {
    let net = Network::new(
        ["O", "1", "2", "D"],
        [
            ("O1", "O", "1"),
            ("1D", "1", "D"),
            ("O2", "O", "2"),
            ("2D", "2", "D"),
            ("12", "1", "2"),
        ],
    )
    .expect("wheatstone network");
    let mut spec = GameSpec::new(net);
    spec.set_cost("O1", CostFunction::linear(1.0))
        .and_then(|s| s.set_cost("1D", CostFunction::constant(1.0)))
        .and_then(|s| s.set_cost("O2", CostFunction::constant(1.0)))
        .and_then(|s| s.set_cost("2D", CostFunction::linear(1.0)))
        .and_then(|s| s.set_cost("12", middle))
        .and_then(|s| s.add_population(1, "O", "D", None))
        .expect("wheatstone costs");
    spec
}

fn wheatstone_bp() -> Scenario {
    let mut spec = wheatstone(CostFunction::big_m());
    spec.add_type(1, 1, None, 1.0).expect("wheatstone type");
    let mut modified = spec.costs.clone();
    modified[spec.network.edge_index("12").unwrap()] = CostFunction::constant(0.0);
    Scenario {
        id: ScenarioId::WheatstoneBp,
        description: "Wheatstone network with unit demand. The crossbar 12 starts unusable \
                      (big-M) and is reduced to cost 0; equilibrium social cost rises from 1.5 to 2."
            .into(),
        spec,
        expansion: None,
        modified_costs: Some(modified),
    }
}

fn wheatstone_ibp() -> Scenario {
    let mut spec = wheatstone(CostFunction::constant(0.0));
    spec.add_type(1, 1, Some(&["O1", "1D", "O2", "2D"]), 1.0)
        .expect("wheatstone type");
    let exp = expansion(&spec, TypeKey::new(1, 1), &["12"]);
    Scenario {
        id: ScenarioId::WheatstoneIbp,
        description: "Wheatstone network with a free crossbar the single type does not know. \
                      Learning about the crossbar raises its own cost from 1.5 to 2."
            .into(),
        spec,
        expansion: Some(exp),
        modified_costs: None,
    }
}

fn pigou_ibpsc() -> Scenario {
    let net = Network::new(["O", "D"], [("e1", "O", "D"), ("e2", "O", "D")]).expect("pigou network");
    let mut spec = GameSpec::new(net);
    spec.set_cost("e1", CostFunction::linear(1.0))
        .and_then(|s| s.set_cost("e2", CostFunction::constant(2.0)))
        .and_then(|s| s.add_population(1, "O", "D", None))
        .and_then(|s| s.add_population(2, "O", "D", None))
        .and_then(|s| s.add_type(1, 1, Some(&["e2"]), 1.0))
        .and_then(|s| s.add_type(2, 1, None, 1.0))
        .expect("pigou game");
    let exp = expansion(&spec, TypeKey::new(1, 1), &["e1"]);
    Scenario {
        id: ScenarioId::PigouIbpsc,
        description: "Two parallel edges, e1 with cost t and e2 with constant cost 2, and two \
                      unit-demand populations. Type (1,1) initially knows only the constant-cost \
                      edge e2; telling it about e1 raises social cost from 3 to 4 while its own \
                      cost stays 2. Restricting (1,1) to the linear edge e1 instead would give a \
                      pre-expansion social cost of 4, so the restriction sits on the constant edge."
            .into(),
        spec,
        expansion: Some(exp),
        modified_costs: None,
    }
}

fn two_pop_ring() -> Scenario {
    let net = Network::new(
        ["O1", "O2", "D1", "D2"],
        [
            ("e1", "O1", "O2"),
            ("e2", "O2", "D1"),
            ("e3", "O1", "D2"),
            ("e4", "D2", "D1"),
        ],
    )
    .expect("ring network");
    let mut spec = GameSpec::new(net);
    for e in ["e1", "e2", "e3", "e4"] {
        spec.set_cost(e, CostFunction::linear(1.0)).expect("ring cost");
    }
    spec.add_population(1, "O1", "D1", None)
        .and_then(|s| s.add_population(2, "O2", "D2", None))
        .and_then(|s| s.add_type(1, 1, Some(&["e1", "e2"]), 1.0))
        .and_then(|s| s.add_type(1, 2, None, 1.0))
        .and_then(|s| s.add_type(2, 2, None, 1.0))
        .expect("ring game");
    let exp = expansion(&spec, TypeKey::new(1, 1), &["e3", "e4"]);
    Scenario {
        id: ScenarioId::TwoPopRing,
        description: "Four-edge ring shared by two populations, O1 to D1 and O2 to D2, all edge \
                      costs t and unit demands. Type (1,1) knows only the arc e1 e2; the \
                      expansion reveals the other arc. As a circuit game it is immune to IBP."
            .into(),
        spec,
        expansion: Some(exp),
        modified_costs: None,
    }
}

fn grid_2x3() -> Scenario {
    let net = Network::new(
        ["O", "b1", "b2", "t0", "t1", "D"],
        [
            ("Ob1", "O", "b1"),
            ("b1b2", "b1", "b2"),
            ("b2D", "b2", "D"),
            ("Ot0", "O", "t0"),
            ("t0t1", "t0", "t1"),
            ("t1D", "t1", "D"),
            ("b1t1", "b1", "t1"),
        ],
    )
    .expect("grid network");
    let mut spec = GameSpec::new(net);
    spec.set_cost("Ob1", CostFunction::linear(1.0))
        .and_then(|s| s.set_cost("b1b2", CostFunction::constant(0.5)))
        .and_then(|s| s.set_cost("b2D", CostFunction::constant(0.5)))
        .and_then(|s| s.set_cost("Ot0", CostFunction::constant(0.5)))
        .and_then(|s| s.set_cost("t0t1", CostFunction::constant(0.5)))
        .and_then(|s| s.set_cost("t1D", CostFunction::linear(1.0)))
        .and_then(|s| s.set_cost("b1t1", CostFunction::constant(0.0)))
        .and_then(|s| s.add_population(1, "O", "D", None))
        .and_then(|s| s.add_type(1, 1, Some(&["Ob1", "b1b2", "b2D", "Ot0", "t0t1", "t1D"]), 1.0))
        .expect("grid game");
    let exp = expansion(&spec, TypeKey::new(1, 1), &["b1t1"]);
    Scenario {
        id: ScenarioId::Grid2x3,
        description: "2x3 grid between opposite corners O and D. The inner rung b1t1 turns it \
                      into a Wheatstone network; revealing the free rung to the single type \
                      raises its cost from 1.5 to 2."
            .into(),
        spec,
        expansion: Some(exp),
        modified_costs: None,
    }
}

const RING: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];
const SEATS: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];

fn ring_edge(i: usize) -> String {
    format!("{}{}", RING[i], RING[(i + 1) % 8])
}

fn stadium_network(walkways: bool) -> Network {
    let mut nodes: Vec<String> = RING.iter().chain(SEATS.iter()).map(|s| s.to_string()).collect();
    nodes.extend(["bus", "car", "train", "trains"].map(String::from));
    let mut edges: Vec<(String, String, String)> = (0..8)
        .map(|i| (ring_edge(i), RING[i].to_string(), RING[(i + 1) % 8].to_string()))
        .collect();
    for i in 0..8 {
        edges.push((
            format!("{}{}", SEATS[i], RING[i]),
            SEATS[i].to_string(),
            RING[i].to_string(),
        ));
    }
    for (hub, at) in [("bus", "A"), ("car", "H"), ("train", "D"), ("trains", "E")] {
        edges.push((format!("{hub}-{at}"), hub.to_string(), at.to_string()));
    }
    if walkways {
        for i in 0..8 {
            edges.push((
                format!("{}{}", SEATS[i], SEATS[(i + 1) % 8]),
                SEATS[i].to_string(),
                SEATS[(i + 1) % 8].to_string(),
            ));
        }
    }
    Network::new(nodes, edges).expect("stadium network")
}

fn stadium_spec(walkways: bool) -> GameSpec {
    let net = stadium_network(walkways);
    let mut spec = GameSpec::new(net);
    for i in 0..spec.network.edge_count() {
        spec.costs[i] = CostFunction::affine(1.0, 1.0);
    }
    // exits: seat block B to the train at D, G to the bus at A, F to the car park at H
    let exits: [(u32, &str, &str, [&str; 2]); 3] = [
        (1, "B", "D", ["BC", "CD"]),
        (2, "G", "A", ["GH", "HA"]),
        (3, "F", "H", ["FG", "GH"]),
    ];
    for (id, o, d, short) in exits {
        spec.add_population(id, o, d, None)
            .and_then(|s| s.add_type(id, 1, Some(&short), 1.0))
            .and_then(|s| s.add_type(id, 2, None, 1.0))
            .expect("stadium population");
    }
    spec
}

fn stadium_ring() -> Scenario {
    let spec = stadium_spec(false);
    let long_arc: Vec<String> = (0..8)
        .map(ring_edge)
        .filter(|e| e != "BC" && e != "CD")
        .collect();
    let long: Vec<&str> = long_arc.iter().map(String::as_str).collect();
    let exp = expansion(&spec, TypeKey::new(1, 1), &long);
    Scenario {
        id: ScenarioId::StadiumRing,
        description: "Stadium evacuation: eight seat blocks around a ring road, with pendant \
                      seat and transport nodes. Three exit flows travel along the ring, each \
                      with a type that only knows the short arc. Every relevant network is the \
                      ring itself, so the game is a circuit game."
            .into(),
        spec,
        expansion: Some(exp),
        modified_costs: None,
    }
}

/// The stadium with walkways joining neighbouring seat blocks. The extra
/// routes break the single-cycle structure, so it is no longer a circuit game.
pub fn stadium_with_walkways() -> Scenario {
    let mut sc = stadium_ring();
    sc.spec = stadium_spec(true);
    let long_arc: Vec<String> = (0..8)
        .map(ring_edge)
        .filter(|e| e != "BC" && e != "CD")
        .collect();
    let long: Vec<&str> = long_arc.iter().map(String::as_str).collect();
    sc.expansion = Some(expansion(&sc.spec, TypeKey::new(1, 1), &long));
    sc.description = "Stadium evacuation with walkways between neighbouring seat blocks.".into();
    sc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::validate_game;

    #[test]
    fn every_builtin_validates() {
        for id in ScenarioId::ALL {
            let sc = builtin(id);
            let report = validate_game(&sc.spec);
            assert!(report.is_valid(), "{id}: {report}");
            assert_eq!(sc.id, id);
            if let Some(costs) = &sc.modified_costs {
                assert_eq!(costs.len(), sc.spec.network.edge_count());
            }
        }
        assert!(validate_game(&stadium_with_walkways().spec).is_valid());
    }

    #[test]
    fn names_round_trip() {
        for id in ScenarioId::ALL {
            assert_eq!(id.as_str().parse::<ScenarioId>().unwrap(), id);
        }
        assert!("fig1".parse::<ScenarioId>().is_err());
    }

    #[test]
    fn stadium_relevant_networks_are_the_ring() {
        let sc = builtin(ScenarioId::StadiumRing);
        let ring: Vec<String> = (0..8).map(ring_edge).collect();
        for p in &sc.spec.populations {
            let ids: Vec<String> = sc.spec.network.edge_ids(&p.relevant).into_iter().map(|e| e.0).collect();
            let mut want = ring.clone();
            want.sort();
            assert_eq!(ids, want);
        }
    }
}
