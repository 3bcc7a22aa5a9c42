//! Braess-type paradox detection: cost reductions (BP), information
//! expansions that hurt the informed type (IBP) or everyone (IBPSC).

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::{solve_icue, EquilibriumError, EquilibriumResult, SolverOptions};
use crate::game::{CostFunction, EdgeId, EdgeSet, GameError, GameSpec, Network, NodeIx, TypeKey};
use crate::pathsets::{enumerate_paths, Path, PathError, DEFAULT_PATH_CAP};
use crate::topology;

/// Absolute cost difference above which a paradox counts as occurred.
pub const OCCURRENCE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    pub target: TypeKey,
    pub added: EdgeSet,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParadoxError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("expansion of type {0} adds no edge it does not already know")]
    NonStrict(TypeKey),
    #[error("expansion of type {key} adds edge {edge} outside its population's relevant edges")]
    OutsideRelevant { key: TypeKey, edge: EdgeId },
    #[error("{0}")]
    NotDominated(String),
    #[error("modified game differs from the original in {0}")]
    Mismatch(String),
    #[error("not a circuit game: {0}")]
    NotCircuitGame(String),
    #[error("verdict withheld: equilibrium {stage} did not converge (relative gap {gap:e} after {iterations} iterations)")]
    NotConverged {
        stage: &'static str,
        gap: f64,
        iterations: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParadoxKind {
    Bp,
    Ibp,
    Ibpsc,
}

impl ParadoxKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParadoxKind::Bp => "bp",
            ParadoxKind::Ibp => "ibp",
            ParadoxKind::Ibpsc => "ibpsc",
        }
    }
}

impl fmt::Display for ParadoxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ParadoxKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bp" => Ok(ParadoxKind::Bp),
            "ibp" => Ok(ParadoxKind::Ibp),
            "ibpsc" => Ok(ParadoxKind::Ibpsc),
            _ => Err(format!("unknown paradox kind '{s}' (bp, ibp, ibpsc)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Confidence {
    Certified,
    /// Some equilibrium involved may not have unique loads, so another
    /// equilibrium pair could give a different answer.
    WitnessDependent,
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Confidence::Certified => "certified",
            Confidence::WitnessDependent => "witness-dependent",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParadoxVerdict {
    pub kind: ParadoxKind,
    pub before: EquilibriumResult,
    pub after: EquilibriumResult,
    /// The quantity the kind is decided on: target type cost change for IBP,
    /// social cost change otherwise.
    pub delta: f64,
    pub occurred: bool,
    pub confidence: Confidence,
    /// Cost change of every type present in both games.
    pub type_deltas: BTreeMap<TypeKey, f64>,
    pub social_cost_delta: f64,
    /// Expanded type and its cost change (expansions only).
    pub target: Option<TypeKey>,
    pub target_delta: Option<f64>,
    pub warnings: Vec<String>,
}

impl ParadoxVerdict {
    /// IBP verdict from the same equilibrium pair.
    pub fn ibp_occurred(&self) -> Option<bool> {
        self.target_delta.map(|d| d > OCCURRENCE_TOL)
    }

    pub fn ibpsc_occurred(&self) -> bool {
        self.social_cost_delta > OCCURRENCE_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedGame {
    pub spec: GameSpec,
    pub warnings: Vec<String>,
}

/// The game with the target type's known edges enlarged by `expansion.added`;
/// everything else is unchanged. Warns when the target's strategy set does
/// not change.
pub fn expand_information(spec: &GameSpec, expansion: &Expansion) -> Result<ExpandedGame, ParadoxError> {
    let key = expansion.target;
    let ix = spec.type_index(key).ok_or(GameError::UnknownType(key))?;
    let pop = spec
        .population(key.population)
        .ok_or(GameError::UnknownPopulation(key.population))?;
    for &e in &expansion.added {
        if e >= spec.network.edge_count() {
            return Err(GameError::UnknownEdge(format!("#{e}")).into());
        }
        if !pop.relevant.contains(&e) {
            return Err(ParadoxError::OutsideRelevant {
                key,
                edge: spec.network.edge_id(e).clone(),
            });
        }
    }
    let known = &spec.types[ix].known;
    if expansion.added.is_subset(known) {
        return Err(ParadoxError::NonStrict(key));
    }
    let mut out = spec.clone();
    out.types[ix].known.extend(expansion.added.iter().copied());

    let mut warnings = Vec::new();
    let strategies = |known: &EdgeSet| -> Result<Vec<Path>, PathError> {
        let allowed: EdgeSet = known.intersection(&pop.relevant).copied().collect();
        enumerate_paths(&spec.network, pop.origin, pop.destination, &allowed, DEFAULT_PATH_CAP)
    };
    if strategies(known)? == strategies(&out.types[ix].known)? {
        warnings.push(format!(
            "expansion leaves the strategy set of type {key} unchanged"
        ));
    }
    Ok(ExpandedGame { spec: out, warnings })
}

fn solve_checked(spec: GameSpec, options: &SolverOptions, stage: &'static str) -> Result<EquilibriumResult, ParadoxError> {
    let game = options.build_game(spec)?;
    let r = solve_icue(&game, options)?;
    if !r.converged {
        return Err(ParadoxError::NotConverged {
            stage,
            gap: r.gaps.max_relative,
            iterations: r.iterations,
        });
    }
    Ok(r)
}

fn compare(
    kind: ParadoxKind,
    before: EquilibriumResult,
    after: EquilibriumResult,
    target: Option<TypeKey>,
    warnings: Vec<String>,
) -> ParadoxVerdict {
    let type_deltas: BTreeMap<TypeKey, f64> = before
        .type_costs
        .iter()
        .filter_map(|(k, c)| after.type_cost(*k).map(|a| (*k, a - c.value)))
        .collect();
    let social_cost_delta = after.social_cost - before.social_cost;
    let target_delta = target.and_then(|k| type_deltas.get(&k).copied());
    let delta = match kind {
        ParadoxKind::Ibp => target_delta.unwrap_or(0.0),
        ParadoxKind::Ibpsc | ParadoxKind::Bp => social_cost_delta,
    };
    let confidence = if before.loads_unique && after.loads_unique {
        Confidence::Certified
    } else {
        Confidence::WitnessDependent
    };
    ParadoxVerdict {
        kind,
        delta,
        occurred: delta > OCCURRENCE_TOL,
        confidence,
        type_deltas,
        social_cost_delta,
        target,
        target_delta,
        warnings,
        before,
        after,
    }
}

/// Solves before and after an information expansion. `kind` selects which
/// delta decides the verdict; both deltas are always reported.
pub fn detect_expansion(
    spec: &GameSpec,
    expansion: &Expansion,
    kind: ParadoxKind,
    options: &SolverOptions,
) -> Result<ParadoxVerdict, ParadoxError> {
    let expanded = expand_information(spec, expansion)?;
    let before = solve_checked(spec.clone(), options, "before expansion")?;
    let after = solve_checked(expanded.spec, options, "after expansion")?;
    Ok(compare(kind, before, after, Some(expansion.target), expanded.warnings))
}

/// IBP: the expanded type's own equilibrium cost rises.
pub fn detect_ibp(spec: &GameSpec, expansion: &Expansion, options: &SolverOptions) -> Result<ParadoxVerdict, ParadoxError> {
    detect_expansion(spec, expansion, ParadoxKind::Ibp, options)
}

/// IBPSC: social cost rises after the expansion.
pub fn detect_ibpsc(spec: &GameSpec, expansion: &Expansion, options: &SolverOptions) -> Result<ParadoxVerdict, ParadoxError> {
    detect_expansion(spec, expansion, ParadoxKind::Ibpsc, options)
}

/// BP: social cost rises after pointwise cost (and demand) reductions.
/// Dominance is checked coefficient-wise, with big-M dominating any finite
/// polynomial.
pub fn detect_bp(
    spec: &GameSpec,
    modified_costs: &[CostFunction],
    modified_demands: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<ParadoxVerdict, ParadoxError> {
    if modified_costs.len() != spec.costs.len() {
        return Err(ParadoxError::Mismatch(format!(
            "edge cost count ({} vs {})",
            modified_costs.len(),
            spec.costs.len()
        )));
    }
    for (e, (new, old)) in modified_costs.iter().zip(&spec.costs).enumerate() {
        new.check()?;
        if !new.dominated_by(old) {
            return Err(ParadoxError::NotDominated(format!(
                "cost of edge {} is not reduced pointwise: {new} vs {old}",
                spec.network.edge_id(e)
            )));
        }
    }
    let mut modified = spec.clone();
    modified.costs = modified_costs.to_vec();
    if let Some(demands) = modified_demands {
        if demands.len() != spec.types.len() {
            return Err(ParadoxError::Mismatch(format!(
                "demand count ({} vs {})",
                demands.len(),
                spec.types.len()
            )));
        }
        for (t, &d) in modified.types.iter_mut().zip(demands) {
            if !(d <= t.demand) {
                return Err(ParadoxError::NotDominated(format!(
                    "demand of type {} rises from {} to {d}",
                    t.key, t.demand
                )));
            }
            t.demand = d;
        }
    }
    let before = solve_checked(spec.clone(), options, "of the original game")?;
    let after = solve_checked(modified, options, "of the reduced game")?;
    Ok(compare(ParadoxKind::Bp, before, after, None, Vec::new()))
}

/// BP between two full games that must agree in everything except edge costs
/// and demands.
pub fn detect_bp_pair(original: &GameSpec, modified: &GameSpec, options: &SolverOptions) -> Result<ParadoxVerdict, ParadoxError> {
    if original.network != modified.network {
        return Err(ParadoxError::Mismatch("the network".into()));
    }
    if original.populations != modified.populations {
        return Err(ParadoxError::Mismatch("the populations".into()));
    }
    let same_types = original.types.len() == modified.types.len()
        && original
            .types
            .iter()
            .zip(&modified.types)
            .all(|(a, b)| a.key == b.key && a.known == b.known);
    if !same_types {
        return Err(ParadoxError::Mismatch("the information types".into()));
    }
    let demands: Vec<f64> = modified.types.iter().map(|t| t.demand).collect();
    detect_bp(original, &modified.costs, Some(&demands), options)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NotAllWorse {
    pub holds: bool,
    /// Per type cost change after the expansion, positive-demand types only.
    pub type_deltas: BTreeMap<TypeKey, f64>,
    pub verdict: ParadoxVerdict,
}

/// For circuit games: after an expansion, at least one type with positive
/// demand is not strictly worse off.
pub fn check_not_all_worse(spec: &GameSpec, expansion: &Expansion, options: &SolverOptions) -> Result<NotAllWorse, ParadoxError> {
    let report = topology::is_circuit_game(spec);
    if !report.is_circuit_game {
        let why = if report.diagnostics.is_empty() {
            "no populations".to_string()
        } else {
            report.diagnostics.join("; ")
        };
        return Err(ParadoxError::NotCircuitGame(why));
    }
    let verdict = detect_ibp(spec, expansion, options)?;
    let type_deltas: BTreeMap<TypeKey, f64> = verdict
        .type_deltas
        .iter()
        .filter(|(k, _)| spec.info_type(**k).is_some_and(|t| t.demand > 0.0))
        .map(|(k, d)| (*k, *d))
        .collect();
    let holds = type_deltas.is_empty() || type_deltas.values().any(|&d| d <= OCCURRENCE_TOL);
    Ok(NotAllWorse {
        holds,
        type_deltas,
        verdict,
    })
}

/// A game together with the expansion that exhibits a paradox on it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionInstance {
    pub spec: GameSpec,
    pub expansion: Expansion,
}

/// Parameters of the constructed social-cost witness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessCosts {
    /// Slope of the load-dependent edge.
    pub slope: f64,
    /// Cost of the constant edge.
    pub constant: f64,
    pub restricted_demand: f64,
    pub informed_demand: f64,
}

impl Default for WitnessCosts {
    fn default() -> Self {
        WitnessCosts {
            slope: 1.0,
            constant: 2.0,
            restricted_demand: 1.0,
            informed_demand: 1.0,
        }
    }
}

/// Builds costs and information sets under which expanding one type's
/// information raises social cost, on any two-terminal network with at least
/// two origin–destination paths.
///
/// Two paths whose union carries exactly two origin–destination paths form a
/// Pigou pair: one private edge of the first gets cost `slope·t`, one private
/// edge of the second the constant cost, other edges of the pair are free and
/// every remaining edge is big-M. Type (1,1) only knows the second path, type
/// (1,2) knows everything, and the expansion reveals the first path to (1,1).
/// Returns `None` when no second path exists.
pub fn construct_ibpsc_witness(
    network: &Network,
    origin: NodeIx,
    destination: NodeIx,
    costs: WitnessCosts,
) -> Result<Option<ExpansionInstance>, ParadoxError> {
    let all = network.all_edges();
    let paths = enumerate_paths(network, origin, destination, &all, DEFAULT_PATH_CAP)?;
    let mut pair = None;
    'outer: for (i, p) in paths.iter().enumerate() {
        for q in &paths[i + 1..] {
            let union: EdgeSet = p.edge_set().union(&q.edge_set()).copied().collect();
            if enumerate_paths(network, origin, destination, &union, 2).is_ok() {
                pair = Some((p.clone(), q.clone()));
                break 'outer;
            }
        }
    }
    let Some((linear_path, constant_path)) = pair else {
        return Ok(None);
    };
    let p1 = linear_path.edge_set();
    let p2 = constant_path.edge_set();
    let linear_edge = *p1.difference(&p2).next().expect("distinct paths have private edges");
    let constant_edge = *p2.difference(&p1).next().expect("distinct paths have private edges");

    let mut spec = GameSpec::new(network.clone());
    for e in 0..network.edge_count() {
        spec.costs[e] = if e == linear_edge {
            CostFunction::linear(costs.slope)
        } else if e == constant_edge {
            CostFunction::constant(costs.constant)
        } else if p1.contains(&e) || p2.contains(&e) {
            CostFunction::constant(0.0)
        } else {
            CostFunction::big_m()
        };
    }
    let o = network.node(origin).0.clone();
    let d = network.node(destination).0.clone();
    spec.add_population(1, &o, &d, None)?;
    let known: Vec<String> = network.edge_ids(&p2).into_iter().map(|e| e.0).collect();
    let known: Vec<&str> = known.iter().map(String::as_str).collect();
    spec.add_type(1, 1, Some(&known), costs.restricted_demand)?
        .add_type(1, 2, None, costs.informed_demand)?;
    let added: EdgeSet = p1.difference(&p2).copied().collect();
    Ok(Some(ExpansionInstance {
        spec,
        expansion: Expansion {
            target: TypeKey::new(1, 1),
            added,
        },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{self, ScenarioId};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn scenario_expansion(id: ScenarioId) -> (GameSpec, Expansion) {
        let sc = scenarios::builtin(id);
        (sc.spec, sc.expansion.unwrap())
    }

    #[test]
    fn ring_expansion_reveals_the_second_arc() {
        let (spec, exp) = scenario_expansion(ScenarioId::TwoPopRing);
        let out = expand_information(&spec, &exp).unwrap();
        assert!(out.warnings.is_empty());
        let game = crate::game::Game::new(out.spec).unwrap();
        assert_eq!(game.strategies(TypeKey::new(1, 1)).unwrap().len(), 2);
    }

    #[test]
    fn pigou_expansion_reveals_both_edges() {
        let (spec, exp) = scenario_expansion(ScenarioId::PigouIbpsc);
        let out = expand_information(&spec, &exp).unwrap();
        assert_eq!(out.spec.info_type(TypeKey::new(1, 1)).unwrap().known.len(), 2);
    }

    #[test]
    fn useless_expansion_warns() {
        let mut spec = scenarios::builtin(ScenarioId::WheatstoneIbp).spec;
        spec.types[0].known = spec.network.edge_set(&["O1", "1D"]).unwrap();
        let exp = Expansion {
            target: TypeKey::new(1, 1),
            added: spec.network.edge_set(&["12"]).unwrap(),
        };
        let out = expand_information(&spec, &exp).unwrap();
        assert_eq!(out.warnings.len(), 1);
        let v = detect_ibp(&spec, &exp, &opts()).unwrap();
        assert!(!v.occurred);
        assert!(v.type_deltas.values().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn non_strict_and_irrelevant_expansions_fail() {
        let (spec, _) = scenario_expansion(ScenarioId::TwoPopRing);
        // (1,2) already knows everything relevant
        let exp = Expansion {
            target: TypeKey::new(1, 2),
            added: spec.network.edge_set(&["e3"]).unwrap(),
        };
        assert_eq!(
            expand_information(&spec, &exp),
            Err(ParadoxError::NonStrict(TypeKey::new(1, 2)))
        );
        let stadium = scenarios::builtin(ScenarioId::StadiumRing).spec;
        let exp = Expansion {
            target: TypeKey::new(1, 1),
            added: stadium.network.edge_set(&["aA"]).unwrap(),
        };
        assert!(matches!(
            expand_information(&stadium, &exp),
            Err(ParadoxError::OutsideRelevant { .. })
        ));
    }

    #[test]
    fn wheatstone_ibp_occurs() {
        let (spec, exp) = scenario_expansion(ScenarioId::WheatstoneIbp);
        let v = detect_ibp(&spec, &exp, &opts()).unwrap();
        assert!(v.occurred);
        assert!((v.before.type_cost(exp.target).unwrap() - 1.5).abs() < 1e-6);
        assert!((v.after.type_cost(exp.target).unwrap() - 2.0).abs() < 1e-6);
        assert_eq!(v.kind, ParadoxKind::Ibp);
    }

    #[test]
    fn wheatstone_ibp_matches_the_oracle() {
        let (spec, exp) = scenario_expansion(ScenarioId::WheatstoneIbp);
        let expanded = expand_information(&spec, &exp).unwrap().spec;
        for (s, want) in [(spec, 1.5), (expanded, 2.0)] {
            let g = crate::game::Game::new(s).unwrap();
            let r = crate::equilibrium::brute_force_icue(&g, &opts()).unwrap();
            assert!((r.type_cost(exp.target).unwrap() - want).abs() < 1e-3);
        }
    }

    #[test]
    fn ring_is_immune() {
        let (spec, exp) = scenario_expansion(ScenarioId::TwoPopRing);
        let v = detect_ibp(&spec, &exp, &opts()).unwrap();
        assert!(!v.occurred);
        assert_eq!(v.confidence, Confidence::Certified);
        // joint verdict on the same pair: social cost does not move either
        assert!(!v.ibpsc_occurred());
        assert!((v.before.social_cost - 9.0).abs() < 1e-6);
    }

    #[test]
    fn pigou_social_cost_rises_without_ibp() {
        let (spec, exp) = scenario_expansion(ScenarioId::PigouIbpsc);
        let v = detect_ibpsc(&spec, &exp, &opts()).unwrap();
        assert!(v.occurred);
        assert!((v.before.social_cost - 3.0).abs() < 1e-6);
        assert!((v.after.social_cost - 4.0).abs() < 1e-6);
        assert_eq!(v.ibp_occurred(), Some(false));
        assert_eq!(v.confidence, Confidence::WitnessDependent);
    }

    #[test]
    fn wheatstone_bp_occurs() {
        let sc = scenarios::builtin(ScenarioId::WheatstoneBp);
        let v = detect_bp(&sc.spec, sc.modified_costs.as_ref().unwrap(), None, &opts()).unwrap();
        assert!(v.occurred);
        assert!((v.before.social_cost - 1.5).abs() < 1e-6);
        assert!((v.after.social_cost - 2.0).abs() < 1e-6);
    }

    #[test]
    fn identical_games_have_no_bp() {
        let sc = scenarios::builtin(ScenarioId::WheatstoneBp);
        let v = detect_bp(&sc.spec, &sc.spec.costs, None, &opts()).unwrap();
        assert!(!v.occurred);
        assert_eq!(v.delta, 0.0);
    }

    #[test]
    fn cost_increase_is_not_a_bp_input() {
        let sc = scenarios::builtin(ScenarioId::PigouIbpsc);
        let mut costs = sc.spec.costs.clone();
        costs[0] = CostFunction::affine(1.0, 1.0);
        assert!(matches!(
            detect_bp(&sc.spec, &costs, None, &opts()),
            Err(ParadoxError::NotDominated(_))
        ));
        assert!(matches!(
            detect_bp(&sc.spec, &sc.spec.costs, Some(&[2.0, 1.0]), &opts()),
            Err(ParadoxError::NotDominated(_))
        ));
    }

    #[test]
    fn not_all_worse_on_the_ring() {
        let (spec, exp) = scenario_expansion(ScenarioId::TwoPopRing);
        let r = check_not_all_worse(&spec, &exp, &opts()).unwrap();
        assert!(r.holds);
        assert_eq!(r.type_deltas.len(), 3);
    }

    #[test]
    fn not_all_worse_requires_a_circuit_game() {
        let (spec, exp) = scenario_expansion(ScenarioId::PigouIbpsc);
        assert!(matches!(
            check_not_all_worse(&spec, &exp, &opts()),
            Err(ParadoxError::NotCircuitGame(_))
        ));
    }

    #[test]
    fn withheld_verdict_on_non_convergence() {
        let (spec, exp) = scenario_expansion(ScenarioId::TwoPopRing);
        let o = SolverOptions {
            step_rule: crate::equilibrium::StepRule::Harmonic,
            max_iterations: 1,
            ..opts()
        };
        assert!(matches!(
            detect_ibp(&spec, &exp, &o),
            Err(ParadoxError::NotConverged { .. })
        ));
    }

    #[test]
    fn constructed_witness_on_wheatstone() {
        let net = scenarios::builtin(ScenarioId::WheatstoneBp).spec.network;
        let o = net.node_index("O").unwrap();
        let d = net.node_index("D").unwrap();
        let w = construct_ibpsc_witness(&net, o, d, WitnessCosts::default())
            .unwrap()
            .unwrap();
        let v = detect_ibpsc(&w.spec, &w.expansion, &opts()).unwrap();
        assert!(v.occurred);
        assert!((v.before.social_cost - 3.0).abs() < 1e-6);
        assert!((v.after.social_cost - 4.0).abs() < 1e-6);
    }

    #[test]
    fn no_witness_on_a_path() {
        let net = Network::new(["a", "b", "c"], [("ab", "a", "b"), ("bc", "b", "c")]).unwrap();
        assert_eq!(
            construct_ibpsc_witness(&net, 0, 2, WitnessCosts::default()).unwrap(),
            None
        );
    }
}
