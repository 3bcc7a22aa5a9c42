//! Network and set-system classifiers, and the immunity certificates built
//! on them.
//!
//! All two-terminal predicates work on the relevant subnetwork: edges that
//! lie on no simple origin–destination path are stripped first.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::game::{EdgeIx, EdgeSet, GameSpec, Network, NodeIx};
use crate::pathsets::{self, enumerate_paths, Path, PathError, DEFAULT_PATH_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("population {0} does not have an SLI relevant network")]
    NotSli(u32),
    #[error("unknown population {0}")]
    UnknownPopulation(u32),
}

fn degrees(network: &Network, edges: &EdgeSet) -> Vec<usize> {
    let mut deg = vec![0; network.node_count()];
    for &e in edges {
        let (a, b) = network.endpoints(e);
        deg[a] += 1;
        deg[b] += 1;
    }
    deg
}

/// Whether the nodes touched by `edges` form one connected piece.
fn edges_connected(network: &Network, edges: &EdgeSet) -> bool {
    let Some(&first) = edges.iter().next() else {
        return true;
    };
    let start = network.endpoints(first).0;
    let reach = reachable(network, start, edges, None);
    edges.iter().all(|&e| reach[network.endpoints(e).0])
}

fn reachable(network: &Network, start: NodeIx, edges: &EdgeSet, blocked: Option<NodeIx>) -> Vec<bool> {
    let mut seen = vec![false; network.node_count()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &(e, v) in network.incident(u) {
            if edges.contains(&e) && !seen[v] && Some(v) != blocked {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

fn has_parallel_edges(network: &Network, edges: &EdgeSet) -> Option<(EdgeIx, EdgeIx)> {
    let mut seen: BTreeMap<(NodeIx, NodeIx), EdgeIx> = BTreeMap::new();
    for &e in edges {
        let (a, b) = network.endpoints(e);
        let key = (a.min(b), a.max(b));
        if let Some(&other) = seen.get(&key) {
            return Some((other, e));
        }
        seen.insert(key, e);
    }
    None
}

/// At most one edge between any pair of nodes.
pub fn is_simple(network: &Network) -> bool {
    has_parallel_edges(network, &network.all_edges()).is_none()
}

/// Connected and acyclic (which also excludes parallel edges).
pub fn is_tree(network: &Network) -> bool {
    let n = network.node_count();
    if n == 0 || network.edge_count() != n - 1 {
        return false;
    }
    reachable(network, 0, &network.all_edges(), None)
        .iter()
        .all(|&r| r)
}

/// Connected, simple and every node of degree two.
pub fn is_ring(network: &Network) -> bool {
    let all = network.all_edges();
    network.node_count() >= 3
        && is_simple(network)
        && degrees(network, &all).iter().all(|&d| d == 2)
        && reachable(network, 0, &all, None).iter().all(|&r| r)
}

/// Whether `edges` form a single cycle (connected, all touched nodes of
/// degree two). Parallel edge pairs count as 2-cycles here.
pub fn is_cycle(network: &Network, edges: &EdgeSet) -> bool {
    !edges.is_empty()
        && degrees(network, edges).iter().all(|&d| d == 0 || d == 2)
        && edges_connected(network, edges)
}

/// Outcome of a linear-independence test.
#[derive(Clone, Debug, PartialEq)]
pub struct LiReport {
    pub is_li: bool,
    pub paths: Vec<Path>,
    /// For each path, an edge used by no other path.
    pub private_edges: Vec<Option<EdgeIx>>,
    /// First path without a private edge.
    pub violating_path: Option<Path>,
}

/// Linear independence of the two-terminal network: every simple
/// origin–destination path has an edge belonging to no other such path.
pub fn is_li(network: &Network, origin: NodeIx, destination: NodeIx) -> Result<LiReport, PathError> {
    is_li_within(network, origin, destination, &network.all_edges())
}

pub fn is_li_within(
    network: &Network,
    origin: NodeIx,
    destination: NodeIx,
    allowed: &EdgeSet,
) -> Result<LiReport, PathError> {
    let paths = enumerate_paths(network, origin, destination, allowed, DEFAULT_PATH_CAP)?;
    let mut uses: BTreeMap<EdgeIx, usize> = BTreeMap::new();
    for p in &paths {
        for &e in p.edge_set().iter() {
            *uses.entry(e).or_default() += 1;
        }
    }
    let private_edges: Vec<Option<EdgeIx>> = paths
        .iter()
        .map(|p| p.edges().iter().copied().find(|e| uses[e] == 1))
        .collect();
    let violating_path = paths
        .iter()
        .zip(&private_edges)
        .find(|(_, e)| e.is_none())
        .map(|(p, _)| p.clone());
    Ok(LiReport {
        is_li: violating_path.is_none(),
        paths,
        private_edges,
        violating_path,
    })
}

/// One series component of a two-terminal network.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesBlock {
    pub entry: NodeIx,
    pub exit: NodeIx,
    pub edges: EdgeSet,
    pub li: LiReport,
}

impl SeriesBlock {
    fn terminals(&self) -> (NodeIx, NodeIx) {
        (self.entry.min(self.exit), self.entry.max(self.exit))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliReport {
    pub is_sli: bool,
    pub relevant: EdgeSet,
    /// Vertices separating origin from destination, in travel order.
    pub cut_vertices: Vec<NodeIx>,
    pub blocks: Vec<SeriesBlock>,
}

/// Series-linear-independence of the two-terminal network.
pub fn is_sli(network: &Network, origin: NodeIx, destination: NodeIx) -> Result<SliReport, PathError> {
    is_sli_within(network, origin, destination, &network.all_edges())
}

/// Splits the relevant subnetwork at the cut vertices separating origin from
/// destination and tests each series block for linear independence. An LI
/// network stays LI under this refinement, so testing the finest
/// decomposition decides membership.
///
/// A network with no origin–destination path is reported as vacuously SLI.
pub fn is_sli_within(
    network: &Network,
    origin: NodeIx,
    destination: NodeIx,
    allowed: &EdgeSet,
) -> Result<SliReport, PathError> {
    let relevant = pathsets::relevant_edges(network, origin, destination, allowed);
    if relevant.is_empty() {
        return Ok(SliReport {
            is_sli: true,
            relevant,
            cut_vertices: Vec::new(),
            blocks: Vec::new(),
        });
    }
    let cut_vertices = separating_vertices(network, origin, destination, &relevant);
    let mut terminals = Vec::with_capacity(cut_vertices.len() + 2);
    terminals.push(origin);
    terminals.extend(&cut_vertices);
    terminals.push(destination);
    let mut blocks = Vec::with_capacity(terminals.len() - 1);
    for w in terminals.windows(2) {
        let edges = pathsets::relevant_edges(network, w[0], w[1], &relevant);
        let li = is_li_within(network, w[0], w[1], &edges)?;
        blocks.push(SeriesBlock {
            entry: w[0],
            exit: w[1],
            edges,
            li,
        });
    }
    debug_assert_eq!(
        blocks.iter().map(|b| b.edges.len()).sum::<usize>(),
        relevant.len()
    );
    Ok(SliReport {
        is_sli: blocks.iter().all(|b| b.li.is_li),
        relevant,
        cut_vertices,
        blocks,
    })
}

/// Vertices whose removal disconnects origin from destination within
/// `edges`, ordered along an origin–destination path.
fn separating_vertices(network: &Network, origin: NodeIx, destination: NodeIx, edges: &EdgeSet) -> Vec<NodeIx> {
    // a shortest path fixes the order; every separating vertex lies on it
    let mut parent = vec![usize::MAX; network.node_count()];
    let mut seen = vec![false; network.node_count()];
    seen[origin] = true;
    let mut queue = VecDeque::from([origin]);
    while let Some(u) = queue.pop_front() {
        for &(e, v) in network.incident(u) {
            if edges.contains(&e) && !seen[v] {
                seen[v] = true;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut route = vec![destination];
    let mut at = destination;
    while at != origin && parent[at] != usize::MAX {
        at = parent[at];
        route.push(at);
    }
    route.reverse();
    route
        .into_iter()
        .filter(|&v| v != origin && v != destination)
        .filter(|&v| !reachable(network, origin, edges, Some(v))[destination])
        .collect()
}

/// A set system over edge indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SetSystem {
    pub ground: BTreeSet<EdgeIx>,
    pub members: Vec<BTreeSet<EdgeIx>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AxiomViolation {
    OutsideGround { member: usize, element: EdgeIx },
    EmptyMember { member: usize },
    /// `smaller ⊊ larger` (or the two are equal but listed twice).
    Inclusion { smaller: usize, larger: usize },
    /// No member fits inside `(first ∪ second) \ {element}`.
    Elimination { first: usize, second: usize, element: EdgeIx },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomViolation::OutsideGround { member, element } => {
                write!(f, "member {member} contains {element} outside the ground set")
            }
            AxiomViolation::EmptyMember { member } => write!(f, "member {member} is empty"),
            AxiomViolation::Inclusion { smaller, larger } => {
                write!(f, "member {smaller} is contained in member {larger}")
            }
            AxiomViolation::Elimination {
                first,
                second,
                element,
            } => write!(
                f,
                "no member inside the union of members {first} and {second} minus {element}"
            ),
        }
    }
}

/// Checks the circuit axioms: no empty member, no member strictly inside
/// another, and circuit elimination. Returns the first violation found.
pub fn check_circuit_axioms(system: &SetSystem) -> Result<(), AxiomViolation> {
    let members = &system.members;
    for (i, m) in members.iter().enumerate() {
        if let Some(&element) = m.iter().find(|x| !system.ground.contains(x)) {
            return Err(AxiomViolation::OutsideGround { member: i, element });
        }
        if m.is_empty() {
            return Err(AxiomViolation::EmptyMember { member: i });
        }
    }
    for i in 0..members.len() {
        for j in 0..members.len() {
            if i != j && members[i].is_subset(&members[j]) {
                return Err(AxiomViolation::Inclusion {
                    smaller: i,
                    larger: j,
                });
            }
        }
    }
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            for &e in members[i].intersection(&members[j]) {
                let mut union: BTreeSet<EdgeIx> = members[i].union(&members[j]).copied().collect();
                union.remove(&e);
                if !members.iter().any(|c| c.is_subset(&union)) {
                    return Err(AxiomViolation::Elimination {
                        first: i,
                        second: j,
                        element: e,
                    });
                }
            }
        }
    }
    Ok(())
}

/// The cycles of the subnetwork on `edges`, as a set system over `edges`.
pub fn graph_circuits(network: &Network, edges: &EdgeSet) -> Result<SetSystem, PathError> {
    let mut members = BTreeSet::new();
    for &e in edges {
        // cycles whose smallest edge is e
        let (a, b) = network.endpoints(e);
        let rest: EdgeSet = edges.range(e + 1..).copied().collect();
        for p in enumerate_paths(network, b, a, &rest, DEFAULT_PATH_CAP)? {
            let mut cycle = p.edge_set();
            cycle.insert(e);
            members.insert(cycle);
        }
    }
    Ok(SetSystem {
        ground: edges.clone(),
        members: members.into_iter().collect(),
    })
}

/// Result of the circuit-game test with per-population diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitGameReport {
    pub is_circuit_game: bool,
    pub simple: bool,
    /// Per population: whether its relevant network is a single cycle.
    pub cycles: BTreeMap<u32, bool>,
    pub diagnostics: Vec<String>,
}

/// Every population's relevant network is a single cycle and the network they
/// span is simple.
pub fn is_circuit_game(spec: &GameSpec) -> CircuitGameReport {
    let net = &spec.network;
    let mut diagnostics = Vec::new();
    let mut cycles = BTreeMap::new();
    let mut union = EdgeSet::new();
    for p in &spec.populations {
        let rel = pathsets::relevant_edges(net, p.origin, p.destination, &p.relevant);
        let cyc = is_cycle(net, &rel);
        if !cyc {
            diagnostics.push(format!(
                "relevant network of population {} is not a single cycle",
                p.id
            ));
        }
        cycles.insert(p.id, cyc);
        union.extend(rel);
    }
    let simple = match has_parallel_edges(net, &union) {
        Some((a, b)) => {
            diagnostics.push(format!(
                "network is not simple: edges {} and {} are parallel, and a circuit game cannot exist on a non-simple network",
                net.edge_id(a),
                net.edge_id(b)
            ));
            false
        }
        None => true,
    };
    CircuitGameReport {
        is_circuit_game: simple && !spec.populations.is_empty() && cycles.values().all(|&c| c),
        simple,
        cycles,
        diagnostics,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceReport {
    pub blocks: Vec<SeriesBlock>,
    pub intersection: EdgeSet,
    /// The shared edges are empty or exactly the union of coincident blocks.
    pub condition_b: bool,
}

fn population_sli(spec: &GameSpec, id: u32) -> Result<SliReport, TopologyError> {
    let p = spec
        .population(id)
        .ok_or(TopologyError::UnknownPopulation(id))?;
    let report = is_sli_within(&spec.network, p.origin, p.destination, &p.relevant)?;
    if !report.is_sli {
        return Err(TopologyError::NotSli(id));
    }
    Ok(report)
}

/// Common LI blocks of two populations' series decompositions having the same
/// (unordered) terminal pair, and whether the edges they share consist of
/// exactly those blocks.
pub fn coincident_blocks(spec: &GameSpec, i: u32, j: u32) -> Result<CoincidenceReport, TopologyError> {
    let a = population_sli(spec, i)?;
    let b = population_sli(spec, j)?;
    Ok(coincidence(&a, &b))
}

fn coincidence(a: &SliReport, b: &SliReport) -> CoincidenceReport {
    let blocks: Vec<SeriesBlock> = a
        .blocks
        .iter()
        .filter(|x| {
            b.blocks
                .iter()
                .any(|y| x.edges == y.edges && x.terminals() == y.terminals())
        })
        .cloned()
        .collect();
    let intersection: EdgeSet = a.relevant.intersection(&b.relevant).copied().collect();
    let covered: EdgeSet = blocks.iter().flat_map(|x| x.edges.iter().copied()).collect();
    CoincidenceReport {
        condition_b: intersection.is_empty() || intersection == covered,
        blocks,
        intersection,
    }
}

/// At least two distinct simple origin–destination paths. The relevant
/// subnetwork is a chain of blocks, so this holds iff it contains a cycle.
pub fn has_pigou_embedding(network: &Network, origin: NodeIx, destination: NodeIx) -> bool {
    let rel = pathsets::relevant_edges(network, origin, destination, &network.all_edges());
    if rel.is_empty() {
        return false;
    }
    let nodes: BTreeSet<NodeIx> = rel
        .iter()
        .flat_map(|&e| {
            let (a, b) = network.endpoints(e);
            [a, b]
        })
        .collect();
    rel.len() >= nodes.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImmunityVerdict {
    ImmuneSli,
    ImmuneCircuitGame,
    ImmuneCoincidentBlocks,
    Unknown,
}

impl fmt::Display for ImmunityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImmunityVerdict::ImmuneSli => "immune (two-terminal SLI)",
            ImmunityVerdict::ImmuneCircuitGame => "immune (circuit game)",
            ImmunityVerdict::ImmuneCoincidentBlocks => "immune (SLI populations with coincident overlaps)",
            ImmunityVerdict::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CertificateWitness {
    Sli(SliReport),
    CircuitGame(CircuitGameReport),
    Pairwise {
        decompositions: BTreeMap<u32, SliReport>,
        overlaps: BTreeMap<(u32, u32), CoincidenceReport>,
    },
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImmunityCertificate {
    pub verdict: ImmunityVerdict,
    pub witness: CertificateWitness,
    /// Set for two-terminal games whose network is not SLI: immunity fails
    /// there, so some costs and information sets exhibit the paradox.
    pub ibp_possible: bool,
    pub notes: Vec<String>,
}

/// Sufficient immunity tests, tried in order: two-terminal SLI, circuit game,
/// then SLI populations whose pairwise overlaps are coincident blocks.
/// `Unknown` does not mean vulnerable, except where `ibp_possible` is set.
pub fn immunity_certificate(spec: &GameSpec) -> Result<ImmunityCertificate, PathError> {
    let net = &spec.network;
    let mut notes = Vec::new();
    let od_pairs: BTreeSet<(NodeIx, NodeIx)> = spec
        .populations
        .iter()
        .map(|p| (p.origin.min(p.destination), p.origin.max(p.destination)))
        .collect();
    let mut ibp_possible = false;
    if od_pairs.len() == 1 {
        let p = &spec.populations[0];
        let sli = is_sli_within(net, p.origin, p.destination, &spec.irredundant_edges())?;
        if sli.is_sli {
            return Ok(ImmunityCertificate {
                verdict: ImmunityVerdict::ImmuneSli,
                witness: CertificateWitness::Sli(sli),
                ibp_possible: false,
                notes,
            });
        }
        ibp_possible = true;
        notes.push("two-terminal network is not SLI: IBP possible".to_string());
    }

    let circuit = is_circuit_game(spec);
    if circuit.is_circuit_game {
        return Ok(ImmunityCertificate {
            verdict: ImmunityVerdict::ImmuneCircuitGame,
            witness: CertificateWitness::CircuitGame(circuit),
            ibp_possible,
            notes,
        });
    }
    notes.extend(circuit.diagnostics.iter().cloned());

    let mut decompositions = BTreeMap::new();
    for p in &spec.populations {
        let r = is_sli_within(net, p.origin, p.destination, &p.relevant)?;
        if !r.is_sli {
            notes.push(format!("population {} is not SLI", p.id));
        }
        decompositions.insert(p.id, r);
    }
    if decompositions.values().all(|r| r.is_sli) {
        let ids: Vec<u32> = decompositions.keys().copied().collect();
        let mut overlaps = BTreeMap::new();
        for (x, &i) in ids.iter().enumerate() {
            for &j in &ids[x + 1..] {
                overlaps.insert((i, j), coincidence(&decompositions[&i], &decompositions[&j]));
            }
        }
        if overlaps.values().all(|o| o.condition_b) {
            return Ok(ImmunityCertificate {
                verdict: ImmunityVerdict::ImmuneCoincidentBlocks,
                witness: CertificateWitness::Pairwise {
                    decompositions,
                    overlaps,
                },
                ibp_possible,
                notes,
            });
        }
        for ((i, j), o) in &overlaps {
            if !o.condition_b {
                notes.push(format!(
                    "populations {i} and {j} share edges outside coincident blocks"
                ));
            }
        }
    }
    Ok(ImmunityCertificate {
        verdict: ImmunityVerdict::Unknown,
        witness: CertificateWitness::None,
        ibp_possible,
        notes,
    })
}
