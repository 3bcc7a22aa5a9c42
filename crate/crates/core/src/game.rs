//! Game model: networks, cost functions, populations, information types,
//! outcomes, loads, strategy costs and social cost.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pathsets::{self, Path, PathError, StrategySet, DEFAULT_PATH_CAP};

/// Default value of the big-M sentinel standing in for an infinite edge cost.
pub const DEFAULT_BIG_M: f64 = 1e9;

/// Absolute tolerance used when checking that a type's flows sum to its demand.
pub const FEASIBILITY_TOL: f64 = 1e-9;

pub type NodeIx = usize;
pub type EdgeIx = usize;
/// Edge indices, ordered. Because a network keeps its edges sorted by id, the
/// ordering coincides with edge-id ordering.
pub type EdgeSet = BTreeSet<EdgeIx>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub String);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl From<&str> for EdgeId {
    fn from(s: &str) -> Self {
        EdgeId(s.to_string())
    }
}

impl From<String> for EdgeId {
    fn from(s: String) -> Self {
        EdgeId(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("duplicate node '{0}'")]
    DuplicateNode(NodeId),
    #[error("duplicate edge '{0}'")]
    DuplicateEdge(EdgeId),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("unknown edge '{0}'")]
    UnknownEdge(String),
    #[error("edge '{0}' is a self-loop")]
    SelfLoop(EdgeId),
    #[error("unknown population {0}")]
    UnknownPopulation(u32),
    #[error("duplicate population {0}")]
    DuplicatePopulation(u32),
    #[error("unknown type {0}")]
    UnknownType(TypeKey),
    #[error("duplicate type {0}")]
    DuplicateType(TypeKey),
    #[error("invalid cost function: {0}")]
    InvalidCost(String),
    #[error("negative load {0}")]
    NegativeLoad(f64),
    #[error("strategy {path} is not in the strategy set of type {key}")]
    UnknownStrategy { key: TypeKey, path: String },
    #[error("infeasible outcome for type {key}: flows sum to {total}, demand is {demand}")]
    Infeasible { key: TypeKey, total: f64, demand: f64 },
    #[error("negative flow {flow} for type {key}")]
    NegativeFlow { key: TypeKey, flow: f64 },
    #[error("invalid game: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Undirected multigraph. Nodes and edges are kept sorted by id so that index
/// order and id order agree.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    nodes: Vec<NodeId>,
    edges: Vec<Edge>,
    endpoints: Vec<(NodeIx, NodeIx)>,
    adjacency: Vec<Vec<(EdgeIx, NodeIx)>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub a: NodeId,
    pub b: NodeId,
}

impl Network {
    pub fn new<N, E, A, B, C>(nodes: N, edges: E) -> Result<Self, GameError>
    where
        N: IntoIterator,
        N::Item: Into<NodeId>,
        E: IntoIterator<Item = (A, B, C)>,
        A: Into<EdgeId>,
        B: Into<NodeId>,
        C: Into<NodeId>,
    {
        let mut nodes: Vec<NodeId> = nodes.into_iter().map(Into::into).collect();
        nodes.sort();
        for w in nodes.windows(2) {
            if w[0] == w[1] {
                return Err(GameError::DuplicateNode(w[0].clone()));
            }
        }
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|(id, a, b)| Edge {
                id: id.into(),
                a: a.into(),
                b: b.into(),
            })
            .collect();
        edges.sort_by(|x, y| x.id.cmp(&y.id));
        for w in edges.windows(2) {
            if w[0].id == w[1].id {
                return Err(GameError::DuplicateEdge(w[0].id.clone()));
            }
        }
        let lookup = |n: &NodeId| {
            nodes
                .binary_search(n)
                .map_err(|_| GameError::UnknownNode(n.0.clone()))
        };
        let mut endpoints = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (ix, e) in edges.iter().enumerate() {
            let a = lookup(&e.a)?;
            let b = lookup(&e.b)?;
            if a == b {
                return Err(GameError::SelfLoop(e.id.clone()));
            }
            endpoints.push((a, b));
            adjacency[a].push((ix, b));
            adjacency[b].push((ix, a));
        }
        Ok(Network {
            nodes,
            edges,
            endpoints,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, ix: NodeIx) -> &NodeId {
        &self.nodes[ix]
    }

    pub fn edge(&self, ix: EdgeIx) -> &Edge {
        &self.edges[ix]
    }

    pub fn edge_id(&self, ix: EdgeIx) -> &EdgeId {
        &self.edges[ix].id
    }

    pub fn endpoints(&self, ix: EdgeIx) -> (NodeIx, NodeIx) {
        self.endpoints[ix]
    }

    /// Incident `(edge, neighbour)` pairs, sorted by edge index.
    pub fn incident(&self, node: NodeIx) -> &[(EdgeIx, NodeIx)] {
        &self.adjacency[node]
    }

    pub fn node_index(&self, id: &str) -> Option<NodeIx> {
        self.nodes.binary_search_by(|n| n.0.as_str().cmp(id)).ok()
    }

    pub fn edge_index(&self, id: &str) -> Option<EdgeIx> {
        self.edges.binary_search_by(|e| e.id.0.as_str().cmp(id)).ok()
    }

    pub fn require_node(&self, id: &str) -> Result<NodeIx, GameError> {
        self.node_index(id)
            .ok_or_else(|| GameError::UnknownNode(id.to_string()))
    }

    pub fn require_edge(&self, id: &str) -> Result<EdgeIx, GameError> {
        self.edge_index(id)
            .ok_or_else(|| GameError::UnknownEdge(id.to_string()))
    }

    pub fn edge_set<S: AsRef<str>>(&self, ids: &[S]) -> Result<EdgeSet, GameError> {
        ids.iter().map(|s| self.require_edge(s.as_ref())).collect()
    }

    pub fn all_edges(&self) -> EdgeSet {
        (0..self.edges.len()).collect()
    }

    pub fn edge_ids(&self, set: &EdgeSet) -> Vec<EdgeId> {
        set.iter().map(|&e| self.edges[e].id.clone()).collect()
    }

    pub fn other_end(&self, edge: EdgeIx, node: NodeIx) -> NodeIx {
        let (a, b) = self.endpoints[edge];
        if a == node {
            b
        } else {
            a
        }
    }
}

/// Continuous, nondecreasing, nonnegative edge cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction {
    /// `Σ coefficients[j] · t^j`, constant term first, all coefficients ≥ 0.
    Polynomial { coefficients: Vec<f64> },
    /// Load-independent sentinel for an unusable ("infinite") edge.
    BigM {
        #[serde(default = "default_big_m")]
        value: f64,
    },
}

fn default_big_m() -> f64 {
    DEFAULT_BIG_M
}

impl Default for CostFunction {
    fn default() -> Self {
        CostFunction::Polynomial {
            coefficients: Vec::new(),
        }
    }
}

impl CostFunction {
    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self, GameError> {
        let f = CostFunction::Polynomial { coefficients };
        f.check()?;
        Ok(f)
    }

    /// `c(t) = slope · t`
    pub fn linear(slope: f64) -> Self {
        CostFunction::Polynomial {
            coefficients: vec![0.0, slope],
        }
    }

    pub fn constant(value: f64) -> Self {
        CostFunction::Polynomial {
            coefficients: vec![value],
        }
    }

    pub fn affine(constant: f64, slope: f64) -> Self {
        CostFunction::Polynomial {
            coefficients: vec![constant, slope],
        }
    }

    pub fn big_m() -> Self {
        CostFunction::BigM {
            value: DEFAULT_BIG_M,
        }
    }

    pub fn check(&self) -> Result<(), GameError> {
        match self {
            CostFunction::Polynomial { coefficients } => {
                if let Some(c) = coefficients.iter().find(|c| !c.is_finite() || **c < 0.0) {
                    return Err(GameError::InvalidCost(format!(
                        "polynomial coefficient {c} is not a finite nonnegative number"
                    )));
                }
                Ok(())
            }
            CostFunction::BigM { value } => {
                if !value.is_finite() || *value < 0.0 {
                    return Err(GameError::InvalidCost(format!(
                        "big-M value {value} is not a finite nonnegative number"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, load: f64) -> Result<f64, GameError> {
        if load < 0.0 || load.is_nan() {
            return Err(GameError::NegativeLoad(load));
        }
        Ok(self.value(load))
    }

    /// Unchecked evaluation; loads are clamped at zero.
    pub fn value(&self, load: f64) -> f64 {
        match self {
            CostFunction::Polynomial { coefficients } => {
                let t = load.max(0.0);
                coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
            CostFunction::BigM { value } => *value,
        }
    }

    /// `∫₀^load c(t) dt`.
    pub fn integral(&self, load: f64) -> f64 {
        let t = load.max(0.0);
        match self {
            CostFunction::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (j, c)| acc * t + c / (j as f64 + 1.0))
                * t,
            CostFunction::BigM { value } => value * t,
        }
    }

    /// Whether the function is strictly increasing on `t ≥ 0`. With
    /// nonnegative coefficients this is exactly "some non-constant
    /// coefficient is positive".
    pub fn is_strictly_increasing(&self) -> bool {
        match self {
            CostFunction::Polynomial { coefficients } => {
                coefficients.iter().skip(1).any(|c| *c > 0.0)
            }
            CostFunction::BigM { .. } => false,
        }
    }

    pub fn is_big_m(&self) -> bool {
        matches!(self, CostFunction::BigM { .. })
    }

    /// Sufficient test for `self(t) ≤ other(t)` for all `t ≥ 0`: coefficient-wise
    /// domination between polynomials, or `other` being the big-M sentinel.
    pub fn dominated_by(&self, other: &CostFunction) -> bool {
        match (self, other) {
            (_, CostFunction::BigM { .. }) if !self.is_big_m() => true,
            (CostFunction::BigM { value: a }, CostFunction::BigM { value: b }) => a <= b,
            (CostFunction::BigM { .. }, CostFunction::Polynomial { .. }) => false,
            (
                CostFunction::Polynomial { coefficients: a },
                CostFunction::Polynomial { coefficients: b },
            ) => (0..a.len().max(b.len())).all(|j| {
                a.get(j).copied().unwrap_or(0.0) <= b.get(j).copied().unwrap_or(0.0)
            }),
            _ => unreachable!(),
        }
    }

    pub fn with_big_m(&self, big_m: f64) -> CostFunction {
        match self {
            CostFunction::BigM { .. } => CostFunction::BigM { value: big_m },
            other => other.clone(),
        }
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::BigM { value } => write!(f, "M={value}"),
            CostFunction::Polynomial { coefficients } => {
                let terms: Vec<String> = coefficients
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(j, c)| match j {
                        0 => format!("{c}"),
                        1 => format!("{c}t"),
                        _ => format!("{c}t^{j}"),
                    })
                    .collect();
                if terms.is_empty() {
                    f.write_str("0")
                } else {
                    f.write_str(&terms.join(" + "))
                }
            }
        }
    }
}

/// Evaluate an edge cost at a nonnegative load.
pub fn eval_cost(cost: &CostFunction, load: f64) -> Result<f64, GameError> {
    cost.eval(load)
}

/// Identifies an information type `(population, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeKey {
    pub population: u32,
    pub k: u32,
}

impl TypeKey {
    pub fn new(population: u32, k: u32) -> Self {
        TypeKey { population, k }
    }
}

impl fmt::Display for TypeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.population, self.k)
    }
}

impl FromStr for TypeKey {
    type Err = String;

    /// Accepts `1,2`, `(1,2)` and `1:2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut parts = t.split([',', ':']);
        let parse = |p: Option<&str>| {
            p.and_then(|x| x.trim().parse::<u32>().ok())
                .ok_or_else(|| format!("invalid type key '{s}', expected e.g. 1,1"))
        };
        let population = parse(parts.next())?;
        let k = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(format!("invalid type key '{s}', expected e.g. 1,1"));
        }
        Ok(TypeKey { population, k })
    }
}

impl Serialize for TypeKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{},{}", self.population, self.k))
    }
}

impl<'de> Deserialize<'de> for TypeKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub id: u32,
    pub origin: NodeIx,
    pub destination: NodeIx,
    pub relevant: EdgeSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfoType {
    pub key: TypeKey,
    pub known: EdgeSet,
    pub demand: f64,
}

/// Declarative game: network, edge costs, populations and information types.
/// Strategy sets are derived, see [`Game`].
#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    pub network: Network,
    /// One cost per network edge, aligned with edge indices.
    pub costs: Vec<CostFunction>,
    pub populations: Vec<Population>,
    pub types: Vec<InfoType>,
}

impl GameSpec {
    /// A game on `network` with zero costs and no populations.
    pub fn new(network: Network) -> Self {
        let costs = vec![CostFunction::default(); network.edge_count()];
        GameSpec {
            network,
            costs,
            populations: Vec::new(),
            types: Vec::new(),
        }
    }

    pub fn set_cost(&mut self, edge: &str, cost: CostFunction) -> Result<&mut Self, GameError> {
        cost.check()?;
        let e = self.network.require_edge(edge)?;
        self.costs[e] = cost;
        Ok(self)
    }

    /// Adds a population. With `relevant = None` its relevant edges are all
    /// edges lying on some simple origin–destination path.
    pub fn add_population(
        &mut self,
        id: u32,
        origin: &str,
        destination: &str,
        relevant: Option<&[&str]>,
    ) -> Result<&mut Self, GameError> {
        if self.populations.iter().any(|p| p.id == id) {
            return Err(GameError::DuplicatePopulation(id));
        }
        let o = self.network.require_node(origin)?;
        let d = self.network.require_node(destination)?;
        let relevant = match relevant {
            Some(ids) => self.network.edge_set(ids)?,
            None => pathsets::relevant_edges(&self.network, o, d, &self.network.all_edges()),
        };
        self.populations.push(Population {
            id,
            origin: o,
            destination: d,
            relevant,
        });
        Ok(self)
    }

    /// Adds an information type. With `known = None` the type knows all of
    /// its population's relevant edges.
    pub fn add_type(
        &mut self,
        population: u32,
        k: u32,
        known: Option<&[&str]>,
        demand: f64,
    ) -> Result<&mut Self, GameError> {
        let key = TypeKey::new(population, k);
        if self.types.iter().any(|t| t.key == key) {
            return Err(GameError::DuplicateType(key));
        }
        let pop = self
            .population(population)
            .ok_or(GameError::UnknownPopulation(population))?;
        let known = match known {
            Some(ids) => self.network.edge_set(ids)?,
            None => pop.relevant.clone(),
        };
        self.types.push(InfoType { key, known, demand });
        Ok(self)
    }

    pub fn population(&self, id: u32) -> Option<&Population> {
        self.populations.iter().find(|p| p.id == id)
    }

    pub fn type_index(&self, key: TypeKey) -> Option<usize> {
        self.types.iter().position(|t| t.key == key)
    }

    pub fn info_type(&self, key: TypeKey) -> Option<&InfoType> {
        self.types.iter().find(|t| t.key == key)
    }

    /// The irredundant edge set: union of all populations' relevant edges.
    pub fn irredundant_edges(&self) -> EdgeSet {
        self.populations
            .iter()
            .flat_map(|p| p.relevant.iter().copied())
            .collect()
    }

    /// Replaces the value of every big-M edge.
    pub fn with_big_m(mut self, big_m: f64) -> Self {
        for c in &mut self.costs {
            *c = c.with_big_m(big_m);
        }
        self
    }
}

/// A single structural problem found by [`validate_game`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    UnknownEdge { context: String, edge: EdgeIx },
    UnknownNode { context: String, node: NodeIx },
    SameOriginDestination { population: u32 },
    DuplicatePopulation { population: u32 },
    IrrelevantEdge { population: u32, edge: EdgeId },
    NoTypes { population: u32 },
    UnknownPopulation { key: TypeKey },
    DuplicateType { key: TypeKey },
    KnownOutsideRelevant { key: TypeKey, edge: EdgeId },
    NegativeDemand { key: TypeKey, demand: f64 },
    EmptyStrategySet { key: TypeKey },
    CostCount { expected: usize, found: usize },
    InvalidCost { edge: EdgeId, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownEdge { context, edge } => {
                write!(f, "unknown edge #{edge} in {context}")
            }
            Violation::UnknownNode { context, node } => {
                write!(f, "unknown node #{node} in {context}")
            }
            Violation::SameOriginDestination { population } => {
                write!(f, "population {population} has identical origin and destination")
            }
            Violation::DuplicatePopulation { population } => {
                write!(f, "duplicate population {population}")
            }
            Violation::IrrelevantEdge { population, edge } => write!(
                f,
                "irrelevant edge {edge} in population {population}: lies on no origin-destination path"
            ),
            Violation::NoTypes { population } => {
                write!(f, "population {population} has no information type")
            }
            Violation::UnknownPopulation { key } => {
                write!(f, "type {key} refers to an unknown population")
            }
            Violation::DuplicateType { key } => write!(f, "duplicate type {key}"),
            Violation::KnownOutsideRelevant { key, edge } => write!(
                f,
                "type {key} knows edge {edge} outside its population's relevant edges"
            ),
            Violation::NegativeDemand { key, demand } => {
                write!(f, "negative demand {demand} for type {key}")
            }
            Violation::EmptyStrategySet { key } => {
                write!(f, "type {key} has empty strategy set but positive demand")
            }
            Violation::CostCount { expected, found } => {
                write!(f, "expected {expected} edge costs, found {found}")
            }
            Violation::InvalidCost { edge, reason } => {
                write!(f, "invalid cost on edge {edge}: {reason}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&msgs.join("; "))
    }
}

/// Report-style structural validation; an empty report means the game is valid.
pub fn validate_game(spec: &GameSpec) -> ValidationReport {
    let net = &spec.network;
    let mut violations = Vec::new();

    if spec.costs.len() != net.edge_count() {
        violations.push(Violation::CostCount {
            expected: net.edge_count(),
            found: spec.costs.len(),
        });
    }
    for (e, c) in spec.costs.iter().enumerate().take(net.edge_count()) {
        if let Err(err) = c.check() {
            violations.push(Violation::InvalidCost {
                edge: net.edge_id(e).clone(),
                reason: err.to_string(),
            });
        }
    }

    let mut seen_pops = BTreeSet::new();
    for p in &spec.populations {
        if !seen_pops.insert(p.id) {
            violations.push(Violation::DuplicatePopulation { population: p.id });
        }
        let ctx = format!("population {}", p.id);
        let mut nodes_ok = true;
        for n in [p.origin, p.destination] {
            if n >= net.node_count() {
                violations.push(Violation::UnknownNode {
                    context: ctx.clone(),
                    node: n,
                });
                nodes_ok = false;
            }
        }
        if p.origin == p.destination {
            violations.push(Violation::SameOriginDestination { population: p.id });
            nodes_ok = false;
        }
        let mut edges_ok = true;
        for &e in &p.relevant {
            if e >= net.edge_count() {
                violations.push(Violation::UnknownEdge {
                    context: ctx.clone(),
                    edge: e,
                });
                edges_ok = false;
            }
        }
        if nodes_ok && edges_ok {
            let rel = pathsets::relevant_edges(net, p.origin, p.destination, &p.relevant);
            for &e in p.relevant.difference(&rel) {
                violations.push(Violation::IrrelevantEdge {
                    population: p.id,
                    edge: net.edge_id(e).clone(),
                });
            }
        }
        if !spec.types.iter().any(|t| t.key.population == p.id) {
            violations.push(Violation::NoTypes { population: p.id });
        }
    }

    let mut seen_types = BTreeSet::new();
    for t in &spec.types {
        if !seen_types.insert(t.key) {
            violations.push(Violation::DuplicateType { key: t.key });
        }
        if !(t.demand >= 0.0) || !t.demand.is_finite() {
            violations.push(Violation::NegativeDemand {
                key: t.key,
                demand: t.demand,
            });
        }
        let Some(pop) = spec.population(t.key.population) else {
            violations.push(Violation::UnknownPopulation { key: t.key });
            continue;
        };
        let mut edges_ok = true;
        for &e in &t.known {
            if e >= net.edge_count() {
                violations.push(Violation::UnknownEdge {
                    context: format!("type {}", t.key),
                    edge: e,
                });
                edges_ok = false;
            } else if !pop.relevant.contains(&e) {
                violations.push(Violation::KnownOutsideRelevant {
                    key: t.key,
                    edge: net.edge_id(e).clone(),
                });
            }
        }
        let endpoints_ok = pop.origin < net.node_count()
            && pop.destination < net.node_count()
            && pop.origin != pop.destination;
        if edges_ok && endpoints_ok && t.demand > 0.0 {
            let usable: EdgeSet = t.known.intersection(&pop.relevant).copied().collect();
            if !pathsets::connects(net, pop.origin, pop.destination, &usable) {
                violations.push(Violation::EmptyStrategySet { key: t.key });
            }
        }
    }

    ValidationReport { violations }
}

/// A validated game together with its per-type strategy sets, aligned with
/// `spec.types`.
#[derive(Clone, Debug)]
pub struct Game {
    spec: GameSpec,
    strategies: Vec<StrategySet>,
}

impl Game {
    pub fn new(spec: GameSpec) -> Result<Self, GameError> {
        Self::with_cap(spec, DEFAULT_PATH_CAP)
    }

    pub fn with_cap(spec: GameSpec, cap: usize) -> Result<Self, GameError> {
        let report = validate_game(&spec);
        if !report.is_valid() {
            return Err(GameError::Invalid(report));
        }
        let strategies = pathsets::build_strategy_sets(&spec, cap)?;
        Ok(Game { spec, strategies })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn into_spec(self) -> GameSpec {
        self.spec
    }

    pub fn network(&self) -> &Network {
        &self.spec.network
    }

    pub fn types(&self) -> &[InfoType] {
        &self.spec.types
    }

    pub fn strategy_sets(&self) -> &[StrategySet] {
        &self.strategies
    }

    pub fn strategies(&self, key: TypeKey) -> Option<&StrategySet> {
        self.spec.type_index(key).map(|i| &self.strategies[i])
    }

    /// Looks up a strategy of any type by its (unordered) edge ids.
    pub fn find_strategy<S: AsRef<str>>(&self, ids: &[S]) -> Option<Path> {
        let set = self.network().edge_set(ids).ok()?;
        self.strategies
            .iter()
            .flat_map(|s| s.paths.iter())
            .find(|p| p.len() == set.len() && p.edge_set() == set)
            .cloned()
    }

    /// Same game with every big-M edge set to `big_m`; strategy sets are
    /// unaffected.
    pub fn with_big_m(&self, big_m: f64) -> Game {
        Game {
            spec: self.spec.clone().with_big_m(big_m),
            strategies: self.strategies.clone(),
        }
    }

    pub fn total_paths(&self) -> usize {
        self.strategies.iter().map(|s| s.paths.len()).sum()
    }

    pub fn path_cost(&self, path: &Path, loads: &LoadVector) -> f64 {
        path.edges()
            .iter()
            .map(|&e| self.spec.costs[e].value(loads.0[e]))
            .sum()
    }

    /// Whether equilibrium edge loads are guaranteed unique. Loads on strictly
    /// increasing edges always are; a constant-cost edge can carry a
    /// non-unique load only when some type with several strategies can route
    /// around it.
    pub fn loads_unique(&self) -> bool {
        let costs = &self.spec.costs;
        self.strategies.iter().all(|set| {
            if set.paths.len() < 2 {
                return true;
            }
            let mut counts: HashMap<EdgeIx, usize> = HashMap::new();
            for p in &set.paths {
                for &e in p.edges() {
                    *counts.entry(e).or_default() += 1;
                }
            }
            counts
                .iter()
                .all(|(&e, &n)| costs[e].is_strictly_increasing() || n == set.paths.len())
        })
    }
}

/// Strategy distribution per information type.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub flows: BTreeMap<TypeKey, BTreeMap<Path, f64>>,
}

impl Outcome {
    pub fn new() -> Self {
        Outcome::default()
    }

    pub fn set(&mut self, key: TypeKey, path: Path, flow: f64) -> &mut Self {
        self.flows.entry(key).or_default().insert(path, flow);
        self
    }

    pub fn flow(&self, key: TypeKey, path: &Path) -> f64 {
        self.flows
            .get(&key)
            .and_then(|m| m.get(path))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn type_total(&self, key: TypeKey) -> f64 {
        self.flows.get(&key).map(|m| m.values().sum()).unwrap_or(0.0)
    }

    /// Checks nonnegativity and that every type's flows sum to its demand.
    pub fn check_feasible(&self, game: &Game) -> Result<(), GameError> {
        for t in game.types() {
            if let Some(m) = self.flows.get(&t.key) {
                if let Some(&flow) = m.values().find(|f| !(**f >= 0.0)) {
                    return Err(GameError::NegativeFlow { key: t.key, flow });
                }
            }
            let total = self.type_total(t.key);
            if (total - t.demand).abs() > FEASIBILITY_TOL * (1.0 + t.demand) {
                return Err(GameError::Infeasible {
                    key: t.key,
                    total,
                    demand: t.demand,
                });
            }
        }
        Ok(())
    }
}

/// Per-edge loads, aligned with edge indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadVector(pub Vec<f64>);

impl LoadVector {
    pub fn zeros(edges: usize) -> Self {
        LoadVector(vec![0.0; edges])
    }

    pub fn get(&self, edge: EdgeIx) -> f64 {
        self.0[edge]
    }

    pub fn by_id(&self, network: &Network, id: &str) -> Option<f64> {
        network.edge_index(id).map(|e| self.0[e])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn check_strategy(game: &Game, key: TypeKey, path: &Path) -> Result<(), GameError> {
    let net = game.network();
    if let Some(&e) = path.edges().iter().find(|&&e| e >= net.edge_count()) {
        return Err(GameError::UnknownEdge(format!("#{e}")));
    }
    let set = game.strategies(key).ok_or(GameError::UnknownType(key))?;
    if !set.contains(path) {
        return Err(GameError::UnknownStrategy {
            key,
            path: path.display(net),
        });
    }
    Ok(())
}

/// Edge loads induced by an outcome.
pub fn edge_loads(game: &Game, outcome: &Outcome) -> Result<LoadVector, GameError> {
    let mut loads = LoadVector::zeros(game.network().edge_count());
    for (&key, flows) in &outcome.flows {
        for (path, &flow) in flows {
            check_strategy(game, key, path)?;
            for &e in path.edges() {
                loads.0[e] += flow;
            }
        }
    }
    Ok(loads)
}

/// Cost of a path at the loads induced by `outcome`.
pub fn strategy_cost(game: &Game, path: &Path, outcome: &Outcome) -> Result<f64, GameError> {
    let net = game.network();
    if let Some(&e) = path.edges().iter().find(|&&e| e >= net.edge_count()) {
        return Err(GameError::UnknownEdge(format!("#{e}")));
    }
    let loads = edge_loads(game, outcome)?;
    Ok(game.path_cost(path, &loads))
}

/// Cost experienced by one information type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypeCost {
    /// Flow-weighted mean over used strategies; for zero-demand types the
    /// cheapest strategy cost.
    pub value: f64,
    pub min_used: f64,
    pub max_used: f64,
    /// Cheapest strategy in the type's whole strategy set.
    pub min_strategy: f64,
    pub zero_demand: bool,
}

impl TypeCost {
    pub fn spread(&self) -> f64 {
        self.max_used - self.min_used
    }
}

pub(crate) fn type_cost_at(game: &Game, ix: usize, outcome: &Outcome, loads: &LoadVector) -> TypeCost {
    let t = &game.types()[ix];
    let set = &game.strategy_sets()[ix];
    let min_strategy = set
        .paths
        .iter()
        .map(|p| game.path_cost(p, loads))
        .fold(f64::INFINITY, f64::min);
    let mut weighted = 0.0;
    let mut total = 0.0;
    let mut min_used = f64::INFINITY;
    let mut max_used = f64::NEG_INFINITY;
    if let Some(flows) = outcome.flows.get(&t.key) {
        for (p, &x) in flows.iter().filter(|(_, x)| **x > 0.0) {
            let c = game.path_cost(p, loads);
            weighted += c * x;
            total += x;
            min_used = min_used.min(c);
            max_used = max_used.max(c);
        }
    }
    if t.demand <= 0.0 || total <= 0.0 {
        return TypeCost {
            value: min_strategy,
            min_used: min_strategy,
            max_used: min_strategy,
            min_strategy,
            zero_demand: true,
        };
    }
    TypeCost {
        value: weighted / total,
        min_used,
        max_used,
        min_strategy,
        zero_demand: false,
    }
}

pub fn type_cost(game: &Game, key: TypeKey, outcome: &Outcome) -> Result<TypeCost, GameError> {
    let ix = game.spec().type_index(key).ok_or(GameError::UnknownType(key))?;
    let loads = edge_loads(game, outcome)?;
    Ok(type_cost_at(game, ix, outcome, &loads))
}

pub(crate) fn social_cost_at(game: &Game, outcome: &Outcome, loads: &LoadVector) -> f64 {
    game.types()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.demand > 0.0)
        .map(|(ix, t)| type_cost_at(game, ix, outcome, loads).value * t.demand)
        .sum()
}

/// Total cost incurred by all players: `Σ_types cost · demand`.
pub fn social_cost(game: &Game, outcome: &Outcome) -> Result<f64, GameError> {
    let loads = edge_loads(game, outcome)?;
    Ok(social_cost_at(game, outcome, &loads))
}
