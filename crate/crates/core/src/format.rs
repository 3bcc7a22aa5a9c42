//! JSON game documents: loading, saving and conversion to and from
//! [`GameSpec`].

use std::collections::BTreeMap;
use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{validate_game, CostFunction, EdgeSet, GameError, GameSpec, Network, TypeKey};
use crate::paradox::Expansion;
use crate::scenarios::Scenario;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot read or write {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("invalid game: {0}")]
    Invalid(String),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        // serde_json appends " at line L column C"; keep just the message
        let full = e.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_string(),
            None => full,
        };
        FormatError::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

fn field(field: impl Into<String>, err: GameError) -> FormatError {
    FormatError::Field {
        field: field.into(),
        message: err.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    pub a: String,
    pub b: String,
    #[serde(default)]
    pub cost: CostFunction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationDoc {
    pub id: u32,
    pub origin: String,
    pub destination: String,
    /// Omitted: every edge lying on some origin–destination path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_edges: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeDoc {
    pub population: u32,
    pub k: u32,
    /// Omitted: the population's relevant edges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_edges: Option<Vec<String>>,
    pub demand: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionDoc {
    #[serde(rename = "type")]
    pub target: TypeKey,
    pub added_edges: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    pub populations: Vec<PopulationDoc>,
    pub types: Vec<TypeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion: Option<ExpansionDoc>,
    /// Edge id → reduced cost; edges not listed keep their cost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modified_costs: Option<BTreeMap<String, CostFunction>>,
}

/// A loaded document: the game plus any paired expansion or cost reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedGame {
    pub name: Option<String>,
    pub description: Option<String>,
    pub spec: GameSpec,
    pub expansion: Option<Expansion>,
    pub modified_costs: Option<Vec<CostFunction>>,
}

fn edge_set(net: &Network, ids: &[String], what: &str) -> Result<EdgeSet, FormatError> {
    net.edge_set(ids).map_err(|e| field(what, e))
}

impl GameDocument {
    pub fn from_spec(spec: &GameSpec) -> Self {
        let net = &spec.network;
        let ids = |set: &EdgeSet| net.edge_ids(set).into_iter().map(|e| e.0).collect();
        GameDocument {
            schema_version: SCHEMA_VERSION,
            name: None,
            description: None,
            nodes: net.nodes().iter().map(|n| n.0.clone()).collect(),
            edges: net
                .edges()
                .iter()
                .zip(&spec.costs)
                .map(|(e, c)| EdgeDoc {
                    id: e.id.0.clone(),
                    a: e.a.0.clone(),
                    b: e.b.0.clone(),
                    cost: c.clone(),
                })
                .collect(),
            populations: spec
                .populations
                .iter()
                .map(|p| PopulationDoc {
                    id: p.id,
                    origin: net.node(p.origin).0.clone(),
                    destination: net.node(p.destination).0.clone(),
                    relevant_edges: Some(ids(&p.relevant)),
                })
                .collect(),
            types: spec
                .types
                .iter()
                .map(|t| TypeDoc {
                    population: t.key.population,
                    k: t.key.k,
                    known_edges: Some(ids(&t.known)),
                    demand: t.demand,
                })
                .collect(),
            expansion: None,
            modified_costs: None,
        }
    }

    pub fn with_expansion(mut self, spec: &GameSpec, expansion: &Expansion) -> Self {
        self.expansion = Some(ExpansionDoc {
            target: expansion.target,
            added_edges: spec
                .network
                .edge_ids(&expansion.added)
                .into_iter()
                .map(|e| e.0)
                .collect(),
        });
        self
    }

    /// Records only the edges whose cost differs.
    pub fn with_modified_costs(mut self, spec: &GameSpec, costs: &[CostFunction]) -> Self {
        let changed: BTreeMap<String, CostFunction> = costs
            .iter()
            .enumerate()
            .filter(|(e, c)| spec.costs.get(*e) != Some(*c))
            .map(|(e, c)| (spec.network.edge_id(e).0.clone(), c.clone()))
            .collect();
        self.modified_costs = Some(changed);
        self
    }

    pub fn from_scenario(sc: &Scenario) -> Self {
        let mut doc = GameDocument::from_spec(&sc.spec);
        doc.name = Some(sc.id.as_str().to_string());
        doc.description = Some(sc.description.clone());
        if let Some(exp) = &sc.expansion {
            doc = doc.with_expansion(&sc.spec, exp);
        }
        if let Some(costs) = &sc.modified_costs {
            doc = doc.with_modified_costs(&sc.spec, costs);
        }
        doc
    }

    /// Builds the game without semantic validation.
    pub fn to_spec_unchecked(&self) -> Result<GameSpec, FormatError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(FormatError::Version(self.schema_version));
        }
        let net = Network::new(
            self.nodes.iter().cloned(),
            self.edges.iter().map(|e| (e.id.clone(), e.a.clone(), e.b.clone())),
        )
        .map_err(|e| field("edges", e))?;
        let mut spec = GameSpec::new(net);
        for (i, e) in self.edges.iter().enumerate() {
            spec.set_cost(&e.id, e.cost.clone())
                .map_err(|err| field(format!("edges[{i}].cost"), err))?;
        }
        for (i, p) in self.populations.iter().enumerate() {
            let relevant: Option<Vec<&str>> = p
                .relevant_edges
                .as_ref()
                .map(|v| v.iter().map(String::as_str).collect());
            spec.add_population(p.id, &p.origin, &p.destination, relevant.as_deref())
                .map_err(|e| field(format!("populations[{i}]"), e))?;
        }
        for (i, t) in self.types.iter().enumerate() {
            let known = match &t.known_edges {
                Some(ids) => Some(edge_set(&spec.network, ids, &format!("types[{i}].known_edges"))?),
                None => None,
            };
            let key = TypeKey::new(t.population, t.k);
            // add_type rejects duplicates and unknown populations; known sets
            // are stored verbatim so validation can report them
            spec.add_type(t.population, t.k, Some(&[] as &[&str]), t.demand)
                .map_err(|e| field(format!("types[{i}]"), e))?;
            let ix = spec.type_index(key).expect("just added");
            spec.types[ix].known = match known {
                Some(k) => k,
                None => spec.population(t.population).expect("checked").relevant.clone(),
            };
        }
        Ok(spec)
    }

    /// Builds and validates the game with its paired expansion and cost
    /// reduction.
    pub fn to_game(&self) -> Result<LoadedGame, FormatError> {
        let spec = self.to_spec_unchecked()?;
        let report = validate_game(&spec);
        if !report.is_valid() {
            return Err(FormatError::Invalid(report.to_string()));
        }
        let expansion = match &self.expansion {
            Some(x) => Some(Expansion {
                target: x.target,
                added: edge_set(&spec.network, &x.added_edges, "expansion.added_edges")?,
            }),
            None => None,
        };
        let modified_costs = match &self.modified_costs {
            Some(changes) => {
                let mut costs = spec.costs.clone();
                for (id, c) in changes {
                    let e = spec
                        .network
                        .require_edge(id)
                        .map_err(|err| field("modified_costs", err))?;
                    c.check().map_err(|err| field(format!("modified_costs.{id}"), err))?;
                    costs[e] = c.clone();
                }
                Some(costs)
            }
            None => None,
        };
        Ok(LoadedGame {
            name: self.name.clone(),
            description: self.description.clone(),
            spec,
            expansion,
            modified_costs,
        })
    }
}

pub fn parse_document(text: &str) -> Result<GameDocument, FormatError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_game(text: &str) -> Result<LoadedGame, FormatError> {
    parse_document(text)?.to_game()
}

pub fn load_game(path: impl AsRef<FsPath>) -> Result<LoadedGame, FormatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_game(&text)
}

pub fn document_to_string(doc: &GameDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialise");
    s.push('\n');
    s
}

pub fn write_document(doc: &GameDocument, path: impl AsRef<FsPath>) -> Result<(), FormatError> {
    let path = path.as_ref();
    fs::write(path, document_to_string(doc)).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn save_game(spec: &GameSpec, path: impl AsRef<FsPath>) -> Result<(), FormatError> {
    write_document(&GameDocument::from_spec(spec), path)
}
