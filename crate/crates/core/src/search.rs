//! Seeded random instance families and the parallel paradox search over them.
//!
//! Sample `i` of a search draws from its own ChaCha stream (`seed`, stream
//! `i`), so results do not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::SolverOptions;
use crate::format::GameDocument;
use crate::game::{CostFunction, EdgeSet, Game, GameSpec, Network, TypeKey};
use crate::paradox::{
    self, construct_ibpsc_witness, Confidence, Expansion, ParadoxError, ParadoxKind, ParadoxVerdict,
    WitnessCosts,
};
use crate::topology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// Rings of 3–8 edges shared by 1–3 populations.
    Circuit,
    /// Single origin–destination series chains of rings and single edges.
    Sli,
    /// Wheatstone network with a mix of flat and steep edge costs.
    Wheatstone,
    /// Random two-terminal networks with two or more routes, with the
    /// constructed social-cost witness costs.
    Pigou,
    /// Random small networks with at most 12 strategies in total.
    Small,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 5] = [
        FamilyKind::Circuit,
        FamilyKind::Sli,
        FamilyKind::Wheatstone,
        FamilyKind::Pigou,
        FamilyKind::Small,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Circuit => "circuit",
            FamilyKind::Sli => "sli",
            FamilyKind::Wheatstone => "wheatstone",
            FamilyKind::Pigou => "pigou",
            FamilyKind::Small => "small",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown family '{s}' (circuit, sli, wheatstone, pigou, small)"))
    }
}

/// Generator settings. Costs are nonnegative polynomials whose linear
/// coefficient is at least `min_linear`, so a positive value makes every
/// cost strictly increasing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub min_ring: usize,
    pub max_ring: usize,
    pub max_populations: usize,
    pub max_types: usize,
    pub max_blocks: usize,
    pub max_degree: usize,
    pub coefficient_max: f64,
    pub min_linear: f64,
    /// Demands are drawn from `(0, demand_max]`.
    pub demand_max: f64,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind) -> Self {
        FamilySpec {
            kind,
            min_ring: 3,
            max_ring: 8,
            max_populations: 3,
            max_types: 2,
            max_blocks: 4,
            max_degree: 3,
            coefficient_max: 2.0,
            min_linear: 0.05,
            demand_max: 2.0,
        }
    }
}

/// One sampled game with whatever the family pairs it with.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub spec: GameSpec,
    pub expansion: Option<Expansion>,
    pub modified_costs: Option<Vec<CostFunction>>,
}

impl Instance {
    pub fn document(&self) -> GameDocument {
        let mut doc = GameDocument::from_spec(&self.spec);
        if let Some(exp) = &self.expansion {
            doc = doc.with_expansion(&self.spec, exp);
        }
        if let Some(costs) = &self.modified_costs {
            doc = doc.with_modified_costs(&self.spec, costs);
        }
        doc
    }
}

pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn demand(rng: &mut ChaCha8Rng, f: &FamilySpec) -> f64 {
    // (0, max]
    f.demand_max * (1.0 - rng.gen::<f64>())
}

pub fn random_cost(rng: &mut ChaCha8Rng, f: &FamilySpec) -> CostFunction {
    let mut c = vec![0.0; f.max_degree.max(1) + 1];
    c[0] = rng.gen_range(0.0..=f.coefficient_max);
    c[1] = rng.gen_range(f.min_linear..=f.coefficient_max.max(f.min_linear));
    for coeff in c.iter_mut().skip(2) {
        if rng.gen_bool(0.5) {
            *coeff = rng.gen_range(0.0..=f.coefficient_max);
        }
    }
    CostFunction::Polynomial { coefficients: c }
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// A random valid expansion of one restricted type: usually everything it
/// is missing, otherwise a random nonempty part of it.
fn random_expansion(rng: &mut ChaCha8Rng, spec: &GameSpec) -> Option<Expansion> {
    let restricted: Vec<(TypeKey, EdgeSet)> = spec
        .types
        .iter()
        .filter_map(|t| {
            let rel = &spec.population(t.key.population)?.relevant;
            let missing: EdgeSet = rel.difference(&t.known).copied().collect();
            (!missing.is_empty()).then_some((t.key, missing))
        })
        .collect();
    let (target, missing) = restricted.choose(rng)?.clone();
    let added = if rng.gen_bool(0.75) {
        missing
    } else {
        let mut part: EdgeSet = missing.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if part.is_empty() {
            let all: Vec<usize> = missing.iter().copied().collect();
            part.insert(*all.choose(rng).expect("nonempty"));
        }
        part
    };
    Some(Expansion { target, added })
}

fn circuit(rng: &mut ChaCha8Rng, f: &FamilySpec) -> Instance {
    let n = rng.gen_range(f.min_ring.max(3)..=f.max_ring.max(f.min_ring.max(3)));
    let nodes: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let edges: Vec<(String, String, String)> = (0..n)
        .map(|i| (format!("r{i:02}"), nodes[i].clone(), nodes[(i + 1) % n].clone()))
        .collect();
    let net = Network::new(nodes.clone(), edges).expect("ring");
    let mut spec = GameSpec::new(net);
    for e in 0..n {
        spec.costs[e] = random_cost(rng, f);
    }
    let pops = rng.gen_range(1..=f.max_populations.max(1));
    for pid in 1..=pops as u32 {
        let o = rng.gen_range(0..n);
        let d = (o + rng.gen_range(1..n)) % n;
        spec.add_population(pid, &nodes[o], &nodes[d], None).expect("ring population");
        // arc from o forward to d, and the complementary arc
        let forward: EdgeSet = (0..(d + n - o) % n).map(|j| (o + j) % n).collect();
        let backward: EdgeSet = (0..n).filter(|e| !forward.contains(e)).collect();
        let types = rng.gen_range(1..=f.max_types.max(1));
        for k in 1..=types as u32 {
            let known = match rng.gen_range(0..3) {
                0 => forward.clone(),
                1 => backward.clone(),
                _ => (0..n).collect(),
            };
            let d = demand(rng, f);
            spec.add_type(pid, k, None, d).expect("ring type");
            let ix = spec.types.len() - 1;
            spec.types[ix].known = known;
        }
    }
    if spec.types.iter().all(|t| t.known.len() == n) {
        let pop = &spec.populations[0];
        let o = pop.origin;
        let d = pop.destination;
        spec.types[0].known = (0..(d + n - o) % n).map(|j| (o + j) % n).collect();
    }
    let expansion = random_expansion(rng, &spec);
    Instance {
        spec,
        expansion,
        modified_costs: None,
    }
}

fn sli_chain(rng: &mut ChaCha8Rng, f: &FamilySpec) -> Instance {
    let blocks = rng.gen_range(1..=f.max_blocks.max(1));
    let mut is_ring: Vec<bool> = (0..blocks).map(|_| rng.gen_bool(0.6)).collect();
    if !is_ring.iter().any(|&r| r) {
        let b = rng.gen_range(0..blocks);
        is_ring[b] = true;
    }
    let mut nodes = vec!["c0".to_string()];
    let mut edges: Vec<(String, String, String)> = Vec::new();
    // per block: (single edge) or (arc a, arc b) as edge-id lists
    let mut layout: Vec<Vec<Vec<String>>> = Vec::new();
    for (b, &ring) in is_ring.iter().enumerate() {
        let from = format!("c{b}");
        let to = format!("c{}", b + 1);
        nodes.push(to.clone());
        if !ring {
            let id = format!("b{b}e");
            edges.push((id.clone(), from, to));
            layout.push(vec![vec![id]]);
            continue;
        }
        let len = rng.gen_range(3..=6);
        let first = rng.gen_range(1..len);
        let mut arcs = Vec::new();
        for (side, count) in [("a", first), ("b", len - first)] {
            let mut at = from.clone();
            let mut arc = Vec::new();
            for j in 0..count {
                let next = if j + 1 == count {
                    to.clone()
                } else {
                    let inner = format!("b{b}{side}{j}");
                    nodes.push(inner.clone());
                    inner
                };
                let id = format!("b{b}{side}e{j}");
                edges.push((id.clone(), at.clone(), next.clone()));
                arc.push(id);
                at = next;
            }
            arcs.push(arc);
        }
        layout.push(arcs);
    }
    let last = format!("c{blocks}");
    let net = Network::new(nodes, edges).expect("chain");
    let mut spec = GameSpec::new(net);
    for e in 0..spec.network.edge_count() {
        spec.costs[e] = random_cost(rng, f);
    }
    spec.add_population(1, "c0", &last, None).expect("chain population");
    let types = rng.gen_range(1..=f.max_types.max(1) + 1);
    for k in 1..=types as u32 {
        let mut known: Vec<String> = Vec::new();
        for block in &layout {
            if block.len() == 1 {
                known.extend(block[0].iter().cloned());
            } else {
                match rng.gen_range(0..3) {
                    0 => known.extend(block[0].iter().cloned()),
                    1 => known.extend(block[1].iter().cloned()),
                    _ => known.extend(block.iter().flatten().cloned()),
                }
            }
        }
        let d = demand(rng, f);
        spec.add_type(1, k, Some(&refs(&known)), d).expect("chain type");
    }
    let full = spec.network.edge_count();
    if spec.types.iter().all(|t| t.known.len() == full) {
        let known: Vec<String> = layout.iter().flat_map(|b| b[0].iter().cloned()).collect();
        spec.types[0].known = spec.network.edge_set(&known).expect("chain ids");
    }
    let expansion = random_expansion(rng, &spec);
    Instance {
        spec,
        expansion,
        modified_costs: None,
    }
}

fn wheatstone(rng: &mut ChaCha8Rng, f: &FamilySpec) -> Instance {
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
    .expect("wheatstone");
    let mut spec = GameSpec::new(net);
    for id in ["O1", "1D", "O2", "2D"] {
        let cost = if rng.gen_bool(0.5) {
            // flat: large constant, slight slope
            CostFunction::affine(rng.gen_range(0.5..=2.0), rng.gen_range(0.001..=0.05))
        } else {
            // steep
            let mut c = vec![rng.gen_range(0.0..=0.2), rng.gen_range(0.5..=f.coefficient_max.max(0.5))];
            if f.max_degree >= 2 && rng.gen_bool(0.3) {
                c.push(rng.gen_range(0.0..=1.0));
            }
            CostFunction::Polynomial { coefficients: c }
        };
        spec.set_cost(id, cost).expect("wheatstone cost");
    }
    spec.set_cost(
        "12",
        CostFunction::affine(rng.gen_range(0.0..=0.3), rng.gen_range(0.001..=0.05)),
    )
    .expect("crossbar cost");
    spec.add_population(1, "O", "D", None).expect("population");
    let d = demand(rng, f);
    spec.add_type(1, 1, Some(&["O1", "1D", "O2", "2D"]), d).expect("type");
    if rng.gen_bool(0.5) {
        let d = demand(rng, f);
        spec.add_type(1, 2, None, d).expect("type");
    }
    let expansion = Expansion {
        target: TypeKey::new(1, 1),
        added: spec.network.edge_set(&["12"]).expect("crossbar"),
    };
    Instance {
        spec,
        expansion: Some(expansion),
        modified_costs: None,
    }
}

/// Random connected multigraph on `n` nodes: a random tree plus `extra` edges.
fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> (Vec<String>, Vec<(String, String, String)>) {
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((format!("g{:02}", edges.len()), nodes[j].clone(), nodes[i].clone()));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        edges.push((format!("g{:02}", edges.len()), nodes[a].clone(), nodes[b].clone()));
    }
    (nodes, edges)
}

fn pigou(rng: &mut ChaCha8Rng, f: &FamilySpec) -> Instance {
    loop {
        let n = rng.gen_range(3..=6);
        let extra = rng.gen_range(1..=n);
        let (nodes, edges) = random_graph(rng, n, extra);
        let net = Network::new(nodes, edges).expect("random graph");
        let (o, d) = (0, n - 1);
        let o = net.node_index(&format!("n{o}")).expect("node");
        let d = net.node_index(&format!("n{d}")).expect("node");
        if !topology::has_pigou_embedding(&net, o, d) {
            continue;
        }
        let costs = WitnessCosts {
            slope: rng.gen_range(0.5..=2.0),
            constant: rng.gen_range(0.5..=3.0),
            restricted_demand: demand(rng, f),
            informed_demand: demand(rng, f),
        };
        if let Ok(Some(w)) = construct_ibpsc_witness(&net, o, d, costs) {
            return Instance {
                spec: w.spec,
                expansion: Some(w.expansion),
                modified_costs: None,
            };
        }
    }
}

fn small(rng: &mut ChaCha8Rng, f: &FamilySpec) -> Instance {
    loop {
        let n = rng.gen_range(3..=5);
        let extra = rng.gen_range(0..=n);
        let (nodes, edges) = random_graph(rng, n, extra);
        let net = Network::new(nodes.clone(), edges).expect("random graph");
        let mut spec = GameSpec::new(net);
        for e in 0..spec.network.edge_count() {
            spec.costs[e] = random_cost(rng, f);
        }
        let pops = rng.gen_range(1..=2);
        for pid in 1..=pops as u32 {
            let o = rng.gen_range(0..n);
            let d = (o + rng.gen_range(1..n)) % n;
            spec.add_population(pid, &nodes[o], &nodes[d], None).expect("population");
            let pop = spec.population(pid).expect("just added").clone();
            let types = rng.gen_range(1..=f.max_types.max(1));
            for k in 1..=types as u32 {
                let mut known = pop.relevant.clone();
                if rng.gen_bool(0.5) {
                    let candidate: EdgeSet = pop.relevant.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
                    if crate::pathsets::connects(&spec.network, pop.origin, pop.destination, &candidate) {
                        known = candidate;
                    }
                }
                let d = demand(rng, f);
                spec.add_type(pid, k, None, d).expect("type");
                let ix = spec.types.len() - 1;
                spec.types[ix].known = known;
            }
        }
        match Game::new(spec.clone()) {
            Ok(g) if g.total_paths() <= crate::equilibrium::BRUTE_FORCE_PATH_LIMIT => {
                let expansion = random_expansion(rng, &spec);
                return Instance {
                    spec,
                    expansion,
                    modified_costs: None,
                };
            }
            _ => continue,
        }
    }
}

/// Scales every coefficient of one random relevant edge by a factor in
/// `[0, 1)`; big-M edges drop to a random finite constant.
fn reduce_one_edge(rng: &mut ChaCha8Rng, f: &FamilySpec, spec: &GameSpec) -> Vec<CostFunction> {
    let mut costs = spec.costs.clone();
    let relevant: Vec<usize> = spec.irredundant_edges().into_iter().collect();
    let Some(&e) = relevant.choose(rng) else {
        return costs;
    };
    let u: f64 = rng.gen_range(0.0..1.0);
    costs[e] = match &costs[e] {
        CostFunction::Polynomial { coefficients } => CostFunction::Polynomial {
            coefficients: coefficients.iter().map(|c| c * u).collect(),
        },
        CostFunction::BigM { .. } => CostFunction::constant(u * f.coefficient_max),
    };
    costs
}

/// Draws sample `index` of the family under `seed`.
pub fn sample_instance(family: &FamilySpec, kind: ParadoxKind, seed: u64, index: usize) -> Instance {
    let mut rng = sample_rng(seed, index);
    let mut inst = match family.kind {
        FamilyKind::Circuit => circuit(&mut rng, family),
        FamilyKind::Sli => sli_chain(&mut rng, family),
        FamilyKind::Wheatstone => wheatstone(&mut rng, family),
        FamilyKind::Pigou => pigou(&mut rng, family),
        FamilyKind::Small => small(&mut rng, family),
    };
    if kind == ParadoxKind::Bp {
        inst.modified_costs = Some(reduce_one_edge(&mut rng, family, &inst.spec));
    }
    inst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Occurred,
    NotOccurred,
    /// The solver did not converge, so no verdict is given.
    Withheld,
    /// The instance has no valid expansion or reduction for this kind.
    Skipped,
}

impl fmt::Display for SampleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleStatus::Occurred => "occurred",
            SampleStatus::NotOccurred => "not_occurred",
            SampleStatus::Withheld => "withheld",
            SampleStatus::Skipped => "skipped",
        })
    }
}

/// One row of search output. Expansion samples carry both the own-cost and
/// the social-cost change of the same equilibrium pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchRecord {
    pub sample: usize,
    pub family: FamilyKind,
    pub kind: ParadoxKind,
    pub status: SampleStatus,
    pub confidence: Option<Confidence>,
    pub target: Option<TypeKey>,
    pub delta: Option<f64>,
    pub target_delta: Option<f64>,
    pub social_cost_before: Option<f64>,
    pub social_cost_after: Option<f64>,
    pub social_cost_delta: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub record: SearchRecord,
    pub instance: Instance,
}

impl Witness {
    /// The replayable document: the game plus its expansion or reduction.
    pub fn document(&self, seed: u64) -> GameDocument {
        let mut doc = self.instance.document();
        doc.name = Some(format!(
            "{}-{}-seed{}-sample{}",
            self.record.family, self.record.kind, seed, self.record.sample
        ));
        doc
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchReport {
    pub records: Vec<SearchRecord>,
    pub witnesses: Vec<Witness>,
}

/// Runs the detector `kind` on an instance.
pub fn evaluate(instance: &Instance, kind: ParadoxKind, options: &SolverOptions) -> Result<ParadoxVerdict, ParadoxError> {
    match kind {
        ParadoxKind::Bp => {
            let costs = instance
                .modified_costs
                .as_ref()
                .ok_or_else(|| ParadoxError::Mismatch("missing cost reduction".into()))?;
            paradox::detect_bp(&instance.spec, costs, None, options)
        }
        ParadoxKind::Ibp | ParadoxKind::Ibpsc => {
            let exp = instance
                .expansion
                .as_ref()
                .ok_or_else(|| ParadoxError::Mismatch("missing expansion".into()))?;
            paradox::detect_expansion(&instance.spec, exp, kind, options)
        }
    }
}

fn record_for(sample: usize, family: FamilyKind, kind: ParadoxKind, result: &Result<ParadoxVerdict, ParadoxError>) -> SearchRecord {
    let mut r = SearchRecord {
        sample,
        family,
        kind,
        status: SampleStatus::Skipped,
        confidence: None,
        target: None,
        delta: None,
        target_delta: None,
        social_cost_before: None,
        social_cost_after: None,
        social_cost_delta: None,
        note: String::new(),
    };
    match result {
        Ok(v) => {
            r.status = if v.occurred {
                SampleStatus::Occurred
            } else {
                SampleStatus::NotOccurred
            };
            r.confidence = Some(v.confidence);
            r.target = v.target;
            r.delta = Some(v.delta);
            r.target_delta = v.target_delta;
            r.social_cost_before = Some(v.before.social_cost);
            r.social_cost_after = Some(v.after.social_cost);
            r.social_cost_delta = Some(v.social_cost_delta);
            r.note = v.warnings.join("; ");
        }
        Err(e @ ParadoxError::NotConverged { .. }) => {
            r.status = SampleStatus::Withheld;
            r.note = e.to_string();
        }
        Err(e) => r.note = e.to_string(),
    }
    r
}

/// Samples `budget` instances of the family and runs the `kind` detector on
/// each, on `threads` workers. Records come back in sample order for every
/// sample; witnesses are the samples where the paradox occurred.
pub fn search_paradox(
    family: &FamilySpec,
    kind: ParadoxKind,
    budget: usize,
    seed: u64,
    options: &SolverOptions,
    threads: usize,
) -> SearchReport {
    let run = |i: usize| -> (SearchRecord, Option<Instance>) {
        let inst = sample_instance(family, kind, seed, i);
        let result = evaluate(&inst, kind, options);
        let record = record_for(i, family.kind, kind, &result);
        let keep = record.status == SampleStatus::Occurred;
        (record, keep.then_some(inst))
    };
    let rows: Vec<(SearchRecord, Option<Instance>)> = match rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| (0..budget).into_par_iter().map(run).collect()),
        Err(_) => (0..budget).map(run).collect(),
    };
    let mut report = SearchReport::default();
    for (record, inst) in rows {
        if let Some(instance) = inst {
            report.witnesses.push(Witness {
                record: record.clone(),
                instance,
            });
        }
        report.records.push(record);
    }
    report
}

/// Re-runs a witness document through the detector.
pub fn replay(doc: &GameDocument, kind: ParadoxKind, options: &SolverOptions) -> Result<ParadoxVerdict, ReplayError> {
    let loaded = doc.to_game()?;
    let inst = Instance {
        spec: loaded.spec,
        expansion: loaded.expansion,
        modified_costs: loaded.modified_costs,
    };
    Ok(evaluate(&inst, kind, options)?)
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Format(#[from] crate::format::FormatError),
    #[error(transparent)]
    Paradox(#[from] ParadoxError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::validate_game;

    #[test]
    fn samples_are_valid_and_reproducible() {
        for kind in FamilyKind::ALL {
            let f = FamilySpec::new(kind);
            for i in 0..20 {
                let a = sample_instance(&f, ParadoxKind::Ibp, 7, i);
                let b = sample_instance(&f, ParadoxKind::Ibp, 7, i);
                assert_eq!(a, b);
                let report = validate_game(&a.spec);
                assert!(report.is_valid(), "{kind} sample {i}: {report}");
                if let Some(exp) = &a.expansion {
                    assert!(paradox::expand_information(&a.spec, exp).is_ok(), "{kind} {i}");
                }
            }
        }
    }

    #[test]
    fn circuit_samples_are_circuit_games() {
        let f = FamilySpec::new(FamilyKind::Circuit);
        for i in 0..50 {
            let inst = sample_instance(&f, ParadoxKind::Ibp, 3, i);
            assert!(topology::is_circuit_game(&inst.spec).is_circuit_game);
            assert!(inst.expansion.is_some());
        }
    }

    #[test]
    fn sli_samples_are_sli() {
        let f = FamilySpec::new(FamilyKind::Sli);
        for i in 0..50 {
            let inst = sample_instance(&f, ParadoxKind::Ibp, 3, i);
            let p = &inst.spec.populations[0];
            let r = topology::is_sli(&inst.spec.network, p.origin, p.destination).unwrap();
            assert!(r.is_sli, "sample {i}");
            assert!(inst.expansion.is_some());
        }
    }

    #[test]
    fn zero_budget_is_empty() {
        let r = search_paradox(
            &FamilySpec::new(FamilyKind::Pigou),
            ParadoxKind::Ibpsc,
            0,
            1,
            &SolverOptions::default(),
            2,
        );
        assert!(r.records.is_empty());
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn pigou_family_yields_social_cost_witnesses() {
        let r = search_paradox(
            &FamilySpec::new(FamilyKind::Pigou),
            ParadoxKind::Ibpsc,
            20,
            11,
            &SolverOptions::default(),
            2,
        );
        assert_eq!(r.records.len(), 20);
        assert!(!r.witnesses.is_empty());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let f = FamilySpec::new(FamilyKind::Wheatstone);
        let one = search_paradox(&f, ParadoxKind::Ibp, 16, 5, &SolverOptions::default(), 1);
        let four = search_paradox(&f, ParadoxKind::Ibp, 16, 5, &SolverOptions::default(), 4);
        assert_eq!(one, four);
    }

    #[test]
    fn witnesses_replay_bit_for_bit() {
        let f = FamilySpec::new(FamilyKind::Wheatstone);
        let opts = SolverOptions::default();
        let r = search_paradox(&f, ParadoxKind::Ibp, 40, 2, &opts, 2);
        assert!(!r.witnesses.is_empty());
        for w in &r.witnesses {
            let text = crate::format::document_to_string(&w.document(2));
            let doc = crate::format::parse_document(&text).unwrap();
            let v = replay(&doc, ParadoxKind::Ibp, &opts).unwrap();
            assert!(v.occurred);
            assert_eq!(Some(v.before.social_cost), w.record.social_cost_before);
            assert_eq!(Some(v.after.social_cost), w.record.social_cost_after);
            assert_eq!(v.target_delta, w.record.target_delta);
        }
    }

    #[test]
    fn bp_samples_reduce_costs() {
        let f = FamilySpec::new(FamilyKind::Small);
        for i in 0..20 {
            let inst = sample_instance(&f, ParadoxKind::Bp, 9, i);
            let costs = inst.modified_costs.unwrap();
            for (new, old) in costs.iter().zip(&inst.spec.costs) {
                assert!(new.dominated_by(old));
            }
        }
    }
}
