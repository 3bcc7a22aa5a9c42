//! Simple origin–destination path enumeration and per-type strategy sets.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::game::{EdgeIx, EdgeSet, GameError, GameSpec, Network, NodeIx, TypeKey};

/// Default maximum number of paths enumerated per type.
pub const DEFAULT_PATH_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("path explosion: more than {cap} simple paths")]
    Explosion { cap: usize },
}

/// A simple path as its edge sequence, walked from the origin. Ordering is
/// lexicographic on the edge sequence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(Vec<EdgeIx>);

impl Path {
    pub fn new(edges: Vec<EdgeIx>) -> Self {
        Path(edges)
    }

    /// Orders the given edges into a walk from `start`.
    pub fn from_walk<S: AsRef<str>>(
        network: &Network,
        start: NodeIx,
        ids: &[S],
    ) -> Result<Path, GameError> {
        let mut remaining = network.edge_set(ids)?;
        let mut at = start;
        let mut seq = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let next = network
                .incident(at)
                .iter()
                .find(|(e, _)| remaining.contains(e))
                .copied()
                .ok_or_else(|| GameError::UnknownEdge("edges do not form a path".into()))?;
            remaining.remove(&next.0);
            seq.push(next.0);
            at = next.1;
        }
        Ok(Path(seq))
    }

    pub fn edges(&self) -> &[EdgeIx] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, edge: EdgeIx) -> bool {
        self.0.contains(&edge)
    }

    pub fn edge_set(&self) -> EdgeSet {
        self.0.iter().copied().collect()
    }

    pub fn display(&self, network: &Network) -> String {
        let ids: Vec<&str> = self.0.iter().map(|&e| network.edge_id(e).0.as_str()).collect();
        format!("[{}]", ids.join(" "))
    }

    pub fn ids(&self, network: &Network) -> Vec<String> {
        self.0.iter().map(|&e| network.edge_id(e).0.clone()).collect()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "[{}]", ids.join(" "))
    }
}

/// All simple `origin → destination` paths using only `allowed` edges, in
/// lexicographic order of edge sequences.
pub fn enumerate_paths(
    network: &Network,
    origin: NodeIx,
    destination: NodeIx,
    allowed: &EdgeSet,
    cap: usize,
) -> Result<Vec<Path>, PathError> {
    let mut out = Vec::new();
    if origin == destination || allowed.is_empty() {
        return Ok(out);
    }
    let mut visited = vec![false; network.node_count()];
    let mut stack: Vec<EdgeIx> = Vec::new();
    visited[origin] = true;
    dfs(
        network,
        origin,
        destination,
        allowed,
        cap,
        &mut visited,
        &mut stack,
        &mut out,
    )?;
    // DFS over sorted incidence lists already yields lexicographic order;
    // sorting keeps the contract independent of that detail.
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    network: &Network,
    at: NodeIx,
    destination: NodeIx,
    allowed: &EdgeSet,
    cap: usize,
    visited: &mut [bool],
    stack: &mut Vec<EdgeIx>,
    out: &mut Vec<Path>,
) -> Result<(), PathError> {
    for &(e, next) in network.incident(at) {
        if visited[next] || !allowed.contains(&e) {
            continue;
        }
        stack.push(e);
        if next == destination {
            if out.len() == cap {
                return Err(PathError::Explosion { cap });
            }
            out.push(Path(stack.clone()));
        } else {
            visited[next] = true;
            dfs(network, next, destination, allowed, cap, visited, stack, out)?;
            visited[next] = false;
        }
        stack.pop();
    }
    Ok(())
}

/// Whether `origin` reaches `destination` through `allowed` edges.
pub fn connects(network: &Network, origin: NodeIx, destination: NodeIx, allowed: &EdgeSet) -> bool {
    if origin == destination {
        return true;
    }
    let mut seen = vec![false; network.node_count()];
    let mut queue = VecDeque::from([origin]);
    seen[origin] = true;
    while let Some(u) = queue.pop_front() {
        for &(e, v) in network.incident(u) {
            if allowed.contains(&e) && !seen[v] {
                if v == destination {
                    return true;
                }
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Edges of `candidates` lying on at least one simple `origin → destination`
/// path within `candidates`.
///
/// An edge lies on such a path iff it shares a biconnected component with a
/// virtual `origin–destination` edge, so this runs in linear time without
/// enumerating paths.
pub fn relevant_edges(
    network: &Network,
    origin: NodeIx,
    destination: NodeIx,
    candidates: &EdgeSet,
) -> EdgeSet {
    if origin == destination || candidates.is_empty() {
        return EdgeSet::new();
    }
    let n = network.node_count();
    let virtual_edge = network.edge_count();
    let mut adj: Vec<Vec<(EdgeIx, NodeIx)>> = vec![Vec::new(); n];
    for &e in candidates {
        if e >= network.edge_count() {
            continue;
        }
        let (a, b) = network.endpoints(e);
        adj[a].push((e, b));
        adj[b].push((e, a));
    }
    adj[origin].push((virtual_edge, destination));
    adj[destination].push((virtual_edge, origin));

    // Iterative Tarjan over edges; parent is tracked by edge so parallel
    // edges close cycles correctly.
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0;
    let mut edge_stack: Vec<EdgeIx> = Vec::new();
    // frame: (node, parent edge, next adjacency position)
    let mut frames: Vec<(NodeIx, EdgeIx, usize)> = vec![(origin, usize::MAX, 0)];
    disc[origin] = time;
    low[origin] = time;
    time += 1;
    while let Some(&mut (u, parent, ref mut pos)) = frames.last_mut() {
        if *pos < adj[u].len() {
            let (e, v) = adj[u][*pos];
            *pos += 1;
            if e == parent {
                continue;
            }
            if disc[v] == usize::MAX {
                edge_stack.push(e);
                disc[v] = time;
                low[v] = time;
                time += 1;
                frames.push((v, e, 0));
            } else if disc[v] < disc[u] {
                edge_stack.push(e);
                low[u] = low[u].min(disc[v]);
            }
        } else {
            frames.pop();
            if let Some(&(p, _, _)) = frames.last() {
                low[p] = low[p].min(low[u]);
                if low[u] >= disc[p] {
                    let mut component = Vec::new();
                    while let Some(x) = edge_stack.pop() {
                        component.push(x);
                        if x == parent {
                            break;
                        }
                    }
                    if component.contains(&virtual_edge) {
                        return component.into_iter().filter(|&x| x != virtual_edge).collect();
                    }
                }
            }
        }
    }
    EdgeSet::new()
}

/// Strategy set of one information type.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategySet {
    pub key: TypeKey,
    pub paths: Vec<Path>,
}

impl StrategySet {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn contains(&self, path: &Path) -> bool {
        self.paths.binary_search(path).is_ok()
    }

    pub fn position(&self, path: &Path) -> Option<usize> {
        self.paths.binary_search(path).ok()
    }
}

/// Strategy sets aligned with `spec.types`: simple paths of the owning
/// population restricted to each type's known edges.
pub fn build_strategy_sets(spec: &GameSpec, cap: usize) -> Result<Vec<StrategySet>, PathError> {
    spec.types
        .iter()
        .map(|t| {
            let paths = match spec.population(t.key.population) {
                Some(pop) => {
                    let allowed: EdgeSet = t.known.intersection(&pop.relevant).copied().collect();
                    enumerate_paths(&spec.network, pop.origin, pop.destination, &allowed, cap)?
                }
                None => Vec::new(),
            };
            Ok(StrategySet { key: t.key, paths })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{self, ScenarioId};

    fn wheatstone() -> Network {
        scenarios::builtin(ScenarioId::WheatstoneBp).spec.network
    }

    fn ids(net: &Network, paths: &[Path]) -> Vec<Vec<String>> {
        paths.iter().map(|p| p.ids(net)).collect()
    }

    #[test]
    fn wheatstone_has_four_paths() {
        let net = wheatstone();
        let o = net.node_index("O").unwrap();
        let d = net.node_index("D").unwrap();
        let paths = enumerate_paths(&net, o, d, &net.all_edges(), 100).unwrap();
        let mut got: Vec<Vec<String>> = ids(&net, &paths)
            .into_iter()
            .map(|mut p| {
                p.sort();
                p
            })
            .collect();
        got.sort();
        let mut want: Vec<Vec<String>> = vec![
            vec!["1D", "O1"],
            vec!["2D", "O2"],
            vec!["12", "2D", "O1"],
            vec!["12", "1D", "O2"],
        ]
        .into_iter()
        .map(|v| v.into_iter().map(String::from).collect())
        .collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn pigou_has_two_paths() {
        let net = scenarios::builtin(ScenarioId::PigouIbpsc).spec.network;
        let paths = enumerate_paths(
            &net,
            net.node_index("O").unwrap(),
            net.node_index("D").unwrap(),
            &net.all_edges(),
            10,
        )
        .unwrap();
        assert_eq!(ids(&net, &paths), vec![vec!["e1"], vec!["e2"]]);
    }

    #[test]
    fn nothing_allowed_means_no_paths() {
        let net = wheatstone();
        let paths = enumerate_paths(&net, 0, 1, &EdgeSet::new(), 10).unwrap();
        assert!(paths.is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        let net = wheatstone();
        let o = net.node_index("O").unwrap();
        let d = net.node_index("D").unwrap();
        assert_eq!(
            enumerate_paths(&net, o, d, &net.all_edges(), 3),
            Err(PathError::Explosion { cap: 3 })
        );
        assert!(enumerate_paths(&net, o, d, &net.all_edges(), 4).is_ok());
    }

    #[test]
    fn ring_strategy_sets() {
        let spec = scenarios::builtin(ScenarioId::TwoPopRing).spec;
        let sets = build_strategy_sets(&spec, 100).unwrap();
        let net = &spec.network;
        let by_key = |p, k| {
            let s = sets.iter().find(|s| s.key == TypeKey::new(p, k)).unwrap();
            let mut v: Vec<Vec<String>> = s
                .paths
                .iter()
                .map(|p| {
                    let mut x = p.ids(net);
                    x.sort();
                    x
                })
                .collect();
            v.sort();
            v
        };
        assert_eq!(by_key(1, 1), vec![vec!["e1", "e2"]]);
        assert_eq!(by_key(1, 2), vec![vec!["e1", "e2"], vec!["e3", "e4"]]);
        assert_eq!(by_key(2, 2), vec![vec!["e1", "e3"], vec!["e2", "e4"]]);
    }

    #[test]
    fn single_edge_network() {
        let net = Network::new(["a", "b"], [("e", "a", "b")]).unwrap();
        let mut spec = GameSpec::new(net);
        spec.add_population(1, "a", "b", None)
            .unwrap()
            .add_type(1, 1, None, 1.0)
            .unwrap();
        let sets = build_strategy_sets(&spec, 10).unwrap();
        assert_eq!(sets[0].paths, vec![Path::new(vec![0])]);
    }

    #[test]
    fn relevance() {
        let net = wheatstone();
        let o = net.node_index("O").unwrap();
        let d = net.node_index("D").unwrap();
        assert_eq!(relevant_edges(&net, o, d, &net.all_edges()), net.all_edges());

        let spec = scenarios::builtin(ScenarioId::TwoPopRing).spec;
        let net = &spec.network;
        let o1 = net.node_index("O1").unwrap();
        let d1 = net.node_index("D1").unwrap();
        assert_eq!(relevant_edges(net, o1, d1, &net.all_edges()).len(), 4);

        // ring a-b-c-d-a with a dangling edge c-x
        let net = Network::new(
            ["a", "b", "c", "d", "x"],
            [
                ("ab", "a", "b"),
                ("bc", "b", "c"),
                ("cd", "c", "d"),
                ("da", "d", "a"),
                ("cx", "c", "x"),
            ],
        )
        .unwrap();
        let rel = relevant_edges(&net, 0, 2, &net.all_edges());
        assert!(!rel.contains(&net.edge_index("cx").unwrap()));
        assert_eq!(rel.len(), 4);
    }

    #[test]
    fn from_walk_orders_edges() {
        let net = wheatstone();
        let p = Path::from_walk(&net, net.node_index("O").unwrap(), &["2D", "12", "O1"]).unwrap();
        assert_eq!(p.ids(&net), vec!["O1", "12", "2D"]);
        assert!(Path::from_walk(&net, 0, &["O1", "2D"]).is_err());
    }
}
