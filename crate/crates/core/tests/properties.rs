use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;

use ibp_core::equilibrium::{beckmann_potential, solve_icue, SolverOptions};
use ibp_core::format::{document_to_string, parse_document};
use ibp_core::game::{edge_loads, social_cost, CostFunction, EdgeSet, Game, Network, Outcome};
use ibp_core::paradox::ParadoxKind;
use ibp_core::pathsets::{enumerate_paths, relevant_edges, DEFAULT_PATH_CAP};
use ibp_core::search::{sample_instance, sample_rng, FamilyKind, FamilySpec};
use ibp_core::topology;

fn network(n: usize, pairs: &[(usize, usize)]) -> Network {
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let edges: Vec<(String, String, String)> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| (format!("e{i:02}"), nodes[a].clone(), nodes[b].clone()))
        .collect();
    Network::new(nodes, edges).unwrap()
}

prop_compose! {
    fn graph()(n in 2usize..=7)
        (pairs in prop::collection::vec((0..n, 1..n), 1..=10), n in Just(n))
        -> (usize, Vec<(usize, usize)>) {
        (n, pairs.into_iter().map(|(a, s)| (a, (a + s) % n)).collect())
    }
}

/// Independent path oracle: every ordering of distinct intermediate nodes,
/// with every choice of parallel edge between consecutive nodes.
fn oracle_paths(net: &Network, o: usize, d: usize, allowed: &EdgeSet) -> BTreeSet<Vec<usize>> {
    let n = net.node_count();
    let between = |a: usize, b: usize| -> Vec<usize> {
        (0..net.edge_count())
            .filter(|e| allowed.contains(e))
            .filter(|&e| {
                let (x, y) = net.endpoints(e);
                (x == a && y == b) || (x == b && y == a)
            })
            .collect()
    };
    let inner: Vec<usize> = (0..n).filter(|&v| v != o && v != d).collect();
    let mut out = BTreeSet::new();
    let mut seqs: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier = seqs.clone();
    for _ in 0..inner.len() {
        let mut next = Vec::new();
        for s in &frontier {
            for &v in &inner {
                if !s.contains(&v) {
                    let mut t = s.clone();
                    t.push(v);
                    next.push(t);
                }
            }
        }
        seqs.extend(next.iter().cloned());
        frontier = next;
    }
    for s in seqs {
        let mut walk = vec![o];
        walk.extend(s);
        walk.push(d);
        let mut partial: Vec<Vec<usize>> = vec![vec![]];
        for w in walk.windows(2) {
            let options = between(w[0], w[1]);
            partial = partial
                .iter()
                .flat_map(|p| {
                    options.iter().map(move |&e| {
                        let mut q = p.clone();
                        q.push(e);
                        q
                    })
                })
                .collect();
        }
        out.extend(partial);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_oracle((n, pairs) in graph(), od in (0usize..7, 1usize..7), mask in any::<u16>()) {
        let net = network(n, &pairs);
        let (o, d) = (od.0 % n, (od.0 + od.1) % n);
        prop_assume!(o != d);
        let allowed: EdgeSet = (0..net.edge_count()).filter(|e| mask & (1 << e) != 0).collect();
        let paths = enumerate_paths(&net, o, d, &allowed, DEFAULT_PATH_CAP).unwrap();
        let got: BTreeSet<Vec<usize>> = paths.iter().map(|p| p.edges().to_vec()).collect();
        prop_assert_eq!(got.len(), paths.len());
        prop_assert_eq!(got, oracle_paths(&net, o, d, &allowed));
    }

    #[test]
    fn relevance_is_union_of_paths((n, pairs) in graph(), od in (0usize..7, 1usize..7)) {
        let net = network(n, &pairs);
        let (o, d) = (od.0 % n, (od.0 + od.1) % n);
        let all = net.all_edges();
        let union: EdgeSet = enumerate_paths(&net, o, d, &all, DEFAULT_PATH_CAP)
            .unwrap()
            .iter()
            .flat_map(|p| p.edges().to_vec())
            .collect();
        prop_assert_eq!(relevant_edges(&net, o, d, &all), union);
    }

    #[test]
    fn restricting_edges_keeps_exactly_the_contained_paths(
        (n, pairs) in graph(), od in (0usize..7, 1usize..7), mask in any::<u16>()
    ) {
        let net = network(n, &pairs);
        let (o, d) = (od.0 % n, (od.0 + od.1) % n);
        let all = net.all_edges();
        let sub: EdgeSet = all.iter().copied().filter(|e| mask & (1 << e) != 0).collect();
        let full = enumerate_paths(&net, o, d, &all, DEFAULT_PATH_CAP).unwrap();
        let restricted = enumerate_paths(&net, o, d, &sub, DEFAULT_PATH_CAP).unwrap();
        let expected: Vec<_> = full
            .into_iter()
            .filter(|p| p.edges().iter().all(|e| sub.contains(e)))
            .collect();
        prop_assert_eq!(restricted, expected);
    }

    #[test]
    fn graph_cycles_satisfy_circuit_axioms((n, pairs) in graph()) {
        let net = network(n, &pairs);
        let system = topology::graph_circuits(&net, &net.all_edges()).unwrap();
        for c in &system.members {
            prop_assert!(topology::is_cycle(&net, c));
        }
        prop_assert!(topology::check_circuit_axioms(&system).is_ok());
    }

    #[test]
    fn linear_independence_implies_series_linear_independence(
        (n, pairs) in graph(), od in (0usize..7, 1usize..7)
    ) {
        let net = network(n, &pairs);
        let (o, d) = (od.0 % n, (od.0 + od.1) % n);
        prop_assume!(o != d);
        let li = topology::is_li(&net, o, d).unwrap();
        let sli = topology::is_sli(&net, o, d).unwrap();
        prop_assert!(!li.is_li || sli.is_sli);
    }

    #[test]
    fn nonnegative_polynomials_are_monotone(
        coeffs in prop::collection::vec(0.0f64..3.0, 1..5), x in 0.0f64..5.0, dx in 0.0f64..5.0
    ) {
        let c = CostFunction::Polynomial { coefficients: coeffs.clone() };
        prop_assert!(c.value(x) <= c.value(x + dx));
        // integral against the closed form
        let closed: f64 = coeffs.iter().enumerate().map(|(j, a)| a * x.powi(j as i32 + 1) / (j as f64 + 1.0)).sum();
        prop_assert!((c.integral(x) - closed).abs() <= 1e-9 * (1.0 + closed));
    }

    #[test]
    fn loads_add_up_path_flows(seed in any::<u64>()) {
        let inst = sample_instance(&FamilySpec::new(FamilyKind::Small), ParadoxKind::Ibp, seed, 0);
        let game = Game::new(inst.spec).unwrap();
        let mut rng = sample_rng(seed, 1);
        let outcome = random_outcome(&game, &mut rng);
        let loads = edge_loads(&game, &outcome).unwrap();
        for e in 0..game.network().edge_count() {
            let mut expect = 0.0;
            for flows in outcome.flows.values() {
                for (p, f) in flows {
                    if p.edges().contains(&e) {
                        expect += f;
                    }
                }
            }
            prop_assert!((loads.get(e) - expect).abs() <= 1e-12);
        }
        for t in game.types() {
            prop_assert!((outcome.type_total(t.key) - t.demand).abs() <= 1e-12);
        }
    }

    #[test]
    fn equilibrium_minimizes_potential_and_sums_social_cost(seed in any::<u64>()) {
        let inst = sample_instance(&FamilySpec::new(FamilyKind::Small), ParadoxKind::Ibp, seed, 0);
        let game = Game::new(inst.spec).unwrap();
        let r = solve_icue(&game, &SolverOptions::default()).unwrap();
        prop_assert!(r.converged);
        let spec = game.spec();
        let sum: f64 = (0..game.network().edge_count())
            .map(|e| spec.costs[e].value(r.loads.get(e)) * r.loads.get(e))
            .sum();
        prop_assert!((r.social_cost - sum).abs() <= 1e-9 * (1.0 + sum));
        prop_assert!((social_cost(&game, &r.outcome).unwrap() - r.social_cost).abs() <= 1e-12 * (1.0 + sum));
        let mut rng = sample_rng(seed, 2);
        for _ in 0..5 {
            let other = random_outcome(&game, &mut rng);
            let phi = beckmann_potential(&game, &other).unwrap();
            prop_assert!(r.potential <= phi + 1e-7 * (1.0 + phi.abs()));
        }
    }
}

fn random_outcome(game: &Game, rng: &mut impl Rng) -> Outcome {
    let mut outcome = Outcome::new();
    for t in game.types() {
        let paths = &game.strategies(t.key).unwrap().paths;
        let w: Vec<f64> = paths.iter().map(|_| rng.gen::<f64>() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        for (p, wi) in paths.iter().zip(&w) {
            outcome.set(t.key, p.clone(), t.demand * wi / total);
        }
    }
    outcome
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn documents_round_trip(seed in any::<u64>(), family in 0usize..5) {
        let inst = sample_instance(&FamilySpec::new(FamilyKind::ALL[family]), ParadoxKind::Ibp, seed, 0);
        let doc = inst.document();
        let text = document_to_string(&doc);
        let back = parse_document(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        let loaded = back.to_game().unwrap();
        prop_assert_eq!(loaded.spec, inst.spec);
        prop_assert_eq!(loaded.expansion, inst.expansion);
    }
}
