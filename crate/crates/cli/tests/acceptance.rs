//! Acceptance gate. Runs every criterion, prints one line per criterion and
//! exits nonzero if any failed.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use ibp_core::equilibrium::{brute_force_icue, solve_icue, SolverOptions, BRUTE_FORCE_PATH_LIMIT};
use ibp_core::game::{Game, GameSpec, Network};
use ibp_core::paradox::{self, check_not_all_worse, Confidence, ParadoxKind};
use ibp_core::scenarios::{self, ScenarioId};
use ibp_core::search::{sample_instance, search_paradox, FamilyKind, FamilySpec};
use ibp_core::topology;

const SEED: u64 = 20_240_611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ibp(args: &[&str]) -> (i32, String, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_ibp"))
        .args(args)
        .output()
        .expect("run ibp binary");
    let elapsed = start.elapsed();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        elapsed,
    )
}

fn fields(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn number(f: &BTreeMap<String, String>, key: &str) -> f64 {
    f.get(key).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn braess_golden() -> Outcome {
    let (code, out, t) = ibp(&["scenario", "wheatstone_bp", "--run"]);
    let f = fields(&out);
    let before = number(&f, "social_cost_before");
    let after = number(&f, "social_cost_after");
    let pass = close(before, 1.5, 1e-6)
        && close(after, 2.0, 1e-6)
        && f.get("occurred").map(String::as_str) == Some("true")
        && code == 2
        && t < Duration::from_secs(1);
    outcome(pass, format!("SC {before} -> {after}, exit {code}, {t:.2?}"))
}

fn ibpsc_golden() -> Outcome {
    let (code, out, t) = ibp(&["scenario", "pigou_ibpsc", "--run"]);
    let f = fields(&out);
    let before = number(&f, "social_cost_before");
    let after = number(&f, "social_cost_after");
    let own_before = number(&f, "target_cost_before");
    let own_after = number(&f, "target_cost_after");
    let pass = close(before, 3.0, 1e-6)
        && close(after, 4.0, 1e-6)
        && f.get("ibpsc_occurred").map(String::as_str) == Some("true")
        && f.get("ibp_occurred").map(String::as_str) == Some("false")
        && own_after <= own_before + 1e-6
        && code == 2
        && t < Duration::from_secs(1);
    outcome(
        pass,
        format!("SC {before} -> {after}, own cost {own_before} -> {own_after}, exit {code}, {t:.2?}"),
    )
}

/// Criteria 3 and 4 share the same 1000 instances; each expansion is solved
/// once and both checks read the same equilibrium pair.
fn circuit_suites() -> (Outcome, Outcome) {
    let start = Instant::now();
    let family = FamilySpec::new(FamilyKind::Circuit);
    let opts = SolverOptions::default();
    let mut certified_ibp = 0;
    let mut dependent_ibp = 0;
    let mut not_all_worse_fail = 0;
    let mut errors = Vec::new();
    for i in 0..1000 {
        let inst = sample_instance(&family, ParadoxKind::Ibp, SEED, i);
        let exp = inst.expansion.as_ref().expect("circuit samples carry an expansion");
        match check_not_all_worse(&inst.spec, exp, &opts) {
            Ok(r) => {
                if r.verdict.occurred {
                    match r.verdict.confidence {
                        Confidence::Certified => certified_ibp += 1,
                        Confidence::WitnessDependent => dependent_ibp += 1,
                    }
                }
                if !r.holds {
                    not_all_worse_fail += 1;
                }
            }
            Err(e) => errors.push(format!("sample {i}: {e}")),
        }
    }
    let t = start.elapsed();
    let in_time = t < Duration::from_secs(300);
    let first_error = errors.first().cloned().unwrap_or_default();
    let c3 = outcome(
        certified_ibp == 0 && errors.is_empty() && in_time,
        format!(
            "1000 circuit games: {certified_ibp} certified IBP, {dependent_ibp} witness-dependent, {} errors {first_error}, {t:.2?}",
            errors.len()
        ),
    );
    let c4 = outcome(
        not_all_worse_fail == 0 && errors.is_empty(),
        format!("1000 circuit games: not-all-worse failed {not_all_worse_fail} times"),
    );
    (c3, c4)
}

fn sli_consistency() -> Outcome {
    let family = FamilySpec::new(FamilyKind::Sli);
    let opts = SolverOptions::default();
    let mut occurrences = 0;
    let mut errors = Vec::new();
    for i in 0..200 {
        let inst = sample_instance(&family, ParadoxKind::Ibp, SEED, i);
        let exp = inst.expansion.as_ref().expect("chain samples carry an expansion");
        match paradox::detect_ibp(&inst.spec, exp, &opts) {
            Ok(v) if v.occurred => occurrences += 1,
            Ok(_) => {}
            Err(e) => errors.push(format!("sample {i}: {e}")),
        }
    }
    let w = scenarios::builtin(ScenarioId::WheatstoneIbp).spec;
    let p = &w.populations[0];
    let wheatstone_sli = topology::is_sli(&w.network, p.origin, p.destination)
        .map(|r| r.is_sli)
        .unwrap_or(true);
    let search = search_paradox(
        &FamilySpec::new(FamilyKind::Wheatstone),
        ParadoxKind::Ibp,
        500,
        SEED,
        &opts,
        4,
    );
    let first = search.witnesses.first().map(|w| w.record.sample);
    outcome(
        occurrences == 0 && errors.is_empty() && !wheatstone_sli && first.is_some(),
        format!(
            "200 chains: {occurrences} IBP, {} errors; wheatstone sli={wheatstone_sli}; search: {} witnesses, first at sample {first:?}",
            errors.len(),
            search.witnesses.len()
        ),
    )
}

fn max_load_difference(spec: &GameSpec, opts: &SolverOptions) -> Result<f64, String> {
    let game = Game::new(spec.clone()).map_err(|e| e.to_string())?;
    let a = solve_icue(&game, opts).map_err(|e| e.to_string())?;
    let b = brute_force_icue(&game, opts).map_err(|e| e.to_string())?;
    Ok((0..game.network().edge_count())
        .map(|e| (a.loads.get(e) - b.loads.get(e)).abs())
        .fold(0.0, f64::max))
}

fn oracle_equivalence() -> Outcome {
    let opts = SolverOptions::default();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut builtin_games = Vec::new();
    for id in ScenarioId::ALL {
        let sc = scenarios::builtin(id);
        if let Some(exp) = &sc.expansion {
            let expanded = paradox::expand_information(&sc.spec, exp).expect("builtin expansion");
            builtin_games.push((format!("{id} expanded"), expanded.spec));
        }
        if let Some(costs) = &sc.modified_costs {
            let mut m = sc.spec.clone();
            m.costs = costs.clone();
            builtin_games.push((format!("{id} modified"), m));
        }
        builtin_games.push((id.to_string(), sc.spec));
    }
    for (name, spec) in builtin_games {
        let paths = Game::new(spec.clone()).map(|g| g.total_paths()).unwrap_or(usize::MAX);
        if paths > BRUTE_FORCE_PATH_LIMIT {
            failures.push(format!("{name}: {paths} paths exceeds the oracle limit"));
            continue;
        }
        match max_load_difference(&spec, &opts) {
            Ok(d) => {
                worst = worst.max(d);
                checked += 1;
                if d > 1e-3 {
                    failures.push(format!("{name}: {d}"));
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let family = FamilySpec::new(FamilyKind::Small);
    for i in 0..200 {
        let inst = sample_instance(&family, ParadoxKind::Ibp, SEED, i);
        match max_load_difference(&inst.spec, &opts) {
            Ok(d) => {
                worst = worst.max(d);
                checked += 1;
                if d > 1e-3 {
                    failures.push(format!("random {i}: {d}"));
                }
            }
            Err(e) => failures.push(format!("random {i}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checked} games, max load difference {worst:.3e}; {}",
            if failures.is_empty() {
                "no failures".to_string()
            } else {
                failures.join("; ")
            }
        ),
    )
}

fn classifier_goldens() -> Outcome {
    let mut wrong = Vec::new();
    let mut expect = |name: &str, got: bool, want: bool| {
        if got != want {
            wrong.push(format!("{name}={got}"));
        }
    };
    let w = scenarios::builtin(ScenarioId::WheatstoneBp).spec;
    let (o, d) = (w.populations[0].origin, w.populations[0].destination);
    expect("wheatstone li", topology::is_li(&w.network, o, d).unwrap().is_li, false);
    expect("wheatstone sli", topology::is_sli(&w.network, o, d).unwrap().is_sli, false);

    let p = scenarios::builtin(ScenarioId::PigouIbpsc).spec;
    let (o, d) = (p.populations[0].origin, p.populations[0].destination);
    expect("pigou simple", topology::is_simple(&p.network), false);
    expect("pigou embedding", topology::has_pigou_embedding(&p.network, o, d), true);

    let r = scenarios::builtin(ScenarioId::TwoPopRing).spec;
    expect("ring4 ring", topology::is_ring(&r.network), true);
    expect("ring4 circuit game", topology::is_circuit_game(&r).is_circuit_game, true);

    let tree = Network::new(
        ["a", "b", "c", "d", "e"],
        [("ab", "a", "b"), ("bc", "b", "c"), ("bd", "b", "d"), ("de", "d", "e")],
    )
    .unwrap();
    let (a, e) = (tree.node_index("a").unwrap(), tree.node_index("e").unwrap());
    expect("tree is tree", topology::is_tree(&tree), true);
    expect("tree embedding", topology::has_pigou_embedding(&tree, a, e), false);

    let pass = wrong.is_empty();
    outcome(pass, if pass { "all goldens match".into() } else { wrong.join(", ") })
}

fn determinism() -> Outcome {
    let args = [
        "search", "--family", "wheatstone", "--kind", "ibp", "--seed", "7", "--budget", "60", "--threads", "4",
    ];
    let (c1, first, _) = ibp(&args);
    let (c2, second, _) = ibp(&args);
    let mut one_thread = args.to_vec();
    *one_thread.last_mut().unwrap() = "1";
    let (_, serial, _) = ibp(&one_thread);
    let rows = first.lines().count();
    outcome(
        first == second && c1 == c2 && rows == 61,
        format!(
            "{rows} CSV lines, repeat identical: {}, 1-thread identical: {}",
            first == second,
            first == serial
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, Outcome)> = vec![(1, braess_golden()), (2, ibpsc_golden())];
    let (c3, c4) = circuit_suites();
    results.push((3, c3));
    results.push((4, c4));
    results.push((5, sli_consistency()));
    results.push((6, oracle_equivalence()));
    results.push((7, classifier_goldens()));
    results.push((8, determinism()));
    let mut failed = 0;
    for (n, o) in &results {
        let mark = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n}: {mark} ({})", o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
