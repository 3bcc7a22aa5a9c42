//! Information-constrained user equilibrium: gap certificates, the Beckmann
//! potential, a descent solver and a brute-force grid oracle.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::game::{
    self, CostFunction, EdgeIx, Game, GameError, LoadVector, Outcome, TypeCost, TypeKey,
    DEFAULT_BIG_M,
};
use crate::pathsets::DEFAULT_PATH_CAP;

/// Largest total strategy count the brute-force oracle accepts.
pub const BRUTE_FORCE_PATH_LIMIT: usize = 12;

/// Upper bound on grid points the oracle evaluates before local refinement.
const GRID_POINT_BUDGET: u128 = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("brute-force oracle limited to {limit} strategies in total, game has {paths}")]
    TooManyPaths { paths: usize, limit: usize },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Exact line search along the all-or-nothing direction, followed by a
    /// pairwise equilibration sweep per type.
    LineSearch,
    /// Plain conditional gradient with step `2/(k+2)`. Converges at rate
    /// O(1/k) and is not monotone in the potential.
    Harmonic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Relative gap tolerance: `gap / (1 + min strategy cost)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Overrides the value of every big-M edge when set.
    pub big_m: Option<f64>,
    /// Points per unit demand along each axis of the oracle grid.
    pub grid_resolution: usize,
    pub seed: u64,
    pub path_cap: usize,
    pub step_rule: StepRule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-8,
            max_iterations: 10_000,
            big_m: None,
            grid_resolution: 20,
            seed: 0,
            path_cap: DEFAULT_PATH_CAP,
            step_rule: StepRule::LineSearch,
        }
    }
}

impl SolverOptions {
    pub fn check(&self) -> Result<(), EquilibriumError> {
        if !(self.tolerance > 0.0) {
            return Err(EquilibriumError::InvalidOptions(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(EquilibriumError::InvalidOptions(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.grid_resolution == 0 {
            return Err(EquilibriumError::InvalidOptions(
                "grid resolution must be at least 1".into(),
            ));
        }
        if let Some(m) = self.big_m {
            if !m.is_finite() || m < 0.0 {
                return Err(EquilibriumError::InvalidOptions(format!(
                    "big-M must be finite and nonnegative, got {m}"
                )));
            }
        }
        Ok(())
    }

    pub fn big_m_value(&self) -> f64 {
        self.big_m.unwrap_or(DEFAULT_BIG_M)
    }

    /// Builds the game these options solve: big-M override applied, strategy
    /// sets enumerated under the configured cap.
    pub fn build_game(&self, spec: game::GameSpec) -> Result<Game, GameError> {
        let spec = match self.big_m {
            Some(m) => spec.with_big_m(m),
            None => spec,
        };
        Game::with_cap(spec, self.path_cap)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Gap {
    pub absolute: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GapReport {
    pub per_type: BTreeMap<TypeKey, Gap>,
    pub max_absolute: f64,
    pub max_relative: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumResult {
    pub outcome: Outcome,
    pub loads: LoadVector,
    pub type_costs: BTreeMap<TypeKey, TypeCost>,
    pub gaps: GapReport,
    pub iterations: usize,
    pub converged: bool,
    pub social_cost: f64,
    pub potential: f64,
    /// False when equilibrium loads (and hence the selected equilibrium) may
    /// not be unique.
    pub loads_unique: bool,
    /// Potential after each iterate, starting with the initial point.
    pub potential_trace: Vec<f64>,
}

impl EquilibriumResult {
    pub fn type_cost(&self, key: TypeKey) -> Option<f64> {
        self.type_costs.get(&key).map(|c| c.value)
    }
}

/// Per-type flows aligned with the game's strategy sets.
type Flows = Vec<Vec<f64>>;

fn flows_from_outcome(game: &Game, outcome: &Outcome) -> Result<Flows, GameError> {
    // edge_loads validates every strategy against its type's set
    game::edge_loads(game, outcome)?;
    Ok(game
        .strategy_sets()
        .iter()
        .map(|set| set.paths.iter().map(|p| outcome.flow(set.key, p)).collect())
        .collect())
}

fn outcome_from_flows(game: &Game, x: &Flows) -> Outcome {
    let mut out = Outcome::new();
    for (set, flows) in game.strategy_sets().iter().zip(x) {
        for (p, &f) in set.paths.iter().zip(flows) {
            if f > 0.0 {
                out.set(set.key, p.clone(), f);
            }
        }
    }
    out
}

fn loads_of(game: &Game, x: &Flows) -> Vec<f64> {
    let mut loads = vec![0.0; game.network().edge_count()];
    for (set, flows) in game.strategy_sets().iter().zip(x) {
        for (p, &f) in set.paths.iter().zip(flows) {
            if f != 0.0 {
                for &e in p.edges() {
                    loads[e] += f;
                }
            }
        }
    }
    loads
}

fn potential_of(costs: &[CostFunction], loads: &[f64]) -> f64 {
    costs.iter().zip(loads).map(|(c, &f)| c.integral(f)).sum()
}

fn path_costs(game: &Game, ix: usize, loads: &[f64]) -> Vec<f64> {
    let costs = &game.spec().costs;
    game.strategy_sets()[ix]
        .paths
        .iter()
        .map(|p| p.edges().iter().map(|&e| costs[e].value(loads[e])).sum())
        .collect()
}

/// Index of the cheapest strategy; ties go to the lexicographically first path.
fn cheapest(costs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &c) in costs.iter().enumerate() {
        if best.is_none_or(|b| c < costs[b]) {
            best = Some(i);
        }
    }
    best
}

fn gap_of(flows: &[f64], costs: &[f64], demand: f64) -> Gap {
    let Some(j) = cheapest(costs) else {
        return Gap::default();
    };
    if demand <= 0.0 {
        return Gap::default();
    }
    let min = costs[j];
    let max_used = flows
        .iter()
        .zip(costs)
        .filter(|(f, _)| **f > 0.0)
        .map(|(_, c)| *c)
        .fold(min, f64::max);
    let absolute = (max_used - min).max(0.0);
    Gap {
        absolute,
        relative: absolute / (1.0 + min.abs()),
    }
}

fn gaps_of(game: &Game, x: &Flows, loads: &[f64]) -> GapReport {
    let mut report = GapReport::default();
    for (ix, t) in game.types().iter().enumerate() {
        let g = gap_of(&x[ix], &path_costs(game, ix, loads), t.demand);
        report.max_absolute = report.max_absolute.max(g.absolute);
        report.max_relative = report.max_relative.max(g.relative);
        report.per_type.insert(t.key, g);
    }
    report
}

/// Per-type equilibrium gap: the largest excess of a used strategy's cost over
/// the cheapest strategy available to the type, with its relative form
/// `gap / (1 + min cost)`. All gaps at zero certify an equilibrium.
pub fn equilibrium_gap(game: &Game, outcome: &Outcome) -> Result<GapReport, GameError> {
    outcome.check_feasible(game)?;
    let x = flows_from_outcome(game, outcome)?;
    let loads = loads_of(game, &x);
    Ok(gaps_of(game, &x, &loads))
}

/// `Σ_e ∫₀^{f_e} c_e(t) dt` at the loads induced by `outcome`.
pub fn beckmann_potential(game: &Game, outcome: &Outcome) -> Result<f64, GameError> {
    let loads = game::edge_loads(game, outcome)?;
    Ok(potential_of(&game.spec().costs, loads.as_slice()))
}

fn all_or_nothing(game: &Game, loads: &[f64]) -> Flows {
    game.types()
        .iter()
        .enumerate()
        .map(|(ix, t)| {
            let costs = path_costs(game, ix, loads);
            let mut y = vec![0.0; costs.len()];
            if t.demand > 0.0 {
                if let Some(j) = cheapest(&costs) {
                    y[j] = t.demand;
                }
            }
            y
        })
        .collect()
}

/// Minimises the potential along `loads + λ·dir`, λ ∈ [0, 1], by bisection
/// on its derivative (nondecreasing in λ).
fn line_search(costs: &[CostFunction], loads: &[f64], dir: &[f64]) -> f64 {
    let slope = |lambda: f64| -> f64 {
        costs
            .iter()
            .zip(loads.iter().zip(dir))
            .filter(|(_, (_, d))| **d != 0.0)
            .map(|(c, (&f, &d))| c.value(f + lambda * d) * d)
            .sum()
    };
    if slope(0.0) >= 0.0 {
        return 0.0;
    }
    if slope(1.0) <= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Moves flow from each type's costliest used strategy to its cheapest one
/// until their costs meet, repeatedly. Each move minimises the potential
/// along its transfer direction, so the potential never rises.
fn equilibrate(game: &Game, x: &mut Flows, loads: &mut [f64]) {
    let costs = &game.spec().costs;
    for (ix, t) in game.types().iter().enumerate() {
        let n = x[ix].len();
        if n < 2 || t.demand <= 0.0 {
            continue;
        }
        for _ in 0..(4 * n) {
            let pc = path_costs(game, ix, loads);
            let j = cheapest(&pc).expect("nonempty strategy set");
            let Some(i) = (0..n)
                .filter(|&i| x[ix][i] > 0.0 && i != j)
                .max_by(|&a, &b| pc[a].total_cmp(&pc[b]))
            else {
                break;
            };
            if pc[i] <= pc[j] {
                break;
            }
            let paths = &game.strategy_sets()[ix].paths;
            let from = paths[i].edge_set();
            let to = paths[j].edge_set();
            let gain: Vec<EdgeIx> = to.difference(&from).copied().collect();
            let lose: Vec<EdgeIx> = from.difference(&to).copied().collect();
            let g = |d: f64| -> f64 {
                gain.iter().map(|&e| costs[e].value(loads[e] + d)).sum::<f64>()
                    - lose.iter().map(|&e| costs[e].value(loads[e] - d)).sum::<f64>()
            };
            let avail = x[ix][i];
            let delta = if g(avail) <= 0.0 {
                avail
            } else {
                let (mut lo, mut hi) = (0.0, avail);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(mid) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            if delta <= 0.0 {
                break;
            }
            x[ix][i] = if delta == avail { 0.0 } else { avail - delta };
            x[ix][j] += delta;
            for &e in &gain {
                loads[e] += delta;
            }
            for &e in &lose {
                loads[e] = (loads[e] - delta).max(0.0);
            }
        }
    }
}

fn potential_slack(phi: f64) -> f64 {
    1e-12 * phi.abs().max(1.0)
}

fn build_result(game: &Game, x: &Flows, iterations: usize, converged: bool, trace: Vec<f64>) -> EquilibriumResult {
    let outcome = outcome_from_flows(game, x);
    let loads = LoadVector(loads_of(game, x));
    let gaps = gaps_of(game, x, loads.as_slice());
    let type_costs = game
        .types()
        .iter()
        .enumerate()
        .map(|(ix, t)| (t.key, game::type_cost_at(game, ix, &outcome, &loads)))
        .collect();
    let social_cost = game::social_cost_at(game, &outcome, &loads);
    let potential = potential_of(&game.spec().costs, loads.as_slice());
    EquilibriumResult {
        outcome,
        loads,
        type_costs,
        gaps,
        iterations,
        converged,
        social_cost,
        potential,
        loads_unique: game.loads_unique(),
        potential_trace: trace,
    }
}

fn with_options(game: &Game, options: &SolverOptions) -> Option<Game> {
    let m = options.big_m?;
    let differs = game
        .spec()
        .costs
        .iter()
        .any(|c| matches!(c, CostFunction::BigM { value } if *value != m));
    differs.then(|| game.with_big_m(m))
}

/// Solves for an equilibrium by potential descent. Each iteration blends the
/// current flows towards the all-or-nothing assignment at current costs (ties
/// to the lexicographically first path), then equilibrates each type
/// pairwise. Stops once every type's relative gap is within tolerance; an
/// unconverged run returns its best iterate with `converged = false`.
pub fn solve_icue(game: &Game, options: &SolverOptions) -> Result<EquilibriumResult, EquilibriumError> {
    options.check()?;
    if let Some(g) = with_options(game, options) {
        return solve_icue(&g, options);
    }
    let costs = &game.spec().costs;
    let mut x = all_or_nothing(game, &vec![0.0; game.network().edge_count()]);
    let mut loads = loads_of(game, &x);
    let mut phi = potential_of(costs, &loads);
    let mut trace = vec![phi];
    let mut best = (gaps_of(game, &x, &loads).max_relative, x.clone(), 0usize);
    let mut iterations = 0;

    while iterations < options.max_iterations {
        let gap = gaps_of(game, &x, &loads).max_relative;
        if gap < best.0 {
            best = (gap, x.clone(), iterations);
        }
        if gap <= options.tolerance {
            return Ok(build_result(game, &x, iterations, true, trace));
        }
        iterations += 1;
        let y = all_or_nothing(game, &loads);
        let target = loads_of(game, &y);
        let dir: Vec<f64> = target.iter().zip(&loads).map(|(g, f)| g - f).collect();
        let lambda = match options.step_rule {
            StepRule::Harmonic => 2.0 / (iterations as f64 + 2.0),
            StepRule::LineSearch => line_search(costs, &loads, &dir),
        };
        let mut next: Flows = x
            .iter()
            .zip(&y)
            .map(|(xs, ys)| {
                xs.iter()
                    .zip(ys)
                    .map(|(a, b)| if lambda == 1.0 { *b } else { (1.0 - lambda) * a + lambda * b })
                    .collect()
            })
            .collect();
        let mut next_loads = loads_of(game, &next);
        if options.step_rule == StepRule::LineSearch {
            if potential_of(costs, &next_loads) > phi + potential_slack(phi) {
                next = x.clone();
                next_loads = loads.clone();
            }
            let (before_x, before_loads) = (next.clone(), next_loads.clone());
            let before_phi = potential_of(costs, &next_loads);
            equilibrate(game, &mut next, &mut next_loads);
            next_loads = loads_of(game, &next);
            if potential_of(costs, &next_loads) > before_phi + potential_slack(before_phi) {
                next = before_x;
                next_loads = before_loads;
            }
        }
        x = next;
        loads = next_loads;
        phi = potential_of(costs, &loads);
        trace.push(phi);
    }

    let gap = gaps_of(game, &x, &loads).max_relative;
    if gap <= options.tolerance {
        return Ok(build_result(game, &x, iterations, true, trace));
    }
    if gap < best.0 {
        best = (gap, x, iterations);
    }
    let _ = best.2;
    Ok(build_result(game, &best.1, iterations, false, trace))
}

fn simplex_points(n: usize, r: usize) -> u128 {
    // C(r + n - 1, n - 1)
    let mut acc: u128 = 1;
    for i in 1..n as u128 {
        acc = acc * (r as u128 + i) / i;
    }
    acc
}

fn compositions(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n - 1, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, r, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

/// Independent oracle: exhaustive grid over the product of the per-type flow
/// simplices, then pairwise-transfer pattern search from the best grid point,
/// minimising the potential. The grid is coarsened as needed to keep the
/// point count bounded.
pub fn brute_force_icue(game: &Game, options: &SolverOptions) -> Result<EquilibriumResult, EquilibriumError> {
    options.check()?;
    if let Some(g) = with_options(game, options) {
        return brute_force_icue(&g, options);
    }
    let paths = game.total_paths();
    if paths > BRUTE_FORCE_PATH_LIMIT {
        return Err(EquilibriumError::TooManyPaths {
            paths,
            limit: BRUTE_FORCE_PATH_LIMIT,
        });
    }
    let costs = &game.spec().costs;
    let types = game.types();
    let sizes: Vec<usize> = game.strategy_sets().iter().map(|s| s.len()).collect();
    let free: Vec<usize> = (0..types.len())
        .filter(|&ix| types[ix].demand > 0.0 && sizes[ix] >= 2)
        .collect();

    let mut x: Flows = sizes.iter().map(|&n| vec![0.0; n]).collect();
    for (ix, t) in types.iter().enumerate() {
        if t.demand > 0.0 && sizes[ix] >= 1 {
            x[ix][0] = t.demand;
        }
    }

    let mut r = options.grid_resolution;
    while r > 1 && free.iter().map(|&ix| simplex_points(sizes[ix], r)).product::<u128>() > GRID_POINT_BUDGET {
        r -= 1;
    }
    let grids: Vec<Vec<Vec<usize>>> = free.iter().map(|&ix| compositions(sizes[ix], r)).collect();
    let mut best_phi = f64::INFINITY;
    let mut best_x = x.clone();
    let mut counter = vec![0usize; free.len()];
    loop {
        for (slot, &ix) in free.iter().enumerate() {
            let point = &grids[slot][counter[slot]];
            for (k, &units) in point.iter().enumerate() {
                x[ix][k] = types[ix].demand * units as f64 / r as f64;
            }
        }
        let phi = potential_of(costs, &loads_of(game, &x));
        if phi < best_phi {
            best_phi = phi;
            best_x = x.clone();
        }
        // odometer increment
        let mut slot = 0;
        while slot < free.len() {
            counter[slot] += 1;
            if counter[slot] < grids[slot].len() {
                break;
            }
            counter[slot] = 0;
            slot += 1;
        }
        if slot == free.len() {
            break;
        }
    }

    let mut x = best_x;
    let mut phi = best_phi;
    let mut trace = vec![phi];
    let mut step = 1.0 / r as f64;
    let mut evaluations = 0usize;
    while step > 1e-13 && evaluations < 2_000_000 {
        let mut improved = false;
        for &ix in &free {
            let d = types[ix].demand;
            for i in 0..sizes[ix] {
                for j in 0..sizes[ix] {
                    if i == j || x[ix][i] <= 0.0 {
                        continue;
                    }
                    let amount = (step * d).min(x[ix][i]);
                    let (old_i, old_j) = (x[ix][i], x[ix][j]);
                    x[ix][i] = if amount == old_i { 0.0 } else { old_i - amount };
                    x[ix][j] = old_j + amount;
                    let candidate = potential_of(costs, &loads_of(game, &x));
                    evaluations += 1;
                    if candidate < phi {
                        phi = candidate;
                        improved = true;
                    } else {
                        x[ix][i] = old_i;
                        x[ix][j] = old_j;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
        trace.push(phi);
    }
    let iterations = trace.len() - 1;
    let loads = loads_of(game, &x);
    let converged = gaps_of(game, &x, &loads).max_relative <= options.tolerance;
    Ok(build_result(game, &x, iterations, converged, trace))
}

/// Simultaneous improvement dynamics: each round every type moves `shift` of
/// the flow on its costliest used strategy to its cheapest strategy, all
/// evaluated at the round's starting loads. Returns `rounds + 1` outcomes,
/// the start first.
pub fn best_response_trace(
    game: &Game,
    start: &Outcome,
    rounds: usize,
    shift: f64,
) -> Result<Vec<Outcome>, GameError> {
    start.check_feasible(game)?;
    let mut x = flows_from_outcome(game, start)?;
    let shift = shift.clamp(0.0, 1.0);
    let mut trace = Vec::with_capacity(rounds + 1);
    trace.push(start.clone());
    for _ in 0..rounds {
        let loads = loads_of(game, &x);
        let moves: Vec<Option<(usize, usize, usize, f64)>> = (0..x.len())
            .map(|ix| {
                let pc = path_costs(game, ix, &loads);
                let j = cheapest(&pc)?;
                let i = (0..pc.len())
                    .filter(|&i| x[ix][i] > 0.0)
                    .max_by(|&a, &b| pc[a].total_cmp(&pc[b]))?;
                (pc[i] - pc[j] > 1e-12).then(|| (ix, i, j, shift * x[ix][i]))
            })
            .collect();
        for (ix, i, j, amount) in moves.into_iter().flatten() {
            x[ix][i] -= amount;
            x[ix][j] += amount;
        }
        trace.push(outcome_from_flows(game, &x));
    }
    Ok(trace)
}
