use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ibp_core::equilibrium::{brute_force_icue, solve_icue, EquilibriumResult, SolverOptions};
use ibp_core::export::{export_csv, export_dot, export_edge_csv};
use ibp_core::format::{self, GameDocument, LoadedGame};
use ibp_core::game::{GameSpec, TypeKey};
use ibp_core::paradox::{self, Expansion, ParadoxKind, ParadoxVerdict};
use ibp_core::scenarios::{self, ScenarioId};
use ibp_core::search::{search_paradox, FamilyKind, FamilySpec};
use ibp_core::topology;

#[derive(Parser)]
#[command(name = "ibp", version, about = "Congestion games with partial route information: equilibria, immunity checks and paradox detection")]
struct Cli {
    #[command(flatten)]
    solver: SolverFlags,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverFlags {
    /// Convergence tolerance on the relative equilibrium gap
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "max-iters", global = true, default_value_t = 10_000)]
    max_iters: usize,
    /// Replace the cost of every big-M edge with this constant
    #[arg(long = "big-m", global = true)]
    big_m: Option<f64>,
    /// Grid points per unit of demand for the brute-force oracle
    #[arg(long, global = true, default_value_t = 20)]
    grid: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

impl SolverFlags {
    fn options(&self) -> Result<SolverOptions> {
        let opts = SolverOptions {
            tolerance: self.tol,
            max_iterations: self.max_iters,
            big_m: self.big_m,
            grid_resolution: self.grid,
            seed: self.seed,
            ..SolverOptions::default()
        };
        opts.check()?;
        Ok(opts)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Topology checks and the immunity certificate of a game
    Classify { file: PathBuf },
    /// Solve for the equilibrium and report gap, costs and loads
    Solve {
        file: PathBuf,
        /// Use the brute-force oracle instead of the iterative solver
        #[arg(long)]
        brute_force: bool,
    },
    /// Does expanding a type's information raise its own equilibrium cost?
    Ibp(ExpandArgs),
    /// Does expanding a type's information raise the social cost?
    Ibpsc(ExpandArgs),
    /// Does lowering edge costs raise the social cost?
    Bp {
        file: PathBuf,
        /// Game document with the lowered costs; defaults to the
        /// `modified_costs` block of the first file
        modified: Option<PathBuf>,
    },
    /// Randomized search for paradox instances; CSV goes to stdout
    Search {
        #[arg(long)]
        family: FamilyKind,
        #[arg(long, value_parser = parse_kind)]
        kind: ParadoxKind,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Save every witness as a game document in this directory
        #[arg(long)]
        witness_dir: Option<PathBuf>,
    },
    /// Print a builtin scenario as a game document, or run it
    Scenario {
        #[arg(value_parser = parse_scenario)]
        id: ScenarioId,
        #[arg(long)]
        run: bool,
    },
    /// DOT graph or per-edge CSV of a solved game
    Export {
        file: PathBuf,
        #[arg(long, conflicts_with = "csv", required_unless_present = "csv")]
        dot: bool,
        #[arg(long)]
        csv: bool,
        /// DOT only: label edges with cost functions instead of loads
        #[arg(long)]
        costs: bool,
    },
}

#[derive(Args)]
struct ExpandArgs {
    file: PathBuf,
    /// Target type then the edges it learns, e.g. `--expand 1,1 e3 e4`;
    /// defaults to the document's `expansion` block
    #[arg(long, num_args = 2.., value_name = "TYPE EDGES")]
    expand: Option<Vec<String>>,
}

fn parse_kind(s: &str) -> Result<ParadoxKind, String> {
    s.parse()
}

fn parse_scenario(s: &str) -> Result<ScenarioId, String> {
    s.parse()
}

fn load(path: &Path) -> Result<LoadedGame> {
    format::load_game(path).with_context(|| format!("loading {}", path.display()))
}

fn print_result(spec: &GameSpec, r: &EquilibriumResult) {
    println!("converged: {}", r.converged);
    println!("iterations: {}", r.iterations);
    println!("gap_absolute: {}", r.gaps.max_absolute);
    println!("gap_relative: {}", r.gaps.max_relative);
    println!("social_cost: {}", r.social_cost);
    println!("potential: {}", r.potential);
    println!("loads_unique: {}", r.loads_unique);
    for key in r.type_costs.keys() {
        println!("type_cost {key}: {}", r.type_cost(*key).unwrap_or(f64::NAN));
    }
    for (ix, e) in spec.network.edges().iter().enumerate() {
        println!("load {}: {}", e.id, r.loads.get(ix));
    }
}

fn print_verdict(v: &ParadoxVerdict) {
    println!("kind: {}", v.kind);
    println!("occurred: {}", v.occurred);
    println!("confidence: {}", v.confidence);
    println!("delta: {}", v.delta);
    println!("social_cost_before: {}", v.before.social_cost);
    println!("social_cost_after: {}", v.after.social_cost);
    if let Some(t) = v.target {
        println!("target: {t}");
        if let (Some(b), Some(a)) = (v.before.type_cost(t), v.after.type_cost(t)) {
            println!("target_cost_before: {b}");
            println!("target_cost_after: {a}");
        }
    }
    if let Some(ibp) = v.ibp_occurred() {
        println!("ibp_occurred: {ibp}");
    }
    println!("ibpsc_occurred: {}", v.ibpsc_occurred());
    for (key, d) in &v.type_deltas {
        println!("type_delta {key}: {d}");
    }
    for w in &v.warnings {
        println!("warning: {w}");
    }
}

fn verdict_code(v: &ParadoxVerdict) -> ExitCode {
    if v.occurred {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn classify(loaded: &LoadedGame) -> Result<ExitCode> {
    let spec = &loaded.spec;
    let net = &spec.network;
    println!("simple: {}", topology::is_simple(net));
    println!("tree: {}", topology::is_tree(net));
    println!("ring: {}", topology::is_ring(net));
    for p in &spec.populations {
        let li = topology::is_li(net, p.origin, p.destination)?;
        let sli = topology::is_sli(net, p.origin, p.destination)?;
        println!("population {} li: {}", p.id, li.is_li);
        println!("population {} sli: {}", p.id, sli.is_sli);
        println!(
            "population {} pigou_embedding: {}",
            p.id,
            topology::has_pigou_embedding(net, p.origin, p.destination)
        );
    }
    let circuit = topology::is_circuit_game(spec);
    println!("circuit_game: {}", circuit.is_circuit_game);
    for d in &circuit.diagnostics {
        println!("circuit_note: {d}");
    }
    let cert = topology::immunity_certificate(spec)?;
    println!("immunity: {}", cert.verdict);
    println!("ibp_possible: {}", cert.ibp_possible);
    for n in &cert.notes {
        println!("note: {n}");
    }
    Ok(ExitCode::SUCCESS)
}

fn expansion_from(loaded: &LoadedGame, expand: &Option<Vec<String>>) -> Result<Expansion> {
    match expand {
        Some(args) => {
            let target: TypeKey = args[0].parse().map_err(|e: String| anyhow!(e))?;
            let added = loaded.spec.network.edge_set(&args[1..])?;
            Ok(Expansion { target, added })
        }
        None => loaded
            .expansion
            .clone()
            .ok_or_else(|| anyhow!("no --expand given and the document has no expansion block")),
    }
}

fn run_scenario(id: ScenarioId, opts: &SolverOptions) -> Result<ExitCode> {
    let sc = scenarios::builtin(id);
    println!("scenario: {id}");
    let v = match id {
        ScenarioId::WheatstoneBp => {
            let costs = sc.modified_costs.as_ref().ok_or_else(|| anyhow!("scenario has no cost change"))?;
            paradox::detect_bp(&sc.spec, costs, None, opts)?
        }
        _ => {
            let exp = sc.expansion.as_ref().ok_or_else(|| anyhow!("scenario has no expansion"))?;
            let kind = if id == ScenarioId::PigouIbpsc {
                ParadoxKind::Ibpsc
            } else {
                ParadoxKind::Ibp
            };
            paradox::detect_expansion(&sc.spec, exp, kind, opts)?
        }
    };
    print_verdict(&v);
    Ok(verdict_code(&v))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let opts = cli.solver.options()?;
    match cli.command {
        Command::Classify { file } => classify(&load(&file)?),
        Command::Solve { file, brute_force } => {
            let loaded = load(&file)?;
            let game = opts.build_game(loaded.spec.clone())?;
            let r = if brute_force {
                brute_force_icue(&game, &opts)?
            } else {
                solve_icue(&game, &opts)?
            };
            print_result(game.spec(), &r);
            Ok(ExitCode::SUCCESS)
        }
        Command::Ibp(a) => expand_cmd(a, ParadoxKind::Ibp, &opts),
        Command::Ibpsc(a) => expand_cmd(a, ParadoxKind::Ibpsc, &opts),
        Command::Bp { file, modified } => {
            let loaded = load(&file)?;
            let v = match modified {
                Some(m) => paradox::detect_bp_pair(&loaded.spec, &load(&m)?.spec, &opts)?,
                None => {
                    let costs = loaded
                        .modified_costs
                        .as_ref()
                        .ok_or_else(|| anyhow!("no modified file given and the document has no modified_costs block"))?;
                    paradox::detect_bp(&loaded.spec, costs, None, &opts)?
                }
            };
            print_verdict(&v);
            Ok(verdict_code(&v))
        }
        Command::Search {
            family,
            kind,
            budget,
            threads,
            out,
            witness_dir,
        } => {
            let report = search_paradox(&FamilySpec::new(family), kind, budget, cli.solver.seed, &opts, threads);
            let csv = export_csv(&report.records);
            match &out {
                Some(p) => fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{csv}"),
            }
            if let Some(dir) = &witness_dir {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                for w in &report.witnesses {
                    let doc: GameDocument = w.document(cli.solver.seed);
                    let path = dir.join(format!("{}.json", doc.name.as_deref().unwrap_or("witness")));
                    format::write_document(&doc, &path)?;
                }
            }
            eprintln!(
                "samples: {}, witnesses: {}",
                report.records.len(),
                report.witnesses.len()
            );
            Ok(if report.witnesses.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Scenario { id, run } => {
            if run {
                run_scenario(id, &opts)
            } else {
                let doc = GameDocument::from_scenario(&scenarios::builtin(id));
                print!("{}", format::document_to_string(&doc));
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Export { file, dot, csv: _, costs } => {
            let loaded = load(&file)?;
            let game = opts.build_game(loaded.spec.clone())?;
            if dot && costs {
                print!("{}", export_dot(&loaded.spec, None));
                return Ok(ExitCode::SUCCESS);
            }
            let r = solve_icue(&game, &opts)?;
            if dot {
                print!("{}", export_dot(&loaded.spec, Some(&r.loads)));
            } else {
                print!("{}", export_edge_csv(&loaded.spec, &r.loads));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn expand_cmd(a: ExpandArgs, kind: ParadoxKind, opts: &SolverOptions) -> Result<ExitCode> {
    let loaded = load(&a.file)?;
    let exp = expansion_from(&loaded, &a.expand)?;
    if exp.added.is_empty() {
        bail!("expansion adds no edges");
    }
    let v = paradox::detect_expansion(&loaded.spec, &exp, kind, opts)?;
    print_verdict(&v);
    Ok(verdict_code(&v))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
