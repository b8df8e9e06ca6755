//! Command-line front end: generate hypergraphs, simulate single- and
//! two-virus dynamics, solve equilibria, classify regimes, learn rates,
//! and compare the mean-field model against Monte Carlo ground truth.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hypersis::analysis::{
    classify, classify_general, endemic_domain, endemic_domain_general, healthy_domain,
    healthy_domain_general, jacobian, DomainOfAttraction, JacobianAnalysis, RegimeReport,
};
use hypersis::bivirus::{self, BiVirusReport};
use hypersis::dynamics::{
    find_equilibrium, find_equilibrium_general, simulate, simulate_bivirus, BiVirusParams,
    Equilibrium, SisParams, EQ_MAX_ITERS, EQ_TOL,
};
use hypersis::hypergraph::DirectedHypergraph;
use hypersis::io::{
    read_hypergraph, read_params, read_trajectory, write_bi_trajectory, write_ensemble,
    write_hypergraph, write_report, write_trajectory, ParamSpec,
};
use hypersis::learning::{learn_all, KKT_TOL};
use hypersis::stochastic::compare_meanfield;
use hypersis::Error;

#[derive(Parser)]
#[command(name = "hypersis", version, about = "SIS contagion on directed hypergraphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a hypergraph file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Run the single-virus mean-field recursion and write a CSV
    /// trajectory.
    Simulate(SimulateArgs),
    /// Run two competing viruses and write a CSV trajectory.
    Bivirus(BivirusArgs),
    /// Solve an equilibrium by fixed-point iteration and report its local
    /// stability.
    Equilibrium(EquilibriumArgs),
    /// Classify the regime; with a second parameter file, run the
    /// two-virus analysis instead.
    Analyze(AnalyzeArgs),
    /// Estimate rates from a trajectory on a known hypergraph.
    Learn(LearnArgs),
    /// Compare the mean-field trajectory against Monte Carlo runs of the
    /// agent-level chain.
    Compare(CompareArgs),
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Preferential-attachment graph with random triple hyperedges.
    Ba {
        #[arg(long)]
        n: usize,
        /// Links per attached vertex.
        #[arg(long)]
        m: usize,
        /// Number of random triple hyperedges.
        #[arg(long, default_value_t = 0)]
        triples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Directed cycle, optionally with one triple per node covering its
    /// two successors.
    Cycle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        consecutive_triples: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    hypergraph: PathBuf,
    #[arg(long)]
    params: PathBuf,
    /// Comma-separated initial state.
    #[arg(long, conflicts_with_all = ["init_file", "init_uniform"])]
    init: Option<String>,
    /// JSON array file with the initial state.
    #[arg(long, conflicts_with = "init_uniform")]
    init_file: Option<PathBuf>,
    /// Same initial value on every node.
    #[arg(long)]
    init_uniform: Option<f64>,
    #[arg(long)]
    steps: usize,
    /// Skip the assumption checks.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BivirusArgs {
    #[arg(long)]
    hypergraph: PathBuf,
    /// Hypergraph for the second virus; defaults to the shared one.
    #[arg(long)]
    hypergraph2: Option<PathBuf>,
    #[arg(long)]
    params1: PathBuf,
    #[arg(long)]
    params2: PathBuf,
    #[arg(long, conflicts_with_all = ["init1_file", "init_uniform"])]
    init1: Option<String>,
    #[arg(long, conflicts_with_all = ["init2_file", "init_uniform"])]
    init2: Option<String>,
    /// JSON array file with the first virus initial state.
    #[arg(long, conflicts_with = "init_uniform")]
    init1_file: Option<PathBuf>,
    /// JSON array file with the second virus initial state.
    #[arg(long, conflicts_with = "init_uniform")]
    init2_file: Option<PathBuf>,
    /// Same initial value on every node for both viruses.
    #[arg(long)]
    init_uniform: Option<f64>,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EquilibriumArgs {
    #[arg(long)]
    hypergraph: PathBuf,
    #[arg(long)]
    params: PathBuf,
    /// Comma-separated initial guess; defaults to all ones.
    #[arg(long)]
    init: Option<String>,
    #[arg(long, default_value_t = EQ_TOL)]
    tol: f64,
    #[arg(long, default_value_t = EQ_MAX_ITERS)]
    max_iters: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    hypergraph: PathBuf,
    #[arg(long)]
    params: PathBuf,
    /// Second virus parameters: runs the competing-virus analysis.
    #[arg(long)]
    params2: Option<PathBuf>,
    #[arg(long)]
    hypergraph2: Option<PathBuf>,
    /// Also attempt the attraction-region certificates.
    #[arg(long)]
    domains: bool,
    /// Cutoff for the endemic smallness heuristic.
    #[arg(long)]
    smallness_tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    traj: PathBuf,
    #[arg(long)]
    hypergraph: PathBuf,
    /// Step size used when the trajectory was recorded.
    #[arg(long)]
    h: f64,
    /// First transition of the estimation window.
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// Number of transitions; defaults to the rest of the trajectory.
    #[arg(long)]
    m: Option<usize>,
    /// Highest interaction order to fit (above 3 is experimental).
    #[arg(long, default_value_t = 3)]
    max_order: usize,
    #[arg(long, default_value_t = KKT_TOL)]
    kkt_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    hypergraph: PathBuf,
    #[arg(long)]
    params: PathBuf,
    /// Comma-separated per-node infection probabilities at start.
    #[arg(long, conflicts_with_all = ["init_file", "init_uniform"])]
    init_probs: Option<String>,
    /// JSON array file with the initial infection probabilities.
    #[arg(long, conflicts_with = "init_uniform")]
    init_file: Option<PathBuf>,
    /// Same initial infection probability on every node.
    #[arg(long)]
    init_uniform: Option<f64>,
    #[arg(long)]
    steps: usize,
    /// Number of Monte Carlo replicas.
    #[arg(long)]
    runs: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_float_list(text: &str, n: usize, what: &str) -> anyhow::Result<Vec<f64>> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("{what} must be comma-separated numbers"))?;
    if vals.len() != n {
        bail!("{what} has {} entries, expected {n}", vals.len());
    }
    Ok(vals)
}

fn initial_state(
    list: Option<&String>,
    file: Option<&PathBuf>,
    uniform: Option<f64>,
    n: usize,
    what: &str,
) -> anyhow::Result<Vec<f64>> {
    match (list, file, uniform) {
        (Some(text), _, _) => parse_float_list(text, n, what),
        (None, Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let vals: Vec<f64> = serde_json::from_str(&text)
                .with_context(|| format!("{} must be a JSON array of numbers", path.display()))?;
            if vals.len() != n {
                bail!("{} has {} entries, expected {n}", path.display(), vals.len());
            }
            Ok(vals)
        }
        (None, None, Some(v)) => Ok(vec![v; n]),
        (None, None, None) => bail!("{what} is required (a list, a file, or a uniform value)"),
    }
}

/// Refuses to write over any of the command's input files.
fn ensure_not_input(out: &Path, inputs: &[&Path]) -> anyhow::Result<()> {
    let out_abs = std::path::absolute(out).unwrap_or_else(|_| out.to_path_buf());
    for input in inputs {
        let canon = input
            .canonicalize()
            .unwrap_or_else(|_| std::path::absolute(input).unwrap_or_else(|_| input.to_path_buf()));
        if canon == out_abs || out_abs.as_path() == *input {
            bail!("refusing to overwrite input file {}", input.display());
        }
    }
    Ok(())
}

/// True when the parameter file needs layers above third order.
fn needs_general(spec: &ParamSpec) -> bool {
    !spec.mu_higher.is_empty()
}

#[derive(Serialize)]
struct DomainAttempt {
    available: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<DomainOfAttraction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

impl DomainAttempt {
    fn from(result: hypersis::Result<DomainOfAttraction>) -> Self {
        match result {
            Ok(domain) => DomainAttempt {
                available: true,
                domain: Some(domain),
                reason: None,
            },
            Err(e) => DomainAttempt {
                available: false,
                domain: None,
                reason: Some(e.to_string()),
            },
        }
    }
}

#[derive(Serialize)]
struct AnalyzeOutput {
    regime: RegimeReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    healthy_domain: Option<DomainAttempt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    endemic_equilibrium: Option<Equilibrium>,
    #[serde(skip_serializing_if = "Option::is_none")]
    endemic_domain: Option<DomainAttempt>,
}

#[derive(Serialize)]
struct EquilibriumOutput {
    equilibrium: Equilibrium,
    rho: f64,
    verdict: hypersis::analysis::StabilityVerdict,
}

#[derive(Serialize)]
struct LearnOutput {
    #[serde(flatten)]
    params: ParamSpec,
    diagnostics: hypersis::learning::LearnedParams,
}

fn load_sis(hypergraph: &Path, params: &Path) -> anyhow::Result<(DirectedHypergraph, SisParams)> {
    let hg = read_hypergraph(hypergraph)
        .with_context(|| format!("reading hypergraph {}", hypergraph.display()))?;
    let spec = read_params(params).with_context(|| format!("reading params {}", params.display()))?;
    let p = spec.to_sis(&hg)?;
    Ok((hg, p))
}

fn cmd_generate(kind: GenerateKind) -> anyhow::Result<()> {
    match kind {
        GenerateKind::Ba {
            n,
            m,
            triples,
            seed,
            out,
        } => {
            let hg = DirectedHypergraph::random_ba(n, m, triples, seed)?;
            write_hypergraph(&out, &hg)?;
            println!(
                "wrote {} nodes, {} edges (pairwise strongly connected: {})",
                hg.n(),
                hg.edges().len(),
                hg.pairwise_strongly_connected()
            );
        }
        GenerateKind::Cycle {
            n,
            consecutive_triples,
            out,
        } => {
            let triples: Vec<(usize, usize, usize)> = if consecutive_triples {
                (0..n).map(|i| (i, (i + 1) % n, (i + 2) % n)).collect()
            } else {
                Vec::new()
            };
            let hg = DirectedHypergraph::cycle_with_triples(n, &triples)?;
            write_hypergraph(&out, &hg)?;
            println!("wrote {} nodes, {} edges", hg.n(), hg.edges().len());
        }
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut inputs: Vec<&Path> = vec![&args.hypergraph, &args.params];
    if let Some(f) = &args.init_file {
        inputs.push(f);
    }
    ensure_not_input(&args.out, &inputs)?;
    let (_, p) = load_sis(&args.hypergraph, &args.params)?;
    let x0 = initial_state(
        args.init.as_ref(),
        args.init_file.as_ref(),
        args.init_uniform,
        p.n(),
        "--init",
    )?;
    let traj = simulate(&p, &x0, args.steps, args.force)?;
    write_trajectory(&args.out, &traj)?;
    let final_mean = traj.last().iter().sum::<f64>() / p.n() as f64;
    println!(
        "simulated {} steps; final mean infection {final_mean:.6}",
        args.steps
    );
    Ok(())
}

fn cmd_bivirus(args: BivirusArgs) -> anyhow::Result<()> {
    let hg2_path = args.hypergraph2.as_ref().unwrap_or(&args.hypergraph);
    let mut inputs: Vec<&Path> = vec![&args.hypergraph, hg2_path, &args.params1, &args.params2];
    for f in [&args.init1_file, &args.init2_file].into_iter().flatten() {
        inputs.push(f);
    }
    ensure_not_input(&args.out, &inputs)?;
    let (_, v1) = load_sis(&args.hypergraph, &args.params1)?;
    let (_, v2) = load_sis(hg2_path, &args.params2)?;
    let p = BiVirusParams::new(v1, v2)?;
    let x1 = initial_state(
        args.init1.as_ref(),
        args.init1_file.as_ref(),
        args.init_uniform,
        p.n(),
        "--init1",
    )?;
    let x2 = initial_state(
        args.init2.as_ref(),
        args.init2_file.as_ref(),
        args.init_uniform,
        p.n(),
        "--init2",
    )?;
    let traj = simulate_bivirus(&p, &x1, &x2, args.steps, args.force)?;
    write_bi_trajectory(&args.out, &traj)?;
    let (f1, f2) = traj.last();
    println!(
        "simulated {} steps; final means {:.6} / {:.6}",
        args.steps,
        f1.iter().sum::<f64>() / p.n() as f64,
        f2.iter().sum::<f64>() / p.n() as f64
    );
    Ok(())
}

fn cmd_equilibrium(args: EquilibriumArgs) -> anyhow::Result<()> {
    ensure_not_input(&args.out, &[&args.hypergraph, &args.params])?;
    let hg = read_hypergraph(&args.hypergraph)?;
    let spec = read_params(&args.params)?;
    let (eq, analysis): (Equilibrium, JacobianAnalysis) = if needs_general(&spec) {
        let p = spec.to_general(&hg)?;
        let init = match &args.init {
            Some(text) => parse_float_list(text, p.n(), "--init")?,
            None => vec![1.0; p.n()],
        };
        let eq = find_equilibrium_general(&p, &init, args.tol, args.max_iters)?;
        let j = hypersis::analysis::jacobian_general(&p, &eq.x)?;
        (eq, j)
    } else {
        let p = spec.to_sis(&hg)?;
        let init = match &args.init {
            Some(text) => parse_float_list(text, p.n(), "--init")?,
            None => vec![1.0; p.n()],
        };
        let eq = find_equilibrium(&p, &init, args.tol, args.max_iters)?;
        let j = jacobian(&p, &eq.x)?;
        (eq, j)
    };
    println!(
        "equilibrium residual {:.3e} after {} iterations; verdict {:?} (rho {:.6})",
        eq.residual, eq.iterations, analysis.verdict, analysis.rho
    );
    write_report(
        &args.out,
        &EquilibriumOutput {
            equilibrium: eq,
            rho: analysis.rho,
            verdict: analysis.verdict,
        },
    )?;
    Ok(())
}

fn analyze_single(args: &AnalyzeArgs) -> anyhow::Result<()> {
    let hg = read_hypergraph(&args.hypergraph)?;
    let spec = read_params(&args.params)?;
    let general = needs_general(&spec);
    let (regime, healthy, endemic_eq, endemic) = if general {
        let p = spec.to_general(&hg)?;
        let regime = classify_general(&p, args.smallness_tol)?;
        if args.domains {
            let healthy = DomainAttempt::from(healthy_domain_general(&p));
            let eq = find_equilibrium_general(&p, &vec![1.0; p.n()], EQ_TOL, EQ_MAX_ITERS).ok();
            let endemic = eq
                .as_ref()
                .map(|eq| DomainAttempt::from(endemic_domain_general(&p, &eq.x, 1e-8)));
            (regime, Some(healthy), eq, endemic)
        } else {
            (regime, None, None, None)
        }
    } else {
        let p = spec.to_sis(&hg)?;
        let regime = classify(&p, args.smallness_tol)?;
        if args.domains {
            let healthy = DomainAttempt::from(healthy_domain(&p));
            let eq = find_equilibrium(&p, &vec![1.0; p.n()], EQ_TOL, EQ_MAX_ITERS).ok();
            let endemic = eq
                .as_ref()
                .map(|eq| DomainAttempt::from(endemic_domain(&p, &eq.x, 1e-8)));
            (regime, Some(healthy), eq, endemic)
        } else {
            (regime, None, None, None)
        }
    };
    println!(
        "classification: {:?} (reproduction rho {:.6}, saturated rho {:.6})",
        regime.classification, regime.rho_reproduction, regime.rho_saturated
    );
    write_report(
        &args.out,
        &AnalyzeOutput {
            regime,
            healthy_domain: healthy,
            endemic_equilibrium: endemic_eq,
            endemic_domain: endemic,
        },
    )?;
    Ok(())
}

fn analyze_bivirus(args: &AnalyzeArgs, params2: &Path) -> anyhow::Result<()> {
    let hg2_path = args.hypergraph2.as_ref().unwrap_or(&args.hypergraph);
    let (_, v1) = load_sis(&args.hypergraph, &args.params)?;
    let (_, v2) = load_sis(hg2_path, params2)?;
    let p = BiVirusParams::new(v1, v2)?;
    let report: BiVirusReport = bivirus::analyze(&p, args.smallness_tol)?;
    println!(
        "reproduction rhos {:.6} / {:.6}; healthy_global={} multistability={} both_supercritical={}",
        report.rho_reproduction[0],
        report.rho_reproduction[1],
        report.healthy_global,
        report.multistability,
        report.both_supercritical
    );
    write_report(&args.out, &report)?;
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let mut inputs: Vec<&Path> = vec![&args.hypergraph, &args.params];
    if let Some(p2) = &args.params2 {
        inputs.push(p2);
    }
    if let Some(h2) = &args.hypergraph2 {
        inputs.push(h2);
    }
    ensure_not_input(&args.out, &inputs)?;
    match &args.params2 {
        Some(params2) => analyze_bivirus(&args, params2),
        None => analyze_single(&args),
    }
}

fn cmd_learn(args: LearnArgs) -> anyhow::Result<()> {
    ensure_not_input(&args.out, &[&args.traj, &args.hypergraph])?;
    let hg = read_hypergraph(&args.hypergraph)?;
    let full = read_trajectory(&args.traj, args.h)?;
    let available = full.steps();
    let m = args.m.unwrap_or(available.saturating_sub(args.q));
    if args.q + m > available || m == 0 {
        bail!(
            "window q={} m={m} does not fit a trajectory with {available} transitions",
            args.q
        );
    }
    let window = hypersis::dynamics::Trajectory::from_states(
        args.h,
        full.states()[args.q..=args.q + m].to_vec(),
    )?;
    let learned = learn_all(&hg, &window, args.max_order, args.kkt_tol)?;
    if learned.experimental {
        eprintln!("note: fitting above third order is experimental");
    }
    let mut mu_higher = BTreeMap::new();
    for order in 4..=args.max_order {
        if let Some(mu) = learned.mu(order) {
            mu_higher.insert(order.to_string(), mu);
        }
    }
    let params = ParamSpec {
        delta: learned.delta(),
        h: args.h,
        mu2: learned.mu(2),
        mu3: learned.mu(3),
        mu_higher,
    };
    let worst = learned
        .nodes
        .iter()
        .map(|n| n.residual)
        .fold(0.0f64, f64::max);
    let ranks_ok = learned.nodes.iter().all(|n| n.rank.ok);
    println!(
        "learned {} nodes; worst residual {:.3e}; all ranks ok: {ranks_ok}",
        learned.nodes.len(),
        worst
    );
    write_report(
        &args.out,
        &LearnOutput {
            params,
            diagnostics: learned,
        },
    )?;
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<()> {
    let mut inputs: Vec<&Path> = vec![&args.hypergraph, &args.params];
    if let Some(f) = &args.init_file {
        inputs.push(f);
    }
    ensure_not_input(&args.out, &inputs)?;
    let (_, p) = load_sis(&args.hypergraph, &args.params)?;
    let init = initial_state(
        args.init_probs.as_ref(),
        args.init_file.as_ref(),
        args.init_uniform,
        p.n(),
        "--init-probs",
    )?;
    let (max_error, rows) = compare_meanfield(&p, &init, args.steps, args.runs, args.seed)?;
    write_ensemble(&args.out, &rows)?;
    println!("max |meanfield - monte-carlo| = {max_error:.6}");
    Ok(())
}

/// Parses arguments, reserving exit code 2 for model assumption failures
/// rather than flag mistakes.
fn parse_cli() -> Cli {
    Cli::try_parse().unwrap_or_else(|e| {
        let _ = e.print();
        let code = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
            _ => 1,
        };
        std::process::exit(code);
    })
}

fn run() -> anyhow::Result<()> {
    match parse_cli().cmd {
        Cmd::Generate { kind } => cmd_generate(kind),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Bivirus(args) => cmd_bivirus(args),
        Cmd::Equilibrium(args) => cmd_equilibrium(args),
        Cmd::Analyze(args) => cmd_analyze(args),
        Cmd::Learn(args) => cmd_learn(args),
        Cmd::Compare(args) => cmd_compare(args),
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Assumption(_)) | Some(Error::Precondition(_)) => 2,
        Some(Error::NonConvergence(_)) => 3,
        _ => 1,
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
