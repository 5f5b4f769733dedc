use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use psyllid_cli::config::{ScenarioConfig, PRESETS};
use psyllid_cli::experiments::{run_sweep, ExperimentContext, SWEEP_NAMES};
use psyllid_cli::output::{fmt12, render_csv, write_atomic, Cell};
use psyllid_cli::report::{
    equilibria_csv_rows, render_equilibria_text, thresholds_csv_row, trajectory_csv_rows,
    DerivedJson, EquilibriaDocument, EquilibriumJson, SimSummaryJson, ThresholdJson,
    ThresholdRowJson, EQUILIBRIA_CSV_HEADER, THRESHOLDS_CSV_HEADER, TRAJECTORY_CSV_HEADER,
};
use psyllid_cli::Failure;
use psyllid_core::analysis::{all_reports, derived_quantities, k_star};
use psyllid_core::model::ModelParams;
use psyllid_core::sim::integrate;
use psyllid_core::thresholds::{ap_crit, ap_crit_aux};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Population analysis and control simulation for the Asian citrus psyllid
/// under pheromone trapping.
#[derive(Parser)]
#[command(name = "psyllid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; reports also print to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for report files.
    #[arg(long, default_value = "json", value_parser = ["csv", "json"])]
    format: String,
    /// Worker threads for sweep grids.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// All six equilibria with existence, stability, and switching-plane
    /// classification.
    Equilibria(CommonArgs),
    /// Critical lure strengths and the extinction feedback gain, for one
    /// killing rate or a grid.
    Thresholds {
        #[command(flatten)]
        common: CommonArgs,
        /// Killing rate; overrides the config strategy's value.
        #[arg(long)]
        alpha: Option<f64>,
        /// Evaluate on a uniform grid of this many points over [0, 1].
        #[arg(long, conflicts_with = "alpha")]
        alpha_grid: Option<usize>,
    },
    /// Integrate one scenario; writes trajectory.csv and summary.json.
    Simulate(CommonArgs),
    /// Regenerate the data behind one figure.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep name (see --list).
        name: Option<String>,
        /// List available sweeps.
        #[arg(long)]
        list: bool,
    },
    /// Show the built-in parameter presets.
    Presets,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    };
    std::process::exit(code);
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig, Failure> {
    match &common.config {
        Some(path) => ScenarioConfig::from_path(path),
        None => Ok(ScenarioConfig::default()),
    }
}

fn effective_jobs(requested: usize) -> usize {
    if std::env::var("PSYLLID_SEED_DETERMINISTIC").as_deref() == Ok("1") {
        1
    } else {
        requested.max(1)
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    write_atomic(path, text.as_bytes()).map_err(|e| Failure::io(e, "writing output"))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Equilibria(common) => cmd_equilibria(&common),
        Command::Thresholds { common, alpha, alpha_grid } => {
            cmd_thresholds(&common, alpha, alpha_grid)
        }
        Command::Simulate(common) => cmd_simulate(&common),
        Command::Sweep { common, name, list } => cmd_sweep(&common, name, list),
        Command::Presets => {
            cmd_presets();
            Ok(())
        }
    }
}

/// Control context for the equilibrium reports: the open-loop lure comes
/// from an open-loop policy, the feedback gain from a closed-loop one.
fn control_context(config: &ScenarioConfig) -> (f64, f64, f64) {
    use psyllid_cli::config::PolicySpec;
    let alpha = config.strategy.alpha;
    let (a_p, k) = match &config.strategy.policy {
        PolicySpec::OpenLoop { a_p } => (*a_p, 0.0),
        PolicySpec::ClosedLoop { k } | PolicySpec::ClosedLoopSampled { k, .. } => (0.0, *k),
        PolicySpec::Mixed { k, a_p_cap, .. } => (a_p_cap.unwrap_or(0.0), *k),
    };
    (alpha, a_p, k)
}

fn cmd_equilibria(common: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(common)?;
    let params = config.params.resolve()?;
    let (alpha, a_p, k) = control_context(&config);
    let reports = all_reports(&params, alpha, a_p, k).map_err(Failure::from)?;
    let doc = EquilibriaDocument {
        derived: DerivedJson::from(&derived_quantities(&params)),
        warnings: params.warnings(),
        equilibria: reports.iter().map(EquilibriumJson::from).collect(),
    };
    print!("{}", render_equilibria_text(&doc));
    if let Some(out) = &common.out {
        if common.format == "json" {
            write_text(&out.join("equilibria.json"), &to_json(&doc))?;
        } else {
            let csv = render_csv(EQUILIBRIA_CSV_HEADER, &equilibria_csv_rows(&reports));
            write_text(&out.join("equilibria.csv"), &csv)?;
        }
    }
    Ok(())
}

fn cmd_thresholds(
    common: &CommonArgs,
    alpha: Option<f64>,
    alpha_grid: Option<usize>,
) -> Result<(), Failure> {
    let config = load_config(common)?;
    let params = config.params.resolve()?;
    let alphas: Vec<f64> = match (alpha, alpha_grid) {
        (Some(a), _) => vec![a],
        (None, Some(n)) => psyllid_cli::experiments::linspace(0.0, 1.0, n),
        (None, None) => vec![config.strategy.alpha],
    };
    for &a in &alphas {
        if !(0.0..=1.0).contains(&a) {
            return Err(Failure::config(format!("alpha must lie in [0,1], got {a}")));
        }
    }
    let mut rows = Vec::new();
    for &a in &alphas {
        let fold = ap_crit(&params, a, 1e-9).map_err(Failure::from)?;
        let aux = ap_crit_aux(&params, a, 1e-9).map_err(Failure::from)?;
        rows.push(ThresholdRowJson {
            alpha: a,
            k_star: k_star(&params, a),
            scarcity_fold: ThresholdJson::from(&fold),
            comparison_fold: ThresholdJson::from(&aux),
        });
    }
    for r in &rows {
        println!(
            "alpha={} k_star={} ap_crit={} (tangency A={}) ap_crit_aux={} (tangency M={})",
            fmt12(r.alpha),
            fmt12(r.k_star),
            fmt12(r.scarcity_fold.a_p_crit),
            fmt12(r.scarcity_fold.tangency_point),
            fmt12(r.comparison_fold.a_p_crit),
            fmt12(r.comparison_fold.tangency_point),
        );
    }
    if let Some(out) = &common.out {
        if common.format == "json" {
            write_text(&out.join("thresholds.json"), &to_json(&rows))?;
        } else {
            let cells: Vec<Vec<Cell>> = rows.iter().map(thresholds_csv_row).collect();
            write_text(&out.join("thresholds.csv"), &render_csv(THRESHOLDS_CSV_HEADER, &cells))?;
        }
    }
    Ok(())
}

fn cmd_simulate(common: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(common)?;
    let params = config.params.resolve()?;
    let strategy = config.strategy.resolve(&params)?;
    let sim = config.sim.resolve()?;
    let traj = integrate(&params, &strategy, &sim).map_err(Failure::from)?;
    let summary = SimSummaryJson::from(&traj);
    match traj.elimination_time {
        Some(t) => println!("eliminated at t = {} days", fmt12(t)),
        None => println!("not eliminated within {} days", fmt12(sim.t_max)),
    }
    println!(
        "pheromone integral = {} individual-days, release total = {}",
        fmt12(traj.pheromone_cost_integral),
        fmt12(traj.pheromone_release_total)
    );
    if let Some(out) = &common.out {
        let csv = render_csv(TRAJECTORY_CSV_HEADER, &trajectory_csv_rows(&traj, &params));
        write_text(&out.join("trajectory.csv"), &csv)?;
        write_text(&out.join("summary.json"), &to_json(&summary))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    name: &'a str,
    tool_version: &'a str,
    preset: Option<&'a str>,
    params: ParamsMeta,
    spec: &'a psyllid_cli::experiments::SweepSpec,
    threshold_tol: f64,
    spec_hash: String,
}

#[derive(Serialize)]
struct ParamsMeta {
    r: f64,
    rho: f64,
    sigma: f64,
    mu: f64,
    delta: f64,
    gamma: f64,
    nu: f64,
    eta: f64,
}

impl ParamsMeta {
    fn from(p: &ModelParams) -> Self {
        ParamsMeta {
            r: p.r,
            rho: p.rho,
            sigma: p.sigma,
            mu: p.mu,
            delta: p.delta,
            gamma: p.gamma,
            nu: p.nu,
            eta: p.eta,
        }
    }
}

fn cmd_sweep(common: &CommonArgs, name: Option<String>, list: bool) -> Result<(), Failure> {
    if list {
        for n in SWEEP_NAMES {
            println!("{n}");
        }
        return Ok(());
    }
    let name = name.ok_or_else(|| {
        Failure::config("missing sweep name; use --list to enumerate".to_string())
    })?;
    let config = load_config(common)?;
    let params = config.params.resolve()?;
    let sim = config.sim.resolve()?;
    let ctx = ExperimentContext::new(params, sim, effective_jobs(common.jobs));
    let result = run_sweep(&name, &ctx, &config.sweep)?;

    let csv = render_csv(&result.columns, &result.rows);
    let spec_json = serde_json::to_string(&result.spec).expect("spec serializes");
    let mut hasher = Sha256::new();
    hasher.update(spec_json.as_bytes());
    let meta = SweepMeta {
        name: &name,
        tool_version: env!("CARGO_PKG_VERSION"),
        preset: config.params.preset_name(),
        params: ParamsMeta::from(&params),
        spec: &result.spec,
        threshold_tol: 1e-9,
        spec_hash: format!("{:x}", hasher.finalize()),
    };
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    write_text(&out.join(format!("{name}.csv")), &csv)?;
    write_text(&out.join(format!("{name}.meta.json")), &to_json(&meta))?;
    println!("{} rows -> {}", result.rows.len(), out.join(format!("{name}.csv")).display());
    Ok(())
}

fn cmd_presets() {
    for preset in PRESETS {
        let p = ModelParams::table1();
        let q = derived_quantities(&p);
        println!("{preset}:");
        println!(
            "  r={} rho={} sigma={} mu={} delta={} gamma={} nu={} eta={}",
            fmt12(p.r),
            fmt12(p.rho),
            fmt12(p.sigma),
            fmt12(p.mu),
            fmt12(p.delta),
            fmt12(p.gamma),
            fmt12(p.nu),
            fmt12(p.eta)
        );
        println!(
            "  N_M={} N_F={} theta_M={} vartheta={} P_hat={}",
            fmt12(q.n_m),
            fmt12(q.n_f),
            fmt12(q.theta_m),
            fmt12(q.vartheta),
            fmt12(q.p_hat)
        );
        for w in p.warnings() {
            println!("  note: {w}");
        }
    }
}
