//! Parameter sweeps and scenario batteries behind the `sweep` subcommand:
//! each regenerates the data for one figure of the study at desk scale.
//!
//! Every sweep is a pure function of (parameters, grids, solver settings):
//! rerunning one yields byte-identical CSV. Grid cells are independent and
//! may run on several threads; results are always assembled in grid order.

use psyllid_core::analysis::{
    derived_quantities, equilibrium_e1, k_star, regular_closed_loop_equilibrium,
};
use psyllid_core::model::{ModelParams, State};
use psyllid_core::sim::{integrate, ControlStrategy, Policy, SimulationConfig, Trajectory};
use psyllid_core::thresholds::{ap_crit, ap_crit_aux};
use serde::Serialize;

use crate::output::Cell;
use crate::Failure;

/// Fixed threshold tolerance used by all sweeps.
const THRESHOLD_TOL: f64 = 1e-9;
/// Assessment interval unit: the wild population is estimated every
/// `2n` weeks, i.e. every `14·n` days.
const FORTNIGHT: f64 = 14.0;

/// What a sweep will compute: name, axes, and templates; serialized into
/// the `.meta.json` provenance file next to each CSV.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    pub name: String,
    /// (axis name, grid values) pairs, outer axis first.
    pub axes: Vec<(String, Vec<f64>)>,
    /// Human-readable strategy template.
    pub strategy: String,
    pub sim: SimTemplate,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimTemplate {
    pub initial: [f64; 3],
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
    pub elimination_eps: f64,
}

impl SimTemplate {
    fn from(config: &SimulationConfig) -> Self {
        SimTemplate {
            initial: config.initial.as_array(),
            t_max: config.t_max,
            rtol: config.rtol,
            atol: config.atol,
            elimination_eps: config.elimination_eps,
        }
    }
}

/// One finished sweep: column names plus one row per grid point (or per
/// trajectory record for the phase-portrait sweep).
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// Inputs shared by all sweeps.
#[derive(Debug, Clone)]
pub struct ExperimentContext {
    pub params: ModelParams,
    pub sim: SimulationConfig,
    pub jobs: usize,
}

impl ExperimentContext {
    pub fn new(params: ModelParams, sim: SimulationConfig, jobs: usize) -> Self {
        ExperimentContext { params, sim, jobs: jobs.max(1) }
    }
}

/// Runs `n` independent cells on up to `jobs` threads; output order is
/// always the input order.
fn run_indexed<T, F>(jobs: usize, n: usize, f: F) -> Vec<Result<T, Failure>>
where
    T: Send,
    F: Fn(usize) -> Result<T, Failure> + Sync,
{
    if jobs <= 1 || n <= 1 {
        return (0..n).map(&f).collect();
    }
    let mut out: Vec<Option<Result<T, Failure>>> = Vec::new();
    out.resize_with(n, || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i);
                slots.lock().expect("no poisoned cells")[i] = Some(r);
            });
        }
    });
    out.into_iter().map(|r| r.expect("every cell ran")).collect()
}

pub fn default_alpha_grid(points: usize) -> Vec<f64> {
    linspace(0.0, 1.0, points)
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn elimination_cells(traj: &Trajectory) -> [Cell; 3] {
    [
        Cell::from(traj.elimination_time),
        Cell::from(traj.pheromone_cost_integral),
        Cell::from(traj.pheromone_release_total),
    ]
}

/// Critical lure strength vs killing rate, for both the scarcity-system
/// fold (`ap_crit`, the quantity the later sweeps build on) and the
/// comparison-system fold (`ap_crit_aux`, its upper bound).
pub fn fig5_open_ap_crit(
    ctx: &ExperimentContext,
    alpha_grid: &[f64],
) -> Result<SweepResult, Failure> {
    let rows = run_indexed(ctx.jobs, alpha_grid.len(), |i| {
        let alpha = alpha_grid[i];
        let fold = ap_crit(&ctx.params, alpha, THRESHOLD_TOL)?;
        let aux = ap_crit_aux(&ctx.params, alpha, THRESHOLD_TOL)?;
        Ok(vec![
            Cell::from(alpha),
            Cell::from(fold.a_p_crit),
            Cell::from(fold.tangency_point),
            Cell::from(aux.a_p_crit),
            Cell::from(aux.tangency_point),
        ])
    });
    Ok(SweepResult {
        spec: SweepSpec {
            name: "fig5".to_string(),
            axes: vec![("alpha".to_string(), alpha_grid.to_vec())],
            strategy: "open-loop threshold scan (no simulation)".to_string(),
            sim: SimTemplate::from(&ctx.sim),
            outputs: vec!["ap_crit".to_string(), "ap_crit_aux".to_string()],
        },
        columns: vec!["alpha", "ap_crit", "tangency_a", "ap_crit_aux", "tangency_m"],
        rows: rows.into_iter().collect::<Result<_, _>>()?,
    })
}

/// Open-loop elimination totals for lures set a margin above the critical
/// amount: `A_p = A_p^crit(α) + A_p_min`.
pub fn fig6_open_totals(
    ctx: &ExperimentContext,
    alpha: f64,
    ap_min_grid: &[f64],
) -> Result<SweepResult, Failure> {
    let crit = ap_crit(&ctx.params, alpha, THRESHOLD_TOL)?.a_p_crit;
    let rows = run_indexed(ctx.jobs, ap_min_grid.len(), |i| {
        let margin = ap_min_grid[i];
        let a_p = crit + margin;
        let strategy = ControlStrategy { alpha, policy: Policy::OpenLoop { a_p } };
        let traj = integrate(&ctx.params, &strategy, &ctx.sim)?;
        let [t, ci, cr] = elimination_cells(&traj);
        Ok(vec![Cell::from(margin), Cell::from(a_p), t, ci, cr])
    });
    Ok(SweepResult {
        spec: SweepSpec {
            name: "fig6".to_string(),
            axes: vec![("ap_min".to_string(), ap_min_grid.to_vec())],
            strategy: format!("open loop, alpha = {alpha}, a_p = ap_crit + ap_min"),
            sim: SimTemplate::from(&ctx.sim),
            outputs: vec![
                "elimination_time".to_string(),
                "cost_integral".to_string(),
                "cost_release_total".to_string(),
            ],
        },
        columns: vec!["ap_min", "a_p", "elimination_time", "cost_integral", "cost_release_total"],
        rows: rows.into_iter().collect::<Result<_, _>>()?,
    })
}

/// Time to (near) elimination over a (killing rate × lure strength) grid;
/// cells that never eliminate within the horizon stay empty.
pub fn fig7_min_time_grid(
    ctx: &ExperimentContext,
    alpha_grid: &[f64],
    ap_grid: &[f64],
) -> Result<SweepResult, Failure> {
    let n = alpha_grid.len() * ap_grid.len();
    let rows = run_indexed(ctx.jobs, n, |idx| {
        let alpha = alpha_grid[idx / ap_grid.len()];
        let a_p = ap_grid[idx % ap_grid.len()];
        let strategy = ControlStrategy { alpha, policy: Policy::OpenLoop { a_p } };
        let traj = integrate(&ctx.params, &strategy, &ctx.sim)?;
        Ok(vec![Cell::from(alpha), Cell::from(a_p), Cell::from(traj.elimination_time)])
    });
    Ok(SweepResult {
        spec: SweepSpec {
            name: "fig7".to_string(),
            axes: vec![
                ("alpha".to_string(), alpha_grid.to_vec()),
                ("a_p".to_string(), ap_grid.to_vec()),
            ],
            strategy: "open loop from the wild equilibrium".to_string(),
            sim: SimTemplate::from(&ctx.sim),
            outputs: vec!["elimination_time".to_string()],
        },
        columns: vec!["alpha", "a_p", "elimination_time"],
        rows: rows.into_iter().collect::<Result<_, _>>()?,
    })
}

/// Default lure axis for the minimal-time grid: from the critical amount at
/// full killing up to five times the critical amount without killing.
pub fn fig7_default_ap_grid(ctx: &ExperimentContext, points: usize) -> Result<Vec<f64>, Failure> {
    let hi = 5.0 * ap_crit(&ctx.params, 0.0, THRESHOLD_TOL)?.a_p_crit;
    let lo = ap_crit(&ctx.params, 1.0, THRESHOLD_TOL)?.a_p_crit;
    Ok(linspace(lo, hi, points))
}

/// The extinction gain curve `k*(α)`.
pub fn fig8_k_star_curve(
    ctx: &ExperimentContext,
    alpha_grid: &[f64],
) -> Result<SweepResult, Failure> {
    let rows = alpha_grid
        .iter()
        .map(|&alpha| vec![Cell::from(alpha), Cell::from(k_star(&ctx.params, alpha))])
        .collect();
    Ok(SweepResult {
        spec: SweepSpec {
            name: "fig8".to_string(),
            axes: vec![("alpha".to_string(), alpha_grid.to_vec())],
            strategy: "feedback-gain threshold (no simulation)".to_string(),
            sim: SimTemplate::from(&ctx.sim),
            outputs: vec!["k_star".to_string()],
        },
        columns: vec!["alpha", "k_star"],
        rows,
    })
}

/// Sampled closed-loop phase portraits in the (male, female) plane for a
/// gain below and a gain above the extinction threshold, several killing
/// rates each. Long format: one row per recorded instant per run.
pub fn fig9_phase_portraits(
    ctx: &ExperimentContext,
    alpha_list: &[f64],
    k_below: f64,
    k_above: f64,
) -> Result<SweepResult, Failure> {
    let mut runs: Vec<(f64, f64)> = Vec::new();
    for &alpha in alpha_list {
        runs.push((alpha, k_below));
    }
    for &alpha in alpha_list {
        runs.push((alpha, k_above));
    }
    let results = run_indexed(ctx.jobs, runs.len(), |i| {
        let (alpha, k) = runs[i];
        let strategy = ControlStrategy {
            alpha,
            policy: Policy::ClosedLoopSampled { k, period: FORTNIGHT },
        };
        let traj = integrate(&ctx.params, &strategy, &ctx.sim)?;
        // attractor the analysis predicts for this gain (None = extinction)
        let target = regular_closed_loop_equilibrium(&ctx.params, alpha, k)?
            .map(|r| r.coords)
            .unwrap_or(State::ZERO);
        Ok((alpha, k, traj, target))
    });
    let mut rows = Vec::new();
    for r in results {
        let (alpha, k, traj, target) = r?;
        for s in &traj.samples {
            rows.push(vec![
                Cell::from(alpha),
                Cell::from(k),
                Cell::from(s.t),
                Cell::from(s.state.m),
                Cell::from(s.state.females()),
                Cell::from(target.m),
                Cell::from(target.females()),
            ]);
        }
    }
    Ok(SweepResult {
        spec: SweepSpec {
            name: "fig9".to_string(),
            axes: vec![
                ("alpha".to_string(), alpha_list.to_vec()),
                ("k".to_string(), vec![k_below, k_above]),
            ],
            strategy: format!(
                "sampled closed loop, period {FORTNIGHT} d, gains {k_below} and {k_above}"
            ),
            sim: SimTemplate::from(&ctx.sim),
            outputs: vec!["m".to_string(), "f".to_string()],
        },
        columns: vec!["alpha", "k", "t", "m", "f", "target_m", "target_f"],
        rows,
    })
}

/// Lure strength needed to start closed-loop control: `k*(α)·A*` with `A*`
/// the receptive females of the wild equilibrium (its whole female count is
/// emitted alongside).
pub fn fig10_closed_initial_amount(
    ctx: &ExperimentContext,
    alpha_grid: &[f64],
) -> Result<SweepResult, Failure> {
    let e1 = equilibrium_e1(&ctx.params);
    if !e1.exists {
        return Err(Failure::precondition(
            "the wild equilibrium does not exist for these parameters".to_string(),
        ));
    }
    let rows = alpha_grid
        .iter()
        .map(|&alpha| {
            let ks = k_star(&ctx.params, alpha);
            vec![
                Cell::from(alpha),
                Cell::from(ks),
                Cell::from(ks * e1.coords.a),
                Cell::from(ks * e1.coords.females()),
            ]
        })
        .collect();
    Ok(SweepResult {
        spec: SweepSpec {
            name: "fig10".to_string(),
            axes: vec![("alpha".to_string(), alpha_grid.to_vec())],
            strategy: "closed-loop initial lure k*(alpha)·A* (no simulation)".to_string(),
            sim: SimTemplate::from(&ctx.sim),
            outputs: vec!["ap_initial_a".to_string(), "ap_initial_f".to_string()],
        },
        columns: vec!["alpha", "k_star", "ap_initial_a", "ap_initial_f"],
        rows,
    })
}

/// Sampled closed-loop totals for assessments every `2n` weeks with the
/// gain one unit above the extinction threshold, `A_p = (k*(α)+1)·A(t_j)`.
pub fn fig11_closed_sampled_totals(
    ctx: &ExperimentContext,
    alpha_grid: &[f64],
    n_grid: &[u32],
) -> Result<SweepResult, Failure> {
    let cells: Vec<(f64, u32)> = alpha_grid
        .iter()
        .flat_map(|&a| n_grid.iter().map(move |&n| (a, n)))
        .collect();
    let rows = run_indexed(ctx.jobs, cells.len(), |i| {
        let (alpha, n) = cells[i];
        let period = FORTNIGHT * n as f64;
        let gain = k_star(&ctx.params, alpha) + 1.0;
        let strategy =
            ControlStrategy { alpha, policy: Policy::ClosedLoopSampled { k: gain, period } };
        let traj = integrate(&ctx.params, &strategy, &ctx.sim)?;
        let [t, ci, cr] = elimination_cells(&traj);
        Ok(vec![Cell::from(alpha), Cell::from(n as f64), Cell::from(period), t, ci, cr])
    });
    Ok(SweepResult {
        spec: SweepSpec {
            name: "fig11".to_string(),
            axes: vec![
                ("alpha".to_string(), alpha_grid.to_vec()),
                ("n".to_string(), n_grid.iter().map(|&n| n as f64).collect()),
            ],
            strategy: "sampled closed loop, gain k*(alpha)+1, period 14·n days".to_string(),
            sim: SimTemplate::from(&ctx.sim),
            outputs: vec![
                "elimination_time".to_string(),
                "cost_integral".to_string(),
                "cost_release_total".to_string(),
            ],
        },
        columns: vec![
            "alpha",
            "n",
            "period",
            "elimination_time",
            "cost_integral",
            "cost_release_total",
        ],
        rows: rows.into_iter().collect::<Result<_, _>>()?,
    })
}

/// Mixed open/closed-loop totals: at each assessment the lure is
/// `min{A_p^crit(α) + 500, (k*(α)+1)·A(t_j)}`.
pub fn fig12_mixed_totals(
    ctx: &ExperimentContext,
    alpha_grid: &[f64],
    n_grid: &[u32],
) -> Result<SweepResult, Failure> {
    const AP_MIN: f64 = 500.0;
    let cells: Vec<(f64, u32)> = alpha_grid
        .iter()
        .flat_map(|&a| n_grid.iter().map(move |&n| (a, n)))
        .collect();
    let rows = run_indexed(ctx.jobs, cells.len(), |i| {
        let (alpha, n) = cells[i];
        let period = FORTNIGHT * n as f64;
        let cap = ap_crit(&ctx.params, alpha, THRESHOLD_TOL)?.a_p_crit + AP_MIN;
        let gain = k_star(&ctx.params, alpha);
        let strategy =
            ControlStrategy { alpha, policy: Policy::Mixed { a_p_cap: cap, k: gain, period } };
        let traj = integrate(&ctx.params, &strategy, &ctx.sim)?;
        let [t, ci, cr] = elimination_cells(&traj);
        Ok(vec![
            Cell::from(alpha),
            Cell::from(n as f64),
            Cell::from(period),
            Cell::from(cap),
            t,
            ci,
            cr,
        ])
    });
    Ok(SweepResult {
        spec: SweepSpec {
            name: "fig12".to_string(),
            axes: vec![
                ("alpha".to_string(), alpha_grid.to_vec()),
                ("n".to_string(), n_grid.iter().map(|&n| n as f64).collect()),
            ],
            strategy: format!(
                "mixed control, cap ap_crit(alpha)+{AP_MIN}, gain k*(alpha), period 14·n days"
            ),
            sim: SimTemplate::from(&ctx.sim),
            outputs: vec![
                "elimination_time".to_string(),
                "cost_integral".to_string(),
                "cost_release_total".to_string(),
            ],
        },
        columns: vec![
            "alpha",
            "n",
            "period",
            "a_p_cap",
            "elimination_time",
            "cost_integral",
            "cost_release_total",
        ],
        rows: rows.into_iter().collect::<Result<_, _>>()?,
    })
}

pub const SWEEP_NAMES: &[&str] =
    &["fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12"];

/// Dispatches a sweep by name using the config's grid overrides (or the
/// built-in defaults).
pub fn run_sweep(
    name: &str,
    ctx: &ExperimentContext,
    overrides: &crate::config::SweepOverrides,
) -> Result<SweepResult, Failure> {
    let alpha_grid = |default: Vec<f64>| overrides.alpha_grid.clone().unwrap_or(default);
    let n_grid = |default: Vec<u32>| overrides.n_grid.clone().unwrap_or(default);
    match name {
        "fig5" => fig5_open_ap_crit(ctx, &alpha_grid(default_alpha_grid(21))),
        "fig6" => {
            let grid = overrides.ap_min_grid.clone().unwrap_or(vec![100.0, 500.0, 1000.0]);
            fig6_open_totals(ctx, overrides.alpha.unwrap_or(0.5), &grid)
        }
        "fig7" => {
            let ap = match &overrides.ap_grid {
                Some(g) => g.clone(),
                None => fig7_default_ap_grid(ctx, 21)?,
            };
            fig7_min_time_grid(ctx, &alpha_grid(default_alpha_grid(21)), &ap)
        }
        "fig8" => fig8_k_star_curve(ctx, &alpha_grid(default_alpha_grid(101))),
        "fig9" => {
            let alphas = alpha_grid(vec![0.0, 0.1, 0.2]);
            let k_above = overrides
                .k_above
                .unwrap_or_else(|| derived_quantities(&ctx.params).n_m);
            fig9_phase_portraits(ctx, &alphas, overrides.k_below.unwrap_or(2.5), k_above)
        }
        "fig10" => fig10_closed_initial_amount(ctx, &alpha_grid(default_alpha_grid(21))),
        "fig11" => {
            fig11_closed_sampled_totals(ctx, &alpha_grid(default_alpha_grid(11)), &n_grid((1..=6).collect()))
        }
        "fig12" => {
            fig12_mixed_totals(ctx, &alpha_grid(default_alpha_grid(11)), &n_grid((1..=6).collect()))
        }
        other => Err(Failure::config(format!(
            "unknown sweep {other:?}; available: {SWEEP_NAMES:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ExperimentContext {
        ExperimentContext::new(
            ModelParams::table1(),
            SimulationConfig { t_max: 3000.0, ..Default::default() },
            1,
        )
    }

    #[test]
    fn fig8_rows_match_grid() {
        let r = fig8_k_star_curve(&ctx(), &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(r.rows.len(), 3);
        // k*(0) = N_M − 1
        let q = derived_quantities(&ModelParams::table1());
        match r.rows[0][1] {
            Cell::Num(v) => assert!((v - (q.n_m - 1.0)).abs() < 1e-12),
            _ => panic!("expected a number"),
        }
    }

    #[test]
    fn fig5_single_point_and_decrease() {
        let one = fig5_open_ap_crit(&ctx(), &[0.3]).unwrap();
        assert_eq!(one.rows.len(), 1);
        let r = fig5_open_ap_crit(&ctx(), &[0.0, 0.5, 1.0]).unwrap();
        let col = |row: &Vec<Cell>, j: usize| match row[j] {
            Cell::Num(v) => v,
            _ => panic!("expected a number"),
        };
        for cols in [1, 3] {
            // both thresholds strictly decrease with the killing rate
            assert!(col(&r.rows[0], cols) > col(&r.rows[1], cols));
            assert!(col(&r.rows[1], cols) > col(&r.rows[2], cols));
        }
        // the comparison-system fold dominates the scarcity fold
        for row in &r.rows {
            assert!(col(row, 3) > col(row, 1));
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let serial = fig5_open_ap_crit(&ctx(), &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let parallel_ctx = ExperimentContext { jobs: 4, ..ctx() };
        let parallel = fig5_open_ap_crit(&parallel_ctx, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert_eq!(serial.rows, parallel.rows);
    }

    #[test]
    fn unknown_sweep_is_config_error() {
        let err =
            run_sweep("fig99", &ctx(), &crate::config::SweepOverrides::default()).unwrap_err();
        assert_eq!(err.code, 2);
    }
}
