//! Serializable report shapes for the `equilibria`, `thresholds`, and
//! `simulate` subcommands, plus their human-readable rendering.

use psyllid_core::analysis::{
    DerivedQuantities, EquilibriumLabel, EquilibriumReport, PwsClass, Stability, StabilityReport,
};
use psyllid_core::model::{switching_value, ModelParams};
use psyllid_core::sim::Trajectory;
use psyllid_core::thresholds::ThresholdResult;
use serde::Serialize;

use crate::output::{fmt12, Cell};

pub fn label_str(label: EquilibriumLabel) -> &'static str {
    match label {
        EquilibriumLabel::E0 => "E0",
        EquilibriumLabel::E1 => "E1",
        EquilibriumLabel::E2 => "E2",
        EquilibriumLabel::E1POpen => "E1P_open",
        EquilibriumLabel::E1PClosed => "E1P_closed",
        EquilibriumLabel::E2PClosed => "E2P_closed",
    }
}

pub fn stability_str(s: Stability) -> &'static str {
    match s {
        Stability::LocallyAsymptoticallyStable => "LAS",
        Stability::UnstableSaddle => "unstable-saddle",
        Stability::NotApplicable => "not-applicable",
    }
}

pub fn pws_str(p: PwsClass) -> &'static str {
    match p {
        PwsClass::Regular => "regular",
        PwsClass::Virtual => "virtual",
        PwsClass::OnSwitchingPlane => "on-switching-plane",
        PwsClass::NotApplicable => "not-applicable",
    }
}

#[derive(Debug, Serialize)]
pub struct StabilityJson {
    pub verdict: &'static str,
    /// Eigenvalues as (re, im) pairs.
    pub eigenvalues: Vec<[f64; 2]>,
    /// Characteristic-cubic coefficients (c1, c2, c3).
    pub routh_hurwitz: [f64; 3],
    /// Tests c1 > 0, c3 > 0, c1·c2 − c3 > 0.
    pub rh_conditions: [bool; 3],
    pub region: &'static str,
}

impl StabilityJson {
    pub fn from(r: &StabilityReport) -> Self {
        StabilityJson {
            verdict: stability_str(r.verdict),
            eigenvalues: r.eigenvalues.iter().map(|e| [e.re, e.im]).collect(),
            routh_hurwitz: [r.routh_hurwitz.0, r.routh_hurwitz.1, r.routh_hurwitz.2],
            rh_conditions: r.rh_conditions,
            region: match r.region {
                psyllid_core::model::Region::Abundance => "abundance",
                psyllid_core::model::Region::Scarcity => "scarcity",
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EquilibriumJson {
    pub label: &'static str,
    pub exists: bool,
    pub condition: String,
    pub coords: [f64; 3],
    pub residual: f64,
    pub pws_class: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_scarcity: Option<StabilityJson>,
}

impl EquilibriumJson {
    pub fn from(r: &EquilibriumReport) -> Self {
        EquilibriumJson {
            label: label_str(r.label),
            exists: r.exists,
            condition: r.condition.clone(),
            coords: r.coords.as_array(),
            residual: r.residual,
            pws_class: pws_str(r.pws_class),
            stability: r.stability.as_ref().map(StabilityJson::from),
            stability_scarcity: r.stability_scarcity.as_ref().map(StabilityJson::from),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DerivedJson {
    pub n_m: f64,
    pub n_f: f64,
    pub theta_m: f64,
    pub vartheta: f64,
    pub p_hat: f64,
}

impl DerivedJson {
    pub fn from(q: &DerivedQuantities) -> Self {
        DerivedJson {
            n_m: q.n_m,
            n_f: q.n_f,
            theta_m: q.theta_m,
            vartheta: q.vartheta,
            p_hat: q.p_hat,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EquilibriaDocument {
    pub derived: DerivedJson,
    pub warnings: Vec<String>,
    pub equilibria: Vec<EquilibriumJson>,
}

/// Flat CSV form of the equilibrium table (one row per equilibrium).
pub fn equilibria_csv_rows(reports: &[EquilibriumReport]) -> Vec<Vec<Cell>> {
    reports
        .iter()
        .map(|r| {
            vec![
                Cell::from(label_str(r.label)),
                Cell::from(if r.exists { "true" } else { "false" }),
                Cell::from(r.coords.m),
                Cell::from(r.coords.a),
                Cell::from(r.coords.u),
                Cell::from(r.residual),
                Cell::from(pws_str(r.pws_class)),
                Cell::from(r.stability.map(|s| stability_str(s.verdict)).unwrap_or("not-applicable")),
            ]
        })
        .collect()
}

pub const EQUILIBRIA_CSV_HEADER: &[&str] =
    &["label", "exists", "m", "a", "u", "residual", "pws_class", "stability"];

pub fn render_equilibria_text(doc: &EquilibriaDocument) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "offspring numbers: N_M = {}, N_F = {}; theta_M = {}; vartheta = {}; P_hat = {}\n",
        fmt12(doc.derived.n_m),
        fmt12(doc.derived.n_f),
        fmt12(doc.derived.theta_m),
        fmt12(doc.derived.vartheta),
        fmt12(doc.derived.p_hat),
    ));
    for w in &doc.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    for e in &doc.equilibria {
        s.push_str(&format!(
            "{:<11} exists={:<5} coords=({}, {}, {}) residual={} pws={}",
            e.label,
            e.exists,
            fmt12(e.coords[0]),
            fmt12(e.coords[1]),
            fmt12(e.coords[2]),
            fmt12(e.residual),
            e.pws_class,
        ));
        if let Some(st) = &e.stability {
            s.push_str(&format!(" stability={}", st.verdict));
        }
        if let Some(st) = &e.stability_scarcity {
            s.push_str(&format!(" (scarcity field: {})", st.verdict));
        }
        s.push('\n');
        s.push_str(&format!("            {}\n", e.condition));
    }
    s
}

#[derive(Debug, Serialize)]
pub struct ThresholdJson {
    pub a_p_crit: f64,
    pub tangency_point: f64,
    pub residuals: [f64; 2],
    pub iterations: u32,
    pub bracket: [f64; 2],
}

impl ThresholdJson {
    pub fn from(r: &ThresholdResult) -> Self {
        ThresholdJson {
            a_p_crit: r.a_p_crit,
            tangency_point: r.tangency_point,
            residuals: [r.residuals.0, r.residuals.1],
            iterations: r.iterations,
            bracket: [r.bracket.0, r.bracket.1],
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ThresholdRowJson {
    pub alpha: f64,
    pub k_star: f64,
    pub scarcity_fold: ThresholdJson,
    pub comparison_fold: ThresholdJson,
}

pub const THRESHOLDS_CSV_HEADER: &[&str] = &[
    "alpha",
    "k_star",
    "ap_crit",
    "tangency_a",
    "ap_crit_residual",
    "ap_crit_aux",
    "tangency_m",
    "ap_crit_aux_residual",
];

pub fn thresholds_csv_row(r: &ThresholdRowJson) -> Vec<Cell> {
    vec![
        Cell::from(r.alpha),
        Cell::from(r.k_star),
        Cell::from(r.scarcity_fold.a_p_crit),
        Cell::from(r.scarcity_fold.tangency_point),
        Cell::from(r.scarcity_fold.residuals[0]),
        Cell::from(r.comparison_fold.a_p_crit),
        Cell::from(r.comparison_fold.tangency_point),
        Cell::from(r.comparison_fold.residuals[0]),
    ]
}

#[derive(Debug, Serialize)]
pub struct StepStatsJson {
    pub accepted: u64,
    pub rejected: u64,
    pub clamped: u64,
    pub rhs_evals: u64,
}

#[derive(Debug, Serialize)]
pub struct SwitchEventJson {
    pub t: f64,
    pub direction: i8,
}

#[derive(Debug, Serialize)]
pub struct SimSummaryJson {
    pub elimination_time: Option<f64>,
    pub final_state: [f64; 3],
    pub pheromone_cost_integral: f64,
    pub pheromone_release_total: f64,
    pub elimination_eps: f64,
    pub switch_events: Vec<SwitchEventJson>,
    pub step_stats: StepStatsJson,
}

impl SimSummaryJson {
    pub fn from(traj: &Trajectory) -> Self {
        SimSummaryJson {
            elimination_time: traj.elimination_time,
            final_state: traj.samples.last().map(|s| s.state.as_array()).unwrap_or([0.0; 3]),
            pheromone_cost_integral: traj.pheromone_cost_integral,
            pheromone_release_total: traj.pheromone_release_total,
            elimination_eps: traj.elimination_eps,
            switch_events: traj
                .switch_events
                .iter()
                .map(|e| SwitchEventJson { t: e.t, direction: e.direction })
                .collect(),
            step_stats: StepStatsJson {
                accepted: traj.step_stats.accepted,
                rejected: traj.step_stats.rejected,
                clamped: traj.step_stats.clamped,
                rhs_evals: traj.step_stats.rhs_evals,
            },
        }
    }
}

pub const TRAJECTORY_CSV_HEADER: &[&str] = &["t", "m", "a", "u", "f", "a_p", "region_sign"];

/// Trajectory rows: time, compartments, female total, active lure, and the
/// sign of the switching value (+1 abundance, −1 scarcity, 0 on plane).
pub fn trajectory_csv_rows(traj: &Trajectory, params: &ModelParams) -> Vec<Vec<Cell>> {
    traj.samples
        .iter()
        .map(|s| {
            let sv = switching_value(s.state, s.a_p, params.gamma);
            let sign = if sv > 0.0 {
                1.0
            } else if sv < 0.0 {
                -1.0
            } else {
                0.0
            };
            vec![
                Cell::from(s.t),
                Cell::from(s.state.m),
                Cell::from(s.state.a),
                Cell::from(s.state.u),
                Cell::from(s.state.females()),
                Cell::from(s.a_p),
                Cell::from(sign),
            ]
        })
        .collect()
}
