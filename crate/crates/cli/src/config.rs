//! Scenario configuration: JSON documents with fail-closed parsing
//! (unknown keys are rejected everywhere).
//!
//! A full document looks like
//!
//! ```json
//! {
//!   "params": {"preset": "table1"},
//!   "strategy": {"alpha": 0.5, "policy": {"type": "open_loop", "a_p": 500.0}},
//!   "sim": {"initial": [1519.0, 1590.0, 383.0], "t_max": 5000.0},
//!   "sweep": {"alpha_grid": [0.0, 0.5, 1.0]}
//! }
//! ```
//!
//! Every section is optional: `params` defaults to the `table1` preset,
//! `strategy` to no control, `sim` to the solver defaults. Policies:
//! `open_loop {a_p}`, `closed_loop {k}`, `closed_loop_sampled {k,
//! period_days}`, and `mixed {k, period_days, a_p_cap | a_p_min}` (with
//! `a_p_min` the cap is the open-loop critical lure plus that margin).

use psyllid_core::model::ModelParams;
use psyllid_core::sim::{ControlStrategy, Policy, SimulationConfig};
use psyllid_core::thresholds::ap_crit;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const PRESETS: &[&str] = &["table1"];

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PresetRef {
    pub preset: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitParams {
    pub r: f64,
    pub rho: f64,
    pub sigma: f64,
    pub mu: f64,
    pub delta: f64,
    pub gamma: f64,
    pub nu: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ParamsSpec {
    Preset(PresetRef),
    Explicit(ExplicitParams),
}

impl Default for ParamsSpec {
    fn default() -> Self {
        ParamsSpec::Preset(PresetRef { preset: "table1".to_string() })
    }
}

impl ParamsSpec {
    pub fn resolve(&self) -> Result<ModelParams, Failure> {
        match self {
            ParamsSpec::Preset(p) => match p.preset.as_str() {
                "table1" => Ok(ModelParams::table1()),
                other => Err(Failure::config(format!(
                    "unknown preset {other:?}; available: {PRESETS:?}"
                ))),
            },
            ParamsSpec::Explicit(e) => {
                ModelParams::new(e.r, e.rho, e.sigma, e.mu, e.delta, e.gamma, e.nu, e.eta)
                    .map_err(|err| Failure::config(format!("invalid params: {err}")))
            }
        }
    }

    pub fn preset_name(&self) -> Option<&str> {
        match self {
            ParamsSpec::Preset(p) => Some(&p.preset),
            ParamsSpec::Explicit(_) => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    OpenLoop {
        a_p: f64,
    },
    ClosedLoop {
        k: f64,
    },
    ClosedLoopSampled {
        k: f64,
        period_days: f64,
    },
    Mixed {
        k: f64,
        period_days: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a_p_cap: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a_p_min: Option<f64>,
    },
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::OpenLoop { a_p: 0.0 }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub policy: PolicySpec,
}

impl StrategySpec {
    /// Builds the runtime strategy; a `mixed` policy given as a margin above
    /// the critical lure resolves the threshold here.
    pub fn resolve(&self, params: &ModelParams) -> Result<ControlStrategy, Failure> {
        let policy = match &self.policy {
            PolicySpec::OpenLoop { a_p } => Policy::OpenLoop { a_p: *a_p },
            PolicySpec::ClosedLoop { k } => Policy::ClosedLoopContinuous { k: *k },
            PolicySpec::ClosedLoopSampled { k, period_days } => {
                Policy::ClosedLoopSampled { k: *k, period: *period_days }
            }
            PolicySpec::Mixed { k, period_days, a_p_cap, a_p_min } => {
                let cap = match (a_p_cap, a_p_min) {
                    (Some(cap), None) => *cap,
                    (None, Some(margin)) => {
                        let crit = ap_crit(params, self.alpha, 1e-9).map_err(Failure::from)?;
                        crit.a_p_crit + margin
                    }
                    _ => {
                        return Err(Failure::config(
                            "mixed policy needs exactly one of a_p_cap or a_p_min".to_string(),
                        ))
                    }
                };
                Policy::Mixed { a_p_cap: cap, k: *k, period: *period_days }
            }
        };
        let strategy = ControlStrategy { alpha: self.alpha, policy };
        strategy
            .validate()
            .map_err(|e| Failure::config(format!("invalid strategy: {e}")))?;
        Ok(strategy)
    }
}

fn default_initial() -> [f64; 3] {
    [1519.0, 1590.0, 383.0]
}
fn default_t_max() -> f64 {
    5000.0
}
fn default_rtol() -> f64 {
    1e-8
}
fn default_atol() -> f64 {
    1e-10
}
fn default_eps() -> f64 {
    0.1
}
fn default_record_dt() -> f64 {
    1.0
}
fn default_switch_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_initial")]
    pub initial: [f64; 3],
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_eps")]
    pub elimination_eps: f64,
    #[serde(default = "default_record_dt")]
    pub record_dt: f64,
    #[serde(default = "default_switch_tol")]
    pub switch_tol: f64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            initial: default_initial(),
            t_max: default_t_max(),
            rtol: default_rtol(),
            atol: default_atol(),
            elimination_eps: default_eps(),
            record_dt: default_record_dt(),
            switch_tol: default_switch_tol(),
        }
    }
}

impl SimSpec {
    pub fn resolve(&self) -> Result<SimulationConfig, Failure> {
        let config = SimulationConfig {
            initial: psyllid_core::State::new(self.initial[0], self.initial[1], self.initial[2]),
            t_max: self.t_max,
            rtol: self.rtol,
            atol: self.atol,
            elimination_eps: self.elimination_eps,
            record_dt: self.record_dt,
            switch_tol: self.switch_tol,
            max_steps: 10_000_000,
        };
        config
            .validate()
            .map_err(|e| Failure::config(format!("invalid sim config: {e}")))?;
        Ok(config)
    }
}

/// Optional grid overrides for the figure sweeps; anything omitted falls
/// back to the built-in defaults.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap_min_grid: Option<Vec<f64>>,
    /// Fixed killing rate for the open-loop totals sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Feedback gains for the phase-portrait sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_below: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_above: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub strategy: StrategySpec,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub sweep: SweepOverrides,
}

impl ScenarioConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::config(format!("invalid config: {e}")))
    }
}
