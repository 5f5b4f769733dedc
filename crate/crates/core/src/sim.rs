//! Event-aware integration of the controlled system under open-loop,
//! closed-loop, sampled, and mixed trap policies.
//!
//! The integrator is an embedded Dormand–Prince 5(4) pair with
//! proportional–integral step control, local extrapolation, FSAL, and the
//! standard quartic dense output. The continuous min-form field is
//! integrated throughout; the two events handled on top of it are
//!
//! - crossings of the switching plane `γM = A + A_p`, localized by
//!   bisection on the dense output and landed on exactly (the field is
//!   continuous there but its derivative jumps, so stopping the step at the
//!   plane keeps every step inside one smooth piece and preserves the
//!   order);
//! - elimination, declared when `‖(M,A,U)‖∞` first drops below the
//!   configured threshold.
//!
//! Sampled policies additionally force step boundaries at the sampling
//! instants `t_j = j·period`, where the lure strength is re-set from the
//! current receptive-female count (the `j = 0` release happens at `t = 0`).
//!
//! Small negative components (below the absolute tolerance) left by
//! roundoff are clamped to zero after a step is accepted; larger
//! undershoots reject the step. Everything is deterministic: identical
//! inputs produce identical trajectories.

use crate::error::CoreError;
use crate::math::{ceil, powf, sqrt};
use crate::model::{rhs, switching_value, ControlInputs, ModelParams, State};
use alloc::vec::Vec;

/// Trap operation policy. `k` is the feedback gain tying the lure strength
/// to the receptive females; `period` is the population-assessment interval
/// in days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Constant lure strength.
    OpenLoop { a_p: f64 },
    /// Lure strength tracks the receptive females continuously:
    /// `A_p(t) = k·A(t)`.
    ClosedLoopContinuous { k: f64 },
    /// Lure strength re-set at each sampling instant: `A_p = k·A(t_j)`,
    /// held constant in between.
    ClosedLoopSampled { k: f64, period: f64 },
    /// Open-loop/closed-loop combination, re-set at each sampling instant:
    /// `A_p = min{a_p_cap, (k+1)·A(t_j)}`.
    Mixed { a_p_cap: f64, k: f64, period: f64 },
}

/// A policy plus the male-killing rate of the traps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlStrategy {
    pub alpha: f64,
    pub policy: Policy,
}

impl ControlStrategy {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(CoreError::InvalidInput(alloc::format!(
                "male-killing rate must lie in [0,1], got {}",
                self.alpha
            )));
        }
        let bad = |msg: alloc::string::String| Err(CoreError::InvalidInput(msg));
        match self.policy {
            Policy::OpenLoop { a_p } => {
                if !a_p.is_finite() || a_p < 0.0 {
                    return bad(alloc::format!("open-loop lure must be >= 0, got {a_p}"));
                }
            }
            Policy::ClosedLoopContinuous { k } => {
                if !k.is_finite() || k < 0.0 {
                    return bad(alloc::format!("feedback gain must be >= 0, got {k}"));
                }
            }
            Policy::ClosedLoopSampled { k, period } => {
                if !k.is_finite() || k < 0.0 {
                    return bad(alloc::format!("feedback gain must be >= 0, got {k}"));
                }
                if !period.is_finite() || period <= 0.0 {
                    return bad(alloc::format!("sampling period must be > 0, got {period}"));
                }
            }
            Policy::Mixed { a_p_cap, k, period } => {
                if !a_p_cap.is_finite() || a_p_cap < 0.0 {
                    return bad(alloc::format!("lure cap must be >= 0, got {a_p_cap}"));
                }
                if !k.is_finite() || k < 0.0 {
                    return bad(alloc::format!("feedback gain must be >= 0, got {k}"));
                }
                if !period.is_finite() || period <= 0.0 {
                    return bad(alloc::format!("sampling period must be > 0, got {period}"));
                }
            }
        }
        Ok(())
    }

    fn period(&self) -> Option<f64> {
        match self.policy {
            Policy::ClosedLoopSampled { period, .. } | Policy::Mixed { period, .. } => {
                Some(period)
            }
            _ => None,
        }
    }
}

/// Lure strength a policy commands given the relevant receptive-female
/// count: the current one for the continuous policy, the one measured at
/// the latest sampling instant for sampled policies.
pub fn active_ap(strategy: &ControlStrategy, _t: f64, a_sample: f64) -> f64 {
    match strategy.policy {
        Policy::OpenLoop { a_p } => a_p,
        Policy::ClosedLoopContinuous { k } => k * a_sample,
        Policy::ClosedLoopSampled { k, .. } => k * a_sample,
        Policy::Mixed { a_p_cap, k, .. } => a_p_cap.min((k + 1.0) * a_sample),
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub initial: State,
    /// Time horizon in days.
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Population max-norm below which the pest counts as eliminated.
    pub elimination_eps: f64,
    /// Output sample cadence in days.
    pub record_dt: f64,
    /// Time tolerance for switching-plane localization, in days.
    pub switch_tol: f64,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            initial: State::new(1519.0, 1590.0, 383.0),
            t_max: 5000.0,
            rtol: 1e-8,
            atol: 1e-10,
            elimination_eps: 0.1,
            record_dt: 1.0,
            switch_tol: 1e-6,
            max_steps: 10_000_000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !self.initial.is_finite() || !self.initial.is_nonnegative() {
            return Err(CoreError::InvalidInput(alloc::format!(
                "initial state must be finite and nonnegative, got ({}, {}, {})",
                self.initial.m,
                self.initial.a,
                self.initial.u
            )));
        }
        for (name, v) in [
            ("t_max", self.t_max),
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("elimination_eps", self.elimination_eps),
            ("record_dt", self.record_dt),
            ("switch_tol", self.switch_tol),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(CoreError::InvalidInput(alloc::format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One recorded output point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: State,
    /// Lure strength in force at this instant.
    pub a_p: f64,
}

/// A crossing of the switching plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    pub t: f64,
    /// +1 entering male abundance, −1 entering male scarcity.
    pub direction: i8,
}

/// Integrator workload counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    /// Accepted steps on which a small negative component was clamped.
    pub clamped: u64,
    pub rhs_evals: u64,
}

/// Full result of one integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub switch_events: Vec<SwitchEvent>,
    pub elimination_time: Option<f64>,
    /// `∫ A_p(t) dt` up to elimination or the horizon (individual·days).
    pub pheromone_cost_integral: f64,
    /// Sum of lure strengths set at release events; per-day releases for the
    /// open loop, the time integral for the continuous policy.
    pub pheromone_release_total: f64,
    pub step_stats: StepStats,
    /// Elimination threshold this run used.
    pub elimination_eps: f64,
}

/// Pheromone spend of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSummary {
    pub integral: f64,
    pub release_total: f64,
}

/// Reads both pheromone cost metrics off a trajectory.
pub fn pheromone_accounting(trajectory: &Trajectory) -> CostSummary {
    CostSummary {
        integral: trajectory.pheromone_cost_integral,
        release_total: trajectory.pheromone_release_total,
    }
}

/// First time the population max-norm drops below `eps`.
///
/// For the threshold the run was integrated with, this is the localized
/// event time. For other thresholds the recorded samples are scanned and
/// the crossing is interpolated linearly between neighbors, so the answer
/// is only as sharp as the record cadence.
pub fn time_to_elimination(trajectory: &Trajectory, eps: f64) -> Option<f64> {
    if eps == trajectory.elimination_eps {
        return trajectory.elimination_time;
    }
    let mut prev: Option<&TrajectorySample> = None;
    for s in &trajectory.samples {
        let norm = s.state.max_norm();
        if norm < eps {
            if let Some(p) = prev {
                let n0 = p.state.max_norm();
                if n0 > eps {
                    let frac = (n0 - eps) / (n0 - norm);
                    return Some(p.t + frac * (s.t - p.t));
                }
            }
            return Some(s.t);
        }
        prev = Some(s);
    }
    None
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// 5th-order weights (also the last stage row: FSAL)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th- and 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense-output weights
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI step controller (standard Dormand–Prince settings).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const MAX_GROW: f64 = 10.0;
const MAX_SHRINK: f64 = 0.2;

/// Quartic interpolant over one accepted step.
#[derive(Debug, Clone, Copy)]
struct DenseSegment {
    t0: f64,
    h: f64,
    cont: [State; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> State {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        self.cont[0]
            + (self.cont[1] + (self.cont[2] + (self.cont[3] + self.cont[4] * s1) * s) * s1) * s
    }
}

struct StepOutcome {
    y_new: State,
    /// Normalized error; accept when ≤ 1.
    err: f64,
    k: [State; 7],
}

/// The simulation core: a DOPRI5 driver over the continuous min-form field
/// of the controlled system, with switching-plane localization, elimination
/// detection, sampled lure updates, and pheromone accounting.
///
/// Terminates at `t_max` or at elimination, whichever comes first.
pub fn integrate(
    params: &ModelParams,
    strategy: &ControlStrategy,
    config: &SimulationConfig,
) -> Result<Trajectory, CoreError> {
    params.validate()?;
    strategy.validate()?;
    config.validate()?;

    let continuous_gain = match strategy.policy {
        Policy::ClosedLoopContinuous { k } => Some(k),
        _ => None,
    };

    let mut stats = StepStats::default();
    // held lure strength, shared with the field closure; for the continuous
    // policy the field ignores it and tracks k·A(t) directly
    let held_ap = core::cell::Cell::new(active_ap(strategy, 0.0, config.initial.a));
    let mut release_total = match strategy.policy {
        Policy::ClosedLoopSampled { .. } | Policy::Mixed { .. } => held_ap.get(),
        _ => 0.0,
    };

    let mut samples = Vec::new();
    let mut switch_events = Vec::new();
    let mut cost_integral = 0.0f64;

    let finish = |samples: Vec<TrajectorySample>,
                  switch_events: Vec<SwitchEvent>,
                  elimination_time: Option<f64>,
                  cost_integral: f64,
                  release_total: f64,
                  stats: StepStats| {
        let t_end = elimination_time.unwrap_or(config.t_max);
        let release_total = match strategy.policy {
            Policy::OpenLoop { a_p } => a_p * ceil(t_end),
            Policy::ClosedLoopContinuous { .. } => cost_integral,
            _ => release_total,
        };
        Trajectory {
            samples,
            switch_events,
            elimination_time,
            pheromone_cost_integral: cost_integral,
            pheromone_release_total: release_total,
            step_stats: stats,
            elimination_eps: config.elimination_eps,
        }
    };

    samples.push(TrajectorySample { t: 0.0, state: config.initial, a_p: held_ap.get() });
    if config.initial.max_norm() < config.elimination_eps {
        return Ok(finish(samples, switch_events, Some(0.0), 0.0, release_total, stats));
    }

    let eval_count = core::cell::Cell::new(0u64);
    let field = |t_: f64, y: State| -> Result<State, CoreError> {
        let _ = t_;
        eval_count.set(eval_count.get() + 1);
        let a_p = match continuous_gain {
            Some(k) => k * y.a.max(0.0),
            None => held_ap.get(),
        };
        rhs(params, ControlInputs { a_p, alpha: strategy.alpha }, y)
    };
    let plane = |y: State| -> f64 {
        let a_p = match continuous_gain {
            Some(k) => k * y.a.max(0.0),
            None => held_ap.get(),
        };
        switching_value(y, a_p, params.gamma)
    };

    let err_norm = |e: State, y: State, y_new: State| -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            let sc = config.atol + config.rtol * y.as_array()[i].abs().max(y_new.as_array()[i].abs());
            let r = e.as_array()[i] / sc;
            acc += r * r;
        }
        sqrt(acc / 3.0)
    };

    let step = |t: f64, y: State, k1: State, h: f64| -> Result<StepOutcome, CoreError> {
        let k2 = field(t + C2 * h, y + k1 * (A21 * h))?;
        let k3 = field(t + C3 * h, y + (k1 * A31 + k2 * A32) * h)?;
        let k4 = field(t + C4 * h, y + (k1 * A41 + k2 * A42 + k3 * A43) * h)?;
        let k5 = field(t + C5 * h, y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h)?;
        let k6 = field(
            t + h,
            y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h,
        )?;
        let y_new = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
        let k7 = field(t + h, y_new)?;
        let e = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        Ok(StepOutcome { y_new, err: err_norm(e, y, y_new), k: [k1, k2, k3, k4, k5, k6, k7] })
    };

    let dense_from = |t: f64, h: f64, y: State, y_new: State, k: &[State; 7]| -> DenseSegment {
        let ydiff = y_new - y;
        let bspl = k[0] * h - ydiff;
        DenseSegment {
            t0: t,
            h,
            cont: [
                y,
                ydiff,
                bspl,
                ydiff - k[6] * h - bspl,
                (k[0] * D1 + k[2] * D3 + k[3] * D4 + k[4] * D5 + k[5] * D6 + k[6] * D7) * h,
            ],
        }
    };

    // recorded states are reported on the nonnegative orthant; the quartic
    // interpolant may undershoot zero by roundoff near the floor
    let sanitize = |st: State| -> State {
        State::new(st.m.max(0.0), st.a.max(0.0), st.u.max(0.0))
    };

    // cost over [t0, t1] within one dense segment; exact for held lures,
    // 3-point Gauss for the continuous policy
    let cost_over = |seg: &DenseSegment, t0: f64, t1: f64| -> f64 {
        match continuous_gain {
            None => held_ap.get() * (t1 - t0),
            Some(k) => {
                const X: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
                const W0: f64 = 8.0 / 9.0;
                const W1: f64 = 5.0 / 9.0;
                let half = 0.5 * (t1 - t0);
                let mid = 0.5 * (t0 + t1);
                let a_at = |t: f64| seg.eval(t).a.max(0.0);
                k * half * (W0 * a_at(mid) + W1 * a_at(mid - half * X) + W1 * a_at(mid + half * X))
            }
        }
    };

    let mut t = 0.0f64;
    let mut y = config.initial;
    let mut k1 = field(t, y)?;
    let mut facold = 1e-4f64;
    let mut next_record = config.record_dt;
    let mut next_instant = strategy.period();
    let h_floor = 1e-12 * config.t_max;

    // initial step size: standard curvature probe
    let mut h = {
        let sc = |v: f64, w: f64| config.atol + config.rtol * v.abs().max(w.abs());
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..3 {
            let s = sc(y.as_array()[i], y.as_array()[i]);
            d0 += (y.as_array()[i] / s) * (y.as_array()[i] / s);
            d1 += (k1.as_array()[i] / s) * (k1.as_array()[i] / s);
        }
        let (d0, d1) = (sqrt(d0 / 3.0), sqrt(d1 / 3.0));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(config.t_max);
        let f1 = field(t + h0, y + k1 * h0)?;
        let mut d2 = 0.0;
        for i in 0..3 {
            let s = sc(y.as_array()[i], y.as_array()[i]);
            let r = (f1.as_array()[i] - k1.as_array()[i]) / s;
            d2 += r * r;
        }
        let d2 = sqrt(d2 / 3.0) / h0;
        let der = d1.max(d2);
        let h1 = if der <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { powf(0.01 / der, 0.2) };
        (100.0 * h0).min(h1).min(config.t_max)
    };

    let mut elimination_time: Option<f64> = None;
    // a localized plane crossing the current (shortened) trial step lands on
    let mut armed_event: Option<SwitchEvent> = None;

    'outer: while t < config.t_max {
        // a float residue below the step floor counts as arrival
        if config.t_max - t <= h_floor {
            break;
        }
        if stats.accepted + stats.rejected >= config.max_steps {
            return Err(CoreError::InternalConsistency(alloc::format!(
                "step budget exhausted at t = {t}"
            )));
        }
        // land exactly on the horizon and on sampling instants
        let mut target = config.t_max;
        if let Some(instant) = next_instant {
            target = target.min(instant);
        }
        if h > target - t {
            h = target - t;
        }
        if h < h_floor {
            return Err(CoreError::StepSizeUnderflow { t });
        }

        let out = step(t, y, k1, h)?;
        if !out.y_new.is_finite() {
            return Err(CoreError::NonFiniteState { t });
        }
        if out.err > 1.0 {
            stats.rejected += 1;
            armed_event = None;
            let fac11 = powf(out.err, EXPO1);
            h /= (fac11 / SAFETY).min(1.0 / MAX_SHRINK);
            continue;
        }

        // reject steps that dive visibly below zero; roundoff-level dips are
        // cleaned up after acceptance
        let clamp_limit = config.atol;
        let mut y_new = out.y_new;
        let arr = y_new.as_array();
        if arr.iter().any(|&v| v < -clamp_limit) {
            stats.rejected += 1;
            armed_event = None;
            h *= 0.5;
            continue;
        }

        let seg = dense_from(t, h, y, y_new, &out.k);

        // switching-plane crossing: shorten the step to land on the plane
        // so every accepted step stays inside one smooth piece; the
        // shortened re-take goes through the full error/event machinery
        if let Some(ev) = armed_event.take() {
            // this step was already shortened to end at the crossing
            switch_events.push(ev);
        } else {
            let s0 = plane(y);
            let s1 = plane(y_new);
            let plane_scale = (params.gamma * y.m).abs().max(y.a.abs()).max(1.0);
            if s0 * s1 < 0.0 && s0.abs() > 1e-12 * plane_scale {
                let mut lo = t;
                let mut hi = t + h;
                while hi - lo > config.switch_tol {
                    let mid = 0.5 * (lo + hi);
                    if plane(seg.eval(mid)) * s0 > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let t_event = 0.5 * (lo + hi);
                let direction = if s1 > 0.0 { 1 } else { -1 };
                let margin = h_floor.max(10.0 * config.switch_tol).max(1e-6 * h);
                if t_event - t > margin && (t + h) - t_event > margin {
                    armed_event = Some(SwitchEvent { t: t_event, direction });
                    stats.rejected += 1;
                    h = t_event - t;
                    continue;
                }
                // crossing hugs a step boundary: keep the step, log it
                switch_events.push(SwitchEvent { t: t_event, direction });
            }
        }

        // elimination inside this step
        let norm_end = y_new.max_norm();
        if norm_end < config.elimination_eps {
            let mut lo = t;
            let mut hi = t + h;
            for _ in 0..128 {
                if hi - lo <= 1e-9 * (1.0 + hi) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if seg.eval(mid).max_norm() >= config.elimination_eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_elim = 0.5 * (lo + hi);
            stats.accepted += 1;
            cost_integral += cost_over(&seg, t, t_elim);
            while next_record <= t_elim + 1e-12 && next_record <= config.t_max {
                let st = sanitize(seg.eval(next_record));
                let ap = match continuous_gain {
                    Some(k) => k * st.a.max(0.0),
                    None => held_ap.get(),
                };
                samples.push(TrajectorySample { t: next_record, state: st, a_p: ap });
                next_record += config.record_dt;
            }
            let st = sanitize(seg.eval(t_elim));
            let ap = match continuous_gain {
                Some(k) => k * st.a.max(0.0),
                None => held_ap.get(),
            };
            samples.push(TrajectorySample { t: t_elim, state: st, a_p: ap });
            elimination_time = Some(t_elim);
            break 'outer;
        }

        // accept
        stats.accepted += 1;
        cost_integral += cost_over(&seg, t, t + h);
        while next_record <= t + h + 1e-12 && next_record <= config.t_max {
            let st = sanitize(seg.eval(next_record.min(t + h)));
            let ap = match continuous_gain {
                Some(k) => k * st.a.max(0.0),
                None => held_ap.get(),
            };
            samples.push(TrajectorySample { t: next_record, state: st, a_p: ap });
            next_record += config.record_dt;
        }

        let mut clamped = false;
        let mut arr = y_new.as_array();
        for v in &mut arr {
            if *v < 0.0 {
                *v = 0.0;
                clamped = true;
            }
        }
        if clamped {
            stats.clamped += 1;
            y_new = State::new(arr[0], arr[1], arr[2]);
        }

        t += h;
        y = y_new;
        k1 = if clamped { field(t, y)? } else { out.k[6] };

        // lure update at a sampling instant
        if let Some(instant) = next_instant {
            if (t - instant).abs() <= 1e-9 * instant.max(1.0) {
                match strategy.policy {
                    Policy::ClosedLoopSampled { k, period } => {
                        held_ap.set(k * y.a);
                        next_instant = Some(instant + period);
                        release_total += held_ap.get();
                    }
                    Policy::Mixed { a_p_cap, k, period } => {
                        held_ap.set(a_p_cap.min((k + 1.0) * y.a));
                        next_instant = Some(instant + period);
                        release_total += held_ap.get();
                    }
                    _ => unreachable!("only sampled policies carry instants"),
                }
                k1 = field(t, y)?; // the field changed with the lure
            }
        }

        // PI controller for the next step
        let err = out.err.max(1e-10);
        let fac11 = powf(err, EXPO1);
        let fac = (fac11 / powf(facold, BETA) / SAFETY)
            .clamp(1.0 / MAX_GROW, 1.0 / MAX_SHRINK);
        h /= fac;
        facold = err.max(1e-4);
    }

    // ensure the final instant is recorded
    let t_end = elimination_time.unwrap_or(config.t_max.min(t));
    if samples.last().map(|s| s.t < t_end - 1e-12).unwrap_or(true) {
        let ap = match continuous_gain {
            Some(k) => k * y.a.max(0.0),
            None => held_ap.get(),
        };
        samples.push(TrajectorySample { t: t_end, state: y, a_p: ap });
    }

    stats.rhs_evals = eval_count.get();
    Ok(finish(samples, switch_events, elimination_time, cost_integral, release_total, stats))
}

/// A single Dormand–Prince step at a fixed size, without error control:
/// exposes the raw order of the method for convergence studies.
pub fn fixed_step(
    params: &ModelParams,
    control: ControlInputs,
    t: f64,
    y: State,
    h: f64,
) -> Result<State, CoreError> {
    let f = |tt: f64, yy: State| {
        let _ = tt;
        rhs(params, control, yy)
    };
    let k1 = f(t, y)?;
    let k2 = f(t + C2 * h, y + k1 * (A21 * h))?;
    let k3 = f(t + C3 * h, y + (k1 * A31 + k2 * A32) * h)?;
    let k4 = f(t + C4 * h, y + (k1 * A41 + k2 * A42 + k3 * A43) * h)?;
    let k5 = f(t + C5 * h, y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h)?;
    let k6 = f(t + h, y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h)?;
    Ok(y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h)
}
