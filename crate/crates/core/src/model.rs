//! Biological parameters, state space, and the switched vector fields of the
//! natural and trap-controlled systems.
//!
//! The natural dynamics read
//!
//! ```text
//! M' = r·ρ·U·e^{−σ(M+A+U)} − μ·M
//! A' = (1−r)·ρ·U·e^{−σ(M+A+U)} − ν·min{γM/A, 1}·A + η·U − δ·A
//! U' = ν·min{γM/A, 1}·A − (η+δ)·U
//! ```
//!
//! Traps add a lure strength `A_p` (false females) and a male-killing rate
//! `α`: the mating fraction becomes `min{γM/(A_p+A), 1}` and males gain the
//! removal term `α·A_p/(A_p+A)·M`. Setting `(A_p, α) = (0, 0)` recovers the
//! natural system exactly.
//!
//! All functions here are pure and total on the nonnegative orthant; the two
//! 0/0 corners are pinned by convention (see [`mating_fraction`] and the
//! male-killing term in [`rhs`]), chosen so that no input can produce a
//! division fault and the limits along trajectories are respected.

use crate::error::CoreError;
use crate::math::{exp, ln};
use alloc::format;
use alloc::string::String;
use core::ops::{Add, Mul, Sub};

/// The eight biological constants of the model.
///
/// Units: rates are per day, `sigma` is per individual, `r` and `gamma` are
/// dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Primary sex ratio: proportion of eggs that become males, in (0,1).
    pub r: f64,
    /// Mean eggs laid per fertilized female per day.
    pub rho: f64,
    /// Egg-to-adult survival density parameter in the Ricker factor
    /// `e^{−σ(M+A+U)}`.
    pub sigma: f64,
    /// Male mortality rate (1/mean male lifespan).
    pub mu: f64,
    /// Female mortality rate (1/mean female lifespan).
    pub delta: f64,
    /// Mean number of females one male can fertilize, ≥ 1.
    pub gamma: f64,
    /// Effective mating rate: receptive females become egg-laying after
    /// 1/ν days when males are abundant.
    pub nu: f64,
    /// Post-oviposition return rate: egg-laying females become receptive
    /// again after 1/η days.
    pub eta: f64,
}

impl ModelParams {
    /// Field-study parameter set for *D. citri* on Valencia sweet orange.
    pub fn table1() -> Self {
        ModelParams {
            r: 0.41,
            rho: 6.352,
            sigma: 0.001,
            mu: 0.021,
            delta: 0.023,
            gamma: 1.2,
            nu: 0.25,
            eta: 1.0,
        }
    }

    /// Validated constructor; rejects out-of-domain values.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        r: f64,
        rho: f64,
        sigma: f64,
        mu: f64,
        delta: f64,
        gamma: f64,
        nu: f64,
        eta: f64,
    ) -> Result<Self, CoreError> {
        let p = ModelParams { r, rho, sigma, mu, delta, gamma, nu, eta };
        p.validate()?;
        Ok(p)
    }

    /// Checks all hard invariants: strict positivity, `0 < r < 1`, `γ ≥ 1`.
    pub fn validate(&self) -> Result<(), CoreError> {
        let fields = [
            ("r", self.r),
            ("rho", self.rho),
            ("sigma", self.sigma),
            ("mu", self.mu),
            ("delta", self.delta),
            ("gamma", self.gamma),
            ("nu", self.nu),
            ("eta", self.eta),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if self.r >= 1.0 {
            return Err(CoreError::InvalidParameter(format!(
                "r must lie strictly inside (0,1), got {}",
                self.r
            )));
        }
        if self.gamma < 1.0 {
            return Err(CoreError::InvalidParameter(format!(
                "gamma must be at least 1, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Soft checks that are biologically expected but not required by any
    /// formula. Currently: males are not expected to outlive females
    /// (`μ ≥ δ`).
    pub fn warnings(&self) -> alloc::vec::Vec<String> {
        let mut w = alloc::vec::Vec::new();
        if self.mu < self.delta {
            w.push(format!(
                "mu = {} < delta = {}: males modeled as outliving females",
                self.mu, self.delta
            ));
        }
        w
    }
}

/// Population state `(M, A, U)`: males, receptive females, fertilized
/// females.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub m: f64,
    pub a: f64,
    pub u: f64,
}

impl State {
    pub const ZERO: State = State { m: 0.0, a: 0.0, u: 0.0 };

    pub fn new(m: f64, a: f64, u: f64) -> Self {
        State { m, a, u }
    }

    /// Total adult population M + A + U.
    pub fn total(&self) -> f64 {
        self.m + self.a + self.u
    }

    /// Total female population A + U.
    pub fn females(&self) -> f64 {
        self.a + self.u
    }

    /// Max-norm over the three components.
    pub fn max_norm(&self) -> f64 {
        self.m.abs().max(self.a.abs()).max(self.u.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite() && self.a.is_finite() && self.u.is_finite()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.m >= 0.0 && self.a >= 0.0 && self.u >= 0.0
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.m, self.a, self.u]
    }
}

impl Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        State::new(self.m + rhs.m, self.a + rhs.a, self.u + rhs.u)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        State::new(self.m - rhs.m, self.a - rhs.a, self.u - rhs.u)
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, s: f64) -> State {
        State::new(self.m * s, self.a * s, self.u * s)
    }
}

/// Trap control inputs: lure strength (false females) and male-killing rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInputs {
    /// Lure strength `A_p ≥ 0`, in equivalent mating-available females.
    pub a_p: f64,
    /// Probability `α ∈ [0,1]` that a trap-attracted male is removed.
    pub alpha: f64,
}

impl ControlInputs {
    /// No control: recovers the natural system exactly.
    pub const NONE: ControlInputs = ControlInputs { a_p: 0.0, alpha: 0.0 };

    pub fn new(a_p: f64, alpha: f64) -> Result<Self, CoreError> {
        if !a_p.is_finite() || a_p < 0.0 {
            return Err(CoreError::InvalidInput(format!(
                "lure strength must be finite and nonnegative, got {a_p}"
            )));
        }
        if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
            return Err(CoreError::InvalidInput(format!(
                "male-killing rate must lie in [0,1], got {alpha}"
            )));
        }
        Ok(ControlInputs { a_p, alpha })
    }
}

/// Which side of the switching plane `γM = A + A_p` a smooth field belongs
/// to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// `γM > A + A_p`: every receptive female finds a mate.
    Abundance,
    /// `γM < A + A_p`: only the fraction `γM/(A_p+A)` of receptive females
    /// mates.
    Scarcity,
}

/// Fraction of receptive females that get fertilized: `min{γm/(a_p+a), 1}`.
///
/// At `a_p + a = 0` the fraction is defined as 1. Any finite value would do —
/// the term is only ever consumed multiplied by `a = 0` — but a fixed
/// convention keeps evaluation branch-free and fault-free.
pub fn mating_fraction(m: f64, a: f64, a_p: f64, gamma: f64) -> f64 {
    let demand = a_p + a;
    if demand <= 0.0 {
        return 1.0;
    }
    let ratio = gamma * m / demand;
    if ratio < 1.0 {
        ratio
    } else {
        1.0
    }
}

/// Male removal rate by traps: `α·a_p/(a_p+a)`, with the `a_p = 0` corner
/// pinned to 0 (the limit along `a_p = 0`).
fn killing_rate(a: f64, control: ControlInputs) -> f64 {
    if control.a_p == 0.0 {
        0.0
    } else {
        control.alpha * control.a_p / (control.a_p + a)
    }
}

fn check_state(state: State) -> Result<(), CoreError> {
    if !state.is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "state has non-finite components: ({}, {}, {})",
            state.m, state.a, state.u
        )));
    }
    Ok(())
}

/// Natural vector field (no traps), written out directly.
///
/// This duplicates `rhs` at zero control on purpose: the reduction property
/// "controlled field at (0,0) equals the natural field bit-for-bit" is a
/// testable contract between two code paths rather than a tautology.
pub fn rhs_natural(params: &ModelParams, state: State) -> Result<State, CoreError> {
    check_state(state)?;
    let p = params;
    let survival = exp(-p.sigma * state.total());
    let recruits = p.rho * state.u * survival;
    let mated = p.nu * mating_fraction(state.m, state.a, 0.0, p.gamma) * state.a;
    Ok(State::new(
        p.r * recruits - p.mu * state.m,
        (1.0 - p.r) * recruits - mated + p.eta * state.u - p.delta * state.a,
        mated - (p.eta + p.delta) * state.u,
    ))
}

/// Controlled vector field in continuous min-form; the single right-hand
/// side integrated by the simulator.
pub fn rhs(params: &ModelParams, control: ControlInputs, state: State) -> Result<State, CoreError> {
    check_state(state)?;
    let p = params;
    let survival = exp(-p.sigma * state.total());
    let recruits = p.rho * state.u * survival;
    let mated = p.nu * mating_fraction(state.m, state.a, control.a_p, p.gamma) * state.a;
    Ok(State::new(
        p.r * recruits - killing_rate(state.a, control) * state.m - p.mu * state.m,
        (1.0 - p.r) * recruits - mated + p.eta * state.u - p.delta * state.a,
        mated - (p.eta + p.delta) * state.u,
    ))
}

/// Male-abundance field: the controlled system with the mating fraction
/// pinned at 1. Callable anywhere, including off its region of validity.
pub fn rhs_abundance(
    params: &ModelParams,
    control: ControlInputs,
    state: State,
) -> Result<State, CoreError> {
    check_state(state)?;
    let p = params;
    let survival = exp(-p.sigma * state.total());
    let recruits = p.rho * state.u * survival;
    let mated = p.nu * state.a;
    Ok(State::new(
        p.r * recruits - killing_rate(state.a, control) * state.m - p.mu * state.m,
        (1.0 - p.r) * recruits - mated + p.eta * state.u - p.delta * state.a,
        mated - (p.eta + p.delta) * state.u,
    ))
}

/// Male-scarcity field: the controlled system with the mating fraction in
/// ratio form `γM/(A_p+A)`; the 0/0 corner follows [`mating_fraction`].
pub fn rhs_scarcity(
    params: &ModelParams,
    control: ControlInputs,
    state: State,
) -> Result<State, CoreError> {
    check_state(state)?;
    let p = params;
    let survival = exp(-p.sigma * state.total());
    let recruits = p.rho * state.u * survival;
    let demand = control.a_p + state.a;
    // ratio form without the min clamp; convention 1 at the 0/0 corner
    let fraction = if demand <= 0.0 { 1.0 } else { p.gamma * state.m / demand };
    let mated = p.nu * fraction * state.a;
    Ok(State::new(
        p.r * recruits - killing_rate(state.a, control) * state.m - p.mu * state.m,
        (1.0 - p.r) * recruits - mated + p.eta * state.u - p.delta * state.a,
        mated - (p.eta + p.delta) * state.u,
    ))
}

/// Feedback-substituted fields with lure strength tied to the receptive
/// females, `A_p = k·A`. The male-killing factor collapses to the constant
/// `α·k/(k+1)` and the scarcity mating term to `γν/(k+1)·M`; both are the
/// limits of the open-loop expressions along `A_p = k·A` and stay valid at
/// `A = 0`.
pub fn rhs_closed_loop(
    params: &ModelParams,
    k: f64,
    alpha: f64,
    region: Region,
    state: State,
) -> Result<State, CoreError> {
    check_state(state)?;
    let p = params;
    let survival = exp(-p.sigma * state.total());
    let recruits = p.rho * state.u * survival;
    let kill = alpha * k / (k + 1.0);
    let mated = match region {
        Region::Abundance => p.nu * state.a,
        Region::Scarcity => p.gamma * p.nu / (k + 1.0) * state.m,
    };
    Ok(State::new(
        p.r * recruits - (kill + p.mu) * state.m,
        (1.0 - p.r) * recruits - mated + p.eta * state.u - p.delta * state.a,
        mated - (p.eta + p.delta) * state.u,
    ))
}

/// Signed distance to the switching plane: `γM − (A + A_p)`.
///
/// Positive in the male-abundance region, negative in male scarcity, zero on
/// the plane.
pub fn switching_value(state: State, a_p: f64, gamma: f64) -> f64 {
    gamma * state.m - (state.a + a_p)
}

/// Carrying capacity of the Ricker comparison equation,
/// `P̂ = ln(ρ/min{μ,δ})/σ`; the total population can never settle above it.
///
/// Returns 0 for degenerate parameters (`ρ ≤ min{μ,δ}`), see
/// [`population_cap_is_degenerate`].
pub fn population_cap(params: &ModelParams) -> f64 {
    let floor_rate = params.mu.min(params.delta);
    if params.rho <= floor_rate {
        return 0.0;
    }
    ln(params.rho / floor_rate) / params.sigma
}

/// True when the population cap degenerates to 0 because reproduction cannot
/// outpace the slower mortality (`ρ ≤ min{μ,δ}`).
pub fn population_cap_is_degenerate(params: &ModelParams) -> bool {
    params.rho <= params.mu.min(params.delta)
}
