//! Closed-form derived quantities, equilibria, Jacobians, and stability
//! classification of the natural and trap-controlled systems.
//!
//! Thresholds at a glance, for parameters `p` and controls `(A_p, α, k)`:
//!
//! - male/female basic offspring numbers `N_M = γrρν/(μ(δ+η))` and
//!   `N_F = (1−r)ρν/(δ(δ+η+ν))`; the positive equilibria of the abundance
//!   and scarcity fields exist above 1;
//! - scarcity existence ratio `θ_M = (1−r)μ(δ+η)/(γrδν)`: the scarcity
//!   equilibrium also needs `θ_M > 1`, i.e. the mean female-egg output
//!   `(1−r)ρ/δ` must exceed `N_M`;
//! - standardized mortality `ϑ = (1−r)μ + rδ`, the opposite-sex-weighted
//!   mean mortality appearing in all equilibrium coordinates;
//! - feedback offspring number `Ñ_M(k,α) = rργν/((δ+η)(k(α+μ)+μ))` and the
//!   extinction gain `k*(α) = μ(N_M−1)/(α+μ)`: a feedback gain above `k*`
//!   drives `Ñ_M` below 1 and with it the pest to local extinction.
//!
//! Stability is decided by eigenvalues of the analytic Jacobian, with the
//! Routh–Hurwitz coefficients of the characteristic cubic computed alongside
//! as corroborating diagnostics; the two verdicts must agree or the
//! operation reports an internal-consistency error.

use crate::error::CoreError;
use crate::linalg::{Eigenvalue, Matrix3};
use crate::math::{exp, ln, sqrt};
use crate::model::{
    population_cap, rhs_abundance, rhs_closed_loop, rhs_scarcity, switching_value, ControlInputs,
    ModelParams, Region, State,
};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Relative tolerance for "two algebraic routes must agree" checks.
const CROSS_CHECK_TOL: f64 = 1e-12;
/// Relative band around stability boundaries inside which verdict
/// disagreements are treated as marginal rather than as errors.
const MARGINAL_TOL: f64 = 1e-9;

/// Threshold quantities derived from the parameters alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// Male basic offspring number `N_M`.
    pub n_m: f64,
    /// Female basic offspring number `N_F`.
    pub n_f: f64,
    /// Scarcity existence ratio `θ_M`.
    pub theta_m: f64,
    /// Standardized mortality `ϑ = (1−r)μ + rδ` (per day).
    pub vartheta: f64,
    /// Ricker population cap `P̂` (individuals).
    pub p_hat: f64,
}

/// Mean numbers of same-sex offspring per individual and the standardized
/// mortality; every existence and stability condition reduces to these.
pub fn derived_quantities(params: &ModelParams) -> DerivedQuantities {
    let p = params;
    DerivedQuantities {
        n_m: p.gamma * p.r * p.rho * p.nu / (p.mu * (p.delta + p.eta)),
        n_f: (1.0 - p.r) * p.rho * p.nu / (p.delta * (p.delta + p.eta + p.nu)),
        theta_m: (1.0 - p.r) * p.mu * (p.delta + p.eta) / (p.gamma * p.r * p.delta * p.nu),
        vartheta: (1.0 - p.r) * p.mu + p.r * p.delta,
        p_hat: population_cap(p),
    }
}

/// Offspring number of the feedback-controlled scarcity system,
/// `Ñ_M(k, α) = rργν/((δ+η)(k(α+μ)+μ))`; equals `N_M` exactly at
/// `k = 0` and decreases in both `k` and `α` (for `k > 0`).
pub fn offspring_number_feedback(params: &ModelParams, k: f64, alpha: f64) -> f64 {
    let p = params;
    p.r * p.rho * p.gamma * p.nu / ((p.delta + p.eta) * (k * (alpha + p.mu) + p.mu))
}

/// Extinction gain threshold `k*(α) = μ(N_M − 1)/(α + μ)`: feedback gains
/// above it guarantee local extinction of the pest. Returns 0 when
/// `N_M ≤ 1` (no control needed).
pub fn k_star(params: &ModelParams, alpha: f64) -> f64 {
    k_star_from_offspring_number(derived_quantities(params).n_m, params.mu, alpha)
}

/// `k*(α)` from an externally supplied male offspring number.
pub fn k_star_from_offspring_number(n_m: f64, mu: f64, alpha: f64) -> f64 {
    if n_m <= 1.0 {
        return 0.0;
    }
    mu * (n_m - 1.0) / (alpha + mu)
}

/// Which equilibrium a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumLabel {
    /// Extinction state (0, 0, 0).
    E0,
    /// Positive equilibrium of the natural male-abundance field.
    E1,
    /// Positive equilibrium of the natural male-scarcity field.
    E2,
    /// Abundance equilibrium under open-loop control (constant lure).
    E1POpen,
    /// Abundance equilibrium under proportional feedback.
    E1PClosed,
    /// Scarcity equilibrium under proportional feedback.
    E2PClosed,
}

/// Control context an equilibrium was computed under; selects the Jacobian
/// used by [`stability_verdict`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquilibriumControl {
    Natural,
    OpenLoop { a_p: f64, alpha: f64 },
    ClosedLoop { k: f64, alpha: f64 },
}

/// Position of an equilibrium relative to the switching plane of the full
/// piecewise-smooth system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PwsClass {
    /// Lies inside the region where its defining field governs the dynamics.
    Regular,
    /// Lies outside that region; the full system never realizes it.
    Virtual,
    /// Lies on the switching plane itself.
    OnSwitchingPlane,
    /// Not meaningful (e.g. the equilibrium does not exist).
    NotApplicable,
}

/// Stability verdict for an equilibrium of a smooth constituent field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    LocallyAsymptoticallyStable,
    UnstableSaddle,
    NotApplicable,
}

/// Eigenvalues plus the Routh–Hurwitz data of the characteristic cubic
/// `λ³ + c1λ² + c2λ + c3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub verdict: Stability,
    pub eigenvalues: [Eigenvalue; 3],
    /// Coefficients (c1, c2, c3).
    pub routh_hurwitz: (f64, f64, f64),
    /// The three Routh–Hurwitz tests: c1 > 0, c3 > 0, c1·c2 − c3 > 0.
    pub rh_conditions: [bool; 3],
    /// Region whose Jacobian was analyzed.
    pub region: Region,
    /// Eigenvalue-sign and Routh–Hurwitz verdicts agree (always true for a
    /// successfully returned report; kept for serialization).
    pub verdicts_agree: bool,
}

/// Full description of one equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub label: EquilibriumLabel,
    pub coords: State,
    pub exists: bool,
    /// Human-readable trace of the existence condition and its value.
    pub condition: String,
    /// Max-norm residual of the defining field at `coords` (0 when the
    /// equilibrium does not exist).
    pub residual: f64,
    pub control: EquilibriumControl,
    pub pws_class: PwsClass,
    /// Filled by [`stability_verdict`]; `None` until then.
    pub stability: Option<StabilityReport>,
    /// Secondary verdict for the origin, which belongs to both constituent
    /// fields (primary = abundance field, secondary = scarcity field).
    pub stability_scarcity: Option<StabilityReport>,
}

fn residual_for(
    params: &ModelParams,
    control: EquilibriumControl,
    region: Region,
    x: State,
) -> f64 {
    let d = match control {
        EquilibriumControl::Natural => match region {
            Region::Abundance => rhs_abundance(params, ControlInputs::NONE, x),
            Region::Scarcity => rhs_scarcity(params, ControlInputs::NONE, x),
        },
        EquilibriumControl::OpenLoop { a_p, alpha } => {
            let c = ControlInputs { a_p, alpha };
            match region {
                Region::Abundance => rhs_abundance(params, c, x),
                Region::Scarcity => rhs_scarcity(params, c, x),
            }
        }
        EquilibriumControl::ClosedLoop { k, alpha } => rhs_closed_loop(params, k, alpha, region, x),
    };
    d.map(|s| s.max_norm()).unwrap_or(f64::INFINITY)
}

/// Region an equilibrium's defining field lives in.
pub fn native_region(label: EquilibriumLabel) -> Region {
    match label {
        EquilibriumLabel::E0 | EquilibriumLabel::E1 | EquilibriumLabel::E1POpen
        | EquilibriumLabel::E1PClosed => Region::Abundance,
        EquilibriumLabel::E2 | EquilibriumLabel::E2PClosed => Region::Scarcity,
    }
}

/// The extinction equilibrium. Always exists; sits on the switching plane.
pub fn equilibrium_e0(params: &ModelParams) -> EquilibriumReport {
    EquilibriumReport {
        label: EquilibriumLabel::E0,
        coords: State::ZERO,
        exists: true,
        condition: String::from("always exists"),
        residual: residual_for(params, EquilibriumControl::Natural, Region::Abundance, State::ZERO),
        control: EquilibriumControl::Natural,
        pws_class: PwsClass::OnSwitchingPlane,
        stability: None,
        stability_scarcity: None,
    }
}

/// Positive equilibrium of the natural abundance field; exists iff
/// `N_F > 1`. The total population at it equals `ln(N_F)/σ`.
pub fn equilibrium_e1(params: &ModelParams) -> EquilibriumReport {
    let q = derived_quantities(params);
    let p = params;
    let exists = q.n_f > 1.0;
    let coords = if exists {
        let scale = ln(q.n_f) / p.sigma;
        let fem = (1.0 - p.r) * p.mu / q.vartheta;
        State::new(
            p.r * p.delta / q.vartheta * scale,
            fem * (p.delta + p.eta) / (p.delta + p.eta + p.nu) * scale,
            fem * p.nu / (p.delta + p.eta + p.nu) * scale,
        )
    } else {
        State::ZERO
    };
    EquilibriumReport {
        label: EquilibriumLabel::E1,
        coords,
        exists,
        condition: format!("requires N_F > 1; N_F = {:.6}", q.n_f),
        residual: if exists {
            residual_for(params, EquilibriumControl::Natural, Region::Abundance, coords)
        } else {
            0.0
        },
        control: EquilibriumControl::Natural,
        pws_class: PwsClass::NotApplicable,
        stability: None,
        stability_scarcity: None,
    }
}

/// Positive equilibrium of the natural scarcity field; exists iff
/// `N_M > 1` and `θ_M > 1`. Computed through two independent closed forms
/// (one in terms of `θ_M`, one in terms of the standardized mortality) that
/// must agree to 1e-12 relative.
pub fn equilibrium_e2(params: &ModelParams) -> Result<EquilibriumReport, CoreError> {
    let q = derived_quantities(params);
    let p = params;
    let exists = q.n_m > 1.0 && q.theta_m > 1.0;
    let condition = format!(
        "requires N_M > 1 and theta_M > 1 (equivalently (1-r)rho/delta > N_M); \
         N_M = {:.6}, theta_M = {:.6}",
        q.n_m, q.theta_m
    );
    let coords = if exists {
        let scale = ln(q.n_m) / p.sigma;
        let gn = p.gamma * p.nu;
        let denom = gn * q.theta_m + p.eta + p.delta;
        let via_theta = State::new(
            (p.delta + p.eta) / denom * scale,
            gn * (q.theta_m - 1.0) / denom * scale,
            gn / denom * scale,
        );
        let via_mortality = State::new(
            p.r * p.delta / q.vartheta * scale,
            p.mu / q.vartheta * p.delta / p.rho * ((1.0 - p.r) * p.rho / p.delta - q.n_m) * scale,
            p.mu / q.vartheta * p.delta / p.rho * q.n_m * scale,
        );
        // agreement is measured against the equilibrium scale: the receptive
        // females vanish as theta_M -> 1 and their closed forms subtract
        // nearly equal quantities there, so a componentwise bound is not
        // achievable in double precision
        let scale = via_theta.max_norm().max(via_mortality.max_norm());
        for (a, b) in via_theta.as_array().iter().zip(via_mortality.as_array()) {
            if (a - b).abs() > CROSS_CHECK_TOL * scale {
                return Err(CoreError::InternalConsistency(format!(
                    "the two closed forms of the scarcity equilibrium disagree: {a} vs {b}"
                )));
            }
        }
        via_theta
    } else {
        State::ZERO
    };
    Ok(EquilibriumReport {
        label: EquilibriumLabel::E2,
        coords,
        exists,
        condition,
        residual: if exists {
            residual_for(params, EquilibriumControl::Natural, Region::Scarcity, coords)
        } else {
            0.0
        },
        control: EquilibriumControl::Natural,
        pws_class: PwsClass::NotApplicable,
        stability: None,
        stability_scarcity: None,
    })
}

/// PWS classification of the two natural positive equilibria.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwsClassification {
    pub e1: PwsClass,
    pub e2: PwsClass,
}

/// Classifies the natural positive equilibria against the natural switching
/// plane `γM = A` by the ordering of the offspring numbers: both sit on the
/// plane iff `N_M = N_F > 1` (where they coincide), the abundance
/// equilibrium is regular iff `N_M > N_F`, the scarcity one iff
/// `N_M < N_F`. Equality is detected within 1e-9 relative.
pub fn classify_pws(params: &ModelParams) -> PwsClassification {
    let q = derived_quantities(params);
    let near_equal = (q.n_m - q.n_f).abs() <= MARGINAL_TOL * q.n_m.abs().max(q.n_f.abs());
    let e1 = if q.n_f <= 1.0 {
        PwsClass::NotApplicable
    } else if near_equal {
        PwsClass::OnSwitchingPlane
    } else if q.n_m > q.n_f {
        PwsClass::Regular
    } else {
        PwsClass::Virtual
    };
    let e2 = if q.n_m <= 1.0 || q.theta_m <= 1.0 {
        PwsClass::NotApplicable
    } else if near_equal {
        PwsClass::OnSwitchingPlane
    } else if q.n_m < q.n_f {
        PwsClass::Regular
    } else {
        PwsClass::Virtual
    };
    PwsClassification { e1, e2 }
}

/// Analytic Jacobian of the selected open-loop controlled field.
///
/// With zero control this is the Jacobian of the natural abundance or
/// scarcity field. The trap terms contribute `∂/∂A` entries through the
/// attraction ratio `A_p/(A_p+A)`; both collapse to 0 at `A_p = 0`,
/// matching the conventions of the fields themselves.
pub fn jacobian(
    params: &ModelParams,
    control: ControlInputs,
    state: State,
    region: Region,
) -> Matrix3 {
    let p = params;
    let e = exp(-p.sigma * state.total());
    let r_sig = p.r * p.rho * p.sigma * state.u * e;
    let f_sig = (1.0 - p.r) * p.rho * p.sigma * state.u * e;
    let r_rec = p.r * p.rho * (1.0 - p.sigma * state.u) * e;
    let f_rec = (1.0 - p.r) * p.rho * (1.0 - p.sigma * state.u) * e;

    // d/dA of the attraction ratio A_p/(A_p+A) is −A_p/(A_p+A)²
    let (kill, kill_da) = if control.a_p == 0.0 {
        (0.0, 0.0)
    } else {
        let demand = control.a_p + state.a;
        (
            control.alpha * control.a_p / demand,
            -control.alpha * control.a_p / (demand * demand),
        )
    };

    let row_m = [
        -p.mu - kill - r_sig,
        -r_sig - kill_da * state.m,
        r_rec,
    ];

    match region {
        Region::Abundance => Matrix3([
            row_m,
            [-f_sig, -(p.nu + p.delta) - f_sig, p.eta + f_rec],
            [0.0, p.nu, -(p.eta + p.delta)],
        ]),
        Region::Scarcity => {
            // mating term ν·γM·A/(A_p+A): ratio A/(A_p+A) and its A-derivative
            let (ratio, ratio_da) = if control.a_p == 0.0 {
                (1.0, 0.0)
            } else {
                let demand = control.a_p + state.a;
                (state.a / demand, control.a_p / (demand * demand))
            };
            let mate_dm = p.nu * p.gamma * ratio;
            let mate_da = p.nu * p.gamma * state.m * ratio_da;
            Matrix3([
                row_m,
                [-mate_dm - f_sig, -p.delta - mate_da - f_sig, p.eta + f_rec],
                [mate_dm, mate_da, -(p.eta + p.delta)],
            ])
        }
    }
}

/// Analytic Jacobian of the feedback-substituted field `A_p = k·A`.
pub fn jacobian_closed_loop(
    params: &ModelParams,
    k: f64,
    alpha: f64,
    state: State,
    region: Region,
) -> Matrix3 {
    let p = params;
    let e = exp(-p.sigma * state.total());
    let r_sig = p.r * p.rho * p.sigma * state.u * e;
    let f_sig = (1.0 - p.r) * p.rho * p.sigma * state.u * e;
    let r_rec = p.r * p.rho * (1.0 - p.sigma * state.u) * e;
    let f_rec = (1.0 - p.r) * p.rho * (1.0 - p.sigma * state.u) * e;
    let kill = alpha * k / (k + 1.0);
    let row_m = [-p.mu - kill - r_sig, -r_sig, r_rec];
    match region {
        Region::Abundance => Matrix3([
            row_m,
            [-f_sig, -(p.nu + p.delta) - f_sig, p.eta + f_rec],
            [0.0, p.nu, -(p.eta + p.delta)],
        ]),
        Region::Scarcity => {
            let mate_dm = p.gamma * p.nu / (k + 1.0);
            Matrix3([
                row_m,
                [-mate_dm - f_sig, -p.delta - f_sig, p.eta + f_rec],
                [mate_dm, 0.0, -(p.eta + p.delta)],
            ])
        }
    }
}

/// Central finite-difference Jacobian of an arbitrary 3-component field;
/// diagnostic oracle for the analytic Jacobians.
pub fn fd_jacobian<F: Fn(State) -> State>(f: F, x: State, h_rel: f64) -> Matrix3 {
    let base = x.as_array();
    let mut cols = [[0.0; 3]; 3];
    for (j, col) in cols.iter_mut().enumerate() {
        let h = h_rel * base[j].abs().max(1.0);
        let mut plus = base;
        let mut minus = base;
        plus[j] += h;
        minus[j] -= h;
        let fp = f(State::new(plus[0], plus[1], plus[2]));
        let fm = f(State::new(minus[0], minus[1], minus[2]));
        let d = (fp - fm) * (0.5 / h);
        *col = d.as_array();
    }
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = cols[j][i];
        }
    }
    Matrix3(m)
}

fn stability_from_matrix(jac: &Matrix3, region: Region) -> Result<StabilityReport, CoreError> {
    let (c1, c2, c3) = jac.char_poly();
    let eigenvalues = jac.eigenvalues();

    let scale = eigenvalues.iter().map(|e| e.abs()).fold(1e-30, f64::max);
    let tol = MARGINAL_TOL * scale;
    let max_re = eigenvalues.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);

    let rh_conditions = [c1 > 0.0, c3 > 0.0, c1 * c2 - c3 > 0.0];
    let rh_stable = rh_conditions.iter().all(|&c| c);
    let eig_stable = max_re < 0.0;

    // Marginal when an eigenvalue or an RH quantity sits on its boundary.
    let rh_scale = c1.abs().max(c3.abs()).max((c1 * c2).abs()).max(1e-30);
    let marginal = max_re.abs() <= tol
        || c1.abs().min(c3.abs()).min((c1 * c2 - c3).abs()) <= MARGINAL_TOL * rh_scale;

    if rh_stable != eig_stable && !marginal {
        return Err(CoreError::InternalConsistency(format!(
            "Routh-Hurwitz verdict ({rh_stable}) and eigenvalue verdict ({eig_stable}) disagree; \
             c = ({c1}, {c2}, {c3}), max Re(lambda) = {max_re}"
        )));
    }

    let verdict = if eig_stable {
        Stability::LocallyAsymptoticallyStable
    } else {
        Stability::UnstableSaddle
    };
    Ok(StabilityReport {
        verdict,
        eigenvalues,
        routh_hurwitz: (c1, c2, c3),
        rh_conditions,
        region,
        verdicts_agree: true,
    })
}

/// Computes the stability of a reported equilibrium from the Jacobian of its
/// defining field, cross-validating eigenvalue signs against the
/// Routh–Hurwitz tests. For the origin both constituent fields are analyzed
/// (it belongs to both) and the report carries the scarcity verdict in
/// `stability_scarcity`.
pub fn stability_verdict(
    params: &ModelParams,
    report: &EquilibriumReport,
) -> Result<EquilibriumReport, CoreError> {
    if !report.exists {
        let mut out = report.clone();
        out.stability = None;
        out.stability_scarcity = None;
        return Ok(out);
    }
    let jac_for = |region: Region| match report.control {
        EquilibriumControl::Natural => {
            jacobian(params, ControlInputs::NONE, report.coords, region)
        }
        EquilibriumControl::OpenLoop { a_p, alpha } => {
            jacobian(params, ControlInputs { a_p, alpha }, report.coords, region)
        }
        EquilibriumControl::ClosedLoop { k, alpha } => {
            jacobian_closed_loop(params, k, alpha, report.coords, region)
        }
    };
    let mut out = report.clone();
    if report.label == EquilibriumLabel::E0 {
        out.stability = Some(stability_from_matrix(&jac_for(Region::Abundance), Region::Abundance)?);
        out.stability_scarcity =
            Some(stability_from_matrix(&jac_for(Region::Scarcity), Region::Scarcity)?);
    } else {
        let region = native_region(report.label);
        out.stability = Some(stability_from_matrix(&jac_for(region), region)?);
    }
    Ok(out)
}

/// Next-generation data at the origin of the feedback-controlled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgmReport {
    /// New-individual (fertility) Jacobian block.
    pub f: Matrix3,
    /// Transition/mortality Jacobian of the abundance field.
    pub v1: Matrix3,
    /// Transition/mortality Jacobian of the scarcity field.
    pub v2: Matrix3,
    /// Spectral radius of F·V1⁻¹, numerically computed; equals `N_F`.
    pub rho1: f64,
    /// Spectral radius of F·V2⁻¹, numerically computed; equals `Ñ_M(k,α)`.
    pub rho2: f64,
}

/// Builds the next-generation matrices of the feedback-controlled abundance
/// and scarcity fields at the origin, computes their spectral radii
/// numerically, and verifies them against the closed forms `N_F` and
/// `Ñ_M(k, α)` to 1e-12 relative.
pub fn ngm_builder(params: &ModelParams, k: f64, alpha: f64) -> Result<NgmReport, CoreError> {
    let p = params;
    let kill = alpha * k / (k + 1.0) + p.mu;
    let gk = p.gamma * p.nu / (k + 1.0);
    let f = Matrix3([
        [0.0, 0.0, p.r * p.rho],
        [0.0, 0.0, (1.0 - p.r) * p.rho],
        [0.0, 0.0, 0.0],
    ]);
    let v1 = Matrix3([
        [kill, 0.0, 0.0],
        [0.0, p.nu + p.delta, -p.eta],
        [0.0, -p.nu, p.eta + p.delta],
    ]);
    let v2 = Matrix3([
        [kill, 0.0, 0.0],
        [gk, p.delta, -p.eta],
        [-gk, 0.0, p.eta + p.delta],
    ]);
    let inv1 = v1
        .inverse()
        .ok_or_else(|| CoreError::InternalConsistency(String::from("V1 is singular")))?;
    let inv2 = v2
        .inverse()
        .ok_or_else(|| CoreError::InternalConsistency(String::from("V2 is singular")))?;
    let rho1 = f.mul(&inv1).spectral_radius();
    let rho2 = f.mul(&inv2).spectral_radius();

    let q = derived_quantities(p);
    let expected2 = offspring_number_feedback(p, k, alpha);
    for (got, want, name) in [(rho1, q.n_f, "rho(F V1^-1)"), (rho2, expected2, "rho(F V2^-1)")] {
        if (got - want).abs() > CROSS_CHECK_TOL * want.abs().max(1.0) {
            return Err(CoreError::InternalConsistency(format!(
                "{name} = {got} does not match its closed form {want}"
            )));
        }
    }
    Ok(NgmReport { f, v1, v2, rho1, rho2 })
}

fn classify_against_plane(coords: State, a_p: f64, gamma: f64, native: Region) -> PwsClass {
    let s = switching_value(coords, a_p, gamma);
    let scale = (gamma * coords.m).abs().max(coords.a.abs() + a_p).max(1.0);
    if s.abs() <= MARGINAL_TOL * scale {
        PwsClass::OnSwitchingPlane
    } else {
        let in_abundance = s > 0.0;
        let is_native = match native {
            Region::Abundance => in_abundance,
            Region::Scarcity => !in_abundance,
        };
        if is_native {
            PwsClass::Regular
        } else {
            PwsClass::Virtual
        }
    }
}

/// Abundance equilibrium under open-loop control; exists iff `N_F > 1`.
///
/// The receptive-female coordinate is the unique positive root of a
/// quadratic whose constant term is `−(μ+α)·A_p·ln(N_F)/σ ≤ 0`; the root is
/// extracted with the cancellation-free `q = −(b + sign(b)·√Δ)/2` form.
/// Trapping redistributes the population but leaves the total at
/// `ln(N_F)/σ`, and at `α = 0` or `A_p = 0` the wild equilibrium is
/// recovered exactly.
pub fn equilibrium_e1p_open(
    params: &ModelParams,
    alpha: f64,
    a_p: f64,
) -> Result<EquilibriumReport, CoreError> {
    let p = params;
    let q = derived_quantities(p);
    if !(0.0..=1.0).contains(&alpha) || a_p < 0.0 || !a_p.is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "need alpha in [0,1] and a_p >= 0, got alpha = {alpha}, a_p = {a_p}"
        )));
    }
    let exists = q.n_f > 1.0;
    let control = EquilibriumControl::OpenLoop { a_p, alpha };
    let condition = format!("requires N_F > 1; N_F = {:.6}", q.n_f);
    if !exists {
        return Ok(EquilibriumReport {
            label: EquilibriumLabel::E1POpen,
            coords: State::ZERO,
            exists,
            condition,
            residual: 0.0,
            control,
            pws_class: PwsClass::NotApplicable,
            stability: None,
            stability_scarcity: None,
        });
    }
    let scale = ln(q.n_f) / p.sigma;
    let turnover = (p.delta + p.nu + p.eta) / (p.delta + p.eta);
    let qa = turnover * q.vartheta / (1.0 - p.r);
    let qb = (q.vartheta / (1.0 - p.r) + alpha) * turnover * a_p - p.mu * scale;
    let qc = -(p.mu + alpha) * a_p * scale;

    let a_coord = if qc == 0.0 {
        // lure off: the quadratic degenerates to A(qa·A + qb) = 0
        -qb / qa
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        let root = -(qb + qb.signum() * sqrt(disc)) / 2.0;
        // roots are root/qa and qc/root; qc ≤ 0 makes exactly one positive
        let r1 = root / qa;
        if r1 > 0.0 {
            r1
        } else {
            qc / root
        }
    };
    let u_coord = p.nu / (p.delta + p.eta) * a_coord;
    let m_coord = scale - a_coord - u_coord;
    let coords = State::new(m_coord, a_coord, u_coord);
    Ok(EquilibriumReport {
        label: EquilibriumLabel::E1POpen,
        coords,
        exists,
        condition,
        residual: residual_for(p, control, Region::Abundance, coords),
        control,
        pws_class: classify_against_plane(coords, a_p, p.gamma, Region::Abundance),
        stability: None,
        stability_scarcity: None,
    })
}

/// Abundance equilibrium under proportional feedback `A_p = k·A`; exists iff
/// `N_F > 1` and reduces to the wild equilibrium at `k = 0` or `α = 0`.
/// Componentwise it never exceeds the wild equilibrium.
pub fn equilibrium_e1p_closed(
    params: &ModelParams,
    alpha: f64,
    k: f64,
) -> Result<EquilibriumReport, CoreError> {
    let p = params;
    let q = derived_quantities(p);
    if !(0.0..=1.0).contains(&alpha) || k < 0.0 || !k.is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "need alpha in [0,1] and k >= 0, got alpha = {alpha}, k = {k}"
        )));
    }
    let exists = q.n_f > 1.0;
    let control = EquilibriumControl::ClosedLoop { k, alpha };
    let condition = format!("requires N_F > 1; N_F = {:.6}", q.n_f);
    let coords = if exists {
        let scale = ln(q.n_f) / p.sigma;
        let removal = alpha * k + (k + 1.0) * p.mu;
        let denom = (k + 1.0) * p.r * p.delta + removal * (1.0 - p.r);
        let fem = (1.0 - p.r) * removal / denom;
        State::new(
            (k + 1.0) * p.r * p.delta / denom * scale,
            (p.eta + p.delta) / (p.nu + p.eta + p.delta) * fem * scale,
            p.nu / (p.nu + p.eta + p.delta) * fem * scale,
        )
    } else {
        State::ZERO
    };
    // feedback plane is γM = (k+1)·A
    let pws = if exists {
        classify_against_plane(coords, k * coords.a, p.gamma, Region::Abundance)
    } else {
        PwsClass::NotApplicable
    };
    Ok(EquilibriumReport {
        label: EquilibriumLabel::E1PClosed,
        coords,
        exists,
        condition,
        residual: if exists {
            residual_for(p, control, Region::Abundance, coords)
        } else {
            0.0
        },
        control,
        pws_class: pws,
        stability: None,
        stability_scarcity: None,
    })
}

/// Scarcity equilibrium under proportional feedback; exists iff
/// `Ñ_M(k, α) > 1`, i.e. `k < k*(α)`.
///
/// The coordinates take the same shape as the natural scarcity equilibrium
/// with `N_M → Ñ_M(k,α)`, `θ_M → θ̃_M(k,α) = (1−r)ρ/(δ·Ñ_M)` and the mating
/// coefficient `γν → γν/(k+1)` (the feedback dilutes male encounters); the
/// total population equals `ln(Ñ_M)/σ`.
pub fn equilibrium_e2p_closed(
    params: &ModelParams,
    alpha: f64,
    k: f64,
) -> Result<EquilibriumReport, CoreError> {
    let p = params;
    if !(0.0..=1.0).contains(&alpha) || k < 0.0 || !k.is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "need alpha in [0,1] and k >= 0, got alpha = {alpha}, k = {k}"
        )));
    }
    let n_feed = offspring_number_feedback(p, k, alpha);
    let exists = n_feed > 1.0;
    let control = EquilibriumControl::ClosedLoop { k, alpha };
    let condition = format!(
        "requires N_M(k, alpha) > 1, i.e. k < k*(alpha) = {:.6}; N_M(k, alpha) = {:.6}",
        k_star(p, alpha),
        n_feed
    );
    let coords = if exists {
        let scale = ln(n_feed) / p.sigma;
        let theta_feed = (1.0 - p.r) * p.rho / (p.delta * n_feed);
        let gk = p.gamma * p.nu / (k + 1.0);
        let denom = gk * theta_feed + p.eta + p.delta;
        State::new(
            (p.delta + p.eta) / denom * scale,
            gk * (theta_feed - 1.0) / denom * scale,
            gk / denom * scale,
        )
    } else {
        State::ZERO
    };
    let pws = if exists {
        classify_against_plane(coords, k * coords.a, p.gamma, Region::Scarcity)
    } else {
        PwsClass::NotApplicable
    };
    Ok(EquilibriumReport {
        label: EquilibriumLabel::E2PClosed,
        coords,
        exists,
        condition,
        residual: if exists {
            residual_for(p, control, Region::Scarcity, coords)
        } else {
            0.0
        },
        control,
        pws_class: pws,
        stability: None,
        stability_scarcity: None,
    })
}

/// The closed-loop equilibrium the full feedback-controlled system actually
/// realizes: whichever of the two positive closed-loop equilibria is regular
/// for the feedback switching plane `γM = (k+1)A`, or `None` when neither
/// exists or neither is regular (the origin then attracts).
pub fn regular_closed_loop_equilibrium(
    params: &ModelParams,
    alpha: f64,
    k: f64,
) -> Result<Option<EquilibriumReport>, CoreError> {
    let e1p = equilibrium_e1p_closed(params, alpha, k)?;
    if e1p.exists && e1p.pws_class == PwsClass::Regular {
        return Ok(Some(e1p));
    }
    let e2p = equilibrium_e2p_closed(params, alpha, k)?;
    if e2p.exists && matches!(e2p.pws_class, PwsClass::Regular | PwsClass::OnSwitchingPlane) {
        return Ok(Some(e2p));
    }
    Ok(None)
}

/// All six equilibrium reports with stability filled in, in display order.
/// `alpha`/`a_p` feed the open-loop report, `alpha`/`k` the closed-loop
/// ones.
pub fn all_reports(
    params: &ModelParams,
    alpha: f64,
    a_p: f64,
    k: f64,
) -> Result<Vec<EquilibriumReport>, CoreError> {
    let cls = classify_pws(params);
    let mut e1 = equilibrium_e1(params);
    e1.pws_class = if e1.exists { cls.e1 } else { PwsClass::NotApplicable };
    let mut e2 = equilibrium_e2(params)?;
    e2.pws_class = if e2.exists { cls.e2 } else { PwsClass::NotApplicable };
    let reports = [
        equilibrium_e0(params),
        e1,
        e2,
        equilibrium_e1p_open(params, alpha, a_p)?,
        equilibrium_e1p_closed(params, alpha, k)?,
        equilibrium_e2p_closed(params, alpha, k)?,
    ];
    let mut out = Vec::with_capacity(reports.len());
    for r in reports {
        out.push(stability_verdict(params, &r)?);
    }
    Ok(out)
}
