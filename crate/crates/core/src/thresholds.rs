//! Fold thresholds in the lure strength, and the scalar root/maximum
//! utilities behind them.
//!
//! Two procedures locate the critical pheromone amount above which positive
//! equilibria disappear and only extinction remains:
//!
//! - [`ap_crit`] works on the male-scarcity system itself. Its positive
//!   equilibria correspond to fixed points `φ(A; A_p) = A` of a scalar map
//!   in the receptive-female coordinate; `φ` rises from a negative intercept
//!   and then decays, so raising `A_p` merges the two crossings into a fold.
//!   The threshold solves `max_A [φ(A;A_p) − A] = 0` with an outer bisection
//!   in `A_p` and an inner golden-section/derivative-bisection maximization.
//! - [`ap_crit_aux`] does the same for the monotone comparison system that
//!   upper-bounds the scarcity dynamics (mating drain and two of the
//!   crowding exponentials dropped). Its equilibria solve `g(M) = h(M;A_p)`
//!   with `h` linear in `A_p`, so the fold is the maximum of `g/h̄`; above
//!   it extinction is global for the comparison system and hence for the
//!   scarcity system.
//!
//! Both return residual diagnostics and are bit-deterministic for fixed
//! inputs.

use crate::analysis::{derived_quantities, DerivedQuantities};
use crate::error::CoreError;
use crate::math::{exp, ln};
use crate::model::{population_cap, rhs_scarcity, ControlInputs, ModelParams, State};
use alloc::vec::Vec;

/// Outcome of a fold-threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Critical lure strength: two positive equilibria below, none above.
    pub a_p_crit: f64,
    /// Coordinate of the tangency (receptive females for the scarcity
    /// system, males for the comparison system).
    pub tangency_point: f64,
    /// Final residuals: |defect at the fold| and |slope at the tangency|,
    /// both in relative scale.
    pub residuals: (f64, f64),
    /// Total inner + outer iterations spent.
    pub iterations: u32,
    /// Final outer bracket around the critical lure strength.
    pub bracket: (f64, f64),
}

/// A positive equilibrium of the open-loop scarcity system recovered from
/// its receptive-female coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScarcityEquilibrium {
    pub a: f64,
    pub state: State,
    /// Max-norm residual of the scarcity field at `state`.
    pub residual: f64,
}

/// Root-count report for the scarcity fixed-point equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScarcityRoots {
    pub count: usize,
    pub roots: Vec<ScarcityEquilibrium>,
}

/// Result of a bracketed scalar root solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub root: f64,
    pub f_root: f64,
    pub iterations: u32,
}

const MAX_BISECT: u32 = 200;

/// Bisection with a secant acceleration step, for a continuous `f` with
/// `f(lo)·f(hi) ≤ 0`. Converges to `|hi − lo| < tol·max(1, |root|)`.
pub fn find_root_bracketed<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<RootResult, CoreError> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(RootResult { root: lo, f_root: 0.0, iterations: 0 });
    }
    if fhi == 0.0 {
        return Ok(RootResult { root: hi, f_root: 0.0, iterations: 0 });
    }
    if flo * fhi > 0.0 || !flo.is_finite() || !fhi.is_finite() {
        return Err(CoreError::BracketNotFound { lo, hi });
    }
    let mut iterations = 0;
    while iterations < MAX_BISECT {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        // secant candidate, used when it lands safely inside the bracket
        let secant = lo - flo * (hi - lo) / (fhi - flo);
        let width = hi - lo;
        let x = if secant.is_finite()
            && secant > lo + 0.01 * width
            && secant < hi - 0.01 * width
        {
            secant
        } else {
            mid
        };
        let fx = f(x);
        if fx == 0.0 || width < tol * x.abs().max(1.0) {
            return Ok(RootResult { root: x, f_root: fx, iterations });
        }
        if flo * fx < 0.0 {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
    }
    let root = 0.5 * (lo + hi);
    Ok(RootResult { root, f_root: f(root), iterations })
}

/// Coefficients of the scarcity fixed-point map for fixed `(α, A_p)`:
/// the crowding exponent is `−σ·A·(1 + (n0 + n1·A)/(d0 + d1·A))`.
struct ScarcityMap {
    n_m: f64,
    lure_offset: f64,
    n0: f64,
    n1: f64,
    d0: f64,
    d1: f64,
    sigma: f64,
}

impl ScarcityMap {
    fn new(params: &ModelParams, q: &DerivedQuantities, alpha: f64, a_p: f64) -> Self {
        let p = params;
        let couple = p.gamma * p.nu / (p.eta + p.delta);
        ScarcityMap {
            n_m: q.n_m,
            lure_offset: (alpha + p.mu) / p.mu * a_p,
            n0: p.delta * p.r * a_p,
            n1: p.delta * p.r * (couple + 1.0),
            d0: (1.0 - p.r) * (alpha + p.mu) * a_p,
            d1: p.delta * p.r * couple * (q.theta_m - 1.0),
            sigma: p.sigma,
        }
    }

    /// φ(A; A_p) − A.
    fn defect(&self, a: f64) -> f64 {
        let ratio = (self.n0 + self.n1 * a) / (self.d0 + self.d1 * a);
        let crowding = exp(-self.sigma * a * (1.0 + ratio));
        self.n_m * a * crowding - self.lure_offset - a
    }

    /// d/dA of `defect`.
    fn defect_slope(&self, a: f64) -> f64 {
        let den = self.d0 + self.d1 * a;
        let ratio = (self.n0 + self.n1 * a) / den;
        let w = -self.sigma * a * (1.0 + ratio);
        // d/dA [A·(n0 + n1·A)/(d0 + d1·A)]
        let ratio_term = (self.n0 * self.d0 + 2.0 * self.n1 * self.d0 * a
            + self.n1 * self.d1 * a * a)
            / (den * den);
        let w_slope = -self.sigma * (1.0 + ratio_term);
        self.n_m * exp(w) * (1.0 + a * w_slope) - 1.0
    }
}

/// Fixed-point defect `φ(A; A_p) − A` of the open-loop scarcity system: its
/// zeros in `A > 0` are exactly the receptive-female coordinates of the
/// positive equilibria. Negative at `A = 0` whenever `A_p > 0`, and
/// eventually negative again as crowding wins.
///
/// The crowding factor is evaluated literally from the equilibrium
/// back-substitution; at `A_p = 0` it stays an `A`-dependent exponential
/// whose value only equals `1/N_M` at the equilibrium itself.
pub fn scarcity_fixed_point_fn(
    a: f64,
    params: &ModelParams,
    alpha: f64,
    a_p: f64,
) -> Result<f64, CoreError> {
    let q = derived_quantities(params);
    if q.theta_m <= 1.0 {
        return Err(CoreError::ScarcityRatioNotAboveOne { theta_m: q.theta_m });
    }
    if a < 0.0 || a_p < 0.0 {
        return Err(CoreError::InvalidInput(alloc::format!(
            "need a >= 0 and a_p >= 0, got a = {a}, a_p = {a_p}"
        )));
    }
    Ok(ScarcityMap::new(params, &q, alpha, a_p).defect(a))
}

/// Golden-section bracketing of the maximum on `[lo, hi]` followed by a
/// bisection on the derivative sign change; assumes a single interior
/// maximum (the map rises from its intercept and then decays).
fn maximize<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
    f: F,
    slope: G,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    iterations: &mut u32,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    // golden section down to a loose bracket
    for _ in 0..80 {
        *iterations += 1;
        if b - a <= 1e-4 * hi.abs().max(1.0) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // derivative bisection inside the bracket
    let (mut a, mut b) = (a, b);
    if slope(a) <= 0.0 {
        // maximum is at or left of `a`; fall back to the golden result
        let x = if fc >= fd { c } else { d };
        return (x, f(x));
    }
    if slope(b) >= 0.0 {
        let x = if fc >= fd { c } else { d };
        return (x, f(x));
    }
    for _ in 0..MAX_BISECT {
        *iterations += 1;
        let mid = 0.5 * (a + b);
        if b - a <= rel_tol * mid.abs().max(1.0) {
            return (mid, f(mid));
        }
        if slope(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Search ceiling for the receptive-female coordinate: positive equilibria
/// obey the total-population identity, so `2·ln(N_M)/σ` clears them with a
/// factor-two margin.
fn scarcity_domain_cap(params: &ModelParams, q: &DerivedQuantities) -> f64 {
    2.0 * ln(q.n_m) / params.sigma
}

/// Inner tolerance is kept two decades below the outer one so inner noise
/// cannot flip the outer sign test.
const INNER_TOL: f64 = 1e-11;

/// Critical lure strength of the open-loop scarcity system.
///
/// Below it the fixed-point equation has two positive roots, above it none
/// (and the origin, always locally stable there, is the only equilibrium).
/// Requires `θ_M > 1` and `N_M > 1`, otherwise the fixed-point structure
/// that the search relies on does not exist.
pub fn ap_crit(params: &ModelParams, alpha: f64, tol: f64) -> Result<ThresholdResult, CoreError> {
    let q = derived_quantities(params);
    if q.theta_m <= 1.0 {
        return Err(CoreError::ScarcityRatioNotAboveOne { theta_m: q.theta_m });
    }
    if q.n_m <= 1.0 {
        return Err(CoreError::OffspringNumberNotAboveOne { n_m: q.n_m });
    }
    let a_hi = scarcity_domain_cap(params, &q);
    let a_lo = 1e-9 * a_hi;
    let mut iterations = 0u32;

    let peak = |a_p: f64, iters: &mut u32| -> (f64, f64) {
        let map = ScarcityMap::new(params, &q, alpha, a_p);
        maximize(
            |a| map.defect(a),
            |a| map.defect_slope(a),
            a_lo,
            a_hi,
            INNER_TOL,
            iters,
        )
    };

    // outer bracket: defect max is positive at A_p = 0+ and negative for a
    // large enough lure; start from the Ricker cap and expand geometrically
    let mut lo = 0.0;
    let mut hi = population_cap(params).max(1.0);
    let mut expansions = 0;
    while peak(hi, &mut iterations).1 > 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(CoreError::BracketNotFound { lo, hi });
        }
    }
    while hi - lo > tol * hi.max(1.0) && iterations < 20_000 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if peak(mid, &mut iterations).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a_p_crit = 0.5 * (lo + hi);
    let (tangency, defect) = peak(a_p_crit, &mut iterations);
    let map = ScarcityMap::new(params, &q, alpha, a_p_crit);
    Ok(ThresholdResult {
        a_p_crit,
        tangency_point: tangency,
        residuals: (
            defect.abs() / tangency.abs().max(1.0),
            map.defect_slope(tangency).abs(),
        ),
        iterations,
        bracket: (lo, hi),
    })
}

/// Counts and refines the positive equilibria of the open-loop scarcity
/// system by a dense sign-change scan (default density 10⁴ via
/// [`count_equilibria_scarcity`]) with bisection refinement, and rebuilds
/// the full states via the equilibrium back-substitution. The returned
/// count is 0, 1 (tangency), or 2.
pub fn count_equilibria_scarcity_with_grid(
    params: &ModelParams,
    alpha: f64,
    a_p: f64,
    grid: usize,
) -> Result<ScarcityRoots, CoreError> {
    let q = derived_quantities(params);
    if q.theta_m <= 1.0 {
        return Err(CoreError::ScarcityRatioNotAboveOne { theta_m: q.theta_m });
    }
    let map = ScarcityMap::new(params, &q, alpha, a_p);
    let a_hi = scarcity_domain_cap(params, &q);
    let n = grid.max(16);
    let step = a_hi / n as f64;

    let mut roots: Vec<f64> = Vec::new();
    let mut prev_a = step * 1e-6; // stay off A = 0 where the lure offset dominates anyway
    let mut prev_v = map.defect(prev_a);
    for i in 1..=n {
        let a = step * i as f64;
        let v = map.defect(a);
        if prev_v == 0.0 {
            roots.push(prev_a);
        } else if prev_v * v < 0.0 {
            let r = find_root_bracketed(|x| map.defect(x), prev_a, a, 1e-12)?;
            roots.push(r.root);
        }
        prev_a = a;
        prev_v = v;
    }
    if prev_v == 0.0 {
        roots.push(prev_a);
    }

    // a grazing maximum (exact tangency) produces no sign change; report it
    // as a single root when the peak sits within a tight band of zero
    if roots.is_empty() {
        let mut iters = 0u32;
        let (peak_a, peak_v) = maximize(
            |a| map.defect(a),
            |a| map.defect_slope(a),
            step * 1e-6,
            a_hi,
            INNER_TOL,
            &mut iters,
        );
        if peak_v.abs() <= 1e-7 * peak_a.abs().max(1.0) {
            roots.push(peak_a);
        }
    }

    let p = params;
    let couple = p.gamma * p.nu / (p.eta + p.delta);
    let out: Vec<ScarcityEquilibrium> = roots
        .iter()
        .map(|&a| {
            // back-substitution M(A), U(A) of the equilibrium reduction
            let den = (1.0 - p.r) * (alpha + p.mu) * a_p
                + p.delta * p.r * couple * (q.theta_m - 1.0) * a;
            let m = p.r * p.delta * (a + a_p) * a / den;
            let u = couple * a / (a + a_p) * m;
            let state = State::new(m, a, u);
            let residual = rhs_scarcity(p, ControlInputs { a_p, alpha }, state)
                .map(|d| d.max_norm())
                .unwrap_or(f64::INFINITY);
            ScarcityEquilibrium { a, state, residual }
        })
        .collect();
    Ok(ScarcityRoots { count: out.len(), roots: out })
}

/// [`count_equilibria_scarcity_with_grid`] at the default scan density.
pub fn count_equilibria_scarcity(
    params: &ModelParams,
    alpha: f64,
    a_p: f64,
) -> Result<ScarcityRoots, CoreError> {
    count_equilibria_scarcity_with_grid(params, alpha, a_p, 10_000)
}

/// Growth side of the comparison-system equilibrium equation:
/// `g(M) = ((1−r)ρ + η)·μ·N_M·M·(N_M − e^{σM})`, positive exactly on
/// `(0, ln(N_M)/σ)` when `N_M > 1`.
pub fn aux_g(m: f64, params: &ModelParams) -> f64 {
    let p = params;
    let n_m = derived_quantities(p).n_m;
    ((1.0 - p.r) * p.rho + p.eta) * p.mu * n_m * m * (n_m - exp(p.sigma * m))
}

/// Lure side of the comparison-system equilibrium equation:
/// `h(M) = rρδ·A_p·(N_M + (α/μ)e^{σM})`; increasing in `M` for `α > 0`,
/// constant when `α = 0`.
pub fn aux_h(m: f64, params: &ModelParams, alpha: f64, a_p: f64) -> f64 {
    let p = params;
    let n_m = derived_quantities(p).n_m;
    p.r * p.rho * p.delta * a_p * (n_m + alpha / p.mu * exp(p.sigma * m))
}

/// Critical lure strength of the monotone comparison system; above it
/// extinction is globally attracting for the scarcity dynamics.
///
/// For `α = 0` the lure side is flat and the threshold is the closed form
/// `max_M g(M) / (rρδ·N_M)` with the maximizer found by derivative
/// bisection. For `α > 0` an outer bisection on `A_p` locates the
/// transition of the root count of `g − h` from 2 to 0.
pub fn ap_crit_aux(
    params: &ModelParams,
    alpha: f64,
    tol: f64,
) -> Result<ThresholdResult, CoreError> {
    let p = params;
    let q = derived_quantities(p);
    if q.n_m <= 1.0 {
        return Err(CoreError::OffspringNumberNotAboveOne { n_m: q.n_m });
    }
    let m_hi = ln(q.n_m) / p.sigma;
    let m_lo = 1e-9 * m_hi;
    let g_coef = ((1.0 - p.r) * p.rho + p.eta) * p.mu * q.n_m;
    let mut iterations = 0u32;

    // g'(M) ∝ N_M − e^{σM}(1 + σM) is strictly decreasing: one zero
    let g_slope = |m: f64| g_coef * (q.n_m - exp(p.sigma * m) * (1.0 + p.sigma * m));

    let a_p_crit;
    if alpha == 0.0 {
        let root = find_root_bracketed(g_slope, m_lo, m_hi * (1.0 - 1e-12), INNER_TOL)?;
        iterations += root.iterations;
        a_p_crit = aux_g(root.root, p) / (p.r * p.rho * p.delta * q.n_m);
    } else {
        let count_roots = |a_p: f64| -> usize {
            let n = 10_000usize;
            let step = m_hi / n as f64;
            let mut count = 0;
            let mut prev = aux_g(m_lo, p) - aux_h(m_lo, p, alpha, a_p);
            for i in 1..=n {
                let m = step * i as f64;
                let v = aux_g(m, p) - aux_h(m, p, alpha, a_p);
                if prev * v < 0.0 {
                    count += 1;
                }
                prev = v;
            }
            count
        };
        let mut lo = 0.0;
        let mut hi = population_cap(p).max(1.0);
        let mut expansions = 0;
        while count_roots(hi) >= 2 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(CoreError::BracketNotFound { lo, hi });
            }
        }
        while hi - lo > tol * hi.max(1.0) && iterations < 20_000 {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            if count_roots(mid) >= 2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        a_p_crit = 0.5 * (lo + hi);
    }

    // tangency point: maximum of g − h at the critical lure
    let diff = |m: f64| aux_g(m, p) - aux_h(m, p, alpha, a_p_crit);
    let diff_slope = |m: f64| {
        g_slope(m) - p.r * p.rho * p.delta * a_p_crit * alpha / p.mu * p.sigma * exp(p.sigma * m)
    };
    let (tangency, defect) = maximize(diff, diff_slope, m_lo, m_hi, INNER_TOL, &mut iterations);
    let scale = aux_h(tangency, p, alpha, a_p_crit).abs().max(1.0);
    Ok(ThresholdResult {
        a_p_crit,
        tangency_point: tangency,
        residuals: (defect.abs() / scale, diff_slope(tangency).abs() / scale),
        iterations,
        bracket: (a_p_crit * (1.0 - tol), a_p_crit * (1.0 + tol)),
    })
}
