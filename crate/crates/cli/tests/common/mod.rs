#![allow(dead_code)]

//! Shared helpers for the acceptance and CLI test suites.

use psyllid_core::analysis::equilibrium_e1;
use psyllid_core::model::ModelParams;
use psyllid_core::sim::{integrate, ControlStrategy, Policy, SimulationConfig, Trajectory};
use psyllid_core::State;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn table1() -> ModelParams {
    ModelParams::table1()
}

/// Wild-equilibrium coordinates for the field-study parameters.
pub fn e1_coords() -> State {
    equilibrium_e1(&table1()).coords
}

/// Deterministic random parameter sets covering both offspring-number
/// regimes: even draws keep the fertility high (positive equilibria exist),
/// odd draws scale the egg output down until the offspring numbers drop
/// below 1.
pub fn random_params(count: usize, seed: u64) -> Vec<ModelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let subcritical = out.len() % 2 == 1;
        let rho_range = if subcritical { 0.05..0.5 } else { 2.0..20.0 };
        let p = ModelParams::new(
            rng.gen_range(0.2..0.8),
            rng.gen_range(rho_range),
            rng.gen_range(1e-4..1e-2),
            rng.gen_range(0.01..0.2),
            rng.gen_range(0.01..0.2),
            rng.gen_range(1.0..3.0),
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.1..2.0),
        );
        if let Ok(p) = p {
            out.push(p);
        }
    }
    out
}

pub fn open_loop(alpha: f64, a_p: f64) -> ControlStrategy {
    ControlStrategy { alpha, policy: Policy::OpenLoop { a_p } }
}

pub fn run(
    params: &ModelParams,
    strategy: &ControlStrategy,
    initial: State,
    t_max: f64,
) -> Trajectory {
    let config = SimulationConfig { initial, t_max, ..Default::default() };
    integrate(params, strategy, &config).expect("integration succeeds")
}

pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
