//! Kinetic Monte Carlo for ASEP(q, j) with current tracking, and the dual
//! walker simulator.

pub mod batch;
pub mod engine;
pub mod fenwick;
pub mod rng;

use std::collections::BTreeMap;

use crate::analytics::moments::StepSign;
use crate::analytics::walker::WalkerLaw;
use crate::error::{domain, Result};
use crate::generator::{BoundaryKind, Configuration};
use crate::qcalc::QParams;

pub use batch::{moment_batch, q_current_moment_mc, MomentEstimate, MomentJob};
pub use engine::{Engine, Event, RateTable};
pub use rng::RngStream;

/// A recorded run: start, time-ordered events, horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: Configuration,
    pub events: Vec<Event>,
    pub final_time: f64,
}

/// Net rightward crossings `J_i(t)` of each bond `(i - 1, i)`, keyed by `i`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CurrentRecord {
    pub per_bond: BTreeMap<i64, i64>,
}

/// Result of [`evolve`].
#[derive(Debug, Clone)]
pub struct Evolution {
    pub trajectory: Trajectory,
    pub current: CurrentRecord,
    pub final_config: Configuration,
    /// Set on a truncated line when an event touched one of the two outermost bonds.
    pub contaminated: bool,
}

/// Initial law for current-moment runs.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Step(StepSign),
    /// Homogeneous product law with the given single-site marginal.
    Product(Vec<f64>),
}

impl InitialCondition {
    pub fn validate(&self, params: &QParams) -> Result<()> {
        match self {
            InitialCondition::Step(_) => Ok(()),
            InitialCondition::Product(mu) => check_marginal(mu, params),
        }
    }
}

fn check_marginal(mu: &[f64], params: &QParams) -> Result<()> {
    if mu.len() != params.local_dim() {
        return domain(format!("marginal needs {} weights, got {}", params.local_dim(), mu.len()));
    }
    if mu.iter().any(|&w| !(w >= 0.0)) {
        return domain("marginal weights must be nonnegative");
    }
    let s: f64 = mu.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return domain(format!("marginal must sum to 1, sums to {s}"));
    }
    Ok(())
}

/// `eta+` (empty left of 0, full from 0) or `eta-` (full left of 0, empty
/// from 0) on the window `[a, b]`.
pub fn step_initial(sign: StepSign, a: i64, b: i64, params: &QParams) -> Result<Configuration> {
    if !(a <= 0 && 0 <= b) {
        return domain(format!("window [{a}, {b}] must contain site 0"));
    }
    let full = params.two_j() as u8;
    let occ = (a..=b)
        .map(|i| match (sign, i >= 0) {
            (StepSign::Plus, true) | (StepSign::Minus, false) => full,
            _ => 0,
        })
        .collect();
    Configuration::new(a, occ)
}

/// I.i.d. occupations with law `mu` on `[a, b]`.
pub fn sample_product_initial(mu: &[f64], a: i64, b: i64, params: &QParams, rng: &mut RngStream) -> Result<Configuration> {
    check_marginal(mu, params)?;
    if b < a {
        return domain(format!("empty window [{a}, {b}]"));
    }
    let occ = (a..=b).map(|_| rng.categorical(mu) as u8).collect();
    Configuration::new(a, occ)
}

/// Exact stochastic evolution to `t_end`, recording every event.
pub fn evolve(cfg: &Configuration, t_end: f64, params: &QParams, boundary: BoundaryKind, rng: &mut RngStream) -> Result<Evolution> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return domain(format!("end time must be finite and nonnegative, got {t_end}"));
    }
    let mut engine = Engine::new(cfg, params, boundary)?;
    let mut events = Vec::new();
    engine.run_until(t_end, rng, Some(&mut events));
    let mut per_bond = BTreeMap::new();
    for i in cfg.first() + 1..=cfg.last() {
        per_bond.insert(i, engine.current(i).expect("inside window"));
    }
    if boundary == BoundaryKind::Periodic {
        per_bond.insert(cfg.first(), engine.current(cfg.first()).expect("wrap bond"));
    }
    Ok(Evolution {
        trajectory: Trajectory { initial: cfg.clone(), events, final_time: t_end },
        current: CurrentRecord { per_bond },
        final_config: engine.configuration(),
        contaminated: engine.edge_events() > 0,
    })
}

/// Position at time `t` of the dual walker started at `i0`.
pub fn walker_simulate(i0: i64, t: f64, params: &QParams, rng: &mut RngStream) -> i64 {
    assert!(t >= 0.0, "time must be nonnegative");
    let law = WalkerLaw::new(*params);
    let total = law.total_rate();
    let mut x = i0;
    let mut clock = rng.exponential(total);
    while clock <= t {
        if rng.uniform() * total < law.right_rate {
            x += 1;
        } else {
            x -= 1;
        }
        clock += rng.exponential(total);
    }
    x
}
