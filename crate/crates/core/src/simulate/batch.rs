//! Monte Carlo estimates of `E[q^{2 J_i(t)}]` on truncated windows, run in
//! parallel with a reduction whose order does not depend on the worker count.

use rayon::prelude::*;

use crate::analytics::walker::WalkerLaw;
use crate::error::{domain, Error, Result};
use crate::generator::BoundaryKind;
use crate::qcalc::QParams;
use crate::simulate::engine::{Engine, RateTable};
use crate::simulate::rng::RngStream;
use crate::simulate::{sample_product_initial, step_initial, InitialCondition};

/// Attempts per trajectory; each retry doubles the window half-width.
pub const MAX_ATTEMPTS: u32 = 4;
const CHUNK: u64 = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentJob {
    pub params: QParams,
    pub initial: InitialCondition,
    /// Bond labels `i` of the bonds `(i - 1, i)`.
    pub bonds: Vec<i64>,
    /// Observation times, nondecreasing after sorting.
    pub times: Vec<f64>,
    pub trajectories: u64,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub bond: i64,
    pub time: f64,
    pub mean: f64,
    pub stderr: f64,
    /// Trajectories used.
    pub samples: u64,
    /// Trajectories discarded because every attempt was contaminated.
    pub contaminated: u64,
}

#[derive(Debug, Clone, Default)]
struct Partial {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    used: u64,
    contaminated: u64,
}

impl Partial {
    fn zeros(n: usize) -> Self {
        Self { sum: vec![0.0; n], sumsq: vec![0.0; n], used: 0, contaminated: 0 }
    }

    fn absorb(&mut self, other: &Partial) {
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sumsq[k] += other.sumsq[k];
        }
        self.used += other.used;
        self.contaminated += other.contaminated;
    }
}

impl MomentJob {
    fn validate(&self) -> Result<()> {
        self.initial.validate(&self.params)?;
        if self.params.is_symmetric() {
            return domain("current moments are simulated for q < 1");
        }
        if self.trajectories == 0 {
            return domain("at least one trajectory is required");
        }
        if self.bonds.is_empty() || self.times.is_empty() {
            return domain("need at least one bond and one time");
        }
        if let Some(t) = self.times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return domain(format!("times must be finite and nonnegative, got {t}"));
        }
        if self.workers == Some(0) {
            return domain("worker count must be positive");
        }
        Ok(())
    }

    /// Speed bounding how far influence travels: the dual walker's right rate
    /// for step data, the largest single-bond activity for product data.
    pub fn spread_rate(&self) -> f64 {
        match self.initial {
            InitialCondition::Step(_) => WalkerLaw::new(self.params).right_rate,
            InitialCondition::Product(_) => RateTable::new(&self.params).max_bond_rate(),
        }
    }

    /// Base half-width `W` of the window `[-W, W]`.
    pub fn half_width(&self) -> i64 {
        let reach = self.bonds.iter().map(|b| b.abs()).max().unwrap_or(0);
        let t = self.times.iter().cloned().fold(0.0, f64::max);
        reach + (4.0 * self.spread_rate() * t).ceil() as i64 + 8
    }
}

/// Number of events of a rate-`rate` Poisson clock before `t`, stopping at `cap`.
fn poisson_count(rate: f64, t: f64, cap: i64, rng: &mut RngStream) -> i64 {
    let mut n = 0;
    let mut clock = rng.exponential(rate);
    while clock <= t && n < cap {
        n += 1;
        clock += rng.exponential(rate);
    }
    n
}

/// One trajectory: `q^{2 J_i(t)}` for every (time, bond) pair in row-major
/// order, or `None` when every attempt was contaminated.
fn run_one(job: &MomentJob, times: &[f64], id: u64, w0: i64, rmax: f64) -> Result<Option<Vec<f64>>> {
    let p = &job.params;
    let t_max = times.last().copied().unwrap_or(0.0);
    for attempt in 0..MAX_ATTEMPTS {
        let w = w0 << attempt;
        let mut rng = RngStream::new(job.master_seed, (id << 4) | u64::from(attempt));
        let cfg = match &job.initial {
            InitialCondition::Step(sign) => step_initial(*sign, -w, w, p)?,
            InitialCondition::Product(mu) => sample_product_initial(mu, -w, w, p, &mut rng)?,
        };
        let mut engine = Engine::new(&cfg, p, BoundaryKind::TruncatedLine)?;
        let mut out = Vec::with_capacity(times.len() * job.bonds.len());
        for &t in times {
            engine.run_until(t, &mut rng, None);
            for &i in &job.bonds {
                let j = engine.current(i).ok_or_else(|| Error::Domain(format!("bond {i} outside window")))?;
                out.push(p.pow(2.0 * j as f64));
            }
        }
        let contaminated = match job.initial {
            InitialCondition::Step(_) => engine.edge_events() > 0,
            InitialCondition::Product(_) => {
                // discrepancy fronts entering from each closed end, driven by
                // rate-rmax clocks on the bond at the front
                let lo = job.bonds.iter().min().copied().unwrap_or(0);
                let hi = job.bonds.iter().max().copied().unwrap_or(0);
                let need_left = (lo - 1) - (-w);
                let need_right = w - hi;
                poisson_count(rmax, t_max, need_left, &mut rng) >= need_left
                    || poisson_count(rmax, t_max, need_right, &mut rng) >= need_right
            }
        };
        if !contaminated {
            return Ok(Some(out));
        }
    }
    Ok(None)
}

/// Estimates `E[q^{2 J_i(t)}]` for every requested bond and time from one
/// ensemble of trajectories. Output is ordered by time, then bond.
pub fn moment_batch(job: &MomentJob) -> Result<Vec<MomentEstimate>> {
    job.validate()?;
    let mut times = job.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let nb = job.bonds.len();
    let n = times.len() * nb;
    let w0 = job.half_width();
    let rmax = RateTable::new(&job.params).max_bond_rate();
    let chunks = job.trajectories.div_ceil(CHUNK);
    let work = || -> Result<Vec<Partial>> {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut part = Partial::zeros(n);
                for id in c * CHUNK..((c + 1) * CHUNK).min(job.trajectories) {
                    match run_one(job, &times, id, w0, rmax)? {
                        Some(vals) => {
                            for (k, v) in vals.into_iter().enumerate() {
                                part.sum[k] += v;
                                part.sumsq[k] += v * v;
                            }
                            part.used += 1;
                        }
                        None => part.contaminated += 1,
                    }
                }
                Ok(part)
            })
            .collect()
    };
    let parts = match job.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut total = Partial::zeros(n);
    for part in &parts {
        total.absorb(part);
    }
    let m = total.used as f64;
    let mut out = Vec::with_capacity(n);
    for (ti, &t) in times.iter().enumerate() {
        for (bi, &bond) in job.bonds.iter().enumerate() {
            let k = ti * nb + bi;
            let (mean, stderr) = if total.used == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = total.sum[k] / m;
                let var = if total.used > 1 { ((total.sumsq[k] - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
                (mean, (var / m).sqrt())
            };
            out.push(MomentEstimate { bond, time: t, mean, stderr, samples: total.used, contaminated: total.contaminated });
        }
    }
    Ok(out)
}

/// Sample mean and standard error of `q^{2 J_i(t)}` over `n_traj`
/// trajectories, seeded from `rng`'s master seed.
pub fn q_current_moment_mc(initial: &InitialCondition, params: &QParams, i: i64, t: f64, n_traj: u64, rng: &RngStream) -> Result<MomentEstimate> {
    let job = MomentJob {
        params: *params,
        initial: initial.clone(),
        bonds: vec![i],
        times: vec![t],
        trajectories: n_traj,
        master_seed: rng.master_seed(),
        workers: None,
    };
    Ok(moment_batch(&job)?.remove(0))
}
