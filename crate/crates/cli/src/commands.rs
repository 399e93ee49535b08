//! The four subcommands.

use std::fmt::Write as _;

use asepqj_core::analytics::ldp::{growth_rate, ldp_rate, search_limit};
use asepqj_core::analytics::moments::{growth_base, moment_product, moment_step};
use asepqj_core::simulate::{moment_batch, sample_product_initial, step_initial, Engine, MomentJob, RngStream};
use asepqj_core::{BoundaryKind, InitialCondition, Lattice, WalkerLaw};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::verify::{render_csv, render_table, run_suite};
use crate::{fmt_float, CliError, Outcome, EXIT_CONTAMINATED, EXIT_FAILED, EXIT_OK};

fn outcome(text: String, csv: Option<String>, code: i32) -> Outcome {
    Outcome { text, csv, code, out: None }
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = Lattice::new(cfg.params, cfg.length)?;
    let rows = run_suite(&lattice, &cfg.alphas, cfg.tol_scale, cfg.corrupt_rate)?;
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass()).map(|r| r.name.as_str()).collect();
    let mut text = render_table(&rows);
    let code = if failed.is_empty() {
        let _ = writeln!(text, "all {} identities hold", rows.len());
        EXIT_OK
    } else {
        let _ = writeln!(text, "failed: {}", failed.join(", "));
        EXIT_FAILED
    };
    Ok(outcome(text, Some(render_csv(&rows)), code))
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))
}

/// Window `[-L/2, L - 1 - L/2]` of `L` sites containing site 0.
fn centered_window(len: usize) -> (i64, i64) {
    let a = -((len / 2) as i64);
    (a, a + len as i64 - 1)
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = cfg.params;
    let (a, b) = centered_window(cfg.length);
    let periodic = cfg.boundary == BoundaryKind::Periodic;
    for &i in &cfg.bonds {
        let inside = (i > a && i <= b) || (periodic && i == a);
        if !inside {
            return Err(CliError::Invalid(format!("bond {i} is not inside the window [{a}, {b}]")));
        }
    }
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let run = |id: u64| -> Result<(String, bool), CliError> {
        let mut rng = RngStream::new(cfg.seed, id);
        let start = match &cfg.initial {
            InitialCondition::Step(sign) => step_initial(*sign, a, b, &p)?,
            InitialCondition::Product(mu) => sample_product_initial(mu, a, b, &p, &mut rng)?,
        };
        let mut engine = Engine::new(&start, &p, cfg.boundary)?;
        let mut rows = String::new();
        for &t in &times {
            engine.run_until(t, &mut rng, None);
            let dirty = engine.edge_events() > 0;
            for &i in &cfg.bonds {
                let j = engine.current(i).expect("bond checked against the window");
                let _ = writeln!(rows, "{id},{},{i},{j},{},{}", fmt_float(t), engine.events(), u8::from(dirty));
            }
        }
        Ok((rows, engine.edge_events() > 0))
    };
    let results: Vec<Result<(String, bool), CliError>> =
        pool(cfg.workers)?.install(|| (0..cfg.trajectories).into_par_iter().map(run).collect());
    let mut csv = String::from("trajectory,time,bond,current,events,contaminated\n");
    let mut dirty = 0u64;
    for r in results {
        let (rows, d) = r?;
        csv.push_str(&rows);
        dirty += u64::from(d);
    }
    let text = if dirty > 0 { format!("{dirty} of {} trajectories touched the window edge\n", cfg.trajectories) } else { String::new() };
    Ok(outcome(text, Some(csv), if dirty > 0 { EXIT_CONTAMINATED } else { EXIT_OK }))
}

pub fn moment(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let job = MomentJob {
        params: cfg.params,
        initial: cfg.initial.clone(),
        bonds: cfg.bonds.clone(),
        times: cfg.times.clone(),
        trajectories: cfg.trajectories,
        master_seed: cfg.seed,
        workers: cfg.workers,
    };
    let estimates = moment_batch(&job)?;
    let mut csv = String::from("i,t,mc_estimate,mc_stderr,closed_form,abs_diff,sigma_ratio,contaminated\n");
    let mut flagged = 0;
    for e in &estimates {
        let closed = match &cfg.initial {
            InitialCondition::Step(sign) => moment_step(*sign, e.bond, e.time, &cfg.params)?,
            InitialCondition::Product(mu) => moment_product(mu, e.bond, e.time, &cfg.params)?,
        };
        let diff = (e.mean - closed).abs();
        let ratio = if diff == 0.0 { 0.0 } else { diff / e.stderr };
        if e.contaminated > 0 {
            flagged += 1;
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            e.bond,
            fmt_float(e.time),
            fmt_float(e.mean),
            fmt_float(e.stderr),
            fmt_float(closed),
            fmt_float(diff),
            fmt_float(ratio),
            e.contaminated
        );
    }
    let text = if flagged > 0 {
        format!("{flagged} rows include trajectories contaminated on every window size\n")
    } else {
        String::new()
    };
    Ok(outcome(text, Some(csv), if flagged > 0 { EXIT_CONTAMINATED } else { EXIT_OK }))
}

pub fn ldp(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = cfg.params;
    if p.is_symmetric() {
        return Err(CliError::Invalid("the rate function needs q < 1".into()));
    }
    let mu = cfg.mu.clone().unwrap_or_else(|| vec![1.0 / p.local_dim() as f64; p.local_dim()]);
    let hi = search_limit(&p);
    let mut csv = String::from("row,x,value\n");
    for k in 0..cfg.points {
        let x = hi * k as f64 / (cfg.points - 1) as f64;
        let _ = writeln!(csv, "grid,{},{}", fmt_float(x), fmt_float(ldp_rate(x, &p)));
    }
    let drift = WalkerLaw::new(p).drift();
    let _ = writeln!(csv, "drift,{},{}", fmt_float(drift), fmt_float(ldp_rate(drift, &p)));
    let _ = writeln!(csv, "zero,{},{}", fmt_float(0.0), fmt_float(ldp_rate(0.0, &p)));
    let _ = writeln!(csv, "m_q,,{}", fmt_float(growth_base(&mu, &p)?));
    let _ = writeln!(csv, "growth_rate,,{}", fmt_float(growth_rate(&mu, &p)?));
    Ok(outcome(String::new(), Some(csv), EXIT_OK))
}
