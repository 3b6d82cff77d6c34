//! ε-sweep: runs the same experiment for each regularization width in the
//! configured decreasing list, a worker pool fanning the runs out with a
//! deterministic ε-ordered merge. Checks the uniform-in-ε boundedness of the
//! time-weighted quantities and the Cauchy behaviour of u(·, t₀) in L².

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use consumax_core::functionals::DiagnosticsSeries;
use consumax_core::grid_domain::{lp_norm, Field};
use consumax_core::stepper::run_observed;

use crate::commands::run::check_series;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{self, CheckResult, VerificationReport};

/// Uniformity knob: sup over ε of W (and of S at T) may exceed the largest-ε
/// value by strictly less than this factor.
pub const SUP_GROWTH_FACTOR: f64 = 2.0;

struct EpsOutcome {
    series: DiagnosticsSeries,
    u_t0: Field,
    run_pass: bool,
}

/// Numeric outcome of the sweep, alongside the persisted report.
pub struct SweepSummary {
    pub report: VerificationReport,
    /// Worst over pairs and positive probes of sup_ε W / W at the largest ε.
    pub w_growth: f64,
    /// Worst over pairs of sup_ε S(T) / S(T) at the largest ε.
    pub s_growth: f64,
    /// ‖u_{ε_i}(t₀) − u_{ε_{i+1}}(t₀)‖_{L²} for consecutive ε.
    pub cauchy_l2: Vec<f64>,
}

fn worker_count(jobs: usize) -> usize {
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("CONSUMAX_WORKERS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(hw);
    cap.min(jobs).max(1)
}

fn run_one(base: &ExperimentConfig, eps: f64, t0_record: usize, dir: &Path) -> Result<EpsOutcome> {
    let mut cfg = base.clone();
    cfg.sim.eps = eps;
    output::ensure_dir(dir)?;
    let probes = cfg.probe_config()?;
    let mut u_t0: Option<Field> = None;
    let series = run_observed(&cfg.sim, &cfg.u0, &cfg.v0, &probes, &mut |idx, state| {
        if idx == t0_record {
            u_t0 = Some(state.u.clone());
        }
    })?;
    output::write_series(dir, &series)?;
    let mut report = VerificationReport::new("run", cfg.exploratory, cfg.delta);
    check_series(&cfg, &series, &mut report);
    report.write(dir)?;
    let u_t0 = u_t0.ok_or_else(|| {
        CliError::Parse(String::from(
            "sweep run never reached the Cauchy probe time",
        ))
    })?;
    Ok(EpsOutcome {
        series,
        u_t0,
        run_pass: report.pass,
    })
}

pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<bool> {
    Ok(execute_summary(cfg, out_dir)?.report.pass)
}

pub fn execute_summary(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepSummary> {
    output::ensure_dir(out_dir)?;

    // All runs share one probe ladder with t₀ = t_cauchy inserted, so the
    // Cauchy comparison and the sup tables sample identical times.
    let mut base = cfg.clone();
    if cfg.sim.t_final > 0.0 {
        match base.probe_times.iter().position(|&t| t >= cfg.t_cauchy) {
            Some(i) if base.probe_times[i] == cfg.t_cauchy => {}
            Some(i) => base.probe_times.insert(i, cfg.t_cauchy),
            None => base.probe_times.push(cfg.t_cauchy),
        }
    }
    // Record 0 is the initial state; probe j lands in record j+1.
    let t0_record = base
        .probe_times
        .iter()
        .position(|&t| t == cfg.t_cauchy)
        .map(|i| i + 1)
        .unwrap_or(0);

    let eps_list = &cfg.eps_list;
    let results: Mutex<Vec<Option<Result<EpsOutcome>>>> =
        Mutex::new((0..eps_list.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = worker_count(eps_list.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= eps_list.len() {
                    break;
                }
                let dir = out_dir.join(format!("eps_{i:03}"));
                let out = run_one(&base, eps_list[i], t0_record, &dir);
                results.lock().unwrap()[i] = Some(out);
            });
        }
    });
    let mut outcomes = Vec::with_capacity(eps_list.len());
    for (i, slot) in results.into_inner().unwrap().into_iter().enumerate() {
        match slot.expect("every sweep slot is filled before the scope ends") {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                return Err(CliError::Parse(format!(
                    "sweep run at eps = {} failed: {e}",
                    eps_list[i]
                )))
            }
        }
    }

    let mut report = VerificationReport::new("sweep-eps", cfg.exploratory, cfg.delta);

    // Per-run invariants, folded into one line.
    let runs_ok = outcomes.iter().all(|o| o.run_pass);
    report.push(CheckResult::new(
        "run invariants hold for every eps",
        runs_ok,
        if runs_ok {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        },
        String::from("per-eps report.json"),
    ));

    // sup over ε of W_{p,λ}(t) vs the largest-ε run, per positive probe.
    let n_pairs = outcomes[0].series.spec.pairs.len();
    let n_rec = outcomes[0].series.records.len();
    let (mut worst_ratio, mut at) = (f64::NEG_INFINITY, String::from("—"));
    let mut w_sup = vec![vec![0.0f64; n_rec]; n_pairs];
    for (pi, w_row) in w_sup.iter_mut().enumerate() {
        for (ri, slot) in w_row.iter_mut().enumerate().skip(1) {
            let first = outcomes[0].series.records[ri].pairs[pi].w;
            let sup = outcomes
                .iter()
                .map(|o| o.series.records[ri].pairs[pi].w)
                .fold(f64::NEG_INFINITY, f64::max);
            *slot = sup;
            let ratio = if first > 0.0 {
                sup / first
            } else if sup == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            if ratio > worst_ratio {
                worst_ratio = ratio;
                at = format!("pair {pi} at t = {}", outcomes[0].series.records[ri].t);
            }
        }
    }
    let vacuous_w = worst_ratio == f64::NEG_INFINITY;
    report.push(CheckResult::new(
        "sup over eps of W grows by factor < 2 vs largest eps",
        vacuous_w || worst_ratio < SUP_GROWTH_FACTOR,
        if vacuous_w {
            f64::NEG_INFINITY
        } else {
            worst_ratio - SUP_GROWTH_FACTOR
        },
        at,
    ));

    // Same for the cumulative S at the final time.
    let (mut worst_s, mut at_s) = (f64::NEG_INFINITY, String::from("—"));
    if n_rec > 0 {
        for pi in 0..n_pairs {
            let first = outcomes[0].series.records[n_rec - 1].pairs[pi].s_cum;
            let sup = outcomes
                .iter()
                .map(|o| o.series.records[n_rec - 1].pairs[pi].s_cum)
                .fold(f64::NEG_INFINITY, f64::max);
            let ratio = if first > 0.0 {
                sup / first
            } else if sup == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            if ratio > worst_s {
                worst_s = ratio;
                at_s = format!("pair {pi} at t = T");
            }
        }
    }
    let vacuous_s = worst_s == f64::NEG_INFINITY;
    report.push(CheckResult::new(
        "sup over eps of S(T) grows by factor < 2 vs largest eps",
        vacuous_s || worst_s < SUP_GROWTH_FACTOR,
        if vacuous_s {
            f64::NEG_INFINITY
        } else {
            worst_s - SUP_GROWTH_FACTOR
        },
        at_s,
    ));

    // Cauchy differences ‖u_{ε_i}(t₀) − u_{ε_{i+1}}(t₀)‖_{L²}, consecutive
    // pairs, strictly decreasing along the (decreasing) ε list.
    let mut cauchy = Vec::new();
    for w in outcomes.windows(2) {
        let mut diff = w[0].u_t0.clone();
        for (d, b) in diff.values.iter_mut().zip(&w[1].u_t0.values) {
            *d -= *b;
        }
        cauchy.push(lp_norm(&diff, 2.0));
    }
    let (mut worst_c, mut at_c) = (f64::NEG_INFINITY, String::from("—"));
    for (i, w) in cauchy.windows(2).enumerate() {
        let inc = w[1] - w[0];
        if inc > worst_c {
            worst_c = inc;
            at_c = format!(
                "pairs (eps {}, {}) → ({}, {})",
                eps_list[i],
                eps_list[i + 1],
                eps_list[i + 1],
                eps_list[i + 2]
            );
        }
    }
    let vacuous_c = worst_c == f64::NEG_INFINITY;
    report.push(CheckResult::new(
        "Cauchy differences at t₀ strictly decreasing",
        vacuous_c || worst_c < 0.0,
        if vacuous_c {
            f64::NEG_INFINITY
        } else {
            worst_c
        },
        at_c,
    ));

    report.extra = serde_json::json!({
        "eps": eps_list,
        "t_cauchy": cfg.t_cauchy,
        "probe_t": outcomes[0].series.records.iter().map(|r| r.t).collect::<Vec<_>>(),
        "w_sup": w_sup,
        "cauchy_l2": &cauchy,
    });
    report.write(out_dir)?;
    Ok(SweepSummary {
        report,
        w_growth: worst_ratio,
        s_growth: worst_s,
        cauchy_l2: cauchy,
    })
}
