//! Single simulation run: time-steps the configured experiment, persists
//! `series.csv` plus per-probe field snapshots, and checks the run-level
//! invariants (mass conservation, ‖v‖_∞ monotonicity, cumulative columns
//! nondecreasing, sign/finiteness, probe-to-probe energy monotonicity).

use std::path::Path;

use consumax_core::functionals::DiagnosticsSeries;
use consumax_core::stepper::run_observed;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{self, CheckResult, VerificationReport};

use super::{ENERGY_REL_SLACK, ENERGY_T_MIN_FRAC, MASS_REL_TOL, VMAX_SLACK};

pub struct RunArtifacts {
    pub series: DiagnosticsSeries,
    pub report: VerificationReport,
}

/// Runs the experiment, writing artifacts under `out_dir` (snapshots only
/// when `snapshots` is set; sweeps and refinement levels skip them).
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path, snapshots: bool) -> Result<RunArtifacts> {
    output::ensure_dir(out_dir)?;
    let probes = cfg.probe_config()?;
    let mut io_err: Option<CliError> = None;
    let series = run_observed(&cfg.sim, &cfg.u0, &cfg.v0, &probes, &mut |idx, state| {
        if snapshots && io_err.is_none() {
            if let Err(e) = output::write_fields(out_dir, idx, &state.u, &state.v) {
                io_err = Some(e);
            }
        }
    })?;
    if let Some(e) = io_err {
        return Err(e);
    }
    output::write_series(out_dir, &series)?;

    let mut report = VerificationReport::new("run", cfg.exploratory, cfg.delta);
    check_series(cfg, &series, &mut report);
    report.extra = serde_json::json!({
        "t": series.records.iter().map(|r| r.t).collect::<Vec<_>>(),
        "umax": series.records.iter().map(|r| r.umax).collect::<Vec<_>>(),
    });
    report.write(out_dir)?;
    Ok(RunArtifacts { series, report })
}

/// Appends the run-level invariant checks for `series` to `report`.
pub fn check_series(
    cfg: &ExperimentConfig,
    series: &DiagnosticsSeries,
    report: &mut VerificationReport,
) {
    let recs = &series.records;
    let m = cfg.u0.total_mass();

    // |∫u − m| ≤ MASS_REL_TOL·m at every probe.
    let (mut worst, mut at) = (f64::NEG_INFINITY, 0.0);
    for r in recs {
        let dev = (r.mass - m).abs() / m;
        if dev > worst {
            worst = dev;
            at = r.t;
        }
    }
    report.push(CheckResult::new(
        "mass conservation |∫u − m| ≤ 1e-10·m",
        worst <= MASS_REL_TOL,
        worst - MASS_REL_TOL,
        format!("t = {at}"),
    ));

    // ‖v(t)‖_∞ nonincreasing probe to probe, up to VMAX_SLACK.
    let (mut worst, mut at) = (f64::NEG_INFINITY, 0.0);
    for w in recs.windows(2) {
        let inc = w[1].vmax - w[0].vmax;
        if inc > worst {
            worst = inc;
            at = w[1].t;
        }
    }
    report.push(CheckResult::new(
        "‖v‖∞ nonincreasing (slack 1e-12)",
        recs.len() < 2 || worst <= VMAX_SLACK,
        if recs.len() < 2 {
            f64::NEG_INFINITY
        } else {
            worst - VMAX_SLACK
        },
        format!("t = {at}"),
    ));

    // Cumulative columns (TX and every S) nondecreasing exactly: they are
    // built as plain running sums of nonnegative increments.
    let (mut worst, mut at) = (f64::NEG_INFINITY, String::new());
    for w in recs.windows(2) {
        let d_tx = w[1].tx_cum - w[0].tx_cum;
        if -d_tx > worst {
            worst = -d_tx;
            at = format!("TX at t = {}", w[1].t);
        }
        for (pi, (a, b)) in w[0].pairs.iter().zip(&w[1].pairs).enumerate() {
            let d_s = b.s_cum - a.s_cum;
            if -d_s > worst {
                worst = -d_s;
                at = format!("S (pair {pi}) at t = {}", w[1].t);
            }
        }
    }
    report.push(CheckResult::new(
        "cumulative columns nondecreasing",
        recs.len() < 2 || worst <= 0.0,
        if recs.len() < 2 {
            f64::NEG_INFINITY
        } else {
            worst
        },
        at,
    ));

    // Finiteness and sign of every column.
    let mut ok = true;
    let mut at = String::from("—");
    'outer: for r in recs {
        let signed = [r.mass, r.vmax, r.umax, r.tx_cum];
        for x in signed {
            if !x.is_finite() || x < 0.0 {
                ok = false;
                at = format!("t = {}", r.t);
                break 'outer;
            }
        }
        for ps in &r.pairs {
            for x in [ps.energy, ps.d1, ps.d2, ps.w, ps.s_cum] {
                if !x.is_finite() || x < 0.0 {
                    ok = false;
                    at = format!("t = {}", r.t);
                    break 'outer;
                }
            }
        }
        for x in r.pairings.iter().chain(&r.vdists) {
            if !x.is_finite() {
                ok = false;
                at = format!("t = {}", r.t);
                break 'outer;
            }
        }
    }
    report.push(CheckResult::new(
        "all diagnostics finite, sign-definite columns ≥ 0",
        ok,
        if ok { f64::NEG_INFINITY } else { f64::INFINITY },
        at,
    ));

    // E_p(t_{k+1}) ≤ E_p(t_k)·(1 + slack) on probe pairs past the
    // regularization transient.
    let t_min = ENERGY_T_MIN_FRAC * cfg.sim.t_final;
    let (mut worst, mut at) = (f64::NEG_INFINITY, String::from("—"));
    for w in recs.windows(2) {
        if w[0].t < t_min {
            continue;
        }
        for (pi, (a, b)) in w[0].pairs.iter().zip(&w[1].pairs).enumerate() {
            let rel = if a.energy > 0.0 {
                b.energy / a.energy - 1.0
            } else {
                0.0
            };
            if rel > worst {
                worst = rel;
                at = format!("pair {pi} at t = {}", w[1].t);
            }
        }
    }
    let vacuous = worst == f64::NEG_INFINITY;
    report.push(CheckResult::new(
        "energy E_p nonincreasing (relative slack 1e-6, past transient)",
        vacuous || worst <= ENERGY_REL_SLACK,
        if vacuous {
            f64::NEG_INFINITY
        } else {
            worst - ENERGY_REL_SLACK
        },
        at,
    ));
}
