//! Refinement study: reruns the experiment with (h, dt) halved per level and
//! tracks the discrete energy-inequality residual
//!
//!   r_k = (1/p)·ΔE/Δt + (2δ(p−1)/p²)·D̄1 + (δ/p)·D̄2   over [t_k, t_{k+1}],
//!
//! (D̄ = trapezoid average) which the continuum estimate makes ≤ 0. Any
//! positive residual must be a scheme artifact, so its count may not grow
//! under refinement and its size must decay at first order.

use std::path::Path;

use consumax_core::grid_domain::{Field, GridSpec, MeasureSpec};

use crate::commands::run;
use crate::config::{build_v0, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::{self, CheckResult, VerificationReport};

use super::ENERGY_T_MIN_FRAC;

/// A residual counts as a violation above this relative tolerance (scaled by
/// the magnitudes of the terms entering it): rounding noise on an interval
/// where everything has equilibrated must not read as a violation.
pub const RESIDUAL_REL_TOL: f64 = 1e-9;

/// Floor for relative residuals entering the decay-rate quotient, at the
/// level of accumulated rounding.
const RESIDUAL_REL_FLOOR: f64 = 1e-15;

/// Required empirical decay order of positive residuals (log₂ of the ratio
/// between consecutive levels); 0.8 tolerates prefactor wobble around the
/// scheme's first-order splitting.
pub const MIN_DECAY_RATE: f64 = 0.8;

#[derive(Debug, Clone)]
pub struct LevelStats {
    pub nx: usize,
    /// Worst signed relative residual over counted intervals (−∞ when no
    /// interval lies past the transient).
    pub worst_rel: f64,
    pub worst_at: f64,
    pub violations: usize,
    pub intervals: usize,
}

/// Numeric outcome of the refinement study, alongside the persisted report.
pub struct RefineSummary {
    pub report: VerificationReport,
    pub levels: Vec<LevelStats>,
}

/// Piecewise-constant prolongation of a cell-averaged field onto a grid
/// refined by an integer factor (exact for cell averages).
fn prolong(f: &Field, fine: GridSpec, factor: usize) -> Field {
    let coarse = f.grid;
    let mut out = Field::zeros(fine);
    for j in 0..fine.ny {
        for i in 0..fine.nx {
            out.values[j * fine.nx + i] = f.values[(j / factor) * coarse.nx + (i / factor)];
        }
    }
    out
}

fn level_config(cfg: &ExperimentConfig, level: u32) -> Result<ExperimentConfig> {
    let factor = 1usize << level;
    let base = cfg.sim.grid;
    let grid = GridSpec::new(base.lx, base.ly, base.nx * factor, base.ny * factor)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let base_cap = cfg.sim.dt_max.unwrap_or(cfg.sim.t_final / 100.0);
    let mut out = cfg.clone();
    out.sim.grid = grid;
    out.sim.dt_max = Some(base_cap / factor as f64);
    out.v0 = if cfg.v0_tag.starts_with("csv:") {
        prolong(&cfg.v0, grid, factor)
    } else {
        build_v0(&cfg.v0_tag, grid, Path::new("."))?
    };
    out.u0 = MeasureSpec::new(
        cfg.u0.atoms.clone(),
        cfg.u0.density.as_ref().map(|d| prolong(d, grid, factor)),
    )
    .map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(out)
}

fn level_stats(
    cfg: &ExperimentConfig,
    series: &consumax_core::functionals::DiagnosticsSeries,
) -> LevelStats {
    let pair = &series.spec.pairs[0];
    let p = pair.phi.p;
    let delta = cfg.delta_used();
    let c1 = 2.0 * delta * (p - 1.0) / (p * p);
    let c2 = delta / p;
    let t_min = ENERGY_T_MIN_FRAC * cfg.sim.t_final;
    let (mut worst_rel, mut worst_at) = (f64::NEG_INFINITY, 0.0);
    let mut violations = 0;
    let mut intervals = 0;
    for w in series.records.windows(2) {
        if w[0].t < t_min {
            continue;
        }
        let (a, b) = (&w[0].pairs[0], &w[1].pairs[0]);
        let dt = w[1].t - w[0].t;
        let de = (b.energy - a.energy) / (p * dt);
        let d1 = c1 * 0.5 * (a.d1 + b.d1);
        let d2 = c2 * 0.5 * (a.d2 + b.d2);
        let r = de + d1 + d2;
        let scale = (a.energy.abs() + b.energy.abs()) / (p * dt) + d1 + d2;
        let rel = if scale > 0.0 { r / scale } else { 0.0 };
        intervals += 1;
        if rel > RESIDUAL_REL_TOL {
            violations += 1;
        }
        if rel > worst_rel {
            worst_rel = rel;
            worst_at = w[1].t;
        }
    }
    LevelStats {
        nx: cfg.sim.grid.nx,
        worst_rel,
        worst_at,
        violations,
        intervals,
    }
}

pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<bool> {
    Ok(execute_summary(cfg, out_dir)?.report.pass)
}

pub fn execute_summary(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RefineSummary> {
    if cfg.pairs.is_empty() {
        return Err(CliError::Parse(String::from(
            "the refinement study needs at least one (p, λ) pair",
        )));
    }
    output::ensure_dir(out_dir)?;
    let mut stats = Vec::new();
    let mut runs_ok = true;
    for level in 0..cfg.refine_levels {
        let lcfg = level_config(cfg, level)?;
        let dir = out_dir.join(format!("level_{level}"));
        let arts = run::execute(&lcfg, &dir, false)?;
        runs_ok &= arts.report.pass;
        stats.push(level_stats(&lcfg, &arts.series));
    }

    let mut report = VerificationReport::new("refine", cfg.exploratory, cfg.delta);
    report.push(CheckResult::new(
        "run invariants hold at every level",
        runs_ok,
        if runs_ok {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        },
        String::from("per-level report.json"),
    ));

    // Violation counts may not grow under refinement.
    let (mut worst_growth, mut at) = (i64::MIN, String::from("—"));
    for (i, w) in stats.windows(2).enumerate() {
        let growth = w[1].violations as i64 - w[0].violations as i64;
        if growth > worst_growth {
            worst_growth = growth;
            at = format!("level {i} → {}", i + 1);
        }
    }
    let vacuous = stats.len() < 2;
    report.push(CheckResult::new(
        "energy-inequality violation count nonincreasing under refinement",
        vacuous || worst_growth <= 0,
        if vacuous {
            f64::NEG_INFINITY
        } else {
            worst_growth as f64
        },
        at,
    ));

    // Positive residuals must decay at ≥ MIN_DECAY_RATE per halving; levels
    // whose worst residual is already within tolerance need no decay.
    let mut worst_rate = f64::INFINITY;
    let mut rate_at = String::from("all residuals within tolerance");
    for (i, w) in stats.windows(2).enumerate() {
        if w[0].worst_rel <= RESIDUAL_REL_TOL {
            continue;
        }
        let a = w[0].worst_rel.max(RESIDUAL_REL_FLOOR);
        let b = w[1].worst_rel.max(RESIDUAL_REL_FLOOR);
        let rate = (a / b).log2();
        if rate < worst_rate {
            worst_rate = rate;
            rate_at = format!("level {i} → {}", i + 1);
        }
    }
    let decay_vacuous = worst_rate == f64::INFINITY;
    report.push(CheckResult::new(
        "positive residuals decay at rate ≥ 0.8 per level (or stay within tolerance)",
        decay_vacuous || worst_rate >= MIN_DECAY_RATE,
        if decay_vacuous {
            f64::NEG_INFINITY
        } else {
            MIN_DECAY_RATE - worst_rate
        },
        rate_at,
    ));

    report.extra = serde_json::json!({
        "levels": stats
            .iter()
            .map(|s| {
                serde_json::json!({
                    "nx": s.nx,
                    "worst_relative_residual": if s.worst_rel == f64::NEG_INFINITY { None } else { Some(s.worst_rel) },
                    "worst_at_t": s.worst_at,
                    "violations": s.violations,
                    "intervals": s.intervals,
                })
            })
            .collect::<Vec<_>>(),
    });
    report.write(out_dir)?;
    Ok(RefineSummary {
        report,
        levels: stats,
    })
}
