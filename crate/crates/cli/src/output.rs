//! Artifact writers: `series.csv`, `fields_tNNN.csv` snapshots, structured
//! JSON reports. Every writer assembles the complete byte string first and
//! writes it in one call, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use consumax_core::functionals::DiagnosticsSeries;
use consumax_core::grid_domain::Field;
use serde::Serialize;

use crate::error::Result;

/// Fixed 17-significant-digit scientific notation used in every CSV value.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Shortest-round-trip decimal used inside column names (`E_p1.25`, `W_p1.25_l0.6`).
fn tag(x: f64) -> String {
    format!("{x}")
}

/// Header per the series contract: `t,mass,vmax`, then per (p, λ) pair the
/// five columns `E_p{P},D1_p{P},D2_p{P},W_p{P}_l{L},S_p{P}_l{L}`, then `TX`,
/// then one `pair_k{K}l{L}` per test function, then one `vdist_p{P}` per
/// configured exponent.
pub fn series_header(series: &DiagnosticsSeries) -> String {
    let mut h = String::from("t,mass,vmax");
    for pair in &series.spec.pairs {
        let p = tag(pair.phi.p);
        let l = tag(pair.lambda);
        let _ = write!(h, ",E_p{p},D1_p{p},D2_p{p},W_p{p}_l{l},S_p{p}_l{l}");
    }
    h.push_str(",TX");
    for tf in &series.spec.test_functions {
        let _ = write!(h, ",pair_k{}l{}", tf.k, tf.l);
    }
    for &p in &series.spec.vdist_ps {
        let _ = write!(h, ",vdist_p{}", tag(p));
    }
    h
}

pub fn series_csv(series: &DiagnosticsSeries) -> String {
    let mut out = series_header(series);
    out.push('\n');
    for r in &series.records {
        let _ = write!(out, "{},{},{}", num(r.t), num(r.mass), num(r.vmax));
        for ps in &r.pairs {
            let _ = write!(
                out,
                ",{},{},{},{},{}",
                num(ps.energy),
                num(ps.d1),
                num(ps.d2),
                num(ps.w),
                num(ps.s_cum)
            );
        }
        let _ = write!(out, ",{}", num(r.tx_cum));
        for g in &r.pairings {
            let _ = write!(out, ",{}", num(*g));
        }
        for d in &r.vdists {
            let _ = write!(out, ",{}", num(*d));
        }
        out.push('\n');
    }
    out
}

pub fn write_series(dir: &Path, series: &DiagnosticsSeries) -> Result<()> {
    std::fs::write(dir.join("series.csv"), series_csv(series))?;
    Ok(())
}

/// Snapshot of both fields at probe index `idx`: rows `x,y,u,v` per cell.
pub fn write_fields(dir: &Path, idx: usize, u: &Field, v: &Field) -> Result<()> {
    let g = u.grid;
    let mut out = String::from("x,y,u,v\n");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = j * g.nx + i;
            let _ = writeln!(
                out,
                "{},{},{},{}",
                num(g.x_center(i)),
                num(g.y_center(j)),
                num(u.values[c]),
                num(v.values[c])
            );
        }
    }
    std::fs::write(dir.join(format!("fields_t{idx:03}.csv")), out)?;
    Ok(())
}

/// One validated inequality or invariant: worst margin is signed so that
/// `margin ≤ 0` means satisfied (how far inside the bound the worst case
/// sat). `None` for purely boolean or vacuously satisfied checks, since JSON
/// cannot carry ±∞.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub worst_margin: Option<f64>,
    pub worst_at: String,
}

impl CheckResult {
    pub fn new(name: &str, pass: bool, worst_margin: f64, worst_at: String) -> Self {
        CheckResult {
            name: name.to_string(),
            pass,
            worst_margin: worst_margin.is_finite().then_some(worst_margin),
            worst_at,
        }
    }
}

/// Top-level structured report persisted as `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub command: String,
    pub exploratory: bool,
    /// Admissible δ when the smallness hypothesis holds.
    pub delta: Option<f64>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    /// Free-form numeric extras (probe tables, fitted exponents, sup tables).
    pub extra: serde_json::Value,
}

impl VerificationReport {
    pub fn new(command: &str, exploratory: bool, delta: Option<f64>) -> Self {
        VerificationReport {
            command: command.to_string(),
            exploratory,
            delta,
            checks: Vec::new(),
            pass: true,
            extra: serde_json::Value::Null,
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        std::fs::write(dir.join("report.json"), text)?;
        Ok(())
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
