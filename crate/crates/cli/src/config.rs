//! Configuration: TOML sections `[sim] [init] [probes] [functionals] [sweep]
//! [output] [verify] [refine]`, resolved against defaults and validated
//! against the standing hypotheses of the estimates.
//!
//! Violations of waivable hypotheses (smallness of ‖v₀‖_∞, admissible
//! (p, λ) ranges, v₀ ≢ 0) are collected and either rejected wholesale or,
//! under `--allow-outside-hypotheses`, accepted with the run labeled
//! exploratory. Structural problems (bad grid, malformed probes, ε outside
//! (0,1)) are never waivable.

use std::path::{Path, PathBuf};

use consumax_core::estimate_verifier::{select_delta, smallness_threshold};
use consumax_core::functionals::{PairSpec, PhiParams, SeriesSpec, TestFunction};
use consumax_core::grid_domain::{Field, GridSpec, MeasureSpec};
use consumax_core::stepper::{DtPolicy, ProbeConfig, SimParams};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Fallback δ for exploratory runs where no admissible δ exists (smallness
/// violated or v₀ ≡ 0); it only scales diagnostic prefactors there.
pub const EXPLORATORY_DELTA: f64 = 0.5;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    init: RawInit,
    #[serde(default)]
    probes: RawProbes,
    #[serde(default)]
    functionals: RawFunctionals,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    verify: RawVerify,
    #[serde(default)]
    refine: RawRefine,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    lx: Option<f64>,
    ly: Option<f64>,
    nx: Option<usize>,
    ny: Option<usize>,
    chi: Option<f64>,
    n: Option<u32>,
    t_final: Option<f64>,
    eps: Option<f64>,
    dt_policy: Option<String>,
    sigma: Option<f64>,
    dt_fixed: Option<f64>,
    dt_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    atoms: Option<Vec<[f64; 3]>>,
    density_const: Option<f64>,
    v0: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbes {
    times: Option<Vec<f64>>,
    geometric: Option<RawGeometric>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometric {
    t_min: Option<f64>,
    t_max: Option<f64>,
    count: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctionals {
    pairs: Option<Vec<[f64; 2]>>,
    test_functions: Option<Vec<[u32; 2]>>,
    vdist_ps: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    eps_list: Option<Vec<f64>>,
    t_cauchy: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    n: Option<u32>,
    chi: Option<f64>,
    vmax: Option<f64>,
    p: Option<f64>,
    s_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRefine {
    levels: Option<u32>,
}

/// Inputs of the closed-form certification subcommand (dimension and χ may
/// differ from the simulation's, since the scalar estimates hold for all n).
#[derive(Debug, Clone, Copy)]
pub struct VerifyParams {
    pub n: u32,
    pub chi: f64,
    pub vmax: f64,
    /// Energy exponent; defaults to the endpoint n/2 + δ when absent.
    pub p: Option<f64>,
    pub s_points: usize,
}

/// Fully resolved and validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub sim: SimParams,
    pub u0: MeasureSpec,
    pub v0: Field,
    pub v0_tag: String,
    pub probe_times: Vec<f64>,
    /// Raw (p, λ) pairs for the diagnostics series.
    pub pairs: Vec<(f64, f64)>,
    pub test_functions: Vec<(u32, u32)>,
    pub vdist_ps: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub t_cauchy: f64,
    pub out_dir: PathBuf,
    pub verify: VerifyParams,
    pub refine_levels: u32,
    /// Largest admissible δ for (n, χ, ‖v₀‖_∞); None when the smallness
    /// hypothesis fails (then the run is necessarily exploratory).
    pub delta: Option<f64>,
    /// True iff a waivable hypothesis was violated and explicitly waived.
    pub exploratory: bool,
}

impl ExperimentConfig {
    /// δ used for diagnostic prefactors: the admissible one, or the nominal
    /// exploratory fallback.
    pub fn delta_used(&self) -> f64 {
        self.delta.unwrap_or(EXPLORATORY_DELTA)
    }

    /// ‖v₀‖_∞ of the configured (pre-smoothing) chemical field.
    pub fn vmax(&self) -> f64 {
        self.v0.max()
    }

    pub fn series_spec(&self) -> Result<SeriesSpec> {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for &(p, lambda) in &self.pairs {
            let phi = PhiParams::for_system(p, self.sim.chi, self.vmax(), self.delta_used())?;
            pairs.push(PairSpec { phi, lambda });
        }
        let test_functions = self
            .test_functions
            .iter()
            .map(|&(k, l)| TestFunction::cosine(k, l, self.sim.grid.lx, self.sim.grid.ly))
            .collect();
        Ok(SeriesSpec {
            n: self.sim.n,
            pairs,
            test_functions,
            vdist_ps: self.vdist_ps.clone(),
        })
    }

    pub fn probe_config(&self) -> Result<ProbeConfig> {
        Ok(ProbeConfig {
            times: self.probe_times.clone(),
            series: self.series_spec()?,
        })
    }
}

fn structural(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

/// Builds the v₀ field from its tag: `zero`, `const:C`, `half_cos_x:A`
/// (the profile A·(1+cos(πx/Lx))/2), or `csv:PATH` (an ny×nx matrix of
/// comma-separated values, row j = cells at y_j). Crate-visible so the
/// refinement study can re-evaluate analytic tags on finer grids.
pub(crate) fn build_v0(tag: &str, grid: GridSpec, config_dir: &Path) -> Result<Field> {
    if tag == "zero" {
        return Ok(Field::zeros(grid));
    }
    if let Some(c) = tag.strip_prefix("const:") {
        let c: f64 = c
            .parse()
            .map_err(|_| structural(format!("invalid constant in v0 tag '{tag}'")))?;
        if !(c >= 0.0 && c.is_finite()) {
            return Err(structural(format!(
                "v0 constant must be ≥ 0 and finite, got {c}"
            )));
        }
        return Ok(Field::constant(grid, c));
    }
    if let Some(a) = tag.strip_prefix("half_cos_x:") {
        let a: f64 = a
            .parse()
            .map_err(|_| structural(format!("invalid amplitude in v0 tag '{tag}'")))?;
        if !(a >= 0.0 && a.is_finite()) {
            return Err(structural(format!(
                "v0 amplitude must be ≥ 0 and finite, got {a}"
            )));
        }
        let lx = grid.lx;
        return Ok(Field::from_fn(grid, |x, _| {
            a * (1.0 + (std::f64::consts::PI * x / lx).cos()) / 2.0
        }));
    }
    if let Some(path) = tag.strip_prefix("csv:") {
        let full = config_dir.join(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| structural(format!("cannot read v0 grid file {}: {e}", full.display())))?;
        let mut values = Vec::with_capacity(grid.num_cells());
        for (j, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| structural(format!("bad number in v0 grid file, row {j}")))?;
            if row.len() != grid.nx {
                return Err(structural(format!(
                    "v0 grid file row {j} has {} values, expected nx = {}",
                    row.len(),
                    grid.nx
                )));
            }
            values.extend(row);
        }
        if values.len() != grid.num_cells() {
            return Err(structural(format!(
                "v0 grid file has {} values, expected nx·ny = {}",
                values.len(),
                grid.num_cells()
            )));
        }
        let mut f = Field::zeros(grid);
        f.values = values;
        return Ok(f);
    }
    Err(structural(format!(
        "unknown v0 tag '{tag}' (expected zero | const:C | half_cos_x:A | csv:PATH)"
    )))
}

fn geometric_ladder(t_min: f64, t_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && count >= 2) {
        return Err(structural(format!(
            "geometric probe ladder needs 0 < t_min < t_max and count ≥ 2, got ({t_min}, {t_max}, {count})"
        )));
    }
    let ratio = (t_max / t_min).powf(1.0 / (count - 1) as f64);
    let mut times: Vec<f64> = (0..count).map(|j| t_min * ratio.powi(j as i32)).collect();
    // Land the endpoints exactly despite powf rounding.
    times[0] = t_min;
    *times.last_mut().unwrap() = t_max;
    Ok(times)
}

/// Parses and validates a configuration text. `config_dir` anchors relative
/// paths inside the config (e.g. `csv:` initial data).
pub fn parse_config(
    text: &str,
    config_dir: &Path,
    allow_outside: bool,
) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;

    // --- [sim]: structure first ---
    let lx = raw.sim.lx.unwrap_or(1.0);
    let ly = raw.sim.ly.unwrap_or(1.0);
    let nx = raw.sim.nx.unwrap_or(64);
    let ny = raw.sim.ny.unwrap_or(64);
    let grid = GridSpec::new(lx, ly, nx, ny).map_err(|e| structural(e.to_string()))?;
    let chi = raw.sim.chi.unwrap_or(1.0);
    let n = raw.sim.n.unwrap_or(2);
    let t_final = raw.sim.t_final.unwrap_or(1.0);
    let eps = raw.sim.eps.unwrap_or(1e-2);
    let dt_policy = match raw.sim.dt_policy.as_deref() {
        None | Some("adaptive") => DtPolicy::Adaptive {
            sigma: raw.sim.sigma.unwrap_or(0.9),
        },
        Some("fixed") => DtPolicy::Fixed(
            raw.sim
                .dt_fixed
                .ok_or_else(|| structural("dt_policy = \"fixed\" requires dt_fixed"))?,
        ),
        Some(other) => {
            return Err(structural(format!(
                "unknown dt_policy '{other}' (expected adaptive | fixed)"
            )))
        }
    };
    let sim = SimParams {
        chi,
        n,
        grid,
        dt_policy,
        t_final,
        eps,
        dt_max: raw.sim.dt_max,
    };
    sim.validate().map_err(|e| structural(e.to_string()))?;

    // --- [init] ---
    let atoms = raw.init.atoms.unwrap_or_else(|| vec![[0.3, 0.6, 1.0]]);
    for a in &atoms {
        if !(a[0] > 0.0 && a[0] < lx && a[1] > 0.0 && a[1] < ly) {
            return Err(structural(format!(
                "atom at ({}, {}) must lie inside the open domain (0,{lx})×(0,{ly})",
                a[0], a[1]
            )));
        }
    }
    let density = match raw.init.density_const {
        None => None,
        Some(c) => {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(structural(format!("density_const must be ≥ 0, got {c}")));
            }
            Some(Field::constant(grid, c))
        }
    };
    let u0 = MeasureSpec::new(atoms.iter().map(|a| (a[0], a[1], a[2])).collect(), density)
        .map_err(|e| structural(e.to_string()))?;
    let v0_tag = raw.init.v0.unwrap_or_else(|| "const:0.3".to_string());
    let v0 = build_v0(&v0_tag, grid, config_dir)?;
    if v0.values.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(structural("v0 must be nonnegative and finite everywhere"));
    }

    // --- [probes] ---
    let probe_times = match (raw.probes.times, raw.probes.geometric) {
        (Some(_), Some(_)) => {
            return Err(structural(
                "give either probes.times or probes.geometric, not both",
            ))
        }
        (Some(times), None) => times,
        (None, geo) => {
            let (t_min, t_max, count) = match geo {
                Some(g) => (
                    g.t_min.unwrap_or(1e-4 * t_final),
                    g.t_max.unwrap_or(t_final),
                    g.count.unwrap_or(9),
                ),
                None => (1e-4 * t_final, t_final, 9),
            };
            if t_final == 0.0 {
                Vec::new()
            } else {
                geometric_ladder(t_min, t_max, count)?
            }
        }
    };
    let mut prev = 0.0;
    for &t in &probe_times {
        if !(t > prev && t.is_finite()) {
            return Err(structural(format!(
                "probe times must be finite, strictly increasing and positive; got {t} after {prev}"
            )));
        }
        if t > t_final {
            return Err(structural(format!(
                "probe time {t} exceeds the final time T = {t_final}"
            )));
        }
        prev = t;
    }

    // --- waivable hypotheses ---
    let mut violations: Vec<String> = Vec::new();
    let vmax = v0.max();
    let threshold = smallness_threshold(n, chi).map_err(|e| structural(e.to_string()))?;
    let delta = if vmax == 0.0 {
        violations.push(
            "v0 vanishes identically, outside the standing hypothesis v0 ≥ 0, v0 ≢ 0".to_string(),
        );
        None
    } else if vmax >= threshold {
        violations.push(format!(
            "‖v0‖∞ = {vmax} violates the smallness hypothesis 0 < ‖v0‖∞ < 2/(3nχ) = {threshold}"
        ));
        None
    } else {
        Some(select_delta(n, chi, vmax).map_err(|e| structural(e.to_string()))?)
    };

    // --- [functionals] ---
    let delta_used = delta.unwrap_or(EXPLORATORY_DELTA);
    let pairs: Vec<(f64, f64)> = match raw.functionals.pairs {
        Some(list) => list.iter().map(|a| (a[0], a[1])).collect(),
        None => {
            // Default pair p = 1 + δ/2, λ = n(p−1)/2 + 0.1: p sits safely
            // inside (1, n/2 + δ] and λ just above its admissibility line.
            let p = 1.0 + delta_used / 2.0;
            vec![(p, n as f64 * (p - 1.0) / 2.0 + 0.1)]
        }
    };
    for &(p, lambda) in &pairs {
        if !(p > 1.0 && p.is_finite()) {
            return Err(structural(format!(
                "energy exponent must satisfy p > 1, got {p}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(structural(format!(
                "time weight exponent must be positive and finite, got {lambda}"
            )));
        }
        if let Some(d) = delta {
            let p_hi = n as f64 / 2.0 + d;
            if p > p_hi {
                violations.push(format!(
                    "energy exponent p = {p} lies outside the admissible range (1, n/2 + δ] = (1, {p_hi}]"
                ));
            }
        }
        let lambda_min = n as f64 * (p - 1.0) / 2.0;
        if lambda <= lambda_min {
            violations.push(format!(
                "time weight exponent lambda = {lambda} must exceed n(p-1)/2 = {lambda_min}"
            ));
        }
    }
    let test_functions: Vec<(u32, u32)> = raw
        .functionals
        .test_functions
        .map(|list| list.iter().map(|a| (a[0], a[1])).collect())
        .unwrap_or_else(|| vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
    let vdist_ps = raw.functionals.vdist_ps.unwrap_or_else(|| vec![1.0]);
    for &p in &vdist_ps {
        // Negated form so NaN fails the guard too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(p >= 1.0) {
            return Err(structural(format!(
                "vdist exponents require p ≥ 1, got {p}"
            )));
        }
    }

    // --- [sweep] ---
    let eps_list = raw
        .sweep
        .eps_list
        .unwrap_or_else(|| vec![1e-1, 3e-2, 1e-2, 3e-3]);
    let mut prev = f64::INFINITY;
    for &e in &eps_list {
        if !(e > 0.0 && e < 1.0) {
            return Err(structural(format!(
                "sweep eps values must lie in (0,1), got {e}"
            )));
        }
        if e >= prev {
            return Err(structural("sweep eps_list must be strictly decreasing"));
        }
        prev = e;
    }
    let t_cauchy = raw.sweep.t_cauchy.unwrap_or(0.5 * t_final);
    if !(t_cauchy > 0.0 && t_cauchy <= t_final) && t_final > 0.0 {
        return Err(structural(format!(
            "t_cauchy = {t_cauchy} must lie in (0, T] = (0, {t_final}]"
        )));
    }

    // --- [verify] / [refine] / [output] ---
    let verify = VerifyParams {
        n: raw.verify.n.unwrap_or(n),
        chi: raw.verify.chi.unwrap_or(chi),
        vmax: raw
            .verify
            .vmax
            .unwrap_or(if vmax > 0.0 { vmax } else { 0.9 * threshold }),
        p: raw.verify.p,
        s_points: raw.verify.s_points.unwrap_or(10_000),
    };
    let refine_levels = raw.refine.levels.unwrap_or(3);
    if refine_levels < 2 {
        return Err(structural(format!(
            "refinement needs at least 2 levels, got {refine_levels}"
        )));
    }
    let out_dir = PathBuf::from(raw.output.dir.unwrap_or_else(|| "out".to_string()));

    if !violations.is_empty() && !allow_outside {
        return Err(CliError::Config(violations));
    }
    Ok(ExperimentConfig {
        sim,
        u0,
        v0,
        v0_tag,
        probe_times,
        pairs,
        test_functions,
        vdist_ps,
        eps_list,
        t_cauchy,
        out_dir,
        verify,
        refine_levels,
        delta,
        exploratory: !violations.is_empty(),
    })
}

/// Reads and validates the configuration at `path`.
pub fn load_config(path: &Path, allow_outside: bool) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, dir, allow_outside)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_ladder_hits_endpoints_exactly() {
        let times = geometric_ladder(1e-4, 1.0, 9).unwrap();
        assert_eq!(times.len(), 9);
        assert_eq!(times[0], 1e-4);
        assert_eq!(times[8], 1.0);
        for w in times.windows(2) {
            assert!(w[1] > w[0]);
            // Ratio ≈ 10^{1/2} throughout.
            let r = w[1] / w[0];
            assert!((r - 10f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_config_resolves_to_reference_defaults() {
        let cfg = parse_config("", Path::new("."), false).unwrap();
        assert_eq!(cfg.sim.grid.nx, 64);
        assert_eq!(cfg.sim.grid.ny, 64);
        assert_eq!(cfg.sim.t_final, 1.0);
        assert_eq!(cfg.sim.eps, 1e-2);
        assert!(matches!(cfg.sim.dt_policy, DtPolicy::Adaptive { sigma } if sigma == 0.9));
        assert_eq!(cfg.v0_tag, "const:0.3");
        assert!((cfg.vmax() - 0.3).abs() < 1e-15);
        assert!(cfg.delta.is_some());
        assert!(!cfg.exploratory);
        assert_eq!(cfg.probe_times.len(), 9);
        assert_eq!(cfg.pairs.len(), 1);
        let (p, lambda) = cfg.pairs[0];
        let d = cfg.delta.unwrap();
        assert!((p - (1.0 + d / 2.0)).abs() < 1e-15);
        assert!((lambda - (p - 1.0 + 0.1)).abs() < 1e-15);
    }
}
